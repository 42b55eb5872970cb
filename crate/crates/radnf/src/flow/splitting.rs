//! Spectral splitting of a linear field relative to its null subspace L:
//! E⁻ collects L together with the directions contracting forward in time,
//! E⁺ collects L with the expanding ones.

use nalgebra::{DMatrix, DVector};

use super::FlowError;

#[derive(Debug, Clone)]
pub struct Splitting {
    /// Basis of E⁻: the L coordinate directions followed by the contracting
    /// directions of the complement block.
    pub e_minus: Vec<DVector<f64>>,
    /// Basis of E⁺: L followed by the expanding directions.
    pub e_plus: Vec<DVector<f64>>,
    pub l_dim: usize,
    /// ‖M·M⁻¹ − I‖_max for M the combined (deduplicated) basis matrix.
    pub direct_sum_residual: f64,
}

/// Matrix sign function by scaled Newton iteration; requires no eigenvalue
/// on the imaginary axis.
fn matrix_sign(a: &DMatrix<f64>) -> Result<DMatrix<f64>, FlowError> {
    let n = a.nrows();
    let mut s = a.clone();
    for iter in 0..120 {
        if iter < 12 {
            let d = s.determinant().abs();
            if d.is_finite() && d > 0.0 {
                s *= d.powf(-1.0 / n as f64);
            }
        }
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| FlowError::Internal("sign iteration hit a singular iterate".into()))?;
        let next = (&s + &s_inv) * 0.5;
        let delta = (&next - &s).norm();
        s = next;
        if delta < 1e-13 * (1.0 + s.norm()) {
            return Ok(s);
        }
    }
    Err(FlowError::Internal("sign iteration did not converge".into()))
}

/// Range basis of a (possibly oblique) projector via SVD: the left singular
/// vectors with singular value above 1/2.
fn projector_range(p: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let svd = p.clone().svd(true, false);
    let u = svd.u.as_ref().expect("u requested");
    let mut cols = Vec::new();
    for (i, sigma) in svd.singular_values.iter().enumerate() {
        if *sigma > 0.5 {
            cols.push(u.column(i).into_owned());
        }
    }
    cols
}

pub fn stable_splitting(a: &DMatrix<f64>, l_coords: &[usize]) -> Result<Splitting, FlowError> {
    let k = a.nrows();
    if a.ncols() != k {
        return Err(FlowError::InvalidSpec("matrix must be square".into()));
    }
    let mut in_l = vec![false; k];
    for &l in l_coords {
        if l >= k {
            return Err(FlowError::InvalidSpec(format!("L index {l} out of range")));
        }
        in_l[l] = true;
        for row in 0..k {
            if a[(row, l)] != 0.0 {
                return Err(FlowError::InvalidSpec(format!(
                    "column {l} is not annihilated, so L is not in the null space"
                )));
            }
        }
    }
    let complement: Vec<usize> = (0..k).filter(|i| !in_l[*i]).collect();
    let c = complement.len();

    let mut e_minus: Vec<DVector<f64>> = Vec::new();
    let mut e_plus: Vec<DVector<f64>> = Vec::new();
    for &l in l_coords {
        let mut v = DVector::zeros(k);
        v[l] = 1.0;
        e_minus.push(v.clone());
        e_plus.push(v);
    }

    let mut stable = Vec::new();
    let mut unstable = Vec::new();
    if c > 0 {
        let mut a_cc = DMatrix::zeros(c, c);
        for (i, &gi) in complement.iter().enumerate() {
            for (j, &gj) in complement.iter().enumerate() {
                a_cc[(i, j)] = a[(gi, gj)];
            }
        }
        for ev in a_cc.complex_eigenvalues().iter() {
            if ev.re.abs() < 1e-9 {
                return Err(FlowError::NonHyperbolic { re: ev.re });
            }
        }
        let sign = matrix_sign(&a_cc)?;
        let id = DMatrix::<f64>::identity(c, c);
        let p_minus = (&id - &sign) * 0.5;
        let p_plus = (&id + &sign) * 0.5;
        stable = projector_range(&p_minus);
        unstable = projector_range(&p_plus);
        if stable.len() + unstable.len() != c {
            return Err(FlowError::Internal(format!(
                "projector ranks {} + {} do not fill the complement dimension {c}",
                stable.len(),
                unstable.len()
            )));
        }
    }

    let embed = |v: &DVector<f64>| {
        let mut w = DVector::zeros(k);
        for (i, &g) in complement.iter().enumerate() {
            w[g] = v[i];
        }
        w
    };
    for v in &stable {
        e_minus.push(embed(v));
    }
    for v in &unstable {
        e_plus.push(embed(v));
    }

    // deduplicated direct sum L ⊕ V⁻ ⊕ V⁺ must fill ℝ^k
    let mut m = DMatrix::zeros(k, k);
    let mut col = 0;
    for v in e_minus.iter().chain(e_plus.iter().skip(l_coords.len())) {
        m.set_column(col, v);
        col += 1;
    }
    if col != k {
        return Err(FlowError::Internal(format!("combined basis has {col} columns, expected {k}")));
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| FlowError::Internal("combined basis is singular".into()))?;
    let residual =
        (&m * &inv - DMatrix::<f64>::identity(k, k)).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    if residual >= 1e-10 {
        return Err(FlowError::Internal(format!("direct-sum residual {residual:.3e} too large")));
    }

    Ok(Splitting { e_minus, e_plus, l_dim: l_coords.len(), direct_sum_residual: residual })
}
