//! Adaptive Dormand–Prince 5(4) integration, plus an exact matrix-exponential
//! path for linear specs.

use nalgebra::{DMatrix, DVector};

use super::spec::{FlowParams, FlowSpec};
use super::FlowError;

/// One adaptive RK45 solve of y' = field(y) over [0, t_end], t_end ≥ 0.
pub(crate) fn dopri5<F>(
    field: F,
    y0: &DVector<f64>,
    t_end: f64,
    params: &FlowParams,
) -> Result<DVector<f64>, FlowError>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] =
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    if t_end == 0.0 {
        return Ok(y0.clone());
    }
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut k1 = field(&y);
    let mut h = (0.01 * params.rel_tol.powf(0.2)).min(t_end).max(1e-8);
    let mut ks: Vec<DVector<f64>> = vec![DVector::zeros(y.len()); 7];
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > params.max_steps {
            return Err(FlowError::StepFailure { t, h });
        }
        if h < 1e-14 * t_end.max(1.0) {
            return Err(FlowError::StepFailure { t, h });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        ks[0] = k1.clone();
        for stage in 0..6 {
            let mut arg = y.clone();
            for (j, kj) in ks.iter().enumerate().take(stage + 1) {
                let c = A[stage][j];
                if c != 0.0 {
                    arg.axpy(h * c, kj, 1.0);
                }
            }
            ks[stage + 1] = field(&arg);
        }
        let mut y5 = y.clone();
        let mut err = DVector::zeros(y.len());
        for (i, ki) in ks.iter().enumerate() {
            if B5[i] != 0.0 {
                y5.axpy(h * B5[i], ki, 1.0);
            }
            let d = B5[i] - B4[i];
            if d != 0.0 {
                err.axpy(h * d, ki, 1.0);
            }
        }
        let mut ratio_sq = 0.0;
        for i in 0..y.len() {
            let scale = params.abs_tol + params.rel_tol * y[i].abs().max(y5[i].abs());
            let r = err[i] / scale;
            ratio_sq += r * r;
        }
        let err_norm = (ratio_sq / y.len() as f64).sqrt();
        if err_norm <= 1.0 {
            t += h;
            y = y5;
            // FSAL: stage 7 of an accepted step is the next step's k1
            k1 = ks[6].clone();
        }
        let factor = if err_norm == 0.0 { 5.0 } else { 0.9 * err_norm.powf(-0.2) };
        h *= factor.clamp(0.2, 5.0);
    }
    Ok(y)
}

/// exp(tA)·x by scaling and squaring with a Padé(6,6) core.
pub(crate) fn expm_times(a: &DMatrix<f64>, t: f64, x: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let m = a * t;
    let norm = m.iter().map(|v| v.abs()).fold(0.0f64, f64::max) * n as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let ms = &m / 2f64.powi(squarings as i32);

    // Padé(6,6): numerator/denominator coefficients of exp at 0
    const C: [f64; 7] =
        [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
    let id = DMatrix::<f64>::identity(n, n);
    let mut even = id.clone() * C[0];
    let mut odd = id.clone() * C[1];
    let m2 = &ms * &ms;
    let mut pw = id.clone();
    for j in 1..=3usize {
        pw = &pw * &m2;
        even += &pw * C[2 * j];
        if 2 * j + 1 < C.len() {
            odd += &pw * C[2 * j + 1];
        }
    }
    let odd = &ms * odd;
    let num = &even + &odd;
    let den = &even - &odd;
    let mut e = den.lu().solve(&num).expect("Padé denominator is invertible after scaling");
    for _ in 0..squarings {
        e = &e * &e;
    }
    &e * x
}

/// U(t)x for the spec's field; negative t runs the reversed field. Linear
/// specs use the exact matrix exponential.
pub fn integrate_flow(
    spec: &FlowSpec,
    x: &DVector<f64>,
    t: f64,
    params: &FlowParams,
) -> Result<DVector<f64>, FlowError> {
    spec.validate()?;
    params.validate()?;
    if !t.is_finite() {
        return Err(FlowError::InvalidSpec("time must be finite".into()));
    }
    if spec.is_linear() {
        return Ok(expm_times(&spec.a, t, x));
    }
    if t >= 0.0 {
        dopri5(|y| spec.field(y), x, t, params)
    } else {
        dopri5(|y| -spec.field(y), x, -t, params)
    }
}

/// ‖U(s+t)x − U(s)U(t)x‖, the semigroup defect at one sample.
pub fn semigroup_defect(
    spec: &FlowSpec,
    x: &DVector<f64>,
    s: f64,
    t: f64,
    params: &FlowParams,
) -> Result<f64, FlowError> {
    let direct = integrate_flow(spec, x, s + t, params)?;
    let through = integrate_flow(spec, &integrate_flow(spec, x, t, params)?, s, params)?;
    Ok((direct - through).norm())
}
