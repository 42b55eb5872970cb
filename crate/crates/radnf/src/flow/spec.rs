use nalgebra::{DMatrix, DVector};

use super::FlowError;

/// Smooth compactly supported cutoff: 1 at 0, vanishing outside radius r,
/// of the form exp(1 − 1/(1 − |x|²/r²)).
pub fn bump(norm_sq: f64, radius: f64) -> f64 {
    let u = norm_sq / (radius * radius);
    if u >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u)).exp()
    }
}

/// One monomial summand of the perturbation: coeff · x^exponents · χ ∂_{x_target}.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTerm {
    pub target: usize,
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

impl PerturbationTerm {
    fn eval_monomial(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.coeff;
        for (xi, e) in x.iter().zip(&self.exponents) {
            v *= xi.powi(*e as i32);
        }
        v
    }
}

/// A vector field A·x + perturbation, with the perturbation vanishing on the
/// coordinate subspace L to a declared order and cut off outside bump_radius.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub dim: usize,
    pub a: DMatrix<f64>,
    /// 0-based coordinate indices spanning L.
    pub l_coords: Vec<usize>,
    pub perturbation: Vec<PerturbationTerm>,
    pub vanish_order: u32,
    pub bump_radius: f64,
}

impl FlowSpec {
    pub fn linear(a: DMatrix<f64>, l_coords: Vec<usize>) -> Result<FlowSpec, FlowError> {
        let dim = a.nrows();
        let spec = FlowSpec {
            dim,
            a,
            l_coords,
            perturbation: Vec::new(),
            vanish_order: 0,
            bump_radius: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if self.a.nrows() != self.dim || self.a.ncols() != self.dim {
            return Err(FlowError::InvalidSpec(format!(
                "matrix is {}x{}, expected {}x{}",
                self.a.nrows(),
                self.a.ncols(),
                self.dim,
                self.dim
            )));
        }
        if !(self.bump_radius > 0.0) {
            return Err(FlowError::InvalidSpec("bump radius must be positive".into()));
        }
        let mut seen = vec![false; self.dim];
        for &l in &self.l_coords {
            if l >= self.dim {
                return Err(FlowError::InvalidSpec(format!("L index {l} out of range")));
            }
            if std::mem::replace(&mut seen[l], true) {
                return Err(FlowError::InvalidSpec(format!("L index {l} repeated")));
            }
            // the linear part must annihilate L
            for row in 0..self.dim {
                if self.a[(row, l)] != 0.0 {
                    return Err(FlowError::InvalidSpec(format!(
                        "column {l} of the matrix is not zero, so L is not in its null space"
                    )));
                }
            }
        }
        for term in &self.perturbation {
            if term.target >= self.dim {
                return Err(FlowError::InvalidSpec(format!(
                    "perturbation target {} out of range",
                    term.target
                )));
            }
            if term.exponents.len() != self.dim {
                return Err(FlowError::InvalidSpec(
                    "perturbation exponent list has wrong length".into(),
                ));
            }
            let transverse_degree: u32 = term
                .exponents
                .iter()
                .enumerate()
                .filter(|(i, _)| !self.l_coords.contains(i))
                .map(|(_, e)| *e)
                .sum();
            if transverse_degree < self.vanish_order {
                return Err(FlowError::InvalidSpec(format!(
                    "perturbation term vanishes to order {transverse_degree} off L, declared {}",
                    self.vanish_order
                )));
            }
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.perturbation.iter().all(|t| t.coeff == 0.0)
    }

    /// Full field A·x + χ(|x|²)·Σ terms.
    pub fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = &self.a * x;
        if !self.perturbation.is_empty() {
            let chi = bump(x.norm_squared(), self.bump_radius);
            if chi > 0.0 {
                for term in &self.perturbation {
                    v[term.target] += chi * term.eval_monomial(x);
                }
            }
        }
        v
    }

    /// Linear part only.
    pub fn linear_field(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    /// Same spec with the field negated (for reversed-direction limits).
    pub fn negated(&self) -> FlowSpec {
        let mut s = self.clone();
        s.a = -&self.a;
        for t in &mut s.perturbation {
            t.coeff = -t.coeff;
        }
        s
    }
}

/// Scalar polynomial with the same bump cutoff, used as transport data g.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCutoffPoly {
    pub terms: Vec<(f64, Vec<u32>)>,
    pub radius: f64,
}

impl ScalarCutoffPoly {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let chi = bump(x.norm_squared(), self.radius);
        if chi == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for (c, exps) in &self.terms {
            let mut v = *c;
            for (xi, e) in x.iter().zip(exps) {
                v *= xi.powi(*e as i32);
            }
            acc += v;
        }
        acc * chi
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == 0.0)
    }
}

/// Numerical control knobs; every tolerance is explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub t_max: f64,
    /// Central-difference step for Jacobian and directional derivatives.
    pub fd_step: f64,
    /// Stabilization tolerance for the limit-map probe.
    pub stab_tol: f64,
    pub max_steps: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            t_max: 200.0,
            fd_step: 1e-3,
            stab_tol: 1e-4,
            max_steps: 2_000_000,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.t_max > 0.0 && self.fd_step > 0.0) {
            return Err(FlowError::InvalidSpec(
                "tolerances, horizon, and fd step must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Same params with both integration tolerances scaled by `factor` and
    /// the differencing step by factor^(1/3) — the balanced scaling for
    /// central differences, whose truncation error goes like fd_step².
    pub fn tightened(&self, factor: f64) -> FlowParams {
        FlowParams {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            fd_step: self.fd_step * factor.cbrt(),
            ..self.clone()
        }
    }
}
