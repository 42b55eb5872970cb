//! The conjugacy limit W₋(x) = lim_{T→∞} U(−T)U₀(T)x and the numerical
//! verification that it intertwines the flows: W₋∘U₀(t) = U(t)∘W₋, i.e.
//! infinitesimally DW₋·X₀ = X∘W₋.
//!
//! The backward leg runs against the contraction, which amplifies absolute
//! integration error by e^T; relative error is merely carried along. The
//! inner integration therefore runs under almost pure relative control, with
//! the relative tolerance slaved a few digits below the Cauchy threshold.

use nalgebra::DVector;

use super::integrate::{dopri5, expm_times};
use super::spec::{FlowParams, FlowSpec};
use super::FlowError;
use crate::exec;

#[derive(Debug, Clone)]
pub struct WminusResult {
    pub point: DVector<f64>,
    /// ‖stage(2T) − stage(T)‖ at the accepted horizon.
    pub cauchy_diff: f64,
    pub horizon: f64,
}

fn inner_params(params: &FlowParams) -> FlowParams {
    let mut p = params.clone();
    // Absolute error committed near the contracted endpoint returns amplified
    // by e^T, so the backward leg keeps only relative control (plus an
    // underflow guard); relative error rides the expansion at constant size.
    p.rel_tol = (params.abs_tol * 1e-4).max(1e-14);
    p.abs_tol = 1e-30;
    p
}

fn stage(
    spec: &FlowSpec,
    x: &DVector<f64>,
    t: f64,
    inner: &FlowParams,
) -> Result<DVector<f64>, FlowError> {
    let linear_end = expm_times(&spec.a, t, x);
    if spec.is_linear() {
        return Ok(expm_times(&spec.a, -t, &linear_end));
    }
    dopri5(|y| -spec.field(y), &linear_end, t, inner)
}

/// Horizon-doubling evaluation of W₋; Cauchy criterion at params.abs_tol.
pub fn wminus_map(
    spec: &FlowSpec,
    x: &DVector<f64>,
    params: &FlowParams,
) -> Result<WminusResult, FlowError> {
    spec.validate()?;
    params.validate()?;
    let inner = inner_params(params);
    let mut t = 1.0;
    let mut prev = stage(spec, x, t, &inner)?;
    loop {
        let t2 = 2.0 * t;
        if t2 > params.t_max {
            return Err(FlowError::NoConvergence { t_max: params.t_max });
        }
        let next = stage(spec, x, t2, &inner)?;
        let diff = (&next - &prev).norm();
        if diff < params.abs_tol {
            return Ok(WminusResult { point: next, cauchy_diff: diff, horizon: t2 });
        }
        prev = next;
        t = t2;
    }
}

/// Axis-aligned sampling box: a full product grid with `per_axis` points per
/// coordinate.
#[derive(Debug, Clone)]
pub struct SampleBox {
    pub center: DVector<f64>,
    pub half_width: f64,
    pub per_axis: usize,
}

impl SampleBox {
    pub fn points(&self) -> Vec<DVector<f64>> {
        let dim = self.center.len();
        let n = self.per_axis.max(1);
        let mut pts = vec![DVector::zeros(dim)];
        for axis in 0..dim {
            let mut next = Vec::with_capacity(pts.len() * n);
            for p in &pts {
                for i in 0..n {
                    let frac = if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 };
                    let mut q = p.clone();
                    q[axis] = self.center[axis] + frac * self.half_width;
                    next.push(q);
                }
            }
            pts = next;
        }
        pts
    }
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub samples: usize,
}

/// max over the box of ‖DW₋(x)·X₀(x) − X(W₋(x))‖: W₋ carries linear orbits
/// to perturbed orbits, so its derivative along the linear field must land
/// on the perturbed field at the image. The directional derivative is by
/// central differences of step fd_step; points where the linear field
/// vanishes are fixed by both flows and contribute zero exactly.
pub fn linearization_residual(
    spec: &FlowSpec,
    region: &SampleBox,
    params: &FlowParams,
) -> Result<ResidualReport, FlowError> {
    spec.validate()?;
    params.validate()?;
    let points = region.points();
    let results = exec::map_collect(&points, |x| -> Result<f64, FlowError> {
        let v = &spec.a * x;
        let speed = v.norm();
        if speed < 1e-14 {
            return Ok(0.0);
        }
        let dir = &v / speed;
        let h = params.fd_step;
        let w_plus = wminus_map(spec, &(x + &dir * h), params)?.point;
        let w_minus = wminus_map(spec, &(x - &dir * h), params)?.point;
        let w_here = wminus_map(spec, x, params)?.point;
        let dw_along_linear = (&w_plus - &w_minus) * (speed / (2.0 * h));
        let residual = (&dw_along_linear - &spec.field(&w_here)).norm();
        Ok(residual)
    });
    let mut max_residual = 0.0f64;
    for r in results {
        max_residual = max_residual.max(r?);
    }
    Ok(ResidualReport { max_residual, samples: points.len() })
}
