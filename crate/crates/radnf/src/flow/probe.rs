//! Smoothness probe for the limit map Π(x) = lim_{t→∞} U(t)x across the null
//! subspace L: divided-difference derivative estimates along a transverse
//! direction at three mesh refinements, reported as stabilized or not.

use nalgebra::DVector;

use super::integrate::integrate_flow;
use super::spec::{FlowParams, FlowSpec};
use super::FlowError;

/// Π(x) by horizon doubling, reusing each reached endpoint as the next start.
pub fn limit_point(
    spec: &FlowSpec,
    x: &DVector<f64>,
    params: &FlowParams,
) -> Result<DVector<f64>, FlowError> {
    spec.validate()?;
    params.validate()?;
    let mut horizon = 1.0;
    let mut current = integrate_flow(spec, x, horizon, params)?;
    loop {
        if 2.0 * horizon > params.t_max {
            return Err(FlowError::NoConvergence { t_max: params.t_max });
        }
        // U(2T)x = U(T) applied to the already-computed U(T)x
        let next = integrate_flow(spec, &current, horizon, params)?;
        let diff = (&next - &current).norm();
        horizon *= 2.0;
        current = next;
        if diff < params.abs_tol {
            return Ok(current);
        }
    }
}

/// A one-parameter family base + s·direction straddling L at s = 0.
#[derive(Debug, Clone)]
pub struct ProbeGrid {
    /// Point on L.
    pub base: DVector<f64>,
    /// Transverse unit direction.
    pub direction: DVector<f64>,
    /// Coarsest step; refinements halve it twice.
    pub h0: f64,
}

#[derive(Debug, Clone)]
pub struct SmoothnessReport {
    /// Central first-derivative estimates of Π along the direction, one per
    /// refinement level.
    pub first_derivative: Vec<DVector<f64>>,
    /// Central second-derivative estimates, one per refinement level.
    pub second_derivative: Vec<DVector<f64>>,
    /// Largest sup-norm change between consecutive refinements, over both
    /// derivative orders.
    pub max_delta: f64,
    pub tolerance: f64,
    pub stabilized: bool,
}

/// Divided-difference estimates of ∂_s Π and ∂²_s Π at s = 0 for
/// h ∈ {h0, h0/2, h0/4}; stabilized when consecutive estimates agree within
/// params.stab_tol.
pub fn limit_map_probe(
    spec: &FlowSpec,
    grid: &ProbeGrid,
    params: &FlowParams,
) -> Result<SmoothnessReport, FlowError> {
    spec.validate()?;
    params.validate()?;
    if grid.h0 <= 0.0 {
        return Err(FlowError::InvalidSpec("probe step must be positive".into()));
    }
    let center = limit_point(spec, &grid.base, params)?;
    let mut first = Vec::with_capacity(3);
    let mut second = Vec::with_capacity(3);
    for level in 0..3 {
        let h = grid.h0 / 2f64.powi(level);
        let plus = limit_point(spec, &(&grid.base + &grid.direction * h), params)?;
        let minus = limit_point(spec, &(&grid.base - &grid.direction * h), params)?;
        first.push((&plus - &minus) / (2.0 * h));
        second.push((&(&plus + &minus) - &center * 2.0) / (h * h));
    }
    let mut max_delta = 0.0f64;
    for series in [&first, &second] {
        for pair in series.windows(2) {
            let d = (&pair[1] - &pair[0]).amax();
            max_delta = max_delta.max(d);
        }
    }
    Ok(SmoothnessReport {
        first_derivative: first,
        second_derivative: second,
        max_delta,
        tolerance: params.stab_tol,
        stabilized: max_delta <= params.stab_tol,
    })
}
