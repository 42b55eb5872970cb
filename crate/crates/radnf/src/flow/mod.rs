//! Numerical verification of the flow-theoretic steps that have no finite
//! symbolic form: the W₋ conjugacy limit that linearizes a flat perturbation
//! of a linear field, the transport integral solving Vf + cf = g, spectral
//! splittings relative to a null subspace L, and the smoothness probe for the
//! limit map across L.
//!
//! Conventions: the model boundary field z∂_z + θ·∂_θ expands away from L, so
//! the Nelson-style limits here run along a field chosen to make L attract;
//! callers pass the (possibly negated) field they mean. Flat vanishing is
//! modeled by polynomial perturbations of declared finite order ≥ v with an
//! explicit bump cutoff.

mod integrate;
mod nelson;
mod probe;
mod spec;
mod splitting;
mod transport;

pub use integrate::{integrate_flow, semigroup_defect};
pub use nelson::{linearization_residual, wminus_map, ResidualReport, SampleBox, WminusResult};
pub use probe::{limit_map_probe, limit_point, ProbeGrid, SmoothnessReport};
pub use spec::{FlowParams, FlowSpec, PerturbationTerm, ScalarCutoffPoly};
pub use splitting::{stable_splitting, Splitting};
pub use transport::{transport_residual, transport_solve, TransportDirection};

#[derive(Debug, Clone, thiserror::Error)]
pub enum FlowError {
    #[error("invalid flow specification: {0}")]
    InvalidSpec(String),
    #[error("eigenvalue off the null subspace has |Re| = {re:.3e} < 1e-9")]
    NonHyperbolic { re: f64 },
    #[error("step control failed at t = {t:.6}: step {h:.3e} below minimum")]
    StepFailure { t: f64, h: f64 },
    #[error("no convergence within horizon {t_max}")]
    NoConvergence { t_max: f64 },
    #[error("transport integral shows no decay by t = {t}")]
    DivergentIntegral { t: f64 },
    #[error("internal assertion failed: {0}")]
    Internal(String),
}
