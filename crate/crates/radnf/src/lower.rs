//! Elimination of lower-order terms after the principal part is the model z.
//!
//! Stage k removes the relative-order −k component q̃ of the ladder by solving
//!   D_k b̃ + z f̃ + resonant = q̃,   D_k = θ·∂_θ + z∂_z + k,
//! monomial by monomial: D_k acts diagonally with eigenvalue μ = a + |α| + k,
//! z-divisible terms are absorbed by the multiplier f̃, and the kernel of the
//! whole scheme is exactly the pure-y monomials at k = 0 — these are the
//! normal-form function p₀(y). The conjugation is realized at first order in
//! the symbol calculus: the commutator contributes one graded bracket per
//! component and the multiplier contributes f̃·(component); everything the
//! first-order rule misses lands in a deeper order and is handled by a later
//! stage.
//!
//! The ladder is indexed relative to a weight-1 principal: component j has
//! relative weight 1 − j. A symbol of a different order is normalized in its
//! order-shifted form; the degree-0 representatives are unchanged by the
//! shift.

use serde::Serialize;

use crate::jet::{JetCaps, JetSeries, Monomial};
use crate::principal::{
    exp_ad_pullback_weighted, normalize_principal, NormalizeError, PrincipalCertificate,
};
use crate::rational::Rational;
use crate::symbol::{graded_bracket, ClassicalSymbol};

/// Where to send a monomial that both divides by z and has nonzero
/// eigenvalue. The resonant (pure-y) space is disjoint from either choice, so
/// p₀ does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RoutePreference {
    /// z-divisible terms go to the multiplier f̃ (the default).
    ZToF,
    /// Every nonzero-eigenvalue term goes to the generator b̃.
    EigenvalueToB,
}

/// Solution of the stage-k homological equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSolution {
    pub b: JetSeries,
    pub f: JetSeries,
    pub resonant: JetSeries,
}

/// Stage-k eigenvalue of D_k on z^a θ^α y^β.
pub fn stage_eigenvalue(m: &Monomial, k: u32) -> u32 {
    m.z + m.theta_degree() + k
}

/// D_k b = ⟪z, b⟫ at source weight −k; equals (θ·∂_θ + z∂_z + k) b.
pub fn homological_operator(b: &JetSeries, k: u32) -> JetSeries {
    let z = JetSeries::coord_z(b.caps());
    graded_bracket(&z, 1, b, -(k as i64))
}

pub fn homological_solve_order_k(p_tilde: &JetSeries, k: u32) -> StageSolution {
    homological_solve_order_k_with_routing(p_tilde, k, RoutePreference::ZToF)
}

/// Split p̃ so that D_k(b̃) + z·f̃ + resonant = p̃ holds exactly within caps.
/// Resonant terms (eigenvalue 0 and no z factor) exist only at k = 0 and are
/// exactly the y-only monomials.
pub fn homological_solve_order_k_with_routing(
    p_tilde: &JetSeries,
    k: u32,
    routing: RoutePreference,
) -> StageSolution {
    let caps = p_tilde.caps();
    let mut b = Vec::new();
    let mut f = Vec::new();
    let mut resonant = Vec::new();
    for (m, c) in p_tilde.terms() {
        let mu = stage_eigenvalue(m, k);
        if mu == 0 {
            resonant.push((m.clone(), c.clone()));
        } else if routing == RoutePreference::ZToF && m.z > 0 {
            let mut divided = m.clone();
            divided.z -= 1;
            f.push((divided, c.clone()));
        } else {
            let inv = Rational::new(1, mu as i64);
            b.push((m.clone(), c * &inv));
        }
    }
    let build = |terms: Vec<(Monomial, Rational)>| {
        JetSeries::from_terms(terms, caps).expect("in-cap monomials stay in cap")
    };
    StageSolution { b: build(b), f: build(f), resonant: build(resonant) }
}

fn caps_zero(caps: JetCaps) -> JetSeries {
    JetSeries::zero(caps)
}

/// Post-correction discrepancy of the ladder at relative order −k, given the
/// stage-k generator pair. Checks the inductive hypothesis first: order 1
/// equals z, order 0 is y-only (for k ≥ 1), and orders −1..−(k−1) vanish, all
/// modulo filtration ≥ cap. For a solved stage the result is zero: at k ≥ 1
/// the corrected component vanishes outright, at k = 0 it is pure-y and the
/// target is its own y-only part.
pub fn conjugation_discrepancy(
    current: &ClassicalSymbol,
    k: u32,
    b_k: &JetSeries,
    f_k: &JetSeries,
) -> Result<JetSeries, NormalizeError> {
    let caps = current.caps();
    let n = caps.fil_cap;
    let z = JetSeries::coord_z(caps);
    let principal = current.principal();
    if !(principal - &z).vanishes_to_order(n) {
        return Err(NormalizeError::InductiveHypothesisViolated {
            stage: k,
            detail: "order-1 component is not the model z".into(),
        });
    }
    if k >= 1 {
        if let Some(q0) = current.component(1) {
            if !(q0 - &q0.y_only_part()).vanishes_to_order(n) {
                return Err(NormalizeError::InductiveHypothesisViolated {
                    stage: k,
                    detail: "order-0 component is not a function of y alone".into(),
                });
            }
        }
        for j in 2..=k as usize {
            if let Some(q) = current.component(j) {
                if !q.vanishes_to_order(n) {
                    return Err(NormalizeError::InductiveHypothesisViolated {
                        stage: k,
                        detail: format!("order {} component has not been cleared", 1 - j as i64),
                    });
                }
            }
        }
    }
    let own = current.component(k as usize + 1).cloned().unwrap_or_else(|| caps_zero(caps));
    let corrected = &(&own + &graded_bracket(b_k, -(k as i64), principal, 1)) - &(f_k * principal);
    let target = if k == 0 { corrected.y_only_part() } else { caps_zero(caps) };
    Ok(&corrected - &target)
}

/// One completed stage. `residual` is the part of the corrected component not
/// accounted for by the resonant target; exact arithmetic makes it vanish.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub k: u32,
    pub b: JetSeries,
    pub f: JetSeries,
    pub resonant: JetSeries,
    pub residual: JetSeries,
}

/// Divisor conventions for the diagonal solve, recorded so a certificate is
/// self-describing. Both agree on every z-free monomial, and z-divisible
/// terms are never divided under the default routing.
#[derive(Debug, Clone, Serialize)]
pub struct SignConvention {
    pub eigenvalue_divisor: &'static str,
    pub alternative_divisor: &'static str,
}

impl Default for SignConvention {
    fn default() -> Self {
        SignConvention {
            eigenvalue_divisor: "a + |alpha| + k",
            alternative_divisor: "|alpha| - a + k",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizationCertificate {
    pub principal: PrincipalCertificate,
    /// y-only normal-form function extracted from the stage-0 resonance.
    pub p0: JetSeries,
    pub stages: Vec<StageRecord>,
    pub routing: RoutePreference,
    pub sign_convention: SignConvention,
}

/// Apply the principal normalization to every component of the ladder:
/// divide by λ first, then the weighted pullback chain in ascending level
/// order, each component at its own relative weight.
fn transport_ladder(
    cert: &PrincipalCertificate,
    components: &[JetSeries],
) -> Result<Vec<JetSeries>, NormalizeError> {
    let lambda_inv = cert
        .elliptic_factor
        .invert()
        .map_err(|_| NormalizeError::Internal("elliptic factor not invertible".into()))?;
    let mut out = Vec::with_capacity(components.len());
    for (j, q) in components.iter().enumerate() {
        let mut cur = &lambda_inv * q;
        let weight = 1 - j as i64;
        for g in &cert.generators {
            cur = exp_ad_pullback_weighted(&g.jet, &cur, weight)?;
        }
        out.push(cur);
    }
    Ok(out)
}

/// Stage-k update of the whole ladder, first-order calculus, reading from a
/// pre-stage snapshot: component j gains ⟪b̃, snapshot[j−k−1]⟫ − f̃·snapshot[j−k−1].
fn apply_stage(ladder: &mut [JetSeries], k: u32, b: &JetSeries, f: &JetSeries) {
    let snapshot: Vec<JetSeries> = ladder.to_vec();
    for j in (k as usize + 1)..ladder.len() {
        let src = j - (k as usize + 1);
        let source_weight = 1 - src as i64;
        let update = graded_bracket(b, -(k as i64), &snapshot[src], source_weight);
        ladder[j] = &(&ladder[j] + &update) - &(f * &snapshot[src]);
    }
}

pub fn normalize_full(
    p: &ClassicalSymbol,
    stage_count: u32,
) -> Result<NormalizationCertificate, NormalizeError> {
    normalize_full_with_routing(p, stage_count, RoutePreference::ZToF)
}

/// Full normalization: principal reduction, then stages k = 0..stage_count
/// clearing relative orders 0, −1, .., −(stage_count−1). The final ladder is
/// (z; p₀(y); 0; ..; 0) exactly within caps.
pub fn normalize_full_with_routing(
    p: &ClassicalSymbol,
    stage_count: u32,
    routing: RoutePreference,
) -> Result<NormalizationCertificate, NormalizeError> {
    let caps = p.caps();
    if stage_count >= caps.fil_cap {
        return Err(NormalizeError::CapsTooSmall(format!(
            "{stage_count} stages at filtration cap {}",
            caps.fil_cap
        )));
    }
    let principal_cert = normalize_principal(p.principal())?;
    let len = p.components().len().max(stage_count as usize + 1);
    let mut components = p.components().to_vec();
    components.resize(len, caps_zero(caps));
    let mut ladder = transport_ladder(&principal_cert, &components)?;
    let z = JetSeries::coord_z(caps);
    if !(&ladder[0] - &z).vanishes_to_order(caps.fil_cap) {
        return Err(NormalizeError::Internal("principal component did not reduce to z".into()));
    }

    let mut p0 = caps_zero(caps);
    let mut stages = Vec::with_capacity(stage_count as usize);
    for k in 0..stage_count {
        let own = ladder[k as usize + 1].clone();
        let sol = homological_solve_order_k_with_routing(&own, k, routing);
        apply_stage(&mut ladder, k, &sol.b, &sol.f);
        let corrected = &ladder[k as usize + 1];
        let residual = corrected - &sol.resonant;
        if !residual.is_zero() {
            return Err(NormalizeError::Internal(format!(
                "stage {k} correction missed its own order: {residual}"
            )));
        }
        if k == 0 {
            p0 = sol.resonant.clone();
            if !p0.is_y_only() {
                return Err(NormalizeError::Internal(
                    "stage-0 resonance is not a function of y alone".into(),
                ));
            }
        } else if !sol.resonant.is_zero() {
            return Err(NormalizeError::Internal(format!(
                "nonzero resonance at stage {k} contradicts the eigenvalue bound"
            )));
        }
        stages.push(StageRecord { k, b: sol.b, f: sol.f, resonant: sol.resonant, residual });
    }
    Ok(NormalizationCertificate {
        principal: principal_cert,
        p0,
        stages,
        routing,
        sign_convention: SignConvention::default(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FullReplay {
    /// Filtration of (final component − target) per relative order, starting
    /// at order 1; None means the difference is exactly zero within caps.
    pub order_residual_filtrations: Vec<Option<u32>>,
    pub pass: bool,
}

/// Recompute the pipeline from certificate data alone and compare the final
/// ladder against (z; p0; 0; ..; 0) modulo filtration ≥ cap.
pub fn replay_full(
    cert: &NormalizationCertificate,
    p: &ClassicalSymbol,
) -> Result<FullReplay, NormalizeError> {
    let caps = p.caps();
    let len = p.components().len().max(cert.stages.len() + 1);
    let mut components = p.components().to_vec();
    components.resize(len, caps_zero(caps));
    let mut ladder = transport_ladder(&cert.principal, &components)?;
    for stage in &cert.stages {
        apply_stage(&mut ladder, stage.k, &stage.b, &stage.f);
    }
    let z = JetSeries::coord_z(caps);
    let mut fils = Vec::with_capacity(cert.stages.len() + 1);
    let mut pass = true;
    for (j, q) in ladder.iter().enumerate().take(cert.stages.len() + 1) {
        let target = match j {
            0 => z.clone(),
            1 => cert.p0.clone(),
            _ => caps_zero(caps),
        };
        let diff = q - &target;
        pass &= diff.vanishes_to_order(caps.fil_cap);
        fils.push(diff.filtration_order());
    }
    Ok(FullReplay { order_residual_filtrations: fils, pass })
}
