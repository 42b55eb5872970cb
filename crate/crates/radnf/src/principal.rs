//! Reduction of a radial principal part to the model symbol z.
//!
//! A radial p factors as λ(y)·z modulo 𝓘². After dividing out the elliptic
//! factor λ, the level-l obstruction r_l of current − z is removed by the
//! time-1 pullback exp(ad b_l) with b_l = r_l/(l−1): the model relation
//! ⟪z, m⟫ = (a+|α|−1)·m makes the homological equation diagonal on monomials,
//! and l − 1 ≥ 1 never vanishes, so every level solves. Each pullback raises
//! the remaining error's filtration, and the recursion stops at the cap with
//! a residual in 𝓘^N.
//!
//! The certificate stores λ, the generators b_l in ascending level order, and
//! the final residual. Replay is the same fixed pipeline recomputed from the
//! certificate alone: divide the original p by λ, apply the exp(ad b_l) chain
//! ascending, compare against z and the stored residual.

use serde::Serialize;

use crate::jet::{JetSeries, Var};
use crate::rational::Rational;
use crate::symbol::{graded_bracket, radial_check_jet, RadialFailure};

#[derive(Debug, Clone, thiserror::Error)]
pub enum NormalizeError {
    #[error("principal part is not in the radial class ({})", format_failures(.0))]
    NotRadial(Vec<RadialFailure>),
    #[error("expected a homogeneous jet of filtration level {expected}, got {found}")]
    BadFiltration { expected: u32, found: String },
    #[error("exp(ad b) requires filtration_order(b) >= 2, got {got}")]
    NonConvergent { got: u32 },
    #[error("caps too small: {0}")]
    CapsTooSmall(String),
    #[error("inductive hypothesis violated at stage {stage}: {detail}")]
    InductiveHypothesisViolated { stage: u32, detail: String },
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

fn format_failures(failures: &[RadialFailure]) -> String {
    failures.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; ")
}

/// Divide out the elliptic factor: p = λ(y)·z mod 𝓘² with λ(0) ≠ 0.
/// Returns (λ, λ⁻¹·p); the reduced jet equals z modulo 𝓘².
pub fn linear_reduction(p: &JetSeries) -> Result<(JetSeries, JetSeries), NormalizeError> {
    let report = radial_check_jet(p);
    if !report.in_class {
        return Err(NormalizeError::NotRadial(report.failures));
    }
    let lambda = report.lambda_factor;
    let lambda_inv = lambda
        .invert()
        .map_err(|_| NormalizeError::Internal("radial lambda factor not invertible".into()))?;
    Ok((lambda.clone(), &lambda_inv * p))
}

/// Solve ⟪b, z⟫ = −r for homogeneous r of filtration level l ≥ 2:
/// b = r/(l−1), since ⟪z, m⟫ = (l−1)·m on every level-l monomial.
pub fn homological_solve_principal(r: &JetSeries, l: u32) -> Result<JetSeries, NormalizeError> {
    if l < 2 {
        return Err(NormalizeError::BadFiltration {
            expected: l.max(2),
            found: format!("level {l} has kernel obstructions"),
        });
    }
    for (m, _) in r.terms() {
        if m.filtration() != l {
            return Err(NormalizeError::BadFiltration { expected: l, found: m.to_string() });
        }
    }
    let divisor = Rational::from_integer(l as i64 - 1);
    Ok(r.scale(&divisor.recip().expect("l - 1 >= 1")))
}

/// exp(ad b) acting on the degree-0 representative of a weight-`weight`
/// symbol: Σ_j (1/j!)(ad b)^j q with ad b = graded_bracket(b, 1, ·, weight).
/// Terminates because each application raises filtration by at least
/// filtration_order(b) − 1 ≥ 1.
pub fn exp_ad_pullback_weighted(
    b: &JetSeries,
    q: &JetSeries,
    weight: i64,
) -> Result<JetSeries, NormalizeError> {
    if let Some(fil) = b.filtration_order() {
        if fil < 2 {
            return Err(NormalizeError::NonConvergent { got: fil });
        }
    }
    let mut sum = q.clone();
    let mut term = q.clone();
    let max_iter = q.caps().fil_cap as i64 + 2;
    for j in 1..=max_iter {
        term = graded_bracket(b, 1, &term, weight).scale(&Rational::new(1, j));
        if term.is_zero() {
            return Ok(sum);
        }
        sum = &sum + &term;
    }
    Err(NormalizeError::Internal(
        "exp(ad b) series did not terminate within the filtration cap".into(),
    ))
}

/// exp(ad b) on weight-1 symbols (the principal case).
pub fn exp_ad_pullback(b: &JetSeries, p: &JetSeries) -> Result<JetSeries, NormalizeError> {
    exp_ad_pullback_weighted(b, p, 1)
}

/// One generator of the normalizing chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub level: u32,
    pub jet: JetSeries,
}

/// Per-level record of the solved obstruction monomials.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub level: u32,
    /// Every monomial at this level divides by level − 1.
    pub divisor: Rational,
    pub solved_monomials: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrincipalCertificate {
    /// λ(y); the replay pipeline divides the input by this first.
    pub elliptic_factor: JetSeries,
    /// Nonzero generators in ascending level order l = 2..N−1.
    pub generators: Vec<Generator>,
    /// Final pullback of λ⁻¹p minus z; filtration ≥ N.
    pub residual: JetSeries,
    pub log: Vec<LevelRecord>,
}

/// Normalize a radial principal part to z modulo 𝓘^N.
pub fn normalize_principal(p: &JetSeries) -> Result<PrincipalCertificate, NormalizeError> {
    let caps = p.caps();
    let (lambda, mut current) = linear_reduction(p)?;
    let z = JetSeries::coord_z(caps);
    let mut generators = Vec::new();
    let mut log = Vec::new();
    for level in 2..caps.fil_cap {
        let r = (&current - &z).level_part(level);
        let record = LevelRecord {
            level,
            divisor: Rational::from_integer(level as i64 - 1),
            solved_monomials: r.terms().map(|(m, _)| m.to_string()).collect(),
        };
        log.push(record);
        if r.is_zero() {
            continue;
        }
        let b = homological_solve_principal(&r, level)?;
        current = exp_ad_pullback(&b, &current)?;
        let cleared = (&current - &z).level_part(level);
        if !cleared.is_zero() {
            return Err(NormalizeError::Internal(format!(
                "level {level} obstruction survived its own pullback: {cleared}"
            )));
        }
        generators.push(Generator { level, jet: b });
    }
    let residual = &current - &z;
    if !residual.vanishes_to_order(caps.fil_cap) {
        return Err(NormalizeError::Internal(format!(
            "residual has filtration below the cap: {residual}"
        )));
    }
    Ok(PrincipalCertificate { elliptic_factor: lambda, generators, residual, log })
}

#[derive(Debug, Clone, Serialize)]
pub struct PrincipalReplay {
    /// Filtration order of the replayed pullback minus z; None means the
    /// difference is exactly zero within caps.
    pub residual_filtration: Option<u32>,
    pub matches_stored_residual: bool,
    pub pass: bool,
}

/// Recompute the full pipeline from the certificate alone and check that it
/// reproduces z modulo 𝓘^N, with the same residual the certificate stores.
pub fn replay_principal(
    cert: &PrincipalCertificate,
    p: &JetSeries,
) -> Result<PrincipalReplay, NormalizeError> {
    let caps = p.caps();
    let lambda_inv = cert.elliptic_factor.invert().map_err(|_| {
        NormalizeError::Internal("certificate elliptic factor not invertible".into())
    })?;
    let mut current = &lambda_inv * p;
    for g in &cert.generators {
        current = exp_ad_pullback(&g.jet, &current)?;
    }
    let diff = &current - &JetSeries::coord_z(caps);
    let fil = diff.filtration_order();
    let pass_fil = diff.vanishes_to_order(caps.fil_cap);
    let matches = diff == cert.residual;
    Ok(PrincipalReplay {
        residual_filtration: fil,
        matches_stored_residual: matches,
        pass: pass_fil && matches,
    })
}

/// ∂_z b as used by the boundary flow of the generator field: the ρ∂_ρ
/// coefficient of the Hamilton field, needed by numerical cross-checks.
pub fn generator_log_derivative(b: &JetSeries) -> JetSeries {
    b.derive(Var::Z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{JetCaps, Monomial};
    use crate::symbol::lagrange_bracket;

    fn caps() -> JetCaps {
        JetCaps::new(2, 6, 4)
    }

    fn jet(entries: &[(i64, u32, &[u32], &[u32])], caps: JetCaps) -> JetSeries {
        JetSeries::from_terms(
            entries.iter().map(|(c, z, t, y)| {
                (Monomial::new(*z, t.to_vec(), y.to_vec()), Rational::from_integer(*c))
            }),
            caps,
        )
        .unwrap()
    }

    fn qjet(entries: &[(Rational, u32, &[u32], &[u32])], caps: JetCaps) -> JetSeries {
        JetSeries::from_terms(
            entries
                .iter()
                .map(|(c, z, t, y)| (Monomial::new(*z, t.to_vec(), y.to_vec()), c.clone())),
            caps,
        )
        .unwrap()
    }

    #[test]
    fn linear_reduction_identity() {
        let z = JetSeries::coord_z(caps());
        let (lambda, reduced) = linear_reduction(&z).unwrap();
        assert_eq!(lambda, JetSeries::one(caps()));
        assert_eq!(reduced, z);
    }

    #[test]
    fn linear_reduction_divides_unit() {
        // p = (1+y₁)z → λ = 1+y₁, reduced = z
        let p = jet(&[(1, 1, &[0], &[0]), (1, 1, &[0], &[1])], caps());
        let (lambda, reduced) = linear_reduction(&p).unwrap();
        assert_eq!(lambda, jet(&[(1, 0, &[0], &[0]), (1, 0, &[0], &[1])], caps()));
        assert_eq!(reduced, JetSeries::coord_z(caps()));
    }

    #[test]
    fn linear_reduction_scales_higher_terms() {
        // p = 2z + z² → λ = 2, reduced = z + z²/2
        let p = jet(&[(2, 1, &[0], &[0]), (1, 2, &[0], &[0])], caps());
        let (lambda, reduced) = linear_reduction(&p).unwrap();
        assert_eq!(lambda, JetSeries::constant(caps(), Rational::from_integer(2)));
        let expect =
            qjet(&[(Rational::one(), 1, &[0], &[0]), (Rational::new(1, 2), 2, &[0], &[0])], caps());
        assert_eq!(reduced, expect);
    }

    #[test]
    fn linear_reduction_rejects_non_radial() {
        let theta = JetSeries::coord_theta(caps(), 0);
        assert!(matches!(linear_reduction(&theta), Err(NormalizeError::NotRadial(_))));
    }

    #[test]
    fn homological_solve_divides_by_level_minus_one() {
        // level 2: zθ₁ → zθ₁
        let r2 = jet(&[(1, 1, &[1], &[0])], caps());
        assert_eq!(homological_solve_principal(&r2, 2).unwrap(), r2);
        // level 3: z²θ₁ → z²θ₁/2
        let r3 = jet(&[(1, 2, &[1], &[0])], caps());
        let b3 = homological_solve_principal(&r3, 3).unwrap();
        assert_eq!(b3, r3.scale(&Rational::new(1, 2)));
        // level-1 input sits in the kernel direction and is rejected
        let r1 = JetSeries::coord_z(caps());
        assert!(matches!(
            homological_solve_principal(&r1, 1),
            Err(NormalizeError::BadFiltration { .. })
        ));
        // inhomogeneous input is rejected
        let mixed = jet(&[(1, 1, &[1], &[0]), (1, 3, &[0], &[0])], caps());
        assert!(matches!(
            homological_solve_principal(&mixed, 2),
            Err(NormalizeError::BadFiltration { .. })
        ));
    }

    #[test]
    fn exp_ad_identity_for_zero_generator() {
        let p = jet(&[(1, 1, &[0], &[0]), (3, 2, &[1], &[1])], caps());
        let zero = JetSeries::zero(caps());
        assert_eq!(exp_ad_pullback(&zero, &p).unwrap(), p);
    }

    #[test]
    fn exp_ad_terminating_series() {
        // b = zθ₁: ⟪b, z⟫ = −⟪z, b⟫ = −zθ₁ and ⟪b, zθ₁⟫ = 0, so
        // exp(ad b)(z) = z − zθ₁ exactly.
        let b = jet(&[(1, 1, &[1], &[0])], caps());
        let z = JetSeries::coord_z(caps());
        let expect = jet(&[(1, 1, &[0], &[0]), (-1, 1, &[1], &[0])], caps());
        assert_eq!(exp_ad_pullback(&b, &z).unwrap(), expect);
    }

    #[test]
    fn exp_ad_rejects_low_filtration_generator() {
        let z = JetSeries::coord_z(caps());
        let err = exp_ad_pullback(&z, &z).unwrap_err();
        assert!(matches!(err, NormalizeError::NonConvergent { got: 1 }));
    }

    #[test]
    fn exp_ad_numerical_flow_cross_check() {
        // Independent oracle: exp(ad b)p is the weighted pullback
        // ρ φ₁^*(ρ⁻¹ p), i.e. exp(−∫₀¹ ∂_z b(φ_t x) dt) · p(φ₁(x)) on the
        // boundary, with φ_t the flow of the chart Hamilton field
        //   ẏ = ∂_θ b, ż = b − θ·∂_θ b, θ̇ = θ ∂_z b − ∂_y b.
        // RK4 integration at small sample points; the jet cap contributes
        // O(|x|^N), so agreement is to ~1e−9 at |x| ≈ 0.05.
        let c = JetCaps::new(2, 8, 6);
        let b =
            qjet(&[(Rational::new(1, 3), 1, &[1], &[0]), (Rational::new(-1, 2), 2, &[0], &[1])], c);
        let p = jet(&[(1, 1, &[0], &[0]), (1, 2, &[0], &[0]), (2, 0, &[1], &[1])], c);
        let result = exp_ad_pullback(&b, &p).unwrap();

        let dz_b = b.derive(Var::Z);
        let dth_b = b.derive(Var::Theta(0));
        let dy_b = b.derive(Var::Y(0));
        // state (y, z, theta, s) with s the log-weight accumulator
        let field = |st: [f64; 4]| -> [f64; 4] {
            let (y, z, th) = (st[0], st[1], st[2]);
            let bv = b.eval_f64(&[y], z, &[th]);
            let dzb = dz_b.eval_f64(&[y], z, &[th]);
            let dthb = dth_b.eval_f64(&[y], z, &[th]);
            let dyb = dy_b.eval_f64(&[y], z, &[th]);
            [dthb, bv - th * dthb, th * dzb - dyb, dzb]
        };
        let rk4 = |mut st: [f64; 4]| -> [f64; 4] {
            let steps = 2000;
            let h = 1.0 / steps as f64;
            for _ in 0..steps {
                let k1 = field(st);
                let mid1: [f64; 4] = std::array::from_fn(|i| st[i] + 0.5 * h * k1[i]);
                let k2 = field(mid1);
                let mid2: [f64; 4] = std::array::from_fn(|i| st[i] + 0.5 * h * k2[i]);
                let k3 = field(mid2);
                let end: [f64; 4] = std::array::from_fn(|i| st[i] + h * k3[i]);
                let k4 = field(end);
                for i in 0..4 {
                    st[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            st
        };
        for (y0, z0, t0) in [(0.03, 0.05, -0.04), (-0.05, 0.02, 0.03), (0.01, -0.04, 0.05)] {
            let end = rk4([y0, z0, t0, 0.0]);
            let numeric = (-end[3]).exp() * p.eval_f64(&[end[0]], end[1], &[end[2]]);
            let symbolic = result.eval_f64(&[y0], z0, &[t0]);
            assert!(
                (numeric - symbolic).abs() < 1e-8,
                "flow cross-check failed at ({y0},{z0},{t0}): {numeric} vs {symbolic}"
            );
        }
    }

    #[test]
    fn exp_ad_preserves_lagrange_bracket() {
        // exp(ad b) is a bracket automorphism; checked with y-degree headroom
        // so no cap truncation interferes.
        let c = JetCaps::new(2, 6, 6);
        let b = jet(&[(1, 1, &[1], &[1]), (2, 0, &[2], &[0])], c);
        let a1 = jet(&[(1, 1, &[0], &[0]), (1, 0, &[1], &[1])], c);
        let a2 = jet(&[(1, 0, &[1], &[0]), (-1, 2, &[0], &[0])], c);
        let lhs = exp_ad_pullback(&b, &lagrange_bracket(&a1, &a2)).unwrap();
        let rhs = lagrange_bracket(
            &exp_ad_pullback(&b, &a1).unwrap(),
            &exp_ad_pullback(&b, &a2).unwrap(),
        );
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn normalize_model_symbol_is_trivial() {
        let z = JetSeries::coord_z(caps());
        let cert = normalize_principal(&z).unwrap();
        assert_eq!(cert.elliptic_factor, JetSeries::one(caps()));
        assert!(cert.generators.is_empty());
        assert!(cert.residual.is_zero());
        let replay = replay_principal(&cert, &z).unwrap();
        assert!(replay.pass);
    }

    #[test]
    fn normalize_single_obstruction() {
        // p = z + zθ₁: one level-2 generator, replay to filtration cap.
        let p = jet(&[(1, 1, &[0], &[0]), (1, 1, &[1], &[0])], caps());
        let cert = normalize_principal(&p).unwrap();
        assert_eq!(cert.generators[0].level, 2);
        assert_eq!(cert.generators[0].jet, jet(&[(1, 1, &[1], &[0])], caps()));
        assert!(cert.residual.vanishes_to_order(6));
        let replay = replay_principal(&cert, &p).unwrap();
        assert!(replay.pass);
    }

    #[test]
    fn normalize_with_smaller_cap() {
        // p = z + y₁z² at N = 5: levels 2..4 processed, residual in 𝓘⁵.
        let c = JetCaps::new(2, 5, 4);
        let p = jet(&[(1, 1, &[0], &[0]), (1, 2, &[0], &[1])], c);
        let cert = normalize_principal(&p).unwrap();
        assert!(cert.residual.vanishes_to_order(5));
        assert!(replay_principal(&cert, &p).unwrap().pass);
        // the level-2 generator is y₁z²/1
        assert_eq!(cert.generators[0].level, 2);
        assert_eq!(cert.generators[0].jet, jet(&[(1, 2, &[0], &[1])], c));
    }

    #[test]
    fn normalize_levels_are_idempotent() {
        let p = jet(
            &[(2, 1, &[0], &[0]), (1, 1, &[1], &[1]), (-1, 2, &[0], &[0]), (1, 0, &[3], &[2])],
            caps(),
        );
        let cert = normalize_principal(&p).unwrap();
        // replaying the chain and re-solving any level yields zero correction
        let lambda_inv = cert.elliptic_factor.invert().unwrap();
        let mut current = &lambda_inv * &p;
        for g in &cert.generators {
            current = exp_ad_pullback(&g.jet, &current).unwrap();
        }
        let z = JetSeries::coord_z(caps());
        for level in 2..caps().fil_cap {
            let r = (&current - &z).level_part(level);
            assert!(r.is_zero(), "level {level} not cleared");
            let b = homological_solve_principal(&r, level).unwrap();
            assert!(b.is_zero());
        }
    }
}
