//! Homogeneous symbol calculus at the radial set.
//!
//! Two bracket routes are kept deliberately separate. The runtime route works
//! in chart coordinates (y, z, θ, ρ) with hard-coded formulas derived from the
//! Hamilton field of a weight-1 symbol. The oracle route substitutes θ = η/ζ,
//! ρ = 1/ζ into canonical coordinates (y, z, η, ζ), applies the standard
//! Poisson bracket there, and converts back. The oracle is the sign authority:
//! `graded_bracket` must agree with it term by term, and the test suites
//! enforce that.
//!
//! Weights follow the convention that a symbol of homogeneity s is
//! ρ^{−s}·(its degree-0 representative); the bracket of weights (s, t) has
//! weight s + t − 1.

use std::collections::BTreeMap;
use std::fmt;

use crate::jet::{JetCaps, JetError, JetSeries, Monomial, Var};
use crate::rational::Rational;

/// Classical (1-step polyhomogeneous) symbol: component j is the degree-0
/// representative of the order-(m−j) part.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClassicalSymbol {
    order: i64,
    components: Vec<JetSeries>,
}

impl ClassicalSymbol {
    pub fn new(order: i64, components: Vec<JetSeries>) -> Result<Self, JetError> {
        assert!(!components.is_empty(), "classical symbol needs at least one component");
        let caps = components[0].caps();
        for c in &components[1..] {
            if c.caps() != caps {
                return Err(JetError::CapsMismatch {
                    left: caps.to_string(),
                    right: c.caps().to_string(),
                });
            }
        }
        Ok(ClassicalSymbol { order, components })
    }

    pub fn order(&self) -> i64 {
        self.order
    }

    pub fn caps(&self) -> JetCaps {
        self.components[0].caps()
    }

    /// Principal component (order m).
    pub fn principal(&self) -> &JetSeries {
        &self.components[0]
    }

    pub fn components(&self) -> &[JetSeries] {
        &self.components
    }

    /// Depth K of the expansion c₀..c_K.
    pub fn depth(&self) -> usize {
        self.components.len() - 1
    }

    pub fn component(&self, j: usize) -> Option<&JetSeries> {
        self.components.get(j)
    }
}

/// Variables of the canonical chart (y, z, η, ζ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalVar {
    Y(usize),
    Z,
    Eta(usize),
    Zeta,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct LaurentMono {
    z: u32,
    eta: Vec<u32>,
    y: Vec<u32>,
    zeta: i64,
}

impl LaurentMono {
    fn product(&self, other: &LaurentMono) -> LaurentMono {
        LaurentMono {
            z: self.z + other.z,
            eta: self.eta.iter().zip(&other.eta).map(|(a, b)| a + b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect(),
            zeta: self.zeta + other.zeta,
        }
    }
}

impl fmt::Display for LaurentMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.z > 0 {
            parts.push(if self.z == 1 { "z".into() } else { format!("z^{}", self.z) });
        }
        for (i, &e) in self.eta.iter().enumerate() {
            if e > 0 {
                parts.push(if e == 1 {
                    format!("eta{}", i + 1)
                } else {
                    format!("eta{}^{e}", i + 1)
                });
            }
        }
        for (i, &e) in self.y.iter().enumerate() {
            if e > 0 {
                parts.push(if e == 1 { format!("y{}", i + 1) } else { format!("y{}^{e}", i + 1) });
            }
        }
        if self.zeta != 0 {
            parts.push(format!("zeta^{}", self.zeta));
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Exact Laurent polynomial in (y, z, η, ζ) with ζ-exponent of either sign.
/// Oracle-side representation; no truncation is ever applied here.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentRep {
    vars: usize,
    terms: BTreeMap<LaurentMono, Rational>,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("oracle mismatch: {0}")]
pub struct OracleMismatch(pub String);

impl LaurentRep {
    pub fn zero(vars: usize) -> Self {
        LaurentRep { vars, terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, m: LaurentMono, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rational::zero);
        *entry += &c;
    }

    fn normalize(mut self) -> Self {
        self.terms.retain(|_, c| !c.is_zero());
        self
    }

    pub fn add(&self, other: &LaurentRep) -> LaurentRep {
        assert_eq!(self.vars, other.vars);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out.normalize()
    }

    pub fn sub(&self, other: &LaurentRep) -> LaurentRep {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LaurentRep {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect();
        LaurentRep { vars: self.vars, terms }
    }

    pub fn mul(&self, other: &LaurentRep) -> LaurentRep {
        assert_eq!(self.vars, other.vars);
        let mut out = LaurentRep::zero(self.vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert(ma.product(mb), ca * cb);
            }
        }
        out.normalize()
    }

    pub fn derive(&self, var: CanonicalVar) -> LaurentRep {
        let mut out = LaurentRep::zero(self.vars);
        for (m, c) in &self.terms {
            let mut dm = m.clone();
            let exp: i64 = match var {
                CanonicalVar::Z => {
                    if m.z == 0 {
                        continue;
                    }
                    dm.z -= 1;
                    m.z as i64
                }
                CanonicalVar::Eta(i) => {
                    if m.eta[i] == 0 {
                        continue;
                    }
                    dm.eta[i] -= 1;
                    m.eta[i] as i64
                }
                CanonicalVar::Y(i) => {
                    if m.y[i] == 0 {
                        continue;
                    }
                    dm.y[i] -= 1;
                    m.y[i] as i64
                }
                CanonicalVar::Zeta => {
                    if m.zeta == 0 {
                        continue;
                    }
                    dm.zeta -= 1;
                    m.zeta
                }
            };
            out.insert(dm, c * &Rational::from_integer(exp));
        }
        out.normalize()
    }

    /// Standard Poisson bracket in (y, z; η, ζ):
    /// Σ_i (∂_{η_i}f ∂_{y_i}g − ∂_{y_i}f ∂_{η_i}g) + ∂_ζ f ∂_z g − ∂_z f ∂_ζ g.
    pub fn canonical_bracket(f: &LaurentRep, g: &LaurentRep) -> LaurentRep {
        assert_eq!(f.vars, g.vars);
        let mut out = f
            .derive(CanonicalVar::Zeta)
            .mul(&g.derive(CanonicalVar::Z))
            .sub(&f.derive(CanonicalVar::Z).mul(&g.derive(CanonicalVar::Zeta)));
        for i in 0..f.vars {
            out = out
                .add(&f.derive(CanonicalVar::Eta(i)).mul(&g.derive(CanonicalVar::Y(i))))
                .sub(&f.derive(CanonicalVar::Y(i)).mul(&g.derive(CanonicalVar::Eta(i))));
        }
        out
    }

    /// ζ^weight · a(y, z, η/ζ): a θ-monomial of degree d picks up ζ^{weight−d}.
    pub fn from_jet(a: &JetSeries, weight: i64) -> LaurentRep {
        let mut out = LaurentRep::zero(a.caps().vars());
        for (m, c) in a.terms() {
            let d: u32 = m.theta.iter().sum();
            out.insert(
                LaurentMono {
                    z: m.z,
                    eta: m.theta.clone(),
                    y: m.y.clone(),
                    zeta: weight - d as i64,
                },
                c.clone(),
            );
        }
        out.normalize()
    }

    /// Convert back a homogeneous rep of the given weight to a chart jet.
    /// Every term must satisfy ζ-exponent = weight − |η-exponent|; terms that
    /// fall outside the caps are dropped (they lie in the truncation ideals).
    pub fn to_jet(&self, weight: i64, caps: JetCaps) -> Result<JetSeries, OracleMismatch> {
        let mut entries = Vec::new();
        for (m, c) in &self.terms {
            let d: i64 = m.eta.iter().sum::<u32>() as i64;
            if m.zeta != weight - d {
                return Err(OracleMismatch(format!(
                    "term {m} is not homogeneous of weight {weight}"
                )));
            }
            let mono = Monomial::new(m.z, m.eta.clone(), m.y.clone());
            if mono.filtration() < caps.fil_cap && mono.y_degree() <= caps.y_cap {
                entries.push((mono, c.clone()));
            }
        }
        JetSeries::from_terms(entries, caps).map_err(|e| OracleMismatch(e.to_string()))
    }
}

/// `to_canonical` of the external surface: ζ^weight · a(y, z, η/ζ).
pub fn to_canonical(a: &JetSeries, weight: i64) -> LaurentRep {
    LaurentRep::from_jet(a, weight)
}

/// Oracle route for the graded bracket: convert, bracket canonically, convert
/// back at weight s + t − 1. Used by the verification suites and the
/// verify-hamilton command; the runtime route is `graded_bracket`.
pub fn graded_bracket_oracle(
    a: &JetSeries,
    s: i64,
    b: &JetSeries,
    t: i64,
) -> Result<JetSeries, OracleMismatch> {
    let f = LaurentRep::from_jet(a, s);
    let g = LaurentRep::from_jet(b, t);
    LaurentRep::canonical_bracket(&f, &g).to_jet(s + t - 1, a.caps())
}

/// Coefficient rescale c ↦ w(m)·c per monomial; used for the Euler-type
/// factors (s·a − θ·∂_θ a) whose action is diagonal on monomials.
fn reweight(a: &JetSeries, w: impl Fn(&Monomial) -> i64) -> JetSeries {
    let caps = a.caps();
    let entries =
        a.terms().map(|(m, c)| (m.clone(), c * &Rational::from_integer(w(m)))).collect::<Vec<_>>();
    JetSeries::from_terms(entries, caps).expect("reweighting preserves monomials")
}

fn theta_degree(m: &Monomial) -> i64 {
    m.theta.iter().sum::<u32>() as i64
}

/// Degree-0 representative of {ρ^{−s}a, ρ^{−t}b} (weight s + t − 1):
///   Σ_i (∂_{θ_i}a ∂_{y_i}b − ∂_{y_i}a ∂_{θ_i}b)
///   + (s·a − θ·∂_θ a)·∂_z b − ∂_z a·(t·b − θ·∂_θ b).
/// Must agree exactly with `graded_bracket_oracle`.
pub fn graded_bracket(a: &JetSeries, s: i64, b: &JetSeries, t: i64) -> JetSeries {
    let caps = a.caps();
    assert!(caps == b.caps(), "graded_bracket requires shared caps");
    let vars = caps.vars();
    let mut out = &reweight(a, |m| s - theta_degree(m)) * &b.derive(Var::Z);
    out = &out - &(&a.derive(Var::Z) * &reweight(b, |m| t - theta_degree(m)));
    for i in 0..vars {
        out = &out + &(&a.derive(Var::Theta(i)) * &b.derive(Var::Y(i)));
        out = &out - &(&a.derive(Var::Y(i)) * &b.derive(Var::Theta(i)));
    }
    out
}

/// Lagrange bracket ⟪a, b⟫ = ρ{ρ⁻¹a, ρ⁻¹b}: the weight (1, 1) case.
pub fn lagrange_bracket(a: &JetSeries, b: &JetSeries) -> JetSeries {
    graded_bracket(a, 1, b, 1)
}

/// Hamilton field of the weight-1 symbol ρ⁻¹a, expressed in the chart frame
/// (∂_y, ∂_z, ∂_θ, ρ∂_ρ). For a independent of ρ the four coefficient groups
/// are ∂_{θ_i}a, (a − θ·∂_θ a), (θ_i ∂_z a − ∂_{y_i}a), ∂_z a.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartVectorField {
    pub coeff_y: Vec<JetSeries>,
    pub coeff_z: JetSeries,
    pub coeff_theta: Vec<JetSeries>,
    pub coeff_rho_drho: JetSeries,
}

impl ChartVectorField {
    /// Apply as a derivation to a chart function (which has no ρ dependence,
    /// so the ρ∂_ρ coefficient does not act).
    pub fn apply(&self, g: &JetSeries) -> JetSeries {
        let mut out = &self.coeff_z * &g.derive(Var::Z);
        for (i, cy) in self.coeff_y.iter().enumerate() {
            out = &out + &(cy * &g.derive(Var::Y(i)));
        }
        for (i, ct) in self.coeff_theta.iter().enumerate() {
            out = &out + &(ct * &g.derive(Var::Theta(i)));
        }
        out
    }
}

pub fn chart_hamilton_field(a: &JetSeries) -> ChartVectorField {
    let vars = a.caps().vars();
    let dz = a.derive(Var::Z);
    let coeff_y = (0..vars).map(|i| a.derive(Var::Theta(i))).collect();
    let coeff_theta = (0..vars)
        .map(|i| {
            let theta_i = JetSeries::coord_theta(a.caps(), i);
            &(&theta_i * &dz) - &a.derive(Var::Y(i))
        })
        .collect();
    let coeff_z = reweight(a, |m| 1 - theta_degree(m));
    ChartVectorField { coeff_y, coeff_z, coeff_theta, coeff_rho_drho: dz }
}

/// Named membership conditions for the radial class, checked on the rescaled
/// principal part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RadialFailure {
    ValueOnRadialSet,
    ThetaDerivativeOnRadialSet,
    YDerivativeOnRadialSet,
    ZDerivativeDegenerateAtBasePoint,
}

impl fmt::Display for RadialFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RadialFailure::ValueOnRadialSet => "p|_Λ = 0 violated",
            RadialFailure::ThetaDerivativeOnRadialSet => "∂_θ p|_Λ = 0 violated",
            RadialFailure::YDerivativeOnRadialSet => "∂_y p|_Λ = 0 violated",
            RadialFailure::ZDerivativeDegenerateAtBasePoint => {
                "∂_z p|_Λ ≠ 0 at the base point violated"
            }
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RadialReport {
    pub in_class: bool,
    /// λ(y) = ∂_z p|_Λ; on success p = λ(y)·z mod 𝓘².
    pub lambda_factor: JetSeries,
    pub failures: Vec<RadialFailure>,
}

/// Membership check for the radial class on the principal part of `p`.
pub fn radial_check(symbol: &ClassicalSymbol) -> RadialReport {
    radial_check_jet(symbol.principal())
}

pub fn radial_check_jet(p: &JetSeries) -> RadialReport {
    let vars = p.caps().vars();
    let mut failures = Vec::new();
    if !p.y_only_part().is_zero() {
        failures.push(RadialFailure::ValueOnRadialSet);
    }
    if (0..vars).any(|i| !p.derive(Var::Theta(i)).y_only_part().is_zero()) {
        failures.push(RadialFailure::ThetaDerivativeOnRadialSet);
    }
    if (0..vars).any(|i| !p.derive(Var::Y(i)).y_only_part().is_zero()) {
        failures.push(RadialFailure::YDerivativeOnRadialSet);
    }
    let lambda = p.derive(Var::Z).y_only_part();
    if lambda.constant_term().is_zero() {
        failures.push(RadialFailure::ZDerivativeDegenerateAtBasePoint);
    }
    RadialReport { in_class: failures.is_empty(), lambda_factor: lambda, failures }
}
