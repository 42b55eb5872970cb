//! Truncated jets at the model radial set Λ = {z = 0, θ = 0}.
//!
//! A `JetSeries` is a sparse polynomial in (z, θ₁..θ_{n−1}, y₁..y_{n−1}) with
//! exact rational coefficients. It stands for the degree-0 representative of a
//! homogeneous function near the base point q∞ = (y=0, z=0, θ=0, ρ=0), known
//! modulo two truncation ideals: the filtration ideal generated by monomials
//! with a + |α| ≥ N (powers of 𝓘 = z·C^∞ + Σ θ_i·C^∞) and the y-degree ideal
//! |β| > M. All operations are exact modulo those caps.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::rational::Rational;

/// Variables of the chart: z, θ_i, y_i (indices 0-based; rendered 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Z,
    Theta(usize),
    Y(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JetError {
    #[error("monomial {monomial} violates caps {caps}")]
    CapViolation { monomial: String, caps: String },
    #[error("exponent vector has length {got}, expected n-1 = {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("jets have different caps ({left} vs {right})")]
    CapsMismatch { left: String, right: String },
    #[error("zero constant term: jet is not invertible")]
    NotElliptic,
}

/// Truncation parameters. Monomials kept satisfy a + |α| < `fil_cap` and
/// |β| ≤ `y_cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct JetCaps {
    pub n: usize,
    pub fil_cap: u32,
    pub y_cap: u32,
}

impl JetCaps {
    pub fn new(n: usize, fil_cap: u32, y_cap: u32) -> Self {
        assert!(n >= 2, "dimension n must be at least 2");
        assert!(fil_cap >= 1, "filtration cap must be at least 1");
        JetCaps { n, fil_cap, y_cap }
    }

    /// Number of θ (equivalently y) variables.
    pub fn vars(&self) -> usize {
        self.n - 1
    }

    fn admits(&self, m: &Monomial) -> bool {
        m.filtration() < self.fil_cap && m.y_degree() <= self.y_cap
    }
}

impl fmt::Display for JetCaps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, N={}, M={})", self.n, self.fil_cap, self.y_cap)
    }
}

/// z^a θ^α y^β with all exponents ≥ 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub z: u32,
    pub theta: Vec<u32>,
    pub y: Vec<u32>,
}

impl Monomial {
    pub fn new(z: u32, theta: Vec<u32>, y: Vec<u32>) -> Self {
        Monomial { z, theta, y }
    }

    pub fn unit(vars: usize) -> Self {
        Monomial { z: 0, theta: vec![0; vars], y: vec![0; vars] }
    }

    /// a + |α|: vanishing order along the filtration ideal.
    pub fn filtration(&self) -> u32 {
        self.z + self.theta.iter().sum::<u32>()
    }

    pub fn theta_degree(&self) -> u32 {
        self.theta.iter().sum()
    }

    pub fn y_degree(&self) -> u32 {
        self.y.iter().sum()
    }

    pub fn total_degree(&self) -> u32 {
        self.filtration() + self.y_degree()
    }

    pub fn is_unit(&self) -> bool {
        self.total_degree() == 0
    }

    pub fn is_y_only(&self) -> bool {
        self.filtration() == 0
    }

    fn check_dims(&self, vars: usize) -> Result<(), JetError> {
        for len in [self.theta.len(), self.y.len()] {
            if len != vars {
                return Err(JetError::DimensionMismatch { expected: vars, got: len });
            }
        }
        Ok(())
    }

    fn product(&self, other: &Monomial) -> Monomial {
        Monomial {
            z: self.z + other.z,
            theta: self.theta.iter().zip(&other.theta).map(|(a, b)| a + b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect(),
        }
    }
}

// Graded lexicographic order on (a, alpha, beta): total degree first, then
// the exponent tuple. Fixes the canonical term order of every rendering.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.z.cmp(&other.z))
            .then_with(|| self.theta.cmp(&other.theta))
            .then_with(|| self.y.cmp(&other.y))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let var = |name: &str, i: usize, e: u32| {
            if e == 1 {
                format!("{name}{}", i + 1)
            } else {
                format!("{name}{}^{e}", i + 1)
            }
        };
        if self.z == 1 {
            parts.push("z".into());
        } else if self.z > 1 {
            parts.push(format!("z^{}", self.z));
        }
        for (i, &e) in self.theta.iter().enumerate() {
            if e > 0 {
                parts.push(var("theta", i, e));
            }
        }
        for (i, &e) in self.y.iter().enumerate() {
            if e > 0 {
                parts.push(var("y", i, e));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Sparse truncated jet: finite map Monomial → Rational with no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetSeries {
    caps: JetCaps,
    terms: BTreeMap<Monomial, Rational>,
}

impl JetSeries {
    pub fn zero(caps: JetCaps) -> Self {
        JetSeries { caps, terms: BTreeMap::new() }
    }

    pub fn one(caps: JetCaps) -> Self {
        Self::constant(caps, Rational::one())
    }

    pub fn constant(caps: JetCaps, c: Rational) -> Self {
        let mut jet = Self::zero(caps);
        if !c.is_zero() {
            jet.terms.insert(Monomial::unit(caps.vars()), c);
        }
        jet
    }

    /// The coordinate jet z.
    pub fn coord_z(caps: JetCaps) -> Self {
        let mut m = Monomial::unit(caps.vars());
        m.z = 1;
        Self::from_terms(vec![(m, Rational::one())], caps).expect("z respects any caps with N >= 2")
    }

    /// The coordinate jet θ_i (0-based index).
    pub fn coord_theta(caps: JetCaps, i: usize) -> Self {
        let mut m = Monomial::unit(caps.vars());
        m.theta[i] = 1;
        Self::from_terms(vec![(m, Rational::one())], caps).expect("theta respects caps with N >= 2")
    }

    /// The coordinate jet y_i (0-based index).
    pub fn coord_y(caps: JetCaps, i: usize) -> Self {
        let mut m = Monomial::unit(caps.vars());
        m.y[i] = 1;
        Self::from_terms(vec![(m, Rational::one())], caps).expect("y respects caps with M >= 1")
    }

    /// Build from (monomial, coefficient) entries: duplicates are summed,
    /// zeros dropped, out-of-cap monomials rejected.
    pub fn from_terms(
        entries: impl IntoIterator<Item = (Monomial, Rational)>,
        caps: JetCaps,
    ) -> Result<Self, JetError> {
        let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (m, c) in entries {
            m.check_dims(caps.vars())?;
            if !caps.admits(&m) {
                return Err(JetError::CapViolation {
                    monomial: m.to_string(),
                    caps: caps.to_string(),
                });
            }
            let entry = terms.entry(m).or_insert_with(Rational::zero);
            *entry += &c;
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(JetSeries { caps, terms })
    }

    pub fn caps(&self) -> JetCaps {
        self.caps
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Monomial::unit(self.caps.vars()))
    }

    fn assert_same_caps(&self, other: &JetSeries) {
        assert!(self.caps == other.caps, "jet caps mismatch: {} vs {}", self.caps, other.caps);
    }

    pub fn try_add(&self, other: &JetSeries) -> Result<JetSeries, JetError> {
        if self.caps != other.caps {
            return Err(JetError::CapsMismatch {
                left: self.caps.to_string(),
                right: other.caps.to_string(),
            });
        }
        Ok(self + other)
    }

    pub fn try_mul(&self, other: &JetSeries) -> Result<JetSeries, JetError> {
        if self.caps != other.caps {
            return Err(JetError::CapsMismatch {
                left: self.caps.to_string(),
                right: other.caps.to_string(),
            });
        }
        Ok(self * other)
    }

    pub fn scale(&self, c: &Rational) -> JetSeries {
        if c.is_zero() {
            return JetSeries::zero(self.caps);
        }
        let terms = self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect();
        JetSeries { caps: self.caps, terms }
    }

    /// Formal partial derivative. ∂_z and ∂_θ lower the filtration of each
    /// monomial by exactly 1; ∂_y lowers y-degree by 1.
    pub fn derive(&self, var: Var) -> JetSeries {
        let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (exp, mut dm) = match var {
                Var::Z => (m.z, m.clone()),
                Var::Theta(i) => (m.theta[i], m.clone()),
                Var::Y(i) => (m.y[i], m.clone()),
            };
            if exp == 0 {
                continue;
            }
            match var {
                Var::Z => dm.z -= 1,
                Var::Theta(i) => dm.theta[i] -= 1,
                Var::Y(i) => dm.y[i] -= 1,
            }
            let coeff = c * &Rational::from_integer(exp as i64);
            let entry = terms.entry(dm).or_insert_with(Rational::zero);
            *entry += &coeff;
        }
        terms.retain(|_, c| !c.is_zero());
        JetSeries { caps: self.caps, terms }
    }

    /// min(a + |α|) over stored terms; `None` means +∞ (the zero jet).
    pub fn filtration_order(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::filtration).min()
    }

    /// True when the jet lies in 𝓘^l, i.e. filtration_order ≥ l.
    pub fn vanishes_to_order(&self, l: u32) -> bool {
        self.filtration_order().map_or(true, |f| f >= l)
    }

    /// Terms with a + |α| exactly l.
    pub fn level_part(&self, l: u32) -> JetSeries {
        self.filter_terms(|m| m.filtration() == l)
    }

    /// Terms with a + |α| ≥ l.
    pub fn tail_from_level(&self, l: u32) -> JetSeries {
        self.filter_terms(|m| m.filtration() >= l)
    }

    /// Terms free of z and θ.
    pub fn y_only_part(&self) -> JetSeries {
        self.filter_terms(Monomial::is_y_only)
    }

    pub fn is_y_only(&self) -> bool {
        self.terms.keys().all(Monomial::is_y_only)
    }

    fn filter_terms(&self, keep: impl Fn(&Monomial) -> bool) -> JetSeries {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| keep(m))
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        JetSeries { caps: self.caps, terms }
    }

    /// Geometric-series inverse; requires a nonzero constant term.
    pub fn invert(&self) -> Result<JetSeries, JetError> {
        let c = self.constant_term();
        let c_inv = c.recip().ok_or(JetError::NotElliptic)?;
        // a = c(1 + u); 1/a = (1/c) Σ (−u)^j, u nilpotent modulo caps.
        let u = &self.scale(&c_inv) - &JetSeries::one(self.caps);
        let neg_u = -&u;
        let mut sum = JetSeries::one(self.caps);
        let mut power = JetSeries::one(self.caps);
        let max_iter = (self.caps.fil_cap + self.caps.y_cap + 1) as usize;
        for _ in 0..max_iter {
            power = &power * &neg_u;
            if power.is_zero() {
                break;
            }
            sum = &sum + &power;
        }
        debug_assert!(power.is_zero(), "geometric series did not terminate");
        Ok(sum.scale(&c_inv))
    }

    /// Numerical evaluation at a chart point; boundary to the flow layer and
    /// the cross-check tests.
    pub fn eval_f64(&self, y: &[f64], z: f64, theta: &[f64]) -> f64 {
        assert_eq!(y.len(), self.caps.vars());
        assert_eq!(theta.len(), self.caps.vars());
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut v = c.to_f64() * z.powi(m.z as i32);
            for (i, &e) in m.theta.iter().enumerate() {
                if e > 0 {
                    v *= theta[i].powi(e as i32);
                }
            }
            for (i, &e) in m.y.iter().enumerate() {
                if e > 0 {
                    v *= y[i].powi(e as i32);
                }
            }
            acc += v;
        }
        acc
    }
}

impl std::ops::Add for &JetSeries {
    type Output = JetSeries;
    fn add(self, rhs: &JetSeries) -> JetSeries {
        self.assert_same_caps(rhs);
        let mut terms = self.terms.clone();
        for (m, c) in &rhs.terms {
            let entry = terms.entry(m.clone()).or_insert_with(Rational::zero);
            *entry += c;
        }
        terms.retain(|_, c| !c.is_zero());
        JetSeries { caps: self.caps, terms }
    }
}

impl std::ops::Sub for &JetSeries {
    type Output = JetSeries;
    fn sub(self, rhs: &JetSeries) -> JetSeries {
        self + &(-rhs)
    }
}

impl std::ops::Mul for &JetSeries {
    type Output = JetSeries;
    fn mul(self, rhs: &JetSeries) -> JetSeries {
        self.assert_same_caps(rhs);
        let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m = ma.product(mb);
                if !self.caps.admits(&m) {
                    continue;
                }
                let entry = terms.entry(m).or_insert_with(Rational::zero);
                *entry += &(ca * cb);
            }
        }
        terms.retain(|_, c| !c.is_zero());
        JetSeries { caps: self.caps, terms }
    }
}

impl std::ops::Neg for &JetSeries {
    type Output = JetSeries;
    fn neg(self) -> JetSeries {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect();
        JetSeries { caps: self.caps, terms }
    }
}

impl fmt::Display for JetSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let (sign, mag) = if c.is_negative() { ("-", c.abs()) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            if m.is_unit() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag} {m}")?;
            }
        }
        Ok(())
    }
}

// Serialized form: caps plus the term list in canonical monomial order, so
// emitted certificates are byte-stable.
#[derive(serde::Serialize, serde::Deserialize)]
struct TermRepr {
    coeff: Rational,
    z: u32,
    theta: Vec<u32>,
    y: Vec<u32>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct JetRepr {
    caps: JetCaps,
    terms: Vec<TermRepr>,
}

impl serde::Serialize for JetSeries {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = JetRepr {
            caps: self.caps,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermRepr {
                    coeff: c.clone(),
                    z: m.z,
                    theta: m.theta.clone(),
                    y: m.y.clone(),
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for JetSeries {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = JetRepr::deserialize(deserializer)?;
        let entries = repr.terms.into_iter().map(|t| (Monomial::new(t.z, t.theta, t.y), t.coeff));
        JetSeries::from_terms(entries, repr.caps).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> JetCaps {
        JetCaps::new(2, 4, 2)
    }

    fn mono(z: u32, t: u32, y: u32) -> Monomial {
        Monomial::new(z, vec![t], vec![y])
    }

    #[test]
    fn make_jet_identity_construction() {
        let jet = JetSeries::from_terms([(mono(1, 0, 0), Rational::one())], caps()).unwrap();
        assert_eq!(jet, JetSeries::coord_z(caps()));
        assert_eq!(jet.to_string(), "z");
    }

    #[test]
    fn make_jet_cancellation() {
        let jet = JetSeries::from_terms(
            [(mono(1, 1, 0), Rational::one()), (mono(1, 1, 0), Rational::from_integer(-1))],
            caps(),
        )
        .unwrap();
        assert!(jet.is_zero());
    }

    #[test]
    fn make_jet_cap_boundary_is_exclusive() {
        let err = JetSeries::from_terms([(mono(4, 0, 0), Rational::one())], caps()).unwrap_err();
        assert!(matches!(err, JetError::CapViolation { .. }));
    }

    #[test]
    fn make_jet_dimension_mismatch() {
        let bad = Monomial::new(1, vec![0, 0], vec![0]);
        let err = JetSeries::from_terms([(bad, Rational::one())], caps()).unwrap_err();
        assert_eq!(err, JetError::DimensionMismatch { expected: 1, got: 2 });
    }

    #[test]
    fn mul_squares_z() {
        let z = JetSeries::coord_z(caps());
        let expect = JetSeries::from_terms([(mono(2, 0, 0), Rational::one())], caps()).unwrap();
        assert_eq!(&z * &z, expect);
    }

    #[test]
    fn mul_difference_of_squares_in_y() {
        let one = JetSeries::one(caps());
        let y1 = JetSeries::coord_y(caps(), 0);
        let lhs = &(&one + &y1) * &(&one - &y1);
        let expect = &one - &(&y1 * &y1);
        assert_eq!(lhs, expect);
    }

    #[test]
    fn mul_truncates_products_beyond_filtration_cap() {
        // zθ₁ · z²θ₁ has filtration 5 ≥ N = 4: truncated to zero.
        let a = JetSeries::from_terms([(mono(1, 1, 0), Rational::one())], caps()).unwrap();
        let b = JetSeries::from_terms([(mono(2, 1, 0), Rational::one())], caps()).unwrap();
        assert!((&a * &b).is_zero());
    }

    // Brute-force product oracle: multiply without caps, then truncate.
    fn oracle_mul(a: &JetSeries, b: &JetSeries) -> JetSeries {
        let caps = a.caps();
        let mut entries: Vec<(Monomial, Rational)> = Vec::new();
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                let m = ma.product(mb);
                if m.filtration() < caps.fil_cap && m.y_degree() <= caps.y_cap {
                    entries.push((m, ca * cb));
                }
            }
        }
        JetSeries::from_terms(entries, caps).unwrap()
    }

    #[test]
    fn mul_matches_brute_force_oracle() {
        let z = JetSeries::coord_z(caps());
        let t = JetSeries::coord_theta(caps(), 0);
        let y = JetSeries::coord_y(caps(), 0);
        let a = &(&z + &t) * &(&y + &JetSeries::one(caps()));
        let b = &(&z - &y) * &(&t + &z);
        assert_eq!(&a * &b, oracle_mul(&a, &b));
    }

    #[test]
    fn derive_examples() {
        let c = caps();
        let z2t = JetSeries::from_terms([(mono(2, 1, 0), Rational::one())], c).unwrap();
        let expect =
            JetSeries::from_terms([(mono(1, 1, 0), Rational::from_integer(2))], c).unwrap();
        assert_eq!(z2t.derive(Var::Z), expect);

        let y2 = JetSeries::from_terms([(mono(0, 0, 2), Rational::one())], c).unwrap();
        assert!(y2.derive(Var::Theta(0)).is_zero());

        let yz = JetSeries::from_terms([(mono(1, 0, 1), Rational::one())], c).unwrap();
        assert_eq!(yz.derive(Var::Y(0)), JetSeries::coord_z(c));
    }

    #[test]
    fn filtration_order_examples() {
        let c = caps();
        let a = JetSeries::from_terms(
            [(mono(1, 1, 0), Rational::one()), (mono(3, 0, 0), Rational::one())],
            c,
        )
        .unwrap();
        assert_eq!(a.filtration_order(), Some(2));

        let y2 = JetSeries::from_terms([(mono(0, 0, 2), Rational::one())], c).unwrap();
        assert_eq!(y2.filtration_order(), Some(0));

        assert_eq!(JetSeries::zero(c).filtration_order(), None);
        assert!(JetSeries::zero(c).vanishes_to_order(99));
    }

    #[test]
    fn invert_one_is_one() {
        let one = JetSeries::one(caps());
        assert_eq!(one.invert().unwrap(), one);
    }

    #[test]
    fn invert_geometric_series() {
        let c = JetCaps::new(2, 4, 3);
        let one = JetSeries::one(c);
        let y1 = JetSeries::coord_y(c, 0);
        let inv = (&one + &y1).invert().unwrap();
        // 1 − y₁ + y₁² − y₁³ up to the y-cap
        let mut expect = JetSeries::one(c);
        let mut sign = Rational::from_integer(-1);
        let mut pow = y1.clone();
        for _ in 0..3 {
            expect = &expect + &pow.scale(&sign);
            pow = &pow * &y1;
            sign = -sign;
        }
        assert_eq!(inv, expect);
        assert_eq!(&inv * &(&one + &y1), one);
    }

    #[test]
    fn invert_rejects_zero_constant_term() {
        let err = JetSeries::coord_z(caps()).invert().unwrap_err();
        assert_eq!(err, JetError::NotElliptic);
    }

    #[test]
    fn caps_mismatch_is_reported() {
        let a = JetSeries::one(JetCaps::new(2, 4, 2));
        let b = JetSeries::one(JetCaps::new(2, 5, 2));
        assert!(matches!(a.try_add(&b), Err(JetError::CapsMismatch { .. })));
        assert!(matches!(a.try_mul(&b), Err(JetError::CapsMismatch { .. })));
    }

    #[test]
    fn display_renders_canonical_order() {
        let c = caps();
        let jet = JetSeries::from_terms(
            [
                (mono(1, 1, 0), Rational::new(-1, 2)),
                (mono(1, 0, 0), Rational::from_integer(2)),
                (mono(0, 0, 0), Rational::one()),
            ],
            c,
        )
        .unwrap();
        assert_eq!(jet.to_string(), "1 + 2 z - 1/2 z theta1");
    }

    #[test]
    fn serde_round_trip() {
        let c = caps();
        let jet = JetSeries::from_terms(
            [(mono(1, 1, 0), Rational::new(-2, 3)), (mono(0, 0, 2), Rational::one())],
            c,
        )
        .unwrap();
        let json = serde_json::to_string(&jet).unwrap();
        let back: JetSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(jet, back);
    }
}
