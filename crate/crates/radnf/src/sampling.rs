//! Seeded sample generators and the bracket-versus-oracle trial runner
//! shared by the test suites and the verify-hamilton command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec;
use crate::jet::{JetCaps, JetSeries, Monomial};
use crate::rational::Rational;
use crate::symbol::{chart_hamilton_field, graded_bracket, graded_bracket_oracle, ClassicalSymbol};

/// Generator for trial `index` under `master_seed`. Each trial owns its own
/// stream, so a parallel schedule cannot change what gets drawn.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

fn small_rational(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.random_range(-9..=9), rng.random_range(1..=6))
}

fn nonzero_rational(rng: &mut impl Rng) -> Rational {
    loop {
        let c = small_rational(rng);
        if !c.is_zero() {
            return c;
        }
    }
}

fn random_monomial(caps: JetCaps, min_fil: u32, max_degree: u32, rng: &mut impl Rng) -> Monomial {
    let vars = caps.vars();
    assert!(min_fil <= max_degree, "empty degree range");
    loop {
        let degree = rng.random_range(min_fil..=max_degree);
        let mut z = 0u32;
        let mut theta = vec![0u32; vars];
        let mut y = vec![0u32; vars];
        for _ in 0..degree {
            match rng.random_range(0..3u32) {
                0 => z += 1,
                1 => theta[rng.random_range(0..vars)] += 1,
                _ => y[rng.random_range(0..vars)] += 1,
            }
        }
        let m = Monomial::new(z, theta, y);
        if m.filtration() >= min_fil && m.filtration() < caps.fil_cap && m.y_degree() <= caps.y_cap
        {
            return m;
        }
    }
}

/// Sparse jet with at most `terms` monomials of total degree ≤ `max_degree`.
pub fn random_jet(caps: JetCaps, max_degree: u32, terms: usize, rng: &mut impl Rng) -> JetSeries {
    let entries: Vec<_> = (0..terms)
        .map(|_| (random_monomial(caps, 0, max_degree, rng), small_rational(rng)))
        .collect();
    JetSeries::from_terms(entries, caps).expect("sampled within caps")
}

/// Sparse jet all of whose terms have filtration ≥ `min_fil`.
pub fn random_jet_in_ideal(
    caps: JetCaps,
    min_fil: u32,
    max_degree: u32,
    terms: usize,
    rng: &mut impl Rng,
) -> JetSeries {
    let entries: Vec<_> = (0..terms)
        .map(|_| (random_monomial(caps, min_fil, max_degree, rng), small_rational(rng)))
        .collect();
    JetSeries::from_terms(entries, caps).expect("sampled within caps")
}

/// Random member of the radial class: λ(y)·z with λ(0) ≠ 0 plus arbitrary
/// terms of filtration ≥ 2 (any such term is admissible for the class).
pub fn random_radial_principal(caps: JetCaps, rng: &mut impl Rng) -> JetSeries {
    let vars = caps.vars();
    let mut entries = vec![(Monomial::new(1, vec![0; vars], vec![0; vars]), nonzero_rational(rng))];
    for _ in 0..3 {
        let y: Vec<u32> = (0..vars).map(|_| rng.random_range(0..=2u32)).collect();
        let deg: u32 = y.iter().sum();
        if deg == 0 || deg > caps.y_cap {
            continue;
        }
        entries.push((Monomial::new(1, vec![0; vars], y), small_rational(rng)));
    }
    let junk_degree = (caps.fil_cap - 1).max(2);
    for _ in 0..6 {
        entries.push((random_monomial(caps, 2, junk_degree, rng), small_rational(rng)));
    }
    JetSeries::from_terms(entries, caps).expect("sampled within caps")
}

/// Classical symbol with a radial principal part and `depth` unconstrained
/// lower-order components.
pub fn random_classical_symbol(
    caps: JetCaps,
    order: i64,
    depth: usize,
    rng: &mut impl Rng,
) -> ClassicalSymbol {
    let mut components = vec![random_radial_principal(caps, rng)];
    let degree = (caps.fil_cap - 1).max(2);
    for _ in 0..depth {
        components.push(random_jet(caps, degree, 5, rng));
    }
    ClassicalSymbol::new(order, components).expect("components share caps")
}

/// Caps wide enough that brackets of jets of total degree ≤ `max_degree`
/// never truncate, keeping the chart route and the oracle route comparable
/// by exact equality.
pub fn bracket_safe_caps(n: usize, max_degree: u32) -> JetCaps {
    let width = 2 * max_degree.max(1);
    JetCaps::new(n, width, width)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HamiltonTrialReport {
    pub n: usize,
    pub degree: u32,
    pub trials: usize,
    pub matches: usize,
    pub seed: u64,
    pub first_mismatch: Option<String>,
}

impl HamiltonTrialReport {
    pub fn all_match(&self) -> bool {
        self.matches == self.trials
    }
}

/// One seeded trial: the chart-frame graded bracket against the canonical
/// Laurent route at random weights, and the chart Hamilton field applied to
/// every coordinate against the weight-(1,0) oracle bracket.
fn hamilton_trial(caps: JetCaps, degree: u32, seed: u64, index: u64) -> Option<String> {
    let mut rng = trial_rng(seed, index);
    let a = random_jet(caps, degree, 6, &mut rng);
    let b = random_jet(caps, degree, 6, &mut rng);
    let s = rng.random_range(-3..=3i64);
    let t = rng.random_range(-3..=3i64);
    let chart = graded_bracket(&a, s, &b, t);
    match graded_bracket_oracle(&a, s, &b, t) {
        Ok(oracle) if oracle == chart => {}
        Ok(oracle) => {
            return Some(format!(
                "trial {index}: bracket mismatch at weights ({s}, {t}): chart [{chart}] vs oracle [{oracle}]"
            ))
        }
        Err(e) => return Some(format!("trial {index}: oracle conversion failed: {}", e.0)),
    }
    let field = chart_hamilton_field(&a);
    let vars = caps.vars();
    let mut coords = vec![("z".to_string(), JetSeries::coord_z(caps))];
    for i in 0..vars {
        coords.push((format!("theta{}", i + 1), JetSeries::coord_theta(caps, i)));
        coords.push((format!("y{}", i + 1), JetSeries::coord_y(caps, i)));
    }
    for (name, coord) in coords {
        let via_field = field.apply(&coord);
        match graded_bracket_oracle(&a, 1, &coord, 0) {
            Ok(oracle) if oracle == via_field => {}
            Ok(oracle) => {
                return Some(format!(
                    "trial {index}: hamilton field on {name}: [{via_field}] vs oracle [{oracle}]"
                ))
            }
            Err(e) => {
                return Some(format!("trial {index}: oracle conversion failed on {name}: {}", e.0))
            }
        }
    }
    None
}

/// Runs `trials` independent seeded comparisons; exact rational equality.
pub fn run_hamilton_trials(n: usize, degree: u32, trials: usize, seed: u64) -> HamiltonTrialReport {
    let caps = bracket_safe_caps(n, degree);
    let indices: Vec<u64> = (0..trials as u64).collect();
    let outcomes = exec::map_collect(&indices, |&i| hamilton_trial(caps, degree, seed, i));
    let matches = outcomes.iter().filter(|o| o.is_none()).count();
    let first_mismatch = outcomes.into_iter().flatten().next();
    HamiltonTrialReport { n, degree, trials, matches, seed, first_mismatch }
}
