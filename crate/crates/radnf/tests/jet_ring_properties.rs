//! Ring and derivation laws of the truncated jet algebra, exercised on
//! arbitrary in-cap jets. Everything here is exact rational equality.

use proptest::prelude::*;
use radnf::jet::{JetCaps, JetSeries, Monomial, Var};
use radnf::rational::Rational;

fn caps() -> JetCaps {
    JetCaps::new(2, 6, 4)
}

type RawEntry = ((u32, u32, u32), (i64, i64));

fn build_jet(entries: Vec<RawEntry>) -> JetSeries {
    let caps = caps();
    let filtered = entries.into_iter().filter_map(|((z, t, y), (nu, de))| {
        let m = Monomial::new(z, vec![t], vec![y]);
        (m.filtration() < caps.fil_cap && m.y_degree() <= caps.y_cap)
            .then(|| (m, Rational::new(nu, de)))
    });
    JetSeries::from_terms(filtered, caps).unwrap()
}

fn arb_jet() -> impl Strategy<Value = JetSeries> {
    proptest::collection::vec(((0u32..4, 0u32..4, 0u32..4), (-9i64..=9, 1i64..=6)), 0..6)
        .prop_map(build_jet)
}

/// Jets whose pairwise products stay strictly inside the caps, so identities
/// that truncation would disturb can be demanded exactly.
fn arb_small_jet() -> impl Strategy<Value = JetSeries> {
    proptest::collection::vec(((0u32..2, 0u32..2, 0u32..3), (-9i64..=9, 1i64..=6)), 0..5)
        .prop_map(build_jet)
}

proptest! {
    #[test]
    fn addition_commutes(a in arb_jet(), b in arb_jet()) {
        prop_assert_eq!(&a + &b, &b + &a);
    }

    #[test]
    fn addition_associates(a in arb_jet(), b in arb_jet(), c in arb_jet()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
    }

    #[test]
    fn multiplication_commutes(a in arb_jet(), b in arb_jet()) {
        prop_assert_eq!(&a * &b, &b * &a);
    }

    #[test]
    fn multiplication_associates(a in arb_jet(), b in arb_jet(), c in arb_jet()) {
        // truncation is an ideal quotient, so associativity survives it
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn multiplication_distributes(a in arb_jet(), b in arb_jet(), c in arb_jet()) {
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn neutral_elements(a in arb_jet()) {
        prop_assert_eq!(&a + &JetSeries::zero(caps()), a.clone());
        prop_assert_eq!(&a * &JetSeries::one(caps()), a.clone());
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn product_filtration_adds(a in arb_jet(), b in arb_jet()) {
        let p = &a * &b;
        if let (Some(fa), Some(fb), Some(fp)) =
            (a.filtration_order(), b.filtration_order(), p.filtration_order())
        {
            prop_assert!(fp >= fa + fb);
        }
    }

    #[test]
    fn leibniz_exact_below_caps(a in arb_small_jet(), b in arb_small_jet()) {
        for var in [Var::Z, Var::Theta(0), Var::Y(0)] {
            let lhs = (&a * &b).derive(var);
            let rhs = &(&a.derive(var) * &b) + &(&a * &b.derive(var));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn leibniz_discrepancy_sits_at_the_boundary(a in arb_jet(), b in arb_jet()) {
        // dropped products have filtration ≥ N or y-degree > M, so the two
        // sides of the rule may only disagree right at those boundaries
        let c = caps();
        for var in [Var::Z, Var::Theta(0)] {
            let d = &(&a * &b).derive(var)
                - &(&(&a.derive(var) * &b) + &(&a * &b.derive(var)));
            prop_assert!(d.vanishes_to_order(c.fil_cap - 1), "{var:?}: {d}");
        }
        let d = &(&a * &b).derive(Var::Y(0))
            - &(&(&a.derive(Var::Y(0)) * &b) + &(&a * &b.derive(Var::Y(0))));
        prop_assert!(
            d.terms().all(|(m, _)| m.y_degree() == c.y_cap || m.filtration() >= c.fil_cap - 1),
            "{d}"
        );
    }

    #[test]
    fn inverse_multiplies_to_one(a in arb_jet(), c0 in 1i64..=9) {
        let unit = &a + &JetSeries::constant(caps(), Rational::new(c0, 1) - a.constant_term());
        let inv = unit.invert().unwrap();
        prop_assert_eq!(&unit * &inv, JetSeries::one(caps()));
    }

    #[test]
    fn derivatives_commute(a in arb_jet()) {
        let dz_then_dt = a.derive(Var::Z).derive(Var::Theta(0));
        let dt_then_dz = a.derive(Var::Theta(0)).derive(Var::Z);
        prop_assert_eq!(dz_then_dt, dt_then_dz);
        let dy_then_dz = a.derive(Var::Y(0)).derive(Var::Z);
        let dz_then_dy = a.derive(Var::Z).derive(Var::Y(0));
        prop_assert_eq!(dy_then_dz, dz_then_dy);
    }
}
