//! Structural properties of the finite p-adic grid: group laws, ultrametric
//! geometry, character algebra, and exact shell counts.

use num_rational::Ratio;
use pfield_core::padic::{
    add_mod, character, enumerate_grid, frac_part_pairing, negate, pairing_phase, point_norm,
    scalar_ord, split_plus_minus, sub_mod, ExactNorm, GridPoint, PrimeConfig,
};
use pfield_core::radial::shell_volume;
use proptest::prelude::*;

fn configs() -> Vec<PrimeConfig> {
    vec![
        PrimeConfig::new(3, 1, 1).unwrap(),
        PrimeConfig::new(3, 1, 2).unwrap(),
        PrimeConfig::new(5, 2, 1).unwrap(),
        PrimeConfig::new(7, 1, 1).unwrap(),
    ]
}

fn arb_point(cfg: PrimeConfig) -> impl Strategy<Value = GridPoint> {
    let m = cfg.modulus();
    let n = cfg.dim() as usize;
    prop::collection::vec(0..m, n)
        .prop_map(move |coords| GridPoint::new(coords, &cfg).expect("coords are reduced"))
}

fn norm_f64(x: &GridPoint, cfg: &PrimeConfig) -> f64 {
    point_norm(x, cfg).as_f64(cfg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ultrametric_inequality(
        (cfg, x, y, z) in prop::sample::select(configs()).prop_flat_map(|cfg| {
            (Just(cfg), arb_point(cfg), arb_point(cfg), arb_point(cfg))
        })
    ) {
        let xy = norm_f64(&sub_mod(&x, &y, &cfg), &cfg);
        let yz = norm_f64(&sub_mod(&y, &z, &cfg), &cfg);
        let xz = norm_f64(&sub_mod(&x, &z, &cfg), &cfg);
        prop_assert!(xz <= xy.max(yz) + 1e-15);
    }

    #[test]
    fn unequal_norms_force_the_maximum(
        (cfg, x, y) in prop::sample::select(configs()).prop_flat_map(|cfg| {
            (Just(cfg), arb_point(cfg), arb_point(cfg))
        })
    ) {
        let nx = point_norm(&x, &cfg);
        let ny = point_norm(&y, &cfg);
        prop_assume!(nx != ny);
        let sum = add_mod(&x, &y, &cfg);
        let expected = norm_f64(&x, &cfg).max(norm_f64(&y, &cfg));
        prop_assert_eq!(norm_f64(&sum, &cfg), expected);
    }

    #[test]
    fn negation_is_an_isometric_involution(
        (cfg, x) in prop::sample::select(configs()).prop_flat_map(|cfg| {
            (Just(cfg), arb_point(cfg))
        })
    ) {
        let neg = negate(&x, &cfg);
        prop_assert_eq!(point_norm(&neg, &cfg), point_norm(&x, &cfg));
        prop_assert_eq!(negate(&neg, &cfg), x.clone());
        let zero = add_mod(&x, &neg, &cfg);
        prop_assert!(zero.is_zero());
    }

    #[test]
    fn addition_is_a_commutative_group_law(
        (cfg, x, y, z) in prop::sample::select(configs()).prop_flat_map(|cfg| {
            (Just(cfg), arb_point(cfg), arb_point(cfg), arb_point(cfg))
        })
    ) {
        prop_assert_eq!(add_mod(&x, &y, &cfg), add_mod(&y, &x, &cfg));
        let left = add_mod(&add_mod(&x, &y, &cfg), &z, &cfg);
        let right = add_mod(&x, &add_mod(&y, &z, &cfg), &cfg);
        prop_assert_eq!(left, right);
        let zero = GridPoint::zero(&cfg);
        prop_assert_eq!(add_mod(&x, &zero, &cfg), x.clone());
    }

    #[test]
    fn characters_are_additive_in_each_slot(
        (cfg, x, y, z) in prop::sample::select(configs()).prop_flat_map(|cfg| {
            (Just(cfg), arb_point(cfg), arb_point(cfg), arb_point(cfg))
        })
    ) {
        // exact integer statement: the phase of a sum is the sum of phases
        let m = cfg.modulus();
        let lhs = pairing_phase(&x, &add_mod(&y, &z, &cfg), &cfg);
        let rhs = (pairing_phase(&x, &y, &cfg) + pairing_phase(&x, &z, &cfg)) % m;
        prop_assert_eq!(lhs, rhs);
        // and the pairing is symmetric
        prop_assert_eq!(
            pairing_phase(&x, &y, &cfg),
            pairing_phase(&y, &x, &cfg)
        );
        // the complex character agrees with its reduced fraction
        let (t, den) = frac_part_pairing(&x, &y, &cfg);
        let angle = 2.0 * std::f64::consts::PI * t as f64 / den as f64;
        let chi = character(&x, &y, &cfg);
        prop_assert!((chi.re - angle.cos()).abs() < 1e-12);
        prop_assert!((chi.im - angle.sin()).abs() < 1e-12);
    }
}

#[test]
fn enumeration_is_a_bijection_onto_the_grid() {
    for cfg in configs() {
        let points = enumerate_grid(&cfg).unwrap();
        assert_eq!(points.len() as u128, cfg.points_total());
        // distinct coordinates everywhere, and re-encoding finds each point
        let mut seen = std::collections::HashSet::new();
        for p in &points {
            assert!(seen.insert(p.coords().to_vec()), "duplicate point");
        }
    }
}

#[test]
fn shell_counts_match_exact_volumes() {
    for cfg in configs() {
        let points = enumerate_grid(&cfg).unwrap();
        let l = i64::from(cfg.level());
        let mut by_exp = std::collections::BTreeMap::new();
        let mut zeros = 0u64;
        for p in &points {
            match point_norm(p, &cfg) {
                ExactNorm::Zero => zeros += 1,
                ExactNorm::Pow(e) => *by_exp.entry(e).or_insert(0u64) += 1,
            }
        }
        assert_eq!(zeros, 1);
        // every nonzero norm is p^e with 1 - l <= e <= l
        for (&e, &count) in &by_exp {
            assert!(e >= 1 - l && e <= l, "norm exponent {e} out of range");
            // count * cell volume equals the shell volume exactly
            let total = Ratio::from_integer(count as i128)
                / Ratio::from_integer(cfg.points_total() as i128)
                * ball_total(&cfg);
            assert_eq!(total, shell_volume(e, &cfg), "shell p^{e} miscounted");
        }
        let nonzero: u64 = by_exp.values().sum();
        assert_eq!(nonzero + 1, points.len() as u64);
    }
}

fn ball_total(cfg: &PrimeConfig) -> Ratio<i128> {
    // the grid covers the ball of radius p^l, volume p^{lN}
    let e = i64::from(cfg.level()) * i64::from(cfg.dim());
    Ratio::from_integer((cfg.p() as i128).pow(e as u32))
}

#[test]
fn split_covers_the_grid_and_respects_negation() {
    for cfg in configs() {
        let (plus, minus) = split_plus_minus(&cfg).unwrap();
        let points = enumerate_grid(&cfg).unwrap();
        assert_eq!(plus.len(), minus.len());
        assert_eq!(plus.len() + minus.len() + 1, points.len());

        let plus_set: std::collections::HashSet<_> =
            plus.iter().map(|p| p.coords().to_vec()).collect();
        let minus_set: std::collections::HashSet<_> =
            minus.iter().map(|p| p.coords().to_vec()).collect();
        assert!(plus_set.is_disjoint(&minus_set));
        for p in &plus {
            let n = negate(p, &cfg);
            assert!(
                minus_set.contains(n.coords()),
                "negation must send the plus half onto the minus half"
            );
        }
    }
}

#[test]
fn scalar_valuation_counts_powers_of_p() {
    let cfg = PrimeConfig::new(3, 1, 2).unwrap();
    assert_eq!(scalar_ord(0, &cfg), None);
    // modulus 81; the window of representable valuations is [-2, 1]
    assert_eq!(scalar_ord(1, &cfg), Some(-2));
    assert_eq!(scalar_ord(3, &cfg), Some(-1));
    assert_eq!(scalar_ord(9, &cfg), Some(0));
    assert_eq!(scalar_ord(27, &cfg), Some(1));
    assert_eq!(scalar_ord(54, &cfg), Some(1));
    assert_eq!(scalar_ord(45, &cfg), Some(0));
}

#[test]
fn character_sums_vanish_off_the_origin() {
    // sum_x chi(x, y) = #G when y = 0 and 0 otherwise: exact orthogonality
    for cfg in [PrimeConfig::new(3, 1, 1).unwrap(), PrimeConfig::new(5, 2, 1).unwrap()] {
        let points = enumerate_grid(&cfg).unwrap();
        for y in &points {
            let sum: num_complex::Complex64 =
                points.iter().map(|x| character(x, y, &cfg)).sum();
            if y.is_zero() {
                assert!((sum.re - points.len() as f64).abs() < 1e-9);
                assert!(sum.im.abs() < 1e-9);
            } else {
                assert!(sum.norm() < 1e-9, "character sum {sum} should cancel");
            }
        }
    }
}
