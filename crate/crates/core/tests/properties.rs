use dunkl_core::adapted::weighted_sphere_rule;
use dunkl_core::dunklnum::{RadialProfile, SmoothFunction};
use dunkl_core::inequalities::{
    hr_weighted_quotient, mode_coefficients, rellich_quotient, richardson_limit, Quotient,
};
use dunkl_core::polyalg::random_polynomial;
use dunkl_core::quad::{MeasureCloud, RadialGrid};
use dunkl_core::rational::{q, qf, Q};
use dunkl_core::reflection::{build_root_system, orbit_count, RootFamily, RootSystem};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family() -> impl Strategy<Value = RootFamily> {
    prop_oneof![
        (1usize..=3).prop_map(RootFamily::A),
        (2usize..=3).prop_map(RootFamily::B),
        (1usize..=4).prop_map(RootFamily::Z2),
        (3usize..=6).prop_map(RootFamily::I2),
    ]
}

fn system() -> impl Strategy<Value = RootSystem> {
    (family(), prop::collection::vec((0i64..=6, 1i64..=4), 4)).prop_map(|(fam, ks)| {
        let o = orbit_count(fam).unwrap();
        let ks: Vec<Q> = ks.iter().take(o).map(|&(n, d)| qf(n, d)).collect();
        build_root_system(fam, &ks).unwrap()
    })
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflections_are_involutions_preserving_the_weight(
        (rs, x) in system().prop_flat_map(|rs| { let d = rs.dimension(); (Just(rs), point(d)) })
    ) {
        let w = rs.weight(&x);
        for root in rs.positive_roots() {
            let y = root.reflect(&x);
            let back = root.reflect(&y);
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let wy = rs.weight(&y);
            prop_assert!((wy - w).abs() <= 1e-10 * w.max(1.0), "{} vs {}", wy, w);
        }
    }

    #[test]
    fn weight_is_homogeneous(
        (rs, x) in system().prop_flat_map(|rs| { let d = rs.dimension(); (Just(rs), point(d)) }),
        t in 0.1f64..4.0,
    ) {
        let scaled: Vec<f64> = x.iter().map(|c| t * c).collect();
        let expected = t.powf(2.0 * rs.gamma_f64()) * rs.weight(&x);
        prop_assert!((rs.weight(&scaled) - expected).abs() <= 1e-10 * expected.max(1e-300));
    }

    #[test]
    fn richardson_is_exact_on_quadratics(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let eps = [0.3, 0.1, 0.03, 0.01];
        let vals: Vec<f64> = eps.iter().map(|e| a + b * e + c * e * e).collect();
        prop_assert!((richardson_limit(&eps, &vals) - a).abs() < 1e-12);
    }

    #[test]
    fn mode_remainders_are_nonnegative(two_gamma in 0i64..=8, extra in 0usize..=4, n in 2u32..=12) {
        let gamma = qf(two_gamma, 2);
        let dim = 5 + two_gamma as usize + extra;
        let nbar = q(dim as i64) + q(two_gamma);
        let c = &nbar * &nbar / q(4);
        let m = mode_coefficients(&nbar, &gamma, n, &c);
        prop_assert!(m.d >= Q::zero(), "N={} γ={} n={} D={}", dim, gamma, n, m.d);
    }
}

fn cloud(rs: &RootSystem, origin_power: f64) -> MeasureCloud {
    let grid = RadialGrid::uniform(8.0, 16, 16).unwrap().with_origin_power(origin_power);
    let rule = weighted_sphere_rule(rs, rs.dimension(), 12).unwrap();
    MeasureCloud::polar(rs, &grid, &rule).unwrap()
}

fn damped(dim: usize, seed: u64) -> SmoothFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_polynomial(&mut rng, dim, 3, 4);
    let p = if p.is_zero() { random_polynomial(&mut rng, dim, 3, 4) } else { p };
    SmoothFunction::radial_times_polynomial(RadialProfile::gaussian(1.0), &p)
}

fn close(a: &Quotient, b: &Quotient) -> bool {
    (a.value / b.value - 1.0).abs() < 1e-8
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn weighted_hardy_rellich_quotient_is_scale_invariant(
        seed in 0u64..1000,
        c in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0],
        lambda in 0.75f64..1.35,
        k in prop_oneof![Just(q(0)), Just(q(1)), Just(qf(1, 2))],
    ) {
        let rs = build_root_system(RootFamily::A(2), &[k]).unwrap();
        let cl = cloud(&rs, -2.0);
        let u = damped(3, seed);
        let base = hr_weighted_quotient(&rs, &u, &cl).unwrap();
        let scaled = hr_weighted_quotient(&rs, &u.scaled(c), &cl).unwrap();
        let dilated = hr_weighted_quotient(&rs, &u.dilated(lambda), &cl).unwrap();
        prop_assert!(close(&base, &scaled), "{:?} vs {:?}", base, scaled);
        prop_assert!(close(&base, &dilated), "{:?} vs {:?}", base, dilated);
    }

    #[test]
    fn rellich_quotient_is_scale_invariant(
        seed in 0u64..1000,
        c in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0],
        lambda in 0.75f64..1.35,
    ) {
        let rs = build_root_system(RootFamily::B(2), &[q(1), qf(1, 2)]).unwrap();
        let cl = cloud(&rs, -4.0);
        let u = damped(2, seed);
        let base = rellich_quotient(&rs, &u, &cl).unwrap();
        let scaled = rellich_quotient(&rs, &u.scaled(c), &cl).unwrap();
        let dilated = rellich_quotient(&rs, &u.dilated(lambda), &cl).unwrap();
        prop_assert!(close(&base, &scaled), "{:?} vs {:?}", base, scaled);
        prop_assert!(close(&base, &dilated), "{:?} vs {:?}", base, dilated);
    }
}
