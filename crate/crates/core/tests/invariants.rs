use opmeans::kubo_ando::{binary_mean, weighted_geometric, ReprFunction};
use opmeans::log_mean::{simplex_rule, RuleScheme};
use opmeans::multi::{
    alm_mean, bmp_mean, check_property, power_mean, Mean, MeanKind, Property, PropertyAux, SolverConfig,
    WeightVector,
};
use opmeans::spd::{loewner_margin, random, thompson_distance, SpdMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tuple(seed: u64, dim: usize, n: usize, max_cond: f64) -> Vec<SpdMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random::spd_tuple(&mut rng, dim, n, max_cond).unwrap()
}

fn weights(raw: &[f64]) -> WeightVector {
    WeightVector::new(raw.to_vec()).unwrap()
}

fn builtin(code: u8, w: f64) -> ReprFunction {
    match code % 4 {
        0 => ReprFunction::power(w).unwrap(),
        1 => ReprFunction::arithmetic(w).unwrap(),
        2 => ReprFunction::harmonic(w).unwrap(),
        _ => ReprFunction::logarithmic(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn thompson_is_a_scale_and_inversion_invariant_metric(seed in any::<u64>(), dim in 1usize..5, c in 0.01f64..100.0) {
        let m = tuple(seed, dim, 3, 100.0);
        let (a, b, x) = (&m[0], &m[1], &m[2]);
        let d = thompson_distance(a, b).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!((thompson_distance(b, a).unwrap() - d).abs() <= 1e-10 * d.max(1.0));
        let scaled = thompson_distance(&a.scale_pos(c).unwrap(), &b.scale_pos(c).unwrap()).unwrap();
        prop_assert!((scaled - d).abs() <= 1e-9 * d.max(1.0));
        let inv = thompson_distance(&a.inverse().unwrap(), &b.inverse().unwrap()).unwrap();
        prop_assert!((inv - d).abs() <= 1e-9 * d.max(1.0));
        let via = thompson_distance(a, x).unwrap() + thompson_distance(x, b).unwrap();
        prop_assert!(d <= via + 1e-10);
        prop_assert!(thompson_distance(a, a).unwrap() <= 1e-12);
    }

    #[test]
    fn loewner_order_is_antisymmetric_and_respects_psd_bumps(seed in any::<u64>(), dim in 1usize..5, rank in 1usize..5, s in 0.01f64..10.0) {
        let a = &tuple(seed, dim, 1, 100.0)[0];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let p = random::psd(&mut rng, dim, rank.min(dim), s);
        let b = a.as_sym() + &p;
        prop_assert!(loewner_margin(a.as_sym(), &b).unwrap() >= -1e-12);
        let back = loewner_margin(&b, a.as_sym()).unwrap();
        prop_assert!(back <= 1e-12);
        prop_assert!(loewner_margin(a.as_sym(), a.as_sym()).unwrap().abs() <= 1e-14);
    }

    #[test]
    fn kubo_ando_axioms(seed in any::<u64>(), dim in 1usize..5, code in any::<u8>(), w in 0.05f64..0.95, c in 0.1f64..10.0) {
        let f = builtin(code, w);
        let w = f.weight();
        let m = tuple(seed, dim, 2, 100.0);
        let (a, b) = (&m[0], &m[1]);
        let ab = binary_mean(&f, a, b).unwrap();

        let aa = binary_mean(&f, a, a).unwrap();
        prop_assert!(aa.as_sym().max_abs_diff(a.as_sym()) <= 1e-10 * a.as_sym().spectral_norm().unwrap());

        let scaled = binary_mean(&f, &a.scale_pos(c).unwrap(), &b.scale_pos(c).unwrap()).unwrap();
        let rel = (scaled.as_sym() - &ab.as_sym().scale(c)).spectral_norm().unwrap()
            / (c * ab.as_sym().spectral_norm().unwrap());
        prop_assert!(rel <= 1e-10, "homogeneity {rel}");

        let arith = &a.as_sym().scale(1.0 - w) + &b.as_sym().scale(w);
        let harm = &a.inverse().unwrap().as_sym().scale(1.0 - w) + &b.inverse().unwrap().as_sym().scale(w);
        let harm = harm.to_spd().unwrap().inverse().unwrap();
        prop_assert!(loewner_margin(ab.as_sym(), &arith).unwrap() >= -1e-10);
        prop_assert!(loewner_margin(harm.as_sym(), ab.as_sym()).unwrap() >= -1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let bump = random::psd(&mut rng, dim, 1, 1.0);
        let bigger = (b.as_sym() + &bump).to_spd().unwrap();
        let ab2 = binary_mean(&f, a, &bigger).unwrap();
        prop_assert!(loewner_margin(ab.as_sym(), ab2.as_sym()).unwrap() >= -1e-10);
    }

    #[test]
    fn transformer_equality_under_congruence(seed in any::<u64>(), dim in 1usize..5, w in 0.05f64..0.95) {
        let f = ReprFunction::power(w).unwrap();
        let m = tuple(seed, dim, 2, 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let x = random::invertible(&mut rng, dim, 5.0);
        let lhs = binary_mean(&f, &m[0], &m[1]).unwrap().congruence_spd(&x).unwrap();
        let rhs = binary_mean(&f, &m[0].congruence_spd(&x).unwrap(), &m[1].congruence_spd(&x).unwrap()).unwrap();
        let rel = (lhs.as_sym() - rhs.as_sym()).spectral_norm().unwrap() / lhs.as_sym().spectral_norm().unwrap();
        prop_assert!(rel <= 1e-9, "{rel}");
    }

    #[test]
    fn two_point_alm_and_bmp_are_the_geometric_mean(seed in any::<u64>(), dim in 1usize..5, w in 0.05f64..0.95) {
        let m = tuple(seed, dim, 2, 100.0);
        let cfg = SolverConfig::default();
        let g = weighted_geometric(&m[0], &m[1], 0.5).unwrap();
        let alm = alm_mean(&m, &cfg).unwrap().value;
        prop_assert!(alm.as_sym().max_abs_diff(g.as_sym()) <= 1e-13 * g.as_sym().spectral_norm().unwrap().max(1.0));
        let gw = weighted_geometric(&m[0], &m[1], w).unwrap();
        let bmp = bmp_mean(&weights(&[1.0 - w, w]), &m, &cfg).unwrap().value;
        prop_assert!(bmp.as_sym().max_abs_diff(gw.as_sym()) <= 1e-13 * gw.as_sym().spectral_norm().unwrap().max(1.0));
    }

    #[test]
    fn simplex_rules_are_probability_measures(n in 2usize..6, level in 1usize..6, seed in any::<u64>(), count in 1usize..200) {
        for scheme in [RuleScheme::StickBreakingGauss { level }, RuleScheme::MonteCarlo { seed, count }] {
            let rule = simplex_rule(n, scheme).unwrap();
            let total: f64 = rule.coeffs.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(rule.coeffs.iter().all(|c| *c > 0.0));
            for node in &rule.nodes {
                prop_assert_eq!(node.len(), n);
                prop_assert!(node.as_slice().iter().all(|x| *x > 0.0 && *x < 1.0));
                prop_assert!((node.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
            let sym = rule.cyclic_symmetrized();
            let first: f64 = sym.integrate_scalar(|x| x[0]);
            prop_assert!((first - 1.0 / n as f64).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn geometric_means_satisfy_the_axioms(seed in any::<u64>(), dim in 1usize..4, n in 2usize..5, raw in prop::collection::vec(0.05f64..1.0, 4)) {
        let a = tuple(seed, dim, n, 100.0);
        let w = weights(&raw[..n]);
        let aux = PropertyAux::generate(seed, &a).unwrap();
        for kind in [MeanKind::Bmp, MeanKind::Karcher] {
            let mean = Mean::new(kind);
            for p in Property::ALL {
                let r = check_property(p, &mean, &w, &a, &aux, 1e-8).unwrap();
                prop_assert!(r.passed, "{}", r.to_json());
            }
        }
    }

    #[test]
    fn power_means_increase_with_the_exponent(seed in any::<u64>(), dim in 1usize..4, n in 2usize..5, raw in prop::collection::vec(0.05f64..1.0, 4)) {
        let a = tuple(seed, dim, n, 100.0);
        let w = weights(&raw[..n]);
        let cfg = SolverConfig::default();
        let ts = [-1.0, -0.5, -0.1, 0.1, 0.5, 1.0];
        let means: Vec<SpdMatrix> = ts.iter().map(|t| power_mean(*t, &w, &a, &cfg).unwrap().value).collect();
        for pair in means.windows(2) {
            prop_assert!(loewner_margin(pair[0].as_sym(), pair[1].as_sym()).unwrap() >= -1e-8);
        }
    }
}
