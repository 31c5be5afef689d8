use ddm_core::estimator::fit_choice_probability;
use ddm_core::spectest::quadratic_form;
use ddm_core::{
    build_moment_spec, estimate, imbalance, log_odds, sample_moments, simulate_dataset, Boundary, Dataset,
    DdmParameters, EstimatorConfig, ParametricBoundary, SimConfig, SplineBasis, TimeTransform, TransformFamily,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn transform() -> impl Strategy<Value = TimeTransform> {
    prop_oneof![
        (0.05f64..20.0).prop_map(|r| TimeTransform::exponential(r).unwrap()),
        (0.05f64..20.0).prop_map(|c| TimeTransform::rational(c).unwrap()),
    ]
}

fn dataset(max: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec((1e-3f64..20.0, any::<bool>()), 1..max).prop_map(|v| Dataset::from_pairs(v).unwrap())
}

proptest! {
    #[test]
    fn basis_is_a_nonnegative_partition_of_unity(k in 4usize..20, g in 0.0f64..=1.0) {
        let basis = SplineBasis::cubic(k).unwrap();
        let v = basis.values(g);
        prop_assert!(v.iter().all(|&x| x >= -1e-15));
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds_increase_and_moments_are_bounded(j in 1usize..15, g in transform(), data in dataset(60)) {
        let spec = build_moment_spec(j, g).unwrap();
        prop_assert!(spec.thresholds().windows(2).all(|w| w[0] < w[1]));
        let m = sample_moments(&data, &spec);
        let norm = spec.normalization();
        prop_assert!(m.values.iter().all(|&v| (0.0..=norm + 1e-12).contains(&v)));
        prop_assert!(m.values.iter().sum::<f64>() <= norm + 1e-12);
        for t in data.times() {
            let e = spec.evaluate(t);
            prop_assert!(e.iter().filter(|&&x| x != 0.0).count() <= 1);
            prop_assert_eq!(spec.interval(t).is_some(), t >= spec.thresholds()[0]);
        }
    }

    #[test]
    fn transform_is_monotone_and_invertible(g in transform(), a in 1e-3f64..10.0, b in 1e-3f64..10.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(g.forward(lo) <= g.forward(hi));
        // G⁻¹ loses precision as G approaches 1.
        prop_assume!(g.forward(a) < 1.0 - 1e-6);
        let back = g.inverse(g.forward(a));
        prop_assert!(((back - a) / a).abs() < 1e-9);
    }

    #[test]
    fn parametric_boundaries_are_nonnegative(level in 0.01f64..5.0, rate in 0.0f64..5.0, t in 0.0f64..100.0) {
        for p in [
            ParametricBoundary::Constant { level },
            ParametricBoundary::Hyperbolic { level, rate },
            ParametricBoundary::Exponential { level, rate },
        ] {
            let b = Boundary::parametric(p).unwrap();
            prop_assert!(b.eval(t) >= 0.0);
            prop_assert!(b.eval(t) <= level + 1e-12);
        }
    }

    #[test]
    fn imbalance_is_symmetric_and_nonnegative(p in 1e-6f64..0.999999) {
        let i = imbalance(p).unwrap();
        prop_assert!(i >= 0.0);
        prop_assert!((i - imbalance(1.0 - p).unwrap()).abs() < 1e-9 * i.max(1.0));
        prop_assert!((log_odds(p).unwrap() + log_odds(1.0 - p).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn relabeling_twice_is_identity(data in dataset(40)) {
        let twice = data.relabeled().relabeled();
        prop_assert_eq!(twice.records(), data.records());
        prop_assert!((data.relabeled().choice_rate() - (1.0 - data.choice_rate())).abs() < 1e-12);
    }

    #[test]
    fn least_squares_satisfies_normal_equations(seed in any::<u64>()) {
        let data = simulate_dataset(
            DdmParameters::new(0.7).unwrap(),
            &Boundary::constant(1.0).unwrap(),
            400,
            &SimConfig::default().with_seed(seed),
        ).unwrap().dataset;
        let g = TimeTransform::with_median(TransformFamily::Exponential, 0.7).unwrap();
        let fit = fit_choice_probability(&data, &SplineBasis::cubic(6).unwrap(), g, 1e-3).unwrap();
        let beta = DVector::from_column_slice(fit.model.coefficients());
        let resid = &fit.gram * beta - &fit.cross;
        prop_assert!(resid.amax() < 1e-10);
    }

    #[test]
    fn quadratic_form_is_nonnegative_and_scale_free(
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        d in prop::collection::vec(-1.0f64..1.0, 3),
        c in 0.1f64..10.0,
    ) {
        let a = DMatrix::from_vec(3, 3, entries);
        let v = &a * a.transpose() + DMatrix::identity(3, 3) * 0.5;
        let d = DVector::from_vec(d);
        let q = quadratic_form(100, &d, &v).unwrap().statistic;
        prop_assert!(q >= 0.0);
        let scaled = quadratic_form(100, &(&d * c.sqrt()), &(&v * c)).unwrap().statistic;
        prop_assert!((q - scaled).abs() <= 1e-9 * q.max(1.0));
    }
}

#[test]
fn estimates_do_not_depend_on_record_order() {
    let data = simulate_dataset(
        DdmParameters::new(0.5).unwrap(),
        &Boundary::constant(1.0).unwrap(),
        3_000,
        &SimConfig::default().with_seed(41),
    )
    .unwrap()
    .dataset;
    let mut records = data.records().to_vec();
    records.reverse();
    records.rotate_left(977);
    let shuffled = Dataset::new(records).unwrap();
    let (_, a) = estimate(&data, &EstimatorConfig::default()).unwrap();
    let (_, b) = estimate(&shuffled, &EstimatorConfig::default()).unwrap();
    assert!((a.drift_hat - b.drift_hat).abs() < 1e-10);
    for t in [0.1, 0.5, 1.0, 3.0] {
        assert!((a.boundary_hat.eval(t) - b.boundary_hat.eval(t)).abs() < 1e-8);
    }
}

#[test]
fn constant_probability_is_recovered_over_central_range() {
    // Times from a DDM, choices Bernoulli(0.7) independent of them.
    let times = simulate_dataset(
        DdmParameters::new(0.5).unwrap(),
        &Boundary::constant(1.0).unwrap(),
        100_000,
        &SimConfig::default().with_seed(42),
    )
    .unwrap()
    .dataset;
    let choices = ddm_core::simulator::LogNormalChoiceGenerator {
        p_early: 0.7,
        p_late: 0.7,
        ..Default::default()
    }
    .generate(100_000, 43)
    .unwrap();
    let data = Dataset::from_pairs(times.times().zip(choices.records().iter().map(|r| r.choice))).unwrap();
    let (_, est) = estimate(&data, &EstimatorConfig::default()).unwrap();
    let g = est.choice_model.transform();
    let mut gs: Vec<f64> = data.times().map(|t| g.forward(t)).collect();
    gs.sort_by(f64::total_cmp);
    let (lo, hi) = (gs[gs.len() / 100], gs[gs.len() * 99 / 100]);
    let worst = (0..=200)
        .map(|i| lo + (hi - lo) * i as f64 / 200.0)
        .map(|x| (est.choice_model.clamped_probability(g.inverse(x)) - 0.7).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "sup |p̂ - 0.7| = {worst}");
}
