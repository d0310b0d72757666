use nalgebra::DVector;
use perturbqp::gen::{generate, GenParams, ProblemKind};
use perturbqp::io::sci;
use perturbqp::ipm::{newton_step, shrink_perturbations, solve, SolveOptions};
use perturbqp::perturb::perfect_perturbation;
use perturbqp::predict::{prediction_ratios, PredictionState};
use perturbqp::{IndexSet, Iterate, Perturbation, StandardQP};
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;

fn small_qp(kind: ProblemKind, seed: u64) -> StandardQP {
    let params = GenParams {
        seed,
        m_range: (2, 8),
        n_range: (4, 16),
        ..GenParams::default()
    };
    generate(kind, &params).unwrap().qp
}

/// One of `x`, `s` zero, the other in (0, 10].
fn complementary_pair() -> impl Strategy<Value = (f64, f64)> {
    (any::<bool>(), 1e-6f64..10.0).prop_map(|(on_x, v)| if on_x { (v, 0.0) } else { (0.0, v) })
}

proptest! {
    #[test]
    fn perfect_perturbation_identity(pairs in vec(complementary_pair(), 1..30), e in -6i32..=0) {
        let mu = 10f64.powi(e);
        let x = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.0));
        let s = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.1));
        let lam = perfect_perturbation(&x, &s, mu).unwrap();
        for i in 0..x.len() {
            prop_assert!(lam[i] > 0.0);
            let prod = (x[i] + lam[i]) * (s[i] + lam[i]);
            prop_assert!(((prod - mu) / mu).abs() <= 1e-12, "{prod} vs {mu}");
        }
    }

    #[test]
    fn ratios_partition_the_union(
        pred in btree_set(0usize..40, 0..20),
        actual in btree_set(0usize..40, 0..20),
    ) {
        let r = prediction_ratios(&pred, &actual);
        for v in [r.false_prediction, r.missed_prediction, r.correction] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((r.false_prediction + r.missed_prediction + r.correction - 1.0).abs() < 1e-12);
        if pred == actual {
            prop_assert_eq!(r.correction, 1.0);
        }
    }

    #[test]
    fn prediction_state_stays_a_cover(steps in vec(vec((-8.0f64..0.0, -8.0f64..0.0), 6), 1..12)) {
        let mut state = PredictionState::new(6);
        for step in steps {
            let x = DVector::from_iterator(6, step.iter().map(|p| 10f64.powf(p.0)));
            let s = DVector::from_iterator(6, step.iter().map(|p| 10f64.powf(p.1)));
            let next = state.update(&x, &s, 1e-5).unwrap();
            prop_assert!(next.is_cover());
            for i in 0..6 {
                let test = x[i] < 1e-5 && s[i] > 1e-5;
                prop_assert_eq!(next.last_test[i], test);
                if next.active.contains(&i) {
                    prop_assert!(test && state.last_test[i]);
                }
                if next.inactive.contains(&i) {
                    prop_assert!(!test);
                }
            }
            state = next;
        }
    }

    #[test]
    fn shrink_keeps_iterates_inside(
        data in vec((1e-6f64..1e-2, -1.0f64..1.0, 1e-6f64..1e-2, -1.0f64..1.0), 1..20),
        fraction in 0.01f64..0.99,
    ) {
        // x_i in (−λ_i, λ_i + 1), likewise s
        let n = data.len();
        let lambda = DVector::from_iterator(n, data.iter().map(|d| d.0));
        let phi = DVector::from_iterator(n, data.iter().map(|d| d.2));
        let x = DVector::from_iterator(n, data.iter().map(|d| d.0 * d.1.max(-0.999) + d.1.max(0.0)));
        let s = DVector::from_iterator(n, data.iter().map(|d| d.2 * d.3.max(-0.999) + d.3.max(0.0)));
        let pert = Perturbation::new(lambda, phi).unwrap();
        let next = Iterate::new(x.clone(), DVector::zeros(0), s.clone());
        let out = shrink_perturbations(&pert, &next, fraction).unwrap();
        for i in 0..n {
            prop_assert!(out.lambda[i] >= 0.0 && out.phi[i] >= 0.0);
            prop_assert!(x[i] + out.lambda[i] > 0.0);
            prop_assert!(s[i] + out.phi[i] > 0.0);
        }
        if x.min() > 0.0 {
            for i in 0..n {
                prop_assert!((out.lambda[i] - fraction * pert.lambda[i]).abs() <= 1e-18);
            }
        }
    }

    #[test]
    fn sci_format_round_trips(mantissa in 1.0f64..9.9, e in -300i32..300) {
        let v = mantissa * 10f64.powi(e);
        let text = sci(v);
        let back: f64 = text.parse().unwrap();
        prop_assert!(((back - v) / v).abs() <= 0.05 / mantissa, "{v} -> {text}");
        let (m, _) = text.split_once('e').unwrap();
        prop_assert_eq!(m.split_once('.').unwrap().1.len(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn newton_step_vanishes_at_centres(seed in 0u64..1000, mu_exp in -6i32..0, eps in 0.0f64..1e-3) {
        let base = small_qp(ProblemKind::Qts1, seed);
        let (n, m) = (base.n(), base.m());
        let mut rng_vals = (0..3 * n + m).map(|k| ((seed as f64 + 1.0) * (k as f64 + 0.5)).sin().abs() + 0.1);
        let shifted_x = DVector::from_iterator(n, (&mut rng_vals).take(n));
        let y = DVector::from_iterator(m, (&mut rng_vals).take(m));
        let mu = 10f64.powi(mu_exp);
        let pert = Perturbation::uniform(n, eps).unwrap();
        let x = &shifted_x - &pert.lambda;
        let s = shifted_x.map(|v| mu / v) - &pert.phi;
        let b = base.a() * &x;
        let c = base.a().tr_mul(&y) + &s - base.h() * &x;
        let qp = StandardQP::new("centre", base.h().clone(), base.a().clone(), b, c).unwrap();
        let it = Iterate::new(x, y, s);
        let step = newton_step(&qp, &it, &pert, 1.0).unwrap();
        let size = step.dx.amax().max(step.dy.amax()).max(step.ds.amax());
        prop_assert!(size <= 1e-12 * (1.0 + it.x.amax().max(it.y.amax())), "step {size:e}");
    }

    #[test]
    fn solver_iterates_stay_inside_relaxed_bounds(seed in 0u64..500, qts2 in any::<bool>()) {
        let kind = if qts2 { ProblemKind::Qts2 } else { ProblemKind::Qts1 };
        let qp = small_qp(kind, seed);
        for k in [3, 8, 20] {
            let opts = SolveOptions { max_iterations: k, mu_tolerance: 1e-12, ..SolveOptions::default() };
            let r = solve(&qp, &opts).unwrap();
            let (it, p) = (&r.final_iterate, &r.final_perturbation);
            prop_assert!((&it.x + &p.lambda).min() > 0.0);
            prop_assert!((&it.s + &p.phi).min() > 0.0);
            prop_assert!(r.prediction.is_cover());
            let unp = solve(&qp, &opts.unperturbed()).unwrap();
            prop_assert!(unp.final_perturbation.is_zero());
            prop_assert!(unp.final_iterate.x.min() > 0.0 && unp.final_iterate.s.min() > 0.0);
        }
    }

    #[test]
    fn predicted_sets_are_recorded_per_iteration(seed in 0u64..200) {
        let qp = small_qp(ProblemKind::Qts2, seed);
        let opts = SolveOptions { max_iterations: 12, mu_tolerance: 1e-12, ..SolveOptions::default() };
        let r = solve(&qp, &opts).unwrap();
        prop_assert_eq!(r.trace.len(), r.iterations);
        let last: Option<&IndexSet> = r.predicted_active_at(r.iterations);
        prop_assert_eq!(last, Some(&r.prediction.active));
        prop_assert!(r.predicted_active_at(0).is_none());
        prop_assert!(r.predicted_active_at(r.iterations + 1).is_none());
    }
}
