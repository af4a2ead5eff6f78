use dynkin::catalog;
use dynkin::diffusion::DiffusionModel;
use dynkin::envelope::{smallest_in_h, BoundaryPolicy, Tolerances};
use dynkin::grid::GridSpec;
use dynkin::pipeline::{solve, Problem};
use dynkin::poly::PiecewisePoly;
use dynkin::simulate::{
    chain_dynkin_oracle, estimate_r, play_game, simulate_path, ChainProblem, McParams, PinRule,
    Stopper, Strategy as Rule,
};
use dynkin::transform::{PayoffPair, TransformedObstacles};
use proptest::prelude::*;

/// Jittered increasing nodes: spacing stays within a factor of ~5.
fn chain(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (
        proptest::collection::vec(-0.4f64..0.4, n),
        proptest::collection::vec(0.0f64..5.0, n),
        proptest::collection::vec(0.0f64..3.0, n),
    )
        .prop_map(move |(jit, h1, bump)| {
            let y = jit
                .iter()
                .enumerate()
                .map(|(i, j)| 1.0 + (i as f64 + j) / n as f64)
                .collect();
            let h2 = h1.iter().zip(&bump).map(|(a, b)| a + b).collect();
            (y, h1, h2)
        })
}

fn gbm() -> DiffusionModel {
    DiffusionModel::gbm(0.05, 0.3).unwrap()
}

fn call_pair(k: f64, eps: f64) -> PayoffPair {
    let g1 = PiecewisePoly::call(k);
    let g2 = g1.plus_constant(eps);
    PayoffPair::new(g1, g2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn envelope_matches_the_chain_oracle(
        (y, h1, h2) in (3usize..=201).prop_flat_map(chain),
    ) {
        let ob = TransformedObstacles::new(y.clone(), h1.clone(), h2.clone()).unwrap();
        let s = smallest_in_h(&ob, BoundaryPolicy::Pinned, Tolerances::default()).unwrap();
        for (pin, w) in [(PinRule::Low, &s.w_low), (PinRule::High, &s.w_high)] {
            let o = chain_dynkin_oracle(&ChainProblem::new(y.clone(), h1.clone(), h2.clone(), pin).unwrap()).unwrap();
            for (a, b) in o.values().iter().zip(w.values()) {
                prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
        for (a, b) in s.w_low.values().iter().zip(s.w_high.values()) {
            prop_assert!(a <= &(b + 1e-12));
        }
    }

    #[test]
    fn envelope_scales_with_the_obstacles(
        (y, h1, h2) in (3usize..=101).prop_flat_map(chain),
        c in 1e-3f64..1e3,
    ) {
        let ob = TransformedObstacles::new(y, h1, h2).unwrap();
        let a = smallest_in_h(&ob, BoundaryPolicy::Pinned, Tolerances::default()).unwrap();
        let b = smallest_in_h(&ob.scaled(c), BoundaryPolicy::Pinned, Tolerances::default()).unwrap();
        let scale = ob.h2.iter().fold(1e-300f64, |m, h| m.max(*h));
        for (u, v) in a.w.values().iter().zip(b.w.values()) {
            prop_assert!((c * u - v).abs() <= 1e-12 * c * scale, "{} vs {v}", c * u);
        }
    }

    #[test]
    fn ties_pay_the_lower_payoff(
        lo in 20.0f64..100.0,
        width in 1.0f64..80.0,
        x0 in 10.0f64..200.0,
        seed in any::<u64>(),
    ) {
        let s = Rule::first_entry(vec![(lo, lo + width)]).unwrap();
        let pay = call_pair(100.0, 5.0);
        let path = simulate_path(&gbm(), x0, 1e-2, 5.0, seed);
        let o = play_game(&path, &s, &s, &pay, 0.05);
        match o.step {
            Some(k) => {
                let t = k as f64 * path.dt;
                prop_assert_eq!(o.stopper, Stopper::Tie);
                prop_assert_eq!(o.payoff, (-0.05 * t).exp() * pay.g1().eval(path.x[k]));
            }
            None => prop_assert_eq!(o.payoff, 0.0),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn payoff_scaling_keeps_regions_and_verdict(
        k in 50.0f64..150.0,
        eps in 1.0f64..20.0,
        c in 0.01f64..100.0,
    ) {
        let grid = GridSpec::new(k / 16.0, 16.0 * k, 301);
        let a = solve(&Problem::new(gbm(), call_pair(k, eps), grid.clone())).unwrap();
        let b = solve(&Problem::new(gbm(), call_pair(k, eps).scaled(c), grid)).unwrap();
        prop_assert_eq!(&a.regions.in_e1, &b.regions.in_e1);
        prop_assert_eq!(&a.regions.in_e2, &b.regions.in_e2);
        prop_assert_eq!(a.saddle.verdict, b.saddle.verdict);
        for (u, v) in a.v.values().iter().zip(b.v.values()) {
            prop_assert!((c * u - v).abs() <= 1e-9 * (c * u).abs().max(1e-12));
        }
    }

    #[test]
    fn every_solution_passes_self_check(
        k in 1.0f64..200.0,
        eps_frac in 0.01f64..1.5,
        sigma in 0.1f64..0.6,
        beta in 0.01f64..0.2,
    ) {
        let model = DiffusionModel::gbm(beta, sigma).unwrap();
        let grid = GridSpec::new(k / 16.0, 16.0 * k, 301);
        let s = solve(&Problem::new(model, call_pair(k, eps_frac * k), grid)).unwrap();
        let v = s.self_check();
        prop_assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn estimates_are_reproducible(seed in any::<u64>(), x0 in 30.0f64..90.0) {
        let p = McParams { n_paths: 200, dt: 1e-2, horizon: Some(20.0), seed };
        let pay = call_pair(100.0, 5.0);
        let run = || estimate_r(&gbm(), x0, &Rule::Never, &Rule::above(100.0), &pay, &p).unwrap();
        let (a, b) = (run(), run());
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn seller_cost_grows_with_eps(seed in any::<u64>(), e1 in 1.0f64..50.0, de in 0.1f64..50.0) {
        let p = McParams { n_paths: 200, dt: 1e-2, horizon: Some(20.0), seed };
        let r = |eps| {
            estimate_r(&gbm(), 60.0, &Rule::Never, &Rule::above(100.0), &call_pair(100.0, eps), &p)
                .unwrap()
                .mean
        };
        prop_assert!(r(e1) <= r(e1 + de));
    }
}

#[test]
fn catalog_solutions_pass_self_check() {
    for p in catalog::PRESETS {
        let e = catalog::preset(p.name).unwrap();
        let s = solve(&Problem::from_catalog(&e, 2001)).unwrap();
        assert!(
            s.self_check().is_empty(),
            "{}: {:?}",
            p.name,
            s.self_check()
        );
    }
}
