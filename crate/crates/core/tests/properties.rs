//! Randomized invariants: resolvent contracts over generated graphs,
//! discrete vector identities on random grids, config round-trips, and
//! the comparison principle between ordered conductivities.

use proptest::prelude::*;

use emqs::conductivity::{ConductivityGraph, Medium};
use emqs::forcing::Forcing;
use emqs::grid::{Location, StaggeredGrid};
use emqs::scenario::{parse_config, ScenarioConfig};
use emqs::solver_full::{run_full, FullSolverConfig};
use emqs::trajectory::SnapshotPlan;

fn arb_graph() -> impl Strategy<Value = ConductivityGraph> {
    prop_oneof![
        (0.0f64..4.0).prop_map(|p| ConductivityGraph::PowerLaw { p }),
        (0.1f64..3.0, 0.1f64..3.0, 0.2f64..4.0).prop_map(|(a, extra, threshold)| {
            ConductivityGraph::Step { a, b: a + extra, threshold }
        }),
        (0.1f64..2.0, 0.1f64..2.0, 0.1f64..2.0).prop_map(|(s0, d1, d2)| {
            ConductivityGraph::PiecewiseLinear {
                knots: vec![(0.0, s0), (1.0, s0 + d1), (2.5, s0 + d1 + d2)],
            }
        }),
        (5.0f64..500.0, 0.1f64..2.0, 0.1f64..2.0).prop_map(|(m, a, extra)| {
            ConductivityGraph::step(a, a + extra).smooth(m).unwrap()
        }),
        (0.05f64..5.0).prop_map(|sigma| ConductivityGraph::Constant { sigma }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resolvent_residual_and_bounds(
        graph in arb_graph(),
        lambda in 0.0f64..5.0,
        r in 0.0f64..50.0,
    ) {
        let res = graph.resolve(lambda, r).unwrap();
        prop_assert!(res.s >= 0.0);
        prop_assert!(res.sigma_eff >= 0.0);
        let resid = ((lambda + res.sigma_eff) * res.s - r).abs();
        prop_assert!(resid <= 1e-11 * r.max(1.0), "residual {resid}");
        // The resolvent never overshoots the purely capacitive answer.
        if lambda > 0.0 {
            prop_assert!(res.s <= r / lambda + 1e-12);
        }
    }

    #[test]
    fn resolvent_monotone_and_nonexpansive(
        graph in arb_graph(),
        lambda in 0.01f64..5.0,
        r1 in 0.0f64..20.0,
        dr in 0.0f64..10.0,
    ) {
        let a = graph.resolve(lambda, r1).unwrap();
        let b = graph.resolve(lambda, r1 + dr).unwrap();
        prop_assert!(b.s + 1e-10 >= a.s, "s decreased: {} -> {}", a.s, b.s);
        // Contraction in the data with modulus 1/lambda.
        prop_assert!(b.s - a.s <= dr / lambda + 1e-9 * (1.0 + dr / lambda));
    }

    #[test]
    fn curl_identities_on_random_grids(
        nx in 3usize..9,
        ny in 3usize..9,
        lx in 0.5f64..3.0,
        ly in 0.5f64..3.0,
        seed in any::<u64>(),
    ) {
        use rand::prelude::*;
        let grid = StaggeredGrid::new_2d(nx, ny, lx, ly).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut e: Vec<f64> = (0..grid.e_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        grid.apply_pec(&mut e).unwrap();
        let h: Vec<f64> = (0..grid.h_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let ce = grid.curl_e(&e).unwrap();
        let ch = grid.curl_h(&h).unwrap();
        let lhs = grid.inner_product(Location::Magnetic, &ce, &h).unwrap();
        let rhs = grid.inner_product(Location::Electric, &e, &ch).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs() + rhs.abs()));

        let div = grid.div_h(&ce).unwrap();
        let worst = div.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(worst <= 1e-11, "div of curl {worst}");
    }

    #[test]
    fn config_round_trip(
        n in 4usize..40,
        sigma in 0.1f64..5.0,
        t_final in 0.1f64..2.0,
    ) {
        let text = format!(
            r#"{{
              "grid": {{"dim": 2, "cells": [{n}, {n}], "extents": [1.0, 1.0]}},
              "graph": {{"type": "constant", "sigma": {sigma}}},
              "initial": {{"preset": "solenoidal_mode", "wavenumbers": [1, 1], "amplitude": 1.0}},
              "solver": {{"type": "qs", "t_final": {t_final}}}
            }}"#
        );
        let config = parse_config(&text).unwrap();
        let json = serde_json::to_string(&config).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(config, back);
    }

    #[test]
    fn stronger_conductivity_dissipates_at_least_as_fast(
        sigma in 0.2f64..2.0,
        boost in 0.0f64..3.0,
        amp in 0.5f64..2.0,
    ) {
        let grid = StaggeredGrid::new_2d(16, 16, std::f64::consts::PI, std::f64::consts::PI).unwrap();
        let ext = grid.extents();
        let mut e0: Vec<f64> = grid
            .e_positions()
            .iter()
            .map(|p| {
                amp * (std::f64::consts::PI * p[0] / ext[0]).sin()
                    * (std::f64::consts::PI * p[1] / ext[1]).sin()
            })
            .collect();
        grid.apply_pec(&mut e0).unwrap();
        let h0 = grid.curl_e(&e0).unwrap();
        let cfg = FullSolverConfig { t_final: 0.3, ..Default::default() };
        let run = |s: f64| {
            let medium = Medium::uniform(ConductivityGraph::Constant { sigma: s }).unwrap();
            run_full(&grid, &medium, &Forcing::Zero, &e0, &h0, &cfg, &SnapshotPlan::None)
                .unwrap()
                .records
                .last()
                .unwrap()
                .total()
        };
        let weak = run(sigma);
        let strong = run(sigma + boost);
        prop_assert!(strong <= weak + 1e-9 * weak.max(1.0),
            "final energy {strong} with stronger damping exceeds {weak}");
    }
}
