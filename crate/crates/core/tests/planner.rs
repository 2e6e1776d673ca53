mod common;

use approx::assert_abs_diff_eq;
use common::{example1, three_state};
use intergen::econ::EconomyParams;
use intergen::planner::{solve, solve_with_observer, PlannerSolution, SolverConfig};
use intergen::policy::PromisePolicy;
use intergen::Error;
use proptest::prelude::*;

fn grid(sol: &PlannerSolution, s: usize, n: usize) -> Vec<f64> {
    let e = &sol.economy;
    let (lo, hi) = (e.omega_min(s), e.omega_max(s));
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[test]
fn converges_quickly() {
    for sol in [example1(), three_state()] {
        assert!(sol.sweeps <= 30, "sweeps {}", sol.sweeps);
        assert!(sol.value_sweeps <= sol.sweeps);
        let last = sol.history.last().unwrap();
        assert!(last.error_bound < 1e-6);
        assert!(last.policy_change < 1e-6);
    }
}

#[test]
fn reset_multipliers() {
    let sol = example1();
    assert_eq!(sol.mu0[0], 0.0);
    assert!(sol.mu0[1] > 0.0);
    let p = sol.policy_eval(0, sol.omega0[0]).unwrap();
    for (g, w) in p.promises.iter().zip(&sol.omega0) {
        assert_abs_diff_eq!(*g, *w, epsilon = 1e-10);
    }
}

#[test]
fn observer_sees_every_sweep() {
    let mut seen = Vec::new();
    let sol = solve_with_observer(&EconomyParams::example1(), &SolverConfig::default(), |n, tabs| {
        assert_eq!(tabs.len(), 2);
        seen.push(n);
    })
    .unwrap();
    assert_eq!(seen, (0..=sol.sweeps).collect::<Vec<_>>());
    // Value spans contract.
    let h = &sol.history;
    assert!(h.last().unwrap().error_bound < h[0].error_bound);
}

#[test]
fn flat_below_reset_level() {
    for sol in [example1(), three_state()] {
        for s in 0..sol.num_states() {
            let lo = sol.economy.omega_min(s);
            let at = sol.policy_eval(s, sol.omega0[s]).unwrap();
            for k in 0..10 {
                let w = lo + (sol.omega0[s] - lo) * k as f64 / 10.0;
                let p = sol.policy_eval(s, w).unwrap();
                assert_eq!(p.consumption, at.consumption);
                assert_eq!(p.promises, at.promises);
            }
        }
    }
}

#[test]
fn reset_region_in_state_one() {
    let sol = example1();
    assert!(sol.omega_c >= sol.omega0[0]);
    let w = 0.5 * (sol.omega0[0] + sol.omega_c);
    let p = sol.policy_eval(0, w).unwrap();
    assert_eq!(p.mu, 0.0);
    let above = sol.policy_eval(0, sol.omega_c + 1e-3).unwrap();
    assert!(above.mu > 0.0);
}

#[test]
fn first_best_fixed_point_in_state_two() {
    let sol = example1();
    let w = sol.omega_f[1];
    let p = sol.policy_eval(1, w).unwrap();
    assert_abs_diff_eq!(p.consumption, 0.5, epsilon = 1e-8);
    assert_abs_diff_eq!(p.promises[1], w, epsilon = 1e-8);
}

#[test]
fn value_decreasing_and_concave() {
    for sol in [example1(), three_state()] {
        for s in 0..sol.num_states() {
            let g = grid(sol, s, 201);
            let v: Vec<f64> = g.iter().map(|&w| sol.value(s, w)).collect();
            for w in v.windows(2) {
                assert!(w[1] <= w[0] + 1e-10);
            }
            for w in v.windows(3) {
                assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-8);
            }
        }
    }
}

#[test]
fn policies_monotone_in_promise() {
    for sol in [example1(), three_state()] {
        for s in 0..sol.num_states() {
            let pts: Vec<_> = grid(sol, s, 101)
                .into_iter()
                .map(|w| sol.policy_eval(s, w).unwrap())
                .collect();
            for w in pts.windows(2) {
                assert!(w[1].consumption <= w[0].consumption + 1e-12);
                assert!(w[1].mu >= w[0].mu - 1e-12);
                for r in 0..sol.num_states() {
                    assert!(w[1].promises[r] >= w[0].promises[r] - 1e-12);
                }
            }
        }
    }
}

#[test]
fn richer_young_consume_more() {
    // At a common promise, the state with the larger endowment share has
    // the larger consumption share.
    let sol = three_state();
    let e = &sol.economy;
    let hi = (0..3).map(|s| e.omega_max(s)).fold(f64::INFINITY, f64::min);
    let lo = (0..3).map(|s| e.omega_min(s)).fold(f64::NEG_INFINITY, f64::max);
    for k in 0..50 {
        let w = lo + (hi - lo) * k as f64 / 49.0;
        let c: Vec<f64> = (0..3).map(|s| sol.consumption(s, w)).collect();
        assert!(c[0] <= c[1] + 1e-12 && c[1] <= c[2] + 1e-12);
    }
}

#[test]
fn participation_holds() {
    for sol in [example1(), three_state()] {
        for s in 0..sol.num_states() {
            for w in grid(sol, s, 51) {
                let p = sol.policy_eval(s, w).unwrap();
                assert!(p.gain >= -1e-10);
                if p.mu > 0.0 {
                    assert!(p.gain.abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn initial_promise_cases() {
    let sol = example1();
    assert_eq!(sol.initial_promise(0, None).unwrap(), sol.omega0[0]);
    assert_eq!(sol.initial_promise(0, Some(sol.omega0[0] - 0.1)).unwrap(), sol.omega0[0]);
    let t = 0.5 * (sol.omega0[0] + sol.economy.omega_max(0));
    assert_eq!(sol.initial_promise(0, Some(t)).unwrap(), t);
    assert!(matches!(
        sol.initial_promise(0, Some(sol.economy.omega_max(0) + 0.01)),
        Err(Error::InfeasibleTarget { .. })
    ));
}

#[test]
fn json_round_trip() {
    let sol = example1();
    let back = PlannerSolution::from_json(&sol.to_json().unwrap()).unwrap();
    for s in 0..2 {
        for w in grid(sol, s, 17) {
            assert_eq!(sol.value(s, w), back.value(s, w));
            assert_eq!(sol.decide(s, w), back.decide(s, w));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sol.json");
    sol.save(&path).unwrap();
    assert_eq!(PlannerSolution::load(&path).unwrap().omega0, sol.omega0);
}

#[test]
fn out_of_domain_promise() {
    let sol = example1();
    let hi = sol.economy.omega_max(0);
    assert!(matches!(sol.policy_eval(0, hi + 0.1), Err(Error::Domain { .. })));
    assert!(sol.policy_eval(5, -0.5).is_err());
}

#[test]
fn too_few_nodes_rejected() {
    let cfg = SolverConfig { gp: 10, ..Default::default() };
    assert!(matches!(solve(&EconomyParams::example1(), &cfg), Err(Error::InvalidParameters(_))));
}

#[test]
fn sweep_cap_reports_history() {
    let cfg = SolverConfig { max_iters: 3, ..Default::default() };
    match solve(&EconomyParams::example1(), &cfg) {
        Err(Error::NotConverged { sweeps, history, .. }) => {
            assert_eq!(sweeps, 3);
            assert!(!history.is_empty());
        }
        other => panic!("expected NotConverged, got {:?}", other.map(|s| s.sweeps)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn promise_keeping_and_bounds(s in 0usize..2, u in 0.0f64..1.0) {
        let sol = example1();
        let e = &sol.economy;
        let w = e.omega_min(s) + u * (e.omega_max(s) - e.omega_min(s));
        let p = sol.policy_eval(s, w).unwrap();
        prop_assert!(p.consumption > 0.0 && p.consumption < e.shares()[s] + 1e-12);
        // The old receive at least what was promised.
        prop_assert!((1.0 - p.consumption).ln() >= w.max(sol.omega0[s]) - 1e-10);
        for r in 0..2 {
            prop_assert!(p.promises[r] >= e.omega_min(r) - 1e-12);
            prop_assert!(p.promises[r] <= e.omega_max(r) + 1e-12);
        }
    }
}
