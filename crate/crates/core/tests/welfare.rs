mod common;

use std::sync::OnceLock;

use approx::assert_abs_diff_eq;
use common::{example1, example1_dist, three_state, three_state_dist};
use intergen::benchmarks::FirstBestPolicy;
use intergen::econ::EconomyParams;
use intergen::welfare::*;
use proptest::prelude::*;

fn irf1() -> &'static ShockResponse {
    static R: OnceLock<ShockResponse> = OnceLock::new();
    R.get_or_init(|| {
        demographic_irf(example1(), &start_points(example1_dist()), 0.01, &IrfConfig::default()).unwrap()
    })
}

#[test]
fn insurance_and_loss_on_support() {
    for (sol, d) in [(example1(), example1_dist()), (three_state(), three_state_dist())] {
        let w = welfare_measures(sol, d).unwrap();
        assert!(w.mean_iota > 0.0 && w.mean_iota < 1.0);
        assert!(w.mean_theta > 0.0 && w.mean_theta < 0.05);
        let e = &sol.economy;
        for p in &w.points {
            assert!(p.iota > 0.0 && p.iota <= 1.0 + 1e-12);
            assert!(p.theta > -1e-12);
            let r = cev_residual(
                sol.value(p.state, p.omega),
                p.theta,
                p.state,
                &sol.first_best.c_star,
                e.probs(),
                e.beta(),
                e.delta(),
            );
            assert!(r.abs() < 1e-12);
        }
    }
}

#[test]
fn first_best_is_full_insurance_without_loss() {
    let p = EconomyParams::three_state();
    let fb = FirstBestPolicy::new(&p).unwrap();
    let f = &fb.first_best;
    let (b, d) = (p.prefs.beta, p.prefs.delta);
    for s in 0..3 {
        let w = f.omega_star[s];
        assert_abs_diff_eq!(insurance_coefficient(&fb, s, w).unwrap().iota, 1.0, epsilon = 1e-12);
        let theta = cev_from(f.value(s, w), s, &f.c_star, &p.endowments.probs, b, d);
        assert!(theta.abs() < 1e-12);
    }
}

#[test]
fn shock_period_first_best_share() {
    let b = (-1.0f64 / 75.0).exp();
    assert!((first_best_shock_share(b, b, 0.01) - 1.01 / 2.01).abs() < 1e-12);
    let r = irf1();
    let sh: Vec<f64> = (0..2).map(|s| ShockPolicy { sol: example1(), eps: 0.01 }.share(s)).collect();
    let want: f64 = 0.5 * (1.01 / 2.01f64).min(sh[0]) + 0.5 * (1.01 / 2.01f64).min(sh[1]);
    assert_abs_diff_eq!(r.c_star[1], want, epsilon = 1e-15);
    assert_abs_diff_eq!(r.c_star[0], 0.5, epsilon = 1e-15);
}

#[test]
fn shock_never_lowers_consumption() {
    let r = irf1();
    assert_eq!(r.violations, 0);
    assert!(r.strict_share > 0.0);
}

#[test]
fn enumeration_agrees_with_monte_carlo() {
    let r = irf1();
    let z = r.max_z_score().unwrap();
    assert!(z <= 3.0, "z {z}");
    assert!(r.enumerated[1].unwrap() > 0.0);
}

#[test]
fn response_decays() {
    let r = irf1();
    let dev: Vec<f64> = r.mean_c.iter().map(|c| c - r.mean_c[0]).collect();
    assert!(dev[1] > 0.0);
    assert!(dev[r.t.len() - 1].abs() < dev[1].abs());
}

#[test]
fn no_shock_no_response() {
    let cfg = IrfConfig { horizon: 6, enumerate_upto: 6, monte_carlo: None };
    let r = demographic_irf(example1(), &start_points(example1_dist()), 0.0, &cfg).unwrap();
    for t in 1..=6 {
        assert!(r.enumerated[t].unwrap().abs() < 1e-14);
        assert!((r.mean_c[t] - r.mean_c[0]).abs() < 1e-14);
    }
    assert_eq!(r.violations, 0);
}

#[test]
fn bad_shock_inputs() {
    let start = start_points(example1_dist());
    assert!(demographic_irf(example1(), &start, -1.5, &IrfConfig::default()).is_err());
    assert!(demographic_irf(example1(), &[], 0.01, &IrfConfig::default()).is_err());
    let cfg = IrfConfig { horizon: 0, ..Default::default() };
    assert!(demographic_irf(example1(), &start, 0.01, &cfg).is_err());
}

#[test]
fn monte_carlo_is_seeded() {
    let cfg = IrfConfig {
        horizon: 4,
        enumerate_upto: 2,
        monte_carlo: Some(MonteCarloConfig { paths: 500, seed: 9 }),
    };
    let start = start_points(example1_dist());
    let a = demographic_irf(example1(), &start, 0.01, &cfg).unwrap();
    let b = demographic_irf(example1(), &start, 0.01, &cfg).unwrap();
    assert_eq!(a.monte_carlo, b.monte_carlo);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cev_solves_its_equation(v in -200.0f64..-50.0, s in 0usize..2) {
        let c = [0.5, 0.5];
        let pi = [0.5, 0.5];
        let b = (-1.0f64 / 75.0).exp();
        let th = cev_from(v, s, &c, &pi, b, b);
        prop_assert!(th < 1.0);
        prop_assert!(cev_residual(v, th, s, &c, &pi, b, b).abs() < 1e-10);
    }

    #[test]
    fn insurance_between_autarky_and_full(t in 0.0f64..1.0) {
        let sh = [0.5, 0.625, 0.8125];
        let pi = [0.5, 0.25, 0.25];
        let c: Vec<f64> = sh.iter().map(|s| (1.0 - t) * s + t * 0.5).collect();
        let i = insurance_from(&sh, &pi, &c).unwrap().iota;
        prop_assert!(i > -1e-12 && i < 1.0 + 1e-12);
    }
}
