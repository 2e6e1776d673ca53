use approx::assert_abs_diff_eq;
use intergen::benchmarks::*;
use intergen::econ::{EconomyParams, Preferences};
use intergen::ergodic::invariant;
use intergen::policy::PromisePolicy;
use intergen::pricing::{AssetPriceReport, PricingSupport};
use intergen::econ::GrowthProcess;
use proptest::prelude::*;

fn b75() -> f64 {
    (-1.0f64 / 75.0).exp()
}

#[test]
fn first_best_debts() {
    let fb = first_best(&EconomyParams::example1()).unwrap();
    assert_abs_diff_eq!(fb.d_star[0], 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(fb.d_star[1], 2.0 / 7.0, epsilon = 1e-15);
    let fb = first_best(&EconomyParams::three_state()).unwrap();
    let want = [0.0, 1.0 - 0.5 / 0.625, 1.0 - 0.5 / 0.8125];
    for (a, b) in fb.d_star.iter().zip(want) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
    }
    assert_abs_diff_eq!(fb.d_star[1], 0.2, epsilon = 1e-14);
    assert_abs_diff_eq!(fb.d_star[2], 0.3846, epsilon = 1e-4);
}

#[test]
fn first_best_bond_revenue_at_zero() {
    let p = EconomyParams::example1();
    let fb = first_best(&p).unwrap();
    let b = b75();
    let oracle = (1.0 - b) + 2.0 * b * 0.6 - 1.0;
    let br = fb.bond_revenue_formula(p.endowments.mean(), 0.0);
    assert_abs_diff_eq!(br, oracle, epsilon = 1e-15);
    assert_abs_diff_eq!(br, 0.1974, epsilon = 1e-4);
}

#[test]
fn first_best_chain_has_one_atom_per_state() {
    for p in [EconomyParams::example1(), EconomyParams::three_state()] {
        let pol = FirstBestPolicy::new(&p).unwrap();
        let dist = invariant(&pol, 1000, 1e-12).unwrap();
        assert_eq!(dist.support.len(), p.num_states());
        for (b, q) in dist.support.iter().zip(&p.endowments.probs) {
            assert!(b.atom);
            assert_abs_diff_eq!(b.mass, *q, epsilon = 1e-12);
        }
    }
}

#[test]
fn first_best_has_flat_yields() {
    let p = EconomyParams::example1();
    let pol = FirstBestPolicy::new(&p).unwrap();
    let dist = invariant(&pol, 1000, 1e-12).unwrap();
    let sup = PricingSupport::from_bins(&pol, &dist).unwrap();
    let rep = AssetPriceReport::new(&sup, &GrowthProcess::none(), 5).unwrap();
    assert_abs_diff_eq!(rep.upsilon, 0.0, epsilon = 1e-15);
    assert!(rep.upsilon_psi.abs() < 1e-9);
}

#[test]
fn first_best_value_is_continuous_at_kink() {
    let fb = first_best(&EconomyParams::three_state()).unwrap();
    for s in 0..3 {
        let w = fb.omega_star[s];
        assert_abs_diff_eq!(fb.value(s, w - 1e-12), fb.value(s, w + 1e-12), epsilon = 1e-9);
    }
}

#[test]
fn deterministic_minimum_share() {
    let b = b75();
    let s = 0.6;
    let det = deterministic_solve(s, Preferences::new(b, b).unwrap()).unwrap();
    // Newton on log c + β log(1−c) = log s + β log(1−s) from the left.
    let ups = s.ln() + b * (1.0 - s).ln();
    let mut c: f64 = 0.2;
    for _ in 0..100 {
        let f = c.ln() + b * (1.0 - c).ln() - ups;
        let df = 1.0 / c - b / (1.0 - c);
        c -= f / df;
    }
    assert_abs_diff_eq!(det.c_min, c, epsilon = 1e-12);
    assert!(det.c_min < 1.0 / (1.0 + b));
    assert!(det.first_best_sustainable);
}

#[test]
fn deterministic_path_descends_to_first_best() {
    let b = b75();
    let det = deterministic_solve(0.7, Preferences::new(b, b).unwrap()).unwrap();
    let w0 = 0.5 * (det.omega_star + det.omega_max_det);
    let path = det.path(w0, 10_000);
    let last = *path.last().unwrap();
    assert_eq!(last, det.omega_star);
    assert!(path.len() < 10_000);
    for w in path.windows(2) {
        assert!(w[1] <= w[0]);
    }
    // Strict descent until the fixed point.
    let n = path.len();
    for w in path[..n - 1].windows(2) {
        assert!(w[1] < w[0]);
    }
}

#[test]
fn deterministic_flat_below_critical_promise() {
    let b = b75();
    let det = deterministic_solve(0.7, Preferences::new(b, b).unwrap()).unwrap();
    for k in 0..20 {
        let w = det.omega_min + (det.omega_c - det.omega_min) * k as f64 / 20.0;
        assert_eq!(det.policy(w), det.omega_star);
    }
    let l = det.ladder(5);
    for w in l.windows(2) {
        assert!(w[1] > w[0]);
    }
    assert_abs_diff_eq!(l[1], det.omega_c, epsilon = 1e-14);
}

#[test]
fn deterministic_unsustainable_first_best() {
    // s just above 1/(1+β): the constrained share exceeds c*.
    let b = 0.9;
    let det = deterministic_solve(0.54, Preferences::new(b, b).unwrap()).unwrap();
    assert!(!det.first_best_sustainable);
    assert_eq!(det.policy(-1.0), det.omega_max_det);
}

#[test]
fn first_best_policy_resets() {
    let pol = FirstBestPolicy::new(&EconomyParams::example1()).unwrap();
    let d = pol.decide(1, -0.3);
    assert_eq!(d.promises, pol.first_best.omega_star);
    assert_eq!(d.mu, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_best_share_below_endowment(b in 0.8f64..0.999, r in 0.8f64..1.2, s in 0.55f64..0.95) {
        let d = (b * r).min(0.9999);
        let det = deterministic_solve(s, Preferences::new(b, d).unwrap()).unwrap();
        prop_assert!(det.c_star <= s);
        prop_assert!(det.c_min < s);
        prop_assert!(det.omega_star >= det.omega_min);
    }
}
