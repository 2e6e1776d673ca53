mod common;

use std::sync::OnceLock;

use approx::assert_abs_diff_eq;
use common::{example1, three_state, three_state_dist};
use intergen::policy::PromisePolicy;
use intergen::debt::DebtSystem;
use intergen::econ::{EconomyParams, GrowthProcess};
use intergen::pricing::*;
use intergen::shooting::chi_upsilon;
use proptest::prelude::*;

const K: usize = 10;

fn two() -> &'static (PricingSupport, AssetPriceReport) {
    static S: OnceLock<(PricingSupport, AssetPriceReport)> = OnceLock::new();
    S.get_or_init(|| {
        let sup = PricingSupport::two_state(&EconomyParams::example1()).unwrap();
        let rep = AssetPriceReport::new(&sup, &GrowthProcess::two_point(), K).unwrap();
        (sup, rep)
    })
}

fn three() -> &'static (PricingSupport, AssetPriceReport) {
    static S: OnceLock<(PricingSupport, AssetPriceReport)> = OnceLock::new();
    S.get_or_init(|| {
        let sup = PricingSupport::from_policy(three_state(), DEFAULT_SUPPORT_POINTS, MERGE_TOL).unwrap();
        let rep = AssetPriceReport::new(&sup, &GrowthProcess::two_point(), K).unwrap();
        (sup, rep)
    })
}

fn nearest(sup: &PricingSupport, s: usize, d: f64) -> usize {
    (0..sup.len())
        .filter(|&i| sup.points[i].state == s)
        .min_by(|&a, &b| (sup.points[a].d - d).abs().total_cmp(&(sup.points[b].d - d).abs()))
        .unwrap()
}

#[test]
fn bound_from_eigenvector() {
    let (_, rep) = two();
    let (_, ups) = chi_upsilon(&EconomyParams::example1()).unwrap();
    assert!((rep.upsilon_psi - ups).abs() < 1e-5, "{} vs {ups}", rep.upsilon_psi);
    assert!((rep.upsilon - ups).abs() < 1e-5);
}

#[test]
fn perron_root_is_discount_factor() {
    let delta = (-1.0f64 / 75.0).exp();
    for (_, rep) in [two(), three()] {
        assert!((rep.rho - delta).abs() < 1e-5, "rho {}", rep.rho);
        assert!((rep.y_inf - 1.0 / 75.0).abs() < 1e-6);
    }
}

#[test]
fn eigenvector_is_consumption_over_multiplier() {
    let (sup, rep) = two();
    let r: Vec<f64> = sup.points.iter().map(|p| p.c / p.nu).collect();
    let top = r.iter().copied().fold(0.0, f64::max);
    for (a, b) in rep.psi.iter().zip(&r) {
        assert_abs_diff_eq!(*a, b / top, epsilon = 1e-9);
    }
}

fn yields_monotone(sup: &PricingSupport, rep: &AssetPriceReport) -> usize {
    let mut bad = 0;
    for s in 0..sup.shares.len() {
        let mut idx: Vec<usize> = (0..sup.len()).filter(|&i| sup.points[i].state == s).collect();
        idx.sort_by(|&a, &b| sup.points[a].d.total_cmp(&sup.points[b].d));
        for k in 0..K {
            for w in idx.windows(2) {
                if rep.y[k][w[1]] < rep.y[k][w[0]] - 1e-9 {
                    bad += 1;
                }
            }
        }
    }
    bad
}

#[test]
fn yields_rise_with_debt() {
    for (sup, rep) in [two(), three()] {
        assert_eq!(yields_monotone(sup, rep), 0);
    }
}

#[test]
fn yields_within_martin_ross_envelope() {
    for (sup, rep) in [two(), three()] {
        for k in 1..=K {
            for x in 0..sup.len() {
                assert!((rep.y[k - 1][x] - rep.y_inf).abs() <= rep.upsilon / k as f64 + 1e-9);
            }
        }
    }
}

#[test]
fn spread_signs_at_first_best_debts() {
    let sol2 = example1();
    let sol3 = three_state();
    for ((sup, rep), sol) in [(two(), sol2), (three(), sol3)] {
        let i = sup.shares.len() - 1;
        let lo = nearest(sup, 0, sol.first_best.d_star[0]);
        let hi = nearest(sup, i, sol.first_best.d_star[i]);
        assert!(rep.spreads[lo] > 0.0);
        assert!(rep.spreads[hi] < 0.0);
    }
}

#[test]
fn risk_premium_properties() {
    let g = GrowthProcess::two_point();
    let dc = DebtSystem::new(example1()).unwrap().d_c;
    for (sup, _) in [two(), three()] {
        let m = mrp_on_support(sup, &g).unwrap();
        let mut flat = Vec::new();
        for (x, r) in m.iter().enumerate() {
            assert!(r.identity_residual().abs() < 1e-12);
            assert!(r.mrp < 0.0);
            assert!(r.alpha > 0.0 && r.alpha < 1.0);
            assert!(r.gap() > 0.0);
            assert!((r.mrp - mrp_covariance(sup, x)).abs() < 1e-12);
            if sup.shares.len() == 2 && r.d <= dc {
                flat.push(r.gap());
            }
        }
        if !flat.is_empty() {
            let lo = flat.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo < 1e-9);
        }
    }
}

#[test]
fn gap_constant_below_threshold() {
    let sol = example1();
    let ds = DebtSystem::new(sol).unwrap();
    let e = &sol.economy;
    let g = GrowthProcess::two_point();
    let gaps: Vec<f64> = (0..=20)
        .map(|k| {
            let d = ds.d_c * k as f64 / 20.0;
            let b = ds.policies(d).unwrap();
            mrp_at(e.beta(), e.shares(), e.probs(), d, &b, &g).unwrap().gap()
        })
        .collect();
    for x in &gaps {
        assert!((x - gaps[0]).abs() < 1e-9);
    }
}

#[test]
fn aggregate_premium_near_five_percent() {
    let g = GrowthProcess::two_point();
    let (sup, _) = two();
    let m = mrp_on_support(sup, &g).unwrap();
    assert!(m[0].mrp_star > 0.04 && m[0].mrp_star < 0.07);
    assert_abs_diff_eq!(m[0].mrp_star, g.mean() / g.harmonic_mean() - 1.0, epsilon = 1e-15);
}

#[test]
fn growth_shifts_yields() {
    let (_, rep) = two();
    assert_abs_diff_eq!(rep.growth_shift, 0.98462f64.ln(), epsilon = 1e-5);
    assert_abs_diff_eq!(rep.y_plus(3, 7), rep.y[2][7] + rep.growth_shift, epsilon = 0.0);
}

#[test]
fn discount_factor_prices_promises() {
    // Exact on the ladder; on the truncated three-state support only the
    // rows that hit the point cap map to a neighbour.
    for (sup, _) in [two(), three()] {
        let mut loose = 0.0;
        for (p, row) in sup.points.iter().zip(&sup.edges) {
            for e in row {
                let y = sup.points[e.target];
                assert!(e.m > 0.0);
                if (e.m - sup.beta * p.c / (1.0 - y.c)).abs() > 1e-9 * e.m {
                    loose += p.mass * e.prob;
                }
            }
        }
        assert!(loose < 1e-2, "mass on truncated edges {loose}");
    }
}

#[test]
fn enumerated_support_agrees_with_ladder() {
    let (_, rep) = two();
    let sup = PricingSupport::from_policy(example1(), DEFAULT_SUPPORT_POINTS, MERGE_TOL).unwrap();
    assert!(sup.len() < DEFAULT_SUPPORT_POINTS);
    let r = AssetPriceReport::new(&sup, &GrowthProcess::two_point(), K).unwrap();
    assert!((r.rho - rep.rho).abs() < 1e-8);
    assert!((r.upsilon - rep.upsilon).abs() < 1e-5);
    assert_abs_diff_eq!(sup.points.iter().map(|p| p.mass).sum::<f64>(), 1.0, epsilon = 1e-12);
}

#[test]
fn binned_support_is_close() {
    let sup = PricingSupport::from_bins(three_state(), three_state_dist()).unwrap();
    let r = AssetPriceReport::new(&sup, &GrowthProcess::none(), 1).unwrap();
    assert!((r.rho - three_state().economy().delta()).abs() < 1e-3);
}

#[test]
fn ladder_masses_sum_to_one() {
    let (sup, _) = two();
    let total: f64 = sup.points.iter().map(|p| p.mass).sum();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    for row in &sup.edges {
        assert_abs_diff_eq!(row.iter().map(|e| e.prob).sum::<f64>(), 1.0, epsilon = 1e-15);
    }
}

#[test]
fn state_price_matrix_matches_operator() {
    let (sup, _) = two();
    let q = sup.state_prices();
    let v: Vec<f64> = (0..sup.len()).map(|i| 1.0 + (i as f64).sin()).collect();
    let a = sup.apply(&v);
    for (row, ax) in q.iter().zip(&a) {
        let b: f64 = row.iter().zip(&v).map(|(q, v)| q * v).sum();
        assert_abs_diff_eq!(b, *ax, epsilon = 1e-13);
    }
}

#[test]
fn empty_support_rejected() {
    let sup = PricingSupport {
        points: vec![],
        edges: vec![],
        shares: vec![0.5, 0.7],
        probs: vec![0.5, 0.5],
        beta: 0.9,
        delta: 0.9,
    };
    assert!(perron(&sup, 1e-12, 100).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mrp_identity_holds(d in 0.0f64..0.9, b1 in 0.0f64..0.5, b2 in 0.01f64..0.5,
                          g1 in 0.5f64..1.0, g2 in 1.0f64..1.5, p in 0.1f64..0.9) {
        let g = GrowthProcess::new(vec![g1, g2], vec![p, 1.0 - p]).unwrap();
        let m = mrp_at(0.98, &[0.5, 0.7], &[0.5, 0.5], d, &[b1, b2], &g).unwrap();
        prop_assert!(m.identity_residual().abs() < 1e-12);
        prop_assert!(m.mrp_star >= -1e-15);
    }
}
