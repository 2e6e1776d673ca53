//! CSV tables. Floats carry 17 significant digits; states are written 1-based.

use std::path::Path;

use crate::debt::DebtTable;
use crate::ergodic::{ErgodicDistribution, PathPoint};
use crate::error::Result;
use crate::planner::PlannerSolution;
use crate::pricing::{AssetPriceReport, Mrp, PricingSupport};
use crate::shooting::NuLadder;
use crate::welfare::{ShockResponse, WelfareMeasures};

/// Lossless decimal form of a double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `header` then `rows`, each already formatted.
pub fn write_table<P: AsRef<Path>>(path: P, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn floats(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| fmt_f64(x)).collect()
}

/// Columns t, state, omega, c, d.
pub fn write_path<P: AsRef<Path>>(path: P, pts: &[PathPoint]) -> Result<()> {
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|p| {
            let mut r = vec![p.t.to_string(), (p.state + 1).to_string()];
            r.extend(floats(&[p.omega, p.c, p.d]));
            r
        })
        .collect();
    write_table(path, &cols(&["t", "state", "omega", "c", "d"]), &rows)
}

/// Columns state, bin_center, mass; bins with zero mass are skipped.
pub fn write_distribution<P: AsRef<Path>>(path: P, dist: &ErgodicDistribution) -> Result<()> {
    let ch = &dist.chain;
    let mut rows = Vec::new();
    for s in 0..ch.num_states() {
        for k in 0..ch.bins {
            let m = dist.phi[s * ch.bins + k];
            if m > 0.0 {
                let mut r = vec![(s + 1).to_string()];
                r.extend(floats(&[ch.center(s, k), m]));
                rows.push(r);
            }
        }
    }
    write_table(path, &cols(&["state", "bin_center", "mass"]), &rows)
}

/// Columns d, b_1..b_I, BR, tau.
pub fn write_debt<P: AsRef<Path>>(path: P, t: &DebtTable) -> Result<()> {
    let n = t.b.first().map_or(0, |b| b.len());
    let mut header = vec!["d".to_string()];
    header.extend((1..=n).map(|r| format!("b_{r}")));
    header.extend(cols(&["BR", "tau"]));
    let rows: Vec<Vec<String>> = (0..t.d.len())
        .map(|k| {
            let mut v = vec![t.d[k]];
            v.extend(&t.b[k]);
            v.push(t.br[k]);
            v.push(t.tau[k]);
            floats(&v)
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Columns state, d, k, y, y_plus.
pub fn write_yields<P: AsRef<Path>>(path: P, sup: &PricingSupport, rep: &AssetPriceReport) -> Result<()> {
    let mut rows = Vec::new();
    for (i, p) in sup.points.iter().enumerate() {
        for k in 1..=rep.y.len() {
            rows.push(vec![
                (p.state + 1).to_string(),
                fmt_f64(p.d),
                k.to_string(),
                fmt_f64(rep.y[k - 1][i]),
                fmt_f64(rep.y_plus(k, i)),
            ]);
        }
    }
    write_table(path, &cols(&["state", "d", "k", "y", "y_plus"]), &rows)
}

/// Columns state, d, mass, mrp_plus, mrp, alpha, mrp_star.
pub fn write_mrp<P: AsRef<Path>>(path: P, sup: &PricingSupport, m: &[Mrp]) -> Result<()> {
    let rows: Vec<Vec<String>> = sup
        .points
        .iter()
        .zip(m)
        .map(|(p, x)| {
            let mut r = vec![(p.state + 1).to_string()];
            r.extend(floats(&[x.d, p.mass, x.mrp_plus, x.mrp, x.alpha, x.mrp_star]));
            r
        })
        .collect();
    write_table(
        path,
        &cols(&["state", "d", "mass", "mrp_plus", "mrp", "alpha", "mrp_star"]),
        &rows,
    )
}

/// Columns t, mean_c, c_star, delta_star_c.
pub fn write_irf<P: AsRef<Path>>(path: P, r: &ShockResponse) -> Result<()> {
    let rows: Vec<Vec<String>> = r
        .t
        .iter()
        .map(|&t| {
            let mut v = vec![t.to_string()];
            v.extend(floats(&[r.mean_c[t], r.c_star[t], r.delta_star_c[t]]));
            v
        })
        .collect();
    write_table(path, &cols(&["t", "mean_c", "c_star", "delta_star_c"]), &rows)
}

/// Columns n, nu, c1, c2, d1, d2.
pub fn write_ladder<P: AsRef<Path>>(path: P, l: &NuLadder) -> Result<()> {
    let rows: Vec<Vec<String>> = l
        .rows()
        .iter()
        .map(|r| {
            let mut v = vec![(r[0] as usize).to_string()];
            v.extend(floats(&r[1..]));
            v
        })
        .collect();
    write_table(path, &cols(&["n", "nu", "c1", "c2", "d1", "d2"]), &rows)
}

/// Columns state, omega, d, value, c, mu, lambda, g_1..g_I on `n` points per state.
pub fn write_policy<P: AsRef<Path>>(path: P, sol: &PlannerSolution, n: usize) -> Result<()> {
    let econ = &sol.economy;
    let ns = econ.num_states();
    let mut header = cols(&["state", "omega", "d", "value", "c", "mu", "lambda"]);
    header.extend((1..=ns).map(|r| format!("g_{r}")));
    let mut rows = Vec::new();
    let n = n.max(2);
    for s in 0..ns {
        let (lo, hi) = (econ.omega_min(s), econ.omega_max(s));
        for k in 0..n {
            let w = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let p = sol.policy_eval(s, w)?;
            let mut v = vec![w, econ.debt(s, w), sol.value(s, w), p.consumption, p.mu, p.lambda];
            v.extend(&p.promises);
            let mut r = vec![(s + 1).to_string()];
            r.extend(floats(&v));
            rows.push(r);
        }
    }
    write_table(path, &header, &rows)
}

/// Columns state, omega, mass, iota, theta.
pub fn write_welfare<P: AsRef<Path>>(path: P, w: &WelfareMeasures) -> Result<()> {
    let rows: Vec<Vec<String>> = w
        .points
        .iter()
        .map(|p| {
            let mut r = vec![(p.state + 1).to_string()];
            r.extend(floats(&[p.omega, p.mass, p.iota, p.theta]));
            r
        })
        .collect();
    write_table(path, &cols(&["state", "omega", "mass", "iota", "theta"]), &rows)
}

/// Two float columns.
pub fn write_series<P: AsRef<Path>>(path: P, names: [&str; 2], xs: &[f64], ys: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> = xs.iter().zip(ys).map(|(&x, &y)| floats(&[x, y])).collect();
    write_table(path, &cols(&names), &rows)
}
