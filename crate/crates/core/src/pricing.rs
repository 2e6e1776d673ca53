//! State prices on the ergodic support, the Perron pair, yield curves and
//! the risk premium on debt.

use serde::{Deserialize, Serialize};

use crate::econ::{EconomyParams, GrowthProcess};
use crate::ergodic::ErgodicDistribution;
use crate::error::{Error, Result};
use crate::policy::PromisePolicy;
use crate::shooting::{self, NuLadder};

/// Rungs taken from the shot ladder before the geometric tail.
pub const LADDER_EXACT_RUNGS: usize = 12;
/// Last rung of the ladder support; ν is held constant from here on.
pub const LADDER_LEN: usize = 60;
/// Cap on points enumerated by [`PricingSupport::from_policy`].
pub const DEFAULT_SUPPORT_POINTS: usize = 2000;
/// Promises closer than this are treated as one support point.
pub const MERGE_TOL: f64 = 1e-12;

/// A point x = (s, d) of the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub state: usize,
    pub d: f64,
    pub omega: f64,
    pub c: f64,
    /// ν = 1 + μ.
    pub nu: f64,
    pub mass: f64,
}

/// Transition from x to the support point reached when next state is r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub target: usize,
    pub r: usize,
    pub prob: f64,
    /// m(x, x′) = βc(x)/(1 − c(x′)).
    pub m: f64,
    /// Next-period debt b_r(d).
    pub b: f64,
}

/// A finite support closed under the policies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PricingSupport {
    pub points: Vec<SupportPoint>,
    pub edges: Vec<Vec<Edge>>,
    pub shares: Vec<f64>,
    pub probs: Vec<f64>,
    pub beta: f64,
    pub delta: f64,
}

fn ladder_nus(ladder: &NuLadder, k: usize, len: usize) -> Vec<f64> {
    // ν^(n) for n = −1..=len.
    let nu_inf = ladder.nu_inf;
    let k = k.min(ladder.horizon).max(1);
    let mut nu: Vec<f64> = (-1..=k as isize).map(|n| ladder.nu_at(n)).collect();
    let e1 = ladder.nu_at(k as isize) - nu_inf;
    let e0 = ladder.nu_at(k as isize - 1) - nu_inf;
    let theta = if e0 != 0.0 { (e1 / e0).clamp(0.0, 0.999) } else { 0.0 };
    let mut e = e1;
    while nu.len() < len + 2 {
        e *= theta;
        nu.push(nu_inf + e);
    }
    // Hold the last two rungs equal so that the top state maps to itself.
    let n = nu.len();
    nu[n - 1] = nu[n - 2];
    nu
}

impl PricingSupport {
    /// Two-state support indexed by (s, n), n the count of preceding
    /// consecutive state-2 draws, built from the shot ladder.
    pub fn from_ladder(params: &EconomyParams, ladder: &NuLadder, len: usize) -> Result<Self> {
        if params.num_states() != 2 {
            return Err(Error::InvalidParameters("ladder support needs two states".into()));
        }
        let len = len.max(2);
        let nu = ladder_nus(ladder, LADDER_EXACT_RUNGS, len);
        let at = |n: isize| nu[(n + 1) as usize];
        let beta = params.prefs.beta;
        let delta = params.prefs.delta;
        let shares = params.endowments.shares.clone();
        let probs = params.endowments.probs.clone();
        let p1 = probs[0];
        let idx = |s: usize, n: usize| s * (len + 1) + n;
        let mut points = Vec::with_capacity(2 * (len + 1));
        for s in 0..2 {
            for n in 0..=len {
                let prev = at(n as isize - 1);
                let cur = if s == 0 { 1.0 } else { at(n as isize) };
                let c = delta * cur / (beta * prev + delta * cur);
                let mass = probs[s] * p1 * (1.0 - p1).powi(n as i32)
                    / if n == len { p1 } else { 1.0 };
                points.push(SupportPoint {
                    state: s,
                    d: 1.0 - c / shares[s],
                    omega: (1.0 - c).ln(),
                    c,
                    nu: cur,
                    mass,
                });
            }
        }
        let mut edges = Vec::with_capacity(points.len());
        for s in 0..2 {
            for n in 0..=len {
                let x = points[idx(s, n)];
                let n_next = if s == 0 { 0 } else { (n + 1).min(len) };
                let row = (0..2)
                    .map(|r| {
                        let y = points[idx(r, n_next)];
                        Edge {
                            target: idx(r, n_next),
                            r,
                            prob: probs[r],
                            m: beta * x.c / (1.0 - y.c),
                            b: y.d,
                        }
                    })
                    .collect();
                edges.push(row);
            }
        }
        Ok(Self {
            points,
            edges,
            shares,
            probs,
            beta,
            delta,
        })
    }

    /// Two-state support straight from the parameters.
    pub fn two_state(params: &EconomyParams) -> Result<Self> {
        let ladder = shooting::shoot(params, 20, 1e-10)?;
        Self::from_ladder(params, &ladder, LADDER_LEN)
    }

    /// Support reached by following the policies from (initial state, reset
    /// promise). Successors within `tol` of an existing point of the same
    /// state are merged with it; once `max_points` exist, new successors go
    /// to the nearest existing point. Masses solve the induced chain.
    pub fn from_policy<P: PromisePolicy + ?Sized>(
        policy: &P,
        max_points: usize,
        tol: f64,
    ) -> Result<Self> {
        let econ = policy.economy();
        let n = econ.num_states();
        let beta = econ.beta();
        let shares = econ.shares().to_vec();
        let probs = econ.probs().to_vec();
        let s0 = econ.params.initial_state;

        let mut points: Vec<SupportPoint> = Vec::new();
        let mut promises: Vec<Vec<f64>> = Vec::new();
        // Per state, (ω, index) sorted by ω.
        let mut sorted: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
        let add = |s: usize,
                   w: f64,
                   points: &mut Vec<SupportPoint>,
                   promises: &mut Vec<Vec<f64>>,
                   sorted: &mut Vec<Vec<(f64, usize)>>| {
            let dec = policy.decide(s, w);
            let i = points.len();
            points.push(SupportPoint {
                state: s,
                d: econ.debt(s, w),
                omega: w,
                c: dec.consumption,
                nu: 1.0 + dec.mu,
                mass: 0.0,
            });
            promises.push(dec.promises);
            let at = sorted[s].partition_point(|e| e.0 < w);
            sorted[s].insert(at, (w, i));
            i
        };
        let nearest = |sorted: &[(f64, usize)], w: f64| -> Option<(usize, f64)> {
            let at = sorted.partition_point(|e| e.0 < w);
            [at.checked_sub(1), Some(at)]
                .into_iter()
                .flatten()
                .filter_map(|k| sorted.get(k))
                .map(|e| (e.1, (e.0 - w).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        add(s0, policy.reset_promise(s0), &mut points, &mut promises, &mut sorted);

        let mut edges: Vec<Vec<Edge>> = Vec::new();
        let mut k = 0;
        while k < points.len() {
            let x = points[k];
            let g = promises[k].clone();
            let mut row = Vec::with_capacity(n);
            for (r, &w) in g.iter().enumerate() {
                let target = match nearest(&sorted[r], w) {
                    Some((i, dist)) if dist <= tol => i,
                    _ if points.len() < max_points => {
                        add(r, w, &mut points, &mut promises, &mut sorted)
                    }
                    Some((i, _)) => i,
                    None => return Err(Error::EmptySupport),
                };
                row.push(Edge {
                    target,
                    r,
                    prob: probs[r],
                    m: beta * x.c * (-w).exp(),
                    b: econ.debt(r, w),
                });
            }
            edges.push(row);
            k += 1;
        }

        // Masses by power iteration from the root.
        let mut phi = vec![0.0; points.len()];
        phi[0] = 1.0;
        for _ in 0..1_000_000 {
            let mut next = vec![0.0; phi.len()];
            for (i, row) in edges.iter().enumerate() {
                for e in row {
                    next[e.target] += phi[i] * e.prob;
                }
            }
            let diff = next.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            phi = next;
            if diff < 1e-15 {
                break;
            }
        }
        for (p, m) in points.iter_mut().zip(&phi) {
            p.mass = *m;
        }
        Ok(Self {
            points,
            edges,
            shares,
            probs,
            beta,
            delta: econ.delta(),
        })
    }

    /// Support from the occupied bins of a binned invariant distribution.
    /// Each bin is represented by its center, or by the reset promise when
    /// that falls inside it; successors that land in an
    /// empty bin are sent to the nearest occupied bin of the same state.
    pub fn from_bins<P: PromisePolicy + ?Sized>(
        policy: &P,
        dist: &ErgodicDistribution,
    ) -> Result<Self> {
        if dist.support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let econ = policy.economy();
        let beta = econ.beta();
        let shares = econ.shares().to_vec();
        let probs = econ.probs().to_vec();
        let mut points = Vec::with_capacity(dist.support.len());
        let mut decisions = Vec::with_capacity(dist.support.len());
        for b in &dist.support {
            // Reset atoms are known exactly.
            let reset = policy.reset_promise(b.state);
            let omega = if dist.chain.bin(b.state, reset) == b.bin {
                reset
            } else {
                b.omega
            };
            let p = policy.decide(b.state, omega);
            points.push(SupportPoint {
                state: b.state,
                d: econ.debt(b.state, omega),
                omega,
                c: p.consumption,
                nu: 1.0 + p.mu,
                mass: b.mass,
            });
            decisions.push(p);
        }
        let nearest = |r: usize, w: f64| -> Option<usize> {
            points
                .iter()
                .enumerate()
                .filter(|(_, p)| p.state == r)
                .min_by(|a, b| (a.1.omega - w).abs().total_cmp(&(b.1.omega - w).abs()))
                .map(|(i, _)| i)
        };
        let mut edges = Vec::with_capacity(points.len());
        for (x, dec) in points.iter().zip(&decisions) {
            let mut row = Vec::with_capacity(shares.len());
            for (r, &g) in dec.promises.iter().enumerate() {
                let target = nearest(r, g).ok_or(Error::EmptySupport)?;
                row.push(Edge {
                    target,
                    r,
                    prob: probs[r],
                    m: beta * x.c * (-g).exp(),
                    b: econ.debt(r, g),
                });
            }
            edges.push(row);
        }
        Ok(Self {
            points,
            edges,
            shares,
            probs,
            beta,
            delta: econ.delta(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// (Qv)(x) = Σ q(x,x′)v(x′).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.edges
            .iter()
            .map(|row| row.iter().map(|e| e.prob * e.m * v[e.target]).sum())
            .collect()
    }

    /// Dense state-price matrix.
    pub fn state_prices(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        self.edges
            .iter()
            .map(|row| {
                let mut q = vec![0.0; n];
                for e in row {
                    q[e.target] += e.prob * e.m;
                }
                q
            })
            .collect()
    }

    /// Index of the point with the largest ν.
    pub fn nu_max_index(&self) -> usize {
        (0..self.len())
            .max_by(|&a, &b| self.points[a].nu.total_cmp(&self.points[b].nu))
            .unwrap_or(0)
    }

    /// Υ = log ν_max.
    pub fn martin_ross(&self) -> f64 {
        self.points[self.nu_max_index()].nu.ln()
    }

    /// The point of state s with smallest (or largest) debt.
    pub fn extreme_debt(&self, s: usize, largest: bool) -> Option<usize> {
        let it = (0..self.len()).filter(|&i| self.points[i].state == s);
        if largest {
            it.max_by(|&a, &b| self.points[a].d.total_cmp(&self.points[b].d))
        } else {
            it.min_by(|&a, &b| self.points[a].d.total_cmp(&self.points[b].d))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Perron {
    pub rho: f64,
    /// Normalized to max ψ = 1.
    pub psi: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration on Q until successive root estimates differ by < tol.
pub fn perron(sup: &PricingSupport, tol: f64, max_iters: usize) -> Result<Perron> {
    if sup.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut v = vec![1.0; sup.len()];
    let mut rho = f64::NAN;
    let mut drift = f64::INFINITY;
    for it in 1..=max_iters {
        let w = sup.apply(&v);
        let top = w.iter().copied().fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(Error::Numerical("state-price matrix annihilates the iterate".into()));
        }
        let vmax = v.iter().copied().fold(0.0, f64::max);
        let est = top / vmax;
        let psi: Vec<f64> = w.iter().map(|x| x / top).collect();
        let change = psi.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        drift = (est - rho).abs();
        rho = est;
        v = psi;
        if drift < tol && change < tol.sqrt() {
            return Ok(Perron {
                rho,
                psi: v,
                iterations: it,
            });
        }
    }
    Err(Error::Numerical(format!(
        "power iteration stalled after {max_iters} steps, root drift {drift:.3e}"
    )))
}

/// Bond yields by maturity: y[k−1][x] = −log p^k(x)/k.
pub fn yields(sup: &PricingSupport, k_max: usize) -> Vec<Vec<f64>> {
    let mut p = vec![1.0; sup.len()];
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        p = sup.apply(&p);
        out.push(p.iter().map(|x| -x.ln() / k as f64).collect());
    }
    out
}

/// Yield-curve summary on a support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssetPriceReport {
    pub rho: f64,
    pub psi: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub y_inf: f64,
    /// log γ̄, added to every yield.
    pub growth_shift: f64,
    /// log ν_max.
    pub upsilon: f64,
    /// log(ψ_max/ψ_min).
    pub upsilon_psi: f64,
    /// y^∞ − y¹(x).
    pub spreads: Vec<f64>,
}

impl AssetPriceReport {
    pub fn new(sup: &PricingSupport, growth: &GrowthProcess, k_max: usize) -> Result<Self> {
        let pf = perron(sup, 1e-12, 1_000_000)?;
        let y = yields(sup, k_max.max(1));
        let y_inf = -pf.rho.ln();
        let pmin = pf.psi.iter().copied().fold(f64::INFINITY, f64::min);
        let pmax = pf.psi.iter().copied().fold(0.0, f64::max);
        let spreads = y[0].iter().map(|y1| y_inf - y1).collect();
        Ok(Self {
            rho: pf.rho,
            psi: pf.psi,
            y,
            y_inf,
            growth_shift: growth.harmonic_mean().ln(),
            upsilon: sup.martin_ross(),
            upsilon_psi: (pmax / pmin).ln(),
            spreads,
        })
    }

    pub fn y_plus(&self, k: usize, x: usize) -> f64 {
        self.y[k - 1][x] + self.growth_shift
    }
}

/// Risk premium on debt at one debt level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mrp {
    pub d: f64,
    pub mrp_plus: f64,
    pub mrp: f64,
    pub alpha: f64,
    pub mrp_star: f64,
    /// Expected growth-adjusted return on debt.
    pub r_bar: f64,
    pub r_f: f64,
}

impl Mrp {
    /// MRP₊ − MRP − α·MRP*.
    pub fn identity_residual(&self) -> f64 {
        self.mrp_plus - self.mrp - self.alpha * self.mrp_star
    }

    pub fn gap(&self) -> f64 {
        self.mrp_star - self.mrp_plus
    }
}

/// MRP at debt d given next-period debts b_r(d). The current share cancels
/// and is set to 1.
pub fn mrp_at(
    beta: f64,
    shares: &[f64],
    probs: &[f64],
    d: f64,
    b: &[f64],
    growth: &GrowthProcess,
) -> Result<Mrp> {
    let m: Vec<f64> = shares
        .iter()
        .zip(b)
        .map(|(&r, &br)| beta * (1.0 - d) / (1.0 - r * (1.0 - br)))
        .collect();
    let value: f64 = (0..b.len()).map(|i| probs[i] * m[i] * shares[i] * b[i]).sum();
    if !(value > 0.0) {
        return Err(Error::UndefinedReturn(d));
    }
    let r_bar: f64 = (0..b.len()).map(|i| probs[i] * shares[i] * b[i] / value).sum();
    let r_f = 1.0 / (0..b.len()).map(|i| probs[i] * m[i]).sum::<f64>();
    let alpha = r_bar / r_f;
    let (eg, gbar) = (growth.mean(), growth.harmonic_mean());
    Ok(Mrp {
        d,
        mrp_plus: (r_bar * eg - r_f * gbar) / (r_f * gbar),
        mrp: alpha - 1.0,
        alpha,
        mrp_star: (eg - gbar) / gbar,
        r_bar,
        r_f,
    })
}

/// −cov_π(m, R) at one support point.
pub fn mrp_covariance(sup: &PricingSupport, x: usize) -> f64 {
    let row = &sup.edges[x];
    // Value of the bonds issued at x, s·BR(d).
    let value: f64 = row.iter().map(|e| e.prob * e.m * sup.shares[e.r] * e.b).sum();
    let ret: Vec<f64> = row.iter().map(|e| sup.shares[e.r] * e.b / value).collect();
    let em: f64 = row.iter().map(|e| e.prob * e.m).sum();
    let er: f64 = row.iter().zip(&ret).map(|(e, r)| e.prob * r).sum();
    let emr: f64 = row.iter().zip(&ret).map(|(e, r)| e.prob * e.m * r).sum();
    -(emr - em * er)
}

/// MRP at every support point, from the support's own successor debts.
pub fn mrp_on_support(sup: &PricingSupport, growth: &GrowthProcess) -> Result<Vec<Mrp>> {
    sup.points
        .iter()
        .zip(&sup.edges)
        .map(|(p, row)| {
            let mut b = vec![0.0; sup.shares.len()];
            for e in row {
                b[e.r] = e.b;
            }
            mrp_at(sup.beta, &sup.shares, &sup.probs, p.d, &b, growth)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_growth_has_no_aggregate_premium() {
        let g = GrowthProcess::none();
        let m = mrp_at(0.98, &[0.5, 0.7], &[0.5, 0.5], 0.1, &[0.0, 0.25], &g).unwrap();
        assert_eq!(m.mrp_star, 0.0);
        assert!((m.mrp_plus - m.mrp).abs() < 1e-15);
    }

    #[test]
    fn zero_debt_everywhere_is_undefined() {
        let g = GrowthProcess::none();
        assert!(mrp_at(0.98, &[0.5, 0.7], &[0.5, 0.5], 0.1, &[0.0, 0.0], &g).is_err());
    }
}
