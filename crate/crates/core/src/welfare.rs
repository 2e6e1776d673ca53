//! Insurance coefficient, consumption-equivalent welfare loss, and the
//! response to a one-off population increase.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ergodic::{draw_state, ErgodicDistribution};
use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;
use crate::planner::{PlannerSolution, Stage};
use crate::policy::PromisePolicy;

/// Horizon up to which the shock response is computed by enumerating paths.
pub const ENUMERATION_HORIZON: usize = 12;
pub const DEFAULT_SHOCK_HORIZON: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsuranceReport {
    pub iota: f64,
    /// cov_π(log c′, log r).
    pub cov: f64,
    /// var_π(log r).
    pub var: f64,
}

/// ι from next-period consumption shares c′_r, one per state r.
pub fn insurance_from(shares: &[f64], probs: &[f64], next_c: &[f64]) -> Result<InsuranceReport> {
    let lr: Vec<f64> = shares.iter().map(|r| r.ln()).collect();
    let lc: Vec<f64> = next_c.iter().map(|c| c.ln()).collect();
    let mr: f64 = probs.iter().zip(&lr).map(|(p, x)| p * x).sum();
    let mc: f64 = probs.iter().zip(&lc).map(|(p, x)| p * x).sum();
    let var: f64 = probs.iter().zip(&lr).map(|(p, x)| p * (x - mr).powi(2)).sum();
    let cov: f64 = (0..probs.len())
        .map(|i| probs[i] * (lr[i] - mr) * (lc[i] - mc))
        .sum();
    if !(var > 0.0) {
        return Err(Error::Undefined("endowment share has no variance".into()));
    }
    Ok(InsuranceReport {
        iota: 1.0 - cov / var,
        cov,
        var,
    })
}

/// ι at (s, ω) under any allocation rule.
pub fn insurance_coefficient<P: PromisePolicy + ?Sized>(
    policy: &P,
    s: usize,
    omega: f64,
) -> Result<InsuranceReport> {
    let econ = policy.economy();
    let g = policy.decide(s, omega).promises;
    let next: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(r, &w)| policy.decide(r, w).consumption)
        .collect();
    insurance_from(econ.shares(), econ.probs(), &next)
}

/// θ with V = log((1−θ)c*(s)) + (β/δ)log((1−θ)(1−c*(s))) + δ/(1−δ)Σπ(r)[same at r].
/// The right side is linear in log(1−θ).
pub fn cev_from(value: f64, s: usize, c_star: &[f64], probs: &[f64], beta: f64, delta: f64) -> f64 {
    let u = |c: f64| c.ln() + beta / delta * (1.0 - c).ln();
    let ubar: f64 = probs.iter().zip(c_star).map(|(p, &c)| p * u(c)).sum();
    let base = u(c_star[s]) + delta / (1.0 - delta) * ubar;
    let slope = (1.0 + beta / delta) / (1.0 - delta);
    -((value - base) / slope).exp_m1()
}

/// Left minus right side of the CEV equation at θ.
pub fn cev_residual(value: f64, theta: f64, s: usize, c_star: &[f64], probs: &[f64], beta: f64, delta: f64) -> f64 {
    let u = |c: f64| ((1.0 - theta) * c).ln() + beta / delta * ((1.0 - theta) * (1.0 - c)).ln();
    let ubar: f64 = probs.iter().zip(c_star).map(|(p, &c)| p * u(c)).sum();
    value - u(c_star[s]) - delta / (1.0 - delta) * ubar
}

pub fn cev(sol: &PlannerSolution, s: usize, omega: f64) -> f64 {
    let e = &sol.economy;
    cev_from(sol.value(s, omega), s, &sol.first_best.c_star, e.probs(), e.beta(), e.delta())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelfarePoint {
    pub state: usize,
    pub omega: f64,
    pub mass: f64,
    pub iota: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelfareMeasures {
    pub points: Vec<WelfarePoint>,
    pub mean_iota: f64,
    pub mean_theta: f64,
}

/// ι and θ on the support of φ with their φ-expectations.
pub fn welfare_measures(sol: &PlannerSolution, dist: &ErgodicDistribution) -> Result<WelfareMeasures> {
    let mut points = Vec::with_capacity(dist.support.len());
    for b in &dist.support {
        points.push(WelfarePoint {
            state: b.state,
            omega: b.omega,
            mass: b.mass,
            iota: insurance_coefficient(sol, b.state, b.omega)?.iota,
            theta: cev(sol, b.state, b.omega),
        });
    }
    let total = pairwise_sum(&points.iter().map(|p| p.mass).collect::<Vec<_>>());
    let mean = |f: &dyn Fn(&WelfarePoint) -> f64| {
        pairwise_sum(&points.iter().map(|p| p.mass * f(p)).collect::<Vec<_>>()) / total
    };
    let mean_iota = mean(&|p| p.iota);
    let mean_theta = mean(&|p| p.theta);
    Ok(WelfareMeasures {
        points,
        mean_iota,
        mean_theta,
    })
}

/// First-best consumption share in the period of the population increase.
pub fn first_best_shock_share(beta: f64, delta: f64, eps: f64) -> f64 {
    let a = delta * (1.0 + eps);
    a / (beta + a)
}

/// Policies in the shock period.
pub struct ShockPolicy<'a> {
    pub sol: &'a PlannerSolution,
    pub eps: f64,
}

impl ShockPolicy<'_> {
    /// Endowment share of the young in the shock period.
    pub fn share(&self, s: usize) -> f64 {
        let e = self.sol.economy.shares()[s];
        (1.0 + self.eps) * e / (1.0 + self.eps * e)
    }

    /// (f̃, g̃) at state s with inherited promise ω.
    pub fn decide(&self, s: usize, omega: f64) -> (f64, Vec<f64>) {
        let econ = &self.sol.economy;
        let e = econ.shares()[s];
        let income = 1.0 + self.eps * e;
        let share = self.share(s);
        let rest: f64 = econ.upsilon_hat(s) - e.ln();
        let w = omega.max(self.sol.omega0[s]).min(econ.omega_max(s));
        let (c, _, g) = self.sol.staged(&Stage {
            scale: 1.0 + self.eps,
            share,
            upsilon: share.ln() + rest,
            c_cap: 1.0 - w.exp() / income,
            force_cap: false,
        });
        (c, g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub paths: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            paths: 20_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrfConfig {
    pub horizon: usize,
    /// Last period computed by exact path enumeration.
    pub enumerate_upto: usize,
    pub monte_carlo: Option<MonteCarloConfig>,
}

impl Default for IrfConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_SHOCK_HORIZON,
            enumerate_upto: ENUMERATION_HORIZON,
            monte_carlo: Some(MonteCarloConfig::default()),
        }
    }
}

/// Response of the young's average consumption share to the shock.
///
/// With x_T drawn from the invariant distribution the unshocked mean stays
/// at its period-T value, so E c̄_{T+t} is that mean plus E[c̃ − c] over
/// paths on which the shocked and unshocked promises have not yet merged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockResponse {
    pub epsilon: f64,
    /// t = 0 is the period before the shock.
    pub t: Vec<usize>,
    /// E_φ c̄_{T+t}.
    pub mean_c: Vec<f64>,
    /// First-best benchmark c*_t.
    pub c_star: Vec<f64>,
    /// (mean_c − c*)/c*.
    pub delta_star_c: Vec<f64>,
    /// Exact E[c̃ − c] by enumeration.
    pub enumerated: Vec<Option<f64>>,
    /// Monte Carlo mean of c̃ − c and its standard error.
    pub monte_carlo: Vec<Option<(f64, f64)>>,
    /// Path states where shocked consumption fell short of the baseline.
    pub violations: usize,
    /// Largest shortfall of shocked over baseline consumption.
    pub worst_shortfall: f64,
    /// Share of enumerated shock-period states with f̃ > f strictly.
    pub strict_share: f64,
    /// Unmerged paths carried at each enumerated period.
    pub live_paths: Vec<usize>,
}

impl ShockResponse {
    /// Largest |enumerated − Monte Carlo| in units of the standard error.
    pub fn max_z_score(&self) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for (e, m) in self.enumerated.iter().zip(&self.monte_carlo).skip(1) {
            if let (Some(e), Some((m, se))) = (e, m) {
                let gap = (e - m).abs();
                let z = if *se > 0.0 {
                    gap / se
                } else if gap < 1e-15 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = Some(worst.map_or(z, |w: f64| w.max(z)));
            }
        }
        worst
    }
}

/// Start points (state, ω, mass) from the support of φ.
pub fn start_points(dist: &ErgodicDistribution) -> Vec<(usize, f64, f64)> {
    dist.support.iter().map(|b| (b.state, b.omega, b.mass)).collect()
}

/// Impulse response to a population increase ε at T+1 for x_T drawn from
/// `start`, by exact enumeration and Monte Carlo.
pub fn demographic_irf(
    sol: &PlannerSolution,
    start: &[(usize, f64, f64)],
    eps: f64,
    cfg: &IrfConfig,
) -> Result<ShockResponse> {
    if !(eps > -1.0) {
        return Err(Error::InvalidParameters(format!("epsilon {eps} must exceed -1")));
    }
    let horizon = cfg.horizon;
    if horizon < 1 {
        return Err(Error::InvalidParameters("horizon must be at least 1".into()));
    }
    if start.is_empty() {
        return Err(Error::EmptySupport);
    }
    let econ = &sol.economy;
    let (beta, delta) = (econ.beta(), econ.delta());
    let probs = econ.probs().to_vec();
    let shock = ShockPolicy { sol, eps };
    let n_enum = horizon.min(cfg.enumerate_upto);
    let mc = if horizon > n_enum {
        Some(cfg.monte_carlo.unwrap_or_default())
    } else {
        cfg.monte_carlo
    };

    let c_star: Vec<f64> = (0..=horizon)
        .map(|t| {
            (0..probs.len())
                .map(|r| {
                    let fb = if t == 1 {
                        first_best_shock_share(beta, delta, eps).min(shock.share(r))
                    } else {
                        sol.first_best.c_star[r]
                    };
                    probs[r] * fb
                })
                .sum()
        })
        .collect();

    let total: f64 = start.iter().map(|p| p.2).sum();
    let weights: Vec<f64> = start.iter().map(|p| p.2 / total).collect();
    let mut tally = Tally::default();
    let mut enumerated = vec![None; horizon + 1];
    enumerated[0] = Some(0.0);
    let mut live_paths = vec![start.len()];

    let mut z0 = Vec::with_capacity(start.len());
    // Live paths keyed by (state, shocked promise, baseline promise).
    type Key = (usize, u64, u64);
    let mut live: BTreeMap<Key, f64> = BTreeMap::new();
    for (&(s, w, _), &m) in start.iter().zip(&weights) {
        let dec = sol.decide(s, w);
        z0.push(m * dec.consumption);
        for (r, &g) in dec.promises.iter().enumerate() {
            *live.entry((r, g.to_bits(), g.to_bits())).or_insert(0.0) += m * probs[r];
        }
    }
    let z0 = pairwise_sum(&z0);
    for t in 1..=n_enum {
        let mut next: BTreeMap<Key, f64> = BTreeMap::new();
        let mut terms = Vec::with_capacity(live.len());
        for (&(s, wsh, wb), &p) in &live {
            let (wsh, wb) = (f64::from_bits(wsh), f64::from_bits(wb));
            let base = sol.decide(s, wb);
            let (c, g) = if t == 1 {
                shock.decide(s, wsh)
            } else {
                let d = sol.decide(s, wsh);
                (d.consumption, d.promises)
            };
            tally.record(t == 1, c, base.consumption);
            terms.push(p * (c - base.consumption));
            for r in 0..probs.len() {
                if g[r] != base.promises[r] {
                    let key = (r, g[r].to_bits(), base.promises[r].to_bits());
                    *next.entry(key).or_insert(0.0) += p * probs[r];
                }
            }
        }
        enumerated[t] = Some(pairwise_sum(&terms));
        live_paths.push(next.len());
        live = next;
    }

    let mut monte_carlo = vec![None; horizon + 1];
    if let Some(mcfg) = mc {
        let n = mcfg.paths.max(2);
        let mut diffs = vec![vec![0.0; n]; horizon + 1];
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(mcfg.seed);
            rng.set_stream(i as u64);
            let (s0, w0, _) = start[draw_state(&mut rng, &weights)];
            let mut s = draw_state(&mut rng, &probs);
            let mut wb = sol.decide(s0, w0).promises[s];
            let mut wsh = wb;
            for (t, slot) in diffs.iter_mut().enumerate().skip(1) {
                if t > 1 && wsh == wb {
                    break;
                }
                let base = sol.decide(s, wb);
                let (c, g) = if t == 1 {
                    shock.decide(s, wsh)
                } else {
                    let d = sol.decide(s, wsh);
                    (d.consumption, d.promises)
                };
                tally.record(false, c, base.consumption);
                slot[i] = c - base.consumption;
                s = draw_state(&mut rng, &probs);
                wb = base.promises[s];
                wsh = g[s];
            }
        }
        for (t, v) in diffs.iter().enumerate().skip(1) {
            let nn = v.len() as f64;
            let mean = pairwise_sum(v) / nn;
            let var = pairwise_sum(&v.iter().map(|x| (x - mean).powi(2)).collect::<Vec<_>>())
                / (nn - 1.0);
            monte_carlo[t] = Some((mean, (var / nn).sqrt()));
        }
        monte_carlo[0] = Some((0.0, 0.0));
    }

    let mean_c: Vec<f64> = (0..=horizon)
        .map(|t| {
            z0 + enumerated[t]
                .or(monte_carlo[t].map(|m| m.0))
                .unwrap_or(f64::NAN)
        })
        .collect();
    let delta_star_c = mean_c.iter().zip(&c_star).map(|(z, c)| (z - c) / c).collect();
    Ok(ShockResponse {
        epsilon: eps,
        t: (0..=horizon).collect(),
        mean_c,
        c_star,
        delta_star_c,
        enumerated,
        monte_carlo,
        violations: tally.violations,
        worst_shortfall: tally.worst,
        strict_share: if tally.shock_states > 0 {
            tally.strict as f64 / tally.shock_states as f64
        } else {
            0.0
        },
        live_paths,
    })
}

#[derive(Default)]
struct Tally {
    violations: usize,
    worst: f64,
    strict: usize,
    shock_states: usize,
}

impl Tally {
    fn record(&mut self, shock_period: bool, shocked: f64, base: f64) {
        let short = base - shocked;
        if short > 1e-12 {
            self.violations += 1;
        }
        self.worst = self.worst.max(short);
        if shock_period {
            self.shock_states += 1;
            if shocked > base {
                self.strict += 1;
            }
        }
    }
}
