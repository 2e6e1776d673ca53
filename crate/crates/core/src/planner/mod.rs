//! Value-function iteration for the planner's problem with participation
//! constraints of the young.
//!
//! The promise of the current old is the endogenous state. Each sweep maps
//! continuation tables into new tables through a scalar root in the
//! multiplier μ on the young's constraint. Marginal values come from the
//! envelope condition V_ω = −(β/δ)λ, so each table carries λ at its nodes.

mod inner;
mod table;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{first_best, FirstBest};
use crate::econ::{Economy, EconomyParams};
use crate::error::{Error, Result};
use crate::numerics::{chebyshev_nodes, last_true};
use crate::policy::{Decision, PromisePolicy};

pub(crate) use inner::{Inner, Stage};
pub use table::{StateTable, TableData};

/// Version tag written into serialized solutions.
pub const SOLUTION_FORMAT_VERSION: u32 = 1;

/// Settings for value-function iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Chebyshev nodes per state.
    pub gp: usize,
    /// Sup-norm tolerance on successive value iterates.
    pub tol: f64,
    /// Sup-norm tolerance on successive log(1+λ) tables.
    pub policy_tol: f64,
    pub max_iters: usize,
    /// Cap on the multiplier λ near the upper promise bound.
    pub derivative_cap: f64,
    /// Nodes with λ above this form a boundary layer under ω_max where
    /// iterates contract only at rate δ; they are left out of the stopping rule.
    pub stop_lambda_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gp: 200,
            tol: 1e-6,
            policy_tol: 1e-6,
            max_iters: 500,
            derivative_cap: 1e8,
            stop_lambda_max: 100.0,
        }
    }
}

/// Change between successive iterates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepStats {
    /// sup |V_n − V_{n−1}| over the same nodes.
    pub value_change: f64,
    /// min and max of V_n − V_{n−1} over nodes below the boundary layer.
    pub diff_min: f64,
    pub diff_max: f64,
    /// Bound δ/(1−δ)·(max − min)/2 on the distance from the corrected
    /// iterate to the fixed point.
    pub error_bound: f64,
    /// sup |log(1+λ_n) − log(1+λ_{n−1})| over the same nodes.
    pub policy_change: f64,
}

/// Solution of the planner's problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannerSolution {
    pub format_version: u32,
    pub economy: Economy,
    pub first_best: FirstBest,
    pub config: SolverConfig,
    pub tables: Vec<StateTable>,
    /// Number of sweeps until both tolerances were met.
    pub sweeps: usize,
    /// Sweep at which the value tolerance alone was first met.
    pub value_sweeps: usize,
    pub history: Vec<SweepStats>,
    /// Reset levels ω⁰(s).
    pub omega0: Vec<f64>,
    /// c⁰(s) = f(s, ω⁰(s)).
    pub c0: Vec<f64>,
    /// μ(s, ω⁰(s)).
    pub mu0: Vec<f64>,
    /// Fixed points ω^f(s) = min{ω*(s), ω_max(s)}.
    pub omega_f: Vec<f64>,
    /// Largest promise in state 1 with μ = 0 (all promises reset below it).
    pub omega_c: f64,
}

/// Policies and multipliers at one state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyPoint {
    pub consumption: f64,
    pub promises: Vec<f64>,
    pub mu: f64,
    pub lambda: f64,
    /// Multipliers on the upper promise bounds.
    pub xi: Vec<f64>,
    /// Multipliers on the lower promise bounds.
    pub eta: Vec<f64>,
    /// Young's lifetime utility minus autarky utility.
    pub gain: f64,
}

/// Solves the planner's problem starting from the first-best value.
pub fn solve(params: &EconomyParams, cfg: &SolverConfig) -> Result<PlannerSolution> {
    solve_with_observer(params, cfg, |_, _| {})
}

/// As [`solve`], calling `observe(n, tables)` with every iterate (n = 0 is V*).
pub fn solve_with_observer<F>(
    params: &EconomyParams,
    cfg: &SolverConfig,
    mut observe: F,
) -> Result<PlannerSolution>
where
    F: FnMut(usize, &[StateTable]),
{
    if cfg.gp < 50 {
        return Err(Error::InvalidParameters(format!(
            "gp = {} below the minimum of 50",
            cfg.gp
        )));
    }
    if !(cfg.tol > 0.0) || !(cfg.derivative_cap > 1.0) {
        return Err(Error::InvalidParameters(
            "tolerance and derivative cap must be positive".into(),
        ));
    }
    let economy = Economy::new(params)?;
    let fb = first_best(&economy.params)?;
    let mut tables = initial_tables(&economy, &fb, cfg);
    observe(0, &tables);
    let mut history = Vec::new();
    let mut value_sweeps = None;
    let mut last = None;
    for n in 1..=cfg.max_iters {
        let step = sweep(&economy, &fb, &tables, cfg);
        let stats = change(&tables, &step.tables, economy.delta(), cfg.stop_lambda_max);
        history.push(stats);
        tables = step.tables;
        observe(n, &tables);
        if value_sweeps.is_none() && stats.error_bound < cfg.tol {
            value_sweeps = Some(n);
        }
        if stats.error_bound < cfg.tol && stats.policy_change < cfg.policy_tol {
            let shift = economy.delta() / (1.0 - economy.delta())
                * 0.5
                * (stats.diff_min + stats.diff_max);
            tables = tables.into_iter().map(|t| t.shifted(shift)).collect();
            last = Some((n, step.omega0, step.c0, step.mu0));
            break;
        }
    }
    let Some((sweeps, omega0, c0, mu0)) = last else {
        let lastv = history.last().map(|h| h.error_bound).unwrap_or(f64::NAN);
        return Err(Error::NotConverged {
            sweeps: cfg.max_iters,
            last: lastv,
            history: history.iter().map(|h| h.error_bound).collect(),
        });
    };
    let n = economy.num_states();
    let omega_f = (0..n)
        .map(|s| fb.omega_star[s].min(economy.omega_max(s)))
        .collect();
    let mut sol = PlannerSolution {
        format_version: SOLUTION_FORMAT_VERSION,
        economy,
        first_best: fb,
        config: cfg.clone(),
        tables,
        sweeps,
        value_sweeps: value_sweeps.unwrap_or(sweeps),
        history,
        omega0,
        c0,
        mu0,
        omega_f,
        omega_c: f64::NAN,
    };
    sol.omega_c = sol.reset_threshold(0);
    Ok(sol)
}

struct SweepResult {
    tables: Vec<StateTable>,
    omega0: Vec<f64>,
    c0: Vec<f64>,
    mu0: Vec<f64>,
}

fn initial_tables(econ: &Economy, fb: &FirstBest, cfg: &SolverConfig) -> Vec<StateTable> {
    let n = econ.num_states();
    (0..n)
        .map(|s| {
            let hi = econ.omega_max(s);
            let mut lo = fb.omega_star[s].min(hi);
            if lo >= hi {
                lo = econ.omega_min(s);
            }
            let nodes = node_set(lo, hi, cfg.gp, &[]);
            let promises: Vec<f64> = (0..n)
                .map(|r| fb.omega_star[r].min(econ.omega_max(r)))
                .collect();
            let data = TableData {
                value: nodes.iter().map(|&w| fb.value(s, w)).collect(),
                lambda: nodes
                    .iter()
                    .map(|&w| fb.lambda(s, w).min(cfg.derivative_cap))
                    .collect(),
                mu: vec![0.0; nodes.len()],
                consumption: nodes.iter().map(|&w| fb.consumption(s, w)).collect(),
                promises: vec![promises; nodes.len()],
                beta: econ.beta(),
                delta: econ.delta(),
                nodes,
            };
            StateTable::from(data)
        })
        .collect()
}

/// Chebyshev nodes on [lo, hi] with `pins` inserted when strictly inside.
fn node_set(lo: f64, hi: f64, gp: usize, pins: &[f64]) -> Vec<f64> {
    let mut nodes = chebyshev_nodes(lo, hi, gp);
    let close = 1e-9 * (hi - lo);
    for &p in pins {
        if !(p > lo + close && p < hi - close) {
            continue;
        }
        let k = nodes.partition_point(|&x| x < p);
        if (nodes[k] - p).abs() < close {
            nodes[k] = p;
        } else if (p - nodes[k - 1]).abs() < close {
            nodes[k - 1] = p;
        } else {
            nodes.insert(k, p);
        }
    }
    nodes
}

fn inner<'a>(econ: &'a Economy, tables: &'a [StateTable], cfg: &SolverConfig) -> Inner<'a> {
    Inner {
        tables,
        probs: econ.probs(),
        beta: econ.beta(),
        delta: econ.delta(),
        mu_cap: cfg.derivative_cap,
    }
}

fn sweep(econ: &Economy, fb: &FirstBest, tables: &[StateTable], cfg: &SolverConfig) -> SweepResult {
    let n = econ.num_states();
    let inn = inner(econ, tables, cfg);
    let (beta, delta) = (econ.beta(), econ.delta());
    let mut out = Vec::with_capacity(n);
    let mut omega0 = Vec::with_capacity(n);
    let mut c0 = Vec::with_capacity(n);
    let mut mu0 = Vec::with_capacity(n);
    let top = top_values(econ);
    for s in 0..n {
        let share = econ.shares()[s];
        let free = inn.solve(&Stage {
            scale: 1.0,
            share,
            upsilon: econ.upsilon_hat(s),
            c_cap: share,
            force_cap: false,
        });
        let w0 = (-free.c).ln_1p().max(econ.omega_min(s));
        let hi = econ.omega_max(s);
        omega0.push(w0);
        c0.push(free.c);
        mu0.push(free.mu);
        let nodes = node_set(w0, hi, cfg.gp, &[fb.omega_star[s]]);
        let sols: Vec<_> = nodes
            .par_iter()
            .map(|&w| {
                inn.solve(&Stage {
                    scale: 1.0,
                    share,
                    upsilon: econ.upsilon_hat(s),
                    c_cap: -w.exp_m1(),
                    force_cap: false,
                })
            })
            .collect();
        let value: Vec<f64> = sols
            .iter()
            .map(|z| {
                let cont: f64 = z
                    .promises
                    .iter()
                    .zip(econ.probs())
                    .zip(tables)
                    .map(|((w, p), t)| p * t.value(*w))
                    .sum();
                beta / delta * (-z.c).ln_1p() + z.c.ln() + delta * cont
            })
            .collect();
        // ω_max is absorbing with a forced allocation, so its value is exact.
        let mut value = value;
        *value.last_mut().unwrap() = top[s];
        let mut lambda: Vec<f64> = sols
            .iter()
            .map(|z| z.lambda.min(cfg.derivative_cap))
            .collect();
        if w0 > econ.omega_min(s) {
            lambda[0] = 0.0;
        }
        let data = TableData {
            value,
            lambda,
            mu: sols.iter().map(|z| z.mu).collect(),
            consumption: sols.iter().map(|z| z.c).collect(),
            promises: sols.into_iter().map(|z| z.promises).collect(),
            beta,
            delta,
            nodes,
        };
        out.push(StateTable::from(data));
    }
    SweepResult {
        tables: out,
        omega0,
        c0,
        mu0,
    }
}

/// V(s, ω_max(s)): consumption 1 − e^{ω_max(s)} and promises at ω_max forever.
fn top_values(econ: &Economy) -> Vec<f64> {
    let (beta, delta) = (econ.beta(), econ.delta());
    let u: Vec<f64> = (0..econ.num_states())
        .map(|s| {
            let w = econ.omega_max(s);
            (-w.exp_m1()).ln() + beta / delta * w
        })
        .collect();
    let ubar: f64 = u.iter().zip(econ.probs()).map(|(a, p)| a * p).sum();
    u.iter().map(|a| a + delta / (1.0 - delta) * ubar).collect()
}

fn change(old: &[StateTable], new: &[StateTable], delta: f64, lam_max: f64) -> SweepStats {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut dp = 0.0f64;
    for (a, b) in old.iter().zip(new) {
        let d = b.data();
        let top = d.nodes.len() - 1;
        for (k, &w) in d.nodes.iter().enumerate().take(top) {
            if d.lambda[k] > lam_max || a.h(w) > lam_max {
                continue;
            }
            let dv = d.value[k] - a.value(w);
            lo = lo.min(dv);
            hi = hi.max(dv);
            dp = dp.max((d.lambda[k].ln_1p() - a.h(w).ln_1p()).abs());
        }
        let a0 = a.omega0();
        if a0 < b.omega0() {
            let dv = b.value(a0) - a.value(a0);
            lo = lo.min(dv);
            hi = hi.max(dv);
        }
    }
    SweepStats {
        value_change: lo.abs().max(hi.abs()),
        diff_min: lo,
        diff_max: hi,
        error_bound: delta / (1.0 - delta) * 0.5 * (hi - lo),
        policy_change: dp,
    }
}

impl PlannerSolution {
    pub fn num_states(&self) -> usize {
        self.economy.num_states()
    }

    fn inner(&self) -> Inner<'_> {
        inner(&self.economy, &self.tables, &self.config)
    }

    /// Policies and multipliers at (s, ω).
    pub fn policy_eval(&self, s: usize, omega: f64) -> Result<PolicyPoint> {
        if s >= self.num_states() {
            return Err(Error::InvalidParameters(format!("state {} out of range", s + 1)));
        }
        self.economy.check_promise(s, omega)?;
        Ok(self.policy_unchecked(s, omega))
    }

    fn policy_unchecked(&self, s: usize, omega: f64) -> PolicyPoint {
        let econ = &self.economy;
        let share = econ.shares()[s];
        let w = omega
            .max(self.omega0[s])
            .min(econ.omega_max(s));
        let inn = self.inner();
        let z = inn.solve(&Stage {
            scale: 1.0,
            share,
            upsilon: econ.upsilon_hat(s),
            c_cap: -w.exp_m1(),
            force_cap: false,
        });
        let lambda = if omega <= self.omega0[s] && self.omega0[s] > econ.omega_min(s) {
            0.0
        } else {
            z.lambda
        };
        let (xi, eta) = self.bound_multipliers(z.mu, &z.promises);
        PolicyPoint {
            consumption: z.c,
            promises: z.promises,
            mu: z.mu,
            lambda,
            xi,
            eta,
            gain: z.gain,
        }
    }

    fn bound_multipliers(&self, mu: f64, promises: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let econ = &self.economy;
        let mut xi = vec![0.0; promises.len()];
        let mut eta = vec![0.0; promises.len()];
        for (r, &g) in promises.iter().enumerate() {
            let t = &self.tables[r];
            if g >= econ.omega_max(r) {
                xi[r] = (mu - t.h(econ.omega_max(r))).max(0.0);
            }
            if g <= econ.omega_min(r) {
                eta[r] = (t.h(econ.omega_min(r)) - mu).max(0.0);
            }
        }
        (xi, eta)
    }

    /// −(δ/β)V_ω(r, ω) from the tables.
    pub fn h(&self, r: usize, omega: f64) -> f64 {
        self.tables[r].h(omega)
    }

    /// Interpolated value V(s, ω).
    pub fn value(&self, s: usize, omega: f64) -> f64 {
        self.tables[s].value(omega)
    }

    /// Consumption policy f(s, ω).
    pub fn consumption(&self, s: usize, omega: f64) -> f64 {
        self.policy_unchecked(s, omega).consumption
    }

    /// Debt-space evaluation: μ and promises when the young consume s(1−d).
    pub(crate) fn debt_step(&self, d: f64) -> (f64, Vec<f64>) {
        let econ = &self.economy;
        let s = econ.shares()[0];
        let z = self.inner().solve(&Stage {
            scale: 1.0,
            share: s,
            upsilon: econ.upsilon_hat(0),
            c_cap: s * (1.0 - d),
            force_cap: true,
        });
        (z.mu, z.promises)
    }

    /// Shock-period evaluation with the young's weight scaled by `scale`.
    pub(crate) fn staged(&self, stage: &Stage) -> (f64, f64, Vec<f64>) {
        let z = self.inner().solve(stage);
        (z.c, z.mu, z.promises)
    }

    /// Largest promise in state s with μ(s, ω) = 0.
    fn reset_threshold(&self, s: usize) -> f64 {
        let lo = self.omega0[s];
        if self.policy_unchecked(s, lo).mu > 0.0 {
            return lo;
        }
        last_true(
            |w| self.policy_unchecked(s, w).mu == 0.0,
            lo,
            self.economy.omega_max(s),
            1e-14,
        )
    }

    /// Initial promise max{ω⁰(s₀), ω̄₀}.
    pub fn initial_promise(&self, s0: usize, target: Option<f64>) -> Result<f64> {
        let w0 = self.omega0[s0];
        match target {
            None => Ok(w0),
            Some(t) => {
                let hi = self.economy.omega_max(s0);
                if t > hi {
                    return Err(Error::InfeasibleTarget {
                        target: t,
                        omega_max: hi,
                    });
                }
                Ok(w0.max(t))
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sol: Self = serde_json::from_str(text)?;
        if sol.format_version != SOLUTION_FORMAT_VERSION {
            return Err(Error::InvalidParameters(format!(
                "solution format version {} not supported (expected {})",
                sol.format_version, SOLUTION_FORMAT_VERSION
            )));
        }
        Ok(sol)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl PromisePolicy for PlannerSolution {
    fn economy(&self) -> &Economy {
        &self.economy
    }

    fn decide(&self, s: usize, omega: f64) -> Decision {
        let p = self.policy_unchecked(s, omega);
        Decision {
            consumption: p.consumption,
            promises: p.promises,
            mu: p.mu,
            lambda: p.lambda,
        }
    }

    fn reset_promise(&self, s: usize) -> f64 {
        self.omega0[s]
    }
}
