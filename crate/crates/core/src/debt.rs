//! The solution restated in debt units: d = (e^ω − 1 + s)/s, a transfer to the
//! old relative to the young's endowment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::econ::{debt_to_omega, omega_to_debt};
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::planner::PlannerSolution;

pub const DEFAULT_GRID: usize = 2000;

/// Debt policies and fiscal thresholds derived from a planner solution.
#[derive(Debug, Clone)]
pub struct DebtSystem<'a> {
    sol: &'a PlannerSolution,
    /// Reset debts d⁰(r).
    pub d0: Vec<f64>,
    pub d_min: f64,
    pub d_c: f64,
    pub d_max: f64,
    /// First-best debts d*(r) = 1 − c*(r)/r.
    pub d_star: Vec<f64>,
    /// Root of τ; None when τ keeps one sign on [0, d_max).
    pub d_bal: Option<f64>,
}

/// Debt curves on a uniform grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DebtTable {
    pub d: Vec<f64>,
    /// b[k][r] = b_r(d_k).
    pub b: Vec<Vec<f64>>,
    pub br: Vec<f64>,
    pub tau: Vec<f64>,
}

/// Residual of log(1−d) + βΣπ(log(1−r+rd) − log(1−r)).
pub fn debt_limit_residual(beta: f64, shares: &[f64], probs: &[f64], d: f64) -> f64 {
    let acc: f64 = shares
        .iter()
        .zip(probs)
        .map(|(&r, &p)| p * (debt_to_omega(r, d) - (1.0 - r).ln()))
        .sum();
    (1.0 - d).ln() + beta * acc
}

/// Threshold below which every debt policy sits at its reset level.
pub fn reset_threshold(beta: f64, shares: &[f64], probs: &[f64], d0: &[f64]) -> f64 {
    let acc: f64 = shares
        .iter()
        .zip(probs)
        .zip(d0)
        .map(|((&r, &p), &d)| p * (debt_to_omega(r, d) - (1.0 - r).ln()))
        .sum();
    -(-beta * acc).exp_m1()
}

/// BR(d) = βΣπ(r)(1−d)·r·b_r/(1 − r(1 − b_r)).
pub fn bond_revenue_from(beta: f64, shares: &[f64], probs: &[f64], d: f64, b: &[f64]) -> f64 {
    shares
        .iter()
        .zip(probs)
        .zip(b)
        .map(|((&r, &p), &br)| p * beta * (1.0 - d) / (1.0 - r * (1.0 - br)) * r * br)
        .sum()
}

impl<'a> DebtSystem<'a> {
    pub fn new(sol: &'a PlannerSolution) -> Result<Self> {
        let econ = &sol.economy;
        let shares = econ.shares();
        let probs = econ.probs();
        let beta = econ.beta();
        let d0: Vec<f64> = (0..econ.num_states())
            .map(|r| omega_to_debt(shares[r], sol.omega0[r]).max(0.0))
            .collect();
        let d_min = d0.iter().copied().fold(f64::INFINITY, f64::min);
        let d_c = reset_threshold(beta, shares, probs, &d0);
        let d_max = Self::solve_d_max(beta, shares, probs, d_c)?;
        let d_star = sol.first_best.d_star.clone();
        let mut sys = Self {
            sol,
            d0,
            d_min,
            d_c,
            d_max,
            d_star,
            d_bal: None,
        };
        sys.d_bal = sys.balanced_budget();
        Ok(sys)
    }

    fn solve_d_max(beta: f64, shares: &[f64], probs: &[f64], guess: f64) -> Result<f64> {
        let f = |d: f64| debt_limit_residual(beta, shares, probs, d);
        let hi = 1.0 - 1e-9;
        // Step the lower end towards 0 until it is past the trivial root's
        // positive hump.
        let mut lo = guess.clamp(1e-6, 0.5);
        while f(lo) <= 0.0 && lo > 1e-12 {
            lo *= 0.5;
        }
        if f(lo) <= 0.0 {
            return Err(Error::Numerical("debt limit has only the trivial root".into()));
        }
        bisect(f, lo, hi, 0.0)
    }

    pub fn num_states(&self) -> usize {
        self.d0.len()
    }

    fn check(&self, d: f64) -> Result<()> {
        if !(d >= 0.0 && d <= self.d_max + 1e-12) {
            return Err(Error::Domain {
                what: "debt",
                value: d,
                lo: 0.0,
                hi: self.d_max,
            });
        }
        Ok(())
    }

    /// b_r(d) for every r.
    pub fn policies(&self, d: f64) -> Result<Vec<f64>> {
        self.check(d)?;
        let (_, g) = self.sol.debt_step(d.min(self.d_max));
        let shares = self.sol.economy.shares();
        Ok(g.iter()
            .zip(shares)
            .map(|(&w, &r)| omega_to_debt(r, w).max(0.0))
            .collect())
    }

    /// b_r(d) for one next-period state.
    pub fn policy(&self, d: f64, r: usize) -> Result<f64> {
        Ok(self.policies(d)?[r])
    }

    pub fn bond_revenue(&self, d: f64) -> Result<f64> {
        let b = self.policies(d)?;
        let e = &self.sol.economy;
        Ok(bond_revenue_from(e.beta(), e.shares(), e.probs(), d, &b))
    }

    /// τ(d) = d − BR(d), the tax on the young that balances the budget.
    pub fn fiscal_reaction(&self, d: f64) -> Result<f64> {
        Ok(d - self.bond_revenue(d)?)
    }

    fn balanced_budget(&self) -> Option<f64> {
        let tau = |d: f64| self.fiscal_reaction(d).unwrap_or(f64::NAN);
        let hi = self.d_max * (1.0 - 1e-12);
        if !(tau(0.0) < 0.0 && tau(hi) > 0.0) {
            return None;
        }
        bisect(tau, 0.0, hi, 0.0).ok()
    }

    /// Curves on `n` uniform points over [0, d_max].
    pub fn table(&self, n: usize) -> Result<DebtTable> {
        let n = n.max(2);
        let d: Vec<f64> = (0..n)
            .map(|k| self.d_max * k as f64 / (n - 1) as f64)
            .collect();
        let b: Vec<Vec<f64>> = d
            .par_iter()
            .map(|&x| self.policies(x))
            .collect::<Result<_>>()?;
        let e = &self.sol.economy;
        let br: Vec<f64> = d
            .iter()
            .zip(&b)
            .map(|(&x, bx)| bond_revenue_from(e.beta(), e.shares(), e.probs(), x, bx))
            .collect();
        let tau = d.iter().zip(&br).map(|(x, r)| x - r).collect();
        Ok(DebtTable { d, b, br, tau })
    }
}
