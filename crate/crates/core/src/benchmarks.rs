//! First-best and deterministic benchmarks.

use serde::{Deserialize, Serialize};

use crate::econ::{upsilon_hat, Economy, EconomyParams, Preferences};
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::policy::{Decision, PromisePolicy};

/// Allocation when the young can be forced to transfer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FirstBest {
    pub c_star: Vec<f64>,
    pub omega_star: Vec<f64>,
    pub v_star: Vec<f64>,
    /// Σπ v*(r) / (1−δ).
    pub v_bar_star: f64,
    pub d_star: Vec<f64>,
    beta: f64,
    delta: f64,
}

/// Solves the first-best problem.
pub fn first_best(params: &EconomyParams) -> Result<FirstBest> {
    let p = params.checked()?;
    let Preferences { beta, delta } = p.prefs;
    let share = p.prefs.first_best_share();
    let sh = &p.endowments.shares;
    let c_star: Vec<f64> = sh.iter().map(|&s| share.min(s)).collect();
    let omega_star: Vec<f64> = sh
        .iter()
        .map(|&s| (1.0 - s).ln().max((beta / (beta + delta)).ln()))
        .collect();
    let v_star: Vec<f64> = c_star
        .iter()
        .map(|&c| c.ln() + beta / delta * (1.0 - c).ln())
        .collect();
    let v_bar_star = v_star
        .iter()
        .zip(&p.endowments.probs)
        .map(|(v, q)| v * q)
        .sum::<f64>()
        / (1.0 - delta);
    let d_star = c_star.iter().zip(sh).map(|(c, r)| 1.0 - c / r).collect();
    Ok(FirstBest {
        c_star,
        omega_star,
        v_star,
        v_bar_star,
        d_star,
        beta,
        delta,
    })
}

impl FirstBest {
    /// V*(s, ω).
    pub fn value(&self, s: usize, omega: f64) -> f64 {
        if omega <= self.omega_star[s] {
            self.v_star[s] + self.delta * self.v_bar_star
        } else {
            self.beta / self.delta * omega + (1.0 - omega.exp()).ln() + self.delta * self.v_bar_star
        }
    }

    /// −(δ/β)V*_ω(s, ω), the multiplier on promise keeping.
    pub fn lambda(&self, s: usize, omega: f64) -> f64 {
        if omega < self.omega_star[s] {
            0.0
        } else {
            let e = omega.exp();
            (self.delta / self.beta * e / (1.0 - e) - 1.0).max(0.0)
        }
    }

    /// Consumption share of the young given the promise ω.
    pub fn consumption(&self, s: usize, omega: f64) -> f64 {
        if omega <= self.omega_star[s] {
            self.c_star[s]
        } else {
            1.0 - omega.exp()
        }
    }

    /// Bond revenue (a−1)(1−d) with a = (1−δ) + (β+δ)E[s], valid when
    /// the nonnegativity constraint does not bind.
    pub fn bond_revenue_formula(&self, mean_share: f64, d: f64) -> f64 {
        let a = (1.0 - self.delta) + (self.beta + self.delta) * mean_share;
        (a - 1.0) * (1.0 - d)
    }
}

/// First-best allocation viewed as a promise policy.
#[derive(Debug, Clone)]
pub struct FirstBestPolicy {
    pub economy: Economy,
    pub first_best: FirstBest,
}

impl FirstBestPolicy {
    pub fn new(params: &EconomyParams) -> Result<Self> {
        let economy = Economy::new(params)?;
        let first_best = first_best(params)?;
        Ok(Self {
            economy,
            first_best,
        })
    }
}

impl PromisePolicy for FirstBestPolicy {
    fn economy(&self) -> &Economy {
        &self.economy
    }

    fn decide(&self, s: usize, omega: f64) -> Decision {
        let fb = &self.first_best;
        Decision {
            consumption: fb.consumption(s, omega),
            promises: fb.omega_star.clone(),
            mu: 0.0,
            lambda: fb.lambda(s, omega),
        }
    }

    fn reset_promise(&self, s: usize) -> f64 {
        self.first_best.omega_star[s]
    }
}

/// The single-state economy without risk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeterministicSolution {
    pub share: f64,
    pub beta: f64,
    pub delta: f64,
    pub upsilon_hat: f64,
    pub c_star: f64,
    pub c_min: f64,
    pub omega_min: f64,
    pub omega_star: f64,
    pub omega_max_det: f64,
    pub omega_c: f64,
    /// True when c* > c_min, i.e. the first best can be sustained.
    pub first_best_sustainable: bool,
}

/// Solves the deterministic benchmark for endowment share `s`.
pub fn deterministic_solve(s: f64, prefs: Preferences) -> Result<DeterministicSolution> {
    let prefs = Preferences::new(prefs.beta, prefs.delta)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameters(format!("share {s} not in (0,1)")));
    }
    let Preferences { beta, delta } = prefs;
    let peak = 1.0 / (1.0 + beta);
    if s <= peak {
        return Err(Error::AutarkyOnly(format!(
            "s = {s} does not exceed 1/(1+beta) = {peak}"
        )));
    }
    let ups = upsilon_hat(s, beta, &[s], &[1.0]);
    let tiny = 1e-12;
    let c_min = bisect(|c| c.ln() + beta * (1.0 - c).ln() - ups, tiny, peak, 1e-16)?;
    let c_star = prefs.first_best_share().min(s);
    let omega_star = (1.0 - s).ln().max((beta / (beta + delta)).ln());
    let omega_max_det = (1.0 - c_min).ln();
    let omega_c = (1.0 - (ups - beta * omega_star).exp()).ln();
    Ok(DeterministicSolution {
        share: s,
        beta,
        delta,
        upsilon_hat: ups,
        c_star,
        c_min,
        omega_min: (1.0 - s).ln(),
        omega_star,
        omega_max_det,
        omega_c,
        first_best_sustainable: c_star > c_min,
    })
}

impl DeterministicSolution {
    /// Next-period promise g(ω).
    pub fn policy(&self, omega: f64) -> f64 {
        if !self.first_best_sustainable {
            return self.omega_max_det;
        }
        if omega <= self.omega_c {
            self.omega_star
        } else {
            (self.upsilon_hat - (1.0 - omega.exp()).ln()) / self.beta
        }
    }

    /// Per-period payoff log c* + (β/δ)ω* at the fixed point.
    pub fn v_star(&self) -> f64 {
        (1.0 - self.omega_star.exp()).ln() + self.beta / self.delta * self.omega_star
    }

    /// Planner value V(ω), built by following g down to ω*.
    pub fn value(&self, omega: f64) -> Result<f64> {
        if omega < self.omega_min - 1e-14 || omega >= self.omega_max_det {
            return Err(Error::Domain {
                what: "promise",
                value: omega,
                lo: self.omega_min,
                hi: self.omega_max_det,
            });
        }
        let base = self.v_star() / (1.0 - self.delta);
        let mut w = omega;
        let mut acc = 0.0;
        let mut disc = 1.0;
        let mut steps = 0usize;
        while w > self.omega_star {
            acc += disc * ((1.0 - w.exp()).ln() + self.beta / self.delta * w);
            disc *= self.delta;
            w = self.policy(w);
            steps += 1;
            if steps > 100_000 {
                return Err(Error::Numerical("promise path does not reach the fixed point".into()));
            }
        }
        Ok(acc + disc * base)
    }

    /// Ladder of critical promises: ω^c_0 = ω*, and
    /// log(1−e^{ω^c_n}) + βω^c_{n−1} = υ̂.
    pub fn ladder(&self, n: usize) -> Vec<f64> {
        let mut out = vec![self.omega_star];
        for _ in 0..n {
            let prev = *out.last().unwrap();
            out.push((1.0 - (self.upsilon_hat - self.beta * prev).exp()).ln());
        }
        out
    }

    /// Path of promises from ω₀ until the fixed point is reached (inclusive).
    pub fn path(&self, omega0: f64, max_len: usize) -> Vec<f64> {
        let mut path = vec![omega0];
        let mut w = omega0;
        while path.len() < max_len {
            let next = self.policy(w);
            path.push(next);
            if next == w {
                break;
            }
            w = next;
        }
        path
    }
}
