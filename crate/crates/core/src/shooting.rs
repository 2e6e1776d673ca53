//! Two-state economy where the history is summarized by the run length of
//! state 2: forward shooting on the multiplier ladder ν^(n) = 1 + μ^(n).

use serde::{Deserialize, Serialize};

use crate::econ::{Economy, EconomyParams};
use crate::error::{Error, Result};

/// Multiplier and consumption ladders indexed by the number of preceding
/// consecutive state-2 draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuLadder {
    /// ν^(n) for n = −1..=N; `nu[0]` is ν^(−1) = 1.
    pub nu: Vec<f64>,
    pub nu_inf: f64,
    /// (c^(n)(1), c^(n)(2)) for n = 0..=N.
    pub c_ladder: Vec<(f64, f64)>,
    /// (d^(n)(1), d^(n)(2)) for n = 0..=N.
    pub d_ladder: Vec<(f64, f64)>,
    /// |ν^(N+1) − ν^(∞)| along the shot path.
    pub terminal_residual: f64,
    /// Width of the final bracket on ν^(0).
    pub bracket: f64,
    pub converged: bool,
    pub horizon: usize,
    shares: [f64; 2],
    pi: f64,
    beta: f64,
    delta: f64,
}

#[derive(Debug, Clone, Copy)]
struct TwoState {
    s1: f64,
    s2: f64,
    /// Probability of state 1.
    pi: f64,
    beta: f64,
    delta: f64,
    ups2: f64,
}

impl TwoState {
    fn new(params: &EconomyParams) -> Result<Self> {
        if params.num_states() != 2 {
            return Err(Error::InvalidParameters(format!(
                "shooting needs two states, got {}",
                params.num_states()
            )));
        }
        let econ = Economy::new(params)?;
        let sh = &params.endowments.shares;
        Ok(Self {
            s1: sh[0],
            s2: sh[1],
            pi: params.endowments.probs[0],
            beta: econ.beta(),
            delta: econ.delta(),
            ups2: econ.upsilon_hat(1),
        })
    }

    fn c1(&self, nu_prev: f64) -> f64 {
        self.delta / (self.beta * nu_prev + self.delta)
    }

    fn c2(&self, nu_prev: f64, nu: f64) -> f64 {
        self.delta * nu / (self.beta * nu_prev + self.delta * nu)
    }

    /// Left minus right side of the binding state-2 participation constraint.
    fn d1(&self, nu_prev: f64, nu: f64, nu_next: f64) -> f64 {
        let (b, d, p) = (self.beta, self.delta, self.pi);
        self.c2(nu_prev, nu).ln()
            + b * (p * (b * nu / (b * nu + d)).ln()
                + (1.0 - p) * (b * nu / (b * nu + d * nu_next)).ln())
            - self.ups2
    }

    /// ν^(n+1) solving the constraint given ν^(n−1), ν^(n).
    fn step(&self, nu_prev: f64, nu: f64) -> f64 {
        let (b, d, p) = (self.beta, self.delta, self.pi);
        let rest = self.ups2 - self.c2(nu_prev, nu).ln() - b * p * (b * nu / (b * nu + d)).ln();
        let z = (rest / (b * (1.0 - p))).exp();
        b / d * nu * (1.0 / z - 1.0)
    }

    fn nu_inf(&self) -> Result<f64> {
        let (b, d, p) = (self.beta, self.delta, self.pi);
        let k = self.ups2 - (d / (b + d)).ln() - b * (1.0 - p) * (b / (b + d)).ln();
        let e = (k / (p * b)).exp();
        let nu = d * e / (b * (1.0 - e));
        if !(e > 0.0 && e < 1.0) || !(nu > 1.0) {
            return Err(Error::AssumptionViolation(format!(
                "limit multiplier {nu} is not above 1"
            )));
        }
        Ok(nu)
    }
}

/// Closed-form limit ν^(∞) of the multiplier ladder.
pub fn nu_infinity(params: &EconomyParams) -> Result<f64> {
    TwoState::new(params)?.nu_inf()
}

/// Residual of the limiting constraint at ν.
pub fn limit_residual(params: &EconomyParams, nu: f64) -> Result<f64> {
    let t = TwoState::new(params)?;
    Ok(t.d1(nu, nu, nu))
}

/// Forward path ν^(−1..) from ν^(0) until `len` entries or the path leaves (0, ∞).
fn path(t: &TwoState, nu0: f64, len: usize) -> Vec<f64> {
    let mut v = vec![1.0, nu0];
    while v.len() < len {
        let n = v.len();
        let next = t.step(v[n - 2], v[n - 1]);
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        v.push(next);
    }
    v
}

/// Whether ν^(0) is above the saddle path: the path crosses ν^(∞).
fn overshoots(t: &TwoState, nu0: f64, nu_inf: f64, len: usize) -> bool {
    let p = path(t, nu0, len);
    if p.iter().skip(1).any(|&x| x > nu_inf) {
        return true;
    }
    // Truncated or turning down means below the saddle path.
    false
}

/// Shoots on ν^(0) ∈ [1, ν^(∞)] so that the path stays on the stable branch
/// through ν^(N+1). `converged` reports whether |ν^(N+1) − ν^(∞)| < tol.
pub fn shoot(params: &EconomyParams, horizon: usize, tol: f64) -> Result<NuLadder> {
    let t = TwoState::new(params)?;
    let nu_inf = t.nu_inf()?;
    let len = horizon + 3;
    let (mut lo, mut hi) = (1.0, nu_inf);
    if overshoots(&t, lo, nu_inf, len) || !overshoots(&t, hi * (1.0 + 1e-12), nu_inf, len) {
        return Err(Error::ShootDiverged(format!(
            "no sign change of the terminal condition on [1, {nu_inf}]"
        )));
    }
    // The unstable root amplifies errors in ν^(0) each step, so the bracket
    // is narrowed to adjacent floats rather than to `tol`.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if overshoots(&t, mid, nu_inf, len) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Pick the endpoint whose path ends closer to the limit.
    let score = |nu0: f64| {
        let p = path(&t, nu0, len);
        if p.len() < len {
            f64::INFINITY
        } else {
            (p[len - 1] - nu_inf).abs()
        }
    };
    let nu0 = if score(lo) <= score(hi) { lo } else { hi };
    let full = path(&t, nu0, len);
    if full.len() < len {
        return Err(Error::ShootDiverged(format!(
            "path from {nu0} left the positive axis after {} steps",
            full.len()
        )));
    }
    let terminal_residual = (full[len - 1] - nu_inf).abs();
    let nu: Vec<f64> = full[..horizon + 2].to_vec();
    let c_ladder: Vec<(f64, f64)> = (1..nu.len())
        .map(|k| (t.c1(nu[k - 1]), t.c2(nu[k - 1], nu[k])))
        .collect();
    let d_ladder = c_ladder
        .iter()
        .map(|&(a, b)| (1.0 - a / t.s1, 1.0 - b / t.s2))
        .collect();
    Ok(NuLadder {
        nu,
        nu_inf,
        c_ladder,
        d_ladder,
        terminal_residual,
        bracket: hi - lo,
        converged: terminal_residual < tol,
        horizon,
        shares: [t.s1, t.s2],
        pi: t.pi,
        beta: t.beta,
        delta: t.delta,
    })
}

impl NuLadder {
    /// ν^(n) for n ≥ −1, with ν^(∞) past the horizon.
    pub fn nu_at(&self, n: isize) -> f64 {
        let k = (n + 1) as usize;
        self.nu.get(k).copied().unwrap_or(self.nu_inf)
    }

    /// c^(n)(s) for s ∈ {0, 1}, 0-based, with the limit past the horizon.
    pub fn consumption(&self, s: usize, n: usize) -> f64 {
        let prev = self.nu_at(n as isize - 1);
        let cur = self.nu_at(n as isize);
        if s == 0 {
            self.delta / (self.beta * prev + self.delta)
        } else {
            self.delta * cur / (self.beta * prev + self.delta * cur)
        }
    }

    /// d^(n)(s) = 1 − c^(n)(s)/s.
    pub fn debt(&self, s: usize, n: usize) -> f64 {
        1.0 - self.consumption(s, n) / self.shares[s]
    }

    /// Largest |D1| residual over n = 0..N−1.
    pub fn d1_residual(&self, params: &EconomyParams) -> Result<f64> {
        let t = TwoState::new(params)?;
        Ok((1..self.nu.len() - 1)
            .map(|k| t.d1(self.nu[k - 1], self.nu[k], self.nu[k + 1]).abs())
            .fold(0.0, f64::max))
    }

    pub fn nu0(&self) -> f64 {
        self.nu[1]
    }

    pub fn probability_state1(&self) -> f64 {
        self.pi
    }

    /// Rows (n, ν^(n), c1, c2, d1, d2) for n = 0..=N.
    pub fn rows(&self) -> Vec<[f64; 6]> {
        self.c_ladder
            .iter()
            .zip(&self.d_ladder)
            .enumerate()
            .map(|(n, (c, d))| [n as f64, self.nu[n + 1], c.0, c.1, d.0, d.1])
            .collect()
    }
}

/// χ and the yield-variability bound Υ = log(δ/β) − log(1/χ − 1).
pub fn chi_upsilon(params: &EconomyParams) -> Result<(f64, f64)> {
    let t = TwoState::new(params)?;
    let (b, d, p) = (t.beta, t.delta, t.pi);
    let ln_chi = (1.0 - p) / p * (d / b).ln()
        + (1.0 + b * (1.0 - p)) / (b * p) * ((b + d) / d).ln()
        + t.s2.ln() / (b * p)
        + (1.0 - p) / p * (1.0 - t.s2).ln()
        + (1.0 - t.s1).ln();
    let chi = ln_chi.exp();
    if !(chi > 0.0 && chi < 1.0) {
        return Err(Error::AssumptionViolation(format!("chi = {chi} not in (0,1)")));
    }
    Ok((chi, (d / b).ln() - (1.0 / chi - 1.0).ln()))
}

/// Margins of the two conditions under which the ladder describes the
/// whole ergodic set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Assumption5Report {
    pub d_star2: f64,
    pub d_max: f64,
    pub b1_at_d_star2: f64,
    pub d_c: f64,
    /// d_max − d*(2).
    pub margin_debt_limit: f64,
    /// d^c − b₁(d*(2)).
    pub margin_reset: f64,
    pub holds: bool,
}

/// Evaluates d*(2) < d_max and b₁(d*(2)) < d^c. The reset levels d⁰(r)
/// come from the ladder's n = 0 rung.
pub fn check_assumption5(params: &EconomyParams, ladder: &NuLadder) -> Result<Assumption5Report> {
    let t = TwoState::new(params)?;
    let econ = Economy::new(params)?;
    let (b, d, p) = (t.beta, t.delta, t.pi);
    let d_star2 = 1.0 - d / (t.s2 * (b + d));
    let d_max = -(-b * econ.autarky.delta_varpi).exp_m1();
    let rhs = b * (p * (1.0 - t.s1).ln() + (1.0 - p) * (1.0 - t.s2).ln());
    let w1 = (rhs - (1.0 - d_star2).ln() - b * (1.0 - p) * (1.0 - t.s2 + t.s2 * d_star2).ln())
        / (b * p);
    let b1 = (w1.exp() - (1.0 - t.s1)) / t.s1;
    let d0 = [ladder.debt(0, 0), ladder.debt(1, 0)];
    let s = [t.s1, t.s2];
    let q = [p, 1.0 - p];
    let acc: f64 = (0..2)
        .map(|r| q[r] * ((1.0 - s[r] + s[r] * d0[r]).ln() - (1.0 - s[r]).ln()))
        .sum();
    let d_c = -(-b * acc).exp_m1();
    let margin_debt_limit = d_max - d_star2;
    let margin_reset = d_c - b1;
    Ok(Assumption5Report {
        d_star2,
        d_max,
        b1_at_d_star2: b1,
        d_c,
        margin_debt_limit,
        margin_reset,
        holds: margin_debt_limit > 0.0 && margin_reset > 0.0,
    })
}

/// Forward path from a perturbed ν^(0); used to show saddle-path instability.
pub fn forward_path(params: &EconomyParams, nu0: f64, len: usize) -> Result<Vec<f64>> {
    let t = TwoState::new(params)?;
    Ok(path(&t, nu0, len))
}
