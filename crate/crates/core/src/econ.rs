//! Model primitives, autarky quantities and assumption checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bisect;

const PROB_TOL: f64 = 1e-12;

/// Endowment shares of the young and their probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndowmentProcess {
    pub shares: Vec<f64>,
    pub probs: Vec<f64>,
}

impl EndowmentProcess {
    /// Checks the invariants and renormalizes the probabilities.
    pub fn new(shares: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let e = Self { shares, probs };
        e.checked()
    }

    fn checked(mut self) -> Result<Self> {
        if self.shares.is_empty() || self.shares.len() != self.probs.len() {
            return Err(Error::InvalidParameters(format!(
                "{} shares but {} probabilities",
                self.shares.len(),
                self.probs.len()
            )));
        }
        if self.shares.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
            return Err(Error::InvalidParameters(
                "endowment shares must lie in (0, 1)".into(),
            ));
        }
        if self.shares.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameters(
                "endowment shares must be strictly ascending".into(),
            ));
        }
        self.probs = normalized(&self.probs, "endowment")?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    /// E[s].
    pub fn mean(&self) -> f64 {
        self.shares.iter().zip(&self.probs).map(|(s, p)| s * p).sum()
    }
}

/// Aggregate growth factors and their probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthProcess {
    pub factors: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Default for GrowthProcess {
    fn default() -> Self {
        Self::none()
    }
}

impl GrowthProcess {
    pub fn new(factors: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Self { factors, probs }.checked()
    }

    /// No aggregate growth risk: a single factor of one.
    pub fn none() -> Self {
        Self {
            factors: vec![1.0],
            probs: vec![1.0],
        }
    }

    /// Two equally likely factors with arithmetic mean 1.04.
    pub fn two_point() -> Self {
        Self {
            factors: vec![0.8, 1.28],
            probs: vec![0.5, 0.5],
        }
    }

    fn checked(mut self) -> Result<Self> {
        if self.factors.is_empty() || self.factors.len() != self.probs.len() {
            return Err(Error::InvalidParameters(
                "growth factors and probabilities differ in length".into(),
            ));
        }
        if self.factors.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameters(
                "growth factors must be positive".into(),
            ));
        }
        self.probs = normalized(&self.probs, "growth")?;
        Ok(self)
    }

    /// Harmonic mean (Σ ς/γ)^{-1}.
    pub fn harmonic_mean(&self) -> f64 {
        1.0 / self
            .factors
            .iter()
            .zip(&self.probs)
            .map(|(g, p)| p / g)
            .sum::<f64>()
    }

    /// Arithmetic mean.
    pub fn mean(&self) -> f64 {
        self.factors.iter().zip(&self.probs).map(|(g, p)| g * p).sum()
    }

    pub fn is_degenerate(&self) -> bool {
        let g0 = self.factors[0];
        self.factors
            .iter()
            .zip(&self.probs)
            .all(|(g, p)| *p == 0.0 || (g - g0).abs() == 0.0)
    }
}

/// Discount factors: β for generations, δ for the planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preferences {
    pub beta: f64,
    pub delta: f64,
}

impl Preferences {
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        Self { beta, delta }.checked()
    }

    fn checked(self) -> Result<Self> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameters(format!(
                "beta = {} not in (0, 1]",
                self.beta
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameters(format!(
                "delta = {} not in (0, 1)",
                self.delta
            )));
        }
        Ok(self)
    }

    /// δ/(β+δ), the unconstrained first-best share of the young.
    pub fn first_best_share(&self) -> f64 {
        self.delta / (self.beta + self.delta)
    }
}

/// Complete parameter set for one economy.
///
/// `initial_state` is zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyParams {
    pub endowments: EndowmentProcess,
    #[serde(default)]
    pub growth: GrowthProcess,
    pub prefs: Preferences,
    #[serde(default)]
    pub initial_state: usize,
    #[serde(default)]
    pub initial_target: Option<f64>,
}

impl EconomyParams {
    /// Two states, s = (0.5, 0.7), equally likely, β = δ = exp(−1/75).
    pub fn example1() -> Self {
        let b = (-1.0f64 / 75.0).exp();
        Self {
            endowments: EndowmentProcess {
                shares: vec![0.5, 0.7],
                probs: vec![0.5, 0.5],
            },
            growth: GrowthProcess::none(),
            prefs: Preferences { beta: b, delta: b },
            initial_state: 0,
            initial_target: None,
        }
    }

    /// Three states, s = (0.5, 0.625, 0.8125), π = (0.5, 0.25, 0.25), β = δ = exp(−1/75).
    pub fn three_state() -> Self {
        let b = (-1.0f64 / 75.0).exp();
        Self {
            endowments: EndowmentProcess {
                shares: vec![0.5, 0.625, 0.8125],
                probs: vec![0.5, 0.25, 0.25],
            },
            growth: GrowthProcess::none(),
            prefs: Preferences { beta: b, delta: b },
            initial_state: 0,
            initial_target: None,
        }
    }

    /// Two-state economy parameterized by mean share κ and spread ε:
    /// s(1) = κ − ε(1−π)/π, s(2) = κ + ε, with π = P(s(1)).
    pub fn two_state(kappa: f64, eps: f64, pi: f64, beta: f64, delta: f64) -> Self {
        Self {
            endowments: EndowmentProcess {
                shares: vec![kappa - eps * (1.0 - pi) / pi, kappa + eps],
                probs: vec![pi, 1.0 - pi],
            },
            growth: GrowthProcess::none(),
            prefs: Preferences { beta, delta },
            initial_state: 0,
            initial_target: None,
        }
    }

    pub fn num_states(&self) -> usize {
        self.endowments.len()
    }

    /// Checks all type invariants and returns a copy with renormalized probabilities.
    pub fn checked(&self) -> Result<Self> {
        let endowments = self.endowments.clone().checked()?;
        let growth = self.growth.clone().checked()?;
        let prefs = self.prefs.checked()?;
        if self.initial_state >= endowments.len() {
            return Err(Error::InvalidParameters(format!(
                "initial state {} out of range 1..={}",
                self.initial_state + 1,
                endowments.len()
            )));
        }
        if let Some(w) = self.initial_target {
            let lo = (1.0 - endowments.shares[self.initial_state]).ln();
            if !(w >= lo && w < 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "initial target {w} outside [{lo}, 0)"
                )));
            }
        }
        Ok(Self {
            endowments,
            growth,
            prefs,
            initial_state: self.initial_state,
            initial_target: self.initial_target,
        })
    }
}

fn normalized(p: &[f64], what: &str) -> Result<Vec<f64>> {
    if p.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::InvalidParameters(format!(
            "{what} probabilities must lie in (0, 1]"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidParameters(format!(
            "{what} probabilities sum to {total}, not 1"
        )));
    }
    Ok(p.iter().map(|x| x / total).collect())
}

/// One line of the assumption report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub margin: f64,
    pub passed: bool,
}

/// Computed margins for the assumptions on primitives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub trace_qhat: f64,
    pub gamma_bar: f64,
    /// δ/(β+δ) − s(1).
    pub a3_slack: f64,
    /// First-best lifetime utility of the young in state I minus υ̂(I).
    pub a4_gap: f64,
    pub checks: Vec<AssumptionCheck>,
    pub passed: bool,
}

/// Evaluates the assumptions on primitives.
pub fn validate(params: &EconomyParams) -> Result<ValidationReport> {
    let p = params.checked()?;
    let beta = p.prefs.beta;
    let sh = &p.endowments.shares;
    let pr = &p.endowments.probs;
    let trace: f64 = sh
        .iter()
        .zip(pr)
        .map(|(s, q)| q * beta * s / (1.0 - s))
        .sum();
    let gamma_bar = p.growth.harmonic_mean();
    let a3_slack = p.prefs.first_best_share() - sh[0];
    let top = sh.len() - 1;
    let cstar = |s: f64| p.prefs.first_best_share().min(s);
    let fb_util = cstar(sh[top]).ln()
        + beta
            * sh.iter()
                .zip(pr)
                .map(|(r, q)| q * (1.0 - cstar(*r)).ln())
                .sum::<f64>();
    let a4_gap = fb_util - upsilon_hat(sh[top], beta, sh, pr);
    let checks = vec![
        AssumptionCheck {
            name: "trace(Q-hat) > harmonic-mean growth".into(),
            margin: trace - gamma_bar,
            passed: trace > gamma_bar,
        },
        AssumptionCheck {
            name: "s(1) <= delta/(beta+delta)".into(),
            margin: a3_slack,
            passed: a3_slack >= 0.0,
        },
        AssumptionCheck {
            name: "first best violates the top-state participation constraint".into(),
            margin: a4_gap,
            passed: a4_gap < 0.0,
        },
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        trace_qhat: trace,
        gamma_bar,
        a3_slack,
        a4_gap,
        checks,
        passed,
    })
}

/// The autarky state-price matrix and its Perron root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QHat {
    pub matrix: Vec<Vec<f64>>,
    pub perron_root: f64,
}

/// q̂(s,r) = π(r)βs/(1−r), with the Perron root found by power iteration.
pub fn qhat_matrix(params: &EconomyParams) -> Result<QHat> {
    let p = params.checked()?;
    let beta = p.prefs.beta;
    let sh = &p.endowments.shares;
    let pr = &p.endowments.probs;
    let n = sh.len();
    let matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| pr[j] * beta * sh[i] / (1.0 - sh[j])).collect())
        .collect();
    let mut v = vec![1.0; n];
    let mut root = 0.0;
    for _ in 0..1000 {
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| matrix[i][j] * v[j]).sum())
            .collect();
        let norm = w.iter().cloned().fold(0.0, f64::max);
        let new_root = norm / v.iter().cloned().fold(0.0, f64::max);
        v = w.iter().map(|x| x / norm).collect();
        if (new_root - root).abs() <= 1e-15 * new_root.abs() {
            root = new_root;
            break;
        }
        root = new_root;
    }
    Ok(QHat {
        matrix,
        perron_root: root,
    })
}

/// Lifetime utility of a young agent in autarky when born in state `s`.
pub fn upsilon_hat(s: f64, beta: f64, shares: &[f64], probs: &[f64]) -> f64 {
    s.ln()
        + beta
            * shares
                .iter()
                .zip(probs)
                .map(|(r, p)| p * (1.0 - r).ln())
                .sum::<f64>()
}

/// Autarky utilities and the bounds on promised utility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutarkyData {
    pub upsilon_hat: Vec<f64>,
    pub omega_min: Vec<f64>,
    pub omega_max: Vec<f64>,
    pub gamma_bar: f64,
    /// Σπ(r)(ω_max(r) − ω_min(r)).
    pub delta_varpi: f64,
}

impl AutarkyData {
    /// Residual of the defining equation for ω_max(s).
    pub fn bound_residual(&self, s: usize, beta: f64) -> f64 {
        (1.0 - self.omega_max[s].exp()).ln() - (1.0 - self.omega_min[s].exp()).ln()
            + beta * self.delta_varpi
    }
}

/// Solves for υ̂, ω_min and ω_max.
///
/// Each ω_max(s) equals log(1 − s·exp(−βΔ)) where Δ is the positive root of
/// Δ = Σπ(r) log((1 − r·exp(−βΔ))/(1 − r)).
pub fn autarky(params: &EconomyParams) -> Result<AutarkyData> {
    let p = params.checked()?;
    let beta = p.prefs.beta;
    let sh = &p.endowments.shares;
    let pr = &p.endowments.probs;
    let upsilon: Vec<f64> = sh.iter().map(|&s| upsilon_hat(s, beta, sh, pr)).collect();
    let omega_min: Vec<f64> = sh.iter().map(|s| (1.0 - s).ln()).collect();

    let excess = |d: f64| -> f64 {
        sh.iter()
            .zip(pr)
            .map(|(r, q)| q * ((1.0 - r * (-beta * d).exp()).ln() - (1.0 - r).ln()))
            .sum::<f64>()
            - d
    };
    let slope0: f64 = sh
        .iter()
        .zip(pr)
        .map(|(r, q)| q * beta * r / (1.0 - r))
        .sum::<f64>()
        - 1.0;
    if slope0 <= 0.0 {
        return Err(Error::NoNontrivialBound {
            trace: slope0 + 1.0,
        });
    }
    let hi = sh.iter().zip(pr).map(|(r, q)| -q * (1.0 - r).ln()).sum::<f64>() + 1.0;
    let mut lo = 0.5 * hi;
    while excess(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::NoNontrivialBound {
                trace: slope0 + 1.0,
            });
        }
    }
    let dv = bisect(excess, lo, hi, 1e-16)?;
    if dv <= 0.0 {
        return Err(Error::NoNontrivialBound {
            trace: slope0 + 1.0,
        });
    }
    let omega_max: Vec<f64> = sh
        .iter()
        .map(|s| (1.0 - s * (-beta * dv).exp()).ln())
        .collect();
    Ok(AutarkyData {
        upsilon_hat: upsilon,
        omega_min,
        omega_max,
        gamma_bar: p.growth.harmonic_mean(),
        delta_varpi: dv,
    })
}

/// Validated parameters bundled with their autarky data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Economy {
    pub params: EconomyParams,
    pub autarky: AutarkyData,
}

impl Economy {
    /// Checks type invariants and solves the bound system. Does not require
    /// the assumptions to pass; see [`validate`].
    pub fn new(params: &EconomyParams) -> Result<Self> {
        let params = params.checked()?;
        let autarky = autarky(&params)?;
        Ok(Self { params, autarky })
    }

    pub fn num_states(&self) -> usize {
        self.params.num_states()
    }

    pub fn beta(&self) -> f64 {
        self.params.prefs.beta
    }

    pub fn delta(&self) -> f64 {
        self.params.prefs.delta
    }

    pub fn shares(&self) -> &[f64] {
        &self.params.endowments.shares
    }

    pub fn probs(&self) -> &[f64] {
        &self.params.endowments.probs
    }

    pub fn omega_min(&self, s: usize) -> f64 {
        self.autarky.omega_min[s]
    }

    pub fn omega_max(&self, s: usize) -> f64 {
        self.autarky.omega_max[s]
    }

    pub fn upsilon_hat(&self, s: usize) -> f64 {
        self.autarky.upsilon_hat[s]
    }

    /// Debt d implied by promise ω in state s.
    pub fn debt(&self, s: usize, omega: f64) -> f64 {
        omega_to_debt(self.shares()[s], omega)
    }

    /// Promise implied by debt d in state s.
    pub fn promise(&self, s: usize, d: f64) -> f64 {
        debt_to_omega(self.shares()[s], d)
    }

    pub(crate) fn check_promise(&self, s: usize, omega: f64) -> Result<()> {
        let (lo, hi) = (self.omega_min(s), self.omega_max(s));
        let slack = 1e-12 * (1.0 + lo.abs());
        if omega.is_nan() || omega < lo - slack || omega > hi + slack {
            return Err(Error::Domain {
                what: "promise",
                value: omega,
                lo,
                hi,
            });
        }
        Ok(())
    }
}

/// d = (e^ω − 1 + s)/s.
pub fn omega_to_debt(s: f64, omega: f64) -> f64 {
    (omega.exp() - 1.0 + s) / s
}

/// ω = log(1 − s + s·d).
pub fn debt_to_omega(s: f64, d: f64) -> f64 {
    (1.0 - s + s * d).ln()
}
