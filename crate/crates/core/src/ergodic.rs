//! Sample paths, regeneration, and the invariant distribution on promise bins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PromisePolicy;

pub const DEFAULT_BINS: usize = 1000;
pub const MASS_FLOOR: f64 = 1e-12;

/// One period of a simulated path. `state` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: usize,
    pub state: usize,
    pub omega: f64,
    pub c: f64,
    pub d: f64,
}

/// Inverse-CDF draw from `probs`.
pub fn draw_state<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Seeded sample path of length `horizon` starting at (s0, ω0).
pub fn simulate_path<P: PromisePolicy + ?Sized>(
    policy: &P,
    s0: usize,
    omega0: f64,
    horizon: usize,
    seed: u64,
) -> Vec<PathPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs = policy.economy().probs().to_vec();
    let mut states = Vec::with_capacity(horizon);
    states.push(s0);
    for _ in 1..horizon {
        states.push(draw_state(&mut rng, &probs));
    }
    follow_states(policy, &states, omega0)
}

/// Path along a given state sequence, starting from promise ω0.
pub fn follow_states<P: PromisePolicy + ?Sized>(
    policy: &P,
    states: &[usize],
    omega0: f64,
) -> Vec<PathPoint> {
    let econ = policy.economy();
    let mut out = Vec::with_capacity(states.len());
    let mut w = omega0;
    for (t, &s) in states.iter().enumerate() {
        let dec = policy.decide(s, w);
        out.push(PathPoint {
            t,
            state: s,
            omega: w,
            c: dec.consumption,
            d: econ.debt(s, w),
        });
        if let Some(&r) = states.get(t + 1) {
            w = dec.promises[r];
        }
    }
    out
}

/// Promise bins per state with the induced sparse transition matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinnedChain {
    pub bins: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// rows[s·N + k] = [(target index, probability)].
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl BinnedChain {
    /// Transitions from each bin center under `policy`.
    pub fn build<P: PromisePolicy + ?Sized>(policy: &P, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidParameters(format!("need at least 2 bins, got {bins}")));
        }
        let econ = policy.economy();
        let n = econ.num_states();
        let lo: Vec<f64> = (0..n).map(|s| econ.omega_min(s)).collect();
        let hi: Vec<f64> = (0..n).map(|s| econ.omega_max(s)).collect();
        let probs = econ.probs().to_vec();
        let chain = Self {
            bins,
            lo,
            hi,
            rows: Vec::new(),
        };
        let rows: Vec<Vec<(usize, f64)>> = (0..n * bins)
            .into_par_iter()
            .map(|i| {
                let (s, k) = (i / bins, i % bins);
                let dec = policy.decide(s, chain.center(s, k));
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(n);
                for (r, &g) in dec.promises.iter().enumerate() {
                    let j = chain.index(r, g);
                    match row.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 += probs[r],
                        None => row.push((j, probs[r])),
                    }
                }
                row
            })
            .collect();
        Ok(Self { rows, ..chain })
    }

    pub fn num_states(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, s: usize) -> f64 {
        (self.hi[s] - self.lo[s]) / self.bins as f64
    }

    pub fn center(&self, s: usize, k: usize) -> f64 {
        self.lo[s] + (k as f64 + 0.5) * self.width(s)
    }

    pub fn bin(&self, s: usize, omega: f64) -> usize {
        let k = ((omega - self.lo[s]) / self.width(s)).floor();
        (k.max(0.0) as usize).min(self.bins - 1)
    }

    /// Flat index of the bin holding (s, ω).
    pub fn index(&self, s: usize, omega: f64) -> usize {
        s * self.bins + self.bin(s, omega)
    }

    /// One step φ ↦ φP.
    pub fn step(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; phi.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let m = phi[i];
            if m == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += m * p;
            }
        }
        out
    }

    pub fn max_row_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// A support point of the invariant distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBin {
    pub state: usize,
    pub bin: usize,
    pub omega: f64,
    pub mass: f64,
    /// Mass spike above 10× both neighbours.
    pub atom: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgodicDistribution {
    pub chain: BinnedChain,
    /// Flat mass vector, index s·N + k.
    pub phi: Vec<f64>,
    pub support: Vec<SupportBin>,
    pub iterations: usize,
    /// sup |φP − φ| at the returned φ.
    pub residual: f64,
}

impl ErgodicDistribution {
    pub fn mass(&self, s: usize, omega: f64) -> f64 {
        self.phi[self.chain.index(s, omega)]
    }

    /// Expected return time 1/φ(x) for each atom.
    pub fn return_times(&self) -> Vec<(usize, f64, f64)> {
        self.support
            .iter()
            .filter(|b| b.atom)
            .map(|b| (b.state, b.omega, 1.0 / b.mass))
            .collect()
    }

    /// Σφ over all bins.
    pub fn total(&self) -> f64 {
        crate::numerics::pairwise_sum(&self.phi)
    }
}

/// Power iteration from a point mass at (s0, reset promise) until sup |φP − φ| < tol.
pub fn invariant<P: PromisePolicy + ?Sized>(
    policy: &P,
    bins: usize,
    tol: f64,
) -> Result<ErgodicDistribution> {
    let chain = BinnedChain::build(policy, bins)?;
    let s0 = policy.economy().params.initial_state;
    let start = chain.index(s0, policy.reset_promise(s0));
    invariant_from(chain, start, tol)
}

/// Power iteration on a prebuilt chain from a point mass at `start`.
pub fn invariant_from(chain: BinnedChain, start: usize, tol: f64) -> Result<ErgodicDistribution> {
    let n = chain.rows.len();
    let mut phi = vec![0.0; n];
    phi[start] = 1.0;
    let max_iters = 1_000_000;
    let mut last = f64::NAN;
    for it in 1..=max_iters {
        let next = chain.step(&phi);
        let diff = next
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        phi = next;
        last = diff;
        if diff < tol {
            let residual = chain
                .step(&phi)
                .iter()
                .zip(&phi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let support = support_of(&chain, &phi);
            return Ok(ErgodicDistribution {
                chain,
                phi,
                support,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        sweeps: max_iters,
        last,
        history: vec![last],
    })
}

fn support_of(chain: &BinnedChain, phi: &[f64]) -> Vec<SupportBin> {
    let nb = chain.bins;
    let mut out = Vec::new();
    for s in 0..chain.num_states() {
        for k in 0..nb {
            let m = phi[s * nb + k];
            if m <= MASS_FLOOR {
                continue;
            }
            let left = if k > 0 { phi[s * nb + k - 1] } else { 0.0 };
            let right = if k + 1 < nb { phi[s * nb + k + 1] } else { 0.0 };
            out.push(SupportBin {
                state: s,
                bin: k,
                omega: chain.center(s, k),
                mass: m,
                atom: m > 10.0 * left && m > 10.0 * right,
            });
        }
    }
    out
}

/// Visits to a regeneration point along a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegenerationStats {
    pub times: Vec<usize>,
    /// Mean gap between successive visits; None with fewer than two visits.
    pub mean_block_length: Option<f64>,
    pub warning: Option<String>,
}

/// Times at which the path sits at (state, ω) to within `tol`.
pub fn regeneration_stats(path: &[PathPoint], state: usize, omega: f64, tol: f64) -> RegenerationStats {
    let times: Vec<usize> = path
        .iter()
        .filter(|p| p.state == state && (p.omega - omega).abs() <= tol)
        .map(|p| p.t)
        .collect();
    let mean_block_length = if times.len() >= 2 {
        Some((times[times.len() - 1] - times[0]) as f64 / (times.len() - 1) as f64)
    } else {
        None
    };
    let warning = mean_block_length
        .is_none()
        .then(|| format!("{} visits to the regeneration point; horizon too short", times.len()));
    RegenerationStats {
        times,
        mean_block_length,
        warning,
    }
}

/// Smallest probability, over supported bins, of reaching `target` within k steps.
pub fn reach_probability(dist: &ErgodicDistribution, target: usize, k: usize) -> f64 {
    let chain = &dist.chain;
    dist.support
        .par_iter()
        .map(|b| {
            let mut v = vec![0.0; chain.rows.len()];
            v[b.state * chain.bins + b.bin] = 1.0;
            let mut best: f64 = 0.0;
            for _ in 0..k {
                v = chain.step(&v);
                best = best.max(v[target]);
            }
            best
        })
        .reduce(|| 1.0, f64::min)
}
