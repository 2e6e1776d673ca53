//! The one-period problem given continuation tables: a scalar root in μ.

use super::table::StateTable;

/// Data of the current period's constraints.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stage {
    /// Weight of the young's utility relative to the baseline (1 + ε under a
    /// population shock, else 1).
    pub scale: f64,
    /// Upper limit from nonnegative transfers to the young.
    pub share: f64,
    /// Autarky utility of the current young.
    pub upsilon: f64,
    /// Upper limit on c from promise keeping.
    pub c_cap: f64,
    /// Hold c at `c_cap` regardless of μ (debt-space evaluation).
    pub force_cap: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct InnerSolution {
    pub c: f64,
    pub mu: f64,
    pub lambda: f64,
    pub promises: Vec<f64>,
    /// Young's lifetime utility minus autarky.
    pub gain: f64,
}

pub(crate) struct Inner<'a> {
    pub tables: &'a [StateTable],
    pub probs: &'a [f64],
    pub beta: f64,
    pub delta: f64,
    pub mu_cap: f64,
}

impl Inner<'_> {
    pub fn promises(&self, mu: f64) -> Vec<f64> {
        self.tables.iter().map(|t| t.h_inv(mu)).collect()
    }

    fn consumption(&self, st: &Stage, mu: f64) -> f64 {
        if st.force_cap {
            return st.c_cap;
        }
        let a = self.delta * st.scale * (1.0 + mu);
        (a / (self.beta + a)).min(st.share).min(st.c_cap)
    }

    fn gap(&self, st: &Stage, mu: f64) -> (f64, f64, Vec<f64>) {
        let c = self.consumption(st, mu);
        let g = self.promises(mu);
        let ev: f64 = g.iter().zip(self.probs).map(|(w, p)| p * w).sum();
        (c.ln() + self.beta * ev - st.upsilon, c, g)
    }

    pub fn solve(&self, st: &Stage) -> InnerSolution {
        let (g0, c0, p0) = self.gap(st, 0.0);
        let (mu, c, promises, gain) = if g0 >= 0.0 {
            (0.0, c0, p0, g0)
        } else {
            let t_hi = self.mu_cap.ln_1p();
            let (gh, ch, ph) = self.gap(st, self.mu_cap);
            if gh < 0.0 {
                (self.mu_cap, ch, ph, gh)
            } else {
                let (mut lo, mut hi) = (0.0f64, t_hi);
                let mut best = (self.mu_cap, ch, ph, gh);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if m <= lo || m >= hi || hi - lo < 1e-15 {
                        break;
                    }
                    let mu = m.exp_m1();
                    let (gm, cm, pm) = self.gap(st, mu);
                    if gm >= 0.0 {
                        hi = m;
                        best = (mu, cm, pm, gm);
                    } else {
                        lo = m;
                    }
                }
                best
            }
        };
        let lambda =
            (self.delta * st.scale * (1.0 + mu) * (1.0 - c) / (self.beta * c) - 1.0).max(0.0);
        InnerSolution {
            c,
            mu,
            lambda,
            promises,
            gain,
        }
    }
}
