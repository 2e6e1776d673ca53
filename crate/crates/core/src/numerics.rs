//! Root finding, Chebyshev grids and shape-preserving cubic interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a function with a sign change.
///
/// Stops when the bracket is narrower than `tol` or cannot be split further.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]: f = ({fa}, {fb})"
        )));
    }
    let neg_at_a = fa < 0.0;
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a) <= tol || m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is
/// true on an initial segment. Assumes `pred(lo)` holds.
pub fn last_true<F: FnMut(f64) -> bool>(mut pred: F, lo: f64, hi: f64, tol: f64) -> f64 {
    if pred(hi) {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a) <= tol || m <= a || m >= b {
            break;
        }
        if pred(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Chebyshev–Lobatto nodes on `[a, b]`, ascending, endpoints included.
pub fn chebyshev_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least two nodes");
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut nodes: Vec<f64> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (n - 1) as f64;
            mid - half * theta.cos()
        })
        .collect();
    nodes[0] = a;
    nodes[n - 1] = b;
    nodes
}

/// Piecewise cubic Hermite interpolant that preserves monotonicity of the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    /// Fritsch–Butland slopes estimated from the data alone.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = del[0];
            m[1] = del[0];
            return Self { x, y, m };
        }
        for k in 1..n - 1 {
            if del[k - 1] * del[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                m[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
            }
        }
        m[0] = end_slope(h[0], h[1], del[0], del[1]);
        m[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        Self { x, y, m }
    }

    /// Hermite interpolant with supplied slopes, limited so that each
    /// segment stays monotone.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, mut m: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n && m.len() == n);
        for k in 0..n - 1 {
            let d = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
            if d == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
                continue;
            }
            if m[k] / d < 0.0 {
                m[k] = 0.0;
            }
            if m[k + 1] / d < 0.0 {
                m[k + 1] = 0.0;
            }
            let a = m[k] / d;
            let b = m[k + 1] / d;
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                m[k] = t * a * d;
                m[k + 1] = t * b * d;
            }
        }
        Self { x, y, m }
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        let k = self.x.partition_point(|&v| v <= t);
        k.clamp(1, n - 1) - 1
    }

    fn eval_in(&self, k: usize, t: f64) -> f64 {
        let h = self.x[k + 1] - self.x[k];
        let u = (t - self.x[k]) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.y[k] + h10 * h * self.m[k] + h01 * self.y[k + 1] + h11 * h * self.m[k + 1]
    }

    /// Value at `t`; constant extrapolation outside the node range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        self.eval_in(self.segment(t), t)
    }

    /// Derivative at `t` (zero outside the node range).
    pub fn deriv(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            return 0.0;
        }
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        let u = (t - self.x[k]) / h;
        let u2 = u * u;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        (d00 * self.y[k] + d01 * self.y[k + 1]) / h + d10 * self.m[k] + d11 * self.m[k + 1]
    }

    /// For nondecreasing data: the largest `t` in the node range with
    /// `eval(t) <= v`. Returns the first node when `v` lies below the data.
    pub fn sup_below(&self, v: f64) -> f64 {
        let n = self.x.len();
        if v < self.y[0] {
            return self.x[0];
        }
        if v >= self.y[n - 1] {
            return self.x[n - 1];
        }
        let k = self.y.partition_point(|&yk| yk <= v) - 1;
        let (mut a, mut b) = (self.x[k], self.x[k + 1]);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.eval_in(k, m) <= v {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Sum with pairwise reduction, for sums whose value must not depend on
/// accumulation order beyond the input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
