//! Power-series enclosures of the Legendre function of the first kind.
//!
//! `f(t, β) = Σ a_n(β) (1 - t)^n` with `a_0 = 1` and
//! `a_{n+1} = a_n (n² + n - β) / (2 (n + 1)²)`, the solution of
//! `(1 - t²) f'' - 2 t f' + β f = 0` that is regular at `t = 1`.
//! The companion `g(t, β) = f(t, -β/8)`.
//!
//! Tail bounds. With `u = |1 - t|`, `y = u / 2` and falling factorials
//! `n^(j) = n (n-1) ... (n-j+1)`, the `j`-th derivative tail satisfies
//!
//! ```text
//! Σ_{n>k} |a_n| n^(j) u^(n-j) <= C 2^-j D_j(k, y),   D_j = d^j/dy^j [ y^(k+1) / (1 - y) ]
//! ```
//!
//! whenever `|a_n| <= C 2^-n` for all `n > k`. Two constants qualify:
//! `C = 2 |a_0|` when `β ⊆ [-2, 2]` (each ratio `|n² + n - β| / (2 (n+1)²)`
//! is at most `1/2` for `n >= 1`, and `|a_1| = |β|/2 <= 1`), and
//! `C = |a_k| 2^k` when `k + 1 >= |β|`, since then every later ratio is at
//! most `1/2`. The smaller of the applicable bounds is used.

use crate::error::{Error, Result};
use crate::interval::{mul_up, Interval};

/// Truncation index used when the caller does not pick one.
pub const DEFAULT_K: usize = 60;

/// Hard cap for automatically chosen truncation indices.
pub const MAX_K: usize = 100_000;

/// Interval enclosures of `a_0(β), ..., a_k(β)` for every `β` in a box.
///
/// Stored scaled as `b_n = 2^n a_n`, which stays of moderate size where
/// `a_n` itself would underflow; evaluation runs in `y = (1 - t) / 2`.
#[derive(Clone, Debug)]
pub struct SeriesCoeffs {
    beta: Interval,
    b: Vec<Interval>,
}

/// A rigorous enclosure of `∂_t^j f(t, β)` over a `(t, β)` box.
#[derive(Clone, Copy, Debug)]
pub struct SeriesEval {
    pub value: Interval,
    pub derivative_order: usize,
    pub truncation_index: usize,
    pub tail_bound: f64,
}

impl SeriesCoeffs {
    pub fn new(beta: Interval, k: usize) -> Self {
        let mut out = SeriesCoeffs { beta, b: Vec::with_capacity(k + 1) };
        out.b.push(Interval::ONE);
        out.extend_to(k);
        out
    }

    /// Grow the coefficient vector so that `a[k]` exists.
    pub fn extend_to(&mut self, k: usize) {
        while self.b.len() <= k {
            let n = (self.b.len() - 1) as f64;
            let prev = *self.b.last().unwrap();
            // n² + n and (n+1)² are exact for every n we reach.
            let num = Interval::point(n * n + n) - self.beta;
            self.b.push((prev * num).div_f64((n + 1.0) * (n + 1.0)));
        }
    }

    pub fn beta(&self) -> Interval {
        self.beta
    }

    pub fn k(&self) -> usize {
        self.b.len() - 1
    }

    /// `a_n` unscaled; deep coefficients may underflow to a tiny box.
    pub fn a(&self, n: usize) -> Interval {
        let mut v = self.b[n];
        let mut e = n as i32;
        while e > 0 {
            let step = e.min(1000);
            v = v * 0.5f64.powi(step);
            e -= step;
        }
        v
    }

    /// The scaled coefficients `2^n a_n`.
    pub fn scaled(&self) -> &[Interval] {
        &self.b
    }

    /// Evaluate with the full stored truncation index.
    pub fn eval(&self, t: Interval, j: usize) -> Result<SeriesEval> {
        self.eval_truncated(t, j, self.k())
    }

    /// Evaluate `∂_t^j f` with the partial sum truncated at `n = k`.
    pub fn eval_truncated(&self, t: Interval, j: usize, k: usize) -> Result<SeriesEval> {
        if j > 2 {
            return Err(Error::Domain(format!("derivative order {j} not supported")));
        }
        if k > self.k() {
            return Err(Error::Domain(format!("truncation index {k} exceeds stored {}", self.k())));
        }
        let u = Interval::ONE - t;
        let y = u * 0.5;
        let r = u.mag();
        let (k, tail) = if r == 0.0 {
            // Every term with n > j vanishes identically at t = 1.
            if self.k() < j {
                return Err(Error::Domain(format!("need a_{j} for derivative order {j}")));
            }
            (k.max(j), 0.0)
        } else {
            (k, self.tail_bound(t, j, k)?)
        };
        let partial = if k < j {
            Interval::ZERO
        } else {
            let mut s = Interval::ZERO;
            for n in (j..=k).rev() {
                s = s * y + self.b[n] * falling(n, j);
            }
            // d/dt = -1/2 d/dy
            let s = s * 0.5f64.powi(j as i32);
            if j % 2 == 1 {
                -s
            } else {
                s
            }
        };
        Ok(SeriesEval {
            value: partial + Interval::new(-tail, tail),
            derivative_order: j,
            truncation_index: k,
            tail_bound: tail,
        })
    }

    /// Bound on `Σ_{n>k} |a_n| n^(j) |1-t|^(n-j)`, or `BoundUnavailable`.
    pub fn tail_bound(&self, t: Interval, j: usize, k: usize) -> Result<f64> {
        let r = (Interval::ONE - t).mag();
        if r == 0.0 {
            return Ok(0.0);
        }
        if !(r < 2.0) {
            return Err(Error::BoundUnavailable(format!(
                "|1 - t| reaches {r} on {t:?}; tail bounds need |1 - t| < 2"
            )));
        }
        let y = r / 2.0;
        let d = geometric_derivative_tail(k, y, j);
        let scale = 0.5f64.powi(j as i32);
        let mut best: Option<f64> = None;
        let prop_ok = self.beta.lo() >= -2.0 && self.beta.hi() <= 2.0 && t.lo() > -1.0 && t.hi() <= 1.0;
        if prop_ok {
            best = Some(mul_up(2.0 * scale, d));
        }
        if (k as f64) + 1.0 >= self.beta.mag() {
            let c = self.b[k].mag();
            let bound = mul_up(mul_up(c, scale), d);
            best = Some(best.map_or(bound, |b| b.min(bound)));
        }
        best.ok_or_else(|| {
            Error::BoundUnavailable(format!(
                "no tail bound for beta {:?} with k = {k} (need beta in [-2, 2] or k + 1 >= |beta|)",
                self.beta
            ))
        })
    }
}

fn falling(n: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64)
}

/// Upper bound on `d^j/dy^j [y^(k+1) / (1 - y)]` for `0 <= y < 1`.
///
/// All three derivatives are increasing in `y`, so evaluating at the point
/// `y` with outward rounding and taking the upper endpoint is rigorous.
pub fn geometric_derivative_tail(k: usize, y: f64, j: usize) -> f64 {
    debug_assert!((0.0..1.0).contains(&y));
    let yi = Interval::point(y);
    let one_minus = Interval::ONE - yi;
    let kf = k as f64;
    let pow = |e: usize| yi.powi(e as i32).expect("non-negative exponent");
    let v = match j {
        0 => pow(k + 1).div(one_minus),
        1 => {
            let lin = Interval::point(kf + 1.0) - yi * kf;
            (pow(k) * lin).div(one_minus.sqr())
        }
        _ => {
            let lin = Interval::point(kf + 1.0) - yi * kf;
            let first = if k == 0 {
                // k y^(k-1) ((k+1) - k y) - k y^k vanishes identically.
                Interval::ZERO
            } else {
                (pow(k - 1) * lin * kf - pow(k) * kf).div(one_minus.sqr()).unwrap()
            };
            let second = (pow(k) * lin * 2.0).div(one_minus.powi(3).unwrap());
            second.map(|s| first + s)
        }
    };
    v.map(|x| x.hi().max(0.0)).unwrap_or(f64::INFINITY)
}

/// Coefficients `a_0..a_k` for the box `beta`.
pub fn coeffs(beta: Interval, k: usize) -> SeriesCoeffs {
    SeriesCoeffs::new(beta, k)
}

/// Enclosure of `∂_t^j f(t, β)` truncated at `k` plus a proven tail.
pub fn eval(t: Interval, beta: Interval, j: usize, k: usize) -> Result<SeriesEval> {
    SeriesCoeffs::new(beta, k.max(j)).eval_truncated(t, j, k.max(j))
}

/// The companion `g(t, β) = f(t, -β/8)`.
pub fn g_beta(beta: Interval) -> Interval {
    beta.div_f64(-8.0)
}

pub fn eval_g(t: Interval, beta: Interval, j: usize, k: usize) -> Result<SeriesEval> {
    eval(t, g_beta(beta), j, k)
}

/// Smallest sensible truncation index for a `(t, β)` box: the tail at `j`
/// falls below roughly `2^-55` relative to the leading terms.
pub fn required_k(t: Interval, beta: Interval, j: usize) -> Result<usize> {
    let r = (Interval::ONE - t).mag();
    if r == 0.0 {
        return Ok(DEFAULT_K);
    }
    if !(r < 2.0) {
        return Err(Error::BoundUnavailable(format!("|1 - t| reaches {r}")));
    }
    let y = r / 2.0;
    let by_decay = (55.0 * std::f64::consts::LN_2 / -y.ln()).ceil() as usize + j + 2;
    let by_beta = beta.mag().ceil() as usize;
    let k = by_decay.max(by_beta).max(DEFAULT_K);
    if k > MAX_K {
        return Err(Error::BoundUnavailable(format!("would need {k} series terms at t = {t:?}")));
    }
    Ok(k)
}

/// Enclosure of `∂_t^j f` with the truncation index chosen by [`required_k`].
pub fn eval_auto(t: Interval, beta: Interval, j: usize) -> Result<SeriesEval> {
    let k = required_k(t, beta, j)?;
    eval(t, beta, j, k)
}

/// Certify `g(t, β) >= 1` on `t ∈ [-1, 1]` by proving every series
/// coefficient of `f(·, -β/8)` is positive.
///
/// `a_1 = β/16` and for `n >= 1` the recursion factor is
/// `(n² + n + β/8) / (2 (n+1)²)`, whose numerator is smallest at `n = 1`.
/// Positivity of `a_1` and of that numerator proves the induction.
pub fn check_g_geq_one(beta: Interval) -> Result<bool> {
    if beta.lo() < 1.5 || beta.hi() > 2.0 {
        return Err(Error::Domain(format!("beta {beta:?} outside [3/2, 2]")));
    }
    let c = coeffs(g_beta(beta), 1);
    let first = c.a(1);
    let step = Interval::point(2.0) - g_beta(beta);
    Ok(first.lo() > 0.0 && step.lo() > 0.0)
}
