//! Closed floating-point intervals with outward rounding.
//!
//! Rounding is directed without touching the FPU rounding mode: every
//! primitive is computed round-to-nearest, the exact rounding error is
//! recovered with an error-free transformation (TwoSum, FMA residual), and
//! the endpoint is nudged one ulp outward only when the result was inexact.
//! Where the residual itself could be inexact (subnormal range, overflow)
//! the endpoint is nudged unconditionally.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Below this magnitude FMA residuals may be rounded, so we widen blindly.
const TINY: f64 = 1.0e-290;

/// Rigorous upper bound for the Taylor remainders used by `exp`, `ln`,
/// `sin` and `cos` once the argument has been reduced (see each function).
const REMAINDER: f64 = 7.888609052210118e-31; // 2^-100

/// Width of `exp` on a point argument relative to its midpoint, at most
/// `2^-40`; dominated by the one-ulp enclosure of `ln 2` times the reduction
/// multiple.
pub const EXP_POINT_REL_WIDTH: f64 = 9.094947017729282e-13; // 2^-40

/// Width of `ln` on a point argument is at most `2^-48 · max(1, |ln a|)`.
pub const LN_POINT_REL_WIDTH: f64 = 3.552713678800501e-15; // 2^-48

// ln 2 = 0.693147180559945309417232121458...; the nearest double is below it.
const LN2_LO: f64 = std::f64::consts::LN_2;
const LN2_HI: f64 = 0.6931471805599454;
// pi = 3.14159265358979323846...; the nearest double is below it.
const PI_LO: f64 = std::f64::consts::PI;
const PI_HI: f64 = 3.1415926535897936;

#[inline]
fn next_up(x: f64) -> f64 {
    x.next_up()
}

#[inline]
fn next_down(x: f64) -> f64 {
    x.next_down()
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if s.is_finite() {
        if e < 0.0 || e.is_nan() {
            next_down(s)
        } else {
            s
        }
    } else if s == f64::INFINITY && a.is_finite() && b.is_finite() {
        f64::MAX
    } else {
        s
    }
}

pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if s.is_finite() {
        if e > 0.0 || e.is_nan() {
            next_up(s)
        } else {
            s
        }
    } else if s == f64::NEG_INFINITY && a.is_finite() && b.is_finite() {
        f64::MIN
    } else {
        s
    }
}

pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p.is_nan() {
        return f64::NEG_INFINITY;
    }
    if p.is_infinite() {
        return if p > 0.0 && a.is_finite() && b.is_finite() { f64::MAX } else { p };
    }
    if p.abs() < TINY {
        return next_down(p);
    }
    let e = a.mul_add(b, -p);
    if e < 0.0 {
        next_down(p)
    } else {
        p
    }
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p.is_nan() {
        return f64::INFINITY;
    }
    if p.is_infinite() {
        return if p < 0.0 && a.is_finite() && b.is_finite() { f64::MIN } else { p };
    }
    if p.abs() < TINY {
        return next_up(p);
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 {
        next_up(p)
    } else {
        p
    }
}

/// Sign of `a/b - q` where `q = fl(a/b)`, or `None` if the residual is unreliable.
fn div_residual_sign(a: f64, b: f64, q: f64) -> Option<f64> {
    if !q.is_finite() || q == 0.0 || q.abs() < TINY || a.abs() < TINY {
        return None;
    }
    let r = (-q).mul_add(b, a);
    Some(if b > 0.0 { r } else { -r })
}

pub(crate) fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 && b != 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_nan() {
        return f64::NEG_INFINITY;
    }
    if q.is_infinite() {
        return if q > 0.0 && a.is_finite() && b != 0.0 { f64::MAX } else { q };
    }
    match div_residual_sign(a, b, q) {
        Some(s) if s >= 0.0 => q,
        _ => next_down(q),
    }
}

pub(crate) fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 && b != 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_nan() {
        return f64::INFINITY;
    }
    if q.is_infinite() {
        return if q < 0.0 && a.is_finite() && b != 0.0 { f64::MIN } else { q };
    }
    match div_residual_sign(a, b, q) {
        Some(s) if s <= 0.0 => q,
        _ => next_up(q),
    }
}

fn sqrt_down(x: f64) -> f64 {
    let r = x.sqrt();
    if r == 0.0 || r.is_infinite() {
        return r;
    }
    if x < TINY {
        return next_down(r).max(0.0);
    }
    let e = (-r).mul_add(r, x);
    if e < 0.0 {
        next_down(r)
    } else {
        r
    }
}

fn sqrt_up(x: f64) -> f64 {
    let r = x.sqrt();
    if r.is_infinite() {
        return r;
    }
    if x < TINY {
        return if x == 0.0 { 0.0 } else { next_up(r) };
    }
    let e = (-r).mul_add(r, x);
    if e > 0.0 {
        next_up(r)
    } else {
        r
    }
}

/// `2^k` for `k` in the normal exponent range.
fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// A closed interval `[lo, hi]` of extended reals.
///
/// There is no empty interval: emptiness is reported out of band through
/// [`Error::EmptyIntersection`].
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const LN2: Interval = Interval { lo: LN2_LO, hi: LN2_HI };
    pub const PI: Interval = Interval { lo: PI_LO, hi: PI_HI };

    /// Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        Self::try_new(lo, hi).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Domain(format!("invalid interval endpoints [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    /// The interval `[x - r, x + r]`, rounded outward.
    pub fn around(x: f64, r: f64) -> Self {
        let r = r.abs();
        Interval { lo: add_down(x, -r), hi: add_up(x, r) }
    }

    /// Smallest interval containing the rational `p / q`.
    pub fn ratio(p: f64, q: f64) -> Self {
        Interval { lo: div_down(p, q), hi: div_up(p, q) }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// A floating-point number inside the interval.
    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        if self.lo == f64::NEG_INFINITY {
            return if self.hi == f64::INFINITY { 0.0 } else { f64::MIN };
        }
        if self.hi == f64::INFINITY {
            return f64::MAX;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Width, rounded up.
    pub fn width(&self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    /// Radius about `mid()`, rounded up.
    pub fn rad(&self) -> f64 {
        let m = self.mid();
        add_up(self.hi, -m).max(add_up(m, -self.lo))
    }

    /// Magnitude: `max |x|`.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Mignitude: `min |x|`.
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn subset(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// `self` lies in the interior of `other`.
    pub fn interior_subset(&self, other: &Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(&self, other: &Interval) -> Result<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            Err(Error::EmptyIntersection)
        } else {
            Ok(Interval { lo, hi })
        }
    }

    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval { lo: self.lo, hi: m }, Interval { lo: m, hi: self.hi })
    }

    /// Split into `n` consecutive pieces sharing endpoints exactly.
    pub fn split(&self, n: usize) -> Vec<Interval> {
        assert!(n > 0);
        let mut cuts = Vec::with_capacity(n + 1);
        cuts.push(self.lo);
        for i in 1..n {
            let s = i as f64 / n as f64;
            let x = self.lo + (self.hi - self.lo) * s;
            cuts.push(x.clamp(self.lo, self.hi));
        }
        cuts.push(self.hi);
        cuts.windows(2)
            .map(|w| Interval { lo: w[0], hi: w[1].max(w[0]) })
            .collect()
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval { lo: 0.0, hi: self.mag() }
        }
    }

    /// `x^2`, tighter than `x * x` when the interval straddles zero.
    pub fn sqr(&self) -> Interval {
        let m = self.mig();
        let big = self.mag();
        Interval { lo: mul_down(m, m), hi: mul_up(big, big) }
    }

    pub fn div(&self, rhs: Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::Domain(format!("division by {rhs:?}, which contains zero")));
        }
        let cands_lo = [
            div_down(self.lo, rhs.lo),
            div_down(self.lo, rhs.hi),
            div_down(self.hi, rhs.lo),
            div_down(self.hi, rhs.hi),
        ];
        let cands_hi = [
            div_up(self.lo, rhs.lo),
            div_up(self.lo, rhs.hi),
            div_up(self.hi, rhs.lo),
            div_up(self.hi, rhs.hi),
        ];
        Ok(Interval {
            lo: cands_lo.iter().copied().fold(f64::INFINITY, f64::min),
            hi: cands_hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    pub fn recip(&self) -> Result<Interval> {
        Interval::ONE.div(*self)
    }

    /// Divide by a nonzero floating-point constant.
    pub fn div_f64(&self, d: f64) -> Interval {
        assert!(d != 0.0 && !d.is_nan());
        if d > 0.0 {
            Interval { lo: div_down(self.lo, d), hi: div_up(self.hi, d) }
        } else {
            Interval { lo: div_down(self.hi, d), hi: div_up(self.lo, d) }
        }
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::Domain(format!("sqrt of {self:?}")));
        }
        Ok(Interval { lo: sqrt_down(self.lo), hi: sqrt_up(self.hi) })
    }

    /// `x^n` for an integer exponent; negative `n` requires `0 ∉ x`.
    pub fn powi(&self, n: i32) -> Result<Interval> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        if n == 0 {
            return Ok(Interval::ONE);
        }
        let n = n as u32;
        let up = |a: f64| pow_nonneg(a, n, mul_up);
        let down = |a: f64| pow_nonneg(a, n, mul_down);
        Ok(if self.lo >= 0.0 {
            Interval { lo: down(self.lo), hi: up(self.hi) }
        } else if self.hi <= 0.0 {
            if n % 2 == 0 {
                Interval { lo: down(-self.hi), hi: up(-self.lo) }
            } else {
                Interval { lo: -up(-self.lo), hi: -down(-self.hi) }
            }
        } else if n % 2 == 0 {
            Interval { lo: 0.0, hi: up(self.mag()) }
        } else {
            Interval { lo: -up(-self.lo), hi: up(self.hi) }
        })
    }

    pub fn exp(&self) -> Interval {
        Interval { lo: exp_enclosure(self.lo).lo, hi: exp_enclosure(self.hi).hi }
    }

    pub fn ln(&self) -> Result<Interval> {
        if self.lo <= 0.0 {
            return Err(Error::Domain(format!("ln of {self:?}")));
        }
        Ok(Interval { lo: ln_enclosure(self.lo)?.lo, hi: ln_enclosure(self.hi)?.hi })
    }

    /// `base^exponent` for `base > 0`, as `exp(exponent * ln(base))`.
    pub fn pow(&self, exponent: Interval) -> Result<Interval> {
        if self.lo <= 0.0 {
            return Err(Error::Domain(format!("pow with base {self:?} not strictly positive")));
        }
        if *self == Interval::ONE {
            return Ok(Interval::ONE);
        }
        Ok((exponent * self.ln()?).exp())
    }

    /// Cosine of an arbitrary interval.
    pub fn cos(&self) -> Interval {
        if !self.is_finite() || self.width() >= 6.2 {
            return Interval::new(-1.0, 1.0);
        }
        let mut out = cos_point(self.lo).hull(&cos_point(self.hi));
        // Extrema of cos sit at integer multiples of pi; include every
        // multiple that could lie in [lo, hi] given the uncertainty of pi.
        let m_lo = div_down(self.lo, if self.lo >= 0.0 { PI_HI } else { PI_LO }).floor() as i64;
        let m_hi = div_up(self.hi, if self.hi >= 0.0 { PI_LO } else { PI_HI }).ceil() as i64;
        for m in m_lo..=m_hi {
            let at = Interval::PI * Interval::point(m as f64);
            if at.hi >= self.lo && at.lo <= self.hi {
                let v = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                out = out.hull(&Interval::point(v));
            }
        }
        out.clamp_unit()
    }

    pub fn sin(&self) -> Interval {
        (Interval::PI.div_f64(2.0) - *self).cos()
    }

    /// `arccos` on `[-1, 1]`, decreasing, so the endpoints swap.
    pub fn acos(&self) -> Result<Interval> {
        if self.lo < -1.0 || self.hi > 1.0 {
            return Err(Error::Domain(format!("acos of {self:?}")));
        }
        Ok(Interval { lo: acos_point(self.hi).lo, hi: acos_point(self.lo).hi })
    }

    fn clamp_unit(self) -> Interval {
        Interval { lo: self.lo.max(-1.0), hi: self.hi.min(1.0) }
    }

    /// Lower bound strictly positive.
    pub fn is_positive(&self) -> bool {
        self.lo > 0.0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0.0
    }
}

fn pow_nonneg(a: f64, mut n: u32, mul: fn(f64, f64) -> f64) -> f64 {
    debug_assert!(a >= 0.0);
    let mut base = a;
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc = mul(acc, base);
        }
        n >>= 1;
        if n > 0 {
            base = mul(base, base);
        }
    }
    acc
}

/// Enclosure of `1/n!` for `n = 0..=N`.
fn inv_factorials<const N: usize>() -> [Interval; N] {
    let mut out = [Interval::ONE; N];
    for n in 1..N {
        out[n] = out[n - 1].div_f64(n as f64);
    }
    out
}

/// Rigorous enclosure of `exp(a)` for a floating-point `a`.
///
/// `a = k ln2 + r` with `|r| <= ln2/2 + tiny`; `exp(r)` is the degree-22
/// Taylor polynomial plus a Lagrange remainder bounded by
/// `|r|^23 / 23! * e^|r| < 0.35^23 / 23! * 1.5 < 2e-33 < 2^-100`.
/// The result is then scaled by `2^k`, which is exact in the normal range.
pub fn exp_enclosure(a: f64) -> Interval {
    if a.is_nan() {
        return Interval::new(0.0, f64::INFINITY);
    }
    if a == 0.0 {
        return Interval::ONE;
    }
    if a > 709.0 {
        return Interval { lo: if a == f64::INFINITY { f64::INFINITY } else { f64::MAX }, hi: f64::INFINITY };
    }
    if a < -708.0 {
        return Interval { lo: 0.0, hi: f64::MIN_POSITIVE };
    }
    let k = (a / LN2_LO).round() as i32;
    let r = Interval::point(a) - Interval::LN2 * Interval::point(k as f64);
    debug_assert!(r.mag() < 0.35);
    let inv = inv_factorials::<23>();
    let mut s = inv[22];
    for n in (0..22).rev() {
        s = s * r + inv[n];
    }
    let s = s + Interval::new(-REMAINDER, REMAINDER);
    s * Interval::point(pow2(k))
}

/// Rigorous enclosure of `ln(a)` for `a > 0`.
///
/// `a = m 2^e` with `m ∈ [1/√2, √2]`, `ln m = 2 atanh(z)`, `z = (m-1)/(m+1)`,
/// `|z| <= 0.1716`. The atanh series truncated after `z^41` leaves a remainder
/// of at most `2|z|^43 / (43 (1 - z^2)) < 1e-34 < 2^-100`.
pub fn ln_enclosure(a: f64) -> Result<Interval> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("ln of {a}")));
    }
    if a == 1.0 {
        return Ok(Interval::ZERO);
    }
    if a == f64::INFINITY {
        return Ok(Interval { lo: f64::MAX, hi: f64::INFINITY });
    }
    // Normalise subnormals first.
    let (a, shift) = if a < f64::MIN_POSITIVE { (a * pow2(64), -64) } else { (a, 0) };
    let bits = a.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i32 - 1023 + shift;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1023u64 << 52));
    if m > std::f64::consts::SQRT_2 {
        m *= 0.5;
        e += 1;
    }
    let mi = Interval::point(m);
    let z = (mi - Interval::ONE).div(mi + Interval::ONE)?;
    debug_assert!(z.mag() <= 0.1716);
    let z2 = z.sqr();
    const TERMS: usize = 21;
    let mut s = Interval::ratio(1.0, (2 * TERMS - 1) as f64);
    for n in (0..TERMS - 1).rev() {
        s = s * z2 + Interval::ratio(1.0, (2 * n + 1) as f64);
    }
    let ln_m = Interval::point(2.0) * z * s + Interval::new(-REMAINDER, REMAINDER);
    Ok(Interval::LN2 * Interval::point(e as f64) + ln_m)
}

/// Taylor enclosures of sin and cos on `|x| <= 0.8`: degree 25/26 with
/// remainder `|x|^27/27! < 2^-100`.
fn sin_small(x: Interval) -> Interval {
    debug_assert!(x.mag() <= 0.8);
    let x2 = x.sqr();
    let inv = inv_factorials::<28>();
    let mut s = inv[25] * Interval::point(sign_of(12));
    for n in (0..12).rev() {
        s = s * x2 + inv[2 * n + 1] * Interval::point(sign_of(n));
    }
    s * x + Interval::new(-REMAINDER, REMAINDER)
}

fn cos_small(x: Interval) -> Interval {
    debug_assert!(x.mag() <= 0.8);
    let x2 = x.sqr();
    let inv = inv_factorials::<28>();
    let mut s = inv[26] * Interval::point(sign_of(13));
    for n in (0..13).rev() {
        s = s * x2 + inv[2 * n] * Interval::point(sign_of(n));
    }
    s + Interval::new(-REMAINDER, REMAINDER)
}

fn sign_of(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Rigorous `cos(a)` for a floating-point `a`, reducing by multiples of pi/2.
fn cos_point(a: f64) -> Interval {
    let half_pi = Interval::PI.div_f64(2.0);
    let q = (a / std::f64::consts::FRAC_PI_2).round();
    let r = Interval::point(a) - half_pi * Interval::point(q);
    if r.mag() > 0.8 {
        return Interval::new(-1.0, 1.0);
    }
    let v = match (q as i64).rem_euclid(4) {
        0 => cos_small(r),
        1 => -sin_small(r),
        2 => -cos_small(r),
        _ => sin_small(r),
    };
    v.clamp_unit()
}

/// Rigorous `acos(x)` for a point in `[-1, 1]`: the floating-point guess is
/// widened until cos of the bracket endpoints provably straddles `x`.
fn acos_point(x: f64) -> Interval {
    if x == 1.0 {
        return Interval::ZERO;
    }
    if x == -1.0 {
        return Interval::PI;
    }
    let guess = x.acos();
    let mut delta = 4.0 * f64::EPSILON * guess.max(1e-300);
    for _ in 0..200 {
        let lo = (guess - delta).max(0.0);
        let hi = (guess + delta).min(PI_HI);
        let ok_lo = lo == 0.0 || cos_point(lo).lo >= x;
        let ok_hi = hi == PI_HI || cos_point(hi).hi <= x;
        if ok_lo && ok_hi {
            return Interval::new(lo, hi);
        }
        delta *= 4.0;
    }
    Interval::new(0.0, PI_HI)
}

/// Rigorous `cos(m π / n)` for integers, exact at multiples of pi/2.
pub fn cos_pi_frac(m: i64, n: i64) -> Interval {
    assert!(n > 0);
    let two_n = 2 * n;
    let mut m = m.rem_euclid(two_n);
    if m > n {
        m = two_n - m;
    }
    // now the angle is m*pi/n in [0, pi]
    let (m, sign) = if 2 * m > n { (n - m, -1.0) } else { (m, 1.0) };
    // angle in [0, pi/2]
    if m == 0 {
        return Interval::point(sign);
    }
    if 2 * m == n {
        return Interval::ZERO;
    }
    let v = if 4 * m > n {
        // cos(θ) = sin(π/2 − θ), with π/2 − θ = (n − 2m)π/(2n) in [0, π/4)
        sin_small(Interval::PI * Interval::ratio((n - 2 * m) as f64, (2 * n) as f64))
    } else {
        cos_small(Interval::PI * Interval::ratio(m as f64, n as f64))
    };
    (v * Interval::point(sign)).clamp_unit()
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: add_down(self.lo, rhs.lo), hi: add_up(self.hi, rhs.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval { lo: add_down(self.lo, -rhs.hi), hi: add_up(self.hi, -rhs.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        if a >= 0.0 && c >= 0.0 {
            return Interval { lo: mul_down(a, c), hi: mul_up(b, d) };
        }
        if b <= 0.0 && d <= 0.0 {
            return Interval { lo: mul_down(b, d), hi: mul_up(a, c) };
        }
        if a >= 0.0 && d <= 0.0 {
            return Interval { lo: mul_down(b, c), hi: mul_up(a, d) };
        }
        if b <= 0.0 && c >= 0.0 {
            return Interval { lo: mul_down(a, d), hi: mul_up(b, c) };
        }
        let lo = mul_down(a, c).min(mul_down(a, d)).min(mul_down(b, c)).min(mul_down(b, d));
        let hi = mul_up(a, c).max(mul_up(a, d)).max(mul_up(b, c)).max(mul_up(b, d));
        Interval { lo, hi }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        self + Interval::point(rhs)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        self - Interval::point(rhs)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self * Interval::point(rhs)
    }
}

/// Exact hexadecimal rendering of a double, `[-]0x1.<hex>p<exp>` (C `%a`).
pub fn hex_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x == 0.0 {
        return format!("{sign}0x0p+0");
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let mut mant = bits & ((1u64 << 52) - 1);
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let mut digits = 13;
    while digits > 0 && mant & 0xf == 0 {
        mant >>= 4;
        digits -= 1;
    }
    let frac = if digits == 0 { String::new() } else { format!(".{:0width$x}", mant, width = digits) };
    format!("{sign}0x{lead}{frac}p{exp:+}")
}

/// Inverse of [`hex_float`]; `None` on malformed input.
pub fn parse_hex_float(s: &str) -> Option<f64> {
    match s {
        "nan" => return Some(f64::NAN),
        "inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let (neg, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let rest = rest.strip_prefix("0x")?;
    let (m, e) = rest.split_once('p')?;
    let exp: i64 = e.parse().ok()?;
    let (lead, frac) = m.split_once('.').unwrap_or((m, ""));
    let lead = u64::from_str_radix(lead, 16).ok()?;
    if lead > 1 || frac.len() > 13 {
        return None;
    }
    let frac_bits = if frac.is_empty() { 0 } else { u64::from_str_radix(frac, 16).ok()? << (4 * (13 - frac.len())) };
    let bits = if lead == 0 {
        if frac_bits == 0 {
            0
        } else if exp == -1022 {
            frac_bits
        } else {
            return None;
        }
    } else {
        let biased = exp + 1023;
        if !(1..=2046).contains(&biased) {
            return None;
        }
        ((biased as u64) << 52) | frac_bits
    };
    let v = f64::from_bits(bits);
    Some(if neg { -v } else { v })
}

#[derive(serde::Serialize, serde::Deserialize)]
struct IntervalRepr {
    // serde_json writes non-finite values as null; the hex forms keep them
    lo: Option<f64>,
    hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo_hex: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi_hex: Option<String>,
}

/// Serialized as `{lo, hi, lo_hex, hi_hex}`: shortest round-trip decimals
/// plus exact hexadecimal forms. The hex forms win on input when present.
impl serde::Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalRepr { lo: Some(self.lo), hi: Some(self.hi), lo_hex: Some(hex_float(self.lo)), hi_hex: Some(hex_float(self.hi)) }
            .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = IntervalRepr::deserialize(d)?;
        let pick = |dec: Option<f64>, hex: &Option<String>| match (hex, dec) {
            (Some(h), _) => parse_hex_float(h).ok_or_else(|| D::Error::custom(format!("bad hex float {h}"))),
            (None, Some(v)) => Ok(v),
            (None, None) => Err(D::Error::custom("interval endpoint missing")),
        };
        let lo = pick(r.lo, &r.lo_hex)?;
        let hi = pick(r.hi, &r.hi_hex)?;
        Interval::try_new(lo, hi).map_err(|e| D::Error::custom(e.to_string()))
    }
}

impl std::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + b)
    }
}
