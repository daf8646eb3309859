//! Multiprecision reference arithmetic for containment tests.
//!
//! Exact dyadic rationals `m · 2^e` cover the field operations; the
//! transcendental functions run in binary fixed point with `PREC` fractional
//! bits (more than 100 decimal digits) and carry an explicit error radius.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub const PREC: i64 = 400;

/// Exact dyadic rational `m · 2^e`.
#[derive(Clone, Debug)]
pub struct Dy {
    pub m: BigInt,
    pub e: i64,
}

impl Dy {
    pub fn zero() -> Dy {
        Dy { m: BigInt::zero(), e: 0 }
    }

    pub fn from_int(n: i64) -> Dy {
        Dy { m: BigInt::from(n), e: 0 }
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64) -> Dy {
        assert!(x.is_finite(), "oracle needs finite input, got {x}");
        if x == 0.0 {
            return Dy::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        Dy { m: BigInt::from(mant) * sign, e }
    }

    /// Fixed-point value `fx · 2^-PREC`.
    pub fn from_fixed(fx: BigInt) -> Dy {
        Dy { m: fx, e: -PREC }
    }

    /// Truncation toward zero to `PREC` fractional bits.
    pub fn to_fixed(&self) -> BigInt {
        let shift = self.e + PREC;
        if shift >= 0 {
            &self.m << shift as usize
        } else {
            let mag = self.m.abs() >> (-shift) as usize;
            if self.m.is_negative() {
                -mag
            } else {
                mag
            }
        }
    }

    pub fn add(&self, o: &Dy) -> Dy {
        let e = self.e.min(o.e);
        Dy { m: (&self.m << (self.e - e) as usize) + (&o.m << (o.e - e) as usize), e }
    }

    pub fn neg(&self) -> Dy {
        Dy { m: -&self.m, e: self.e }
    }

    pub fn sub(&self, o: &Dy) -> Dy {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Dy) -> Dy {
        Dy { m: &self.m * &o.m, e: self.e + o.e }
    }

    pub fn abs(&self) -> Dy {
        Dy { m: self.m.abs(), e: self.e }
    }

    pub fn signum(&self) -> i32 {
        if self.m.is_zero() {
            0
        } else if self.m.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn cmp(&self, o: &Dy) -> Ordering {
        self.sub(o).signum().cmp(&0)
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Dy {
        Dy { m: BigInt::one(), e: k }
    }

    pub fn powu(&self, n: u32) -> Dy {
        Dy { m: self.m.pow(n), e: self.e * n as i64 }
    }

    /// Position of the leading bit, `floor(log2 |self|)`; `self != 0`.
    pub fn ilog2(&self) -> i64 {
        self.m.bits() as i64 - 1 + self.e
    }

    pub fn to_f64(&self) -> f64 {
        let b = self.m.bits() as i64;
        let drop = (b - 60).max(0);
        let top = (&self.m >> drop as usize).to_f64().unwrap();
        top * 2f64.powi((self.e + drop).clamp(-1074, 1023) as i32)
    }
}

/// `lo <= x` for an endpoint that may be infinite.
pub fn endpoint_le(lo: f64, x: &Dy) -> bool {
    if lo == f64::NEG_INFINITY {
        return true;
    }
    if lo == f64::INFINITY {
        return false;
    }
    Dy::from_f64(lo).cmp(x) != Ordering::Greater
}

/// `x <= hi` for an endpoint that may be infinite.
pub fn le_endpoint(x: &Dy, hi: f64) -> bool {
    if hi == f64::INFINITY {
        return true;
    }
    if hi == f64::NEG_INFINITY {
        return false;
    }
    x.cmp(&Dy::from_f64(hi)) != Ordering::Greater
}

/// Exact `lo <= x <= hi`.
pub fn contains_exact(lo: f64, hi: f64, x: &Dy) -> bool {
    endpoint_le(lo, x) && le_endpoint(x, hi)
}

/// Exact `lo <= num / den <= hi`, `den != 0`.
pub fn contains_ratio(lo: f64, hi: f64, num: &Dy, den: &Dy) -> bool {
    let s = den.signum();
    assert!(s != 0);
    let (num, den) = if s < 0 { (num.neg(), den.neg()) } else { (num.clone(), den.clone()) };
    let lo_ok = lo == f64::NEG_INFINITY || (lo != f64::INFINITY && Dy::from_f64(lo).mul(&den).cmp(&num) != Ordering::Greater);
    let hi_ok = hi == f64::INFINITY || (hi != f64::NEG_INFINITY && num.cmp(&Dy::from_f64(hi).mul(&den)) != Ordering::Greater);
    lo_ok && hi_ok
}

/// A reference value known to lie in `[mid - rad, mid + rad]`.
#[derive(Clone, Debug)]
pub struct Approx {
    pub mid: Dy,
    pub rad: Dy,
}

/// Outcome of comparing an interval against an [`Approx`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Inside,
    Outside,
    /// The reference ball straddles an endpoint.
    Undecided,
}

impl Approx {
    pub fn exact(x: Dy) -> Approx {
        Approx { mid: x, rad: Dy::zero() }
    }

    pub fn lower(&self) -> Dy {
        self.mid.sub(&self.rad)
    }

    pub fn upper(&self) -> Dy {
        self.mid.add(&self.rad)
    }

    pub fn check(&self, lo: f64, hi: f64) -> Check {
        let (l, u) = (self.lower(), self.upper());
        if endpoint_le(lo, &l) && le_endpoint(&u, hi) {
            Check::Inside
        } else if !endpoint_le(lo, &u) || !le_endpoint(&l, hi) {
            Check::Outside
        } else {
            Check::Undecided
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }
}

fn one_fx() -> BigInt {
    BigInt::one() << PREC as usize
}

/// Fixed-point product truncated toward zero, so iterated products decay to 0.
fn mul_fx(a: &BigInt, b: &BigInt) -> BigInt {
    let p = a * b;
    let mag = p.abs() >> PREC as usize;
    if p.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Working precision for constants, so their own error is far below `PREC`.
const GUARD: i64 = 32;

fn atanh_inv_fx(k: u32, prec: i64) -> BigInt {
    // atanh(1/k) = Σ 1 / ((2i+1) k^(2i+1))
    let kk = BigInt::from(k) * BigInt::from(k);
    let mut power = (BigInt::one() << prec as usize) / BigInt::from(k);
    let mut sum = BigInt::zero();
    let mut i = 0u64;
    while !power.is_zero() {
        sum += &power / BigInt::from(2 * i + 1);
        power /= &kk;
        i += 1;
    }
    sum
}

fn atan_inv_fx(k: u32, prec: i64) -> BigInt {
    let kk = BigInt::from(k) * BigInt::from(k);
    let mut power = (BigInt::one() << prec as usize) / BigInt::from(k);
    let mut sum = BigInt::zero();
    let mut i = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * i + 1);
        if i % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &kk;
        i += 1;
    }
    sum
}

/// `ln 2` to `PREC` bits, error below `2^-PREC`.
pub fn ln2_fx() -> &'static BigInt {
    static V: OnceLock<BigInt> = OnceLock::new();
    V.get_or_init(|| (atanh_inv_fx(3, PREC + GUARD) * 2) >> GUARD as usize)
}

/// `π` to `PREC` bits via Machin's formula.
pub fn pi_fx() -> &'static BigInt {
    static V: OnceLock<BigInt> = OnceLock::new();
    V.get_or_init(|| {
        let p = PREC + GUARD;
        ((atan_inv_fx(5, p) * 16) - (atan_inv_fx(239, p) * 4)) >> GUARD as usize
    })
}

fn round_div(a: &BigInt, b: &BigInt) -> i64 {
    let two_a: BigInt = a * 2;
    let q: BigInt = (&two_a + b) / (b * 2);
    let q: BigInt = if two_a.is_negative() { (&two_a - b) / (b * 2) } else { q };
    q.to_i64().expect("reduction quotient fits i64")
}

/// `e^x` for fixed-point `x` with `|x| < 2^20`.
fn exp_from_fixed(x: &BigInt) -> Approx {
    let k = round_div(x, ln2_fx());
    let r = x - ln2_fx() * BigInt::from(k);
    let mut sum = one_fx();
    let mut term = one_fx();
    let mut i = 1u64;
    loop {
        term = mul_fx(&term, &r) / BigInt::from(i);
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    let mid = Dy { m: sum, e: k - PREC };
    // Relative error: |k| ulps from the reduction plus one per Taylor term.
    let slack = 64 - (k.unsigned_abs() + i + 2).leading_zeros() as i64;
    let rad = Dy { m: mid.m.abs(), e: mid.e - PREC + slack + 2 };
    Approx { mid, rad }
}

pub fn exp(x: f64) -> Approx {
    exp_from_fixed(&Dy::from_f64(x).to_fixed())
}

/// Fixed-point `ln x` for `x > 0`, absolute error below `2^-(PREC-24)`.
fn ln_fixed(x: &Dy) -> BigInt {
    assert!(x.signum() > 0);
    let b = x.m.bits() as i64;
    let big_e = x.e + b;
    // x = mant · 2^big_e with mant ∈ [1/2, 1)
    let mant = Dy { m: x.m.clone(), e: -b }.to_fixed();
    let one = one_fx();
    let z = ((&mant - &one) << PREC as usize) / (&mant + &one);
    let z2 = mul_fx(&z, &z);
    let mut sum = z.clone();
    let mut power = z;
    let mut i = 1u64;
    loop {
        power = mul_fx(&power, &z2);
        if power.is_zero() {
            break;
        }
        sum += &power / BigInt::from(2 * i + 1);
        i += 1;
    }
    sum * 2 + ln2_fx() * BigInt::from(big_e)
}

pub fn ln(x: f64) -> Approx {
    assert!(x > 0.0);
    let mid = Dy::from_fixed(ln_fixed(&Dy::from_f64(x)));
    Approx { mid, rad: Dy::pow2(-PREC + 24) }
}

/// `x^y = e^(y ln x)` for `x > 0` and `|y ln x| < 2^20`.
pub fn pow(x: f64, y: f64) -> Approx {
    assert!(x > 0.0);
    let l = ln_fixed(&Dy::from_f64(x));
    let arg = Dy::from_f64(y).mul(&Dy::from_fixed(l)).to_fixed();
    let mut out = exp_from_fixed(&arg);
    // The argument carries |y| · 2^-(PREC-24) + 2^-PREC absolute error.
    let ylog = if y == 0.0 { 0 } else { y.abs().log2().ceil() as i64 + 1 };
    let extra = Dy { m: out.mid.m.abs(), e: out.mid.e - PREC + 26 + ylog.max(0) };
    out.rad = out.rad.add(&extra);
    out
}

fn cos_fixed(x_fx: &BigInt) -> Approx {
    let two_pi = pi_fx() * 2;
    let k = round_div(x_fx, &two_pi);
    let r = x_fx - &two_pi * BigInt::from(k);
    let r2 = mul_fx(&r, &r);
    let mut sum = one_fx();
    let mut term = one_fx();
    let mut i = 1u64;
    loop {
        term = -mul_fx(&term, &r2) / BigInt::from((2 * i - 1) * (2 * i));
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    let slack = 64 - (k.unsigned_abs() + 4).leading_zeros() as i64;
    Approx { mid: Dy::from_fixed(sum), rad: Dy::pow2(-PREC + 16 + slack) }
}

/// `cos x`, absolute error below `2^-(PREC-50)` for `|x| < 2^30`.
pub fn cos(x: f64) -> Approx {
    let xf = Dy::from_f64(x);
    // Inputs below the fixed-point resolution: cos x = 1 - θ with 0 <= θ <= x²/2.
    if x == 0.0 || xf.ilog2() < -PREC / 2 {
        let half_sq = xf.mul(&xf).mul(&Dy::pow2(-2));
        return Approx { mid: Dy::from_int(1).sub(&half_sq), rad: half_sq };
    }
    cos_fixed(&xf.to_fixed())
}

/// `sin x = cos(x - π/2)`, absolute error below `2^-(PREC-50)`.
pub fn sin(x: f64) -> Approx {
    let xf = Dy::from_f64(x);
    // sin x = x - θ with |θ| <= |x|³/6 below the fixed-point resolution.
    if x == 0.0 || xf.ilog2() < -PREC / 2 {
        return Approx { mid: xf.clone(), rad: xf.abs().powu(3) };
    }
    let mut out = cos_fixed(&(xf.to_fixed() - (pi_fx() >> 1usize)));
    out.rad = out.rad.add(&Dy::pow2(-PREC + 2));
    out
}

/// `acos x` against `[lo, hi]` through the decreasing inverse on `[0, π]`.
pub fn check_acos(x: f64, lo: f64, hi: f64) -> Check {
    let xd = Dy::from_f64(x);
    let pi_lo = Dy::from_fixed(pi_fx() - 1);
    let pi_hi = Dy::from_fixed(pi_fx() + 1);
    // acos x >= lo  ⇔  x <= cos lo  for lo ∈ [0, π]
    let lower = if lo <= 0.0 {
        Check::Inside
    } else if Dy::from_f64(lo).cmp(&pi_hi) == Ordering::Greater {
        Check::Outside
    } else if Dy::from_f64(lo).cmp(&pi_lo) == Ordering::Greater {
        Check::Undecided
    } else {
        let c = cos(lo);
        if xd.cmp(&c.lower()) != Ordering::Greater {
            Check::Inside
        } else if xd.cmp(&c.upper()) == Ordering::Greater {
            Check::Outside
        } else {
            Check::Undecided
        }
    };
    // acos x <= hi  ⇔  x >= cos hi  for hi ∈ [0, π]
    let upper = if Dy::from_f64(hi).cmp(&pi_hi) != Ordering::Less {
        Check::Inside
    } else if hi < 0.0 {
        Check::Outside
    } else if Dy::from_f64(hi).cmp(&pi_lo) == Ordering::Greater {
        Check::Undecided
    } else {
        let c = cos(hi);
        if xd.cmp(&c.upper()) != Ordering::Less {
            Check::Inside
        } else if xd.cmp(&c.lower()) == Ordering::Less {
            Check::Outside
        } else {
            Check::Undecided
        }
    };
    match (lower, upper) {
        (Check::Outside, _) | (_, Check::Outside) => Check::Outside,
        (Check::Inside, Check::Inside) => Check::Inside,
        _ => Check::Undecided,
    }
}

/// Partial sums of `∂_t^j f(t, β)` for `j ∈ {0, 1, 2}` through `n = terms`,
/// in fixed point with absolute error below `2^-(PREC-64)` while `|1 - t| < 2`,
/// `|β| <= 4` and `terms <= 4096`.
///
/// Runs on `b_n = 2^n a_n` and `y = (1 - t) / 2` so no term under- or overflows.
pub fn series_partial_sums(t: f64, beta: f64, terms: usize) -> [Approx; 3] {
    let one = one_fx();
    let y = Dy::from_int(1).sub(&Dy::from_f64(t)).mul(&Dy::pow2(-1)).to_fixed();
    let beta_fx = Dy::from_f64(beta).to_fixed();
    let mut b = one.clone();
    let mut sums = [BigInt::zero(), BigInt::zero(), BigInt::zero()];
    // y^(n-2), y^(n-1), y^n
    let mut yp = [BigInt::zero(), BigInt::zero(), one.clone()];
    for n in 0..=terms {
        sums[0] += mul_fx(&b, &yp[2]);
        sums[1] -= mul_fx(&b, &yp[1]) * BigInt::from(n);
        sums[2] += mul_fx(&b, &yp[0]) * BigInt::from(n * n.saturating_sub(1));
        let nn = BigInt::from(n * n + n) << PREC as usize;
        b = mul_fx(&b, &(nn - &beta_fx)) / BigInt::from((n + 1) * (n + 1));
        yp = [yp[1].clone(), yp[2].clone(), mul_fx(&yp[2], &y)];
    }
    // d/dt = -1/2 d/dy
    sums[1] >>= 1;
    sums[2] >>= 2;
    // At y = 0 only b_0, b_1, b_2 contribute and those are exact.
    let rad = if y.is_zero() { Dy::zero() } else { Dy::pow2(-PREC + 64) };
    sums.map(|s| Approx { mid: Dy::from_fixed(s), rad: rad.clone() })
}

/// `∂_t^j f(t, β)` itself, summed until the remaining terms fall below the
/// working precision; requires `|1 - t| <= 1.7` and `|β| <= 4`.
pub fn series_value(t: f64, beta: f64, j: usize) -> Approx {
    let y = (1.0 - t).abs() / 2.0;
    assert!(y <= 0.85 && beta.abs() <= 4.0);
    // |b_n| <= 8 and n² y^n < 2^-(PREC+20) past this index.
    let n = if y == 0.0 { 4 } else { ((PREC as f64 + 64.0) / -y.log2()).ceil() as usize + 128 };
    let mut v = series_partial_sums(t, beta, n)[j].clone();
    v.rad = v.rad.add(&Dy::pow2(-PREC + 66));
    v
}
