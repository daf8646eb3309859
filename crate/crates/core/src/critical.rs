//! The stability criterion `|t_c| / (1 - t_c²)  vs  |g'(t_c)| / g(t_c)` and
//! the critical cone parameter `c₀` where both sides agree.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::legendre::{required_k, SeriesCoeffs};
use crate::roots::{find_t_c, t_c_float, RootEnclosure, SEED_RADIUS};
use crate::subsolution::ConeParams;

#[derive(Clone, Copy, Debug)]
pub struct CriterionValue {
    pub c: Interval,
    pub t_c: RootEnclosure,
    pub lhs: Interval,
    pub rhs: Interval,
    /// `lhs - rhs`; negative on the stable side.
    pub diff: Interval,
}

pub fn criterion(c: Interval) -> Result<CriterionValue> {
    if c.lo() < 0.0 || c.hi() > 1.0 {
        return Err(Error::Domain(format!("c = {c:?} outside [0, 1]")));
    }
    let params = ConeParams::new(c)?;
    let t_c = find_t_c(c, SEED_RADIUS)?;
    let t = t_c.interval;
    let lhs = t.abs().div(Interval::ONE - t.sqr())?;
    let gb = params.g_beta();
    let g_coeffs = SeriesCoeffs::new(gb, required_k(t, gb, 1)?);
    let g = g_coeffs.eval(t, 0)?.value;
    let dg = g_coeffs.eval(t, 1)?.value;
    if !g.is_positive() {
        return Err(Error::CertificationFailure(format!("g({t:?}) enclosure {g:?} not positive")));
    }
    let rhs = dg.abs().div(g)?;
    Ok(CriterionValue { c, t_c, lhs, rhs, diff: lhs - rhs })
}

/// Certified sign of the criterion at a point `c`: `Some(-1)`, `Some(1)` or
/// `None` when the enclosure straddles zero.
fn sign_at(c: f64) -> Result<Option<i8>> {
    let d = criterion(Interval::point(c))?.diff;
    Ok(if d.is_negative() {
        Some(-1)
    } else if d.is_positive() {
        Some(1)
    } else {
        None
    })
}

/// The dyadic rational with the fewest bits strictly inside `(a, b)`.
///
/// Bisecting at these points makes enclosures from different starting
/// ranges line up on the same dyadic grid, so they nest.
fn coarsest_dyadic(a: f64, b: f64) -> f64 {
    for p in 0..1000 {
        let scale = 2f64.powi(p);
        let m = ((a * scale).floor() + 1.0) / scale;
        if m > a && m < b {
            return m;
        }
    }
    0.5 * a + 0.5 * b
}

/// Enclose `c₀` to width `tol` by certified bisection on the criterion sign.
pub fn find_c0(search: Interval, tol: f64) -> Result<Interval> {
    if search.lo() < 0.0 || search.hi() > 1.0 {
        return Err(Error::Domain(format!("search range {search:?} outside [0, 1]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance {tol} must be positive")));
    }
    let (mut a, mut b) = (search.lo(), search.hi());
    let sa = sign_at(a)?;
    let sb = sign_at(b)?;
    let (sa, _sb) = match (sa, sb) {
        (Some(x), Some(y)) if x != y => (x, y),
        _ => {
            return Err(Error::CertificationFailure(format!(
                "no certified sign change of the criterion on [{a}, {b}]"
            )))
        }
    };
    while b - a > tol {
        let m = coarsest_dyadic(a, b);
        match sign_at(m)? {
            Some(s) if s == sa => a = m,
            Some(_) => b = m,
            None => {
                return Err(Error::CertificationFailure(format!(
                    "criterion sign undetermined at c = {m} with enclosure width {}",
                    b - a
                )))
            }
        }
    }
    Ok(Interval::new(a, b))
}

/// Midpoints of the criterion on an even grid of `n + 1` samples; used to
/// report (not prove) that the sign change is unique.
pub fn monotonicity_probe(search: Interval, n: usize) -> Result<Vec<(f64, f64)>> {
    search
        .split(n)
        .iter()
        .map(|s| s.lo())
        .chain(std::iter::once(search.hi()))
        .map(|c| Ok((c, criterion(Interval::point(c))?.diff.mid())))
        .collect()
}

pub fn is_strictly_increasing(samples: &[(f64, f64)]) -> bool {
    samples.windows(2).all(|w| w[0].1 < w[1].1)
}

/// Non-rigorous reproduction of the interpolate-then-solve route: Chebyshev
/// interpolation of `c ↦ t_c` on `search`, then bisection on the criterion
/// with `t_c` taken from the interpolant.
pub fn find_c0_float(search: Interval, nodes: usize) -> Result<f64> {
    let (a, b) = (search.lo(), search.hi());
    let n = nodes.max(2);
    let xs: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let vals: Vec<f64> = xs
        .iter()
        .map(|x| {
            let c = 0.5 * (a + b) + 0.5 * (b - a) * x;
            t_c_float(2.0 / (1.0 + c * c))
        })
        .collect::<Result<_>>()?;
    // barycentric weights for Chebyshev-Lobatto points
    let weight = |j: usize| {
        let w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            0.5 * w
        } else {
            w
        }
    };
    let interp = |c: f64| {
        let x = (2.0 * c - a - b) / (b - a);
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&xj, &fj)) in xs.iter().zip(&vals).enumerate() {
            if x == xj {
                return fj;
            }
            let q = weight(j) / (x - xj);
            num += q * fj;
            den += q;
        }
        num / den
    };
    let diff = |c: f64| -> Result<f64> {
        let t = interp(c);
        let beta = Interval::point(2.0 / (1.0 + c * c));
        let coeffs = SeriesCoeffs::new(crate::legendre::g_beta(beta), 120);
        let g = coeffs.eval(Interval::point(t), 0)?.value.mid();
        let dg = coeffs.eval(Interval::point(t), 1)?.value.mid();
        Ok(t.abs() / (1.0 - t * t) - dg.abs() / g)
    };
    let (mut lo, mut hi) = (a, b);
    let s_lo = diff(lo)?.signum();
    if s_lo == diff(hi)?.signum() {
        return Err(Error::Numerical(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if diff(m)?.signum() == s_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}
