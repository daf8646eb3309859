//! Root isolation: plain Newton for approximations, interval Newton for
//! certified enclosures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::legendre::{required_k, SeriesCoeffs};
use crate::subsolution::ConeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    /// The Newton operator mapped the box into its interior: exactly one root.
    VerifiedUnique,
    /// Certified sign change at the endpoints: at least one root.
    VerifiedContains,
    /// An iterate had empty intersection with the box: no root.
    NoRoot,
    Inconclusive,
}

#[derive(Clone, Copy, Debug)]
pub struct RootEnclosure {
    pub interval: Interval,
    pub status: RootStatus,
    pub iterations: usize,
}

impl RootEnclosure {
    pub fn is_verified(&self) -> bool {
        matches!(self.status, RootStatus::VerifiedUnique | RootStatus::VerifiedContains)
    }
}

/// Plain Newton iteration, no rigor claimed.
pub fn newton_float<F, D>(fun: F, dfun: D, x0: f64, iters: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = x0;
    for _ in 0..iters {
        let d = dfun(x);
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Numerical(format!("derivative {d} at x = {x}")));
        }
        let step = fun(x) / d;
        if !step.is_finite() {
            return Err(Error::Numerical(format!("non-finite Newton step at x = {x}")));
        }
        x -= step;
    }
    Ok(x)
}

/// Interval Newton: `N(X) = m - F(m) / F'(X)`, intersected with `X`.
///
/// `fun` is called on point boxes (or on a point in `t` with any parameter
/// box the closure captures); `dfun` on the whole current box.
pub fn interval_newton<F, D>(fun: F, dfun: D, x0: Interval, max_iters: usize) -> RootEnclosure
where
    F: Fn(Interval) -> Result<Interval>,
    D: Fn(Interval) -> Result<Interval>,
{
    let mut x = x0;
    let mut unique = false;
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let m = Interval::point(x.mid());
        let (fm, d) = match (fun(m), dfun(x)) {
            (Ok(fm), Ok(d)) => (fm, d),
            _ => break,
        };
        let Ok(q) = fm.div(d) else { break };
        let n = m - q;
        if n.interior_subset(&x) {
            unique = true;
        }
        match n.intersect(&x) {
            Err(_) => {
                return RootEnclosure { interval: x, status: RootStatus::NoRoot, iterations };
            }
            Ok(next) => {
                let stalled = next == x;
                x = next;
                if stalled {
                    break;
                }
            }
        }
    }
    let status = if unique {
        RootStatus::VerifiedUnique
    } else if sign_change(&fun, x) {
        RootStatus::VerifiedContains
    } else {
        RootStatus::Inconclusive
    };
    RootEnclosure { interval: x, status, iterations }
}

fn sign_change<F>(fun: &F, x: Interval) -> bool
where
    F: Fn(Interval) -> Result<Interval>,
{
    match (fun(Interval::point(x.lo())), fun(Interval::point(x.hi()))) {
        (Ok(a), Ok(b)) => (a.is_negative() && b.is_positive()) || (a.is_positive() && b.is_negative()),
        _ => false,
    }
}

pub const SEED_RADIUS: f64 = 1e-3;
const NEWTON_ITERS: usize = 40;

/// Float root of `f(·, β)` near the negative zero, for `β ∈ (0, 2]`.
pub fn t_c_float(beta: f64) -> Result<f64> {
    let k = 120;
    let b = Interval::point(beta);
    let coeffs = SeriesCoeffs::new(b, k);
    let f = |t: f64| coeffs.eval(Interval::point(t), 0).map(|e| e.value.mid()).unwrap_or(f64::NAN);
    let df = |t: f64| coeffs.eval(Interval::point(t), 1).map(|e| e.value.mid()).unwrap_or(f64::NAN);
    let x = newton_float(f, df, -0.1, NEWTON_ITERS)?;
    if !(x > -1.0 && x < 1.0) || f(x).abs() > 1e-10 {
        return Err(Error::Numerical(format!("Newton for t_c at beta = {beta} ended at {x}")));
    }
    Ok(x)
}

/// Verified enclosure of the zero `t_c` of `f(·, β_c)`, valid for every `c`
/// in the box simultaneously.
pub fn find_t_c(c: Interval, seed_box_radius: f64) -> Result<RootEnclosure> {
    let params = ConeParams::new(c)?;
    find_root_for_beta(params.beta, seed_box_radius)
}

/// As [`find_t_c`], starting from a `β` box directly.
pub fn find_root_for_beta(beta: Interval, seed_box_radius: f64) -> Result<RootEnclosure> {
    let lo_root = t_c_float(beta.lo())?;
    let hi_root = t_c_float(beta.hi())?;
    let seed = Interval::new(lo_root.min(hi_root), lo_root.max(hi_root));
    let seed = Interval::new(seed.lo() - seed_box_radius, seed.hi() + seed_box_radius);
    let enclosure = newton_over_beta(beta, seed, 0)?;
    if !(enclosure.interval.lo() > -1.0 && enclosure.interval.hi() < 1.0) {
        return Err(Error::CertificationFailure(format!("t_c enclosure {:?} leaves (-1, 1)", enclosure.interval)));
    }
    Ok(enclosure)
}

/// Parametric interval Newton over a `β` box. Wide boxes overestimate
/// `f(m, B)` through coefficient dependency, so failing boxes are bisected;
/// every piece starts from the same seed, hence the hull of the pieces still
/// holds exactly one root of `f(·, β)` for each `β`.
fn newton_over_beta(beta: Interval, seed: Interval, depth: usize) -> Result<RootEnclosure> {
    const MAX_DEPTH: usize = 12;
    let k = required_k(seed, beta, 1)?;
    let coeffs = SeriesCoeffs::new(beta, k);
    let enclosure = interval_newton(
        |t| coeffs.eval(t, 0).map(|e| e.value),
        |t| coeffs.eval(t, 1).map(|e| e.value),
        seed,
        30,
    );
    if enclosure.status == RootStatus::VerifiedUnique || depth >= MAX_DEPTH || beta.is_point() {
        if enclosure.status != RootStatus::VerifiedUnique {
            return Err(Error::CertificationFailure(format!(
                "t_c not isolated for beta {beta:?}: {:?} after {} iterations",
                enclosure.status, enclosure.iterations
            )));
        }
        return Ok(enclosure);
    }
    let (lo, hi) = beta.bisect();
    let a = newton_over_beta(lo, seed, depth + 1)?;
    let b = newton_over_beta(hi, seed, depth + 1)?;
    Ok(RootEnclosure {
        interval: a.interval.hull(&b.interval),
        status: RootStatus::VerifiedUnique,
        iterations: a.iterations.max(b.iterations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_minus_two(x: Interval) -> Result<Interval> {
        Ok(x.sqr() - Interval::point(2.0))
    }

    fn twice(x: Interval) -> Result<Interval> {
        Ok(x * 2.0)
    }

    #[test]
    fn float_newton_sqrt_two() {
        let x = newton_float(|x| x * x - 2.0, |x| 2.0 * x, 1.5, 10).unwrap();
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!(matches!(newton_float(|x| x * x - 2.0, |_| 0.0, 1.5, 10), Err(Error::Numerical(_))));
    }

    #[test]
    fn float_newton_linear_legendre() {
        let c = SeriesCoeffs::new(Interval::point(2.0), 30);
        let x = newton_float(
            |t| c.eval(Interval::point(t), 0).unwrap().value.mid(),
            |t| c.eval(Interval::point(t), 1).unwrap().value.mid(),
            0.5,
            10,
        )
        .unwrap();
        assert!(x.abs() < 1e-12);
    }

    #[test]
    fn interval_newton_sqrt_two() {
        let r = interval_newton(sq_minus_two, twice, Interval::new(1.0, 2.0), 20);
        assert_eq!(r.status, RootStatus::VerifiedUnique);
        assert!(r.interval.contains(std::f64::consts::SQRT_2));
        assert!(r.interval.width() <= 1e-12);
    }

    #[test]
    fn interval_newton_no_root() {
        let c = SeriesCoeffs::new(Interval::point(2.0), 30);
        let f = |t: Interval| c.eval(t, 0).map(|e| e.value);
        let df = |t: Interval| c.eval(t, 1).map(|e| e.value);
        let r = interval_newton(f, df, Interval::new(-0.5, 0.5), 10);
        assert_eq!(r.status, RootStatus::VerifiedUnique);
        assert!(r.interval.contains(0.0));
        let r = interval_newton(f, df, Interval::new(0.5, 0.9), 10);
        assert_eq!(r.status, RootStatus::NoRoot);
    }

    #[test]
    fn zero_derivative_is_inconclusive() {
        let r = interval_newton(sq_minus_two, twice, Interval::new(-2.0, 2.0), 10);
        assert_eq!(r.status, RootStatus::Inconclusive);
    }

    #[test]
    fn more_iterations_never_widen() {
        let a = interval_newton(sq_minus_two, twice, Interval::new(1.0, 2.0), 2);
        let b = interval_newton(sq_minus_two, twice, Interval::new(1.0, 2.0), 4);
        assert!(b.interval.subset(&a.interval));
    }

    #[test]
    fn t_c_at_zero_cone() {
        let r = find_t_c(Interval::point(0.0), SEED_RADIUS).unwrap();
        assert!(r.interval.contains(0.0));
    }

    #[test]
    fn t_c_over_subinterval_is_negative() {
        let r = find_t_c(Interval::new(0.41, 0.42), SEED_RADIUS).unwrap();
        assert!(r.interval.hi() < 0.0);
        assert!(r.interval.lo() > -0.2);
    }
}
