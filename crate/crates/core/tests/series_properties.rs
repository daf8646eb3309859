//! Series enclosures against multiprecision partial sums and closed forms.

mod common;

use common::oracle::{self, Check};
use conecert_core::legendre::{self, coeffs, eval, eval_g};
use conecert_core::Interval;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A 200-term partial sum differs from the `k`-term one by at most the sum of
/// the absolute values of terms `k+1..200`, which the tail bound dominates.
#[test]
fn tail_bound_covers_long_partial_sums() {
    let mut r = ChaCha8Rng::seed_from_u64(0x7a11);
    let mut undecided = 0;
    for case in 0..10_000 {
        let t: f64 = if case % 10 == 0 { 1.0 } else { r.gen_range(-0.9..=1.0) };
        let beta: f64 = r.gen_range(-2.0..=2.0);
        let reference = oracle::series_partial_sums(t, beta, 200);
        for k in [5usize, 10, 20] {
            for (j, want) in reference.iter().enumerate() {
                let got = eval(Interval::point(t), Interval::point(beta), j, k).unwrap().value;
                match want.check(got.lo(), got.hi()) {
                    Check::Inside => {}
                    Check::Undecided => undecided += 1,
                    Check::Outside => panic!("t = {t:e}, beta = {beta:e}, k = {k}, j = {j}: {:e} not in {got:?}", want.to_f64()),
                }
            }
        }
    }
    assert_eq!(undecided, 0);
}

#[test]
fn default_truncation_contains_full_sum() {
    let mut r = ChaCha8Rng::seed_from_u64(0x5e7);
    for _ in 0..2_000 {
        let t: f64 = r.gen_range(-0.5..=1.0);
        let beta: f64 = r.gen_range(-2.0..=2.0);
        for j in 0..3 {
            let got = legendre::eval_auto(Interval::point(t), Interval::point(beta), j).unwrap().value;
            let want = oracle::series_value(t, beta, j);
            assert_eq!(want.check(got.lo(), got.hi()), Check::Inside, "t = {t}, beta = {beta}, j = {j}: {got:?}");
        }
    }
}

fn legendre_poly(n: usize, t: f64) -> f64 {
    match n {
        1 => t,
        2 => (3.0 * t * t - 1.0) / 2.0,
        3 => (5.0 * t * t * t - 3.0 * t) / 2.0,
        _ => unreachable!(),
    }
}

#[test]
fn integer_degree_parameters_terminate_to_polynomials() {
    for n in 1..=3usize {
        let beta = Interval::point((n * (n + 1)) as f64);
        assert!(coeffs(beta, n + 3).a(n + 1).contains(0.0), "a_{} for beta = {beta:?}", n + 1);
        for i in 0..20 {
            let t = -0.9 + 1.9 * i as f64 / 19.0;
            let v = eval(Interval::point(t), beta, 0, 60).unwrap().value;
            assert!(v.width() <= 1e-12, "n = {n}, t = {t}: width {}", v.width());
            let p = legendre_poly(n, t);
            // The closed form itself is evaluated in floating point.
            assert!(v.lo() - 1e-15 <= p && p <= v.hi() + 1e-15, "n = {n}, t = {t}: {p} vs {v:?}");
        }
    }
}

#[test]
fn companion_is_at_least_one() {
    assert!(legendre::check_g_geq_one(Interval::new(1.5, 2.0)).unwrap());
    // Pointwise cross-check on [-0.9, 1] × [3/2, 2].
    for i in 0..=40 {
        let t = -0.9 + 1.9 * i as f64 / 40.0;
        for b in 0..=8 {
            let beta = 1.5 + 0.5 * b as f64 / 8.0;
            let g = eval_g(Interval::point(t), Interval::point(beta), 0, 80).unwrap().value;
            assert!(g.lo() >= 1.0 - 1e-12, "g({t}, {beta}) = {g:?}");
        }
    }
}

#[test]
fn finite_differences_match_derivative_enclosures() {
    let h = 1e-5;
    let beta = Interval::point(1.8);
    for i in 0..25 {
        let t = -0.85 + 1.8 * i as f64 / 24.0;
        let f = |s: f64| eval(Interval::point(s), beta, 0, 200).unwrap().value;
        let (fp, fm) = (f(t + h), f(t - h));
        let diff = (fp - fm).div_f64(2.0 * h);
        let d = eval(Interval::point(t), beta, 1, 200).unwrap().value;
        // |f'''| stays below 10 on this range, so O(h²) is at most 1e-9.
        let slack = diff.width() + d.width() + 1e-9;
        assert!((diff.mid() - d.mid()).abs() <= slack, "t = {t}: {diff:?} vs {d:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn more_terms_never_widen(t in -0.9f64..1.0, beta in -2.0f64..2.0, j in 0usize..3, k in 5usize..60) {
        let narrow = eval(Interval::point(t), Interval::point(beta), j, k + 20).unwrap().value;
        let wide = eval(Interval::point(t), Interval::point(beta), j, k).unwrap().value;
        let ulp = 2.0 * f64::EPSILON * narrow.mag().max(f64::MIN_POSITIVE);
        prop_assert!(narrow.width() <= wide.width() + 2.0 * ulp);
    }

    #[test]
    fn recursion_is_contained(beta in -30.0f64..30.0, n in 0usize..40) {
        let c = coeffs(Interval::point(beta), n + 1);
        let step = (c.a(n) * (Interval::point((n * n + n) as f64) - Interval::point(beta)))
            .div_f64(2.0 * ((n + 1) * (n + 1)) as f64);
        prop_assert!(step.intersect(&c.a(n + 1)).is_ok());
    }

    #[test]
    fn box_evaluation_contains_point_evaluation(
        t0 in -0.9f64..0.99, dt in 0.0f64..0.01,
        b0 in -2.0f64..1.9, db in 0.0f64..0.1, u in 0.0f64..1.0, v in 0.0f64..1.0, j in 0usize..3,
    ) {
        let tb = Interval::new(t0, t0 + dt);
        let bb = Interval::new(b0, b0 + db);
        let outer = eval(tb, bb, j, 60).unwrap().value;
        let (t, b) = (t0 + u * dt, b0 + v * db);
        let inner = eval(Interval::point(t), Interval::point(b), j, 60).unwrap().value;
        prop_assert!(inner.intersect(&outer).is_ok(), "{inner:?} vs {outer:?}");
    }

    #[test]
    fn geometric_coefficient_decay(beta in -40.0f64..40.0, extra in 1usize..40) {
        let k = beta.abs().ceil() as usize;
        let c = coeffs(Interval::point(beta), k + extra);
        let bound = c.scaled()[k].mag();
        for n in k + 1..=k + extra {
            prop_assert!(c.scaled()[n].mig() <= bound * (1.0 + 1e-9));
        }
    }
}

#[test]
fn evaluation_below_singular_end_is_refused() {
    assert!(eval(Interval::new(-1.0, -0.5), Interval::point(1.8), 0, 60).is_err());
    assert!(eval(Interval::point(0.0), Interval::point(30.0), 0, 10).is_err());
}
