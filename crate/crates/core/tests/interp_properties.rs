//! Chebyshev models: error-bound validity against the series and the oracle.

mod common;

use common::oracle::{self, Check};
use conecert_core::cheb::{self, eval_model, fit, fit_series, interpolation_error, ChebModel, Rect, Which};
use conecert_core::legendre::{eval_auto, g_beta};
use conecert_core::subsolution::SubsolutionConfig;
use conecert_core::{Error, Interval};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f_model() -> ChebModel {
    fit_series(Rect::new((-0.7, 1.0), (1.47, 2.0)), (40, 40), (2.0, 30.0), Which::F, 0).unwrap()
}

#[test]
fn random_probes_contain_reference_values() {
    let model = f_model();
    assert!(model.error_bound.is_finite() && model.error_bound < 1e-6, "E = {}", model.error_bound);
    let mut r = ChaCha8Rng::seed_from_u64(40);
    let mut sup = 0.0f64;
    for _ in 0..10_000 {
        let t = r.gen_range(-0.7..=1.0);
        let beta = r.gen_range(1.47..=2.0);
        let got = eval_model(&model, Interval::point(t), Interval::point(beta)).unwrap();
        let want = oracle::series_value(t, beta, 0);
        assert_eq!(want.check(got.lo(), got.hi()), Check::Inside, "({t}, {beta}): {got:?} vs {:e}", want.to_f64());
        sup = sup.max((got.mid() - want.to_f64()).abs());
    }
    assert!(sup <= model.error_bound + 1e-12, "sup error {sup:e} vs E = {:e}", model.error_bound);
}

/// Both enclosures are rigorous, so they must overlap everywhere; the model's
/// midpoint may stray from the truth by at most `E` plus coefficient widths.
fn check_against_series(model: &ChebModel, which: Which, j: usize) {
    let (t_dom, b_dom) = (model.domain.t, model.domain.beta);
    let n = 200;
    let mut worst = 0.0f64;
    for i in 0..n {
        let t = t_dom.lo() + (i as f64 + 0.5) / n as f64 * t_dom.width();
        for l in 0..n {
            let beta = b_dom.lo() + (l as f64 + 0.5) / n as f64 * b_dom.width();
            let got = eval_model(model, Interval::point(t), Interval::point(beta)).unwrap();
            let b = match which {
                Which::F => Interval::point(beta),
                Which::G => g_beta(Interval::point(beta)),
            };
            let direct = eval_auto(Interval::point(t), b, j).unwrap().value;
            assert!(got.intersect(&direct).is_ok(), "j = {j} at ({t}, {beta}): model {got:?} vs series {direct:?}");
            worst = worst.max((got.mid() - direct.mid()).abs() - direct.rad());
        }
    }
    assert!(worst <= model.error_bound + 1e-9, "j = {j}: empirical error {worst:e} vs E = {:e}", model.error_bound);
}

#[test]
fn pipeline_models_respect_their_error_bounds() {
    for cfg in SubsolutionConfig::default().model_configs() {
        let model = fit_series(cfg.domain, cfg.degrees, cfg.rho, cfg.function, cfg.derivative).unwrap();
        check_against_series(&model, cfg.function, cfg.derivative);
    }
}

#[test]
fn linear_function_is_reproduced() {
    let dom = Rect::new((-0.5, 1.0), (0.0, 2.0));
    let model = fit(|t, _| Ok(t), dom, (4, 2), (2.0, 2.0), 4.0).unwrap();
    for beta in [0.0, 0.7, 2.0] {
        assert!(eval_model(&model, Interval::point(0.3), Interval::point(beta)).unwrap().contains(0.3));
    }
}

#[test]
fn ten_more_nodes_shrink_the_bound_geometrically() {
    for rho in [1.5, 2.9, 30.0] {
        for n in [8, 20, 40] {
            let ratio = interpolation_error(100.0, rho, n + 10) / interpolation_error(100.0, rho, n);
            assert!(ratio <= rho.powi(-10) * (1.0 + 1e-12), "rho = {rho}, n = {n}: {ratio}");
        }
    }
}

#[test]
fn nodes_reproduce_evaluator_values() {
    let model = f_model();
    let (nt, nb) = model.degrees;
    for i in (0..=nt).step_by(7) {
        for l in (0..=nb).step_by(9) {
            let t = model.t_map.from_unit(Interval::point(-(std::f64::consts::PI * i as f64 / nt as f64).cos()));
            let b = model.beta_map.from_unit(Interval::point(-(std::f64::consts::PI * l as f64 / nb as f64).cos()));
            let (t, b) = (Interval::point(t.mid().clamp(-0.7, 1.0)), Interval::point(b.mid().clamp(1.47, 2.0)));
            let direct = eval_auto(t, b, 0).unwrap().value;
            let got = eval_model(&model, t, b).unwrap();
            assert!(got.intersect(&direct).is_ok(), "node ({t:?}, {b:?})");
        }
    }
}

#[test]
fn model_basics() {
    let model = f_model();
    assert!(eval_model(&model, Interval::ONE, Interval::point(2.0)).unwrap().contains(1.0));
    let whole = eval_model(&model, model.domain.t, model.domain.beta).unwrap();
    assert!(whole.is_finite() && whole.width() <= 2.0 * model.modulus_bound * 1e3, "{whole:?}");
    assert!(matches!(eval_model(&model, Interval::point(-0.8), Interval::point(1.8)), Err(Error::Domain(_))));
}

#[test]
fn published_box_gives_finite_ellipse_bounds() {
    for which in [Which::F, Which::G] {
        for j in 0..3 {
            let b = cheb::ellipse_modulus_bound(Rect::published(), cheb::PUBLISHED_RHO, which, j).unwrap();
            assert!(b.modulus_bound.is_finite() && b.modulus_bound > 0.0);
        }
    }
}
