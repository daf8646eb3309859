//! Fixed workloads shared by the kernel benchmarks.

use conecert_core::cheb::{fit_series, ChebModel, Rect, Which};
use conecert_core::subsolution::ConeParams;
use conecert_core::supersolution::{default_rows, SupersolutionRow};
use conecert_core::Interval;

/// `n` evenly spaced point boxes on `[lo, hi]`.
pub fn point_grid(lo: f64, hi: f64, n: usize) -> Vec<Interval> {
    (0..n).map(|i| Interval::point(lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64)).collect()
}

/// `n` cells of width `(hi - lo) / n` tiling `[lo, hi]`.
pub fn cell_grid(lo: f64, hi: f64, n: usize) -> Vec<Interval> {
    Interval::new(lo, hi).split(n)
}

pub fn cone(c: f64) -> ConeParams {
    ConeParams::new(Interval::point(c)).expect("valid cone parameter")
}

pub fn row(id: u32) -> SupersolutionRow {
    default_rows().row(id).expect("row exists").clone()
}

/// A moderate `f` model on the subsolution domain.
pub fn f_model(degrees: (usize, usize)) -> ChebModel {
    fit_series(Rect::new((-0.25, 1.0), (-0.26, 2.0)), degrees, (2.9, 30.0), Which::F, 0).expect("fit succeeds")
}
