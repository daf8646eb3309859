//! Tensor Chebyshev interpolation on `(t, β)` rectangles with analytic
//! error bounds.
//!
//! For `F` analytic and bounded by `M` on the Bernstein ellipse `E_ρ`, the
//! degree-`n` interpolant through the Chebyshev–Lobatto points satisfies
//! `|F - p_n| <= 4 M ρ^-n / (ρ - 1)` on `[-1, 1]`. For the tensor
//! interpolant `I_t I_β F`,
//!
//! ```text
//! |F - I_t I_β F| <= |F - I_t F| + |I_t (F - I_β F)| <= E_t + Λ_{n_t} E_β
//! ```
//!
//! with the Lebesgue constant `Λ_n <= (2/π) ln(n + 1) + 1`.
//!
//! Interval evaluation uses `T_k(X) = cos(k acos X)`: each basis function is
//! enclosed over the box directly, which avoids the exponential width growth
//! of interval Clenshaw recurrences.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::interval::{add_up, cos_pi_frac, mul_up, Interval};
use crate::legendre::{geometric_derivative_tail, g_beta, required_k, SeriesCoeffs};

/// Affine map `x = (s - center) / half` whose preimage of `[-1, 1]`
/// contains the requested range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub center: f64,
    pub half: f64,
}

impl AffineMap {
    pub fn covering(range: Interval) -> Self {
        let center = range.mid();
        let half = add_up(range.hi(), -center).max(add_up(center, -range.lo()));
        AffineMap { center, half: if half > 0.0 { half } else { f64::MIN_POSITIVE } }
    }

    /// Enclosure of `x(s)` for `s` in the box, clipped to `[-1, 1]`.
    pub fn to_unit(&self, s: Interval) -> Result<Interval> {
        let x = (s - self.center).div_f64(self.half);
        x.intersect(&Interval::new(-1.0, 1.0))
    }

    pub fn from_unit(&self, x: Interval) -> Interval {
        x * self.half + self.center
    }
}

/// `[t_a, t_b] × [β_a, β_b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub t: Interval,
    pub beta: Interval,
}

impl Rect {
    pub fn new(t: (f64, f64), beta: (f64, f64)) -> Self {
        Rect { t: Interval::new(t.0, t.1), beta: Interval::new(beta.0, beta.1) }
    }

    pub fn contains(&self, t: Interval, beta: Interval) -> bool {
        t.subset(&self.t) && beta.subset(&self.beta)
    }

    /// The published interpolation rectangle `[-0.204, 1] × [-0.161, 2]`.
    pub fn published() -> Self {
        Rect::new((-0.204, 1.0), (-0.161, 2.0))
    }
}

/// Published ellipse parameters `(ρ_t, ρ_β)`.
pub const PUBLISHED_RHO: (f64, f64) = (2.9, 30.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    F,
    G,
}

/// Modulus bound on the ellipse product, with everything needed to audit it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EllipseBound {
    pub modulus_bound: f64,
    pub k: usize,
    /// Largest `|1 - t|` on the `t`-ellipse.
    pub r: f64,
    /// Center and radius of the disk containing the (possibly rescaled) `β`-ellipse.
    pub beta_center: f64,
    pub beta_radius: f64,
}

/// Sum of the semi-axes' ratio: `(ρ + 1/ρ) / 2`, rounded up.
fn semi_major(rho: f64) -> f64 {
    (Interval::point(rho) + Interval::ONE.div_f64(rho)).div_f64(2.0).hi()
}

/// Bound `|∂_t^j f|` (or `g`) over the product of the Bernstein ellipses of
/// `domain`, with complex `t` and `β`.
///
/// `|a_n(β)|` is bounded on the disk `|β - m| <= R` by the recursion
/// `A_{n+1} = A_n (|n² + n - m| + R) / (2 (n+1)²)`; the tail beyond `k`
/// follows the same geometric argument as the real series with `|1 - t| <= r`.
pub fn ellipse_modulus_bound(domain: Rect, rho: (f64, f64), which: Which, j: usize) -> Result<EllipseBound> {
    if !(rho.0 > 1.0 && rho.1 > 1.0) {
        return Err(Error::Config(format!("ellipse parameters {rho:?} must exceed 1")));
    }
    let tm = AffineMap::covering(domain.t);
    let bm = AffineMap::covering(domain.beta);
    let r = add_up((1.0 - tm.center).abs(), mul_up(tm.half, semi_major(rho.0)));
    if !(r < 2.0) {
        return Err(Error::BoundUnavailable(format!("t-ellipse reaches |1 - t| = {r} >= 2")));
    }
    let beta_reach = mul_up(bm.half, semi_major(rho.1));
    // k from the β-ellipse: ceil((a+b)/2 + (b-a)/2 (ρ + 1/ρ)) - 1
    let paper_k = (bm.center + bm.half * (rho.1 + 1.0 / rho.1)).ceil() as i64 - 1;
    let (center, radius) = match which {
        Which::F => (bm.center, beta_reach),
        Which::G => (-bm.center / 8.0, beta_reach / 8.0 * (1.0 + f64::EPSILON)),
    };
    let needed = (add_up(center.abs(), radius)).ceil() as i64 - 1;
    let k = paper_k.max(needed).max(j as i64).max(1) as usize;

    // Scaled bounds B_n >= 2^n sup |a_n|.
    let mut b = Vec::with_capacity(k + 1);
    b.push(1.0f64);
    for n in 0..k {
        let nf = n as f64;
        let num = add_up((nf * nf + nf - center).abs() * (1.0 + f64::EPSILON), radius);
        let next = crate::interval::div_up(mul_up(b[n], num), (nf + 1.0) * (nf + 1.0));
        b.push(next);
    }
    let y = r / 2.0;
    let mut sum = 0.0f64;
    for n in (j..=k).rev() {
        let fall = (0..j).fold(1.0, |acc, i| acc * (n - i) as f64);
        sum = add_up(mul_up(sum, y), mul_up(b[n], fall));
    }
    let tail = mul_up(b[k], geometric_derivative_tail(k, y, j));
    let scale = 0.5f64.powi(j as i32);
    let m = mul_up(add_up(sum, tail), scale);
    if !m.is_finite() {
        return Err(Error::BoundUnavailable("ellipse modulus bound overflowed".into()));
    }
    Ok(EllipseBound { modulus_bound: m, k, r, beta_center: center, beta_radius: radius })
}

/// `4 M ρ^-n / (ρ - 1)`, rounded up.
pub fn interpolation_error(m: f64, rho: f64, n: usize) -> f64 {
    let rho_i = Interval::point(rho);
    let pow = rho_i.powi(n as i32).expect("positive base");
    let v = (Interval::point(4.0 * m)).div(pow * (rho_i - Interval::ONE));
    v.map(|v| v.hi()).unwrap_or(f64::INFINITY)
}

/// Upper bound on the Lebesgue constant of `n + 1` Chebyshev–Lobatto points.
pub fn lebesgue_bound(n: usize) -> f64 {
    let l = Interval::point((n + 1) as f64).ln().expect("positive");
    (l * 2.0).div(Interval::PI).map(|v| v + Interval::ONE).map(|v| v.hi()).unwrap_or(f64::INFINITY)
}

/// Interval enclosures of `T_0(X), ..., T_n(X)` for `X ⊆ [-1, 1]`.
pub fn chebyshev_basis(x: Interval, n: usize) -> Result<Vec<Interval>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(Interval::ONE);
    if n == 0 {
        return Ok(out);
    }
    if x.is_point() && (x.lo() == 1.0 || x.lo() == -1.0) {
        let s = x.lo();
        for k in 1..=n {
            out.push(Interval::point(if k % 2 == 1 { s } else { 1.0 }));
        }
        return Ok(out);
    }
    out.push(x);
    let theta = x.acos()?;
    for k in 2..=n {
        out.push((theta * k as f64).cos());
    }
    Ok(out)
}

fn dot(coeffs: &[Interval], basis: &[Interval]) -> Interval {
    coeffs.iter().zip(basis).map(|(c, b)| *c * *b).sum()
}

/// Chebyshev–Lobatto point `cos(jπ/n)` enclosure.
fn lobatto(j: usize, n: usize) -> Interval {
    if n == 0 {
        return Interval::ZERO;
    }
    cos_pi_frac(j as i64, n as i64)
}

/// Interpolation coefficients from node values: `p = Σ c_k T_k`.
fn coefficients_1d(values: &[Interval], cosines: &[Vec<Interval>]) -> Vec<Interval> {
    let n = values.len() - 1;
    if n == 0 {
        return vec![values[0]];
    }
    (0..=n)
        .map(|k| {
            let mut s = Interval::ZERO;
            for (j, v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                s = s + *v * cosines[k][j] * w;
            }
            let scale = if k == 0 || k == n { 1.0 } else { 2.0 };
            s * (scale / n as f64)
        })
        .collect()
}

/// `cos(k j π / n)` for all `k, j <= n`.
fn cosine_table(n: usize) -> Vec<Vec<Interval>> {
    (0..=n)
        .map(|k| (0..=n).map(|j| if n == 0 { Interval::ONE } else { cos_pi_frac((k * j) as i64, n as i64) }).collect())
        .collect()
}

/// Degree-`(n_t, n_β)` interpolant with a proven uniform error bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChebModel {
    pub domain: Rect,
    pub t_map: AffineMap,
    pub beta_map: AffineMap,
    pub degrees: (usize, usize),
    pub rho: (f64, f64),
    pub modulus_bound: f64,
    pub error_bound: f64,
    /// Row-major `(n_t + 1) × (n_β + 1)`.
    pub coeffs: Vec<Interval>,
}

/// Interpolate a rigorous evaluator on `domain`. `m` must bound the target
/// on the ellipse product of the covering rectangle.
pub fn fit<F>(evaluator: F, domain: Rect, degrees: (usize, usize), rho: (f64, f64), m: f64) -> Result<ChebModel>
where
    F: Fn(Interval, Interval) -> Result<Interval> + Sync,
{
    let (nt, nb) = degrees;
    let t_map = AffineMap::covering(domain.t);
    let beta_map = AffineMap::covering(domain.beta);
    let t_nodes: Vec<Interval> = (0..=nt).map(|i| t_map.from_unit(lobatto(i, nt))).collect();
    let b_nodes: Vec<Interval> = (0..=nb).map(|j| beta_map.from_unit(lobatto(j, nb))).collect();
    let values: Vec<Vec<Interval>> = t_nodes
        .par_iter()
        .map(|t| b_nodes.iter().map(|b| evaluator(*t, *b)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let cos_b = cosine_table(nb);
    let cos_t = cosine_table(nt);
    // transform along β for each t node, then along t
    let along_b: Vec<Vec<Interval>> = values.iter().map(|row| coefficients_1d(row, &cos_b)).collect();
    let mut coeffs = vec![Interval::ZERO; (nt + 1) * (nb + 1)];
    for l in 0..=nb {
        let column: Vec<Interval> = along_b.iter().map(|row| row[l]).collect();
        for (k, c) in coefficients_1d(&column, &cos_t).into_iter().enumerate() {
            coeffs[k * (nb + 1) + l] = c;
        }
    }
    let e_t = interpolation_error(m, rho.0, nt);
    let e_b = interpolation_error(m, rho.1, nb);
    let error_bound = add_up(e_t, mul_up(lebesgue_bound(nt), e_b));
    Ok(ChebModel { domain, t_map, beta_map, degrees, rho, modulus_bound: m, error_bound, coeffs })
}

impl ChebModel {
    fn check(&self, t: Interval, beta: Interval) -> Result<()> {
        if !self.domain.contains(t, beta) {
            return Err(Error::Domain(format!("box {t:?} x {beta:?} outside model domain {:?}", self.domain)));
        }
        Ok(())
    }

    /// Collapse the `β` direction over a box, keeping the error bound.
    pub fn restrict_beta(&self, beta: Interval) -> Result<ChebModel1d> {
        self.check(self.domain.t, beta)?;
        let (nt, nb) = self.degrees;
        let basis = chebyshev_basis(self.beta_map.to_unit(beta)?, nb)?;
        let coeffs = (0..=nt).map(|k| dot(&self.coeffs[k * (nb + 1)..(k + 1) * (nb + 1)], &basis)).collect();
        Ok(ChebModel1d { domain: self.domain.t, map: self.t_map, coeffs, error_bound: self.error_bound })
    }
}

/// Enclosure of the interpolated function on a box, error bound included.
pub fn eval_model(model: &ChebModel, t: Interval, beta: Interval) -> Result<Interval> {
    model.check(t, beta)?;
    model.restrict_beta(beta)?.eval(t)
}

/// A model restricted to a `β` box: one-variable coefficients in `t`.
#[derive(Clone, Debug)]
pub struct ChebModel1d {
    pub domain: Interval,
    pub map: AffineMap,
    pub coeffs: Vec<Interval>,
    pub error_bound: f64,
}

impl ChebModel1d {
    pub fn eval(&self, t: Interval) -> Result<Interval> {
        if !t.subset(&self.domain) {
            return Err(Error::Domain(format!("t = {t:?} outside model domain {:?}", self.domain)));
        }
        let basis = chebyshev_basis(self.map.to_unit(t)?, self.coeffs.len() - 1)?;
        let e = self.error_bound;
        Ok(dot(&self.coeffs, &basis) + Interval::new(-e, e))
    }
}

/// Fit `∂_t^j f` (or `g`) from direct series enclosures, with `M` from
/// [`ellipse_modulus_bound`].
pub fn fit_series(domain: Rect, degrees: (usize, usize), rho: (f64, f64), which: Which, j: usize) -> Result<ChebModel> {
    let bound = ellipse_modulus_bound(domain, rho, which, j)?;
    fit(
        |t, beta| {
            let b = match which {
                Which::F => beta,
                Which::G => g_beta(beta),
            };
            let k = required_k(t, b, j)?;
            Ok(SeriesCoeffs::new(b, k).eval(t, j)?.value)
        },
        domain,
        degrees,
        rho,
        bound.modulus_bound,
    )
}

/// Identifies what a cached model approximates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub function: Which,
    pub derivative: usize,
    pub domain: Rect,
    pub degrees: (usize, usize),
    pub rho: (f64, f64),
    pub format_version: u32,
}

pub const CACHE_FORMAT_VERSION: u32 = 1;

impl ModelConfig {
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex_digest(text.as_bytes())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct CachedModel {
    config: ModelConfig,
    config_hash: String,
    content_hash: String,
    model: ChebModel,
}

fn content_hash(model: &ChebModel) -> String {
    let mut h = Sha256::new();
    for c in &model.coeffs {
        h.update(c.lo().to_bits().to_le_bytes());
        h.update(c.hi().to_bits().to_le_bytes());
    }
    h.update(model.error_bound.to_bits().to_le_bytes());
    h.update(model.modulus_bound.to_bits().to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_model(path: &Path, config: &ModelConfig, model: &ChebModel) -> Result<()> {
    let cached = CachedModel {
        config: config.clone(),
        config_hash: config.hash(),
        content_hash: content_hash(model),
        model: model.clone(),
    };
    std::fs::write(path, serde_json::to_vec(&cached)?)?;
    Ok(())
}

/// Load a cached model, refusing it unless both hashes check out.
pub fn load_model(path: &Path, expected: &ModelConfig) -> Result<ChebModel> {
    let cached: CachedModel = serde_json::from_slice(&std::fs::read(path)?)?;
    if cached.config != *expected || cached.config_hash != expected.hash() {
        return Err(Error::Config(format!("cached model at {} has a different configuration", path.display())));
    }
    if cached.content_hash != content_hash(&cached.model) {
        return Err(Error::Config(format!("cached model at {} fails its content hash", path.display())));
    }
    Ok(cached.model)
}

/// Fit through the cache: reuse a valid file, otherwise fit and store.
pub fn fit_series_cached(dir: Option<&Path>, config: &ModelConfig) -> Result<ChebModel> {
    let fit_now = || fit_series(config.domain, config.degrees, config.rho, config.function, config.derivative);
    let Some(dir) = dir else { return fit_now() };
    let path = dir.join(format!("cheb-{}.json", &config.hash()[..16]));
    if let Ok(model) = load_model(&path, config) {
        return Ok(model);
    }
    let model = fit_now()?;
    std::fs::create_dir_all(dir)?;
    save_model(&path, config, &model)?;
    Ok(model)
}
