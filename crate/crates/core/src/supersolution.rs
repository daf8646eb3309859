//! Supersolution conditions for `p_c = max{min{v_c, w_c}, 0}`, where
//! `v_c = r f_c + ε r^{-1/2} g_c` and `w_c = Σ a_n r^{α_n} h_n(t)` is a
//! c-harmonic sum of Legendre polynomials.
//!
//! Condition (1): `w_c(1, t) > f_c(t) + ε g_c(t)` wherever `w_c(1, t) > 0`.
//! Condition (3): the cone gradient is below one on the free boundary
//! `∂{p_c > 0}`, which consists of the `w`-branch (`w = 0`, `v >= 0`) and the
//! `v`-branch (`v = 0`, `w >= 0`). On the `v`-branch `|∇_c v|² = G_c(t)`
//! independently of `r`.
//!
//! Near `t = -1` both `f` and `g` are logarithmically singular. There `v` is
//! bounded through its combined series `Σ c_n (1-t)^n`,
//! `c_n = (r/N) a_n(β) + ε r^{-1/2} a_n(-β/8)`: for `β ∈ (0, 2]` the ratio
//! `ρ_n = |a_n(β)| / a_n(-β/8)` decreases in `n` and stays above
//! `ρ_K (1 - 9β/(8K))` for `n >= K`, which fixes the sign of every tail
//! coefficient from the sign of `c_K` (or of its limit bound).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::certificate::{
    certify_cells, CellEval, GridCertificate, Refinement, Split, SubintervalResult, Summary, Verdict,
};
use crate::error::{Error, Result};
use crate::interval::{add_up, Interval};
use crate::legendre::{g_beta, required_k, SeriesCoeffs};
use crate::roots::{find_root_for_beta, RootStatus, SEED_RADIUS};
use crate::subsolution::ConeParams;

/// Checked-in coefficient table; the CLI refuses edited copies by default.
pub const DEFAULT_ROWS_JSON: &str = include_str!("../data/table2_rows.json");

/// Largest cone parameter covered by the table.
pub const C_MAX_ROWS: f64 = 0.43;

/// One row of the coefficient table, kept as the decimal strings printed in
/// the table so that the file can be compared verbatim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionRow {
    pub id: u32,
    pub c_lo: String,
    pub c_hi: String,
    pub epsilon: String,
    pub a: [String; 4],
    pub c_subintervals: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowsConfig {
    pub format_version: u32,
    pub rows: Vec<SupersolutionRow>,
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config(format!("not a number: {s:?}")))
}

/// Interval containing the exact decimal `s` (one ulp of slack each side
/// unless the parse is exact for a short integer-like value).
pub fn decimal_enclosure(s: &str) -> Result<Interval> {
    let x = parse_f64(s)?;
    if x == x.trunc() && x.abs() < 1e15 {
        return Ok(Interval::point(x));
    }
    Ok(Interval::new(x.next_down(), x.next_up()))
}

impl SupersolutionRow {
    /// The candidate `ε`; the certificate is about this binary value.
    pub fn epsilon(&self) -> Result<f64> {
        parse_f64(&self.epsilon)
    }

    /// Coefficients `a_0..a_3` as the doubles the certificate uses.
    pub fn coefficients(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (o, s) in out.iter_mut().zip(&self.a) {
            *o = parse_f64(s)?;
        }
        Ok(out)
    }

    /// c-subintervals, each widened to contain its decimal endpoints.
    pub fn c_boxes(&self) -> Result<Vec<Interval>> {
        self.c_subintervals
            .iter()
            .map(|[a, b]| {
                let lo = decimal_enclosure(a)?.lo().max(0.0);
                let hi = decimal_enclosure(b)?.hi();
                Interval::try_new(lo, hi)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon()?;
        if !(eps > 0.0) {
            return Err(Error::Config(format!("row {}: epsilon must be positive", self.id)));
        }
        self.coefficients()?;
        let hi = parse_f64(&self.c_hi)?;
        if hi > C_MAX_ROWS {
            return Err(Error::Config(format!("row {}: c_hi = {hi} exceeds {C_MAX_ROWS}", self.id)));
        }
        for c in self.c_boxes()? {
            if c.lo() < 0.0 || c.hi() > C_MAX_ROWS + 1e-12 {
                return Err(Error::Config(format!("row {}: c-subinterval {c:?} out of range", self.id)));
            }
        }
        Ok(())
    }
}

impl RowsConfig {
    pub fn row(&self, id: u32) -> Result<&SupersolutionRow> {
        self.rows.iter().find(|r| r.id == id).ok_or_else(|| Error::Config(format!("no row with id {id}")))
    }
}

pub fn default_rows() -> RowsConfig {
    serde_json::from_str(DEFAULT_ROWS_JSON).expect("embedded rows parse")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse a rows file; unless `allow_custom`, its rows must equal the
/// checked-in table exactly.
pub fn parse_rows(text: &str, allow_custom: bool) -> Result<RowsConfig> {
    let cfg: RowsConfig = serde_json::from_str(text)?;
    for r in &cfg.rows {
        r.validate()?;
    }
    if !allow_custom && cfg != default_rows() {
        return Err(Error::Config(format!(
            "rows differ from the checked-in table (sha256 {} vs {}); pass --allow-custom-rows to use them",
            sha256_hex(text.as_bytes()),
            sha256_hex(DEFAULT_ROWS_JSON.as_bytes())
        )));
    }
    Ok(cfg)
}

/// Exponents `α_n` and the scaled coefficients of `w_c` for a cone box.
#[derive(Clone, Copy, Debug)]
pub struct HarmonicSum {
    pub params: ConeParams,
    pub a: [Interval; 4],
    /// `α_n = (-1 + sqrt(1 + 4n(n+1)(1+c²))) / 2`.
    pub alphas: [Interval; 4],
    pub one_plus_c2: Interval,
}

pub fn alpha(n: u32, c: Interval) -> Result<Interval> {
    let k = (4 * n * (n + 1)) as f64;
    let inner = Interval::ONE + (Interval::ONE + c.sqr()) * k;
    // α_n >= n since the radicand is at least (2n+1)²
    (inner.sqrt()? - Interval::ONE).div_f64(2.0).intersect(&Interval::new(n as f64, f64::INFINITY))
}

impl HarmonicSum {
    pub fn new(params: ConeParams, a: [f64; 4]) -> Result<Self> {
        let mut alphas = [Interval::ZERO; 4];
        for (n, al) in alphas.iter_mut().enumerate() {
            *al = alpha(n as u32, params.c)?;
        }
        Ok(HarmonicSum { params, a: a.map(Interval::point), alphas, one_plus_c2: Interval::ONE + params.c.sqr() })
    }
}

/// `x^e` for `x ⊆ [0, ∞)` and `e >= 0`, allowing `x` to touch zero.
fn pow_nonneg(x: Interval, e: Interval) -> Result<Interval> {
    if e.lo() < 0.0 {
        return Err(Error::Domain(format!("exponent {e:?} negative")));
    }
    if e == Interval::ZERO {
        return Ok(Interval::ONE);
    }
    if x.lo() > 0.0 {
        return x.pow(e);
    }
    if x.hi() == 0.0 {
        return Ok(Interval::ZERO);
    }
    // x^e is increasing in x on [0, x.hi]; bound the top over every e.
    let top = Interval::point(x.hi()).pow(e)?;
    Ok(Interval::new(0.0, top.hi().max(if e.lo() == 0.0 { 1.0 } else { 0.0 })))
}

fn legendre_h(t: Interval) -> [Interval; 4] {
    let t2 = t.sqr();
    [Interval::ONE, t, (t2 * 3.0 - Interval::ONE).div_f64(2.0), t * (t2 * 5.0 - Interval::point(3.0)).div_f64(2.0)]
}

fn legendre_dh(t: Interval) -> [Interval; 4] {
    let t2 = t.sqr();
    [Interval::ZERO, Interval::ONE, t * 3.0, (t2 * 15.0 - Interval::point(3.0)).div_f64(2.0)]
}

/// `w(r, t) = Σ a_n r^{α_n} h_n(t)` for `r.lo > 0`.
pub fn w(r: Interval, t: Interval, hs: &HarmonicSum) -> Result<Interval> {
    if !(r.lo() > 0.0) {
        return Err(Error::Domain(format!("radius {r:?} must be positive")));
    }
    w_closed(r, t, hs)
}

/// `w` on the closed ball; `r` may touch the vertex.
pub fn w_closed(r: Interval, t: Interval, hs: &HarmonicSum) -> Result<Interval> {
    if r.lo() < 0.0 {
        return Err(Error::Domain(format!("radius {r:?} negative")));
    }
    let h = legendre_h(t);
    let mut s = Interval::ZERO;
    for n in 0..4 {
        if hs.a[n] != Interval::ZERO {
            s = s + hs.a[n] * pow_nonneg(r, hs.alphas[n])? * h[n];
        }
    }
    Ok(s)
}

/// `(w_r, w_t / r)`; both finite at `r = 0` since `α_n >= 1` for `n >= 1`.
fn w_partials(r: Interval, t: Interval, hs: &HarmonicSum) -> Result<(Interval, Interval)> {
    let h = legendre_h(t);
    let dh = legendre_dh(t);
    let (mut wr, mut wt_over_r) = (Interval::ZERO, Interval::ZERO);
    for n in 1..4 {
        if hs.a[n] == Interval::ZERO {
            continue;
        }
        let rp = pow_nonneg(r, (hs.alphas[n] - Interval::ONE).intersect(&Interval::new(0.0, f64::INFINITY))?)?;
        wr = wr + hs.a[n] * hs.alphas[n] * rp * h[n];
        wt_over_r = wt_over_r + hs.a[n] * rp * dh[n];
    }
    Ok((wr, wt_over_r))
}

/// `|∇_c w|² = w_r² / (1+c²) + (1 - t²) w_t² / r²`.
pub fn grad_sq_w(r: Interval, t: Interval, hs: &HarmonicSum) -> Result<Interval> {
    let (wr, wt) = w_partials(r, t, hs)?;
    Ok(wr.sqr().div(hs.one_plus_c2)? + (Interval::ONE - t.sqr()) * wt.sqr())
}

/// Lower bound on `t` where plain series enclosures are used.
pub const SERIES_T_MIN: f64 = -0.95;
const SINGULAR_K: usize = 600;

/// Everything needed on one `β` strip of a c-subinterval.
pub struct StripContext {
    pub beta: Interval,
    pub params: ConeParams,
    pub hs: HarmonicSum,
    pub eps: f64,
    /// `N` in `f_c = f / N`.
    pub scale: Interval,
    pub t_c: Interval,
    f: SeriesCoeffs,
    g: SeriesCoeffs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    F,
    G,
}

/// Possibly unbounded enclosure of `v`.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    fn from(i: Interval) -> Self {
        Bounds { lo: i.lo(), hi: i.hi() }
    }
}

impl StripContext {
    pub fn new(row: &SupersolutionRow, beta: Interval) -> Result<Self> {
        let params = ConeParams::from_beta(beta)?;
        let hs = HarmonicSum::new(params, row.coefficients()?)?;
        let t_c = find_root_for_beta(beta, SEED_RADIUS)?.interval;
        let range = Interval::new(SERIES_T_MIN, 1.0);
        let gb = g_beta(beta);
        let f = SeriesCoeffs::new(beta, required_k(range, beta, 2)?.max(SINGULAR_K));
        let g = SeriesCoeffs::new(gb, required_k(range, gb, 2)?.max(SINGULAR_K));
        let df = f.eval(t_c, 1)?.value;
        let scale = (Interval::ONE - t_c.sqr()).sqrt()? * df.abs();
        if !scale.is_positive() {
            return Err(Error::CertificationFailure(format!("normalization {scale:?} not positive")));
        }
        Ok(StripContext { beta, params, hs, eps: row.epsilon()?, scale, t_c, f, g })
    }

    /// `∂_t^j f_c` (normalized) or `∂_t^j g_c`.
    pub fn series(&self, which: Which, t: Interval, j: usize) -> Result<Interval> {
        if !(t.lo() >= SERIES_T_MIN) {
            return Err(Error::BoundUnavailable(format!("series not used below t = {SERIES_T_MIN}: {t:?}")));
        }
        let c = match which {
            Which::F => &self.f,
            Which::G => &self.g,
        };
        let k = required_k(t, c.beta(), j)?.min(c.k());
        let v = c.eval_truncated(t, j, k)?.value;
        match which {
            Which::F => v.div(self.scale),
            Which::G => Ok(v),
        }
    }

    /// `G_c(t) = σ f_c² + (1 - t²)(f_c' - f_c g'/g)²`, the squared gradient on `{v = 0}`.
    pub fn g_fun(&self, t: Interval) -> Result<Interval> {
        let f = self.series(Which::F, t, 0)?;
        let df = self.series(Which::F, t, 1)?;
        let g = self.series(Which::G, t, 0)?;
        let dg = self.series(Which::G, t, 1)?;
        if !g.is_positive() {
            return Err(Error::CertificationFailure(format!("g enclosure {g:?} not positive")));
        }
        Ok(self.params.sigma * f.sqr() + (Interval::ONE - t.sqr()) * (df - (f * dg).div(g)?).sqr())
    }

    /// Enclosure of `v = r f_c + ε r^{-1/2} g_c`, unbounded where the
    /// singular end or `r -> 0` prevents a finite bound.
    pub fn v_bounds(&self, r: Interval, t: Interval) -> Result<Bounds> {
        let t = t.intersect(&Interval::new(-1.0, 1.0))?;
        let r = r.intersect(&Interval::new(0.0, f64::MAX))?;
        if t.lo() >= SERIES_T_MIN {
            let f = self.series(Which::F, t, 0)?;
            let g = self.series(Which::G, t, 0)?;
            if r.lo() > 0.0 {
                let rm = r.sqrt()?.recip()?;
                return Ok(Bounds::from(r * f + rm * g * self.eps));
            }
            if !g.is_positive() {
                return Err(Error::CertificationFailure(format!("g enclosure {g:?} not positive")));
            }
            let rm_lo = Interval::point(r.hi()).sqrt()?.recip()?.lo();
            return Ok(Bounds { lo: ((r * f).lo() + (Interval::point(rm_lo) * g * self.eps).lo()), hi: f64::INFINITY });
        }
        self.v_bounds_singular(r, t)
    }

    fn v_bounds_singular(&self, r: Interval, t: Interval) -> Result<Bounds> {
        let beta = self.beta;
        if !(beta.lo() > 0.0 && beta.hi() <= 2.0) {
            return Err(Error::Domain(format!("singular-end bound needs beta in (0, 2], got {beta:?}")));
        }
        let k = SINGULAR_K;
        let y = ((Interval::ONE - t) * 0.5).intersect(&Interval::new(0.0, 1.0))?;
        let a_f = r.div(self.scale)?;
        let b_lo = if r.hi() > 0.0 { Interval::point(r.hi()).sqrt()?.recip()?.lo() * self.eps } else { f64::INFINITY };
        let b = if r.lo() > 0.0 { Some(r.sqrt()?.recip()? * self.eps) } else { None };
        let (bf, bg) = (self.f.scaled(), self.g.scaled());

        // lower bound: tail coefficients nonnegative once c_K >= 0
        let mut lo = f64::NEG_INFINITY;
        if b_lo.is_finite() {
            let coeff_lo = |n: usize| (a_f * bf[n] + bg[n] * b_lo).lo();
            if coeff_lo(k) >= 0.0 {
                let mut s = Interval::ZERO;
                for n in (0..=k).rev() {
                    s = s * y + Interval::point(coeff_lo(n));
                }
                lo = s.lo();
            }
        } else {
            lo = f64::INFINITY;
        }

        // upper bound: tail coefficients nonpositive once B <= A ρ_K (1 - 9β/(8K))
        let mut hi = f64::INFINITY;
        if let Some(bm) = b {
            let rho_k = bf[k].abs().div(bg[k])?;
            let shrink = Interval::ONE - (beta * 9.0).div_f64(8.0 * k as f64);
            let limit = rho_k * shrink;
            if shrink.lo() > 0.0 && (bm - a_f * Interval::point(limit.lo())).hi() <= 0.0 {
                let coeff_hi = |n: usize| (a_f * bf[n] + bm * bg[n]).hi();
                let mut s = Interval::ZERO;
                for n in (0..=k).rev() {
                    s = s * y + Interval::point(coeff_hi(n));
                }
                hi = s.hi();
            }
        }
        if lo > hi {
            return Err(Error::Numerical(format!("inconsistent singular-end bounds at r = {r:?}, t = {t:?}")));
        }
        Ok(Bounds { lo, hi })
    }

    /// General `|∇_c v|² = v_r²/(1+c²) + (1 - t²) (v_t / r)²`.
    pub fn grad_sq_v(&self, r: Interval, t: Interval) -> Result<Interval> {
        if !(r.lo() > 0.0) {
            return Err(Error::Domain(format!("radius {r:?} must be positive")));
        }
        let f = self.series(Which::F, t, 0)?;
        let df = self.series(Which::F, t, 1)?;
        let g = self.series(Which::G, t, 0)?;
        let dg = self.series(Which::G, t, 1)?;
        let r32 = r.pow(Interval::point(-1.5))?;
        let vr = f - r32 * g * (0.5 * self.eps);
        let vt_over_r = df + r32 * dg * self.eps;
        Ok(vr.sqr().div(self.hs.one_plus_c2)? + (Interval::ONE - t.sqr()) * vt_over_r.sqr())
    }
}

/// Squared cone gradient of `w` or `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    W,
    V,
}

pub fn grad_sq(field: Field, r: Interval, t: Interval, ctx: &StripContext) -> Result<Interval> {
    match field {
        Field::W => grad_sq_w(r, t, &ctx.hs),
        Field::V => ctx.grad_sq_v(r, t),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Cond1Config {
    pub n_t: usize,
    pub n_beta: usize,
    pub max_depth: usize,
    pub keep_cells: bool,
    /// Per `β` strip; remaining cells are counted as skipped.
    pub stop_after_failures: Option<u64>,
}

impl Default for Cond1Config {
    fn default() -> Self {
        Cond1Config { n_t: 2000, n_beta: 200, max_depth: 8, keep_cells: false, stop_after_failures: Some(1) }
    }
}

fn strip_contexts(row: &SupersolutionRow, c_sub: Interval, n_beta: usize) -> Result<Vec<(Interval, Result<StripContext>)>> {
    let beta = ConeParams::new(c_sub)?.beta;
    let strips = beta.split(n_beta.max(1));
    Ok(strips.into_par_iter().map(|b| (b, StripContext::new(row, b))).collect())
}

/// Condition (1) on `[-1, 1] × β(c_sub)`.
pub fn verify_condition1(row: &SupersolutionRow, c_sub: Interval, cfg: &Cond1Config) -> Result<GridCertificate> {
    row.validate()?;
    let refine = Refinement { max_depth: cfg.max_depth, split: Split::First, keep_cells: cfg.keep_cells };
    let contexts = strip_contexts(row, c_sub, cfg.n_beta)?;
    let one = Interval::ONE;
    let strips: Vec<(Summary, Option<String>)> = contexts
        .par_iter()
        .map(|(strip, ctx)| match ctx {
            Err(e) => (Summary::default(), Some(e.to_string())),
            Ok(ctx) => {
                let eval = |cell: [Interval; 2]| {
                    let t = cell[0];
                    let wv = w(one, t, &ctx.hs)?;
                    if wv.hi() <= 0.0 {
                        return Ok(CellEval::Vacuous);
                    }
                    // an unbounded v.hi leaves the cell open; v.lo > w.hi still refutes it
                    let v = ctx.v_bounds(one, t)?;
                    let lo = if v.hi.is_finite() { wv.lo() - add_up(v.hi, 0.0) } else { f64::NEG_INFINITY };
                    Ok(CellEval::Value(Interval::new(lo, wv.hi() - v.lo).widen_down()))
                };
                let cells = Interval::new(-1.0, 1.0).split(cfg.n_t).into_iter().map(|t| [t, *strip]);
                (certify_cells(c_sub, cells, &eval, refine, cfg.stop_after_failures), None)
            }
        })
        .collect();
    let mut summary = Summary::default();
    let mut verdict = Verdict::Pass;
    let mut errors = Vec::new();
    for (s, e) in strips {
        if let Some(e) = e {
            verdict = verdict.and(Verdict::Inconclusive);
            errors.push(e);
        }
        summary.merge(s);
    }
    verdict = verdict.and(summary.verdict());
    let mut parameters = BTreeMap::new();
    parameters.insert("epsilon".into(), json!(row.epsilon));
    parameters.insert("a".into(), json!(row.a));
    parameters.insert("n_beta".into(), json!(cfg.n_beta));
    Ok(GridCertificate {
        claim: format!("row {} condition (1): w(1,t) > f_c + eps g_c on {{w(1,t) > 0}}", row.id),
        quantity: "w(1,t) - f_c(t) - eps g_c(t)".into(),
        axes: ["t".into(), "beta".into()],
        c_subintervals: vec![SubintervalResult {
            c: c_sub,
            anchor: None,
            verdict,
            tally: summary.tally,
            min_lower_bound: summary.global_min.as_ref().and_then(|m| m.value).map(|v| v.lo()),
            error: if errors.is_empty() { None } else { Some(errors.join("; ")) },
        }],
        grid: (cfg.n_t, cfg.n_beta),
        max_depth: cfg.max_depth,
        parameters,
        summary,
        verdict,
    })
}

/// Simultaneous zero of `w` and `v` inside the unit ball.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CrossPoint {
    pub r: Interval,
    pub t: Interval,
    pub status: RootStatus,
    pub x0: Interval,
    pub y0: Interval,
    pub w: Interval,
    pub v: Interval,
}

fn mid(i: Result<Interval>) -> f64 {
    i.map(|v| v.mid()).unwrap_or(f64::NAN)
}

/// `(w, v)` and their Jacobian in `(r, t)` over a box.
fn cross_system(ctx: &StripContext, r: Interval, t: Interval) -> Result<([Interval; 2], [[Interval; 2]; 2])> {
    let hs = &ctx.hs;
    let wv = w(r, t, hs)?;
    let (wr, wt_over_r) = w_partials(r, t, hs)?;
    let f = ctx.series(Which::F, t, 0)?;
    let df = ctx.series(Which::F, t, 1)?;
    let g = ctx.series(Which::G, t, 0)?;
    let dg = ctx.series(Which::G, t, 1)?;
    let rm = r.sqrt()?.recip()?;
    let v = r * f + rm * g * ctx.eps;
    let vr = f - rm.powi(3)? * g * (0.5 * ctx.eps);
    let vt = r * df + rm * dg * ctx.eps;
    Ok(([wv, v], [[wr, wt_over_r * r], [vr, vt]]))
}

/// Locate the cross point: scan the `v = 0` curve `r = (-ε g / f_c)^{2/3}`
/// for a sign change of `w`, polish with float Newton, then verify with a
/// Krawczyk test on a box of radius `1e-3`. `Ok(None)` when `w > 0` is
/// certified on the whole unit ball (no `w`-branch exists).
pub fn find_cross_point(ctx: &StripContext) -> Result<Option<CrossPoint>> {
    let ball = w_closed(Interval::new(0.0, 1.0), Interval::new(-1.0, 1.0), &ctx.hs)?;
    if ball.lo() > 0.0 {
        return Ok(None);
    }
    let pt = Interval::point;
    let fm = |t: f64| mid(ctx.series(Which::F, pt(t), 0));
    let gm = |t: f64| mid(ctx.series(Which::G, pt(t), 0));
    let r_of = |t: f64| (-ctx.eps * gm(t) / fm(t)).powf(2.0 / 3.0);
    let w_on_curve = |t: f64| mid(w(pt(r_of(t)), pt(t), &ctx.hs));
    let mut t = ctx.t_c.lo() - 1e-3;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    while t > SERIES_T_MIN + 1e-3 {
        if fm(t) < 0.0 && r_of(t) <= 1.0 {
            let wv = w_on_curve(t);
            if let Some((tp, wp)) = prev {
                if wp.signum() != wv.signum() {
                    bracket = Some((t, tp));
                    break;
                }
            }
            prev = Some((t, wv));
        }
        t -= 2e-3;
    }
    let Some((mut a, mut b)) = bracket else {
        return Err(Error::CertificationFailure("no sign change of w along the v = 0 curve".into()));
    };
    let wa = w_on_curve(a).signum();
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if w_on_curve(m).signum() == wa {
            a = m;
        } else {
            b = m;
        }
    }
    let t0 = 0.5 * (a + b);
    let mut x = [r_of(t0), t0];
    // ten float Newton steps on the pair
    for _ in 0..10 {
        let Ok((fv, j)) = cross_system(ctx, pt(x[0]), pt(x[1])) else { break };
        let (f0, f1) = (fv[0].mid(), fv[1].mid());
        let (a11, a12, a21, a22) = (j[0][0].mid(), j[0][1].mid(), j[1][0].mid(), j[1][1].mid());
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        x = [x[0] - (a22 * f0 - a12 * f1) / det, x[1] - (-a21 * f0 + a11 * f1) / det];
    }
    krawczyk(ctx, x, SEED_RADIUS, 10)
}

fn krawczyk(ctx: &StripContext, center: [f64; 2], radius: f64, iters: usize) -> Result<Option<CrossPoint>> {
    let pt = Interval::point;
    let mut bx = [Interval::new(center[0] - radius, center[0] + radius), Interval::new(center[1] - radius, center[1] + radius)];
    let (_, j0) = cross_system(ctx, pt(center[0]), pt(center[1]))?;
    let (a11, a12, a21, a22) = (j0[0][0].mid(), j0[0][1].mid(), j0[1][0].mid(), j0[1][1].mid());
    let det = a11 * a22 - a12 * a21;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::CertificationFailure("singular Jacobian at the cross point".into()));
    }
    let y = [[pt(a22 / det), pt(-a12 / det)], [pt(-a21 / det), pt(a11 / det)]];
    let mut verified = false;
    for _ in 0..iters {
        let m = [bx[0].mid(), bx[1].mid()];
        let (fm, _) = cross_system(ctx, pt(m[0]), pt(m[1]))?;
        let (_, jx) = cross_system(ctx, bx[0], bx[1])?;
        let d = [bx[0] - m[0], bx[1] - m[1]];
        let mut k = [Interval::ZERO; 2];
        for i in 0..2 {
            let yf = y[i][0] * fm[0] + y[i][1] * fm[1];
            let mut acc = Interval::point(m[i]) - yf;
            for (l, dl) in d.iter().enumerate() {
                let delta = if i == l { Interval::ONE } else { Interval::ZERO };
                let yj = y[i][0] * jx[0][l] + y[i][1] * jx[1][l];
                acc = acc + (delta - yj) * *dl;
            }
            k[i] = acc;
        }
        if k[0].interior_subset(&bx[0]) && k[1].interior_subset(&bx[1]) {
            verified = true;
        }
        let next = match (k[0].intersect(&bx[0]), k[1].intersect(&bx[1])) {
            (Ok(a), Ok(b)) => [a, b],
            _ => return Err(Error::CertificationFailure("Krawczyk operator excludes the seed box".into())),
        };
        if next == bx {
            break;
        }
        bx = next;
    }
    if !verified {
        return Err(Error::CertificationFailure(format!("cross point not verified in {bx:?}")));
    }
    let (vals, _) = cross_system(ctx, bx[0], bx[1])?;
    let (r, t) = (bx[0], bx[1]);
    Ok(Some(CrossPoint {
        r,
        t,
        status: RootStatus::VerifiedUnique,
        x0: r * t,
        y0: r * (Interval::ONE - t.sqr()).sqrt()?,
        w: vals[0],
        v: vals[1],
    }))
}

/// Polar enclosures of a Cartesian cell in the upper half plane. `t = x/r`
/// is monotone in each coordinate there, so corners give its range.
pub fn polar_box(x: Interval, y: Interval) -> Result<(Interval, Interval)> {
    let near_x = if x.contains_zero() { 0.0 } else { x.mig() };
    let near_y = if y.contains_zero() { 0.0 } else { y.mig() };
    let r_lo = (Interval::point(near_x).sqr() + Interval::point(near_y).sqr()).sqrt()?.lo();
    let r_hi = (Interval::point(x.mag()).sqr() + Interval::point(y.mag()).sqr()).sqrt()?.hi();
    let r = Interval::new(r_lo, r_hi);
    if r_lo == 0.0 {
        return Ok((r, Interval::new(-1.0, 1.0)));
    }
    let corner = |a: f64, b: f64| -> Result<Interval> {
        let rr = (Interval::point(a).sqr() + Interval::point(b).sqr()).sqrt()?;
        Interval::point(a).div(rr)
    };
    let mut t = corner(x.lo(), y.lo())?;
    for (a, b) in [(x.lo(), y.hi()), (x.hi(), y.lo()), (x.hi(), y.hi())] {
        t = t.hull(&corner(a, b)?);
    }
    Ok((r, t.intersect(&Interval::new(-1.0, 1.0))?))
}

#[derive(Clone, Debug, Serialize)]
pub struct Cond3Config {
    /// Root cells of the sweep over `[-1, 1] × [0, 1]`.
    pub sweep: (usize, usize),
    pub sweep_depth: usize,
    /// Root cells of the rectangle beyond the cross radius.
    pub rectangle: (usize, usize),
    pub rectangle_depth: usize,
    pub n_beta: usize,
    /// Halvings of a strip tried where a cell or cross point is undecided.
    pub beta_depth: usize,
    pub keep_cells: bool,
    /// Per `β` strip and region; remaining cells are counted as skipped.
    pub stop_after_failures: Option<u64>,
}

impl Default for Cond3Config {
    fn default() -> Self {
        Cond3Config {
            sweep: (64, 32),
            sweep_depth: 8,
            rectangle: (30, 30),
            rectangle_depth: 6,
            n_beta: 8,
            beta_depth: 6,
            keep_cells: false,
            stop_after_failures: Some(1),
        }
    }
}

fn one_minus(v: Interval) -> Interval {
    Interval::ONE - v
}

/// Free-boundary sweep cell: `1 - |∇|²` on whichever branches may pass
/// through the cell.
fn sweep_eval(ctx: &StripContext, cell: [Interval; 2]) -> Result<CellEval> {
    let (r, t) = polar_box(cell[0], cell[1])?;
    if r.lo() > 1.0 {
        return Ok(CellEval::Outside);
    }
    let r = r.intersect(&Interval::new(0.0, 1.0))?;
    let wv = w_closed(r, t, &ctx.hs)?;
    let v = ctx.v_bounds(r, t).unwrap_or(Bounds { lo: f64::NEG_INFINITY, hi: f64::INFINITY });
    let on_w = wv.contains_zero() && v.hi >= 0.0;
    let on_v = v.lo <= 0.0 && v.hi >= 0.0 && wv.hi() >= 0.0;
    let mut value: Option<Interval> = None;
    let mut take = |x: Interval| {
        value = Some(match value {
            None => x,
            Some(p) => Interval::new(p.lo().min(x.lo()), p.hi().min(x.hi())),
        })
    };
    if on_w {
        take(one_minus(grad_sq_w(r, t, &ctx.hs)?));
    }
    if on_v {
        take(one_minus(ctx.g_fun(t)?));
    }
    Ok(match value {
        Some(v) => CellEval::Value(possible_branch(v)),
        None => CellEval::Outside,
    })
}

/// Branch membership of a cell is only possible, never certified, so a
/// negative enclosure is not a counterexample and the cell stays refinable.
fn possible_branch(v: Interval) -> Interval {
    Interval::new(v.lo(), v.hi().max(f64::MIN_POSITIVE))
}

/// Paper rectangle cell: wherever `w` may vanish, `|∇w| < 1`.
fn rectangle_eval(ctx: &StripContext, cell: [Interval; 2]) -> Result<CellEval> {
    let (r, t) = polar_box(cell[0], cell[1])?;
    if r.lo() > 1.0 {
        return Ok(CellEval::Outside);
    }
    let r = r.intersect(&Interval::new(0.0, 1.0))?;
    if !w_closed(r, t, &ctx.hs)?.contains_zero() {
        return Ok(CellEval::Outside);
    }
    Ok(CellEval::Value(possible_branch(one_minus(grad_sq_w(r, t, &ctx.hs)?))))
}

/// A `β` strip with lazily built context and halves.
pub struct StripNode<'a> {
    row: &'a SupersolutionRow,
    pub beta: Interval,
    ctx: OnceLock<std::result::Result<StripContext, String>>,
    children: OnceLock<Box<[StripNode<'a>; 2]>>,
}

impl<'a> StripNode<'a> {
    pub fn new(row: &'a SupersolutionRow, beta: Interval) -> Self {
        StripNode { row, beta, ctx: OnceLock::new(), children: OnceLock::new() }
    }

    pub fn ctx(&self) -> Result<&StripContext> {
        self.ctx
            .get_or_init(|| StripContext::new(self.row, self.beta).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::CertificationFailure(e.clone()))
    }

    pub fn children(&self) -> &[StripNode<'a>; 2] {
        self.children.get_or_init(|| {
            let (a, b) = self.beta.bisect();
            Box::new([StripNode::new(self.row, a), StripNode::new(self.row, b)])
        })
    }
}

/// Evaluate on the strip; an undecided enclosure is retried on the halves,
/// down to `depth` levels. The result encloses the quantity over the strip
/// unless a half certifies a counterexample, which is returned as is.
pub fn strip_eval<F>(node: &StripNode<'_>, cell: [Interval; 2], depth: usize, f: &F) -> Result<CellEval>
where
    F: Fn(&StripContext, [Interval; 2]) -> Result<CellEval>,
{
    let here = node.ctx().and_then(|ctx| f(ctx, cell));
    let undecided = match &here {
        Ok(CellEval::Value(v)) => v.lo() <= 0.0 && v.hi() > 0.0,
        Ok(_) => false,
        Err(_) => true,
    };
    if !undecided || depth == 0 {
        return here;
    }
    let mut acc: Option<Interval> = None;
    for child in node.children() {
        match strip_eval(child, cell, depth - 1, f)? {
            CellEval::Value(v) if v.hi() <= 0.0 => return Ok(CellEval::Value(v)),
            CellEval::Value(v) => acc = Some(acc.map_or(v, |a| a.hull(&v))),
            CellEval::Vacuous | CellEval::Outside => {}
        }
    }
    Ok(acc.map_or(CellEval::Outside, CellEval::Value))
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossPointCheck {
    pub beta: Interval,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_point: Option<CrossPoint>,
    /// `1 - max(|∇w|², |∇v|²)` on the cross-point box.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<Interval>,
    pub verdict: Verdict,
    pub note: String,
}

fn cross_point_check(node: &StripNode<'_>) -> CrossPointCheck {
    let fail = |verdict, note: String| CrossPointCheck { beta: node.beta, cross_point: None, margin: None, verdict, note };
    let ctx = match node.ctx() {
        Ok(c) => c,
        Err(e) => return fail(Verdict::Inconclusive, e.to_string()),
    };
    match find_cross_point(ctx) {
        Ok(None) => fail(Verdict::Pass, "w > 0 on the closed unit ball; no w-branch".into()),
        Err(e) => fail(Verdict::Inconclusive, e.to_string()),
        Ok(Some(cp)) => {
            let margin = grad_sq_w(cp.r, cp.t, &ctx.hs).and_then(|gw| {
                let gv = ctx.g_fun(cp.t)?;
                Ok(Interval::new(1.0 - gw.hi().max(gv.hi()), 1.0 - gw.lo().max(gv.lo())).widen_down())
            });
            let (margin, verdict, note) = match margin {
                Ok(m) if m.lo() > 0.0 => (Some(m), Verdict::Pass, "both gradients below 1".to_string()),
                Ok(m) if m.hi() <= 0.0 => (Some(m), Verdict::Fail, "gradient at least 1".to_string()),
                Ok(m) => (Some(m), Verdict::Inconclusive, "gradient bound straddles 1".to_string()),
                Err(e) => (None, Verdict::Inconclusive, e.to_string()),
            };
            CrossPointCheck { beta: node.beta, cross_point: Some(cp), margin, verdict, note }
        }
    }
}

/// Cross-point checks on the strip, halving it while undecided.
fn cross_point_checks(node: &StripNode<'_>, depth: usize, out: &mut Vec<CrossPointCheck>) {
    let check = cross_point_check(node);
    if check.verdict == Verdict::Inconclusive && depth > 0 {
        for child in node.children() {
            cross_point_checks(child, depth - 1, out);
        }
    } else {
        out.push(check);
    }
}

/// Condition (3): cross point, paper rectangle and a full sweep of the free
/// boundary inside the unit ball.
pub fn verify_condition3(row: &SupersolutionRow, c_sub: Interval, cfg: &Cond3Config) -> Result<(GridCertificate, Vec<CrossPointCheck>)> {
    row.validate()?;
    let beta = ConeParams::new(c_sub)?.beta;
    let sweep_refine = Refinement { max_depth: cfg.sweep_depth, split: Split::Both, keep_cells: cfg.keep_cells };
    let rect_refine = Refinement { max_depth: cfg.rectangle_depth, split: Split::Both, keep_cells: cfg.keep_cells };
    let results: Vec<(Summary, Vec<CrossPointCheck>)> = beta
        .split(cfg.n_beta.max(1))
        .into_par_iter()
        .map(|strip| {
            let node = StripNode::new(row, strip);
            let mut summary = Summary::default();
            let mut checks = Vec::new();
            cross_point_checks(&node, cfg.beta_depth, &mut checks);
            let verified: Vec<&CrossPoint> = checks.iter().filter_map(|c| c.cross_point.as_ref()).collect();
            if !verified.is_empty() && checks.iter().all(|c| c.cross_point.is_some()) {
                // rectangle x in [-1, -r0], y in [0, y0], widened over the halves
                let r0 = verified.iter().map(|c| c.r.lo()).fold(f64::INFINITY, f64::min);
                let y0 = verified.iter().map(|c| c.y0.hi()).fold(0.0, f64::max).min(1.0);
                let eval = |cell: [Interval; 2]| strip_eval(&node, cell, cfg.beta_depth, &rectangle_eval);
                let yc = Interval::new(0.0, y0).split(cfg.rectangle.1);
                let cells = Interval::new(-1.0, -r0).split(cfg.rectangle.0).into_iter().flat_map(|x| yc.iter().map(move |&y| [x, y]));
                summary.merge(certify_cells(c_sub, cells, &eval, rect_refine, cfg.stop_after_failures));
            }
            let eval = |cell: [Interval; 2]| strip_eval(&node, cell, cfg.beta_depth, &sweep_eval);
            let ys = Interval::new(0.0, 1.0).split(cfg.sweep.1);
            let cells = Interval::new(-1.0, 1.0).split(cfg.sweep.0).into_iter().flat_map(|x| ys.iter().map(move |&y| [x, y]));
            summary.merge(certify_cells(c_sub, cells, &eval, sweep_refine, cfg.stop_after_failures));
            (summary, checks)
        })
        .collect();
    let mut summary = Summary::default();
    let mut checks = Vec::new();
    let mut verdict = Verdict::Pass;
    for (s, c) in results {
        for check in &c {
            verdict = verdict.and(if check.verdict == Verdict::Inconclusive { Verdict::Fail } else { check.verdict });
        }
        summary.merge(s);
        checks.extend(c);
    }
    verdict = verdict.and(summary.verdict());
    let mut parameters = BTreeMap::new();
    parameters.insert("epsilon".into(), json!(row.epsilon));
    parameters.insert("a".into(), json!(row.a));
    parameters.insert("n_beta".into(), json!(cfg.n_beta));
    parameters.insert("beta_depth".into(), json!(cfg.beta_depth));
    parameters.insert("sweep".into(), json!(cfg.sweep));
    parameters.insert("sweep_depth".into(), json!(cfg.sweep_depth));
    parameters.insert("rectangle".into(), json!(cfg.rectangle));
    parameters.insert("cross_points".into(), serde_json::to_value(&checks)?);
    let cert = GridCertificate {
        claim: format!("row {} condition (3): |grad_c p_c| < 1 on the free boundary in B_1", row.id),
        quantity: "1 - |grad_c|^2".into(),
        axes: ["x".into(), "y".into()],
        c_subintervals: vec![SubintervalResult {
            c: c_sub,
            anchor: None,
            verdict,
            tally: summary.tally,
            min_lower_bound: summary.global_min.as_ref().and_then(|m| m.value).map(|v| v.lo()),
            error: None,
        }],
        grid: cfg.sweep,
        max_depth: cfg.sweep_depth,
        parameters,
        summary,
        verdict,
    };
    Ok((cert, checks))
}

#[derive(Clone, Debug, Serialize)]
pub struct RowResult {
    pub row: u32,
    pub condition1: Vec<GridCertificate>,
    pub condition3: Vec<GridCertificate>,
    pub condition2: &'static str,
    pub verdict: Verdict,
}

pub const CONDITION2_NOTE: &str = "analytic, out of scope: the minimum of two supersolutions is a supersolution";

/// Conditions (1) and (3) over every c-subinterval of a row.
pub fn verify_row(row: &SupersolutionRow, c1: &Cond1Config, c3: &Cond3Config) -> Result<RowResult> {
    let mut condition1 = Vec::new();
    let mut condition3 = Vec::new();
    let mut verdict = Verdict::Pass;
    for c in row.c_boxes()? {
        let a = verify_condition1(row, c, c1)?;
        let (b, _) = verify_condition3(row, c, c3)?;
        verdict = verdict.and(a.verdict).and(b.verdict);
        condition1.push(a);
        condition3.push(b);
    }
    Ok(RowResult { row: row.id, condition1, condition3, condition2: CONDITION2_NOTE, verdict })
}

trait WidenDown {
    fn widen_down(self) -> Interval;
}

impl WidenDown for Interval {
    /// Guard a lower endpoint assembled from separately rounded parts.
    fn widen_down(self) -> Interval {
        Interval::new(self.lo().next_down(), self.hi().next_up())
    }
}

pub use qs::{verify_qs, QsRange};

pub mod qs;

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: u32) -> SupersolutionRow {
        default_rows().row(id).unwrap().clone()
    }

    #[test]
    fn rows_parse_and_match() {
        let rows = default_rows();
        assert_eq!(rows.rows.len(), 4);
        assert_eq!(rows.row(2).unwrap().c_boxes().unwrap().len(), 11);
        assert!(parse_rows(DEFAULT_ROWS_JSON, false).is_ok());
        let edited = DEFAULT_ROWS_JSON.replace("0.999", "0.5");
        assert!(matches!(parse_rows(&edited, false), Err(Error::Config(_))));
        assert!(parse_rows(&edited, true).is_ok());
    }

    #[test]
    fn alpha_is_exact_at_flat_cone() {
        for n in 0..4u32 {
            let a = alpha(n, Interval::ZERO).unwrap();
            assert!(a.contains(n as f64));
            assert!(a.width() <= 2.0 * f64::EPSILON * (n as f64).max(1.0));
        }
        let a = alpha(1, Interval::point(0.3)).unwrap();
        let b = alpha(2, Interval::point(0.3)).unwrap();
        assert!(a.hi() < b.lo());
    }

    #[test]
    fn row1_w_at_unit_radius() {
        let hs = HarmonicSum::new(ConeParams::new(Interval::point(0.2)).unwrap(), row(1).coefficients().unwrap()).unwrap();
        let v = w(Interval::ONE, Interval::point(0.5), &hs).unwrap();
        assert!(v.contains(0.999 + 0.31 * 0.5));
        let at_one = w(Interval::point(0.7), Interval::ONE, &hs).unwrap();
        let expect = 0.999 + 0.31 * 0.7f64.powf(hs.alphas[1].mid());
        assert!((at_one.mid() - expect).abs() < 1e-12);
    }

    #[test]
    fn flat_row1_gradient_is_constant() {
        let hs = HarmonicSum::new(ConeParams::new(Interval::ZERO).unwrap(), row(1).coefficients().unwrap()).unwrap();
        for (r, t) in [(0.3, -0.7), (0.9, 0.2), (1.0, 1.0)] {
            let g = grad_sq_w(Interval::point(r), Interval::point(t), &hs).unwrap();
            assert!(g.contains(0.31 * 0.31) && g.width() < 1e-14, "{g:?}");
        }
    }

    #[test]
    fn v_gradient_on_zero_set_matches_g_fun() {
        let ctx = StripContext::new(&row(2), ConeParams::new(Interval::point(0.35)).unwrap().beta).unwrap();
        let t = Interval::point(ctx.t_c.mid() - 0.05);
        let f = ctx.series(Which::F, t, 0).unwrap();
        let g = ctx.series(Which::G, t, 0).unwrap();
        // r on {v = 0}: r^{3/2} = -eps g / f
        let r = Interval::point((-ctx.eps * g.mid() / f.mid()).powf(2.0 / 3.0));
        let gv = ctx.grad_sq_v(r, t).unwrap();
        let gf = ctx.g_fun(t).unwrap();
        assert!((gv.mid() - gf.mid()).abs() < 1e-9, "{gv:?} {gf:?}");
        let at_root = ctx.g_fun(ctx.t_c).unwrap();
        assert!(at_root.contains(1.0) || (at_root.mid() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn singular_end_bounds_are_consistent() {
        let ctx = StripContext::new(&row(1), ConeParams::new(Interval::point(0.0)).unwrap().beta).unwrap();
        // f = t at c = 0, so v(1, t) = t + 0.2 g(t) is large near -1
        let b = ctx.v_bounds(Interval::ONE, Interval::new(-1.0, -0.96)).unwrap();
        assert!(b.lo.is_finite() && b.hi == f64::INFINITY);
        let series = ctx.v_bounds(Interval::ONE, Interval::point(-0.95)).unwrap();
        assert!(b.lo <= series.hi);
    }

    #[test]
    fn polar_box_contains_samples() {
        let (r, t) = polar_box(Interval::new(-0.5, -0.4), Interval::new(0.1, 0.3)).unwrap();
        for (x, y) in [(-0.5, 0.1), (-0.4, 0.3), (-0.45, 0.2)] {
            let rr = f64::hypot(x, y);
            assert!(r.contains(rr) && t.contains(x / rr));
        }
        let (r, t) = polar_box(Interval::new(-0.1, 0.1), Interval::new(0.0, 0.1)).unwrap();
        assert_eq!(r.lo(), 0.0);
        assert_eq!(t, Interval::new(-1.0, 1.0));
    }
}
