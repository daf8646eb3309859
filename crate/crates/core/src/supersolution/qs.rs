//! The one-parameter comparison families placing any solution below `p_c`.
//!
//! For `c ∈ [0, 0.3]`: `q_s = max{0, s a_0 + 0.8 a_1 r^{α_1} h_1(t)}` with the
//! first row's coefficients; checked are `|∇_c q_s| < 1` on `B_1`,
//! `supp q_{0.22} ⊂ supp p_c` and `u_c(1, t) <= q_{0.22}(1, t)`.
//!
//! For `c ∈ [0.3, 0.4]`: `q_s = max{0, s_1(s) a_0 + s_2(s) Σ_{n>=1} a_n h_n(t)}`
//! with the second row's coefficients, both as written (no radial factor) and
//! with `r^{α_n}` inserted; checked are the gradient bound for every `s`,
//! `q_0 <= p_c` and `q_0(1, t) >= u_c(1, t)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{default_rows, legendre_dh, legendre_h, pow_nonneg, w_closed, HarmonicSum, StripContext, SupersolutionRow, Which};
use crate::certificate::{certify_cells, CellEval, GridCertificate, Refinement, Split, SubintervalResult, Summary, Verdict};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::subsolution::ConeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QsRange {
    /// `0 <= c <= 0.3`.
    Low,
    /// `0.3 <= c <= 0.4`.
    High,
}

impl QsRange {
    pub fn c_range(self) -> Interval {
        match self {
            QsRange::Low => Interval::new(0.0, 0.3f64.next_up()),
            QsRange::High => Interval::new(0.3f64.next_down(), 0.4f64.next_up()),
        }
    }

    fn row_id(self) -> u32 {
        match self {
            QsRange::Low => 1,
            QsRange::High => 2,
        }
    }
}

impl FromStr for QsRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" | "0-0.3" | "0,0.3" => Ok(QsRange::Low),
            "high" | "0.3-0.4" | "0.3,0.4" => Ok(QsRange::High),
            _ => Err(Error::Config(format!("unknown c range {s:?}; use 0-0.3 or 0.3-0.4"))),
        }
    }
}

impl fmt::Display for QsRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QsRange::Low => "0-0.3",
            QsRange::High => "0.3-0.4",
        })
    }
}

/// Whether the second family carries the radial factors `r^{α_n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QsForm {
    AsWritten,
    Harmonic,
}

type Piece = (f64, f64, fn(Interval) -> Interval);

const S1_PIECES: [Piece; 5] = [
    (0.0, 1.0, |s| s * 0.65 + Interval::point(0.85)),
    (1.0, 2.0, |_| Interval::point(1.5)),
    (2.0, 3.0, |s| s * 1.5 - Interval::point(1.5)),
    (3.0, 4.0, |_| Interval::point(3.0)),
    (4.0, f64::INFINITY, |s| s - Interval::ONE),
];

// the last piece is printed "s <= 4"; read as s >= 4, matching its neighbour at s = 4
const S2_PIECES: [Piece; 5] = [
    (0.0, 1.0, |_| Interval::point(0.95)),
    (1.0, 2.0, |s| s * -0.15 + Interval::point(1.1)),
    (2.0, 3.0, |_| Interval::point(0.8)),
    (3.0, 4.0, |s| s * -0.1 + Interval::point(1.1)),
    (4.0, f64::INFINITY, |_| Interval::point(0.7)),
];

fn piecewise(pieces: &[Piece], s: Interval) -> Result<Interval> {
    if s.lo() < 0.0 {
        return Err(Error::Domain(format!("family parameter {s:?} negative")));
    }
    let mut out: Option<Interval> = None;
    for &(a, b, f) in pieces {
        if let Ok(part) = s.intersect(&Interval::new(a, b)) {
            let v = f(part);
            out = Some(out.map_or(v, |o| o.hull(&v)));
        }
    }
    out.ok_or_else(|| Error::Domain(format!("no piece covers {s:?}")))
}

pub fn s1(s: Interval) -> Result<Interval> {
    piecewise(&S1_PIECES, s)
}

pub fn s2(s: Interval) -> Result<Interval> {
    piecewise(&S2_PIECES, s)
}

/// Enclosure of `s_2` over every `s >= 0`.
pub fn s2_range() -> Interval {
    S2_PIECES.iter().fold(None::<Interval>, |acc, &(a, b, f)| {
        let v = f(Interval::new(a, if b.is_finite() { b } else { a }));
        Some(acc.map_or(v, |o| o.hull(&v)))
    })
    .expect("pieces nonempty")
}

#[derive(Clone, Debug, Serialize)]
pub struct QsConfig {
    pub n_r: usize,
    pub n_t: usize,
    pub n_beta: usize,
    pub max_depth: usize,
}

impl Default for QsConfig {
    fn default() -> Self {
        QsConfig { n_r: 32, n_t: 64, n_beta: 4, max_depth: 6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QsCheck {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<QsForm>,
    pub certificate: GridCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct QsCertificate {
    pub range: QsRange,
    pub row: u32,
    pub checks: Vec<QsCheck>,
    pub verdict: Verdict,
}

/// Certify `eval > 0` on root cells `axes.0 × axes.1` split into `grid`,
/// once per `β` strip of `c_range`.
fn grid_check<F>(
    claim: String,
    quantity: &str,
    row: &SupersolutionRow,
    c_range: Interval,
    axes: ([&str; 2], Interval, Interval),
    grid: (usize, usize),
    cfg: &QsConfig,
    eval: F,
) -> Result<GridCertificate>
where
    F: Fn(&StripContext, [Interval; 2]) -> Result<CellEval> + Sync,
{
    let beta = ConeParams::new(c_range)?.beta;
    let refine = Refinement { max_depth: cfg.max_depth, split: Split::Both, keep_cells: false };
    let parts: Vec<(Summary, Option<String>)> = beta
        .split(cfg.n_beta.max(1))
        .into_par_iter()
        .map(|strip| match StripContext::new(row, strip) {
            Err(e) => (Summary::default(), Some(e.to_string())),
            Ok(ctx) => {
                let cells: Vec<[Interval; 2]> = axes
                    .1
                    .split(grid.0)
                    .into_iter()
                    .flat_map(|a| axes.2.split(grid.1).into_iter().map(move |b| [a, b]))
                    .collect();
                let f = |cell: [Interval; 2]| eval(&ctx, cell);
                (certify_cells(c_range, cells, &f, refine, Some(1)), None)
            }
        })
        .collect();
    let mut summary = Summary::default();
    let mut verdict = Verdict::Pass;
    let mut errors = Vec::new();
    for (s, e) in parts {
        if let Some(e) = e {
            verdict = verdict.and(Verdict::Inconclusive);
            errors.push(e);
        }
        summary.merge(s);
    }
    verdict = verdict.and(summary.verdict());
    let mut parameters = BTreeMap::new();
    parameters.insert("row".into(), json!(row.id));
    parameters.insert("n_beta".into(), json!(cfg.n_beta));
    Ok(GridCertificate {
        claim,
        quantity: quantity.into(),
        axes: [axes.0[0].into(), axes.0[1].into()],
        c_subintervals: vec![SubintervalResult {
            c: c_range,
            anchor: None,
            verdict,
            tally: summary.tally,
            min_lower_bound: summary.global_min.as_ref().and_then(|m| m.value).map(|v| v.lo()),
            error: if errors.is_empty() { None } else { Some(errors.join("; ")) },
        }],
        grid,
        max_depth: cfg.max_depth,
        parameters,
        summary,
        verdict,
    })
}

/// `x_0 a_0 + x Σ_{n>=1} a_n [r^{α_n}] h_n(t)`.
fn family(r: Interval, t: Interval, hs: &HarmonicSum, lead: Interval, scale: Interval, form: QsForm) -> Result<Interval> {
    let h = legendre_h(t);
    let mut s = Interval::ZERO;
    for n in 1..4 {
        let radial = match form {
            QsForm::Harmonic => pow_nonneg(r, hs.alphas[n])?,
            QsForm::AsWritten => Interval::ONE,
        };
        s = s + hs.a[n] * radial * h[n];
    }
    Ok(lead * hs.a[0] + scale * s)
}

/// `|∇_c|²` of `x Σ_{n>=1} a_n [r^{α_n}] h_n(t)`.
fn family_grad_sq(r: Interval, t: Interval, hs: &HarmonicSum, scale: Interval, form: QsForm) -> Result<Interval> {
    match form {
        QsForm::Harmonic => {
            let mut scaled = *hs;
            scaled.a[0] = Interval::ZERO;
            for n in 1..4 {
                scaled.a[n] = hs.a[n] * scale;
            }
            super::grad_sq_w(r, t, &scaled)
        }
        QsForm::AsWritten => {
            let dh = legendre_dh(t);
            let mut d = Interval::ZERO;
            for n in 1..4 {
                d = d + hs.a[n] * dh[n];
            }
            let ang = (Interval::ONE - t.sqr()) * (scale * d).sqr();
            if ang == Interval::ZERO {
                return Ok(Interval::ZERO);
            }
            if !(r.lo() > 0.0) {
                return Err(Error::BoundUnavailable(format!("angular gradient unbounded as r -> 0 on t = {t:?}")));
            }
            ang.div(r.sqr())
        }
    }
}

/// `p_c > 0` lower/upper data: `min(v, w)`.
fn p_min(ctx: &StripContext, r: Interval, t: Interval) -> Result<(f64, f64)> {
    let wv = w_closed(r, t, &ctx.hs)?;
    let v = ctx.v_bounds(r, t)?;
    Ok((v.lo.min(wv.lo()), v.hi.min(wv.hi())))
}

/// `u_c(1, t) = max(f_c(t), 0)` upper bound; zero beyond `t_c` on the left.
fn u_upper(ctx: &StripContext, t: Interval) -> Result<Option<f64>> {
    if t.hi() < ctx.t_c.lo() {
        return Ok(None);
    }
    let t = t.intersect(&Interval::new(ctx.t_c.lo().max(super::SERIES_T_MIN), 1.0))?;
    Ok(Some(ctx.series(Which::F, t, 0)?.hi().max(0.0)))
}

const UNIT_R: Interval = Interval::ONE;

fn qs_hs(ctx: &StripContext) -> &HarmonicSum {
    &ctx.hs
}

pub fn verify_qs(range: QsRange, cfg: &QsConfig) -> Result<QsCertificate> {
    let rows = default_rows();
    let row = rows.row(range.row_id())?.clone();
    let c_range = range.c_range();
    let disk = (["r", "t"], Interval::new(0.0, 1.0), Interval::new(-1.0, 1.0));
    let circle = (["t", "-"], Interval::new(-1.0, 1.0), Interval::ZERO);
    let disk_grid = (cfg.n_r, cfg.n_t);
    let circle_grid = (4 * cfg.n_t, 1);
    let mut checks = Vec::new();
    match range {
        QsRange::Low => {
            let s = Interval::point(0.22);
            let k = Interval::point(0.8);
            let lin = |ctx: &StripContext, r: Interval, t: Interval| -> Result<Interval> {
                let hs = qs_hs(ctx);
                Ok(s * hs.a[0] + k * hs.a[1] * pow_nonneg(r, hs.alphas[1])? * t)
            };
            checks.push(QsCheck {
                name: "gradient".into(),
                form: None,
                certificate: grid_check(
                    "|grad_c q_s| < 1 on B_1 for every s".into(),
                    "1 - |grad_c q_s|^2",
                    &row,
                    c_range,
                    disk,
                    disk_grid,
                    cfg,
                    |ctx, cell| {
                        let g = family_grad_sq(cell[0], cell[1], &single_term(ctx), k, QsForm::Harmonic)?;
                        Ok(CellEval::Value(Interval::ONE - g))
                    },
                )?,
            });
            checks.push(QsCheck {
                name: "support".into(),
                form: None,
                certificate: grid_check(
                    "supp q_0.22 inside supp p_c".into(),
                    "min(v_c, w_c) where q_0.22 > 0",
                    &row,
                    c_range,
                    disk,
                    disk_grid,
                    cfg,
                    |ctx, cell| {
                        if lin(ctx, cell[0], cell[1])?.hi() <= 0.0 {
                            return Ok(CellEval::Vacuous);
                        }
                        let (lo, hi) = p_min(ctx, cell[0], cell[1])?;
                        Ok(CellEval::Value(Interval::new(lo, hi.max(lo))))
                    },
                )?,
            });
            checks.push(QsCheck {
                name: "boundary".into(),
                form: None,
                certificate: grid_check(
                    "u_c(1,t) <= q_0.22(1,t)".into(),
                    "q_0.22(1,t) - u_c(1,t)",
                    &row,
                    c_range,
                    circle,
                    circle_grid,
                    cfg,
                    |ctx, cell| {
                        let Some(u) = u_upper(ctx, cell[0])? else { return Ok(CellEval::Vacuous) };
                        let q = lin(ctx, UNIT_R, cell[0])?;
                        let q = Interval::new(q.lo().max(0.0), q.hi().max(0.0));
                        Ok(CellEval::Value(q - u))
                    },
                )?,
            });
        }
        QsRange::High => {
            let s2max = Interval::point(s2_range().hi());
            let lead0 = s1(Interval::ZERO)?;
            let scale0 = s2(Interval::ZERO)?;
            for form in [QsForm::AsWritten, QsForm::Harmonic] {
                checks.push(QsCheck {
                    name: "gradient".into(),
                    form: Some(form),
                    certificate: grid_check(
                        format!("|grad_c q_s| < 1 on B_1 for every s ({form:?})"),
                        "1 - max_s s_2(s)^2 |grad_c sum|^2",
                        &row,
                        c_range,
                        disk,
                        disk_grid,
                        cfg,
                        move |ctx, cell| {
                            let g = family_grad_sq(cell[0], cell[1], qs_hs(ctx), s2max, form)?;
                            Ok(CellEval::Value(Interval::ONE - g))
                        },
                    )?,
                });
                checks.push(QsCheck {
                    name: "below".into(),
                    form: Some(form),
                    certificate: grid_check(
                        format!("q_0 <= p_c on B_1 ({form:?})"),
                        "min(v_c, w_c) - q_0 where q_0 > 0",
                        &row,
                        c_range,
                        disk,
                        disk_grid,
                        cfg,
                        move |ctx, cell| {
                            let q = family(cell[0], cell[1], qs_hs(ctx), lead0, scale0, form)?;
                            if q.hi() <= 0.0 {
                                return Ok(CellEval::Vacuous);
                            }
                            let (lo, hi) = p_min(ctx, cell[0], cell[1])?;
                            let d = Interval::new(lo, hi.max(lo)) - q;
                            Ok(CellEval::Value(d))
                        },
                    )?,
                });
            }
            // both forms agree on r = 1
            checks.push(QsCheck {
                name: "boundary".into(),
                form: None,
                certificate: grid_check(
                    "q_0(1,t) >= u_c(1,t)".into(),
                    "q_0(1,t) - u_c(1,t)",
                    &row,
                    c_range,
                    circle,
                    circle_grid,
                    cfg,
                    move |ctx, cell| {
                        let Some(u) = u_upper(ctx, cell[0])? else { return Ok(CellEval::Vacuous) };
                        let q = family(UNIT_R, cell[0], qs_hs(ctx), lead0, scale0, QsForm::Harmonic)?;
                        let q = Interval::new(q.lo().max(0.0), q.hi().max(0.0));
                        Ok(CellEval::Value(q - u))
                    },
                )?,
            });
        }
    }
    let verdict = checks.iter().fold(Verdict::Pass, |v, c| v.and(c.certificate.verdict));
    Ok(QsCertificate { range, row: row.id, checks, verdict })
}

/// The row's sum restricted to its `n = 1` term.
fn single_term(ctx: &StripContext) -> HarmonicSum {
    let mut hs = ctx.hs;
    hs.a = [Interval::ZERO, hs.a[1], Interval::ZERO, Interval::ZERO];
    hs
}
