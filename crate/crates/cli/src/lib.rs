//! Argument parsing and command drivers for the `conecert` binary.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use conecert_core::cheb::{ellipse_modulus_bound, Rect, Which, PUBLISHED_RHO};
use conecert_core::critical::{criterion, find_c0, is_strictly_increasing, monotonicity_probe};
use conecert_core::report::{report_schema, Claim, C_RANGE_NOTE, TABLE1_PUBLISHED};
use conecert_core::subsolution::{verify_subsolution, ConeParams, Mode, SubsolutionConfig};
use conecert_core::supersolution::qs::{verify_qs, QsConfig, QsRange};
use conecert_core::supersolution::{
    default_rows, parse_rows, verify_condition1, verify_condition3, Cond1Config, Cond3Config, Field, HarmonicSum,
    RowsConfig, StripContext, Which as Series, CONDITION2_NOTE,
};
use conecert_core::{Error, Interval, Report, Result, Verdict};

#[derive(Debug, Parser)]
#[command(name = "conecert", version, about = "Validated-numerics certificates for free boundaries through cone vertices")]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "CONECERT_THREADS", global = true)]
    pub threads: Option<usize>,

    /// Write the report (or CSV) here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enclose the critical cone parameter c0.
    Critical(CriticalArgs),
    /// Certify g³G' > 0 beyond t_c over a c range.
    Subsolution(SubsolutionArgs),
    /// Certify the supersolution conditions for coefficient-table rows.
    Supersolution(SupersolutionArgs),
    /// Check the comparison families that place solutions below p_c.
    Qs(QsArgs),
    /// Ellipse bounds on f, g and derivatives beside the published table.
    Table1(Table1Args),
    /// Emit non-rigorous midpoint samples of v, w, G and |∇v|² as CSV.
    Profile(ProfileArgs),
    /// Print the JSON schema of reports.
    ReportSchema,
}

/// `a,b` as an ordered pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Range(pub f64, pub f64);

impl FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b; got {s:?}"))?;
        let a: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
        let b: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
        if !(a <= b) {
            return Err(format!("empty range [{a}, {b}]"));
        }
        Ok(Range(a, b))
    }
}

/// `NxM` grid dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid(pub usize, pub usize);

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM; got {s:?}"))?;
        let a: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
        let b: usize = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
        if a == 0 || b == 0 {
            return Err("grid dimensions must be positive".into());
        }
        Ok(Grid(a, b))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CriticalArgs {
    /// Target enclosure width.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Bracket searched for the sign change.
    #[arg(long, default_value = "0.55,0.62")]
    pub search: Range,
}

#[derive(Debug, Args, Serialize)]
pub struct SubsolutionArgs {
    #[arg(long, default_value = "0,0.58828")]
    pub c: Range,
    /// Root cells per c-subinterval as (t)x(beta).
    #[arg(long, default_value = "512x8")]
    pub grid: Grid,
    /// Number of c-subintervals.
    #[arg(long, default_value_t = 256)]
    pub c_subintervals: usize,
    #[arg(long, default_value = "direct")]
    pub mode: String,
    /// Maximum bisection depth per root cell.
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// Use the interpolation route with the published ellipse parameters.
    #[arg(long)]
    pub paper_scale: bool,
    /// Directory for cached interpolation models.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SupersolutionArgs {
    /// Row id or `all`.
    #[arg(long, default_value = "all")]
    pub row: String,
    /// Condition (1) root cells as (t)x(beta) per c-subinterval.
    #[arg(long, default_value = "2000x200")]
    pub grid: Grid,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Condition (3) sweep root cells over [-1,1]x[0,1].
    #[arg(long, default_value = "64x32")]
    pub sweep: Grid,
    /// Alternative rows file; must match the checked-in table unless allowed.
    #[arg(long)]
    pub rows: Option<PathBuf>,
    #[arg(long)]
    pub allow_custom_rows: bool,
    /// Condition (1) at the published 10000x1000 grid.
    #[arg(long)]
    pub paper_scale: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct QsArgs {
    /// `0-0.3`, `0.3-0.4` or `all`.
    #[arg(long, default_value = "all")]
    pub range: String,
    /// Root cells as (r)x(t).
    #[arg(long, default_value = "32x64")]
    pub grid: Grid,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Table1Args {
    /// Ellipse parameters (rho_t, rho_beta).
    #[arg(long, default_value = "2.9,30")]
    pub rho: Range,
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub eps: f64,
    /// Samples as (r)x(t).
    #[arg(long, default_value = "20x101")]
    pub grid: Grid,
    /// Coefficient row for w; defaults to the row covering c.
    #[arg(long)]
    pub row: Option<u32>,
}

/// What a command produced.
pub enum Output {
    Report(Report),
    Csv(String),
    Json(serde_json::Value),
}

impl Output {
    pub fn exit_code(&self) -> i32 {
        match self {
            Output::Report(r) => r.verdict.exit_code(),
            _ => 0,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Output> {
    let start = Instant::now();
    let mut out = match &cli.command {
        Command::Critical(a) => Output::Report(cmd_critical(a)?),
        Command::Subsolution(a) => Output::Report(cmd_subsolution(a)?),
        Command::Supersolution(a) => Output::Report(cmd_supersolution(a)?),
        Command::Qs(a) => Output::Report(cmd_qs(a)?),
        Command::Table1(a) => Output::Report(cmd_table1(a)?),
        Command::Profile(a) => Output::Csv(cmd_profile(a)?),
        Command::ReportSchema => Output::Json(report_schema()),
    };
    if let Output::Report(r) = &mut out {
        r.wall_time_s = start.elapsed().as_secs_f64();
    }
    Ok(out)
}

pub fn cmd_critical(a: &CriticalArgs) -> Result<Report> {
    let mut report = Report::new("critical", a);
    let search = Interval::try_new(a.search.0, a.search.1)?;
    match find_c0(search, a.tol) {
        Ok(c0) => {
            let ends = [criterion(Interval::point(c0.lo()))?, criterion(Interval::point(c0.hi()))?];
            report.push(Claim::new(
                "c0_enclosure",
                Verdict::Pass,
                json!({
                    "enclosure": c0,
                    "width": c0.width(),
                    "criterion_at_lo": ends[0].diff,
                    "criterion_at_hi": ends[1].diff,
                }),
            ));
            let probe = monotonicity_probe(search, 32)?;
            report.notes.push(format!(
                "non-rigorous midpoint probe of the criterion on {} samples: strictly increasing = {}",
                probe.len(),
                is_strictly_increasing(&probe)
            ));
        }
        Err(e @ (Error::CertificationFailure(_) | Error::BoundUnavailable(_))) => {
            report.push(Claim::new("c0_enclosure", Verdict::Inconclusive, json!({ "error": e.to_string() })));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

pub fn cmd_subsolution(a: &SubsolutionArgs) -> Result<Report> {
    let mut cfg = SubsolutionConfig {
        c_range: (a.c.0, a.c.1),
        n_c: a.c_subintervals,
        n_t: a.grid.0,
        n_beta: a.grid.1,
        max_depth: a.depth,
        mode: a.mode.parse::<Mode>()?,
        model_cache: a.cache_dir.clone(),
        ..SubsolutionConfig::default()
    };
    if a.paper_scale {
        cfg.mode = Mode::Interp;
        cfg.interp_rho = PUBLISHED_RHO;
    }
    cfg.validate()?;
    let mut report = Report::new("subsolution", &cfg);
    let cert = verify_subsolution(&cfg)?;
    report.push(Claim::new("g3_g_prime_positive", cert.verdict, &cert));
    Ok(report)
}

fn load_rows(a: &SupersolutionArgs) -> Result<RowsConfig> {
    match &a.rows {
        None => Ok(default_rows()),
        Some(p) => parse_rows(&std::fs::read_to_string(p)?, a.allow_custom_rows),
    }
}

pub fn cmd_supersolution(a: &SupersolutionArgs) -> Result<Report> {
    let rows = load_rows(a)?;
    let selected: Vec<_> = if a.row == "all" {
        rows.rows.iter().collect()
    } else {
        let id: u32 = a.row.parse().map_err(|_| Error::Config(format!("row must be an id or `all`, got {:?}", a.row)))?;
        vec![rows.row(id)?]
    };
    let c1 = Cond1Config {
        n_t: if a.paper_scale { 10_000 } else { a.grid.0 },
        n_beta: if a.paper_scale { 1_000 } else { a.grid.1 },
        max_depth: a.depth,
        ..Cond1Config::default()
    };
    let c3 = Cond3Config { sweep: (a.sweep.0, a.sweep.1), ..Cond3Config::default() };
    let mut report = Report::new("supersolution", json!({ "args": a, "condition1": &c1, "condition3": &c3, "rows": &rows }));
    report.notes.push(C_RANGE_NOTE.into());
    report.notes.push(format!("condition (2): {CONDITION2_NOTE}"));
    for row in selected {
        for c in row.c_boxes()? {
            let cert = verify_condition1(row, c, &c1)?;
            report.push(Claim::new(format!("row{}_condition1_c[{},{}]", row.id, c.lo(), c.hi()), cert.verdict, &cert));
            let (cert, checks) = verify_condition3(row, c, &c3)?;
            // the certificate verdict already folds in the cross-point checks
            let detail = json!({ "certificate": &cert, "cross_points": checks });
            report.push(Claim::new(format!("row{}_condition3_c[{},{}]", row.id, c.lo(), c.hi()), cert.verdict, detail));
        }
    }
    Ok(report)
}

pub fn cmd_qs(a: &QsArgs) -> Result<Report> {
    let ranges = match a.range.as_str() {
        "all" => vec![QsRange::Low, QsRange::High],
        s => vec![s.parse::<QsRange>()?],
    };
    let cfg = QsConfig { n_r: a.grid.0, n_t: a.grid.1, max_depth: a.depth, ..QsConfig::default() };
    let mut report = Report::new("qs", json!({ "args": a, "config": &cfg }));
    for range in ranges {
        let q = verify_qs(range, &cfg)?;
        for check in &q.checks {
            let form = check.form.map(|f| format!("_{}", serde_json::to_value(f).unwrap().as_str().unwrap_or(""))).unwrap_or_default();
            report.push(Claim::new(format!("c{range}_{}{form}", check.name), check.certificate.verdict, &check.certificate));
        }
    }
    Ok(report)
}

pub fn cmd_table1(a: &Table1Args) -> Result<Report> {
    let rho = (a.rho.0, a.rho.1);
    let domain = Rect::published();
    let mut report = Report::new("table1", json!({ "domain": domain, "rho": rho }));
    let mut verdict = Verdict::Pass;
    let mut rows = Vec::new();
    for j in 0..3 {
        let f = ellipse_modulus_bound(domain, rho, Which::F, j)?;
        let g = ellipse_modulus_bound(domain, rho, Which::G, j)?;
        let ours = f.modulus_bound.max(g.modulus_bound);
        if !ours.is_finite() {
            verdict = Verdict::Fail;
        }
        rows.push(json!({
            "derivative": j,
            "ours_f": f.modulus_bound,
            "ours_g": g.modulus_bound,
            "ours": ours,
            "published": TABLE1_PUBLISHED[j],
            "k": f.k,
            "r": f.r,
        }));
    }
    report.push(Claim::new("ellipse_bounds_finite", verdict, rows));
    report.notes.push("published bounds use a different truncation index, beta-domain and remainder; agreement is not expected".into());
    Ok(report)
}

fn covering_row(rows: &RowsConfig, c: f64) -> Option<u32> {
    rows.rows.iter().find(|r| r.c_boxes().map(|b| b.iter().any(|i| i.contains(c))).unwrap_or(false)).map(|r| r.id)
}

/// Midpoint samples; cells that cannot be evaluated are left empty.
pub fn cmd_profile(a: &ProfileArgs) -> Result<String> {
    let params = ConeParams::new(Interval::point(a.c))?;
    let rows = default_rows();
    let mut row = match a.row.or_else(|| covering_row(&rows, a.c)) {
        Some(id) => rows.row(id)?.clone(),
        None => rows.rows[0].clone(),
    };
    let has_w = a.row.is_some() || covering_row(&rows, a.c).is_some();
    row.epsilon = format!("{}", a.eps);
    let ctx = StripContext::new(&row, params.beta)?;
    let hs = HarmonicSum::new(params, row.coefficients()?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "t", "v_midpoint", "w_midpoint", "G_midpoint", "grad_sq_midpoint"]).map_err(csv_err)?;
    let mid = |x: Result<Interval>| x.ok().map(|v| format!("{}", v.mid())).unwrap_or_default();
    for i in 1..=a.grid.0 {
        let r = Interval::point(i as f64 / a.grid.0 as f64);
        for j in 0..a.grid.1 {
            let t = Interval::point(-1.0 + 2.0 * j as f64 / (a.grid.1 - 1).max(1) as f64);
            let v = ctx
                .series(Series::F, t, 0)
                .and_then(|f| Ok(r * f + r.sqrt()?.recip()? * ctx.series(Series::G, t, 0)? * a.eps));
            let wv = if has_w { mid(conecert_core::supersolution::w(r, t, &hs)) } else { String::new() };
            let g = mid(ctx.g_fun(t));
            let gs = mid(conecert_core::supersolution::grad_sq(Field::V, r, t, &ctx));
            w.write_record([r.mid().to_string(), t.mid().to_string(), mid(v), wv, g, gs]).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
