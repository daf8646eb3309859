//! Positivity of `g³ G'` between `t_c` and `1`, where
//! `G = σ f² + (1 - t²) (f' - f g'/g)²` is the squared cone gradient of the
//! candidate subsolution on its zero set.
//!
//! Two algebraically equal forms are enclosed and intersected: the literal
//! expansion in `f, f', f'', g, g', g''`, and the form reduced with the
//! Legendre equations of `f` and `g` (valid because `σ = 9β/8`),
//!
//! ```text
//! g³G' = 2σ f² g² g' + 2 W² (t g - (1 - t²) g'),   W = f'g - f g'.
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::certificate::{
    certify_cells, CellEval, GridCertificate, Refinement, Split, SubintervalResult, Summary, Verdict,
};
use crate::cheb::{fit_series_cached, ChebModel, ChebModel1d, ModelConfig, Rect, Which, CACHE_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::legendre::{required_k, SeriesCoeffs};
use crate::roots::{find_root_for_beta, find_t_c, RootEnclosure, SEED_RADIUS};

/// Cone-dependent constants: `β = 2/(1+c²)` and `σ = (9/4)/(1+c²) = 9β/8`.
#[derive(Clone, Copy, Debug)]
pub struct ConeParams {
    pub c: Interval,
    pub beta: Interval,
    pub sigma: Interval,
}

impl ConeParams {
    pub fn new(c: Interval) -> Result<Self> {
        if c.lo() < 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!("cone parameter {c:?} must be finite and non-negative")));
        }
        let denom = Interval::ONE + c.sqr();
        let beta = Interval::point(2.0).div(denom)?;
        let sigma = Interval::point(2.25).div(denom)?;
        Ok(ConeParams { c, beta, sigma })
    }

    /// Parameters for a `β` box in `(0, 2]`; `c = sqrt(2/β - 1)`.
    pub fn from_beta(beta: Interval) -> Result<Self> {
        if beta.lo() <= 0.0 || beta.hi() > 2.0 {
            return Err(Error::Domain(format!("beta {beta:?} outside (0, 2]")));
        }
        let c_sq = Interval::point(2.0).div(beta)? - Interval::ONE;
        let c_sq = Interval::new(c_sq.lo().max(0.0), c_sq.hi().max(0.0));
        Ok(ConeParams { c: c_sq.sqrt()?, beta, sigma: beta * 1.125 })
    }

    /// `β` of the companion `g = f(·, -β/8)`.
    pub fn g_beta(&self) -> Interval {
        crate::legendre::g_beta(self.beta)
    }
}

/// `f, f', f''` and `g, g', g''` at one `(t, β)` box.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub f: [Interval; 3],
    pub g: [Interval; 3],
}

/// Produces jets for `t` boxes at a fixed `β` box.
pub trait JetSource: Sync {
    fn jet(&self, t: Interval) -> Result<Jet>;
}

/// Series enclosures with coefficients built once per `β` box.
pub struct DirectJets {
    f: SeriesCoeffs,
    g: SeriesCoeffs,
}

impl DirectJets {
    /// Coefficients valid for every `t` in `t_range`.
    pub fn new(t_range: Interval, beta: Interval) -> Result<Self> {
        let gb = crate::legendre::g_beta(beta);
        Ok(DirectJets {
            f: SeriesCoeffs::new(beta, required_k(t_range, beta, 2)?),
            g: SeriesCoeffs::new(gb, required_k(t_range, gb, 2)?),
        })
    }

    pub fn k(&self) -> usize {
        self.f.k().max(self.g.k())
    }
}

impl JetSource for DirectJets {
    fn jet(&self, t: Interval) -> Result<Jet> {
        let e = |c: &SeriesCoeffs, j| c.eval(t, j).map(|v| v.value);
        Ok(Jet { f: [e(&self.f, 0)?, e(&self.f, 1)?, e(&self.f, 2)?], g: [e(&self.g, 0)?, e(&self.g, 1)?, e(&self.g, 2)?] })
    }
}

/// Chebyshev models of `f, f', f''` collapsed onto a `β` box (and its
/// `-β/8` image for `g`).
pub struct InterpJets {
    f: [ChebModel1d; 3],
    g: [ChebModel1d; 3],
}

impl InterpJets {
    pub fn new(models: &[ChebModel; 3], beta: Interval) -> Result<Self> {
        let gb = crate::legendre::g_beta(beta);
        let r = |m: &ChebModel, b| m.restrict_beta(b);
        Ok(InterpJets {
            f: [r(&models[0], beta)?, r(&models[1], beta)?, r(&models[2], beta)?],
            g: [r(&models[0], gb)?, r(&models[1], gb)?, r(&models[2], gb)?],
        })
    }
}

impl JetSource for InterpJets {
    fn jet(&self, t: Interval) -> Result<Jet> {
        let e = |m: &ChebModel1d| m.eval(t);
        Ok(Jet { f: [e(&self.f[0])?, e(&self.f[1])?, e(&self.f[2])?], g: [e(&self.g[0])?, e(&self.g[1])?, e(&self.g[2])?] })
    }
}

fn check_t(t: Interval) -> Result<()> {
    if !(t.lo() > -0.95) || t.hi() > 1.0 {
        return Err(Error::Domain(format!("t = {t:?} outside (-0.95, 1]")));
    }
    Ok(())
}

fn positive_g(jet: &Jet, t: Interval) -> Result<()> {
    if !jet.g[0].is_positive() {
        return Err(Error::CertificationFailure(format!("g enclosure {:?} at t = {t:?} not positive", jet.g[0])));
    }
    Ok(())
}

/// `σ f² + (1 - t²) (f' - f g'/g)²` from a jet.
pub fn g_fun_from_jet(t: Interval, sigma: Interval, jet: &Jet) -> Result<Interval> {
    positive_g(jet, t)?;
    let [f, df, _] = jet.f;
    let [g, dg, _] = jet.g;
    let bracket = df - (f * dg).div(g)?;
    Ok(sigma * f.sqr() + (Interval::ONE - t.sqr()) * bracket.sqr())
}

/// `g³ G'` from a jet, literal and reduced forms intersected.
pub fn g3_g_prime_from_jet(t: Interval, sigma: Interval, jet: &Jet) -> Result<Interval> {
    positive_g(jet, t)?;
    let [f, df, d2f] = jet.f;
    let [g, dg, d2g] = jet.g;
    let two = Interval::point(2.0);
    let one_m_t2 = Interval::ONE - t.sqr();
    let w = df * g - f * dg;
    let literal = two * sigma * f * df * g.powi(3)? - two * t * w.sqr() * g
        + two * one_m_t2 * w * (d2f * g.sqr() - df * dg * g - f * d2g * g + f * dg.sqr());
    let reduced = two * sigma * f.sqr() * g.sqr() * dg + two * w.sqr() * (t * g - one_m_t2 * dg);
    literal
        .intersect(&reduced)
        .map_err(|_| Error::Numerical(format!("literal and reduced forms disagree at t = {t:?}")))
}

/// `G` with the unnormalized `f` (so `f(1) = 1`).
pub fn g_fun(t: Interval, p: &ConeParams) -> Result<Interval> {
    check_t(t)?;
    let jets = DirectJets::new(t, p.beta)?;
    g_fun_from_jet(t, p.sigma, &jets.jet(t)?)
}

/// `g³ G'` by direct series enclosures (unnormalized `f`; the positive
/// normalization factor does not change the sign).
pub fn g3_g_prime(t: Interval, p: &ConeParams) -> Result<Interval> {
    check_t(t)?;
    let jets = DirectJets::new(t, p.beta)?;
    g3_g_prime_from_jet(t, p.sigma, &jets.jet(t)?)
}

/// Normalization `f_c = f / N` making the angular derivative at the free
/// boundary equal to one: `N = sqrt(1 - t_c²) |f'(t_c)|`.
#[derive(Clone, Copy, Debug)]
pub struct Normalization {
    pub params: ConeParams,
    pub t_c: RootEnclosure,
    pub scale: Interval,
}

pub fn normalization(p: &ConeParams) -> Result<Normalization> {
    let t_c = find_root_for_beta(p.beta, SEED_RADIUS)?;
    let t = t_c.interval;
    let df = DirectJets::new(t, p.beta)?.f.eval(t, 1)?.value;
    let scale = (Interval::ONE - t.sqr()).sqrt()? * df.abs();
    if !scale.is_positive() {
        return Err(Error::CertificationFailure(format!("normalization {scale:?} not positive")));
    }
    Ok(Normalization { params: *p, t_c, scale })
}

/// `G_c` built from the normalized `f_c`; equals 1 at `t_c`.
pub fn g_fun_normalized(t: Interval, n: &Normalization) -> Result<Interval> {
    g_fun(t, &n.params)?.div(n.scale.sqr())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Direct,
    Interp,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Mode::Direct),
            "interp" => Ok(Mode::Interp),
            _ => Err(Error::Config(format!("unknown mode {s:?} (direct|interp)"))),
        }
    }
}

/// Upper end of the certified cone range.
pub const C_MAX_CLAIM: f64 = 0.58828;

#[derive(Clone, Debug, Serialize)]
pub struct SubsolutionConfig {
    pub c_range: (f64, f64),
    pub n_c: usize,
    pub n_t: usize,
    pub n_beta: usize,
    pub max_depth: usize,
    pub mode: Mode,
    /// Interpolation settings for [`Mode::Interp`].
    pub interp_domain: Rect,
    pub interp_degrees: (usize, usize),
    pub interp_rho: (f64, f64),
    #[serde(skip)]
    pub model_cache: Option<PathBuf>,
    pub keep_cells: bool,
    /// Per `β` strip, stop after this many failing cells.
    pub stop_after_failures: Option<u64>,
}

impl Default for SubsolutionConfig {
    fn default() -> Self {
        SubsolutionConfig {
            c_range: (0.0, C_MAX_CLAIM),
            n_c: 256,
            n_t: 512,
            n_beta: 8,
            max_depth: 6,
            mode: Mode::Direct,
            interp_domain: Rect::new((-0.25, 1.0), (-0.26, 2.0)),
            interp_degrees: (48, 48),
            interp_rho: (2.9, 30.0),
            model_cache: None,
            keep_cells: false,
            stop_after_failures: Some(1),
        }
    }
}

impl SubsolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.c_range;
        if !(0.0 <= a && a <= b && b < 1.0) {
            return Err(Error::Config(format!("c range [{a}, {b}] must lie in [0, 1)")));
        }
        if self.n_c == 0 || self.n_t == 0 || self.n_beta == 0 {
            return Err(Error::Config("grid dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn model_configs(&self) -> [ModelConfig; 3] {
        let cfg = |j| ModelConfig {
            function: Which::F,
            derivative: j,
            domain: self.interp_domain,
            degrees: self.interp_degrees,
            rho: self.interp_rho,
            format_version: CACHE_FORMAT_VERSION,
        };
        [cfg(0), cfg(1), cfg(2)]
    }
}

/// Cell evaluator on one `β` strip of one c-subinterval.
///
/// Refined children with a narrower `β` box get their own jets and a
/// tighter `t_c` bound, so cells lying wholly below every root for that
/// box drop out of the claim region.
fn strip_eval<'a, S: JetSource>(
    source: &'a S,
    strip: Interval,
    t_c_hi: f64,
    mode: Mode,
    models: Option<&'a [ChebModel; 3]>,
) -> impl Fn([Interval; 2]) -> Result<CellEval> + 'a {
    move |cell: [Interval; 2]| {
        let [mut t, beta] = cell;
        let sigma = beta * 1.125;
        let local: Option<Box<dyn JetSource>> = if beta == strip {
            None
        } else {
            if t.lo() < t_c_hi {
                let root = find_root_for_beta(beta, SEED_RADIUS)?.interval;
                if t.hi() < root.lo() {
                    return Ok(CellEval::Outside);
                }
                t = Interval::new(t.lo().max(root.lo()), t.hi());
            }
            Some(match (mode, models) {
                (Mode::Interp, Some(m)) => Box::new(InterpJets::new(m, beta)?),
                _ => Box::new(DirectJets::new(Interval::new(t.lo(), 1.0), beta)?),
            })
        };
        let jet = match &local {
            Some(s) => s.jet(t)?,
            None => source.jet(t)?,
        };
        Ok(CellEval::Value(g3_g_prime_from_jet(t, sigma, &jet)?))
    }
}

struct StripOutcome {
    summary: Summary,
    k: usize,
}

fn run_strip(
    config: &SubsolutionConfig,
    models: Option<&[ChebModel; 3]>,
    c: Interval,
    t_range: Interval,
    t_c_hi: f64,
    strip: Interval,
) -> Result<StripOutcome> {
    let refine = Refinement { max_depth: config.max_depth, split: Split::Both, keep_cells: config.keep_cells };
    let cells = t_range.split(config.n_t).into_iter().map(|t| [t, strip]);
    let stop = config.stop_after_failures;
    Ok(match (config.mode, models) {
        (Mode::Interp, Some(m)) => {
            let src = InterpJets::new(m, strip)?;
            let eval = strip_eval(&src, strip, t_c_hi, config.mode, models);
            StripOutcome { summary: certify_cells(c, cells, &eval, refine, stop), k: 0 }
        }
        _ => {
            let src = DirectJets::new(t_range, strip)?;
            let eval = strip_eval(&src, strip, t_c_hi, config.mode, None);
            StripOutcome { summary: certify_cells(c, cells, &eval, refine, stop), k: src.k() }
        }
    })
}

/// Certify `g³G' > 0` on `[t_c, 1] × β_c` for every c-subinterval of the range.
pub fn verify_subsolution(config: &SubsolutionConfig) -> Result<GridCertificate> {
    config.validate()?;
    let mut parameters = BTreeMap::new();
    let models = match config.mode {
        Mode::Direct => None,
        Mode::Interp => {
            let cfgs = config.model_configs();
            let fitted: Vec<ChebModel> = cfgs
                .iter()
                .map(|cfg| fit_series_cached(config.model_cache.as_deref(), cfg))
                .collect::<Result<_>>()?;
            let models: [ChebModel; 3] = fitted.try_into().expect("three models");
            for (j, m) in models.iter().enumerate() {
                parameters.insert(format!("modulus_bound_f{j}"), json!(m.modulus_bound));
                parameters.insert(format!("error_bound_f{j}"), json!(m.error_bound));
            }
            parameters.insert("rho".into(), json!(config.interp_rho));
            parameters.insert("degrees".into(), json!(config.interp_degrees));
            parameters.insert("domain".into(), serde_json::to_value(config.interp_domain)?);
            Some(models)
        }
    };
    let c_all = Interval::new(config.c_range.0, config.c_range.1);
    let c_subs = c_all.split(config.n_c);

    // Per c-subinterval: the t_c enclosure fixes the tiled t range.
    let anchors: Vec<Result<(ConeParams, RootEnclosure)>> = c_subs
        .par_iter()
        .map(|c| {
            let p = ConeParams::new(*c)?;
            Ok((p, find_t_c(*c, SEED_RADIUS)?))
        })
        .collect();

    let mut tasks = Vec::new();
    for (i, a) in anchors.iter().enumerate() {
        if let Ok((p, root)) = a {
            for strip in p.beta.split(config.n_beta) {
                tasks.push((i, Interval::new(root.interval.lo(), 1.0), root.interval.hi(), strip));
            }
        }
    }
    let outcomes: Vec<(usize, Result<StripOutcome>)> = tasks
        .par_iter()
        .map(|&(i, t_range, t_c_hi, strip)| (i, run_strip(config, models.as_ref(), c_subs[i], t_range, t_c_hi, strip)))
        .collect();

    let mut per_c: Vec<(Summary, Option<String>)> = (0..c_subs.len()).map(|_| (Summary::default(), None)).collect();
    let mut k_max = 0;
    for (i, out) in outcomes {
        match out {
            Ok(o) => {
                k_max = k_max.max(o.k);
                per_c[i].0.merge(o.summary);
            }
            Err(e) => {
                per_c[i].1.get_or_insert(e.to_string());
            }
        }
    }
    let mut summary = Summary::default();
    let mut results = Vec::with_capacity(c_subs.len());
    let mut verdict = Verdict::Pass;
    for ((c, anchor), (s, err)) in c_subs.iter().zip(&anchors).zip(per_c) {
        let (anchor, err) = match anchor {
            Ok((_, root)) => (Some(root.interval), err),
            Err(e) => (None, Some(e.to_string())),
        };
        let v = if err.is_some() { Verdict::Inconclusive } else { s.verdict() };
        verdict = verdict.and(v);
        results.push(SubintervalResult {
            c: *c,
            anchor,
            verdict: v,
            tally: s.tally,
            min_lower_bound: s.global_min.as_ref().and_then(|m| m.value).map(|v| v.lo()),
            error: err,
        });
        summary.merge(s);
    }
    if config.mode == Mode::Direct {
        parameters.insert("k_max".into(), json!(k_max));
    }
    parameters.insert("mode".into(), json!(config.mode));
    Ok(GridCertificate {
        claim: format!(
            "g^3 G' > 0 for t_c < t <= 1, c in [{}, {}]",
            config.c_range.0, config.c_range.1
        ),
        quantity: "g^3 G'".into(),
        axes: ["t".into(), "beta".into()],
        c_subintervals: results,
        grid: (config.n_t, config.n_beta),
        max_depth: config.max_depth,
        parameters,
        summary,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: f64) -> ConeParams {
        ConeParams::new(Interval::point(c)).unwrap()
    }

    #[test]
    fn params_from_beta_round_trip() {
        let q = ConeParams::from_beta(p(0.3).beta).unwrap();
        assert!(q.c.contains(0.3));
        assert!(ConeParams::from_beta(Interval::point(2.5)).is_err());
    }

    #[test]
    fn boundary_value_at_one() {
        let q = p(0.3);
        let v = g_fun(Interval::point(1.0), &q).unwrap();
        assert!(v.contains(q.sigma.mid()));
        assert!(v.width() < 1e-12);
    }

    #[test]
    fn flat_cone_at_zero() {
        let v = g_fun(Interval::point(0.0), &p(0.0)).unwrap();
        assert!(v.contains(1.0), "{v:?}");
    }

    #[test]
    fn collapse_at_one() {
        // (1 - t²) kills the third term; f(1) = g(1) = 1
        let q = p(0.2);
        let one = Interval::point(1.0);
        let jet = DirectJets::new(one, q.beta).unwrap().jet(one).unwrap();
        let two = Interval::point(2.0);
        let expect = two * q.sigma * jet.f[1] - two * (jet.f[1] - jet.g[1]).sqr();
        let v = g3_g_prime(one, &q).unwrap();
        assert!(v.intersect(&expect).is_ok());
    }

    #[test]
    fn positive_inside_stable_range() {
        assert!(g3_g_prime(Interval::point(0.5), &p(0.3)).unwrap().is_positive());
    }

    #[test]
    fn boundary_identity_holds() {
        for c in [0.0, 0.25, 0.5] {
            let n = normalization(&p(c)).unwrap();
            let v = g_fun_normalized(n.t_c.interval, &n).unwrap();
            assert!(v.contains(1.0) && v.width() <= 1e-6, "c = {c}: {v:?}");
        }
    }

    #[test]
    fn rejects_points_near_minus_one() {
        assert!(matches!(g_fun(Interval::point(-0.96), &p(0.1)), Err(Error::Domain(_))));
    }

    #[test]
    fn small_grid_passes() {
        let cfg = SubsolutionConfig { c_range: (0.0, 0.1), n_c: 4, n_t: 32, n_beta: 2, ..Default::default() };
        let cert = verify_subsolution(&cfg).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass, "{:?}", cert.summary.failures.first());
        assert!(cert.min_lower_bound().unwrap() > 0.0);
    }
}
