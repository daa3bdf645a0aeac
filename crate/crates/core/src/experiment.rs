//! Declarative scenarios that reproduce the superconcentration rates at desk
//! scale, and their CSV / JSON-lines reports.
//!
//! Rows with `n = 0` summarize the whole grid (spread of a scaled variance,
//! growth of a deviation rate, monotonicity of a KS distance).

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundStudy};
use crate::coulomb::{coulomb_max_row, CoulombSpec};
use crate::dist::{beta_inverse_hazard_majorant, DistributionSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::functional::Functional;
use crate::rng::RngStream;
use crate::stats::{
    empirical_tail, fit_double_exponential_left_tail, fit_exponential_tail, gumbel_constants, mean_var_se, rate_fit,
    spread, GumbelKind, RateModel, TailFit,
};
use crate::transport::{alpha_weight, gaussian_weight, linspace, TransportMap};

/// Default `c` in `p = ceil(c · log n)`.
pub const DEFAULT_LP_C: f64 = 2.0;

pub const MIN_REPS: usize = 100;

/// Thresholds used for tail grids and rate fits.
pub const TAIL_POINTS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LpExponent {
    /// `p = ceil(c · log n)` per row
    Auto { c: f64 },
    Fixed(f64),
}

impl LpExponent {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            LpExponent::Auto { c } => (c * (n as f64).ln()).ceil().max(1.0),
            LpExponent::Fixed(p) => p,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    GaussianMaxVariance,
    GaussianMedianVariance,
    UniformMaxVariance,
    BetaMaxMajorant { a: f64, b: f64 },
    AlphaMaxVariance { alpha: f64 },
    LpNormVariance { p: LpExponent },
    GaussianMaxDeviation,
    AbsGaussianMaxDeviation,
    GammaMaxTails { shape: f64 },
    CoulombMax { alpha: f64 },
    PushforwardValidate { source: DistributionSpec, target: DistributionSpec },
    HarrisSanity,
}

/// Parameters a scenario name may draw on.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ScenarioParams {
    pub alpha: Option<f64>,
    pub p: Option<LpExponent>,
    pub shape: Option<f64>,
    pub beta_a: Option<f64>,
    pub beta_b: Option<f64>,
    pub source: Option<String>,
    pub target: Option<String>,
}

/// Names and one-line descriptions, in catalog order.
pub const CATALOG: &[(&str, &str)] = &[
    ("gaussian-max-variance", "Var(max of n Gaussians) against the (1+|x|)^-2 weighted bound; rate 1/(1+log n)"),
    ("gaussian-median-variance", "Var(median of n Gaussians) against the transported Poincare bound; rate 1/n"),
    ("uniform-max-variance", "Var(max of n uniforms) against 4E[(1-M)^2] and the closed forms"),
    ("beta-max-majorant", "max of n Beta(a,b): exponential-weight bound and its explicit majorant (--beta-a, --beta-b)"),
    ("alpha-max-variance", "Var(max) under exp(-|x|^a/a) against the log-concave weighted bound (--alpha)"),
    ("lp-norm-variance", "Var(||X||_p) for Gaussian X with p fixed or ceil(c log n) (--p N|auto)"),
    ("gaussian-max-deviation", "right tail of the Gaussian max around its mean; rate grows like sqrt(log n)"),
    ("abs-gaussian-max-deviation", "two-sided deviation of max|X_i| around its mean"),
    ("gamma-max-tails", "max of n Gamma(shape) minus log n: exponential right tail, double-exponential left tail (--shape)"),
    ("coulomb-max", "top modulus of the beta=2 Coulomb gas: variance rate, Gumbel limit, deviation (--alpha)"),
    ("pushforward-validate", "KS of transported samples against the target cdf (--source, --target)"),
    ("harris-sanity", "Harris negative association for increasing/decreasing pairs"),
];

fn need<T>(value: Option<T>, flag: &str, scenario: &str) -> Result<T> {
    value.ok_or_else(|| Error::Configuration(format!("{scenario} needs --{flag}")))
}

/// Parse a distribution name: `gaussian`, `exp`, `sym-exp`, `uniform`,
/// `beta`, `alpha` or `gamma`; shape parameters come from `params`.
pub fn parse_distribution(name: &str, params: &ScenarioParams) -> Result<DistributionSpec> {
    match name {
        "gaussian" | "normal" => Ok(DistributionSpec::std_gaussian()),
        "exp" | "exponential" => Ok(DistributionSpec::std_exponential()),
        "sym-exp" | "laplace" => Ok(DistributionSpec::sym_exponential()),
        "uniform" => Ok(DistributionSpec::uniform01()),
        "beta" => DistributionSpec::beta(params.beta_a.unwrap_or(2.0), params.beta_b.unwrap_or(2.0)),
        "alpha" | "alpha-potential" => DistributionSpec::alpha_potential(need(params.alpha, "alpha", name)?),
        "gamma" => DistributionSpec::gamma(need(params.shape, "shape", name)?),
        other => Err(Error::Configuration(format!("unknown distribution '{other}'"))),
    }
}

impl Scenario {
    pub fn parse(name: &str, params: &ScenarioParams) -> Result<Self> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        Ok(match name {
            "gaussian-max-variance" => Scenario::GaussianMaxVariance,
            "gaussian-median-variance" => Scenario::GaussianMedianVariance,
            "uniform-max-variance" => Scenario::UniformMaxVariance,
            "beta-max-majorant" => {
                let a = positive(params.beta_a.unwrap_or(2.0), "beta a")?;
                let b = positive(params.beta_b.unwrap_or(3.0), "beta b")?;
                DistributionSpec::beta(a, b)?;
                Scenario::BetaMaxMajorant { a, b }
            }
            "alpha-max-variance" => {
                let alpha = need(params.alpha, "alpha", name)?;
                DistributionSpec::alpha_potential(alpha)?;
                Scenario::AlphaMaxVariance { alpha }
            }
            "lp-norm-variance" => {
                let p = params.p.unwrap_or(LpExponent::Auto { c: DEFAULT_LP_C });
                match p {
                    LpExponent::Fixed(v) if !(v >= 1.0 && v.is_finite()) => {
                        return Err(Error::invalid(format!("p must be >= 1, got {v}")))
                    }
                    LpExponent::Auto { c } if !(c > 0.0) => return Err(Error::invalid(format!("c must be positive, got {c}"))),
                    _ => {}
                }
                Scenario::LpNormVariance { p }
            }
            "gaussian-max-deviation" => Scenario::GaussianMaxDeviation,
            "abs-gaussian-max-deviation" => Scenario::AbsGaussianMaxDeviation,
            "gamma-max-tails" => {
                let shape = positive(params.shape.unwrap_or(1.0), "shape")?;
                Scenario::GammaMaxTails { shape }
            }
            "coulomb-max" => {
                let alpha = params.alpha.unwrap_or(2.0);
                CoulombSpec::new(1, alpha)?;
                Scenario::CoulombMax { alpha }
            }
            "pushforward-validate" => {
                let source = parse_distribution(params.source.as_deref().unwrap_or("sym-exp"), params)?;
                let target = parse_distribution(params.target.as_deref().unwrap_or("gaussian"), params)?;
                Scenario::PushforwardValidate { source, target }
            }
            "harris-sanity" => Scenario::HarrisSanity,
            other => return Err(Error::Configuration(format!("unknown scenario '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::GaussianMaxVariance => "gaussian-max-variance",
            Scenario::GaussianMedianVariance => "gaussian-median-variance",
            Scenario::UniformMaxVariance => "uniform-max-variance",
            Scenario::BetaMaxMajorant { .. } => "beta-max-majorant",
            Scenario::AlphaMaxVariance { .. } => "alpha-max-variance",
            Scenario::LpNormVariance { .. } => "lp-norm-variance",
            Scenario::GaussianMaxDeviation => "gaussian-max-deviation",
            Scenario::AbsGaussianMaxDeviation => "abs-gaussian-max-deviation",
            Scenario::GammaMaxTails { .. } => "gamma-max-tails",
            Scenario::CoulombMax { .. } => "coulomb-max",
            Scenario::PushforwardValidate { .. } => "pushforward-validate",
            Scenario::HarrisSanity => "harris-sanity",
        }
    }

    /// Scenario-level parameter string for the `param` column.
    pub fn param(&self) -> String {
        match self {
            Scenario::BetaMaxMajorant { a, b } => format!("a={a};b={b}"),
            Scenario::AlphaMaxVariance { alpha } | Scenario::CoulombMax { alpha } => format!("alpha={alpha}"),
            Scenario::LpNormVariance { p: LpExponent::Auto { c } } => format!("p=auto;c={c}"),
            Scenario::LpNormVariance { p: LpExponent::Fixed(p) } => format!("p={p}"),
            Scenario::GammaMaxTails { shape } => format!("shape={shape}"),
            Scenario::PushforwardValidate { source, target } => format!("source={source};target={target}"),
            _ => String::new(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" | "jsonl" => Ok(OutputFormat::JsonLines),
            other => Err(Error::Configuration(format!("unknown format '{other}'"))),
        }
    }
}

/// `2⁴, 2⁵, …, 2¹⁶`
pub fn default_n_grid() -> Vec<u64> {
    (4..=16).map(|k| 1u64 << k).collect()
}

pub const DEFAULT_REPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n_grid: Vec<u64>,
    pub reps: usize,
    pub seed: u64,
    /// `None` uses every available core.
    pub shards: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, n_grid: Vec<u64>, reps: usize, seed: u64) -> Self {
        Self {
            scenario,
            n_grid,
            reps,
            seed,
            shards: None,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Configuration("n grid is empty".into()));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::Configuration("n must be positive".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Configuration("n grid must be strictly increasing".into()));
        }
        if self.reps < MIN_REPS {
            return Err(Error::Configuration(format!("reps must be at least {MIN_REPS}, got {}", self.reps)));
        }
        if self.shards == Some(0) {
            return Err(Error::Configuration("shards must be positive".into()));
        }
        Ok(())
    }

    pub fn exec(&self) -> Exec {
        match self.shards {
            None => Exec::default(),
            Some(1) => Exec::sequential(),
            Some(s) => Exec::parallel(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    /// 0 for grid-wide summary rows
    pub n: u64,
    pub param: String,
    pub kind: String,
    pub value: f64,
    pub se: Option<f64>,
    pub fit_constant: Option<f64>,
    pub pass: Option<bool>,
    pub seed: u64,
    pub reps: u64,
    pub wall_ms: u64,
}

pub const CSV_HEADER: [&str; 11] = [
    "scenario", "n", "param", "kind", "value", "se", "fit_constant", "pass", "seed", "reps", "wall_ms",
];

/// Row factory carrying the columns shared by one scenario run.
struct Rows<'a> {
    config: &'a ScenarioConfig,
    out: Vec<ReportRow>,
}

impl<'a> Rows<'a> {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, n: u64, param: String, kind: &str, value: f64, se: Option<f64>, fit: Option<f64>, pass: Option<bool>) -> usize {
        let base = self.config.scenario.param();
        let param = match (base.is_empty(), param.is_empty()) {
            (_, true) => base,
            (true, false) => param,
            (false, false) => format!("{base};{param}"),
        };
        self.out.push(ReportRow {
            scenario: self.config.scenario.name().to_string(),
            n,
            param,
            kind: kind.to_string(),
            value,
            se,
            fit_constant: fit,
            pass,
            seed: self.config.seed,
            reps: self.config.reps as u64,
            wall_ms: 0,
        });
        self.out.len() - 1
    }

    fn timed<T>(&mut self, body: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = self.out.len();
        let clock = Instant::now();
        let value = body(self)?;
        let ms = clock.elapsed().as_millis() as u64;
        for row in &mut self.out[start..] {
            row.wall_ms = ms;
        }
        Ok(value)
    }
}

/// Variance scenarios share this shape: per-n study, a rate scaling and a
/// grid-wide spread limit.
type StudyFn<'f> = &'f dyn Fn(u64, &RngStream) -> Result<(BoundStudy, String)>;

type CoordFn<'f> = &'f (dyn Fn(&[f64]) -> f64 + Sync);

struct VariancePlan<'f> {
    study: StudyFn<'f>,
    /// constant the bound is multiplied by before the dominance check
    dominance_scale: f64,
    /// `Var · scale(n)` should stay bounded; `None` where undefined
    scale: &'f dyn Fn(u64) -> Option<f64>,
    scale_name: &'static str,
    model: RateModel,
    spread_limit: Option<f64>,
}

fn variance_scenario(rows: &mut Rows<'_>, plan: VariancePlan<'_>) -> Result<()> {
    let config = rows.config;
    let root = RngStream::new(config.seed, 0);
    let mut var_rows = Vec::new();
    let mut scaled = Vec::new();
    let mut fit_n = Vec::new();
    let mut fit_v = Vec::new();
    for (i, &n) in config.n_grid.iter().enumerate() {
        let stream = root.child(i as u64);
        rows.timed(|rows| {
            let (st, param) = (plan.study)(n, &stream)?;
            let v = st.functional;
            var_rows.push(rows.push(n, param.clone(), "variance", v.variance, Some(v.se_variance), None, None));
            let b = st.bound;
            rows.push(
                n,
                format!("{param}{}convention={}", if param.is_empty() { "" } else { ";" }, b.constant_convention),
                "bound",
                b.estimate,
                Some(b.standard_error),
                Some(plan.dominance_scale),
                Some(b.dominates(plan.dominance_scale, &v)),
            );
            if let Some(s) = (plan.scale)(n) {
                rows.push(n, param, plan.scale_name, v.variance * s, Some(v.se_variance * s), None, None);
                scaled.push(v.variance * s);
            }
            if v.variance > 0.0 {
                fit_n.push(n);
                fit_v.push(v.variance);
            }
            Ok(())
        })?;
    }
    let fit = rate_fit(&fit_n, &fit_v, plan.model).ok();
    for &r in &var_rows {
        rows.out[r].fit_constant = fit.as_ref().map(|f| f.constant);
    }
    if let Some(limit) = plan.spread_limit {
        if !scaled.is_empty() {
            let s = spread(&scaled);
            rows.push(0, String::new(), "spread", s, None, Some(limit), Some(s <= limit));
        }
    }
    Ok(())
}

fn ln_n(n: u64) -> Option<f64> {
    (n >= 2).then(|| (n as f64).ln())
}

fn max_value(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Tail-grid rows plus the fitted exponential rate row; returns the fit.
fn tail_rows(rows: &mut Rows<'_>, n: u64, kind: &str, samples: &[f64]) -> Result<Option<TailFit>> {
    let thresholds = linspace(0.0, max_value(samples).max(0.0), TAIL_POINTS);
    for p in empirical_tail(samples, &thresholds)? {
        if p.count > 0 {
            rows.push(n, format!("t={:.6}", p.threshold), &format!("{kind}-tail"), p.prob, Some(p.se), None, None);
        }
    }
    let fit = fit_exponential_tail(samples, &thresholds).ok();
    match &fit {
        Some(f) => {
            rows.push(n, format!("r2={:.6}", f.r_squared), &format!("{kind}-rate"), f.rate, None, Some(f.intercept), Some(f.rate > 0.0));
        }
        None => {
            rows.push(n, String::new(), &format!("{kind}-rate"), f64::NAN, None, None, Some(false));
        }
    }
    Ok(fit)
}

fn max_samples(dist: &DistributionSpec, n: u64, reps: usize, stream: &RngStream, exec: &Exec, abs: bool) -> Result<Vec<f64>> {
    exec.replicate(stream, reps, |_, rng| {
        if abs {
            // symmetric law: P(max|Xᵢ| > x) = 1 − (1 − 2 sf(x))^n
            let u: f64 = rand::Rng::sample(rng, rand_distr::Open01);
            dist.isf(0.5 * -(u.ln() / n as f64).exp_m1())
        } else {
            dist.sample_max(n, rng)
        }
    })
    .into_iter()
    .collect()
}

fn deviation_scenario(rows: &mut Rows<'_>, abs: bool) -> Result<()> {
    let config = rows.config;
    let exec = config.exec();
    let root = RngStream::new(config.seed, 0);
    let g = DistributionSpec::std_gaussian();
    let mut rates = Vec::new();
    for (i, &n) in config.n_grid.iter().enumerate() {
        let stream = root.child(i as u64);
        let fit = rows.timed(|rows| {
            let m = max_samples(&g, n, config.reps, &stream, &exec, abs)?;
            let mv = mean_var_se(&m)?;
            rows.push(n, String::new(), "mean", mv.mean, Some(mv.se_mean), None, None);
            let dev: Vec<f64> = if abs {
                m.iter().map(|x| (x - mv.mean).abs()).collect()
            } else {
                m.iter().map(|x| x - mv.mean).collect()
            };
            tail_rows(rows, n, "deviation", &dev)
        })?;
        if let (Some(f), Some(l)) = (fit, ln_n(n)) {
            rates.push((n, f.rate, l));
        }
    }
    if rates.len() >= 2 {
        let (n0, c0, l0) = rates[0];
        let (n1, c1, l1) = rates[rates.len() - 1];
        let growth = (c1 / c0) / (l1 / l0).sqrt();
        rows.push(0, format!("from={n0};to={n1}"), "rate-growth", growth, None, Some(0.8), Some(growth >= 0.8));
    }
    Ok(())
}

/// Run one scenario; rows come back grouped by `n`, summary rows last.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let exec = config.exec();
    let reps = config.reps;
    let mut rows = Rows {
        config,
        out: Vec::new(),
    };
    match &config.scenario {
        Scenario::GaussianMaxVariance => {
            let map = TransportMap::new(DistributionSpec::sym_exponential(), DistributionSpec::std_gaussian());
            let c = bounds::derived_weight_constant(&map, gaussian_weight)?;
            let study = |n: u64, s: &RngStream| Ok((bounds::gaussian_weight_study(&Functional::max(n as usize)?, reps, s, &exec)?, String::new()));
            let scale = |n: u64| Some(1.0 + (n as f64).ln());
            variance_scenario(&mut rows, VariancePlan {
                study: &study,
                dominance_scale: c,
                scale: &scale,
                scale_name: "variance-x-(1+log n)",
                model: RateModel::InverseLog,
                spread_limit: Some(3.0),
            })?;
        }
        Scenario::GaussianMedianVariance => {
            let map = TransportMap::new(DistributionSpec::sym_exponential(), DistributionSpec::std_gaussian());
            let study = |n: u64, s: &RngStream| Ok((bounds::weighted_poincare_study(&Functional::median(n as usize)?, &map, reps, s, &exec)?, String::new()));
            let scale = |n: u64| Some(n as f64);
            variance_scenario(&mut rows, VariancePlan {
                study: &study,
                dominance_scale: 1.0,
                scale: &scale,
                scale_name: "variance-x-n",
                model: RateModel::PowerLaw,
                spread_limit: Some(3.0),
            })?;
        }
        Scenario::UniformMaxVariance => {
            let mu = DistributionSpec::uniform01();
            let root = RngStream::new(config.seed, 0);
            for (i, &n) in config.n_grid.iter().enumerate() {
                let stream = root.child(i as u64);
                rows.timed(|rows| {
                    let st = bounds::exp_weight_study(&Functional::max(n as usize)?, &mu, reps, &stream, &exec)?;
                    let nf = n as f64;
                    let var_oracle = nf / ((nf + 2.0) * (nf + 1.0).powi(2));
                    let bound_oracle = 8.0 / ((nf + 1.0) * (nf + 2.0));
                    let v = st.functional;
                    let b = st.bound;
                    let var_ok = (v.variance - var_oracle).abs() <= 3.0 * v.se_variance;
                    rows.push(n, String::new(), "variance", v.variance, Some(v.se_variance), Some(var_oracle), Some(var_ok));
                    let bound_ok = (b.estimate - bound_oracle).abs() <= 3.0 * b.standard_error;
                    rows.push(n, format!("convention={}", b.constant_convention), "bound", b.estimate, Some(b.standard_error), Some(bound_oracle), Some(bound_ok));
                    rows.push(n, String::new(), "dominance", b.estimate - v.variance, None, None, Some(b.dominates(1.0, &v)));
                    rows.push(n, String::new(), "ratio", b.estimate / v.variance, None, Some(8.0 * (nf + 1.0) / nf), None);
                    Ok(())
                })?;
            }
        }
        Scenario::BetaMaxMajorant { a, b } => {
            let (a, b) = (*a, *b);
            let mu = DistributionSpec::beta(a, b)?;
            let root = RngStream::new(config.seed, 0);
            for (i, &n) in config.n_grid.iter().enumerate() {
                let stream = root.child(i as u64);
                rows.timed(|rows| {
                    let st = bounds::exp_weight_study(&Functional::max(n as usize)?, &mu, reps, &stream, &exec)?;
                    let v = st.functional;
                    rows.push(n, String::new(), "variance", v.variance, Some(v.se_variance), None, None);
                    let bd = st.bound;
                    rows.push(n, format!("convention={}", bd.constant_convention), "bound", bd.estimate, Some(bd.standard_error), None, Some(bd.dominates(1.0, &v)));
                    let maj: Vec<f64> = exec
                        .replicate(&stream, reps, |_, rng| mu.sample_max(n, rng).map(|m| beta_inverse_hazard_majorant(a, b, m).powi(2)))
                        .into_iter()
                        .collect::<Result<_>>()?;
                    let mm = mean_var_se(&maj)?;
                    let est = 4.0 * mm.mean;
                    let se = 4.0 * mm.se_mean;
                    let joint = (se * se + bd.standard_error * bd.standard_error).sqrt();
                    rows.push(n, "convention=includes 4".into(), "majorant-bound", est, Some(se), None, Some(est >= bd.estimate - 3.0 * joint));
                    Ok(())
                })?;
            }
        }
        Scenario::AlphaMaxVariance { alpha } => {
            let alpha = *alpha;
            let map = TransportMap::new(DistributionSpec::sym_exponential(), DistributionSpec::alpha_potential(alpha)?);
            let c = bounds::derived_weight_constant(&map, |y| alpha_weight(alpha, y))?;
            let q = 2.0 * (alpha - 1.0) / alpha;
            let study = |n: u64, s: &RngStream| Ok((bounds::logconcave_weight_study(&Functional::max(n as usize)?, alpha, reps, s, &exec)?, String::new()));
            let scale = |n: u64| ln_n(n).map(|l| l.powf(q));
            variance_scenario(&mut rows, VariancePlan {
                study: &study,
                dominance_scale: c,
                scale: &scale,
                scale_name: "variance-x-(log n)^q",
                model: RateModel::InverseLogPower(q),
                spread_limit: Some(3.0),
            })?;
        }
        Scenario::LpNormVariance { p } => {
            let map = TransportMap::new(DistributionSpec::sym_exponential(), DistributionSpec::std_gaussian());
            let c = bounds::derived_weight_constant(&map, gaussian_weight)?;
            let study = |n: u64, s: &RngStream| {
                let pn = p.at(n);
                let f = Functional::lp_norm(pn, n as usize)?;
                Ok((bounds::gaussian_weight_study(&f, reps, s, &exec)?, format!("p_n={pn}")))
            };
            variance_scenario(&mut rows, VariancePlan {
                study: &study,
                dominance_scale: c,
                scale: &ln_n,
                scale_name: "variance-x-log n",
                model: RateModel::InverseLog,
                spread_limit: Some(3.0),
            })?;
        }
        Scenario::GaussianMaxDeviation => deviation_scenario(&mut rows, false)?,
        Scenario::AbsGaussianMaxDeviation => deviation_scenario(&mut rows, true)?,
        Scenario::GammaMaxTails { shape } => {
            let mu = DistributionSpec::gamma(*shape)?;
            let root = RngStream::new(config.seed, 0);
            for (i, &n) in config.n_grid.iter().enumerate() {
                let stream = root.child(i as u64);
                rows.timed(|rows| {
                    let m = max_samples(&mu, n, reps, &stream, &exec, false)?;
                    let shift = (n as f64).ln();
                    let centered: Vec<f64> = m.iter().map(|x| x - shift).collect();
                    if let Some(f) = tail_rows(rows, n, "right", &centered)? {
                        rows.push(n, String::new(), "right-r2", f.r_squared, None, Some(0.98), Some(f.r_squared >= 0.98));
                    }
                    let depth = -centered.iter().copied().fold(f64::INFINITY, f64::min);
                    let left = fit_double_exponential_left_tail(&centered, &linspace(0.0, depth.max(0.0), TAIL_POINTS));
                    match left {
                        Ok(f) => rows.push(n, format!("r2={:.6}", f.r_squared), "left-double-log-slope", f.rate, None, Some(f.intercept), Some(f.rate > 0.0)),
                        Err(_) => rows.push(n, String::new(), "left-double-log-slope", f64::NAN, None, None, Some(false)),
                    };
                    Ok(())
                })?;
            }
        }
        Scenario::CoulombMax { alpha } => {
            let alpha = *alpha;
            for &n in &config.n_grid {
                gumbel_constants(GumbelKind::CoulombMax(alpha), n)?;
            }
            let root = RngStream::new(config.seed, 0);
            let mut scaled = Vec::new();
            let mut ks = Vec::new();
            let mut fit_n = Vec::new();
            let mut fit_v = Vec::new();
            for (i, &n) in config.n_grid.iter().enumerate() {
                let stream = root.child(i as u64);
                rows.timed(|rows| {
                    let row = coulomb_max_row(&CoulombSpec::new(n, alpha)?, reps, &stream, &exec)?;
                    let v = row.variance;
                    rows.push(n, String::new(), "variance", v.variance, Some(v.se_variance), None, None);
                    let s = (n as f64) * (n as f64).ln();
                    rows.push(n, String::new(), "variance-x-n-log-n", row.scaled_variance, Some(v.se_variance * s), None, None);
                    scaled.push(row.scaled_variance);
                    fit_n.push(n);
                    fit_v.push(v.variance);
                    if let Some(k) = row.ks_gumbel {
                        rows.push(n, String::new(), "ks-gumbel", k, None, None, None);
                        ks.push(k);
                    }
                    match &row.deviation {
                        Some(f) => {
                            // prefactor 6 is the larger of the two printed ones
                            let envelope = f.points.iter().all(|p| p.prob <= 6.0 * (-f.rate * p.threshold).exp());
                            rows.push(n, format!("r2={:.6}", f.r_squared), "deviation-rate", f.rate, None, Some(f.intercept), Some(f.rate > 0.0 && envelope));
                        }
                        None => {
                            rows.push(n, String::new(), "deviation-rate", f64::NAN, None, None, Some(false));
                        }
                    }
                    Ok(())
                })?;
            }
            let fit = rate_fit(&fit_n, &fit_v, RateModel::InverseNLogN).ok();
            for r in rows.out.iter_mut().filter(|r| r.kind == "variance") {
                r.fit_constant = fit.as_ref().map(|f| f.constant);
            }
            let s = spread(&scaled);
            rows.push(0, String::new(), "spread", s, None, Some(4.0), Some(s <= 4.0));
            if ks.len() >= 2 {
                let decreasing = ks.windows(2).all(|w| w[1] < w[0]);
                rows.push(0, String::new(), "ks-decreasing", ks[ks.len() - 1], None, None, Some(decreasing));
            }
        }
        Scenario::PushforwardValidate { source, target } => {
            let map = TransportMap::new(source.clone(), target.clone());
            let clock = Instant::now();
            let mut stream = RngStream::new(config.seed, 0);
            let ks = map.pushforward_validate(reps, &mut stream)?;
            let i = rows.push(reps as u64, String::new(), "ks", ks.statistic, None, Some(ks.threshold), Some(ks.pass));
            rows.out[i].wall_ms = clock.elapsed().as_millis() as u64;
        }
        Scenario::HarrisSanity => {
            let g = DistributionSpec::std_gaussian();
            let root = RngStream::new(config.seed, 0);
            for (i, &n) in config.n_grid.iter().enumerate() {
                let stream = root.child(i as u64);
                rows.timed(|rows| {
                    let n = n as usize;
                    let cases: [(&str, CoordFn, CoordFn); 2] = [
                        ("x1,-x1", &|x| x[0], &|x| -x[0]),
                        ("max,-min", &|x| max_value(x), &|x| -x.iter().copied().fold(f64::INFINITY, f64::min)),
                    ];
                    for (j, (label, f, h)) in cases.into_iter().enumerate() {
                        let r = bounds::harris_check(&g, n, f, h, reps, &stream.child(j as u64), &exec)?;
                        rows.push(n as u64, format!("pair={label}"), "harris-covariance", r.e_fg - r.e_f_e_g, Some(r.se), None, Some(r.pass));
                    }
                    Ok(())
                })?;
            }
        }
    }
    Ok(rows.out)
}

/// True when no row carries a failed flag.
pub fn all_pass(rows: &[ReportRow]) -> bool {
    rows.iter().all(|r| r.pass != Some(false))
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_record(row: &ReportRow) -> [String; 11] {
    [
        row.scenario.clone(),
        row.n.to_string(),
        row.param.clone(),
        row.kind.clone(),
        fmt_f64(row.value),
        fmt_opt(row.se),
        fmt_opt(row.fit_constant),
        row.pass.map(|p| p.to_string()).unwrap_or_default(),
        row.seed.to_string(),
        row.reps.to_string(),
        row.wall_ms.to_string(),
    ]
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write the rows to `out` in the given format.
pub fn write_report<W: Write>(rows: &[ReportRow], format: OutputFormat, out: W, path: &Path) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let csv_err = |source| Error::Csv {
                path: path.to_path_buf(),
                source,
            };
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for row in rows {
                w.write_record(csv_record(row)).map_err(csv_err)?;
            }
            w.flush().map_err(io_err(path))
        }
        OutputFormat::JsonLines => {
            let mut w = BufWriter::new(out);
            for row in rows {
                serde_json::to_writer(&mut w, row).map_err(|source| Error::Json {
                    path: path.to_path_buf(),
                    source,
                })?;
                w.write_all(b"\n").map_err(io_err(path))?;
            }
            w.flush().map_err(io_err(path))
        }
    }
}

/// Write the rows to a file; CSV gets a header even when `rows` is empty.
pub fn emit_report(rows: &[ReportRow], format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_report(rows, format, file, path)
}

fn parse_field<T: FromStr>(field: &str, column: &str, path: &Path) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Configuration(format!("{}: cannot parse {column} '{field}'", path.display())))
}

fn parse_opt<T: FromStr>(field: &str, column: &str, path: &Path) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, column, path).map(Some)
    }
}

/// Read back a report written by [`emit_report`].
pub fn read_report(path: &Path, format: OutputFormat) -> Result<Vec<ReportRow>> {
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        OutputFormat::Csv => {
            let csv_err = |source| Error::Csv {
                path: path.to_path_buf(),
                source,
            };
            let mut r = csv::Reader::from_reader(file);
            let header = r.headers().map_err(csv_err)?.clone();
            if header.iter().ne(CSV_HEADER) {
                return Err(Error::Configuration(format!("{}: unexpected header", path.display())));
            }
            let mut rows = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(csv_err)?;
                rows.push(ReportRow {
                    scenario: rec[0].to_string(),
                    n: parse_field(&rec[1], "n", path)?,
                    param: rec[2].to_string(),
                    kind: rec[3].to_string(),
                    value: parse_field(&rec[4], "value", path)?,
                    se: parse_opt(&rec[5], "se", path)?,
                    fit_constant: parse_opt(&rec[6], "fit_constant", path)?,
                    pass: parse_opt(&rec[7], "pass", path)?,
                    seed: parse_field(&rec[8], "seed", path)?,
                    reps: parse_field(&rec[9], "reps", path)?,
                    wall_ms: parse_field(&rec[10], "wall_ms", path)?,
                });
            }
            Ok(rows)
        }
        OutputFormat::JsonLines => BufReader::new(file)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|line| {
                let line = line.map_err(io_err(path))?;
                serde_json::from_str(&line).map_err(|source| Error::Json {
                    path: path.to_path_buf(),
                    source,
                })
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(name: &str, grid: Vec<u64>, reps: usize) -> ScenarioConfig {
        ScenarioConfig::new(Scenario::parse(name, &ScenarioParams::default()).unwrap(), grid, reps, 11)
    }

    #[test]
    fn validation() {
        assert!(config("harris-sanity", vec![], 100).validate().is_err());
        assert!(config("harris-sanity", vec![4, 4], 100).validate().is_err());
        assert!(config("harris-sanity", vec![4, 8], 99).validate().is_err());
        assert!(config("harris-sanity", vec![4, 8], 100).validate().is_ok());
        assert!(Scenario::parse("nope", &ScenarioParams::default()).is_err());
        assert!(Scenario::parse("alpha-max-variance", &ScenarioParams::default()).is_err());
    }

    #[test]
    fn catalog_names_parse() {
        let params = ScenarioParams {
            alpha: Some(3.0),
            ..ScenarioParams::default()
        };
        for (name, _) in CATALOG {
            assert_eq!(Scenario::parse(name, &params).unwrap().name(), *name);
        }
    }

    #[test]
    fn auto_p() {
        assert_eq!(LpExponent::Auto { c: 2.0 }.at(256), (2.0 * 256f64.ln()).ceil());
        assert_eq!(LpExponent::Fixed(3.0).at(10), 3.0);
    }

    #[test]
    fn harris_sanity_passes() {
        let rows = run_scenario(&config("harris-sanity", vec![1, 10], 2000)).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(all_pass(&rows));
    }

    #[test]
    fn deterministic_across_shards() {
        let mut a = config("uniform-max-variance", vec![1, 10], 500);
        let mut b = a.clone();
        a.shards = Some(1);
        b.shards = Some(3);
        let strip = |mut rows: Vec<ReportRow>| {
            rows.iter_mut().for_each(|r| r.wall_ms = 0);
            rows
        };
        assert_eq!(strip(run_scenario(&a).unwrap()), strip(run_scenario(&b).unwrap()));
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        let row = ReportRow {
            scenario: "s".into(),
            n: 3,
            param: "a=1;b=2".into(),
            kind: "k".into(),
            value: 0.1,
            se: None,
            fit_constant: Some(1.0 / 3.0),
            pass: Some(true),
            seed: 1,
            reps: 100,
            wall_ms: 5,
        };
        let rec = csv_record(&row);
        assert_eq!(rec[4], "1.0000000000000001e-1");
        assert_eq!(rec[5], "");
        assert_eq!(rec[6].parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
