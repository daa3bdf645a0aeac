//! Monte Carlo statistics: moments with standard errors, empirical tails,
//! Kolmogorov–Smirnov distances, extreme-value renormalizing constants and
//! rate fitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};

/// Streaming central moments up to order four; merges are associative.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::new();
        for &x in xs {
            m.push(x);
        }
        m
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3 + other.m3 + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Self {
            count: self.count + other.count,
            mean,
            m2,
            m3,
            m4,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        self.m2 / (self.count as f64 - 1.0)
    }

    pub fn se_mean(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Fourth-moment standard error of the unbiased variance; `None` when the
    /// plug-in estimate is not positive.
    pub fn se_variance_moment(&self) -> Option<f64> {
        let n = self.count as f64;
        if n < 4.0 {
            return None;
        }
        let mu4 = self.m4 / n;
        let s2 = self.variance();
        let v = (mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
        (v > 0.0 && v.is_finite()).then(|| v.sqrt())
    }

    pub fn kurtosis(&self) -> f64 {
        let n = self.count as f64;
        let m2 = self.m2 / n;
        (self.m4 / n) / (m2 * m2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanVar {
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

/// Resamples used when the fourth-moment variance SE is unreliable.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Sample mean, unbiased variance and both standard errors.
pub fn mean_var_se(samples: &[f64]) -> Result<MeanVar> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let m = Moments::from_slice(samples);
    let se_variance = if kurtosis_stable(samples) {
        m.se_variance_moment()
    } else {
        None
    }
    .unwrap_or_else(|| bootstrap_se_variance(samples));
    Ok(MeanVar {
        mean: m.mean(),
        variance: m.variance(),
        se_mean: m.se_mean(),
        se_variance,
    })
}

/// The two halves of the sample agree on the kurtosis within a factor 2.
fn kurtosis_stable(samples: &[f64]) -> bool {
    if samples.len() < 16 {
        return false;
    }
    let (a, b) = samples.split_at(samples.len() / 2);
    let ka = Moments::from_slice(a).kurtosis();
    let kb = Moments::from_slice(b).kurtosis();
    if !(ka.is_finite() && kb.is_finite()) {
        // constant halves: the variance is exactly zero either way
        return ka.is_nan() && kb.is_nan();
    }
    ka.max(kb) <= 2.0 * ka.min(kb)
}

fn bootstrap_se_variance(samples: &[f64]) -> f64 {
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB007_5742 ^ n as u64);
    let mut acc = Moments::new();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut m = Moments::new();
        for _ in 0..n {
            m.push(samples[rng.random_range(0..n)]);
        }
        acc.push(m.variance());
    }
    let v = acc.variance();
    if v.is_finite() {
        v.sqrt()
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPoint {
    pub threshold: f64,
    pub count: usize,
    pub prob: f64,
    pub se: f64,
}

/// Fraction of samples `≥` each threshold, with binomial standard errors.
pub fn empirical_tail(samples: &[f64], thresholds: &[f64]) -> Result<Vec<TailPoint>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let below = sorted.partition_point(|&x| x < t);
            let count = sorted.len() - below;
            let prob = count as f64 / n;
            TailPoint {
                threshold: t,
                count,
                prob,
                se: (prob * (1.0 - prob) / n).sqrt(),
            }
        })
        .collect())
}

/// Fraction of samples `≤` each threshold.
pub fn empirical_lower_tail(samples: &[f64], thresholds: &[f64]) -> Result<Vec<TailPoint>> {
    let negated: Vec<f64> = samples.iter().map(|x| -x).collect();
    let ts: Vec<f64> = thresholds.iter().map(|t| -t).collect();
    let mut pts = empirical_tail(&negated, &ts)?;
    for (p, &t) in pts.iter_mut().zip(thresholds) {
        p.threshold = t;
    }
    Ok(pts)
}

/// Kolmogorov–Smirnov distance between the empirical cdf of `samples` and
/// `cdf`, using both one-sided gaps at every sample point.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    });
    Ok(d)
}

/// KS acceptance threshold `1.95 / √N` (level ≈ 0.001).
pub fn ks_threshold(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GumbelKind {
    GaussianMax,
    AlphaMax(f64),
    CoulombMax(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormConstants {
    /// scale
    pub a_n: f64,
    /// location
    pub b_n: f64,
    /// Coulomb auxiliary `log n − 2 log log n − log 2π`
    pub c_n: Option<f64>,
}

/// Renormalizing constants `(a_n, b_n)` such that `a_n (M_n − b_n)` is
/// approximately standard Gumbel.
pub fn gumbel_constants(kind: GumbelKind, n: u64) -> Result<RenormConstants> {
    let too_small = |reason: &str| Error::TooSmallN {
        n,
        reason: reason.to_string(),
    };
    let ln_n = (n as f64).ln();
    let lln = ln_n.ln();
    match kind {
        GumbelKind::GaussianMax => {
            if n < 3 {
                return Err(too_small("log log n must be positive"));
            }
            let a = (2.0 * ln_n).sqrt();
            let b = a - ((4.0 * std::f64::consts::PI).ln() + lln) / (2.0 * a);
            Ok(RenormConstants { a_n: a, b_n: b, c_n: None })
        }
        GumbelKind::AlphaMax(alpha) => {
            if n < 3 {
                return Err(too_small("log log n must be positive"));
            }
            let ln_z = DistributionSpec::alpha_potential(alpha)?.log_normalizer()?;
            let e = (alpha - 1.0) / alpha;
            let a = (alpha * ln_n.powf(2.0 * e)).sqrt();
            let b = ln_n.powf(1.0 / alpha) - (alpha.ln() + ln_z + e * lln) / ln_n.powf(e);
            Ok(RenormConstants { a_n: a, b_n: b, c_n: None })
        }
        GumbelKind::CoulombMax(alpha) => {
            if !(alpha >= 1.0) {
                return Err(Error::invalid(format!("coulomb alpha must be >= 1, got {alpha}")));
            }
            if n < 3 {
                return Err(too_small("log log n must be positive"));
            }
            let c = ln_n - 2.0 * lln - (2.0 * std::f64::consts::PI).ln();
            if c <= 0.0 {
                return Err(too_small(&format!("c_n = {c} is not positive")));
            }
            let nf = n as f64;
            let a = 2.0 * (alpha / 2.0).powf(1.0 / alpha + 0.5) * (nf * c).sqrt();
            let b = (2.0 / alpha).powf(1.0 / alpha) * (1.0 + 0.5 * (2.0 * c / (alpha * nf)).sqrt());
            Ok(RenormConstants { a_n: a, b_n: b, c_n: Some(c) })
        }
    }
}

/// Standard Gumbel cdf `exp(−e^{−x})`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateModel {
    /// `c / log n`
    InverseLog,
    /// `c · n^b`, exponent fitted too
    PowerLaw,
    /// `c / (n log n)`
    InverseNLogN,
    /// `c / (log n)^q`
    InverseLogPower(f64),
}

impl RateModel {
    fn shape(&self, n: f64) -> f64 {
        match *self {
            RateModel::InverseLog => 1.0 / n.ln(),
            RateModel::PowerLaw => 1.0,
            RateModel::InverseNLogN => 1.0 / (n * n.ln()),
            RateModel::InverseLogPower(q) => n.ln().powf(-q),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub constant: f64,
    /// Fitted exponent for [`RateModel::PowerLaw`].
    pub exponent: Option<f64>,
    /// Largest `|estimate / fit − 1|` over the grid.
    pub max_rel_residual: f64,
}

/// Least-squares fit of `estimate ≈ c · model(n)` in log space.
pub fn rate_fit(n_values: &[u64], estimates: &[f64], model: RateModel) -> Result<RateFit> {
    if n_values.len() != estimates.len() {
        return Err(Error::DimensionMismatch {
            expected: n_values.len(),
            got: estimates.len(),
        });
    }
    if n_values.len() < 3 {
        return Err(Error::InsufficientData("rate fit needs at least 3 grid points".into()));
    }
    if estimates.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::invalid("rate fit needs positive finite estimates"));
    }
    if n_values.iter().any(|&n| n < 2) {
        return Err(Error::invalid("rate fit needs n >= 2"));
    }
    let ns: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    let (constant, exponent) = match model {
        RateModel::PowerLaw => {
            let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
            let y: Vec<f64> = estimates.iter().map(|e| e.ln()).collect();
            let line = linear_fit(&x, &y, None)?;
            (line.intercept.exp(), Some(line.slope))
        }
        _ => {
            let mean = ns
                .iter()
                .zip(estimates)
                .map(|(&n, &e)| e.ln() - model.shape(n).ln())
                .sum::<f64>()
                / ns.len() as f64;
            (mean.exp(), None)
        }
    };
    let predict = |n: f64| match exponent {
        Some(b) => constant * n.powf(b),
        None => constant * model.shape(n),
    };
    let max_rel_residual = ns
        .iter()
        .zip(estimates)
        .map(|(&n, &e)| (e / predict(n) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        constant,
        exponent,
        max_rel_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Weighted coefficient of determination.
    pub r_squared: f64,
}

/// Weighted least-squares line `y ≈ intercept + slope · x`.
pub fn linear_fit(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    if x.len() != y.len() || weights.is_some_and(|w| w.len() != x.len()) {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("line fit needs at least 2 points".into()));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..x.len()).map(w).sum();
    let mx = (0..x.len()).map(|i| w(i) * x[i]).sum::<f64>() / sw;
    let my = (0..x.len()).map(|i| w(i) * y[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..x.len()).map(|i| w(i) * (x[i] - mx).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| w(i) * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = (0..x.len()).map(|i| w(i) * (y[i] - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("line fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LineFit {
        intercept,
        slope,
        r_squared,
    })
}

/// Exceedance count below which a tail point is left out of a fit.
pub const MIN_TAIL_COUNT: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct TailFit {
    /// Exponential rate for right tails, double-log slope for left tails.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<TailPoint>,
}

/// Fit `log P(X ≥ t) ≈ a − c·t` by weighted least squares over thresholds
/// with at least [`MIN_TAIL_COUNT`] exceedances.
///
/// Weights are inverse delta-method variances of `log p̂`.
pub fn fit_exponential_tail(samples: &[f64], thresholds: &[f64]) -> Result<TailFit> {
    let n = samples.len() as f64;
    let points: Vec<TailPoint> = empirical_tail(samples, thresholds)?
        .into_iter()
        .filter(|p| p.count >= MIN_TAIL_COUNT && p.prob < 1.0)
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData("fewer than 3 usable tail points".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.threshold).collect();
    let y: Vec<f64> = points.iter().map(|p| p.prob.ln()).collect();
    let w: Vec<f64> = points.iter().map(|p| n * p.prob / (1.0 - p.prob)).collect();
    let line = linear_fit(&x, &y, Some(&w))?;
    Ok(TailFit {
        rate: -line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        points,
    })
}

/// Fit `log(−log P(X ≤ −t)) ≈ a + s·t`; a positive slope `s` is the
/// double-exponential left-tail signature.
pub fn fit_double_exponential_left_tail(samples: &[f64], thresholds: &[f64]) -> Result<TailFit> {
    let n = samples.len() as f64;
    let neg: Vec<f64> = thresholds.iter().map(|t| -t).collect();
    let points: Vec<TailPoint> = empirical_lower_tail(samples, &neg)?
        .into_iter()
        .zip(thresholds)
        .map(|(mut p, &t)| {
            p.threshold = t;
            p
        })
        .filter(|p| p.count >= MIN_TAIL_COUNT && p.prob < 1.0)
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData("fewer than 3 usable tail points".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.threshold).collect();
    let y: Vec<f64> = points.iter().map(|p| (-p.prob.ln()).ln()).collect();
    let w: Vec<f64> = points
        .iter()
        .map(|p| n * p.prob * p.prob.ln().powi(2) / (1.0 - p.prob))
        .collect();
    let line = linear_fit(&x, &y, Some(&w))?;
    Ok(TailFit {
        rate: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        points,
    })
}

/// `max / min` of a set of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}
