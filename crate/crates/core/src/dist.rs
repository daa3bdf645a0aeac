//! The one-dimensional laws used throughout: exact evaluation, hazard
//! functions, normalizing constants and samplers.
//!
//! Every family exposes log-domain cdf and survival functions so that hazards
//! and quantiles stay accurate deep in the tails.

use std::f64::consts::LN_2;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{
    beta_reg, gamma_p, gamma_q, ln_beta, ln_gamma, ln_gamma_p, ln_gamma_pdf, ln_gamma_q,
    ln_normal_sf, ln_sqrt_2pi, normal_cdf, normal_isf, normal_pdf, normal_quantile, normal_sf,
};

/// Below this survival probability the hazard is evaluated as a log-domain
/// ratio of density and tail.
pub const TAIL_SWITCH: f64 = 1e-300;

const QUANTILE_LOG_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    StdGaussian,
    /// Exponential with rate 1 on `[0, ∞)`.
    StdExponential,
    /// Density `½ e^{-|x|}` on ℝ.
    SymExponential,
    Uniform01,
    Beta { a: f64, b: f64 },
    /// Density `e^{-|x|^α/α} / Z` on ℝ, `α > 1`.
    AlphaPotential { alpha: f64 },
    /// Gamma with the given shape and rate 1.
    Gamma { shape: f64 },
    /// Density proportional to `t^{2k-1} e^{-n t^α}` on `[0, ∞)`.
    CoulombRadius { k: u64, n: u64, alpha: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionSpec {
    family: Family,
    poincare_constant: Option<f64>,
    /// Cached closed-form log normalizer of the unnormalized density, where
    /// one is needed for pdf evaluation.
    ln_norm: f64,
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::StdGaussian => write!(f, "gaussian"),
            Family::StdExponential => write!(f, "exp"),
            Family::SymExponential => write!(f, "sym-exp"),
            Family::Uniform01 => write!(f, "uniform"),
            Family::Beta { a, b } => write!(f, "beta({a},{b})"),
            Family::AlphaPotential { alpha } => write!(f, "alpha-potential({alpha})"),
            Family::Gamma { shape } => write!(f, "gamma({shape})"),
            Family::CoulombRadius { k, n, alpha } => write!(f, "coulomb-radius({k},{n},{alpha})"),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl DistributionSpec {
    pub fn new(family: Family) -> Result<Self> {
        let (ln_norm, poincare_constant) = match family {
            Family::StdGaussian => (ln_sqrt_2pi(), Some(1.0)),
            Family::StdExponential => (0.0, Some(4.0)),
            Family::SymExponential => (LN_2, Some(4.0)),
            Family::Uniform01 => (0.0, None),
            Family::Beta { a, b } => {
                positive("beta a", a)?;
                positive("beta b", b)?;
                (ln_beta(a, b), None)
            }
            Family::AlphaPotential { alpha } => {
                if !(alpha.is_finite() && alpha > 1.0) {
                    return Err(Error::invalid(format!("alpha-potential needs alpha > 1, got {alpha}")));
                }
                (alpha_potential_ln_z(alpha), None)
            }
            Family::Gamma { shape } => {
                positive("gamma shape", shape)?;
                (ln_gamma(shape), None)
            }
            Family::CoulombRadius { k, n, alpha } => {
                if k == 0 || n == 0 {
                    return Err(Error::invalid("coulomb radius needs k >= 1 and n >= 1"));
                }
                if !(alpha.is_finite() && alpha >= 1.0) {
                    return Err(Error::invalid(format!("coulomb radius needs alpha >= 1, got {alpha}")));
                }
                (0.0, None)
            }
        };
        Ok(Self {
            family,
            poincare_constant,
            ln_norm,
        })
    }

    pub fn std_gaussian() -> Self {
        Self::new(Family::StdGaussian).expect("parameter-free family")
    }

    pub fn std_exponential() -> Self {
        Self::new(Family::StdExponential).expect("parameter-free family")
    }

    pub fn sym_exponential() -> Self {
        Self::new(Family::SymExponential).expect("parameter-free family")
    }

    pub fn uniform01() -> Self {
        Self::new(Family::Uniform01).expect("parameter-free family")
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Beta { a, b })
    }

    pub fn alpha_potential(alpha: f64) -> Result<Self> {
        Self::new(Family::AlphaPotential { alpha })
    }

    pub fn gamma(shape: f64) -> Result<Self> {
        Self::new(Family::Gamma { shape })
    }

    pub fn coulomb_radius(k: u64, n: u64, alpha: f64) -> Result<Self> {
        Self::new(Family::CoulombRadius { k, n, alpha })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Poincaré constant `C_ν`, where known.
    pub fn poincare_constant(&self) -> Option<f64> {
        self.poincare_constant
    }

    /// Closed support interval `[lo, hi]` (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match self.family {
            Family::StdGaussian | Family::SymExponential | Family::AlphaPotential { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Family::StdExponential | Family::Gamma { .. } | Family::CoulombRadius { .. } => (0.0, f64::INFINITY),
            Family::Uniform01 | Family::Beta { .. } => (0.0, 1.0),
        }
    }

    fn support_error(&self, x: f64) -> Error {
        Error::Support {
            family: self.to_string(),
            x,
        }
    }

    /// `(shape, scale)` of the Gamma variate `u = n t^α` for Coulomb radii.
    fn coulomb_gamma(&self) -> Option<(f64, f64, f64)> {
        match self.family {
            Family::CoulombRadius { k, n, alpha } => Some((2.0 * k as f64 / alpha, n as f64, alpha)),
            _ => None,
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi || x.is_nan() {
            return f64::NEG_INFINITY;
        }
        match self.family {
            Family::StdGaussian => -0.5 * x * x - self.ln_norm,
            Family::StdExponential => -x,
            Family::SymExponential => -x.abs() - LN_2,
            Family::Uniform01 => 0.0,
            Family::Beta { a, b } => (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - self.ln_norm,
            Family::AlphaPotential { alpha } => -x.abs().powf(alpha) / alpha - self.ln_norm,
            Family::Gamma { shape } => ln_gamma_pdf(shape, x),
            Family::CoulombRadius { .. } => {
                let (s, n, alpha) = self.coulomb_gamma().unwrap();
                if x == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let u = n * x.powf(alpha);
                ln_gamma_pdf(s, u) + (n * alpha).ln() + (alpha - 1.0) * x.ln()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::StdGaussian => normal_pdf(x),
            Family::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.ln_pdf(x).exp(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match self.family {
            Family::StdGaussian => normal_cdf(x),
            Family::StdExponential => -(-x).exp_m1(),
            Family::SymExponential => {
                if x <= 0.0 {
                    0.5 * x.exp()
                } else {
                    1.0 - 0.5 * (-x).exp()
                }
            }
            Family::Uniform01 => x,
            Family::Beta { a, b } => beta_reg(a, b, x),
            Family::AlphaPotential { .. } => self.sf(-x),
            Family::Gamma { shape } => gamma_p(shape, x),
            Family::CoulombRadius { .. } => {
                let (s, n, alpha) = self.coulomb_gamma().unwrap();
                gamma_p(s, n * x.powf(alpha))
            }
        }
    }

    /// Survival function `1 − H(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 1.0;
        }
        if x >= hi {
            return 0.0;
        }
        match self.family {
            Family::StdGaussian => normal_sf(x),
            Family::StdExponential => (-x).exp(),
            Family::SymExponential => {
                if x >= 0.0 {
                    0.5 * (-x).exp()
                } else {
                    1.0 - 0.5 * x.exp()
                }
            }
            Family::Uniform01 => 1.0 - x,
            Family::Beta { a, b } => beta_reg(b, a, 1.0 - x),
            Family::AlphaPotential { alpha } => {
                let q = 0.5 * gamma_q(1.0 / alpha, x.abs().powf(alpha) / alpha);
                if x >= 0.0 {
                    q
                } else {
                    1.0 - q
                }
            }
            Family::Gamma { shape } => gamma_q(shape, x),
            Family::CoulombRadius { .. } => {
                let (s, n, alpha) = self.coulomb_gamma().unwrap();
                gamma_q(s, n * x.powf(alpha))
            }
        }
    }

    pub fn ln_sf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return f64::NEG_INFINITY;
        }
        match self.family {
            Family::StdGaussian => ln_normal_sf(x),
            Family::StdExponential => -x,
            Family::SymExponential => {
                if x >= 0.0 {
                    -x - LN_2
                } else {
                    (-0.5 * x.exp()).ln_1p()
                }
            }
            Family::Uniform01 => (-x).ln_1p(),
            Family::Beta { a, b } => {
                let s = beta_reg(b, a, 1.0 - x);
                if s > TAIL_SWITCH {
                    s.ln()
                } else {
                    // I_{1-x}(b, a) ~ (1-x)^b x^{a-1} / (b B(a, b)) as x -> 1
                    (a - 1.0) * x.ln() + b * (-x).ln_1p() - b.ln() - self.ln_norm
                }
            }
            Family::AlphaPotential { alpha } => {
                let s = 1.0 / alpha;
                let u = x.abs().powf(alpha) / alpha;
                if x >= 0.0 {
                    ln_gamma_q(s, u) - LN_2
                } else {
                    (-0.5 * gamma_q(s, u)).ln_1p()
                }
            }
            Family::Gamma { shape } => ln_gamma_q(shape, x),
            Family::CoulombRadius { .. } => {
                let (s, n, alpha) = self.coulomb_gamma().unwrap();
                ln_gamma_q(s, n * x.powf(alpha))
            }
        }
    }

    pub fn ln_cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return f64::NEG_INFINITY;
        }
        if x >= hi {
            return 0.0;
        }
        match self.family {
            Family::StdGaussian => ln_normal_sf(-x),
            Family::StdExponential => (-(-x).exp_m1()).ln(),
            Family::SymExponential | Family::AlphaPotential { .. } => self.ln_sf(-x),
            Family::Uniform01 => x.ln(),
            Family::Beta { a, b } => beta_reg(a, b, x).ln(),
            Family::Gamma { shape } => ln_gamma_p(shape, x),
            Family::CoulombRadius { .. } => {
                let (s, n, alpha) = self.coulomb_gamma().unwrap();
                ln_gamma_p(s, n * x.powf(alpha))
            }
        }
    }

    /// Hazard `κ(x) = h(x) / (1 − H(x))` on `[lo, hi)`.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(x >= lo && x < hi) {
            return Err(self.support_error(x));
        }
        let k = match self.family {
            Family::StdExponential => 1.0,
            Family::SymExponential => {
                if x > 0.0 {
                    1.0
                } else {
                    1.0 / (2.0 * (-x).exp() - 1.0)
                }
            }
            Family::Uniform01 => 1.0 / (1.0 - x),
            _ => {
                let sf = self.sf(x);
                if sf >= TAIL_SWITCH {
                    self.pdf(x) / sf
                } else {
                    (self.ln_pdf(x) - self.ln_sf(x)).exp()
                }
            }
        };
        if k.is_finite() {
            Ok(k)
        } else {
            Err(self.support_error(x))
        }
    }

    /// Quantile `H⁻¹(p)` for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(p));
        }
        match self.family {
            Family::StdGaussian => Ok(normal_quantile(p)),
            Family::StdExponential => Ok(-(-p).ln_1p()),
            Family::SymExponential => Ok(if p <= 0.5 {
                (2.0 * p).ln()
            } else {
                -(2.0 * (1.0 - p)).ln()
            }),
            Family::Uniform01 => Ok(p),
            _ if p > 0.5 => self.solve(Tail::Upper, 1.0 - p),
            _ => self.solve(Tail::Lower, p),
        }
    }

    /// Inverse survival function: the `x` with `1 − H(x) = q`.
    pub fn isf(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(q));
        }
        match self.family {
            Family::StdGaussian => Ok(normal_isf(q)),
            Family::StdExponential => Ok(-q.ln()),
            Family::SymExponential => Ok(if q <= 0.5 {
                -(2.0 * q).ln()
            } else {
                (2.0 * (1.0 - q)).ln()
            }),
            Family::Uniform01 => Ok(1.0 - q),
            _ if q > 0.5 => self.solve(Tail::Lower, 1.0 - q),
            _ => self.solve(Tail::Upper, q),
        }
    }

    /// Safeguarded Newton/bisection on the log cdf (or log survival).
    fn solve(&self, tail: Tail, target: f64) -> Result<f64> {
        let ln_target = target.ln();
        // g is increasing in x in both cases
        let g = |x: f64| match tail {
            Tail::Lower => self.ln_cdf(x) - ln_target,
            Tail::Upper => ln_target - self.ln_sf(x),
        };
        let dg = |x: f64| {
            let lp = self.ln_pdf(x);
            match tail {
                Tail::Lower => (lp - self.ln_cdf(x)).exp(),
                Tail::Upper => (lp - self.ln_sf(x)).exp(),
            }
        };
        let (mut lo, mut hi) = self.bracket(&g)?;
        let mut x = self.initial_guess(tail, target).clamp(lo, hi);
        if !(x > lo && x < hi) || !x.is_finite() {
            x = 0.5 * (lo + hi);
        }
        for _ in 0..400 {
            let gx = g(x);
            if gx.abs() <= QUANTILE_LOG_TOL {
                return Ok(x);
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = dg(x);
            let mut next = x - gx / d;
            if !(next.is_finite() && next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (hi - lo) <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::NoConvergence(target))
    }

    fn initial_guess(&self, tail: Tail, target: f64) -> f64 {
        match (self.family, tail) {
            (Family::AlphaPotential { alpha }, Tail::Upper) => {
                let u = (-(2.0 * target).ln()).max(0.0);
                (alpha * u).powf(1.0 / alpha)
            }
            (Family::AlphaPotential { alpha }, Tail::Lower) => {
                let u = (-(2.0 * target).ln()).max(0.0);
                -(alpha * u).powf(1.0 / alpha)
            }
            (Family::Gamma { shape }, _) => shape,
            (Family::CoulombRadius { .. }, _) => {
                let (s, n, alpha) = self.coulomb_gamma().unwrap();
                (s / n).powf(1.0 / alpha)
            }
            _ => f64::NAN,
        }
    }

    fn bracket<G: Fn(f64) -> f64>(&self, g: &G) -> Result<(f64, f64)> {
        let (slo, shi) = self.support();
        let mut lo = if slo.is_finite() { slo } else { -1.0 };
        let mut hi = if shi.is_finite() { shi } else { 1.0 };
        if !slo.is_finite() {
            let mut step = 1.0;
            while g(lo) > 0.0 {
                lo -= step;
                step *= 2.0;
                if lo < -1e300 {
                    return Err(Error::NoConvergence(lo));
                }
            }
        }
        if !shi.is_finite() {
            let mut step = 1.0;
            while g(hi) < 0.0 {
                hi += step;
                step *= 2.0;
                if hi > 1e300 {
                    return Err(Error::NoConvergence(hi));
                }
            }
        }
        Ok((lo, hi))
    }

    /// `ln Z` of the unnormalized density, by adaptive quadrature.
    ///
    /// Only the α-potential (`e^{-|x|^α/α}`) and Coulomb radius
    /// (`t^{2k-1} e^{-n t^α}`) families carry a normalizer.
    pub fn log_normalizer(&self) -> Result<f64> {
        const TOL: f64 = 1e-12;
        match self.family {
            Family::AlphaPotential { alpha } => {
                let q = quad::integrate_split(|x: f64| (-x.powf(alpha) / alpha).exp(), 0.0, &[1.0, 4.0, 12.0], TOL / 2.0)?;
                Ok((2.0 * q.value).ln())
            }
            Family::CoulombRadius { k, n, alpha } => {
                let (k, n) = (k as f64, n as f64);
                let m = 2.0 * k - 1.0;
                let potential = |t: f64| n * t.powf(alpha) - m * t.ln();
                let mode = (m / (n * alpha)).powf(1.0 / alpha);
                let curvature = n * alpha * (alpha - 1.0) * mode.powf(alpha - 2.0) + m / (mode * mode);
                let width = 1.0 / curvature.sqrt();
                let v0 = potential(mode);
                // integrate e^{-(V - V(mode))}, relative tolerance via the peak value 1
                let f = |t: f64| {
                    if t <= 0.0 {
                        0.0
                    } else {
                        (v0 - potential(t)).exp()
                    }
                };
                let cuts: Vec<f64> = [-8.0, -2.0, 0.0, 2.0, 8.0, 30.0]
                    .iter()
                    .map(|z| mode + z * width)
                    .filter(|&c| c > 0.0)
                    .collect();
                let q = quad::integrate_split(f, 0.0, &cuts, TOL * width.min(1.0))?;
                Ok(q.value.ln() - v0)
            }
            _ => Err(Error::NotApplicable("log_normalizer")),
        }
    }

    /// A prepared sampler for repeated draws.
    pub fn sampler(&self) -> Sampler {
        let kind = match self.family {
            Family::StdGaussian => SamplerKind::Gaussian,
            Family::StdExponential => SamplerKind::Exponential,
            Family::SymExponential => SamplerKind::SymExponential,
            Family::Uniform01 => SamplerKind::Uniform,
            Family::Beta { a, b } => SamplerKind::Beta(rand_distr::Beta::new(a, b).expect("validated")),
            Family::AlphaPotential { alpha } => {
                SamplerKind::AlphaPotential(rand_distr::Gamma::new(1.0 / alpha, 1.0).expect("validated"), alpha)
            }
            Family::Gamma { shape } => SamplerKind::Gamma(rand_distr::Gamma::new(shape, 1.0).expect("validated")),
            Family::CoulombRadius { .. } => {
                let (s, n, alpha) = self.coulomb_gamma().unwrap();
                SamplerKind::PowerGamma(rand_distr::Gamma::new(s, 1.0).expect("validated"), n, 1.0 / alpha)
            }
        };
        Sampler { kind }
    }

    /// `count` i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        let s = self.sampler();
        (0..count).map(|_| s.draw(rng)).collect()
    }

    /// One draw of the maximum of `n` i.i.d. copies, by inverting
    /// `P(M_n > x) = 1 − H(x)^n` at an open-interval uniform.
    pub fn sample_max<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Result<f64> {
        self.sample_order_stat(n, 1, rng)
    }

    /// One draw of the `k`-th largest of `n` i.i.d. copies.
    ///
    /// The survival probability of the `k`-th largest is Beta(k, n − k + 1);
    /// the smaller of the two tails is drawn and inverted.
    pub fn sample_order_stat<R: Rng + ?Sized>(&self, n: u64, k: u64, rng: &mut R) -> Result<f64> {
        if k == 0 || k > n {
            return Err(Error::invalid(format!("order statistic rank {k} outside 1..={n}")));
        }
        if k == 1 {
            let u: f64 = rng.sample(rand_distr::Open01);
            return self.isf(-(u.ln() / n as f64).exp_m1());
        }
        let (a, b) = (k as f64, (n - k + 1) as f64);
        let upper = 2 * k <= n + 1;
        let beta = if upper {
            rand_distr::Beta::new(a, b)
        } else {
            rand_distr::Beta::new(b, a)
        }
        .map_err(|e| Error::invalid(e.to_string()))?;
        let tail = loop {
            let v: f64 = beta.sample(rng);
            if v > 0.0 && v < 1.0 {
                break v;
            }
        };
        if upper {
            self.isf(tail)
        } else {
            self.quantile(tail)
        }
    }
}

#[derive(Clone, Copy)]
enum Tail {
    Lower,
    Upper,
}

/// Closed form `ln Z` for the α-potential, `Z = 2 α^{1/α - 1} Γ(1/α)`.
fn alpha_potential_ln_z(alpha: f64) -> f64 {
    LN_2 + (1.0 / alpha - 1.0) * alpha.ln() + ln_gamma(1.0 / alpha)
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Gaussian,
    Exponential,
    SymExponential,
    Uniform,
    Beta(rand_distr::Beta<f64>),
    /// `sign · (α γ)^{1/α}` with `γ ~ Gamma(1/α)`.
    AlphaPotential(rand_distr::Gamma<f64>, f64),
    Gamma(rand_distr::Gamma<f64>),
    /// `(γ / n)^{1/α}`.
    PowerGamma(rand_distr::Gamma<f64>, f64, f64),
}

#[derive(Clone, Debug)]
pub struct Sampler {
    kind: SamplerKind,
}

impl Sampler {
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Gaussian => StandardNormal.sample(rng),
            SamplerKind::Exponential => Exp1.sample(rng),
            SamplerKind::SymExponential => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            }
            SamplerKind::Uniform => rng.random::<f64>(),
            SamplerKind::Beta(d) => d.sample(rng),
            SamplerKind::AlphaPotential(g, alpha) => {
                let r = (alpha * g.sample(rng)).powf(1.0 / alpha);
                if rng.random::<bool>() {
                    r
                } else {
                    -r
                }
            }
            SamplerKind::Gamma(g) => g.sample(rng),
            SamplerKind::PowerGamma(g, n, inv_alpha) => (g.sample(rng) / n).powf(*inv_alpha),
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out {
            *v = self.draw(rng);
        }
    }
}

/// Majorant of `1/κ` for Beta(a, b) on `(0, 1)`:
/// `min((1 − x^a) / (a x^{a−1}), (1 − x) / (b x^{a−1}))`.
pub fn beta_inverse_hazard_majorant(a: f64, b: f64, x: f64) -> f64 {
    let xa1 = x.powf(a - 1.0);
    let first = (1.0 - x.powf(a)) / (a * xa1);
    let second = (1.0 - x) / (b * xa1);
    first.min(second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;

    fn zoo() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::std_gaussian(),
            DistributionSpec::std_exponential(),
            DistributionSpec::sym_exponential(),
            DistributionSpec::uniform01(),
            DistributionSpec::beta(2.0, 3.0).unwrap(),
            DistributionSpec::beta(0.7, 1.5).unwrap(),
            DistributionSpec::alpha_potential(3.0).unwrap(),
            DistributionSpec::alpha_potential(1.5).unwrap(),
            DistributionSpec::gamma(1.0).unwrap(),
            DistributionSpec::gamma(4.5).unwrap(),
            DistributionSpec::coulomb_radius(3, 10, 2.0).unwrap(),
            DistributionSpec::coulomb_radius(1, 1, 1.0).unwrap(),
        ]
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(DistributionSpec::uniform01().pdf(0.5), 1.0);
        assert_relative_eq!(DistributionSpec::sym_exponential().pdf(0.0), 0.5, epsilon = 1e-15);
        let a2 = DistributionSpec::alpha_potential(2.0).unwrap();
        assert_relative_eq!(a2.pdf(0.0), 0.398_942_280_401_432_7, epsilon = 1e-14);
        assert_eq!(DistributionSpec::std_exponential().pdf(-1.0), 0.0);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(DistributionSpec::std_gaussian().cdf(0.0), 0.5);
        assert_relative_eq!(DistributionSpec::sym_exponential().cdf(0.5f64.ln()), 0.25, epsilon = 1e-15);
        assert_relative_eq!(DistributionSpec::std_exponential().cdf(LN_2), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(DistributionSpec::uniform01().quantile(0.3).unwrap(), 0.3);
        assert_relative_eq!(
            DistributionSpec::sym_exponential().quantile(0.25).unwrap(),
            -LN_2,
            epsilon = 1e-15
        );
        assert_eq!(DistributionSpec::std_gaussian().quantile(0.5).unwrap(), 0.0);
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(DistributionSpec::std_gaussian().quantile(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn hazard_examples() {
        let e = DistributionSpec::std_exponential();
        for x in [0.0, 0.3, 7.0, 800.0] {
            assert_eq!(e.hazard(x).unwrap(), 1.0);
        }
        assert_relative_eq!(DistributionSpec::sym_exponential().hazard(-LN_2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(DistributionSpec::uniform01().hazard(0.5).unwrap(), 2.0, epsilon = 1e-15);
        assert!(matches!(DistributionSpec::uniform01().hazard(1.0), Err(Error::Support { .. })));
        assert!(matches!(DistributionSpec::beta(2.0, 2.0).unwrap().hazard(1.5), Err(Error::Support { .. })));
    }

    #[test]
    fn sym_exponential_hazard_formula_matches_ratio() {
        let d = DistributionSpec::sym_exponential();
        for x in [-5.0, -1.0, -0.1, 0.0, 0.4, 3.0] {
            let ratio = d.pdf(x) / d.sf(x);
            assert_relative_eq!(d.hazard(x).unwrap(), ratio, max_relative = 1e-14);
        }
    }

    #[test]
    fn far_tail_hazards_follow_potential_derivative() {
        let g = DistributionSpec::std_gaussian();
        // sf(40) ~ 4e-350 underflows; κ(x) ≈ x + 1/x
        let k = g.hazard(40.0).unwrap();
        assert_relative_eq!(k, 40.0 + 1.0 / 40.0, max_relative = 1e-5);
        let a3 = DistributionSpec::alpha_potential(3.0).unwrap();
        let x = 14.0;
        assert!(a3.sf(x) < TAIL_SWITCH);
        // κ ≈ V'(x) = x^{α-1} to leading order
        assert_relative_eq!(a3.hazard(x).unwrap(), x * x, max_relative = 1e-2);
        let gam = DistributionSpec::gamma(2.0).unwrap();
        // κ(x) = x / (1 + x) exactly for shape 2
        for x in [1.0, 50.0, 800.0] {
            assert_relative_eq!(gam.hazard(x).unwrap(), x / (1.0 + x), max_relative = 1e-12);
        }
    }

    #[test]
    fn log_normalizer_examples() {
        let a2 = DistributionSpec::alpha_potential(2.0).unwrap();
        assert_relative_eq!(a2.log_normalizer().unwrap(), 0.918_938_533_204_672_8, epsilon = 1e-12);
        let near_one = DistributionSpec::alpha_potential(1.0001).unwrap();
        assert!((near_one.log_normalizer().unwrap().exp() - 2.0).abs() < 1e-3);
        let c = DistributionSpec::coulomb_radius(1, 1, 1.0).unwrap();
        assert!(c.log_normalizer().unwrap().abs() < 1e-12);
        assert!(matches!(
            DistributionSpec::std_gaussian().log_normalizer(),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn log_normalizer_matches_closed_forms() {
        for alpha in [1.2, 2.0, 3.0, 5.0] {
            let d = DistributionSpec::alpha_potential(alpha).unwrap();
            assert_relative_eq!(d.log_normalizer().unwrap(), alpha_potential_ln_z(alpha), epsilon = 1e-11);
        }
        // ∫ t^{2k-1} e^{-n t^α} dt = Γ(2k/α) / (α n^{2k/α})
        for (k, n, alpha) in [(3u64, 10u64, 2.0), (50, 100, 2.0), (7, 1000, 1.5), (1000, 1000, 3.0)] {
            let d = DistributionSpec::coulomb_radius(k, n, alpha).unwrap();
            let s = 2.0 * k as f64 / alpha;
            let exact = ln_gamma(s) - alpha.ln() - s * (n as f64).ln();
            assert_relative_eq!(d.log_normalizer().unwrap(), exact, epsilon = 1e-9, max_relative = 1e-11);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DistributionSpec::beta(0.0, 1.0).is_err());
        assert!(DistributionSpec::beta(1.0, -2.0).is_err());
        assert!(DistributionSpec::alpha_potential(1.0).is_err());
        assert!(DistributionSpec::gamma(f64::NAN).is_err());
        assert!(DistributionSpec::coulomb_radius(0, 4, 2.0).is_err());
        assert!(DistributionSpec::coulomb_radius(1, 4, 0.5).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_across_zoo() {
        let mut rng = RngStream::new(1, 0);
        for d in zoo() {
            let s = d.sampler();
            for _ in 0..1000 {
                let x = s.draw(&mut rng);
                let (lo, _) = d.support();
                if x <= lo {
                    continue;
                }
                let p = d.cdf(x);
                if !(p > 0.0 && p < 1.0) {
                    continue;
                }
                let back = if p <= 0.5 { d.quantile(p).unwrap() } else { d.isf(d.sf(x)).unwrap() };
                assert!(
                    (back - x).abs() <= 1e-9 * x.abs().max(1.0),
                    "{d}: x = {x}, back = {back}"
                );
            }
        }
    }

    #[test]
    fn quantile_meets_cdf_tolerance() {
        for d in zoo() {
            for p in [1e-8, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
                let x = d.quantile(p).unwrap();
                assert!((d.cdf(x) - p).abs() <= 1e-12, "{d}: p = {p}, cdf = {}", d.cdf(x));
            }
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        for d in zoo() {
            let (lo, hi) = d.support();
            let f = |x: f64| d.pdf(x);
            let total = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => {
                    // split to tame endpoint singularities
                    quad::integrate(f, lo, 0.5, 1e-12).unwrap().value + quad::integrate(f, 0.5, hi, 1e-12).unwrap().value
                }
                (true, false) => {
                    let m = d.quantile(0.5).unwrap();
                    quad::integrate_split(f, lo, &[0.5 * m, m, 2.0 * m, 4.0 * m], 1e-12).unwrap().value
                }
                _ => {
                    let right = quad::integrate_split(f, 0.0, &[1.0, 3.0, 8.0], 1e-12).unwrap().value;
                    let left = quad::integrate_split(|x| d.pdf(-x), 0.0, &[1.0, 3.0, 8.0], 1e-12).unwrap().value;
                    left + right
                }
            };
            assert!((total - 1.0).abs() < 1e-9, "{d}: ∫pdf = {total}");
        }
    }

    #[test]
    fn hazard_times_survival_is_density() {
        let mut rng = RngStream::new(2, 0);
        for d in zoo() {
            for x in d.sample(&mut rng, 300) {
                let sf = d.sf(x);
                if sf <= 1e-12 || x <= d.support().0 {
                    continue;
                }
                let lhs = d.hazard(x).unwrap() * sf;
                let rhs = d.pdf(x);
                assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-300), "{d}: x = {x}");
                assert!(d.hazard(x).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn beta_majorant_dominates_exact_inverse_hazard() {
        for (a, b) in [(1.0, 1.0), (2.0, 2.0), (3.0, 1.5), (1.5, 4.0)] {
            let d = DistributionSpec::beta(a, b).unwrap();
            for i in 1..200 {
                let x = i as f64 / 200.0;
                let inv = 1.0 / d.hazard(x).unwrap();
                assert!(inv <= beta_inverse_hazard_majorant(a, b, x) * (1.0 + 1e-9), "a={a} b={b} x={x}");
            }
        }
        // a = b = 1 recovers the uniform 1 - x
        assert_relative_eq!(beta_inverse_hazard_majorant(1.0, 1.0, 0.3), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = DistributionSpec::coulomb_radius(4, 9, 2.0).unwrap();
        let a = d.sample(&mut RngStream::new(5, 1), 50);
        let b = d.sample(&mut RngStream::new(5, 1), 50);
        assert_eq!(a, b);
    }

    #[test]
    fn direct_max_matches_brute_force_law() {
        let mut rng = RngStream::new(77, 0);
        for d in [DistributionSpec::std_gaussian(), DistributionSpec::gamma(1.0).unwrap()] {
            let draws: Vec<f64> = (0..10_000).map(|_| d.sample_max(50, &mut rng).unwrap()).collect();
            let brute: Vec<f64> = (0..10_000)
                .map(|_| d.sample(&mut rng, 50).into_iter().fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let cdf = |x: f64| d.cdf(x).powi(50);
            let thr = crate::stats::ks_threshold(10_000);
            assert!(crate::stats::ks_statistic(&draws, cdf).unwrap() <= thr);
            assert!(crate::stats::ks_statistic(&brute, cdf).unwrap() <= thr);
        }
    }

    #[test]
    fn order_statistics_of_uniforms_are_beta() {
        // the k-th largest of n uniforms has mean (n − k + 1)/(n + 1)
        let u = DistributionSpec::uniform01();
        let mut rng = RngStream::new(78, 0);
        for (n, k) in [(9, 5), (20, 3), (20, 18), (7, 7)] {
            let draws: Vec<f64> = (0..20_000).map(|_| u.sample_order_stat(n, k, &mut rng).unwrap()).collect();
            let m = crate::stats::Moments::from_slice(&draws);
            let expect = (n - k + 1) as f64 / (n + 1) as f64;
            assert!((m.mean() - expect).abs() <= 3.5 * m.se_mean(), "n={n} k={k}");
        }
        assert!(u.sample_order_stat(5, 0, &mut rng).is_err());
        assert!(u.sample_order_stat(5, 6, &mut rng).is_err());
    }

}
