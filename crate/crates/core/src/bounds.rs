//! Monte Carlo estimators for the right-hand sides of the weighted Poincaré
//! inequalities, the Talagrand L1–L2 comparison bound, the Laplace-transform
//! hypothesis behind the deviation inequality, and Harris' negative
//! association.
//!
//! Every report records which outer constant it carries. Constants the
//! theory leaves unspecified are never invented: they are either derived
//! numerically from the transport map ([`derived_weight_constant`]) or left
//! out and tagged [`ConstantConvention::ExcludesC`].
//!
//! For order-statistic functionals the integrand only depends on the active
//! coordinate, which is drawn directly from its exact law instead of
//! sampling all `n` coordinates.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::functional::Functional;
use crate::rng::RngStream;
use crate::stats::{mean_var_se, MeanVar, Moments};
use crate::transport::{linspace, TransportMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantConvention {
    /// multiplied by the source Poincaré constant `C_ν`
    IncludesPoincare,
    /// multiplied by 4, the exponential Poincaré constant
    IncludesFour,
    /// bare expectation; the inequality's constant `C` is not applied
    ExcludesC,
}

impl fmt::Display for ConstantConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstantConvention::IncludesPoincare => "includes C_nu",
            ConstantConvention::IncludesFour => "includes 4",
            ConstantConvention::ExcludesC => "excludes C",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub estimate: f64,
    pub standard_error: f64,
    pub sample_count: usize,
    pub constant_convention: ConstantConvention,
}

impl BoundReport {
    fn from_integrand(values: &[f64], scale: f64, convention: ConstantConvention) -> Self {
        let m = Moments::from_slice(values);
        let se = if values.len() > 1 { m.se_mean() } else { 0.0 };
        Self {
            estimate: scale * m.mean(),
            standard_error: scale * se,
            sample_count: values.len(),
            constant_convention: convention,
        }
    }

    /// `scale · estimate ≥ Var − 3 · √(SE_bound² + SE_var²)`.
    pub fn dominates(&self, scale: f64, variance: &MeanVar) -> bool {
        let se = ((scale * self.standard_error).powi(2) + variance.se_variance.powi(2)).sqrt();
        scale * self.estimate >= variance.variance - 3.0 * se
    }
}

/// A bound together with the moments of `f(X)` from the same draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundStudy {
    pub bound: BoundReport,
    pub functional: MeanVar,
}

fn need_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::invalid(format!("need at least 2 Monte Carlo samples, got {samples}")));
    }
    Ok(())
}

/// Draw `(f(X), integrand(X))` pairs and summarize.
fn paired<F>(samples: usize, stream: &RngStream, exec: &Exec, draw: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&mut RngStream, &mut Vec<f64>) -> Result<(f64, f64)> + Sync,
{
    need_samples(samples)?;
    let blocks = exec.run_blocks(stream, samples, |range, rng| {
        let mut buf = Vec::new();
        range.map(|_| draw(rng, &mut buf)).collect::<Result<Vec<_>>>()
    });
    let mut values = Vec::with_capacity(samples);
    let mut integrand = Vec::with_capacity(samples);
    for block in blocks {
        for (v, w) in block? {
            values.push(v);
            integrand.push(w);
        }
    }
    Ok((values, integrand))
}

fn study(values: &[f64], integrand: &[f64], scale: f64, convention: ConstantConvention) -> Result<BoundStudy> {
    Ok(BoundStudy {
        bound: BoundReport::from_integrand(integrand, scale, convention),
        functional: mean_var_se(values)?,
    })
}

/// `C_ν Σᵢ E[(∂ᵢf)²∘T(Y) · t′(Yᵢ)²]` with `Y ~ ν^n`, alongside `Var f(T(Y))`.
pub fn weighted_poincare_study(f: &Functional, map: &TransportMap, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundStudy> {
    let c_nu = map.source().poincare_constant().ok_or_else(|| {
        Error::Configuration(format!("source {} has no known Poincare constant", map.source()))
    })?;
    let n = f.dimension();
    let sampler = map.source().sampler();
    let (values, integrand) = paired(samples, stream, exec, |rng, y| {
        if let Some(k) = f.rank() {
            // t is increasing, so the active coordinate is the same before and after T
            let yk = map.source().sample_order_stat(n as u64, k as u64, rng)?;
            let tp = map.t_prime(yk)?;
            return Ok((map.t_eval(yk)?, tp * tp));
        }
        y.resize(n, 0.0);
        sampler.fill(rng, y);
        let x = y.iter().map(|&v| map.t_eval(v)).collect::<Result<Vec<f64>>>()?;
        let g = f.grad(&x)?;
        let mut sum = 0.0;
        for (gi, &yi) in g.iter().zip(y.iter()) {
            if *gi != 0.0 {
                let tp = map.t_prime(yi)?;
                sum += gi * gi * tp * tp;
            }
        }
        Ok((f.eval(&x)?, sum))
    })?;
    study(&values, &integrand, c_nu, ConstantConvention::IncludesPoincare)
}

pub fn weighted_poincare_rhs(f: &Functional, map: &TransportMap, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundReport> {
    Ok(weighted_poincare_study(f, map, samples, stream, exec)?.bound)
}

/// `4 Σᵢ E[(∂ᵢf(X) / κ_{μᵢ}(Xᵢ))²]` for independent, possibly different
/// factors `X_i ~ μᵢ` (the exponential source has Poincaré constant 4).
pub fn exp_weight_product_study(
    f: &Functional,
    factors: &[DistributionSpec],
    samples: usize,
    stream: &RngStream,
    exec: &Exec,
) -> Result<BoundStudy> {
    let n = f.dimension();
    if factors.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: factors.len(),
        });
    }
    let samplers: Vec<_> = factors.iter().map(|d| d.sampler()).collect();
    let (values, integrand) = paired(samples, stream, exec, |rng, x| {
        x.clear();
        x.extend(samplers.iter().map(|s| s.draw(rng)));
        let mut err = None;
        let w = f.weighted_grad_sq(x, |i, xi| match factors[i].hazard(xi) {
            Ok(k) => 1.0 / (k * k),
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok((f.eval(x)?, w))
    })?;
    study(&values, &integrand, 4.0, ConstantConvention::IncludesFour)
}

pub fn exp_weight_study(f: &Functional, mu: &DistributionSpec, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundStudy> {
    let Some(k) = f.rank() else {
        let factors = vec![mu.clone(); f.dimension()];
        return exp_weight_product_study(f, &factors, samples, stream, exec);
    };
    let n = f.dimension() as u64;
    let (values, integrand) = paired(samples, stream, exec, |rng, _| {
        let x = mu.sample_order_stat(n, k as u64, rng)?;
        let h = mu.hazard(x)?;
        Ok((x, 1.0 / (h * h)))
    })?;
    study(&values, &integrand, 4.0, ConstantConvention::IncludesFour)
}

/// `4 Σᵢ E[(∂ᵢf(X) / κ_μ(Xᵢ))²]`, `X ~ μ^n`.
pub fn exp_weight_rhs(f: &Functional, mu: &DistributionSpec, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundReport> {
    Ok(exp_weight_study(f, mu, samples, stream, exec)?.bound)
}

fn weight_study<W>(f: &Functional, mu: &DistributionSpec, weight: W, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundStudy>
where
    W: Fn(f64) -> f64 + Sync,
{
    let n = f.dimension();
    let sampler = mu.sampler();
    let rank = f.rank();
    let (values, integrand) = paired(samples, stream, exec, |rng, x| {
        if let Some(k) = rank {
            let xk = mu.sample_order_stat(n as u64, k as u64, rng)?;
            let w = weight(xk);
            return Ok((xk, w * w));
        }
        x.resize(n, 0.0);
        sampler.fill(rng, x);
        let w = f.weighted_grad_sq(x, |_, xi| {
            let w = weight(xi);
            w * w
        })?;
        Ok((f.eval(x)?, w))
    })?;
    study(&values, &integrand, 1.0, ConstantConvention::ExcludesC)
}

/// `Σᵢ E[(∂ᵢf)² (1 + |Xᵢ|)^{-2}]` under the standard Gaussian.
pub fn gaussian_weight_study(f: &Functional, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundStudy> {
    weight_study(f, &DistributionSpec::std_gaussian(), |x| 1.0 / (1.0 + x.abs()), samples, stream, exec)
}

pub fn gaussian_weight_rhs(f: &Functional, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundReport> {
    Ok(gaussian_weight_study(f, samples, stream, exec)?.bound)
}

/// `Σᵢ E[(∂ᵢf)² (1 + V′(|Xᵢ|))^{-2}]`, `V′(x) = x^{α−1}`, `X ~ μ_α^n`.
pub fn logconcave_weight_study(f: &Functional, alpha: f64, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundStudy> {
    let mu = DistributionSpec::alpha_potential(alpha)?;
    weight_study(f, &mu, |x| 1.0 / (1.0 + x.abs().powf(alpha - 1.0)), samples, stream, exec)
}

pub fn logconcave_weight_rhs(f: &Functional, alpha: f64, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundReport> {
    Ok(logconcave_weight_study(f, alpha, samples, stream, exec)?.bound)
}

/// Per-coordinate `‖∂ᵢf‖₁` and `‖∂ᵢf‖₂²` sums over one block.
#[derive(Clone, Debug)]
struct NormSums {
    l1: Vec<f64>,
    l2: Vec<f64>,
}

/// Visit the nonzero partials of `f` at a fresh draw from `γ_n`.
///
/// For order-statistic functionals of i.i.d. continuous coordinates the
/// active index is uniform on `0..n` and the partial there is 1, so only the
/// index is drawn.
fn for_each_grad<R: Rng, F: FnMut(usize, f64)>(f: &Functional, rng: &mut R, x: &mut [f64], mut visit: F) -> Result<()> {
    if f.rank().is_some() {
        visit(rng.random_range(0..x.len()), 1.0);
        return Ok(());
    }
    StandardNormal.sample_iter(&mut *rng).zip(x.iter_mut()).for_each(|(v, xi)| *xi = v);
    if f.is_indicator() {
        let (i, s) = f.active_index(x)?;
        visit(i, s);
    } else {
        for (i, g) in f.grad(x)?.into_iter().enumerate() {
            if g != 0.0 {
                visit(i, g);
            }
        }
    }
    Ok(())
}

/// `Σᵢ ‖∂ᵢf‖₂² / (1 + log(‖∂ᵢf‖₂ / ‖∂ᵢf‖₁))` under `γ_n`, constant excluded.
///
/// Coordinates with `‖∂ᵢf‖₁ = 0` contribute nothing. The standard error is
/// the delta-method one, evaluated on a second pass over the same draws.
pub fn talagrand_l1l2_rhs(f: &Functional, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundReport> {
    need_samples(samples)?;
    let n = f.dimension();
    let partial = exec.run_blocks(stream, samples, |range, rng| -> Result<NormSums> {
        let mut sums = NormSums {
            l1: vec![0.0; n],
            l2: vec![0.0; n],
        };
        let mut x = vec![0.0; n];
        for _ in range {
            for_each_grad(f, rng, &mut x, |i, g| {
                sums.l1[i] += g.abs();
                sums.l2[i] += g * g;
            })?;
        }
        Ok(sums)
    });
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for block in partial {
        let block = block?;
        for i in 0..n {
            l1[i] += block.l1[i];
            l2[i] += block.l2[i];
        }
    }
    let count = samples as f64;
    let mut total = 0.0;
    // partial derivatives of the total in each coordinate's (‖·‖₁, ‖·‖₂²)
    let mut d_l1 = vec![0.0; n];
    let mut d_l2 = vec![0.0; n];
    for i in 0..n {
        let a = l1[i] / count;
        let b = l2[i] / count;
        if a <= 0.0 || b <= 0.0 {
            continue;
        }
        let denom = 1.0 + 0.5 * b.ln() - a.ln();
        total += b / denom;
        d_l2[i] = 1.0 / denom - 0.5 / (denom * denom);
        d_l1[i] = b / (a * denom * denom);
    }
    let influence = exec.run_blocks(stream, samples, |range, rng| -> Result<Vec<f64>> {
        let mut x = vec![0.0; n];
        let mut out = Vec::with_capacity(range.len());
        for _ in range {
            let mut phi = 0.0;
            for_each_grad(f, rng, &mut x, |i, g| phi += d_l1[i] * g.abs() + d_l2[i] * g * g)?;
            out.push(phi);
        }
        Ok(out)
    });
    let mut phis = Vec::with_capacity(samples);
    for block in influence {
        phis.extend(block?);
    }
    let se = Moments::from_slice(&phis).se_mean();
    Ok(BoundReport {
        estimate: total,
        standard_error: se,
        sample_count: samples,
        constant_convention: ConstantConvention::ExcludesC,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceCheck {
    pub theta: f64,
    /// `Var(e^{θX/2})`
    pub lhs: f64,
    /// `(θ²/4) K E[e^{θX}]`
    pub rhs: f64,
    /// standard error of `rhs − lhs`
    pub se: f64,
    pub pass: bool,
}

/// Empirical check of `Var(e^{θX/2}) ≤ (θ²/4) K E[e^{θX}]` for each θ, with
/// `X` the samples centered at their mean.
///
/// A θ passes when `rhs − lhs ≥ −3 SE`; the SE of the difference comes from
/// its influence function, which keeps the leading-order cancellation
/// between the two sides.
pub fn laplace_hypothesis_check(samples: &[f64], k: f64, thetas: &[f64]) -> Result<Vec<LaplaceCheck>> {
    if thetas.is_empty() {
        return Err(Error::InsufficientData("empty theta grid".into()));
    }
    if samples.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 samples".into()));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("K must be positive, got {k}")));
    }
    let limit = 1.0 / (2.0 * k.sqrt());
    if let Some(&bad) = thetas.iter().find(|&&t| !(t > 0.0 && t < limit)) {
        return Err(Error::invalid(format!("theta {bad} outside (0, {limit})")));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let n = centered.len() as f64;
    Ok(thetas
        .iter()
        .map(|&theta| {
            let half: Vec<f64> = centered.iter().map(|x| (0.5 * theta * x).exp()).collect();
            let m1 = half.iter().sum::<f64>() / n;
            let m2 = half.iter().map(|y| y * y).sum::<f64>() / n;
            let a = 0.25 * theta * theta * k;
            let lhs = m2 - m1 * m1;
            let rhs = a * m2;
            let influence: Vec<f64> = half.iter().map(|y| (a - 1.0) * y * y + 2.0 * m1 * y).collect();
            let se = Moments::from_slice(&influence).se_mean();
            LaplaceCheck {
                theta,
                lhs,
                rhs,
                se,
                pass: rhs - lhs >= -3.0 * se,
            }
        })
        .collect())
}

/// `E[ψ̄(M_n)²]` with `M_n` the max of `n` draws from the target and `ψ̄` the
/// nonincreasing envelope of the transport weight.
pub fn epsilon_n_estimate(map: &TransportMap, n: usize, samples: usize, stream: &RngStream, exec: &Exec) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let envelope = map.psi_envelope()?;
    let target = map.target();
    let (_, integrand) = paired(samples, stream, exec, |rng, _| {
        let m = target.sample_max(n as u64, rng)?;
        let psi = envelope.eval(m)?;
        Ok((m, psi * psi))
    })?;
    Ok(BoundReport::from_integrand(&integrand, 1.0, ConstantConvention::ExcludesC))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarrisReport {
    pub e_fg: f64,
    pub e_f_e_g: f64,
    /// standard error of the covariance estimate
    pub se: f64,
    pub pass: bool,
}

/// Harris' inequality `E[fg] ≤ E[f] E[g]` for `f` nondecreasing and `g`
/// nonincreasing in each coordinate, checked with 3 SE slack.
pub fn harris_check<F, G>(mu: &DistributionSpec, n: usize, f: F, g: G, samples: usize, stream: &RngStream, exec: &Exec) -> Result<HarrisReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    let sampler = mu.sampler();
    let (fs, gs) = paired(samples, stream, exec, |rng, x| {
        x.resize(n, 0.0);
        sampler.fill(rng, x);
        Ok((f(x), g(x)))
    })?;
    let count = fs.len() as f64;
    let ef = fs.iter().sum::<f64>() / count;
    let eg = gs.iter().sum::<f64>() / count;
    let e_fg = fs.iter().zip(&gs).map(|(a, b)| a * b).sum::<f64>() / count;
    let cross: Vec<f64> = fs.iter().zip(&gs).map(|(a, b)| (a - ef) * (b - eg)).collect();
    let se = Moments::from_slice(&cross).se_mean();
    Ok(HarrisReport {
        e_fg,
        e_f_e_g: ef * eg,
        se,
        pass: e_fg - ef * eg <= 3.0 * se,
    })
}

/// `C_ν · (max_y ψ(y) / shape(y))²` over `y ∈ [−10, 10]`: the constant that
/// turns a weight-shape expectation into an upper bound, derived from the
/// transport rather than assumed.
pub fn derived_weight_constant<F: Fn(f64) -> f64>(map: &TransportMap, shape: F) -> Result<f64> {
    let c_nu = map
        .source()
        .poincare_constant()
        .ok_or_else(|| Error::Configuration(format!("source {} has no known Poincare constant", map.source())))?;
    let grid = linspace(-10.0, 10.0, 4001);
    let c = crate::transport::fit_weight_constant(map, shape, &grid)?;
    Ok(c_nu * c * c)
}
