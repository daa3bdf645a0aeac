//! Moduli of the planar β = 2 Coulomb gas with radial potential `t^α`.
//!
//! At β = 2 the moduli are, in law, independent radii with densities
//! `∝ t^{2k−1} e^{−n t^α}`, `k = 1..n`. Each radius is drawn as
//! `(γ_k / n)^{1/α}` with `γ_k ~ Gamma(2k/α)`.

use rand_distr::{Distribution, Gamma};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::RngStream;
use crate::stats::{fit_exponential_tail, gumbel_cdf, gumbel_constants, ks_statistic, mean_var_se, GumbelKind, MeanVar, TailFit};
use crate::transport::linspace;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoulombSpec {
    n: u64,
    alpha: f64,
}

impl CoulombSpec {
    /// β = 2 gas; use [`CoulombSpec::with_beta`] to validate other β.
    pub fn new(n: u64, alpha: f64) -> Result<Self> {
        Self::with_beta(n, alpha, 2.0)
    }

    pub fn with_beta(n: u64, alpha: f64, beta: f64) -> Result<Self> {
        if beta != 2.0 {
            return Err(Error::invalid(format!(
                "the independent-radii representation needs beta = 2, got {beta}"
            )));
        }
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be >= 1, got {alpha}")));
        }
        Ok(Self { n, alpha })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        2.0
    }

    /// Law of the `k`-th radius.
    pub fn radius(&self, k: u64) -> Result<DistributionSpec> {
        DistributionSpec::coulomb_radius(k, self.n, self.alpha)
    }

    fn gammas(&self) -> Vec<Gamma<f64>> {
        (1..=self.n)
            .map(|k| Gamma::new(2.0 * k as f64 / self.alpha, 1.0).expect("positive shape"))
            .collect()
    }
}

/// One draw of all `n` radii, `k`-th entry from the `k`-th radius law.
pub fn sample_radii(spec: &CoulombSpec, stream: &mut RngStream) -> Vec<f64> {
    let n = spec.n as f64;
    let inv = 1.0 / spec.alpha;
    spec.gammas().iter().map(|g| (g.sample(stream) / n).powf(inv)).collect()
}

/// `reps` i.i.d. copies of the top modulus `max_k R_k`.
pub fn sample_max_modulus(spec: &CoulombSpec, reps: usize, stream: &RngStream, exec: &Exec) -> Vec<f64> {
    let gammas = spec.gammas();
    let n = spec.n as f64;
    let inv = 1.0 / spec.alpha;
    exec.replicate(stream, reps, |_, rng| {
        // t ↦ (t/n)^{1/α} is increasing, so transform only the largest gamma
        let top = gammas.iter().map(|g| g.sample(rng)).fold(0.0, f64::max);
        (top / n).powf(inv)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajorantCheck {
    pub constant: f64,
    pub refined_constant: f64,
    pub pass: bool,
}

/// Fit `C_α = max over grid of (1/κ(x)) · (n x^{α−1} + 1)` for the `k`-th
/// radius, and refit on the grid with midpoints inserted.
///
/// Passes when both fits are finite and differ by at most 5%.
pub fn radius_hazard_majorant_check(spec: &CoulombSpec, k: u64, grid: &[f64]) -> Result<MajorantCheck> {
    if grid.len() < 2 {
        return Err(Error::InsufficientData("majorant grid needs at least 2 points".into()));
    }
    if let Some(&bad) = grid.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(format!("grid point {bad} outside (0, inf)")));
    }
    let law = spec.radius(k)?;
    let n = spec.n as f64;
    let product = |x: f64| -> Result<f64> { Ok((n * x.powf(spec.alpha - 1.0) + 1.0) / law.hazard(x)?) };
    let fit = |points: &[f64]| -> Result<f64> {
        points.iter().try_fold(f64::NEG_INFINITY, |m, &x| Ok(m.max(product(x)?)))
    };
    let constant = fit(grid)?;
    let mut refined = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        refined.push(w[0]);
        refined.push(0.5 * (w[0] + w[1]));
    }
    refined.push(grid[grid.len() - 1]);
    let refined_constant = fit(&refined)?;
    let pass = constant.is_finite()
        && refined_constant.is_finite()
        && (refined_constant - constant).abs() <= 0.05 * constant.abs();
    Ok(MajorantCheck {
        constant,
        refined_constant,
        pass,
    })
}

/// Grid between the `1e-3` and `1 − 1e-12` quantiles of the `k`-th radius.
pub fn default_majorant_grid(spec: &CoulombSpec, k: u64, points: usize) -> Result<Vec<f64>> {
    let law = spec.radius(k)?;
    Ok(linspace(law.quantile(1e-3)?, law.isf(1e-12)?, points))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoulombRow {
    pub n: u64,
    pub variance: MeanVar,
    /// `Var · n · log n`
    pub scaled_variance: f64,
    /// KS distance of `a_n(|z|_(1) − b_n)` to the Gumbel cdf; `None` when the
    /// renormalizing constants are undefined at this `n`.
    pub ks_gumbel: Option<f64>,
    /// Exponential fit to the right tail of `√(n log n)(|z|_(1) − mean)`.
    pub deviation: Option<TailFit>,
}

/// Statistics of the top modulus at one `n`.
pub fn coulomb_max_row(spec: &CoulombSpec, reps: usize, stream: &RngStream, exec: &Exec) -> Result<CoulombRow> {
    let samples = sample_max_modulus(spec, reps, stream, exec);
    let variance = mean_var_se(&samples)?;
    let n = spec.n as f64;
    let scale = n * n.ln();
    let ks_gumbel = match gumbel_constants(GumbelKind::CoulombMax(spec.alpha), spec.n) {
        Ok(c) => {
            let z: Vec<f64> = samples.iter().map(|x| c.a_n * (x - c.b_n)).collect();
            Some(ks_statistic(&z, gumbel_cdf)?)
        }
        Err(Error::TooSmallN { .. }) => None,
        Err(e) => return Err(e),
    };
    let root = scale.sqrt();
    let dev: Vec<f64> = samples.iter().map(|x| root * (x - variance.mean)).collect();
    let top = dev.iter().copied().fold(0.0, f64::max);
    let deviation = fit_exponential_tail(&dev, &linspace(0.0, top, 40)).ok();
    Ok(CoulombRow {
        n: spec.n,
        variance,
        scaled_variance: variance.variance * scale,
        ks_gumbel,
        deviation,
    })
}

/// Per `n`: variance of the top modulus with SE, `Var · n log n`, the Gumbel
/// KS distance and the deviation tail fit.
///
/// Every `n` must have a positive renormalizing `c_n`.
pub fn coulomb_variance_experiment(alpha: f64, n_grid: &[u64], reps: usize, stream: &RngStream, exec: &Exec) -> Result<Vec<CoulombRow>> {
    for &n in n_grid {
        gumbel_constants(GumbelKind::CoulombMax(alpha), n)?;
    }
    n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| coulomb_max_row(&CoulombSpec::new(n, alpha)?, reps, &stream.child(i as u64), exec))
        .collect()
}
