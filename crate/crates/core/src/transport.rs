//! Monotone rearrangement between two one-dimensional laws.
//!
//! `t = H⁻¹ ∘ G` pushes the source ν (cdf `G`) onto the target μ (cdf `H`).
//! It is evaluated on demand; whichever tail is smaller is used so that
//! both ends of the support keep full relative precision.

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::{ks_statistic, ks_threshold};

#[derive(Clone, Debug, PartialEq)]
pub struct TransportMap {
    source: DistributionSpec,
    target: DistributionSpec,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsReport {
    pub count: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn interior(d: &DistributionSpec, x: f64) -> Result<()> {
    let (lo, hi) = d.support();
    if x > lo && x < hi {
        Ok(())
    } else {
        Err(Error::Support {
            family: d.to_string(),
            x,
        })
    }
}

/// `to⁻¹ ∘ from` on the smaller tail.
fn compose(from: &DistributionSpec, to: &DistributionSpec, x: f64) -> Result<f64> {
    let p = from.cdf(x);
    if p <= 0.5 {
        to.quantile(p)
    } else {
        to.isf(from.sf(x))
    }
}

impl TransportMap {
    pub fn new(source: DistributionSpec, target: DistributionSpec) -> Self {
        Self { source, target }
    }

    pub fn source(&self) -> &DistributionSpec {
        &self.source
    }

    pub fn target(&self) -> &DistributionSpec {
        &self.target
    }

    fn is_identity(&self) -> bool {
        self.source == self.target
    }

    /// `t(x) = H⁻¹(G(x))`.
    pub fn t_eval(&self, x: f64) -> Result<f64> {
        interior(&self.source, x)?;
        if self.is_identity() {
            return Ok(x);
        }
        compose(&self.source, &self.target, x)
    }

    /// `t′(x) = κ_ν(x) / κ_μ(t(x))`.
    pub fn t_prime(&self, x: f64) -> Result<f64> {
        let y = self.t_eval(x)?;
        self.derivative_at(x, y)
    }

    fn derivative_at(&self, x: f64, y: f64) -> Result<f64> {
        if self.is_identity() {
            return Ok(1.0);
        }
        let target_hazard = self.target.hazard(y).map_err(|_| Error::SingularDerivative(x))?;
        if !(target_hazard > 0.0) || self.target.pdf(y) == 0.0 {
            return Err(Error::SingularDerivative(x));
        }
        Ok(self.source.hazard(x)? / target_hazard)
    }

    /// `t⁻¹(y) = G⁻¹(H(y))`.
    pub fn t_inverse(&self, y: f64) -> Result<f64> {
        interior(&self.target, y)?;
        if self.is_identity() {
            return Ok(y);
        }
        compose(&self.target, &self.source, y)
    }

    /// Exact weight `ψ(y) = κ_ν(t⁻¹(y)) / κ_μ(y)`, which equals `t′ ∘ t⁻¹(y)`.
    pub fn weight_psi(&self, y: f64) -> Result<f64> {
        let x = self.t_inverse(y)?;
        if self.is_identity() {
            return Ok(1.0);
        }
        let target_hazard = self.target.hazard(y)?;
        if !(target_hazard > 0.0) {
            return Err(Error::SingularDerivative(x));
        }
        Ok(self.source.hazard(x)? / target_hazard)
    }

    /// Push `count ≥ 1000` source draws through `t` and compare with the
    /// target cdf at the `1.95/√count` KS level.
    pub fn pushforward_validate(&self, count: usize, stream: &mut RngStream) -> Result<KsReport> {
        if count < 1000 {
            return Err(Error::invalid(format!("pushforward validation needs >= 1000 samples, got {count}")));
        }
        let draws = self.source.sample(stream, count);
        let mut pushed = Vec::with_capacity(count);
        for x in draws {
            // draws on a closed support endpoint (e.g. an exact 0 uniform) map to the endpoint
            let y = match self.t_eval(x) {
                Ok(y) => y,
                Err(Error::Support { .. }) => {
                    let (lo, hi) = self.target.support();
                    if x <= self.source.support().0 {
                        lo
                    } else {
                        hi
                    }
                }
                Err(e) => return Err(e),
            };
            pushed.push(y);
        }
        let statistic = ks_statistic(&pushed, |y| self.target.cdf(y))?;
        let threshold = ks_threshold(count);
        Ok(KsReport {
            count,
            statistic,
            threshold,
            pass: statistic <= threshold,
        })
    }

    /// Smallest nonincreasing majorant of ψ, checked on a quantile grid of
    /// the target.
    ///
    /// ψ is often not monotone on the whole line (for the Gaussian target it
    /// rises on `(−∞, 0]`). The envelope is `ψ(max(y, pivot))` where `pivot`
    /// is the grid maximizer; it fails if ψ is not nonincreasing past the
    /// pivot or exceeds `ψ(pivot)` before it.
    pub fn psi_envelope(&self) -> Result<PsiEnvelope> {
        let grid = target_quantile_grid(&self.target, 4001)?;
        let values = grid
            .iter()
            .map(|&y| self.weight_psi(y))
            .collect::<Result<Vec<f64>>>()?;
        let (arg, &peak) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty grid");
        const SLACK: f64 = 1e-9;
        for w in values[arg..].windows(2) {
            if w[1] > w[0] * (1.0 + SLACK) {
                return Err(Error::HypothesisViolated(format!(
                    "weight psi of {} -> {} increases past its maximum",
                    self.source, self.target
                )));
            }
        }
        let pivot = if arg == 0 { f64::NEG_INFINITY } else { grid[arg] };
        Ok(PsiEnvelope {
            map: self.clone(),
            pivot,
            peak,
        })
    }
}

/// Target points at logistic-spaced probabilities in `[1e-10, 1 − 1e-10]`.
fn target_quantile_grid(target: &DistributionSpec, points: usize) -> Result<Vec<f64>> {
    let span = 23.0;
    (0..points)
        .map(|i| {
            let z = -span + 2.0 * span * i as f64 / (points - 1) as f64;
            if z <= 0.0 {
                target.quantile(1.0 / (1.0 + (-z).exp()))
            } else {
                target.isf(1.0 / (1.0 + z.exp()))
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PsiEnvelope {
    map: TransportMap,
    pivot: f64,
    peak: f64,
}

impl PsiEnvelope {
    /// `−∞` when ψ itself is nonincreasing on the grid.
    pub fn pivot(&self) -> f64 {
        self.pivot
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        if y <= self.pivot {
            Ok(self.peak)
        } else {
            self.map.weight_psi(y)
        }
    }
}

/// Gaussian weight majorant shape `1 / (1 + |y|)`.
pub fn gaussian_weight(y: f64) -> f64 {
    1.0 / (1.0 + y.abs())
}

/// α-potential weight majorant shape `1 / (1 + V′(|y|))`, `V′(x) = x^{α−1}`.
pub fn alpha_weight(alpha: f64, y: f64) -> f64 {
    1.0 / (1.0 + y.abs().powf(alpha - 1.0))
}

/// `max_y ψ(y) / shape(y)` over the grid: the constant making `C · shape`
/// a majorant of ψ there.
pub fn fit_weight_constant<F: Fn(f64) -> f64>(map: &TransportMap, shape: F, grid: &[f64]) -> Result<f64> {
    grid.iter().try_fold(0.0f64, |acc, &y| Ok(acc.max(map.weight_psi(y)? / shape(y))))
}

/// Evenly spaced grid on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}
