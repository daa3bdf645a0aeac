//! Symmetric n-variate functionals and their almost-everywhere gradients.
//!
//! Order-statistic functionals have a gradient supported on a single
//! coordinate; the achieving index is exposed directly so estimators can skip
//! the dense vector.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FunctionalKind {
    Max,
    /// `max |xᵢ|`
    AbsMax,
    /// k-th largest coordinate, `k` 1-based from the top.
    OrderStat(usize),
    /// Middle order statistic; the lower median for even `n`.
    Median,
    LpNorm(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Functional {
    kind: FunctionalKind,
    n: usize,
}

impl Functional {
    pub fn new(kind: FunctionalKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("functional dimension must be positive"));
        }
        match kind {
            FunctionalKind::OrderStat(k) if k == 0 || k > n => {
                return Err(Error::invalid(format!("order statistic rank {k} outside 1..={n}")))
            }
            FunctionalKind::LpNorm(p) if !(p >= 1.0 && p.is_finite()) => {
                return Err(Error::invalid(format!("lp norm needs finite p >= 1, got {p}")))
            }
            _ => {}
        }
        Ok(Self { kind, n })
    }

    pub fn max(n: usize) -> Result<Self> {
        Self::new(FunctionalKind::Max, n)
    }

    pub fn median(n: usize) -> Result<Self> {
        Self::new(FunctionalKind::Median, n)
    }

    pub fn lp_norm(p: f64, n: usize) -> Result<Self> {
        Self::new(FunctionalKind::LpNorm(p), n)
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Rank from the top for order-statistic kinds.
    pub fn rank(&self) -> Option<usize> {
        match self.kind {
            FunctionalKind::Max => Some(1),
            FunctionalKind::OrderStat(k) => Some(k),
            FunctionalKind::Median => Some(if self.n % 2 == 1 { self.n.div_ceil(2) } else { self.n / 2 + 1 }),
            FunctionalKind::AbsMax | FunctionalKind::LpNorm(_) => None,
        }
    }

    /// Gradient is (up to sign) a single unit coordinate vector a.e.
    pub fn is_indicator(&self) -> bool {
        !matches!(self.kind, FunctionalKind::LpNorm(_))
    }

    /// Commutes with any increasing coordinatewise map: `f(t(x)) = t(f(x))`.
    pub fn commutes_with_increasing_maps(&self) -> bool {
        self.rank().is_some()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            })
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(match self.kind {
            FunctionalKind::AbsMax => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            FunctionalKind::LpNorm(p) => lp_norm(x, p),
            _ => x[self.active_index(x)?.0],
        })
    }

    /// Index carrying the gradient for indicator kinds, with the gradient's
    /// sign there (`−1` only for [`FunctionalKind::AbsMax`] at a negative
    /// coordinate). Ties go to the lowest index.
    pub fn active_index(&self, x: &[f64]) -> Result<(usize, f64)> {
        self.check(x)?;
        match self.kind {
            FunctionalKind::Max => Ok((argmax_first(x), 1.0)),
            FunctionalKind::AbsMax => {
                let mut best = 0;
                for i in 1..x.len() {
                    if x[i].abs() > x[best].abs() {
                        best = i;
                    }
                }
                Ok((best, if x[best] < 0.0 { -1.0 } else { 1.0 }))
            }
            FunctionalKind::OrderStat(_) | FunctionalKind::Median => {
                let k = self.rank().expect("order statistic");
                let v = kth_largest(x, k);
                let i = x.iter().position(|&xi| xi == v).expect("selected value is present");
                Ok((i, 1.0))
            }
            FunctionalKind::LpNorm(_) => Err(Error::UndefinedGradient("lp norm has a dense gradient")),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        match self.kind {
            FunctionalKind::LpNorm(p) => {
                let norm = lp_norm(x, p);
                if norm == 0.0 {
                    return Err(Error::UndefinedGradient("lp norm at the origin"));
                }
                Ok(x.iter().map(|&xi| xi.signum() * pow(xi.abs() / norm, p - 1.0)).collect())
            }
            _ => {
                let (i, s) = self.active_index(x)?;
                let mut g = vec![0.0; self.n];
                g[i] = s;
                Ok(g)
            }
        }
    }

    /// `Σᵢ (∂ᵢf(x))² · weight(i, xᵢ)`.
    ///
    /// For indicator kinds only the active coordinate is weighted, so the sum
    /// collapses to a single term exactly.
    pub fn weighted_grad_sq<W: FnMut(usize, f64) -> f64>(&self, x: &[f64], mut weight: W) -> Result<f64> {
        if self.is_indicator() {
            let (i, _) = self.active_index(x)?;
            return Ok(weight(i, x[i]));
        }
        let g = self.grad(x)?;
        Ok(g.iter().zip(x).enumerate().map(|(i, (gi, &xi))| gi * gi * weight(i, xi)).sum())
    }
}

fn argmax_first(x: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..x.len() {
        if x[i] > x[best] {
            best = i;
        }
    }
    best
}

/// k-th largest value, `k` 1-based.
pub fn kth_largest(x: &[f64], k: usize) -> f64 {
    if k == 1 {
        return x[argmax_first(x)];
    }
    let mut buf = x.to_vec();
    let idx = buf.len() - k;
    let (_, v, _) = buf.select_nth_unstable_by(idx, f64::total_cmp);
    *v
}

/// `‖x‖_p`, scaled by `max |xᵢ|` against overflow.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
    }
    m * x.iter().map(|v| pow(v.abs() / m, p)).sum::<f64>().powf(1.0 / p)
}

#[inline]
fn pow(base: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        base.powi(e as i32)
    } else {
        base.powf(e)
    }
}
