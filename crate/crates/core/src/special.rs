//! Special functions used by the distribution zoo.
//!
//! Error-function and Beta pieces come from `statrs`; the regularized
//! incomplete gamma is implemented here because the hazard computations need
//! its continued fraction in log form, which survives underflow of Q itself.

use std::f64::consts::{PI, SQRT_2};

pub use statrs::function::beta::{beta_reg, ln_beta};
pub use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    normal_sf(-x)
}

/// `1 − Φ(x)` through `erfc(z) = Q(½, z²)`; `statrs::erfc` is only good to
/// about 1e-11 relative, too coarse for quantile polishing.
pub fn normal_sf(x: f64) -> f64 {
    let u = 0.5 * x * x;
    if x >= 0.0 {
        0.5 * gamma_q(0.5, u)
    } else {
        0.5 + 0.5 * gamma_p(0.5, u)
    }
}

/// Mills ratio `(1 − Φ(x)) / φ(x)`.
pub fn mills_ratio(x: f64) -> f64 {
    if x < 4.0 {
        return normal_sf(x) / normal_pdf(x);
    }
    // R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), modified Lentz
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    1.0 / f
}

/// `ln(1 − Φ(x))`, accurate far into the right tail.
pub fn ln_normal_sf(x: f64) -> f64 {
    if x < 4.0 {
        normal_sf(x).ln()
    } else {
        -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
    }
}

/// Standard normal quantile, polished by Newton steps on whichever tail is
/// smaller.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let mut x = -SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p);
    for _ in 0..3 {
        let step = if x <= 0.0 {
            (normal_cdf(x) - p) / normal_pdf(x)
        } else {
            ((1.0 - p) - normal_sf(x)) / normal_pdf(x)
        };
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Inverse of the normal survival function, `q = 1 − Φ(x)`.
pub fn normal_isf(q: f64) -> f64 {
    -normal_quantile(q)
}

fn ln_gamma_prefactor(s: f64, x: f64) -> f64 {
    s * x.ln() - x - ln_gamma(s)
}

/// Series for the lower regularized gamma `P(s, x)`, valid for `x < s + 1`.
fn gamma_p_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut a = s;
    for _ in 0..100_000 {
        a += 1.0;
        term *= x / a;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (ln_gamma_prefactor(s, x) + sum.ln()).exp()
}

/// Continued fraction `Γ(s, x) / (e^{-x} x^s)`, valid for `x ≥ s + 1`.
pub fn gamma_q_cf_ratio(s: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lower regularized incomplete gamma `P(s, x)`.
pub fn gamma_p(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < s + 1.0 {
        gamma_p_series(s, x)
    } else {
        1.0 - gamma_q(s, x)
    }
}

/// Upper regularized incomplete gamma `Q(s, x)`.
pub fn gamma_q(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < s + 1.0 {
        1.0 - gamma_p_series(s, x)
    } else {
        ln_gamma_q(s, x).exp()
    }
}

/// `ln Q(s, x)` without underflow in the right tail.
pub fn ln_gamma_q(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < s + 1.0 {
        (-gamma_p_series(s, x)).ln_1p()
    } else {
        ln_gamma_prefactor(s, x) + gamma_q_cf_ratio(s, x).ln()
    }
}

/// `ln P(s, x)`, accurate in the left tail.
pub fn ln_gamma_p(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x < s + 1.0 {
        gamma_p_series(s, x).ln()
    } else {
        (-gamma_q(s, x)).ln_1p()
    }
}

/// Gamma(s, 1) log density.
pub fn ln_gamma_pdf(s: f64, x: f64) -> f64 {
    (s - 1.0) * x.ln() - x - ln_gamma(s)
}

pub const fn ln_sqrt_2pi() -> f64 {
    LN_SQRT_2PI
}

pub fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}
