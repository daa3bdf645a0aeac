//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 20_000;

#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let mut pending = vec![(a, b, kronrod(&f, a, b))];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut segments = 0usize;
    let width = (b - a).abs();
    while let Some((lo, hi, (v, e))) = pending.pop() {
        segments += 1;
        let share = abs_tol * ((hi - lo).abs() / width).max(1e-6);
        let mid = 0.5 * (lo + hi);
        let splittable = mid > lo.min(hi) && mid < lo.max(hi);
        if e <= share || !splittable || segments > MAX_SEGMENTS {
            value += v;
            error += e;
            continue;
        }
        pending.push((lo, mid, kronrod(&f, lo, mid)));
        pending.push((mid, hi, kronrod(&f, mid, hi)));
    }
    if !value.is_finite() {
        return Err(Error::invalid("integrand produced a non-finite value"));
    }
    Ok(Quadrature { value, error })
}

/// Integrate `f` over `[a, ∞)` through `x = a + u / (1 − u)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64) -> Result<Quadrature> {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - u;
        let y = f(a + u / w) / (w * w);
        if y.is_finite() {
            y
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, abs_tol)
}

/// Integrate `f` over `[a, ∞)` after splitting at the given interior points.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, cuts: &[f64], abs_tol: f64) -> Result<Quadrature> {
    let mut lo = a;
    let mut total = Quadrature { value: 0.0, error: 0.0 };
    let pieces = cuts.len() + 1;
    let tol = abs_tol / pieces as f64;
    for &c in cuts.iter().filter(|&&c| c > a) {
        let q = integrate(&f, lo, c, tol)?;
        total.value += q.value;
        total.error += q.error;
        lo = c;
    }
    let q = integrate_to_inf(&f, lo, tol)?;
    total.value += q.value;
    total.error += q.error;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-13).unwrap();
        assert_relative_eq!(q.value, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_half_line() {
        let q = integrate_to_inf(|x| (-0.5 * x * x).exp(), 0.0, 1e-13).unwrap();
        assert_relative_eq!(q.value, (std::f64::consts::PI / 2.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn peaked_integrand_with_cuts() {
        // ∫ t e^{-t} = 1
        let q = integrate_split(|t| t * (-t).exp(), 0.0, &[1.0, 5.0], 1e-13).unwrap();
        assert_relative_eq!(q.value, 1.0, epsilon = 1e-12);
    }
}
