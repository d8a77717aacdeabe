//! Real error functions, the Dawson function and the trapezoid rule used
//! for Gaussian-damped integrals over the real line.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Below this `|x|`, `erf` is summed from its Maclaurin series.
const SERIES_CUTOFF: f64 = 0.5;
const CF_MAX_TERMS: usize = 5000;

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x2 / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// Upper end of the positive-term series used for `erf`.
const ERF_KUMMER_CUTOFF: f64 = 3.0;

/// `erf(x) = (2/sqrt(pi)) exp(-x^2) sum_n 2^n x^{2n+1} / (2n+1)!!`; every
/// term is positive, so nothing cancels.
fn erf_kummer(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    FRAC_2_SQRT_PI * exp_neg_square(x) * sum
}

/// `exp(-x^2)` with `x^2` split exactly into two words.
fn exp_neg_square(x: f64) -> f64 {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    (-hi).exp() * (1.0 - lo)
}

/// `erfc(x)` for `x >= 0.5` from the continued fraction
/// `x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...)))`, evaluated by modified Lentz.
fn erfc_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..CF_MAX_TERMS {
        let a = 0.5 * n as f64;
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    exp_neg_square(x) * FRAC_1_SQRT_PI / f
}

/// Error function: Maclaurin series below 0.5, a positive-term series below
/// 3 and `1 - erfc` beyond.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let v = if a < SERIES_CUTOFF {
        erf_series(a)
    } else if a < ERF_KUMMER_CUTOFF {
        erf_kummer(a)
    } else {
        1.0 - erfc_cf(a)
    };
    v.copysign(x)
}

/// Complementary error function, computed without cancellation for `x > 0.5`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= SERIES_CUTOFF {
        erfc_cf(x)
    } else if x > -SERIES_CUTOFF {
        1.0 - erf_series(x)
    } else {
        2.0 - erfc_cf(-x)
    }
}

/// Sampling step of Rybicki's sum. The aliasing error is of order
/// `exp(-(pi / 2h)^2)`, about `1e-27` here.
const DAWSON_H: f64 = 0.2;
const DAWSON_TERMS: i64 = 40;
const DAWSON_SERIES_CUTOFF: f64 = 0.2;

/// Dawson's integral `D(x) = exp(-x^2) int_0^x exp(t^2) dt`.
///
/// Maclaurin series near the origin, Rybicki's Gaussian sum
/// `D(x) = pi^{-1/2} sum_{n odd} exp(-(x - n h)^2) / n` elsewhere.
pub fn dawson(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let v = if a < DAWSON_SERIES_CUTOFF {
        let a2 = a * a;
        let mut term = a;
        let mut sum = a;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -2.0 * a2 / (2.0 * k + 1.0);
            sum += term;
            if term.abs() <= 1e-17 * sum {
                break;
            }
        }
        sum
    } else {
        // shift by the nearest even multiple of h so the window is centred
        let n0 = 2.0 * (0.5 * a / DAWSON_H).round();
        let xp = a - n0 * DAWSON_H;
        let mut sum = 0.0;
        for m in (-DAWSON_TERMS..=DAWSON_TERMS).filter(|m| m % 2 != 0) {
            let m = m as f64;
            let d = xp - m * DAWSON_H;
            sum += (-d * d).exp() / (m + n0);
        }
        FRAC_1_SQRT_PI * sum
    };
    v.copysign(x)
}

/// Fixed nodes and positive weights on a finite interval.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Default half-width of the truncated real line for `exp(-xi^2/4)` decay.
pub const GAUSS_HALF_WIDTH: f64 = 12.0;
/// Default node count of the composite trapezoid on `[-12, 12]`.
pub const GAUSS_NODES: usize = 4001;

impl QuadratureRule {
    /// Composite trapezoid with `n >= 2` nodes on `[a, b]`.
    pub fn trapezoid(a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 2 && b > a, "trapezoid needs n >= 2 and a < b");
        let h = (b - a) / (n - 1) as f64;
        let nodes = (0..n).map(|i| a + i as f64 * h).collect();
        let weights = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect();
        Self { nodes, weights }
    }

    /// The rule used for the limiting densities: 4001 nodes on `[-12, 12]`.
    pub fn gaussian_default() -> Self {
        Self::trapezoid(-GAUSS_HALF_WIDTH, GAUSS_HALF_WIDTH, GAUSS_NODES)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i f(x_i)`; aborts on the first non-finite integrand value.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let fx = f(x);
            if !fx.is_finite() {
                return Err(Error::NonFiniteIntegrand { node: x, value: fx });
            }
            sum += w * fx;
        }
        Ok(sum)
    }
}

/// `int_R f(xi) dxi` for integrands bounded by `C exp(-xi^2/4)`, truncated
/// to `|xi| <= 12`.
///
/// The truncation error is at most `C e^{-36} sqrt(4 pi)`; for smooth
/// integrands the trapezoid rule converges faster than any power of the step.
pub fn gauss_weighted_integral<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    QuadratureRule::gaussian_default().integrate(f)
}

/// `sqrt(pi)`, handy for closed-form Gaussian checks.
pub fn sqrt_pi() -> f64 {
    PI.sqrt()
}
