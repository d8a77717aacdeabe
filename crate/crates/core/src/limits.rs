//! Limiting value distributions.
//!
//! * `Z/v` is standard Cauchy, both over `k` and over bond lengths.
//! * `Z'(k_n)/v^2` has density `P(y)` as `v -> infinity`.
//! * `v^2 A_i(n)` has density `Q(eta)` with an algebraic `eta^{-3/2}` tail.
//! * The pointwise eigenfunction value `r` has density
//!   `R(r) = (1/pi) int_{r^2}^inf Q(s) / sqrt(s - r^2) ds`.
//!
//! `P` and `Q` are integrals over `xi` of Gaussian-damped functions of the
//! profile `m(xi) = (2/sqrt(pi)) exp(-xi^2/4) + xi erf(xi/2)`; the profile is
//! tabulated once on the default quadrature nodes.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};
use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{dawson, erf, QuadratureRule};

/// `m(xi) = (2/sqrt(pi)) exp(-xi^2/4) + xi erf(xi/2)`; even, `>= 2/sqrt(pi)`.
pub fn m_profile(xi: f64) -> f64 {
    FRAC_2_SQRT_PI * (-0.25 * xi * xi).exp() + xi * erf(0.5 * xi)
}

struct ProfileTable {
    weights: Vec<f64>,
    half_sq: Vec<f64>,
    m: Vec<f64>,
}

fn profile() -> &'static ProfileTable {
    static TABLE: OnceLock<ProfileTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rule = QuadratureRule::gaussian_default();
        ProfileTable {
            half_sq: rule.nodes.iter().map(|x| 0.25 * x * x).collect(),
            m: rule.nodes.iter().map(|&x| m_profile(x)).collect(),
            weights: rule.weights,
        }
    })
}

impl ProfileTable {
    fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.weights
            .iter()
            .zip(&self.half_sq)
            .zip(&self.m)
            .map(|((w, q), m)| w * f(*q, *m))
            .sum()
    }
}

pub fn cauchy_pdf(y: f64) -> f64 {
    1.0 / (PI * (1.0 + y * y))
}

/// Standard Cauchy distribution function `1/2 + atan(y)/pi`.
pub fn cauchy_cdf(y: f64) -> f64 {
    0.5 + y.atan() / PI
}

/// Limiting density of `Z'(k_n)/v^2`:
/// `P(y) = sqrt(L)/(4 pi y^{3/2}) int exp(-xi^2/4 - L m^2/(4y)) m dxi`, zero for `y <= 0`.
pub fn limit_p(y: f64, l_bar: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let c = 0.25 * l_bar / y;
    let integral = profile().integrate(|q, m| (-q - c * m * m).exp() * m);
    l_bar.sqrt() / (4.0 * PI * y.powf(1.5)) * integral
}

/// `lim y^{3/2} P(y) = sqrt(L)/(4 pi) int exp(-xi^2/4) m dxi`.
pub fn p_tail_coefficient(l_bar: f64) -> f64 {
    l_bar.sqrt() / (4.0 * PI) * profile().integrate(|q, m| (-q).exp() * m)
}

/// Limiting density of `v^2 A_i`, zero for `eta <= 0`.
///
/// With `a = sqrt(L eta / 8) m(xi)`, `erfc(a / i) = 1 + i erfi(a)` and
/// `exp(-a^2) erfi(a) = (2/sqrt(pi)) D(a)`, which turns the defining
/// integral into `Q(eta) = (1/(pi^2 eta)) int exp(-xi^2/4) D(a) dxi`.
pub fn limit_q(eta: f64, l_bar: f64) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    let s = (l_bar * eta / 8.0).sqrt();
    let integral = profile().integrate(|q, m| (-q).exp() * dawson(s * m));
    integral / (PI * PI * eta)
}

/// `erfi(a)` from its everywhere-positive power series.
fn erfi_series(a: f64) -> f64 {
    let a2 = a * a;
    let mut pow = a;
    let mut sum = a;
    let mut n = 0.0;
    loop {
        n += 1.0;
        pow *= a2 / n;
        let add = pow / (2.0 * n + 1.0);
        sum += add;
        if add <= 1e-17 * sum {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// `Q(eta)` evaluated directly from
/// `(1/(2 pi^{3/2} eta)) Im int exp(-xi^2/4 - L eta m^2/8) erfc(a/i) dxi`
/// with `erfc(a/i)` summed as a series; independent of [`dawson`].
///
/// Only usable while `exp(a^2)` stays finite (`a < 26` on the whole
/// quadrature range); larger `eta` is rejected.
pub fn limit_q_complex_form(eta: f64, l_bar: f64) -> Result<f64> {
    if eta <= 0.0 {
        return Ok(0.0);
    }
    let s = (l_bar * eta / 8.0).sqrt();
    let table = profile();
    let m_max = table.m.iter().copied().fold(0.0, f64::max);
    if s * m_max >= 26.0 {
        return Err(Error::InvalidInput(format!(
            "eta = {eta} is too large for the series form"
        )));
    }
    let integral = table.integrate(|q, m| {
        let a = s * m;
        // Im erfc(-i a) = erfi(a); the prefactor is real
        (-q - a * a).exp() * erfi_series(a)
    });
    Ok(integral / (2.0 * PI.powf(1.5) * eta))
}

/// Coefficient `b` of `Q(eta) ~ b eta^{-3/2}`:
/// `b = sqrt(2)/(sqrt(L) pi^2) int exp(-xi^2/4)/m dxi`, about `0.348/sqrt(L)`.
pub fn q_tail_coefficient(l_bar: f64) -> f64 {
    std::f64::consts::SQRT_2 / (l_bar.sqrt() * PI * PI) * profile().integrate(|q, m| (-q).exp() / m)
}

/// `lim eta^{1/2} Q(eta)` as `eta -> 0`: `(1/pi^2) sqrt(L/8) int exp(-xi^2/4) m dxi`.
pub fn q_head_coefficient(l_bar: f64) -> f64 {
    (l_bar / 8.0).sqrt() / (PI * PI) * profile().integrate(|q, m| (-q).exp() * m)
}

/// Power law `coefficient * x^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

impl PowerLaw {
    fn eval(&self, x: f64) -> f64 {
        self.coefficient * x.powf(-self.exponent)
    }

    /// `int_x^inf` of the law; needs `exponent > 1`.
    fn upper_mass(&self, x: f64) -> f64 {
        self.coefficient * x.powf(1.0 - self.exponent) / (self.exponent - 1.0)
    }

    /// `int_0^x` of the law; needs `exponent < 1`.
    fn lower_mass(&self, x: f64) -> f64 {
        self.coefficient * x.powf(1.0 - self.exponent) / (1.0 - self.exponent)
    }
}

/// A tabulated density on an ascending grid, with its distribution function.
///
/// Between nodes the density is linear. Below the first node it follows
/// `head` (or is zero), above the last node it follows `tail` (or is zero).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    pub mass: f64,
    pub head: Option<PowerLaw>,
    pub tail: Option<PowerLaw>,
    pub l_bar: Option<f64>,
}

impl DensityCurve {
    /// Curve from nodes and density values, integrated by the trapezoid rule.
    pub fn from_table(grid: Vec<f64>, pdf: Vec<f64>, tail: Option<PowerLaw>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != pdf.len() {
            return Err(Error::InvalidInput("density table needs >= 2 matching nodes".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("density grid must be strictly ascending".into()));
        }
        if pdf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput("density values must be finite and >= 0".into()));
        }
        let mut cdf = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..grid.len() {
            acc += 0.5 * (pdf[i] + pdf[i - 1]) * (grid[i] - grid[i - 1]);
            cdf.push(acc);
        }
        let mass = acc + tail.map_or(0.0, |t| t.upper_mass(grid[grid.len() - 1]));
        Ok(Self {
            grid,
            pdf,
            cdf,
            mass,
            head: None,
            tail,
            l_bar: None,
        })
    }

    fn last(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Index `i` with `grid[i] <= x < grid[i + 1]`.
    fn locate(&self, x: f64) -> usize {
        self.grid.partition_point(|&g| g <= x).saturating_sub(1).min(self.grid.len() - 2)
    }

    pub fn pdf_at(&self, x: f64) -> f64 {
        if x < self.grid[0] {
            return match self.head {
                Some(h) if x > 0.0 => h.eval(x),
                _ => 0.0,
            };
        }
        if x > self.last() {
            return self.tail.map_or(0.0, |t| t.eval(x));
        }
        let i = self.locate(x);
        let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.pdf[i] + t * (self.pdf[i + 1] - self.pdf[i])
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        if x < self.grid[0] {
            return match self.head {
                Some(h) if x > 0.0 => h.lower_mass(x),
                _ => 0.0,
            };
        }
        if x > self.last() {
            let end = self.cdf[self.cdf.len() - 1];
            return match self.tail {
                Some(t) => end + t.upper_mass(self.last()) - t.upper_mass(x),
                None => end,
            };
        }
        let i = self.locate(x);
        let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    /// CSV `x,pdf`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,pdf")?;
        for (x, p) in self.grid.iter().zip(&self.pdf) {
            writeln!(out, "{},{}", crate::export::fmt17(*x), crate::export::fmt17(*p))?;
        }
        Ok(())
    }

    /// JSON sidecar `{mass, tail_coefficient, tail_exponent, l_bar}`.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "mass": self.mass,
            "tail_coefficient": self.tail.map(|t| t.coefficient),
            "tail_exponent": self.tail.map(|t| t.exponent),
            "l_bar": self.l_bar,
        })
    }
}

/// Default node count for tabulated limit densities.
pub const CURVE_NODES: usize = 4001;

/// `P(y)` on a logarithmic grid over `[1e-3, 1e3]` with its `y^{-3/2}` tail.
pub fn tabulate_p(l_bar: f64, nodes: usize) -> DensityCurve {
    let (lo, hi) = (1e-3f64.ln(), 1e3f64.ln());
    let h = (hi - lo) / (nodes - 1) as f64;
    let grid: Vec<f64> = (0..nodes).map(|i| (lo + i as f64 * h).exp()).collect();
    let pdf: Vec<f64> = grid.par_iter().map(|&y| limit_p(y, l_bar)).collect();
    // trapezoid in ln y
    let mut cdf = vec![0.0];
    for i in 1..nodes {
        let prev = cdf[i - 1];
        cdf.push(prev + 0.5 * h * (pdf[i] * grid[i] + pdf[i - 1] * grid[i - 1]));
    }
    let tail = PowerLaw {
        coefficient: p_tail_coefficient(l_bar),
        exponent: 1.5,
    };
    let mass = cdf[nodes - 1] + tail.upper_mass(grid[nodes - 1]);
    DensityCurve {
        grid,
        pdf,
        cdf,
        mass,
        head: None,
        tail: Some(tail),
        l_bar: Some(l_bar),
    }
}

/// `Q(eta)` on `(0, eta_max]`, with the `eta^{-1/2}` head and the
/// `b eta^{-3/2}` tail. Integrated in `u = sqrt(eta)`, where `2u Q(u^2)` is
/// smooth up to `u = 0`.
pub fn tabulate_q(l_bar: f64, eta_max: f64, nodes: usize) -> DensityCurve {
    let u_max = eta_max.sqrt();
    let h = u_max / (nodes - 1) as f64;
    let grid: Vec<f64> = (1..nodes).map(|i| (i as f64 * h).powi(2)).collect();
    let pdf: Vec<f64> = grid.par_iter().map(|&e| limit_q(e, l_bar)).collect();
    let head = PowerLaw {
        coefficient: q_head_coefficient(l_bar),
        exponent: 0.5,
    };
    let g = |i: usize| -> f64 {
        if i == 0 {
            2.0 * head.coefficient
        } else {
            2.0 * i as f64 * h * pdf[i - 1]
        }
    };
    let mut cdf = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    for i in 1..nodes {
        acc += 0.5 * h * (g(i) + g(i - 1));
        cdf.push(acc);
    }
    let tail = PowerLaw {
        coefficient: q_tail_coefficient(l_bar),
        exponent: 1.5,
    };
    let mass = acc + tail.upper_mass(eta_max);
    DensityCurve {
        grid,
        pdf,
        cdf,
        mass,
        head: Some(PowerLaw {
            coefficient: head.coefficient,
            exponent: 0.5,
        }),
        tail: Some(tail),
        l_bar: Some(l_bar),
    }
}

/// `R(r) = (1/pi) int_{r^2}^inf Q(s) ds / sqrt(s - r^2)` for a tabulated `Q`.
///
/// With `s = r^2 + u^2` this is `(2/pi) int_0^inf Q(r^2 + u^2) du`. On each
/// grid cell `Q` is linear in `s`, hence quadratic in `u`, and two-point
/// Gauss-Legendre is exact; head and tail use closed forms.
pub fn abel_value_distribution(q: &DensityCurve, r: f64) -> f64 {
    let r2 = r * r;
    let u_of = |s: f64| (s - r2).max(0.0).sqrt();
    let mut sum = 0.0;

    if r2 < q.grid[0] {
        if let Some(h) = q.head {
            let u0 = u_of(q.grid[0]);
            if h.exponent == 0.5 {
                // int_0^U c / sqrt(r^2 + u^2) du = c asinh(U / |r|)
                sum += if r == 0.0 { f64::INFINITY } else { h.coefficient * (u0 / r.abs()).asinh() };
            } else {
                sum += gauss_legendre_panel(|u| h.eval(r2 + u * u), 0.0, u0, 64);
            }
        }
    }

    let (gl_a, gl_b) = (0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt());
    for i in 0..q.grid.len() - 1 {
        let (s0, s1) = (q.grid[i], q.grid[i + 1]);
        if s1 <= r2 {
            continue;
        }
        let (ua, ub) = (u_of(s0.max(r2)), u_of(s1));
        let width = ub - ua;
        let slope = (q.pdf[i + 1] - q.pdf[i]) / (s1 - s0);
        let lin = |u: f64| q.pdf[i] + slope * (r2 + u * u - s0);
        sum += 0.5 * width * (lin(ua + gl_a * width) + lin(ua + gl_b * width));
    }

    if let Some(t) = q.tail {
        let s_end = q.grid[q.grid.len() - 1];
        let big_u = u_of(s_end.max(r2));
        if t.exponent == 1.5 {
            // int_U^inf (r^2 + u^2)^{-3/2} du = 1 / (rho (rho + U)), rho = sqrt(r^2 + U^2)
            let rho = (r2 + big_u * big_u).sqrt();
            sum += t.coefficient / (rho * (rho + big_u));
        } else {
            // u = U / t maps [U, inf) onto (0, 1]
            sum += gauss_legendre_panel(
                |x| {
                    if x <= 0.0 {
                        0.0
                    } else {
                        let u = big_u / x;
                        t.eval(r2 + u * u) * big_u / (x * x)
                    }
                },
                0.0,
                1.0,
                256,
            );
        }
    }
    2.0 / PI * sum
}

/// Composite two-point Gauss-Legendre with `panels` panels.
fn gauss_legendre_panel<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let off = 0.5 / 3f64.sqrt();
    (0..panels)
        .map(|i| {
            let c = a + (i as f64 + 0.5) * h;
            0.5 * h * (f(c - off * h) + f(c + off * h))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        assert!((m_profile(0.0) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-15);
        assert_eq!(m_profile(-3.0), m_profile(3.0));
        assert!((m_profile(10.0) - 10.0).abs() < 1e-6);
        for i in -200..=200 {
            assert!(m_profile(i as f64 * 0.1) >= FRAC_2_SQRT_PI - 1e-15);
        }
    }

    #[test]
    fn cauchy_values() {
        assert_eq!(cauchy_cdf(0.0), 0.5);
        assert!((cauchy_cdf(1.0) - 0.75).abs() < 1e-15);
        for y in [0.1, 2.0, 37.0] {
            assert!((cauchy_cdf(y) + cauchy_cdf(-y) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cauchy_cdf_integrates_pdf() {
        // Simpson on atan-substituted variable: y = tan(t)
        let (a, b) = (-1.2f64, 0.9f64);
        let n = 2000;
        let h = (b - a) / n as f64;
        let f = |t: f64| cauchy_pdf(t.tan()) / t.cos().powi(2);
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        let integral = s * h / 3.0;
        assert!((integral - (cauchy_cdf(b.tan()) - cauchy_cdf(a.tan()))).abs() < 1e-12);
    }

    #[test]
    fn p_edges() {
        assert_eq!(limit_p(-1.0, 2.0), 0.0);
        assert_eq!(limit_p(0.0, 2.0), 0.0);
        assert!(limit_p(1e-4, 2.0) < 1e-30);
        assert!(limit_p(1.0, 2.0) > 0.0);
    }

    #[test]
    fn p_normalised() {
        let curve = tabulate_p(2.0, CURVE_NODES);
        assert!((curve.mass - 1.0).abs() < 1e-4, "mass {}", curve.mass);
        let t = curve.tail.unwrap();
        let last = curve.grid[curve.grid.len() - 1];
        let rel = (t.eval(last) - curve.pdf[curve.pdf.len() - 1]).abs() / curve.pdf[curve.pdf.len() - 1];
        assert!(rel < 0.05);
    }

    #[test]
    fn q_edges_and_tail() {
        assert_eq!(limit_q(0.0, 2.0), 0.0);
        assert_eq!(limit_q(-3.0, 2.0), 0.0);
        let b = 0.348 / 2f64.sqrt();
        let v = 50f64.powf(1.5) * limit_q(50.0, 2.0);
        assert!((v - b).abs() < 0.1 * b, "{v}");
    }

    #[test]
    fn q_dawson_form_matches_complex_form() {
        for eta in [0.5, 2.0, 8.0] {
            let a = limit_q(eta, 2.0);
            let b = limit_q_complex_form(eta, 2.0).unwrap();
            assert!((a - b).abs() < 1e-8, "eta {eta}: {a} vs {b}");
        }
        assert!(limit_q_complex_form(1e4, 2.0).is_err());
    }

    #[test]
    fn tail_coefficients() {
        let b1 = q_tail_coefficient(1.0);
        assert!((b1 - 0.348).abs() < 0.004, "{b1}");
        assert!((q_tail_coefficient(2.0) - 0.348 / 2f64.sqrt()).abs() < 0.003);
        assert!((q_tail_coefficient(8.0) - q_tail_coefficient(2.0) / 2.0).abs() < 1e-15);
        for l in [0.5, 1.0, 2.0, 7.0] {
            let s = q_tail_coefficient(l) * l.sqrt();
            assert!((0.34..=0.36).contains(&s));
        }
    }

    #[test]
    fn q_tail_settles() {
        let f = |e: f64| e.powf(1.5) * limit_q(e, 2.0);
        for w in [100.0, 1e3, 1e4, 1e5].windows(2) {
            let (a, b) = (f(w[0]), f(w[1]));
            assert!((a - b).abs() / b < 0.03);
        }
    }

    #[test]
    fn q_normalised() {
        let curve = tabulate_q(2.0, 200.0, CURVE_NODES);
        assert!((curve.mass - 1.0).abs() < 1e-4, "mass {}", curve.mass);
        assert!(curve.pdf.iter().all(|&p| p >= 0.0));
        assert!((curve.cdf_at(1e9) - curve.mass).abs() < 1e-3);
    }

    #[test]
    fn densities_are_continuous_under_refinement() {
        for x in [0.05, 0.3, 1.0, 4.0, 30.0] {
            let (p0, p1) = (limit_p(x, 2.0), limit_p(x * (1.0 + 1e-6), 2.0));
            assert!((p0 - p1).abs() <= 1e-4 * p0.max(1e-12));
            let (q0, q1) = (limit_q(x, 2.0), limit_q(x * (1.0 + 1e-6), 2.0));
            assert!((q0 - q1).abs() <= 1e-4 * q0);
        }
    }

    fn uniform_1_2() -> DensityCurve {
        DensityCurve::from_table(vec![1.0, 2.0], vec![1.0, 1.0], None).unwrap()
    }

    #[test]
    fn abel_uniform_oracle() {
        let q = uniform_1_2();
        let r0 = abel_value_distribution(&q, 0.0);
        let want = 2.0 / PI * (2f64.sqrt() - 1.0);
        assert!((r0 - want).abs() < 1e-8);
        // r inside the support: (2/pi)(sqrt(2 - r^2) - sqrt(1 - r^2))
        let r = 0.6f64;
        let want = 2.0 / PI * ((2.0 - r * r).sqrt() - (1.0 - r * r).sqrt());
        assert!((abel_value_distribution(&q, r) - want).abs() < 1e-12);
    }

    #[test]
    fn abel_is_even() {
        let q = tabulate_q(2.0, 200.0, 801);
        for r in [0.01, 0.3, 1.7, 12.0] {
            assert_eq!(abel_value_distribution(&q, r), abel_value_distribution(&q, -r));
        }
    }

    #[test]
    fn abel_mass_and_tail() {
        let q = tabulate_q(2.0, 200.0, 2001);
        // R(r) -> (2b/pi) r^{-2}
        let b = q.tail.unwrap().coefficient;
        for r in [10.0, 30.0, 100.0] {
            let scaled = r * r * abel_value_distribution(&q, r);
            assert!((scaled - 2.0 * b / PI).abs() < 0.05 * 2.0 * b / PI, "r {r}: {scaled}");
        }
        // int_R R = 1: substitution r = tan(t) on (0, pi/2), R has a log singularity at 0
        let n = 20_000;
        let h = (PI / 2.0) / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            s += abel_value_distribution(&q, t.tan()) / t.cos().powi(2);
        }
        let total = 2.0 * s * h;
        assert!((total - q.mass).abs() < 2e-3, "total {total}");
    }
}
