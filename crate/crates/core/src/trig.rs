//! Accurate `tan(k L)` for large `k`.
//!
//! The product `k L` is formed exactly as a double-word and reduced modulo
//! `pi` against a double-word `pi`, so the reduced angle keeps full relative
//! precision even when `k L` is of order `1e7`.

use std::f64::consts::{FRAC_PI_2, PI};

/// `pi - PI` to double precision.
const PI_LO: f64 = 1.224_646_799_147_353_2e-16;

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `k * l` reduced modulo `pi` into `[-pi/2, pi/2]`.
#[inline]
pub fn reduce_mod_pi(k: f64, l: f64) -> f64 {
    let (p, e) = two_prod(k, l);
    let n = (p / PI).round();
    if n == 0.0 {
        return p + e;
    }
    let (ph, pl) = two_prod(n, PI);
    // p and ph agree to within a factor of two, so the difference is exact.
    ((p - ph) - pl) - n * PI_LO + e
}

/// Whether a reduced angle `r` of bond length `l` at wavenumber `k` lies
/// within `1e-12 k` (in `k`) of a pole of `tan`.
#[inline]
pub fn near_pole(r: f64, k: f64, l: f64) -> bool {
    (FRAC_PI_2 - r.abs()) < 1e-12 * k * l
}

/// `tan(k l)`.
#[inline]
pub fn tan_kl(k: f64, l: f64) -> f64 {
    reduce_mod_pi(k, l).tan()
}

/// `sec^2(k l)`.
#[inline]
pub fn sec2_kl(k: f64, l: f64) -> f64 {
    let t = tan_kl(k, l);
    1.0 + t * t
}
