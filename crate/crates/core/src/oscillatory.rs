//! Moments of the unit quadratic phase, `J_k(p0, p1) = ∫_{p0}^{p1} p^k e^{i p^2} dp`.
//!
//! Small arguments use the power series of `e^{i p^2}`. Otherwise `J_0` is a
//! difference of tail integrals `Φ(p) = ∫_p^∞ e^{i q^2} dq`, evaluated through
//! the Faddeeva function so that no cancellation occurs between large
//! endpoints, and higher moments follow from integration by parts:
//!
//! ```text
//! J_k = [p^(k-1) e^{i p^2} / (2i)]_{p0}^{p1} - (k-1)/(2i) J_{k-2}
//! ```

use std::f64::consts::{FRAC_PI_4, PI};

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;

/// Largest |p| for which the power series is used.
const SERIES_LIMIT: f64 = 2.0;

/// Beyond this |p| the rounding of `p^2` exceeds ~1e-4 rad of phase.
pub const PHASE_LIMIT: f64 = 1e6;

/// Largest polynomial degree supported by [`unit_phase_moments`].
pub const MAX_DEGREE: usize = 6;

/// `∫_0^∞ e^{i q^2} dq = (√π / 2) e^{iπ/4}`.
fn half_line() -> Complex64 {
    Complex64::from_polar(0.5 * PI.sqrt(), FRAC_PI_4)
}

fn cis_square(p: f64) -> Complex64 {
    let (s, c) = (p * p).sin_cos();
    Complex64::new(c, s)
}

/// `Φ(p)` for `p >= 0`.
fn tail_nonneg(p: f64) -> Complex64 {
    debug_assert!(p >= 0.0);
    let z = Complex64::from_polar(p, FRAC_PI_4);
    half_line() * cis_square(p) * z.w()
}

fn zeroth_moment(p0: f64, p1: f64) -> Complex64 {
    if p0 >= 0.0 {
        tail_nonneg(p0) - tail_nonneg(p1)
    } else if p1 <= 0.0 {
        tail_nonneg(-p1) - tail_nonneg(-p0)
    } else {
        2.0 * half_line() - tail_nonneg(-p0) - tail_nonneg(p1)
    }
}

fn series_moments(p0: f64, p1: f64, out: &mut [Complex64]) {
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut coeff = Complex64::new(1.0, 0.0); // i^n / n!
        let mut pow0 = p0.powi(k as i32 + 1);
        let mut pow1 = p1.powi(k as i32 + 1);
        let (sq0, sq1) = (p0 * p0, p1 * p1);
        for n in 0..60 {
            let m = (2 * n + k + 1) as f64;
            let term = coeff * ((pow1 - pow0) / m);
            acc += term;
            if n > 4 && term.norm() <= 1e-18 * acc.norm().max(f64::MIN_POSITIVE) {
                break;
            }
            coeff *= Complex64::new(0.0, 1.0 / (n + 1) as f64);
            pow0 *= sq0;
            pow1 *= sq1;
        }
        *slot = acc;
    }
}

/// Fills `out[k] = J_k(p0, p1)` for `k < out.len()`.
///
/// Returns `false` when an endpoint exceeds [`PHASE_LIMIT`] or a non-finite
/// value is produced; `out` is unspecified in that case.
pub fn unit_phase_moments(p0: f64, p1: f64, out: &mut [Complex64]) -> bool {
    assert!(out.len() <= MAX_DEGREE + 1, "degree above MAX_DEGREE");
    let reach = p0.abs().max(p1.abs());
    // also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(reach <= PHASE_LIMIT) {
        return false;
    }
    if out.is_empty() {
        return true;
    }
    if reach <= SERIES_LIMIT {
        series_moments(p0, p1, out);
    } else {
        let two_i = Complex64::new(0.0, 2.0);
        let (e0, e1) = (cis_square(p0), cis_square(p1));
        out[0] = zeroth_moment(p0, p1);
        for k in 1..out.len() {
            let kk = k as i32 - 1;
            let boundary = (p1.powi(kk) * e1 - p0.powi(kk) * e0) / two_i;
            out[k] = if k >= 2 {
                boundary - (k as f64 - 1.0) / two_i * out[k - 2]
            } else {
                boundary
            };
        }
    }
    out.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// `∫_{u0}^{u1} u^k e^{i a u^2} du` for `a > 0`, by rescaling to unit phase.
pub fn quadratic_phase_moments(a: f64, u0: f64, u1: f64, out: &mut [Complex64]) -> bool {
    let s = a.sqrt();
    if !unit_phase_moments(s * u0, s * u1, out) {
        return false;
    }
    let mut scale = 1.0 / s;
    for m in out.iter_mut() {
        *m *= scale;
        scale /= s;
    }
    true
}
