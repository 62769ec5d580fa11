//! Slit-restricted free propagation.
//!
//! The field behind the mask is
//!
//! ```text
//! psi(x, t) = Σ_intervals ∫ K(x, t; x_f, t1) psi(x_f, t1) dx_f
//! K         = (m / (2 i pi hbar Δt))^(1/2) exp(i a (x - x_f)^2),  a = m / (2 hbar Δt)
//! ```
//!
//! [`propagate`] splits every open interval into pieces on which the incident
//! Gaussian is a low-degree polynomial to a relative tolerance, then integrates
//! polynomial × quadratic phase exactly (see [`crate::oscillatory`]). The cost
//! per detector point does not depend on how many times the kernel oscillates
//! across the aperture.
//!
//! [`propagate_oracle`] is the slow cross-check: a midpoint Riemann sum whose
//! step resolves every oscillation of the kernel.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::aperture::{Aperture, Interval};
use crate::error::{Error, Result};
use crate::oscillatory::{quadratic_phase_moments, MAX_DEGREE};
use crate::physics::{BeamSpec, GaussianCoefficients, PhysicalSetup};

/// Phase step used when a segment falls back to direct summation.
const FALLBACK_PHASE_STEP: f64 = 0.02;
const FALLBACK_BUDGET: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Quadratic phase coefficient `m / (2 hbar Δt)`, rad/m².
    pub a: f64,
    pub prefactor: Complex64,
    pub t1: f64,
    pub t: f64,
}

impl KernelParams {
    pub fn new(setup: &PhysicalSetup, t1: f64, t: f64) -> Result<Self> {
        if !(t1.is_finite() && t.is_finite() && t1 >= 0.0 && t > t1) {
            return Err(Error::InvalidTime { t1, t });
        }
        let dt = t - t1;
        let a = setup.mass / (2.0 * setup.hbar * dt);
        // principal root of m / (2 i pi hbar dt): phase -pi/4
        let magnitude = (setup.mass / (2.0 * PI * setup.hbar * dt)).sqrt();
        Ok(Self {
            a,
            prefactor: Complex64::from_polar(magnitude, -FRAC_PI_4),
            t1,
            t,
        })
    }

    pub fn dt(&self) -> f64 {
        self.t - self.t1
    }
}

pub fn kernel(params: &KernelParams, x: f64, x_f: f64) -> Complex64 {
    let u = x - x_f;
    let (s, c) = (params.a * u * u).sin_cos();
    params.prefactor * Complex64::new(c, s)
}

/// Sampled complex wavefunction on a transverse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl ComplexField {
    pub fn new(grid: Vec<f64>, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidParameter("a field needs at least 2 grid points".into()));
        }
        validate_grid(&grid)?;
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter("field contains non-finite values".into()));
        }
        Ok(Self { grid, values, time })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("grid contains non-finite positions".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Uniform symmetric grid of `points` samples over `[-halfwidth, halfwidth]`.
pub fn uniform_grid(halfwidth: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    let step = 2.0 * halfwidth / (points - 1) as f64;
    let mid = (points - 1) as f64 / 2.0;
    (0..points).map(|i| (i as f64 - mid) * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorOptions {
    /// Relative tolerance of the polynomial model of the incident amplitude.
    pub amplitude_tolerance: f64,
    pub max_degree: usize,
    /// Upper bound on the pieces any single interval may be split into.
    pub max_subdivisions: usize,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self {
            amplitude_tolerance: 1e-8,
            max_degree: 2,
            max_subdivisions: 1 << 16,
        }
    }
}

impl PropagatorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_tolerance > 0.0 && self.amplitude_tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "amplitude tolerance must lie in (0, 1), got {}",
                self.amplitude_tolerance
            )));
        }
        if self.max_degree > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "max polynomial degree is {MAX_DEGREE}, got {}",
                self.max_degree
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    Segments,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationDiagnostics {
    pub method: Method,
    pub segments: usize,
    /// Largest estimated relative error of the amplitude polynomials.
    pub max_amplitude_error: f64,
    /// Interval holding the piece with the largest amplitude error.
    pub worst_interval: Option<(f64, f64)>,
    /// Segment evaluations that fell back to direct summation.
    pub fallback_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub field: ComplexField,
    pub diagnostics: PropagationDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentValue {
    pub value: Complex64,
    pub used_fallback: bool,
}

/// `∫_interval exp(i a (x - x_f)^2) poly(x_f - x_mid) dx_f`, with `x_mid` the
/// interval midpoint and `poly[k]` the coefficient of `(x_f - x_mid)^k`.
///
/// The kernel prefactor is not included.
pub fn segment_integral(
    params: &KernelParams,
    poly: &[Complex64],
    interval: Interval,
    x: f64,
) -> Result<SegmentValue> {
    let mut shifted = [Complex64::new(0.0, 0.0); MAX_DEGREE + 1];
    let mut moments = [Complex64::new(0.0, 0.0); MAX_DEGREE + 1];
    segment_integral_with(params, poly, interval, x, &mut shifted, &mut moments)
}

fn segment_integral_with(
    params: &KernelParams,
    poly: &[Complex64],
    interval: Interval,
    x: f64,
    shifted: &mut [Complex64; MAX_DEGREE + 1],
    moments: &mut [Complex64; MAX_DEGREE + 1],
) -> Result<SegmentValue> {
    let n = poly.len();
    if n == 0 || n > MAX_DEGREE + 1 {
        return Err(Error::InvalidParameter(format!(
            "amplitude polynomial must have 1..={} coefficients, got {n}",
            MAX_DEGREE + 1
        )));
    }
    if !(interval.lower.is_finite() && interval.upper.is_finite()) {
        return Err(Error::InvalidAperture(format!("unbounded segment {interval}")));
    }
    // x_f - x_mid = u + d with u = x_f - x
    let d = x - interval.midpoint();
    horner_shift(poly, d, &mut shifted[..n]);
    let u0 = interval.lower - x;
    let u1 = interval.upper - x;
    if quadratic_phase_moments(params.a, u0, u1, &mut moments[..n]) {
        let value = shifted[..n]
            .iter()
            .zip(&moments[..n])
            .fold(Complex64::new(0.0, 0.0), |acc, (q, m)| acc + q * m);
        return Ok(SegmentValue {
            value,
            used_fallback: false,
        });
    }
    let value = riemann_segment(params.a, interval, x, FALLBACK_PHASE_STEP, FALLBACK_BUDGET, |xf| {
        eval_poly(poly, xf - interval.midpoint())
    })?
    .0;
    Ok(SegmentValue {
        value,
        used_fallback: true,
    })
}

fn eval_poly(poly: &[Complex64], v: f64) -> Complex64 {
    poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * v + c)
}

/// Coefficients of `p(u + d)` in powers of `u` (repeated synthetic division).
fn horner_shift(poly: &[Complex64], d: f64, out: &mut [Complex64]) {
    out.copy_from_slice(poly);
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let next = out[j + 1];
            out[j] += next * d;
        }
    }
}

/// Midpoint sum of `exp(i a (x - x_f)^2) amp(x_f)` with a phase-resolving step.
/// Returns the sum and the number of samples.
fn riemann_segment(
    a: f64,
    interval: Interval,
    x: f64,
    max_phase_step: f64,
    budget: u64,
    amp: impl Fn(f64) -> Complex64,
) -> Result<(Complex64, u64)> {
    let samples = riemann_samples(a, interval, x, max_phase_step);
    if samples > budget {
        return Err(Error::SampleBudget {
            required: samples,
            budget,
        });
    }
    let h = interval.width() / samples as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..samples {
        let xf = interval.lower + (j as f64 + 0.5) * h;
        let u = x - xf;
        let (s, c) = (a * u * u).sin_cos();
        acc += Complex64::new(c, s) * amp(xf);
    }
    Ok((acc * h, samples))
}

fn riemann_samples(a: f64, interval: Interval, x: f64, max_phase_step: f64) -> u64 {
    let reach = (x - interval.lower).abs().max((x - interval.upper).abs());
    let rate = 2.0 * a * reach;
    let by_phase = (interval.width() * rate / max_phase_step).ceil();
    by_phase.max(1.0) as u64
}

/// One piece of an aperture interval with its amplitude polynomial.
#[derive(Debug, Clone)]
struct Segment {
    interval: Interval,
    poly: [Complex64; MAX_DEGREE + 1],
    len: usize,
}

struct Segmentation {
    segments: Vec<Segment>,
    max_error: f64,
    worst: Option<Interval>,
}

fn piece_error(taylor: &[Complex64], degree: usize, radius: f64) -> f64 {
    let c0 = taylor[0].norm();
    if c0 == 0.0 {
        return 0.0;
    }
    let r1 = radius.powi(degree as i32 + 1);
    (taylor[degree + 1].norm() * r1 + taylor[degree + 2].norm() * r1 * radius) / c0
}

fn segment_aperture(
    gaussian: &GaussianCoefficients,
    intervals: &[Interval],
    options: &PropagatorOptions,
) -> Result<Segmentation> {
    let degree = options.max_degree;
    let mut taylor = Vec::with_capacity(degree + 3);
    let mut segments = Vec::new();
    let mut max_error = 0.0f64;
    let mut worst = None;
    for iv in intervals {
        let mut pieces = 1usize;
        let (pieces, err) = loop {
            let h = iv.width() / pieces as f64;
            let mut err = 0.0f64;
            for j in 0..pieces {
                let mid = iv.lower + (j as f64 + 0.5) * h;
                gaussian.taylor(mid, degree + 2, &mut taylor);
                err = err.max(piece_error(&taylor, degree, 0.5 * h));
            }
            if err <= options.amplitude_tolerance {
                break (pieces, err);
            }
            if pieces * 2 > options.max_subdivisions {
                return Err(Error::Tolerance {
                    lower: iv.lower,
                    upper: iv.upper,
                    achieved: err,
                    requested: options.amplitude_tolerance,
                });
            }
            pieces *= 2;
        };
        if err > max_error || worst.is_none() {
            max_error = max_error.max(err);
            worst = Some(*iv);
        }
        let h = iv.width() / pieces as f64;
        for j in 0..pieces {
            let lower = iv.lower + j as f64 * h;
            let upper = if j + 1 == pieces { iv.upper } else { lower + h };
            let piece = Interval::new(lower, upper);
            gaussian.taylor(piece.midpoint(), degree, &mut taylor);
            let mut poly = [Complex64::new(0.0, 0.0); MAX_DEGREE + 1];
            poly[..=degree].copy_from_slice(&taylor);
            segments.push(Segment {
                interval: piece,
                poly,
                len: degree + 1,
            });
        }
    }
    Ok(Segmentation {
        segments,
        max_error,
        worst,
    })
}

fn propagate_point(params: &KernelParams, segments: &[Segment], x: f64) -> Result<(Complex64, usize)> {
    let mut shifted = [Complex64::new(0.0, 0.0); MAX_DEGREE + 1];
    let mut moments = [Complex64::new(0.0, 0.0); MAX_DEGREE + 1];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut fallbacks = 0;
    // fixed ascending order keeps the reduction reproducible
    for seg in segments {
        let v = segment_integral_with(
            params,
            &seg.poly[..seg.len],
            seg.interval,
            x,
            &mut shifted,
            &mut moments,
        )?;
        acc += v.value;
        fallbacks += usize::from(v.used_fallback);
    }
    Ok((params.prefactor * acc, fallbacks))
}

/// Field at time `t` behind `aperture`, illuminated at `t1` by the beam.
pub fn propagate(
    setup: &PhysicalSetup,
    beam: &BeamSpec,
    aperture: &Aperture,
    t1: f64,
    t: f64,
    detector_grid: &[f64],
    options: &PropagatorOptions,
) -> Result<Propagation> {
    let params = KernelParams::new(setup, t1, t)?;
    options.validate()?;
    validate_grid(detector_grid)?;
    let grid = detector_grid.to_vec();
    match aperture {
        Aperture::FullLine => {
            let g = GaussianCoefficients::new(setup, beam, t);
            let values = grid.iter().map(|&x| g.eval(x)).collect();
            Ok(Propagation {
                field: ComplexField::new(grid, values, t)?,
                diagnostics: PropagationDiagnostics {
                    method: Method::Analytic,
                    segments: 0,
                    max_amplitude_error: 0.0,
                    worst_interval: None,
                    fallback_evaluations: 0,
                },
            })
        }
        Aperture::Bounded(intervals) if intervals.is_empty() => {
            let values = vec![Complex64::new(0.0, 0.0); grid.len()];
            Ok(Propagation {
                field: ComplexField::new(grid, values, t)?,
                diagnostics: PropagationDiagnostics {
                    method: Method::Empty,
                    segments: 0,
                    max_amplitude_error: 0.0,
                    worst_interval: None,
                    fallback_evaluations: 0,
                },
            })
        }
        Aperture::Bounded(intervals) => {
            let gaussian = GaussianCoefficients::new(setup, beam, t1);
            let seg = segment_aperture(&gaussian, intervals, options)?;
            let points: Vec<(Complex64, usize)> = grid
                .par_iter()
                .map(|&x| propagate_point(&params, &seg.segments, x))
                .collect::<Result<_>>()?;
            let fallback_evaluations = points.iter().map(|p| p.1).sum();
            let values = points.into_iter().map(|p| p.0).collect();
            Ok(Propagation {
                field: ComplexField::new(grid, values, t)?,
                diagnostics: PropagationDiagnostics {
                    method: Method::Segments,
                    segments: seg.segments.len(),
                    max_amplitude_error: seg.max_error,
                    worst_interval: seg.worst.map(|iv| (iv.lower, iv.upper)),
                    fallback_evaluations,
                },
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleField {
    pub field: ComplexField,
    /// Per-point bound on the midpoint-rule error, `Σ h³/24 |f''|`.
    pub error_estimate: Vec<f64>,
    pub samples: Vec<u64>,
}

/// Brute-force evaluation with the exact incident amplitude and a step that
/// keeps the kernel phase change per sample at or below `max_phase_step`.
///
/// `sample_budget` bounds the number of samples per detector point.
#[allow(clippy::too_many_arguments)]
pub fn propagate_oracle(
    setup: &PhysicalSetup,
    beam: &BeamSpec,
    aperture: &Aperture,
    t1: f64,
    t: f64,
    detector_grid: &[f64],
    max_phase_step: f64,
    sample_budget: u64,
) -> Result<OracleField> {
    let params = KernelParams::new(setup, t1, t)?;
    if !(max_phase_step > 0.0 && max_phase_step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "max phase step must lie in (0, 1] rad, got {max_phase_step}"
        )));
    }
    let Aperture::Bounded(intervals) = aperture else {
        return Err(Error::InvalidAperture(
            "the oracle needs a bounded aperture".into(),
        ));
    };
    validate_grid(detector_grid)?;
    let gaussian = GaussianCoefficients::new(setup, beam, t1);
    let a = params.a;

    let results: Vec<(Complex64, f64, u64)> = detector_grid
        .par_iter()
        .map(|&x| {
            let required: u64 = intervals
                .iter()
                .map(|iv| riemann_samples(a, *iv, x, max_phase_step))
                .sum();
            if required > sample_budget {
                return Err(Error::SampleBudget {
                    required,
                    budget: sample_budget,
                });
            }
            let mut acc = Complex64::new(0.0, 0.0);
            let mut err = 0.0;
            for iv in intervals {
                let n = riemann_samples(a, *iv, x, max_phase_step);
                let h = iv.width() / n as f64;
                let (sum, _) = riemann_segment(a, *iv, x, max_phase_step, u64::MAX, |xf| {
                    gaussian.eval(xf)
                })?;
                acc += sum;
                // f''/f = (2 i a u + g)^2 + 2 i a + g',  g = psi'/psi = -2 b X
                for j in 0..n {
                    let xf = iv.lower + (j as f64 + 0.5) * h;
                    let u = xf - x;
                    let g = -2.0 * gaussian.b * (xf - gaussian.center);
                    let q = Complex64::new(0.0, 2.0 * a * u) + g;
                    let curv = q * q + Complex64::new(0.0, 2.0 * a) - 2.0 * gaussian.b;
                    err += h * h * h / 24.0 * curv.norm() * gaussian.eval(xf).norm();
                }
            }
            Ok((params.prefactor * acc, params.prefactor.norm() * err, required))
        })
        .collect::<Result<_>>()?;

    let grid = detector_grid.to_vec();
    let values = results.iter().map(|r| r.0).collect();
    Ok(OracleField {
        field: ComplexField::new(grid, values, t)?,
        error_estimate: results.iter().map(|r| r.1).collect(),
        samples: results.iter().map(|r| r.2).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aperture::{build_mask, Selection, SlitGeometry};

    fn setup() -> PhysicalSetup {
        PhysicalSetup::default()
    }

    fn one() -> [Complex64; 1] {
        [Complex64::new(1.0, 0.0)]
    }

    #[test]
    fn kernel_prefactor_and_phase_coefficient() {
        let p = KernelParams::new(&setup(), 5e-3, 15e-3).unwrap();
        // 40-digit references: sqrt(m / (2 pi hbar dt)) and m / (2 hbar dt)
        assert!((p.prefactor.norm() / 76_126.804_040_211_41 - 1.0).abs() < 1e-13);
        assert!((p.prefactor.arg() + FRAC_PI_4).abs() < 1e-15);
        assert!((p.a / 18_206_441_411.092_63 - 1.0).abs() < 1e-13);
        let k = kernel(&p, 1e-4, 1e-4);
        assert_eq!(k, p.prefactor);
        assert_eq!(kernel(&p, 3e-4, -2e-4), kernel(&p, -2e-4, 3e-4));
    }

    #[test]
    fn invalid_times() {
        assert!(matches!(
            KernelParams::new(&setup(), 5e-3, 5e-3),
            Err(Error::InvalidTime { .. })
        ));
        assert!(KernelParams::new(&setup(), -1.0, 1.0).is_err());
    }

    #[test]
    fn horner_shift_matches_expansion() {
        let c = [
            Complex64::new(1.0, 2.0),
            Complex64::new(-3.0, 0.5),
            Complex64::new(0.25, -1.0),
        ];
        let mut out = [Complex64::new(0.0, 0.0); 3];
        horner_shift(&c, 0.7, &mut out);
        for &u in &[-1.0, 0.0, 0.3, 2.0] {
            let direct = eval_poly(&c, u + 0.7);
            assert!((eval_poly(&out, u) - direct).norm() < 1e-14 * direct.norm());
        }
    }

    #[test]
    fn slowly_varying_phase_limit() {
        let half = 2e-6;
        // a * halfwidth^2 = 1e-6: the integral is the width to ~3e-7
        let p = KernelParams {
            a: 1e-6 / (half * half),
            ..KernelParams::new(&setup(), 0.0, 1.0).unwrap()
        };
        let iv = Interval::new(1e-3 - half, 1e-3 + half);
        let v = segment_integral(&p, &one(), iv, 1e-3).unwrap();
        assert!(!v.used_fallback);
        assert!((v.value - Complex64::new(2.0 * half, 0.0)).norm() < 1e-6 * 2.0 * half);

        // at a * halfwidth^2 = 1e-3 the leading correction i a h^2 / 3 dominates
        let p = KernelParams { a: 1e-3 / (half * half), ..p };
        let v = segment_integral(&p, &one(), iv, 1e-3).unwrap().value;
        let first_order = Complex64::new(2.0 * half, 2.0 * half * 1e-3 / 3.0);
        assert!((v - first_order).norm() < 1e-6 * 2.0 * half);
    }

    #[test]
    fn slit_a_constant_amplitude_matches_fine_riemann_sum() {
        let p = KernelParams::new(&setup(), 5e-3, 15e-3).unwrap();
        let slit = SlitGeometry::default().slit_a();
        let v = segment_integral(&p, &one(), slit, 0.0).unwrap().value;
        // reference: midpoint rule at 2e-4 rad per step, then Richardson (h^2)
        let fine = riemann_segment(p.a, slit, 0.0, 2e-4, u64::MAX, |_| one()[0]).unwrap().0;
        let coarse = riemann_segment(p.a, slit, 0.0, 4e-4, u64::MAX, |_| one()[0]).unwrap().0;
        let n_f = riemann_samples(p.a, slit, 0.0, 2e-4) as f64;
        let n_c = riemann_samples(p.a, slit, 0.0, 4e-4) as f64;
        let r = (n_f / n_c).powi(2);
        let extrapolated = (r * fine - coarse) / (r - 1.0);
        let rel = (v - extrapolated).norm() / v.norm();
        assert!(rel < 1e-8, "relative error {rel:e}");
    }

    #[test]
    fn odd_amplitude_on_symmetric_interval_vanishes() {
        let p = KernelParams::new(&setup(), 5e-3, 15e-3).unwrap();
        let iv = Interval::new(-3e-5, 3e-5);
        let odd = [Complex64::new(0.0, 0.0), Complex64::new(2.0, -1.0)];
        let v = segment_integral(&p, &odd, iv, 0.0).unwrap().value;
        let scale = segment_integral(&p, &one(), iv, 0.0).unwrap().value.norm() * 3e-5;
        assert!(v.norm() < 1e-13 * scale, "{v}");
    }

    #[test]
    fn empty_aperture_gives_zero_field() {
        let grid = uniform_grid(1e-3, 11);
        let s = setup();
        let out = propagate(
            &s,
            &BeamSpec::default(),
            &Aperture::empty(),
            5e-3,
            15e-3,
            &grid,
            &PropagatorOptions::default(),
        )
        .unwrap();
        assert!(out.field.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        let oracle = propagate_oracle(
            &s,
            &BeamSpec::default(),
            &Aperture::empty(),
            5e-3,
            15e-3,
            &grid,
            0.2,
            1_000,
        )
        .unwrap();
        assert!(oracle.field.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn segmentation_reaches_tolerance_on_slit_a() {
        let s = setup();
        let g = GaussianCoefficients::new(&s, &BeamSpec::default(), 5e-3);
        let slit = SlitGeometry::default().slit_a();
        let seg = segment_aperture(&g, &[slit], &PropagatorOptions::default()).unwrap();
        assert!(seg.max_error <= 1e-8);
        assert!(seg.segments.len() > 1);
        // polynomials reproduce the exact amplitude inside each piece
        for piece in &seg.segments {
            for frac in [0.0, 0.3, 1.0] {
                let xf = piece.interval.lower + frac * piece.interval.width();
                let approx = eval_poly(&piece.poly[..piece.len], xf - piece.interval.midpoint());
                let exact = g.eval(xf);
                assert!((approx - exact).norm() <= 1e-8 * exact.norm());
            }
        }
    }

    #[test]
    fn tolerance_failure_reports_interval() {
        let s = setup();
        let beam = BeamSpec { sigma0: 1e-7, center: 0.0 };
        let g = GaussianCoefficients::new(&s, &beam, 0.0);
        let opts = PropagatorOptions {
            max_subdivisions: 4,
            ..PropagatorOptions::default()
        };
        let err = segment_aperture(&g, &[Interval::new(-1e-6, 1e-6)], &opts).err().unwrap();
        assert!(matches!(err, Error::Tolerance { lower, .. } if lower == -1e-6));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn oracle_budget_is_enforced() {
        let s = setup();
        let a = build_mask(&SlitGeometry::default(), Selection::AOnly).unwrap();
        let err = propagate_oracle(&s, &BeamSpec::default(), &a, 5e-3, 15e-3, &[-3e-3], 0.2, 1000)
            .unwrap_err();
        match err {
            Error::SampleBudget { required, budget } => {
                assert_eq!(budget, 1000);
                assert!(required > 50_000, "{required}");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(propagate_oracle(
            &s,
            &BeamSpec::default(),
            &Aperture::FullLine,
            5e-3,
            15e-3,
            &[0.0],
            0.2,
            10
        )
        .is_err());
    }

    #[test]
    fn oracle_self_convergence_within_estimate() {
        let s = setup();
        let beam = BeamSpec::default();
        let a = build_mask(&SlitGeometry::default(), Selection::AOnly).unwrap();
        let grid = [-1e-3, 0.0, 1.5e-4, 2.5e-3];
        let coarse = propagate_oracle(&s, &beam, &a, 5e-3, 15e-3, &grid, 0.2, 1 << 30).unwrap();
        let fine = propagate_oracle(&s, &beam, &a, 5e-3, 15e-3, &grid, 0.1, 1 << 30).unwrap();
        for i in 0..grid.len() {
            let change = (coarse.field.values[i] - fine.field.values[i]).norm();
            assert!(change < coarse.error_estimate[i], "point {i}: {change:e}");
        }
    }
}
