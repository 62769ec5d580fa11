//! Kinematics and the freely spreading Gaussian wavepacket.
//!
//! The transverse wavefunction before the slit plane is
//!
//! ```text
//! psi(x, t) = (2 pi s(t)^2)^(-1/4) exp(-(x - c)^2 / (4 sigma0 s(t)))
//! s(t)      = sigma0 (1 + i hbar t / (2 m sigma0^2))
//! ```
//!
//! with `t` measured from the source. All quantities are SI.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reduced Planck constant, J s (CODATA 2018, exact to the digits given).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Mass of the sodium Rydberg atoms used by the reference setup, kg.
pub const SODIUM_MASS: f64 = 3.84e-26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSetup {
    pub mass: f64,
    pub hbar: f64,
    /// Longitudinal speed along the beam axis, m/s.
    pub v_y: f64,
    /// Principal quantum number; carried as metadata only.
    pub n_principal: u32,
    /// Internal-state lifetime in seconds; metadata, checked against flight time.
    pub lifetime: Option<f64>,
}

impl Default for PhysicalSetup {
    fn default() -> Self {
        Self {
            mass: SODIUM_MASS,
            hbar: HBAR,
            v_y: 200.0,
            n_principal: 60,
            lifetime: Some(70e-3),
        }
    }
}

impl PhysicalSetup {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass", self.mass), ("hbar", self.hbar), ("v_y", self.v_y)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(tau) = self.lifetime {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lifetime must be positive, got {tau}"
                )));
            }
        }
        Ok(())
    }

    /// Checks that a flight over `distance` meters ends within the lifetime.
    pub fn check_flight(&self, distance: f64) -> Result<()> {
        if let Some(tau) = self.lifetime {
            let flight = distance / self.v_y;
            if flight >= tau {
                return Err(Error::InvalidParameter(format!(
                    "flight time {flight} s exceeds lifetime {tau} s"
                )));
            }
        }
        Ok(())
    }

    pub fn planck(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    /// Time at which the beam reaches longitudinal position `y`.
    pub fn time_at(&self, y: f64) -> f64 {
        y / self.v_y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// Width parameter: standard deviation of |psi|^2 at t = 0, m.
    pub sigma0: f64,
    pub center: f64,
}

impl Default for BeamSpec {
    fn default() -> Self {
        Self {
            sigma0: 1.5e-3,
            center: 0.0,
        }
    }
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidParameter("beam center must be finite".into()));
        }
        Ok(())
    }
}

/// The complex width `s(t)`; its real part is always `sigma0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexWidth(pub Complex64);

impl ComplexWidth {
    pub fn value(self) -> Complex64 {
        self.0
    }

    /// Dimensionless spreading ratio `hbar t / (2 m sigma0^2)`.
    pub fn spreading(self) -> f64 {
        self.0.im / self.0.re
    }
}

/// de Broglie wavelength `h / (m v_y)`.
pub fn de_broglie_wavelength(setup: &PhysicalSetup) -> f64 {
    setup.planck() / (setup.mass * setup.v_y)
}

pub fn complex_width(setup: &PhysicalSetup, beam: &BeamSpec, t: f64) -> ComplexWidth {
    let ratio = setup.hbar * t / (2.0 * setup.mass * beam.sigma0 * beam.sigma0);
    ComplexWidth(Complex64::new(beam.sigma0, beam.sigma0 * ratio))
}

/// Gaussian coefficients at time `t`: `psi = norm * exp(-b (x - c)^2)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GaussianCoefficients {
    pub norm: Complex64,
    pub b: Complex64,
    pub center: f64,
}

impl GaussianCoefficients {
    pub fn new(setup: &PhysicalSetup, beam: &BeamSpec, t: f64) -> Self {
        let s = complex_width(setup, beam, t).value();
        // principal branch of (2 pi s^2)^(-1/4)
        let norm = (-0.25 * (2.0 * PI * s * s).ln()).exp();
        let b = 1.0 / (4.0 * beam.sigma0 * s);
        Self {
            norm,
            b,
            center: beam.center,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        self.norm * (-self.b * d * d).exp()
    }

    /// Taylor coefficients `c_k = psi^(k)(x0) / k!` for `k = 0..=order`.
    ///
    /// Uses `f^(n+1) = -2b (X f^(n) + n f^(n-1))` for `f = exp(-b X^2)`.
    pub fn taylor(&self, x0: f64, order: usize, out: &mut Vec<Complex64>) {
        out.clear();
        let d = x0 - self.center;
        let f0 = self.eval(x0);
        out.push(f0);
        if order == 0 {
            return;
        }
        let mut prev = f0;
        let mut cur = -2.0 * self.b * d * f0;
        out.push(cur);
        for n in 1..order {
            let next = -2.0 * self.b * (d * cur + n as f64 * prev);
            prev = cur;
            cur = next;
            out.push(cur);
        }
        let mut fact = 1.0;
        for (k, c) in out.iter_mut().enumerate().skip(1) {
            fact *= k as f64;
            *c /= fact;
        }
    }
}

/// The wavepacket amplitude at transverse position `x` and time `t`.
pub fn free_gaussian(setup: &PhysicalSetup, beam: &BeamSpec, x: f64, t: f64) -> Complex64 {
    GaussianCoefficients::new(setup, beam, t).eval(x)
}
