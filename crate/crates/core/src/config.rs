//! Configuration document in human units and its conversion to SI.
//!
//! The document is TOML with five sections; every key is optional and
//! defaults to the reference Rydberg-atom setup.
//!
//! ```toml
//! [setup]
//! mass_kg = 3.84e-26
//! v_y_m_per_s = 200.0
//!
//! [geometry]
//! slit_a_width_um = 100.0
//!
//! [run]
//! assumption = "alternative"
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aperture::SlitGeometry;
use crate::error::{Error, Result};
use crate::physics::{BeamSpec, PhysicalSetup, HBAR, SODIUM_MASS};
use crate::propagator::PropagatorOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assumption {
    /// Born rule on the field that passed slit A and grating B.
    Usual,
    /// Only slit A transmits the wave.
    Classical,
    /// Born density of the A∪B field, truncated left of its median.
    Alternative,
}

impl Assumption {
    pub const ALL: [Assumption; 3] = [Assumption::Usual, Assumption::Classical, Assumption::Alternative];

    pub fn name(self) -> &'static str {
        match self {
            Assumption::Usual => "usual",
            Assumption::Classical => "classical",
            Assumption::Alternative => "alternative",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Assumption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "usual" => Ok(Assumption::Usual),
            "classical" => Ok(Assumption::Classical),
            "alternative" => Ok(Assumption::Alternative),
            other => Err(Error::config(
                "run.assumption",
                format!("unknown assumption `{other}` (expected usual, classical or alternative)"),
            )),
        }
    }
}

/// How `beam.width_mm` relates to the Gaussian width parameter sigma0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthConvention {
    /// Full width between the 1/e^2 points of |psi|^2, i.e. 4 sigma0.
    E2FullWidth,
    /// Full width at half maximum of |psi|^2.
    Fwhm,
    /// The value is sigma0 itself.
    Sigma,
}

impl WidthConvention {
    pub fn sigma_from_width(self, width: f64) -> f64 {
        match self {
            WidthConvention::E2FullWidth => width / 4.0,
            WidthConvention::Fwhm => width / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt()),
            WidthConvention::Sigma => width,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            WidthConvention::E2FullWidth => "width is the 1/e^2 full width of |psi|^2 (4 sigma0)",
            WidthConvention::Fwhm => "width is the FWHM of |psi|^2",
            WidthConvention::Sigma => "width is sigma0, the standard deviation of |psi|^2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetupSection {
    pub mass_kg: f64,
    pub hbar_js: f64,
    pub v_y_m_per_s: f64,
    pub n_principal: u32,
    /// Internal-state lifetime; flights must end before it.
    pub lifetime_ms: Option<f64>,
}

impl Default for SetupSection {
    fn default() -> Self {
        Self {
            mass_kg: SODIUM_MASS,
            hbar_js: HBAR,
            v_y_m_per_s: 200.0,
            n_principal: 60,
            lifetime_ms: Some(70.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub width_mm: f64,
    pub width_convention: WidthConvention,
    pub center_um: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            width_mm: 6.0,
            width_convention: WidthConvention::E2FullWidth,
            center_um: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    /// Source to slit plane.
    pub d1_m: f64,
    /// Slit plane to detector.
    pub d2_m: f64,
    pub slit_a_width_um: f64,
    pub slit_a_center_um: f64,
    pub grating_slit_width_um: f64,
    /// Opaque gap between neighbouring grating slits.
    pub grating_separation_um: f64,
    pub grating_count: usize,
    pub grating_center_um: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            d1_m: 1.0,
            d2_m: 2.0,
            slit_a_width_um: 100.0,
            slit_a_center_um: 150.0,
            grating_slit_width_um: 0.1,
            grating_separation_um: 0.2,
            grating_count: 1000,
            grating_center_um: -150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub halfwidth_mm: f64,
    /// Odd, at least 101; the grid is symmetric through 0.
    pub points: usize,
    pub prominence_fraction: f64,
    /// Largest allowed edge density relative to the peak.
    pub tail_tolerance: f64,
    /// Transverse velocity spread for the optional blur; 0 disables it.
    pub delta_vx_m_per_s: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            halfwidth_mm: 4.0,
            points: 4001,
            prominence_fraction: 0.1,
            tail_tolerance: crate::density::DEFAULT_TAIL_TOLERANCE,
            delta_vx_m_per_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub assumption: Assumption,
    pub amplitude_tolerance: f64,
    pub max_poly_degree: usize,
    pub max_subdivisions: usize,
    pub oracle_phase_step_rad: f64,
    pub oracle_sample_budget: u64,
    pub oracle_points: usize,
    pub oracle_halfwidth_mm: f64,
    pub sweep_start_m: f64,
    pub sweep_end_m: f64,
    pub sweep_points: usize,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let p = PropagatorOptions::default();
        Self {
            assumption: Assumption::Usual,
            amplitude_tolerance: p.amplitude_tolerance,
            max_poly_degree: p.max_degree,
            max_subdivisions: p.max_subdivisions,
            oracle_phase_step_rad: 0.2,
            oracle_sample_budget: 200_000_000,
            oracle_points: 20,
            oracle_halfwidth_mm: 3.0,
            sweep_start_m: 0.05,
            sweep_end_m: 2.0,
            sweep_points: 41,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDocument {
    pub setup: SetupSection,
    pub beam: BeamSection,
    pub geometry: GeometrySection,
    pub detector: DetectorSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub halfwidth: f64,
    pub points: usize,
    pub prominence_fraction: f64,
    pub tail_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSpec {
    pub max_phase_step: f64,
    pub sample_budget: u64,
    pub points: usize,
    pub halfwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl SweepSpec {
    /// Evenly spaced positions from `start` to `end` inclusive.
    pub fn positions(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.end];
        }
        let step = (self.end - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.end } else { self.start + step * i as f64 })
            .collect()
    }
}

/// Validated configuration in SI units.
///
/// Built only from a [`ConfigDocument`], which is kept as the canonical
/// snapshot for serialization and hashing. To change a parameter edit the
/// document and rebuild.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub setup: PhysicalSetup,
    pub beam: BeamSpec,
    pub geometry: SlitGeometry,
    pub d1: f64,
    pub d2: f64,
    pub detector: DetectorSpec,
    pub assumption: Assumption,
    pub propagator: PropagatorOptions,
    pub delta_vx: f64,
    pub oracle: OracleSpec,
    pub sweep: SweepSpec,
    pub workers: usize,
    document: ConfigDocument,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_document(ConfigDocument::default())
            .expect("default document is valid")
    }
}

fn um(v: f64) -> f64 {
    v / 1e6
}

fn mm(v: f64) -> f64 {
    v / 1e3
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be a positive finite number, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be finite, got {v}")))
    }
}

/// Moves a lower-level validation error under a config key.
fn under(key: &str, e: Error) -> Error {
    Error::config(key, e.to_string())
}

impl ExperimentConfig {
    pub fn from_document(document: ConfigDocument) -> Result<Self> {
        let d = &document;
        let setup = PhysicalSetup {
            mass: positive("setup.mass_kg", d.setup.mass_kg)?,
            hbar: positive("setup.hbar_js", d.setup.hbar_js)?,
            v_y: positive("setup.v_y_m_per_s", d.setup.v_y_m_per_s)?,
            n_principal: d.setup.n_principal,
            lifetime: match d.setup.lifetime_ms {
                Some(v) => Some(positive("setup.lifetime_ms", v)? / 1e3),
                None => None,
            },
        };
        let beam = BeamSpec {
            sigma0: d
                .beam
                .width_convention
                .sigma_from_width(mm(positive("beam.width_mm", d.beam.width_mm)?)),
            center: um(finite("beam.center_um", d.beam.center_um)?),
        };
        let g = &d.geometry;
        let d1 = positive("geometry.d1_m", g.d1_m)?;
        let d2 = positive("geometry.d2_m", g.d2_m)?;
        let geometry = SlitGeometry {
            slit_a_width: um(positive("geometry.slit_a_width_um", g.slit_a_width_um)?),
            slit_a_center: um(finite("geometry.slit_a_center_um", g.slit_a_center_um)?),
            grating_slit_width: um(positive("geometry.grating_slit_width_um", g.grating_slit_width_um)?),
            grating_separation: um(positive("geometry.grating_separation_um", g.grating_separation_um)?),
            grating_count: g.grating_count,
            grating_center: um(finite("geometry.grating_center_um", g.grating_center_um)?),
        };
        if g.grating_count == 0 {
            return Err(Error::config("geometry.grating_count", "must be at least 1"));
        }
        geometry.validate().map_err(|e| under("geometry.slit_a_center_um", e))?;
        setup
            .check_flight(d1 + d2)
            .map_err(|e| under("setup.lifetime_ms", e))?;

        let det = &d.detector;
        if det.points < 101 || det.points.is_multiple_of(2) {
            return Err(Error::config(
                "detector.points",
                format!("must be odd and at least 101, got {}", det.points),
            ));
        }
        let detector = DetectorSpec {
            halfwidth: mm(positive("detector.halfwidth_mm", det.halfwidth_mm)?),
            points: det.points,
            prominence_fraction: positive("detector.prominence_fraction", det.prominence_fraction)?,
            tail_tolerance: positive("detector.tail_tolerance", det.tail_tolerance)?,
        };
        if detector.prominence_fraction >= 1.0 {
            return Err(Error::config("detector.prominence_fraction", "must be below 1"));
        }
        let delta_vx = det.delta_vx_m_per_s;
        if !(delta_vx.is_finite() && delta_vx >= 0.0) {
            return Err(Error::config(
                "detector.delta_vx_m_per_s",
                format!("must be nonnegative, got {delta_vx}"),
            ));
        }

        let r = &d.run;
        let propagator = PropagatorOptions {
            amplitude_tolerance: r.amplitude_tolerance,
            max_degree: r.max_poly_degree,
            max_subdivisions: r.max_subdivisions,
        };
        propagator.validate().map_err(|e| {
            let key = if !(r.amplitude_tolerance > 0.0 && r.amplitude_tolerance < 1.0) {
                "run.amplitude_tolerance"
            } else if r.max_subdivisions == 0 {
                "run.max_subdivisions"
            } else {
                "run.max_poly_degree"
            };
            under(key, e)
        })?;
        let oracle = OracleSpec {
            max_phase_step: positive("run.oracle_phase_step_rad", r.oracle_phase_step_rad)?,
            sample_budget: r.oracle_sample_budget,
            points: r.oracle_points,
            halfwidth: mm(positive("run.oracle_halfwidth_mm", r.oracle_halfwidth_mm)?),
        };
        if oracle.points == 0 {
            return Err(Error::config("run.oracle_points", "must be at least 1"));
        }
        if oracle.sample_budget == 0 {
            return Err(Error::config("run.oracle_sample_budget", "must be at least 1"));
        }
        let sweep = SweepSpec {
            start: positive("run.sweep_start_m", r.sweep_start_m)?,
            end: positive("run.sweep_end_m", r.sweep_end_m)?,
            points: r.sweep_points,
        };
        if sweep.points == 0 {
            return Err(Error::config("run.sweep_points", "must be at least 1"));
        }
        if sweep.points > 1 && sweep.start >= sweep.end {
            return Err(Error::config("run.sweep_start_m", "must be below run.sweep_end_m"));
        }
        if sweep.end > d2 {
            return Err(Error::config(
                "run.sweep_end_m",
                format!("must not exceed geometry.d2_m = {d2}"),
            ));
        }

        Ok(Self {
            setup,
            beam,
            geometry,
            d1,
            d2,
            detector,
            assumption: r.assumption,
            propagator,
            delta_vx,
            oracle,
            sweep,
            workers: r.workers,
            document,
        })
    }

    pub fn document(&self) -> &ConfigDocument {
        &self.document
    }

    /// Same configuration with another assumption.
    pub fn with_assumption(&self, assumption: Assumption) -> Self {
        let mut doc = self.document.clone();
        doc.run.assumption = assumption;
        let mut out = self.clone();
        out.assumption = assumption;
        out.document = doc;
        out
    }

    /// Same configuration with another worker count.
    pub fn with_workers(&self, workers: usize) -> Self {
        let mut out = self.clone();
        out.workers = workers;
        out.document.run.workers = workers;
        out
    }

    /// Arrival time at the slit plane.
    pub fn t1(&self) -> f64 {
        self.setup.time_at(self.d1)
    }

    /// Arrival time at the detector.
    pub fn t2(&self) -> f64 {
        self.time_behind_slits(self.d2)
    }

    /// Time at distance `y` behind the slit plane.
    pub fn time_behind_slits(&self, y: f64) -> f64 {
        self.t1() + y / self.setup.v_y
    }

    pub fn beam_width_convention(&self) -> WidthConvention {
        self.document.beam.width_convention
    }

    /// TOML text of the canonical document.
    pub fn to_toml(&self) -> String {
        serialize_config(self)
    }

    /// Hex SHA-256 of [`ExperimentConfig::to_toml`], ignoring the worker
    /// count, which never changes results.
    pub fn hash(&self) -> String {
        let text = self.with_workers(0).to_toml();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parses a TOML document, applies defaults and validates.
///
/// Errors name the offending key and, when it appears in `text`, its line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let document: ConfigDocument = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        let key = key_at(text, line).unwrap_or_else(|| "<document>".into());
        Error::Config {
            key,
            line,
            message: e.message().to_string(),
        }
    })?;
    ExperimentConfig::from_document(document).map_err(|e| match e {
        Error::Config { key, message, .. } => {
            let line = locate_key(text, &key);
            Error::Config { key, line, message }
        }
        other => other,
    })
}

pub fn serialize_config(config: &ExperimentConfig) -> String {
    toml::to_string(&config.document).expect("config document always serializes")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Dotted key defined on a 1-based line, if any.
fn key_at(text: &str, line: Option<usize>) -> Option<String> {
    let line = line?;
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = name.trim().to_string();
        }
        if i + 1 == line {
            let (k, _) = l.split_once('=')?;
            let k: String = k.split('.').map(str::trim).collect::<Vec<_>>().join(".");
            return Some(if section.is_empty() { k } else { format!("{section}.{k}") });
        }
    }
    None
}

/// Line where a dotted key such as `geometry.d1_m` is assigned.
fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (want_section, want_key) = dotted.split_once('.')?;
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((k, _)) = l.split_once('=') else { continue };
        let k: String = k.split('.').map(str::trim).collect::<Vec<_>>().join(".");
        let full = if section.is_empty() { k } else { format!("{section}.{k}") };
        if full == format!("{want_section}.{want_key}") {
            return Some(i + 1);
        }
    }
    None
}
