//! Full scenarios: Gaussian beam to the slit plane, mask per assumption, exact
//! propagation to the detector (or any distance behind the slits), densities.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::aperture::{build_mask, Aperture, Selection};
use crate::config::{Assumption, ExperimentConfig, WidthConvention};
use crate::density::{
    born_density, cumulative, interference_fraction, median, smooth_velocity_dispersion,
    truncate_at_median, DensityProfile,
};
use crate::error::{Error, Result};
use crate::propagator::{
    propagate, propagate_oracle, uniform_grid, ComplexField, PropagationDiagnostics, PropagatorOptions,
};

/// Everything needed to reproduce a result, plus how long it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_toml: String,
    pub config_hash: String,
    pub assumption: Assumption,
    /// Distance behind the slit plane, m.
    pub y: f64,
    pub t1: f64,
    pub time: f64,
    pub geometry_convention: String,
    pub beam_width_convention: WidthConvention,
    pub propagator: PropagatorOptions,
    pub tail_tolerance: f64,
    pub prominence_fraction: f64,
    pub delta_vx: f64,
    pub diagnostics: PropagationDiagnostics,
    /// Wall-clock time; never written to CSV.
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub assumption: Assumption,
    pub detector_field: ComplexField,
    /// `|psi|^2` of `detector_field`.
    pub born_profile: DensityProfile,
    pub reported_profile: DensityProfile,
    /// Median of the born profile; alternative assumption only.
    pub median_x: Option<f64>,
    pub provenance: Provenance,
}

impl ScenarioResult {
    pub fn y(&self) -> f64 {
        self.provenance.y
    }
}

pub const GEOMETRY_CONVENTION: &str = "x transverse, origin midway between slit A and grating B \
     centres; slit A on +x, grating B on -x; grating gap is edge-to-edge";

/// Runs `f` on a pool with `workers` threads (0: the global pool).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

pub fn selection_for(assumption: Assumption) -> Selection {
    match assumption {
        Assumption::Classical => Selection::AOnly,
        Assumption::Usual | Assumption::Alternative => Selection::AAndB,
    }
}

pub fn detector_grid(config: &ExperimentConfig) -> Vec<f64> {
    uniform_grid(config.detector.halfwidth, config.detector.points)
}

/// Field behind `aperture` at distance `y` past the slit plane.
pub fn field_behind(config: &ExperimentConfig, aperture: &Aperture, y: f64, grid: &[f64]) -> Result<(ComplexField, PropagationDiagnostics)> {
    let p = propagate(
        &config.setup,
        &config.beam,
        aperture,
        config.t1(),
        config.time_behind_slits(y),
        grid,
        &config.propagator,
    )?;
    Ok((p.field, p.diagnostics))
}

fn evaluate(config: &ExperimentConfig, aperture: &Aperture, y: f64, grid: &[f64]) -> Result<ScenarioResult> {
    let start = Instant::now();
    let (field, diagnostics) = field_behind(config, aperture, y, grid)?;
    let born = born_density(&field)?;
    let tail = config.detector.tail_tolerance;
    let cum = cumulative(&born, tail)?;
    let (truncated, median_x) = match config.assumption {
        Assumption::Alternative => {
            let x_t = median(&cum);
            (truncate_at_median(&born, x_t)?, Some(x_t))
        }
        Assumption::Usual | Assumption::Classical => (born.clone(), None),
    };
    let reported = smooth_velocity_dispersion(&truncated, config.delta_vx, y / config.setup.v_y)?;
    let provenance = Provenance {
        // worker count never changes results
        config_toml: config.with_workers(0).to_toml(),
        config_hash: config.hash(),
        assumption: config.assumption,
        y,
        t1: config.t1(),
        time: field.time,
        geometry_convention: GEOMETRY_CONVENTION.to_string(),
        beam_width_convention: config.beam_width_convention(),
        propagator: config.propagator,
        tail_tolerance: tail,
        prominence_fraction: config.detector.prominence_fraction,
        delta_vx: config.delta_vx,
        diagnostics,
        elapsed: start.elapsed(),
    };
    Ok(ScenarioResult {
        assumption: config.assumption,
        detector_field: field,
        born_profile: born,
        reported_profile: reported,
        median_x,
        provenance,
    })
}

fn scenario_context(config: &ExperimentConfig, y: f64) -> String {
    format!("{} scenario at y = {y} m", config.assumption)
}

/// The configured scenario evaluated at the detector (`y = d2`).
pub fn run_scenario(config: &ExperimentConfig) -> Result<ScenarioResult> {
    let mask = build_mask(&config.geometry, selection_for(config.assumption))?;
    let grid = detector_grid(config);
    with_workers(config.workers, || evaluate(config, &mask, config.d2, &grid))?
        .map_err(|e| e.context(scenario_context(config, config.d2)))
}

/// One result per `y` in `y_positions` (ascending, each in `(0, d2]`).
pub fn sweep_longitudinal(config: &ExperimentConfig, y_positions: &[f64]) -> Result<Vec<ScenarioResult>> {
    for (i, &y) in y_positions.iter().enumerate() {
        if !(y > 0.0 && y <= config.d2) {
            return Err(Error::InvalidParameter(format!(
                "sweep position {y} m outside (0, {}] m",
                config.d2
            )));
        }
        if i > 0 && y <= y_positions[i - 1] {
            return Err(Error::InvalidParameter("sweep positions must be strictly ascending".into()));
        }
    }
    let mask = build_mask(&config.geometry, selection_for(config.assumption))?;
    let grid = detector_grid(config);
    with_workers(config.workers, || {
        y_positions
            .iter()
            .map(|&y| evaluate(config, &mask, y, &grid).map_err(|e| e.context(scenario_context(config, y))))
            .collect()
    })?
}

/// Separate fields behind slit A and grating B at distance `y`.
pub fn component_fields(config: &ExperimentConfig, y: f64) -> Result<(ComplexField, ComplexField)> {
    let grid = detector_grid(config);
    let a = build_mask(&config.geometry, Selection::AOnly)?;
    let b = build_mask(&config.geometry, Selection::BOnly)?;
    with_workers(config.workers, || -> Result<_> {
        let (fa, _) = field_behind(config, &a, y, &grid)?;
        let (fb, _) = field_behind(config, &b, y, &grid)?;
        Ok((fa, fb))
    })?
}

/// Interference share of the A∪B density at distance `y`.
pub fn overlap_fraction(config: &ExperimentConfig, y: f64) -> Result<f64> {
    let (a, b) = component_fields(config, y)?;
    interference_fraction(&a, &b)
}

/// Segment propagation next to the brute-force oracle on the same points.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub grid: Vec<f64>,
    pub segments: Vec<Complex64>,
    pub oracle: Vec<Complex64>,
    pub oracle_error_estimate: Vec<f64>,
    pub oracle_samples: Vec<u64>,
}

impl OracleComparison {
    /// `max |segments - oracle| / max |oracle|` over the sampled points.
    pub fn relative_error(&self) -> f64 {
        let diff = self
            .segments
            .iter()
            .zip(&self.oracle)
            .map(|(s, o)| (s - o).norm())
            .fold(0.0, f64::max);
        let scale = self.oracle.iter().map(|o| o.norm()).fold(0.0, f64::max);
        diff / scale
    }

    /// Largest pointwise `|segments - oracle| / |oracle|`.
    pub fn max_pointwise_error(&self) -> f64 {
        self.segments
            .iter()
            .zip(&self.oracle)
            .map(|(s, o)| (s - o).norm() / o.norm())
            .fold(0.0, f64::max)
    }
}

/// Compares both propagators behind `aperture` at distance `y` on `points`
/// uniform positions in `[-halfwidth, halfwidth]`.
pub fn oracle_check(
    config: &ExperimentConfig,
    aperture: &Aperture,
    y: f64,
    halfwidth: f64,
    points: usize,
    max_phase_step: f64,
) -> Result<OracleComparison> {
    let grid = if points == 1 { vec![0.0] } else { uniform_grid(halfwidth, points) };
    with_workers(config.workers, || -> Result<_> {
        let (field, _) = field_behind(config, aperture, y, &grid)?;
        let oracle = propagate_oracle(
            &config.setup,
            &config.beam,
            aperture,
            config.t1(),
            config.time_behind_slits(y),
            &grid,
            max_phase_step,
            config.oracle.sample_budget,
        )?;
        Ok(OracleComparison {
            grid: grid.clone(),
            segments: field.values,
            oracle: oracle.field.values,
            oracle_error_estimate: oracle.error_estimate,
            oracle_samples: oracle.samples,
        })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small() -> ExperimentConfig {
        // coarse grid and short grating for fast unit tests
        parse_config(
            "[geometry]\ngrating_count = 40\n[detector]\nhalfwidth_mm = 4.0\npoints = 401\n",
        )
        .unwrap()
    }

    #[test]
    fn assumptions_pick_masks_and_profiles() {
        let c = small();
        let usual = run_scenario(&c.with_assumption(Assumption::Usual)).unwrap();
        let classical = run_scenario(&c.with_assumption(Assumption::Classical)).unwrap();
        let alt = run_scenario(&c.with_assumption(Assumption::Alternative)).unwrap();

        assert_eq!(usual.reported_profile, usual.born_profile);
        assert_eq!(classical.reported_profile, classical.born_profile);
        assert!(usual.median_x.is_none() && classical.median_x.is_none());
        assert_eq!(alt.detector_field, usual.detector_field);

        let x_t = alt.median_x.unwrap();
        let half = 0.5 * usual.born_profile.total_mass;
        assert!((alt.reported_profile.total_mass - half).abs() < 1e-12 * half);
        for (x, v) in alt.reported_profile.grid.iter().zip(&alt.reported_profile.values) {
            if *x < x_t {
                assert_eq!(*v, 0.0);
            }
        }
        assert!((usual.provenance.time - 15e-3).abs() < 1e-15);
    }

    #[test]
    fn sweep_end_matches_single_run() {
        let c = small().with_assumption(Assumption::Alternative);
        let single = run_scenario(&c).unwrap();
        let sweep = sweep_longitudinal(&c, &[0.05, 1.0, c.d2]).unwrap();
        let last = sweep.last().unwrap();
        assert_eq!(last.detector_field, single.detector_field);
        assert_eq!(last.reported_profile, single.reported_profile);
        assert_eq!(last.median_x, single.median_x);
        assert!((sweep[0].provenance.time - (c.t1() + 0.25e-3)).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_bad_positions() {
        let c = small();
        assert!(sweep_longitudinal(&c, &[0.0]).is_err());
        assert!(sweep_longitudinal(&c, &[1.0, 0.5]).is_err());
        assert!(sweep_longitudinal(&c, &[3.0]).is_err());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let c = small();
        let one = run_scenario(&c.with_workers(1)).unwrap();
        let two = run_scenario(&c.with_workers(2)).unwrap();
        assert_eq!(one.detector_field, two.detector_field);
    }

    #[test]
    fn smoothing_conserves_mass() {
        let c = parse_config(
            "[geometry]\ngrating_count = 40\n[detector]\nhalfwidth_mm = 4.0\npoints = 401\ndelta_vx_m_per_s = 0.005\n\
             [run]\nassumption = \"alternative\"\n",
        )
        .unwrap();
        let r = run_scenario(&c).unwrap();
        let half = 0.5 * r.born_profile.total_mass;
        assert!((r.reported_profile.total_mass - half).abs() < 1e-10 * half);
        // the blur leaks mass left of the cut
        let k = r.reported_profile.grid.partition_point(|&x| x < r.median_x.unwrap());
        assert!(r.reported_profile.values[k - 2] > 0.0);
    }

    #[test]
    fn errors_carry_scenario_context() {
        let c = parse_config("[detector]\nhalfwidth_mm = 0.05\npoints = 101\n").unwrap();
        let err = run_scenario(&c).unwrap_err();
        assert!(matches!(err.root(), Error::WindowTooSmall { .. }));
        assert!(err.to_string().starts_with("usual scenario at y = 2 m"));
        assert_eq!(err.exit_code(), 3);
    }
}
