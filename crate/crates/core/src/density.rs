//! Densities, cumulative distributions and the median-truncated density.
//!
//! All integrals use the composite trapezoid rule on the profile grid. A
//! truncated profile remembers where it was cut so that the straddling cell
//! contributes exactly the fraction of its mass that lies right of the cut.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::{validate_grid, ComplexField};

/// Default bound on window-edge density relative to the peak.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-2;

/// Plateau detection slack on F(x) around 1/2.
const PLATEAU_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cut {
    pub position: f64,
    /// Mass between `position` and the first grid node at or right of it.
    pub partial_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub time: f64,
    pub total_mass: f64,
    pub cut: Option<Cut>,
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (v[0] + v[1]) * (x[1] - x[0]))
        .sum()
}

impl DensityProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, time: f64) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "density needs matching grid/values of length >= 2, got {} and {}",
                grid.len(),
                values.len()
            )));
        }
        validate_grid(&grid)?;
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let total_mass = trapezoid(&grid, &values);
        Ok(Self {
            grid,
            values,
            time,
            total_mass,
            cut: None,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Largest of the two window-edge densities relative to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.peak();
        if peak == 0.0 {
            return 0.0;
        }
        self.values[0].max(self.values[self.len() - 1]) / peak
    }

    /// Mass attributed to each node; sums to `total_mass`.
    fn node_masses(&self) -> Vec<f64> {
        let n = self.len();
        let mut m = vec![0.0; n];
        let first = match self.cut {
            Some(c) => {
                let k = self.grid.partition_point(|&x| x < c.position);
                if k < n {
                    m[k] += c.partial_mass;
                }
                k
            }
            None => 0,
        };
        for j in first..n.saturating_sub(1) {
            let half = 0.5 * (self.grid[j + 1] - self.grid[j]);
            m[j] += half * self.values[j];
            m[j + 1] += half * self.values[j + 1];
        }
        m
    }

    fn running_mass(&self) -> Vec<f64> {
        let n = self.len();
        let mut f = vec![0.0; n];
        let start = match self.cut {
            Some(c) => {
                let k = self.grid.partition_point(|&x| x < c.position);
                if k < n {
                    f[k] = c.partial_mass;
                }
                k
            }
            None => 0,
        };
        for j in start..n.saturating_sub(1) {
            f[j + 1] = f[j] + 0.5 * (self.values[j] + self.values[j + 1]) * (self.grid[j + 1] - self.grid[j]);
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// `|psi|^2` on the field grid.
pub fn born_density(field: &ComplexField) -> Result<DensityProfile> {
    let values: Vec<f64> = field.values.iter().map(|v| v.norm_sqr()).collect();
    let profile = DensityProfile::new(field.grid.clone(), values, field.time)?;
    if profile.total_mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(profile)
}

/// Normalized running integral `F(x)`; `tail_tolerance` bounds the window-edge
/// density relative to the peak.
pub fn cumulative(density: &DensityProfile, tail_tolerance: f64) -> Result<CumulativeProfile> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(density.total_mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let edge_ratio = density.edge_ratio();
    if edge_ratio >= tail_tolerance {
        return Err(Error::WindowTooSmall {
            edge_ratio,
            tolerance: tail_tolerance,
        });
    }
    let running = density.running_mass();
    let total = running[running.len() - 1];
    let values = running.iter().map(|m| m / total).collect();
    Ok(CumulativeProfile {
        grid: density.grid.clone(),
        values,
    })
}

/// Position where `F` crosses 1/2, by linear interpolation between the
/// bracketing samples. A plateau at 1/2 resolves to its midpoint.
pub fn median(cumulative: &CumulativeProfile) -> f64 {
    let f = &cumulative.values;
    let x = &cumulative.grid;
    let below = f.partition_point(|&v| v < 0.5 - PLATEAU_EPS);
    let above = f.partition_point(|&v| v <= 0.5 + PLATEAU_EPS);
    if above > below {
        // samples below..above sit on 1/2
        return 0.5 * (x[below] + x[above - 1]);
    }
    // F[below - 1] < 1/2 < F[below]
    let (j, k) = (below - 1, below);
    x[j] + (x[k] - x[j]) * (0.5 - f[j]) / (f[k] - f[j])
}

/// Zeroes the density left of `x_t`; the straddling cell keeps the linearly
/// interpolated share of its mass.
pub fn truncate_at_median(density: &DensityProfile, x_t: f64) -> Result<DensityProfile> {
    let lower = density.grid[0];
    let upper = density.grid[density.len() - 1];
    if !(x_t >= lower && x_t <= upper) {
        return Err(Error::OutsideWindow { x: x_t, lower, upper });
    }
    if density.cut.is_some() {
        return Err(Error::InvalidParameter("profile is already truncated".into()));
    }
    let k = density.grid.partition_point(|&x| x < x_t);
    let mut values = density.values.clone();
    values[..k].iter_mut().for_each(|v| *v = 0.0);
    let partial_mass = if k == 0 {
        0.0
    } else {
        0.5 * (density.values[k - 1] + density.values[k]) * (density.grid[k] - x_t)
    };
    let mut out = DensityProfile {
        grid: density.grid.clone(),
        values,
        time: density.time,
        total_mass: 0.0,
        cut: Some(Cut {
            position: x_t,
            partial_mass,
        }),
    };
    out.total_mass = out.running_mass()[out.len() - 1];
    Ok(out)
}

/// Gaussian blur of width `delta_vx * flight_time`. Every source node spreads
/// its mass with a kernel renormalized over the window, so mass is conserved.
pub fn smooth_velocity_dispersion(
    density: &DensityProfile,
    delta_vx: f64,
    flight_time: f64,
) -> Result<DensityProfile> {
    if !(delta_vx >= 0.0 && flight_time >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "velocity spread and flight time must be nonnegative, got {delta_vx} and {flight_time}"
        )));
    }
    let sigma = delta_vx * flight_time;
    if sigma == 0.0 {
        return Ok(density.clone());
    }
    let n = density.len();
    let window = density.grid[n - 1] - density.grid[0];
    if sigma > window / 4.0 {
        return Err(Error::SmoothingTooWide { width: sigma, window });
    }
    let grid = &density.grid;
    let mut weights = vec![0.0; n];
    for j in 0..n - 1 {
        let half = 0.5 * (grid[j + 1] - grid[j]);
        weights[j] += half;
        weights[j + 1] += half;
    }
    let reach = 10.0 * sigma;
    let masses = density.node_masses();
    let mut out = vec![0.0; n];
    let kernel = |d: f64| (-0.5 * (d / sigma) * (d / sigma)).exp();
    for j in 0..n {
        if masses[j] == 0.0 {
            continue;
        }
        let lo = grid.partition_point(|&x| x < grid[j] - reach);
        let hi = grid.partition_point(|&x| x <= grid[j] + reach);
        let z: f64 = (lo..hi).map(|i| weights[i] * kernel(grid[i] - grid[j])).sum();
        for i in lo..hi {
            out[i] += masses[j] * kernel(grid[i] - grid[j]) / z;
        }
    }
    let mut smoothed = DensityProfile::new(grid.clone(), out, density.time)?;
    // trapezoid of the spread masses equals the input mass up to rounding
    smoothed.total_mass = trapezoid(&smoothed.grid, &smoothed.values);
    Ok(smoothed)
}

/// Local maxima whose topographic prominence exceeds
/// `prominence_fraction * global maximum`. Plateaus count once; window edges
/// are never peaks.
pub fn peak_count(density: &DensityProfile, prominence_fraction: f64) -> usize {
    find_peaks(&density.values, prominence_fraction).len()
}

/// Indices (left edge of plateaus) of the prominent peaks.
pub fn find_peaks(values: &[f64], prominence_fraction: f64) -> Vec<usize> {
    let n = values.len();
    let global = values.iter().copied().fold(0.0, f64::max);
    if n < 3 || global <= 0.0 {
        return Vec::new();
    }
    let threshold = prominence_fraction * global;
    let mut peaks = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if values[i - 1] < values[i] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] && prominence(values, i, j) > threshold {
                peaks.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

fn prominence(values: &[f64], left: usize, right: usize) -> f64 {
    let h = values[left];
    let mut left_min = h;
    for k in (0..left).rev() {
        if values[k] > h {
            break;
        }
        left_min = left_min.min(values[k]);
    }
    let mut right_min = h;
    for &v in &values[right + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// `∫ | |a+b|² - |a|² - |b|² | dx / ∫ |a+b|² dx` on a shared grid.
pub fn interference_fraction(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::InvalidParameter("fields live on different grids".into()));
    }
    let cross: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(u, v)| ((u + v).norm_sqr() - u.norm_sqr() - v.norm_sqr()).abs())
        .collect();
    let total: Vec<f64> = a.values.iter().zip(&b.values).map(|(u, v)| (u + v).norm_sqr()).collect();
    let denom = trapezoid(&a.grid, &total);
    if denom <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(trapezoid(&a.grid, &cross) / denom)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use proptest::prelude::*;

    use super::*;
    use crate::propagator::uniform_grid;

    fn gaussian_mixture(grid: &[f64], parts: &[(f64, f64, f64)]) -> Vec<f64> {
        grid.iter()
            .map(|&x| {
                parts
                    .iter()
                    .map(|&(w, c, s)| w * (-0.5 * ((x - c) / s).powi(2)).exp())
                    .sum()
            })
            .collect()
    }

    fn profile(grid: Vec<f64>, values: Vec<f64>) -> DensityProfile {
        DensityProfile::new(grid, values, 0.0).unwrap()
    }

    #[test]
    fn born_density_of_unit_gaussian() {
        use crate::physics::{free_gaussian, BeamSpec, PhysicalSetup};
        let s = PhysicalSetup::default();
        let b = BeamSpec::default();
        let grid = uniform_grid(12e-3, 8001);
        let values: Vec<_> = grid.iter().map(|&x| free_gaussian(&s, &b, x, 0.0)).collect();
        let field = ComplexField::new(grid.clone(), values.clone(), 0.0).unwrap();
        let rho = born_density(&field).unwrap();
        assert!((rho.total_mass - 1.0).abs() < 1e-8);

        let rot = Complex64::from_polar(1.0, 0.77);
        let rotated = ComplexField::new(grid, values.iter().map(|v| v * rot).collect(), 0.0).unwrap();
        let rho2 = born_density(&rotated).unwrap();
        for (p, q) in rho.values.iter().zip(&rho2.values) {
            assert!((p - q).abs() <= 1e-14 * p.max(1e-300));
        }
    }

    #[test]
    fn zero_field_is_rejected() {
        let field = ComplexField::new(vec![0.0, 1.0], vec![Complex64::new(0.0, 0.0); 2], 0.0).unwrap();
        assert!(matches!(born_density(&field), Err(Error::ZeroMass)));
    }

    #[test]
    fn symmetric_profile_has_half_at_center() {
        let grid = uniform_grid(10.0, 2001);
        let rho = profile(grid.clone(), gaussian_mixture(&grid, &[(1.0, 0.0, 1.0)]));
        let f = cumulative(&rho, 1e-6).unwrap();
        assert!((f.values[1000] - 0.5).abs() < 1e-9);
        assert_eq!(f.values[0], 0.0);
        assert_eq!(*f.values.last().unwrap(), 1.0);
        assert!(median(&f).abs() < grid[1] - grid[0]);
    }

    #[test]
    fn uniform_density_cdf_is_identity() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let rho = profile(grid.clone(), vec![1.0; 101]);
        let f = cumulative(&rho, 2.0).unwrap();
        for (x, v) in grid.iter().zip(&f.values) {
            assert!((x - v).abs() < 1e-12);
        }
        assert!((median(&f) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_bumps_put_median_in_the_gap() {
        // brute force: F(0) of two equal narrow Gaussians at +/- 3 is 1/2
        let grid = uniform_grid(6.0, 1201);
        let rho = profile(grid.clone(), gaussian_mixture(&grid, &[(1.0, -3.0, 0.2), (1.0, 3.0, 0.2)]));
        let f = cumulative(&rho, 1e-6).unwrap();
        assert!((f.values[600] - 0.5).abs() < 1e-12);
        let m = median(&f);
        assert!(m.abs() < 1e-9, "{m}");
    }

    #[test]
    fn exact_zero_gap_resolves_to_midpoint() {
        let grid: Vec<f64> = (0..=20).map(f64::from).collect();
        let mut values = vec![0.0; 21];
        for i in [1usize, 2, 3, 15, 16, 17] {
            values[i] = 1.0;
        }
        let rho = profile(grid, values);
        let f = cumulative(&rho, 2.0).unwrap();
        // F == 1/2 on nodes 4..=14
        assert!((median(&f) - 9.0).abs() < 1e-12);
        let cut = truncate_at_median(&rho, median(&f)).unwrap();
        assert!((cut.total_mass - 0.5 * rho.total_mass).abs() < 1e-12);
    }

    #[test]
    fn window_guard() {
        let grid = uniform_grid(1.0, 101);
        let rho = profile(grid.clone(), gaussian_mixture(&grid, &[(1.0, 0.0, 1.0)]));
        match cumulative(&rho, 1e-6) {
            Err(Error::WindowTooSmall { edge_ratio, .. }) => {
                assert!((edge_ratio - (-0.5f64).exp()).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert!(cumulative(&rho, 0.7).is_ok());
    }

    #[test]
    fn truncating_a_symmetric_gaussian_keeps_the_right_half() {
        let grid = uniform_grid(8.0, 1601);
        let rho = profile(grid.clone(), gaussian_mixture(&grid, &[(2.0, 0.0, 1.0)]));
        let cut = truncate_at_median(&rho, 0.0).unwrap();
        assert!(cut.values[..800].iter().all(|&v| v == 0.0));
        assert_eq!(&cut.values[800..], &rho.values[800..]);
        assert!((cut.total_mass / rho.total_mass - 0.5).abs() < 1e-6);
        assert!(truncate_at_median(&rho, 9.0).is_err());
    }

    #[test]
    fn smoothing_identity_and_mass() {
        let grid = uniform_grid(5e-3, 1001);
        let rho = profile(grid.clone(), gaussian_mixture(&grid, &[(1.0, 4.9e-3, 2e-4), (0.5, -1e-3, 1e-4)]));
        assert_eq!(smooth_velocity_dispersion(&rho, 0.0, 1.0).unwrap(), rho);
        let sm = smooth_velocity_dispersion(&rho, 0.01, 0.01).unwrap();
        assert!((sm.total_mass / rho.total_mass - 1.0).abs() < 1e-6);
        assert!(sm.peak() < rho.peak());
        assert!(matches!(
            smooth_velocity_dispersion(&rho, 1.0, 1.0),
            Err(Error::SmoothingTooWide { .. })
        ));

        let cut = truncate_at_median(&rho, 1.3e-4).unwrap();
        let sm = smooth_velocity_dispersion(&cut, 0.01, 0.01).unwrap();
        assert!((sm.total_mass / cut.total_mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn peak_counting() {
        let grid = uniform_grid(20.0, 4001);
        let one = profile(grid.clone(), gaussian_mixture(&grid, &[(1.0, 0.0, 1.0)]));
        assert_eq!(peak_count(&one, 0.1), 1);
        let two = profile(grid.clone(), gaussian_mixture(&grid, &[(1.0, -4.0, 1.0), (1.0, 4.0, 1.0)]));
        assert_eq!(peak_count(&two, 0.1), 2);
        // shoulder with low prominence
        let shoulder = profile(grid.clone(), gaussian_mixture(&grid, &[(1.0, -1.0, 1.0), (0.6, 1.2, 0.7)]));
        assert!(peak_count(&shoulder, 0.1) <= 2);
        assert_eq!(find_peaks(&[0.0, 1.0, 1.0, 1.0, 0.0, 2.0, 0.0], 0.1), vec![1, 5]);
        assert_eq!(find_peaks(&[3.0, 2.0, 1.0], 0.1), Vec::<usize>::new());
        assert_eq!(find_peaks(&[0.0; 5], 0.1), Vec::<usize>::new());
    }

    fn mixture_strategy() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((0.1f64..2.0, -3.0f64..3.0, 0.2f64..1.0), 1..5)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn median_cut_halves_mass(parts in mixture_strategy()) {
            let grid = uniform_grid(14.0, 2801);
            let rho = profile(grid.clone(), gaussian_mixture(&grid, &parts));
            let m = median(&cumulative(&rho, 1e-4).unwrap());
            let cut = truncate_at_median(&rho, m).unwrap();
            prop_assert!((cut.total_mass / rho.total_mass - 0.5).abs() < 1e-6);
            let k = grid.partition_point(|&x| x < m);
            prop_assert!(cut.values[..k].iter().all(|&v| v == 0.0));
        }

        #[test]
        fn median_is_translation_equivariant(parts in mixture_strategy(), shift in -2.0f64..2.0) {
            let grid = uniform_grid(14.0, 2801);
            let dx = grid[1] - grid[0];
            let moved: Vec<_> = parts.iter().map(|&(w, c, s)| (w, c + shift, s)).collect();
            let m0 = median(&cumulative(&profile(grid.clone(), gaussian_mixture(&grid, &parts)), 1e-4).unwrap());
            let m1 = median(&cumulative(&profile(grid.clone(), gaussian_mixture(&grid, &moved)), 1e-4).unwrap());
            prop_assert!((m1 - m0 - shift).abs() < dx);
        }

        #[test]
        fn cumulative_is_scale_invariant(parts in mixture_strategy(), c in 1e-3f64..1e3) {
            let grid = uniform_grid(10.0, 501);
            let values = gaussian_mixture(&grid, &parts);
            let scaled: Vec<_> = values.iter().map(|v| v * c).collect();
            let f0 = cumulative(&profile(grid.clone(), values), 1e-4).unwrap();
            let f1 = cumulative(&profile(grid, scaled), 1e-4).unwrap();
            for (a, b) in f0.values.iter().zip(&f1.values) {
                prop_assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
