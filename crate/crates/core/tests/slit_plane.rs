//! Mass bookkeeping of the masked beam right behind the slits.

use slitwave_core::aperture::{build_mask, Selection};
use slitwave_core::config::ExperimentConfig;
use slitwave_core::physics::free_gaussian;

/// Composite Simpson of `|psi(x, t1)|^2` over one interval.
fn interval_mass(config: &ExperimentConfig, lower: f64, upper: f64, panels: usize) -> f64 {
    let h = (upper - lower) / panels as f64;
    let rho = |x: f64| free_gaussian(&config.setup, &config.beam, x, config.t1()).norm_sqr();
    let mut acc = rho(lower) + rho(upper);
    for k in 1..panels {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * rho(lower + h * k as f64);
    }
    acc * h / 3.0
}

#[test]
fn median_right_behind_the_slits_sits_just_inside_slit_a() {
    let config = ExperimentConfig::default();
    let a = build_mask(&config.geometry, Selection::AOnly).unwrap();
    let b = build_mask(&config.geometry, Selection::BOnly).unwrap();
    let slit = a.intervals()[0];
    let mass_a = interval_mass(&config, slit.lower, slit.upper, 2000);
    let mass_b: f64 = b.intervals().iter().map(|iv| interval_mass(&config, iv.lower, iv.upper, 8)).sum();

    // 40-digit erf values: mass_a = 0.026458652323126994, mass_b / mass_a - 1 = -1.4645167e-3
    assert!((mass_a - 0.026_458_652_323_126_994).abs() < 1e-14);
    assert!((mass_b / mass_a - 1.0 + 1.464_516_702_739_163e-3).abs() < 1e-10);

    // grating B is farther off-axis, so it carries slightly less than half
    let target = 0.5 * (mass_a + mass_b) - mass_b;
    let (mut lo, mut hi) = (slit.lower, slit.upper);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if interval_mass(&config, slit.lower, mid, 200) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_t = 0.5 * (lo + hi);
    // reference 100.07300944547785 um
    assert!((x_t - 100.073_009_445_477_85e-6).abs() < 1e-12, "{x_t:e}");
    assert!(x_t > slit.lower);
}
