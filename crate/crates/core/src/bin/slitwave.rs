use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slitwave_core::aperture::{build_mask, Selection};
use slitwave_core::config::{parse_config, Assumption, ExperimentConfig};
use slitwave_core::density::find_peaks;
use slitwave_core::experiment::{oracle_check, run_scenario, sweep_longitudinal, ScenarioResult};
use slitwave_core::output::{render_plots, write_profile_csv};
use slitwave_core::physics::de_broglie_wavelength;
use slitwave_core::{Error, Result};

/// Largest accepted relative field error in `oracle`.
const ORACLE_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "slitwave", version, about = "Gaussian matter wave through slit A and grating B")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One scenario at the detector.
    Run(Common),
    /// Longitudinal evolution between the slit plane and the detector.
    Sweep(Common),
    /// Cross-check the propagator against brute-force quadrature.
    Oracle(Common),
    /// All three assumptions at the detector.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply to missing keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// usual, classical or alternative (overrides the config).
    #[arg(long, value_name = "NAME")]
    assumption: Option<String>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (overrides the config; 0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Accepted for compatibility; every run is deterministic.
    #[arg(long)]
    seedless: bool,
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let text = match &common.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        None => String::new(),
    };
    let mut config = parse_config(&text)?;
    if let Some(name) = &common.assumption {
        config = config.with_assumption(name.parse::<Assumption>()?);
    }
    if let Some(w) = common.workers {
        config = config.with_workers(w);
    }
    Ok(config)
}

fn summarize(r: &ScenarioResult, prominence: f64) {
    let peaks: Vec<String> = find_peaks(&r.reported_profile.values, prominence)
        .into_iter()
        .map(|i| format!("{:.1}", r.reported_profile.grid[i] * 1e6))
        .collect();
    println!(
        "{:<11} y = {:.4} m  peaks = {:>2}  at [{}] um  mass = {:.6e}{}  ({:.2} s)",
        r.assumption.name(),
        r.y(),
        peaks.len(),
        peaks.join(", "),
        r.reported_profile.total_mass,
        r.median_x.map(|x| format!("  median = {:.3} um", x * 1e6)).unwrap_or_default(),
        r.provenance.elapsed.as_secs_f64(),
    );
}

fn write_results(results: &[ScenarioResult], dir: &Path, stem: impl Fn(&ScenarioResult) -> String) -> Result<()> {
    for r in results {
        let path = dir.join(format!("{}.csv", stem(r)));
        write_profile_csv(r, &path)?;
    }
    let summary = render_plots(results, dir)?;
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    if let Some(rows) = summary.heatmap_rows {
        println!("heatmap rows: {rows}");
    }
    Ok(())
}

fn run(common: &Common) -> Result<()> {
    let config = load(common)?;
    let r = run_scenario(&config)?;
    summarize(&r, config.detector.prominence_fraction);
    write_results(std::slice::from_ref(&r), &common.out, |r| format!("profile_{}", r.assumption))
}

fn sweep(common: &Common) -> Result<()> {
    let config = load(common)?;
    let ys = config.sweep.positions();
    let results = sweep_longitudinal(&config, &ys)?;
    for r in &results {
        summarize(r, config.detector.prominence_fraction);
    }
    let dir = common.out.join(format!("sweep_{}", config.assumption));
    write_results(&results, &dir, |r| format!("y_{:07.4}m", r.y()))
}

fn compare(common: &Common) -> Result<()> {
    let config = load(common)?;
    let results: Vec<ScenarioResult> = Assumption::ALL
        .iter()
        .map(|&a| run_scenario(&config.with_assumption(a)))
        .collect::<Result<_>>()?;
    for r in &results {
        summarize(r, config.detector.prominence_fraction);
    }
    write_results(&results, &common.out, |r| format!("profile_{}", r.assumption))
}

fn oracle(common: &Common) -> Result<()> {
    let config = load(common)?;
    let o = config.oracle;
    println!(
        "lambda = {:.3e} m; {} points in +/-{} mm at y = {} m; oracle phase step {} rad",
        de_broglie_wavelength(&config.setup),
        o.points,
        o.halfwidth * 1e3,
        config.d2,
        o.max_phase_step
    );
    fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    let mut worst: f64 = 0.0;
    for (name, selection) in [("a_only", Selection::AOnly), ("b_only", Selection::BOnly), ("a_and_b", Selection::AAndB)] {
        let mask = build_mask(&config.geometry, selection)?;
        let cmp = oracle_check(&config, &mask, config.d2, o.halfwidth, o.points, o.max_phase_step)?;
        let rel = cmp.relative_error();
        worst = worst.max(rel);
        println!(
            "{name:<8} relative error {rel:.3e}  pointwise max {:.3e}  oracle estimate max {:.3e}",
            cmp.max_pointwise_error(),
            cmp.oracle_error_estimate.iter().copied().fold(0.0, f64::max)
        );
        let mut csv = format!(
            "# oracle comparison, mask {name}, config_sha256 = {}\n\
             x_m,segment_re,segment_im,oracle_re,oracle_im,oracle_error_estimate,oracle_samples\n",
            config.hash()
        );
        for i in 0..cmp.grid.len() {
            csv.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                cmp.grid[i],
                cmp.segments[i].re,
                cmp.segments[i].im,
                cmp.oracle[i].re,
                cmp.oracle[i].im,
                cmp.oracle_error_estimate[i],
                cmp.oracle_samples[i]
            ));
        }
        let path = common.out.join(format!("oracle_{name}.csv"));
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    }
    if worst >= ORACLE_TOLERANCE {
        return Err(Error::Tolerance {
            lower: -o.halfwidth,
            upper: o.halfwidth,
            achieved: worst,
            requested: ORACLE_TOLERANCE,
        }
        .context("segment propagation disagrees with the oracle"));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep(c) => sweep(c),
        Command::Oracle(c) => oracle(c),
        Command::Compare(c) => compare(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

