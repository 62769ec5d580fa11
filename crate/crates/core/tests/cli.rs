use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_slitwave");

const SMALL: &str = "[geometry]\ngrating_count = 40\n[detector]\npoints = 401\n[run]\nsweep_points = 5\n";

fn slitwave(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(BIN).args(args).current_dir(dir).output().unwrap()
}

#[test]
fn run_writes_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let out = slitwave(&["run", "--config", "c.toml", "--assumption", "alternative", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/profile_alternative.csv").exists());
    assert!(dir.path().join("o/profile_alternative.svg").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("median"));
}

#[test]
fn compare_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let out = slitwave(&["compare", "--config", "c.toml", "--out", "o", "--seedless"], dir.path());
    assert!(out.status.success());
    for a in ["usual", "classical", "alternative"] {
        assert!(dir.path().join(format!("o/profile_{a}.csv")).exists());
    }
    let out = slitwave(&["sweep", "--config", "c.toml", "--assumption", "alternative", "--out", "o"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("heatmap rows: 5"), "{stdout}");
    assert!(dir.path().join("o/sweep_alternative/heatmap_alternative.svg").exists());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "geometry.slit_a_width_um = -1\n").unwrap();
    let out = slitwave(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("geometry.slit_a_width_um") && stderr.contains("line 1"), "{stderr}");

    let out = slitwave(&["run", "--assumption", "bohmian"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = slitwave(&["run", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = slitwave(&["run", "--config", "c.toml", "--out", "blocker"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // window far too narrow for the diffraction pattern
    fs::write(dir.path().join("c.toml"), "[detector]\nhalfwidth_mm = 0.05\npoints = 101\n").unwrap();
    let out = slitwave(&["run", "--config", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window too small"));
}

#[test]
fn oracle_passes_on_slit_a_at_fine_step() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "[geometry]\ngrating_count = 10\n[run]\noracle_phase_step_rad = 0.01\noracle_points = 5\n",
    )
    .unwrap();
    let out = slitwave(&["oracle", "--config", "c.toml", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("o/oracle_a_and_b.csv").exists());
}
