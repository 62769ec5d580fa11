//! CSV profiles and SVG figures. Every file carries the provenance of the
//! result it was made from.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use plotters::prelude::*;
use plotters::style::colors::colormaps::ViridisRGB;

use crate::density::{peak_count, DensityProfile};
use crate::error::{Error, Result};
use crate::experiment::ScenarioResult;

pub const CSV_HEADER: &str = "x_m,psi_re,psi_im,born_density,reported_density";

/// Largest number of columns in a heatmap; finer grids are bin-averaged.
pub const HEATMAP_COLUMNS: usize = 400;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Provenance as `key = value` lines followed by the config document.
pub fn provenance_lines(result: &ScenarioResult) -> Vec<String> {
    let p = &result.provenance;
    let d = &p.diagnostics;
    let mut lines = vec![
        "slitwave detector profile".to_string(),
        format!("assumption = {}", p.assumption),
        format!("y_m = {:e}", p.y),
        format!("t1_s = {:e}", p.t1),
        format!("time_s = {:e}", p.time),
        format!("config_sha256 = {}", p.config_hash),
        format!("geometry_convention = {}", p.geometry_convention),
        format!("beam_width_convention = {}", p.beam_width_convention.describe()),
        format!("amplitude_tolerance = {:e}", p.propagator.amplitude_tolerance),
        format!("max_poly_degree = {}", p.propagator.max_degree),
        format!("max_subdivisions = {}", p.propagator.max_subdivisions),
        format!("tail_tolerance = {:e}", p.tail_tolerance),
        format!("prominence_fraction = {:e}", p.prominence_fraction),
        format!("delta_vx_m_per_s = {:e}", p.delta_vx),
        format!("method = {:?}", d.method).to_lowercase(),
        format!("segments = {}", d.segments),
        format!("max_amplitude_error = {:e}", d.max_amplitude_error),
        match d.worst_interval {
            Some((l, u)) => format!("worst_interval_m = [{l:e}, {u:e}]"),
            None => "worst_interval_m = none".to_string(),
        },
        format!("fallback_evaluations = {}", d.fallback_evaluations),
        match result.median_x {
            Some(x) => format!("median_x_m = {x:e}"),
            None => "median_x_m = none".to_string(),
        },
        format!("born_mass = {:e}", result.born_profile.total_mass),
        format!("reported_mass = {:e}", result.reported_profile.total_mass),
        format!(
            "reported_peak_count = {}",
            peak_count(&result.reported_profile, p.prominence_fraction)
        ),
        "config:".to_string(),
    ];
    lines.extend(p.config_toml.lines().map(|l| format!("  {l}")));
    lines
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::new(file))
}

/// Writes the profile CSV to `path`, returning the number of lines written.
pub fn write_profile_csv(result: &ScenarioResult, path: &Path) -> Result<usize> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    let mut lines = 0;
    for l in provenance_lines(result) {
        writeln!(out, "# {l}").map_err(io)?;
        lines += 1;
    }
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    lines += 1;
    let f = &result.detector_field;
    for i in 0..f.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(f.grid[i]),
            num(f.values[i].re),
            num(f.values[i].im),
            num(result.born_profile.values[i]),
            num(result.reported_profile.values[i]),
        )
        .map_err(io)?;
        lines += 1;
    }
    out.flush().map_err(io)?;
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    /// Comment lines without the leading `# `.
    pub provenance: Vec<String>,
    pub x: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub born: Vec<f64>,
    pub reported: Vec<f64>,
}

impl ProfileTable {
    /// Value of a `key = value` provenance line.
    pub fn provenance_value(&self, key: &str) -> Option<&str> {
        self.provenance.iter().find_map(|l| {
            let (k, v) = l.split_once(" = ")?;
            (k == key).then_some(v)
        })
    }
}

pub fn read_profile_csv(path: &Path) -> Result<ProfileTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = ProfileTable {
        provenance: Vec::new(),
        x: Vec::new(),
        psi: Vec::new(),
        born: Vec::new(),
        reported: Vec::new(),
    };
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        if !header_seen {
            if let Some(c) = line.strip_prefix('#') {
                table.provenance.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if line != CSV_HEADER {
                return Err(Error::Csv(format!("line {}: expected header `{CSV_HEADER}`", i + 1)));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Csv(format!("line {}: {e}", i + 1)))?;
        if fields.len() != 5 {
            return Err(Error::Csv(format!("line {}: expected 5 fields, got {}", i + 1, fields.len())));
        }
        table.x.push(fields[0]);
        table.psi.push(Complex64::new(fields[1], fields[2]));
        table.born.push(fields[3]);
        table.reported.push(fields[4]);
    }
    if !header_seen {
        return Err(Error::Csv("missing header".into()));
    }
    Ok(table)
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

/// Prepends the provenance to a rendered SVG as an XML comment.
fn stamp_svg(path: &Path, provenance: &[String]) -> Result<()> {
    let svg = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::from("<!--\n");
    for l in provenance {
        out.push_str(&l.replace("--", "- -"));
        out.push('\n');
    }
    out.push_str("-->\n");
    out.push_str(&svg);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn ensure_dir(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn profile_series(p: &DensityProfile) -> Vec<(f64, f64)> {
    p.grid.iter().zip(&p.values).map(|(&x, &v)| (x * 1e3, v)).collect()
}

/// Line plot of the reported density (and the Born density when they differ).
pub fn render_profile(result: &ScenarioResult, path: &Path) -> Result<()> {
    ensure_dir(path)?;
    let born = &result.born_profile;
    let reported = &result.reported_profile;
    let x0 = born.grid[0] * 1e3;
    let x1 = born.grid[born.len() - 1] * 1e3;
    let top = born.peak().max(reported.peak()) * 1.05;
    {
        let root = SVGBackend::new(path, (960, 540)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let title = format!(
            "{} assumption, y = {:.1} cm",
            result.assumption,
            result.y() * 100.0
        );
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(x0..x1, 0.0..top)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("x (mm)")
            .y_desc("density (1/m)")
            .y_label_formatter(&|v| format!("{v:.1e}"))
            .draw()
            .map_err(plot_err)?;
        if reported != born {
            chart
                .draw_series(LineSeries::new(profile_series(born), RGBColor(170, 170, 170)))
                .map_err(plot_err)?
                .label("Born |psi|^2")
                .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], RGBColor(170, 170, 170)));
        }
        chart
            .draw_series(LineSeries::new(profile_series(reported), BLUE))
            .map_err(plot_err)?
            .label(format!("reported ({})", result.assumption))
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
        if let Some(x_t) = result.median_x {
            chart
                .draw_series(LineSeries::new(vec![(x_t * 1e3, 0.0), (x_t * 1e3, top)], RED))
                .map_err(plot_err)?
                .label("median x_t")
                .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], RED));
        }
        chart
            .configure_series_labels()
            .border_style(BLACK)
            .background_style(WHITE.mix(0.8))
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    stamp_svg(path, &provenance_lines(result))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapKind {
    Born,
    Reported,
}

/// Bin-averages `values` into at most `columns` bins of equal node count.
fn bin(values: &[f64], columns: usize) -> Vec<f64> {
    let n = values.len();
    let cols = columns.min(n);
    (0..cols)
        .map(|c| {
            let lo = c * n / cols;
            let hi = (c + 1) * n / cols;
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Longitudinal heatmap, one row per result; returns the row count.
///
/// Rows are normalized to their own maximum so the near-field and far-field
/// patterns share one colour scale.
pub fn render_heatmap(results: &[ScenarioResult], kind: HeatmapKind, path: &Path) -> Result<usize> {
    let first = results
        .first()
        .ok_or_else(|| Error::InvalidParameter("heatmap needs at least one result".into()))?;
    if results.iter().any(|r| r.born_profile.grid != first.born_profile.grid) {
        return Err(Error::InvalidParameter("heatmap rows must share one grid".into()));
    }
    ensure_dir(path)?;
    let grid = &first.born_profile.grid;
    let x0 = grid[0] * 1e3;
    let x1 = grid[grid.len() - 1] * 1e3;
    let ys: Vec<f64> = results.iter().map(|r| r.y() * 100.0).collect();
    // row boundaries halfway between positions
    let mut edges = Vec::with_capacity(ys.len() + 1);
    let first_gap = if ys.len() > 1 { ys[1] - ys[0] } else { 1.0 };
    edges.push(ys[0] - 0.5 * first_gap);
    for w in ys.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    let last_gap = if ys.len() > 1 { ys[ys.len() - 1] - ys[ys.len() - 2] } else { 1.0 };
    edges.push(ys[ys.len() - 1] + 0.5 * last_gap);

    let label = match kind {
        HeatmapKind::Born => "Born |psi|^2".to_string(),
        HeatmapKind::Reported => format!("{} density", first.assumption),
    };
    {
        let root = SVGBackend::new(path, (960, 720)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("{label}, row-normalized"), ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, edges[0]..edges[edges.len() - 1])
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .disable_mesh()
            .x_desc("x (mm)")
            .y_desc("y behind slits (cm)")
            .draw()
            .map_err(plot_err)?;
        for (row, r) in results.iter().enumerate() {
            let values = match kind {
                HeatmapKind::Born => &r.born_profile.values,
                HeatmapKind::Reported => &r.reported_profile.values,
            };
            let cells = bin(values, HEATMAP_COLUMNS);
            let max = cells.iter().copied().fold(0.0, f64::max);
            let width = (x1 - x0) / cells.len() as f64;
            let (lo, hi) = (edges[row], edges[row + 1]);
            chart
                .draw_series(cells.iter().enumerate().map(|(c, &v)| {
                    let h = if max > 0.0 { v / max } else { 0.0 };
                    let colour = ViridisRGB.get_color(h as f32);
                    let xa = x0 + width * c as f64;
                    Rectangle::new([(xa, lo), (xa + width, hi)], colour.filled())
                }))
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
    }
    let mut stamp = provenance_lines(first);
    stamp.push(format!("rows = {}", results.len()));
    stamp.push(format!(
        "y_m = [{}]",
        results.iter().map(|r| r.y().to_string()).collect::<Vec<_>>().join(", ")
    ));
    stamp_svg(path, &stamp)?;
    Ok(results.len())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RenderSummary {
    pub files: Vec<PathBuf>,
    pub heatmap_rows: Option<usize>,
}

/// Profile plots when all results sit at one distance, otherwise Born and
/// reported heatmaps of the sweep.
pub fn render_plots(results: &[ScenarioResult], dir: &Path) -> Result<RenderSummary> {
    let mut summary = RenderSummary::default();
    let Some(first) = results.first() else {
        return Ok(summary);
    };
    let single_distance = results.iter().all(|r| r.y() == first.y());
    if single_distance {
        for r in results {
            let path = dir.join(format!("profile_{}.svg", r.assumption));
            render_profile(r, &path)?;
            summary.files.push(path);
        }
    } else {
        let born = dir.join("heatmap_born.svg");
        summary.heatmap_rows = Some(render_heatmap(results, HeatmapKind::Born, &born)?);
        summary.files.push(born);
        let reported = dir.join(format!("heatmap_{}.svg", first.assumption));
        render_heatmap(results, HeatmapKind::Reported, &reported)?;
        summary.files.push(reported);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_averages_and_keeps_all_nodes() {
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(bin(&v, 5), vec![0.5, 2.5, 4.5, 6.5, 8.5]);
        assert_eq!(bin(&v, 20).len(), 10);
        let b = bin(&v, 3);
        assert_eq!(b.len(), 3);
        assert_eq!(b[0], 1.0);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, -0.0, 1.7976931348623157e308] {
            let s = num(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
