use std::fs;
use std::path::{Path, PathBuf};

use super::run::ExperimentReport;
use crate::error::{LabError, Result};

fn unit_of(column: &str) -> &'static str {
    match column {
        "h" | "radius" | "r" => "length",
        "k" => "level",
        "epsilon" => "truncation parameter",
        "energy" | "w12_distance" => "energy norm",
        _ => "dimensionless",
    }
}

/// Renders one series of `report` as whitespace-separated columns with a `#` header.
pub fn plot_data(report: &ExperimentReport, series: &str) -> Result<String> {
    let s = report.series.get(series).ok_or_else(|| LabError::UnknownSeries(format!(
            "`{series}` (available: {})",
            report.series.keys().cloned().collect::<Vec<_>>().join(", ")
        )))?;
    let mut out = String::new();
    out.push_str(&format!("# series: {series}\n"));
    out.push_str(&format!("# source: {} experiment, {}\n", report.experiment, report.version));
    out.push_str(&format!("# columns: {}\n", s.columns.join(" ")));
    let units: Vec<&str> = s.columns.iter().map(|c| unit_of(c)).collect();
    out.push_str(&format!("# units: {}\n", units.join(" | ")));
    for row in &s.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Writes `<dir>/<series>.dat` and returns its path.
pub fn emit_plot_data(report: &ExperimentReport, series: &str, dir: &Path) -> Result<PathBuf> {
    let text = plot_data(report, series)?;
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.dat", series.replace(['/', ':'], "_")));
    fs::write(&path, text)?;
    Ok(path)
}

/// Reads a `report.json` and writes the requested series next to it under `plot/`,
/// or to `out` when given.
pub fn plot_from_file(report_path: &Path, series: &str, out: Option<&Path>) -> Result<PathBuf> {
    let report = ExperimentReport::from_json(&fs::read_to_string(report_path)?)?;
    match out {
        Some(p) => {
            let text = plot_data(&report, series)?;
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, text)?;
            Ok(p.to_path_buf())
        }
        None => {
            let dir = report_path.parent().unwrap_or(Path::new(".")).join("plot");
            emit_plot_data(&report, series, &dir)
        }
    }
}
