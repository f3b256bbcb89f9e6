//! Result files: `results.csv`, `summary.json` and `manifest.toml`.

use serde::Serialize;
use std::fs;
use std::path::Path;
use weylab::experiments::{Report, Series};

/// 17 significant digits, `.` decimal separator.
pub fn format_number(x: f64) -> String {
    if x.is_finite() { format!("{x:.16e}") } else { format!("{x}") }
}

pub fn write_series(path: &Path, series: &Series) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    w.write_record(&series.columns).map_err(|e| e.to_string())?;
    for row in &series.rows {
        w.write_record(row.iter().map(|v| format_number(*v))).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

#[derive(Serialize)]
pub struct Summary<'a> {
    #[serde(flatten)]
    pub report: &'a Report,
    pub seed: u64,
    pub wall_time_seconds: f64,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Writes the three files of one run into `dir`.
pub fn write_run(dir: &Path, report: &Report, seed: u64, wall: f64, manifest: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    write_series(&dir.join("results.csv"), &report.series)?;
    write_json(&dir.join("summary.json"), &Summary { report, seed, wall_time_seconds: wall })?;
    write_text(&dir.join("manifest.toml"), manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_full_precision() {
        let x = 1.0 / 3.0;
        let s = format_number(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(format_number(f64::NAN), "NaN");
        assert_eq!(format_number(-0.25), "-2.5000000000000000e-1");
    }
}
