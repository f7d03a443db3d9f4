//! Output directory bookkeeping and the run artifacts written into it.

use std::path::{Path, PathBuf};

use meltpool_core::grid::TemperatureField;
use meltpool_core::heat_source::ScanPath;
use meltpool_core::metrics::MeltPoolMetrics;
use meltpool_core::solver::SolveReport;

use crate::error::{IoContext, Result};
use crate::formats::{self, csv_io};

/// An output directory that remembers every file written into it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registers `rel` and returns its full path, creating parent folders.
    pub fn file(&mut self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).context(|| format!("creating {}", dir.display()))?;
        }
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
        Ok(path)
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<PathBuf> {
        let path = self.file(rel)?;
        std::fs::write(&path, text).context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Relative paths of everything written so far, in write order.
    pub fn files(&self) -> &[String] {
        &self.files
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_io(path, e))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_io(path, e))?;
    }
    w.flush().context(|| format!("writing {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Snapshot store: `snapshots/snapshot_NNNN.vtk` per kept state plus
/// `snapshots/manifest.csv` listing index, time and beam travel.
pub fn write_snapshots(
    out: &mut OutputDir,
    snapshots: &[TemperatureField],
    path: &ScanPath,
    vtk: bool,
    samples: bool,
) -> Result<()> {
    let mut rows = Vec::with_capacity(snapshots.len());
    for (i, s) in snapshots.iter().enumerate() {
        let mut files = Vec::new();
        if vtk {
            let rel = format!("snapshots/snapshot_{i:04}.vtk");
            formats::write_vtk(&out.file(&rel)?, s)?;
            files.push(rel);
        }
        if samples {
            let rel = format!("snapshots/snapshot_{i:04}.csv");
            formats::write_samples_csv(&out.file(&rel)?, s)?;
            files.push(rel);
        }
        rows.push(vec![
            i.to_string(),
            s.time().to_string(),
            path.travel(s.time()).to_string(),
            files.join(";"),
        ]);
    }
    let manifest = out.file("snapshots/manifest.csv")?;
    write_rows(&manifest, &["snapshot", "time_s", "travel_mm", "files"], rows)
}

/// Per-step solver diagnostics.
pub fn write_solve_report(out: &mut OutputDir, report: &SolveReport) -> Result<()> {
    let path = out.file("solve_report.csv")?;
    let rows = report.steps.iter().enumerate().map(|(i, s)| {
        vec![
            (i + 1).to_string(),
            s.time.to_string(),
            s.dt.to_string(),
            s.newton_iterations.to_string(),
            s.linear_iterations.to_string(),
            s.residual.to_string(),
            s.energy_in.to_string(),
            s.energy_radiated.to_string(),
        ]
    });
    write_rows(
        &path,
        &[
            "step",
            "time_s",
            "dt_s",
            "newton_iterations",
            "linear_iterations",
            "relative_residual",
            "energy_in_j",
            "energy_radiated_j",
        ],
        rows,
    )
}

/// Energy ledger totals of a run.
pub fn write_energy_summary(out: &mut OutputDir, report: &SolveReport, residual: f64) -> Result<()> {
    let path = out.file("energy.csv")?;
    write_rows(
        &path,
        &["energy_in_j", "energy_radiated_j", "relative_residual", "steps", "newton_iterations", "wall_time_s"],
        [vec![
            report.energy_in().to_string(),
            report.energy_radiated().to_string(),
            residual.to_string(),
            report.steps.len().to_string(),
            report.total_newton_iterations().to_string(),
            opt(report.wall_time),
        ]],
    )
}

/// One measured (or skipped) snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub snapshot: usize,
    pub time: f64,
    pub travel: f64,
    pub result: meltpool_core::Result<MeltPoolMetrics>,
}

/// `metrics.csv`: one row per snapshot; unmeasurable snapshots keep the
/// reason in the `status` column.
pub fn write_metrics(out: &mut OutputDir, rows: &[MetricRow]) -> Result<()> {
    let path = out.file("metrics.csv")?;
    let rows = rows.iter().map(|r| {
        let mut v = vec![r.snapshot.to_string(), r.time.to_string(), r.travel.to_string()];
        match &r.result {
            Ok(m) => {
                v.extend([
                    m.length.to_string(),
                    m.width.to_string(),
                    m.depth.to_string(),
                    opt(m.cooling_rate),
                ]);
                v.push(if m.empty { "empty".into() } else { "ok".into() });
            }
            Err(e) => {
                v.extend([String::new(), String::new(), String::new(), String::new()]);
                v.push(e.to_string());
            }
        }
        v
    });
    write_rows(
        &path,
        &["snapshot", "time_s", "travel_mm", "length_um", "width_um", "depth_um", "cooling_rate_c_s", "status"],
        rows,
    )
}

/// Cross-section polylines, `(transverse, y)` in mm.
pub fn write_contours(out: &mut OutputDir, rel: &str, contours: &[Vec<[f64; 2]>]) -> Result<()> {
    let path = out.file(rel)?;
    let rows = contours.iter().enumerate().flat_map(|(c, line)| {
        line.iter()
            .enumerate()
            .map(move |(i, p)| vec![c.to_string(), i.to_string(), p[0].to_string(), p[1].to_string()])
    });
    write_rows(&path, &["polyline", "point", "transverse_mm", "y_mm"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_lists_each_file_once() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("run")).unwrap();
        out.write_text("a.txt", "1").unwrap();
        out.write_text("sub/b.txt", "2").unwrap();
        out.write_text("a.txt", "3").unwrap();
        assert_eq!(out.files(), &["a.txt".to_string(), "sub/b.txt".to_string()]);
        assert_eq!(std::fs::read_to_string(out.root().join("a.txt")).unwrap(), "3");
    }
}
