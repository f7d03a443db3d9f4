//! Property curves, laser profiles and field export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use meltpool_core::grid::TemperatureField;
use meltpool_core::heat_source::MeasuredProfile;
use meltpool_core::material::{Extrapolation, PropertyCurve};

use crate::error::{AppError, IoContext, Result};

fn parse_error(path: &Path, message: impl Into<String>) -> AppError {
    AppError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Two-column CSV `temperature (°C), value` with a one-line header. The
/// value unit is whatever the consuming field documents.
pub fn read_property_csv(path: &Path) -> Result<PropertyCurve> {
    let text = std::fs::read_to_string(path).context(|| format!("reading {}", path.display()))?;
    parse_property_csv(&text).map_err(|m| parse_error(path, m))
}

pub fn parse_property_csv(text: &str) -> std::result::Result<PropertyCurve, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut knots = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        if record.len() != 2 {
            return Err(format!("line {}: expected 2 columns, found {}", i + 2, record.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| format!("line {}: `{s}` is not a number", i + 2));
        knots.push((num(&record[0])?, num(&record[1])?));
    }
    PropertyCurve::new(knots, Extrapolation::HoldLast).map_err(|e| e.to_string())
}

pub fn write_property_csv(path: &Path, curve: &PropertyCurve, header: [&str; 2]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(header).map_err(|e| csv_io(path, e))?;
    for (t, v) in curve.knots() {
        w.write_record([t.to_string(), v.to_string()]).map_err(|e| csv_io(path, e))?;
    }
    w.flush().context(|| format!("writing {}", path.display()))
}

pub(crate) fn csv_io(path: &Path, e: csv::Error) -> AppError {
    AppError::io(format!("writing {}", path.display()), e.into())
}

/// Profile file: `nx ny dx dy` on the first line, then `nx·ny`
/// non-negative intensities, row-major with `x` across the track. Any
/// whitespace separates values and the scale is arbitrary.
pub fn read_profile(path: &Path, power: f64, absorptivity: f64) -> Result<MeasuredProfile> {
    let text = std::fs::read_to_string(path).context(|| format!("reading {}", path.display()))?;
    parse_profile(&text, power, absorptivity).map_err(|m| parse_error(path, m))
}

pub fn parse_profile(text: &str, power: f64, absorptivity: f64) -> std::result::Result<MeasuredProfile, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty profile file")?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 {
        return Err("first line must be `nx ny dx dy`".into());
    }
    let nx: usize = h[0].parse().map_err(|_| "nx is not a count")?;
    let ny: usize = h[1].parse().map_err(|_| "ny is not a count")?;
    let dx: f64 = h[2].parse().map_err(|_| "dx is not a number")?;
    let dy: f64 = h[3].parse().map_err(|_| "dy is not a number")?;
    let raw = lines
        .flat_map(str::split_whitespace)
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if raw.len() != nx.saturating_mul(ny) {
        return Err(format!("expected {} intensities, found {}", nx * ny, raw.len()));
    }
    MeasuredProfile::from_intensities(nx, ny, dx, dy, raw, power, absorptivity).map_err(|e| e.to_string())
}

/// Legacy ASCII VTK structured grid with the temperature as point data.
pub fn write_vtk(path: &Path, field: &TemperatureField) -> Result<()> {
    let ctx = || format!("writing {}", path.display());
    let mut w = BufWriter::new(File::create(path).context(ctx)?);
    write_vtk_to(&mut w, field).context(ctx)?;
    w.flush().context(ctx)
}

pub fn write_vtk_to(w: &mut impl Write, field: &TemperatureField) -> std::io::Result<()> {
    let grid = field.grid();
    let [nx, ny, nz] = grid.dims();
    let n = grid.node_count();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "temperature t={:e} s", field.time())?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_GRID")?;
    writeln!(w, "DIMENSIONS {nx} {ny} {nz}")?;
    writeln!(w, "POINTS {n} double")?;
    // VTK wants x fastest, then y, then z, which is the node order.
    for i in 0..n {
        let p = grid.node(i);
        writeln!(w, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "SCALARS temperature double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in field.values() {
        writeln!(w, "{v:e}")?;
    }
    Ok(())
}

/// `x_mm,y_mm,z_mm,temperature_c`, one row per node.
pub fn write_samples_csv(path: &Path, field: &TemperatureField) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["x_mm", "y_mm", "z_mm", "temperature_c"]).map_err(|e| csv_io(path, e))?;
    let grid = field.grid();
    for (i, v) in field.values().iter().enumerate() {
        let p = grid.node(i);
        w.write_record([p[0].to_string(), p[1].to_string(), p[2].to_string(), v.to_string()])
            .map_err(|e| csv_io(path, e))?;
    }
    w.flush().context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use meltpool_core::grid::GradedGrid;
    use std::sync::Arc;

    #[test]
    fn property_csv_reads_knots() {
        let c = parse_property_csv("T_C,k_W_mmC\n20, 0.0098\n871,0.0253\n").unwrap();
        assert_eq!(c.knots(), &[(20.0, 0.0098), (871.0, 0.0253)]);
        assert!(parse_property_csv("T,k\n20,1\n").is_err());
        assert!(parse_property_csv("T,k\n20,1\n10,2\n").is_err());
        assert!(parse_property_csv("T,k\n20,1,3\n30,2,4\n").unwrap_err().contains("2 columns"));
        assert!(parse_property_csv("T,k\n20,x\n30,2\n").unwrap_err().contains("line 2"));
    }

    #[test]
    fn property_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.csv");
        let curve = meltpool_core::material::in625_conductivity();
        write_property_csv(&path, &curve, ["temperature_c", "conductivity_w_mm_c"]).unwrap();
        assert_eq!(read_property_csv(&path).unwrap().knots(), curve.knots());
    }

    #[test]
    fn profile_is_normalized_on_load() {
        let text = "3 3 0.01 0.02\n0 1 0\n1 4 1\n0 1 0\n";
        let a = parse_profile(text, 100.0, 0.5).unwrap();
        let scaled = "3 3 0.01 0.02\n0 10 0\n10 40 10\n0 10 0\n";
        let b = parse_profile(scaled, 100.0, 0.5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.absorbed_power(), 50.0);
        assert!(parse_profile("3 3 0.01 0.02\n1 2 3\n", 1.0, 1.0).unwrap_err().contains("expected 9"));
        assert!(parse_profile("3 3 0.01\n", 1.0, 1.0).is_err());
        assert!(parse_profile("2 2 0.01 0.01\n1 -1 1 1\n", 1.0, 1.0).is_err());
    }

    #[test]
    fn vtk_layout() {
        let grid = Arc::new(GradedGrid::from_axes(vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, 0.5, 1.0]).unwrap());
        let field = TemperatureField::from_fn(grid, 0.25, |p| p[0] + 10.0 * p[2]);
        let mut buf = Vec::new();
        write_vtk_to(&mut buf, &field).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[4], "DIMENSIONS 2 2 3");
        assert_eq!(lines[5], "POINTS 12 double");
        assert_eq!(lines[6 + 12], "POINT_DATA 12");
        let values: Vec<f64> = lines[6 + 15..].iter().map(|l| l.parse().unwrap()).collect();
        assert_eq!(values, field.values());
        let last: Vec<f64> = lines[6 + 11].split(' ').map(|s| s.parse().unwrap()).collect();
        assert_eq!(last, vec![1.0, 0.0, 1.0]);
    }
}
