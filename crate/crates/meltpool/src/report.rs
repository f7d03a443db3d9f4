//! Deviation tables, sweep tables, calibration traces and config fragments.

use std::fmt::Write as _;

use meltpool_core::bench::{self, CaseRun, ConductivityModel, Quantities};
use meltpool_core::calibration::{Calibration, Parameter, SweepRow};

use crate::config::RunConfig;

/// One line of a deviation table. `deviations` are percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationRow {
    pub label: String,
    pub values: Quantities,
    pub deviations: Quantities,
}

pub fn case_label(run: &CaseRun) -> String {
    let d = &run.definition;
    let model = match d.model {
        ConductivityModel::Isotropic => "iso",
        ConductivityModel::Anisotropic => "aniso",
    };
    format!("{} {} {model} ({})", d.machine.name(), d.case.name(), run.preset)
}

/// Computed row per run, followed by the measurement and the published
/// computed values for that case.
pub fn deviation_rows(runs: &[CaseRun]) -> Vec<DeviationRow> {
    let mut rows = Vec::new();
    for run in runs {
        let d = &run.definition;
        let reference = bench::reference_record(d.machine, d.case);
        rows.push(DeviationRow {
            label: case_label(run),
            values: run.computed,
            deviations: run.deviations,
        });
        rows.push(DeviationRow {
            label: format!("{} {} measured", d.machine.name(), d.case.name()),
            values: reference.measured(),
            deviations: Quantities::default(),
        });
        if let Some(p) = reference.published_for(d.model) {
            rows.push(DeviationRow {
                label: format!("{} {} published", d.machine.name(), d.case.name()),
                values: p.computed,
                deviations: p.deviations,
            });
        }
    }
    rows
}

const COLUMNS: [&str; 9] = [
    "case",
    "length_um",
    "length_dev_pct",
    "width_um",
    "width_dev_pct",
    "depth_um",
    "depth_dev_pct",
    "cooling_rate_c_s",
    "cooling_rate_dev_pct",
];

fn cells(row: &DeviationRow, text: bool) -> Vec<String> {
    let missing = if text { "-" } else { "" };
    let fmt = |v: Option<f64>, sci: bool| match v {
        Some(v) if text && sci => format!("{v:.3e}"),
        Some(v) if text => format!("{v:.1}"),
        Some(v) => v.to_string(),
        None => missing.to_string(),
    };
    let pct = |v: Option<f64>| match v {
        Some(v) if text => format!("{v:.2}"),
        Some(v) => v.to_string(),
        None => missing.to_string(),
    };
    let (v, d) = (row.values.as_array(), row.deviations.as_array());
    let mut out = vec![row.label.clone()];
    for i in 0..4 {
        out.push(fmt(v[i], i == 3));
        out.push(pct(d[i]));
    }
    out
}

pub fn deviation_csv(rows: &[DeviationRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record(cells(r, false)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Columns padded to their widest cell; numbers right-aligned.
pub fn deviation_table(rows: &[DeviationRow]) -> String {
    let header = ["case", "L μm", "ΔL %", "W μm", "ΔW %", "D μm", "ΔD %", "CR °C/s", "ΔCR %"];
    let body: Vec<Vec<String>> = rows.iter().map(|r| cells(r, true)).collect();
    let mut width = header.map(|h| h.chars().count());
    for r in &body {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut s = String::new();
    let line = |s: &mut String, cells: &[String]| {
        for (i, c) in cells.iter().enumerate() {
            let pad = width[i] - c.chars().count();
            if i == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(" | ");
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        s.push('\n');
    };
    line(&mut s, &header.map(String::from));
    let total: usize = width.iter().sum::<usize>() + 3 * (width.len() - 1);
    s.push_str(&"-".repeat(total));
    s.push('\n');
    for r in &body {
        line(&mut s, r);
    }
    s
}

pub fn sweep_csv(parameter: Parameter, rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter", "value", "length_um", "width_um", "depth_um", "cooling_rate_c_s", "status"])
        .expect("in-memory write");
    for r in rows {
        let mut rec = vec![parameter.name().to_string(), r.value.to_string()];
        match &r.result {
            Ok(m) => {
                rec.extend([m.length, m.width, m.depth].map(|v| v.to_string()));
                rec.push(m.cooling_rate.map(|v| v.to_string()).unwrap_or_default());
                rec.push("ok".into());
            }
            Err(e) => {
                rec.extend(std::iter::repeat(String::new()).take(4));
                rec.push(e.to_string());
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Every evaluation with the best objective seen so far.
pub fn trace_csv(cal: &Calibration) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["evaluation".to_string()];
    header.extend(cal.parameters.iter().map(|h| h.parameter.name().to_string()));
    header.extend(["objective".to_string(), "best_objective".to_string()]);
    w.write_record(&header).expect("in-memory write");
    let mut best = f64::INFINITY;
    for (i, e) in cal.trace.iter().enumerate() {
        best = best.min(e.objective);
        let mut rec = vec![i.to_string()];
        rec.extend(e.point.iter().map(|v| v.to_string()));
        rec.extend([e.objective.to_string(), best.to_string()]);
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Config fragment setting the calibrated values; pass it to `run` after
/// the base config.
pub fn calibration_fragment(base: &RunConfig, cal: &Calibration) -> String {
    let mut source = toml::Table::new();
    let mut solver = toml::Table::new();
    let mut material = toml::Table::new();
    let mut theta = base.material.anisotropy;
    for h in &cal.parameters {
        let v = toml::Value::Float(h.value);
        match h.parameter {
            Parameter::Absorptivity => {
                source.insert("absorptivity".into(), v);
            }
            Parameter::FrontRearRatio => {
                source.insert("ff_over_fr".into(), v);
            }
            Parameter::RearFrontRadiusRatio => {
                source.insert("cr_over_cf".into(), v);
            }
            Parameter::Emissivity => {
                solver.insert("emissivity".into(), v);
            }
            Parameter::Sharpness => {
                material.insert("sharpness".into(), v);
            }
            Parameter::ThetaScan | Parameter::ThetaTransverse | Parameter::ThetaDepth => {
                let i = match h.parameter {
                    Parameter::ThetaScan => 0,
                    Parameter::ThetaTransverse => 1,
                    _ => 2,
                };
                theta.get_or_insert([1.0; 3])[i] = h.value;
            }
        }
    }
    if let Some(t) = theta.filter(|_| {
        cal.parameters
            .iter()
            .any(|h| matches!(h.parameter, Parameter::ThetaScan | Parameter::ThetaTransverse | Parameter::ThetaDepth))
    }) {
        material.insert("anisotropy".into(), toml::Value::Array(t.map(toml::Value::Float).to_vec()));
    }
    let mut doc = toml::Table::new();
    for (name, t) in [("material", material), ("source", source), ("solver", solver)] {
        if !t.is_empty() {
            doc.insert(name.into(), toml::Value::Table(t));
        }
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# calibrated: objective {:e} after {} evaluations{}",
        cal.objective,
        cal.trace.len(),
        if cal.converged { "" } else { " (budget exhausted)" }
    );
    s.push_str(&toml::to_string(&doc).expect("fragment serializes"));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use meltpool_core::calibration::{Evaluation, ParameterHandle};

    fn row(label: &str, v: [Option<f64>; 4], d: [Option<f64>; 4]) -> DeviationRow {
        let q = |a: [Option<f64>; 4]| Quantities {
            length: a[0],
            width: a[1],
            depth: a[2],
            cooling_rate: a[3],
        };
        DeviationRow {
            label: label.into(),
            values: q(v),
            deviations: q(d),
        }
    }

    #[test]
    fn exact_match_has_zero_deviation() {
        let measured = Quantities {
            length: Some(782.0),
            width: None,
            depth: None,
            cooling_rate: Some(1.1e6),
        };
        let d = bench::deviations(&measured, &measured);
        assert_eq!(d.length, Some(0.0));
        assert_eq!(d.cooling_rate, Some(0.0));
        assert_eq!(d.width, None);
    }

    #[test]
    fn table_columns_align() {
        let rows = vec![
            row("CBM B iso (desk)", [Some(812.0), None, None, Some(1.35e6)], [Some(3.8), None, None, Some(12.0)]),
            row("CBM B measured", [Some(782.0), None, None, Some(1.2e6)], [None; 4]),
        ];
        let t = deviation_table(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        let bars = |l: &str| l.char_indices().filter(|c| c.1 == '|').map(|c| l[..c.0].chars().count()).collect::<Vec<_>>();
        assert_eq!(bars(lines[0]), bars(lines[2]));
        assert_eq!(bars(lines[2]), bars(lines[3]));
        assert!(lines[2].contains("812.0") && lines[2].contains("3.80"));
        let csv = deviation_csv(&rows);
        assert!(csv.starts_with("case,length_um"));
        assert!(csv.lines().nth(2).unwrap().starts_with("CBM B measured,782,,"));
    }

    #[test]
    fn fragment_is_a_valid_config() {
        let cal = Calibration {
            parameters: vec![
                ParameterHandle::new(Parameter::Absorptivity, 0.2, 0.6, 0.41).unwrap(),
                ParameterHandle::new(Parameter::ThetaTransverse, 0.5, 2.0, 1.3).unwrap(),
                ParameterHandle::new(Parameter::Emissivity, 0.0, 1.0, 0.2).unwrap(),
            ],
            objective: 1e-3,
            trace: vec![Evaluation {
                point: vec![0.38, 1.0, 0.47],
                objective: 0.1,
            }],
            converged: false,
            config: bench::case_config(
                &bench::case_definition(bench::Machine::Cbm, bench::CaseId::B, ConductivityModel::Isotropic),
                &bench::DESK,
                &bench::Layout::default(),
                None,
            )
            .unwrap(),
        };
        let text = calibration_fragment(&RunConfig::default(), &cal);
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.source.absorptivity, 0.41);
        assert_eq!(cfg.solver.emissivity, 0.2);
        assert_eq!(cfg.material.anisotropy, Some([1.0, 1.3, 1.0]));
        assert!(text.contains("budget exhausted"));
        let trace = trace_csv(&cal);
        assert_eq!(trace.lines().next().unwrap(), "evaluation,absorptivity,theta_transverse,emissivity,objective,best_objective");
    }
}
