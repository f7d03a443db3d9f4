//! Properties of short laser tracks on a small plate.

use meltpool_core::bench::{self, CaseId, ConductivityModel, GridPreset, Layout, Machine};
use meltpool_core::calibration::{self, CalibrationTarget, NelderMeadSettings, Parameter, ParameterHandle};
use meltpool_core::grid::{DomainBox, FineBand};
use meltpool_core::metrics::{self, MeltPoolMetrics, MetricSettings};
use meltpool_core::solver::{self, SimulationConfig};

const TRAVEL: f64 = 0.7;

fn layout() -> Layout {
    Layout {
        domain: DomainBox {
            width: 0.6,
            depth: 0.3,
            length: 1.4,
        },
        band: FineBand {
            x: (-0.1, 0.1),
            y: (-0.06, 0.0),
            z: (0.2, 1.2),
        },
        scan_start: 0.3,
        scan_length: 0.8,
        metric_travel: TRAVEL,
        probe_travels: [0.5, 0.8],
    }
}

const PRESET: GridPreset = GridPreset {
    name: "small",
    fine: 0.025,
    coarse: 0.1,
};

fn config() -> SimulationConfig {
    let def = bench::case_definition(Machine::Cbm, CaseId::B, ConductivityModel::Isotropic);
    bench::case_config(&def, &PRESET, &layout(), None).unwrap()
}

fn settings() -> MetricSettings {
    MetricSettings {
        quasi_steady_travel: 0.5,
        ..MetricSettings::default()
    }
}

fn evaluate(cfg: &SimulationConfig) -> meltpool_core::Result<MeltPoolMetrics> {
    let path = &cfg.source.path;
    let t = path.time_at_travel(TRAVEL);
    let mut c = cfg.clone();
    c.end_time = t;
    let out = solver::simulate(&c)?;
    let snap = out.snapshot_near(t);
    metrics::measure(snap, snap.time(), path, metrics::DEFAULT_ISOTHERM, None, &settings())
}

#[test]
fn calibration_recovers_a_planted_absorptivity() {
    let mut planted = config();
    Parameter::Absorptivity.apply(&mut planted, 0.3).unwrap();
    let m = evaluate(&planted).unwrap();
    assert!(!m.empty);
    let target = CalibrationTarget {
        values: [m.length, m.width, m.depth, 0.0],
        weights: [1.0, 1.0, 1.0, 0.0],
    };
    let cfg = config();
    let free = [ParameterHandle::new(Parameter::Absorptivity, 0.15, 0.6, 0.38).unwrap()];
    let settings = NelderMeadSettings {
        budget: 30,
        ..NelderMeadSettings::default()
    };
    let cal = calibration::calibrate(&cfg, &free, &target, &settings, evaluate).unwrap();
    let eta = cal.parameters[0].value;
    assert!((eta - 0.3).abs() / 0.3 < 0.02, "recovered η = {eta}");
    // Never worse than the seed.
    assert!(cal.objective <= cal.trace[0].objective);
}

#[test]
fn hottest_point_lies_on_the_heated_surface() {
    let mut cfg = config();
    cfg.emissivity = 0.0;
    let out = solver::simulate(&cfg).unwrap();
    for snap in &out.snapshots {
        let grid = snap.grid();
        let [nx, ny, nz] = grid.dims();
        let mut top = cfg.initial_temperature;
        for k in 0..nz {
            for i in 0..nx {
                top = top.max(snap.at(i, ny - 1, k));
            }
        }
        assert!(snap.max() <= top * 1.01, "interior {} above surface {}", snap.max(), top);
    }
}

#[test]
fn sweep_rows_are_reproducible() {
    let cfg = config();
    let h = ParameterHandle::from_config(Parameter::Emissivity, &cfg).unwrap();
    let values = [0.1, 0.9];
    let a = calibration::sensitivity_sweep(&cfg, &h, &values, evaluate);
    let b = calibration::sensitivity_sweep(&cfg, &h, &values, evaluate);
    assert_eq!(a, b);
    assert!(calibration::sensitivity_sweep(&cfg, &h, &[], evaluate).is_empty());
}
