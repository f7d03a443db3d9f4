//! Time and space convergence of the solver on constant-property problems.

use meltpool_core::grid::{DomainBox, GridSpec};
use meltpool_core::heat_source::{HeatSource, ScanPath, SourceModel};
use meltpool_core::material::{MaterialModel, PhaseChangeModel, PropertyCurve};
use meltpool_core::solver::{self, NewtonSettings, SimulationConfig, SnapshotPlan, TimeStep};
use meltpool_core::verify::{halfspace_comparison, HalfSpaceSetup};

/// Uniformly heated cube, k = 0.01 W/(mm·°C), α = 4 mm²/s, no latent heat.
fn slab(dt: f64) -> SimulationConfig {
    let material = MaterialModel {
        density: 2.5e-6,
        latent_heat: 0.0,
        conductivity: PropertyCurve::constant(0.01),
        capacity: PropertyCurve::constant(1000.0),
        phase_change: PhaseChangeModel {
            solidus: 1290.0,
            liquidus: 1350.0,
            sharpness: PhaseChangeModel::DEFAULT_SHARPNESS,
        },
        anisotropy: None,
    };
    SimulationConfig {
        material,
        source: HeatSource {
            model: SourceModel::Uniform(1.0),
            path: ScanPath::along_z(0.0, 0.0, 1.0, 1.0).unwrap(),
        },
        grid: GridSpec::uniform(DomainBox::new(0.1, 0.2, 0.1).unwrap(), 0.01),
        initial_temperature: 20.0,
        ambient_temperature: 20.0,
        emissivity: 0.0,
        stefan_boltzmann: solver::STEFAN_BOLTZMANN,
        time_step: TimeStep::Fixed(dt),
        end_time: 2e-3,
        newton: NewtonSettings::default(),
        snapshots: SnapshotPlan::default(),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

#[test]
fn backward_euler_is_first_order_in_time() {
    let run = |dt: f64| solver::simulate(&slab(dt)).unwrap().final_field().values().to_vec();
    let (a, b, c) = (run(2e-4), run(1e-4), run(5e-5));
    // Successive differences shrink by the Richardson factor 2^p with p = 1.
    let ratio = max_diff(&a, &b) / max_diff(&b, &c);
    assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn halfspace_error_decreases_under_refinement() {
    let base = HalfSpaceSetup::default();
    let errors: Vec<f64> = (0..3)
        .map(|l| halfspace_comparison(&base.refined(l)).unwrap().max_error())
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[0] < 0.01, "{errors:?}");
}
