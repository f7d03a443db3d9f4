//! Analytic reference solutions and solver comparisons against them.
//!
//! Two classical problems cover the moving-source and the transient-flux
//! paths of the solver: the quasi-steady Rosenthal point source on a
//! semi-infinite body, and a constant flux into a half-space.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{DomainBox, FineBand, GradedGrid, GridSpec};
use crate::heat_source::{GoldakSpec, HeatSource, ScanPath, SourceModel};
use crate::material::MaterialModel;
use crate::math::{self, PI};
use crate::solver::{self, NewtonSettings, SimulationConfig, SnapshotPlan, Solver, TimeStep, STEFAN_BOLTZMANN};
use crate::{Error, Result};

/// Moving point source on a semi-infinite body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosenthalParams {
    /// `Q·η`, W.
    pub absorbed_power: f64,
    /// mm/s
    pub speed: f64,
    /// W/(mm·°C)
    pub conductivity: f64,
    /// mm²/s
    pub diffusivity: f64,
    pub ambient: f64,
}

impl RosenthalParams {
    pub fn validate(&self) -> Result<()> {
        for (f, v) in [
            ("rosenthal.absorbed_power", self.absorbed_power),
            ("rosenthal.speed", self.speed),
            ("rosenthal.conductivity", self.conductivity),
            ("rosenthal.diffusivity", self.diffusivity),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(f, "must be positive"));
            }
        }
        if !self.ambient.is_finite() {
            return Err(Error::invalid("rosenthal.ambient", "must be finite"));
        }
        Ok(())
    }
}

/// Quasi-steady temperature at distance `r` from the source, `xi` of which
/// lies along the travel direction (positive ahead of the source).
pub fn rosenthal_temperature(p: &RosenthalParams, xi: f64, r: f64) -> Result<f64> {
    p.validate()?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("r", "distance must be positive"));
    }
    if xi.abs() > r * (1.0 + 1e-12) {
        return Err(Error::invalid("xi", "along-track offset exceeds the distance"));
    }
    Ok(p.ambient
        + p.absorbed_power / (2.0 * PI * p.conductivity * r) * math::exp(-p.speed * (r + xi) / (2.0 * p.diffusivity)))
}

/// `ierfc(x) = e^(−x²)/√π − x·erfc(x)`.
pub fn ierfc(x: f64) -> f64 {
    math::exp(-x * x) / math::sqrt(PI) - x * math::erfc(x)
}

/// Constant surface flux into a half-space at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpaceParams {
    /// W/mm²
    pub flux: f64,
    pub conductivity: f64,
    pub diffusivity: f64,
    pub initial: f64,
}

/// Temperature at depth `y ≥ 0` below the surface after time `t`.
pub fn halfspace_flux_temperature(p: &HalfSpaceParams, y: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return p.initial;
    }
    let s = math::sqrt(p.diffusivity * t);
    p.initial + 2.0 * p.flux / p.conductivity * s * ierfc(y.max(0.0) / (2.0 * s))
}

/// One probe of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub label: String,
    /// mm
    pub position: [f64; 3],
    /// s
    pub time: f64,
    pub analytic: f64,
    pub computed: f64,
    /// Error of the temperature rise relative to the analytic rise.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub name: &'static str,
    pub rows: Vec<ProbeRow>,
    pub tolerance: f64,
}

impl VerificationReport {
    pub fn max_error(&self) -> f64 {
        self.rows.iter().fold(0.0, |a, r| a.max(r.relative_error))
    }

    pub fn passed(&self) -> bool {
        !self.rows.is_empty() && self.max_error() <= self.tolerance
    }
}

fn relative(analytic: f64, computed: f64, base: f64) -> f64 {
    ((computed - analytic) / (analytic - base)).abs()
}

/// Resolution of the half-space comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpaceSetup {
    pub params: HalfSpaceParams,
    /// Thickness of the top cell, mm.
    pub surface_spacing: f64,
    pub time_step: f64,
    pub end_time: f64,
}

impl Default for HalfSpaceSetup {
    fn default() -> Self {
        Self {
            params: HalfSpaceParams {
                flux: 1.0,
                conductivity: 0.01,
                diffusivity: 4.0,
                initial: 20.0,
            },
            surface_spacing: 0.002,
            time_step: 1e-6,
            end_time: 1e-3,
        }
    }
}

impl HalfSpaceSetup {
    /// Halves the cell size and the time step `levels` times.
    pub fn refined(&self, levels: u32) -> Self {
        let f = (1u32 << levels) as f64;
        Self {
            surface_spacing: self.surface_spacing / f,
            time_step: self.time_step / f,
            ..*self
        }
    }
}

/// Runs a uniformly heated slab, deep enough to behave as a half-space over
/// the run, and compares the surface temperature with the analytic value
/// at a quarter, half and all of `end_time`.
pub fn halfspace_comparison(setup: &HalfSpaceSetup) -> Result<VerificationReport> {
    let p = setup.params;
    if !(setup.surface_spacing > 0.0 && setup.time_step > 0.0 && setup.end_time > 0.0) {
        return Err(Error::invalid("verify.halfspace", "spacing, step and end time must be positive"));
    }
    // Ten diffusion lengths of depth keep the bottom at rest.
    let depth = 10.0 * math::sqrt(p.diffusivity * setup.end_time);
    let mut y = vec![0.0];
    let mut h = setup.surface_spacing;
    while *y.last().expect("non-empty") > -depth {
        let next = y.last().expect("non-empty") - h;
        y.push(next);
        h *= 1.1;
    }
    y.reverse();
    let lateral = 4.0 * setup.surface_spacing;
    let grid = Arc::new(GradedGrid::from_axes(
        vec![-0.5 * lateral, 0.5 * lateral],
        y.clone(),
        vec![0.0, lateral],
    )?);
    let capacity = p.conductivity / p.diffusivity;
    let times = [0.25, 0.5, 1.0].map(|f| f * setup.end_time);
    let cfg = SimulationConfig {
        material: MaterialModel::constant(1.0, capacity, p.conductivity),
        source: HeatSource {
            model: SourceModel::Uniform(p.flux),
            path: ScanPath::along_z(0.0, 0.0, lateral, lateral / (2.0 * setup.end_time))?,
        },
        grid: GridSpec::uniform(DomainBox::new(lateral, -y[0], lateral)?, lateral),
        initial_temperature: p.initial,
        ambient_temperature: p.initial,
        emissivity: 0.0,
        stefan_boltzmann: STEFAN_BOLTZMANN,
        time_step: TimeStep::Fixed(setup.time_step),
        end_time: setup.end_time,
        newton: NewtonSettings::default(),
        snapshots: SnapshotPlan {
            every: 0,
            at_times: times.to_vec(),
        },
    };
    let mut solver = Solver::with_grid(&cfg, grid.clone());
    let out = solver::run(&mut solver, &cfg)?;
    let [_, ny, _] = grid.dims();
    let rows = times
        .iter()
        .map(|&t| {
            let snap = out.snapshot_near(t);
            let computed = snap.at(0, ny - 1, 0);
            let analytic = halfspace_flux_temperature(&p, 0.0, snap.time());
            ProbeRow {
                label: format!("surface t={:.3e}", snap.time()),
                position: [0.0, 0.0, 0.0],
                time: snap.time(),
                analytic,
                computed,
                relative_error: relative(analytic, computed, p.initial),
            }
        })
        .collect();
    Ok(VerificationReport {
        name: "half-space constant flux",
        rows,
        tolerance: 0.01,
    })
}

/// Moving-source comparison set-up. The source is a Gaussian whose 1/e²
/// radius is one fine cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosenthalSetup {
    pub params: RosenthalParams,
    pub fine_spacing: f64,
    pub coarse_spacing: f64,
}

impl Default for RosenthalSetup {
    fn default() -> Self {
        Self {
            params: RosenthalParams {
                absorbed_power: 20.0,
                speed: 20.0,
                conductivity: 0.02,
                diffusivity: 5.0,
                ambient: 20.0,
            },
            fine_spacing: 0.025,
            coarse_spacing: 0.1,
        }
    }
}

/// Simulates the moving source with constant properties and no latent heat
/// and compares with [`rosenthal_temperature`] at probes four, six and eight
/// fine cells from the source: beside it on the surface, below it and
/// behind it.
pub fn rosenthal_comparison(setup: &RosenthalSetup) -> Result<VerificationReport> {
    let p = setup.params;
    p.validate()?;
    let h = setup.fine_spacing;
    let domain = DomainBox::new(2.0, 1.0, 3.0)?;
    let (start, travel) = (0.5, 2.0);
    let cfg = SimulationConfig {
        material: MaterialModel::constant(1.0, p.conductivity / p.diffusivity, p.conductivity),
        source: HeatSource {
            model: SourceModel::Goldak(GoldakSpec::symmetric(p.absorbed_power, 1.0, h)?),
            path: ScanPath::along_z(0.0, start, travel, p.speed)?,
        },
        grid: GridSpec {
            domain,
            coarse_spacing: setup.coarse_spacing,
            fine_spacing: h,
            band: Some(FineBand {
                x: (-0.3, 0.3),
                y: (-0.3, 0.0),
                z: (start - 0.2, start + travel + 0.2),
            }),
            growth: GridSpec::DEFAULT_GROWTH,
        },
        initial_temperature: p.ambient,
        ambient_temperature: p.ambient,
        emissivity: 0.0,
        stefan_boltzmann: STEFAN_BOLTZMANN,
        time_step: TimeStep::Auto,
        end_time: travel / p.speed,
        newton: NewtonSettings::default(),
        snapshots: SnapshotPlan::default(),
    };
    let out = solver::simulate(&cfg)?;
    let field = out.final_field();
    let center = cfg.source.path.beam_center(field.time())?;
    let mut rows = Vec::new();
    for n in [4.0, 6.0, 8.0] {
        let d = n * h;
        // (label, offset across, offset down, offset along)
        for (label, dx, dy, dz) in [("beside", d, 0.0, 0.0), ("below", 0.0, d, 0.0), ("behind", 0.0, 0.0, -d)] {
            let pos = [center[0] + dx, center[1] - dy, center[2] + dz];
            let computed = field.interpolate(pos)?;
            let analytic = rosenthal_temperature(&p, dz, d)?;
            rows.push(ProbeRow {
                label: format!("{label} {n} cells"),
                position: pos,
                time: field.time(),
                analytic,
                computed,
                relative_error: relative(analytic, computed, p.ambient),
            });
        }
    }
    Ok(VerificationReport {
        name: "Rosenthal moving point source",
        rows,
        tolerance: 0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rp() -> RosenthalParams {
        RosenthalParams {
            absorbed_power: 74.1,
            speed: 800.0,
            conductivity: 0.02,
            diffusivity: 5.0,
            ambient: 20.0,
        }
    }

    #[test]
    fn halfspace_example() {
        let p = HalfSpaceParams {
            flux: 1.0,
            conductivity: 0.01,
            diffusivity: 4.0,
            initial: 0.0,
        };
        let rise = halfspace_flux_temperature(&p, 0.0, 1e-3);
        let expected = 200.0 * math::sqrt(4e-3 / PI);
        assert!((rise - expected).abs() < 1e-12);
        assert!((rise - 7.136).abs() < 1e-3);
        assert_eq!(halfspace_flux_temperature(&p, 0.3, 0.0), 0.0);
        assert!(halfspace_flux_temperature(&p, 0.5, 1e-9) < 1e-12);
    }

    #[test]
    fn rosenthal_limits() {
        let p = rp();
        assert!(rosenthal_temperature(&p, 0.0, 0.0).is_err());
        assert!(rosenthal_temperature(&p, 0.2, 0.1).is_err());
        assert!((rosenthal_temperature(&p, -1e6, 1e6).unwrap() - 20.0).abs() < 1e-3);
        let slow = RosenthalParams { speed: 1e-12, ..p };
        let r = 0.3;
        let stat = 20.0 + p.absorbed_power / (2.0 * PI * p.conductivity * r);
        assert!((rosenthal_temperature(&slow, 0.1, r).unwrap() - stat).abs() < 1e-6);
        assert!(rosenthal_temperature(&p, -0.1, 0.2).unwrap() > rosenthal_temperature(&p, 0.1, 0.2).unwrap());
        assert!(RosenthalParams { conductivity: 0.0, ..p }.validate().is_err());
    }

    proptest! {
        #[test]
        fn surface_rise_scales_with_root_time(t in 1e-6f64..1.0, q in 0.1f64..10.0) {
            let p = HalfSpaceParams { flux: q, conductivity: 0.02, diffusivity: 5.0, initial: 20.0 };
            let a = halfspace_flux_temperature(&p, 0.0, t) - 20.0;
            let b = halfspace_flux_temperature(&p, 0.0, 4.0 * t) - 20.0;
            prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b);
        }

        #[test]
        fn halfspace_decreases_with_depth(t in 1e-5f64..1e-2, y in 0.0f64..0.5, dy in 1e-3f64..0.5) {
            let p = HalfSpaceParams { flux: 1.0, conductivity: 0.02, diffusivity: 5.0, initial: 20.0 };
            prop_assert!(halfspace_flux_temperature(&p, y + dy, t) <= halfspace_flux_temperature(&p, y, t));
        }
    }

    #[test]
    fn ierfc_values() {
        assert!((ierfc(0.0) - 1.0 / math::sqrt(PI)).abs() < 1e-15);
        // Closed form check at x = 1.
        let expected = math::exp(-1.0) / math::sqrt(PI) - math::erfc(1.0);
        assert!((ierfc(1.0) - expected).abs() < 1e-15);
        assert!(ierfc(6.0) >= 0.0 && ierfc(6.0) < 1e-16);
    }
}
