//! TOML run configuration.
//!
//! A config is one or more TOML files merged key by key, later files
//! winning. Every key is optional; the defaults describe CBM case B with the
//! calibrated parameters on the desk grid. Physical keys carry their unit as
//! a suffix (`_mm`, `_c` for °C, `_w`, `_s`, `_mm_s`, ...). Relative file
//! paths are taken relative to the file that names them.
//!
//! ```toml
//! [source]
//! kind = "goldak"          # goldak | measured | gaussian | uniform
//! power_w = 195.0
//! absorptivity = 0.38
//!
//! [scan]
//! speed_mm_s = 800.0
//!
//! [solver]
//! time_step_s = "auto"     # or a step in seconds
//! ```

use std::path::{Path, PathBuf};

use meltpool_core::bench::{self, CaseDefinition, GridPreset, Layout, SourceVariant};
use meltpool_core::grid::{DomainBox, FineBand, GridSpec};
use meltpool_core::heat_source::{GoldakSpec, HeatSource, MeasuredProfile, ScanPath, SourceModel};
use meltpool_core::material::{AnisotropyModel, Extrapolation, MaterialModel, PhaseChangeModel};
use meltpool_core::metrics::{self, CoolingRateDefinition, MeltPoolMetrics, MetricSettings};
use meltpool_core::solver::{self, NewtonSettings, SimulationConfig, SimulationOutput, SnapshotPlan, TimeStep};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, IoContext, Result};
use crate::formats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSection {
    pub density_kg_mm3: f64,
    pub latent_heat_j_kg: f64,
    pub solidus_c: f64,
    pub liquidus_c: f64,
    /// Steepness of the smoothed phase fraction.
    pub sharpness: f64,
    /// Conductivity curve in W/(mm·°C); built-in IN625 data when absent.
    pub conductivity_csv: Option<PathBuf>,
    /// Specific heat curve in J/(kg·°C); built-in IN625 data when absent.
    pub capacity_csv: Option<PathBuf>,
    /// Behaviour above the last knot of both curves.
    pub extrapolation: ExtrapolationKey,
    /// Conductivity scaling `(scan, transverse, depth)`; isotropic when absent.
    pub anisotropy: Option<[f64; 3]>,
    pub anisotropy_break_c: f64,
    /// Temperature of full scaling; the solidus when absent.
    pub anisotropy_full_c: Option<f64>,
}

impl Default for MaterialSection {
    fn default() -> Self {
        let m = MaterialModel::in625();
        Self {
            density_kg_mm3: m.density,
            latent_heat_j_kg: m.latent_heat,
            solidus_c: m.phase_change.solidus,
            liquidus_c: m.phase_change.liquidus,
            sharpness: m.phase_change.sharpness,
            conductivity_csv: None,
            capacity_csv: None,
            extrapolation: ExtrapolationKey::HoldLast,
            anisotropy: None,
            anisotropy_break_c: AnisotropyModel::DEFAULT_BREAK,
            anisotropy_full_c: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtrapolationKey {
    HoldLast,
    LinearExtend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Goldak,
    Measured,
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub kind: SourceKind,
    pub power_w: f64,
    pub absorptivity: f64,
    /// Goldak transverse and front radius.
    pub radius_mm: f64,
    pub ff_over_fr: f64,
    pub cr_over_cf: f64,
    /// Intensity map for `kind = "measured"`.
    pub profile: Option<PathBuf>,
    /// Beam diameter of the Gaussian source.
    pub d4sigma_um: f64,
    /// Absorbed flux of the uniform source.
    pub flux_w_mm2: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        let p = bench::CBM_CALIBRATED;
        Self {
            kind: SourceKind::Goldak,
            power_w: 195.0,
            absorptivity: p.absorptivity,
            radius_mm: bench::CBM_SPOT_RADIUS,
            ff_over_fr: p.front_rear_ratio.unwrap_or(1.0),
            cr_over_cf: p.rear_front_radius_ratio.unwrap_or(1.0),
            profile: None,
            d4sigma_um: 100.0,
            flux_w_mm2: 0.0,
        }
    }
}

/// Straight track along z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub x_mm: f64,
    pub start_mm: f64,
    pub length_mm: f64,
    pub speed_mm_s: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        let l = Layout::default();
        Self {
            x_mm: 0.0,
            start_mm: l.scan_start,
            length_mm: l.scan_length,
            speed_mm_s: 800.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub width_mm: f64,
    pub depth_mm: f64,
    pub length_mm: f64,
    pub fine_mm: f64,
    pub coarse_mm: f64,
    pub growth: f64,
    /// Refine the band below to `fine_mm`; otherwise the grid is uniform at
    /// `coarse_mm`.
    pub refine: bool,
    pub band_x_mm: [f64; 2],
    pub band_y_mm: [f64; 2],
    pub band_z_mm: [f64; 2],
}

impl Default for GridSection {
    fn default() -> Self {
        let l = Layout::default();
        Self::from_layout(&l, &bench::DESK)
    }
}

impl GridSection {
    fn from_layout(l: &Layout, preset: &GridPreset) -> Self {
        Self {
            width_mm: l.domain.width,
            depth_mm: l.domain.depth,
            length_mm: l.domain.length,
            fine_mm: preset.fine,
            coarse_mm: preset.coarse,
            growth: GridSpec::DEFAULT_GROWTH,
            refine: true,
            band_x_mm: [l.band.x.0, l.band.x.1],
            band_y_mm: [l.band.y.0, l.band.y.1],
            band_z_mm: [l.band.z.0, l.band.z.1],
        }
    }

    /// Name of the matching built-in preset, or `custom`.
    pub fn preset_name(&self) -> &'static str {
        [bench::DESK, bench::CONVERGENCE]
            .into_iter()
            .find(|p| self.refine && p.fine == self.fine_mm && p.coarse == self.coarse_mm)
            .map_or("custom", |p| p.name)
    }
}

/// `"auto"` or a step in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStepKey {
    Seconds(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub initial_c: f64,
    pub ambient_c: f64,
    pub emissivity: f64,
    pub stefan_boltzmann_w_mm2_k4: f64,
    pub time_step_s: TimeStepKey,
    /// End of the run; the end of the scan when absent.
    pub end_time_s: Option<f64>,
    pub newton_tolerance: f64,
    pub max_iterations: usize,
    pub max_step_halvings: usize,
    /// Keep every n-th step; 0 keeps only the requested times.
    pub snapshot_every: usize,
    pub snapshot_times_s: Vec<f64>,
    /// Snapshot times given as beam travel.
    pub snapshot_travels_mm: Vec<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let n = NewtonSettings::default();
        let l = Layout::default();
        Self {
            initial_c: 20.0,
            ambient_c: 20.0,
            emissivity: bench::CBM_CALIBRATED.emissivity,
            stefan_boltzmann_w_mm2_k4: solver::STEFAN_BOLTZMANN,
            time_step_s: TimeStepKey::Keyword(AutoKeyword::Auto),
            end_time_s: None,
            newton_tolerance: n.tolerance,
            max_iterations: n.max_iterations,
            max_step_halvings: n.max_step_halvings,
            snapshot_every: 0,
            snapshot_times_s: Vec::new(),
            snapshot_travels_mm: vec![l.probe_travels[0], l.metric_travel, l.probe_travels[1]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Melt-pool boundary.
    pub isotherm_c: f64,
    pub cooling: bool,
    pub cooling_high_c: f64,
    pub cooling_low_c: f64,
    /// Beam travel of the snapshot used by `sweep` and `calibrate`.
    pub travel_mm: f64,
    /// Earlier snapshots are not measured.
    pub quasi_steady_travel_mm: f64,
    pub stations: usize,
    pub samples: usize,
    pub tolerance_mm: f64,
    pub contour_samples: usize,
    /// Also write the cross-section contour at the widest station.
    pub contours: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let s = MetricSettings::default();
        Self {
            isotherm_c: metrics::DEFAULT_ISOTHERM,
            cooling: true,
            cooling_high_c: metrics::DEFAULT_ISOTHERM,
            cooling_low_c: bench::Machine::Cbm.cooling_low(),
            travel_mm: Layout::default().metric_travel,
            quasi_steady_travel_mm: s.quasi_steady_travel,
            stations: s.stations,
            samples: s.samples,
            tolerance_mm: s.tolerance,
            contour_samples: s.contour_samples,
            contours: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// One VTK file per snapshot.
    pub vtk: bool,
    /// Node samples of every snapshot as CSV.
    pub samples_csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            vtk: true,
            samples_csv: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub material: MaterialSection,
    pub source: SourceSection,
    pub scan: ScanSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub metrics: MetricsSection,
    pub output: OutputSection,
}

/// Keys holding file paths, rewritten to absolute paths on load.
const PATH_KEYS: [(&str, &str); 3] = [
    ("material", "conductivity_csv"),
    ("material", "capacity_csv"),
    ("source", "profile"),
];

fn absolutize(table: &mut toml::Table, base: &Path) {
    for (section, key) in PATH_KEYS {
        let Some(toml::Value::Table(s)) = table.get_mut(section) else {
            continue;
        };
        if let Some(toml::Value::String(p)) = s.get_mut(key) {
            let path = Path::new(p.as_str());
            if path.is_relative() {
                *p = base.join(path).to_string_lossy().into_owned();
            }
        }
    }
}

/// Recursive key-by-key merge; scalars and arrays in `over` replace.
fn merge(into: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (into.get_mut(&k), v) {
            (Some(toml::Value::Table(a)), toml::Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

fn parse_table(text: &str, path: &Path) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| AppError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl RunConfig {
    /// Reads and merges config files in order.
    pub fn load(paths: &[PathBuf]) -> Result<Self> {
        let mut merged = toml::Table::new();
        for path in paths {
            let text = std::fs::read_to_string(path).context(|| format!("reading {}", path.display()))?;
            let mut table = parse_table(&text, path)?;
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let dir = std::path::absolute(dir).context(|| format!("resolving {}", dir.display()))?;
            absolutize(&mut table, &dir);
            merge(&mut merged, table);
        }
        Self::from_table(merged)
    }

    /// Parses one TOML document; relative paths stay as written.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_table(parse_table(text, Path::new("<string>"))?)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let field = e.path().to_string();
            AppError::config(field, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The fully resolved config as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks values that the schema alone cannot, reporting config keys.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("material.density_kg_mm3", self.material.density_kg_mm3),
            ("material.sharpness", self.material.sharpness),
            ("source.radius_mm", self.source.radius_mm),
            ("source.ff_over_fr", self.source.ff_over_fr),
            ("source.cr_over_cf", self.source.cr_over_cf),
            ("source.d4sigma_um", self.source.d4sigma_um),
            ("scan.speed_mm_s", self.scan.speed_mm_s),
            ("scan.length_mm", self.scan.length_mm),
            ("grid.width_mm", self.grid.width_mm),
            ("grid.depth_mm", self.grid.depth_mm),
            ("grid.length_mm", self.grid.length_mm),
            ("grid.fine_mm", self.grid.fine_mm),
            ("grid.coarse_mm", self.grid.coarse_mm),
            ("solver.newton_tolerance", self.solver.newton_tolerance),
            ("metrics.tolerance_mm", self.metrics.tolerance_mm),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(AppError::config(field, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("material.latent_heat_j_kg", self.material.latent_heat_j_kg),
            ("source.power_w", self.source.power_w),
            ("metrics.travel_mm", self.metrics.travel_mm),
            ("metrics.quasi_steady_travel_mm", self.metrics.quasi_steady_travel_mm),
        ];
        for (field, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(AppError::config(field, format!("must be non-negative, got {v}")));
            }
        }
        if !(self.source.absorptivity > 0.0 && self.source.absorptivity <= 1.0) {
            return Err(AppError::config("source.absorptivity", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.solver.emissivity) {
            return Err(AppError::config("solver.emissivity", "must lie in [0, 1]"));
        }
        if let TimeStepKey::Seconds(dt) = self.solver.time_step_s {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(AppError::config("solver.time_step_s", format!("must be positive or \"auto\", got {dt}")));
            }
        }
        if let Some(t) = self.solver.end_time_s {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(AppError::config("solver.end_time_s", "must be non-negative"));
            }
        }
        if self.solver.max_iterations == 0 {
            return Err(AppError::config("solver.max_iterations", "must be at least 1"));
        }
        if !(self.material.solidus_c < self.material.liquidus_c) {
            return Err(AppError::config("material.liquidus_c", "must exceed the solidus"));
        }
        if self.source.kind == SourceKind::Measured && self.source.profile.is_none() {
            return Err(AppError::config("source.profile", "required for kind = \"measured\""));
        }
        for (field, r) in [
            ("grid.band_x_mm", self.grid.band_x_mm),
            ("grid.band_y_mm", self.grid.band_y_mm),
            ("grid.band_z_mm", self.grid.band_z_mm),
        ] {
            if !(r[0] < r[1]) {
                return Err(AppError::config(field, "lower bound must be below the upper bound"));
            }
        }
        if self.metrics.cooling && !(self.metrics.cooling_low_c < self.metrics.cooling_high_c) {
            return Err(AppError::config("metrics.cooling_low_c", "must be below cooling_high_c"));
        }
        Ok(())
    }

    /// Config equivalent to a benchmark case. `profile` is the measured
    /// intensity file, if one is supplied.
    pub fn from_case(def: &CaseDefinition, preset: &GridPreset, layout: &Layout, profile: Option<&Path>) -> Self {
        let p = &def.params;
        let mut cfg = RunConfig::default();
        cfg.material.anisotropy = p.theta;
        cfg.source.power_w = def.power;
        cfg.source.absorptivity = p.absorptivity;
        cfg.source.d4sigma_um = def.spot_d4sigma;
        cfg.source.kind = match (def.source, profile) {
            (SourceVariant::Goldak, _) => SourceKind::Goldak,
            (_, Some(_)) => SourceKind::Measured,
            (_, None) => SourceKind::Gaussian,
        };
        cfg.source.profile = profile.map(Path::to_path_buf);
        if let (Some(ratio), Some(radii)) = (p.front_rear_ratio, p.rear_front_radius_ratio) {
            cfg.source.ff_over_fr = ratio;
            cfg.source.cr_over_cf = radii;
        }
        cfg.scan = ScanSection {
            x_mm: 0.0,
            start_mm: layout.scan_start,
            length_mm: layout.scan_length,
            speed_mm_s: def.speed,
        };
        cfg.grid = GridSection::from_layout(layout, preset);
        cfg.solver.emissivity = p.emissivity;
        cfg.solver.snapshot_travels_mm = vec![layout.probe_travels[0], layout.metric_travel, layout.probe_travels[1]];
        let cooling = bench::cooling_definition(def);
        cfg.metrics.cooling_high_c = cooling.t_high;
        cfg.metrics.cooling_low_c = cooling.t_low;
        cfg.metrics.travel_mm = layout.metric_travel;
        cfg
    }

    fn material(&self) -> Result<MaterialModel> {
        let m = &self.material;
        let mut model = MaterialModel::in625();
        model.density = m.density_kg_mm3;
        model.latent_heat = m.latent_heat_j_kg;
        model.phase_change = PhaseChangeModel {
            solidus: m.solidus_c,
            liquidus: m.liquidus_c,
            sharpness: m.sharpness,
        };
        if let Some(path) = &m.conductivity_csv {
            model.conductivity = formats::read_property_csv(path)?;
        }
        if let Some(path) = &m.capacity_csv {
            model.capacity = formats::read_property_csv(path)?;
        }
        let extrapolation = match m.extrapolation {
            ExtrapolationKey::HoldLast => Extrapolation::HoldLast,
            ExtrapolationKey::LinearExtend => Extrapolation::LinearExtend,
        };
        model.conductivity = model.conductivity.with_extrapolation(extrapolation);
        model.capacity = model.capacity.with_extrapolation(extrapolation);
        if let Some(theta) = m.anisotropy {
            let full = m.anisotropy_full_c.unwrap_or(m.solidus_c);
            model.anisotropy = Some(
                AnisotropyModel::new(m.anisotropy_break_c, full, bench::theta_on_grid_axes(theta))
                    .map_err(|e| AppError::config("material.anisotropy", e.to_string()))?,
            );
        }
        model.validate()?;
        Ok(model)
    }

    fn source(&self, path: ScanPath) -> Result<HeatSource> {
        let s = &self.source;
        let model = match s.kind {
            SourceKind::Goldak => SourceModel::Goldak(
                GoldakSpec::from_ratios(s.power_w, s.absorptivity, s.radius_mm, s.ff_over_fr, s.cr_over_cf)
                    .map_err(|e| AppError::config("source", e.to_string()))?,
            ),
            SourceKind::Measured => {
                let file = s.profile.as_ref().ok_or_else(|| AppError::config("source.profile", "missing"))?;
                SourceModel::Measured(formats::read_profile(file, s.power_w, s.absorptivity)?)
            }
            SourceKind::Gaussian => {
                SourceModel::Measured(MeasuredProfile::gaussian(1e-3 * s.d4sigma_um, s.power_w, s.absorptivity)?)
            }
            SourceKind::Uniform => SourceModel::Uniform(s.flux_w_mm2),
        };
        Ok(HeatSource { model, path })
    }

    /// Builds the simulation and metric settings, reading referenced files.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let sc = &self.scan;
        let path = ScanPath::along_z(sc.x_mm, sc.start_mm, sc.length_mm, sc.speed_mm_s)
            .map_err(|e| AppError::config("scan", e.to_string()))?;
        let g = &self.grid;
        let domain = DomainBox::new(g.width_mm, g.depth_mm, g.length_mm)?;
        let grid = GridSpec {
            domain,
            coarse_spacing: g.coarse_mm,
            fine_spacing: if g.refine { g.fine_mm } else { g.coarse_mm },
            band: g.refine.then_some(FineBand {
                x: (g.band_x_mm[0], g.band_x_mm[1]),
                y: (g.band_y_mm[0], g.band_y_mm[1]),
                z: (g.band_z_mm[0], g.band_z_mm[1]),
            }),
            growth: g.growth,
        };
        let s = &self.solver;
        let m = &self.metrics;
        let mut at_times = s.snapshot_times_s.clone();
        at_times.extend(s.snapshot_travels_mm.iter().map(|&d| path.time_at_travel(d)));
        at_times.push(path.time_at_travel(m.travel_mm));
        at_times.sort_by(f64::total_cmp);
        at_times.dedup();
        let simulation = SimulationConfig {
            material: self.material()?,
            source: self.source(path)?,
            grid,
            initial_temperature: s.initial_c,
            ambient_temperature: s.ambient_c,
            emissivity: s.emissivity,
            stefan_boltzmann: s.stefan_boltzmann_w_mm2_k4,
            time_step: match s.time_step_s {
                TimeStepKey::Seconds(dt) => TimeStep::Fixed(dt),
                TimeStepKey::Keyword(AutoKeyword::Auto) => TimeStep::Auto,
            },
            end_time: s.end_time_s.unwrap_or_else(|| path.end_time()),
            newton: NewtonSettings {
                tolerance: s.newton_tolerance,
                max_iterations: s.max_iterations,
                max_step_halvings: s.max_step_halvings,
            },
            snapshots: SnapshotPlan {
                every: s.snapshot_every,
                at_times,
            },
        };
        simulation.validate()?;
        let cooling = if m.cooling {
            Some(CoolingRateDefinition::new(m.cooling_high_c, m.cooling_low_c, sc.speed_mm_s)?)
        } else {
            None
        };
        let plan = MetricPlan {
            isotherm: m.isotherm_c,
            cooling,
            travel: m.travel_mm,
            settings: MetricSettings {
                stations: m.stations,
                samples: m.samples,
                tolerance: m.tolerance_mm,
                contour_samples: m.contour_samples,
                quasi_steady_travel: m.quasi_steady_travel_mm,
            },
        };
        plan.settings.validate()?;
        Ok(Resolved { simulation, metrics: plan })
    }
}

/// How snapshots are measured.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPlan {
    pub isotherm: f64,
    pub cooling: Option<CoolingRateDefinition>,
    /// Beam travel of the objective snapshot, mm.
    pub travel: f64,
    pub settings: MetricSettings,
}

impl MetricPlan {
    pub fn measure(&self, field: &meltpool_core::grid::TemperatureField, path: &ScanPath) -> meltpool_core::Result<MeltPoolMetrics> {
        metrics::measure(field, field.time(), path, self.isotherm, self.cooling.as_ref(), &self.settings)
    }

    /// Simulates up to the objective snapshot only and measures it. Steps
    /// are identical to a full run, so the metrics are too.
    pub fn evaluate(&self, cfg: &SimulationConfig) -> meltpool_core::Result<MeltPoolMetrics> {
        let (cfg, t) = self.truncated(cfg);
        let out = solver::simulate(&cfg)?;
        self.measure(out.snapshot_near(t), &cfg.source.path)
    }

    fn truncated(&self, cfg: &SimulationConfig) -> (SimulationConfig, f64) {
        let t = cfg.source.path.time_at_travel(self.travel);
        let mut c = cfg.clone();
        c.end_time = c.end_time.min(t);
        c.snapshots = SnapshotPlan {
            every: 0,
            at_times: vec![t],
        };
        (c, t)
    }

    /// Metrics of the objective snapshot of a finished run.
    pub fn objective_snapshot(&self, out: &SimulationOutput, path: &ScanPath) -> meltpool_core::Result<MeltPoolMetrics> {
        self.measure(out.snapshot_near(path.time_at_travel(self.travel)), path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub simulation: SimulationConfig,
    pub metrics: MetricPlan,
}
