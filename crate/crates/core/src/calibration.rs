//! One-at-a-time parameter sweeps and bounded Nelder–Mead calibration of
//! model parameters against target melt-pool metrics.
//!
//! Forward evaluations are supplied by the caller as a closure from a
//! [`SimulationConfig`] to [`MeltPoolMetrics`], so the same machinery drives
//! full benchmark cases, small test problems and synthetic objectives.

use alloc::vec;
use alloc::vec::Vec;

use crate::heat_source::{resolve_fractions, SourceModel};
use crate::metrics::MeltPoolMetrics;
use crate::par;
use crate::solver::SimulationConfig;
use crate::{Error, Result};

/// A tunable model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parameter {
    /// Absorptivity η.
    Absorptivity,
    /// Emissivity ε.
    Emissivity,
    /// Goldak power ratio `f_f/f_r`.
    FrontRearRatio,
    /// Goldak radius ratio `c_r/c_f`.
    RearFrontRadiusRatio,
    /// Sharpness of the phase-change function.
    Sharpness,
    /// Conductivity scaling along the scan.
    ThetaScan,
    /// Conductivity scaling across the track.
    ThetaTransverse,
    /// Conductivity scaling into the depth.
    ThetaDepth,
}

impl Parameter {
    pub const ALL: [Parameter; 8] = [
        Parameter::Absorptivity,
        Parameter::Emissivity,
        Parameter::FrontRearRatio,
        Parameter::RearFrontRadiusRatio,
        Parameter::Sharpness,
        Parameter::ThetaScan,
        Parameter::ThetaTransverse,
        Parameter::ThetaDepth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Absorptivity => "absorptivity",
            Parameter::Emissivity => "emissivity",
            Parameter::FrontRearRatio => "ff_over_fr",
            Parameter::RearFrontRadiusRatio => "cr_over_cf",
            Parameter::Sharpness => "sharpness",
            Parameter::ThetaScan => "theta_scan",
            Parameter::ThetaTransverse => "theta_transverse",
            Parameter::ThetaDepth => "theta_depth",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Physically admissible range used when no bounds are given.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Parameter::Absorptivity => (0.01, 1.0),
            Parameter::Emissivity => (0.0, 1.0),
            Parameter::FrontRearRatio => (0.01, 100.0),
            Parameter::RearFrontRadiusRatio => (0.05, 20.0),
            Parameter::Sharpness => (0.5, 20.0),
            Parameter::ThetaScan | Parameter::ThetaTransverse | Parameter::ThetaDepth => (0.25, 4.0),
        }
    }

    /// Grid axis of an anisotropy factor (x transverse, y depth, z scan).
    fn theta_axis(self) -> Option<usize> {
        match self {
            Parameter::ThetaTransverse => Some(0),
            Parameter::ThetaDepth => Some(1),
            Parameter::ThetaScan => Some(2),
            _ => None,
        }
    }

    /// Current value in `cfg`.
    pub fn read(self, cfg: &SimulationConfig) -> Result<f64> {
        if let Some(axis) = self.theta_axis() {
            return cfg
                .material
                .anisotropy
                .map(|a| a.theta[axis])
                .ok_or_else(|| Error::invalid("material.anisotropy", "isotropic model has no scaling factors"));
        }
        let goldak = || match &cfg.source.model {
            SourceModel::Goldak(g) => Ok(*g),
            _ => Err(Error::invalid("source", "parameter requires a Goldak source")),
        };
        match self {
            Parameter::Absorptivity => match &cfg.source.model {
                SourceModel::Goldak(g) => Ok(g.absorptivity),
                SourceModel::Measured(m) => Ok(m.absorptivity()),
                SourceModel::Uniform(_) => Err(Error::invalid("source", "uniform load has no absorptivity")),
            },
            Parameter::Emissivity => Ok(cfg.emissivity),
            Parameter::FrontRearRatio => goldak().map(|g| g.front_fraction / g.rear_fraction),
            Parameter::RearFrontRadiusRatio => goldak().map(|g| g.rear_radius / g.front_radius),
            Parameter::Sharpness => Ok(cfg.material.phase_change.sharpness),
            _ => unreachable!("anisotropy handled above"),
        }
    }

    /// Writes `value` into `cfg`.
    pub fn apply(self, cfg: &mut SimulationConfig, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::invalid("parameter", "value must be finite"));
        }
        if let Some(axis) = self.theta_axis() {
            let a = cfg
                .material
                .anisotropy
                .as_mut()
                .ok_or_else(|| Error::invalid("material.anisotropy", "isotropic model has no scaling factors"))?;
            a.theta[axis] = value;
            return a.validate();
        }
        match self {
            Parameter::Absorptivity => match &mut cfg.source.model {
                SourceModel::Goldak(g) => g.absorptivity = value,
                SourceModel::Measured(m) => *m = m.with_power(m.power(), value),
                SourceModel::Uniform(_) => {
                    return Err(Error::invalid("source", "uniform load has no absorptivity"));
                }
            },
            Parameter::Emissivity => cfg.emissivity = value,
            Parameter::FrontRearRatio | Parameter::RearFrontRadiusRatio => {
                let SourceModel::Goldak(g) = &mut cfg.source.model else {
                    return Err(Error::invalid("source", "parameter requires a Goldak source"));
                };
                if self == Parameter::FrontRearRatio {
                    let (f, r) = resolve_fractions(value)?;
                    g.front_fraction = f;
                    g.rear_fraction = r;
                } else {
                    g.rear_radius = g.front_radius * value;
                }
            }
            Parameter::Sharpness => cfg.material.phase_change.sharpness = value,
            _ => unreachable!("anisotropy handled above"),
        }
        cfg.validate()
    }
}

/// A parameter with its search bounds and current value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterHandle {
    pub parameter: Parameter,
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
}

impl ParameterHandle {
    pub fn new(parameter: Parameter, lower: f64, upper: f64, value: f64) -> Result<Self> {
        let h = Self {
            parameter,
            lower,
            upper,
            value,
        };
        h.validate()?;
        Ok(h)
    }

    /// Handle on the value currently in `cfg`, with default bounds.
    pub fn from_config(parameter: Parameter, cfg: &SimulationConfig) -> Result<Self> {
        let (lo, hi) = parameter.default_bounds();
        Self::new(parameter, lo, hi, parameter.read(cfg)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::invalid("parameter.bounds", "need finite lower < upper"));
        }
        if !(self.value >= self.lower && self.value <= self.upper) {
            return Err(Error::invalid("parameter.value", "outside its bounds"));
        }
        Ok(())
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// Target metrics and weights, in the order length, width, depth, cooling
/// rate. A zero weight excludes a metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget {
    pub values: [f64; 4],
    pub weights: [f64; 4],
}

impl CalibrationTarget {
    pub const NAMES: [&'static str; 4] = ["length", "width", "depth", "cooling_rate"];

    /// Targets only the melt-pool length.
    pub fn length(value: f64) -> Self {
        Self {
            values: [value, 0.0, 0.0, 0.0],
            weights: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("target.weights", "must be finite and non-negative"));
        }
        if self.weights.iter().all(|w| *w == 0.0) {
            return Err(Error::invalid("target.weights", "at least one weight must be positive"));
        }
        for (v, w) in self.values.iter().zip(&self.weights) {
            if *w > 0.0 && !(*v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("target.values", "weighted targets must be positive"));
            }
        }
        Ok(())
    }
}

fn metric_values(m: &MeltPoolMetrics) -> [Option<f64>; 4] {
    [Some(m.length), Some(m.width), Some(m.depth), m.cooling_rate]
}

/// `Σ wᵢ ((mᵢ − tᵢ)/tᵢ)²` over the weighted metrics.
pub fn objective(metrics: &MeltPoolMetrics, target: &CalibrationTarget) -> Result<f64> {
    objective_values(&metric_values(metrics), target)
}

/// [`objective`] on raw metric values; a missing weighted metric is an error.
pub fn objective_values(values: &[Option<f64>; 4], target: &CalibrationTarget) -> Result<f64> {
    target.validate()?;
    let mut sum = 0.0;
    for i in 0..4 {
        let w = target.weights[i];
        if w == 0.0 {
            continue;
        }
        let Some(m) = values[i] else {
            return Err(Error::invalid("metrics", "a weighted metric is unavailable"));
        };
        let r = (m - target.values[i]) / target.values[i];
        sum += w * r * r;
    }
    Ok(sum)
}

/// One row of a sensitivity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub result: Result<MeltPoolMetrics>,
}

/// Runs `evaluate` once per value of `handle.parameter`, all other settings
/// frozen at `cfg`. Failed rows keep their error and the sweep continues.
/// Rows come back in the order of `values`.
pub fn sensitivity_sweep<F>(cfg: &SimulationConfig, handle: &ParameterHandle, values: &[f64], evaluate: F) -> Vec<SweepRow>
where
    F: Fn(&SimulationConfig) -> Result<MeltPoolMetrics> + Sync + Send,
{
    par::map(values.len(), |i| {
        let value = values[i];
        let result = if handle.contains(value) {
            let mut c = cfg.clone();
            handle.parameter.apply(&mut c, value).and_then(|_| evaluate(&c))
        } else {
            Err(Error::invalid("sweep.value", "outside the parameter bounds"))
        };
        SweepRow { value, result }
    })
}

/// Nelder–Mead settings. Coefficients are the standard ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadSettings {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Initial simplex edge as a fraction of each bound range.
    pub initial_step: f64,
    /// Stop when objective values in the simplex differ by less than this.
    pub f_tolerance: f64,
    /// Stop when the simplex is smaller than this fraction of the bounds.
    pub x_tolerance: f64,
}

impl Default for NelderMeadSettings {
    fn default() -> Self {
        Self {
            budget: 60,
            initial_step: 0.1,
            f_tolerance: 1e-10,
            x_tolerance: 1e-6,
        }
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub point: Vec<f64>,
    /// `+∞` when the forward run failed.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub objective: f64,
    /// Every evaluation in order; the first is the seed.
    pub trace: Vec<Evaluation>,
    /// False when the budget ran out before the tolerances were met.
    pub converged: bool,
}

/// Bounded Nelder–Mead minimization of `f` from `seed`. Trial points are
/// clamped into `[lower, upper]`; failed evaluations count as `+∞`.
pub fn nelder_mead<F>(f: F, seed: &[f64], lower: &[f64], upper: &[f64], settings: &NelderMeadSettings) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = seed.len();
    if n == 0 {
        return Err(Error::invalid("calibration.parameters", "at least one free parameter is required"));
    }
    if lower.len() != n || upper.len() != n {
        return Err(Error::invalid("calibration.bounds", "one bound pair per parameter"));
    }
    if settings.budget == 0 {
        return Err(Error::invalid("calibration.budget", "must allow at least one evaluation"));
    }
    for i in 0..n {
        if !(lower[i] < upper[i]) || !(seed[i] >= lower[i] && seed[i] <= upper[i]) {
            return Err(Error::invalid("calibration.seed", "seed must lie inside finite bounds"));
        }
    }
    let clamp = |p: &mut [f64]| {
        for i in 0..n {
            p[i] = p[i].clamp(lower[i], upper[i]);
        }
    };
    let score = |p: &[f64]| {
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut trace: Vec<Evaluation> = Vec::new();

    // Seed first, then the other vertices concurrently.
    let mut simplex: Vec<Vec<f64>> = vec![seed.to_vec()];
    for i in 0..n.min(settings.budget - 1) {
        let mut v = seed.to_vec();
        let step = settings.initial_step * (upper[i] - lower[i]);
        v[i] = if seed[i] + step <= upper[i] { seed[i] + step } else { seed[i] - step };
        clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = par::map(simplex.len(), |i| score(&simplex[i]));
    for (p, v) in simplex.iter().zip(&values) {
        trace.push(Evaluation {
            point: p.clone(),
            objective: *v,
        });
    }
    let finish = |simplex: Vec<Vec<f64>>, values: Vec<f64>, trace: Vec<Evaluation>, converged: bool| {
        let best = (0..values.len()).fold(0, |b, i| if values[i] < values[b] { i } else { b });
        Minimum {
            point: simplex[best].clone(),
            objective: values[best],
            trace,
            converged,
        }
    };
    if simplex.len() < n + 1 {
        return Ok(finish(simplex, values, trace, false));
    }

    loop {
        // Order vertices; ties keep their insertion order.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(core::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = (1..=n)
            .map(|v| (0..n).map(|i| (simplex[v][i] - simplex[0][i]).abs() / (upper[i] - lower[i])).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= settings.f_tolerance) || size <= settings.x_tolerance {
            return Ok(finish(simplex, values, trace, true));
        }
        if trace.len() >= settings.budget {
            return Ok(finish(simplex, values, trace, false));
        }

        let centroid: Vec<f64> = (0..n).map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..n).map(|i| centroid[i] + t * (simplex[n][i] - centroid[i])).collect();
            clamp(&mut p);
            p
        };
        let eval = |p: Vec<f64>, trace: &mut Vec<Evaluation>| {
            let v = score(&p);
            trace.push(Evaluation {
                point: p.clone(),
                objective: v,
            });
            (p, v)
        };

        let (xr, fr) = eval(along(-1.0), &mut trace);
        if fr < values[0] {
            if trace.len() < settings.budget {
                let (xe, fe) = eval(along(-2.0), &mut trace);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                    continue;
                }
            }
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        if trace.len() >= settings.budget {
            if fr < values[n] {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        // Outside or inside contraction.
        let (xc, fc) = if fr < values[n] {
            eval(along(-0.5), &mut trace)
        } else {
            eval(along(0.5), &mut trace)
        };
        if fc < fr.min(values[n]) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = simplex[0].clone();
        let room = settings.budget.saturating_sub(trace.len()).min(n);
        let shrunk: Vec<Vec<f64>> = (1..=room)
            .map(|v| {
                let mut p: Vec<f64> = (0..n).map(|i| best[i] + 0.5 * (simplex[v][i] - best[i])).collect();
                clamp(&mut p);
                p
            })
            .collect();
        let fs: Vec<f64> = par::map(shrunk.len(), |i| score(&shrunk[i]));
        for (k, (p, v)) in shrunk.into_iter().zip(fs).enumerate() {
            trace.push(Evaluation {
                point: p.clone(),
                objective: v,
            });
            simplex[k + 1] = p;
            values[k + 1] = v;
        }
    }
}

/// Result of [`calibrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Free parameters with their best values.
    pub parameters: Vec<ParameterHandle>,
    pub objective: f64,
    pub trace: Vec<Evaluation>,
    pub converged: bool,
    /// `cfg` with the best values applied.
    pub config: SimulationConfig,
}

/// Fits the free parameters so that `evaluate(cfg)` approaches `target`,
/// starting from the values in `cfg`.
pub fn calibrate<F>(
    cfg: &SimulationConfig,
    free: &[ParameterHandle],
    target: &CalibrationTarget,
    settings: &NelderMeadSettings,
    evaluate: F,
) -> Result<Calibration>
where
    F: Fn(&SimulationConfig) -> Result<MeltPoolMetrics> + Sync + Send,
{
    target.validate()?;
    for h in free {
        h.validate()?;
    }
    let configure = |p: &[f64]| -> Result<SimulationConfig> {
        let mut c = cfg.clone();
        for (h, v) in free.iter().zip(p) {
            h.parameter.apply(&mut c, *v)?;
        }
        Ok(c)
    };
    let seed: Vec<f64> = free.iter().map(|h| h.value).collect();
    let lower: Vec<f64> = free.iter().map(|h| h.lower).collect();
    let upper: Vec<f64> = free.iter().map(|h| h.upper).collect();
    let min = nelder_mead(
        |p| {
            configure(p)
                .and_then(|c| evaluate(&c))
                .and_then(|m| objective(&m, target))
                .unwrap_or(f64::INFINITY)
        },
        &seed,
        &lower,
        &upper,
        settings,
    )?;
    let parameters = free
        .iter()
        .zip(&min.point)
        .map(|(h, v)| ParameterHandle { value: *v, ..*h })
        .collect();
    Ok(Calibration {
        config: configure(&min.point)?,
        parameters,
        objective: min.objective,
        trace: min.trace,
        converged: min.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn metrics(l: f64, w: f64, d: f64, cr: Option<f64>) -> MeltPoolMetrics {
        MeltPoolMetrics {
            length: l,
            width: w,
            depth: d,
            cooling_rate: cr,
            time: 0.0,
            isotherm: 1290.0,
            empty: false,
            widest_station: 0.0,
            deepest_station: 0.0,
        }
    }

    #[test]
    fn objective_examples() {
        let t = CalibrationTarget {
            values: [800.0, 120.0, 40.0, 1e6],
            weights: [1.0, 1.0, 1.0, 1.0],
        };
        assert_eq!(objective(&metrics(800.0, 120.0, 40.0, Some(1e6)), &t).unwrap(), 0.0);
        let one = CalibrationTarget::length(800.0);
        let v = objective(&metrics(880.0, 1.0, 1.0, None), &one).unwrap();
        assert!((v - 0.01).abs() < 1e-12);
        let mut w = one;
        w.weights[0] = 3.0;
        assert!((objective(&metrics(720.0, 1.0, 1.0, None), &w).unwrap() - 0.03).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_bad_targets() {
        let mut t = CalibrationTarget::length(0.0);
        assert!(objective(&metrics(1.0, 1.0, 1.0, None), &t).is_err());
        t.values[0] = 1.0;
        t.weights = [0.0; 4];
        assert!(objective(&metrics(1.0, 1.0, 1.0, None), &t).is_err());
        let cr = CalibrationTarget {
            values: [0.0, 0.0, 0.0, 1e6],
            weights: [0.0, 0.0, 0.0, 1.0],
        };
        assert!(objective(&metrics(1.0, 1.0, 1.0, None), &cr).is_err());
    }

    proptest! {
        #[test]
        fn objective_symmetric_and_scale_free(
            m in proptest::array::uniform4(1.0f64..1e6),
            t in proptest::array::uniform4(1.0f64..1e6),
            w in proptest::array::uniform4(0.0f64..2.0),
            s in 1e-3f64..1e3,
            perm in Just([2usize, 0, 3, 1]),
        ) {
            let mut w = w;
            w[0] += 0.1;
            let target = CalibrationTarget { values: t, weights: w };
            let base = objective_values(&m.map(Some), &target).unwrap();
            let scaled = objective_values(&m.map(|v| Some(v * s)), &CalibrationTarget { values: t.map(|v| v * s), weights: w }).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-9 * (1.0 + base));
            // Reordering metrics, targets and weights together.
            let pm: [f64; 4] = core::array::from_fn(|i| m[perm[i]]);
            let pt = CalibrationTarget {
                values: core::array::from_fn(|i| t[perm[i]]),
                weights: core::array::from_fn(|i| w[perm[i]]),
            };
            let permuted = objective_values(&pm.map(Some), &pt).unwrap();
            prop_assert!((base - permuted).abs() <= 1e-12 * (1.0 + base));
            prop_assert!(base >= 0.0);
        }
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |p: &[f64]| (p[0] - 0.3).powi(2) + 4.0 * (p[1] - 1.7).powi(2) + 0.5 * (p[0] - 0.3) * (p[1] - 1.7);
        let settings = NelderMeadSettings {
            budget: 400,
            f_tolerance: 1e-20,
            x_tolerance: 1e-9,
            ..Default::default()
        };
        let m = nelder_mead(f, &[0.8, 0.5], &[0.0, 0.0], &[1.0, 3.0], &settings).unwrap();
        assert!(m.converged);
        assert!(((m.point[0] - 0.3) / 0.3).abs() < 1e-4, "{:?}", m.point);
        assert!(((m.point[1] - 1.7) / 1.7).abs() < 1e-4, "{:?}", m.point);
    }

    #[test]
    fn nelder_mead_respects_bounds_and_seed() {
        // Unconstrained minimum lies outside the box.
        let f = |p: &[f64]| (p[0] + 2.0).powi(2) + (p[1] - 5.0).powi(2);
        let s = NelderMeadSettings::default();
        let m = nelder_mead(f, &[0.5, 0.5], &[0.0, 0.0], &[1.0, 1.0], &s).unwrap();
        assert!(m.trace.iter().all(|e| e.point.iter().all(|v| (0.0..=1.0).contains(v))));
        assert!(m.objective <= m.trace[0].objective);
        assert!((m.point[0] - 0.0).abs() < 1e-3 && (m.point[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_budget_exhaustion_is_flagged() {
        let f = |p: &[f64]| (p[0] - 0.7).powi(2);
        let s = NelderMeadSettings {
            budget: 3,
            ..Default::default()
        };
        let m = nelder_mead(f, &[0.1], &[0.0], &[1.0], &s).unwrap();
        assert!(!m.converged);
        assert!(m.trace.len() <= 3);
        assert!(m.objective <= m.trace[0].objective);
        let one = NelderMeadSettings {
            budget: 1,
            ..Default::default()
        };
        let m = nelder_mead(f, &[0.1], &[0.0], &[1.0], &one).unwrap();
        assert_eq!(m.trace.len(), 1);
        assert_eq!(m.point, vec![0.1]);
        assert!(nelder_mead(f, &[], &[], &[], &s).is_err());
        let zero = NelderMeadSettings {
            budget: 0,
            ..Default::default()
        };
        assert!(nelder_mead(f, &[0.1], &[0.0], &[1.0], &zero).is_err());
    }

    #[test]
    fn failures_count_as_infinite() {
        let f = |p: &[f64]| if p[0] > 0.5 { f64::NAN } else { (p[0] - 0.4).powi(2) };
        let m = nelder_mead(f, &[0.1], &[0.0], &[1.0], &NelderMeadSettings::default()).unwrap();
        assert!((m.point[0] - 0.4).abs() < 1e-3);
    }

    #[test]
    fn handles_validate_bounds() {
        assert!(ParameterHandle::new(Parameter::Absorptivity, 0.1, 0.5, 0.3).is_ok());
        assert!(ParameterHandle::new(Parameter::Absorptivity, 0.5, 0.1, 0.3).is_err());
        assert!(ParameterHandle::new(Parameter::Absorptivity, 0.1, 0.5, 0.6).is_err());
        assert!(ParameterHandle::new(Parameter::Absorptivity, 0.1, f64::INFINITY, 0.3).is_err());
        for p in Parameter::ALL {
            assert_eq!(Parameter::from_name(p.name()), Some(p));
        }
    }
}
