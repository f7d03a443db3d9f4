//! Temperature-dependent material description.
//!
//! Property curves are piecewise linear in temperature. Latent heat is
//! smeared over the melting interval by a smooth phase-change function, which
//! folds into an apparent volumetric heat capacity. Conductivity can be scaled
//! per axis above the last measured temperature to mimic convective transport
//! inside the pool.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// What a [`PropertyCurve`] returns outside its knot range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extrapolation {
    /// Keep the nearest knot value.
    #[default]
    HoldLast,
    /// Continue the slope of the outermost segment.
    LinearExtend,
}

/// Piecewise-linear property curve `value(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCurve {
    knots: Vec<(f64, f64)>,
    extrapolation: Extrapolation,
    /// Antiderivative at each knot, measured from the first knot.
    cumulative: Vec<f64>,
}

impl PropertyCurve {
    pub fn new(knots: Vec<(f64, f64)>, extrapolation: Extrapolation) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::invalid("knots", "at least two knots are required"));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::invalid("knots", "knots must be finite"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(
                "knots",
                "knot temperatures must be strictly increasing",
            ));
        }
        let mut cumulative = Vec::with_capacity(knots.len());
        cumulative.push(0.0);
        for w in knots.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0));
        }
        Ok(Self {
            knots,
            extrapolation,
            cumulative,
        })
    }

    /// A curve that is `value` at every temperature.
    pub fn constant(value: f64) -> Self {
        Self::new(vec![(0.0, value), (1.0, value)], Extrapolation::HoldLast)
            .expect("two finite increasing knots")
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    pub fn with_extrapolation(mut self, extrapolation: Extrapolation) -> Self {
        self.extrapolation = extrapolation;
        self
    }

    /// Multiplies every knot value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let knots = self.knots.iter().map(|&(t, v)| (t, v * factor)).collect();
        Self::new(knots, self.extrapolation).expect("scaling keeps knots valid")
    }

    pub fn min_value(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(f64::INFINITY, f64::min)
    }

    /// Index of the segment used for `t` (clamped to the outer segments).
    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        let upper = self.knots.partition_point(|k| k.0 <= t);
        upper.clamp(1, n - 1) - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len();
        let (t0, v0) = self.knots[0];
        let (tn, vn) = self.knots[n - 1];
        if t <= t0 || t >= tn {
            let at_end = t >= tn;
            return match self.extrapolation {
                Extrapolation::HoldLast => {
                    if at_end {
                        vn
                    } else {
                        v0
                    }
                }
                Extrapolation::LinearExtend => {
                    if t == t0 {
                        v0
                    } else if t == tn {
                        vn
                    } else {
                        let s = if at_end { n - 2 } else { 0 };
                        self.lerp(s, t)
                    }
                }
            };
        }
        let s = self.segment(t);
        if t == self.knots[s].0 {
            return self.knots[s].1;
        }
        self.lerp(s, t)
    }

    fn lerp(&self, s: usize, t: f64) -> f64 {
        let (ta, va) = self.knots[s];
        let (tb, vb) = self.knots[s + 1];
        va + (vb - va) * (t - ta) / (tb - ta)
    }

    /// `d value / dT`; at an interior knot the slope of the segment above.
    pub fn slope(&self, t: f64) -> f64 {
        let n = self.knots.len();
        let outside = t < self.knots[0].0 || t >= self.knots[n - 1].0;
        if outside && self.extrapolation == Extrapolation::HoldLast {
            return 0.0;
        }
        let s = self.segment(t);
        let (ta, va) = self.knots[s];
        let (tb, vb) = self.knots[s + 1];
        (vb - va) / (tb - ta)
    }

    /// Antiderivative `∫_{T_first}^{t} value(s) ds`, exact for the
    /// piecewise-linear curve and its extrapolation.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let n = self.knots.len();
        let (t0, _) = self.knots[0];
        let (tn, _) = self.knots[n - 1];
        if t < t0 {
            // ∫_{t0}^{t} = −∫_t^{t0}
            let vt = self.eval(t);
            let v0 = self.knots[0].1;
            return -0.5 * (vt + v0) * (t0 - t);
        }
        if t > tn {
            let vt = self.eval(t);
            let vn = self.knots[n - 1].1;
            return self.cumulative[n - 1] + 0.5 * (vn + vt) * (t - tn);
        }
        let s = self.segment(t);
        let (ta, va) = self.knots[s];
        let vt = self.eval(t);
        self.cumulative[s] + 0.5 * (va + vt) * (t - ta)
    }

    /// `∫_a^b value(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }
}

/// Regularized solid-to-liquid transition between solidus and liquidus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseChangeModel {
    pub solidus: f64,
    pub liquidus: f64,
    /// Dimensionless sharpness of the transition.
    pub sharpness: f64,
}

impl PhaseChangeModel {
    /// Sharpness for which 99.5 % of the transition lies inside the interval.
    pub const DEFAULT_SHARPNESS: f64 = 3.0;

    pub fn new(solidus: f64, liquidus: f64, sharpness: f64) -> Result<Self> {
        let m = Self {
            solidus,
            liquidus,
            sharpness,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.solidus < self.liquidus) || !self.solidus.is_finite() || !self.liquidus.is_finite()
        {
            return Err(Error::invalid("phase_change", "solidus must be below liquidus"));
        }
        if !(self.sharpness > 0.0) || !self.sharpness.is_finite() {
            return Err(Error::invalid("phase_change.sharpness", "must be positive"));
        }
        Ok(())
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.solidus + self.liquidus)
    }

    fn gain(&self) -> f64 {
        2.0 * self.sharpness / (self.liquidus - self.solidus)
    }

    /// Liquid fraction in `[0, 1]`.
    ///
    /// `½(tanh u + 1)` is evaluated as the logistic `1 / (1 + e^(−2u))`,
    /// which keeps full relative precision deep in the solid tail.
    pub fn fraction(&self, t: f64) -> f64 {
        let u = self.gain() * (t - self.midpoint());
        let e = math::exp(-2.0 * u.abs());
        let f = if u >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
        f.clamp(0.0, 1.0)
    }

    /// `d fraction / dT` in 1/°C.
    pub fn derivative(&self, t: f64) -> f64 {
        let g = self.gain();
        let e = math::exp(-2.0 * (g * (t - self.midpoint())).abs());
        2.0 * g * e / ((1.0 + e) * (1.0 + e))
    }
}

/// Per-axis conductivity scaling that ramps in above the last measured
/// conductivity temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyModel {
    /// Below this temperature the scaling is 1.
    pub break_temperature: f64,
    /// Above this temperature the scaling is `theta`.
    pub full_temperature: f64,
    /// Scaling factors along (x transverse, y depth, z scan).
    pub theta: [f64; 3],
}

impl AnisotropyModel {
    pub const DEFAULT_BREAK: f64 = 871.0;

    pub fn new(break_temperature: f64, full_temperature: f64, theta: [f64; 3]) -> Result<Self> {
        let m = Self {
            break_temperature,
            full_temperature,
            theta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.break_temperature < self.full_temperature) {
            return Err(Error::invalid(
                "anisotropy",
                "break temperature must be below the full-scaling temperature",
            ));
        }
        if self.theta.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::invalid("anisotropy.theta", "scaling factors must be positive"));
        }
        Ok(())
    }

    pub fn scaling(&self, t: f64) -> [f64; 3] {
        if t <= self.break_temperature {
            return [1.0; 3];
        }
        if t >= self.full_temperature {
            return self.theta;
        }
        let w = (t - self.break_temperature) / (self.full_temperature - self.break_temperature);
        self.theta.map(|th| 1.0 + (th - 1.0) * w)
    }

    /// `d scaling / dT`.
    pub fn scaling_derivative(&self, t: f64) -> [f64; 3] {
        if t < self.break_temperature || t >= self.full_temperature {
            return [0.0; 3];
        }
        let span = self.full_temperature - self.break_temperature;
        self.theta.map(|th| (th - 1.0) / span)
    }
}

/// Complete thermal description of the plate material.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    /// kg/mm³
    pub density: f64,
    /// J/kg
    pub latent_heat: f64,
    /// W/(mm·°C)
    pub conductivity: PropertyCurve,
    /// J/(kg·°C)
    pub capacity: PropertyCurve,
    pub phase_change: PhaseChangeModel,
    pub anisotropy: Option<AnisotropyModel>,
}

impl MaterialModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0) || !self.density.is_finite() {
            return Err(Error::invalid("material.density", "must be positive"));
        }
        if !(self.latent_heat >= 0.0) || !self.latent_heat.is_finite() {
            return Err(Error::invalid("material.latent_heat", "must be non-negative"));
        }
        if !(self.conductivity.min_value() > 0.0) {
            return Err(Error::invalid("material.conductivity", "values must be positive"));
        }
        if !(self.capacity.min_value() > 0.0) {
            return Err(Error::invalid("material.capacity", "values must be positive"));
        }
        if self.conductivity.extrapolation() == Extrapolation::LinearExtend
            || self.capacity.extrapolation() == Extrapolation::LinearExtend
        {
            // A falling end segment would eventually go negative.
            for c in [&self.conductivity, &self.capacity] {
                let k = c.knots();
                let n = k.len();
                if c.extrapolation() == Extrapolation::LinearExtend
                    && (k[1].1 < k[0].1 || k[n - 1].1 < k[n - 2].1)
                {
                    return Err(Error::invalid(
                        "material",
                        "linear extension of a decreasing end segment can turn negative",
                    ));
                }
            }
        }
        self.phase_change.validate()?;
        if let Some(a) = &self.anisotropy {
            a.validate()?;
        }
        Ok(())
    }

    /// `ρ c(T)` in J/(mm³·°C).
    pub fn volumetric_capacity(&self, t: f64) -> f64 {
        self.density * self.capacity.eval(t)
    }

    /// `ρ c(T) + ρ L df_pc/dT` in J/(mm³·°C).
    pub fn apparent_volumetric_capacity(&self, t: f64) -> f64 {
        self.density * (self.capacity.eval(t) + self.latent_heat * self.phase_change.derivative(t))
    }

    /// Volumetric enthalpy `ρ ∫c dT + ρ L f_pc(T)` in J/mm³, relative to the
    /// first capacity knot. Its derivative is the apparent capacity.
    pub fn enthalpy(&self, t: f64) -> f64 {
        self.density * (self.capacity.antiderivative(t) + self.latent_heat * self.phase_change.fraction(t))
    }

    /// Inverse of [`enthalpy`](Self::enthalpy): the temperature whose
    /// enthalpy is `h`, found by bracketed Newton iteration from `guess`.
    pub fn temperature_at_enthalpy(&self, h: f64, guess: f64) -> f64 {
        let (mut a, mut b) = (guess, guess);
        let mut step = 1.0;
        while self.enthalpy(a) > h {
            a -= step;
            step *= 2.0;
        }
        step = 1.0;
        while self.enthalpy(b) < h {
            b += step;
            step *= 2.0;
        }
        let mut t = guess.clamp(a, b);
        for _ in 0..100 {
            let r = self.enthalpy(t) - h;
            if r == 0.0 {
                return t;
            }
            if r < 0.0 {
                a = t;
            } else {
                b = t;
            }
            let c = self.apparent_volumetric_capacity(t);
            let mut next = t - r / c;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - t).abs() <= 1e-12 * (1.0 + t.abs()) || b - a <= 1e-12 * (1.0 + t.abs()) {
                return next;
            }
            t = next;
        }
        t
    }

    /// Diagonal conductivity `(k_x, k_y, k_z)` in W/(mm·°C).
    pub fn conductivity_tensor(&self, t: f64) -> [f64; 3] {
        let k = self.conductivity.eval(t);
        match &self.anisotropy {
            None => [k; 3],
            Some(a) => a.scaling(t).map(|s| k * s),
        }
    }

    /// Temperature derivative of [`conductivity_tensor`](Self::conductivity_tensor).
    pub fn conductivity_tensor_derivative(&self, t: f64) -> [f64; 3] {
        let dk = self.conductivity.slope(t);
        match &self.anisotropy {
            None => [dk; 3],
            Some(a) => {
                let k = self.conductivity.eval(t);
                let s = a.scaling(t);
                let ds = a.scaling_derivative(t);
                [0, 1, 2].map(|d| dk * s[d] + k * ds[d])
            }
        }
    }

    /// Constant-property material with no latent heat, used by the analytic
    /// verification problems.
    pub fn constant(density: f64, capacity: f64, conductivity: f64) -> Self {
        Self {
            density,
            latent_heat: 0.0,
            conductivity: PropertyCurve::constant(conductivity),
            capacity: PropertyCurve::constant(capacity),
            phase_change: PhaseChangeModel {
                solidus: 1290.0,
                liquidus: 1350.0,
                sharpness: PhaseChangeModel::DEFAULT_SHARPNESS,
            },
            anisotropy: None,
        }
    }

    /// IN625 with handbook property tables.
    ///
    /// Conductivity is tabulated up to 871 °C and heat capacity up to
    /// 1093 °C; both hold their last value beyond. The tables are ordinary
    /// input data and can be replaced from CSV.
    pub fn in625() -> Self {
        Self {
            density: IN625_DENSITY,
            latent_heat: IN625_LATENT_HEAT,
            conductivity: in625_conductivity(),
            capacity: in625_capacity(),
            phase_change: PhaseChangeModel {
                solidus: IN625_SOLIDUS,
                liquidus: IN625_LIQUIDUS,
                sharpness: PhaseChangeModel::DEFAULT_SHARPNESS,
            },
            anisotropy: None,
        }
    }
}

/// kg/mm³
pub const IN625_DENSITY: f64 = 8.44e-6;
/// J/kg
pub const IN625_LATENT_HEAT: f64 = 2.8e5;
pub const IN625_SOLIDUS: f64 = 1290.0;
pub const IN625_LIQUIDUS: f64 = 1350.0;

/// IN625 thermal conductivity, W/(mm·°C), handbook values to 871 °C.
pub fn in625_conductivity() -> PropertyCurve {
    let table = [
        (21.0, 9.8),
        (38.0, 10.1),
        (93.0, 10.8),
        (204.0, 12.5),
        (316.0, 14.1),
        (427.0, 15.7),
        (538.0, 17.5),
        (649.0, 19.0),
        (760.0, 20.8),
        (871.0, 22.8),
    ];
    PropertyCurve::new(
        table.iter().map(|&(t, k)| (t, k * 1e-3)).collect(),
        Extrapolation::HoldLast,
    )
    .expect("valid table")
}

/// IN625 specific heat, J/(kg·°C), handbook values to 1093 °C.
pub fn in625_capacity() -> PropertyCurve {
    let table = [
        (21.0, 410.0),
        (93.0, 427.0),
        (204.0, 456.0),
        (316.0, 481.0),
        (427.0, 511.0),
        (538.0, 536.0),
        (649.0, 565.0),
        (760.0, 590.0),
        (871.0, 620.0),
        (982.0, 645.0),
        (1093.0, 670.0),
    ];
    PropertyCurve::new(table.to_vec(), Extrapolation::HoldLast).expect("valid table")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(extrap: Extrapolation) -> PropertyCurve {
        PropertyCurve::new(vec![(0.0, 10.0), (100.0, 20.0)], extrap).unwrap()
    }

    fn pc() -> PhaseChangeModel {
        PhaseChangeModel::new(1290.0, 1350.0, 3.0).unwrap()
    }

    #[test]
    fn curve_examples() {
        assert_eq!(line(Extrapolation::HoldLast).eval(50.0), 15.0);
        assert_eq!(line(Extrapolation::HoldLast).eval(200.0), 20.0);
        assert_eq!(line(Extrapolation::LinearExtend).eval(200.0), 30.0);
        assert_eq!(line(Extrapolation::LinearExtend).eval(-100.0), 0.0);
    }

    #[test]
    fn curve_rejects_bad_knots() {
        assert!(PropertyCurve::new(vec![(0.0, 1.0)], Extrapolation::HoldLast).is_err());
        assert!(PropertyCurve::new(vec![(0.0, 1.0), (0.0, 2.0)], Extrapolation::HoldLast).is_err());
        assert!(PropertyCurve::new(vec![(1.0, 1.0), (0.0, 2.0)], Extrapolation::HoldLast).is_err());
    }

    #[test]
    fn antiderivative_matches_trapezoid_pieces() {
        let c = PropertyCurve::new(
            vec![(0.0, 1.0), (10.0, 3.0), (20.0, 2.0)],
            Extrapolation::HoldLast,
        )
        .unwrap();
        assert!((c.integral(0.0, 20.0) - (20.0 + 25.0)).abs() < 1e-12);
        assert!((c.integral(5.0, 15.0) - (0.5 * (2.0 + 3.0) * 5.0 + 0.5 * (3.0 + 2.5) * 5.0)).abs() < 1e-12);
        // hold-last tails
        assert!((c.integral(20.0, 30.0) - 20.0).abs() < 1e-12);
        assert!((c.integral(-10.0, 0.0) - 10.0).abs() < 1e-12);
        let l = c.clone().with_extrapolation(Extrapolation::LinearExtend);
        // slope −0.1 beyond 20: value 2 → 1 over [20, 30]
        assert!((l.integral(20.0, 30.0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn phase_fraction_examples() {
        let p = pc();
        assert_eq!(p.fraction(1320.0), 0.5);
        for s in [0.5, 1.0, 3.0, 10.0] {
            let q = PhaseChangeModel::new(1290.0, 1350.0, s).unwrap();
            assert_eq!(q.fraction(1320.0), 0.5);
        }
        // ½(tanh(−3)+1)
        assert!((p.fraction(1290.0) - 0.002_472_623_156_634_657).abs() < 1e-12);
        assert!((p.fraction(1350.0) - 0.997_527_376_843_365_3).abs() < 1e-12);
    }

    #[test]
    fn phase_derivative_examples() {
        let p = pc();
        assert!((p.derivative(1320.0) - 0.05).abs() < 1e-15);
        assert!(p.derivative(20.0) < 1e-30);
        let h = 0.01;
        let fd = (p.fraction(1300.0 + h) - p.fraction(1300.0 - h)) / (2.0 * h);
        assert!(((p.derivative(1300.0) - fd) / fd).abs() < 1e-6);
    }

    #[test]
    fn default_sharpness_keeps_bulk_inside_interval() {
        let p = pc();
        assert!(p.fraction(1350.0) - p.fraction(1290.0) >= 0.995);
    }

    #[test]
    fn apparent_capacity_examples() {
        let mut m = MaterialModel::in625();
        let base = m.density * m.capacity.eval(20.0);
        assert_eq!(m.apparent_volumetric_capacity(20.0), base);
        let expected = m.density * m.capacity.eval(1320.0) + 8.44e-6 * 2.8e5 * 0.05;
        assert!((m.apparent_volumetric_capacity(1320.0) - expected).abs() < 1e-15);
        m.latent_heat = 0.0;
        for t in [20.0, 900.0, 1320.0, 2000.0] {
            assert_eq!(m.apparent_volumetric_capacity(t), m.volumetric_capacity(t));
        }
    }

    #[test]
    fn conductivity_tensor_examples() {
        let mut m = MaterialModel::in625();
        for t in [20.0, 500.0, 1500.0] {
            let k = m.conductivity.eval(t);
            assert_eq!(m.conductivity_tensor(t), [k, k, k]);
        }
        m.anisotropy = Some(AnisotropyModel::new(871.0, 1290.0, [1.0, 1.4, 0.9]).unwrap());
        let k = m.conductivity.eval(1300.0);
        assert_eq!(m.conductivity_tensor(1300.0), [k, 1.4 * k, 0.9 * k]);
        let mid = 0.5 * (871.0 + 1290.0);
        let k = m.conductivity.eval(mid);
        let got = m.conductivity_tensor(mid);
        for (g, th) in got.iter().zip([1.0, 1.4, 0.9]) {
            assert!((g - k * (1.0 + th) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn enthalpy_derivative_is_apparent_capacity() {
        let m = MaterialModel::in625();
        for t in [25.0, 300.0, 871.0 + 0.3, 1300.0, 1320.0, 1349.0, 1600.0] {
            let h = 1e-3;
            let fd = (m.enthalpy(t + h) - m.enthalpy(t - h)) / (2.0 * h);
            let ac = m.apparent_volumetric_capacity(t);
            assert!(((fd - ac) / ac).abs() < 1e-6, "t = {t}: {fd} vs {ac}");
        }
    }

    #[test]
    fn material_validation() {
        let mut m = MaterialModel::in625();
        assert!(m.validate().is_ok());
        m.density = -1.0;
        assert!(m.validate().is_err());
        let mut m = MaterialModel::in625();
        m.phase_change.sharpness = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn conductivity_derivative_matches_difference() {
        let mut m = MaterialModel::in625();
        m.anisotropy = Some(AnisotropyModel::new(871.0, 1290.0, [1.4, 0.9, 1.0]).unwrap());
        for t in [50.0, 300.0, 700.0, 900.0, 1100.0, 1300.0, 1500.0] {
            let h = 1e-4;
            let a = m.conductivity_tensor(t + h);
            let b = m.conductivity_tensor(t - h);
            let d = m.conductivity_tensor_derivative(t);
            for ax in 0..3 {
                let fd = (a[ax] - b[ax]) / (2.0 * h);
                assert!((fd - d[ax]).abs() <= 1e-9 + 1e-6 * d[ax].abs(), "{t} {ax} {fd} {}", d[ax]);
            }
        }
    }

    proptest! {
        #[test]
        fn fraction_bounded_monotone_symmetric(a in 0.0f64..3000.0, d in 0.0f64..500.0, s in 0.1f64..20.0) {
            let p = PhaseChangeModel::new(1290.0, 1350.0, s).unwrap();
            let fa = p.fraction(a);
            prop_assert!((0.0..=1.0).contains(&fa));
            prop_assert!(p.fraction(a + d) >= fa);
            let mid = p.midpoint();
            prop_assert!((p.fraction(mid + d) + p.fraction(mid - d) - 1.0).abs() < 1e-12);
            prop_assert!(p.derivative(a) >= 0.0);
            prop_assert!(p.derivative(a) <= p.derivative(mid));
        }

        #[test]
        fn derivative_matches_central_difference(t in 1260.0f64..1380.0) {
            let p = pc();
            let h = 0.01;
            let fd = (p.fraction(t + h) - p.fraction(t - h)) / (2.0 * h);
            let d = p.derivative(t);
            prop_assert!(((d - fd) / d).abs() < 1e-6, "t={} d={} fd={}", t, d, fd);
        }

        #[test]
        fn curve_interpolation_stays_between_knots(t in 21.0f64..871.0) {
            let c = in625_conductivity();
            let v = c.eval(t);
            let k = c.knots();
            let i = k.partition_point(|p| p.0 <= t).clamp(1, k.len() - 1);
            let (lo, hi) = (k[i - 1].1.min(k[i].1), k[i - 1].1.max(k[i].1));
            prop_assert!(v >= lo && v <= hi);
        }

        #[test]
        fn enthalpy_inverse_round_trips(t in -50.0f64..5000.0, g in -500.0f64..500.0) {
            let m = MaterialModel::in625();
            let back = m.temperature_at_enthalpy(m.enthalpy(t), t + g);
            prop_assert!((back - t).abs() < 1e-8 * (1.0 + t.abs()), "t={} back={}", t, back);
        }

        #[test]
        fn tensor_positive_and_capacity_dominates(t in -100.0f64..4000.0) {
            let mut m = MaterialModel::in625();
            m.anisotropy = Some(AnisotropyModel::new(871.0, 1290.0, [1.0, 1.4, 0.9]).unwrap());
            prop_assert!(m.conductivity_tensor(t).iter().all(|k| *k > 0.0));
            prop_assert!(m.apparent_volumetric_capacity(t) >= m.volumetric_capacity(t));
        }
    }

    #[test]
    fn knot_values_reproduced_exactly() {
        for c in [in625_conductivity(), in625_capacity()] {
            for &(t, v) in c.knots() {
                assert_eq!(c.eval(t), v);
            }
        }
        let l = in625_capacity().with_extrapolation(Extrapolation::LinearExtend);
        for &(t, v) in l.knots() {
            assert_eq!(l.eval(t), v);
        }
    }
}
