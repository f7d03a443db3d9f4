//! Absorbed surface heat flux of a moving laser.
//!
//! Two source shapes are supported: Goldak's double-elliptical Gaussian,
//! split into a front and a rear quadrant with their own radius and power
//! fraction, and a measured intensity map sampled on a regular grid and
//! normalized to the absorbed power. Both are evaluated in the frame of the
//! beam: `along` is the signed distance ahead of the beam center in the scan
//! direction, `transverse` the in-plane distance perpendicular to it.
//!
//! Power and absorptivity enter every flux only through the product `Q·η`,
//! which is computed once per evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, PI};
use crate::{Error, Result};

/// Straight scan on the top surface `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPath {
    /// `(x, y, z)` in mm; `y` must be 0.
    pub start: [f64; 3],
    /// Unit vector in the surface plane.
    pub direction: [f64; 3],
    /// mm/s
    pub speed: f64,
    /// s
    pub start_time: f64,
    /// mm
    pub length: f64,
}

impl ScanPath {
    pub fn new(
        start: [f64; 3],
        direction: [f64; 3],
        speed: f64,
        start_time: f64,
        length: f64,
    ) -> Result<Self> {
        let p = Self {
            start,
            direction,
            speed,
            start_time,
            length,
        };
        p.validate()?;
        Ok(p)
    }

    /// Scan along `+z` at transverse position `x`.
    pub fn along_z(x: f64, z_start: f64, length: f64, speed: f64) -> Result<Self> {
        Self::new([x, 0.0, z_start], [0.0, 0.0, 1.0], speed, 0.0, length)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0) || !self.speed.is_finite() {
            return Err(Error::invalid("path.speed", "must be positive"));
        }
        if !(self.length >= 0.0) || !self.length.is_finite() {
            return Err(Error::invalid("path.length", "must be non-negative"));
        }
        if self.start[1] != 0.0 || self.direction[1] != 0.0 {
            return Err(Error::invalid("path", "the scan must lie in the top surface y = 0"));
        }
        let [dx, _, dz] = self.direction;
        if (math::sqrt(dx * dx + dz * dz) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("path.direction", "must be a unit vector"));
        }
        Ok(())
    }

    /// Distance travelled at time `t`, uncapped.
    pub fn travel(&self, t: f64) -> f64 {
        self.speed * (t - self.start_time)
    }

    /// Time at which the beam has travelled `distance`.
    pub fn time_at_travel(&self, distance: f64) -> f64 {
        self.start_time + distance / self.speed
    }

    pub fn end_time(&self) -> f64 {
        self.time_at_travel(self.length)
    }

    /// Beam center at time `t`, held at the path end once the scan is over.
    pub fn beam_center(&self, t: f64) -> Result<[f64; 3]> {
        if t < self.start_time {
            return Err(Error::BeforeScanStart {
                time: t,
                start: self.start_time,
            });
        }
        let s = self.travel(t).min(self.length);
        Ok([
            self.start[0] + self.direction[0] * s,
            0.0,
            self.start[2] + self.direction[2] * s,
        ])
    }

    /// The laser is on from the start time until the path end is reached.
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start_time && self.travel(t) <= self.length * (1.0 + 1e-12)
    }

    /// Beam-frame coordinates `(along, transverse)` of the surface point
    /// `(x, z)` relative to `center`.
    pub fn local(&self, x: f64, z: f64, center: [f64; 3]) -> (f64, f64) {
        let (rx, rz) = (x - center[0], z - center[2]);
        let [dx, _, dz] = self.direction;
        (rx * dx + rz * dz, rx * dz - rz * dx)
    }
}

/// Splits a front/rear power ratio `f_f/f_r` into fractions summing to 2.
pub fn resolve_fractions(ratio: f64) -> Result<(f64, f64)> {
    if !(ratio > 0.0) || ratio.is_nan() {
        return Err(Error::invalid("ff_over_fr", "power ratio must be positive"));
    }
    if ratio.is_infinite() {
        return Ok((2.0, 0.0));
    }
    Ok((2.0 * ratio / (1.0 + ratio), 2.0 / (1.0 + ratio)))
}

/// Double-elliptical surface source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldakSpec {
    /// Laser power, W.
    pub power: f64,
    /// Absorptivity η in (0, 1].
    pub absorptivity: f64,
    /// Transverse radius `a`, mm.
    pub transverse_radius: f64,
    /// Front radius `c_f`, mm.
    pub front_radius: f64,
    /// Rear radius `c_r`, mm.
    pub rear_radius: f64,
    pub front_fraction: f64,
    pub rear_fraction: f64,
}

impl GoldakSpec {
    /// Builds a source from a spot radius used for `a` and `c_f`, and the
    /// calibrated ratios `f_f/f_r` and `c_r/c_f`.
    pub fn from_ratios(
        power: f64,
        absorptivity: f64,
        radius: f64,
        ff_over_fr: f64,
        cr_over_cf: f64,
    ) -> Result<Self> {
        let (front_fraction, rear_fraction) = resolve_fractions(ff_over_fr)?;
        let g = Self {
            power,
            absorptivity,
            transverse_radius: radius,
            front_radius: radius,
            rear_radius: radius * cr_over_cf,
            front_fraction,
            rear_fraction,
        };
        g.validate()?;
        Ok(g)
    }

    /// Symmetric Gaussian spot of 1/e² radius `radius`.
    pub fn symmetric(power: f64, absorptivity: f64, radius: f64) -> Result<Self> {
        Self::from_ratios(power, absorptivity, radius, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power >= 0.0) || !self.power.is_finite() {
            return Err(Error::invalid("source.power", "must be non-negative"));
        }
        if !(self.absorptivity > 0.0 && self.absorptivity <= 1.0) {
            return Err(Error::invalid("source.absorptivity", "must lie in (0, 1]"));
        }
        for (name, r) in [
            ("source.transverse_radius", self.transverse_radius),
            ("source.front_radius", self.front_radius),
            ("source.rear_radius", self.rear_radius),
        ] {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if !(self.front_fraction > 0.0 && self.rear_fraction > 0.0) {
            return Err(Error::invalid("source.fractions", "must be positive"));
        }
        if (self.front_fraction + self.rear_fraction - 2.0).abs() > 1e-9 {
            return Err(Error::invalid("source.fractions", "front + rear must equal 2"));
        }
        Ok(())
    }

    pub fn absorbed_power(&self) -> f64 {
        self.power * self.absorptivity
    }

    fn branch(&self, front: bool) -> (f64, f64) {
        if front {
            (self.front_fraction, self.front_radius)
        } else {
            (self.rear_fraction, self.rear_radius)
        }
    }

    /// Peak flux of one quadrant, W/mm².
    pub fn amplitude(&self, front: bool) -> f64 {
        let (f, c) = self.branch(front);
        2.0 * self.absorbed_power() * f / (PI * self.transverse_radius * c)
    }

    /// Flux of the chosen quadrant's formula, regardless of the side.
    pub fn branch_flux(&self, front: bool, along: f64, transverse: f64) -> f64 {
        let (_, c) = self.branch(front);
        let a = self.transverse_radius;
        self.amplitude(front)
            * math::exp(-2.0 * (along * along / (c * c) + transverse * transverse / (a * a)))
    }

    /// Flux in the beam frame; the front quadrant includes `along = 0`.
    pub fn flux_local(&self, along: f64, transverse: f64) -> f64 {
        self.branch_flux(along >= 0.0, along, transverse)
    }

    /// Flux at surface point `(x, z)` for a beam at `(x0, z0)` moving along `+z`.
    pub fn flux(&self, point: [f64; 2], center: [f64; 2]) -> f64 {
        self.flux_local(point[1] - center[1], point[0] - center[0])
    }

    /// Trapezoidal quadrature of the flux over the surface, each quadrant
    /// integrated on its own half-plane.
    pub fn total_power(&self) -> f64 {
        let a = self.transverse_radius;
        let reach = 6.0;
        let nt = 240;
        let ht = 2.0 * reach * a / nt as f64;
        let mut total = 0.0;
        for front in [true, false] {
            let (_, c) = self.branch(front);
            let na = 160;
            let ha = reach * c / na as f64;
            let sign = if front { 1.0 } else { -1.0 };
            let mut sum = 0.0;
            for i in 0..=na {
                let wa = if i == 0 || i == na { 0.5 } else { 1.0 };
                let along = sign * i as f64 * ha;
                for j in 0..=nt {
                    let wt = if j == 0 || j == nt { 0.5 } else { 1.0 };
                    let tr = -reach * a + j as f64 * ht;
                    sum += wa * wt * self.branch_flux(front, along, tr);
                }
            }
            total += sum * ha * ht;
        }
        total
    }
}

/// Measured (or synthetic) intensity map, normalized to the absorbed power.
///
/// Samples are stored row-major with `ny` rows of `nx` values; the `x` index
/// runs across the track and the `y` index along the scan direction. The map
/// is centered on the beam.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredProfile {
    pub nx: usize,
    pub ny: usize,
    /// mm
    pub dx: f64,
    /// mm
    pub dy: f64,
    /// Unit-integral shape, 1/mm².
    shape: Vec<f64>,
    /// Laser power `Q`, W.
    power: f64,
    absorptivity: f64,
}

fn trapezoid_2d(nx: usize, ny: usize, dx: f64, dy: f64, v: &[f64]) -> f64 {
    let w = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
    let mut s = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            s += w(i, nx) * w(j, ny) * v[j * nx + i];
        }
    }
    s * dx * dy
}

impl MeasuredProfile {
    /// Normalizes raw intensities of arbitrary scale to `power · absorptivity`.
    pub fn from_intensities(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        raw: Vec<f64>,
        power: f64,
        absorptivity: f64,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid("profile", "need at least 2×2 samples"));
        }
        if raw.len() != nx * ny {
            return Err(Error::invalid("profile", "sample count does not match nx·ny"));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::invalid("profile", "spacing must be positive"));
        }
        if raw.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("profile", "intensities must be finite and non-negative"));
        }
        if !(power >= 0.0) || !(absorptivity > 0.0 && absorptivity <= 1.0) {
            return Err(Error::invalid("profile", "power ≥ 0 and absorptivity in (0, 1] required"));
        }
        let integral = trapezoid_2d(nx, ny, dx, dy, &raw);
        if !(integral > 0.0) {
            return Err(Error::invalid("profile", "intensity map integrates to zero"));
        }
        let shape = raw.into_iter().map(|v| v / integral).collect();
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            shape,
            power,
            absorptivity,
        })
    }

    /// Sampled circular Gaussian with beam diameter `d4sigma` (four standard
    /// deviations), spacing σ/5, truncated at ±5σ.
    pub fn gaussian(d4sigma: f64, power: f64, absorptivity: f64) -> Result<Self> {
        if !(d4sigma > 0.0) {
            return Err(Error::invalid("profile.d4sigma", "must be positive"));
        }
        let sigma = d4sigma / 4.0;
        let half = 25usize;
        let n = 2 * half + 1;
        let h = sigma / 5.0;
        let mut raw = Vec::with_capacity(n * n);
        for j in 0..n {
            let v = (j as f64 - half as f64) * h;
            for i in 0..n {
                let u = (i as f64 - half as f64) * h;
                raw.push(math::exp(-(u * u + v * v) / (2.0 * sigma * sigma)));
            }
        }
        Self::from_intensities(n, n, h, h, raw, power, absorptivity)
    }

    pub fn absorbed_power(&self) -> f64 {
        self.power * self.absorptivity
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn absorptivity(&self) -> f64 {
        self.absorptivity
    }

    /// Same shape rescaled to a different `Q·η`.
    pub fn with_power(&self, power: f64, absorptivity: f64) -> Self {
        Self {
            power,
            absorptivity,
            ..self.clone()
        }
    }

    /// Half extents `(across, along)` of the footprint, mm.
    pub fn half_extent(&self) -> (f64, f64) {
        (
            0.5 * (self.nx - 1) as f64 * self.dx,
            0.5 * (self.ny - 1) as f64 * self.dy,
        )
    }

    /// Bilinear interpolation of the map; zero outside the footprint.
    pub fn flux_local(&self, along: f64, transverse: f64) -> f64 {
        let (hx, hy) = self.half_extent();
        let u = (transverse + hx) / self.dx;
        let v = (along + hy) / self.dy;
        let (umax, vmax) = ((self.nx - 1) as f64, (self.ny - 1) as f64);
        if !(u >= 0.0 && u <= umax && v >= 0.0 && v <= vmax) {
            return 0.0;
        }
        let i = (math::floor(u) as usize).min(self.nx - 2);
        let j = (math::floor(v) as usize).min(self.ny - 2);
        let (s, t) = (u - i as f64, v - j as f64);
        let at = |i: usize, j: usize| self.shape[j * self.nx + i];
        let value = (1.0 - s) * (1.0 - t) * at(i, j)
            + s * (1.0 - t) * at(i + 1, j)
            + (1.0 - s) * t * at(i, j + 1)
            + s * t * at(i + 1, j + 1);
        self.absorbed_power() * value
    }

    /// Trapezoidal integral of the flux samples, W.
    pub fn total_power(&self) -> f64 {
        self.absorbed_power() * trapezoid_2d(self.nx, self.ny, self.dx, self.dy, &self.shape)
    }
}

/// Shape of the absorbed surface flux.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    Goldak(GoldakSpec),
    Measured(MeasuredProfile),
    /// Spatially uniform flux over the whole top surface, W/mm². Used by the
    /// half-space verification problem.
    Uniform(f64),
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceModel::Goldak(g) => g.validate(),
            SourceModel::Measured(_) => Ok(()),
            SourceModel::Uniform(q) => {
                if q.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("source.flux", "must be finite"))
                }
            }
        }
    }

    pub fn flux_local(&self, along: f64, transverse: f64) -> f64 {
        match self {
            SourceModel::Goldak(g) => g.flux_local(along, transverse),
            SourceModel::Measured(m) => m.flux_local(along, transverse),
            SourceModel::Uniform(q) => *q,
        }
    }

    /// Numerical integral of the flux over the surface; `None` for the
    /// unbounded uniform load.
    pub fn total_power(&self) -> Option<f64> {
        match self {
            SourceModel::Goldak(g) => Some(g.total_power()),
            SourceModel::Measured(m) => Some(m.total_power()),
            SourceModel::Uniform(_) => None,
        }
    }

    pub fn absorbed_power(&self) -> Option<f64> {
        match self {
            SourceModel::Goldak(g) => Some(g.absorbed_power()),
            SourceModel::Measured(m) => Some(m.absorbed_power()),
            SourceModel::Uniform(_) => None,
        }
    }

    /// Beam-frame box `(along_min, along_max, transverse_half)` outside of
    /// which the flux is negligible (below e⁻⁵⁰ of the peak) or zero.
    fn support(&self) -> Option<(f64, f64, f64)> {
        match self {
            SourceModel::Goldak(g) => Some((
                -5.0 * g.rear_radius,
                5.0 * g.front_radius,
                5.0 * g.transverse_radius,
            )),
            SourceModel::Measured(m) => {
                let (hx, hy) = m.half_extent();
                Some((-hy, hy, hx))
            }
            SourceModel::Uniform(_) => None,
        }
    }

    /// Length scale the quadrature must resolve.
    fn feature_size(&self) -> f64 {
        match self {
            SourceModel::Goldak(g) => g
                .transverse_radius
                .min(g.front_radius)
                .min(g.rear_radius),
            SourceModel::Measured(m) => m.dx.min(m.dy),
            SourceModel::Uniform(_) => f64::INFINITY,
        }
    }
}

/// A source shape moving along a scan path.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSource {
    pub model: SourceModel,
    pub path: ScanPath,
}

/// `∫_lo^hi exp(−β(s−c)²) ds` and `∫_lo^hi (s−c) exp(−β(s−c)²) ds`.
fn gaussian_moments(lo: f64, hi: f64, c: f64, beta: f64) -> (f64, f64) {
    if hi <= lo {
        return (0.0, 0.0);
    }
    let rb = math::sqrt(beta);
    let (u, w) = ((lo - c) * rb, (hi - c) * rb);
    let half = 0.5 * math::sqrt(PI / beta);
    // Take the erf difference in the tail where it does not cancel.
    let i0 = if u >= 0.0 {
        half * (math::erfc(u) - math::erfc(w))
    } else if w <= 0.0 {
        half * (math::erfc(-w) - math::erfc(-u))
    } else {
        half * (math::erf(w) - math::erf(u))
    };
    let i1 = (math::exp(-u * u) - math::exp(-w * w)) / (2.0 * beta);
    (i0, i1)
}

/// Per-node integrals `∫ g(s) N_n(s) ds` of a Gaussian factor against the 1D
/// hat functions of `coords`, restricted to `[clip_lo, clip_hi]`.
fn hat_weights(coords: &[f64], c: f64, beta: f64, clip_lo: f64, clip_hi: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let reach = 7.0 / math::sqrt(beta);
    for e in 0..coords.len() - 1 {
        let (s0, s1) = (coords[e], coords[e + 1]);
        let lo = s0.max(clip_lo).max(c - reach);
        let hi = s1.min(clip_hi).min(c + reach);
        if hi <= lo {
            continue;
        }
        let (i0, i1) = gaussian_moments(lo, hi, c, beta);
        let h = s1 - s0;
        out[e] += ((s1 - c) * i0 - i1) / h;
        out[e + 1] += (i1 + (c - s0) * i0) / h;
    }
}

const GAUSS2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

impl HeatSource {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.path.validate()
    }

    /// Flux at surface point `(x, z)` at time `t`; zero while the laser is off.
    pub fn flux(&self, x: f64, z: f64, t: f64) -> f64 {
        if !self.path.is_active(t) {
            return 0.0;
        }
        let Ok(center) = self.path.beam_center(t) else {
            return 0.0;
        };
        let (along, transverse) = self.path.local(x, z, center);
        self.model.flux_local(along, transverse)
    }

    /// Consistent nodal loads `∫ q N_i dA` (W) for the top-surface nodes of a
    /// tensor grid with node coordinates `xs` and `zs`. `areas` holds the
    /// tributary area of each node (used for uniform loads). Output layout is
    /// `k * xs.len() + i`.
    pub fn nodal_loads(&self, xs: &[f64], zs: &[f64], areas: &[f64], t: f64, out: &mut [f64]) {
        let nx = xs.len();
        debug_assert_eq!(out.len(), nx * zs.len());
        out.iter_mut().for_each(|v| *v = 0.0);
        if !self.path.is_active(t) {
            return;
        }
        let center = match self.path.beam_center(t) {
            Ok(c) => c,
            Err(_) => return,
        };
        match &self.model {
            SourceModel::Uniform(q) => {
                for (o, a) in out.iter_mut().zip(areas) {
                    *o = q * a;
                }
            }
            SourceModel::Goldak(g) if self.axis_aligned().is_some() => {
                self.goldak_exact(g, xs, zs, center, out);
            }
            _ => self.quadrature_loads(xs, zs, center, out),
        }
    }

    /// `Some((along_is_z, sign))` when the scan runs along a grid axis.
    fn axis_aligned(&self) -> Option<(bool, f64)> {
        let [dx, _, dz] = self.path.direction;
        if dx == 0.0 && (dz == 1.0 || dz == -1.0) {
            Some((true, dz))
        } else if dz == 0.0 && (dx == 1.0 || dx == -1.0) {
            Some((false, dx))
        } else {
            None
        }
    }

    fn goldak_exact(&self, g: &GoldakSpec, xs: &[f64], zs: &[f64], center: [f64; 3], out: &mut [f64]) {
        let (along_is_z, sign) = self.axis_aligned().expect("checked by caller");
        let (along_coords, across_coords, c_along, c_across) = if along_is_z {
            (zs, xs, center[2], center[0])
        } else {
            (xs, zs, center[0], center[2])
        };
        let a = g.transverse_radius;
        let mut across = vec![0.0; across_coords.len()];
        hat_weights(
            across_coords,
            c_across,
            2.0 / (a * a),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &mut across,
        );
        let mut front = vec![0.0; along_coords.len()];
        let mut rear = vec![0.0; along_coords.len()];
        let (cf, cr) = (g.front_radius, g.rear_radius);
        let (front_lo, front_hi, rear_lo, rear_hi) = if sign > 0.0 {
            (c_along, f64::INFINITY, f64::NEG_INFINITY, c_along)
        } else {
            (f64::NEG_INFINITY, c_along, c_along, f64::INFINITY)
        };
        hat_weights(along_coords, c_along, 2.0 / (cf * cf), front_lo, front_hi, &mut front);
        hat_weights(along_coords, c_along, 2.0 / (cr * cr), rear_lo, rear_hi, &mut rear);
        let (af, ar) = (g.amplitude(true), g.amplitude(false));
        let nx = xs.len();
        for (m, (f, r)) in front.iter().zip(&rear).enumerate() {
            let w_along = af * f + ar * r;
            if w_along == 0.0 {
                continue;
            }
            for (n, w_across) in across.iter().enumerate() {
                if *w_across == 0.0 {
                    continue;
                }
                let (i, k) = if along_is_z { (n, m) } else { (m, n) };
                out[k * nx + i] += w_along * w_across;
            }
        }
    }

    fn quadrature_loads(&self, xs: &[f64], zs: &[f64], center: [f64; 3], out: &mut [f64]) {
        let Some((a0, a1, t_half)) = self.model.support() else {
            return;
        };
        // Bounding box of the (possibly rotated) support in grid coordinates.
        let reach = a0.abs().max(a1.abs());
        let r = math::sqrt(reach * reach + t_half * t_half);
        let (xlo, xhi) = (center[0] - r, center[0] + r);
        let (zlo, zhi) = (center[2] - r, center[2] + r);
        let feature = self.model.feature_size();
        let nx = xs.len();
        let ex0 = xs.partition_point(|&x| x < xlo).saturating_sub(1);
        let ex1 = xs.partition_point(|&x| x <= xhi).min(nx - 1);
        let ez0 = zs.partition_point(|&z| z < zlo).saturating_sub(1);
        let ez1 = zs.partition_point(|&z| z <= zhi).min(zs.len() - 1);
        for k in ez0..ez1 {
            let (z0, z1) = (zs[k], zs[k + 1]);
            let hz = z1 - z0;
            let mz = (math::ceil(2.0 * hz / feature) as usize).clamp(1, 64);
            for i in ex0..ex1 {
                let (x0, x1) = (xs[i], xs[i + 1]);
                let hx = x1 - x0;
                let mx = (math::ceil(2.0 * hx / feature) as usize).clamp(1, 64);
                let (sx, sz) = (hx / mx as f64, hz / mz as f64);
                let mut acc = [0.0; 4];
                for bz in 0..mz {
                    for gz in GAUSS2 {
                        let z = z0 + sz * (bz as f64 + 0.5 * (1.0 + gz));
                        let tz = (z - z0) / hz;
                        for bx in 0..mx {
                            for gx in GAUSS2 {
                                let x = x0 + sx * (bx as f64 + 0.5 * (1.0 + gx));
                                let (along, across) = self.path.local(x, z, center);
                                let q = self.model.flux_local(along, across);
                                if q == 0.0 {
                                    continue;
                                }
                                let tx = (x - x0) / hx;
                                let w = q * 0.25 * sx * sz;
                                acc[0] += w * (1.0 - tx) * (1.0 - tz);
                                acc[1] += w * tx * (1.0 - tz);
                                acc[2] += w * (1.0 - tx) * tz;
                                acc[3] += w * tx * tz;
                            }
                        }
                    }
                }
                out[k * nx + i] += acc[0];
                out[k * nx + i + 1] += acc[1];
                out[(k + 1) * nx + i] += acc[2];
                out[(k + 1) * nx + i + 1] += acc[3];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cbm_b() -> GoldakSpec {
        GoldakSpec::from_ratios(195.0, 0.38, 0.05, 0.053, 0.167).unwrap()
    }

    #[test]
    fn fraction_examples() {
        assert_eq!(resolve_fractions(1.0).unwrap(), (1.0, 1.0));
        let (f, r) = resolve_fractions(0.053).unwrap();
        assert!((f - 0.100_664_767_331_434).abs() < 1e-12);
        assert!((r - 1.899_335_232_668_566).abs() < 1e-12);
        assert!((f / r - 0.053).abs() < 1e-14 && (f + r - 2.0).abs() < 1e-15);
        let mut prev = 0.0;
        for ratio in [1.0, 10.0, 1e3, 1e6, 1e12] {
            let (f, _) = resolve_fractions(ratio).unwrap();
            assert!(f > prev && f < 2.0);
            prev = f;
        }
        assert_eq!(resolve_fractions(f64::INFINITY).unwrap(), (2.0, 0.0));
        assert!(resolve_fractions(0.0).is_err());
        assert!(resolve_fractions(-1.0).is_err());
    }

    #[test]
    fn goldak_peak_and_tail() {
        let g = cbm_b();
        let peak = g.flux([0.0, 0.0], [0.0, 0.0]);
        let expected = 2.0 * 195.0 * 0.38 * 0.100_664_767_331_434 / (PI * 0.0025);
        assert!((peak - expected).abs() < 1e-9);
        assert!((peak - 1900.2).abs() < 1.0);
        assert!(g.flux([0.5, 0.0], [0.0, 0.0]) < 1e-30 * peak);
        // The tie at the center belongs to the front quadrant.
        assert_eq!(g.flux_local(0.0, 0.0), g.amplitude(true));
        assert!(g.flux_local(-1e-12, 0.0) > g.flux_local(0.0, 0.0));
    }

    #[test]
    fn goldak_total_power_cbm_b() {
        let g = cbm_b();
        let p = g.total_power();
        assert!((p - 74.1).abs() < 1e-9 * 74.1 + 1e-9);
        assert!(((p - g.absorbed_power()) / g.absorbed_power()).abs() < 1e-9);
        let zero = GoldakSpec::from_ratios(0.0, 0.38, 0.05, 0.053, 0.167).unwrap();
        assert_eq!(zero.total_power(), 0.0);
    }

    #[test]
    fn beam_center_examples() {
        let p = ScanPath::new([0.0, 0.0, 0.5], [0.0, 0.0, 1.0], 800.0, 0.0, 3.0).unwrap();
        assert_eq!(p.beam_center(0.0).unwrap(), [0.0, 0.0, 0.5]);
        let c = p.beam_center(1e-3).unwrap();
        assert!((c[2] - 1.3).abs() < 1e-12);
        assert!(p.beam_center(-1e-6).is_err());
        assert!(!p.is_active(1.0));
        assert_eq!(p.beam_center(1.0).unwrap(), [0.0, 0.0, 3.5]);
        let s = HeatSource {
            model: SourceModel::Goldak(cbm_b()),
            path: p,
        };
        assert_eq!(s.flux(0.0, 3.5, 1.0), 0.0);
        assert!(s.flux(0.0, 0.5, 0.0) > 0.0);
    }

    #[test]
    fn measured_examples() {
        let flat = MeasuredProfile::from_intensities(11, 21, 0.01, 0.01, vec![3.0; 231], 100.0, 0.5).unwrap();
        let area = 0.1 * 0.2;
        assert!((flat.flux_local(0.03, -0.02) - 50.0 / area).abs() < 1e-9);
        assert_eq!(flat.flux_local(0.2, 0.0), 0.0);
        assert_eq!(flat.flux_local(0.0, 0.06), 0.0);
        assert!((flat.total_power() - 50.0).abs() < 1e-9);

        let g = MeasuredProfile::gaussian(0.170, 179.2, 0.086).unwrap();
        let sigma: f64 = 0.0425;
        let qeta = 179.2 * 0.086;
        let peak = qeta / (2.0 * PI * sigma * sigma);
        assert!(((g.flux_local(0.0, 0.0) - peak) / peak).abs() < 1e-3);
        assert!(((g.total_power() - qeta) / qeta).abs() < 1e-12);
    }

    #[test]
    fn measured_rejects_bad_input() {
        assert!(MeasuredProfile::from_intensities(2, 2, 0.1, 0.1, vec![1.0, -1.0, 1.0, 1.0], 1.0, 0.5).is_err());
        assert!(MeasuredProfile::from_intensities(2, 2, 0.1, 0.1, vec![0.0; 4], 1.0, 0.5).is_err());
        assert!(MeasuredProfile::from_intensities(2, 3, 0.1, 0.1, vec![1.0; 4], 1.0, 0.5).is_err());
    }

    fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    fn loads_total(src: &HeatSource, xs: &[f64], zs: &[f64], t: f64) -> f64 {
        let mut out = vec![0.0; xs.len() * zs.len()];
        src.nodal_loads(xs, zs, &vec![0.0; xs.len() * zs.len()], t, &mut out);
        out.iter().sum()
    }

    #[test]
    fn nodal_loads_conserve_power() {
        let xs = uniform_axis(-0.5, 0.5, 40);
        let zs = uniform_axis(0.0, 2.0, 80);
        let path = ScanPath::along_z(0.0, 0.5, 1.0, 800.0).unwrap();
        // The rear radius (8.35 μm) is far below the 25 μm cells.
        let goldak = HeatSource {
            model: SourceModel::Goldak(cbm_b()),
            path,
        };
        let p = loads_total(&goldak, &xs, &zs, 0.3e-3);
        assert!((p - 74.1).abs() < 1e-9, "{p}");
        let measured = HeatSource {
            model: SourceModel::Measured(MeasuredProfile::gaussian(0.17, 179.2, 0.086).unwrap()),
            path,
        };
        let p = loads_total(&measured, &xs, &zs, 0.3e-3);
        assert!(((p - 179.2 * 0.086) / (179.2 * 0.086)).abs() < 1e-4, "{p}");
        // Laser off after the path end.
        assert_eq!(loads_total(&goldak, &xs, &zs, 1.0), 0.0);
    }

    #[test]
    fn exact_and_quadrature_loads_agree() {
        let xs = uniform_axis(-0.3, 0.3, 24);
        let zs = uniform_axis(0.0, 1.0, 40);
        let g = GoldakSpec::from_ratios(150.0, 0.4, 0.06, 0.5, 2.0).unwrap();
        let exact = HeatSource {
            model: SourceModel::Goldak(g),
            path: ScanPath::along_z(0.0, 0.2, 0.6, 400.0).unwrap(),
        };
        let mut e = vec![0.0; xs.len() * zs.len()];
        exact.nodal_loads(&xs, &zs, &[], 0.5e-3, &mut e);
        let mut q = vec![0.0; e.len()];
        let c = exact.path.beam_center(0.5e-3).unwrap();
        exact.quadrature_loads(&xs, &zs, c, &mut q);
        let peak = e.iter().cloned().fold(0.0, f64::max);
        for (a, b) in e.iter().zip(&q) {
            assert!((a - b).abs() < 2e-3 * peak, "{a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn goldak_quadrature_matches_absorbed_power(
            q in 10.0f64..400.0, eta in 0.05f64..1.0, a in 0.01f64..0.2,
            ratio in 0.01f64..10.0, cr in 0.05f64..5.0
        ) {
            let g = GoldakSpec::from_ratios(q, eta, a, ratio, cr).unwrap();
            let p = g.total_power();
            prop_assert!(((p - q * eta) / (q * eta)).abs() < 5e-3);
        }

        #[test]
        fn flux_depends_only_on_absorbed_power(along in -0.3f64..0.3, tr in -0.3f64..0.3, e in -3i32..4) {
            let lambda = 2f64.powi(e);
            let g = cbm_b();
            let h = GoldakSpec { power: g.power * lambda, absorptivity: g.absorptivity / lambda, ..g };
            prop_assert_eq!(g.flux_local(along, tr).to_bits(), h.flux_local(along, tr).to_bits());
        }

        #[test]
        fn measured_normalization_for_any_grid(vals in proptest::collection::vec(0.0f64..10.0, 12), extra in 0.1f64..1.0) {
            let mut raw = vals.clone();
            raw[5] += extra;
            let p = MeasuredProfile::from_intensities(3, 4, 0.02, 0.03, raw, 200.0, 0.3).unwrap();
            prop_assert!(((p.total_power() - 60.0) / 60.0).abs() < 1e-12);
            prop_assert!(p.flux_local(0.01, -0.02) >= 0.0);
        }
    }
}
