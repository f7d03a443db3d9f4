//! Implicit time integration of the nonlinear heat equation.
//!
//! Space is discretized with continuous trilinear hexahedra on the graded
//! grid, capacity is lumped to the nodes, and each backward-Euler step is
//! solved by Newton iteration. The capacity term is written as an enthalpy
//! difference `m (H(T) − H(Tⁿ)) / Δt` whose Jacobian is the apparent
//! capacity at the current iterate, so latent heat is conserved even when a
//! node crosses the whole melting interval in one step. Conductivity is
//! evaluated per element at the mean element temperature of the current
//! iterate; its temperature derivative enters the Jacobian, so Newton
//! converges quadratically but the linear systems are nonsymmetric. They are
//! solved with Jacobi-preconditioned BiCGSTAB. Each step starts from a linear
//! extrapolation of the two previous states.
//!
//! The top face carries the absorbed laser flux and radiative exchange; all
//! other faces are adiabatic.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{GradedGrid, GridSpec, TemperatureField};
use crate::heat_source::HeatSource;
use crate::material::MaterialModel;
use crate::par;
use crate::{Error, Result};

/// Stefan–Boltzmann constant in W/(mm²·K⁴).
pub const STEFAN_BOLTZMANN: f64 = 5.670_374_419e-14;
pub const KELVIN_OFFSET: f64 = 273.15;

/// Radiative flux into the body, W/mm²; negative (a loss) when `t > ambient`.
pub fn radiation_flux(t: f64, ambient: f64, emissivity: f64, sigma: f64) -> f64 {
    let tk = t + KELVIN_OFFSET;
    let ek = ambient + KELVIN_OFFSET;
    sigma * emissivity * (tk * tk + ek * ek) * (ek * ek - tk * tk)
}

/// `d radiation_flux / dT`.
pub fn radiation_flux_derivative(t: f64, emissivity: f64, sigma: f64) -> f64 {
    let tk = t + KELVIN_OFFSET;
    -4.0 * sigma * emissivity * tk * tk * tk
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Residual reduction (∞-norm) relative to the start of the step.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// How many times a failing step may be split in half.
    pub max_step_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 25,
            max_step_halvings: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// Beam advances half of the smallest cell per step: `h_min / (2 v)`.
    Auto,
    Fixed(f64),
}

/// Which states are kept. The initial and final states are always kept.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotPlan {
    /// Keep every n-th step; 0 disables the cadence.
    pub every: usize,
    /// Keep the first step ending at or after each of these times.
    pub at_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub material: MaterialModel,
    pub source: HeatSource,
    pub grid: GridSpec,
    /// °C
    pub initial_temperature: f64,
    /// °C
    pub ambient_temperature: f64,
    pub emissivity: f64,
    /// W/(mm²·K⁴)
    pub stefan_boltzmann: f64,
    pub time_step: TimeStep,
    /// s
    pub end_time: f64,
    pub newton: NewtonSettings,
    pub snapshots: SnapshotPlan,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.source.validate()?;
        if let TimeStep::Fixed(dt) = self.time_step {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::invalid("solver.time_step", "must be positive"));
            }
        }
        if !(self.end_time >= 0.0) || !self.end_time.is_finite() {
            return Err(Error::invalid("solver.end_time", "must be non-negative"));
        }
        if !(self.newton.tolerance > 0.0) {
            return Err(Error::invalid("solver.newton_tolerance", "must be positive"));
        }
        if self.newton.max_iterations == 0 {
            return Err(Error::invalid("solver.max_iterations", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.emissivity) {
            return Err(Error::invalid("solver.emissivity", "must lie in [0, 1]"));
        }
        if !(self.stefan_boltzmann >= 0.0) {
            return Err(Error::invalid("solver.stefan_boltzmann", "must be non-negative"));
        }
        for (f, t) in [
            ("solver.initial_temperature", self.initial_temperature),
            ("solver.ambient_temperature", self.ambient_temperature),
        ] {
            if !(t > -KELVIN_OFFSET) || !t.is_finite() {
                return Err(Error::invalid(f, "must be above absolute zero"));
            }
        }
        Ok(())
    }

    /// Step size for a grid built from this config.
    pub fn resolved_time_step(&self, grid: &GradedGrid) -> f64 {
        match self.time_step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => grid.min_spacing() / (2.0 * self.source.path.speed),
        }
    }
}

/// Diagnostics of one accepted time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// End time of the step, s.
    pub time: f64,
    pub dt: f64,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    /// Final ∞-norm residual relative to the step's initial residual.
    pub residual: f64,
    /// Laser energy absorbed during the step, J.
    pub energy_in: f64,
    /// Radiative energy exchanged during the step, J (negative = loss).
    pub energy_radiated: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub steps: Vec<StepRecord>,
    /// Wall-clock seconds; only measured with the `std` feature.
    pub wall_time: Option<f64>,
}

impl SolveReport {
    pub fn energy_in(&self) -> f64 {
        self.steps.iter().map(|s| s.energy_in).sum()
    }

    pub fn energy_radiated(&self) -> f64 {
        self.steps.iter().map(|s| s.energy_radiated).sum()
    }

    pub fn total_newton_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.newton_iterations).sum()
    }
}

/// Lumped nodal volumes (row sums of the consistent mass matrix).
pub fn lumped_volumes(grid: &GradedGrid) -> Vec<f64> {
    let w: [Vec<f64>; 3] = core::array::from_fn(|d| half_widths(grid.axis(d)));
    (0..grid.node_count())
        .map(|n| {
            let [i, j, k] = grid.ijk(n);
            w[0][i] * w[1][j] * w[2][k]
        })
        .collect()
}

/// Tributary top-face areas, indexed `k * nx + i`.
pub fn top_areas(grid: &GradedGrid) -> Vec<f64> {
    let wx = half_widths(grid.x());
    let wz = half_widths(grid.z());
    let mut out = Vec::with_capacity(wx.len() * wz.len());
    for z in &wz {
        for x in &wx {
            out.push(x * z);
        }
    }
    out
}

fn half_widths(a: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|i| {
            let l = if i > 0 { a[i] - a[i - 1] } else { 0.0 };
            let r = if i + 1 < a.len() { a[i + 1] - a[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

/// Per-cell 1D factors of one axis: `[M_same, M_diff, S_same, S_diff]`
/// with `M = h/6 · [2, 1]` and `S = [1, −1] / h`.
fn axis_factors(a: &[f64]) -> Vec<[f64; 4]> {
    a.windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            [h / 3.0, h / 6.0, 1.0 / h, -1.0 / h]
        })
        .collect()
}

/// Index of the top-face entry of node `n`, if it lies on `y = 0`.
#[inline]
fn top_index(n: usize, nx: usize, ny: usize) -> Option<usize> {
    ((n / nx) % ny + 1 == ny).then(|| (n / (nx * ny)) * nx + n % nx)
}

fn max_abs(v: &[f64]) -> f64 {
    par::ordered_max(v.len(), |r| v[r].iter().fold(0.0, |a, x| a.max(x.abs())))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::ordered_sum(a.len(), |r| r.map(|m| a[m] * b[m]).sum())
}

/// `out = A x` for the 27-point stencil matrix `A`.
fn apply(stencil: &[[f64; 27]], dims: [usize; 3], x: &[f64], out: &mut [f64]) {
    let [nx, ny, nz] = dims;
    let plane = nx * ny;
    par::for_each_chunk_mut(out, |c, chunk| {
        let base = c * par::CHUNK;
        for (off, o) in chunk.iter_mut().enumerate() {
            let n = base + off;
            let (i, j, k) = (n % nx, (n / nx) % ny, n / plane);
            let row = &stencil[n];
            let mut s = 0.0;
            if i > 0 && j > 0 && k > 0 && i + 1 < nx && j + 1 < ny && k + 1 < nz {
                let mut slot = 0;
                for dz in 0..3 {
                    for dy in 0..3 {
                        let m = n + dz * plane + dy * nx - plane - nx - 1;
                        s += row[slot] * x[m] + row[slot + 1] * x[m + 1] + row[slot + 2] * x[m + 2];
                        slot += 3;
                    }
                }
            } else {
                for dz in 0..3 {
                    let Some(kk) = (k + dz).checked_sub(1).filter(|&v| v < nz) else {
                        continue;
                    };
                    for dy in 0..3 {
                        let Some(jj) = (j + dy).checked_sub(1).filter(|&v| v < ny) else {
                            continue;
                        };
                        for dx in 0..3 {
                            let Some(ii) = (i + dx).checked_sub(1).filter(|&v| v < nx) else {
                                continue;
                            };
                            s += row[dx + 3 * dy + 9 * dz] * x[(kk * ny + jj) * nx + ii];
                        }
                    }
                }
            }
            *o = s;
        }
    });
}

/// Spatial operator and work buffers for one grid and configuration.
pub struct Solver {
    grid: Arc<GradedGrid>,
    material: MaterialModel,
    source: HeatSource,
    ambient: f64,
    emissivity: f64,
    sigma: f64,
    newton: NewtonSettings,
    volumes: Vec<f64>,
    areas: Vec<f64>,
    factors: [Vec<[f64; 4]>; 3],
    /// Element conductivity and `dk/dT / 8` at the element mean temperature.
    elem_k: Vec<[[f64; 3]; 2]>,
    /// Jacobian rows as 27-point stencils.
    stencil: Vec<[f64; 27]>,
    /// `K(T) T` from the last assembly.
    kt: Vec<f64>,
    residual: Vec<f64>,
    loads: Vec<f64>,
    enthalpy_old: Vec<f64>,
    work: [Vec<f64>; 8],
    /// Converged values of the last step and their `K(T) T`.
    last: Option<(Vec<f64>, Vec<f64>)>,
}

impl Solver {
    pub fn new(cfg: &SimulationConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = Arc::new(GradedGrid::build(&cfg.grid)?);
        Ok(Self::with_grid(cfg, grid))
    }

    /// Uses a prebuilt grid instead of `cfg.grid`.
    pub fn with_grid(cfg: &SimulationConfig, grid: Arc<GradedGrid>) -> Self {
        let n = grid.node_count();
        let [nx, _, nz] = grid.dims();
        Self {
            volumes: lumped_volumes(&grid),
            areas: top_areas(&grid),
            factors: core::array::from_fn(|d| axis_factors(grid.axis(d))),
            elem_k: vec![[[0.0; 3]; 2]; grid.cell_count()],
            stencil: vec![[0.0; 27]; n],
            kt: vec![0.0; n],
            residual: vec![0.0; n],
            loads: vec![0.0; nx * nz],
            enthalpy_old: vec![0.0; n],
            work: core::array::from_fn(|_| vec![0.0; n]),
            last: None,
            grid,
            material: cfg.material.clone(),
            source: cfg.source.clone(),
            ambient: cfg.ambient_temperature,
            emissivity: cfg.emissivity,
            sigma: cfg.stefan_boltzmann,
            newton: cfg.newton,
        }
    }

    pub fn grid(&self) -> &Arc<GradedGrid> {
        &self.grid
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn uniform_field(&self, temperature: f64, time: f64) -> TemperatureField {
        TemperatureField::uniform(self.grid.clone(), temperature, time)
    }

    /// Element conductivity and its derivative at the mean of the element's
    /// node values.
    fn update_conductivity(&mut self, t: &[f64]) {
        let [nx, ny, _] = self.grid.dims();
        let (ex, ey) = (nx - 1, ny - 1);
        let material = &self.material;
        par::for_each_chunk_mut(&mut self.elem_k, |c, chunk| {
            let base = c * par::CHUNK;
            for (off, out) in chunk.iter_mut().enumerate() {
                let e = base + off;
                let (i, j, k) = (e % ex, (e / ex) % ey, e / (ex * ey));
                let mut s = 0.0;
                for dk in 0..2 {
                    for dj in 0..2 {
                        let n0 = ((k + dk) * ny + j + dj) * nx + i;
                        s += t[n0] + t[n0 + 1];
                    }
                }
                let mean = 0.125 * s;
                out[0] = material.conductivity_tensor(mean);
                out[1] = material.conductivity_tensor_derivative(mean).map(|d| 0.125 * d);
            }
        });
    }

    /// `K(T) T` into `kt`; with `jacobian`, also the stiffness part of the
    /// Jacobian, `K(T) + (∂K/∂T) T`, into the stencil.
    fn assemble(&mut self, t: &[f64], jacobian: bool) {
        self.update_conductivity(t);
        let [nx, ny, nz] = self.grid.dims();
        let plane = nx * ny;
        let [fx, fy, fz] = &self.factors;
        let elem_k = &self.elem_k;
        let kernel = |n: usize, row: &mut [f64; 27]| -> f64 {
            let (i, j, k) = (n % nx, (n / nx) % ny, n / plane);
            let mut kt = 0.0;
            for ek in k.saturating_sub(1)..=k.min(nz - 2) {
                let az = k - ek;
                let cz = fz[ek];
                for ej in j.saturating_sub(1)..=j.min(ny - 2) {
                    let ay = j - ej;
                    let cy = fy[ej];
                    for ei in i.saturating_sub(1)..=i.min(nx - 2) {
                        let ax = i - ei;
                        let cx = fx[ei];
                        let [kv, dk] = elem_k[(ek * (ny - 1) + ej) * (nx - 1) + ei];
                        let base = (ek * ny + ej) * nx + ei;
                        let slot0 = (ei + 1 - i) + 3 * (ej + 1 - j) + 9 * (ek + 1 - k);
                        let mut acc = [0.0; 3];
                        for bz in 0..2 {
                            let zi = usize::from(bz != az);
                            let (mz, sz) = (cz[zi], cz[2 + zi]);
                            for by in 0..2 {
                                let yi = usize::from(by != ay);
                                let (my, sy) = (cy[yi], cy[2 + yi]);
                                let (myz, syz, mysz) = (my * mz, sy * mz, my * sz);
                                for bx in 0..2 {
                                    let xi = usize::from(bx != ax);
                                    let (mx, sx) = (cx[xi], cx[2 + xi]);
                                    let g = [sx * myz, mx * syz, mx * mysz];
                                    let tb = t[base + bz * plane + by * nx + bx];
                                    acc[0] += g[0] * tb;
                                    acc[1] += g[1] * tb;
                                    acc[2] += g[2] * tb;
                                    if jacobian {
                                        row[slot0 + bx + 3 * by + 9 * bz] += kv[0] * g[0] + kv[1] * g[1] + kv[2] * g[2];
                                    }
                                }
                            }
                        }
                        kt += kv[0] * acc[0] + kv[1] * acc[1] + kv[2] * acc[2];
                        if jacobian {
                            let d = dk[0] * acc[0] + dk[1] * acc[1] + dk[2] * acc[2];
                            if d != 0.0 {
                                for b in [0, 1, 3, 4, 9, 10, 12, 13] {
                                    row[slot0 + b] += d;
                                }
                            }
                        }
                    }
                }
            }
            kt
        };
        if jacobian {
            par::for_each_chunk_pair_mut(&mut self.kt, &mut self.stencil, |c, kt, rows| {
                let base = c * par::CHUNK;
                for (off, (out, row)) in kt.iter_mut().zip(rows.iter_mut()).enumerate() {
                    *row = [0.0; 27];
                    *out = kernel(base + off, row);
                }
            });
        } else {
            par::for_each_chunk_mut(&mut self.kt, |c, chunk| {
                let base = c * par::CHUNK;
                let mut scratch = [0.0; 27];
                for (off, out) in chunk.iter_mut().enumerate() {
                    *out = kernel(base + off, &mut scratch);
                }
            });
        }
    }

    /// Residual from the current `kt`; returns `‖R‖∞`.
    fn residual_norm(&mut self, t: &[f64], dt: f64) -> f64 {
        let [nx, ny, _] = self.grid.dims();
        let material = &self.material;
        let volumes = &self.volumes;
        let h_old = &self.enthalpy_old;
        let loads = &self.loads;
        let areas = &self.areas;
        let kt = &self.kt;
        let (ambient, eps, sigma) = (self.ambient, self.emissivity, self.sigma);
        let radiate = eps > 0.0 && sigma > 0.0;
        par::for_each_chunk_mut(&mut self.residual, |c, chunk| {
            let base = c * par::CHUNK;
            for (off, r) in chunk.iter_mut().enumerate() {
                let n = base + off;
                let mut v = kt[n] + volumes[n] * (material.enthalpy(t[n]) - h_old[n]) / dt;
                if let Some(s) = top_index(n, nx, ny) {
                    v -= loads[s];
                    if radiate {
                        v -= areas[s] * radiation_flux(t[n], ambient, eps, sigma);
                    }
                }
                *r = v;
            }
        });
        let r = max_abs(&self.residual);
        if r.is_finite() {
            r
        } else {
            f64::INFINITY
        }
    }

    /// Adds capacity and radiation terms to the Jacobian diagonal.
    fn add_diagonal(&mut self, t: &[f64], dt: f64) {
        let [nx, ny, _] = self.grid.dims();
        let material = &self.material;
        let volumes = &self.volumes;
        let areas = &self.areas;
        let (eps, sigma) = (self.emissivity, self.sigma);
        par::for_each_chunk_mut(&mut self.stencil, |c, chunk| {
            let base = c * par::CHUNK;
            for (off, row) in chunk.iter_mut().enumerate() {
                let n = base + off;
                let mut d = volumes[n] * material.apparent_volumetric_capacity(t[n]) / dt;
                if let (Some(s), true) = (top_index(n, nx, ny), eps > 0.0) {
                    d -= areas[s] * radiation_flux_derivative(t[n], eps, sigma);
                }
                row[13] += d;
            }
        });
    }

    /// Jacobi-preconditioned BiCGSTAB for `J x = −R`, starting from 0.
    /// Stops when the ∞-norm of the linear residual drops below `abs_tol`.
    fn solve_linear(&mut self, x: &mut [f64], abs_tol: f64) -> usize {
        let dims = self.grid.dims();
        let n = x.len();
        let stencil = &self.stencil;
        let [r, r0, p, v, y, s, z, tv] = &mut self.work;
        x.iter_mut().for_each(|e| *e = 0.0);
        for m in 0..n {
            r[m] = -self.residual[m];
        }
        if max_abs(r) <= abs_tol {
            return 0;
        }
        r0.copy_from_slice(r);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        let inv = |m: usize| 1.0 / stencil[m][13];
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let max_iter = 1000;
        for it in 1..=max_iter {
            let rho_new = dot(r0, r);
            if rho_new == 0.0 || omega == 0.0 {
                return it;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for m in 0..n {
                p[m] = r[m] + beta * (p[m] - omega * v[m]);
                y[m] = inv(m) * p[m];
            }
            apply(stencil, dims, y, v);
            let r0v = dot(r0, v);
            if r0v == 0.0 {
                return it;
            }
            alpha = rho / r0v;
            for m in 0..n {
                s[m] = r[m] - alpha * v[m];
                x[m] += alpha * y[m];
            }
            if max_abs(s) <= abs_tol {
                return it;
            }
            for m in 0..n {
                z[m] = inv(m) * s[m];
            }
            apply(stencil, dims, z, tv);
            let tt = dot(tv, tv);
            omega = if tt > 0.0 { dot(tv, s) / tt } else { 0.0 };
            for m in 0..n {
                x[m] += omega * z[m];
                r[m] = s[m] - omega * tv[m];
            }
            if max_abs(r) <= abs_tol {
                return it;
            }
        }
        max_iter
    }

    /// One backward-Euler step from `state` to `state.time() + dt`.
    pub fn advance(&mut self, state: &TemperatureField, dt: f64) -> Result<(TemperatureField, StepRecord)> {
        self.advance_with_guess(state, dt, None)
    }

    /// Like [`advance`](Self::advance) with a starting iterate for Newton.
    /// The converged step does not depend on the guess beyond the solver
    /// tolerance.
    pub fn advance_with_guess(
        &mut self,
        state: &TemperatureField,
        dt: f64,
        guess: Option<&[f64]>,
    ) -> Result<(TemperatureField, StepRecord)> {
        if !Arc::ptr_eq(state.grid(), &self.grid) && **state.grid() != *self.grid {
            return Err(Error::invalid("state", "field lives on a different grid"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let t_new = state.time() + dt;
        let old = state.values();
        let n = old.len();
        {
            let material = &self.material;
            par::for_each_chunk_mut(&mut self.enthalpy_old, |c, chunk| {
                let base = c * par::CHUNK;
                for (off, h) in chunk.iter_mut().enumerate() {
                    *h = material.enthalpy(old[base + off]);
                }
            });
        }
        self.source
            .nodal_loads(self.grid.x(), self.grid.z(), &self.areas, t_new, &mut self.loads);

        // Reference residual at the old state.
        let cached = match self.last.take() {
            Some((values, kt)) if values.as_slice() == old => {
                self.kt.copy_from_slice(&kt);
                true
            }
            _ => false,
        };
        if !cached {
            self.assemble(old, false);
        }
        let r_ref = self.residual_norm(old, dt);
        let floor = {
            let volumes = &self.volumes;
            let h_old = &self.enthalpy_old;
            let capacity = par::ordered_max(n, |r| r.map(|m| (volumes[m] * h_old[m] / dt).abs()).fold(0.0, f64::max));
            1e-14 * capacity.max(max_abs(&self.loads))
        };
        let target = (self.newton.tolerance * r_ref).max(floor);

        let mut t = match guess {
            Some(g) if g.len() == n && g.iter().all(|v| v.is_finite()) => g.to_vec(),
            _ => old.to_vec(),
        };
        let mut delta = vec![0.0; n];
        let mut linear_iterations = 0;
        let mut norm = r_ref;
        // (iterate before the last update, its residual norm, step fraction)
        let mut last: Option<(Vec<f64>, f64, f64)> = None;
        let mut converged_at = None;
        for it in 0..=self.newton.max_iterations {
            self.assemble(&t, true);
            norm = self.residual_norm(&t, dt);
            if norm <= target {
                converged_at = Some(it);
                break;
            }
            if it == self.newton.max_iterations {
                break;
            }
            // Backtrack while the residual grows.
            if let Some((prev, prev_norm, lambda)) = &mut last {
                if !(norm < *prev_norm) && *lambda > 1.0 / 64.0 {
                    *lambda *= 0.5;
                    for m in 0..n {
                        t[m] = prev[m] + *lambda * delta[m];
                    }
                    continue;
                }
            }
            self.add_diagonal(&t, dt);
            // Inexact Newton: the linear tolerance tightens with the residual.
            let forcing = (norm / r_ref).min(1e-2);
            linear_iterations += self.solve_linear(&mut delta, (0.1 * target).max(forcing * norm));
            // Near the melting interval the correction is applied to the
            // nodal enthalpy; a temperature update would overshoot the
            // latent peak and make Newton cycle.
            {
                let material = &self.material;
                let pc = material.phase_change;
                let w = pc.liquidus - pc.solidus;
                let (lo, hi) = (pc.solidus - w, pc.liquidus + w);
                let t_ref = &t;
                par::for_each_chunk_mut(&mut delta, |c, chunk| {
                    let base = c * par::CHUNK;
                    for (off, d) in chunk.iter_mut().enumerate() {
                        let v = t_ref[base + off];
                        if v.min(v + *d) > hi || v.max(v + *d) < lo {
                            continue;
                        }
                        let h = material.enthalpy(v) + material.apparent_volumetric_capacity(v) * *d;
                        *d = material.temperature_at_enthalpy(h, v + *d) - v;
                    }
                });
            }
            last = Some((t.clone(), norm, 1.0));
            for m in 0..n {
                t[m] += delta[m];
            }
        }
        let rel = if r_ref > 0.0 { norm / r_ref } else { 0.0 };
        let Some(iterations) = converged_at else {
            return Err(Error::NewtonFailed {
                time: t_new,
                iterations: self.newton.max_iterations,
                residual: rel,
            });
        };
        let [nx, ny, _] = self.grid.dims();
        let energy_in = dt * self.loads.iter().sum::<f64>();
        let mut radiated = 0.0;
        if self.emissivity > 0.0 && self.sigma > 0.0 {
            for (s, a) in self.areas.iter().enumerate() {
                let (i, k) = (s % nx, s / nx);
                let node = (k * ny + ny - 1) * nx + i;
                radiated += a * radiation_flux(t[node], self.ambient, self.emissivity, self.sigma);
            }
        }
        let record = StepRecord {
            time: t_new,
            dt,
            newton_iterations: iterations,
            linear_iterations,
            residual: rel,
            energy_in,
            energy_radiated: dt * radiated,
        };
        self.last = Some((t.clone(), self.kt.clone()));
        Ok((TemperatureField::new(self.grid.clone(), t, t_new)?, record))
    }

    /// Advances by `dt`, splitting the step in halves when Newton fails.
    pub fn advance_adaptive(
        &mut self,
        state: &TemperatureField,
        dt: f64,
        guess: Option<&[f64]>,
        records: &mut Vec<StepRecord>,
    ) -> Result<TemperatureField> {
        self.advance_split(state, dt, guess, 0, records)
    }

    fn advance_split(
        &mut self,
        state: &TemperatureField,
        dt: f64,
        guess: Option<&[f64]>,
        depth: usize,
        records: &mut Vec<StepRecord>,
    ) -> Result<TemperatureField> {
        match self.advance_with_guess(state, dt, guess) {
            Ok((next, rec)) => {
                records.push(rec);
                Ok(next)
            }
            Err(Error::NewtonFailed { .. }) if depth < self.newton.max_step_halvings => {
                let half = self.advance_split(state, 0.5 * dt, None, depth + 1, records)?;
                self.advance_split(&half, 0.5 * dt, None, depth + 1, records)
            }
            Err(Error::NewtonFailed { time, .. }) => Err(Error::TimeStepUnderflow { time, dt }),
            Err(e) => Err(e),
        }
    }
}

/// One implicit step for `cfg` from `state`; builds a fresh solver.
pub fn advance(state: &TemperatureField, cfg: &SimulationConfig, dt: f64) -> Result<TemperatureField> {
    cfg.validate()?;
    let mut solver = Solver::with_grid(cfg, state.grid().clone());
    Ok(solver.advance(state, dt)?.0)
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub snapshots: Vec<TemperatureField>,
    pub report: SolveReport,
}

impl SimulationOutput {
    pub fn final_field(&self) -> &TemperatureField {
        self.snapshots.last().expect("the initial state is always stored")
    }

    /// The stored snapshot closest in time to `t`.
    pub fn snapshot_near(&self, t: f64) -> &TemperatureField {
        self.snapshots
            .iter()
            .min_by(|a, b| {
                (a.time() - t)
                    .abs()
                    .partial_cmp(&(b.time() - t).abs())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .expect("non-empty")
    }
}

/// Runs the full time loop from the uniform initial temperature to
/// `cfg.end_time`.
pub fn simulate(cfg: &SimulationConfig) -> Result<SimulationOutput> {
    let mut solver = Solver::new(cfg)?;
    run(&mut solver, cfg)
}

/// Time loop on an existing solver.
pub fn run(solver: &mut Solver, cfg: &SimulationConfig) -> Result<SimulationOutput> {
    #[cfg(feature = "std")]
    let clock = std::time::Instant::now();
    let dt = cfg.resolved_time_step(solver.grid());
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("solver.time_step", "resolved step is not positive"));
    }
    let mut state = solver.uniform_field(cfg.initial_temperature, 0.0);
    let mut snapshots = vec![state.clone()];
    let mut report = SolveReport::default();
    let steps = {
        let r = cfg.end_time / dt;
        let n = crate::math::round(r);
        if (r - n).abs() < 1e-9 * r.max(1.0) {
            n as usize
        } else {
            crate::math::ceil(r) as usize
        }
    };
    let mut pending: Vec<f64> = cfg
        .snapshots
        .at_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= cfg.end_time)
        .collect();
    pending.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    pending.dedup();
    let mut pending = pending.into_iter().peekable();
    let eps = 1e-9 * dt;
    // Previous state and step length, for the Newton predictor.
    let mut previous: Option<(Vec<f64>, f64)> = None;
    let mut guess = Vec::new();
    for step in 1..=steps {
        let nominal = if step == steps { cfg.end_time } else { step as f64 * dt };
        // Requested times inside this step split it.
        let mut targets: Vec<(f64, bool)> = Vec::new();
        while let Some(&t) = pending.peek() {
            if t < nominal - eps {
                if t > state.time() + eps {
                    targets.push((t, true));
                }
                pending.next();
            } else {
                break;
            }
        }
        let mut keep = step == steps || (cfg.snapshots.every > 0 && step % cfg.snapshots.every == 0);
        while let Some(&t) = pending.peek() {
            if t <= nominal + eps {
                keep = true;
                pending.next();
            } else {
                break;
            }
        }
        targets.push((nominal, keep));
        for (t_target, keep) in targets {
            let h = t_target - state.time();
            if h <= 0.0 {
                continue;
            }
            let predicted = match &previous {
                Some((prev, h_prev)) => {
                    let w = h / h_prev;
                    guess.clear();
                    guess.extend(state.values().iter().zip(prev).map(|(t, p)| t + (t - p) * w));
                    Some(guess.as_slice())
                }
                None => None,
            };
            let next = solver.advance_adaptive(&state, h, predicted, &mut report.steps)?;
            previous = Some((state.into_values(), h));
            state = next;
            // Pin the clock to the exact target rather than a sum of steps.
            state = TemperatureField::new(solver.grid().clone(), state.into_values(), t_target)?;
            if let Some(last) = report.steps.last_mut() {
                last.time = t_target;
            }
            if keep {
                snapshots.push(state.clone());
            }
        }
    }
    #[cfg(feature = "std")]
    {
        report.wall_time = Some(clock.elapsed().as_secs_f64());
    }
    Ok(SimulationOutput { snapshots, report })
}

/// Relative closure error of the energy ledger between the first and the
/// last snapshot: `|E_in + E_rad − ΔH| / E_in`, with `ΔH` the change of
/// lumped nodal enthalpy. A run without input and without change reports 0.
pub fn energy_balance(snapshots: &[TemperatureField], report: &SolveReport, cfg: &SimulationConfig) -> Result<f64> {
    let (Some(first), Some(last)) = (snapshots.first(), snapshots.last()) else {
        return Err(Error::HistoryMismatch("no snapshots".into()));
    };
    let grid = first.grid();
    if snapshots.iter().any(|s| s.grid().dims() != grid.dims()) {
        return Err(Error::HistoryMismatch("snapshots live on different grids".into()));
    }
    if snapshots.windows(2).any(|w| w[1].time() < w[0].time()) {
        return Err(Error::HistoryMismatch("snapshot times are not ordered".into()));
    }
    let on_boundary = |t: f64| {
        t == 0.0 || report.steps.iter().any(|s| (s.time - t).abs() <= 1e-9 * s.dt)
    };
    for s in [first, last] {
        if !on_boundary(s.time()) {
            return Err(Error::HistoryMismatch(format!(
                "snapshot time {} is not a step boundary of the report",
                s.time()
            )));
        }
    }
    let (t0, t1) = (first.time(), last.time());
    let in_window = |s: &&StepRecord| s.time > t0 + 1e-9 * s.dt && s.time <= t1 + 1e-9 * s.dt;
    let e_in: f64 = report.steps.iter().filter(in_window).map(|s| s.energy_in).sum();
    let e_rad: f64 = report.steps.iter().filter(in_window).map(|s| s.energy_radiated).sum();
    let volumes = lumped_volumes(grid);
    let dh: f64 = volumes
        .iter()
        .zip(first.values().iter().zip(last.values()))
        .map(|(v, (a, b))| v * (cfg.material.enthalpy(*b) - cfg.material.enthalpy(*a)))
        .sum();
    let mismatch = (e_in + e_rad - dh).abs();
    let scale = if e_in > 0.0 { e_in } else { e_rad.abs().max(dh.abs()) };
    Ok(if scale > 0.0 { mismatch / scale } else { 0.0 })
}
