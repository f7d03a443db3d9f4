//! Graded tensor-product hexahedral grid and nodal temperature fields.
//!
//! Axis convention: `x` runs across the track, `y` is depth (the top surface
//! is `y = 0`, the plate occupies `y < 0`), `z` runs along the scan.
//! Node `(i, j, k)` is stored at `(k * ny + j) * nx + i`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Largest allowed size ratio between adjacent cells.
pub const MAX_GROWTH: f64 = 1.5;

/// Plate extents in mm: `x ∈ [−width/2, width/2]`, `y ∈ [−depth, 0]`,
/// `z ∈ [0, length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    pub width: f64,
    pub depth: f64,
    pub length: f64,
}

impl DomainBox {
    pub fn new(width: f64, depth: f64, length: f64) -> Result<Self> {
        for (f, v) in [("grid.width", width), ("grid.depth", depth), ("grid.length", length)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(f, "extent must be positive"));
            }
        }
        Ok(Self {
            width,
            depth,
            length,
        })
    }

    pub fn lower(&self) -> [f64; 3] {
        [-0.5 * self.width, -self.depth, 0.0]
    }

    pub fn upper(&self) -> [f64; 3] {
        [0.5 * self.width, 0.0, self.length]
    }
}

/// Box refined to the fine spacing; each entry is a `(min, max)` range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineBand {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub z: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub domain: DomainBox,
    pub coarse_spacing: f64,
    pub fine_spacing: f64,
    pub band: Option<FineBand>,
    /// Target growth ratio used when coarsening away from the band.
    pub growth: f64,
}

impl GridSpec {
    pub const DEFAULT_GROWTH: f64 = 1.3;

    pub fn uniform(domain: DomainBox, spacing: f64) -> Self {
        Self {
            domain,
            coarse_spacing: spacing,
            fine_spacing: spacing,
            band: None,
            growth: Self::DEFAULT_GROWTH,
        }
    }
}

/// Node coordinates for one axis: uniform cells of at most `fine` inside
/// `band`, growing geometrically towards `coarse` outside of it.
pub fn grade_axis(
    axis: char,
    lo: f64,
    hi: f64,
    band: Option<(f64, f64)>,
    fine: f64,
    coarse: f64,
    growth: f64,
) -> Result<Vec<f64>> {
    let err = |reason: alloc::string::String| Error::InfeasibleGrading { axis, reason };
    if !(hi > lo) {
        return Err(err(format!("empty interval [{lo}, {hi}]")));
    }
    if !(fine > 0.0 && coarse > 0.0) || !fine.is_finite() || !coarse.is_finite() {
        return Err(err("spacings must be positive".into()));
    }
    if !(growth > 1.0 && growth <= MAX_GROWTH) {
        return Err(err(format!("growth ratio must lie in (1, {MAX_GROWTH}]")));
    }
    let length = hi - lo;
    let band = match band {
        Some(b) if fine < coarse => b,
        _ => {
            let n = cells_for(length, coarse);
            if n < 2 {
                return Err(err(format!(
                    "spacing {coarse} leaves a single cell across length {length}"
                )));
            }
            return Ok(uniform_nodes(lo, hi, n));
        }
    };
    let (b0, b1) = band;
    let tol = 1e-12 * length;
    if !(b1 > b0) || b0 < lo - tol || b1 > hi + tol {
        return Err(err(format!("fine band [{b0}, {b1}] must lie inside [{lo}, {hi}]")));
    }
    let (b0, b1) = (b0.max(lo), b1.min(hi));
    let nb = cells_for(b1 - b0, fine);
    let hb = (b1 - b0) / nb as f64;
    let left = grade_side(b0 - lo, hb, coarse, growth).map_err(|r| err(format!("below the band: {r}")))?;
    let right = grade_side(hi - b1, hb, coarse, growth).map_err(|r| err(format!("above the band: {r}")))?;

    let mut nodes = Vec::with_capacity(left.len() + nb + right.len() + 1);
    nodes.push(lo);
    let mut x = lo;
    for s in left.iter().rev() {
        x += s;
        nodes.push(x);
    }
    // Pin the band edge so the band cells are exactly uniform.
    if let Some(last) = nodes.last_mut() {
        *last = b0;
    }
    for m in 1..=nb {
        nodes.push(if m == nb { b1 } else { b0 + hb * m as f64 });
    }
    let mut x = b1;
    for s in right.iter() {
        x += s;
        nodes.push(x);
    }
    if let Some(last) = nodes.last_mut() {
        *last = hi;
    }
    if nodes.len() < 3 {
        return Err(err("fewer than two cells".into()));
    }
    Ok(nodes)
}

/// Number of cells of at most `h` covering `length`, tolerant of round-off
/// when `length` is an exact multiple of `h`.
fn cells_for(length: f64, h: f64) -> usize {
    let r = length / h;
    let n = math::round(r);
    if (r - n).abs() < 1e-9 * r.max(1.0) {
        (n as usize).max(1)
    } else {
        (math::ceil(r) as usize).max(1)
    }
}

fn uniform_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|m| if m == n { hi } else { lo + (hi - lo) * m as f64 / n as f64 })
        .collect()
}

/// Cell sizes marching away from a band edge with spacing `h0` across a
/// distance `d`, ordered from the band outward.
fn grade_side(d: f64, h0: f64, coarse: f64, growth: f64) -> core::result::Result<Vec<f64>, &'static str> {
    if d <= 1e-12 * h0 {
        return Ok(Vec::new());
    }
    let mut sizes = Vec::new();
    let mut sum = 0.0;
    let mut prev = h0;
    let next_size = |prev: f64| (prev * growth).min(coarse.max(h0));
    loop {
        let s = next_size(prev);
        if sum + s > d {
            break;
        }
        sizes.push(s);
        sum += s;
        prev = s;
    }
    let rem = d - sum;
    if rem <= 1e-12 * d {
        return Ok(sizes);
    }
    // Preferred: one more cell with a milder geometric ratio, found by
    // bisection, so no cell drops below the band spacing.
    let n = sizes.len() + 1;
    let cap = coarse.max(h0);
    let total = |r: f64| {
        let mut h = h0;
        let mut acc = 0.0;
        for _ in 0..n {
            h = (h * r).min(cap);
            acc += h;
        }
        acc
    };
    if total(1.0) <= d {
        let (mut a, mut b) = (1.0, growth);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if total(m) > d {
                b = m;
            } else {
                a = m;
            }
        }
        let r = 0.5 * (a + b);
        let mut h = h0;
        let mut out: Vec<f64> = (0..n)
            .map(|_| {
                h = (h * r).min(cap);
                h
            })
            .collect();
        // Absorb the bisection residue in the outermost cell.
        let acc: f64 = out.iter().sum();
        if let Some(last) = out.last_mut() {
            *last += d - acc;
        }
        return Ok(out);
    }
    let ok = |first: f64| first / h0 <= MAX_GROWTH && h0 / first <= MAX_GROWTH;
    let mut best: Option<(f64, Vec<f64>)> = None;
    // Stretch the existing cells over the remainder.
    if !sizes.is_empty() {
        let f = d / sum;
        if ok(sizes[0] * f) {
            best = Some((f, sizes.iter().map(|s| s * f).collect()));
        }
    }
    // Or add one more cell and shrink everything to fit.
    let mut extended = sizes.clone();
    extended.push(next_size(prev));
    let f = d / (sum + extended.last().unwrap());
    if ok(extended[0] * f) {
        let better = match &best {
            Some((g, _)) => math::abs(libm::log(f)) < math::abs(libm::log(*g)),
            None => true,
        };
        if better {
            best = Some((f, extended.iter().map(|s| s * f).collect()));
        }
    }
    best.map(|(_, s)| s)
        .ok_or("the band is too close to the boundary for the growth-ratio bound")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradedGrid {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl GradedGrid {
    pub fn from_axes(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        for (name, a) in [("grid.x", &x), ("grid.y", &y), ("grid.z", &z)] {
            if a.len() < 2 || a.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid(name, "node coordinates must be strictly increasing"));
            }
        }
        Ok(Self { x, y, z })
    }

    pub fn build(spec: &GridSpec) -> Result<Self> {
        let lo = spec.domain.lower();
        let hi = spec.domain.upper();
        let band = spec.band;
        let axes = ['x', 'y', 'z'];
        let mut out: [Vec<f64>; 3] = Default::default();
        for d in 0..3 {
            let b = band.map(|b| [b.x, b.y, b.z][d]);
            out[d] = grade_axis(
                axes[d],
                lo[d],
                hi[d],
                b,
                spec.fine_spacing,
                spec.coarse_spacing,
                spec.growth,
            )?;
        }
        let [x, y, z] = out;
        Self::from_axes(x, y, z)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn axis(&self, d: usize) -> &[f64] {
        [&self.x, &self.y, &self.z][d]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.x.len(), self.y.len(), self.z.len()]
    }

    pub fn node_count(&self) -> usize {
        self.x.len() * self.y.len() * self.z.len()
    }

    pub fn cell_count(&self) -> usize {
        (self.x.len() - 1) * (self.y.len() - 1) * (self.z.len() - 1)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.y.len() + j) * self.x.len() + i
    }

    pub fn ijk(&self, n: usize) -> [usize; 3] {
        let nx = self.x.len();
        let ny = self.y.len();
        [n % nx, (n / nx) % ny, n / (nx * ny)]
    }

    pub fn node(&self, n: usize) -> [f64; 3] {
        let [i, j, k] = self.ijk(n);
        [self.x[i], self.y[j], self.z[k]]
    }

    pub fn lower(&self) -> [f64; 3] {
        [self.x[0], self.y[0], self.z[0]]
    }

    pub fn upper(&self) -> [f64; 3] {
        [
            *self.x.last().unwrap(),
            *self.y.last().unwrap(),
            *self.z.last().unwrap(),
        ]
    }

    /// Smallest cell edge over all axes.
    pub fn min_spacing(&self) -> f64 {
        [&self.x, &self.y, &self.z]
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Containing cell and local coordinates in `[0, 1]³`.
    pub fn locate(&self, p: [f64; 3]) -> Option<([usize; 3], [f64; 3])> {
        let mut cell = [0; 3];
        let mut local = [0.0; 3];
        for d in 0..3 {
            let a = self.axis(d);
            let (lo, hi) = (a[0], a[a.len() - 1]);
            let tol = 1e-12 * (hi - lo);
            if !(p[d] >= lo - tol && p[d] <= hi + tol) {
                return None;
            }
            let c = a.partition_point(|&v| v <= p[d]).clamp(1, a.len() - 1) - 1;
            cell[d] = c;
            local[d] = ((p[d] - a[c]) / (a[c + 1] - a[c])).clamp(0.0, 1.0);
        }
        Some((cell, local))
    }
}

/// Anything that can be sampled at a point; metric extraction works on this.
pub trait ScalarField: Sync {
    /// Value at `p`, or `None` outside the field's domain.
    fn value_at(&self, p: [f64; 3]) -> Option<f64>;
    /// Axis-aligned bounds `(lower, upper)`.
    fn bounds(&self) -> ([f64; 3], [f64; 3]);
}

/// Nodal temperatures (°C) on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    grid: Arc<GradedGrid>,
    values: Vec<f64>,
    time: f64,
}

impl TemperatureField {
    pub fn new(grid: Arc<GradedGrid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::invalid("field", "one value per grid node is required"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field", "temperatures must be finite"));
        }
        Ok(Self { grid, values, time })
    }

    pub fn uniform(grid: Arc<GradedGrid>, temperature: f64, time: f64) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            values: alloc::vec![temperature; n],
            time,
        }
    }

    /// Samples `f(x, y, z)` at every node.
    pub fn from_fn(grid: Arc<GradedGrid>, time: f64, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|n| f(grid.node(n))).collect();
        Self { grid, values, time }
    }

    pub fn grid(&self) -> &Arc<GradedGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Trilinear interpolation inside the containing cell.
    pub fn interpolate(&self, p: [f64; 3]) -> Result<f64> {
        self.value_at(p).ok_or(Error::OutOfDomain {
            x: p[0],
            y: p[1],
            z: p[2],
        })
    }
}

impl ScalarField for TemperatureField {
    fn value_at(&self, p: [f64; 3]) -> Option<f64> {
        let ([i, j, k], [u, v, w]) = self.grid.locate(p)?;
        let g = &self.grid;
        let c = |di: usize, dj: usize, dk: usize| self.values[g.index(i + di, j + dj, k + dk)];
        let x00 = c(0, 0, 0) * (1.0 - u) + c(1, 0, 0) * u;
        let x10 = c(0, 1, 0) * (1.0 - u) + c(1, 1, 0) * u;
        let x01 = c(0, 0, 1) * (1.0 - u) + c(1, 0, 1) * u;
        let x11 = c(0, 1, 1) * (1.0 - u) + c(1, 1, 1) * u;
        let y0 = x00 * (1.0 - v) + x10 * v;
        let y1 = x01 * (1.0 - v) + x11 * v;
        Some(y0 * (1.0 - w) + y1 * w)
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        (self.grid.lower(), self.grid.upper())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn ratios_ok(a: &[f64]) -> bool {
        a.windows(3).all(|w| {
            let (s0, s1) = (w[1] - w[0], w[2] - w[1]);
            s1 / s0 <= MAX_GROWTH + 1e-12 && s0 / s1 <= MAX_GROWTH + 1e-12
        })
    }

    #[test]
    fn uniform_request_gives_exact_node_count() {
        let a = grade_axis('x', 0.0, 2.0, None, 0.1, 0.1, 1.3).unwrap();
        assert_eq!(a.len(), 21);
        let a = grade_axis('x', 0.0, 2.0, Some((0.5, 1.0)), 0.3, 0.3, 1.3).unwrap();
        assert_eq!(a.len(), (2.0f64 / 0.3).ceil() as usize + 1);
        assert_eq!(*a.last().unwrap(), 2.0);
    }

    #[test]
    fn graded_axis_respects_band_and_growth() {
        let a = grade_axis('x', -1.0, 1.0, Some((-0.15, 0.15)), 0.01, 0.1, 1.3).unwrap();
        assert_eq!(a[0], -1.0);
        assert_eq!(*a.last().unwrap(), 1.0);
        assert!(a.windows(2).all(|w| w[1] > w[0]));
        for w in a.windows(2) {
            if w[0] >= -0.15 - 1e-12 && w[1] <= 0.15 + 1e-12 {
                assert!(w[1] - w[0] <= 0.01 + 1e-15);
            }
        }
        assert!(ratios_ok(&a));
        assert!(a.iter().any(|&v| v == -0.15) && a.iter().any(|&v| v == 0.15));
    }

    #[test]
    fn degenerate_and_infeasible_requests_rejected() {
        assert!(matches!(
            grade_axis('y', 0.0, 1.0, None, 1.0, 1.0, 1.3),
            Err(Error::InfeasibleGrading { axis: 'y', .. })
        ));
        // 0.3 fine cells next to a 0.003 gap cannot satisfy the ratio bound.
        let e = grade_axis('z', 0.0, 1.0, Some((0.003, 0.9)), 0.01, 0.1, 1.3);
        assert!(matches!(e, Err(Error::InfeasibleGrading { axis: 'z', .. })), "{e:?}");
        assert!(grade_axis('z', 0.0, 1.0, Some((0.5, 1.5)), 0.01, 0.1, 1.3).is_err());
    }

    #[test]
    fn band_touching_boundary() {
        let a = grade_axis('y', -0.5, 0.0, Some((-0.1, 0.0)), 0.0125, 0.1, 1.3).unwrap();
        assert_eq!(*a.last().unwrap(), 0.0);
        assert!((a[a.len() - 1] - a[a.len() - 2] - 0.0125).abs() < 1e-15);
        assert!(ratios_ok(&a));
    }

    #[test]
    fn build_is_deterministic() {
        let spec = GridSpec {
            domain: DomainBox::new(2.0, 0.5, 4.0).unwrap(),
            coarse_spacing: 0.1,
            fine_spacing: 0.025,
            band: Some(FineBand {
                x: (-0.15, 0.15),
                y: (-0.1, 0.0),
                z: (0.3, 3.7),
            }),
            growth: 1.3,
        };
        let a = GradedGrid::build(&spec).unwrap();
        let b = GradedGrid::build(&spec).unwrap();
        assert_eq!(a, b);
        assert!((a.min_spacing() - 0.025).abs() < 1e-12);
    }

    fn small_grid() -> Arc<GradedGrid> {
        Arc::new(
            GradedGrid::from_axes(
                vec![-1.0, -0.4, 0.1, 1.0],
                vec![-0.5, -0.2, 0.0],
                vec![0.0, 0.3, 0.35, 1.2, 2.0],
            )
            .unwrap(),
        )
    }

    #[test]
    fn interpolation_examples() {
        let g = small_grid();
        let f = TemperatureField::from_fn(g.clone(), 0.0, |p| 7.0 * p[0] + p[1] * p[1] - 3.0 * p[2] * p[0]);
        for n in 0..g.node_count() {
            assert_eq!(f.interpolate(g.node(n)).unwrap(), f.values()[n]);
        }
        let lin = TemperatureField::from_fn(g.clone(), 0.0, |p| 3.5 * p[0]);
        assert!((lin.interpolate([0.33, -0.1, 0.9]).unwrap() - 3.5 * 0.33).abs() < 1e-14);

        let corners: Vec<f64> = (0..8).map(|c| [3.0, -1.0, 4.0, 1.5, 9.0, 2.6, -5.0, 3.5][c]).collect();
        let one = Arc::new(GradedGrid::from_axes(vec![0.0, 2.0], vec![-1.0, 0.0], vec![0.0, 0.5]).unwrap());
        let cell = TemperatureField::new(one, corners.clone(), 0.0).unwrap();
        let mean = corners.iter().sum::<f64>() / 8.0;
        assert!((cell.interpolate([1.0, -0.5, 0.25]).unwrap() - mean).abs() < 1e-14);
        assert!(cell.interpolate([2.5, -0.5, 0.25]).is_err());
    }

    proptest! {
        #[test]
        fn affine_fields_reproduced(
            a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -100.0f64..100.0,
            x in -1.0f64..1.0, y in -0.5f64..0.0, z in 0.0f64..2.0
        ) {
            let f = TemperatureField::from_fn(small_grid(), 0.0, |p| a * p[0] + b * p[1] + c * p[2] + d);
            let v = f.interpolate([x, y, z]).unwrap();
            prop_assert!((v - (a * x + b * y + c * z + d)).abs() < 1e-11);
        }

        #[test]
        fn interpolant_bounded_by_corners(
            vals in proptest::collection::vec(-1000.0f64..3000.0, 8),
            u in 0.0f64..1.0, v in 0.0f64..1.0, w in 0.0f64..1.0
        ) {
            let one = Arc::new(GradedGrid::from_axes(vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, 1.0]).unwrap());
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let f = TemperatureField::new(one, vals, 0.0).unwrap();
            let t = f.interpolate([u, v - 1.0, w]).unwrap();
            prop_assert!(t >= lo - 1e-9 && t <= hi + 1e-9);
        }

        #[test]
        fn graded_axes_meet_invariants(
            band_lo in -0.9f64..0.0, width in 0.05f64..0.8, fine in 0.005f64..0.03, coarse in 0.05f64..0.2
        ) {
            let band_hi = (band_lo + width).min(1.0);
            if let Ok(a) = grade_axis('x', -1.0, 1.0, Some((band_lo, band_hi)), fine, coarse, 1.3) {
                prop_assert!(a.windows(2).all(|w| w[1] > w[0]));
                prop_assert!(ratios_ok(&a));
                for w in a.windows(2) {
                    if w[0] >= band_lo - 1e-12 && w[1] <= band_hi + 1e-12 {
                        prop_assert!(w[1] - w[0] <= fine * (1.0 + 1e-12));
                    }
                }
            }
        }
    }
}
