//! Melt-pool geometry and cooling rate from temperature snapshots.
//!
//! All searches run on straight lines through the field: the scan line on
//! the top surface for length and cooling rate, transverse surface lines for
//! width and vertical lines below the scan line for depth. Each line is
//! sampled uniformly and every sign change of `T − T_iso` is refined by
//! bisection. Lengths are mm internally; [`MeltPoolMetrics`] reports μm.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::ScalarField;
use crate::heat_source::ScanPath;
use crate::par;
use crate::{Error, Result};

/// Default melt isotherm (solidus), °C.
pub const DEFAULT_ISOTHERM: f64 = 1290.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSettings {
    /// Stations along the pool for the width and depth search.
    pub stations: usize,
    /// Uniform samples per search line before bisection.
    pub samples: usize,
    /// Bisection tolerance, mm.
    pub tolerance: f64,
    /// Samples per axis of the cross-section raster.
    pub contour_samples: usize,
    /// Beam travel (mm) below which a snapshot is not quasi-steady.
    pub quasi_steady_travel: f64,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self {
            stations: 200,
            samples: 400,
            tolerance: 1e-5,
            contour_samples: 401,
            quasi_steady_travel: 2.0,
        }
    }
}

impl MetricSettings {
    pub fn validate(&self) -> Result<()> {
        if self.stations < 2 {
            return Err(Error::invalid("metrics.stations", "at least 2 stations are needed"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("metrics.samples", "at least 2 samples are needed"));
        }
        if self.contour_samples < 3 {
            return Err(Error::invalid("metrics.contour_samples", "at least 3 samples are needed"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("metrics.tolerance", "must be positive"));
        }
        if !(self.quasi_steady_travel >= 0.0) {
            return Err(Error::invalid("metrics.quasi_steady_travel", "must be non-negative"));
        }
        Ok(())
    }
}

/// Isotherm pair and speed for `CR = (T_high − T_low) / Δd · v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingRateDefinition {
    /// °C
    pub t_high: f64,
    /// °C
    pub t_low: f64,
    /// mm/s
    pub speed: f64,
}

impl CoolingRateDefinition {
    pub fn new(t_high: f64, t_low: f64, speed: f64) -> Result<Self> {
        let d = Self { t_high, t_low, speed };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_high > self.t_low && self.t_low > 0.0) {
            return Err(Error::invalid("metrics.cooling", "requires t_high > t_low > 0"));
        }
        if !(self.speed > 0.0) {
            return Err(Error::invalid("metrics.cooling.speed", "must be positive"));
        }
        Ok(())
    }
}

/// Scan line on the top surface: a point on it and the travel direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGeometry {
    pub origin: [f64; 3],
    /// Unit vector in the `y = 0` plane.
    pub direction: [f64; 3],
}

impl ScanGeometry {
    pub fn from_path(path: &ScanPath) -> Self {
        Self {
            origin: path.start,
            direction: path.direction,
        }
    }

    pub fn along_z(x: f64) -> Self {
        Self {
            origin: [x, 0.0, 0.0],
            direction: [0.0, 0.0, 1.0],
        }
    }

    fn transverse(&self) -> [f64; 3] {
        [self.direction[2], 0.0, -self.direction[0]]
    }

    fn at(&self, s: f64) -> [f64; 3] {
        add(self.origin, self.direction, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeltPoolMetrics {
    /// μm
    pub length: f64,
    /// μm
    pub width: f64,
    /// μm
    pub depth: f64,
    /// °C/s, when requested and found.
    pub cooling_rate: Option<f64>,
    /// s
    pub time: f64,
    /// °C
    pub isotherm: f64,
    /// No point of the scan line reaches the isotherm.
    pub empty: bool,
    /// Position of the widest section along the scan line, mm from the origin.
    pub widest_station: f64,
    /// Position of the deepest section along the scan line, mm from the origin.
    pub deepest_station: f64,
}

impl MeltPoolMetrics {
    fn empty(time: f64, isotherm: f64) -> Self {
        Self {
            length: 0.0,
            width: 0.0,
            depth: 0.0,
            cooling_rate: None,
            time,
            isotherm,
            empty: true,
            widest_station: 0.0,
            deepest_station: 0.0,
        }
    }
}

fn add(p: [f64; 3], u: [f64; 3], s: f64) -> [f64; 3] {
    [p[0] + s * u[0], p[1] + s * u[1], p[2] + s * u[2]]
}

/// Parameter range `[s0, s1]` of `p + s u` inside the box.
fn clip(p: [f64; 3], u: [f64; 3], bounds: ([f64; 3], [f64; 3])) -> Option<(f64, f64)> {
    let (lo, hi) = bounds;
    let (mut s0, mut s1) = (f64::NEG_INFINITY, f64::INFINITY);
    for d in 0..3 {
        let tol = 1e-12 * (hi[d] - lo[d]).abs().max(1.0);
        if u[d] == 0.0 {
            if p[d] < lo[d] - tol || p[d] > hi[d] + tol {
                return None;
            }
        } else {
            let a = (lo[d] - p[d]) / u[d];
            let b = (hi[d] - p[d]) / u[d];
            s0 = s0.max(a.min(b));
            s1 = s1.min(a.max(b));
        }
    }
    (s1 > s0).then_some((s0, s1))
}

/// Samples of `field − iso` on `p + s u`, `s ∈ [s0, s1]`.
struct LineScan<'a, F: ScalarField + ?Sized> {
    field: &'a F,
    p: [f64; 3],
    u: [f64; 3],
    s0: f64,
    ds: f64,
    values: Vec<f64>,
}

impl<'a, F: ScalarField + ?Sized> LineScan<'a, F> {
    fn new(field: &'a F, p: [f64; 3], u: [f64; 3], range: (f64, f64), samples: usize) -> Self {
        let (s0, s1) = range;
        let ds = (s1 - s0) / samples as f64;
        let values = (0..=samples)
            .map(|m| {
                let s = if m == samples { s1 } else { s0 + ds * m as f64 };
                field.value_at(add(p, u, s)).unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        Self {
            field,
            p,
            u,
            s0,
            ds,
            values,
        }
    }

    fn s(&self, m: usize) -> f64 {
        if m + 1 == self.values.len() {
            self.s0 + self.ds * (self.values.len() - 1) as f64
        } else {
            self.s0 + self.ds * m as f64
        }
    }

    fn value(&self, s: f64) -> f64 {
        self.field.value_at(add(self.p, self.u, s)).unwrap_or(f64::NEG_INFINITY)
    }

    fn bisect(&self, mut a: f64, mut b: f64, iso: f64, tol: f64) -> f64 {
        let above_a = self.value(a) >= iso;
        while (b - a).abs() > tol {
            let m = 0.5 * (a + b);
            if (self.value(m) >= iso) == above_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Maximal runs with `T ≥ iso` as `(start, end, start_is_crossing,
    /// end_is_crossing)`.
    fn above(&self, iso: f64, tol: f64) -> Vec<(f64, f64, bool, bool)> {
        let mut runs = Vec::new();
        let mut open: Option<(f64, bool)> = None;
        let n = self.values.len();
        for m in 0..n {
            let up = self.values[m] >= iso;
            match (open, up) {
                (None, true) => {
                    open = Some(if m == 0 {
                        (self.s(0), false)
                    } else {
                        (self.bisect(self.s(m - 1), self.s(m), iso, tol), true)
                    });
                }
                (Some((a, ac)), false) => {
                    runs.push((a, self.bisect(self.s(m - 1), self.s(m), iso, tol), ac, true));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some((a, ac)) = open {
            runs.push((a, self.s(n - 1), ac, false));
        }
        runs
    }

    fn argmax(&self) -> usize {
        let mut best = 0;
        for (m, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = m;
            }
        }
        best
    }
}

/// Positions (distance from `a`, mm) where the interpolated temperature
/// crosses `iso` on the segment `a → b`, in order along the segment.
pub fn isotherm_crossings<F: ScalarField + ?Sized>(
    field: &F,
    a: [f64; 3],
    b: [f64; 3],
    iso: f64,
    samples: usize,
    tolerance: f64,
) -> Vec<f64> {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let len = crate::math::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    if !(len > 0.0) {
        return Vec::new();
    }
    let u = [d[0] / len, d[1] / len, d[2] / len];
    let scan = LineScan::new(field, a, u, (0.0, len), samples.max(1));
    let mut out = Vec::new();
    for (s0, s1, c0, c1) in scan.above(iso, tolerance) {
        if c0 {
            out.push(s0);
        }
        if c1 {
            out.push(s1);
        }
    }
    out
}

/// The run on the scan line around its hottest sample.
fn pool_on_scan_line<F: ScalarField + ?Sized>(
    field: &F,
    geom: &ScanGeometry,
    iso: f64,
    settings: &MetricSettings,
) -> Option<(f64, f64, bool, bool)> {
    let range = clip(geom.origin, geom.direction, field.bounds())?;
    let scan = LineScan::new(field, geom.origin, geom.direction, range, settings.samples);
    let hot = scan.s(scan.argmax());
    let runs = scan.above(iso, settings.tolerance);
    runs.iter()
        .copied()
        .find(|r| r.0 <= hot && hot <= r.1)
        .or_else(|| runs.first().copied())
}

/// Transverse extent of the melt region on the surface at station `s`.
fn width_at<F: ScalarField + ?Sized>(field: &F, geom: &ScanGeometry, s: f64, iso: f64, settings: &MetricSettings) -> f64 {
    let p = geom.at(s);
    let t = geom.transverse();
    let Some(range) = clip(p, t, field.bounds()) else {
        return 0.0;
    };
    let scan = LineScan::new(field, p, t, range, settings.samples);
    let runs = scan.above(iso, settings.tolerance);
    match (runs.first(), runs.last()) {
        (Some(a), Some(b)) => b.1 - a.0,
        _ => 0.0,
    }
}

/// Deepest melt point below the surface at station `s`.
fn depth_at<F: ScalarField + ?Sized>(field: &F, geom: &ScanGeometry, s: f64, iso: f64, settings: &MetricSettings) -> f64 {
    let p = geom.at(s);
    let down = [0.0, -1.0, 0.0];
    let Some((_, s1)) = clip(p, down, field.bounds()) else {
        return 0.0;
    };
    let scan = LineScan::new(field, p, down, (0.0, s1), settings.samples);
    scan.above(iso, settings.tolerance)
        .last()
        .map(|r| r.1)
        .unwrap_or(0.0)
}

/// Maximizes `f` over stations in `[a, b]`, then refines around the best
/// station by golden-section search. Returns `(station, value)`.
fn maximize(a: f64, b: f64, stations: usize, f: &(dyn Fn(f64) -> f64 + Sync)) -> (f64, f64) {
    let h = (b - a) / (stations - 1) as f64;
    let values = par::map(stations, |m| {
        let s = if m + 1 == stations { b } else { a + h * m as f64 };
        (s, f(s))
    });
    let mut best = values[0];
    for v in &values {
        if v.1 > best.1 {
            best = *v;
        }
    }
    if best.1 <= 0.0 || h <= 0.0 {
        return best;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = ((best.0 - h).max(a), (best.0 + h).min(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..48 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// Length along the scan line, maximal surface width and maximal depth of
/// the region at or above `iso`. Width and depth are searched over
/// stations spanning the pool's extent on the scan line.
pub fn melt_pool_dimensions<F: ScalarField + ?Sized>(
    field: &F,
    time: f64,
    iso: f64,
    geom: &ScanGeometry,
    settings: &MetricSettings,
) -> Result<MeltPoolMetrics> {
    settings.validate()?;
    let Some((rear, front, _, _)) = pool_on_scan_line(field, geom, iso, settings) else {
        return Ok(MeltPoolMetrics::empty(time, iso));
    };
    let stations = settings.stations;
    let (ws, w) = maximize(rear, front, stations, &|s| width_at(field, geom, s, iso, settings));
    let (ds, d) = maximize(rear, front, stations, &|s| depth_at(field, geom, s, iso, settings));
    Ok(MeltPoolMetrics {
        length: 1e3 * (front - rear),
        width: 1e3 * w,
        depth: 1e3 * d,
        cooling_rate: None,
        time,
        isotherm: iso,
        empty: false,
        widest_station: ws,
        deepest_station: ds,
    })
}

/// `(T_high − T_low) / Δd · v` with `Δd` the distance on the scan line
/// between the trailing `T_high` crossing of the pool and the next
/// `T_low` crossing behind it.
pub fn cooling_rate<F: ScalarField + ?Sized>(
    field: &F,
    defn: &CoolingRateDefinition,
    geom: &ScanGeometry,
    settings: &MetricSettings,
) -> Result<f64> {
    defn.validate()?;
    settings.validate()?;
    let missing_high = Error::MissingCrossing { isotherm: defn.t_high };
    let range = clip(geom.origin, geom.direction, field.bounds()).ok_or(missing_high.clone())?;
    let scan = LineScan::new(field, geom.origin, geom.direction, range, settings.samples);
    let hot = scan.s(scan.argmax());
    let tol = settings.tolerance;
    let high = scan
        .above(defn.t_high, tol)
        .into_iter()
        .find(|r| r.0 <= hot && hot <= r.1)
        .ok_or(missing_high.clone())?;
    if !high.2 {
        return Err(missing_high);
    }
    let low = scan
        .above(defn.t_low, tol)
        .into_iter()
        .find(|r| r.0 <= high.0 && high.0 <= r.1)
        .ok_or(Error::MissingCrossing { isotherm: defn.t_low })?;
    if !low.2 {
        return Err(Error::MissingCrossing { isotherm: defn.t_low });
    }
    let dd = high.0 - low.0;
    if !(dd > 0.0) {
        return Err(Error::MissingCrossing { isotherm: defn.t_low });
    }
    Ok((defn.t_high - defn.t_low) / dd * defn.speed)
}

/// Metrics for a simulation snapshot with the quasi-steady gate applied.
pub fn measure<F: ScalarField + ?Sized>(
    field: &F,
    time: f64,
    path: &ScanPath,
    iso: f64,
    cooling: Option<&CoolingRateDefinition>,
    settings: &MetricSettings,
) -> Result<MeltPoolMetrics> {
    let travel = path.travel(time);
    if travel < settings.quasi_steady_travel * (1.0 - 1e-9) {
        return Err(Error::NotQuasiSteady {
            travel,
            required: settings.quasi_steady_travel,
        });
    }
    let geom = ScanGeometry::from_path(path);
    let mut m = melt_pool_dimensions(field, time, iso, &geom, settings)?;
    if let (Some(c), false) = (cooling, m.empty) {
        m.cooling_rate = Some(cooling_rate(field, c, &geom, settings)?);
    }
    Ok(m)
}

/// Closed `T = iso` contours in the plane normal to the scan line at
/// `station` (mm from the origin). Points are `(transverse offset, y)` in
/// mm; contours touching the top surface are closed along `y = 0`.
/// The raster is symmetric about the scan line.
pub fn cross_section_contour<F: ScalarField + ?Sized>(
    field: &F,
    geom: &ScanGeometry,
    station: f64,
    iso: f64,
    settings: &MetricSettings,
) -> Result<Vec<Vec<[f64; 2]>>> {
    settings.validate()?;
    let p = geom.at(station);
    let t = geom.transverse();
    let bounds = field.bounds();
    let Some((u0, u1)) = clip(p, t, bounds) else {
        return Ok(Vec::new());
    };
    let Some((_, depth)) = clip(p, [0.0, -1.0, 0.0], bounds) else {
        return Ok(Vec::new());
    };
    let half = (-u0).min(u1);
    let n = settings.contour_samples | 1;
    let (nu, ny) = (n, n);
    let du = 2.0 * half / (nu - 1) as f64;
    let dy = depth / (ny - 1) as f64;
    let coord = |i: usize, j: usize| [-half + du * i as f64, -dy * j as f64];
    let point = |c: [f64; 2]| {
        let q = add(p, t, c[0]);
        [q[0], c[1], q[2]]
    };
    let value = |c: [f64; 2]| field.value_at(point(c)).unwrap_or(f64::NEG_INFINITY);
    let grid: Vec<f64> = par::map(nu * ny, |m| value(coord(m % nu, m / nu)));
    let above = |i: usize, j: usize| grid[j * nu + i] >= iso;
    if !grid.iter().any(|v| *v >= iso) {
        return Ok(Vec::new());
    }

    // Edge ids: 2·(j·nu + i) for (i,j)→(i+1,j), +1 for (i,j)→(i,j+1).
    let h_edge = |i: usize, j: usize| 2 * (j * nu + i);
    let v_edge = |i: usize, j: usize| 2 * (j * nu + i) + 1;
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nu - 1 {
            let c = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            let e = [h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)];
            let cut: Vec<usize> = (0..4).filter(|&k| c[k] != c[(k + 1) % 4]).collect();
            match cut.len() {
                2 => segments.push((e[cut[0]], e[cut[1]])),
                4 => {
                    let mean = 0.25
                        * (grid[j * nu + i] + grid[j * nu + i + 1] + grid[(j + 1) * nu + i + 1] + grid[(j + 1) * nu + i]);
                    let center = mean >= iso;
                    // Cut off each corner whose state differs from the center.
                    for k in 0..4 {
                        if c[k] != center {
                            segments.push((e[(k + 3) % 4], e[k]));
                        }
                    }
                }
                _ => {}
            }
        }
    }

    // Refined isotherm point on an edge.
    let tol = settings.tolerance;
    let edge_point = |id: usize| -> [f64; 2] {
        let cell = id / 2;
        let (i, j) = (cell % nu, cell / nu);
        let a = coord(i, j);
        let b = if id % 2 == 0 { coord(i + 1, j) } else { coord(i, j + 1) };
        let above_a = value(a) >= iso;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let len = if id % 2 == 0 { du } else { dy };
        while (hi - lo) * len > tol {
            let m = 0.5 * (lo + hi);
            let c = [a[0] + m * (b[0] - a[0]), a[1] + m * (b[1] - a[1])];
            if (value(c) >= iso) == above_a {
                lo = m;
            } else {
                hi = m;
            }
        }
        let m = 0.5 * (lo + hi);
        [a[0] + m * (b[0] - a[0]), a[1] + m * (b[1] - a[1])]
    };

    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(s);
        adjacency.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut chains: Vec<Vec<usize>> = Vec::new();
    // Open chains first (they start on the raster boundary), then loops.
    let starts: Vec<usize> = adjacency
        .iter()
        .filter(|(_, s)| s.len() == 1)
        .map(|(e, _)| *e)
        .chain(adjacency.keys().copied())
        .collect();
    for start in starts {
        let Some(&first) = adjacency[&start].iter().find(|&&s| !used[s]) else {
            continue;
        };
        let mut chain = vec![start];
        let mut edge = start;
        let mut seg = first;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            edge = if a == edge { b } else { a };
            chain.push(edge);
            match adjacency[&edge].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        chains.push(chain);
    }
    let mut out: Vec<Vec<[f64; 2]>> = chains
        .into_iter()
        .map(|chain| {
            let mut pts: Vec<[f64; 2]> = chain.iter().map(|&e| edge_point(e)).collect();
            if pts.first() != pts.last() {
                pts.push(pts[0]);
            }
            pts
        })
        .collect();
    out.sort_by(|a, b| {
        polygon_area(b)
            .partial_cmp(&polygon_area(a))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Unsigned shoelace area of a closed polyline.
pub fn polygon_area(points: &[[f64; 2]]) -> f64 {
    let mut a = 0.0;
    for w in points.windows(2) {
        a += w[0][0] * w[1][1] - w[1][0] * w[0][1];
    }
    0.5 * a.abs()
}
