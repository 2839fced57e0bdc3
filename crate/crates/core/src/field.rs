//! Piecewise-constant fields on an axis-aligned space-time box.
//!
//! A `GridField` is constant on each half-open grid cell, so every integral
//! the library needs -- box averages, truncated power averages, level-set
//! measures -- is a finite sum of `cell value x clipped cell volume` terms
//! and is computed exactly up to floating-point rounding. Grid-aligned boxes
//! additionally go through an `(n+1)`-dimensional prefix-sum table.
//!
//! Parabolic rectangles are never grid-aligned for non-integer `p`, so the
//! general path clips cells per axis instead of assuming alignment.

use serde::{Deserialize, Serialize};

use crate::float::Real;
use crate::geometry::{geo_tol, GeometryParams, SpaceTimeBox};
use crate::{Error, Result};

/// Which truncation of `f - c` an operation looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// `(f - c)_+ = max(f - c, 0)`
    Plus,
    /// `(f - c)_- = -min(f - c, 0)`
    Minus,
}

impl Sign {
    #[inline]
    pub fn truncate<T: Real>(self, diff: T) -> T {
        match self {
            Sign::Plus => diff.max(T::zero()),
            Sign::Minus => (-diff).max(T::zero()),
        }
    }
}

/// Deterministic field presets; `seed` only matters for `RandomCells`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset<T> {
    /// Constant field.
    Constant { value: T },
    /// Jump of size `jump` at time `at`: spatially constant, two-valued
    /// `+-jump/2` around zero, nonincreasing or nondecreasing in time.
    TimeStep { jump: T, at: T, nondecreasing: bool },
    /// `slope * t` at cell centers, spatially constant.
    TimeRamp { slope: T },
    /// Independent uniform values in `[-1, 1]` per cell.
    RandomCells,
    /// `-log(distance to point)` at cell centers, clamped at `cap` so the
    /// field stays bounded.
    LogSpike { point: Vec<T>, cap: T },
}

/// Piecewise-constant field with an optional prefix-sum cache.
#[derive(Debug, Clone)]
pub struct GridField<T> {
    domain: SpaceTimeBox<T>,
    resolution: Vec<usize>,
    values: Vec<T>,
    prefix: PrefixTable<T>,
}

/// Cumulative sums of cell values and squared values; `dims` are the cell
/// counts plus one per axis.
#[derive(Debug, Clone)]
struct PrefixTable<T> {
    dims: Vec<usize>,
    sums: Vec<T>,
    square_sums: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(domain: SpaceTimeBox<T>, resolution: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if resolution.len() != domain.dim() {
            return Err(Error::invalid("resolution", "one cell count per axis required"));
        }
        if resolution.contains(&0) {
            return Err(Error::invalid("resolution", "cell counts must be >= 1"));
        }
        let cells: usize = resolution.iter().product();
        if values.len() != cells {
            return Err(Error::invalid(
                "values",
                format!("expected {cells} cell values, got {}", values.len()),
            ));
        }
        let prefix = PrefixTable::build(&resolution, &values);
        Ok(GridField {
            domain,
            resolution,
            values,
            prefix,
        })
    }

    pub fn generate(
        domain: SpaceTimeBox<T>,
        resolution: Vec<usize>,
        preset: &Preset<T>,
        seed: u64,
    ) -> Result<Self> {
        let cells: usize = resolution.iter().product();
        let mut values = Vec::with_capacity(cells);
        let mut rng = SplitMix64::new(seed);
        let dim = domain.dim();
        let mut idx = vec![0usize; dim];
        for flat in 0..cells {
            Self::unflatten(&resolution, flat, &mut idx);
            let v = match preset {
                Preset::Constant { value } => *value,
                Preset::TimeStep {
                    jump,
                    at,
                    nondecreasing,
                } => {
                    let tc = Self::axis_center(&domain, &resolution, dim - 1, idx[dim - 1]);
                    let half = *jump * T::of(0.5);
                    let early = tc < *at;
                    match (early, nondecreasing) {
                        (true, true) => -half,
                        (false, true) => half,
                        (true, false) => half,
                        (false, false) => -half,
                    }
                }
                Preset::TimeRamp { slope } => {
                    let tc = Self::axis_center(&domain, &resolution, dim - 1, idx[dim - 1]);
                    *slope * tc
                }
                Preset::RandomCells => rng.uniform_sym(),
                Preset::LogSpike { point, cap } => {
                    if point.len() != dim {
                        return Err(Error::invalid("point", "length must be n+1"));
                    }
                    let mut d2 = T::zero();
                    for a in 0..dim {
                        let c = Self::axis_center(&domain, &resolution, a, idx[a]);
                        d2 = d2 + (c - point[a]) * (c - point[a]);
                    }
                    let d = d2.sqrt();
                    if d == T::zero() {
                        *cap
                    } else {
                        (-d.ln()).min(*cap)
                    }
                }
            };
            values.push(v);
        }
        Self::new(domain, resolution, values)
    }

    pub fn domain(&self) -> &SpaceTimeBox<T> {
        &self.domain
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn cell_len(&self, axis: usize) -> T {
        self.domain.len(axis) / T::of_usize(self.resolution[axis])
    }

    /// Smallest spatial cell count over the spatial axes.
    pub fn min_spatial_cells(&self) -> usize {
        self.resolution[..self.resolution.len() - 1]
            .iter()
            .copied()
            .min()
            .unwrap_or(1)
    }

    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(-T::infinity(), |m, &v| m.max(v))
    }

    fn axis_center(domain: &SpaceTimeBox<T>, res: &[usize], axis: usize, i: usize) -> T {
        let h = domain.len(axis) / T::of_usize(res[axis]);
        domain.lo[axis] + (T::of_usize(i) + T::of(0.5)) * h
    }

    fn unflatten(res: &[usize], mut flat: usize, out: &mut [usize]) {
        for a in (0..res.len()).rev() {
            out[a] = flat % res[a];
            flat /= res[a];
        }
    }

    /// Cell bounds along one axis; the last cell is pinned to the domain edge
    /// so cells tile the domain exactly.
    fn axis_cell_bounds(&self, axis: usize, i: usize) -> (T, T) {
        let h = self.cell_len(axis);
        let lo = self.domain.lo[axis] + T::of_usize(i) * h;
        let hi = if i + 1 == self.resolution[axis] {
            self.domain.hi[axis]
        } else {
            self.domain.lo[axis] + T::of_usize(i + 1) * h
        };
        (lo, hi)
    }

    /// Field value at a point of the domain.
    pub fn value_at(&self, point: &[T]) -> Option<T> {
        if !self.domain.contains_point(point) {
            return None;
        }
        let mut flat = 0usize;
        for (a, &coord) in point.iter().enumerate() {
            let h = self.cell_len(a);
            let raw = ((coord - self.domain.lo[a]) / h).floor();
            let i = raw.to_usize().unwrap_or(0).min(self.resolution[a] - 1);
            flat = flat * self.resolution[a] + i;
        }
        Some(self.values[flat])
    }

    fn check_box(&self, b: &SpaceTimeBox<T>) -> Result<SpaceTimeBox<T>> {
        if !self.domain.contains_box(b) {
            return Err(Error::OutsideDomain(format!(
                "box {:?}..{:?} vs domain {:?}..{:?}",
                b.lo, b.hi, self.domain.lo, self.domain.hi
            )));
        }
        // Tolerance-accepted boxes may stick out by ~geo_tol; clip so the
        // cellwise sums never index outside the grid.
        b.intersection(&self.domain)
            .ok_or_else(|| Error::Degenerate("box does not meet the domain".into()))
    }

    /// Visits every cell meeting `b` with its clipped volume.
    fn for_cells_in<F: FnMut(T, T)>(&self, b: &SpaceTimeBox<T>, mut visit: F) {
        let dim = self.resolution.len();
        // Per-axis index ranges and clip weights.
        let mut ranges: Vec<(usize, Vec<T>)> = Vec::with_capacity(dim);
        for a in 0..dim {
            let h = self.cell_len(a);
            let lo_idx = ((b.lo[a] - self.domain.lo[a]) / h)
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(self.resolution[a] - 1);
            let hi_idx = (((b.hi[a] - self.domain.lo[a]) / h).ceil().to_usize())
                .unwrap_or(self.resolution[a])
                .min(self.resolution[a]);
            let mut weights = Vec::with_capacity(hi_idx.saturating_sub(lo_idx));
            for i in lo_idx..hi_idx.max(lo_idx + 1) {
                let (clo, chi) = self.axis_cell_bounds(a, i);
                let w = (b.hi[a].min(chi) - b.lo[a].max(clo)).max(T::zero());
                weights.push(w);
            }
            ranges.push((lo_idx, weights));
        }
        // Walk the index product, accumulating the weight product.
        let mut idx = vec![0usize; dim];
        self.walk_cells(&ranges, 0, 0, T::one(), &mut idx, &mut visit);
    }

    fn walk_cells<F: FnMut(T, T)>(
        &self,
        ranges: &[(usize, Vec<T>)],
        axis: usize,
        flat: usize,
        weight: T,
        idx: &mut [usize],
        visit: &mut F,
    ) {
        let (start, ref ws) = ranges[axis];
        for (off, &w) in ws.iter().enumerate() {
            if w <= T::zero() {
                continue;
            }
            let i = start + off;
            let flat = flat * self.resolution[axis] + i;
            idx[axis] = i;
            if axis + 1 == ranges.len() {
                visit(self.values[flat], weight * w);
            } else {
                self.walk_cells(ranges, axis + 1, flat, weight * w, idx, visit);
            }
        }
    }

    /// `(value, clipped volume)` for every cell meeting `b`.
    pub fn cell_weights(&self, b: &SpaceTimeBox<T>) -> Result<Vec<(T, T)>> {
        let b = self.check_box(b)?;
        let mut out = Vec::new();
        self.for_cells_in(&b, |v, w| out.push((v, w)));
        Ok(out)
    }

    /// Grid index ranges when every bound of `b` sits on a grid line.
    fn aligned_ranges(&self, b: &SpaceTimeBox<T>) -> Option<Vec<(usize, usize)>> {
        let mut ranges = Vec::with_capacity(self.resolution.len());
        for a in 0..self.resolution.len() {
            let h = self.cell_len(a);
            let tol = geo_tol(self.domain.coord_scale());
            let snap = |x: T| -> Option<usize> {
                let k = ((x - self.domain.lo[a]) / h).round();
                let k = k.to_isize()?;
                if k < 0 || k as usize > self.resolution[a] {
                    return None;
                }
                let grid = self.domain.lo[a] + T::of_usize(k as usize) * h;
                ((x - grid).abs() <= tol).then_some(k as usize)
            };
            let lo = snap(b.lo[a])?;
            let hi = snap(b.hi[a])?;
            if lo >= hi {
                return None;
            }
            ranges.push((lo, hi));
        }
        Some(ranges)
    }

    /// `integral of f over b`, exact for the piecewise-constant field.
    pub fn integral(&self, b: &SpaceTimeBox<T>) -> Result<T> {
        let b = self.check_box(b)?;
        if let Some(ranges) = self.aligned_ranges(&b) {
            let cell_vol = (0..self.resolution.len())
                .map(|a| self.cell_len(a))
                .fold(T::one(), |p, h| p * h);
            return Ok(self.prefix.range_sum(&ranges) * cell_vol);
        }
        let mut acc = T::zero();
        self.for_cells_in(&b, |v, w| acc = acc + v * w);
        Ok(acc)
    }

    /// Same integral, forced through the naive cellwise path. Used to check
    /// the prefix table against direct summation.
    pub fn integral_naive(&self, b: &SpaceTimeBox<T>) -> Result<T> {
        let b = self.check_box(b)?;
        let mut acc = T::zero();
        self.for_cells_in(&b, |v, w| acc = acc + v * w);
        Ok(acc)
    }

    /// Integral average `|b|^{-1} int_b f`.
    pub fn box_average(&self, b: &SpaceTimeBox<T>) -> Result<T> {
        let measure = b.measure();
        if !(measure > T::zero()) {
            return Err(Error::Degenerate("box of zero measure".into()));
        }
        Ok(self.integral(b)? / measure)
    }

    /// `|b|^{-1} int_b ((f - c)_+-)^r`, exact cellwise.
    pub fn truncated_power_average(&self, b: &SpaceTimeBox<T>, c: T, r: T, sign: Sign) -> Result<T> {
        let measure = b.measure();
        if !(measure > T::zero()) {
            return Err(Error::Degenerate("box of zero measure".into()));
        }
        if !(r > T::zero()) {
            return Err(Error::invalid("r", format!("exponent must be > 0, got {r}")));
        }
        let b = self.check_box(b)?;
        let one = T::one();
        let mut acc = T::zero();
        self.for_cells_in(&b, |v, w| {
            let t = sign.truncate(v - c);
            if t > T::zero() {
                let powered = if r == one { t } else { t.powf(r) };
                acc = acc + powered * w;
            }
        });
        Ok(acc / measure)
    }

    /// `|b cap {(f - c)_+- > lambda}|`, exact cellwise.
    pub fn level_set_measure(&self, b: &SpaceTimeBox<T>, c: T, lambda: T, sign: Sign) -> Result<T> {
        let b = self.check_box(b)?;
        let mut acc = T::zero();
        self.for_cells_in(&b, |v, w| {
            if sign.truncate(v - c) > lambda {
                acc = acc + w;
            }
        });
        Ok(acc)
    }

    /// Sorted distinct cell values intersecting `b`.
    pub fn distinct_values_in(&self, b: &SpaceTimeBox<T>) -> Result<Vec<T>> {
        let b = self.check_box(b)?;
        let mut vals = Vec::new();
        self.for_cells_in(&b, |v, w| {
            if w > T::zero() {
                vals.push(v);
            }
        });
        vals.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        vals.dedup();
        Ok(vals)
    }

    /// Reverses the cell order along the time axis (and negates values when
    /// `negate` is set). The domain is unchanged: reflecting the time
    /// interval about its own midpoint maps it onto itself.
    pub fn reflected_time(&self, negate: bool) -> Self {
        let dim = self.resolution.len();
        let nt = self.resolution[dim - 1];
        let mut values = self.values.clone();
        let blocks = self.values.len() / nt;
        for blk in 0..blocks {
            let s = blk * nt;
            values[s..s + nt].reverse();
        }
        if negate {
            for v in &mut values {
                *v = -*v;
            }
        }
        GridField::new(self.domain.clone(), self.resolution.clone(), values)
            .expect("reflection preserves validity")
    }

    /// New field with `op` applied to every cell value.
    pub fn map_values<F: Fn(T) -> T>(&self, op: F) -> Self {
        let values = self.values.iter().map(|&v| op(v)).collect();
        GridField::new(self.domain.clone(), self.resolution.clone(), values)
            .expect("mapping preserves validity")
    }

    /// Combines two fields on the same grid cellwise.
    pub fn zip_values<F: Fn(T, T) -> T>(&self, other: &Self, op: F) -> Result<Self> {
        if self.resolution != other.resolution || self.domain != other.domain {
            return Err(Error::invalid("other", "fields live on different grids"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        GridField::new(self.domain.clone(), self.resolution.clone(), values)
    }

    /// Geometry parameters bundled with a field by the file format.
    pub fn geometry(&self, p: T) -> Result<GeometryParams<T>> {
        GeometryParams::new(self.resolution.len() - 1, p)
    }
}

impl<T: Real> PrefixTable<T> {
    fn build(res: &[usize], values: &[T]) -> Self {
        let dims: Vec<usize> = res.iter().map(|&r| r + 1).collect();
        let total: usize = dims.iter().product();
        let mut sums = vec![T::zero(); total];
        let mut square_sums = vec![T::zero(); total];
        // Seed the tables at offset-by-one positions.
        let mut idx = vec![0usize; res.len()];
        for (flat, &v) in values.iter().enumerate() {
            GridField::<T>::unflatten(res, flat, &mut idx);
            let mut pos = 0usize;
            for a in 0..res.len() {
                pos = pos * dims[a] + idx[a] + 1;
            }
            sums[pos] = v;
            square_sums[pos] = v * v;
        }
        // Sweep a running sum along each axis in turn.
        for axis in 0..res.len() {
            let stride: usize = dims[axis + 1..].iter().product();
            let outer: usize = dims[..axis].iter().product();
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * dims[axis] * stride + inner;
                    for i in 1..dims[axis] {
                        let cur = base + i * stride;
                        let prev = base + (i - 1) * stride;
                        sums[cur] = sums[cur] + sums[prev];
                        square_sums[cur] = square_sums[cur] + square_sums[prev];
                    }
                }
            }
        }
        PrefixTable {
            dims,
            sums,
            square_sums,
        }
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0usize, |acc, (&i, &d)| acc * d + i)
    }

    fn corner_sum(&self, table: &[T], ranges: &[(usize, usize)]) -> T {
        let d = ranges.len();
        let mut acc = T::zero();
        let mut corner = vec![0usize; d];
        for mask in 0..(1usize << d) {
            let mut lo_picks = 0u32;
            for a in 0..d {
                if mask & (1 << a) != 0 {
                    corner[a] = ranges[a].0;
                    lo_picks += 1;
                } else {
                    corner[a] = ranges[a].1;
                }
            }
            let term = table[self.flat(&corner)];
            if lo_picks.is_multiple_of(2) {
                acc = acc + term;
            } else {
                acc = acc - term;
            }
        }
        acc
    }

    /// Sum of cell values over the half-open index box.
    fn range_sum(&self, ranges: &[(usize, usize)]) -> T {
        self.corner_sum(&self.sums, ranges)
    }

    #[allow(dead_code)]
    fn range_square_sum(&self, ranges: &[(usize, usize)]) -> T {
        self.corner_sum(&self.square_sums, ranges)
    }
}

/// SplitMix64: tiny deterministic generator for the seeded presets and the
/// sampling helpers. Output is identical across platforms and builds.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform01<T: Real>(&mut self) -> T {
        T::of((self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
    }

    /// Uniform in `[-1, 1)`.
    pub fn uniform_sym<T: Real>(&mut self) -> T {
        self.uniform01::<T>() * T::of(2.0) - T::one()
    }

    /// Uniform integer in `[0, bound)`.
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}
