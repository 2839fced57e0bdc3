//! Parabolic rectangles, their lagged parts, and axis-aligned space-time
//! boxes in `R^{n+1}`.
//!
//! A parabolic rectangle with center `(x, t)` and edge length `L` is the
//! spatial cube of half-side `L` crossed with the time interval
//! `(t - L^p, t + L^p)`. Its upper and lower parts at time lag `gamma` drop
//! the middle band of the time interval: the upper part keeps
//! `(t + gamma L^p, t + L^p)`, the lower part its reflection.
//!
//! Boxes are half-open `[lo, hi)` per axis so grid-aligned tilings partition
//! exactly; the time axis is always stored last. Comparisons use an absolute
//! tolerance scaled to the coordinates, since time lengths such as
//! `(1-alpha) L^p / floor(2^{pm})` are irrational for non-integer `p`.

use serde::{Deserialize, Serialize};

use crate::float::Real;
use crate::{Error, Result};

/// Base absolute tolerance for geometric comparisons; it is multiplied by
/// `max(1, coordinate scale)` at each comparison site.
pub const GEO_TOL: f64 = 1e-9;

/// Tolerance for a given coordinate scale.
pub fn geo_tol<T: Real>(scale: T) -> T {
    T::of(GEO_TOL) * scale.abs().max(T::one())
}

/// Spatial dimension and parabolic exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams<T> {
    /// Spatial dimension, at least 1.
    pub n: usize,
    /// Parabolic exponent, `1 < p`.
    pub p: T,
}

impl<T: Real> GeometryParams<T> {
    pub fn new(n: usize, p: T) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("n", "spatial dimension must be >= 1"));
        }
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::invalid("p", format!("need 1 < p < inf, got {p}")));
        }
        Ok(GeometryParams { n, p })
    }
}

/// Time lag `gamma` with `-1 < gamma < 1`. Reused for the lags
/// `alpha`, `rho` and `sigma` of the decomposition and chaining constructions.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeLag<T>(T);

impl<T: Real> TimeLag<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if gamma.abs() < T::one() {
            Ok(TimeLag(gamma))
        } else {
            Err(Error::invalid("gamma", format!("need |gamma| < 1, got {gamma}")))
        }
    }

    pub fn zero() -> Self {
        TimeLag(T::zero())
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Axis-aligned half-open box over `n` spatial axes and one time axis,
/// the time axis last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

/// Set relation of one box against another, decided with tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxRelation {
    Disjoint,
    /// The first box contains the second.
    Contains,
    Overlaps,
}

impl<T: Real> SpaceTimeBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Degenerate("box axis counts disagree".into()));
        }
        for (&a, &b) in lo.iter().zip(&hi) {
            if !(a < b) {
                return Err(Error::Degenerate(format!("empty interval [{a}, {b})")));
            }
        }
        Ok(SpaceTimeBox { lo, hi })
    }

    /// Number of axes including time.
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Index of the time axis (always the last one).
    pub fn time_axis(&self) -> usize {
        self.dim() - 1
    }

    pub fn time_interval(&self) -> (T, T) {
        let t = self.time_axis();
        (self.lo[t], self.hi[t])
    }

    pub fn len(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn measure(&self) -> T {
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(T::one(), |m, (&a, &b)| m * (b - a))
    }

    /// Largest absolute coordinate, used to scale tolerances.
    pub fn coord_scale(&self) -> T {
        self.lo
            .iter()
            .chain(&self.hi)
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Intersection, or `None` when empty on some axis.
    pub fn intersection(&self, other: &Self) -> Option<Self> {
        debug_assert_eq!(self.dim(), other.dim());
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let l = self.lo[a].max(other.lo[a]);
            let h = self.hi[a].min(other.hi[a]);
            if !(l < h) {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        Some(SpaceTimeBox { lo, hi })
    }

    pub fn intersection_measure(&self, other: &Self) -> T {
        self.intersection(other).map_or(T::zero(), |b| b.measure())
    }

    /// True when the overlap on some axis is within tolerance of zero.
    pub fn is_disjoint(&self, other: &Self) -> bool {
        let tol = geo_tol(self.coord_scale().max(other.coord_scale()));
        (0..self.dim()).any(|a| {
            let l = self.lo[a].max(other.lo[a]);
            let h = self.hi[a].min(other.hi[a]);
            h - l <= tol
        })
    }

    /// True when `other` lies inside `self`, up to tolerance.
    pub fn contains_box(&self, other: &Self) -> bool {
        let tol = geo_tol(self.coord_scale().max(other.coord_scale()));
        (0..self.dim())
            .all(|a| other.lo[a] >= self.lo[a] - tol && other.hi[a] <= self.hi[a] + tol)
    }

    pub fn contains_point(&self, point: &[T]) -> bool {
        debug_assert_eq!(point.len(), self.dim());
        (0..self.dim()).all(|a| point[a] >= self.lo[a] && point[a] < self.hi[a])
    }

    /// Reflects the time interval about `pivot`; spatial axes unchanged.
    pub fn reflect_time(&self, pivot: T) -> Self {
        let mut out = self.clone();
        let t = self.time_axis();
        let two = T::of(2.0);
        out.lo[t] = two * pivot - self.hi[t];
        out.hi[t] = two * pivot - self.lo[t];
        out
    }

    /// Translates the box along the time axis.
    pub fn translate_time(&self, dt: T) -> Self {
        let mut out = self.clone();
        let t = self.time_axis();
        out.lo[t] = out.lo[t] + dt;
        out.hi[t] = out.hi[t] + dt;
        out
    }

    /// Dilates the given axis interval about its center by `factor`.
    pub fn dilate_axis(&self, axis: usize, factor: T) -> (T, T) {
        let half = T::of(0.5);
        let c = (self.lo[axis] + self.hi[axis]) * half;
        let r = (self.hi[axis] - self.lo[axis]) * half * factor;
        (c - r, c + r)
    }
}

/// Set relation plus exact intersection measure.
pub fn box_relations<T: Real>(a: &SpaceTimeBox<T>, b: &SpaceTimeBox<T>) -> (BoxRelation, T) {
    let measure = a.intersection_measure(b);
    let rel = if a.contains_box(b) {
        BoxRelation::Contains
    } else if a.is_disjoint(b) {
        BoxRelation::Disjoint
    } else {
        BoxRelation::Overlaps
    };
    (rel, measure)
}

/// Parabolic rectangle: spatial cube of half-side `L` centered at `center_x`
/// crossed with `(center_t - L^p, center_t + L^p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicRectangle<T> {
    pub center_x: Vec<T>,
    pub center_t: T,
    #[serde(rename = "L")]
    pub edge: T,
    #[serde(flatten)]
    pub params: GeometryParams<T>,
}

impl<T: Real> ParabolicRectangle<T> {
    pub fn new(center_x: Vec<T>, center_t: T, edge: T, params: GeometryParams<T>) -> Result<Self> {
        if center_x.len() != params.n {
            return Err(Error::invalid("center_x", "length must equal n"));
        }
        if !(edge > T::zero()) || !edge.is_finite() {
            return Err(Error::invalid("L", format!("edge length must be > 0, got {edge}")));
        }
        Ok(ParabolicRectangle {
            center_x,
            center_t,
            edge,
            params,
        })
    }

    /// Spatial edge length `l_x = L`.
    pub fn lx(&self) -> T {
        self.edge
    }

    /// Time length `l_t = 2 L^p`.
    pub fn lt(&self) -> T {
        T::of(2.0) * self.time_half()
    }

    /// Half of the time length, `L^p`.
    pub fn time_half(&self) -> T {
        self.edge.powf(self.params.p)
    }

    /// The full rectangle as a box.
    pub fn full_box(&self) -> SpaceTimeBox<T> {
        let h = self.time_half();
        self.band(-h, h)
    }

    /// Upper part `Q(x, L) x (t + gamma L^p, t + L^p)`.
    pub fn upper_part(&self, gamma: TimeLag<T>) -> SpaceTimeBox<T> {
        let h = self.time_half();
        self.band(gamma.value() * h, h)
    }

    /// Lower part `Q(x, L) x (t - L^p, t - gamma L^p)`; the reflection of the
    /// upper part about the center time slice.
    pub fn lower_part(&self, gamma: TimeLag<T>) -> SpaceTimeBox<T> {
        let h = self.time_half();
        self.band(-h, -(gamma.value() * h))
    }

    /// Spatial cube crossed with `(center_t + a, center_t + b)`.
    fn band(&self, a: T, b: T) -> SpaceTimeBox<T> {
        let n = self.params.n;
        let mut lo = Vec::with_capacity(n + 1);
        let mut hi = Vec::with_capacity(n + 1);
        for &c in &self.center_x {
            lo.push(c - self.edge);
            hi.push(c + self.edge);
        }
        lo.push(self.center_t + a);
        hi.push(self.center_t + b);
        SpaceTimeBox { lo, hi }
    }

    /// The `lambda`-dilate: same center, edge `lambda L`.
    pub fn dilate(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::invalid("lambda", format!("dilation factor must be > 0, got {lambda}")));
        }
        Ok(ParabolicRectangle {
            center_x: self.center_x.clone(),
            center_t: self.center_t,
            edge: self.edge * lambda,
            params: self.params,
        })
    }

    /// Reflects the rectangle in time about `pivot`.
    pub fn reflect_time(&self, pivot: T) -> Self {
        ParabolicRectangle {
            center_x: self.center_x.clone(),
            center_t: T::of(2.0) * pivot - self.center_t,
            edge: self.edge,
            params: self.params,
        }
    }

    pub fn contains_point(&self, point: &[T]) -> bool {
        self.full_box().contains_point(point)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, p: f64) -> GeometryParams<f64> {
        GeometryParams::new(n, p).unwrap()
    }

    fn rect(x: f64, t: f64, edge: f64, n: usize, p: f64) -> ParabolicRectangle<f64> {
        ParabolicRectangle::new(vec![x; n], t, edge, params(n, p)).unwrap()
    }

    #[test]
    fn upper_part_matches_definition() {
        // R(0,0,2), p=2, gamma=0.5, n=1: [-2,2] x (2,4), measure 8
        let r = rect(0.0, 0.0, 2.0, 1, 2.0);
        let up = r.upper_part(TimeLag::new(0.5).unwrap());
        assert_eq!(up.lo, vec![-2.0, 2.0]);
        assert_eq!(up.hi, vec![2.0, 4.0]);
        assert!((up.measure() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_lag_gives_plain_upper_half() {
        let r = rect(1.0, 3.0, 1.5, 2, 2.5);
        let up = r.upper_part(TimeLag::zero());
        let (t0, t1) = up.time_interval();
        assert_eq!(t0, 3.0);
        assert!((t1 - (3.0 + 1.5f64.powf(2.5))).abs() < 1e-12);
    }

    #[test]
    fn negative_lag_upper_part() {
        // R(0,0,1), p=3, gamma=-0.5: Q x (-0.5, 1), measure 1.5 * 2^n
        let r = rect(0.0, 0.0, 1.0, 1, 3.0);
        let up = r.upper_part(TimeLag::new(-0.5).unwrap());
        let (t0, t1) = up.time_interval();
        assert!((t0 + 0.5).abs() < 1e-12 && (t1 - 1.0).abs() < 1e-12);
        assert!((up.measure() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lower_part_is_reflection_of_upper() {
        let r = rect(0.0, 0.0, 2.0, 1, 2.0);
        let g = TimeLag::new(0.5).unwrap();
        let lo = r.lower_part(g);
        assert_eq!(lo.lo, vec![-2.0, -4.0]);
        assert_eq!(lo.hi, vec![2.0, -2.0]);
        assert_eq!(lo, r.upper_part(g).reflect_time(r.center_t));
        assert!((lo.measure() - r.upper_part(g).measure()).abs() < 1e-12);
    }

    #[test]
    fn dilate_scales_time_like_power_p() {
        let r = rect(0.0, 0.0, 1.0, 1, 2.0);
        let d = r.dilate(5.0).unwrap();
        let (t0, t1) = d.full_box().time_interval();
        assert_eq!((t0, t1), (-25.0, 25.0));
        assert!(r.dilate(1.0).unwrap() == r);
        // measure ratio 5^{n+p}
        let ratio = d.full_box().measure() / r.full_box().measure();
        assert!((ratio - 5f64.powi(3)).abs() < 1e-9);
        assert!(r.dilate(0.0).is_err());
        assert!(r.dilate(-1.0).is_err());
    }

    #[test]
    fn reflect_box_twice_is_identity() {
        let b = SpaceTimeBox::new(vec![0.0, 2.0], vec![1.0, 4.0]).unwrap();
        let reflected = b.reflect_time(0.0);
        assert_eq!(reflected.lo, vec![0.0, -4.0]);
        assert_eq!(reflected.hi, vec![1.0, -2.0]);
        assert_eq!(reflected.reflect_time(0.0), b);
    }

    #[test]
    fn box_relations_cases() {
        let unit = |lo: [f64; 2], hi: [f64; 2]| SpaceTimeBox::new(lo.to_vec(), hi.to_vec()).unwrap();
        let (rel, m) = box_relations(&unit([0.0, 0.0], [1.0, 1.0]), &unit([2.0, 0.0], [3.0, 1.0]));
        assert_eq!((rel, m), (BoxRelation::Disjoint, 0.0));
        let (rel, m) = box_relations(&unit([0.0, 0.0], [2.0, 2.0]), &unit([0.0, 0.0], [1.0, 1.0]));
        assert_eq!((rel, m), (BoxRelation::Contains, 1.0));
        let (rel, m) = box_relations(&unit([0.0, 0.0], [2.0, 1.0]), &unit([1.0, 0.0], [3.0, 1.0]));
        assert_eq!((rel, m), (BoxRelation::Overlaps, 1.0));
    }

    #[test]
    fn lag_gap_has_expected_time_length() {
        // R \ (R+(rho) u R-(sigma)) spans (t - sigma L^p, t + rho L^p).
        let r = rect(0.0, 1.0, 1.3, 1, 2.4);
        let (rho, sigma) = (0.3, 0.2);
        let h = r.time_half();
        let up = r.upper_part(TimeLag::new(rho).unwrap());
        let lo = r.lower_part(TimeLag::new(sigma).unwrap());
        let gap = up.lo[1] - lo.hi[1];
        assert!((gap - (rho + sigma) * h).abs() < 1e-12);
    }

    #[test]
    fn shared_face_counts_as_disjoint() {
        let a = SpaceTimeBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let b = SpaceTimeBox::new(vec![1.0, 0.0], vec![2.0, 1.0]).unwrap();
        assert!(a.is_disjoint(&b));
        assert_eq!(a.intersection_measure(&b), 0.0);
    }

    #[test]
    fn json_shapes_match_the_interface() {
        let r = rect(0.5, 1.0, 2.0, 1, 2.0);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["center_x"], serde_json::json!([0.5]));
        assert_eq!(v["center_t"], 1.0);
        assert_eq!(v["L"], 2.0);
        assert_eq!(v["p"], 2.0);
        assert_eq!(v["n"], 1);
        let b = serde_json::to_value(r.full_box()).unwrap();
        assert_eq!(b["lo"], serde_json::json!([-1.5, -3.0]));
        assert_eq!(b["hi"], serde_json::json!([2.5, 5.0]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GeometryParams::new(0, 2.0).is_err());
        assert!(GeometryParams::new(1, 1.0).is_err());
        assert!(TimeLag::new(1.0).is_err());
        assert!(TimeLag::new(-1.0).is_err());
        assert!(ParabolicRectangle::new(vec![0.0], 0.0, 0.0, params(1, 2.0)).is_err());
    }
}
