//! Stopping-time decomposition of a parabolic rectangle.
//!
//! Starting from `S0+ = R0+(alpha)` the recursion subdivides each box into
//! `2^m` spatial pieces per axis and `floor(2^{pm})` or `ceil(2^{pm})`
//! temporal pieces (the branch keeps the time lengths inside a two-sided
//! bracket), associates to each piece the rectangle with the same top, and
//! selects a piece as soon as the minimal oscillation constant `c_R` of its
//! rectangle exceeds the threshold `lambda`. The union of selected boxes is
//! `S(lambda)`.
//!
//! The overlapping lower parts of the selected family are thinned to a
//! pairwise-disjoint subfamily by level-order greedy selection with
//! controlled projection blow-up, a Vitali-type cover backs the sharp
//! maximal estimate, and the explicit constant chain `c1..c5, A, C` is
//! evaluated in log space since `c5 ~ A^{q/r}` overflows doubles already for
//! moderate `q/r`. The weak-type and good-lambda verifiers compare level-set
//! measures against these constants; every verdict that consumes the desk
//! norm (a lower bound of the true norm) is tagged diagnostic.

use serde::Serialize;

use crate::field::{GridField, Sign};
use crate::float::Real;
use crate::geometry::{GeometryParams, ParabolicRectangle, SpaceTimeBox, TimeLag};
use crate::oscillation::{optimal_constant, OscParams};
use crate::packing::{enumerate_candidates, pjnq_norm, CandidateLadder, PackingMode};
use crate::{Error, Result};

/// Parameters of the decomposition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CZParams<T> {
    /// Lag of the space the norm lives in.
    pub gamma: TimeLag<T>,
    /// Verification lag, `gamma < alpha < 1`.
    pub alpha: TimeLag<T>,
    /// Oscillation exponent, `0 < r <= 1`.
    pub r: T,
    /// Aggregation exponent, `1 < q`.
    pub q: T,
    /// Deepest subdivision level.
    pub max_depth: usize,
    /// Stop subdividing a box thinner than this many cells on some axis.
    pub min_cells: usize,
}

impl<T: Real> CZParams<T> {
    pub fn new(gamma: TimeLag<T>, alpha: TimeLag<T>, r: T, q: T) -> Result<Self> {
        let params = CZParams {
            gamma,
            alpha,
            r,
            q,
            max_depth: 4,
            min_cells: 2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_depth(mut self, max_depth: usize, min_cells: usize) -> Self {
        self.max_depth = max_depth;
        self.min_cells = min_cells;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (g, a) = (self.gamma.value(), self.alpha.value());
        if !(T::zero() <= g && g < a && a < T::one()) {
            return Err(Error::invalid("alpha", format!("need 0 <= gamma < alpha < 1, got gamma={g}, alpha={a}")));
        }
        if !(self.r > T::zero() && self.r <= T::one()) {
            return Err(Error::invalid("r", format!("need 0 < r <= 1, got {}", self.r)));
        }
        if !(self.q > T::one()) {
            return Err(Error::invalid("q", format!("need q > 1, got {}", self.q)));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth", "need at least one level"));
        }
        Ok(())
    }

    pub fn osc(&self) -> OscParams<T> {
        OscParams {
            gamma: self.gamma,
            r: self.r,
        }
    }
}

/// Smallest integer `m >= 1` with `3 + alpha <= 2^{pm+1} (alpha - gamma)`.
pub fn cz_m<T: Real>(p: T, alpha: T, gamma: T) -> Result<usize> {
    if !(gamma < alpha) {
        return Err(Error::invalid("alpha", format!("need gamma < alpha, got gamma={gamma}, alpha={alpha}")));
    }
    let target = (T::of(3.0) + alpha) / (alpha - gamma);
    for m in 1..=64usize {
        let lhs = T::of(2.0).powf(p * T::of_usize(m) + T::one());
        if target <= lhs {
            return Ok(m);
        }
    }
    Err(Error::invalid("m", "no m <= 64 satisfies the subdivision inequality"))
}

/// Fate of a box in the selection tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    /// `lambda < c_R`: kept, recursion stops here.
    Selected,
    /// Recursed into the next level.
    Subdivided,
    /// Not selected and too deep or too thin to subdivide further.
    Terminal,
}

/// One box of the selection tree with its associated rectangle.
#[derive(Debug, Clone, Serialize)]
pub struct CZNode<T> {
    pub level: usize,
    pub plus_box: SpaceTimeBox<T>,
    pub rect: ParabolicRectangle<T>,
    /// Minimal oscillation constant of the associated rectangle (for the
    /// shifted field with `c_{R0} = 0`).
    pub c_value: T,
    pub status: NodeStatus,
    /// `(level, index)` of the parent; the root for level-1 nodes.
    pub parent: Option<(usize, usize)>,
}

impl<T: Real> CZNode<T> {
    /// Lower counterpart `S-`: the reflection of the plus box about the
    /// center time of the associated rectangle.
    pub fn minus_box(&self) -> SpaceTimeBox<T> {
        self.plus_box.reflect_time(self.rect.center_t)
    }
}

/// Result of one stopping-time run.
#[derive(Debug, Clone, Serialize)]
pub struct CZSelection<T> {
    pub lambda: T,
    /// Constant subtracted so that `c_{R0} = 0`.
    pub c0: T,
    pub m: usize,
    pub root_rect: ParabolicRectangle<T>,
    pub root_box: SpaceTimeBox<T>,
    /// Levels `1..=max_depth`; nodes in deterministic creation order.
    pub levels: Vec<Vec<CZNode<T>>>,
    /// Theoretical per-level time lengths of the boxes.
    pub level_time_len: Vec<T>,
    /// `(level, index)` of selected nodes in level order.
    pub selected: Vec<(usize, usize)>,
    /// `|S(lambda)|`.
    pub selected_measure: T,
    /// Disjointified lower family, in keep order.
    pub kept_minus: Vec<SpaceTimeBox<T>>,
    /// For every dropped lower box: `((level, index), kept position it hit)`.
    pub dropped_minus: DroppedMinus,
    /// Total volume of terminal (unsubdividable) boxes.
    pub terminal_volume: T,
}

/// Subdivides a level-`i-1` box into `2^m` spatial pieces per axis and
/// `floor(2^{pm})` or `ceil(2^{pm})` temporal pieces. The floor branch is
/// taken when `l_t(parent)/floor(2^{pm}) < (1-alpha) L^p / 2^{pmi}`. Pieces
/// tile the parent exactly.
pub fn subdivide<T: Real>(
    parent: &SpaceTimeBox<T>,
    level: usize,
    m: usize,
    alpha: T,
    edge0: T,
    p: T,
) -> Vec<SpaceTimeBox<T>> {
    let dim = parent.dim();
    let t_axis = parent.time_axis();
    let two = T::of(2.0);
    let pm = two.powf(p * T::of_usize(m));
    let floor_pieces = pm.floor().to_usize().unwrap_or(1).max(1);
    let ceil_pieces = pm.ceil().to_usize().unwrap_or(1).max(1);
    let target = (T::one() - alpha) * edge0.powf(p) / two.powf(p * T::of_usize(m * level));
    let parent_lt = parent.len(t_axis);
    let t_pieces = if parent_lt / T::of_usize(floor_pieces) < target {
        floor_pieces
    } else {
        ceil_pieces
    };
    let spatial_pieces = 1usize << m;

    // Per-axis breakpoints; the last bound is pinned to the parent edge so
    // the pieces tile exactly.
    let axis_bounds = |axis: usize, pieces: usize| -> Vec<(T, T)> {
        let h = parent.len(axis) / T::of_usize(pieces);
        (0..pieces)
            .map(|k| {
                let lo = parent.lo[axis] + h * T::of_usize(k);
                let hi = if k + 1 == pieces {
                    parent.hi[axis]
                } else {
                    parent.lo[axis] + h * T::of_usize(k + 1)
                };
                (lo, hi)
            })
            .collect()
    };
    let mut per_axis: Vec<Vec<(T, T)>> = Vec::with_capacity(dim);
    for a in 0..t_axis {
        per_axis.push(axis_bounds(a, spatial_pieces));
    }
    per_axis.push(axis_bounds(t_axis, t_pieces));

    let mut out = Vec::with_capacity(spatial_pieces.pow(t_axis as u32) * t_pieces);
    let mut idx = vec![0usize; dim];
    'product: loop {
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        for a in 0..dim {
            let (l, h) = per_axis[a][idx[a]];
            lo.push(l);
            hi.push(h);
        }
        out.push(SpaceTimeBox { lo, hi });
        let mut a = dim;
        while a > 0 {
            a -= 1;
            idx[a] += 1;
            if idx[a] < per_axis[a].len() {
                continue 'product;
            }
            idx[a] = 0;
        }
        break;
    }
    out
}

/// Rectangle with the same top as the box and edge `L / 2^{mi}`.
fn associated_rect<T: Real>(
    plus_box: &SpaceTimeBox<T>,
    level: usize,
    m: usize,
    edge0: T,
    geom: GeometryParams<T>,
) -> ParabolicRectangle<T> {
    let edge = edge0 / T::of(2.0).powf(T::of_usize(m * level));
    let half = T::of(0.5);
    let center_x: Vec<T> = (0..geom.n)
        .map(|a| (plus_box.lo[a] + plus_box.hi[a]) * half)
        .collect();
    let top = plus_box.hi[plus_box.time_axis()];
    ParabolicRectangle {
        center_x,
        center_t: top - edge.powf(geom.p),
        edge,
        params: geom,
    }
}

/// Runs the stopping-time selection at threshold `lambda`.
///
/// The field is first normalized by subtracting the minimal oscillation
/// constant of `r0`, so `c_{R0} = 0`; all stopping values refer to the
/// shifted field.
pub fn cz_select<T: Real>(
    field: &GridField<T>,
    r0: &ParabolicRectangle<T>,
    params: &CZParams<T>,
    lambda: T,
) -> Result<CZSelection<T>> {
    params.validate()?;
    if !(lambda > T::zero()) {
        return Err(Error::invalid("lambda", format!("need lambda > 0, got {lambda}")));
    }
    if !field.domain().contains_box(&r0.full_box()) {
        return Err(Error::OutsideDomain("root rectangle outside the field".into()));
    }
    let geom = r0.params;
    let p = geom.p;
    let (gamma, alpha) = (params.gamma.value(), params.alpha.value());
    let m = cz_m(p, alpha, gamma)?;
    let c0 = optimal_constant(field, r0, &params.osc())?.c_star;
    let shifted = field.map_values(|v| v - c0);

    let root_box = r0.upper_part(params.alpha);
    let mut levels: Vec<Vec<CZNode<T>>> = Vec::new();
    let mut level_time_len: Vec<T> = Vec::new();
    let mut selected: Vec<(usize, usize)> = Vec::new();
    let mut selected_measure = T::zero();
    let mut terminal_volume = T::zero();

    // Cell spans of a box, in units of the field's cell lengths.
    let min_span = |b: &SpaceTimeBox<T>| -> T {
        (0..b.dim())
            .map(|a| b.len(a) / field.cell_len(a))
            .fold(T::infinity(), |acc, s| acc.min(s))
    };

    // (parent marker, box) pairs pending subdivision at the next level.
    type Pending<T> = Vec<(Option<(usize, usize)>, SpaceTimeBox<T>)>;
    let mut pending: Pending<T> = vec![(None, root_box.clone())];
    for level in 1..=params.max_depth {
        let mut nodes: Vec<CZNode<T>> = Vec::new();
        let mut next: Pending<T> = Vec::new();
        for (parent, parent_box) in &pending {
            for child in subdivide(parent_box, level, m, alpha, r0.edge, p) {
                let rect = associated_rect(&child, level, m, r0.edge, geom);
                let c_value = optimal_constant(&shifted, &rect, &params.osc())?.c_star;
                let status = if lambda < c_value {
                    NodeStatus::Selected
                } else if level == params.max_depth || min_span(&child) < T::of_usize(params.min_cells) {
                    NodeStatus::Terminal
                } else {
                    NodeStatus::Subdivided
                };
                let idx = nodes.len();
                match status {
                    NodeStatus::Selected => {
                        selected.push((level, idx));
                        selected_measure = selected_measure + child.measure();
                    }
                    NodeStatus::Terminal => {
                        terminal_volume = terminal_volume + child.measure();
                    }
                    NodeStatus::Subdivided => {
                        next.push((Some((level, idx)), child.clone()));
                    }
                }
                nodes.push(CZNode {
                    level,
                    plus_box: child,
                    rect,
                    c_value,
                    status,
                    parent: *parent,
                });
            }
        }
        if let Some(node) = nodes.first() {
            level_time_len.push(node.plus_box.len(node.plus_box.time_axis()));
        }
        levels.push(nodes);
        pending = next;
        if pending.is_empty() {
            break;
        }
    }

    let (kept_minus, dropped_minus) = disjointify_minus(&levels, &selected);

    Ok(CZSelection {
        lambda,
        c0,
        m,
        root_rect: r0.clone(),
        root_box,
        levels,
        level_time_len,
        selected,
        selected_measure,
        kept_minus,
        dropped_minus,
        terminal_volume,
    })
}

/// For every dropped lower box: its `(level, index)` and the kept position
/// it hit.
pub type DroppedMinus = Vec<((usize, usize), usize)>;

/// Thins the overlapping lower family to a pairwise-disjoint subfamily by
/// level-order greedy selection: a lower box is kept when it meets none of
/// the previously kept ones. Returns the kept boxes and, for every dropped
/// box, the kept position it hit (whose spatial projection contains the
/// dropped one and whose 3-dilated time projection covers it).
pub fn disjointify_minus<T: Real>(
    levels: &[Vec<CZNode<T>>],
    selected: &[(usize, usize)],
) -> (Vec<SpaceTimeBox<T>>, DroppedMinus) {
    let mut kept: Vec<SpaceTimeBox<T>> = Vec::new();
    let mut dropped: DroppedMinus = Vec::new();
    for &(level, idx) in selected {
        let minus = levels[level - 1][idx].minus_box();
        match kept.iter().position(|k| !k.is_disjoint(&minus)) {
            None => kept.push(minus),
            Some(hit) => dropped.push(((level, idx), hit)),
        }
    }
    (kept, dropped)
}

impl<T: Real> CZSelection<T> {
    pub fn node(&self, level: usize, idx: usize) -> &CZNode<T> {
        &self.levels[level - 1][idx]
    }

    /// Sum of the kept disjointified lower measures.
    pub fn kept_minus_measure(&self) -> T {
        self.kept_minus
            .iter()
            .map(|b| b.measure())
            .fold(T::zero(), |a, b| a + b)
    }
}

/// One named check of the structural invariant report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine<T> {
    pub name: String,
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

impl<T: Real> CheckLine<T> {
    pub fn le_with(name: impl Into<String>, lhs: T, rhs: T, slack: T) -> Self {
        CheckLine {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs <= rhs + slack,
        }
    }

    pub fn flag(name: impl Into<String>, holds: bool) -> Self {
        CheckLine {
            name: name.into(),
            lhs: if holds { T::one() } else { T::zero() },
            rhs: T::one(),
            holds,
        }
    }
}

/// Structural invariant report of one selection run.
#[derive(Debug, Clone, Serialize)]
pub struct CZInvariantReport<T> {
    pub checks: Vec<CheckLine<T>>,
    pub violations: usize,
}

impl<T: Real> CZInvariantReport<T> {
    pub fn all_hold(&self) -> bool {
        self.violations == 0
    }
}

/// Verifies every structural invariant of a selection run: exact tiling, the
/// per-level time-length bracket, `R_i` inside the parent's lagged upper
/// part, the measure relations, the projection factors of the disjointified
/// family, the `c1` covering bound, and the terminal-volume bound on the
/// level set left uncovered.
pub fn verify_selection<T: Real>(
    field: &GridField<T>,
    sel: &CZSelection<T>,
    params: &CZParams<T>,
) -> Result<CZInvariantReport<T>> {
    let mut checks: Vec<CheckLine<T>> = Vec::new();
    let (gamma, alpha) = (params.gamma.value(), params.alpha.value());
    let p = sel.root_rect.params.p;
    let edge0 = sel.root_rect.edge;
    let two = T::of(2.0);
    let m_t = T::of_usize(sel.m);
    let rel = T::of(1e-12);
    let pm = two.powf(p * m_t);
    let floor_pieces = T::of_usize(pm.floor().to_usize().unwrap_or(1).max(1));
    let ceil_pieces = T::of_usize(pm.ceil().to_usize().unwrap_or(1).max(1));
    let spatial_factor = T::of_usize(1usize << (sel.root_rect.params.n * sel.m));

    // Children tile their parents.
    let mut tiling_err = T::zero();
    for (li, level_nodes) in sel.levels.iter().enumerate() {
        let level = li + 1;
        let mut sums: std::collections::HashMap<Option<(usize, usize)>, T> =
            std::collections::HashMap::new();
        for node in level_nodes {
            let e = sums.entry(node.parent).or_insert_with(T::zero);
            *e = *e + node.plus_box.measure();
        }
        for (parent, sum) in sums {
            let parent_measure = match parent {
                None => sel.root_box.measure(),
                Some((pl, pi)) => sel.node(pl, pi).plus_box.measure(),
            };
            let err = (sum - parent_measure).abs() / parent_measure;
            tiling_err = tiling_err.max(err);
            // Measure relation between levels: count branches exactly.
            let lhs = spatial_factor * floor_pieces;
            let rhs = spatial_factor * ceil_pieces;
            if let Some(node) = level_nodes.iter().find(|n| n.parent == parent) {
                let child = node.plus_box.measure();
                checks.push(CheckLine::le_with(
                    format!("measure-relation-lower level {level}"),
                    lhs * child,
                    parent_measure,
                    rel * parent_measure,
                ));
                checks.push(CheckLine::le_with(
                    format!("measure-relation-upper level {level}"),
                    parent_measure,
                    rhs * child,
                    rel * parent_measure,
                ));
            }
        }
    }
    checks.push(CheckLine::le_with("children-tile-parents (max rel err)", tiling_err, T::zero(), rel));

    // Per-level time-length bracket and containment of the associated
    // rectangle in the parent's lagged upper part.
    for (li, level_nodes) in sel.levels.iter().enumerate() {
        let level = li + 1;
        let theory = (T::one() - alpha) * edge0.powf(p) / two.powf(p * m_t * T::of_usize(level));
        if let Some(lt) = sel.level_time_len.get(li) {
            let half = T::of(0.5);
            checks.push(CheckLine::le_with(
                format!("time-bracket-lower level {level}"),
                half * theory,
                *lt,
                rel * theory,
            ));
            checks.push(CheckLine::le_with(
                format!("time-bracket-upper level {level}"),
                *lt,
                theory,
                rel * theory,
            ));
        }
        let mut rect_in_parent = true;
        let mut splus_in_sminus_proj = true;
        let mut time_proj_factor = true;
        for node in level_nodes {
            let parent_rect = match node.parent {
                None => &sel.root_rect,
                Some((pl, pi)) => &sel.node(pl, pi).rect,
            };
            let parent_upper = parent_rect.upper_part(params.gamma);
            if !parent_upper.contains_box(&node.rect.full_box()) {
                rect_in_parent = false;
            }
            // Spatial projections of S+ and S- agree; time projection of R_i
            // sits inside the ((7+alpha)/(1-alpha))-dilate of pr_t(S-).
            let minus = node.minus_box();
            let t_axis = minus.time_axis();
            for a in 0..t_axis {
                if !(node.plus_box.lo[a] >= minus.lo[a] - crate::geometry::geo_tol(edge0)
                    && node.plus_box.hi[a] <= minus.hi[a] + crate::geometry::geo_tol(edge0))
                {
                    splus_in_sminus_proj = false;
                }
            }
            let kappa = (T::of(7.0) + alpha) / (T::one() - alpha);
            let (dlo, dhi) = minus.dilate_axis(t_axis, kappa);
            let rect_box = node.rect.full_box();
            let tol = crate::geometry::geo_tol(rect_box.coord_scale());
            if !(rect_box.lo[t_axis] >= dlo - tol && rect_box.hi[t_axis] <= dhi + tol) {
                time_proj_factor = false;
            }
            if !(node.plus_box.lo[t_axis] >= rect_box.lo[t_axis] - tol
                && node.plus_box.hi[t_axis] <= rect_box.hi[t_axis] + tol)
            {
                time_proj_factor = false;
            }
            // |S_i| vs |R_i+(gamma)| bracket.
            let s_measure = node.plus_box.measure();
            let upper_measure = node.rect.upper_part(params.gamma).measure();
            let ratio = (T::one() - alpha) / (T::one() - gamma);
            checks.push(CheckLine::le_with(
                format!("box-vs-rect-lower level {level}"),
                T::of(0.5) * ratio * upper_measure,
                s_measure,
                rel * s_measure,
            ));
            checks.push(CheckLine::le_with(
                format!("box-vs-rect-upper level {level}"),
                s_measure,
                ratio * upper_measure,
                rel * s_measure,
            ));
        }
        checks.push(CheckLine::flag(format!("rect-in-parent-upper level {level}"), rect_in_parent));
        checks.push(CheckLine::flag(
            format!("pr_x(S+) in pr_x(S-) level {level}"),
            splus_in_sminus_proj,
        ));
        checks.push(CheckLine::flag(
            format!("pr_t(S+) in pr_t(R) in kappa pr_t(S-) level {level}"),
            time_proj_factor,
        ));
    }

    // Selected upper boxes pairwise disjoint; kept lower family disjoint.
    let mut sel_disjoint = true;
    for (i, &(la, ia)) in sel.selected.iter().enumerate() {
        for &(lb, ib) in &sel.selected[i + 1..] {
            if !sel.node(la, ia).plus_box.is_disjoint(&sel.node(lb, ib).plus_box) {
                sel_disjoint = false;
            }
        }
    }
    checks.push(CheckLine::flag("selected-pairwise-disjoint", sel_disjoint));
    let mut minus_disjoint = true;
    for (i, a) in sel.kept_minus.iter().enumerate() {
        for b in &sel.kept_minus[i + 1..] {
            if !a.is_disjoint(b) {
                minus_disjoint = false;
            }
        }
    }
    checks.push(CheckLine::flag("kept-minus-pairwise-disjoint", minus_disjoint));

    // Dropped lower boxes: spatial projection inside the kept one, time
    // projection inside its 3-dilate.
    let mut proj_ok = true;
    for &((level, idx), kept_pos) in &sel.dropped_minus {
        let dropped = sel.node(level, idx).minus_box();
        let kept = &sel.kept_minus[kept_pos];
        let t_axis = dropped.time_axis();
        let tol = crate::geometry::geo_tol(kept.coord_scale());
        for a in 0..t_axis {
            if !(dropped.lo[a] >= kept.lo[a] - tol && dropped.hi[a] <= kept.hi[a] + tol) {
                proj_ok = false;
            }
        }
        let (dlo, dhi) = kept.dilate_axis(t_axis, T::of(3.0));
        if !(dropped.lo[t_axis] >= dlo - tol && dropped.hi[t_axis] <= dhi + tol) {
            proj_ok = false;
        }
    }
    checks.push(CheckLine::flag("dropped-projection-factors", proj_ok));

    // Covering bound |S(lambda)| <= c1 * sum |kept minus|.
    let c1 = T::of(3.0) * (T::of(7.0) + alpha) / (T::one() - alpha);
    let kept_total = sel.kept_minus_measure();
    checks.push(CheckLine::le_with(
        "covering-bound c1",
        sel.selected_measure,
        c1 * kept_total,
        rel * sel.selected_measure.max(T::one()),
    ));

    // Level set not covered by S(lambda) fits inside the terminal boxes.
    let shifted = field.map_values(|v| v - sel.c0);
    let total_level = shifted.level_set_measure(&sel.root_box, T::zero(), sel.lambda, Sign::Plus)?;
    let mut covered = T::zero();
    for &(level, idx) in &sel.selected {
        covered = covered
            + shifted.level_set_measure(&sel.node(level, idx).plus_box, T::zero(), sel.lambda, Sign::Plus)?;
    }
    let uncovered = (total_level - covered).max(T::zero());
    checks.push(CheckLine::le_with(
        "uncovered-level-set vs terminal volume",
        uncovered,
        sel.terminal_volume,
        rel * sel.root_box.measure(),
    ));

    let violations = checks.iter().filter(|c| !c.holds).count();
    Ok(CZInvariantReport { checks, violations })
}

/// Greedy Vitali-type cover: keep rectangles in decreasing edge order when
/// disjoint from everything kept. Every input rectangle then meets a kept
/// rectangle of at least its edge length, hence lies in its 5-dilate.
pub fn vitali_cover<T: Real>(rects: &[ParabolicRectangle<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_by(|&a, &b| {
        rects[b]
            .edge
            .partial_cmp(&rects[a].edge)
            .expect("finite edges")
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let b = rects[i].full_box();
        if kept.iter().all(|&k| rects[k].full_box().is_disjoint(&b)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Checks that every input rectangle is contained in the 5-dilate of some
/// kept rectangle that it intersects.
pub fn vitali_cover_check<T: Real>(rects: &[ParabolicRectangle<T>], kept: &[usize]) -> bool {
    rects.iter().all(|r| {
        let rb = r.full_box();
        kept.iter().any(|&k| {
            let kb = rects[k].full_box();
            !kb.is_disjoint(&rb)
                && rects[k]
                    .dilate(T::of(5.0))
                    .expect("positive factor")
                    .full_box()
                    .contains_box(&rb)
        })
    })
}

/// A constant of the chain, exact in log2 space; the linear value is `None`
/// once it overflows the scalar type.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstantValue<T> {
    pub log2: T,
    pub value: Option<T>,
}

impl<T: Real> ConstantValue<T> {
    fn from_log2(log2: T) -> Self {
        let value = T::of(2.0).powf(log2);
        ConstantValue {
            log2,
            value: value.is_finite().then_some(value),
        }
    }

    pub fn overflowed(&self) -> bool {
        self.value.is_none()
    }
}

/// The explicit constant chain of the weak-type estimate.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport<T> {
    pub m: usize,
    pub c1: ConstantValue<T>,
    pub c2: ConstantValue<T>,
    pub c3: ConstantValue<T>,
    pub c4: ConstantValue<T>,
    pub c5: ConstantValue<T>,
    pub a_big: ConstantValue<T>,
    pub c_big: ConstantValue<T>,
    /// `lambda_0 = norm / |R0+(alpha)|^{1/q}` when a norm and measure were given.
    pub lambda0: Option<T>,
}

/// Evaluates `m`, `c1..c5`, `A` and `C` in log2 space.
pub fn constants<T: Real>(
    n: usize,
    p: T,
    q: T,
    r: T,
    gamma: T,
    alpha: T,
    norm_and_measure: Option<(T, T)>,
) -> Result<ConstantsReport<T>> {
    if !(T::zero() <= gamma && gamma < alpha && alpha < T::one()) {
        return Err(Error::invalid("alpha", "need 0 <= gamma < alpha < 1"));
    }
    if !(r > T::zero() && r <= T::one()) || !(q > T::one()) {
        return Err(Error::invalid("q", "need 0 < r <= 1 < q"));
    }
    let m = cz_m(p, alpha, gamma)?;
    let one = T::one();
    let two = T::of(2.0);
    let qr = q / r;
    let n_t = T::of_usize(n);
    let lg = |x: T| x.log2();

    let c1_lin = T::of(3.0) * (T::of(7.0) + alpha) / (one - alpha);
    let l_c1 = lg(c1_lin);
    // c2 = 5^{n+p} 2^{q/r+2} c1 / (1-gamma)
    let l_c2 = (n_t + p) * lg(T::of(5.0)) + (qr + two) + l_c1 - lg(one - gamma);
    // c3 = 2 c1 ((1-gamma)/(1-alpha)) 2^{1+n+p} ((3+alpha)/(2(alpha-gamma)))^{1+n/p}
    let ratio = (T::of(3.0) + alpha) / (two * (alpha - gamma));
    let l_c3 = one + l_c1 + lg((one - gamma) / (one - alpha)) + (one + n_t + p) + (one + n_t / p) * lg(ratio);
    // A = 2^{q/r+1} c3
    let l_a = qr + one + l_c3;
    // c4 = c2 (2(1-gamma)/(1-alpha))^{q/r}
    let l_c4 = l_c2 + qr * lg(two * (one - gamma) / (one - alpha));
    // c5 = 2^{q/r+1} A^{q/r} c4
    let l_c5 = qr + one + qr * l_a + l_c4;
    // C = 2^{q/r} c5
    let l_c = qr + l_c5;

    let lambda0 = norm_and_measure.map(|(norm, measure)| norm / measure.powf(one / q));
    Ok(ConstantsReport {
        m,
        c1: ConstantValue::from_log2(l_c1),
        c2: ConstantValue::from_log2(l_c2),
        c3: ConstantValue::from_log2(l_c3),
        c4: ConstantValue::from_log2(l_c4),
        c5: ConstantValue::from_log2(l_c5),
        a_big: ConstantValue::from_log2(l_a),
        c_big: ConstantValue::from_log2(l_c),
        lambda0,
    })
}

/// Exact supremum of `lambda^q |box cap {(f-c)_sign > lambda}|` over all
/// `lambda > 0`: the level-set measure is a step function jumping at the
/// distinct truncated cell values, so the supremum is attained along them.
pub fn exact_weak_sup<T: Real>(
    field: &GridField<T>,
    b: &SpaceTimeBox<T>,
    c: T,
    q: T,
    sign: Sign,
) -> Result<(T, T)> {
    let mut diffs: Vec<(T, T)> = field
        .cell_weights(b)?
        .into_iter()
        .filter_map(|(v, w)| {
            let d = sign.truncate(v - c);
            (d > T::zero()).then_some((d, w))
        })
        .collect();
    diffs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
    let mut best = (T::zero(), T::zero()); // (lambda at sup, sup value)
    let mut cum = T::zero();
    let mut i = 0;
    while i < diffs.len() {
        let a = diffs[i].0;
        while i < diffs.len() && diffs[i].0 == a {
            cum = cum + diffs[i].1;
            i += 1;
        }
        // As lambda -> a from below the measure is the volume of {>= a}.
        let ratio = a.powf(q) * cum;
        if ratio > best.1 {
            best = (a, ratio);
        }
    }
    Ok(best)
}

/// One side of the weak-type report.
#[derive(Debug, Clone, Serialize)]
pub struct WeakTypeSide<T> {
    /// `lambda` attaining the empirical supremum.
    pub lambda_at: T,
    /// `sup_lambda lambda^q measure / norm^q`; `None` when the norm is 0
    /// but level sets are nonempty (candidate-set insufficiency).
    pub sup_ratio: Option<T>,
    pub holds: Option<bool>,
}

/// Weak-type verification report. `tag` is always "diagnostic": the desk
/// norm in the denominator is a lower bound of the true norm.
#[derive(Debug, Clone, Serialize)]
pub struct WeakTypeReport<T> {
    pub norm: T,
    pub mode: PackingMode,
    pub candidate_count: usize,
    pub c0: T,
    pub c_log2: T,
    pub plus: WeakTypeSide<T>,
    pub minus: WeakTypeSide<T>,
    pub lambda_lines: Vec<CheckLine<T>>,
    pub caveat: &'static str,
}

impl<T: Real> WeakTypeReport<T> {
    pub fn all_hold(&self) -> bool {
        self.plus.holds.unwrap_or(false) && self.minus.holds.unwrap_or(false)
    }
}

fn side_report<T: Real>(
    field: &GridField<T>,
    b: &SpaceTimeBox<T>,
    c0: T,
    q: T,
    sign: Sign,
    norm: T,
    c_log2: T,
) -> Result<WeakTypeSide<T>> {
    let (lambda_at, sup) = exact_weak_sup(field, b, c0, q, sign)?;
    if norm > T::zero() {
        let ratio = sup / norm.powf(q);
        let holds = if ratio > T::zero() {
            ratio.log2() <= c_log2
        } else {
            true
        };
        Ok(WeakTypeSide {
            lambda_at,
            sup_ratio: Some(ratio),
            holds: Some(holds),
        })
    } else if sup > T::zero() {
        // Zero desk norm with nonzero level sets: the candidate set cannot
        // certify anything; flag instead of failing.
        Ok(WeakTypeSide {
            lambda_at,
            sup_ratio: None,
            holds: None,
        })
    } else {
        Ok(WeakTypeSide {
            lambda_at,
            sup_ratio: Some(T::zero()),
            holds: Some(true),
        })
    }
}

/// Verifies the weak-type estimate on `r0`: the empirical supremum of
/// `lambda^q |R0+-(alpha) cap {(f-c_{R0})_+- > lambda}| / norm^q` stays
/// below the constant `C` of the chain. Optional explicit ladder values are
/// reported line by line; the supremum itself is exact.
pub fn verify_weak_type<T: Real>(
    field: &GridField<T>,
    r0: &ParabolicRectangle<T>,
    params: &CZParams<T>,
    ladder: &CandidateLadder<T>,
    lambda_ladder: &[T],
) -> Result<WeakTypeReport<T>> {
    params.validate()?;
    let geom = r0.params;
    let cands = enumerate_candidates(&r0.full_box(), field.resolution(), ladder, &geom)?;
    let mode = if cands.len() <= crate::packing::EXACT_CAP {
        PackingMode::Exact
    } else {
        PackingMode::Greedy
    };
    let (norm, _) = pjnq_norm(field, &cands, params.gamma, params.r, params.q, mode)?;
    let c0 = optimal_constant(field, r0, &params.osc())?.c_star;
    let report = constants(
        geom.n,
        geom.p,
        params.q,
        params.r,
        params.gamma.value(),
        params.alpha.value(),
        Some((norm, r0.upper_part(params.alpha).measure())),
    )?;
    let c_log2 = report.c_big.log2;

    let plus = side_report(
        field,
        &r0.upper_part(params.alpha),
        c0,
        params.q,
        Sign::Plus,
        norm,
        c_log2,
    )?;
    let minus = side_report(
        field,
        &r0.lower_part(params.alpha),
        c0,
        params.q,
        Sign::Minus,
        norm,
        c_log2,
    )?;

    let mut lambda_lines = Vec::new();
    for &lambda in lambda_ladder {
        let meas = field.level_set_measure(&r0.upper_part(params.alpha), c0, lambda, Sign::Plus)?;
        let lhs = lambda.powf(params.q) * meas;
        let rhs = if norm > T::zero() {
            // C * norm^q, compared in log space when it overflows.
            let log_rhs = c_log2 + params.q * norm.log2();
            T::of(2.0).powf(log_rhs)
        } else {
            T::zero()
        };
        lambda_lines.push(CheckLine {
            name: format!("lambda={lambda}"),
            lhs,
            rhs,
            holds: lhs <= rhs || (norm > T::zero() && lhs.log2() <= c_log2 + params.q * norm.log2()),
        });
    }

    Ok(WeakTypeReport {
        norm,
        mode,
        candidate_count: cands.len(),
        c0,
        c_log2,
        plus,
        minus,
        lambda_lines,
        caveat: "desk norm is a certified lower bound of the true norm; verdicts are diagnostic",
    })
}

/// Good-lambda verification report; all lines are diagnostic for the same
/// lower-bound reason.
#[derive(Debug, Clone, Serialize)]
pub struct GoodLambdaReport<T> {
    /// `|S(lambda)| <= A^{q/r} c4 norm^q/(lambda^r - delta^r)^{q/r} + (c3/A) |S(delta)|`
    pub general: CheckLine<T>,
    /// `|S(2^{1/r} lambda)| <= A^{q/r} c4 norm^q/lambda^q + (c3/A) |S(lambda)|`
    pub iterated: CheckLine<T>,
    /// `|S(lambda0)| <= |R0+(alpha)|`, when `lambda0 > 0`.
    pub base_case: Option<CheckLine<T>>,
    /// `|S(2^{K/r} lambda0)| <= c5 norm^q / (2^{K/r} lambda0)^q` for K = 0..
    pub induction: Vec<CheckLine<T>>,
    pub lambda0: Option<T>,
    pub caveat: &'static str,
}

impl<T: Real> GoodLambdaReport<T> {
    pub fn all_hold(&self) -> bool {
        self.general.holds
            && self.iterated.holds
            && self.base_case.as_ref().is_none_or(|c| c.holds)
            && self.induction.iter().all(|c| c.holds)
    }
}

/// Checks the good-lambda inequality and the induction ladder at finitely
/// many points, with the desk norm on the right-hand side.
pub fn verify_good_lambda<T: Real>(
    field: &GridField<T>,
    r0: &ParabolicRectangle<T>,
    params: &CZParams<T>,
    lambda: T,
    delta: T,
    norm: T,
    induction_steps: usize,
) -> Result<GoodLambdaReport<T>> {
    if !(lambda > delta && delta > T::zero()) {
        return Err(Error::invalid("lambda", "need lambda > delta > 0"));
    }
    let geom = r0.params;
    let rep = constants(
        geom.n,
        geom.p,
        params.q,
        params.r,
        params.gamma.value(),
        params.alpha.value(),
        Some((norm, r0.upper_part(params.alpha).measure())),
    )?;
    let qr = params.q / params.r;
    let measure = |l: T| -> Result<T> { Ok(cz_select(field, r0, params, l)?.selected_measure) };

    // log2 of A^{q/r} c4 and of c3/A.
    let l_front = qr * rep.a_big.log2 + rep.c4.log2;
    let l_decay = rep.c3.log2 - rep.a_big.log2;
    let two = T::of(2.0);
    let term = |l_const: T, denom_log2: T, s_measure: T| -> T {
        // front * norm^q / denom + decay * s_measure, assembled in linear
        // space via log2 so huge constants saturate to infinity (the check
        // then trivially holds and is reported as such).
        let front = if norm > T::zero() {
            two.powf(l_const + params.q * norm.log2() - denom_log2)
        } else {
            T::zero()
        };
        front + two.powf(l_decay) * s_measure
    };

    let s_delta = measure(delta)?;
    let s_lambda = measure(lambda)?;
    let gap = (lambda.powf(params.r) - delta.powf(params.r)).powf(qr);
    let general = CheckLine::le_with(
        "good-lambda general",
        s_lambda,
        term(l_front, gap.log2(), s_delta),
        T::of(1e-12) * s_lambda.max(T::one()),
    );

    let bumped = two.powf(T::one() / params.r) * lambda;
    let s_bumped = measure(bumped)?;
    let iterated = CheckLine::le_with(
        "good-lambda iterated",
        s_bumped,
        term(l_front, params.q * lambda.log2(), s_lambda),
        T::of(1e-12) * s_bumped.max(T::one()),
    );

    let lambda0 = rep.lambda0.filter(|l| *l > T::zero());
    let base_case = match lambda0 {
        Some(l0) => Some(CheckLine::le_with(
            "base case |S(lambda0)| <= |R0+(alpha)|",
            measure(l0)?,
            r0.upper_part(params.alpha).measure(),
            T::of(1e-12),
        )),
        None => None,
    };
    let mut induction = Vec::new();
    if let Some(l0) = lambda0 {
        for k in 0..induction_steps {
            let lk = two.powf(T::of_usize(k) / params.r) * l0;
            let sk = measure(lk)?;
            let rhs = two.powf(rep.c5.log2 + params.q * (norm.log2() - lk.log2()));
            induction.push(CheckLine::le_with(
                format!("induction K={k}"),
                sk,
                rhs,
                T::of(1e-12) * sk.max(T::one()),
            ));
        }
    }

    Ok(GoodLambdaReport {
        general,
        iterated,
        base_case,
        induction,
        lambda0,
        caveat: "desk norm is a certified lower bound of the true norm; verdicts are diagnostic",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Preset;

    fn geom() -> GeometryParams<f64> {
        GeometryParams::new(1, 2.0).unwrap()
    }

    fn sym_domain() -> SpaceTimeBox<f64> {
        SpaceTimeBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
    }

    fn r0() -> ParabolicRectangle<f64> {
        ParabolicRectangle::new(vec![0.0], 0.0, 1.0, geom()).unwrap()
    }

    fn cz_params() -> CZParams<f64> {
        CZParams::new(TimeLag::zero(), TimeLag::new(0.5).unwrap(), 1.0, 2.0)
            .unwrap()
            .with_depth(3, 2)
    }

    #[test]
    fn cz_m_examples() {
        assert_eq!(cz_m(2.0, 0.5, 0.0).unwrap(), 1);
        assert_eq!(cz_m(2.0, 0.75, 0.5).unwrap(), 2);
        assert!(cz_m(2.0, 0.3, 0.5).is_err());
        // minimality bracket
        for (p, a, g) in [(2.0f64, 0.5f64, 0.0f64), (3.0, 0.8, 0.2), (2.5, 0.6, 0.4)] {
            let m = cz_m(p, a, g).unwrap() as f64;
            let lb = (1.0 / p) * ((3.0 + a) / (2.0 * (a - g))).log2();
            assert!(lb <= m && m < lb.max(1.0) + 1.0, "p={p} a={a} g={g} m={m} lb={lb}");
        }
    }

    #[test]
    fn subdivide_counts_and_tiling() {
        // n=1, p=2, m=1: floor and ceiling branches coincide, 2*4 children.
        let parent = SpaceTimeBox::new(vec![-1.0, 0.5], vec![1.0, 1.0]).unwrap();
        let children = subdivide(&parent, 1, 1, 0.5, 1.0, 2.0);
        assert_eq!(children.len(), 8);
        let sum: f64 = children.iter().map(|c| c.measure()).sum();
        assert!((sum - parent.measure()).abs() / parent.measure() < 1e-12);
        for c in &children {
            assert!(parent.contains_box(c));
        }
    }

    #[test]
    fn zero_field_selects_nothing() {
        let f = GridField::generate(sym_domain(), vec![16, 64], &Preset::Constant { value: 0.0 }, 0)
            .unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            let sel = cz_select(&f, &r0(), &cz_params(), lambda).unwrap();
            assert!(sel.selected.is_empty());
            assert_eq!(sel.selected_measure, 0.0);
        }
    }

    #[test]
    fn lambda_above_range_selects_nothing() {
        let f = GridField::generate(sym_domain(), vec![16, 64], &Preset::RandomCells, 2).unwrap();
        let lambda = f.max_value() - f.min_value() + 1.0;
        let sel = cz_select(&f, &r0(), &cz_params(), lambda).unwrap();
        assert!(sel.selected.is_empty());
    }

    #[test]
    fn selection_is_monotone_in_lambda() {
        let f = GridField::generate(sym_domain(), vec![16, 64], &Preset::RandomCells, 3).unwrap();
        let sel_lo = cz_select(&f, &r0(), &cz_params(), 0.15).unwrap();
        let sel_hi = cz_select(&f, &r0(), &cz_params(), 0.4).unwrap();
        assert!(sel_hi.selected_measure <= sel_lo.selected_measure + 1e-12);
        // Every box selected at the higher threshold lies inside a box
        // selected at the lower one.
        for &(l, i) in &sel_hi.selected {
            let b = &sel_hi.node(l, i).plus_box;
            assert!(
                sel_lo
                    .selected
                    .iter()
                    .any(|&(l2, i2)| sel_lo.node(l2, i2).plus_box.contains_box(b)),
                "selected box at lambda=0.4 not covered at lambda=0.15"
            );
        }
    }

    #[test]
    fn structural_invariants_hold_on_random_fields() {
        for seed in [1u64, 5, 9] {
            let f = GridField::generate(sym_domain(), vec![16, 64], &Preset::RandomCells, seed)
                .unwrap();
            let sel = cz_select(&f, &r0(), &cz_params(), 0.2).unwrap();
            let report = verify_selection(&f, &sel, &cz_params()).unwrap();
            let bad: Vec<_> = report.checks.iter().filter(|c| !c.holds).collect();
            assert!(bad.is_empty(), "violations: {bad:?}");
        }
    }

    #[test]
    fn disjointify_keeps_disjoint_families_unchanged() {
        let f = GridField::generate(sym_domain(), vec![16, 64], &Preset::RandomCells, 8).unwrap();
        let sel = cz_select(&f, &r0(), &cz_params(), 0.05).unwrap();
        // Rerunning on already-kept boxes keeps everything: feed a selection
        // whose lower family is the kept one by filtering the selected list.
        let kept_sources: Vec<(usize, usize)> = sel
            .selected
            .iter()
            .copied()
            .filter(|src| {
                !sel.dropped_minus.iter().any(|(dropped, _)| dropped == src)
            })
            .collect();
        let (kept2, dropped2) = disjointify_minus(&sel.levels, &kept_sources);
        assert_eq!(kept2.len(), kept_sources.len());
        assert!(dropped2.is_empty());
        // Duplicating a source drops the duplicate against the original.
        if let Some(&first) = sel.selected.first() {
            let (kept3, dropped3) = disjointify_minus(&sel.levels, &[first, first]);
            assert_eq!(kept3.len(), 1);
            assert_eq!(dropped3, vec![(first, 0)]);
        }
    }

    #[test]
    fn vitali_cover_examples() {
        let single = vec![r0()];
        assert_eq!(vitali_cover(&single), vec![0]);
        assert!(vitali_cover_check(&single, &[0]));

        let two_disjoint = vec![
            ParabolicRectangle::new(vec![-0.5], -0.5, 0.3, geom()).unwrap(),
            ParabolicRectangle::new(vec![0.5], 0.5, 0.3, geom()).unwrap(),
        ];
        let kept = vitali_cover(&two_disjoint);
        assert_eq!(kept, vec![0, 1]);
        assert!(vitali_cover_check(&two_disjoint, &kept));

        // Chain of overlapping equal rectangles.
        let chain: Vec<_> = (0..6)
            .map(|k| ParabolicRectangle::new(vec![0.1 * k as f64], 0.0, 0.3, geom()).unwrap())
            .collect();
        let kept = vitali_cover(&chain);
        assert!(vitali_cover_check(&chain, &kept));
        for (i, &a) in kept.iter().enumerate() {
            for &b in &kept[i + 1..] {
                assert!(chain[a].full_box().is_disjoint(&chain[b].full_box()));
            }
        }
    }

    #[test]
    fn constants_reference_values() {
        let rep = constants::<f64>(1, 2.0, 2.0, 1.0, 0.0, 0.5, None).unwrap();
        assert_eq!(rep.m, 1);
        assert!((rep.c1.value.unwrap() - 45.0).abs() < 1e-9);
        assert!((rep.c2.value.unwrap() - 90000.0).abs() < 1e-6 * 90000.0);
        // C = 2^{q/r} c5 by construction.
        assert!((rep.c_big.log2 - (2.0 + rep.c5.log2)).abs() < 1e-12);
        // Large q/r overflows the linear value but keeps log2 finite.
        let big = constants::<f64>(1, 2.0, 40.0, 0.1, 0.0, 0.5, None).unwrap();
        assert!(big.c_big.overflowed());
        assert!(big.c_big.log2.is_finite());
    }

    #[test]
    fn weak_type_report_on_step_field() {
        let f = GridField::generate(
            sym_domain(),
            vec![16, 64],
            &Preset::TimeStep {
                jump: 4.0,
                at: 0.0,
                nondecreasing: true,
            },
            0,
        )
        .unwrap();
        let rep = verify_weak_type(
            &f,
            &r0(),
            &cz_params(),
            &CandidateLadder::default(),
            &[0.5, 1.0, 2.0, 5.0],
        )
        .unwrap();
        assert!(rep.norm > 0.0);
        assert!(rep.all_hold(), "{rep:?}");
        // lambda beyond the range empties the level set.
        let last = rep.lambda_lines.last().unwrap();
        assert_eq!(last.lhs, 0.0);
    }

    #[test]
    fn weak_type_zero_field() {
        let f = GridField::generate(sym_domain(), vec![16, 64], &Preset::Constant { value: 0.0 }, 0)
            .unwrap();
        let rep = verify_weak_type(&f, &r0(), &cz_params(), &CandidateLadder::default(), &[1.0])
            .unwrap();
        assert_eq!(rep.norm, 0.0);
        assert_eq!(rep.plus.sup_ratio, Some(0.0));
        assert!(rep.all_hold());
    }

    #[test]
    fn good_lambda_report_on_random_field() {
        let f = GridField::generate(sym_domain(), vec![16, 64], &Preset::RandomCells, 4).unwrap();
        let params = cz_params();
        let ladder = CandidateLadder::default();
        let wt = verify_weak_type(&f, &r0(), &params, &ladder, &[]).unwrap();
        let lambda0 = wt.norm / r0().upper_part(params.alpha).measure().powf(0.5);
        let rep = verify_good_lambda(&f, &r0(), &params, 2.0 * lambda0, lambda0, wt.norm, 3).unwrap();
        assert!(rep.all_hold(), "{rep:?}");
        assert!(rep.base_case.is_some());
    }
}
