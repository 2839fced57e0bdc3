//! Desk-scale PJN_q+ norm: weight candidate rectangles by their minimal
//! oscillation and maximize the weighted sum over pairwise-disjoint
//! subfamilies.
//!
//! The supremand of the norm attaches to each rectangle the weight
//! `|R+(gamma)| * osc^{q/r}`; a packing is a pairwise-disjoint family of
//! full rectangles and the desk norm is the maximal packing value to the
//! power `1/q`. Since the true norm is a supremum over countable
//! collections, every value computed here is a certified lower bound, and
//! reports say so.
//!
//! Exact maximization is a deterministic branch-and-bound over the conflict
//! graph with remaining-weight prefix bounds; it is meant for candidate
//! counts up to a few dozen and refuses beyond [`EXACT_CAP`]. Greedy
//! (weight-descending, first-fit) is the fallback and never exceeds the
//! exact value.

use serde::Serialize;

use crate::field::GridField;
use crate::float::Real;
use crate::geometry::{GeometryParams, ParabolicRectangle, SpaceTimeBox, TimeLag};
use crate::oscillation::{optimal_constant, OscParams, OscResult};
use crate::{Error, Result};

/// Candidate counts up to this bound should use exact mode.
pub const EXACT_MANDATORY_MAX: usize = 20;
/// Exact mode refuses above this many candidates.
pub const EXACT_CAP: usize = 64;

/// Geometric ladder of candidate rectangles: `scales` dyadic edge lengths
/// and center positions on a cell-stride lattice, filtered to rectangles
/// inside the domain.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateLadder<T> {
    /// Number of dyadic scales, largest first.
    pub scales: usize,
    /// Center stride per axis, in cells; 0 means `max(1, cells/8)`.
    pub stride_cells: usize,
    /// Largest edge length; `None` derives the largest fitting edge.
    pub l_max: Option<T>,
}

impl<T: Real> Default for CandidateLadder<T> {
    fn default() -> Self {
        CandidateLadder {
            scales: 3,
            stride_cells: 0,
            l_max: None,
        }
    }
}

/// Pairwise-disjoint subfamily with its weights.
#[derive(Debug, Clone, Serialize)]
pub struct Packing<T> {
    /// Indices into the candidate list, ascending.
    pub indices: Vec<usize>,
    /// Weight `|R_i+(gamma)| * osc_i^{q/r}` per kept rectangle.
    pub weights: Vec<T>,
    /// Sum of the kept weights.
    pub total: T,
}

impl<T: Real> Packing<T> {
    pub fn empty() -> Self {
        Packing {
            indices: Vec::new(),
            weights: Vec::new(),
            total: T::zero(),
        }
    }
}

/// Packing search mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PackingMode {
    Greedy,
    Exact,
    /// Exact when the candidate count allows it, greedy otherwise.
    Auto,
}

/// Largest edge length whose rectangle fits into `domain`.
pub fn max_fitting_edge<T: Real>(domain: &SpaceTimeBox<T>, geom: &GeometryParams<T>) -> T {
    let two = T::of(2.0);
    let mut l_max = T::infinity();
    for a in 0..geom.n {
        l_max = l_max.min(domain.len(a) / two);
    }
    let lt = domain.len(domain.time_axis()) / two;
    l_max.min(lt.powf(T::one() / geom.p))
}

/// Enumerates candidate rectangles: scale-major (largest edge first), then
/// lexicographic in the center coordinates, spatial axes before time.
pub fn enumerate_candidates<T: Real>(
    domain: &SpaceTimeBox<T>,
    resolution: &[usize],
    ladder: &CandidateLadder<T>,
    geom: &GeometryParams<T>,
) -> Result<Vec<ParabolicRectangle<T>>> {
    if ladder.scales == 0 {
        return Err(Error::invalid("scales", "ladder needs at least one scale"));
    }
    if resolution.len() != geom.n + 1 {
        return Err(Error::invalid("resolution", "length must be n + 1"));
    }
    let l_top = match ladder.l_max {
        Some(l) if l > T::zero() => l,
        Some(_) => return Err(Error::invalid("l_max", "edge must be > 0")),
        None => max_fitting_edge(domain, geom),
    };
    if !(l_top > T::zero()) || !l_top.is_finite() {
        return Ok(Vec::new());
    }
    let stride = if ladder.stride_cells == 0 {
        let min_cells = resolution[..geom.n].iter().copied().min().unwrap_or(1);
        (min_cells / 8).max(1)
    } else {
        ladder.stride_cells
    };
    let tol = crate::geometry::geo_tol(domain.coord_scale());
    let mut out = Vec::new();
    for k in 0..ladder.scales {
        let edge = l_top / T::of_usize(1usize << k);
        let half_t = edge.powf(geom.p);
        // Per-axis center positions.
        let mut positions: Vec<Vec<T>> = Vec::with_capacity(geom.n + 1);
        let mut feasible = true;
        for a in 0..=geom.n {
            let (margin, axis) = if a < geom.n { (edge, a) } else { (half_t, a) };
            let h = domain.len(axis) / T::of_usize(resolution[axis]);
            let step = h * T::of_usize(stride);
            let start = domain.lo[axis] + margin;
            let end = domain.hi[axis] - margin;
            if end < start - tol {
                feasible = false;
                break;
            }
            let mut axis_pos = Vec::new();
            let mut j = 0usize;
            loop {
                let pos = start + step * T::of_usize(j);
                if pos > end + tol {
                    break;
                }
                axis_pos.push(pos.min(end));
                j += 1;
            }
            if axis_pos.is_empty() {
                feasible = false;
                break;
            }
            positions.push(axis_pos);
        }
        if !feasible {
            continue;
        }
        // Lexicographic product of the per-axis positions.
        let mut idx = vec![0usize; geom.n + 1];
        'product: loop {
            let center_x: Vec<T> = (0..geom.n).map(|a| positions[a][idx[a]]).collect();
            let center_t = positions[geom.n][idx[geom.n]];
            let rect = ParabolicRectangle::new(center_x, center_t, edge, *geom)?;
            if domain.contains_box(&rect.full_box()) {
                out.push(rect);
            }
            let mut a = geom.n + 1;
            while a > 0 {
                a -= 1;
                idx[a] += 1;
                if idx[a] < positions[a].len() {
                    continue 'product;
                }
                idx[a] = 0;
            }
            break;
        }
    }
    Ok(out)
}

/// Weight and oscillation data of one candidate.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateWeight<T> {
    pub weight: T,
    pub upper_measure: T,
    pub osc: OscResult<T>,
}

/// Evaluates `|R+(gamma)| * osc^{q/r}` for every candidate. `threads > 1`
/// splits the candidate list into contiguous chunks; results are written by
/// index, so the output is identical to the sequential one.
pub fn candidate_weights<T: Real>(
    field: &GridField<T>,
    candidates: &[ParabolicRectangle<T>],
    gamma: TimeLag<T>,
    r: T,
    q: T,
    threads: usize,
) -> Result<Vec<CandidateWeight<T>>> {
    let params = OscParams::new(gamma, r)?;
    let power = q / r;
    let eval = |rect: &ParabolicRectangle<T>| -> Result<CandidateWeight<T>> {
        let osc = optimal_constant(field, rect, &params)?;
        let upper_measure = rect.upper_part(gamma).measure();
        let weight = if osc.value > T::zero() {
            upper_measure * osc.value.powf(power)
        } else {
            T::zero()
        };
        Ok(CandidateWeight {
            weight,
            upper_measure,
            osc,
        })
    };
    if threads <= 1 || candidates.len() < 2 {
        return candidates.iter().map(eval).collect();
    }
    let chunk = candidates.len().div_ceil(threads);
    let mut results: Vec<Option<Result<CandidateWeight<T>>>> = Vec::new();
    results.resize_with(candidates.len(), || None);
    std::thread::scope(|scope| {
        for (slot_chunk, cand_chunk) in results.chunks_mut(chunk).zip(candidates.chunks(chunk)) {
            scope.spawn(move || {
                for (slot, rect) in slot_chunk.iter_mut().zip(cand_chunk) {
                    *slot = Some(eval(rect));
                }
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("all chunks visited"))
        .collect()
}

/// Desk PJN_q+ norm over the candidate set and the achieving packing.
pub fn pjnq_norm<T: Real>(
    field: &GridField<T>,
    candidates: &[ParabolicRectangle<T>],
    gamma: TimeLag<T>,
    r: T,
    q: T,
    mode: PackingMode,
) -> Result<(T, Packing<T>)> {
    if !(r > T::zero()) || !(r < q) {
        return Err(Error::invalid("r", format!("need 0 < r < q, got r={r}, q={q}")));
    }
    let weights = candidate_weights(field, candidates, gamma, r, q, 1)?;
    let w: Vec<T> = weights.iter().map(|c| c.weight).collect();
    let packing = maximize_disjoint(candidates, &w, mode)?;
    let norm = if packing.total > T::zero() {
        packing.total.powf(T::one() / q)
    } else {
        T::zero()
    };
    Ok((norm, packing))
}

/// Maximizes the weight sum over pairwise-disjoint subfamilies of the full
/// rectangles.
pub fn maximize_disjoint<T: Real>(
    candidates: &[ParabolicRectangle<T>],
    weights: &[T],
    mode: PackingMode,
) -> Result<Packing<T>> {
    let mode = match mode {
        PackingMode::Auto => {
            if candidates.len() <= EXACT_MANDATORY_MAX {
                PackingMode::Exact
            } else {
                PackingMode::Greedy
            }
        }
        m => m,
    };
    // Positive weights only: zero-weight rectangles never help the maximum,
    // and dropping them keeps the achieving packing minimal.
    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| weights[i] > T::zero())
        .collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .expect("finite weights")
            .then(a.cmp(&b))
    });
    let boxes: Vec<SpaceTimeBox<T>> = order
        .iter()
        .map(|&i| candidates[i].full_box())
        .collect();
    let chosen_positions = match mode {
        PackingMode::Greedy => greedy_positions(&boxes),
        PackingMode::Exact => {
            if order.len() > EXACT_CAP {
                return Err(Error::TooManyCandidates {
                    count: order.len(),
                    cap: EXACT_CAP,
                });
            }
            branch_and_bound(&boxes, &order.iter().map(|&i| weights[i]).collect::<Vec<_>>())
        }
        PackingMode::Auto => unreachable!(),
    };
    let mut indices: Vec<usize> = chosen_positions.iter().map(|&p| order[p]).collect();
    indices.sort_unstable();
    let kept_weights: Vec<T> = indices.iter().map(|&i| weights[i]).collect();
    let total = kept_weights.iter().copied().fold(T::zero(), |a, b| a + b);
    Ok(Packing {
        indices,
        weights: kept_weights,
        total,
    })
}

fn greedy_positions<T: Real>(boxes: &[SpaceTimeBox<T>]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (p, b) in boxes.iter().enumerate() {
        if kept.iter().all(|&k| boxes[k].is_disjoint(b)) {
            kept.push(p);
        }
    }
    kept
}

/// Depth-first include/exclude search in weight-descending order. The bound
/// is the remaining-weight suffix sum; pruning is non-strict, so the first
/// optimum found in this deterministic order is kept.
fn branch_and_bound<T: Real>(boxes: &[SpaceTimeBox<T>], weights: &[T]) -> Vec<usize> {
    let n = boxes.len();
    debug_assert!(n <= 128);
    let mut conflicts = vec![0u128; n];
    for i in 0..n {
        for j in 0..i {
            if !boxes[i].is_disjoint(&boxes[j]) {
                conflicts[i] |= 1 << j;
                conflicts[j] |= 1 << i;
            }
        }
    }
    let mut suffix = vec![T::zero(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + weights[i];
    }
    struct Search<'a, T> {
        conflicts: &'a [u128],
        weights: &'a [T],
        suffix: &'a [T],
        best_value: T,
        best_set: u128,
        any: bool,
    }
    impl<T: Real> Search<'_, T> {
        fn run(&mut self, pos: usize, chosen: u128, value: T) {
            if pos == self.weights.len() {
                if !self.any || value > self.best_value {
                    self.best_value = value;
                    self.best_set = chosen;
                    self.any = true;
                }
                return;
            }
            if self.any && value + self.suffix[pos] <= self.best_value {
                return;
            }
            if self.conflicts[pos] & chosen == 0 {
                self.run(pos + 1, chosen | (1 << pos), value + self.weights[pos]);
            }
            self.run(pos + 1, chosen, value);
        }
    }
    let mut search = Search {
        conflicts: &conflicts,
        weights,
        suffix: &suffix,
        best_value: T::zero(),
        best_set: 0,
        any: false,
    };
    search.run(0, 0, T::zero());
    (0..n).filter(|&p| search.best_set & (1 << p) != 0).collect()
}

/// The split of a packing value into one-sided sums.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitValues<T> {
    /// `sum |R_i+(gamma)| (avg (f - c_i)_+^r)^{q/r}`
    pub v_plus: T,
    /// `sum |R_i-(gamma)| (avg (f - c_i)_-^r)^{q/r}`
    pub v_minus: T,
    /// The packing value with the combined oscillation.
    pub v_combined: T,
}

/// One-sided sums of a packing with the per-rectangle optimal constants.
pub fn split_values<T: Real>(
    field: &GridField<T>,
    candidates: &[ParabolicRectangle<T>],
    packing: &Packing<T>,
    gamma: TimeLag<T>,
    r: T,
    q: T,
) -> Result<SplitValues<T>> {
    let params = OscParams::new(gamma, r)?;
    let power = q / r;
    let mut v_plus = T::zero();
    let mut v_minus = T::zero();
    let mut v_combined = T::zero();
    for &i in &packing.indices {
        let rect = &candidates[i];
        let osc = optimal_constant(field, rect, &params)?;
        let upper = rect.upper_part(gamma).measure();
        let lower = rect.lower_part(gamma).measure();
        let pow = |x: T| if x > T::zero() { x.powf(power) } else { T::zero() };
        v_plus = v_plus + upper * pow(osc.plus_term);
        v_minus = v_minus + lower * pow(osc.minus_term);
        v_combined = v_combined + upper * pow(osc.value);
    }
    Ok(SplitValues {
        v_plus,
        v_minus,
        v_combined,
    })
}

/// `(avg_domain (sum_i chi_{R_i+(gamma)} osc_i^{1/r})^q)^{1/q}` for each `q`
/// in the ladder; exactly computable because the integrand is a simple
/// function on the disjoint upper parts. Evaluated in log space so large `q`
/// cannot overflow.
pub fn q_limit_profile<T: Real>(
    field: &GridField<T>,
    candidates: &[ParabolicRectangle<T>],
    packing: &Packing<T>,
    gamma: TimeLag<T>,
    r: T,
    q_ladder: &[T],
) -> Result<Vec<T>> {
    let params = OscParams::new(gamma, r)?;
    let domain_measure = field.domain().measure();
    // (ln |R_i+|, ln a_i) per packed rectangle with a_i > 0.
    let mut terms: Vec<(T, T)> = Vec::new();
    for &i in &packing.indices {
        let rect = &candidates[i];
        let osc = optimal_constant(field, rect, &params)?;
        if osc.value > T::zero() {
            let a = osc.value.powf(T::one() / r);
            terms.push((rect.upper_part(gamma).measure().ln(), a.ln()));
        }
    }
    let ln_domain = domain_measure.ln();
    let mut out = Vec::with_capacity(q_ladder.len());
    for &q in q_ladder {
        if terms.is_empty() {
            out.push(T::zero());
            continue;
        }
        // ln sum exp(ln|R+| + q ln a) - ln|domain|, then /q.
        let exps: Vec<T> = terms.iter().map(|&(lm, la)| lm + q * la).collect();
        let m = exps.iter().fold(-T::infinity(), |acc, &x| acc.max(x));
        let sum = exps
            .iter()
            .map(|&x| (x - m).exp())
            .fold(T::zero(), |a, b| a + b);
        let ln_val = (m + sum.ln() - ln_domain) / q;
        out.push(ln_val.exp());
    }
    Ok(out)
}

/// Report of the PBMO-into-PJN embedding check on a shared candidate set.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingReport<T> {
    pub pjn_norm: T,
    pub mode: PackingMode,
    pub pbmo_norm: T,
    /// `|domain|^{1/q} * pbmo_norm`
    pub bound: T,
    /// `pjn_norm / bound`; 0 when the bound is 0.
    pub ratio: T,
    pub holds: bool,
}

/// Checks `pjn_norm <= |domain|^{1/q} * pbmo_norm` over one candidate set.
pub fn pbmo_embedding_check<T: Real>(
    field: &GridField<T>,
    candidates: &[ParabolicRectangle<T>],
    gamma: TimeLag<T>,
    r: T,
    q: T,
) -> Result<EmbeddingReport<T>> {
    let mode = if candidates.len() <= EXACT_CAP {
        PackingMode::Exact
    } else {
        PackingMode::Greedy
    };
    let (pjn, _) = pjnq_norm(field, candidates, gamma, r, q, mode)?;
    let params = OscParams::new(gamma, r)?;
    let pbmo = crate::oscillation::pbmo_norm(field, candidates, &params)?;
    let bound = field.domain().measure().powf(T::one() / q) * pbmo;
    let ratio = if bound > T::zero() { pjn / bound } else { T::zero() };
    let slack = T::of(1e-12) * bound.max(T::one());
    Ok(EmbeddingReport {
        pjn_norm: pjn,
        mode,
        pbmo_norm: pbmo,
        bound,
        ratio,
        holds: pjn <= bound + slack,
    })
}
