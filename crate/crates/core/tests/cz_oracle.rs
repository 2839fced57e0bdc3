//! Independent oracle for the stopping-time selection: a literal recursive
//! reimplementation over all boxes, sharing nothing with the tree machinery
//! of the library, must produce an identical selected family.

use pjn_core::czdecomp::{cz_m, cz_select, CZParams};
use pjn_core::field::{GridField, Preset};
use pjn_core::geometry::{GeometryParams, ParabolicRectangle, SpaceTimeBox, TimeLag};
use pjn_core::oscillation::{optimal_constant, OscParams};

/// A selected box of the oracle: its bounds, level, and stopping value.
#[derive(Debug, Clone, PartialEq)]
struct OracleBox {
    level: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Literal recursion: subdivide the box, build the same-top rectangle from
/// scratch, select when `lambda < c_R`, recurse otherwise.
#[allow(clippy::too_many_arguments)]
fn oracle_recurse(
    field: &GridField<f64>,
    osc: &OscParams<f64>,
    lo: &[f64],
    hi: &[f64],
    level: usize,
    max_level: usize,
    m: usize,
    alpha: f64,
    edge0: f64,
    p: f64,
    lambda: f64,
    min_cells: usize,
    out: &mut Vec<OracleBox>,
) {
    if level > max_level {
        return;
    }
    let dim = lo.len();
    let spatial_pieces = 1usize << m;
    // Temporal branch: floor when l_t(parent)/floor(2^{pm}) is already below
    // the target length for this level, ceiling otherwise.
    let two_pm = 2f64.powf(p * m as f64);
    let target = (1.0 - alpha) * edge0.powf(p) / 2f64.powf(p * (m * level) as f64);
    let parent_lt = hi[dim - 1] - lo[dim - 1];
    let t_pieces = if parent_lt / two_pm.floor() < target {
        two_pm.floor() as usize
    } else {
        two_pm.ceil() as usize
    };
    let mut counts = vec![spatial_pieces; dim - 1];
    counts.push(t_pieces);

    let mut idx = vec![0usize; dim];
    loop {
        // Child bounds; last piece pinned to the parent edge.
        let mut clo = Vec::with_capacity(dim);
        let mut chi = Vec::with_capacity(dim);
        for a in 0..dim {
            let h = (hi[a] - lo[a]) / counts[a] as f64;
            clo.push(lo[a] + h * idx[a] as f64);
            chi.push(if idx[a] + 1 == counts[a] {
                hi[a]
            } else {
                lo[a] + h * (idx[a] + 1) as f64
            });
        }
        // Same-top rectangle of this child, built from scratch.
        let edge = edge0 / 2f64.powf((m * level) as f64);
        let center_x: Vec<f64> = (0..dim - 1).map(|a| (clo[a] + chi[a]) / 2.0).collect();
        let rect = ParabolicRectangle::new(
            center_x,
            chi[dim - 1] - edge.powf(p),
            edge,
            GeometryParams::new(dim - 1, p).unwrap(),
        )
        .unwrap();
        let c = optimal_constant(field, &rect, osc).unwrap().c_star;
        if lambda < c {
            out.push(OracleBox {
                level,
                lo: clo,
                hi: chi,
            });
        } else {
            let too_thin = (0..dim).any(|a| {
                let span = (chi[a] - clo[a]) / field.cell_len(a);
                span < min_cells as f64
            });
            if !too_thin {
                oracle_recurse(
                    field, osc, &clo, &chi, level + 1, max_level, m, alpha, edge0, p, lambda,
                    min_cells, out,
                );
            }
        }
        // advance the multi-index
        let mut a = dim;
        let mut done = true;
        while a > 0 {
            a -= 1;
            idx[a] += 1;
            if idx[a] < counts[a] {
                done = false;
                break;
            }
            idx[a] = 0;
        }
        if done {
            break;
        }
    }
}

#[test]
fn literal_recursion_reproduces_the_selected_family() {
    let domain = SpaceTimeBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let r0 = ParabolicRectangle::new(vec![0.0], 0.0, 1.0, GeometryParams::new(1, 2.0).unwrap())
        .unwrap();
    let params = CZParams::new(TimeLag::zero(), TimeLag::new(0.5).unwrap(), 1.0, 2.0)
        .unwrap()
        .with_depth(4, 1);
    for seed in [2u64, 13, 27] {
        let field = GridField::generate(domain.clone(), vec![16, 64], &Preset::RandomCells, seed)
            .unwrap();
        for lambda in [0.05, 0.15, 0.35] {
            let sel = cz_select(&field, &r0, &params, lambda).unwrap();

            // Oracle runs on the same shifted field; the shift comes from
            // the public minimal-constant operation.
            let osc = OscParams::new(TimeLag::zero(), 1.0).unwrap();
            let c0 = optimal_constant(&field, &r0, &osc).unwrap().c_star;
            let shifted = field.map_values(|v| v - c0);
            let root = r0.upper_part(params.alpha);
            let m = cz_m(2.0, 0.5, 0.0).unwrap();
            let mut oracle = Vec::new();
            oracle_recurse(
                &shifted,
                &osc,
                &root.lo,
                &root.hi,
                1,
                params.max_depth,
                m,
                0.5,
                1.0,
                2.0,
                lambda,
                params.min_cells,
                &mut oracle,
            );

            let selected: Vec<OracleBox> = sel
                .selected
                .iter()
                .map(|&(level, idx)| {
                    let node = sel.node(level, idx);
                    OracleBox {
                        level,
                        lo: node.plus_box.lo.clone(),
                        hi: node.plus_box.hi.clone(),
                    }
                })
                .collect();
            assert_eq!(
                selected.len(),
                oracle.len(),
                "seed {seed} lambda {lambda}: {} selected vs {} oracle",
                selected.len(),
                oracle.len()
            );
            for b in &oracle {
                assert!(
                    selected.iter().any(|s| {
                        s.level == b.level
                            && s.lo
                                .iter()
                                .zip(&b.lo)
                                .all(|(x, y)| (x - y).abs() <= 1e-12)
                            && s.hi
                                .iter()
                                .zip(&b.hi)
                                .all(|(x, y)| (x - y).abs() <= 1e-12)
                    }),
                    "oracle box {b:?} missing from the selection"
                );
            }
        }
    }
}
