//! Property tests for the geometric and integral identities the library is
//! built on.

use proptest::prelude::*;

use pjn_core::field::{GridField, Preset, Sign};
use pjn_core::geometry::{GeometryParams, ParabolicRectangle, SpaceTimeBox, TimeLag};
use pjn_core::oscillation::{optimal_constant, oscillation, OscParams};
use pjn_core::packing::{enumerate_candidates, pjnq_norm, CandidateLadder, PackingMode};

fn rect(x: f64, t: f64, edge: f64, p: f64) -> ParabolicRectangle<f64> {
    ParabolicRectangle::new(vec![x], t, edge, GeometryParams::new(1, p).unwrap()).unwrap()
}

fn sym_domain() -> SpaceTimeBox<f64> {
    SpaceTimeBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
}

fn random_field(seed: u64) -> GridField<f64> {
    GridField::generate(sym_domain(), vec![8, 16], &Preset::RandomCells, seed).unwrap()
}

/// A rectangle whose lagged parts stay inside the symmetric unit domain.
fn inner_rect() -> impl Strategy<Value = ParabolicRectangle<f64>> {
    (
        -0.4f64..0.4,
        -0.4f64..0.4,
        0.15f64..0.55,
        1.5f64..3.0,
    )
        .prop_map(|(x, t, edge, p)| rect(x, t, edge, p))
        .prop_filter("rectangle inside the domain", |r| {
            sym_domain().contains_box(&r.full_box())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lagged_parts_have_equal_expected_measure(
        r in inner_rect(),
        gamma in -0.9f64..0.9,
    ) {
        let lag = TimeLag::new(gamma).unwrap();
        let upper = r.upper_part(lag).measure();
        let lower = r.lower_part(lag).measure();
        let expected = (1.0 - gamma) * r.time_half() * 2.0 * r.edge;
        prop_assert!((upper - lower).abs() <= 1e-12 * upper.max(1.0));
        prop_assert!((upper - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn upper_parts_nest_in_the_lag(
        r in inner_rect(),
        g1 in -0.9f64..0.9,
        g2 in -0.9f64..0.9,
    ) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let big = r.upper_part(TimeLag::new(lo).unwrap());
        let small = r.upper_part(TimeLag::new(hi).unwrap());
        prop_assert!(big.contains_box(&small));
    }

    #[test]
    fn dilation_composes(
        r in inner_rect(),
        a in 0.3f64..2.0,
        b in 0.3f64..2.0,
    ) {
        let lhs = r.dilate(a).unwrap().dilate(b).unwrap();
        let rhs = r.dilate(a * b).unwrap();
        prop_assert!((lhs.edge - rhs.edge).abs() <= 1e-12 * rhs.edge);
        prop_assert_eq!(lhs.center_x, rhs.center_x);
        prop_assert_eq!(lhs.center_t, rhs.center_t);
    }

    #[test]
    fn reflection_is_an_involution(r in inner_rect(), pivot in -1.0f64..1.0) {
        let b = r.full_box();
        let back = b.reflect_time(pivot).reflect_time(pivot);
        for a in 0..b.dim() {
            prop_assert!((b.lo[a] - back.lo[a]).abs() <= 1e-12);
            prop_assert!((b.hi[a] - back.hi[a]).abs() <= 1e-12);
        }
    }

    #[test]
    fn lag_gap_has_length_rho_plus_sigma(
        r in inner_rect(),
        rho in 0.05f64..0.8,
        sigma in 0.05f64..0.8,
    ) {
        let up = r.upper_part(TimeLag::new(rho).unwrap());
        let lo = r.lower_part(TimeLag::new(sigma).unwrap());
        let t = up.time_axis();
        let gap = up.lo[t] - lo.hi[t];
        let expected = (rho + sigma) * r.time_half();
        prop_assert!((gap - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn box_average_is_affine(seed in 0u64..400, a in -2.0f64..2.0, b in -1.0f64..1.0) {
        let f = random_field(seed);
        let g = f.map_values(|v| a * v + b);
        let probe = SpaceTimeBox::new(vec![-0.7, -0.4], vec![0.6, 0.9]).unwrap();
        let lhs = g.box_average(&probe).unwrap();
        let rhs = a * f.box_average(&probe).unwrap() + b;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn truncated_average_monotone_in_c(
        seed in 0u64..400,
        c1 in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
        r in 0.4f64..1.0,
    ) {
        let f = random_field(seed);
        let probe = SpaceTimeBox::new(vec![-0.8, -0.6], vec![0.7, 0.8]).unwrap();
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let plus_lo = f.truncated_power_average(&probe, lo, r, Sign::Plus).unwrap();
        let plus_hi = f.truncated_power_average(&probe, hi, r, Sign::Plus).unwrap();
        prop_assert!(plus_hi <= plus_lo + 1e-12);
        let minus_lo = f.truncated_power_average(&probe, lo, r, Sign::Minus).unwrap();
        let minus_hi = f.truncated_power_average(&probe, hi, r, Sign::Minus).unwrap();
        prop_assert!(minus_lo <= minus_hi + 1e-12);
    }

    #[test]
    fn level_sets_shrink_in_lambda(seed in 0u64..400, l1 in 0.01f64..2.0, l2 in 0.01f64..2.0) {
        let f = random_field(seed);
        let probe = SpaceTimeBox::new(vec![-0.9, -0.9], vec![0.9, 0.9]).unwrap();
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let m_lo = f.level_set_measure(&probe, 0.0, lo, Sign::Plus).unwrap();
        let m_hi = f.level_set_measure(&probe, 0.0, hi, Sign::Plus).unwrap();
        prop_assert!(m_hi <= m_lo + 1e-12);
    }

    #[test]
    fn oscillation_translates_exactly(
        seed in 0u64..400,
        c in -1.0f64..1.0,
        shift in -1.0f64..1.0,
    ) {
        let f = random_field(seed);
        let g = f.map_values(|v| v + shift);
        let r0 = rect(0.0, 0.0, 0.6, 2.0);
        let params = OscParams::new(TimeLag::zero(), 1.0).unwrap();
        let base = oscillation(&f, &r0, &params, c).unwrap();
        let moved = oscillation(&g, &r0, &params, c + shift).unwrap();
        prop_assert!((base - moved).abs() <= 1e-12 * base.max(1.0));
        let of = optimal_constant(&f, &r0, &params).unwrap();
        let og = optimal_constant(&g, &r0, &params).unwrap();
        prop_assert!((of.value - og.value).abs() <= 1e-12 * of.value.max(1.0));
    }

    #[test]
    fn oscillation_scales_linearly_for_r_one(seed in 0u64..400, a in 0.1f64..3.0) {
        let f = random_field(seed);
        let g = f.map_values(|v| a * v);
        let r0 = rect(0.0, 0.0, 0.6, 2.0);
        let params = OscParams::new(TimeLag::zero(), 1.0).unwrap();
        let of = optimal_constant(&f, &r0, &params).unwrap();
        let og = optimal_constant(&g, &r0, &params).unwrap();
        prop_assert!((og.value - a * of.value).abs() <= 1e-12 * og.value.max(1.0));
    }

    #[test]
    fn per_rectangle_subadditivity(seed in 0u64..200, r in 0.4f64..1.0) {
        let f = random_field(seed);
        let g = random_field(seed + 10_000);
        let sum = f.zip_values(&g, |a, b| a + b).unwrap();
        let r0 = rect(0.0, 0.0, 0.6, 2.0);
        let params = OscParams::new(TimeLag::zero(), r).unwrap();
        let k = 2f64.powf(1.0 / r - 1.0).max(2f64.powf(1.0 - 1.0 / r));
        let inv_r = 1.0 / r;
        let vf = optimal_constant(&f, &r0, &params).unwrap().value.powf(inv_r);
        let vg = optimal_constant(&g, &r0, &params).unwrap().value.powf(inv_r);
        let vs = optimal_constant(&sum, &r0, &params).unwrap().value.powf(inv_r);
        prop_assert!(vs <= k * (vf + vg) * (1.0 + 1e-12));
        // max and min with the one-sided constant
        let kp = 1f64.max(2f64.powf(1.0 / r - 1.0));
        let fmax = f.zip_values(&g, |a, b| a.max(b)).unwrap();
        let fmin = f.zip_values(&g, |a, b| a.min(b)).unwrap();
        let vmax = optimal_constant(&fmax, &r0, &params).unwrap().value.powf(inv_r);
        let vmin = optimal_constant(&fmin, &r0, &params).unwrap().value.powf(inv_r);
        prop_assert!(vmax <= kp * (vf + vg) * (1.0 + 1e-12));
        prop_assert!(vmin <= kp * (vf + vg) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn norm_grows_with_the_candidate_set(seed in 0u64..100) {
        let f = random_field(seed);
        let ladder = CandidateLadder { scales: 2, stride_cells: 4, l_max: None };
        let cands = enumerate_candidates(&sym_domain(), &[8, 16], &ladder, &GeometryParams::new(1, 2.0).unwrap()).unwrap();
        let take = cands.len().min(10);
        let (small, _) = pjnq_norm(&f, &cands[..take / 2], TimeLag::zero(), 1.0, 2.0, PackingMode::Exact).unwrap();
        let (large, _) = pjnq_norm(&f, &cands[..take], TimeLag::zero(), 1.0, 2.0, PackingMode::Exact).unwrap();
        prop_assert!(large >= small * (1.0 - 1e-12));
    }
}
