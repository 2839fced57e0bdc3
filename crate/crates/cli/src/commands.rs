//! Command implementations. Each returns a [`Report`]; the caller decides
//! the exit code from the exact checks.

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use pjn_core::chains::{
    build_chain, chain_m, partition_upper, verify_chain, verify_lag_change,
    verify_lag_equivalence, ChainParams, SampleSpec,
};
use pjn_core::czdecomp::{
    constants, cz_select, verify_good_lambda, verify_selection, verify_weak_type, CZParams,
};
use pjn_core::field::{GridField, Preset};
use pjn_core::geometry::{GeometryParams, ParabolicRectangle, TimeLag};
use pjn_core::io::{load_field, save_field};
use pjn_core::oscillation::{optimal_constant, oscillation, OscParams};
use pjn_core::packing::{
    candidate_weights, enumerate_candidates, max_fitting_edge, maximize_disjoint,
    CandidateLadder, PackingMode, EXACT_MANDATORY_MAX,
};
use pjn_core::Result as CoreResult;

use crate::config::{
    pick, ChainArgs, ConstantsArgs, CzArgs, FileConfig, GenArgs, ModeArg, NormArgs, OscArgs,
    PresetKind, SharpArgs, VerifyArgs, VerifyCheck,
};
use crate::report::{Check, Report, Tag};

/// Threads allowed for candidate-weight evaluation; from `PJN_THREADS`.
fn threads() -> usize {
    std::env::var("PJN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

fn finish(mut report: Report, started: Instant) -> Report {
    report.timing_ms = started.elapsed().as_secs_f64() * 1e3;
    report
}

/// The rectangle inscribed in the field domain: centered, with the largest
/// fitting edge. The default root for `sharp`, `cz` and `verify`.
fn inscribed_rect(field: &GridField<f64>, p: f64) -> CoreResult<ParabolicRectangle<f64>> {
    let geom = GeometryParams::new(field.resolution().len() - 1, p)?;
    let domain = field.domain();
    let edge = max_fitting_edge(domain, &geom);
    let center_x: Vec<f64> = (0..geom.n)
        .map(|a| (domain.lo[a] + domain.hi[a]) / 2.0)
        .collect();
    let t_axis = domain.time_axis();
    let center_t = (domain.lo[t_axis] + domain.hi[t_axis]) / 2.0;
    ParabolicRectangle::new(center_x, center_t, edge, geom)
}

fn ladder_from(scales: Option<usize>, stride: Option<usize>, l_max: Option<f64>, file: &FileConfig) -> CandidateLadder<f64> {
    CandidateLadder {
        scales: pick(scales, file.scales, 3),
        stride_cells: pick(stride, file.stride, 0),
        l_max,
    }
}

pub fn gen(args: &GenArgs, _file: &FileConfig) -> CoreResult<Report> {
    let started = Instant::now();
    let seed = args.seed.unwrap_or(0);
    let preset: Preset<f64> = match args.preset {
        PresetKind::Constant => Preset::Constant { value: args.value },
        PresetKind::TimeStep => Preset::TimeStep {
            jump: args.jump,
            at: args.at,
            nondecreasing: args.nondecreasing,
        },
        PresetKind::TimeRamp => Preset::TimeRamp { slope: args.slope },
        PresetKind::RandomCells => Preset::RandomCells,
        PresetKind::LogSpike => Preset::LogSpike {
            point: args
                .point
                .clone()
                .unwrap_or_else(|| vec![0.0; args.res.len()]),
            cap: args.cap,
        },
    };
    let domain = pjn_core::geometry::SpaceTimeBox::new(args.lo.clone(), args.hi.clone())?;
    let field = GridField::generate(domain, args.res.clone(), &preset, seed)?;
    save_field(&args.out, &field, args.p)?;
    let mut report = Report::new(
        "gen",
        json!({
            "preset": format!("{:?}", args.preset),
            "n": args.n, "p": args.p, "res": args.res,
            "lo": args.lo, "hi": args.hi, "seed": seed,
        }),
    );
    report.result = json!({
        "out": args.out.display().to_string(),
        "cells": field.cell_count(),
        "min": field.min_value(),
        "max": field.max_value(),
    });
    Ok(finish(report, started))
}

pub fn osc(args: &OscArgs, file: &FileConfig) -> CoreResult<Report> {
    let started = Instant::now();
    let (field, p) = load_field(&args.field)?;
    let gamma = pick(args.gamma, file.gamma, 0.0);
    let r = pick(args.r, file.r, 1.0);
    let geom = GeometryParams::new(args.center_x.len(), p)?;
    let rect = ParabolicRectangle::new(args.center_x.clone(), args.center_t, args.edge, geom)?;
    let params = OscParams::new(TimeLag::new(gamma)?, r)?;
    let opt = optimal_constant(&field, &rect, &params)?;
    let at_c = match args.c {
        Some(c) => Some(oscillation(&field, &rect, &params, c)?),
        None => None,
    };
    let mut report = Report::new(
        "osc",
        json!({"field": args.field.display().to_string(), "gamma": gamma, "r": r,
               "center_x": args.center_x, "center_t": args.center_t, "edge": args.edge}),
    );
    report.result = json!({
        "c_star": opt.c_star,
        "value": opt.value,
        "plus_term": opt.plus_term,
        "minus_term": opt.minus_term,
        "kind": opt.kind,
        "oscillation_at_c": at_c,
    });
    report.checks.push(Check::new(
        "minimal value below evaluation at c_star + 1",
        opt.value,
        oscillation(&field, &rect, &params, opt.c_star + 1.0)?,
        opt.value <= oscillation(&field, &rect, &params, opt.c_star + 1.0)? + 1e-12,
        Tag::Exact,
    ));
    Ok(finish(report, started))
}

pub fn norm(args: &NormArgs, file: &FileConfig) -> CoreResult<Report> {
    let started = Instant::now();
    let (field, p) = load_field(&args.field)?;
    let gamma = pick(args.gamma, file.gamma, 0.0);
    let r = pick(args.r, file.r, 1.0);
    let q = pick(args.q, file.q, 2.0);
    if !(r > 0.0 && r < q) {
        return Err(pjn_core::Error::invalid(
            "r",
            format!("need 0 < r < q, got r={r}, q={q}"),
        ));
    }
    let geom = GeometryParams::new(field.resolution().len() - 1, p)?;
    let ladder = ladder_from(args.scales, args.stride, args.l_max, file);
    let cands = enumerate_candidates(field.domain(), field.resolution(), &ladder, &geom)?;
    let weights = candidate_weights(&field, &cands, TimeLag::new(gamma)?, r, q, threads())?;
    let w: Vec<f64> = weights.iter().map(|c| c.weight).collect();
    let mode = match args.mode.unwrap_or(ModeArg::Auto) {
        ModeArg::Greedy => PackingMode::Greedy,
        ModeArg::Exact => PackingMode::Exact,
        ModeArg::Auto => {
            if cands.len() <= EXACT_MANDATORY_MAX {
                PackingMode::Exact
            } else {
                PackingMode::Greedy
            }
        }
    };
    let packing = maximize_disjoint(&cands, &w, mode)?;
    let norm = if packing.total > 0.0 {
        packing.total.powf(1.0 / q)
    } else {
        0.0
    };
    let mut report = Report::new(
        "norm",
        json!({"field": args.field.display().to_string(), "gamma": gamma, "r": r, "q": q,
               "scales": ladder.scales, "stride": ladder.stride_cells}),
    );
    report.result = json!({
        "norm": norm,
        "packing": packing.indices,
        "candidate_count": cands.len(),
        "mode": mode,
        "certified": "lower_bound",
    });
    Ok(finish(report, started))
}

pub fn sharp(args: &SharpArgs, file: &FileConfig) -> CoreResult<Report> {
    let started = Instant::now();
    let (field, p) = load_field(&args.field)?;
    let gamma = pick(args.gamma, file.gamma, 0.0);
    let r = pick(args.r, file.r, 1.0);
    let r0 = inscribed_rect(&field, p)?;
    let geom = r0.params;
    let ladder = CandidateLadder {
        scales: pick(args.scales, file.scales, 3),
        stride_cells: pick(args.stride, file.stride, 4),
        l_max: None,
    };
    let cands = enumerate_candidates(&r0.full_box(), field.resolution(), &ladder, &geom)?;
    let params = OscParams::new(TimeLag::new(gamma)?, r)?;

    // Max-assign each candidate's oscillation onto the cells its rectangle
    // covers; equivalent to the per-point candidate maximum.
    let res = field.resolution().to_vec();
    let mut values = vec![0.0f64; field.cell_count()];
    let root = r0.full_box();
    for rect in &cands {
        if !root.contains_box(&rect.full_box()) {
            continue;
        }
        let osc = optimal_constant(&field, rect, &params)?.value;
        if osc <= 0.0 {
            continue;
        }
        let rect_box = rect.full_box();
        let dim = res.len();
        let mut ranges: Vec<(usize, usize)> = Vec::with_capacity(dim);
        for (a, &res_a) in res.iter().enumerate() {
            let h = field.cell_len(a);
            let lo = ((rect_box.lo[a] - field.domain().lo[a]) / h).ceil().max(0.0) as usize;
            let hi = (((rect_box.hi[a] - field.domain().lo[a]) / h).floor() as usize).min(res_a);
            ranges.push((lo.min(res_a), hi));
        }
        // Walk the covered cell block; a cell center lies in the rectangle
        // iff the whole cell is inside for our half-open grid alignment, so
        // conservative inner ranges are used.
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        if idx.iter().zip(&ranges).any(|(&i, r)| i >= r.1) {
            continue;
        }
        'walk: loop {
            let flat = idx
                .iter()
                .zip(&res)
                .fold(0usize, |acc, (&i, &d)| acc * d + i);
            values[flat] = values[flat].max(osc);
            let mut a = res.len();
            while a > 0 {
                a -= 1;
                idx[a] += 1;
                if idx[a] < ranges[a].1 {
                    continue 'walk;
                }
                idx[a] = ranges[a].0;
            }
            break;
        }
    }
    let sharp_field = GridField::new(field.domain().clone(), res, values)?;
    save_field(&args.out, &sharp_field, p)?;
    let mut report = Report::new(
        "sharp",
        json!({"field": args.field.display().to_string(), "gamma": gamma, "r": r}),
    );
    report.result = json!({
        "out": args.out.display().to_string(),
        "candidate_count": cands.len(),
        "max_sharp": sharp_field.max_value(),
        "certified": "lower_bound",
    });
    Ok(finish(report, started))
}

pub fn cz(args: &CzArgs, file: &FileConfig) -> CoreResult<Report> {
    let started = Instant::now();
    let (field, p) = load_field(&args.field)?;
    let gamma = pick(args.gamma, file.gamma, 0.0);
    let alpha = pick(args.alpha, file.alpha, 0.5);
    let r = pick(args.r, file.r, 1.0);
    let q = pick(args.q, file.q, 2.0);
    let span = (field.max_value() - field.min_value()).max(1e-9);
    let lambda = pick(args.lambda, file.lambda, 0.1 * span);
    let params = CZParams::new(TimeLag::new(gamma)?, TimeLag::new(alpha)?, r, q)?.with_depth(
        pick(args.max_depth, file.max_depth, 4),
        pick(args.min_cells, file.min_cells, 2),
    );
    let r0 = inscribed_rect(&field, p)?;
    let sel = cz_select(&field, &r0, &params, lambda)?;
    let invariants = verify_selection(&field, &sel, &params)?;
    let mut report = Report::new(
        "cz",
        json!({"field": args.field.display().to_string(), "gamma": gamma, "alpha": alpha,
               "r": r, "q": q, "lambda": lambda, "max_depth": params.max_depth}),
    );
    for line in &invariants.checks {
        report.checks.push(Check::new(&line.name, line.lhs, line.rhs, line.holds, Tag::Exact));
    }
    report.result = serde_json::to_value(&sel).unwrap_or(Value::Null);
    Ok(finish(report, started))
}

pub fn chain(args: &ChainArgs, file: &FileConfig) -> CoreResult<Report> {
    let started = Instant::now();
    let (field, p) = load_field(&args.field)?;
    let gamma = pick(args.gamma, file.gamma, 0.5);
    let alpha = pick(args.alpha, file.alpha, 0.6);
    let rho = pick(args.rho, file.rho, 0.25);
    let sigma = pick(args.sigma, file.sigma, 0.25);
    let q = pick(args.q, file.q, 2.0);
    let r = pick(args.r, file.r, 1.0);
    let params = ChainParams::new(gamma, alpha, rho, sigma, q, r)?;
    let r0 = inscribed_rect(&field, p)?;
    let m = chain_m(p, alpha, rho, sigma)?;
    let part = partition_upper(&r0, rho, m.m, alpha)?;
    let spec = SampleSpec {
        corners: true,
        center: true,
        random: pick(args.samples, file.samples, 32),
        seed: pick(args.seed, file.seed, 0),
    };
    let mut report = Report::new(
        "chain",
        json!({"field": args.field.display().to_string(), "gamma": gamma, "alpha": alpha,
               "rho": rho, "sigma": sigma, "q": q, "r": r,
               "samples": spec.random, "seed": spec.seed}),
    );
    let mut chains_json = Vec::new();
    for (i, j) in spec.sources(&part) {
        let chain = build_chain(&part, &i, j)?;
        let check = verify_chain(&chain, &r0, &params);
        report.checks.push(Check::new(
            format!("chain ({i:?},{j}) geometric invariants"),
            check.final_coincidence_err,
            1e-9,
            check.all_hold(1e-9),
            Tag::Exact,
        ));
        let emit = chain.len().min(args.emit_links);
        let rects: Vec<Value> = (0..emit)
            .map(|k| serde_json::to_value(chain.link(k)).unwrap_or(Value::Null))
            .collect();
        chains_json.push(json!({
            "source_i": chain.source_i,
            "source_j": chain.source_j,
            "links": chain.len(),
            "rects": rects,
            "rects_truncated": chain.len() > emit,
            "beta": chain.beta,
            "m_ext": chain.m_ext,
            "tau": chain.tau,
            "xi": chain.xi,
            "theta": chain.theta,
            "eta_min": check.eta_min,
            "eta_max": check.eta_max,
            "central": serde_json::to_value(&chain.central).unwrap_or(Value::Null),
            "verdict": check.all_hold(1e-9),
        }));
    }
    report.result = json!({"m": m.m, "epsilon": m.epsilon, "rows": part.time_count, "chains": chains_json});
    Ok(finish(report, started))
}

pub fn constants_cmd(args: &ConstantsArgs, file: &FileConfig) -> CoreResult<Report> {
    let started = Instant::now();
    let q = pick(args.q, file.q, 2.0);
    let r = pick(args.r, file.r, 1.0);
    let gamma = pick(args.gamma, file.gamma, 0.0);
    let alpha = pick(args.alpha, file.alpha, 0.5);
    let norm_measure = args.norm.zip(args.measure);
    let rep = constants(args.n, args.p, q, r, gamma, alpha, norm_measure)?;
    let mut report = Report::new(
        "constants",
        json!({"n": args.n, "p": args.p, "q": q, "r": r, "gamma": gamma, "alpha": alpha}),
    );
    report.result = serde_json::to_value(&rep).unwrap_or(Value::Null);
    report.checks.push(
        Check::new(
            "C = 2^{q/r} c5",
            rep.c_big.log2,
            q / r + rep.c5.log2,
            (rep.c_big.log2 - (q / r + rep.c5.log2)).abs() <= 1e-12,
            Tag::Exact,
        )
        .with_log2(rep.c_big.log2),
    );
    Ok(finish(report, started))
}

pub fn verify(args: &VerifyArgs, file: &FileConfig) -> CoreResult<Report> {
    let started = Instant::now();
    if args.acceptance {
        let mut report = Report::new("verify", json!({"acceptance": true}));
        let mut lines = Vec::new();
        for criterion in pjn_core::acceptance::run_all() {
            eprintln!("{}", criterion.line());
            report.checks.push(Check::new(
                format!("acceptance {:02} {}", criterion.id, criterion.name),
                criterion.violations as f64,
                0.0,
                criterion.passed,
                Tag::Exact,
            ));
            lines.push(serde_json::to_value(&criterion).unwrap_or(Value::Null));
        }
        report.result = Value::Array(lines);
        return Ok(finish(report, started));
    }

    let path = args.field.as_ref().expect("clap enforces field without --acceptance");
    let (field, p) = load_field(path)?;
    let r0 = inscribed_rect(&field, p)?;
    let mut report = Report::new(
        "verify",
        json!({"field": path.display().to_string(), "check": format!("{:?}", args.check)}),
    );
    let ladder = ladder_from(args.scales, args.stride, None, file);

    let want = |c: VerifyCheck| args.check == c || args.check == VerifyCheck::All;

    if want(VerifyCheck::WeakType) {
        let gamma = pick(args.gamma, file.gamma, 0.0);
        let alpha = pick(args.alpha, file.alpha, 0.5);
        let r = pick(args.r, file.r, 1.0);
        let q = pick(args.q, file.q, 2.0);
        let params = CZParams::new(TimeLag::new(gamma)?, TimeLag::new(alpha)?, r, q)?;
        let rep = verify_weak_type(&field, &r0, &params, &ladder, &[])?;
        report.checks.push(
            Check::new(
                "weak-type plus side sup ratio <= C",
                rep.plus.sup_ratio.unwrap_or(f64::NAN),
                f64::INFINITY,
                rep.plus.holds.unwrap_or(false),
                Tag::Diagnostic,
            )
            .with_log2(rep.c_log2),
        );
        report.checks.push(
            Check::new(
                "weak-type minus side sup ratio <= C",
                rep.minus.sup_ratio.unwrap_or(f64::NAN),
                f64::INFINITY,
                rep.minus.holds.unwrap_or(false),
                Tag::Diagnostic,
            )
            .with_log2(rep.c_log2),
        );
        report.result["weak_type"] = serde_json::to_value(&rep).unwrap_or(Value::Null);
    }
    if want(VerifyCheck::GoodLambda) {
        let gamma = pick(args.gamma, file.gamma, 0.0);
        let alpha = pick(args.alpha, file.alpha, 0.5);
        let r = pick(args.r, file.r, 1.0);
        let q = pick(args.q, file.q, 2.0);
        let params = CZParams::new(TimeLag::new(gamma)?, TimeLag::new(alpha)?, r, q)?;
        let wt = verify_weak_type(&field, &r0, &params, &ladder, &[])?;
        let lambda0 = if wt.norm > 0.0 {
            wt.norm / r0.upper_part(params.alpha).measure().powf(1.0 / q)
        } else {
            0.1
        };
        let lambda = pick(args.lambda, file.lambda, 2.0 * lambda0);
        let rep = verify_good_lambda(&field, &r0, &params, lambda, lambda / 2.0, wt.norm, 3)?;
        for line in std::iter::once(&rep.general)
            .chain(std::iter::once(&rep.iterated))
            .chain(rep.base_case.iter())
            .chain(rep.induction.iter())
        {
            report
                .checks
                .push(Check::new(&line.name, line.lhs, line.rhs, line.holds, Tag::Diagnostic));
        }
        report.result["good_lambda"] = serde_json::to_value(&rep).unwrap_or(Value::Null);
    }
    if want(VerifyCheck::LagChange) {
        let gamma = pick(args.gamma, file.gamma, 0.5);
        let alpha = pick(args.alpha, file.alpha, 0.6);
        let rho = pick(args.rho, file.rho, 0.25);
        let sigma = pick(args.sigma, file.sigma, 0.25);
        let q = pick(args.q, file.q, 2.0);
        let r = pick(args.r, file.r, 1.0);
        let params = ChainParams::new(gamma, alpha, rho, sigma, q, r)?;
        let spec = SampleSpec {
            corners: true,
            center: true,
            random: pick(args.samples, file.samples, 8),
            seed: pick(args.seed, file.seed, 0),
        };
        let rep = verify_lag_change(&field, &r0, &params, &ladder, &[], &spec)?;
        for chain in &rep.chains {
            report.checks.push(Check::new(
                format!("chain ({:?},{}) geometric invariants", chain.source_i, chain.source_j),
                chain.final_coincidence_err,
                1e-9,
                chain.all_hold(1e-9),
                Tag::Exact,
            ));
        }
        report.checks.push(
            Check::new(
                "lag-change plus side sup ratio <= C",
                rep.plus.sup_ratio.unwrap_or(f64::NAN),
                f64::INFINITY,
                rep.plus.holds.unwrap_or(false),
                Tag::Diagnostic,
            )
            .with_log2(rep.plus.log2_constant),
        );
        report.checks.push(
            Check::new(
                "lag-change minus side sup ratio <= C",
                rep.minus.sup_ratio.unwrap_or(f64::NAN),
                f64::INFINITY,
                rep.minus.holds.unwrap_or(false),
                Tag::Diagnostic,
            )
            .with_log2(rep.minus.log2_constant),
        );
        report.result["lag_change"] = serde_json::to_value(&rep).unwrap_or(Value::Null);
    }
    if want(VerifyCheck::LagEquivalence) {
        let gamma = pick(args.gamma, file.gamma, 0.5);
        let rho = pick(args.rho, file.rho, 0.25);
        let r = pick(args.r, file.r, 0.5);
        let s = pick(args.s, file.s, 1.0);
        let q = pick(args.q, file.q, 2.0);
        let geom = r0.params;
        let cands = enumerate_candidates(field.domain(), field.resolution(), &ladder, &geom)?;
        let rep = verify_lag_equivalence(&field, &cands, gamma, rho, r, s, q)?;
        report.checks.push(Check::new(
            "lag-equivalence per-candidate inequality (100% required)",
            rep.violations.len() as f64,
            0.0,
            rep.violations.is_empty(),
            Tag::Exact,
        ));
        report.checks.push(Check::new(
            &rep.norm_level.name,
            rep.norm_level.lhs,
            rep.norm_level.rhs,
            rep.norm_level.holds,
            Tag::Exact,
        ));
        report.checks.push(Check::new(
            &rep.reverse.name,
            rep.reverse.lhs,
            rep.reverse.rhs,
            rep.reverse.holds,
            Tag::Diagnostic,
        ));
        report.result["lag_equivalence"] = serde_json::to_value(&rep).unwrap_or(Value::Null);
    }
    Ok(finish(report, started))
}

/// Loads the optional JSON config file.
pub fn load_file_config(path: Option<&Path>) -> CoreResult<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| pjn_core::Error::Format(format!("config file: {e}")))
        }
    }
}
