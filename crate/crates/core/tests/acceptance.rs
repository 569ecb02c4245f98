//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::time::{Duration, Instant};

use gaplab::certificate::{
    end_to_end_toy, neumann_verdict, rate_schedule_log10, schedule_crossing, schedule_is_decreasing, SlackLedger,
    ToyConfig, FINITE_RANK_SLACK,
};
use gaplab::harness::{
    lattice_growth, linearization_case, median, random_word, zero_mean_generator_sum, LinearizationCaps, GROWTH_C_GEO,
    GROWTH_KAPPA,
};
use gaplab::hyperbolic::{growth_slope, SurfaceModel};
use gaplab::linearization::plan_chain;
use gaplab::operator_lab::{regular_norm_lower, CoefficientMap};
use gaplab::parametrix::cutoffs::CERTIFICATE_GRID;
use gaplab::parametrix::kernel::{
    decay_condition, remainder_bound_fit, remainder_kernel, resolvent_closed_form_s1, resolvent_kernel,
};
use gaplab::parametrix::build_cutoffs;
use gaplab::{rng, Flavor, SupportSet};
use rand::Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let e = start.elapsed();
    (e <= limit, format!("{:.1}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn linearization_residual() -> Outcome {
    let start = Instant::now();
    let caps = LinearizationCaps::default();
    let cases: Vec<_> = (0..100u64)
        .into_par_iter()
        .map(|i| linearization_case(rng::trial_seed(2024, i), &caps, false))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let worst = cases.iter().map(|c| c.residual).fold(0.0, f64::max);
    let (fast, t) = within(Duration::from_secs(60), start);
    check(worst <= 1e-7 && fast, format!("100 instances, max residual {worst:.2e} (≤ 1e-7), {t}"))
}

fn block_structure() -> Outcome {
    let caps = LinearizationCaps::default();
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let c = linearization_case(rng::trial_seed(77, i), &caps, true).map_err(|e| e.to_string())?;
        worst = worst.max(c.off_block_max.unwrap_or(f64::INFINITY));
    }
    check(worst <= 1e-9, format!("20 instances, max off-(∅,∅) block {worst:.2e} (≤ 1e-9)"))
}

fn chain_bookkeeping() -> Outcome {
    let mut r = rng::seeded(31);
    let mut tested = 0;
    for l in 2..=8usize {
        for size in 1..=6usize {
            for _ in 0..5 {
                let mut s = SupportSet::new();
                s.insert(random_word(&mut r, 2, l));
                while s.len() < size {
                    let len = r.random_range(0..=l);
                    s.insert(random_word(&mut r, 2, len));
                }
                let plan = plan_chain(&s, l).map_err(|e| e.to_string())?;
                if !(plan.within_adjusted_bound() && plan.final_in_b1()) {
                    return Err(format!(
                        "l = {l}, |S| = {size}: n_v {} vs adjusted bound {}, final radius {}",
                        plan.n_v,
                        plan.adjusted_bound,
                        plan.final_support.radius()
                    ));
                }
                tested += 1;
            }
        }
    }
    Ok(format!("{tested} supports with l ≤ 8, |S| ≤ 6: n_v within adjusted bound, final support ⊆ B₁"))
}

fn regular_norm() -> Outcome {
    let cm = CoefficientMap::generator_sum(2);
    let mut prev = 0.0;
    let mut monotone = true;
    for radius in (2..=12).step_by(2) {
        let v = regular_norm_lower(&cm, radius, 1e-10).map_err(|e| e.to_string())?;
        monotone &= v >= prev - 1e-12;
        prev = v;
    }
    let start = Instant::now();
    let v14 = regular_norm_lower(&cm, 14, 1e-10).map_err(|e| e.to_string())?;
    monotone &= v14 >= prev - 1e-12;
    let (fast, t) = within(Duration::from_secs(30), start);
    let inside = (3.40..=3.4642).contains(&v14);
    check(inside && monotone && fast, format!("R = 14: {v14:.6} in [3.40, 3.4642], monotone in R: {monotone}, {t}"))
}

fn strong_convergence_trend() -> Outcome {
    let start = Instant::now();
    let limit = 2.0 * 3f64.sqrt();
    let mut medians = Vec::new();
    let mut transitive_100 = 0.0;
    for n in [100usize, 400, 1600] {
        let trials: Vec<_> = (1..=20u64)
            .into_par_iter()
            .map(|s| zero_mean_generator_sum(n, 2, rng::trial_seed(s, n as u64)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let norms: Vec<f64> = trials.iter().map(|t| t.norm).collect();
        medians.push(median(&norms));
        if n == 100 {
            transitive_100 = trials.iter().filter(|t| t.transitive).count() as f64 / 20.0;
        }
    }
    let gaps: Vec<f64> = medians.iter().map(|m| (m - limit).abs()).collect();
    let trend = gaps.windows(2).all(|w| w[1] <= w[0]);
    let close = gaps[2] <= 0.15;
    let (fast, t) = within(Duration::from_secs(300), start);
    check(
        trend && close && transitive_100 >= 0.95 && fast,
        format!(
            "medians {:.4?}, |median − 2√3| {:.4?} non-increasing: {trend}, transitive at n = 100: {transitive_100}, {t}",
            medians, gaps
        ),
    )
}

fn cutoff_certification() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for kappa in [1.0, 0.1, 0.01] {
        let cert = build_cutoffs(kappa).map_err(|e| e.to_string())?.certificate(CERTIFICATE_GRID);
        ok &= cert.holds() && cert.stagger_defect == 0.0;
        parts.push(format!("κ = {kappa}: {:.3e}, {:.3e} ≤ {:.3e}", cert.sup_d1, cert.sup_d2_minus_d1, cert.bound));
    }
    check(ok, format!("{}; χ⁺χ⁻ = χ⁻ exactly", parts.join("; ")))
}

fn kernel_anchors() -> Outcome {
    let e = |x: gaplab::Error| x.to_string();
    let mut worst_rel: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        worst_rel = worst_rel.max((resolvent_kernel(1.0, r).map_err(e)? / resolvent_closed_form_s1(r) - 1.0).abs());
    }
    let mut support = true;
    let ts = [2.0, 5.0, 10.0];
    let ss = [0.6, 0.8, 1.0];
    for t in ts {
        for s in ss {
            support &= remainder_kernel(s, t, t - 1e-9).map_err(e)? == 0.0
                && remainder_kernel(s, t, t + 1.0 + 1e-9).map_err(e)? == 0.0
                && remainder_kernel(s, t, t + 0.5).map_err(e)? != 0.0;
        }
    }
    let c = remainder_bound_fit(&ts, &ss, 50).map_err(e)?;
    let mut decay = true;
    for t in [8.0, 10.0, 15.0] {
        decay &= decay_condition(t).map_err(e)?.holds;
    }
    check(
        worst_rel <= 1e-8 && support && c <= 10.0 && decay,
        format!(
            "closed form rel. error {worst_rel:.1e}, support exact: {support}, C = {c:.4} (≤ 10), Te^(−T√κ) < 1/5: {decay}"
        ),
    )
}

fn lattice_growth_criterion() -> Outcome {
    let rows = lattice_growth(&SurfaceModel::punctured_torus(), &[2.0, 3.0, 4.0, 5.0], GROWTH_KAPPA, GROWTH_C_GEO)
        .map_err(|e| e.to_string())?;
    let slope = growth_slope(&rows.iter().map(|r| (r.t, r.size)).collect::<Vec<_>>());
    let stable = rows.iter().all(|r| r.stable != Some(false));
    let sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    check(
        (1.6..=2.4).contains(&slope) && stable,
        format!("|S(T)| = {sizes:?}, slope {slope:.3} in [1.6, 2.4], stable under doubled slack (T ≤ 4): {stable}"),
    )
}

fn finite_rank(report: &gaplab::certificate::CertificateReport) -> Outcome {
    let s_size = report.support.len();
    let target = 1.0 / (20.0 * s_size as f64);
    let worst = report.truncations.iter().map(|t| t.residual_norm).fold(0.0, f64::max);
    check(
        worst <= target && report.max_truncation_slack <= FINITE_RANK_SLACK,
        format!(
            "|S(T)| = {s_size}, {} truncations, max residual {worst:.3e} ≤ {target:.3e}, slack {:.3e} ≤ 1/20",
            report.truncations.len(),
            report.max_truncation_slack
        ),
    )
}

fn certificate_arithmetic(report: &gaplab::certificate::CertificateReport, cfg: &ToyConfig) -> Outcome {
    let e = |x: gaplab::Error| x.to_string();
    let ledger = SlackLedger::standard();
    let v = ledger.verdict().map_err(e)?;
    let direct = neumann_verdict(0.6, 0.125, None).map_err(e)?;
    let ledger_ok = ledger.holds() && v.verdict && v.total <= 0.8 && direct.verdict;
    let mut worst: f64 = 0.0;
    let mut decreasing = true;
    let mut crossings = Vec::new();
    for flavor in [Flavor::Unitary, Flavor::Permutation] {
        for x in [3.0, 6.0, 9.0, 50.0, 300.0] {
            let r = rate_schedule_log10(flavor, x, 2).map_err(e)?;
            worst = worst.max(r.gap_identity_defect().abs() / r.kappa.abs().max(1.0));
        }
        let c = schedule_crossing(flavor, 2);
        let grid: Vec<f64> = (1..=8).map(|k| c.turning_log10_n * (1.0 + k as f64)).collect();
        decreasing &= schedule_is_decreasing(flavor, 2, &grid).map_err(e)?;
        crossings.push(format!("{flavor:?}: turn at log₁₀n ≈ {:.1}, n* at log₁₀n ≈ {:.3e}", c.turning_log10_n, c.log10_n_star));
    }
    let mut first = Vec::new();
    report.write_csv(&mut first).map_err(e)?;
    let again = end_to_end_toy(&SurfaceModel::punctured_torus(), cfg).map_err(e)?;
    let mut second = Vec::new();
    again.write_csv(&mut second).map_err(e)?;
    let deterministic = first == second && report.to_json().map_err(e)? == again.to_json().map_err(e)?;
    check(
        ledger_ok && worst <= 1e-12 && decreasing && deterministic,
        format!(
            "ledger 2/5 + 1/5 = 3/5, 3/5 + 1/8 ≤ 4/5 < 1: {ledger_ok}; gap identity defect {worst:.1e}; \
             decreasing past turn: {decreasing} ({}); toy rerun byte-identical: {deterministic}",
            crossings.join("; ")
        ),
    )
}

fn main() {
    let toy = ToyConfig::default();
    let start = Instant::now();
    let report = end_to_end_toy(&SurfaceModel::punctured_torus(), &toy);
    let toy_secs = start.elapsed().as_secs_f64();
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let out = f();
        results.push((name, out, t.elapsed().as_secs_f64()));
    };
    run("1 linearization residual", &linearization_residual);
    run("2 Q*Q block structure", &block_structure);
    run("3 chain bookkeeping", &chain_bookkeeping);
    run("4 regular-representation norm", &regular_norm);
    run("5 strong-convergence trend", &strong_convergence_trend);
    run("6 cutoff certification", &cutoff_certification);
    run("7 kernel anchors", &kernel_anchors);
    run("8 lattice growth", &lattice_growth_criterion);
    match &report {
        Ok(r) => {
            run("9 finite-rank control", &|| finite_rank(r));
            run("10 certificate arithmetic", &|| certificate_arithmetic(r, &toy));
        }
        Err(e) => {
            let msg = format!("toy pipeline failed: {e}");
            results.push(("9 finite-rank control", Err(msg.clone()), toy_secs));
            results.push(("10 certificate arithmetic", Err(msg), toy_secs));
        }
    }
    let mut failed = 0;
    for (name, out, secs) in &results {
        match out {
            Ok(d) => println!("PASS {name} [{secs:.1}s]: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name} [{secs:.1}s]: {d}")
            }
        }
    }
    println!("toy pipeline {toy_secs:.1}s; {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
