//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its verdict line; exits nonzero when any criterion fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synclearn::chain::{
    build_sync_chain, compare_chains, verify_resistance_calculus, ChainLimits, CompareOptions,
    StateIndex, ComparisonReport, DEFAULT_CALCULUS_EPSILONS,
};
use synclearn::coverage::{parse_map, CoverageGame};
use synclearn::experiment::{initial_deployment, simulate, ExperimentConfig, Threshold};
use synclearn::fixtures::{self, GRID80, GRID80_BEST_FIVE, SMALL11};
use synclearn::game::{check_potential, PotentialCheckOptions};
use synclearn::scheduler::sync_step;
use synclearn::{Game, Mode, PolicyParams, SyncParams};

struct Verdict {
    passed: bool,
    detail: String,
}

fn timed(limit: Option<Duration>, check: impl FnOnce() -> Verdict) -> (Verdict, Duration, bool) {
    let start = Instant::now();
    let verdict = check();
    let elapsed = start.elapsed();
    let in_time = limit.map_or(true, |l| elapsed <= l);
    (verdict, elapsed, in_time)
}

fn comparison_reports(break_coupling: bool) -> Vec<(&'static str, ComparisonReport)> {
    let sync = SyncParams {
        kappa: 0.2,
        ignore_coupling: break_coupling,
    };
    fixtures::bundled()
        .into_iter()
        .map(|f| {
            let report = compare_chains(
                &f.game,
                &PolicyParams::binary_log_linear(0.1),
                &sync,
                &CompareOptions::default(),
            )
            .expect("fixture within caps");
            (f.name, report)
        })
        .collect()
}

fn fixture_shape_ok() -> bool {
    let fixtures = fixtures::bundled();
    fixtures.len() >= 5
        && fixtures.iter().any(|f| f.name == "coverage-path" && f.game.agent_count() == 2)
        && fixtures.iter().all(|f| {
            let g = &f.game;
            g.agent_count() <= 3
                && (0..g.agent_count()).all(|i| g.action_count(i) <= 3)
                && StateIndex::for_game(g, 27).is_ok()
        })
}

fn stable_sets() -> Verdict {
    let reports = comparison_reports(false);
    let failing: Vec<&str> = reports
        .iter()
        .filter(|(_, r)| !r.stability.passed())
        .map(|(n, _)| *n)
        .collect();
    Verdict {
        passed: failing.is_empty() && fixture_shape_ok(),
        detail: format!(
            "{} fixtures, stable sets equal on {}, differing: {failing:?}",
            reports.len(),
            reports.len() - failing.len()
        ),
    }
}

fn feasibility_and_resistance() -> Verdict {
    let reports = comparison_reports(false);
    let edges: usize = reports.iter().map(|(_, r)| r.feasibility.edges.len()).sum();
    let missing: usize = reports.iter().map(|(_, r)| r.feasibility.missing.len()).sum();
    let unfitted: usize = reports.iter().map(|(_, r)| r.feasibility.unfitted.len()).sum();
    let sync_gap = reports
        .iter()
        .map(|(_, r)| r.feasibility.max_sync_gap)
        .fold(0.0, f64::max);
    let analytic_gap = reports
        .iter()
        .map(|(_, r)| r.feasibility.max_analytic_gap)
        .fold(0.0, f64::max);
    Verdict {
        passed: missing == 0 && unfitted == 0 && sync_gap <= 0.05 && analytic_gap <= 0.02,
        detail: format!(
            "{edges} edges, {missing} missing, {unfitted} unfitted, max |R'-R| {sync_gap:.2e} (<= 0.05), max |R-analytic| {analytic_gap:.2e} (<= 0.02)"
        ),
    }
}

fn recurrent_classes() -> Verdict {
    let reports = comparison_reports(false);
    let failing: Vec<&str> = reports
        .iter()
        .filter(|(_, r)| !r.recurrence.passed())
        .map(|(n, _)| *n)
        .collect();
    let classes: usize = reports.iter().map(|(_, r)| r.recurrence.async_classes.len()).sum();
    Verdict {
        passed: failing.is_empty(),
        detail: format!("{classes} classes over {} fixtures, differing: {failing:?}", reports.len()),
    }
}

fn resistance_calculus() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut passed = true;
    for _ in 0..20 {
        let count = rng.gen_range(1..=6);
        let specs: Vec<(f64, f64)> = (0..count)
            .map(|_| (rng.gen_range(0.1..10.0), rng.gen_range(0.0..5.0)))
            .collect();
        let report = verify_resistance_calculus(&specs, &DEFAULT_CALCULUS_EPSILONS, 1e-3)
            .expect("valid synthetic batch");
        // independent expectations
        let sum: f64 = specs.iter().map(|s| s.1).sum();
        let min = specs.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        passed &= report.holds()
            && (report.expected_product - sum).abs() < 1e-12
            && (report.expected_sum - min).abs() < 1e-12;
        worst = worst
            .max((report.product_exponent - sum).abs())
            .max((report.sum_exponent - min).abs());
    }
    Verdict {
        passed: passed && worst <= 1e-3,
        detail: format!("20 batches, worst exponent error {worst:.2e} (<= 1e-3)"),
    }
}

fn sync_chain_matches_simulation() -> Verdict {
    let game = fixtures::graphical();
    let policy = PolicyParams::binary_log_linear(0.5);
    let sync = SyncParams::new(0.2);
    let chain = build_sync_chain(&game, &policy, &sync, &ChainLimits::default()).unwrap();
    let space = StateIndex::for_game(&game, 27).unwrap();
    let samples = 1_000_000;
    let mut worst = 0.0f64;
    let mut multi_mover_rows = 0;
    for state in 0..space.len() {
        let start = space.decode(state);
        let mut rng = ChaCha8Rng::seed_from_u64(state as u64);
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for _ in 0..samples {
            let step = sync_step(&game, &start, &policy, &sync, &mut rng).unwrap();
            *counts.entry(space.encode(&step.next)).or_default() += 1;
        }
        let tv = 0.5
            * (0..space.len())
                .map(|to| {
                    let empirical = counts.get(&to).copied().unwrap_or(0) as f64 / samples as f64;
                    (empirical - chain.get(state, to)).abs()
                })
                .sum::<f64>();
        worst = worst.max(tv);
        let moves_both_ends = (0..space.len()).any(|to| {
            let b = space.decode(to);
            chain.get(state, to) > 0.0 && start[0] != b[0] && start[2] != b[2]
        });
        multi_mover_rows += usize::from(moves_both_ends);
    }
    Verdict {
        passed: worst <= 0.005 && multi_mover_rows > 0,
        detail: format!(
            "{} states x {samples} samples, max TV {worst:.2e} (<= 0.005), {multi_mover_rows} rows with simultaneous moves",
            space.len()
        ),
    }
}

fn inertia_event(game: &CoverageGame, kappa: f64, trials: usize, seed: u64) -> (f64, f64, f64) {
    let n = game.agent_count();
    let world = game.world();
    let start = initial_deployment(world, n, seed);
    let policy = PolicyParams::binary_log_linear(0.4);
    let sync = SyncParams::new(kappa);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        let step = sync_step(game, &start, &policy, &sync, &mut rng).unwrap();
        let d = &step.inertia_draws;
        if d[0] > kappa && d[1..].iter().all(|&x| x <= kappa) {
            hits += 1;
        }
    }
    let p = (1.0 - kappa) * kappa.powi(n as i32 - 1);
    let frequency = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    (frequency, p, se)
}

fn inertia_bound() -> Verdict {
    let game = CoverageGame::new(parse_map(GRID80).unwrap(), 5).unwrap();
    let (f, p, se) = inertia_event(&game, 0.01, 1_000_000, 6);
    // same event where it is frequent enough to be observed
    let (f2, p2, se2) = inertia_event(&game, 0.5, 1_000_000, 7);
    let ok = (f - p).abs() <= 3.0 * se;
    let ok2 = (f2 - p2).abs() <= 3.0 * se2;
    Verdict {
        passed: ok && ok2,
        detail: format!(
            "kappa 0.01: freq {f:.3e} vs {p:.3e} (3 se {:.1e}); kappa 0.5: freq {f2:.5} vs {p2:.5} (3 se {:.1e})",
            3.0 * se,
            3.0 * se2
        ),
    }
}

fn potential_identity() -> Verdict {
    let micro = fixtures::coverage_path();
    let small = CoverageGame::new(parse_map(SMALL11).unwrap(), 2).unwrap();
    let grid = CoverageGame::new(parse_map(GRID80).unwrap(), 5).unwrap();
    let options = PotentialCheckOptions::default();
    let reports = [
        check_potential(&micro, &options).unwrap(),
        check_potential(&small, &options).unwrap(),
        check_potential(&grid, &options).unwrap(),
    ];
    let shape = reports[0].exhaustive
        && reports[1].exhaustive
        && !reports[2].exhaustive
        && reports[2].triples_checked >= 100_000;
    Verdict {
        passed: shape && reports.iter().all(|r| r.holds(1e-12)),
        detail: format!(
            "micro-map {} triples dev {:.1e}, 11-node {} triples dev {:.1e}, 80-node {} sampled triples dev {:.1e}",
            reports[0].triples_checked,
            reports[0].max_deviation,
            reports[1].triples_checked,
            reports[1].max_deviation,
            reports[2].triples_checked,
            reports[2].max_deviation
        ),
    }
}

fn speedup() -> Verdict {
    let config = ExperimentConfig {
        thresholds: [85.0, 90.0, 95.0]
            .into_iter()
            .map(Threshold::PercentOfBest)
            .collect(),
        ..ExperimentConfig::default()
    };
    assert_eq!((config.agents, config.epsilon, config.kappa), (5, 0.4, 0.01));
    assert_eq!((config.runs, config.rounds), (50, 4000));
    let out = simulate(&config).unwrap();
    let report = &out.report;
    let mut passed = (out.thresholds[2] - 0.95 * GRID80_BEST_FIVE).abs() < 1e-9;
    let mut cells = Vec::new();
    for (row, pct) in [85, 90, 95].into_iter().enumerate() {
        let a = report.mean_curve_hit(row, Mode::Async);
        let s = report.mean_curve_hit(row, Mode::Sync);
        let ok = matches!((a, s), (Some(a), Some(s)) if s as f64 <= 0.5 * a as f64);
        passed &= ok;
        let show = |x: Option<usize>| x.map_or("not-reached".to_string(), |x| x.to_string());
        let per_run = |m| {
            let h = &report.hitting[row].per_mode[if m == Mode::Async { 0 } else { 1 }];
            format!("{}/{}", h.reached, h.runs)
        };
        cells.push(format!(
            "{pct}% ({:.1}): sync {} vs async {} [runs reaching {} vs {}]",
            out.thresholds[row],
            show(s),
            show(a),
            per_run(Mode::Sync),
            per_run(Mode::Async)
        ));
    }
    Verdict {
        passed,
        detail: format!("best {GRID80_BEST_FIVE}, mean-curve rounds: {}", cells.join("; ")),
    }
}

fn mover_violations(epsilon: f64, seed: u64) -> (usize, usize) {
    let world = parse_map(GRID80).unwrap();
    let game = CoverageGame::new(world.clone(), 5).unwrap();
    let policy = PolicyParams::binary_log_linear(epsilon);
    let sync = SyncParams::new(0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = initial_deployment(&world, 5, seed);
    let (mut violations, mut multi) = (0usize, 0usize);
    for _ in 0..100_000 {
        let step = sync_step(&game, &profile, &policy, &sync, &mut rng).unwrap();
        for (k, &i) in step.movers.iter().enumerate() {
            for &j in &step.movers[k + 1..] {
                if world.distance(profile[i], profile[j]) <= 4 {
                    violations += 1;
                }
            }
        }
        multi += usize::from(step.movers.len() >= 2);
        profile = step.next;
    }
    (violations, multi)
}

fn movers_uncoupled() -> Verdict {
    let (v, multi) = mover_violations(0.4, 9);
    // high noise keeps agents moving so the check sees many joint moves
    let (v_hot, multi_hot) = mover_violations(5.0, 10);
    Verdict {
        passed: v == 0 && v_hot == 0 && multi + multi_hot > 0,
        detail: format!(
            "100000 steps at eps 0.4: {v} violations, {multi} rounds with 2+ movers; at eps 5: {v_hot} violations, {multi_hot} rounds with 2+ movers"
        ),
    }
}

fn mutation_detected() -> Verdict {
    let reports = comparison_reports(true);
    let caught: Vec<&str> = reports
        .iter()
        .filter(|(_, r)| !(r.stability.passed() && r.feasibility.passed() && r.recurrence.passed()))
        .map(|(n, _)| *n)
        .collect();
    Verdict {
        passed: !caught.is_empty(),
        detail: format!("coupling ignored: suite fails on {caught:?}"),
    }
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: [(&str, Option<Duration>, fn() -> Verdict); 10] = [
        ("1  stochastically stable sets equal", secs(60), stable_sets),
        ("2  feasible edges and resistances", secs(120), feasibility_and_resistance),
        ("3  recurrent classes equal", secs(10), recurrent_classes),
        ("4  resistance calculus", secs(5), resistance_calculus),
        ("5  sync chain vs simulation", secs(300), sync_chain_matches_simulation),
        ("6  single-mover inertia event", None, inertia_bound),
        ("7  potential identity", secs(60), potential_identity),
        ("8  synchronized speedup", secs(600), speedup),
        ("9  movers pairwise uncoupled", None, movers_uncoupled),
        ("10 mutation sensitivity", None, mutation_detected),
    ];
    let mut failures = 0;
    for (name, limit, check) in criteria {
        let (verdict, elapsed, in_time) = timed(limit, check);
        let passed = verdict.passed && in_time;
        failures += usize::from(!passed);
        let budget = limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
        println!(
            "[{}] {name}: {} ({:.2}s{budget})",
            if passed { "PASS" } else { "FAIL" },
            verdict.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
