use synclearn::coverage::{max_coverage, parse_map};
use synclearn::experiment::{simulate, summarize, run_experiment, ExperimentConfig, MapSource, Threshold};
use synclearn::fixtures::SMALL11;
use synclearn::Mode;

fn small_map(runs: usize, rounds: usize) -> ExperimentConfig {
    ExperimentConfig {
        map: MapSource::parse("bundled:small11"),
        agents: 2,
        runs,
        rounds,
        thresholds: vec![Threshold::PercentOfBest(100.0)],
        ..ExperimentConfig::default()
    }
}

#[test]
fn both_modes_reach_the_small_map_optimum_and_sync_is_not_slower() {
    let out = simulate(&small_map(40, 3000)).unwrap();
    let best = max_coverage(&parse_map(SMALL11).unwrap(), 2).0;
    assert_eq!(out.thresholds, vec![best]);
    let row = &out.report.hitting[0];
    for hit in &row.per_mode {
        assert_eq!(hit.reached, hit.runs);
    }
    let asynchronous = out.report.hitting_mean(0, Mode::Async).unwrap();
    let synchronous = out.report.hitting_mean(0, Mode::Sync).unwrap();
    assert!(synchronous <= asynchronous, "sync {synchronous} vs async {asynchronous}");
}

#[test]
fn aggregate_bounds_hold_every_round() {
    let out = simulate(&small_map(6, 200)).unwrap();
    for series in &out.report.series {
        for t in 0..=200 {
            assert!(series.min[t] <= series.mean[t] && series.mean[t] <= series.max[t]);
        }
    }
    for row in &out.report.hitting {
        for hit in &row.per_mode {
            assert!(hit.mean.map_or(true, |m| m <= 200.0));
        }
    }
}

#[test]
fn paired_runs_share_their_start() {
    let out = simulate(&small_map(5, 20)).unwrap();
    for record in &out.records {
        for trajectory in &record.trajectories {
            assert_eq!(trajectory.profiles[0], record.start);
        }
    }
}

#[test]
fn parallel_output_matches_serial() {
    let config = small_map(8, 100);
    let parallel = simulate(&config).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| simulate(&config).unwrap());
    assert_eq!(parallel.records, serial.records);
    assert_eq!(parallel.report, serial.report);
}

#[test]
fn summarize_reproduces_the_written_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_map(3, 50);
    config.out = dir.path().to_path_buf();
    let out = run_experiment(&config).unwrap();
    let mut written = Vec::new();
    out.report.write_aggregate_csv(&mut written).unwrap();
    assert_eq!(std::fs::read(dir.path().join("aggregate.csv")).unwrap(), written);
    let again = summarize(dir.path(), &out.thresholds).unwrap();
    assert_eq!(again, out.report);
}
