//! Batches of paired asynchronous and synchronous coverage runs, their
//! aggregate statistics, and the CSV/text outputs.

mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{ExperimentConfig, MapSource, Threshold, CONFIG_KEYS};

use crate::coverage::{CoverageGame, GridWorld};
use crate::error::{Error, Result};
use crate::game::ActionProfile;
use crate::policy::PolicyParams;
use crate::scheduler::{run_trajectory, Mode, SyncParams, TrajectoryRecord};

const INIT_STREAM: u64 = 0;

fn stream_of(mode: Mode) -> u64 {
    match mode {
        Mode::Async => 1,
        Mode::Sync => 2,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one random stream, hashed from the base seed, the run index and a
/// stream tag (0 for the initial deployment, then one per mode).
pub fn derive_seed(base: u64, run: usize, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ run as u64) ^ stream)
}

/// Positions drawn i.i.d. uniformly over the free nodes.
pub fn initial_deployment(world: &GridWorld, agents: usize, seed: u64) -> ActionProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ActionProfile::new((0..agents).map(|_| rng.gen_range(0..world.node_count())).collect())
}

/// Trajectories of one run, in the order of [`AggregateReport::modes`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecords {
    pub run: usize,
    pub start: ActionProfile,
    pub trajectories: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSeries {
    pub mode: Mode,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hitting {
    pub reached: usize,
    pub runs: usize,
    /// Mean first-hitting round; `None` unless every run reached the level.
    pub mean: Option<f64>,
    /// First round at which the across-run mean objective reaches the level.
    pub mean_curve: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HittingRow {
    pub threshold: f64,
    /// One entry per mode, aligned with [`AggregateReport::modes`].
    pub per_mode: Vec<Hitting>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    /// Modes in canonical order (async before sync).
    pub modes: Vec<Mode>,
    pub runs: usize,
    pub rounds: usize,
    pub series: Vec<ModeSeries>,
    pub hitting: Vec<HittingRow>,
}

impl AggregateReport {
    /// `objective[m][r]` is the objective sequence of run `r` in mode
    /// `modes[m]`; every sequence must have the same length.
    pub fn from_objectives(
        modes: &[Mode],
        objective: &[Vec<Vec<f64>>],
        thresholds: &[f64],
    ) -> Result<Self> {
        if modes.is_empty() || modes.len() != objective.len() {
            return Err(Error::Input("one objective set per mode is required".into()));
        }
        let runs = objective[0].len();
        if runs == 0 || objective.iter().any(|set| set.len() != runs) {
            return Err(Error::Input("every mode needs the same nonzero run count".into()));
        }
        let length = objective[0][0].len();
        if length == 0 || objective.iter().flatten().any(|o| o.len() != length) {
            return Err(Error::Input("trajectories have different horizons".into()));
        }
        let mut order: Vec<usize> = (0..modes.len()).collect();
        order.sort_by_key(|&m| modes[m]);

        let series: Vec<ModeSeries> = order
            .iter()
            .map(|&m| {
                let set = &objective[m];
                let column = |t: usize| set.iter().map(move |o| o[t]);
                ModeSeries {
                    mode: modes[m],
                    mean: (0..length).map(|t| column(t).sum::<f64>() / runs as f64).collect(),
                    min: (0..length).map(|t| column(t).fold(f64::INFINITY, f64::min)).collect(),
                    max: (0..length)
                        .map(|t| column(t).fold(f64::NEG_INFINITY, f64::max))
                        .collect(),
                }
            })
            .collect();

        let hitting = thresholds
            .iter()
            .map(|&threshold| HittingRow {
                threshold,
                per_mode: order
                    .iter()
                    .zip(&series)
                    .map(|(&m, curve)| {
                        let hits: Vec<usize> = objective[m]
                            .iter()
                            .filter_map(|o| o.iter().position(|&phi| phi >= threshold))
                            .collect();
                        Hitting {
                            reached: hits.len(),
                            runs,
                            mean: (hits.len() == runs)
                                .then(|| hits.iter().sum::<usize>() as f64 / runs as f64),
                            mean_curve: curve.mean.iter().position(|&phi| phi >= threshold),
                        }
                    })
                    .collect(),
            })
            .collect();

        Ok(AggregateReport {
            modes: order.iter().map(|&m| modes[m]).collect(),
            runs,
            rounds: length - 1,
            series,
            hitting,
        })
    }

    fn hitting_of(&self, row: usize, mode: Mode) -> Option<&Hitting> {
        let m = self.modes.iter().position(|&x| x == mode)?;
        Some(&self.hitting[row].per_mode[m])
    }

    pub fn hitting_mean(&self, row: usize, mode: Mode) -> Option<f64> {
        self.hitting_of(row, mode)?.mean
    }

    pub fn mean_curve_hit(&self, row: usize, mode: Mode) -> Option<usize> {
        self.hitting_of(row, mode)?.mean_curve
    }

    /// Async over sync mean of per-run first-hitting rounds.
    pub fn speedup(&self, row: usize) -> Option<f64> {
        let a = self.hitting_mean(row, Mode::Async)?;
        let s = self.hitting_mean(row, Mode::Sync)?;
        (s > 0.0).then(|| a / s)
    }

    /// Async over sync first-hitting round of the mean objective curve.
    pub fn mean_curve_speedup(&self, row: usize) -> Option<f64> {
        let a = self.mean_curve_hit(row, Mode::Async)?;
        let s = self.mean_curve_hit(row, Mode::Sync)?;
        (s > 0).then(|| a as f64 / s as f64)
    }

    /// `round,mode,mean,min,max`, one line per mode and round.
    pub fn write_aggregate_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::Input(format!("writing aggregate CSV: {e}"));
        writer.write_record(["round", "mode", "mean", "min", "max"]).map_err(to_err)?;
        for series in &self.series {
            for t in 0..series.mean.len() {
                writer
                    .write_record([
                        t.to_string(),
                        series.mode.tag().to_string(),
                        series.mean[t].to_string(),
                        series.min[t].to_string(),
                        series.max[t].to_string(),
                    ])
                    .map_err(to_err)?;
            }
        }
        writer.flush().map_err(|e| Error::Input(format!("writing aggregate CSV: {e}")))?;
        Ok(())
    }

    /// Time-to-threshold tables: mean of per-run first-hitting rounds, and
    /// first round at which the mean objective curve reaches the level.
    pub fn summary_text(&self) -> String {
        let mut text = format!("runs {}, rounds {}\n", self.runs, self.rounds);
        let header = |text: &mut String, title: &str| {
            let _ = write!(text, "\n{title}\n{:<12}", "threshold");
            for mode in &self.modes {
                let _ = write!(text, "{:<24}", mode.tag());
            }
            text.push_str("speedup\n");
        };
        let ratio = |r: Option<f64>| r.map_or("undefined".to_string(), |r| format!("{r:.2}"));

        header(&mut text, "mean first-hitting round over runs");
        for (row, hitting) in self.hitting.iter().enumerate() {
            let _ = write!(text, "{:<12}", hitting.threshold.to_string());
            for h in &hitting.per_mode {
                let cell = match h.mean {
                    Some(mean) => format!("{mean:.2}"),
                    None => format!("not-reached ({}/{})", h.reached, h.runs),
                };
                let _ = write!(text, "{cell:<24}");
            }
            let _ = writeln!(text, "{}", ratio(self.speedup(row)));
        }

        header(&mut text, "first round of the mean curve at the threshold");
        for (row, hitting) in self.hitting.iter().enumerate() {
            let _ = write!(text, "{:<12}", hitting.threshold.to_string());
            for h in &hitting.per_mode {
                let cell = h.mean_curve.map_or("not-reached".to_string(), |t| t.to_string());
                let _ = write!(text, "{cell:<24}");
            }
            let _ = writeln!(text, "{}", ratio(self.mean_curve_speedup(row)));
        }
        text
    }

    /// Writes `aggregate.csv` and `summary.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("aggregate.csv");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.write_aggregate_csv(std::io::BufWriter::new(file))?;
        let path = dir.join("summary.txt");
        fs::write(&path, self.summary_text()).map_err(|e| Error::io(&path, e))
    }
}

/// Name of the config copy `run_experiment` leaves next to its outputs.
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub thresholds: Vec<f64>,
    pub records: Vec<RunRecords>,
    pub report: AggregateReport,
}

/// Runs every mode of the config from a shared initial deployment per run,
/// in parallel across runs, without touching the filesystem.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let world = Arc::new(config.map.load()?);
    let thresholds = config.resolved_thresholds(&world)?;
    let game = CoverageGame::new(Arc::clone(&world), config.agents)?;
    let policy = PolicyParams::binary_log_linear(config.epsilon);
    let sync = SyncParams::new(config.kappa);
    let mut modes = config.modes.clone();
    modes.sort();

    let records = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let start = initial_deployment(
                &world,
                config.agents,
                derive_seed(config.seed, run, INIT_STREAM),
            );
            let trajectories = modes
                .iter()
                .map(|&mode| {
                    let seed = derive_seed(config.seed, run, stream_of(mode));
                    run_trajectory(&game, &start, mode, &policy, &sync, config.rounds, seed)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RunRecords {
                run,
                start,
                trajectories,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let objective: Vec<Vec<Vec<f64>>> = (0..modes.len())
        .map(|m| records.iter().map(|r| r.trajectories[m].objective.clone()).collect())
        .collect();
    let report = AggregateReport::from_objectives(&modes, &objective, &thresholds)?;
    Ok(ExperimentOutput {
        thresholds,
        records,
        report,
    })
}

fn write_trajectory(path: &Path, record: &TrajectoryRecord) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let to_err = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
    let agents = record.profiles.first().map_or(0, |p| p.len());
    let mut header = vec!["round".to_string(), "objective".into(), "movers".into()];
    header.extend((0..agents).map(|i| format!("a{i}")));
    writer.write_record(&header).map_err(to_err)?;
    for (t, profile) in record.profiles.iter().enumerate() {
        let mut row = vec![
            t.to_string(),
            record.objective[t].to_string(),
            record.mover_counts[t].to_string(),
        ];
        row.extend(profile.iter().map(usize::to_string));
        writer.write_record(&row).map_err(to_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Simulates the config and writes `run_<idx>_<mode>.csv`, `aggregate.csv`,
/// `summary.txt` and the effective `config.txt` into the configured output
/// directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let output = simulate(config)?;
    let dir = &config.out;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    output
        .records
        .par_iter()
        .try_for_each(|records| {
            records.trajectories.iter().try_for_each(|t| {
                let path = dir.join(format!("run_{}_{}.csv", records.run, t.mode.tag()));
                write_trajectory(&path, t)
            })
        })?;
    output.report.write_to(dir)?;
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, config.to_text()).map_err(|e| Error::io(path, e))?;
    Ok(output)
}

fn parse_run_name(name: &str) -> Option<(usize, Mode)> {
    let stem = name.strip_prefix("run_")?.strip_suffix(".csv")?;
    let (index, mode) = stem.split_once('_')?;
    Some((index.parse().ok()?, mode.parse().ok()?))
}

fn read_objective(path: &Path) -> Result<Vec<f64>> {
    let schema = |msg: String| Error::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| schema(e.to_string()))?;
    let header = reader.headers().map_err(|e| schema(e.to_string()))?.clone();
    if header.len() < 3 || &header[0] != "round" || &header[1] != "objective" || &header[2] != "movers"
    {
        return Err(schema("expected columns round,objective,movers,a0,...".into()));
    }
    let mut objective = Vec::new();
    for (t, row) in reader.records().enumerate() {
        let row = row.map_err(|e| schema(e.to_string()))?;
        if row[0].parse::<usize>().ok() != Some(t) {
            return Err(schema(format!("row {t} is labelled round {:?}", &row[0])));
        }
        objective.push(
            row[1]
                .parse()
                .map_err(|_| schema(format!("bad objective {:?} in round {t}", &row[1])))?,
        );
    }
    Ok(objective)
}

/// Recomputes the aggregate report from the per-run CSVs in `dir`.
pub fn summarize(dir: &Path, thresholds: &[f64]) -> Result<AggregateReport> {
    let mut files: BTreeMap<Mode, BTreeMap<usize, std::path::PathBuf>> = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        if let Some((run, mode)) = name.to_str().and_then(parse_run_name) {
            files.entry(mode).or_default().insert(run, entry.path());
        }
    }
    if files.is_empty() {
        return Err(Error::Input(format!(
            "{} holds no run_<idx>_<mode>.csv files",
            dir.display()
        )));
    }
    let modes: Vec<Mode> = files.keys().copied().collect();
    let mut objective = Vec::new();
    for (mode, runs) in &files {
        if runs.keys().copied().ne(0..runs.len()) {
            return Err(Error::Input(format!(
                "{mode} runs are not numbered 0..{}",
                runs.len()
            )));
        }
        objective.push(
            runs.values()
                .map(|path| read_objective(path))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    AggregateReport::from_objectives(&modes, &objective, thresholds)
}
