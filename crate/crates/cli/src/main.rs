//! Command-line driver: coverage experiments, chain verification and
//! re-aggregation of saved runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use synclearn::chain::{compare_chains, CompareOptions};
use synclearn::coverage::CoverageGame;
use synclearn::experiment::{self, ExperimentConfig, MapSource, CONFIG_FILE};
use synclearn::{fixtures, Error, Game, PolicyParams, SyncParams, TableGame};

#[derive(Parser)]
#[command(name = "synclearn", version, about = "Asynchronous vs. synchronized log-linear learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run paired async/sync coverage runs and write CSVs and a summary.
    Run(ExperimentArgs),
    /// Compare the exact async and sync chains of small games.
    Verify(VerifyArgs),
    /// Recompute aggregate.csv and summary.txt from the run CSVs in DIR.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Map file, or bundled:grid80 / bundled:path3 / bundled:small11.
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma list of async, sync.
    #[arg(long)]
    modes: Option<String>,
    /// Comma list of potential values or percentages of the best value, e.g. 90%.
    #[arg(long)]
    thresholds: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Bundled fixture names or game TOML files; all fixtures when empty.
    targets: Vec<String>,
    /// Also verify the coverage game on this map.
    #[arg(long)]
    map: Option<String>,
    /// Agents for the --map game.
    #[arg(long, default_value_t = 2)]
    agents: usize,
    #[arg(long, default_value_t = 0.2)]
    kappa: f64,
    /// Choose movers ignoring the coupling sets (mutation check).
    #[arg(long)]
    break_coupling: bool,
    /// Write the reports to <OUT>/verify.txt as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    dir: PathBuf,
    /// Defaults to <DIR>/config.txt when present.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    thresholds: Option<String>,
    /// Output directory; defaults to DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 3,
        message: e.to_string(),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::from_path(path).map_err(|e| match e {
        Error::Io { .. } => usage(format!("cannot read config: {e}")),
        other => usage(other),
    })
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(map) = &self.map {
            config.map = MapSource::parse(map);
        }
        if let Some(v) = self.agents {
            config.agents = v;
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.kappa {
            config.kappa = v;
        }
        if let Some(v) = self.rounds {
            config.rounds = v;
        }
        if let Some(v) = self.runs {
            config.runs = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = &self.out {
            config.out = v.clone();
        }
        if let Some(v) = &self.modes {
            config.set("modes", v).map_err(usage)?;
        }
        if let Some(v) = &self.thresholds {
            config.set("thresholds", v).map_err(usage)?;
        }
        config.validate().map_err(usage)?;
        Ok(config)
    }
}

fn run(args: &ExperimentArgs) -> Result<bool, Failure> {
    let config = args.config()?;
    let world = config.map.load().map_err(usage)?;
    config.resolved_thresholds(&world).map_err(usage)?;
    let output = experiment::run_experiment(&config).map_err(runtime)?;
    print!("{}", output.report.summary_text());
    println!("outputs written to {}", config.out.display());
    Ok(true)
}

fn verify_one(
    name: &str,
    game: &dyn Game,
    sync: &SyncParams,
    log: &mut String,
) -> Result<bool, Failure> {
    let report = compare_chains(
        game,
        &PolicyParams::binary_log_linear(0.1),
        sync,
        &CompareOptions::default(),
    )
    .map_err(|e| match e {
        Error::Resource { .. } | Error::Parameter(_) => usage(format!("{name}: {e}")),
        other => runtime(format!("{name}: {other}")),
    })?;
    let text = format!("== {name}\n{report}\n\n");
    print!("{text}");
    log.push_str(&text);
    Ok(report.passed())
}

fn verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let sync = SyncParams {
        kappa: args.kappa,
        ignore_coupling: args.break_coupling,
    };
    sync.validate().map_err(usage)?;

    let mut targets: Vec<(String, Box<dyn Game>)> = Vec::new();
    let wanted = if args.targets.is_empty() && args.map.is_none() {
        fixtures::bundled().iter().map(|f| f.name.to_string()).collect()
    } else {
        args.targets.clone()
    };
    for target in wanted {
        if target.ends_with(".toml") || Path::new(&target).is_file() {
            let game = TableGame::from_path(&target).map_err(usage)?;
            targets.push((target, Box::new(game)));
        } else {
            let fixture = fixtures::by_name(&target).map_err(usage)?;
            targets.push((target, Box::new(fixture.game)));
        }
    }
    if let Some(map) = &args.map {
        let source = MapSource::parse(map);
        let world = source.load().map_err(usage)?;
        let game = CoverageGame::new(world, args.agents).map_err(usage)?;
        targets.push((format!("coverage {source} with {} agents", args.agents), Box::new(game)));
    }

    let mut log = String::new();
    let mut passed = true;
    for (name, game) in &targets {
        passed &= verify_one(name, game.as_ref(), &sync, &mut log)?;
    }
    let verdict = if passed { "verified" } else { "verification FAILED" };
    println!("{verdict}: {} game(s)", targets.len());
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        let path = dir.join("verify.txt");
        fs::write(&path, format!("{log}{verdict}\n"))
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(passed)
}

fn summarize(args: &SummarizeArgs) -> Result<bool, Failure> {
    let saved = args.dir.join(CONFIG_FILE);
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None if saved.is_file() => load_config(&saved)?,
        None => ExperimentConfig::default(),
    };
    if let Some(map) = &args.map {
        config.map = MapSource::parse(map);
    }
    if let Some(v) = args.agents {
        config.agents = v;
    }
    if let Some(v) = &args.thresholds {
        config.set("thresholds", v).map_err(usage)?;
    }
    let world = config.map.load().map_err(usage)?;
    let thresholds = config.resolved_thresholds(&world).map_err(usage)?;
    let report = experiment::summarize(&args.dir, &thresholds).map_err(|e| match e {
        Error::Io { .. } => runtime(e),
        other => usage(other),
    })?;
    let out = args.out.as_deref().unwrap_or(&args.dir);
    fs::create_dir_all(out).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    report.write_to(out).map_err(runtime)?;
    print!("{}", report.summary_text());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Verify(args) => verify(args),
        Command::Summarize(args) => summarize(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
