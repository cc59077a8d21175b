use std::fmt;
use std::path::{Path, PathBuf};

use crate::coverage::{max_coverage, parse_map, GridWorld};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::scheduler::Mode;

/// Where a coverage map comes from: a file, or one of the bundled maps
/// written `bundled:<name>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapSource {
    Bundled(String),
    File(PathBuf),
}

impl MapSource {
    pub fn parse(value: &str) -> MapSource {
        match value.strip_prefix("bundled:") {
            Some(name) => MapSource::Bundled(name.to_string()),
            None => MapSource::File(PathBuf::from(value)),
        }
    }

    pub fn load(&self) -> Result<GridWorld> {
        match self {
            MapSource::Bundled(name) => {
                let text = match name.as_str() {
                    "grid80" => fixtures::GRID80,
                    "path3" => fixtures::PATH3,
                    "small11" => fixtures::SMALL11,
                    other => {
                        return Err(Error::Configuration(format!(
                            "unknown bundled map {other:?}; bundled: grid80, path3, small11"
                        )))
                    }
                };
                parse_map(text)
            }
            MapSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_map(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
            }
        }
    }
}

impl fmt::Display for MapSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSource::Bundled(name) => write!(f, "bundled:{name}"),
            MapSource::File(path) => write!(f, "{}", path.display()),
        }
    }
}

/// A time-to-threshold level: an absolute potential value, or a percentage
/// of the best deployment value found by branch and bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Absolute(f64),
    PercentOfBest(f64),
}

impl Threshold {
    pub fn parse(text: &str) -> Result<Threshold> {
        let text = text.trim();
        let (number, percent) = match text.strip_suffix('%') {
            Some(number) => (number, true),
            None => (text, false),
        };
        let value: f64 = number
            .trim()
            .parse()
            .map_err(|_| Error::Configuration(format!("bad threshold {text:?}")))?;
        if !value.is_finite() {
            return Err(Error::Configuration(format!("bad threshold {text:?}")));
        }
        Ok(if percent {
            Threshold::PercentOfBest(value)
        } else {
            Threshold::Absolute(value)
        })
    }

    pub fn resolve(self, best: f64) -> f64 {
        match self {
            Threshold::Absolute(v) => v,
            Threshold::PercentOfBest(p) => best * p / 100.0,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Absolute(v) => write!(f, "{v}"),
            Threshold::PercentOfBest(p) => write!(f, "{p}%"),
        }
    }
}

/// Settings of a batch of paired async/sync coverage runs.
///
/// The file format is one `key = value` per line; `#` starts a comment.
/// Keys: `map`, `agents`, `epsilon`, `kappa`, `rounds`, `runs`, `seed`,
/// `modes` (comma list of `async`, `sync`), `thresholds` (comma list of
/// values or percentages such as `90%`) and `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub map: MapSource,
    pub agents: usize,
    pub epsilon: f64,
    pub kappa: f64,
    pub rounds: usize,
    pub runs: usize,
    pub seed: u64,
    pub modes: Vec<Mode>,
    pub thresholds: Vec<Threshold>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            map: MapSource::Bundled("grid80".into()),
            agents: 5,
            epsilon: 0.4,
            kappa: 0.01,
            rounds: 4000,
            runs: 50,
            seed: 0,
            modes: vec![Mode::Async, Mode::Sync],
            thresholds: vec![
                Threshold::PercentOfBest(85.0),
                Threshold::PercentOfBest(90.0),
                Threshold::PercentOfBest(95.0),
            ],
            out: PathBuf::from("results"),
        }
    }
}

pub const CONFIG_KEYS: [&str; 10] = [
    "map", "agents", "epsilon", "kappa", "rounds", "runs", "seed", "modes", "thresholds", "out",
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Configuration(format!("`{key}` has invalid value {value:?}")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "map" => self.map = MapSource::parse(value),
            "agents" => self.agents = number(key, value)?,
            "epsilon" => self.epsilon = number(key, value)?,
            "kappa" => self.kappa = number(key, value)?,
            "rounds" => self.rounds = number(key, value)?,
            "runs" => self.runs = number(key, value)?,
            "seed" => self.seed = number(key, value)?,
            "modes" => {
                self.modes = list(value)
                    .map(|m| m.parse().map_err(|e: Error| Error::Configuration(e.to_string())))
                    .collect::<Result<_>>()?
            }
            "thresholds" => self.thresholds = list(value).map(Threshold::parse).collect::<Result<_>>()?,
            "out" => self.out = PathBuf::from(value),
            other => {
                return Err(Error::Configuration(format!(
                    "unknown key `{other}`; expected one of {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a config document on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = Vec::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Configuration(format!("line {}: expected `key = value`", line_no + 1))
            })?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::Configuration(format!(
                    "line {}: `{key}` given twice",
                    line_no + 1
                )));
            }
            seen.push(key);
            self.set(key, value)
                .map_err(|e| Error::Configuration(format!("line {}: {e}", line_no + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Configuration(msg));
        if self.agents == 0 {
            return fail("`agents` must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("`epsilon` must be positive, got {}", self.epsilon));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return fail(format!("`kappa` must lie in (0, 1), got {}", self.kappa));
        }
        if self.runs == 0 {
            return fail("`runs` must be at least 1".into());
        }
        if self.modes.is_empty() {
            return fail("`modes` is empty".into());
        }
        if (1..self.modes.len()).any(|k| self.modes[..k].contains(&self.modes[k])) {
            return fail("`modes` lists a mode twice".into());
        }
        Ok(())
    }

    /// Threshold values in potential units, checked to be ascending.
    pub fn resolved_thresholds(&self, world: &GridWorld) -> Result<Vec<f64>> {
        let best = if self.thresholds.iter().any(|t| matches!(t, Threshold::PercentOfBest(_))) {
            max_coverage(world, self.agents).0
        } else {
            f64::NAN
        };
        let values: Vec<f64> = self.thresholds.iter().map(|t| t.resolve(best)).collect();
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Configuration(format!(
                "`thresholds` must be strictly ascending, got {values:?}"
            )));
        }
        Ok(values)
    }

    /// Renders the config in its file format.
    pub fn to_text(&self) -> String {
        let modes: Vec<&str> = self.modes.iter().map(|m| m.tag()).collect();
        let thresholds: Vec<String> = self.thresholds.iter().map(Threshold::to_string).collect();
        format!(
            "map = {}\nagents = {}\nepsilon = {}\nkappa = {}\nrounds = {}\nruns = {}\nseed = {}\nmodes = {}\nthresholds = {}\nout = {}\n",
            self.map,
            self.agents,
            self.epsilon,
            self.kappa,
            self.rounds,
            self.runs,
            self.seed,
            modes.join(","),
            thresholds.join(","),
            self.out.display()
        )
    }
}
