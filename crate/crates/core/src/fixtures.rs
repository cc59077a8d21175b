//! Small constrained potential games bundled for exact chain analysis, and
//! the bundled coverage maps.

use std::fmt;

use crate::coverage::{parse_map, CoverageGame};
use crate::error::{Error, Result};
use crate::game::{Game, TableGame};

/// 10×10 grid, 20 obstacles, 20 nodes of each weight in {1, 3, 5, 7}: the
/// output of `generate_map(10, 10, 20, &[1, 3, 5, 7], GRID80_SMOOTHING, GRID80_SEED)`.
pub const GRID80: &str = include_str!("../maps/grid80.map");
pub const GRID80_SMOOTHING: usize = 20;
pub const GRID80_SEED: u64 = 4;
/// Best coverage value of five agents on [`GRID80`], from `max_coverage`.
pub const GRID80_BEST_FIVE: f64 = 138.0;

/// Three-node path with weights 1, 3, 5.
pub const PATH3: &str = include_str!("../maps/path3.map");

/// Eleven-node map, small enough for exhaustive two-agent enumeration.
pub const SMALL11: &str = include_str!("../maps/small11.map");

/// Either kind of bundled game.
#[derive(Debug, Clone)]
pub enum FixtureGame {
    Table(TableGame),
    Coverage(CoverageGame),
}

impl FixtureGame {
    fn inner(&self) -> &dyn Game {
        match self {
            FixtureGame::Table(g) => g,
            FixtureGame::Coverage(g) => g,
        }
    }
}

impl Game for FixtureGame {
    fn agent_count(&self) -> usize {
        self.inner().agent_count()
    }
    fn action_count(&self, agent: usize) -> usize {
        self.inner().action_count(agent)
    }
    fn utility(&self, agent: usize, profile: &[usize]) -> f64 {
        self.inner().utility(agent, profile)
    }
    fn constraint(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        self.inner().constraint(agent, profile)
    }
    fn coupling(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        self.inner().coupling(agent, profile)
    }
    fn potential(&self, profile: &[usize]) -> Option<f64> {
        self.inner().potential(profile)
    }
    fn has_potential(&self) -> bool {
        self.inner().has_potential()
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub game: FixtureGame,
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.name, self.description)
    }
}

/// Tabulates `φ` over the joint space of `actions` (agent 0 fastest).
fn tabulate(actions: &[usize], phi: impl Fn(&[usize]) -> f64) -> Vec<f64> {
    let size: usize = actions.iter().product();
    let mut profile = vec![0; actions.len()];
    (0..size)
        .map(|mut k| {
            for (slot, &radix) in profile.iter_mut().zip(actions) {
                *slot = k % radix;
                k /= radix;
            }
            phi(&profile)
        })
        .collect()
}

/// Identical-interest 2×2 coordination with a unique best equilibrium.
pub fn coordination() -> TableGame {
    TableGame::identical_interest(vec![2, 2], vec![1.0, 0.0, 0.0, 2.0]).expect("valid tables")
}

/// Three agents on a path: agent 0 plays `f(a0, a1)`, agent 2 plays
/// `g(a1, a2)` and agent 1 plays both, so agents 0 and 2 are uncoupled.
pub fn graphical() -> TableGame {
    let f = [[1.0, 0.0, 0.5], [0.0, 1.5, 0.0]];
    let g = [[0.5, 0.0], [0.0, 1.0], [1.0, 0.0]];
    let actions = [2, 3, 2];
    let phi = tabulate(&actions, |a| f[a[0]][a[1]] + g[a[1]][a[2]]);
    let u0 = tabulate(&actions, |a| f[a[0]][a[1]]);
    let u2 = tabulate(&actions, |a| g[a[1]][a[2]]);
    TableGame::unconstrained(actions.to_vec(), vec![u0, phi.clone(), u2])
        .and_then(|g| g.with_potential(phi))
        .expect("valid tables")
        .with_coupling(0, |_| vec![0, 1])
        .with_coupling(1, |_| vec![0, 1, 2])
        .with_coupling(2, |_| vec![1, 2])
}

fn step_constraint(agent: usize, size: usize) -> impl Fn(&[usize]) -> Vec<usize> {
    move |a| (a[agent].saturating_sub(1)..=(a[agent] + 1).min(size - 1)).collect()
}

/// Two agents on a three-cell line moving at most one cell per update, with
/// a local maximum at (0, 0) and the global one at (2, 2).
pub fn constrained_line() -> TableGame {
    let phi = vec![1.5, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 2.0];
    TableGame::identical_interest(vec![3, 3], phi)
        .expect("valid tables")
        .with_constraint(0, step_constraint(0, 3))
        .with_constraint(1, step_constraint(1, 3))
}

/// Agent 1 may only change action while agent 0 plays 0. Utilities differ
/// from the potential by terms each agent cannot influence.
pub fn gated() -> TableGame {
    let phi = [[0.0, 1.0, 0.5], [1.0, 0.0, 0.0], [0.5, 0.0, 2.0]];
    let actions = [3, 3];
    let potential = tabulate(&actions, |a| phi[a[0]][a[1]]);
    let u0 = tabulate(&actions, |a| phi[a[0]][a[1]] + [0.5, -1.0, 0.0][a[1]]);
    let u1 = tabulate(&actions, |a| phi[a[0]][a[1]] + [1.0, 0.0, 3.0][a[0]]);
    TableGame::unconstrained(actions.to_vec(), vec![u0, u1])
        .and_then(|g| g.with_potential(potential))
        .expect("valid tables")
        .with_constraint(1, |a| if a[0] == 0 { vec![0, 1, 2] } else { vec![a[1]] })
}

/// Three agents with private payoffs and singleton coupling sets.
pub fn independent() -> TableGame {
    let payoff = [[0.0, 1.0, 0.5], [0.5, 0.0, 1.0], [1.0, 0.5, 0.0]];
    let actions = [3, 3, 3];
    let phi = tabulate(&actions, |a| (0..3).map(|i| payoff[i][a[i]]).sum());
    let utility = (0..3)
        .map(|i| tabulate(&actions, |a| payoff[i][a[i]]))
        .collect();
    TableGame::unconstrained(actions.to_vec(), utility)
        .and_then(|g| g.with_potential(phi))
        .expect("valid tables")
        .with_isolated_coupling()
}

/// Two coverage agents on the three-node path.
pub fn coverage_path() -> CoverageGame {
    CoverageGame::new(parse_map(PATH3).expect("bundled map parses"), 2).expect("two agents")
}

/// All bundled small games.
pub fn bundled() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "coordination",
            description: "2x2 identical-interest coordination",
            game: FixtureGame::Table(coordination()),
        },
        Fixture {
            name: "graphical",
            description: "3-agent path-structured potential game, agents 0 and 2 uncoupled",
            game: FixtureGame::Table(graphical()),
        },
        Fixture {
            name: "constrained-line",
            description: "2 agents on a 3-cell line, one-cell moves",
            game: FixtureGame::Table(constrained_line()),
        },
        Fixture {
            name: "gated",
            description: "agent 1 may move only while agent 0 plays 0",
            game: FixtureGame::Table(gated()),
        },
        Fixture {
            name: "independent",
            description: "3 agents with private payoffs, singleton coupling",
            game: FixtureGame::Table(independent()),
        },
        Fixture {
            name: "coverage-path",
            description: "2 coverage agents on the path 1-3-5",
            game: FixtureGame::Coverage(coverage_path()),
        },
    ]
}

pub fn by_name(name: &str) -> Result<Fixture> {
    bundled()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| {
            let names: Vec<&str> = bundled().iter().map(|f| f.name).collect();
            Error::Input(format!("unknown fixture {name:?}; bundled: {}", names.join(", ")))
        })
}
