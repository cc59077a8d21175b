use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Game;
use crate::chain::StateIndex;
use crate::error::{Error, Result};

/// A game given by explicit tables indexed by state index (agent 0 varies
/// fastest).
///
/// Constraint tables default to the unconstrained `C_i(a) = A_i`, coupling
/// tables to the maximal `I_i^c(a) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    space: StateIndex,
    utility: Vec<Vec<f64>>,
    potential: Option<Vec<f64>>,
    constraint: Option<Vec<Vec<Vec<usize>>>>,
    coupling: Option<Vec<Vec<Vec<usize>>>>,
}

/// On-disk layout of a [`TableGame`] (TOML).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub agents: usize,
    pub actions: Vec<usize>,
    pub utility: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<Vec<Vec<usize>>>>,
}

impl TableGame {
    pub fn unconstrained(actions: Vec<usize>, utility: Vec<Vec<f64>>) -> Result<Self> {
        let space = StateIndex::new(actions, usize::MAX)?;
        if utility.len() != space.agent_count() {
            return Err(Error::Input(format!(
                "{} utility tables for {} agents",
                utility.len(),
                space.agent_count()
            )));
        }
        for (agent, table) in utility.iter().enumerate() {
            if table.len() != space.len() {
                return Err(Error::Input(format!(
                    "utility table of agent {agent} has {} entries, expected {}",
                    table.len(),
                    space.len()
                )));
            }
        }
        Ok(TableGame {
            space,
            utility,
            potential: None,
            constraint: None,
            coupling: None,
        })
    }

    /// Identical-interest game: every agent's utility is the potential.
    pub fn identical_interest(actions: Vec<usize>, potential: Vec<f64>) -> Result<Self> {
        let n = actions.len();
        TableGame::unconstrained(actions, vec![potential.clone(); n])?.with_potential(potential)
    }

    pub fn state_index(&self) -> &StateIndex {
        &self.space
    }

    pub fn with_potential(mut self, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != self.space.len() {
            return Err(Error::Input(format!(
                "potential table has {} entries, expected {}",
                potential.len(),
                self.space.len()
            )));
        }
        self.potential = Some(potential);
        Ok(self)
    }

    /// Tabulates `f` as agent `agent`'s constraint oracle.
    pub fn with_constraint(mut self, agent: usize, f: impl Fn(&[usize]) -> Vec<usize>) -> Self {
        let space = self.space.clone();
        let n = self.agent_count();
        let tables = self.constraint.get_or_insert_with(|| {
            (0..n)
                .map(|i| vec![(0..space.radix(i)).collect(); space.len()])
                .collect()
        });
        for k in 0..space.len() {
            let mut set = f(&space.decode(k));
            set.sort_unstable();
            set.dedup();
            tables[agent][k] = set;
        }
        self
    }

    /// Tabulates `f` as agent `agent`'s coupling oracle.
    pub fn with_coupling(mut self, agent: usize, f: impl Fn(&[usize]) -> Vec<usize>) -> Self {
        let space = self.space.clone();
        let n = self.agent_count();
        let tables = self
            .coupling
            .get_or_insert_with(|| vec![vec![(0..n).collect(); space.len()]; n]);
        for k in 0..space.len() {
            let mut set = f(&space.decode(k));
            set.sort_unstable();
            set.dedup();
            tables[agent][k] = set;
        }
        self
    }

    pub fn with_isolated_coupling(self) -> Self {
        let n = self.agent_count();
        (0..n).fold(self, |game, i| game.with_coupling(i, move |_| vec![i]))
    }

    pub fn from_file(file: GameFile) -> Result<Self> {
        if file.actions.len() != file.agents {
            return Err(Error::Input(format!(
                "`actions` lists {} sizes for {} agents",
                file.actions.len(),
                file.agents
            )));
        }
        let mut game = TableGame::unconstrained(file.actions, file.utility)?;
        if let Some(potential) = file.potential {
            game = game.with_potential(potential)?;
        }
        let size = game.space.len();
        let n = game.agent_count();
        if let Some(tables) = file.constraint {
            check_table_shape("constraint", &tables, n, size)?;
            for (agent, table) in tables.iter().enumerate() {
                for (k, set) in table.iter().enumerate() {
                    let profile = game.space.decode(k);
                    if set.iter().any(|&x| x >= game.space.radix(agent)) {
                        return Err(Error::Input(format!(
                            "constraint of agent {agent} at state {k} names an unknown action"
                        )));
                    }
                    if !set.contains(&profile[agent]) {
                        return Err(Error::Input(format!(
                            "constraint of agent {agent} at state {k} omits the current action"
                        )));
                    }
                }
            }
            game.constraint = Some(sorted(tables));
        }
        if let Some(tables) = file.coupling {
            check_table_shape("coupling", &tables, n, size)?;
            if tables.iter().flatten().flatten().any(|&j| j >= n) {
                return Err(Error::Input("coupling table names an unknown agent".into()));
            }
            game.coupling = Some(sorted(tables));
        }
        Ok(game)
    }

    pub fn to_file(&self, name: Option<String>) -> GameFile {
        GameFile {
            name,
            agents: self.agent_count(),
            actions: self.space.radices().to_vec(),
            utility: self.utility.clone(),
            potential: self.potential.clone(),
            constraint: self.constraint.clone(),
            coupling: self.coupling.clone(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: GameFile = toml::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        TableGame::from_file(file)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TableGame::from_toml_str(&text)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self, name: Option<String>) -> String {
        toml::to_string(&self.to_file(name)).expect("game tables serialize")
    }
}

fn check_table_shape(
    what: &str,
    tables: &[Vec<Vec<usize>>],
    agents: usize,
    size: usize,
) -> Result<()> {
    if tables.len() != agents || tables.iter().any(|t| t.len() != size) {
        return Err(Error::Input(format!(
            "`{what}` must hold {agents} tables of {size} entries"
        )));
    }
    Ok(())
}

fn sorted(mut tables: Vec<Vec<Vec<usize>>>) -> Vec<Vec<Vec<usize>>> {
    for set in tables.iter_mut().flatten() {
        set.sort_unstable();
        set.dedup();
    }
    tables
}

impl Game for TableGame {
    fn agent_count(&self) -> usize {
        self.space.agent_count()
    }

    fn action_count(&self, agent: usize) -> usize {
        self.space.radix(agent)
    }

    fn utility(&self, agent: usize, profile: &[usize]) -> f64 {
        self.utility[agent][self.space.encode(profile)]
    }

    fn constraint(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        match &self.constraint {
            Some(tables) => tables[agent][self.space.encode(profile)].clone(),
            None => (0..self.space.radix(agent)).collect(),
        }
    }

    fn coupling(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        match &self.coupling {
            Some(tables) => tables[agent][self.space.encode(profile)].clone(),
            None => (0..self.agent_count()).collect(),
        }
    }

    fn potential(&self, profile: &[usize]) -> Option<f64> {
        self.potential
            .as_ref()
            .map(|table| table[self.space.encode(profile)])
    }

    fn has_potential(&self) -> bool {
        self.potential.is_some()
    }
}
