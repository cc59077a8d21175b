use crate::error::{Error, Result};
use crate::game::{ActionProfile, Game};

/// Mixed-radix bijection between action profiles and `0..|A|`, agent 0 least
/// significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateIndex {
    radices: Vec<usize>,
    len: usize,
}

impl StateIndex {
    /// Fails with a resource error when `∏|A_i|` exceeds `cap`.
    pub fn new(radices: Vec<usize>, cap: usize) -> Result<Self> {
        if radices.is_empty() {
            return Err(Error::Input("a game needs at least one agent".into()));
        }
        if let Some(agent) = radices.iter().position(|&r| r == 0) {
            return Err(Error::Input(format!("agent {agent} has an empty action set")));
        }
        let required = radices
            .iter()
            .fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
        if required > cap as u128 {
            return Err(Error::Resource {
                what: "joint action space".into(),
                required,
                cap: cap as u128,
            });
        }
        Ok(StateIndex {
            len: required as usize,
            radices,
        })
    }

    pub fn for_game<G: Game + ?Sized>(game: &G, cap: usize) -> Result<Self> {
        StateIndex::new(
            (0..game.agent_count()).map(|i| game.action_count(i)).collect(),
            cap,
        )
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn agent_count(&self) -> usize {
        self.radices.len()
    }

    pub fn radix(&self, agent: usize) -> usize {
        self.radices[agent]
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn encode(&self, profile: &[usize]) -> usize {
        debug_assert_eq!(profile.len(), self.radices.len());
        profile
            .iter()
            .zip(&self.radices)
            .rev()
            .fold(0, |acc, (&action, &radix)| acc * radix + action)
    }

    pub fn decode(&self, mut state: usize) -> ActionProfile {
        debug_assert!(state < self.len);
        let actions = self
            .radices
            .iter()
            .map(|&radix| {
                let action = state % radix;
                state /= radix;
                action
            })
            .collect();
        ActionProfile::new(actions)
    }
}
