//! Update policies `π_ε`: binary log-linear learning and its zero-noise
//! best-response limit.
//!
//! Binary log-linear learning (BLLL) draws one trial action uniformly from the
//! feasible alternatives `T = C_i(a) ∖ {a_i}` and switches to it with
//! probability `σ((U_i(trial) − U_i(a)) / ε)`, `σ` being the logistic
//! function. Every sample consumes exactly two uniform variates (trial index,
//! then acceptance), even when the draw is not needed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{feasible_actions, Game, UTILITY_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    BinaryLogLinear,
    /// Uniform over utility maximizers in `C_i(a)`; ignores `epsilon`.
    BestResponse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    pub epsilon: f64,
    pub kind: PolicyKind,
    /// Draw the BLLL trial from all of `C_i(a)` instead of the alternatives only.
    pub trial_includes_current: bool,
}

impl PolicyParams {
    pub fn binary_log_linear(epsilon: f64) -> Self {
        PolicyParams {
            epsilon,
            kind: PolicyKind::BinaryLogLinear,
            trial_includes_current: false,
        }
    }

    pub fn best_response() -> Self {
        PolicyParams {
            epsilon: 0.0,
            kind: PolicyKind::BestResponse,
            trial_includes_current: false,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        PolicyParams { epsilon, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PolicyKind::BinaryLogLinear if !(self.epsilon > 0.0 && self.epsilon.is_finite()) => {
                Err(Error::Parameter(format!(
                    "binary log-linear learning needs a finite epsilon > 0, got {} \
                     (use the best-response kind for epsilon = 0)",
                    self.epsilon
                )))
            }
            PolicyKind::BestResponse if !(self.epsilon >= 0.0) => Err(Error::Parameter(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            ))),
            _ => Ok(()),
        }
    }
}

/// Law of one agent's intended action, as `(action, probability)` pairs
/// sorted by action. Only actions with positive probability are listed.
#[derive(Debug, Clone, PartialEq)]
pub struct IntendedDistribution {
    entries: Vec<(usize, f64)>,
}

impl IntendedDistribution {
    pub fn point_mass(action: usize) -> Self {
        IntendedDistribution {
            entries: vec![(action, 1.0)],
        }
    }

    /// Builds a distribution from possibly repeated, possibly zero entries.
    pub fn from_weights(weights: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<(usize, f64)> = weights.into_iter().collect();
        entries.sort_by_key(|&(action, _)| action);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (action, p) in entries {
            match merged.last_mut() {
                Some((last, q)) if *last == action => *q += p,
                _ => merged.push((action, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        IntendedDistribution { entries: merged }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(action, _)| action)
    }

    pub fn probability(&self, action: usize) -> f64 {
        self.entries
            .binary_search_by_key(&action, |&(a, _)| a)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }
}

/// A noisy-best-response update rule usable by both schedulers and by the
/// exact chain builders.
pub trait Policy: Sync {
    fn intended_distribution<G: Game + ?Sized>(
        &self,
        game: &G,
        profile: &[usize],
        agent: usize,
    ) -> Result<IntendedDistribution>;

    /// Draws one intended action, distributed as [`Policy::intended_distribution`].
    fn sample_intended<G: Game + ?Sized, R: Rng + ?Sized>(
        &self,
        game: &G,
        profile: &[usize],
        agent: usize,
        rng: &mut R,
    ) -> Result<usize>;
}

/// Numerically stable `1 / (1 + e^{-x})`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Exponent of the BLLL switch probability in the scale `η = e^{−1/ε}`.
pub fn switch_resistance(u_current: f64, u_trial: f64) -> f64 {
    u_current.max(u_trial) - u_trial
}

impl PolicyParams {
    fn trials(&self, feasible: &[usize], current: usize) -> Vec<usize> {
        if self.trial_includes_current {
            feasible.to_vec()
        } else {
            feasible.iter().copied().filter(|&x| x != current).collect()
        }
    }

    fn maximizers<G: Game + ?Sized>(
        game: &G,
        profile: &[usize],
        agent: usize,
        feasible: &[usize],
    ) -> Vec<usize> {
        let mut probe = profile.to_vec();
        let utilities: Vec<f64> = feasible
            .iter()
            .map(|&x| {
                probe[agent] = x;
                game.utility(agent, &probe)
            })
            .collect();
        let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        feasible
            .iter()
            .zip(&utilities)
            .filter(|(_, &u)| best - u <= UTILITY_TOLERANCE)
            .map(|(&x, _)| x)
            .collect()
    }
}

impl Policy for PolicyParams {
    fn intended_distribution<G: Game + ?Sized>(
        &self,
        game: &G,
        profile: &[usize],
        agent: usize,
    ) -> Result<IntendedDistribution> {
        self.validate()?;
        let feasible = feasible_actions(game, profile, agent)?;
        let current = profile[agent];
        match self.kind {
            PolicyKind::BestResponse => {
                let best = Self::maximizers(game, profile, agent, &feasible);
                let p = 1.0 / best.len() as f64;
                Ok(IntendedDistribution::from_weights(best.into_iter().map(|x| (x, p))))
            }
            PolicyKind::BinaryLogLinear => {
                let trials = self.trials(&feasible, current);
                if trials.is_empty() {
                    return Ok(IntendedDistribution::point_mass(current));
                }
                let share = 1.0 / trials.len() as f64;
                let u_current = game.utility(agent, profile);
                let mut probe = profile.to_vec();
                let mut weights = Vec::with_capacity(trials.len() + 1);
                // stay mass accumulated as Σ σ(−Δ/ε) rather than 1 − Σ σ(Δ/ε)
                let mut stay = 0.0;
                for &trial in &trials {
                    if trial == current {
                        stay += share;
                        continue;
                    }
                    probe[agent] = trial;
                    let gain = (game.utility(agent, &probe) - u_current) / self.epsilon;
                    weights.push((trial, share * logistic(gain)));
                    stay += share * logistic(-gain);
                }
                weights.push((current, stay));
                Ok(IntendedDistribution::from_weights(weights))
            }
        }
    }

    fn sample_intended<G: Game + ?Sized, R: Rng + ?Sized>(
        &self,
        game: &G,
        profile: &[usize],
        agent: usize,
        rng: &mut R,
    ) -> Result<usize> {
        self.validate()?;
        let trial_draw: f64 = rng.gen();
        let accept_draw: f64 = rng.gen();
        let feasible = feasible_actions(game, profile, agent)?;
        let current = profile[agent];
        let pick = |candidates: &[usize]| {
            let k = ((trial_draw * candidates.len() as f64) as usize).min(candidates.len() - 1);
            candidates[k]
        };
        match self.kind {
            PolicyKind::BestResponse => {
                Ok(pick(&Self::maximizers(game, profile, agent, &feasible)))
            }
            PolicyKind::BinaryLogLinear => {
                let trials = self.trials(&feasible, current);
                if trials.is_empty() {
                    return Ok(current);
                }
                let trial = pick(&trials);
                if trial == current {
                    return Ok(current);
                }
                let mut probe = profile.to_vec();
                probe[agent] = trial;
                let gain = (game.utility(agent, &probe) - game.utility(agent, profile))
                    / self.epsilon;
                Ok(if accept_draw < logistic(gain) { trial } else { current })
            }
        }
    }
}
