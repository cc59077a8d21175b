use super::{build_chain, stationary_distribution, ChainLimits, StationaryDistribution};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::policy::PolicyParams;
use crate::scheduler::{Mode, SyncParams};

/// Mass a state must keep at the smallest noise level to count as stable.
pub const DEFAULT_STABILITY_THRESHOLD: f64 = 1e-3;

pub const DEFAULT_SWEEP: [f64; 5] = [0.5, 0.2, 0.1, 0.05, 0.02];

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub mode: Mode,
    pub epsilons: Vec<f64>,
    /// Stationary law at each noise level, in sweep order.
    pub distributions: Vec<StationaryDistribution>,
    pub threshold: f64,
    /// States with mass ≥ threshold at the smallest noise level, ascending.
    pub stable: Vec<usize>,
    /// States whose mass neither rises nor falls monotonically along the sweep.
    pub non_monotone: Vec<usize>,
}

impl StabilityReport {
    pub fn mass(&self, state: usize) -> Vec<f64> {
        self.distributions
            .iter()
            .map(|d| d.probabilities[state])
            .collect()
    }
}

fn is_monotone(values: &[f64]) -> bool {
    const SLACK: f64 = 1e-12;
    let rising = values.windows(2).all(|w| w[1] >= w[0] - SLACK);
    let falling = values.windows(2).all(|w| w[1] <= w[0] + SLACK);
    rising || falling
}

/// Decides stochastic stability by solving the exact chain at each noise
/// level of a strictly decreasing sweep.
pub fn stochastically_stable_states<G: Game + ?Sized>(
    game: &G,
    mode: Mode,
    policy: &PolicyParams,
    epsilons: &[f64],
    sync: &SyncParams,
    threshold: f64,
    limits: &ChainLimits,
) -> Result<StabilityReport> {
    if epsilons.is_empty() {
        return Err(Error::Parameter("noise sweep is empty".into()));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) || !(epsilons[epsilons.len() - 1] > 0.0) {
        return Err(Error::Parameter(format!(
            "noise sweep must be positive and strictly decreasing, got {epsilons:?}"
        )));
    }
    let distributions = epsilons
        .iter()
        .map(|&epsilon| {
            let chain = build_chain(game, mode, &policy.with_epsilon(epsilon), sync, limits)?;
            stationary_distribution(&chain)
        })
        .collect::<Result<Vec<_>>>()?;
    let last = &distributions[distributions.len() - 1].probabilities;
    let stable = (0..last.len()).filter(|&s| last[s] >= threshold).collect();
    let non_monotone = (0..last.len())
        .filter(|&s| {
            let mass: Vec<f64> = distributions.iter().map(|d| d.probabilities[s]).collect();
            !is_monotone(&mass)
        })
        .collect();
    Ok(StabilityReport {
        mode,
        epsilons: epsilons.to_vec(),
        distributions,
        threshold,
        stable,
        non_monotone,
    })
}
