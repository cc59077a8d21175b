//! Exact perturbed Markov chains over enumerated joint action spaces.
//!
//! [`build_async_chain`] and [`build_sync_chain`] produce dense row-stochastic
//! matrices for the single-updater dynamics and the priority-synchronized
//! dynamics. The remaining submodules analyse them: stationary laws,
//! recurrent classes, regression-based resistances, ε sweeps for stochastic
//! stability, and a side-by-side comparison of the two chains.

mod compare;
mod movers;
mod resistance;
mod stability;
mod state;
mod stationary;

use std::collections::HashMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::policy::{IntendedDistribution, Policy};
use crate::scheduler::{Mode, SyncParams};

pub use compare::{
    compare_chains, CompareOptions, EdgeComparison, FeasibilityVerdict, RecurrenceVerdict,
    StabilityVerdict, ComparisonReport,
};
pub use movers::{mover_set_distribution, mover_set_probability, MAX_CANDIDATES};
pub use resistance::{
    estimate_resistance, fit_exponent, verify_resistance_calculus, CalculusReport,
    ResistanceEstimate, DEFAULT_CALCULUS_EPSILONS, DEFAULT_FIT_RESIDUAL_LIMIT,
    DEFAULT_RESISTANCE_EPSILONS,
};
pub use stability::{
    stochastically_stable_states, StabilityReport, DEFAULT_STABILITY_THRESHOLD,
    DEFAULT_SWEEP,
};
pub use state::StateIndex;
pub use stationary::{
    check_ergodic, recurrent_classes, stationary_distribution, SolveMethod,
    StationaryDistribution,
};

/// Tolerance on row sums of every built matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainLimits {
    pub max_states: usize,
    /// Cap on the number of intended profiles enumerated from one state.
    pub max_intended_profiles: usize,
}

impl Default for ChainLimits {
    fn default() -> Self {
        ChainLimits {
            max_states: 20_000,
            max_intended_profiles: 1_000_000,
        }
    }
}

/// Dense row-stochastic transition matrix with the parameters it was built at.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    matrix: DMatrix<f64>,
    pub mode: Mode,
    pub epsilon: Option<f64>,
    pub kappa: Option<f64>,
}

impl TransitionMatrix {
    /// Wraps an explicit matrix; rows must sum to one.
    pub fn from_rows(rows: Vec<Vec<f64>>, mode: Mode) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::Input("transition matrix must be square".into()));
        }
        let matrix = DMatrix::from_fn(size, size, |r, c| rows[r][c]);
        let built = TransitionMatrix {
            matrix,
            mode,
            epsilon: None,
            kappa: None,
        };
        built.check_stochastic(1e-9)?;
        Ok(built)
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[(from, to)]
    }

    pub fn row(&self, from: usize) -> Vec<f64> {
        self.matrix.row(from).iter().copied().collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Largest `|Σ_j P(i, j) − 1|` over rows.
    pub fn max_row_error(&self) -> f64 {
        (0..self.len())
            .map(|r| (self.matrix.row(r).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn check_stochastic(&self, tolerance: f64) -> Result<()> {
        if self.matrix.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Input("transition matrix has a negative entry".into()));
        }
        let err = self.max_row_error();
        if err > tolerance {
            return Err(Error::Input(format!(
                "transition matrix rows deviate from 1 by {err:e}"
            )));
        }
        Ok(())
    }

    /// Off-diagonal transitions with positive probability.
    pub fn off_diagonal_support(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut edges = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if from != to && self.matrix[(from, to)] > 0.0 {
                    edges.push((from, to));
                }
            }
        }
        edges
    }

    /// Writes `from,to,prob` triplets for every positive entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "from,to,prob")?;
        for from in 0..self.len() {
            for to in 0..self.len() {
                let p = self.matrix[(from, to)];
                if p > 0.0 {
                    writeln!(out, "{from},{to},{p}")?;
                }
            }
        }
        Ok(())
    }
}

fn assemble(rows: Vec<Vec<f64>>, mode: Mode, epsilon: Option<f64>, kappa: Option<f64>) -> TransitionMatrix {
    let size = rows.len();
    let matrix = DMatrix::from_fn(size, size, |r, c| rows[r][c]);
    TransitionMatrix {
        matrix,
        mode,
        epsilon,
        kappa,
    }
}

/// Sets each diagonal entry to one minus the row's off-diagonal mass.
fn complete_diagonal(row: &mut [f64], state: usize) {
    row[state] = 0.0;
    let off: f64 = row.iter().sum();
    row[state] = (1.0 - off).max(0.0);
}

/// Exact chain of the asynchronous dynamics: a uniformly chosen agent draws
/// from its intended distribution.
pub fn build_async_chain<G, P>(game: &G, policy: &P, limits: &ChainLimits) -> Result<TransitionMatrix>
where
    G: Game + ?Sized,
    P: Policy + NoiseLevel,
{
    let space = StateIndex::for_game(game, limits.max_states)?;
    let n = game.agent_count() as f64;
    let rows: Vec<Vec<f64>> = (0..space.len())
        .into_par_iter()
        .map(|state| -> Result<Vec<f64>> {
            let profile = space.decode(state);
            let mut row = vec![0.0; space.len()];
            for agent in 0..game.agent_count() {
                let dist = policy.intended_distribution(game, &profile, agent)?;
                for &(action, p) in dist.entries() {
                    if action != profile[agent] {
                        row[space.encode(&profile.with(agent, action))] += p / n;
                    }
                }
            }
            complete_diagonal(&mut row, state);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(assemble(rows, Mode::Async, policy.noise_level(), None))
}

/// Exact chain of the synchronous dynamics.
///
/// From each state `a`, every intended profile `ā` in the product of the
/// per-agent supports contributes `Pr(ā) · Pr(S_a = K | ā)` to the entry of
/// the profile that adopts `ā` on `K`, for every mover set `K` of the
/// candidates `M(ā) = {i : ā_i ≠ a_i}`.
pub fn build_sync_chain<G, P>(
    game: &G,
    policy: &P,
    sync: &SyncParams,
    limits: &ChainLimits,
) -> Result<TransitionMatrix>
where
    G: Game + ?Sized,
    P: Policy + NoiseLevel,
{
    sync.validate()?;
    let space = StateIndex::for_game(game, limits.max_states)?;
    let n = game.agent_count();
    let rows: Vec<Vec<f64>> = (0..space.len())
        .into_par_iter()
        .map(|state| -> Result<Vec<f64>> {
            let profile = space.decode(state);
            let dists: Vec<IntendedDistribution> = (0..n)
                .map(|agent| policy.intended_distribution(game, &profile, agent))
                .collect::<Result<_>>()?;
            let required = dists
                .iter()
                .fold(1u128, |acc, d| acc.saturating_mul(d.entries().len() as u128));
            if required > limits.max_intended_profiles as u128 {
                return Err(Error::Resource {
                    what: format!("intended profiles from state {state} {profile}"),
                    required,
                    cap: limits.max_intended_profiles as u128,
                });
            }
            let coupling = sync.coupling_sets(game, &profile);

            let mut row = vec![0.0; space.len()];
            let mut mover_laws: HashMap<Vec<usize>, Vec<(Vec<usize>, f64)>> = HashMap::new();
            let mut digits = vec![0usize; n];
            let mut next = profile.clone();
            loop {
                let mut weight = 1.0;
                let mut candidates = Vec::new();
                for agent in 0..n {
                    let (action, p) = dists[agent].entries()[digits[agent]];
                    weight *= p;
                    if action != profile[agent] {
                        candidates.push(agent);
                    }
                }
                if !candidates.is_empty() && weight > 0.0 {
                    if !mover_laws.contains_key(&candidates) {
                        let law = mover_set_distribution(&coupling, &candidates, sync.kappa)?;
                        mover_laws.insert(candidates.clone(), law);
                    }
                    for (movers, q) in &mover_laws[&candidates] {
                        if movers.is_empty() {
                            continue;
                        }
                        for &agent in movers {
                            next.set(agent, dists[agent].entries()[digits[agent]].0);
                        }
                        row[space.encode(&next)] += weight * q;
                        for &agent in movers {
                            next.set(agent, profile[agent]);
                        }
                    }
                }
                if !odometer(&mut digits, |agent| dists[agent].entries().len()) {
                    break;
                }
            }
            complete_diagonal(&mut row, state);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(assemble(rows, Mode::Sync, policy.noise_level(), Some(sync.kappa)))
}

/// Builds the chain for `mode`.
pub fn build_chain<G, P>(
    game: &G,
    mode: Mode,
    policy: &P,
    sync: &SyncParams,
    limits: &ChainLimits,
) -> Result<TransitionMatrix>
where
    G: Game + ?Sized,
    P: Policy + NoiseLevel,
{
    match mode {
        Mode::Async => build_async_chain(game, policy, limits),
        Mode::Sync => build_sync_chain(game, policy, sync, limits),
    }
}

/// Noise parameter a policy runs at, recorded in chain metadata.
pub trait NoiseLevel {
    fn noise_level(&self) -> Option<f64>;
}

impl NoiseLevel for crate::policy::PolicyParams {
    fn noise_level(&self) -> Option<f64> {
        Some(self.epsilon)
    }
}

fn odometer(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for (slot, digit) in digits.iter_mut().enumerate() {
        *digit += 1;
        if *digit < radix(slot) {
            return true;
        }
        *digit = 0;
    }
    false
}
