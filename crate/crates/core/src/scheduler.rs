//! Learning dynamics: the asynchronous single-updater loop and the
//! priority-based synchronous round.
//!
//! A synchronous round draws, for each agent `i` in order `0..n`, the tuple
//! `(κ_i, trial index, acceptance variate, β_i)`. `β_i` is drawn even when the
//! agent ends up with priority zero so that streams stay aligned across runs.

use std::fmt;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{check_profile, ActionProfile, Game};
use crate::policy::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Async,
    Sync,
}

impl Mode {
    pub fn tag(self) -> &'static str {
        match self {
            Mode::Async => "async",
            Mode::Sync => "sync",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "async" => Ok(Mode::Async),
            "sync" => Ok(Mode::Sync),
            other => Err(Error::Input(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncParams {
    /// Inertia `κ ∈ (0, 1)`: probability that a would-be mover abstains.
    pub kappa: f64,
    /// Mutation used to test the verification suite: movers are selected as if
    /// every coupling set were `{i}`. Never valid for real runs.
    pub ignore_coupling: bool,
}

impl SyncParams {
    pub fn new(kappa: f64) -> Self {
        SyncParams {
            kappa,
            ignore_coupling: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa > 0.0 && self.kappa < 1.0 {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "inertia must lie in (0, 1), got {}",
                self.kappa
            )))
        }
    }

    /// Coupling sets the move rule uses at `profile`.
    pub fn coupling_sets<G: Game + ?Sized>(&self, game: &G, profile: &[usize]) -> Vec<Vec<usize>> {
        (0..game.agent_count())
            .map(|i| {
                if self.ignore_coupling {
                    vec![i]
                } else {
                    game.coupling(i, profile)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub previous: ActionProfile,
    pub intended: ActionProfile,
    pub inertia_draws: Vec<f64>,
    /// `β_i`; zero marks an agent that is not a candidate this round.
    pub priorities: Vec<f64>,
    /// `S_a`, ascending.
    pub movers: Vec<usize>,
    pub next: ActionProfile,
}

/// One round of the asynchronous loop: a uniformly chosen agent updates.
/// Returns the chosen agent and the next profile.
pub fn async_step_with_agent<G, P, R>(
    game: &G,
    profile: &ActionProfile,
    policy: &P,
    rng: &mut R,
) -> Result<(usize, ActionProfile)>
where
    G: Game + ?Sized,
    P: Policy,
    R: Rng + ?Sized,
{
    check_profile(game, profile)?;
    let agent = rng.gen_range(0..game.agent_count());
    let action = policy.sample_intended(game, profile, agent, rng)?;
    Ok((agent, profile.with(agent, action)))
}

pub fn async_step<G, P, R>(
    game: &G,
    profile: &ActionProfile,
    policy: &P,
    rng: &mut R,
) -> Result<ActionProfile>
where
    G: Game + ?Sized,
    P: Policy,
    R: Rng + ?Sized,
{
    async_step_with_agent(game, profile, policy, rng).map(|(_, next)| next)
}

/// One synchronous round with inertia and random priorities.
pub fn sync_step<G, P, R>(
    game: &G,
    profile: &ActionProfile,
    policy: &P,
    sync: &SyncParams,
    rng: &mut R,
) -> Result<StepOutcome>
where
    G: Game + ?Sized,
    P: Policy,
    R: Rng + ?Sized,
{
    sync.validate()?;
    check_profile(game, profile)?;
    let n = game.agent_count();
    let mut intended = profile.clone();
    let mut inertia_draws = Vec::with_capacity(n);
    let mut priorities = Vec::with_capacity(n);
    for agent in 0..n {
        let inertia: f64 = rng.sample(Open01);
        let action = policy.sample_intended(game, profile, agent, rng)?;
        let beta: f64 = rng.sample(Open01);
        intended.set(agent, action);
        inertia_draws.push(inertia);
        let candidate = action != profile[agent] && inertia > sync.kappa;
        priorities.push(if candidate { beta } else { 0.0 });
    }

    let coupling = sync.coupling_sets(game, profile);
    let mut next = profile.clone();
    let mut movers = Vec::new();
    for agent in 0..n {
        let beta = priorities[agent];
        if beta == 0.0 {
            continue;
        }
        // ties block both agents
        let outranked = coupling[agent]
            .iter()
            .any(|&j| j != agent && priorities[j] >= beta);
        if !outranked {
            next.set(agent, intended[agent]);
            movers.push(agent);
        }
    }
    Ok(StepOutcome {
        previous: profile.clone(),
        intended,
        inertia_draws,
        priorities,
        movers,
        next,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub mode: Mode,
    pub seed: u64,
    /// Profiles at rounds `0..=T`.
    pub profiles: Vec<ActionProfile>,
    /// `φ` per round; NaN when the game has no potential.
    pub objective: Vec<f64>,
    /// Number of agents that changed action in each round (0 for round 0).
    pub mover_counts: Vec<usize>,
}

impl TrajectoryRecord {
    pub fn rounds(&self) -> usize {
        self.profiles.len().saturating_sub(1)
    }

    /// First round whose objective reaches `threshold`.
    pub fn first_hitting_round(&self, threshold: f64) -> Option<usize> {
        self.objective.iter().position(|&phi| phi >= threshold)
    }
}

/// Runs `horizon` rounds of the chosen dynamics from `start` using a ChaCha8
/// stream seeded with `seed`.
pub fn run_trajectory<G, P>(
    game: &G,
    start: &ActionProfile,
    mode: Mode,
    policy: &P,
    sync: &SyncParams,
    horizon: usize,
    seed: u64,
) -> Result<TrajectoryRecord>
where
    G: Game + ?Sized,
    P: Policy,
{
    check_profile(game, start)?;
    if mode == Mode::Sync {
        sync.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective_of = |p: &[usize]| game.potential(p).unwrap_or(f64::NAN);

    let mut profiles = Vec::with_capacity(horizon + 1);
    let mut objective = Vec::with_capacity(horizon + 1);
    let mut mover_counts = Vec::with_capacity(horizon + 1);
    let mut current = start.clone();
    objective.push(objective_of(&current));
    profiles.push(current.clone());
    mover_counts.push(0);
    for _ in 0..horizon {
        let (next, moved) = match mode {
            Mode::Async => {
                let next = async_step(game, &current, policy, &mut rng)?;
                let moved = usize::from(next != current);
                (next, moved)
            }
            Mode::Sync => {
                let outcome = sync_step(game, &current, policy, sync, &mut rng)?;
                let moved = outcome.movers.len();
                (outcome.next, moved)
            }
        };
        current = next;
        objective.push(objective_of(&current));
        profiles.push(current.clone());
        mover_counts.push(moved);
    }
    Ok(TrajectoryRecord {
        mode,
        seed,
        profiles,
        objective,
        mover_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CouplingOverride, TableGame, WithCoupling};
    use crate::policy::PolicyParams;

    fn flat_game(n: usize, k: usize) -> TableGame {
        let size = k.pow(n as u32);
        TableGame::unconstrained(vec![k; n], vec![vec![0.0; size]; n]).unwrap()
    }

    #[test]
    fn full_inertia_freezes_everyone() {
        let game = flat_game(3, 2);
        let policy = PolicyParams::binary_log_linear(1.0);
        // κ just below 1: every κ_i ≤ κ with overwhelming probability
        let sync = SyncParams::new(1.0 - 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let start = ActionProfile::new(vec![0, 1, 0]);
        for _ in 0..1000 {
            let out = sync_step(&game, &start, &policy, &sync, &mut rng).unwrap();
            assert!(out.movers.is_empty());
            assert_eq!(out.next, start);
            assert!(out.priorities.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn lone_candidate_always_moves() {
        // only agent 1 has an alternative; the others are frozen
        let game = flat_game(3, 2)
            .with_constraint(0, |p| vec![p[0]])
            .with_constraint(2, |p| vec![p[2]]);
        let policy = PolicyParams::binary_log_linear(1.0);
        let sync = SyncParams::new(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let start = ActionProfile::new(vec![0, 0, 0]);
        let mut moved = 0;
        for _ in 0..2000 {
            let out = sync_step(&game, &start, &policy, &sync, &mut rng).unwrap();
            let candidate = out.priorities[1] > 0.0;
            assert_eq!(out.movers == vec![1], candidate);
            moved += usize::from(candidate);
        }
        assert!(moved > 0);
    }

    #[test]
    fn outcome_invariants_hold() {
        let game = flat_game(4, 3);
        let policy = PolicyParams::binary_log_linear(0.5);
        let sync = SyncParams::new(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut profile = ActionProfile::new(vec![0, 1, 2, 0]);
        for _ in 0..2000 {
            let out = sync_step(&game, &profile, &policy, &sync, &mut rng).unwrap();
            let expected: Vec<usize> = (0..4)
                .filter(|&i| out.next[i] == out.intended[i] && out.intended[i] != out.previous[i])
                .collect();
            assert_eq!(out.movers, expected);
            for i in 0..4 {
                if out.intended[i] == out.previous[i] || out.inertia_draws[i] <= sync.kappa {
                    assert_eq!(out.priorities[i], 0.0);
                } else {
                    assert!(out.priorities[i] > 0.0 && out.priorities[i] < 1.0);
                }
            }
            // maximal coupling: at most one mover
            assert!(out.movers.len() <= 1);
            profile = out.next;
        }
    }

    #[test]
    fn ignoring_coupling_lets_every_candidate_move() {
        let game = flat_game(3, 2);
        let policy = PolicyParams::binary_log_linear(1.0);
        let sync = SyncParams {
            kappa: 0.1,
            ignore_coupling: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let start = ActionProfile::new(vec![0, 0, 0]);
        let mut multi = 0;
        for _ in 0..2000 {
            let out = sync_step(&game, &start, &policy, &sync, &mut rng).unwrap();
            let candidates = out.priorities.iter().filter(|&&b| b > 0.0).count();
            assert_eq!(out.movers.len(), candidates);
            multi += usize::from(candidates > 1);
        }
        assert!(multi > 0);
    }

    #[test]
    fn isolated_coupling_matches_ignore_flag() {
        let game = flat_game(3, 2);
        let isolated = WithCoupling::new(&game, CouplingOverride::Isolated);
        let policy = PolicyParams::binary_log_linear(0.7);
        let start = ActionProfile::new(vec![1, 0, 1]);
        let mut a = ChaCha8Rng::seed_from_u64(8);
        let mut b = ChaCha8Rng::seed_from_u64(8);
        let broken = SyncParams {
            kappa: 0.2,
            ignore_coupling: true,
        };
        for _ in 0..200 {
            let x = sync_step(&game, &start, &policy, &broken, &mut a).unwrap();
            let y = sync_step(&isolated, &start, &policy, &SyncParams::new(0.2), &mut b).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn single_agent_async_step_is_the_policy() {
        let game = TableGame::unconstrained(vec![3], vec![vec![0.0, 1.0, 2.0]]).unwrap();
        let policy = PolicyParams::binary_log_linear(0.5);
        let start = ActionProfile::new(vec![1]);
        let mut a = ChaCha8Rng::seed_from_u64(4);
        let mut b = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let (agent, next) = async_step_with_agent(&game, &start, &policy, &mut a).unwrap();
            assert_eq!(agent, 0);
            let _ = b.gen_range(0..1usize);
            let direct = policy.sample_intended(&game, &start, 0, &mut b).unwrap();
            assert_eq!(next[0], direct);
        }
    }

    #[test]
    fn trajectory_bookkeeping() {
        let phi = vec![0.0, 1.0, 1.0, 3.0];
        let game = TableGame::identical_interest(vec![2, 2], phi).unwrap();
        let policy = PolicyParams::binary_log_linear(0.5);
        let sync = SyncParams::new(0.3);
        let start = ActionProfile::new(vec![0, 0]);

        let empty = run_trajectory(&game, &start, Mode::Sync, &policy, &sync, 0, 1).unwrap();
        assert_eq!(empty.profiles, vec![start.clone()]);
        assert_eq!(empty.objective, vec![0.0]);
        assert_eq!(empty.rounds(), 0);

        let rec = run_trajectory(&game, &start, Mode::Async, &policy, &sync, 500, 7).unwrap();
        assert_eq!(rec.profiles.len(), 501);
        assert!(rec.mover_counts.iter().all(|&m| m <= 1));
        for (p, &phi) in rec.profiles.iter().zip(&rec.objective) {
            assert_eq!(game.potential(p), Some(phi));
        }
        let again = run_trajectory(&game, &start, Mode::Async, &policy, &sync, 500, 7).unwrap();
        assert_eq!(rec, again);
    }

    #[test]
    fn rejects_bad_inertia() {
        let game = flat_game(2, 2);
        let policy = PolicyParams::binary_log_linear(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let start = ActionProfile::new(vec![0, 0]);
        for kappa in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(sync_step(&game, &start, &policy, &SyncParams::new(kappa), &mut rng).is_err());
        }
    }
}
