//! Constrained games with coupling functions.
//!
//! A [`Game`] is a set of pure oracles over dense action indices: utilities
//! `U_i(a)`, feasible-action sets `C_i(a)`, coupling sets `I_i^c(a)` and an
//! optional potential `φ(a)`. The free functions in this module are
//! brute-force validators intended for desk-scale games.

mod table;

use std::fmt;
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::StateIndex;
use crate::error::{Error, Result};

pub use table::TableGame;

/// Absolute tolerance used when comparing oracle values for equality.
pub const UTILITY_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of joint deviations [`is_uncoupled`] enumerates.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// One joint action: entry `i` is an index into agent `i`'s action set.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionProfile(Vec<usize>);

impl ActionProfile {
    pub fn new(actions: Vec<usize>) -> Self {
        ActionProfile(actions)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Copy of `self` with agent `agent` playing `action`.
    pub fn with(&self, agent: usize, action: usize) -> ActionProfile {
        let mut next = self.0.clone();
        next[agent] = action;
        ActionProfile(next)
    }

    pub fn set(&mut self, agent: usize, action: usize) {
        self.0[agent] = action;
    }
}

impl Deref for ActionProfile {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for ActionProfile {
    fn from(actions: Vec<usize>) -> Self {
        ActionProfile(actions)
    }
}

impl fmt::Debug for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, action) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{action}")?;
        }
        f.write_str(")")
    }
}

/// A finite constrained game with coupling functions.
///
/// Every oracle must be a pure function of its arguments. Implementations are
/// expected to uphold `a_i ∈ constraint(i, a)`, `i ∈ coupling(i, a)` and
/// symmetry of the coupling relation; [`validate_coupling`] checks the latter
/// two and whether the coupling sets are sound.
pub trait Game: Sync {
    fn agent_count(&self) -> usize;

    /// Size of agent `agent`'s action set; actions are `0..action_count`.
    fn action_count(&self, agent: usize) -> usize;

    fn utility(&self, agent: usize, profile: &[usize]) -> f64;

    /// Feasible next actions `C_i(a)`, sorted ascending.
    fn constraint(&self, agent: usize, profile: &[usize]) -> Vec<usize>;

    /// Coupled agents `I_i^c(a)`, sorted ascending.
    fn coupling(&self, agent: usize, profile: &[usize]) -> Vec<usize>;

    fn potential(&self, _profile: &[usize]) -> Option<f64> {
        None
    }

    fn has_potential(&self) -> bool {
        false
    }
}

impl<G: Game + ?Sized> Game for &G {
    fn agent_count(&self) -> usize {
        (**self).agent_count()
    }
    fn action_count(&self, agent: usize) -> usize {
        (**self).action_count(agent)
    }
    fn utility(&self, agent: usize, profile: &[usize]) -> f64 {
        (**self).utility(agent, profile)
    }
    fn constraint(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        (**self).constraint(agent, profile)
    }
    fn coupling(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        (**self).coupling(agent, profile)
    }
    fn potential(&self, profile: &[usize]) -> Option<f64> {
        (**self).potential(profile)
    }
    fn has_potential(&self) -> bool {
        (**self).has_potential()
    }
}

/// Replaces a game's coupling oracle while keeping everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingOverride {
    /// `I_i^c(a) = I` for every agent and profile.
    Maximal,
    /// `I_i^c(a) = {i}`.
    Isolated,
}

#[derive(Debug, Clone)]
pub struct WithCoupling<G> {
    pub game: G,
    pub coupling: CouplingOverride,
}

impl<G: Game> WithCoupling<G> {
    pub fn new(game: G, coupling: CouplingOverride) -> Self {
        WithCoupling { game, coupling }
    }
}

impl<G: Game> Game for WithCoupling<G> {
    fn agent_count(&self) -> usize {
        self.game.agent_count()
    }
    fn action_count(&self, agent: usize) -> usize {
        self.game.action_count(agent)
    }
    fn utility(&self, agent: usize, profile: &[usize]) -> f64 {
        self.game.utility(agent, profile)
    }
    fn constraint(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        self.game.constraint(agent, profile)
    }
    fn coupling(&self, agent: usize, _profile: &[usize]) -> Vec<usize> {
        match self.coupling {
            CouplingOverride::Maximal => (0..self.game.agent_count()).collect(),
            CouplingOverride::Isolated => vec![agent],
        }
    }
    fn potential(&self, profile: &[usize]) -> Option<f64> {
        self.game.potential(profile)
    }
    fn has_potential(&self) -> bool {
        self.game.has_potential()
    }
}

pub fn check_agent<G: Game + ?Sized>(game: &G, agent: usize) -> Result<()> {
    if agent >= game.agent_count() {
        return Err(Error::Input(format!(
            "agent {agent} out of range for a game with {} agents",
            game.agent_count()
        )));
    }
    Ok(())
}

pub fn check_profile<G: Game + ?Sized>(game: &G, profile: &[usize]) -> Result<()> {
    let n = game.agent_count();
    if profile.len() != n {
        return Err(Error::Input(format!(
            "profile has {} entries, game has {n} agents",
            profile.len()
        )));
    }
    for (agent, &action) in profile.iter().enumerate() {
        let size = game.action_count(agent);
        if action >= size {
            return Err(Error::Input(format!(
                "action {action} of agent {agent} outside 0..{size}"
            )));
        }
    }
    Ok(())
}

/// `C_i(a)`, after validating the inputs and the oracle's own invariants.
pub fn feasible_actions<G: Game + ?Sized>(
    game: &G,
    profile: &[usize],
    agent: usize,
) -> Result<Vec<usize>> {
    check_profile(game, profile)?;
    check_agent(game, agent)?;
    let actions = game.constraint(agent, profile);
    debug_assert_eq!(
        actions,
        game.constraint(agent, profile),
        "constraint oracle is not deterministic"
    );
    if !actions.contains(&profile[agent]) {
        return Err(Error::Input(format!(
            "constraint oracle for agent {agent} at {profile:?} omits the current action"
        )));
    }
    Ok(actions)
}

/// `K_{a,a'}`: agents whose actions differ between two profiles.
pub fn diff_set(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "profiles have different lengths ({} and {})",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .map(|(agent, _)| agent)
        .collect())
}

/// Brute-force test of whether `agent` is uncoupled from the agents in
/// `others` at `profile`: neither `U_i` nor `C_i`, evaluated at any feasible
/// `a_i'`, changes under any feasible joint deviation of `others`.
pub fn is_uncoupled<G: Game + ?Sized>(
    game: &G,
    profile: &[usize],
    agent: usize,
    others: &[usize],
    cap: u128,
) -> Result<bool> {
    check_profile(game, profile)?;
    check_agent(game, agent)?;
    for &j in others {
        check_agent(game, j)?;
    }
    if others.contains(&agent) {
        return Err(Error::Input(format!(
            "agent {agent} cannot be tested against a set containing itself"
        )));
    }
    let mut others = others.to_vec();
    others.sort_unstable();
    others.dedup();

    let own = game.constraint(agent, profile);
    let joint: Vec<Vec<usize>> = others.iter().map(|&j| game.constraint(j, profile)).collect();
    let required = joint
        .iter()
        .fold(own.len() as u128, |acc, set| acc.saturating_mul(set.len() as u128));
    if required > cap {
        return Err(Error::Resource {
            what: format!("uncoupledness check of agent {agent} against {others:?}"),
            required,
            cap,
        });
    }

    let mut base = profile.to_vec();
    let mut moved = profile.to_vec();
    for &own_action in &own {
        base[agent] = own_action;
        moved[agent] = own_action;
        let base_utility = game.utility(agent, &base);
        let base_constraint = game.constraint(agent, &base);
        let mut digits = vec![0usize; others.len()];
        loop {
            for (slot, &j) in others.iter().enumerate() {
                moved[j] = joint[slot][digits[slot]];
            }
            if (game.utility(agent, &moved) - base_utility).abs() > UTILITY_TOLERANCE
                || game.constraint(agent, &moved) != base_constraint
            {
                return Ok(false);
            }
            if !advance(&mut digits, |slot| joint[slot].len()) {
                break;
            }
        }
    }
    Ok(true)
}

/// Odometer increment; returns false after the last combination.
fn advance(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for (slot, digit) in digits.iter_mut().enumerate() {
        *digit += 1;
        if *digit < radix(slot) {
            return true;
        }
        *digit = 0;
    }
    false
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingViolation {
    /// `i ∉ I_i^c(a)`.
    MissingSelf { profile: ActionProfile, agent: usize },
    /// `j ∈ I_i^c(a)` but `i ∉ I_j^c(a)`.
    Asymmetric {
        profile: ActionProfile,
        agent: usize,
        other: usize,
    },
    /// `i` is not uncoupled from `I ∖ I_i^c(a)`.
    NotUncoupled {
        profile: ActionProfile,
        agent: usize,
        outside: Vec<usize>,
    },
}

#[derive(Debug, Clone, Default)]
pub struct CouplingReport {
    pub profiles_checked: usize,
    pub violations: Vec<CouplingViolation>,
}

impl CouplingReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks reflexivity, symmetry and soundness of the coupling oracle on the
/// given profiles. No claim is made about profiles outside the set.
pub fn validate_coupling<G: Game + ?Sized>(
    game: &G,
    profiles: &[ActionProfile],
    cap: u128,
) -> Result<CouplingReport> {
    if profiles.is_empty() {
        return Err(Error::Input("validate_coupling needs at least one profile".into()));
    }
    let n = game.agent_count();
    let mut report = CouplingReport::default();
    for profile in profiles {
        check_profile(game, profile)?;
        let sets: Vec<Vec<usize>> = (0..n).map(|i| game.coupling(i, profile)).collect();
        for i in 0..n {
            if !sets[i].contains(&i) {
                report.violations.push(CouplingViolation::MissingSelf {
                    profile: profile.clone(),
                    agent: i,
                });
            }
            for &j in &sets[i] {
                if j != i && !sets[j].contains(&i) {
                    report.violations.push(CouplingViolation::Asymmetric {
                        profile: profile.clone(),
                        agent: i,
                        other: j,
                    });
                }
            }
            let outside: Vec<usize> = (0..n).filter(|&j| j != i && !sets[i].contains(&j)).collect();
            if !outside.is_empty() && !is_uncoupled(game, profile, i, &outside, cap)? {
                report.violations.push(CouplingViolation::NotUncoupled {
                    profile: profile.clone(),
                    agent: i,
                    outside,
                });
            }
        }
        report.profiles_checked += 1;
    }
    Ok(report)
}

/// Every profile of the game's action space, in state-index order.
pub fn all_profiles<G: Game + ?Sized>(game: &G) -> Result<Vec<ActionProfile>> {
    let space = StateIndex::for_game(game, usize::MAX)?;
    Ok((0..space.len()).map(|k| space.decode(k)).collect())
}

#[derive(Debug, Clone)]
pub struct PotentialCheckOptions {
    /// Exhaustive when `|A|` is at most this; sampled otherwise.
    pub exhaustive_cap: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for PotentialCheckOptions {
    fn default() -> Self {
        PotentialCheckOptions {
            exhaustive_cap: 100_000,
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialViolation {
    pub profile: ActionProfile,
    pub agent: usize,
    pub action: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct PotentialReport {
    pub exhaustive: bool,
    pub triples_checked: usize,
    pub max_deviation: f64,
    /// The triple attaining `max_deviation` when it exceeds the tolerance.
    pub worst: Option<PotentialViolation>,
}

impl PotentialReport {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }
}

/// Measures `|ΔU_i − Δφ|` over unilateral feasible deviations.
pub fn check_potential<G: Game + ?Sized>(
    game: &G,
    options: &PotentialCheckOptions,
) -> Result<PotentialReport> {
    if !game.has_potential() {
        return Err(Error::Configuration("game has no potential oracle".into()));
    }
    let n = game.agent_count();
    let space = StateIndex::for_game(game, usize::MAX)?;

    let mut max_deviation = 0.0f64;
    let mut worst = None;
    let mut triples = 0usize;
    let mut visit = |profile: &ActionProfile, agent: usize, action: usize| {
        let moved = profile.with(agent, action);
        let du = game.utility(agent, &moved) - game.utility(agent, profile);
        let dphi = potential_of(game, &moved) - potential_of(game, profile);
        let deviation = (du - dphi).abs();
        triples += 1;
        if deviation > max_deviation || deviation.is_nan() {
            max_deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
            worst = Some(PotentialViolation {
                profile: profile.clone(),
                agent,
                action,
                deviation,
            });
        }
    };

    let exhaustive = space.len() <= options.exhaustive_cap;
    if exhaustive {
        for k in 0..space.len() {
            let profile = space.decode(k);
            for agent in 0..n {
                for action in game.constraint(agent, &profile) {
                    visit(&profile, agent, action);
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        for _ in 0..options.samples {
            let profile = space.decode(rng.gen_range(0..space.len()));
            let agent = rng.gen_range(0..n);
            let feasible = game.constraint(agent, &profile);
            let action = feasible[rng.gen_range(0..feasible.len())];
            visit(&profile, agent, action);
        }
    }
    if max_deviation <= UTILITY_TOLERANCE {
        worst = None;
    }
    Ok(PotentialReport {
        exhaustive,
        triples_checked: triples,
        max_deviation,
        worst,
    })
}

fn potential_of<G: Game + ?Sized>(game: &G, profile: &[usize]) -> f64 {
    game.potential(profile).unwrap_or(f64::NAN)
}
