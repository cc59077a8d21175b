//! Side-by-side check of the asynchronous chain `P_ε` and the synchronous
//! chain `P'_ε` of one game: shared feasible edges with equal resistances,
//! equal recurrent classes of the unperturbed chains, and equal
//! stochastically stable sets.

use std::fmt;

use super::{
    build_async_chain, build_sync_chain, estimate_resistance, recurrent_classes,
    stochastically_stable_states, ChainLimits, StateIndex, TransitionMatrix,
    DEFAULT_RESISTANCE_EPSILONS, DEFAULT_STABILITY_THRESHOLD, DEFAULT_SWEEP,
};
use crate::error::{Error, Result};
use crate::game::{diff_set, Game};
use crate::policy::{switch_resistance, PolicyKind, PolicyParams};
use crate::scheduler::{Mode, SyncParams};

#[derive(Debug, Clone)]
pub struct CompareOptions {
    /// Strictly decreasing noise levels for the stability sweep.
    pub sweep: Vec<f64>,
    /// Noise levels for resistance regressions.
    pub resistance_epsilons: Vec<f64>,
    pub threshold: f64,
    /// Allowed `|R' − R|` per shared edge.
    pub resistance_tolerance: f64,
    /// Allowed `|R − switch_resistance|` per asynchronous edge.
    pub analytic_tolerance: f64,
    pub limits: ChainLimits,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            sweep: DEFAULT_SWEEP.to_vec(),
            resistance_epsilons: DEFAULT_RESISTANCE_EPSILONS.to_vec(),
            threshold: DEFAULT_STABILITY_THRESHOLD,
            resistance_tolerance: 0.05,
            analytic_tolerance: 0.02,
            limits: ChainLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeComparison {
    pub from: usize,
    pub to: usize,
    /// The single agent whose action changes along the edge.
    pub agent: usize,
    pub async_exponent: f64,
    pub sync_exponent: f64,
    /// Closed-form BLLL exponent, when the policy is BLLL.
    pub analytic: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FeasibilityVerdict {
    pub edges: Vec<EdgeComparison>,
    /// Async-feasible edges with zero synchronous probability, with the noise
    /// level at which the inclusion failed.
    pub missing: Vec<(usize, usize, f64)>,
    /// Edges whose probability underflowed so no exponent could be fitted.
    pub unfitted: Vec<(usize, usize)>,
    pub max_sync_gap: f64,
    pub max_analytic_gap: f64,
    pub resistance_tolerance: f64,
    pub analytic_tolerance: f64,
}

impl FeasibilityVerdict {
    pub fn inclusion_holds(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn resistances_agree(&self) -> bool {
        self.unfitted.is_empty()
            && self.max_sync_gap <= self.resistance_tolerance
            && self.max_analytic_gap <= self.analytic_tolerance
    }

    pub fn passed(&self) -> bool {
        self.inclusion_holds() && self.resistances_agree()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceVerdict {
    pub async_classes: Vec<Vec<usize>>,
    pub sync_classes: Vec<Vec<usize>>,
}

impl RecurrenceVerdict {
    pub fn passed(&self) -> bool {
        self.async_classes == self.sync_classes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub sweep: Vec<f64>,
    pub threshold: f64,
    pub async_stable: Vec<usize>,
    pub sync_stable: Vec<usize>,
    /// Mass at the smallest noise level, per state.
    pub async_mass: Vec<f64>,
    pub sync_mass: Vec<f64>,
    pub async_non_monotone: Vec<usize>,
    pub sync_non_monotone: Vec<usize>,
}

impl StabilityVerdict {
    pub fn passed(&self) -> bool {
        self.async_stable == self.sync_stable
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub space: StateIndex,
    pub kappa: f64,
    pub ignore_coupling: bool,
    pub feasibility: FeasibilityVerdict,
    pub recurrence: RecurrenceVerdict,
    pub stability: StabilityVerdict,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.feasibility.passed() && self.recurrence.passed() && self.stability.passed()
    }
}

fn chains(
    game: &(impl Game + ?Sized),
    policy: &PolicyParams,
    sync: &SyncParams,
    epsilons: &[f64],
    limits: &ChainLimits,
) -> Result<(Vec<TransitionMatrix>, Vec<TransitionMatrix>)> {
    let mut asynchronous = Vec::with_capacity(epsilons.len());
    let mut synchronous = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let params = policy.with_epsilon(epsilon);
        asynchronous.push(build_async_chain(game, &params, limits)?);
        synchronous.push(build_sync_chain(game, &params, sync, limits)?);
    }
    Ok((asynchronous, synchronous))
}

fn feasibility<G: Game + ?Sized>(
    game: &G,
    space: &StateIndex,
    policy: &PolicyParams,
    sync: &SyncParams,
    options: &CompareOptions,
) -> Result<FeasibilityVerdict> {
    let (asynchronous, synchronous) =
        chains(game, policy, sync, &options.resistance_epsilons, &options.limits)?;
    let (sweep_async, sweep_sync) = chains(game, policy, sync, &options.sweep, &options.limits)?;

    let mut missing = Vec::new();
    for (a, s) in asynchronous.iter().zip(&synchronous).chain(sweep_async.iter().zip(&sweep_sync)) {
        for (from, to) in a.off_diagonal_support() {
            if !(s.get(from, to) > 0.0) {
                missing.push((from, to, a.epsilon.unwrap_or(f64::NAN)));
            }
        }
    }

    let mut edges = Vec::new();
    let mut unfitted = Vec::new();
    let (mut max_sync_gap, mut max_analytic_gap) = (0.0f64, 0.0f64);
    for (from, to) in asynchronous[0].off_diagonal_support() {
        let a = space.decode(from);
        let b = space.decode(to);
        let agent = diff_set(&a, &b)?[0];
        let fitted = estimate_resistance(&asynchronous, from, to)
            .and_then(|r| Ok((r, estimate_resistance(&synchronous, from, to)?)));
        let (r_async, r_sync) = match fitted {
            Ok(pair) => pair,
            Err(Error::InfeasibleEdge { .. }) => {
                unfitted.push((from, to));
                continue;
            }
            Err(e) => return Err(e),
        };
        let analytic = (policy.kind == PolicyKind::BinaryLogLinear)
            .then(|| switch_resistance(game.utility(agent, &a), game.utility(agent, &b)));
        max_sync_gap = max_sync_gap.max((r_sync.exponent - r_async.exponent).abs());
        if let Some(exact) = analytic {
            max_analytic_gap = max_analytic_gap.max((r_async.exponent - exact).abs());
        }
        edges.push(EdgeComparison {
            from,
            to,
            agent,
            async_exponent: r_async.exponent,
            sync_exponent: r_sync.exponent,
            analytic,
        });
    }
    Ok(FeasibilityVerdict {
        edges,
        missing,
        unfitted,
        max_sync_gap,
        max_analytic_gap,
        resistance_tolerance: options.resistance_tolerance,
        analytic_tolerance: options.analytic_tolerance,
    })
}

/// Builds both chains of `game` and checks feasibility inclusion with equal
/// resistances, equal recurrent classes at zero noise (best response), and
/// equal stochastically stable sets under the noise sweep.
pub fn compare_chains<G: Game + ?Sized>(
    game: &G,
    policy: &PolicyParams,
    sync: &SyncParams,
    options: &CompareOptions,
) -> Result<ComparisonReport> {
    sync.validate()?;
    let space = StateIndex::for_game(game, options.limits.max_states)?;

    let feasibility = feasibility(game, &space, policy, sync, options)?;

    let unperturbed = PolicyParams {
        kind: PolicyKind::BestResponse,
        epsilon: 0.0,
        ..*policy
    };
    let recurrence = RecurrenceVerdict {
        async_classes: recurrent_classes(&build_async_chain(game, &unperturbed, &options.limits)?),
        sync_classes: recurrent_classes(&build_sync_chain(
            game,
            &unperturbed,
            sync,
            &options.limits,
        )?),
    };

    let sweep = |mode| {
        stochastically_stable_states(
            game,
            mode,
            policy,
            &options.sweep,
            sync,
            options.threshold,
            &options.limits,
        )
    };
    let async_report = sweep(Mode::Async)?;
    let sync_report = sweep(Mode::Sync)?;
    let last = |r: &super::StabilityReport| r.distributions[r.distributions.len() - 1].probabilities.clone();
    let stability = StabilityVerdict {
        sweep: options.sweep.clone(),
        threshold: options.threshold,
        async_mass: last(&async_report),
        sync_mass: last(&sync_report),
        async_stable: async_report.stable,
        sync_stable: sync_report.stable,
        async_non_monotone: async_report.non_monotone,
        sync_non_monotone: sync_report.non_monotone,
    };

    Ok(ComparisonReport {
        space,
        kappa: sync.kappa,
        ignore_coupling: sync.ignore_coupling,
        feasibility,
        recurrence,
        stability,
    })
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

struct States<'a>(&'a StateIndex, &'a [usize]);

impl fmt::Display for States<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, &s) in self.1.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", self.0.decode(s))?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let space = &self.space;
        writeln!(
            f,
            "states: {}  kappa: {}{}",
            space.len(),
            self.kappa,
            if self.ignore_coupling { "  (coupling ignored)" } else { "" }
        )?;

        let feas = &self.feasibility;
        writeln!(
            f,
            "[{}] feasibility: {} async edges, {} missing from the sync chain",
            verdict(feas.inclusion_holds()),
            feas.edges.len() + feas.unfitted.len(),
            feas.missing.len()
        )?;
        for &(from, to, eps) in feas.missing.iter().take(10) {
            writeln!(f, "    missing {} -> {} at eps {eps}", space.decode(from), space.decode(to))?;
        }
        writeln!(
            f,
            "[{}] resistances: max |R' - R| = {:.4} (tol {}), max |R - analytic| = {:.4} (tol {}), {} unfitted",
            verdict(feas.resistances_agree()),
            feas.max_sync_gap,
            feas.resistance_tolerance,
            feas.max_analytic_gap,
            feas.analytic_tolerance,
            feas.unfitted.len()
        )?;

        let rec = &self.recurrence;
        writeln!(f, "[{}] recurrent classes at zero noise", verdict(rec.passed()))?;
        for (label, classes) in [("async", &rec.async_classes), ("sync", &rec.sync_classes)] {
            write!(f, "    {label}:")?;
            for class in classes {
                write!(f, " {}", States(space, class))?;
            }
            writeln!(f)?;
        }

        let st = &self.stability;
        writeln!(
            f,
            "[{}] stochastically stable states (delta {}, sweep {:?})",
            verdict(st.passed()),
            st.threshold,
            st.sweep
        )?;
        writeln!(f, "    async: {}", States(space, &st.async_stable))?;
        writeln!(f, "    sync:  {}", States(space, &st.sync_stable))?;
        write!(f, "overall: {}", verdict(self.passed()))
    }
}
