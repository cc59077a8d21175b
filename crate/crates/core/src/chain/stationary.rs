use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::TransitionMatrix;
use crate::error::{Error, Result};

/// Residual bound `‖μP − μ‖₁` a stationary solve must meet.
pub const STATIONARY_TOLERANCE: f64 = 1e-10;

const POWER_ITERATION_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Grassmann–Taksar–Heyman state reduction: Gaussian elimination on
    /// `μ(P − I) = 0` that never subtracts, run on log-probabilities, so
    /// transitions hundreds of orders of magnitude apart keep full relative
    /// accuracy. `O(n³)`.
    Direct,
    /// Power iteration on the lazy chain `(I + P) / 2`, stopped once
    /// `‖μP − μ‖₁ ≤ 1e-12` or after a million sweeps.
    PowerIteration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub probabilities: Vec<f64>,
    /// `‖μP − μ‖₁`.
    pub residual: f64,
    pub method: SolveMethod,
}

fn support_graph(p: &TransitionMatrix) -> DiGraph<(), ()> {
    let n = p.len();
    let mut graph = DiGraph::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for from in 0..n {
        for to in 0..n {
            if p.get(from, to) > 0.0 {
                graph.add_edge(nodes[from], nodes[to], ());
            }
        }
    }
    graph
}

/// Closed communicating classes of the support digraph, each sorted, listed
/// by smallest member.
pub fn recurrent_classes(p: &TransitionMatrix) -> Vec<Vec<usize>> {
    let graph = support_graph(p);
    let components = tarjan_scc(&graph);
    let mut owner = vec![0usize; p.len()];
    for (c, members) in components.iter().enumerate() {
        for node in members {
            owner[node.index()] = c;
        }
    }
    let mut classes: Vec<Vec<usize>> = components
        .iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|node| {
                graph
                    .neighbors(*node)
                    .all(|next| owner[next.index()] == *c)
            })
        })
        .map(|(_, members)| {
            let mut states: Vec<usize> = members.iter().map(|node| node.index()).collect();
            states.sort_unstable();
            states
        })
        .collect();
    classes.sort();
    classes
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Errors unless the chain is irreducible and aperiodic.
pub fn check_ergodic(p: &TransitionMatrix) -> Result<()> {
    let n = p.len();
    if n == 0 {
        return Err(Error::Analysis("empty chain".into()));
    }
    let graph = support_graph(p);
    if tarjan_scc(&graph).len() != 1 {
        return Err(Error::Analysis(format!(
            "chain is reducible; closed classes: {:?}",
            recurrent_classes(p)
        )));
    }
    // period = gcd over edges of level(u) + 1 − level(v), BFS levels from 0
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut period = 0;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if p.get(u, v) > 0.0 {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                } else {
                    period = gcd(period, (level[u] + 1).abs_diff(level[v]));
                }
            }
        }
    }
    if period != 1 {
        return Err(Error::Analysis(format!("chain is periodic with period {period}")));
    }
    Ok(())
}

fn residual(p: &DMatrix<f64>, mu: &DVector<f64>) -> f64 {
    let moved = p.tr_mul(mu);
    (moved - mu).abs().sum()
}

fn normalized(mut mu: DVector<f64>) -> Option<DVector<f64>> {
    if mu.iter().any(|x| !x.is_finite()) {
        return None;
    }
    mu.iter_mut().for_each(|x| *x = x.max(0.0));
    let total = mu.sum();
    (total > 0.0).then(|| mu / total)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// GTH elimination carried out on log-probabilities, so censored transition
/// probabilities far below `f64::MIN_POSITIVE` stay representable.
fn direct_solve(p: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = p.nrows();
    let mut a = p.map(f64::ln);
    for k in (1..n).rev() {
        let exit = (0..k).fold(f64::NEG_INFINITY, |acc, j| log_add(acc, a[(k, j)]));
        if exit == f64::NEG_INFINITY {
            return None;
        }
        for i in 0..k {
            a[(i, k)] -= exit;
        }
        for j in 0..k {
            let from_k = a[(k, j)];
            if from_k == f64::NEG_INFINITY {
                continue;
            }
            for i in 0..k {
                let via = a[(i, k)];
                if via != f64::NEG_INFINITY {
                    a[(i, j)] = log_add(a[(i, j)], via + from_k);
                }
            }
        }
    }
    let mut log_mu = vec![f64::NEG_INFINITY; n];
    log_mu[0] = 0.0;
    for k in 1..n {
        log_mu[k] = (0..k).fold(f64::NEG_INFINITY, |acc, i| log_add(acc, log_mu[i] + a[(i, k)]));
    }
    let total = log_mu.iter().fold(f64::NEG_INFINITY, |acc, &x| log_add(acc, x));
    normalized(DVector::from_iterator(n, log_mu.iter().map(|x| (x - total).exp())))
}

fn power_iteration(p: &DMatrix<f64>, start: Option<DVector<f64>>) -> DVector<f64> {
    let n = p.nrows();
    let mut mu = start.unwrap_or_else(|| DVector::from_element(n, 1.0 / n as f64));
    for _ in 0..POWER_ITERATION_LIMIT {
        let moved = p.tr_mul(&mu);
        let change = (&moved - &mu).abs().sum();
        mu = (moved + &mu) * 0.5;
        if change <= 1e-12 {
            break;
        }
    }
    mu
}

/// Stationary law of an irreducible aperiodic chain.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<StationaryDistribution> {
    check_ergodic(p)?;
    let matrix = p.matrix();
    if let Some(mu) = direct_solve(matrix) {
        let r = residual(matrix, &mu);
        if r <= STATIONARY_TOLERANCE {
            return Ok(StationaryDistribution {
                probabilities: mu.iter().copied().collect(),
                residual: r,
                method: SolveMethod::Direct,
            });
        }
    }
    let mu = power_iteration(matrix, direct_solve(matrix));
    let mu = normalized(mu).ok_or_else(|| Error::Analysis("power iteration diverged".into()))?;
    let r = residual(matrix, &mu);
    if r > STATIONARY_TOLERANCE {
        return Err(Error::Analysis(format!(
            "stationary solve did not converge (residual {r:e})"
        )));
    }
    Ok(StationaryDistribution {
        probabilities: mu.iter().copied().collect(),
        residual: r,
        method: SolveMethod::PowerIteration,
    })
}
