//! Law of the synchronous mover set `S_a` given the intended profile.
//!
//! Given candidates `M` (agents whose intended action differs from the
//! current one), each candidate is inert with probability `κ`; the remaining
//! set `B` receives i.i.d. continuous priorities, so every strict ordering of
//! `B` is equally likely. A member of `B` moves iff it outranks every other
//! member of `B` in its coupling set.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Largest candidate set the exact enumeration accepts.
pub const MAX_CANDIDATES: usize = 12;

/// `neighbors[x]`: local bitmask of the other candidates in `x`'s coupling set.
fn neighbor_masks(coupling: &[Vec<usize>], candidates: &[usize]) -> Result<Vec<u32>> {
    if candidates.len() > MAX_CANDIDATES {
        return Err(Error::Resource {
            what: "mover-set enumeration".into(),
            required: candidates.len() as u128,
            cap: MAX_CANDIDATES as u128,
        });
    }
    let mut seen = candidates.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != candidates.len() {
        return Err(Error::Input("candidate set has duplicates".into()));
    }
    if let Some(&bad) = candidates.iter().find(|&&i| i >= coupling.len()) {
        return Err(Error::Input(format!("candidate {bad} has no coupling set")));
    }
    Ok(candidates
        .iter()
        .enumerate()
        .map(|(x, &agent)| {
            candidates
                .iter()
                .enumerate()
                .filter(|&(y, other)| y != x && coupling[agent].contains(other))
                .fold(0u32, |mask, (y, _)| mask | (1 << y))
        })
        .collect())
}

fn factorial(k: u32) -> u64 {
    (1..=k as u64).product()
}

fn inertia_weight(kappa: f64, candidates: usize, active: u32) -> f64 {
    let active_count = active.count_ones() as i32;
    kappa.powi(candidates as i32 - active_count) * (1.0 - kappa).powi(active_count)
}

/// Number of orderings of `active` (highest priority first) whose mover set
/// is exactly `target`.
fn orderings_with_movers(neighbors: &[u32], active: u32, target: u32) -> u64 {
    if target & !active != 0 {
        return 0;
    }
    let width = neighbors.len();
    let mut placed = vec![0u64; 1 << width];
    placed[0] = 1;
    for prefix in 0..(1u32 << width) {
        let count = placed[prefix as usize];
        if count == 0 || prefix & !active != 0 {
            continue;
        }
        for x in 0..width {
            let bit = 1u32 << x;
            if active & bit == 0 || prefix & bit != 0 {
                continue;
            }
            let moves = neighbors[x] & prefix == 0;
            if moves == (target & bit != 0) {
                placed[(prefix | bit) as usize] += count;
            }
        }
    }
    placed[active as usize]
}

/// `Pr(S_a = target | ā)` for candidate set `candidates`, where `coupling[i]`
/// is `I_i^c(a)`.
pub fn mover_set_probability(
    coupling: &[Vec<usize>],
    candidates: &[usize],
    kappa: f64,
    target: &[usize],
) -> Result<f64> {
    let neighbors = neighbor_masks(coupling, candidates)?;
    let mut target_mask = 0u32;
    for agent in target {
        match candidates.iter().position(|c| c == agent) {
            Some(x) => target_mask |= 1 << x,
            None => {
                return Err(Error::Input(format!(
                    "target agent {agent} is not a candidate"
                )))
            }
        }
    }
    let m = candidates.len();
    let mut total = 0.0;
    for active in 0..(1u32 << m) {
        let count = orderings_with_movers(&neighbors, active, target_mask);
        if count > 0 {
            let fraction = count as f64 / factorial(active.count_ones()) as f64;
            total += inertia_weight(kappa, m, active) * fraction;
        }
    }
    Ok(total)
}

/// Full law of the mover set over subsets of `candidates`, as
/// `(movers ascending, probability)` pairs with positive probability.
pub fn mover_set_distribution(
    coupling: &[Vec<usize>],
    candidates: &[usize],
    kappa: f64,
) -> Result<Vec<(Vec<usize>, f64)>> {
    let neighbors = neighbor_masks(coupling, candidates)?;
    let m = candidates.len();
    let mut law: HashMap<u32, f64> = HashMap::new();
    for active in 0..(1u32 << m) {
        // prefix -> (mover set -> number of orderings)
        let mut frontier: HashMap<u32, HashMap<u32, u64>> = HashMap::new();
        frontier.entry(0).or_default().insert(0, 1);
        for _ in 0..active.count_ones() {
            let mut grown: HashMap<u32, HashMap<u32, u64>> = HashMap::new();
            for (prefix, by_movers) in &frontier {
                for x in 0..m {
                    let bit = 1u32 << x;
                    if active & bit == 0 || prefix & bit != 0 {
                        continue;
                    }
                    let moves = neighbors[x] & prefix == 0;
                    let slot = grown.entry(prefix | bit).or_default();
                    for (&movers, &count) in by_movers {
                        let movers = if moves { movers | bit } else { movers };
                        *slot.entry(movers).or_default() += count;
                    }
                }
            }
            frontier = grown;
        }
        let weight = inertia_weight(kappa, m, active) / factorial(active.count_ones()) as f64;
        if let Some(by_movers) = frontier.get(&active) {
            for (&movers, &count) in by_movers {
                *law.entry(movers).or_default() += weight * count as f64;
            }
        }
    }
    let mut out: Vec<(Vec<usize>, f64)> = law
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(mask, p)| {
            let movers = (0..m)
                .filter(|x| mask & (1 << x) != 0)
                .map(|x| candidates[x])
                .collect();
            (movers, p)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
