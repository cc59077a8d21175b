//! Numeric resistances: decay exponents of transition probabilities in the
//! noise scale `η = e^{−1/ε}`, fitted by least squares on `(ln η, ln P)`.

use super::TransitionMatrix;
use crate::error::{Error, Result};

/// Noise levels used for edge-resistance fits.
pub const DEFAULT_RESISTANCE_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.02];

/// Noise levels for the synthetic product/sum checks. The functions are
/// evaluated in log space, so `ε` can be taken far smaller than any chain
/// would tolerate.
pub const DEFAULT_CALCULUS_EPSILONS: [f64; 4] = [1e-3, 1e-6, 1e-9, 1e-12];

/// RMS fit residual above which an estimate is flagged.
pub const DEFAULT_FIT_RESIDUAL_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceEstimate {
    /// Fitted slope, clamped at zero.
    pub exponent: f64,
    pub raw_slope: f64,
    /// RMS residual of the linear fit in `ln P`.
    pub fit_residual: f64,
    pub epsilons_used: Vec<f64>,
    pub flagged: bool,
}

/// Least-squares slope of `y` against `x`, and the RMS residual.
pub fn fit_exponent(points: &[(f64, f64)]) -> (f64, f64) {
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    (slope, (rss / count).sqrt())
}

/// `ln η` for noise level `ε`.
fn log_eta(epsilon: f64) -> f64 {
    -1.0 / epsilon
}

/// Fits the resistance of `from → to` across a family of chains built at
/// distinct noise levels.
pub fn estimate_resistance(
    chains: &[TransitionMatrix],
    from: usize,
    to: usize,
) -> Result<ResistanceEstimate> {
    let mut points = Vec::with_capacity(chains.len());
    let mut epsilons = Vec::with_capacity(chains.len());
    for chain in chains {
        let epsilon = chain
            .epsilon
            .filter(|e| *e > 0.0)
            .ok_or_else(|| Error::Parameter("resistance fits need chains built at ε > 0".into()))?;
        let p = chain.get(from, to);
        if !(p > 0.0) {
            return Err(Error::InfeasibleEdge { from, to, epsilon });
        }
        points.push((log_eta(epsilon), p.ln()));
        epsilons.push(epsilon);
    }
    let mut distinct = epsilons.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Parameter(
            "resistance fits need at least two distinct noise levels".into(),
        ));
    }
    let (slope, fit_residual) = fit_exponent(&points);
    Ok(ResistanceEstimate {
        exponent: slope.max(0.0),
        raw_slope: slope,
        fit_residual,
        epsilons_used: epsilons,
        flagged: fit_residual > DEFAULT_FIT_RESIDUAL_LIMIT,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalculusReport {
    pub product_exponent: f64,
    pub expected_product: f64,
    pub sum_exponent: f64,
    pub expected_sum: f64,
    pub tolerance: f64,
}

impl CalculusReport {
    pub fn holds(&self) -> bool {
        (self.product_exponent - self.expected_product).abs() <= self.tolerance
            && (self.sum_exponent - self.expected_sum).abs() <= self.tolerance
    }
}

/// Fits the exponents of `Π c_i η^{r_i}` and `Σ c_i η^{r_i}` and compares
/// them with `Σ r_i` and `min r_i`.
pub fn verify_resistance_calculus(
    specs: &[(f64, f64)],
    epsilons: &[f64],
    tolerance: f64,
) -> Result<CalculusReport> {
    if specs.is_empty() {
        return Err(Error::Input("need at least one synthetic function".into()));
    }
    if let Some(&(c, r)) = specs.iter().find(|&&(c, r)| !(c > 0.0) || !(r >= 0.0)) {
        return Err(Error::Input(format!(
            "synthetic function ({c}, {r}) needs a positive coefficient and nonnegative exponent"
        )));
    }
    if epsilons.len() < 2 {
        return Err(Error::Parameter("need at least two noise levels".into()));
    }
    let mut product = Vec::with_capacity(epsilons.len());
    let mut sum = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let x = log_eta(epsilon);
        let logs: Vec<f64> = specs.iter().map(|&(c, r)| c.ln() + r * x).collect();
        product.push((x, logs.iter().sum()));
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        sum.push((x, log_sum));
    }
    Ok(CalculusReport {
        product_exponent: fit_exponent(&product).0,
        expected_product: specs.iter().map(|s| s.1).sum(),
        sum_exponent: fit_exponent(&sum).0,
        expected_sum: specs.iter().map(|s| s.1).fold(f64::INFINITY, f64::min),
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_async_chain, ChainLimits};
    use crate::game::TableGame;
    use crate::policy::{switch_resistance, PolicyParams};
    use proptest::prelude::*;

    fn chains_for(game: &TableGame, epsilons: &[f64]) -> Vec<TransitionMatrix> {
        epsilons
            .iter()
            .map(|&e| {
                build_async_chain(game, &PolicyParams::binary_log_linear(e), &ChainLimits::default())
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn fit_recovers_exact_line() {
        let (slope, residual) = fit_exponent(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(residual < 1e-12);
    }

    #[test]
    fn improving_switch_has_zero_resistance() {
        let game = TableGame::unconstrained(vec![2], vec![vec![0.0, 1.0]]).unwrap();
        let chains = chains_for(&game, &DEFAULT_RESISTANCE_EPSILONS);
        let est = estimate_resistance(&chains, 0, 1).unwrap();
        assert!(est.exponent < 0.02, "{est:?}");
        assert!(!est.flagged);
    }

    #[test]
    fn worsening_switch_matches_analytic_exponent() {
        for drop in [0.3, 1.0, 2.5] {
            let game = TableGame::unconstrained(vec![2], vec![vec![drop, 0.0]]).unwrap();
            let chains = chains_for(&game, &DEFAULT_RESISTANCE_EPSILONS);
            let est = estimate_resistance(&chains, 0, 1).unwrap();
            assert!((est.exponent - switch_resistance(drop, 0.0)).abs() < 0.02, "{est:?}");
        }
    }

    #[test]
    fn regression_recovers_switch_resistance_on_fine_grid() {
        let game = TableGame::unconstrained(vec![2], vec![vec![1.0, 0.0]]).unwrap();
        let chains = chains_for(&game, &DEFAULT_RESISTANCE_EPSILONS);
        let est = estimate_resistance(&chains, 0, 1).unwrap();
        assert!((est.exponent - 1.0).abs() < 0.02);
        assert_eq!(est.epsilons_used, DEFAULT_RESISTANCE_EPSILONS.to_vec());
    }

    #[test]
    fn zero_probability_edge_is_infeasible() {
        let game = TableGame::unconstrained(vec![2, 2], vec![vec![0.0; 4]; 2]).unwrap();
        let chains = chains_for(&game, &[0.5, 0.1]);
        assert!(matches!(
            estimate_resistance(&chains, 0, 3),
            Err(Error::InfeasibleEdge { from: 0, to: 3, .. })
        ));
    }

    #[test]
    fn calculus_examples() {
        let single = verify_resistance_calculus(&[(2.0, 1.5)], &DEFAULT_CALCULUS_EPSILONS, 1e-3).unwrap();
        assert!(single.holds());
        assert!((single.product_exponent - 1.5).abs() < 1e-3);
        assert!((single.sum_exponent - 1.5).abs() < 1e-3);

        let pair = verify_resistance_calculus(&[(1.0, 1.0), (1.0, 2.0)], &DEFAULT_CALCULUS_EPSILONS, 1e-3)
            .unwrap();
        assert_eq!(pair.expected_product, 3.0);
        assert_eq!(pair.expected_sum, 1.0);
        assert!(pair.holds(), "{pair:?}");
    }

    #[test]
    fn calculus_rejects_bad_specs() {
        assert!(verify_resistance_calculus(&[], &DEFAULT_CALCULUS_EPSILONS, 1e-3).is_err());
        assert!(verify_resistance_calculus(&[(0.0, 1.0)], &DEFAULT_CALCULUS_EPSILONS, 1e-3).is_err());
        assert!(verify_resistance_calculus(&[(1.0, -1.0)], &DEFAULT_CALCULUS_EPSILONS, 1e-3).is_err());
    }

    proptest! {
        #[test]
        fn product_adds_and_sum_takes_min(
            specs in prop::collection::vec((0.1f64..10.0, 0.0f64..3.0), 1..8)
        ) {
            let report = verify_resistance_calculus(&specs, &DEFAULT_CALCULUS_EPSILONS, 1e-3).unwrap();
            prop_assert!(report.holds(), "{:?}", report);
        }
    }
}
