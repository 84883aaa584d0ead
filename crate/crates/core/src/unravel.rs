//! Adverse-selection unraveling without certification, and the reverse
//! unraveling of disclosure when certificates are free.

use serde::Serialize;

use crate::error::{MarketError, Result};
use crate::model::{truncated_mean_below, MarketParams};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Sequence of market cutoffs produced by an unraveling recursion.
///
/// `buyer_offers[n]` is the buyer's offer given `cutoffs[n]`, i.e. the mean
/// quality of the types at or below that cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnravelingTrace {
    pub cutoffs: Vec<f64>,
    pub buyer_offers: Vec<f64>,
    pub limit: f64,
    pub rounds: usize,
    pub converged: bool,
}

impl UnravelingTrace {
    pub fn last_cutoff(&self) -> f64 {
        *self.cutoffs.last().expect("trace always holds the initial cutoff")
    }
}

/// One round: buyers offer `E(θ | θ ≤ k) = k/2`; sellers stay iff `πθ ≤ k/2`.
pub fn unravel_step(cutoff: f64, params: &MarketParams) -> Result<f64> {
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return Err(MarketError::validation("cutoff", "cutoff must be in (0, 1]"));
    }
    let pi = params.pi();
    if pi < 0.5 {
        return Err(MarketError::validation("pi", "pi must be ≥ 0.5"));
    }
    Ok((cutoff / (2.0 * pi)).min(1.0))
}

/// Iterates [`unravel_step`] from `k₀ = 1` until the cutoff drops below `tol`
/// or `max_rounds` steps have been taken.
pub fn unravel_trace(params: &MarketParams, tol: f64, max_rounds: usize) -> Result<UnravelingTrace> {
    check_controls(tol, max_rounds)?;
    let mut cutoffs = vec![1.0];
    let mut k = 1.0;
    while k >= tol && cutoffs.len() <= max_rounds {
        k = unravel_step(k, params)?;
        cutoffs.push(k);
    }
    let buyer_offers = cutoffs.iter().map(|&k| truncated_mean_below(k)).collect();
    Ok(UnravelingTrace {
        rounds: cutoffs.len() - 1,
        converged: k < tol,
        limit: if params.is_boundary() { 1.0 } else { 0.0 },
        cutoffs,
        buyer_offers,
    })
}

/// `1/(2π)ⁿ`, the closed form of the n-th unraveling cutoff.
pub fn closed_form_cutoff(params: &MarketParams, n: u32) -> f64 {
    (2.0 * params.pi()).powi(-(n as i32)).min(1.0)
}

/// Free certification: the undisclosed-pool belief halves every round,
/// `θ̂ₜ₊₁ = θ̂ₜ/2` from `θ̂₀ = 1/2`, until only lemons stay undisclosed.
pub fn free_disclosure_unravel(tol: f64, max_rounds: usize) -> Result<UnravelingTrace> {
    check_controls(tol, max_rounds)?;
    let mut beliefs = vec![0.5];
    let mut belief = 0.5;
    while belief >= tol && beliefs.len() <= max_rounds {
        // types below the current belief are the only ones not disclosing
        belief = truncated_mean_below(belief);
        beliefs.push(belief);
    }
    let buyer_offers = beliefs.iter().map(|&b| truncated_mean_below(b)).collect();
    Ok(UnravelingTrace {
        rounds: beliefs.len() - 1,
        converged: belief < tol,
        limit: 0.0,
        cutoffs: beliefs,
        buyer_offers,
    })
}

fn check_controls(tol: f64, max_rounds: usize) -> Result<()> {
    if !(tol > 0.0) {
        return Err(MarketError::validation("tol", "tol must be > 0"));
    }
    if max_rounds == 0 {
        return Err(MarketError::validation("max_rounds", "max_rounds must be ≥ 1"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pi: f64) -> MarketParams {
        MarketParams::with_boundary(pi).unwrap()
    }

    #[test]
    fn single_step() {
        assert!((unravel_step(1.0, &params(0.75)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((unravel_step(0.5, &params(0.75)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(unravel_step(0.42, &params(0.5)).unwrap(), 0.42);
        assert!(unravel_step(0.0, &params(0.75)).is_err());
        assert!(unravel_step(1.5, &params(0.75)).is_err());
    }

    #[test]
    fn trace_three_quarters() {
        let t = unravel_trace(&params(0.75), 0.02, 100).unwrap();
        assert!(t.converged);
        assert_eq!(t.rounds, 10);
        assert_eq!(t.cutoffs.len(), 11);
        // 1/1.5^10
        assert!((t.last_cutoff() - 0.017_341_529_915_832_613).abs() < 1e-12);
        assert_eq!(t.limit, 0.0);
    }

    #[test]
    fn trace_six_tenths() {
        let t = unravel_trace(&params(0.6), 1e-3, 100).unwrap();
        assert!(t.converged);
        assert_eq!(t.rounds, 38);
        for (n, &k) in t.cutoffs.iter().enumerate() {
            assert!((k - 1.2f64.powi(-(n as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_is_stationary() {
        let t = unravel_trace(&params(0.5), 0.5, 10).unwrap();
        assert!(!t.converged);
        assert_eq!(t.rounds, 10);
        assert!(t.cutoffs.iter().all(|&k| k == 1.0));
        assert_eq!(t.limit, 1.0);
    }

    #[test]
    fn offers_are_half_the_cutoff() {
        let t = unravel_trace(&params(0.9), 1e-6, 200).unwrap();
        for (k, o) in t.cutoffs.iter().zip(&t.buyer_offers) {
            assert_eq!(*o, k / 2.0);
        }
        assert!(t.cutoffs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn free_disclosure() {
        let t = free_disclosure_unravel(1e-3, 100).unwrap();
        assert_eq!(&t.cutoffs[..3], &[0.5, 0.25, 0.125]);
        assert!(t.converged);
        assert_eq!(t.rounds, 9);
        assert_eq!(t.limit, 0.0);

        let t = free_disclosure_unravel(0.5, 100).unwrap();
        assert_eq!(t.rounds, 1);
        assert_eq!(t.cutoffs, vec![0.5, 0.25]);
    }

    #[test]
    fn rejects_bad_controls() {
        assert!(unravel_trace(&params(0.75), 0.0, 10).is_err());
        assert!(unravel_trace(&params(0.75), 0.1, 0).is_err());
        assert!(free_disclosure_unravel(-1.0, 10).is_err());
    }
}
