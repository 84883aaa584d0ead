//! Market primitives: seller quality, the retention discount, the uniform
//! prior, the trade payoff table and the regulator's signal policy.
//!
//! Naming note: the classic one-shot market quotes a *price*, while the
//! certification model uses `p` for the probability that a certificate shows
//! the true quality. Here `price` always means the former and `p` the latter.

use serde::Serialize;

use crate::error::{MarketError, Result};

/// Absolute tolerance for comparing quality/price quantities.
pub const TOLERANCE: f64 = 1e-12;

/// Mean of the uniform quality prior on `[0, 1]`.
pub const PRIOR_MEAN: f64 = 0.5;

/// `E(θ | θ ≤ k)` under the uniform prior, for `k ∈ [0, 1]`.
///
/// Values of `k` outside `[0, 1]` are clamped: an empty truncation (`k ≤ 0`)
/// yields 0 and `k ≥ 1` yields the prior mean.
#[inline]
pub fn truncated_mean_below(k: f64) -> f64 {
    k.clamp(0.0, 1.0) / 2.0
}

/// `E(θ | θ ≥ k)` under the uniform prior.
#[inline]
pub fn truncated_mean_above(k: f64) -> f64 {
    (1.0 + k.clamp(0.0, 1.0)) / 2.0
}

/// Retention discount of sellers who keep their car.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketParams {
    pi: f64,
    boundary: bool,
}

impl MarketParams {
    /// Accepts `pi ∈ (1/2, 1]`.
    pub fn new(pi: f64) -> Result<Self> {
        if !(pi > 0.5 && pi <= 1.0) {
            return Err(MarketError::validation("pi", format!("pi must be in (0.5, 1], got {pi}")));
        }
        Ok(MarketParams { pi, boundary: false })
    }

    /// Like [`MarketParams::new`] but also admits the knife-edge `pi = 1/2`,
    /// where the unraveling recursion is stationary.
    pub fn with_boundary(pi: f64) -> Result<Self> {
        if pi == 0.5 {
            return Ok(MarketParams { pi, boundary: true });
        }
        if pi < 0.5 || pi.is_nan() {
            return Err(MarketError::validation("pi", "pi must be ≥ 0.5"));
        }
        Self::new(pi)
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    /// True when the params sit on the stationary boundary `pi = 1/2`.
    pub fn is_boundary(&self) -> bool {
        self.boundary
    }

    pub fn prior_mean(&self) -> f64 {
        PRIOR_MEAN
    }
}

/// A seller's private quality. `0` is a lemon, `1` a car in new condition.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct SellerType(f64);

impl SellerType {
    pub fn new(theta: f64) -> Result<Self> {
        check_unit("theta", theta)?;
        Ok(SellerType(theta))
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    pub fn is_lemon(self) -> bool {
        self.0 == 0.0
    }
}

/// The regulator's instrument: truth probability `p` and certificate fee `c`.
///
/// With probability `p` a certificate displays the seller's true quality;
/// otherwise it displays an independent draw from `U(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalPolicy {
    pub p: f64,
    pub c: f64,
}

impl SignalPolicy {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        validate_policy(SignalPolicy { p, c })
    }

    /// Perfect certification at fee `c`.
    pub fn perfect(c: f64) -> Result<Self> {
        Self::new(1.0, c)
    }
}

pub fn validate_policy(policy: SignalPolicy) -> Result<SignalPolicy> {
    if !(0.0..=1.0).contains(&policy.p) {
        return Err(MarketError::validation("p", "p out of [0,1]"));
    }
    if policy.c.is_nan() || policy.c < 0.0 {
        return Err(MarketError::validation("c", "c negative"));
    }
    if !policy.c.is_finite() {
        return Err(MarketError::validation("c", "c must be finite"));
    }
    Ok(policy)
}

/// Payoffs of a single buyer/seller meeting at a given price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradePayoff {
    pub seller_sale: f64,
    pub seller_no_sale: f64,
    pub buyer_sale: f64,
    pub buyer_no_sale: f64,
}

pub fn trade_payoffs(theta: f64, price: f64, params: &MarketParams) -> Result<TradePayoff> {
    check_unit("theta", theta)?;
    if price.is_nan() || price < 0.0 {
        return Err(MarketError::validation("price", "price must be ≥ 0"));
    }
    Ok(TradePayoff {
        seller_sale: price,
        seller_no_sale: params.pi() * theta,
        buyer_sale: theta - price,
        buyer_no_sale: 0.0,
    })
}

pub(crate) fn check_unit(field: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(MarketError::validation(field, format!("{field} out of [0,1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_validation() {
        assert!(SignalPolicy::new(0.5, 0.1).is_ok());

        let err = SignalPolicy::new(1.2, 0.1).unwrap_err();
        assert!(matches!(err, MarketError::Validation { field: "p", .. }));
        assert!(err.to_string().contains("p out of [0,1]"));

        let err = SignalPolicy::new(0.5, -0.1).unwrap_err();
        assert!(matches!(err, MarketError::Validation { field: "c", .. }));
        assert!(err.to_string().contains("c negative"));

        assert!(SignalPolicy::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn payoff_table() {
        let params = MarketParams::new(0.75).unwrap();
        let t = trade_payoffs(0.8, 0.5, &params).unwrap();
        assert!((t.seller_no_sale - 0.6).abs() < TOLERANCE);
        assert!((t.buyer_sale - 0.3).abs() < TOLERANCE);
        assert_eq!(t.seller_sale, 0.5);
        assert_eq!(t.buyer_no_sale, 0.0);

        let t = trade_payoffs(0.0, 0.0, &params).unwrap();
        assert_eq!((t.seller_sale, t.seller_no_sale, t.buyer_sale, t.buyer_no_sale), (0.0, 0.0, 0.0, 0.0));

        let t = trade_payoffs(1.0, 1.0, &MarketParams::new(1.0).unwrap()).unwrap();
        assert_eq!(t.seller_no_sale, 1.0);
        assert_eq!(t.buyer_sale, 0.0);

        assert!(trade_payoffs(1.5, 0.2, &params).is_err());
        assert!(trade_payoffs(0.5, -0.2, &params).is_err());
    }

    #[test]
    fn retention_range() {
        assert!(MarketParams::new(0.5).is_err());
        assert!(MarketParams::new(1.01).is_err());
        let b = MarketParams::with_boundary(0.5).unwrap();
        assert!(b.is_boundary());
        assert!(!MarketParams::with_boundary(0.75).unwrap().is_boundary());
        let err = MarketParams::with_boundary(0.4).unwrap_err();
        assert!(err.to_string().contains("pi must be ≥ 0.5"));
    }

    #[test]
    fn uniform_truncated_means() {
        assert_eq!(MarketParams::new(0.8).unwrap().prior_mean(), 0.5);
        assert_eq!(truncated_mean_below(1.0), PRIOR_MEAN);
        for k in [0.1, 0.25, 0.37, 0.9] {
            assert!((truncated_mean_below(k) - k / 2.0).abs() < TOLERANCE);
        }
        assert_eq!(truncated_mean_below(-0.1), 0.0);
        assert_eq!(truncated_mean_above(0.5), 0.75);
    }

    #[test]
    fn seller_type_range() {
        assert!(SellerType::new(0.0).unwrap().is_lemon());
        assert!(!SellerType::new(1.0).unwrap().is_lemon());
        assert!(SellerType::new(-0.01).is_err());
    }
}
