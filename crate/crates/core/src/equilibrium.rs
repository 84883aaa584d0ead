//! Disclosure equilibria for costly certification and for noisy certificates.
//!
//! Under a cutoff strategy with nondisclosure cutoff `q`, the undisclosed pool
//! mean is `θ̂ = q/2` and the disclosed pool mean is `(1+q)/2`. A seller of
//! type `θ₀` who discloses expects the payment
//!
//! ```text
//! W(θ₀) = (1−p)(1+p+2θ̂)/2 + p²θ₀
//! ```
//!
//! and discloses iff `W(θ₀) − c > θ̂`, which gives the threshold
//! `T(θ̂) = (2pθ̂ + p² − 1 + 2c) / (2p²)`. Equilibria are fixed points of
//! `θ̂ ↦ clamp(T(θ̂)/2, 0, 1/2)`, whose slope is `1/(2p)`.

use std::fmt;

use serde::Serialize;

use crate::error::{MarketError, Result};
use crate::model::{check_unit, truncated_mean_above, truncated_mean_below, validate_policy, SignalPolicy, TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Every type above the lemon discloses (`q = 0`).
    AllDiscloseCorner,
    Interior,
    /// Nobody buys a certificate (`q = 1`).
    NoDisclosure,
    /// `p = 0`: certificates carry no information.
    DegenerateP0,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::AllDiscloseCorner => "all-disclose-corner",
            Regime::Interior => "interior",
            Regime::NoDisclosure => "no-disclosure",
            Regime::DegenerateP0 => "degenerate-p0",
        }
    }

    fn from_cutoff(q: f64) -> Self {
        if q <= 0.0 {
            Regime::AllDiscloseCorner
        } else if q >= 1.0 {
            Regime::NoDisclosure
        } else {
            Regime::Interior
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rule for picking among multiple equilibria when `p ≤ 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// The regulator's preferred outcome: full disclosure whenever it is self-consistent.
    #[default]
    DmvPreferred,
    /// No disclosure whenever it is self-consistent.
    Pessimistic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisclosureEquilibrium {
    pub p: f64,
    pub c: f64,
    /// Buyers' expected quality of a seller without a certificate.
    pub theta_hat: f64,
    /// Mass of nondisclosing types, which is also the cutoff under the uniform prior.
    pub q: f64,
    /// Mean quality of the disclosed pool. When nobody discloses this is the
    /// off-path belief `(1+q)/2 = 1`.
    pub e_disclosed: f64,
    pub regime: Regime,
    pub selection_note: Option<String>,
}

impl DisclosureEquilibrium {
    /// Builds the equilibrium object implied by a nondisclosure cutoff `q`.
    pub fn from_cutoff(p: f64, c: f64, q: f64, regime: Regime) -> Self {
        DisclosureEquilibrium {
            p,
            c,
            theta_hat: truncated_mean_below(q),
            q,
            e_disclosed: truncated_mean_above(q),
            regime,
            selection_note: None,
        }
    }

    /// Same as [`from_cutoff`](Self::from_cutoff) but parameterised by the
    /// undisclosed-pool mean, with the regime read off the implied cutoff.
    pub fn from_theta_hat(p: f64, c: f64, theta_hat: f64) -> Self {
        let q = (2.0 * theta_hat).clamp(0.0, 1.0);
        let regime = if p == 0.0 { Regime::DegenerateP0 } else { Regime::from_cutoff(q) };
        Self::from_cutoff(p, c, q, regime)
    }

    fn with_note(mut self, note: String) -> Self {
        self.selection_note = Some(note);
        self
    }

    pub fn policy(&self) -> SignalPolicy {
        SignalPolicy { p: self.p, c: self.c }
    }

    pub fn disclosure_mass(&self) -> f64 {
        1.0 - self.q
    }

    /// Regulator revenue `c·(1−q)`.
    pub fn dmv_profit(&self) -> f64 {
        self.c * self.disclosure_mass()
    }
}

/// Perfect certificates sold at fee `c`: `θ̂ = min(c, 1/2)`, disclosers are `θ ≥ 2c`.
pub fn costly_equilibrium(c: f64) -> Result<DisclosureEquilibrium> {
    validate_policy(SignalPolicy { p: 1.0, c })?;
    let theta_hat = c.min(0.5);
    let q = 2.0 * theta_hat;
    Ok(DisclosureEquilibrium::from_cutoff(1.0, c, q, Regime::from_cutoff(q)))
}

/// Type threshold above which sellers strictly prefer to disclose, given belief `θ̂`.
/// Only meaningful for `p > 0`.
pub fn disclosure_threshold(policy: &SignalPolicy, theta_hat: f64) -> f64 {
    let SignalPolicy { p, c } = *policy;
    (2.0 * p * theta_hat + p * p - 1.0 + 2.0 * c) / (2.0 * p * p)
}

/// Buyers' updated belief about the undisclosed pool when every seller best
/// responds to `θ̂`: `clamp(T(θ̂)/2, 0, 1/2)`.
pub fn belief_update(policy: &SignalPolicy, theta_hat: f64) -> f64 {
    truncated_mean_below(disclosure_threshold(policy, theta_hat))
}

/// Fee at or below which full disclosure (`q = 0`) is self-consistent: the
/// lemon's reservation `(1−p²)/2`.
pub fn full_disclosure_fee_bound(p: f64) -> f64 {
    (1.0 - p * p) / 2.0
}

/// Fee at or above which no disclosure (`q = 1`) is self-consistent: `(1−p+p²)/2`.
pub fn no_disclosure_fee_bound(p: f64) -> f64 {
    (1.0 - p + p * p) / 2.0
}

/// The (possibly unstable) solution of the linear fixed-point equation
/// `θ̂ = (1 − p² − 2c) / (2p(1 − 2p))`, unclamped. `None` at the singular
/// points `p ∈ {0, 1/2}`.
pub fn linear_fixed_point(policy: &SignalPolicy) -> Option<f64> {
    let SignalPolicy { p, c } = *policy;
    if p == 0.0 || p == 0.5 {
        return None;
    }
    Some((1.0 - p * p - 2.0 * c) / (2.0 * p * (1.0 - 2.0 * p)))
}

pub fn noisy_equilibrium(policy: &SignalPolicy, selection: Selection) -> Result<DisclosureEquilibrium> {
    let SignalPolicy { p, c } = validate_policy(*policy)?;

    if p == 0.0 {
        return Ok(DisclosureEquilibrium::from_cutoff(p, c, 1.0, Regime::DegenerateP0)
            .with_note("uninformative certificate: no type pays for it".to_string()));
    }

    if p > 0.5 {
        // unique: the best-response map contracts with slope 1/(2p) < 1
        let raw = linear_fixed_point(policy).expect("p is not singular here");
        let theta_hat = raw.clamp(0.0, 0.5);
        let q = 2.0 * theta_hat;
        return Ok(DisclosureEquilibrium::from_cutoff(p, c, q, Regime::from_cutoff(q)));
    }

    let all_ok = c <= full_disclosure_fee_bound(p) + TOLERANCE;
    let none_ok = c >= no_disclosure_fee_bound(p) - TOLERANCE;
    let all = DisclosureEquilibrium::from_cutoff(p, c, 0.0, Regime::AllDiscloseCorner);
    let none = DisclosureEquilibrium::from_cutoff(p, c, 1.0, Regime::NoDisclosure);
    let pick_all = match selection {
        Selection::DmvPreferred => all_ok,
        Selection::Pessimistic => !none_ok,
    };
    let chosen = if pick_all { all } else { none };
    if !(all_ok && none_ok) {
        return Ok(chosen);
    }

    let note = if p == 0.5 {
        format!(
            "continuum of equilibria: every theta_hat in [0, 0.5] is self-consistent at c = 3/8; selected {}",
            chosen.regime
        )
    } else {
        let unstable = linear_fixed_point(policy)
            .expect("p is not singular here")
            .clamp(0.0, 0.5);
        format!(
            "multiple equilibria: all-disclose-corner, unstable interior theta_hat = {unstable:.12}, no-disclosure; selected {}",
            chosen.regime
        )
    };
    Ok(chosen.with_note(note))
}

/// Buyer's willingness to pay on seeing displayed quality `s`:
/// `p·s + (1−p)·E(θ | disclosed)`.
pub fn willingness_to_pay(s: f64, eq: &DisclosureEquilibrium) -> Result<f64> {
    check_unit("s", s)?;
    require_disclosed_pool(eq)?;
    Ok(eq.p * s + (1.0 - eq.p) * truncated_mean_above(eq.q))
}

/// Expected payment to a type-`θ₀` seller who buys a certificate, averaged
/// over the truthful and the fake draw.
pub fn expected_disclosure_payoff(theta0: f64, eq: &DisclosureEquilibrium) -> Result<f64> {
    check_unit("theta0", theta0)?;
    require_disclosed_pool(eq)?;
    Ok(gross_disclosure_value(eq.p, eq.theta_hat, theta0))
}

fn gross_disclosure_value(p: f64, theta_hat: f64, theta0: f64) -> f64 {
    (1.0 - p) * (1.0 + p + 2.0 * theta_hat) / 2.0 + p * p * theta0
}

fn require_disclosed_pool(eq: &DisclosureEquilibrium) -> Result<()> {
    if eq.q >= 1.0 {
        Err(MarketError::Undefined("no disclosed pool"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Disclose,
    NotDisclose,
}

/// Seller best response: disclose iff `W(θ₀) − c > θ̂`; indifference does not disclose.
///
/// The perfect-signal market is usually stated with the opposite weak
/// inequality. Ties have measure zero under the uniform prior, so both rules
/// produce the same equilibrium objects; this one is used everywhere.
pub fn disclosure_decision(theta0: f64, policy: &SignalPolicy, eq: &DisclosureEquilibrium) -> Decision {
    decide(theta0, policy, eq.theta_hat)
}

pub(crate) fn decide(theta0: f64, policy: &SignalPolicy, theta_hat: f64) -> Decision {
    if gross_disclosure_value(policy.p, theta_hat, theta0) - policy.c > theta_hat {
        Decision::Disclose
    } else {
        Decision::NotDisclose
    }
}
