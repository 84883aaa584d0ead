//! Surplus and misinformation accounting for a disclosure outcome.
//!
//! Welfare is reported as a decomposition; no aggregate welfare function is
//! assumed. Every seller is assumed to trade at the buyer's willingness to
//! pay, so `trade_volume` is 1 in both the analytic and simulated paths.
//! Misinformation is the mean absolute gap `|w(s) − θ|` between what a buyer
//! pays for a certified car and its true quality.

use serde::Serialize;

use crate::equilibrium::DisclosureEquilibrium;
use crate::model::truncated_mean_above;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    pub dmv_profit: f64,
    /// Mean payment received per seller (disclosed and undisclosed).
    pub seller_surplus_gross: f64,
    pub certification_spend: f64,
    /// `E|w(s) − θ|` over disclosing sellers and their signal draws; 0 if nobody discloses.
    pub buyer_misinformation: f64,
    /// Share of all sellers carrying a fake certificate: `(1−p) × disclosure mass`.
    pub fake_signal_rate: f64,
    pub trade_volume: f64,
}

/// Anything welfare can be computed from: an analytic equilibrium or a finished simulation.
pub trait WelfareSource {
    fn welfare(&self) -> WelfareReport;
}

pub fn welfare_report<S: WelfareSource + ?Sized>(source: &S) -> WelfareReport {
    source.welfare()
}

impl WelfareSource for DisclosureEquilibrium {
    fn welfare(&self) -> WelfareReport {
        let (p, c, q, theta_hat) = (self.p, self.c, self.q, self.theta_hat);
        let mass = 1.0 - q;
        let spend = c * mass;
        if mass <= 0.0 {
            return WelfareReport {
                dmv_profit: spend,
                seller_surplus_gross: theta_hat,
                certification_spend: spend,
                buyer_misinformation: 0.0,
                fake_signal_rate: 0.0,
                trade_volume: 1.0,
            };
        }

        // ∫_q^1 W(θ) dθ + q·θ̂ with W(θ) = (1−p)(1+p+2θ̂)/2 + p²θ
        let disclosed_pay = mass * (1.0 - p) * (1.0 + p + 2.0 * theta_hat) / 2.0 + p * p * (1.0 - q * q) / 2.0;
        let surplus = disclosed_pay + q * theta_hat;

        let pool_mean = truncated_mean_above(q);
        let shift = (1.0 - p) * pool_mean;
        // true certificate: (1−p)|m − θ| with θ ~ U(q,1) centred on m
        let true_gap = (1.0 - p) * mass / 4.0;
        // fake certificate: |p·r + shift − θ| with r ~ U(0,1) independent of θ
        let fake_gap = mean_abs_diff_uniform((0.0, p), (q - shift, 1.0 - shift));
        let misinformation = p * true_gap + (1.0 - p) * fake_gap;

        WelfareReport {
            dmv_profit: spend,
            seller_surplus_gross: surplus,
            certification_spend: spend,
            buyer_misinformation: misinformation,
            fake_signal_rate: (1.0 - p) * mass,
            trade_volume: 1.0,
        }
    }
}

/// `E|X − Y|` for independent `X ~ U(a)` and `Y ~ U(b)` given as `(lo, hi)`
/// intervals. Degenerate (zero-width) intervals are treated as point masses.
pub fn mean_abs_diff_uniform(a: (f64, f64), b: (f64, f64)) -> f64 {
    const EPS: f64 = 1e-9;
    let (la, lb) = (a.1 - a.0, b.1 - b.0);
    match (la < EPS, lb < EPS) {
        (true, true) => ((a.0 + a.1) / 2.0 - (b.0 + b.1) / 2.0).abs(),
        (true, false) => mean_abs_dev_from_point((a.0 + a.1) / 2.0, b),
        (false, true) => mean_abs_dev_from_point((b.0 + b.1) / 2.0, a),
        (false, false) => {
            // ∂²/∂x∂y of |x−y|³/6 is −|x−y|
            let g = |x: f64, y: f64| (x - y).abs().powi(3) / 6.0;
            (g(a.0, b.1) + g(a.1, b.0) - g(a.1, b.1) - g(a.0, b.0)) / (la * lb)
        }
    }
}

fn mean_abs_dev_from_point(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if x <= lo {
        (lo + hi) / 2.0 - x
    } else if x >= hi {
        x - (lo + hi) / 2.0
    } else {
        ((x - lo).powi(2) + (hi - x).powi(2)) / (2.0 * (hi - lo))
    }
}
