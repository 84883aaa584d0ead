//! The regulator's optimal fee `c*(p)` and profit `P*(p)`, in closed form and
//! by an independent golden-section search over the feasible fee interval.

use std::fmt;

use serde::Serialize;

use crate::equilibrium::{full_disclosure_fee_bound, no_disclosure_fee_bound, noisy_equilibrium, Selection};
use crate::error::{MarketError, Result};
use crate::exec::{self, Execution};
use crate::model::{check_unit, SignalPolicy, TOLERANCE};

pub const DEFAULT_RESOLUTION: f64 = 1e-9;

/// Truth probability below which the optimal fee switches from the interior
/// first-order condition to the full-disclosure corner: `(1+√13)/6`.
pub fn p_min_constant() -> f64 {
    (1.0 + 13f64.sqrt()) / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveRegime {
    Interior,
    Corner,
    Degenerate,
}

impl CurveRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveRegime::Interior => "interior",
            CurveRegime::Corner => "corner",
            CurveRegime::Degenerate => "degenerate",
        }
    }

    pub fn of(p: f64) -> Self {
        if p == 0.0 {
            CurveRegime::Degenerate
        } else if p >= p_min_constant() {
            CurveRegime::Interior
        } else {
            CurveRegime::Corner
        }
    }
}

impl fmt::Display for CurveRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyCurvePoint {
    pub p: f64,
    pub c_star: f64,
    pub profit_star: f64,
    pub q_at_optimum: f64,
    pub regime: CurveRegime,
}

pub fn fee_star(p: f64) -> Result<f64> {
    check_unit("p", p)?;
    Ok(match CurveRegime::of(p) {
        CurveRegime::Interior => (1.0 - p + p * p) / 4.0,
        CurveRegime::Corner => full_disclosure_fee_bound(p),
        CurveRegime::Degenerate => 0.0,
    })
}

pub fn profit_star(p: f64) -> Result<f64> {
    check_unit("p", p)?;
    Ok(match CurveRegime::of(p) {
        CurveRegime::Interior => {
            let a = 1.0 - p + p * p;
            a * a / (8.0 * p * (2.0 * p - 1.0))
        }
        CurveRegime::Corner => full_disclosure_fee_bound(p),
        CurveRegime::Degenerate => 0.0,
    })
}

/// Nondisclosure mass at the optimal fee.
pub fn q_star(p: f64) -> Result<f64> {
    check_unit("p", p)?;
    Ok(match CurveRegime::of(p) {
        CurveRegime::Interior => {
            let q = (1.0 + p - 3.0 * p * p) / (2.0 * p * (1.0 - 2.0 * p));
            // the numerator vanishes at p_min; drop its rounding residue
            if q.abs() < TOLERANCE {
                0.0
            } else {
                q.clamp(0.0, 1.0)
            }
        }
        CurveRegime::Corner => 0.0,
        CurveRegime::Degenerate => 1.0,
    })
}

pub fn optimal_policy(p: f64) -> Result<PolicyCurvePoint> {
    Ok(PolicyCurvePoint {
        p,
        c_star: fee_star(p)?,
        profit_star: profit_star(p)?,
        q_at_optimum: q_star(p)?,
        regime: CurveRegime::of(p),
    })
}

/// Fees for which the nondisclosure cutoff stays in `[0, 1]`. Outside this
/// interval the profit is either increasing in `c` (below) or zero (above).
pub fn feasible_fee_interval(p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(MarketError::validation("p", "p must be in (0, 1]"));
    }
    let a = full_disclosure_fee_bound(p);
    let b = no_disclosure_fee_bound(p);
    Ok((a.min(b), a.max(b)))
}

/// Regulator revenue at fee `c` under the regulator-preferred equilibrium.
pub fn profit_at(p: f64, c: f64) -> Result<f64> {
    let policy = SignalPolicy::new(p, c)?;
    Ok(noisy_equilibrium(&policy, Selection::DmvPreferred)?.dmv_profit())
}

/// Numeric counterpart of [`fee_star`]: maximizes `c·(1 − q(p, c))` over the
/// feasible fee interval by golden-section search.
pub fn fee_star_numeric(p: f64, resolution: f64) -> Result<f64> {
    if !(resolution > 0.0) {
        return Err(MarketError::validation("resolution", "resolution must be > 0"));
    }
    let (lo, hi) = feasible_fee_interval(p)?;
    if !(hi >= lo) {
        return Err(MarketError::Search(format!("empty feasible fee range at p = {p}")));
    }
    let objective = |c: f64| profit_at(p, c).unwrap_or(f64::NEG_INFINITY);
    let inner = golden_section_max(&objective, lo, hi, resolution);

    // the optimum may sit on an endpoint of the bracket
    let best = [inner, lo, hi]
        .into_iter()
        .map(|c| (c, objective(c)))
        .fold((inner, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best });
    Ok(best.0)
}

/// Golden-section search for the maximizer of a unimodal `f` on `[a, b]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// Optimal policy at every grid value. The grid must be ascending within `[0, 1]`.
pub fn profit_curve(p_grid: &[f64], exec: Execution) -> Result<Vec<PolicyCurvePoint>> {
    for &p in p_grid {
        check_unit("p", p)?;
    }
    if p_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(MarketError::validation("p_grid", "grid must be sorted ascending"));
    }
    exec::map(p_grid, exec, |&p| optimal_policy(p)).into_iter().collect()
}

/// `from, from+step, …` up to `to` inclusive (with a small slack for rounding),
/// computed as `from + i·step` to avoid drift.
pub fn linspace_step(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| from + i as f64 * step).map(|p| p.min(to)).collect()
}
