//! Akerlof's lemons market with a certifying regulator.
//!
//! The crate computes disclosure equilibria when certificates are free,
//! costly, or noisy (true quality shown with probability `p`, a uniform fake
//! otherwise), the regulator's optimal fee and profit as functions of `p`,
//! and checks all of it against a seeded discrete-population simulation.

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod format;
pub mod model;
pub mod optimizer;
pub mod simulator;
pub mod unravel;
pub mod welfare;

pub use equilibrium::{
    costly_equilibrium, disclosure_decision, expected_disclosure_payoff, noisy_equilibrium, willingness_to_pay, Decision,
    DisclosureEquilibrium, Regime, Selection,
};
pub use error::{MarketError, Result};
pub use exec::Execution;
pub use model::{trade_payoffs, validate_policy, MarketParams, SellerType, SignalPolicy, TradePayoff};
pub use optimizer::{fee_star, fee_star_numeric, p_min_constant, profit_curve, profit_star, CurveRegime, PolicyCurvePoint};
pub use simulator::{best_response_dynamics, simulate_market, simulate_unraveling, SimulationConfig, SimulationReport};
pub use unravel::{free_disclosure_unravel, unravel_step, unravel_trace, UnravelingTrace};
pub use welfare::{welfare_report, WelfareReport};
