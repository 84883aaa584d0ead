//! Discrete-population Monte Carlo oracle for the disclosure game.
//!
//! A finite population of sellers with `θᵢ ~ U(0,1)` repeatedly best-responds
//! to the buyers' current belief about the undisclosed pool; the belief is
//! then reset to the empirical mean of the nondisclosers (0 when everyone
//! discloses). Disclosing sellers are then issued certificates: the true
//! type with probability `p`, otherwise a fresh `U(0,1)` draw. Buyers pay
//! `w(s)`.
//!
//! Randomness comes from ChaCha8 streams keyed by seller index, with signal
//! draws addressed by word position, so every number depends only on
//! `(seed, seller, draw)` and never on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibrium::{decide, noisy_equilibrium, willingness_to_pay, Decision, DisclosureEquilibrium, Regime, Selection};
use crate::error::{MarketError, Result};
use crate::exec::{self, Execution, CHUNK};
use crate::model::{validate_policy, MarketParams, SignalPolicy};
use crate::unravel::UnravelingTrace;
use crate::welfare::{WelfareReport, WelfareSource};

const Z95: f64 = 1.959_963_984_540_054;
/// Word offset of the first signal draw within a seller's stream. Word 0..2
/// holds the seller's type.
const SIGNAL_WORD_OFFSET: u128 = 16;
/// Each draw consumes two `f64`s (coin and fake value), i.e. four 32-bit words.
const WORDS_PER_DRAW: u128 = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub n_sellers: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tol: f64,
    pub initial_theta_hat: f64,
    pub signal_draws_per_seller: usize,
    /// Also run the dynamics from `θ̂₀ = 0` and `θ̂₀ = 1/2` and report both attractors.
    /// Always done when `p ≤ 1/2`.
    pub probe_both_starts: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_sellers: 100_000,
            seed: 42,
            max_iterations: 10_000,
            tol: 1e-9,
            initial_theta_hat: 0.5,
            signal_draws_per_seller: 16,
            probe_both_starts: false,
            execution: Execution::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sellers < 100 {
            return Err(MarketError::validation("n_sellers", "n_sellers must be ≥ 100"));
        }
        if !(self.tol > 0.0) {
            return Err(MarketError::validation("tol", "tol must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(MarketError::validation("max_iterations", "max_iterations must be ≥ 1"));
        }
        if !(0.0..=0.5).contains(&self.initial_theta_hat) {
            return Err(MarketError::validation("initial_theta_hat", "initial_theta_hat must be in [0, 0.5]"));
        }
        if self.signal_draws_per_seller == 0 {
            return Err(MarketError::validation("signal_draws_per_seller", "need at least one signal draw"));
        }
        Ok(())
    }
}

fn seller_stream(seed: u64, seller: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(seller as u64);
    rng
}

/// Seller types `θᵢ ~ U(0,1)`, one per stream.
pub fn draw_population(n: usize, seed: u64, exec: Execution) -> Vec<f64> {
    exec::map_ranges(n, CHUNK, exec, |r| {
        r.map(|i| seller_stream(seed, i).random::<f64>()).collect::<Vec<_>>()
    })
    .concat()
}

/// A certificate for seller `i`'s `draw`-th signal: `(is_true, displayed)`.
fn certificate(seed: u64, seller: usize, draw: usize, theta: f64, p: f64) -> (bool, f64) {
    let mut rng = seller_stream(seed, seller);
    rng.set_word_pos(SIGNAL_WORD_OFFSET + draw as u128 * WORDS_PER_DRAW);
    let coin: f64 = rng.random();
    let fake: f64 = rng.random();
    if coin < p {
        (true, theta)
    } else {
        (false, fake)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct PoolTally {
    undisclosed: usize,
    undisclosed_sum: f64,
    undisclosed_sq: f64,
    max_undisclosed: f64,
    min_disclosed: f64,
}

impl PoolTally {
    fn merge(mut self, o: PoolTally) -> PoolTally {
        self.undisclosed += o.undisclosed;
        self.undisclosed_sum += o.undisclosed_sum;
        self.undisclosed_sq += o.undisclosed_sq;
        self.max_undisclosed = self.max_undisclosed.max(o.max_undisclosed);
        self.min_disclosed = self.min_disclosed.min(o.min_disclosed);
        self
    }
}

fn tally(types: &[f64], policy: &SignalPolicy, theta_hat: f64, exec: Execution) -> PoolTally {
    let empty = PoolTally {
        max_undisclosed: f64::NEG_INFINITY,
        min_disclosed: f64::INFINITY,
        ..PoolTally::default()
    };
    exec::map_ranges(types.len(), CHUNK, exec, |r| {
        types[r].iter().fold(empty, |mut t, &theta| {
            match decide(theta, policy, theta_hat) {
                Decision::Disclose => t.min_disclosed = t.min_disclosed.min(theta),
                Decision::NotDisclose => {
                    t.undisclosed += 1;
                    t.undisclosed_sum += theta;
                    t.undisclosed_sq += theta * theta;
                    t.max_undisclosed = t.max_undisclosed.max(theta);
                }
            }
            t
        })
    })
    .into_iter()
    .fold(empty, PoolTally::merge)
}

/// Where the best-response dynamics settled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsOutcome {
    pub initial_theta_hat: f64,
    /// Mean type of the sellers not disclosing at the final best response.
    pub theta_hat: f64,
    /// Share of sellers not disclosing.
    pub q: f64,
    pub iterations: usize,
    pub converged: bool,
    pub attractor: Regime,
    /// The last two belief iterates; equal on exact convergence.
    pub last_iterates: [f64; 2],
    /// True when every discloser has a higher type than every nondiscloser.
    pub up_set: bool,
    #[serde(skip)]
    undisclosed_sd: f64,
    /// Belief the reported disclosure set best-responds to.
    #[serde(skip)]
    decided_at: f64,
}

fn run_dynamics(types: &[f64], policy: &SignalPolicy, start: f64, config: &SimulationConfig) -> DynamicsOutcome {
    let n = types.len();
    let mut belief = start;
    let mut previous = start;
    let mut iterations = 0;
    let mut converged = false;
    let mut decided_at = belief;
    let mut last = tally(types, policy, belief, config.execution);
    while iterations < config.max_iterations {
        let next = if last.undisclosed == 0 {
            // nobody left undisclosed: skeptical off-path belief
            0.0
        } else {
            last.undisclosed_sum / last.undisclosed as f64
        };
        iterations += 1;
        previous = belief;
        belief = next;
        if (belief - previous).abs() < config.tol {
            converged = true;
            break;
        }
        decided_at = belief;
        last = tally(types, policy, belief, config.execution);
    }

    let q = last.undisclosed as f64 / n as f64;
    let attractor = match last.undisclosed {
        0 => Regime::AllDiscloseCorner,
        k if k == n => Regime::NoDisclosure,
        _ => Regime::Interior,
    };
    let undisclosed_sd = if last.undisclosed > 1 {
        let m = last.undisclosed as f64;
        let mean = last.undisclosed_sum / m;
        ((last.undisclosed_sq / m - mean * mean).max(0.0) * m / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    DynamicsOutcome {
        initial_theta_hat: start,
        theta_hat: belief,
        q,
        iterations,
        converged,
        attractor,
        last_iterates: [previous, belief],
        up_set: last.max_undisclosed < last.min_disclosed,
        undisclosed_sd,
        decided_at,
    }
}

fn check_dynamics_inputs(policy: &SignalPolicy, config: &SimulationConfig) -> Result<SignalPolicy> {
    let policy = validate_policy(*policy)?;
    config.validate()?;
    if policy.p == 0.0 {
        return Err(MarketError::validation("p", "dynamics need p > 0"));
    }
    Ok(policy)
}

/// Synchronous best-response dynamics from `config.initial_theta_hat`.
pub fn best_response_dynamics(policy: &SignalPolicy, config: &SimulationConfig) -> Result<DynamicsOutcome> {
    let policy = check_dynamics_inputs(policy, config)?;
    let types = draw_population(config.n_sellers, config.seed, config.execution);
    Ok(run_dynamics(&types, &policy, config.initial_theta_hat, config))
}

/// Realized payments to disclosing sellers in one type bin, against the
/// analytic expected payment of the same sellers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaymentBin {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub sellers: usize,
    pub mean_payment: f64,
    pub expected_payment: f64,
    /// 95% half-width of the mean payment residual.
    pub ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiHalfWidths {
    pub theta_hat: f64,
    pub q: f64,
    pub dmv_profit: f64,
    pub seller_surplus_gross: f64,
    pub buyer_misinformation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub p: f64,
    pub c: f64,
    pub n_sellers: usize,
    pub seed: u64,
    pub signal_draws_per_seller: usize,
    pub theta_hat_emp: f64,
    pub q_emp: f64,
    pub dmv_profit_emp: f64,
    pub theta_hat_analytic: f64,
    pub q_analytic: f64,
    pub dmv_profit_analytic: f64,
    pub abs_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub attractor: Regime,
    pub last_iterates: [f64; 2],
    pub up_set: bool,
    pub welfare: WelfareReport,
    pub ci_half_width: CiHalfWidths,
    pub payment_bins: Vec<PaymentBin>,
    pub attractors: Vec<DynamicsOutcome>,
}

impl WelfareSource for SimulationReport {
    fn welfare(&self) -> WelfareReport {
        self.welfare.clone()
    }
}

/// Bins of width 0.1 centred on 0.1, 0.2, …, 0.9.
const BIN_CENTRES: usize = 9;

fn bin_of(theta: f64) -> Option<usize> {
    let k = ((theta - 0.05) / 0.1).floor();
    (k >= 0.0 && (k as usize) < BIN_CENTRES).then_some(k as usize)
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sq += x * x;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sq += o.sq;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    fn sd(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let m = self.n as f64;
        let mean = self.sum / m;
        ((self.sq / m - mean * mean).max(0.0) * m / (m - 1.0)).sqrt()
    }

    fn ci(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            Z95 * self.sd() / (self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Default)]
struct PaymentTally {
    disclosed: usize,
    fake_draws: usize,
    payment: Moments,
    misinformation: Moments,
    bin_payment: [Moments; BIN_CENTRES],
    bin_expected: [Moments; BIN_CENTRES],
    bin_residual: [Moments; BIN_CENTRES],
}

impl PaymentTally {
    fn merge(mut self, o: PaymentTally) -> PaymentTally {
        self.disclosed += o.disclosed;
        self.fake_draws += o.fake_draws;
        self.payment.merge(&o.payment);
        self.misinformation.merge(&o.misinformation);
        for b in 0..BIN_CENTRES {
            self.bin_payment[b].merge(&o.bin_payment[b]);
            self.bin_expected[b].merge(&o.bin_expected[b]);
            self.bin_residual[b].merge(&o.bin_residual[b]);
        }
        self
    }
}

fn tally_payments(
    types: &[f64],
    policy: &SignalPolicy,
    dynamics: &DynamicsOutcome,
    config: &SimulationConfig,
) -> Result<PaymentTally> {
    let draws = config.signal_draws_per_seller;
    let eq = DisclosureEquilibrium::from_theta_hat(policy.p, policy.c, dynamics.theta_hat);
    let chunks = exec::map_ranges(types.len(), CHUNK, config.execution, |r| -> Result<PaymentTally> {
        let mut t = PaymentTally::default();
        for i in r {
            let theta = types[i];
            if decide(theta, policy, dynamics.decided_at) == Decision::NotDisclose {
                // undisclosed sellers are paid the pool mean
                t.payment.push(dynamics.theta_hat);
                continue;
            }
            t.disclosed += 1;
            let (mut pay, mut gap) = (0.0, 0.0);
            for d in 0..draws {
                let (truthful, s) = certificate(config.seed, i, d, theta, policy.p);
                t.fake_draws += usize::from(!truthful);
                let w = willingness_to_pay(s, &eq)?;
                pay += w;
                gap += (w - theta).abs();
            }
            let pay = pay / draws as f64;
            t.payment.push(pay);
            t.misinformation.push(gap / draws as f64);
            if let Some(b) = bin_of(theta) {
                let expected = crate::equilibrium::expected_disclosure_payoff(theta, &eq)?;
                t.bin_payment[b].push(pay);
                t.bin_expected[b].push(expected);
                t.bin_residual[b].push(pay - expected);
            }
        }
        Ok(t)
    });
    chunks
        .into_iter()
        .try_fold(PaymentTally::default(), |acc, t| Ok(acc.merge(t?)))
}

/// Runs the dynamics, issues certificates to disclosers and compares the
/// outcome with the analytic equilibrium under the regulator-preferred selection.
pub fn simulate_market(policy: &SignalPolicy, config: &SimulationConfig) -> Result<SimulationReport> {
    let policy = check_dynamics_inputs(policy, config)?;
    let types = draw_population(config.n_sellers, config.seed, config.execution);
    let dynamics = run_dynamics(&types, &policy, config.initial_theta_hat, config);

    let attractors = if policy.p <= 0.5 || config.probe_both_starts {
        [0.0, 0.5]
            .iter()
            .map(|&start| run_dynamics(&types, &policy, start, config))
            .collect()
    } else {
        Vec::new()
    };

    let payments = tally_payments(&types, &policy, &dynamics, config)?;
    let n = config.n_sellers as f64;
    let disclosed_share = payments.disclosed as f64 / n;
    let profit_emp = policy.c * disclosed_share;
    let analytic = noisy_equilibrium(&policy, Selection::DmvPreferred)?;

    let welfare = WelfareReport {
        dmv_profit: profit_emp,
        seller_surplus_gross: payments.payment.mean(),
        certification_spend: policy.c * disclosed_share,
        buyer_misinformation: payments.misinformation.mean(),
        fake_signal_rate: payments.fake_draws as f64 / (n * config.signal_draws_per_seller as f64),
        trade_volume: 1.0,
    };

    // A fixed point of a map with slope 1/(2p) inflates the sampling error of
    // the pool mean by 1/(1 − 1/(2p)).
    let feedback = if dynamics.attractor == Regime::Interior && policy.p > 0.5 {
        1.0 / (1.0 - 1.0 / (2.0 * policy.p))
    } else {
        1.0
    };
    let undisclosed = (dynamics.q * n).round();
    let theta_ci = if undisclosed >= 2.0 {
        feedback * Z95 * dynamics.undisclosed_sd / undisclosed.sqrt()
    } else {
        0.0
    };
    let q = dynamics.q;
    let q_ci = (Z95 * (q * (1.0 - q) / n).sqrt()).max(2.0 * theta_ci);
    let ci_half_width = CiHalfWidths {
        theta_hat: theta_ci,
        q: q_ci,
        dmv_profit: policy.c * q_ci,
        seller_surplus_gross: payments.payment.ci(),
        buyer_misinformation: payments.misinformation.ci(),
    };

    let payment_bins = (0..BIN_CENTRES)
        .filter(|&b| payments.bin_payment[b].n >= 2)
        .map(|b| PaymentBin {
            theta_lo: 0.05 + 0.1 * b as f64,
            theta_hi: 0.15 + 0.1 * b as f64,
            sellers: payments.bin_payment[b].n,
            mean_payment: payments.bin_payment[b].mean(),
            expected_payment: payments.bin_expected[b].mean(),
            ci_half_width: payments.bin_residual[b].ci(),
        })
        .collect();

    Ok(SimulationReport {
        p: policy.p,
        c: policy.c,
        n_sellers: config.n_sellers,
        seed: config.seed,
        signal_draws_per_seller: config.signal_draws_per_seller,
        theta_hat_emp: dynamics.theta_hat,
        q_emp: dynamics.q,
        dmv_profit_emp: profit_emp,
        theta_hat_analytic: analytic.theta_hat,
        q_analytic: analytic.q,
        dmv_profit_analytic: analytic.dmv_profit(),
        abs_error: (profit_emp - analytic.dmv_profit()).abs(),
        iterations: dynamics.iterations,
        converged: dynamics.converged,
        attractor: dynamics.attractor,
        last_iterates: dynamics.last_iterates,
        up_set: dynamics.up_set,
        welfare,
        ci_half_width,
        payment_bins,
        attractors,
    })
}

/// Empirical unraveling with a finite population: each round buyers offer the
/// mean type of the sellers still on the market and sellers with `πθ` above
/// the offer leave. `cutoffs[n]` is the highest type willing to stay after
/// round `n`; `converged` reports that the remaining set stopped shrinking.
pub fn simulate_unraveling(params: &MarketParams, rounds: usize, n_sellers: usize, seed: u64) -> Result<UnravelingTrace> {
    if params.is_boundary() {
        return Err(MarketError::validation("pi", "pi must be > 0.5"));
    }
    if n_sellers == 0 {
        return Err(MarketError::validation("n_sellers", "n_sellers must be ≥ 1"));
    }
    let mut types = draw_population(n_sellers, seed, Execution::default());
    types.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(types.len() + 1);
    prefix.push(0.0);
    for &t in &types {
        prefix.push(prefix.last().unwrap() + t);
    }

    let pi = params.pi();
    let mut remaining = types.len();
    let mut cutoffs = vec![1.0];
    let mut offers = Vec::with_capacity(rounds + 1);
    let mut converged = false;
    for _ in 0..rounds {
        if remaining == 0 {
            offers.push(0.0);
            cutoffs.push(0.0);
            converged = true;
            break;
        }
        let offer = prefix[remaining] / remaining as f64;
        offers.push(offer);
        let next = types[..remaining].partition_point(|&t| pi * t <= offer);
        cutoffs.push((offer / pi).min(1.0));
        if next == remaining {
            converged = true;
            break;
        }
        remaining = next;
    }
    offers.push(if remaining == 0 { 0.0 } else { prefix[remaining] / remaining as f64 });

    Ok(UnravelingTrace {
        rounds: cutoffs.len() - 1,
        limit: 0.0,
        converged,
        cutoffs,
        buyer_offers: offers,
    })
}
