//! Command-line front end. Every command renders its whole output into a
//! string first so the run manifest can checksum exactly what was emitted.
//!
//! Exit codes: 0 success, 1 I/O or replay mismatch, 2 invalid arguments,
//! 3 simulation did not converge.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::equilibrium::{noisy_equilibrium, Selection};
use crate::error::MarketError;
use crate::format::{fmt12, round_json};
use crate::model::{MarketParams, SignalPolicy};
use crate::optimizer::{self, fee_star_numeric, linspace_step, optimal_policy, profit_at, profit_curve};
use crate::simulator::{simulate_market, SimulationConfig};
use crate::unravel::{unravel_trace, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lemons", version, about = "Lemons market with noisy certification: equilibria, optimal fees, simulation")]
pub struct Cli {
    /// Write a run manifest (argument echo, version, output checksum) to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unraveling of the uncertified market, round by round.
    Unravel(UnravelArgs),
    /// Disclosure equilibrium for a signal policy.
    Eq(EqArgs),
    /// Optimal fee and profit over a grid of truth probabilities.
    Curve(CurveArgs),
    /// Monte Carlo simulation of the disclosure market.
    Simulate(SimulateArgs),
    /// Optimal fee and profit at one truth probability.
    Optimize(OptimizeArgs),
    /// Re-run a manifest and check that the output checksum matches.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct UnravelArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub pi: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_rounds: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectionArg {
    Dmv,
    Pessimistic,
}

#[derive(Debug, Args)]
pub struct EqArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = SelectionArg::Dmv)]
    pub selection: SelectionArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub p_from: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_to: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_step: f64,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Zero,
    Half,
    Both,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Half)]
    pub init: InitArg,
    /// Certificates drawn per disclosing seller.
    #[arg(long, default_value_t = 16)]
    pub draws: usize,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long)]
    pub numeric: bool,
    #[arg(long, default_value_t = optimizer::DEFAULT_RESOLUTION)]
    pub resolution: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest_file: PathBuf,
}

/// Everything a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, excluding `--manifest`.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// SHA-256 of the command's primary output (stdout, or the `--out` file).
    pub output_checksum: String,
}

struct Rendered {
    output: String,
    to_file: Option<PathBuf>,
    code: i32,
    note: String,
}

impl Rendered {
    fn ok(output: String) -> Self {
        Rendered { output, to_file: None, code: EXIT_OK, note: String::new() }
    }
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<MarketError> for Failure {
    fn from(e: MarketError) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { stdout: String::new(), stderr: text, code: e.exit_code() }
            } else {
                Outcome { stdout: text, stderr: String::new(), code: EXIT_OK }
            };
        }
    };

    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest_file);
    }

    let rendered = match dispatch(&cli.command) {
        Ok(r) => r,
        Err(Failure::Usage(msg)) => return fail(EXIT_USAGE, msg),
        Err(Failure::Io(msg)) => return fail(EXIT_IO, msg),
    };

    let mut stderr = rendered.note.clone();
    let stdout = match &rendered.to_file {
        Some(path) => {
            if let Err(e) = fs::write(path, &rendered.output) {
                return fail(EXIT_IO, format!("cannot write {}: {e}", path.display()));
            }
            String::new()
        }
        None => rendered.output.clone(),
    };

    if let Some(path) = &cli.manifest {
        let manifest = RunManifest {
            command: command_name(&cli.command).to_string(),
            args: strip_manifest_flag(&argv[1.min(argv.len())..]),
            seed: match &cli.command {
                Command::Simulate(s) => Some(s.seed),
                _ => None,
            },
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            output_checksum: checksum(rendered.output.as_bytes()),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        if let Err(e) = fs::write(path, text) {
            return fail(EXIT_IO, format!("cannot write manifest {}: {e}", path.display()));
        }
        stderr.push_str(&format!("manifest written to {}\n", path.display()));
    }

    Outcome { stdout, stderr, code: rendered.code }
}

fn fail(code: i32, msg: String) -> Outcome {
    Outcome { stdout: String::new(), stderr: format!("error: {msg}\n"), code }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Unravel(_) => "unravel",
        Command::Eq(_) => "eq",
        Command::Curve(_) => "curve",
        Command::Simulate(_) => "simulate",
        Command::Optimize(_) => "optimize",
        Command::Replay(_) => "replay",
    }
}

fn strip_manifest_flag(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--manifest" {
            skip = true;
        } else if !a.starts_with("--manifest=") {
            out.push(a.clone());
        }
    }
    out
}

fn dispatch(cmd: &Command) -> Result<Rendered, Failure> {
    match cmd {
        Command::Unravel(a) => cmd_unravel(a),
        Command::Eq(a) => cmd_eq(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Replay(_) => unreachable!("handled before dispatch"),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("output serializes");
    round_json(&mut v);
    serde_json::to_string_pretty(&v).expect("json renders") + "\n"
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, Failure> {
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Io(e.to_string())
}

fn cmd_unravel(a: &UnravelArgs) -> Result<Rendered, Failure> {
    let params = MarketParams::with_boundary(a.pi)?;
    let trace = unravel_trace(&params, a.tol, a.max_rounds)?;
    let output = match a.format {
        Format::Json => to_json(&json!({
            "pi": a.pi,
            "tol": a.tol,
            "max_rounds": a.max_rounds,
            "trace": trace,
        })),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["round", "cutoff", "buyer_offer"]).map_err(csv_err)?;
            for (n, (k, o)) in trace.cutoffs.iter().zip(&trace.buyer_offers).enumerate() {
                w.write_record([n.to_string(), fmt12(*k), fmt12(*o)]).map_err(csv_err)?;
            }
            let mut out = finish_csv(w)?;
            out.push_str(&format!(
                "# converged={} rounds={} limit={}\n",
                trace.converged,
                trace.rounds,
                fmt12(trace.limit)
            ));
            out
        }
    };
    Ok(Rendered::ok(output))
}

fn cmd_eq(a: &EqArgs) -> Result<Rendered, Failure> {
    let policy = SignalPolicy::new(a.p, a.c)?;
    let selection = match a.selection {
        SelectionArg::Dmv => Selection::DmvPreferred,
        SelectionArg::Pessimistic => Selection::Pessimistic,
    };
    let eq = noisy_equilibrium(&policy, selection)?;
    let output = match a.format {
        Format::Json => to_json(&eq),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["p", "c", "theta_hat", "q", "e_disclosed", "regime", "selection_note"])
                .map_err(csv_err)?;
            w.write_record([
                fmt12(eq.p),
                fmt12(eq.c),
                fmt12(eq.theta_hat),
                fmt12(eq.q),
                fmt12(eq.e_disclosed),
                eq.regime.to_string(),
                eq.selection_note.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
            finish_csv(w)?
        }
    };
    Ok(Rendered::ok(output))
}

fn cmd_curve(a: &CurveArgs) -> Result<Rendered, Failure> {
    if !(a.p_from > 0.0 && a.p_from <= a.p_to && a.p_to <= 1.0) {
        return Err(Failure::Usage("need 0 < p-from ≤ p-to ≤ 1".into()));
    }
    if !(a.p_step > 0.0) {
        return Err(Failure::Usage("p-step must be > 0".into()));
    }
    let grid = linspace_step(a.p_from, a.p_to, a.p_step);
    let curve = profit_curve(&grid, Default::default())?;
    let mut w = csv_writer();
    w.write_record(["p", "c_star", "profit_star", "q_at_optimum", "regime"]).map_err(csv_err)?;
    for pt in &curve {
        w.write_record([
            fmt12(pt.p),
            fmt12(pt.c_star),
            fmt12(pt.profit_star),
            fmt12(pt.q_at_optimum),
            pt.regime.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let output = finish_csv(w)?;
    let note = match &a.out {
        Some(path) => format!("wrote {} rows to {}\n", curve.len(), path.display()),
        None => String::new(),
    };
    Ok(Rendered { output, to_file: a.out.clone(), code: EXIT_OK, note })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Rendered, Failure> {
    let policy = SignalPolicy::new(a.p, a.c)?;
    let (initial, probe) = match a.init {
        InitArg::Zero => (0.0, false),
        InitArg::Half => (0.5, false),
        InitArg::Both => (0.0, true),
    };
    let config = SimulationConfig {
        n_sellers: a.n,
        seed: a.seed,
        max_iterations: a.iters,
        tol: a.tol,
        initial_theta_hat: initial,
        signal_draws_per_seller: a.draws,
        probe_both_starts: probe,
        ..SimulationConfig::default()
    };
    let report = simulate_market(&policy, &config)?;
    let all_converged = report.converged && report.attractors.iter().all(|r| r.converged);
    let (code, note) = if all_converged {
        (EXIT_OK, String::new())
    } else {
        (EXIT_NO_CONVERGENCE, format!("best-response dynamics did not converge within {} iterations\n", a.iters))
    };
    Ok(Rendered { output: to_json(&report), to_file: None, code, note })
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<Rendered, Failure> {
    if !(a.p > 0.0 && a.p <= 1.0) {
        return Err(Failure::Usage("p must be in (0, 1]".into()));
    }
    let pt = optimal_policy(a.p)?;
    let mut out = json!({
        "p": pt.p,
        "c_star": pt.c_star,
        "profit_star": pt.profit_star,
        "q_at_optimum": pt.q_at_optimum,
        "regime": pt.regime,
    });
    if a.numeric {
        let c = fee_star_numeric(a.p, a.resolution)?;
        let obj = out.as_object_mut().expect("object literal");
        obj.insert("resolution".into(), json!(a.resolution));
        obj.insert("c_star_numeric".into(), json!(c));
        obj.insert("profit_star_numeric".into(), json!(profit_at(a.p, c)?));
        obj.insert("discrepancy".into(), json!((c - pt.c_star).abs()));
    }
    Ok(Rendered::ok(to_json(&out)))
}

fn replay(path: &PathBuf) -> Outcome {
    let manifest: RunManifest = match fs::read_to_string(path)
        .map_err(|e| e.to_string())
        .and_then(|s| serde_json::from_str(&s).map_err(|e| e.to_string()))
    {
        Ok(m) => m,
        Err(e) => return fail(EXIT_USAGE, format!("cannot read manifest {}: {e}", path.display())),
    };
    let mut argv = vec!["lemons".to_string()];
    argv.extend(manifest.args.iter().cloned());
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) if !matches!(cli.command, Command::Replay(_)) => cli,
        _ => return fail(EXIT_USAGE, "manifest does not hold a replayable command".into()),
    };
    let rendered = match dispatch(&cli.command) {
        Ok(r) => r,
        Err(Failure::Usage(m)) | Err(Failure::Io(m)) => return fail(EXIT_USAGE, m),
    };
    let actual = checksum(rendered.output.as_bytes());
    if actual == manifest.output_checksum {
        Outcome {
            stdout: format!("checksum ok {actual}\n"),
            stderr: String::new(),
            code: EXIT_OK,
        }
    } else {
        fail(EXIT_IO, format!("checksum mismatch: manifest {} vs replay {actual}", manifest.output_checksum))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_flag_is_stripped() {
        let args: Vec<String> = ["eq", "--manifest", "m.json", "--p", "1", "--manifest=x", "--c", "0.2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(strip_manifest_flag(&args), vec!["eq", "--p", "1", "--c", "0.2"]);
    }

    #[test]
    fn checksum_is_sha256() {
        assert_eq!(checksum(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
