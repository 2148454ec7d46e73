//! `relbc`: closed-form analytics, block-string counting, single protocol
//! runs and Monte Carlo sweeps.
//!
//! Exit codes: 0 ok or accepted, 1 internal failure (including a counting
//! mismatch under `--verify`), 2 usage, 3 enumeration bound exceeded,
//! 4 protocol run aborted, 5 a sweep cell failed.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use relbc_core::experiment::{run_experiment, write_csv, write_json, ExperimentError, ExperimentSpec};
use relbc_core::measurement::composite_error;
use relbc_core::parity::{
    alpha, block_string_total_trig, count_block_strings_closed, enumerate_block_strings,
    p_acc_fixed, p_acc_scattered, p_fixed_block, pc_parity_block_bound, pc_parity_plain,
    BlockCensus, ParityError, DEFAULT_ENUM_BOUND,
};
use relbc_core::protocol::{
    run_bit_commitment, run_coin_toss, CoinTossOptions, Localization, ProtocolConfig,
    ProtocolError, Session, StrategyA, StrategyB, StrategyPeer,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BOUND: u8 = 3;
const EXIT_ABORTED: u8 = 4;
const EXIT_SWEEP_FAILED: u8 = 5;

#[derive(Parser)]
#[command(name = "relbc", version, about = "Relativistic quantum bit commitment and coin tossing simulator")]
struct Cli {
    /// Print progress and the effective configuration to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every closed-form probability for one (N, k).
    Analytic(AnalyticArgs),
    /// Count even and odd block strings, optionally checking by enumeration.
    Count(CountArgs),
    /// Run one bit commitment or coin toss and write its transcript.
    Run(RunArgs),
    /// Run a Monte Carlo campaign from a JSON spec.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Tail parameter; adds the tailed completion probability.
    #[arg(long)]
    xi: Option<f64>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Cross-check the closed form against exhaustive enumeration.
    #[arg(long)]
    verify: bool,
    /// Largest N·k the enumeration may visit.
    #[arg(long, default_value_t = DEFAULT_ENUM_BOUND)]
    enum_bound: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Protocol {
    /// Bit commitment.
    Bc,
    /// Coin toss.
    Ct,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArgA {
    Honest,
    DelayBlocks,
    EarlyGuess,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArgB {
    Honest,
    EarlyGuess,
    SendBack,
}

#[derive(Args)]
struct ProtocolOverrides {
    /// JSON file with protocol parameters; unknown keys are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    delta_tau: Option<f64>,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    tau_ch: Option<f64>,
    /// Use tailed states with this tail parameter.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    tau_d: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    enum_bound: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    protocol: Protocol,
    #[command(flatten)]
    overrides: ProtocolOverrides,
    #[arg(long, value_enum, default_value_t = StrategyArgA::Honest)]
    strategy_a: StrategyArgA,
    #[arg(long, value_enum, default_value_t = StrategyArgB::Honest)]
    strategy_b: StrategyArgB,
    /// Blocks withheld by `--strategy-a delay-blocks`.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    delay_blocks: Vec<usize>,
    /// Coin toss: disclose everything in two phases instead of four.
    #[arg(long)]
    no_half_disclosure: bool,
    /// Stream index of the run under the master seed.
    #[arg(long, default_value_t = 0)]
    run_index: u64,
    /// Transcript path (line-delimited JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; all cores when omitted.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Failure {
        Failure { code: EXIT_USAGE, error: error.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Failure {
        Failure { code: EXIT_FAILURE, error }
    }
}

fn parity_failure(e: ParityError) -> Failure {
    match e {
        ParityError::EnumerationBound { .. } => Failure { code: EXIT_BOUND, error: e.into() },
        ParityError::InvalidParameters { .. } => Failure::usage(e),
        other => other_failure(other),
    }
}

fn other_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_FAILURE, error: e.into() }
}

fn protocol_failure(e: ProtocolError) -> Failure {
    match e {
        ProtocolError::InvalidConfig(_) | ProtocolError::UnsupportedStrategy(_) => Failure::usage(e),
        ProtocolError::Parity(p) => parity_failure(p),
        other => other_failure(other),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let result = match cli.command {
        Command::Analytic(a) => analytic(a, &mut stdout),
        Command::Count(c) => count(c, &mut stdout),
        Command::Run(r) => run(r, cli.verbose, &mut stdout),
        Command::Sweep(s) => sweep(s, cli.verbose, &mut stdout),
    };
    let _ = stdout.flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn analytic(args: AnalyticArgs, out: &mut impl Write) -> Result<u8, Failure> {
    let (n, k) = (args.n as usize, args.k as usize);
    let nk = n * k;
    if let Some(xi) = args.xi {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Failure::usage(anyhow!("--xi must be positive, got {xi}")));
        }
    }
    let a = alpha(n, k).map_err(parity_failure)?;
    let bound = pc_parity_block_bound(n, k).map_err(parity_failure)?;
    let exact = BlockCensus::new(n, k).map_err(parity_failure)?.exact_success(0.5);
    let mut rows: Vec<(String, String)> = vec![
        ("N".into(), n.to_string()),
        ("k".into(), k.to_string()),
        ("single-state identification".into(), fmt(1.0 - composite_error(0.5, 0.0, 0.5))),
        ("plain parity guess 1/2 + 2^-(N+1)".into(), fmt(pc_parity_plain(n))),
        ("block parity bound 1/2 + 2^-(alpha N k)".into(), fmt(bound)),
        ("exact block parity guess".into(), fmt(exact)),
        ("alpha(N, k)".into(), fmt(a)),
        ("fixed-block identification 1 - 2^-k".into(), fmt(p_fixed_block(k))),
        ("fixed-block acceptance (1 - 2^-k)^N".into(), fmt(p_acc_fixed(n, k))),
        ("scattered-block acceptance".into(), fmt(p_acc_scattered(n, k).map_err(parity_failure)?)),
        ("delay escape, one block 2^-k".into(), fmt(0.5f64.powi(k as i32))),
    ];
    if let Some(xi) = args.xi {
        rows.push((
            format!("tailed completion (1 - e^-xi)^(N k), xi = {xi}"),
            fmt((1.0 - (-xi).exp()).powi(nk as i32)),
        ));
    }
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    for (label, value) in &rows {
        writeln!(out, "{label:<width$}  {value}").context("writing output")?;
    }
    writeln!(
        out,
        "note: at k = 1 the block bound gives 1/2 + 2^-N, twice the plain advantage; \
         the exact guess is the reference and may exceed the block bound for k > 1"
    )
    .context("writing output")?;
    Ok(0)
}

fn fmt(x: f64) -> String {
    format!("{x:.12}").trim_end_matches('0').trim_end_matches('.').to_string()
}

fn count(args: CountArgs, out: &mut impl Write) -> Result<u8, Failure> {
    let (n, k) = (args.n as usize, args.k as usize);
    let counts = count_block_strings_closed(n, k).map_err(parity_failure)?;
    let a = alpha(n, k).map_err(parity_failure)?;
    writeln!(out, "even   {}", counts.even).context("writing output")?;
    writeln!(out, "odd    {}", counts.odd).context("writing output")?;
    writeln!(out, "total  {}", counts.total()).context("writing output")?;
    writeln!(out, "alpha  {}", fmt(a)).context("writing output")?;
    writeln!(out, "trig   {}", block_string_total_trig(n, k)).context("writing output")?;
    if args.verify {
        let brute = enumerate_block_strings(n, k, args.enum_bound).map_err(parity_failure)?;
        if brute != counts {
            return Err(other_failure(anyhow!(
                "enumeration gives even {} odd {}, closed form even {} odd {}",
                brute.even,
                brute.odd,
                counts.even,
                counts.odd
            )));
        }
        writeln!(out, "verify ok ({} strings enumerated)", 1u64 << (n * k)).context("writing output")?;
    }
    Ok(0)
}

fn read_json(path: &Path) -> Result<Map<String, Value>, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::usage)?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::usage(anyhow!("{}: expected a JSON object", path.display()))),
        Err(e) => Err(Failure::usage(anyhow!("{}: {e}", path.display()))),
    }
}

/// Defaults, then file values, then flags.
fn protocol_config(o: &ProtocolOverrides) -> Result<ProtocolConfig, Failure> {
    let Value::Object(mut merged) = serde_json::to_value(ProtocolConfig::default()).map_err(other_failure)? else {
        unreachable!("structs serialize to objects");
    };
    if let Some(path) = &o.config {
        let file = read_json(path)?;
        for (key, value) in file {
            if merged.contains_key(&key) {
                merged.insert(key, value);
            }
        }
    }
    let mut c: ProtocolConfig = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Failure::usage(anyhow!("invalid protocol config: {e}")))?;
    if let Some(v) = o.n {
        c.n = v;
    }
    if let Some(v) = o.k {
        c.k = v;
    }
    if let Some(v) = o.delta_tau {
        c.delta_tau = v;
    }
    if let Some(v) = o.tau0 {
        c.tau0 = v;
    }
    if let Some(v) = o.tau_ch {
        c.tau_ch = v;
    }
    if let Some(xi) = o.xi {
        c.localization = Localization::Tailed { xi };
    }
    if o.tau_d.is_some() {
        c.tau_d = o.tau_d;
    }
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if let Some(v) = o.enum_bound {
        c.enum_bound = v;
    }
    c.validate().map_err(protocol_failure)?;
    Ok(c)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(other_failure)
}

fn run(args: RunArgs, verbose: u8, out: &mut impl Write) -> Result<u8, Failure> {
    let config = protocol_config(&args.overrides)?;
    if verbose > 0 {
        eprintln!("config: {}", serde_json::to_string(&config).map_err(other_failure)?);
    }
    let session = Session::new(config).map_err(protocol_failure)?;
    let (transcript, verdict, mut lines) = match args.protocol {
        Protocol::Bc => {
            let a = match args.strategy_a {
                StrategyArgA::Honest => StrategyA::Honest,
                StrategyArgA::DelayBlocks => StrategyA::DelayBlocks { blocks: args.delay_blocks.clone() },
                StrategyArgA::EarlyGuess => {
                    return Err(Failure::usage(anyhow!("early-guess is a receiver strategy; use it with --strategy-b")))
                }
            };
            let b = match args.strategy_b {
                StrategyArgB::Honest => StrategyB::Honest,
                StrategyArgB::EarlyGuess => StrategyB::EarlyGuess,
                StrategyArgB::SendBack => {
                    return Err(Failure::usage(anyhow!("send-back only applies to the coin toss")))
                }
            };
            if args.no_half_disclosure {
                return Err(Failure::usage(anyhow!("--no-half-disclosure only applies to the coin toss")));
            }
            let r = run_bit_commitment(&session, &a, b, args.run_index).map_err(protocol_failure)?;
            let mut lines = vec![format!("committed {}", r.committed)];
            if let Some(g) = &r.early_guess {
                lines.push(guess_line(g));
            }
            (r.transcript, r.verdict, lines)
        }
        Protocol::Ct => {
            let a = match args.strategy_a {
                StrategyArgA::Honest => StrategyPeer::Honest,
                StrategyArgA::EarlyGuess => StrategyPeer::EarlyGuess,
                StrategyArgA::DelayBlocks => {
                    return Err(Failure::usage(anyhow!("delay-blocks only applies to the bit commitment")))
                }
            };
            let b = match args.strategy_b {
                StrategyArgB::Honest => StrategyPeer::Honest,
                StrategyArgB::EarlyGuess => StrategyPeer::EarlyGuess,
                StrategyArgB::SendBack => StrategyPeer::SendBack,
            };
            let options = CoinTossOptions { half_disclosure: !args.no_half_disclosure, ..CoinTossOptions::default() };
            let r = run_coin_toss(&session, a, b, options, args.run_index).map_err(protocol_failure)?;
            let mut lines = vec![format!("parity_a {}", r.parity_a)];
            lines.push(match r.parity_b {
                Some(p) => format!("parity_b {p}"),
                None => "parity_b none".to_string(),
            });
            if let Some(w) = r.winner {
                lines.push(format!("winner {w}"));
            }
            lines.extend(r.early_guesses.iter().map(guess_line));
            (r.transcript, r.verdict, lines)
        }
    };
    lines.insert(0, verdict.to_string());
    if let Some(path) = &args.out {
        write_file(path, transcript.to_jsonl().as_bytes())?;
        lines.push(format!("transcript {}", path.display()));
    }
    for line in lines {
        writeln!(out, "{line}").context("writing output")?;
    }
    Ok(if verdict.is_accepted() { 0 } else { EXIT_ABORTED })
}

fn guess_line(g: &relbc_core::protocol::EarlyGuess) -> String {
    match g.guess {
        Some(guess) => format!(
            "guess {} parity {} confidence {} correct {}",
            g.guesser,
            guess.parity,
            fmt(guess.confidence),
            g.correct()
        ),
        None => format!("guess {} inconsistent evidence", g.guesser),
    }
}

fn sweep(args: SweepArgs, verbose: u8, out: &mut impl Write) -> Result<u8, Failure> {
    let file = read_json(&args.config)?;
    let mut spec: ExperimentSpec = serde_json::from_value(Value::Object(file))
        .map_err(|e| Failure::usage(anyhow!("invalid experiment spec: {e}")))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    let cells = run_experiment(&spec, args.jobs.map(|j| j as usize)).map_err(|e| match e {
        ExperimentError::InvalidSpec(_) | ExperimentError::EmptyGrid(_) => Failure::usage(e),
        ExperimentError::Protocol(p) => protocol_failure(p),
        ExperimentError::Parity(p) => parity_failure(p),
        other => other_failure(other),
    })?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => write_csv(&cells, &mut buf),
        Format::Json => write_json(&cells, &mut buf),
    }
    .map_err(other_failure)?;
    match &args.out {
        Some(path) => write_file(path, &buf)?,
        None => out.write_all(&buf).context("writing output")?,
    }
    let failed = cells.iter().filter(|c| !c.pass).count();
    if verbose > 0 || failed > 0 {
        eprintln!("{} cells, {failed} failed", cells.len());
    }
    Ok(if failed == 0 { 0 } else { EXIT_SWEEP_FAILED })
}
