//! Seeded Monte Carlo campaigns over parameter grids.
//!
//! A spec names a scenario, a grid and a trial count. Every grid cell is
//! run independently, each trial on its own stream
//! `rng::stream(seed, cell_key, trial)`. The cell key hashes every
//! parameter except `N`, so cells differing only in `N` see common random
//! numbers. Success counts are integer sums, so results do not depend on
//! the number of worker threads.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurement::{
    composite_error, helstrom_error, sample_detection, GammaOperator, MeasurementError, PriorPair,
};
use crate::parity::{pc_parity_block_bound, pc_parity_plain, BlockCensus, ParityError};
use crate::protocol::{
    mirror_escape_probability, run_bit_commitment_with_rng, run_coin_toss_with_rng,
    CoinTossOptions, Localization, ProtocolConfig, ProtocolError, Session, StrategyA, StrategyB,
    StrategyPeer, Verdict,
};
use crate::rng::{stream, DEFAULT_SEED};
use crate::wavepacket::Window;
use crate::Bit;

/// Schema tag written at the top of every CSV and JSON report.
pub const SCHEMA: &str = "relbc-sweep/1";

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("grid dimension `{0}` is empty")]
    EmptyGrid(&'static str),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Parity(#[from] ParityError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error("could not build worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Guess the internal bit of one state at the disclosure horizon.
    Identification,
    /// Honest commitment; B guesses the parity at the disclosure horizon.
    ParityGuess,
    /// A delays `m` whole blocks; success is B accepting.
    CheatDetection,
    /// Honest commitment; success is acceptance of the committed bit.
    BcHonest,
    /// Honest coin toss; success is completion.
    CtHonest,
    /// B reflects A's states; success is A aborting.
    CtSendback,
    /// Honest commitment with tailed states; success is completion.
    TailedCompletion,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Identification => "identification",
            Scenario::ParityGuess => "parity_guess",
            Scenario::CheatDetection => "cheat_detection",
            Scenario::BcHonest => "bc_honest",
            Scenario::CtHonest => "ct_honest",
            Scenario::CtSendback => "ct_sendback",
            Scenario::TailedCompletion => "tailed_completion",
        }
    }
}

/// Parameter lists. An omitted dimension takes a single default value; a
/// dimension given as `[]` is an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub k: Option<Vec<usize>>,
    /// Tail parameters; omitted means compact states.
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    #[serde(default)]
    pub tau_d: Option<Vec<f64>>,
    /// Number of delayed blocks, for `cheat_detection`.
    #[serde(default)]
    pub m: Option<Vec<usize>>,
    #[serde(default)]
    pub half_disclosure: Option<Vec<bool>>,
}

fn default_delta_tau() -> f64 {
    1.0
}

fn default_tau0() -> f64 {
    10.0
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    #[serde(default)]
    pub grid: Grid,
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_delta_tau")]
    pub delta_tau: f64,
    #[serde(default = "default_tau0")]
    pub tau0: f64,
    #[serde(default)]
    pub tau_ch: f64,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, trials: u64) -> ExperimentSpec {
        ExperimentSpec {
            scenario,
            grid: Grid::default(),
            trials,
            seed: DEFAULT_SEED,
            delta_tau: default_delta_tau(),
            tau0: default_tau0(),
            tau_ch: 0.0,
        }
    }
}

/// Parameters of one grid cell. Dimensions the scenario does not use are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub scenario: Scenario,
    pub n: usize,
    pub k: usize,
    pub xi: Option<f64>,
    pub tau_d: f64,
    pub m: Option<usize>,
    pub half_disclosure: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    #[serde(flatten)]
    pub params: CellParams,
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub reference: f64,
    /// `None` when the reference is 0 or 1 and the comparison is exact.
    pub z: Option<f64>,
    /// Published bound the estimate is checked against, where one exists.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    /// Trials that broke a scenario invariant, e.g. an accepted commitment
    /// that recovered the wrong bit.
    pub violations: u64,
    pub pass: bool,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Binomial z-score of `successes / trials` against `reference`, or `None`
/// for a degenerate reference.
pub fn z_score(successes: u64, trials: u64, reference: f64) -> Option<f64> {
    if reference <= 0.0 || reference >= 1.0 || trials == 0 {
        return None;
    }
    let n = trials as f64;
    let sd = (reference * (1.0 - reference) / n).sqrt();
    Some((successes as f64 / n - reference) / sd)
}

/// Pass iff `|z| ≤ 3`, or the estimate equals a reference of 0 or 1.
pub fn compare(cell: &SummaryCell) -> Comparison {
    let ok = match cell.z {
        Some(z) => z.abs() <= 3.0,
        None => cell.estimate == cell.reference,
    };
    if ok {
        Comparison::Pass
    } else {
        Comparison::Fail
    }
}

fn dim<T: Clone>(
    values: &Option<Vec<T>>,
    name: &'static str,
    default: Vec<T>,
) -> Result<Vec<T>, ExperimentError> {
    match values {
        None => Ok(default),
        Some(v) if v.is_empty() => Err(ExperimentError::EmptyGrid(name)),
        Some(v) => Ok(v.clone()),
    }
}

/// Expands the grid into cells, in a fixed order: `n` outermost, then `k`,
/// `xi`, `tau_d`, `m`, `half_disclosure`.
pub fn expand(spec: &ExperimentSpec) -> Result<Vec<CellParams>, ExperimentError> {
    if spec.trials == 0 {
        return Err(ExperimentError::InvalidSpec("trials must be at least 1".into()));
    }
    let s = spec.scenario;
    let g = &spec.grid;
    let uses_nk = s != Scenario::Identification;
    let ns = if uses_nk { dim(&g.n, "n", vec![2])? } else { vec![1] };
    let ks = if uses_nk { dim(&g.k, "k", vec![1])? } else { vec![1] };
    let xis: Vec<Option<f64>> = match s {
        Scenario::CheatDetection | Scenario::CtSendback => vec![None],
        Scenario::TailedCompletion => match &g.xi {
            None => {
                return Err(ExperimentError::InvalidSpec(
                    "tailed_completion needs a `xi` grid".into(),
                ))
            }
            Some(v) => dim(&Some(v.clone()), "xi", vec![])?.into_iter().map(Some).collect(),
        },
        _ => dim(&g.xi.clone().map(|v| v.into_iter().map(Some).collect()), "xi", vec![None])?,
    };
    let default_tau_d = spec.delta_tau + 0.5 * spec.tau0;
    let tau_ds = dim(&g.tau_d, "tau_d", vec![default_tau_d])?;
    let ms: Vec<Option<usize>> = if s == Scenario::CheatDetection {
        dim(&g.m, "m", vec![1])?.into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let halves: Vec<Option<bool>> = if s == Scenario::CtSendback {
        dim(&g.half_disclosure, "half_disclosure", vec![true])?.into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let mut cells = Vec::new();
    for &n in &ns {
        for &k in &ks {
            for &xi in &xis {
                for &tau_d in &tau_ds {
                    for &m in &ms {
                        for &half_disclosure in &halves {
                            if let Some(m) = m {
                                if m > n {
                                    return Err(ExperimentError::InvalidSpec(format!(
                                        "m = {m} exceeds N = {n}"
                                    )));
                                }
                            }
                            cells.push(CellParams { scenario: s, n, k, xi, tau_d, m, half_disclosure });
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// FNV-1a over the canonical text of every parameter except `N`.
fn cell_key(p: &CellParams) -> u64 {
    let text = format!(
        "{}|k={}|xi={:?}|tau_d={:?}|m={:?}|half={:?}",
        p.scenario.name(),
        p.k,
        p.xi.map(f64::to_bits),
        p.tau_d.to_bits(),
        p.m,
        p.half_disclosure
    );
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn protocol_config(spec: &ExperimentSpec, p: &CellParams) -> ProtocolConfig {
    ProtocolConfig {
        n: p.n,
        k: p.k,
        delta_tau: spec.delta_tau,
        tau0: spec.tau0,
        tau_ch: spec.tau_ch,
        localization: match p.xi {
            Some(xi) => Localization::Tailed { xi },
            None => Localization::Compact,
        },
        tau_d: Some(p.tau_d),
        seed: spec.seed,
        ..ProtocolConfig::default()
    }
}

/// Probability that one state has landed inside a hump window by light-cone
/// time `horizon`.
fn informative_mass(session: &Session, horizon: f64) -> f64 {
    let state = session.honest_state(Bit::ZERO);
    state
        .hump_windows()
        .iter()
        .filter(|w| w.lo() < horizon)
        .map(|w| {
            Window::new(w.lo(), w.hi().min(horizon))
                .map(|cut| state.window_mass(&cut))
                .unwrap_or(0.0)
        })
        .sum()
}

/// Closed-form reference and, for parity guessing, the published bound.
fn reference(
    p: &CellParams,
    session: &Session,
) -> Result<(f64, Option<f64>), ExperimentError> {
    let nk = (p.n * p.k) as i32;
    let completion = |copies: i32| match p.xi {
        Some(xi) => (1.0 - (-xi).exp()).powi(copies * nk),
        None => 1.0,
    };
    Ok(match p.scenario {
        Scenario::Identification => {
            // Orthogonal internal states: no error once the detector fires,
            // a fair guess otherwise.
            let prior = PriorPair::uniform();
            let rho0 = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
            let rho1 = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
            let gamma = GammaOperator::from_ensemble(prior, &rho0, &rho1, 1.0)?;
            let fired = helstrom_error(prior, &gamma, 1.0)?.error;
            let p_fire = informative_mass(session, p.tau_d);
            (1.0 - composite_error(p_fire, fired, 0.5), None)
        }
        Scenario::ParityGuess => {
            let p_fire = informative_mass(session, p.tau_d);
            let exact = if p.k == 1 && (p_fire - 0.5).abs() < 1e-12 {
                pc_parity_plain(p.n)
            } else {
                BlockCensus::new(p.n, p.k)?.exact_success(p_fire)
            };
            (exact, Some(pc_parity_block_bound(p.n, p.k)?))
        }
        Scenario::CheatDetection => {
            let overlap = session.cheat_sampler(Bit::ZERO).overlap();
            let delayed = (p.m.unwrap_or(0) * p.k) as i32;
            (overlap.powi(delayed), None)
        }
        Scenario::BcHonest | Scenario::TailedCompletion => (completion(1), None),
        Scenario::CtHonest => (completion(2), None),
        Scenario::CtSendback => {
            let half = p.half_disclosure.unwrap_or(true);
            let escape = match mirror_escape_probability(p.n, p.k, half) {
                Ok(e) => e,
                Err(_) if half => 0.5f64.powi(((p.n - p.n.div_ceil(2)) * p.k) as i32),
                Err(_) => 1.0,
            };
            (1.0 - escape, None)
        }
    })
}

/// Outcome of one trial: (success, invariant violated).
fn trial(
    p: &CellParams,
    session: &Session,
    index: u64,
    key: u64,
    seed: u64,
) -> Result<(bool, bool), ExperimentError> {
    let mut rng = stream(seed, key, index);
    Ok(match p.scenario {
        Scenario::Identification => {
            use rand::Rng;
            let bit = Bit::from(rng.gen::<bool>());
            let record = sample_detection(session.honest_state(bit), p.tau_d, &mut rng);
            let guess = record.outcome().and_then(|o| o.bit()).unwrap_or(Bit::ZERO);
            (guess == bit, false)
        }
        Scenario::ParityGuess => {
            let run =
                run_bit_commitment_with_rng(session, &StrategyA::Honest, StrategyB::EarlyGuess, &mut rng)?;
            let correct = run.early_guess.as_ref().is_some_and(|g| g.correct());
            (correct, false)
        }
        Scenario::CheatDetection => {
            let blocks = (0..p.m.unwrap_or(0)).collect();
            let run = run_bit_commitment_with_rng(
                session,
                &StrategyA::DelayBlocks { blocks },
                StrategyB::Honest,
                &mut rng,
            )?;
            let wrong = run.verdict.bit().is_some_and(|b| b != run.committed);
            (run.verdict.is_accepted(), wrong)
        }
        Scenario::BcHonest | Scenario::TailedCompletion => {
            let run =
                run_bit_commitment_with_rng(session, &StrategyA::Honest, StrategyB::Honest, &mut rng)?;
            let wrong = run.verdict.bit().is_some_and(|b| b != run.committed);
            (run.verdict == Verdict::Accepted(run.committed), wrong)
        }
        Scenario::CtHonest => {
            let run = run_coin_toss_with_rng(
                session,
                StrategyPeer::Honest,
                StrategyPeer::Honest,
                CoinTossOptions::default(),
                &mut rng,
            )?;
            let expected = run.parity_b.map(|b| b ^ run.parity_a);
            let wrong = run.verdict.bit().is_some_and(|b| Some(b) != expected);
            (run.verdict.is_accepted(), wrong)
        }
        Scenario::CtSendback => {
            let half = p.half_disclosure.unwrap_or(true);
            let options = CoinTossOptions { half_disclosure: half, ..CoinTossOptions::default() };
            let run = run_coin_toss_with_rng(
                session,
                StrategyPeer::Honest,
                StrategyPeer::SendBack,
                options,
                &mut rng,
            )?;
            let wrong = !half && run.verdict.bit().is_some_and(|b| b != Bit::ZERO);
            (!run.verdict.is_accepted(), wrong)
        }
    })
}

/// Runs every trial of one cell.
pub fn run_cell(spec: &ExperimentSpec, params: CellParams) -> Result<SummaryCell, ExperimentError> {
    let config = protocol_config(spec, &params);
    let session = Session::new(config)?;
    let key = cell_key(&params);
    let (successes, violations) = (0..spec.trials)
        .into_par_iter()
        .map(|i| trial(&params, &session, i, key, spec.seed).map(|(s, v)| (s as u64, v as u64)))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let (reference, bound) = reference(&params, &session)?;
    let estimate = successes as f64 / spec.trials as f64;
    let (ci_lo, ci_hi) = wilson_interval(successes, spec.trials);
    let mut cell = SummaryCell {
        params,
        trials: spec.trials,
        successes,
        estimate,
        ci_lo,
        ci_hi,
        reference,
        z: z_score(successes, spec.trials, reference),
        bound,
        within_bound: bound.map(|b| ci_lo <= b),
        violations,
        pass: false,
    };
    cell.pass = compare(&cell) == Comparison::Pass && violations == 0;
    Ok(cell)
}

/// Runs the whole grid on at most `jobs` worker threads (all cores when
/// `None`). Output is identical for every `jobs`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    jobs: Option<usize>,
) -> Result<Vec<SummaryCell>, ExperimentError> {
    let cells = expand(spec)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    pool.install(|| cells.into_iter().map(|p| run_cell(spec, p)).collect())
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    n: usize,
    k: usize,
    xi: Option<f64>,
    tau_d: f64,
    m: Option<usize>,
    half_disclosure: Option<bool>,
    trials: u64,
    successes: u64,
    estimate: f64,
    ci_lo: f64,
    ci_hi: f64,
    reference: f64,
    z: Option<f64>,
    bound: Option<f64>,
    within_bound: Option<bool>,
    violations: u64,
    pass: bool,
}

/// CSV report: a `# schema: ...` comment line, a header row, then one row
/// per cell. Unused parameters are empty fields.
pub fn write_csv<W: Write>(cells: &[SummaryCell], mut out: W) -> Result<(), ExperimentError> {
    writeln!(out, "# schema: {SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(CsvRow {
            scenario: c.params.scenario.name(),
            n: c.params.n,
            k: c.params.k,
            xi: c.params.xi,
            tau_d: c.params.tau_d,
            m: c.params.m,
            half_disclosure: c.params.half_disclosure,
            trials: c.trials,
            successes: c.successes,
            estimate: c.estimate,
            ci_lo: c.ci_lo,
            ci_hi: c.ci_hi,
            reference: c.reference,
            z: c.z,
            bound: c.bound,
            within_bound: c.within_bound,
            violations: c.violations,
            pass: c.pass,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub cells: Vec<SummaryCell>,
}

pub fn write_json<W: Write>(cells: &[SummaryCell], mut out: W) -> Result<(), ExperimentError> {
    let report = Report { schema: SCHEMA.to_string(), cells: cells.to_vec() };
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(estimate: f64, reference: f64, trials: u64) -> SummaryCell {
        let successes = (estimate * trials as f64).round() as u64;
        SummaryCell {
            params: CellParams {
                scenario: Scenario::BcHonest,
                n: 1,
                k: 1,
                xi: None,
                tau_d: 6.0,
                m: None,
                half_disclosure: None,
            },
            trials,
            successes,
            estimate,
            ci_lo: 0.0,
            ci_hi: 1.0,
            reference,
            z: z_score(successes, trials, reference),
            bound: None,
            within_bound: None,
            violations: 0,
            pass: true,
        }
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare(&cell(1.0, 1.0, 10_000)), Comparison::Pass);
        assert_eq!(compare(&cell(0.75, 0.75, 7)), Comparison::Pass);
        assert_eq!(compare(&cell(0.9999, 1.0, 10_000)), Comparison::Fail);
        // z = 5 at p = 1/2 and 10^4 trials
        let mut c = cell(0.525, 0.5, 10_000);
        assert!((c.z.unwrap() - 5.0).abs() < 1e-9);
        assert_eq!(compare(&c), Comparison::Fail);
        c.z = Some(-3.0);
        assert_eq!(compare(&c), Comparison::Pass);
    }

    #[test]
    fn wilson_interval_properties() {
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.2 && hi < 0.35);
        let (lo, hi) = wilson_interval(10, 10);
        assert!(lo > 0.65 && hi == 1.0);
        // reference value from the textbook formula for 81/263
        let (lo, hi) = wilson_interval(81, 263);
        assert!((lo - 0.2553).abs() < 1e-4 && (hi - 0.3662).abs() < 1e-4, "{lo} {hi}");
        for (s, t) in [(1, 3), (500, 1000), (7, 100_000)] {
            let (lo, hi) = wilson_interval(s, t);
            let p = s as f64 / t as f64;
            assert!(lo <= p && p <= hi);
        }
    }

    #[test]
    fn grid_expansion() {
        let mut spec = ExperimentSpec::new(Scenario::ParityGuess, 10);
        assert_eq!(expand(&spec).unwrap().len(), 1);
        spec.grid.n = Some(vec![1, 2, 3]);
        spec.grid.k = Some(vec![1, 2]);
        let cells = expand(&spec).unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[1].n, cells[1].k), (1, 2));
        spec.grid.k = Some(vec![]);
        assert!(matches!(expand(&spec), Err(ExperimentError::EmptyGrid("k"))));
        spec.grid.k = None;
        spec.trials = 0;
        assert!(expand(&spec).is_err());
        let tailed = ExperimentSpec::new(Scenario::TailedCompletion, 10);
        assert!(expand(&tailed).is_err());
        let mut cheat = ExperimentSpec::new(Scenario::CheatDetection, 10);
        cheat.grid.m = Some(vec![3]);
        assert!(expand(&cheat).is_err());
    }

    #[test]
    fn common_random_numbers_across_n() {
        let spec = ExperimentSpec::new(Scenario::ParityGuess, 1);
        let mut cells = expand(&spec).unwrap();
        let mut other = cells[0].clone();
        other.n = 5;
        assert_eq!(cell_key(&cells[0]), cell_key(&other));
        other.k = 2;
        assert_ne!(cell_key(&cells.remove(0)), cell_key(&other));
    }

    #[test]
    fn identification_small_run() {
        let spec = ExperimentSpec::new(Scenario::Identification, 4000);
        let cells = run_experiment(&spec, Some(2)).unwrap();
        assert_eq!(cells.len(), 1);
        assert!((cells[0].reference - 0.75).abs() < 1e-12);
        assert!(cells[0].pass, "{:?}", cells[0]);
    }

    #[test]
    fn results_do_not_depend_on_jobs() {
        let mut spec = ExperimentSpec::new(Scenario::ParityGuess, 300);
        spec.grid.n = Some(vec![1, 2]);
        spec.grid.k = Some(vec![1, 2]);
        let one = run_experiment(&spec, Some(1)).unwrap();
        let four = run_experiment(&spec, Some(4)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn csv_and_json_layout() {
        let cells = vec![cell(1.0, 1.0, 5)];
        let mut buf = Vec::new();
        write_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# schema: relbc-sweep/1"));
        assert_eq!(
            lines.next(),
            Some("scenario,n,k,xi,tau_d,m,half_disclosure,trials,successes,estimate,ci_lo,ci_hi,reference,z,bound,within_bound,violations,pass")
        );
        assert_eq!(lines.next(), Some("bc_honest,1,1,,6.0,,,5,5,1.0,0.0,1.0,1.0,,,,0,true"));
        let mut buf = Vec::new();
        write_json(&cells, &mut buf).unwrap();
        let report: Report = serde_json::from_slice(&buf).unwrap();
        assert_eq!(report.schema, SCHEMA);
        assert_eq!(report.cells, cells);
    }
}
