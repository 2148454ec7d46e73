//! Two-party bit commitment and coin tossing on a continuous light-cone
//! timeline.
//!
//! Wall time `t` starts when the committing party begins emitting. Every
//! stretched state is translated by `Δτ`, so its front hump occupies
//! `(0, 2Δτ)` and its rear hump `(τ₀, τ₀ + 2Δτ)` on the sender's light cone.
//! A receiver at channel distance `τ_ch` reaches light-cone time `t − τ_ch`
//! at wall time `t`; full access is therefore at `τ_ch + τ₀ + 2Δτ`.
//!
//! Runs are single-threaded and deterministic in `(config, strategies,
//! run index)`; see [`crate::rng`] for how streams are derived.

mod audit;
mod bit_commitment;
mod coin_toss;
mod transcript;
mod verify;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurement::CheatSampler;
use crate::parity::{BlockCensus, Guess, ParityError, DEFAULT_ENUM_BOUND};
use crate::rng::DEFAULT_SEED;
use crate::wavepacket::{DelayedState, Family, Profile, StretchedState, WavepacketError};
use crate::Bit;

pub use audit::{audit, AuditError};
pub use bit_commitment::{run_bit_commitment, run_bit_commitment_with_rng, BitCommitmentRun};
pub(crate) use verify::check_disclosures;
pub use coin_toss::{
    mirror_escape_probability, run_coin_toss, run_coin_toss_with_rng, CoinTossOptions,
    CoinTossRun,
};
pub use transcript::{
    AbortReason, Actor, Disclosure, EmitPart, Event, EventBody, Transcript, TranscriptError,
    Verdict,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported strategy: {0}")]
    UnsupportedStrategy(String),
    #[error(transparent)]
    Wavepacket(#[from] WavepacketError),
    #[error(transparent)]
    Parity(#[from] ParityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Localization {
    #[default]
    Compact,
    Tailed {
        xi: f64,
    },
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_enum_bound() -> usize {
    DEFAULT_ENUM_BOUND
}

/// Parameters both parties agree on before the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub k: usize,
    /// Half-length Δτ of each hump's localization interval.
    pub delta_tau: f64,
    /// Separation τ₀ of the two humps.
    pub tau0: f64,
    #[serde(default)]
    pub tau_ch: f64,
    #[serde(default)]
    pub localization: Localization,
    /// Receiver's light-cone horizon when disclosure starts; defaults to the
    /// midpoint of `(Δτ, τ₀ + Δτ)`.
    #[serde(default)]
    pub tau_d: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_enum_bound")]
    pub enum_bound: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            n: 4,
            k: 2,
            delta_tau: 1.0,
            tau0: 10.0,
            tau_ch: 0.0,
            localization: Localization::Compact,
            tau_d: None,
            seed: DEFAULT_SEED,
            enum_bound: DEFAULT_ENUM_BOUND,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::InvalidConfig(m));
        if self.n == 0 || self.k == 0 {
            return bad(format!("N and k must be at least 1 (N={}, k={})", self.n, self.k));
        }
        if !(self.delta_tau.is_finite() && self.delta_tau > 0.0) {
            return bad(format!("delta_tau must be positive, got {}", self.delta_tau));
        }
        if !(self.tau0.is_finite() && self.tau0 > 0.0) {
            return bad(format!("tau0 must be positive, got {}", self.tau0));
        }
        if !(self.tau_ch.is_finite() && self.tau_ch >= 0.0) {
            return bad(format!("tau_ch must be non-negative, got {}", self.tau_ch));
        }
        if self.tau_ch >= self.tau0 + 2.0 * self.delta_tau {
            return bad(format!(
                "tau_ch = {} must be below tau0 + 2 delta_tau = {}",
                self.tau_ch,
                self.tau0 + 2.0 * self.delta_tau
            ));
        }
        if self.localization == Localization::Compact && self.tau0 <= 2.0 * self.delta_tau {
            return bad(format!(
                "compact humps need tau0 > 2 delta_tau (tau0 = {}, delta_tau = {})",
                self.tau0, self.delta_tau
            ));
        }
        if let Localization::Tailed { xi } = self.localization {
            if !(xi.is_finite() && xi > 0.0) {
                return bad(format!("xi must be positive, got {xi}"));
            }
        }
        let tau_d = self.tau_d();
        if !(tau_d > self.delta_tau && tau_d < self.tau0 + self.delta_tau) {
            return bad(format!(
                "tau_d = {tau_d} must lie in ({}, {})",
                self.delta_tau,
                self.tau0 + self.delta_tau
            ));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.n * self.k
    }

    pub fn tau_d(&self) -> f64 {
        self.tau_d.unwrap_or(self.delta_tau + 0.5 * self.tau0)
    }

    pub fn family(&self) -> Family {
        match self.localization {
            Localization::Compact => Family::CompactBump { width: self.delta_tau },
            Localization::Tailed { xi } => Family::Tailed { width: self.delta_tau, xi },
        }
    }

    /// Wall time of the first classical disclosure.
    pub fn disclosure_time(&self) -> f64 {
        self.tau_ch + self.tau_d()
    }

    /// Light-cone time by which both humps of a state have been emitted.
    pub fn full_horizon(&self) -> f64 {
        self.tau0 + 2.0 * self.delta_tau
    }

    /// Wall time at which the receiver has access to the whole state.
    pub fn full_access_time(&self) -> f64 {
        self.tau_ch + self.full_horizon()
    }

    /// Wall time at which a delaying sender settles its choice: right after
    /// the front humps would have been emitted.
    pub fn choice_time(&self) -> f64 {
        (2.0 * self.delta_tau).min(self.tau0)
    }
}

/// A party's detection on one channel: outcome and the wall time it is seen.
pub(crate) type Observed = Option<(crate::measurement::Outcome, f64)>;

/// Parity guess a party made at disclosure time about its peer's secret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyGuess {
    pub guesser: Actor,
    /// `None` when the evidence admits no valid block string.
    pub guess: Option<Guess>,
    /// Channels whose outcomes the guess used.
    pub inputs: Vec<usize>,
    pub truth: Bit,
}

impl EarlyGuess {
    pub fn correct(&self) -> bool {
        self.guess.map(|g| g.parity) == Some(self.truth)
    }
}

/// Runs the census guesser over the outcomes `observed` by wall time `t`
/// and logs the guess.
pub(crate) fn early_guess(
    session: &Session,
    guesser: Actor,
    observed: &[Observed],
    t: f64,
    truth: Bit,
    transcript: &mut Transcript,
) -> EarlyGuess {
    let evidence: Vec<Option<Bit>> = observed
        .iter()
        .map(|o| o.filter(|&(_, wall)| wall <= t).and_then(|(out, _)| out.bit()))
        .collect();
    let inputs: Vec<usize> = (0..evidence.len()).filter(|&c| evidence[c].is_some()).collect();
    let guess = session.guess(&evidence).ok();
    transcript.push(
        t,
        guesser,
        EventBody::Guess {
            parity: guess.map(|g| g.parity),
            confidence: guess.map(|g| g.confidence),
            inputs: inputs.clone(),
        },
    );
    EarlyGuess { guesser, guess, inputs, truth }
}

/// Logs every detection in `observed` seen no later than `until`.
pub(crate) fn log_detections(
    observed: &[Observed],
    tau_ch: f64,
    until: f64,
    actor: Actor,
    transcript: &mut Transcript,
) {
    for (channel, o) in observed.iter().enumerate() {
        if let Some((outcome, wall)) = *o {
            if wall <= until {
                transcript.push(
                    wall,
                    actor,
                    EventBody::Detect { channel, outcome, fire_time: wall - tau_ch },
                );
            }
        }
    }
}

pub(crate) fn strategy_name<T: Serialize>(s: &T) -> String {
    match serde_json::to_value(s) {
        Ok(serde_json::Value::String(name)) => name,
        Ok(serde_json::Value::Object(map)) => map.keys().next().cloned().unwrap_or_default(),
        _ => String::new(),
    }
}

/// Light-cone horizons of the two parties at one wall time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessibleHorizon {
    /// How far along A's states B can see.
    pub b_over_a: f64,
    /// How far along B's states A can see.
    pub a_over_b: f64,
}

pub fn accessible_horizon(config: &ProtocolConfig, wall_time: f64) -> AccessibleHorizon {
    let t = wall_time - config.tau_ch;
    AccessibleHorizon { b_over_a: t, a_over_b: t }
}

/// Sender strategy in the bit commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyA {
    Honest,
    /// Withhold the front humps of every state in the named blocks and pick
    /// their values, and so the committed bit, only after the front humps
    /// are gone.
    DelayBlocks { blocks: Vec<usize> },
}

/// Receiver strategy in the bit commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyB {
    Honest,
    /// Also guess the parity at disclosure time from what has fired so far.
    EarlyGuess,
}

/// Peer strategy in the coin toss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyPeer {
    Honest,
    EarlyGuess,
    /// Send no states of one's own; reflect the peer's states back and
    /// fabricate the classical disclosures.
    SendBack,
}

/// Per-configuration state shared by every run: the profile table, the
/// honest templates and the delayed-state sampler.
#[derive(Debug, Clone)]
pub struct Session {
    config: ProtocolConfig,
    profile: Arc<Profile>,
    honest: [StretchedState; 2],
    cheat: [CheatSampler; 2],
    census: BlockCensus,
}

impl Session {
    pub fn new(config: ProtocolConfig) -> Result<Session, ProtocolError> {
        config.validate()?;
        let profile = Profile::new(config.family())?;
        let make = |bit| -> Result<StretchedState, ProtocolError> {
            Ok(StretchedState::new(Arc::clone(&profile), config.tau0, bit)?
                .translate(config.delta_tau))
        };
        let honest = [make(Bit::ZERO)?, make(Bit::ONE)?];
        let cheat_for = |s: &StretchedState| -> Result<CheatSampler, ProtocolError> {
            CheatSampler::new(DelayedState::rear_hump_of(s), s).map_err(|e| match e {
                crate::measurement::MeasurementError::Wavepacket(w) => w.into(),
                other => ProtocolError::InvalidConfig(other.to_string()),
            })
        };
        let cheat = [cheat_for(&honest[0])?, cheat_for(&honest[1])?];
        let census = BlockCensus::new(config.n, config.k)?;
        Ok(Session { config, profile, honest, cheat, census })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn profile(&self) -> &Arc<Profile> {
        &self.profile
    }

    /// Honest state carrying `bit`, in sender light-cone coordinates.
    pub fn honest_state(&self, bit: Bit) -> &StretchedState {
        &self.honest[bit.as_index()]
    }

    pub fn cheat_sampler(&self, bit: Bit) -> &CheatSampler {
        &self.cheat[bit.as_index()]
    }

    pub fn census(&self) -> &BlockCensus {
        &self.census
    }

    /// Probability that a single honest state has fired by the disclosure
    /// horizon.
    pub fn fire_probability_at_disclosure(&self) -> f64 {
        use crate::wavepacket::Window;
        self.honest[0].window_mass(&Window::up_to(self.config.tau_d()))
    }

    pub(crate) fn guess(&self, evidence: &[Option<Bit>]) -> Result<Guess, ParityError> {
        if self.config.channels() <= self.config.enum_bound {
            self.census.guess_enumerated(evidence, self.config.enum_bound)
        } else {
            self.census.guess(evidence)
        }
    }
}
