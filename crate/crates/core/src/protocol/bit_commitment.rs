//! Bit commitment: A commits to the parity of a block-coded secret string
//! and B verifies the disclosure against its detections at full access.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::measurement::classify;
use crate::parity::SecretString;
use crate::rng::stream;
use crate::Bit;

use super::{
    check_disclosures, early_guess, log_detections, strategy_name, Actor, Disclosure, EarlyGuess,
    EmitPart, EventBody, Observed, ProtocolError, Session, StrategyA, StrategyB, Transcript,
    Verdict,
};

/// Stream key for bit-commitment runs.
pub(crate) const KEY_BIT_COMMITMENT: u64 = 0xb17c;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitCommitmentRun {
    pub transcript: Transcript,
    pub verdict: Verdict,
    /// Parity of A's secret once every value has been settled.
    pub committed: Bit,
    pub early_guess: Option<EarlyGuess>,
}

/// Runs one bit commitment on the stream for `run_index`.
pub fn run_bit_commitment(
    session: &Session,
    strategy_a: &StrategyA,
    strategy_b: StrategyB,
    run_index: u64,
) -> Result<BitCommitmentRun, ProtocolError> {
    let mut rng = stream(session.config().seed, KEY_BIT_COMMITMENT, run_index);
    run_bit_commitment_with_rng(session, strategy_a, strategy_b, &mut rng)
}

fn delayed_blocks(strategy: &StrategyA, n: usize) -> Result<Vec<usize>, ProtocolError> {
    match strategy {
        StrategyA::Honest => Ok(Vec::new()),
        StrategyA::DelayBlocks { blocks } => {
            let mut sorted = blocks.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != blocks.len() || sorted.last().is_some_and(|&b| b >= n) {
                return Err(ProtocolError::UnsupportedStrategy(format!(
                    "delayed blocks {blocks:?} must be distinct and below N = {n}"
                )));
            }
            Ok(sorted)
        }
    }
}

pub fn run_bit_commitment_with_rng<R: Rng + ?Sized>(
    session: &Session,
    strategy_a: &StrategyA,
    strategy_b: StrategyB,
    rng: &mut R,
) -> Result<BitCommitmentRun, ProtocolError> {
    let config = session.config();
    let (n, k, nk) = (config.n, config.k, config.channels());
    let delayed = delayed_blocks(strategy_a, n)?;
    let t_d = config.disclosure_time();
    let t_full = config.full_access_time();

    let mut transcript = Transcript::new();
    transcript.push(0.0, Actor::A, EventBody::Strategy { name: strategy_name(strategy_a) });
    transcript.push(0.0, Actor::B, EventBody::Strategy { name: strategy_name(&strategy_b) });

    let initial = Bit::from(rng.gen::<bool>());
    let mut secret = SecretString::sample(n, k, initial, rng)?;
    let is_delayed: Vec<bool> =
        (0..nk).map(|c| delayed.contains(&secret.code().block_of(c))).collect();
    if delayed.is_empty() {
        transcript.push(0.0, Actor::Sim, EventBody::Commit { parity: initial });
    }
    for (c, &late) in is_delayed.iter().enumerate() {
        if !late {
            transcript.push(0.0, Actor::A, EventBody::Emit { channel: c, part: EmitPart::Front });
        }
        transcript.push(config.tau0, Actor::A, EventBody::Emit { channel: c, part: EmitPart::Rear });
    }

    let mut observed: Vec<Observed> = vec![None; nk];
    for c in (0..nk).filter(|&c| !is_delayed[c]) {
        let state = session.honest_state(secret.value(c));
        let fire = state.sample_fire_time(rng);
        observed[c] = classify(state, fire).outcome().map(|o| (o, fire + config.tau_ch));
    }

    if !delayed.is_empty() {
        // A settles the withheld blocks once the front humps are gone, aiming
        // at a freshly drawn target parity.
        let target = Bit::from(rng.gen::<bool>());
        for &b in &delayed {
            secret.set_block_value(b, Bit::from(rng.gen::<bool>()));
        }
        let last = *delayed.last().expect("non-empty");
        let fix = secret.parity() ^ target;
        let v = secret.block_values()[last] ^ fix;
        secret.set_block_value(last, v);
        transcript.push(
            config.choice_time(),
            Actor::A,
            EventBody::Choose { blocks: delayed.clone(), parity: target },
        );
        transcript.push(config.choice_time(), Actor::Sim, EventBody::Commit { parity: target });
        for c in (0..nk).filter(|&c| is_delayed[c]) {
            let record = session.cheat_sampler(secret.value(c)).sample(rng);
            observed[c] = record
                .outcome()
                .zip(record.fire_time())
                .map(|(o, fire)| (o, fire + config.tau_ch));
        }
    }
    let committed = secret.parity();

    let entries: Vec<Disclosure> = (0..nk)
        .map(|c| Disclosure { channel: c, value: secret.value(c), block: secret.code().block_of(c) })
        .collect();
    let timed: Vec<(f64, Disclosure)> = entries.iter().map(|&d| (t_d, d)).collect();
    let (verdict, t_verdict) = match check_disclosures(&timed, &observed, n, k, t_full) {
        Ok(b) => (Verdict::Accepted(b), t_full),
        Err(d) => (Verdict::Aborted { channel: d.channel, reason: d.reason }, d.t),
    };

    log_detections(&observed, config.tau_ch, t_verdict.min(t_full), Actor::B, &mut transcript);
    let guess = (strategy_b == StrategyB::EarlyGuess)
        .then(|| early_guess(session, Actor::B, &observed, t_d, committed, &mut transcript));
    transcript.push(t_d, Actor::A, EventBody::Disclose { phase: 1, entries });
    transcript.push(t_verdict, Actor::B, EventBody::Verdict { code: verdict.to_string() });
    transcript.finish();

    Ok(BitCommitmentRun { transcript, verdict, committed, early_guess: guess })
}
