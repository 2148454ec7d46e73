//! Independent replay of a transcript: light-cone causality of every
//! decision, classical phase order, and the verdict itself.

use thiserror::Error;

use crate::measurement::Outcome;
use crate::parity::BlockCensus;
use crate::Bit;

use super::{
    check_disclosures, Actor, Disclosure, EmitPart, EventBody, Observed, ProtocolConfig,
    ProtocolError, Transcript, Verdict,
};

const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error(transparent)]
    Config(#[from] ProtocolError),
    #[error("event {index} at t = {t} precedes the one before it")]
    OutOfOrder { index: usize, t: f64 },
    #[error("transcript has no verdict as its final event")]
    MissingVerdict,
    #[error("event {index}: unparseable verdict {code:?}")]
    BadVerdict { index: usize, code: String },
    #[error("event {index}: channel {channel} out of range")]
    BadChannel { index: usize, channel: usize },
    #[error("event {index}: detection logged at t = {t} but light arrives at {arrival}")]
    OffLightCone { index: usize, t: f64, arrival: f64 },
    #[error("event {index}: second detection on channel {channel}")]
    DuplicateDetection { index: usize, channel: usize },
    #[error("event {index}: guess uses channel {channel} which had not fired for the guesser")]
    GuessUsesUnseen { index: usize, channel: usize },
    #[error("event {index}: guess ignores outcomes available to the guesser")]
    GuessIgnoresEvidence { index: usize },
    #[error("event {index}: guess {logged:?} differs from the recomputed {expected:?}")]
    GuessMismatch { index: usize, logged: Option<Bit>, expected: Option<Bit> },
    #[error("event {index}: disclosure phase out of order")]
    PhaseOrder { index: usize },
    #[error("event {index}: disclosure after the verdict")]
    LateDisclosure { index: usize },
    #[error("logged verdict {logged} but the transcript implies {recomputed}")]
    VerdictMismatch { logged: Verdict, recomputed: Verdict },
}

#[derive(Default)]
struct Party {
    strategy: String,
    emitted: bool,
    observed: Vec<Observed>,
    disclosed: Vec<(f64, Disclosure)>,
}

/// Replays `transcript` under `config`. Succeeds only if every detection
/// sits on the light cone, every guess is the census guess over exactly the
/// outcomes its maker had seen, the classical phases alternate starting
/// with A, and the logged verdict is what the disclosures and detections
/// imply.
pub fn audit(transcript: &Transcript, config: &ProtocolConfig) -> Result<(), AuditError> {
    config.validate()?;
    let (n, k, nk) = (config.n, config.k, config.channels());
    let census = BlockCensus::new(n, k).map_err(ProtocolError::from)?;
    let events = transcript.events();

    let last = events.last().ok_or(AuditError::MissingVerdict)?;
    let EventBody::Verdict { code } = &last.body else {
        return Err(AuditError::MissingVerdict);
    };
    let logged: Verdict = code
        .parse()
        .map_err(|_| AuditError::BadVerdict { index: events.len() - 1, code: code.clone() })?;

    let mut a = Party { observed: vec![None; nk], ..Party::default() };
    let mut b = Party { observed: vec![None; nk], ..Party::default() };
    let mut prev_t = f64::NEG_INFINITY;
    let mut phases: Vec<Actor> = Vec::new();

    for (index, e) in events.iter().enumerate() {
        if !(e.t >= prev_t) {
            return Err(AuditError::OutOfOrder { index, t: e.t });
        }
        prev_t = e.t;
        let party = match e.actor {
            Actor::A => Some(&mut a),
            Actor::B => Some(&mut b),
            Actor::Sim => None,
        };
        match &e.body {
            EventBody::Strategy { name } => {
                if let Some(p) = party {
                    p.strategy = name.clone();
                }
            }
            EventBody::Emit { channel, part } => {
                if *channel >= nk {
                    return Err(AuditError::BadChannel { index, channel: *channel });
                }
                if let Some(p) = party {
                    p.emitted |= matches!(part, EmitPart::Front | EmitPart::Reflected);
                }
            }
            EventBody::Detect { channel, outcome, fire_time } => {
                let p = party.ok_or(AuditError::BadChannel { index, channel: *channel })?;
                if *channel >= nk {
                    return Err(AuditError::BadChannel { index, channel: *channel });
                }
                let arrival = fire_time + config.tau_ch;
                if (e.t - arrival).abs() > TIME_TOL {
                    return Err(AuditError::OffLightCone { index, t: e.t, arrival });
                }
                if p.observed[*channel].is_some() {
                    return Err(AuditError::DuplicateDetection { index, channel: *channel });
                }
                p.observed[*channel] = Some((*outcome, e.t));
            }
            EventBody::Guess { parity, inputs, .. } => {
                let p = party.ok_or(AuditError::GuessIgnoresEvidence { index })?;
                let evidence: Vec<Option<Bit>> =
                    p.observed.iter().map(|o| o.and_then(|(out, _)| out.bit())).collect();
                if let Some(&channel) = inputs.iter().find(|&&c| c >= nk || evidence[c].is_none()) {
                    return Err(AuditError::GuessUsesUnseen { index, channel });
                }
                if evidence.iter().filter(|v| v.is_some()).count() != inputs.len() {
                    return Err(AuditError::GuessIgnoresEvidence { index });
                }
                let expected = census.guess(&evidence).ok().map(|g| g.parity);
                if *parity != expected {
                    return Err(AuditError::GuessMismatch { index, logged: *parity, expected });
                }
            }
            EventBody::Disclose { phase, entries } => {
                let p = party.ok_or(AuditError::PhaseOrder { index })?;
                let expected_actor = if phases.len().is_multiple_of(2) { Actor::A } else { Actor::B };
                if *phase as usize != phases.len() + 1 || e.actor != expected_actor {
                    return Err(AuditError::PhaseOrder { index });
                }
                if e.t > last.t {
                    return Err(AuditError::LateDisclosure { index });
                }
                phases.push(e.actor);
                p.disclosed.extend(entries.iter().map(|&d| (e.t, d)));
            }
            EventBody::Verdict { .. } if index + 1 != events.len() => {
                return Err(AuditError::MissingVerdict);
            }
            EventBody::Commit { .. } | EventBody::Choose { .. } | EventBody::Verdict { .. } => {}
        }
    }

    let coin_toss = b.emitted;
    let phase_count_ok = if coin_toss {
        phases.len() == 2 || phases.len() == 4
    } else {
        phases.len() == 1
    };
    if !phase_count_ok {
        return Err(AuditError::PhaseOrder { index: events.len() - 1 });
    }

    let t_full = config.full_access_time();
    let b_verifies = b.strategy != "send_back";
    let check_a = if b_verifies {
        check_disclosures(&a.disclosed, &b.observed, n, k, t_full)
    } else {
        check_disclosures(&a.disclosed, &a_as_seen_by_itself(&a.disclosed, nk), n, k, f64::INFINITY)
    };
    let recomputed = if coin_toss {
        let check_b = check_disclosures(&b.disclosed, &a.observed, n, k, t_full);
        match (check_a, check_b) {
            (Ok(x), Ok(y)) => Verdict::Accepted(x ^ y),
            (Err(x), Err(y)) => {
                let d = if (y.t, y.channel) < (x.t, x.channel) { y } else { x };
                Verdict::Aborted { channel: d.channel, reason: d.reason }
            }
            (Err(d), Ok(_)) | (Ok(_), Err(d)) => {
                Verdict::Aborted { channel: d.channel, reason: d.reason }
            }
        }
    } else {
        match check_a {
            Ok(x) => Verdict::Accepted(x),
            Err(d) => Verdict::Aborted { channel: d.channel, reason: d.reason },
        }
    };
    if recomputed != logged {
        return Err(AuditError::VerdictMismatch { logged, recomputed });
    }
    Ok(())
}

/// A's own disclosures as perfect observations, for a peer that does not
/// verify: only the block structure is then checked.
fn a_as_seen_by_itself(disclosed: &[(f64, Disclosure)], nk: usize) -> Vec<Observed> {
    let mut seen = vec![None; nk];
    for &(t, d) in disclosed {
        if d.channel < nk {
            seen[d.channel] = Some((Outcome::for_bit(d.value), t));
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{
        run_bit_commitment, run_coin_toss, CoinTossOptions, Event, Session, StrategyA, StrategyB,
        StrategyPeer,
    };

    fn config() -> ProtocolConfig {
        ProtocolConfig { n: 3, k: 2, tau_ch: 0.75, ..ProtocolConfig::default() }
    }

    #[test]
    fn generated_transcripts_pass() {
        let s = Session::new(config()).unwrap();
        for i in 0..50 {
            let bc = run_bit_commitment(&s, &StrategyA::Honest, StrategyB::EarlyGuess, i).unwrap();
            audit(&bc.transcript, s.config()).unwrap();
            let cheat = StrategyA::DelayBlocks { blocks: vec![1] };
            let bc = run_bit_commitment(&s, &cheat, StrategyB::Honest, i).unwrap();
            audit(&bc.transcript, s.config()).unwrap();
            for b in [StrategyPeer::Honest, StrategyPeer::EarlyGuess, StrategyPeer::SendBack] {
                for half in [true, false] {
                    let opts = CoinTossOptions { half_disclosure: half, ..CoinTossOptions::default() };
                    let ct = run_coin_toss(&s, StrategyPeer::EarlyGuess, b, opts, i).unwrap();
                    audit(&ct.transcript, s.config()).unwrap_or_else(|e| panic!("{b:?} {half}: {e}"));
                }
            }
        }
    }

    fn tamper(f: impl Fn(&mut Vec<Event>)) -> AuditError {
        let s = Session::new(config()).unwrap();
        let run = run_bit_commitment(&s, &StrategyA::Honest, StrategyB::EarlyGuess, 3).unwrap();
        let mut events = run.transcript.events().to_vec();
        f(&mut events);
        audit(&Transcript::from_events(events), s.config()).unwrap_err()
    }

    #[test]
    fn detection_before_light_arrives_is_caught() {
        let err = tamper(|ev| {
            let e = ev.iter_mut().find(|e| matches!(e.body, EventBody::Detect { .. })).unwrap();
            e.t -= 0.5;
        });
        assert!(matches!(err, AuditError::OffLightCone { .. } | AuditError::OutOfOrder { .. }));
    }

    #[test]
    fn guess_from_the_future_is_caught() {
        let err = tamper(|ev| {
            let late = ev
                .iter()
                .rev()
                .find_map(|e| match e.body {
                    EventBody::Detect { channel, .. } => Some(channel),
                    _ => None,
                })
                .unwrap();
            let g = ev.iter_mut().find(|e| matches!(e.body, EventBody::Guess { .. })).unwrap();
            if let EventBody::Guess { inputs, .. } = &mut g.body {
                if !inputs.contains(&late) {
                    inputs.push(late);
                }
            }
        });
        assert!(matches!(
            err,
            AuditError::GuessUsesUnseen { .. } | AuditError::GuessIgnoresEvidence { .. }
        ));
    }

    #[test]
    fn forged_verdict_is_caught() {
        let err = tamper(|ev| {
            let v = ev.last_mut().unwrap();
            let EventBody::Verdict { code } = &mut v.body else { panic!() };
            let flipped: Verdict = code.parse().unwrap();
            *code = Verdict::Accepted(flipped.bit().unwrap().flip()).to_string();
        });
        assert!(matches!(err, AuditError::VerdictMismatch { .. }));
    }

    #[test]
    fn phase_order_is_enforced() {
        let err = tamper(|ev| {
            let d = ev.iter_mut().find(|e| matches!(e.body, EventBody::Disclose { .. })).unwrap();
            d.actor = Actor::B;
        });
        assert!(matches!(err, AuditError::PhaseOrder { .. }));
        let err = tamper(|ev| {
            ev.pop();
        });
        assert_eq!(err, AuditError::MissingVerdict);
    }
}
