//! Coin tossing: both parties commit as in the bit commitment and the toss
//! is the XOR of the two parities.
//!
//! With half-disclosure on, the classical data goes out in four phases at
//! the disclosure time: A reveals the channels of `⌈N/2⌉` of its blocks, B
//! reveals the remaining channels, A reveals those, and B the first set. A
//! peer that only reflects A's states must therefore commit to values on
//! channels it never measured before A discloses them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::measurement::{classify, Outcome};
use crate::parity::SecretString;
use crate::rng::stream;
use crate::Bit;

use super::verify::Discrepancy;
use super::{
    check_disclosures, early_guess, log_detections, strategy_name, Actor, Disclosure, EarlyGuess,
    EmitPart, EventBody, Observed, ProtocolError, Session, StrategyPeer, Transcript, Verdict,
};

/// Stream key for coin-toss runs.
pub(crate) const KEY_COIN_TOSS: u64 = 0xc017;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinTossOptions {
    pub half_disclosure: bool,
    /// Party that wins when the toss comes out 0.
    pub zero_wins: Actor,
}

impl Default for CoinTossOptions {
    fn default() -> Self {
        CoinTossOptions { half_disclosure: true, zero_wins: Actor::A }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinTossRun {
    pub transcript: Transcript,
    pub verdict: Verdict,
    pub parity_a: Bit,
    /// B's committed parity; `None` for a peer that sends no states.
    pub parity_b: Option<Bit>,
    pub winner: Option<Actor>,
    pub early_guesses: Vec<EarlyGuess>,
}

pub fn run_coin_toss(
    session: &Session,
    strategy_a: StrategyPeer,
    strategy_b: StrategyPeer,
    options: CoinTossOptions,
    run_index: u64,
) -> Result<CoinTossRun, ProtocolError> {
    let mut rng = stream(session.config().seed, KEY_COIN_TOSS, run_index);
    run_coin_toss_with_rng(session, strategy_a, strategy_b, options, &mut rng)
}

/// Channels A discloses first: every channel of its first `⌈N/2⌉` blocks.
fn first_half(secret: &SecretString) -> Vec<bool> {
    let code = secret.code();
    let h = code.n().div_ceil(2);
    (0..code.channels()).map(|c| code.block_of(c) < h).collect()
}

fn disclose(secret: &SecretString, channels: impl Iterator<Item = usize>) -> Vec<Disclosure> {
    channels
        .map(|c| Disclosure { channel: c, value: secret.value(c), block: secret.code().block_of(c) })
        .collect()
}

/// Disclosures of a peer that never measured anything. Entries for
/// channels the other side already disclosed are copied; the rest get
/// values from `guess`, grouped zeros first into blocks of `k` under labels
/// the other side has not used.
pub(crate) fn mirror_disclose(
    channels: &[usize],
    known: &[Option<Disclosure>],
    n: usize,
    k: usize,
    mut guess: impl FnMut() -> Bit,
) -> Vec<Disclosure> {
    let mut used = vec![false; n];
    for d in known.iter().flatten() {
        if d.block < n {
            used[d.block] = true;
        }
    }
    let mut free = (0..n).filter(|&b| !used[b]);
    let mut out = Vec::with_capacity(channels.len());
    let mut guessed: Vec<(Bit, usize)> = Vec::new();
    for &c in channels {
        match known[c] {
            Some(d) => out.push(d),
            None => guessed.push((guess(), c)),
        }
    }
    guessed.sort();
    let mut block = free.next().unwrap_or(n);
    for (i, (value, channel)) in guessed.into_iter().enumerate() {
        if i > 0 && i % k == 0 {
            block = free.next().unwrap_or(n);
        }
        out.push(Disclosure { channel, value, block });
    }
    out.sort_by_key(|d| d.channel);
    out
}

pub fn run_coin_toss_with_rng<R: Rng + ?Sized>(
    session: &Session,
    strategy_a: StrategyPeer,
    strategy_b: StrategyPeer,
    options: CoinTossOptions,
    rng: &mut R,
) -> Result<CoinTossRun, ProtocolError> {
    if strategy_a == StrategyPeer::SendBack {
        return Err(ProtocolError::UnsupportedStrategy(
            "send_back is modelled for the second discloser (B) only".into(),
        ));
    }
    if options.zero_wins == Actor::Sim {
        return Err(ProtocolError::UnsupportedStrategy("zero_wins must be A or B".into()));
    }
    let config = session.config();
    let (n, k, nk) = (config.n, config.k, config.channels());
    let t_d = config.disclosure_time();
    let t_full = config.full_access_time();
    let mirror = strategy_b == StrategyPeer::SendBack;

    let mut transcript = Transcript::new();
    transcript.push(0.0, Actor::A, EventBody::Strategy { name: strategy_name(&strategy_a) });
    transcript.push(0.0, Actor::B, EventBody::Strategy { name: strategy_name(&strategy_b) });

    let parity_a = Bit::from(rng.gen::<bool>());
    let secret_a = SecretString::sample(n, k, parity_a, rng)?;
    transcript.push(0.0, Actor::Sim, EventBody::Commit { parity: parity_a });
    let secret_b = if mirror {
        None
    } else {
        let p = Bit::from(rng.gen::<bool>());
        Some(SecretString::sample(n, k, p, rng)?)
    };
    let parity_b = secret_b.as_ref().map(SecretString::parity);

    for c in 0..nk {
        transcript.push(0.0, Actor::A, EventBody::Emit { channel: c, part: EmitPart::Front });
        transcript.push(config.tau0, Actor::A, EventBody::Emit { channel: c, part: EmitPart::Rear });
    }
    if let Some(p) = parity_b {
        transcript.push(0.0, Actor::Sim, EventBody::Commit { parity: p });
        for c in 0..nk {
            transcript.push(0.0, Actor::B, EventBody::Emit { channel: c, part: EmitPart::Front });
            transcript
                .push(config.tau0, Actor::B, EventBody::Emit { channel: c, part: EmitPart::Rear });
        }
    } else {
        for c in 0..nk {
            transcript
                .push(config.tau_ch, Actor::B, EventBody::Emit { channel: c, part: EmitPart::Reflected });
        }
    }

    // What B sees of A's states, then what A sees on B's channels. A
    // reflected state reaches A one extra channel length late.
    let mut seen_by_b: Vec<Observed> = vec![None; nk];
    let mut seen_by_a: Vec<Observed> = vec![None; nk];
    for c in 0..nk {
        let state = session.honest_state(secret_a.value(c));
        let fire = state.sample_fire_time(rng);
        let out = classify(state, fire).outcome();
        match &secret_b {
            Some(sb) => {
                seen_by_b[c] = out.map(|o| (o, fire + config.tau_ch));
                let state = session.honest_state(sb.value(c));
                let fire = state.sample_fire_time(rng);
                seen_by_a[c] = classify(state, fire).outcome().map(|o| (o, fire + config.tau_ch));
            }
            None => {
                let late = fire + config.tau_ch;
                seen_by_a[c] = classify(state, late).outcome().map(|o| (o, late + config.tau_ch));
            }
        }
    }

    let mut guesses = Vec::new();
    let mut pending: Vec<(Actor, u8, Vec<Disclosure>)> = Vec::new();
    let first = if options.half_disclosure { first_half(&secret_a) } else { vec![true; nk] };
    let set_a: Vec<usize> = (0..nk).filter(|&c| first[c]).collect();
    let set_b: Vec<usize> = (0..nk).filter(|&c| !first[c]).collect();
    let mut known_to_b: Vec<Option<Disclosure>> = vec![None; nk];

    let mut phase = |actor: Actor, entries: Vec<Disclosure>, known: &mut Vec<Option<Disclosure>>| {
        if actor == Actor::A {
            for d in &entries {
                known[d.channel] = Some(*d);
            }
        }
        let number = pending.len() as u8 + 1;
        if !entries.is_empty() {
            pending.push((actor, number, entries));
        }
    };
    let b_discloses = |channels: &[usize], known: &[Option<Disclosure>], rng: &mut R| match &secret_b {
        Some(sb) => disclose(sb, channels.iter().copied()),
        None => mirror_disclose(channels, known, n, k, || Bit::from(rng.gen::<bool>())),
    };

    phase(Actor::A, disclose(&secret_a, set_a.iter().copied()), &mut known_to_b);
    if options.half_disclosure {
        let p2 = b_discloses(&set_b, &known_to_b, rng);
        phase(Actor::B, p2, &mut known_to_b);
        phase(Actor::A, disclose(&secret_a, set_b.iter().copied()), &mut known_to_b);
        let p4 = b_discloses(&set_a, &known_to_b, rng);
        phase(Actor::B, p4, &mut known_to_b);
    } else {
        let all: Vec<usize> = (0..nk).collect();
        let p2 = b_discloses(&all, &known_to_b, rng);
        phase(Actor::B, p2, &mut known_to_b);
    }

    let from = |who: Actor| -> Vec<(f64, Disclosure)> {
        pending
            .iter()
            .filter(|(a, _, _)| *a == who)
            .flat_map(|(_, _, e)| e.iter().map(|&d| (t_d, d)))
            .collect()
    };
    let a_check = check_disclosures(&from(Actor::B), &seen_by_a, n, k, t_full);
    let b_check = if mirror {
        // A peer that measured nothing cannot object; A's disclosures are
        // honest, so they encode A's parity.
        Ok(secret_a.parity())
    } else {
        check_disclosures(&from(Actor::A), &seen_by_b, n, k, t_full)
    };
    let earliest = |a: Option<Discrepancy>, b: Option<Discrepancy>| match (a, b) {
        (Some(x), Some(y)) if (y.t, y.channel) < (x.t, x.channel) => Some((Actor::B, y)),
        (Some(x), _) => Some((Actor::A, x)),
        (None, Some(y)) => Some((Actor::B, y)),
        (None, None) => None,
    };
    let (verdict, t_verdict, judge) = match earliest(a_check.err(), b_check.err()) {
        Some((judge, d)) => (Verdict::Aborted { channel: d.channel, reason: d.reason }, d.t, judge),
        None => {
            let b = a_check.expect("no discrepancy") ^ b_check.expect("no discrepancy");
            (Verdict::Accepted(b), t_full, Actor::Sim)
        }
    };
    let winner = verdict
        .bit()
        .map(|b| if b.is_one() { options.zero_wins.peer() } else { options.zero_wins });

    let until = t_verdict.min(t_full);
    log_detections(&seen_by_b, config.tau_ch, until, Actor::B, &mut transcript);
    log_detections(&seen_by_a, config.tau_ch, until, Actor::A, &mut transcript);
    if strategy_a == StrategyPeer::EarlyGuess {
        if let Some(p) = parity_b {
            guesses.push(early_guess(session, Actor::A, &seen_by_a, t_d, p, &mut transcript));
        }
    }
    if strategy_b == StrategyPeer::EarlyGuess {
        guesses.push(early_guess(session, Actor::B, &seen_by_b, t_d, parity_a, &mut transcript));
    }
    for (actor, number, entries) in pending {
        transcript.push(t_d, actor, EventBody::Disclose { phase: number, entries });
    }
    transcript.push(t_verdict, judge, EventBody::Verdict { code: verdict.to_string() });
    transcript.finish();

    Ok(CoinTossRun { transcript, verdict, parity_a, parity_b, winner, early_guesses: guesses })
}

/// Exact probability that a reflecting B survives A's verification, with
/// a channel length of zero. Enumerates every value of A's blocks and every
/// guess vector of the mirror and runs the real disclosure checker on each.
pub fn mirror_escape_probability(
    n: usize,
    k: usize,
    half_disclosure: bool,
) -> Result<f64, ProtocolError> {
    if n == 0 || k == 0 {
        return Err(ProtocolError::InvalidConfig(format!("N = {n}, k = {k}")));
    }
    let nk = n * k;
    let h = if half_disclosure { n.div_ceil(2) } else { n };
    let unknown = (n - h) * k;
    if n + unknown > 24 {
        return Err(ProtocolError::InvalidConfig(format!(
            "exhaustive mirror oracle needs N + (N - ceil(N/2)) k <= 24, got {}",
            n + unknown
        )));
    }
    let block_of = |c: usize| c / k;
    let first: Vec<usize> = (0..nk).filter(|&c| block_of(c) < h).collect();
    let rest: Vec<usize> = (0..nk).filter(|&c| block_of(c) >= h).collect();
    let mut escaped: u64 = 0;
    let mut total: u64 = 0;
    for values in 0u64..1 << n {
        let value = |c: usize| Bit::from(values >> block_of(c) & 1 == 1);
        let entry = |c: usize| Disclosure { channel: c, value: value(c), block: block_of(c) };
        let seen: Vec<Observed> = (0..nk).map(|c| Some((Outcome::for_bit(value(c)), 0.0))).collect();
        for guesses in 0u64..1 << unknown {
            let mut known: Vec<Option<Disclosure>> = vec![None; nk];
            for &c in &first {
                known[c] = Some(entry(c));
            }
            let mut i = 0;
            let mut disclosed = mirror_disclose(&rest, &known, n, k, || {
                let g = Bit::from(guesses >> i & 1 == 1);
                i += 1;
                g
            });
            for &c in &rest {
                known[c] = Some(entry(c));
            }
            disclosed.extend(mirror_disclose(&first, &known, n, k, || Bit::ZERO));
            let timed: Vec<(f64, Disclosure)> = disclosed.into_iter().map(|d| (0.0, d)).collect();
            total += 1;
            if check_disclosures(&timed, &seen, n, k, 1.0).is_ok() {
                escaped += 1;
            }
        }
    }
    Ok(escaped as f64 / total as f64)
}
