//! Checking a peer's classical disclosures against one's own detections.

use crate::measurement::Outcome;
use crate::Bit;

use super::transcript::{AbortReason, Disclosure};

/// A discrepancy and the wall time at which the verifier can first see it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Discrepancy {
    pub t: f64,
    pub channel: usize,
    pub reason: AbortReason,
}

impl Discrepancy {
    fn earlier(self, other: Discrepancy) -> Discrepancy {
        let key = |d: &Discrepancy| (d.t, d.channel, d.reason);
        if key(&other).partial_cmp(&key(&self)) == Some(std::cmp::Ordering::Less) {
            other
        } else {
            self
        }
    }
}

/// Verifies the complete set of `(time, entry)` disclosures made by one
/// party. `observed[c]` is the verifier's detection on channel `c` as
/// `(outcome, wall time)`; detections after `t_full` are ignored.
///
/// Returns the parity the disclosures encode, or the earliest discrepancy.
/// Per-channel problems surface at the later of detection and disclosure;
/// structural problems surface once the last entry is in; silence surfaces
/// at `t_full`.
pub(crate) fn check_disclosures(
    disclosed: &[(f64, Disclosure)],
    observed: &[Option<(Outcome, f64)>],
    n: usize,
    k: usize,
    t_full: f64,
) -> Result<Bit, Discrepancy> {
    let nk = n * k;
    let t_struct = disclosed.iter().map(|(t, _)| *t).fold(f64::NEG_INFINITY, f64::max);
    let mut worst: Option<Discrepancy> = None;
    let mut flag = |d: Discrepancy| {
        worst = Some(match worst {
            Some(w) => w.earlier(d),
            None => d,
        });
    };

    let mut per_channel: Vec<Option<(f64, Disclosure)>> = vec![None; nk];
    for &(t, d) in disclosed {
        if d.channel >= nk || per_channel[d.channel].is_some() {
            flag(Discrepancy {
                t: t_struct,
                channel: d.channel,
                reason: AbortReason::InconsistentDisclosure,
            });
            continue;
        }
        per_channel[d.channel] = Some((t, d));
    }
    if let Some(c) = per_channel.iter().position(Option::is_none) {
        let t = if disclosed.is_empty() { t_full } else { t_struct.max(t_full) };
        flag(Discrepancy { t, channel: c, reason: AbortReason::InconsistentDisclosure });
    }

    // Block labels: each of 0..n used by exactly k channels, values uniform.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, entry) in per_channel.iter().enumerate() {
        if let Some((_, d)) = entry {
            if d.block >= n {
                flag(Discrepancy {
                    t: t_struct,
                    channel: c,
                    reason: AbortReason::InconsistentDisclosure,
                });
            } else {
                members[d.block].push(c);
            }
        }
    }
    let mut parity = Bit::ZERO;
    for block in &members {
        let Some(&first) = block.first() else { continue };
        if block.len() != k {
            flag(Discrepancy {
                t: t_struct,
                channel: first,
                reason: AbortReason::InconsistentDisclosure,
            });
            continue;
        }
        let value = per_channel[first].map(|(_, d)| d.value).unwrap_or_default();
        if let Some(&odd) = block.iter().find(|&&c| per_channel[c].map(|(_, d)| d.value) != Some(value)) {
            flag(Discrepancy { t: t_struct, channel: odd, reason: AbortReason::BlockMismatch });
        }
        parity = parity ^ value;
    }

    for (c, entry) in per_channel.iter().enumerate() {
        let Some((t_disc, d)) = entry else { continue };
        match observed.get(c).copied().flatten().filter(|&(_, t)| t <= t_full) {
            None => flag(Discrepancy {
                t: t_full.max(*t_disc),
                channel: c,
                reason: AbortReason::SilentAtFullAccess,
            }),
            Some((Outcome::Perp, t)) => flag(Discrepancy {
                t: t.max(*t_disc),
                channel: c,
                reason: AbortReason::PerpOutcome,
            }),
            Some((outcome, t)) if outcome != Outcome::for_bit(d.value) => flag(Discrepancy {
                t: t.max(*t_disc),
                channel: c,
                reason: AbortReason::WrongChannel,
            }),
            Some(_) => {}
        }
    }

    match worst {
        Some(d) => Err(d),
        None => Ok(parity),
    }
}
