//! Line-delimited event log of a protocol run.
//!
//! Each line is one JSON object `{"t", "actor", "kind", "payload"}`.
//! `kind` selects the shape of `payload`; see [`EventBody`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurement::Outcome;
use crate::Bit;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed verdict code {0:?}")]
    BadVerdict(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Actor {
    A,
    B,
    /// The simulator itself, for ground truth that no party announces.
    #[serde(rename = "sim")]
    Sim,
}

impl Actor {
    pub fn peer(self) -> Actor {
        match self {
            Actor::A => Actor::B,
            Actor::B => Actor::A,
            Actor::Sim => Actor::Sim,
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Actor::A => "A",
            Actor::B => "B",
            Actor::Sim => "sim",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitPart {
    Front,
    Rear,
    /// A peer's state sent back along the channel.
    Reflected,
}

/// One classical claim about a channel: its value and the block it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disclosure {
    pub channel: usize,
    pub value: Bit,
    pub block: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    /// Strategy the actor plays; logged at `t = 0`.
    Strategy { name: String },
    /// Ground-truth parity the actor committed to.
    Commit { parity: Bit },
    Emit { channel: usize, part: EmitPart },
    /// The actor's detector on `channel` fired. `t = fire_time + τ_ch`.
    Detect { channel: usize, outcome: Outcome, fire_time: f64 },
    /// A delaying sender settles the values of its withheld blocks.
    Choose { blocks: Vec<usize>, parity: Bit },
    /// Early parity guess about the peer, from the detections on `inputs`.
    Guess { parity: Option<Bit>, confidence: Option<f64>, inputs: Vec<usize> },
    Disclose { phase: u8, entries: Vec<Disclosure> },
    Verdict { code: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub actor: Actor,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AbortReason {
    WrongChannel,
    PerpOutcome,
    SilentAtFullAccess,
    BlockMismatch,
    InconsistentDisclosure,
}

impl AbortReason {
    pub const ALL: [AbortReason; 5] = [
        AbortReason::WrongChannel,
        AbortReason::PerpOutcome,
        AbortReason::SilentAtFullAccess,
        AbortReason::BlockMismatch,
        AbortReason::InconsistentDisclosure,
    ];

    pub fn code(self) -> &'static str {
        match self {
            AbortReason::WrongChannel => "WRONG_CHANNEL",
            AbortReason::PerpOutcome => "PERP_OUTCOME",
            AbortReason::SilentAtFullAccess => "SILENT_AT_FULL_ACCESS",
            AbortReason::BlockMismatch => "BLOCK_MISMATCH",
            AbortReason::InconsistentDisclosure => "INCONSISTENT_DISCLOSURE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accepted(Bit),
    Aborted { channel: usize, reason: AbortReason },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted(_))
    }

    pub fn bit(&self) -> Option<Bit> {
        match *self {
            Verdict::Accepted(b) => Some(b),
            Verdict::Aborted { .. } => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted(b) => write!(f, "ACCEPTED:{b}"),
            Verdict::Aborted { channel, reason } => {
                write!(f, "ABORTED:{channel}:{}", reason.code())
            }
        }
    }
}

impl FromStr for Verdict {
    type Err = TranscriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TranscriptError::BadVerdict(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["ACCEPTED", b] => {
                let v: u8 = b.parse().map_err(|_| bad())?;
                Ok(Verdict::Accepted(Bit::try_from(v).map_err(|_| bad())?))
            }
            ["ABORTED", ch, reason] => {
                let channel = ch.parse().map_err(|_| bad())?;
                let reason = AbortReason::ALL
                    .into_iter()
                    .find(|r| r.code() == *reason)
                    .ok_or_else(bad)?;
                Ok(Verdict::Aborted { channel, reason })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Events in non-decreasing time order; ties keep insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Transcript {
        Transcript::default()
    }

    pub fn from_events(events: Vec<Event>) -> Transcript {
        Transcript { events }
    }

    pub(crate) fn push(&mut self, t: f64, actor: Actor, body: EventBody) {
        self.events.push(Event { t, actor, body });
    }

    /// Stable sort by time, so simultaneous events keep causal order, and
    /// drop anything scheduled after the verdict.
    pub(crate) fn finish(&mut self) {
        let end = self
            .events
            .iter()
            .find_map(|e| matches!(e.body, EventBody::Verdict { .. }).then_some(e.t));
        if let Some(end) = end {
            self.events
                .retain(|e| e.t <= end || matches!(e.body, EventBody::Verdict { .. }));
        }
        self.events.sort_by(|a, b| a.t.total_cmp(&b.t));
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The verdict recorded in the final event, if any.
    pub fn verdict(&self) -> Option<Verdict> {
        self.events.iter().rev().find_map(|e| match &e.body {
            EventBody::Verdict { code } => code.parse().ok(),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Transcript, TranscriptError> {
        let events = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|source| TranscriptError::Json { line: i + 1, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(Transcript { events })
    }
}
