//! Wire encoding of protocol messages.
//!
//! Every message is recorded as `{round, from, to, kind, payload}` and
//! serialized as one JSON object per line in transcript files. The same
//! encoding is what a networked deployment would put on the sockets.

use serde::{Deserialize, Serialize};

use crate::agreement::{Plan, PositionList};
use crate::party::Party;
use crate::quantum::Basis;

/// The protocol alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum WireMessage {
    /// Coincidence extraction: a speaker reports a detected window and the
    /// basis it measured in.
    Disclose {
        window: u32,
        detected: bool,
        basis: Basis,
    },
    /// Coincidence extraction: the collector's keep/reject answer.
    Verdict { window: u32, keep: bool },
    /// A tester asks for the value at a list position.
    TestQuery { position: u32 },
    /// A value disclosed for a correlation test.
    TestReply { position: u32, value: u8 },
    /// A plan announcement (commander message or lieutenant forward).
    Plan { plan: Plan },
    /// The position-list evidence accompanying a plan.
    Positions { positions: PositionList },
    /// "I have received inconsistent data" (lieutenant to lieutenant only).
    Bot,
}

impl WireMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            WireMessage::Disclose { .. } => "disclose",
            WireMessage::Verdict { .. } => "verdict",
            WireMessage::TestQuery { .. } => "test-query",
            WireMessage::TestReply { .. } => "test-reply",
            WireMessage::Plan { .. } => "plan",
            WireMessage::Positions { .. } => "positions",
            WireMessage::Bot => "bot",
        }
    }
}

/// One transmitted message with its provenance. The `from` tag is stamped by
/// the channel layer, never taken from message content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRecord {
    pub round: u64,
    pub from: Party,
    pub to: Party,
    #[serde(flatten)]
    pub msg: WireMessage,
}
