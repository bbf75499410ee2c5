//! Session orchestration: pairwise authenticated in-process channels,
//! transcript capture, end-to-end runs combining both protocol phases,
//! Monte Carlo campaigns, and verification of the detectable-broadcast
//! conditions.

pub mod campaign;
pub mod channel;
pub mod session;
pub mod transcript;
pub mod wire;

use thiserror::Error;

use crate::distribution::DistributionError;
use crate::party::Party;

pub use campaign::{monte_carlo, CampaignStats, QerSummary};
pub use channel::ChannelSet;
pub use session::{
    run_agreement, run_distribution_session, run_session, verify_dba, ConfigError, DbaCondition,
    DbaOutcome, LieutenantDecisions, ResidualRisk, RiskEntry, SessionConfig, SessionResult,
    SessionRun, TraitorSpec,
};
pub use transcript::{replay_transcript, ReplayReport, Transcript, TranscriptHeader};
pub use wire::{WireMessage, WireRecord};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("channel stalled: no message pending from {from} to {to}")]
    Stalled { from: Party, to: Party },
    #[error("protocol violation: unexpected message from {from} to {to}")]
    UnexpectedMessage { from: Party, to: Party },
    #[error("party {0} refused to answer a correlation test query")]
    Refusal(Party),
    #[error(transparent)]
    Lists(#[from] DistributionError),
}
