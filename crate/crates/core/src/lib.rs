//! Three-party detectable Byzantine agreement over quantum-correlated secret
//! lists.
//!
//! Three generals — commander A and lieutenants B and C — must agree on a
//! plan although one of them may be a traitor. Plain pairwise messaging
//! cannot solve this for three parties; it becomes solvable once the
//! generals hold secret lists with the right correlations. Here those lists
//! come from a simulated four-qubit entangled source: A records trits, B and
//! C record bits, and at every position the joint values are 000, 111, 201,
//! or 210.
//!
//! The crate provides:
//!
//! - [`quantum`]: the source state, measurement sampling, and noise model;
//! - [`distribution`]: the distribute-and-test phase that turns source
//!   windows into tested, released lists (or a collective abort);
//! - [`agreement`]: the classical agreement phase — evidence construction,
//!   the consistency predicate, and the decision table with traitor
//!   attribution;
//! - [`adversary`]: pluggable traitor strategies injected at the protocol's
//!   decision points;
//! - [`harness`]: deterministic sessions over authenticated in-process
//!   channels, transcript capture and replay, Monte Carlo campaigns, and
//!   verification of the detectable-broadcast conditions;
//! - [`binomial`]: the exact tail probabilities behind the residual-risk
//!   reports.
//!
//! Every run is reproducible from `(config, seed)`:
//!
//! ```
//! use qdba_core::{run_session, Plan, SessionConfig};
//!
//! let config = SessionConfig {
//!     windows: 6_000,
//!     noise: qdba_core::NoiseModel::noiseless(),
//!     plan: Plan::One,
//!     min_entries: 100,
//!     ..SessionConfig::default()
//! };
//! let run = qdba_core::run_session(&config, 7).unwrap();
//! assert!(run.result.verdict.is_proceed());
//! let decisions = run.result.decisions.unwrap();
//! assert_eq!(decisions.b.action.plan(), Plan::One);
//! assert_eq!(decisions.c.action.plan(), Plan::One);
//! ```

pub mod adversary;
pub mod agreement;
pub mod binomial;
pub mod distribution;
pub mod harness;
pub mod party;
pub mod quantum;

pub use adversary::{Strategy, StrategyKind};
pub use agreement::{
    Action, Attribution, ConsistencyParams, Decision, DecisionCase, Message, Plan, PositionList,
};
pub use distribution::{
    AbortReason, DistributionConfig, DistributionOutcome, ListTriple, PartyList, TripleRecord,
    Verdict,
};
pub use harness::{
    monte_carlo, replay_transcript, run_session, verify_dba, CampaignStats, DbaOutcome,
    SessionConfig, SessionError, SessionResult, SessionRun, TraitorSpec, Transcript,
};
pub use party::Party;
pub use quantum::{Basis, BasisChoice, JointOutcome, NoiseModel, QuantumState, SourceSampler};
