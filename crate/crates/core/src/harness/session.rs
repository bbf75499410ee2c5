//! One end-to-end session: distribution, then (on Proceed) agreement, driven
//! in deterministic round order from a single seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::channel::ChannelSet;
use super::transcript::{config_hash, Transcript, TranscriptHeader};
use super::wire::WireMessage;
use super::SessionError;
use crate::adversary::{CommanderAction, CommanderView, ForwardAction, ForwardView, PartyStrategies, StrategyKind};
use crate::agreement::{
    commander_payload, decide, lieutenant_phase1, Attribution, ConsistencyParams, Decision,
    Message, Phase1State, Plan, PositionList,
};
use crate::binomial;
use crate::distribution::{
    run_distribution, DistributionConfig, DistributionOutcome, ListTriple, Verdict,
};
use crate::party::Party;
use crate::quantum::{NoiseModel, QuantumError, QuantumState, SourceSampler};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("windows must be positive")]
    ZeroWindows,
    #[error("tests must be positive when given")]
    ZeroTests,
    #[error("trials must be positive")]
    ZeroTrials,
    #[error("qer_threshold must lie in [0, 1], got {0}")]
    QerThreshold(f64),
    #[error("min_entries must be positive")]
    ZeroMinEntries,
    #[error("per_party_subset must be positive when given")]
    ZeroSubset,
    #[error(transparent)]
    Noise(#[from] QuantumError),
    #[error(transparent)]
    Consistency(#[from] crate::agreement::AgreementError),
    #[error("strategy `{strategy}` is not defined for role {role}")]
    StrategyRole { role: Party, strategy: String },
    #[error("{0} traitor roles configured; at most one is supported unless allow_outside_model is set")]
    TooManyTraitors(usize),
    #[error("duplicate traitor role {0}")]
    DuplicateTraitor(Party),
}

/// A traitor assignment: which general deviates, and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitorSpec {
    pub role: Party,
    pub strategy: StrategyKind,
}

/// Everything a session needs besides its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Raw source windows emitted by the distribution phase.
    pub windows: usize,
    pub noise: NoiseModel,
    /// Correlation test rounds; derived from the raw length when `None`.
    pub tests: Option<usize>,
    pub qer_threshold: f64,
    pub min_entries: usize,
    pub consistency: ConsistencyParams,
    pub plan: Plan,
    pub traitors: Vec<TraitorSpec>,
    /// Permits more than one traitor (outside the protocol's model).
    pub allow_outside_model: bool,
    /// Optional per-party verification subset size.
    pub per_party_subset: Option<usize>,
    pub record_transcript: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            windows: 48_184,
            noise: NoiseModel::default(),
            tests: None,
            qer_threshold: 0.10,
            min_entries: 300,
            consistency: ConsistencyParams::default(),
            plan: Plan::One,
            traitors: Vec::new(),
            allow_outside_model: false,
            per_party_subset: None,
            record_transcript: false,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.windows == 0 {
            return Err(ConfigError::ZeroWindows);
        }
        if self.tests == Some(0) {
            return Err(ConfigError::ZeroTests);
        }
        if self.per_party_subset == Some(0) {
            return Err(ConfigError::ZeroSubset);
        }
        if !(0.0..=1.0).contains(&self.qer_threshold) {
            return Err(ConfigError::QerThreshold(self.qer_threshold));
        }
        if self.min_entries == 0 {
            return Err(ConfigError::ZeroMinEntries);
        }
        self.noise.validate()?;
        ConsistencyParams::new(
            self.consistency.length_tolerance,
            self.consistency.error_tolerance,
        )?;
        let mut seen = Vec::new();
        for spec in &self.traitors {
            if seen.contains(&spec.role) {
                return Err(ConfigError::DuplicateTraitor(spec.role));
            }
            seen.push(spec.role);
            if !spec.strategy.allowed_roles().contains(&spec.role) {
                return Err(ConfigError::StrategyRole {
                    role: spec.role,
                    strategy: serde_json::to_value(&spec.strategy)
                        .ok()
                        .and_then(|v| v.get("name").and_then(|n| n.as_str().map(String::from)))
                        .unwrap_or_else(|| "unknown".into()),
                });
            }
        }
        if self.traitors.len() > 1 && !self.allow_outside_model {
            return Err(ConfigError::TooManyTraitors(self.traitors.len()));
        }
        Ok(())
    }

    pub fn distribution_config(&self) -> DistributionConfig {
        DistributionConfig {
            windows: self.windows,
            tests: self.tests,
            qer_threshold: self.qer_threshold,
            min_entries: self.min_entries,
            per_party_subset: self.per_party_subset,
        }
    }

    /// Parties not configured as traitors.
    pub fn loyal_parties(&self) -> Vec<Party> {
        Party::ALL
            .into_iter()
            .filter(|p| !self.traitors.iter().any(|t| t.role == *p))
            .collect()
    }

    /// Instantiates the behavior slots. Strategies without an explicit seed
    /// get one derived from the session seed and their role.
    pub fn build_strategies(&self, seed: u64) -> PartyStrategies {
        let mut strategies = PartyStrategies::honest();
        for spec in &self.traitors {
            let fallback = seed
                ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(spec.role.index() as u64 + 1);
            strategies.set(spec.role, spec.strategy.build(fallback));
        }
        strategies
    }
}

/// Forgery-acceptance probability at the parameters one lieutenant actually
/// saw: the exact binomial tail at the received evidence length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEntry {
    pub claimed_length: usize,
    pub acceptance_probability: f64,
    pub ln_acceptance_probability: f64,
}

impl RiskEntry {
    fn at(claimed_length: usize, params: &ConsistencyParams) -> Self {
        RiskEntry {
            claimed_length,
            acceptance_probability: binomial::forgery_acceptance(
                claimed_length,
                params.error_tolerance,
            ),
            ln_acceptance_probability: binomial::ln_forgery_acceptance(
                claimed_length,
                params.error_tolerance,
            ),
        }
    }
}

/// Residual-risk report for the two lieutenants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRisk {
    pub b: RiskEntry,
    pub c: RiskEntry,
}

/// The two lieutenants' final decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LieutenantDecisions {
    pub b: Decision,
    pub c: Decision,
}

/// Everything a terminated session reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub verdict: Verdict,
    pub qer_estimate: f64,
    pub tests_performed: usize,
    pub raw_length: usize,
    pub per_party_qer: Option<[f64; 3]>,
    pub commander_plan: Plan,
    /// Present exactly when the distribution phase proceeded.
    pub decisions: Option<LieutenantDecisions>,
    pub residual_risk: Option<ResidualRisk>,
    /// Set when a decision landed outside the single-traitor model.
    pub outside_model: bool,
}

/// A session's result together with its transcript.
#[derive(Debug, Clone)]
pub struct SessionRun {
    pub result: SessionResult,
    pub transcript: Transcript,
}

fn send_payload(net: &ChannelSet, from: Party, to: Party, payload: &(Message, PositionList)) {
    match payload.0.as_plan() {
        Some(plan) => {
            net.send(from, to, WireMessage::Plan { plan });
            net.send(
                from,
                to,
                WireMessage::Positions {
                    positions: payload.1.clone(),
                },
            );
        }
        None => net.send(from, to, WireMessage::Bot),
    }
}

fn recv_payload(
    net: &ChannelSet,
    to: Party,
    from: Party,
) -> Result<(Message, PositionList), SessionError> {
    match net.recv(to, from)? {
        WireMessage::Plan { plan } => match net.recv(to, from)? {
            WireMessage::Positions { positions } => Ok((plan.into(), positions)),
            _ => Err(SessionError::UnexpectedMessage { from, to }),
        },
        WireMessage::Bot => Ok((Message::Bot, PositionList::empty())),
        _ => Err(SessionError::UnexpectedMessage { from, to }),
    }
}

/// Runs the agreement phase over the channels: commander messages, lieutenant
/// evaluation, the forward exchange (B speaks first, then C, mirroring
/// messengers that cannot be simultaneous), and both decisions.
pub fn run_agreement(
    lists: &ListTriple,
    plan: Plan,
    params: &ConsistencyParams,
    strategies: &mut PartyStrategies,
    net: &ChannelSet,
    round: u64,
) -> Result<(LieutenantDecisions, ResidualRisk), SessionError> {
    net.set_round(round);
    let action = strategies.get_mut(Party::A).on_commander_send(&CommanderView {
        plan,
        list: &lists.a,
        params,
    });
    let (to_b, to_c) = match action {
        CommanderAction::Honest => {
            let payload = commander_payload(plan, &lists.a);
            (payload.clone(), payload)
        }
        CommanderAction::Split { to_b, to_c } => (to_b, to_c),
    };
    send_payload(net, Party::A, Party::B, &to_b);
    send_payload(net, Party::A, Party::C, &to_c);

    let received_b = recv_payload(net, Party::B, Party::A)?;
    let received_c = recv_payload(net, Party::C, Party::A)?;
    let phase1_b = lieutenant_phase1(received_b.0, received_b.1.clone(), &lists.b, params);
    let phase1_c = lieutenant_phase1(received_c.0, received_c.1.clone(), &lists.c, params);

    net.set_round(round + 1);
    let forward_b = resolve_forward(
        strategies,
        Party::B,
        lists,
        &received_b,
        &phase1_b,
        None,
        params,
    );
    send_payload(net, Party::B, Party::C, &forward_b);
    let heard_by_c = recv_payload(net, Party::C, Party::B)?;

    let forward_c = resolve_forward(
        strategies,
        Party::C,
        lists,
        &received_c,
        &phase1_c,
        Some(&heard_by_c),
        params,
    );
    send_payload(net, Party::C, Party::B, &forward_c);
    let heard_by_b = recv_payload(net, Party::B, Party::C)?;

    let decisions = LieutenantDecisions {
        b: decide(&phase1_b, heard_by_b.0, &heard_by_b.1, &lists.b, params),
        c: decide(&phase1_c, heard_by_c.0, &heard_by_c.1, &lists.c, params),
    };
    let risk = ResidualRisk {
        b: RiskEntry::at(received_b.1.len(), params),
        c: RiskEntry::at(received_c.1.len(), params),
    };
    Ok((decisions, risk))
}

fn resolve_forward(
    strategies: &mut PartyStrategies,
    party: Party,
    lists: &ListTriple,
    received: &(Message, PositionList),
    phase1: &Phase1State,
    peer_forward: Option<&(Message, PositionList)>,
    params: &ConsistencyParams,
) -> (Message, PositionList) {
    let action = strategies.get_mut(party).on_forward(&ForwardView {
        party,
        list: lists.list(party),
        received_message: received.0,
        received_positions: &received.1,
        phase1,
        peer_forward,
        params,
    });
    match action {
        ForwardAction::Honest => phase1.forward_message(),
        ForwardAction::Send(msg, positions) => (msg, positions),
    }
}

/// Runs only the distribution phase, returning its outcome and transcript.
pub fn run_distribution_session(
    config: &SessionConfig,
    seed: u64,
) -> Result<(DistributionOutcome, Transcript), SessionError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = ChannelSet::new(config.record_transcript);
    let sampler = SourceSampler::new(&QuantumState::canonical(), config.noise);
    let mut strategies = config.build_strategies(seed);
    let outcome = run_distribution(
        &config.distribution_config(),
        &sampler,
        &mut strategies,
        &net,
        &mut rng,
    )?;
    let transcript = Transcript {
        header: TranscriptHeader {
            seed,
            config_hash: config_hash(config),
            config: config.clone(),
        },
        records: net.into_records(),
        lists: if config.record_transcript {
            outcome.lists.clone()
        } else {
            None
        },
        result: None,
    };
    Ok((outcome, transcript))
}

/// Runs a full session: distribution, then agreement when the lists were
/// released. Fully determined by `(config, seed)`.
pub fn run_session(config: &SessionConfig, seed: u64) -> Result<SessionRun, SessionError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = ChannelSet::new(config.record_transcript);
    let sampler = SourceSampler::new(&QuantumState::canonical(), config.noise);
    let mut strategies = config.build_strategies(seed);
    let outcome = run_distribution(
        &config.distribution_config(),
        &sampler,
        &mut strategies,
        &net,
        &mut rng,
    )?;

    let mut result = SessionResult {
        verdict: outcome.verdict,
        qer_estimate: outcome.qer_estimate,
        tests_performed: outcome.tests_performed,
        raw_length: outcome.raw_length,
        per_party_qer: outcome.per_party_qer,
        commander_plan: config.plan,
        decisions: None,
        residual_risk: None,
        outside_model: false,
    };

    if let Some(lists) = &outcome.lists {
        let (decisions, risk) = run_agreement(
            lists,
            config.plan,
            &config.consistency,
            &mut strategies,
            &net,
            net.round() + 1,
        )?;
        result.outside_model = decisions.b.traitor == Attribution::CommanderAndPeer
            || decisions.c.traitor == Attribution::CommanderAndPeer;
        result.decisions = Some(decisions);
        result.residual_risk = Some(risk);
    }

    let transcript = Transcript {
        header: TranscriptHeader {
            seed,
            config_hash: config_hash(config),
            config: config.clone(),
        },
        records: net.into_records(),
        lists: if config.record_transcript {
            outcome.lists.clone()
        } else {
            None
        },
        result: Some(result.clone()),
    };
    Ok(SessionRun { result, transcript })
}

/// Which detectable-broadcast condition a session violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DbaCondition {
    /// Loyal generals performed different actions without a collective abort.
    Agreement,
    /// The commander was loyal, yet a loyal general deviated from its plan.
    CommanderValidity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DbaOutcome {
    Pass,
    Fail(DbaCondition),
}

impl DbaOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, DbaOutcome::Pass)
    }
}

/// Checks the detectable-broadcast conditions: either all loyal generals
/// perform the same action or all abort, and when the commander is loyal,
/// loyal generals follow its plan or all abort.
pub fn verify_dba(result: &SessionResult, loyal: &[Party]) -> DbaOutcome {
    if !result.verdict.is_proceed() {
        // The abort decision is collective: every loyal party aborts.
        return DbaOutcome::Pass;
    }
    let decisions = match &result.decisions {
        Some(d) => d,
        None => return DbaOutcome::Pass,
    };
    let lieutenant_plans: Vec<Plan> = loyal
        .iter()
        .filter_map(|p| match p {
            Party::B => Some(decisions.b.action.plan()),
            Party::C => Some(decisions.c.action.plan()),
            Party::A => None,
        })
        .collect();
    if loyal.contains(&Party::A) {
        if lieutenant_plans
            .iter()
            .any(|plan| *plan != result.commander_plan)
        {
            return DbaOutcome::Fail(DbaCondition::CommanderValidity);
        }
    } else if lieutenant_plans.windows(2).any(|w| w[0] != w[1]) {
        return DbaOutcome::Fail(DbaCondition::Agreement);
    }
    DbaOutcome::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::Strategy;
    use crate::agreement::{Action, DecisionCase};
    use crate::distribution::AbortReason;

    fn small_config() -> SessionConfig {
        SessionConfig {
            windows: 6_000,
            noise: NoiseModel::noiseless(),
            min_entries: 100,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn honest_noiseless_session_follows_the_plan() {
        let config = SessionConfig {
            plan: Plan::One,
            ..small_config()
        };
        let run = run_session(&config, 1).unwrap();
        assert!(run.result.verdict.is_proceed());
        assert_eq!(run.result.qer_estimate, 0.0);
        let decisions = run.result.decisions.unwrap();
        assert_eq!(decisions.b.action, Action::Follow(Plan::One));
        assert_eq!(decisions.c.action, Action::Follow(Plan::One));
        assert_eq!(decisions.b.case, DecisionCase::AgreeingPlans);
        assert!(verify_dba(&run.result, &Party::ALL).is_pass());
    }

    #[test]
    fn conflicting_commander_triggers_the_fallback_on_both_sides() {
        let config = SessionConfig {
            traitors: vec![TraitorSpec {
                role: Party::A,
                strategy: StrategyKind::ConflictingCommander,
            }],
            ..small_config()
        };
        let run = run_session(&config, 2).unwrap();
        let decisions = run.result.decisions.unwrap();
        for d in [decisions.b, decisions.c] {
            assert_eq!(d.action, Action::FollowFallback);
            assert_eq!(d.action.plan(), Plan::Zero);
            assert_eq!(d.traitor, Attribution::Commander);
            assert_eq!(d.case, DecisionCase::ConflictingPlans);
        }
        assert!(verify_dba(&run.result, &[Party::B, Party::C]).is_pass());
    }

    #[test]
    fn forging_lieutenant_is_caught_and_loyal_parties_follow_the_commander() {
        let config = SessionConfig {
            plan: Plan::One,
            traitors: vec![TraitorSpec {
                role: Party::B,
                strategy: StrategyKind::ForgingLieutenant { flip: true },
            }],
            ..small_config()
        };
        let run = run_session(&config, 3).unwrap();
        let decisions = run.result.decisions.unwrap();
        assert_eq!(decisions.c.action, Action::Follow(Plan::One));
        assert_eq!(decisions.c.traitor, Attribution::Peer);
        assert_eq!(decisions.c.case, DecisionCase::PeerEvidenceRejected);
        assert!(verify_dba(&run.result, &[Party::A, Party::C]).is_pass());
    }

    #[test]
    fn false_bot_lieutenant_cannot_break_agreement() {
        let config = SessionConfig {
            plan: Plan::One,
            traitors: vec![TraitorSpec {
                role: Party::C,
                strategy: StrategyKind::FalseBotLieutenant,
            }],
            ..small_config()
        };
        let run = run_session(&config, 4).unwrap();
        let decisions = run.result.decisions.unwrap();
        assert_eq!(decisions.b.action, Action::Follow(Plan::One));
        assert_eq!(decisions.b.case, DecisionCase::PeerClaimedInconsistent);
        assert!(verify_dba(&run.result, &[Party::A, Party::B]).is_pass());
    }

    #[test]
    fn abort_is_a_collective_pass() {
        let config = SessionConfig {
            noise: NoiseModel {
                p_corrupt: 0.5,
                p_detect: 1.0,
            },
            ..small_config()
        };
        let run = run_session(&config, 5).unwrap();
        assert!(matches!(
            run.result.verdict,
            Verdict::Abort(AbortReason::QerAboveThreshold { .. })
        ));
        assert!(run.result.decisions.is_none());
        assert!(verify_dba(&run.result, &Party::ALL).is_pass());
    }

    #[test]
    fn dba_violations_are_classified() {
        let mut result = SessionResult {
            verdict: Verdict::Proceed,
            qer_estimate: 0.0,
            tests_performed: 100,
            raw_length: 500,
            per_party_qer: None,
            commander_plan: Plan::One,
            decisions: Some(LieutenantDecisions {
                b: Decision {
                    action: Action::Follow(Plan::Zero),
                    traitor: Attribution::Nobody,
                    case: DecisionCase::AgreeingPlans,
                },
                c: Decision {
                    action: Action::Follow(Plan::One),
                    traitor: Attribution::Nobody,
                    case: DecisionCase::AgreeingPlans,
                },
            }),
            residual_risk: None,
            outside_model: false,
        };
        assert_eq!(
            verify_dba(&result, &[Party::B, Party::C]),
            DbaOutcome::Fail(DbaCondition::Agreement)
        );
        assert_eq!(
            verify_dba(&result, &[Party::A, Party::B]),
            DbaOutcome::Fail(DbaCondition::CommanderValidity)
        );
        result.decisions = Some(LieutenantDecisions {
            b: Decision {
                action: Action::Follow(Plan::One),
                traitor: Attribution::Nobody,
                case: DecisionCase::AgreeingPlans,
            },
            c: Decision {
                action: Action::Follow(Plan::One),
                traitor: Attribution::Nobody,
                case: DecisionCase::AgreeingPlans,
            },
        });
        assert!(verify_dba(&result, &Party::ALL).is_pass());
    }

    #[test]
    fn residual_risk_reports_the_exact_tail_at_the_realized_length() {
        let run = run_session(&small_config(), 6).unwrap();
        let risk = run.result.residual_risk.unwrap();
        let expected = binomial::forgery_acceptance(
            risk.b.claimed_length,
            ConsistencyParams::default().error_tolerance,
        );
        assert_eq!(risk.b.acceptance_probability, expected);
        assert!(risk.b.claimed_length > 0);
    }

    #[test]
    fn two_traitors_require_the_outside_model_flag() {
        let mut config = small_config();
        config.traitors = vec![
            TraitorSpec {
                role: Party::A,
                strategy: StrategyKind::Random { seed: 1 },
            },
            TraitorSpec {
                role: Party::B,
                strategy: StrategyKind::ForgingLieutenant { flip: true },
            },
        ];
        assert!(matches!(
            config.validate(),
            Err(ConfigError::TooManyTraitors(2))
        ));
        config.allow_outside_model = true;
        assert!(config.validate().is_ok());
    }

    #[test]
    fn misassigned_strategy_roles_are_rejected() {
        let config = SessionConfig {
            traitors: vec![TraitorSpec {
                role: Party::B,
                strategy: StrategyKind::ConflictingCommander,
            }],
            ..small_config()
        };
        assert!(matches!(
            config.validate(),
            Err(ConfigError::StrategyRole { role: Party::B, .. })
        ));
    }

    /// A commander that backs its plan with junk evidence for both
    /// lieutenants, driving them into the outside-model decision row when
    /// the peer's forward is also forged.
    struct GarbageCommander;

    impl Strategy for GarbageCommander {
        fn on_commander_send(&mut self, view: &CommanderView) -> CommanderAction {
            let junk = PositionList::new((1..=view.list.len() as u32).collect());
            CommanderAction::Split {
                to_b: (view.plan.into(), junk.clone()),
                to_c: (view.plan.into(), junk),
            }
        }
    }

    #[test]
    fn double_treason_lands_outside_the_single_traitor_model() {
        let config = SessionConfig {
            allow_outside_model: true,
            traitors: vec![
                TraitorSpec {
                    role: Party::A,
                    strategy: StrategyKind::Honest,
                },
                TraitorSpec {
                    role: Party::B,
                    strategy: StrategyKind::ForgingLieutenant { flip: true },
                },
            ],
            ..small_config()
        };
        // Replace A's slot with the junk commander directly; the config only
        // carries named strategies, custom ones plug in through the same
        // trait.
        config.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = ChannelSet::new(false);
        let sampler = SourceSampler::new(&QuantumState::canonical(), config.noise);
        let mut strategies = config.build_strategies(7);
        strategies.set(Party::A, Box::new(GarbageCommander));
        let outcome = run_distribution(
            &config.distribution_config(),
            &sampler,
            &mut strategies,
            &net,
            &mut rng,
        )
        .unwrap();
        let lists = outcome.lists.expect("noiseless run proceeds");
        let (decisions, _) = run_agreement(
            &lists,
            config.plan,
            &config.consistency,
            &mut strategies,
            &net,
            net.round() + 1,
        )
        .unwrap();
        assert_eq!(decisions.c.case, DecisionCase::OutsideSingleTraitor);
        assert_eq!(decisions.c.traitor, Attribution::CommanderAndPeer);
        assert_eq!(decisions.c.action, Action::FollowFallback);
    }

    #[test]
    fn refusal_aborts_the_session_naming_the_party() {
        struct Refuser;
        impl Strategy for Refuser {
            fn on_test_reply(
                &mut self,
                _view: &crate::adversary::TestReplyView,
            ) -> crate::adversary::TestReplyAction {
                crate::adversary::TestReplyAction::Refuse
            }
        }
        let config = small_config();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = ChannelSet::new(false);
        let sampler = SourceSampler::new(&QuantumState::canonical(), config.noise);
        let mut strategies = PartyStrategies::honest();
        strategies.set(Party::B, Box::new(Refuser));
        let err = run_distribution(
            &config.distribution_config(),
            &sampler,
            &mut strategies,
            &net,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, SessionError::Refusal(Party::B)));
    }

    #[test]
    fn sessions_stay_within_the_round_budget() {
        let config = SessionConfig {
            record_transcript: true,
            per_party_subset: Some(10),
            ..small_config()
        };
        let run = run_session(&config, 9).unwrap();
        let max_round = run
            .transcript
            .records
            .iter()
            .map(|r| r.round)
            .max()
            .unwrap();
        let bound =
            (config.windows + run.result.tests_performed + 3 * 10 + 2) as u64;
        assert!(max_round < bound, "max round {max_round} >= bound {bound}");
    }
}
