//! Classical agreement phase: commander evidence, the consistency predicate,
//! lieutenant evaluation, forwarding with the inconsistent-data marker, and
//! the final decision table with traitor attribution.
//!
//! A plan message is only believed when it arrives with evidence: the list of
//! positions at which the plan value appears in the commander's secret list.
//! Each lieutenant checks that evidence against its own list. Position lists
//! satisfying the correlation law mark positions where the receiver's bit
//! equals the plan value, so a forged list mismatches the receiver in about a
//! third of its entries while genuine data stays near the source error ratio.
//! The gap between those two rates is what the `error_tolerance` threshold
//! exploits; detection is statistical, never absolute, and the residual
//! acceptance probability is an exact binomial tail reported alongside every
//! session.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::distribution::PartyList;

/// Default tolerance on the claimed-list length, as a fraction of L.
pub const DEFAULT_LENGTH_TOLERANCE: f64 = 0.05;

/// Default tolerance on the mismatch fraction. Sits between honest noise
/// (~5.5%) and the 1/3 mismatch rate a forger induces.
pub const DEFAULT_ERROR_TOLERANCE: f64 = 0.15;

#[derive(Debug, Error)]
pub enum AgreementError {
    #[error("length_tolerance must lie in [0, 1/3), got {0}")]
    InvalidLengthTolerance(f64),
    #[error("error_tolerance must lie in (0, 1/3), got {0}")]
    InvalidErrorTolerance(f64),
    #[error("plan value must be 0 or 1, got {0}")]
    InvalidPlan(u8),
}

/// A plan of action: attack or retreat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plan {
    Zero,
    One,
}

impl Plan {
    pub fn value(self) -> u8 {
        match self {
            Plan::Zero => 0,
            Plan::One => 1,
        }
    }

    pub fn from_value(value: u8) -> Result<Plan, AgreementError> {
        match value {
            0 => Ok(Plan::Zero),
            1 => Ok(Plan::One),
            other => Err(AgreementError::InvalidPlan(other)),
        }
    }

    pub fn flipped(self) -> Plan {
        match self {
            Plan::Zero => Plan::One,
            Plan::One => Plan::Zero,
        }
    }
}

impl Serialize for Plan {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.value())
    }
}

impl<'de> Deserialize<'de> for Plan {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = u8::deserialize(deserializer)?;
        Plan::from_value(value).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for Plan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A message between generals: a plan value, or the lieutenant-only marker
/// "I have received inconsistent data".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Message {
    Zero,
    One,
    Bot,
}

impl Message {
    pub fn as_plan(self) -> Option<Plan> {
        match self {
            Message::Zero => Some(Plan::Zero),
            Message::One => Some(Plan::One),
            Message::Bot => None,
        }
    }
}

impl From<Plan> for Message {
    fn from(plan: Plan) -> Message {
        match plan {
            Plan::Zero => Message::Zero,
            Plan::One => Message::One,
        }
    }
}

/// Strictly increasing 1-based positions into a party list. The constructor
/// normalizes (sorts and deduplicates); range checking happens against the
/// receiving list inside [`check_consistency`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct PositionList(Vec<u32>);

impl PositionList {
    pub fn new(mut positions: Vec<u32>) -> Self {
        positions.sort_unstable();
        positions.dedup();
        PositionList(positions)
    }

    pub fn empty() -> Self {
        PositionList(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positions(&self) -> &[u32] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for PositionList {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(PositionList::new(Vec::deserialize(deserializer)?))
    }
}

/// Thresholds of the consistency predicate.
///
/// `length_tolerance = None` disables the length sanity check; that mode
/// exists for exhaustive soundness checks over degenerate lists, where the
/// claimed length legitimately ranges over all of 0..=L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyParams {
    pub length_tolerance: Option<f64>,
    pub error_tolerance: f64,
}

impl ConsistencyParams {
    pub fn new(
        length_tolerance: Option<f64>,
        error_tolerance: f64,
    ) -> Result<Self, AgreementError> {
        if let Some(delta) = length_tolerance {
            if !(0.0..1.0 / 3.0).contains(&delta) {
                return Err(AgreementError::InvalidLengthTolerance(delta));
            }
        }
        if !(error_tolerance > 0.0 && error_tolerance < 1.0 / 3.0) {
            return Err(AgreementError::InvalidErrorTolerance(error_tolerance));
        }
        Ok(ConsistencyParams {
            length_tolerance,
            error_tolerance,
        })
    }

    /// Content check only; see the struct docs.
    pub fn content_only(error_tolerance: f64) -> Result<Self, AgreementError> {
        ConsistencyParams::new(None, error_tolerance)
    }
}

impl Default for ConsistencyParams {
    fn default() -> Self {
        ConsistencyParams {
            length_tolerance: Some(DEFAULT_LENGTH_TOLERANCE),
            error_tolerance: DEFAULT_ERROR_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InconsistencyReason {
    /// A claimed position points outside the receiver's list.
    PositionOutOfRange { position: u32, list_len: usize },
    /// The claimed list is not approximately L/3 long.
    LengthOutOfRange { claimed: usize, low: f64, high: f64 },
    /// Too many claimed positions disagree with the receiver's own values.
    TooManyMismatches { mismatches: usize, checked: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Consistency {
    Consistent,
    Inconsistent(InconsistencyReason),
}

impl Consistency {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Consistency::Consistent)
    }
}

/// All positions at which the plan value appears in the list, ascending.
///
/// For the commander's trit list this is the genuine evidence for `plan`;
/// the same scan over a lieutenant's bit list is what a forger uses to
/// assemble fake evidence.
pub fn build_position_list(list: &PartyList, plan: Plan) -> PositionList {
    let value = plan.value();
    PositionList(
        list.entries()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == value)
            .map(|(i, _)| i as u32 + 1)
            .collect(),
    )
}

/// The loyal commander's message: the plan plus its genuine position list,
/// identical for both lieutenants.
pub fn commander_payload(plan: Plan, list: &PartyList) -> (Message, PositionList) {
    (plan.into(), build_position_list(list, plan))
}

/// The consistency predicate: claimed positions must be in range, the
/// claimed length must be near L/3 (when the length check is enabled), and
/// at most an `error_tolerance` fraction of the claimed positions may carry
/// a local value different from the announced plan.
pub fn check_consistency(
    m: Plan,
    claimed: &PositionList,
    local: &PartyList,
    params: &ConsistencyParams,
) -> Consistency {
    let list_len = local.len();
    for &position in claimed.positions() {
        if position == 0 || position as usize > list_len {
            return Consistency::Inconsistent(InconsistencyReason::PositionOutOfRange {
                position,
                list_len,
            });
        }
    }
    if let Some(delta) = params.length_tolerance {
        let low = (1.0 / 3.0 - delta) * list_len as f64;
        let high = (1.0 / 3.0 + delta) * list_len as f64;
        let claimed_len = claimed.len() as f64;
        if claimed_len < low || claimed_len > high {
            return Consistency::Inconsistent(InconsistencyReason::LengthOutOfRange {
                claimed: claimed.len(),
                low,
                high,
            });
        }
    }
    let expected = m.value();
    let mismatches = claimed
        .positions()
        .iter()
        .filter(|&&p| local.get(p) != Some(expected))
        .count();
    if mismatches as f64 > params.error_tolerance * claimed.len() as f64 {
        return Consistency::Inconsistent(InconsistencyReason::TooManyMismatches {
            mismatches,
            checked: claimed.len(),
        });
    }
    Consistency::Consistent
}

/// What a lieutenant concluded from the commander's message.
#[derive(Debug, Clone, PartialEq)]
pub enum Phase1State {
    /// The data was consistent; the lieutenant holds the plan and the
    /// received evidence for forwarding.
    ConsistentGot { plan: Plan, claimed: PositionList },
    /// The data was inconsistent: the commander is lying to this lieutenant.
    GotInconsistent,
}

impl Phase1State {
    /// The message this lieutenant forwards to its peer: the received plan
    /// with the received evidence, or the inconsistent-data marker.
    pub fn forward_message(&self) -> (Message, PositionList) {
        match self {
            Phase1State::ConsistentGot { plan, claimed } => ((*plan).into(), claimed.clone()),
            Phase1State::GotInconsistent => (Message::Bot, PositionList::empty()),
        }
    }
}

/// First-phase evaluation of the commander's message. A commander may not
/// send the inconsistent-data marker; receiving one counts as inconsistent
/// data.
pub fn lieutenant_phase1(
    m: Message,
    claimed: PositionList,
    local: &PartyList,
    params: &ConsistencyParams,
) -> Phase1State {
    match m.as_plan() {
        Some(plan) => match check_consistency(plan, &claimed, local, params) {
            Consistency::Consistent => Phase1State::ConsistentGot { plan, claimed },
            Consistency::Inconsistent(_) => Phase1State::GotInconsistent,
        },
        None => Phase1State::GotInconsistent,
    }
}

/// A loyal party's final action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "plan", rename_all = "kebab-case")]
pub enum Action {
    /// Follow a plan received with convincing evidence.
    Follow(Plan),
    /// Follow the pre-agreed fallback plan (always 0).
    FollowFallback,
}

impl Action {
    /// The plan this action executes.
    pub fn plan(&self) -> Plan {
        match self {
            Action::Follow(plan) => *plan,
            Action::FollowFallback => Plan::Zero,
        }
    }
}

/// Who the deciding lieutenant concluded is lying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attribution {
    Nobody,
    Commander,
    Peer,
    CommanderAndPeer,
}

/// Which row of the decision table fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionCase {
    /// Commander and peer data both consistent, plans agree.
    AgreeingPlans,
    /// Both consistent but the plans conflict: only the commander can feed
    /// both lieutenants convincing data, so the commander is the traitor.
    ConflictingPlans,
    /// Own data consistent, peer reported inconsistent data. The peer has no
    /// way to prove that claim, so the commander's plan is followed.
    PeerClaimedInconsistent,
    /// Own data consistent, peer's forwarded evidence failed the check: the
    /// peer is the traitor.
    PeerEvidenceRejected,
    /// Own data inconsistent but the peer's forward is convincing: follow
    /// the peer, the commander is the traitor.
    OwnRejectedPeerAccepted,
    /// Both lieutenants saw inconsistent data: fall back, the commander is
    /// the traitor.
    BothRejected,
    /// Own data inconsistent and the peer's forward also failed the check.
    /// Unreachable with at most one traitor; fail safe on the fallback plan.
    OutsideSingleTraitor,
}

/// A lieutenant's final decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    #[serde(flatten)]
    pub action: Action,
    pub traitor: Attribution,
    pub case: DecisionCase,
}

/// The second-phase decision table. Pure: equal inputs produce equal
/// decisions.
pub fn decide(
    own: &Phase1State,
    peer_msg: Message,
    peer_list: &PositionList,
    local: &PartyList,
    params: &ConsistencyParams,
) -> Decision {
    match own {
        Phase1State::ConsistentGot { plan, .. } => match peer_msg.as_plan() {
            Some(peer_plan) => {
                if check_consistency(peer_plan, peer_list, local, params).is_consistent() {
                    if peer_plan == *plan {
                        Decision {
                            action: Action::Follow(*plan),
                            traitor: Attribution::Nobody,
                            case: DecisionCase::AgreeingPlans,
                        }
                    } else {
                        Decision {
                            action: Action::FollowFallback,
                            traitor: Attribution::Commander,
                            case: DecisionCase::ConflictingPlans,
                        }
                    }
                } else {
                    Decision {
                        action: Action::Follow(*plan),
                        traitor: Attribution::Peer,
                        case: DecisionCase::PeerEvidenceRejected,
                    }
                }
            }
            None => Decision {
                action: Action::Follow(*plan),
                traitor: Attribution::Nobody,
                case: DecisionCase::PeerClaimedInconsistent,
            },
        },
        Phase1State::GotInconsistent => match peer_msg.as_plan() {
            Some(peer_plan) => {
                if check_consistency(peer_plan, peer_list, local, params).is_consistent() {
                    Decision {
                        action: Action::Follow(peer_plan),
                        traitor: Attribution::Commander,
                        case: DecisionCase::OwnRejectedPeerAccepted,
                    }
                } else {
                    Decision {
                        action: Action::FollowFallback,
                        traitor: Attribution::CommanderAndPeer,
                        case: DecisionCase::OutsideSingleTraitor,
                    }
                }
            }
            None => Decision {
                action: Action::FollowFallback,
                traitor: Attribution::Commander,
                case: DecisionCase::BothRejected,
            },
        },
    }
}
