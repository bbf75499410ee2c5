//! Pluggable traitor behavior, injected at the protocol's decision points.
//!
//! A strategy sees only what the traitor legitimately holds: its own list,
//! the messages it has received, and its own random stream. The hooks return
//! *actions*; the harness performs all channel traffic, so a strategy cannot
//! spoof sender identities or read other parties' secrets by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agreement::{build_position_list, Message, Phase1State, Plan, PositionList};
use crate::agreement::ConsistencyParams;
use crate::distribution::PartyList;
use crate::party::Party;

/// What the commander knows when composing its messages.
pub struct CommanderView<'a> {
    pub plan: Plan,
    pub list: &'a PartyList,
    pub params: &'a ConsistencyParams,
}

/// What a lieutenant knows when forwarding to its peer. `peer_forward` is
/// present only for the second speaker of the round.
pub struct ForwardView<'a> {
    pub party: Party,
    pub list: &'a PartyList,
    pub received_message: Message,
    pub received_positions: &'a PositionList,
    pub phase1: &'a Phase1State,
    pub peer_forward: Option<&'a (Message, PositionList)>,
    pub params: &'a ConsistencyParams,
}

/// What a party knows when asked to disclose a list value during a
/// correlation test round.
pub struct TestReplyView<'a> {
    pub party: Party,
    pub list: &'a PartyList,
    pub position: u32,
    pub own_value: u8,
    /// Values already disclosed earlier in this round.
    pub prior_replies: &'a [(Party, u8)],
}

pub enum CommanderAction {
    Honest,
    /// Separate messages for the two lieutenants.
    Split {
        to_b: (Message, PositionList),
        to_c: (Message, PositionList),
    },
}

pub enum ForwardAction {
    Honest,
    Send(Message, PositionList),
}

pub enum TestReplyAction {
    Honest,
    Value(u8),
    /// Refusing to answer is a protocol violation attributed to this party;
    /// the session aborts.
    Refuse,
}

/// Behavior hooks at the protocol's decision points. Default implementations
/// are honest.
pub trait Strategy {
    fn on_commander_send(&mut self, _view: &CommanderView) -> CommanderAction {
        CommanderAction::Honest
    }

    fn on_forward(&mut self, _view: &ForwardView) -> ForwardAction {
        ForwardAction::Honest
    }

    fn on_test_reply(&mut self, _view: &TestReplyView) -> TestReplyAction {
        TestReplyAction::Honest
    }
}

/// The identity strategy.
pub struct Honest;

impl Strategy for Honest {}

/// A traitor commander that sends plan 0 with its genuine zero-position
/// evidence to B, and plan 1 with its genuine one-position evidence to C.
/// Both messages are individually consistent, so both lieutenants see
/// conflicting consistent plans and fall back while naming the commander.
pub struct ConflictingCommander;

impl Strategy for ConflictingCommander {
    fn on_commander_send(&mut self, view: &CommanderView) -> CommanderAction {
        CommanderAction::Split {
            to_b: (
                Message::Zero,
                build_position_list(view.list, Plan::Zero),
            ),
            to_c: (Message::One, build_position_list(view.list, Plan::One)),
        }
    }
}

/// A traitor lieutenant that announces a plan (flipped by default) with a
/// forged position list assembled from its own matching entries, padded with
/// random unused positions when short and truncated to the genuine evidence
/// length. Each forged position mismatches the victim's list with
/// probability 1/3, so the victim's consistency check rejects it except with
/// the binomial-tail residual probability.
pub struct ForgingLieutenant {
    flip: bool,
    rng: ChaCha8Rng,
}

impl ForgingLieutenant {
    pub fn new(flip: bool, seed: u64) -> Self {
        ForgingLieutenant {
            flip,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Strategy for ForgingLieutenant {
    fn on_forward(&mut self, view: &ForwardView) -> ForwardAction {
        let base = view.received_message.as_plan().unwrap_or(Plan::Zero);
        let announced = if self.flip { base.flipped() } else { base };
        let target = if view.received_positions.is_empty() {
            (view.list.len() / 3).max(1)
        } else {
            view.received_positions.len()
        };
        let forged = forge_positions(view.list, announced, target, &mut self.rng);
        ForwardAction::Send(announced.into(), forged)
    }
}

/// Positions of `list` whose value equals the announced plan, resized to
/// `target` by random truncation or random padding.
fn forge_positions(
    list: &PartyList,
    announced: Plan,
    target: usize,
    rng: &mut ChaCha8Rng,
) -> PositionList {
    let mut picked: Vec<u32> = build_position_list(list, announced).positions().to_vec();
    while picked.len() > target {
        let i = rng.gen_range(0..picked.len());
        picked.swap_remove(i);
    }
    let target = target.min(list.len());
    while picked.len() < target {
        let p = rng.gen_range(1..=list.len() as u32);
        if !picked.contains(&p) {
            picked.push(p);
        }
    }
    PositionList::new(picked)
}

/// A traitor lieutenant that claims to have received inconsistent data
/// despite holding consistent data. The victim has no way to verify the
/// claim and follows the commander's plan, so loyal parties still agree.
pub struct FalseBotLieutenant;

impl Strategy for FalseBotLieutenant {
    fn on_forward(&mut self, _view: &ForwardView) -> ForwardAction {
        ForwardAction::Send(Message::Bot, PositionList::empty())
    }
}

/// Fuzzing strategy: at every hook, picks uniformly among behaving honestly,
/// flipping the plan (or value), sending the inconsistent-data marker, a
/// random position list, or replaying a message it has already seen. Every
/// arm is total, so sessions always run to a decision.
pub struct RandomAdversary {
    rng: ChaCha8Rng,
}

impl RandomAdversary {
    pub fn new(seed: u64) -> Self {
        RandomAdversary {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn random_positions(&mut self, list_len: usize) -> PositionList {
        if list_len == 0 {
            return PositionList::empty();
        }
        let len = self.rng.gen_range(0..=list_len);
        let positions = (0..len)
            .map(|_| self.rng.gen_range(1..=list_len as u32))
            .collect();
        PositionList::new(positions)
    }
}

impl Strategy for RandomAdversary {
    fn on_commander_send(&mut self, view: &CommanderView) -> CommanderAction {
        match self.rng.gen_range(0..5u8) {
            0 => CommanderAction::Honest,
            1 => {
                let flipped = view.plan.flipped();
                let positions = build_position_list(view.list, flipped);
                CommanderAction::Split {
                    to_b: (flipped.into(), positions.clone()),
                    to_c: (flipped.into(), positions),
                }
            }
            2 => CommanderAction::Split {
                to_b: (Message::Bot, PositionList::empty()),
                to_c: (Message::Bot, PositionList::empty()),
            },
            3 => {
                let to_b = self.random_positions(view.list.len());
                let to_c = self.random_positions(view.list.len());
                CommanderAction::Split {
                    to_b: (view.plan.into(), to_b),
                    to_c: (view.plan.into(), to_c),
                }
            }
            // Nothing received yet to replay; stay honest.
            _ => CommanderAction::Honest,
        }
    }

    fn on_forward(&mut self, view: &ForwardView) -> ForwardAction {
        match self.rng.gen_range(0..5u8) {
            0 => ForwardAction::Honest,
            1 => {
                let base = view.received_message.as_plan().unwrap_or(Plan::Zero);
                ForwardAction::Send(base.flipped().into(), view.received_positions.clone())
            }
            2 => ForwardAction::Send(Message::Bot, PositionList::empty()),
            3 => {
                let positions = self.random_positions(view.list.len());
                ForwardAction::Send(view.received_message, positions)
            }
            _ => match view.peer_forward {
                Some((msg, list)) => ForwardAction::Send(*msg, list.clone()),
                None => ForwardAction::Honest,
            },
        }
    }

    fn on_test_reply(&mut self, view: &TestReplyView) -> TestReplyAction {
        let value_range = if view.party == Party::A { 3 } else { 2 };
        match self.rng.gen_range(0..5u8) {
            0 => TestReplyAction::Honest,
            1 => TestReplyAction::Value((view.own_value + 1) % value_range),
            2 | 3 => TestReplyAction::Value(self.rng.gen_range(0..value_range)),
            _ => match view.prior_replies.last() {
                Some((_, value)) => TestReplyAction::Value((*value).min(value_range - 1)),
                None => TestReplyAction::Honest,
            },
        }
    }
}

/// Strategy selection by name plus parameters, as it appears in session
/// configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum StrategyKind {
    Honest,
    ConflictingCommander,
    ForgingLieutenant {
        #[serde(default = "default_flip")]
        flip: bool,
    },
    FalseBotLieutenant,
    Random {
        seed: u64,
    },
}

fn default_flip() -> bool {
    true
}

impl StrategyKind {
    /// Instantiates the strategy. `fallback_seed` feeds strategies that need
    /// randomness but carry no explicit seed.
    pub fn build(&self, fallback_seed: u64) -> Box<dyn Strategy> {
        match self {
            StrategyKind::Honest => Box::new(Honest),
            StrategyKind::ConflictingCommander => Box::new(ConflictingCommander),
            StrategyKind::ForgingLieutenant { flip } => {
                Box::new(ForgingLieutenant::new(*flip, fallback_seed))
            }
            StrategyKind::FalseBotLieutenant => Box::new(FalseBotLieutenant),
            StrategyKind::Random { seed } => Box::new(RandomAdversary::new(*seed)),
        }
    }

    /// Roles the strategy is defined for.
    pub fn allowed_roles(&self) -> &'static [Party] {
        match self {
            StrategyKind::Honest | StrategyKind::Random { .. } => &Party::ALL,
            StrategyKind::ConflictingCommander => &[Party::A],
            StrategyKind::ForgingLieutenant { .. } | StrategyKind::FalseBotLieutenant => {
                &Party::LIEUTENANTS
            }
        }
    }
}

/// The three behavior slots of one session.
pub struct PartyStrategies {
    slots: [Box<dyn Strategy>; 3],
}

impl PartyStrategies {
    pub fn honest() -> Self {
        PartyStrategies {
            slots: [Box::new(Honest), Box::new(Honest), Box::new(Honest)],
        }
    }

    pub fn set(&mut self, party: Party, strategy: Box<dyn Strategy>) {
        self.slots[party.index()] = strategy;
    }

    pub fn get_mut(&mut self, party: Party) -> &mut dyn Strategy {
        self.slots[party.index()].as_mut()
    }
}

impl Default for PartyStrategies {
    fn default() -> Self {
        PartyStrategies::honest()
    }
}
