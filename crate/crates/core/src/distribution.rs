//! Distribute-and-test phase: coincidence extraction with role-rotated
//! disclosure, random-position correlation tests, error-ratio estimation, and
//! the collective abort-or-proceed decision.
//!
//! The phase turns a stream of source windows into three equal-length secret
//! lists. Disclosure of detection flags and basis settings runs over the
//! pairwise channels with the collecting role rotated through thirds, so no
//! single general can fake the bookkeeping unobserved. A batch of random
//! positions is then sacrificed to correlation tests; every tested position
//! is discarded from all three lists, and the observed error ratio decides
//! whether the survivors are released to the agreement phase.

use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{PartyStrategies, TestReplyAction, TestReplyView};
use crate::harness::channel::ChannelSet;
use crate::harness::wire::WireMessage;
use crate::harness::SessionError;
use crate::party::Party;
use crate::quantum::{encode_records, JointOutcome, SourceSampler};

/// Default number of correlation test rounds for a raw list of `raw_len`
/// entries: enough for a ~2.5% standard error on the estimated ratio.
pub fn default_test_count(raw_len: usize) -> usize {
    (raw_len / 10).max(100)
}

/// Testers take turns in this order, starting with C.
pub const TESTER_ROTATION: [Party; 3] = [Party::C, Party::B, Party::A];

/// Collectors for the three disclosure thirds, in order.
pub const COLLECTOR_ROTATION: [Party; 3] = [Party::C, Party::B, Party::A];

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("party {owner} list entry at position {position} has invalid value {value}")]
    InvalidEntry {
        owner: Party,
        position: u32,
        value: u8,
    },
    #[error("lists have different lengths: A={a}, B={b}, C={c}")]
    LengthMismatch { a: usize, b: usize, c: usize },
    #[error("list owner mismatch: expected {expected}, got {got}")]
    OwnerMismatch { expected: Party, got: Party },
    #[error("error ratio is undefined without at least one test")]
    NoTests,
    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },
}

/// A general's secret list: trits for A, bits for B and C.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyList {
    owner: Party,
    entries: Vec<u8>,
}

impl PartyList {
    pub fn new(owner: Party, entries: Vec<u8>) -> Result<Self, DistributionError> {
        let max = if owner == Party::A { 2 } else { 1 };
        for (i, &value) in entries.iter().enumerate() {
            if value > max {
                return Err(DistributionError::InvalidEntry {
                    owner,
                    position: i as u32 + 1,
                    value,
                });
            }
        }
        Ok(PartyList { owner, entries })
    }

    pub fn owner(&self) -> Party {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Value at a 1-based position.
    pub fn get(&self, position: u32) -> Option<u8> {
        if position == 0 {
            return None;
        }
        self.entries.get(position as usize - 1).copied()
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    /// Number of entries equal to `value`.
    pub fn count_of(&self, value: u8) -> usize {
        self.entries.iter().filter(|&&v| v == value).count()
    }

    /// Serializes as `position,value` rows with a header, positions 1-based.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DistributionError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["position", "value"]).map_err(csv_err)?;
        for (i, value) in self.entries.iter().enumerate() {
            out.write_record([(i + 1).to_string(), value.to_string()])
                .map_err(csv_err)?;
        }
        out.flush().map_err(|e| DistributionError::Csv {
            line: 0,
            message: e.to_string(),
        })
    }
}

/// One joint list entry at a position. Valid entries are 000, 111, 201, 210.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub position: u32,
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

impl TripleRecord {
    pub fn is_valid(&self) -> bool {
        is_valid_triple(self.a, self.b, self.c)
    }
}

/// The correlation predicate: trit 0 pairs with bits (0,0), trit 1 with
/// (1,1), and trit 2 with (0,1) or (1,0).
pub fn is_valid_triple(a: u8, b: u8, c: u8) -> bool {
    matches!((a, b, c), (0, 0, 0) | (1, 1, 1) | (2, 0, 1) | (2, 1, 0))
}

/// The three lists of one session; equal length by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListTriple {
    pub a: PartyList,
    pub b: PartyList,
    pub c: PartyList,
}

impl ListTriple {
    pub fn new(a: PartyList, b: PartyList, c: PartyList) -> Result<Self, DistributionError> {
        for (list, expected) in [(&a, Party::A), (&b, Party::B), (&c, Party::C)] {
            if list.owner() != expected {
                return Err(DistributionError::OwnerMismatch {
                    expected,
                    got: list.owner(),
                });
            }
        }
        if a.len() != b.len() || b.len() != c.len() {
            return Err(DistributionError::LengthMismatch {
                a: a.len(),
                b: b.len(),
                c: c.len(),
            });
        }
        Ok(ListTriple { a, b, c })
    }

    /// Builds raw lists directly from encoded values.
    pub fn from_values(values: &[(u8, u8, u8)]) -> Result<Self, DistributionError> {
        let a = PartyList::new(Party::A, values.iter().map(|v| v.0).collect())?;
        let b = PartyList::new(Party::B, values.iter().map(|v| v.1).collect())?;
        let c = PartyList::new(Party::C, values.iter().map(|v| v.2).collect())?;
        ListTriple::new(a, b, c)
    }

    /// Random lists satisfying the correlation law exactly: combinations 000
    /// and 111 with probability 1/3 each, 201 and 210 with 1/6 each.
    pub fn random_correlated(len: usize, rng: &mut impl Rng) -> Self {
        let values: Vec<(u8, u8, u8)> = (0..len)
            .map(|_| match rng.gen_range(0..6u8) {
                0 | 1 => (0, 0, 0),
                2 | 3 => (1, 1, 1),
                4 => (2, 0, 1),
                _ => (2, 1, 0),
            })
            .collect();
        ListTriple::from_values(&values).expect("valid by construction")
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn list(&self, party: Party) -> &PartyList {
        match party {
            Party::A => &self.a,
            Party::B => &self.b,
            Party::C => &self.c,
        }
    }

    pub fn record(&self, position: u32) -> Option<TripleRecord> {
        Some(TripleRecord {
            position,
            a: self.a.get(position)?,
            b: self.b.get(position)?,
            c: self.c.get(position)?,
        })
    }

    pub fn records(&self) -> impl Iterator<Item = TripleRecord> + '_ {
        (1..=self.len() as u32).map(|p| self.record(p).expect("position in range"))
    }

    /// New triple keeping only the given 1-based positions (ascending),
    /// re-indexed from 1.
    pub fn select(&self, positions: &[u32]) -> Result<Self, DistributionError> {
        let pick = |list: &PartyList| -> Vec<u8> {
            positions
                .iter()
                .map(|&p| list.get(p).expect("surviving position in range"))
                .collect()
        };
        ListTriple::new(
            PartyList::new(Party::A, pick(&self.a))?,
            PartyList::new(Party::B, pick(&self.b))?,
            PartyList::new(Party::C, pick(&self.c))?,
        )
    }

    /// Serializes as `position,lA,lB,lC` rows with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DistributionError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["position", "lA", "lB", "lC"])
            .map_err(csv_err)?;
        for record in self.records() {
            out.write_record([
                record.position.to_string(),
                record.a.to_string(),
                record.b.to_string(),
                record.c.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| DistributionError::Csv {
            line: 0,
            message: e.to_string(),
        })
    }

    /// Reads the combined `position,lA,lB,lC` format. Extra columns (such as
    /// a fixture's `flagged` marker) are ignored; positions must run 1..=N in
    /// order.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DistributionError> {
        let mut input = csv::Reader::from_reader(reader);
        let headers = input.headers().map_err(csv_err)?.clone();
        let col = |name: &str| -> Result<usize, DistributionError> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DistributionError::Csv {
                    line: 1,
                    message: format!("missing column `{name}`"),
                })
        };
        let (p_col, a_col, b_col, c_col) = (col("position")?, col("lA")?, col("lB")?, col("lC")?);
        let mut values = Vec::new();
        for (i, row) in input.records().enumerate() {
            let line = i as u64 + 2;
            let row = row.map_err(|e| DistributionError::Csv {
                line,
                message: e.to_string(),
            })?;
            let field = |idx: usize| -> Result<u8, DistributionError> {
                row.get(idx)
                    .and_then(|s| s.trim().parse::<u8>().ok())
                    .ok_or_else(|| DistributionError::Csv {
                        line,
                        message: format!("malformed numeric field in row {row:?}"),
                    })
            };
            let position: u64 = row
                .get(p_col)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| DistributionError::Csv {
                    line,
                    message: "malformed position field".into(),
                })?;
            if position != i as u64 + 1 {
                return Err(DistributionError::Csv {
                    line,
                    message: format!("positions must run 1..=N in order, got {position}"),
                });
            }
            values.push((field(a_col)?, field(b_col)?, field(c_col)?));
        }
        ListTriple::from_values(&values)
    }
}

fn csv_err(e: csv::Error) -> DistributionError {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    DistributionError::Csv {
        line,
        message: e.to_string(),
    }
}

/// Why a distribution session refused to release lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum AbortReason {
    QerAboveThreshold { qer: f64, threshold: f64 },
    InsufficientEntries { available: usize, minimum: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Proceed,
    Abort(AbortReason),
}

impl Verdict {
    pub fn is_proceed(&self) -> bool {
        matches!(self, Verdict::Proceed)
    }
}

/// Result of the distribute-and-test phase. Lists are present exactly when
/// the verdict is `Proceed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionOutcome {
    pub verdict: Verdict,
    pub lists: Option<ListTriple>,
    pub qer_estimate: f64,
    pub tests_performed: usize,
    /// Error ratios from the optional per-party verification subsets.
    pub per_party_qer: Option<[f64; 3]>,
    /// Length of the raw lists before test rounds consumed entries.
    pub raw_length: usize,
}

/// Speaking order and collecting party for coincidence extraction. Each
/// party collects for one third of the windows; within a third, which
/// speaker goes first is a fresh 50/50 draw per window.
#[derive(Debug, Clone)]
pub struct DisclosureSchedule {
    windows: usize,
    boundaries: [usize; 2],
    first_speaker_low: Vec<bool>,
}

impl DisclosureSchedule {
    pub fn generate(windows: usize, rng: &mut impl Rng) -> Self {
        let first_speaker_low = (0..windows).map(|_| rng.gen::<bool>()).collect();
        DisclosureSchedule {
            windows,
            boundaries: [windows / 3, windows * 2 / 3],
            first_speaker_low,
        }
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn third(&self, window: usize) -> usize {
        if window < self.boundaries[0] {
            0
        } else if window < self.boundaries[1] {
            1
        } else {
            2
        }
    }

    pub fn collector(&self, window: usize) -> Party {
        COLLECTOR_ROTATION[self.third(window)]
    }

    /// The two speakers for a window, in speaking order.
    pub fn speakers(&self, window: usize) -> [Party; 2] {
        let [low, high] = self.collector(window).others();
        if self.first_speaker_low[window] {
            [low, high]
        } else {
            [high, low]
        }
    }
}

/// Outcome of one correlation test round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub position: u32,
    pub tester: Party,
    pub values: (u8, u8, u8),
    pub pass: bool,
}

/// Violations over total tests.
pub fn estimate_qer(results: &[TestResult]) -> Result<f64, DistributionError> {
    if results.is_empty() {
        return Err(DistributionError::NoTests);
    }
    let violations = results.iter().filter(|r| !r.pass).count();
    Ok(violations as f64 / results.len() as f64)
}

/// Abort exactly when the observed ratio exceeds the threshold; a tie
/// proceeds.
pub fn decide_abort(qer: f64, threshold: f64) -> Verdict {
    if qer > threshold {
        Verdict::Abort(AbortReason::QerAboveThreshold { qer, threshold })
    } else {
        Verdict::Proceed
    }
}

/// Parameters of the distribute-and-test phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionConfig {
    /// Raw source windows to emit.
    pub windows: usize,
    /// Correlation test rounds; `None` derives [`default_test_count`].
    pub tests: Option<usize>,
    pub qer_threshold: f64,
    /// Released lists shorter than this abort the session.
    pub min_entries: usize,
    /// Optional per-party verification subset size.
    pub per_party_subset: Option<usize>,
}

impl Default for DistributionConfig {
    fn default() -> Self {
        DistributionConfig {
            windows: 48_184,
            tests: None,
            qer_threshold: 0.10,
            min_entries: 300,
            per_party_subset: None,
        }
    }
}

/// Runs the disclosure protocol over the channels and returns the raw lists
/// built from the windows every party detected in a common basis.
///
/// Only detected windows are spoken about; the collector answers each
/// disclosure pair with a keep/reject verdict. Rounds advance one window at
/// a time so transcripts capture the exchange in order.
pub fn extract_coincidences(
    events: &[JointOutcome],
    schedule: &DisclosureSchedule,
    net: &ChannelSet,
) -> Result<ListTriple, SessionError> {
    let mut values = Vec::new();
    for (window, event) in events.iter().enumerate() {
        net.set_round(window as u64);
        if !event.detected {
            continue;
        }
        let collector = schedule.collector(window);
        let speakers = schedule.speakers(window);
        for speaker in speakers {
            net.send(
                speaker,
                collector,
                WireMessage::Disclose {
                    window: window as u32,
                    detected: true,
                    basis: event.bases.of(speaker),
                },
            );
        }
        for speaker in speakers {
            net.recv(collector, speaker)?;
        }
        let keep = event.bases.all_same();
        for speaker in speakers {
            net.send(
                collector,
                speaker,
                WireMessage::Verdict {
                    window: window as u32,
                    keep,
                },
            );
            net.recv(speaker, collector)?;
        }
        if keep {
            values.push(encode_records(event));
        }
    }
    ListTriple::from_values(&values).map_err(SessionError::from)
}

/// One correlation test round: the tester draws a fresh position, all three
/// values are disclosed to everyone, and the position is discarded.
pub fn correlation_test_round(
    tester: Party,
    lists: &ListTriple,
    remaining: &mut Vec<u32>,
    strategies: &mut PartyStrategies,
    net: &ChannelSet,
    rng: &mut ChaCha8Rng,
) -> Result<TestResult, SessionError> {
    debug_assert!(!remaining.is_empty(), "test round needs untested positions");
    let pick = rng.gen_range(0..remaining.len());
    let position = remaining.swap_remove(pick);

    for other in tester.others() {
        net.send(tester, other, WireMessage::TestQuery { position });
    }
    for other in tester.others() {
        net.recv(other, tester)?;
    }

    // Everyone discloses their value at the tested position to both peers;
    // the tester's own announcement goes last. A traitor may lie here or
    // refuse outright.
    let mut order = tester.others().to_vec();
    order.push(tester);
    let mut disclosed: Vec<(Party, u8)> = Vec::with_capacity(3);
    for speaker in order {
        let own_value = lists
            .list(speaker)
            .get(position)
            .expect("tested position within list");
        let action = strategies.get_mut(speaker).on_test_reply(&TestReplyView {
            party: speaker,
            list: lists.list(speaker),
            position,
            own_value,
            prior_replies: &disclosed,
        });
        let value = match action {
            TestReplyAction::Honest => own_value,
            TestReplyAction::Value(v) => v,
            TestReplyAction::Refuse => return Err(SessionError::Refusal(speaker)),
        };
        for peer in speaker.others() {
            net.send(speaker, peer, WireMessage::TestReply { position, value });
            net.recv(peer, speaker)?;
        }
        disclosed.push((speaker, value));
    }

    let value_of = |p: Party| disclosed.iter().find(|(s, _)| *s == p).expect("spoke").1;
    let values = (value_of(Party::A), value_of(Party::B), value_of(Party::C));
    Ok(TestResult {
        position,
        tester,
        values,
        pass: is_valid_triple(values.0, values.1, values.2),
    })
}

/// Executes the whole distribute-and-test phase: emission, extraction,
/// shared test rounds (testers rotating C, B, A), optional per-party subset
/// checks, and the abort-or-proceed decision.
pub fn run_distribution(
    config: &DistributionConfig,
    sampler: &SourceSampler,
    strategies: &mut PartyStrategies,
    net: &ChannelSet,
    rng: &mut ChaCha8Rng,
) -> Result<DistributionOutcome, SessionError> {
    let schedule = DisclosureSchedule::generate(config.windows, rng);
    let events: Vec<JointOutcome> = (0..config.windows)
        .map(|_| sampler.emit_window(rng))
        .collect();
    let raw = extract_coincidences(&events, &schedule, net)?;
    let raw_length = raw.len();

    let abort = |reason, qer, tests, per_party| DistributionOutcome {
        verdict: Verdict::Abort(reason),
        lists: None,
        qer_estimate: qer,
        tests_performed: tests,
        per_party_qer: per_party,
        raw_length,
    };

    if raw_length == 0 {
        return Ok(abort(
            AbortReason::InsufficientEntries {
                available: 0,
                minimum: config.min_entries,
            },
            0.0,
            0,
            None,
        ));
    }

    let tests = config
        .tests
        .unwrap_or_else(|| default_test_count(raw_length))
        .min(raw_length);
    let mut remaining: Vec<u32> = (1..=raw_length as u32).collect();
    let mut round = config.windows as u64;
    let mut results = Vec::with_capacity(tests);
    for i in 0..tests {
        net.set_round(round);
        round += 1;
        let tester = TESTER_ROTATION[i % 3];
        results.push(correlation_test_round(
            tester, &raw, &mut remaining, strategies, net, rng,
        )?);
    }
    let qer_estimate = estimate_qer(&results)?;

    let per_party_qer = match config.per_party_subset {
        Some(size) => {
            let mut ratios = [0.0f64; 3];
            for (slot, party) in ratios.iter_mut().zip(Party::ALL) {
                let rounds = size.min(remaining.len());
                let mut subset = Vec::with_capacity(rounds);
                for _ in 0..rounds {
                    net.set_round(round);
                    round += 1;
                    subset.push(correlation_test_round(
                        party, &raw, &mut remaining, strategies, net, rng,
                    )?);
                }
                *slot = estimate_qer(&subset).unwrap_or(0.0);
            }
            Some(ratios)
        }
        None => None,
    };

    if let Verdict::Abort(reason) = decide_abort(qer_estimate, config.qer_threshold) {
        return Ok(abort(reason, qer_estimate, results.len(), per_party_qer));
    }
    if remaining.len() < config.min_entries {
        return Ok(abort(
            AbortReason::InsufficientEntries {
                available: remaining.len(),
                minimum: config.min_entries,
            },
            qer_estimate,
            results.len(),
            per_party_qer,
        ));
    }

    remaining.sort_unstable();
    let released = raw.select(&remaining).map_err(SessionError::from)?;
    Ok(DistributionOutcome {
        verdict: Verdict::Proceed,
        lists: Some(released),
        qer_estimate,
        tests_performed: results.len(),
        per_party_qer,
        raw_length,
    })
}
