//! Transcript capture, serialization, and replay.
//!
//! A transcript is a header (seed, config and its hash), the ordered wire
//! records, and — when capture is enabled — the released lists and the
//! session result. The file format is one JSON object per line, each tagged
//! with its line type. Replaying a transcript re-evaluates the pure decision
//! pipeline from the recorded messages and lists, without touching the
//! source simulation, and must reproduce every recorded decision.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::session::{LieutenantDecisions, SessionConfig, SessionResult};
use super::wire::{WireMessage, WireRecord};
use crate::agreement::{decide, lieutenant_phase1, Message, PositionList};
use crate::distribution::{is_valid_triple, ListTriple};
use crate::party::Party;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("transcript has no header line")]
    MissingHeader,
    #[error("replay needs the released lists in the transcript")]
    MissingLists,
    #[error("replay needs the recorded session result")]
    MissingResult,
    #[error("transcript is missing the {0} message records")]
    MissingRecords(&'static str),
}

/// Session metadata at the top of every transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub seed: u64,
    pub config_hash: String,
    pub config: SessionConfig,
}

/// The full record of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub records: Vec<WireRecord>,
    /// Released lists, captured so replay can re-run the decision pipeline.
    pub lists: Option<ListTriple>,
    pub result: Option<SessionResult>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum TranscriptLine {
    Header(TranscriptHeader),
    Record(WireRecord),
    Lists(ListTriple),
    Result(SessionResult),
}

impl Transcript {
    /// One JSON object per line: header, records in order, then lists and
    /// result when present.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &TranscriptLine| {
            out.push_str(&serde_json::to_string(line).expect("transcript serializes"));
            out.push('\n');
        };
        push(&TranscriptLine::Header(self.header.clone()));
        for record in &self.records {
            push(&TranscriptLine::Record(record.clone()));
        }
        if let Some(lists) = &self.lists {
            push(&TranscriptLine::Lists(lists.clone()));
        }
        if let Some(result) = &self.result {
            push(&TranscriptLine::Result(result.clone()));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TranscriptError> {
        let mut header = None;
        let mut records = Vec::new();
        let mut lists = None;
        let mut result = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TranscriptLine =
                serde_json::from_str(line).map_err(|source| TranscriptError::Parse {
                    line: i + 1,
                    source,
                })?;
            match parsed {
                TranscriptLine::Header(h) => header = Some(h),
                TranscriptLine::Record(r) => records.push(r),
                TranscriptLine::Lists(l) => lists = Some(l),
                TranscriptLine::Result(r) => result = Some(r),
            }
        }
        Ok(Transcript {
            header: header.ok_or(TranscriptError::MissingHeader)?,
            records,
            lists,
            result,
        })
    }

    pub fn write_to(&self, path: &Path) -> Result<(), TranscriptError> {
        Ok(fs::write(path, self.to_jsonl())?)
    }

    pub fn read_from(path: &Path) -> Result<Self, TranscriptError> {
        Transcript::from_jsonl(&fs::read_to_string(path)?)
    }
}

/// Hex SHA-256 of the canonical JSON encoding of a session config.
pub fn config_hash(config: &SessionConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// What replaying a transcript reproduced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub decisions: LieutenantDecisions,
    pub decisions_match: bool,
    /// Error ratio recomputed from the recorded test replies.
    pub recomputed_qer: f64,
    pub qer_matches: bool,
}

fn payload_to(
    records: &[WireRecord],
    from: Party,
    to: Party,
) -> Option<(Message, PositionList)> {
    let mut plan: Option<Message> = None;
    for record in records.iter().filter(|r| r.from == from && r.to == to) {
        match &record.msg {
            WireMessage::Bot => return Some((Message::Bot, PositionList::empty())),
            WireMessage::Plan { plan: p } => plan = Some((*p).into()),
            WireMessage::Positions { positions } => {
                if let Some(m) = plan {
                    return Some((m, positions.clone()));
                }
            }
            _ => {}
        }
    }
    None
}

/// Re-runs the pure decision pipeline from the recorded messages and lists
/// and compares against the recorded result. Also recomputes the shared
/// error-ratio estimate from the recorded test replies.
pub fn replay_transcript(transcript: &Transcript) -> Result<ReplayReport, TranscriptError> {
    let lists = transcript
        .lists
        .as_ref()
        .ok_or(TranscriptError::MissingLists)?;
    let result = transcript
        .result
        .as_ref()
        .ok_or(TranscriptError::MissingResult)?;
    let params = &transcript.header.config.consistency;
    let records = &transcript.records;

    let from_a_to_b =
        payload_to(records, Party::A, Party::B).ok_or(TranscriptError::MissingRecords("A->B"))?;
    let from_a_to_c =
        payload_to(records, Party::A, Party::C).ok_or(TranscriptError::MissingRecords("A->C"))?;
    let forward_b_to_c =
        payload_to(records, Party::B, Party::C).ok_or(TranscriptError::MissingRecords("B->C"))?;
    let forward_c_to_b =
        payload_to(records, Party::C, Party::B).ok_or(TranscriptError::MissingRecords("C->B"))?;

    let phase1_b = lieutenant_phase1(from_a_to_b.0, from_a_to_b.1, &lists.b, params);
    let phase1_c = lieutenant_phase1(from_a_to_c.0, from_a_to_c.1, &lists.c, params);
    let decisions = LieutenantDecisions {
        b: decide(
            &phase1_b,
            forward_c_to_b.0,
            &forward_c_to_b.1,
            &lists.b,
            params,
        ),
        c: decide(
            &phase1_c,
            forward_b_to_c.0,
            &forward_b_to_c.1,
            &lists.c,
            params,
        ),
    };
    let decisions_match = result.decisions == Some(decisions);

    // Test replies arrive once per (round, speaker); reassemble each round's
    // triple and recheck it. Only the shared rounds count toward the
    // estimate, so stop after `tests_performed` distinct rounds.
    let mut rounds: Vec<(u64, [Option<u8>; 3])> = Vec::new();
    for record in records {
        if let WireMessage::TestReply { value, .. } = record.msg {
            match rounds.iter_mut().find(|(round, _)| *round == record.round) {
                Some((_, values)) => values[record.from.index()].get_or_insert(value),
                None => {
                    if rounds.len() == result.tests_performed {
                        break;
                    }
                    rounds.push((record.round, [None, None, None]));
                    rounds.last_mut().unwrap().1[record.from.index()].get_or_insert(value)
                }
            };
        }
    }
    let mut violations = 0usize;
    for (_, values) in &rounds {
        if let [Some(a), Some(b), Some(c)] = values {
            if !is_valid_triple(*a, *b, *c) {
                violations += 1;
            }
        }
    }
    let recomputed_qer = if rounds.is_empty() {
        0.0
    } else {
        violations as f64 / rounds.len() as f64
    };
    let qer_matches = recomputed_qer == result.qer_estimate;

    Ok(ReplayReport {
        decisions,
        decisions_match,
        recomputed_qer,
        qer_matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::session::run_session;
    use crate::quantum::NoiseModel;

    fn recorded_config() -> SessionConfig {
        SessionConfig {
            windows: 6_000,
            noise: NoiseModel {
                p_corrupt: 0.0875,
                p_detect: 0.5,
            },
            min_entries: 100,
            record_transcript: true,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn identical_seed_and_config_yield_byte_identical_transcripts() {
        let config = recorded_config();
        let first = run_session(&config, 42).unwrap();
        let second = run_session(&config, 42).unwrap();
        assert_eq!(first.transcript.to_jsonl(), second.transcript.to_jsonl());
        let third = run_session(&config, 43).unwrap();
        assert_ne!(first.transcript.to_jsonl(), third.transcript.to_jsonl());
    }

    #[test]
    fn transcripts_round_trip_through_jsonl() {
        let run = run_session(&recorded_config(), 7).unwrap();
        let text = run.transcript.to_jsonl();
        let back = Transcript::from_jsonl(&text).unwrap();
        assert_eq!(back, run.transcript);
        assert_eq!(back.header.config_hash, config_hash(&recorded_config()));
    }

    #[test]
    fn replay_reproduces_decisions_and_qer() {
        let run = run_session(&recorded_config(), 11).unwrap();
        let report = replay_transcript(&run.transcript).unwrap();
        assert!(report.decisions_match, "replayed decisions diverged");
        assert!(report.qer_matches, "replayed qer diverged");
        assert_eq!(
            Some(report.decisions),
            run.result.decisions,
            "decision payloads differ"
        );
    }

    #[test]
    fn replay_refuses_a_transcript_without_lists() {
        let mut config = recorded_config();
        config.record_transcript = false;
        let run = run_session(&config, 11).unwrap();
        assert!(matches!(
            replay_transcript(&run.transcript),
            Err(TranscriptError::MissingLists)
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Transcript::from_jsonl("{\"type\":\"header\"").unwrap_err();
        assert!(matches!(err, TranscriptError::Parse { line: 1, .. }));
    }
}
