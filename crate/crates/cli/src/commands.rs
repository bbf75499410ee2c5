//! Subcommand implementations. Each returns the process exit code:
//! 0 = pass, 2 = collective abort, 3 = detectable-broadcast violation,
//! 4 = configuration or input error (1 = unexpected runtime failure, via
//! `main`).

use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::Context;
use qdba_core::distribution::ListTriple;
use qdba_core::harness::{
    monte_carlo, run_agreement, run_distribution_session, run_session, transcript::config_hash,
    verify_dba, ChannelSet, DbaOutcome, SessionConfig, SessionResult, Transcript,
    TranscriptHeader,
};
use qdba_core::quantum::{source_statistics, QuantumState};
use qdba_core::{Action, Attribution, Decision, Party, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::fixture::{read_fixture, validate_fixture};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ABORT: i32 = 2;
pub const EXIT_DBA_VIOLATION: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Builds and validates the session config, printing a usage error (exit 4)
/// on failure.
fn session_or_exit(config: &Config) -> Result<SessionConfig, i32> {
    config.session_config().map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_CONFIG
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

fn fmt_action(action: Action) -> String {
    match action {
        Action::Follow(plan) => format!("follow plan {plan}"),
        Action::FollowFallback => "follow fallback plan 0".to_string(),
    }
}

fn fmt_attribution(attribution: Attribution) -> &'static str {
    match attribution {
        Attribution::Nobody => "nobody",
        Attribution::Commander => "the commander",
        Attribution::Peer => "the peer lieutenant",
        Attribution::CommanderAndPeer => "commander and peer (outside single-traitor model)",
    }
}

fn print_decision(name: &str, decision: &Decision) {
    let case = serde_json::to_value(decision.case)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    println!(
        "  {name}: {} [case {case}, blames {}]",
        fmt_action(decision.action),
        fmt_attribution(decision.traitor)
    );
}

fn print_result(result: &SessionResult, loyal: &[Party]) {
    match &result.verdict {
        Verdict::Proceed => println!(
            "distribution: proceed (qer {:.4} over {} tests, {} raw entries)",
            result.qer_estimate, result.tests_performed, result.raw_length
        ),
        Verdict::Abort(reason) => println!(
            "distribution: abort ({}) — qer {:.4} over {} tests",
            serde_json::to_string(reason).unwrap_or_default(),
            result.qer_estimate,
            result.tests_performed
        ),
    }
    if let Some(per_party) = result.per_party_qer {
        println!(
            "per-party qer: A {:.4}  B {:.4}  C {:.4}",
            per_party[0], per_party[1], per_party[2]
        );
    }
    println!("commander plan: {}", result.commander_plan);
    if let Some(decisions) = &result.decisions {
        print_decision("lieutenant B", &decisions.b);
        print_decision("lieutenant C", &decisions.c);
    }
    if let Some(risk) = &result.residual_risk {
        println!(
            "residual forgery acceptance: B {:.3e} (n={}), C {:.3e} (n={})",
            risk.b.acceptance_probability,
            risk.b.claimed_length,
            risk.c.acceptance_probability,
            risk.c.claimed_length
        );
    }
    if result.outside_model {
        println!("note: run left the single-traitor model");
    }
    match verify_dba(result, loyal) {
        DbaOutcome::Pass => println!("detectable broadcast: PASS"),
        DbaOutcome::Fail(condition) => println!(
            "detectable broadcast: FAIL ({})",
            serde_json::to_string(&condition).unwrap_or_default()
        ),
    }
}

fn exit_code_for(result: &SessionResult, loyal: &[Party]) -> i32 {
    if !result.verdict.is_proceed() {
        return EXIT_ABORT;
    }
    match verify_dba(result, loyal) {
        DbaOutcome::Pass => EXIT_OK,
        DbaOutcome::Fail(_) => EXIT_DBA_VIOLATION,
    }
}

/// `simulate-source`: emit windows and report the outcome statistics.
pub fn simulate_source(config: &Config) -> anyhow::Result<i32> {
    let session = match session_or_exit(config) {
        Ok(s) => s,
        Err(code) => return Ok(code),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let stats = source_statistics(
        &QuantumState::canonical(),
        session.noise,
        session.windows,
        &mut rng,
    );
    println!(
        "windows {}: detected {} ({:.4}), same-basis {} ({:.4} of detected)",
        stats.windows,
        stats.detected,
        stats.detected_fraction(),
        stats.same_basis,
        stats.same_basis_fraction()
    );
    println!(
        "triples: 000 {:.4}  111 {:.4}  201 {:.4}  210 {:.4}  invalid {:.4} (qer)",
        stats.frequency((0, 0, 0)),
        stats.frequency((1, 1, 1)),
        stats.frequency((2, 0, 1)),
        stats.frequency((2, 1, 0)),
        stats.qer()
    );
    if let Some(path) = &config.stats_out {
        write_json(path, &stats)?;
    }
    Ok(EXIT_OK)
}

/// `distribute`: run the distribute-and-test phase and export the lists.
pub fn distribute(config: &Config, split_lists: bool) -> anyhow::Result<i32> {
    let session = match session_or_exit(config) {
        Ok(s) => s,
        Err(code) => return Ok(code),
    };
    let (outcome, transcript) = run_distribution_session(&session, config.seed)?;
    match &outcome.verdict {
        Verdict::Proceed => println!(
            "proceed: released {} entries (raw {}, {} tests, qer {:.4})",
            outcome.lists.as_ref().map_or(0, |l| l.len()),
            outcome.raw_length,
            outcome.tests_performed,
            outcome.qer_estimate
        ),
        Verdict::Abort(reason) => println!(
            "abort: {} (qer {:.4} over {} tests)",
            serde_json::to_string(&reason)?,
            outcome.qer_estimate,
            outcome.tests_performed
        ),
    }
    if let Some(per_party) = outcome.per_party_qer {
        println!(
            "per-party qer: A {:.4}  B {:.4}  C {:.4}",
            per_party[0], per_party[1], per_party[2]
        );
    }
    if let Some(path) = &config.transcript_out {
        transcript.write_to(path)?;
        println!("transcript written to {}", path.display());
    }
    if let Some(lists) = &outcome.lists {
        if let Some(path) = &config.lists_out {
            lists
                .write_csv(File::create(path).with_context(|| format!("creating {}", path.display()))?)?;
            println!("lists written to {}", path.display());
            if split_lists {
                for (party, list) in [(Party::A, &lists.a), (Party::B, &lists.b), (Party::C, &lists.c)]
                {
                    let split_path = split_list_path(path, party);
                    list.write_csv(File::create(&split_path)?)?;
                    println!("party {party} list written to {}", split_path.display());
                }
            }
        }
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_ABORT)
    }
}

fn split_list_path(base: &Path, party: Party) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("lists");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_{party}.{ext}"))
}

/// `agree`: run only the agreement phase over previously exported lists.
pub fn agree(config: &Config, lists_path: &Path) -> anyhow::Result<i32> {
    let session = match session_or_exit(config) {
        Ok(s) => s,
        Err(code) => return Ok(code),
    };
    let file = File::open(lists_path).with_context(|| format!("opening {}", lists_path.display()))?;
    let lists = match ListTriple::read_csv(file) {
        Ok(lists) => lists,
        Err(e) => {
            eprintln!("lists error: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let net = ChannelSet::new(session.record_transcript);
    let mut strategies = session.build_strategies(config.seed);
    let (decisions, risk) = run_agreement(
        &lists,
        session.plan,
        &session.consistency,
        &mut strategies,
        &net,
        0,
    )?;
    let result = SessionResult {
        verdict: Verdict::Proceed,
        qer_estimate: 0.0,
        tests_performed: 0,
        raw_length: lists.len(),
        per_party_qer: None,
        commander_plan: session.plan,
        outside_model: decisions.b.traitor == Attribution::CommanderAndPeer
            || decisions.c.traitor == Attribution::CommanderAndPeer,
        decisions: Some(decisions),
        residual_risk: Some(risk),
    };
    let loyal = session.loyal_parties();
    print_result(&result, &loyal);
    if let Some(path) = &config.transcript_out {
        let transcript = Transcript {
            header: TranscriptHeader {
                seed: config.seed,
                config_hash: config_hash(&session),
                config: session.clone(),
            },
            records: net.into_records(),
            lists: Some(lists),
            result: Some(result.clone()),
        };
        transcript.write_to(path)?;
        println!("transcript written to {}", path.display());
    }
    Ok(exit_code_for(&result, &loyal))
}

/// `full-run`: distribution then agreement, one session.
pub fn full_run(config: &Config) -> anyhow::Result<i32> {
    let session = match session_or_exit(config) {
        Ok(s) => s,
        Err(code) => return Ok(code),
    };
    let run = run_session(&session, config.seed)?;
    let loyal = session.loyal_parties();
    print_result(&run.result, &loyal);
    if let Some(path) = &config.transcript_out {
        run.transcript.write_to(path)?;
        println!("transcript written to {}", path.display());
    }
    if let Some(path) = &config.stats_out {
        write_json(path, &run.result)?;
    }
    Ok(exit_code_for(&run.result, &loyal))
}

/// `campaign`: many seeded sessions, aggregated statistics.
pub fn campaign(config: &Config, trials: usize) -> anyhow::Result<i32> {
    let session = match session_or_exit(config) {
        Ok(s) => s,
        Err(code) => return Ok(code),
    };
    if trials == 0 {
        eprintln!("config error: trials must be positive");
        return Ok(EXIT_CONFIG);
    }
    let stats = monte_carlo(&session, trials, config.seed)?;
    println!(
        "trials {}: proceed {}, abort {}, dba pass {} ({:.4})",
        stats.trials, stats.proceeded, stats.aborted, stats.dba_pass, stats.dba_pass_rate
    );
    println!(
        "loyal followed plan {} ({:.4}); traitor identified {} ({:.4})",
        stats.loyal_followed_plan,
        stats.loyal_followed_plan_rate,
        stats.traitor_identified,
        stats.traitor_identified_rate
    );
    println!(
        "qer mean {:.4} (min {:.4}, max {:.4}, sd {:.4})",
        stats.qer.mean, stats.qer.min, stats.qer.max, stats.qer.stddev
    );
    println!(
        "predicted forgery acceptance {:.3e}; observed dba failures {}",
        stats.mean_predicted_acceptance, stats.observed_dba_failures
    );
    for (case, count) in &stats.case_counts {
        println!("  case {case}: {count}");
    }
    if let Some(path) = &config.stats_out {
        write_json(path, &stats)?;
    }
    Ok(EXIT_OK)
}

/// `replay`: validate a fixture CSV against the correlation predicate.
pub fn replay(fixture_path: &Path) -> anyhow::Result<i32> {
    let rows = match read_fixture(fixture_path) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("fixture error: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let report = validate_fixture(&rows);
    println!(
        "{} rows, {} violations (ratio {:.4})",
        report.rows,
        report.violations.len(),
        report.violation_ratio
    );
    println!("violating positions: {:?}", report.violations);
    println!("flagged in source:   {:?}", report.flagged);
    println!("flagged & violating: {:?}", report.flagged_and_violating);
    println!("violating, unflagged: {:?}", report.violating_not_flagged);
    println!("flagged, not violating: {:?}", report.flagged_not_violating);
    Ok(EXIT_OK)
}
