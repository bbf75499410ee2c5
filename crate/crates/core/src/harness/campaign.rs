//! Monte Carlo campaigns: many seeded sessions, aggregated.
//!
//! Per-trial seeds are drawn once from the master seed, sessions run in
//! parallel, and results are folded in trial order, so a campaign is fully
//! determined by `(config, master_seed)` regardless of worker scheduling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::session::{run_session, verify_dba, ConfigError, SessionConfig, SessionResult};
use super::SessionError;
use crate::agreement::{Attribution, Decision};
use crate::party::Party;

/// Summary of the per-session error-ratio estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QerSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub stddev: f64,
}

/// Aggregates over a campaign. Counts refer to sessions unless stated
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub trials: usize,
    pub master_seed: u64,
    pub proceeded: usize,
    pub aborted: usize,
    pub dba_pass: usize,
    pub dba_pass_rate: f64,
    /// Sessions in which every loyal lieutenant's action equals the
    /// commander's plan.
    pub loyal_followed_plan: usize,
    pub loyal_followed_plan_rate: f64,
    /// Sessions whose loyal lieutenants made at least one attribution, all
    /// of them naming the configured traitor.
    pub traitor_identified: usize,
    pub traitor_identified_rate: f64,
    /// Decision-case histogram over loyal lieutenants (two entries per
    /// proceeded session when both lieutenants are loyal).
    pub case_counts: BTreeMap<String, usize>,
    pub qer: QerSummary,
    /// Mean forgery-acceptance probability reported by the sessions: the
    /// predicted budget for residual detectable-broadcast failures.
    pub mean_predicted_acceptance: f64,
    pub observed_dba_failures: usize,
}

/// Parties a lieutenant's attribution points at.
fn named_parties(lieutenant: Party, attribution: Attribution) -> Vec<Party> {
    match attribution {
        Attribution::Nobody => Vec::new(),
        Attribution::Commander => vec![Party::A],
        Attribution::Peer => vec![lieutenant.peer_lieutenant().expect("lieutenant")],
        Attribution::CommanderAndPeer => {
            vec![Party::A, lieutenant.peer_lieutenant().expect("lieutenant")]
        }
    }
}

fn case_name(decision: &Decision) -> String {
    serde_json::to_value(decision.case)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_else(|| format!("{:?}", decision.case))
}

/// Runs `trials` seeded sessions of `config` and aggregates the outcomes.
/// Transcript capture is disabled for the trials regardless of the config.
pub fn monte_carlo(
    config: &SessionConfig,
    trials: usize,
    master_seed: u64,
) -> Result<CampaignStats, SessionError> {
    if trials == 0 {
        return Err(SessionError::Config(ConfigError::ZeroTrials));
    }
    let mut trial_config = config.clone();
    trial_config.record_transcript = false;
    trial_config.validate()?;

    let mut seeder = ChaCha8Rng::seed_from_u64(master_seed);
    let seeds: Vec<u64> = (0..trials).map(|_| seeder.gen()).collect();
    let results: Result<Vec<SessionResult>, SessionError> = seeds
        .par_iter()
        .map(|&seed| run_session(&trial_config, seed).map(|run| run.result))
        .collect();
    let results = results?;

    let loyal = trial_config.loyal_parties();
    let traitor_roles: Vec<Party> = trial_config.traitors.iter().map(|t| t.role).collect();
    let loyal_lieutenants: Vec<Party> = Party::LIEUTENANTS
        .into_iter()
        .filter(|p| loyal.contains(p))
        .collect();

    let mut stats = CampaignStats {
        trials,
        master_seed,
        proceeded: 0,
        aborted: 0,
        dba_pass: 0,
        dba_pass_rate: 0.0,
        loyal_followed_plan: 0,
        loyal_followed_plan_rate: 0.0,
        traitor_identified: 0,
        traitor_identified_rate: 0.0,
        case_counts: BTreeMap::new(),
        qer: QerSummary {
            mean: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            stddev: 0.0,
        },
        mean_predicted_acceptance: 0.0,
        observed_dba_failures: 0,
    };

    let mut qer_sum = 0.0;
    let mut qer_sq_sum = 0.0;
    let mut acceptance_sum = 0.0;
    let mut acceptance_count = 0usize;

    for result in &results {
        if result.verdict.is_proceed() {
            stats.proceeded += 1;
        } else {
            stats.aborted += 1;
        }
        if verify_dba(result, &loyal).is_pass() {
            stats.dba_pass += 1;
        }
        qer_sum += result.qer_estimate;
        qer_sq_sum += result.qer_estimate * result.qer_estimate;
        stats.qer.min = stats.qer.min.min(result.qer_estimate);
        stats.qer.max = stats.qer.max.max(result.qer_estimate);

        if let Some(risk) = &result.residual_risk {
            acceptance_sum += (risk.b.acceptance_probability + risk.c.acceptance_probability) / 2.0;
            acceptance_count += 1;
        }

        if let Some(decisions) = &result.decisions {
            let by_party = [(Party::B, decisions.b), (Party::C, decisions.c)];
            let loyal_decisions: Vec<(Party, Decision)> = by_party
                .into_iter()
                .filter(|(p, _)| loyal_lieutenants.contains(p))
                .collect();
            for (_, decision) in &loyal_decisions {
                *stats.case_counts.entry(case_name(decision)).or_insert(0) += 1;
            }
            if loyal_decisions
                .iter()
                .all(|(_, d)| d.action.plan() == result.commander_plan)
            {
                stats.loyal_followed_plan += 1;
            }
            if !traitor_roles.is_empty() {
                let named: Vec<Party> = loyal_decisions
                    .iter()
                    .flat_map(|(p, d)| named_parties(*p, d.traitor))
                    .collect();
                if !named.is_empty() && named.iter().all(|n| traitor_roles.contains(n)) {
                    stats.traitor_identified += 1;
                }
            }
        }
    }

    let n = trials as f64;
    stats.dba_pass_rate = stats.dba_pass as f64 / n;
    stats.loyal_followed_plan_rate = stats.loyal_followed_plan as f64 / n;
    stats.traitor_identified_rate = stats.traitor_identified as f64 / n;
    stats.qer.mean = qer_sum / n;
    let variance = (qer_sq_sum / n - stats.qer.mean * stats.qer.mean).max(0.0);
    stats.qer.stddev = variance.sqrt();
    if stats.qer.min > stats.qer.max {
        stats.qer.min = 0.0;
        stats.qer.max = 0.0;
    }
    stats.mean_predicted_acceptance = if acceptance_count == 0 {
        0.0
    } else {
        acceptance_sum / acceptance_count as f64
    };
    stats.observed_dba_failures = trials - stats.dba_pass;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::StrategyKind;
    use crate::harness::session::TraitorSpec;
    use crate::quantum::NoiseModel;

    fn small_config() -> SessionConfig {
        SessionConfig {
            windows: 6_000,
            noise: NoiseModel::noiseless(),
            min_entries: 100,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn honest_campaign_passes_every_trial() {
        let stats = monte_carlo(&small_config(), 50, 1).unwrap();
        assert_eq!(stats.dba_pass, 50);
        assert_eq!(stats.loyal_followed_plan, 50);
        assert_eq!(stats.proceeded, 50);
        assert_eq!(stats.qer.mean, 0.0);
        assert_eq!(stats.observed_dba_failures, 0);
    }

    #[test]
    fn campaigns_are_deterministic_in_config_and_seed() {
        let config = small_config();
        let first = monte_carlo(&config, 20, 5).unwrap();
        let second = monte_carlo(&config, 20, 5).unwrap();
        assert_eq!(first, second);
        assert_eq!(
            serde_json::to_string(&first).unwrap(),
            serde_json::to_string(&second).unwrap()
        );
        let other_seed = monte_carlo(&config, 20, 6).unwrap();
        assert_ne!(first.master_seed, other_seed.master_seed);
    }

    #[test]
    fn conflicting_commander_is_identified_every_time() {
        let config = SessionConfig {
            traitors: vec![TraitorSpec {
                role: Party::A,
                strategy: StrategyKind::ConflictingCommander,
            }],
            ..small_config()
        };
        let stats = monte_carlo(&config, 50, 2).unwrap();
        assert_eq!(stats.dba_pass, 50);
        assert_eq!(stats.traitor_identified, 50);
        assert_eq!(stats.case_counts.get("conflicting-plans"), Some(&100));
    }

    #[test]
    fn forging_lieutenant_is_detected_at_scale() {
        let config = SessionConfig {
            traitors: vec![TraitorSpec {
                role: Party::B,
                strategy: StrategyKind::ForgingLieutenant { flip: true },
            }],
            ..small_config()
        };
        let stats = monte_carlo(&config, 50, 3).unwrap();
        assert_eq!(stats.dba_pass, 50);
        assert_eq!(
            stats.case_counts.get("peer-evidence-rejected"),
            Some(&50),
            "victim must land on evidence rejection: {:?}",
            stats.case_counts
        );
    }

    #[test]
    fn zero_trials_are_rejected() {
        assert!(matches!(
            monte_carlo(&small_config(), 0, 1),
            Err(SessionError::Config(ConfigError::ZeroTrials))
        ));
    }
}
