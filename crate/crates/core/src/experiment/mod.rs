//! Randomized experiment: arm assignment, the event log, a seeded funnel
//! simulator and the per-user outcome table.

mod assign;
mod config;
mod event;
mod funnel;
mod outcomes;
pub mod scenario;
mod sim;
pub mod truth;

pub use assign::{assign_arm, assignment_unit, Arm, ExperimentAssignment};
pub use config::{
    Baseline, CommunityTemplate, DraftCorpus, DraftText, Multipliers, RulesetSource, SimConfig, Strata, TreatmentConfig,
};
pub use event::{read_events, replay_events, write_events, EventKind, ExperimentEvent, Replay, SECONDS_PER_DAY};
pub use funnel::{format_loss, funnel_stats, FunnelCounts, FunnelTable};
pub use outcomes::{
    compute_outcomes, outcome_csv_header, read_outcomes_csv, write_outcomes_csv, CommunityProfile, Covariate,
    Covariates, Outcome, OutcomeRecord, HIGH_AUTOMOD_SHARE_MIN_EXCLUSIVE, HIGH_RULE_COUNT_MIN_EXCLUSIVE,
    LOW_ACTIVITY_MAX_VOTES, PRE_PERIOD_DAYS, REMOVAL_GRACE_SECONDS,
};
pub use sim::{
    community_id, simulate_experiment, simulate_prepared, user_id, DraftVerdict, PreparedSim, PreparedTemplate,
    SimOutput, SimStats,
};
