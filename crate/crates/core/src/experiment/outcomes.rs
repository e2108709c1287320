//! Per-user outcome vectors aggregated from the event log.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::assign::Arm;
use super::event::{EventKind, ExperimentEvent, SECONDS_PER_DAY};
use crate::error::OutcomeError;

/// Days of history before enrollment that feed the user-level covariates.
pub const PRE_PERIOD_DAYS: i64 = 90;
/// A post counts as non-removed if no removal lands within this many seconds of submission.
pub const REMOVAL_GRACE_SECONDS: i64 = 24 * 3600;
pub const LOW_ACTIVITY_MAX_VOTES: u64 = 3;
pub const HIGH_RULE_COUNT_MIN_EXCLUSIVE: u32 = 7;
pub const HIGH_AUTOMOD_SHARE_MIN_EXCLUSIVE: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    PostStarts,
    PostsSubmitted,
    PostsNonRemoved,
    AutomodRemovals,
    ModRemovals,
    AdminRemovals,
    NumReports,
    ReceivedComments,
    ReceivedViews,
    ReceivedUpvotes,
    DaysContributing,
    DaysVoting,
    DaysActive,
}

impl Outcome {
    pub const ALL: [Outcome; 13] = [
        Outcome::PostStarts,
        Outcome::PostsSubmitted,
        Outcome::PostsNonRemoved,
        Outcome::AutomodRemovals,
        Outcome::ModRemovals,
        Outcome::AdminRemovals,
        Outcome::NumReports,
        Outcome::ReceivedComments,
        Outcome::ReceivedViews,
        Outcome::ReceivedUpvotes,
        Outcome::DaysContributing,
        Outcome::DaysVoting,
        Outcome::DaysActive,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Row number in the outcome table (1-based).
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::PostStarts => "post_starts",
            Outcome::PostsSubmitted => "posts_submitted",
            Outcome::PostsNonRemoved => "posts_non_removed",
            Outcome::AutomodRemovals => "automod_removals",
            Outcome::ModRemovals => "mod_removals",
            Outcome::AdminRemovals => "admin_removals",
            Outcome::NumReports => "num_reports",
            Outcome::ReceivedComments => "received_comments",
            Outcome::ReceivedViews => "received_views",
            Outcome::ReceivedUpvotes => "received_upvotes",
            Outcome::DaysContributing => "days_contributing",
            Outcome::DaysVoting => "days_voting",
            Outcome::DaysActive => "days_active",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::PostStarts => "Post starts",
            Outcome::PostsSubmitted => "Posts submitted",
            Outcome::PostsNonRemoved => "Posts non-removed",
            Outcome::AutomodRemovals => "Automod removals",
            Outcome::ModRemovals => "Mod removals",
            Outcome::AdminRemovals => "Admin removals",
            Outcome::NumReports => "Num. reports",
            Outcome::ReceivedComments => "Rec. comments",
            Outcome::ReceivedViews => "Rec. screen views",
            Outcome::ReceivedUpvotes => "Rec. upvotes",
            Outcome::DaysContributing => "Days contributing",
            Outcome::DaysVoting => "Days voting",
            Outcome::DaysActive => "Days active",
        }
    }

    pub fn hypothesis(self) -> &'static str {
        match self {
            Outcome::PostStarts | Outcome::PostsSubmitted | Outcome::PostsNonRemoved => "H1",
            Outcome::AutomodRemovals | Outcome::ModRemovals | Outcome::AdminRemovals => "H2",
            Outcome::NumReports => "H2, H3",
            Outcome::ReceivedComments | Outcome::ReceivedViews | Outcome::ReceivedUpvotes => "H3",
            Outcome::DaysContributing | Outcome::DaysVoting | Outcome::DaysActive => "H4",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Outcome::ALL.into_iter().find(|o| o.name() == s).ok_or_else(|| format!("unknown outcome `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    Newcomer,
    LowActivity,
    HighRuleCount,
    HighAutomod,
}

impl Covariate {
    pub const ALL: [Covariate; 4] =
        [Covariate::Newcomer, Covariate::LowActivity, Covariate::HighRuleCount, Covariate::HighAutomod];

    pub fn name(self) -> &'static str {
        match self {
            Covariate::Newcomer => "newcomer",
            Covariate::LowActivity => "low_activity",
            Covariate::HighRuleCount => "high_rule_count",
            Covariate::HighAutomod => "high_automod",
        }
    }
}

impl std::fmt::Display for Covariate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Covariate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Covariate::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown covariate `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Covariates {
    pub newcomer: bool,
    pub low_activity: bool,
    pub high_rule_count: bool,
    pub high_automod: bool,
}

impl Covariates {
    pub fn get(&self, covariate: Covariate) -> bool {
        match covariate {
            Covariate::Newcomer => self.newcomer,
            Covariate::LowActivity => self.low_activity,
            Covariate::HighRuleCount => self.high_rule_count,
            Covariate::HighAutomod => self.high_automod,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub user_id: String,
    pub community_id: String,
    pub arm: Arm,
    pub covariates: Covariates,
    pub outcomes: [u64; 13],
}

impl OutcomeRecord {
    pub fn get(&self, outcome: Outcome) -> u64 {
        self.outcomes[outcome.index()]
    }
}

/// Community-level facts about the pre-experiment period.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommunityProfile {
    pub rules_created: u32,
    pub posts: u64,
    pub automod_touched: u64,
}

impl CommunityProfile {
    pub fn high_rule_count(&self) -> bool {
        self.rules_created > HIGH_RULE_COUNT_MIN_EXCLUSIVE
    }

    pub fn high_automod(&self) -> bool {
        self.posts > 0 && self.automod_touched as f64 / self.posts as f64 > HIGH_AUTOMOD_SHARE_MIN_EXCLUSIVE
    }
}

#[derive(Default)]
struct Unit {
    enrolled_at: i64,
    arm: Option<Arm>,
    order: usize,
    counts: [u64; 13],
    submitted_at: HashMap<u64, i64>,
    contribution_days: BTreeSet<i64>,
    voting_days: BTreeSet<i64>,
    active_days: BTreeSet<i64>,
    pre_visits: bool,
}

/// Aggregates each enrolled (user, community) pair's events within
/// `[enrollment, enrollment + follow_up_days)` into the thirteen outcomes.
///
/// Records come back in enrollment order. `ActiveDay` and `VoteCast` events
/// may precede enrollment (they are covariate history); any other user event
/// outside the window, or for a pair that never enrolled, is an error.
pub fn compute_outcomes(events: &[ExperimentEvent], follow_up_days: u32) -> Result<Vec<OutcomeRecord>, OutcomeError> {
    let window = follow_up_days as i64 * SECONDS_PER_DAY;
    let mut profiles: HashMap<&str, CommunityProfile> = HashMap::new();
    let mut units: HashMap<(&str, &str), Unit> = HashMap::new();
    let mut votes: HashMap<&str, Vec<(i64, u64)>> = HashMap::new();

    for e in events {
        match &e.kind {
            EventKind::Enrolled { arm } => {
                let next = units.len();
                let unit = units.entry((e.user_id.as_str(), e.community_id.as_str())).or_default();
                if unit.arm.is_some() {
                    return Err(OutcomeError::DuplicateEnrollment {
                        user: e.user_id.clone(),
                        community: e.community_id.clone(),
                    });
                }
                *unit = Unit { enrolled_at: e.timestamp, arm: Some(*arm), order: next, ..Unit::default() };
            }
            EventKind::CommunityProfile { rules_created, posts, automod_touched } => {
                profiles.insert(
                    &e.community_id,
                    CommunityProfile {
                        rules_created: *rules_created,
                        posts: *posts,
                        automod_touched: *automod_touched,
                    },
                );
            }
            EventKind::VoteCast { count } => votes.entry(&e.user_id).or_default().push((e.timestamp, *count)),
            _ => {}
        }
    }

    for e in events {
        use EventKind::*;
        if matches!(
            e.kind,
            Enrolled { .. }
                | CommunityProfile { .. }
                | VoteCast { .. }
                | RulesetUpdated { .. }
                | FlaggedForReview { .. }
        ) {
            continue;
        }
        let unit = units
            .get_mut(&(e.user_id.as_str(), e.community_id.as_str()))
            .filter(|u| u.arm.is_some())
            .ok_or_else(|| OutcomeError::NotEnrolled {
                user: e.user_id.clone(),
                community: e.community_id.clone(),
                kind: e.kind.name(),
                timestamp: e.timestamp,
            })?;
        let start = unit.enrolled_at;
        let end = start + window;
        if matches!(e.kind, ActiveDay)
            && e.timestamp < start
            && e.timestamp >= start - PRE_PERIOD_DAYS * SECONDS_PER_DAY
        {
            unit.pre_visits = true;
            continue;
        }
        if e.timestamp < start || e.timestamp >= end {
            return Err(OutcomeError::OutsideWindow {
                user: e.user_id.clone(),
                community: e.community_id.clone(),
                kind: e.kind.name(),
                timestamp: e.timestamp,
                start,
                end,
            });
        }
        let day = (e.timestamp - start) / SECONDS_PER_DAY;
        let c = &mut unit.counts;
        match &e.kind {
            PostStart => c[Outcome::PostStarts.index()] += 1,
            PostSubmit { post_id } => {
                c[Outcome::PostsSubmitted.index()] += 1;
                unit.submitted_at.insert(*post_id, e.timestamp);
            }
            AutomodRemoval { .. } => c[Outcome::AutomodRemovals.index()] += 1,
            ModRemoval { .. } => c[Outcome::ModRemovals.index()] += 1,
            AdminRemoval { .. } => c[Outcome::AdminRemovals.index()] += 1,
            Report { count, .. } => c[Outcome::NumReports.index()] += count,
            ReceivedComment { count, .. } => c[Outcome::ReceivedComments.index()] += count,
            ReceivedView { count, .. } => c[Outcome::ReceivedViews.index()] += count,
            ReceivedUpvote { count, .. } => c[Outcome::ReceivedUpvotes.index()] += count,
            ContributionDay => {
                unit.contribution_days.insert(day);
            }
            VotingDay => {
                unit.voting_days.insert(day);
            }
            ActiveDay => {
                unit.active_days.insert(day);
            }
            Enrolled { .. }
            | CommunityProfile { .. }
            | VoteCast { .. }
            | RulesetUpdated { .. }
            | FlaggedForReview { .. } => {
                unreachable!()
            }
        }
    }

    // Removal timing is resolved after the scan so the log need not be sorted.
    let mut removal_times: HashMap<(&str, &str, u64), i64> = HashMap::new();
    for e in events {
        if let EventKind::AutomodRemoval { post_id: Some(id) }
        | EventKind::ModRemoval { post_id: Some(id) }
        | EventKind::AdminRemoval { post_id: Some(id) } = &e.kind
        {
            let slot = removal_times.entry((&e.user_id, &e.community_id, *id)).or_insert(e.timestamp);
            *slot = (*slot).min(e.timestamp);
        }
    }

    let mut out: Vec<(usize, OutcomeRecord)> = units
        .into_iter()
        .map(|((user, community), mut unit)| {
            let removed_in_grace = unit
                .submitted_at
                .iter()
                .filter(|(id, submitted)| {
                    removal_times
                        .get(&(user, community, **id))
                        .is_some_and(|t| *t - **submitted <= REMOVAL_GRACE_SECONDS)
                })
                .count() as u64;
            let c = &mut unit.counts;
            c[Outcome::PostsNonRemoved.index()] = c[Outcome::PostsSubmitted.index()].saturating_sub(removed_in_grace);
            c[Outcome::DaysContributing.index()] = unit.contribution_days.len() as u64;
            c[Outcome::DaysVoting.index()] = unit.voting_days.len() as u64;
            c[Outcome::DaysActive.index()] = unit.active_days.len() as u64;

            let pre_start = unit.enrolled_at - PRE_PERIOD_DAYS * SECONDS_PER_DAY;
            let pre_votes: u64 = votes
                .get(user)
                .map(|v| v.iter().filter(|(t, _)| *t >= pre_start && *t < unit.enrolled_at).map(|(_, n)| n).sum())
                .unwrap_or(0);
            let profile = profiles.get(community).copied().unwrap_or_default();
            let covariates = Covariates {
                newcomer: !unit.pre_visits,
                low_activity: pre_votes <= LOW_ACTIVITY_MAX_VOTES,
                high_rule_count: profile.high_rule_count(),
                high_automod: profile.high_automod(),
            };
            (
                unit.order,
                OutcomeRecord {
                    user_id: user.to_string(),
                    community_id: community.to_string(),
                    arm: unit.arm.expect("only enrolled units are kept"),
                    covariates,
                    outcomes: unit.counts,
                },
            )
        })
        .collect();
    out.sort_by_key(|(order, _)| *order);
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

const CSV_FIXED: [&str; 7] =
    ["user_id", "community_id", "arm", "newcomer", "low_activity", "high_rule_count", "high_automod"];

/// Column header of the outcome CSV: identity, arm, the four covariates, then
/// the thirteen outcomes in table order.
pub fn outcome_csv_header() -> Vec<&'static str> {
    CSV_FIXED.iter().copied().chain(Outcome::ALL.iter().map(|o| o.name())).collect()
}

pub fn write_outcomes_csv<W: Write>(out: W, records: &[OutcomeRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(outcome_csv_header())?;
    for r in records {
        let flags =
            [r.covariates.newcomer, r.covariates.low_activity, r.covariates.high_rule_count, r.covariates.high_automod];
        let mut row = vec![r.user_id.clone(), r.community_id.clone(), r.arm.to_string()];
        row.extend(flags.iter().map(|f| u8::from(*f).to_string()));
        row.extend(r.outcomes.iter().map(|n| n.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_outcomes_csv<R: Read>(input: R) -> Result<Vec<OutcomeRecord>, String> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    if header != outcome_csv_header() {
        return Err("outcome CSV header does not match the expected columns".into());
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        let bad = |what: &str| format!("row {}: bad {what}", i + 2);
        let flag = |j: usize| match &row[j] {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(CSV_FIXED[j])),
        };
        let mut outcomes = [0u64; 13];
        for (k, slot) in outcomes.iter_mut().enumerate() {
            *slot = row[7 + k].parse().map_err(|_| bad(Outcome::ALL[k].name()))?;
        }
        records.push(OutcomeRecord {
            user_id: row[0].to_string(),
            community_id: row[1].to_string(),
            arm: row[2].parse().map_err(|_| bad("arm"))?,
            covariates: Covariates {
                newcomer: flag(3)?,
                low_activity: flag(4)?,
                high_rule_count: flag(5)?,
                high_automod: flag(6)?,
            },
            outcomes,
        });
    }
    Ok(records)
}
