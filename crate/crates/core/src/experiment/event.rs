//! Behavioral events and their JSON-Lines log format.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::assign::Arm;
use crate::error::LogError;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentEvent {
    /// Seconds since the experiment epoch (may be negative for pre-enrollment history).
    pub timestamp: i64,
    pub user_id: String,
    pub community_id: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

fn one() -> u64 {
    1
}

/// Event payloads. Engagement kinds carry a `count` so bursts of views or
/// upvotes on one post can be logged as a single line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Opens the user's follow-up window in a community.
    Enrolled {
        arm: Arm,
    },
    PostStart,
    PostSubmit {
        post_id: u64,
    },
    /// `post_id` is absent for comment removals.
    AutomodRemoval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        post_id: Option<u64>,
    },
    ModRemoval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        post_id: Option<u64>,
    },
    AdminRemoval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        post_id: Option<u64>,
    },
    Report {
        post_id: u64,
        #[serde(default = "one")]
        count: u64,
    },
    ReceivedComment {
        post_id: u64,
        #[serde(default = "one")]
        count: u64,
    },
    ReceivedView {
        post_id: u64,
        #[serde(default = "one")]
        count: u64,
    },
    ReceivedUpvote {
        post_id: u64,
        #[serde(default = "one")]
        count: u64,
    },
    ContributionDay,
    VotingDay,
    /// A visit to the community. Before enrollment it is history used for
    /// the newcomer covariate.
    ActiveDay,
    /// Votes cast anywhere on the platform, counted toward the low-activity covariate.
    VoteCast {
        #[serde(default = "one")]
        count: u64,
    },
    FlaggedForReview {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        post_id: Option<u64>,
        rule: String,
    },
    RulesetUpdated {
        version: u64,
    },
    /// Community-level pre-period facts; `user_id` is empty.
    CommunityProfile {
        rules_created: u32,
        posts: u64,
        automod_touched: u64,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Enrolled { .. } => "enrolled",
            EventKind::PostStart => "post_start",
            EventKind::PostSubmit { .. } => "post_submit",
            EventKind::AutomodRemoval { .. } => "automod_removal",
            EventKind::ModRemoval { .. } => "mod_removal",
            EventKind::AdminRemoval { .. } => "admin_removal",
            EventKind::Report { .. } => "report",
            EventKind::ReceivedComment { .. } => "received_comment",
            EventKind::ReceivedView { .. } => "received_view",
            EventKind::ReceivedUpvote { .. } => "received_upvote",
            EventKind::ContributionDay => "contribution_day",
            EventKind::VotingDay => "voting_day",
            EventKind::ActiveDay => "active_day",
            EventKind::VoteCast { .. } => "vote_cast",
            EventKind::FlaggedForReview { .. } => "flagged_for_review",
            EventKind::RulesetUpdated { .. } => "ruleset_updated",
            EventKind::CommunityProfile { .. } => "community_profile",
        }
    }
}

impl ExperimentEvent {
    pub fn new(timestamp: i64, user_id: impl Into<String>, community_id: impl Into<String>, kind: EventKind) -> Self {
        Self { timestamp, user_id: user_id.into(), community_id: community_id.into(), kind }
    }
}

pub fn write_events<'a, W: Write>(
    mut out: W,
    events: impl IntoIterator<Item = &'a ExperimentEvent>,
) -> std::io::Result<()> {
    for event in events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Strict reader: every non-blank line must parse.
pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<ExperimentEvent>, LogError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|source| LogError::Parse { line: i + 1, source })?);
    }
    Ok(events)
}

/// Result of reading a log that may end in a torn write.
#[derive(Debug, Clone)]
pub struct Replay {
    pub events: Vec<ExperimentEvent>,
    /// Byte length of the intact prefix; anything after it is a partial line.
    pub valid_len: u64,
    pub torn_tail: bool,
}

/// Reads a log written by an append-only writer that may have been killed
/// mid-line. A final line without its newline terminator is dropped;
/// corruption anywhere else is an error.
pub fn replay_events(bytes: &[u8]) -> Result<Replay, LogError> {
    let mut events = Vec::new();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < bytes.len() {
        line_no += 1;
        let (line, next, terminated) = match bytes[offset..].iter().position(|&b| b == b'\n') {
            Some(p) => (&bytes[offset..offset + p], offset + p + 1, true),
            None => (&bytes[offset..], bytes.len(), false),
        };
        if line.iter().all(u8::is_ascii_whitespace) {
            offset = next;
            continue;
        }
        if !terminated {
            // The writer appends line and newline together and acknowledges
            // only after both land, so an unterminated tail was never acknowledged.
            return Ok(Replay { events, valid_len: offset as u64, torn_tail: true });
        }
        events.push(serde_json::from_slice(line).map_err(|source| LogError::Parse { line: line_no, source })?);
        offset = next;
    }
    Ok(Replay { events, valid_len: bytes.len() as u64, torn_tail: false })
}
