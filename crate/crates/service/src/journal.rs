//! The append-only event log and the per-user state derived from it.
//!
//! One `Journal` owns the file; callers hold its mutex for the whole
//! check-then-append sequence, so appends are serialized and the in-memory
//! view always equals the file's contents.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use guidance_core::experiment::{
    assign_arm, replay_events, Arm, EventKind, ExperimentEvent, PRE_PERIOD_DAYS, SECONDS_PER_DAY,
};

use crate::error::ServiceError;

#[derive(Debug, Clone, Copy)]
struct Unit {
    enrolled_at: i64,
    arm: Arm,
    last_activity: i64,
    session_open: bool,
}

pub struct Journal {
    file: File,
    path: PathBuf,
    len: u64,
    sync_writes: bool,
    events: Vec<ExperimentEvent>,
    units: HashMap<(String, String), Unit>,
    ruleset_versions: HashMap<String, u64>,
    next_post_id: u64,
    window: i64,
    session_gap: i64,
}

/// What happened when a log was reopened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayInfo {
    pub events: usize,
    /// Bytes of an unacknowledged partial line that were cut off.
    pub truncated_bytes: u64,
}

/// Outcome-bearing events a client may report on behalf of the platform.
fn ingestible(kind: &EventKind) -> bool {
    use EventKind::*;
    matches!(
        kind,
        AutomodRemoval { .. }
            | ModRemoval { .. }
            | AdminRemoval { .. }
            | Report { .. }
            | ReceivedComment { .. }
            | ReceivedView { .. }
            | ReceivedUpvote { .. }
            | ContributionDay
            | VotingDay
            | ActiveDay
            | VoteCast { .. }
            | CommunityProfile { .. }
    )
}

impl Journal {
    /// Opens (or creates) the log, cuts off a torn final line, and rebuilds
    /// enrollments, sessions and the post-id counter. Fails if the log holds
    /// enrollments that the current salt and `p_treat` would assign differently.
    pub fn open(
        path: &Path,
        salt: &str,
        p_treat: f64,
        follow_up_days: u32,
        session_gap_minutes: u32,
        sync_writes: bool,
    ) -> Result<(Self, ReplayInfo), ServiceError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let replay = replay_events(&bytes)?;
        let truncated_bytes = bytes.len() as u64 - replay.valid_len;
        if replay.torn_tail {
            file.set_len(replay.valid_len)?;
            file.sync_all()?;
        }
        let mut journal = Journal {
            file,
            path: path.to_path_buf(),
            len: replay.valid_len,
            sync_writes,
            events: Vec::with_capacity(replay.events.len()),
            units: HashMap::new(),
            ruleset_versions: HashMap::new(),
            next_post_id: 1,
            window: i64::from(follow_up_days) * SECONDS_PER_DAY,
            session_gap: i64::from(session_gap_minutes) * 60,
        };
        for event in replay.events {
            if let EventKind::Enrolled { arm } = event.kind {
                let expected = assign_arm(&event.user_id, salt, p_treat);
                if arm != expected {
                    return Err(ServiceError::State(format!(
                        "{} holds user `{}` in {arm} but the configured salt and p_treat assign {expected}; \
                         refusing to mix assignments in one log",
                        path.display(),
                        event.user_id
                    )));
                }
            }
            journal.observe(&event);
            journal.events.push(event);
        }
        let info = ReplayInfo { events: journal.events.len(), truncated_bytes };
        Ok((journal, info))
    }

    fn observe(&mut self, event: &ExperimentEvent) {
        let key = || (event.user_id.clone(), event.community_id.clone());
        match &event.kind {
            EventKind::Enrolled { arm } => {
                self.units.insert(
                    key(),
                    Unit {
                        enrolled_at: event.timestamp,
                        arm: *arm,
                        last_activity: event.timestamp,
                        session_open: false,
                    },
                );
            }
            EventKind::PostStart => {
                if let Some(u) = self.units.get_mut(&key()) {
                    u.session_open = true;
                    u.last_activity = u.last_activity.max(event.timestamp);
                }
            }
            EventKind::PostSubmit { post_id } => {
                self.next_post_id = self.next_post_id.max(post_id + 1);
                if let Some(u) = self.units.get_mut(&key()) {
                    u.session_open = false;
                    u.last_activity = u.last_activity.max(event.timestamp);
                }
            }
            EventKind::RulesetUpdated { version } => {
                let v = self.ruleset_versions.entry(event.community_id.clone()).or_default();
                *v = (*v).max(*version);
            }
            _ => {}
        }
    }

    /// Writes `batch` as one contiguous append, flushed before returning.
    /// On a failed write the file is cut back so no partial line survives.
    pub fn append(&mut self, batch: Vec<ExperimentEvent>) -> Result<(), ServiceError> {
        if batch.is_empty() {
            return Ok(());
        }
        let mut buf = Vec::with_capacity(128 * batch.len());
        for event in &batch {
            serde_json::to_writer(&mut buf, event).map_err(|e| ServiceError::State(e.to_string()))?;
            buf.push(b'\n');
        }
        let written = self.file.write_all(&buf).and_then(|()| self.file.flush()).and_then(|()| {
            if self.sync_writes {
                self.file.sync_data()
            } else {
                Ok(())
            }
        });
        if let Err(e) = written {
            let _ = self.file.set_len(self.len);
            return Err(e.into());
        }
        self.len += buf.len() as u64;
        for event in batch {
            self.observe(&event);
            self.events.push(event);
        }
        Ok(())
    }

    pub fn events(&self) -> &[ExperimentEvent] {
        &self.events
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn logged_ruleset_version(&self, community: &str) -> u64 {
        self.ruleset_versions.get(community).copied().unwrap_or(0)
    }

    pub fn arm_of(&self, user: &str, community: &str) -> Option<Arm> {
        self.units.get(&(user.to_string(), community.to_string())).map(|u| u.arm)
    }

    /// Events for a composer interaction at `now`: enrollment on first
    /// contact and a `PostStart` when a new draft session begins. Nothing is
    /// produced once the unit's follow-up window has closed.
    fn interaction(&self, user: &str, community: &str, arm: Arm, now: i64) -> (Vec<ExperimentEvent>, bool) {
        let mut out = Vec::new();
        let unit = self.units.get(&(user.to_string(), community.to_string()));
        let enrolled_at = match unit {
            Some(u) => u.enrolled_at,
            None => {
                out.push(ExperimentEvent::new(now, user, community, EventKind::Enrolled { arm }));
                now
            }
        };
        if now >= enrolled_at + self.window {
            return (out, false);
        }
        let new_session = unit.is_none_or(|u| !u.session_open || now - u.last_activity >= self.session_gap);
        if new_session {
            out.push(ExperimentEvent::new(now, user, community, EventKind::PostStart));
        }
        (out, new_session)
    }

    /// Records a live evaluation; returns whether it opened a draft session.
    pub fn record_evaluation(&mut self, user: &str, community: &str, arm: Arm, now: i64) -> Result<bool, ServiceError> {
        let (batch, started) = self.interaction(user, community, arm, now);
        self.append(batch)?;
        if let Some(u) = self.units.get_mut(&(user.to_string(), community.to_string())) {
            u.last_activity = u.last_activity.max(now);
        }
        Ok(started)
    }

    /// Records a submission attempt. Accepted posts get the next post id,
    /// which is returned even when the window has closed and nothing is logged.
    pub fn record_submission(
        &mut self,
        user: &str,
        community: &str,
        arm: Arm,
        now: i64,
        accepted: bool,
        review_flags: &[String],
    ) -> Result<Option<u64>, ServiceError> {
        let (mut batch, _) = self.interaction(user, community, arm, now);
        let in_window = self
            .units
            .get(&(user.to_string(), community.to_string()))
            .is_none_or(|u| now < u.enrolled_at + self.window);
        let post_id = accepted.then(|| {
            let id = self.next_post_id;
            self.next_post_id += 1;
            id
        });
        if in_window {
            if let Some(id) = post_id {
                batch.push(ExperimentEvent::new(now, user, community, EventKind::PostSubmit { post_id: id }));
            }
            for rule in review_flags {
                batch.push(ExperimentEvent::new(
                    now,
                    user,
                    community,
                    EventKind::FlaggedForReview { post_id, rule: rule.clone() },
                ));
            }
        }
        self.append(batch)?;
        if let Some(u) = self.units.get_mut(&(user.to_string(), community.to_string())) {
            u.last_activity = u.last_activity.max(now);
            if accepted {
                u.session_open = false;
            }
        }
        Ok(post_id)
    }

    /// Checks externally reported events against the same rules the outcome
    /// computation enforces, then appends them all or none.
    pub fn ingest(&mut self, batch: Vec<ExperimentEvent>) -> Result<usize, ServiceError> {
        for (index, e) in batch.iter().enumerate() {
            let reject = |reason: String| ServiceError::RejectedEvent { index, reason };
            if !ingestible(&e.kind) {
                return Err(reject(format!("`{}` events are written by the service itself", e.kind.name())));
            }
            if e.community_id.is_empty() {
                return Err(reject("community_id is empty".into()));
            }
            match &e.kind {
                EventKind::CommunityProfile { .. } => {
                    if !e.user_id.is_empty() {
                        return Err(reject("community profiles carry an empty user_id".into()));
                    }
                    continue;
                }
                EventKind::VoteCast { .. } => {
                    if e.user_id.is_empty() {
                        return Err(reject("user_id is empty".into()));
                    }
                    continue;
                }
                _ => {}
            }
            let unit = self
                .units
                .get(&(e.user_id.clone(), e.community_id.clone()))
                .ok_or_else(|| reject(format!("user `{}` is not enrolled in `{}`", e.user_id, e.community_id)))?;
            let start = if matches!(e.kind, EventKind::ActiveDay) {
                unit.enrolled_at - PRE_PERIOD_DAYS * SECONDS_PER_DAY
            } else {
                unit.enrolled_at
            };
            let end = unit.enrolled_at + self.window;
            if e.timestamp < start || e.timestamp >= end {
                return Err(reject(format!("timestamp {} is outside [{start}, {end})", e.timestamp)));
            }
        }
        let n = batch.len();
        self.append(batch)?;
        Ok(n)
    }
}
