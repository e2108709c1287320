//! Shared service state and the operations behind each endpoint.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use guidance_core::analysis::{build_report, Report, ReportRequest};
use guidance_core::experiment::{assign_arm, compute_outcomes, Arm, EventKind, ExperimentEvent};
use guidance_core::guidance::{compile_ruleset, DraftState, GuidanceResult, RuleSetDocument, TriggerEvent};
use guidance_core::CompiledRuleSet;

use crate::config::ServiceConfig;
use crate::error::ServiceError;
use crate::journal::{Journal, ReplayInfo};

pub const MAX_TITLE_CHARS: usize = 300;
pub const MAX_BODY_CHARS: usize = 40_000;
pub const MAX_ID_CHARS: usize = 128;

/// Seconds since the Unix epoch.
pub type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs() as i64))
}

/// Community ids double as file names, so they are restricted to a safe alphabet.
pub fn check_community_id(id: &str) -> Result<(), ServiceError> {
    let ok =
        !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(ServiceError::BadRequest(format!("community id `{id}` must be 1 to 64 ASCII letters, digits, `_` or `-`")))
    }
}

fn check_user_id(id: &str) -> Result<(), ServiceError> {
    if id.is_empty() || id.chars().count() > MAX_ID_CHARS || id.chars().any(char::is_control) {
        return Err(ServiceError::BadRequest(format!(
            "user_id must be 1 to {MAX_ID_CHARS} characters without control characters"
        )));
    }
    Ok(())
}

fn check_draft(title: &str, body: &str) -> Result<(), ServiceError> {
    let (t, b) = (title.chars().count(), body.chars().count());
    if t > MAX_TITLE_CHARS {
        return Err(ServiceError::TooLarge { field: "title", len: t, limit: MAX_TITLE_CHARS });
    }
    if b > MAX_BODY_CHARS {
        return Err(ServiceError::TooLarge { field: "body", len: b, limit: MAX_BODY_CHARS });
    }
    Ok(())
}

/// The guidance a request resolves to, with the snapshot it came from.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub arm: Arm,
    pub guidance: GuidanceResult,
    pub ruleset_version: u64,
    pub session_started: bool,
}

#[derive(Debug, Clone)]
pub struct Submission {
    pub arm: Arm,
    pub accepted: bool,
    pub post_id: Option<u64>,
    pub guidance: GuidanceResult,
    pub ruleset_version: u64,
}

pub struct AppState {
    config: ServiceConfig,
    rulesets: RwLock<HashMap<String, Arc<CompiledRuleSet>>>,
    journal: Mutex<Journal>,
    clock: Clock,
}

fn ruleset_path(dir: &Path, community: &str) -> PathBuf {
    dir.join(format!("{community}.json"))
}

/// Writes through a temporary file and a rename so readers never see half a document.
fn write_atomically(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::File::open(&tmp)?.sync_all()?;
    std::fs::rename(&tmp, path)
}

impl AppState {
    /// Loads stored rulesets and replays the event log.
    pub fn open(config: ServiceConfig, clock: Clock) -> Result<(Self, ReplayInfo), ServiceError> {
        config.validate()?;
        let dir = config.rulesets_dir();
        std::fs::create_dir_all(&dir)?;
        let (mut journal, info) = Journal::open(
            &config.events_path(),
            &config.salt,
            config.p_treat,
            config.follow_up_days,
            config.session_gap_minutes,
            config.sync_writes,
        )?;

        let mut rulesets = HashMap::new();
        let mut reconcile = Vec::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            let doc = RuleSetDocument::from_json(&text)
                .map_err(|e| ServiceError::State(format!("{}: {e}", path.display())))?;
            let id = doc.community_id.clone();
            if path.file_stem().and_then(|s| s.to_str()) != Some(id.as_str()) {
                return Err(ServiceError::State(format!("{} holds community `{id}`", path.display())));
            }
            let compiled = compile_ruleset(doc).map_err(|e| ServiceError::State(format!("{}: {e}", path.display())))?;
            // A crash between storing a document and logging it leaves the
            // file ahead of the log; the missing record is written now.
            if compiled.version() > journal.logged_ruleset_version(&id) {
                reconcile.push(ExperimentEvent::new(
                    clock(),
                    "",
                    id.as_str(),
                    EventKind::RulesetUpdated { version: compiled.version() },
                ));
            }
            rulesets.insert(id, Arc::new(compiled));
        }
        journal.append(reconcile)?;

        let state = AppState { config, rulesets: RwLock::new(rulesets), journal: Mutex::new(journal), clock };
        Ok((state, info))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn journal(&self) -> Result<MutexGuard<'_, Journal>, ServiceError> {
        self.journal.lock().map_err(|_| ServiceError::State("event log writer panicked".into()))
    }

    pub fn now(&self) -> i64 {
        (self.clock)()
    }

    /// The current snapshot; later swaps do not affect it.
    pub fn ruleset(&self, community: &str) -> Result<Arc<CompiledRuleSet>, ServiceError> {
        self.rulesets
            .read()
            .expect("ruleset map lock poisoned")
            .get(community)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownCommunity(community.to_string()))
    }

    pub fn community_count(&self) -> usize {
        self.rulesets.read().expect("ruleset map lock poisoned").len()
    }

    pub fn event_count(&self) -> Result<usize, ServiceError> {
        Ok(self.journal()?.events().len())
    }

    pub fn arm(&self, user: &str) -> Arm {
        assign_arm(user, &self.config.salt, self.config.p_treat)
    }

    /// Validates, stores and swaps in a replacement ruleset. The version is
    /// one past the previous one, whatever the document says.
    pub fn put_ruleset(&self, community: &str, mut doc: RuleSetDocument) -> Result<u64, ServiceError> {
        check_community_id(community)?;
        if doc.community_id != community {
            return Err(ServiceError::BadRequest(format!(
                "document is for community `{}` but was sent to `{community}`",
                doc.community_id
            )));
        }
        // The journal lock also serializes concurrent uploads.
        let mut journal = self.journal()?;
        let previous = self.ruleset(community).map(|r| r.version()).unwrap_or(0);
        let version = previous.max(journal.logged_ruleset_version(community)) + 1;
        doc.version = version;
        let compiled = compile_ruleset(doc)
            .map_err(|e| ServiceError::InvalidRuleset(e.iter().map(ToString::to_string).collect()))?;
        write_atomically(
            &ruleset_path(&self.config.rulesets_dir(), community),
            compiled.document().to_json_pretty().as_bytes(),
        )?;
        journal.append(vec![ExperimentEvent::new(self.now(), "", community, EventKind::RulesetUpdated { version })])?;
        self.rulesets.write().expect("ruleset map lock poisoned").insert(community.to_string(), Arc::new(compiled));
        Ok(version)
    }

    fn effective_arm(&self, user: &str, arm_override: Option<Arm>) -> Result<Arm, ServiceError> {
        match arm_override {
            Some(_) if !self.config.demo_mode => Err(ServiceError::OverrideDisabled),
            Some(arm) => Ok(arm),
            None => Ok(self.arm(user)),
        }
    }

    fn shows_guidance(&self, arm: Arm) -> bool {
        self.config.guidance_armed && arm.is_treated()
    }

    /// Live guidance for a draft. Overridden (demo) requests are not logged.
    pub fn evaluate(
        &self,
        community: &str,
        user: &str,
        title: &str,
        body: &str,
        event: TriggerEvent,
        arm_override: Option<Arm>,
    ) -> Result<Evaluation, ServiceError> {
        check_user_id(user)?;
        check_draft(title, body)?;
        let snapshot = self.ruleset(community)?;
        let arm = self.effective_arm(user, arm_override)?;
        let guidance = if self.shows_guidance(arm) {
            snapshot
                .evaluate(&DraftState::new(community, user, title, body), event)
                .expect("snapshot matches community")
        } else {
            GuidanceResult::empty(event)
        };
        let session_started = match arm_override {
            Some(_) => false,
            None => self.journal()?.record_evaluation(user, community, arm, self.now())?,
        };
        Ok(Evaluation { arm, guidance, ruleset_version: snapshot.version(), session_started })
    }

    /// Gated submission: treated users go through the rules, control users
    /// are always accepted here (moderation happens downstream).
    pub fn submit(
        &self,
        community: &str,
        user: &str,
        title: &str,
        body: &str,
        arm_override: Option<Arm>,
    ) -> Result<Submission, ServiceError> {
        check_user_id(user)?;
        check_draft(title, body)?;
        let snapshot = self.ruleset(community)?;
        let arm = self.effective_arm(user, arm_override)?;
        let (accepted, guidance) = if self.shows_guidance(arm) {
            let d = snapshot
                .attempt_submit(&DraftState::new(community, user, title, body))
                .expect("snapshot matches community");
            (d.accepted, d.guidance)
        } else {
            (true, GuidanceResult::empty(TriggerEvent::OnSubmit))
        };
        let post_id = match arm_override {
            Some(_) => None,
            None => {
                self.journal()?.record_submission(user, community, arm, self.now(), accepted, &guidance.review_flags)?
            }
        };
        Ok(Submission { arm, accepted, post_id, guidance, ruleset_version: snapshot.version() })
    }

    pub fn ingest(&self, events: Vec<ExperimentEvent>) -> Result<usize, ServiceError> {
        self.journal()?.ingest(events)
    }

    /// The analysis report over everything logged so far.
    pub fn report(&self, request: &ReportRequest) -> Result<Report, ServiceError> {
        let events = self.journal()?.events().to_vec();
        let records = compute_outcomes(&events, self.config.follow_up_days)?;
        if records.is_empty() {
            return Err(
                guidance_core::AnalysisError::NotIdentifiable("the event log has no enrolled users".into()).into()
            );
        }
        Ok(build_report(&records, request)?)
    }
}
