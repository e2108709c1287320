use serde::{Deserialize, Serialize};

use super::compile::{CompiledRule, CompiledRuleSet};
use super::document::{Scope, TriggerEvent};
use crate::error::GuidanceError;

/// A post being composed. Either part may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftState {
    pub community_id: String,
    pub user_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
}

impl DraftState {
    pub fn new(
        community_id: impl Into<String>,
        user_id: impl Into<String>,
        title: impl Into<String>,
        body: impl Into<String>,
    ) -> Self {
        Self { community_id: community_id.into(), user_id: user_id.into(), title: title.into(), body: body.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostPart {
    Title,
    Body,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredRule {
    pub rule: String,
    pub part: PostPart,
}

/// What the engine tells the composer for one draft and event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceResult {
    pub fired: Vec<FiredRule>,
    pub messages: Vec<String>,
    pub submission_blocked: bool,
    pub review_flags: Vec<String>,
    pub event: TriggerEvent,
}

impl GuidanceResult {
    /// No guidance at all; what control-arm users see.
    pub fn empty(event: TriggerEvent) -> Self {
        Self { fired: Vec::new(), messages: Vec::new(), submission_blocked: false, review_flags: Vec::new(), event }
    }

    pub fn is_empty(&self) -> bool {
        self.fired.is_empty() && self.messages.is_empty() && self.review_flags.is_empty() && !self.submission_blocked
    }

    fn record(&mut self, rule: &CompiledRule, part: PostPart) {
        let first_for_rule = !self.fired.iter().any(|f| f.rule == rule.name);
        self.fired.push(FiredRule { rule: rule.name.clone(), part });
        if !first_for_rule {
            return;
        }
        if let Some(message) = &rule.intervention.message {
            if !self.messages.iter().any(|m| m == message) {
                self.messages.push(message.clone());
            }
        }
        self.submission_blocked |= rule.intervention.block_submission;
        if rule.intervention.flag_for_review {
            self.review_flags.push(rule.name.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitDecision {
    pub accepted: bool,
    pub guidance: GuidanceResult,
}

/// The coarse action a verdict amounts to, in decreasing severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Block,
    Flag,
    Message,
    Allow,
}

impl Action {
    pub fn of(result: &GuidanceResult) -> Self {
        if result.submission_blocked {
            Action::Block
        } else if !result.review_flags.is_empty() {
            Action::Flag
        } else if !result.messages.is_empty() {
            Action::Message
        } else {
            Action::Allow
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Block => "block",
            Action::Flag => "flag",
            Action::Message => "message",
            Action::Allow => "allow",
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl CompiledRuleSet {
    /// Evaluates every enabled rule listening to `event`, in ruleset order.
    pub fn evaluate(&self, draft: &DraftState, event: TriggerEvent) -> Result<GuidanceResult, GuidanceError> {
        if draft.community_id != self.community_id() {
            return Err(GuidanceError::CommunityMismatch {
                expected: self.community_id().to_string(),
                found: draft.community_id.clone(),
            });
        }
        let mut result = GuidanceResult::empty(event);
        for rule in self.rules().iter().filter(|r| r.enabled && r.listens_to(event)) {
            let check = |part: PostPart| {
                let text = match part {
                    PostPart::Title => &draft.title,
                    PostPart::Body => &draft.body,
                };
                rule.condition.fires_on(text)
            };
            let parts: &[PostPart] = match rule.scope {
                Scope::TitleOnly => &[PostPart::Title],
                Scope::BodyOnly => &[PostPart::Body],
                Scope::TitleOrBody => &[PostPart::Title, PostPart::Body],
            };
            for &part in parts {
                if check(part) {
                    result.record(rule, part);
                }
            }
        }
        Ok(result)
    }

    /// Submit-time gate: evaluates with [`TriggerEvent::OnSubmit`] and accepts
    /// unless a blocking rule fired.
    pub fn attempt_submit(&self, draft: &DraftState) -> Result<SubmitDecision, GuidanceError> {
        let guidance = self.evaluate(draft, TriggerEvent::OnSubmit)?;
        Ok(SubmitDecision { accepted: !guidance.submission_blocked, guidance })
    }
}

/// Free-function form of [`CompiledRuleSet::evaluate`].
pub fn evaluate_draft(
    ruleset: &CompiledRuleSet,
    draft: &DraftState,
    event: TriggerEvent,
) -> Result<GuidanceResult, GuidanceError> {
    ruleset.evaluate(draft, event)
}

/// Free-function form of [`CompiledRuleSet::attempt_submit`].
pub fn attempt_submit(ruleset: &CompiledRuleSet, draft: &DraftState) -> Result<SubmitDecision, GuidanceError> {
    ruleset.attempt_submit(draft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::compile::compile_ruleset_json;

    fn ruleset(rules: &str) -> CompiledRuleSet {
        compile_ruleset_json(&format!(r#"{{"community_id":"c","version":1,"rules":[{rules}]}}"#)).unwrap()
    }

    fn rule(name: &str, pattern: &str, polarity: &str, scope: &str, events: &str, intervention: &str) -> String {
        format!(
            r#"{{"name":"{name}","condition":{{"kind":"regex_pattern","pattern":"{pattern}","polarity":"{polarity}"}},
            "trigger":{{"scope":"{scope}","events":[{events}]}},"intervention":{intervention}}}"#
        )
    }

    fn draft(title: &str, body: &str) -> DraftState {
        DraftState::new("c", "u", title, body)
    }

    const BLOCK: &str = r#"{"message":"m","block_submission":true}"#;

    #[test]
    fn community_mismatch_is_an_error() {
        let rs = ruleset("");
        let d = DraftState::new("other", "u", "t", "b");
        assert!(matches!(rs.evaluate(&d, TriggerEvent::OnEdit), Err(GuidanceError::CommunityMismatch { .. })));
    }

    #[test]
    fn event_filtering() {
        let rs = ruleset(&rule("r", "x", "included", "title_only", r#""on_submit""#, BLOCK));
        let r = rs.evaluate(&draft("x", ""), TriggerEvent::OnEdit).unwrap();
        assert!(r.fired.is_empty() && !r.submission_blocked);
        let r = rs.evaluate(&draft("x", ""), TriggerEvent::OnSubmit).unwrap();
        assert!(r.submission_blocked);
    }

    #[test]
    fn title_or_body_fires_per_part_and_dedupes_message() {
        let rs = ruleset(&rule("r", "bad", "included", "title_or_body", r#""on_edit""#, BLOCK));
        let r = rs.evaluate(&draft("bad title", "bad body"), TriggerEvent::OnEdit).unwrap();
        assert_eq!(r.fired.len(), 2);
        assert_eq!(r.messages, vec!["m".to_string()]);
        let r = rs.evaluate(&draft("fine", "bad"), TriggerEvent::OnEdit).unwrap();
        assert_eq!(r.fired, vec![FiredRule { rule: "r".into(), part: PostPart::Body }]);
    }

    #[test]
    fn messages_keep_ruleset_order_and_drop_exact_duplicates() {
        let a = rule("a", "z", "included", "title_only", r#""on_edit""#, r#"{"message":"second"}"#);
        let b = rule("b", "z", "included", "title_only", r#""on_edit""#, r#"{"message":"first"}"#);
        let c = rule("c", "z", "included", "title_only", r#""on_edit""#, r#"{"message":"second"}"#);
        let rs = ruleset(&format!("{a},{b},{c}"));
        let r = rs.evaluate(&draft("z", ""), TriggerEvent::OnEdit).unwrap();
        assert_eq!(r.messages, vec!["second".to_string(), "first".to_string()]);
        assert_eq!(r.fired.len(), 3);
    }

    #[test]
    fn flags_and_disabled_rules() {
        let flag = rule("f", "z", "included", "body_only", r#""on_submit""#, r#"{"flag_for_review":true}"#);
        let mut off = rule("off", "z", "included", "body_only", r#""on_submit""#, BLOCK);
        off.insert_str(off.len() - 1, r#","enabled":false"#);
        let rs = ruleset(&format!("{flag},{off}"));
        let d = rs.attempt_submit(&draft("", "z")).unwrap();
        assert!(d.accepted);
        assert_eq!(d.guidance.review_flags, vec!["f".to_string()]);
        assert_eq!(Action::of(&d.guidance), Action::Flag);
    }

    #[test]
    fn empty_ruleset_accepts_everything() {
        let rs = ruleset("");
        let d = rs.attempt_submit(&draft("anything", "at all")).unwrap();
        assert!(d.accepted && d.guidance.is_empty());
    }
}
