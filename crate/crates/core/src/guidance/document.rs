//! The on-disk ruleset document.
//!
//! Field names here are the wire format; unknown fields are rejected so a
//! typo in a moderator's document surfaces as a parse error instead of being
//! silently ignored.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSetDocument {
    pub community_id: String,
    pub version: u64,
    pub rules: Vec<RuleDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDocument {
    pub name: String,
    pub condition: ConditionDocument,
    pub trigger: Trigger,
    pub intervention: Intervention,
    #[serde(default = "enabled_by_default")]
    pub enabled: bool,
}

fn enabled_by_default() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionDocument {
    pub kind: ConditionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<Vec<String>>,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    RegexPattern,
    KeywordList,
}

/// Whether a rule fires when its condition matches (`Included`) or when it
/// does not (`Missing`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Included,
    Missing,
}

impl Polarity {
    pub fn flipped(self) -> Self {
        match self {
            Polarity::Included => Polarity::Missing,
            Polarity::Missing => Polarity::Included,
        }
    }

    /// Applies the polarity to a raw match result.
    pub fn fires(self, matched: bool) -> bool {
        match self {
            Polarity::Included => matched,
            Polarity::Missing => !matched,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trigger {
    pub scope: Scope,
    pub events: Vec<TriggerEvent>,
}

/// Which part of the draft a rule inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    TitleOnly,
    BodyOnly,
    TitleOrBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerEvent {
    OnEdit,
    OnSubmit,
}

impl std::fmt::Display for TriggerEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TriggerEvent::OnEdit => "on_edit",
            TriggerEvent::OnSubmit => "on_submit",
        })
    }
}

impl std::str::FromStr for TriggerEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on_edit" | "edit" => Ok(TriggerEvent::OnEdit),
            "on_submit" | "submit" => Ok(TriggerEvent::OnSubmit),
            other => Err(format!("unknown event `{other}` (expected on_edit or on_submit)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intervention {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default)]
    pub block_submission: bool,
    #[serde(default)]
    pub flag_for_review: bool,
}

impl RuleSetDocument {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("ruleset documents always serialize")
    }
}
