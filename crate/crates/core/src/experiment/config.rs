//! Simulation configuration (JSON document).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::experiment::outcomes::Covariate;
use crate::guidance::RuleSetDocument;

fn default_communities() -> usize {
    33
}
fn default_enrollment_days() -> u32 {
    35
}
fn default_follow_up_days() -> u32 {
    28
}
fn default_salt() -> String {
    "post-guidance".into()
}
fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Number of enrolled users (each enrolled by opening the composer once).
    pub n_users: usize,
    #[serde(default = "default_communities")]
    pub n_communities: usize,
    #[serde(default = "default_enrollment_days")]
    pub enrollment_days: u32,
    #[serde(default = "default_follow_up_days")]
    pub follow_up_days: u32,
    /// Share of would-be weekend enrollments shifted away; 0 disables the dip.
    #[serde(default)]
    pub weekend_dip: f64,
    #[serde(default = "default_salt")]
    pub salt: String,
    #[serde(default = "half")]
    pub p_treat: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub baseline: Baseline,
    #[serde(default)]
    pub treatment: TreatmentConfig,
    /// Run the same guidance for control users too (used for null calibration).
    #[serde(default)]
    pub guidance_in_control: bool,
    /// Community `i` uses template `i % templates.len()`.
    pub communities: Vec<CommunityTemplate>,
}

/// Control-arm behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Baseline {
    /// Upper bound on a user's daily visit probability; each user scales it by a Beta draw.
    pub p_active_day: f64,
    /// Beta(a, b) parameters of the per-user visit propensity.
    pub activity_beta: [f64; 2],
    /// Mean composer openings per active day (0 means nobody ever enrolls).
    pub starts_per_active_day: f64,
    /// Gamma shape of the per-user start-rate multiplier; smaller is heavier-tailed.
    pub activity_shape: f64,
    pub p_submit_given_start: f64,
    pub p_rule_breaking: f64,
    pub p_automod_removal_given_breaking: f64,
    pub p_mod_removal_given_breaking: f64,
    pub p_admin_removal: f64,
    pub reports_per_post: f64,
    /// Report-rate factor for rule-breaking posts.
    pub reports_breaking_factor: f64,
    pub comments_per_post: f64,
    pub views_per_post: f64,
    pub upvotes_per_post: f64,
    /// Gamma shape of the per-post engagement multiplier.
    pub engagement_shape: f64,
    pub p_contribution_day: f64,
    pub p_voting_day: f64,
    pub p_newcomer: f64,
    pub p_low_activity: f64,
    pub newcomer_start_scale: f64,
    pub low_activity_start_scale: f64,
    /// When guidance blocks a draft: give up, fix it, or skirt the rule.
    /// Circumvention takes the remaining probability.
    pub p_abandon_when_blocked: f64,
    pub p_repair_when_blocked: f64,
    /// When a rule-breaking draft only gets a message, chance the user fixes it.
    pub p_repair_when_warned: f64,
}

impl Default for Baseline {
    fn default() -> Self {
        Self {
            p_active_day: 0.5,
            activity_beta: [2.0, 3.0],
            starts_per_active_day: 0.25,
            activity_shape: 1.0,
            p_submit_given_start: 0.65,
            p_rule_breaking: 0.7,
            p_automod_removal_given_breaking: 0.65,
            p_mod_removal_given_breaking: 0.3,
            p_admin_removal: 0.01,
            reports_per_post: 0.3,
            reports_breaking_factor: 2.0,
            comments_per_post: 4.0,
            views_per_post: 60.0,
            upvotes_per_post: 15.0,
            engagement_shape: 0.5,
            p_contribution_day: 0.3,
            p_voting_day: 0.5,
            p_newcomer: 0.54,
            p_low_activity: 0.5,
            newcomer_start_scale: 1.0,
            low_activity_start_scale: 1.0,
            p_abandon_when_blocked: 0.25,
            p_repair_when_blocked: 0.6,
            p_repair_when_warned: 0.3,
        }
    }
}

/// Multiplicative effects applied to treated users' rates, stage by stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Multipliers {
    pub active_day: f64,
    pub start: f64,
    pub submit: f64,
    pub rule_breaking: f64,
    pub automod_removal: f64,
    pub mod_removal: f64,
    pub admin_removal: f64,
    pub report: f64,
    pub comment: f64,
    pub view: f64,
    pub upvote: f64,
    pub contribution_day: f64,
    pub voting_day: f64,
}

impl Default for Multipliers {
    fn default() -> Self {
        Self::NEUTRAL
    }
}

impl Multipliers {
    pub const NEUTRAL: Multipliers = Multipliers {
        active_day: 1.0,
        start: 1.0,
        submit: 1.0,
        rule_breaking: 1.0,
        automod_removal: 1.0,
        mod_removal: 1.0,
        admin_removal: 1.0,
        report: 1.0,
        comment: 1.0,
        view: 1.0,
        upvote: 1.0,
        contribution_day: 1.0,
        voting_day: 1.0,
    };

    fn values(&self) -> [(&'static str, f64); 13] {
        [
            ("active_day", self.active_day),
            ("start", self.start),
            ("submit", self.submit),
            ("rule_breaking", self.rule_breaking),
            ("automod_removal", self.automod_removal),
            ("mod_removal", self.mod_removal),
            ("admin_removal", self.admin_removal),
            ("report", self.report),
            ("comment", self.comment),
            ("view", self.view),
            ("upvote", self.upvote),
            ("contribution_day", self.contribution_day),
            ("voting_day", self.voting_day),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentConfig {
    /// Whether treated users' drafts go through the community's rules.
    #[serde(default = "yes")]
    pub guidance: bool,
    #[serde(default)]
    pub multipliers: Multipliers,
    /// Different multipliers for treated users with a covariate set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata: Option<Strata>,
}

impl Default for TreatmentConfig {
    fn default() -> Self {
        Self { guidance: true, multipliers: Multipliers::NEUTRAL, strata: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strata {
    pub covariate: Covariate,
    pub multipliers: Multipliers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RulesetSource {
    /// Path to a ruleset document, relative to the config file.
    Path(String),
    Inline(RuleSetDocument),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraftText {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
}

impl DraftText {
    pub fn new(title: impl Into<String>, body: impl Into<String>) -> Self {
        Self { title: title.into(), body: body.into() }
    }
}

/// Draft archetypes users in a community compose.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraftCorpus {
    pub breaking: Vec<DraftText>,
    pub clean: Vec<DraftText>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityTemplate {
    /// Relative share of enrolled users.
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ruleset: Option<RulesetSource>,
    pub drafts: DraftCorpus,
    /// Rules created in the pre-period; defaults to the ruleset's size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules_created: Option<u32>,
    #[serde(default = "default_pre_posts")]
    pub pre_posts: u64,
    #[serde(default = "default_automod_touched")]
    pub automod_touched: u64,
    /// Replaces the global treatment multipliers for this community.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatment: Option<Multipliers>,
}

fn default_pre_posts() -> u64 {
    1000
}
fn default_automod_touched() -> u64 {
    50
}

impl SimConfig {
    /// Reads a config and inlines any ruleset paths, resolved against the
    /// config's directory.
    pub fn from_path(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        let mut config: SimConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for template in &mut config.communities {
            if let Some(RulesetSource::Path(p)) = &template.ruleset {
                let resolved = base.join(p);
                let doc_text = std::fs::read_to_string(&resolved)
                    .map_err(|e| SimError::InvalidConfig(format!("cannot read ruleset {}: {e}", resolved.display())))?;
                let doc = RuleSetDocument::from_json(&doc_text)
                    .map_err(|e| SimError::InvalidConfig(format!("malformed ruleset {}: {e}", resolved.display())))?;
                template.ruleset = Some(RulesetSource::Inline(doc));
            }
        }
        Ok(config)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    /// Checks ranges. Probability-times-multiplier products must stay in
    /// `[0, 1]` for every multiplier set the config can apply.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.n_communities == 0 {
            return bad("n_communities must be positive".into());
        }
        if self.communities.is_empty() {
            return bad("at least one community template is required".into());
        }
        if self.follow_up_days == 0 || self.enrollment_days == 0 {
            return bad("enrollment_days and follow_up_days must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p_treat) {
            return bad(format!("p_treat {} outside [0, 1]", self.p_treat));
        }
        if !(0.0..1.0).contains(&self.weekend_dip) {
            return bad(format!("weekend_dip {} outside [0, 1)", self.weekend_dip));
        }

        let b = &self.baseline;
        let probabilities = [
            ("p_active_day", b.p_active_day),
            ("p_submit_given_start", b.p_submit_given_start),
            ("p_rule_breaking", b.p_rule_breaking),
            ("p_automod_removal_given_breaking", b.p_automod_removal_given_breaking),
            ("p_mod_removal_given_breaking", b.p_mod_removal_given_breaking),
            ("p_admin_removal", b.p_admin_removal),
            ("p_contribution_day", b.p_contribution_day),
            ("p_voting_day", b.p_voting_day),
            ("p_newcomer", b.p_newcomer),
            ("p_low_activity", b.p_low_activity),
            ("p_abandon_when_blocked", b.p_abandon_when_blocked),
            ("p_repair_when_blocked", b.p_repair_when_blocked),
            ("p_repair_when_warned", b.p_repair_when_warned),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if b.p_abandon_when_blocked + b.p_repair_when_blocked > 1.0 + 1e-12 {
            return bad("p_abandon_when_blocked + p_repair_when_blocked exceeds 1".into());
        }
        let rates = [
            ("starts_per_active_day", b.starts_per_active_day),
            ("reports_per_post", b.reports_per_post),
            ("reports_breaking_factor", b.reports_breaking_factor),
            ("comments_per_post", b.comments_per_post),
            ("views_per_post", b.views_per_post),
            ("upvotes_per_post", b.upvotes_per_post),
            ("newcomer_start_scale", b.newcomer_start_scale),
            ("low_activity_start_scale", b.low_activity_start_scale),
        ];
        for (name, r) in rates {
            if !(r.is_finite() && r >= 0.0) {
                return bad(format!("{name} = {r} must be finite and non-negative"));
            }
        }
        for (name, s) in [
            ("activity_shape", b.activity_shape),
            ("engagement_shape", b.engagement_shape),
            ("activity_beta[0]", b.activity_beta[0]),
            ("activity_beta[1]", b.activity_beta[1]),
        ] {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("{name} = {s} must be positive"));
            }
        }

        let mut sets = vec![("treatment", self.treatment.multipliers)];
        if let Some(s) = &self.treatment.strata {
            sets.push(("treatment.strata", s.multipliers));
        }
        for (i, t) in self.communities.iter().enumerate() {
            if !(t.weight.is_finite() && t.weight > 0.0) {
                return bad(format!("community template {i}: weight must be positive"));
            }
            if t.drafts.clean.is_empty() {
                return bad(format!("community template {i}: needs at least one clean draft"));
            }
            if t.drafts.breaking.is_empty() && b.p_rule_breaking > 0.0 {
                return bad(format!("community template {i}: needs rule-breaking drafts when p_rule_breaking > 0"));
            }
            if let Some(RulesetSource::Path(p)) = &t.ruleset {
                return bad(format!("community template {i}: ruleset path `{p}` was not resolved"));
            }
            if let Some(m) = t.treatment {
                sets.push(("community treatment", m));
            }
        }
        for (label, m) in sets {
            for (name, v) in m.values() {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{label}.{name} = {v} must be positive"));
                }
            }
            let capped = [
                ("active_day", b.p_active_day * m.active_day),
                ("submit", b.p_submit_given_start * m.submit),
                ("rule_breaking", b.p_rule_breaking * m.rule_breaking),
                ("automod_removal", b.p_automod_removal_given_breaking * m.automod_removal),
                ("mod_removal", b.p_mod_removal_given_breaking * m.mod_removal),
                ("admin_removal", b.p_admin_removal * m.admin_removal),
                ("contribution_day", b.p_contribution_day * m.contribution_day),
                ("voting_day", b.p_voting_day * m.voting_day),
            ];
            for (name, p) in capped {
                if p > 1.0 {
                    return bad(format!("{label}.{name} pushes its probability to {p} > 1"));
                }
            }
        }
        Ok(())
    }
}
