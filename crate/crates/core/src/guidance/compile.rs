use std::collections::HashMap;
use std::fmt;

use regex::{Regex, RegexBuilder};

use super::document::{
    ConditionDocument, ConditionKind, Intervention, Polarity, RuleDocument, RuleSetDocument, Scope, TriggerEvent,
};
use crate::error::GuidanceError;

/// Compiled size ceiling for a single condition. Generous enough for
/// character-count rules such as `^(.|\s){1000}.+` over Unicode classes.
const REGEX_SIZE_LIMIT: usize = 64 * (1 << 20);

/// A single problem found while compiling a ruleset document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    /// Zero-based position of the offending rule, when the problem is rule-scoped.
    pub index: Option<usize>,
    pub rule: Option<String>,
    pub problem: Problem,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Problem {
    #[error("invalid regex: {0}")]
    InvalidRegex(String),
    #[error("condition of kind `{kind}` must carry exactly `{expected}`")]
    ConditionShape { kind: &'static str, expected: &'static str },
    #[error("keyword list is empty")]
    EmptyKeywordList,
    #[error("keyword #{0} is empty")]
    EmptyKeyword(usize),
    #[error("rule name is empty")]
    EmptyName,
    #[error("duplicate rule name (also used by rule #{first})")]
    DuplicateName { first: usize },
    #[error("trigger has no events")]
    NoTriggerEvents,
    #[error("message is empty")]
    EmptyMessage,
    #[error("intervention has no effect (no message, no block, no review flag)")]
    NoEffect,
    #[error("blocking rule must carry a message")]
    SilentBlock,
    #[error("community_id is empty")]
    EmptyCommunity,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.rule, self.index) {
            (Some(name), Some(i)) => write!(f, "rule #{} `{}`: {}", i + 1, name, self.problem),
            (None, Some(i)) => write!(f, "rule #{}: {}", i + 1, self.problem),
            _ => write!(f, "{}", self.problem),
        }
    }
}

/// Every problem found in a document, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl ValidationErrors {
    pub fn iter(&self) -> impl Iterator<Item = &ValidationError> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// A condition with its matcher built. Both regex and keyword conditions
/// run on the same linear-time engine.
#[derive(Debug, Clone)]
pub struct CompiledCondition {
    kind: ConditionKind,
    matcher: Regex,
    polarity: Polarity,
}

impl CompiledCondition {
    pub fn kind(&self) -> ConditionKind {
        self.kind
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    /// Raw match presence, before polarity. Regexes search unanchored;
    /// keyword lists match any keyword as a case-insensitive substring.
    pub fn matches(&self, text: &str) -> bool {
        self.matcher.is_match(text)
    }

    /// Whether the condition, with polarity applied, fires on `text`.
    pub fn fires_on(&self, text: &str) -> bool {
        self.polarity.fires(self.matches(text))
    }
}

#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub name: String,
    pub condition: CompiledCondition,
    pub scope: Scope,
    pub on_edit: bool,
    pub on_submit: bool,
    pub intervention: Intervention,
    pub enabled: bool,
}

impl CompiledRule {
    pub fn listens_to(&self, event: TriggerEvent) -> bool {
        match event {
            TriggerEvent::OnEdit => self.on_edit,
            TriggerEvent::OnSubmit => self.on_submit,
        }
    }
}

/// An immutable, validated ruleset. Cheap to share behind an `Arc`.
#[derive(Debug, Clone)]
pub struct CompiledRuleSet {
    community_id: String,
    version: u64,
    rules: Vec<CompiledRule>,
    document: RuleSetDocument,
}

impl CompiledRuleSet {
    pub fn community_id(&self) -> &str {
        &self.community_id
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn rules(&self) -> &[CompiledRule] {
        &self.rules
    }

    pub fn document(&self) -> &RuleSetDocument {
        &self.document
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Same rules, new version number. Used when a service stores a replacement.
    pub fn with_version(mut self, version: u64) -> Self {
        self.version = version;
        self.document.version = version;
        self
    }
}

/// Parses and compiles a JSON ruleset document.
pub fn compile_ruleset_json(text: &str) -> Result<CompiledRuleSet, GuidanceError> {
    let document = RuleSetDocument::from_json(text).map_err(GuidanceError::Parse)?;
    compile_ruleset(document).map_err(GuidanceError::Invalid)
}

/// Validates a document and builds every matcher once. All problems are
/// reported, not only the first.
pub fn compile_ruleset(document: RuleSetDocument) -> Result<CompiledRuleSet, ValidationErrors> {
    let mut errors = Vec::new();
    if document.community_id.trim().is_empty() {
        errors.push(ValidationError { index: None, rule: None, problem: Problem::EmptyCommunity });
    }

    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut rules = Vec::with_capacity(document.rules.len());
    for (index, raw) in document.rules.iter().enumerate() {
        let mut report = |problem: Problem| {
            errors.push(ValidationError {
                index: Some(index),
                rule: (!raw.name.is_empty()).then(|| raw.name.clone()),
                problem,
            })
        };

        if raw.name.trim().is_empty() {
            report(Problem::EmptyName);
        } else if let Some(&first) = seen.get(raw.name.as_str()) {
            report(Problem::DuplicateName { first: first + 1 });
        } else {
            seen.insert(raw.name.as_str(), index);
        }

        for problem in check_intervention(&raw.intervention) {
            report(problem);
        }
        if raw.trigger.events.is_empty() {
            report(Problem::NoTriggerEvents);
        }

        match compile_condition(&raw.condition) {
            Ok(condition) => rules.push(build_rule(raw, condition)),
            Err(problems) => problems.into_iter().for_each(&mut report),
        }
    }

    if errors.is_empty() {
        Ok(CompiledRuleSet { community_id: document.community_id.clone(), version: document.version, rules, document })
    } else {
        Err(ValidationErrors(errors))
    }
}

fn build_rule(raw: &RuleDocument, condition: CompiledCondition) -> CompiledRule {
    CompiledRule {
        name: raw.name.clone(),
        condition,
        scope: raw.trigger.scope,
        on_edit: raw.trigger.events.contains(&TriggerEvent::OnEdit),
        on_submit: raw.trigger.events.contains(&TriggerEvent::OnSubmit),
        intervention: raw.intervention.clone(),
        enabled: raw.enabled,
    }
}

fn check_intervention(intervention: &Intervention) -> Vec<Problem> {
    let mut problems = Vec::new();
    let message = match intervention.message.as_deref() {
        Some(m) if m.trim().is_empty() => {
            problems.push(Problem::EmptyMessage);
            false
        }
        Some(_) => true,
        None => false,
    };
    if intervention.block_submission && intervention.message.is_none() {
        problems.push(Problem::SilentBlock);
    } else if !message && !intervention.block_submission && !intervention.flag_for_review {
        problems.push(Problem::NoEffect);
    }
    problems
}

/// Builds the matcher for one condition.
pub fn compile_condition(raw: &ConditionDocument) -> Result<CompiledCondition, Vec<Problem>> {
    let source = match (raw.kind, &raw.pattern, &raw.keywords) {
        (ConditionKind::RegexPattern, Some(pattern), None) => anchor_dollar_before_final_newline(pattern),
        (ConditionKind::KeywordList, None, Some(keywords)) => {
            let mut problems = Vec::new();
            if keywords.is_empty() {
                problems.push(Problem::EmptyKeywordList);
            }
            for (i, k) in keywords.iter().enumerate() {
                if k.is_empty() {
                    problems.push(Problem::EmptyKeyword(i + 1));
                }
            }
            if !problems.is_empty() {
                return Err(problems);
            }
            let alternation: Vec<String> = keywords.iter().map(|k| regex::escape(k)).collect();
            format!("(?i:{})", alternation.join("|"))
        }
        (ConditionKind::RegexPattern, _, _) => {
            return Err(vec![Problem::ConditionShape { kind: "regex_pattern", expected: "pattern" }])
        }
        (ConditionKind::KeywordList, _, _) => {
            return Err(vec![Problem::ConditionShape { kind: "keyword_list", expected: "keywords" }])
        }
    };

    let matcher = RegexBuilder::new(&source)
        .size_limit(REGEX_SIZE_LIMIT)
        .build()
        .map_err(|e| vec![Problem::InvalidRegex(describe_regex_error(&e))])?;
    Ok(CompiledCondition { kind: raw.kind, matcher, polarity: raw.polarity })
}

fn describe_regex_error(e: &regex::Error) -> String {
    match e {
        // The parser's message is multi-line with a caret diagram; keep the last line.
        regex::Error::Syntax(s) => s
            .lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .map(|l| l.trim_start_matches("error: ").to_string())
            .unwrap_or_else(|| s.clone()),
        other => other.to_string(),
    }
}

/// Rewrites every bare `$` so it also matches just before a trailing newline
/// (`$` → `(?:\n?\z)`). Escapes and character classes are left untouched, as
/// are patterns that enable multi-line mode, where `$` already means end of line.
pub(crate) fn anchor_dollar_before_final_newline(pattern: &str) -> String {
    if has_inline_multiline_flag(pattern) {
        return pattern.to_string();
    }
    let mut out = String::with_capacity(pattern.len() + 8);
    let mut chars = pattern.chars().peekable();
    let mut class_depth = 0usize;
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                out.push(c);
                if let Some(next) = chars.next() {
                    out.push(next);
                }
            }
            '[' => {
                class_depth += 1;
                out.push(c);
                // A `]` (optionally after `^`) right after the opener is literal.
                if chars.peek() == Some(&'^') {
                    out.push(chars.next().unwrap());
                }
                if chars.peek() == Some(&']') {
                    out.push(chars.next().unwrap());
                }
            }
            ']' if class_depth > 0 => {
                class_depth -= 1;
                out.push(c);
            }
            '$' if class_depth == 0 => out.push_str(r"(?:\n?\z)"),
            _ => out.push(c),
        }
    }
    out
}

fn has_inline_multiline_flag(pattern: &str) -> bool {
    // Flag groups like `(?im)` or `(?sm:...)`; flags after `-` clear rather than set.
    let mut rest = pattern;
    while let Some(pos) = rest.find("(?") {
        let escaped = rest[..pos].ends_with('\\');
        let after = &rest[pos + 2..];
        if !escaped && after.chars().take_while(|c| c.is_ascii_alphabetic()).any(|c| c == 'm') {
            return true;
        }
        rest = after;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::document::Trigger;

    fn regex_rule(name: &str, pattern: &str) -> RuleDocument {
        RuleDocument {
            name: name.into(),
            condition: ConditionDocument {
                kind: ConditionKind::RegexPattern,
                pattern: Some(pattern.into()),
                keywords: None,
                polarity: Polarity::Included,
            },
            trigger: Trigger { scope: Scope::TitleOnly, events: vec![TriggerEvent::OnSubmit] },
            intervention: Intervention { message: Some("nope".into()), block_submission: true, flag_for_review: false },
            enabled: true,
        }
    }

    fn doc(rules: Vec<RuleDocument>) -> RuleSetDocument {
        RuleSetDocument { community_id: "c".into(), version: 1, rules }
    }

    #[test]
    fn empty_ruleset_compiles() {
        let rs = compile_ruleset(doc(vec![])).unwrap();
        assert!(rs.is_empty());
    }

    #[test]
    fn unclosed_group_names_the_rule() {
        let errs = compile_ruleset(doc(vec![regex_rule("broken", "([a-z")])).unwrap_err();
        assert_eq!(errs.len(), 1);
        let e = &errs.0[0];
        assert_eq!(e.rule.as_deref(), Some("broken"));
        assert!(matches!(&e.problem, Problem::InvalidRegex(m) if m.contains("unclosed")), "{e}");
    }

    #[test]
    fn errors_are_exhaustive() {
        let mut silent = regex_rule("silent", "x");
        silent.intervention.message = None;
        let mut inert = regex_rule("inert", "y");
        inert.intervention = Intervention { message: None, block_submission: false, flag_for_review: false };
        let mut empty_kw = regex_rule("kw", "z");
        empty_kw.condition = ConditionDocument {
            kind: ConditionKind::KeywordList,
            pattern: None,
            keywords: Some(vec!["ok".into(), String::new()]),
            polarity: Polarity::Included,
        };
        let errs = compile_ruleset(doc(vec![regex_rule("dup", "a"), regex_rule("dup", "("), silent, inert, empty_kw]))
            .unwrap_err();
        let problems: Vec<_> = errs.iter().map(|e| e.problem.clone()).collect();
        assert!(problems.contains(&Problem::DuplicateName { first: 1 }));
        assert!(problems.iter().any(|p| matches!(p, Problem::InvalidRegex(_))));
        assert!(problems.contains(&Problem::SilentBlock));
        assert!(problems.contains(&Problem::NoEffect));
        assert!(problems.contains(&Problem::EmptyKeyword(2)));
        assert_eq!(errs.len(), 5);
    }

    #[test]
    fn duplicate_message_names_both_positions() {
        let errs = compile_ruleset(doc(vec![regex_rule("same", "a"), regex_rule("same", "b")])).unwrap_err();
        let line = errs.to_string();
        assert!(line.contains("rule #2 `same`") && line.contains("rule #1"), "{line}");
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut r = regex_rule("r", "a");
        r.condition.keywords = Some(vec!["a".into()]);
        let errs = compile_ruleset(doc(vec![r])).unwrap_err();
        assert!(matches!(errs.0[0].problem, Problem::ConditionShape { .. }));
        let mut k = regex_rule("k", "a");
        k.condition.kind = ConditionKind::KeywordList;
        assert!(compile_ruleset(doc(vec![k])).is_err());
    }

    #[test]
    fn empty_trigger_and_keyword_list_rejected() {
        let mut r = regex_rule("r", "a");
        r.trigger.events.clear();
        r.condition = ConditionDocument {
            kind: ConditionKind::KeywordList,
            pattern: None,
            keywords: Some(vec![]),
            polarity: Polarity::Missing,
        };
        let problems: Vec<_> = compile_ruleset(doc(vec![r])).unwrap_err().0.into_iter().map(|e| e.problem).collect();
        assert!(problems.contains(&Problem::NoTriggerEvents));
        assert!(problems.contains(&Problem::EmptyKeywordList));
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let text = r#"{"community_id":"c","version":1,"rules":[],"extra":true}"#;
        assert!(matches!(compile_ruleset_json(text), Err(GuidanceError::Parse(_))));
    }

    #[test]
    fn dollar_rewrite_skips_escapes_and_classes() {
        assert_eq!(anchor_dollar_before_final_newline(r"\? *?$"), r"\? *?(?:\n?\z)");
        assert_eq!(anchor_dollar_before_final_newline(r"\$[$]"), r"\$[$]");
        assert_eq!(anchor_dollar_before_final_newline(r"[]$]$"), r"[]$](?:\n?\z)");
        assert_eq!(anchor_dollar_before_final_newline(r"(?m)a$"), r"(?m)a$");
        assert_eq!(anchor_dollar_before_final_newline(r"(?im:a$)"), r"(?im:a$)");
    }
}
