//! Compose-time guidance rules: the ⟨intervention, condition, trigger⟩
//! triplet, its document format, compilation and evaluation.
//!
//! Conditions run on a linear-time regex dialect (no backreferences or
//! lookaround). `$` matches at end of text and before a final newline, `.`
//! excludes newline, `\s` includes it, and quantifier counts are in Unicode
//! scalar values.

pub mod catalog;
mod compile;
mod document;
mod eval;

pub use compile::{
    compile_condition, compile_ruleset, compile_ruleset_json, CompiledCondition, CompiledRule, CompiledRuleSet,
    Problem, ValidationError, ValidationErrors,
};
pub use document::{
    ConditionDocument, ConditionKind, Intervention, Polarity, RuleDocument, RuleSetDocument, Scope, Trigger,
    TriggerEvent,
};
pub use eval::{
    attempt_submit, evaluate_draft, Action, DraftState, FiredRule, GuidanceResult, PostPart, SubmitDecision,
};

/// Raw match presence of a compiled condition, before polarity.
pub fn condition_matches(condition: &CompiledCondition, text: &str) -> bool {
    condition.matches(text)
}
