//! The seven reference rules: shipped documents, labeled corpora and the
//! documented matching behavior.

use std::fs;
use std::path::PathBuf;

use guidance_core::corpus::{evaluate_corpus, read_corpus};
use guidance_core::guidance::catalog::{reference_rules, HELD_FOR_REVIEW_MESSAGE, QUESTION_MARK_MESSAGE};
use guidance_core::guidance::{
    attempt_submit, compile_ruleset, compile_ruleset_json, condition_matches, evaluate_draft, Action, DraftState,
    RuleSetDocument, TriggerEvent,
};

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples/appendix_b").join(name)
}

fn load(slug: &str) -> guidance_core::CompiledRuleSet {
    compile_ruleset_json(&fs::read_to_string(shipped(&format!("{slug}.json"))).unwrap()).unwrap()
}

fn draft(title: &str, body: &str) -> DraftState {
    DraftState::new("appendix_b", "u1", title, body)
}

#[test]
fn shipped_documents_match_the_catalog() {
    let catalog = reference_rules();
    assert_eq!(catalog.len(), 7);
    let mut all = Vec::new();
    for entry in &catalog {
        let doc =
            RuleSetDocument::from_json(&fs::read_to_string(shipped(&format!("{}.json", entry.slug))).unwrap()).unwrap();
        assert_eq!(doc.rules, vec![entry.rule.clone()], "{}", entry.slug);
        all.push(entry.rule.clone());
    }
    let combined = RuleSetDocument::from_json(&fs::read_to_string(shipped("all.json")).unwrap()).unwrap();
    assert_eq!(combined.rules, all);
    assert_eq!(compile_ruleset(combined).unwrap().rules().len(), 7);
}

#[test]
fn labeled_corpora_agree_fully() {
    for entry in reference_rules() {
        let rs = load(entry.slug);
        let text = fs::read_to_string(shipped(&format!("{}.corpus.jsonl", entry.slug))).unwrap();
        let corpus = read_corpus(text.as_bytes()).unwrap();
        assert!(corpus.len() >= 5, "{} corpus too small", entry.slug);
        assert!(corpus.iter().all(|e| e.label.is_some()));
        let run = evaluate_corpus(&rs, &corpus).unwrap();
        assert!(run.passed(), "{}:\n{}", entry.slug, run.render(&corpus));
    }
}

#[test]
fn corpora_exercise_each_rule_both_ways() {
    for entry in reference_rules() {
        let text = fs::read_to_string(shipped(&format!("{}.corpus.jsonl", entry.slug))).unwrap();
        let labels: Vec<Action> = read_corpus(text.as_bytes()).unwrap().into_iter().filter_map(|e| e.label).collect();
        assert!(labels.contains(&Action::Allow), "{}", entry.slug);
        assert!(labels.iter().any(|l| *l != Action::Allow), "{}", entry.slug);
    }
}

#[test]
fn question_mark_rule() {
    let rs = load("ask");
    assert_eq!(rs.rules().len(), 1);
    let cond = &rs.rules()[0].condition;
    assert!(!condition_matches(cond, "Why is the sky blue"));
    assert!(condition_matches(cond, "Why is the sky blue?"));

    let result = evaluate_draft(&rs, &draft("What is your favorite book", ""), TriggerEvent::OnSubmit).unwrap();
    assert_eq!(result.fired.len(), 1);
    assert_eq!(result.fired[0].rule, "Title must end in a question mark");
    assert!(result.submission_blocked);
    assert_eq!(result.messages, vec![QUESTION_MARK_MESSAGE.to_string()]);
    assert!(result.messages[0].starts_with("Your post title must be in form of a question"));
}

#[test]
fn url_rule() {
    let rs = load("no_urls");
    assert!(condition_matches(&rs.rules()[0].condition, "check www.example.com please"));
    let decision = attempt_submit(&rs, &draft("see https://a.b now", "")).unwrap();
    assert!(!decision.accepted);
    assert_eq!(decision.guidance.messages, vec!["You cannot include a URL in the title.".to_string()]);
}

#[test]
fn keyword_rule_folds_case() {
    let rs = load("tech_support");
    assert!(condition_matches(&rs.rules()[0].condition, "how do i repair this"));
    let decision = attempt_submit(&rs, &draft("how do i repair this", "")).unwrap();
    assert!(decision.accepted);
    assert_eq!(Action::of(&decision.guidance), Action::Message);
}

#[test]
fn welcome_rule_matches_only_empty_titles() {
    let rs = load("welcome");
    let cond = &rs.rules()[0].condition;
    assert!(condition_matches(cond, ""));
    assert!(!condition_matches(cond, "x"));
    let result = evaluate_draft(&rs, &draft("", ""), TriggerEvent::OnEdit).unwrap();
    assert_eq!(result.messages, vec!["Welcome to /r/<anonymized>.".to_string()]);
    assert!(!result.submission_blocked);
}

#[test]
fn minimum_length_rule_passes_long_bodies() {
    let rs = load("char_min");
    let body = "this is a much longer body exceeding twenty five characters";
    assert_eq!(body.chars().count(), 59);
    let pattern = regex::Regex::new(r"^(.|\s){1,25}$").unwrap();
    assert!(!pattern.is_match(body));
    let title = "A title that is long enough to pass";
    let result = evaluate_draft(&rs, &draft(title, body), TriggerEvent::OnEdit).unwrap();
    assert!(result.fired.is_empty());
    assert!(!result.submission_blocked);
}

#[test]
fn minimum_length_counts_characters_not_bytes() {
    let rs = load("char_min");
    let title = "é".repeat(25);
    assert!(title.len() > 25);
    assert!(attempt_submit(&rs, &draft(&title, "")).unwrap().guidance.submission_blocked);
    let title = "é".repeat(26);
    assert!(!attempt_submit(&rs, &draft(&title, "")).unwrap().guidance.submission_blocked);
}

#[test]
fn held_for_review_notice_follows_missing_polarity() {
    let rs = load("held_for_review");
    // A single-line body of 1 to 100 characters matches the pattern, and the
    // rule fires on its absence, so such bodies get no notice.
    let quiet = attempt_submit(&rs, &draft("t", &"x".repeat(50))).unwrap();
    assert!(quiet.accepted);
    assert!(quiet.guidance.fired.is_empty());

    for body in ["x".repeat(150), "first line\nsecond line".to_string(), String::new()] {
        let noisy = attempt_submit(&rs, &draft("t", &body)).unwrap();
        assert!(noisy.accepted);
        assert!(!noisy.guidance.fired.is_empty());
        assert_eq!(noisy.guidance.messages, vec![HELD_FOR_REVIEW_MESSAGE.to_string()]);
        assert!(noisy.guidance.messages[0].contains("held for review"));
    }
}

#[test]
fn maximum_length_rule() {
    let rs = load("char_max");
    assert!(attempt_submit(&rs, &draft("t", &"a".repeat(1000))).unwrap().accepted);
    assert!(!attempt_submit(&rs, &draft("t", &"a".repeat(1001))).unwrap().accepted);
}

#[test]
fn malformed_regex_names_the_rule() {
    let mut doc = RuleSetDocument::from_json(&fs::read_to_string(shipped("ask.json")).unwrap()).unwrap();
    doc.rules[0].condition.pattern = Some("([a-z".into());
    let err = compile_ruleset(doc).unwrap_err();
    let text = err.to_string();
    assert!(text.contains("Title must end in a question mark"), "{text}");
    assert!(text.contains("unclosed"), "{text}");
}

#[test]
fn golden_suite_is_fast() {
    let start = std::time::Instant::now();
    for entry in reference_rules() {
        let rs = load(entry.slug);
        let text = fs::read_to_string(shipped(&format!("{}.corpus.jsonl", entry.slug))).unwrap();
        evaluate_corpus(&rs, &read_corpus(text.as_bytes()).unwrap()).unwrap();
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}
