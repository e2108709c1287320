//! Labeled draft corpora: run a ruleset over many drafts and compare the
//! verdicts with expected actions.

use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{GuidanceError, LogError};
use crate::guidance::{Action, CompiledRuleSet, DraftState, SubmitDecision};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Action>,
}

impl CorpusEntry {
    pub fn new(title: impl Into<String>, body: impl Into<String>, label: Option<Action>) -> Self {
        Self { title: title.into(), body: body.into(), label }
    }
}

/// Reads JSON-Lines corpus entries, skipping blank lines.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusEntry>, LogError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| LogError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusVerdict {
    pub index: usize,
    pub action: Action,
    pub expected: Option<Action>,
    pub decision: SubmitDecision,
}

impl CorpusVerdict {
    pub fn mismatch(&self) -> bool {
        self.expected.is_some_and(|e| e != self.action)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub total: usize,
    pub blocked: usize,
    pub flagged: usize,
    pub messaged: usize,
    pub labeled: usize,
    pub mismatches: usize,
    /// Drafts each rule fired on, in ruleset order.
    pub rule_hits: Vec<(String, usize)>,
}

fn rate(part: usize, total: usize) -> String {
    if total == 0 {
        "0.0%".into()
    } else {
        format!("{:.1}%", part as f64 * 100.0 / total as f64)
    }
}

impl CorpusSummary {
    pub fn block_rate(&self) -> String {
        rate(self.blocked, self.total)
    }

    pub fn flag_rate(&self) -> String {
        rate(self.flagged, self.total)
    }

    pub fn message_rate(&self) -> String {
        rate(self.messaged, self.total)
    }

    pub fn agreement(&self) -> String {
        if self.labeled == 0 {
            "n/a".into()
        } else {
            rate(self.labeled - self.mismatches, self.labeled)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRun {
    pub verdicts: Vec<CorpusVerdict>,
    pub summary: CorpusSummary,
}

/// Submits every entry against `ruleset` (as `community_id`'s drafts).
pub fn evaluate_corpus(ruleset: &CompiledRuleSet, entries: &[CorpusEntry]) -> Result<CorpusRun, GuidanceError> {
    let mut hits = vec![0usize; ruleset.rules().len()];
    let mut verdicts = Vec::with_capacity(entries.len());
    for (index, entry) in entries.iter().enumerate() {
        let draft = DraftState::new(ruleset.community_id(), "corpus", &entry.title, &entry.body);
        let decision = ruleset.attempt_submit(&draft)?;
        for (i, rule) in ruleset.rules().iter().enumerate() {
            if decision.guidance.fired.iter().any(|f| f.rule == rule.name) {
                hits[i] += 1;
            }
        }
        verdicts.push(CorpusVerdict { index, action: Action::of(&decision.guidance), expected: entry.label, decision });
    }
    let summary = CorpusSummary {
        total: verdicts.len(),
        blocked: verdicts.iter().filter(|v| v.decision.guidance.submission_blocked).count(),
        flagged: verdicts.iter().filter(|v| !v.decision.guidance.review_flags.is_empty()).count(),
        messaged: verdicts.iter().filter(|v| !v.decision.guidance.messages.is_empty()).count(),
        labeled: verdicts.iter().filter(|v| v.expected.is_some()).count(),
        mismatches: verdicts.iter().filter(|v| v.mismatch()).count(),
        rule_hits: ruleset.rules().iter().map(|r| r.name.clone()).zip(hits).collect(),
    };
    Ok(CorpusRun { verdicts, summary })
}

impl CorpusRun {
    pub fn passed(&self) -> bool {
        self.summary.mismatches == 0
    }

    /// One line per entry, then the summary.
    pub fn render(&self, entries: &[CorpusEntry]) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let title = entries.get(v.index).map_or("", |e| e.title.as_str());
            let expectation = match v.expected {
                Some(e) if e == v.action => " ok".to_string(),
                Some(e) => format!(" MISMATCH (expected {e})"),
                None => String::new(),
            };
            let _ = writeln!(out, "{:>4}  {:<7} {:?}{}", v.index + 1, v.action.as_str(), title, expectation);
        }
        let s = &self.summary;
        let _ = writeln!(out, "entries: {}", s.total);
        let _ = writeln!(out, "block rate: {}", s.block_rate());
        let _ = writeln!(out, "flag rate: {}", s.flag_rate());
        let _ = writeln!(out, "message rate: {}", s.message_rate());
        for (rule, n) in &s.rule_hits {
            let _ = writeln!(out, "rule hits: {n:>5}  {rule}");
        }
        let _ =
            writeln!(out, "label agreement: {} ({} mismatches of {} labeled)", s.agreement(), s.mismatches, s.labeled);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::catalog::single_rule_document;
    use crate::guidance::compile_ruleset;

    #[test]
    fn empty_corpus_is_all_zero() {
        let rs = compile_ruleset(single_rule_document("ask", "c").unwrap()).unwrap();
        let run = evaluate_corpus(&rs, &[]).unwrap();
        assert_eq!(run.summary.block_rate(), "0.0%");
        assert_eq!(run.summary.rule_hits, vec![("Title must end in a question mark".to_string(), 0)]);
        assert!(run.passed());
    }

    #[test]
    fn labels_parse_from_the_closed_set() {
        let entries =
            read_corpus(&b"{\"title\":\"a?\",\"label\":\"allow\"}\n\n{\"title\":\"b\",\"label\":\"block\"}\n"[..])
                .unwrap();
        assert_eq!(entries.len(), 2);
        assert!(read_corpus(&b"{\"title\":\"a\",\"label\":\"maybe\"}\n"[..]).is_err());
    }
}
