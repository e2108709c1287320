//! Post-creation funnel: starts → submitted → non-removed, with the share
//! of posts lost at each step.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::assign::Arm;
use super::outcomes::{Outcome, OutcomeRecord};
use crate::error::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelCounts {
    pub starts: u64,
    pub submitted: u64,
    pub non_removed: u64,
    pub users: u64,
}

impl FunnelCounts {
    pub fn new(starts: u64, submitted: u64, non_removed: u64) -> Self {
        Self { starts, submitted, non_removed, users: 0 }
    }

    fn steps(&self) -> [u64; 3] {
        [self.starts, self.submitted, self.non_removed]
    }

    /// Fraction lost on each of the two transitions; `None` where the
    /// earlier step is zero.
    pub fn losses(&self) -> [Option<f64>; 2] {
        let s = self.steps();
        [loss(s[0], s[1]), loss(s[1], s[2])]
    }
}

fn loss(from: u64, to: u64) -> Option<f64> {
    (from > 0).then(|| (from as f64 - to as f64) / from as f64)
}

/// Formats a fraction as a percentage with one decimal, e.g. `37.4%`.
pub fn format_loss(loss: Option<f64>) -> String {
    match loss {
        Some(l) => format!("{:.1}%", l * 100.0),
        None => "n/a".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelTable {
    pub control: FunnelCounts,
    pub treatment: FunnelCounts,
}

/// Sums each arm's funnel over the records.
pub fn funnel_stats(records: &[OutcomeRecord]) -> Result<FunnelTable, AnalysisError> {
    let mut table = FunnelTable { control: FunnelCounts::new(0, 0, 0), treatment: FunnelCounts::new(0, 0, 0) };
    for r in records {
        let arm = match r.arm {
            Arm::Control => &mut table.control,
            Arm::Treatment => &mut table.treatment,
        };
        arm.starts += r.get(Outcome::PostStarts);
        arm.submitted += r.get(Outcome::PostsSubmitted);
        arm.non_removed += r.get(Outcome::PostsNonRemoved);
        arm.users += 1;
    }
    for (arm, counts) in [(Arm::Control, &table.control), (Arm::Treatment, &table.treatment)] {
        if counts.users == 0 {
            return Err(AnalysisError::NotIdentifiable(format!("no {arm} records for the funnel")));
        }
    }
    Ok(table)
}

impl FunnelTable {
    /// Plain-text table: counts and %Δ per step for both arms.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let c = self.control.steps();
        let t = self.treatment.steps();
        let cl = self.control.losses();
        let tl = self.treatment.losses();
        let _ = writeln!(out, "{:<14}{:>10}{:>9}{:>12}{:>9}", "", "Control", "", "Treatment", "");
        let _ = writeln!(out, "{:<14}{:>10}{:>9}{:>12}{:>9}", "Posts (...)", "#", "%Δ", "#", "%Δ");
        for (i, step) in ["starts", "submitted", "non-removed"].iter().enumerate() {
            let (dc, dt) = if i == 0 {
                ("-".to_string(), "-".to_string())
            } else {
                (format_loss(cl[i - 1]), format_loss(tl[i - 1]))
            };
            let _ = writeln!(out, "{:<14}{:>10}{:>9}{:>12}{:>9}", step, c[i], dc, t[i], dt);
        }
        let _ = writeln!(
            out,
            "{:<14}{:>10}{:>9}{:>12}{:>9}",
            "Total users", self.control.users, "", self.treatment.users, ""
        );
        out
    }
}
