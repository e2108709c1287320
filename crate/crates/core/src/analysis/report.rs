//! Effect reports over outcome records: average effects, interactions and
//! per-community fits, rendered as CSV and as a plain-text table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::effect::{format_p, CoefRole, EffectEstimate};
use super::poisson::{fit_poisson_robust, Design, RegressionFit};
use crate::error::AnalysisError;
use crate::experiment::{Arm, Covariate, Outcome, OutcomeRecord};

/// Minimum users per arm for an average-effect fit.
pub const MIN_USERS_PER_ARM: usize = 2;

fn outcome_vector(records: &[&OutcomeRecord], outcome: Outcome) -> Vec<f64> {
    records.iter().map(|r| r.get(outcome) as f64).collect()
}

fn arm_counts(records: &[&OutcomeRecord]) -> (usize, usize) {
    let treated = records.iter().filter(|r| r.arm.is_treated()).count();
    (records.len() - treated, treated)
}

fn require_both_arms(records: &[&OutcomeRecord]) -> Result<(), AnalysisError> {
    let (control, treated) = arm_counts(records);
    if control < MIN_USERS_PER_ARM || treated < MIN_USERS_PER_ARM {
        return Err(AnalysisError::NotIdentifiable(format!(
            "need at least {MIN_USERS_PER_ARM} users per arm, found {control} control and {treated} treatment"
        )));
    }
    Ok(())
}

fn fit_ate(records: &[&OutcomeRecord], outcome: Outcome) -> Result<(RegressionFit, EffectEstimate), AnalysisError> {
    require_both_arms(records)?;
    let z: Vec<bool> = records.iter().map(|r| r.arm == Arm::Treatment).collect();
    let y = outcome_vector(records, outcome);
    let fit = fit_poisson_robust(&y, &Design::treatment(&z))?;
    let se = fit.std_error(1).expect("robust fit carries covariance");
    let estimate = EffectEstimate::new(outcome.name(), CoefRole::Beta, fit.coefficients[1], se, fit.n_obs);
    Ok((fit, estimate))
}

/// Average treatment effect on one outcome: `log E(Y|Z) = α + β·Z`.
pub fn ate_report(records: &[OutcomeRecord], outcome: Outcome) -> Result<EffectEstimate, AnalysisError> {
    let refs: Vec<&OutcomeRecord> = records.iter().collect();
    fit_ate(&refs, outcome).map(|(_, e)| e)
}

/// The full fit behind [`ate_report`].
pub fn ate_fit(records: &[OutcomeRecord], outcome: Outcome) -> Result<RegressionFit, AnalysisError> {
    let refs: Vec<&OutcomeRecord> = records.iter().collect();
    fit_ate(&refs, outcome).map(|(f, _)| f)
}

/// The full interaction fit: `log E(Y|Z,X) = α + β·Z + η·X + γ·Z·X`.
pub fn interaction_fit(
    records: &[OutcomeRecord],
    outcome: Outcome,
    covariate: Covariate,
) -> Result<RegressionFit, AnalysisError> {
    let z: Vec<bool> = records.iter().map(|r| r.arm == Arm::Treatment).collect();
    let x: Vec<bool> = records.iter().map(|r| r.covariates.get(covariate)).collect();
    let y: Vec<f64> = records.iter().map(|r| r.get(outcome) as f64).collect();
    fit_poisson_robust(&y, &Design::interaction(&z, &x, covariate.name())?)
}

/// How much the treatment's relative effect differs between users with and
/// without `covariate`, reported as `e^γ − 1`.
pub fn interaction_report(
    records: &[OutcomeRecord],
    outcome: Outcome,
    covariate: Covariate,
) -> Result<EffectEstimate, AnalysisError> {
    let fit = interaction_fit(records, outcome, covariate)?;
    let se = fit.std_error(3).expect("robust fit carries covariance");
    Ok(EffectEstimate::new(outcome.name(), CoefRole::Gamma, fit.coefficients[3], se, fit.n_obs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CommunityResult {
    Estimated { estimate: EffectEstimate, significant: bool },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityEffect {
    pub community_id: String,
    pub n_obs: usize,
    #[serde(flatten)]
    pub result: CommunityResult,
}

/// One average-effect fit per community, in community-id order.
/// Communities that cannot be fit are kept as skipped entries.
pub fn per_community_effects(records: &[OutcomeRecord], outcome: Outcome) -> Vec<CommunityEffect> {
    let mut groups: BTreeMap<&str, Vec<&OutcomeRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.community_id.as_str()).or_default().push(r);
    }
    let groups: Vec<(&str, Vec<&OutcomeRecord>)> = groups.into_iter().collect();
    groups
        .into_par_iter()
        .map(|(community, rows)| CommunityEffect {
            community_id: community.to_string(),
            n_obs: rows.len(),
            result: match fit_ate(&rows, outcome) {
                Ok((_, estimate)) => {
                    let significant = estimate.significant();
                    CommunityResult::Estimated { estimate, significant }
                }
                Err(e) => CommunityResult::Skipped { reason: e.to_string() },
            },
        })
        .collect()
}

/// What to estimate: every outcome when `outcome` is absent; the treatment
/// interaction with `covariate` when present.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRequest {
    pub outcome: Option<Outcome>,
    pub covariate: Option<Covariate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub outcome: Outcome,
    pub covariate: Option<Covariate>,
    pub estimate: Result<EffectEstimate, AnalysisError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub n_control: usize,
    pub n_treatment: usize,
}

/// Runs the requested fits. Single-arm or empty data fails as a whole;
/// an outcome that cannot be fit (for example an all-zero cell) is kept
/// as a row carrying its error.
pub fn build_report(records: &[OutcomeRecord], request: &ReportRequest) -> Result<Report, AnalysisError> {
    let refs: Vec<&OutcomeRecord> = records.iter().collect();
    require_both_arms(&refs)?;
    let (n_control, n_treatment) = arm_counts(&refs);
    let outcomes: Vec<Outcome> = match request.outcome {
        Some(o) => vec![o],
        None => Outcome::ALL.to_vec(),
    };
    let rows = outcomes
        .par_iter()
        .map(|&outcome| ReportRow {
            outcome,
            covariate: request.covariate,
            estimate: match request.covariate {
                None => fit_ate(&refs, outcome).map(|(_, e)| e),
                Some(c) => interaction_report(records, outcome, c),
            },
        })
        .collect();
    Ok(Report { rows, n_control, n_treatment })
}

pub const REPORT_CSV_HEADER: &str = "outcome,role,covariate,effect_pct,ci_low_pct,ci_high_pct,p,n,error";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    /// Machine-readable rows; percentages and p-values at full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let covariate = row.covariate.map_or("", |c| c.name());
            let role = if row.covariate.is_some() { CoefRole::Gamma } else { CoefRole::Beta };
            match &row.estimate {
                Ok(e) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},",
                        row.outcome.name(),
                        e.role.as_str(),
                        covariate,
                        e.effect * 100.0,
                        e.ci_low * 100.0,
                        e.ci_high * 100.0,
                        e.p_value,
                        e.n_obs
                    );
                }
                Err(err) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},,,,,{},{}",
                        row.outcome.name(),
                        role.as_str(),
                        covariate,
                        self.n_control + self.n_treatment,
                        csv_field(&err.to_string())
                    );
                }
            }
        }
        out
    }

    /// Plain-text table: row number, outcome, effect with CI, p, hypothesis.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let effect_header = match self.rows.first().and_then(|r| r.covariate) {
            Some(c) => format!("Interaction with {c} (e^γ - 1)"),
            None => "Effect (e^β - 1)".to_string(),
        };
        let _ = writeln!(out, "{:>2}  {:<18} {:<38} {:>7}  H", "#", "Outcome", effect_header, "p");
        for row in &self.rows {
            let (effect, p) = match &row.estimate {
                Ok(e) => (e.render(), format_p(e.p_value)),
                Err(err) => (format!("not estimable: {err}"), "-".to_string()),
            };
            let _ = writeln!(
                out,
                "{:>2}  {:<18} {:<38} {:>7}  {}",
                row.outcome.number(),
                row.outcome.label(),
                effect,
                p,
                row.outcome.hypothesis()
            );
        }
        let _ = writeln!(out, "n = {} control, {} treatment", self.n_control, self.n_treatment);
        out
    }
}

pub const COMMUNITY_CSV_HEADER: &str = "community_id,n,effect_pct,ci_low_pct,ci_high_pct,p,significant,skipped";

/// Per-community results as CSV, one line per community.
pub fn community_effects_csv(effects: &[CommunityEffect]) -> String {
    let mut out = String::from(COMMUNITY_CSV_HEADER);
    out.push('\n');
    for c in effects {
        match &c.result {
            CommunityResult::Estimated { estimate: e, significant } => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},",
                    csv_field(&c.community_id),
                    c.n_obs,
                    e.effect * 100.0,
                    e.ci_low * 100.0,
                    e.ci_high * 100.0,
                    e.p_value,
                    significant
                );
            }
            CommunityResult::Skipped { reason } => {
                let _ = writeln!(out, "{},{},,,,,,{}", csv_field(&c.community_id), c.n_obs, csv_field(reason));
            }
        }
    }
    out
}

/// Per-community results as a text table.
pub fn community_effects_table(outcome: Outcome, effects: &[CommunityEffect]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Per-community effects on {}", outcome.label());
    let _ = writeln!(out, "{:<12} {:>7}  {:<38} {:>7}  sig.", "Community", "n", "Effect (e^β - 1)", "p");
    for c in effects {
        match &c.result {
            CommunityResult::Estimated { estimate: e, significant } => {
                let _ = writeln!(
                    out,
                    "{:<12} {:>7}  {:<38} {:>7}  {}",
                    c.community_id,
                    c.n_obs,
                    e.render(),
                    format_p(e.p_value),
                    if *significant { "*" } else { "" }
                );
            }
            CommunityResult::Skipped { reason } => {
                let _ = writeln!(out, "{:<12} {:>7}  skipped: {}", c.community_id, c.n_obs, reason);
            }
        }
    }
    out
}
