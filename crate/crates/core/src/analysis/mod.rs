//! Poisson-regression effect estimation with robust standard errors.
//!
//! The average effect model is `log E(Y|Z) = α + β·Z`; heterogeneity adds a
//! covariate `X` and its interaction, `log E(Y|Z,X) = α + β·Z + η·X + γ·Z·X`.
//! Effects are reported on the ratio scale, `e^coef − 1`.

mod effect;
mod poisson;
mod report;

pub use effect::{format_p, format_percent, two_sided_p, CoefRole, EffectEstimate, SIGNIFICANCE_LEVEL, Z_95};
pub use poisson::{
    fit_poisson, fit_poisson_robust, hc0_covariance, Design, RegressionFit, MAX_ITERATIONS, STEP_TOLERANCE,
};
pub use report::{
    ate_fit, ate_report, build_report, community_effects_csv, community_effects_table, interaction_fit,
    interaction_report, per_community_effects, CommunityEffect, CommunityResult, Report, ReportRequest, ReportRow,
    COMMUNITY_CSV_HEADER, MIN_USERS_PER_ARM, REPORT_CSV_HEADER,
};
