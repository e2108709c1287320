//! Relative effects `e^coef − 1` with Wald intervals and p-values.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Normal quantile used for 95% intervals.
pub const Z_95: f64 = 1.96;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Which coefficient an estimate reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefRole {
    /// Average treatment effect.
    Beta,
    /// Treatment-by-covariate interaction.
    Gamma,
}

impl CoefRole {
    pub fn as_str(self) -> &'static str {
        match self {
            CoefRole::Beta => "beta",
            CoefRole::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub outcome: String,
    pub role: CoefRole,
    pub coef: f64,
    pub std_error: f64,
    /// `e^coef − 1`.
    pub effect: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub z: f64,
    pub p_value: f64,
    pub n_obs: usize,
}

/// Two-sided normal p-value of a Wald statistic, kept inside `(0, 1]`.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0)
}

impl EffectEstimate {
    pub fn new(outcome: impl Into<String>, role: CoefRole, coef: f64, std_error: f64, n_obs: usize) -> Self {
        let z = if std_error > 0.0 {
            coef / std_error
        } else if coef == 0.0 {
            0.0
        } else {
            coef.signum() * f64::INFINITY
        };
        Self {
            outcome: outcome.into(),
            role,
            coef,
            std_error,
            effect: coef.exp_m1(),
            ci_low: (coef - Z_95 * std_error).exp_m1(),
            ci_high: (coef + Z_95 * std_error).exp_m1(),
            z,
            p_value: two_sided_p(z),
            n_obs,
        }
    }

    /// True when the 95% interval excludes no change.
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }

    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }

    /// Whether the interval covers a ratio `e^coef` (not a percentage).
    pub fn covers_ratio(&self, ratio: f64) -> bool {
        let r = ratio - 1.0;
        self.ci_low <= r && r <= self.ci_high
    }

    /// `-5.7%; 95% CI [-7.8%, -3.5%]`.
    pub fn render(&self) -> String {
        format!(
            "{}; 95% CI [{}, {}]",
            format_percent(self.effect),
            format_percent(self.ci_low),
            format_percent(self.ci_high)
        )
    }
}

/// A relative change as a percentage with one decimal; never prints `-0.0%`.
pub fn format_percent(fraction: f64) -> String {
    let rounded = (fraction * 1000.0).round() / 10.0;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:.1}%")
}

/// p-values as printed in effect tables: `<0.001`, otherwise up to three
/// decimals without trailing zeros.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        return "<0.001".into();
    }
    let s = format!("{p:.3}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').map_or_else(|| s.to_string(), |t| format!("{t}.0"))
}
