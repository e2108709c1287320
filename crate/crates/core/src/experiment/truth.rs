//! Exact expected outcomes implied by a simulation config.
//!
//! The simulator's draws are independent given the per-user latent
//! variables, so every outcome mean has a closed form. These expectations
//! are the ground truth that effect estimates are checked against.

use super::assign::Arm;
use super::config::Multipliers;
use super::outcomes::{Covariate, Covariates, Outcome};
use super::sim::{DraftVerdict, PreparedSim};

/// Probabilities that one composer opening ends as each kind of submitted post.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct PostMix {
    clean: f64,
    visible: f64,
    evasive: f64,
}

fn average_fates(prepared: &PreparedSim, verdicts: &[DraftVerdict], breaking: bool, guidance: bool) -> PostMix {
    let b = &prepared.config.baseline;
    if verdicts.is_empty() {
        return PostMix::default();
    }
    let mut mix = PostMix::default();
    for v in verdicts {
        if !guidance {
            if breaking {
                mix.visible += 1.0;
            } else {
                mix.clean += 1.0;
            }
        } else if v.blocked {
            if breaking {
                mix.clean += b.p_repair_when_blocked;
                mix.evasive += 1.0 - b.p_abandon_when_blocked - b.p_repair_when_blocked;
            } else {
                mix.clean += 1.0 - b.p_abandon_when_blocked;
            }
        } else if breaking && v.warned {
            mix.clean += b.p_repair_when_warned;
            mix.visible += 1.0 - b.p_repair_when_warned;
        } else if breaking {
            mix.visible += 1.0;
        } else {
            mix.clean += 1.0;
        }
    }
    let n = verdicts.len() as f64;
    PostMix { clean: mix.clean / n, visible: mix.visible / n, evasive: mix.evasive / n }
}

/// Expected value of each of the thirteen outcomes for one user of the
/// given arm, community and individual covariates.
pub fn expected_outcomes(
    prepared: &PreparedSim,
    arm: Arm,
    community: usize,
    newcomer: bool,
    low_activity: bool,
) -> [f64; 13] {
    let config = &prepared.config;
    let b = &config.baseline;
    let covariates = prepared.covariates_of(community, newcomer, low_activity);
    let m: Multipliers = prepared.multipliers(arm, community, &covariates);
    let template = prepared.template_of(community);
    let guidance = prepared.guidance_active(arm);

    let mean_beta = b.activity_beta[0] / (b.activity_beta[0] + b.activity_beta[1]);
    let active_days = 1.0 + (config.follow_up_days as f64 - 1.0) * b.p_active_day * mean_beta * m.active_day;
    let scale = if newcomer { b.newcomer_start_scale } else { 1.0 }
        * if low_activity { b.low_activity_start_scale } else { 1.0 };
    let starts = 1.0 + active_days * b.starts_per_active_day * scale * m.start;

    let p_break = b.p_rule_breaking * m.rule_breaking;
    let q = b.p_submit_given_start * m.submit;
    let from_breaking = average_fates(prepared, &template.breaking, true, guidance);
    let from_clean = average_fates(prepared, &template.clean, false, guidance);
    let per_start = PostMix {
        clean: q * (p_break * from_breaking.clean + (1.0 - p_break) * from_clean.clean),
        visible: q * (p_break * from_breaking.visible + (1.0 - p_break) * from_clean.visible),
        evasive: q * (p_break * from_breaking.evasive + (1.0 - p_break) * from_clean.evasive),
    };

    let a = b.p_automod_removal_given_breaking * m.automod_removal;
    let md = b.p_mod_removal_given_breaking * m.mod_removal;
    let ad = b.p_admin_removal * m.admin_removal;
    let submitted = per_start.clean + per_start.visible + per_start.evasive;
    let automod = a * per_start.visible;
    let moderator = md * ((1.0 - a) * per_start.visible + per_start.evasive);
    let admin = ad * (per_start.clean + (1.0 - a) * (1.0 - md) * per_start.visible + (1.0 - md) * per_start.evasive);
    let surviving = submitted - automod - moderator - admin;
    let reports = b.reports_per_post
        * m.report
        * (per_start.clean + b.reports_breaking_factor * (per_start.visible + per_start.evasive));

    let mut out = [0.0; 13];
    let mut set = |o: Outcome, v: f64| out[o.index()] = v;
    set(Outcome::PostStarts, starts);
    set(Outcome::PostsSubmitted, starts * submitted);
    set(Outcome::PostsNonRemoved, starts * surviving);
    set(Outcome::AutomodRemovals, starts * automod);
    set(Outcome::ModRemovals, starts * moderator);
    set(Outcome::AdminRemovals, starts * admin);
    set(Outcome::NumReports, starts * reports);
    set(Outcome::ReceivedComments, starts * surviving * b.comments_per_post * m.comment);
    set(Outcome::ReceivedViews, starts * surviving * b.views_per_post * m.view);
    set(Outcome::ReceivedUpvotes, starts * surviving * b.upvotes_per_post * m.upvote);
    set(Outcome::DaysContributing, active_days * b.p_contribution_day * m.contribution_day);
    set(Outcome::DaysVoting, active_days * b.p_voting_day * m.voting_day);
    set(Outcome::DaysActive, active_days);
    out
}

/// Population-averaged expectations for one arm over the users matching
/// `filter`, weighting communities and covariate cells by their draw
/// probabilities. Returns `None` when no user can match.
pub fn expected_means(prepared: &PreparedSim, arm: Arm, filter: impl Fn(&Covariates) -> bool) -> Option<[f64; 13]> {
    let b = &prepared.config.baseline;
    let total_weight: f64 = prepared.communities.iter().map(|c| c.2).sum();
    let mut sum = [0.0; 13];
    let mut mass = 0.0;
    for (ci, (_, _, w)) in prepared.communities.iter().enumerate() {
        for newcomer in [false, true] {
            for low in [false, true] {
                let p = w / total_weight
                    * if newcomer { b.p_newcomer } else { 1.0 - b.p_newcomer }
                    * if low { b.p_low_activity } else { 1.0 - b.p_low_activity };
                if p == 0.0 || !filter(&prepared.covariates_of(ci, newcomer, low)) {
                    continue;
                }
                let e = expected_outcomes(prepared, arm, ci, newcomer, low);
                for (s, v) in sum.iter_mut().zip(e) {
                    *s += p * v;
                }
                mass += p;
            }
        }
    }
    (mass > 0.0).then(|| sum.map(|s| s / mass))
}

/// Treatment-to-control ratio of expected outcomes, i.e. the true `e^β`.
pub fn true_ratios(prepared: &PreparedSim) -> [f64; 13] {
    let t = expected_means(prepared, Arm::Treatment, |_| true).expect("population is non-empty");
    let c = expected_means(prepared, Arm::Control, |_| true).expect("population is non-empty");
    std::array::from_fn(|i| t[i] / c[i])
}

/// True ratio of treatment ratios between users with and without the
/// covariate, i.e. the true `e^γ`. `None` if a stratum is empty.
pub fn true_interaction_ratios(prepared: &PreparedSim, covariate: Covariate) -> Option<[f64; 13]> {
    let ratio = |with: bool| -> Option<[f64; 13]> {
        let t = expected_means(prepared, Arm::Treatment, |c| c.get(covariate) == with)?;
        let c = expected_means(prepared, Arm::Control, |c| c.get(covariate) == with)?;
        Some(std::array::from_fn(|i| t[i] / c[i]))
    };
    let (on, off) = (ratio(true)?, ratio(false)?);
    Some(std::array::from_fn(|i| on[i] / off[i]))
}

/// True treatment ratio within one community.
pub fn true_community_ratios(prepared: &PreparedSim, community: usize) -> [f64; 13] {
    let b = &prepared.config.baseline;
    let mean = |arm: Arm| -> [f64; 13] {
        let mut sum = [0.0; 13];
        for newcomer in [false, true] {
            for low in [false, true] {
                let p = if newcomer { b.p_newcomer } else { 1.0 - b.p_newcomer }
                    * if low { b.p_low_activity } else { 1.0 - b.p_low_activity };
                for (s, v) in sum.iter_mut().zip(expected_outcomes(prepared, arm, community, newcomer, low)) {
                    *s += p * v;
                }
            }
        }
        sum
    };
    let (t, c) = (mean(Arm::Treatment), mean(Arm::Control));
    std::array::from_fn(|i| t[i] / c[i])
}

/// Outcomes whose true ratio is exactly one.
pub fn null_outcomes(ratios: &[f64; 13]) -> Vec<Outcome> {
    Outcome::ALL.into_iter().filter(|o| (ratios[o.index()] - 1.0).abs() < 1e-12).collect()
}
