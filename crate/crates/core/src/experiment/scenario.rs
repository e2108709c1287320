//! A ready-made simulation setup built from the reference rules, plus
//! calibration of treatment multipliers to target effect sizes.

use super::config::{
    Baseline, CommunityTemplate, DraftCorpus, DraftText, Multipliers, RulesetSource, SimConfig, Strata, TreatmentConfig,
};
use super::outcomes::{Covariate, Outcome};
use super::sim::PreparedSim;
use super::truth::true_ratios;
use crate::error::SimError;
use crate::guidance::catalog::document_with;
use crate::guidance::{
    ConditionDocument, ConditionKind, Intervention, Polarity, RuleDocument, Scope, Trigger, TriggerEvent,
};

fn drafts(items: &[(&str, &str)]) -> Vec<DraftText> {
    items.iter().map(|(t, b)| DraftText::new(*t, *b)).collect()
}

const ORDINARY_BODY: &str =
    "I have been thinking about this for a while and wanted to hear what everyone else makes of it. \
Any perspective is welcome, especially from people who have dealt with something similar before.";

fn long_body() -> String {
    "This is a very detailed write-up. ".repeat(40)
}

/// Rule-breaking drafts that no compose-time rule detects: off-topic posts,
/// self-promotion, low-effort bait. Only reactive moderation catches these.
fn undetected(with_question_mark: bool) -> Vec<DraftText> {
    let mark = if with_question_mark { "?" } else { "" };
    vec![
        DraftText::new(format!("Anyone want to buy my old phone cheap{mark}"), ORDINARY_BODY),
        DraftText::new(format!("Follow my channel for daily content{mark}"), ORDINARY_BODY),
        DraftText::new(format!("Unpopular opinion about a completely unrelated topic{mark}"), ORDINARY_BODY),
        DraftText::new(format!("Repost of the most upvoted thread from last week{mark}"), ORDINARY_BODY),
        DraftText::new(format!("Rate my lunch, it is not related to this forum{mark}"), ORDINARY_BODY),
        DraftText::new(format!("Upvote this if you agree with me{mark}"), ORDINARY_BODY),
    ]
}

fn with_undetected(mut caught: Vec<DraftText>, with_question_mark: bool) -> Vec<DraftText> {
    caught.extend(undetected(with_question_mark));
    caught
}

fn giveaway_flag_rule() -> RuleDocument {
    RuleDocument {
        name: "Flag giveaways".into(),
        condition: ConditionDocument {
            kind: ConditionKind::KeywordList,
            pattern: None,
            keywords: Some(vec!["giveaway".into(), "free gift".into()]),
            polarity: Polarity::Included,
        },
        trigger: Trigger { scope: Scope::TitleOrBody, events: vec![TriggerEvent::OnSubmit] },
        intervention: Intervention { message: None, block_submission: false, flag_for_review: true },
        enabled: true,
    }
}

/// Four community archetypes: a question-only forum, a link-averse forum
/// with a length floor, a forum that discourages tech support, and a
/// long-form forum with a length ceiling. Their rule counts and pre-period
/// filter activity cover every combination of the two community covariates.
pub fn reference_templates() -> Vec<CommunityTemplate> {
    let ask = CommunityTemplate {
        weight: 1.5,
        ruleset: Some(RulesetSource::Inline(document_with(&["ask"], "template"))),
        drafts: DraftCorpus {
            breaking: with_undetected(
                drafts(&[
                    ("What is your favorite book", ""),
                    ("Tell me the best movie you have seen this year", ""),
                    ("Share your worst travel story", ""),
                ]),
                true,
            ),
            clean: drafts(&[
                ("What is your favorite book?", ""),
                ("Which city surprised you the most?", ""),
                ("What would you tell your younger self? ", ""),
                ("Why do cats knock things off tables?", "Genuinely curious."),
            ]),
        },
        rules_created: Some(12),
        pre_posts: 2000,
        automod_touched: 240,
        treatment: None,
    };

    let mut links_doc = document_with(&["char_min", "no_urls"], "template");
    links_doc.rules.push(giveaway_flag_rule());
    let links = CommunityTemplate {
        weight: 1.0,
        ruleset: Some(RulesetSource::Inline(links_doc)),
        drafts: DraftCorpus {
            breaking: with_undetected(
                drafts(&[
                    ("Look at https://example.com/deal today", ORDINARY_BODY),
                    ("lol", "same"),
                    ("Check out this giveaway", "ok"),
                ]),
                false,
            ),
            clean: drafts(&[
                ("A long discussion about city planning choices", ORDINARY_BODY),
                ("My experience switching careers at forty", ORDINARY_BODY),
                ("Weekly giveaway thread for community members", ORDINARY_BODY),
            ]),
        },
        rules_created: Some(4),
        pre_posts: 1500,
        automod_touched: 45,
        treatment: None,
    };

    let support = CommunityTemplate {
        weight: 1.0,
        ruleset: Some(RulesetSource::Inline(document_with(&["tech_support", "held_for_review"], "template"))),
        drafts: DraftCorpus {
            breaking: with_undetected(
                drafts(&[
                    ("Controller won't connect after update", "It keeps blinking."),
                    ("Help, my console is frozen", "Stuck on the logo screen."),
                    ("Lag in every online match", "Started yesterday."),
                ]),
                false,
            ),
            clean: drafts(&[
                ("Screenshots from my trip through the northern map", "Short caption."),
                ("Our squad finally finished the raid", "Took four evenings."),
                ("Fan art of the new character", ORDINARY_BODY),
            ]),
        },
        rules_created: Some(9),
        pre_posts: 3000,
        automod_touched: 150,
        treatment: None,
    };

    let longform = CommunityTemplate {
        weight: 0.8,
        ruleset: Some(RulesetSource::Inline(document_with(&["char_max", "welcome"], "template"))),
        drafts: DraftCorpus {
            breaking: with_undetected(
                vec![
                    DraftText::new("A very long essay on everything", long_body()),
                    DraftText::new("Full transcript of the meeting", long_body() + "And one more line."),
                ],
                false,
            ),
            clean: drafts(&[
                ("A concise summary of the proposal", ORDINARY_BODY),
                ("Notes from the reading group", ORDINARY_BODY),
            ]),
        },
        rules_created: Some(3),
        pre_posts: 800,
        automod_touched: 90,
        treatment: None,
    };

    vec![ask, links, support, longform]
}

/// The reference setup with no treatment effect beyond guidance itself.
pub fn reference_config(n_users: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_users,
        n_communities: 33,
        enrollment_days: 35,
        follow_up_days: 28,
        weekend_dip: 0.0,
        salt: format!("reference-{seed}"),
        p_treat: 0.5,
        seed,
        baseline: Baseline::default(),
        treatment: TreatmentConfig::default(),
        guidance_in_control: false,
        communities: reference_templates(),
    }
}

/// Guidance off in both arms and every multiplier neutral: no effect anywhere.
pub fn null_config(n_users: usize, seed: u64) -> SimConfig {
    let mut config = reference_config(n_users, seed);
    config.treatment = TreatmentConfig { guidance: false, multipliers: Multipliers::NEUTRAL, strata: None };
    config
}

/// Effect sizes the recovery scenario targets: relative change on the ratio
/// scale for posts submitted, automod removals and reports.
pub const RECOVERY_TARGETS: [(Outcome, f64); 3] =
    [(Outcome::PostsSubmitted, 0.87), (Outcome::AutomodRemovals, 0.65), (Outcome::NumReports, 0.906)];

/// Guidance on for treated users, with multipliers calibrated so the
/// overall treatment ratios hit [`RECOVERY_TARGETS`] exactly.
pub fn recovery_config(n_users: usize, seed: u64) -> Result<SimConfig, SimError> {
    let mut config = reference_config(n_users, seed);
    calibrate(&mut config, &RECOVERY_TARGETS)?;
    Ok(config)
}

/// Treated newcomers and non-newcomers get different automod multipliers.
pub fn heterogeneity_config(n_users: usize, seed: u64, newcomer: f64, others: f64) -> SimConfig {
    let mut config = reference_config(n_users, seed);
    config.treatment.multipliers = Multipliers { automod_removal: others, ..Multipliers::NEUTRAL };
    config.treatment.strata = Some(Strata {
        covariate: Covariate::Newcomer,
        multipliers: Multipliers { automod_removal: newcomer, ..Multipliers::NEUTRAL },
    });
    config
}

fn multiplier_for(m: &mut Multipliers, outcome: Outcome) -> Result<&mut f64, SimError> {
    Ok(match outcome {
        Outcome::PostStarts => &mut m.start,
        Outcome::PostsSubmitted => &mut m.submit,
        Outcome::AutomodRemovals => &mut m.automod_removal,
        Outcome::ModRemovals => &mut m.mod_removal,
        Outcome::AdminRemovals => &mut m.admin_removal,
        Outcome::NumReports => &mut m.report,
        Outcome::ReceivedComments => &mut m.comment,
        Outcome::ReceivedViews => &mut m.view,
        Outcome::ReceivedUpvotes => &mut m.upvote,
        Outcome::DaysContributing => &mut m.contribution_day,
        Outcome::DaysVoting => &mut m.voting_day,
        Outcome::DaysActive => &mut m.active_day,
        Outcome::PostsNonRemoved => {
            return Err(SimError::InvalidConfig("posts_non_removed has no multiplier of its own".into()))
        }
    })
}

/// Sets global treatment multipliers so the expected treatment ratio of
/// each listed outcome equals its target. Each outcome's expectation is
/// linear in its own multiplier, and targets are solved in order, so list
/// upstream stages (submission) before downstream ones (removals, reports).
pub fn calibrate(config: &mut SimConfig, targets: &[(Outcome, f64)]) -> Result<(), SimError> {
    for &(outcome, target) in targets {
        let current = true_ratios(&PreparedSim::new(config)?)[outcome.index()];
        if !(current.is_finite() && current > 0.0) {
            return Err(SimError::InvalidConfig(format!("{outcome} has no treatment ratio to calibrate")));
        }
        *multiplier_for(&mut config.treatment.multipliers, outcome)? *= target / current;
    }
    config.validate()
}
