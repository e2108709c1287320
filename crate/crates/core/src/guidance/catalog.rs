//! Reference rules covering each kind of rule communities wrote: length
//! limits, required punctuation, URL and keyword exclusion, and purely
//! informational messages.

use super::document::{
    ConditionDocument, ConditionKind, Intervention, Polarity, RuleDocument, RuleSetDocument, Scope, Trigger,
    TriggerEvent,
};

/// A reference rule with the file stem it ships under.
#[derive(Debug, Clone)]
pub struct CatalogRule {
    pub slug: &'static str,
    pub rule: RuleDocument,
}

fn regex(pattern: &str, polarity: Polarity) -> ConditionDocument {
    ConditionDocument { kind: ConditionKind::RegexPattern, pattern: Some(pattern.into()), keywords: None, polarity }
}

fn on_any_change(scope: Scope) -> Trigger {
    Trigger { scope, events: vec![TriggerEvent::OnEdit, TriggerEvent::OnSubmit] }
}

fn block(message: &str) -> Intervention {
    Intervention { message: Some(message.into()), block_submission: true, flag_for_review: false }
}

fn message_only(message: &str) -> Intervention {
    Intervention { message: Some(message.into()), block_submission: false, flag_for_review: false }
}

pub const TECH_SUPPORT_KEYWORDS: &[&str] = &[
    "Help",
    "Broken",
    "Fix",
    "Solution",
    "How do I",
    "What do I",
    "Can't connect",
    "Won't connect",
    "Issues",
    "Problem",
    "Faulty",
    "Unable to",
    "Can't sign in",
    "Won't install",
    "Connection issues",
    "Power cycle",
    "Power cycling",
    "Won't sync",
    "Can't sync",
    "Error",
    "What's wrong",
    "Disconnect",
    "Disconnecting",
    "Disconnection",
    "Lag",
    "Lagging",
    "Artifacts",
    "Transfer",
    "Sign in",
    "Account",
    "Disable",
    "Not working",
    "Won't work",
    "Stuck",
    "Installing",
    "Frozen",
    "Freezes",
    "Glitched",
    "Bugged",
    "Bug",
    "Wi-Fi",
    "Wifi",
    "Internet speed",
    "Slow downloads",
    "Slow download",
    "How to",
    "Issue",
    "Doesn't work",
    "Is it possible",
    "Troubleshooting",
    "Troubleshoot",
    "Remote play quality",
    "Remote play image",
    "Image quality issues",
];

pub const QUESTION_MARK_MESSAGE: &str =
    "Your post title must be in form of a question. Please ensure your title ends with a question mark to continue.";
pub const HELD_FOR_REVIEW_MESSAGE: &str =
    "Please note: New users & those who haven't subscribed to the subreddit, will have their posts held for review.";
pub const URL_MESSAGE: &str = "You cannot include a URL in the title.";
pub const TECH_SUPPORT_MESSAGE: &str =
    "Tech support posts are not allowed here. Please use the pinned support thread instead.";

/// The seven reference rules, in catalog order.
pub fn reference_rules() -> Vec<CatalogRule> {
    vec![
        CatalogRule {
            slug: "char_min",
            rule: RuleDocument {
                name: "Character Limit -- 25 Character Minimum".into(),
                condition: regex(r"^(.|\s){1,25}$", Polarity::Included),
                trigger: on_any_change(Scope::TitleOrBody),
                intervention: block(
                    "Your post doesn't meet our minimum character requirement. Please compose a more descriptive post in order to continue.",
                ),
                enabled: true,
            },
        },
        CatalogRule {
            slug: "char_max",
            rule: RuleDocument {
                name: "Character Limit -- 1000 Character Maximum".into(),
                condition: regex(r"^(.|\s){1000}.+", Polarity::Included),
                trigger: on_any_change(Scope::BodyOnly),
                intervention: block(
                    "Your post body exceeds our character limit. Please shorten the length of your post in order to continue.",
                ),
                enabled: true,
            },
        },
        CatalogRule {
            slug: "ask",
            rule: RuleDocument {
                name: "Title must end in a question mark".into(),
                condition: regex(r"\? *?$", Polarity::Missing),
                trigger: on_any_change(Scope::TitleOnly),
                intervention: block(QUESTION_MARK_MESSAGE),
                enabled: true,
            },
        },
        CatalogRule {
            slug: "no_urls",
            rule: RuleDocument {
                name: "No URLs in post title.".into(),
                condition: regex(r"(https?:\/\/|www\.)\S+?\.", Polarity::Included),
                trigger: on_any_change(Scope::TitleOnly),
                intervention: block(URL_MESSAGE),
                enabled: true,
            },
        },
        CatalogRule {
            slug: "tech_support",
            rule: RuleDocument {
                name: "Tech support is prohibited.".into(),
                condition: ConditionDocument {
                    kind: ConditionKind::KeywordList,
                    pattern: None,
                    keywords: Some(TECH_SUPPORT_KEYWORDS.iter().map(|k| k.to_string()).collect()),
                    polarity: Polarity::Included,
                },
                trigger: on_any_change(Scope::TitleOnly),
                intervention: message_only(TECH_SUPPORT_MESSAGE),
                enabled: true,
            },
        },
        CatalogRule {
            slug: "held_for_review",
            rule: RuleDocument {
                name: "Show message to user when body is between 1 & 100 characters long.".into(),
                condition: regex(r"^.{1,100}$", Polarity::Missing),
                trigger: on_any_change(Scope::BodyOnly),
                intervention: message_only(HELD_FOR_REVIEW_MESSAGE),
                enabled: true,
            },
        },
        CatalogRule {
            slug: "welcome",
            rule: RuleDocument {
                name: "Welcome message.".into(),
                condition: regex(r"^(.|\s){0}$", Polarity::Included),
                trigger: on_any_change(Scope::TitleOnly),
                intervention: message_only("Welcome to /r/<anonymized>."),
                enabled: true,
            },
        },
    ]
}

/// A one-rule document for the catalog entry with `slug`.
pub fn single_rule_document(slug: &str, community_id: &str) -> Option<RuleSetDocument> {
    reference_rules().into_iter().find(|c| c.slug == slug).map(|c| RuleSetDocument {
        community_id: community_id.into(),
        version: 1,
        rules: vec![c.rule],
    })
}

/// Selected catalog rules, in catalog order, as one document.
pub fn document_with(slugs: &[&str], community_id: &str) -> RuleSetDocument {
    RuleSetDocument {
        community_id: community_id.into(),
        version: 1,
        rules: reference_rules().into_iter().filter(|c| slugs.contains(&c.slug)).map(|c| c.rule).collect(),
    }
}
