//! Seeded generative model of the post-creation funnel.
//!
//! Each enrolled user draws an arm, a community, covariates and latent
//! activity, then walks the follow-up window day by day. Composer openings
//! produce drafts that are rule-breaking or clean; when guidance is active
//! the community's ruleset judges the draft before submission. Submitted
//! posts then face reactive removal, reports and engagement.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assign::{assign_arm, Arm};
use super::config::{CommunityTemplate, DraftText, Multipliers, RulesetSource, SimConfig};
use super::event::{EventKind, ExperimentEvent, SECONDS_PER_DAY};
use super::outcomes::{CommunityProfile, Covariate, Covariates, PRE_PERIOD_DAYS};
use crate::error::SimError;
use crate::guidance::{compile_ruleset, DraftState, RuleSetDocument};

/// What guidance does to one corpus draft at submission time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DraftVerdict {
    pub blocked: bool,
    /// Guidance fired with messages but let the draft through.
    pub warned: bool,
    pub review_flags: Vec<String>,
}

/// A community template with its corpus already judged by its ruleset.
#[derive(Debug, Clone)]
pub struct PreparedTemplate {
    pub breaking: Vec<DraftVerdict>,
    pub clean: Vec<DraftVerdict>,
    pub profile: CommunityProfile,
    pub treatment: Option<Multipliers>,
}

/// A validated config plus per-community lookups shared by the simulator
/// and the analytic expectations.
#[derive(Debug, Clone)]
pub struct PreparedSim {
    pub config: SimConfig,
    pub templates: Vec<PreparedTemplate>,
    /// `(community_id, template index, weight)` per community.
    pub communities: Vec<(String, usize, f64)>,
}

pub fn community_id(index: usize) -> String {
    format!("c{index:02}")
}

fn judge(ruleset: Option<&RuleSetDocument>, drafts: &[DraftText], index: usize) -> Result<Vec<DraftVerdict>, SimError> {
    let Some(doc) = ruleset else {
        return Ok(vec![DraftVerdict { blocked: false, warned: false, review_flags: vec![] }; drafts.len()]);
    };
    let community = format!("template-{index}");
    let mut doc = doc.clone();
    doc.community_id = community.clone();
    let compiled = compile_ruleset(doc).map_err(|e| SimError::Ruleset {
        community: community.clone(),
        source: crate::error::GuidanceError::Invalid(e),
    })?;
    drafts
        .iter()
        .map(|d| {
            let decision = compiled
                .attempt_submit(&DraftState::new(&community, "", &d.title, &d.body))
                .map_err(|source| SimError::Ruleset { community: community.clone(), source })?;
            Ok(DraftVerdict {
                blocked: !decision.accepted,
                warned: decision.accepted && !decision.guidance.messages.is_empty(),
                review_flags: decision.guidance.review_flags,
            })
        })
        .collect()
}

fn prepare_template(index: usize, t: &CommunityTemplate) -> Result<PreparedTemplate, SimError> {
    let doc = match &t.ruleset {
        None => None,
        Some(RulesetSource::Inline(doc)) => Some(doc),
        Some(RulesetSource::Path(p)) => {
            return Err(SimError::InvalidConfig(format!("ruleset path `{p}` must be resolved before simulating")))
        }
    };
    let rule_count = doc.map_or(0, |d| d.rules.len() as u32);
    Ok(PreparedTemplate {
        breaking: judge(doc, &t.drafts.breaking, index)?,
        clean: judge(doc, &t.drafts.clean, index)?,
        profile: CommunityProfile {
            rules_created: t.rules_created.unwrap_or(rule_count),
            posts: t.pre_posts,
            automod_touched: t.automod_touched,
        },
        treatment: t.treatment,
    })
}

impl PreparedSim {
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let templates = config
            .communities
            .iter()
            .enumerate()
            .map(|(i, t)| prepare_template(i, t))
            .collect::<Result<Vec<_>, _>>()?;
        if templates.iter().all(|t| t.clean.iter().all(|v| v.blocked)) && config.treatment.guidance {
            return Err(SimError::InvalidConfig("every clean draft is blocked by its own ruleset".into()));
        }
        let communities = (0..config.n_communities)
            .map(|i| {
                let t = i % templates.len();
                (community_id(i), t, config.communities[t].weight)
            })
            .collect();
        Ok(Self { config: config.clone(), templates, communities })
    }

    pub fn template_of(&self, community: usize) -> &PreparedTemplate {
        &self.templates[self.communities[community].1]
    }

    pub fn covariates_of(&self, community: usize, newcomer: bool, low_activity: bool) -> Covariates {
        let p = self.template_of(community).profile;
        Covariates { newcomer, low_activity, high_rule_count: p.high_rule_count(), high_automod: p.high_automod() }
    }

    /// Multipliers a user in `arm` experiences.
    pub fn multipliers(&self, arm: Arm, community: usize, covariates: &Covariates) -> Multipliers {
        if !arm.is_treated() {
            return Multipliers::NEUTRAL;
        }
        if let Some(strata) = &self.config.treatment.strata {
            if covariates.get(strata.covariate) {
                return strata.multipliers;
            }
        }
        self.template_of(community).treatment.unwrap_or(self.config.treatment.multipliers)
    }

    pub fn guidance_active(&self, arm: Arm) -> bool {
        match arm {
            Arm::Treatment => self.config.treatment.guidance,
            Arm::Control => self.config.guidance_in_control,
        }
    }

    pub fn strata_covariate(&self) -> Option<Covariate> {
        self.config.treatment.strata.as_ref().map(|s| s.covariate)
    }
}

/// Tallies of what happened to drafts, for conservation checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimStats {
    pub users: u64,
    pub starts: u64,
    pub breaking_drafts: u64,
    pub submit_attempts: u64,
    /// Drafts guidance refused at submission.
    pub blocked: u64,
    /// Blocked drafts whose rule-breaking content the user kept, split by fate.
    pub blocked_breaking: u64,
    pub abandoned: u64,
    pub repaired: u64,
    pub circumvented: u64,
    /// Blocked clean drafts (false positives), by fate.
    pub blocked_clean_abandoned: u64,
    pub blocked_clean_resubmitted: u64,
    pub warned_repaired: u64,
    pub submitted: u64,
    pub flagged: u64,
}

impl SimStats {
    fn add(&mut self, o: &SimStats) {
        self.users += o.users;
        self.starts += o.starts;
        self.breaking_drafts += o.breaking_drafts;
        self.submit_attempts += o.submit_attempts;
        self.blocked += o.blocked;
        self.blocked_breaking += o.blocked_breaking;
        self.abandoned += o.abandoned;
        self.repaired += o.repaired;
        self.circumvented += o.circumvented;
        self.blocked_clean_abandoned += o.blocked_clean_abandoned;
        self.blocked_clean_resubmitted += o.blocked_clean_resubmitted;
        self.warned_repaired += o.warned_repaired;
        self.submitted += o.submitted;
        self.flagged += o.flagged;
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub events: Vec<ExperimentEvent>,
    pub stats: SimStats,
}

/// Simulates the whole experiment. The log starts with one `CommunityProfile`
/// per community, followed by each user's events in time order; users appear
/// in index order regardless of thread count.
pub fn simulate_experiment(config: &SimConfig) -> Result<SimOutput, SimError> {
    let prepared = PreparedSim::new(config)?;
    Ok(simulate_prepared(&prepared))
}

pub fn simulate_prepared(prepared: &PreparedSim) -> SimOutput {
    let config = &prepared.config;
    if config.baseline.starts_per_active_day == 0.0 || config.n_users == 0 {
        // Nobody ever opens the composer, so nobody enrolls.
        return SimOutput { events: Vec::new(), stats: SimStats::default() };
    }
    let weights = WeightedIndex::new(prepared.communities.iter().map(|c| c.2)).expect("weights validated positive");
    let per_user: Vec<(Vec<ExperimentEvent>, SimStats)> =
        (0..config.n_users).into_par_iter().map(|idx| simulate_user(prepared, &weights, idx)).collect();

    let mut events =
        Vec::with_capacity(per_user.iter().map(|(e, _)| e.len()).sum::<usize>() + prepared.communities.len());
    let mut stats = SimStats::default();
    let profile_time = -PRE_PERIOD_DAYS * SECONDS_PER_DAY;
    for (i, (id, _, _)) in prepared.communities.iter().enumerate() {
        let p = prepared.template_of(i).profile;
        events.push(ExperimentEvent::new(
            profile_time,
            "",
            id.clone(),
            EventKind::CommunityProfile {
                rules_created: p.rules_created,
                posts: p.posts,
                automod_touched: p.automod_touched,
            },
        ));
    }
    for (user_events, user_stats) in per_user {
        events.extend(user_events);
        stats.add(&user_stats);
    }
    SimOutput { events, stats }
}

pub fn user_id(index: usize) -> String {
    format!("u{index:06}")
}

fn poisson<R: Rng>(rng: &mut R, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive finite rate").sample(rng) as u64
}

/// Post classes after guidance: clean, rule-breaking and visible to the
/// reactive filter, or rule-breaking but reworded to slip past it.
#[derive(Clone, Copy, PartialEq, Eq)]
enum PostClass {
    Clean,
    Visible,
    Evasive,
}

struct UserSim<'a> {
    prepared: &'a PreparedSim,
    rng: ChaCha8Rng,
    user: String,
    community: String,
    template: &'a PreparedTemplate,
    m: Multipliers,
    guidance: bool,
    end: i64,
    next_post: u64,
    post_base: u64,
    events: Vec<ExperimentEvent>,
    stats: SimStats,
}

impl UserSim<'_> {
    fn emit(&mut self, t: i64, kind: EventKind) {
        let t = t.min(self.end - 1);
        self.events.push(ExperimentEvent::new(t, self.user.clone(), self.community.clone(), kind));
    }

    fn start(&mut self, t: i64) {
        let b = &self.prepared.config.baseline;
        let m = self.m;
        self.stats.starts += 1;
        self.emit(t, EventKind::PostStart);

        let breaking = self.rng.random_bool(b.p_rule_breaking * m.rule_breaking);
        let pool = if breaking { &self.template.breaking } else { &self.template.clean };
        let verdict = &pool[self.rng.random_range(0..pool.len())];
        if breaking {
            self.stats.breaking_drafts += 1;
        }
        if !self.rng.random_bool(b.p_submit_given_start * m.submit) {
            return;
        }
        self.stats.submit_attempts += 1;

        let mut class = if breaking { PostClass::Visible } else { PostClass::Clean };
        let mut flags: &[String] = &[];
        if self.guidance {
            if verdict.blocked {
                self.stats.blocked += 1;
                let u: f64 = self.rng.random();
                let abandon = u < b.p_abandon_when_blocked;
                let repair = !abandon && u < b.p_abandon_when_blocked + b.p_repair_when_blocked;
                if breaking {
                    self.stats.blocked_breaking += 1;
                    if abandon {
                        self.stats.abandoned += 1;
                        return;
                    } else if repair {
                        self.stats.repaired += 1;
                        class = PostClass::Clean;
                    } else {
                        self.stats.circumvented += 1;
                        class = PostClass::Evasive;
                    }
                } else if abandon {
                    self.stats.blocked_clean_abandoned += 1;
                    return;
                } else {
                    self.stats.blocked_clean_resubmitted += 1;
                }
            } else {
                if breaking && verdict.warned && self.rng.random_bool(b.p_repair_when_warned) {
                    self.stats.warned_repaired += 1;
                    class = PostClass::Clean;
                }
                if class != PostClass::Clean || !breaking {
                    flags = &verdict.review_flags;
                }
            }
        }

        let post_id = self.post_base + self.next_post;
        self.next_post += 1;
        self.stats.submitted += 1;
        let submitted_at = (t + self.rng.random_range(30..1800)).min(self.end - 1);
        self.emit(submitted_at, EventKind::PostSubmit { post_id });
        for rule in flags {
            self.stats.flagged += 1;
            self.emit(submitted_at, EventKind::FlaggedForReview { post_id: Some(post_id), rule: rule.clone() });
        }

        let rule_breaking = class != PostClass::Clean;
        let removed = if class == PostClass::Visible
            && self.rng.random_bool(b.p_automod_removal_given_breaking * m.automod_removal)
        {
            let at = submitted_at + self.rng.random_range(1..600);
            self.emit(at, EventKind::AutomodRemoval { post_id: Some(post_id) });
            true
        } else if rule_breaking && self.rng.random_bool(b.p_mod_removal_given_breaking * m.mod_removal) {
            let at = submitted_at + self.rng.random_range(600..SECONDS_PER_DAY);
            self.emit(at, EventKind::ModRemoval { post_id: Some(post_id) });
            true
        } else if self.rng.random_bool(b.p_admin_removal * m.admin_removal) {
            let at = submitted_at + self.rng.random_range(600..SECONDS_PER_DAY);
            self.emit(at, EventKind::AdminRemoval { post_id: Some(post_id) });
            true
        } else {
            false
        };

        let factor = if rule_breaking { b.reports_breaking_factor } else { 1.0 };
        let reports = poisson(&mut self.rng, b.reports_per_post * factor * m.report);
        if reports > 0 {
            let at = submitted_at + self.rng.random_range(60..SECONDS_PER_DAY);
            self.emit(at, EventKind::Report { post_id, count: reports });
        }

        if !removed {
            let g: f64 = Gamma::new(b.engagement_shape, 1.0 / b.engagement_shape)
                .expect("validated shape")
                .sample(&mut self.rng);
            let comments = poisson(&mut self.rng, b.comments_per_post * m.comment * g);
            let views = poisson(&mut self.rng, b.views_per_post * m.view * g);
            let upvotes = poisson(&mut self.rng, b.upvotes_per_post * m.upvote * g);
            for (count, kind) in [
                (views, EventKind::ReceivedView { post_id, count: views }),
                (upvotes, EventKind::ReceivedUpvote { post_id, count: upvotes }),
                (comments, EventKind::ReceivedComment { post_id, count: comments }),
            ] {
                if count > 0 {
                    let at = submitted_at + self.rng.random_range(60..2 * SECONDS_PER_DAY);
                    self.emit(at, kind);
                }
            }
        }
    }
}

fn enrollment_time(rng: &mut ChaCha8Rng, config: &SimConfig) -> i64 {
    let span = config.enrollment_days as i64 * SECONDS_PER_DAY;
    let mut t = rng.random_range(0..span);
    let weekend = |t: i64| matches!((t / SECONDS_PER_DAY) % 7, 5 | 6);
    if config.weekend_dip > 0.0 && weekend(t) && rng.random_bool(config.weekend_dip) {
        t = rng.random_range(0..span);
    }
    t
}

fn simulate_user(prepared: &PreparedSim, weights: &WeightedIndex<f64>, idx: usize) -> (Vec<ExperimentEvent>, SimStats) {
    let config = &prepared.config;
    let b = &config.baseline;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(idx as u64);

    let user = user_id(idx);
    let arm = assign_arm(&user, &config.salt, config.p_treat);
    let community_index = weights.sample(&mut rng);
    let newcomer = rng.random_bool(b.p_newcomer);
    let low_activity = rng.random_bool(b.p_low_activity);
    let covariates = prepared.covariates_of(community_index, newcomer, low_activity);
    let m = prepared.multipliers(arm, community_index, &covariates);
    let t0 = enrollment_time(&mut rng, config);
    let end = t0 + config.follow_up_days as i64 * SECONDS_PER_DAY;

    let mut sim = UserSim {
        prepared,
        rng,
        user,
        community: prepared.communities[community_index].0.clone(),
        template: prepared.template_of(community_index),
        m,
        guidance: prepared.guidance_active(arm),
        end,
        next_post: 0,
        post_base: (idx as u64) << 24,
        events: Vec::new(),
        stats: SimStats { users: 1, ..SimStats::default() },
    };

    let pre = PRE_PERIOD_DAYS * SECONDS_PER_DAY;
    if !newcomer {
        for _ in 0..sim.rng.random_range(1..=3) {
            let at = t0 - sim.rng.random_range(1..=pre);
            sim.emit(at, EventKind::ActiveDay);
        }
    }
    let votes = if low_activity { sim.rng.random_range(0..=3) } else { sim.rng.random_range(4..=40) };
    if votes > 0 {
        let at = t0 - sim.rng.random_range(1..=pre);
        sim.emit(at, EventKind::VoteCast { count: votes });
    }

    let propensity =
        b.p_active_day * Beta::new(b.activity_beta[0], b.activity_beta[1]).expect("validated").sample(&mut sim.rng);
    let intensity: f64 = Gamma::new(b.activity_shape, 1.0 / b.activity_shape).expect("validated").sample(&mut sim.rng);
    let scale = if newcomer { b.newcomer_start_scale } else { 1.0 }
        * if low_activity { b.low_activity_start_scale } else { 1.0 };
    let start_rate = intensity * b.starts_per_active_day * scale * m.start;

    sim.emit(t0, EventKind::Enrolled { arm });
    sim.start(t0);
    for day in 0..config.follow_up_days as i64 {
        let day_start = t0 + day * SECONDS_PER_DAY;
        let active = day == 0 || sim.rng.random_bool((propensity * m.active_day).min(1.0));
        if !active {
            continue;
        }
        let at = if day == 0 { t0 } else { day_start + sim.rng.random_range(0..SECONDS_PER_DAY / 2) };
        sim.emit(at, EventKind::ActiveDay);
        if sim.rng.random_bool(b.p_contribution_day * m.contribution_day) {
            let t = at + sim.rng.random_range(0..SECONDS_PER_DAY / 2);
            sim.emit(t, EventKind::ContributionDay);
        }
        if sim.rng.random_bool(b.p_voting_day * m.voting_day) {
            let t = at + sim.rng.random_range(0..SECONDS_PER_DAY / 2);
            sim.emit(t, EventKind::VotingDay);
        }
        for _ in 0..poisson(&mut sim.rng, start_rate) {
            let t = (at + sim.rng.random_range(0..SECONDS_PER_DAY / 2)).min(day_start + SECONDS_PER_DAY - 1);
            sim.start(t);
        }
    }

    // Stable sort keeps causal order among same-second events.
    sim.events.sort_by_key(|e| e.timestamp);
    (sim.events, sim.stats)
}
