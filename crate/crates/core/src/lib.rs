//! Compose-time post guidance.
//!
//! [`guidance`] compiles moderator rules and evaluates drafts against them.
//! [`experiment`] assigns arms, simulates a randomized rollout and turns
//! event logs into per-user outcomes. [`analysis`] estimates treatment
//! effects with Poisson regression and robust standard errors.

pub mod analysis;
pub mod corpus;
mod error;
pub mod experiment;
pub mod guidance;

pub use error::{AnalysisError, GuidanceError, LogError, OutcomeError, SimError};
pub use experiment::{Arm, Covariate, ExperimentEvent, Outcome, OutcomeRecord, SimConfig};
pub use guidance::{CompiledRuleSet, DraftState, GuidanceResult, RuleSetDocument, TriggerEvent};
