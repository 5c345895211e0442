//! Pair-efficiency and Pareto-efficiency in housing markets with
//! single-peaked and single-dipped preferences.
//!
//! * [`model`]: agents, houses, preferences, profiles, allocations.
//! * [`domains`]: recognizing, enumerating and sampling preference domains.
//! * [`efficiency`]: blocking pairs, improving cycles and dominance checks.
//! * [`equivalence`]: constructive blocking-pair extraction and domain scans.
//! * [`construct`]: counterexamples for domains that leave SP or SD.
//! * [`rules`]: top trading cycles and rule-level property scans.
//! * [`format`]: the instance and allocation text formats.

pub mod construct;
pub mod domains;
pub mod efficiency;
pub mod equivalence;
mod error;
pub mod format;
pub mod model;
pub mod rules;

pub use domains::{AgentDomain, DomainSpec, ViolationWitness};
pub use efficiency::{EfficiencyCounts, EnvyGraph, ImprovingCycle};
pub use equivalence::{EquivalenceReport, ImprovementWitness, Scope, VerifyOptions};
pub use error::{Error, Result};
pub use model::{Agent, Allocation, House, Instance, LinearOrder, Preference, Profile};
