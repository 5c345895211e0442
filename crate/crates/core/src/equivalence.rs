//! Pair-efficiency versus Pareto-efficiency on structured domains.
//!
//! On an all single-peaked or all single-dipped profile every Pareto
//! improvement over `μ` contains two agents who would gladly swap. This
//! module builds that pair constructively from an improvement `ν`, and scans
//! whole domains (exhaustively or by sampling) for allocations that are
//! pair-efficient but Pareto-dominated.

use std::sync::Arc;

use rayon::prelude::*;

use crate::domains::{
    is_single_dipped, is_single_peaked, sample_profile, DomainSpec, ProfileSpace,
};
use crate::efficiency::{
    apply_cycle, brute_force_dominator, find_blocking_pair, find_improving_cycle,
    is_pair_efficient, pareto_dominates, BRUTE_FORCE_LIMIT,
};
use crate::error::{Error, Result};
use crate::model::{factorial, Agent, Allocation, Instance, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    /// `μ(b) ≺ ν(b)`: the agent moves up the order.
    Red,
    /// `ν(b) ≺ μ(b)`: the agent moves down the order.
    Blue,
}

/// The agents strictly improved by `ν`, labelled `b1..bm` so that
/// `μ(b1) ≺ ... ≺ μ(bm)`, each colored by the direction they move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImprovementWitness {
    nu: Allocation,
    improved: Vec<Agent>,
    labels: Vec<Agent>,
    colors: Vec<Color>,
}

impl ImprovementWitness {
    pub fn nu(&self) -> &Allocation {
        &self.nu
    }

    /// `{a : ν(a) P_a μ(a)}` in agent index order.
    pub fn improved(&self) -> &[Agent] {
        &self.improved
    }

    /// `b1..bm`.
    pub fn labels(&self) -> &[Agent] {
        &self.labels
    }

    /// Colors parallel to [`Self::labels`].
    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn color_of(&self, a: Agent) -> Option<Color> {
        self.labels
            .iter()
            .position(|&b| b == a)
            .map(|i| self.colors[i])
    }

    /// `b1` is red and `bm` is blue.
    pub fn coloring_claim_holds(&self) -> bool {
        self.colors.first() == Some(&Color::Red) && self.colors.last() == Some(&Color::Blue)
    }

    /// Re-checks every structural invariant against `(profile, μ)`.
    pub fn validate(&self, profile: &Profile, mu: &Allocation) -> Result<()> {
        let order = profile.order();
        let n = profile.n();
        if self.nu.n() != n || mu.n() != n {
            return Err(Error::InvalidWitness("allocation size"));
        }
        let improved: Vec<Agent> = profile
            .agents()
            .filter(|&a| profile.pref(a).prefers(self.nu.house(a), mu.house(a)))
            .collect();
        if improved != self.improved || improved.is_empty() {
            return Err(Error::InvalidWitness("improved set"));
        }
        if profile
            .agents()
            .any(|a| !improved.contains(&a) && mu.house(a) != self.nu.house(a))
        {
            return Err(Error::InvalidWitness(
                "agents outside the improved set must keep their house",
            ));
        }
        let mut before: Vec<usize> = improved.iter().map(|&a| mu.house(a).0).collect();
        let mut after: Vec<usize> = improved.iter().map(|&a| self.nu.house(a).0).collect();
        before.sort_unstable();
        after.sort_unstable();
        if before != after {
            return Err(Error::InvalidWitness(
                "improved agents must trade among themselves",
            ));
        }
        let mut sorted = self.labels.clone();
        sorted.sort();
        if sorted != improved
            || self
                .labels
                .windows(2)
                .any(|w| !order.precedes(mu.house(w[0]), mu.house(w[1])))
        {
            return Err(Error::InvalidWitness(
                "labels must follow the order of μ-houses",
            ));
        }
        if self.colors.len() != self.labels.len() {
            return Err(Error::InvalidWitness(
                "every improved agent must be colored",
            ));
        }
        for (&b, &c) in self.labels.iter().zip(&self.colors) {
            let expected = if order.precedes(mu.house(b), self.nu.house(b)) {
                Color::Red
            } else {
                Color::Blue
            };
            if c != expected {
                return Err(Error::InvalidWitness("color"));
            }
        }
        Ok(())
    }
}

/// Builds the witness for `ν` Pareto-dominating `μ`.
pub fn build_witness(
    profile: &Profile,
    mu: &Allocation,
    nu: &Allocation,
) -> Result<ImprovementWitness> {
    if !pareto_dominates(profile, nu, mu) {
        return Err(Error::NotDominating);
    }
    let order = profile.order();
    let improved: Vec<Agent> = profile
        .agents()
        .filter(|&a| profile.pref(a).prefers(nu.house(a), mu.house(a)))
        .collect();
    let mut labels = improved.clone();
    labels.sort_by_key(|&a| order.position(mu.house(a)));
    let colors = labels
        .iter()
        .map(|&b| {
            if order.precedes(mu.house(b), nu.house(b)) {
                Color::Red
            } else {
                Color::Blue
            }
        })
        .collect();
    let witness = ImprovementWitness {
        nu: nu.clone(),
        improved,
        labels,
        colors,
    };
    witness.validate(profile, mu)?;
    Ok(witness)
}

fn mutual_envy(profile: &Profile, mu: &Allocation, a: Agent, b: Agent) -> bool {
    profile.pref(a).prefers(mu.house(b), mu.house(a))
        && profile.pref(b).prefers(mu.house(a), mu.house(b))
}

/// Blocking pair on an all single-peaked profile: the first adjacent
/// `(b_l, b_{l+1})` with `b_l` red and `b_{l+1}` blue.
pub fn extract_blocking_pair_sp(
    profile: &Profile,
    mu: &Allocation,
    witness: &ImprovementWitness,
) -> Result<(Agent, Agent)> {
    let order = profile.order();
    if !profile.prefs().iter().all(|p| is_single_peaked(p, order)) {
        return Err(Error::WrongDomain("single-peaked"));
    }
    witness.validate(profile, mu)?;
    if !witness.coloring_claim_holds() {
        return Err(Error::CheckFailed("b1 must be red and bm blue".into()));
    }
    let l = witness
        .colors
        .windows(2)
        .position(|w| w == [Color::Red, Color::Blue])
        .expect("a red agent is followed by a blue one somewhere");
    let (lo, hi) = (witness.labels[l], witness.labels[l + 1]);
    if !mutual_envy(profile, mu, lo, hi) {
        return Err(Error::CheckFailed(format!(
            "{lo} and {hi} do not envy each other"
        )));
    }
    Ok((lo, hi))
}

/// Blocking pair on an all single-dipped profile: the extremes `(b1, bm)`.
pub fn extract_blocking_pair_sd(
    profile: &Profile,
    mu: &Allocation,
    witness: &ImprovementWitness,
) -> Result<(Agent, Agent)> {
    let order = profile.order();
    if !profile.prefs().iter().all(|p| is_single_dipped(p, order)) {
        return Err(Error::WrongDomain("single-dipped"));
    }
    witness.validate(profile, mu)?;
    let first = witness.labels[0];
    let last = *witness.labels.last().expect("non-empty");
    if !mutual_envy(profile, mu, first, last) {
        return Err(Error::CheckFailed(format!(
            "{first} and {last} do not envy each other"
        )));
    }
    Ok((first, last))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Exhaustive,
    Randomized { seed: u64, trials: u64 },
}

/// Default number of `(profile, allocation)` checks a scan may perform.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub budget: u128,
    /// Worker threads. Never changes the report.
    pub jobs: usize,
    /// Also run the constructive extractors on every Pareto-dominated
    /// allocation of an all-SP or all-SD profile.
    pub extract: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            jobs: 1,
            extract: false,
        }
    }
}

/// A pair-efficient allocation that is Pareto-dominated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub profile: Profile,
    pub mu: Allocation,
    pub witness: ImprovementWitness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionFailure {
    pub profile: Profile,
    pub mu: Allocation,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub domain: DomainSpec,
    pub scope: Scope,
    pub profiles_checked: u64,
    pub allocations_checked: u64,
    pub pair_efficient: u64,
    /// Dominated allocations the extractors were run on.
    pub extractions: u64,
    pub extraction_failures: Vec<ExtractionFailure>,
    pub violations: Vec<Violation>,
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty() && self.extraction_failures.is_empty()
    }

    fn empty(domain: DomainSpec, scope: Scope) -> Self {
        Self {
            domain,
            scope,
            profiles_checked: 0,
            allocations_checked: 0,
            pair_efficient: 0,
            extractions: 0,
            extraction_failures: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn absorb(&mut self, part: Partial) {
        self.profiles_checked += part.profiles;
        self.allocations_checked += part.allocations;
        self.pair_efficient += part.pair_efficient;
        self.extractions += part.extractions;
        self.extraction_failures.extend(part.extraction_failures);
        self.violations.extend(part.violations);
    }
}

#[derive(Default)]
struct Partial {
    profiles: u64,
    allocations: u64,
    pair_efficient: u64,
    extractions: u64,
    extraction_failures: Vec<ExtractionFailure>,
    violations: Vec<Violation>,
}

fn check_profile(profile: &Profile, extract: bool, part: &mut Partial) -> Result<()> {
    let order = profile.order();
    let all_sp = extract && profile.prefs().iter().all(|p| is_single_peaked(p, order));
    let all_sd = extract && profile.prefs().iter().all(|p| is_single_dipped(p, order));
    part.profiles += 1;
    for mu in profile.instance().allocations() {
        part.allocations += 1;
        let blocked = find_blocking_pair(profile, &mu).is_some();
        if blocked && !(all_sp || all_sd) {
            continue;
        }
        if !blocked {
            part.pair_efficient += 1;
        }
        let Some(nu) = brute_force_dominator(profile, &mu)? else {
            continue;
        };
        let witness = build_witness(profile, &mu, &nu)?;
        if !blocked {
            part.violations.push(Violation {
                profile: profile.clone(),
                mu: mu.clone(),
                witness: witness.clone(),
            });
        }
        let mut run = |result: Result<(Agent, Agent)>| {
            part.extractions += 1;
            let reason = match result {
                Ok((a, b)) if mutual_envy(profile, &mu, a, b) => return,
                Ok((a, b)) => format!("extracted pair ({a}, {b}) is not blocking"),
                Err(e) => e.to_string(),
            };
            part.extraction_failures.push(ExtractionFailure {
                profile: profile.clone(),
                mu: mu.clone(),
                reason,
            });
        };
        if all_sp {
            run(extract_blocking_pair_sp(profile, &mu, &witness));
        }
        if all_sd {
            run(extract_blocking_pair_sd(profile, &mu, &witness));
        }
    }
    Ok(())
}

/// Pareto-efficient implies pair-efficient: swapping a blocking pair is a
/// Pareto improvement.
fn check_converse(profile: &Profile) -> Result<()> {
    for mu in profile.instance().allocations() {
        if let Some((a, b)) = find_blocking_pair(profile, &mu) {
            let swapped = mu.with_assignment(&[(a, mu.house(b)), (b, mu.house(a))]);
            if !pareto_dominates(profile, &swapped, &mu) {
                return Err(Error::CheckFailed(format!(
                    "swap of ({a}, {b}) does not dominate {mu}"
                )));
            }
        }
    }
    Ok(())
}

/// Mixes a run seed with a trial index.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const CHUNK: u64 = 64;

/// Checks that every pair-efficient allocation is Pareto-efficient at every
/// profile of `spec` in `scope`, on the standard instance of size `spec.n()`.
pub fn verify_equivalence(
    spec: &DomainSpec,
    scope: Scope,
    options: &VerifyOptions,
) -> Result<EquivalenceReport> {
    spec.validate()?;
    let n = spec.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            op: "verify_equivalence",
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let profiles = match scope {
        Scope::Exhaustive => spec.profile_count(),
        Scope::Randomized { trials, .. } => trials as u128,
    };
    let needed = profiles.saturating_mul(factorial(n));
    if needed > options.budget {
        return Err(Error::BudgetExceeded {
            needed,
            budget: options.budget,
        });
    }
    let instance = Arc::new(Instance::standard(n)?);
    let space = ProfileSpace::new(spec, Arc::clone(&instance))?;
    let slots: u64 = match scope {
        Scope::Exhaustive => space.index_len() as u64,
        Scope::Randomized { trials, .. } => trials,
    };
    let profile_at = |i: u64| -> Result<Option<Profile>> {
        match scope {
            Scope::Exhaustive => Ok(space.get(i as u128)),
            Scope::Randomized { seed, .. } => {
                sample_profile(spec, &instance, trial_seed(seed, i)).map(Some)
            }
        }
    };

    if let Some(first) = (0..slots).find_map(|i| profile_at(i).transpose()) {
        check_converse(&first?)?;
    }

    let chunks: Vec<u64> = (0..slots.div_ceil(CHUNK)).collect();
    let work = |c: &u64| -> Result<Partial> {
        let mut part = Partial::default();
        for i in c * CHUNK..((c + 1) * CHUNK).min(slots) {
            if let Some(profile) = profile_at(i)? {
                check_profile(&profile, options.extract, &mut part)?;
            }
        }
        Ok(part)
    };
    let parts: Vec<Result<Partial>> = if options.jobs <= 1 {
        chunks.iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::CheckFailed(e.to_string()))?;
        pool.install(|| chunks.par_iter().map(work).collect())
    };
    let mut report = EquivalenceReport::empty(spec.clone(), scope);
    for part in parts {
        report.absorb(part?);
    }
    Ok(report)
}

/// Largest `|profiles| * n!` that [`find_gap_witness`] scans exhaustively.
pub const GAP_EXHAUSTIVE_LIMIT: u128 = 10_000_000;
/// Profiles sampled by [`find_gap_witness`] when the space is larger.
pub const GAP_SAMPLES: u64 = 10_000;

/// A profile in `spec` with a pair-efficient allocation `μ` dominated by `ν`.
pub fn find_gap_witness(
    spec: &DomainSpec,
    seed: u64,
) -> Result<Option<(Profile, Allocation, Allocation)>> {
    spec.validate()?;
    let n = spec.n();
    let instance = Arc::new(Instance::standard(n)?);
    let try_profile = |profile: Profile| -> Option<(Profile, Allocation, Allocation)> {
        for mu in profile.instance().allocations() {
            if !is_pair_efficient(&profile, &mu) {
                continue;
            }
            if let Some(cycle) = find_improving_cycle(&profile, &mu) {
                let nu = apply_cycle(&mu, &cycle).expect("cycle from the envy graph");
                if pareto_dominates(&profile, &nu, &mu) && is_pair_efficient(&profile, &mu) {
                    return Some((profile, mu, nu));
                }
            }
        }
        None
    };
    if spec.profile_count().saturating_mul(factorial(n)) <= GAP_EXHAUSTIVE_LIMIT {
        let space = ProfileSpace::new(spec, instance)?;
        let found = space.iter().find_map(try_profile);
        Ok(found)
    } else {
        for t in 0..GAP_SAMPLES {
            let profile = sample_profile(spec, &instance, trial_seed(seed, t))?;
            if let Some(found) = try_profile(profile) {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }
}
