//! Allocation rules and rule-level property scans.

use std::sync::Arc;

use crate::domains::{sample_profile, DomainSpec, ProfileSpace};
use crate::efficiency::{find_blocking_pair, find_improving_cycle};
use crate::equivalence::{trial_seed, Scope};
use crate::error::{Error, Result};
use crate::model::{Agent, Allocation, House, Instance, Preference, Profile};

/// A deterministic map from profiles to allocations.
///
/// Further rules (for instance ones defined only on the single-peaked
/// domain) plug into the scans below by implementing this trait.
pub trait Rule {
    fn name(&self) -> &str;
    fn allocate(&self, profile: &Profile) -> Allocation;
}

/// Top trading cycles from the instance's endowments.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopTradingCycles;

impl Rule for TopTradingCycles {
    fn name(&self) -> &str {
        "ttc"
    }

    fn allocate(&self, profile: &Profile) -> Allocation {
        ttc(profile)
    }
}

/// Agents pick their favourite remaining house in priority order.
#[derive(Debug, Clone)]
pub struct SerialDictatorship {
    pub priority: Vec<Agent>,
}

impl Rule for SerialDictatorship {
    fn name(&self) -> &str {
        "serial-dictatorship"
    }

    fn allocate(&self, profile: &Profile) -> Allocation {
        let n = profile.n();
        let mut taken = vec![false; n];
        let mut assign = vec![House(0); n];
        for &a in &self.priority {
            let h = *profile
                .pref(a)
                .ranking()
                .iter()
                .find(|h| !taken[h.0])
                .expect("a house is left for every agent");
            taken[h.0] = true;
            assign[a.0] = h;
        }
        Allocation::new(assign).expect("priority lists every agent once")
    }
}

/// Everybody keeps their endowment.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTrade;

impl Rule for NoTrade {
    fn name(&self) -> &str {
        "no-trade"
    }

    fn allocate(&self, profile: &Profile) -> Allocation {
        profile.instance().endowment_allocation()
    }
}

/// Top trading cycles. Each round every remaining agent points at the owner
/// of their best remaining house; every cycle of the resulting functional
/// graph trades at once and leaves.
pub fn ttc(profile: &Profile) -> Allocation {
    let inst = profile.instance();
    let n = profile.n();
    let mut owner = vec![Agent(0); n];
    for a in inst.agents() {
        owner[inst.endowment(a).0] = a;
    }
    let mut remaining = vec![true; n];
    let mut house_left = vec![true; n];
    let mut assign = vec![House(0); n];
    let mut left = n;
    while left > 0 {
        let mut points = vec![usize::MAX; n];
        for a in (0..n).filter(|&a| remaining[a]) {
            let best = profile
                .pref(Agent(a))
                .ranking()
                .iter()
                .find(|h| house_left[h.0])
                .expect("remaining agents have remaining houses");
            points[a] = owner[best.0].0;
        }
        let mut in_cycle = vec![false; n];
        for start in (0..n).filter(|&a| remaining[a]) {
            // Walk until a repeat, then mark the loop.
            let mut seen_at = vec![usize::MAX; n];
            let mut path = Vec::new();
            let mut v = start;
            while seen_at[v] == usize::MAX && !in_cycle[v] {
                seen_at[v] = path.len();
                path.push(v);
                v = points[v];
            }
            if !in_cycle[v] {
                for &u in &path[seen_at[v]..] {
                    in_cycle[u] = true;
                }
            }
        }
        for a in (0..n).filter(|&a| in_cycle[a]) {
            let h = inst.endowment(Agent(points[a]));
            assign[a] = h;
            house_left[h.0] = false;
        }
        for a in (0..n).filter(|&a| in_cycle[a]) {
            remaining[a] = false;
            left -= 1;
        }
    }
    Allocation::new(assign).expect("ttc assigns every house once")
}

/// No agent is worse off than with their endowment.
pub fn is_individually_rational(profile: &Profile, mu: &Allocation) -> bool {
    let inst = profile.instance();
    profile.agents().all(|a| {
        profile
            .pref(a)
            .weakly_prefers(mu.house(a), inst.endowment(a))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manipulation {
    pub profile: Profile,
    pub agent: Agent,
    pub misreport: Preference,
    pub truthful_house: House,
    pub manipulated_house: House,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProofnessReport {
    pub rule: String,
    pub profiles_checked: u64,
    pub misreports_checked: u64,
    pub violations: Vec<Manipulation>,
}

fn profiles_in_scope(
    spec: &DomainSpec,
    scope: Scope,
    budget: u128,
    per_profile: u128,
) -> Result<Vec<Profile>> {
    spec.validate()?;
    let count = match scope {
        Scope::Exhaustive => spec.profile_count(),
        Scope::Randomized { trials, .. } => trials as u128,
    };
    let needed = count.saturating_mul(per_profile);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let instance = Arc::new(Instance::standard(spec.n())?);
    match scope {
        Scope::Exhaustive => Ok(ProfileSpace::new(spec, instance)?.iter().collect()),
        Scope::Randomized { seed, trials } => (0..trials)
            .map(|t| sample_profile(spec, &instance, trial_seed(seed, t)))
            .collect(),
    }
}

/// Tries every admissible misreport of every agent at every profile in scope.
pub fn test_strategy_proofness(
    rule: &dyn Rule,
    spec: &DomainSpec,
    scope: Scope,
    budget: u128,
) -> Result<StrategyProofnessReport> {
    let n = spec.n();
    let largest = match spec {
        DomainSpec::Product(d) => d
            .iter()
            .map(|x| match x {
                crate::domains::AgentDomain::All => crate::model::factorial(n),
                crate::domains::AgentDomain::Explicit(l) => l.len() as u128,
                _ => 1u128 << (n - 1),
            })
            .max()
            .unwrap_or(1),
        DomainSpec::PeakedOrDipped { .. } => 1u128 << n,
    };
    let profiles = profiles_in_scope(spec, scope, budget, largest.saturating_mul(n as u128))?;
    let mut report = StrategyProofnessReport {
        rule: rule.name().to_string(),
        profiles_checked: 0,
        misreports_checked: 0,
        violations: Vec::new(),
    };
    for profile in profiles {
        report.profiles_checked += 1;
        let truthful = rule.allocate(&profile);
        for a in profile.agents() {
            let truth = profile.pref(a);
            for lie in spec.admissible_for(&profile, a) {
                if &lie == truth {
                    continue;
                }
                report.misreports_checked += 1;
                let outcome = rule.allocate(&profile.with_pref(a, lie.clone()));
                if truth.prefers(outcome.house(a), truthful.house(a)) {
                    report.violations.push(Manipulation {
                        profile: profile.clone(),
                        agent: a,
                        misreport: lie,
                        truthful_house: truthful.house(a),
                        manipulated_house: outcome.house(a),
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorollaryReport {
    pub profiles_checked: u64,
    /// Profiles where the TTC outcome is blocked by a pair or an improving cycle.
    pub failures: Vec<Profile>,
}

impl CorollaryReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// On every all single-dipped profile in scope the TTC outcome is
/// pair-efficient and Pareto-efficient.
pub fn check_corollary_sd(n: usize, scope: Scope, budget: u128) -> Result<CorollaryReport> {
    let spec = DomainSpec::single_dipped(n);
    let profiles = profiles_in_scope(&spec, scope, budget, 1)?;
    let mut report = CorollaryReport {
        profiles_checked: 0,
        failures: Vec::new(),
    };
    for profile in profiles {
        report.profiles_checked += 1;
        let mu = ttc(&profile);
        if find_blocking_pair(&profile, &mu).is_some()
            || find_improving_cycle(&profile, &mu).is_some()
        {
            report.failures.push(profile);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efficiency::is_pareto_efficient;
    use crate::equivalence::DEFAULT_BUDGET;

    fn pref(idx: &[usize]) -> Preference {
        Preference::from_indices(idx).unwrap()
    }

    #[test]
    fn ttc_on_mixed_example() {
        let profile =
            Profile::standard(vec![pref(&[1, 2, 0]), pref(&[2, 0, 1]), pref(&[0, 1, 2])]).unwrap();
        let out = ttc(&profile);
        assert_eq!(out, Allocation::from_indices(&[1, 2, 0]).unwrap());
        assert!(is_individually_rational(&profile, &out));
        assert!(is_pareto_efficient(&profile, &out));
        let mu = Allocation::from_indices(&[2, 0, 1]).unwrap();
        assert!(is_individually_rational(&profile, &mu));
    }

    #[test]
    fn ttc_keeps_endowments_when_they_are_peaks() {
        let profile = Profile::standard(vec![
            pref(&[0, 1, 2, 3]),
            pref(&[1, 0, 2, 3]),
            pref(&[2, 3, 1, 0]),
            pref(&[3, 0, 1, 2]),
        ])
        .unwrap();
        assert_eq!(ttc(&profile), Allocation::identity(4));
    }

    #[test]
    fn ttc_multiple_rounds() {
        // Round 1: a1 and a2 swap. Round 2: a3 and a4 swap among what is left.
        let profile = Profile::standard(vec![
            pref(&[1, 0, 2, 3]),
            pref(&[0, 1, 2, 3]),
            pref(&[0, 3, 2, 1]),
            pref(&[1, 2, 3, 0]),
        ])
        .unwrap();
        assert_eq!(
            ttc(&profile),
            Allocation::from_indices(&[1, 0, 3, 2]).unwrap()
        );
    }

    #[test]
    fn individual_rationality_matches_direct_loop() {
        let spec = DomainSpec::unrestricted(3);
        let space = ProfileSpace::new(&spec, Arc::new(Instance::standard(3).unwrap())).unwrap();
        for profile in space.iter() {
            assert!(is_individually_rational(&profile, &Allocation::identity(3)));
            for mu in profile.instance().allocations() {
                let mut direct = true;
                for a in 0..3 {
                    let p = profile.pref(Agent(a));
                    if p.rank_of(mu.house(Agent(a))) > p.rank_of(House(a)) {
                        direct = false;
                    }
                }
                assert_eq!(is_individually_rational(&profile, &mu), direct);
            }
        }
    }

    #[test]
    fn constant_rule_is_strategy_proof() {
        let r = test_strategy_proofness(
            &NoTrade,
            &DomainSpec::unrestricted(3),
            Scope::Exhaustive,
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(r.violations.is_empty());
        assert_eq!(r.misreports_checked, 216 * 3 * 5);
    }

    /// Serial dictatorship whose priority flips to `a3 a2 a1` when `a1`
    /// reports `h1` as their peak.
    struct FlippingDictator;

    impl Rule for FlippingDictator {
        fn name(&self) -> &str {
            "flipping-dictator"
        }

        fn allocate(&self, profile: &Profile) -> Allocation {
            let mut priority: Vec<Agent> = profile.agents().collect();
            if profile.pref(Agent(0)).peak() == House(0) {
                priority.reverse();
            }
            SerialDictatorship { priority }.allocate(profile)
        }
    }

    #[test]
    fn manipulable_rule_is_caught() {
        // Everyone wants h1; truthfully a1 picks last.
        let crafted =
            Profile::standard(vec![pref(&[0, 1, 2]), pref(&[0, 1, 2]), pref(&[0, 1, 2])]).unwrap();
        let truthful = FlippingDictator.allocate(&crafted);
        assert_eq!(truthful.house(Agent(0)), House(2));
        let lie = pref(&[1, 0, 2]);
        let gained = FlippingDictator.allocate(&crafted.with_pref(Agent(0), lie));
        assert!(crafted
            .pref(Agent(0))
            .prefers(gained.house(Agent(0)), truthful.house(Agent(0))));

        let r = test_strategy_proofness(
            &FlippingDictator,
            &DomainSpec::unrestricted(3),
            Scope::Exhaustive,
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(r
            .violations
            .iter()
            .any(|v| v.profile == crafted && v.agent == Agent(0)));
        for v in &r.violations {
            let p = v.profile.pref(v.agent);
            assert!(p.prefers(v.manipulated_house, v.truthful_house));
        }
    }

    #[test]
    fn serial_dictatorship_is_strategy_proof() {
        let rule = SerialDictatorship {
            priority: vec![Agent(2), Agent(1), Agent(0)],
        };
        let r = test_strategy_proofness(
            &rule,
            &DomainSpec::unrestricted(3),
            Scope::Exhaustive,
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(r.violations.is_empty());
    }

    #[test]
    fn ttc_strategy_proof_on_restricted_four_agent_domains() {
        for spec in [DomainSpec::single_peaked(4), DomainSpec::single_dipped(4)] {
            let r = test_strategy_proofness(
                &TopTradingCycles,
                &spec,
                Scope::Exhaustive,
                DEFAULT_BUDGET,
            )
            .unwrap();
            assert_eq!(r.profiles_checked, 4096);
            assert!(r.violations.is_empty());
        }
    }

    #[test]
    fn corollary_small_and_budget() {
        let r = check_corollary_sd(3, Scope::Exhaustive, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.profiles_checked, 64);
        assert!(r.holds());
        assert!(matches!(
            check_corollary_sd(4, Scope::Exhaustive, 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
