//! Counterexample synthesis for domains one preference larger than SP or SD.
//!
//! Given a single preference `P_a` outside the single-peaked (or
//! single-dipped) family, these builders complete it to a profile where every
//! other agent stays inside the family, together with an allocation `μ` that
//! is pair-efficient but Pareto-dominated by `ν`. Both properties are
//! machine-checked before a bundle is returned.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domains::{
    enumerate_single_peaked, is_single_dipped, is_single_peaked, single_dipped_violation,
    single_peaked_violation, ViolationWitness,
};
use crate::efficiency::{find_blocking_pair, find_improving_cycle, pareto_dominates};
use crate::error::{Error, Result};
use crate::model::{Agent, Allocation, House, Instance, LinearOrder, Preference, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaChoice {
    /// Remaining agents take remaining houses in index order.
    IndexOrder,
    /// A seeded shuffle of the remaining houses.
    Shuffled(u64),
}

/// The designated agents `a` (holder of the outside preference), `a′`, `ã`,
/// and how the bystanders are matched to the leftover houses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roles {
    pub a: Agent,
    pub a_prime: Agent,
    pub a_tilde: Agent,
    pub beta: BetaChoice,
}

impl Roles {
    /// `a′` and `ã` are the two lowest agents other than `a`.
    pub fn canonical(a: Agent) -> Self {
        let mut others = (0..).map(Agent).filter(|&b| b != a);
        Self {
            a,
            a_prime: others.next().expect("infinite"),
            a_tilde: others.next().expect("infinite"),
            beta: BetaChoice::IndexOrder,
        }
    }

    /// Three distinct random agents and a shuffled bystander matching.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agents: Vec<Agent> = (0..n).map(Agent).collect();
        agents.shuffle(&mut rng);
        Self {
            a: agents[0],
            a_prime: agents[1],
            a_tilde: agents[2],
            beta: BetaChoice::Shuffled(seed.rotate_left(17) ^ 0x5DEE_CE66),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let ids = [self.a, self.a_prime, self.a_tilde];
        let distinct = ids[0] != ids[1] && ids[0] != ids[2] && ids[1] != ids[2];
        if !distinct || ids.iter().any(|x| x.0 >= n) {
            return Err(Error::InvalidRoles(n));
        }
        Ok(())
    }

    fn is_designated(&self, b: Agent) -> bool {
        b == self.a || b == self.a_prime || b == self.a_tilde
    }

    /// `β`: bystanders (ascending) to the houses outside the triple.
    fn beta(&self, n: usize, triple: [House; 3]) -> Vec<(Agent, House)> {
        let bystanders: Vec<Agent> = (0..n)
            .map(Agent)
            .filter(|&b| !self.is_designated(b))
            .collect();
        let mut houses: Vec<House> = (0..n).map(House).filter(|h| !triple.contains(h)).collect();
        if let BetaChoice::Shuffled(seed) = self.beta {
            houses.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        bystanders.into_iter().zip(houses).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleBundle {
    pub profile: Profile,
    pub mu: Allocation,
    pub nu: Allocation,
    pub roles: Roles,
    pub beta: Vec<(Agent, House)>,
    /// `(h, h′, h̃)`: pivot, middle and far house of the violation.
    pub witness_triple: (House, House, House),
}

impl CounterexampleBundle {
    /// `μ` is pair-efficient, `ν` dominates it, and an improving cycle exists.
    pub fn verify(&self) -> Result<()> {
        if let Some((x, y)) = find_blocking_pair(&self.profile, &self.mu) {
            return Err(Error::CheckFailed(format!("μ is blocked by ({x}, {y})")));
        }
        if !pareto_dominates(&self.profile, &self.nu, &self.mu) {
            return Err(Error::CheckFailed("ν does not Pareto-dominate μ".into()));
        }
        if find_improving_cycle(&self.profile, &self.mu).is_none() {
            return Err(Error::CheckFailed("no improving cycle at μ".into()));
        }
        Ok(())
    }
}

/// First single-peaked preference, in canonical enumeration order, ranking
/// the houses of `chain` in the given relative order and, when given, with
/// peak `peak_hint`.
pub fn complete_sp(
    order: &LinearOrder,
    chain: &[House],
    peak_hint: Option<House>,
) -> Result<Preference> {
    enumerate_single_peaked(order)
        .into_iter()
        .find(|p| {
            chain.windows(2).all(|w| p.prefers(w[0], w[1]))
                && peak_hint.is_none_or(|h| p.peak() == h)
        })
        .ok_or(Error::Unsatisfiable)
}

fn triple(w: &ViolationWitness) -> [House; 3] {
    [w.pivot, w.middle, w.far]
}

fn assemble(
    order: &LinearOrder,
    roles: Roles,
    prefs: Vec<Preference>,
    mu_pairs: Vec<(Agent, House)>,
    nu_pairs: Vec<(Agent, House)>,
    beta: Vec<(Agent, House)>,
    w: &ViolationWitness,
) -> Result<CounterexampleBundle> {
    let n = order.len();
    let instance = Arc::new(Instance::new(n, order.clone())?);
    let profile = Profile::new(instance, prefs)?;
    let mu = Allocation::from_pairs(n, &[mu_pairs, beta.clone()].concat())?;
    let nu = Allocation::from_pairs(n, &[nu_pairs, beta.clone()].concat())?;
    let bundle = CounterexampleBundle {
        profile,
        mu,
        nu,
        roles,
        beta,
        witness_triple: (w.pivot, w.middle, w.far),
    };
    bundle.verify()?;
    Ok(bundle)
}

/// Completes a non-single-peaked `P_a` to a profile where everyone else is
/// single-peaked and `μ = [(a, h̃), (a′, h), (ã, h′), (b, β(b))]` is
/// pair-efficient but dominated by `ν = [(a, h), (a′, h′), (ã, h̃), ...]`.
pub fn build_sp_counterexample(
    order: &LinearOrder,
    p_a: &Preference,
    roles: Roles,
) -> Result<CounterexampleBundle> {
    let n = order.len();
    if n < crate::model::MIN_AGENTS {
        return Err(Error::TooFewAgents(n));
    }
    if p_a.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: p_a.len(),
        });
    }
    roles.validate(n)?;
    let w = single_peaked_violation(p_a, order).ok_or(Error::AlreadyInDomain("single-peaked"))?;
    let (h, h_mid, h_far) = (w.pivot, w.middle, w.far);
    let beta = roles.beta(n, triple(&w));

    let mut prefs = vec![None; n];
    prefs[roles.a.0] = Some(p_a.clone());
    prefs[roles.a_prime.0] = Some(complete_sp(order, &[h_mid, h, h_far], None)?);
    prefs[roles.a_tilde.0] = Some(complete_sp(order, &[h_far, h_mid, h], None)?);
    for &(b, hb) in &beta {
        prefs[b.0] = Some(complete_sp(order, &[], Some(hb))?);
    }
    let prefs = prefs
        .into_iter()
        .map(|p| p.expect("every agent assigned"))
        .collect();

    assemble(
        order,
        roles,
        prefs,
        vec![(roles.a, h_far), (roles.a_prime, h), (roles.a_tilde, h_mid)],
        vec![(roles.a, h), (roles.a_prime, h_mid), (roles.a_tilde, h_far)],
        beta,
        &w,
    )
}

/// `h1 P h2 P ... ` along the order (the lowest house is best).
fn ascending(order: &LinearOrder) -> Preference {
    Preference::from_raw_unchecked(order.houses().iter().map(|h| h.0).collect())
}

/// Single-dipped preference with dip `dip` listing the `best` block first,
/// then `second`, then the block around the dip. Inside each block, houses
/// farther from the dip (by order position) come first; equal distances go
/// to the lower house index.
fn dip_blocks(order: &LinearOrder, dip: House, blocks: [&dyn Fn(House) -> bool; 3]) -> Preference {
    let d = order.position(dip) as isize;
    let mut ranking: Vec<usize> = Vec::with_capacity(order.len());
    for in_block in blocks {
        let mut members: Vec<House> = order
            .houses()
            .iter()
            .copied()
            .filter(|&h| in_block(h))
            .collect();
        members.sort_by_key(|&h| {
            (
                std::cmp::Reverse((order.position(h) as isize - d).abs()),
                h.0,
            )
        });
        ranking.extend(members.iter().map(|h| h.0));
    }
    Preference::from_raw_unchecked(ranking)
}

/// Completes a non-single-dipped `P_a` to a profile where everyone else is
/// single-dipped and `μ = [(a, h̃), (a′, h), (ã, h′), (b, β(b))]` is
/// pair-efficient but dominated by `ν = [(a, h′), (a′, h̃), (ã, h), ...]`.
pub fn build_sd_counterexample(
    order: &LinearOrder,
    p_a: &Preference,
    roles: Roles,
) -> Result<CounterexampleBundle> {
    let n = order.len();
    if n < crate::model::MIN_AGENTS {
        return Err(Error::TooFewAgents(n));
    }
    if p_a.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: p_a.len(),
        });
    }
    roles.validate(n)?;
    let w = single_dipped_violation(p_a, order).ok_or(Error::AlreadyInDomain("single-dipped"))?;
    let (h, h_mid, h_far) = (w.pivot, w.middle, w.far);
    let beta = roles.beta(n, triple(&w));

    let p1 = ascending(order);
    let p2 = p1.reversed();
    let le = |x: House, y: House| order.precedes_eq(x, y);
    let lt = |x: House, y: House| order.precedes(x, y);
    let (p3, p_tilde) = if lt(h, h_far) {
        // h ≺ h′ ≺ h̃: houses from h̃ up, then up to h, then the middle.
        let upper = move |x: House| le(h_far, x);
        let lower = move |x: House| le(x, h);
        let middle = move |x: House| lt(h, x) && lt(x, h_far);
        (
            dip_blocks(order, h_mid, [&upper, &lower, &middle]),
            p1.clone(),
        )
    } else {
        // h̃ ≺ h′ ≺ h: houses up to h̃, then from h up, then the middle.
        let lower = move |x: House| le(x, h_far);
        let upper = move |x: House| le(h, x);
        let middle = move |x: House| lt(h_far, x) && lt(x, h);
        (
            dip_blocks(order, h_mid, [&lower, &upper, &middle]),
            p2.clone(),
        )
    };
    debug_assert!(is_single_dipped(&p3, order) && p3.dip() == h_mid);

    let mut prefs = vec![None; n];
    prefs[roles.a.0] = Some(p_a.clone());
    prefs[roles.a_prime.0] = Some(p3);
    prefs[roles.a_tilde.0] = Some(p_tilde);
    for &(b, hb) in &beta {
        prefs[b.0] = Some(if lt(hb, h_far) {
            p1.clone()
        } else {
            p2.clone()
        });
    }
    let prefs = prefs
        .into_iter()
        .map(|p| p.expect("every agent assigned"))
        .collect();

    assemble(
        order,
        roles,
        prefs,
        vec![(roles.a, h_far), (roles.a_prime, h), (roles.a_tilde, h_mid)],
        vec![(roles.a, h_mid), (roles.a_prime, h_far), (roles.a_tilde, h)],
        beta,
        &w,
    )
}

/// Everyone except the designated `a` lies in the target family.
pub fn others_in_family(bundle: &CounterexampleBundle, peaked: bool) -> bool {
    let order = bundle.profile.order();
    bundle
        .profile
        .agents()
        .filter(|&b| b != bundle.roles.a)
        .all(|b| {
            let p = bundle.profile.pref(b);
            if peaked {
                is_single_peaked(p, order)
            } else {
                is_single_dipped(p, order)
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{enumerate_all, sample_any};
    use rand::Rng;

    fn pref(idx: &[usize]) -> Preference {
        Preference::from_indices(idx).unwrap()
    }

    #[test]
    fn sp_bundle_on_three_houses() {
        let order = LinearOrder::identity(3);
        let b =
            build_sp_counterexample(&order, &pref(&[0, 2, 1]), Roles::canonical(Agent(0))).unwrap();
        assert_eq!(b.witness_triple, (House(0), House(1), House(2)));
        assert_eq!(b.profile.pref(Agent(1)), &pref(&[1, 0, 2]));
        assert_eq!(b.profile.pref(Agent(2)), &pref(&[2, 1, 0]));
        assert_eq!(b.mu, Allocation::from_indices(&[2, 0, 1]).unwrap());
        assert_eq!(b.nu, Allocation::from_indices(&[0, 1, 2]).unwrap());
        assert!(others_in_family(&b, true));
    }

    #[test]
    fn sd_bundle_reproduces_the_mixed_example() {
        let order = LinearOrder::identity(3);
        let b =
            build_sd_counterexample(&order, &pref(&[1, 2, 0]), Roles::canonical(Agent(0))).unwrap();
        assert_eq!(b.witness_triple, (House(0), House(1), House(2)));
        assert_eq!(
            b.profile.prefs(),
            &[pref(&[1, 2, 0]), pref(&[2, 0, 1]), pref(&[0, 1, 2])]
        );
        assert_eq!(b.mu, Allocation::from_indices(&[2, 0, 1]).unwrap());
        assert_eq!(b.nu, Allocation::from_indices(&[1, 2, 0]).unwrap());
    }

    #[test]
    fn in_domain_preference_is_rejected() {
        let order = LinearOrder::identity(3);
        let roles = Roles::canonical(Agent(0));
        assert_eq!(
            build_sp_counterexample(&order, &pref(&[0, 1, 2]), roles),
            Err(Error::AlreadyInDomain("single-peaked"))
        );
        assert_eq!(
            build_sd_counterexample(&order, &pref(&[2, 0, 1]), roles),
            Err(Error::AlreadyInDomain("single-dipped"))
        );
        let bad = Roles {
            a_tilde: Agent(0),
            ..roles
        };
        assert_eq!(
            build_sp_counterexample(&order, &pref(&[0, 2, 1]), bad),
            Err(Error::InvalidRoles(3))
        );
    }

    #[test]
    fn two_house_preferences_are_always_single_peaked() {
        let order = LinearOrder::identity(2);
        assert!(enumerate_all(2).all(|p| is_single_peaked(&p, &order)));
    }

    #[test]
    fn complete_sp_choices() {
        let order = LinearOrder::identity(3);
        assert_eq!(
            complete_sp(&order, &[House(1), House(0), House(2)], None).unwrap(),
            pref(&[1, 0, 2])
        );
        assert_eq!(
            complete_sp(&order, &[], Some(House(2))).unwrap(),
            pref(&[2, 1, 0])
        );
        assert_eq!(
            complete_sp(&order, &[House(0), House(2), House(1)], None),
            Err(Error::Unsatisfiable)
        );
    }

    #[test]
    fn forced_chains_are_always_satisfiable() {
        for m in 3..=6 {
            let order = LinearOrder::identity(m);
            for p in enumerate_all(m) {
                if let Some(w) = single_peaked_violation(&p, &order) {
                    complete_sp(&order, &[w.middle, w.pivot, w.far], None).unwrap();
                    complete_sp(&order, &[w.far, w.middle, w.pivot], None).unwrap();
                }
            }
        }
    }

    #[test]
    fn reversed_order_mirrors_the_sd_bundle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut cases = [0usize; 2];
        for _ in 0..300 {
            let m = rng.gen_range(3..=6);
            let order = LinearOrder::identity(m);
            let p = sample_any(m, &mut rng);
            if is_single_dipped(&p, &order) {
                continue;
            }
            let roles = Roles::canonical(Agent(0));
            let fwd = build_sd_counterexample(&order, &p, roles).unwrap();
            let rev = build_sd_counterexample(&order.reversed(), &p, roles).unwrap();
            let (h, _, h_far) = fwd.witness_triple;
            cases[usize::from(order.precedes(h_far, h))] += 1;
            assert_eq!(fwd.witness_triple, rev.witness_triple);
            assert_ne!(
                order.precedes(h, h_far),
                order.reversed().precedes(h, h_far)
            );
            assert_eq!(fwd.profile.prefs(), rev.profile.prefs());
            assert_eq!((fwd.mu, fwd.nu), (rev.mu, rev.nu));
        }
        assert!(cases[0] > 0 && cases[1] > 0);
    }

    #[test]
    fn bystanders_hold_their_peak_in_sp_bundles() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 0..200 {
            let n = rng.gen_range(4..=6);
            let order = LinearOrder::identity(n);
            let p = sample_any(n, &mut rng);
            if is_single_peaked(&p, &order) {
                continue;
            }
            let roles = Roles::random(n, t);
            let p_a = p;
            let b = build_sp_counterexample(&order, &p_a, roles).unwrap();
            for &(x, hx) in &b.beta {
                assert_eq!(b.mu.house(x), hx);
                assert_eq!(b.profile.pref(x).peak(), hx);
            }
            assert_eq!(b, build_sp_counterexample(&order, &p_a, roles).unwrap());
        }
    }
}
