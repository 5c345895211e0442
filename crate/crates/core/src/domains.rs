//! Single-peaked and single-dipped preferences: recognition, enumeration,
//! sampling, and the preference domains built from them.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Agent, House, Instance, LinearOrder, Permutations, Preference, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    NotSinglePeaked,
    NotSingleDipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Three houses showing that a preference leaves its domain.
///
/// `middle` lies strictly between `pivot` and `far` in the prior order.
/// For [`ViolationKind::NotSinglePeaked`] the pivot is the peak and
/// `pivot P far P middle`; for [`ViolationKind::NotSingleDipped`] the pivot
/// is the dip and `middle P far P pivot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ViolationWitness {
    pub kind: ViolationKind,
    pub pivot: House,
    pub middle: House,
    pub far: House,
    /// Which side of the pivot `middle` and `far` sit on.
    pub side: Side,
}

impl ViolationWitness {
    /// Re-checks the inequality chain against `p` and `order`.
    pub fn holds_for(&self, p: &Preference, order: &LinearOrder) -> bool {
        let between = order.strictly_between(self.pivot, self.middle, self.far);
        let side_ok = match self.side {
            Side::Left => order.precedes(self.far, self.pivot),
            Side::Right => order.precedes(self.pivot, self.far),
        };
        let chain = match self.kind {
            ViolationKind::NotSinglePeaked => {
                self.pivot == p.peak()
                    && p.prefers(self.pivot, self.far)
                    && p.prefers(self.far, self.middle)
            }
            ViolationKind::NotSingleDipped => {
                self.pivot == p.dip()
                    && p.prefers(self.middle, self.far)
                    && p.prefers(self.far, self.pivot)
            }
        };
        between && side_ok && chain
    }
}

fn find_violation(
    p: &Preference,
    order: &LinearOrder,
    kind: ViolationKind,
) -> Option<ViolationWitness> {
    let pivot = match kind {
        ViolationKind::NotSinglePeaked => p.peak(),
        ViolationKind::NotSingleDipped => p.dip(),
    };
    let m = p.len();
    // Least (middle, far) by house index.
    for middle in (0..m).map(House) {
        for far in (0..m).map(House) {
            if !order.strictly_between(pivot, middle, far) {
                continue;
            }
            let broken = match kind {
                ViolationKind::NotSinglePeaked => p.prefers(far, middle),
                ViolationKind::NotSingleDipped => p.prefers(middle, far),
            };
            if broken {
                let side = if order.precedes(far, pivot) {
                    Side::Left
                } else {
                    Side::Right
                };
                return Some(ViolationWitness {
                    kind,
                    pivot,
                    middle,
                    far,
                    side,
                });
            }
        }
    }
    None
}

/// `None` when `p` is single-peaked with respect to `order`.
pub fn single_peaked_violation(p: &Preference, order: &LinearOrder) -> Option<ViolationWitness> {
    find_violation(p, order, ViolationKind::NotSinglePeaked)
}

/// `None` when `p` is single-dipped with respect to `order`.
pub fn single_dipped_violation(p: &Preference, order: &LinearOrder) -> Option<ViolationWitness> {
    find_violation(p, order, ViolationKind::NotSingleDipped)
}

pub fn is_single_peaked(p: &Preference, order: &LinearOrder) -> bool {
    single_peaked_violation(p, order).is_none()
}

pub fn is_single_dipped(p: &Preference, order: &LinearOrder) -> bool {
    single_dipped_violation(p, order).is_none()
}

/// Ranks (positions in `order`) from worst to best for the `mask`-th way of
/// peeling interval ends.
fn peel(m: usize, mask: u64) -> Vec<usize> {
    let (mut lo, mut hi) = (0usize, m - 1);
    let mut out = Vec::with_capacity(m);
    for bit in 0..m - 1 {
        if mask >> bit & 1 == 1 {
            out.push(hi);
            hi -= 1;
        } else {
            out.push(lo);
            lo += 1;
        }
    }
    out.push(lo);
    out
}

fn from_positions(order: &LinearOrder, positions: impl Iterator<Item = usize>) -> Preference {
    Preference::from_raw_unchecked(positions.map(|r| order.house_at(r).0).collect())
}

/// Every single-peaked preference, sorted lexicographically by ranking.
///
/// Built by choosing, from the worst house upward, which end of the
/// remaining interval of the order the next house is taken from.
pub fn enumerate_single_peaked(order: &LinearOrder) -> Vec<Preference> {
    let m = order.len();
    if m == 0 {
        return Vec::new();
    }
    let mut out: Vec<Preference> = (0..1u64 << (m - 1))
        .map(|mask| from_positions(order, peel(m, mask).into_iter().rev()))
        .collect();
    out.sort();
    out
}

/// Every single-dipped preference, sorted lexicographically by ranking.
pub fn enumerate_single_dipped(order: &LinearOrder) -> Vec<Preference> {
    let m = order.len();
    if m == 0 {
        return Vec::new();
    }
    let mut out: Vec<Preference> = (0..1u64 << (m - 1))
        .map(|mask| from_positions(order, peel(m, mask).into_iter()))
        .collect();
    out.sort();
    out
}

/// All `m!` preferences in lexicographic order.
pub fn enumerate_all(m: usize) -> impl Iterator<Item = Preference> {
    Permutations::new(m).map(Preference::from_raw_unchecked)
}

/// Uniform draw from the single-peaked preferences.
pub fn sample_single_peaked<R: Rng + ?Sized>(order: &LinearOrder, rng: &mut R) -> Preference {
    let m = order.len();
    let mask = if m > 1 {
        rng.gen_range(0..1u64 << (m - 1))
    } else {
        0
    };
    from_positions(order, peel(m, mask).into_iter().rev())
}

/// Uniform draw from the single-dipped preferences.
pub fn sample_single_dipped<R: Rng + ?Sized>(order: &LinearOrder, rng: &mut R) -> Preference {
    let m = order.len();
    let mask = if m > 1 {
        rng.gen_range(0..1u64 << (m - 1))
    } else {
        0
    };
    from_positions(order, peel(m, mask).into_iter())
}

pub fn sample_any<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Preference {
    let mut raw: Vec<usize> = (0..m).collect();
    raw.shuffle(rng);
    Preference::from_raw_unchecked(raw)
}

/// Admissible preferences for one agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentDomain {
    SinglePeaked,
    SingleDipped,
    All,
    Explicit(Vec<Preference>),
}

impl AgentDomain {
    pub fn admissible(&self, order: &LinearOrder) -> Vec<Preference> {
        match self {
            AgentDomain::SinglePeaked => enumerate_single_peaked(order),
            AgentDomain::SingleDipped => enumerate_single_dipped(order),
            AgentDomain::All => enumerate_all(order.len()).collect(),
            AgentDomain::Explicit(list) => list.clone(),
        }
    }

    pub fn contains(&self, p: &Preference, order: &LinearOrder) -> bool {
        match self {
            AgentDomain::SinglePeaked => is_single_peaked(p, order),
            AgentDomain::SingleDipped => is_single_dipped(p, order),
            AgentDomain::All => true,
            AgentDomain::Explicit(list) => list.contains(p),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, order: &LinearOrder, rng: &mut R) -> Preference {
        match self {
            AgentDomain::SinglePeaked => sample_single_peaked(order, rng),
            AgentDomain::SingleDipped => sample_single_dipped(order, rng),
            AgentDomain::All => sample_any(order.len(), rng),
            AgentDomain::Explicit(list) => list[rng.gen_range(0..list.len())].clone(),
        }
    }

    fn size(&self, m: usize) -> u128 {
        match self {
            AgentDomain::SinglePeaked | AgentDomain::SingleDipped => 1u128 << (m - 1),
            AgentDomain::All => crate::model::factorial(m),
            AgentDomain::Explicit(list) => list.len() as u128,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            AgentDomain::SinglePeaked => "sp",
            AgentDomain::SingleDipped => "sd",
            AgentDomain::All => "all",
            AgentDomain::Explicit(_) => "explicit",
        }
    }
}

/// A set of preference profiles.
///
/// `Product` is the Cartesian product of per-agent domains. `PeakedOrDipped`
/// is the one non-Cartesian set supported: every agent single-peaked, or
/// every agent single-dipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainSpec {
    Product(Vec<AgentDomain>),
    PeakedOrDipped { n: usize },
}

impl DomainSpec {
    pub fn uniform(n: usize, domain: AgentDomain) -> Self {
        DomainSpec::Product(vec![domain; n])
    }

    pub fn single_peaked(n: usize) -> Self {
        Self::uniform(n, AgentDomain::SinglePeaked)
    }

    pub fn single_dipped(n: usize) -> Self {
        Self::uniform(n, AgentDomain::SingleDipped)
    }

    pub fn unrestricted(n: usize) -> Self {
        Self::uniform(n, AgentDomain::All)
    }

    pub fn n(&self) -> usize {
        match self {
            DomainSpec::Product(d) => d.len(),
            DomainSpec::PeakedOrDipped { n } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DomainSpec::Product(domains) = self {
            for (i, d) in domains.iter().enumerate() {
                if matches!(d, AgentDomain::Explicit(l) if l.is_empty()) {
                    return Err(Error::EmptyDomain(Agent(i)));
                }
            }
        }
        if self.n() < crate::model::MIN_AGENTS {
            return Err(Error::TooFewAgents(self.n()));
        }
        Ok(())
    }

    pub fn contains(&self, profile: &Profile) -> bool {
        let order = profile.order();
        match self {
            DomainSpec::Product(domains) => {
                domains.len() == profile.n()
                    && profile
                        .agents()
                        .all(|a| domains[a.0].contains(profile.pref(a), order))
            }
            DomainSpec::PeakedOrDipped { n } => {
                *n == profile.n()
                    && (profile.prefs().iter().all(|p| is_single_peaked(p, order))
                        || profile.prefs().iter().all(|p| is_single_dipped(p, order)))
            }
        }
    }

    /// Preferences agent `a` may report at `profile` without leaving the set.
    pub fn admissible_for(&self, profile: &Profile, a: Agent) -> Vec<Preference> {
        let order = profile.order();
        match self {
            DomainSpec::Product(domains) => domains[a.0].admissible(order),
            DomainSpec::PeakedOrDipped { .. } => {
                let others = || {
                    profile
                        .agents()
                        .filter(move |&b| b != a)
                        .map(|b| profile.pref(b))
                };
                let sp = others().all(|p| is_single_peaked(p, order));
                let sd = others().all(|p| is_single_dipped(p, order));
                let mut out: Vec<Preference> = Vec::new();
                if sp {
                    out.extend(enumerate_single_peaked(order));
                }
                if sd {
                    out.extend(enumerate_single_dipped(order));
                }
                out.sort();
                out.dedup();
                out
            }
        }
    }

    /// Number of profiles in the set for houses of size `n`.
    pub fn profile_count(&self) -> u128 {
        let m = self.n();
        match self {
            DomainSpec::Product(domains) => domains
                .iter()
                .fold(1u128, |acc, d| acc.saturating_mul(d.size(m))),
            DomainSpec::PeakedOrDipped { n } => {
                let half = (1u128 << (m - 1)).saturating_pow(*n as u32);
                let both = 2u128.saturating_pow(*n as u32);
                half.saturating_mul(2).saturating_sub(both)
            }
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Product(domains) => {
                let labels: Vec<&str> = domains.iter().map(AgentDomain::label).collect();
                write!(f, "{}", labels.join(","))
            }
            DomainSpec::PeakedOrDipped { n } => write!(f, "union(sp^{n}, sd^{n})"),
        }
    }
}

/// Draws a profile from `spec`, each agent uniformly from their admissible
/// set. The union set flips one shared coin, then samples all-SP or all-SD.
pub fn sample_profile(spec: &DomainSpec, instance: &Arc<Instance>, seed: u64) -> Result<Profile> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_profile_with(spec, instance, &mut rng)
}

pub fn sample_profile_with<R: Rng + ?Sized>(
    spec: &DomainSpec,
    instance: &Arc<Instance>,
    rng: &mut R,
) -> Result<Profile> {
    if spec.n() != instance.n() {
        return Err(Error::SizeMismatch {
            expected: instance.n(),
            got: spec.n(),
        });
    }
    let order = instance.order();
    let prefs = match spec {
        DomainSpec::Product(domains) => domains.iter().map(|d| d.sample(order, rng)).collect(),
        DomainSpec::PeakedOrDipped { n } => {
            let peaked: bool = rng.gen();
            (0..*n)
                .map(|_| {
                    if peaked {
                        sample_single_peaked(order, rng)
                    } else {
                        sample_single_dipped(order, rng)
                    }
                })
                .collect()
        }
    };
    Profile::new(Arc::clone(instance), prefs)
}

/// Indexed view of every profile in a domain, in canonical order: agent `a1`
/// is the most significant digit, each digit walks the agent's admissible
/// list in enumeration order. For the union set, all-SP profiles come first,
/// then the all-SD profiles that are not also all-SP.
#[derive(Debug, Clone)]
pub struct ProfileSpace {
    instance: Arc<Instance>,
    lists: Vec<Vec<Preference>>,
    union_dipped: Option<Vec<Preference>>,
}

impl ProfileSpace {
    pub fn new(spec: &DomainSpec, instance: Arc<Instance>) -> Result<Self> {
        spec.validate()?;
        if spec.n() != instance.n() {
            return Err(Error::SizeMismatch {
                expected: instance.n(),
                got: spec.n(),
            });
        }
        let order = instance.order().clone();
        let (lists, union_dipped) = match spec {
            DomainSpec::Product(domains) => {
                (domains.iter().map(|d| d.admissible(&order)).collect(), None)
            }
            DomainSpec::PeakedOrDipped { n } => (
                vec![enumerate_single_peaked(&order); *n],
                Some(enumerate_single_dipped(&order)),
            ),
        };
        Ok(Self {
            instance,
            lists,
            union_dipped,
        })
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    fn block_len(&self) -> u128 {
        self.lists
            .iter()
            .fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128))
    }

    /// Size of the index range; some union indices are skipped by [`Self::get`].
    pub fn index_len(&self) -> u128 {
        match self.union_dipped {
            None => self.block_len(),
            Some(ref sd) => self
                .block_len()
                .saturating_add((sd.len() as u128).saturating_pow(self.lists.len() as u32)),
        }
    }

    fn decode(lists: &[Vec<Preference>], mut idx: u128) -> Vec<&Preference> {
        let mut digits = vec![0usize; lists.len()];
        for (i, l) in lists.iter().enumerate().rev() {
            let base = l.len() as u128;
            digits[i] = (idx % base) as usize;
            idx /= base;
        }
        digits.iter().zip(lists).map(|(&d, l)| &l[d]).collect()
    }

    /// Profile at `idx`, or `None` for an index the union set skips.
    pub fn get(&self, idx: u128) -> Option<Profile> {
        let block = self.block_len();
        let prefs: Vec<Preference> = if idx < block {
            Self::decode(&self.lists, idx)
                .into_iter()
                .cloned()
                .collect()
        } else {
            let sd = self.union_dipped.as_ref()?;
            let sd_lists = vec![sd.clone(); self.lists.len()];
            let prefs: Vec<Preference> = Self::decode(&sd_lists, idx - block)
                .into_iter()
                .cloned()
                .collect();
            let order = self.instance.order();
            if prefs.iter().all(|p| is_single_peaked(p, order)) {
                return None;
            }
            prefs
        };
        Some(Profile::new(Arc::clone(&self.instance), prefs).expect("sizes match the instance"))
    }

    pub fn iter(&self) -> impl Iterator<Item = Profile> + '_ {
        (0..self.index_len()).filter_map(move |i| self.get(i))
    }
}
