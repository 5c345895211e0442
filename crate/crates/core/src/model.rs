//! Agents, houses, preferences, profiles and allocations.
//!
//! Identity is index based: agent `Agent(i)` and house `House(i)` are the
//! `i`-th agent and house of their instance. Text names live on the
//! [`Instance`] and only matter at the I/O boundary.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest instance size accepted anywhere in the crate.
pub const MIN_AGENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Agent(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct House(pub usize);

impl Agent {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl House {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0 + 1)
    }
}

impl fmt::Display for House {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0 + 1)
    }
}

fn check_permutation(values: &[usize], what: &'static str) -> Result<()> {
    let n = values.len();
    let mut seen = vec![false; n];
    for &v in values {
        if v >= n || seen[v] {
            return Err(Error::NotAPermutation { what, n });
        }
        seen[v] = true;
    }
    Ok(())
}

fn invert(values: &[usize]) -> Vec<usize> {
    let mut inverse = vec![0; values.len()];
    for (i, &v) in values.iter().enumerate() {
        inverse[v] = i;
    }
    inverse
}

/// The prior ordering `≺` over houses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearOrder {
    /// house index -> rank
    position: Vec<usize>,
    /// rank -> house
    by_rank: Vec<House>,
}

impl LinearOrder {
    /// `h1 ≺ h2 ≺ ... ≺ hm`.
    pub fn identity(m: usize) -> Self {
        Self {
            position: (0..m).collect(),
            by_rank: (0..m).map(House).collect(),
        }
    }

    /// Builds the order listing `houses` from lowest to highest.
    pub fn from_sequence(houses: &[House]) -> Result<Self> {
        let raw: Vec<usize> = houses.iter().map(|h| h.0).collect();
        check_permutation(&raw, "order")?;
        Ok(Self {
            position: invert(&raw),
            by_rank: houses.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    #[inline]
    pub fn position(&self, h: House) -> usize {
        self.position[h.0]
    }

    #[inline]
    pub fn house_at(&self, rank: usize) -> House {
        self.by_rank[rank]
    }

    /// Houses from lowest to highest.
    pub fn houses(&self) -> &[House] {
        &self.by_rank
    }

    /// `h ≺ g`
    #[inline]
    pub fn precedes(&self, h: House, g: House) -> bool {
        self.position[h.0] < self.position[g.0]
    }

    /// `h ⪯ g`
    #[inline]
    pub fn precedes_eq(&self, h: House, g: House) -> bool {
        self.position[h.0] <= self.position[g.0]
    }

    /// True when `mid` lies strictly between `x` and `y`, in either direction.
    pub fn strictly_between(&self, x: House, mid: House, y: House) -> bool {
        (self.precedes(x, mid) && self.precedes(mid, y))
            || (self.precedes(y, mid) && self.precedes(mid, x))
    }

    pub fn reversed(&self) -> Self {
        let mut seq = self.by_rank.clone();
        seq.reverse();
        Self::from_sequence(&seq).expect("reversal of a valid order")
    }
}

/// A strict ranking of every house, best first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Preference {
    ranking: Vec<House>,
    rank_of: Vec<usize>,
}

impl Preference {
    pub fn new(ranking: Vec<House>) -> Result<Self> {
        let raw: Vec<usize> = ranking.iter().map(|h| h.0).collect();
        check_permutation(&raw, "ranking")?;
        let rank_of = invert(&raw);
        Ok(Self { ranking, rank_of })
    }

    /// Convenience constructor from zero-based house indices.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().copied().map(House).collect())
    }

    pub(crate) fn from_raw_unchecked(raw: Vec<usize>) -> Self {
        debug_assert!(check_permutation(&raw, "ranking").is_ok());
        let rank_of = invert(&raw);
        Self {
            ranking: raw.into_iter().map(House).collect(),
            rank_of,
        }
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    pub fn ranking(&self) -> &[House] {
        &self.ranking
    }

    /// 0 is best.
    #[inline]
    pub fn rank_of(&self, h: House) -> usize {
        self.rank_of[h.0]
    }

    pub fn peak(&self) -> House {
        self.ranking[0]
    }

    pub fn dip(&self) -> House {
        *self.ranking.last().expect("preferences are non-empty")
    }

    /// `h P g`
    #[inline]
    pub fn prefers(&self, h: House, g: House) -> bool {
        self.rank_of[h.0] < self.rank_of[g.0]
    }

    /// `h R g`
    #[inline]
    pub fn weakly_prefers(&self, h: House, g: House) -> bool {
        self.rank_of[h.0] <= self.rank_of[g.0]
    }

    /// [`Self::prefers`] with bounds checking on both houses.
    pub fn checked_prefers(&self, h: House, g: House) -> Result<bool> {
        self.check(h)?;
        self.check(g)?;
        Ok(self.prefers(h, g))
    }

    pub fn checked_weakly_prefers(&self, h: House, g: House) -> Result<bool> {
        self.check(h)?;
        self.check(g)?;
        Ok(self.weakly_prefers(h, g))
    }

    fn check(&self, h: House) -> Result<()> {
        if h.0 < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownHouse(h.0))
        }
    }

    /// Worst first becomes best first.
    pub fn reversed(&self) -> Self {
        let mut ranking = self.ranking.clone();
        ranking.reverse();
        let raw = ranking.iter().map(|h| h.0).collect();
        Self::from_raw_unchecked(raw)
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.ranking.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{h}")?;
        }
        Ok(())
    }
}

/// Agents, houses, endowments and the prior order over houses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    agent_names: Vec<String>,
    house_names: Vec<String>,
    endowment: Vec<House>,
    order: LinearOrder,
}

impl Instance {
    /// Agents `a1..an`, houses `h1..hn`, `ai` endowed with `hi`.
    pub fn new(n: usize, order: LinearOrder) -> Result<Self> {
        let agents = (0..n).map(|i| Agent(i).to_string()).collect();
        let houses = (0..n).map(|i| House(i).to_string()).collect();
        Self::with_names(agents, houses, (0..n).map(House).collect(), order)
    }

    /// Standard instance with the identity order.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, LinearOrder::identity(n))
    }

    pub fn with_names(
        agent_names: Vec<String>,
        house_names: Vec<String>,
        endowment: Vec<House>,
        order: LinearOrder,
    ) -> Result<Self> {
        let n = agent_names.len();
        if n < MIN_AGENTS {
            return Err(Error::TooFewAgents(n));
        }
        for len in [house_names.len(), endowment.len(), order.len()] {
            if len != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        for names in [&agent_names, &house_names] {
            let mut sorted: Vec<&String> = names.iter().collect();
            sorted.sort();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateName(w[0].clone()));
            }
        }
        let raw: Vec<usize> = endowment.iter().map(|h| h.0).collect();
        check_permutation(&raw, "endowment")?;
        Ok(Self {
            agent_names,
            house_names,
            endowment,
            order,
        })
    }

    pub fn n(&self) -> usize {
        self.agent_names.len()
    }

    pub fn order(&self) -> &LinearOrder {
        &self.order
    }

    pub fn endowment(&self, a: Agent) -> House {
        self.endowment[a.0]
    }

    pub fn endowment_allocation(&self) -> Allocation {
        Allocation {
            assign: self.endowment.clone(),
        }
    }

    pub fn has_identity_endowment(&self) -> bool {
        self.endowment.iter().enumerate().all(|(i, h)| h.0 == i)
    }

    pub fn agents(&self) -> impl ExactSizeIterator<Item = Agent> + Clone {
        (0..self.n()).map(Agent)
    }

    pub fn houses(&self) -> impl ExactSizeIterator<Item = House> + Clone {
        (0..self.n()).map(House)
    }

    pub fn agent_name(&self, a: Agent) -> &str {
        &self.agent_names[a.0]
    }

    pub fn house_name(&self, h: House) -> &str {
        &self.house_names[h.0]
    }

    pub fn agent_by_name(&self, name: &str) -> Option<Agent> {
        self.agent_names.iter().position(|s| s == name).map(Agent)
    }

    pub fn house_by_name(&self, name: &str) -> Option<House> {
        self.house_names.iter().position(|s| s == name).map(House)
    }

    /// Renders a preference with this instance's house names.
    pub fn display_preference(&self, p: &Preference) -> String {
        p.ranking()
            .iter()
            .map(|&h| self.house_name(h))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Every allocation, lexicographic in the assigned-house index sequence.
    pub fn allocations(&self) -> impl Iterator<Item = Allocation> {
        Permutations::new(self.n()).map(Allocation::from_raw_unchecked)
    }
}

/// One preference per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    instance: Arc<Instance>,
    prefs: Vec<Preference>,
}

impl Profile {
    pub fn new(instance: Arc<Instance>, prefs: Vec<Preference>) -> Result<Self> {
        let n = instance.n();
        if prefs.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: prefs.len(),
            });
        }
        if let Some(p) = prefs.iter().find(|p| p.len() != n) {
            return Err(Error::SizeMismatch {
                expected: n,
                got: p.len(),
            });
        }
        Ok(Self { instance, prefs })
    }

    /// Standard instance of size `prefs.len()` with the identity order.
    pub fn standard(prefs: Vec<Preference>) -> Result<Self> {
        let instance = Arc::new(Instance::standard(prefs.len())?);
        Self::new(instance, prefs)
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn shared_instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    pub fn order(&self) -> &LinearOrder {
        self.instance.order()
    }

    #[inline]
    pub fn pref(&self, a: Agent) -> &Preference {
        &self.prefs[a.0]
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    pub fn agents(&self) -> impl ExactSizeIterator<Item = Agent> + Clone {
        (0..self.n()).map(Agent)
    }

    /// Copy of this profile with agent `a` reporting `p` instead.
    pub fn with_pref(&self, a: Agent, p: Preference) -> Self {
        let mut prefs = self.prefs.clone();
        prefs[a.0] = p;
        Self {
            instance: Arc::clone(&self.instance),
            prefs,
        }
    }
}

/// A bijection from agents to houses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    assign: Vec<House>,
}

impl Allocation {
    pub fn new(assign: Vec<House>) -> Result<Self> {
        let raw: Vec<usize> = assign.iter().map(|h| h.0).collect();
        check_permutation(&raw, "allocation")?;
        Ok(Self { assign })
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().copied().map(House).collect())
    }

    /// Builds from `(agent, house)` pairs in any order.
    pub fn from_pairs(n: usize, pairs: &[(Agent, House)]) -> Result<Self> {
        if pairs.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: pairs.len(),
            });
        }
        let mut assign = vec![None; n];
        for &(a, h) in pairs {
            match assign.get_mut(a.0) {
                Some(slot @ None) => *slot = Some(h),
                Some(Some(_)) => {
                    return Err(Error::NotAPermutation {
                        what: "allocation",
                        n,
                    })
                }
                None => return Err(Error::UnknownAgent(a.0)),
            }
        }
        Self::new(assign.into_iter().map(|h| h.expect("filled")).collect())
    }

    pub(crate) fn from_raw_unchecked(raw: Vec<usize>) -> Self {
        Self {
            assign: raw.into_iter().map(House).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_raw_unchecked((0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    #[inline]
    pub fn house(&self, a: Agent) -> House {
        self.assign[a.0]
    }

    pub fn houses(&self) -> &[House] {
        &self.assign
    }

    /// house index -> owning agent
    pub fn owners(&self) -> Vec<Agent> {
        let mut owners = vec![Agent(0); self.n()];
        for (i, h) in self.assign.iter().enumerate() {
            owners[h.0] = Agent(i);
        }
        owners
    }

    pub fn with_assignment(&self, pairs: &[(Agent, House)]) -> Self {
        let mut assign = self.assign.clone();
        for &(a, h) in pairs {
            assign[a.0] = h;
        }
        Self { assign }
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, h) in self.assign.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({}, {h})", Agent(i))?;
        }
        f.write_str("]")
    }
}

/// Permutations of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Permutations {
    current: Option<Vec<usize>>,
}

impl Permutations {
    pub fn new(n: usize) -> Self {
        Self {
            current: Some((0..n).collect()),
        }
    }
}

impl Iterator for Permutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        if next_permutation(&mut next) {
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Advances `v` to its lexicographic successor; false when `v` was the last.
pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `n!`, saturating.
pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, k| acc.saturating_mul(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn pref(idx: &[usize]) -> Preference {
        Preference::from_indices(idx).unwrap()
    }

    #[test]
    fn peak_and_dip_of_example_preferences() {
        let p = pref(&[1, 2, 0]);
        assert_eq!(p.peak(), House(1));
        assert_eq!(p.dip(), House(0));
        let q = pref(&[0, 1, 2]);
        assert_eq!(q.peak(), House(0));
        assert_eq!(q.dip(), House(2));
    }

    #[test]
    fn peak_and_dip_agree_with_pairwise_scan() {
        for raw in Permutations::new(6) {
            let p = Preference::from_indices(&raw).unwrap();
            let houses: Vec<House> = (0..6).map(House).collect();
            let peak = houses
                .iter()
                .copied()
                .find(|&h| houses.iter().all(|&g| g == h || p.prefers(h, g)))
                .unwrap();
            let dip = houses
                .iter()
                .copied()
                .find(|&h| houses.iter().all(|&g| g == h || p.prefers(g, h)))
                .unwrap();
            assert_eq!(p.peak(), peak);
            assert_eq!(p.dip(), dip);
            assert_eq!(p.peak(), p.reversed().dip());
        }
    }

    #[test]
    fn prefers_is_a_strict_total_order() {
        let p = pref(&[2, 0, 1]);
        assert!(p.prefers(House(2), House(1)));
        for m in 3..=5 {
            for raw in Permutations::new(m) {
                let p = Preference::from_indices(&raw).unwrap();
                for x in 0..m {
                    let hx = House(x);
                    assert!(!p.prefers(hx, hx));
                    assert!(p.weakly_prefers(hx, hx));
                    for y in 0..m {
                        let hy = House(y);
                        if x != y {
                            assert!(p.prefers(hx, hy) ^ p.prefers(hy, hx));
                        }
                        for z in 0..m {
                            let hz = House(z);
                            if p.prefers(hx, hy) && p.prefers(hy, hz) {
                                assert!(p.prefers(hx, hz));
                            }
                        }
                    }
                }
                for (i, &h) in p.ranking().iter().enumerate() {
                    assert_eq!(p.rank_of(h), i);
                }
            }
        }
    }

    #[test]
    fn checked_comparison_rejects_unknown_house() {
        let p = pref(&[0, 1, 2]);
        assert_eq!(
            p.checked_prefers(House(0), House(3)),
            Err(Error::UnknownHouse(3))
        );
        assert_eq!(p.checked_weakly_prefers(House(1), House(1)), Ok(true));
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(matches!(Instance::standard(2), Err(Error::TooFewAgents(2))));
        assert!(Preference::from_indices(&[0, 0, 1]).is_err());
        assert!(Allocation::from_indices(&[0, 3, 1]).is_err());
        assert!(LinearOrder::from_sequence(&[House(1), House(1), House(0)]).is_err());
        let names = |p: &str| (1..=3).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let dup = vec!["x".to_string(), "y".into(), "x".into()];
        assert!(matches!(
            Instance::with_names(
                dup,
                names("h"),
                (0..3).map(House).collect(),
                LinearOrder::identity(3)
            ),
            Err(Error::DuplicateName(_))
        ));
        assert!(Instance::with_names(
            names("a"),
            names("h"),
            vec![House(0), House(0), House(1)],
            LinearOrder::identity(3)
        )
        .is_err());
    }

    #[test]
    fn allocation_enumeration_counts_and_order() {
        let inst3 = Instance::standard(3).unwrap();
        let all: Vec<_> = inst3.allocations().collect();
        assert_eq!(all.len(), 6);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Instance::standard(4).unwrap().allocations().count(), 24);
        let five: HashSet<_> = Instance::standard(5).unwrap().allocations().collect();
        assert_eq!(five.len(), 120);
    }

    #[test]
    fn from_pairs_round_trips() {
        let mu = Allocation::from_pairs(
            3,
            &[
                (Agent(2), House(1)),
                (Agent(0), House(2)),
                (Agent(1), House(0)),
            ],
        )
        .unwrap();
        assert_eq!(mu, Allocation::from_indices(&[2, 0, 1]).unwrap());
        assert_eq!(mu.owners(), vec![Agent(1), Agent(2), Agent(0)]);
        assert!(Allocation::from_pairs(
            3,
            &[
                (Agent(0), House(0)),
                (Agent(0), House(1)),
                (Agent(2), House(2))
            ]
        )
        .is_err());
    }

    #[test]
    fn order_helpers() {
        let order = LinearOrder::from_sequence(&[House(2), House(0), House(1)]).unwrap();
        assert!(order.precedes(House(2), House(0)));
        assert!(order.strictly_between(House(2), House(0), House(1)));
        assert!(!order.strictly_between(House(0), House(2), House(1)));
        let rev = order.reversed();
        assert_eq!(rev.houses(), &[House(1), House(0), House(2)]);
        assert_eq!(factorial(8), 40320);
    }
}
