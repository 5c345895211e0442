//! Pair-efficiency and Pareto-efficiency checks.
//!
//! Both checkers work on the envy digraph of an allocation: an edge `a -> b`
//! means `a` strictly prefers the house `b` holds. A blocking pair is a
//! 2-cycle. With strict preferences the agents made strictly better off by a
//! Pareto improvement trade exactly the houses they held, so the improvement
//! decomposes into envy cycles and `μ` is Pareto-efficient iff the digraph is
//! acyclic. [`brute_force_dominator`] checks the definition directly and is
//! the oracle for that characterization.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Agent, Allocation, Profile};

/// Largest `n` the enumerating checkers accept (`8! = 40320`).
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Envy digraph of `μ`, stored as an `n x n` adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyGraph {
    n: usize,
    adj: Vec<bool>,
}

impl EnvyGraph {
    pub fn new(profile: &Profile, mu: &Allocation) -> Self {
        let n = profile.n();
        let mut adj = vec![false; n * n];
        for a in profile.agents() {
            let pa = profile.pref(a);
            let own = mu.house(a);
            for b in profile.agents() {
                adj[a.0 * n + b.0] = a != b && pa.prefers(mu.house(b), own);
            }
        }
        Self { n, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, a: Agent, b: Agent) -> bool {
        self.adj[a.0 * self.n + b.0]
    }

    pub fn successors(&self, a: Agent) -> impl Iterator<Item = Agent> + '_ {
        (0..self.n).map(Agent).filter(move |&b| self.has_edge(a, b))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    /// Lowest `(a, b)`, `a < b`, with edges both ways.
    pub fn two_cycle(&self) -> Option<(Agent, Agent)> {
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.adj[a * self.n + b] && self.adj[b * self.n + a] {
                    return Some((Agent(a), Agent(b)));
                }
            }
        }
        None
    }

    /// First cycle met by an iterative depth-first search that starts from
    /// the lowest agent and explores successors in index order.
    pub fn first_cycle(&self) -> Option<Vec<Agent>> {
        const UNSEEN: u8 = 0;
        const ON_STACK: u8 = 1;
        const DONE: u8 = 2;
        let n = self.n;
        let mut state = vec![UNSEEN; n];
        let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);
        for start in 0..n {
            if state[start] != UNSEEN {
                continue;
            }
            state[start] = ON_STACK;
            stack.push((start, 0));
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if *next == n {
                    state[node] = DONE;
                    stack.pop();
                    continue;
                }
                let to = *next;
                *next += 1;
                if !self.adj[node * n + to] {
                    continue;
                }
                match state[to] {
                    UNSEEN => {
                        state[to] = ON_STACK;
                        stack.push((to, 0));
                    }
                    ON_STACK => {
                        let from = stack.iter().position(|&(v, _)| v == to).expect("on stack");
                        return Some(stack[from..].iter().map(|&(v, _)| Agent(v)).collect());
                    }
                    _ => {}
                }
            }
        }
        None
    }

    /// A cycle of minimum length; ties go to the lowest start agent.
    pub fn shortest_cycle(&self) -> Option<Vec<Agent>> {
        if let Some((a, b)) = self.two_cycle() {
            return Some(vec![a, b]);
        }
        let n = self.n;
        let mut best: Option<Vec<Agent>> = None;
        for start in 0..n {
            // BFS from `start` back to `start`.
            let mut parent = vec![usize::MAX; n];
            let mut queue = VecDeque::from([start]);
            let mut seen = vec![false; n];
            seen[start] = true;
            let mut closing = None;
            'bfs: while let Some(v) = queue.pop_front() {
                for to in 0..n {
                    if !self.adj[v * n + to] {
                        continue;
                    }
                    if to == start {
                        closing = Some(v);
                        break 'bfs;
                    }
                    if !seen[to] {
                        seen[to] = true;
                        parent[to] = v;
                        queue.push_back(to);
                    }
                }
            }
            if let Some(mut v) = closing {
                let mut path = vec![Agent(v)];
                while v != start {
                    v = parent[v];
                    path.push(Agent(v));
                }
                path.reverse();
                if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                    best = Some(path);
                }
            }
        }
        best
    }
}

/// A trading cycle: `agents[i]` receives the house `agents[i + 1]` held,
/// wrapping around.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImprovingCycle {
    agents: Vec<Agent>,
}

impl ImprovingCycle {
    pub fn new(agents: Vec<Agent>) -> Result<Self> {
        if agents.len() < 2 {
            return Err(Error::CycleTooShort(agents.len()));
        }
        let mut seen = agents.clone();
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::RepeatedAgent(w[0]));
        }
        Ok(Self { agents })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// The cycle that undoes this one.
    pub fn reversed(&self) -> Self {
        let mut agents = self.agents.clone();
        agents.reverse();
        Self { agents }
    }

    /// Every hop is a strict improvement for the receiving agent.
    pub fn is_improving(&self, profile: &Profile, mu: &Allocation) -> bool {
        let k = self.agents.len();
        (0..k).all(|i| {
            let a = self.agents[i];
            let next = self.agents[(i + 1) % k];
            profile.pref(a).prefers(mu.house(next), mu.house(a))
        })
    }
}

impl fmt::Display for ImprovingCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.agents.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CycleSearch {
    /// First cycle of a depth-first search from the lowest agent.
    #[default]
    FirstFound,
    /// Blocking pairs first, then breadth-first search per agent.
    Shortest,
}

/// Lowest-indexed blocking pair, if any. `μ` is pair-efficient iff `None`.
pub fn find_blocking_pair(profile: &Profile, mu: &Allocation) -> Option<(Agent, Agent)> {
    let n = profile.n();
    for a in 0..n {
        let (pa, ha) = (profile.pref(Agent(a)), mu.house(Agent(a)));
        for b in a + 1..n {
            let hb = mu.house(Agent(b));
            if pa.prefers(hb, ha) && profile.pref(Agent(b)).prefers(ha, hb) {
                return Some((Agent(a), Agent(b)));
            }
        }
    }
    None
}

pub fn is_pair_efficient(profile: &Profile, mu: &Allocation) -> bool {
    find_blocking_pair(profile, mu).is_none()
}

/// An improving cycle, if any. `μ` is Pareto-efficient iff `None`.
pub fn find_improving_cycle(profile: &Profile, mu: &Allocation) -> Option<ImprovingCycle> {
    find_improving_cycle_with(profile, mu, CycleSearch::FirstFound)
}

pub fn find_improving_cycle_with(
    profile: &Profile,
    mu: &Allocation,
    mode: CycleSearch,
) -> Option<ImprovingCycle> {
    let graph = EnvyGraph::new(profile, mu);
    let agents = match mode {
        CycleSearch::FirstFound => graph.first_cycle(),
        CycleSearch::Shortest => graph.shortest_cycle(),
    }?;
    Some(ImprovingCycle { agents })
}

pub fn is_pareto_efficient(profile: &Profile, mu: &Allocation) -> bool {
    EnvyGraph::new(profile, mu).first_cycle().is_none()
}

/// `ν(a) R_a μ(a)` for all `a` and `ν(b) P_b μ(b)` for some `b`.
pub fn pareto_dominates(profile: &Profile, nu: &Allocation, mu: &Allocation) -> bool {
    let mut strict = false;
    for a in profile.agents() {
        let p = profile.pref(a);
        let (new, old) = (nu.house(a), mu.house(a));
        if p.prefers(old, new) {
            return false;
        }
        strict |= new != old;
    }
    strict
}

fn guard(op: &'static str, n: usize) -> Result<()> {
    if n > BRUTE_FORCE_LIMIT {
        Err(Error::TooLarge {
            op,
            n,
            limit: BRUTE_FORCE_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// First allocation in canonical (lexicographic) order that Pareto-dominates
/// `μ`, found by enumeration. Allocations that make some agent worse off are
/// pruned as soon as that agent is assigned, which skips them without
/// changing which dominator comes first.
pub fn brute_force_dominator(profile: &Profile, mu: &Allocation) -> Result<Option<Allocation>> {
    guard("brute_force_dominator", profile.n())?;
    let n = profile.n();
    // Houses each agent weakly prefers to their own, ascending by index.
    let options: Vec<Vec<usize>> = profile
        .agents()
        .map(|a| {
            let p = profile.pref(a);
            let own = mu.house(a);
            (0..n)
                .filter(|&h| p.weakly_prefers(crate::model::House(h), own))
                .collect()
        })
        .collect();
    let mut assign = vec![0usize; n];
    let mut used = vec![false; n];
    let mut cursor = vec![0usize; n];
    let mut depth = 0usize;
    loop {
        if depth == n {
            if assign.iter().zip(mu.houses()).any(|(&h, own)| h != own.0) {
                return Ok(Some(Allocation::from_raw_unchecked(assign)));
            }
            depth -= 1;
            used[assign[depth]] = false;
            continue;
        }
        let opts = &options[depth];
        let mut placed = false;
        while cursor[depth] < opts.len() {
            let h = opts[cursor[depth]];
            cursor[depth] += 1;
            if !used[h] {
                used[h] = true;
                assign[depth] = h;
                placed = true;
                break;
            }
        }
        if placed {
            depth += 1;
            if depth < n {
                cursor[depth] = 0;
            }
        } else {
            cursor[depth] = 0;
            if depth == 0 {
                return Ok(None);
            }
            depth -= 1;
            used[assign[depth]] = false;
        }
    }
}

/// `ν` with `ν(a_i) = μ(a_{i+1})` around the cycle and `ν = μ` elsewhere.
pub fn apply_cycle(mu: &Allocation, cycle: &ImprovingCycle) -> Result<Allocation> {
    let cycle = ImprovingCycle::new(cycle.agents.clone())?;
    let k = cycle.len();
    if let Some(&a) = cycle.agents.iter().find(|a| a.0 >= mu.n()) {
        return Err(Error::UnknownAgent(a.0));
    }
    let pairs: Vec<_> = (0..k)
        .map(|i| (cycle.agents[i], mu.house(cycle.agents[(i + 1) % k])))
        .collect();
    Ok(mu.with_assignment(&pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EfficiencyCounts {
    pub pair_efficient: u64,
    pub pareto_efficient: u64,
}

impl EfficiencyCounts {
    pub fn merge(self, other: Self) -> Self {
        Self {
            pair_efficient: self.pair_efficient + other.pair_efficient,
            pareto_efficient: self.pareto_efficient + other.pareto_efficient,
        }
    }
}

/// Counts pair-efficient and Pareto-efficient allocations over all `n!`.
pub fn count_efficient(profile: &Profile) -> Result<EfficiencyCounts> {
    guard("count_efficient", profile.n())?;
    let mut counts = EfficiencyCounts::default();
    for mu in profile.instance().allocations() {
        if is_pair_efficient(profile, &mu) {
            counts.pair_efficient += 1;
            if is_pareto_efficient(profile, &mu) {
                counts.pareto_efficient += 1;
            }
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{enumerate_all, sample_profile, DomainSpec};
    use crate::model::{House, Instance, Preference};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn pref(idx: &[usize]) -> Preference {
        Preference::from_indices(idx).unwrap()
    }

    fn example_one() -> (Profile, Allocation, Allocation) {
        let profile =
            Profile::standard(vec![pref(&[1, 2, 0]), pref(&[2, 0, 1]), pref(&[0, 1, 2])]).unwrap();
        let mu = Allocation::from_indices(&[2, 0, 1]).unwrap();
        let nu = Allocation::from_indices(&[1, 2, 0]).unwrap();
        (profile, mu, nu)
    }

    /// Definitional pair scan.
    fn pair_scan(profile: &Profile, mu: &Allocation) -> bool {
        for a in profile.agents() {
            for b in profile.agents() {
                if a != b
                    && profile.pref(a).prefers(mu.house(b), mu.house(a))
                    && profile.pref(b).prefers(mu.house(a), mu.house(b))
                {
                    return false;
                }
            }
        }
        true
    }

    /// Unpruned scan over every allocation.
    fn naive_dominator(profile: &Profile, mu: &Allocation) -> Option<Allocation> {
        profile
            .instance()
            .allocations()
            .find(|nu| pareto_dominates(profile, nu, mu))
    }

    fn random_profile(n: usize, seed: u64) -> Profile {
        let inst = Arc::new(Instance::standard(n).unwrap());
        sample_profile(&DomainSpec::unrestricted(n), &inst, seed).unwrap()
    }

    fn random_allocation(n: usize, rng: &mut impl Rng) -> Allocation {
        let raw = crate::domains::sample_any(n, rng);
        Allocation::new(raw.ranking().to_vec()).unwrap()
    }

    #[test]
    fn example_one_checks() {
        let (profile, mu, nu) = example_one();
        assert_eq!(find_blocking_pair(&profile, &mu), None);
        let cycle = find_improving_cycle(&profile, &mu).unwrap();
        assert_eq!(cycle.agents(), &[Agent(0), Agent(2), Agent(1)]);
        assert!(cycle.is_improving(&profile, &mu));
        assert_eq!(apply_cycle(&mu, &cycle).unwrap(), nu);
        assert!(pareto_dominates(&profile, &nu, &mu));
        assert_eq!(
            brute_force_dominator(&profile, &mu).unwrap(),
            Some(nu.clone())
        );
        assert!(!pareto_dominates(&profile, &mu, &mu));
        assert_eq!(cycle.to_string(), "(a1 a3 a2)");

        let counts = count_efficient(&profile).unwrap();
        assert!(counts.pareto_efficient <= counts.pair_efficient);
        assert!(counts.pair_efficient >= 2);
        assert!(is_pair_efficient(&profile, &nu));
    }

    #[test]
    fn everyone_at_peak_is_efficient() {
        let profile = Profile::standard(vec![
            pref(&[1, 0, 2, 3]),
            pref(&[0, 1, 2, 3]),
            pref(&[3, 2, 1, 0]),
            pref(&[2, 3, 0, 1]),
        ])
        .unwrap();
        let mu = Allocation::from_indices(&[1, 0, 3, 2]).unwrap();
        assert_eq!(EnvyGraph::new(&profile, &mu).edge_count(), 0);
        assert_eq!(find_blocking_pair(&profile, &mu), None);
        assert_eq!(find_improving_cycle(&profile, &mu), None);
        assert_eq!(brute_force_dominator(&profile, &mu).unwrap(), None);
    }

    #[test]
    fn exhaustive_three_agents_checkers_match_definitions() {
        let inst = Arc::new(Instance::standard(3).unwrap());
        let prefs: Vec<Preference> = enumerate_all(3).collect();
        for p0 in &prefs {
            for p1 in &prefs {
                for p2 in &prefs {
                    let profile =
                        Profile::new(Arc::clone(&inst), vec![p0.clone(), p1.clone(), p2.clone()])
                            .unwrap();
                    for mu in inst.allocations() {
                        assert_eq!(
                            find_blocking_pair(&profile, &mu).is_none(),
                            pair_scan(&profile, &mu)
                        );
                        let dom = brute_force_dominator(&profile, &mu).unwrap();
                        assert_eq!(dom, naive_dominator(&profile, &mu));
                        assert_eq!(find_improving_cycle(&profile, &mu).is_none(), dom.is_none());
                        let g = EnvyGraph::new(&profile, &mu);
                        assert_eq!(g.two_cycle().is_none(), pair_scan(&profile, &mu));
                    }
                }
            }
        }
    }

    #[test]
    fn random_five_agent_oracle_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..2_000 {
            let profile = random_profile(5, seed);
            let mu = random_allocation(5, &mut rng);
            let dom = brute_force_dominator(&profile, &mu).unwrap();
            assert_eq!(find_improving_cycle(&profile, &mu).is_none(), dom.is_none());
            if let Some(nu) = &dom {
                assert!(!pareto_dominates(&profile, &mu, nu));
            }
            let short = find_improving_cycle_with(&profile, &mu, CycleSearch::Shortest);
            assert_eq!(short.is_none(), dom.is_none());
            if let (Some(s), Some(f)) = (&short, find_improving_cycle(&profile, &mu)) {
                assert!(s.len() <= f.len());
                assert!(s.is_improving(&profile, &mu));
            }
        }
    }

    #[test]
    fn cycles_dominate_and_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..500 {
            let n = 3 + (seed as usize % 4);
            let profile = random_profile(n, seed);
            let mu = random_allocation(n, &mut rng);
            if let Some(c) = find_improving_cycle(&profile, &mu) {
                let nu = apply_cycle(&mu, &c).unwrap();
                assert!(pareto_dominates(&profile, &nu, &mu));
                assert_eq!(apply_cycle(&nu, &c.reversed()).unwrap(), mu);
            }
        }
    }

    #[test]
    fn swap_and_invalid_cycles() {
        let mu = Allocation::identity(4);
        let swap = ImprovingCycle::new(vec![Agent(1), Agent(3)]).unwrap();
        let nu = apply_cycle(&mu, &swap).unwrap();
        assert_eq!(nu.houses(), &[House(0), House(3), House(2), House(1)]);
        assert_eq!(
            ImprovingCycle::new(vec![Agent(0)]),
            Err(Error::CycleTooShort(1))
        );
        assert_eq!(
            ImprovingCycle::new(vec![Agent(0), Agent(2), Agent(0)]),
            Err(Error::RepeatedAgent(Agent(0)))
        );
    }

    #[test]
    fn common_ranking_makes_everything_efficient() {
        let p = pref(&[2, 0, 3, 1]);
        let profile = Profile::standard(vec![p.clone(), p.clone(), p.clone(), p]).unwrap();
        let counts = count_efficient(&profile).unwrap();
        assert_eq!(counts.pair_efficient, 24);
        assert_eq!(counts.pareto_efficient, 24);
    }

    #[test]
    fn dominance_is_transitive() {
        for seed in 0..40 {
            let profile = random_profile(4, seed);
            let all: Vec<Allocation> = profile.instance().allocations().collect();
            for x in &all {
                for y in &all {
                    if !pareto_dominates(&profile, x, y) {
                        continue;
                    }
                    assert!(!pareto_dominates(&profile, y, x));
                    for z in &all {
                        if pareto_dominates(&profile, y, z) {
                            assert!(pareto_dominates(&profile, x, z));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn guard_rejects_large_instances() {
        let profile = random_profile(9, 0);
        let mu = Allocation::identity(9);
        assert!(matches!(
            brute_force_dominator(&profile, &mu),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(
            count_efficient(&profile),
            Err(Error::TooLarge { .. })
        ));
    }
}
