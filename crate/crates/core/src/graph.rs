//! Distances, direct reachability and structural classification over the
//! transition graph of a deterministic MDP.
//!
//! All distances count actions and are at least 1. Paths never continue
//! through a terminal state.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Mutex;

use crate::mdp::{DeterministicMdp, StateId};

/// A step count, or unreachable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    /// As a real number, with `f64::INFINITY` for unreachable.
    pub fn as_f64(self) -> f64 {
        match self {
            Distance::Finite(d) => d as f64,
            Distance::Infinite => f64::INFINITY,
        }
    }

    fn from_raw(d: u32) -> Self {
        if d == UNREACHED {
            Distance::Infinite
        } else {
            Distance::Finite(d as usize)
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

const UNREACHED: u32 = u32::MAX;

/// Predecessor lists in compressed row form.
#[derive(Clone, Debug)]
struct Reverse {
    offsets: Vec<usize>,
    sources: Vec<u32>,
}

impl Reverse {
    fn build(mdp: &DeterministicMdp) -> Self {
        let n = mdp.state_count();
        let mut counts = vec![0usize; n + 1];
        for s in mdp.states().filter(|&s| !mdp.is_terminal(s)) {
            for &t in mdp.successors(s) {
                counts[t + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut sources = vec![0u32; counts[n]];
        for s in mdp.states().filter(|&s| !mdp.is_terminal(s)) {
            for &t in mdp.successors(s) {
                sources[fill[t]] = s.0 as u32;
                fill[t] += 1;
            }
        }
        Self { offsets: counts, sources }
    }

    fn of(&self, t: usize) -> &[u32] {
        &self.sources[self.offsets[t]..self.offsets[t + 1]]
    }
}

/// Single-source forward BFS: `D(from, targets)`. An empty target set, or a
/// terminal `from`, gives `Infinite`.
pub fn distance(mdp: &DeterministicMdp, from: StateId, targets: &[StateId]) -> Distance {
    let mut is_target = vec![false; mdp.state_count()];
    for t in targets {
        is_target[t.0] = true;
    }
    bfs_forward(mdp, from, |s| is_target[s.0], |_| true)
}

/// Forward BFS from `from` to the first state satisfying `goal`, expanding only
/// non-terminal states accepted by `pass`.
fn bfs_forward(
    mdp: &DeterministicMdp,
    from: StateId,
    goal: impl Fn(StateId) -> bool,
    pass: impl Fn(StateId) -> bool,
) -> Distance {
    if mdp.is_terminal(from) {
        return Distance::Infinite;
    }
    let mut dist = vec![UNREACHED; mdp.state_count()];
    let mut queue = VecDeque::new();
    // `from` itself is expanded at depth 0 but only counts as a target after >= 1 step
    queue.push_back((from.0, 0u32));
    let mut expanded = vec![false; mdp.state_count()];
    expanded[from.0] = true;
    while let Some((s, d)) = queue.pop_front() {
        for &t in mdp.successors(StateId(s)) {
            let ts = StateId(t);
            if goal(ts) {
                return Distance::Finite(d as usize + 1);
            }
            if dist[t] == UNREACHED {
                dist[t] = d + 1;
                if !expanded[t] && !mdp.is_terminal(ts) && pass(ts) {
                    expanded[t] = true;
                    queue.push_back((t, d + 1));
                }
            }
        }
    }
    Distance::Infinite
}

/// Memoized reverse-BFS distance fields. One field answers `D(s, T)` for every `s`.
///
/// Safe to share between threads; the cache is behind a mutex.
#[derive(Debug)]
pub struct DistanceOracle<'a> {
    mdp: &'a DeterministicMdp,
    reverse: Reverse,
    cache: Mutex<HashMap<(Vec<usize>, bool), std::sync::Arc<Vec<u32>>>>,
}

impl<'a> DistanceOracle<'a> {
    pub fn new(mdp: &'a DeterministicMdp) -> Self {
        Self { mdp, reverse: Reverse::build(mdp), cache: Mutex::new(HashMap::new()) }
    }

    pub fn mdp(&self) -> &'a DeterministicMdp {
        self.mdp
    }

    /// `D(s, targets)` for every state `s`. With `direct`, paths may not pass through
    /// any intermediate state on the way (the endpoint itself may be one).
    pub fn field(&self, targets: &[StateId], direct: bool) -> std::sync::Arc<Vec<u32>> {
        let mut key: Vec<usize> = targets.iter().map(|s| s.0).collect();
        key.sort_unstable();
        key.dedup();
        let key = (key, direct);
        if let Some(f) = self.cache.lock().expect("cache poisoned").get(&key) {
            return f.clone();
        }
        let field = std::sync::Arc::new(self.compute_field(&key.0, direct));
        self.cache.lock().expect("cache poisoned").insert(key, field.clone());
        field
    }

    fn compute_field(&self, targets: &[usize], direct: bool) -> Vec<u32> {
        let n = self.mdp.state_count();
        let mut is_target = vec![false; n];
        for &t in targets {
            is_target[t] = true;
        }
        // `dist` is D(s, T) >= 1; `reach` is the remaining distance used when s is an
        // interior node of a longer path (0 at targets).
        let mut dist = vec![UNREACHED; n];
        let mut queue: VecDeque<(usize, u32)> = targets.iter().map(|&t| (t, 0)).collect();
        let mut queued = is_target.clone();
        while let Some((x, h)) = queue.pop_front() {
            for &p in self.reverse.of(x) {
                let p = p as usize;
                if dist[p] == UNREACHED {
                    dist[p] = h + 1;
                }
                let ps = StateId(p);
                let interior_ok = !self.mdp.is_terminal(ps) && !(direct && self.mdp.is_intermediate(ps));
                if !queued[p] && interior_ok {
                    queued[p] = true;
                    queue.push_back((p, h + 1));
                }
            }
        }
        dist
    }

    pub fn distance(&self, from: StateId, targets: &[StateId]) -> Distance {
        if self.mdp.is_terminal(from) || targets.is_empty() {
            return Distance::Infinite;
        }
        Distance::from_raw(self.field(targets, false)[from.0])
    }

    /// Distance along paths whose interior avoids intermediate states.
    pub fn direct_distance(&self, from: StateId, targets: &[StateId]) -> Distance {
        if self.mdp.is_terminal(from) || targets.is_empty() {
            return Distance::Infinite;
        }
        Distance::from_raw(self.field(targets, true)[from.0])
    }

    pub fn to_terminal(&self, from: StateId) -> Distance {
        self.distance(from, &self.mdp.terminal_states())
    }

    /// `D(s, S_I)`: distance to the closest intermediate state. The first
    /// intermediate on any path is directly reachable, so this equals the minimum
    /// over directly reachable ones.
    pub fn to_intermediate(&self, from: StateId) -> Distance {
        self.distance(from, &self.mdp.intermediate_states())
    }

    pub fn directly_reachable(&self, s: StateId) -> DirectReach {
        directly_reachable(self.mdp, s)
    }
}

/// `I_d(s)` together with whether the terminal set is directly reachable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectReach {
    pub intermediates: BTreeSet<StateId>,
    /// Restricted distance to each member of `intermediates`.
    pub distances: Vec<(StateId, usize)>,
    pub terminal: Option<usize>,
}

/// Intermediate states reachable from `s` without passing through another
/// intermediate state, by restricted forward BFS.
pub fn directly_reachable(mdp: &DeterministicMdp, s: StateId) -> DirectReach {
    let n = mdp.state_count();
    let mut dist = vec![UNREACHED; n];
    let mut queue = VecDeque::new();
    let mut expanded = vec![false; n];
    let mut intermediates = BTreeSet::new();
    let mut distances = Vec::new();
    let mut terminal = None;
    if !mdp.is_terminal(s) {
        queue.push_back((s.0, 0u32));
        expanded[s.0] = true;
    }
    while let Some((x, d)) = queue.pop_front() {
        for &t in mdp.successors(StateId(x)) {
            let ts = StateId(t);
            if dist[t] != UNREACHED {
                continue;
            }
            dist[t] = d + 1;
            if mdp.is_terminal(ts) {
                terminal.get_or_insert(d as usize + 1);
            } else if mdp.is_intermediate(ts) {
                if intermediates.insert(ts) {
                    distances.push((ts, d as usize + 1));
                }
            } else if !expanded[t] {
                expanded[t] = true;
                queue.push_back((t, d + 1));
            }
        }
    }
    // `s` may itself be an intermediate reached again through a loop
    if let Some((d, _)) = (dist[s.0] != UNREACHED).then_some((dist[s.0], ())) {
        if mdp.is_intermediate(s) && !intermediates.contains(&s) {
            intermediates.insert(s);
            distances.push((s, d as usize));
        }
    }
    DirectReach { intermediates, distances, terminal }
}

/// `h`: the smallest distance from any intermediate state to a directly reachable
/// intermediate state or to the terminal set. `Infinite` when there are no such pairs.
pub fn min_checkpoint_distance(mdp: &DeterministicMdp) -> Distance {
    let oracle = DistanceOracle::new(mdp);
    min_checkpoint_distance_with(&oracle)
}

fn min_checkpoint_distance_with(oracle: &DistanceOracle<'_>) -> Distance {
    let mdp = oracle.mdp();
    let mut best = Distance::Infinite;
    for c in mdp.intermediate_states() {
        let reach = directly_reachable(mdp, c);
        for &(other, d) in &reach.distances {
            if other != c {
                best = best.min(Distance::Finite(d));
            }
        }
        best = best.min(oracle.to_terminal(c));
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    NoIntermediates,
    /// One-way single-path: every successful path visits every intermediate, in one order.
    Owsp,
    /// One-way multi-path: every successful path visits at least one intermediate.
    Owmp,
    /// Some intermediate state can be revisited.
    Now,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::NoIntermediates => "NoIntermediates",
            Classification::Owsp => "OWSP",
            Classification::Owmp => "OWMP",
            Classification::Now => "NOW",
        })
    }
}

#[derive(Clone, Debug)]
pub struct StructureReport {
    pub classification: Classification,
    pub h: Distance,
    pub d0_terminal: Distance,
    /// OWSP only: the largest leg along `s_0 -> s_i1 -> ... -> s_iN -> S_T`.
    pub d_max: Option<usize>,
    /// `I_d` for the initial state and every intermediate state.
    pub direct_reach: Vec<(StateId, DirectReach)>,
    /// OWSP only: intermediates in visiting order.
    pub owsp_order: Vec<StateId>,
    pub intermediate_count: usize,
    /// Assumption violations noticed during classification.
    pub violations: Vec<String>,
}

impl StructureReport {
    pub fn direct_reach_of(&self, s: StateId) -> Option<&DirectReach> {
        self.direct_reach.iter().find(|(t, _)| *t == s).map(|(_, r)| r)
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("classification".to_string(), self.classification.to_string()),
            ("intermediates".to_string(), self.intermediate_count.to_string()),
            ("h".to_string(), self.h.to_string()),
            ("d0_terminal".to_string(), self.d0_terminal.to_string()),
        ];
        if let Some(d) = self.d_max {
            kv.push(("d_max".to_string(), d.to_string()));
        }
        if let Some(r) = self.direct_reach.first().map(|(_, r)| r) {
            let ids: Vec<String> = r.intermediates.iter().map(|s| s.0.to_string()).collect();
            kv.push(("direct_reach_s0".to_string(), format!("[{}]", ids.join(" "))));
            kv.push((
                "terminal_direct_from_s0".to_string(),
                r.terminal.map_or("false".to_string(), |_| "true".to_string()),
            ));
        }
        if !self.owsp_order.is_empty() {
            let ids: Vec<String> = self.owsp_order.iter().map(|s| s.0.to_string()).collect();
            kv.push(("owsp_order".to_string(), format!("[{}]", ids.join(" "))));
        }
        for v in &self.violations {
            kv.push(("violation".to_string(), v.clone()));
        }
        kv
    }
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_key_values() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Is `S_T` reachable from `s_0` when every state in `blocked` is removed?
fn terminal_reachable_avoiding(mdp: &DeterministicMdp, blocked: &[bool]) -> bool {
    let s0 = mdp.initial_state();
    if blocked[s0.0] {
        return false;
    }
    bfs_forward(mdp, s0, |s| mdp.is_terminal(s), |s| !blocked[s.0]).is_finite()
        || mdp.is_terminal(s0)
}

/// Classifies the MDP into the one-way settings and gathers `h`, distances and
/// direct-reachability sets.
pub fn classify(mdp: &DeterministicMdp) -> StructureReport {
    let oracle = DistanceOracle::new(mdp);
    classify_with(&oracle)
}

pub fn classify_with(oracle: &DistanceOracle<'_>) -> StructureReport {
    let mdp = oracle.mdp();
    let s0 = mdp.initial_state();
    let reachable: Vec<bool> = {
        let mut r = vec![false; mdp.state_count()];
        for s in mdp.enumerate_reachable() {
            r[s.0] = true;
        }
        r
    };
    let intermediates: Vec<StateId> = mdp.intermediate_states().into_iter().filter(|s| reachable[s.0]).collect();
    let d0_terminal = oracle.to_terminal(s0);
    let mut violations = Vec::new();
    let mut direct_reach = vec![(s0, directly_reachable(mdp, s0))];
    for &c in &intermediates {
        direct_reach.push((c, directly_reachable(mdp, c)));
    }
    let h = min_checkpoint_distance_with(oracle);

    let mut report = StructureReport {
        classification: Classification::NoIntermediates,
        h,
        d0_terminal,
        d_max: None,
        direct_reach,
        owsp_order: Vec::new(),
        intermediate_count: intermediates.len(),
        violations: Vec::new(),
    };
    if intermediates.is_empty() {
        return report;
    }
    if intermediates.iter().any(|&c| oracle.distance(c, &[c]).is_finite()) {
        report.classification = Classification::Now;
        return report;
    }
    if !d0_terminal.is_finite() {
        violations.push("terminal set unreachable from the initial state".to_string());
    }

    // checkpoints reachable from one another must form a DAG
    let index: HashMap<StateId, usize> = intermediates.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut indegree = vec![0usize; intermediates.len()];
    let mut edges = vec![Vec::new(); intermediates.len()];
    for (c, reach) in report.direct_reach.iter().skip(1) {
        for t in &reach.intermediates {
            if let Some(&j) = index.get(t) {
                edges[index[c]].push(j);
                indegree[j] += 1;
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..intermediates.len()).filter(|&i| indegree[i] == 0).collect();
    let mut visited = 0;
    while let Some(i) = queue.pop_front() {
        visited += 1;
        for &j in &edges[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    if visited < intermediates.len() {
        violations.push("checkpoint graph contains a cycle".to_string());
    }

    let mut blocked = vec![false; mdp.state_count()];
    for &c in &intermediates {
        blocked[c.0] = true;
    }
    let every_one_needed = d0_terminal.is_finite()
        && intermediates.iter().all(|&c| {
            let mut blocked = vec![false; mdp.state_count()];
            blocked[c.0] = true;
            !terminal_reachable_avoiding(mdp, &blocked)
        });

    // Paths that bypass every checkpoint are allowed: the multi-path setting only
    // asks for "at least n" checkpoints, n possibly 0.
    report.classification = Classification::Owmp;
    if every_one_needed {
        let mut order = intermediates.clone();
        order.sort_by_key(|&c| oracle.distance(s0, &[c]));
        let mut legs = Vec::with_capacity(order.len() + 1);
        let mut chained = true;
        let mut prev = s0;
        for &c in &order {
            match oracle.distance(prev, &[c]) {
                Distance::Finite(d) => legs.push(d),
                Distance::Infinite => chained = false,
            }
            prev = c;
        }
        match oracle.to_terminal(prev) {
            Distance::Finite(d) => legs.push(d),
            Distance::Infinite => chained = false,
        }
        if chained {
            report.classification = Classification::Owsp;
            report.d_max = legs.into_iter().max();
            report.owsp_order = order;
        } else {
            violations.push("mandatory checkpoints do not form a chain".to_string());
        }
    }
    report.violations = violations;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{MdpBuilder, RewardScheme};

    fn inter() -> RewardScheme {
        RewardScheme::intermediate(10.0, 1.0).unwrap()
    }

    /// 0 -> 1 -> 2 -> [3] -> 4 -> 5 -> 6 -> 7 -> [8] -> 9 -> 10 -> 11 -> G(12);
    /// action 0 moves forward, action 1 moves back within a segment.
    fn owsp_chain() -> DeterministicMdp {
        let mut b = MdpBuilder::new(13, 2);
        for s in 0..12 {
            b.set_edge(s, 0, s + 1);
        }
        for s in [1, 2, 5, 6, 7, 10, 11] {
            b.set_edge(s, 1, s - 1);
        }
        // checkpoints have no way to stay put
        b.set_edge(3, 1, 4);
        b.set_edge(8, 1, 9);
        b.checkpoint(3).checkpoint(8).terminal(12).build(0.9, inter()).unwrap()
    }

    #[test]
    fn chain_distances_and_classification() {
        let mdp = owsp_chain();
        let oracle = DistanceOracle::new(&mdp);
        assert_eq!(oracle.to_terminal(StateId(0)), Distance::Finite(12));
        assert_eq!(distance(&mdp, StateId(0), &[StateId(12)]), Distance::Finite(12));
        assert_eq!(oracle.distance(StateId(3), &[StateId(3)]), Distance::Infinite);
        assert_eq!(distance(&mdp, StateId(3), &[StateId(3)]), Distance::Infinite);
        let r = directly_reachable(&mdp, StateId(0));
        assert_eq!(r.intermediates, BTreeSet::from([StateId(3)]));
        assert_eq!(r.terminal, None);
        let r = directly_reachable(&mdp, StateId(9));
        assert!(r.intermediates.is_empty());
        assert_eq!(r.terminal, Some(3));

        let rep = classify(&mdp);
        assert_eq!(rep.classification, Classification::Owsp);
        assert_eq!(rep.owsp_order, vec![StateId(3), StateId(8)]);
        assert_eq!(rep.d_max, Some(5));
        assert_eq!(rep.h, Distance::Finite(4));
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn self_distance_needs_a_loop() {
        // 0 <-> 1, 1 -> G
        let mdp = MdpBuilder::new(3, 2)
            .edge(0, 0, 1)
            .edge(1, 0, 0)
            .edge(1, 1, 2)
            .edge(0, 1, 0)
            .terminal(2)
            .build(0.9, RewardScheme::sparse(1.0).unwrap())
            .unwrap();
        let oracle = DistanceOracle::new(&mdp);
        assert_eq!(oracle.distance(StateId(0), &[StateId(0)]), Distance::Finite(1), "self-loop action");
        assert_eq!(oracle.distance(StateId(1), &[StateId(1)]), Distance::Finite(2));
        assert_eq!(distance(&mdp, StateId(1), &[StateId(1)]), Distance::Finite(2));
        assert_eq!(oracle.distance(StateId(0), &[]), Distance::Infinite);
        assert_eq!(oracle.distance(StateId(2), &[StateId(0)]), Distance::Infinite);
    }

    #[test]
    fn revisitable_bonus_is_now() {
        let mdp = MdpBuilder::new(3, 2)
            .edge(0, 0, 1)
            .edge(1, 0, 1)
            .edge(1, 1, 2)
            .checkpoint(1)
            .terminal(2)
            .build(0.9, inter())
            .unwrap();
        assert_eq!(classify(&mdp).classification, Classification::Now);
    }

    #[test]
    fn two_branches_are_owmp() {
        // s0 -> a(cp) -> G ; s0 -> x -> b(cp) -> y -> G
        let mdp = MdpBuilder::new(6, 2)
            .edge(0, 0, 1)
            .edge(1, 0, 5)
            .edge(1, 1, 5)
            .edge(3, 1, 4)
            .edge(0, 1, 2)
            .edge(2, 0, 3)
            .edge(3, 0, 4)
            .edge(4, 0, 5)
            .checkpoint(1)
            .checkpoint(3)
            .terminal(5)
            .build(0.9, inter())
            .unwrap();
        let rep = classify(&mdp);
        assert_eq!(rep.classification, Classification::Owmp);
        assert_eq!(rep.h, Distance::Finite(1));
        let r = rep.direct_reach_of(StateId(0)).unwrap();
        assert_eq!(r.intermediates, BTreeSet::from([StateId(1), StateId(3)]));
    }

    #[test]
    fn bypassable_checkpoint_is_multi_path() {
        let mdp = MdpBuilder::new(3, 2)
            .edge(0, 0, 1)
            .edge(1, 0, 2)
            .edge(1, 1, 2)
            .edge(0, 1, 2)
            .checkpoint(1)
            .terminal(2)
            .build(0.9, inter())
            .unwrap();
        let rep = classify(&mdp);
        assert_eq!(rep.classification, Classification::Owmp);
        assert!(rep.violations.is_empty());
        assert_eq!(rep.direct_reach_of(StateId(0)).unwrap().terminal, Some(1));
    }

    #[test]
    fn min_checkpoint_distance_examples() {
        // checkpoints 3 apart, checkpoint -> goal 4 apart
        let mut b = MdpBuilder::new(9, 1);
        for s in 0..8 {
            b.set_edge(s, 0, s + 1);
        }
        let mdp = b.checkpoint(1).checkpoint(4).terminal(8).build(0.9, inter()).unwrap();
        assert_eq!(min_checkpoint_distance(&mdp), Distance::Finite(3));
        // single checkpoint, goal 5 away
        let mut b = MdpBuilder::new(7, 1);
        for s in 0..6 {
            b.set_edge(s, 0, s + 1);
        }
        let mdp = b.checkpoint(1).terminal(6).build(0.9, inter()).unwrap();
        assert_eq!(min_checkpoint_distance(&mdp), Distance::Finite(5));
    }

    #[test]
    fn report_renders_key_values() {
        let text = classify(&owsp_chain()).to_string();
        assert!(text.contains("classification=OWSP\n"));
        assert!(text.contains("d_max=5\n"));
        assert!(text.contains("d0_terminal=12\n"));
    }
}
