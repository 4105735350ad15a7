//! Independent oracles shared by the integration suites. Nothing here calls into
//! the library's own distance code.
#![allow(dead_code)]

use std::collections::VecDeque;

use hiplan::grid::{builtin_layout, builtin_names, compile, CompiledGrid};
use hiplan::{ActionId, DeterministicMdp, StateId};

/// Forward BFS from `from`; entry `t` is the fewest actions (at least one) that
/// reach `t`. Terminal states are not expanded.
pub fn bfs(mdp: &DeterministicMdp, from: StateId) -> Vec<Option<usize>> {
    let n = mdp.state_count();
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    if mdp.is_terminal(from) {
        return dist;
    }
    for a in 0..mdp.action_count() {
        let t = mdp.transition(from, ActionId(a));
        if dist[t.0].is_none() {
            dist[t.0] = Some(1);
            queue.push_back(t);
        }
    }
    while let Some(s) = queue.pop_front() {
        if mdp.is_terminal(s) {
            continue;
        }
        let d = dist[s.0].unwrap();
        for a in 0..mdp.action_count() {
            let t = mdp.transition(s, ActionId(a));
            if dist[t.0].is_none() {
                dist[t.0] = Some(d + 1);
                queue.push_back(t);
            }
        }
    }
    dist
}

pub fn dist_to(mdp: &DeterministicMdp, from: StateId, targets: &[StateId]) -> Option<usize> {
    let d = bfs(mdp, from);
    targets.iter().filter_map(|t| d[t.0]).min()
}

/// BFS that refuses to pass through checkpoints: distances to every state whose
/// shortest route has no checkpoint strictly inside it.
pub fn direct_bfs(mdp: &DeterministicMdp, from: StateId) -> Vec<Option<usize>> {
    let n = mdp.state_count();
    let mut dist = vec![None; n];
    let mut queue = VecDeque::from([(from, 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        if mdp.is_terminal(s) || (d > 0 && mdp.is_checkpoint(s)) {
            continue;
        }
        for a in 0..mdp.action_count() {
            let t = mdp.transition(s, ActionId(a));
            if dist[t.0].is_none() {
                dist[t.0] = Some(d + 1);
                queue.push_back((t, d + 1));
            }
        }
    }
    dist
}

/// Cumulative distances from `s` to each checkpoint of `order` still ahead of it,
/// followed by the distance to the terminal set. Empty when the terminal set is
/// unreachable.
pub fn chain_distances(mdp: &DeterministicMdp, order: &[StateId], s: StateId) -> Vec<usize> {
    let terminals = mdp.terminal_states();
    let ahead: Vec<StateId> = order.iter().copied().filter(|&c| dist_to(mdp, s, &[c]).is_some()).collect();
    let mut out = Vec::new();
    let mut acc = 0;
    let mut at = s;
    for c in ahead {
        acc += dist_to(mdp, at, &[c]).unwrap();
        out.push(acc);
        at = c;
    }
    match dist_to(mdp, at, &terminals) {
        Some(d) => {
            out.push(acc + d);
            out
        }
        None => Vec::new(),
    }
}

/// Synchronous value iteration written out directly: the sequence `V_0 .. V_k`.
pub fn vi_sequence(mdp: &DeterministicMdp, k: usize) -> Vec<Vec<f64>> {
    let n = mdp.state_count();
    let mut out = vec![vec![0.0; n]];
    for _ in 0..k {
        let prev = out.last().unwrap();
        let next = (0..n)
            .map(|s| {
                let s = StateId(s);
                if mdp.is_terminal(s) {
                    return 0.0;
                }
                mdp.actions()
                    .map(|a| mdp.reward(s, a) + mdp.gamma() * prev[mdp.transition(s, a).0])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        out.push(next);
    }
    out
}

pub fn builtins() -> Vec<(&'static str, CompiledGrid)> {
    builtin_names().map(|n| (n, compile(&builtin_layout(n).unwrap()).unwrap())).collect()
}

pub fn builtin(name: &str) -> CompiledGrid {
    compile(&builtin_layout(name).unwrap()).unwrap()
}
