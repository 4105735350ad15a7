//! Seeded generators for one-way checkpoint MDPs.
//!
//! Chains pass every checkpoint in a fixed order; layered instances form a DAG of
//! checkpoints joined by corridors with a guaranteed minimum length.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::mdp::{DeterministicMdp, MdpBuilder, RewardScheme, StateId};

/// Hard cap on generated state counts.
pub const MAX_STATES: usize = 200;

/// A single-path instance with its checkpoint order.
#[derive(Clone, Debug)]
pub struct OwspChain {
    pub mdp: DeterministicMdp,
    pub order: Vec<StateId>,
    pub seed: u64,
}

/// A multi-path instance generated around a minimum corridor length `h`.
#[derive(Clone, Debug)]
pub struct OwmpInstance {
    pub mdp: DeterministicMdp,
    pub h: usize,
    pub seed: u64,
}

struct Graph {
    edges: Vec<Vec<usize>>,
    spans: Vec<usize>,
}

impl Graph {
    fn new() -> Self {
        Self { edges: Vec::new(), spans: Vec::new() }
    }

    fn add(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    /// Appends a corridor of `len` edges from `from` to `to`; interior states are fresh.
    fn corridor(&mut self, from: usize, to: usize, len: usize) {
        self.spans.push(len);
        let mut prev = from;
        for _ in 1..len {
            let s = self.add();
            self.edges[prev].push(s);
            prev = s;
        }
        self.edges[prev].push(to);
    }

    /// Pads every row to the widest out-degree. Checkpoints repeat their first
    /// exit so no checkpoint ever loops onto itself; other states stay put.
    fn build(
        self,
        checkpoints: &[usize],
        terminal: usize,
        gamma: f64,
        scheme: RewardScheme,
    ) -> DeterministicMdp {
        let n = self.edges.len();
        let actions = self.edges.iter().map(Vec::len).max().unwrap_or(1).max(2);
        let mut b = MdpBuilder::new(n, actions);
        for (s, out) in self.edges.iter().enumerate() {
            for (a, &t) in out.iter().enumerate() {
                b.set_edge(s, a, t);
            }
            if checkpoints.contains(&s) {
                for a in out.len()..actions {
                    b.set_edge(s, a, out[0]);
                }
            }
        }
        let b = checkpoints.iter().fold(b.initial(0).terminal(terminal), |b, &c| b.checkpoint(c));
        b.build(gamma, scheme).expect("generated MDPs are well formed")
    }
}

/// A random single-path chain: checkpoints in a fixed order along a main path,
/// optional detours that rejoin before the next checkpoint, and dead-end sinks.
pub fn random_owsp_chain(seed: u64, gamma: f64, scheme: RewardScheme) -> OwspChain {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let m = rng.gen_range(1..=6);
    let legs: Vec<usize> = (0..=m).map(|_| rng.gen_range(1..=10)).collect();
    let mut g = Graph::new();
    // main path p_0 .. p_L, p_0 = start, p_L = terminal
    let total: usize = legs.iter().sum();
    let path: Vec<usize> = (0..=total).map(|_| g.add()).collect();
    let mut order = Vec::new();
    let mut at = 0;
    for &leg in &legs[..m] {
        at += leg;
        order.push(path[at]);
    }
    let next_checkpoint = |i: usize| order.iter().copied().find(|&c| c > i).unwrap_or(total);
    for i in 0..total {
        g.edges[path[i]].push(path[i + 1]);
    }
    for i in 0..total {
        if order.contains(&path[i]) || g.edges.len() + 4 > MAX_STATES {
            continue;
        }
        let roll: f64 = rng.gen();
        if roll < 0.3 {
            let ahead = next_checkpoint(i) - i;
            let j = rng.gen_range(1..=ahead);
            let len = rng.gen_range(1..=4);
            g.corridor(path[i], path[i + j], len);
        } else if roll < 0.4 {
            let sink = g.add();
            g.edges[path[i]].push(sink);
        }
    }
    let mdp = g.build(&order, path[total], gamma, scheme);
    OwspChain { mdp, order: order.into_iter().map(StateId).collect(), seed }
}

/// A random layered instance: checkpoints in up to three layers, each joined to
/// later layers or the terminal by corridors of at least `h` steps. The start
/// reaches at least two checkpoints directly and, when `bypass` is set, the
/// terminal as well.
pub fn random_owmp(seed: u64, gamma: f64, h: usize, bypass: bool, scheme: RewardScheme) -> OwmpInstance {
    assert!(h >= 1, "minimum corridor length must be positive");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut g = Graph::new();
    let start = g.add();
    let terminal = g.add();
    let layer_count = rng.gen_range(1..=3);
    let layers: Vec<Vec<usize>> = (0..layer_count)
        .map(|i| {
            let lo = if i == 0 { 2 } else { 1 };
            (0..rng.gen_range(lo..=3)).map(|_| g.add()).collect()
        })
        .collect();
    let checkpoints: Vec<usize> = layers.iter().flatten().copied().collect();
    let span = |rng: &mut Xoshiro256PlusPlus| rng.gen_range(h..=h + 4);

    for &c in &layers[0] {
        let len = rng.gen_range(1..=h + 4);
        g.corridor(start, c, len);
    }
    if bypass {
        let len = rng.gen_range(h..=3 * h + 6);
        g.corridor(start, terminal, len);
    }
    g.spans.clear();
    for (i, layer) in layers.iter().enumerate() {
        let later: Vec<usize> = layers[i + 1..].iter().flatten().copied().collect();
        // every later checkpoint needs an entry from somewhere earlier
        if let Some(next) = layers.get(i + 1) {
            for &c in next {
                let from = *layer.choose(&mut rng).expect("layers are non-empty");
                let len = span(&mut rng);
                g.corridor(from, c, len);
            }
        }
        for &c in layer {
            if later.is_empty() || rng.gen_bool(0.4) {
                let len = span(&mut rng);
                g.corridor(c, terminal, len);
            }
            if !later.is_empty() && rng.gen_bool(0.5) {
                let to = *later.choose(&mut rng).expect("non-empty");
                let len = span(&mut rng);
                g.corridor(c, to, len);
            }
            if g.edges[c].is_empty() {
                let len = span(&mut rng);
                g.corridor(c, terminal, len);
            }
        }
    }
    if !g.spans.contains(&h) {
        let last = *checkpoints.last().expect("at least two checkpoints");
        g.corridor(last, terminal, h);
    }
    let mdp = g.build(&checkpoints, terminal, gamma, scheme);
    OwmpInstance { mdp, h, seed }
}

/// Instances for the closest-checkpoint property: `γ ∈ {0.3, 0.4, 0.5}`,
/// `γ + γ^h <= 1`, and `B / B_I` drawn inside the ratio window.
pub fn theorem1_suite(count: usize, base_seed: u64) -> Vec<OwmpInstance> {
    (0..count as u64)
        .map(|i| {
            let seed = base_seed + i;
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let gamma = [0.3, 0.4, 0.5][rng.gen_range(0..3)];
            let h = rng.gen_range(1..=3);
            let upper = 1.0 / (1.0 - gamma_pow(gamma, h));
            let b_i = 1.0;
            let b = upper * rng.gen_range(0.1..0.9);
            let bypass = rng.gen_bool(0.3);
            random_owmp(seed, gamma, h, bypass, RewardScheme::intermediate(b, b_i).expect("positive rewards"))
        })
        .collect()
}

fn gamma_pow(gamma: f64, h: usize) -> f64 {
    gamma.powi(h as i32)
}
