//! The `verify` suites: propositions and closed-form lemmas over the built-in
//! layouts and seeded random instances.

use clap::ValueEnum;
use hiplan::graph::{classify, DistanceOracle};
use hiplan::grid::{builtin_layout, builtin_names, compile};
use hiplan::instances::{random_owmp, random_owsp_chain, theorem1_suite};
use hiplan::planner::{
    closed_form_direct_reachable, closed_form_owsp, closed_form_sparse, verify_proposition, Proposition,
    ValueIteration, VerificationOutcome,
};
use hiplan::{DeterministicMdp, RewardScheme, StateId};

const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Propositions,
    Theorem1,
    Theorem2,
    Lemmas,
    All,
}

#[derive(Debug, Default)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl Tally {
    fn record(&mut self, instance: &str, out: &VerificationOutcome) {
        if out.passed() {
            self.passed += 1;
        } else if out.skipped() {
            self.skipped += 1;
        } else {
            self.failed += 1;
        }
        println!("{out} [{instance}]");
    }

    fn record_lemma(&mut self, family: &str, checks: usize, bad: &[String]) {
        if bad.is_empty() {
            self.passed += 1;
            println!("PASS lemma {family} checks={checks}");
        } else {
            self.failed += 1;
            println!("FAIL lemma {family} checks={checks} ({} mismatches, first: {})", bad.len(), bad[0]);
        }
    }
}

fn builtins() -> Vec<(&'static str, DeterministicMdp)> {
    builtin_names()
        .map(|n| (n, compile(&builtin_layout(n).expect("built-in layouts parse")).expect("and compile").mdp))
        .collect()
}

fn sparse_of(m: &DeterministicMdp) -> DeterministicMdp {
    m.apply_reward_scheme(RewardScheme::sparse(m.scheme().terminal_reward()).expect("positive reward"))
}

fn check(tally: &mut Tally, instance: &str, m: &DeterministicMdp, which: Proposition) {
    let out = verify_proposition(m, &classify(m), which);
    tally.record(instance, &out);
}

pub fn run(suite: Suite, instances: usize, seed: u64) -> Tally {
    let mut tally = Tally::default();
    let all = suite == Suite::All;
    if all || suite == Suite::Propositions {
        propositions(&mut tally, instances, seed);
    }
    if all || suite == Suite::Theorem1 {
        theorem(&mut tally, Proposition::ClosestCheckpoint, instances, seed);
    }
    if all || suite == Suite::Theorem2 {
        theorem(&mut tally, Proposition::ShortestToTerminal, instances, seed);
    }
    if all || suite == Suite::Lemmas {
        lemmas(&mut tally, instances, seed);
    }
    println!("passed={} failed={} skipped={}", tally.passed, tally.failed, tally.skipped);
    tally
}

fn propositions(tally: &mut Tally, instances: usize, seed: u64) {
    for (name, m) in builtins() {
        check(tally, &format!("{name} sparse"), &sparse_of(&m), Proposition::SparseComplexity);
        check(tally, name, &m, Proposition::OwspComplexity);
    }
    for i in 0..instances as u64 {
        let chain = random_owsp_chain(seed + i, 0.9, RewardScheme::intermediate(10.0, 1.0).expect("positive"));
        let label = format!("chain seed={}", seed + i);
        check(tally, &format!("{label} sparse"), &sparse_of(&chain.mdp), Proposition::SparseComplexity);
        check(tally, &label, &chain.mdp, Proposition::OwspComplexity);
    }
}

fn theorem(tally: &mut Tally, which: Proposition, instances: usize, seed: u64) {
    for (name, m) in builtins() {
        check(tally, name, &m, which);
    }
    for inst in theorem1_suite(instances, seed) {
        check(tally, &format!("multi-path seed={} h={}", inst.seed, inst.h), &inst.mdp, which);
    }
    // large discount: the ratio window is empty and the gate must say so
    let scheme = RewardScheme::intermediate(1.0, 1.0).expect("positive");
    let inst = random_owmp(seed, 0.9, 2, false, scheme);
    check(tally, &format!("multi-path seed={} gamma=0.9 h=2", inst.seed), &inst.mdp, which);
}

/// Value sequence `V_0 ..= V_horizon`.
fn value_history(m: &DeterministicMdp, horizon: usize) -> Vec<Vec<f64>> {
    let mut vi = ValueIteration::new(m);
    let mut out = vec![vi.values().to_vec()];
    for _ in 0..horizon {
        vi.sweep();
        out.push(vi.values().to_vec());
    }
    out
}

/// Cumulative distances from `s` through every checkpoint of `order` still ahead of
/// it, ending at the terminal set. Empty when the terminal set is unreachable.
pub fn chain_distances(oracle: &DistanceOracle<'_>, order: &[StateId], s: StateId) -> Vec<usize> {
    let mut out = Vec::new();
    let mut acc = 0;
    let mut at = s;
    for &c in order {
        if let Some(d) = oracle.distance(at, &[c]).finite() {
            acc += d;
            out.push(acc);
            at = c;
        }
    }
    match oracle.to_terminal(at).finite() {
        Some(d) => {
            out.push(acc + d);
            out
        }
        None => Vec::new(),
    }
}

fn infinite(d: Option<usize>) -> usize {
    d.unwrap_or(usize::MAX)
}

fn lemmas(tally: &mut Tally, instances: usize, seed: u64) {
    let (mut sparse_checks, mut sparse_bad) = (0, Vec::new());
    let (mut owsp_checks, mut owsp_bad) = (0, Vec::new());
    let (mut direct_checks, mut direct_bad) = (0, Vec::new());

    let mut sparse_case = |label: &str, m: &DeterministicMdp, horizon: usize| {
        let oracle = DistanceOracle::new(m);
        let b = m.scheme().terminal_reward();
        for (k, v) in value_history(m, horizon).iter().enumerate() {
            for s in m.states().filter(|&s| !m.is_terminal(s)) {
                sparse_checks += 1;
                let want = closed_form_sparse(k, infinite(oracle.to_terminal(s).finite()), b, m.gamma());
                if (v[s.0] - want).abs() > TOL {
                    sparse_bad.push(format!("{label} s={s} k={k}"));
                }
            }
        }
    };

    let chains: Vec<_> = (0..instances as u64)
        .map(|i| random_owsp_chain(seed + i, 0.9, RewardScheme::intermediate(10.0, 1.0).expect("positive")))
        .collect();
    let mut owsp_cases: Vec<(String, DeterministicMdp, Vec<StateId>)> =
        chains.iter().map(|c| (format!("chain seed={}", c.seed), c.mdp.clone(), c.order.clone())).collect();
    for name in ["fig_owsp_4x4", "maze7_inter"] {
        let m = compile(&builtin_layout(name).expect("built-in")).expect("compiles").mdp;
        let order = classify(&m).owsp_order;
        owsp_cases.push((name.to_string(), m, order));
    }
    for (label, m, order) in &owsp_cases {
        let oracle = DistanceOracle::new(m);
        let dists: Vec<Vec<usize>> = m.states().map(|s| chain_distances(&oracle, order, s)).collect();
        let horizon = dists.iter().filter_map(|d| d.last()).max().copied().unwrap_or(0) + 2;
        let scheme = m.scheme();
        let (b, b_i) = (scheme.terminal_reward(), scheme.intermediate_reward().unwrap_or(0.0));
        for (k, v) in value_history(m, horizon).iter().enumerate() {
            for s in m.states().filter(|&s| !m.is_terminal(s)) {
                owsp_checks += 1;
                let want = closed_form_owsp(k, &dists[s.0], b_i, b, m.gamma());
                if (v[s.0] - want).abs() > TOL {
                    owsp_bad.push(format!("{label} s={s} k={k}"));
                }
            }
        }
        sparse_case(label, &sparse_of(m), horizon);
    }
    for name in ["fig_sparse_4x4", "maze7_sparse"] {
        let m = compile(&builtin_layout(name).expect("built-in")).expect("compiles").mdp;
        sparse_case(name, &m, 60);
    }

    for inst in theorem1_suite(instances, seed + 5000) {
        let m = &inst.mdp;
        let label = format!("multi-path seed={}", inst.seed);
        let scheme = m.scheme();
        let (b, b_i) = (scheme.terminal_reward(), scheme.intermediate_reward().expect("intermediate scheme"));
        let horizon = 60;
        sparse_case(&label, &sparse_of(m), horizon);
        let oracle = DistanceOracle::new(m);
        let terminals = m.terminal_states();
        let checkpoints = m.checkpoint_states();
        let history = value_history(m, horizon);
        for s in m.states().filter(|&s| !m.is_terminal(s)) {
            let Some(d) = oracle.direct_distance(s, &terminals).finite() else { continue };
            let d_i = infinite(oracle.direct_distance(s, &checkpoints).finite());
            // the form holds while the far side of the nearest checkpoint is still invisible
            let k_end = d_i.saturating_add(inst.h).min(horizon + 1);
            for (k, v) in history.iter().enumerate().take(k_end) {
                direct_checks += 1;
                let want = closed_form_direct_reachable(k, d_i, d, b_i, b, m.gamma());
                if (v[s.0] - want).abs() > TOL {
                    direct_bad.push(format!("{label} s={s} k={k}"));
                }
            }
        }
    }

    tally.record_lemma("sparse", sparse_checks, &sparse_bad);
    tally.record_lemma("owsp", owsp_checks, &owsp_bad);
    tally.record_lemma("direct-reachable", direct_checks, &direct_bad);
}
