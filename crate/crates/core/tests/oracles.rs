mod common;

use std::collections::BTreeSet;

use common::{bfs, builtin, builtins, direct_bfs, dist_to, vi_sequence};
use hiplan::graph::{classify, directly_reachable, distance, Classification, Distance, DistanceOracle};
use hiplan::planner::{minimal_successful_k_with_trace, value_iteration, ValueIteration};
use hiplan::qlearn::{evaluate, sweep, QLearnConfig};
use hiplan::{RewardScheme, StateId};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[test]
fn distances_agree_with_bfs_on_every_builtin() {
    for (name, g) in builtins() {
        let m = &g.mdp;
        let oracle = DistanceOracle::new(m);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        for _ in 0..50 {
            let s = StateId(rng.gen_range(0..m.state_count()));
            let t = StateId(rng.gen_range(0..m.state_count()));
            let want = bfs(m, s)[t.0];
            let got = distance(m, s, &[t]);
            assert_eq!(got.finite(), want, "{name}: D({s},{t})");
            assert_eq!(oracle.distance(s, &[t]).finite(), want, "{name}: cached D({s},{t})");
        }
    }
}

#[test]
fn terminal_distance_agrees_with_bfs_from_every_state() {
    for name in ["fig_sparse_4x4", "fig_owsp_4x4", "maze7_inter", "door3"] {
        let g = builtin(name);
        let m = &g.mdp;
        let oracle = DistanceOracle::new(m);
        let terminals = m.terminal_states();
        for s in m.states().filter(|&s| !m.is_terminal(s)) {
            assert_eq!(oracle.to_terminal(s).finite(), dist_to(m, s, &terminals), "{name}: {s}");
        }
    }
}

#[test]
fn direct_reach_agrees_with_restricted_bfs() {
    for name in ["fig_owsp_4x4", "door3", "door4", "fig_tradeoff_4x4"] {
        let g = builtin(name);
        let m = &g.mdp;
        for s in m.states().filter(|&s| !m.is_terminal(s)).step_by(7) {
            let want = direct_bfs(m, s);
            let got = directly_reachable(m, s);
            let want_set: BTreeSet<StateId> =
                m.checkpoint_states().into_iter().filter(|c| want[c.0].is_some()).collect();
            assert_eq!(got.intermediates, want_set, "{name}: {s}");
            for (c, d) in &got.distances {
                assert_eq!(Some(*d), want[c.0], "{name}: {s} -> {c}");
            }
            let want_t = m.terminal_states().iter().filter_map(|t| want[t.0]).min();
            assert_eq!(got.terminal, want_t, "{name}: {s} -> S_T");
        }
    }
}

#[test]
fn door3_start_reaches_exactly_the_three_first_keys() {
    let g = builtin("door3");
    let reach = directly_reachable(&g.mdp, g.mdp.initial_state());
    assert_eq!(reach.intermediates.len(), 3);
    assert!(reach.terminal.is_none());
    let mut letters = BTreeSet::new();
    for &c in &reach.intermediates {
        let label = g.label(c);
        assert!(label.arrived);
        let picked: Vec<char> = (0..g.spec.height)
            .flat_map(|y| (0..g.spec.width).map(move |x| (x, y)))
            .filter_map(|(x, y)| match g.spec.cell(x, y) {
                hiplan::grid::CellKind::Key(k) if label.mask.contains(g.bit_at(x, y).unwrap()) => Some(k),
                _ => None,
            })
            .collect();
        assert_eq!(picked.len(), 1, "exactly one key held at {c}");
        assert_eq!(label.mask.count(), 1, "nothing but the key consumed at {c}");
        letters.insert(picked[0]);
    }
    assert_eq!(letters, BTreeSet::from(['a', 'b', 'c']));
}

#[test]
fn builtin_classifications() {
    let expect = [
        ("fig_sparse_4x4", Classification::NoIntermediates),
        ("fig_owsp_4x4", Classification::Owsp),
        ("fig_now_2x2", Classification::Now),
        ("maze7_inter", Classification::Owsp),
        ("maze7_sparse", Classification::NoIntermediates),
        ("door3", Classification::Owmp),
        ("door4", Classification::Owmp),
        ("fig_tradeoff_4x4", Classification::Owmp),
    ];
    for (name, want) in expect {
        let r = classify(&builtin(name).mdp);
        assert_eq!(r.classification, want, "{name}");
        assert!(r.violations.is_empty(), "{name}: {:?}", r.violations);
    }
}

#[test]
fn owsp_checkpoint_deletion_disconnects_the_goal() {
    let g = builtin("fig_owsp_4x4");
    let m = &g.mdp;
    let terminals = m.terminal_states();
    for c in m.checkpoint_states() {
        // a route to S_T that never steps on c
        let mut seen = vec![false; m.state_count()];
        let mut stack = vec![m.initial_state()];
        seen[m.initial_state().0] = true;
        let mut reached = false;
        while let Some(s) = stack.pop() {
            if m.is_terminal(s) {
                reached = true;
                break;
            }
            for a in m.actions() {
                let t = m.transition(s, a);
                if t != c && !seen[t.0] {
                    seen[t.0] = true;
                    stack.push(t);
                }
            }
        }
        assert!(!reached, "S_T reachable around {c}");
        assert!(dist_to(m, m.initial_state(), &terminals).is_some());
    }
}

#[test]
fn value_iteration_matches_a_direct_implementation() {
    for (name, g) in builtins() {
        let k = 30;
        let want = vi_sequence(&g.mdp, k);
        let mut vi = ValueIteration::new(&g.mdp);
        for (i, w) in want.iter().enumerate() {
            if i > 0 {
                vi.sweep();
            }
            for (a, b) in vi.values().iter().zip(w) {
                assert!((a - b).abs() < 1e-9, "{name} k={i}");
            }
        }
    }
}

#[test]
fn sparse_success_follows_a_shortest_path() {
    for (name, g) in builtins() {
        let m = g.mdp.apply_reward_scheme(RewardScheme::sparse(10.0).unwrap());
        let d0 = dist_to(&m, m.initial_state(), &m.terminal_states()).unwrap();
        let (k, trace) = minimal_successful_k_with_trace(&m, 200, 400).expect(name);
        // lowest-index tie-breaking can walk zero-valued corridors early
        assert!(k <= d0, "{name}");
        assert_eq!(trace.steps, d0, "{name}");
    }
}

#[test]
fn door4_product_states_are_all_reachable() {
    let g = builtin("door4");
    let m = &g.mdp;
    let from_start = bfs(m, m.initial_state());
    for s in m.states().filter(|&s| s != m.initial_state()) {
        assert!(from_start[s.0].is_some(), "{s} unreachable");
    }
    assert!(m.state_count() > 100 && m.state_count() < 1 << 20);
    let h = classify(m).h;
    assert_eq!(h, Distance::Finite(2));
}

#[test]
fn planned_q_wins_every_trial_on_the_maze() {
    let g = builtin("maze7_inter");
    let d0 = dist_to(&g.mdp, g.mdp.initial_state(), &g.mdp.terminal_states()).unwrap();
    let (_, q) = value_iteration(&g.mdp, 4 * g.mdp.state_count());
    let stats = evaluate(&g.mdp, &q, 10, g.spec.max_steps);
    assert_eq!(stats.wins, 10);
    assert_eq!(stats.mean_steps, d0 as f64);
}

#[test]
fn door3_intermediate_rewards_speed_up_learning() {
    let inter = builtin("door3");
    let sparse = inter.mdp.apply_reward_scheme(RewardScheme::sparse(10.0).unwrap());
    let cfg = QLearnConfig { max_steps: inter.spec.max_steps, ..QLearnConfig::default() };
    let checkpoints = [40, 80, 120, 160];
    let with = sweep(&inter.mdp, &cfg, &checkpoints, 100, 0);
    let without = sweep(&sparse, &cfg, &checkpoints, 100, 0);
    assert_eq!(with.stats_at(80).wins, 100);
    for c in checkpoints {
        assert!(with.stats_at(c).wins >= without.stats_at(c).wins, "checkpoint {c}");
    }
    assert!(without.stats_at(40).wins < 50);
}
