//! One-shot pipelines behind `reproduce`: each prints a summary with reference
//! numbers beside the observed ones and returns a CSV body.

use anyhow::Result;
use clap::ValueEnum;
use hiplan::graph::{classify, DistanceOracle};
use hiplan::grid::{builtin_layout, compile, CompiledGrid};
use hiplan::planner::{closed_form_owsp, closed_form_sparse, greedy_rollout, ValueIteration};
use hiplan::qlearn::{sweep, QLearnConfig};
use hiplan::render::{position_values, render_values};
use hiplan::RewardScheme;
use serde_json::json;

use crate::output::{q_params, RunManifest, SchemeParams};
use crate::verify::chain_distances;

const TOL: f64 = 1e-9;
pub const RUNS: usize = 100;
pub const SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Target {
    TableComplexity,
    TableTradeoff,
    FigValues,
    NowExample,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::TableComplexity => "table_complexity",
            Target::TableTradeoff => "table_tradeoff",
            Target::FigValues => "fig_values",
            Target::NowExample => "now_example",
        }
    }
}

pub struct Reproduction {
    pub csv: Vec<u8>,
    pub manifest: RunManifest,
    /// False when an exact check inside the pipeline failed.
    pub ok: bool,
}

fn builtin(name: &str) -> CompiledGrid {
    compile(&builtin_layout(name).expect("built-in layouts parse")).expect("and compile")
}

fn params(name: &str, m: &hiplan::DeterministicMdp) -> SchemeParams {
    let s = m.scheme();
    SchemeParams {
        name: name.to_string(),
        terminal_reward: s.terminal_reward(),
        intermediate_reward: s.intermediate_reward(),
        gamma: m.gamma(),
    }
}

fn vi_values(m: &hiplan::DeterministicMdp, k: usize) -> Vec<f64> {
    let mut vi = ValueIteration::new(m);
    vi.run_to(k);
    vi.values().to_vec()
}

pub fn run(target: Target) -> Result<Reproduction> {
    match target {
        Target::TableComplexity => table_complexity(),
        Target::TableTradeoff => table_tradeoff(),
        Target::FigValues => fig_values(),
        Target::NowExample => now_example(),
    }
}

fn table_complexity() -> Result<Reproduction> {
    // (layout, checkpoints, reference sparse wins, reference intermediate wins)
    let plan: [(&str, [usize; 4], [usize; 4], [usize; 4]); 2] = [
        ("maze7_inter", [18, 24, 30, 36], [6, 7, 6, 10], [59, 82, 95, 100]),
        ("door3", [40, 80, 120, 160], [3, 10, 43, 74], [90, 100, 100, 100]),
    ];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["layout", "episodes", "scheme", "wins", "trials", "reference_wins"])?;
    let mut manifest = RunManifest::new("maze7_inter,door3", "complexity/1");
    manifest.seeds = (SEED..SEED + RUNS as u64).collect();
    println!("{:<12} {:>8} {:>16} {:>16}", "layout", "episodes", "sparse (ref)", "intermediate (ref)");
    for (name, checkpoints, ref_sparse, ref_inter) in plan {
        let g = builtin(name);
        let inter = g.mdp.clone();
        let sparse = inter.apply_reward_scheme(RewardScheme::sparse(inter.scheme().terminal_reward())?);
        let cfg = QLearnConfig { max_steps: g.spec.max_steps, ..QLearnConfig::default() };
        let rs = sweep(&sparse, &cfg, &checkpoints, RUNS, SEED);
        let ri = sweep(&inter, &cfg, &checkpoints, RUNS, SEED);
        manifest.schemes.push(params(&format!("{name} sparse"), &sparse));
        manifest.schemes.push(params(&format!("{name} intermediate"), &inter));
        for (i, &c) in checkpoints.iter().enumerate() {
            let (s, n) = (rs.stats_at(c), ri.stats_at(c));
            w.write_record([name, &c.to_string(), "sparse", &s.wins.to_string(), &s.trials.to_string(), &ref_sparse[i].to_string()])?;
            w.write_record([name, &c.to_string(), "intermediate", &n.wins.to_string(), &n.trials.to_string(), &ref_inter[i].to_string()])?;
            println!(
                "{name:<12} {c:>8} {:>16} {:>16}",
                format!("{}/{} ({})", s.wins, s.trials, ref_sparse[i]),
                format!("{}/{} ({})", n.wins, n.trials, ref_inter[i])
            );
        }
    }
    manifest.parameters = json!({ "runs": RUNS, "q": q_params(&QLearnConfig::default()) });
    Ok(Reproduction { csv: w.into_inner()?, manifest, ok: true })
}

fn table_tradeoff() -> Result<Reproduction> {
    let checkpoints = [50, 150, 350, 750, 1550, 3150];
    // reference (wins, mean steps) per checkpoint for B=10 and B=1000
    let reference: [[(usize, f64); 6]; 2] = [
        [(64, 95.52), (99, 24.71), (100, 22.65), (100, 22.85), (100, 23.36), (100, 24.0)],
        [(71, 84.39), (100, 22.53), (100, 20.88), (100, 19.39), (100, 12.95), (100, 12.23)],
    ];
    let g = builtin("door4");
    let b_i = g.mdp.scheme().intermediate_reward().unwrap_or(2.0);
    let cfg = QLearnConfig { max_steps: g.spec.max_steps, ..QLearnConfig::default() };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "episodes",
        "terminal_reward",
        "wins",
        "trials",
        "mean_reward",
        "std_reward",
        "mean_steps",
        "std_steps",
        "reference_wins",
        "reference_steps",
    ])?;
    let mut manifest = RunManifest::new("door4", "tradeoff/1");
    manifest.seeds = (SEED..SEED + RUNS as u64).collect();
    println!("{:>8} {:>6} {:>10} {:>22} {:>10}", "episodes", "B", "wins", "steps", "ref steps");
    for (b, refs) in [10.0, 1000.0].into_iter().zip(reference) {
        let m = g.mdp.apply_reward_scheme(RewardScheme::intermediate(b, b_i)?);
        manifest.schemes.push(params(&format!("B={b}"), &m));
        let r = sweep(&m, &cfg, &checkpoints, RUNS, SEED);
        for (&c, (ref_wins, ref_steps)) in checkpoints.iter().zip(refs) {
            let s = r.stats_at(c);
            w.write_record([
                c.to_string(),
                b.to_string(),
                s.wins.to_string(),
                s.trials.to_string(),
                format!("{:.4}", s.mean_reward),
                format!("{:.4}", s.std_reward),
                format!("{:.4}", s.mean_steps),
                format!("{:.4}", s.std_steps),
                ref_wins.to_string(),
                ref_steps.to_string(),
            ])?;
            println!(
                "{c:>8} {b:>6} {:>10} {:>22} {ref_steps:>10}",
                format!("{}/{}", s.wins, s.trials),
                format!("{:.2} ± {:.2}", s.mean_steps, s.std_steps)
            );
        }
    }
    manifest.parameters = json!({ "runs": RUNS, "q": q_params(&QLearnConfig::default()) });
    Ok(Reproduction { csv: w.into_inner()?, manifest, ok: true })
}

fn fig_values() -> Result<Reproduction> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["layout", "k", "x", "y", "value", "closed_form"])?;
    let mut manifest = RunManifest::new("fig_sparse_4x4,fig_owsp_4x4", "fig-values/1");
    let mut ok = true;
    let panels: [(&str, &[usize]); 2] = [("fig_sparse_4x4", &[0, 1, 2, 8]), ("fig_owsp_4x4", &[1, 2, 3])];
    for (name, ks) in panels {
        let g = builtin(name);
        let m = &g.mdp;
        manifest.schemes.push(params(name, m));
        let oracle = DistanceOracle::new(m);
        let order = classify(m).owsp_order;
        let scheme = m.scheme();
        let (b, b_i) = (scheme.terminal_reward(), scheme.intermediate_reward());
        for &k in ks {
            let observed = vi_values(m, k);
            let predicted: Vec<f64> = m
                .states()
                .map(|s| match b_i {
                    None => closed_form_sparse(k, oracle.to_terminal(s).finite().unwrap_or(usize::MAX), b, m.gamma()),
                    Some(b_i) => closed_form_owsp(k, &chain_distances(&oracle, &order, s), b_i, b, m.gamma()),
                })
                .collect();
            let (obs, want) = (position_values(&g, &observed), position_values(&g, &predicted));
            let mut mismatches = 0;
            for y in 0..g.spec.height {
                for x in 0..g.spec.width {
                    if let (Some(o), Some(p)) = (obs[y][x], want[y][x]) {
                        if (o - p).abs() > TOL {
                            mismatches += 1;
                        }
                        w.write_record([name, &k.to_string(), &x.to_string(), &y.to_string(), &o.to_string(), &p.to_string()])?;
                    }
                }
            }
            ok &= mismatches == 0;
            let status = if mismatches == 0 { "matches closed form" } else { "MISMATCH" };
            println!("{name} k={k}: {status}\n{}", render_values(&g, &observed, 2));
        }
    }
    println!("reference: start cell at k=8 is gamma^7 B = {:.4}; cell behind both gates at k=3 is B_I + gamma^2 B_I = 1.81", 0.9f64.powi(7) * 10.0);
    Ok(Reproduction { csv: w.into_inner()?, manifest, ok })
}

fn now_example() -> Result<Reproduction> {
    let g = builtin("fig_now_2x2");
    let m = &g.mdp;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "x", "y", "value"])?;
    let mut manifest = RunManifest::new("fig_now_2x2", "now-example/1");
    manifest.schemes.push(params("fig_now_2x2", m));
    for k in [1, 2] {
        let values = vi_values(m, k);
        let cells = position_values(&g, &values);
        for (y, row) in cells.iter().enumerate() {
            for (x, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    w.write_record([k.to_string(), x.to_string(), y.to_string(), v.to_string()])?;
                }
            }
        }
        println!("k={k}\n{}", render_values(&g, &values, 1));
    }
    println!("reference figure values: 100, 10 and 90");
    let mut vi = ValueIteration::new(m);
    vi.run_to(2);
    let trace = greedy_rollout(m, &vi.q_table(), 50);
    let cells: Vec<String> = trace
        .states
        .iter()
        .map(|&s| {
            let (x, y) = g.position_of(s);
            format!("({x},{y})")
        })
        .collect();
    println!(
        "greedy at k=2, horizon 50: success={} cycle_start={:?}\n{}",
        trace.success,
        trace.cycle_start,
        cells.join(" ")
    );
    Ok(Reproduction { csv: w.into_inner()?, manifest, ok: true })
}
