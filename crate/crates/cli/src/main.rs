//! `hiplan`: inspect layouts, plan with value iteration, verify the complexity
//! results and run Q-learning experiments.
//!
//! Exit codes: 0 success, 1 I/O, 2 usage or parse error, 3 verification failure.

mod layout;
mod output;
mod reproduce;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hiplan::graph::classify;
use hiplan::grid::CompiledGrid;
use hiplan::planner::ValueIteration;
use hiplan::qlearn::{sweep, write_sweep_csv, QLearnConfig};
use hiplan::render::render_values;
use hiplan::RewardScheme;
use serde_json::json;

use layout::{compile_loaded, load};
use output::{emit_csv, q_params, RunManifest, SchemeParams};

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "hiplan", version, about = "Planning and Q-learning on one-way checkpoint MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct LayoutArgs {
    /// Built-in layout name, or a `NAME.grid` under $HIPLAN_LAYOUT_DIR
    #[arg(long)]
    layout: Option<String>,
    /// Layout file
    file: Option<PathBuf>,
}

#[derive(clap::Args, Clone)]
struct RewardArgs {
    /// Overrides the layout's terminal reward B
    #[arg(long)]
    terminal_reward: Option<f64>,
    /// Overrides the layout's intermediate reward B_I
    #[arg(long)]
    intermediate_reward: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeChoice {
    /// Whatever the layout header declares
    Layout,
    Sparse,
    Intermediate,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a layout and print its structure as key=value lines
    Analyze {
        #[command(flatten)]
        layout: LayoutArgs,
    },
    /// Run value iteration and print per-cell values for each requested k
    Plan {
        #[command(flatten)]
        layout: LayoutArgs,
        #[command(flatten)]
        rewards: RewardArgs,
        /// Comma-separated sweep counts
        #[arg(long, default_value = "0,1,2", value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long, value_enum, default_value_t = SchemeChoice::Layout)]
        scheme: SchemeChoice,
        /// Print ASCII grids instead of CSV
        #[arg(long)]
        render: bool,
        /// Decimal places in rendered grids
        #[arg(long, default_value_t = 2)]
        precision: usize,
        /// CSV destination (standard output when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the complexity results on built-in and seeded random instances
    Verify {
        #[arg(long, value_enum, default_value_t = verify::Suite::All)]
        suite: verify::Suite,
        /// Seeded random instances per family
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train epsilon-greedy Q-learning agents and report wins per episode checkpoint
    Qlearn {
        #[command(flatten)]
        layout: LayoutArgs,
        #[command(flatten)]
        rewards: RewardArgs,
        /// Reward schemes to run side by side
        #[arg(long, value_delimiter = ',', value_enum)]
        compare: Vec<SchemeChoice>,
        /// Comma-separated episode counts at which each agent is evaluated
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<usize>,
        /// Single evaluation point when --checkpoints is absent
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Run i uses seed + i
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        /// Discount used by the learner
        #[arg(long, default_value_t = 0.9)]
        q_gamma: f64,
        #[arg(long, default_value_t = 0.8)]
        epsilon: f64,
        /// Episode length cap (layout's max_steps when absent)
        #[arg(long)]
        max_steps: Option<usize>,
        /// CSV destination (standard output when absent); the manifest goes beside it
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate a table or figure with pinned seeds
    Reproduce {
        #[arg(long, value_enum)]
        target: reproduce::Target,
        /// Directory for the CSV and its manifest
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write the compiled transition table as CSV
    Export {
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let io = e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some());
            ExitCode::from(if io { EXIT_IO } else { EXIT_USAGE })
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Analyze { layout } => analyze(&layout),
        Command::Plan { layout, rewards, k, scheme, render, precision, out } => {
            plan(&layout, &rewards, &k, scheme, render, precision, out)
        }
        Command::Verify { suite, instances, seed } => {
            let tally = verify::run(suite, instances, seed);
            Ok(if tally.failed > 0 { EXIT_VERIFY } else { 0 })
        }
        Command::Qlearn {
            layout,
            rewards,
            compare,
            checkpoints,
            episodes,
            runs,
            seed,
            learning_rate,
            q_gamma,
            epsilon,
            max_steps,
            out,
        } => {
            let loaded = load(layout.layout.as_deref(), layout.file.as_deref())?;
            let grid = compile_loaded(&loaded)?;
            let cfg = QLearnConfig {
                learning_rate,
                gamma: q_gamma,
                epsilon,
                episodes,
                max_steps: max_steps.unwrap_or(loaded.spec.max_steps),
                seed,
            };
            cfg.validate()?;
            if runs == 0 {
                bail!("--runs must be positive");
            }
            let checkpoints = if checkpoints.is_empty() { vec![episodes] } else { checkpoints };
            let schemes = if compare.is_empty() { vec![SchemeChoice::Layout] } else { compare };
            let mut manifest = RunManifest::new(&loaded.source, "sweep/1");
            manifest.seeds = (seed..seed + runs as u64).collect();
            manifest.parameters = json!({ "checkpoints": checkpoints, "runs": runs, "q": q_params(&cfg) });
            let mut body = Vec::new();
            for (i, choice) in schemes.into_iter().enumerate() {
                let g = with_scheme(&grid, choice, &rewards)?;
                let scheme = g.mdp.scheme();
                manifest.schemes.push(scheme_params(&g));
                let result = sweep(&g.mdp, &cfg, &checkpoints, runs, seed);
                let mut part = Vec::new();
                write_sweep_csv(&mut part, &loaded.label, scheme.name(), &result)?;
                let skip = if i == 0 { 0 } else { part.iter().position(|&b| b == b'\n').map_or(0, |p| p + 1) };
                body.extend_from_slice(&part[skip..]);
            }
            emit_csv(&body, out.as_deref(), &manifest)?;
            Ok(0)
        }
        Command::Reproduce { target, out_dir } => {
            let r = reproduce::run(target)?;
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let path = out_dir.join(format!("{}.csv", target.name()));
            emit_csv(&r.csv, Some(&path), &r.manifest)?;
            println!("wrote {}", path.display());
            Ok(if r.ok { 0 } else { EXIT_VERIFY })
        }
        Command::Export { layout, out } => {
            let loaded = load(layout.layout.as_deref(), layout.file.as_deref())?;
            let grid = compile_loaded(&loaded)?;
            let mut body = Vec::new();
            grid.mdp.write_transitions_csv(&mut body)?;
            let mut manifest = RunManifest::new(&loaded.source, "transitions/1");
            manifest.schemes.push(scheme_params(&grid));
            emit_csv(&body, out.as_deref(), &manifest)?;
            Ok(0)
        }
    }
}

fn scheme_params(g: &CompiledGrid) -> SchemeParams {
    let s = g.mdp.scheme();
    SchemeParams {
        name: s.name().to_string(),
        terminal_reward: s.terminal_reward(),
        intermediate_reward: s.intermediate_reward(),
        gamma: g.mdp.gamma(),
    }
}

/// The compiled grid under the requested scheme, with reward overrides applied.
fn with_scheme(grid: &CompiledGrid, choice: SchemeChoice, rewards: &RewardArgs) -> Result<CompiledGrid> {
    let current = grid.mdp.scheme();
    let b = rewards.terminal_reward.unwrap_or(current.terminal_reward());
    let b_i = rewards.intermediate_reward.or(current.intermediate_reward()).or(grid.spec.intermediate_reward);
    let sparse = match choice {
        SchemeChoice::Layout => current.is_sparse() && rewards.intermediate_reward.is_none(),
        SchemeChoice::Sparse => true,
        SchemeChoice::Intermediate => false,
    };
    let scheme = if sparse {
        RewardScheme::sparse(b)?
    } else {
        let b_i = b_i.context("the intermediate scheme needs --intermediate-reward for this layout")?;
        RewardScheme::intermediate(b, b_i)?
    };
    Ok(grid.with_scheme(scheme))
}

fn analyze(args: &LayoutArgs) -> Result<u8> {
    let loaded = load(args.layout.as_deref(), args.file.as_deref())?;
    let grid = compile_loaded(&loaded)?;
    let report = classify(&grid.mdp);
    println!("layout={}", loaded.label);
    println!("states={}", grid.mdp.state_count());
    print!("{report}");
    Ok(0)
}

fn plan(
    args: &LayoutArgs,
    rewards: &RewardArgs,
    ks: &[usize],
    choice: SchemeChoice,
    render: bool,
    precision: usize,
    out: Option<PathBuf>,
) -> Result<u8> {
    let loaded = load(args.layout.as_deref(), args.file.as_deref())?;
    let grid = with_scheme(&compile_loaded(&loaded)?, choice, rewards)?;
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut vi = ValueIteration::new(&grid.mdp);
    if render {
        for &k in &ks {
            vi.run_to(k);
            println!("k={k}");
            print!("{}", render_values(&grid, vi.values(), precision));
            println!();
        }
        return Ok(0);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "state", "x", "y", "dir", "mask", "value"])?;
    for &k in &ks {
        vi.run_to(k);
        for s in grid.mdp.states() {
            let l = grid.label(s);
            w.write_record([
                k.to_string(),
                s.0.to_string(),
                l.x.to_string(),
                l.y.to_string(),
                l.dir.letter().to_string(),
                format!("{:#x}", l.mask.0),
                vi.values()[s.0].to_string(),
            ])?;
        }
    }
    let mut manifest = RunManifest::new(&loaded.source, "values/1");
    manifest.schemes.push(scheme_params(&grid));
    manifest.parameters = json!({ "k": ks });
    emit_csv(&w.into_inner()?, out.as_deref(), &manifest)?;
    Ok(0)
}
