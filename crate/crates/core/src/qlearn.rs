//! Tabular asynchronous ε-greedy Q-learning and its evaluation harness.

use std::io;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use thiserror::Error;

use crate::mdp::{ActionId, DeterministicMdp, StateId};
use crate::planner::{greedy_rollout, QTable};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QLearnConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub episodes: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for QLearnConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, gamma: 0.9, epsilon: 0.8, episodes: 100, max_steps: 100, seed: 0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("learning rate must lie in (0, 1], got {0}")]
    LearningRate(f64),
    #[error("gamma must lie in (0, 1), got {0}")]
    Gamma(f64),
    #[error("epsilon must lie in [0, 1], got {0}")]
    Epsilon(f64),
    #[error("max_steps must be positive")]
    MaxSteps,
}

impl QLearnConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(ConfigError::LearningRate(self.learning_rate));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::Gamma(self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if self.max_steps == 0 {
            return Err(ConfigError::MaxSteps);
        }
        Ok(())
    }
}

/// A training run that can be continued episode by episode.
#[derive(Clone, Debug)]
pub struct Trainer<'a> {
    mdp: &'a DeterministicMdp,
    cfg: QLearnConfig,
    q: QTable,
    rng: Xoshiro256PlusPlus,
    episodes_done: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(mdp: &'a DeterministicMdp, cfg: QLearnConfig) -> Self {
        Self::with_q(mdp, cfg, QTable::zeros(mdp.state_count(), mdp.action_count()))
    }

    /// Starts from a given table instead of zeros.
    pub fn with_q(mdp: &'a DeterministicMdp, cfg: QLearnConfig, q: QTable) -> Self {
        assert_eq!(q.q.len(), mdp.state_count() * mdp.action_count(), "q table shape");
        Self { mdp, cfg, q, rng: Xoshiro256PlusPlus::seed_from_u64(cfg.seed), episodes_done: 0 }
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn into_q(self) -> QTable {
        self.q
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    fn behaviour(&mut self, s: StateId) -> ActionId {
        if self.rng.gen::<f64>() < self.cfg.epsilon {
            ActionId(self.rng.gen_range(0..self.mdp.action_count()))
        } else {
            self.q.greedy(s)
        }
    }

    /// One episode from the initial state; returns whether it reached the terminal set.
    pub fn run_episode(&mut self) -> bool {
        let (alpha, gamma) = (self.cfg.learning_rate, self.cfg.gamma);
        let mut s = self.mdp.initial_state();
        let mut reached = self.mdp.is_terminal(s);
        let mut steps = 0;
        while !reached && steps < self.cfg.max_steps {
            let a = self.behaviour(s);
            let next = self.mdp.transition(s, a);
            let r = self.mdp.reward(s, a);
            reached = self.mdp.is_terminal(next);
            let bootstrap = if reached { 0.0 } else { self.q.max(next) };
            let old = self.q.get(s, a);
            self.q.set(s, a, (1.0 - alpha) * old + alpha * (r + gamma * bootstrap));
            s = next;
            steps += 1;
        }
        self.episodes_done += 1;
        self.q.k = self.episodes_done;
        reached
    }

    /// Continues until `episodes` episodes have been run in total.
    pub fn train_to(&mut self, episodes: usize) {
        while self.episodes_done < episodes {
            self.run_episode();
        }
    }
}

pub fn train(mdp: &DeterministicMdp, cfg: &QLearnConfig) -> QTable {
    let mut t = Trainer::new(mdp, *cfg);
    t.train_to(cfg.episodes);
    t.into_q()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WinStats {
    pub wins: usize,
    pub trials: usize,
    pub mean_steps: f64,
    pub std_steps: f64,
    /// Undiscounted intermediate reward collected per trial.
    pub mean_reward: f64,
    pub std_reward: f64,
}

/// One greedy evaluation episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    pub intermediate_reward: f64,
}

pub fn evaluate_once(mdp: &DeterministicMdp, q: &QTable, max_steps: usize) -> EpisodeResult {
    let trace = greedy_rollout(mdp, q, max_steps);
    let terminal: f64 = if trace.success { *trace.rewards.last().unwrap_or(&0.0) } else { 0.0 };
    EpisodeResult { success: trace.success, steps: trace.steps, intermediate_reward: trace.total_reward() - terminal }
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl WinStats {
    pub fn from_episodes(results: &[EpisodeResult]) -> Self {
        let (mean_steps, std_steps) = mean_std(results.iter().map(|r| r.steps as f64));
        let (mean_reward, std_reward) = mean_std(results.iter().map(|r| r.intermediate_reward));
        Self {
            wins: results.iter().filter(|r| r.success).count(),
            trials: results.len(),
            mean_steps,
            std_steps,
            mean_reward,
            std_reward,
        }
    }
}

/// Greedy evaluation. The MDP and policy are deterministic, so every trial repeats
/// the first; `trials` only scales the counts.
pub fn evaluate(mdp: &DeterministicMdp, q: &QTable, trials: usize, max_steps: usize) -> WinStats {
    let one = evaluate_once(mdp, q, max_steps);
    WinStats::from_episodes(&vec![one; trials])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub run: usize,
    pub seed: u64,
    pub checkpoint: usize,
    pub result: EpisodeResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub checkpoints: Vec<usize>,
}

impl SweepResult {
    /// Aggregate over runs at one checkpoint.
    pub fn stats_at(&self, checkpoint: usize) -> WinStats {
        let results: Vec<EpisodeResult> =
            self.rows.iter().filter(|r| r.checkpoint == checkpoint).map(|r| r.result).collect();
        WinStats::from_episodes(&results)
    }

    pub fn table(&self) -> Vec<(usize, WinStats)> {
        self.checkpoints.iter().map(|&c| (c, self.stats_at(c))).collect()
    }
}

/// Trains `runs` independent agents (seed `base_seed + run`), evaluating each once
/// at every episode checkpoint. Training continues incrementally between checkpoints.
pub fn sweep(
    mdp: &DeterministicMdp,
    cfg: &QLearnConfig,
    checkpoints: &[usize],
    runs: usize,
    base_seed: u64,
) -> SweepResult {
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let per_run: Vec<Vec<SweepRow>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let seed = base_seed.wrapping_add(run as u64);
            let mut trainer = Trainer::new(mdp, QLearnConfig { seed, ..*cfg });
            sorted
                .iter()
                .map(|&checkpoint| {
                    trainer.train_to(checkpoint);
                    SweepRow { run, seed, checkpoint, result: evaluate_once(mdp, trainer.q(), cfg.max_steps) }
                })
                .collect()
        })
        .collect();
    SweepResult { rows: per_run.into_iter().flatten().collect(), checkpoints: sorted }
}

pub const SWEEP_CSV_HEADER: [&str; 9] =
    ["layout", "scheme", "seed", "checkpoint", "wins", "trials", "mean_steps", "std_steps", "mean_reward"];

/// One CSV row per (run, checkpoint) with `trials = 1`, followed by an aggregate row
/// per checkpoint with `seed = all`.
pub fn write_sweep_csv<W: io::Write>(out: W, layout: &str, scheme: &str, result: &SweepResult) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in &result.rows {
        let s = WinStats::from_episodes(&[r.result]);
        w.write_record(record(layout, scheme, &r.seed.to_string(), r.checkpoint, &s))?;
    }
    for (c, s) in result.table() {
        w.write_record(record(layout, scheme, "all", c, &s))?;
    }
    w.flush()?;
    Ok(())
}

fn record(layout: &str, scheme: &str, seed: &str, checkpoint: usize, s: &WinStats) -> [String; 9] {
    [
        layout.to_string(),
        scheme.to_string(),
        seed.to_string(),
        checkpoint.to_string(),
        s.wins.to_string(),
        s.trials.to_string(),
        format!("{:.4}", s.mean_steps),
        format!("{:.4}", s.std_steps),
        format!("{:.4}", s.mean_reward),
    ]
}
