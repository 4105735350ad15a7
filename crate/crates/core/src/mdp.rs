//! Finite deterministic MDPs with terminal and checkpoint (intermediate) states.
//!
//! Rewards are never stored independently of structure: every transition into a
//! terminal state pays the terminal reward `B`, every transition into an
//! intermediate state pays `B_I` (intermediate scheme only), everything else pays 0.
//! This keeps the reward a function of the successor alone.

use std::collections::VecDeque;
use std::fmt;
use std::io;

use thiserror::Error;

/// Dense 0-based state index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

/// Dense 0-based action index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl ActionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("state {0} is terminal; transitions out of terminal states are never followed")]
    TerminalStep(StateId),
    #[error("state {state} out of range (state count {count})")]
    StateOutOfRange { state: usize, count: usize },
    #[error("action {action} out of range (action count {count})")]
    ActionOutOfRange { action: usize, count: usize },
    #[error("discount factor must lie in (0, 1), got {0}")]
    BadGamma(f64),
    #[error("reward must be positive and finite, got {0}")]
    BadReward(f64),
    #[error("transition table has {found} entries, expected {expected}")]
    TableShape { expected: usize, found: usize },
    #[error("state {0} is both terminal and a checkpoint")]
    TerminalCheckpoint(StateId),
    #[error("an MDP needs at least one state and one action")]
    Empty,
}

/// Which states pay a positive reward on entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RewardScheme {
    /// Only terminal entries pay `terminal`.
    Sparse { terminal: f64 },
    /// Terminal entries pay `terminal`, checkpoint entries pay `intermediate`.
    Intermediate { terminal: f64, intermediate: f64 },
}

fn check_reward(r: f64) -> Result<f64, MdpError> {
    if r.is_finite() && r > 0.0 {
        Ok(r)
    } else {
        Err(MdpError::BadReward(r))
    }
}

impl RewardScheme {
    pub fn sparse(terminal: f64) -> Result<Self, MdpError> {
        Ok(Self::Sparse { terminal: check_reward(terminal)? })
    }

    pub fn intermediate(terminal: f64, intermediate: f64) -> Result<Self, MdpError> {
        Ok(Self::Intermediate {
            terminal: check_reward(terminal)?,
            intermediate: check_reward(intermediate)?,
        })
    }

    pub fn terminal_reward(&self) -> f64 {
        match *self {
            Self::Sparse { terminal } | Self::Intermediate { terminal, .. } => terminal,
        }
    }

    /// `B_I`, or `None` under the sparse scheme.
    pub fn intermediate_reward(&self) -> Option<f64> {
        match *self {
            Self::Sparse { .. } => None,
            Self::Intermediate { intermediate, .. } => Some(intermediate),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Self::Sparse { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sparse { .. } => "sparse",
            Self::Intermediate { .. } => "intermediate",
        }
    }
}

/// Outcome of a single transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub next: StateId,
    pub reward: f64,
    pub done: bool,
}

/// An explicit finite deterministic MDP.
///
/// Tables are rectangular (`state_count * action_count`, row-major by state).
/// Rows of terminal states are stored as zero-reward self-loops and are never
/// followed by any algorithm in this crate.
#[derive(Clone, Debug, PartialEq)]
pub struct DeterministicMdp {
    state_count: usize,
    action_count: usize,
    next: Vec<usize>,
    reward: Vec<f64>,
    gamma: f64,
    initial: StateId,
    terminal: Vec<bool>,
    checkpoint: Vec<bool>,
    scheme: RewardScheme,
}

impl DeterministicMdp {
    /// Builds an MDP from its transition structure. `transitions[s * action_count + a]`
    /// is the successor of `(s, a)`. `checkpoints` are the states that pay `B_I` on
    /// entry under the intermediate scheme.
    pub fn new(
        action_count: usize,
        transitions: Vec<usize>,
        initial: StateId,
        terminal: &[StateId],
        checkpoints: &[StateId],
        gamma: f64,
        scheme: RewardScheme,
    ) -> Result<Self, MdpError> {
        if action_count == 0 || transitions.is_empty() {
            return Err(MdpError::Empty);
        }
        if transitions.len() % action_count != 0 {
            return Err(MdpError::TableShape {
                expected: (transitions.len() / action_count + 1) * action_count,
                found: transitions.len(),
            });
        }
        let state_count = transitions.len() / action_count;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(MdpError::BadGamma(gamma));
        }
        if let Some(&bad) = transitions.iter().find(|&&t| t >= state_count) {
            return Err(MdpError::StateOutOfRange { state: bad, count: state_count });
        }
        let in_range = |s: StateId| {
            if s.0 < state_count {
                Ok(s)
            } else {
                Err(MdpError::StateOutOfRange { state: s.0, count: state_count })
            }
        };
        in_range(initial)?;
        let mut terminal_flags = vec![false; state_count];
        for &t in terminal {
            terminal_flags[in_range(t)?.0] = true;
        }
        let mut checkpoint_flags = vec![false; state_count];
        for &c in checkpoints {
            let c = in_range(c)?;
            if terminal_flags[c.0] {
                return Err(MdpError::TerminalCheckpoint(c));
            }
            checkpoint_flags[c.0] = true;
        }
        let mut mdp = Self {
            state_count,
            action_count,
            next: transitions,
            reward: Vec::new(),
            gamma,
            initial,
            terminal: terminal_flags,
            checkpoint: checkpoint_flags,
            scheme,
        };
        // terminal rows become inert self-loops
        for s in 0..state_count {
            if mdp.terminal[s] {
                for a in 0..action_count {
                    mdp.next[s * action_count + a] = s;
                }
            }
        }
        mdp.rebuild_rewards();
        Ok(mdp)
    }

    fn rebuild_rewards(&mut self) {
        let b = self.scheme.terminal_reward();
        let b_i = self.scheme.intermediate_reward().unwrap_or(0.0);
        self.reward = (0..self.state_count * self.action_count)
            .map(|i| {
                let s = i / self.action_count;
                let t = self.next[i];
                if self.terminal[s] {
                    0.0
                } else if self.terminal[t] {
                    b
                } else if self.checkpoint[t] {
                    b_i
                } else {
                    0.0
                }
            })
            .collect();
    }

    /// Same structure, rewards rewired for `scheme`.
    pub fn apply_reward_scheme(&self, scheme: RewardScheme) -> Self {
        let mut out = self.clone();
        out.scheme = scheme;
        out.rebuild_rewards();
        out
    }

    /// Same structure and scheme, different discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self, MdpError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(MdpError::BadGamma(gamma));
        }
        let mut out = self.clone();
        out.gamma = gamma;
        Ok(out)
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    pub fn scheme(&self) -> RewardScheme {
        self.scheme
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_count).map(StateId)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.action_count).map(ActionId)
    }

    #[inline]
    pub fn is_terminal(&self, s: StateId) -> bool {
        self.terminal[s.0]
    }

    /// Structural checkpoint, independent of the reward scheme.
    #[inline]
    pub fn is_checkpoint(&self, s: StateId) -> bool {
        self.checkpoint[s.0]
    }

    /// A state whose entry pays a positive non-terminal reward.
    #[inline]
    pub fn is_intermediate(&self, s: StateId) -> bool {
        self.checkpoint[s.0] && !self.scheme.is_sparse()
    }

    pub fn terminal_states(&self) -> Vec<StateId> {
        self.states().filter(|&s| self.is_terminal(s)).collect()
    }

    pub fn intermediate_states(&self) -> Vec<StateId> {
        self.states().filter(|&s| self.is_intermediate(s)).collect()
    }

    pub fn checkpoint_states(&self) -> Vec<StateId> {
        self.states().filter(|&s| self.is_checkpoint(s)).collect()
    }

    #[inline]
    pub fn transition(&self, s: StateId, a: ActionId) -> StateId {
        StateId(self.next[s.0 * self.action_count + a.0])
    }

    #[inline]
    pub fn reward(&self, s: StateId, a: ActionId) -> f64 {
        self.reward[s.0 * self.action_count + a.0]
    }

    /// Raw successor row of `s`, indexed by action.
    #[inline]
    pub fn successors(&self, s: StateId) -> &[usize] {
        &self.next[s.0 * self.action_count..(s.0 + 1) * self.action_count]
    }

    #[inline]
    pub fn rewards_from(&self, s: StateId) -> &[f64] {
        &self.reward[s.0 * self.action_count..(s.0 + 1) * self.action_count]
    }

    pub fn step(&self, s: StateId, a: ActionId) -> Result<Step, MdpError> {
        if s.0 >= self.state_count {
            return Err(MdpError::StateOutOfRange { state: s.0, count: self.state_count });
        }
        if a.0 >= self.action_count {
            return Err(MdpError::ActionOutOfRange { action: a.0, count: self.action_count });
        }
        if self.terminal[s.0] {
            return Err(MdpError::TerminalStep(s));
        }
        let next = self.transition(s, a);
        Ok(Step { next, reward: self.reward(s, a), done: self.terminal[next.0] })
    }

    /// States reachable from the initial state, without expanding terminals.
    /// Returned in ascending index order.
    pub fn enumerate_reachable(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.state_count];
        let mut queue = VecDeque::from([self.initial.0]);
        seen[self.initial.0] = true;
        while let Some(s) = queue.pop_front() {
            if self.terminal[s] {
                continue;
            }
            for &t in self.successors(StateId(s)) {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| StateId(i)).collect()
    }

    /// Largest reward any single episode can collect when every checkpoint is one-way.
    pub fn reward_bound(&self) -> f64 {
        let n = self.intermediate_states().len() as f64;
        self.scheme.terminal_reward() + n * self.scheme.intermediate_reward().unwrap_or(0.0)
    }

    /// Writes one `state,action,next,reward` row per non-terminal transition.
    pub fn write_transitions_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "state,action,next,reward")?;
        for s in self.states().filter(|&s| !self.is_terminal(s)) {
            for a in self.actions() {
                writeln!(out, "{},{},{},{}", s.0, a.0, self.transition(s, a).0, self.reward(s, a))?;
            }
        }
        Ok(())
    }
}

/// Incremental construction with self-loop defaults, mostly for hand-built instances.
#[derive(Clone, Debug)]
pub struct MdpBuilder {
    action_count: usize,
    next: Vec<usize>,
    terminal: Vec<StateId>,
    checkpoints: Vec<StateId>,
    initial: StateId,
}

impl MdpBuilder {
    pub fn new(state_count: usize, action_count: usize) -> Self {
        let next = (0..state_count).flat_map(|s| std::iter::repeat(s).take(action_count)).collect();
        Self { action_count, next, terminal: Vec::new(), checkpoints: Vec::new(), initial: StateId(0) }
    }

    pub fn edge(mut self, from: usize, action: usize, to: usize) -> Self {
        self.set_edge(from, action, to);
        self
    }

    pub fn set_edge(&mut self, from: usize, action: usize, to: usize) {
        self.next[from * self.action_count + action] = to;
    }

    pub fn initial(mut self, s: usize) -> Self {
        self.initial = StateId(s);
        self
    }

    pub fn terminal(mut self, s: usize) -> Self {
        self.terminal.push(StateId(s));
        self
    }

    pub fn checkpoint(mut self, s: usize) -> Self {
        self.checkpoints.push(StateId(s));
        self
    }

    pub fn build(self, gamma: f64, scheme: RewardScheme) -> Result<DeterministicMdp, MdpError> {
        DeterministicMdp::new(
            self.action_count,
            self.next,
            self.initial,
            &self.terminal,
            &self.checkpoints,
            gamma,
            scheme,
        )
    }
}
