use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use super::spec::{ActionModel, CellKind, Direction, GridSpec};
use crate::mdp::{DeterministicMdp, MdpError, RewardScheme, StateId};

/// One bit per consumable cell (pellet, gate, key, door); a set bit means consumed,
/// traversed, picked up or opened. Bits are only ever added along a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConsumptionMask(pub u64);

impl ConsumptionMask {
    #[inline]
    pub fn contains(self, bit: usize) -> bool {
        self.0 >> bit & 1 == 1
    }

    #[inline]
    pub fn with(self, bit: usize) -> Self {
        Self(self.0 | 1 << bit)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

/// A full environment state. `arrived` marks the state entered by the very
/// transition that grew the mask; any later action leaves it, so such a state
/// can be entered at most once per episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub x: usize,
    pub y: usize,
    pub dir: Direction,
    pub mask: ConsumptionMask,
    pub arrived: bool,
}

impl ProductState {
    pub fn position(&self) -> (usize, usize) {
        (self.x, self.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("state space exceeds the cap of {cap} states")]
    StateCap { cap: usize },
    #[error("layout has {count} consumable cells; at most 64 are supported")]
    TooManyConsumables { count: usize },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

#[derive(Clone, Copy, Debug)]
pub struct CompileOptions {
    pub max_states: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { max_states: 1 << 20 }
    }
}

/// A compiled layout: the MDP plus the product state behind every index.
#[derive(Clone, Debug)]
pub struct CompiledGrid {
    pub spec: GridSpec,
    pub mdp: DeterministicMdp,
    pub labels: Vec<ProductState>,
    bits: Vec<Option<usize>>,
}

impl CompiledGrid {
    pub fn label(&self, s: StateId) -> &ProductState {
        &self.labels[s.0]
    }

    pub fn position_of(&self, s: StateId) -> (usize, usize) {
        self.labels[s.0].position()
    }

    /// Mask bit owned by the consumable cell at `(x, y)`, if any.
    pub fn bit_at(&self, x: usize, y: usize) -> Option<usize> {
        self.bits[y * self.spec.width + x]
    }

    pub fn states_at(&self, x: usize, y: usize) -> impl Iterator<Item = StateId> + '_ {
        self.labels.iter().enumerate().filter(move |(_, l)| l.x == x && l.y == y).map(|(i, _)| StateId(i))
    }

    /// Same compiled structure under another reward scheme.
    pub fn with_scheme(&self, scheme: RewardScheme) -> Self {
        Self { mdp: self.mdp.apply_reward_scheme(scheme), ..self.clone() }
    }
}

struct Dynamics<'a> {
    spec: &'a GridSpec,
    bits: Vec<Option<usize>>,
}

impl Dynamics<'_> {
    fn front(&self, st: &ProductState, dir: Direction) -> Option<(usize, usize)> {
        if self.spec.blocked_edge(st.x, st.y, dir) {
            return None;
        }
        let (dx, dy) = dir.delta();
        let (nx, ny) = ((st.x as isize + dx) as usize, (st.y as isize + dy) as usize);
        (self.spec.cell(nx, ny) != CellKind::Wall).then_some((nx, ny))
    }

    fn bit(&self, x: usize, y: usize) -> usize {
        self.bits[y * self.spec.width + x].expect("consumable cells own a bit")
    }

    fn has_key(&self, mask: ConsumptionMask, letter: char) -> bool {
        self.spec.cells().iter().enumerate().any(|(i, &c)| {
            c == CellKind::Key(letter) && mask.contains(self.bits[i].expect("keys own a bit"))
        })
    }

    fn stay(st: &ProductState) -> ProductState {
        ProductState { arrived: false, ..*st }
    }

    fn settle(st: &ProductState, x: usize, y: usize, dir: Direction, mask: ConsumptionMask) -> ProductState {
        ProductState { x, y, dir, mask, arrived: mask != st.mask }
    }

    /// Moves one cell along `dir`. `walk_onto_keys` distinguishes the cardinal model,
    /// where stepping on a key picks it up and walking into a door opens it.
    fn advance(&self, st: &ProductState, dir: Direction, walk_onto_keys: bool) -> ProductState {
        let Some((nx, ny)) = self.front(st, dir) else {
            return Self::stay(st);
        };
        let mut mask = st.mask;
        match self.spec.cell(nx, ny) {
            CellKind::Wall => unreachable!("filtered by front()"),
            CellKind::Door(letter) => {
                let bit = self.bit(nx, ny);
                if !mask.contains(bit) {
                    if walk_onto_keys && self.has_key(mask, letter) {
                        mask = mask.with(bit);
                    } else {
                        return Self::stay(st);
                    }
                }
            }
            CellKind::Key(_) => {
                let bit = self.bit(nx, ny);
                if !mask.contains(bit) {
                    if walk_onto_keys {
                        mask = mask.with(bit);
                    } else {
                        return Self::stay(st);
                    }
                }
            }
            CellKind::Pellet => mask = mask.with(self.bit(nx, ny)),
            CellKind::Gate(entry) => {
                let bit = self.bit(nx, ny);
                if !mask.contains(bit) {
                    if dir != entry {
                        return Self::stay(st);
                    }
                    mask = mask.with(bit);
                }
            }
            CellKind::Floor | CellKind::Start | CellKind::Goal | CellKind::Bonus => {}
        }
        Self::settle(st, nx, ny, st.dir, mask)
    }

    fn successor(&self, st: &ProductState, action: usize) -> ProductState {
        match self.spec.action_model {
            ActionModel::Cardinal4 => {
                let dir = [Direction::West, Direction::East, Direction::North, Direction::South][action];
                self.advance(st, dir, true)
            }
            ActionModel::MiniGrid | ActionModel::MiniGridNav => match action {
                0 => self.advance(st, st.dir, false),
                1 => ProductState { dir: st.dir.turn_ccw(), arrived: false, ..*st },
                2 => ProductState { dir: st.dir.turn_cw(), arrived: false, ..*st },
                3 => match self.front(st, st.dir) {
                    Some((nx, ny)) if matches!(self.spec.cell(nx, ny), CellKind::Key(_)) => {
                        let bit = self.bit(nx, ny);
                        if st.mask.contains(bit) {
                            Self::stay(st)
                        } else {
                            Self::settle(st, st.x, st.y, st.dir, st.mask.with(bit))
                        }
                    }
                    _ => Self::stay(st),
                },
                4 => match self.front(st, st.dir) {
                    Some((nx, ny)) => match self.spec.cell(nx, ny) {
                        CellKind::Door(letter) if self.has_key(st.mask, letter) => {
                            let bit = self.bit(nx, ny);
                            if st.mask.contains(bit) {
                                Self::stay(st)
                            } else {
                                Self::settle(st, st.x, st.y, st.dir, st.mask.with(bit))
                            }
                        }
                        _ => Self::stay(st),
                    },
                    None => Self::stay(st),
                },
                _ => unreachable!("action index checked against the model"),
            },
        }
    }
}

/// Compiles with the default state cap.
pub fn compile(spec: &GridSpec) -> Result<CompiledGrid, CompileError> {
    compile_with(spec, CompileOptions::default())
}

/// Explores the product states reachable from the start cell and lays them out
/// as a dense MDP, indexed in breadth-first discovery order.
pub fn compile_with(spec: &GridSpec, options: CompileOptions) -> Result<CompiledGrid, CompileError> {
    let mut bits = vec![None; spec.cells().len()];
    let mut next_bit = 0;
    for (i, c) in spec.cells().iter().enumerate() {
        if c.is_consumable() {
            bits[i] = Some(next_bit);
            next_bit += 1;
        }
    }
    if next_bit > 64 {
        return Err(CompileError::TooManyConsumables { count: next_bit });
    }
    let dynamics = Dynamics { spec, bits };
    let action_count = spec.action_model.action_count();

    let (sx, sy) = spec.start();
    let start = ProductState { x: sx, y: sy, dir: spec.start_dir, mask: ConsumptionMask(0), arrived: false };
    let mut index: HashMap<ProductState, usize> = HashMap::from([(start, 0)]);
    let mut labels = vec![start];
    let mut transitions: Vec<usize> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let is_goal = |st: &ProductState| spec.cell(st.x, st.y) == CellKind::Goal;

    while let Some(id) = queue.pop_front() {
        let st = labels[id];
        let row = id * action_count;
        if transitions.len() < row + action_count {
            transitions.resize(row + action_count, 0);
        }
        for a in 0..action_count {
            let next = if is_goal(&st) { st } else { dynamics.successor(&st, a) };
            let next_id = match index.get(&next) {
                Some(&j) => j,
                None => {
                    let j = labels.len();
                    if j >= options.max_states {
                        return Err(CompileError::StateCap { cap: options.max_states });
                    }
                    index.insert(next, j);
                    labels.push(next);
                    queue.push_back(j);
                    j
                }
            };
            transitions[row + a] = next_id;
        }
    }

    let terminal: Vec<StateId> = (0..labels.len()).filter(|&i| is_goal(&labels[i])).map(StateId).collect();
    let checkpoints: Vec<StateId> = (0..labels.len())
        .filter(|&i| !is_goal(&labels[i]))
        .filter(|&i| labels[i].arrived || spec.cell(labels[i].x, labels[i].y) == CellKind::Bonus)
        .map(StateId)
        .collect();
    let scheme = match spec.intermediate_reward {
        Some(b_i) => RewardScheme::intermediate(spec.terminal_reward, b_i)?,
        None => RewardScheme::sparse(spec.terminal_reward)?,
    };
    let mdp = DeterministicMdp::new(action_count, transitions, StateId(0), &terminal, &checkpoints, spec.gamma, scheme)?;
    Ok(CompiledGrid { spec: spec.clone(), mdp, labels, bits: dynamics.bits })
}
