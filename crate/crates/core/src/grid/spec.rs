//! Text format for grid layouts.
//!
//! ```text
//! name = fig_owsp_4x4
//! gamma = 0.9
//! terminal_reward = 10
//! intermediate_reward = 1
//! actions = cardinal
//! barriers = 3,1:E 3,1:S
//!
//! ######
//! #S...#
//! #..>.#
//! #.<..#
//! #...G#
//! ######
//! ```
//!
//! Header lines are `key = value` and end at the first blank line; a file may
//! also start directly with the grid. Legend: `#` wall, `.` floor, `S` start,
//! `G` goal, `o` pellet, `<` `>` `^` `v` one-way gates (the character points in
//! the direction the agent must be moving when it enters), `a`-`z` keys,
//! `A`-`Z` doors, `$` repeatable bonus.

use std::fmt;

use thiserror::Error;

/// Compass heading. Numbered counter-clockwise so that a +90 degree turn is `+1 mod 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    East = 0,
    North = 1,
    West = 2,
    South = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::East, Direction::North, Direction::West, Direction::South];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Grid delta with y growing downwards.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::East => (1, 0),
            Direction::North => (0, -1),
            Direction::West => (-1, 0),
            Direction::South => (0, 1),
        }
    }

    pub fn turn_ccw(self) -> Self {
        Self::from_index(self.index() + 1)
    }

    pub fn turn_cw(self) -> Self {
        Self::from_index(self.index() + 3)
    }

    pub fn opposite(self) -> Self {
        Self::from_index(self.index() + 2)
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e" | "east" => Some(Direction::East),
            "n" | "north" => Some(Direction::North),
            "w" | "west" => Some(Direction::West),
            "s" | "south" => Some(Direction::South),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Direction::East => 'E',
            Direction::North => 'N',
            Direction::West => 'W',
            Direction::South => 'S',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Wall,
    Floor,
    Start,
    Goal,
    Pellet,
    /// Enterable only while moving in the given direction, until consumed.
    Gate(Direction),
    Key(char),
    Door(char),
    /// Pays the intermediate reward on every entry; never consumed.
    Bonus,
}

impl CellKind {
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '#' => CellKind::Wall,
            '.' => CellKind::Floor,
            'S' => CellKind::Start,
            'G' => CellKind::Goal,
            'o' => CellKind::Pellet,
            '>' => CellKind::Gate(Direction::East),
            '<' => CellKind::Gate(Direction::West),
            '^' => CellKind::Gate(Direction::North),
            'v' => CellKind::Gate(Direction::South),
            '$' => CellKind::Bonus,
            'a'..='z' => CellKind::Key(c),
            'A'..='Z' => CellKind::Door(c.to_ascii_lowercase()),
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            CellKind::Wall => '#',
            CellKind::Floor => '.',
            CellKind::Start => 'S',
            CellKind::Goal => 'G',
            CellKind::Pellet => 'o',
            CellKind::Gate(Direction::East) => '>',
            CellKind::Gate(Direction::West) => '<',
            CellKind::Gate(Direction::North) => '^',
            CellKind::Gate(Direction::South) => 'v',
            CellKind::Key(c) => c,
            CellKind::Door(c) => c.to_ascii_uppercase(),
            CellKind::Bonus => '$',
        }
    }

    /// Cells whose first use changes the environment for the rest of the episode.
    pub fn is_consumable(self) -> bool {
        matches!(self, CellKind::Pellet | CellKind::Gate(_) | CellKind::Key(_) | CellKind::Door(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionModel {
    /// left, right, up, down
    Cardinal4,
    /// forward, turn +90, turn -90, pick up, open
    MiniGrid,
    /// forward, turn +90, turn -90
    MiniGridNav,
}

impl ActionModel {
    pub fn action_count(self) -> usize {
        match self {
            ActionModel::Cardinal4 => 4,
            ActionModel::MiniGrid => 5,
            ActionModel::MiniGridNav => 3,
        }
    }

    pub fn action_names(self) -> &'static [&'static str] {
        match self {
            ActionModel::Cardinal4 => &["left", "right", "up", "down"],
            ActionModel::MiniGrid => &["forward", "turn_ccw", "turn_cw", "pickup", "open"],
            ActionModel::MiniGridNav => &["forward", "turn_ccw", "turn_cw"],
        }
    }

    pub fn has_orientation(self) -> bool {
        !matches!(self, ActionModel::Cardinal4)
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "cardinal" | "cardinal4" => Some(ActionModel::Cardinal4),
            "minigrid" => Some(ActionModel::MiniGrid),
            "minigrid-nav" | "minigrid3" => Some(ActionModel::MiniGridNav),
            _ => None,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ActionModel::Cardinal4 => "cardinal",
            ActionModel::MiniGrid => "minigrid",
            ActionModel::MiniGridNav => "minigrid-nav",
        }
    }
}

/// A wall segment on the edge between cell `(x, y)` and its neighbour in `side`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Barrier {
    pub x: usize,
    pub y: usize,
    pub side: Direction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub name: Option<String>,
    pub width: usize,
    pub height: usize,
    cells: Vec<CellKind>,
    pub action_model: ActionModel,
    pub gamma: f64,
    pub terminal_reward: f64,
    pub intermediate_reward: Option<f64>,
    pub max_steps: usize,
    pub start_dir: Direction,
    pub barriers: Vec<Barrier>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("missing grid")]
    MissingGrid,
    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("line {line}: ragged grid row has {found} columns, expected {expected}")]
    RaggedGrid { line: usize, expected: usize, found: usize },
    #[error("line {line}, column {column}: unknown cell character {ch:?}")]
    UnknownCell { line: usize, column: usize, ch: char },
    #[error("line {line}, column {column}: door {letter:?} has no matching key")]
    UnmatchedDoor { line: usize, column: usize, letter: char },
    #[error("grid has no start cell 'S'")]
    MissingStart,
    #[error("line {line}, column {column}: second start cell")]
    DuplicateStart { line: usize, column: usize },
    #[error("grid has no goal cell 'G'")]
    MissingGoal,
    #[error("line {line}, column {column}: border cell is not a wall")]
    OpenBorder { line: usize, column: usize },
}

fn header_err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::MalformedHeader { line, message: message.into() }
}

fn parse_unit_interval(line: usize, key: &str, v: &str) -> Result<f64, ParseError> {
    let x: f64 = v.parse().map_err(|_| header_err(line, format!("{key}: not a number: {v:?}")))?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(header_err(line, format!("{key} must lie in (0, 1)")))
    }
}

fn parse_positive(line: usize, key: &str, v: &str) -> Result<f64, ParseError> {
    let x: f64 = v.parse().map_err(|_| header_err(line, format!("{key}: not a number: {v:?}")))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(header_err(line, format!("{key} must be positive")))
    }
}

fn parse_barriers(line: usize, v: &str) -> Result<Vec<Barrier>, ParseError> {
    v.split(|c: char| c.is_whitespace() || c == ';')
        .filter(|t| !t.is_empty())
        .map(|tok| {
            let bad = || header_err(line, format!("barrier {tok:?} is not of the form x,y:E"));
            let (xy, side) = tok.split_once(':').ok_or_else(bad)?;
            let (x, y) = xy.split_once(',').ok_or_else(bad)?;
            Ok(Barrier {
                x: x.trim().parse().map_err(|_| bad())?,
                y: y.trim().parse().map_err(|_| bad())?,
                side: Direction::parse(side.trim()).ok_or_else(bad)?,
            })
        })
        .collect()
}

/// Parses the layout text format. LF and CRLF line endings are accepted.
pub fn parse_grid(text: &str) -> Result<GridSpec, ParseError> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let first = lines.iter().position(|l| !l.trim().is_empty()).ok_or(ParseError::MissingGrid)?;

    let mut name = None;
    let mut action_model = ActionModel::Cardinal4;
    let mut gamma = 0.9;
    let mut terminal_reward = 10.0;
    let mut intermediate_reward = None;
    let mut max_steps = None;
    let mut start_dir = Direction::East;
    let mut barriers = Vec::new();

    let mut i = first;
    if lines[first].contains('=') {
        while i < lines.len() && !lines[i].trim().is_empty() {
            let lineno = i + 1;
            let (key, value) = lines[i]
                .split_once('=')
                .ok_or_else(|| header_err(lineno, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "name" => name = Some(value.to_string()),
                "gamma" => gamma = parse_unit_interval(lineno, key, value)?,
                "terminal_reward" => terminal_reward = parse_positive(lineno, key, value)?,
                "intermediate_reward" => {
                    intermediate_reward = match value {
                        "none" | "" => None,
                        _ => Some(parse_positive(lineno, key, value)?),
                    }
                }
                "actions" => {
                    action_model = ActionModel::parse(value)
                        .ok_or_else(|| header_err(lineno, format!("unknown action model {value:?}")))?
                }
                "max_steps" => {
                    let n: usize = value
                        .parse()
                        .map_err(|_| header_err(lineno, format!("max_steps: not an integer: {value:?}")))?;
                    if n == 0 {
                        return Err(header_err(lineno, "max_steps must be positive"));
                    }
                    max_steps = Some(n);
                }
                "start_dir" => {
                    start_dir = Direction::parse(value)
                        .ok_or_else(|| header_err(lineno, format!("unknown direction {value:?}")))?
                }
                "barriers" => barriers = parse_barriers(lineno, value)?,
                _ => return Err(header_err(lineno, format!("unknown key {key:?}"))),
            }
            i += 1;
        }
    }

    let grid_start = (i..lines.len()).find(|&j| !lines[j].trim().is_empty()).ok_or(ParseError::MissingGrid)?;
    let mut grid_end = lines.len();
    while grid_end > grid_start && lines[grid_end - 1].trim().is_empty() {
        grid_end -= 1;
    }
    let rows = &lines[grid_start..grid_end];
    let width = rows[0].chars().count();
    let height = rows.len();

    let mut cells = Vec::with_capacity(width * height);
    let mut start = None;
    let mut goal_seen = false;
    let mut keys = Vec::new();
    let mut doors = Vec::new();
    for (y, row) in rows.iter().enumerate() {
        let lineno = grid_start + y + 1;
        let found = row.chars().count();
        if found != width {
            return Err(ParseError::RaggedGrid { line: lineno, expected: width, found });
        }
        for (x, ch) in row.chars().enumerate() {
            let kind = CellKind::from_char(ch).ok_or(ParseError::UnknownCell { line: lineno, column: x + 1, ch })?;
            let border = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
            if border && kind != CellKind::Wall {
                return Err(ParseError::OpenBorder { line: lineno, column: x + 1 });
            }
            match kind {
                CellKind::Start => {
                    if start.is_some() {
                        return Err(ParseError::DuplicateStart { line: lineno, column: x + 1 });
                    }
                    start = Some((x, y));
                }
                CellKind::Goal => goal_seen = true,
                CellKind::Key(k) => keys.push(k),
                CellKind::Door(d) => doors.push((d, lineno, x + 1)),
                _ => {}
            }
            cells.push(kind);
        }
    }
    if start.is_none() {
        return Err(ParseError::MissingStart);
    }
    if !goal_seen {
        return Err(ParseError::MissingGoal);
    }
    if let Some(&(d, line, column)) = doors.iter().find(|(d, _, _)| !keys.contains(d)) {
        return Err(ParseError::UnmatchedDoor { line, column, letter: d.to_ascii_uppercase() });
    }
    for b in &barriers {
        if b.x >= width || b.y >= height {
            return Err(header_err(first + 1, format!("barrier {},{} lies outside the grid", b.x, b.y)));
        }
    }

    Ok(GridSpec {
        name,
        width,
        height,
        cells,
        action_model,
        gamma,
        terminal_reward,
        intermediate_reward,
        max_steps: max_steps.unwrap_or(4 * width * height),
        start_dir,
        barriers,
    })
}

impl GridSpec {
    pub fn cell(&self, x: usize, y: usize) -> CellKind {
        self.cells[y * self.width + x]
    }

    pub fn cells(&self) -> &[CellKind] {
        &self.cells
    }

    pub fn start(&self) -> (usize, usize) {
        let i = self.cells.iter().position(|&c| c == CellKind::Start).expect("validated at parse time");
        (i % self.width, i / self.width)
    }

    /// Whether a barrier separates `(x, y)` from its neighbour in `dir`.
    pub fn blocked_edge(&self, x: usize, y: usize, dir: Direction) -> bool {
        let (dx, dy) = dir.delta();
        let (nx, ny) = ((x as isize + dx) as usize, (y as isize + dy) as usize);
        self.barriers.iter().any(|b| {
            (b.x == x && b.y == y && b.side == dir) || (b.x == nx && b.y == ny && b.side == dir.opposite())
        })
    }

    /// Same layout with the intermediate reward removed (or replaced).
    pub fn with_intermediate_reward(&self, reward: Option<f64>) -> Self {
        Self { intermediate_reward: reward, ..self.clone() }
    }

    pub fn with_terminal_reward(&self, reward: f64) -> Self {
        Self { terminal_reward: reward, ..self.clone() }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..self.clone() }
    }
}

impl fmt::Display for GridSpec {
    /// Renders back to the text format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            writeln!(f, "name = {name}")?;
        }
        writeln!(f, "gamma = {}", self.gamma)?;
        writeln!(f, "terminal_reward = {}", self.terminal_reward)?;
        if let Some(r) = self.intermediate_reward {
            writeln!(f, "intermediate_reward = {r}")?;
        }
        writeln!(f, "actions = {}", self.action_model.keyword())?;
        writeln!(f, "max_steps = {}", self.max_steps)?;
        if self.start_dir != Direction::East {
            writeln!(f, "start_dir = {}", self.start_dir.letter())?;
        }
        if !self.barriers.is_empty() {
            let list: Vec<String> =
                self.barriers.iter().map(|b| format!("{},{}:{}", b.x, b.y, b.side.letter())).collect();
            writeln!(f, "barriers = {}", list.join(" "))?;
        }
        writeln!(f)?;
        for row in self.cells.chunks(self.width) {
            let line: String = row.iter().map(|c| c.to_char()).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOW: &str = "gamma = 0.9\nterminal_reward = 10\nintermediate_reward = 100\n\n####\n#S$#\n#.G#\n####\n";

    #[test]
    fn parses_header_and_grid() {
        let g = parse_grid(NOW).unwrap();
        assert_eq!((g.width, g.height), (4, 4));
        assert_eq!(g.intermediate_reward, Some(100.0));
        assert_eq!(g.cell(2, 1), CellKind::Bonus);
        assert_eq!(g.start(), (1, 1));
        assert_eq!(g.action_model, ActionModel::Cardinal4);
        assert_eq!(g.max_steps, 64);
        assert_eq!(g.cells().iter().filter(|&&c| c == CellKind::Bonus).count(), 1);
    }

    #[test]
    fn crlf_and_headerless_input() {
        let g = parse_grid("####\r\n#SG#\r\n####\r\n").unwrap();
        assert_eq!(g.width, 4);
        assert_eq!(g.intermediate_reward, None);
    }

    #[test]
    fn display_round_trips() {
        let text = "name = t\nactions = minigrid\nbarriers = 1,1:E\nstart_dir = S\n\n#####\n#SaA#\n#..G#\n#####\n";
        let g = parse_grid(text).unwrap();
        assert_eq!(parse_grid(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn empty_input_is_missing_grid() {
        assert_eq!(parse_grid(""), Err(ParseError::MissingGrid));
        assert_eq!(parse_grid("gamma = 0.5\n\n"), Err(ParseError::MissingGrid));
    }

    #[test]
    fn distinct_errors_carry_locations() {
        assert_eq!(
            parse_grid("gamma = 0.5\ncolour = red\n\n###\n#S#\n###"),
            Err(ParseError::MalformedHeader { line: 2, message: "unknown key \"colour\"".into() })
        );
        assert!(matches!(parse_grid("gamma = 2\n\n###\n#S#\n###"), Err(ParseError::MalformedHeader { line: 1, .. })));
        assert_eq!(
            parse_grid("####\n#SG#\n###\n"),
            Err(ParseError::RaggedGrid { line: 3, expected: 4, found: 3 })
        );
        assert_eq!(
            parse_grid("#####\n#SBG#\n#####\n"),
            Err(ParseError::UnmatchedDoor { line: 2, column: 3, letter: 'B' })
        );
        assert_eq!(parse_grid("####\n#.G#\n####\n"), Err(ParseError::MissingStart));
        assert_eq!(parse_grid("####\n#S.#\n####\n"), Err(ParseError::MissingGoal));
        assert_eq!(parse_grid("####\n#SG.\n####\n"), Err(ParseError::OpenBorder { line: 2, column: 4 }));
        assert_eq!(
            parse_grid("#####\n#S%G#\n#####\n"),
            Err(ParseError::UnknownCell { line: 2, column: 3, ch: '%' })
        );
        assert_eq!(
            parse_grid("#####\n#SSG#\n#####\n"),
            Err(ParseError::DuplicateStart { line: 2, column: 3 })
        );
        assert!(matches!(
            parse_grid("barriers = 9,9:E\n\n####\n#SG#\n####\n"),
            Err(ParseError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_grid("barriers = 1;1:E\n\n####\n#SG#\n####\n"),
            Err(ParseError::MalformedHeader { .. })
        ));
    }

    #[test]
    fn barriers_block_both_sides() {
        let g = parse_grid("barriers = 1,1:E\n\n####\n#SG#\n####\n").unwrap();
        assert!(g.blocked_edge(1, 1, Direction::East));
        assert!(g.blocked_edge(2, 1, Direction::West));
        assert!(!g.blocked_edge(1, 1, Direction::South));
    }

    #[test]
    fn turns_are_inverse() {
        for d in Direction::ALL {
            assert_eq!(d.turn_ccw().turn_cw(), d);
            assert_eq!(d.turn_ccw().turn_ccw(), d.opposite());
        }
        assert_eq!(Direction::East.turn_ccw(), Direction::North);
    }
}
