//! Two-robot Box Pushing on an N x N grid.
//!
//! Row 0 is the goal row at the top; boxes only ever move north. The big box
//! sits centered in row N/2 with a small box on each side of it in the same
//! row. Robots start in the bottom row under the small boxes, facing north.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::macdec::{MacroActionDef, MacroContext, MacroEnv, MacroObs, PrimitiveAction, StepOutcome};

pub const HORIZON: usize = 100;
pub const BIG_BOX_REWARD: f64 = 300.0;
pub const SMALL_BOX_REWARD: f64 = 20.0;
pub const PENALTY: f64 = -10.0;

pub const MOVE_FORWARD: PrimitiveAction = 0;
pub const TURN_LEFT: PrimitiveAction = 1;
pub const TURN_RIGHT: PrimitiveAction = 2;
pub const STAY: PrimitiveAction = 3;
pub const N_PRIMITIVE: usize = 4;

pub const MACRO_NAMES: [&str; 8] = [
    "Turn-left",
    "Turn-right",
    "Stay",
    "Move-to-small-box(1)",
    "Move-to-small-box(2)",
    "Move-to-big-box(1)",
    "Move-to-big-box(2)",
    "Push",
];
pub const M_TURN_LEFT: usize = 0;
pub const M_TURN_RIGHT: usize = 1;
pub const M_STAY: usize = 2;
pub const M_SMALL_1: usize = 3;
pub const M_SMALL_2: usize = 4;
pub const M_BIG_1: usize = 5;
pub const M_BIG_2: usize = 6;
pub const M_PUSH: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    North,
    East,
    South,
    West,
}

impl Orientation {
    const ALL: [Orientation; 4] = [Self::North, Self::East, Self::South, Self::West];

    fn index(self) -> usize {
        self as usize
    }

    fn left(self) -> Self {
        Self::ALL[(self.index() + 3) % 4]
    }

    fn right(self) -> Self {
        Self::ALL[(self.index() + 1) % 4]
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Self::North => (-1, 0),
            Self::East => (0, 1),
            Self::South => (1, 0),
            Self::West => (0, -1),
        }
    }

    fn is_horizontal(self) -> bool {
        matches!(self, Self::East | Self::West)
    }
}

/// What an agent sees in the cell in front of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontCell {
    Empty,
    Teammate,
    Boundary,
    SmallBox,
    BigBox,
}

impl FrontCell {
    pub const COUNT: usize = 5;

    pub fn one_hot(self) -> Vec<f32> {
        let mut v = vec![0.0; Self::COUNT];
        v[self as usize] = 1.0;
        v
    }
}

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pose {
    pub row: usize,
    pub col: usize,
    pub facing: Orientation,
}

/// Outcome of an agent's last primitive action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveEvent {
    Turned,
    Stayed,
    Moved,
    PushedSmall,
    PushedBig,
    /// Forward into the boundary; the agent stays put.
    HitBoundary,
    /// Forward into the big box without a partner.
    BigBoxAlone,
    /// Forward blocked by the teammate, a collision, or an immovable small box.
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxPushingState {
    pub size: usize,
    pub agents: [Pose; 2],
    pub small_boxes: [Cell; 2],
    /// Left cell of the big box; it also covers the cell to its east.
    pub big_box: Cell,
    pub t: usize,
}

impl BoxPushingState {
    pub fn initial(size: usize) -> Result<Self> {
        if size < 6 || size % 2 != 0 {
            return Err(Error::Config(format!(
                "box pushing grid size must be even and at least 6, got {size}"
            )));
        }
        let mid = size / 2;
        let bottom = size - 1;
        Ok(BoxPushingState {
            size,
            agents: [
                Pose {
                    row: bottom,
                    col: 1,
                    facing: Orientation::North,
                },
                Pose {
                    row: bottom,
                    col: size - 2,
                    facing: Orientation::North,
                },
            ],
            small_boxes: [(mid, 1), (mid, size - 2)],
            big_box: (mid, mid - 1),
            t: 0,
        })
    }

    pub fn big_box_cells(&self) -> [Cell; 2] {
        let (r, c) = self.big_box;
        [(r, c), (r, c + 1)]
    }

    fn is_box(&self, cell: Cell) -> bool {
        self.small_boxes.contains(&cell) || self.big_box_cells().contains(&cell)
    }

    fn forward(&self, pose: Pose) -> Option<Cell> {
        let (dr, dc) = pose.facing.delta();
        let r = pose.row as isize + dr;
        let c = pose.col as isize + dc;
        let n = self.size as isize;
        (r >= 0 && c >= 0 && r < n && c < n).then_some((r as usize, c as usize))
    }

    pub fn front_cell(&self, agent: usize) -> FrontCell {
        let Some(cell) = self.forward(self.agents[agent]) else {
            return FrontCell::Boundary;
        };
        let mate = self.agents[1 - agent];
        if (mate.row, mate.col) == cell {
            FrontCell::Teammate
        } else if self.small_boxes.contains(&cell) {
            FrontCell::SmallBox
        } else if self.big_box_cells().contains(&cell) {
            FrontCell::BigBox
        } else {
            FrontCell::Empty
        }
    }

    /// Cell south of the target box that a navigation macro heads for.
    pub fn waypoint(&self, macro_id: usize) -> Option<Cell> {
        let (r, c) = match macro_id {
            M_SMALL_1 => self.small_boxes[0],
            M_SMALL_2 => self.small_boxes[1],
            M_BIG_1 => self.big_box_cells()[0],
            M_BIG_2 => self.big_box_cells()[1],
            _ => return None,
        };
        (r + 1 < self.size).then_some((r + 1, c))
    }

    /// Shortest number of primitive steps from every pose to `goal` facing
    /// north, with boxes as obstacles. Indexed `[row][col][orientation]`.
    pub fn distances_to(&self, goal: Cell) -> Vec<Vec<[usize; 4]>> {
        let n = self.size;
        let mut dist = vec![vec![[usize::MAX; 4]; n]; n];
        let mut queue = VecDeque::new();
        dist[goal.0][goal.1][Orientation::North.index()] = 0;
        queue.push_back(Pose {
            row: goal.0,
            col: goal.1,
            facing: Orientation::North,
        });
        // Reverse search: predecessors of `p` under turn-left, turn-right, forward.
        while let Some(p) = queue.pop_front() {
            let d = dist[p.row][p.col][p.facing.index()];
            let mut preds = vec![
                Pose {
                    facing: p.facing.right(),
                    ..p
                },
                Pose {
                    facing: p.facing.left(),
                    ..p
                },
            ];
            let (dr, dc) = p.facing.delta();
            let pr = p.row as isize - dr;
            let pc = p.col as isize - dc;
            if pr >= 0 && pc >= 0 && (pr as usize) < n && (pc as usize) < n {
                let cell = (pr as usize, pc as usize);
                if !self.is_box(cell) {
                    preds.push(Pose {
                        row: cell.0,
                        col: cell.1,
                        facing: p.facing,
                    });
                }
            }
            for q in preds {
                let slot = &mut dist[q.row][q.col][q.facing.index()];
                if *slot == usize::MAX {
                    *slot = d + 1;
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    /// Next primitive action towards `goal` facing north. Ties prefer column
    /// alignment: horizontal forward, then turns, then vertical forward.
    pub fn navigate(&self, agent: usize, goal: Cell) -> PrimitiveAction {
        let pose = self.agents[agent];
        let dist = self.distances_to(goal);
        let here = dist[pose.row][pose.col][pose.facing.index()];
        if here == 0 || here == usize::MAX {
            return STAY;
        }
        let forward = self
            .forward(pose)
            .filter(|&c| !self.is_box(c))
            .map(|(r, c)| dist[r][c][pose.facing.index()]);
        let left = dist[pose.row][pose.col][pose.facing.left().index()];
        let right = dist[pose.row][pose.col][pose.facing.right().index()];
        let mut options: Vec<(usize, PrimitiveAction)> = Vec::with_capacity(4);
        if pose.facing.is_horizontal() {
            if let Some(d) = forward {
                options.push((d, MOVE_FORWARD));
            }
        }
        options.push((left, TURN_LEFT));
        options.push((right, TURN_RIGHT));
        if !pose.facing.is_horizontal() {
            if let Some(d) = forward {
                options.push((d, MOVE_FORWARD));
            }
        }
        options
            .into_iter()
            .filter(|&(d, _)| d == here - 1)
            .map(|(_, a)| a)
            .next()
            .unwrap_or(STAY)
    }
}

/// The Box Pushing environment.
#[derive(Debug, Clone)]
pub struct BoxPushing {
    state: BoxPushingState,
    events: [MoveEvent; 2],
    macros: Vec<MacroActionDef<BoxPushing>>,
}

impl BoxPushing {
    /// Environment with the eight macro-actions.
    pub fn new(size: usize) -> Result<Self> {
        Ok(BoxPushing {
            state: BoxPushingState::initial(size)?,
            events: [MoveEvent::Stayed; 2],
            macros: macro_set(),
        })
    }

    /// Environment whose macro set is the four primitive actions as one-step macros.
    pub fn primitive(size: usize) -> Result<Self> {
        let names = ["move-forward", "turn-left", "turn-right", "stay"];
        Ok(BoxPushing {
            macros: names
                .iter()
                .enumerate()
                .map(|(a, n)| MacroActionDef::one_step(a, *n, a))
                .collect(),
            ..Self::new(size)?
        })
    }

    pub fn state(&self) -> &BoxPushingState {
        &self.state
    }

    /// Replaces the state (test fixtures and scripted scenarios).
    pub fn set_state(&mut self, state: BoxPushingState) {
        self.state = state;
        self.events = [MoveEvent::Stayed; 2];
    }

    pub fn last_events(&self) -> [MoveEvent; 2] {
        self.events
    }

    /// Discounted return of both robots walking to the big box and pushing it
    /// to the goal together.
    pub fn optimal_discounted_return(size: usize, gamma: f64) -> Result<f64> {
        let mut env = BoxPushing::new(size)?;
        let mut policy = crate::macdec::ScriptedPolicy::from_plans(vec![
            vec![M_BIG_1, M_PUSH],
            vec![M_BIG_2, M_PUSH],
        ]);
        let opts = crate::macdec::EpisodeOptions {
            epsilon: 0.0,
            gamma,
            seed: 0,
        };
        let summary = crate::macdec::run_episode(
            &mut env,
            &mut policy,
            &opts,
            &mut crate::macdec::NullRecorder,
        )?;
        Ok(summary.discounted_return)
    }
}

fn macro_set() -> Vec<MacroActionDef<BoxPushing>> {
    let mut v = vec![
        MacroActionDef::one_step(M_TURN_LEFT, MACRO_NAMES[M_TURN_LEFT], TURN_LEFT),
        MacroActionDef::one_step(M_TURN_RIGHT, MACRO_NAMES[M_TURN_RIGHT], TURN_RIGHT),
        MacroActionDef::one_step(M_STAY, MACRO_NAMES[M_STAY], STAY),
    ];
    for id in [M_SMALL_1, M_SMALL_2, M_BIG_1, M_BIG_2] {
        v.push(MacroActionDef::new(
            id,
            MACRO_NAMES[id],
            move |env: &BoxPushing, agent, _ctx: &MacroContext| match env.state.waypoint(id) {
                Some(goal) => env.state.navigate(agent, goal),
                None => STAY,
            },
            move |env: &BoxPushing, agent, _ctx| {
                let s = &env.state;
                let pose = s.agents[agent];
                let Some(goal) = s.waypoint(id) else {
                    return true;
                };
                let arrived = (pose.row, pose.col) == goal && pose.facing == Orientation::North;
                let stuck = s.distances_to(goal)[pose.row][pose.col][pose.facing.index()] == usize::MAX;
                arrived || stuck || env.events[agent] == MoveEvent::Blocked
            },
        ));
    }
    v.push(MacroActionDef::new(
        M_PUSH,
        MACRO_NAMES[M_PUSH],
        |_: &BoxPushing, _, _| MOVE_FORWARD,
        |env: &BoxPushing, agent, _| {
            let continuing = matches!(
                env.events[agent],
                MoveEvent::Moved | MoveEvent::PushedSmall | MoveEvent::PushedBig
            );
            !continuing || env.state.front_cell(agent) == FrontCell::Boundary
        },
    ));
    v
}

impl MacroEnv for BoxPushing {
    fn n_agents(&self) -> usize {
        2
    }

    fn n_primitive_actions(&self, _agent: usize) -> usize {
        N_PRIMITIVE
    }

    fn macro_actions(&self, _agent: usize) -> &[MacroActionDef<Self>] {
        &self.macros
    }

    fn macro_obs_dim(&self, _agent: usize) -> usize {
        FrontCell::COUNT
    }

    fn state_dim(&self) -> usize {
        18
    }

    fn horizon(&self) -> usize {
        HORIZON
    }

    fn reset(&mut self, _seed: u64) -> Result<()> {
        self.state = BoxPushingState::initial(self.state.size)?;
        self.events = [MoveEvent::Stayed; 2];
        Ok(())
    }

    fn step(&mut self, actions: &[PrimitiveAction]) -> Result<StepOutcome> {
        if actions.len() != 2 {
            return Err(Error::LengthMismatch {
                what: "joint action",
                left: 2,
                right: actions.len(),
            });
        }
        for (agent, &a) in actions.iter().enumerate() {
            if a >= N_PRIMITIVE {
                return Err(Error::InvalidAction {
                    agent,
                    action: a,
                    limit: N_PRIMITIVE,
                });
            }
        }
        let s = &self.state;
        let mut reward = 0.0;
        let mut events = [MoveEvent::Stayed; 2];
        let mut targets: [Option<Cell>; 2] = [None; 2];
        let mut small_moves: [Option<(usize, Cell)>; 2] = [None; 2];

        let big = s.big_box_cells();
        let pushing_big = |i: usize| {
            let p = s.agents[i];
            actions[i] == MOVE_FORWARD
                && p.facing == Orientation::North
                && s.forward(p).is_some_and(|c| big.contains(&c))
        };
        let joint_big = pushing_big(0)
            && pushing_big(1)
            && s.forward(s.agents[0]) != s.forward(s.agents[1])
            && s.big_box.0 > 0;

        for i in 0..2 {
            let pose = s.agents[i];
            match actions[i] {
                TURN_LEFT | TURN_RIGHT => events[i] = MoveEvent::Turned,
                STAY => events[i] = MoveEvent::Stayed,
                _ => {
                    let mate = s.agents[1 - i];
                    events[i] = match s.forward(pose) {
                        None => MoveEvent::HitBoundary,
                        Some(c) if c == (mate.row, mate.col) => MoveEvent::Blocked,
                        Some(c) if big.contains(&c) => {
                            if joint_big {
                                targets[i] = Some(c);
                                MoveEvent::PushedBig
                            } else {
                                MoveEvent::BigBoxAlone
                            }
                        }
                        Some(c) => {
                            if let Some(b) = s.small_boxes.iter().position(|&sb| sb == c) {
                                let dest = (c.0.wrapping_sub(1), c.1);
                                let free = pose.facing == Orientation::North
                                    && c.0 > 0
                                    && !s.is_box(dest)
                                    && (mate.row, mate.col) != dest;
                                if free {
                                    targets[i] = Some(c);
                                    small_moves[i] = Some((b, dest));
                                    MoveEvent::PushedSmall
                                } else {
                                    MoveEvent::Blocked
                                }
                            } else {
                                targets[i] = Some(c);
                                MoveEvent::Moved
                            }
                        }
                    };
                }
            }
        }

        // Two agents (or an agent and a pushed box) contending for one cell:
        // nobody involved moves.
        let contested = |a: Option<Cell>, b: Option<Cell>| a.is_some() && a == b;
        let box_dest = |i: usize| small_moves[i].map(|(_, d)| d);
        let clash = contested(targets[0], targets[1])
            || contested(box_dest(0), targets[1])
            || contested(box_dest(1), targets[0])
            || contested(box_dest(0), box_dest(1));
        if clash {
            for i in 0..2 {
                if targets[i].is_some() {
                    targets[i] = None;
                    small_moves[i] = None;
                    events[i] = MoveEvent::Blocked;
                }
            }
        }

        for e in events {
            if matches!(e, MoveEvent::HitBoundary | MoveEvent::BigBoxAlone) {
                reward += PENALTY;
            }
        }

        let mut next = s.clone();
        for i in 0..2 {
            let pose = &mut next.agents[i];
            match actions[i] {
                TURN_LEFT => pose.facing = pose.facing.left(),
                TURN_RIGHT => pose.facing = pose.facing.right(),
                _ => {}
            }
            if let Some((r, c)) = targets[i] {
                pose.row = r;
                pose.col = c;
            }
            if let Some((b, dest)) = small_moves[i] {
                next.small_boxes[b] = dest;
            }
        }
        let mut terminal = false;
        if events[0] == MoveEvent::PushedBig {
            next.big_box.0 -= 1;
            if next.big_box.0 == 0 {
                reward += BIG_BOX_REWARD;
                terminal = true;
            }
        }
        for i in 0..2 {
            if let Some((_, dest)) = small_moves[i] {
                if dest.0 == 0 {
                    reward += SMALL_BOX_REWARD;
                    terminal = true;
                }
            }
        }
        next.t += 1;
        self.state = next;
        self.events = events;
        Ok(StepOutcome { reward, terminal })
    }

    fn timestep(&self) -> usize {
        self.state.t
    }

    fn macro_observation(&self, agent: usize) -> MacroObs {
        MacroObs(self.state.front_cell(agent).one_hot())
    }

    fn primitive_observation(&self, agent: usize) -> Vec<f32> {
        self.state.front_cell(agent).one_hot()
    }

    fn state_features(&self) -> Vec<f32> {
        let s = &self.state;
        let n = s.size as f32;
        let mut f = Vec::with_capacity(18);
        for p in &s.agents {
            f.push(p.row as f32 / n);
            f.push(p.col as f32 / n);
            let mut o = [0.0; 4];
            o[p.facing.index()] = 1.0;
            f.extend_from_slice(&o);
        }
        for &(r, c) in &s.small_boxes {
            f.push(r as f32 / n);
            f.push(c as f32 / n);
        }
        f.push(s.big_box.0 as f32 / n);
        f.push(s.big_box.1 as f32 / n);
        f
    }

    fn render(&self) -> String {
        let s = &self.state;
        let mut out = String::new();
        for r in 0..s.size {
            for c in 0..s.size {
                let ch = if let Some(i) = s.agents.iter().position(|p| (p.row, p.col) == (r, c)) {
                    match s.agents[i].facing {
                        Orientation::North => ['^', 'A'][i],
                        Orientation::East => ['>', 'D'][i],
                        Orientation::South => ['v', 'V'][i],
                        Orientation::West => ['<', 'C'][i],
                    }
                } else if s.small_boxes.contains(&(r, c)) {
                    'b'
                } else if s.big_box_cells().contains(&(r, c)) {
                    'B'
                } else if r == 0 {
                    '='
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "t={}", s.t);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_below_six_is_rejected() {
        assert!(matches!(BoxPushing::new(4), Err(Error::Config(_))));
        assert!(matches!(BoxPushing::new(7), Err(Error::Config(_))));
    }

    #[test]
    fn initial_front_cells_are_empty() {
        let env = BoxPushing::new(8).unwrap();
        assert_eq!(env.state.front_cell(0), FrontCell::Empty);
        assert_eq!(env.state.front_cell(1), FrontCell::Empty);
    }

    #[test]
    fn turning_changes_orientation_only() {
        let mut env = BoxPushing::new(6).unwrap();
        let before = env.state.clone();
        let out = env.step(&[TURN_LEFT, TURN_RIGHT]).unwrap();
        assert_eq!(out.reward, 0.0);
        assert_eq!(env.state.agents[0].facing, Orientation::West);
        assert_eq!(env.state.agents[1].facing, Orientation::East);
        assert_eq!(env.state.agents[0].row, before.agents[0].row);
        assert_eq!(env.state.small_boxes, before.small_boxes);
    }

    #[test]
    fn malformed_action_is_an_error() {
        let mut env = BoxPushing::new(6).unwrap();
        assert!(matches!(
            env.step(&[4, 0]),
            Err(Error::InvalidAction { action: 4, .. })
        ));
    }

    #[test]
    fn small_box_is_pushed_north() {
        let mut env = BoxPushing::new(6).unwrap();
        let mut s = env.state.clone();
        s.agents[0].row = 4;
        env.set_state(s);
        env.step(&[MOVE_FORWARD, STAY]).unwrap();
        assert_eq!(env.state.small_boxes[0], (2, 1));
        assert_eq!((env.state.agents[0].row, env.state.agents[0].col), (3, 1));
    }

    #[test]
    fn navigation_reaches_waypoint_in_shortest_time() {
        let env = BoxPushing::new(8).unwrap();
        let goal = env.state.waypoint(M_BIG_1).unwrap();
        assert_eq!(goal, (5, 3));
        let d = env.state.distances_to(goal);
        let p = env.state.agents[0];
        // Turn right, two steps east, turn left, two steps north.
        assert_eq!(d[p.row][p.col][p.facing.index()], 6);
        assert_eq!(env.state.navigate(0, goal), TURN_RIGHT);
    }

    #[test]
    fn render_has_all_objects() {
        let env = BoxPushing::new(6).unwrap();
        let r = env.render();
        assert_eq!(r.matches('b').count(), 2);
        assert_eq!(r.matches('B').count(), 2);
        assert_eq!(r.matches('^').count() + r.matches('A').count(), 2);
    }

    #[test]
    fn scripted_team_push_reaches_goal() {
        for (n, steps) in [(6usize, 4 + 3), (8, 6 + 4), (10, 8 + 5), (12, 10 + 6), (14, 12 + 7)] {
            let ret = BoxPushing::optimal_discounted_return(n, 0.95).unwrap();
            assert!((ret - 300.0 * 0.95f64.powi(steps as i32 - 1)).abs() < 1e-9, "size {n}: {ret}");
        }
    }
}
