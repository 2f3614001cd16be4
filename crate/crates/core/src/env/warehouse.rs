//! Warehouse tool delivery, scenario A: an arm robot in the tool room finds
//! tools and hands them to two mobile robots, which deliver them to two
//! humans working through four subtasks each.
//!
//! Agents 0 and 1 are the mobile robots, agent 2 is the arm.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::macdec::{MacroActionDef, MacroEnv, MacroObs, PrimitiveAction, StepOutcome};

pub const HORIZON: usize = 200;
pub const N_TOOLS: usize = 3;
pub const N_HUMANS: usize = 2;
pub const N_SUBTASKS: usize = 4;
pub const TOOLS_PER_TYPE: usize = 2;
pub const STAGING_CAPACITY: usize = 2;
pub const SEARCH_STEPS: usize = 6;
pub const PASS_STEPS: usize = 4;
pub const GET_TOOL_WAIT: usize = 10;
pub const SPEED: f64 = 0.8;
pub const HUMAN_DURATIONS: [usize; N_SUBTASKS] = [27, 20, 20, 20];

pub const STEP_REWARD: f64 = -1.0;
pub const DELIVERY_REWARD: f64 = 100.0;
pub const LATE_PENALTY: f64 = -20.0;
pub const BAD_PASS_PENALTY: f64 = -10.0;

pub const ARM: usize = 2;

/// Named locations, with coordinates in a 7 x 5 area.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waypoint {
    /// Arm-side waiting spot of mobile robot 0.
    ArmSide0,
    ArmSide1,
    ToolRoom,
    Workshop0,
    Workshop1,
}

impl Waypoint {
    pub const ALL: [Waypoint; 5] = [
        Self::ArmSide0,
        Self::ArmSide1,
        Self::ToolRoom,
        Self::Workshop0,
        Self::Workshop1,
    ];

    pub fn coords(self) -> (f64, f64) {
        match self {
            Self::ArmSide0 => (1.5, 1.5),
            Self::ArmSide1 => (1.5, 3.5),
            Self::ToolRoom => (2.5, 2.5),
            Self::Workshop0 => (5.5, 1.0),
            Self::Workshop1 => (5.5, 4.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ArmSide0 => "AS0",
            Self::ArmSide1 => "AS1",
            Self::ToolRoom => "TR",
            Self::Workshop0 => "W0",
            Self::Workshop1 => "W1",
        }
    }

    fn arm_side(robot: usize) -> Self {
        [Self::ArmSide0, Self::ArmSide1][robot]
    }

    fn workshop(h: usize) -> Self {
        [Self::Workshop0, Self::Workshop1][h]
    }

    fn in_tool_room(self) -> bool {
        matches!(self, Self::ArmSide0 | Self::ArmSide1 | Self::ToolRoom)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// `ceil(distance / speed)` steps.
pub fn travel_steps(from: Waypoint, to: Waypoint) -> usize {
    let (ax, ay) = from.coords();
    let (bx, by) = to.coords();
    let d = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
    (d / SPEED - 1e-9).ceil().max(0.0) as usize
}

/// Writes `from,to,steps` for every ordered pair of distinct waypoints.
pub fn write_travel_table(path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["from", "to", "steps"])?;
    for a in Waypoint::ALL {
        for b in Waypoint::ALL {
            if a != b {
                w.write_record([a.name(), b.name(), &travel_steps(a, b).to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

// Mobile primitive actions.
pub const MOBILE_TO_W0: PrimitiveAction = 0;
pub const MOBILE_TO_W1: PrimitiveAction = 1;
pub const MOBILE_TO_TR: PrimitiveAction = 2;
pub const MOBILE_TO_ARM: PrimitiveAction = 3;
pub const MOBILE_WAIT: PrimitiveAction = 4;
pub const N_MOBILE_PRIMITIVE: usize = 5;

// Arm primitive actions: one unit of work on a search or a pass.
pub const ARM_SEARCH: [PrimitiveAction; N_TOOLS] = [0, 1, 2];
pub const ARM_PASS: [PrimitiveAction; 2] = [3, 4];
pub const ARM_WAIT: PrimitiveAction = 5;
pub const N_ARM_PRIMITIVE: usize = 6;

pub const MOBILE_MACROS: [&str; 4] = ["Go-W0", "Go-W1", "Go-TR", "Get-Tool"];
pub const M_GO_W0: usize = 0;
pub const M_GO_W1: usize = 1;
pub const M_GO_TR: usize = 2;
pub const M_GET_TOOL: usize = 3;

pub const ARM_MACROS: [&str; 6] = [
    "Search-Tool0",
    "Search-Tool1",
    "Search-Tool2",
    "Pass-to-M0",
    "Pass-to-M1",
    "Wait-M",
];
pub const M_SEARCH: [usize; N_TOOLS] = [0, 1, 2];
pub const M_PASS: [usize; 2] = [3, 4];
pub const M_WAIT: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct MobileRobot {
    pub x: f64,
    pub y: f64,
    /// Waypoint the robot is standing on, `None` while travelling.
    pub at: Option<Waypoint>,
    pub carrying: Option<usize>,
    /// Received a tool during the last step.
    pub just_received: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Human {
    pub subtask: usize,
    pub progress: usize,
    pub paused: bool,
    /// Tools received so far; they are only accepted in order.
    pub received: usize,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarehouseState {
    pub mobiles: [MobileRobot; 2],
    /// Arm activity (primitive action) and consecutive steps spent on it.
    pub arm: Option<(PrimitiveAction, usize)>,
    pub staging: Vec<usize>,
    pub humans: [Human; N_HUMANS],
    pub on_table: [usize; N_TOOLS],
    pub delivered: [usize; N_TOOLS],
    pub t: usize,
}

impl WarehouseState {
    pub fn initial() -> Self {
        let (x, y) = Waypoint::ToolRoom.coords();
        let robot = MobileRobot {
            x,
            y,
            at: Some(Waypoint::ToolRoom),
            carrying: None,
            just_received: false,
        };
        let human = Human {
            subtask: 0,
            progress: 0,
            paused: false,
            received: 0,
            finished: false,
        };
        WarehouseState {
            mobiles: [robot.clone(), robot],
            arm: None,
            staging: Vec::new(),
            humans: [human.clone(), human],
            on_table: [TOOLS_PER_TYPE; N_TOOLS],
            delivered: [0; N_TOOLS],
            t: 0,
        }
    }

    /// Number of tools of `kind` anywhere in the world; always `TOOLS_PER_TYPE`.
    pub fn tool_count(&self, kind: usize) -> usize {
        self.on_table[kind]
            + self.staging.iter().filter(|&&k| k == kind).count()
            + self.mobiles.iter().filter(|m| m.carrying == Some(kind)).count()
            + self.delivered[kind]
    }

    pub fn waiting_at_arm(&self, robot: usize) -> bool {
        self.mobiles[robot].at == Some(Waypoint::arm_side(robot))
    }

    fn all_delivered(&self) -> bool {
        self.humans.iter().all(|h| h.received == N_TOOLS)
    }
}

#[derive(Debug, Clone)]
pub struct Warehouse {
    state: WarehouseState,
    mobile_macros: Vec<MacroActionDef<Warehouse>>,
    arm_macros: Vec<MacroActionDef<Warehouse>>,
}

impl Default for Warehouse {
    fn default() -> Self {
        Self::new()
    }
}

impl Warehouse {
    pub fn new() -> Self {
        Warehouse {
            state: WarehouseState::initial(),
            mobile_macros: mobile_macro_set(),
            arm_macros: arm_macro_set(),
        }
    }

    pub fn state(&self) -> &WarehouseState {
        &self.state
    }

    pub fn set_state(&mut self, state: WarehouseState) {
        self.state = state;
    }
}

fn go_action(target: Waypoint) -> PrimitiveAction {
    match target {
        Waypoint::Workshop0 => MOBILE_TO_W0,
        Waypoint::Workshop1 => MOBILE_TO_W1,
        Waypoint::ToolRoom => MOBILE_TO_TR,
        _ => MOBILE_TO_ARM,
    }
}

fn mobile_macro_set() -> Vec<MacroActionDef<Warehouse>> {
    let mut v: Vec<MacroActionDef<Warehouse>> = [
        (M_GO_W0, Waypoint::Workshop0),
        (M_GO_W1, Waypoint::Workshop1),
        (M_GO_TR, Waypoint::ToolRoom),
    ]
    .into_iter()
    .map(|(id, wp)| {
        MacroActionDef::new(
            id,
            MOBILE_MACROS[id],
            move |env: &Warehouse, agent, _| {
                if env.state.mobiles[agent].at == Some(wp) {
                    MOBILE_WAIT
                } else {
                    go_action(wp)
                }
            },
            move |env: &Warehouse, agent, _| env.state.mobiles[agent].at == Some(wp),
        )
    })
    .collect();
    v.push(MacroActionDef::new(
        M_GET_TOOL,
        MOBILE_MACROS[M_GET_TOOL],
        |env: &Warehouse, agent, _| {
            if env.state.waiting_at_arm(agent) {
                MOBILE_WAIT
            } else {
                MOBILE_TO_ARM
            }
        },
        |env: &Warehouse, agent, ctx| {
            let m = &env.state.mobiles[agent];
            if !env.state.waiting_at_arm(agent) {
                return false;
            }
            let waited = ctx.actions.iter().filter(|&&a| a == MOBILE_WAIT).count();
            m.just_received || m.carrying.is_some() || waited >= GET_TOOL_WAIT
        },
    ));
    v
}

fn arm_macro_set() -> Vec<MacroActionDef<Warehouse>> {
    let mut v = Vec::new();
    for tool in 0..N_TOOLS {
        let a = ARM_SEARCH[tool];
        v.push(MacroActionDef::new(
            M_SEARCH[tool],
            ARM_MACROS[M_SEARCH[tool]],
            move |_: &Warehouse, _, _| a,
            |_: &Warehouse, _, ctx| ctx.steps() >= SEARCH_STEPS,
        ));
    }
    for robot in 0..2 {
        let a = ARM_PASS[robot];
        v.push(MacroActionDef::new(
            M_PASS[robot],
            ARM_MACROS[M_PASS[robot]],
            move |_: &Warehouse, _, _| a,
            |_: &Warehouse, _, ctx| ctx.steps() >= PASS_STEPS,
        ));
    }
    v.push(MacroActionDef::one_step(M_WAIT, ARM_MACROS[M_WAIT], ARM_WAIT));
    v
}

fn one_hot(n: usize, k: Option<usize>) -> Vec<f32> {
    let mut v = vec![0.0; n];
    if let Some(k) = k {
        v[k] = 1.0;
    }
    v
}

impl MacroEnv for Warehouse {
    fn n_agents(&self) -> usize {
        3
    }

    fn n_primitive_actions(&self, agent: usize) -> usize {
        if agent == ARM {
            N_ARM_PRIMITIVE
        } else {
            N_MOBILE_PRIMITIVE
        }
    }

    fn macro_actions(&self, agent: usize) -> &[MacroActionDef<Self>] {
        if agent == ARM {
            &self.arm_macros
        } else {
            &self.mobile_macros
        }
    }

    fn macro_obs_dim(&self, agent: usize) -> usize {
        if agent == ARM {
            10
        } else {
            18
        }
    }

    fn state_dim(&self) -> usize {
        self.state_features().len()
    }

    fn horizon(&self) -> usize {
        HORIZON
    }

    fn reset(&mut self, _seed: u64) -> Result<()> {
        self.state = WarehouseState::initial();
        Ok(())
    }

    fn step(&mut self, actions: &[PrimitiveAction]) -> Result<StepOutcome> {
        if actions.len() != 3 {
            return Err(Error::LengthMismatch {
                what: "joint action",
                left: 3,
                right: actions.len(),
            });
        }
        for (agent, &a) in actions.iter().enumerate() {
            let limit = self.n_primitive_actions(agent);
            if a >= limit {
                return Err(Error::InvalidAction {
                    agent,
                    action: a,
                    limit,
                });
            }
        }
        let s = &mut self.state;
        let mut reward = STEP_REWARD;

        // Mobile robots move.
        for (i, m) in s.mobiles.iter_mut().enumerate() {
            m.just_received = false;
            let target = match actions[i] {
                MOBILE_TO_W0 => Waypoint::Workshop0,
                MOBILE_TO_W1 => Waypoint::Workshop1,
                MOBILE_TO_TR => Waypoint::ToolRoom,
                MOBILE_TO_ARM => Waypoint::arm_side(i),
                _ => continue,
            };
            if m.at == Some(target) {
                continue;
            }
            let (tx, ty) = target.coords();
            let (dx, dy) = (tx - m.x, ty - m.y);
            let d = (dx * dx + dy * dy).sqrt();
            if d <= SPEED + 1e-9 {
                m.x = tx;
                m.y = ty;
                m.at = Some(target);
            } else {
                m.x += dx / d * SPEED;
                m.y += dy / d * SPEED;
                m.at = None;
            }
        }

        // Arm works; completions take effect.
        let a = actions[ARM];
        let count = match s.arm {
            Some((prev, c)) if prev == a => c + 1,
            _ => 1,
        };
        s.arm = Some((a, count));
        if let Some(tool) = ARM_SEARCH.iter().position(|&x| x == a) {
            if count == SEARCH_STEPS {
                if s.staging.len() < STAGING_CAPACITY && s.on_table[tool] > 0 {
                    s.on_table[tool] -= 1;
                    s.staging.push(tool);
                }
                s.arm = None;
            }
        } else if let Some(robot) = ARM_PASS.iter().position(|&x| x == a) {
            if count == PASS_STEPS {
                if !s.waiting_at_arm(robot) {
                    reward += BAD_PASS_PENALTY;
                } else if s.mobiles[robot].carrying.is_none() && !s.staging.is_empty() {
                    let tool = s.staging.remove(0);
                    s.mobiles[robot].carrying = Some(tool);
                    s.mobiles[robot].just_received = true;
                }
                s.arm = None;
            }
        } else {
            s.arm = None;
        }

        // Deliveries.
        for m in s.mobiles.iter_mut() {
            let (Some(tool), Some(at)) = (m.carrying, m.at) else {
                continue;
            };
            for h in 0..N_HUMANS {
                if at != Waypoint::workshop(h) {
                    continue;
                }
                let human = &mut s.humans[h];
                if human.received < N_TOOLS && tool == human.received {
                    human.received += 1;
                    s.delivered[tool] += 1;
                    m.carrying = None;
                    reward += DELIVERY_REWARD;
                    if human.paused {
                        reward += LATE_PENALTY;
                    }
                }
            }
        }

        // Humans work.
        for h in s.humans.iter_mut() {
            if h.finished {
                continue;
            }
            if h.paused {
                if h.received > h.subtask {
                    h.paused = false;
                    h.subtask += 1;
                    h.progress = 0;
                }
                continue;
            }
            h.progress += 1;
            if h.progress >= HUMAN_DURATIONS[h.subtask] {
                if h.subtask + 1 == N_SUBTASKS {
                    h.finished = true;
                } else if h.received > h.subtask {
                    h.subtask += 1;
                    h.progress = 0;
                } else {
                    h.paused = true;
                }
            }
        }

        s.t += 1;
        Ok(StepOutcome {
            reward,
            terminal: s.all_delivered(),
        })
    }

    fn timestep(&self) -> usize {
        self.state.t
    }

    fn macro_observation(&self, agent: usize) -> MacroObs {
        MacroObs(self.primitive_observation(agent))
    }

    /// Arm: two staging slots (tool type or empty) and which robots wait beside
    /// it. Mobile: location, carried tool, staging count in the tool room, and
    /// the local human's subtask at a workshop.
    fn primitive_observation(&self, agent: usize) -> Vec<f32> {
        let s = &self.state;
        if agent == ARM {
            let mut v = Vec::with_capacity(10);
            for slot in 0..STAGING_CAPACITY {
                v.extend(one_hot(N_TOOLS + 1, Some(s.staging.get(slot).map_or(N_TOOLS, |&k| k))));
            }
            v.push(s.waiting_at_arm(0) as u8 as f32);
            v.push(s.waiting_at_arm(1) as u8 as f32);
            return v;
        }
        let m = &s.mobiles[agent];
        let mut v = Vec::with_capacity(18);
        v.extend(one_hot(6, Some(m.at.map_or(5, Waypoint::index))));
        v.extend(one_hot(N_TOOLS + 1, Some(m.carrying.map_or(N_TOOLS, |k| k))));
        let staging = m.at.filter(|w| w.in_tool_room()).map(|_| s.staging.len());
        v.extend(one_hot(STAGING_CAPACITY + 1, staging));
        let subtask = match m.at {
            Some(Waypoint::Workshop0) => Some(0),
            Some(Waypoint::Workshop1) => Some(1),
            _ => None,
        }
        .map(|h| {
            let hu = &s.humans[h];
            if hu.finished {
                N_SUBTASKS
            } else {
                hu.subtask
            }
        });
        v.extend(one_hot(N_SUBTASKS + 1, subtask));
        v
    }

    fn state_features(&self) -> Vec<f32> {
        let s = &self.state;
        let mut f = Vec::new();
        for m in &s.mobiles {
            f.push((m.x / 7.0) as f32);
            f.push((m.y / 5.0) as f32);
            f.extend(one_hot(N_TOOLS + 1, Some(m.carrying.map_or(N_TOOLS, |k| k))));
        }
        let (act, count) = s.arm.map_or((None, 0), |(a, c)| (Some(a), c));
        f.extend(one_hot(N_ARM_PRIMITIVE, act));
        f.push(count as f32 / SEARCH_STEPS as f32);
        for slot in 0..STAGING_CAPACITY {
            f.extend(one_hot(N_TOOLS + 1, Some(s.staging.get(slot).map_or(N_TOOLS, |&k| k))));
        }
        for h in &s.humans {
            f.extend(one_hot(N_SUBTASKS + 1, Some(if h.finished { N_SUBTASKS } else { h.subtask })));
            f.push(h.progress as f32 / HUMAN_DURATIONS[0] as f32);
            f.push(h.paused as u8 as f32);
            f.push(h.received as f32 / N_TOOLS as f32);
        }
        for &c in &s.on_table {
            f.push(c as f32 / TOOLS_PER_TYPE as f32);
        }
        f.push(s.t as f32 / HORIZON as f32);
        f
    }

    fn render(&self) -> String {
        let s = &self.state;
        let mut out = String::new();
        let _ = writeln!(out, "t={} staging={:?} table={:?}", s.t, s.staging, s.on_table);
        let arm = s
            .arm
            .map_or("idle".to_string(), |(a, c)| format!("action {a} x{c}"));
        let _ = writeln!(out, "arm: {arm}");
        for (i, m) in s.mobiles.iter().enumerate() {
            let at = m.at.map_or(format!("({:.2}, {:.2})", m.x, m.y), |w| w.name().to_string());
            let _ = writeln!(out, "mobile{i}: at {at} carrying {:?}", m.carrying);
        }
        for (i, h) in s.humans.iter().enumerate() {
            let _ = writeln!(
                out,
                "human{i}: subtask {} progress {} received {}{}{}",
                h.subtask,
                h.progress,
                h.received,
                if h.paused { " paused" } else { "" },
                if h.finished { " finished" } else { "" }
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn travel_table_values() {
        use Waypoint::*;
        assert_eq!(travel_steps(ToolRoom, ArmSide0), 2);
        assert_eq!(travel_steps(ToolRoom, Workshop0), 5);
        assert_eq!(travel_steps(ArmSide0, Workshop0), 6);
        assert_eq!(travel_steps(Workshop0, Workshop1), 4);
        assert_eq!(travel_steps(ArmSide1, Workshop1), 6);
    }

    #[test]
    fn travel_matches_simulated_motion() {
        let mut env = Warehouse::new();
        let mut steps = 0;
        while env.state.mobiles[0].at != Some(Waypoint::Workshop0) {
            env.step(&[MOBILE_TO_W0, MOBILE_WAIT, ARM_WAIT]).unwrap();
            steps += 1;
        }
        assert_eq!(steps, travel_steps(Waypoint::ToolRoom, Waypoint::Workshop0));
    }

    #[test]
    fn initial_state() {
        let s = WarehouseState::initial();
        assert!(s.staging.is_empty());
        assert_eq!(s.on_table, [2, 2, 2]);
        for h in &s.humans {
            assert_eq!((h.subtask, h.progress, h.received), (0, 0, 0));
        }
    }

    #[test]
    fn observation_dims() {
        let env = Warehouse::new();
        for i in 0..3 {
            assert_eq!(env.primitive_observation(i).len(), env.macro_obs_dim(i));
        }
    }

    #[test]
    fn human_pauses_without_tool() {
        let mut env = Warehouse::new();
        for _ in 0..HUMAN_DURATIONS[0] {
            env.step(&[MOBILE_WAIT, MOBILE_WAIT, ARM_WAIT]).unwrap();
        }
        assert!(env.state.humans[0].paused);
        assert_eq!(env.state.humans[0].subtask, 0);
    }
}
