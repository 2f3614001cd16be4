//! Macro-action Dec-POMDP abstractions: macro-action definitions, the
//! environment contract, and the executor that runs agents asynchronously at
//! the macro timescale on top of a primitive-timescale environment.

mod executor;
mod policy;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use executor::{run_episode, EpisodeOptions, EpisodeSummary, NullRecorder, Recorder};
pub use policy::{mix_epsilon, mix_epsilon_f64, sample_index, select_macro, JointPolicy, ScriptedPolicy};

pub type MacroId = usize;
pub type PrimitiveAction = usize;

/// Feature encoding of a macro-observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MacroObs(pub Vec<f32>);

impl MacroObs {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

/// Macro-level history of one agent: the macro-observations it captured and
/// the macro-actions it selected, interleaved `z0 m0 z1 m1 ... zk`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MacroHistory {
    pub observations: Vec<MacroObs>,
    pub macros: Vec<MacroId>,
}

/// Low-level execution context of the running macro-action.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroContext {
    pub macro_id: MacroId,
    /// Primitive timestep at which the macro started.
    pub start_time: usize,
    /// Primitive actions issued so far.
    pub actions: Vec<PrimitiveAction>,
    /// Primitive observations received after each action.
    pub observations: Vec<Vec<f32>>,
}

impl MacroContext {
    pub fn new(macro_id: MacroId, start_time: usize) -> Self {
        MacroContext {
            macro_id,
            start_time,
            actions: Vec::new(),
            observations: Vec::new(),
        }
    }

    pub fn steps(&self) -> usize {
        self.actions.len()
    }
}

type Initiation<E> = dyn Fn(&E, usize, &MacroHistory) -> bool + Send + Sync;
type Controller<E> = dyn Fn(&E, usize, &MacroContext) -> PrimitiveAction + Send + Sync;
type Termination<E> = dyn Fn(&E, usize, &MacroContext) -> bool + Send + Sync;

/// An option `<initiation, controller, termination>`.
///
/// Controllers and terminations read the environment through `&E`, which
/// stands in for the agent's low-level sensing.
pub struct MacroActionDef<E: ?Sized> {
    pub id: MacroId,
    pub name: String,
    initiation: Arc<Initiation<E>>,
    controller: Arc<Controller<E>>,
    termination: Arc<Termination<E>>,
}

impl<E: ?Sized> Clone for MacroActionDef<E> {
    fn clone(&self) -> Self {
        MacroActionDef {
            id: self.id,
            name: self.name.clone(),
            initiation: Arc::clone(&self.initiation),
            controller: Arc::clone(&self.controller),
            termination: Arc::clone(&self.termination),
        }
    }
}

impl<E: ?Sized> fmt::Debug for MacroActionDef<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MacroActionDef")
            .field("id", &self.id)
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl<E: ?Sized> MacroActionDef<E> {
    /// A macro that may always be initiated.
    pub fn new(
        id: MacroId,
        name: impl Into<String>,
        controller: impl Fn(&E, usize, &MacroContext) -> PrimitiveAction + Send + Sync + 'static,
        termination: impl Fn(&E, usize, &MacroContext) -> bool + Send + Sync + 'static,
    ) -> Self {
        MacroActionDef {
            id,
            name: name.into(),
            initiation: Arc::new(|_, _, _| true),
            controller: Arc::new(controller),
            termination: Arc::new(termination),
        }
    }

    /// A macro that issues `action` once and terminates.
    pub fn one_step(id: MacroId, name: impl Into<String>, action: PrimitiveAction) -> Self {
        Self::new(id, name, move |_, _, _| action, |_, _, ctx| ctx.steps() >= 1)
    }

    pub fn with_initiation(
        mut self,
        initiation: impl Fn(&E, usize, &MacroHistory) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.initiation = Arc::new(initiation);
        self
    }

    pub fn can_initiate(&self, env: &E, agent: usize, history: &MacroHistory) -> bool {
        (self.initiation)(env, agent, history)
    }

    pub fn control(&self, env: &E, agent: usize, ctx: &MacroContext) -> PrimitiveAction {
        (self.controller)(env, agent, ctx)
    }

    pub fn is_terminated(&self, env: &E, agent: usize, ctx: &MacroContext) -> bool {
        (self.termination)(env, agent, ctx)
    }
}

/// Outcome of one primitive step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Shared team reward.
    pub reward: f64,
    pub terminal: bool,
}

/// Contract every environment implements.
pub trait MacroEnv: Send + Sized {
    fn n_agents(&self) -> usize;
    fn n_primitive_actions(&self, agent: usize) -> usize;
    fn macro_actions(&self, agent: usize) -> &[MacroActionDef<Self>];
    fn macro_obs_dim(&self, agent: usize) -> usize;
    fn state_dim(&self) -> usize;
    /// Primitive-step horizon.
    fn horizon(&self) -> usize;
    /// Resets to the initial state; identical seeds reproduce identical states.
    fn reset(&mut self, seed: u64) -> Result<()>;
    /// Consumes exactly one joint primitive action.
    fn step(&mut self, actions: &[PrimitiveAction]) -> Result<StepOutcome>;
    fn timestep(&self) -> usize;
    fn macro_observation(&self, agent: usize) -> MacroObs;
    fn primitive_observation(&self, agent: usize) -> Vec<f32>;
    /// Ground-truth state features for centralized critics.
    fn state_features(&self) -> Vec<f32>;
    fn render(&self) -> String;

    fn n_macros(&self, agent: usize) -> usize {
        self.macro_actions(agent).len()
    }
}
