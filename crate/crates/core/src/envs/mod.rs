//! Deterministic continuous-control environments with a shared
//! reset/step interface. Only `reset` draws randomness (a bounded
//! perturbation of the nominal start state); `step` is a pure function of
//! the current state, the action and the step counter.

mod linewalker;
mod pendulum;
mod pointgoal;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{uniform, Scalar};

pub use linewalker::{LineWalker, LineWalkerParams};
pub use pendulum::{Pendulum, PendulumParams};
pub use pointgoal::{PointGoal, PointGoalParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec<T> {
    pub name: &'static str,
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<T>,
    pub action_high: Vec<T>,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoneReason {
    Terminal,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<T> {
    pub s_next: Vec<T>,
    pub r: T,
    pub done: bool,
    pub done_reason: Option<DoneReason>,
}

impl<T> StepResult<T> {
    pub fn is_terminal(&self) -> bool {
        self.done_reason == Some(DoneReason::Terminal)
    }
}

pub trait Environment<T: Scalar>: Send {
    fn spec(&self) -> &EnvSpec<T>;

    /// Starts an episode from the nominal state perturbed by seeded noise.
    fn reset(&mut self, seed: u64) -> Vec<T>;

    /// Advances one step; actions outside the box are clamped.
    fn step(&mut self, action: &[T]) -> Result<StepResult<T>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    LineWalker,
    PointGoal,
    Pendulum,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::LineWalker => "linewalker",
            EnvKind::PointGoal => "pointgoal",
            EnvKind::Pendulum => "pendulum",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linewalker" => Ok(EnvKind::LineWalker),
            "pointgoal" => Ok(EnvKind::PointGoal),
            "pendulum" => Ok(EnvKind::Pendulum),
            other => Err(Error::Config(format!(
                "unknown environment {other:?} (expected linewalker, pointgoal or pendulum)"
            ))),
        }
    }
}

/// Dynamics constants for every environment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvParams {
    pub linewalker: LineWalkerParams,
    pub pointgoal: PointGoalParams,
    pub pendulum: PendulumParams,
}

pub fn make_env<T: Scalar>(kind: EnvKind, params: &EnvParams) -> Box<dyn Environment<T>> {
    match kind {
        EnvKind::LineWalker => Box::new(LineWalker::new(params.linewalker.clone())),
        EnvKind::PointGoal => Box::new(PointGoal::new(params.pointgoal.clone())),
        EnvKind::Pendulum => Box::new(Pendulum::new(params.pendulum.clone())),
    }
}

fn perturbed<T: Scalar>(nominal: &[f64], amplitude: f64, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = T::lit(amplitude);
    nominal
        .iter()
        .map(|&x| T::lit(x) + uniform(&mut rng, -amp, amp))
        .collect()
}

fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

/// Shared episode bookkeeping: step counter and the done latch.
#[derive(Debug, Clone, Default)]
struct EpisodeClock {
    steps: usize,
    done: bool,
}

impl EpisodeClock {
    fn start(&mut self) {
        self.steps = 0;
        self.done = false;
    }

    fn begin_step(&self) -> Result<()> {
        if self.done {
            Err(Error::EpisodeOver)
        } else {
            Ok(())
        }
    }

    fn finish_step<T>(
        &mut self,
        s_next: Vec<T>,
        r: T,
        terminal: bool,
        max_steps: usize,
    ) -> StepResult<T> {
        self.steps += 1;
        let done_reason = if terminal {
            Some(DoneReason::Terminal)
        } else if self.steps >= max_steps {
            Some(DoneReason::Timeout)
        } else {
            None
        };
        self.done = done_reason.is_some();
        StepResult {
            s_next,
            r,
            done: self.done,
            done_reason,
        }
    }
}
