use serde::{Deserialize, Serialize};

use super::{clamp, perturbed, EnvSpec, Environment, EpisodeClock, StepResult};
use crate::error::{check_dim, Result};
use crate::scalar::Scalar;

/// Planar point mass `(x, y, vx, vy)` rewarded for progress towards a
/// fixed goal, with a bonus on arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointGoalParams {
    pub goal: [f64; 2],
    pub accel_gain: f64,
    pub max_speed: f64,
    pub dt: f64,
    pub goal_radius: f64,
    pub goal_bonus: f64,
    pub max_steps: usize,
    pub reset_noise: f64,
}

impl Default for PointGoalParams {
    fn default() -> Self {
        Self {
            goal: [5.0, 5.0],
            accel_gain: 0.1,
            max_speed: 1.0,
            dt: 0.1,
            goal_radius: 0.2,
            goal_bonus: 5.0,
            max_steps: 150,
            reset_noise: 0.05,
        }
    }
}

impl PointGoalParams {
    pub fn dynamics<T: Scalar>(&self, s: &[T], a: &[T]) -> (Vec<T>, T, bool) {
        let vmax = T::lit(self.max_speed);
        let vx = clamp(s[2] + T::lit(self.accel_gain) * a[0], -vmax, vmax);
        let vy = clamp(s[3] + T::lit(self.accel_gain) * a[1], -vmax, vmax);
        let x = s[0] + T::lit(self.dt) * vx;
        let y = s[1] + T::lit(self.dt) * vy;
        let (gx, gy) = (T::lit(self.goal[0]), T::lit(self.goal[1]));
        let before = (s[0] - gx).hypot(s[1] - gy);
        let after = (x - gx).hypot(y - gy);
        let reached = after < T::lit(self.goal_radius);
        let mut r = before - after;
        if reached {
            r += T::lit(self.goal_bonus);
        }
        (vec![x, y, vx, vy], r, reached)
    }
}

pub struct PointGoal<T> {
    params: PointGoalParams,
    spec: EnvSpec<T>,
    state: Vec<T>,
    clock: EpisodeClock,
}

impl<T: Scalar> PointGoal<T> {
    pub fn new(params: PointGoalParams) -> Self {
        let spec = EnvSpec {
            name: "pointgoal",
            state_dim: 4,
            action_dim: 2,
            action_low: vec![-T::one(); 2],
            action_high: vec![T::one(); 2],
            max_steps: params.max_steps,
        };
        Self {
            params,
            spec,
            state: vec![T::zero(); 4],
            clock: EpisodeClock {
                steps: 0,
                done: true,
            },
        }
    }
}

impl<T: Scalar> Environment<T> for PointGoal<T> {
    fn spec(&self) -> &EnvSpec<T> {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<T> {
        self.state = perturbed(&[0.0; 4], self.params.reset_noise, seed);
        self.clock.start();
        self.state.clone()
    }

    fn step(&mut self, action: &[T]) -> Result<StepResult<T>> {
        self.clock.begin_step()?;
        check_dim(2, action.len())?;
        let a: Vec<T> = action
            .iter()
            .map(|&x| clamp(x, -T::one(), T::one()))
            .collect();
        let (next, r, reached) = self.params.dynamics(&self.state, &a);
        self.state = next.clone();
        Ok(self
            .clock
            .finish_step(next, r, reached, self.params.max_steps))
    }
}
