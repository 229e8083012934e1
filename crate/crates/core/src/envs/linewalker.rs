use serde::{Deserialize, Serialize};

use super::{clamp, perturbed, EnvSpec, Environment, EpisodeClock, StepResult};
use crate::error::{check_dim, Result};
use crate::scalar::Scalar;

/// Walker analogue: state `(p, v, u)` is position, speed and tilt; the
/// actions are thrust and balance. Speed feeds the tilt, so going fast
/// risks a fall, which ends the episode with a penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineWalkerParams {
    pub thrust_gain: f64,
    pub drag: f64,
    pub max_speed: f64,
    pub dt: f64,
    pub balance_gain: f64,
    pub tilt_coupling: f64,
    pub action_cost: f64,
    pub fall_tilt: f64,
    pub fall_penalty: f64,
    pub max_steps: usize,
    pub reset_noise: f64,
}

impl Default for LineWalkerParams {
    fn default() -> Self {
        Self {
            thrust_gain: 0.1,
            drag: 0.01,
            max_speed: 2.0,
            dt: 0.1,
            balance_gain: 0.05,
            tilt_coupling: 0.01,
            action_cost: 0.01,
            fall_tilt: 1.0,
            fall_penalty: 1.0,
            max_steps: 200,
            reset_noise: 0.05,
        }
    }
}

impl LineWalkerParams {
    /// Pure transition: `(next state, reward, fell)`.
    pub fn dynamics<T: Scalar>(&self, s: &[T], a: &[T]) -> (Vec<T>, T, bool) {
        let (p, v, u) = (s[0], s[1], s[2]);
        let (a1, a2) = (a[0], a[1]);
        let vmax = T::lit(self.max_speed);
        let v2 = clamp(
            v + T::lit(self.thrust_gain) * a1 - T::lit(self.drag) * v,
            -vmax,
            vmax,
        );
        let p2 = p + T::lit(self.dt) * v2;
        let u2 = u + T::lit(self.balance_gain) * a2 + T::lit(self.tilt_coupling) * v2;
        let fell = u2.abs() > T::lit(self.fall_tilt);
        let mut r = v2 - T::lit(self.action_cost) * (a1 * a1 + a2 * a2);
        if fell {
            r -= T::lit(self.fall_penalty);
        }
        (vec![p2, v2, u2], r, fell)
    }
}

pub struct LineWalker<T> {
    params: LineWalkerParams,
    spec: EnvSpec<T>,
    state: Vec<T>,
    clock: EpisodeClock,
}

impl<T: Scalar> LineWalker<T> {
    pub fn new(params: LineWalkerParams) -> Self {
        let spec = EnvSpec {
            name: "linewalker",
            state_dim: 3,
            action_dim: 2,
            action_low: vec![-T::one(); 2],
            action_high: vec![T::one(); 2],
            max_steps: params.max_steps,
        };
        Self {
            params,
            spec,
            state: vec![T::zero(); 3],
            clock: EpisodeClock {
                steps: 0,
                done: true,
            },
        }
    }

    /// Overrides the current state (for scripted scenarios).
    pub fn set_state(&mut self, s: &[T]) {
        self.state = s.to_vec();
    }
}

impl<T: Scalar> Environment<T> for LineWalker<T> {
    fn spec(&self) -> &EnvSpec<T> {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<T> {
        self.state = perturbed(&[0.0, 0.0, 0.0], self.params.reset_noise, seed);
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
        let (next, r, fell) = self.params.dynamics(&self.state, &a);
        self.state = next.clone();
        Ok(self.clock.finish_step(next, r, fell, self.params.max_steps))
    }
}
