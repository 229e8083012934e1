use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{clamp, perturbed, EnvSpec, Environment, EpisodeClock, StepResult};
use crate::error::{check_dim, Result};
use crate::scalar::Scalar;

/// Torque-limited pendulum swing-up. The internal state is the angle from
/// upright and the angular velocity; observations are
/// `(cos θ, sin θ, ω)`. Episodes start hanging down and never terminate early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumParams {
    pub gravity: f64,
    pub gravity_scale: f64,
    pub torque_gain: f64,
    pub dt: f64,
    pub max_speed: f64,
    pub max_torque: f64,
    pub speed_cost: f64,
    pub torque_cost: f64,
    pub max_steps: usize,
    /// Perturbation applied to the angle and the angular velocity at reset.
    pub reset_noise: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            gravity_scale: 1.5,
            torque_gain: 3.0,
            dt: 0.05,
            max_speed: 8.0,
            max_torque: 2.0,
            speed_cost: 0.1,
            torque_cost: 0.001,
            max_steps: 200,
            reset_noise: 0.05,
        }
    }
}

/// Angle wrapped into `[-π, π)`.
pub(crate) fn wrap_angle<T: Scalar>(theta: T) -> T {
    let pi = T::lit(PI);
    let two_pi = pi + pi;
    let mut x = (theta + pi) % two_pi;
    if x < T::zero() {
        x += two_pi;
    }
    x - pi
}

impl PendulumParams {
    /// Pure transition on `(θ, ω)`: returns the next `(θ, ω)` and the reward.
    pub fn dynamics<T: Scalar>(&self, theta: T, omega: T, torque: T) -> (T, T, T) {
        let dt = T::lit(self.dt);
        // -g sin(θ + π), written so that θ = 0 is an exact rest point
        let pull = T::lit(self.gravity) * theta.sin() * T::lit(self.gravity_scale);
        let wmax = T::lit(self.max_speed);
        let omega2 = clamp(
            omega + dt * (pull + T::lit(self.torque_gain) * torque),
            -wmax,
            wmax,
        );
        let theta2 = theta + dt * omega2;
        let w = wrap_angle(theta);
        let r = -(w * w
            + T::lit(self.speed_cost) * omega2 * omega2
            + T::lit(self.torque_cost) * torque * torque);
        (theta2, omega2, r)
    }
}

pub struct Pendulum<T> {
    params: PendulumParams,
    spec: EnvSpec<T>,
    theta: T,
    omega: T,
    clock: EpisodeClock,
}

impl<T: Scalar> Pendulum<T> {
    pub fn new(params: PendulumParams) -> Self {
        let tmax = T::lit(params.max_torque);
        let spec = EnvSpec {
            name: "pendulum",
            state_dim: 3,
            action_dim: 1,
            action_low: vec![-tmax],
            action_high: vec![tmax],
            max_steps: params.max_steps,
        };
        Self {
            params,
            spec,
            theta: T::lit(PI),
            omega: T::zero(),
            clock: EpisodeClock {
                steps: 0,
                done: true,
            },
        }
    }

    fn observe(&self) -> Vec<T> {
        vec![self.theta.cos(), self.theta.sin(), self.omega]
    }
}

impl<T: Scalar> Environment<T> for Pendulum<T> {
    fn spec(&self) -> &EnvSpec<T> {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<T> {
        let start: Vec<T> = perturbed(&[PI, 0.0], self.params.reset_noise, seed);
        self.theta = start[0];
        self.omega = start[1];
        self.clock.start();
        self.observe()
    }

    fn step(&mut self, action: &[T]) -> Result<StepResult<T>> {
        self.clock.begin_step()?;
        check_dim(1, action.len())?;
        let tmax = T::lit(self.params.max_torque);
        let torque = clamp(action[0], -tmax, tmax);
        let (theta, omega, r) = self.params.dynamics(self.theta, self.omega, torque);
        self.theta = theta;
        self.omega = omega;
        Ok(self
            .clock
            .finish_step(self.observe(), r, false, self.params.max_steps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * PI) - (-PI)).abs() < 1e-12);
        assert!((wrap_angle(-0.5f64) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(2.0 * PI + 0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn upright_at_rest_is_an_equilibrium() {
        let (theta, omega, r) = PendulumParams::default().dynamics(0.0f64, 0.0, 0.0);
        assert_eq!((theta, omega, r), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gravity_pulls_away_from_upright() {
        // sin(θ+π) = -sin θ, so a small positive angle accelerates positively
        let (_, omega, _) = PendulumParams::default().dynamics(0.1f64, 0.0, 0.0);
        let expected = 0.05 * 9.8 * 1.5 * 0.1f64.sin();
        assert!((omega - expected).abs() < 1e-12);
    }

    #[test]
    fn torque_and_speed_are_bounded() {
        let mut env = Pendulum::<f64>::new(PendulumParams::default());
        env.reset(0);
        for _ in 0..200 {
            let res = env.step(&[10.0]).unwrap();
            assert!(res.s_next[2].abs() <= 8.0);
            if res.done {
                break;
            }
        }
    }
}
