//! Deep deterministic policy gradient agent built on [`Mlp`].
//!
//! The actor emits `tanh` outputs that are mapped affinely onto the action
//! box; the critic reads the concatenation `[s, a]` and has a linear output.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::experience::Transition;
use crate::neural::adam::Adam;
use crate::neural::checkpoint::{put_u32, take_magic, take_u32, AGENT_MAGIC};
use crate::neural::mlp::{Activation, Mlp, Trace};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseConfig {
    OrnsteinUhlenbeck { theta: f64, sigma: f64 },
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdpgConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Output layers start in `±final_init`.
    pub final_init: f64,
    pub noise: NoiseConfig,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            gamma: 0.99,
            tau: 0.001,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            final_init: 3e-3,
            noise: NoiseConfig::OrnsteinUhlenbeck {
                theta: 0.15,
                sigma: 0.2,
            },
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!(
                "tau must lie in (0, 1], got {}",
                self.tau
            )));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(Error::Config("step sizes must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

/// Exploration noise in units of the normalized `[-1, 1]` action.
#[derive(Debug, Clone)]
struct Noise<T> {
    kind: NoiseConfig,
    sigma: T,
    state: Vec<T>,
}

impl<T: Scalar> Noise<T> {
    fn new(kind: NoiseConfig, dim: usize) -> Self {
        let sigma = match kind {
            NoiseConfig::OrnsteinUhlenbeck { sigma, .. } | NoiseConfig::Gaussian { sigma } => {
                T::lit(sigma)
            }
        };
        Self {
            kind,
            sigma,
            state: vec![T::zero(); dim],
        }
    }

    fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[T] {
        match self.kind {
            NoiseConfig::OrnsteinUhlenbeck { theta, .. } => {
                let theta = T::lit(theta);
                for x in &mut self.state {
                    let n: f64 = rng.sample(StandardNormal);
                    *x = *x - theta * *x + self.sigma * T::lit(n);
                }
            }
            NoiseConfig::Gaussian { .. } => {
                for x in &mut self.state {
                    let n: f64 = rng.sample(StandardNormal);
                    *x = self.sigma * T::lit(n);
                }
            }
        }
        &self.state
    }

    fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = T::zero());
    }
}

#[derive(Debug, Clone)]
pub struct DdpgAgent<T> {
    actor: Mlp<T>,
    critic: Mlp<T>,
    target_actor: Mlp<T>,
    target_critic: Mlp<T>,
    actor_opt: Adam<T>,
    critic_opt: Adam<T>,
    gamma: T,
    tau: T,
    center: Vec<T>,
    half: Vec<T>,
    noise: Noise<T>,
}

impl<T: Scalar> DdpgAgent<T> {
    /// Builds an agent for `state_dim` inputs acting in the box `[low, high]`.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        low: &[T],
        high: &[T],
        cfg: &DdpgConfig,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        check_dim(low.len(), high.len())?;
        if low.is_empty() || low.iter().zip(high).any(|(l, h)| !(l <= h)) {
            return Err(Error::Config(
                "action bounds must be non-empty with low <= high".into(),
            ));
        }
        let action_dim = low.len();
        let mut actor_widths = vec![state_dim];
        actor_widths.extend(&cfg.hidden);
        actor_widths.push(action_dim);
        let mut critic_widths = vec![state_dim + action_dim];
        critic_widths.extend(&cfg.hidden);
        critic_widths.push(1);
        let final_init = T::lit(cfg.final_init);
        let actor = Mlp::new(&actor_widths, Activation::Tanh, final_init, rng)?;
        let critic = Mlp::new(&critic_widths, Activation::Identity, final_init, rng)?;
        let two = T::lit(2.0);
        Ok(Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor_opt: Adam::new(T::lit(cfg.actor_lr), actor.params().len()),
            critic_opt: Adam::new(T::lit(cfg.critic_lr), critic.params().len()),
            actor,
            critic,
            gamma: T::lit(cfg.gamma),
            tau: T::lit(cfg.tau),
            center: low.iter().zip(high).map(|(&l, &h)| (l + h) / two).collect(),
            half: low.iter().zip(high).map(|(&l, &h)| (h - l) / two).collect(),
            noise: Noise::new(cfg.noise, action_dim),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn actor(&self) -> &Mlp<T> {
        &self.actor
    }

    pub fn critic(&self) -> &Mlp<T> {
        &self.critic
    }

    pub fn target_actor(&self) -> &Mlp<T> {
        &self.target_actor
    }

    pub fn target_critic(&self) -> &Mlp<T> {
        &self.target_critic
    }

    pub fn actor_mut(&mut self) -> &mut Mlp<T> {
        &mut self.actor
    }

    pub fn critic_mut(&mut self) -> &mut Mlp<T> {
        &mut self.critic
    }

    pub fn target_actor_mut(&mut self) -> &mut Mlp<T> {
        &mut self.target_actor
    }

    pub fn target_critic_mut(&mut self) -> &mut Mlp<T> {
        &mut self.target_critic
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn set_gamma(&mut self, gamma: T) {
        self.gamma = gamma;
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn set_tau(&mut self, tau: T) {
        self.tau = tau;
    }

    /// Scale of the exploration noise, in normalized action units.
    pub fn set_noise_sigma(&mut self, sigma: T) {
        self.noise.sigma = sigma;
    }

    pub fn noise_sigma(&self) -> T {
        self.noise.sigma
    }

    pub fn reset_noise(&mut self) {
        self.noise.reset();
    }

    pub fn action_low(&self) -> Vec<T> {
        self.center
            .iter()
            .zip(&self.half)
            .map(|(&c, &h)| c - h)
            .collect()
    }

    pub fn action_high(&self) -> Vec<T> {
        self.center
            .iter()
            .zip(&self.half)
            .map(|(&c, &h)| c + h)
            .collect()
    }

    fn scale_action(&self, y: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend(
            y.iter()
                .zip(self.center.iter().zip(&self.half))
                .map(|(&y, (&c, &h))| c + h * y),
        );
    }

    /// Clamps each component into the action box.
    pub fn clamp_action(&self, a: &mut [T]) {
        for (x, (&c, &h)) in a.iter_mut().zip(self.center.iter().zip(&self.half)) {
            *x = x.max(c - h).min(c + h);
        }
    }

    /// Deterministic policy output, plus noise when exploring.
    pub fn act<R: Rng + ?Sized>(&mut self, s: &[T], explore: bool, rng: &mut R) -> Result<Vec<T>> {
        let y = self.actor.forward(s)?;
        let mut a = Vec::with_capacity(y.len());
        self.scale_action(&y, &mut a);
        if explore {
            let noise = self.noise.sample(rng);
            for ((x, &n), &h) in a.iter_mut().zip(noise).zip(&self.half) {
                *x += h * n;
            }
        }
        self.clamp_action(&mut a);
        Ok(a)
    }

    /// Bellman targets `r + gamma * Q'(s', mu'(s'))`, or `r` for terminal steps.
    pub fn critic_targets(&self, batch: &[&Transition<T>]) -> Result<Vec<T>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let n = batch.len();
        let ds = self.state_dim();
        let mut states = Vec::with_capacity(n * ds);
        for t in batch {
            check_dim(ds, t.s_next.len())?;
            states.extend_from_slice(&t.s_next);
        }
        let mut trace = Trace::default();
        self.target_actor.forward_batch(&states, n, &mut trace)?;
        let input = self.state_action_rows(&states, trace.output(), n);
        self.target_critic.forward_batch(&input, n, &mut trace)?;
        Ok(batch
            .iter()
            .zip(trace.output())
            .map(|(t, &q)| {
                if t.terminal || self.gamma == T::zero() {
                    t.r
                } else {
                    t.r + self.gamma * q
                }
            })
            .collect())
    }

    /// Rows of `[s, scaled(y)]` for critic input.
    fn state_action_rows(&self, states: &[T], actor_out: &[T], n: usize) -> Vec<T> {
        let (ds, da) = (self.state_dim(), self.action_dim());
        let mut rows = Vec::with_capacity(n * (ds + da));
        let mut action = Vec::with_capacity(da);
        for (s, y) in states.chunks_exact(ds).zip(actor_out.chunks_exact(da)) {
            rows.extend_from_slice(s);
            self.scale_action(y, &mut action);
            rows.extend_from_slice(&action);
        }
        rows
    }

    /// Mean squared Bellman error against `targets` and its gradient with
    /// respect to the online critic's parameters.
    pub fn critic_loss_and_grad(
        &self,
        batch: &[&Transition<T>],
        targets: &[T],
    ) -> Result<(T, Vec<T>)> {
        check_dim(batch.len(), targets.len())?;
        if batch.is_empty() {
            return Err(Error::InvalidInput("empty minibatch".into()));
        }
        let n = batch.len();
        let nf = T::lit(n as f64);
        let mut input = Vec::with_capacity(n * self.critic.input_dim());
        for t in batch {
            check_dim(self.state_dim(), t.s.len())?;
            check_dim(self.action_dim(), t.a.len())?;
            input.extend_from_slice(&t.s);
            input.extend_from_slice(&t.a);
        }
        let mut trace = Trace::default();
        self.critic.forward_batch(&input, n, &mut trace)?;
        let mut loss = T::zero();
        let mut grad_out = Vec::with_capacity(n);
        for (&q, &y) in trace.output().iter().zip(targets) {
            let err = q - y;
            loss += err * err;
            grad_out.push(T::lit(2.0) * err / nf);
        }
        let mut grads = vec![T::zero(); self.critic.params().len()];
        self.critic
            .backward_batch(&mut trace, &grad_out, Some(&mut grads), None)?;
        Ok((loss / nf, grads))
    }

    /// Mean critic value of the actor's own actions and its gradient with
    /// respect to the actor's parameters (an ascent direction).
    pub fn actor_objective_and_grad(&self, batch: &[&Transition<T>]) -> Result<(T, Vec<T>)> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("empty minibatch".into()));
        }
        let n = batch.len();
        let nf = T::lit(n as f64);
        let (ds, da) = (self.state_dim(), self.action_dim());
        let mut states = Vec::with_capacity(n * ds);
        for t in batch {
            check_dim(ds, t.s.len())?;
            states.extend_from_slice(&t.s);
        }
        let mut actor_trace = Trace::default();
        self.actor.forward_batch(&states, n, &mut actor_trace)?;
        let input = self.state_action_rows(&states, actor_trace.output(), n);
        let mut critic_trace = Trace::default();
        self.critic.forward_batch(&input, n, &mut critic_trace)?;
        let objective = critic_trace
            .output()
            .iter()
            .fold(T::zero(), |acc, &q| acc + q)
            / nf;
        let mut grad_in = Vec::new();
        self.critic.backward_batch(
            &mut critic_trace,
            &vec![T::one() / nf; n],
            None,
            Some(&mut grad_in),
        )?;
        let mut grad_y = Vec::with_capacity(n * da);
        for row in grad_in.chunks_exact(ds + da) {
            grad_y.extend(row[ds..].iter().zip(&self.half).map(|(&g, &h)| g * h));
        }
        let mut grads = vec![T::zero(); self.actor.params().len()];
        self.actor
            .backward_batch(&mut actor_trace, &grad_y, Some(&mut grads), None)?;
        Ok((objective, grads))
    }

    /// One critic step, one actor step, then a soft target update.
    /// Returns the critic loss and actor objective measured before the steps.
    pub fn train_step(&mut self, batch: &[&Transition<T>]) -> Result<(T, T)> {
        let targets = self.critic_targets(batch)?;
        let (loss, critic_grad) = self.critic_loss_and_grad(batch, &targets)?;
        if !loss.is_finite() || critic_grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged(format!("critic loss {loss}")));
        }
        self.critic_opt.step(self.critic.params_mut(), &critic_grad);

        let (objective, mut actor_grad) = self.actor_objective_and_grad(batch)?;
        if !objective.is_finite() || actor_grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged(format!("actor objective {objective}")));
        }
        actor_grad.iter_mut().for_each(|g| *g = -*g);
        self.actor_opt.step(self.actor.params_mut(), &actor_grad);
        self.soft_update()?;
        Ok((loss, objective))
    }

    /// `target <- tau * online + (1 - tau) * target` for both networks.
    pub fn soft_update(&mut self) -> Result<()> {
        self.target_actor.soft_update_from(&self.actor, self.tau)?;
        self.target_critic.soft_update_from(&self.critic, self.tau)
    }

    /// Serializes the four networks (see [`crate::neural::checkpoint`]).
    pub fn save_networks(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(AGENT_MAGIC);
        put_u32(&mut out, 4);
        for net in [
            &self.actor,
            &self.critic,
            &self.target_actor,
            &self.target_critic,
        ] {
            net.write_checkpoint(&mut out);
        }
        out
    }

    /// Restores networks saved by [`DdpgAgent::save_networks`]; shapes must match.
    pub fn load_networks(&mut self, bytes: &[u8]) -> Result<()> {
        let mut input = bytes;
        take_magic(&mut input, AGENT_MAGIC)?;
        if take_u32(&mut input)? != 4 {
            return Err(Error::Checkpoint("expected four networks".into()));
        }
        let nets = (0..4)
            .map(|_| Mlp::read_checkpoint(&mut input))
            .collect::<Result<Vec<_>>>()?;
        if !input.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", input.len())));
        }
        let current = [
            &self.actor,
            &self.critic,
            &self.target_actor,
            &self.target_critic,
        ];
        if nets.iter().zip(current).any(|(n, c)| !n.same_shape(c)) {
            return Err(Error::Checkpoint(
                "network shapes do not match this agent".into(),
            ));
        }
        let mut nets = nets.into_iter();
        self.actor = nets.next().expect("four networks");
        self.critic = nets.next().expect("four networks");
        self.target_actor = nets.next().expect("four networks");
        self.target_critic = nets.next().expect("four networks");
        Ok(())
    }
}
