//! Training loops for the three experimental conditions: plain DDPG, DDPG
//! with grafting at a fixed threshold, and DDPG whose grafting threshold is
//! chosen every episode by a second DDPG agent (the tutor).
//!
//! The tutor observes only two ratios derived from the grafting agent's
//! replay buffer and last grafting call. One tutor step spans one episode of
//! the grafting agent; every `horizon` episodes the tutor is rewarded with
//! the window's mean episode return and all synthetic transitions are purged
//! from the grafting agent's buffer.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::experience::{Provenance, ReplayBuffer, Trajectory, Transition};
use crate::grafting::{graft, GraftConfig, GraftStats, SyntheticTrajectory};
use crate::library::SegmentLibrary;
use crate::neural::{DdpgAgent, DdpgConfig, NoiseConfig};
use crate::scalar::Scalar;

const STREAM_ENV: u64 = 0;
const STREAM_AGENT: u64 = 1;
const STREAM_GRAFT: u64 = 2;
const STREAM_TUTOR: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    NoEg,
    Eg { eps: f64 },
    AutoEg,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::NoEg => "noeg",
            Mode::Eg { .. } => "eg",
            Mode::AutoEg => "autoeg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub eg_agent: DdpgConfig,
    pub tutor_agent: DdpgConfig,
    pub eg_buffer_capacity: usize,
    pub eg_warmup: usize,
    pub eg_batch: usize,
    pub tutor_buffer_capacity: usize,
    pub tutor_warmup: usize,
    pub tutor_batch: usize,
    pub n_ext: usize,
    pub n_gft: usize,
    pub theta: usize,
    pub bin_size: f64,
    pub bin_capacity: usize,
    pub horizon: usize,
    /// Tutor exploration noise decays linearly from start to end over the
    /// first half of the run.
    pub tutor_sigma_start: f64,
    pub tutor_sigma_end: f64,
    /// Range the tutor's `[-1, 1]` action is mapped onto.
    pub tutor_eps_low: f64,
    pub tutor_eps_high: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eg_agent: DdpgConfig::default(),
            tutor_agent: DdpgConfig {
                gamma: 0.9,
                noise: NoiseConfig::Gaussian { sigma: 0.1 },
                ..DdpgConfig::default()
            },
            eg_buffer_capacity: 100_000,
            eg_warmup: 1000,
            eg_batch: 16,
            tutor_buffer_capacity: 100_000,
            tutor_warmup: 100,
            tutor_batch: 10,
            n_ext: 10,
            n_gft: 10,
            theta: 5,
            bin_size: 1.0,
            bin_capacity: 1000,
            horizon: 10,
            tutor_sigma_start: 0.1,
            tutor_sigma_end: 0.01,
            tutor_eps_low: 0.0,
            tutor_eps_high: 1.0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.eg_agent.validate()?;
        self.tutor_agent.validate()?;
        if self.eg_batch == 0 || self.tutor_batch == 0 {
            return Err(Error::Config("minibatch sizes must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.bin_size > 0.0) {
            return Err(Error::Config("bin size must be positive".into()));
        }
        if !(0.0 <= self.tutor_eps_low && self.tutor_eps_low <= self.tutor_eps_high) {
            return Err(Error::Config(
                "tutor threshold range must satisfy 0 <= low <= high".into(),
            ));
        }
        if self.tutor_sigma_start < 0.0 || self.tutor_sigma_end < 0.0 {
            return Err(Error::Config(
                "tutor noise scales must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// The tutor's state: `(r_trs, r_trj)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TutorObservation<T> {
    /// Fraction of synthetic transitions in the grafting agent's buffer.
    pub r_trs: T,
    /// Synthetic trajectories from the last grafting call, over `theta`.
    pub r_trj: T,
}

impl<T: Scalar> TutorObservation<T> {
    pub fn to_vec(self) -> Vec<T> {
        vec![self.r_trs, self.r_trj]
    }
}

/// Progress through the current horizon window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TutorEpisodeState<T> {
    pub horizon_counter: usize,
    pub sum_of_reward: T,
}

/// Maps the tutor's `[-1, 1]` action onto `[low, high]`.
pub fn action_to_epsilon<T: Scalar>(action: T, low: T, high: T) -> T {
    low + (action + T::one()) / T::lit(2.0) * (high - low)
}

/// Queries the tutor for a grafting threshold. Returns the raw action (as
/// stored in the tutor's buffer) and the mapped threshold.
pub fn tutor_select_epsilon<T: Scalar, R: Rng + ?Sized>(
    tutor: &mut DdpgAgent<T>,
    obs: TutorObservation<T>,
    explore: bool,
    low: T,
    high: T,
    rng: &mut R,
) -> Result<(T, T)> {
    let action = tutor.act(&obs.to_vec(), explore, rng)?[0];
    Ok((action, action_to_epsilon(action, low, high)))
}

#[derive(Debug, Clone)]
pub struct EgEpisode<T> {
    pub trajectory: Trajectory<T>,
    pub episode_return: T,
    pub train_steps: usize,
}

/// Plays one exploratory episode, storing every step in `buffer` and taking
/// one training step per environment step once the buffer is warm.
pub fn run_eg_episode<T: Scalar, R: Rng + ?Sized>(
    eg: &mut DdpgAgent<T>,
    env: &mut dyn Environment<T>,
    buffer: &mut ReplayBuffer<T>,
    batch_size: usize,
    env_seed: u64,
    rng: &mut R,
) -> Result<EgEpisode<T>> {
    let mut s = env.reset(env_seed);
    eg.reset_noise();
    let mut transitions = Vec::with_capacity(env.spec().max_steps);
    let mut episode_return = T::zero();
    let mut train_steps = 0;
    loop {
        let a = eg.act(&s, true, rng)?;
        let res = env.step(&a)?;
        let terminal = res.is_terminal();
        let t = Transition::new(s, a, res.r, res.s_next.clone(), terminal)?;
        episode_return += t.r;
        buffer.push(t.clone());
        transitions.push(t);
        if let Some(batch) = buffer.sample_minibatch(batch_size, rng) {
            eg.train_step(&batch)?;
            train_steps += 1;
        }
        s = res.s_next;
        if res.done {
            break;
        }
    }
    Ok(EgEpisode {
        trajectory: Trajectory::new(transitions, true)?,
        episode_return,
        train_steps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<T> {
    /// 1-based.
    pub episode: usize,
    pub episode_return: T,
    pub episode_len: usize,
    pub epsilon_used: Option<T>,
    /// Synthetic trajectories returned by grafting.
    pub n_synth_generated: usize,
    /// Synthetic transitions pushed into the replay buffer.
    pub n_synth_stored: usize,
    /// Synthetic share of the replay buffer after this episode's grafting
    /// (the tutor's `r_trs`), before any horizon purge.
    pub synth_ratio: T,
    pub tutor_reward: Option<T>,
    /// Synthetic share at the very end of the episode, after any purge.
    pub synth_ratio_end: T,
    pub eg_train_steps: usize,
    pub graft_stats: Option<GraftStats>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog<T> {
    pub records: Vec<EpisodeRecord<T>>,
}

impl<T: Scalar> RunLog<T> {
    pub fn returns(&self) -> Vec<T> {
        self.records.iter().map(|r| r.episode_return).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A run that stopped early; `log` holds the completed episodes.
#[derive(Debug)]
pub struct RunFailure<T> {
    pub log: RunLog<T>,
    pub error: Error,
}

impl<T> std::fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted: {}", self.error)
    }
}

struct Tutor<T> {
    agent: DdpgAgent<T>,
    buffer: ReplayBuffer<T>,
    obs: TutorObservation<T>,
    window: TutorEpisodeState<T>,
    rng: ChaCha8Rng,
}

/// Episode-by-episode driver for one seeded run.
pub struct Runner<T: Scalar> {
    cfg: RunConfig,
    mode: Mode,
    env: Box<dyn Environment<T>>,
    eg: DdpgAgent<T>,
    eg_buffer: ReplayBuffer<T>,
    lib: SegmentLibrary<T>,
    tutor: Option<Tutor<T>>,
    env_rng: ChaCha8Rng,
    agent_rng: ChaCha8Rng,
    graft_rng: ChaCha8Rng,
    episode: usize,
    total_episodes: usize,
    last_trajectory: Option<Trajectory<T>>,
    last_synthetic: Vec<SyntheticTrajectory<T>>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl<T: Scalar> Runner<T> {
    /// `total_episodes` sets the tutor's exploration schedule.
    pub fn new(
        cfg: RunConfig,
        mode: Mode,
        env: Box<dyn Environment<T>>,
        total_episodes: usize,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if let Mode::Eg { eps } = mode {
            if !(eps >= 0.0) || !eps.is_finite() {
                return Err(Error::Config(format!(
                    "grafting threshold must be >= 0, got {eps}"
                )));
            }
        }
        let mut agent_rng = stream(seed, STREAM_AGENT);
        let spec = env.spec().clone();
        let eg = DdpgAgent::new(
            spec.state_dim,
            &spec.action_low,
            &spec.action_high,
            &cfg.eg_agent,
            &mut agent_rng,
        )?;
        let tutor = if mode == Mode::AutoEg {
            let mut rng = stream(seed, STREAM_TUTOR);
            let mut agent =
                DdpgAgent::new(2, &[-T::one()], &[T::one()], &cfg.tutor_agent, &mut rng)?;
            agent.set_noise_sigma(T::lit(cfg.tutor_sigma_start));
            Some(Tutor {
                agent,
                buffer: ReplayBuffer::new(cfg.tutor_buffer_capacity, cfg.tutor_warmup)?,
                obs: TutorObservation::default(),
                window: TutorEpisodeState::default(),
                rng,
            })
        } else {
            None
        };
        Ok(Self {
            eg_buffer: ReplayBuffer::new(cfg.eg_buffer_capacity, cfg.eg_warmup)?,
            lib: SegmentLibrary::new(T::lit(cfg.bin_size), cfg.bin_capacity)?,
            cfg,
            mode,
            env,
            eg,
            tutor,
            env_rng: stream(seed, STREAM_ENV),
            agent_rng,
            graft_rng: stream(seed, STREAM_GRAFT),
            episode: 0,
            total_episodes,
            last_trajectory: None,
            last_synthetic: Vec::new(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn eg_agent(&self) -> &DdpgAgent<T> {
        &self.eg
    }

    pub fn eg_buffer(&self) -> &ReplayBuffer<T> {
        &self.eg_buffer
    }

    pub fn library(&self) -> &SegmentLibrary<T> {
        &self.lib
    }

    pub fn tutor_agent(&self) -> Option<&DdpgAgent<T>> {
        self.tutor.as_ref().map(|t| &t.agent)
    }

    pub fn tutor_buffer(&self) -> Option<&ReplayBuffer<T>> {
        self.tutor.as_ref().map(|t| &t.buffer)
    }

    pub fn tutor_observation(&self) -> Option<TutorObservation<T>> {
        self.tutor.as_ref().map(|t| t.obs)
    }

    pub fn tutor_window(&self) -> Option<TutorEpisodeState<T>> {
        self.tutor.as_ref().map(|t| t.window)
    }

    pub fn last_trajectory(&self) -> Option<&Trajectory<T>> {
        self.last_trajectory.as_ref()
    }

    pub fn last_synthetic(&self) -> &[SyntheticTrajectory<T>] {
        &self.last_synthetic
    }

    fn tutor_sigma(&self) -> T {
        let half = (self.total_episodes as f64 / 2.0).max(1.0);
        let frac = (self.episode as f64 / half).min(1.0);
        let (start, end) = (self.cfg.tutor_sigma_start, self.cfg.tutor_sigma_end);
        T::lit(start + (end - start) * frac)
    }

    pub fn run_episode(&mut self) -> Result<EpisodeRecord<T>> {
        let env_seed = self.env_rng.next_u64();
        let ep = run_eg_episode(
            &mut self.eg,
            self.env.as_mut(),
            &mut self.eg_buffer,
            self.cfg.eg_batch,
            env_seed,
            &mut self.agent_rng,
        )?;
        self.episode += 1;
        let mut record = EpisodeRecord {
            episode: self.episode,
            episode_return: ep.episode_return,
            episode_len: ep.trajectory.len(),
            epsilon_used: None,
            n_synth_generated: 0,
            n_synth_stored: 0,
            synth_ratio: self.eg_buffer.synthetic_ratio(),
            tutor_reward: None,
            synth_ratio_end: T::zero(),
            eg_train_steps: ep.train_steps,
            graft_stats: None,
        };
        self.last_synthetic.clear();

        let eps_choice = match self.mode {
            Mode::NoEg => None,
            Mode::Eg { eps } => Some((T::lit(eps), None)),
            Mode::AutoEg => {
                let sigma = self.tutor_sigma();
                let (low, high) = (
                    T::lit(self.cfg.tutor_eps_low),
                    T::lit(self.cfg.tutor_eps_high),
                );
                let tutor = self.tutor.as_mut().expect("tutor exists in autoeg mode");
                tutor.agent.set_noise_sigma(sigma);
                let (action, eps) = tutor_select_epsilon(
                    &mut tutor.agent,
                    tutor.obs,
                    true,
                    low,
                    high,
                    &mut tutor.rng,
                )?;
                Some((eps, Some(action)))
            }
        };

        if let Some((eps, tutor_action)) = eps_choice {
            let gcfg = GraftConfig::new(eps, self.cfg.n_ext, self.cfg.n_gft, self.cfg.theta)?;
            let out = graft(&gcfg, &ep.trajectory, &mut self.lib, &mut self.graft_rng)?;
            for syn in &out.trajectories {
                for t in syn.transitions() {
                    self.eg_buffer.push(t);
                    record.n_synth_stored += 1;
                }
                if let Some(batch) = self
                    .eg_buffer
                    .sample_minibatch(self.cfg.eg_batch, &mut self.agent_rng)
                {
                    self.eg.train_step(&batch)?;
                    record.eg_train_steps += 1;
                }
            }
            record.epsilon_used = Some(eps);
            record.n_synth_generated = out.trajectories.len();
            record.synth_ratio = self.eg_buffer.synthetic_ratio();
            record.graft_stats = Some(out.stats);

            if let Some(action) = tutor_action {
                record.tutor_reward =
                    self.tutor_step(action, ep.episode_return, out.trajectories.len())?;
            }
            self.last_synthetic = out.trajectories;
        }

        record.synth_ratio_end = self.eg_buffer.synthetic_ratio();
        self.last_trajectory = Some(ep.trajectory);
        Ok(record)
    }

    /// Stores one tutor transition, handles the horizon boundary and trains
    /// the tutor. Returns the reward when one is emitted.
    fn tutor_step(
        &mut self,
        action: T,
        episode_return: T,
        n_synthetic: usize,
    ) -> Result<Option<T>> {
        let theta = self.cfg.theta;
        let horizon = self.cfg.horizon;
        let tutor = self.tutor.as_mut().expect("tutor exists in autoeg mode");
        let next = TutorObservation {
            r_trs: self.eg_buffer.synthetic_ratio(),
            r_trj: if theta == 0 {
                T::zero()
            } else {
                T::lit(n_synthetic as f64) / T::lit(theta as f64)
            },
        };
        tutor.window.sum_of_reward += episode_return;
        tutor.window.horizon_counter += 1;
        let emitted = if tutor.window.horizon_counter < horizon {
            let t = Transition::new(
                tutor.obs.to_vec(),
                vec![action],
                T::zero(),
                next.to_vec(),
                false,
            )?;
            tutor.buffer.push(t);
            tutor.obs = next;
            None
        } else {
            let reward = tutor.window.sum_of_reward / T::lit(horizon as f64);
            let t = Transition::new(
                tutor.obs.to_vec(),
                vec![action],
                reward,
                next.to_vec(),
                true,
            )?;
            tutor.buffer.push(t);
            self.eg_buffer.remove_synthetic();
            tutor.obs = TutorObservation::default();
            tutor.window = TutorEpisodeState::default();
            Some(reward)
        };
        if let Some(batch) = tutor
            .buffer
            .sample_minibatch(self.cfg.tutor_batch, &mut tutor.rng)
        {
            tutor.agent.train_step(&batch)?;
        }
        Ok(emitted)
    }
}

/// Runs `episodes` episodes in `mode`, stopping at the first error.
pub fn train<T: Scalar>(
    cfg: &RunConfig,
    mode: Mode,
    env: Box<dyn Environment<T>>,
    episodes: usize,
    seed: u64,
) -> Result<RunLog<T>, RunFailure<T>> {
    let mut runner =
        Runner::new(cfg.clone(), mode, env, episodes, seed).map_err(|error| RunFailure {
            log: RunLog::default(),
            error,
        })?;
    let mut log = RunLog::default();
    for _ in 0..episodes {
        match runner.run_episode() {
            Ok(rec) => log.records.push(rec),
            Err(error) => return Err(RunFailure { log, error }),
        }
    }
    Ok(log)
}

pub fn autoeg_train<T: Scalar>(
    cfg: &RunConfig,
    env: Box<dyn Environment<T>>,
    episodes: usize,
    seed: u64,
) -> Result<RunLog<T>, RunFailure<T>> {
    train(cfg, Mode::AutoEg, env, episodes, seed)
}

pub fn eg_train<T: Scalar>(
    cfg: &RunConfig,
    env: Box<dyn Environment<T>>,
    episodes: usize,
    fixed_eps: f64,
    seed: u64,
) -> Result<RunLog<T>, RunFailure<T>> {
    train(cfg, Mode::Eg { eps: fixed_eps }, env, episodes, seed)
}

pub fn noeg_train<T: Scalar>(
    cfg: &RunConfig,
    env: Box<dyn Environment<T>>,
    episodes: usize,
    seed: u64,
) -> Result<RunLog<T>, RunFailure<T>> {
    train(cfg, Mode::NoEg, env, episodes, seed)
}

/// True when every transition is authentic; used by tests and diagnostics.
pub fn all_authentic<T: Scalar>(buffer: &ReplayBuffer<T>) -> bool {
    buffer.iter().all(|t| t.provenance == Provenance::Authentic)
}
