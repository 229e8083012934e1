//! Experiment configuration.
//!
//! The config file is TOML with flat top-level keys; every key is optional
//! and falls back to the defaults below. Environment dynamics constants can
//! be overridden in `[linewalker]`, `[pointgoal]` and `[pendulum]` tables.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `env` | `"linewalker"` | `linewalker`, `pointgoal` or `pendulum` |
//! | `mode` | `"autoeg"` | `noeg`, `eg` or `autoeg` |
//! | `epsilon` | unset | fixed grafting threshold, required iff `mode = "eg"` |
//! | `episodes` | 2000 | episodes per run |
//! | `seeds` | `[1, 2, 3, 4, 5]` | one run per seed |
//! | `out` | `"runs"` | output directory |
//! | `quality_window` | 100 | policy-quality window (clamped to the run length) |
//! | `dump_trajectories` | false | also write every stored transition per run |
//! | `hidden` | `[64, 64]` | hidden widths of the grafting agent |
//! | `gamma`, `tau` | 0.99, 0.001 | discount and soft-update rate |
//! | `actor_lr`, `critic_lr` | 1e-4, 1e-3 | Adam step sizes |
//! | `final_init` | 3e-3 | output-layer init range |
//! | `ou_theta`, `ou_sigma` | 0.15, 0.2 | Ornstein-Uhlenbeck exploration |
//! | `tutor_hidden` | `[64, 64]` | hidden widths of the tutor |
//! | `tutor_gamma`, `tutor_tau` | 0.9, 0.001 | tutor discount and soft-update rate |
//! | `tutor_actor_lr`, `tutor_critic_lr` | 1e-4, 1e-3 | tutor step sizes |
//! | `tutor_sigma_start`, `tutor_sigma_end` | 0.1, 0.01 | tutor Gaussian noise schedule |
//! | `tutor_eps_low`, `tutor_eps_high` | 0.0, 1.0 | threshold range of the tutor's action |
//! | `eg_buffer_capacity`, `eg_warmup`, `eg_batch` | 100000, 1000, 16 | grafting agent replay |
//! | `tutor_buffer_capacity`, `tutor_warmup`, `tutor_batch` | 100000, 100, 10 | tutor replay |
//! | `n_ext`, `n_gft`, `theta` | 10, 10, 5 | extraction/grafting positions, cap per trajectory |
//! | `bin_size`, `bin_capacity` | 1.0, 1000 | segment library grid |
//! | `horizon` | 10 | episodes per tutor reward |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autoeg::{Mode, RunConfig};
use crate::envs::{EnvKind, EnvParams, LineWalkerParams, PendulumParams, PointGoalParams};
use crate::error::{Error, Result};
use crate::neural::{DdpgConfig, NoiseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    NoEg,
    Eg,
    AutoEg,
}

impl std::str::FromStr for ModeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "noeg" => Ok(ModeName::NoEg),
            "eg" => Ok(ModeName::Eg),
            "autoeg" => Ok(ModeName::AutoEg),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected noeg, eg or autoeg)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub mode: ModeName,
    pub epsilon: Option<f64>,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub quality_window: usize,
    pub dump_trajectories: bool,

    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub final_init: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,

    pub tutor_hidden: Vec<usize>,
    pub tutor_gamma: f64,
    pub tutor_tau: f64,
    pub tutor_actor_lr: f64,
    pub tutor_critic_lr: f64,
    pub tutor_sigma_start: f64,
    pub tutor_sigma_end: f64,
    pub tutor_eps_low: f64,
    pub tutor_eps_high: f64,

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

    pub linewalker: LineWalkerParams,
    pub pointgoal: PointGoalParams,
    pub pendulum: PendulumParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let run = RunConfig::default();
        let (ou_theta, ou_sigma) = match run.eg_agent.noise {
            NoiseConfig::OrnsteinUhlenbeck { theta, sigma } => (theta, sigma),
            NoiseConfig::Gaussian { sigma } => (0.0, sigma),
        };
        Self {
            env: EnvKind::LineWalker,
            mode: ModeName::AutoEg,
            epsilon: None,
            episodes: 2000,
            seeds: vec![1, 2, 3, 4, 5],
            out: PathBuf::from("runs"),
            quality_window: 100,
            dump_trajectories: false,
            hidden: run.eg_agent.hidden.clone(),
            gamma: run.eg_agent.gamma,
            tau: run.eg_agent.tau,
            actor_lr: run.eg_agent.actor_lr,
            critic_lr: run.eg_agent.critic_lr,
            final_init: run.eg_agent.final_init,
            ou_theta,
            ou_sigma,
            tutor_hidden: run.tutor_agent.hidden.clone(),
            tutor_gamma: run.tutor_agent.gamma,
            tutor_tau: run.tutor_agent.tau,
            tutor_actor_lr: run.tutor_agent.actor_lr,
            tutor_critic_lr: run.tutor_agent.critic_lr,
            tutor_sigma_start: run.tutor_sigma_start,
            tutor_sigma_end: run.tutor_sigma_end,
            tutor_eps_low: run.tutor_eps_low,
            tutor_eps_high: run.tutor_eps_high,
            eg_buffer_capacity: run.eg_buffer_capacity,
            eg_warmup: run.eg_warmup,
            eg_batch: run.eg_batch,
            tutor_buffer_capacity: run.tutor_buffer_capacity,
            tutor_warmup: run.tutor_warmup,
            tutor_batch: run.tutor_batch,
            n_ext: run.n_ext,
            n_gft: run.n_gft,
            theta: run.theta,
            bin_size: run.bin_size,
            bin_capacity: run.bin_capacity,
            horizon: run.horizon,
            linewalker: LineWalkerParams::default(),
            pointgoal: PointGoalParams::default(),
            pendulum: PendulumParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.epsilon) {
            (ModeName::Eg, None) => {
                return Err(Error::Config("mode eg requires an epsilon".into()))
            }
            (ModeName::NoEg | ModeName::AutoEg, Some(_)) => {
                return Err(Error::Config("epsilon is only valid in mode eg".into()))
            }
            (ModeName::Eg, Some(eps)) if !(eps >= 0.0) => {
                return Err(Error::Config(format!("epsilon must be >= 0, got {eps}")))
            }
            _ => {}
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.quality_window == 0 {
            return Err(Error::Config("quality_window must be at least 1".into()));
        }
        self.run_config().validate()
    }

    pub fn run_mode(&self) -> Mode {
        match self.mode {
            ModeName::NoEg => Mode::NoEg,
            ModeName::Eg => Mode::Eg {
                eps: self.epsilon.unwrap_or(0.0),
            },
            ModeName::AutoEg => Mode::AutoEg,
        }
    }

    pub fn env_params(&self) -> EnvParams {
        EnvParams {
            linewalker: self.linewalker.clone(),
            pointgoal: self.pointgoal.clone(),
            pendulum: self.pendulum.clone(),
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            eg_agent: DdpgConfig {
                hidden: self.hidden.clone(),
                gamma: self.gamma,
                tau: self.tau,
                actor_lr: self.actor_lr,
                critic_lr: self.critic_lr,
                final_init: self.final_init,
                noise: NoiseConfig::OrnsteinUhlenbeck {
                    theta: self.ou_theta,
                    sigma: self.ou_sigma,
                },
            },
            tutor_agent: DdpgConfig {
                hidden: self.tutor_hidden.clone(),
                gamma: self.tutor_gamma,
                tau: self.tutor_tau,
                actor_lr: self.tutor_actor_lr,
                critic_lr: self.tutor_critic_lr,
                final_init: self.final_init,
                noise: NoiseConfig::Gaussian {
                    sigma: self.tutor_sigma_start,
                },
            },
            eg_buffer_capacity: self.eg_buffer_capacity,
            eg_warmup: self.eg_warmup,
            eg_batch: self.eg_batch,
            tutor_buffer_capacity: self.tutor_buffer_capacity,
            tutor_warmup: self.tutor_warmup,
            tutor_batch: self.tutor_batch,
            n_ext: self.n_ext,
            n_gft: self.n_gft,
            theta: self.theta,
            bin_size: self.bin_size,
            bin_capacity: self.bin_capacity,
            horizon: self.horizon,
            tutor_sigma_start: self.tutor_sigma_start,
            tutor_sigma_end: self.tutor_sigma_end,
            tutor_eps_low: self.tutor_eps_low,
            tutor_eps_high: self.tutor_eps_high,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_run_defaults() {
        assert_eq!(
            ExperimentConfig::default().run_config(),
            RunConfig::default()
        );
    }

    #[test]
    fn parses_flat_keys_and_tables() {
        let cfg = ExperimentConfig::from_toml_str(
            "env = \"pendulum\"\nmode = \"eg\"\nepsilon = 0.2\nepisodes = 30\nseeds = [7]\nhorizon = 4\n\n[pendulum]\nmax_steps = 50\n",
        )
        .unwrap();
        assert_eq!(cfg.env, EnvKind::Pendulum);
        assert_eq!(cfg.run_mode(), Mode::Eg { eps: 0.2 });
        assert_eq!(cfg.pendulum.max_steps, 50);
        assert_eq!(cfg.pendulum.gravity, 9.8);
        assert_eq!(cfg.horizon, 4);
        cfg.validate().unwrap();
        assert!(ExperimentConfig::from_toml_str("bogus_key = 1").is_err());
    }

    #[test]
    fn eg_mode_needs_epsilon() {
        let cfg = ExperimentConfig {
            mode: ModeName::Eg,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            epsilon: Some(0.5),
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            seeds: vec![],
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
