//! Whole-case checks shared by the property tests and the acceptance runner.
//! Each returns `Err` with a readable message on the first violation.

use expgraft::autoeg::{Mode, RunConfig, Runner};
use expgraft::distance::state_distance;
use expgraft::envs::{make_env, EnvKind, EnvParams};
use expgraft::experience::{Provenance, Segment, Trajectory, Transition};
use expgraft::grafting::{graft, GraftConfig};
use expgraft::library::SegmentLibrary;
use expgraft::neural::{DdpgAgent, DdpgConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite_difference, lattice_trajectory, random_state, relative_error};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

/// Single-step segment starting at `s`, tagged by its reward.
pub fn tagged(s: &[f64], id: usize) -> Segment<f64> {
    let t = Transition::new(s.to_vec(), vec![0.0], id as f64, s.to_vec(), false).unwrap();
    Segment::new(vec![t]).unwrap()
}

pub fn cell(s: &[f64], bin: f64) -> Vec<i64> {
    s.iter().map(|x| (x / bin).floor() as i64).collect()
}

/// Replays inserts into a flat list, applies per-cell FIFO eviction by
/// counting later inserts into the same cell, then scans linearly.
pub fn scan(inserted: &[Vec<f64>], query: &[f64], eps: f64, bin: f64, cap: usize) -> Vec<usize> {
    let qcell = cell(query, bin);
    let same: Vec<usize> = (0..inserted.len())
        .filter(|&i| cell(&inserted[i], bin) == qcell)
        .collect();
    let live = &same[same.len().saturating_sub(cap)..];
    live.iter()
        .copied()
        .filter(|&i| state_distance(query, &inserted[i]).unwrap() < eps)
        .collect()
}

pub fn ids(found: Vec<&Segment<f64>>) -> Vec<usize> {
    found
        .iter()
        .map(|s| s.transitions()[0].r as usize)
        .collect()
}

/// One random insert/query sequence: `get` must equal the scan, be monotone
/// in the threshold, and the library size must match the eviction model.
pub fn library_sequence(seed: u64, dim: usize, cap: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bin = [0.5, 1.0, 2.0][rng.random_range(0..3)];
    let mut lib = SegmentLibrary::new(bin, cap).unwrap();
    let mut inserted = Vec::new();
    for id in 0..rng.random_range(1..60) {
        let s = random_state(&mut rng, dim);
        lib.insert(s.clone(), tagged(&s, id)).unwrap();
        inserted.push(s);
    }
    for _ in 0..20 {
        let query = if rng.random_bool(0.5) {
            inserted[rng.random_range(0..inserted.len())].clone()
        } else {
            random_state(&mut rng, dim)
        };
        let eps = rng.random_range(0.0..1.5);
        let got = ids(lib.get(&query, eps).unwrap());
        let expected = scan(&inserted, &query, eps, bin, cap);
        ensure!(
            got == expected,
            "query {query:?} eps {eps}: got {got:?}, scan {expected:?}"
        );
        let wider = eps + rng.random_range(0.0..1.0);
        let wide = ids(lib.get(&query, wider).unwrap());
        ensure!(
            got.iter().all(|i| wide.contains(i)),
            "widening {eps} -> {wider} lost entries"
        );
    }
    let live = (0..inserted.len())
        .filter(|&i| {
            let c = cell(&inserted[i], bin);
            inserted[i + 1..]
                .iter()
                .filter(|s| cell(s, bin) == c)
                .count()
                < cap
        })
        .count();
    ensure!(
        lib.len() == live,
        "library holds {} entries, model {live}",
        lib.len()
    );
    Ok(())
}

/// Checks every invariant of one graft call against the pool of authentic
/// transitions registered so far. Returns the number of outputs.
pub fn check_graft_call(
    cfg: &GraftConfig<f64>,
    traj: &Trajectory<f64>,
    lib: &mut SegmentLibrary<f64>,
    registered: &mut Vec<Transition<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<usize, String> {
    registered.extend(traj.transitions().iter().cloned());
    let out = graft(cfg, traj, lib, rng).map_err(|e| e.to_string())?;
    ensure!(
        out.trajectories.len() <= cfg.theta,
        "{} outputs exceed theta {}",
        out.trajectories.len(),
        cfg.theta
    );
    ensure!(
        out.stats.returned == out.trajectories.len(),
        "stats disagree with output count"
    );
    for syn in &out.trajectories {
        let junction = state_distance(syn.head.term_state(), syn.tail.init_state()).unwrap();
        ensure!(
            junction < cfg.eps,
            "junction error {junction} not below {}",
            cfg.eps
        );
        ensure!(
            junction == syn.junction_error,
            "reported junction error {} vs {junction}",
            syn.junction_error
        );
        ensure!(
            syn.quality >= traj.quality(),
            "quality {} below authentic {}",
            syn.quality,
            traj.quality()
        );
        let recomputed: f64 = syn.transitions().map(|t| t.r).sum();
        ensure!(
            (recomputed - syn.quality).abs() <= 1e-9,
            "quality {} but rewards sum to {recomputed}",
            syn.quality
        );
        ensure!(
            syn.head
                .transitions()
                .iter()
                .zip(traj.transitions())
                .all(|(a, b)| a == b),
            "head is not a prefix of the input"
        );
        for t in syn.transitions() {
            ensure!(
                t.provenance == Provenance::Synthetic,
                "output transition not marked synthetic"
            );
            let original = t.clone().with_provenance(Provenance::Authentic);
            ensure!(
                registered.contains(&original),
                "transition {t:?} was never registered"
            );
        }
    }
    Ok(out.trajectories.len())
}

/// A run of graft calls over lattice walks sharing one library. Returns the
/// total number of synthetic trajectories produced.
pub fn graft_sequence(seed: u64, eps: f64, theta: usize, calls: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = GraftConfig::new(eps, 5, 10, theta).unwrap();
    let mut lib = SegmentLibrary::new(1.0, 50).unwrap();
    let mut registered = Vec::new();
    let mut total = 0;
    for _ in 0..calls {
        let len = rng.random_range(1..12);
        let terminal = rng.random_bool(0.3);
        let traj = lattice_trajectory(&mut rng, len, 3, terminal);
        total += check_graft_call(&cfg, &traj, &mut lib, &mut registered, &mut rng)?;
    }
    Ok(total)
}

fn small_agent(rng: &mut ChaCha8Rng, state_dim: usize, action_dim: usize) -> DdpgAgent<f64> {
    let cfg = DdpgConfig {
        hidden: vec![rng.random_range(3..9), rng.random_range(3..9)],
        final_init: 0.5,
        ..DdpgConfig::default()
    };
    let low = vec![-2.0; action_dim];
    let high = vec![1.0; action_dim];
    DdpgAgent::new(state_dim, &low, &high, &cfg, rng).unwrap()
}

/// A small agent with random widths, as used by the gradient checks.
pub fn random_small_agent(seed: u64) -> DdpgAgent<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    small_agent(&mut rng, 3, 2)
}

fn batch(
    rng: &mut ChaCha8Rng,
    state_dim: usize,
    action_dim: usize,
    n: usize,
) -> Vec<Transition<f64>> {
    (0..n)
        .map(|_| {
            let v = |rng: &mut ChaCha8Rng, d: usize| {
                (0..d)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>()
            };
            Transition::new(
                v(rng, state_dim),
                v(rng, action_dim),
                rng.random_range(-1.0..1.0),
                v(rng, state_dim),
                false,
            )
            .unwrap()
        })
        .collect()
}

/// Relative error between the analytic critic gradient and central
/// differences, for a random network and minibatch.
pub fn critic_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ds, da) = (rng.random_range(1..5), rng.random_range(1..3));
    let mut agent = small_agent(&mut rng, ds, da);
    let data = batch(&mut rng, ds, da, 6);
    let refs: Vec<&Transition<f64>> = data.iter().collect();
    let targets: Vec<f64> = (0..refs.len())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let (_, analytic) = agent.critic_loss_and_grad(&refs, &targets).unwrap();
    let theta = agent.critic().params().to_vec();
    let numeric = finite_difference(&theta, 1e-6, |p| {
        agent.critic_mut().params_mut().copy_from_slice(p);
        agent.critic_loss_and_grad(&refs, &targets).unwrap().0
    });
    relative_error(&analytic, &numeric)
}

/// Same as [`critic_gradient_error`] for the actor objective.
pub fn actor_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ds, da) = (rng.random_range(1..5), rng.random_range(1..3));
    let mut agent = small_agent(&mut rng, ds, da);
    let data = batch(&mut rng, ds, da, 6);
    let refs: Vec<&Transition<f64>> = data.iter().collect();
    let (_, analytic) = agent.actor_objective_and_grad(&refs).unwrap();
    let theta = agent.actor().params().to_vec();
    let numeric = finite_difference(&theta, 1e-6, |p| {
        agent.actor_mut().params_mut().copy_from_slice(p);
        agent.actor_objective_and_grad(&refs).unwrap().0
    });
    relative_error(&analytic, &numeric)
}

/// Small networks and a short warmup so that short runs still train.
pub fn quick_run_config() -> RunConfig {
    RunConfig {
        eg_agent: DdpgConfig {
            hidden: vec![32, 32],
            ..DdpgConfig::default()
        },
        eg_warmup: 200,
        ..RunConfig::default()
    }
}

/// Runs AutoEG on LineWalker and checks the tutor's horizon bookkeeping
/// after every episode. Returns whether any synthetic data was stored.
pub fn tutor_bookkeeping(episodes: usize, horizon: usize, seed: u64) -> Result<bool, String> {
    let cfg = RunConfig {
        horizon,
        ..quick_run_config()
    };
    let env = make_env(EnvKind::LineWalker, &EnvParams::default());
    let mut run =
        Runner::<f64>::new(cfg, Mode::AutoEg, env, episodes, seed).map_err(|e| e.to_string())?;
    let mut returns = Vec::new();
    let mut synthetic_seen = false;
    for ep in 1..=episodes {
        let rec = run.run_episode().map_err(|e| e.to_string())?;
        returns.push(rec.episode_return);
        synthetic_seen |= rec.n_synth_stored > 0;
        let tutor = run.tutor_buffer().unwrap();
        ensure!(
            rec.episode == ep,
            "record numbered {} in episode {ep}",
            rec.episode
        );
        ensure!(
            tutor.len() == ep,
            "{} tutor transitions after {ep} episodes",
            tutor.len()
        );
        let last = tutor.iter().last().unwrap();
        let counter = run.tutor_window().unwrap().horizon_counter;
        if ep % horizon == 0 {
            let mean = returns[ep - horizon..].iter().sum::<f64>() / horizon as f64;
            let Some(reward) = rec.tutor_reward else {
                return Err(format!("no tutor reward at boundary episode {ep}"));
            };
            ensure!(
                (reward - mean).abs() <= 1e-9,
                "episode {ep}: tutor reward {reward}, window mean {mean}"
            );
            ensure!(
                run.eg_buffer().synthetic_ratio() == 0.0,
                "synthetic data left after boundary {ep}"
            );
            ensure!(
                rec.synth_ratio_end == 0.0,
                "record reports synthetic ratio {}",
                rec.synth_ratio_end
            );
            ensure!(
                counter == 0,
                "horizon counter {counter} after boundary {ep}"
            );
            ensure!(
                last.terminal && last.r == reward,
                "boundary tutor transition is not terminal with the reward"
            );
        } else {
            ensure!(
                rec.tutor_reward.is_none(),
                "tutor reward inside a window at episode {ep}"
            );
            ensure!(
                counter == ep % horizon,
                "horizon counter {counter} at episode {ep}"
            );
            ensure!(
                !last.terminal && last.r == 0.0,
                "inner tutor transition has reward {}",
                last.r
            );
        }
    }
    Ok(synthetic_seen)
}
