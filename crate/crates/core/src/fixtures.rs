//! A scripted two-trial walker scenario for demonstrating a single graft.
//!
//! States are `(position, speed, tilt)`. The first trial starts fast and
//! falls; the second starts slowly and then walks fast. Both pass through
//! the same mid-trial state, so the fast head of the first trial can be
//! joined to the fast tail of the second.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::experience::{Trajectory, Transition};
use crate::grafting::{graft, GraftConfig, GraftOutput};
use crate::library::SegmentLibrary;

/// The state both trials pass through.
pub const JUNCTION: [f64; 3] = [6.2, 2.0, 0.3];

/// Index of the first transition of the slow trial that leaves [`JUNCTION`].
pub const SLOW_TRIAL_JUNCTION: usize = 5;

#[derive(Debug, Clone)]
pub struct WalkerFixture {
    /// Fast start, then a fall. Quality 2.1.
    pub fall_trial: Trajectory<f64>,
    /// Slow start, then steady fast walking. Quality 9.5.
    pub slow_trial: Trajectory<f64>,
}

fn chain(
    states: &[[f64; 3]],
    rewards: &[f64],
    action: [f64; 2],
    last_terminal: bool,
) -> Trajectory<f64> {
    let n = rewards.len();
    let transitions = (0..n)
        .map(|i| {
            Transition::new(
                states[i].to_vec(),
                action.to_vec(),
                rewards[i],
                states[i + 1].to_vec(),
                last_terminal && i + 1 == n,
            )
            .expect("fixture transitions are well formed")
        })
        .collect();
    Trajectory::new(transitions, true).expect("fixture trajectories are non-empty")
}

pub fn walker_fixture() -> WalkerFixture {
    let fall_trial = chain(
        &[
            [0.2, 0.1, 0.0],
            [2.2, 2.0, 0.1],
            [4.2, 2.0, 0.2],
            JUNCTION,
            [7.3, 1.1, 1.2],
        ],
        &[2.0, 2.0, 2.0, 1.1 - 5.0],
        [1.0, 0.0],
        true,
    );
    let slow_trial = chain(
        &[
            [0.2, 0.1, 0.0],
            [0.7, 0.5, 0.0],
            [1.7, 1.0, 0.1],
            [3.2, 1.5, 0.1],
            [5.0, 1.8, 0.2],
            JUNCTION,
            [8.2, 2.0, 0.3],
            [10.2, 2.0, 0.3],
            [12.2, 2.0, 0.3],
            [14.2, 2.0, 0.3],
        ],
        &[0.1, 0.2, 0.3, 0.4, 0.5, 2.0, 2.0, 2.0, 2.0],
        [0.3, 0.0],
        false,
    );
    WalkerFixture {
        fall_trial,
        slow_trial,
    }
}

/// Stores the slow trial's tail under the junction state (as its extraction
/// phase would), then grafts the fall trial against the library.
pub fn run_walker_demo(seed: u64) -> Result<(WalkerFixture, GraftOutput<f64>)> {
    let fixture = walker_fixture();
    let mut lib = SegmentLibrary::new(1.0, 1000)?;
    let slow = fixture.slow_trial.segment();
    lib.insert(
        JUNCTION.to_vec(),
        slow.slice(SLOW_TRIAL_JUNCTION..slow.len())?,
    )?;
    let cfg = GraftConfig::new(0.05, 10, 64, 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = graft(&cfg, &fixture.fall_trial, &mut lib, &mut rng)?;
    Ok((fixture, out))
}
