mod common;

use common::checks::{check_graft_call, graft_sequence};
use common::lattice_trajectory;
use expgraft::experience::{Provenance, Trajectory};
use expgraft::fixtures::run_walker_demo;
use expgraft::grafting::{graft, select_top, union, GraftConfig};
use expgraft::library::SegmentLibrary;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graft_invariants(seed in any::<u64>(), theta in 0usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = rng.random_range(0.0..0.6);
        graft_sequence(rng.random(), eps, theta, 8).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn select_top_keeps_the_best(qualities in prop::collection::vec(-5.0f64..5.0, 0..12), theta in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = lattice_trajectory(&mut rng, 4, 2, false);
        let head = base.segment().slice(0..1).unwrap();
        let cands: Vec<_> = qualities.iter().map(|&q| {
            let mut c = union(&head, &head, 1.0).unwrap().unwrap();
            c.quality = q;
            c
        }).collect();
        let kept = select_top(&base, cands, theta);
        let mut expected: Vec<f64> = qualities.iter().copied().filter(|&q| q >= base.quality()).collect();
        if expected.len() > theta {
            expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
            expected.truncate(theta);
        }
        let got: Vec<f64> = kept.iter().map(|c| c.quality).collect();
        prop_assert_eq!(got, expected);
    }
}

#[test]
fn walker_fixture_yields_one_better_trial() {
    let (fixture, out) = run_walker_demo(3).unwrap();
    assert_eq!(out.trajectories.len(), 1);
    let q = out.trajectories[0].quality;
    assert!(q > fixture.fall_trial.quality() && q > fixture.slow_trial.quality());
}

#[test]
fn synthetic_input_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let traj = lattice_trajectory(&mut rng, 3, 2, false);
    let synthetic: Vec<_> = traj
        .transitions()
        .iter()
        .map(|t| t.clone().with_provenance(Provenance::Synthetic))
        .collect();
    let mut lib = SegmentLibrary::new(1.0, 10).unwrap();
    let bad = Trajectory::new(synthetic, true).unwrap();
    assert!(graft(&GraftConfig::default(), &bad, &mut lib, &mut rng).is_err());
}

#[test]
fn zero_threshold_or_zero_theta_returns_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut lib = SegmentLibrary::new(1.0, 100).unwrap();
    for _ in 0..20 {
        let traj = lattice_trajectory(&mut rng, 8, 2, false);
        let eps0 = GraftConfig::new(0.0, 10, 10, 5).unwrap();
        assert!(graft(&eps0, &traj, &mut lib, &mut rng)
            .unwrap()
            .trajectories
            .is_empty());
        let theta0 = GraftConfig::new(0.5, 10, 10, 0).unwrap();
        assert!(graft(&theta0, &traj, &mut lib, &mut rng)
            .unwrap()
            .trajectories
            .is_empty());
    }
}

#[test]
fn lattice_walks_do_graft() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = GraftConfig::new(0.3, 5, 10, 5).unwrap();
    let mut lib = SegmentLibrary::new(1.0, 50).unwrap();
    let mut registered = Vec::new();
    let mut total = 0;
    for _ in 0..40 {
        let traj = lattice_trajectory(&mut rng, 10, 3, false);
        total += check_graft_call(&cfg, &traj, &mut lib, &mut registered, &mut rng).unwrap();
    }
    assert!(total > 0);
}
