mod common;

use common::checks::{actor_gradient_error, critic_gradient_error, random_small_agent};
use common::{finite_difference, relative_error};
use expgraft::experience::Transition;
use expgraft::neural::{Activation, DdpgAgent, DdpgConfig, Mlp, Trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

#[test]
fn critic_gradients_match_finite_differences() {
    for seed in 0..10 {
        let err = critic_gradient_error(seed);
        assert!(err <= TOL, "seed {seed}: relative error {err}");
    }
}

#[test]
fn actor_gradients_match_finite_differences() {
    for seed in 100..110 {
        let err = actor_gradient_error(seed);
        assert!(err <= TOL, "seed {seed}: relative error {err}");
    }
}

#[test]
fn input_gradient_of_a_tanh_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net = Mlp::<f64>::new(&[4, 8, 1], Activation::Tanh, 0.8, &mut rng).unwrap();
    let x = [0.3, -0.7, 0.1, 0.9];
    let mut trace = Trace::default();
    net.forward_trace(&x, &mut trace).unwrap();
    let mut grad_in = Vec::new();
    net.backward(&mut trace, &[1.0], None, &mut grad_in)
        .unwrap();
    let numeric = finite_difference(&x, 1e-6, |p| net.forward(p).unwrap()[0]);
    assert!(relative_error(&grad_in, &numeric) <= TOL);
}

/// The critic alone fits fixed regression targets.
#[test]
fn critic_fits_fixed_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = DdpgConfig {
        hidden: vec![16, 16],
        gamma: 0.0,
        critic_lr: 1e-2,
        ..DdpgConfig::default()
    };
    let mut agent = DdpgAgent::new(2, &[-1.0], &[1.0], &cfg, &mut rng).unwrap();
    let data: Vec<Transition<f64>> = (0..8)
        .map(|i| {
            let s = vec![i as f64 / 8.0, 1.0 - i as f64 / 8.0];
            let r = s[0] * 0.5 - 0.25;
            Transition::new(s.clone(), vec![0.0], r, s, false).unwrap()
        })
        .collect();
    let refs: Vec<&Transition<f64>> = data.iter().collect();
    let mut loss = f64::INFINITY;
    for _ in 0..2000 {
        loss = agent.train_step(&refs).unwrap().0;
    }
    assert!(loss < 1e-3, "final loss {loss}");
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let agent = random_small_agent(8);
    let bytes = agent.save_networks();
    // same seed, same hidden widths
    let mut twin = random_small_agent(8);
    twin.actor_mut().params_mut().fill(0.0);
    twin.load_networks(&bytes).unwrap();
    assert_eq!(twin.save_networks(), bytes);
    for (a, b) in twin.actor().params().iter().zip(agent.actor().params()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut wider =
        DdpgAgent::new(3, &[-1.0; 2], &[1.0; 2], &DdpgConfig::default(), &mut rng).unwrap();
    assert!(wider.load_networks(&bytes).is_err());
    assert!(twin.load_networks(&bytes[..bytes.len() - 1]).is_err());
}

#[test]
fn single_precision_checkpoint_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = Mlp::<f32>::new(&[3, 5, 2], Activation::Tanh, 3e-3, &mut rng).unwrap();
    let mut bytes = Vec::new();
    net.write_checkpoint(&mut bytes);
    let back = Mlp::<f32>::read_checkpoint(&mut bytes.as_slice()).unwrap();
    assert_eq!(back, net);
    assert!(Mlp::<f64>::read_checkpoint(&mut bytes.as_slice()).is_err());
}
