use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tla_core::envs::{CartPole, Env, EnvId, MountainCar, MultiRateStepper, Pendulum};
use tla_core::metrics::{action_repetition, normalized_auc};
use tla_core::nn::{Activation, Mlp};
use tla_core::realtime::DelayedEnv;
use tla_core::td3::{rollout, ActMode, ReplayBuffer, Td3Agent, Td3Config, Transition};
use tla_core::tla::{
    combine, fast_reward_shaping, gate_reward, threshold_fast, ThresholdMode,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_config() -> Td3Config {
    Td3Config {
        hidden: vec![16, 16],
        batch_size: 8,
        warmup_steps: 10,
        ..Td3Config::default()
    }
}

fn bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
    (vec![-1.5; dim], vec![1.5; dim])
}

proptest! {
    #[test]
    fn combine_stays_in_bounds(
        slow in prop::collection::vec(-10.0..10.0f64, 1..5),
        fast_seed in any::<u64>(),
    ) {
        let (lo, hi) = bounds(slow.len());
        let mut r = rng(fast_seed);
        let fast: Vec<f64> = slow.iter().map(|_| r.gen_range(-10.0..10.0)).collect();
        let c = combine(&slow, &fast, &lo, &hi);
        prop_assert!(c.iter().zip(&lo).zip(&hi).all(|((c, l), h)| l <= c && c <= h));
    }

    #[test]
    fn zero_fast_is_identity_in_bounds(slow in prop::collection::vec(-1.5..=1.5f64, 1..5)) {
        let (lo, hi) = bounds(slow.len());
        let zero = vec![0.0; slow.len()];
        prop_assert_eq!(combine(&slow, &zero, &lo, &hi), slow);
    }

    #[test]
    fn zero_threshold_keeps_fast(
        slow in prop::collection::vec(-1.5..=1.5f64, 1..4),
        seed in any::<u64>(),
    ) {
        let (lo, hi) = bounds(slow.len());
        let mut r = rng(seed);
        let fast: Vec<f64> = slow.iter().map(|_| r.gen_range(-3.0..3.0)).collect();
        for mode in [ThresholdMode::Joint, ThresholdMode::PerDimension] {
            let (f, suppressed) = threshold_fast(&slow, &fast, &lo, &hi, 0.0, mode);
            prop_assert_eq!(&f, &fast);
            prop_assert!(!suppressed);
        }
    }

    #[test]
    fn threshold_above_range_zeroes_fast(
        slow in prop::collection::vec(-1.5..=1.5f64, 1..4),
        seed in any::<u64>(),
        excess in 1e-9..5.0f64,
    ) {
        let (lo, hi) = bounds(slow.len());
        let mut r = rng(seed);
        let fast: Vec<f64> = slow.iter().map(|_| r.gen_range(-3.0..3.0)).collect();
        for mode in [ThresholdMode::Joint, ThresholdMode::PerDimension] {
            let (f, suppressed) = threshold_fast(&slow, &fast, &lo, &hi, 3.0 + excess, mode);
            prop_assert!(f.iter().all(|&v| v == 0.0));
            prop_assert!(suppressed);
        }
    }

    #[test]
    fn joint_suppression_implies_per_dimension_suppression(
        slow in prop::collection::vec(-1.5..=1.5f64, 1..4),
        seed in any::<u64>(),
        thresh in 0.0..3.0f64,
    ) {
        let (lo, hi) = bounds(slow.len());
        let mut r = rng(seed);
        let fast: Vec<f64> = slow.iter().map(|_| r.gen_range(-3.0..3.0)).collect();
        let (_, joint) = threshold_fast(&slow, &fast, &lo, &hi, thresh, ThresholdMode::Joint);
        let (_, per) = threshold_fast(&slow, &fast, &lo, &hi, thresh, ThresholdMode::PerDimension);
        prop_assert_eq!(joint, per);
    }

    #[test]
    fn open_gate_keeps_reward(r in -1e6..1e6f64) {
        prop_assert_eq!(gate_reward(r, true).to_bits(), r.to_bits());
    }

    #[test]
    fn closed_gate_never_improves_reward_sign(r in -1e6..1e6f64) {
        let g = gate_reward(r, false);
        prop_assert!(g.signum() == r.signum() || r == 0.0);
        let worse = if r <= 0.0 { g <= r } else { g < r };
        prop_assert!(worse);
    }

    #[test]
    fn fast_penalty_is_monotone(r in -100.0..100.0f64, lambda in 0.0..10.0f64, a in -2.0..2.0f64) {
        let shaped = fast_reward_shaping(r, &[a], lambda);
        prop_assert!(shaped <= r);
        prop_assert!((r - shaped - lambda * a.abs()).abs() < 1e-9);
    }

    #[test]
    fn soft_update_is_convex_combination(tau in 1e-3..=1.0f64, s1 in any::<u64>(), s2 in any::<u64>()) {
        let dims = [3, 5, 2];
        let src = Mlp::uniform_head(&dims, Activation::Identity, 1.0, &mut rng(s1)).unwrap();
        let mut dst = Mlp::uniform_head(&dims, Activation::Identity, 1.0, &mut rng(s2)).unwrap();
        let before = dst.clone();
        dst.soft_update(&src, tau).unwrap();
        for ((d, b), s) in dst.params().zip(before.params()).zip(src.params()) {
            for ((&d, &b), &s) in d.data().iter().zip(b.data()).zip(s.data()) {
                prop_assert!((d - (tau * s + (1.0 - tau) * b)).abs() <= 1e-15 * (1.0 + s.abs() + b.abs()));
            }
        }
    }

    #[test]
    fn delayed_env_shifts_by_exactly_one_step(
        seed in any::<u64>(),
        actions in prop::collection::vec(-2.0..2.0f64, 1..60),
    ) {
        let mut plain = Pendulum::new();
        let mut delayed = DelayedEnv::new(Pendulum::new());
        plain.reset(seed);
        delayed.reset(seed);
        let mut shifted = vec![0.0];
        shifted.extend_from_slice(&actions[..actions.len() - 1]);
        for (k, (&chosen, &applied)) in actions.iter().zip(&shifted).enumerate() {
            let a = plain.step(&[applied]).unwrap();
            let b = delayed.step(&[chosen]).unwrap();
            prop_assert_eq!(&a.next_state[..], &b.next_state[..3]);
            prop_assert_eq!(b.next_state[3], chosen);
            prop_assert_eq!(a.reward.to_bits(), b.reward.to_bits());
            prop_assert_eq!(&delayed.applied()[k], &vec![applied]);
        }
    }

    #[test]
    fn constant_action_trace_repeats_fully(c in -1.0..1.0f64, len in 2usize..50) {
        let trace = vec![vec![c]; len];
        prop_assert_eq!(action_repetition(&trace).unwrap(), 100.0);
    }

    #[test]
    fn auc_invariant_under_breakpoint_subsampling(
        ys in prop::collection::vec(-1600.0..0.0f64, 3..12),
        refine in 1usize..5,
    ) {
        let coarse: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64 * 100.0, y)).collect();
        let mut fine = Vec::new();
        for w in coarse.windows(2) {
            for j in 0..refine {
                let f = j as f64 / refine as f64;
                fine.push((w[0].0 + f * (w[1].0 - w[0].0), w[0].1 + f * (w[1].1 - w[0].1)));
            }
        }
        fine.push(*coarse.last().unwrap());
        let a = normalized_auc(&coarse, (-1600.0, 0.0)).unwrap();
        let b = normalized_auc(&fine, (-1600.0, 0.0)).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&a));
    }
}

#[test]
fn constant_action_under_delay_matches_shifted_trajectory() {
    for id in EnvId::ALL {
        let mut plain = id.make();
        let mut delayed = DelayedEnv::new(id.make());
        let spec = plain.spec().clone();
        let c: Vec<f64> = spec.action_high.iter().map(|h| 0.37 * h).collect();
        let zero = vec![0.0; spec.action_dim];
        plain.reset(4);
        delayed.reset(4);
        for k in 0..40 {
            let a = plain.step(if k == 0 { &zero } else { &c }).unwrap();
            let b = delayed.step(&c).unwrap();
            assert_eq!(a.next_state[..], b.next_state[..spec.state_dim], "{id} step {k}");
            if a.done() {
                break;
            }
        }
    }
}

#[test]
fn delayed_slow_layer_applies_choices_one_window_later() {
    let mut env = DelayedEnv::new(MultiRateStepper::new(CartPole::new(), 3).unwrap());
    let mut plain = CartPole::new();
    env.reset(8);
    plain.reset(8);
    let choices = [[1.0], [-2.0], [0.5], [3.0]];
    let mut applied = vec![[0.0]];
    applied.extend_from_slice(&choices[..3]);
    for (c, a) in choices.iter().zip(&applied) {
        let r = env.step(c).unwrap();
        let mut last = None;
        for _ in 0..3 {
            last = Some(plain.step(a).unwrap());
        }
        assert_eq!(r.next_state[..4], last.unwrap().next_state[..]);
    }
    let seen: Vec<Vec<f64>> = env.applied().to_vec();
    assert_eq!(seen, applied.iter().map(|a| a.to_vec()).collect::<Vec<_>>());
}

#[test]
fn replay_is_fifo_beyond_capacity() {
    let mut buf = ReplayBuffer::new(5, 1, 1);
    for i in 0..12 {
        let x = i as f64;
        buf.push(&Transition {
            state: vec![x],
            action: vec![x],
            reward: x,
            next_state: vec![x + 1.0],
            mask: 1.0,
        })
        .unwrap();
    }
    assert_eq!(buf.len(), 5);
    let mut kept: Vec<f64> = (0..5).map(|i| buf.get(i).unwrap().reward).collect();
    kept.sort_by(f64::total_cmp);
    assert_eq!(kept, vec![7.0, 8.0, 9.0, 10.0, 11.0]);
}

#[test]
fn replay_sampling_is_uniform() {
    let n = 50;
    let mut buf = ReplayBuffer::new(n, 1, 1);
    for i in 0..n {
        buf.push(&Transition {
            state: vec![i as f64],
            action: vec![0.0],
            reward: 0.0,
            next_state: vec![0.0],
            mask: 1.0,
        })
        .unwrap();
    }
    let draws = 200_000;
    let mut counts = vec![0usize; n];
    let mut r = rng(99);
    for _ in 0..draws / n {
        for i in buf.sample_indices(n, &mut r).unwrap() {
            counts[i] += 1;
        }
    }
    let p = 1.0 / n as f64;
    let mean = draws as f64 * p;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        assert!((c as f64 - mean).abs() < 5.0 * sigma, "slot {i}: {c} vs {mean}");
    }
}

#[test]
fn warmup_actions_are_uniform() {
    let mut agent = Td3Agent::new(3, &[-2.0], &[2.0], Td3Config {
        warmup_steps: 1_000_000,
        ..small_config()
    }, 5)
    .unwrap();
    let mut xs: Vec<f64> = (0..4000)
        .map(|_| agent.select_action(&[0.1, 0.2, 0.3], ActMode::Explore).unwrap()[0])
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = (x + 2.0) / 4.0;
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    // Kolmogorov-Smirnov critical value at the 0.1% level.
    assert!(d < 1.95 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn forward_is_bitwise_reproducible() {
    let net = Mlp::uniform_head(&[4, 32, 32, 2], Activation::Tanh, 2.0, &mut rng(1)).unwrap();
    let x = [0.3, -1.2, 0.8, 2.0];
    let a = net.infer_one(&x).unwrap();
    let b = net.infer_one(&x).unwrap();
    assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
}

#[test]
fn environments_reset_deterministically() {
    for id in EnvId::ALL {
        let mut a = id.make();
        let mut b = id.make();
        assert_eq!(a.reset(17), b.reset(17));
        let mid: Vec<f64> = a.spec().action_high.iter().map(|h| 0.5 * h).collect();
        let ra = rollout(&mut a, 3, |_| Ok(mid.clone())).unwrap();
        let rb = rollout(&mut b, 3, |_| Ok(mid.clone())).unwrap();
        assert_eq!(ra, rb);
    }
    let _ = (MountainCar::new(), Pendulum::new());
}
