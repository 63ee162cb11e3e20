//! Adam with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use crate::nn::Mlp;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for every parameter tensor of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step_count: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        let zeros: Vec<Vec<f64>> = net.params().map(|p| vec![0.0; p.len()]).collect();
        Ok(Self {
            config,
            step_count: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        })
    }

    /// Applies one update using the gradients stored in `net`'s slots.
    ///
    /// Nothing is modified when any gradient is non-finite.
    pub fn step(&mut self, net: &mut Mlp) -> Result<()> {
        if net.params().count() != self.first_moment.len() {
            return Err(Error::ArchitectureMismatch);
        }
        for (i, p) in net.params().enumerate() {
            if self.first_moment[i].len() != p.len() {
                return Err(Error::ArchitectureMismatch);
            }
            if let Some(g) = p.grad() {
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteGradient {
                        parameter: Mlp::param_name(i),
                    });
                }
            }
        }
        self.step_count += 1;
        let t = self.step_count;
        for (i, p) in net.params_mut().enumerate() {
            let (data, grad) = p.data_and_grad_mut();
            adam_update(
                data,
                grad,
                &mut self.first_moment[i],
                &mut self.second_moment[i],
                t,
                &self.config,
            );
        }
        Ok(())
    }
}

/// Elementwise Adam update at step `t` (1-based).
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &AdamConfig,
) {
    let AdamConfig {
        learning_rate: lr,
        beta1: b1,
        beta2: b2,
        epsilon: eps,
    } = *cfg;
    let c1 = 1.0 - libm::pow(b1, t as f64);
    let c2 = 1.0 - libm::pow(b2, t as f64);
    for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (libm::sqrt(v_hat) + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::rng::{stream, Stream};

    fn net() -> Mlp {
        Mlp::uniform_head(&[2, 3, 1], Activation::Identity, 1.0, &mut stream(0, Stream::Init))
            .unwrap()
    }

    #[test]
    fn first_step_matches_scalar_closed_form() {
        // From zero moments: m̂ = g, v̂ = g², so Δ = -α·g/(|g| + ε).
        let cfg = AdamConfig::default();
        for g in [0.37, -2.5, 1e-3] {
            let (mut p, mut m, mut v) = ([1.0], [0.0], [0.0]);
            adam_update(&mut p, &[g], &mut m, &mut v, 1, &cfg);
            let expected = 1.0 - cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((p[0] - expected).abs() < 1e-15, "{} vs {}", p[0], expected);
        }
    }

    #[test]
    fn zero_gradient_from_zero_moments_leaves_params() {
        let mut n = net();
        let before = n.clone();
        n.params_mut().for_each(|p| p.grad_mut().fill(0.0));
        let mut st = AdamState::new(&n, AdamConfig::default()).unwrap();
        st.step(&mut n).unwrap();
        assert_eq!(n, before);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn zero_gradient_only_decays_moments() {
        let cfg = AdamConfig::default();
        let (mut p, mut m, mut v) = ([0.0], [0.2], [0.04]);
        adam_update(&mut p, &[0.0], &mut m, &mut v, 5, &cfg);
        assert_eq!(m[0], 0.9 * 0.2);
        assert_eq!(v[0], 0.999 * 0.04);
    }

    #[test]
    fn constant_gradient_descends_monotonically() {
        let cfg = AdamConfig::default();
        let (mut p, mut m, mut v) = ([0.0], [0.0], [0.0]);
        let mut prev = p[0];
        for t in 1..=10_000 {
            adam_update(&mut p, &[1.0], &mut m, &mut v, t, &cfg);
            assert!(p[0] < prev);
            prev = p[0];
        }
    }

    #[test]
    fn non_finite_gradient_is_named_and_nothing_moves() {
        let mut n = net();
        n.params_mut().for_each(|p| p.grad_mut().fill(0.1));
        n.layers_mut()[1].bias.grad_mut()[0] = f64::NAN;
        let before = n.clone();
        let mut st = AdamState::new(&n, AdamConfig::default()).unwrap();
        assert_eq!(
            st.step(&mut n),
            Err(Error::NonFiniteGradient {
                parameter: "layer1.bias".into()
            })
        );
        assert_eq!(n, before);
        assert_eq!(st.step_count, 0);
    }

    #[test]
    fn learning_rate_must_be_positive() {
        let cfg = AdamConfig {
            learning_rate: 0.0,
            ..AdamConfig::default()
        };
        assert!(AdamState::new(&net(), cfg).is_err());
    }
}
