//! Fully connected networks with a hand-written reverse pass.
//!
//! An [`Mlp`] is a chain of affine layers with a shared hidden activation and
//! a per-output-dimension head: output `j` is `scale[j] * head[j](z[j])`.
//! That covers a plain critic (identity head), a bounded actor (tanh head
//! times the action bound) and the gated actor of the open-loop controller
//! (tanh heads for the action plus one logistic gate head).
//!
//! `forward` caches what `backward` needs; `infer` is the cache-free variant
//! used for target networks and acting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    /// Bounded-saturating, range (-1, 1).
    Tanh,
    /// Logistic, range (0, 1).
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => libm::tanh(z),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    #[inline]
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            3 => Activation::Sigmoid,
            _ => return None,
        })
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Affine map `x ↦ W x + b` with `W: [out × in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    /// Uniform initialisation in `±1/√fan_in` for weights and bias.
    pub fn init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let w = draw(fan_in * fan_out);
        let b = draw(fan_out);
        Self {
            weight: Tensor::new(vec![fan_out, fan_in], w).expect("sized above"),
            bias: Tensor::new(vec![fan_out], b).expect("sized above"),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }
}

#[derive(Debug, Clone)]
struct Cache {
    batch: usize,
    /// Input to each layer, `inputs[0]` being the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    /// Head activations before scaling.
    head_out: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<Linear>,
    hidden: Activation,
    head: Vec<Activation>,
    scale: Vec<f64>,
    cache: Option<Cache>,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
            && self.hidden == other.hidden
            && self.head == other.head
            && self.scale == other.scale
    }
}

impl Mlp {
    /// Builds a network with layer widths `dims = [in, h1, .., out]`.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        head: Vec<Activation>,
        scale: Vec<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!("bad layer widths {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| Linear::init(w[0], w[1], rng))
            .collect();
        Self::from_layers(layers, hidden, head, scale)
    }

    /// Same activation and scale on every output.
    pub fn uniform_head<R: Rng + ?Sized>(
        dims: &[usize],
        head: Activation,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let out = *dims.last().unwrap_or(&0);
        Self::new(dims, Activation::Relu, vec![head; out], vec![scale; out], rng)
    }

    pub fn from_layers(
        layers: Vec<Linear>,
        hidden: Activation,
        head: Vec<Activation>,
        scale: Vec<f64>,
    ) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        };
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::ShapeMismatch {
                    context: "layer chaining",
                    expected: pair[0].out_dim(),
                    found: pair[1].in_dim(),
                });
            }
        }
        for l in &layers {
            if l.bias.len() != l.out_dim() {
                return Err(Error::ShapeMismatch {
                    context: "layer bias",
                    expected: l.out_dim(),
                    found: l.bias.len(),
                });
            }
        }
        let out = last.out_dim();
        for (what, len) in [("output head", head.len()), ("output scale", scale.len())] {
            if len != out {
                return Err(Error::ShapeMismatch {
                    context: what,
                    expected: out,
                    found: len,
                });
            }
        }
        Ok(Self {
            layers,
            hidden,
            head,
            scale,
            cache: None,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// `[in, h1, .., out]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.in_dim()];
        d.extend(self.layers.iter().map(Linear::out_dim));
        d
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn head(&self) -> &[Activation] {
        &self.head
    }

    pub fn output_scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn num_params(&self) -> usize {
        self.params().map(Tensor::len).sum()
    }

    /// Parameters in layer order: weight then bias for each layer.
    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    /// Name of the `i`-th tensor yielded by [`Mlp::params`].
    pub fn param_name(i: usize) -> alloc::string::String {
        let kind = if i % 2 == 0 { "weight" } else { "bias" };
        format!("layer{}.{kind}", i / 2)
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.dims() == other.dims()
            && self.hidden == other.hidden
            && self.head == other.head
            && self.scale == other.scale
    }

    /// Forward pass that keeps the activations for [`Mlp::backward`].
    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let mut cache = Cache {
            batch: 0,
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            head_out: Vec::new(),
        };
        let out = self.run(input, Some(&mut cache))?;
        self.cache = Some(cache);
        Ok(out)
    }

    /// Forward pass without caching.
    pub fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.run(input, None)
    }

    /// Single-sample convenience wrapper around [`Mlp::infer`].
    pub fn infer_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let t = Tensor::matrix(1, x.len(), x.to_vec())?;
        Ok(self.infer(&t)?.into_data())
    }

    fn run(&self, input: &Tensor, mut cache: Option<&mut Cache>) -> Result<Tensor> {
        let batch = input.rows();
        if input.cols() != self.in_dim() {
            return Err(Error::ShapeMismatch {
                context: "network input width",
                expected: self.in_dim(),
                found: input.cols(),
            });
        }
        let last = self.layers.len() - 1;
        let mut x = input.data().to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let (n_in, n_out) = (layer.in_dim(), layer.out_dim());
            let mut z = Vec::with_capacity(batch * n_out);
            for _ in 0..batch {
                z.extend_from_slice(layer.bias.data());
            }
            // z += x · Wᵀ
            gemm(
                batch,
                n_in,
                n_out,
                (&x, n_in, 1),
                (layer.weight.data(), 1, n_in),
                &mut z,
                1.0,
            );
            let a: Vec<f64> = if li == last {
                z.iter()
                    .enumerate()
                    .map(|(i, &v)| self.head[i % n_out].apply(v))
                    .collect()
            } else {
                z.iter().map(|&v| self.hidden.apply(v)).collect()
            };
            if let Some(c) = cache.as_deref_mut() {
                c.inputs.push(core::mem::take(&mut x));
                c.pre.push(z);
            }
            x = a;
        }
        let n_out = self.out_dim();
        let mut out = x.clone();
        for (i, v) in out.iter_mut().enumerate() {
            *v *= self.scale[i % n_out];
        }
        if let Some(c) = cache {
            c.batch = batch;
            c.head_out = x;
        }
        Tensor::matrix(batch, n_out, out)
    }

    /// Reverse pass for the cached forward pass.
    ///
    /// `upstream` is ∂L/∂output, shaped like the forward output. Parameter
    /// gradient slots are overwritten (not accumulated) and ∂L/∂input is
    /// returned. The cache is consumed.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let cache = self.cache.take().ok_or(Error::BackwardWithoutForward)?;
        let batch = cache.batch;
        let n_out = self.out_dim();
        if upstream.rows() != batch || upstream.cols() != n_out {
            return Err(Error::ShapeMismatch {
                context: "upstream gradient",
                expected: batch * n_out,
                found: upstream.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut delta: Vec<f64> = upstream
            .data()
            .iter()
            .zip(cache.pre[last].iter().zip(&cache.head_out))
            .enumerate()
            .map(|(i, (&g, (&z, &y)))| {
                let j = i % n_out;
                g * self.scale[j] * self.head[j].derivative(z, y)
            })
            .collect();

        for li in (0..=last).rev() {
            let layer = &mut self.layers[li];
            let (n_in, n_out) = (layer.in_dim(), layer.out_dim());
            let x = &cache.inputs[li];
            // dW = δᵀ · x
            gemm(
                n_out,
                batch,
                n_in,
                (&delta, 1, n_out),
                (x, n_in, 1),
                layer.weight.grad_mut(),
                0.0,
            );
            let db = layer.bias.grad_mut();
            db.fill(0.0);
            for row in delta.chunks_exact(n_out) {
                for (g, d) in db.iter_mut().zip(row) {
                    *g += d;
                }
            }
            // dx = δ · W
            let mut dx = vec![0.0; batch * n_in];
            gemm(
                batch,
                n_out,
                n_in,
                (&delta, n_out, 1),
                (layer.weight.data(), n_in, 1),
                &mut dx,
                0.0,
            );
            if li == 0 {
                return Tensor::matrix(batch, n_in, dx);
            }
            let prev_pre = &cache.pre[li - 1];
            let hidden = self.hidden;
            for (d, (&z, &y)) in dx.iter_mut().zip(prev_pre.iter().zip(x)) {
                *d *= hidden.derivative(z, y);
            }
            delta = dx;
        }
        unreachable!("loop returns at the first layer")
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Polyak averaging: `self ← tau·source + (1 − tau)·self`.
    pub fn soft_update(&mut self, source: &Mlp, tau: f64) -> Result<()> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidConfig(format!("soft update rate {tau} not in (0, 1]")));
        }
        if !self.same_architecture(source) {
            return Err(Error::ArchitectureMismatch);
        }
        for (t, s) in self.params_mut().zip(source.params()) {
            for (tv, &sv) in t.data_mut().iter_mut().zip(s.data()) {
                *tv = tau * sv + (1.0 - tau) * *tv;
            }
        }
        Ok(())
    }

    /// Copies parameters from `source` (same architecture).
    pub fn copy_from(&mut self, source: &Mlp) -> Result<()> {
        if !self.same_architecture(source) {
            return Err(Error::ArchitectureMismatch);
        }
        for (t, s) in self.params_mut().zip(source.params()) {
            t.data_mut().copy_from_slice(s.data());
        }
        Ok(())
    }
}

/// `c ← a·b + beta·c` for an `[m × k]` by `[k × n]` product; operands are
/// `(slice, row stride, column stride)` and `c` is row-major `[m × n]`.
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: (&[f64], usize, usize),
    b: (&[f64], usize, usize),
    c: &mut [f64],
    beta: f64,
) {
    debug_assert!(a.0.len() >= m * k && b.0.len() >= k * n && c.len() >= m * n);
    // SAFETY: the slices cover the strided extents asserted above and `c`
    // does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1 as isize,
            a.2 as isize,
            b.0.as_ptr(),
            b.1 as isize,
            b.2 as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn single(w: f64) -> Mlp {
        let layer = Linear {
            weight: Tensor::matrix(1, 1, vec![w]).unwrap(),
            bias: Tensor::new(vec![1], vec![0.0]).unwrap(),
        };
        Mlp::from_layers(vec![layer], Activation::Relu, vec![Activation::Identity], vec![1.0])
            .unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut rng = stream(0, Stream::Init);
        let mut net = Mlp::uniform_head(&[3, 5, 2], Activation::Tanh, 2.0, &mut rng).unwrap();
        for p in net.params_mut() {
            p.data_mut().fill(0.0);
        }
        let x = Tensor::matrix(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.1, 9.0]).unwrap();
        assert!(net.infer(&x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Linear {
            weight: Tensor::matrix(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap(),
            bias: Tensor::new(vec![3], vec![0.0; 3]).unwrap(),
        };
        let net = Mlp::from_layers(
            vec![layer],
            Activation::Relu,
            vec![Activation::Identity; 3],
            vec![1.0; 3],
        )
        .unwrap();
        let x = [0.3, -1.7, 42.0];
        assert_eq!(net.infer_one(&x).unwrap(), x);
    }

    #[test]
    fn scalar_product_rule() {
        let mut net = single(2.0);
        let x = Tensor::matrix(1, 1, vec![3.0]).unwrap();
        assert_eq!(net.forward(&x).unwrap().data(), &[6.0]);
        let dx = net.backward(&Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        assert_eq!(dx.data(), &[2.0]);
        assert_eq!(net.layers()[0].weight.grad().unwrap(), &[3.0]);
        assert_eq!(net.layers()[0].bias.grad().unwrap(), &[1.0]);
    }

    #[test]
    fn relu_blocks_gradient_at_negative_preactivation() {
        // 1 -> 1 (relu) -> 1; hidden pre-activation is -1.
        let l0 = Linear {
            weight: Tensor::matrix(1, 1, vec![-1.0]).unwrap(),
            bias: Tensor::new(vec![1], vec![0.0]).unwrap(),
        };
        let l1 = Linear {
            weight: Tensor::matrix(1, 1, vec![5.0]).unwrap(),
            bias: Tensor::new(vec![1], vec![0.0]).unwrap(),
        };
        let mut net = Mlp::from_layers(
            vec![l0, l1],
            Activation::Relu,
            vec![Activation::Identity],
            vec![1.0],
        )
        .unwrap();
        net.forward(&Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        let dx = net.backward(&Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        assert_eq!(dx.data(), &[0.0]);
        assert_eq!(net.layers()[0].weight.grad().unwrap(), &[0.0]);
        assert_eq!(net.layers()[0].bias.grad().unwrap(), &[0.0]);
    }

    #[test]
    fn backward_requires_forward() {
        let mut net = single(1.0);
        let g = Tensor::matrix(1, 1, vec![1.0]).unwrap();
        assert_eq!(net.backward(&g), Err(Error::BackwardWithoutForward));
        net.forward(&Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        net.backward(&g).unwrap();
        assert_eq!(net.backward(&g), Err(Error::BackwardWithoutForward));
    }

    #[test]
    fn input_width_is_checked() {
        let net = single(1.0);
        let x = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(net.infer(&x), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn tanh_head_is_bounded_before_scaling() {
        let mut rng = stream(3, Stream::Init);
        let mut net = Mlp::uniform_head(&[2, 8, 1], Activation::Tanh, 2.0, &mut rng).unwrap();
        for p in net.params_mut() {
            for v in p.data_mut() {
                *v *= 50.0;
            }
        }
        let x = Tensor::matrix(1, 2, vec![3.0, -4.0]).unwrap();
        let y = net.infer(&x).unwrap().data()[0];
        assert!(y.abs() <= 2.0);
    }

    #[test]
    fn soft_update_endpoints() {
        let mut rng = stream(1, Stream::Init);
        let src = Mlp::uniform_head(&[2, 3, 1], Activation::Identity, 1.0, &mut rng).unwrap();
        let mut tgt = Mlp::uniform_head(&[2, 3, 1], Activation::Identity, 1.0, &mut rng).unwrap();
        tgt.soft_update(&src, 1.0).unwrap();
        assert_eq!(tgt, src);

        let mut zero = src.clone();
        let mut one = src.clone();
        zero.params_mut().for_each(|p| p.data_mut().fill(0.0));
        one.params_mut().for_each(|p| p.data_mut().fill(1.0));
        zero.soft_update(&one, 0.005).unwrap();
        assert!(zero.params().all(|p| p.data().iter().all(|&v| v == 0.005)));

        assert!(zero.soft_update(&one, 0.0).is_err());
        let other = Mlp::uniform_head(&[2, 4, 1], Activation::Identity, 1.0, &mut rng).unwrap();
        assert_eq!(zero.soft_update(&other, 0.5), Err(Error::ArchitectureMismatch));
    }
}
