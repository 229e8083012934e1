//! Fully connected network with ReLU hidden layers and hand-written
//! backpropagation over whole minibatches. All parameters live in one flat
//! vector so that optimizers, soft updates and checkpoints are plain slice
//! operations.
//!
//! Layout per layer, in order: weights input-major (`in` rows of `out`
//! columns), then `out` biases. Batches are row-major, one sample per row.

use rand::Rng;

use super::linalg::{gemm_acc, transpose};
use crate::error::{check_dim, Error, Result};
use crate::scalar::{uniform, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn grad_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - y * y,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    widths: Vec<usize>,
    output: Activation,
    params: Vec<T>,
}

/// Per-layer outputs recorded by a forward pass, plus scratch space reused
/// by the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Trace<T> {
    batch: usize,
    acts: Vec<Vec<T>>,
    delta: Vec<T>,
    next_delta: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> Trace<T> {
    /// Network output, one row per sample.
    pub fn output(&self) -> &[T] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }
}

fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl<T: Scalar> Mlp<T> {
    /// All-zero network.
    pub fn zeros(widths: &[usize], output: Activation) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {widths:?}")));
        }
        Ok(Self {
            widths: widths.to_vec(),
            output,
            params: vec![T::zero(); param_count(widths)],
        })
    }

    /// Fan-in uniform initialization for hidden layers, `±final_scale` for
    /// the output layer.
    pub fn new<R: Rng + ?Sized>(
        widths: &[usize],
        output: Activation,
        final_scale: T,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(widths, output)?;
        let layers = net.layers();
        let mut offset = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (net.widths[l], net.widths[l + 1]);
            let bound = if l + 1 == layers {
                final_scale
            } else {
                T::one() / T::lit(fan_in as f64).sqrt()
            };
            for p in &mut net.params[offset..offset + fan_in * fan_out + fan_out] {
                *p = uniform(rng, -bound, bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_params(widths: &[usize], output: Activation, params: Vec<T>) -> Result<Self> {
        let mut net = Self::zeros(widths, output)?;
        check_dim(net.params.len(), params.len())?;
        net.params = params;
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("at least two widths")
    }

    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.widths == other.widths && self.output == other.output
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace)?;
        Ok(trace.acts.pop().unwrap_or_default())
    }

    /// Single-sample [`Mlp::forward_batch`].
    pub fn forward_trace(&self, x: &[T], trace: &mut Trace<T>) -> Result<()> {
        self.forward_batch(x, 1, trace)
    }

    /// Runs `batch` samples (`x` holds one per row), keeping every layer's
    /// output for [`Mlp::backward_batch`].
    pub fn forward_batch(&self, x: &[T], batch: usize, trace: &mut Trace<T>) -> Result<()> {
        if batch == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        check_dim(self.input_dim() * batch, x.len())?;
        let layers = self.layers();
        trace.batch = batch;
        trace.acts.resize_with(layers + 1, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(x);
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let act = if l + 1 == layers {
                self.output
            } else {
                Activation::Relu
            };
            let (w, rest) = self.params[offset..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            let (prev, next) = trace.acts.split_at_mut(l + 1);
            let out = &mut next[0];
            out.clear();
            for _ in 0..batch {
                out.extend_from_slice(b);
            }
            gemm_acc(batch, n_in, n_out, &prev[l], w, out);
            for z in out.iter_mut() {
                *z = act.apply(*z);
            }
            offset += n_in * n_out + n_out;
        }
        Ok(())
    }

    /// Single-sample [`Mlp::backward_batch`] that always returns the input
    /// gradient.
    pub fn backward(
        &self,
        trace: &mut Trace<T>,
        grad_out: &[T],
        grads: Option<&mut [T]>,
        grad_in: &mut Vec<T>,
    ) -> Result<()> {
        self.backward_batch(trace, grad_out, grads, Some(grad_in))
    }

    /// Backpropagates `grad_out` (d objective / d output, one row per
    /// sample) through the traced pass. Parameter gradients summed over the
    /// batch are added into `grads` when given; the per-sample gradient with
    /// respect to the input is written to `grad_in` when given.
    pub fn backward_batch(
        &self,
        trace: &mut Trace<T>,
        grad_out: &[T],
        mut grads: Option<&mut [T]>,
        grad_in: Option<&mut Vec<T>>,
    ) -> Result<()> {
        let layers = self.layers();
        if trace.acts.len() != layers + 1 || trace.batch == 0 {
            return Err(Error::InvalidInput(
                "backward without a matching forward trace".into(),
            ));
        }
        let n = trace.batch;
        check_dim(self.output_dim() * n, grad_out.len())?;
        if let Some(g) = grads.as_deref() {
            check_dim(self.params.len(), g.len())?;
        }
        let Trace {
            acts,
            delta,
            next_delta,
            scratch,
            ..
        } = trace;
        delta.clear();
        delta.extend(
            grad_out
                .iter()
                .zip(&acts[layers])
                .map(|(&g, &y)| g * self.output.grad_from_output(y)),
        );
        let want_input = grad_in.is_some();
        let mut end = self.params.len();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let start = end - (n_in * n_out + n_out);
            let w_end = start + n_in * n_out;
            let input = &acts[l];
            if let Some(grads) = grads.as_deref_mut() {
                transpose(n, n_in, input, scratch);
                gemm_acc(n_in, n, n_out, scratch, delta, &mut grads[start..w_end]);
                let gb = &mut grads[w_end..w_end + n_out];
                for row in delta.chunks_exact(n_out) {
                    for (g, d) in gb.iter_mut().zip(row) {
                        *g += *d;
                    }
                }
            }
            if l == 0 && !want_input {
                break;
            }
            transpose(n_in, n_out, &self.params[start..w_end], scratch);
            next_delta.clear();
            next_delta.resize(n * n_in, T::zero());
            gemm_acc(n, n_out, n_in, delta, scratch, next_delta);
            if l > 0 {
                for (nd, &y) in next_delta.iter_mut().zip(input) {
                    *nd *= Activation::Relu.grad_from_output(y);
                }
            }
            std::mem::swap(delta, next_delta);
            end = start;
        }
        if let Some(grad_in) = grad_in {
            grad_in.clear();
            grad_in.extend_from_slice(delta);
        }
        Ok(())
    }

    /// `self <- tau * online + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, online: &Mlp<T>, tau: T) -> Result<()> {
        if !self.same_shape(online) {
            return Err(Error::InvalidInput(
                "soft update between differently shaped networks".into(),
            ));
        }
        let keep = T::one() - tau;
        for (t, &o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + keep * *t;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}
