//! Minimal feed-forward networks over flat `f64` parameter vectors.
//!
//! Parameter layout is fixed: for each layer `l` (in order), the weight
//! matrix `W_l` is stored row-major with shape `(out, in)`, immediately
//! followed by the bias vector `b_l` of length `out`. Key-parameter
//! selection elsewhere depends on this layout staying put.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    pub params: Vec<f64>,
}

impl Network {
    /// Zero-initialized network. `sizes` includes the input layer, so
    /// `activations.len() == sizes.len() - 1`.
    pub fn new(sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidArgument(
                "network needs at least input and output layers".into(),
            ));
        }
        if activations.len() != sizes.len() - 1 {
            return Err(Error::DimensionMismatch {
                what: "activations",
                expected: sizes.len() - 1,
                got: activations.len(),
            });
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidArgument(
                "layer sizes must be positive".into(),
            ));
        }
        let p = param_count(&sizes);
        Ok(Network {
            sizes,
            activations,
            params: vec![0.0; p],
        })
    }

    /// Uniform init in ±1/sqrt(fan_in) per layer; biases zero.
    pub fn init_uniform<R: Rng>(&mut self, rng: &mut R) {
        let mut off = 0;
        for l in 0..self.layer_count() {
            let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
            let bound = 1.0 / (nin as f64).sqrt();
            for i in 0..nin * nout {
                self.params[off + i] = rng.random_range(-bound..bound);
            }
            for i in 0..nout {
                self.params[off + nin * nout + i] = 0.0;
            }
            off += nin * nout + nout;
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Offset of layer `l`'s weight block in the flat parameter vector.
    pub fn layer_offset(&self, l: usize) -> usize {
        let mut off = 0;
        for i in 0..l {
            off += self.sizes[i] * self.sizes[i + 1] + self.sizes[i + 1];
        }
        off
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: self.input_len(),
                got: input.len(),
            });
        }
        let mut x = input.to_vec();
        let mut off = 0;
        for l in 0..self.layer_count() {
            let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
            let mut y = vec![0.0; nout];
            for o in 0..nout {
                let row = &self.params[off + o * nin..off + (o + 1) * nin];
                let mut z = self.params[off + nin * nout + o];
                for i in 0..nin {
                    z += row[i] * x[i];
                }
                y[o] = self.activations[l].apply(z);
            }
            x = y;
            off += nin * nout + nout;
        }
        Ok(x)
    }

    /// Forward pass keeping pre-activations and post-activations per layer.
    fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        if input.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: self.input_len(),
                got: input.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.layer_count() + 1);
        let mut pre = Vec::with_capacity(self.layer_count());
        acts.push(input.to_vec());
        let mut off = 0;
        for l in 0..self.layer_count() {
            let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
            let x = acts.last().unwrap();
            let mut z = vec![0.0; nout];
            for o in 0..nout {
                let row = &self.params[off + o * nin..off + (o + 1) * nin];
                let mut s = self.params[off + nin * nout + o];
                for i in 0..nin {
                    s += row[i] * x[i];
                }
                z[o] = s;
            }
            let a = z.iter().map(|&v| self.activations[l].apply(v)).collect();
            pre.push(z);
            acts.push(a);
            off += nin * nout + nout;
        }
        Ok(ForwardCache { acts, pre })
    }

    /// Backpropagates a gradient seed on the output layer down to a flat
    /// parameter gradient.
    fn backprop(&self, cache: &ForwardCache, output_seed: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.param_count()];
        let last = self.layer_count() - 1;
        let mut delta: Vec<f64> = output_seed
            .iter()
            .zip(&cache.pre[last])
            .map(|(&g, &z)| g * self.activations[last].derivative(z))
            .collect();
        for l in (0..self.layer_count()).rev() {
            let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.layer_offset(l);
            let a_prev = &cache.acts[l];
            for o in 0..nout {
                for i in 0..nin {
                    grad[off + o * nin + i] = delta[o] * a_prev[i];
                }
                grad[off + nin * nout + o] = delta[o];
            }
            if l > 0 {
                let mut prev = vec![0.0; nin];
                for i in 0..nin {
                    let mut s = 0.0;
                    for o in 0..nout {
                        s += self.params[off + o * nin + i] * delta[o];
                    }
                    prev[i] = s * self.activations[l - 1].derivative(cache.pre[l - 1][i]);
                }
                delta = prev;
            }
        }
        grad
    }

    /// Gradient of a single output component with respect to all parameters.
    pub fn output_grad(&self, input: &[f64], output_index: usize) -> Result<Vec<f64>> {
        let cache = self.forward_cached(input)?;
        if output_index >= self.output_len() {
            return Err(Error::DimensionMismatch {
                what: "output index",
                expected: self.output_len(),
                got: output_index,
            });
        }
        let mut seed = vec![0.0; self.output_len()];
        seed[output_index] = 1.0;
        Ok(self.backprop(&cache, &seed))
    }
}

struct ForwardCache {
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

pub fn param_count(sizes: &[usize]) -> usize {
    (0..sizes.len() - 1)
        .map(|l| sizes[l] * sizes[l + 1] + sizes[l + 1])
        .sum()
}

/// Loss (mean of squared residuals over output components) and its flat
/// parameter gradient for one sample.
pub fn loss_and_grad(
    net: &Network,
    input: &[f64],
    target: &[f64],
    _kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    if target.len() != net.output_len() {
        return Err(Error::DimensionMismatch {
            what: "target",
            expected: net.output_len(),
            got: target.len(),
        });
    }
    let cache = net.forward_cached(input)?;
    let y = cache.acts.last().unwrap();
    let n = y.len() as f64;
    let mut loss = 0.0;
    let mut seed = vec![0.0; y.len()];
    for o in 0..y.len() {
        let r = y[o] - target[o];
        loss += r * r / n;
        seed[o] = 2.0 * r / n;
    }
    Ok((loss, net.backprop(&cache, &seed)))
}

/// Loss only (no gradient), same definition as [`loss_and_grad`].
pub fn loss(net: &Network, input: &[f64], target: &[f64], _kind: LossKind) -> Result<f64> {
    if target.len() != net.output_len() {
        return Err(Error::DimensionMismatch {
            what: "target",
            expected: net.output_len(),
            got: target.len(),
        });
    }
    let y = net.forward(input)?;
    let n = y.len() as f64;
    Ok(y.iter()
        .zip(target)
        .map(|(&a, &b)| (a - b) * (a - b) / n)
        .sum::<f64>())
}

/// Mean loss gradient over a batch of (input, target) pairs.
pub fn batch_grad(net: &Network, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut acc = vec![0.0; net.param_count()];
    for (x, t) in batch {
        let (_, g) = loss_and_grad(net, x, t, LossKind::Mse)?;
        for (a, b) in acc.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let inv = 1.0 / batch.len() as f64;
    for a in &mut acc {
        *a *= inv;
    }
    Ok(acc)
}

/// Hessian-vector product of an arbitrary objective given its gradient
/// function, by central finite differences of the gradient. Exact (to
/// rounding) on quadratic objectives.
pub fn hvp_of<F>(mut grad_fn: F, theta: &[f64], v: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if vnorm == 0.0 {
        return vec![0.0; theta.len()];
    }
    let tnorm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    let eps = 1e-5 * (1.0 + tnorm) / vnorm;
    let plus: Vec<f64> = theta.iter().zip(v).map(|(&t, &d)| t + eps * d).collect();
    let minus: Vec<f64> = theta.iter().zip(v).map(|(&t, &d)| t - eps * d).collect();
    let gp = grad_fn(&plus);
    let gm = grad_fn(&minus);
    gp.iter()
        .zip(&gm)
        .map(|(&a, &b)| (a - b) / (2.0 * eps))
        .collect()
}

/// H·v for the mean batch loss, without materializing H.
pub fn hvp(net: &Network, batch: &[(Vec<f64>, Vec<f64>)], v: &[f64]) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if v.len() != net.param_count() {
        return Err(Error::DimensionMismatch {
            what: "hvp direction",
            expected: net.param_count(),
            got: v.len(),
        });
    }
    let mut scratch = net.clone();
    Ok(hvp_of(
        |theta| {
            scratch.params.copy_from_slice(theta);
            batch_grad(&scratch, batch).expect("batch checked nonempty")
        },
        &net.params,
        v,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum OptMode {
    /// Plain gradient descent, used by analytic tests.
    Sgd,
    /// Adaptive-moment estimation.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub lr: f64,
    pub mode: OptMode,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl OptimizerState {
    pub fn sgd(lr: f64, p: usize) -> Self {
        OptimizerState {
            lr,
            mode: OptMode::Sgd,
            m: vec![0.0; p],
            v: vec![0.0; p],
            step: 0,
        }
    }

    pub fn adam(lr: f64, p: usize) -> Self {
        OptimizerState {
            lr,
            mode: OptMode::Adam {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            m: vec![0.0; p],
            v: vec![0.0; p],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One in-place parameter update. Refuses non-finite gradients.
pub fn optimizer_step(opt: &mut OptimizerState, net: &mut Network, grad: &[f64]) -> Result<()> {
    if grad.len() != net.param_count() {
        return Err(Error::DimensionMismatch {
            what: "gradient",
            expected: net.param_count(),
            got: grad.len(),
        });
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { index: i });
    }
    opt.step += 1;
    match opt.mode {
        OptMode::Sgd => {
            for (p, &g) in net.params.iter_mut().zip(grad) {
                *p -= opt.lr * g;
            }
        }
        OptMode::Adam { beta1, beta2, eps } => {
            let t = opt.step as i32;
            let bc1 = 1.0 - beta1.powi(t);
            let bc2 = 1.0 - beta2.powi(t);
            for i in 0..grad.len() {
                opt.m[i] = beta1 * opt.m[i] + (1.0 - beta1) * grad[i];
                opt.v[i] = beta2 * opt.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                let mhat = opt.m[i] / bc1;
                let vhat = opt.v[i] / bc2;
                net.params[i] -= opt.lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_net(rng: &mut ChaCha8Rng, sizes: Vec<usize>) -> Network {
        let acts = (0..sizes.len() - 1)
            .map(|l| {
                if l == sizes.len() - 2 {
                    Activation::Identity
                } else {
                    Activation::Tanh
                }
            })
            .collect();
        let mut net = Network::new(sizes, acts).unwrap();
        net.init_uniform(rng);
        // nonzero biases so their gradients are exercised too
        for p in net.params.iter_mut() {
            if *p == 0.0 {
                *p = rng.random_range(-0.3..0.3);
            }
        }
        net
    }

    fn fd_grad(net: &Network, input: &[f64], target: &[f64]) -> Vec<f64> {
        let h = 1e-5;
        let mut g = vec![0.0; net.param_count()];
        let mut scratch = net.clone();
        for i in 0..g.len() {
            scratch.params.copy_from_slice(&net.params);
            scratch.params[i] += h;
            let lp = loss(&scratch, input, target, LossKind::Mse).unwrap();
            scratch.params[i] -= 2.0 * h;
            let lm = loss(&scratch, input, target, LossKind::Mse).unwrap();
            g[i] = (lp - lm) / (2.0 * h);
        }
        g
    }

    #[test]
    fn zero_identity_net_outputs_zero() {
        let net = Network::new(
            vec![2, 3, 2],
            vec![Activation::Identity, Activation::Identity],
        )
        .unwrap();
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_tanh_unit() {
        // alpha=1, omega=1, beta=0: layout [w_hidden, b_hidden, w_out, b_out]
        let mut net =
            Network::new(vec![1, 1, 1], vec![Activation::Tanh, Activation::Identity]).unwrap();
        net.params = vec![1.0, 0.0, 1.0, 0.0];
        assert_eq!(net.forward(&[0.0]).unwrap(), vec![0.0]);

        // alpha=2, omega=1, beta=0, input 1 -> 2 tanh(1)
        net.params = vec![1.0, 0.0, 2.0, 0.0];
        let out = net.forward(&[1.0]).unwrap();
        let expected = 2.0 * 1.0f64.tanh();
        assert!((out[0] - expected).abs() < 1e-12);
        assert!((out[0] - 1.52318).abs() < 1e-4);
    }

    #[test]
    fn forward_dimension_mismatch_names_lengths() {
        let net = Network::new(vec![3, 1], vec![Activation::Identity]).unwrap();
        let err = net.forward(&[1.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('3') && msg.contains('1'), "{msg}");
    }

    #[test]
    fn perfect_reconstruction_zero_loss_zero_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = random_net(&mut rng, vec![3, 4, 3]);
        let x = vec![0.2, -0.1, 0.5];
        let y = net.forward(&x).unwrap();
        let (l, g) = loss_and_grad(&net, &x, &y, LossKind::Mse).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_one_param_hand_gradient() {
        // y = theta * x with theta=0 (weight 0, bias 0 but held at 0):
        // loss (y-t)^2 at x=1, t=1 -> loss 1, dL/dw = 2(y-t)x = -2
        let net = Network::new(vec![1, 1], vec![Activation::Identity]).unwrap();
        let (l, g) = loss_and_grad(&net, &[1.0], &[1.0], LossKind::Mse).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[1], -2.0); // bias gradient: 2(y-t)
    }

    #[test]
    fn gradients_match_finite_differences_over_random_nets() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let net = random_net(&mut rng, vec![3, 5, 2]);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, g) = loss_and_grad(&net, &x, &t, LossKind::Mse).unwrap();
            let fd = fd_grad(&net, &x, &t);
            for (a, b) in g.iter().zip(&fd) {
                let denom = a.abs().max(b.abs()).max(1e-6);
                worst = worst.max((a - b).abs() / denom);
            }
        }
        assert!(worst < 1e-4, "max relative error {worst:e}");
    }

    #[test]
    fn hvp_of_quadratic_is_exact() {
        // loss = theta' A theta / 2 with A = diag(2, 4); grad = A theta
        let grad = |th: &[f64]| vec![2.0 * th[0], 4.0 * th[1]];
        let hv = hvp_of(grad, &[0.3, -0.7], &[1.0, 1.0]);
        assert!((hv[0] - 2.0).abs() < 1e-8);
        assert!((hv[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn hvp_zero_vector_and_empty_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = random_net(&mut rng, vec![2, 3, 2]);
        let batch = vec![(vec![0.1, 0.2], vec![0.0, 0.1])];
        let z = hvp(&net, &batch, &vec![0.0; net.param_count()]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        assert!(matches!(hvp(&net, &[], &[0.0]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn hvp_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = random_net(&mut rng, vec![2, 3, 1]);
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..4)
            .map(|_| {
                (
                    (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    vec![rng.random_range(-1.0..1.0)],
                )
            })
            .collect();
        let p = net.param_count();
        let u: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hu = hvp(&net, &batch, &u).unwrap();
        let hv = hvp(&net, &batch, &v).unwrap();
        let uhv: f64 = u.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let vhu: f64 = v.iter().zip(&hu).map(|(a, b)| a * b).sum();
        assert!((uhv - vhu).abs() < 1e-6, "{uhv} vs {vhu}");
    }

    #[test]
    fn hvp_basis_vectors_reproduce_explicit_hessian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = random_net(&mut rng, vec![1, 3, 1]); // 10 params
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..6)
            .map(|_| {
                (
                    vec![rng.random_range(-1.0..1.0)],
                    vec![rng.random_range(-1.0..1.0)],
                )
            })
            .collect();
        let p = net.param_count();
        assert!(p <= 20);

        // explicit Hessian by finite differences of the loss itself
        let h = 1e-4;
        let mean_loss = |theta: &[f64]| {
            let mut scratch = net.clone();
            scratch.params.copy_from_slice(theta);
            batch
                .iter()
                .map(|(x, t)| loss(&scratch, x, t, LossKind::Mse).unwrap())
                .sum::<f64>()
                / batch.len() as f64
        };
        let mut dense = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                let mut th = net.params.clone();
                th[i] += h;
                th[j] += h;
                let lpp = mean_loss(&th);
                th[j] -= 2.0 * h;
                let lpm = mean_loss(&th);
                th[i] -= 2.0 * h;
                let lmm = mean_loss(&th);
                th[j] += 2.0 * h;
                let lmp = mean_loss(&th);
                dense[i][j] = (lpp - lpm - lmp + lmm) / (4.0 * h * h);
            }
        }

        for j in 0..p {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            let col = hvp(&net, &batch, &e).unwrap();
            for i in 0..p {
                let denom = dense[i][j].abs().max(1e-3);
                assert!(
                    (col[i] - dense[i][j]).abs() / denom < 1e-3,
                    "H[{i}][{j}]: hvp {} vs dense {}",
                    col[i],
                    dense[i][j]
                );
            }
        }
    }

    #[test]
    fn plain_descent_update() {
        let mut net = Network::new(vec![1, 1], vec![Activation::Identity]).unwrap();
        net.params = vec![1.0, 0.0];
        let mut opt = OptimizerState::sgd(0.1, 2);
        optimizer_step(&mut opt, &mut net, &[2.0, 0.0]).unwrap();
        assert!((net.params[0] - 0.8).abs() < 1e-15);

        let before = net.params.clone();
        optimizer_step(&mut opt, &mut net, &[0.0, 0.0]).unwrap();
        assert_eq!(net.params, before);
    }

    #[test]
    fn non_finite_gradient_refused() {
        let mut net = Network::new(vec![1, 1], vec![Activation::Identity]).unwrap();
        let mut opt = OptimizerState::adam(1e-3, 2);
        let err = optimizer_step(&mut opt, &mut net, &[f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { index: 0 }));
    }

    #[test]
    fn descent_on_convex_quadratic_decreases_loss() {
        // loss = (theta - 3)^2 via y = theta (bias frozen at 0 by zero grad)
        let mut net = Network::new(vec![1, 1], vec![Activation::Identity]).unwrap();
        net.params = vec![10.0, 0.0];
        let mut opt = OptimizerState::sgd(0.05, 2);
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            let (l, g) = loss_and_grad(&net, &[1.0], &[3.0], LossKind::Mse).unwrap();
            assert!(l < prev, "loss not strictly decreasing: {l} after {prev}");
            prev = l;
            optimizer_step(&mut opt, &mut net, &g).unwrap();
        }
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let mut a =
            Network::new(vec![4, 8, 4], vec![Activation::Tanh, Activation::Identity]).unwrap();
        let mut b = a.clone();
        a.init_uniform(&mut ChaCha8Rng::seed_from_u64(5));
        b.init_uniform(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.params, b.params);
    }
}
