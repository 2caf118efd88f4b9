//! Shared pieces for the gradient-trained models: activations, initialization,
//! the mini-batch gradient descent loop and the flat-parameter interface used
//! by gradient checks.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{rng_for, Rng};

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit: `softplus(z) - y z`.
#[inline]
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    softplus - y * z
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot(rng: &mut Rng, n: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

/// A model whose training objective is differentiable in a flat parameter vector.
pub trait Differentiable {
    fn parameters(&self) -> Vec<f64>;

    fn set_parameters(&mut self, params: &[f64]);

    /// Mean training objective over `ds` and its gradient.
    fn objective_and_gradient(&self, ds: &Dataset) -> (f64, Vec<f64>);
}

/// Per-sample loss with gradient accumulation over a flat parameter vector.
pub(crate) trait SampleLoss: Sync {
    fn n_params(&self) -> usize;

    /// Adds the gradient of this sample's loss to `grad` and returns the loss.
    fn sample_loss_grad(&self, params: &[f64], x: &[f64], y: u8, grad: &mut [f64]) -> f64;

    /// Adds the regularizer gradient to `grad` and returns its value.
    fn regularize(&self, _params: &[f64], _grad: &mut [f64]) -> f64 {
        0.0
    }
}

/// Mean loss and gradient over the rows at `idx`, plus the regularizer.
pub(crate) fn batch_objective<L: SampleLoss>(loss: &L, params: &[f64], ds: &Dataset, idx: &[usize]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; loss.n_params()];
    let mut total = 0.0;
    for &i in idx {
        total += loss.sample_loss_grad(params, ds.row(i), ds.label(i), &mut grad);
    }
    let scale = 1.0 / idx.len().max(1) as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    let reg = loss.regularize(params, &mut grad);
    (total * scale + reg, grad)
}

pub(crate) fn full_objective<L: SampleLoss>(loss: &L, params: &[f64], ds: &Dataset) -> (f64, Vec<f64>) {
    let idx: Vec<usize> = (0..ds.n_rows()).collect();
    batch_objective(loss, params, ds, &idx)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SgdSettings {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

/// Plain mini-batch gradient descent with a reshuffle every epoch.
/// Returns the mean training objective seen during each epoch.
pub(crate) fn minibatch_descent<L: SampleLoss>(
    loss: &L,
    params: &mut [f64],
    ds: &Dataset,
    settings: SgdSettings,
) -> Result<Vec<f64>> {
    let mut rng = rng_for(settings.seed, "minibatch_order", 0);
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    let batch = settings.batch_size.max(1);
    let mut history = Vec::with_capacity(settings.epochs);
    for epoch in 0..settings.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let (l, g) = batch_objective(loss, params, ds, chunk);
            if !l.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += l * chunk.len() as f64;
            for (p, gi) in params.iter_mut().zip(&g) {
                *p -= settings.lr * gi;
            }
        }
        history.push(epoch_loss / ds.n_rows() as f64);
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Divergence { epoch: settings.epochs });
    }
    Ok(history)
}
