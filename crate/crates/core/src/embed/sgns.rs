//! Skip-gram with negative sampling: loss and the in-place update step.
//!
//! For a target vector `u`, a positive context `v⁺` and negatives `v⁻ᵢ`:
//!
//! ```text
//! L = -log σ(u·v⁺) - Σᵢ log σ(-u·v⁻ᵢ)
//! ```
//!
//! [`sgns_update`] applies one gradient-descent step on `L` with learning
//! rate `lr`. Context rows are only written when the context matrix is
//! [`Context::Trainable`].

use num_traits::Float;

pub fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Eight independent accumulators so the loop vectorizes.
fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail = ca.remainder().iter().zip(cb.remainder()).fold(F::zero(), |acc, (&x, &y)| acc + x * y);
    let mut acc = [F::zero(); 8];
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] = acc[i] + x[i] * y[i];
        }
    }
    acc.iter().fold(tail, |s, &x| s + x)
}

/// Row-major context matrix, either frozen or trainable.
pub enum Context<'a, F> {
    Frozen(&'a [F]),
    Trainable(&'a mut [F]),
}

impl<F: Float> Context<'_, F> {
    fn row(&self, i: usize, dim: usize) -> &[F] {
        match self {
            Context::Frozen(m) => &m[i * dim..(i + 1) * dim],
            Context::Trainable(m) => &m[i * dim..(i + 1) * dim],
        }
    }
}

/// Negative-sampling loss for one (target, positive, negatives) example.
pub fn sgns_loss<F: Float>(target: &[F], positive: &[F], negatives: &[&[F]]) -> F {
    let pos = -sigmoid(dot(target, positive)).ln();
    negatives
        .iter()
        .fold(pos, |acc, n| acc - sigmoid(-dot(target, n)).ln())
}

/// One SGD step. `samples` lists context rows with label 1 (positive) or
/// 0 (negative); `scratch` must have length `dim`.
pub fn sgns_update<F: Float>(
    target: &mut [F],
    context: &mut Context<'_, F>,
    samples: &[(usize, bool)],
    lr: F,
    scratch: &mut [F],
) {
    let dim = target.len();
    scratch.iter_mut().for_each(|s| *s = F::zero());
    for &(row, positive) in samples {
        let label = if positive { F::one() } else { F::zero() };
        let v = context.row(row, dim);
        let g = (label - sigmoid(dot(target, v))) * lr;
        for (s, &x) in scratch.iter_mut().zip(v) {
            *s = *s + g * x;
        }
        if let Context::Trainable(m) = context {
            for (c, &t) in m[row * dim..(row + 1) * dim].iter_mut().zip(target.iter()) {
                *c = *c + g * t;
            }
        }
    }
    for (t, &s) in target.iter_mut().zip(scratch.iter()) {
        *t = *t + s;
    }
}
