//! The joint feature map Ψ(x, y).
//!
//! The first-order map concatenates two accumulators:
//!
//! * an observation half of width `D·K`, where frame `j`'s vector is added
//!   into the block `[y_j·D, (y_j+1)·D)`;
//! * a transition half of width `K²`, where each adjacent pair
//!   `(y_j, y_{j+1})` increments slot `y_j + y_{j+1}·K`.
//!
//! The second-order map keys observations on label bigrams and transitions
//! on label trigrams, with the same "first index varies fastest" layout.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::sequence::{AcousticSequence, LabelSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// Dense Ψ vector plus the `(D, K)` layout it was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredFeature {
    pub values: Vec<f64>,
    pub order: Order,
    pub dim: usize,
    pub size: usize,
}

impl StructuredFeature {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn split_point(&self) -> usize {
        match self.order {
            Order::First => self.dim * self.size,
            Order::Second => self.dim * self.size * self.size,
        }
    }

    /// Observation (x-dependent) half.
    pub fn observation(&self) -> &[f64] {
        &self.values[..self.split_point()]
    }

    /// Transition-count half.
    pub fn transitions(&self) -> &[f64] {
        &self.values[self.split_point()..]
    }
}

/// Length of the first-order Ψ for frame width `dim` and alphabet `size`.
pub fn psi_len(dim: usize, size: usize) -> usize {
    dim * size + size * size
}

pub fn psi_second_order_len(dim: usize, size: usize) -> usize {
    dim * size * size + size * size * size
}

fn check_pair(x: &AcousticSequence, y: &[usize], size: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Pairing {
            expected: x.len(),
            found: y.len(),
        });
    }
    LabelSequence::checked(y.to_vec(), size).map(|_| ())
}

/// First-order Ψ(x, y).
pub fn psi_first_order(x: &AcousticSequence, y: &[usize], size: usize) -> Result<StructuredFeature> {
    check_pair(x, y, size)?;
    let mut values = vec![0.0; psi_len(x.dim(), size)];
    accumulate_first_order(x.as_slice(), x.dim(), y, size, &mut values);
    Ok(StructuredFeature {
        values,
        order: Order::First,
        dim: x.dim(),
        size,
    })
}

/// Unchecked accumulation into a zeroed buffer; `frames` is row-major with
/// width `dim` and the caller has validated every label.
pub(crate) fn accumulate_first_order(
    frames: &[f64],
    dim: usize,
    y: &[usize],
    size: usize,
    out: &mut [f64],
) {
    let (obs, trans) = out.split_at_mut(dim * size);
    for (frame, &label) in frames.chunks_exact(dim).zip(y) {
        let block = &mut obs[label * dim..(label + 1) * dim];
        for (acc, v) in block.iter_mut().zip(frame) {
            *acc += v;
        }
    }
    for pair in y.windows(2) {
        trans[pair[0] + pair[1] * size] += 1.0;
    }
}

/// Second-order Ψ(x, y): observations keyed on `(y_j, y_{j+1})` for
/// `j < M-1`, transitions counted over label trigrams.
pub fn psi_second_order(x: &AcousticSequence, y: &[usize], size: usize) -> Result<StructuredFeature> {
    check_pair(x, y, size)?;
    let dim = x.dim();
    let mut values = vec![0.0; psi_second_order_len(dim, size)];
    let (obs, trans) = values.split_at_mut(dim * size * size);
    for j in 0..y.len().saturating_sub(1) {
        let offset = (y[j] + y[j + 1] * size) * dim;
        for (acc, v) in obs[offset..offset + dim].iter_mut().zip(x.frame(j)) {
            *acc += v;
        }
    }
    for tri in y.windows(3) {
        trans[tri[0] + tri[1] * size + tri[2] * size * size] += 1.0;
    }
    Ok(StructuredFeature {
        values,
        order: Order::Second,
        dim,
        size,
    })
}

/// For each frame, the block of Ψ's observation half its vector lands in.
///
/// Ψ is linear in x, so `∂Ψ/∂x_j` is the identity on that block and zero
/// elsewhere. Under the second-order map the final frame contributes to no
/// block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiGradientWrtX {
    pub dim: usize,
    pub blocks: Vec<Option<Range<usize>>>,
}

impl PsiGradientWrtX {
    /// Pulls an upstream gradient over Ψ back to a row-major `M × D`
    /// gradient over the acoustic frames.
    pub fn backpropagate(&self, grad_psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.blocks.len() * self.dim];
        for (frame_grad, block) in out.chunks_exact_mut(self.dim).zip(&self.blocks) {
            if let Some(range) = block {
                frame_grad.copy_from_slice(&grad_psi[range.clone()]);
            }
        }
        out
    }
}

pub fn psi_gradient_blocks(y: &[usize], size: usize, dim: usize, order: Order) -> Result<PsiGradientWrtX> {
    LabelSequence::checked(y.to_vec(), size)?;
    let blocks = match order {
        Order::First => y.iter().map(|&l| Some(l * dim..(l + 1) * dim)).collect(),
        Order::Second => (0..y.len())
            .map(|j| {
                (j + 1 < y.len()).then(|| {
                    let start = (y[j] + y[j + 1] * size) * dim;
                    start..start + dim
                })
            })
            .collect(),
    };
    Ok(PsiGradientWrtX { dim, blocks })
}
