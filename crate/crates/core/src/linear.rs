//! Linear structured scorer: `F(x, y) = ⟨θ, Ψ(x, y)⟩`, exact Viterbi and
//! loss-augmented decoding, max-margin subgradient training, and beam
//! lattices.
//!
//! The score decomposes into per-frame emissions `⟨θ_obs[k], x_j⟩` and
//! pairwise transitions `θ_trans[a + b·K]`, which is what makes exact
//! dynamic programming possible.

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{psi_first_order, psi_len};
use crate::lattice::{Lattice, LatticeArc};
use crate::metrics::{delta, DistanceKind};
use crate::par;
use crate::sequence::{AcousticSequence, LabelSequence, Utterance};

/// Weight vector laid out like the first-order Ψ: observation block, then
/// transition block.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearParams {
    pub dim: usize,
    pub size: usize,
    pub theta: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(dim: usize, size: usize) -> Self {
        Self {
            dim,
            size,
            theta: vec![0.0; psi_len(dim, size)],
        }
    }

    pub fn new(dim: usize, size: usize, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != psi_len(dim, size) {
            return Err(Error::Shape(format!(
                "theta has {} entries, expected {} for D={dim}, K={size}",
                theta.len(),
                psi_len(dim, size)
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite weight".into()));
        }
        Ok(Self { dim, size, theta })
    }

    pub fn observation(&self, label: usize) -> &[f64] {
        &self.theta[label * self.dim..(label + 1) * self.dim]
    }

    /// Weight of the transition `from -> to`.
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.theta[self.dim * self.size + from + to * self.size]
    }

    fn check_input(&self, x: &AcousticSequence) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::Shape(format!(
                "frame width {} does not match model width {}",
                x.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Row-major `M × K` emission scores.
    pub fn emissions(&self, x: &AcousticSequence) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = Vec::with_capacity(x.len() * self.size);
        for frame in x.frames() {
            for k in 0..self.size {
                out.push(dot(self.observation(k), frame));
            }
        }
        Ok(out)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug)]
pub struct LinearTrainConfig {
    /// Weight `C` of the summed hinge losses against `‖θ‖²`.
    pub cost_c: f64,
    pub epochs: usize,
    /// Base step size; epoch `t` uses `learning_rate / sqrt(1 + t)`.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LinearTrainConfig {
    fn default() -> Self {
        Self {
            cost_c: 1.0,
            epochs: 20,
            learning_rate: 0.01,
            batch_size: 8,
            seed: 0,
        }
    }
}

/// ⟨θ, Ψ(x, y)⟩.
pub fn score_linear(x: &AcousticSequence, y: &[usize], params: &LinearParams) -> Result<f64> {
    params.check_input(x)?;
    let psi = psi_first_order(x, y, params.size)?;
    Ok(dot(&params.theta, &psi.values))
}

/// Exact argmax over label sequences of `Σ_j e_j(y_j) + Σ_j t(y_j, y_{j+1})`
/// with `bonus(j, k)` added to the emission of label `k` at frame `j`.
///
/// Scores are computed backwards so that the forward read-out can pick the
/// smallest label among ties at every frame, which yields the
/// lexicographically smallest optimal sequence.
fn decode_with_bonus<F>(params: &LinearParams, x: &AcousticSequence, bonus: F) -> Result<(LabelSequence, f64)>
where
    F: Fn(usize, usize) -> f64,
{
    let k = params.size;
    let m = x.len();
    let mut emit = params.emissions(x)?;
    for j in 0..m {
        for label in 0..k {
            emit[j * k + label] += bonus(j, label);
        }
    }
    // suffix[j*k + a]: best score of frames j.. given y_j = a
    let mut suffix = vec![0.0; m * k];
    suffix[(m - 1) * k..].copy_from_slice(&emit[(m - 1) * k..]);
    for j in (0..m - 1).rev() {
        for a in 0..k {
            let best = (0..k)
                .map(|b| params.transition(a, b) + suffix[(j + 1) * k + b])
                .fold(f64::NEG_INFINITY, f64::max);
            suffix[j * k + a] = emit[j * k + a] + best;
        }
    }
    let argmax_first = |scores: &mut dyn Iterator<Item = f64>| {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, s) in scores.enumerate() {
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    };
    let (first, total) = argmax_first(&mut suffix[..k].iter().copied());
    let mut labels = Vec::with_capacity(m);
    labels.push(first);
    for j in 1..m {
        let prev = labels[j - 1];
        let (next, _) = argmax_first(&mut (0..k).map(|b| params.transition(prev, b) + suffix[j * k + b]));
        labels.push(next);
    }
    Ok((labels.into(), total))
}

/// Exact best label sequence under the linear score.
pub fn viterbi_decode(x: &AcousticSequence, params: &LinearParams) -> Result<LabelSequence> {
    decode_with_bonus(params, x, |_, _| 0.0).map(|(y, _)| y)
}

/// Argmax of score plus frame-error distance to `y_ref`: every label that
/// disagrees with the reference earns `1/M`.
pub fn loss_augmented_decode(
    x: &AcousticSequence,
    y_ref: &[usize],
    params: &LinearParams,
) -> Result<LabelSequence> {
    loss_augmented_with_value(x, y_ref, params).map(|(y, _)| y)
}

fn loss_augmented_with_value(
    x: &AcousticSequence,
    y_ref: &[usize],
    params: &LinearParams,
) -> Result<(LabelSequence, f64)> {
    if y_ref.len() != x.len() {
        return Err(Error::Pairing {
            expected: x.len(),
            found: y_ref.len(),
        });
    }
    LabelSequence::checked(y_ref.to_vec(), params.size)?;
    let m = x.len() as f64;
    decode_with_bonus(params, x, |j, k| if k != y_ref[j] { 1.0 / m } else { 0.0 })
}

/// Structured hinge loss `max_y [F(x,y) + Δ_frame(y_ref,y)] - F(x,y_ref)`
/// and its most-violating sequence.
pub fn hinge_loss(utt: &Utterance, params: &LinearParams) -> Result<(f64, LabelSequence)> {
    let (y_hat, _) = loss_augmented_with_value(&utt.x, &utt.y_ref, params)?;
    if y_hat == utt.y_ref {
        return Ok((0.0, y_hat));
    }
    let violation = score_linear(&utt.x, &y_hat, params)?
        + delta(&utt.y_ref, &y_hat, DistanceKind::FrameError)?
        - score_linear(&utt.x, &utt.y_ref, params)?;
    Ok((violation.max(0.0), y_hat))
}

/// `‖θ‖² + C Σ_i L_i(θ)` over a corpus.
pub fn objective(corpus: &[Utterance], params: &LinearParams, cost_c: f64) -> Result<f64> {
    let losses = par::map_collect(corpus, |u| hinge_loss(u, params).map(|(l, _)| l));
    let total: f64 = losses.into_iter().collect::<Result<Vec<_>>>()?.iter().sum();
    Ok(dot(&params.theta, &params.theta) + cost_c * total)
}

#[derive(Clone, Debug)]
pub struct LinearTrainReport {
    pub params: LinearParams,
    /// Training objective after each epoch, preceded by the initial value.
    pub objective: Vec<f64>,
}

/// Stochastic subgradient descent on `‖θ‖² + C Σ_i L_i(θ)` for an alphabet
/// of `size` labels, starting from zero weights.
pub fn train_linear(corpus: &[Utterance], size: usize, config: &LinearTrainConfig) -> Result<LinearTrainReport> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::Config("empty training corpus".into()))?;
    train_linear_from(corpus, LinearParams::zeros(first.x.dim(), size), config)
}

pub fn train_linear_from(
    corpus: &[Utterance],
    mut params: LinearParams,
    config: &LinearTrainConfig,
) -> Result<LinearTrainReport> {
    if corpus.is_empty() {
        return Err(Error::Config("empty training corpus".into()));
    }
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(Error::Config("epochs and batch size must be >= 1".into()));
    }
    if !(config.cost_c > 0.0) || !(config.learning_rate >= 0.0) {
        return Err(Error::Config("cost must be > 0 and learning rate >= 0".into()));
    }
    for u in corpus {
        params.check_input(&u.x)?;
        u.y_ref.validate(params.size)?;
    }
    let n = corpus.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut history = vec![objective(corpus, &params, config.cost_c)?];
    for epoch in 0..config.epochs {
        let lr = config.learning_rate / ((1 + epoch) as f64).sqrt();
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let current = &params;
            let grads = par::map_collect(batch, |&i| hinge_subgradient(&corpus[i], current));
            let mut step = vec![0.0; params.theta.len()];
            for g in grads {
                if let Some(g) = g? {
                    for (s, v) in step.iter_mut().zip(g) {
                        *s += config.cost_c * v;
                    }
                }
            }
            // regularizer share of this batch: (|B| / N) * 2θ
            let reg = 2.0 * batch.len() as f64 / n;
            for (t, s) in params.theta.iter_mut().zip(&step) {
                *t -= lr * (s + reg * *t);
            }
        }
        let obj = objective(corpus, &params, config.cost_c)?;
        debug!("linear epoch {} objective {obj:.6} lr {lr:.3e}", epoch + 1);
        history.push(obj);
    }
    Ok(LinearTrainReport {
        params,
        objective: history,
    })
}

/// `Ψ(x, ŷ) - Ψ(x, y_ref)` when the hinge is active, otherwise `None`.
fn hinge_subgradient(utt: &Utterance, params: &LinearParams) -> Result<Option<Vec<f64>>> {
    let (loss, y_hat) = hinge_loss(utt, params)?;
    if loss <= 0.0 {
        return Ok(None);
    }
    let hat = psi_first_order(&utt.x, &y_hat, params.size)?;
    let reference = psi_first_order(&utt.x, &utt.y_ref, params.size)?;
    Ok(Some(
        hat.values.iter().zip(&reference.values).map(|(a, b)| a - b).collect(),
    ))
}

/// Frame-synchronous beam search that keeps the `beam_width` best labels per
/// frame and emits every arc between surviving labels of adjacent frames.
///
/// Arc scores are the linear model's emission plus transition terms, so a
/// path's score equals its linear score. Node `1 + (j-1)·B + r` at level `j`
/// stands for the `r`-th surviving label of frame `j - 1`.
pub fn beam_lattice(x: &AcousticSequence, params: &LinearParams, beam_width: usize) -> Result<Lattice> {
    if beam_width == 0 {
        return Err(Error::Config("beam width must be >= 1".into()));
    }
    let k = params.size;
    let m = x.len();
    let emit = params.emissions(x)?;
    let width = beam_width.min(k);

    let select = |scores: &[f64]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        idx.truncate(width);
        idx.sort_unstable();
        idx
    };

    let mut kept = Vec::with_capacity(m);
    let mut forward: Vec<f64> = emit[..k].to_vec();
    kept.push(select(&forward));
    for j in 1..m {
        let prev = &kept[j - 1];
        let scores: Vec<f64> = (0..k)
            .map(|b| {
                prev.iter()
                    .map(|&a| forward[a] + params.transition(a, b))
                    .fold(f64::NEG_INFINITY, f64::max)
                    + emit[j * k + b]
            })
            .collect();
        forward = scores;
        kept.push(select(&forward));
    }

    let end = 1 + (m - 1) * width;
    let node = |level: usize, rank: usize| -> usize {
        if level == 0 {
            0
        } else if level == m {
            end
        } else {
            1 + (level - 1) * width + rank
        }
    };
    let mut arcs = Vec::new();
    for (r, &label) in kept[0].iter().enumerate() {
        arcs.push(LatticeArc {
            frame: 0,
            src: 0,
            dst: node(1, r),
            label,
            score: emit[label],
        });
    }
    for j in 1..m {
        for (rp, &a) in kept[j - 1].iter().enumerate() {
            for (r, &b) in kept[j].iter().enumerate() {
                arcs.push(LatticeArc {
                    frame: j,
                    src: node(j, rp),
                    dst: node(j + 1, r),
                    label: b,
                    score: params.transition(a, b) + emit[j * k + b],
                });
            }
        }
    }
    Lattice::new(k, m, arcs)
}
