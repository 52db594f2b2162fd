//! Full-scale structured DNN: a frame-wise front-end network produces
//! posteriorgrams, Ψ turns them into an utterance-level feature, and the
//! structured scorer rates it. Gradients run from the score back through Ψ's
//! block routing, the softmax and the front end, so both networks train
//! jointly.

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{psi_first_order, psi_gradient_blocks, Order, PsiGradientWrtX};
use crate::lattice::Lattice;
use crate::metrics::corpus_per;
use crate::neural::{
    backward_from_logits, forward_logits, mlp_backward_with, mlp_forward, sgd_momentum_step, ForwardTrace,
    LearningRate, MlpParams, SgdConfig, SigmoidDerivative,
};
use crate::par;
use crate::sdnn::{
    build_examples, check_scorer_input, example_loss, rescore_decode, utterance_rng, DevSet, EpochLog, SdnnTrainConfig,
};
use crate::sequence::{AcousticSequence, LabelSequence, Utterance};

/// Front-end and scorer weights. The front end's last layer has `K` outputs
/// passed through a softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct FsdnnParams {
    pub frontend: MlpParams,
    pub scorer: MlpParams,
}

impl FsdnnParams {
    pub fn new(frontend: MlpParams, scorer: MlpParams) -> Result<Self> {
        let k = frontend.output_size();
        check_scorer_input(&scorer, k, k)?;
        Ok(Self { frontend, scorer })
    }

    /// Alphabet size `K`, which is also the posteriorgram width.
    pub fn size(&self) -> usize {
        self.frontend.output_size()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Frame-wise posteriorgrams plus per-frame traces.
pub fn frontend_forward_traced(x_raw: &AcousticSequence, frontend: &MlpParams) -> Result<(AcousticSequence, Vec<ForwardTrace>)> {
    if x_raw.dim() != frontend.input_size() {
        return Err(Error::Shape(format!(
            "raw frame width {} does not match front-end input {}",
            x_raw.dim(),
            frontend.input_size()
        )));
    }
    let mut traces = Vec::with_capacity(x_raw.len());
    let mut data = Vec::with_capacity(x_raw.len() * frontend.output_size());
    for frame in x_raw.frames() {
        let trace = forward_logits(frame, frontend)?;
        data.extend(softmax(&trace.logits));
        traces.push(trace);
    }
    Ok((AcousticSequence::new(frontend.output_size(), data)?, traces))
}

pub fn frontend_forward(x_raw: &AcousticSequence, frontend: &MlpParams) -> Result<AcousticSequence> {
    frontend_forward_traced(x_raw, frontend).map(|(p, _)| p)
}

/// Replaces every utterance's features with front-end posteriorgrams.
pub fn posteriorgram_corpus(corpus: &[Utterance], frontend: &MlpParams) -> Result<Vec<Utterance>> {
    par::map_collect(corpus, |u| {
        Utterance::new(frontend_forward(&u.x, frontend)?, u.y_ref.clone())
    })
    .into_iter()
    .collect()
}

/// Front-end activations for one utterance.
#[derive(Clone, Debug)]
pub struct FrontendPass {
    pub frames: Vec<ForwardTrace>,
    pub posteriors: AcousticSequence,
}

impl FrontendPass {
    pub fn run(x_raw: &AcousticSequence, frontend: &MlpParams) -> Result<Self> {
        let (posteriors, frames) = frontend_forward_traced(x_raw, frontend)?;
        Ok(Self { frames, posteriors })
    }

    /// Front-end weight gradient given the gradient over the posteriorgram
    /// (row-major, one row of `K` per frame).
    pub fn backward(&self, frontend: &MlpParams, d_post: &[f64], derivative: SigmoidDerivative) -> Result<MlpParams> {
        let k = frontend.output_size();
        if d_post.len() != self.frames.len() * k {
            return Err(Error::Shape(format!(
                "posteriorgram gradient has {} values, expected {}",
                d_post.len(),
                self.frames.len() * k
            )));
        }
        let mut grads = frontend.zeros_like();
        for (j, frame) in self.frames.iter().enumerate() {
            let p = self.posteriors.frame(j);
            let g = &d_post[j * k..(j + 1) * k];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            // softmax Jacobian: dz_i = p_i (g_i - Σ_k g_k p_k)
            let mean: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
            let dz: Vec<f64> = g.iter().zip(p).map(|(gi, pi)| pi * (gi - mean)).collect();
            grads.add_scaled(&backward_from_logits(frame, frontend, &dz, derivative)?.weights, 1.0);
        }
        Ok(grads)
    }
}

/// Scorer activations for one label sequence over a shared front-end pass.
#[derive(Clone, Debug)]
pub struct ScorerPass {
    pub trace: ForwardTrace,
    pub blocks: PsiGradientWrtX,
    pub score: f64,
}

impl ScorerPass {
    pub fn run(front: &FrontendPass, y: &[usize], scorer: &MlpParams) -> Result<Self> {
        let k = front.posteriors.dim();
        let psi = psi_first_order(&front.posteriors, y, k)?;
        let (score, trace) = mlp_forward(&psi.values, scorer)?;
        let blocks = psi_gradient_blocks(y, k, k, Order::First)?;
        Ok(Self { trace, blocks, score })
    }
}

#[derive(Clone, Debug)]
pub struct FsdnnTrace {
    pub front: FrontendPass,
    pub scorer: ScorerPass,
}

impl FsdnnTrace {
    pub fn score(&self) -> f64 {
        self.scorer.score
    }
}

pub fn fsdnn_forward(x_raw: &AcousticSequence, y: &[usize], params: &FsdnnParams) -> Result<(f64, FsdnnTrace)> {
    let front = FrontendPass::run(x_raw, &params.frontend)?;
    let scorer = ScorerPass::run(&front, y, &params.scorer)?;
    Ok((scorer.score, FsdnnTrace { front, scorer }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FsdnnGradients {
    pub frontend: MlpParams,
    pub scorer: MlpParams,
}

impl FsdnnGradients {
    fn zeros_like(params: &FsdnnParams) -> Self {
        Self {
            frontend: params.frontend.zeros_like(),
            scorer: params.scorer.zeros_like(),
        }
    }

    fn add(&mut self, other: &FsdnnGradients) {
        self.frontend.add_scaled(&other.frontend, 1.0);
        self.scorer.add_scaled(&other.scorer, 1.0);
    }
}

/// Gradient of `upstream · score` for both networks.
pub fn fsdnn_backward(trace: &FsdnnTrace, params: &FsdnnParams, upstream: f64) -> Result<FsdnnGradients> {
    fsdnn_backward_with(trace, params, upstream, SigmoidDerivative::Exact)
}

pub fn fsdnn_backward_with(
    trace: &FsdnnTrace,
    params: &FsdnnParams,
    upstream: f64,
    derivative: SigmoidDerivative,
) -> Result<FsdnnGradients> {
    backward_many(&trace.front, &[(&trace.scorer, upstream)], params, derivative)
}

/// Backward pass for several sequences sharing one front-end pass: the
/// posteriorgram gradients are summed before the front end is visited.
fn backward_many(
    front: &FrontendPass,
    sequences: &[(&ScorerPass, f64)],
    params: &FsdnnParams,
    derivative: SigmoidDerivative,
) -> Result<FsdnnGradients> {
    let mut scorer = params.scorer.zeros_like();
    let mut d_post = vec![0.0; front.posteriors.as_slice().len()];
    for &(pass, upstream) in sequences {
        if upstream == 0.0 {
            continue;
        }
        if pass.blocks.blocks.len() != front.frames.len() {
            return Err(Error::Shape("scorer pass does not match its utterance".into()));
        }
        let g = mlp_backward_with(&pass.trace, &params.scorer, upstream, derivative)?;
        scorer.add_scaled(&g.weights, 1.0);
        for (acc, v) in d_post.iter_mut().zip(pass.blocks.backpropagate(&g.input)) {
            *acc += v;
        }
    }
    let frontend = front.backward(&params.frontend, &d_post, derivative)?;
    Ok(FsdnnGradients { frontend, scorer })
}

#[derive(Clone, Debug)]
pub struct FsdnnTrainConfig {
    pub sdnn: SdnnTrainConfig,
    /// Optimizer settings for the front end; the scorer uses `sdnn.sgd`.
    pub frontend_sgd: SgdConfig,
}

#[derive(Clone, Debug)]
pub struct FsdnnEpochLog {
    pub structured: EpochLog,
    /// Mean frame cross-entropy of the front end on the training set.
    pub frame_cross_entropy: f64,
}

#[derive(Clone, Debug)]
pub struct FsdnnTrainReport {
    pub params: FsdnnParams,
    pub log: Vec<FsdnnEpochLog>,
}

/// Loss and gradients of one utterance's example set for both networks.
fn utterance_gradient(
    utt: &Utterance,
    lattice: &Lattice,
    params: &FsdnnParams,
    config: &SdnnTrainConfig,
    epoch: usize,
    index: usize,
) -> Result<(f64, FsdnnGradients)> {
    let mut rng = utterance_rng(config.seed, epoch, index);
    let set = build_examples(utt, lattice, config.n_negative, &mut rng)?;
    let front = FrontendPass::run(&utt.x, &params.frontend)?;
    let passes = std::iter::once(&set.positive)
        .chain(set.negatives.iter().map(|n| &n.labels))
        .map(|labels| ScorerPass::run(&front, labels, &params.scorer))
        .collect::<Result<Vec<_>>>()?;
    let negs: Vec<(f64, f64)> = passes[1..]
        .iter()
        .zip(&set.negatives)
        .map(|(p, n)| (p.score, n.delta))
        .collect();
    let (loss, d_scores) = example_loss(config.loss, passes[0].score, &negs);
    let weighted: Vec<(&ScorerPass, f64)> = passes.iter().zip(d_scores).collect();
    let grads = backward_many(&front, &weighted, params, SigmoidDerivative::Exact)?;
    Ok((loss, grads))
}

/// Joint training of front end and scorer.
pub fn train_fsdnn(
    raw_corpus: &[Utterance],
    lattices: &[Lattice],
    params: FsdnnParams,
    config: &FsdnnTrainConfig,
    dev: Option<DevSet<'_>>,
) -> Result<FsdnnTrainReport> {
    train_fsdnn_resume(raw_corpus, lattices, params, config, dev, 0)
}

/// As [`train_fsdnn`], numbering epochs after `epochs_done` previous ones.
pub fn train_fsdnn_resume(
    raw_corpus: &[Utterance],
    lattices: &[Lattice],
    mut params: FsdnnParams,
    config: &FsdnnTrainConfig,
    dev: Option<DevSet<'_>>,
    epochs_done: usize,
) -> Result<FsdnnTrainReport> {
    config.sdnn.validate()?;
    config.frontend_sgd.validate()?;
    if raw_corpus.len() != lattices.len() {
        return Err(Error::Pairing {
            expected: raw_corpus.len(),
            found: lattices.len(),
        });
    }
    let mut scorer_velocity = params.scorer.zeros_like();
    let mut frontend_velocity = params.frontend.zeros_like();
    let mut scorer_lr = LearningRate::new(&config.sdnn.sgd);
    let mut frontend_lr = LearningRate::new(&config.frontend_sgd);
    let order: Vec<usize> = (0..raw_corpus.len()).collect();
    let mut log = Vec::with_capacity(config.sdnn.epochs);
    for e in 0..config.sdnn.epochs {
        let epoch = epochs_done + e;
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.sdnn.batch_size) {
            let current = &params;
            let results = par::map_collect(batch, |&i| {
                utterance_gradient(&raw_corpus[i], &lattices[i], current, &config.sdnn, epoch, i)
            });
            let mut grads = FsdnnGradients::zeros_like(&params);
            for r in results {
                let (loss, g) = r?;
                epoch_loss += loss;
                grads.add(&g);
            }
            sgd_momentum_step(
                &mut params.scorer,
                &grads.scorer,
                &mut scorer_velocity,
                scorer_lr.current,
                &config.sdnn.sgd,
            )?;
            sgd_momentum_step(
                &mut params.frontend,
                &grads.frontend,
                &mut frontend_velocity,
                frontend_lr.current,
                &config.frontend_sgd,
            )?;
        }
        let used_lr = scorer_lr.current;
        scorer_lr.end_epoch(epoch_loss);
        frontend_lr.end_epoch(epoch_loss);
        let dev_per = dev
            .map(|d| fsdnn_corpus_per(d.corpus, d.lattices, &params, config.sdnn.rescore_n))
            .transpose()?;
        let ce = frame_cross_entropy(raw_corpus, &params.frontend)?;
        info!(
            "fsdnn epoch {} loss {epoch_loss:.6} frame_ce {ce:.4} dev_per {dev_per:?}",
            epoch + 1
        );
        log.push(FsdnnEpochLog {
            structured: EpochLog {
                epoch: epoch + 1,
                loss: epoch_loss,
                learning_rate: used_lr,
                dev_per,
            },
            frame_cross_entropy: ce,
        });
    }
    Ok(FsdnnTrainReport { params, log })
}

/// Rescoring with posteriorgrams from the current front end.
pub fn fsdnn_decode(x_raw: &AcousticSequence, lattice: &Lattice, params: &FsdnnParams, n: usize) -> Result<LabelSequence> {
    let posteriors = frontend_forward(x_raw, &params.frontend)?;
    rescore_decode(&posteriors, lattice, &params.scorer, n)
}

pub fn fsdnn_corpus_per(corpus: &[Utterance], lattices: &[Lattice], params: &FsdnnParams, n: usize) -> Result<f64> {
    if corpus.len() != lattices.len() {
        return Err(Error::Pairing {
            expected: corpus.len(),
            found: lattices.len(),
        });
    }
    let idx: Vec<usize> = (0..corpus.len()).collect();
    let hyps = par::map_collect(&idx, |&i| fsdnn_decode(&corpus[i].x, &lattices[i], params, n))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[usize]> = corpus.iter().map(|u| &*u.y_ref).collect();
    let hyps: Vec<&[usize]> = hyps.iter().map(|h| &**h).collect();
    corpus_per(&refs, &hyps)
}

#[derive(Clone, Debug)]
pub struct FrontendTrainConfig {
    pub epochs: usize,
    pub sgd: SgdConfig,
    /// Frames per update.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for FrontendTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            sgd: SgdConfig {
                learning_rate: 0.05,
                momentum: 0.9,
                halving_threshold: 1e-3,
                l2_weight: 0.0,
            },
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FrontendTrainReport {
    pub params: MlpParams,
    /// Mean training-frame cross-entropy after each epoch.
    pub losses: Vec<f64>,
}

/// Frame-wise cross-entropy pre-training of a front end with the given
/// widths (input, hidden…, K), starting from Glorot weights.
pub fn pretrain_frontend(
    raw_corpus: &[Utterance],
    layer_sizes: &[usize],
    config: &FrontendTrainConfig,
) -> Result<FrontendTrainReport> {
    let init = crate::neural::init_weights(layer_sizes, config.seed)?;
    pretrain_frontend_from(raw_corpus, init, config)
}

pub fn pretrain_frontend_from(
    raw_corpus: &[Utterance],
    mut params: MlpParams,
    config: &FrontendTrainConfig,
) -> Result<FrontendTrainReport> {
    config.sgd.validate()?;
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be >= 1".into()));
    }
    let k = params.output_size();
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for (u, utt) in raw_corpus.iter().enumerate() {
        if utt.x.dim() != params.input_size() {
            return Err(Error::Shape(format!(
                "raw frame width {} does not match front-end input {}",
                utt.x.dim(),
                params.input_size()
            )));
        }
        utt.y_ref.validate(k)?;
        frames.extend((0..utt.len()).map(|j| (u, j)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut velocity = params.zeros_like();
    let mut lr = LearningRate::new(&config.sgd);
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        frames.shuffle(&mut rng);
        for batch in frames.chunks(config.batch_size) {
            let current = &params;
            let results = par::map_collect(batch, |&(u, j)| -> Result<MlpParams> {
                let utt = &raw_corpus[u];
                let trace = forward_logits(utt.x.frame(j), current)?;
                let mut dz = softmax(&trace.logits);
                dz[utt.y_ref[j]] -= 1.0;
                Ok(backward_from_logits(&trace, current, &dz, SigmoidDerivative::Exact)?.weights)
            });
            let mut grads = params.zeros_like();
            for g in results {
                grads.add_scaled(&g?, 1.0 / batch.len() as f64);
            }
            sgd_momentum_step(&mut params, &grads, &mut velocity, lr.current, &config.sgd)?;
        }
        let loss = frame_cross_entropy(raw_corpus, &params)?;
        lr.end_epoch(loss);
        losses.push(loss);
    }
    Ok(FrontendTrainReport { params, losses })
}

/// Mean `-log p(y_j | x_j)` over all frames.
pub fn frame_cross_entropy(corpus: &[Utterance], frontend: &MlpParams) -> Result<f64> {
    let per_utt = par::map_collect(corpus, |u| -> Result<(f64, usize)> {
        let p = frontend_forward(&u.x, frontend)?;
        let ce = u
            .y_ref
            .iter()
            .enumerate()
            .map(|(j, &l)| -p.frame(j)[l].max(1e-300).ln())
            .sum::<f64>();
        Ok((ce, u.len()))
    });
    let (mut total, mut count) = (0.0, 0usize);
    for r in per_utt {
        let (c, n) = r?;
        total += c;
        count += n;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Fraction of frames whose posteriorgram argmax equals the reference label.
pub fn frame_accuracy(corpus: &[Utterance], frontend: &MlpParams) -> Result<f64> {
    let (mut hit, mut total) = (0usize, 0usize);
    for u in corpus {
        let p = frontend_forward(&u.x, frontend)?;
        for (j, &l) in u.y_ref.iter().enumerate() {
            let frame = p.frame(j);
            let best = (0..frame.len())
                .max_by(|&a, &b| frame[a].total_cmp(&frame[b]).then(b.cmp(&a)))
                .unwrap_or(0);
            hit += usize::from(best == l);
            total += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { hit as f64 / total as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::psi_len;
    use crate::neural::{init_weights, mlp_score};
    use rand::Rng;

    fn params(rng: &mut ChaCha8Rng, raw: usize, k: usize, hidden: usize) -> FsdnnParams {
        let frontend = init_weights(&[raw, hidden, k], rng.gen()).unwrap();
        let scorer = init_weights(&[psi_len(k, k), hidden, 1], rng.gen()).unwrap();
        FsdnnParams::new(frontend, scorer).unwrap()
    }

    fn raw(rng: &mut ChaCha8Rng, dim: usize, m: usize) -> AcousticSequence {
        AcousticSequence::new(dim, (0..dim * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn softmax_properties() {
        let zero = MlpParams::zeros(vec![3, 4, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let x = raw(&mut rng, 3, 4);
        let p = frontend_forward(&x, &zero).unwrap();
        assert!(p.as_slice().iter().all(|&v| (v - 0.2).abs() < 1e-15));
        assert_eq!(softmax(&[0.7, 0.7]), vec![0.5, 0.5]);
        let fe = init_weights(&[3, 4, 5], 9).unwrap();
        for frame in frontend_forward(&x, &fe).unwrap().frames() {
            assert!((frame.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(frame.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn composition_matches_scoring_posteriors() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let p = params(&mut rng, 4, 3, 5);
        let x = raw(&mut rng, 4, 6);
        let y = [0, 0, 2, 1, 1, 2];
        let (score, _) = fsdnn_forward(&x, &y, &p).unwrap();
        let post = frontend_forward(&x, &p.frontend).unwrap();
        let direct = mlp_score(&psi_first_order(&post, &y, 3).unwrap().values, &p.scorer).unwrap();
        assert_eq!(score.to_bits(), direct.to_bits());
        assert!(score > 0.0 && score < 1.0);

        let zero_scorer = FsdnnParams::new(p.frontend.clone(), p.scorer.zeros_like()).unwrap();
        assert_eq!(fsdnn_forward(&x, &y, &zero_scorer).unwrap().0, 0.5);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for case in 0..6 {
            let p = params(&mut rng, 3, 3, 4);
            let x = raw(&mut rng, 3, 5);
            let y: Vec<usize> = (0..5).map(|_| rng.gen_range(0..3)).collect();
            let upstream = rng.gen_range(0.5..2.0);
            let (_, trace) = fsdnn_forward(&x, &y, &p).unwrap();
            let g = fsdnn_backward(&trace, &p, upstream).unwrap();
            let eps = 1e-5;
            for i in 0..p.frontend.num_params() {
                let mut q = p.clone();
                *q.frontend.param_mut(i) += eps;
                let plus = fsdnn_forward(&x, &y, &q).unwrap().0;
                *q.frontend.param_mut(i) -= 2.0 * eps;
                let minus = fsdnn_forward(&x, &y, &q).unwrap().0;
                let fd = upstream * (plus - minus) / (2.0 * eps);
                let a = g.frontend.param(i);
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-5);
                assert!(rel < 1e-4, "case {case} frontend weight {i}: {a} vs {fd}");
            }
        }
    }

    #[test]
    fn transition_only_scorer_gives_zero_frontend_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let mut p = params(&mut rng, 3, 3, 4);
        let obs = 3 * 3;
        let w0 = &mut p.scorer.weights[0];
        for r in 0..w0.rows {
            for c in 0..obs {
                w0.data[r * w0.cols + c] = 0.0;
            }
        }
        let x = raw(&mut rng, 3, 4);
        let (_, trace) = fsdnn_forward(&x, &[0, 1, 1, 2], &p).unwrap();
        let g = fsdnn_backward(&trace, &p, 1.0).unwrap();
        assert!(g.frontend.weights.iter().flat_map(|w| &w.data).all(|&v| v == 0.0));
        let g0 = fsdnn_backward(&trace, &params(&mut rng, 3, 3, 4), 0.0);
        assert!(g0.is_ok());
        let (_, t2) = fsdnn_forward(&x, &[0, 1, 1, 2], &p).unwrap();
        let z = fsdnn_backward(&t2, &p, 0.0).unwrap();
        assert!(z.scorer.weights.iter().chain(&z.frontend.weights).flat_map(|w| &w.data).all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let p = params(&mut rng, 3, 3, 4);
        let x = raw(&mut rng, 5, 4);
        assert!(matches!(fsdnn_forward(&x, &[0, 0, 0, 0], &p), Err(Error::Shape(_))));
        let bad = init_weights(&[7, 2, 1], 0).unwrap();
        assert!(FsdnnParams::new(p.frontend.clone(), bad).is_err());
    }

    #[test]
    fn pretraining_separable_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let k = 3;
        let means = [[2.0, 0.0], [-2.0, 0.0], [0.0, 2.0]];
        let corpus: Vec<Utterance> = (0..20)
            .map(|_| {
                let y: Vec<usize> = (0..8).map(|_| rng.gen_range(0..k)).collect();
                let data: Vec<f64> = y
                    .iter()
                    .flat_map(|&l| means[l].iter().map(|m| m + rng.gen_range(-0.3..0.3)).collect::<Vec<_>>())
                    .collect();
                Utterance::new(AcousticSequence::new(2, data).unwrap(), y.into()).unwrap()
            })
            .collect();
        let cfg = FrontendTrainConfig { epochs: 8, ..Default::default() };
        let report = pretrain_frontend(&corpus, &[2, 8, k], &cfg).unwrap();
        assert!(frame_accuracy(&corpus, &report.params).unwrap() > 0.9);
        for w in report.losses.windows(2).take(4) {
            assert!(w[1] <= w[0] * 1.05);
        }

        let frozen = FrontendTrainConfig {
            epochs: 2,
            sgd: SgdConfig { learning_rate: 0.0, ..cfg.sgd.clone() },
            ..cfg
        };
        let init = init_weights(&[2, 8, k], 4).unwrap();
        let same = pretrain_frontend_from(&corpus, init.clone(), &frozen).unwrap();
        assert_eq!(same.params, init);
    }
}
