//! Structured-DNN training and inference: the multilayer scorer is applied
//! to Ψ(x, y) for whole label sequences, trained against sampled negative
//! sequences, and used to rescore lattice N-best lists.

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{psi_first_order, psi_len};
use crate::lattice::{random_sequence, Lattice, ScoredPath};
use crate::metrics::{corpus_per, delta, DistanceKind};
use crate::neural::{mlp_backward, mlp_forward, mlp_score, sgd_momentum_step, LearningRate, MlpParams, SgdConfig};
use crate::par;
use crate::sequence::{AcousticSequence, LabelSequence, Utterance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LossKind {
    /// Squared error between the score and the phone accuracy of each
    /// sequence.
    ApproxAccuracy,
    /// Summed hinges `max(0, F(neg) + Δ − F(pos))`.
    #[default]
    MaxMargin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NegativeSource {
    Random,
    LatticeRandom,
    LatticeNbest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Negative {
    pub labels: LabelSequence,
    /// Phone-edit distance to the reference, unclamped.
    pub delta: f64,
    pub source: NegativeSource,
}

/// A reference sequence plus sampled competitors.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExampleSet {
    pub positive: LabelSequence,
    pub negatives: Vec<Negative>,
}

#[derive(Clone, Debug)]
pub struct SdnnTrainConfig {
    pub loss: LossKind,
    /// Draws per negative source.
    pub n_negative: usize,
    pub epochs: usize,
    pub sgd: SgdConfig,
    /// N-best depth used when rescoring.
    pub rescore_n: usize,
    /// Utterances per parameter update.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SdnnTrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::MaxMargin,
            n_negative: 1,
            epochs: 10,
            sgd: SgdConfig::default(),
            rescore_n: 10,
            batch_size: 1,
            seed: 0,
        }
    }
}

impl SdnnTrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.sgd.validate()?;
        if self.n_negative == 0 || self.rescore_n == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "n_negative, rescore n and batch size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// `(C − s)²` and its derivative in `s`.
pub fn loss_approx_acc(score: f64, target: f64) -> (f64, f64) {
    let diff = target - score;
    (diff * diff, -2.0 * diff)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginLoss {
    pub loss: f64,
    /// Whether each negative's hinge argument is positive.
    pub active: Vec<bool>,
    pub d_positive: f64,
    pub d_negatives: Vec<f64>,
}

/// `Σ max(0, neg + Δ − pos)` over `(neg_score, Δ)` pairs.
pub fn loss_max_margin(pos_score: f64, negatives: &[(f64, f64)]) -> MarginLoss {
    let mut loss = 0.0;
    let mut active = Vec::with_capacity(negatives.len());
    for &(neg, d) in negatives {
        let arg = neg + d - pos_score;
        let on = arg > 0.0;
        if on {
            loss += arg;
        }
        active.push(on);
    }
    let count = active.iter().filter(|&&a| a).count() as f64;
    MarginLoss {
        loss,
        d_negatives: active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect(),
        d_positive: -count,
        active,
    }
}

/// Loss over one example set given the scores of its positive and negatives,
/// with the derivative of the loss in each score (positive first).
pub fn example_loss(kind: LossKind, pos_score: f64, negatives: &[(f64, f64)]) -> (f64, Vec<f64>) {
    match kind {
        LossKind::MaxMargin => {
            let m = loss_max_margin(pos_score, negatives);
            let mut d = Vec::with_capacity(negatives.len() + 1);
            d.push(m.d_positive);
            d.extend(m.d_negatives);
            (m.loss, d)
        }
        LossKind::ApproxAccuracy => {
            let (mut loss, dp) = loss_approx_acc(pos_score, 1.0);
            let mut d = vec![dp];
            for &(neg, delta) in negatives {
                let (l, dn) = loss_approx_acc(neg, (1.0 - delta).clamp(0.0, 1.0));
                loss += l;
                d.push(dn);
            }
            (loss, d)
        }
    }
}

/// Samples `n_negative` sequences from each source and drops any that equal
/// the reference.
pub fn build_examples<R: rand::Rng + ?Sized>(
    utt: &Utterance,
    lattice: &Lattice,
    n_negative: usize,
    rng: &mut R,
) -> Result<TrainingExampleSet> {
    if lattice.frames() != utt.len() {
        return Err(Error::Pairing {
            expected: utt.len(),
            found: lattice.frames(),
        });
    }
    let size = lattice.size();
    let mut candidates = Vec::with_capacity(3 * n_negative);
    for _ in 0..n_negative {
        candidates.push((random_sequence(size, utt.len(), rng)?, NegativeSource::Random));
    }
    for _ in 0..n_negative {
        candidates.push((lattice.random_path(rng).labels, NegativeSource::LatticeRandom));
    }
    for path in lattice.nbest(n_negative) {
        candidates.push((path.labels, NegativeSource::LatticeNbest));
    }
    let negatives = candidates
        .into_iter()
        .filter(|(labels, _)| *labels != utt.y_ref)
        .map(|(labels, source)| {
            let d = delta(&utt.y_ref, &labels, DistanceKind::PhoneEdit)?;
            Ok(Negative { labels, delta: d, source })
        })
        .collect::<Result<_>>()?;
    Ok(TrainingExampleSet {
        positive: utt.y_ref.clone(),
        negatives,
    })
}

/// Deterministic per-(epoch, utterance) stream.
pub(crate) fn utterance_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) ^ index as u64);
    rng
}

/// Scores every sequence of the set and returns the loss plus the gradient
/// over the scorer weights.
pub fn example_gradient(
    x: &AcousticSequence,
    set: &TrainingExampleSet,
    params: &MlpParams,
    kind: LossKind,
    size: usize,
) -> Result<(f64, MlpParams)> {
    let mut traces = Vec::with_capacity(set.negatives.len() + 1);
    let sequences = std::iter::once(&set.positive).chain(set.negatives.iter().map(|n| &n.labels));
    for labels in sequences {
        let psi = psi_first_order(x, labels, size)?;
        traces.push(mlp_forward(&psi.values, params)?);
    }
    let negs: Vec<(f64, f64)> = traces[1..]
        .iter()
        .zip(&set.negatives)
        .map(|((s, _), n)| (*s, n.delta))
        .collect();
    let (loss, d_scores) = example_loss(kind, traces[0].0, &negs);
    let mut grads = params.zeros_like();
    for ((_, trace), d) in traces.iter().zip(d_scores) {
        if d != 0.0 {
            grads.add_scaled(&mlp_backward(trace, params, d)?.weights, 1.0);
        }
    }
    Ok((loss, grads))
}

/// Total loss of fixed example sets under `params`.
pub fn examples_loss(
    examples: &[(AcousticSequence, TrainingExampleSet)],
    params: &MlpParams,
    kind: LossKind,
    size: usize,
) -> Result<f64> {
    let losses = par::map_collect(examples, |(x, set)| -> Result<f64> {
        let pos = mlp_score(&psi_first_order(x, &set.positive, size)?.values, params)?;
        let negs = set
            .negatives
            .iter()
            .map(|n| Ok((mlp_score(&psi_first_order(x, &n.labels, size)?.values, params)?, n.delta)))
            .collect::<Result<Vec<_>>>()?;
        Ok(example_loss(kind, pos, &negs).0)
    });
    losses.into_iter().sum()
}

/// One epoch's log line.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub learning_rate: f64,
    pub dev_per: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SdnnTrainReport {
    pub params: MlpParams,
    pub log: Vec<EpochLog>,
}

/// Held-out utterances with their lattices, for per-epoch PER.
#[derive(Clone, Copy)]
pub struct DevSet<'a> {
    pub corpus: &'a [Utterance],
    pub lattices: &'a [Lattice],
}

pub(crate) fn check_scorer_input(params: &MlpParams, dim: usize, size: usize) -> Result<()> {
    if params.input_size() != psi_len(dim, size) || params.output_size() != 1 {
        return Err(Error::Config(format!(
            "scorer is {:?}, expected input {} and one output",
            params.layer_sizes,
            psi_len(dim, size)
        )));
    }
    Ok(())
}

fn check_pairs(corpus: &[Utterance], lattices: &[Lattice]) -> Result<()> {
    if corpus.len() != lattices.len() {
        return Err(Error::Pairing {
            expected: corpus.len(),
            found: lattices.len(),
        });
    }
    for (u, l) in corpus.iter().zip(lattices) {
        if u.len() != l.frames() {
            return Err(Error::Pairing {
                expected: u.len(),
                found: l.frames(),
            });
        }
    }
    Ok(())
}

/// Trains the scorer with negatives re-sampled every epoch.
pub fn train_sdnn(
    corpus: &[Utterance],
    lattices: &[Lattice],
    params: MlpParams,
    config: &SdnnTrainConfig,
    dev: Option<DevSet<'_>>,
) -> Result<SdnnTrainReport> {
    train_sdnn_resume(corpus, lattices, params, config, dev, 0)
}

/// As [`train_sdnn`], numbering epochs after `epochs_done` previous ones.
pub fn train_sdnn_resume(
    corpus: &[Utterance],
    lattices: &[Lattice],
    mut params: MlpParams,
    config: &SdnnTrainConfig,
    dev: Option<DevSet<'_>>,
    epochs_done: usize,
) -> Result<SdnnTrainReport> {
    config.validate()?;
    check_pairs(corpus, lattices)?;
    let size = lattices.first().map(Lattice::size).unwrap_or(2);
    if let Some(u) = corpus.first() {
        check_scorer_input(&params, u.x.dim(), size)?;
    }
    let mut velocity = params.zeros_like();
    let mut lr = LearningRate::new(&config.sgd);
    let mut log = Vec::with_capacity(config.epochs);
    let order: Vec<usize> = (0..corpus.len()).collect();
    for e in 0..config.epochs {
        let epoch = epochs_done + e;
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let current = &params;
            let results = par::map_collect(batch, |&i| -> Result<(f64, MlpParams)> {
                let mut rng = utterance_rng(config.seed, epoch, i);
                let set = build_examples(&corpus[i], &lattices[i], config.n_negative, &mut rng)?;
                example_gradient(&corpus[i].x, &set, current, config.loss, size)
            });
            let mut grads = params.zeros_like();
            for r in results {
                let (loss, g) = r?;
                epoch_loss += loss;
                grads.add_scaled(&g, 1.0);
            }
            sgd_momentum_step(&mut params, &grads, &mut velocity, lr.current, &config.sgd)?;
        }
        let used_lr = lr.current;
        if lr.end_epoch(epoch_loss) {
            debug!("halving learning rate to {:.3e}", lr.current);
        }
        let dev_per = dev
            .map(|d| rescore_corpus_per(d.corpus, d.lattices, &params, config.rescore_n))
            .transpose()?;
        info!(
            "sdnn epoch {} loss {epoch_loss:.6} lr {used_lr:.3e} dev_per {dev_per:?}",
            epoch + 1
        );
        log.push(EpochLog {
            epoch: epoch + 1,
            loss: epoch_loss,
            learning_rate: used_lr,
            dev_per,
        });
    }
    Ok(SdnnTrainReport { params, log })
}

/// Trains on fixed example sets. Stops early once the loss over all sets,
/// evaluated after an epoch, is exactly zero.
pub fn train_fixed_examples(
    examples: &[(AcousticSequence, TrainingExampleSet)],
    size: usize,
    mut params: MlpParams,
    config: &SdnnTrainConfig,
) -> Result<SdnnTrainReport> {
    config.validate()?;
    let mut velocity = params.zeros_like();
    let mut lr = LearningRate::new(&config.sgd);
    let mut log = Vec::new();
    let order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..config.epochs {
        for batch in order.chunks(config.batch_size) {
            let current = &params;
            let results = par::map_collect(batch, |&i| {
                example_gradient(&examples[i].0, &examples[i].1, current, config.loss, size)
            });
            let mut grads = params.zeros_like();
            for r in results {
                grads.add_scaled(&r?.1, 1.0);
            }
            sgd_momentum_step(&mut params, &grads, &mut velocity, lr.current, &config.sgd)?;
        }
        let loss = examples_loss(examples, &params, config.loss, size)?;
        log.push(EpochLog {
            epoch: epoch + 1,
            loss,
            learning_rate: lr.current,
            dev_per: None,
        });
        lr.end_epoch(loss);
        if loss == 0.0 {
            break;
        }
    }
    Ok(SdnnTrainReport { params, log })
}

/// An N-best entry together with its scorer output.
#[derive(Clone, Debug, PartialEq)]
pub struct RescoredPath {
    pub path: ScoredPath,
    pub score: f64,
}

/// Scores the lattice's `n` best paths, in lattice order.
pub fn rescore_nbest(x: &AcousticSequence, lattice: &Lattice, scorer: &MlpParams, n: usize) -> Result<Vec<RescoredPath>> {
    if n == 0 {
        return Err(Error::Config("n must be >= 1".into()));
    }
    if lattice.frames() != x.len() {
        return Err(Error::Pairing {
            expected: x.len(),
            found: lattice.frames(),
        });
    }
    lattice
        .nbest(n)
        .into_iter()
        .map(|path| {
            let psi = psi_first_order(x, &path.labels, lattice.size())?;
            let score = mlp_score(&psi.values, scorer)?;
            Ok(RescoredPath { path, score })
        })
        .collect()
}

/// Picks the best of `candidates`: highest scorer output, then highest
/// lattice score, then lexicographically smallest labels.
pub fn select_best(candidates: &[RescoredPath]) -> Result<LabelSequence> {
    candidates
        .iter()
        .max_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then(a.path.path_score.total_cmp(&b.path.path_score))
                .then_with(|| b.path.labels.cmp(&a.path.labels))
        })
        .map(|r| r.path.labels.clone())
        .ok_or_else(|| Error::Structure("no candidate paths".into()))
}

/// Rescoring inference: the best of the lattice's `n` best paths under the
/// scorer.
pub fn rescore_decode(x: &AcousticSequence, lattice: &Lattice, scorer: &MlpParams, n: usize) -> Result<LabelSequence> {
    select_best(&rescore_nbest(x, lattice, scorer, n)?)
}

pub fn rescore_corpus(corpus: &[Utterance], lattices: &[Lattice], scorer: &MlpParams, n: usize) -> Result<Vec<LabelSequence>> {
    check_pairs(corpus, lattices)?;
    let idx: Vec<usize> = (0..corpus.len()).collect();
    par::map_collect(&idx, |&i| rescore_decode(&corpus[i].x, &lattices[i], scorer, n))
        .into_iter()
        .collect()
}

pub fn rescore_corpus_per(corpus: &[Utterance], lattices: &[Lattice], scorer: &MlpParams, n: usize) -> Result<f64> {
    let hyps = rescore_corpus(corpus, lattices, scorer, n)?;
    let refs: Vec<&[usize]> = corpus.iter().map(|u| &*u.y_ref).collect();
    let hyps: Vec<&[usize]> = hyps.iter().map(|h| &**h).collect();
    corpus_per(&refs, &hyps)
}

/// Exhaustive argmax of the scorer over all `size^M` sequences; refuses
/// searches above one million sequences.
pub fn exhaustive_decode(x: &AcousticSequence, scorer: &MlpParams, size: usize) -> Result<LabelSequence> {
    const BUDGET: u128 = 1_000_000;
    let m = x.len();
    let total = (size as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if total > BUDGET {
        return Err(Error::Budget(total));
    }
    let mut y = vec![0usize; m];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..total {
        let s = mlp_score(&psi_first_order(x, &y, size)?.values, scorer)?;
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, y.clone()));
        }
        // odometer increment, last frame fastest: lexicographic order
        for slot in y.iter_mut().rev() {
            *slot += 1;
            if *slot < size {
                break;
            }
            *slot = 0;
        }
    }
    Ok(best.expect("at least one sequence").1.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeArc;
    use crate::neural::init_weights;
    use rand::Rng;

    fn full_lattice(size: usize, frames: usize, rng: &mut ChaCha8Rng) -> Lattice {
        let node = |level: usize, label: usize| -> usize {
            if level == 0 {
                0
            } else if level == frames {
                1 + (frames - 1) * size
            } else {
                1 + (level - 1) * size + label
            }
        };
        let mut arcs = Vec::new();
        for j in 0..frames {
            let prevs: Vec<usize> = if j == 0 { vec![0] } else { (0..size).collect() };
            for &p in &prevs {
                for k in 0..size {
                    arcs.push(LatticeArc {
                        frame: j,
                        src: node(j, p),
                        dst: node(j + 1, k),
                        label: k,
                        score: rng.gen_range(-1.0..1.0),
                    });
                }
            }
        }
        Lattice::new(size, frames, arcs).unwrap()
    }

    fn chain(labels: &[usize], size: usize) -> Lattice {
        let arcs = labels
            .iter()
            .enumerate()
            .map(|(j, &l)| LatticeArc { frame: j, src: j, dst: j + 1, label: l, score: 0.0 })
            .collect();
        Lattice::new(size, labels.len(), arcs).unwrap()
    }

    fn random_utt(rng: &mut ChaCha8Rng, size: usize, dim: usize, m: usize) -> Utterance {
        let x = AcousticSequence::new(dim, (0..dim * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let y: Vec<usize> = (0..m).map(|_| rng.gen_range(0..size)).collect();
        Utterance::new(x, y.into()).unwrap()
    }

    #[test]
    fn approx_acc_examples() {
        assert_eq!(loss_approx_acc(0.7, 0.7), (0.0, -0.0));
        assert_eq!(loss_approx_acc(0.5, 1.0), (0.25, -1.0));
        let (l, g) = loss_approx_acc(0.9, 0.0);
        assert!((l - 0.81).abs() < 1e-15 && (g - 1.8).abs() < 1e-15);
    }

    #[test]
    fn max_margin_examples() {
        let m = loss_max_margin(0.9, &[(0.3, 0.5)]);
        assert_eq!(m.loss, 0.0);
        assert_eq!(m.active, vec![false]);
        let m = loss_max_margin(0.9, &[(0.6, 0.5)]);
        assert!((m.loss - 0.2).abs() < 1e-15);
        assert_eq!(m.d_positive, -1.0);
        assert_eq!(m.d_negatives, vec![1.0]);
        assert_eq!(loss_max_margin(0.9, &[]).loss, 0.0);
    }

    #[test]
    fn build_examples_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let utt = random_utt(&mut rng, 3, 2, 5);
        let lattice = full_lattice(3, 5, &mut rng);
        let set = build_examples(&utt, &lattice, 1, &mut rng).unwrap();
        assert!(set.negatives.len() <= 3);
        assert!(set.negatives.iter().all(|n| n.labels != utt.y_ref && n.delta >= 0.0));

        let only_ref = chain(&utt.y_ref, 3);
        for seed in 0..20 {
            let set = build_examples(&utt, &only_ref, 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(set.negatives.iter().all(|n| n.source == NegativeSource::Random));
            assert!(set.negatives.len() <= 1);
        }

        let a = build_examples(&utt, &lattice, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = build_examples(&utt, &lattice, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);

        let short = chain(&[0, 1], 3);
        assert!(matches!(
            build_examples(&utt, &short, 1, &mut rng),
            Err(Error::Pairing { .. })
        ));
    }

    #[test]
    fn rescore_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let utt = random_utt(&mut rng, 2, 2, 3);
        let lattice = full_lattice(2, 3, &mut rng);
        let scorer = init_weights(&[psi_len(2, 2), 5, 1], 1).unwrap();
        assert_eq!(
            rescore_decode(&utt.x, &lattice, &scorer, 1).unwrap(),
            lattice.best_path().labels
        );
        let constant = MlpParams::zeros(vec![psi_len(2, 2), 5, 1]).unwrap();
        assert_eq!(
            rescore_decode(&utt.x, &lattice, &constant, 8).unwrap(),
            lattice.best_path().labels
        );
        assert_eq!(
            rescore_decode(&utt.x, &lattice, &scorer, 8).unwrap(),
            exhaustive_decode(&utt.x, &scorer, 2).unwrap()
        );
        assert!(rescore_decode(&utt.x, &lattice, &scorer, 0).is_err());
    }

    #[test]
    fn larger_n_never_lowers_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let utt = random_utt(&mut rng, 3, 2, 4);
            let lattice = full_lattice(3, 4, &mut rng);
            let scorer = init_weights(&[psi_len(2, 3), 6, 1], rng.gen()).unwrap();
            let score = |y: &[usize]| mlp_score(&psi_first_order(&utt.x, y, 3).unwrap().values, &scorer).unwrap();
            let mut last = f64::NEG_INFINITY;
            for n in 1..=20 {
                let s = score(&rescore_decode(&utt.x, &lattice, &scorer, n).unwrap());
                assert!(s >= last);
                last = s;
            }
        }
    }

    #[test]
    fn exhaustive_budget_and_trivial_alphabet() {
        let x = AcousticSequence::new(1, vec![0.0; 21]).unwrap();
        let scorer = MlpParams::zeros(vec![psi_len(1, 2), 1]).unwrap();
        assert!(matches!(exhaustive_decode(&x, &scorer, 2), Err(Error::Budget(_))));
        let x = AcousticSequence::new(1, vec![0.5; 3]).unwrap();
        let single = init_weights(&[psi_len(1, 1), 2, 1], 0).unwrap();
        assert_eq!(&*exhaustive_decode(&x, &single, 1).unwrap(), &[0, 0, 0]);
    }

    #[test]
    fn lr_zero_keeps_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let corpus: Vec<Utterance> = (0..4).map(|_| random_utt(&mut rng, 3, 2, 5)).collect();
        let lattices: Vec<Lattice> = (0..4).map(|_| full_lattice(3, 5, &mut rng)).collect();
        let params = init_weights(&[psi_len(2, 3), 4, 1], 5).unwrap();
        let cfg = SdnnTrainConfig {
            epochs: 2,
            sgd: SgdConfig { learning_rate: 0.0, ..Default::default() },
            ..Default::default()
        };
        let out = train_sdnn(&corpus, &lattices, params.clone(), &cfg, None).unwrap();
        assert_eq!(out.params, params);
    }

    #[test]
    fn scorer_shape_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let corpus = vec![random_utt(&mut rng, 3, 2, 5)];
        let lattices = vec![full_lattice(3, 5, &mut rng)];
        let params = init_weights(&[7, 4, 1], 5).unwrap();
        assert!(matches!(
            train_sdnn(&corpus, &lattices, params, &SdnnTrainConfig::default(), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn approx_acc_training_loss_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let examples: Vec<(AcousticSequence, TrainingExampleSet)> = (0..20)
            .map(|_| {
                let utt = random_utt(&mut rng, 3, 2, 6);
                let lattice = full_lattice(3, 6, &mut rng);
                let set = build_examples(&utt, &lattice, 2, &mut rng).unwrap();
                (utt.x, set)
            })
            .collect();
        let params = init_weights(&[psi_len(2, 3), 8, 1], 6).unwrap();
        let cfg = SdnnTrainConfig {
            loss: LossKind::ApproxAccuracy,
            epochs: 10,
            sgd: SgdConfig { learning_rate: 0.01, momentum: 0.9, halving_threshold: 1e-3, l2_weight: 0.0 },
            ..Default::default()
        };
        let report = train_fixed_examples(&examples, 3, params, &cfg).unwrap();
        for w in report.log.windows(2) {
            assert!(w[1].loss <= w[0].loss * 1.05, "{} -> {}", w[0].loss, w[1].loss);
        }
    }
}
