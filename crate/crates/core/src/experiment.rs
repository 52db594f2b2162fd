//! End-to-end comparison runs on a synthetic corpus.
//!
//! A front end is pre-trained on raw frames, a linear structured scorer on
//! its posteriorgrams plays the baseline recognizer whose beam lattices all
//! rescoring systems share, and the following are compared on the test
//! split:
//!
//! * a linear structured scorer on raw frames, decoded with Viterbi;
//! * the structured DNN on raw frames trained with each loss, rescoring;
//! * the structured DNN on frozen posteriorgrams, and the same network
//!   trained jointly with its front end.

use log::info;

use crate::corpus::{generate_corpus, Corpus, Split, SyntheticSpec};
use crate::error::{Error, Result};
use crate::features::psi_len;
use crate::fsdnn::{
    fsdnn_corpus_per, posteriorgram_corpus, pretrain_frontend, train_fsdnn, FrontendTrainConfig, FsdnnParams,
    FsdnnTrainConfig,
};
use crate::lattice::Lattice;
use crate::linear::{beam_lattice, train_linear, viterbi_decode, LinearParams, LinearTrainConfig};
use crate::metrics::{accuracy, corpus_per, spearman};
use crate::neural::{init_weights, MlpParams, SgdConfig};
use crate::par;
use crate::sdnn::{rescore_corpus, rescore_nbest, train_sdnn, LossKind, SdnnTrainConfig};
use crate::sequence::Utterance;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub size: usize,
    pub raw_dim: usize,
    pub n_utterances: usize,
    /// Mixture components per phone.
    pub components: usize,
    pub variance: f64,
    pub corpus_seed: u64,
    pub frontend_hidden: Vec<usize>,
    pub frontend: FrontendTrainConfig,
    /// Baseline recognizer trained on posteriorgrams.
    pub baseline: LinearTrainConfig,
    pub beam_width: usize,
    /// Linear structured scorer on raw frames.
    pub raw_linear: LinearTrainConfig,
    pub scorer_hidden: Vec<usize>,
    pub sdnn: SdnnTrainConfig,
    /// Front-end optimizer during joint training.
    pub joint_frontend_sgd: SgdConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sgd = SgdConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            halving_threshold: 1e-3,
            l2_weight: 1e-4,
        };
        Self {
            size: 6,
            raw_dim: 8,
            n_utterances: 200,
            components: 2,
            variance: 0.5,
            corpus_seed: 2024,
            frontend_hidden: vec![32],
            frontend: FrontendTrainConfig {
                epochs: 8,
                ..Default::default()
            },
            baseline: LinearTrainConfig {
                epochs: 20,
                ..Default::default()
            },
            beam_width: 3,
            raw_linear: LinearTrainConfig {
                epochs: 20,
                ..Default::default()
            },
            scorer_hidden: vec![64, 64],
            sdnn: SdnnTrainConfig {
                epochs: 20,
                sgd: sgd.clone(),
                ..Default::default()
            },
            joint_frontend_sgd: SgdConfig {
                learning_rate: 1e-3,
                ..sgd
            },
        }
    }
}

impl ExperimentConfig {
    pub fn synthetic_spec(&self) -> Result<SyntheticSpec> {
        SyntheticSpec::mixture(self.size, self.raw_dim, self.components, self.variance, self.corpus_seed)
    }

    fn seeded(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.frontend.seed = seed;
        c.baseline.seed = seed;
        c.raw_linear.seed = seed;
        c.sdnn.seed = seed;
        c
    }
}

#[derive(Clone, Debug)]
pub struct SplitData<T> {
    pub train: T,
    pub dev: T,
    pub test: T,
}

impl<T> SplitData<T> {
    pub fn get(&self, split: Split) -> &T {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    fn try_map<U>(&self, mut f: impl FnMut(&T) -> Result<U>) -> Result<SplitData<U>> {
        Ok(SplitData {
            train: f(&self.train)?,
            dev: f(&self.dev)?,
            test: f(&self.test)?,
        })
    }
}

/// Everything that the rescoring systems share.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub corpus: Corpus,
    pub raw: SplitData<Vec<Utterance>>,
    pub posteriors: SplitData<Vec<Utterance>>,
    pub frontend: MlpParams,
    pub baseline: LinearParams,
    pub lattices: SplitData<Vec<Lattice>>,
}

pub fn prepare(config: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let config = config.seeded(seed);
    let corpus = generate_corpus(&config.synthetic_spec()?, config.n_utterances)?;
    let raw = SplitData {
        train: corpus.split(Split::Train),
        dev: corpus.split(Split::Dev),
        test: corpus.split(Split::Test),
    };
    if raw.train.is_empty() || raw.dev.is_empty() || raw.test.is_empty() {
        return Err(Error::Config("every split needs at least one utterance".into()));
    }
    let mut sizes = vec![config.raw_dim];
    sizes.extend(&config.frontend_hidden);
    sizes.push(config.size);
    let frontend = pretrain_frontend(&raw.train, &sizes, &config.frontend)?.params;
    let posteriors = raw.try_map(|c| posteriorgram_corpus(c, &frontend))?;
    let baseline = train_linear(&posteriors.train, config.size, &config.baseline)?.params;
    let beam = config.beam_width;
    let lattices = posteriors.try_map(|c| {
        par::map_collect(c, |u| beam_lattice(&u.x, &baseline, beam))
            .into_iter()
            .collect()
    })?;
    Ok(Prepared {
        corpus,
        raw,
        posteriors,
        frontend,
        baseline,
        lattices,
    })
}

/// Scorer weights `[psi_len(dim, size), hidden…, 1]`.
pub fn scorer_init(dim: usize, size: usize, hidden: &[usize], seed: u64) -> Result<MlpParams> {
    let mut sizes = vec![psi_len(dim, size)];
    sizes.extend(hidden);
    sizes.push(1);
    init_weights(&sizes, seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonResult {
    pub seed: u64,
    /// Lattice 1-best, i.e. the baseline recognizer.
    pub lattice_best_per: f64,
    /// Best achievable by picking among the lattice's paths.
    pub lattice_oracle_per: f64,
    pub linear_per: f64,
    pub approx_acc_per: f64,
    pub max_margin_per: f64,
    pub frozen_per: f64,
    pub fsdnn_per: f64,
    /// Mean within-utterance rank correlation between max-margin scores and
    /// phone accuracy over the dev N-best lists.
    pub score_accuracy_spearman: Option<f64>,
}

pub fn lattice_best_per(corpus: &[Utterance], lattices: &[Lattice]) -> Result<f64> {
    let hyps: Vec<_> = lattices.iter().map(|l| l.best_path().labels).collect();
    let refs: Vec<&[usize]> = corpus.iter().map(|u| &*u.y_ref).collect();
    corpus_per(&refs, &hyps.iter().map(|h| &**h).collect::<Vec<_>>())
}

/// Corpus PER of the best path each lattice contains.
pub fn lattice_oracle_per(corpus: &[Utterance], lattices: &[Lattice]) -> Result<f64> {
    if corpus.len() != lattices.len() {
        return Err(Error::Pairing {
            expected: corpus.len(),
            found: lattices.len(),
        });
    }
    let (mut errors, mut total) = (0usize, 0usize);
    for (u, l) in corpus.iter().zip(lattices) {
        let (e, n) = l.oracle_errors(&u.y_ref)?;
        errors += e;
        total += n;
    }
    Ok(if total == 0 { 0.0 } else { errors as f64 / total as f64 })
}

/// One line of the score-versus-accuracy export.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreAccuracyRow {
    pub utterance: usize,
    /// 1-based position in the lattice N-best list.
    pub rank: usize,
    pub score: f64,
    pub accuracy: f64,
}

pub fn score_accuracy_rows(
    corpus: &[Utterance],
    lattices: &[Lattice],
    scorer: &MlpParams,
    n: usize,
) -> Result<Vec<ScoreAccuracyRow>> {
    if corpus.len() != lattices.len() {
        return Err(Error::Pairing {
            expected: corpus.len(),
            found: lattices.len(),
        });
    }
    let mut rows = Vec::new();
    for (i, (u, l)) in corpus.iter().zip(lattices).enumerate() {
        for (r, p) in rescore_nbest(&u.x, l, scorer, n)?.into_iter().enumerate() {
            rows.push(ScoreAccuracyRow {
                utterance: i,
                rank: r + 1,
                score: p.score,
                accuracy: accuracy(&u.y_ref, &p.path.labels)?,
            });
        }
    }
    Ok(rows)
}

/// Mean of per-utterance Spearman correlations; utterances where score or
/// accuracy is constant are skipped.
pub fn mean_within_utterance_spearman(rows: &[ScoreAccuracyRow]) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for group in rows.chunk_by(|a, b| a.utterance == b.utterance) {
        let s: Vec<f64> = group.iter().map(|r| r.score).collect();
        let a: Vec<f64> = group.iter().map(|r| r.accuracy).collect();
        if let Some(rho) = spearman(&s, &a)? {
            sum += rho;
            count += 1;
        }
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Linear structured scorer on raw frames, Viterbi-decoded.
pub fn linear_raw_per(prepared: &Prepared, config: &LinearTrainConfig, size: usize) -> Result<f64> {
    let params = train_linear(&prepared.raw.train, size, config)?.params;
    let test = &prepared.raw.test;
    let hyps = par::map_collect(test, |u| viterbi_decode(&u.x, &params))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[usize]> = test.iter().map(|u| &*u.y_ref).collect();
    corpus_per(&refs, &hyps.iter().map(|h| &**h).collect::<Vec<_>>())
}

/// Trains a structured DNN on `train` and returns it with its test PER.
pub fn sdnn_per(
    data: &SplitData<Vec<Utterance>>,
    lattices: &SplitData<Vec<Lattice>>,
    init: MlpParams,
    config: &SdnnTrainConfig,
) -> Result<(MlpParams, f64)> {
    let scorer = train_sdnn(&data.train, &lattices.train, init, config, None)?.params;
    let hyps = rescore_corpus(&data.test, &lattices.test, &scorer, config.rescore_n)?;
    let refs: Vec<&[usize]> = data.test.iter().map(|u| &*u.y_ref).collect();
    let per = corpus_per(&refs, &hyps.iter().map(|h| &**h).collect::<Vec<_>>())?;
    Ok((scorer, per))
}

pub fn run_comparison(config: &ExperimentConfig, seed: u64) -> Result<ComparisonResult> {
    let prepared = prepare(config, seed)?;
    let config = config.seeded(seed);
    let k = config.size;
    let lattice_best = lattice_best_per(&prepared.raw.test, &prepared.lattices.test)?;
    let lattice_oracle = lattice_oracle_per(&prepared.raw.test, &prepared.lattices.test)?;
    let linear = linear_raw_per(&prepared, &config.raw_linear, k)?;

    let raw_init = scorer_init(config.raw_dim, k, &config.scorer_hidden, seed)?;
    let approx_cfg = SdnnTrainConfig {
        loss: LossKind::ApproxAccuracy,
        ..config.sdnn.clone()
    };
    let (_, approx) = sdnn_per(&prepared.raw, &prepared.lattices, raw_init.clone(), &approx_cfg)?;
    let margin_cfg = SdnnTrainConfig {
        loss: LossKind::MaxMargin,
        ..config.sdnn.clone()
    };
    let (margin_scorer, margin) = sdnn_per(&prepared.raw, &prepared.lattices, raw_init, &margin_cfg)?;
    let rows = score_accuracy_rows(&prepared.raw.dev, &prepared.lattices.dev, &margin_scorer, config.sdnn.rescore_n)?;
    let rho = mean_within_utterance_spearman(&rows)?;

    let post_init = scorer_init(k, k, &config.scorer_hidden, seed)?;
    let (_, frozen) = sdnn_per(&prepared.posteriors, &prepared.lattices, post_init.clone(), &margin_cfg)?;
    let joint = FsdnnTrainConfig {
        sdnn: margin_cfg,
        frontend_sgd: config.joint_frontend_sgd.clone(),
    };
    let fsdnn = train_fsdnn(
        &prepared.raw.train,
        &prepared.lattices.train,
        FsdnnParams::new(prepared.frontend.clone(), post_init)?,
        &joint,
        None,
    )?
    .params;
    let fsdnn_per = fsdnn_corpus_per(&prepared.raw.test, &prepared.lattices.test, &fsdnn, joint.sdnn.rescore_n)?;

    let result = ComparisonResult {
        seed,
        lattice_best_per: lattice_best,
        lattice_oracle_per: lattice_oracle,
        linear_per: linear,
        approx_acc_per: approx,
        max_margin_per: margin,
        frozen_per: frozen,
        fsdnn_per,
        score_accuracy_spearman: rho,
    };
    info!("comparison {result:?}");
    Ok(result)
}

/// One cell of a depth × width grid: a full-scale model whose scorer has
/// `layers` hidden layers of `width` units, trained jointly; returns the
/// dev PER.
pub fn sweep_cell(prepared: &Prepared, config: &ExperimentConfig, layers: usize, width: usize, seed: u64) -> Result<f64> {
    if layers == 0 || width == 0 {
        return Err(Error::Config("sweep cells need layers >= 1 and width >= 1".into()));
    }
    let config = config.seeded(seed);
    let k = config.size;
    let scorer = scorer_init(k, k, &vec![width; layers], seed)?;
    let joint = FsdnnTrainConfig {
        sdnn: SdnnTrainConfig {
            loss: LossKind::MaxMargin,
            ..config.sdnn.clone()
        },
        frontend_sgd: config.joint_frontend_sgd.clone(),
    };
    let params = train_fsdnn(
        &prepared.raw.train,
        &prepared.lattices.train,
        FsdnnParams::new(prepared.frontend.clone(), scorer)?,
        &joint,
        None,
    )?
    .params;
    fsdnn_corpus_per(&prepared.raw.dev, &prepared.lattices.dev, &params, joint.sdnn.rescore_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut c = ExperimentConfig {
            n_utterances: 30,
            frontend_hidden: vec![8],
            scorer_hidden: vec![8],
            ..Default::default()
        };
        c.frontend.epochs = 2;
        c.baseline.epochs = 2;
        c.raw_linear.epochs = 2;
        c.sdnn.epochs = 2;
        c
    }

    #[test]
    fn comparison_runs_and_repeats() {
        let a = run_comparison(&tiny(), 1).unwrap();
        let b = run_comparison(&tiny(), 1).unwrap();
        assert_eq!(a, b);
        for per in [a.linear_per, a.approx_acc_per, a.max_margin_per, a.frozen_per, a.fsdnn_per] {
            assert!(per.is_finite() && per >= 0.0);
        }
        assert!(a.lattice_oracle_per <= a.lattice_best_per);
    }

    #[test]
    fn sweep_cell_validates_shape() {
        let cfg = tiny();
        let prepared = prepare(&cfg, 0).unwrap();
        assert!(sweep_cell(&prepared, &cfg, 0, 4, 0).is_err());
        let per = sweep_cell(&prepared, &cfg, 1, 4, 0).unwrap();
        assert!(per.is_finite());
        assert_eq!(per, sweep_cell(&prepared, &cfg, 1, 4, 0).unwrap());
    }
}
