//! Central finite-difference checks of every analytic gradient: the scorer
//! network alone, the scorer under each training loss, and the full
//! front-end + Ψ + scorer composition.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::features::{psi_first_order, psi_len};
use crate::fsdnn::{fsdnn_backward_with, fsdnn_forward, FsdnnParams};
use crate::metrics::{delta, DistanceKind};
use crate::neural::{init_weights, mlp_backward_with, mlp_forward, mlp_score, MlpParams, SigmoidDerivative};
use crate::sdnn::{example_loss, LossKind};
use crate::sequence::AcousticSequence;

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub configs: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Derivative used by the analytic pass. `Broken` must make checks fail.
    pub derivative: SigmoidDerivative,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            configs: 20,
            epsilon: 1e-5,
            tolerance: 1e-4,
            seed: 0,
            derivative: SigmoidDerivative::Exact,
        }
    }
}

/// `|a − b| / max(|a|, |b|, 1e-5)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coordinate {
    pub config: usize,
    /// Which parameter group, e.g. `scorer` or `frontend`.
    pub group: &'static str,
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "config {} {} W{}[{},{}]: analytic {:.6e} numeric {:.6e}",
            self.config, self.group, self.layer, self.row, self.col, self.analytic, self.numeric
        )
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub name: &'static str,
    pub configs: usize,
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub worst: Option<Coordinate>,
    pub passed: bool,
}

struct Tracker {
    tolerance: f64,
    coordinates: usize,
    max_rel_error: f64,
    worst: Option<Coordinate>,
}

impl Tracker {
    fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            coordinates: 0,
            max_rel_error: 0.0,
            worst: None,
        }
    }

    /// Compares every weight of `analytic` against finite differences of `f`
    /// over the same weights in `params`.
    fn compare<F>(&mut self, config: usize, group: &'static str, params: &MlpParams, analytic: &MlpParams, eps: f64, mut f: F)
    where
        F: FnMut(&MlpParams) -> Result<f64>,
    {
        let mut probe = params.clone();
        let mut index = 0;
        for (layer, w) in params.weights.iter().enumerate() {
            for row in 0..w.rows {
                for col in 0..w.cols {
                    let original = probe.param(index);
                    *probe.param_mut(index) = original + eps;
                    let plus = f(&probe);
                    *probe.param_mut(index) = original - eps;
                    let minus = f(&probe);
                    *probe.param_mut(index) = original;
                    let numeric = match (plus, minus) {
                        (Ok(p), Ok(m)) => (p - m) / (2.0 * eps),
                        _ => f64::NAN,
                    };
                    let a = analytic.param(index);
                    let rel = relative_error(a, numeric);
                    let rel = if rel.is_nan() { f64::INFINITY } else { rel };
                    self.coordinates += 1;
                    if rel > self.max_rel_error || self.worst.is_none() {
                        self.max_rel_error = self.max_rel_error.max(rel);
                        self.worst = Some(Coordinate {
                            config,
                            group,
                            layer,
                            row,
                            col,
                            analytic: a,
                            numeric,
                        });
                    }
                    index += 1;
                }
            }
        }
    }

    fn finish(self, name: &'static str, configs: usize) -> GradCheckReport {
        GradCheckReport {
            name,
            configs,
            coordinates: self.coordinates,
            passed: self.max_rel_error <= self.tolerance,
            max_rel_error: self.max_rel_error,
            worst: self.worst,
        }
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn random_net(rng: &mut ChaCha8Rng, input: usize, output: usize, hidden_layers: usize) -> Result<MlpParams> {
    let mut sizes = vec![input];
    sizes.extend((0..hidden_layers).map(|_| rng.gen_range(2..7)));
    sizes.push(output);
    let mut p = init_weights(&sizes, rng.gen())?;
    // non-zero biases so every column is exercised
    for w in &mut p.weights {
        for r in 0..w.rows {
            w.data[r * w.cols + w.cols - 1] = rng.gen_range(-0.5..0.5);
        }
    }
    Ok(p)
}

/// Scorer network alone: gradient of `upstream · F(x)` over its weights.
pub fn check_mlp(config: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = Tracker::new(config.tolerance);
    for c in 0..config.configs {
        let hidden = 1 + c % 3;
        let input_len = rng.gen_range(2..9);
        let params = random_net(&mut rng, input_len, 1, hidden)?;
        let input = random_vec(&mut rng, input_len, 2.0);
        let upstream = rng.gen_range(0.5..2.0);
        let (_, trace) = mlp_forward(&input, &params)?;
        let grads = mlp_backward_with(&trace, &params, upstream, config.derivative)?;
        t.compare(c, "scorer", &params, &grads.weights, config.epsilon, |p| {
            Ok(upstream * mlp_score(&input, p)?)
        });
    }
    Ok(t.finish("mlp", config.configs))
}

/// Scorer under each training loss over a positive and three negatives.
/// Configurations with a hinge argument within 1e-3 of its kink are
/// re-drawn so the finite difference never straddles it.
pub fn check_losses(config: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x1055);
    let mut t = Tracker::new(config.tolerance);
    let mut c = 0;
    while c < config.configs {
        let kind = if c % 2 == 0 { LossKind::MaxMargin } else { LossKind::ApproxAccuracy };
        let (dim, size, m) = (rng.gen_range(1..4), rng.gen_range(2..4), rng.gen_range(2..6));
        let x = AcousticSequence::new(dim, random_vec(&mut rng, dim * m, 1.0))?;
        let params = random_net(&mut rng, psi_len(dim, size), 1, 1 + c % 2)?;
        let mut seqs: Vec<Vec<usize>> = vec![(0..m).map(|_| rng.gen_range(0..size)).collect()];
        while seqs.len() < 4 {
            let s: Vec<usize> = (0..m).map(|_| rng.gen_range(0..size)).collect();
            if s != seqs[0] {
                seqs.push(s);
            }
        }
        let deltas = seqs[1..]
            .iter()
            .map(|s| delta(&seqs[0], s, DistanceKind::PhoneEdit))
            .collect::<Result<Vec<_>>>()?;
        let feats = seqs
            .iter()
            .map(|s| Ok(psi_first_order(&x, s, size)?.values))
            .collect::<Result<Vec<_>>>()?;
        let loss_at = |p: &MlpParams| -> Result<(f64, Vec<f64>)> {
            let scores = feats.iter().map(|f| mlp_score(f, p)).collect::<Result<Vec<_>>>()?;
            let negs: Vec<(f64, f64)> = scores[1..].iter().copied().zip(deltas.iter().copied()).collect();
            Ok(example_loss(kind, scores[0], &negs))
        };
        if kind == LossKind::MaxMargin {
            let scores = feats.iter().map(|f| mlp_score(f, &params)).collect::<Result<Vec<_>>>()?;
            let near_kink = scores[1..]
                .iter()
                .zip(&deltas)
                .any(|(n, d)| (n + d - scores[0]).abs() < 1e-3);
            if near_kink {
                continue;
            }
        }
        let (_, d_scores) = loss_at(&params)?;
        let mut analytic = params.zeros_like();
        for (f, d) in feats.iter().zip(d_scores) {
            let (_, trace) = mlp_forward(f, &params)?;
            analytic.add_scaled(&mlp_backward_with(&trace, &params, d, config.derivative)?.weights, 1.0);
        }
        t.compare(c, "scorer", &params, &analytic, config.epsilon, |p| Ok(loss_at(p)?.0));
        c += 1;
    }
    Ok(t.finish("losses", config.configs))
}

/// Full composition: raw frames → front end → softmax → Ψ → scorer, checked
/// over both networks' weights. Scorer depth alternates between 1 and 2.
pub fn check_fsdnn(config: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xf5d);
    let mut t = Tracker::new(config.tolerance);
    for c in 0..config.configs {
        let (raw, size, m) = (rng.gen_range(2..5), rng.gen_range(2..4), rng.gen_range(2..6));
        let frontend = random_net(&mut rng, raw, size, 1 + (c / 2) % 2)?;
        let scorer = random_net(&mut rng, psi_len(size, size), 1, 1 + c % 2)?;
        let params = FsdnnParams::new(frontend, scorer)?;
        let x = AcousticSequence::new(raw, random_vec(&mut rng, raw * m, 1.5))?;
        let y: Vec<usize> = (0..m).map(|_| rng.gen_range(0..size)).collect();
        let upstream = rng.gen_range(0.5..2.0);
        let (_, trace) = fsdnn_forward(&x, &y, &params)?;
        let grads = fsdnn_backward_with(&trace, &params, upstream, config.derivative)?;
        t.compare(c, "frontend", &params.frontend, &grads.frontend, config.epsilon, |p| {
            let q = FsdnnParams {
                frontend: p.clone(),
                scorer: params.scorer.clone(),
            };
            Ok(upstream * fsdnn_forward(&x, &y, &q)?.0)
        });
        t.compare(c, "scorer", &params.scorer, &grads.scorer, config.epsilon, |p| {
            let q = FsdnnParams {
                frontend: params.frontend.clone(),
                scorer: p.clone(),
            };
            Ok(upstream * fsdnn_forward(&x, &y, &q)?.0)
        });
    }
    Ok(t.finish("fsdnn", config.configs))
}

pub fn run_all(config: &GradCheckConfig) -> Result<Vec<GradCheckReport>> {
    Ok(vec![check_mlp(config)?, check_losses(config)?, check_fsdnn(config)?])
}
