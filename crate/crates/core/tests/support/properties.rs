//! Module invariants as property checks. Each entry runs its own
//! deterministic proptest runner so the same list can back individual tests
//! and a single summary line.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use structseq::corpus::{generate_corpus, read_corpus, write_corpus, SyntheticSpec};
use structseq::features::{psi_first_order, psi_len};
use structseq::fsdnn::{
    fsdnn_backward, fsdnn_forward, frontend_forward, posteriorgram_corpus, train_fsdnn, FsdnnParams, FsdnnTrainConfig,
};
use structseq::gradcheck::{check_fsdnn, check_losses, check_mlp, relative_error, GradCheckConfig};
use structseq::lattice::{read_lattices, write_lattices, Lattice};
use structseq::linear::{
    beam_lattice, loss_augmented_decode, score_linear, train_linear, viterbi_decode, LinearParams, LinearTrainConfig,
};
use structseq::metrics::{accuracy, collapse_runs, delta, edit_distance, DistanceKind};
use structseq::model::{read_model, write_model, Model, SavedModel};
use structseq::neural::{init_weights, mlp_backward, mlp_forward, mlp_score, MlpParams, SgdConfig};
use structseq::sdnn::{
    example_loss, loss_approx_acc, loss_max_margin, rescore_decode, train_sdnn, LossKind, SdnnTrainConfig,
};
use structseq::sequence::{one_hot, tensor_product, AcousticSequence, Utterance};

pub const CASES: u32 = 128;

pub type Property = (&'static str, fn(u32) -> Result<(), String>);

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    let mut runner = TestRunner::new_with_rng(config, rng);
    runner.run(&strategy, test).map_err(|e| match e {
        TestError::Fail(why, value) => format!("{why} for {value:?}"),
        TestError::Abort(why) => format!("aborted: {why}"),
    })
}

fn ok(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn e2tc(e: structseq::Error) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

fn random_x(rng: &mut ChaCha8Rng, dim: usize, m: usize) -> AcousticSequence {
    AcousticSequence::new(dim, (0..dim * m).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

fn random_labels(rng: &mut ChaCha8Rng, size: usize, m: usize) -> Vec<usize> {
    (0..m).map(|_| rng.gen_range(0..size)).collect()
}

fn random_linear(rng: &mut ChaCha8Rng, dim: usize, size: usize) -> LinearParams {
    LinearParams::new(dim, size, (0..psi_len(dim, size)).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn all_sequences(size: usize, m: usize) -> Vec<Vec<usize>> {
    let total = size.pow(m as u32);
    (0..total)
        .map(|mut c| {
            let mut y = vec![0; m];
            for slot in y.iter_mut().rev() {
                *slot = c % size;
                c /= size;
            }
            y
        })
        .collect()
}

/// Random shape: `(seed, dim, size, frames)`.
fn shape(max_dim: usize, max_size: usize, max_frames: usize) -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 1..=max_dim, 2..=max_size, 1..=max_frames)
}

fn labels_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..4, 1..12)
}

// sequence

pub fn tensor_l1_norm(cases: u32) -> Result<(), String> {
    let v = prop::collection::vec(0.0f64..10.0, 1..6);
    run(cases, (v.clone(), v), |(a, b)| {
        let t = tensor_product(&a, &b).map_err(e2tc)?;
        let lhs: f64 = t.iter().sum();
        let rhs = a.iter().sum::<f64>() * b.iter().sum::<f64>();
        ok((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), || format!("{lhs} vs {rhs}"))
    })
}

pub fn one_hot_properties(cases: u32) -> Result<(), String> {
    run(cases, (1usize..8, 1usize..8, any::<prop::sample::Index>(), any::<prop::sample::Index>()), |(p, q, i, j)| {
        let (i, j) = (i.index(p), j.index(q));
        let a = one_hot(i, p).map_err(e2tc)?;
        ok(a.iter().sum::<f64>() == 1.0, || "one-hot does not sum to 1".into())?;
        let t = tensor_product(&a, &one_hot(j, q).map_err(e2tc)?).map_err(e2tc)?;
        ok(t == one_hot(i + j * p, p * q).map_err(e2tc)?, || "tensor of one-hots misplaced".into())
    })
}

// features

pub fn psi_relabeling(cases: u32) -> Result<(), String> {
    run(cases, shape(4, 5, 10), |(seed, dim, size, m)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_x(&mut rng, dim, m);
        let y = random_labels(&mut rng, size, m);
        let mut perm: Vec<usize> = (0..size).collect();
        for i in (1..size).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let py: Vec<usize> = y.iter().map(|&l| perm[l]).collect();
        let a = psi_first_order(&x, &y, size).map_err(e2tc)?;
        let b = psi_first_order(&x, &py, size).map_err(e2tc)?;
        for k in 0..size {
            ok(a.observation()[k * dim..(k + 1) * dim] == b.observation()[perm[k] * dim..(perm[k] + 1) * dim], || {
                format!("observation block {k} not moved to {}", perm[k])
            })?;
            for k2 in 0..size {
                ok(a.transitions()[k + k2 * size] == b.transitions()[perm[k] + perm[k2] * size], || {
                    format!("transition ({k},{k2}) not moved")
                })?;
            }
        }
        Ok(())
    })
}

pub fn psi_transition_total(cases: u32) -> Result<(), String> {
    run(cases, shape(3, 6, 30), |(seed, dim, size, m)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = psi_first_order(&random_x(&mut rng, dim, m), &random_labels(&mut rng, size, m), size).map_err(e2tc)?;
        let total: f64 = psi.transitions().iter().sum();
        ok(total == (m - 1) as f64, || format!("transition total {total} for M={m}"))
    })
}

pub fn psi_concatenation(cases: u32) -> Result<(), String> {
    run(cases, (shape(3, 4, 8), 1usize..8), |((seed, dim, size, m1), m2)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x1, x2) = (random_x(&mut rng, dim, m1), random_x(&mut rng, dim, m2));
        let (y1, y2) = (random_labels(&mut rng, size, m1), random_labels(&mut rng, size, m2));
        let mut data = x1.as_slice().to_vec();
        data.extend_from_slice(x2.as_slice());
        let x = AcousticSequence::new(dim, data).unwrap();
        let y: Vec<usize> = y1.iter().chain(&y2).copied().collect();
        let whole = psi_first_order(&x, &y, size).map_err(e2tc)?;
        let a = psi_first_order(&x1, &y1, size).map_err(e2tc)?;
        let b = psi_first_order(&x2, &y2, size).map_err(e2tc)?;
        let boundary = dim * size + y1[m1 - 1] + y2[0] * size;
        for i in 0..whole.values.len() {
            let diff = whole.values[i] - a.values[i] - b.values[i];
            let expected = if i == boundary { 1.0 } else { 0.0 };
            ok((diff - expected).abs() <= 1e-12, || format!("index {i}: difference {diff}"))?;
        }
        Ok(())
    })
}

pub fn psi_linear_in_x(cases: u32) -> Result<(), String> {
    run(cases, (shape(4, 4, 10), -4i32..=4), |((seed, dim, size, m), e)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_x(&mut rng, dim, m);
        let y = random_labels(&mut rng, size, m);
        let alpha = rng.gen_range(0.5..2.0) * 2f64.powi(e);
        let a = psi_first_order(&x, &y, size).map_err(e2tc)?;
        let b = psi_first_order(&x.scaled(alpha), &y, size).map_err(e2tc)?;
        for (u, v) in a.observation().iter().zip(b.observation()) {
            ok((alpha * u - v).abs() <= 1e-12 * (1.0 + v.abs()), || format!("{} vs {v}", alpha * u))?;
        }
        ok(a.transitions() == b.transitions(), || "transition half changed".into())
    })
}

// metrics

pub fn delta_identity(cases: u32) -> Result<(), String> {
    run(cases, labels_strategy(), |y| {
        for kind in [DistanceKind::PhoneEdit, DistanceKind::FrameError] {
            ok(delta(&y, &y, kind).map_err(e2tc)? == 0.0, || format!("{kind:?} nonzero"))?;
        }
        Ok(())
    })
}

pub fn delta_symmetry(cases: u32) -> Result<(), String> {
    run(cases, (1usize..12).prop_flat_map(|m| (prop::collection::vec(0usize..4, m), prop::collection::vec(0usize..4, m))), |(a, b)| {
        let fab = delta(&a, &b, DistanceKind::FrameError).map_err(e2tc)?;
        let fba = delta(&b, &a, DistanceKind::FrameError).map_err(e2tc)?;
        ok(fab == fba, || "frame error asymmetric".into())?;
        let lhs = delta(&a, &b, DistanceKind::PhoneEdit).map_err(e2tc)? * collapse_runs(&a).unwrap().len() as f64;
        let rhs = delta(&b, &a, DistanceKind::PhoneEdit).map_err(e2tc)? * collapse_runs(&b).unwrap().len() as f64;
        ok((lhs - rhs).abs() < 1e-12, || format!("{lhs} vs {rhs}"))
    })
}

pub fn edit_triangle(cases: u32) -> Result<(), String> {
    let s = prop::collection::vec(0usize..4, 0..10);
    run(cases, (s.clone(), s.clone(), s), |(a, b, c)| {
        let (ab, bc, ac) = (edit_distance(&a, &b), edit_distance(&b, &c), edit_distance(&a, &c));
        ok(ac <= ab + bc, || format!("{ac} > {ab} + {bc}"))
    })
}

pub fn accuracy_range(cases: u32) -> Result<(), String> {
    run(cases, (labels_strategy(), labels_strategy()), |(a, b)| {
        let c = accuracy(&a, &b).map_err(e2tc)?;
        ok((0.0..=1.0).contains(&c), || format!("accuracy {c}"))
    })
}

// linear

pub fn linear_decomposition(cases: u32) -> Result<(), String> {
    run(cases, shape(4, 5, 12), |(seed, dim, size, m)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_x(&mut rng, dim, m);
        let y = random_labels(&mut rng, size, m);
        let p = random_linear(&mut rng, dim, size);
        let emission: f64 = (0..m)
            .map(|j| p.observation(y[j]).iter().zip(x.frame(j)).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        let transition: f64 = y.windows(2).map(|w| p.transition(w[0], w[1])).sum();
        let s = score_linear(&x, &y, &p).map_err(e2tc)?;
        ok((s - emission - transition).abs() < 1e-10, || format!("{s} vs {}", emission + transition))
    })
}

pub fn viterbi_exhaustive(cases: u32) -> Result<(), String> {
    run(cases, shape(3, 4, 6), |(seed, dim, size, m)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_x(&mut rng, dim, m);
        let p = random_linear(&mut rng, dim, size);
        let mut best: Option<(f64, Vec<usize>)> = None;
        for y in all_sequences(size, m) {
            let s = score_linear(&x, &y, &p).unwrap();
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, y));
            }
        }
        let v = viterbi_decode(&x, &p).map_err(e2tc)?;
        let best = best.unwrap().1;
        ok(*v == best[..], || format!("viterbi {:?} vs exhaustive {best:?}", &*v))
    })
}

pub fn viterbi_scale_invariance(cases: u32) -> Result<(), String> {
    run(cases, (shape(3, 5, 12), -6i32..=6), |((seed, dim, size, m), e)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_x(&mut rng, dim, m);
        let p = random_linear(&mut rng, dim, size);
        let scaled = LinearParams::new(dim, size, p.theta.iter().map(|t| t * 2f64.powi(e)).collect()).unwrap();
        ok(viterbi_decode(&x, &p).map_err(e2tc)? == viterbi_decode(&x, &scaled).map_err(e2tc)?, || {
            "decode changed under scaling".into()
        })
    })
}

pub fn loss_augmented_dominates(cases: u32) -> Result<(), String> {
    run(cases, shape(3, 5, 12), |(seed, dim, size, m)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_x(&mut rng, dim, m);
        let y_ref = random_labels(&mut rng, size, m);
        let p = random_linear(&mut rng, dim, size);
        let objective = |y: &[usize]| {
            score_linear(&x, y, &p).unwrap() + delta(&y_ref, y, DistanceKind::FrameError).unwrap()
        };
        let la = loss_augmented_decode(&x, &y_ref, &p).map_err(e2tc)?;
        let v = viterbi_decode(&x, &p).map_err(e2tc)?;
        ok(objective(&la) >= objective(&v) - 1e-9, || "augmented objective below viterbi's".into())
    })
}

// neural

fn random_mlp(rng: &mut ChaCha8Rng, input: usize, output: usize) -> MlpParams {
    let mut sizes = vec![input];
    sizes.extend((0..rng.gen_range(1..=3)).map(|_| rng.gen_range(1..6)));
    sizes.push(output);
    init_weights(&sizes, rng.gen()).unwrap()
}

pub fn mlp_forward_properties(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..8), |(seed, input)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = random_mlp(&mut rng, input, 1);
        for w in &mut p.weights {
            for v in &mut w.data {
                *v *= 3.0;
            }
        }
        let before = p.clone();
        let x: Vec<f64> = (0..input).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (s1, t1) = mlp_forward(&x, &p).map_err(e2tc)?;
        let (s2, t2) = mlp_forward(&x, &p).map_err(e2tc)?;
        ok(s1.to_bits() == s2.to_bits() && t1.logits == t2.logits, || "forward not deterministic".into())?;
        ok(p == before, || "forward mutated params".into())?;
        ok(s1 > 0.0 && s1 < 1.0, || format!("score {s1} outside (0,1)"))
    })
}

pub fn mlp_gradient(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..6), |(seed, input)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_mlp(&mut rng, input, 1);
        let x: Vec<f64> = (0..input).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (_, trace) = mlp_forward(&x, &p).map_err(e2tc)?;
        let g = mlp_backward(&trace, &p, 1.0).map_err(e2tc)?;
        let eps = 1e-5;
        let mut q = p.clone();
        for i in 0..p.num_params() {
            let orig = q.param(i);
            *q.param_mut(i) = orig + eps;
            let plus = mlp_score(&x, &q).unwrap();
            *q.param_mut(i) = orig - eps;
            let minus = mlp_score(&x, &q).unwrap();
            *q.param_mut(i) = orig;
            let fd = (plus - minus) / (2.0 * eps);
            let rel = relative_error(g.weights.param(i), fd);
            ok(rel < 1e-4, || format!("weight {i}: relative error {rel}"))?;
        }
        Ok(())
    })
}

// lattice

pub fn lattice_nbest_properties(cases: u32) -> Result<(), String> {
    run(cases, (shape(2, 4, 6), 1usize..4, 1usize..40), |((seed, dim, size, m), beam, n)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = beam_lattice(&random_x(&mut rng, dim, m), &random_linear(&mut rng, dim, size), beam).map_err(e2tc)?;
        let paths = lat.nbest(n);
        ok(paths.len() as u128 == (n as u128).min(lat.path_count()), || "wrong n-best size".into())?;
        for w in paths.windows(2) {
            ok(w[0].path_score >= w[1].path_score, || "scores increase".into())?;
            ok(w[0].labels != w[1].labels, || "duplicate path".into())?;
        }
        let mut seen: Vec<_> = paths.iter().map(|p| p.labels.clone()).collect();
        seen.sort();
        seen.dedup();
        ok(seen.len() == paths.len(), || "duplicate path".into())?;
        for p in &paths {
            ok(p.labels.len() == m && p.labels.validate(size).is_ok(), || "invalid path".into())?;
        }
        Ok(())
    })
}

pub fn lattice_full_enumeration(cases: u32) -> Result<(), String> {
    run(cases, shape(2, 3, 5), |(seed, dim, size, m)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = beam_lattice(&random_x(&mut rng, dim, m), &random_linear(&mut rng, dim, size), size).map_err(e2tc)?;
        let mut got: Vec<Vec<usize>> = lat.nbest(usize::MAX).into_iter().map(|p| p.labels.into_inner()).collect();
        got.sort();
        ok(got == all_sequences(size, m), || "enumeration differs from all sequences".into())
    })
}

// sdnn

pub fn margin_zero_iff_satisfied(cases: u32) -> Result<(), String> {
    let pair = (0.0f64..1.0, prop_oneof![Just(0.0), 0.0f64..2.0]);
    run(cases, (0.0f64..1.0, prop::collection::vec(pair, 1..6)), |(pos, negs)| {
        let m = loss_max_margin(pos, &negs);
        let satisfied = negs.iter().all(|&(n, d)| pos - n >= d);
        ok((m.loss == 0.0) == satisfied, || format!("loss {} with satisfied={satisfied}", m.loss))
    })
}

pub fn approx_acc_nonnegative(cases: u32) -> Result<(), String> {
    run(cases, (0.0f64..1.0, 0.0f64..1.0), |(score, target)| {
        let (l, _) = loss_approx_acc(score, target);
        ok(l >= 0.0, || "negative loss".into())?;
        ok((l == 0.0) == (score == target), || format!("zero-loss mismatch at {score} vs {target}"))?;
        ok(loss_approx_acc(target, target).0 == 0.0, || "nonzero at target".into())
    })
}

pub fn rescore_monotone_in_n(cases: u32) -> Result<(), String> {
    run(cases, (shape(3, 4, 6), 1usize..10, 1usize..10), |((seed, dim, size, m), n1, extra)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_x(&mut rng, dim, m);
        let lat = beam_lattice(&x, &random_linear(&mut rng, dim, size), 3).map_err(e2tc)?;
        let scorer = random_mlp(&mut rng, psi_len(dim, size), 1);
        let score = |y: &[usize]| mlp_score(&psi_first_order(&x, y, size).unwrap().values, &scorer).unwrap();
        let a = score(&rescore_decode(&x, &lat, &scorer, n1).map_err(e2tc)?);
        let b = score(&rescore_decode(&x, &lat, &scorer, n1 + extra).map_err(e2tc)?);
        ok(b >= a, || format!("score fell from {a} to {b}"))
    })
}

pub fn loss_gradient(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let cfg = GradCheckConfig {
            configs: 2,
            seed,
            ..Default::default()
        };
        let r = check_losses(&cfg).map_err(e2tc)?;
        ok(r.passed, || format!("max relative error {} at {:?}", r.max_rel_error, r.worst))?;
        let (_, d) = example_loss(LossKind::ApproxAccuracy, 0.5, &[(0.2, 0.5)]);
        ok(d.len() == 2, || "derivative count".into())
    })
}

// fsdnn

pub fn posteriorgram_rows(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..6, 2usize..6, 1usize..8), |(seed, raw, size, m)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fe = random_mlp(&mut rng, raw, size);
        for w in &mut fe.weights {
            for v in &mut w.data {
                *v *= 5.0;
            }
        }
        let p = frontend_forward(&random_x(&mut rng, raw, m), &fe).map_err(e2tc)?;
        for row in p.frames() {
            let s: f64 = row.iter().sum();
            ok((s - 1.0).abs() <= 1e-12, || format!("row sums to {s}"))?;
        }
        Ok(())
    })
}

fn small_raw_corpus(rng: &mut ChaCha8Rng, raw: usize, size: usize, n: usize) -> Vec<Utterance> {
    (0..n)
        .map(|_| {
            let m = rng.gen_range(2..6);
            Utterance::new(random_x(rng, raw, m), random_labels(rng, size, m).into()).unwrap()
        })
        .collect()
}

pub fn frozen_frontend_equivalence(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 0usize..2), |(seed, loss)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (raw, size) = (3, 3);
        let corpus = small_raw_corpus(&mut rng, raw, size, 4);
        let frontend = random_mlp(&mut rng, raw, size);
        let scorer = init_weights(&[psi_len(size, size), 4, 1], rng.gen()).unwrap();
        let post = posteriorgram_corpus(&corpus, &frontend).map_err(e2tc)?;
        let base = LinearParams::zeros(size, size);
        let lattices: Vec<Lattice> = post.iter().map(|u| beam_lattice(&u.x, &base, 2).unwrap()).collect();
        let sdnn = SdnnTrainConfig {
            loss: if loss == 0 { LossKind::MaxMargin } else { LossKind::ApproxAccuracy },
            epochs: 2,
            batch_size: 2,
            seed,
            sgd: SgdConfig {
                learning_rate: 0.1,
                ..SgdConfig::default()
            },
            ..SdnnTrainConfig::default()
        };
        let frozen = train_sdnn(&post, &lattices, scorer.clone(), &sdnn, None).map_err(e2tc)?;
        let joint_cfg = FsdnnTrainConfig {
            sdnn: sdnn.clone(),
            frontend_sgd: SgdConfig {
                learning_rate: 0.0,
                ..SgdConfig::default()
            },
        };
        let params = FsdnnParams::new(frontend.clone(), scorer).map_err(e2tc)?;
        let joint = train_fsdnn(&corpus, &lattices, params, &joint_cfg, None).map_err(e2tc)?;
        let bits = |p: &MlpParams| -> Vec<u64> { p.weights.iter().flat_map(|w| w.data.iter().map(|v| v.to_bits())).collect() };
        ok(bits(&frozen.params) == bits(&joint.params.scorer), || "scorer weights differ".into())?;
        ok(joint.params.frontend == frontend, || "front end moved at rate 0".into())?;
        for (a, b) in frozen.log.iter().zip(&joint.log) {
            ok(a.loss.to_bits() == b.structured.loss.to_bits(), || format!("epoch loss {} vs {}", a.loss, b.structured.loss))?;
        }
        Ok(())
    })
}

pub fn fsdnn_gradient(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let cfg = GradCheckConfig {
            configs: 2,
            seed,
            ..Default::default()
        };
        let r = check_fsdnn(&cfg).map_err(e2tc)?;
        ok(r.passed, || format!("max relative error {} at {:?}", r.max_rel_error, r.worst))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = FsdnnParams::new(random_mlp(&mut rng, 2, 3), init_weights(&[psi_len(3, 3), 2, 1], 1).unwrap()).unwrap();
        let (_, t) = fsdnn_forward(&random_x(&mut rng, 2, 3), &[0, 1, 2], &p).map_err(e2tc)?;
        let g = fsdnn_backward(&t, &p, 0.0).map_err(e2tc)?;
        ok(g.frontend.squared_norm() == 0.0 && g.scorer.squared_norm() == 0.0, || "upstream 0 gave gradient".into())
    })
}

pub fn mlp_gradient_suite(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let r = check_mlp(&GradCheckConfig {
            configs: 3,
            seed,
            ..Default::default()
        })
        .map_err(e2tc)?;
        ok(r.passed, || format!("max relative error {}", r.max_rel_error))
    })
}

// corpus and persistence

pub fn corpus_reproducible(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 2usize..5, 1usize..4, 1usize..3), |(seed, size, dim, comps)| {
        let spec = SyntheticSpec::mixture(size, dim, comps, 0.3, seed).map_err(e2tc)?;
        let a = generate_corpus(&spec, 5).map_err(e2tc)?;
        let b = generate_corpus(&spec, 5).map_err(e2tc)?;
        ok(a == b, || "corpus differs between runs".into())
    })
}

pub fn corpus_round_trip(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 2usize..5, 1usize..4), |(seed, size, dim)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let utts: Vec<Utterance> = (0..3)
            .map(|_| {
                let m = rng.gen_range(1..5);
                let data: Vec<f64> = (0..m * dim).map(|_| rng.gen::<f64>() * 10f64.powi(rng.gen_range(-30..30))).collect();
                Utterance::new(AcousticSequence::new(dim, data).unwrap(), random_labels(&mut rng, size, m).into()).unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &utts).map_err(e2tc)?;
        let back = read_corpus(&buf[..], size).map_err(e2tc)?;
        ok(back == utts, || "corpus changed".into())
    })
}

pub fn model_round_trip(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..4, 2usize..4, 0usize..3), |(seed, dim, size, kind)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = match kind {
            0 => Model::Linear(random_linear(&mut rng, dim, size)),
            1 => Model::Mlp(random_mlp(&mut rng, psi_len(dim, size), 1)),
            _ => Model::Fsdnn(
                FsdnnParams::new(random_mlp(&mut rng, dim, size), random_mlp(&mut rng, psi_len(size, size), 1)).unwrap(),
            ),
        };
        let saved = SavedModel {
            model,
            dim,
            size,
            epochs_trained: rng.gen_range(0..100),
        };
        let mut buf = Vec::new();
        write_model(&mut buf, &saved).map_err(e2tc)?;
        let back = read_model(&buf[..]).map_err(e2tc)?;
        let mut again = Vec::new();
        write_model(&mut again, &back).map_err(e2tc)?;
        ok(back == saved && buf == again, || "model changed".into())
    })
}

pub fn lattice_round_trip(cases: u32) -> Result<(), String> {
    run(cases, (shape(2, 4, 6), 1usize..4), |((seed, dim, size, m), beam)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lats: Vec<Lattice> = (0..2)
            .map(|_| beam_lattice(&random_x(&mut rng, dim, m), &random_linear(&mut rng, dim, size), beam).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_lattices(&mut buf, &lats).map_err(e2tc)?;
        let back = read_lattices(&buf[..]).map_err(e2tc)?;
        ok(back == lats, || "lattices changed".into())
    })
}

pub fn training_deterministic(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = small_raw_corpus(&mut rng, 2, 3, 4);
        let cfg = LinearTrainConfig {
            epochs: 2,
            seed,
            ..Default::default()
        };
        let a = train_linear(&corpus, 3, &cfg).map_err(e2tc)?;
        let b = train_linear(&corpus, 3, &cfg).map_err(e2tc)?;
        ok(a.params == b.params && a.objective == b.objective, || "linear training not deterministic".into())?;
        let lats: Vec<Lattice> = corpus.iter().map(|u| beam_lattice(&u.x, &a.params, 2).unwrap()).collect();
        let init = init_weights(&[psi_len(2, 3), 3, 1], seed).unwrap();
        let scfg = SdnnTrainConfig {
            epochs: 2,
            seed,
            batch_size: 2,
            ..Default::default()
        };
        let s1 = train_sdnn(&corpus, &lats, init.clone(), &scfg, None).map_err(e2tc)?;
        let s2 = train_sdnn(&corpus, &lats, init, &scfg, None).map_err(e2tc)?;
        ok(s1.params == s2.params && s1.log == s2.log, || "scorer training not deterministic".into())
    })
}

pub fn all() -> Vec<Property> {
    vec![
        ("tensor product L1 norm is the product of norms", tensor_l1_norm),
        ("one-hot sums and tensor index placement", one_hot_properties),
        ("relabeling the alphabet permutes feature blocks", psi_relabeling),
        ("transition counts sum to M-1", psi_transition_total),
        ("features add over concatenation up to one transition", psi_concatenation),
        ("observation half is linear in the frames", psi_linear_in_x),
        ("distance of a sequence to itself is zero", delta_identity),
        ("frame error symmetric, phone edit scaled symmetric", delta_symmetry),
        ("edit distance triangle inequality", edit_triangle),
        ("accuracy stays in [0, 1]", accuracy_range),
        ("linear score equals emission plus transition terms", linear_decomposition),
        ("viterbi equals exhaustive argmax", viterbi_exhaustive),
        ("viterbi unchanged by positive scaling", viterbi_scale_invariance),
        ("loss-augmented objective dominates viterbi's", loss_augmented_dominates),
        ("network forward deterministic, pure, score in (0,1)", mlp_forward_properties),
        ("network gradient matches finite differences", mlp_gradient),
        ("network gradient suite over random depths", mlp_gradient_suite),
        ("n-best sorted, valid and duplicate-free", lattice_nbest_properties),
        ("unbounded n-best enumerates every path", lattice_full_enumeration),
        ("margin loss zero iff every inequality holds", margin_zero_iff_satisfied),
        ("approx-accuracy loss nonnegative, zero only at target", approx_acc_nonnegative),
        ("larger n never lowers the rescored winner", rescore_monotone_in_n),
        ("loss gradients match finite differences", loss_gradient),
        ("posteriorgram rows sum to one", posteriorgram_rows),
        ("frozen front end reproduces scorer training bit for bit", frozen_frontend_equivalence),
        ("full composition gradients match finite differences", fsdnn_gradient),
        ("corpus generation reproducible", corpus_reproducible),
        ("corpus text round trip exact", corpus_round_trip),
        ("model file round trip exact", model_round_trip),
        ("lattice text round trip exact", lattice_round_trip),
        ("training deterministic given seed", training_deterministic),
    ]
}
