use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use structseq::corpus::Split;
use structseq::experiment::{mean_within_utterance_spearman, score_accuracy_rows, ScoreAccuracyRow};
use structseq::fsdnn::{fsdnn_decode, posteriorgram_corpus};
use structseq::linear::{score_linear, viterbi_decode};
use structseq::metrics::{accuracy, phone_errors};
use structseq::model::{Model, SavedModel};
use structseq::par;
use structseq::sdnn::rescore_decode;
use structseq::{Lattice, Utterance};

use crate::args::{DecodeArgs, EvalArgs};
use crate::error::{CliError, CliResult};
use crate::io;

fn corpus_dim(corpus: &[Utterance]) -> CliResult<usize> {
    corpus
        .first()
        .map(|u| u.x.dim())
        .ok_or_else(|| CliError::Data("split is empty".into()))
}

fn lattices_for(
    corpus_dir: &Path,
    explicit: Option<&Path>,
    split: Split,
    corpus: &[Utterance],
    size: usize,
) -> CliResult<Vec<Lattice>> {
    io::read_split_lattices(&io::lattice_dir(corpus_dir, explicit), split, corpus, size)
}

/// Linear models decode with Viterbi; neural models rescore the N-best
/// lattice paths.
pub fn decode_split(
    saved: &SavedModel,
    corpus: &[Utterance],
    lattices: Option<&[Lattice]>,
    n_best: usize,
) -> CliResult<Vec<Vec<usize>>> {
    let need = || CliError::Data("this model decodes by rescoring and needs lattices".into());
    let hyps = match &saved.model {
        Model::Linear(p) => par::map_collect(corpus, |u| viterbi_decode(&u.x, p)),
        Model::Mlp(p) => {
            let lattices = lattices.ok_or_else(need)?;
            par::map_indexed(corpus.len(), |i| rescore_decode(&corpus[i].x, &lattices[i], p, n_best))
        }
        Model::Fsdnn(p) => {
            let lattices = lattices.ok_or_else(need)?;
            par::map_indexed(corpus.len(), |i| fsdnn_decode(&corpus[i].x, &lattices[i], p, n_best))
        }
    };
    hyps.into_iter()
        .map(|h| h.map(|s| s.into_inner()).map_err(CliError::from))
        .collect()
}

pub fn run_decode(args: &DecodeArgs) -> CliResult<()> {
    if args.n_best == 0 {
        return Err(CliError::Usage("--n-best must be >= 1".into()));
    }
    let split = Split::from(args.split);
    let alphabet = io::read_alphabet(&args.corpus)?;
    let corpus = io::read_split(&args.corpus, &alphabet, split)?;
    let saved = io::read_model(&args.model, corpus_dim(&corpus)?, alphabet.size())?;
    let lattices = match saved.model {
        Model::Linear(_) => None,
        _ => Some(lattices_for(&args.corpus, args.lattices.as_deref(), split, &corpus, alphabet.size())?),
    };
    let hyps = decode_split(&saved, &corpus, lattices.as_deref(), args.n_best)?;
    io::write_hypotheses(&args.out, &alphabet, &hyps)?;
    println!("decoded {} utterances of {} with a {} model", hyps.len(), split.name(), saved.model.kind());
    Ok(())
}

/// Phone error rate in percent over token sequences.
pub fn per_percent(refs: &[Vec<String>], hyps: &[Vec<String>]) -> CliResult<(f64, usize, usize)> {
    if refs.len() != hyps.len() {
        return Err(CliError::Data(format!(
            "{} references but {} hypotheses",
            refs.len(),
            hyps.len()
        )));
    }
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut encode = |s: &[String]| -> Vec<usize> {
        s.iter()
            .map(|t| {
                let next = ids.len();
                *ids.entry(t.clone()).or_insert(next)
            })
            .collect()
    };
    let (mut errors, mut total) = (0, 0);
    for (r, h) in refs.iter().zip(hyps) {
        let (e, n) = phone_errors(&encode(r), &encode(h))?;
        errors += e;
        total += n;
    }
    let per = if total == 0 { 0.0 } else { 100.0 * errors as f64 / total as f64 };
    Ok((per, errors, total))
}

fn linear_rows(corpus: &[Utterance], lattices: &[Lattice], p: &structseq::LinearParams, n: usize) -> CliResult<Vec<ScoreAccuracyRow>> {
    let mut rows = Vec::new();
    for (i, (u, l)) in corpus.iter().zip(lattices).enumerate() {
        for (r, path) in l.nbest(n).into_iter().enumerate() {
            rows.push(ScoreAccuracyRow {
                utterance: i,
                rank: r + 1,
                score: score_linear(&u.x, &path.labels, p)?,
                accuracy: accuracy(&u.y_ref, &path.labels)?,
            });
        }
    }
    Ok(rows)
}

pub fn score_rows(saved: &SavedModel, corpus: &[Utterance], lattices: &[Lattice], n: usize) -> CliResult<Vec<ScoreAccuracyRow>> {
    Ok(match &saved.model {
        Model::Linear(p) => linear_rows(corpus, lattices, p, n)?,
        Model::Mlp(p) => score_accuracy_rows(corpus, lattices, p, n)?,
        Model::Fsdnn(p) => {
            let posteriors = posteriorgram_corpus(corpus, &p.frontend)?;
            score_accuracy_rows(&posteriors, lattices, &p.scorer, n)?
        }
    })
}

pub fn write_score_csv(path: &Path, rows: &[ScoreAccuracyRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["utterance_id", "path_rank", "score", "accuracy"])?;
    for r in rows {
        w.write_record([
            r.utterance.to_string(),
            r.rank.to_string(),
            format!("{:.10e}", r.score),
            format!("{:.6}", r.accuracy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_eval(args: &EvalArgs) -> CliResult<()> {
    let split = Split::from(args.split);
    let hyps = io::read_token_lines(&args.hyps)?;
    let corpus_data = match &args.corpus {
        Some(dir) => {
            let alphabet = io::read_alphabet(dir)?;
            let corpus = io::read_split(dir, &alphabet, split)?;
            Some((dir, alphabet, corpus))
        }
        None => None,
    };
    let refs = match (&args.refs, &corpus_data) {
        (Some(path), _) => io::read_token_lines(path)?,
        (None, Some((_, alphabet, corpus))) => corpus
            .iter()
            .map(|u| u.y_ref.iter().map(|&l| alphabet.name(l).unwrap_or("?").to_string()).collect())
            .collect(),
        (None, None) => return Err(CliError::Usage("give --refs or --corpus".into())),
    };
    let (per, errors, total) = per_percent(&refs, &hyps)?;
    println!("PER {per:.2}");
    println!("utterances {} errors {errors} reference phones {total}", refs.len());

    if let Some(csv_path) = &args.scores_csv {
        let (Some(model), Some((dir, alphabet, corpus))) = (&args.model, &corpus_data) else {
            return Err(CliError::Usage("--scores-csv needs --model and --corpus".into()));
        };
        if args.n_best == 0 {
            return Err(CliError::Usage("--n-best must be >= 1".into()));
        }
        let saved = io::read_model(model, corpus_dim(corpus)?, alphabet.size())?;
        let lattices = lattices_for(dir, args.lattices.as_deref(), split, corpus, alphabet.size())?;
        let rows = score_rows(&saved, corpus, &lattices, args.n_best)?;
        write_score_csv(csv_path, &rows)?;
        let rho = mean_within_utterance_spearman(&rows)?;
        println!("score rows {}", rows.len());
        match rho {
            Some(r) => println!("spearman {r:.4}"),
            None => println!("spearman undefined"),
        }
    }
    Ok(())
}
