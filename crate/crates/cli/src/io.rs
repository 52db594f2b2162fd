//! Directory layout: a corpus directory holds `alphabet.txt` and one
//! `<split>.txt` per split; a lattice directory holds `<split>.lat`.
//! Hypothesis files hold one utterance per line as space-separated phone
//! names, one per frame.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use structseq::corpus::{load_alphabet, load_corpus, Split};
use structseq::lattice::read_lattices;
use structseq::model::{load_model, SavedModel};
use structseq::{Lattice, PhonemeAlphabet, Utterance};

use crate::error::{CliError, CliResult};

pub fn alphabet_path(dir: &Path) -> PathBuf {
    dir.join("alphabet.txt")
}

pub fn split_path(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{}.txt", split.name()))
}

pub fn lattice_path(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{}.lat", split.name()))
}

pub fn lattice_dir(corpus: &Path, explicit: Option<&Path>) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| corpus.join("lattices"))
}

fn with_path<T>(path: &Path, r: structseq::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_alphabet(dir: &Path) -> CliResult<PhonemeAlphabet> {
    let path = alphabet_path(dir);
    with_path(&path, load_alphabet(&path))
}

pub fn read_split(dir: &Path, alphabet: &PhonemeAlphabet, split: Split) -> CliResult<Vec<Utterance>> {
    let path = split_path(dir, split);
    with_path(&path, load_corpus(&path, alphabet.size()))
}

/// Lattices of one split, checked against its utterances.
pub fn read_split_lattices(dir: &Path, split: Split, corpus: &[Utterance], size: usize) -> CliResult<Vec<Lattice>> {
    let path = lattice_path(dir, split);
    let file = File::open(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let lattices = with_path(&path, read_lattices(BufReader::new(file)))?;
    if lattices.len() != corpus.len() {
        return Err(CliError::Data(format!(
            "{}: {} lattices for {} utterances",
            path.display(),
            lattices.len(),
            corpus.len()
        )));
    }
    for (i, (l, u)) in lattices.iter().zip(corpus).enumerate() {
        if l.size() != size || l.frames() != u.len() {
            return Err(CliError::Data(format!(
                "{}: lattice {i} is K={} M={}, utterance has K={size} M={}",
                path.display(),
                l.size(),
                l.frames(),
                u.len()
            )));
        }
    }
    Ok(lattices)
}

/// Loads a model and checks it against the corpus shape.
pub fn read_model(path: &Path, dim: usize, size: usize) -> CliResult<SavedModel> {
    let saved = with_path(path, load_model(path))?;
    if saved.dim != dim || saved.size != size {
        return Err(CliError::Data(format!(
            "{}: model expects D={} K={}, corpus has D={dim} K={size}",
            path.display(),
            saved.dim,
            saved.size
        )));
    }
    Ok(saved)
}

pub fn write_hypotheses(path: &Path, alphabet: &PhonemeAlphabet, hyps: &[Vec<usize>]) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for h in hyps {
        let names: Vec<&str> = h.iter().map(|&l| alphabet.name(l).unwrap_or("?")).collect();
        writeln!(out, "{}", names.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_token_lines(path: &Path) -> CliResult<Vec<Vec<String>>> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let tokens: Vec<String> = line?.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(CliError::Data(format!("{}: line {} is empty", path.display(), i + 1)));
        }
        out.push(tokens);
    }
    Ok(out)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}
