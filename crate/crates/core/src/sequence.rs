//! Alphabets, acoustic and label sequences, and the vector primitives the
//! feature map is assembled from.

use std::collections::HashSet;
use std::ops::Deref;

use crate::error::{Error, Result};

/// A phoneme inventory of `K >= 2` distinct symbols. Labels are zero-based
/// indices into `names`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhonemeAlphabet {
    names: Vec<String>,
}

impl PhonemeAlphabet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::Config(format!(
                "alphabet needs at least 2 symbols, got {}",
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid phoneme symbol {name:?}")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Config(format!("duplicate phoneme symbol {name:?}")));
            }
        }
        Ok(Self { names })
    }

    /// Alphabet with generated symbols `p0`, `p1`, ...
    pub fn numbered(size: usize) -> Result<Self> {
        Self::new((0..size).map(|k| format!("p{k}")).collect())
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, label: usize) -> Option<&str> {
        self.names.get(label).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn check(&self, label: usize) -> Result<()> {
        check_label(label, self.size())
    }
}

pub(crate) fn check_label(label: usize, size: usize) -> Result<()> {
    if label < size {
        Ok(())
    } else {
        Err(Error::InvalidLabel { label, size })
    }
}

/// `M` frames of `D`-dimensional finite features, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AcousticSequence {
    dim: usize,
    data: Vec<f64>,
}

impl AcousticSequence {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("frame dimension must be >= 1".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidDimension(format!(
                "{} values do not form whole frames of width {dim}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDimension(format!(
                "non-finite feature value at flat index {bad}"
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_frames(frames: &[Vec<f64>]) -> Result<Self> {
        let dim = frames.first().map(Vec::len).unwrap_or(0);
        if frames.iter().any(|f| f.len() != dim) {
            return Err(Error::InvalidDimension("ragged frames".into()));
        }
        Self::new(dim, frames.concat())
    }

    /// Number of frames `M`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Frame width `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }
}

/// Per-frame zero-based phoneme labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelSequence(Vec<usize>);

impl LabelSequence {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    /// Builds a sequence and checks every label against an alphabet of `size`.
    pub fn checked(labels: Vec<usize>, size: usize) -> Result<Self> {
        for &l in &labels {
            check_label(l, size)?;
        }
        Ok(Self(labels))
    }

    pub fn validate(&self, size: usize) -> Result<()> {
        self.0.iter().try_for_each(|&l| check_label(l, size))
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for LabelSequence {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for LabelSequence {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// An acoustic sequence paired with its reference labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub x: AcousticSequence,
    pub y_ref: LabelSequence,
}

impl Utterance {
    pub fn new(x: AcousticSequence, y_ref: LabelSequence) -> Result<Self> {
        if x.len() != y_ref.len() {
            return Err(Error::Pairing {
                expected: x.len(),
                found: y_ref.len(),
            });
        }
        Ok(Self { x, y_ref })
    }

    pub fn len(&self) -> usize {
        self.y_ref.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_ref.is_empty()
    }
}

/// Indicator vector of length `size` with a single 1 at `label`.
pub fn one_hot(label: usize, size: usize) -> Result<Vec<f64>> {
    check_label(label, size)?;
    let mut v = vec![0.0; size];
    v[label] = 1.0;
    Ok(v)
}

/// Tensor product of `a` (length P) and `b` (length Q): component
/// `i + j * P` (zero-based) holds `a[i] * b[j]`.
pub fn tensor_product(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidDimension(
            "tensor product of an empty vector".into(),
        ));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &bj in b {
        out.extend(a.iter().map(|&ai| ai * bj));
    }
    Ok(out)
}
