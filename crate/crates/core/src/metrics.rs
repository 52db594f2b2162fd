//! Sequence distances, phone accuracy and corpus phone error rate.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DistanceKind {
    /// Edit distance between run-collapsed phone strings, normalized by the
    /// collapsed reference length. Not clamped; may exceed 1.
    #[default]
    PhoneEdit,
    /// Fraction of mismatched frames. Decomposes over frames.
    FrameError,
}

/// Merges consecutive duplicate labels.
pub fn collapse_runs(y: &[usize]) -> Result<Vec<usize>> {
    if y.is_empty() {
        return Err(Error::InvalidSequence("cannot collapse an empty sequence".into()));
    }
    let mut out = Vec::with_capacity(y.len());
    for &l in y {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    Ok(out)
}

/// Unit-cost Levenshtein distance.
pub fn edit_distance(a: &[usize], b: &[usize]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ai) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &bj) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ai != bj);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Δ(y_ref, y_hyp).
pub fn delta(y_ref: &[usize], y_hyp: &[usize], kind: DistanceKind) -> Result<f64> {
    match kind {
        DistanceKind::PhoneEdit => {
            let r = collapse_runs(y_ref)?;
            let h = collapse_runs(y_hyp)?;
            Ok(edit_distance(&r, &h) as f64 / r.len() as f64)
        }
        DistanceKind::FrameError => {
            if y_ref.len() != y_hyp.len() {
                return Err(Error::Pairing {
                    expected: y_ref.len(),
                    found: y_hyp.len(),
                });
            }
            if y_ref.is_empty() {
                return Err(Error::InvalidSequence("empty sequence".into()));
            }
            let wrong = y_ref.iter().zip(y_hyp).filter(|(a, b)| a != b).count();
            Ok(wrong as f64 / y_ref.len() as f64)
        }
    }
}

/// Phone accuracy `1 - Δ`, clamped to `[0, 1]`.
pub fn accuracy(y_ref: &[usize], y_hyp: &[usize]) -> Result<f64> {
    Ok((1.0 - delta(y_ref, y_hyp, DistanceKind::PhoneEdit)?).clamp(0.0, 1.0))
}

/// Error count and collapsed reference length for one utterance.
pub fn phone_errors(y_ref: &[usize], y_hyp: &[usize]) -> Result<(usize, usize)> {
    let r = collapse_runs(y_ref)?;
    let h = collapse_runs(y_hyp)?;
    Ok((edit_distance(&r, &h), r.len()))
}

/// Total edit errors over total collapsed reference length.
pub fn corpus_per<R, H>(refs: &[R], hyps: &[H]) -> Result<f64>
where
    R: AsRef<[usize]>,
    H: AsRef<[usize]>,
{
    if refs.len() != hyps.len() {
        return Err(Error::Pairing {
            expected: refs.len(),
            found: hyps.len(),
        });
    }
    let (mut errors, mut total) = (0usize, 0usize);
    for (r, h) in refs.iter().zip(hyps) {
        let (e, n) = phone_errors(r.as_ref(), h.as_ref())?;
        errors += e;
        total += n;
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(errors as f64 / total as f64)
}

/// Ranks starting at 1; ties share their average rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or there are fewer than two points.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::Pairing {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Ok(None);
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        va += (x - mean).powi(2);
        vb += (y - mean).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Ok(None);
    }
    Ok(Some(cov / (va * vb).sqrt()))
}
