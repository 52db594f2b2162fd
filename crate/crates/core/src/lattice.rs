//! Frame-indexed lattices: construction checks, exact N-best extraction,
//! random path sampling, oracle error, and the text format.
//!
//! Nodes are numbered densely. Node `0` is the start node and the highest
//! numbered node is the end node. An arc at frame `j` leaves a node at level
//! `j` and enters a node at level `j + 1`, carrying the label of frame `j`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::collapse_runs;
use crate::sequence::{check_label, LabelSequence};

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeArc {
    pub frame: usize,
    pub src: usize,
    pub dst: usize,
    pub label: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    size: usize,
    frames: usize,
    num_nodes: usize,
    arcs: Vec<LatticeArc>,
    /// Arc indices leaving each node, in arc order.
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
    /// Nodes sorted by level.
    topo: Vec<usize>,
}

/// A complete lattice path and the sum of its arc scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPath {
    pub labels: LabelSequence,
    pub path_score: f64,
}

impl Lattice {
    /// Validates and indexes a set of arcs for an alphabet of `size` labels
    /// and `frames` frames.
    pub fn new(size: usize, frames: usize, arcs: Vec<LatticeArc>) -> Result<Self> {
        if frames == 0 {
            return Err(Error::Structure("lattice must span at least one frame".into()));
        }
        if arcs.is_empty() {
            return Err(Error::Structure("lattice has no arcs".into()));
        }
        let num_nodes = arcs.iter().map(|a| a.src.max(a.dst)).max().unwrap_or(0) + 1;
        let end = num_nodes - 1;
        let mut level: Vec<Option<usize>> = vec![None; num_nodes];
        level[0] = Some(0);
        level[end] = Some(frames);
        let mut assign = |node: usize, lv: usize| -> Result<()> {
            match level[node] {
                Some(existing) if existing != lv => Err(Error::Structure(format!(
                    "node {node} appears at levels {existing} and {lv}"
                ))),
                _ => {
                    level[node] = Some(lv);
                    Ok(())
                }
            }
        };
        for arc in &arcs {
            check_label(arc.label, size)
                .map_err(|_| Error::Structure(format!("arc label {} >= {size}", arc.label)))?;
            if arc.frame >= frames {
                return Err(Error::Structure(format!(
                    "arc frame {} outside 0..{frames}",
                    arc.frame
                )));
            }
            if !arc.score.is_finite() {
                return Err(Error::Structure("non-finite arc score".into()));
            }
            assign(arc.src, arc.frame)?;
            assign(arc.dst, arc.frame + 1)?;
        }
        let level: Vec<usize> = level
            .into_iter()
            .enumerate()
            .map(|(node, lv)| lv.ok_or_else(|| Error::Structure(format!("node {node} has no arcs"))))
            .collect::<Result<_>>()?;

        let mut out_arcs = vec![Vec::new(); num_nodes];
        let mut in_arcs = vec![Vec::new(); num_nodes];
        for (i, arc) in arcs.iter().enumerate() {
            out_arcs[arc.src].push(i);
            in_arcs[arc.dst].push(i);
        }
        let mut topo: Vec<usize> = (0..num_nodes).collect();
        topo.sort_by_key(|&n| (level[n], n));

        // Every node must lie on some start-to-end path.
        let mut forward = vec![false; num_nodes];
        forward[0] = true;
        for &n in &topo {
            if forward[n] {
                for &a in &out_arcs[n] {
                    forward[arcs[a].dst] = true;
                }
            }
        }
        let mut backward = vec![false; num_nodes];
        backward[end] = true;
        for &n in topo.iter().rev() {
            if backward[n] {
                for &a in &in_arcs[n] {
                    backward[arcs[a].src] = true;
                }
            }
        }
        if let Some(n) = (0..num_nodes).find(|&n| !(forward[n] && backward[n])) {
            return Err(Error::Structure(format!(
                "node {n} is not on any start-to-end path"
            )));
        }

        Ok(Self {
            size,
            frames,
            num_nodes,
            arcs,
            out_arcs,
            in_arcs,
            topo,
        })
    }

    /// Alphabet size `K`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of frames `M`; every complete path carries this many labels.
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn arcs(&self) -> &[LatticeArc] {
        &self.arcs
    }

    pub fn start(&self) -> usize {
        0
    }

    pub fn end(&self) -> usize {
        self.num_nodes - 1
    }

    /// Number of complete paths (saturating).
    pub fn path_count(&self) -> u128 {
        let mut count = vec![0u128; self.num_nodes];
        count[0] = 1;
        for &n in &self.topo {
            for &a in &self.out_arcs[n] {
                let dst = self.arcs[a].dst;
                count[dst] = count[dst].saturating_add(count[n]);
            }
        }
        count[self.end()]
    }

    /// Best path; ties go to the lexicographically smallest labels.
    pub fn best_path(&self) -> ScoredPath {
        self.nbest(1).into_iter().next().expect("validated lattice has a path")
    }

    /// The `n` highest-scoring distinct label sequences, best first.
    ///
    /// Each node keeps its `n` best distinct label prefixes; a sequence in
    /// the global top `n` has a prefix in the top `n` at every node on its
    /// best path, so the result is exact.
    pub fn nbest(&self, n: usize) -> Vec<ScoredPath> {
        if n == 0 {
            return Vec::new();
        }
        let mut lists: Vec<Vec<(f64, Vec<usize>)>> = vec![Vec::new(); self.num_nodes];
        lists[0].push((0.0, Vec::new()));
        for &node in self.topo.iter().skip(1) {
            let mut best: HashMap<Vec<usize>, f64> = HashMap::new();
            for &a in &self.in_arcs[node] {
                let arc = &self.arcs[a];
                for (score, prefix) in &lists[arc.src] {
                    let mut labels = Vec::with_capacity(prefix.len() + 1);
                    labels.extend_from_slice(prefix);
                    labels.push(arc.label);
                    let s = score + arc.score;
                    best.entry(labels)
                        .and_modify(|old| *old = old.max(s))
                        .or_insert(s);
                }
            }
            let mut cands: Vec<(f64, Vec<usize>)> = best.into_iter().map(|(l, s)| (s, l)).collect();
            cands.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            cands.truncate(n);
            lists[node] = cands;
        }
        std::mem::take(&mut lists[self.end()])
            .into_iter()
            .map(|(path_score, labels)| ScoredPath {
                labels: labels.into(),
                path_score,
            })
            .collect()
    }

    /// Walks from start to end choosing uniformly among outgoing arcs.
    pub fn random_path<R: Rng + ?Sized>(&self, rng: &mut R) -> ScoredPath {
        let mut node = 0;
        let mut labels = Vec::with_capacity(self.frames);
        let mut path_score = 0.0;
        while node != self.end() {
            let outs = &self.out_arcs[node];
            let arc = &self.arcs[outs[rng.gen_range(0..outs.len())]];
            labels.push(arc.label);
            path_score += arc.score;
            node = arc.dst;
        }
        ScoredPath {
            labels: labels.into(),
            path_score,
        }
    }

    /// Whether `labels` is the label sequence of some complete path.
    pub fn contains(&self, labels: &[usize]) -> bool {
        if labels.len() != self.frames {
            return false;
        }
        let mut current = vec![0usize];
        for &label in labels {
            let mut next: Vec<usize> = current
                .iter()
                .flat_map(|&n| self.out_arcs[n].iter())
                .map(|&a| &self.arcs[a])
                .filter(|arc| arc.label == label)
                .map(|arc| arc.dst)
                .collect();
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                return false;
            }
            current = next;
        }
        current.contains(&self.end())
    }

    /// Minimum phone edit distance between `y_ref` and any path of the
    /// lattice, both run-collapsed, plus the collapsed reference length.
    pub fn oracle_errors(&self, y_ref: &[usize]) -> Result<(usize, usize)> {
        let reference = collapse_runs(y_ref)?;
        let r = reference.len();
        // cost[(node, last)][i]: fewest edits aligning the first i reference
        // phones with some path prefix reaching `node` whose last label is
        // `last` (`size` encodes "no label yet").
        let states = self.size + 1;
        let inf = usize::MAX / 2;
        let mut cost = vec![vec![inf; r + 1]; self.num_nodes * states];
        let idx = |node: usize, last: usize| node * states + last;
        for (i, c) in cost[idx(0, self.size)].iter_mut().enumerate() {
            *c = i;
        }
        for &node in &self.topo {
            for last in 0..states {
                let row = cost[idx(node, last)].clone();
                if row.iter().all(|&c| c == inf) {
                    continue;
                }
                for &a in &self.out_arcs[node] {
                    let arc = &self.arcs[a];
                    let target = idx(arc.dst, arc.label);
                    let mut next = vec![inf; r + 1];
                    if arc.label == last {
                        // continuing a run emits no new phone
                        next.copy_from_slice(&row);
                    } else {
                        for i in 0..=r {
                            // insertion of the hypothesis phone
                            next[i] = next[i].min(row[i] + 1);
                            if i > 0 {
                                let sub = usize::from(reference[i - 1] != arc.label);
                                next[i] = next[i].min(row[i - 1] + sub);
                            }
                        }
                    }
                    // deletions of reference phones
                    for i in 1..=r {
                        next[i] = next[i].min(next[i - 1] + 1);
                    }
                    for (t, v) in cost[target].iter_mut().zip(next) {
                        *t = (*t).min(v);
                    }
                }
            }
        }
        let best = (0..self.size)
            .map(|last| cost[idx(self.end(), last)][r])
            .min()
            .unwrap_or(inf);
        Ok((best, r))
    }

    /// Writes the `K M` header followed by one `frame src dst label score`
    /// line per arc.
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{} {}", self.size, self.frames)?;
        for a in &self.arcs {
            writeln!(out, "{} {} {} {} {:.16e}", a.frame, a.src, a.dst, a.label, a.score)?;
        }
        Ok(())
    }
}

/// Uniform i.i.d. labels over `[0, size)`.
pub fn random_sequence<R: Rng + ?Sized>(size: usize, frames: usize, rng: &mut R) -> Result<LabelSequence> {
    if size < 2 {
        return Err(Error::Config(format!("alphabet size {size} < 2")));
    }
    if frames == 0 {
        return Err(Error::Config("sequence length must be >= 1".into()));
    }
    Ok((0..frames).map(|_| rng.gen_range(0..size)).collect::<Vec<_>>().into())
}

pub fn write_lattices<W: Write>(out: &mut W, lattices: &[Lattice]) -> Result<()> {
    for l in lattices {
        l.write_to(out)?;
    }
    Ok(())
}

/// Reads a concatenation of lattice records.
pub fn read_lattices<R: BufRead>(input: R) -> Result<Vec<Lattice>> {
    let mut lattices = Vec::new();
    let mut current: Option<(usize, usize, usize, Vec<LatticeArc>)> = None;
    let finish = |rec: (usize, usize, usize, Vec<LatticeArc>)| {
        Lattice::new(rec.0, rec.1, rec.3).map_err(|e| Error::parse(rec.2, e.to_string()))
    };
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.len() {
            0 => continue,
            2 => {
                if let Some(rec) = current.take() {
                    lattices.push(finish(rec)?);
                }
                let size = parse_field(fields[0], line_no)?;
                let frames = parse_field(fields[1], line_no)?;
                current = Some((size, frames, line_no, Vec::new()));
            }
            5 => {
                let rec = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(line_no, "arc before lattice header"))?;
                rec.3.push(LatticeArc {
                    frame: parse_field(fields[0], line_no)?,
                    src: parse_field(fields[1], line_no)?,
                    dst: parse_field(fields[2], line_no)?,
                    label: parse_field(fields[3], line_no)?,
                    score: parse_field(fields[4], line_no)?,
                });
            }
            n => return Err(Error::parse(line_no, format!("expected 2 or 5 fields, got {n}"))),
        }
    }
    if let Some(rec) = current.take() {
        lattices.push(finish(rec)?);
    }
    Ok(lattices)
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {s:?}")))
}
