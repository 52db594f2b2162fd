//! Synthetic HMM-style corpora and the corpus text format.
//!
//! A record is a `M D` header, `M` lines of `D` features and one line of `M`
//! labels. Features are written with 17 significant digits so reading a file
//! back reproduces every value exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::sequence::{AcousticSequence, LabelSequence, PhonemeAlphabet, Utterance};

/// One Gaussian of a phone's emission mixture, with diagonal covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct EmissionComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub size: usize,
    pub raw_dim: usize,
    /// Row-stochastic `K × K` matrix, row = current phone.
    pub transition: Vec<Vec<f64>>,
    /// Mixture components per phone; a single component gives plain
    /// Gaussian emissions.
    pub emissions: Vec<Vec<EmissionComponent>>,
    /// Extra self-loop mass: the effective row is `bias·e_k + (1 − bias)·T_k`.
    pub duration_bias: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Single-Gaussian phones with random means in `[-1.5, 1.5]^D`, shared
    /// variance and a random transition matrix.
    pub fn gaussian(size: usize, raw_dim: usize, variance: f64, seed: u64) -> Result<Self> {
        Self::mixture(size, raw_dim, 1, variance, seed)
    }

    /// Each phone is an equal-weight mixture of `components` Gaussians with
    /// independent random means, so class regions are unions of blobs and
    /// not linearly separable in general.
    pub fn mixture(size: usize, raw_dim: usize, components: usize, variance: f64, seed: u64) -> Result<Self> {
        check_sizes(size, raw_dim)?;
        if components == 0 {
            return Err(Error::Config("need at least one mixture component".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
        let emissions = (0..size)
            .map(|_| {
                (0..components)
                    .map(|_| EmissionComponent {
                        weight: 1.0 / components as f64,
                        mean: (0..raw_dim).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                        variance: vec![variance; raw_dim],
                    })
                    .collect()
            })
            .collect();
        let spec = Self {
            size,
            raw_dim,
            transition: random_transition(size, &mut rng),
            emissions,
            duration_bias: 0.5,
            min_len: 10,
            max_len: 24,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(self.size, self.raw_dim)?;
        if self.transition.len() != self.size || self.transition.iter().any(|r| r.len() != self.size) {
            return Err(Error::Config(format!("transition matrix must be {0}×{0}", self.size)));
        }
        for (k, row) in self.transition.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("transition row {k} is not stochastic")));
            }
        }
        if self.emissions.len() != self.size {
            return Err(Error::Config(format!("expected {} emission mixtures", self.size)));
        }
        for (k, mix) in self.emissions.iter().enumerate() {
            if mix.is_empty() {
                return Err(Error::Config(format!("phone {k} has no emission components")));
            }
            for c in mix {
                if c.mean.len() != self.raw_dim || c.variance.len() != self.raw_dim {
                    return Err(Error::Config(format!("phone {k} component has wrong width")));
                }
                if c.variance.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                    return Err(Error::Config(format!("phone {k} has a negative or non-finite variance")));
                }
                if !(c.weight > 0.0) || !c.weight.is_finite() || c.mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::Config(format!("phone {k} component has an invalid weight or mean")));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.duration_bias) {
            return Err(Error::Config("duration bias must lie in [0, 1]".into()));
        }
        if self.min_len < 2 || self.max_len < self.min_len {
            return Err(Error::Config(format!(
                "length range [{}, {}] needs 2 <= min <= max",
                self.min_len, self.max_len
            )));
        }
        Ok(())
    }

    /// Transition row after the self-loop boost.
    pub fn effective_row(&self, k: usize) -> Vec<f64> {
        self.transition[k]
            .iter()
            .enumerate()
            .map(|(j, &p)| (1.0 - self.duration_bias) * p + if j == k { self.duration_bias } else { 0.0 })
            .collect()
    }
}

fn check_sizes(size: usize, raw_dim: usize) -> Result<()> {
    if size < 2 {
        return Err(Error::Config(format!("alphabet size {size} < 2")));
    }
    if raw_dim == 0 {
        return Err(Error::Config("feature width must be >= 1".into()));
    }
    Ok(())
}

fn random_transition(size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..size)
        .map(|_| {
            let row: Vec<f64> = (0..size).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = row.iter().sum();
            row.into_iter().map(|p| p / total).collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub alphabet: PhonemeAlphabet,
    pub utterances: Vec<Utterance>,
    /// Split tag of each utterance.
    pub splits: Vec<Split>,
}

impl Corpus {
    pub fn size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn split(&self, split: Split) -> Vec<Utterance> {
        self.utterances
            .iter()
            .zip(&self.splits)
            .filter(|(_, s)| **s == split)
            .map(|(u, _)| u.clone())
            .collect()
    }
}

/// Samples `n_utterances` utterances; the first 80% are tagged train, the
/// next 10% dev and the rest test.
pub fn generate_corpus(spec: &SyntheticSpec, n_utterances: usize) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = (0..spec.size)
        .map(|k| WeightedIndex::new(spec.effective_row(k)).map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mixtures = spec
        .emissions
        .iter()
        .map(|mix| WeightedIndex::new(mix.iter().map(|c| c.weight)).map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut utterances = Vec::with_capacity(n_utterances);
    for _ in 0..n_utterances {
        let m = rng.gen_range(spec.min_len..=spec.max_len);
        let mut labels = Vec::with_capacity(m);
        labels.push(rng.gen_range(0..spec.size));
        while labels.len() < m {
            let prev = *labels.last().unwrap();
            labels.push(rows[prev].sample(&mut rng));
        }
        let mut data = Vec::with_capacity(m * spec.raw_dim);
        for &l in &labels {
            let c = &spec.emissions[l][mixtures[l].sample(&mut rng)];
            for (mean, var) in c.mean.iter().zip(&c.variance) {
                let z: f64 = std_normal.sample(&mut rng);
                data.push(mean + var.sqrt() * z);
            }
        }
        utterances.push(Utterance::new(AcousticSequence::new(spec.raw_dim, data)?, labels.into())?);
    }
    let n_train = (n_utterances * 8 + 5) / 10;
    let n_dev = (n_utterances + 5) / 10;
    let splits = (0..n_utterances)
        .map(|i| {
            if i < n_train {
                Split::Train
            } else if i < n_train + n_dev {
                Split::Dev
            } else {
                Split::Test
            }
        })
        .collect();
    Ok(Corpus {
        alphabet: PhonemeAlphabet::numbered(spec.size)?,
        utterances,
        splits,
    })
}

pub fn write_corpus<W: Write>(out: &mut W, utterances: &[Utterance]) -> Result<()> {
    for u in utterances {
        writeln!(out, "{} {}", u.len(), u.x.dim())?;
        for frame in u.x.frames() {
            let line: Vec<String> = frame.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        let labels: Vec<String> = u.y_ref.iter().map(|l| l.to_string()).collect();
        writeln!(out, "{}", labels.join(" "))?;
    }
    Ok(())
}

/// Reads corpus records, checking every label against `size`. Blank lines
/// between records are ignored.
pub fn read_corpus<R: BufRead>(input: R, size: usize) -> Result<Vec<Utterance>> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next_line = |expect: &str| -> Result<Option<(usize, String)>> {
        for (no, line) in lines.by_ref() {
            let line = line?;
            if !line.trim().is_empty() {
                return Ok(Some((no, line)));
            }
            if !expect.is_empty() {
                return Err(Error::parse(no, format!("blank line where {expect} expected")));
            }
        }
        Ok(None)
    };
    let mut utterances = Vec::new();
    while let Some((no, header)) = next_line("")? {
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(no, format!("expected `M D` header, got {header:?}")));
        }
        let m: usize = parse_field(fields[0], no)?;
        let d: usize = parse_field(fields[1], no)?;
        if m == 0 || d == 0 {
            return Err(Error::parse(no, "record dimensions must be positive"));
        }
        let mut data = Vec::with_capacity(m * d);
        for _ in 0..m {
            let (fno, line) = next_line("feature line")?
                .ok_or_else(|| Error::parse(no, "record ends before its feature lines"))?;
            let before = data.len();
            for f in line.split_whitespace() {
                let v: f64 = parse_field(f, fno)?;
                if !v.is_finite() {
                    return Err(Error::parse(fno, "non-finite feature"));
                }
                data.push(v);
            }
            if data.len() - before != d {
                return Err(Error::parse(fno, format!("expected {d} features, got {}", data.len() - before)));
            }
        }
        let (lno, line) = next_line("label line")?.ok_or_else(|| Error::parse(no, "record ends before its label line"))?;
        let labels = line
            .split_whitespace()
            .map(|f| parse_field::<usize>(f, lno))
            .collect::<Result<Vec<_>>>()?;
        if labels.len() != m {
            return Err(Error::parse(lno, format!("expected {m} labels, got {}", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= size) {
            return Err(Error::parse(lno, format!("label {bad} outside alphabet of size {size}")));
        }
        let x = AcousticSequence::new(d, data).map_err(|e| Error::parse(no, e.to_string()))?;
        utterances.push(Utterance::new(x, LabelSequence::new(labels))?);
    }
    Ok(utterances)
}

pub fn save_corpus(path: &Path, utterances: &[Utterance]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_corpus(&mut out, utterances)?;
    out.flush()?;
    Ok(())
}

pub fn load_corpus(path: &Path, size: usize) -> Result<Vec<Utterance>> {
    read_corpus(BufReader::new(File::open(path)?), size)
}

/// Alphabet file: one phone name per line.
pub fn save_alphabet(path: &Path, alphabet: &PhonemeAlphabet) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for name in alphabet.names() {
        writeln!(out, "{name}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_alphabet(path: &Path) -> Result<PhonemeAlphabet> {
    let names = BufReader::new(File::open(path)?)
        .lines()
        .map(|l| l.map(|s| s.trim().to_string()))
        .filter(|l| !matches!(l, Ok(s) if s.is_empty()))
        .collect::<std::io::Result<Vec<_>>>()?;
    PhonemeAlphabet::new(names)
}

pub(crate) fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {s:?}")))
}
