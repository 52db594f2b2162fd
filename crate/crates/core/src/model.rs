//! Model files: a version line, a kind tag, shape lines and one value per
//! line written with 17 significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::parse_field;
use crate::error::{Error, Result};
use crate::fsdnn::FsdnnParams;
use crate::linear::LinearParams;
use crate::neural::{Matrix, MlpParams};

pub const FORMAT_VERSION: &str = "structseq-model v1";

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Linear(LinearParams),
    Mlp(MlpParams),
    Fsdnn(FsdnnParams),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Linear(_) => "linear",
            Model::Mlp(_) => "mlp",
            Model::Fsdnn(_) => "fsdnn",
        }
    }
}

/// A model plus the shape of the data it was trained on.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub model: Model,
    /// Feature width of the corpus (raw width for fsdnn).
    pub dim: usize,
    pub size: usize,
    pub epochs_trained: usize,
}

impl SavedModel {
    pub fn into_linear(self) -> Result<LinearParams> {
        match self.model {
            Model::Linear(p) => Ok(p),
            other => Err(kind_error("linear", other.kind())),
        }
    }

    pub fn into_mlp(self) -> Result<MlpParams> {
        match self.model {
            Model::Mlp(p) => Ok(p),
            other => Err(kind_error("mlp", other.kind())),
        }
    }

    pub fn into_fsdnn(self) -> Result<FsdnnParams> {
        match self.model {
            Model::Fsdnn(p) => Ok(p),
            other => Err(kind_error("fsdnn", other.kind())),
        }
    }
}

fn kind_error(expected: &str, found: &str) -> Error {
    Error::Kind {
        expected: expected.into(),
        found: found.into(),
    }
}

pub fn write_model<W: Write>(out: &mut W, saved: &SavedModel) -> Result<()> {
    writeln!(out, "{FORMAT_VERSION}")?;
    writeln!(out, "kind {}", saved.model.kind())?;
    writeln!(out, "dim {}", saved.dim)?;
    writeln!(out, "size {}", saved.size)?;
    writeln!(out, "epochs {}", saved.epochs_trained)?;
    match &saved.model {
        Model::Linear(p) => write_values(out, &p.theta)?,
        Model::Mlp(p) => write_mlp(out, p)?,
        Model::Fsdnn(p) => {
            write_mlp(out, &p.frontend)?;
            write_mlp(out, &p.scorer)?;
        }
    }
    Ok(())
}

fn write_values<W: Write>(out: &mut W, values: &[f64]) -> Result<()> {
    writeln!(out, "values {}", values.len())?;
    for v in values {
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}

fn write_mlp<W: Write>(out: &mut W, p: &MlpParams) -> Result<()> {
    let sizes: Vec<String> = p.layer_sizes.iter().map(|s| s.to_string()).collect();
    writeln!(out, "layers {}", sizes.join(" "))?;
    for w in &p.weights {
        write_values(out, &w.data)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::iter::Enumerate<std::io::Lines<R>>,
    last: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self, what: &str) -> Result<(usize, String)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line?))
            }
            None => Err(Error::Truncated(format!("file ends after line {} while reading {what}", self.last))),
        }
    }

    /// Reads `key value…` and returns the values.
    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<String>)> {
        let (no, line) = self.next(key)?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some(key) {
            return Err(Error::parse(no, format!("expected `{key}` line, got {line:?}")));
        }
        Ok((no, fields.map(str::to_string).collect()))
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let (no, v) = self.keyed(key)?;
        match v.as_slice() {
            [one] => parse_field(one, no),
            _ => Err(Error::parse(no, format!("`{key}` takes one value"))),
        }
    }

    fn values(&mut self, expected: usize) -> Result<Vec<f64>> {
        let count = self.keyed_usize("values")?;
        if count != expected {
            return Err(Error::Inconsistent(format!("block holds {count} values, shape needs {expected}")));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, line) = self.next("values")?;
            out.push(parse_field(line.trim(), no)?);
        }
        Ok(out)
    }

    fn mlp(&mut self) -> Result<MlpParams> {
        let (no, sizes) = self.keyed("layers")?;
        let sizes = sizes
            .iter()
            .map(|s| parse_field::<usize>(s, no))
            .collect::<Result<Vec<_>>>()?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Inconsistent(format!("invalid layer sizes {sizes:?}")));
        }
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let (rows, cols) = (w[1], w[0] + 1);
            weights.push(Matrix {
                rows,
                cols,
                data: self.values(rows * cols)?,
            });
        }
        MlpParams::new(sizes, weights).map_err(|e| Error::Inconsistent(e.to_string()))
    }
}

/// Parses a whole model; nothing is returned unless every block is present
/// and consistent.
pub fn read_model<R: BufRead>(input: R) -> Result<SavedModel> {
    let mut lines = Lines {
        inner: input.lines().enumerate(),
        last: 0,
    };
    let (_, header) = lines.next("version")?;
    if header.trim() != FORMAT_VERSION {
        return Err(Error::Version {
            expected: FORMAT_VERSION.into(),
            found: header.trim().into(),
        });
    }
    let (no, kind) = lines.keyed("kind")?;
    let kind = kind.join(" ");
    let dim = lines.keyed_usize("dim")?;
    let size = lines.keyed_usize("size")?;
    let epochs_trained = lines.keyed_usize("epochs")?;
    if dim == 0 || size < 2 {
        return Err(Error::Inconsistent(format!("dim {dim}, size {size}")));
    }
    let psi = dim * size + size * size;
    let model = match kind.as_str() {
        "linear" => {
            let theta = lines.values(psi)?;
            Model::Linear(LinearParams::new(dim, size, theta).map_err(|e| Error::Inconsistent(e.to_string()))?)
        }
        "mlp" => {
            let p = lines.mlp()?;
            if p.input_size() != psi || p.output_size() != 1 {
                return Err(Error::Inconsistent(format!(
                    "scorer shape {:?} does not fit dim {dim}, size {size}",
                    p.layer_sizes
                )));
            }
            Model::Mlp(p)
        }
        "fsdnn" => {
            let frontend = lines.mlp()?;
            let scorer = lines.mlp()?;
            if frontend.input_size() != dim || frontend.output_size() != size {
                return Err(Error::Inconsistent(format!(
                    "front end {:?} does not fit dim {dim}, size {size}",
                    frontend.layer_sizes
                )));
            }
            Model::Fsdnn(FsdnnParams::new(frontend, scorer).map_err(|e| Error::Inconsistent(e.to_string()))?)
        }
        other => return Err(Error::parse(no, format!("unknown model kind {other:?}"))),
    };
    Ok(SavedModel {
        model,
        dim,
        size,
        epochs_trained,
    })
}

pub fn save_model(path: &Path, saved: &SavedModel) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_model(&mut out, saved)?;
    out.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    read_model(BufReader::new(File::open(path)?))
}
