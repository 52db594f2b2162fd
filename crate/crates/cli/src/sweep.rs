//! Depth × width grid. Every cell writes `cells/L<l>_M<m>.txt` holding
//! `ok <per>` or `failed <reason>`; finished cells are reused on rerun, so
//! separate processes can each fill cells before one assembles the grid.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use structseq::experiment::{prepare, sweep_cell, ExperimentConfig, Prepared};

use crate::args::SweepArgs;
use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    /// Dev PER in percent.
    Done(f64),
    Failed(String),
}

pub fn cell_path(out: &Path, layers: usize, width: usize) -> PathBuf {
    out.join("cells").join(format!("L{layers}_M{width}.txt"))
}

pub fn read_cell(path: &Path) -> Option<Cell> {
    let text = fs::read_to_string(path).ok()?;
    let (tag, rest) = text.trim().split_once(' ')?;
    match tag {
        "ok" => rest.parse().ok().map(Cell::Done),
        "failed" => Some(Cell::Failed(rest.to_string())),
        _ => None,
    }
}

fn write_cell(path: &Path, cell: &Cell) -> CliResult<()> {
    let text = match cell {
        Cell::Done(per) => format!("ok {per:.17e}\n"),
        Cell::Failed(reason) => format!("failed {}\n", reason.replace('\n', " ")),
    };
    fs::write(path, text)?;
    Ok(())
}

fn parse_cell_flag(s: &str) -> CliResult<(usize, usize)> {
    let err = || CliError::Usage(format!("--cell expects L:M, got {s:?}"));
    let (l, m) = s.split_once(':').ok_or_else(err)?;
    Ok((l.trim().parse().map_err(|_| err())?, m.trim().parse().map_err(|_| err())?))
}

fn experiment(args: &SweepArgs) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        size: args.size,
        raw_dim: args.dim,
        n_utterances: args.utterances,
        corpus_seed: args.corpus_seed,
        ..Default::default()
    };
    cfg.sdnn.epochs = args.epochs;
    cfg.sdnn.sgd.learning_rate = args.lr;
    cfg.joint_frontend_sgd.learning_rate = args.lr / 10.0;
    cfg
}

fn validate(args: &SweepArgs) -> CliResult<()> {
    if args.layers.is_empty() || args.width.is_empty() {
        return Err(CliError::Usage("--layers and --width need at least one value".into()));
    }
    if args.layers.contains(&0) || args.width.contains(&0) {
        return Err(CliError::Usage("grid values must be >= 1".into()));
    }
    if args.size < 2 || args.dim == 0 || args.epochs == 0 || args.utterances < 10 {
        return Err(CliError::Usage("need --size >= 2, --dim >= 1, --epochs >= 1, --utterances >= 10".into()));
    }
    if !(args.lr >= 0.0 && args.lr.is_finite()) {
        return Err(CliError::Usage("--lr must be finite and >= 0".into()));
    }
    Ok(())
}

fn compute(prepared: &Prepared, cfg: &ExperimentConfig, layers: usize, width: usize, seed: u64) -> Cell {
    match sweep_cell(prepared, cfg, layers, width, seed) {
        Ok(per) if per.is_finite() => Cell::Done(100.0 * per),
        Ok(per) => Cell::Failed(format!("non-finite PER {per}")),
        Err(e) => Cell::Failed(e.to_string()),
    }
}

pub fn write_grid(path: &Path, layers: &[usize], widths: &[usize], cells: &[Vec<Cell>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(fs::File::create(path)?);
    let mut header = vec!["L\\M".to_string()];
    header.extend(widths.iter().map(usize::to_string));
    w.write_record(&header)?;
    for (l, row) in layers.iter().zip(cells) {
        let mut rec = vec![l.to_string()];
        rec.extend(row.iter().map(|c| match c {
            Cell::Done(per) => format!("{per:.4}"),
            Cell::Failed(_) => "NA".to_string(),
        }));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    validate(args)?;
    io::ensure_dir(&args.out.join("cells"))?;
    let cfg = experiment(args);
    let targets: Vec<(usize, usize)> = match &args.cell {
        Some(s) => vec![parse_cell_flag(s)?],
        None => args
            .layers
            .iter()
            .flat_map(|&l| args.width.iter().map(move |&m| (l, m)))
            .collect(),
    };
    let pending: Vec<(usize, usize)> = targets
        .iter()
        .copied()
        .filter(|&(l, m)| !matches!(read_cell(&cell_path(&args.out, l, m)), Some(Cell::Done(_))))
        .collect();
    if !pending.is_empty() {
        let prepared = prepare(&cfg, args.seed)?;
        for &(l, m) in &pending {
            let cell = compute(&prepared, &cfg, l, m, args.seed);
            match &cell {
                Cell::Done(per) => info!("cell L={l} M={m}: dev PER {per:.2}"),
                Cell::Failed(reason) => warn!("cell L={l} M={m} failed: {reason}"),
            }
            write_cell(&cell_path(&args.out, l, m), &cell)?;
        }
    }
    println!("{} cells computed, {} reused", pending.len(), targets.len() - pending.len());
    if args.cell.is_some() {
        return match read_cell(&cell_path(&args.out, targets[0].0, targets[0].1)) {
            Some(Cell::Done(_)) => Ok(()),
            _ => Err(CliError::Numeric(format!("cell {}:{} failed", targets[0].0, targets[0].1))),
        };
    }

    let cells: Vec<Vec<Cell>> = args
        .layers
        .iter()
        .map(|&l| {
            args.width
                .iter()
                .map(|&m| read_cell(&cell_path(&args.out, l, m)).unwrap_or(Cell::Failed("missing".into())))
                .collect()
        })
        .collect();
    let grid = args.out.join("grid.csv");
    write_grid(&grid, &args.layers, &args.width, &cells)?;
    print!("{}", fs::read_to_string(&grid)?);
    let failed = cells.iter().flatten().filter(|c| matches!(c, Cell::Failed(_))).count();
    if failed > 0 {
        return Err(CliError::Numeric(format!("{failed} sweep cells failed")));
    }
    Ok(())
}
