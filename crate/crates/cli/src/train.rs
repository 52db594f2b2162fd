use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use log::info;

use structseq::corpus::Split;
use structseq::experiment::scorer_init;
use structseq::fsdnn::{pretrain_frontend, train_fsdnn_resume, FrontendTrainConfig};
use structseq::linear::{train_linear_from, viterbi_decode};
use structseq::model::{save_model, Model, SavedModel};
use structseq::sdnn::{train_sdnn_resume, DevSet};
use structseq::{
    corpus_per, FsdnnParams, FsdnnTrainConfig, LinearParams, LinearTrainConfig, SdnnTrainConfig, SgdConfig, Utterance,
};

use crate::args::{ModelKind, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::io;

pub struct LogRow {
    pub epoch: usize,
    pub loss: f64,
    pub learning_rate: f64,
    /// Percent.
    pub dev_per: Option<f64>,
}

/// Appends rows to the training log, writing the header only for a new file.
pub fn write_log(path: &Path, rows: &[LogRow], append: bool) -> CliResult<()> {
    let fresh = !append || !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(!fresh)
        .truncate(fresh)
        .open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        w.write_record(["epoch", "loss", "learning_rate", "dev_per"])?;
    }
    for r in rows {
        w.write_record([
            r.epoch.to_string(),
            format!("{:.10e}", r.loss),
            format!("{:.6e}", r.learning_rate),
            r.dev_per.map(|p| format!("{p:.4}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn check_finite(rows: &[LogRow]) -> CliResult<()> {
    match rows.iter().find(|r| !r.loss.is_finite()) {
        Some(r) => Err(CliError::Numeric(format!("training loss became {} at epoch {}", r.loss, r.epoch))),
        None => Ok(()),
    }
}

fn sgd(args: &TrainArgs, learning_rate: f64) -> SgdConfig {
    SgdConfig {
        learning_rate,
        momentum: args.momentum,
        l2_weight: args.l2,
        ..SgdConfig::default()
    }
}

fn validate(args: &TrainArgs) -> CliResult<()> {
    let bad = |m: &str| Err(CliError::Usage(m.into()));
    if args.epochs == 0 {
        return bad("--epochs must be >= 1");
    }
    if args.layers == 0 || args.width == 0 {
        return bad("--layers and --width must be >= 1");
    }
    if args.n_neg == 0 || args.n_best == 0 || args.batch_size == Some(0) {
        return bad("--n-neg, --n-best and --batch-size must be >= 1");
    }
    if args.lr.is_some_and(|lr| !(lr >= 0.0 && lr.is_finite())) {
        return bad("--lr must be finite and >= 0");
    }
    if !(0.0..1.0).contains(&args.momentum) || !(args.l2 >= 0.0) {
        return bad("--momentum must lie in [0, 1) and --l2 must be >= 0");
    }
    if args.model == ModelKind::Fsdnn && (args.frontend_width == 0 || args.frontend_epochs == 0) {
        return bad("--frontend-width and --frontend-epochs must be >= 1");
    }
    Ok(())
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    validate(args)?;
    let alphabet = io::read_alphabet(&args.corpus)?;
    let size = alphabet.size();
    let train = io::read_split(&args.corpus, &alphabet, Split::Train)?;
    let dev = io::read_split(&args.corpus, &alphabet, Split::Dev)?;
    let dim = train
        .first()
        .map(|u| u.x.dim())
        .ok_or_else(|| CliError::Data("training split is empty".into()))?;
    let init = args.init.as_deref().map(|p| io::read_model(p, dim, size)).transpose()?;
    let epochs_done = init.as_ref().map_or(0, |s| s.epochs_trained);
    let log_path = args.log.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".log.csv");
        PathBuf::from(p)
    });

    let (model, rows) = match args.model {
        ModelKind::Linear => train_linear_model(args, &train, &dev, dim, size, init)?,
        ModelKind::Sdnn | ModelKind::Fsdnn => {
            let lat_dir = io::lattice_dir(&args.corpus, args.lattices.as_deref());
            let train_lat = io::read_split_lattices(&lat_dir, Split::Train, &train, size)?;
            let dev_lat = io::read_split_lattices(&lat_dir, Split::Dev, &dev, size).ok();
            let dev_set = dev_lat.as_deref().map(|l| DevSet {
                corpus: &dev,
                lattices: l,
            });
            let lr = args.lr.unwrap_or(SgdConfig::default().learning_rate);
            let config = SdnnTrainConfig {
                loss: args.loss.into(),
                n_negative: args.n_neg,
                epochs: args.epochs,
                sgd: sgd(args, lr),
                rescore_n: args.n_best,
                batch_size: args.batch_size.unwrap_or(1),
                seed: args.seed,
            };
            if args.model == ModelKind::Sdnn {
                let params = match init {
                    Some(s) => s.into_mlp()?,
                    None => scorer_init(dim, size, &vec![args.width; args.layers], args.seed)?,
                };
                let report = train_sdnn_resume(&train, &train_lat, params, &config, dev_set, epochs_done)?;
                let rows = report.log.iter().map(log_row).collect();
                (Model::Mlp(report.params), rows)
            } else {
                let params = match init {
                    Some(s) => s.into_fsdnn()?,
                    None => {
                        let front = FrontendTrainConfig {
                            epochs: args.frontend_epochs,
                            seed: args.seed,
                            ..Default::default()
                        };
                        let frontend = pretrain_frontend(&train, &[dim, args.frontend_width, size], &front)?.params;
                        let scorer = scorer_init(size, size, &vec![args.width; args.layers], args.seed)?;
                        FsdnnParams::new(frontend, scorer)?
                    }
                };
                let joint = FsdnnTrainConfig {
                    sdnn: config,
                    frontend_sgd: sgd(args, args.frontend_lr.unwrap_or(lr / 10.0)),
                };
                let report = train_fsdnn_resume(&train, &train_lat, params, &joint, dev_set, epochs_done)?;
                let rows = report.log.iter().map(|e| log_row(&e.structured)).collect();
                (Model::Fsdnn(report.params), rows)
            }
        }
    };
    let append = args.init.is_some();
    write_log(&log_path, &rows, append)?;
    check_finite(&rows)?;
    let saved = SavedModel {
        model,
        dim,
        size,
        epochs_trained: epochs_done + args.epochs,
    };
    save_model(&args.out, &saved)?;
    if let Some(last) = rows.last() {
        info!("final loss {:.6e}", last.loss);
        println!(
            "trained {} model for {} epochs (total {}); final loss {:.6e}{}",
            saved.model.kind(),
            args.epochs,
            saved.epochs_trained,
            last.loss,
            last.dev_per.map(|p| format!(", dev PER {p:.2}")).unwrap_or_default()
        );
    }
    Ok(())
}

fn log_row(e: &structseq::sdnn::EpochLog) -> LogRow {
    LogRow {
        epoch: e.epoch,
        loss: e.loss,
        learning_rate: e.learning_rate,
        dev_per: e.dev_per.map(|p| 100.0 * p),
    }
}

fn train_linear_model(
    args: &TrainArgs,
    train: &[Utterance],
    dev: &[Utterance],
    dim: usize,
    size: usize,
    init: Option<SavedModel>,
) -> CliResult<(Model, Vec<LogRow>)> {
    let epochs_done = init.as_ref().map_or(0, |s| s.epochs_trained);
    let params = match init {
        Some(s) => s.into_linear()?,
        None => LinearParams::zeros(dim, size),
    };
    let config = LinearTrainConfig {
        cost_c: args.cost,
        epochs: args.epochs,
        learning_rate: args.lr.unwrap_or(LinearTrainConfig::default().learning_rate),
        batch_size: args.batch_size.unwrap_or(8),
        seed: args.seed,
    };
    let report = train_linear_from(train, params, &config)?;
    let dev_per = if dev.is_empty() {
        None
    } else {
        let hyps = dev
            .iter()
            .map(|u| viterbi_decode(&u.x, &report.params))
            .collect::<structseq::Result<Vec<_>>>()?;
        let refs: Vec<&[usize]> = dev.iter().map(|u| &*u.y_ref).collect();
        Some(100.0 * corpus_per(&refs, &hyps.iter().map(|h| &**h).collect::<Vec<_>>())?)
    };
    let n = report.objective.len() - 1;
    let rows = report.objective[1..]
        .iter()
        .enumerate()
        .map(|(t, &loss)| LogRow {
            epoch: epochs_done + t + 1,
            loss,
            learning_rate: config.learning_rate / ((1 + t) as f64).sqrt(),
            dev_per: (t + 1 == n).then_some(dev_per).flatten(),
        })
        .collect();
    Ok((Model::Linear(report.params), rows))
}
