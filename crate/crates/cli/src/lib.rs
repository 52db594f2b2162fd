//! Command-line front end: corpus generation, training, lattice building,
//! decoding, evaluation, depth × width sweeps and gradient checks.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod config;
pub mod decode;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod sweep;
pub mod train;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use structseq::corpus::{generate_corpus, save_alphabet, save_corpus, Split, SyntheticSpec};
use structseq::lattice::write_lattices;
use structseq::linear::beam_lattice;
use structseq::par;

use crate::args::{Cli, Command, GenDataArgs, LatticeArgs};
use crate::error::{CliError, CliResult};

fn gen_data(args: &GenDataArgs) -> CliResult<()> {
    if args.size < 2 {
        return Err(CliError::Usage(format!("--size must be >= 2, got {}", args.size)));
    }
    if args.dim == 0 || args.components == 0 || args.utterances < 10 {
        return Err(CliError::Usage("need --dim >= 1, --components >= 1 and --utterances >= 10".into()));
    }
    if !(args.variance >= 0.0 && args.variance.is_finite()) {
        return Err(CliError::Usage("--variance must be finite and >= 0".into()));
    }
    let spec = SyntheticSpec::mixture(args.size, args.dim, args.components, args.variance, args.seed)?;
    let corpus = generate_corpus(&spec, args.utterances)?;
    io::ensure_dir(&args.out)?;
    save_alphabet(&io::alphabet_path(&args.out), &corpus.alphabet)?;
    let mut sizes = Vec::new();
    for split in Split::ALL {
        let utts = corpus.split(split);
        save_corpus(&io::split_path(&args.out, split), &utts)?;
        sizes.push(format!("{} {}", split.name(), utts.len()));
    }
    println!(
        "utterances {} K {} D {} ({})",
        corpus.utterances.len(),
        corpus.size(),
        args.dim,
        sizes.join(", ")
    );
    Ok(())
}

fn lattice(args: &LatticeArgs) -> CliResult<()> {
    if args.beam == 0 {
        return Err(CliError::Usage("--beam must be >= 1".into()));
    }
    let alphabet = io::read_alphabet(&args.corpus)?;
    let out = io::lattice_dir(&args.corpus, args.out.as_deref());
    io::ensure_dir(&out)?;
    let mut params = None;
    for split in Split::ALL {
        let corpus = io::read_split(&args.corpus, &alphabet, split)?;
        let Some(first) = corpus.first() else {
            continue;
        };
        let p = match &params {
            Some(p) => p,
            None => params.insert(io::read_model(&args.model, first.x.dim(), alphabet.size())?.into_linear()?),
        };
        let lattices = par::map_collect(&corpus, |u| beam_lattice(&u.x, p, args.beam))
            .into_iter()
            .collect::<structseq::Result<Vec<_>>>()?;
        let path = io::lattice_path(&out, split);
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        write_lattices(&mut w, &lattices)?;
        std::io::Write::flush(&mut w)?;
        let arcs: usize = lattices.iter().map(|l| l.arcs().len()).sum();
        println!("{}: {} lattices, {arcs} arcs", split.name(), lattices.len());
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train::run(a),
        Command::Lattice(a) => lattice(a),
        Command::Decode(a) => decode::run_decode(a),
        Command::Eval(a) => decode::run_eval(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Gradcheck(a) => gradcheck::run(a),
    }
}

/// Parses `argv` (config file included), runs the command and returns the
/// process exit code.
pub fn main_with(argv: Vec<OsString>) -> i32 {
    let argv = match config::expand_args(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
