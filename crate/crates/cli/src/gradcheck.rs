use structseq::gradcheck::{run_all, GradCheckConfig};
use structseq::neural::SigmoidDerivative;

use crate::args::GradcheckArgs;
use crate::error::{CliError, CliResult};

pub fn run(args: &GradcheckArgs) -> CliResult<()> {
    if args.configs == 0 || !(args.tolerance > 0.0) || !(args.epsilon > 0.0) {
        return Err(CliError::Usage("--configs, --tolerance and --epsilon must be positive".into()));
    }
    let config = GradCheckConfig {
        configs: args.configs,
        epsilon: args.epsilon,
        tolerance: args.tolerance,
        seed: args.seed,
        derivative: if args.broken_derivative {
            SigmoidDerivative::Broken
        } else {
            SigmoidDerivative::Exact
        },
    };
    let reports = run_all(&config)?;
    let mut failed = Vec::new();
    for r in &reports {
        println!(
            "{:<8} {} configs {} coordinates {} max relative error {:.3e}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.configs,
            r.coordinates,
            r.max_rel_error
        );
        if let Some(w) = &r.worst {
            println!("         worst {w}");
        }
        if !r.passed {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "gradient check failed at tolerance {:e}: {}",
            args.tolerance,
            failed.join(", ")
        )))
    }
}
