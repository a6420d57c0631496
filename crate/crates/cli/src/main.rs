use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nctorus::suite::{self, EngineConfig, Format, Suite, SuiteError};

/// Verification driver for the deformed torus engine.
#[derive(Parser, Debug)]
#[command(name = "nctorus", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite (the default).
    Run,
    /// Report per-order defects of the known obstructions at every truncation order up to --order.
    Sweep,
}

#[derive(Args, Debug)]
struct Opts {
    /// Truncation order N in ℏ.
    #[arg(long, global = true, env = "NCTORUS_ORDER", default_value_t = 4)]
    order: usize,

    #[arg(long, global = true, env = "NCTORUS_TOL_SYMBOLIC", default_value_t = 1e-12)]
    tol_symbolic: f64,

    #[arg(long, global = true, env = "NCTORUS_TOL_ANALYTIC", default_value_t = 1e-8)]
    tol_analytic: f64,

    /// Number of quasi-random sample points per check.
    #[arg(long, global = true, env = "NCTORUS_SAMPLES", default_value_t = 20)]
    samples: usize,

    #[arg(long, global = true, env = "NCTORUS_SEED", default_value_t = 0)]
    seed: u64,

    /// Hard cap on Gaussian terms per residue.
    #[arg(long, global = true, env = "NCTORUS_TERM_CAP", default_value_t = 10_000)]
    term_cap: usize,

    /// axioms, twist, zak, theta, rank or all.
    #[arg(long, global = true, env = "NCTORUS_SUITE", default_value = "all")]
    suite: String,

    /// json, csv or text.
    #[arg(long, global = true, env = "NCTORUS_FORMAT", default_value = "text")]
    format: String,

    /// θ as comma-separated ℏ-coefficients, e.g. "0,1,0.5". Defaults to θ = ℏ.
    #[arg(long, global = true, env = "NCTORUS_THETA", allow_hyphen_values = true)]
    theta: Option<String>,
}

impl Opts {
    fn config(&self) -> Result<EngineConfig, SuiteError> {
        let format: Format = self.format.parse()?;
        let theta = self.theta.as_deref().map(suite::parse_theta_spec).transpose()?;
        let config = EngineConfig {
            order: self.order,
            tol_symbolic: self.tol_symbolic,
            tol_analytic: self.tol_analytic,
            samples: self.samples,
            seed: self.seed,
            term_cap: self.term_cap,
            format,
            theta,
        };
        config.validate()?;
        Ok(config)
    }
}

fn usage_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("nctorus: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let config = match cli.opts.config() {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let mut stdout = std::io::stdout().lock();
    match cli.command.unwrap_or(Command::Run) {
        Command::Run => {
            let suite: Suite = match cli.opts.suite.parse() {
                Ok(s) => s,
                Err(e) => return usage_error(e),
            };
            let reports = match suite::run_suite(suite, &config) {
                Ok(r) => r,
                Err(e) => return usage_error(e),
            };
            if stdout.write_all(&suite::emit(&reports, config.format)).is_err() {
                return ExitCode::from(1);
            }
            if suite::all_pass(&reports) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Sweep => match suite::sweep(&config) {
            Ok(rows) => {
                let _ = stdout.write_all(&suite::emit_sweep(&rows, config.format));
                ExitCode::SUCCESS
            }
            Err(e) => usage_error(e),
        },
    }
}
