use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlhv::commands::{self, Overrides, RunContext};
use nlhv::config::parse_config;
use nlhv::error::{CliError, CliResult};

/// Configuration used by `calibrate` when no file is given; the suite only
/// reads the seed from it.
const CALIBRATION_DEFAULT: &str =
    r#"{"model":{"d":2,"n":2,"mu":1.0,"omega":1.0},"integrator":{"mode":"microcanonical","steps":0}}"#;

#[derive(Debug, Parser)]
#[command(name = "nlhv", version, about = "Classical bosonic matrix model experiments")]
struct Cli {
    /// Experiment configuration (JSON), or a run manifest to re-execute.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true, env = "NLHV_OUT_DIR")]
    out: Option<PathBuf>,
    /// Master seed, overriding `ensemble.master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the matrix dynamics and record trajectories.
    Simulate,
    /// Diffusion of eigenvalues against the scaling prediction.
    Sweep,
    /// Schrödinger references and the Nelson walker cross-check.
    Oracle,
    /// Eigenvalue marginals against oracle densities.
    Compare {
        /// `particles.csv` written by `simulate`.
        #[arg(long)]
        trajectory: PathBuf,
        /// `oracle.json` written by `oracle`.
        #[arg(long)]
        oracle: PathBuf,
    },
    /// Synthetic estimator suite.
    Calibrate,
}

fn run(cli: Cli) -> CliResult<()> {
    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
        replicas: cli.replicas,
        threads: cli.threads,
    };
    let ctx = match (&cli.config, &cli.command) {
        (Some(path), _) => RunContext::from_file(path, &overrides)?,
        (None, Command::Calibrate) => RunContext::new(parse_config(CALIBRATION_DEFAULT)?, &overrides)?,
        (None, _) => return Err(CliError::Usage("--config is required".into())),
    };
    match cli.command {
        Command::Simulate => {
            let s = ctx.install(|| commands::cmd_simulate(&ctx))??;
            println!("simulated {} replicas into {}", s.replicas.len(), ctx.out_dir.display());
        }
        Command::Sweep => {
            let points = commands::cmd_sweep(&ctx)?;
            for p in &points {
                println!(
                    "N={} t={} nu_hat={:.4e}±{:.1e} nu_pred={:.4e} ratio={:.3}",
                    p.n,
                    p.t_scaled,
                    p.nu_hat,
                    p.nu_stderr,
                    p.nu_pred,
                    p.ratio()
                );
            }
        }
        Command::Oracle => {
            let r = ctx.install(|| commands::cmd_oracle(&ctx))??;
            for n in &r.nelson {
                println!(
                    "{}: free-packet L1 {:.4}, harmonic L1 {:.4}",
                    n.convention.as_str(),
                    n.free_packet_l1,
                    n.harmonic_l1
                );
            }
        }
        Command::Compare { trajectory, oracle } => {
            let r = commands::cmd_compare(&ctx, &trajectory, &oracle)?;
            for d in &r.distances {
                println!("{}: L1 {:.4}, KS {:.4}", d.reference, d.l1, d.ks);
            }
        }
        Command::Calibrate => {
            let r = commands::cmd_calibrate(&ctx)?;
            for c in &r.checks {
                println!(
                    "{}: {} ({:.4e})",
                    c.name,
                    if c.passed { "ok" } else { "FAILED" },
                    c.measured
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nlhv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
