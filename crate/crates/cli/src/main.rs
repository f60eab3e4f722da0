use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chainlab_cli::{render, run_pipeline, sweep_widths, thread_cap, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "chainlab", version, about = "Neumann spectra and nodal domains of chain domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline on one domain.
    Run(Common),
    /// Pipeline over a decreasing list of neck widths, with the Courant-sharp certificate.
    Sweep(Common),
    /// Mesh and sign plots only.
    Render(Common),
}

#[derive(Args)]
struct Common {
    /// JSON domain description.
    #[arg(long)]
    config: PathBuf,
    /// Target mesh size.
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 40)]
    n: usize,
    /// Mass-concentration parameter of the classifier.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Eigenvalue exponent of the partition scale.
    #[arg(long, default_value_t = 0.375)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Neck widths for `sweep`, comma separated and strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    widths: Vec<f64>,
    /// 1-based eigenpair indices to plot, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    plot: Vec<usize>,
}

impl From<Common> for RunConfig {
    fn from(c: Common) -> Self {
        RunConfig {
            config: c.config,
            h: c.h,
            eigencount: c.n,
            epsilon: c.eps,
            beta: c.beta,
            widths: c.widths,
            out: c.out,
            seed: c.seed,
            plots: c.plot,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    if let Some(n) = thread_cap(std::env::var("CHAINLAB_THREADS").ok().as_deref())? {
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match command {
        Command::Run(c) => {
            let out = run_pipeline(&c.into())?;
            for f in &out.files {
                println!("{}", f.display());
            }
            let violations = out.analysis.rows.iter().filter(|r| r.courant.violation).count();
            eprintln!(
                "{} eigenpairs, {} Courant violations, {} failed reports",
                out.analysis.spectrum.len(),
                violations,
                out.analysis.reports.iter().filter(|r| r.asserted && !r.satisfied).count()
            );
        }
        Command::Sweep(c) => {
            let out = sweep_widths(&c.into())?;
            for f in &out.files {
                println!("{}", f.display());
            }
            for (w, e) in &out.failures {
                eprintln!("width {w} failed: {e}");
            }
        }
        Command::Render(c) => {
            for f in render(&c.into())? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}
