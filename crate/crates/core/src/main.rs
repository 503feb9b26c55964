use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use amo_lab::audit::AuditKind;
use amo_lab::harness::{cmd_audit, cmd_cf, cmd_localize, cmd_lyapunov, cmd_spectrum, exit_code, write_artifacts, Artifact, RunConfig};
use amo_lab::Error;

/// Almost Mathieu operator experiments.
///
/// Settings come from built-in defaults, then `--config`, then `--set`
/// overrides (last wins). Output goes to `output_dir` when set, otherwise
/// the main artifact is printed to stdout.
#[derive(Parser)]
#[command(name = "amo-lab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat TOML config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// `key=value` override in TOML syntax, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convergents, beta estimate and Diophantine audit.
    Cf(Common),
    /// Lyapunov exponent sweep over energies and step counts (CSV).
    Lyapunov(Common),
    /// Eigenfunctions, decay fits and decay certificates.
    Localize(Common),
    /// Sampled lemma audits (JSON lines).
    Audit {
        /// klem1, klem2, numerator, le_resonant, claims, thm1, thm2 or le_uniform.
        which: String,
        #[command(flatten)]
        common: Common,
    },
    /// Spectrum sample over a phase grid (JSON).
    Spectrum(Common),
}

type Command = Box<dyn Fn(&RunConfig) -> Result<Vec<Artifact>, Error>>;

fn run(cli: Cli) -> Result<(), Error> {
    let (common, f): (&Common, Command) = match &cli.cmd {
        Cmd::Cf(c) => (c, Box::new(cmd_cf)),
        Cmd::Lyapunov(c) => (c, Box::new(cmd_lyapunov)),
        Cmd::Localize(c) => (c, Box::new(cmd_localize)),
        Cmd::Spectrum(c) => (c, Box::new(cmd_spectrum)),
        Cmd::Audit { which, common } => {
            let kind: AuditKind = which.parse()?;
            (common, Box::new(move |cfg: &RunConfig| cmd_audit(cfg, kind)))
        }
    };
    let cfg = RunConfig::load(common.config.as_deref(), &common.set)?;
    let artifacts = f(&cfg)?;
    match &cfg.output_dir {
        Some(dir) => {
            for p in write_artifacts(std::path::Path::new(dir), &artifacts)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => print!("{}", artifacts[0].body),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
