use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tresca_cli::config::{RunConfig, Settings};
use tresca_cli::{run, verify, CliError};

/// Nitsche finite element solver for Tresca frictional contact.
#[derive(Parser)]
#[command(name = "tresca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on one mesh and write the summary, multipliers, indicators and VTK files.
    Solve(Common),
    /// Uniform refinement table `h,N,norm,eta`.
    Uniform(Common),
    /// Adaptive solve, estimate, mark and refine loop.
    Adapt(Common),
    /// Run the built-in oracle checks.
    Verify(Common),
    /// Solve and write VTK files only.
    Export(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides such as `--gap -0.05 --cells-per-side 8`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        // `--config` and `--out` may also arrive among the trailing overrides.
        let (mut config, mut out) = (self.config.clone(), self.out.clone());
        let mut rest = Vec::new();
        let mut it = self.overrides.iter();
        while let Some(a) = it.next() {
            let slot = match a.as_str() {
                "--config" => &mut config,
                "--out" => &mut out,
                _ => {
                    rest.push(a.clone());
                    continue;
                }
            };
            let value = it.next().ok_or_else(|| CliError::Config(format!("{a} needs a path")))?;
            *slot = Some(PathBuf::from(value));
        }
        let mut settings = match &config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                Settings::parse(&text)?
            }
            None => Settings::default(),
        };
        settings.apply_overrides(&rest)?;
        if let Some(out) = &out {
            settings.set("out", &out.display().to_string())?;
        }
        Ok(settings.resolve()?)
    }
}

fn configure_threads() -> Result<(), CliError> {
    faer::set_global_parallelism(faer::Par::Seq);
    let n = match std::env::var("TRESCA_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("TRESCA_THREADS must be a count, got `{v}`")))?,
        Err(_) => 0,
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Solve(c) => {
            let r = run::run_solve(&c.resolve()?)?;
            println!("h,N,norm,eta\n{},{},{},{}", r.h, r.n, r.norm, r.eta);
        }
        Command::Uniform(c) => {
            let config = c.resolve()?;
            let (rows, err) = run::uniform_rows(&config);
            run::write_uniform(&config, &rows)?;
            print!("{}", run::uniform_csv(&rows));
            if let Some(e) = err {
                return Err(e);
            }
        }
        Command::Adapt(c) => {
            let history = run::run_adaptive(&c.resolve()?)?;
            let mut buf = Vec::new();
            tresca_core::adapt::write_history_csv(&history, &mut buf).expect("in-memory write");
            print!("{}", String::from_utf8_lossy(&buf));
        }
        Command::Verify(c) => {
            let checks = verify::run_checks(&c.resolve()?)?;
            for check in &checks {
                println!("{}", check.line());
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Verification { failed, total: checks.len() });
            }
        }
        Command::Export(c) => {
            let path = run::run_export(&c.resolve()?)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
