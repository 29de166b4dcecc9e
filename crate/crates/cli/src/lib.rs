//! Command-line front end for the interference simulator.
//!
//! Subcommands `visibility`, `sweep`, `hom`, `keyrate` and `g2`. Exit codes:
//! 0 success, 2 configuration error, 3 I/O error, 4 insufficient statistics.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
pub use commands::{cmd_g2, cmd_hom, cmd_keyrate, cmd_sweep, cmd_visibility};
pub use config::RunConfig;
pub use error::CliError;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(cli: &Cli, monte_carlo: bool) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut overrides = cli.common.overrides();
    overrides.monte_carlo = monte_carlo;
    cfg.apply(&overrides);
    Ok(cfg)
}

fn warn(cfg: &RunConfig) {
    if let Ok(resolved) = cfg.resolve() {
        resolved.warnings().iter().for_each(|w| eprintln!("warning: {w}"));
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let out = &cli.common.out;
    let format = cli.common.format;
    match &cli.command {
        Command::Visibility { mc } => {
            let cfg = load(cli, *mc)?;
            println!("{}", cmd_visibility(&cfg, *mc)?.line());
        }
        Command::Sweep { kind, mc } => {
            let cfg = load(cli, *mc)?;
            if cfg.sweep.monte_carlo {
                warn(&cfg);
            }
            for f in cmd_sweep(*kind, &cfg, out, format)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Hom => {
            let cfg = load(cli, false)?;
            warn(&cfg);
            let r = cmd_hom(&cfg, out, format)?;
            println!(
                "V={:.6} stderr={:.6} model={:.6} chi2={:.2} dof={} p={:.4}",
                r.estimate.visibility, r.estimate.stderr, r.model, r.estimate.chi_square, r.estimate.dof, r.estimate.p_value
            );
        }
        Command::Keyrate { visibilities } => {
            let cfg = load(cli, false)?;
            let r = commands::cmd_keyrate(&cfg, visibilities, out, format)?;
            for (v, rate) in &r.rows {
                println!("V={v} R/Rmax={rate:.6}");
            }
            println!("zero-rate visibility: {:.6}", r.zero_rate_visibility);
        }
        Command::G2 => {
            let cfg = load(cli, false)?;
            warn(&cfg);
            let (est, _) = cmd_g2(&cfg, out)?;
            println!("g2={:.6} stderr={:.6} coincidences={}", est.g2, est.stderr, est.coincidences);
        }
    }
    Ok(())
}
