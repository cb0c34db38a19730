mod args;
mod commands;
mod output;
mod svg;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;
use wqed2d::config::RunConfig;

use args::{Cli, Command};
use output::OutputDir;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration: exit 2.
    Usage(String),
    /// The computation itself failed: exit 1.
    Domain(wqed2d::Error),
    Io(std::io::Error),
}

impl From<wqed2d::Error> for CliError {
    fn from(e: wqed2d::Error) -> Self {
        match e {
            wqed2d::Error::Config(m) => CliError::Usage(m),
            e => CliError::Domain(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "configuration error: {m}"),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.command.apply(&mut cfg);
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    let cfg = resolve(&cli)?;
    let mut out = OutputDir::create(&cfg.output, cli.svg)?;
    let started = Instant::now();
    log::info!("{} -> {}", cli.command.name(), out.path().display());
    let result = match &cli.command {
        Command::Bands { .. } => commands::bands(&cfg, &mut out),
        Command::GapScan { .. } => commands::gap_scan(&cfg, &mut out),
        Command::SingleScaling { .. } => commands::single_scaling(&cfg, &mut out),
        Command::TwobodySpectrum { .. } => commands::twobody_spectrum(&cfg, &mut out),
        Command::Boundstate { .. } => commands::boundstate(&cfg, &mut out),
        Command::BsScan { .. } => commands::bs_scan(&cfg, &mut out),
        Command::FiniteSize { .. } => commands::finite_size(&cfg, &mut out),
        Command::Scaling { .. } => commands::scaling(&cfg, &mut out),
        Command::Dynamics { .. } => commands::dynamics(&cfg, &mut out),
        Command::FreespaceSrScan { .. } => commands::freespace_sr_scan_cmd(&cfg, &mut out),
        Command::FreespaceBands { .. } => commands::freespace_bands(&cfg, &mut out),
    };
    result?;
    let mut outputs = out.written().to_vec();
    outputs.sort();
    let manifest = json!({
        "command": cli.command.name(),
        "config": cfg,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "outputs": outputs,
    });
    out.json("manifest.json", &manifest)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wqed2d: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
