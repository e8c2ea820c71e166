use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use mixpois_cli::{execute, Command, Format, RunConfig, DEFAULT_SEED};

/// Mixed Poisson tables, exact moments and Monte Carlo limit experiments.
///
/// Exit status: 0 when every verdict passes, 2 when any verdict fails,
/// 1 on a configuration or numerical error.
#[derive(Parser, Debug)]
#[command(name = "mixpois", version)]
struct Cli {
    command: Command,
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (0 = one per processor).
    #[arg(long)]
    workers: Option<usize>,
    /// Order `s` for centered-poly.
    #[arg(long)]
    order: Option<u32>,
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = cfg.command {
        if c != cli.command {
            anyhow::bail!(
                "field `command`: config says {c} but {} was requested",
                cli.command
            );
        }
    }
    cfg.command = Some(cli.command);
    // The seed actually used is echoed into the report.
    cfg.seed = Some(cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED));
    cfg.out = cli.out.clone().or(cfg.out);
    cfg.format = cli.format.or(cfg.format);
    cfg.workers = cli.workers.or(cfg.workers);
    cfg.order = cli.order.or(cfg.order);
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = resolve(cli)?;
    let outcome = execute(&cfg)?;
    let mut stdout = std::io::stdout().lock();
    let mut text = String::new();
    match &cfg.out {
        Some(path) => std::fs::write(path, &outcome.artifact)
            .with_context(|| format!("writing {}", path.display()))?,
        None => text.push_str(&outcome.artifact),
    }
    for v in outcome.failed() {
        let rho = v.rho.map(|r| format!(" rho={r}")).unwrap_or_default();
        eprintln!(
            "FAIL {}{rho}: {} {:?} {} (margin {})",
            v.id, v.lhs, v.relation, v.rhs, v.margin
        );
    }
    text.push_str(&outcome.summary);
    text.push('\n');
    // A closed pipe (`| head`) is not an error; the exit status still
    // reports the verdicts.
    match stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
    {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            return Err(e).context("writing to standard output")
        }
        _ => {}
    }
    Ok(outcome.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
