use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::Format;

#[derive(Parser, Debug)]
#[command(name = "chromanneal", version, about = "Chromatin-state models on annealer hardware")]
#[command(after_help = config::fields_help())]
struct Cli {
    /// TOML configuration file; relative paths inside it resolve against its directory.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Override a configuration key, e.g. --set model.nucleosomes=12.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// More log output on stderr (-v, -vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bin and binarize marker tracks into an incidence matrix.
    Ingest,
    /// Moments of the incidence matrix.
    Stats,
    /// Fit model parameters to the empirical moments.
    Learn,
    /// Build the Ising objective of the learned model.
    Build,
    /// Write a hardware graph.
    Topology,
    /// Embed the objective graph on the hardware graph.
    Embed,
    /// Sample the model.
    Sample,
    /// Compare samples with the empirical moments.
    Eval,
    /// Sample and evaluate over a grid of one setting.
    Sweep {
        #[arg(long)]
        axis: Option<String>,
        #[arg(long)]
        grid: Option<String>,
    },
    /// Sample disjoint copies of the model in one anneal.
    Replicate {
        #[arg(long)]
        copies: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let mut overrides = Vec::new();
    for kv in &cli.set {
        match kv.split_once('=') {
            Some((k, v)) => overrides.push((k.trim().to_string(), v.trim().to_string())),
            None => {
                eprintln!("error: --set expects KEY=VALUE, got '{kv}'");
                return ExitCode::from(2);
            }
        }
    }
    match &cli.command {
        Command::Sweep { axis, grid } => {
            if let Some(a) = axis {
                overrides.push(("sweep.axis".into(), format!("{a:?}")));
            }
            if let Some(g) = grid {
                overrides.push(("sweep.grid".into(), format!("{g:?}")));
            }
        }
        Command::Replicate { copies: Some(c) } => overrides.push(("replicate.copies".into(), c.to_string())),
        _ => {}
    }

    let (mut cfg, base) = match config::load(cli.config.as_deref(), &overrides) {
        Ok(v) => v,
        Err(errs) => return report(&errs),
    };
    cfg.resolve_paths(&base);
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    let errs = cfg.validate();
    if !errs.is_empty() {
        return report(&errs);
    }

    let result = match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Stats => commands::stats(&cfg),
        Command::Learn => commands::learn(&cfg),
        Command::Build => commands::build(&cfg),
        Command::Topology => commands::topology(&cfg),
        Command::Embed => commands::embed(&cfg),
        Command::Sample => commands::sample(&cfg),
        Command::Eval => commands::eval(&cfg),
        Command::Sweep { .. } => commands::sweep(&cfg),
        Command::Replicate { .. } => commands::replicate(&cfg),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => report(&[e]),
    }
}

fn report(errs: &[String]) -> ExitCode {
    for e in errs {
        eprintln!("error: {e}");
    }
    ExitCode::FAILURE
}
