use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use weylscope_cli::commands::{resolve_out_dir, run};
use weylscope_cli::config::{parse_config, parse_manifold, ExperimentConfig, Format, Task};
use weylscope_cli::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "weylscope", version, about = "Spectral and geodesic-flow experiments on model manifolds")]
struct Cli {
    /// JSON experiment configuration; a subcommand given here replaces its task.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed (repeatable; the first one is used).
    #[arg(long, global = true)]
    seed: Vec<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (else the config, WEYLSCOPE_OUT_DIR, or ./weylscope-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Manifold preset, inline JSON, or @file.
    #[arg(long, alias = "profile", global = true)]
    manifold: Option<String>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Tolerance override, key=value.
    #[arg(long = "tolerance", global = true)]
    tolerances: Vec<String>,
    #[command(subcommand)]
    task: Option<Task>,
}

fn load(cli: Cli) -> CliResult<(ExperimentConfig, Option<PathBuf>)> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.display().to_string(), source })?;
            let mut cfg = parse_config(&text)?;
            if let Some(t) = cli.task {
                cfg.task = t;
            }
            cfg
        }
        None => ExperimentConfig::new(
            cli.task
                .ok_or_else(|| CliError::config("task", "give a subcommand or --config"))?,
        ),
    };
    if let Some(m) = &cli.manifold {
        cfg.manifold = Some(parse_manifold(m)?);
    }
    if !cli.seed.is_empty() {
        cfg.seeds = cli.seed;
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    for kv in &cli.tolerances {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config("tolerances", format!("expected key=value, got `{kv}`")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| CliError::config(format!("tolerances.{k}"), format!("`{v}` is not a number")))?;
        cfg.tolerances.insert(k.to_string(), v);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok((cfg, cli.out_dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(cli).and_then(|(cfg, flag)| {
        let out = resolve_out_dir(flag, &cfg);
        run(&cfg, out)
    });
    match result {
        Ok(report) => {
            for l in &report.lines {
                println!("{l}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
