use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nilres_cli::{config::ExperimentConfig, exit_code, selftest, CONFIG_ERROR, RUN_ERROR};

/// Resonances of partially hyperbolic nilmanifold automorphisms.
#[derive(Parser)]
#[command(name = "nilres", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML). Defaults to the golden system.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest correlation lag; overrides `[correlation] n_max`.
    #[arg(long, global = true)]
    n_max: Option<u32>,
    /// Quadrature grid size; overrides `[correlation] grid`.
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Correlate, fit and check; writes correlations, resonances.json and report.md.
    Verify,
    /// Correlation series only.
    Correlate,
    /// Fit a series previously written by `correlate`.
    Resonances {
        /// The pair-0 series file.
        #[arg(long, default_value = "correlations.csv")]
        series: PathBuf,
    },
    /// Anisotropic norm experiments; writes norms.json and norms.md.
    Norms,
    /// Fast internal consistency checks.
    Selftest,
}

fn load(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::golden(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(n) = cli.n_max {
        cfg.correlation.n_max = n;
    }
    if let Some(g) = cli.grid {
        cfg.correlation.grid = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn failures(checks: impl IntoIterator<Item = (String, bool, String)>) {
    for (name, pass, detail) in checks {
        if !pass {
            eprintln!("FAIL {name}: {detail}");
        }
    }
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let out = &cfg.output.dir;
    match &cli.command {
        Command::Verify | Command::Resonances { .. } => {
            let analysis = match &cli.command {
                Command::Verify => nilres_cli::cmd_verify(cfg, out)?,
                Command::Resonances { series } => nilres_cli::cmd_resonances(cfg, series, out)?,
                _ => unreachable!(),
            };
            for (i, p) in analysis.pairs.iter().enumerate() {
                failures(
                    p.verdict
                        .checks
                        .iter()
                        .map(|c| (format!("pair {i} {}", c.name), c.pass, c.detail.clone())),
                );
            }
            failures(analysis.checks.iter().map(|c| (c.name.clone(), c.pass, c.detail.clone())));
            println!("{} -> {}", if analysis.pass() { "PASS" } else { "FAIL" }, out.display());
            Ok(analysis.pass())
        }
        Command::Correlate => {
            nilres_cli::cmd_correlate(cfg, out)?;
            println!("wrote {}", out.display());
            Ok(true)
        }
        Command::Norms => {
            let report = nilres_cli::cmd_norms(cfg, out)?;
            failures(
                report
                    .entries
                    .iter()
                    .map(|e| (e.lemma.clone(), e.verdict, format!("{} (lhs/rhs {:.4})", e.detail, e.ratio))),
            );
            println!("{} -> {}", if report.passed() { "PASS" } else { "FAIL" }, out.display());
            Ok(report.passed())
        }
        Command::Selftest => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR as u8);
        }
    }
    if let Command::Selftest = cli.command {
        let outcomes = selftest::run();
        for o in &outcomes {
            println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        }
        return ExitCode::from(exit_code(outcomes.iter().all(|o| o.pass)) as u8);
    }
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(CONFIG_ERROR as u8);
        }
    };
    match run(&cli, &cfg) {
        Ok(pass) => ExitCode::from(exit_code(pass) as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(RUN_ERROR as u8)
        }
    }
}
