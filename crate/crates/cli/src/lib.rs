//! Command-line harness: configuration, seeding, dispatch and report files.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{apply_override, load_table, set_path, RunConfig, SEED_ENV};

#[derive(Debug, Parser)]
#[command(name = "ipsd", version, about = "Spin-system and Wright-Fisher duality toolkit")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; falls back to the config file, then the IPSD_SEED variable.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override a config key, e.g. `--set diffusion.s=2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Gillespie runs of the spin system; density time series.
    SpinRun,
    /// Annihilating dual runs from `spin.b`.
    DualRun,
    /// Pathwise and Monte Carlo parity duality.
    ParityCheck,
    /// Generator equality and Feynman-Kac residuals on small kernels.
    ExactCheck,
    /// Mean-field ODE, optionally against the complete-graph spin system.
    Meanfield,
    /// Lattice Wright-Fisher diffusion summaries.
    DiffusionRun,
    /// Dual walker runs and survival.
    WalkerRun,
    /// Generator battery and Monte Carlo moment duality.
    MomentCheck,
    /// Heterozygosity and DBARW survival probe.
    CoexistProbe,
    /// Mixed-moment decay against the BCRW bound.
    ExtinctProbe,
    /// Runs `sweep.command` once per value of `sweep.key`.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SpinRun => "spin-run",
            Command::DualRun => "dual-run",
            Command::ParityCheck => "parity-check",
            Command::ExactCheck => "exact-check",
            Command::Meanfield => "meanfield",
            Command::DiffusionRun => "diffusion-run",
            Command::WalkerRun => "walker-run",
            Command::MomentCheck => "moment-check",
            Command::CoexistProbe => "coexist-probe",
            Command::ExtinctProbe => "extinct-probe",
            Command::Sweep => "sweep",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        const ALL: [Command; 10] = [
            Command::SpinRun,
            Command::DualRun,
            Command::ParityCheck,
            Command::ExactCheck,
            Command::Meanfield,
            Command::DiffusionRun,
            Command::WalkerRun,
            Command::MomentCheck,
            Command::CoexistProbe,
            Command::ExtinctProbe,
        ];
        ALL.into_iter().find(|c| c.name() == s).with_context(|| format!("unknown or unsweepable command {s:?}"))
    }
}

/// Builds the resolved configuration from file, overrides, flags and environment.
pub fn resolve_config(cli: &Cli) -> Result<(toml::Table, RunConfig)> {
    let mut table = load_table(cli.config.as_deref())?;
    for o in &cli.overrides {
        apply_override(&mut table, o)?;
    }
    if let Some(r) = cli.reps {
        table.insert("reps".into(), toml::Value::Integer(i64::try_from(r)?));
    }
    let mut cfg = RunConfig::from_table(table.clone())?;
    let env = std::env::var(SEED_ENV).ok();
    let seed = cfg.resolve_seed(cli.seed, env.as_deref())?;
    table.insert("seed".into(), toml::Value::Integer(seed as i64));
    cfg.validate()?;
    Ok((table, cfg))
}

fn dispatch(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<bool> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match cmd {
        Command::SpinRun => commands::spin_run(cfg, out),
        Command::DualRun => commands::dual_run(cfg, out),
        Command::ParityCheck => commands::parity_check(cfg, out),
        Command::ExactCheck => commands::exact_check(cfg, out),
        Command::Meanfield => commands::meanfield(cfg, out),
        Command::DiffusionRun => commands::diffusion_run(cfg, out),
        Command::WalkerRun => commands::walker_run(cfg, out),
        Command::MomentCheck => commands::moment_check(cfg, out),
        Command::CoexistProbe => commands::coexist_probe(cfg, out),
        Command::ExtinctProbe => commands::extinct_probe(cfg, out),
        Command::Sweep => bail!("sweep cannot be nested"),
    }
}

#[derive(Serialize)]
struct SweepEntry {
    index: usize,
    value: toml::Value,
    dir: String,
    pass: bool,
}

fn sweep(table: &toml::Table, cfg: &RunConfig, out: &Path) -> Result<bool> {
    let cmd = Command::from_name(&cfg.sweep.command)?;
    if cfg.sweep.values.is_empty() {
        bail!("sweep.values is empty");
    }
    std::fs::create_dir_all(out)?;
    let mut entries = Vec::new();
    for (i, v) in cfg.sweep.values.iter().enumerate() {
        let mut t = table.clone();
        set_path(&mut t, &cfg.sweep.key, v.clone())?;
        let sub = RunConfig::from_table(t)?;
        sub.validate()?;
        let dir = format!("{i:03}");
        let pass = dispatch(cmd, &sub, &out.join(&dir))?;
        entries.push(SweepEntry { index: i, value: v.clone(), dir, pass });
    }
    let pass = entries.iter().all(|e| e.pass);
    output::write_report(out, "sweep", cfg, Some(pass), &entries)?;
    Ok(pass)
}

/// Runs one invocation; `Ok(false)` means a check ran but failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let (table, cfg) = resolve_config(cli)?;
    let work = || match cli.command {
        Command::Sweep => sweep(&table, &cfg, &cli.out),
        cmd => dispatch(cmd, &cfg, &cli.out),
    };
    match cli.threads {
        Some(n) => {
            if n == 0 {
                bail!("--threads must be positive");
            }
            rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(work)
        }
        None => work(),
    }
}
