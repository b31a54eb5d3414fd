//! Command-line harness for the coexistence experiment suite.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use secoex::experiments::{
    self, certify_design, ExperimentConfig, CODE_VERSION,
};
use secoex::algorithm::{self, SearchGrid};
use secoex::radar::{design_ideal_covariance, BeampatternSpec};
use secoex::scenario::ScenarioTemplate;
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "secoex",
    version = CODE_VERSION,
    about = "Robust cooperative transmitter design for radar/communication coexistence"
)]
struct Cli {
    /// TOML experiment configuration (defaults are built in).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Monte Carlo trials (overrides the config value).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Base seed (overrides the config value).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores; overrides the config value).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Beampattern sweep over mismatch budgets (one curve per gamma_p).
    Beampattern,
    /// Robust vs. non-robust mean worst-case secrecy over the P_C sweep.
    SecrecyPower,
    /// Secrecy rate vs. average detection probability trade-off.
    Tradeoff,
    /// One flagship design with the full search grid and certification.
    Single,
    /// Quick end-to-end self check on a small scenario.
    Selftest,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn selftest() -> Result<()> {
    let template = ScenarioTemplate {
        n_bs: 3,
        m_radar: 4,
        ..ScenarioTemplate::default()
    };
    let sc = template.sample(17);
    let spec = BeampatternSpec::indicator(sc.mainlobe);
    let r_d = design_ideal_covariance(&spec, sc.p_r, sc.m_radar)?;
    let grid = SearchGrid {
        points: 8,
        refinement: 1,
        ..SearchGrid::default()
    };
    let sol = algorithm::run(&sc, &r_d, &grid, 512, 17)?;
    let cert = certify_design(&sc, &r_d, &sol);
    println!(
        "selftest: mu* = {:.4e}, certified rate {:.4} bit/s/Hz, rank ratio {:.2e}",
        sol.mu_star, sol.sdr_bound_rate, sol.rank_ratio
    );
    println!(
        "selftest: oracle rank-one worst-case rate {:.4} bit/s/Hz",
        sol.oracle_rank_one.secrecy_rate
    );
    if !cert.pass {
        anyhow::bail!("selftest certificate failed: {}", cert.details.join("; "));
    }
    println!("selftest: certificate pass");
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Selftest => return selftest(),
        _ => {}
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Beampattern => {
            let summary = experiments::run_beampattern_experiment(&cfg, &cli.out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::SecrecyPower => {
            let summary = experiments::run_secrecy_vs_power(&cfg, &cli.out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Tradeoff => {
            let summary = experiments::run_tradeoff_experiment(&cfg, &cli.out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Single => {
            let (text, _) = experiments::run_single(&cfg, &cli.out)?;
            print!("{text}");
        }
        Command::Selftest => unreachable!(),
    }
    Ok(())
}
