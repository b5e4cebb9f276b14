use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trotlab::controllers::PolicyKind;
use trotlab::env::Env;
use trotlab::experiment::disturb::write_disturbance;
use trotlab::experiment::orbits::{periodicity_report, write_orbits, write_trace};
use trotlab::experiment::reproduce::{aggregate_dir, seed_dir};
use trotlab::experiment::{
    disturbance_test, evaluate, orbits, reproduce, train_run, ExperimentConfig, PolicyCheckpoint,
};

#[derive(Parser)]
#[command(
    name = "trotlab",
    version,
    about = "Planar quadruped locomotion experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy with one seed.
    Train {
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Keep episodes running after the robot falls.
        #[arg(long)]
        no_early_stop: bool,
        /// Override the configured number of environment steps.
        #[arg(long)]
        steps: Option<u64>,
        /// Output directory, by default runs/<policy>/seed_<N>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint without exploration noise.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the speed-change and push script on a checkpoint.
    Disturb {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Take the script from this file instead of the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate the seed runs of one policy directory.
    Metrics {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Roll a checkpoint out at constant speed and score its joint orbits.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        vd: f64,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train all policies over the acceptance seeds and run every test.
    Reproduce {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "runs/acceptance")]
        out: PathBuf,
    },
    /// Print the default configuration file.
    Config,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn load_checkpoint(path: &Path) -> Result<PolicyCheckpoint> {
    PolicyCheckpoint::load(path).with_context(|| format!("loading {}", path.display()))
}

/// Directory of a checkpoint file, used as the default output location.
fn beside(checkpoint: &Path, name: &str) -> PathBuf {
    checkpoint.parent().unwrap_or(Path::new(".")).join(name)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            policy,
            seed,
            config,
            no_early_stop,
            steps,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if no_early_stop {
                cfg.episode.early_stop = false;
            }
            if let Some(s) = steps {
                cfg.trainer.total_steps = s;
            }
            let out = out.unwrap_or_else(|| seed_dir(Path::new("runs"), policy, seed));
            let outcome = train_run(policy, seed, &cfg, Some(&out))?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let mut env = Env::new(ckpt.config.env_setup(ckpt.kind)?)?;
            let n = episodes.unwrap_or(ckpt.config.eval.eval_episodes);
            let result = evaluate(
                &mut env,
                &ckpt.actor,
                n,
                0.0,
                &mut ChaCha8Rng::seed_from_u64(seed),
            )?;
            let json = serde_json::json!({
                "policy": ckpt.kind,
                "episodes": n,
                "mean_reward": result.mean,
                "std_reward": result.std,
                "returns": result.returns,
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
        }
        Command::Disturb {
            checkpoint,
            config,
            out,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let script = match config {
                Some(p) => load_config(Some(&p))?.disturbance,
                None => ckpt.config.disturbance.clone(),
            };
            let (traces, report) = disturbance_test(&ckpt, &script)?;
            let out = out.unwrap_or_else(|| beside(&checkpoint, "disturbance"));
            write_disturbance(&out, &traces, &report)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Metrics { run_dir, config } => {
            let cfg = load_config(config.as_deref())?;
            let metrics = aggregate_dir(&run_dir, cfg.eval.reward_threshold)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::Trace {
            checkpoint,
            vd,
            duration,
            out,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let mut pcfg = ckpt.config.periodicity.clone();
            pcfg.v_d = vd;
            if let Some(d) = duration {
                pcfg.duration = d;
            }
            let out = out.unwrap_or_else(|| beside(&checkpoint, "trace"));
            std::fs::create_dir_all(&out)?;
            let rows = orbits::constant_speed_rollout(&ckpt, vd, pcfg.duration, pcfg.seed)?;
            write_trace(&out.join("trace.csv"), &rows)?;
            write_orbits(&out.join("orbits.csv"), &rows)?;
            let report = periodicity_report(&ckpt, &rows, &pcfg)?;
            std::fs::write(
                out.join("periodicity.json"),
                serde_json::to_string_pretty(&report)?,
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Reproduce { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let report = reproduce(&cfg, &out)?;
            for c in &report.criteria {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {}: {}", c.name, c.detail);
            }
        }
        Command::Config => print!("{}", ExperimentConfig::default().to_toml()),
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
