use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use spinopt::action_space::{denormalize, ActionParams};
use spinopt::campaign::{
    ablation_suite, evaluate_params, replay, run_campaign, AblationOptions, CampaignConfig, EvaluationContext,
    ParamsFile,
};
use spinopt::perception::FilterConfig;
use spinopt::reward::RewardConfig;
use spinopt::simulator::{simulate, ObjectModel, SimConfig};
use spinopt::trajectory_io::export_episode;
use spinopt::Result;

#[derive(Parser)]
#[command(name = "spinopt", version, about = "Grasp, spin and catch primitive optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization campaign from a TOML config.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `cmaes.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeatability check of a stored best-params file.
    Evaluate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        object: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a recorded trajectory file.
    Replay {
        #[arg(long)]
        trajectory: PathBuf,
        /// Fall-penalty weight.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run every mode on every object and print the success table.
    Ablate {
        #[arg(long, value_delimiter = ',', default_value = "pen1,pen2,pen3")]
        objects: Vec<String>,
        #[arg(long, default_value = "runs/ablation")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Simulate one episode and export its trajectory file.
    Simulate {
        #[arg(long)]
        object: String,
        /// Best-params file; the initial action when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print(value: serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("json value serializes")
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Campaign { config, seed, out } => {
            let mut cfg = CampaignConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.cmaes.seed = s;
            }
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let report = run_campaign(&cfg)?;
            let s = &report.summary;
            print(json!({
                "object": s.object.name,
                "mode": s.mode,
                "seed": s.cmaes.seed,
                "evaluations": s.evaluations,
                "best": s.best,
                "first_success_generation": s.first_success_generation,
                "total_successes": s.total_successes,
                "out_dir": report.out_dir,
            }));
        }
        Command::Evaluate {
            params,
            object,
            trials,
            seed,
        } => {
            let model = ObjectModel::preset(&object)?;
            let ctx = EvaluationContext {
                seed,
                ..Default::default()
            };
            let report = evaluate_params(&params, &model, trials, &ctx)?;
            print(serde_json::to_value(report).expect("report serializes"));
        }
        Command::Replay { trajectory, lambda } => {
            let mut reward = RewardConfig::default();
            if let Some(l) = lambda {
                reward.lambda = l;
            }
            let report = replay(&trajectory, &FilterConfig::default(), &reward)?;
            print(serde_json::to_value(report).expect("report serializes"));
        }
        Command::Ablate {
            objects,
            out,
            seed,
            trials,
        } => {
            let mut opts = AblationOptions {
                trials,
                ..Default::default()
            };
            if let Some(s) = seed {
                opts.base.cmaes.seed = s;
            }
            let report = ablation_suite(&objects, &out, &opts)?;
            print!("{}", report.table());
        }
        Command::Simulate {
            object,
            params,
            out,
            seed,
        } => {
            let model = ObjectModel::preset(&object)?;
            let action = match params {
                Some(p) => ParamsFile::load(&p)?.params,
                None => ActionParams::initial(),
            };
            let sim = SimConfig {
                rng_seed: seed,
                ..Default::default()
            };
            let physical = denormalize(&action, &Default::default())?;
            let episode = simulate(&physical, &model, &sim)?;
            export_episode(&episode, &out)?;
            print(json!({
                "trajectory": out,
                "frames": episode.trajectory.len(),
                "dropped_at": episode.dropped_at,
                "caught": episode.caught,
            }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
