use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{CampaignConfig, Mode, ObjectSpec};
use super::evaluate::{evaluate_action_trials, EvaluationContext};
use super::logs::{write_json, BEST_PARAMS_FILE};
use super::run::run_campaign;
use crate::error::{Error, Result};

/// Object whose full-mode best params feed every `transfer` cell.
pub const TRANSFER_SOURCE: &str = "pen1";

#[derive(Clone, Debug, PartialEq)]
pub struct AblationOptions {
    /// Template for every campaign; object, mode, out_dir and
    /// transfer_from are overwritten per cell.
    pub base: CampaignConfig,
    /// Repeatability trials per cell.
    pub trials: usize,
    /// Root seed of the repeatability trials.
    pub eval_seed: u64,
}

impl Default for AblationOptions {
    fn default() -> Self {
        Self {
            base: CampaignConfig::new(TRANSFER_SOURCE, Mode::Full),
            trials: 10,
            eval_seed: super::evaluate::DEFAULT_EVAL_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub mode: Mode,
    pub object: String,
    pub successes: usize,
    pub trials: usize,
    /// Best reward found by the campaign behind this cell.
    pub campaign_best_r: f64,
    pub first_success_generation: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub objects: Vec<String>,
    pub modes: Vec<Mode>,
    pub seed: u64,
    pub cells: Vec<AblationCell>,
}

impl AblationReport {
    pub fn cell(&self, mode: Mode, object: &str) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.mode == mode && c.object == object)
    }

    /// Mode by object table of `k/n` success counts, in Markdown.
    pub fn table(&self) -> String {
        let mut out = String::from("| mode |");
        for o in &self.objects {
            let _ = write!(out, " {o} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(self.objects.len()));
        for &m in &self.modes {
            let _ = write!(out, "\n| {m} |");
            for o in &self.objects {
                match self.cell(m, o) {
                    Some(c) => {
                        let _ = write!(out, " {}/{} |", c.successes, c.trials);
                    }
                    None => out.push_str(" - |"),
                }
            }
        }
        out.push('\n');
        out
    }
}

fn cell_config(opts: &AblationOptions, object: &str, mode: Mode, out_dir: &Path, source: &Path) -> CampaignConfig {
    let mut cfg = opts.base.clone();
    cfg.object = ObjectSpec::Preset(object.to_owned());
    cfg.mode = mode;
    cfg.out_dir = out_dir.join(object).join(mode.as_str());
    cfg.transfer_from = Some(source.to_owned());
    cfg
}

/// Runs every mode on every object, then scores each cell's best params
/// over `opts.trials` fresh episodes.
///
/// The transfer source campaign runs first, whether or not it is listed.
pub fn ablation_suite(objects: &[String], out_dir: &Path, opts: &AblationOptions) -> Result<AblationReport> {
    if objects.is_empty() {
        return Err(Error::Config("ablation needs at least one object".into()));
    }
    if opts.trials == 0 {
        return Err(Error::Contract("trials must be at least 1".into()));
    }
    let source: PathBuf = out_dir
        .join(TRANSFER_SOURCE)
        .join(Mode::Full.as_str())
        .join(BEST_PARAMS_FILE);
    let source_cfg = cell_config(opts, TRANSFER_SOURCE, Mode::Full, out_dir, &source);
    let source_report = run_campaign(&source_cfg)?;

    let ctx = |cfg: &CampaignConfig| EvaluationContext {
        scaling: cfg.scaling,
        sim: cfg.sim.clone(),
        filter: cfg.filter,
        reward: cfg.reward,
        seed: Some(opts.eval_seed),
    };

    let mut cells = Vec::with_capacity(objects.len() * Mode::ALL.len());
    for &mode in &Mode::ALL {
        for object in objects {
            let cfg = cell_config(opts, object, mode, out_dir, &source);
            let report = if object == TRANSFER_SOURCE && mode == Mode::Full {
                source_report.clone()
            } else {
                run_campaign(&cfg)?
            };
            let model = cfg.object.resolve()?;
            let eval = evaluate_action_trials(&report.best().params, &model, opts.trials, &ctx(&cfg))?;
            cells.push(AblationCell {
                mode,
                object: object.clone(),
                successes: eval.successes,
                trials: eval.trials,
                campaign_best_r: report.best().reward.r,
                first_success_generation: report.summary.first_success_generation,
            });
        }
    }

    let report = AblationReport {
        objects: objects.to_vec(),
        modes: Mode::ALL.to_vec(),
        seed: opts.base.cmaes.seed,
        cells,
    };
    write_json(&out_dir.join("ablation.json"), &report)?;
    std::fs::write(out_dir.join("ablation.md"), report.table())
        .map_err(|e| Error::io(out_dir.join("ablation.md"), e))?;
    Ok(report)
}
