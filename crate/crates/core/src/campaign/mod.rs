//! Optimization campaigns, ablations, repeatability checks and replay.
//!
//! A campaign is configured in TOML:
//!
//! ```toml
//! object = "pen2"          # preset name, or an [object] table
//! mode = "full"            # init-only | no-grasp | transfer | full
//! trials_per_eval = 1
//! out_dir = "runs/pen2"
//!
//! [cmaes]
//! sigma0 = 0.3
//! generations = 10
//! seed = 24301
//!
//! [reward]
//! lambda = 4.0
//! ```
//!
//! `[scaling]`, `[sim]` and `[filter]` sections override the remaining
//! defaults field by field.

mod ablation;
mod config;
mod evaluate;
mod logs;
mod run;

pub use ablation::{ablation_suite, AblationCell, AblationOptions, AblationReport, TRANSFER_SOURCE};
pub use config::{CampaignConfig, Mode, ObjectSpec};
pub use evaluate::{
    candidate_seed, evaluate_action_trials, evaluate_params, evaluation_seed, replay, run_trials, EvaluationContext,
    EvaluationReport, ReplayReport, TrialSummary, DEFAULT_EVAL_SEED,
};
pub use logs::{
    read_jsonl, CandidateRecord, GenerationLog, GenerationRecord, ParamsFile, Summary, BEST_PARAMS_FILE,
    CANDIDATES_FILE, GENERATIONS_FILE, SUMMARY_FILE,
};
pub use run::{run_campaign, CampaignReport};
