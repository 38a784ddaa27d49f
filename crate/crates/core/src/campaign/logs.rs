//! Records written to a campaign's output directory.
//!
//! - `candidates.jsonl`: one [`CandidateRecord`] per evaluated candidate.
//! - `generations.jsonl`: one [`GenerationRecord`] per generation.
//! - `best_params.json`: a [`ParamsFile`] with the best-so-far action.
//! - `summary.json`: a [`Summary`].
//!
//! Only the `wall_ms` fields vary between runs with the same config.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Mode;
use crate::action_space::{ActionParams, ScalingConfig};
use crate::cma::CmaConfig;
use crate::error::{Error, Result};
use crate::perception::FilterConfig;
use crate::reward::{RewardBreakdown, RewardConfig};
use crate::simulator::{ObjectModel, SimConfig};

pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const GENERATIONS_FILE: &str = "generations.jsonl";
pub const BEST_PARAMS_FILE: &str = "best_params.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub generation: usize,
    pub index: usize,
    pub params: ActionParams,
    pub sim_seed: u64,
    pub trials: usize,
    pub successes: usize,
    /// Mean over trials.
    pub reward: RewardBreakdown,
    /// True when every trial succeeded.
    pub success: bool,
}

/// One generation: its candidates plus the distribution that sampled them.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationLog {
    pub generation: usize,
    pub candidates: Vec<CandidateRecord>,
    /// Search-space mean; `None` in non-optimizing modes.
    pub mean: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub population: usize,
    pub mean: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub lambda: f64,
    pub best_r: f64,
    pub mean_r: f64,
    pub best_so_far_r: f64,
    pub successes: usize,
    pub wall_ms: f64,
}

/// A stored action, as written to `best_params.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub object: String,
    pub mode: Mode,
    pub params: ActionParams,
    pub reward: RewardBreakdown,
    pub generation: usize,
    pub index: usize,
}

impl ParamsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ParamsFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e))?;
        file.params.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub object: ObjectModel,
    pub mode: Mode,
    pub cmaes: CmaConfig,
    pub population_size: usize,
    pub scaling: ScalingConfig,
    pub sim: SimConfig,
    pub filter: FilterConfig,
    pub reward: RewardConfig,
    pub trials_per_eval: usize,
    pub evaluations: usize,
    pub best: ParamsFile,
    pub first_success_generation: Option<usize>,
    pub total_successes: usize,
    pub generations: Vec<GenerationRecord>,
    pub wall_ms: f64,
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("record serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Line-delimited JSON writer.
pub(crate) struct JsonLines {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonLines {
    pub fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(Self {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn push<S: Serialize>(&mut self, record: &S) -> Result<()> {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(self.out, "{line}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Reads back any of the `.jsonl` logs.
pub fn read_jsonl<D: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<D>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, i + 1, e)))
        .collect()
}
