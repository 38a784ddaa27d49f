use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{CampaignConfig, Mode};
use super::evaluate::{candidate_seed, run_trials};
use super::logs::{
    write_json, CandidateRecord, GenerationLog, GenerationRecord, JsonLines, ParamsFile, Summary, BEST_PARAMS_FILE,
    CANDIDATES_FILE, GENERATIONS_FILE, SUMMARY_FILE,
};
use crate::action_space::{ActionParams, NORM_LOWER, NORM_UPPER};
use crate::cma::OptimizerState;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CampaignReport {
    pub summary: Summary,
    pub generations: Vec<GenerationLog>,
    pub out_dir: PathBuf,
}

impl CampaignReport {
    pub fn best(&self) -> &ParamsFile {
        &self.summary.best
    }

    pub fn candidates(&self) -> impl Iterator<Item = &CandidateRecord> {
        self.generations.iter().flat_map(|g| g.candidates.iter())
    }
}

fn fixed_action(cfg: &CampaignConfig) -> Result<Option<ActionParams>> {
    match cfg.mode {
        Mode::InitOnly => Ok(Some(ActionParams::initial())),
        Mode::Transfer => {
            let path = cfg.transfer_from.as_ref().expect("validated");
            if !path.exists() {
                return Err(Error::Config(format!(
                    "transfer source {} does not exist",
                    path.display()
                )));
            }
            Ok(Some(ParamsFile::load(path)?.params))
        }
        Mode::NoGrasp | Mode::Full => Ok(None),
    }
}

/// Runs one campaign and writes its logs under `cfg.out_dir`.
///
/// Optimizing modes run `generations` rounds of ask, parallel evaluate,
/// tell. The other modes evaluate their fixed action with the same budget
/// and the same per-candidate simulator seeds.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    let started = Instant::now();
    cfg.validate()?;
    let setup = cfg.evaluation_setup()?;
    let fixed = fixed_action(cfg)?;
    let lambda = cfg.population_size();
    let seed = cfg.cmaes.seed;

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", cfg.out_dir.display())))?;
    let mut candidate_log = JsonLines::create(cfg.out_dir.join(CANDIDATES_FILE))?;
    let mut generation_log = JsonLines::create(cfg.out_dir.join(GENERATIONS_FILE))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let mut optimizer = if cfg.mode.optimizes() {
        let n = cfg.mode.dimension();
        let mean0 = ActionParams::<f64>::initial().to_search_vector(cfg.mode == Mode::Full);
        Some(
            OptimizerState::init(&mean0, cfg.cmaes.sigma0, lambda, seed)?
                .with_bounds(&vec![NORM_LOWER; n], &vec![NORM_UPPER; n])?,
        )
    } else {
        None
    };

    let mut generations = Vec::with_capacity(cfg.cmaes.generations);
    let mut records = Vec::with_capacity(cfg.cmaes.generations);
    let mut best: Option<CandidateRecord> = None;
    let mut first_success = None;
    let mut total_successes = 0;

    for generation in 0..cfg.cmaes.generations {
        let gen_start = Instant::now();
        let (mut population, params, mean, sigma) = match (&optimizer, fixed) {
            (Some(opt), _) => {
                let pop = opt.ask()?;
                let params = pop
                    .iter()
                    .map(|c| ActionParams::from_search_vector(c.point.as_slice()))
                    .collect::<Result<Vec<_>>>()?;
                (
                    Some(pop),
                    params,
                    Some(opt.mean().as_slice().to_vec()),
                    Some(opt.sigma()),
                )
            }
            (None, Some(a)) => (None, vec![a; lambda], None, None),
            (None, None) => unreachable!("non-optimizing modes carry a fixed action"),
        };

        let seeds: Vec<u64> = (0..lambda).map(|i| candidate_seed(seed, generation, i)).collect();
        let trials = cfg.trials_per_eval;
        let outcomes = pool.install(|| {
            params
                .par_iter()
                .zip(seeds.par_iter())
                .map(|(a, &s)| run_trials(a, &setup, trials, s))
                .collect::<Result<Vec<_>>>()
        })?;

        let candidates: Vec<CandidateRecord> = outcomes
            .into_iter()
            .enumerate()
            .map(|(index, o)| CandidateRecord {
                generation,
                index,
                params: params[index],
                sim_seed: seeds[index],
                trials,
                successes: o.successes,
                reward: o.mean,
                success: o.successes == trials,
            })
            .collect();

        if let (Some(opt), Some(pop)) = (optimizer.as_mut(), population.as_mut()) {
            for (c, rec) in pop.iter_mut().zip(&candidates) {
                c.fitness = Some(rec.reward.r);
            }
            opt.tell(pop)?;
        }

        for c in &candidates {
            candidate_log.push(c)?;
            // Earliest candidate wins ties.
            if best.as_ref().is_none_or(|b| c.reward.r > b.reward.r) {
                best = Some(c.clone());
            }
        }
        let successes = candidates.iter().filter(|c| c.success).count();
        total_successes += successes;
        if successes > 0 && first_success.is_none() {
            first_success = Some(generation);
        }
        let rs: Vec<f64> = candidates.iter().map(|c| c.reward.r).collect();
        let wall_ms = gen_start.elapsed().as_secs_f64() * 1e3;
        let record = GenerationRecord {
            generation,
            population: lambda,
            mean: mean.clone(),
            sigma,
            lambda: cfg.reward.lambda,
            best_r: rs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_r: rs.iter().sum::<f64>() / rs.len() as f64,
            best_so_far_r: best.as_ref().expect("population is non-empty").reward.r,
            successes,
            wall_ms,
        };
        generation_log.push(&record)?;
        records.push(record);
        generations.push(GenerationLog {
            generation,
            candidates,
            mean,
            sigma,
            wall_ms,
        });
    }
    candidate_log.finish()?;
    generation_log.finish()?;

    let object = setup.object;
    let best = best.expect("at least one generation");
    let best = ParamsFile {
        object: object.name.clone(),
        mode: cfg.mode,
        params: best.params,
        reward: best.reward,
        generation: best.generation,
        index: best.index,
    };
    best.save(&cfg.out_dir.join(BEST_PARAMS_FILE))?;

    let summary = Summary {
        object,
        mode: cfg.mode,
        cmaes: cfg.cmaes.clone(),
        population_size: lambda,
        scaling: cfg.scaling,
        sim: cfg.sim.clone(),
        filter: cfg.filter,
        reward: cfg.reward,
        trials_per_eval: cfg.trials_per_eval,
        evaluations: lambda * cfg.cmaes.generations,
        best,
        first_success_generation: first_success,
        total_successes,
        generations: records,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    write_json(&cfg.out_dir.join(SUMMARY_FILE), &summary)?;

    Ok(CampaignReport {
        summary,
        generations,
        out_dir: cfg.out_dir.clone(),
    })
}
