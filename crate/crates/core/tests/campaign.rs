use std::path::Path;

use spinopt::action_space::{ActionParams, ACTION_DIM};
use spinopt::campaign::*;
use spinopt::perception::{FilterConfig, TrajectoryFrame};
use spinopt::reward::RewardConfig;
use spinopt::simulator::{ObjectModel, SimConfig};
use spinopt::trajectory_io::{save_trajectory, Trajectory};
use spinopt::Error;

fn config(object: &str, mode: Mode, dir: &Path) -> CampaignConfig {
    let mut cfg = CampaignConfig::new(object, mode);
    cfg.out_dir = dir.to_owned();
    cfg
}

#[test]
fn full_mode_budget_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_campaign(&config("pen1", Mode::Full, dir.path())).unwrap();
    assert_eq!(report.summary.evaluations, 130);
    assert_eq!(report.candidates().count(), 130);

    let logged: Vec<CandidateRecord> = read_jsonl(&dir.path().join(CANDIDATES_FILE)).unwrap();
    assert_eq!(logged, report.candidates().cloned().collect::<Vec<_>>());
    let gens: Vec<GenerationRecord> = read_jsonl(&dir.path().join(GENERATIONS_FILE)).unwrap();
    assert_eq!(gens.len(), 10);
    for (g, rec) in gens.iter().enumerate() {
        assert_eq!(rec.generation, g);
        assert_eq!(rec.population, 13);
        let idx: Vec<usize> = logged.iter().filter(|c| c.generation == g).map(|c| c.index).collect();
        assert_eq!(idx, (0..13).collect::<Vec<_>>());
    }
    assert!(gens.windows(2).all(|w| w[1].best_so_far_r >= w[0].best_so_far_r));
    for c in &logged {
        assert!(c.params.validate().is_ok());
    }

    let best = ParamsFile::load(&dir.path().join(BEST_PARAMS_FILE)).unwrap();
    assert_eq!(&best, report.best());
    let top = logged.iter().map(|c| c.reward.r).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best.reward.r, top);
    let summary: Summary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary.reward.lambda, 1.0);
    assert_eq!(summary.generations.len(), 10);
}

#[test]
fn no_grasp_mode_fixes_grasp() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_campaign(&config("pen3", Mode::NoGrasp, dir.path())).unwrap();
    assert_eq!(report.summary.population_size, 12);
    assert_eq!(report.candidates().count(), 120);
    assert!(report.candidates().all(|c| c.params.g_norm == 0.0));
    assert!(report.generations.iter().all(|g| g.mean.as_ref().unwrap().len() == 7));
}

#[test]
fn init_only_repeats_the_initial_action() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_campaign(&config("pen1", Mode::InitOnly, dir.path())).unwrap();
    assert_eq!(report.candidates().count(), 130);
    assert!(report.candidates().all(|c| c.params == ActionParams::initial()));
    assert!(report.generations.iter().all(|g| g.mean.is_none() && g.sigma.is_none()));
    assert_eq!(report.summary.total_successes, 0);
}

#[test]
fn transfer_mode() {
    let dir = tempfile::tempdir().unwrap();
    let source = run_campaign(&config("pen1", Mode::Full, &dir.path().join("src"))).unwrap();

    let mut cfg = config("pen2", Mode::Transfer, &dir.path().join("dst"));
    cfg.transfer_from = Some(dir.path().join("src").join(BEST_PARAMS_FILE));
    let report = run_campaign(&cfg).unwrap();
    assert!(report.candidates().all(|c| c.params == source.best().params));
    assert_eq!(report.best().mode, Mode::Transfer);

    cfg.transfer_from = Some(dir.path().join("nowhere.json"));
    assert!(matches!(run_campaign(&cfg), Err(Error::Config(_))));
}

#[test]
fn configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let cfg = config("pen1", Mode::Full, &blocker.join("sub"));
    assert!(matches!(run_campaign(&cfg), Err(Error::Config(_))));
    let cfg = config("pencil", Mode::Full, dir.path());
    assert!(matches!(run_campaign(&cfg), Err(Error::Config(_))));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("pen2", Mode::Full, &dir.path().join("a"));
    cfg.cmaes.generations = 3;
    cfg.workers = Some(1);
    let a = run_campaign(&cfg).unwrap();
    cfg.workers = Some(4);
    cfg.out_dir = dir.path().join("b");
    let b = run_campaign(&cfg).unwrap();
    assert_eq!(a.candidates().collect::<Vec<_>>(), b.candidates().collect::<Vec<_>>());
}

#[test]
fn trials_per_eval_averages() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("pen1", Mode::InitOnly, dir.path());
    cfg.cmaes.generations = 1;
    cfg.trials_per_eval = 3;
    let report = run_campaign(&cfg).unwrap();
    for c in report.candidates() {
        assert_eq!(c.trials, 3);
        let direct = run_trials(&c.params, &cfg.evaluation_setup().unwrap(), 3, c.sim_seed).unwrap();
        assert_eq!(direct.mean, c.reward);
    }
}

#[test]
fn evaluate_params_contract() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_campaign(&config("pen1", Mode::Full, dir.path())).unwrap();
    let path = dir.path().join(BEST_PARAMS_FILE);
    let pen1 = ObjectModel::preset("pen1").unwrap();

    let quiet = EvaluationContext {
        sim: SimConfig {
            noise_sigma: 0.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let r = evaluate_params(&path, &pen1, 10, &quiet).unwrap();
    assert_eq!((r.successes, r.trials), (10, 10));
    assert_eq!(r.params, report.best().params);

    let pen2 = ObjectModel::preset("pen2").unwrap();
    let mut slip = report.best().clone();
    slip.params.g_norm = -1.0;
    let slip_path = dir.path().join("slip.json");
    slip.save(&slip_path).unwrap();
    let r = evaluate_params(&slip_path, &pen2, 10, &EvaluationContext::default()).unwrap();
    assert_eq!(r.successes, 0);

    assert!(matches!(
        evaluate_params(&path, &pen1, 0, &EvaluationContext::default()),
        Err(Error::Contract(_))
    ));
    std::fs::write(dir.path().join("broken.json"), "{\n\"object\": 3\n}").unwrap();
    assert!(matches!(
        evaluate_params(&dir.path().join("broken.json"), &pen1, 1, &EvaluationContext::default()),
        Err(Error::Parse { .. })
    ));
}

#[test]
fn replay_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    save_trajectory(
        &Trajectory::<f64> {
            fps: 30.0,
            frames: vec![],
        },
        &empty,
    )
    .unwrap();
    assert!(matches!(
        replay(&empty, &FilterConfig::default(), &RewardConfig::default()),
        Err(Error::Contract(_))
    ));

    let absent = dir.path().join("absent.jsonl");
    let frames = (0..5)
        .map(|k| TrajectoryFrame {
            t: k as f64 / 30.0,
            points: vec![],
        })
        .collect();
    save_trajectory(&Trajectory { fps: 30.0, frames }, &absent).unwrap();
    let r = replay(&absent, &FilterConfig::default(), &RewardConfig::default()).unwrap();
    assert_eq!((r.r_rot, r.p_fall, r.success), (0.0, 1.0, false));
}

#[test]
fn ablation_shape() {
    let dir = tempfile::tempdir().unwrap();
    let objects = vec!["pen2".to_owned(), "brush".to_owned()];
    let opts = AblationOptions {
        trials: 3,
        ..Default::default()
    };
    let report = ablation_suite(&objects, dir.path(), &opts).unwrap();
    assert_eq!(report.cells.len(), Mode::ALL.len() * objects.len());
    for o in &objects {
        for m in Mode::ALL {
            assert_eq!(report.cell(m, o).unwrap().trials, 3);
        }
        assert!(report.cell(Mode::Full, o).unwrap().successes >= report.cell(Mode::InitOnly, o).unwrap().successes);
    }
    // The transfer source runs even when it is not listed.
    assert!(dir.path().join("pen1/full").join(BEST_PARAMS_FILE).exists());
    let table = std::fs::read_to_string(dir.path().join("ablation.md")).unwrap();
    assert_eq!(table, report.table());
    assert!(matches!(ablation_suite(&[], dir.path(), &opts), Err(Error::Config(_))));
}

#[test]
fn shipped_configs_parse() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            CampaignConfig::load(&path).unwrap().validate().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 2);
    assert_eq!(ActionParams::<f64>::initial().to_array().len(), ACTION_DIM);
}
