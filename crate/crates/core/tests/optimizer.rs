use nalgebra::DMatrix;
use spinopt::cma::OptimizerState;

fn is_spd(c: &DMatrix<f64>) -> bool {
    let sym = (c - c.transpose()).abs().max() <= 1e-12 * c.abs().max();
    sym && c.clone().cholesky().is_some()
}

/// Best-so-far fitness after each generation of a negated-sphere run.
fn sphere_run(seed: u64, generations: usize) -> Vec<f64> {
    let mut opt = OptimizerState::<f64>::init(&[0.5; 8], 0.3, 13, seed)
        .unwrap()
        .with_bounds(&[-1.0; 8], &[1.0; 8])
        .unwrap();
    let mut history = Vec::new();
    for _ in 0..generations {
        let mut pop = opt.ask().unwrap();
        for c in &mut pop {
            c.fitness = Some(-c.point.norm_squared());
        }
        opt.tell(&pop).unwrap();
        assert!(is_spd(opt.covariance()));
        history.push(opt.best_so_far().unwrap().fitness);
    }
    history
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn sphere_improves_two_orders_of_magnitude() {
    let runs: Vec<Vec<f64>> = (0..10).map(|s| sphere_run(s, 30)).collect();
    let first = median(runs.iter().map(|h| -h[0]).collect());
    let last = median(runs.iter().map(|h| -h[29]).collect());
    assert!(last * 100.0 <= first, "median distance^2 {first:e} -> {last:e}");
}

#[test]
fn best_so_far_is_monotone() {
    for seed in 0..5 {
        let h = sphere_run(seed, 20);
        assert!(h.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(
            OptimizerState::<f64>::init(&[0.5; 8], 0.3, 13, seed)
                .unwrap()
                .best_history()
                .len(),
            0
        );
    }
}

#[test]
fn same_seed_same_trajectory() {
    assert_eq!(sphere_run(11, 8), sphere_run(11, 8));
    assert_ne!(sphere_run(11, 8), sphere_run(12, 8));
}
