//! CMA-ES with an ask/tell interface.
//!
//! The optimizer maximizes fitness. Ranking is by fitness descending with
//! ties broken by candidate index; non-finite fitness ranks last. Samples
//! outside the box are clamped for evaluation while the unclamped sample
//! drives the distribution update.
//!
//! Sampling is a pure function of `(seed, generation, state)`: each
//! generation draws from its own ChaCha stream, so asking twice without a
//! tell yields the same population.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `round(4 + 3 log2 n)`: 13 for the full 8-D action, 12 for 7-D.
pub fn default_population_size(n: usize) -> usize {
    assert!(n >= 1, "dimension must be positive");
    (4.0 + 3.0 * (n as f64).log2()).round() as usize
}

/// Optimizer hyperparameters as they appear under `[cmaes]` in a campaign
/// config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaConfig {
    pub sigma0: f64,
    /// `None` selects [`default_population_size`].
    pub population_size: Option<usize>,
    pub generations: usize,
    pub seed: u64,
}

impl Default for CmaConfig {
    fn default() -> Self {
        Self {
            sigma0: 0.3,
            population_size: None,
            generations: 10,
            seed: 0x5EED,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<T: Scalar> {
    pub generation: usize,
    pub index: usize,
    /// Unclamped draw from `N(mean, sigma^2 C)`.
    pub raw: DVector<T>,
    /// `raw` projected onto the box; this is what gets evaluated.
    pub point: DVector<T>,
    pub fitness: Option<T>,
}

/// Best evaluated point over the whole run.
#[derive(Clone, Debug, PartialEq)]
pub struct BestRecord<T: Scalar> {
    pub point: DVector<T>,
    pub fitness: T,
    pub generation: usize,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct OptimizerState<T: Scalar> {
    mean: DVector<T>,
    sigma: T,
    covariance: DMatrix<T>,
    path_sigma: DVector<T>,
    path_c: DVector<T>,
    generation: usize,
    population_size: usize,
    seed: u64,
    lower: Option<DVector<T>>,
    upper: Option<DVector<T>>,
    /// Length `population_size`; the top `mu` entries are positive, the rest zero.
    weights: Vec<T>,
    mu: usize,
    mu_eff: T,
    c_sigma: T,
    d_sigma: T,
    c_c: T,
    c_1: T,
    c_mu: T,
    chi_n: T,
    best: Option<BestRecord<T>>,
    best_history: Vec<T>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn init(mean0: &[T], sigma0: T, population_size: usize, seed: u64) -> Result<Self> {
        let n = mean0.len();
        if n == 0 {
            return Err(Error::Config("search dimension must be at least 1".into()));
        }
        if !(sigma0 > T::zero() && sigma0.is_finite()) {
            return Err(Error::Config(format!(
                "sigma0 must be positive and finite, got {}",
                sigma0.as_f64()
            )));
        }
        if population_size < 2 {
            return Err(Error::Config(format!(
                "population size must be at least 2, got {population_size}"
            )));
        }
        if mean0.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("initial mean must be finite".into()));
        }

        let lambda = population_size;
        let mu = lambda / 2;
        let ln_half = T::of((lambda as f64 + 1.0) / 2.0).ln();
        let mut weights: Vec<T> = (0..lambda)
            .map(|i| {
                if i < mu {
                    ln_half - T::of_usize(i + 1).ln()
                } else {
                    T::zero()
                }
            })
            .collect();
        let total = weights.iter().fold(T::zero(), |a, &w| a + w);
        weights.iter_mut().for_each(|w| *w /= total);
        let mu_eff = T::one() / weights.iter().fold(T::zero(), |a, &w| a + w * w);

        let nf = T::of_usize(n);
        let one = T::one();
        let two = T::of(2.0);
        let c_sigma = (mu_eff + two) / (nf + mu_eff + T::of(5.0));
        let d_sigma = one + two * T::zero().max(((mu_eff - one) / (nf + one)).sqrt() - one) + c_sigma;
        let c_c = (T::of(4.0) + mu_eff / nf) / (nf + T::of(4.0) + two * mu_eff / nf);
        let c_1 = two / ((nf + T::of(1.3)).powi(2) + mu_eff);
        let c_mu = (one - c_1).min(two * (mu_eff - two + one / mu_eff) / ((nf + two).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (one - one / (T::of(4.0) * nf) + one / (T::of(21.0) * nf * nf));

        Ok(Self {
            mean: DVector::from_column_slice(mean0),
            sigma: sigma0,
            covariance: DMatrix::identity(n, n),
            path_sigma: DVector::zeros(n),
            path_c: DVector::zeros(n),
            generation: 0,
            population_size: lambda,
            seed,
            lower: None,
            upper: None,
            weights,
            mu,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            best: None,
            best_history: Vec::new(),
        })
    }

    /// Restricts evaluated points to the box `[lower, upper]`.
    pub fn with_bounds(mut self, lower: &[T], upper: &[T]) -> Result<Self> {
        let n = self.dimension();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Config(format!("bounds must have {n} components")));
        }
        if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Config("lower bound exceeds upper bound".into()));
        }
        self.lower = Some(DVector::from_column_slice(lower));
        self.upper = Some(DVector::from_column_slice(upper));
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }
    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }
    pub fn covariance(&self) -> &DMatrix<T> {
        &self.covariance
    }
    pub fn path_sigma(&self) -> &DVector<T> {
        &self.path_sigma
    }
    pub fn path_c(&self) -> &DVector<T> {
        &self.path_c
    }
    pub fn generation(&self) -> usize {
        self.generation
    }
    pub fn population_size(&self) -> usize {
        self.population_size
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Best-so-far fitness after each completed generation.
    pub fn best_history(&self) -> &[T] {
        &self.best_history
    }

    /// Highest-fitness evaluated point over all generations; the earliest
    /// one wins ties.
    pub fn best_so_far(&self) -> Result<&BestRecord<T>> {
        self.best
            .as_ref()
            .ok_or_else(|| Error::Contract("no evaluated candidate yet".into()))
    }

    fn clamp(&self, x: &DVector<T>) -> DVector<T> {
        match (&self.lower, &self.upper) {
            (Some(lo), Some(hi)) => DVector::from_iterator(
                x.len(),
                x.iter().zip(lo.iter().zip(hi.iter())).map(|(&v, (&l, &h))| {
                    if v.is_nan() {
                        l.max(h.min(T::zero()))
                    } else {
                        v.clamp(l, h)
                    }
                }),
            ),
            _ => x.clone(),
        }
    }

    /// Eigenbasis `B` and axis lengths `sqrt(eigenvalues)` of the covariance.
    fn factorize(cov: &DMatrix<T>) -> Option<(DMatrix<T>, DVector<T>)> {
        if cov.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let eig = SymmetricEigen::new(cov.clone());
        if eig.eigenvalues.iter().any(|&l| !(l > T::zero())) {
            return None;
        }
        let scales = eig.eigenvalues.map(|l| l.sqrt());
        Some((eig.eigenvectors, scales))
    }

    fn factorize_or_err(&self) -> Result<(DMatrix<T>, DVector<T>)> {
        Self::factorize(&self.covariance)
            .ok_or_else(|| Error::NumericalDegeneracy("covariance is not positive definite".into()))
    }

    /// Samples `population_size` candidates from `N(mean, sigma^2 C)`.
    pub fn ask(&self) -> Result<Vec<Candidate<T>>> {
        let (basis, scales) = self.factorize_or_err()?;
        let n = self.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.generation as u64);
        let candidates = (0..self.population_size)
            .map(|index| {
                let z = DVector::from_iterator(n, (0..n).map(|_| T::of(StandardNormal.sample(&mut rng))));
                let y = &basis * z.component_mul(&scales);
                let raw = &self.mean + y * self.sigma;
                let point = self.clamp(&raw);
                Candidate {
                    generation: self.generation,
                    index,
                    raw,
                    point,
                    fitness: None,
                }
            })
            .collect();
        Ok(candidates)
    }

    /// Updates the distribution from an evaluated population and advances
    /// the generation counter.
    pub fn tell(&mut self, evaluated: &[Candidate<T>]) -> Result<()> {
        if evaluated.len() != self.population_size {
            return Err(Error::Contract(format!(
                "tell expects {} candidates, got {}",
                self.population_size,
                evaluated.len()
            )));
        }
        let n = self.dimension();
        let mut fitness = Vec::with_capacity(evaluated.len());
        for c in evaluated {
            if c.raw.len() != n {
                return Err(Error::Contract(format!(
                    "candidate {} has dimension {}, expected {n}",
                    c.index,
                    c.raw.len()
                )));
            }
            match c.fitness {
                Some(f) => fitness.push(f),
                None => {
                    return Err(Error::Contract(format!(
                        "candidate {} of generation {} has no fitness",
                        c.index, c.generation
                    )))
                }
            }
        }
        let (basis, scales) = self.factorize_or_err()?;

        // Stable descending sort; non-finite fitness sorts last.
        let key = |i: usize| {
            let f = fitness[i];
            if f.is_finite() {
                Some(f)
            } else {
                None
            }
        };
        let mut order: Vec<usize> = (0..evaluated.len()).collect();
        order.sort_by(|&a, &b| match (key(a), key(b)) {
            (Some(x), Some(y)) => y.partial_cmp(&x).unwrap(),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });

        for &i in &order {
            if let Some(f) = key(i) {
                let better = self.best.as_ref().is_none_or(|b| f > b.fitness);
                if better {
                    self.best = Some(BestRecord {
                        point: evaluated[i].point.clone(),
                        fitness: f,
                        generation: evaluated[i].generation,
                        index: evaluated[i].index,
                    });
                }
                // Only the top-ranked finite candidate can improve the record.
                break;
            }
        }

        let old_mean = self.mean.clone();
        let steps: Vec<DVector<T>> = order
            .iter()
            .take(self.mu)
            .map(|&i| (&evaluated[i].raw - &old_mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in self.weights.iter().zip(&steps) {
            y_w += y * *w;
        }
        self.mean = &old_mean + &y_w * self.sigma;

        let one = T::one();
        let two = T::of(2.0);
        let inv_scales = scales.map(|s| one / s);
        let inv_sqrt_c = &basis * DMatrix::from_diagonal(&inv_scales) * basis.transpose();
        let cs = self.c_sigma;
        self.path_sigma = &self.path_sigma * (one - cs) + (&inv_sqrt_c * &y_w) * (cs * (two - cs) * self.mu_eff).sqrt();

        let next_gen = self.generation + 1;
        let ps_norm = self.path_sigma.norm();
        let decay = (one - (one - cs).powi(2 * next_gen as i32)).sqrt();
        let h_sigma = ps_norm / decay < (T::of(1.4) + two / T::of_usize(n + 1)) * self.chi_n;
        let h = if h_sigma { one } else { T::zero() };

        let cc = self.c_c;
        self.path_c = &self.path_c * (one - cc) + &y_w * (h * (cc * (two - cc) * self.mu_eff).sqrt());

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in self.weights.iter().zip(&steps) {
            rank_mu += (y * y.transpose()) * *w;
        }
        let rank_one = &self.path_c * self.path_c.transpose() + &self.covariance * ((one - h) * cc * (two - cc));
        let mut cov = &self.covariance * (one - self.c_1 - self.c_mu) + rank_one * self.c_1 + rank_mu * self.c_mu;
        cov = (&cov + cov.transpose()) * T::of(0.5);

        if Self::factorize(&cov).is_none() {
            let jitter = T::of(1e-10) * cov.trace() / T::of_usize(n);
            for i in 0..n {
                cov[(i, i)] += jitter;
            }
            if Self::factorize(&cov).is_none() {
                return Err(Error::NumericalDegeneracy(
                    "covariance lost positive definiteness after repair".into(),
                ));
            }
        }
        self.covariance = cov;

        self.sigma *= ((cs / self.d_sigma) * (ps_norm / self.chi_n - one)).exp();
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(Error::NumericalDegeneracy(format!(
                "step size degenerated to {}",
                self.sigma.as_f64()
            )));
        }
        self.generation = next_gen;
        if let Some(b) = &self.best {
            self.best_history.push(b.fitness);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_state(seed: u64) -> OptimizerState<f64> {
        OptimizerState::init(&[0.5; 8], 0.3, 13, seed)
            .unwrap()
            .with_bounds(&[-1.0; 8], &[1.0; 8])
            .unwrap()
    }

    fn evaluate(mut pop: Vec<Candidate<f64>>, mut f: impl FnMut(&DVector<f64>) -> f64) -> Vec<Candidate<f64>> {
        for c in &mut pop {
            c.fitness = Some(f(&c.point));
        }
        pop
    }

    #[test]
    fn population_rule() {
        assert_eq!(default_population_size(8), 13);
        assert_eq!(default_population_size(1), 4);
        // 4 + 3 log2 7 = 12.42
        assert_eq!(default_population_size(7), 12);
    }

    #[test]
    fn init_shape() {
        let mean0 = [0.0, 0.0, 0.5, 1.0, 0.5, 1.0, 0.0, 0.0];
        let s = OptimizerState::init(&mean0, 0.3, 13, 7).unwrap();
        assert_eq!(s.covariance(), &DMatrix::identity(8, 8));
        assert_eq!(s.generation(), 0);
        assert!(s.path_sigma().iter().all(|&v| v == 0.0));
        let w = s.weights();
        assert_eq!(w.len(), 13);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.windows(2).all(|p| p[0] >= p[1]));
        assert_eq!(w.iter().filter(|&&x| x > 0.0).count(), 6);
    }

    #[test]
    fn init_rejects_bad_config() {
        assert!(matches!(
            OptimizerState::<f64>::init(&[0.0; 3], 0.0, 13, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            OptimizerState::<f64>::init(&[0.0; 3], 0.3, 1, 0),
            Err(Error::Config(_))
        ));
        assert!(OptimizerState::<f64>::init(&[0.0; 3], f64::NAN, 4, 0).is_err());
    }

    #[test]
    fn ask_is_deterministic_and_boxed() {
        let a = sphere_state(3);
        let b = sphere_state(3);
        let pa = a.ask().unwrap();
        assert_eq!(pa, b.ask().unwrap());
        assert_eq!(pa, a.ask().unwrap());
        assert_eq!(pa.len(), 13);
        for c in &pa {
            assert!(c.point.iter().all(|&v| (-1.0..=1.0).contains(&v)));
        }
        assert_ne!(pa, sphere_state(4).ask().unwrap());
    }

    #[test]
    fn tiny_sigma_collapses_to_mean() {
        let s = OptimizerState::init(&[0.25; 4], 1e-200, 6, 1).unwrap();
        for c in s.ask().unwrap() {
            assert!((c.raw - DVector::from_element(4, 0.25)).amax() < 1e-150);
        }
    }

    #[test]
    fn tell_contract() {
        let mut s = sphere_state(1);
        let mut pop = s.ask().unwrap();
        assert!(matches!(s.tell(&pop), Err(Error::Contract(_))));
        assert!(s.tell(&pop[..5]).is_err());
        for c in &mut pop {
            c.fitness = Some(f64::NAN);
        }
        pop[3].fitness = Some(-1.0);
        s.tell(&pop).unwrap();
        assert_eq!(s.generation(), 1);
        let best = s.best_so_far().unwrap();
        assert_eq!(best.index, 3);
    }

    #[test]
    fn best_so_far_rules() {
        let mut s = OptimizerState::init(&[0.0; 2], 0.1, 3, 9).unwrap();
        assert!(s.best_so_far().is_err());
        let mut pop = s.ask().unwrap();
        for (c, f) in pop.iter_mut().zip([0.1, 0.9, 0.3]) {
            c.fitness = Some(f);
        }
        s.tell(&pop).unwrap();
        assert_eq!(s.best_so_far().unwrap().index, 1);
        assert_eq!(s.best_so_far().unwrap().fitness, 0.9);

        let mut pop = s.ask().unwrap();
        for (c, f) in pop.iter_mut().zip([0.5, 0.2, 0.8]) {
            c.fitness = Some(f);
        }
        s.tell(&pop).unwrap();
        assert_eq!(s.best_so_far().unwrap().generation, 0);
        assert_eq!(s.best_history(), &[0.9, 0.9]);

        let mut t = OptimizerState::init(&[0.0; 2], 0.1, 3, 9).unwrap();
        let mut pop = t.ask().unwrap();
        pop.iter_mut().for_each(|c| c.fitness = Some(0.4));
        t.tell(&pop).unwrap();
        assert_eq!(t.best_so_far().unwrap().index, 0);
    }

    #[test]
    fn covariance_stays_spd_under_random_fitness() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = sphere_state(5);
        for _ in 0..100 {
            let pop = s.ask().unwrap();
            let pop = evaluate(pop, |_| rng.random::<f64>());
            s.tell(&pop).unwrap();
            let c = s.covariance();
            assert!((c - c.transpose()).amax() < 1e-10);
            let eig = SymmetricEigen::new(c.clone());
            assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
            assert!(s.sigma() > 0.0);
        }
        assert_eq!(s.generation(), 100);
    }

    #[test]
    fn generic_over_f32() {
        let mut s = OptimizerState::<f32>::init(&[0.5; 3], 0.3, 7, 2).unwrap();
        for _ in 0..30 {
            let mut pop = s.ask().unwrap();
            for c in &mut pop {
                c.fitness = Some(-c.point.norm_squared());
            }
            s.tell(&pop).unwrap();
        }
        assert!(s.best_so_far().unwrap().point.norm() < 0.05);
    }
}
