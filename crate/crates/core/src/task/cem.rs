//! Cross-entropy-method search over linear policy parameters.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::rng::{child_seed, derive_seed, from_seed};
use crate::sim::{ChainModel, SchedulerConfig};

use super::episode::run_episode;
use super::policy::PolicyParams;
use super::reward::RewardCoeffs;
use super::{TaskConfig, TaskError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CemConfig {
    /// Candidate policies evaluated in total; iterations = budget / population.
    pub budget: usize,
    pub population: usize,
    pub elite_fraction: f64,
    /// Training episodes per candidate, shared by the whole iteration.
    pub episodes: usize,
    /// Fixed episodes ranking the means for the returned policy.
    pub validation_episodes: usize,
    pub init_std: f64,
    /// Exploration floor added to the elite spread.
    pub noise_floor: f64,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            budget: 32 * 200,
            population: 32,
            elite_fraction: 0.25,
            episodes: 2,
            validation_episodes: 4,
            init_std: 0.3,
            noise_floor: 0.02,
        }
    }
}

impl CemConfig {
    pub fn validate(&self) -> Result<(), TaskError> {
        let elites = (self.elite_fraction * self.population as f64).round() as usize;
        if self.population < 2 || elites < 1 || elites > self.population {
            return Err(TaskError::InvalidConfig("CEM needs population ≥ 2 and at least one elite".into()));
        }
        if self.episodes == 0 || self.validation_episodes == 0 || !(self.init_std > 0.0) || self.noise_floor < 0.0 {
            return Err(TaskError::InvalidConfig(format!("bad CEM settings: {self:?}")));
        }
        Ok(())
    }

    pub fn iterations(&self) -> usize {
        self.budget / self.population
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Training {
    pub policy: PolicyParams,
    /// Validation return of the accepted mean after each iteration.
    pub curve: Vec<f64>,
    /// Mean candidate return per iteration.
    pub population_mean: Vec<f64>,
}

fn mean_return(
    chain: &ChainModel,
    sched: SchedulerConfig,
    task: &TaskConfig,
    policy: &PolicyParams,
    coeffs: &RewardCoeffs,
    seeds: &[u64],
) -> Result<(f64, bool), TaskError> {
    let mut total = 0.0;
    let mut all_dead = true;
    for &s in seeds {
        let r = run_episode(chain, sched, task, policy, coeffs, s)?;
        total += r.ret;
        all_dead &= r.terminated && r.steps <= 1;
    }
    Ok((total / seeds.len() as f64, all_dead))
}

/// Trains from `init` on `chain`. The sampling mean always moves to the
/// elites; the returned policy is the mean that scored best on the fixed
/// validation episodes, so `curve` never decreases.
#[allow(clippy::too_many_arguments)]
pub fn train_policy(
    chain: &ChainModel,
    sched: SchedulerConfig,
    task: &TaskConfig,
    coeffs: &RewardCoeffs,
    init: &PolicyParams,
    cfg: &CemConfig,
    seed: u64,
    exec: &Exec,
) -> Result<Training, TaskError> {
    cfg.validate()?;
    task.validate()?;
    init.validate()?;
    let mut out = Training {
        policy: init.clone(),
        curve: Vec::new(),
        population_mean: Vec::new(),
    };
    let iterations = cfg.iterations();
    if iterations == 0 {
        return Ok(out);
    }
    let mut rng = from_seed(derive_seed(seed, "sample"));
    let episode_root = derive_seed(seed, "episodes");
    let val_seeds: Vec<u64> = (0..cfg.validation_episodes as u64)
        .map(|k| child_seed(derive_seed(seed, "validation"), k))
        .collect();

    let mut mean = init.flat();
    let mut best = mean.clone();
    let dim = mean.len();
    let mut std = vec![cfg.init_std; dim];
    let n_elite = (cfg.elite_fraction * cfg.population as f64).round() as usize;
    let (mut best_val, _) = mean_return(chain, sched, task, init, coeffs, &val_seeds)?;

    for it in 0..iterations {
        let seeds: Vec<u64> = (0..cfg.episodes as u64)
            .map(|k| child_seed(episode_root, (it * cfg.episodes) as u64 + k))
            .collect();
        let thetas: Vec<Vec<f64>> = (0..cfg.population)
            .map(|_| {
                mean.iter()
                    .zip(&std)
                    .map(|(m, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m + s * z
                    })
                    .collect()
            })
            .collect();
        let scores = exec.map(&thetas, |th| mean_return(chain, sched, task, &init.with_flat(th), coeffs, &seeds));
        let mut scored = Vec::with_capacity(thetas.len());
        let mut all_dead = true;
        for (k, s) in scores.into_iter().enumerate() {
            let (ret, dead) = s?;
            all_dead &= dead;
            scored.push((ret, k));
        }
        if all_dead {
            return Err(TaskError::TrainingFailed(format!(
                "every candidate of iteration {it} terminated on its first step"
            )));
        }
        out.population_mean
            .push(scored.iter().map(|s| s.0).sum::<f64>() / scored.len() as f64);
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let elites: Vec<&Vec<f64>> = scored[..n_elite].iter().map(|&(_, k)| &thetas[k]).collect();

        let cand: Vec<f64> = (0..dim)
            .map(|d| elites.iter().map(|e| e[d]).sum::<f64>() / n_elite as f64)
            .collect();
        for d in 0..dim {
            let var = elites.iter().map(|e| (e[d] - cand[d]).powi(2)).sum::<f64>() / n_elite as f64;
            std[d] = var.sqrt() + cfg.noise_floor;
        }
        let (val, _) = mean_return(chain, sched, task, &init.with_flat(&cand), coeffs, &val_seeds)?;
        if val >= best_val {
            best_val = val;
            best = cand.clone();
        }
        mean = cand;
        out.curve.push(best_val);
    }
    out.policy = init.with_flat(&best);
    Ok(out)
}
