//! The two identification phases.

use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::rng::{child_seed, from_seed};
use crate::sim::{ChainModel, SchedulerConfig, SimError, Trajectory};

use super::cmaes::CmaEs;
use super::excitation::{l_exc, ExcitationMotion};
use super::nsga2::{nsga2_evolve, Individual, Nsga2Config};
use super::pareto::{FrontMember, ParetoFront};
use super::space::{ParamSpace, SimParams};
use super::tpe::{suggest_unit, TpeConfig};
use super::wasserstein::wasserstein_1d;
use super::{SysidError, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Tpe,
    CmaEs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifyConfig {
    pub budget: usize,
    pub optimizer: Optimizer,
    pub tpe: TpeConfig,
    /// TPE suggestions drawn per round from the same history. Fixed so the
    /// trial sequence does not depend on the worker count.
    pub batch: usize,
    pub cmaes_sigma: f64,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            budget: 2000,
            optimizer: Optimizer::Tpe,
            tpe: TpeConfig::default(),
            batch: 8,
            cmaes_sigma: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub best: SimParams,
    pub best_loss: f64,
    pub trials: Vec<TrialRecord>,
}

/// Running minimum of the primary objective.
pub fn best_so_far(trials: &[TrialRecord]) -> Vec<f64> {
    trials
        .iter()
        .scan(f64::INFINITY, |best, t| {
            *best = best.min(t.primary());
            Some(*best)
        })
        .collect()
}

/// Excitation loss of φ against recorded data; `None` if the rollout fails.
pub fn excitation_loss(
    phi: &SimParams,
    space: &ParamSpace,
    template: &ChainModel,
    sched: SchedulerConfig,
    motion: &ExcitationMotion,
    real: &Trajectory,
) -> Option<f64> {
    let chain = phi.apply(space, template).ok()?;
    let sim = motion.rollout(&chain, sched).ok()?;
    l_exc(&sim, real).ok().filter(|v| v.is_finite())
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let t0 = Instant::now();
    let r = f();
    (r, t0.elapsed().as_secs_f64())
}

/// Minimizes the excitation loss over `space` with the configured sampler.
#[allow(clippy::too_many_arguments)]
pub fn identify_first(
    space: &ParamSpace,
    template: &ChainModel,
    sched: SchedulerConfig,
    motion: &ExcitationMotion,
    real: &Trajectory,
    cfg: &IdentifyConfig,
    seed: u64,
    exec: &Exec,
) -> Result<Identification, SysidError> {
    space.validate()?;
    if cfg.budget == 0 {
        return Err(SysidError::InvalidConfig("identification budget must be at least 1".into()));
    }
    let mut rng = from_seed(seed);
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(cfg.budget);
    let eval = |u: &Vec<f64>| {
        let phi = space.denormalize(u);
        let (loss, wall) = timed(|| excitation_loss(&phi, space, template, sched, motion, real));
        (phi, loss, wall)
    };
    let record = |trials: &mut Vec<TrialRecord>, results: Vec<(SimParams, Option<f64>, f64)>| {
        for (phi, loss, wall) in results {
            let trial = trials.len();
            trials.push(TrialRecord {
                trial,
                params: phi,
                objectives: vec![loss.unwrap_or(f64::INFINITY)],
                failed: loss.is_none(),
                seed: child_seed(seed, trial as u64),
                wall_time: wall,
            });
        }
    };

    match cfg.optimizer {
        Optimizer::Tpe => {
            let n_startup = cfg.tpe.startup_trials(cfg.budget);
            let mut hist: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cfg.budget);
            while trials.len() < cfg.budget {
                let n = cfg.batch.max(1).min(cfg.budget - trials.len());
                let batch: Vec<Vec<f64>> = (0..n)
                    .map(|_| suggest_unit(&hist, space.dim(), n_startup, &cfg.tpe, &mut rng))
                    .collect();
                let results = exec.map(&batch, eval);
                for (u, (_, loss, _)) in batch.iter().zip(&results) {
                    hist.push((u.clone(), loss.unwrap_or(f64::INFINITY)));
                }
                record(&mut trials, results);
            }
        }
        Optimizer::CmaEs => {
            let mut es = CmaEs::new(&vec![0.5; space.dim()], cfg.cmaes_sigma, None)?;
            while trials.len() < cfg.budget {
                let xs = es.ask(&mut rng);
                let n = xs.len().min(cfg.budget - trials.len());
                let results = exec.map(&xs[..n], eval);
                let fs: Vec<f64> = results.iter().map(|r| r.1.unwrap_or(f64::INFINITY)).collect();
                record(&mut trials, results);
                if n == xs.len() {
                    es.tell(&xs, &fs)?;
                }
            }
        }
    }

    let best = trials
        .iter()
        .filter(|t| !t.failed)
        .min_by(|a, b| a.primary().total_cmp(&b.primary()).then(a.trial.cmp(&b.trial)))
        .ok_or(SysidError::AllTrialsFailed(trials.len()))?;
    Ok(Identification {
        best: best.params.clone(),
        best_loss: best.primary(),
        trials,
    })
}

/// Episode returns of a fixed policy on a candidate simulator.
pub trait RewardEvaluator: Sync {
    fn rewards(&self, chain: &ChainModel) -> Result<Vec<f64>, SimError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReidentifyConfig {
    pub budget: usize,
    pub nsga: Nsga2Config,
}

impl Default for ReidentifyConfig {
    fn default() -> Self {
        Self {
            budget: 3000,
            nsga: Nsga2Config::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reidentification {
    pub front: ParetoFront,
    pub trials: Vec<TrialRecord>,
}

/// Bi-objective search over φ trading excitation loss against the
/// Wasserstein distance between simulated and real episode returns.
///
/// The initial population starts with `warm_start` (e.g. the best trials of
/// the first identification) and is filled up uniformly. Evaluation runs in
/// whole generations, so a budget that is not a multiple of the population
/// leaves the remainder unused.
#[allow(clippy::too_many_arguments)]
pub fn reidentify(
    space: &ParamSpace,
    template: &ChainModel,
    sched: SchedulerConfig,
    motion: &ExcitationMotion,
    real_excitation: &Trajectory,
    r_real: &[f64],
    evaluator: &dyn RewardEvaluator,
    warm_start: &[SimParams],
    cfg: &ReidentifyConfig,
    seed: u64,
    exec: &Exec,
) -> Result<Reidentification, SysidError> {
    space.validate()?;
    cfg.nsga.validate()?;
    if r_real.is_empty() {
        return Err(SysidError::EmptyDistribution);
    }
    if cfg.budget == 0 {
        return Err(SysidError::InvalidConfig("re-identification budget must be at least 1".into()));
    }
    let mut rng = from_seed(seed);
    let pop_size = cfg.nsga.population;
    let eval = |u: &Vec<f64>| {
        let phi = space.denormalize(u);
        let (objs, wall) = timed(|| {
            let chain = phi.apply(space, template).ok()?;
            let sim = motion.rollout(&chain, sched).ok()?;
            let l = l_exc(&sim, real_excitation).ok()?;
            let rewards = evaluator.rewards(&chain).ok()?;
            let w = wasserstein_1d(&rewards, r_real).ok()?;
            (l.is_finite() && w.is_finite()).then_some([l, w])
        });
        (phi, objs, wall)
    };
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(cfg.budget);
    let record = |trials: &mut Vec<TrialRecord>, results: Vec<(SimParams, Option<[f64; 2]>, f64)>| {
        results
            .into_iter()
            .map(|(phi, objs, wall)| {
                let trial = trials.len();
                let f = objs.unwrap_or([f64::INFINITY; 2]).to_vec();
                trials.push(TrialRecord {
                    trial,
                    params: phi,
                    objectives: f.clone(),
                    failed: objs.is_none(),
                    seed: child_seed(seed, trial as u64),
                    wall_time: wall,
                });
                f
            })
            .collect::<Vec<Vec<f64>>>()
    };

    let first = pop_size.min(cfg.budget);
    let init: Vec<Vec<f64>> = warm_start
        .iter()
        .take(first)
        .map(|phi| space.normalize(phi).iter().map(|v| v.clamp(0.0, 1.0)).collect())
        .chain(std::iter::repeat_with(|| (0..space.dim()).map(|_| rng.random::<f64>()).collect()))
        .take(first)
        .collect();
    let fs = record(&mut trials, exec.map(&init, eval));
    let mut pop: Vec<Individual> = init.into_iter().zip(fs).map(|(x, f)| Individual { x, f }).collect();

    if pop.len() == pop_size {
        while trials.len() + pop_size <= cfg.budget {
            pop = nsga2_evolve(pop, &cfg.nsga, &mut rng, |kids| record(&mut trials, exec.map(kids, eval)));
        }
    }

    let front = ParetoFront::from_candidates(pop.iter().map(|p| FrontMember {
        params: space.denormalize(&p.x),
        l_exc: p.f[0],
        w: p.f[1],
    }));
    if front.is_empty() {
        return Err(SysidError::AllTrialsFailed(trials.len()));
    }
    Ok(Reidentification { front, trials })
}
