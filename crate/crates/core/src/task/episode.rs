//! Policy episodes on a waving board and reward-distribution evaluation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::actuator::ActuatorCommand;
use crate::exec::Exec;
use crate::sim::dynamics::Workspace;
use crate::sim::{run_rollout, BaseKinematics, ChainModel, Controller, Observation, SchedulerConfig, SimError, SimState};
use crate::sysid::RewardEvaluator;

use super::policy::{decode, PolicyParams, STACK};
use super::reward::{reward_step, RewardCoeffs, StepObservation};
use super::wave::BoardWave;
use super::{TaskConfig, TaskError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub ret: f64,
    pub steps: usize,
    pub terminated: bool,
}

struct EpisodeController<'a> {
    policy: &'a PolicyParams,
    chain: &'a ChainModel,
    task: &'a TaskConfig,
    coeffs: &'a RewardCoeffs,
    wave: &'a BoardWave,
    nominal_height: f64,
    history: Vec<Vec<f64>>,
    prev_norm: Vec<f64>,
    prev_action: Option<Vec<f64>>,
    total: f64,
    steps: usize,
}

/// Horizontal body velocity in the board frame.
fn board_frame_xdot(com: [f64; 2], vel: [f64; 2], base: BaseKinematics) -> f64 {
    let rel = [vel[0] + base.rate * com[1], vel[1] - base.rate * com[0]];
    let (s, c) = base.tilt.sin_cos();
    rel[0] * c + rel[1] * s
}

impl Controller for EpisodeController<'_> {
    fn act(&mut self, obs: &Observation<'_>) -> Vec<ActuatorCommand> {
        let frame = self.policy.frame(obs.body.pitch, obs.body.pitch_rate, obs.q, obs.qdot, &self.prev_norm);
        if self.history.is_empty() {
            self.history = vec![frame; STACK];
        } else {
            self.history.remove(0);
            self.history.push(frame);
        }
        let out = self.policy.output(&self.history);
        let (cmds, norm) = decode(self.policy, &out, self.chain);
        let action: Vec<f64> = cmds.iter().map(|c| c.q_target).chain(cmds.iter().map(|c| c.kp)).collect();
        let prev = self.prev_action.take().unwrap_or_else(|| action.clone());
        let base = self.wave.kinematics(obs.t);
        let acc = obs.body.com_acc;
        let step = StepObservation {
            r: obs.body.pitch,
            rdot: obs.body.pitch_rate,
            xdot: board_frame_xdot(obs.body.com, obs.body.com_vel, base),
            ydot: 0.0,
            acc_pelvis: acc[0].hypot(acc[1]),
            current: obs.current.to_vec(),
            prev_action: prev,
            action: action.clone(),
            phase: 0.0,
        };
        self.total += reward_step(&step, self.coeffs, self.task);
        self.steps += 1;
        self.prev_action = Some(action);
        self.prev_norm = norm;
        cmds
    }

    fn terminated(&self, obs: &Observation<'_>) -> bool {
        (obs.body.pitch - self.task.r_desired).abs() > self.task.tilt_limit
            || obs.body.com[1] < self.task.height_fraction * self.nominal_height
    }
}

/// Height of the body's centre of mass at the nominal posture on a level board.
pub fn nominal_height(chain: &ChainModel, task: &TaskConfig) -> f64 {
    let n = chain.dof();
    let mut ws = Workspace::new(n);
    ws.update(chain, &task.nominal, &vec![0.0; n], BaseKinematics::default());
    ws.com_pos[n - 1][1]
}

/// One episode with board wave `seed`, scored with `coeffs`.
pub fn run_episode(
    chain: &ChainModel,
    sched: SchedulerConfig,
    task: &TaskConfig,
    policy: &PolicyParams,
    coeffs: &RewardCoeffs,
    seed: u64,
) -> Result<EpisodeResult, TaskError> {
    if policy.joints() != chain.dof() || task.nominal.len() != chain.dof() {
        return Err(TaskError::InvalidPolicy);
    }
    let wave = BoardWave::new(seed, task);
    let mut ctl = EpisodeController {
        policy,
        chain,
        task,
        coeffs,
        wave: &wave,
        nominal_height: nominal_height(chain, task),
        history: Vec::new(),
        prev_norm: vec![0.0; policy.outputs()],
        prev_action: None,
        total: 0.0,
        steps: 0,
    };
    let tr = run_rollout(chain, sched, SimState::at_rest(task.nominal.clone()), &wave, &mut ctl, task.duration, seed)?;
    if !ctl.total.is_finite() {
        return Err(TaskError::Sim(SimError::NonFinite { step: ctl.steps as u64 }));
    }
    Ok(EpisodeResult {
        ret: ctl.total,
        steps: ctl.steps,
        terminated: tr.terminated_at.is_some(),
    })
}

/// Episode returns R_k, one per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardDistribution {
    pub seeds: Vec<u64>,
    pub returns: Vec<f64>,
    /// Policy steps taken in each episode.
    pub steps: Vec<usize>,
}

impl RewardDistribution {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.returns.iter().sum::<f64>() / self.returns.len() as f64
    }

    /// CSV `seed,return`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,return\n");
        for (s, r) in self.seeds.iter().zip(&self.returns) {
            writeln!(out, "{s},{r:?}").unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TaskError> {
        let bad = |m: String| TaskError::Format(m);
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("seed,return") {
            return Err(bad("expected header `seed,return`".into()));
        }
        let mut d = Self {
            seeds: vec![],
            returns: vec![],
            steps: vec![],
        };
        for (i, line) in lines.enumerate() {
            let (s, r) = line.split_once(',').ok_or_else(|| bad(format!("row {i}: expected 2 fields")))?;
            d.seeds.push(s.trim().parse().map_err(|e| bad(format!("row {i}: {e}")))?);
            d.returns.push(r.trim().parse().map_err(|e| bad(format!("row {i}: {e}")))?);
        }
        if d.is_empty() {
            return Err(TaskError::EmptyDistribution);
        }
        Ok(d)
    }
}

/// Runs one episode per seed and collects the returns in seed order.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_policy(
    chain: &ChainModel,
    sched: SchedulerConfig,
    task: &TaskConfig,
    policy: &PolicyParams,
    coeffs: &RewardCoeffs,
    seeds: &[u64],
    exec: &Exec,
) -> Result<RewardDistribution, TaskError> {
    if seeds.is_empty() {
        return Err(TaskError::EmptyDistribution);
    }
    let results = exec.map(seeds, |&s| run_episode(chain, sched, task, policy, coeffs, s));
    let mut d = RewardDistribution {
        seeds: seeds.to_vec(),
        returns: Vec::with_capacity(seeds.len()),
        steps: Vec::with_capacity(seeds.len()),
    };
    for r in results {
        let r = r?;
        d.returns.push(r.ret);
        d.steps.push(r.steps);
    }
    Ok(d)
}

/// The transfer rule: the real mean reaches 80% of the expected mean.
pub fn transfer_success(expected: &[f64], actual: &[f64]) -> Result<bool, TaskError> {
    if expected.is_empty() || actual.is_empty() {
        return Err(TaskError::EmptyDistribution);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(mean(actual) >= 0.8 * mean(expected))
}

/// Scores a fixed policy on candidate simulators with frozen episode seeds.
#[derive(Debug, Clone)]
pub struct PolicyRewards {
    pub policy: PolicyParams,
    pub task: TaskConfig,
    pub coeffs: RewardCoeffs,
    pub sched: SchedulerConfig,
    pub seeds: Vec<u64>,
}

impl RewardEvaluator for PolicyRewards {
    fn rewards(&self, chain: &ChainModel) -> Result<Vec<f64>, SimError> {
        self.seeds
            .iter()
            .map(|&s| {
                run_episode(chain, self.sched, &self.task, &self.policy, &self.coeffs, s)
                    .map(|r| r.ret)
                    .map_err(|e| match e {
                        TaskError::Sim(s) => s,
                        other => SimError::InvalidModel(other.to_string()),
                    })
            })
            .collect()
    }
}
