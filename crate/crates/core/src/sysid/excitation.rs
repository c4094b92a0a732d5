//! Squat-like excitation motion and the trajectory-matching loss.

use serde::{Deserialize, Serialize};

use crate::actuator::{ActuatorCommand, KD_FIXED, KP_MAX, KP_MIN};
use crate::sim::{
    run_rollout, ChainModel, CommandRate, Controller, FlatBase, Observation, SchedulerConfig, SimState,
    Trajectory,
};

use super::SysidError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExcitationConfig {
    pub duration: f64,
    /// Knee angle at t = 0 (fully flexed).
    pub knee_high: f64,
    /// Knee angle at half period.
    pub knee_low: f64,
    pub frequency: f64,
    /// Torso angle relative to the board, held through the squat.
    pub torso_lean: f64,
    /// P gain commanded to both joints.
    pub kp: f64,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self {
            duration: 5.0,
            knee_high: 1.47,
            knee_low: 0.6,
            frequency: 0.5,
            torso_lean: -0.1,
            kp: 3.0,
        }
    }
}

impl ExcitationConfig {
    pub fn validate(&self) -> Result<(), SysidError> {
        let ok = self.duration > 0.0
            && self.frequency > 0.0
            && self.knee_high.is_finite()
            && self.knee_low.is_finite()
            && self.torso_lean.is_finite()
            && (KP_MIN..=KP_MAX).contains(&self.kp);
        if ok {
            Ok(())
        } else {
            Err(SysidError::InvalidConfig(format!("bad excitation config: {self:?}")))
        }
    }

    pub fn knee_at(&self, t: f64) -> f64 {
        let mid = 0.5 * (self.knee_high + self.knee_low);
        let amp = 0.5 * (self.knee_high - self.knee_low);
        mid + amp * (2.0 * std::f64::consts::PI * self.frequency * t).cos()
    }
}

/// Per-tick joint targets `[knee, hip]` sampled at the PD rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationMotion {
    pub targets: Vec<Vec<f64>>,
    pub duration: f64,
    pub kp: f64,
}

pub fn excitation_motion(cfg: &ExcitationConfig, sched: &SchedulerConfig) -> Result<ExcitationMotion, SysidError> {
    cfg.validate()?;
    let dt = 1.0 / sched.pd_hz;
    let targets = (0..sched.pd_ticks(cfg.duration))
        .map(|k| {
            let knee = cfg.knee_at(k as f64 * dt);
            vec![knee, cfg.torso_lean - knee]
        })
        .collect();
    Ok(ExcitationMotion {
        targets,
        duration: cfg.duration,
        kp: cfg.kp,
    })
}

impl ExcitationMotion {
    pub fn initial_state(&self) -> SimState {
        SimState::at_rest(self.targets[0].clone())
    }

    /// Plays the motion on `chain` (flat board) and returns the record.
    pub fn rollout(&self, chain: &ChainModel, sched: SchedulerConfig) -> Result<Trajectory, SysidError> {
        let mut ctl = Player { motion: self };
        Ok(run_rollout(chain, sched, self.initial_state(), &FlatBase, &mut ctl, self.duration, 0)?)
    }
}

struct Player<'m> {
    motion: &'m ExcitationMotion,
}

impl Controller for Player<'_> {
    fn rate(&self) -> CommandRate {
        CommandRate::Pd
    }

    fn act(&mut self, obs: &Observation<'_>) -> Vec<ActuatorCommand> {
        let row = &self.motion.targets[obs.tick.min(self.motion.targets.len() - 1)];
        row.iter()
            .map(|&q| ActuatorCommand {
                q_target: q,
                kp: self.motion.kp,
                kd: KD_FIXED,
            })
            .collect()
    }
}

/// Trajectory-matching loss: mean squared body pitch and pitch-rate error
/// over the T samples plus mean squared joint angle, velocity and current
/// error over the N·T joint samples.
pub fn l_exc(sim: &Trajectory, real: &Trajectory) -> Result<f64, SysidError> {
    if sim.len() != real.len() || sim.is_empty() {
        return Err(SysidError::Mismatch(format!(
            "trajectory lengths {} and {}",
            sim.len(),
            real.len()
        )));
    }
    let n = real.joint_count();
    if sim.joint_count() != n {
        return Err(SysidError::Mismatch(format!(
            "joint counts {} and {n}",
            sim.joint_count()
        )));
    }
    let t = real.len() as f64;
    let mut body = 0.0;
    let mut joints = 0.0;
    for (a, b) in sim.records.iter().zip(&real.records) {
        body += (a.r - b.r).powi(2) + (a.rdot - b.rdot).powi(2);
        for i in 0..n {
            joints += (a.theta[i] - b.theta[i]).powi(2)
                + (a.thetadot[i] - b.thetadot[i]).powi(2)
                + (a.current[i] - b.current[i]).powi(2);
        }
    }
    let total = body / t + if n > 0 { joints / (n as f64 * t) } else { 0.0 };
    Ok(total)
}
