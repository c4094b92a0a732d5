//! Per-step reward with command-tracking and smoothness penalties.

use serde::{Deserialize, Serialize};

use super::{TaskConfig, TaskError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardCoeffs {
    pub k_bipedal: f64,
    pub k_cmd: f64,
    pub k_smooth: f64,
    pub k_xd: f64,
    pub k_yd: f64,
}

impl RewardCoeffs {
    pub const BALANCING: Self = Self {
        k_bipedal: 0.0,
        k_cmd: 0.6,
        k_smooth: 0.1,
        k_xd: 2.0,
        k_yd: 2.0,
    };
    pub const WALKING: Self = Self {
        k_bipedal: 0.4,
        k_cmd: 0.3,
        k_smooth: 0.1,
        k_xd: 15.0,
        k_yd: 1.0,
    };
    pub const EVAL: Self = Self {
        k_bipedal: 0.0,
        k_cmd: 0.6,
        k_smooth: 0.1,
        k_xd: 2.0,
        k_yd: 2.0,
    };

    pub fn validate(&self) -> Result<(), TaskError> {
        let all = [self.k_bipedal, self.k_cmd, self.k_smooth, self.k_xd, self.k_yd];
        if all.iter().all(|k| k.is_finite() && *k >= 0.0) {
            Ok(())
        } else {
            Err(TaskError::InvalidConfig(format!("reward coefficients must be ≥ 0: {self:?}")))
        }
    }

    /// Lower bound of a single step's reward.
    pub fn floor(&self) -> f64 {
        1.0 - 3.0 * self.k_cmd - 3.0 * self.k_smooth
    }
}

/// Named coefficient sets, as loaded from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    pub balancing: RewardCoeffs,
    pub walking: RewardCoeffs,
    pub eval: RewardCoeffs,
}

impl Default for RewardTable {
    fn default() -> Self {
        Self {
            balancing: RewardCoeffs::BALANCING,
            walking: RewardCoeffs::WALKING,
            eval: RewardCoeffs::EVAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepObservation {
    /// Body pitch (rad) and its rate.
    pub r: f64,
    pub rdot: f64,
    /// Horizontal body velocities; `ydot` is always zero on the planar testbed.
    pub xdot: f64,
    pub ydot: f64,
    pub acc_pelvis: f64,
    pub current: Vec<f64>,
    pub prev_action: Vec<f64>,
    pub action: Vec<f64>,
    /// Gait clock; unused while `k_bipedal = 0`.
    pub phase: f64,
}

impl StepObservation {
    pub fn is_finite(&self) -> bool {
        [self.r, self.rdot, self.xdot, self.ydot, self.acc_pelvis, self.phase]
            .iter()
            .chain(&self.current)
            .chain(&self.prev_action)
            .chain(&self.action)
            .all(|v| v.is_finite())
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn penalty(k: f64, x: f64) -> f64 {
    -(1.0 - (-k * x).exp())
}

/// Command tracking: body velocities and orientation.
pub fn r_cmd(obs: &StepObservation, coeffs: &RewardCoeffs, task: &TaskConfig) -> f64 {
    penalty(coeffs.k_xd, (task.xdot_desired - obs.xdot).abs())
        + penalty(coeffs.k_yd, (task.ydot_desired - obs.ydot).abs())
        + penalty(4.0, (task.r_desired - obs.r).abs())
}

/// Smoothness: action change, motor current and body motion.
pub fn r_smt(obs: &StepObservation) -> f64 {
    let da = norm(obs.action.iter().zip(&obs.prev_action).map(|(a, b)| a - b));
    let current = norm(obs.current.iter().map(|i| i * 10.0));
    penalty(0.1, da) + penalty(0.05, current) + penalty(0.1, obs.rdot.abs() + obs.acc_pelvis.abs())
}

/// Stepping term of the walking task; not modelled on the testbed.
pub fn r_bipedal(_obs: &StepObservation) -> f64 {
    0.0
}

pub fn reward_step(obs: &StepObservation, coeffs: &RewardCoeffs, task: &TaskConfig) -> f64 {
    coeffs.k_bipedal * r_bipedal(obs) + coeffs.k_cmd * r_cmd(obs, coeffs, task) + coeffs.k_smooth * r_smt(obs) + 1.0
}
