//! Board-balancing task: reward, board disturbance, linear policy, policy
//! search by the cross-entropy method, and transfer evaluation.

pub mod cem;
pub mod episode;
pub mod policy;
pub mod reward;
pub mod wave;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimError;

pub use cem::{train_policy, CemConfig, Training};
pub use episode::{
    evaluate_policy, run_episode, transfer_success, EpisodeResult, PolicyRewards, RewardDistribution,
};
pub use policy::{policy_act, PolicyParams};
pub use reward::{reward_step, RewardCoeffs, RewardTable, StepObservation};
pub use wave::{board_wave, BoardWave};

/// Upper bound on the board-wave amplitude: 10°.
pub const MAX_WAVE_AMPLITUDE: f64 = 10.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("invalid task configuration: {0}")]
    InvalidConfig(String),
    #[error("policy parameters have inconsistent shapes or non-finite values")]
    InvalidPolicy,
    #[error("policy needs 2 stacked frames, got {0}")]
    History(usize),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("training failed: {0}")]
    TrainingFailed(String),
    #[error("empty reward distribution")]
    EmptyDistribution,
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    /// Peak board tilt (rad).
    pub wave_amplitude: f64,
    pub wave_components: usize,
    pub wave_freq_min: f64,
    pub wave_freq_max: f64,
    /// Seconds over which the wave fades in from a level board.
    pub wave_ramp: f64,
    /// Body pitch beyond which an episode ends (rad).
    pub tilt_limit: f64,
    /// Episode ends when the body drops below this share of its starting height.
    pub height_fraction: f64,
    pub duration: f64,
    pub xdot_desired: f64,
    pub ydot_desired: f64,
    pub r_desired: f64,
    /// Starting and reference posture `[knee, hip]`.
    pub nominal: Vec<f64>,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            wave_amplitude: MAX_WAVE_AMPLITUDE,
            wave_components: 3,
            wave_freq_min: 0.2,
            wave_freq_max: 1.0,
            wave_ramp: 1.0,
            tilt_limit: 30f64.to_radians(),
            height_fraction: 0.6,
            duration: 10.0,
            xdot_desired: 0.0,
            ydot_desired: 0.0,
            r_desired: 0.0,
            nominal: vec![0.6, -0.6],
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<(), TaskError> {
        let bad = |m: &str| Err(TaskError::InvalidConfig(m.into()));
        if !(0.0..=MAX_WAVE_AMPLITUDE + 1e-12).contains(&self.wave_amplitude) {
            return bad("wave amplitude must lie in [0, 10°]");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("episode duration must be positive");
        }
        if !(self.wave_freq_min > 0.0 && self.wave_freq_min <= self.wave_freq_max) {
            return bad("wave frequency range is empty");
        }
        if !(self.tilt_limit > 0.0 && (0.0..1.0).contains(&self.height_fraction)) {
            return bad("termination thresholds out of range");
        }
        if self.nominal.is_empty() || self.nominal.iter().any(|q| !q.is_finite()) {
            return bad("nominal posture must be finite");
        }
        Ok(())
    }
}
