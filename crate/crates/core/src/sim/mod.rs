//! Planar articulated-chain testbed: dynamics, multi-rate scheduling,
//! latency and trajectory logging.

pub mod chain;
pub mod dynamics;
pub mod rollout;
pub mod scheduler;
pub mod simulator;
pub mod trajectory;

use thiserror::Error;

use crate::actuator::ActuatorError;

pub use chain::{BaseBody, ChainModel, Joint, Link};
pub use dynamics::{estimate_load_torque, forward_dynamics, mechanical_energy, BaseKinematics};
pub use rollout::{run_rollout, CommandRate, Controller, HoldController, Observation};
pub use scheduler::SchedulerConfig;
pub use simulator::{BaseMotion, BodyState, FlatBase, SimState, Simulator};
pub use trajectory::{Trajectory, TrajectoryRecord};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid chain model: {0}")]
    InvalidModel(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("mass matrix is not positive definite")]
    SingularMass,
    #[error("state became non-finite at step {step}")]
    NonFinite { step: u64 },
    #[error("actuator failure at step {step}, joint {joint}: {source}")]
    Actuator {
        step: u64,
        joint: usize,
        source: ActuatorError,
    },
    #[error("malformed data: {0}")]
    Format(String),
}
