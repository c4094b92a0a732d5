//! Gear-driven actuator simulation and sim-to-real system identification.
//!
//! The crate is split along the pipeline:
//!
//! - [`actuator`]: DC motor, directional transmission efficiency, Stribeck
//!   friction and variable-gain PD.
//! - [`sim`]: a planar leg on a tilting board integrating those actuators.
//! - [`sysid`]: excitation-motion identification (TPE, CMA-ES) and
//!   reward-distribution re-identification (NSGA-II, Wasserstein).
//! - [`task`]: the board-balancing task, its reward, a linear policy trained
//!   by the cross-entropy method, and transfer evaluation.
//! - [`truth`]: a sealed ground-truth robot with hidden parameters.
//! - [`rng`] and [`exec`]: named random streams and an order-preserving
//!   worker pool, which together make results independent of thread count.

pub mod actuator;
pub mod exec;
pub mod rng;
pub mod sim;
pub mod sysid;
pub mod task;
pub mod truth;
