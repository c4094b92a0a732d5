//! The 1 ms / 125 Hz / 31.25 Hz control loop and trajectory logging.

use crate::actuator::ActuatorCommand;

use super::chain::ChainModel;
use super::scheduler::SchedulerConfig;
use super::simulator::{BaseMotion, BodyState, SimState, Simulator};
use super::trajectory::{Trajectory, TrajectoryRecord};
use super::SimError;

/// How often a controller is asked for new commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandRate {
    /// Every PD tick (e.g. a scripted target trajectory).
    Pd,
    /// Every policy tick.
    Policy,
}

/// What a controller sees when it is asked to act.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'s> {
    pub tick: usize,
    pub t: f64,
    pub q: &'s [f64],
    pub qdot: &'s [f64],
    pub current: &'s [f64],
    pub body: BodyState,
}

pub trait Controller {
    fn rate(&self) -> CommandRate {
        CommandRate::Policy
    }

    /// Re-seeds any internal randomness before a rollout.
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, obs: &Observation<'_>) -> Vec<ActuatorCommand>;

    /// Task termination check, evaluated at every PD tick.
    fn terminated(&self, _obs: &Observation<'_>) -> bool {
        false
    }
}

fn record(sim: &Simulator<'_>, body: &BodyState) -> TrajectoryRecord {
    let s = sim.state();
    TrajectoryRecord {
        t: s.t,
        r: body.pitch,
        rdot: body.pitch_rate,
        theta: s.q.clone(),
        thetadot: s.qdot.clone(),
        current: sim.currents().to_vec(),
    }
}

/// Drives `controller` on `chain` for `duration` seconds and logs one record
/// per PD tick. Deterministic in (chain, controller, seed).
pub fn run_rollout(
    chain: &ChainModel,
    sched: SchedulerConfig,
    initial: SimState,
    base_motion: &dyn BaseMotion,
    controller: &mut dyn Controller,
    duration: f64,
    seed: u64,
) -> Result<Trajectory, SimError> {
    if !(duration > 0.0) {
        return Err(SimError::InvalidSchedule("duration must be positive".into()));
    }
    let mut sim = Simulator::new(chain, sched, initial, base_motion)?;
    controller.reset(seed);
    let ticks = sched.pd_ticks(duration);
    let per_policy = sched.pd_per_policy() as usize;
    let rate = controller.rate();
    let mut out = Trajectory {
        records: Vec::with_capacity(ticks),
        terminated_at: None,
    };
    for tick in 0..ticks {
        let body = sim.body();
        out.records.push(record(&sim, &body));
        let s = sim.state();
        let obs = Observation {
            tick,
            t: s.t,
            q: &s.q,
            qdot: &s.qdot,
            current: sim.currents(),
            body,
        };
        if controller.terminated(&obs) {
            out.terminated_at = Some(obs.t);
            break;
        }
        let due = match rate {
            CommandRate::Pd => true,
            CommandRate::Policy => tick % per_policy == 0,
        };
        if due {
            let cmds = controller.act(&obs);
            sim.set_commands(&cmds);
        }
        sim.advance_pd_period(base_motion)?;
    }
    Ok(out)
}

/// Holds fixed commands forever.
#[derive(Debug, Clone)]
pub struct HoldController(pub Vec<ActuatorCommand>);

impl Controller for HoldController {
    fn act(&mut self, _obs: &Observation<'_>) -> Vec<ActuatorCommand> {
        self.0.clone()
    }
}
