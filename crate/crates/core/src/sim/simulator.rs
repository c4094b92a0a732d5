//! Fixed-step integration of the actuated chain.
//!
//! Each 1 ms step evaluates the actuators against the load estimated from
//! the current state, adds the gear brake torque explicitly, clamps the
//! result with the joint friction bound and advances with semi-implicit
//! Euler. PD targets are turned into currents once per PD period and reach
//! the motors after the configured latency.

use std::collections::VecDeque;

use crate::actuator::{actuator_step, pd_target_current, ActuatorCommand};

use super::chain::ChainModel;
use super::dynamics::{BaseKinematics, Workspace};
use super::scheduler::SchedulerConfig;
use super::SimError;

/// Prescribed board motion.
pub trait BaseMotion: Sync {
    fn at(&self, t: f64) -> BaseKinematics;
}

/// Board held level.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatBase;

impl BaseMotion for FlatBase {
    fn at(&self, _t: f64) -> BaseKinematics {
        BaseKinematics::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub base_tilt: f64,
    pub t: f64,
}

impl SimState {
    pub fn at_rest(q: Vec<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            qdot: vec![0.0; n],
            base_tilt: 0.0,
            t: 0.0,
        }
    }
}

/// Kinematic summary of the base body (last link) used for observations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    /// Absolute pitch of the base body; zero is upright (rad).
    pub pitch: f64,
    pub pitch_rate: f64,
    pub com: [f64; 2],
    pub com_vel: [f64; 2],
    /// Kinematic CoM acceleration over the last step, gravity excluded.
    pub com_acc: [f64; 2],
}

pub struct Simulator<'a> {
    chain: &'a ChainModel,
    sched: SchedulerConfig,
    state: SimState,
    base: BaseKinematics,
    ws: Workspace,
    commands: Vec<ActuatorCommand>,
    pending: VecDeque<(u64, Vec<f64>)>,
    active_current: Vec<f64>,
    external: Vec<f64>,
    i_actual: Vec<f64>,
    v_pwm: Vec<f64>,
    last_acc: [f64; 2],
    step_index: u64,
    peak_voltage_ratio: f64,
    // scratch
    drive: Vec<f64>,
    cap: Vec<f64>,
    net: Vec<f64>,
    locked: Vec<bool>,
    qddot: Vec<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        chain: &'a ChainModel,
        sched: SchedulerConfig,
        initial: SimState,
        base_motion: &dyn BaseMotion,
    ) -> Result<Self, SimError> {
        chain.validate()?;
        sched.validate()?;
        let n = chain.dof();
        if initial.q.len() != n || initial.qdot.len() != n {
            return Err(SimError::InvalidModel(format!(
                "state has {} angles for {n} joints",
                initial.q.len()
            )));
        }
        let base = base_motion.at(initial.t);
        let mut state = initial;
        state.base_tilt = base.tilt;
        let commands = state
            .q
            .iter()
            .map(|&q| ActuatorCommand::clamped(q, crate::actuator::KP_MIN))
            .collect();
        Ok(Self {
            chain,
            sched,
            state,
            base,
            ws: Workspace::new(n),
            commands,
            pending: VecDeque::new(),
            active_current: vec![0.0; n],
            external: vec![0.0; n],
            i_actual: vec![0.0; n],
            v_pwm: vec![0.0; n],
            last_acc: [0.0; 2],
            step_index: 0,
            peak_voltage_ratio: 0.0,
            drive: vec![0.0; n],
            cap: vec![0.0; n],
            net: vec![0.0; n],
            locked: vec![false; n],
            qddot: vec![0.0; n],
        })
    }

    pub fn chain(&self) -> &ChainModel {
        self.chain
    }

    pub fn scheduler(&self) -> &SchedulerConfig {
        &self.sched
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    /// Motor currents realised in the most recent step.
    pub fn currents(&self) -> &[f64] {
        &self.i_actual
    }

    pub fn voltages(&self) -> &[f64] {
        &self.v_pwm
    }

    /// Largest |V_pwm| / V_battery seen so far.
    pub fn peak_voltage_ratio(&self) -> f64 {
        self.peak_voltage_ratio
    }

    pub fn commands(&self) -> &[ActuatorCommand] {
        &self.commands
    }

    /// Replaces the held PD commands; they take effect at the next PD tick.
    pub fn set_commands(&mut self, cmds: &[ActuatorCommand]) {
        debug_assert_eq!(cmds.len(), self.commands.len());
        self.commands.copy_from_slice(cmds);
    }

    /// Constant external joint torques, e.g. a push on the output shaft.
    pub fn set_external(&mut self, ext: &[f64]) {
        self.external.copy_from_slice(ext);
    }

    pub fn body(&self) -> BodyState {
        let n = self.chain.dof();
        let mut ws = Workspace::new(n);
        ws.update(self.chain, &self.state.q, &self.state.qdot, self.base);
        BodyState {
            pitch: ws.angle[n - 1],
            pitch_rate: ws.omega[n - 1],
            com: ws.com_pos[n - 1],
            com_vel: ws.com_vel[n - 1],
            com_acc: self.last_acc,
        }
    }

    /// Runs one PD period: computes target currents from the held commands,
    /// queues them behind the latency and integrates `pd_steps` physics steps.
    pub fn advance_pd_period(&mut self, base_motion: &dyn BaseMotion) -> Result<(), SimError> {
        let currents: Vec<f64> = self
            .commands
            .iter()
            .zip(self.state.q.iter().zip(&self.state.qdot))
            .map(|(c, (&q, &qd))| pd_target_current(c, q, qd))
            .collect();
        self.pending
            .push_back((self.step_index + self.sched.latency_steps(), currents));
        for _ in 0..self.sched.pd_steps() {
            self.step(base_motion)?;
        }
        Ok(())
    }

    /// One physics step of `sim_dt`.
    pub fn step(&mut self, base_motion: &dyn BaseMotion) -> Result<(), SimError> {
        while let Some((due, _)) = self.pending.front() {
            if *due > self.step_index {
                break;
            }
            let (_, c) = self.pending.pop_front().expect("front exists");
            self.active_current = c;
        }

        let n = self.chain.dof();
        let dt = self.sched.sim_dt;
        let base = self.base;
        self.ws
            .update(self.chain, &self.state.q, &self.state.qdot, base);

        for j in 0..n {
            let act = &self.chain.joints[j].actuator;
            let qd = self.state.qdot[j];
            let load = -self.ws.bias[j] + self.external[j];
            let out = actuator_step(act, qd, self.active_current[j], load).map_err(|e| {
                SimError::Actuator {
                    step: self.step_index,
                    joint: j,
                    source: e,
                }
            })?;
            self.i_actual[j] = out.i_actual;
            self.v_pwm[j] = out.v_pwm;
            debug_assert!(out.v_pwm.abs() <= act.motor.v_battery);
            let ratio = out.v_pwm.abs() / act.motor.v_battery;
            if ratio > self.peak_voltage_ratio {
                self.peak_voltage_ratio = ratio;
            }
            let net = out.tau_applied + load;
            let cap = out.friction_cap;
            self.drive[j] = net;
            self.cap[j] = cap;
            let slow = qd.abs() < act.friction.qdot_static;
            let fric = if slow && net.abs() <= cap {
                self.locked[j] = true;
                -net
            } else {
                self.locked[j] = false;
                let dir = if slow { net } else { qd };
                -cap * dir.signum()
            };
            self.net[j] = net + fric;
        }

        self.ws.solve(&self.net, &self.locked, &mut self.qddot)?;
        self.last_acc = self.ws.com_accel(n - 1, &self.qddot);

        for j in 0..n {
            let qd = self.state.qdot[j];
            let mut v = if self.locked[j] {
                0.0
            } else {
                qd + dt * self.qddot[j]
            };
            // Friction alone can stop a joint but never reverse it.
            if !self.locked[j] && qd != 0.0 && v.signum() != qd.signum() && self.drive[j].abs() <= self.cap[j] {
                v = 0.0;
            }
            let mut q = self.state.q[j] + dt * v;
            let [lo, hi] = self.chain.joints[j].limits;
            if q < lo {
                q = lo;
                v = v.max(0.0);
            } else if q > hi {
                q = hi;
                v = v.min(0.0);
            }
            self.state.q[j] = q;
            self.state.qdot[j] = v;
        }

        self.step_index += 1;
        self.state.t = self.step_index as f64 * dt;
        self.base = base_motion.at(self.state.t);
        self.state.base_tilt = self.base.tilt;

        let finite = self
            .state
            .q
            .iter()
            .chain(&self.state.qdot)
            .all(|v| v.is_finite());
        if !finite {
            return Err(SimError::NonFinite {
                step: self.step_index,
            });
        }
        Ok(())
    }
}
