use serde::{Deserialize, Serialize};

use super::SimError;

/// Multi-rate timing of the control stack: physics at `sim_dt`, PD at
/// `pd_hz`, policy at `policy_hz`, with a transport delay on the current
/// command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub sim_dt: f64,
    pub pd_hz: f64,
    pub policy_hz: f64,
    pub latency: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            sim_dt: 0.001,
            pd_hz: 125.0,
            policy_hz: 31.25,
            latency: 0.008,
        }
    }
}

fn whole(x: f64) -> Option<u64> {
    let r = x.round();
    ((x - r).abs() < 1e-9 && r >= 0.0).then_some(r as u64)
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidSchedule(msg.to_string()));
        if !(self.sim_dt > 0.0 && self.pd_hz > 0.0 && self.policy_hz > 0.0) {
            return bad("rates and step must be positive");
        }
        match whole(1.0 / (self.sim_dt * self.pd_hz)) {
            Some(k) if k >= 1 => {}
            _ => return bad("PD period is not a whole number of sim steps"),
        }
        match whole(self.pd_hz / self.policy_hz) {
            Some(k) if k >= 1 => {}
            _ => return bad("policy period is not a whole number of PD periods"),
        }
        if !(self.latency >= 0.0) || whole(self.latency / self.sim_dt).is_none() {
            return bad("latency must be a non-negative multiple of sim_dt");
        }
        Ok(())
    }

    /// Simulation steps per PD period.
    pub fn pd_steps(&self) -> u64 {
        (1.0 / (self.sim_dt * self.pd_hz)).round() as u64
    }

    /// PD periods per policy period.
    pub fn pd_per_policy(&self) -> u64 {
        (self.pd_hz / self.policy_hz).round() as u64
    }

    /// Simulation steps per policy period.
    pub fn policy_steps(&self) -> u64 {
        self.pd_steps() * self.pd_per_policy()
    }

    pub fn latency_steps(&self) -> u64 {
        (self.latency / self.sim_dt).round() as u64
    }

    /// Number of PD ticks in `duration` seconds.
    pub fn pd_ticks(&self, duration: f64) -> usize {
        (duration * self.pd_hz).round() as usize
    }
}
