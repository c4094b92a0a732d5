//! Per-joint actuator physics: a current-controlled DC motor behind a
//! high-ratio gear train with direction-dependent transmission efficiency,
//! load-independent (Stribeck) friction and a variable-gain PD loop that
//! emits target currents.
//!
//! Everything here is a pure function of its arguments. The simulator in
//! [`crate::sim`] composes these once per integration step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower bound of the commanded proportional gain (A/rad).
pub const KP_MIN: f64 = 0.1;
/// Upper bound of the commanded proportional gain (A/rad).
pub const KP_MAX: f64 = 6.0;
/// The derivative gain is not part of the action; it is pinned here (A·s/rad).
pub const KD_FIXED: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActuatorError {
    #[error("non-finite input to {op}: {name} = {value}")]
    NonFinite {
        op: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("invalid {param}: {value} ({reason})")]
    InvalidParam {
        param: &'static str,
        value: f64,
        reason: &'static str,
    },
}

fn finite(op: &'static str, name: &'static str, value: f64) -> Result<f64, ActuatorError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ActuatorError::NonFinite { op, name, value })
    }
}

fn check(
    ok: bool,
    param: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<(), ActuatorError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ActuatorError::InvalidParam {
            param,
            value,
            reason,
        })
    }
}

/// Three-valued sign. Exact zero maps to 0 and therefore never equals the
/// sign of a nonzero torque.
#[inline]
pub fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// DC motor electrical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    /// Torque constant on the motor side (N·m/A), also the back-EMF constant (V·s/rad).
    pub kt: f64,
    /// Terminal resistance (Ω).
    pub r_ter: f64,
    /// Rotor inertia reflected to the joint (kg·m²).
    pub armature: f64,
    /// Supply voltage bounding the PWM output (V).
    pub v_battery: f64,
}

impl MotorParams {
    pub fn validate(&self) -> Result<(), ActuatorError> {
        check(self.kt > 0.0, "kt", self.kt, "must be > 0")?;
        check(self.r_ter > 0.0, "r_ter", self.r_ter, "must be > 0")?;
        check(self.armature >= 0.0, "armature", self.armature, "must be >= 0")?;
        check(self.v_battery > 0.0, "v_battery", self.v_battery, "must be > 0")
    }

    /// Current drawn with the rotor locked and full battery voltage applied.
    pub fn stall_current(&self) -> f64 {
        self.v_battery / self.r_ter
    }
}

/// Gear train: reduction ratio and the two directional efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GearParams {
    pub ratio: f64,
    /// Efficiency when the motor drives the load.
    pub eta_fw: f64,
    /// Efficiency when the load back-drives the motor.
    pub eta_bw: f64,
}

impl GearParams {
    pub fn validate(&self) -> Result<(), ActuatorError> {
        check(self.ratio >= 1.0, "ratio", self.ratio, "must be >= 1")?;
        check(
            self.eta_fw > 0.0 && self.eta_fw <= 1.0,
            "eta_fw",
            self.eta_fw,
            "must lie in (0, 1]",
        )?;
        check(
            self.eta_bw > 0.0 && self.eta_bw <= 1.0,
            "eta_bw",
            self.eta_bw,
            "must lie in (0, 1]",
        )
    }
}

/// Load-independent joint friction in Stribeck form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionParams {
    /// Static (breakaway) friction torque (N·m).
    pub f_s: f64,
    /// Coulomb friction torque (N·m).
    pub f_c: f64,
    /// Viscous coefficient (N·m·s/rad).
    pub k_v: f64,
    /// Velocity scale above which the joint counts as moving (rad/s).
    pub qdot_static: f64,
}

impl FrictionParams {
    pub fn frictionless() -> Self {
        Self {
            f_s: 0.0,
            f_c: 0.0,
            k_v: 0.0,
            qdot_static: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), ActuatorError> {
        check(self.f_c >= 0.0, "f_c", self.f_c, "must be >= 0")?;
        check(self.f_s >= self.f_c, "f_s", self.f_s, "must be >= f_c")?;
        check(self.k_v >= 0.0, "k_v", self.k_v, "must be >= 0")?;
        check(
            self.qdot_static > 0.0,
            "qdot_static",
            self.qdot_static,
            "must be > 0",
        )
    }
}

/// Motor, gear and friction parameters of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorParams {
    pub motor: MotorParams,
    pub gear: GearParams,
    pub friction: FrictionParams,
}

impl ActuatorParams {
    pub fn validate(&self) -> Result<(), ActuatorError> {
        self.motor.validate()?;
        self.gear.validate()?;
        self.friction.validate()
    }

    /// Largest joint torque the motor can produce at standstill.
    pub fn stall_torque(&self) -> f64 {
        self.gear.ratio * self.motor.kt * self.motor.stall_current()
    }
}

/// Position target plus gains for one joint, as sent to the PD loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub q_target: f64,
    pub kp: f64,
    pub kd: f64,
}

impl ActuatorCommand {
    /// Builds a command with `kp` clamped into the admissible range and the
    /// fixed derivative gain.
    pub fn clamped(q_target: f64, kp: f64) -> Self {
        Self {
            q_target,
            kp: kp.clamp(KP_MIN, KP_MAX),
            kd: KD_FIXED,
        }
    }

    pub fn validate(&self) -> Result<(), ActuatorError> {
        finite("ActuatorCommand", "q_target", self.q_target)?;
        check(
            (KP_MIN..=KP_MAX).contains(&self.kp),
            "kp",
            self.kp,
            "must lie in [0.1, 6]",
        )?;
        check(self.kd == KD_FIXED, "kd", self.kd, "is fixed at 0.1")
    }
}

/// Outcome of one motor evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorStepResult {
    /// Torque on the motor shaft (N·m).
    pub tau_motor: f64,
    /// Motor torque reflected through the gear to the joint (N·m).
    pub tau_joint_drive: f64,
    /// Realised current (A).
    pub i_actual: f64,
    /// Voltage actually applied after the battery clamp (V).
    pub v_pwm: f64,
}

/// Current-controlled DC motor. The controller asks for `R·I_target + V_emf`
/// and the battery clamps it; back-EMF is computed from the motor-shaft
/// speed, i.e. the joint speed multiplied by the gear ratio.
pub fn motor_step(
    motor: &MotorParams,
    qdot_joint: f64,
    r_gear: f64,
    i_target: f64,
) -> Result<MotorStepResult, ActuatorError> {
    const OP: &str = "motor_step";
    finite(OP, "qdot_joint", qdot_joint)?;
    finite(OP, "r_gear", r_gear)?;
    finite(OP, "i_target", i_target)?;
    motor.validate()?;

    let qdot_motor = r_gear * qdot_joint;
    let v_emf = motor.kt * qdot_motor;
    let v_target = motor.r_ter * i_target + v_emf;
    let v_pwm = v_target.clamp(-motor.v_battery, motor.v_battery);
    let i_actual = (v_pwm - v_emf) / motor.r_ter;
    let tau_motor = motor.kt * i_actual;
    Ok(MotorStepResult {
        tau_motor,
        tau_joint_drive: r_gear * tau_motor,
        i_actual,
        v_pwm,
    })
}

/// Which efficiency regime a (motor torque, load torque) pair falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveMode {
    Forward,
    Backward,
    Antagonistic,
}

/// True when both values have the same nonzero sign.
#[inline]
fn same_sign(a: f64, b: f64) -> bool {
    let s = sign(a);
    s != 0 && s == sign(b)
}

/// Classifies the drive direction. Forward when the motor still wins after
/// its losses; backward when the load wins even after its losses; otherwise
/// the two are locked against each other. A zero sign matches nothing, so
/// exact zeros fall through to the locked case.
pub fn drive_mode(tau_m: f64, tau_a: f64, eta_fw: f64, eta_bw: f64) -> DriveMode {
    if same_sign(eta_fw * tau_m + tau_a, tau_m) {
        DriveMode::Forward
    } else if same_sign(tau_m + eta_bw * tau_a, tau_a) {
        DriveMode::Backward
    } else {
        DriveMode::Antagonistic
    }
}

/// Extra joint torque representing transmission losses.
///
/// `tau_m` is the motor torque at the joint (ratio × shaft torque) and
/// `tau_a` the load torque acting on the joint. In the locked case the
/// result cancels both exactly.
pub fn brake_torque(
    tau_m: f64,
    tau_a: f64,
    eta_fw: f64,
    eta_bw: f64,
) -> Result<f64, ActuatorError> {
    const OP: &str = "brake_torque";
    finite(OP, "tau_m", tau_m)?;
    finite(OP, "tau_a", tau_a)?;
    finite(OP, "eta_fw", eta_fw)?;
    finite(OP, "eta_bw", eta_bw)?;
    Ok(match drive_mode(tau_m, tau_a, eta_fw, eta_bw) {
        DriveMode::Forward => -((1.0 - eta_fw) * tau_m),
        DriveMode::Backward => -((1.0 - eta_bw) * tau_a),
        DriveMode::Antagonistic => -(tau_m + tau_a),
    })
}

/// Magnitude bound of the load-independent friction torque at joint speed
/// `qdot`: static friction at rest decaying to Coulomb plus viscous.
pub fn friction_bound(qdot: f64, fric: &FrictionParams) -> f64 {
    let speed = qdot.abs();
    let s = (-speed / fric.qdot_static).exp();
    fric.f_c + s * (fric.f_s - fric.f_c) + fric.k_v * speed
}

/// PD law producing a target current (A).
#[inline]
pub fn pd_target_current(cmd: &ActuatorCommand, q: f64, qdot: f64) -> f64 {
    cmd.kp * (cmd.q_target - q) - cmd.kd * qdot
}

/// Result of composing motor, gear and friction for one simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorOutput {
    /// Motor drive plus brake torque, applied explicitly to the joint (N·m).
    pub tau_applied: f64,
    /// Friction torque magnitude the integrator may use as a clamp (N·m).
    pub friction_cap: f64,
    pub i_actual: f64,
    pub v_pwm: f64,
    pub tau_brake: f64,
}

/// One actuator evaluation. `i_target` is the held PD output and `tau_load`
/// the load torque on the joint estimated from the current state.
pub fn actuator_step(
    params: &ActuatorParams,
    qdot: f64,
    i_target: f64,
    tau_load: f64,
) -> Result<ActuatorOutput, ActuatorError> {
    let motor = motor_step(&params.motor, qdot, params.gear.ratio, i_target)?;
    let tau_m = motor.tau_joint_drive;
    let tau_brake = brake_torque(tau_m, tau_load, params.gear.eta_fw, params.gear.eta_bw)?;
    Ok(ActuatorOutput {
        tau_applied: tau_m + tau_brake,
        friction_cap: friction_bound(qdot, &params.friction),
        i_actual: motor.i_actual,
        v_pwm: motor.v_pwm,
        tau_brake,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn motor() -> MotorParams {
        MotorParams {
            kt: 0.005,
            r_ter: 5.0,
            armature: 0.005,
            v_battery: 12.0,
        }
    }

    // Scalar re-evaluation of the motor equations, written independently.
    fn motor_oracle(kt: f64, r: f64, vb: f64, qdot: f64, ratio: f64, it: f64) -> (f64, f64, f64) {
        let emf = kt * ratio * qdot;
        let mut v = r * it + emf;
        if v > vb {
            v = vb;
        }
        if v < -vb {
            v = -vb;
        }
        let i = (v - emf) / r;
        (v, i, kt * i)
    }

    #[test]
    fn motor_unsaturated() {
        let out = motor_step(&motor(), 0.0, 353.5, 2.0).unwrap();
        let (v, i, tau) = motor_oracle(0.005, 5.0, 12.0, 0.0, 353.5, 2.0);
        assert_eq!((v, i, tau), (10.0, 2.0, 0.01));
        assert_abs_diff_eq!(out.v_pwm, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.i_actual, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.tau_motor, 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(out.tau_joint_drive, 3.535, epsilon = 1e-12);
    }

    #[test]
    fn motor_battery_clamp() {
        let out = motor_step(&motor(), 0.0, 353.5, 3.0).unwrap();
        let (v, i, tau) = motor_oracle(0.005, 5.0, 12.0, 0.0, 353.5, 3.0);
        assert_abs_diff_eq!(v, 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.v_pwm, 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.i_actual, i, epsilon = 1e-12);
        assert_abs_diff_eq!(out.i_actual, 2.4, epsilon = 1e-12);
        assert_abs_diff_eq!(out.tau_motor, tau, epsilon = 1e-12);
        assert_abs_diff_eq!(out.tau_motor, 0.012, epsilon = 1e-12);
    }

    #[test]
    fn motor_zero_input() {
        let out = motor_step(&motor(), 0.0, 353.5, 0.0).unwrap();
        assert_eq!(out.tau_motor, 0.0);
        assert_eq!(out.i_actual, 0.0);
        assert_eq!(out.v_pwm, 0.0);
    }

    #[test]
    fn back_emf_uses_motor_shaft_speed() {
        // 1 rad/s at the joint is 353.5 rad/s at the rotor: 1.7675 V of EMF.
        let out = motor_step(&motor(), 1.0, 353.5, 0.0).unwrap();
        assert_abs_diff_eq!(out.v_pwm, 0.005 * 353.5, epsilon = 1e-12);
        assert_eq!(out.i_actual, 0.0);
        // Beyond the battery limit the EMF drives current backwards.
        let fast = motor_step(&motor(), 10.0, 353.5, 0.0).unwrap();
        assert_eq!(fast.v_pwm, 12.0);
        assert!(fast.i_actual < 0.0);
    }

    #[test]
    fn motor_rejects_non_finite() {
        assert!(matches!(
            motor_step(&motor(), f64::NAN, 353.5, 1.0),
            Err(ActuatorError::NonFinite { name: "qdot_joint", .. })
        ));
        assert!(motor_step(&motor(), 0.0, 353.5, f64::INFINITY).is_err());
        let bad = MotorParams { r_ter: 0.0, ..motor() };
        assert!(matches!(
            motor_step(&bad, 0.0, 353.5, 1.0),
            Err(ActuatorError::InvalidParam { param: "r_ter", .. })
        ));
    }

    #[test]
    fn brake_examples() {
        assert_abs_diff_eq!(brake_torque(1.0, 0.2, 0.9, 0.8).unwrap(), -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(brake_torque(0.1, -1.0, 0.9, 0.8).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(brake_torque(1.0, -1.0, 0.9, 0.8).unwrap(), 0.0);
        assert_eq!(drive_mode(1.0, 0.2, 0.9, 0.8), DriveMode::Forward);
        assert_eq!(drive_mode(0.1, -1.0, 0.9, 0.8), DriveMode::Backward);
        assert_eq!(drive_mode(1.0, -1.0, 0.9, 0.8), DriveMode::Antagonistic);
    }

    #[test]
    fn brake_zero_torques_are_antagonistic() {
        assert_eq!(drive_mode(0.0, 0.0, 0.9, 0.8), DriveMode::Antagonistic);
        assert_eq!(brake_torque(0.0, 0.0, 0.9, 0.8).unwrap(), 0.0);
        // Motor idle under load: load wins outright.
        assert_eq!(drive_mode(0.0, 0.5, 0.9, 0.8), DriveMode::Backward);
        assert_abs_diff_eq!(brake_torque(0.0, 0.5, 0.9, 0.8).unwrap(), -0.1, epsilon = 1e-15);
    }

    #[test]
    fn brake_rejects_non_finite() {
        assert!(brake_torque(f64::NAN, 0.0, 1.0, 1.0).is_err());
        assert!(brake_torque(0.0, f64::NEG_INFINITY, 1.0, 1.0).is_err());
    }

    #[test]
    fn friction_examples() {
        let f = FrictionParams {
            f_s: 0.2,
            f_c: 0.1,
            k_v: 0.05,
            qdot_static: 0.1,
        };
        assert_abs_diff_eq!(friction_bound(0.0, &f), 0.2, epsilon = 1e-15);
        let expected = 0.1 + (-1.0f64).exp() * 0.1 + 0.005;
        assert_abs_diff_eq!(friction_bound(0.1, &f), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(friction_bound(-0.1, &f), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(friction_bound(0.1, &f), 0.1418, epsilon = 1e-4);
        let flat = FrictionParams {
            f_s: 0.1,
            f_c: 0.1,
            k_v: 0.0,
            qdot_static: 0.1,
        };
        for qd in [-5.0, -0.01, 0.0, 0.3, 40.0] {
            assert_abs_diff_eq!(friction_bound(qd, &flat), 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn pd_examples() {
        let c = ActuatorCommand::clamped(0.1, 6.0);
        assert_abs_diff_eq!(pd_target_current(&c, 0.0, 0.0), 0.6, epsilon = 1e-12);
        assert_eq!(pd_target_current(&c, 0.1, 0.0), 0.0);
        let soft = ActuatorCommand::clamped(1.0, 0.1);
        assert_abs_diff_eq!(pd_target_current(&soft, 0.0, 1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn command_clamp_and_validation() {
        assert_eq!(ActuatorCommand::clamped(0.0, 100.0).kp, KP_MAX);
        assert_eq!(ActuatorCommand::clamped(0.0, -3.0).kp, KP_MIN);
        assert!(ActuatorCommand::clamped(0.0, 2.0).validate().is_ok());
        let bad = ActuatorCommand {
            q_target: 0.0,
            kp: 2.0,
            kd: 0.3,
        };
        assert!(bad.validate().is_err());
    }

    fn params(eta_fw: f64, eta_bw: f64, fric: FrictionParams) -> ActuatorParams {
        ActuatorParams {
            motor: motor(),
            gear: GearParams {
                ratio: 353.5,
                eta_fw,
                eta_bw,
            },
            friction: fric,
        }
    }

    #[test]
    fn lossless_step_passes_motor_torque() {
        let p = params(1.0, 1.0, FrictionParams::frictionless());
        let out = actuator_step(&p, 0.3, 0.7, -0.4).unwrap();
        let m = motor_step(&p.motor, 0.3, 353.5, 0.7).unwrap();
        assert_eq!(out.tau_applied, m.tau_joint_drive);
    }

    #[test]
    fn antagonistic_step_cancels_load() {
        let p = params(0.9, 0.8, FrictionParams::frictionless());
        // 1 A -> 1.7675 N·m at the joint; load of -1.9 N·m sits in the lock band.
        let out = actuator_step(&p, 0.0, 1.0, -1.9).unwrap();
        assert_eq!(out.tau_applied, 1.9);
        assert_eq!(out.tau_applied + -1.9, 0.0);
    }

    #[test]
    fn stall_bounds_applied_torque() {
        let p = params(1.0, 1.0, FrictionParams::frictionless());
        let limit = 353.5 * 0.005 * 12.0 / 5.0;
        let out = actuator_step(&p, 0.0, 50.0, 0.0).unwrap();
        assert_abs_diff_eq!(out.tau_applied, limit, epsilon = 1e-12);
        assert_abs_diff_eq!(p.stall_torque(), limit, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn voltage_never_exceeds_battery(
            qdot in -50.0f64..50.0,
            it in -20.0f64..20.0,
            kt in 0.003f64..0.009,
            r in 4.0f64..9.0,
        ) {
            let m = MotorParams { kt, r_ter: r, armature: 0.005, v_battery: 12.0 };
            let out = motor_step(&m, qdot, 353.5, it).unwrap();
            prop_assert!(out.v_pwm.abs() <= 12.0);
            prop_assert_eq!(out.tau_motor, kt * out.i_actual);
            prop_assert_eq!(out.tau_joint_drive, 353.5 * out.tau_motor);
        }

        #[test]
        fn brake_never_aids_motion(
            tm in -5.0f64..5.0,
            ta in -5.0f64..5.0,
            efw in 0.05f64..=1.0,
            ebw in 0.05f64..=1.0,
        ) {
            let b = brake_torque(tm, ta, efw, ebw).unwrap();
            match drive_mode(tm, ta, efw, ebw) {
                DriveMode::Forward => prop_assert!(b == 0.0 || sign(b) == -sign(tm)),
                DriveMode::Backward => prop_assert!(b == 0.0 || sign(b) == -sign(ta)),
                DriveMode::Antagonistic => prop_assert_eq!(tm + ta + b, 0.0),
            }
        }

        #[test]
        fn lossless_gear_has_no_brake(tm in -5.0f64..5.0, ta in -5.0f64..5.0) {
            prop_assert_eq!(brake_torque(tm, ta, 1.0, 1.0).unwrap(), 0.0);
            prop_assert_eq!(brake_torque(tm, -tm, 1.0, 1.0).unwrap(), 0.0);
        }

        #[test]
        fn friction_bound_properties(
            qd in -20.0f64..20.0,
            fc in 0.0f64..0.25,
            dfs in 0.0f64..0.25,
            kv in 0.0f64..0.15,
            qs in 0.001f64..1.0,
        ) {
            let f = FrictionParams { f_s: fc + dfs, f_c: fc, k_v: kv, qdot_static: qs };
            let v = friction_bound(qd, &f);
            prop_assert!(v >= 0.0);
            prop_assert!(v >= fc + kv * qd.abs() - 1e-15);
            prop_assert!(v <= fc + dfs + kv * qd.abs() + 1e-15);
            // Continuity: small velocity perturbations give small changes.
            let dv = (friction_bound(qd + 1e-9, &f) - v).abs();
            prop_assert!(dv < 1e-6);
        }

        #[test]
        fn pd_is_translation_invariant(
            qt in -2.0f64..2.0, q in -2.0f64..2.0, qd in -5.0f64..5.0,
            kp in KP_MIN..KP_MAX, shift in -3.0f64..3.0,
        ) {
            let a = pd_target_current(&ActuatorCommand::clamped(qt, kp), q, qd);
            let b = pd_target_current(&ActuatorCommand::clamped(qt + shift, kp), q + shift, qd);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
