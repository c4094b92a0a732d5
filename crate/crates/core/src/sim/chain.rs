//! Planar articulated-chain description.
//!
//! The chain is rooted on a board that rotates about the world origin. Joint
//! 0 sits at `mount` (expressed in the board frame); every further joint sits
//! at the distal end of the previous link. Angles are measured
//! counter-clockwise from the board's "up" direction, so a link at absolute
//! angle `phi` points along `(-sin phi, cos phi)`.
//!
//! The last link is the robot's base body (the torso). The base mass and
//! CoM offsets that identification adjusts are applied to it.

use serde::{Deserialize, Serialize};

use crate::actuator::{ActuatorParams, FrictionParams, GearParams, MotorParams};

use super::SimError;

/// Reduction ratio of the servo gear train.
pub const GEAR_RATIO: f64 = 353.5;
/// Supply voltage of the servos (V).
pub const BATTERY_VOLTAGE: f64 = 12.0;
/// Speed below which a joint is considered at rest (rad/s).
pub const QDOT_STATIC: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    /// kg
    pub mass: f64,
    /// Joint-to-joint length (m).
    pub length: f64,
    /// CoM distance from the proximal joint along the link axis (m).
    pub com: f64,
    /// CoM offset perpendicular to the link axis, positive forward (m).
    #[serde(default)]
    pub com_lateral: f64,
    /// Rotational inertia about the CoM (kg·m²).
    pub inertia: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub actuator: ActuatorParams,
    /// Lower and upper angle limit (rad).
    pub limits: [f64; 2],
}

/// Identifiable corrections to the base body.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BaseBody {
    pub mass_offset: f64,
    pub com_offset_x: f64,
    pub com_offset_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub base: BaseBody,
    /// Magnitude of gravitational acceleration (m/s²), acting along -y.
    pub gravity: f64,
    /// Position of joint 0 in the board frame (m).
    pub mount: [f64; 2],
}

impl ChainModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.links.is_empty() {
            return Err(SimError::InvalidModel("chain has no links".into()));
        }
        if self.links.len() != self.joints.len() {
            return Err(SimError::InvalidModel(format!(
                "{} links but {} joints",
                self.links.len(),
                self.joints.len()
            )));
        }
        for (i, l) in self.links.iter().enumerate() {
            let ok = l.mass > 0.0
                && l.length > 0.0
                && l.inertia > 0.0
                && [l.com, l.com_lateral].iter().all(|v| v.is_finite());
            if !ok {
                return Err(SimError::InvalidModel(format!(
                    "link {i}: mass, length and inertia must be positive"
                )));
            }
        }
        for (i, j) in self.joints.iter().enumerate() {
            j.actuator
                .validate()
                .map_err(|e| SimError::InvalidModel(format!("joint {i}: {e}")))?;
            if !(j.limits[0] < j.limits[1]) {
                return Err(SimError::InvalidModel(format!("joint {i}: empty limits")));
            }
        }
        let last = self.links.len() - 1;
        if !(self.links[last].mass + self.base.mass_offset > 0.0) || !self.gravity.is_finite() {
            return Err(SimError::InvalidModel("base body mass must stay positive".into()));
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Link `i` with the base-body corrections folded in for the last link.
    pub fn effective_link(&self, i: usize) -> Link {
        let mut l = self.links[i];
        if i + 1 == self.links.len() {
            l.mass += self.base.mass_offset;
            l.com += self.base.com_offset_z;
            l.com_lateral += self.base.com_offset_x;
        }
        l
    }

    /// Sets the same actuator on every joint.
    pub fn set_actuators(&mut self, act: ActuatorParams) {
        for j in &mut self.joints {
            j.actuator = act;
        }
    }

    /// Desk-scale leg on a tilting board: a shank rigidly strapped to the
    /// board, a knee-analog joint carrying the thigh and a hip-analog joint
    /// carrying the torso.
    pub fn leg_on_board() -> Self {
        let actuator = ActuatorParams {
            motor: MotorParams {
                kt: 0.005,
                r_ter: 5.22,
                armature: 0.005,
                v_battery: BATTERY_VOLTAGE,
            },
            gear: GearParams {
                ratio: GEAR_RATIO,
                eta_fw: 1.0,
                eta_bw: 0.8,
            },
            friction: FrictionParams {
                f_s: 0.15,
                f_c: 0.08,
                k_v: 0.05,
                qdot_static: QDOT_STATIC,
            },
        };
        Self {
            links: vec![
                Link {
                    mass: 0.35,
                    length: 0.11,
                    com: 0.055,
                    com_lateral: 0.0,
                    inertia: 0.00035,
                },
                Link {
                    mass: 1.5,
                    length: 0.25,
                    com: 0.12,
                    com_lateral: 0.0,
                    inertia: 0.008,
                },
            ],
            joints: vec![
                Joint {
                    actuator,
                    limits: [-0.2, 2.2],
                },
                Joint {
                    actuator,
                    limits: [-2.6, 0.8],
                },
            ],
            base: BaseBody::default(),
            gravity: 9.81,
            mount: [0.0, 0.12],
        }
    }

    /// Single link hinged at the origin, used by physics sanity checks.
    pub fn single_pendulum(mass: f64, length: f64, inertia: f64, actuator: ActuatorParams) -> Self {
        Self {
            links: vec![Link {
                mass,
                length,
                com: length,
                com_lateral: 0.0,
                inertia,
            }],
            joints: vec![Joint {
                actuator,
                limits: [-100.0, 100.0],
            }],
            base: BaseBody::default(),
            gravity: 9.81,
            mount: [0.0, 0.0],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let m: Self = serde_json::from_str(s).map_err(|e| SimError::InvalidModel(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}
