//! Linear policy over two stacked observation frames, emitting per-joint
//! target offsets and P gains.

use serde::{Deserialize, Serialize};

use crate::actuator::{ActuatorCommand, KD_FIXED, KP_MAX, KP_MIN};
use crate::sim::ChainModel;

use super::TaskError;

/// Gain emitted by a zero output: the middle of the allowed range.
pub const KP_MID: f64 = 0.5 * (KP_MIN + KP_MAX);
const KP_HALF_RANGE: f64 = 0.5 * (KP_MAX - KP_MIN);

/// Frames concatenated into one policy input (the latest and one previous).
pub const STACK: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Divisors applied to each raw frame channel.
    pub obs_scale: Vec<f64>,
    /// Posture the target offsets are relative to.
    pub nominal: Vec<f64>,
    /// Largest target offset (rad); outputs pass through tanh.
    pub offset_scale: f64,
}

impl PolicyParams {
    /// Frame layout: body pitch, pitch rate, then per joint angle offset and
    /// velocity, then the previous normalized action.
    pub fn frame_len(joints: usize) -> usize {
        2 + 2 * joints + 2 * joints
    }

    pub fn zeros(nominal: Vec<f64>) -> Self {
        let n = nominal.len();
        let inputs = STACK * Self::frame_len(n);
        let mut obs_scale = vec![0.3, 2.0];
        obs_scale.extend(std::iter::repeat_n(0.5, n));
        obs_scale.extend(std::iter::repeat_n(3.0, n));
        obs_scale.extend(std::iter::repeat_n(1.0, 2 * n));
        Self {
            weights: vec![0.0; 2 * n * inputs],
            bias: vec![0.0; 2 * n],
            obs_scale,
            nominal,
            offset_scale: 0.6,
        }
    }

    pub fn joints(&self) -> usize {
        self.nominal.len()
    }

    pub fn outputs(&self) -> usize {
        2 * self.joints()
    }

    pub fn inputs(&self) -> usize {
        STACK * Self::frame_len(self.joints())
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let n = self.joints();
        let ok = n > 0
            && self.weights.len() == self.outputs() * self.inputs()
            && self.bias.len() == self.outputs()
            && self.obs_scale.len() == Self::frame_len(n)
            && self.obs_scale.iter().all(|s| s.is_finite() && *s > 0.0)
            && self.offset_scale.is_finite()
            && self.offset_scale >= 0.0
            && self.weights.iter().chain(&self.bias).chain(&self.nominal).all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(TaskError::InvalidPolicy)
        }
    }

    /// Trainable parameters as one flat vector (weights then bias).
    pub fn flat(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn with_flat(&self, theta: &[f64]) -> Self {
        let nw = self.weights.len();
        let mut p = self.clone();
        p.weights.copy_from_slice(&theta[..nw]);
        let nb = p.bias.len();
        p.bias.copy_from_slice(&theta[nw..nw + nb]);
        p
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, TaskError> {
        let p: Self = serde_json::from_str(s).map_err(|e| TaskError::Format(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    /// Normalized frame from raw signals.
    pub fn frame(&self, r: f64, rdot: f64, q: &[f64], qdot: &[f64], prev_action: &[f64]) -> Vec<f64> {
        let n = self.joints();
        let mut f = Vec::with_capacity(Self::frame_len(n));
        f.push(r);
        f.push(rdot);
        f.extend(q.iter().zip(&self.nominal).map(|(a, b)| a - b));
        f.extend_from_slice(qdot);
        f.extend_from_slice(prev_action);
        for (v, s) in f.iter_mut().zip(&self.obs_scale) {
            *v /= s;
        }
        f
    }

    /// Raw outputs; the first `n` drive target offsets, the last `n` gains.
    pub fn output(&self, history: &[Vec<f64>]) -> Vec<f64> {
        let input: Vec<f64> = history.iter().flatten().copied().collect();
        let m = self.inputs();
        debug_assert_eq!(input.len(), m);
        (0..self.outputs())
            .map(|o| {
                let row = &self.weights[o * m..(o + 1) * m];
                self.bias[o] + row.iter().zip(&input).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }
}

/// Commands from raw outputs; also returns the normalized action fed back
/// as the next frame's previous action.
pub fn decode(params: &PolicyParams, out: &[f64], chain: &ChainModel) -> (Vec<ActuatorCommand>, Vec<f64>) {
    let n = params.joints();
    let mut cmds = Vec::with_capacity(n);
    let mut norm = vec![0.0; 2 * n];
    for i in 0..n {
        let offset = params.offset_scale * out[i].tanh();
        let lim = chain.joints[i].limits;
        let q_target = (params.nominal[i] + offset).clamp(lim[0], lim[1]);
        let kp = (KP_MID + KP_HALF_RANGE * out[n + i]).clamp(KP_MIN, KP_MAX);
        cmds.push(ActuatorCommand {
            q_target,
            kp,
            kd: KD_FIXED,
        });
        norm[i] = out[i].tanh();
        norm[n + i] = (kp - KP_MID) / KP_HALF_RANGE;
    }
    (cmds, norm)
}

/// Commands for the latest observation history (oldest frame first).
pub fn policy_act(params: &PolicyParams, history: &[Vec<f64>], chain: &ChainModel) -> Result<Vec<ActuatorCommand>, TaskError> {
    if history.len() != STACK || history.iter().any(|f| f.len() != PolicyParams::frame_len(params.joints())) {
        return Err(TaskError::History(history.len()));
    }
    Ok(decode(params, &params.output(history), chain).0)
}
