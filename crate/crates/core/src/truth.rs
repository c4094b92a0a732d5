//! Sealed stand-in for the physical robot.
//!
//! A [`GroundTruth`] draws hidden parameters φ* from its own seed and only
//! answers through rollouts: excitation recordings and policy episodes.
//! [`GroundTruth::reveal`] is the single accessor for φ* and exists for
//! the final audit.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::rng::stream;
use crate::sim::{ChainModel, SchedulerConfig, Trajectory};
use crate::sysid::{ExcitationMotion, ParamSpace, SimParams, SysidError};
use crate::task::{evaluate_policy, PolicyParams, RewardCoeffs, RewardDistribution, TaskConfig, TaskError};

/// Backward efficiency range used out of family when none is configured.
pub const DEFAULT_DTE_ETA_BW: [f64; 2] = [0.6, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthMode {
    /// φ* lies in the fitted model family.
    #[default]
    InFamily,
    /// The robot has a lossy, direction-dependent gear; the fitted model
    /// assumes a lossless one.
    OutOfFamilyDte,
}

impl TruthMode {
    /// Model family searched by identification against this robot.
    pub fn fitted_space(self, space: &ParamSpace) -> ParamSpace {
        match self {
            TruthMode::InFamily => space.clone(),
            TruthMode::OutOfFamilyDte => space.without_dte(),
        }
    }
}

impl std::str::FromStr for TruthMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "in-family" => Ok(TruthMode::InFamily),
            "out-of-family-dte" => Ok(TruthMode::OutOfFamilyDte),
            other => Err(format!("unknown ground-truth mode `{other}` (in-family | out-of-family-dte)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthConfig {
    pub mode: TruthMode,
    pub hidden_seed: u64,
    /// Ranges φ* is drawn from, replacing the parameter space's own.
    pub bounds: BTreeMap<String, [f64; 2]>,
}

impl TruthConfig {
    /// Space φ* is drawn from.
    pub fn region(&self, space: &ParamSpace) -> Result<ParamSpace, SysidError> {
        let mut bounds = self.bounds.clone();
        if self.mode == TruthMode::OutOfFamilyDte {
            let eta = bounds.entry("eta_bw".into()).or_insert(DEFAULT_DTE_ETA_BW);
            if eta[1] >= 1.0 {
                return Err(SysidError::InvalidConfig(
                    "an out-of-family ground truth needs a backward efficiency below 1".into(),
                ));
            }
        }
        space.with_bounds(&bounds)
    }
}

pub struct GroundTruth {
    mode: TruthMode,
    phi: SimParams,
    space: ParamSpace,
    chain: ChainModel,
}

impl fmt::Debug for GroundTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroundTruth").field("mode", &self.mode).finish_non_exhaustive()
    }
}

impl GroundTruth {
    pub fn new(cfg: &TruthConfig, space: &ParamSpace, template: &ChainModel) -> Result<Self, SysidError> {
        let region = cfg.region(space)?;
        let mut rng = stream(cfg.hidden_seed, "ground-truth");
        let u: Vec<f64> = (0..region.dim()).map(|_| rng.random::<f64>()).collect();
        let phi = region.denormalize(&u);
        let chain = phi.apply(&region, template)?;
        Ok(Self {
            mode: cfg.mode,
            phi,
            space: region,
            chain,
        })
    }

    pub fn mode(&self) -> TruthMode {
        self.mode
    }

    /// Records the excitation motion on the robot.
    pub fn record_excitation(&self, motion: &ExcitationMotion, sched: SchedulerConfig) -> Result<Trajectory, SysidError> {
        motion.rollout(&self.chain, sched)
    }

    /// Runs `policy` on the robot once per seed.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        &self,
        sched: SchedulerConfig,
        task: &TaskConfig,
        policy: &PolicyParams,
        coeffs: &RewardCoeffs,
        seeds: &[u64],
        exec: &Exec,
    ) -> Result<RewardDistribution, TaskError> {
        evaluate_policy(&self.chain, sched, task, policy, coeffs, seeds, exec)
    }

    /// Audit access to φ* and the space its values are laid out in.
    pub fn reveal(&self) -> (&ParamSpace, &SimParams) {
        (&self.space, &self.phi)
    }
}
