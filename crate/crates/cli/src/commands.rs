//! Subcommands. Each reads its inputs from the run directory and writes its
//! outputs there; [`Run::pipeline`] chains them and writes the report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use gearsim::exec::Exec;
use gearsim::rng::{child_seed, derive_seed};
use gearsim::sim::{ChainModel, Trajectory};
use gearsim::sysid::{
    excitation_motion, identify_first, reidentify, select_operating_point, wasserstein_1d, ExcitationMotion,
    SimParams,
};
use gearsim::task::{
    evaluate_policy, train_policy, transfer_success, PolicyParams, PolicyRewards, RewardDistribution,
};
use gearsim::truth::{GroundTruth, TruthMode};

use crate::artifacts::*;
use crate::{CliError, RunConfig};

/// Best trials of the first identification seeding re-identification.
const WARM_START: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstParams {
    pub l_exc: f64,
    pub trials: usize,
    pub failed_trials: usize,
    pub params: BTreeMap<String, f64>,
    /// Best distinct trials, best first.
    pub warm_start: Vec<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReParams {
    pub trials: usize,
    pub front_size: usize,
    /// Smallest excitation loss on the front; members within twice this
    /// value compete on W.
    pub l_exc_ref: f64,
    pub l_exc: f64,
    pub w: f64,
    pub params: BTreeMap<String, f64>,
}

/// A policy's return distribution in simulation (expected) and on the
/// robot (actual) over the same episode seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub stage: Stage,
    pub seeds: Vec<u64>,
    pub expected: Vec<f64>,
    pub actual: Vec<f64>,
    pub expected_mean: f64,
    pub actual_mean: f64,
    pub ratio: f64,
    pub w: f64,
    pub transfer_success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase3 {
    pub reidentification: ReParams,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub ground_truth_mode: TruthMode,
    pub episodes: usize,
    pub phase1: FirstParams,
    pub phase2: Evaluation,
    pub phase3: Phase3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ConfigFile {
    config: RunConfig,
}

/// Reads the configuration stored in a run directory.
pub fn stored_config(dir: &std::path::Path) -> Result<Option<RunConfig>, CliError> {
    let p = dir.join(RUN_CONFIG);
    if !p.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
    let file: Stamped<ConfigFile> =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    Ok(Some(file.body.config))
}

pub struct Run {
    pub cfg: RunConfig,
    pub dir: RunDir,
    exec: Exec,
    template: ChainModel,
}

impl Run {
    /// Validates `cfg` and binds it to its output directory (default `run`).
    /// Nothing is written when validation fails, and a directory holding a
    /// different configuration is refused.
    pub fn open(cfg: RunConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let root = cfg.out.clone().unwrap_or_else(|| PathBuf::from("run"));
        let prov = Provenance {
            config_hash: cfg.hash(),
            master_seed: cfg.master_seed,
        };
        let dir = RunDir::new(root, prov);
        match stored_config(dir.root())? {
            Some(old) if old.hash() != cfg.hash() => {
                return Err(CliError::Config(format!(
                    "{} already holds a run with config {} and seed {}",
                    dir.root().display(),
                    old.hash(),
                    old.master_seed
                )))
            }
            Some(_) => {}
            None => dir.write_json(RUN_CONFIG, &ConfigFile { config: cfg.clone() })?,
        }
        Ok(Self {
            exec: Exec::new(cfg.jobs),
            cfg,
            dir,
            template: ChainModel::leg_on_board(),
        })
    }

    fn seed(&self, name: &str) -> u64 {
        derive_seed(self.cfg.master_seed, name)
    }

    fn truth(&self) -> Result<GroundTruth, CliError> {
        GroundTruth::new(&self.cfg.truth, &self.cfg.space, &self.template).map_err(|e| CliError::Config(e.to_string()))
    }

    fn motion(&self) -> Result<ExcitationMotion, CliError> {
        excitation_motion(&self.cfg.excitation, &self.cfg.scheduler).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Episode seeds shared by every reward distribution of the run; each
    /// also seeds that episode's board wave.
    pub fn evaluation_seeds(&self) -> Vec<u64> {
        let root = self.seed("evaluation");
        (0..self.cfg.episodes as u64).map(|k| child_seed(root, k)).collect()
    }

    fn chain(&self, phi: &SimParams) -> Result<ChainModel, CliError> {
        phi.apply(&self.cfg.space, &self.template).map_err(|e| CliError::Artifact(e.to_string()))
    }

    pub fn stage_params(&self, stage: Stage) -> Result<SimParams, CliError> {
        let map = match stage {
            Stage::First => self.dir.read_json::<FirstParams>(FIRST_PARAMS)?.params,
            Stage::Re => self.dir.read_json::<ReParams>(RE_PARAMS)?.params,
        };
        params_from_map(&self.cfg.space, &map)
    }

    fn real_excitation(&self) -> Result<Trajectory, CliError> {
        Trajectory::from_csv(&self.dir.read_csv(REAL_EXCITATION)?).map_err(|e| CliError::Artifact(e.to_string()))
    }

    /// Records the excitation motion on the ground truth.
    pub fn gen_real(&self) -> Result<(), CliError> {
        let real = self
            .truth()?
            .record_excitation(&self.motion()?, self.cfg.scheduler)
            .map_err(|e| CliError::Artifact(e.to_string()))?;
        self.dir.write_csv(REAL_EXCITATION, &real.to_csv())
    }

    /// First identification against the recorded excitation.
    pub fn identify(&self) -> Result<FirstParams, CliError> {
        let real = self.real_excitation()?;
        let space = self.cfg.first_space().map_err(|e| CliError::Config(e.to_string()))?;
        let id = identify_first(
            &space,
            &self.template,
            self.cfg.scheduler,
            &self.motion()?,
            &real,
            &self.cfg.identify,
            self.seed("identify"),
            &self.exec,
        )
        .map_err(|e| CliError::Artifact(e.to_string()))?;
        self.dir.write_jsonl(FIRST_TRIALS, &id.trials)?;

        let mut ranked: Vec<_> = id.trials.iter().filter(|t| t.primary().is_finite()).collect();
        ranked.sort_by(|a, b| a.primary().total_cmp(&b.primary()).then(a.trial.cmp(&b.trial)));
        ranked.dedup_by(|a, b| a.params == b.params);
        let out = FirstParams {
            l_exc: id.best_loss,
            trials: id.trials.len(),
            failed_trials: id.trials.iter().filter(|t| t.failed).count(),
            params: params_to_map(&self.cfg.space, &id.best),
            warm_start: ranked
                .iter()
                .take(WARM_START)
                .map(|t| params_to_map(&self.cfg.space, &t.params))
                .collect(),
        };
        self.dir.write_json(FIRST_PARAMS, &out)?;
        Ok(out)
    }

    /// Trains a policy on the stage's identified simulator.
    pub fn train(&self, stage: Stage) -> Result<PolicyParams, CliError> {
        let chain = self.chain(&self.stage_params(stage)?)?;
        let init = PolicyParams::zeros(self.cfg.task.nominal.clone());
        let seed = self.seed(&format!("train-{}", stage.name()));
        let tr = train_policy(
            &chain,
            self.cfg.scheduler,
            &self.cfg.task,
            &self.cfg.rewards.balancing,
            &init,
            &self.cfg.cem,
            seed,
            &self.exec,
        )
        .map_err(|e| CliError::Artifact(e.to_string()))?;
        let mut curve = String::from("iteration,validation_return,population_mean\n");
        for (i, (v, m)) in tr.curve.iter().zip(&tr.population_mean).enumerate() {
            writeln!(curve, "{i},{v:?},{m:?}").unwrap();
        }
        self.dir.write_csv(&stage.training_file(), &curve)?;
        self.dir.write_json(&stage.policy_file(), &tr.policy)?;
        Ok(tr.policy)
    }

    /// Expected (simulated) against actual (robot) returns of the stage's
    /// policy.
    pub fn evaluate(&self, stage: Stage) -> Result<Evaluation, CliError> {
        let chain = self.chain(&self.stage_params(stage)?)?;
        let policy: PolicyParams = self.dir.read_json(&stage.policy_file())?;
        policy.validate().map_err(|e| CliError::Artifact(e.to_string()))?;
        let seeds = self.evaluation_seeds();
        let (sched, task, coeffs) = (self.cfg.scheduler, &self.cfg.task, &self.cfg.rewards.eval);
        let task_err = |e: gearsim::task::TaskError| CliError::Artifact(e.to_string());
        let expected = evaluate_policy(&chain, sched, task, &policy, coeffs, &seeds, &self.exec).map_err(task_err)?;
        let actual = self.truth()?.evaluate(sched, task, &policy, coeffs, &seeds, &self.exec).map_err(task_err)?;
        self.dir.write_csv(&stage.rewards_file("sim"), &expected.to_csv())?;
        self.dir.write_csv(&stage.rewards_file("real"), &actual.to_csv())?;
        let w = wasserstein_1d(&expected.returns, &actual.returns).map_err(|e| CliError::Artifact(e.to_string()))?;
        let ev = Evaluation {
            stage,
            seeds,
            expected_mean: expected.mean(),
            actual_mean: actual.mean(),
            ratio: actual.mean() / expected.mean(),
            w,
            transfer_success: transfer_success(&expected.returns, &actual.returns).map_err(task_err)?,
            expected: expected.returns,
            actual: actual.returns,
        };
        self.dir.write_json(&stage.evaluation_file(), &ev)?;
        Ok(ev)
    }

    /// Re-identification against the excitation and the first policy's
    /// returns on the robot.
    pub fn reidentify(&self) -> Result<ReParams, CliError> {
        let real = self.real_excitation()?;
        let first: FirstParams = self.dir.read_json(FIRST_PARAMS)?;
        let policy: PolicyParams = self.dir.read_json(&Stage::First.policy_file())?;
        let r_real = RewardDistribution::from_csv(&self.dir.read_csv(&Stage::First.rewards_file("real"))?)
            .map_err(|e| CliError::Artifact(e.to_string()))?;
        let evaluator = PolicyRewards {
            policy,
            task: self.cfg.task.clone(),
            coeffs: self.cfg.rewards.eval,
            sched: self.cfg.scheduler,
            seeds: r_real.seeds.clone(),
        };
        let warm = first
            .warm_start
            .iter()
            .map(|m| params_from_map(&self.cfg.space, m))
            .collect::<Result<Vec<_>, _>>()?;
        let re = reidentify(
            &self.cfg.fitted_space(),
            &self.template,
            self.cfg.scheduler,
            &self.motion()?,
            &real,
            &r_real.returns,
            &evaluator,
            &warm,
            &self.cfg.reidentify,
            self.seed("reidentify"),
            &self.exec,
        )
        .map_err(|e| CliError::Artifact(e.to_string()))?;
        self.dir.write_jsonl(RE_TRIALS, &re.trials)?;
        self.dir.write_csv(FRONT, &re.front.to_csv())?;
        let l_ref = re.front.members.iter().map(|m| m.l_exc).fold(f64::INFINITY, f64::min);
        let op = select_operating_point(&re.front, l_ref).map_err(|e| CliError::Artifact(e.to_string()))?;
        let out = ReParams {
            trials: re.trials.len(),
            front_size: re.front.members.len(),
            l_exc_ref: l_ref,
            l_exc: op.l_exc,
            w: op.w,
            params: params_to_map(&self.cfg.space, &op.params),
        };
        self.dir.write_json(RE_PARAMS, &out)?;
        Ok(out)
    }

    /// All three phases, then the report.
    pub fn pipeline(&self) -> Result<Report, CliError> {
        self.gen_real().map_err(|e| e.in_phase("phase 1 (gen-real)"))?;
        let phase1 = self.identify().map_err(|e| e.in_phase("phase 1 (identify)"))?;
        self.train(Stage::First).map_err(|e| e.in_phase("phase 2 (train)"))?;
        let phase2 = self.evaluate(Stage::First).map_err(|e| e.in_phase("phase 2 (evaluate)"))?;
        let re = self.reidentify().map_err(|e| e.in_phase("phase 3 (reidentify)"))?;
        self.train(Stage::Re).map_err(|e| e.in_phase("phase 3 (train)"))?;
        let ev = self.evaluate(Stage::Re).map_err(|e| e.in_phase("phase 3 (evaluate)"))?;
        let report = Report {
            ground_truth_mode: self.cfg.truth.mode,
            episodes: self.cfg.episodes,
            phase1,
            phase2,
            phase3: Phase3 {
                reidentification: re,
                evaluation: ev,
            },
        };
        self.dir.write_json(REPORT, &report)?;
        Ok(report)
    }
}
