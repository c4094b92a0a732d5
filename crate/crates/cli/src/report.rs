//! Plot-data export over one or more completed run directories.
//!
//! Three CSV families are written: excitation overlays (robot against each
//! identified simulator), reward distributions per stage and system, and
//! normalized identified parameters with across-run mean and spread.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gearsim::sim::{ChainModel, Trajectory};
use gearsim::sysid::excitation_motion;
use gearsim::truth::GroundTruth;

use crate::artifacts::{params_to_map, Stage, REAL_EXCITATION};
use crate::commands::{stored_config, Run};
use crate::{CliError, RunConfig};

pub const EXCITATION_CSV: &str = "report_excitation.csv";
pub const REWARDS_CSV: &str = "report_rewards.csv";
pub const PARAMS_CSV: &str = "report_params.csv";
pub const TRUTH_AUDIT: &str = "truth_audit.json";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub written: Vec<PathBuf>,
    /// Artifacts that were expected but absent, as `run: file`.
    pub missing: Vec<String>,
}

struct Loaded {
    name: String,
    run: Run,
}

fn load(root: &Path, missing: &mut Vec<String>) -> Result<Option<Loaded>, CliError> {
    let name = root
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| root.display().to_string());
    let Some(cfg) = stored_config(root)? else {
        missing.push(format!("{name}: run_config.json"));
        return Ok(None);
    };
    let run = Run::open(RunConfig {
        out: Some(root.to_path_buf()),
        ..cfg
    })?;
    Ok(Some(Loaded { name, run }))
}

fn preamble(runs: &[Loaded], missing: &[String]) -> String {
    let mut s = String::new();
    for r in runs {
        let p = r.run.dir.provenance();
        writeln!(s, "# run: {}\n# config_hash: {}\n# master_seed: {}", r.name, p.config_hash, p.master_seed).unwrap();
    }
    for m in missing {
        writeln!(s, "# missing: {m}").unwrap();
    }
    s
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn data_rows(csv: &str) -> impl Iterator<Item = &str> {
    csv.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).skip(1)
}

fn artifact(e: impl std::fmt::Display) -> CliError {
    CliError::Artifact(e.to_string())
}

/// Writes the three CSV families for `runs` into `out`. With `reveal`, the
/// hidden ground-truth parameters are added to the parameter table and
/// written to an audit file.
pub fn cmd_report(runs: &[PathBuf], out: &Path, reveal: bool) -> Result<ReportOutput, CliError> {
    let mut missing = Vec::new();
    let mut loaded = Vec::new();
    for r in runs {
        if let Some(l) = load(r, &mut missing)? {
            loaded.push(l);
        }
    }
    let template = ChainModel::leg_on_board();

    // (a) excitation overlays
    let mut exc = String::new();
    let mut exc_header = String::from("run,source");
    for Loaded { name, run } in &loaded {
        let cfg = &run.cfg;
        let Ok(real) = run.dir.read_csv(REAL_EXCITATION) else {
            missing.push(format!("{name}: {REAL_EXCITATION}"));
            continue;
        };
        let mut sources = vec![("real".to_string(), real)];
        let motion = excitation_motion(&cfg.excitation, &cfg.scheduler).map_err(artifact)?;
        for stage in [Stage::First, Stage::Re] {
            let Ok(phi) = run.stage_params(stage) else {
                missing.push(format!("{name}: {}", stage.params_file()));
                continue;
            };
            let chain = phi.apply(&cfg.space, &template).map_err(artifact)?;
            let sim: Trajectory = motion.rollout(&chain, cfg.scheduler).map_err(artifact)?;
            sources.push((format!("sim_{}", stage.name()), sim.to_csv()));
        }
        for (source, csv) in &sources {
            if let Some(h) = csv.lines().find(|l| !l.starts_with('#')) {
                exc_header = format!("run,source,{h}");
            }
            for row in data_rows(csv) {
                writeln!(exc, "{name},{source},{row}").unwrap();
            }
        }
    }

    // (b) reward distributions
    let mut rewards = String::from("run,stage,system,seed,return\n");
    for Loaded { name, run } in &loaded {
        for stage in [Stage::First, Stage::Re] {
            for system in ["sim", "real"] {
                let file = stage.rewards_file(system);
                match run.dir.read_csv(&file) {
                    Ok(csv) => {
                        for row in data_rows(&csv) {
                            writeln!(rewards, "{name},{},{system},{row}", stage.name()).unwrap();
                        }
                    }
                    Err(_) => missing.push(format!("{name}: {file}")),
                }
            }
        }
    }

    // (c) normalized parameters, one column per run
    let mut rows: Vec<(&str, Vec<Option<Vec<f64>>>)> = [Stage::First, Stage::Re]
        .into_iter()
        .map(|stage| {
            let per_run = loaded
                .iter()
                .map(|l| l.run.stage_params(stage).ok().map(|phi| l.run.cfg.space.normalize(&phi)))
                .collect();
            (stage.name(), per_run)
        })
        .collect();
    let mut audit = BTreeMap::new();
    if reveal {
        let mut per_run = Vec::new();
        for Loaded { name, run } in &loaded {
            let gt = GroundTruth::new(&run.cfg.truth, &run.cfg.space, &template).map_err(artifact)?;
            let (_, phi) = gt.reveal();
            let p = run.dir.provenance();
            audit.insert(
                name.clone(),
                serde_json::json!({
                    "config_hash": p.config_hash,
                    "master_seed": p.master_seed,
                    "params": params_to_map(&run.cfg.space, phi),
                }),
            );
            per_run.push(Some(run.cfg.space.normalize(phi)));
        }
        rows.push(("truth", per_run));
    }
    let names: Vec<String> = loaded
        .first()
        .map(|l| l.run.cfg.space.params.iter().filter(|p| p.is_free()).map(|p| p.name.clone()).collect())
        .unwrap_or_default();
    let mut params = String::from("stage,param");
    for l in &loaded {
        write!(params, ",{}", l.name).unwrap();
    }
    params.push_str(",mean,std\n");
    for (stage, per_run) in &rows {
        for (k, pname) in names.iter().enumerate() {
            let vals: Vec<Option<f64>> = per_run.iter().map(|v| v.as_ref().and_then(|v| v.get(k).copied())).collect();
            let present: Vec<f64> = vals.iter().flatten().copied().collect();
            if present.is_empty() {
                continue;
            }
            write!(params, "{stage},{pname}").unwrap();
            for v in &vals {
                match v {
                    Some(x) => write!(params, ",{x:?}").unwrap(),
                    None => params.push(','),
                }
            }
            let (m, s) = mean_std(&present);
            writeln!(params, ",{m:?},{s:?}").unwrap();
        }
    }

    let head = preamble(&loaded, &missing);
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<(), CliError> {
        let p = out.join(name);
        std::fs::write(&p, body).map_err(|e| CliError::io(&p, e))?;
        written.push(p);
        Ok(())
    };
    put(EXCITATION_CSV, format!("{head}{exc_header}\n{exc}"))?;
    put(REWARDS_CSV, format!("{head}{rewards}"))?;
    put(PARAMS_CSV, format!("{head}{params}"))?;
    if reveal {
        put(TRUTH_AUDIT, serde_json::to_string_pretty(&audit).expect("audit serializes") + "\n")?;
    }
    Ok(ReportOutput { written, missing })
}
