//! Run-directory files. Every file written here carries the config hash and
//! master seed: CSV files as leading `#` lines, JSON files as top-level
//! fields, JSONL files on every record.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use gearsim::sysid::{ParamSpace, SimParams};

use crate::CliError;

pub const RUN_CONFIG: &str = "run_config.json";
pub const REAL_EXCITATION: &str = "real_excitation.csv";
pub const FIRST_TRIALS: &str = "first_trials.jsonl";
pub const FIRST_PARAMS: &str = "first_params.json";
pub const RE_TRIALS: &str = "re_trials.jsonl";
pub const FRONT: &str = "front.csv";
pub const RE_PARAMS: &str = "re_params.json";
pub const REPORT: &str = "report.json";

/// Which identified parameters a policy was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// After the first identification.
    First,
    /// After re-identification.
    Re,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::First => "first",
            Stage::Re => "re",
        }
    }

    pub fn params_file(self) -> &'static str {
        match self {
            Stage::First => FIRST_PARAMS,
            Stage::Re => RE_PARAMS,
        }
    }

    pub fn policy_file(self) -> String {
        format!("policy_{}.json", self.name())
    }

    pub fn training_file(self) -> String {
        format!("training_{}.csv", self.name())
    }

    pub fn rewards_file(self, system: &str) -> String {
        format!("rewards_{}_{system}.csv", self.name())
    }

    pub fn evaluation_file(self) -> String {
        format!("evaluation_{}.json", self.name())
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "first" => Ok(Stage::First),
            "re" => Ok(Stage::Re),
            other => Err(format!("unknown stage `{other}` (first | re)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
}

impl Provenance {
    pub fn csv_preamble(&self) -> String {
        format!("# config_hash: {}\n# master_seed: {}\n", self.config_hash, self.master_seed)
    }

    /// Reads the preamble back from a CSV file.
    pub fn from_csv(text: &str) -> Option<Self> {
        let mut hash = None;
        let mut seed = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some(v) = line.strip_prefix("# config_hash: ") {
                hash = Some(v.trim().to_string());
            } else if let Some(v) = line.strip_prefix("# master_seed: ") {
                seed = v.trim().parse().ok();
            }
        }
        Some(Self {
            config_hash: hash?,
            master_seed: seed?,
        })
    }
}

/// A JSON body with the provenance fields alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub master_seed: u64,
    #[serde(flatten)]
    pub body: T,
}

/// φ as a name → value map, which keeps files readable and independent of
/// parameter order.
pub fn params_to_map(space: &ParamSpace, phi: &SimParams) -> BTreeMap<String, f64> {
    space.names().into_iter().zip(phi.values.iter().copied()).collect()
}

pub fn params_from_map(space: &ParamSpace, map: &BTreeMap<String, f64>) -> Result<SimParams, CliError> {
    let values = space
        .names()
        .iter()
        .map(|n| map.get(n).copied().ok_or_else(|| CliError::Artifact(format!("parameter `{n}` missing"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimParams { values })
}

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
    prov: Provenance,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>, prov: Provenance) -> Self {
        Self {
            root: root.into(),
            prov,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.root).map_err(|e| CliError::io(&self.root, e))?;
        let p = self.path(name);
        std::fs::write(&p, contents).map_err(|e| CliError::io(&p, e))
    }

    fn read(&self, name: &str) -> Result<String, CliError> {
        let p = self.path(name);
        if !p.is_file() {
            return Err(CliError::Artifact(format!("{} is missing; run the producing command first", p.display())));
        }
        std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))
    }

    fn check(&self, name: &str, found: Option<Provenance>) -> Result<(), CliError> {
        match found {
            Some(p) if p == self.prov => Ok(()),
            Some(p) => Err(CliError::Artifact(format!(
                "{name} was produced by config {} with seed {}, not by this run",
                p.config_hash, p.master_seed
            ))),
            None => Err(CliError::Artifact(format!("{name} carries no provenance"))),
        }
    }

    pub fn write_csv(&self, name: &str, body: &str) -> Result<(), CliError> {
        self.write(name, &format!("{}{body}", self.prov.csv_preamble()))
    }

    pub fn read_csv(&self, name: &str) -> Result<String, CliError> {
        let text = self.read(name)?;
        self.check(name, Provenance::from_csv(&text))?;
        Ok(text)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, body: &T) -> Result<(), CliError> {
        let stamped = Stamped {
            config_hash: self.prov.config_hash.clone(),
            master_seed: self.prov.master_seed,
            body,
        };
        let mut text = serde_json::to_string_pretty(&stamped).expect("artifact serializes");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T, CliError> {
        let text = self.read(name)?;
        let stamped: Stamped<T> =
            serde_json::from_str(&text).map_err(|e| CliError::Artifact(format!("{name}: {e}")))?;
        self.check(
            name,
            Some(Provenance {
                config_hash: stamped.config_hash,
                master_seed: stamped.master_seed,
            }),
        )?;
        Ok(stamped.body)
    }

    /// One stamped JSON object per line.
    pub fn write_jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut text = String::new();
        for body in rows {
            let stamped = Stamped {
                config_hash: self.prov.config_hash.clone(),
                master_seed: self.prov.master_seed,
                body,
            };
            text.push_str(&serde_json::to_string(&stamped).expect("artifact serializes"));
            text.push('\n');
        }
        self.write(name, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config_hash: "ab12".into(),
            master_seed: 5,
        }
    }

    #[test]
    fn files_carry_and_check_provenance() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = RunDir::new(tmp.path().join("run"), prov());
        dir.write_csv("a.csv", "x,y\n1,2\n").unwrap();
        let text = dir.read_csv("a.csv").unwrap();
        assert!(text.starts_with("# config_hash: ab12\n# master_seed: 5\nx,y\n"));

        dir.write_json("b.json", &BTreeMap::from([("k".to_string(), 1.5)])).unwrap();
        let back: BTreeMap<String, serde_json::Value> = dir.read_json("b.json").unwrap();
        assert_eq!(back["k"], 1.5);

        dir.write_jsonl("c.jsonl", &[BTreeMap::from([("i", 1)]), BTreeMap::from([("i", 2)])]).unwrap();
        let lines = std::fs::read_to_string(dir.path("c.jsonl")).unwrap();
        assert_eq!(lines.lines().count(), 2);
        assert!(lines.lines().all(|l| l.contains("\"config_hash\":\"ab12\"") && l.contains("\"master_seed\":5")));

        let other = RunDir::new(dir.root(), Provenance { master_seed: 6, ..prov() });
        assert!(other.read_csv("a.csv").is_err());
        assert!(other.read_json::<serde_json::Value>("b.json").is_err());
        assert!(dir.read_csv("missing.csv").is_err());
    }

    #[test]
    fn params_map_round_trip() {
        let space = ParamSpace::default();
        let phi = space.denormalize(&[0.25; 10]);
        let map = params_to_map(&space, &phi);
        assert_eq!(map.len(), 11);
        assert_eq!(params_from_map(&space, &map).unwrap(), phi);
        let mut short = map.clone();
        short.remove("kt");
        assert!(params_from_map(&space, &short).is_err());
    }
}
