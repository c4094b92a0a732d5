use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "episodes": 4,
  "identify": {"budget": 16},
  "reidentify": {"budget": 20, "nsga": {"population": 10}},
  "cem": {"budget": 64, "population": 8}
}"#;

fn gearsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gearsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("bad.json"), r#"{"identify": {"budget": 0}}"#).unwrap();
    std::fs::write(d.join("typo.json"), r#"{"episodez": 3}"#).unwrap();
    for cfg in ["bad.json", "typo.json", "absent.json"] {
        let out = gearsim(d, &["--config", cfg, "--out", "r", "pipeline"]);
        assert_eq!(out.status.code(), Some(2), "{cfg}: {}", stderr(&out));
        assert!(stderr(&out).contains("configuration error"));
        assert!(!d.join("r").exists());
    }
    let out = gearsim(d, &["--jobs", "0", "--out", "r", "gen-real"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("r").exists());
}

#[test]
fn subcommands_chain_through_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("small.json"), SMALL).unwrap();

    let out = gearsim(d, &["--config", "small.json", "identify"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("real_excitation.csv is missing"), "{}", stderr(&out));

    // Later steps read the stored config from the default `run` directory.
    for args in [
        &["gen-real"][..],
        &["identify"],
        &["train"],
        &["evaluate"],
        &["reidentify"],
        &["train", "--stage", "re"],
        &["evaluate", "--stage", "re", "--jobs", "3"],
    ] {
        ok(&gearsim(d, args));
    }
    let run = d.join("run");
    for f in [
        "run_config.json",
        "real_excitation.csv",
        "first_trials.jsonl",
        "first_params.json",
        "policy_first.json",
        "training_first.csv",
        "rewards_first_sim.csv",
        "rewards_first_real.csv",
        "evaluation_first.json",
        "re_trials.jsonl",
        "front.csv",
        "re_params.json",
        "policy_re.json",
        "evaluation_re.json",
    ] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(run.join("front.csv")).unwrap();
    assert!(csv.starts_with("# config_hash: "));
    assert!(csv.lines().nth(1).unwrap().starts_with("# master_seed: 0"));
    let trials = std::fs::read_to_string(run.join("first_trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 16);
    let ev: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("evaluation_re.json")).unwrap()).unwrap();
    assert_eq!(ev["expected"].as_array().unwrap().len(), 4);
    assert_eq!(ev["stage"], "re");

    // A different configuration may not reuse the directory.
    let out = gearsim(d, &["--seed", "5", "gen-real"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("already holds a run"));
}

#[test]
fn report_exports_three_families() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("small.json"), SMALL).unwrap();
    for (seed, out) in [("1", "a"), ("2", "b")] {
        ok(&gearsim(d, &["--config", "small.json", "--seed", seed, "--out", out, "pipeline"]));
    }
    ok(&gearsim(d, &["--out", "c", "--config", "small.json", "gen-real"]));

    ok(&gearsim(d, &["--out", "rep", "report", "a", "b", "c", "nowhere"]));
    let read = |f: &str| std::fs::read_to_string(d.join("rep").join(f)).unwrap();
    let params = read("report_params.csv");
    assert!(params.contains("# run: a\n"));
    assert!(params.contains("# missing: nowhere: run_config.json"));
    assert!(params.contains("# missing: c: first_params.json"));
    let header = params.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "stage,param,a,b,c,mean,std");
    let row = params.lines().find(|l| l.starts_with("first,kt,")).unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells.len(), 7);
    assert_eq!(cells[4], "");
    let (a, b): (f64, f64) = (cells[2].parse().unwrap(), cells[3].parse().unwrap());
    let mean: f64 = cells[5].parse().unwrap();
    assert!((mean - 0.5 * (a + b)).abs() < 1e-12);
    assert!(!params.contains("truth,"));
    assert!(!d.join("rep/truth_audit.json").exists());

    let rewards = read("report_rewards.csv");
    let data: Vec<&str> = rewards.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "run,stage,system,seed,return");
    // two runs × two stages × two systems × four episodes
    assert_eq!(data.len() - 1, 32);

    let exc = read("report_excitation.csv");
    for src in ["a,real,", "a,sim_first,", "a,sim_re,", "c,real,"] {
        assert!(exc.contains(src), "{src}");
    }
    assert!(!exc.contains("c,sim_first,"));

    ok(&gearsim(d, &["--out", "rep2", "report", "a", "--reveal"]));
    let params = std::fs::read_to_string(d.join("rep2/report_params.csv")).unwrap();
    assert!(params.lines().any(|l| l.starts_with("truth,kt,")));
    let audit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("rep2/truth_audit.json")).unwrap()).unwrap();
    assert_eq!(audit["a"]["master_seed"], 1);
    assert!(audit["a"]["params"]["kt"].as_f64().unwrap() > 0.0);
}
