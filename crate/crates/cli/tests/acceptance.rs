//! End-to-end acceptance checks A1–A9. Prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use itertools::Itertools;
use rand::Rng as _;

use gearsim::actuator::{brake_torque, ActuatorCommand, FrictionParams, MotorParams};
use gearsim::exec::Exec;
use gearsim::rng::{derive_seed, from_seed, Rng};
use gearsim::sim::{mechanical_energy, BaseKinematics, ChainModel, FlatBase, SchedulerConfig, SimState, Simulator};
use gearsim::sysid::nsga2::hypervolume_2d;
use gearsim::sysid::tpe::suggest_unit;
use gearsim::sysid::{
    excitation_motion, identify_first, nsga2_evolve, wasserstein_1d, ExcitationConfig, IdentifyConfig, Individual,
    Nsga2Config, ParamSpace, TpeConfig,
};
use gearsim::task::{reward_step, StepObservation};
use gearsim::truth::{GroundTruth, TruthConfig, TruthMode};
use gearsim_cli::RunConfig;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// ---------------------------------------------------------------- A1, A2

/// Brake torque by explicit sign cases, and whether the gear is locked.
fn brake_oracle(tm: f64, ta: f64, ef: f64, eb: f64) -> (f64, bool) {
    let forward = if tm > 0.0 {
        ef * tm + ta > 0.0
    } else if tm < 0.0 {
        ef * tm + ta < 0.0
    } else {
        false
    };
    let backward = if ta > 0.0 {
        tm + eb * ta > 0.0
    } else if ta < 0.0 {
        tm + eb * ta < 0.0
    } else {
        false
    };
    if forward {
        (-((1.0 - ef) * tm), false)
    } else if backward {
        (-((1.0 - eb) * ta), false)
    } else {
        (-(tm + ta), true)
    }
}

/// Random torques and efficiencies with a share of zeros, unit efficiencies
/// and exact case boundaries.
fn brake_samples(n: usize) -> Vec<[f64; 4]> {
    let mut rng = from_seed(derive_seed(1, "brake-samples"));
    (0..n)
        .map(|_| {
            let ef = if rng.random_bool(0.1) { 1.0 } else { rng.random_range(0.3..=1.0) };
            let eb = if rng.random_bool(0.1) { 1.0 } else { rng.random_range(0.3..=1.0) };
            let tm = if rng.random_bool(0.05) { 0.0 } else { rng.random_range(-5.0..5.0) };
            let ta = match rng.random_range(0..10) {
                0 => 0.0,
                1 => -ef * tm,
                2 => -tm / eb,
                3 => -tm,
                _ => rng.random_range(-5.0..5.0),
            };
            [tm, ta, ef, eb]
        })
        .collect()
}

fn a1() -> Outcome {
    let samples = brake_samples(100_000);
    let t = Instant::now();
    let mut mismatches = 0;
    let mut unbalanced = 0;
    let mut locked = 0;
    for &[tm, ta, ef, eb] in &samples {
        let b = brake_torque(tm, ta, ef, eb).map_err(|e| e.to_string())?;
        let (want, is_locked) = brake_oracle(tm, ta, ef, eb);
        if b.to_bits() != want.to_bits() {
            mismatches += 1;
        }
        if is_locked {
            locked += 1;
            if tm + ta + b != 0.0 {
                unbalanced += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        mismatches == 0 && unbalanced == 0 && secs < 1.0,
        format!("{} samples bit-exact, {locked} locked cases balance exactly, {secs:.3} s", samples.len()),
        format!("{mismatches} mismatches, {unbalanced} unbalanced locked cases, {secs:.3} s"),
    )
}

fn a2() -> Outcome {
    let samples = brake_samples(100_000);
    let mut nonzero = 0;
    for &[tm, ta, _, _] in &samples {
        if brake_torque(tm, ta, 1.0, 1.0).map_err(|e| e.to_string())? != 0.0 {
            nonzero += 1;
        }
    }
    check(
        nonzero == 0,
        format!("brake torque is zero on all {} samples", samples.len()),
        format!("{nonzero} samples with nonzero brake torque"),
    )
}

// -------------------------------------------------------------------- A3

fn a3() -> Outcome {
    let motor = MotorParams {
        kt: 0.005,
        r_ter: 5.0,
        armature: 0.004,
        v_battery: 12.0,
    };
    let mut act = ChainModel::leg_on_board().joints[0].actuator;
    act.motor = motor;
    act.gear.eta_bw = 1.0;
    act.friction = FrictionParams::frictionless();

    // passive frictionless pendulum
    let pend = ChainModel::single_pendulum(0.5, 0.3, 0.002, act);
    let sched = SchedulerConfig {
        latency: 0.0,
        ..Default::default()
    };
    let init = SimState::at_rest(vec![std::f64::consts::PI - 1.0]);
    let mut sim = Simulator::new(&pend, sched, init.clone(), &FlatBase).map_err(|e| e.to_string())?;
    let energy = |q: &[f64], qd: &[f64]| mechanical_energy(&pend, q, qd, BaseKinematics::default());
    let e0 = energy(&init.q, &init.qdot);
    let swing = e0 - energy(&[std::f64::consts::PI], &[0.0]);
    let mut drift: f64 = 0.0;
    for _ in 0..10_000 {
        sim.step(&FlatBase).map_err(|e| e.to_string())?;
        let s = sim.state();
        drift = drift.max(((energy(&s.q, &s.qdot) - e0) / swing).abs());
    }

    // a stiff command far from rest drives the battery into saturation
    let leg = ChainModel::leg_on_board();
    let mut sim = Simulator::new(&leg, SchedulerConfig::default(), SimState::at_rest(vec![0.6, -0.6]), &FlatBase)
        .map_err(|e| e.to_string())?;
    sim.set_commands(&[ActuatorCommand::clamped(2.0, 6.0), ActuatorCommand::clamped(-2.0, 6.0)]);
    let mut over = 0;
    for _ in 0..250 {
        sim.advance_pd_period(&FlatBase).map_err(|e| e.to_string())?;
        let v = leg.joints.iter().zip(sim.voltages());
        over += v.filter(|(j, v)| v.abs() > j.actuator.motor.v_battery).count();
    }
    let saturated = sim.peak_voltage_ratio() == 1.0;

    let r_ter = 12.0 / 2.3;
    let stall = MotorParams { r_ter, ..motor }.stall_current();
    let space = ParamSpace::default();
    let r = &space.params[space.index_of("r_ter").unwrap()];
    let stall_ok = (stall - 2.3).abs() < 1e-12 && (r_ter - 5.22).abs() < 0.005 && (r.lower..=r.upper).contains(&r_ter);

    check(
        drift < 0.01 && over == 0 && saturated && stall_ok,
        format!(
            "energy drift {:.4}%, |v_pwm| ≤ v_battery with saturation reached, stall r_ter {r_ter:.3} Ω in [{}, {}]",
            100.0 * drift,
            r.lower,
            r.upper
        ),
        format!("drift {drift:.5}, {over} over-voltage steps, saturated {saturated}, stall ok {stall_ok}"),
    )
}

// ------------------------------------------------------------ A4, A5, A9

fn gearsim(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gearsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("gearsim {args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn read_report(dir: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(dir.join("report.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn a4() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/in_family_gap.json");
    let mut lines = Vec::new();
    let mut passed = 0;
    for seed in 1..=3u64 {
        let out = format!("seed{seed}");
        gearsim(tmp.path(), &["--config", cfg, "--seed", &seed.to_string(), "--out", &out, "pipeline"])?;
        let r = read_report(&tmp.path().join(&out))?;
        let p2 = r["phase2"]["ratio"].as_f64().unwrap_or(f64::NAN);
        let p3 = &r["phase3"]["evaluation"];
        let ok = p2 < 0.5 && p3["transfer_success"] == true;
        passed += ok as usize;
        lines.push(format!(
            "seed {seed}: phase 2 {:.2}, phase 3 {:.2}",
            p2,
            p3["ratio"].as_f64().unwrap_or(f64::NAN)
        ));
    }
    check(
        passed == 3,
        format!("3/3 seeds ({})", lines.join("; ")),
        format!("{passed}/3 seeds ({})", lines.join("; ")),
    )
}

fn a5() -> Outcome {
    let space = ParamSpace::default();
    let template = ChainModel::leg_on_board();
    let sched = SchedulerConfig::default();
    let motion = excitation_motion(&ExcitationConfig::default(), &sched).map_err(|e| e.to_string())?;
    let id = IdentifyConfig::default();
    let exec = Exec::new(1);
    let mut ratios = Vec::new();
    for hidden_seed in 1..=3 {
        let cfg = TruthConfig {
            mode: TruthMode::OutOfFamilyDte,
            hidden_seed,
            ..Default::default()
        };
        let gt = GroundTruth::new(&cfg, &space, &template).map_err(|e| e.to_string())?;
        let real = gt.record_excitation(&motion, sched).map_err(|e| e.to_string())?;
        let seed = derive_seed(hidden_seed, "identify");
        let fit = |s: &ParamSpace| {
            identify_first(s, &template, sched, &motion, &real, &id, seed, &exec)
                .map(|r| r.best_loss)
                .map_err(|e| e.to_string())
        };
        let full = fit(&space)?;
        let lossless = fit(&TruthMode::OutOfFamilyDte.fitted_space(&space))?;
        ratios.push(lossless / full);
    }
    let shown = ratios.iter().map(|r| format!("{r:.2}")).join(", ");
    check(
        ratios.iter().all(|&r| r >= 1.2),
        format!("lossless-gear residual / full residual = {shown} at budget {}", id.budget),
        format!("residual ratios {shown} (need ≥ 1.2)"),
    )
}

fn a9() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("small.json");
    std::fs::write(
        &cfg,
        r#"{"master_seed": 7, "episodes": 4, "identify": {"budget": 24},
            "reidentify": {"budget": 40, "nsga": {"population": 10}},
            "cem": {"budget": 96, "population": 8}}"#,
    )
    .map_err(|e| e.to_string())?;
    let cfg = cfg.to_string_lossy().into_owned();
    for (out, jobs) in [("a", "1"), ("b", "1"), ("c", "8")] {
        gearsim(tmp.path(), &["--config", &cfg, "--jobs", jobs, "--out", out, "pipeline"])?;
    }
    let files: Vec<String> = std::fs::read_dir(tmp.path().join("a"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|f| f != "run_config.json")
        .sorted()
        .collect();
    // Trial logs record each trial's wall-clock time; everything else must
    // match byte for byte.
    let content = |dir: &str, f: &str| -> Option<String> {
        let text = std::fs::read_to_string(tmp.path().join(dir).join(f)).ok()?;
        if !f.ends_with(".jsonl") {
            return Some(text);
        }
        let mut lines = Vec::new();
        for l in text.lines() {
            let mut v: serde_json::Value = serde_json::from_str(l).ok()?;
            v.as_object_mut()?.remove("wall_time");
            lines.push(v.to_string());
        }
        Some(lines.join("\n"))
    };
    let mut differing = Vec::new();
    for f in &files {
        let a = content("a", f);
        for other in ["b", "c"] {
            if a.is_none() || content(other, f) != a {
                differing.push(format!("{other}/{f}"));
            }
        }
    }
    check(
        differing.is_empty() && files.iter().any(|f| f == "report.json"),
        format!("report.json and {} other artifacts identical on rerun and with --jobs 8", files.len() - 1),
        format!("differing: {}", differing.join(", ")),
    )
}

// -------------------------------------------------------------------- A6

/// Minimum mean absolute difference over all pairings.
fn w1_brute(a: &[f64], b: &[f64]) -> f64 {
    (0..b.len())
        .permutations(b.len())
        .map(|p| a.iter().zip(&p).map(|(x, &j)| (x - b[j]).abs()).sum::<f64>() / a.len() as f64)
        .fold(f64::INFINITY, f64::min)
}

fn sample(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()
}

fn a6() -> Outcome {
    let mut rng = from_seed(derive_seed(6, "wasserstein"));
    let mut worst_exact: f64 = 0.0;
    let mut worst_prop: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let (a, b, c) = (sample(&mut rng, n), sample(&mut rng, n), sample(&mut rng, n));
        let w = |x: &[f64], y: &[f64]| wasserstein_1d(x, y).unwrap();
        worst_exact = worst_exact.max((w(&a, &b) - w1_brute(&a, &b)).abs());
        worst_prop = worst_prop
            .max(w(&a, &a).abs())
            .max((w(&a, &b) - w(&b, &a)).abs())
            .max(w(&a, &c) - w(&a, &b) - w(&b, &c));
    }
    check(
        worst_exact <= 1e-12 && worst_prop <= 1e-9,
        format!("1000 instances: max error {worst_exact:.1e} against brute force, properties within {worst_prop:.1e}"),
        format!("max error {worst_exact:.3e}, property violation {worst_prop:.3e}"),
    )
}

// -------------------------------------------------------------------- A7

fn zdt1(x: &[f64]) -> Vec<f64> {
    let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (x.len() - 1) as f64;
    vec![x[0], g * (1.0 - (x[0] / g).sqrt())]
}

fn zdt1_hypervolume(seed: u64) -> f64 {
    let cfg = Nsga2Config::default();
    let mut rng = from_seed(derive_seed(seed, "zdt1"));
    let mut pop: Vec<Individual> = (0..cfg.population)
        .map(|_| {
            let x: Vec<f64> = (0..10).map(|_| rng.random()).collect();
            Individual { f: zdt1(&x), x }
        })
        .collect();
    for _ in 1..60 {
        pop = nsga2_evolve(pop, &cfg, &mut rng, |kids| kids.iter().map(|k| zdt1(k)).collect());
    }
    let pts: Vec<[f64; 2]> = pop.iter().map(|p| [p.f[0], p.f[1]]).collect();
    hypervolume_2d(&pts, [1.1, 1.1])
}

fn quadratic(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, v)| (v - 0.15 - 0.15 * i as f64).powi(2)).sum()
}

fn tpe_best(seed: u64, budget: usize) -> f64 {
    let cfg = TpeConfig::default();
    let mut rng = from_seed(derive_seed(seed, "tpe"));
    let mut hist: Vec<(Vec<f64>, f64)> = Vec::new();
    for _ in 0..budget {
        let x = suggest_unit(&hist, 5, cfg.startup_trials(budget), &cfg, &mut rng);
        let f = quadratic(&x);
        hist.push((x, f));
    }
    hist.iter().map(|h| h.1).fold(f64::INFINITY, f64::min)
}

fn random_best(seed: u64, budget: usize) -> f64 {
    let mut rng = from_seed(derive_seed(seed, "random"));
    (0..budget)
        .map(|_| quadratic(&(0..5).map(|_| rng.random()).collect::<Vec<f64>>()))
        .fold(f64::INFINITY, f64::min)
}

fn a7() -> Outcome {
    let front: Vec<[f64; 2]> = (0..=10_000)
        .map(|i| {
            let f1 = i as f64 / 10_000.0;
            [f1, 1.0 - f1.sqrt()]
        })
        .collect();
    let reference = hypervolume_2d(&front, [1.1, 1.1]);
    let hv = median((0..10).map(zdt1_hypervolume).collect()) / reference;
    let tpe = median((0..20).map(|s| tpe_best(s, 200)).collect());
    let random = median((0..20).map(|s| random_best(s, 200)).collect());
    check(
        hv >= 0.9 && tpe < random,
        format!("ZDT1 median hypervolume {:.1}% of reference; 5-D median best TPE {tpe:.2e} < random {random:.2e}", 100.0 * hv),
        format!("hypervolume {:.1}%, TPE {tpe:.3e}, random {random:.3e}", 100.0 * hv),
    )
}

// -------------------------------------------------------------------- A8

fn a8() -> Outcome {
    let cfg = RunConfig::from_json(
        r#"{"rewards": {
            "balancing": {"k_bipedal": 0.0, "k_cmd": 0.6, "k_smooth": 0.1, "k_xd": 2.0, "k_yd": 2.0},
            "walking":   {"k_bipedal": 0.4, "k_cmd": 0.3, "k_smooth": 0.1, "k_xd": 15.0, "k_yd": 1.0},
            "eval":      {"k_bipedal": 0.0, "k_cmd": 0.6, "k_smooth": 0.1, "k_xd": 2.0, "k_yd": 2.0}
        }}"#,
    )
    .map_err(|e| e.to_string())?;
    let perfect = StepObservation {
        current: vec![0.0, 0.0],
        prev_action: vec![0.6, -0.6],
        action: vec![0.6, -0.6],
        ..Default::default()
    };
    let r1 = reward_step(&perfect, &cfg.rewards.balancing, &cfg.task);
    let slow = StepObservation { xdot: 0.3, ..perfect };
    let r2 = reward_step(&slow, &cfg.rewards.balancing, &cfg.task);
    let want = 1.0 - 0.6 * (1.0 - (-2.0f64 * 0.3).exp());
    check(
        (r1 - 1.0).abs() <= 1e-9 && (r2 - want).abs() <= 1e-9 && (want - 0.7293).abs() < 5e-5,
        format!("perfect step {r1}, velocity error 0.3 gives {r2:.10}"),
        format!("perfect step {r1}, velocity error {r2} (want {want})"),
    )
}

fn main() {
    let checks: [(&str, &str, fn() -> Outcome); 9] = [
        ("A1", "brake-torque oracle parity", a1),
        ("A2", "lossless gear", a2),
        ("A3", "physics sanity", a3),
        ("A4", "in-family pipeline transfer", a4),
        ("A5", "lossless-gear ablation", a5),
        ("A6", "Wasserstein correctness", a6),
        ("A7", "optimizer sanity", a7),
        ("A8", "reward function", a8),
        ("A9", "determinism", a9),
    ];
    // Optional criterion IDs on the command line restrict the run.
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, f) in checks {
        if !only.is_empty() && !only.iter().any(|o| o.eq_ignore_ascii_case(id)) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("{id} PASS {name}: {msg} [{secs:.1} s]"),
            Err(msg) => {
                failed += 1;
                println!("{id} FAIL {name}: {msg} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {ran} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("{ran} of {ran} acceptance criteria passed");
}
