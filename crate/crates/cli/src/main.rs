use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gearsim::truth::TruthMode;
use gearsim_cli::artifacts::Stage;
use gearsim_cli::commands::stored_config;
use gearsim_cli::report::cmd_report;
use gearsim_cli::{CliError, Evaluation, Overrides, Run, RunConfig};

#[derive(Parser)]
#[command(name = "gearsim", version, about = "Simulator identification and policy transfer for a geared leg")]
struct Cli {
    /// Run configuration (JSON). Defaults to the one stored in the output
    /// directory, then to built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Trial budget of the first identification.
    #[arg(long, global = true)]
    budget_first: Option<usize>,
    /// Trial budget of re-identification.
    #[arg(long, global = true)]
    budget_re: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Concurrent rollouts; results are identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// in-family | out-of-family-dte
    #[arg(long, global = true)]
    gt_mode: Option<TruthMode>,
    /// Run directory (default `run`), or the report directory for `report`
    /// (default `report`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record the excitation motion on the robot.
    GenReal,
    /// First identification against the recorded excitation.
    Identify,
    /// Train a policy on an identified simulator.
    Train {
        #[arg(long, default_value = "first")]
        stage: Stage,
    },
    /// Compare a policy's returns in simulation and on the robot.
    Evaluate {
        #[arg(long, default_value = "first")]
        stage: Stage,
    },
    /// Two-objective re-identification.
    Reidentify,
    /// All phases and the final report.
    Pipeline,
    /// Plot data over completed run directories.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Include the hidden ground truth.
        #[arg(long)]
        reveal: bool,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("run"));
            stored_config(&dir)?.unwrap_or_default()
        }
    };
    cfg.apply(&Overrides {
        budget_first: cli.budget_first,
        budget_re: cli.budget_re,
        seed: cli.seed,
        jobs: cli.jobs,
        gt_mode: cli.gt_mode,
        out: cli.out.clone(),
    });
    Ok(cfg)
}

fn print_evaluation(ev: &Evaluation) {
    println!(
        "stage {}: expected {:.4}, actual {:.4}, ratio {:.3}, W {:.4}, transfer {}",
        ev.stage.name(),
        ev.expected_mean,
        ev.actual_mean,
        ev.ratio,
        ev.w,
        if ev.transfer_success { "yes" } else { "no" }
    );
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Report { runs, reveal } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("report"));
        let r = cmd_report(runs, &out, *reveal)?;
        for p in &r.written {
            println!("wrote {}", p.display());
        }
        for m in &r.missing {
            eprintln!("missing {m}");
        }
        return Ok(());
    }
    let run = Run::open(resolve(&cli)?)?;
    match cli.command {
        Command::GenReal => {
            run.gen_real()?;
            println!("recorded excitation in {}", run.dir.root().display());
        }
        Command::Identify => {
            let p = run.identify()?;
            println!("L_exc {:.6} after {} trials ({} failed)", p.l_exc, p.trials, p.failed_trials);
        }
        Command::Train { stage } => {
            run.train(stage)?;
            println!("trained {}", stage.policy_file());
        }
        Command::Evaluate { stage } => print_evaluation(&run.evaluate(stage)?),
        Command::Reidentify => {
            let p = run.reidentify()?;
            println!("front of {}: L_exc {:.6}, W {:.4}", p.front_size, p.l_exc, p.w);
        }
        Command::Pipeline => {
            let r = run.pipeline()?;
            println!("phase 1: L_exc {:.6}", r.phase1.l_exc);
            print_evaluation(&r.phase2);
            print_evaluation(&r.phase3.evaluation);
        }
        Command::Report { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
