//! `eroll`: drives an election phase by phase against a board directory,
//! evaluates the soundness bounds, and runs the adversary harness.

mod commands;
mod state;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use eroll_core::bounds;
use eroll_core::harness::{catalog, run_scenario, ScenarioId, TrialDepth, TrialParams};
use eroll_core::rng::Seed;

use commands::Report;
use state::RunConfig;

#[derive(Parser)]
#[command(name = "eroll", version, about = "Verifiable electoral-roll election runs")]
struct Cli {
    /// Directory holding the public board and the private election state.
    #[arg(long, global = true, default_value = "board")]
    board: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create keys, the board and the voter population.
    Setup(RunConfig),
    /// Register every citizen and close registration.
    RegisterPhase,
    /// Shuffle, decrypt and review the roll.
    PrepareRoll,
    /// Voters cast.
    CastPhase,
    /// Close the polls and fill absentee rows.
    Close,
    /// Run the universal audit and the privacy accounting.
    UnivAudit,
    /// Audit the receipts voters hand over.
    ReceiptAudit,
    /// Every phase and audit in order on a fresh board.
    RunAll(RunConfig),
    /// Soundness and privacy bounds.
    Bounds(BoundsArgs),
    /// Monte-Carlo fraud detection.
    #[command(subcommand)]
    Harness(HarnessCmd),
}

#[derive(Args)]
struct BoundsArgs {
    /// Honest casting voters, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000000")]
    n: Vec<u64>,
    /// Audit sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2500")]
    alpha: Vec<u64>,
    /// Winning margins as fractions, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.02")]
    margin: Vec<f64>,
    /// Also report the smallest α reaching this ε for each (n, margin).
    #[arg(long)]
    plan: Option<f64>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Depth {
    Full,
    ThroughDetector,
}

#[derive(Args, Clone)]
struct TrialArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    voters: usize,
    #[arg(long, default_value_t = 2)]
    frauds: usize,
    #[arg(long, default_value_t = 10)]
    alpha: u32,
    #[arg(long, default_value_t = 2)]
    kappa: usize,
    #[arg(long, default_value_t = 1)]
    blocks: u32,
    #[arg(long, default_value_t = 1)]
    booths_per_block: u32,
    /// Chance that a voter hands their receipts to an auditor.
    #[arg(long, default_value_t = 0.5)]
    audit_rate: f64,
    #[arg(long, value_enum, default_value_t = Depth::Full)]
    depth: Depth,
}

impl TrialArgs {
    fn params(&self) -> TrialParams {
        TrialParams {
            voters: self.voters,
            frauds: self.frauds,
            alpha: self.alpha,
            kappa: self.kappa,
            blocks: self.blocks,
            booths_per_block: self.booths_per_block,
            audit_rate: self.audit_rate,
            depth: match self.depth {
                Depth::Full => TrialDepth::Full,
                Depth::ThroughDetector => TrialDepth::ThroughDetector,
            },
        }
    }
}

#[derive(Subcommand)]
enum HarnessCmd {
    /// Scenarios with their threats, corrupted roles and detectors.
    List,
    /// One scenario.
    Run {
        scenario: String,
        #[command(flatten)]
        trials: TrialArgs,
        /// Write the report here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every scenario; the honest baseline runs with no frauds.
    All {
        #[command(flatten)]
        trials: TrialArgs,
        /// Directory for one JSON report per scenario.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn bounds_report(a: &BoundsArgs) -> Result<Report> {
    let rows = bounds::table(&a.n, &a.alpha, &a.margin)?;
    let mut plans = vec![];
    if let Some(target) = a.plan {
        for &n in &a.n {
            for &m in &a.margin {
                plans.push(bounds::plan(m, n, target)?);
            }
        }
    }
    if !a.json {
        println!("{:>10} {:>8} {:>7} {:>8} {:>12} {:>12}", "n", "alpha", "margin", "f", "epsilon", "delta");
        for r in &rows {
            let flag = if r.epsilon.degenerate { " (vacuous)" } else { "" };
            println!(
                "{:>10} {:>8} {:>7} {:>8} {:>12.4e} {:>12.4e}{flag}",
                r.n, r.alpha, r.margin, r.epsilon.params.f_d, r.epsilon.value, r.delta.value
            );
        }
        for p in &plans {
            match p.alpha {
                Some(alpha) => println!("n={} margin={}: alpha={alpha} gives epsilon={:.4e} <= {}", p.n, p.margin, p.epsilon, p.target),
                None => println!("n={} margin={}: unreachable, epsilon={:.4e} even at alpha=n", p.n, p.margin, p.epsilon),
            }
        }
    }
    Ok(Report { value: json!({ "rows": rows, "plans": plans }), ok: true })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn harness(cmd: &HarnessCmd) -> Result<Report> {
    match cmd {
        HarnessCmd::List => {
            let list: Vec<_> = catalog()
                .iter()
                .map(|s| {
                    json!({
                        "scenario": s.name,
                        "summary": s.summary,
                        "corrupted": s.corrupted,
                        "threats": s.threats,
                        "detector": s.detector,
                        "prediction": s.prediction,
                    })
                })
                .collect();
            Ok(Report { value: json!(list), ok: true })
        }
        HarnessCmd::Run { scenario, trials, out } => {
            let id = ScenarioId::from_name(scenario).ok_or_else(|| {
                let names: Vec<_> = ScenarioId::ALL.iter().map(|s| s.name()).collect();
                anyhow!("unknown scenario {scenario:?}; expected one of {}", names.join(", "))
            })?;
            let r = run_scenario(id, &trials.params(), Seed::from_u64(trials.seed), trials.trials)?;
            if let Some(out) = out {
                write_json(out, &r)?;
            }
            Ok(Report { ok: r.pass, value: serde_json::to_value(r)? })
        }
        HarnessCmd::All { trials, out } => {
            let mut reports = vec![];
            for id in ScenarioId::ALL {
                let mut p = trials.params();
                if id == ScenarioId::Honest {
                    p.frauds = 0;
                }
                let r = run_scenario(id, &p, Seed::from_u64(trials.seed), trials.trials)?;
                if let Some(dir) = out {
                    write_json(&dir.join(format!("{}.json", id.name())), &r)?;
                }
                eprintln!("{:<22} {:>5}/{:<5} rate {:.3} predicted {:.3} {}", r.scenario, r.detections, r.trials, r.rate, r.predicted, if r.pass { "ok" } else { "MISMATCH" });
                reports.push(r);
            }
            let ok = reports.iter().all(|r| r.pass);
            Ok(Report { value: serde_json::to_value(reports)?, ok })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Report> {
    let dir = cli.board.as_path();
    match &cli.cmd {
        Cmd::Setup(c) => commands::setup(dir, c.clone()),
        Cmd::RegisterPhase => commands::register_phase(dir),
        Cmd::PrepareRoll => commands::prepare_roll(dir),
        Cmd::CastPhase => commands::cast_phase(dir),
        Cmd::Close => commands::close(dir),
        Cmd::UnivAudit => commands::univ(dir),
        Cmd::ReceiptAudit => commands::receipt_audit(dir),
        Cmd::RunAll(c) => commands::run_all(dir, c.clone()),
        Cmd::Bounds(a) => bounds_report(a),
        Cmd::Harness(h) => harness(h),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(report) => {
            let table_only = matches!(&cli.cmd, Cmd::Bounds(a) if !a.json);
            if !table_only {
                println!("{}", serde_json::to_string_pretty(&report.value).expect("reports serialize"));
            }
            ExitCode::from(u8::from(!report.ok))
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
