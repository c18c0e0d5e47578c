//! `revival`: reproducible revival-time experiments.
//!
//! Every run writes into `<out>/<command>-<hash>/` and finishes with a
//! `manifest.json` listing each output with its SHA-256. Exit codes: 0 on
//! success, 1 on error (a JSON error record goes to stderr), 2 on bad usage,
//! 3 when outputs were written but a validity check failed.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use revival_core::analysis::{
    detect_revival, energy_drift, expected_revival_time, packet_energy, predictions, quick_profile, secular_model,
    sweep_lambda, SweepResult,
};
use revival_core::config::{load_config, parse_length, to_toml};
use revival_core::io::{write_autocorr_csv, write_checkpoint, write_sweep_csv};
use revival_core::mathieu::{char_value, char_value_perturbative};
use revival_core::propagator::{propagate, PropagateOptions};
use revival_core::secular::QuasiEnergyMode;
use revival_core::spectrum::SoftWallBouncer;
use revival_core::{compare, SimulationConfig};

use output::Experiment;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] revival_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
            CliError::Usage(_) => "usage",
        }
    }
}

#[derive(Parser)]
#[command(name = "revival", version, about = "Wave-packet revivals on a modulated atomic mirror")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Root directory for experiment outputs.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Use the cheap profile: lower launch height, coarser grid, short horizon.
    #[arg(long)]
    quick: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic revival-time predictions for the configured amplitude.
    Predict(Common),
    /// One propagation: autocorrelation series, summary, optional checkpoints.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Keep the packet at this time (s); repeatable.
        #[arg(long = "checkpoint")]
        checkpoints: Vec<f64>,
    },
    /// One propagation per modulation amplitude and the power-law fit.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Modulation amplitudes, comma separated, e.g. `0,0.28um,0.56um`.
        #[arg(long, value_delimiter = ',', default_value = "0,0.28um,0.56um,1.13um")]
        lambdas: Vec<String>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Measured revival ratios of a sweep against the closed-form predictions.
    Compare {
        #[command(flatten)]
        common: Common,
        /// `sweep.json` written by the sweep command.
        #[arg(long)]
        sweep: PathBuf,
    },
    /// Table of Mathieu characteristic values.
    Mathieu {
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Orders as `start:stop:step`; integer orders are reported as failures.
        #[arg(long, default_value = "1.25:9.75:0.5")]
        orders: String,
        /// Parameters `q`, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3")]
        q: Vec<f64>,
    },
}

fn load(common: &Common) -> Result<SimulationConfig, CliError> {
    let text = fs::read_to_string(&common.config)?;
    let config = load_config(&text)?;
    Ok(if common.quick { quick_profile(&config)? } else { config })
}

/// What a command produced: where, and whether its validity checks held.
struct Outcome {
    dir: PathBuf,
    problems: Vec<String>,
}

fn predict(common: &Common) -> Result<Outcome, CliError> {
    let config = load(common)?;
    let mut exp = Experiment::create(&common.out, "predict", "", to_toml(&config))?;
    let model = secular_model(&config)?;
    let prediction = model.predict(config.physical.modulation_amplitude, QuasiEnergyMode::Numeric)?;
    let soft = SoftWallBouncer::new(&config.physical)?;
    let energy = packet_energy(&config);
    let record = json!({
        "prediction": prediction,
        "soft_wall": {
            "packet_energy_J": energy,
            "quantum_number": soft.quantum_number(energy)?,
            "bounce_period_s": soft.bounce_period(energy)?,
            "t0_s": soft.revival_time(energy)?,
        },
    });
    exp.write_json("prediction.json", &record)?;
    let mut problems = Vec::new();
    if !prediction.validity.perturbative {
        problems.push(format!("|q| = {:.3e} is not below 1; closed-form routes are outside their regime", prediction.q.abs()));
    }
    Ok(Outcome { dir: exp.finish()?, problems })
}

#[derive(Serialize)]
struct SimulationSummary {
    steps: usize,
    samples: usize,
    t_end_s: f64,
    max_norm_error: f64,
    energy_drift: Option<f64>,
    expected_revival_s: f64,
    revival: Option<revival_core::RevivalMeasurement>,
    detection_error: Option<String>,
}

fn simulate(common: &Common, checkpoints: &[f64]) -> Result<Outcome, CliError> {
    let config = load(common)?;
    let key = format!("{checkpoints:?}");
    let mut exp = Experiment::create(&common.out, "simulate", &key, to_toml(&config))?;
    let run = propagate(&config, &PropagateOptions { checkpoints: checkpoints.to_vec() })?;
    let mut csv = Vec::new();
    write_autocorr_csv(&run, &mut csv)?;
    exp.write("autocorr.csv", csv)?;
    for (i, packet) in run.checkpoints.iter().enumerate() {
        let mut bytes = Vec::new();
        write_checkpoint(packet, &mut bytes)?;
        exp.write(&format!("psi_{i:03}.bin"), bytes)?;
    }
    let expected = expected_revival_time(&config)?;
    let detection =
        detect_revival(&run.series, expected, config.analysis.revival_search_window, config.analysis.envelope_window);
    let o = &run.observables;
    let bounce = SoftWallBouncer::new(&config.physical)?.bounce_period(packet_energy(&config))?;
    let summary = SimulationSummary {
        steps: run.steps,
        samples: run.series.len(),
        t_end_s: run.series.times.last().copied().unwrap_or(0.0),
        max_norm_error: o.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max),
        energy_drift: energy_drift(&run.series.times, &o.mean_energy, bounce).ok(),
        expected_revival_s: expected,
        revival: detection.as_ref().ok().copied(),
        detection_error: detection.as_ref().err().map(|e| e.to_string()),
    };
    exp.write_json("summary.json", &summary)?;
    let mut problems = Vec::new();
    match &detection {
        Err(e) => problems.push(e.to_string()),
        Ok(m) if m.edge_saturated => problems.push("revival peak at the edge of the search window".into()),
        Ok(_) => {}
    }
    Ok(Outcome { dir: exp.finish()?, problems })
}

fn sweep(common: &Common, lambdas: &[String], jobs: usize) -> Result<Outcome, CliError> {
    let config = load(common)?;
    let values = lambdas.iter().map(|s| parse_length(s)).collect::<Result<Vec<f64>, _>>()?;
    let key = format!("{values:?}");
    let mut exp = Experiment::create(&common.out, "sweep", &key, to_toml(&config))?;
    let result = sweep_lambda(&config, &values, jobs)?;
    let mut csv = Vec::new();
    write_sweep_csv(&result, &mut csv)?;
    exp.write("sweep.csv", csv)?;
    exp.write_json("sweep.json", &result)?;
    let problems = result
        .rows
        .iter()
        .filter_map(|r| match (&r.failure, r.edge_saturated) {
            (Some(f), _) => Some(format!("lambda = {:e} m: {f}", r.lambda)),
            (None, true) => Some(format!("lambda = {:e} m: revival peak at the window edge", r.lambda)),
            _ => None,
        })
        .collect();
    Ok(Outcome { dir: exp.finish()?, problems })
}

fn compare_sweep(common: &Common, sweep_path: &Path) -> Result<Outcome, CliError> {
    let config = load(common)?;
    let text = fs::read_to_string(sweep_path)?;
    let sweep: SweepResult = serde_json::from_str(&text)?;
    let key = output::sha256_hex(text.as_bytes());
    let mut exp = Experiment::create(&common.out, "compare", &key, to_toml(&config))?;
    let lambdas: Vec<f64> = sweep.rows.iter().map(|r| r.lambda).collect();
    let preds = predictions(&secular_model(&config)?, &lambdas);
    let comparison = compare(&sweep, &preds)?;
    exp.write_json("comparison.json", &comparison)?;
    let problems = comparison
        .rows
        .iter()
        .filter(|r| r.deviation.is_none())
        .map(|r| format!("lambda = {:e} m: no deviation (missing measurement or prediction)", r.lambda))
        .collect();
    Ok(Outcome { dir: exp.finish()?, problems })
}

fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("orders {text:?}: {e}")))?;
    match parts[..] {
        [start, stop, step] if step > 0.0 && stop >= start => {
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(CliError::Usage(format!("orders {text:?}: expected start:stop:step with step > 0"))),
    }
}

fn mathieu(out: &Path, orders: &str, qs: &[f64]) -> Result<Outcome, CliError> {
    let nus = parse_range(orders)?;
    let key = format!("{nus:?} {qs:?}");
    let mut exp = Experiment::create(out, "mathieu", &key, String::new())?;
    let mut csv = String::from("nu,q,a_numeric,a_perturbative\n");
    let mut problems = Vec::new();
    for &nu in &nus {
        for &q in qs {
            let cell = |r: revival_core::Result<f64>| r.map(|v| v.to_string());
            let numeric = cell(char_value(nu, q)).unwrap_or_else(|e| {
                problems.push(format!("nu = {nu}, q = {q}: {e}"));
                String::new()
            });
            let perturbative = cell(char_value_perturbative(nu, q)).unwrap_or_default();
            csv.push_str(&format!("{nu},{q},{numeric},{perturbative}\n"));
        }
    }
    exp.write("mathieu.csv", csv.into_bytes())?;
    Ok(Outcome { dir: exp.finish()?, problems })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Predict(c) => predict(c),
        Command::Simulate { common, checkpoints } => simulate(common, checkpoints),
        Command::Sweep { common, lambdas, jobs } => sweep(common, lambdas, *jobs),
        Command::Compare { common, sweep } => compare_sweep(common, sweep),
        Command::Mathieu { out, orders, q } => mathieu(out, orders, q),
    };
    match result {
        Ok(outcome) => {
            println!("{}", json!({ "output": outcome.dir, "problems": outcome.problems }));
            if outcome.problems.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}
