use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use psa_core::channel::linear_to_db;
use psa_core::experiments::{trial_seeds, ExperimentResult, ExperimentSpec, Scenario, TraceRun};
use psa_core::mm_admm::SolveStatus;

/// Stand-in for `10 log10(0)` so every CSV field stays finite.
pub const DB_FLOOR: f64 = -300.0;

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "solver",
    "trials",
    "mean_snr_linear",
    "mean_snr_db",
    "stderr_db",
    "mean_time_ms",
    "mean_mm_iters",
    "mean_eig_ratio",
    "constraint_residual",
];

fn db(x: f64) -> f64 {
    if x > 0.0 {
        linear_to_db(x).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

/// Shortest round-trip text; exponent form for very small or large
/// magnitudes so the columns stay short.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(File::create(p).with_context(|| format!("cannot write {}", p.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

/// One row per `(scenario, sweep value, solver)`. All results must sweep
/// the same parameter.
pub fn write_summary(
    path: Option<&Path>,
    results: &[ExperimentResult],
    timing: bool,
) -> Result<()> {
    let param = results
        .first()
        .map(|r| r.spec.sweep.param.name())
        .unwrap_or("value");
    let mut w = csv::Writer::from_writer(sink(path)?);
    let mut header = vec!["scenario", param];
    header.extend(SUMMARY_COLUMNS);
    w.write_record(&header)?;
    for r in results {
        for p in &r.points {
            w.write_record([
                r.spec.scenario.name().to_string(),
                num(p.sweep_value),
                p.solver.name().to_string(),
                p.trials.to_string(),
                num(finite(p.mean_snr_linear)),
                num(db(p.mean_snr_linear)),
                num(finite(p.stderr_db)),
                num(if timing { finite(p.mean_time_ms) } else { 0.0 }),
                num(finite(p.mean_mm_iters)),
                num(finite(p.mean_eig_ratio)),
                num(finite(p.constraint_residual)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per MM iteration of every run.
pub fn write_traces(path: Option<&Path>, scenario: Scenario, traces: &[TraceRun]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    w.write_record([
        "scenario",
        "k",
        "trial",
        "solver_seed",
        "iteration",
        "snr_linear",
        "snr_db",
        "converged",
    ])?;
    for t in traces {
        let converged = matches!(t.status, SolveStatus::Converged);
        for (i, &obj) in t.trace.iter().enumerate() {
            let snr = t.snr_scale * obj;
            w.write_record([
                scenario.name().to_string(),
                num(t.sweep_value),
                t.trial.to_string(),
                t.solver_seed.to_string(),
                i.to_string(),
                num(finite(snr)),
                num(db(snr)),
                converged.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(
    path: &Path,
    command: &str,
    channels_file: Option<&Path>,
    specs: &[ExperimentSpec],
) -> Result<()> {
    let runs: Vec<_> = specs
        .iter()
        .map(|s| {
            let seeds: Vec<_> = (0..s.trials as u64)
                .map(|t| {
                    let (c, v) = trial_seeds(s.seed, t);
                    json!({ "trial": t, "channel_seed": c, "solver_seed": v })
                })
                .collect();
            json!({ "spec": s, "trial_seeds": seeds })
        })
        .collect();
    let doc = json!({
        "tool": "psa",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "channels_file": channels_file.map(|p| p.display().to_string()),
        "runs": runs,
    });
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    serde_json::to_writer_pretty(file, &doc)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_is_floored_and_finite() {
        assert_eq!(db(0.0), DB_FLOOR);
        assert_eq!(db(1e-40), DB_FLOOR);
        assert!((db(100.0) - 20.0).abs() < 1e-12);
        assert_eq!(finite(f64::NAN), 0.0);
        assert_eq!(num(DB_FLOOR), "-300");
        assert_eq!(num(2.5e-16), "2.5e-16");
        assert_eq!(num(0.0), "0");
    }
}
