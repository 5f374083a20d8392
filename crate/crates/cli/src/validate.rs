//! Self-checks run by `psa validate`: solver outputs against the grid oracle
//! and the relaxation bound, detection formulas against simulation, and
//! feasibility and ascent of every solver output.

use std::collections::BTreeMap;

use anyhow::Result;

use psa_core::channel::generate_channels;
use psa_core::detection::{simulate_detector, simulate_false_alarm, DetectionModel, DetectorCase};
use psa_core::experiments::{
    convergence_traces, run_experiment, ExperimentResult, ExperimentSpec, Scenario, SolverKind,
    Sweep, SweepParam, TrialOutcome,
};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Sizes {
    oracle_trials: usize,
    oracle_steps: usize,
    bound_trials: usize,
    trace_trials: usize,
    mc_trials: u64,
}

impl Sizes {
    fn new(quick: bool) -> Self {
        if quick {
            Sizes {
                oracle_trials: 10,
                oracle_steps: 32,
                bound_trials: 10,
                trace_trials: 20,
                mc_trials: 20_000,
            }
        } else {
            Sizes {
                oracle_trials: 50,
                oracle_steps: 64,
                bound_trials: 50,
                trace_trials: 100,
                mc_trials: 200_000,
            }
        }
    }
}

fn report(checks: &[Check]) -> bool {
    for c in checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("check {}: {verdict} ({})", c.name, c.detail);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("validate: {passed}/{} checks passed", checks.len());
    passed == checks.len()
}

pub fn run_all(quick: bool, seed: u64) -> Result<bool> {
    let sizes = Sizes::new(quick);
    let small = small_runs(&sizes, seed)?;
    let bounded = bound_runs(&sizes, seed)?;
    let mut checks = vec![oracle_check(&small), bound_check(&small, &bounded)];
    checks.extend(detection_checks(&sizes, seed)?);
    checks.push(residual_check(small.iter().chain(&bounded)));
    checks.push(ascent_check(&sizes, seed)?);
    Ok(report(&checks))
}

pub fn run_detection_only(quick: bool, seed: u64) -> Result<bool> {
    Ok(report(&detection_checks(&Sizes::new(quick), seed)?))
}

/// Outcomes of one trial keyed by solver.
type TrialRow<'a> = BTreeMap<&'static str, &'a TrialOutcome>;

fn by_trial(r: &ExperimentResult) -> Vec<TrialRow<'_>> {
    let mut rows: BTreeMap<(u64, usize), TrialRow<'_>> = BTreeMap::new();
    for rec in &r.records {
        if let Ok(o) = &rec.outcome {
            rows.entry((rec.sweep_value.to_bits(), rec.trial))
                .or_default()
                .insert(rec.solver.name(), o);
        }
    }
    rows.into_values().collect()
}

fn spec(scenario: Scenario, n: usize, ks: &[f64], trials: usize, seed: u64) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(
        scenario,
        Sweep {
            param: SweepParam::K,
            values: ks.to_vec(),
        },
        trials,
        vec![SolverKind::MmAdmm, SolverKind::Sdr],
    );
    s.base.n = n;
    s.seed = seed;
    s
}

fn small_runs(sizes: &Sizes, seed: u64) -> Result<Vec<ExperimentResult>> {
    [Scenario::UnawareUnknownHb, Scenario::DetectGeneral]
        .into_iter()
        .map(|sc| {
            let mut s = spec(sc, 4, &[2.0], sizes.oracle_trials, seed);
            s.solvers.push(SolverKind::Oracle);
            s.oracle_steps = sizes.oracle_steps;
            Ok(run_experiment(&s)?)
        })
        .collect()
}

fn bound_runs(sizes: &Sizes, seed: u64) -> Result<Vec<ExperimentResult>> {
    [Scenario::DetectGeneral, Scenario::DetectWorst]
        .into_iter()
        .map(|sc| {
            Ok(run_experiment(&spec(
                sc,
                8,
                &[3.0, 6.0],
                sizes.bound_trials,
                seed + 1,
            ))?)
        })
        .collect()
}

fn oracle_check(small: &[ExperimentResult]) -> Check {
    let mut total = 0;
    let mut close = 0;
    let mut bound_below_oracle = 0;
    for r in small {
        for row in by_trial(r) {
            let (Some(mm), Some(sdr), Some(or)) =
                (row.get("mm-admm"), row.get("sdr"), row.get("oracle"))
            else {
                continue;
            };
            total += 1;
            if mm.snr >= 0.99 * or.snr {
                close += 1;
            }
            if sdr.upper_bound.unwrap_or(f64::INFINITY) < or.snr * (1.0 - 1e-6) {
                bound_below_oracle += 1;
            }
        }
    }
    let expected = small.iter().map(|r| r.spec.trials).sum::<usize>();
    Check {
        name: "oracle equivalence",
        passed: total == expected && close * 10 >= total * 9 && bound_below_oracle == 0,
        detail: format!(
            "MM-ADMM within 1% of the grid optimum on {close}/{total}; relaxation bound below the grid on {bound_below_oracle}"
        ),
    }
}

fn bound_check(small: &[ExperimentResult], bounded: &[ExperimentResult]) -> Check {
    let mut total = 0;
    let mut above = 0;
    let mut tight = 0;
    for r in small.iter().chain(bounded) {
        for row in by_trial(r) {
            let (Some(mm), Some(sdr)) = (row.get("mm-admm"), row.get("sdr")) else {
                continue;
            };
            let Some(bound) = sdr.upper_bound else {
                continue;
            };
            total += 1;
            if mm.snr > bound * (1.0 + 1e-6) + 1e-12 {
                above += 1;
            }
            if 10.0 * (bound / mm.snr).log10() <= 0.1 {
                tight += 1;
            }
        }
    }
    Check {
        name: "relaxation bound",
        passed: total > 0 && above == 0 && tight * 20 >= total * 19,
        detail: format!("{above}/{total} above the bound; within 0.1 dB on {tight}/{total}"),
    }
}

fn detection_checks(sizes: &Sizes, seed: u64) -> Result<Vec<Check>> {
    let trials = sizes.mc_trials;
    let mut out = Vec::new();
    for (case, name) in [
        (DetectorCase::General, "detection monte carlo (general)"),
        (DetectorCase::Worst, "detection monte carlo (worst)"),
    ] {
        let mut total = 0;
        let mut ok = 0;
        let mut worst_z = 0.0f64;
        for (i, n) in [1usize, 4, 8].into_iter().enumerate() {
            let model = DetectionModel::new(case, 0.05, n, 1.25)?;
            let dir = generate_channels(seed.wrapping_add(i as u64), n, 1)?.h_b;
            for (j, m) in [0.0, 0.5, 1.5, 2.5].into_iter().enumerate() {
                let tag = seed.wrapping_add(100 * i as u64 + j as u64);
                // m = 0 checks the false-alarm level itself.
                let (sim, p) = if m == 0.0 {
                    let tiny = dir.scale_real(1e-9 / dir.norm());
                    (simulate_false_alarm(&model, &tiny, trials, tag)?, model.eta)
                } else {
                    let norm = m * model.sigma_bt();
                    let h = dir.scale_real(norm / dir.norm());
                    (
                        simulate_detector(&model, &h, trials, tag)?,
                        model.detect_prob(norm)?,
                    )
                };
                let se = (p * (1.0 - p) / trials as f64)
                    .sqrt()
                    .max(1.0 / trials as f64);
                let z = (sim - p).abs() / se;
                worst_z = worst_z.max(z);
                total += 1;
                if z <= 4.0 {
                    ok += 1;
                }
            }
        }
        out.push(Check {
            name,
            passed: ok == total,
            detail: format!("{ok}/{total} within 4 SE at {trials} trials (max |z| {worst_z:.2})"),
        });
    }
    Ok(out)
}

fn residual_check<'a>(results: impl Iterator<Item = &'a ExperimentResult>) -> Check {
    let mut total = 0;
    let mut worst = 0.0f64;
    let mut bad = 0;
    for r in results {
        for o in r.records.iter().filter_map(|rec| rec.outcome.as_ref().ok()) {
            total += 1;
            worst = worst.max(o.residual);
            if o.residual > 1e-6 {
                bad += 1;
            }
        }
    }
    Check {
        name: "feasibility and evasion",
        passed: total > 0 && bad == 0,
        detail: format!(
            "{bad}/{total} outputs violate a cap or the detection budget (max {worst:.2e})"
        ),
    }
}

fn ascent_check(sizes: &Sizes, seed: u64) -> Result<Check> {
    let s = spec(
        Scenario::UnawareUnknownHb,
        8,
        &[3.0],
        sizes.trace_trials,
        seed + 2,
    );
    let traces = convergence_traces(&s)?;
    let monotone = traces
        .iter()
        .filter(|t| {
            t.trace
                .windows(2)
                .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0))
        })
        .count();
    Ok(Check {
        name: "MM ascent",
        passed: monotone == traces.len(),
        detail: format!(
            "objective nondecreasing on {monotone}/{} runs",
            traces.len()
        ),
    })
}
