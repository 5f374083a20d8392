//! `psa`: runs the attack-design experiments and validation suites and
//! writes the results as CSV.

mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use psa_core::channel::{ChannelRealization, DEFAULT_P_DBM, DEFAULT_P_S_DBM, DEFAULT_P_T_DBM};
use psa_core::experiments::{
    convergence_traces, run_experiment, timing_run, BaseParams, ExperimentResult, ExperimentSpec,
    Scenario, SolverKind, Sweep, SweepParam, TimingSpec, DEFAULT_EPSILON, DEFAULT_ETA,
    DEFAULT_ORACLE_STEPS,
};
use psa_core::mm_admm::SolverConfig;

#[derive(Parser, Debug)]
#[command(
    name = "psa",
    version,
    about = "Cooperative pilot-spoofing attack experiments"
)]
#[command(subcommand_required = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-iteration MM-ADMM objective traces from random starts.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ScenarioArg::UnawareUnknownHb)]
        scenario: ScenarioArg,
    },
    /// MM-ADMM against the semidefinite relaxation: SNR, eigenvalue ratio
    /// and wall time versus K.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ScenarioArg::DetectGeneral)]
        scenario: ScenarioArg,
    },
    /// Detection-unaware attacks: cooperative vs non-cooperative versus K,
    /// or known vs unknown h_B versus P_T.
    Unaware {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = UnawareSweep::K)]
        sweep: UnawareSweep,
    },
    /// Detection-aware attacks versus P or the detection budget epsilon.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = DetectSweep::PDbm)]
        sweep: DetectSweep,
        #[arg(long = "case", value_enum, default_value_t = CaseArg::Both)]
        case: CaseArg,
    },
    /// Oracle equivalence, relaxation bound, detection Monte Carlo and
    /// solver invariants. Exits nonzero if any check fails.
    Validate {
        /// Smaller instance counts; finishes in a few seconds.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Only the detection Monte Carlo part of `validate`.
    ValidateDetection {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Flags shared by the experiment subcommands. Powers are in dBm; noise is
/// fixed at 0 dBm.
#[derive(Args, Debug, Clone)]
struct Common {
    /// Antennas at the base station.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Number of Eves (ignored when sweeping K).
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Pilot length.
    #[arg(long, default_value_t = psa_core::channel::DEFAULT_TAU)]
    tau: u32,
    #[arg(long = "pt-dbm", default_value_t = DEFAULT_P_T_DBM, allow_negative_numbers = true)]
    pt_dbm: f64,
    #[arg(long = "ps-dbm", default_value_t = DEFAULT_P_S_DBM, allow_negative_numbers = true)]
    ps_dbm: f64,
    /// Per-Eve attack power cap.
    #[arg(long = "p-dbm", default_value_t = DEFAULT_P_DBM, allow_negative_numbers = true)]
    p_dbm: f64,
    /// False-alarm level of the detector.
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    /// Detection probability budget.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Sweep values, comma separated; each subcommand has its own default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Solvers to run, comma separated; each subcommand has its own default.
    #[arg(long = "solver", value_enum, value_delimiter = ',')]
    solvers: Option<Vec<SolverArg>>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// ADMM penalty.
    #[arg(long, default_value_t = 0.01)]
    rho: f64,
    /// Relative tolerance of the outer MM loop.
    #[arg(long = "delta-m", default_value_t = 1e-3)]
    delta_m: f64,
    /// Relative tolerance of the inner ADMM loop.
    #[arg(long = "delta-a", default_value_t = 1e-8)]
    delta_a: f64,
    #[arg(long = "t-m-max", default_value_t = 500)]
    t_m_max: usize,
    #[arg(long = "t-a-max", default_value_t = 500)]
    t_a_max: usize,
    /// Grid points per magnitude and phase axis of the K <= 2 oracle.
    #[arg(long = "oracle-steps", default_value_t = DEFAULT_ORACLE_STEPS)]
    oracle_steps: usize,
    /// Replay one channel realization (text format) in every trial.
    #[arg(long = "channels-file")]
    channels_file: Option<PathBuf>,
    /// Write the run parameters and per-trial seeds as JSON.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Fill in wall times. Off by default so repeated runs give identical
    /// files.
    #[arg(long)]
    timing: bool,
    /// CSV output path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ScenarioArg {
    UnawareUnknownHb,
    UnawareKnownHb,
    DetectGeneral,
    DetectWorst,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::UnawareUnknownHb => Scenario::UnawareUnknownHb,
            ScenarioArg::UnawareKnownHb => Scenario::UnawareKnownHb,
            ScenarioArg::DetectGeneral => Scenario::DetectGeneral,
            ScenarioArg::DetectWorst => Scenario::DetectWorst,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SolverArg {
    MmAdmm,
    Sdr,
    Ncas,
    Oracle,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::MmAdmm => SolverKind::MmAdmm,
            SolverArg::Sdr => SolverKind::Sdr,
            SolverArg::Ncas => SolverKind::Ncas,
            SolverArg::Oracle => SolverKind::Oracle,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum UnawareSweep {
    K,
    PtDbm,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DetectSweep {
    PDbm,
    Epsilon,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum CaseArg {
    General,
    Worst,
    Both,
}

impl Common {
    fn spec(
        &self,
        scenario: Scenario,
        param: SweepParam,
        default_values: &[f64],
        default_solvers: &[SolverKind],
        channels: Option<&ChannelRealization>,
    ) -> ExperimentSpec {
        let values = self
            .values
            .clone()
            .unwrap_or_else(|| default_values.to_vec());
        let solvers = match &self.solvers {
            Some(s) => s.iter().map(|&s| s.into()).collect(),
            None => default_solvers.to_vec(),
        };
        let mut spec = ExperimentSpec::new(scenario, Sweep { param, values }, self.trials, solvers);
        spec.base = BaseParams {
            n: self.n,
            k: self.k,
            tau: self.tau,
            p_t_dbm: self.pt_dbm,
            p_s_dbm: self.ps_dbm,
            p_dbm: self.p_dbm,
        };
        spec.eta = self.eta;
        spec.epsilon = self.epsilon;
        spec.seed = self.seed;
        spec.solver_config = SolverConfig {
            rho: self.rho,
            delta_m: self.delta_m,
            delta_a: self.delta_a,
            t_m_max: self.t_m_max,
            t_a_max: self.t_a_max,
            ..SolverConfig::default()
        };
        spec.oracle_steps = self.oracle_steps;
        spec.fixed_channels = channels.cloned();
        spec
    }

    fn channels(&self) -> Result<Option<ChannelRealization>> {
        let Some(path) = &self.channels_file else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let c = ChannelRealization::from_text(&text)
            .with_context(|| format!("cannot parse {}", path.display()))?;
        Ok(Some(c))
    }
}

const K_VALUES: [f64; 7] = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
const PT_VALUES: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];
const P_VALUES: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
const EPS_VALUES: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.4];

fn run_experiments(
    common: &Common,
    command: &str,
    specs: Vec<ExperimentSpec>,
) -> Result<Vec<ExperimentResult>> {
    let results = specs
        .iter()
        .map(|s| run_experiment(s).with_context(|| format!("{} run failed", s.scenario.name())))
        .collect::<Result<Vec<_>>>()?;
    for r in &results {
        for p in r.points.iter().filter(|p| p.failures > 0) {
            eprintln!(
                "warning: {} {}={} {}: {} of {} trials failed",
                r.spec.scenario.name(),
                r.spec.sweep.param.name(),
                p.sweep_value,
                p.solver.name(),
                p.failures,
                p.failures + p.trials
            );
        }
    }
    if let Some(path) = &common.manifest {
        output::write_manifest(path, command, common.channels_file.as_deref(), &specs)?;
    }
    Ok(results)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Convergence { common, scenario } => {
            let channels = common.channels()?;
            let spec = common.spec(
                scenario.into(),
                SweepParam::K,
                &[common.k as f64],
                &[SolverKind::MmAdmm],
                channels.as_ref(),
            );
            let traces = convergence_traces(&spec)?;
            if let Some(path) = &common.manifest {
                output::write_manifest(
                    path,
                    "convergence",
                    common.channels_file.as_deref(),
                    std::slice::from_ref(&spec),
                )?;
            }
            output::write_traces(common.out.as_deref(), spec.scenario, &traces)?;
        }
        Command::Compare { common, scenario } => {
            let channels = common.channels()?;
            let spec = common.spec(
                scenario.into(),
                SweepParam::K,
                &[2.0, 4.0, 6.0, 8.0, 10.0],
                &[SolverKind::MmAdmm, SolverKind::Sdr],
                channels.as_ref(),
            );
            let mut results = run_experiments(&common, "compare", vec![spec.clone()])?;
            if common.timing {
                // Trial-parallel wall times include pool contention; time
                // each solver alone on the same instances instead.
                let timed: Vec<SolverKind> = spec
                    .solvers
                    .iter()
                    .copied()
                    .filter(|&s| s != SolverKind::Ncas)
                    .collect();
                let rows = timing_run(&TimingSpec {
                    scenario: spec.scenario,
                    base: spec.base.clone(),
                    eta: spec.eta,
                    epsilon: spec.epsilon,
                    k_list: spec.sweep.values.iter().map(|&v| v as usize).collect(),
                    trials: spec.trials,
                    solvers: timed,
                    solver_config: spec.solver_config.clone(),
                    seed: spec.seed,
                })?;
                for p in &mut results[0].points {
                    if let Some(row) = rows
                        .iter()
                        .find(|r| r.k as f64 == p.sweep_value && r.solver == p.solver)
                    {
                        p.mean_time_ms = row.mean_ms;
                    }
                }
            }
            output::write_summary(common.out.as_deref(), &results, common.timing)?;
        }
        Command::Unaware { common, sweep } => {
            let channels = common.channels()?;
            let specs = match sweep {
                UnawareSweep::K => vec![common.spec(
                    Scenario::UnawareUnknownHb,
                    SweepParam::K,
                    &K_VALUES,
                    &[SolverKind::MmAdmm, SolverKind::Ncas],
                    channels.as_ref(),
                )],
                UnawareSweep::PtDbm => [Scenario::UnawareUnknownHb, Scenario::UnawareKnownHb]
                    .into_iter()
                    .map(|s| {
                        common.spec(
                            s,
                            SweepParam::PtDbm,
                            &PT_VALUES,
                            &[SolverKind::MmAdmm],
                            channels.as_ref(),
                        )
                    })
                    .collect(),
            };
            let results = run_experiments(&common, "unaware", specs)?;
            output::write_summary(common.out.as_deref(), &results, common.timing)?;
        }
        Command::Detect {
            common,
            sweep,
            case,
        } => {
            let channels = common.channels()?;
            let (param, values) = match sweep {
                DetectSweep::PDbm => (SweepParam::PDbm, &P_VALUES[..]),
                DetectSweep::Epsilon => (SweepParam::Epsilon, &EPS_VALUES[..]),
            };
            let scenarios = match case {
                CaseArg::General => vec![Scenario::DetectGeneral],
                CaseArg::Worst => vec![Scenario::DetectWorst],
                CaseArg::Both => vec![Scenario::DetectGeneral, Scenario::DetectWorst],
            };
            let specs = scenarios
                .into_iter()
                .map(|s| common.spec(s, param, values, &[SolverKind::MmAdmm], channels.as_ref()))
                .collect();
            let results = run_experiments(&common, "detect", specs)?;
            output::write_summary(common.out.as_deref(), &results, common.timing)?;
        }
        Command::Validate { quick, seed } => return validate::run_all(quick, seed),
        Command::ValidateDetection { quick, seed } => {
            return validate::run_detection_only(quick, seed)
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
