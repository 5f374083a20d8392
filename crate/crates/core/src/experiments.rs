//! Monte Carlo sweeps, the non-cooperative baseline, solver timing and a
//! brute-force grid oracle for `K ≤ 2`.
//!
//! Every trial gets its own seed from a ChaCha8 stream keyed by the run seed
//! (one stream per trial index), so any trial can be replayed alone and the
//! same channel draws are reused at every sweep point. Trials run on the
//! rayon pool and are reduced in trial order, which makes results
//! independent of scheduling.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_detection_aware, build_unaware_known_hb, build_unaware_unknown_hb, generate_channels,
    linear_to_db, ncas_snr, ChannelRealization, ProblemData, SystemParams, DEFAULT_P_DBM,
    DEFAULT_P_S_DBM, DEFAULT_P_T_DBM, DEFAULT_TAU,
};
use crate::detection::{DetectionModel, DetectorCase};
use crate::error::{domain, Error, Result};
use crate::mm_admm::{self, project_feasible, SolveStatus, SolverConfig};
use crate::numerics::{CVector, C64};
use crate::sdr::{build_sdp, solve_sdp};

pub const DEFAULT_ORACLE_STEPS: usize = 64;
pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    UnawareUnknownHb,
    UnawareKnownHb,
    DetectGeneral,
    DetectWorst,
}

impl Scenario {
    pub fn is_homogeneous(self) -> bool {
        !matches!(self, Scenario::UnawareKnownHb)
    }

    pub fn detector(self) -> Option<DetectorCase> {
        match self {
            Scenario::DetectGeneral => Some(DetectorCase::General),
            Scenario::DetectWorst => Some(DetectorCase::Worst),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::UnawareUnknownHb => "unaware-unknown-hb",
            Scenario::UnawareKnownHb => "unaware-known-hb",
            Scenario::DetectGeneral => "detect-general",
            Scenario::DetectWorst => "detect-worst",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    MmAdmm,
    Sdr,
    Ncas,
    Oracle,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::MmAdmm => "mm-admm",
            SolverKind::Sdr => "sdr",
            SolverKind::Ncas => "ncas",
            SolverKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    K,
    N,
    PDbm,
    PtDbm,
    Epsilon,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::N => "n",
            SweepParam::PDbm => "p_dbm",
            SweepParam::PtDbm => "pt_dbm",
            SweepParam::Epsilon => "epsilon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Scalar system parameters, powers in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    pub n: usize,
    pub k: usize,
    pub tau: u32,
    pub p_t_dbm: f64,
    pub p_s_dbm: f64,
    pub p_dbm: f64,
}

impl Default for BaseParams {
    fn default() -> Self {
        BaseParams {
            n: 8,
            k: 3,
            tau: DEFAULT_TAU,
            p_t_dbm: DEFAULT_P_T_DBM,
            p_s_dbm: DEFAULT_P_S_DBM,
            p_dbm: DEFAULT_P_DBM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub sweep: Sweep,
    pub trials: usize,
    pub solvers: Vec<SolverKind>,
    pub base: BaseParams,
    pub eta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub solver_config: SolverConfig,
    /// Also start MM-ADMM from the (projected) full-power point and keep
    /// the better of the two runs.
    pub full_power_start: bool,
    pub oracle_steps: usize,
    /// Replays one fixed realization in every trial instead of drawing
    /// channels; solver seeds still vary per trial.
    #[serde(skip)]
    pub fixed_channels: Option<ChannelRealization>,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, sweep: Sweep, trials: usize, solvers: Vec<SolverKind>) -> Self {
        ExperimentSpec {
            scenario,
            sweep,
            trials,
            solvers,
            base: BaseParams::default(),
            eta: DEFAULT_ETA,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            solver_config: SolverConfig::default(),
            full_power_start: true,
            oracle_steps: DEFAULT_ORACLE_STEPS,
            fixed_channels: None,
        }
    }

    fn channels(&self, channel_seed: u64, n: usize, k: usize) -> Result<ChannelRealization> {
        match &self.fixed_channels {
            Some(c) => Ok(c.clone()),
            None => generate_channels(channel_seed, n, k),
        }
    }

    /// Base parameters with the sweep variable set to `value`.
    pub fn point(&self, value: f64) -> Result<(BaseParams, f64)> {
        let mut base = self.base.clone();
        let mut eps = self.epsilon;
        let as_count = |v: f64| -> Result<usize> {
            if v.fract() != 0.0 || v < 1.0 {
                return domain(format!("sweep value {v} is not a positive integer"));
            }
            Ok(v as usize)
        };
        match self.sweep.param {
            SweepParam::K => base.k = as_count(value)?,
            SweepParam::N => base.n = as_count(value)?,
            SweepParam::PDbm => base.p_dbm = value,
            SweepParam::PtDbm => base.p_t_dbm = value,
            SweepParam::Epsilon => eps = value,
        }
        Ok((base, eps))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return domain("trials must be positive");
        }
        if self.sweep.values.is_empty() {
            return domain("sweep has no values");
        }
        if self.solvers.is_empty() {
            return domain("no solvers requested");
        }
        if self.oracle_steps < 2 {
            return domain("oracle grid needs at least 2 steps");
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return domain(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        self.solver_config.validate()?;
        for &v in &self.sweep.values {
            let (base, eps) = self.point(v)?;
            base_system(&base)?;
            if let Some(c) = &self.fixed_channels {
                if (c.n(), c.k()) != (base.n, base.k) {
                    return Err(Error::Dimension(format!(
                        "replayed channels are {}x{} but the run needs N={}, K={}",
                        c.n(),
                        c.k(),
                        base.n,
                        base.k
                    )));
                }
            }
            if self.scenario.detector().is_some() && !(eps > 0.0 && eps < 1.0) {
                return domain(format!("epsilon must lie in (0, 1), got {eps}"));
            }
            for &s in &self.solvers {
                match s {
                    SolverKind::Oracle if base.k > 2 => {
                        return Err(Error::Unsupported(format!(
                            "grid oracle needs K <= 2, sweep reaches K={}",
                            base.k
                        )))
                    }
                    SolverKind::Sdr if !self.scenario.is_homogeneous() => {
                        return Err(Error::Unsupported(
                            "semidefinite relaxation needs theta = 0 (unknown h_B)".into(),
                        ))
                    }
                    SolverKind::Ncas if self.scenario != Scenario::UnawareUnknownHb => {
                        return Err(Error::Unsupported(
                            "the non-cooperative baseline is defined for the unaware, unknown-h_B scenario"
                                .into(),
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn base_system(base: &BaseParams) -> Result<SystemParams> {
    SystemParams::from_dbm(
        base.n,
        base.k,
        base.tau,
        base.p_t_dbm,
        base.p_s_dbm,
        base.p_dbm,
    )
}

/// `(channel seed, solver seed)` of trial `trial`.
pub fn trial_seeds(seed: u64, trial: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    (rng.next_u64(), rng.next_u64())
}

/// Builds the instance of `scenario` for the given target Eve.
pub fn build_instance(
    scenario: Scenario,
    params: &SystemParams,
    channels: &ChannelRealization,
    eta: f64,
    epsilon: f64,
    target: Option<usize>,
) -> Result<ProblemData> {
    match scenario {
        Scenario::UnawareUnknownHb => build_unaware_unknown_hb(params, channels, target),
        Scenario::UnawareKnownHb => build_unaware_known_hb(params, channels, target),
        Scenario::DetectGeneral | Scenario::DetectWorst => {
            let model = detection_model(scenario, params, eta)?;
            build_detection_aware(params, channels, &model, epsilon, target)
        }
    }
}

fn detection_model(scenario: Scenario, params: &SystemParams, eta: f64) -> Result<DetectionModel> {
    let case = scenario
        .detector()
        .ok_or_else(|| Error::Domain(format!("{} has no detector", scenario.name())))?;
    DetectionModel::new(case, eta, params.n, params.sigma_bt2())
}

/// One solver run on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_value: f64,
    pub trial: usize,
    pub channel_seed: u64,
    pub solver_seed: u64,
    pub solver: SolverKind,
    pub target: usize,
    pub outcome: std::result::Result<TrialOutcome, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub snr: f64,
    pub time_ms: f64,
    pub mm_iterations: usize,
    /// `λ₂/λ₁` of the relaxed solution (SDR only).
    pub eig_ratio: f64,
    /// Relaxation bound in SNR units (SDR only).
    pub upper_bound: Option<f64>,
    /// Largest positive violation of the caps or of the detection budget.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub sweep_value: f64,
    pub solver: SolverKind,
    pub trials: usize,
    pub failures: usize,
    pub mean_snr_linear: f64,
    pub mean_snr_db: f64,
    /// Standard error of the mean, mapped to dB by the delta method.
    pub stderr_db: f64,
    pub mean_time_ms: f64,
    pub mean_mm_iters: f64,
    pub mean_eig_ratio: f64,
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub points: Vec<PointSummary>,
    pub records: Vec<TrialRecord>,
}

impl ExperimentResult {
    pub fn point(&self, sweep_value: f64, solver: SolverKind) -> Option<&PointSummary> {
        self.points
            .iter()
            .find(|p| p.sweep_value == sweep_value && p.solver == solver)
    }
}

/// Residual of a solution: cap violations and, with a detector, the excess
/// of the detection probability over the budget.
fn residual(
    data: &ProblemData,
    nu: &CVector,
    model: Option<&DetectionModel>,
    eps: f64,
) -> Result<f64> {
    let mut r = data.constraint_violation(nu)?;
    if let Some(m) = model {
        let he = data.a.mul_vec(nu)?.norm();
        r = r.max(m.detect_prob(he)? - eps);
    }
    Ok(r.max(0.0))
}

/// MM-ADMM from the random start and, optionally, from the projected
/// full-power point; the better run is returned with the summed time.
fn run_mm(
    data: &ProblemData,
    config: &SolverConfig,
    full_power_start: bool,
) -> Result<mm_admm::SolveResult> {
    let mut best = mm_admm::solve(data, config)?;
    if full_power_start {
        let full =
            CVector::from_real(&data.power_caps.iter().map(|p| p.sqrt()).collect::<Vec<_>>());
        let start = project_feasible(data, &full)?;
        let other = mm_admm::solve_from(data, config, &start)?;
        if other.objective_value > best.objective_value {
            best = other;
        }
    }
    Ok(best)
}

struct TrialContext<'a> {
    spec: &'a ExperimentSpec,
    params: SystemParams,
    eps: f64,
    value: f64,
}

impl TrialContext<'_> {
    fn run(&self, trial: usize) -> Vec<TrialRecord> {
        let spec = self.spec;
        let (channel_seed, solver_seed) = trial_seeds(spec.seed, trial as u64);
        let record = |solver, target, outcome| TrialRecord {
            sweep_value: self.value,
            trial,
            channel_seed,
            solver_seed,
            solver,
            target,
            outcome,
        };
        let channels = match spec.channels(channel_seed, self.params.n, self.params.k) {
            Ok(c) => c,
            Err(e) => {
                return spec
                    .solvers
                    .iter()
                    .map(|&s| record(s, self.params.k - 1, Err(e.to_string())))
                    .collect()
            }
        };
        // With the baseline in the run, the cooperative attack targets the
        // Eve the baseline favours so the two are directly comparable.
        let mut target = self.params.k - 1;
        let mut ncas = None;
        if spec.solvers.contains(&SolverKind::Ncas) {
            let start = Instant::now();
            let r = ncas_snr(&self.params, &channels).map(|(snr, eve)| {
                target = eve;
                (snr, start.elapsed().as_secs_f64() * 1e3)
            });
            ncas = Some(r);
        }
        spec.solvers
            .iter()
            .map(|&solver| {
                let outcome = match solver {
                    SolverKind::Ncas => {
                        ncas.clone()
                            .expect("baseline evaluated above")
                            .map(|(snr, time_ms)| TrialOutcome {
                                snr,
                                time_ms,
                                mm_iterations: 0,
                                eig_ratio: 0.0,
                                upper_bound: None,
                                residual: 0.0,
                            })
                    }
                    _ => self.solve_one(solver, &channels, target, solver_seed),
                };
                record(solver, target, outcome.map_err(|e| e.to_string()))
            })
            .collect()
    }

    fn solve_one(
        &self,
        solver: SolverKind,
        channels: &ChannelRealization,
        target: usize,
        solver_seed: u64,
    ) -> Result<TrialOutcome> {
        let spec = self.spec;
        let data = build_instance(
            spec.scenario,
            &self.params,
            channels,
            spec.eta,
            self.eps,
            Some(target),
        )?;
        let model = match spec.scenario.detector() {
            Some(_) => Some(detection_model(spec.scenario, &self.params, spec.eta)?),
            None => None,
        };
        let start = Instant::now();
        let (nu, mm_iterations, eig_ratio, upper_bound) = match solver {
            SolverKind::MmAdmm => {
                let config = SolverConfig {
                    init_seed: solver_seed,
                    ..spec.solver_config.clone()
                };
                let r = run_mm(&data, &config, spec.full_power_start)?;
                (r.nu, r.mm_iterations, 0.0, None)
            }
            SolverKind::Sdr => {
                let sol = solve_sdp(&build_sdp(&data)?, crate::sdr::DEFAULT_TOL)?;
                let bound = data.snr_scale * sol.objective;
                (sol.nu, 0, sol.eig_ratio, Some(bound))
            }
            SolverKind::Oracle => {
                let (nu, _) = oracle_grid(&data, spec.oracle_steps, spec.oracle_steps)?;
                (nu, 0, 0.0, None)
            }
            SolverKind::Ncas => unreachable!("baseline handled by the caller"),
        };
        let time_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(TrialOutcome {
            snr: crate::channel::evaluate_snr(&data, &nu)?,
            time_ms,
            mm_iterations,
            eig_ratio,
            upper_bound,
            residual: residual(&data, &nu, model.as_ref(), self.eps)?,
        })
    }
}

fn summarize(value: f64, solver: SolverKind, records: &[&TrialRecord]) -> PointSummary {
    let ok: Vec<&TrialOutcome> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .collect();
    let n = ok.len();
    let mean = |f: &dyn Fn(&TrialOutcome) -> f64| {
        if n == 0 {
            0.0
        } else {
            ok.iter().map(|o| f(o)).sum::<f64>() / n as f64
        }
    };
    let mean_snr = mean(&|o| o.snr);
    let stderr_db = if n > 1 && mean_snr > 0.0 {
        let var = ok.iter().map(|o| (o.snr - mean_snr).powi(2)).sum::<f64>() / (n - 1) as f64;
        10.0 / std::f64::consts::LN_10 * (var / n as f64).sqrt() / mean_snr
    } else {
        0.0
    };
    PointSummary {
        sweep_value: value,
        solver,
        trials: n,
        failures: records.len() - n,
        mean_snr_linear: mean_snr,
        mean_snr_db: if mean_snr > 0.0 {
            linear_to_db(mean_snr)
        } else {
            f64::NEG_INFINITY
        },
        stderr_db,
        mean_time_ms: mean(&|o| o.time_ms),
        mean_mm_iters: mean(&|o| o.mm_iterations as f64),
        mean_eig_ratio: mean(&|o| o.eig_ratio),
        constraint_residual: ok.iter().map(|o| o.residual).fold(0.0, f64::max),
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut points = Vec::new();
    let mut records = Vec::new();
    for &value in &spec.sweep.values {
        let (base, eps) = spec.point(value)?;
        let ctx = TrialContext {
            spec,
            params: base_system(&base)?,
            eps,
            value,
        };
        let per_trial: Vec<Vec<TrialRecord>> = (0..spec.trials)
            .into_par_iter()
            .map(|t| ctx.run(t))
            .collect();
        let flat: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
        for &solver in &spec.solvers {
            let mine: Vec<&TrialRecord> = flat.iter().filter(|r| r.solver == solver).collect();
            points.push(summarize(value, solver, &mine));
        }
        records.extend(flat);
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        points,
        records,
    })
}

/// Exhaustive search for `K ≤ 2`: magnitudes on `mag_steps` evenly spaced
/// points of `[0, √P_k]`, phases on `phase_steps` points of `[0, 2π)`. With
/// `θ = 0`, `γ = 0` the last phase is pinned to zero. Points violating the
/// aggregate cap are skipped.
pub fn oracle_grid(
    data: &ProblemData,
    mag_steps: usize,
    phase_steps: usize,
) -> Result<(CVector, f64)> {
    let k = data.k();
    if k > 2 {
        return Err(Error::Unsupported(format!(
            "grid oracle needs K <= 2, got K={k}"
        )));
    }
    if mag_steps < 2 || phase_steps < 1 {
        return domain("grid oracle needs at least 2 magnitudes and 1 phase");
    }
    // S = |α^Hν + θ|² / (ν^H T ν + 2 Re{w^H ν} + ‖γ‖² + ϱ), w = A^H γ.
    let t = data.a.gram();
    let w = data.a.adjoint_mul_vec(&data.gamma)?;
    let offset = data.gamma.norm_sqr() + data.varrho;
    let tol = 1e-12 * data.varpi2.max(1.0);
    let alpha_c: Vec<C64> = data.alpha.iter().map(|a| a.conj()).collect();
    let w_c: Vec<C64> = w.iter().map(|a| a.conj()).collect();

    let mags = |p: f64| -> Vec<f64> {
        (0..mag_steps)
            .map(|i| p.sqrt() * i as f64 / (mag_steps - 1) as f64)
            .collect()
    };
    let phases: Vec<C64> = (0..phase_steps)
        .map(|i| C64::from_polar(1.0, std::f64::consts::TAU * i as f64 / phase_steps as f64))
        .collect();
    let pinned = [C64::new(1.0, 0.0)];
    let last_phases: &[C64] = if data.is_homogeneous() {
        &pinned
    } else {
        &phases
    };

    let eval = |nu: &[C64]| -> Option<f64> {
        let mut quad = 0.0;
        for i in 0..k {
            for j in 0..k {
                quad += (nu[i].conj() * t[(i, j)] * nu[j]).re;
            }
        }
        if quad > data.varpi2 + tol {
            return None;
        }
        let lin: f64 = (0..k).map(|i| (w_c[i] * nu[i]).re).sum();
        let num: C64 = (0..k).map(|i| alpha_c[i] * nu[i]).sum::<C64>() + data.theta;
        Some(num.norm_sqr() / (quad + 2.0 * lin + offset))
    };

    let mut best_val = f64::NEG_INFINITY;
    let mut best = vec![C64::new(0.0, 0.0); k];
    let last = k - 1;
    let last_mags = mags(data.power_caps[last]);
    let first_mags = if k == 2 {
        mags(data.power_caps[0])
    } else {
        vec![0.0]
    };
    let first_phases: &[C64] = if k == 2 { &phases } else { &pinned };
    let mut nu = vec![C64::new(0.0, 0.0); k];
    for &r0 in &first_mags {
        for &p0 in first_phases {
            if k == 2 {
                nu[0] = p0 * r0;
            }
            for &r1 in &last_mags {
                for &p1 in last_phases {
                    nu[last] = p1 * r1;
                    if let Some(v) = eval(&nu) {
                        if v > best_val {
                            best_val = v;
                            best.copy_from_slice(&nu);
                        }
                    }
                }
            }
        }
    }
    Ok((CVector::from_vec(best), best_val))
}

/// Per-trial objective traces of MM-ADMM from random starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRun {
    pub sweep_value: f64,
    pub trial: usize,
    pub solver_seed: u64,
    pub snr_scale: f64,
    pub trace: Vec<f64>,
    pub status: SolveStatus,
}

pub fn convergence_traces(spec: &ExperimentSpec) -> Result<Vec<TraceRun>> {
    spec.validate()?;
    let mut out = Vec::new();
    for &value in &spec.sweep.values {
        let (base, eps) = spec.point(value)?;
        let params = base_system(&base)?;
        let runs: Vec<Result<TraceRun>> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let (channel_seed, solver_seed) = trial_seeds(spec.seed, trial as u64);
                let channels = spec.channels(channel_seed, params.n, params.k)?;
                let data = build_instance(spec.scenario, &params, &channels, spec.eta, eps, None)?;
                let config = SolverConfig {
                    init_seed: solver_seed,
                    ..spec.solver_config.clone()
                };
                let r = mm_admm::solve(&data, &config)?;
                Ok(TraceRun {
                    sweep_value: value,
                    trial,
                    solver_seed,
                    snr_scale: data.snr_scale,
                    trace: r.trace,
                    status: r.status,
                })
            })
            .collect();
        for r in runs {
            out.push(r?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub k: usize,
    pub solver: SolverKind,
    pub trials: usize,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSpec {
    pub scenario: Scenario,
    pub base: BaseParams,
    pub eta: f64,
    pub epsilon: f64,
    pub k_list: Vec<usize>,
    pub trials: usize,
    pub solvers: Vec<SolverKind>,
    pub solver_config: SolverConfig,
    pub seed: u64,
}

/// Mean wall time per `(K, solver)` on identical instance sets. Runs
/// sequentially so the solvers do not compete for cores.
pub fn timing_run(spec: &TimingSpec) -> Result<Vec<TimingRow>> {
    let TimingSpec {
        scenario,
        base,
        eta,
        epsilon,
        trials,
        seed,
        ..
    } = spec.clone();
    if trials == 0 {
        return domain("trials must be positive");
    }
    if !scenario.is_homogeneous() && spec.solvers.contains(&SolverKind::Sdr) {
        return Err(Error::Unsupported(
            "semidefinite relaxation needs theta = 0 (unknown h_B)".into(),
        ));
    }
    let mut rows = Vec::new();
    for &k in &spec.k_list {
        let params = base_system(&BaseParams { k, ..base.clone() })?;
        let instances: Vec<(ProblemData, u64)> = (0..trials)
            .map(|t| {
                let (cs, ss) = trial_seeds(seed, t as u64);
                let ch = generate_channels(cs, params.n, k)?;
                Ok((
                    build_instance(scenario, &params, &ch, eta, epsilon, None)?,
                    ss,
                ))
            })
            .collect::<Result<_>>()?;
        for &solver in &spec.solvers {
            let mut total = 0.0;
            for (data, ss) in &instances {
                let start = Instant::now();
                match solver {
                    SolverKind::MmAdmm => {
                        let c = SolverConfig {
                            init_seed: *ss,
                            ..spec.solver_config.clone()
                        };
                        mm_admm::solve(data, &c)?;
                    }
                    SolverKind::Sdr => {
                        solve_sdp(&build_sdp(data)?, crate::sdr::DEFAULT_TOL)?;
                    }
                    SolverKind::Oracle => {
                        oracle_grid(data, DEFAULT_ORACLE_STEPS, DEFAULT_ORACLE_STEPS)?;
                    }
                    SolverKind::Ncas => {
                        return Err(Error::Unsupported(
                            "the baseline has nothing to time".into(),
                        ))
                    }
                }
                total += start.elapsed().as_secs_f64() * 1e3;
            }
            rows.push(TimingRow {
                k,
                solver,
                trials,
                mean_ms: total / trials as f64,
            });
        }
    }
    Ok(rows)
}
