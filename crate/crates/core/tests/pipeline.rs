//! End-to-end paths through the public API: channel text round trip, every
//! scenario builder, both solvers and the Monte Carlo harness.

use psa_core::channel::{evaluate_snr, generate_channels, ChannelRealization, SystemParams};
use psa_core::detection::DetectionModel;
use psa_core::experiments::{
    build_instance, run_experiment, ExperimentSpec, Scenario, SolverKind, Sweep, SweepParam,
};
use psa_core::mm_admm::{self, SolverConfig};
use psa_core::sdr::{build_sdp, solve_sdp, DEFAULT_TOL};

#[test]
fn replayed_channels_give_the_same_solution() {
    let params = SystemParams::from_dbm(6, 3, 16, 10.0, 20.0, 10.0).unwrap();
    let ch = generate_channels(4, 6, 3).unwrap();
    let back = ChannelRealization::from_text(&ch.to_text()).unwrap();
    let config = SolverConfig {
        init_seed: 9,
        ..SolverConfig::default()
    };
    let a = build_instance(Scenario::DetectWorst, &params, &ch, 0.05, 0.2, None).unwrap();
    let b = build_instance(Scenario::DetectWorst, &params, &back, 0.05, 0.2, None).unwrap();
    let ra = mm_admm::solve(&a, &config).unwrap();
    let rb = mm_admm::solve(&b, &config).unwrap();
    assert!((ra.snr - rb.snr).abs() <= 1e-12 * ra.snr);
}

#[test]
fn every_scenario_solves_feasibly() {
    let params = SystemParams::from_dbm(8, 4, 16, 10.0, 20.0, 15.0).unwrap();
    let ch = generate_channels(11, 8, 4).unwrap();
    for scenario in [
        Scenario::UnawareUnknownHb,
        Scenario::UnawareKnownHb,
        Scenario::DetectGeneral,
        Scenario::DetectWorst,
    ] {
        let data = build_instance(scenario, &params, &ch, 0.05, 0.3, Some(1)).unwrap();
        let r = mm_admm::solve(&data, &SolverConfig::default()).unwrap();
        assert!(data.constraint_violation(&r.nu).unwrap() <= 1e-9);
        assert!((evaluate_snr(&data, &r.nu).unwrap() - r.snr).abs() <= 1e-9 * r.snr);
        if let Some(case) = scenario.detector() {
            let model = DetectionModel::new(case, 0.05, 8, params.sigma_bt2()).unwrap();
            let p = model
                .detect_prob(data.a.mul_vec(&r.nu).unwrap().norm())
                .unwrap();
            assert!(p <= 0.3 + 1e-6, "{scenario:?}: detection probability {p}");
        }
        if scenario.is_homogeneous() {
            let sol = solve_sdp(&build_sdp(&data).unwrap(), DEFAULT_TOL).unwrap();
            let bound = data.snr_scale * sol.objective;
            assert!(r.snr <= bound * (1.0 + 1e-6), "{scenario:?}");
            assert!(r.snr >= bound * 0.977, "{scenario:?}: {} vs {bound}", r.snr);
        } else {
            assert!(build_sdp(&data).is_err());
        }
    }
}

#[test]
fn harness_is_reproducible_and_scheduling_independent() {
    let mut spec = ExperimentSpec::new(
        Scenario::UnawareUnknownHb,
        Sweep {
            param: SweepParam::PtDbm,
            values: vec![0.0, 10.0],
        },
        12,
        vec![SolverKind::MmAdmm, SolverKind::Ncas],
    );
    spec.base.n = 6;
    spec.seed = 3;
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    for (x, y) in a.points.iter().zip(&b.points) {
        assert_eq!(x.mean_snr_linear, y.mean_snr_linear);
        assert_eq!(x.stderr_db, y.stderr_db);
    }
    // Records come back in trial order regardless of the worker pool.
    let trials: Vec<usize> = a
        .records
        .iter()
        .filter(|r| r.solver == SolverKind::MmAdmm && r.sweep_value == 0.0)
        .map(|r| r.trial)
        .collect();
    assert_eq!(trials, (0..12).collect::<Vec<_>>());
    for v in [0.0, 10.0] {
        let mm = a.point(v, SolverKind::MmAdmm).unwrap();
        let ncas = a.point(v, SolverKind::Ncas).unwrap();
        assert_eq!(mm.failures, 0);
        assert!(mm.mean_snr_linear >= ncas.mean_snr_linear);
    }
}
