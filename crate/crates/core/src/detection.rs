//! Attack detectors at the BS and their detection probabilities.
//!
//! Under no attack the combined pilot observation is `y ~ CN(0, σ_BT² I)`;
//! under attack it is `CN(h_E, σ_BT² I)` with `h_E = Aν` the aggregate attack
//! channel. Two detectors are modelled:
//!
//! * [`DetectorCase::General`]: `h_E` unknown to the BS, energy test
//!   `‖y‖² > E_G`.
//! * [`DetectorCase::Worst`]: `h_E` known to the BS, likelihood-ratio test
//!   `(2 Re{y^H h_E} − ‖h_E‖²) / σ_BT² > Λ_W`.
//!
//! Both detection probabilities depend on `h_E` only through `‖h_E‖` and
//! increase with it, so a budget `ε` on the probability becomes a cap `ϖ` on
//! `‖Aν‖`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{erf, erfinv, inv_reg_upper_gamma, noncentral_chi2_sf, CVector, C64};

/// Bisection stops once the bracket's probabilities differ by less than this.
pub const BISECT_PROB_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorCase {
    General,
    Worst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub case: DetectorCase,
    /// False-alarm level.
    pub eta: f64,
    pub n: usize,
    pub sigma_bt2: f64,
    /// `E_G` for the general case; the worst-case threshold depends on
    /// `‖h_E‖` and is computed per query.
    pub threshold: Option<f64>,
}

impl DetectionModel {
    pub fn new(case: DetectorCase, eta: f64, n: usize, sigma_bt2: f64) -> Result<Self> {
        if n == 0 {
            return domain("detector needs N >= 1");
        }
        if !(sigma_bt2.is_finite() && sigma_bt2 > 0.0) {
            return domain(format!("sigma_BT^2 must be positive, got {sigma_bt2}"));
        }
        let threshold = match case {
            DetectorCase::General => Some(threshold_general(eta, n, sigma_bt2)?),
            DetectorCase::Worst => {
                worst_quantile(eta)?;
                None
            }
        };
        Ok(DetectionModel {
            case,
            eta,
            n,
            sigma_bt2,
            threshold,
        })
    }

    pub fn general(eta: f64, n: usize, sigma_bt2: f64) -> Result<Self> {
        Self::new(DetectorCase::General, eta, n, sigma_bt2)
    }

    pub fn worst(eta: f64, n: usize, sigma_bt2: f64) -> Result<Self> {
        Self::new(DetectorCase::Worst, eta, n, sigma_bt2)
    }

    pub fn sigma_bt(&self) -> f64 {
        self.sigma_bt2.sqrt()
    }

    /// Detection probability for an aggregate channel of norm `he_norm`.
    pub fn detect_prob(&self, he_norm: f64) -> Result<f64> {
        match self.case {
            DetectorCase::General => detect_prob_general(he_norm, self),
            DetectorCase::Worst => detect_prob_worst(he_norm, self),
        }
    }
}

/// `Φ^{-1}(1 − 2η)`, defined for `0 < η < 1/2`.
fn worst_quantile(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 0.5) {
        return domain(format!(
            "worst-case detector needs 0 < eta < 1/2, got {eta}"
        ));
    }
    erfinv(1.0 - 2.0 * eta)
}

/// Energy threshold `E_G = σ_BT² Γ_N^{-1}(η Γ_N)` giving false-alarm rate `eta`.
pub fn threshold_general(eta: f64, n: usize, sigma_bt2: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return domain(format!("false-alarm level must be in (0, 1), got {eta}"));
    }
    Ok(sigma_bt2 * inv_reg_upper_gamma(n as f64, eta)?)
}

fn check_norm(he_norm: f64) -> Result<()> {
    if !(he_norm >= 0.0) {
        return domain(format!("channel norm must be nonnegative, got {he_norm}"));
    }
    Ok(())
}

fn expect_case(model: &DetectionModel, case: DetectorCase) -> Result<()> {
    if model.case != case {
        return domain(format!(
            "expected a {case:?} detector, got {:?}",
            model.case
        ));
    }
    Ok(())
}

pub fn detect_prob_general(he_norm: f64, model: &DetectionModel) -> Result<f64> {
    expect_case(model, DetectorCase::General)?;
    check_norm(he_norm)?;
    let e_g = model
        .threshold
        .ok_or_else(|| Error::Domain("general detector without threshold".into()))?;
    let s2 = model.sigma_bt2;
    noncentral_chi2_sf(
        2 * model.n as u32,
        2.0 * he_norm * he_norm / s2,
        2.0 * e_g / s2,
    )
}

/// Likelihood-ratio threshold `Λ_W = d (2Φ^{-1}(1 − 2η) − d)` with
/// `d = ‖h_E‖ / σ_BT`.
pub fn threshold_worst(eta: f64, he_norm: f64, sigma_bt: f64) -> Result<f64> {
    let q = worst_quantile(eta)?;
    check_norm(he_norm)?;
    if he_norm == 0.0 {
        return domain("worst-case threshold is undefined for a zero attack channel");
    }
    let d = he_norm / sigma_bt;
    Ok(d * (2.0 * q - d))
}

/// `½ (1 − Φ(Φ^{-1}(1 − 2η) − ‖h_E‖/σ_BT))`.
pub fn detect_prob_worst(he_norm: f64, model: &DetectionModel) -> Result<f64> {
    expect_case(model, DetectorCase::Worst)?;
    check_norm(he_norm)?;
    let q = worst_quantile(model.eta)?;
    Ok(0.5 * (1.0 - erf(q - he_norm / model.sigma_bt())))
}

/// Largest `‖h_E‖` whose detection probability does not exceed `epsilon`.
///
/// The bracket starts at `[0, σ_BT]` and doubles its upper end until the
/// probability there reaches `epsilon`. The returned value is the lower end
/// of the final bracket, so its probability never exceeds the budget.
pub fn power_cap_bisect(model: &DetectionModel, epsilon: f64) -> Result<f64> {
    if !(epsilon < 1.0) || epsilon.is_nan() {
        return domain(format!("detection budget must be below 1, got {epsilon}"));
    }
    let p0 = model.detect_prob(0.0)?;
    if epsilon <= model.eta || epsilon <= p0 {
        return Err(Error::Infeasible(format!(
            "budget {epsilon} does not exceed the false-alarm level {}",
            model.eta
        )));
    }
    let mut lo = 0.0;
    let mut p_lo = p0;
    let mut hi = model.sigma_bt();
    let mut p_hi = model.detect_prob(hi)?;
    let mut doublings = 0;
    while p_hi < epsilon {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::NumericalFailure(format!(
                "no upper bracket for budget {epsilon} after {MAX_DOUBLINGS} doublings"
            )));
        }
        lo = hi;
        p_lo = p_hi;
        hi *= 2.0;
        p_hi = model.detect_prob(hi)?;
        doublings += 1;
    }
    while p_hi - p_lo > BISECT_PROB_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p_mid = model.detect_prob(mid)?;
        if p_mid <= epsilon {
            lo = mid;
            p_lo = p_mid;
        } else {
            hi = mid;
            p_hi = p_mid;
        }
    }
    Ok(lo)
}

fn cn_noise(rng: &mut ChaCha8Rng, std: f64) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * (std * std::f64::consts::FRAC_1_SQRT_2)
}

/// Alarm decision of `model` on observation `y`; `h_e` is the attack channel
/// the worst-case detector is matched to.
fn alarm(model: &DetectionModel, y: &[C64], h_e: &CVector, worst_threshold: f64) -> bool {
    match model.case {
        DetectorCase::General => {
            let energy: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            energy > model.threshold.unwrap_or(f64::INFINITY)
        }
        DetectorCase::Worst => {
            let cross: f64 = y
                .iter()
                .zip(h_e.iter())
                .map(|(a, b)| (a.conj() * b).re)
                .sum();
            let t = (2.0 * cross - h_e.norm_sqr()) / model.sigma_bt2;
            t > worst_threshold
        }
    }
}

fn simulate(
    model: &DetectionModel,
    h_e: &CVector,
    attack: bool,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if h_e.len() != model.n {
        return Err(Error::Dimension(format!(
            "attack channel has length {}, detector expects N={}",
            h_e.len(),
            model.n
        )));
    }
    if trials == 0 {
        return domain("need at least one trial");
    }
    let worst_threshold = match model.case {
        DetectorCase::Worst => threshold_worst(model.eta, h_e.norm(), model.sigma_bt())?,
        DetectorCase::General => 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = model.sigma_bt();
    let mut y = vec![C64::new(0.0, 0.0); model.n];
    let mut alarms = 0u64;
    for _ in 0..trials {
        for (yi, hi) in y.iter_mut().zip(h_e.iter()) {
            let noise = cn_noise(&mut rng, std);
            *yi = if attack { noise + hi } else { noise };
        }
        if alarm(model, &y, h_e, worst_threshold) {
            alarms += 1;
        }
    }
    Ok(alarms as f64 / trials as f64)
}

/// Empirical detection rate with the attack present, `y = h_E + (h_B + z)`.
pub fn simulate_detector(
    model: &DetectionModel,
    h_e: &CVector,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    simulate(model, h_e, true, trials, seed)
}

/// Empirical false-alarm rate: no attack, detector configured for `h_e`.
pub fn simulate_false_alarm(
    model: &DetectionModel,
    h_e: &CVector,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    simulate(model, h_e, false, trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::reg_upper_gamma;
    use proptest::prelude::*;

    fn binomial_se(p: f64, trials: u64) -> f64 {
        (p * (1.0 - p) / trials as f64).sqrt()
    }

    fn direction(n: usize, norm: f64) -> CVector {
        let raw: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0 + i as f64, 0.5 - i as f64))
            .collect();
        let v = CVector::from_vec(raw);
        v.scale_real(norm / v.norm())
    }

    #[test]
    fn general_threshold_single_antenna() {
        let e = threshold_general(0.05, 1, 1.0).unwrap();
        assert!((e - 2.995_732_273_553_991).abs() < 1e-9);
        let scaled = threshold_general(0.05, 1, 3.0).unwrap();
        assert!((scaled - 3.0 * e).abs() < 1e-9);
        let m = DetectionModel::general(0.05, 6, 1.2).unwrap();
        let t = m.threshold.unwrap();
        assert!((reg_upper_gamma(6.0, t / 1.2).unwrap() - 0.05).abs() < 1e-10);
    }

    #[test]
    fn general_false_alarm_simulated() {
        let m = DetectionModel::general(0.05, 10, 1.0).unwrap();
        let trials = 100_000;
        let rate = simulate_detector(&m, &CVector::zeros(10), trials, 1).unwrap();
        assert!(
            (rate - 0.05).abs() <= 3.0 * binomial_se(0.05, trials),
            "{rate}"
        );
    }

    #[test]
    fn general_probability_limits() {
        let m = DetectionModel::general(0.05, 8, 1.1).unwrap();
        assert!((detect_prob_general(0.0, &m).unwrap() - 0.05).abs() < 1e-10);
        let far = detect_prob_general(1e3 * m.sigma_bt(), &m).unwrap();
        assert!((far - 1.0).abs() < 1e-12);
        assert!(detect_prob_general(-1.0, &m).is_err());
    }

    #[test]
    fn general_probability_matches_simulation() {
        let m = DetectionModel::general(0.05, 10, 1.1).unwrap();
        let h = direction(10, 3.0);
        let p = detect_prob_general(3.0, &m).unwrap();
        let trials = 100_000;
        let rate = simulate_detector(&m, &h, trials, 2).unwrap();
        assert!(
            (rate - p).abs() <= 3.0 * binomial_se(p, trials),
            "{rate} vs {p}"
        );
    }

    #[test]
    fn worst_threshold_values() {
        let q = 0.476_936_276_204_469_9;
        let d: f64 = 0.8;
        let lam = threshold_worst(0.25, d, 1.0).unwrap();
        assert!((lam - d * (2.0 * q - d)).abs() < 1e-12);
        let q05 = erfinv(0.9).unwrap();
        let zero = threshold_worst(0.05, 2.0 * q05 * 1.5, 1.5).unwrap();
        assert!(zero.abs() < 1e-12);
        assert!(threshold_worst(0.5, 1.0, 1.0).is_err());
        assert!(threshold_worst(0.05, 0.0, 1.0).is_err());
    }

    #[test]
    fn worst_probability_special_points() {
        let m = DetectionModel::worst(0.05, 4, 1.3).unwrap();
        assert!((detect_prob_worst(0.0, &m).unwrap() - 0.05).abs() < 1e-12);
        let q = erfinv(0.9).unwrap();
        let p = detect_prob_worst(2.0 * q * m.sigma_bt(), &m).unwrap();
        assert!((p - 0.95).abs() < 1e-12);
        assert!(DetectionModel::worst(0.5, 4, 1.0).is_err());
        assert!(detect_prob_general(1.0, &m).is_err());
    }

    #[test]
    fn worst_probability_matches_simulation() {
        let m = DetectionModel::worst(0.05, 6, 1.2).unwrap();
        let norm = 1.5 * m.sigma_bt();
        let h = direction(6, norm);
        let p = detect_prob_worst(norm, &m).unwrap();
        let trials = 100_000;
        let rate = simulate_detector(&m, &h, trials, 3).unwrap();
        assert!(
            (rate - p).abs() <= 3.0 * binomial_se(p, trials),
            "{rate} vs {p}"
        );
        let fa = simulate_false_alarm(&m, &h, trials, 4).unwrap();
        assert!((fa - 0.05).abs() <= 3.0 * binomial_se(0.05, trials), "{fa}");
    }

    #[test]
    fn worst_near_zero_channel_recovers_eta() {
        let m = DetectionModel::worst(0.1, 3, 1.0).unwrap();
        let trials = 100_000;
        let rate = simulate_detector(&m, &direction(3, 1e-6), trials, 5).unwrap();
        assert!(
            (rate - 0.1).abs() <= 3.0 * binomial_se(0.1, trials),
            "{rate}"
        );
    }

    #[test]
    fn worst_cap_matches_closed_form() {
        for (eta, eps) in [(0.05, 0.2), (0.01, 0.5), (0.2, 0.9)] {
            let m = DetectionModel::worst(eta, 5, 1.4).unwrap();
            let cap = power_cap_bisect(&m, eps).unwrap();
            let want = m.sigma_bt()
                * (erfinv(1.0 - 2.0 * eta).unwrap() - erfinv(1.0 - 2.0 * eps).unwrap());
            assert!((cap - want).abs() < 1e-7 * want.max(1.0), "{cap} {want}");
        }
    }

    #[test]
    fn general_cap_validated_by_simulation() {
        let m = DetectionModel::general(0.05, 8, 1.0 + 1.0 / 160.0).unwrap();
        let cap = power_cap_bisect(&m, 0.2).unwrap();
        assert!((detect_prob_general(cap, &m).unwrap() - 0.2).abs() <= 1e-8);
        let trials = 100_000;
        let rate = simulate_detector(&m, &direction(8, cap), trials, 6).unwrap();
        assert!(
            (rate - 0.2).abs() <= 3.0 * binomial_se(0.2, trials),
            "{rate}"
        );
    }

    #[test]
    fn cap_boundaries() {
        let m = DetectionModel::general(0.05, 4, 1.0).unwrap();
        assert!(matches!(
            power_cap_bisect(&m, 0.05),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            power_cap_bisect(&m, 0.01),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(power_cap_bisect(&m, 1.0), Err(Error::Domain(_))));
        let tiny = power_cap_bisect(&m, 0.05 + 1e-9).unwrap();
        assert!(tiny < 1e-2, "{tiny}");
        let big = power_cap_bisect(&m, 1.0 - 1e-9).unwrap();
        assert!(big > 5.0, "{big}");
    }

    #[test]
    fn probabilities_increase_on_grid() {
        let g = DetectionModel::general(0.05, 6, 1.1).unwrap();
        let w = DetectionModel::worst(0.05, 6, 1.1).unwrap();
        let mut last = (0.0, 0.0);
        for i in 0..1000 {
            let x = i as f64 * 0.006;
            let now = (g.detect_prob(x).unwrap(), w.detect_prob(x).unwrap());
            if i > 0 {
                assert!(now.0 > last.0 && now.1 > last.1, "x={x}");
            }
            last = now;
        }
    }

    proptest! {
        #[test]
        fn cap_round_trip(
            worst in any::<bool>(),
            eta in 0.005f64..0.3,
            gap in 0.01f64..0.6,
            n in 1usize..16,
            s2 in 1.0f64..2.0,
        ) {
            let eps = (eta + gap).min(0.99);
            let case = if worst { DetectorCase::Worst } else { DetectorCase::General };
            let m = DetectionModel::new(case, eta, n, s2).unwrap();
            let cap = power_cap_bisect(&m, eps).unwrap();
            let p = m.detect_prob(cap).unwrap();
            prop_assert!((p - eps).abs() <= 1e-8, "p={} eps={}", p, eps);
            prop_assert!(p <= eps);
        }
    }
}
