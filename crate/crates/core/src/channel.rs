//! System parameters, channel draws, problem instances and SNR evaluation.
//!
//! Every scenario reduces to the same fractional program
//!
//! ```text
//! max_ν  |α^H ν + θ|² / (‖A ν + γ‖² + ϱ)
//! s.t.   |ν_k|² ≤ P_k,   ‖A ν‖² ≤ ϖ²
//! ```
//!
//! with `A = H_E / √P_T` and `α = A^H h_{E,K}`, where Eve `K` (the last
//! column of `H_E`) is the target. The builders below fill in `θ`, `γ`, `ϱ`
//! and `ϖ²` for each scenario.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::detection::DetectionModel;
use crate::error::{domain, Error, Result};
use crate::numerics::{CMatrix, CVector, C64};

pub const DEFAULT_TAU: u32 = 16;
pub const DEFAULT_P_T_DBM: f64 = 10.0;
pub const DEFAULT_P_S_DBM: f64 = 20.0;
pub const DEFAULT_P_DBM: f64 = 10.0;
pub const DEFAULT_NOISE_DBM: f64 = 0.0;

pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub k: usize,
    pub tau: u32,
    pub p_t: f64,
    pub p_s: f64,
    pub sigma_t2: f64,
    /// Receive noise variance of each Eve.
    pub sigma_e2: Vec<f64>,
    /// Attack power cap of each Eve.
    pub p: Vec<f64>,
}

impl SystemParams {
    /// Common caps and unit noise, all powers given in dBm.
    pub fn from_dbm(
        n: usize,
        k: usize,
        tau: u32,
        p_t_dbm: f64,
        p_s_dbm: f64,
        p_dbm: f64,
    ) -> Result<Self> {
        let noise = dbm_to_linear(DEFAULT_NOISE_DBM);
        let params = SystemParams {
            n,
            k,
            tau,
            p_t: dbm_to_linear(p_t_dbm),
            p_s: dbm_to_linear(p_s_dbm),
            sigma_t2: noise,
            sigma_e2: vec![noise; k],
            p: vec![dbm_to_linear(p_dbm); k],
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_defaults(n: usize, k: usize) -> Result<Self> {
        Self::from_dbm(
            n,
            k,
            DEFAULT_TAU,
            DEFAULT_P_T_DBM,
            DEFAULT_P_S_DBM,
            DEFAULT_P_DBM,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return domain(format!("need N, K >= 1, got N={} K={}", self.n, self.k));
        }
        if self.tau == 0 {
            return domain("pilot length must be at least 1");
        }
        if self.sigma_e2.len() != self.k || self.p.len() != self.k {
            return Err(Error::Dimension(format!(
                "per-Eve vectors must have length K={}, got {} noise and {} caps",
                self.k,
                self.sigma_e2.len(),
                self.p.len()
            )));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(self.p_t) && positive(self.p_s) && positive(self.sigma_t2)) {
            return domain("P_T, P_S and sigma_T^2 must be positive and finite");
        }
        if !self.sigma_e2.iter().chain(&self.p).all(|&x| positive(x)) {
            return domain("per-Eve noise variances and caps must be positive and finite");
        }
        Ok(())
    }

    /// Estimation noise variance seen through the pilot, `σ_T² / (τ P_T)`.
    pub fn pilot_noise(&self) -> f64 {
        self.sigma_t2 / (f64::from(self.tau) * self.p_t)
    }

    /// `σ_BT² = 1 + σ_T² / (τ P_T)`.
    pub fn sigma_bt2(&self) -> f64 {
        1.0 + self.pilot_noise()
    }

    /// Copy with the per-Eve entries reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_order(order, self.k)?;
        let mut out = self.clone();
        out.sigma_e2 = order.iter().map(|&i| self.sigma_e2[i]).collect();
        out.p = order.iter().map(|&i| self.p[i]).collect();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_b: CVector,
    /// `N x K`; column `k` is Eve `k`'s channel.
    pub h_e: CMatrix,
}

impl ChannelRealization {
    pub fn new(h_b: CVector, h_e: CMatrix) -> Result<Self> {
        if h_b.len() != h_e.rows() || h_e.cols() == 0 || h_b.is_empty() {
            return Err(Error::Dimension(format!(
                "h_B has length {} but H_E is {}x{}",
                h_b.len(),
                h_e.rows(),
                h_e.cols()
            )));
        }
        if !h_b.is_finite()
            || !h_e
                .as_slice()
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return domain("channel entries must be finite");
        }
        Ok(ChannelRealization { h_b, h_e })
    }

    pub fn n(&self) -> usize {
        self.h_b.len()
    }

    pub fn k(&self) -> usize {
        self.h_e.cols()
    }

    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_order(order, self.k())?;
        Ok(ChannelRealization {
            h_b: self.h_b.clone(),
            h_e: self.h_e.permute_columns(order)?,
        })
    }

    /// Plain-text form: a `N K` header, then one `re im` line per entry,
    /// `h_B` first and then `H_E` column by column.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.k());
        let mut push = |z: C64| out.push_str(&format!("{:e} {:e}\n", z.re, z.im));
        for &z in self.h_b.iter() {
            push(z);
        }
        for j in 0..self.k() {
            for i in 0..self.n() {
                push(self.h_e[(i, j)]);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty channel file".into()))?;
        let dims = parse_fields::<usize>(header, 2, "header")?;
        let (n, k) = (dims[0], dims[1]);
        if n == 0 || k == 0 {
            return Err(Error::Parse(format!(
                "header must have N, K >= 1: {header:?}"
            )));
        }
        let mut values = Vec::with_capacity(n * (k + 1));
        for line in lines {
            let re_im = parse_fields::<f64>(line, 2, "entry")?;
            values.push(C64::new(re_im[0], re_im[1]));
        }
        if values.len() != n * (k + 1) {
            return Err(Error::Parse(format!(
                "expected {} entries for N={n} K={k}, found {}",
                n * (k + 1),
                values.len()
            )));
        }
        let h_b = CVector::from_vec(values[..n].to_vec());
        let columns: Vec<CVector> = (0..k)
            .map(|j| CVector::from_vec(values[n * (j + 1)..n * (j + 2)].to_vec()))
            .collect();
        Self::new(h_b, CMatrix::from_columns(&columns)?)
    }
}

fn parse_fields<T: std::str::FromStr>(line: &str, count: usize, what: &str) -> Result<Vec<T>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != count {
        return Err(Error::Parse(format!(
            "{what} line needs {count} fields: {line:?}"
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| Error::Parse(format!("bad number {p:?} in {what} line")))
        })
        .collect()
}

fn check_order(order: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if order.len() != k {
        return Err(Error::Dimension(format!(
            "order has length {}, expected {k}",
            order.len()
        )));
    }
    for &i in order {
        if i >= k || seen[i] {
            return domain(format!("{order:?} is not a permutation of 0..{k}"));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Column order that moves `target` to the last position and keeps the
/// others in their original relative order.
pub fn target_order(k: usize, target: usize) -> Result<Vec<usize>> {
    if target >= k {
        return domain(format!("target Eve {target} out of range for K={k}"));
    }
    let mut order: Vec<usize> = (0..k).filter(|&i| i != target).collect();
    order.push(target);
    Ok(order)
}

fn cn_sample(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// I.i.d. `CN(0, 1)` draws, `h_B` first, then `H_E` column by column.
pub fn generate_channels(seed: u64, n: usize, k: usize) -> Result<ChannelRealization> {
    if n == 0 || k == 0 {
        return domain(format!("need N, K >= 1, got N={n} K={k}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_b = CVector::from_vec((0..n).map(|_| cn_sample(&mut rng)).collect());
    let columns: Vec<CVector> = (0..k)
        .map(|_| CVector::from_vec((0..n).map(|_| cn_sample(&mut rng)).collect()))
        .collect();
    ChannelRealization::new(h_b, CMatrix::from_columns(&columns)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub a: CMatrix,
    pub alpha: CVector,
    pub theta: C64,
    pub gamma: CVector,
    pub varrho: f64,
    pub power_caps: Vec<f64>,
    /// Cap on `‖Aν‖²`; `f64::INFINITY` when absent.
    pub varpi2: f64,
    /// `P_S / σ_{E,K}²`; turns the objective into the target's SNR.
    pub snr_scale: f64,
    /// `eve_order[i]` is the original index of the Eve in column `i`.
    pub eve_order: Vec<usize>,
}

impl ProblemData {
    pub fn k(&self) -> usize {
        self.a.cols()
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// True when `θ = 0` and `γ = 0`, the case the SDR and the global-phase
    /// reduction apply to.
    pub fn is_homogeneous(&self) -> bool {
        self.theta == C64::new(0.0, 0.0) && self.gamma.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    pub fn has_varpi(&self) -> bool {
        self.varpi2.is_finite()
    }

    /// Largest constraint violation of `nu`, relative to each bound.
    pub fn constraint_violation(&self, nu: &CVector) -> Result<f64> {
        check_len(nu, self.k())?;
        let mut worst = 0.0f64;
        for (z, &cap) in nu.iter().zip(&self.power_caps) {
            worst = worst.max(z.norm_sqr() / cap - 1.0);
        }
        if self.has_varpi() {
            let an = self.a.mul_vec(nu)?.norm_sqr();
            worst = worst.max(an / self.varpi2 - 1.0);
        }
        Ok(worst.max(0.0))
    }

    /// Map a solution back to the original Eve numbering.
    pub fn nu_in_original_order(&self, nu: &CVector) -> Result<CVector> {
        check_len(nu, self.k())?;
        let mut out = CVector::zeros(nu.len());
        for (i, &orig) in self.eve_order.iter().enumerate() {
            out[orig] = nu[i];
        }
        Ok(out)
    }
}

fn check_len(nu: &CVector, k: usize) -> Result<()> {
    if nu.len() != k {
        return Err(Error::Dimension(format!(
            "nu has length {}, instance has K={k}",
            nu.len()
        )));
    }
    Ok(())
}

fn arrange(
    params: &SystemParams,
    channels: &ChannelRealization,
    target: Option<usize>,
) -> Result<(SystemParams, ChannelRealization, Vec<usize>)> {
    params.validate()?;
    if channels.n() != params.n || channels.k() != params.k {
        return Err(Error::Dimension(format!(
            "params are N={} K={} but channels are N={} K={}",
            params.n,
            params.k,
            channels.n(),
            channels.k()
        )));
    }
    let order = target_order(params.k, target.unwrap_or(params.k - 1))?;
    Ok((params.permuted(&order)?, channels.permuted(&order)?, order))
}

fn base_instance(
    params: &SystemParams,
    channels: &ChannelRealization,
    order: Vec<usize>,
) -> Result<ProblemData> {
    let k = params.k;
    let a = channels.h_e.scale_real(1.0 / params.p_t.sqrt());
    let h_target = channels.h_e.column(k - 1);
    let alpha = a.adjoint_mul_vec(&h_target)?;
    Ok(ProblemData {
        a,
        alpha,
        theta: C64::new(0.0, 0.0),
        gamma: CVector::zeros(params.n),
        varrho: 0.0,
        power_caps: params.p.clone(),
        varpi2: f64::INFINITY,
        snr_scale: params.p_s / params.sigma_e2[k - 1],
        eve_order: order,
    })
}

/// Equivalent-noise term when the Eves treat `h_B` as unknown.
fn varrho_unknown(params: &SystemParams, h_norm2: f64, sigma_e2: f64) -> f64 {
    let s = params.sigma_bt2();
    params.p_s * s / sigma_e2 * h_norm2 + params.n as f64 * s
}

/// BS unaware of the attack, Eves ignorant of `h_B`.
pub fn build_unaware_unknown_hb(
    params: &SystemParams,
    channels: &ChannelRealization,
    target: Option<usize>,
) -> Result<ProblemData> {
    let (params, channels, order) = arrange(params, channels, target)?;
    let mut data = base_instance(&params, &channels, order)?;
    let k = params.k;
    let h_norm2 = channels.h_e.column(k - 1).norm_sqr();
    data.varrho = varrho_unknown(&params, h_norm2, params.sigma_e2[k - 1]);
    Ok(data)
}

/// BS unaware of the attack, Eves know `h_B` exactly (an upper bound).
pub fn build_unaware_known_hb(
    params: &SystemParams,
    channels: &ChannelRealization,
    target: Option<usize>,
) -> Result<ProblemData> {
    let (params, channels, order) = arrange(params, channels, target)?;
    let mut data = base_instance(&params, &channels, order)?;
    let k = params.k;
    let h_target = channels.h_e.column(k - 1);
    let pn = params.pilot_noise();
    data.theta = h_target.dot(&channels.h_b)?;
    data.gamma = channels.h_b.clone();
    data.varrho =
        params.p_s * pn / params.sigma_e2[k - 1] * h_target.norm_sqr() + params.n as f64 * pn;
    Ok(data)
}

/// BS runs a detector; the aggregate attack channel is capped so that the
/// detection probability stays at or below `epsilon`.
pub fn build_detection_aware(
    params: &SystemParams,
    channels: &ChannelRealization,
    model: &DetectionModel,
    epsilon: f64,
    target: Option<usize>,
) -> Result<ProblemData> {
    let varpi = crate::detection::power_cap_bisect(model, epsilon)?;
    let mut data = build_unaware_unknown_hb(params, channels, target)?;
    data.varpi2 = varpi * varpi;
    Ok(data)
}

/// `|α^H ν + θ|² / (‖Aν + γ‖² + ϱ)`.
pub fn objective(data: &ProblemData, nu: &CVector) -> Result<f64> {
    check_len(nu, data.k())?;
    let num = (data.alpha.dot(nu)? + data.theta).norm_sqr();
    let den = data.a.mul_vec(nu)?.add(&data.gamma)?.norm_sqr() + data.varrho;
    Ok(num / den)
}

/// Target Eve's average SNR at `nu`.
pub fn evaluate_snr(data: &ProblemData, nu: &CVector) -> Result<f64> {
    Ok(data.snr_scale * objective(data, nu)?)
}

/// Non-cooperative baseline: every Eve attacks at full power and the best
/// Eve's SNR counts. Returns the SNR and that Eve's index.
pub fn ncas_snr(params: &SystemParams, channels: &ChannelRealization) -> Result<(f64, usize)> {
    let (params, channels, _) = arrange(params, channels, None)?;
    let nu = CVector::from_real(&params.p.iter().map(|p| p.sqrt()).collect::<Vec<_>>());
    let h_agg = channels
        .h_e
        .scale_real(1.0 / params.p_t.sqrt())
        .mul_vec(&nu)?;
    let agg2 = h_agg.norm_sqr();
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 0..params.k {
        let hk = channels.h_e.column(k);
        let s2 = params.sigma_e2[k];
        let num = params.p_s * hk.dot(&h_agg)?.norm_sqr();
        let den = s2 * (varrho_unknown(&params, hk.norm_sqr(), s2) + agg2);
        let snr = num / den;
        if snr > best.0 {
            best = (snr, k);
        }
    }
    Ok(best)
}
