//! MM outer loop with an ADMM inner solver for the fractional program.
//!
//! Each MM step replaces `S(ν) = |α^Hν+θ|² / (‖Aν+γ‖²+ϱ)` by the concave
//! quadratic minorant
//!
//! ```text
//! Ŝ(ν; ν̂) = −a‖Aν+γ‖² + 2b Re{β^H ν} − c
//! ```
//!
//! which touches `S` at `ν̂`. The minorant is maximized by ADMM on the split
//! `Ξ = Bν`, `B = diag(β*)`: the per-Eve caps become disc constraints on
//! `Ξ` and the aggregate cap stays with `ν`.
//!
//! ADMM stops on a relative-change test of the minorant, so its last `ν` may
//! still violate the per-Eve caps slightly. The inner defaults are tight
//! (`δ_A = 1e-8`, up to 500 iterations): with only a few ADMM iterations the
//! outer relative-change test fires on barely-moving iterates well short of
//! a stationary point. That iterate is projected onto the feasible set and only
//! accepted if its minorant value does not drop below `Ŝ(ν̂; ν̂) = S(ν̂)`;
//! this keeps every MM iterate feasible and the objective trace monotone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{objective, ProblemData};
use crate::error::{domain, Error, Result};
use crate::numerics::{herm_eig, CMatrix, CVector, C64};

/// Relative floor applied to `Y = diag(|β_k|²)` before inverting it.
pub const Y_FLOOR: f64 = 1e-12;
const MAX_ROOT_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho: f64,
    pub delta_m: f64,
    pub delta_a: f64,
    pub t_m_max: usize,
    pub t_a_max: usize,
    /// Relative tolerance on `‖Aν‖² = ϖ²` in the constrained ν-step.
    pub newton_tol: f64,
    pub init_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 0.01,
            delta_m: 1e-3,
            delta_a: 1e-8,
            t_m_max: 500,
            t_a_max: 500,
            newton_tol: 1e-12,
            init_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.rho) {
            return domain(format!("rho must be positive, got {}", self.rho));
        }
        if !(positive(self.delta_m) && positive(self.delta_a) && positive(self.newton_tol)) {
            return domain("tolerances must be positive");
        }
        if self.t_m_max == 0 || self.t_a_max == 0 {
            return domain("iteration caps must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub beta: CVector,
    /// Diagonal of `B = diag(β*)`.
    pub b_diag: CVector,
    /// Diagonal of `Y = B^H B`.
    pub y: Vec<f64>,
    /// `a A^H γ`, the linear term contributed by `γ`.
    pub lin_shift: CVector,
}

impl SurrogateCoeffs {
    /// True when `α^Hν̂ + θ = 0` and the minorant is constant.
    pub fn is_degenerate(&self) -> bool {
        self.a == 0.0 || self.y.iter().all(|&v| v == 0.0)
    }

    pub fn apply_b(&self, nu: &CVector) -> CVector {
        CVector::from_vec(
            self.b_diag
                .iter()
                .zip(nu.iter())
                .map(|(b, v)| b * v)
                .collect(),
        )
    }
}

pub fn surrogate_coeffs(data: &ProblemData, nu_hat: &CVector) -> Result<SurrogateCoeffs> {
    let x_hat = data.alpha.dot(nu_hat)? + data.theta;
    let y_hat = data.a.mul_vec(nu_hat)?.add(&data.gamma)?.norm_sqr() + data.varrho;
    let a = x_hat.norm_sqr() / (y_hat * y_hat);
    let b = 1.0 / y_hat;
    let c = a * data.varrho - 2.0 * b * (x_hat.conj() * data.theta).re;
    let beta = data.alpha.scale(x_hat);
    let b_diag = CVector::from_vec(beta.iter().map(|z| z.conj()).collect());
    let y = beta.iter().map(|z| z.norm_sqr()).collect();
    let lin_shift = data.a.adjoint_mul_vec(&data.gamma)?.scale_real(a);
    Ok(SurrogateCoeffs {
        a,
        b,
        c,
        beta,
        b_diag,
        y,
        lin_shift,
    })
}

/// `Ŝ(ν; ν̂)`.
pub fn surrogate_value(coeffs: &SurrogateCoeffs, data: &ProblemData, nu: &CVector) -> Result<f64> {
    let r = data.a.mul_vec(nu)?.add(&data.gamma)?;
    Ok(-coeffs.a * r.norm_sqr() + 2.0 * coeffs.b * coeffs.beta.dot(nu)?.re - coeffs.c)
}

/// Eigen-factorization of the ν-step system, reused across ADMM iterations
/// of one MM step.
///
/// With `Z = Y^{-1/2} T Y^{-1/2} = Q Π Q^H`, the system
/// `((a+ζ)T + (ρ/2)Y) ν = μ̃` solves as
/// `ν = Y^{-1/2} Q diag(1/((a+ζ)Π + ρ/2)) Q^H Y^{-1/2} μ̃`.
#[derive(Debug, Clone)]
pub struct NuSystem {
    y_inv_sqrt: Vec<f64>,
    q: CMatrix,
    pi: Vec<f64>,
    a: f64,
    /// Set when some `Y` entries were raised to the floor.
    pub regularized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuStep {
    pub nu: CVector,
    /// Multiplier of the aggregate cap; zero when it is slack.
    pub zeta: f64,
}

impl NuSystem {
    pub fn new(coeffs: &SurrogateCoeffs, t: &CMatrix) -> Result<Self> {
        let k = coeffs.y.len();
        if t.rows() != k || t.cols() != k {
            return Err(Error::Dimension(format!(
                "T is {}x{}, expected {k}x{k}",
                t.rows(),
                t.cols()
            )));
        }
        let y_max = coeffs.y.iter().cloned().fold(0.0, f64::max);
        let floor = if y_max > 0.0 {
            Y_FLOOR * y_max
        } else {
            Y_FLOOR
        };
        let mut regularized = false;
        let y_inv_sqrt: Vec<f64> = coeffs
            .y
            .iter()
            .map(|&v| {
                if v < floor {
                    regularized = true;
                    1.0 / floor.sqrt()
                } else {
                    1.0 / v.sqrt()
                }
            })
            .collect();
        let mut z = CMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                z[(i, j)] = t[(i, j)] * (y_inv_sqrt[i] * y_inv_sqrt[j]);
            }
        }
        z.make_hermitian()?;
        let eig = herm_eig(&z)?;
        let pi = eig.eigenvalues.iter().map(|&p| p.max(0.0)).collect();
        Ok(NuSystem {
            y_inv_sqrt,
            q: eig.eigenvectors,
            pi,
            a: coeffs.a,
            regularized,
        })
    }

    /// `μ' = Q^H Y^{-1/2} μ̃`.
    fn project(&self, mu_tilde: &CVector) -> Result<Vec<C64>> {
        let scaled = CVector::from_vec(
            mu_tilde
                .iter()
                .zip(&self.y_inv_sqrt)
                .map(|(m, s)| m * *s)
                .collect(),
        );
        Ok(self.q.adjoint_mul_vec(&scaled)?.into_vec())
    }

    fn assemble(&self, mu_p: &[C64], zeta: f64, rho: f64) -> Result<CVector> {
        let scaled = CVector::from_vec(
            mu_p.iter()
                .zip(&self.pi)
                .map(|(m, p)| m / ((self.a + zeta) * p + 0.5 * rho))
                .collect(),
        );
        let w = self.q.mul_vec(&scaled)?;
        Ok(CVector::from_vec(
            w.iter()
                .zip(&self.y_inv_sqrt)
                .map(|(x, s)| x * *s)
                .collect(),
        ))
    }

    /// `‖Aν(ζ)‖²` as a function of `ζ`.
    fn phi(&self, mu_p: &[C64], zeta: f64, rho: f64) -> f64 {
        mu_p.iter()
            .zip(&self.pi)
            .map(|(m, p)| {
                let d = (self.a + zeta) * p + 0.5 * rho;
                m.norm_sqr() * p / (d * d)
            })
            .sum()
    }

    fn dphi(&self, mu_p: &[C64], zeta: f64, rho: f64) -> f64 {
        mu_p.iter()
            .zip(&self.pi)
            .map(|(m, p)| {
                let d = (self.a + zeta) * p + 0.5 * rho;
                -2.0 * m.norm_sqr() * p * p / (d * d * d)
            })
            .sum()
    }

    /// Minimizer of the ν-step quadratic for right-hand side `μ̃`, subject
    /// to `‖Aν‖² ≤ varpi2`.
    pub fn solve(&self, mu_tilde: &CVector, varpi2: f64, rho: f64, tol: f64) -> Result<NuStep> {
        let mu_p = self.project(mu_tilde)?;
        if !varpi2.is_finite() || self.phi(&mu_p, 0.0, rho) <= varpi2 {
            return Ok(NuStep {
                nu: self.assemble(&mu_p, 0.0, rho)?,
                zeta: 0.0,
            });
        }
        let zeta = self.find_zeta(&mu_p, varpi2, rho, tol)?;
        Ok(NuStep {
            nu: self.assemble(&mu_p, zeta, rho)?,
            zeta,
        })
    }

    /// Root of `φ(ζ) = ϖ²`. Newton runs on `1/√φ`, which is concave and
    /// increasing, so iterates from the left never overshoot; bisection on
    /// the bracket catches anything else.
    fn find_zeta(&self, mu_p: &[C64], varpi2: f64, rho: f64, tol: f64) -> Result<f64> {
        // φ(ζ) ≤ Σ |μ'_k|² / (ζ² Π_k) gives an explicit upper bracket.
        let bound: f64 = mu_p
            .iter()
            .zip(&self.pi)
            .filter(|(_, &p)| p > 0.0)
            .map(|(m, p)| m.norm_sqr() / p)
            .sum();
        let mut lo = 0.0;
        let mut hi = bound.sqrt() / varpi2.sqrt();
        let target = 1.0 / varpi2.sqrt();
        let mut zeta = lo;
        for _ in 0..MAX_ROOT_ITERS {
            let phi = self.phi(mu_p, zeta, rho);
            if (phi - varpi2).abs() <= tol * varpi2 {
                return Ok(zeta);
            }
            if phi > varpi2 {
                lo = zeta;
            } else {
                hi = zeta;
            }
            let psi = 1.0 / phi.sqrt() - target;
            let dpsi = -0.5 * self.dphi(mu_p, zeta, rho) / (phi * phi.sqrt());
            let newton = zeta - psi / dpsi;
            zeta = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        let phi = self.phi(mu_p, zeta, rho);
        if (phi - varpi2).abs() <= 1e-8 * varpi2 {
            return Ok(zeta);
        }
        Err(Error::NumericalFailure(format!(
            "aggregate-cap multiplier search stalled (phi={phi:e}, target={varpi2:e})"
        )))
    }
}

/// `μ̃ = (ρ/2) B^H Ξ − ½ B^H y − a A^H γ`.
pub fn nu_rhs(coeffs: &SurrogateCoeffs, xi: &CVector, y: &CVector, rho: f64) -> CVector {
    CVector::from_vec(
        (0..coeffs.beta.len())
            .map(|k| {
                let bh = coeffs.beta[k];
                bh * (0.5 * rho) * xi[k] - bh * y[k] * 0.5 - coeffs.lin_shift[k]
            })
            .collect(),
    )
}

/// ν-step of ADMM. Builds the eigen-factorization each call; the solver
/// itself caches it per MM step through [`NuSystem`].
pub fn admm_nu_update(
    coeffs: &SurrogateCoeffs,
    data: &ProblemData,
    xi_prev: &CVector,
    y_prev: &CVector,
    config: &SolverConfig,
) -> Result<NuStep> {
    let system = NuSystem::new(coeffs, &data.a.gram())?;
    let rhs = nu_rhs(coeffs, xi_prev, y_prev, config.rho);
    system.solve(&rhs, data.varpi2, config.rho, config.newton_tol)
}

/// Ξ-step: per coordinate, the unconstrained minimizer `v_k / (ρ/2)`
/// projected radially onto `|Ξ_k| ≤ |β_k| √P_k`.
pub fn admm_xi_update(
    coeffs: &SurrogateCoeffs,
    nu: &CVector,
    y_prev: &CVector,
    power_caps: &[f64],
    rho: f64,
) -> CVector {
    let half = 0.5 * rho;
    CVector::from_vec(
        (0..nu.len())
            .map(|k| {
                let v = coeffs.b + y_prev[k] * 0.5 + coeffs.b_diag[k] * nu[k] * half;
                let radius = coeffs.beta[k].norm() * power_caps[k].sqrt();
                let mag = v.norm();
                if mag / half <= radius {
                    v / half
                } else {
                    v * (radius / mag)
                }
            })
            .collect(),
    )
}

/// Multiplier of the disc constraint on `Ξ_k` implied by the Ξ-step.
pub fn xi_multiplier(v: C64, beta_k: C64, cap: f64, rho: f64) -> f64 {
    (v.norm() / (beta_k.norm() * cap.sqrt()) - 0.5 * rho).max(0.0)
}

/// `y + ρ (Bν − Ξ)`.
pub fn admm_dual_update(
    y_prev: &CVector,
    b_diag: &CVector,
    nu: &CVector,
    xi: &CVector,
    rho: f64,
) -> CVector {
    CVector::from_vec(
        (0..nu.len())
            .map(|k| y_prev[k] + (b_diag[k] * nu[k] - xi[k]) * rho)
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    IterationCapReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub nu: CVector,
    pub objective_value: f64,
    pub snr: f64,
    pub mm_iterations: usize,
    pub total_admm_iterations: usize,
    /// Objective at the initial point followed by one entry per MM step.
    pub trace: Vec<f64>,
    pub status: SolveStatus,
    /// MM steps where neither the projected ADMM point nor the segment line
    /// search improved the minorant, so the previous iterate was kept.
    pub rejected_steps: usize,
    /// Some ν-step had to floor tiny `|β_k|²` entries.
    pub regularized: bool,
}

/// Largest `t ≤ 1` with `t·ν` inside every cap, after clipping each
/// coordinate to its own cap.
pub fn project_feasible(data: &ProblemData, nu: &CVector) -> Result<CVector> {
    let mut out = nu.clone();
    for (z, &cap) in out.as_mut_slice().iter_mut().zip(&data.power_caps) {
        let r = cap.sqrt();
        let m = z.norm();
        if m > r {
            *z *= r / m;
        }
    }
    if data.has_varpi() {
        let an = data.a.mul_vec(&out)?.norm_sqr();
        if an > data.varpi2 {
            out = out.scale_real((data.varpi2 / an).sqrt());
        }
    }
    Ok(out)
}

/// Random feasible starting point: a `CN(0, I)` draw scaled so the tightest
/// per-Eve cap is met with equality, then shrunk further if the aggregate
/// cap binds.
pub fn random_feasible_point(data: &ProblemData, seed: u64) -> Result<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw: Vec<C64> = (0..data.k())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    let chi = draw
        .iter()
        .zip(&data.power_caps)
        .map(|(z, p)| p.sqrt() / z.norm())
        .fold(f64::INFINITY, f64::min);
    let mut nu = CVector::from_vec(draw).scale_real(chi);
    if data.has_varpi() {
        let an = data.a.mul_vec(&nu)?.norm();
        if an * an > data.varpi2 {
            nu = nu.scale_real(data.varpi2.sqrt() / an);
        }
    }
    Ok(nu)
}

/// Maximizer of the minorant on the segment from `nu_hat` to `candidate`,
/// or `None` when the minorant does not increase along it. Both ends are
/// feasible, so the whole segment is.
fn segment_ascent(
    coeffs: &SurrogateCoeffs,
    data: &ProblemData,
    nu_hat: &CVector,
    candidate: &CVector,
) -> Result<Option<CVector>> {
    // Ŝ(ν̂ + tΔ) = Ŝ(ν̂) + g t − a‖AΔ‖² t².
    let delta = candidate.sub(nu_hat)?;
    let a_delta = data.a.mul_vec(&delta)?;
    let r = data.a.mul_vec(nu_hat)?.add(&data.gamma)?;
    let g = -2.0 * coeffs.a * r.dot(&a_delta)?.re + 2.0 * coeffs.b * coeffs.beta.dot(&delta)?.re;
    let curv = coeffs.a * a_delta.norm_sqr();
    if !(g > 0.0) {
        return Ok(None);
    }
    let t = if curv > 0.0 {
        (0.5 * g / curv).min(1.0)
    } else {
        1.0
    };
    Ok(Some(nu_hat.add(&delta.scale_real(t))?))
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
}

/// Runs MM-ADMM from a random feasible point drawn with `config.init_seed`.
pub fn solve(data: &ProblemData, config: &SolverConfig) -> Result<SolveResult> {
    let nu0 = random_feasible_point(data, config.init_seed)?;
    solve_from(data, config, &nu0)
}

/// Runs MM-ADMM from a caller-supplied feasible point.
pub fn solve_from(data: &ProblemData, config: &SolverConfig, nu0: &CVector) -> Result<SolveResult> {
    config.validate()?;
    if nu0.len() != data.k() {
        return Err(Error::Dimension(format!(
            "initial point has length {}, instance has K={}",
            nu0.len(),
            data.k()
        )));
    }
    if data.constraint_violation(nu0)? > 1e-9 {
        return domain("initial point violates the constraints");
    }
    let t = data.a.gram();
    let mut nu_hat = nu0.clone();
    let mut s_hat = objective(data, &nu_hat)?;
    let mut trace = vec![s_hat];
    let mut status = SolveStatus::IterationCapReached;
    let mut admm_total = 0;
    let mut rejected = 0;
    let mut regularized = false;
    let mut rerandomized = false;
    let mut mm_iters = 0;

    while mm_iters < config.t_m_max {
        let coeffs = surrogate_coeffs(data, &nu_hat)?;
        if coeffs.is_degenerate() {
            if rerandomized {
                status = SolveStatus::Converged;
                break;
            }
            rerandomized = true;
            nu_hat = random_feasible_point(data, config.init_seed.wrapping_add(1))?;
            s_hat = objective(data, &nu_hat)?;
            continue;
        }
        mm_iters += 1;
        let system = NuSystem::new(&coeffs, &t)?;
        regularized |= system.regularized;
        let base = surrogate_value(&coeffs, data, &nu_hat)?;
        let mut xi = coeffs.apply_b(&nu_hat);
        let mut y = CVector::zeros(data.k());
        let mut prev = base;
        let mut nu = nu_hat.clone();
        for _ in 0..config.t_a_max {
            let rhs = nu_rhs(&coeffs, &xi, &y, config.rho);
            nu = system
                .solve(&rhs, data.varpi2, config.rho, config.newton_tol)?
                .nu;
            xi = admm_xi_update(&coeffs, &nu, &y, &data.power_caps, config.rho);
            y = admm_dual_update(&y, &coeffs.b_diag, &nu, &xi, config.rho);
            admm_total += 1;
            let cur = surrogate_value(&coeffs, data, &nu)?;
            let change = relative_change(cur, prev);
            prev = cur;
            if change < config.delta_a {
                break;
            }
        }
        let candidate = project_feasible(data, &nu)?;
        let accepted = if surrogate_value(&coeffs, data, &candidate)? >= base {
            Some(candidate)
        } else {
            segment_ascent(&coeffs, data, &nu_hat, &candidate)?
        };

        let s_new = match accepted {
            Some(candidate) => {
                let s = objective(data, &candidate)?;
                nu_hat = candidate;
                s
            }
            None => {
                rejected += 1;
                s_hat
            }
        };
        let change = relative_change(s_new, s_hat);
        s_hat = s_new;
        trace.push(s_hat);
        if change < config.delta_m {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(SolveResult {
        objective_value: s_hat,
        snr: data.snr_scale * s_hat,
        nu: nu_hat,
        mm_iterations: mm_iters,
        total_admm_iterations: admm_total,
        trace,
        status,
        rejected_steps: rejected,
        regularized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        build_unaware_known_hb, build_unaware_unknown_hb, generate_channels, SystemParams,
    };
    use crate::numerics::solve_hpd;
    use proptest::prelude::*;

    fn instance(seed: u64, n: usize, k: usize, known: bool) -> ProblemData {
        let p = SystemParams::with_defaults(n, k).unwrap();
        let ch = generate_channels(seed, n, k).unwrap();
        if known {
            build_unaware_known_hb(&p, &ch, None).unwrap()
        } else {
            build_unaware_unknown_hb(&p, &ch, None).unwrap()
        }
    }

    fn capped(mut d: ProblemData, frac: f64) -> ProblemData {
        let full = CVector::from_real(&d.power_caps.iter().map(|p| p.sqrt()).collect::<Vec<_>>());
        d.varpi2 = frac * d.a.mul_vec(&full).unwrap().norm_sqr();
        d
    }

    fn random_point(d: &ProblemData, seed: u64, spread: f64) -> CVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CVector::from_vec(
            d.power_caps
                .iter()
                .map(|p| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re, im) * (spread * p.sqrt())
                })
                .collect(),
        )
    }

    #[test]
    fn touching_at_expansion_point() {
        for (seed, known) in [(1, false), (2, true), (3, true)] {
            let d = instance(seed, 5, 3, known);
            let nu = random_point(&d, seed + 10, 0.5);
            let c = surrogate_coeffs(&d, &nu).unwrap();
            let s = objective(&d, &nu).unwrap();
            assert!((surrogate_value(&c, &d, &nu).unwrap() - s).abs() <= 1e-10 * s.max(1.0));
        }
    }

    #[test]
    fn zero_point_gives_constant_surrogate() {
        let d = instance(4, 4, 2, false);
        let c = surrogate_coeffs(&d, &CVector::zeros(2)).unwrap();
        assert_eq!(c.a, 0.0);
        assert!(c.beta.iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert!(c.is_degenerate());
        let v1 = surrogate_value(&c, &d, &random_point(&d, 1, 1.0)).unwrap();
        let v2 = surrogate_value(&c, &d, &random_point(&d, 2, 1.0)).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn coefficients_recomputed_from_definition() {
        let d = instance(5, 6, 3, true);
        let nu = random_point(&d, 6, 0.4);
        let c = surrogate_coeffs(&d, &nu).unwrap();
        let x: C64 = (0..3).map(|k| d.alpha[k].conj() * nu[k]).sum::<C64>() + d.theta;
        let mut yv = 0.0;
        for i in 0..6 {
            let mut r = d.gamma[i];
            for k in 0..3 {
                r += d.a[(i, k)] * nu[k];
            }
            yv += r.norm_sqr();
        }
        yv += d.varrho;
        assert!((c.a - x.norm_sqr() / (yv * yv)).abs() <= 1e-12 * c.a);
        assert!((c.b - 1.0 / yv).abs() <= 1e-12 * c.b);
        for k in 0..3 {
            assert!((c.y[k] - c.beta[k].norm_sqr()).abs() <= 1e-12 * c.y[k]);
        }
    }

    #[test]
    fn gradient_matches_at_expansion_point() {
        let h = 1e-6;
        for (seed, known) in [(7, false), (8, true)] {
            let d = instance(seed, 5, 3, known);
            let nu = random_point(&d, seed + 1, 0.4);
            let c = surrogate_coeffs(&d, &nu).unwrap();
            for dir_seed in 0..6 {
                let dir = random_point(&d, 100 + dir_seed, 1.0);
                let along = |f: &dyn Fn(&CVector) -> f64| {
                    let plus = nu.add(&dir.scale_real(h)).unwrap();
                    let minus = nu.sub(&dir.scale_real(h)).unwrap();
                    (f(&plus) - f(&minus)) / (2.0 * h)
                };
                let gs = along(&|v| objective(&d, v).unwrap());
                let gh = along(&|v| surrogate_value(&c, &d, v).unwrap());
                assert!((gs - gh).abs() <= 1e-5 * gs.abs().max(1e-8), "{gs} vs {gh}");
            }
        }
    }

    #[test]
    fn minorization_on_random_points() {
        for (seed, known) in [(9, false), (10, true)] {
            let d = instance(seed, 4, 3, known);
            let nu_hat = random_point(&d, seed, 0.5);
            let c = surrogate_coeffs(&d, &nu_hat).unwrap();
            for i in 0..10_000 {
                let nu = random_point(&d, 1000 + i, 1.0);
                let s = objective(&d, &nu).unwrap();
                let sh = surrogate_value(&c, &d, &nu).unwrap();
                assert!(sh <= s + 1e-12 * s.abs().max(1.0), "{sh} > {s}");
            }
        }
    }

    #[test]
    fn surrogate_value_hand_expansion() {
        let d = instance(11, 4, 2, true);
        let nu_hat = random_point(&d, 1, 0.5);
        let nu = random_point(&d, 2, 0.5);
        let c = surrogate_coeffs(&d, &nu_hat).unwrap();
        let t = d.a.gram();
        let quad = t.mul_vec(&nu).unwrap().dot(&nu).unwrap().re;
        let cross = d.gamma.dot(&d.a.mul_vec(&nu).unwrap()).unwrap().re;
        let expanded = -c.a * (quad + 2.0 * cross + d.gamma.norm_sqr())
            + 2.0 * c.b * c.beta.dot(&nu).unwrap().re
            - c.c;
        let direct = surrogate_value(&c, &d, &nu).unwrap();
        assert!((expanded - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    fn scalar_coeffs(a: f64) -> (SurrogateCoeffs, ProblemData) {
        let mut d = instance(12, 1, 1, false);
        d.a = CMatrix::identity(1);
        d.varpi2 = f64::INFINITY;
        let c = SurrogateCoeffs {
            a,
            b: 0.3,
            c: 0.0,
            beta: CVector::from_real(&[1.0]),
            b_diag: CVector::from_real(&[1.0]),
            y: vec![1.0],
            lin_shift: CVector::zeros(1),
        };
        (c, d)
    }

    #[test]
    fn nu_update_trivial_cases() {
        let (c, d) = scalar_coeffs(0.7);
        let cfg = SolverConfig::default();
        let zero = admm_nu_update(&c, &d, &CVector::zeros(1), &CVector::zeros(1), &cfg).unwrap();
        assert_eq!(zero.nu, CVector::zeros(1));

        let xi = CVector::from_vec(vec![C64::new(2.0, -1.0)]);
        let y = CVector::from_vec(vec![C64::new(0.5, 0.25)]);
        let step = admm_nu_update(&c, &d, &xi, &y, &cfg).unwrap();
        let mu = nu_rhs(&c, &xi, &y, cfg.rho);
        let want = mu[0] / (0.7 + 0.5 * cfg.rho);
        assert!((step.nu[0] - want).norm() < 1e-14);
    }

    /// Solution of `((a+ζ)T + (ρ/2)Y) ν = μ̃` by a plain Cholesky solve.
    fn dense_nu(c: &SurrogateCoeffs, t: &CMatrix, mu: &CVector, zeta: f64, rho: f64) -> CVector {
        let m = t
            .scale_real(c.a + zeta)
            .add(&CMatrix::from_diag_real(
                &c.y.iter().map(|v| 0.5 * rho * v).collect::<Vec<_>>(),
            ))
            .unwrap();
        solve_hpd(&m, mu).unwrap()
    }

    #[test]
    fn unconstrained_nu_update_matches_dense_solve() {
        let d = instance(13, 6, 4, true);
        let nu_hat = random_point(&d, 3, 0.5);
        let c = surrogate_coeffs(&d, &nu_hat).unwrap();
        let cfg = SolverConfig::default();
        let xi = c.apply_b(&random_point(&d, 4, 1.0));
        let y = random_point(&d, 5, 0.1);
        let step = admm_nu_update(&c, &d, &xi, &y, &cfg).unwrap();
        let want = dense_nu(&c, &d.a.gram(), &nu_rhs(&c, &xi, &y, cfg.rho), 0.0, cfg.rho);
        assert!(step.nu.sub(&want).unwrap().norm() <= 1e-9 * want.norm());
        assert_eq!(step.zeta, 0.0);
    }

    #[test]
    fn constrained_nu_update_hits_cap_and_matches_grid() {
        for seed in 0..5 {
            let d = capped(instance(20 + seed, 6, 3, false), 0.05);
            let nu_hat = project_feasible(&d, &random_point(&d, seed, 0.5)).unwrap();
            let c = surrogate_coeffs(&d, &nu_hat).unwrap();
            let cfg = SolverConfig::default();
            let xi = c.apply_b(&random_point(&d, 50 + seed, 1.0));
            let y = CVector::zeros(3);
            let step = admm_nu_update(&c, &d, &xi, &y, &cfg).unwrap();
            assert!(step.zeta > 0.0);
            let an = d.a.mul_vec(&step.nu).unwrap().norm_sqr();
            assert!((an - d.varpi2).abs() <= 1e-8 * d.varpi2);
            assert!((step.zeta * (an - d.varpi2)).abs() <= 1e-6);

            let t = d.a.gram();
            let mu = nu_rhs(&c, &xi, &y, cfg.rho);
            let m = t
                .scale_real(c.a + step.zeta)
                .add(&CMatrix::from_diag_real(
                    &c.y.iter().map(|v| 0.5 * cfg.rho * v).collect::<Vec<_>>(),
                ))
                .unwrap();
            let resid = m.mul_vec(&step.nu).unwrap().sub(&mu).unwrap().norm();
            assert!(resid <= 1e-8 * mu.norm(), "stationarity {resid:e}");

            // Scan ζ on a log grid with dense solves; the crossing of the
            // cap must bracket the returned multiplier.
            let grid: Vec<f64> = (0..=4000)
                .map(|i| 10f64.powf(-12.0 + i as f64 * 0.005))
                .collect();
            let norms: Vec<f64> = grid
                .iter()
                .map(|&z| {
                    d.a.mul_vec(&dense_nu(&c, &t, &mu, z, cfg.rho))
                        .unwrap()
                        .norm_sqr()
                })
                .collect();
            let i = norms.iter().position(|&v| v <= d.varpi2).unwrap();
            assert!(i > 0);
            assert!(grid[i - 1] <= step.zeta * (1.0 + 1e-9) && step.zeta <= grid[i] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn xi_update_interior_and_boundary() {
        let d = instance(30, 4, 2, false);
        let c = surrogate_coeffs(&d, &random_point(&d, 1, 0.3)).unwrap();
        let rho = 0.01;
        let caps = [1e9, 1e-6];
        let nu = random_point(&d, 2, 1.0);
        let y = random_point(&d, 3, 0.01);
        let xi = admm_xi_update(&c, &nu, &y, &caps, rho);
        for k in 0..2 {
            let v = c.b + y[k] * 0.5 + c.b_diag[k] * nu[k] * (0.5 * rho);
            let radius = c.beta[k].norm() * caps[k].sqrt();
            if k == 0 {
                assert!((xi[k] - v / (0.5 * rho)).norm() <= 1e-12 * xi[k].norm());
                assert_eq!(xi_multiplier(v, c.beta[k], caps[k], rho), 0.0);
            } else {
                assert!((xi[k].norm() - radius).abs() <= 1e-12 * radius);
                assert!((xi[k].arg() - v.arg()).abs() <= 1e-12);
                // First-order condition of the disc subproblem at the
                // projection: (ρ/2 + λ) Ξ = v.
                let lam = xi_multiplier(v, c.beta[k], caps[k], rho);
                assert!(((0.5 * rho + lam) * xi[k] - v).norm() <= 1e-12 * v.norm());
            }
        }
    }

    #[test]
    fn dual_update_cases() {
        let b = CVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.1)]);
        let nu = CVector::from_vec(vec![C64::new(0.3, -0.2), C64::new(1.0, 1.0)]);
        let y = CVector::from_vec(vec![C64::new(0.1, 0.1), C64::new(-0.2, 0.0)]);
        let xi_exact = CVector::from_vec(vec![b[0] * nu[0], b[1] * nu[1]]);
        assert_eq!(admm_dual_update(&y, &b, &nu, &xi_exact, 0.5), y);
        let xi = CVector::from_vec(vec![C64::new(0.0, 1.0), C64::new(2.0, -1.0)]);
        let out = admm_dual_update(&y, &b, &nu, &xi, 0.5);
        for k in 0..2 {
            let want = y[k] + 0.5 * (b[k] * nu[k] - xi[k]);
            assert!((out[k] - want).norm() <= 1e-14);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let cfg = SolverConfig {
            rho: 0.0,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig {
            t_a_max: 0,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_eve_goes_to_full_power() {
        for seed in 0..5 {
            let d = instance(40 + seed, 4, 1, false);
            let r = solve(
                &d,
                &SolverConfig {
                    init_seed: seed,
                    ..SolverConfig::default()
                },
            )
            .unwrap();
            assert!(
                (r.nu[0].norm() - d.power_caps[0].sqrt()).abs() <= 1e-6,
                "{}",
                r.nu[0].norm()
            );
        }
    }

    #[test]
    fn random_start_is_feasible() {
        let d = capped(instance(50, 5, 4, false), 0.1);
        for seed in 0..20 {
            let nu = random_feasible_point(&d, seed).unwrap();
            assert!(d.constraint_violation(&nu).unwrap() <= 1e-12);
            let max_ratio = nu
                .iter()
                .zip(&d.power_caps)
                .map(|(z, p)| z.norm_sqr() / p)
                .fold(0.0, f64::max);
            let an = d.a.mul_vec(&nu).unwrap().norm_sqr();
            assert!((max_ratio - 1.0).abs() < 1e-12 || (an - d.varpi2).abs() < 1e-10 * d.varpi2);
        }
    }

    #[test]
    fn phase_rotated_start_gives_same_trace() {
        let d = instance(60, 6, 3, false);
        let nu0 = random_feasible_point(&d, 1).unwrap();
        let cfg = SolverConfig::default();
        let r1 = solve_from(&d, &cfg, &nu0).unwrap();
        let r2 = solve_from(&d, &cfg, &nu0.scale(C64::from_polar(1.0, 1.234))).unwrap();
        assert_eq!(r1.trace.len(), r2.trace.len());
        for (a, b) in r1.trace.iter().zip(&r2.trace) {
            assert!((a - b).abs() <= 1e-8 * a.max(1e-300));
        }
    }

    #[test]
    fn rejects_infeasible_start() {
        let d = instance(61, 3, 2, false);
        let bad = CVector::from_real(&[100.0, 0.0]);
        assert!(solve_from(&d, &SolverConfig::default(), &bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn solve_is_feasible_and_monotone(
            seed in 0u64..100_000,
            k in 1usize..6,
            known in any::<bool>(),
            cap_frac in prop_oneof![Just(f64::INFINITY), 0.01f64..1.0],
        ) {
            let mut d = instance(seed, 6, k, known);
            if cap_frac.is_finite() && !known {
                d = capped(d, cap_frac);
            }
            let r = solve(&d, &SolverConfig { init_seed: seed, ..SolverConfig::default() }).unwrap();
            prop_assert!(d.constraint_violation(&r.nu).unwrap() <= 1e-9);
            for w in r.trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
            }
            let s = objective(&d, &r.nu).unwrap();
            prop_assert!((s - r.objective_value).abs() <= 1e-12 * s.max(1e-300));
        }
    }
}
