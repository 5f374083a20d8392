//! Semidefinite relaxation for the `θ = 0`, `γ = 0` case.
//!
//! Lifting `V = ννᴴ` and applying the Charnes–Cooper substitution
//! `V = X/κ` gives
//!
//! ```text
//! max Tr(ΘX)  s.t.  X_kk ≤ κ P_k,  Tr(TX) ≤ κ ϖ²,  Tr(TX) + κϱ = 1,  X ⪰ 0,  κ ≥ 0
//! ```
//!
//! with `Θ = ααᴴ`, `T = AᴴA`. Eliminating `κ = (1 − Tr(TX))/ϱ` leaves a
//! linear objective over `X ⪰ 0` with linear inequalities
//! `Tr(G_i X) ≤ b_i`:
//!
//! * cap `k`: `G = ϱ D_k + P_k T`, `b = P_k`;
//! * aggregate cap: `G = (ϱ + ϖ²) T`, `b = ϖ²` (dropped when `ϖ = ∞`);
//! * `κ ≥ 0`: `G = T`, `b = 1`.
//!
//! The reduced problem is solved by a log-barrier Newton method in
//! coordinates scaled by the Cholesky factor of the current iterate, where
//! the barrier Hessian is the identity plus one rank-one term per
//! constraint.

use crate::channel::ProblemData;
use crate::error::{Error, Result};
use crate::numerics::linalg::{cholesky, real_lstsq};
use crate::numerics::{herm_eig, CMatrix, CVector, C64};

pub const DEFAULT_TOL: f64 = 1e-8;
/// Above this `λ₂/λ₁` the extracted vector is only a heuristic.
pub const HEURISTIC_EIG_RATIO: f64 = 1e-4;
const MU0: f64 = 1.0;
const MU_FACTOR: f64 = 0.2;
const MAX_NEWTON_PER_STAGE: usize = 200;
const NEWTON_DECREMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SdpInstance {
    pub theta: CMatrix,
    pub t: CMatrix,
    pub power_caps: Vec<f64>,
    pub varpi2: f64,
    pub varrho: f64,
}

impl SdpInstance {
    pub fn k(&self) -> usize {
        self.theta.rows()
    }

    /// Constraint matrices and bounds of the κ-free problem.
    pub fn constraints(&self) -> Vec<(CMatrix, f64)> {
        let k = self.k();
        let mut out = Vec::with_capacity(k + 2);
        for (i, &p) in self.power_caps.iter().enumerate() {
            let mut g = self.t.scale_real(p);
            g[(i, i)] += C64::new(self.varrho, 0.0);
            out.push((g, p));
        }
        if self.varpi2.is_finite() {
            out.push((self.t.scale_real(self.varrho + self.varpi2), self.varpi2));
        }
        out.push((self.t.clone(), 1.0));
        out
    }

    pub fn kappa(&self, x: &CMatrix) -> Result<f64> {
        Ok((1.0 - self.t.trace_product_re(x)?) / self.varrho)
    }
}

pub fn build_sdp(data: &ProblemData) -> Result<SdpInstance> {
    if !data.is_homogeneous() {
        return Err(Error::Unsupported(
            "semidefinite relaxation needs theta = 0 and gamma = 0".into(),
        ));
    }
    let mut theta = CMatrix::outer(&data.alpha, &data.alpha);
    theta.make_hermitian()?;
    Ok(SdpInstance {
        theta,
        t: data.a.gram(),
        power_caps: data.power_caps.clone(),
        varpi2: data.varpi2,
        varrho: data.varrho,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: CMatrix,
    pub kappa: f64,
    /// `Tr(ΘX)`, equal to the relaxed fractional objective at `V = X/κ`.
    pub objective: f64,
    /// Dual objective minus primal objective at the final barrier point.
    pub duality_gap: f64,
    pub eig_ratio: f64,
    pub nu: CVector,
    /// `ν` came from a clearly higher-rank `X`.
    pub heuristic: bool,
    pub newton_steps: usize,
    /// Smallest eigenvalue of `Z = Σ λ_i G_i − Θ`.
    pub dual_min_eig: f64,
    /// `Tr(ZX)`.
    pub complementarity: f64,
    /// Largest relative violation of the reduced linear constraints.
    pub max_violation: f64,
}

/// Hermitian matrix ↔ real vector with `⟨H, M⟩ = Re Tr(HM)` as the dot
/// product: diagonal entries, then `√2 Re`, `√2 Im` of the upper triangle.
fn herm_to_vec(m: &CMatrix, out: &mut [f64]) {
    let k = m.rows();
    let mut idx = k;
    for i in 0..k {
        out[i] = m[(i, i)].re;
        for j in (i + 1)..k {
            out[idx] = std::f64::consts::SQRT_2 * m[(i, j)].re;
            out[idx + 1] = std::f64::consts::SQRT_2 * m[(i, j)].im;
            idx += 2;
        }
    }
}

fn vec_to_herm(v: &[f64], k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(k, k);
    let mut idx = k;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..k {
        m[(i, i)] = C64::new(v[i], 0.0);
        for j in (i + 1)..k {
            let z = C64::new(v[idx] * s, v[idx + 1] * s);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            idx += 2;
        }
    }
    m
}

/// `Lᴴ M L`, symmetrized.
fn congruence(l: &CMatrix, m: &CMatrix) -> Result<CMatrix> {
    let mut out = l.adjoint().matmul(&m.matmul(l)?)?;
    out.make_hermitian()?;
    Ok(out)
}

struct Barrier<'a> {
    theta: &'a CMatrix,
    cons: Vec<(CMatrix, f64)>,
}

impl Barrier<'_> {
    fn slacks(&self, x: &CMatrix) -> Result<Vec<f64>> {
        self.cons
            .iter()
            .map(|(g, b)| Ok(b - g.trace_product_re(x)?))
            .collect()
    }

    /// Barrier value up to constants, or `None` outside the domain.
    fn value(&self, x: &CMatrix, mu: f64) -> Result<Option<f64>> {
        let s = self.slacks(x)?;
        if s.iter().any(|&v| v <= 0.0) {
            return Ok(None);
        }
        let l = match cholesky(x) {
            Ok(l) => l,
            Err(_) => return Ok(None),
        };
        let logdet: f64 = (0..x.rows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
        let obj = self.theta.trace_product_re(x)?;
        Ok(Some(
            -obj / mu - logdet - s.iter().map(|v| v.ln()).sum::<f64>(),
        ))
    }

    /// One damped Newton step. Returns the new iterate and the Newton
    /// decrement.
    fn newton_step(&self, x: &CMatrix, mu: f64) -> Result<(CMatrix, f64)> {
        let k = x.rows();
        let dim = k * k;
        let l = cholesky(x)?;
        let s = self.slacks(x)?;

        let mut grad_m = congruence(&l, self.theta)?.scale_real(-1.0 / mu);
        for i in 0..k {
            grad_m[(i, i)] -= C64::new(1.0, 0.0);
        }
        let m = self.cons.len();
        let mut rows = vec![0.0; m * dim];
        for (i, ((g, _), &si)) in self.cons.iter().zip(&s).enumerate() {
            let gt = congruence(&l, g)?;
            grad_m = grad_m.add(&gt.scale_real(1.0 / si))?;
            herm_to_vec(&gt, &mut rows[i * dim..(i + 1) * dim]);
        }
        let mut g = vec![0.0; dim];
        herm_to_vec(&grad_m, &mut g);
        // Newton system (I + Cᵀ S⁻² C) d = −g. Writing d = −(g − Cᵀv) with
        // v = argmin ‖Cᵀv − g‖² + ‖Sv‖² turns it into a least-squares
        // problem whose residual is −d; forming the normal matrix instead
        // loses the identity to rounding once a slack gets tiny.
        let rows_ls = dim + m;
        let mut a = vec![0.0; rows_ls * m];
        for i in 0..m {
            a[i * rows_ls..i * rows_ls + dim].copy_from_slice(&rows[i * dim..(i + 1) * dim]);
            a[i * rows_ls + dim + i] = s[i];
        }
        let mut r = g.clone();
        r.resize(rows_ls, 0.0);
        real_lstsq(&mut a, rows_ls, m, &mut r)?;
        let d: Vec<f64> = r[..dim].iter().map(|v| -v).collect();
        let lambda2: f64 = -g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        let lambda = lambda2.max(0.0).sqrt();

        let delta = vec_to_herm(&d, k);
        let mut t = if lambda <= 0.25 {
            1.0
        } else {
            1.0 / (1.0 + lambda)
        };
        let f0 = self.value(x, mu)?;
        for _ in 0..60 {
            let mut step = CMatrix::identity(k).add(&delta.scale_real(t))?;
            step.make_hermitian()?;
            let mut next = l.matmul(&step.matmul(&l.adjoint())?)?;
            next.make_hermitian()?;
            if let Some(f1) = self.value(&next, mu)? {
                // The damped step always decreases a self-concordant
                // barrier; the check only guards against rounding.
                if f0.is_none_or(|f0| f1 <= f0 + 1e-12 * f0.abs().max(1.0)) {
                    return Ok((next, lambda));
                }
            }
            t *= 0.5;
        }
        // No decrease at all: fine if the point is already centered,
        // otherwise the direction is wrong.
        if lambda <= 1e-4 {
            return Ok((x.clone(), 0.0));
        }
        Err(Error::NumericalFailure(format!(
            "barrier line search failed at mu={mu:e} with decrement {lambda:e}"
        )))
    }
}

/// Solves the relaxation to a duality-gap tolerance `tol`.
pub fn solve_sdp(inst: &SdpInstance, tol: f64) -> Result<SdpSolution> {
    let k = inst.k();
    if !(inst.varrho > 0.0) {
        return Err(Error::Domain("varrho must be positive".into()));
    }
    let cons = inst.constraints();
    let barrier = Barrier {
        theta: &inst.theta,
        cons,
    };
    let m = k + barrier.cons.len();

    // X = cI with every slack at least half its bound.
    let c = barrier
        .cons
        .iter()
        .map(|(g, b)| b / g.trace().re)
        .fold(f64::INFINITY, f64::min)
        * 0.5;
    let mut x = CMatrix::identity(k).scale_real(c);
    let mut mu = MU0;
    let mut steps = 0;
    loop {
        let mut converged = false;
        for _ in 0..MAX_NEWTON_PER_STAGE {
            let (next, lambda) = barrier.newton_step(&x, mu)?;
            steps += 1;
            x = next;
            if lambda <= NEWTON_DECREMENT_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NumericalFailure(format!(
                "barrier stage at mu={mu:e} did not converge after {MAX_NEWTON_PER_STAGE} Newton steps"
            )));
        }
        if (m as f64) * mu <= tol {
            break;
        }
        mu *= MU_FACTOR;
    }
    finish(inst, &barrier, x, mu, steps)
}

fn finish(
    inst: &SdpInstance,
    barrier: &Barrier,
    x: CMatrix,
    mu: f64,
    steps: usize,
) -> Result<SdpSolution> {
    let s = barrier.slacks(&x)?;
    let lambdas: Vec<f64> = s.iter().map(|si| mu / si).collect();
    let mut z = inst.theta.scale_real(-1.0);
    let mut dual_obj = 0.0;
    let mut max_violation = 0.0f64;
    for ((g, b), (&lam, &si)) in barrier.cons.iter().zip(lambdas.iter().zip(&s)) {
        z = z.add(&g.scale_real(lam))?;
        dual_obj += lam * b;
        max_violation = max_violation.max(-si / b);
    }
    z.make_hermitian()?;
    let dual_min_eig = herm_eig(&z)?.eigenvalues[0];
    let complementarity = z.trace_product_re(&x)?;
    let objective = inst.theta.trace_product_re(&x)?;
    let kappa = inst.kappa(&x)?;
    let eig = herm_eig(&x)?;
    let eig_ratio = ratio_from(&eig.eigenvalues);
    let nu = extract_rank_one_from(inst, &x, kappa)?;
    Ok(SdpSolution {
        x,
        kappa,
        objective,
        duality_gap: dual_obj - objective,
        eig_ratio,
        heuristic: eig_ratio > HEURISTIC_EIG_RATIO,
        nu,
        newton_steps: steps,
        dual_min_eig,
        complementarity,
        max_violation,
    })
}

fn ratio_from(eigs: &[f64]) -> f64 {
    let n = eigs.len();
    if n < 2 {
        return 0.0;
    }
    let l1 = eigs[n - 1];
    if l1 <= 0.0 {
        return 0.0;
    }
    (eigs[n - 2] / l1).max(0.0)
}

/// `λ₂/λ₁` of a Hermitian PSD matrix; zero for `1 x 1`.
pub fn rank_ratio(x: &CMatrix) -> Result<f64> {
    Ok(ratio_from(&herm_eig(x)?.eigenvalues))
}

fn extract_rank_one_from(inst: &SdpInstance, x: &CMatrix, kappa: f64) -> Result<CVector> {
    if !(kappa > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "Charnes-Cooper scale is not positive ({kappa:e})"
        )));
    }
    let v = x.scale_real(1.0 / kappa);
    let (lam, u) = herm_eig(&v)?.largest();
    if !(lam > 0.0) {
        return Err(Error::NumericalFailure(
            "relaxed solution has no positive eigenvalue".into(),
        ));
    }
    let nu = u.scale_real(lam.sqrt());
    // Shrink uniformly until every cap holds.
    let mut shrink = 1.0f64;
    for (z, &p) in nu.iter().zip(&inst.power_caps) {
        let r = z.norm_sqr();
        if r > p {
            shrink = shrink.min((p / r).sqrt());
        }
    }
    if inst.varpi2.is_finite() {
        let an = inst.t.mul_vec(&nu)?.dot(&nu)?.re;
        if an > inst.varpi2 {
            shrink = shrink.min((inst.varpi2 / an).sqrt());
        }
    }
    Ok(nu.scale_real(shrink))
}

/// Leading-eigenvector extraction `ν = √λ₁ u₁` from `V = X/κ`, scaled down
/// just enough to satisfy every cap.
pub fn extract_rank_one(inst: &SdpInstance, sol: &SdpSolution) -> Result<CVector> {
    extract_rank_one_from(inst, &sol.x, sol.kappa)
}
