//! Cyclic Jacobi eigensolver for small Hermitian matrices.

use super::linalg::{CMatrix, CVector, C64, HERMITIAN_TOL};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.eigenvectors.column(i)
    }

    /// `Q diag(Λ) Q^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let q = &self.eigenvectors;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for (k, &lam) in self.eigenvalues.iter().enumerate() {
                    s += q[(i, k)] * lam * q[(j, k)].conj();
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    pub fn largest(&self) -> (f64, CVector) {
        let i = self.dim() - 1;
        (self.eigenvalues[i], self.vector(i))
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Fails with [`Error::NotHermitian`] when the input's conjugate-symmetry
/// defect exceeds `1e-12` (relative to its largest entry when that is above
/// one).
pub fn herm_eig(m: &CMatrix) -> Result<EigenDecomposition> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::Dimension(format!(
            "herm_eig needs a non-empty square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let scale = m.max_abs().max(1.0);
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    let mut a = m.clone();
    a.make_hermitian()?;
    let n = a.rows();
    let mut q = CMatrix::identity(n);

    let total: f64 = a.frobenius_norm();
    if total == 0.0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![0.0; n],
            eigenvectors: q,
        });
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = off_diagonal_sq(&a);
        if off.sqrt() <= 1e-16 * total {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                rotate(&mut a, &mut q, p, r, total);
            }
        }
    }
    if off_diagonal_sq(&a).sqrt() > 1e-12 * total {
        return Err(Error::NumericalFailure(
            "Jacobi sweeps did not converge".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = q.permute_columns(&order)?;
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_sq(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

/// One complex Jacobi rotation annihilating `a[p][r]`.
fn rotate(a: &mut CMatrix, q: &mut CMatrix, p: usize, r: usize, total: f64) {
    let apr = a[(p, r)];
    let mag = apr.norm();
    if mag <= 1e-300 || mag < 1e-18 * total {
        a[(p, r)] = C64::new(0.0, 0.0);
        a[(r, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apr / mag;
    let app = a[(p, p)].re;
    let arr = a[(r, r)].re;

    // Real rotation on the phase-normalized 2x2 block.
    let tau = (arr - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G restricted to (p, r): [[c, s], [-s * conj(phase), c * conj(phase)]].
    let u00 = C64::new(c, 0.0);
    let u01 = C64::new(s, 0.0);
    let u10 = -phase.conj() * s;
    let u11 = phase.conj() * c;

    let n = a.rows();
    for i in 0..n {
        let aip = a[(i, p)];
        let air = a[(i, r)];
        a[(i, p)] = aip * u00 + air * u10;
        a[(i, r)] = aip * u01 + air * u11;
    }
    for j in 0..n {
        let apj = a[(p, j)];
        let arj = a[(r, j)];
        a[(p, j)] = u00.conj() * apj + u10.conj() * arj;
        a[(r, j)] = u01.conj() * apj + u11.conj() * arj;
    }
    a[(p, r)] = C64::new(0.0, 0.0);
    a[(r, p)] = C64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(r, r)].im = 0.0;

    for i in 0..n {
        let qip = q[(i, p)];
        let qir = q[(i, r)];
        q[(i, p)] = qip * u00 + qir * u10;
        q[(i, r)] = qip * u01 + qir * u11;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(rng.random_range(-2.0..2.0), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn unitarity_error(q: &CMatrix) -> f64 {
        q.adjoint()
            .matmul(q)
            .unwrap()
            .sub(&CMatrix::identity(q.rows()))
            .unwrap()
            .max_abs()
    }

    #[test]
    fn identity_spectrum() {
        let e = herm_eig(&CMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_is_sorted_with_permuted_identity() {
        let e = herm_eig(&CMatrix::from_diag_real(&[5.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 5.0]);
        assert_eq!(e.eigenvectors[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(e.eigenvectors[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(e.eigenvectors[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn random_reconstruction_and_unitarity() {
        for seed in 0..20 {
            let m = random_hermitian(6, seed);
            let e = herm_eig(&m).unwrap();
            let rel = e.reconstruct().sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
            assert!(rel <= 1e-10, "seed {seed}: {rel:e}");
            assert!(unitarity_error(&e.eigenvectors) <= 1e-10);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn trace_and_shift_invariants() {
        for seed in 100..110 {
            let m = random_hermitian(7, seed);
            let e = herm_eig(&m).unwrap();
            let tr = m.trace().re;
            let sum: f64 = e.eigenvalues.iter().sum();
            assert!((sum - tr).abs() <= 1e-10 * tr.abs().max(1.0));

            let shifted = m.add(&CMatrix::identity(7).scale_real(3.5)).unwrap();
            let es = herm_eig(&shifted).unwrap();
            for (a, b) in e.eigenvalues.iter().zip(&es.eigenvalues) {
                assert!((b - a - 3.5).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = C64::new(0.3, 0.0);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian(_))));
        assert!(matches!(
            herm_eig(&CMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn rank_one_outer_product() {
        let v = CVector::from_vec(vec![
            C64::new(1.0, 1.0),
            C64::new(0.0, -2.0),
            C64::new(0.5, 0.0),
        ]);
        let e = herm_eig(&CMatrix::outer(&v, &v)).unwrap();
        let (lam, u) = e.largest();
        assert!((lam - v.norm_sqr()).abs() < 1e-12);
        assert!((u.dot(&v).unwrap().norm() - v.norm()).abs() < 1e-12);
        assert!(e.eigenvalues[0].abs() < 1e-12 && e.eigenvalues[1].abs() < 1e-12);
    }
}
