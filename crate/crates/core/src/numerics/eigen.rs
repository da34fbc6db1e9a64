//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

use super::matrix::DenseMatrix;

/// Convergence target: off-diagonal Frobenius norm relative to `‖M‖_F`.
pub const RELATIVE_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;
pub const MAX_DIMENSION: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Off-diagonal Frobenius norm of the final rotated matrix.
    pub offdiag_residual: f64,
}

impl EigenResult {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// `max(|λ_min|, |λ_max|)`.
    pub fn spectral_radius(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

pub fn sym_eig(m: &DenseMatrix) -> Result<EigenResult> {
    jacobi(m, false).map(|(r, _)| r)
}

/// Eigenvalues plus the orthogonal matrix `Q` (eigenvectors as columns, in
/// the same ascending order) with `M ≈ Q Λ Qᵀ`.
pub fn sym_eig_with_vectors(m: &DenseMatrix) -> Result<(EigenResult, DenseMatrix)> {
    jacobi(m, true).map(|(r, q)| (r, q.expect("vectors requested")))
}

fn offdiag_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

fn jacobi(m: &DenseMatrix, want_vectors: bool) -> Result<(EigenResult, Option<DenseMatrix>)> {
    let n = m.rows();
    if m.cols() != n {
        return usage(format!(
            "eigensolver needs a square matrix, got {n}x{}",
            m.cols()
        ));
    }
    if n > MAX_DIMENSION {
        return usage(format!("eigensolver dimension {n} exceeds {MAX_DIMENSION}"));
    }
    let norm = m.frobenius_norm();
    if !m.is_symmetric(1e-12 * norm.max(1.0)) {
        return usage("eigensolver input is not symmetric");
    }
    let mut a = m.data().to_vec();
    // Symmetrize exactly so rotations see one value per pair.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    let mut q = want_vectors.then(|| DenseMatrix::identity(n).into_data());
    let tol = RELATIVE_TOLERANCE * norm;

    let mut sweeps = 0;
    let mut off = offdiag_norm(&a, n);
    while off > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {off:e})"
            )));
        }
        for p in 0..n {
            for r in p + 1..n {
                let apq = a[p * n + r];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[r * n + r];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, n, p, r, c, s);
                if let Some(q) = q.as_mut() {
                    for k in 0..n {
                        let qkp = q[k * n + p];
                        let qkq = q[k * n + r];
                        q[k * n + p] = c * qkp - s * qkq;
                        q[k * n + r] = s * qkp + c * qkq;
                    }
                }
            }
        }
        sweeps += 1;
        off = offdiag_norm(&a, n);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = q.map(|q| {
        let mut sorted = DenseMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            for k in 0..n {
                sorted.set(k, col, q[k * n + src]);
            }
        }
        sorted
    });
    Ok((
        EigenResult {
            eigenvalues,
            offdiag_residual: off,
        },
        vectors,
    ))
}

/// `A ← Jᵀ A J` for the rotation in the `(p, q)` plane.
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;
    use proptest::prelude::*;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut c = RngStream::new(seed, 99).cursor();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = c.next_normal();
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    /// Real roots of the characteristic cubic of a symmetric 3×3 matrix via
    /// the trigonometric closed form.
    fn cubic_eigenvalues(m: &DenseMatrix) -> [f64; 3] {
        let (a11, a22, a33) = (m.get(0, 0), m.get(1, 1), m.get(2, 2));
        let (a12, a13, a23) = (m.get(0, 1), m.get(0, 2), m.get(1, 2));
        let p1 = a12 * a12 + a13 * a13 + a23 * a23;
        let q = (a11 + a22 + a33) / 3.0;
        let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = |i: usize, j: usize| (m.get(i, j) - if i == j { q } else { 0.0 }) / p;
        let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
            - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        let mut e = [e1, e2, e3];
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn diagonal_input() {
        let r = sym_eig(&DenseMatrix::diagonal(&[3.0, 1.0, -2.0]).unwrap()).unwrap();
        assert_eq!(r.eigenvalues, vec![-2.0, 1.0, 3.0]);
        assert_eq!(r.offdiag_residual, 0.0);
    }

    #[test]
    fn swap_matrix() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = sym_eig(&m).unwrap();
        assert!((r.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_formula_oracle() {
        for seed in 0..50 {
            let m = random_symmetric(3, seed);
            let r = sym_eig(&m).unwrap();
            let oracle = cubic_eigenvalues(&m);
            for (a, b) in r.eigenvalues.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-10, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(sym_eig(&m), Err(Error::Usage(_))));
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(sym_eig(&rect), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_matrix() {
        let r = sym_eig(&DenseMatrix::zeros(4, 4)).unwrap();
        assert_eq!(r.eigenvalues, vec![0.0; 4]);
    }

    proptest! {
        #[test]
        fn trace_and_reconstruction(n in 1usize..24, seed in any::<u64>()) {
            let m = random_symmetric(n, seed);
            let norm = m.frobenius_norm();
            let (r, q) = sym_eig_with_vectors(&m).unwrap();
            prop_assert!(r.offdiag_residual <= RELATIVE_TOLERANCE * norm);
            prop_assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
            let sum: f64 = r.eigenvalues.iter().sum();
            prop_assert!((trace - sum).abs() <= 1e-10 * norm);
            let lam = DenseMatrix::diagonal(&r.eigenvalues).unwrap();
            let back = q.mat_mul(&lam).unwrap().mat_mul(&q.transpose()).unwrap();
            let diff: f64 = back
                .data()
                .iter()
                .zip(m.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            prop_assert!(diff <= 1e-9 * norm);
        }
    }
}
