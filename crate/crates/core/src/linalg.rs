//! Dense 4×4 complex algebra.
//!
//! Levels |1⟩..|4⟩ are stored at indices 0..3.

use nalgebra::{Matrix4, Schur, Vector4};
use num_complex::Complex64;

pub type ComplexMatrix4 = Matrix4<Complex64>;
pub type StateVector4 = Vector4<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn basis(index: usize) -> StateVector4 {
    let mut v = StateVector4::zeros();
    v[index] = ONE;
    v
}

pub fn dagger(m: &ComplexMatrix4) -> ComplexMatrix4 {
    m.adjoint()
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &ComplexMatrix4) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Right-eigenvector decomposition `A = V diag(λ) V⁻¹` of a general complex
/// matrix, obtained from the complex Schur form by back substitution.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vector4<Complex64>,
    pub vectors: ComplexMatrix4,
    pub inverse: ComplexMatrix4,
    /// 1-norm condition number of `vectors`.
    pub condition: f64,
}

impl EigenDecomposition {
    /// Returns `None` when the Schur iteration fails or the eigenvector
    /// matrix is numerically singular (defective or near-defective input).
    pub fn new(a: &ComplexMatrix4) -> Option<Self> {
        let schur = Schur::try_new(*a, f64::EPSILON, 10_000)?;
        let (q, t) = schur.unpack();
        let values = Vector4::from_fn(|k, _| t[(k, k)]);
        let scale = max_abs(&t).max(f64::MIN_POSITIVE);

        // Eigenvectors of the upper-triangular factor.
        let mut x = ComplexMatrix4::zeros();
        for k in 0..4 {
            x[(k, k)] = ONE;
            for m in (0..k).rev() {
                let mut acc = ZERO;
                for n in (m + 1)..=k {
                    acc += t[(m, n)] * x[(n, k)];
                }
                let mut denom = t[(m, m)] - values[k];
                if denom.norm() < f64::EPSILON * scale {
                    // Repeated eigenvalue: perturb so the vector stays finite;
                    // the condition number below flags the result.
                    denom = Complex64::new(f64::EPSILON * scale, 0.0);
                }
                x[(m, k)] = -acc / denom;
            }
            let norm = x.column(k).norm();
            x.column_mut(k).unscale_mut(norm);
        }
        let vectors = q * x;
        let inverse = vectors.try_inverse()?;
        let condition = one_norm(&vectors) * one_norm(&inverse);
        if !condition.is_finite() {
            return None;
        }
        Some(Self { values, vectors, inverse, condition })
    }
}

fn one_norm(m: &ComplexMatrix4) -> f64 {
    (0..4).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs_random_matrix() {
        let a = ComplexMatrix4::from_fn(|i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 * 0.5 - 0.7)
        });
        let eig = EigenDecomposition::new(&a).unwrap();
        let recon = eig.vectors * ComplexMatrix4::from_diagonal(&eig.values) * eig.inverse;
        assert!(max_abs(&(recon - a)) < 1e-12, "{}", max_abs(&(recon - a)));
    }

    #[test]
    fn eigen_of_diagonal_with_repeated_values() {
        let a = ComplexMatrix4::from_diagonal(&Vector4::new(ONE, ONE, I, ZERO));
        let eig = EigenDecomposition::new(&a).unwrap();
        let recon = eig.vectors * ComplexMatrix4::from_diagonal(&eig.values) * eig.inverse;
        assert!(max_abs(&(recon - a)) < 1e-14);
    }
}
