//! Dense complex matrix helpers shared by every module.
//!
//! Matrices are small (at most `3^MAX_SITES` on a side), so everything is
//! dense `nalgebra` storage in double precision.

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type SpinMatrix = Matrix3<C64>;

/// Largest register handled with dense `3^n × 3^n` matrices.
pub const MAX_SITES: usize = 6;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn pow3(n: usize) -> usize {
    3usize.pow(n as u32)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn to_dynamic(m: &SpinMatrix) -> CMatrix {
    CMatrix::from_iterator(3, 3, m.iter().copied())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn spin_distance(a: &SpinMatrix, b: &SpinMatrix) -> f64 {
    (a - b).norm()
}

/// `‖M M† − I‖_F`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let prod = m * m.adjoint();
    frobenius_distance(&prod, &identity(m.nrows()))
}

/// `‖M − M†‖_F`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    frobenius_distance(m, &m.adjoint())
}

/// `tr(A B†)` without forming the product.
pub fn trace_overlap(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// Spectral decomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Self {
        // Symmetrize first so roundoff in the input never leaks an
        // anti-Hermitian part into the solver.
        let sym = (h + h.adjoint()) * re(0.5);
        let eig = sym.symmetric_eigen();
        Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        }
    }

    /// `exp(-i t H)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -t * lambda);
            for x in scaled.column_mut(k).iter_mut() {
                *x *= phase;
            }
        }
        scaled * v.adjoint()
    }
}

/// `exp(-i t H)` for Hermitian `H`, via eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    HermitianEigen::new(h).propagator(t)
}

/// Reduce an angle to `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = theta.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn expm_of_diagonal_matches_phases() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![re(1.0), re(-2.0), re(0.5)]));
        let u = expm_hermitian(&h, 0.3);
        for (k, lambda) in [1.0, -2.0, 0.5].iter().enumerate() {
            assert!((u[(k, k)] - C64::from_polar(1.0, -0.3 * lambda)).norm() < 1e-15);
        }
        assert!(unitarity_residual(&u) < 1e-14);
    }

    #[test]
    fn wrap_angle_lands_in_half_open_interval() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn trace_overlap_matches_product_trace() {
        let a = CMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMatrix::from_fn(3, 3, |i, j| c((i * j) as f64, 1.0 + i as f64));
        let direct = (&a * b.adjoint()).trace();
        assert!((trace_overlap(&a, &b) - direct).norm() < 1e-12);
    }
}
