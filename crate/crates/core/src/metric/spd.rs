use thiserror::Error;

use crate::linalg::{norm, Mat, Point, SymMat};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpdError {
    #[error("matrix is not positive definite: smallest eigenvalue {eigenvalue:e}")]
    NotPositiveDefinite { eigenvalue: f64 },
    #[error("matrix has non-finite entries")]
    NotFinite,
}

/// Symmetric positive-definite matrix. Positivity is checked on construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpdMatrix<T, const N: usize>(SymMat<T, N>);

impl<T: Real, const N: usize> SpdMatrix<T, N> {
    pub fn new(m: SymMat<T, N>) -> Result<Self, SpdError> {
        if m.upper().iter().any(|x| !x.is_finite()) {
            return Err(SpdError::NotFinite);
        }
        let lmin = m.min_eigenvalue();
        if !(lmin > T::zero()) {
            return Err(SpdError::NotPositiveDefinite { eigenvalue: lmin.as_f64() });
        }
        Ok(SpdMatrix(m))
    }

    pub fn identity() -> Self {
        SpdMatrix(SymMat::identity())
    }

    pub fn from_diagonal(d: &[T; N]) -> Result<Self, SpdError> {
        Self::new(SymMat::from_diagonal(d))
    }

    /// `s·I`.
    pub fn scalar(s: T) -> Result<Self, SpdError> {
        Self::from_diagonal(&[s; N])
    }

    pub fn as_sym(&self) -> &SymMat<T, N> {
        &self.0
    }

    pub fn into_sym(self) -> SymMat<T, N> {
        self.0
    }

    pub fn to_mat(&self) -> Mat<T, N> {
        self.0.to_mat()
    }

    pub fn eigenvalues(&self) -> [T; N] {
        self.0.eigenvalues()
    }

    /// Largest eigenvalue (= spectral norm).
    pub fn rho(&self) -> T {
        self.0.max_eigenvalue()
    }

    /// Smallest eigenvalue.
    pub fn rho_min(&self) -> T {
        self.0.min_eigenvalue()
    }

    pub fn inverse(&self) -> Self {
        let inv = self.0.inverse().expect("SPD matrices are invertible");
        SpdMatrix(inv)
    }

    /// `M·M`; exactly symmetric because the product of a symmetric matrix
    /// with itself sums identical terms in identical order.
    pub fn square(&self) -> Self {
        SpdMatrix(SymMat::symmetrize(&self.0.mul(&self.0)))
    }

    pub fn sqrt(&self) -> Self {
        sqrt_spd(self)
    }

    pub fn apply(&self, v: &Point<T, N>) -> Point<T, N> {
        self.0.mul_vec(v)
    }

    /// `‖M v‖`.
    pub fn length(&self, v: &Point<T, N>) -> T {
        norm(&self.0.mul_vec(v))
    }

    pub fn scaled(&self, s: T) -> Result<Self, SpdError> {
        Self::new(self.0.scaled(s))
    }
}

/// Principal square root of an SPD matrix.
///
/// Uses only the eigenvalues: with `s_i = √λ_i` the root `M` satisfies its
/// own characteristic polynomial, which combined with `M² = Q` gives
/// `M = (Q + s₁s₂ I)/(s₁ + s₂)` in 2D and
/// `M = (Q + e₂ I)⁻¹ (e₁ Q + e₃ I)` in 3D, where `e_k` are the elementary
/// symmetric polynomials of the `s_i`. Repeated eigenvalues need no special
/// case.
pub fn sqrt_spd<T: Real, const N: usize>(q: &SpdMatrix<T, N>) -> SpdMatrix<T, N> {
    let lam = q.eigenvalues();
    let s: [T; N] = std::array::from_fn(|i| lam[i].max(T::zero()).sqrt());
    let qs = q.as_sym();
    let root = match N {
        2 => qs.add_identity(s[0] * s[1]).scaled(T::one() / (s[0] + s[1])),
        _ => {
            let e1 = s[0] + s[1] + s[2];
            let e2 = s[0] * s[1] + s[0] * s[2] + s[1] * s[2];
            let e3 = s[0] * s[1] * s[2];
            let lhs = qs.add_identity(e2).inverse().expect("Q + e2 I is positive definite");
            let rhs = qs.scaled(e1).add_identity(e3);
            SymMat::symmetrize(&lhs.mul(&rhs))
        }
    };
    // eigenvalues of the root are the s_i > 0
    SpdMatrix(root)
}

/// Spectral norm of a general square matrix.
pub fn rho<T: Real, const N: usize>(a: &Mat<T, N>) -> T {
    a.spectral_norm()
}

/// Smallest eigenvalue of an SPD matrix.
pub fn rho_min<T: Real, const N: usize>(a: &SpdMatrix<T, N>) -> T {
    a.rho_min()
}

/// Smallest singular value of a non-singular matrix, `1/ρ(A⁻¹)`.
///
/// Agrees with [`rho_min`] on SPD input; on the non-symmetric products
/// `M_b M_a⁻¹` it is the quantity that bounds `‖M_b x‖/‖M_a x‖` from below.
pub fn rho_min_general<T: Real, const N: usize>(a: &Mat<T, N>) -> T {
    a.min_singular_value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_root() {
        let i = SpdMatrix::<f64, 2>::identity();
        assert_eq!(sqrt_spd(&i), i);
        let i3 = SpdMatrix::<f64, 3>::identity();
        assert_eq!(sqrt_spd(&i3), i3);
    }

    #[test]
    fn diagonal_root_is_entrywise() {
        let q = SpdMatrix::<f64, 2>::from_diagonal(&[4.0, 1.0]).unwrap();
        let m = sqrt_spd(&q);
        assert_relative_eq!(m.as_sym().get(0, 0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(m.as_sym().get(1, 1), 1.0, epsilon = 1e-15);
        assert_eq!(m.as_sym().get(0, 1), 0.0);
        let q = SpdMatrix::<f64, 3>::from_diagonal(&[9.0, 4.0, 1.0]).unwrap();
        let m = sqrt_spd(&q);
        for (i, v) in [3.0, 2.0, 1.0].into_iter().enumerate() {
            assert_relative_eq!(m.as_sym().get(i, i), v, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = SymMat::<f64, 2>::from_diagonal(&[1.0, -2.0]);
        match SpdMatrix::new(m) {
            Err(SpdError::NotPositiveDefinite { eigenvalue }) => assert_eq!(eigenvalue, -2.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SpdMatrix::new(SymMat::<f64, 3>::zeros()).is_err());
        assert_eq!(
            SpdMatrix::new(SymMat::<f64, 2>::from_diagonal(&[f64::NAN, 1.0])),
            Err(SpdError::NotFinite)
        );
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&Mat::<f64, 2>::identity()), 1.0);
        let d = SpdMatrix::<f64, 2>::from_diagonal(&[4.0, 1.0]).unwrap();
        assert_relative_eq!(rho(&d.to_mat()), 4.0, epsilon = 1e-15);
        assert_eq!(d.rho(), 4.0);
        assert_eq!(rho_min(&d), 1.0);
        assert_eq!(rho_min(&SpdMatrix::<f64, 3>::identity()), 1.0);
        assert_relative_eq!(rho_min_general(&d.to_mat()), 1.0, epsilon = 1e-15);
    }
}
