//! Fixed-size dense linear algebra for dimensions 2 and 3.
//!
//! Eigenvalues of symmetric matrices come from closed-form characteristic
//! polynomial roots (quadratic formula for 2x2, trigonometric method for
//! 3x3), so spectral quantities carry no iteration tolerance.

use crate::scalar::Real;

/// A point (or vector) in `N`-dimensional space.
pub type Point<T, const N: usize> = [T; N];

struct DimCheck<const N: usize>;

impl<const N: usize> DimCheck<N> {
    const OK: () = assert!(N == 2 || N == 3, "only dimensions 2 and 3 are supported");
}

/// Number of stored entries of a packed upper triangle.
pub const fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn packed_index<const N: usize>(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * N - i * (i + 1) / 2 + j
}

pub fn sub<T: Real, const N: usize>(a: &Point<T, N>, b: &Point<T, N>) -> Point<T, N> {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn add<T: Real, const N: usize>(a: &Point<T, N>, b: &Point<T, N>) -> Point<T, N> {
    std::array::from_fn(|i| a[i] + b[i])
}

pub fn scale<T: Real, const N: usize>(a: &Point<T, N>, s: T) -> Point<T, N> {
    std::array::from_fn(|i| a[i] * s)
}

pub fn dot<T: Real, const N: usize>(a: &Point<T, N>, b: &Point<T, N>) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real, const N: usize>(a: &Point<T, N>) -> T {
    dot(a, a).sqrt()
}

/// General square matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat<T, const N: usize>(pub [[T; N]; N]);

impl<T: Real, const N: usize> Mat<T, N> {
    pub fn zeros() -> Self {
        let () = DimCheck::<N>::OK;
        Mat([[T::zero(); N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = T::one();
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        Mat(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Mat(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..N).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
        }))
    }

    pub fn mul_vec(&self, v: &Point<T, N>) -> Point<T, N> {
        std::array::from_fn(|i| dot(&self.0[i], v))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Mat(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + rhs.0[i][j])))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Mat(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] - rhs.0[i][j])))
    }

    pub fn scaled(&self, s: T) -> Self {
        Mat(self.0.map(|row| row.map(|x| x * s)))
    }

    pub fn det(&self) -> T {
        let a = &self.0;
        match N {
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Gauss-Jordan elimination with partial pivoting. `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let mut a = self.0;
        let mut inv = Self::identity().0;
        for col in 0..N {
            let pivot = (col..N)
                .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
                .unwrap();
            if a[pivot][col] == T::zero() || !a[pivot][col].is_finite() {
                return None;
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let d = a[col][col];
            for j in 0..N {
                a[col][j] = a[col][j] / d;
                inv[col][j] = inv[col][j] / d;
            }
            for r in 0..N {
                if r != col {
                    let f = a[r][col];
                    if f != T::zero() {
                        for j in 0..N {
                            a[r][j] = a[r][j] - f * a[col][j];
                            inv[r][j] = inv[r][j] - f * inv[col][j];
                        }
                    }
                }
            }
        }
        Some(Mat(inv))
    }

    /// `AᵗA`.
    pub fn gram(&self) -> SymMat<T, N> {
        SymMat::from_fn(|i, j| (0..N).map(|k| self.0[k][i] * self.0[k][j]).sum())
    }

    /// Spectral norm: the largest singular value.
    pub fn spectral_norm(&self) -> T {
        let g = self.gram();
        g.max_eigenvalue().max(T::zero()).sqrt()
    }

    /// Smallest singular value, computed as `1/‖A⁻¹‖`; zero when singular.
    pub fn min_singular_value(&self) -> T {
        match self.inverse() {
            Some(inv) => T::one() / inv.spectral_norm(),
            None => T::zero(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.iter().flatten().map(|&x| x * x).sum::<T>().sqrt()
    }
}

/// Symmetric matrix with a single packed upper-triangle storage, so
/// `get(i, j) == get(j, i)` holds exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat<T, const N: usize> {
    packed: [T; 6],
}

impl<T: Real, const N: usize> SymMat<T, N> {
    pub fn zeros() -> Self {
        let () = DimCheck::<N>::OK;
        SymMat { packed: [T::zero(); 6] }
    }

    pub fn identity() -> Self {
        Self::from_diagonal(&[T::one(); N])
    }

    pub fn from_diagonal(d: &[T; N]) -> Self {
        let mut m = Self::zeros();
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in i..N {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Upper triangle in row order (`m11 m12 [m13] m22 [m23] [m33]`).
    pub fn from_upper(values: &[T]) -> Option<Self> {
        if values.len() != packed_len(N) {
            return None;
        }
        let mut m = Self::zeros();
        m.packed[..values.len()].copy_from_slice(values);
        Some(m)
    }

    pub fn upper(&self) -> &[T] {
        &self.packed[..packed_len(N)]
    }

    /// Symmetric part of a general matrix.
    pub fn symmetrize(a: &Mat<T, N>) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(|i, j| if i == j { a.0[i][i] } else { (a.0[i][j] + a.0[j][i]) * half })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.packed[packed_index::<N>(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.packed[packed_index::<N>(i, j)] = v;
    }

    pub fn to_mat(&self) -> Mat<T, N> {
        Mat(std::array::from_fn(|i| std::array::from_fn(|j| self.get(i, j))))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let mut m = *self;
        for x in &mut m.packed[..packed_len(N)] {
            *x = f(*x);
        }
        m
    }

    pub fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        let mut m = *self;
        for k in 0..packed_len(N) {
            m.packed[k] = f(self.packed[k], rhs.packed[k]);
        }
        m
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn add_identity(&self, s: T) -> Self {
        let mut m = *self;
        for i in 0..N {
            m.set(i, i, m.get(i, i) + s);
        }
        m
    }

    pub fn mul_vec(&self, v: &Point<T, N>) -> Point<T, N> {
        std::array::from_fn(|i| (0..N).map(|j| self.get(i, j) * v[j]).sum())
    }

    pub fn mul(&self, rhs: &Self) -> Mat<T, N> {
        Mat(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..N).map(|k| self.get(i, k) * rhs.get(k, j)).sum())
        }))
    }

    pub fn mul_mat(&self, rhs: &Mat<T, N>) -> Mat<T, N> {
        Mat(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..N).map(|k| self.get(i, k) * rhs.0[k][j]).sum())
        }))
    }

    pub fn trace(&self) -> T {
        (0..N).map(|i| self.get(i, i)).sum()
    }

    pub fn det(&self) -> T {
        self.to_mat().det()
    }

    /// Adjugate inverse. `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        let g = |i, j| self.get(i, j);
        let adj = match N {
            2 => Self::from_fn(|i, j| match (i, j) {
                (0, 0) => g(1, 1),
                (1, 1) => g(0, 0),
                _ => -g(0, 1),
            }),
            _ => Self::from_fn(|i, j| {
                // cofactor of the symmetric matrix, adj(A)_ij = C_ji = C_ij
                let (r0, r1) = match i {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let (c0, c1) = match j {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let minor = g(r0, c0) * g(r1, c1) - g(r0, c1) * g(r1, c0);
                if (i + j) % 2 == 0 {
                    minor
                } else {
                    -minor
                }
            }),
        };
        Some(adj.scaled(T::one() / d))
    }

    /// Eigenvalues in ascending order, closed form.
    pub fn eigenvalues(&self) -> [T; N] {
        let mut out = [T::zero(); N];
        match N {
            2 => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
                let half = T::lit(0.5);
                let mean = (a + c) * half;
                let radius = ((a - c) * half).hypot(b);
                out[0] = mean - radius;
                out[1] = mean + radius;
            }
            _ => {
                let e = eigenvalues_sym3(self);
                out.copy_from_slice(&e);
            }
        }
        out
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues()[N - 1]
    }

    /// Spectral norm of a symmetric matrix: largest eigenvalue magnitude.
    pub fn spectral_norm(&self) -> T {
        let e = self.eigenvalues();
        e[0].abs().max(e[N - 1].abs())
    }

    /// `vᵗ A v`.
    pub fn quadratic_form(&self, v: &Point<T, N>) -> T {
        dot(v, &self.mul_vec(v))
    }

    pub fn frobenius_norm(&self) -> T {
        self.to_mat().frobenius_norm()
    }
}

fn eigenvalues_sym3<T: Real, const N: usize>(m: &SymMat<T, N>) -> [T; 3] {
    let g = |i, j| m.get(i, j);
    let p1 = g(0, 1) * g(0, 1) + g(0, 2) * g(0, 2) + g(1, 2) * g(1, 2);
    let mut d = [g(0, 0), g(1, 1), g(2, 2)];
    if p1 == T::zero() {
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return d;
    }
    let three = T::lit(3.0);
    let q = (d[0] + d[1] + d[2]) / three;
    let p2 = (d[0] - q).powi(2) + (d[1] - q).powi(2) + (d[2] - q).powi(2) + T::lit(2.0) * p1;
    let p = (p2 / T::lit(6.0)).sqrt();
    let b = m.add_identity(-q).scaled(T::one() / p);
    let r = (b.det() / T::lit(2.0)).max(-T::one()).min(T::one());
    let phi = r.acos() / three;
    let hi = q + T::lit(2.0) * p * phi.cos();
    let lo = q + T::lit(2.0) * p * (phi + T::lit(2.0) * T::PI() / three).cos();
    let mid = three * q - hi - lo;
    let mut e = [lo, mid, hi];
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}
