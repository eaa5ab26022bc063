use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::spd::{sqrt_spd, SpdError, SpdMatrix};
use crate::linalg::{add, norm, scale, sub, Point, SymMat};
use crate::scalar::Real;

/// Relative step of the central difference used for analytic fields.
pub const FD_RELATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("point {point:?} lies outside the field domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("point {point:?} lies outside the simplicial complex (nearest simplex {nearest_simplex})")]
    OutsideMesh { point: Vec<f64>, nearest_simplex: usize },
    #[error("point lies on a face of simplex {simplex}; evaluate the derivative per simplex instead")]
    OnSimplexFace { simplex: usize },
    #[error("directional derivative requires a C1 or piecewise-linear field")]
    NotDifferentiable,
    #[error(transparent)]
    Spd(#[from] SpdError),
}

pub(crate) fn point_vec<T: Real, const N: usize>(p: &Point<T, N>) -> Vec<f64> {
    p.iter().map(|x| x.as_f64()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Analytic,
    PiecewiseLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C1,
    #[serde(rename = "PL")]
    Pl,
}

/// Axis-aligned bounding box of a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T, const N: usize> {
    pub lo: Point<T, N>,
    pub hi: Point<T, N>,
}

impl<T: Real, const N: usize> Aabb<T, N> {
    pub fn new(lo: Point<T, N>, hi: Point<T, N>) -> Self {
        Aabb { lo, hi }
    }

    pub fn unit() -> Self {
        Aabb { lo: [T::zero(); N], hi: [T::one(); N] }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point<T, N>>) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = *it.next()?;
        let mut b = Aabb { lo: first, hi: first };
        for p in it {
            for k in 0..N {
                b.lo[k] = b.lo[k].min(p[k]);
                b.hi[k] = b.hi[k].max(p[k]);
            }
        }
        Some(b)
    }

    pub fn extent(&self) -> Point<T, N> {
        sub(&self.hi, &self.lo)
    }

    pub fn diameter(&self) -> T {
        norm(&self.extent())
    }

    /// Inclusive containment with an absolute slack.
    pub fn contains_with(&self, p: &Point<T, N>, slack: T) -> bool {
        (0..N).all(|k| p[k] >= self.lo[k] - slack && p[k] <= self.hi[k] + slack)
    }

    /// Containment with slack `1e-12·diameter`.
    pub fn contains(&self, p: &Point<T, N>) -> bool {
        self.contains_with(p, self.diameter() * T::lit(1e-12))
    }

    pub fn shrunk(&self, margin: T) -> Self {
        Aabb {
            lo: std::array::from_fn(|k| self.lo[k] + margin),
            hi: std::array::from_fn(|k| self.hi[k] - margin),
        }
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &Point<T, N>) -> Point<T, N> {
        std::array::from_fn(|k| self.lo[k] + u[k] * (self.hi[k] - self.lo[k]))
    }
}

/// A Riemannian metric given through its square-root field `M`, with
/// `Q_p = M_pᵗ M_p = M_p²`.
pub trait MetricField<T: Real, const N: usize>: Send + Sync {
    fn kind(&self) -> FieldKind;

    fn smoothness(&self) -> Smoothness;

    /// Bounding box `Ω` of the domain.
    fn domain(&self) -> Aabb<T, N>;

    /// Whether `p` belongs to the domain (the simplicial complex for meshes).
    fn contains(&self, p: &Point<T, N>) -> bool {
        self.domain().contains(p)
    }

    /// Square-root matrix `M_p`.
    fn sqrt_metric(&self, p: &Point<T, N>) -> Result<SpdMatrix<T, N>, MetricError>;

    /// Metric `Q_p = M_p M_p`, derived on demand.
    fn metric(&self, p: &Point<T, N>) -> Result<SpdMatrix<T, N>, MetricError> {
        Ok(self.sqrt_metric(p)?.square())
    }

    /// Directional derivative `D_r M` at `p`. Linear in `r`; `r` need not
    /// be normalized.
    fn directional_derivative(
        &self,
        p: &Point<T, N>,
        r: &Point<T, N>,
    ) -> Result<SymMat<T, N>, MetricError>;

    /// Step used by finite-difference probes: `1e-5·diam(Ω)`.
    fn fd_step(&self) -> T {
        self.domain().diameter() * T::lit(FD_RELATIVE_STEP)
    }
}

type SqrtFn<T, const N: usize> = dyn Fn(&Point<T, N>) -> SymMat<T, N> + Send + Sync;

/// Field given by a closed-form square-root function.
///
/// The closure must be defined on an `fd_step` neighbourhood of `Ω` so that
/// central differences at the boundary are well defined.
pub struct AnalyticField<T, const N: usize> {
    domain: Aabb<T, N>,
    smoothness: Smoothness,
    sqrt_fn: Box<SqrtFn<T, N>>,
}

impl<T: Real, const N: usize> AnalyticField<T, N> {
    /// `f` returns `M_p` directly.
    pub fn new(
        domain: Aabb<T, N>,
        smoothness: Smoothness,
        f: impl Fn(&Point<T, N>) -> SymMat<T, N> + Send + Sync + 'static,
    ) -> Self {
        AnalyticField { domain, smoothness, sqrt_fn: Box::new(f) }
    }

    /// `f` returns the metric `Q_p`; the root is taken on every evaluation.
    pub fn from_metric(
        domain: Aabb<T, N>,
        smoothness: Smoothness,
        f: impl Fn(&Point<T, N>) -> SymMat<T, N> + Send + Sync + 'static,
    ) -> Self {
        Self::new(domain, smoothness, move |p| match SpdMatrix::new(f(p)) {
            Ok(q) => sqrt_spd(&q).into_sym(),
            Err(_) => SymMat::zeros(),
        })
    }

    /// `M_p = f(p)·I`.
    pub fn scalar(domain: Aabb<T, N>, f: impl Fn(&Point<T, N>) -> T + Send + Sync + 'static) -> Self {
        Self::new(domain, Smoothness::C1, move |p| SymMat::identity().scaled(f(p)))
    }

    pub fn constant(domain: Aabb<T, N>, m: SpdMatrix<T, N>) -> Self {
        Self::new(domain, Smoothness::C1, move |_| *m.as_sym())
    }

    /// Raw closure value without domain or positivity checks.
    pub fn eval_unchecked(&self, p: &Point<T, N>) -> SymMat<T, N> {
        (self.sqrt_fn)(p)
    }
}

impl<T: Real, const N: usize> MetricField<T, N> for AnalyticField<T, N> {
    fn kind(&self) -> FieldKind {
        FieldKind::Analytic
    }

    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    fn domain(&self) -> Aabb<T, N> {
        self.domain
    }

    fn sqrt_metric(&self, p: &Point<T, N>) -> Result<SpdMatrix<T, N>, MetricError> {
        if !self.domain.contains(p) {
            return Err(MetricError::OutsideDomain { point: point_vec(p) });
        }
        Ok(SpdMatrix::new((self.sqrt_fn)(p))?)
    }

    fn directional_derivative(
        &self,
        p: &Point<T, N>,
        r: &Point<T, N>,
    ) -> Result<SymMat<T, N>, MetricError> {
        if self.smoothness == Smoothness::C0 {
            return Err(MetricError::NotDifferentiable);
        }
        if !self.domain.contains(p) {
            return Err(MetricError::OutsideDomain { point: point_vec(p) });
        }
        let h = self.fd_step();
        let fwd = (self.sqrt_fn)(&add(p, &scale(r, h)));
        let bwd = (self.sqrt_fn)(&sub(p, &scale(r, h)));
        Ok(fwd.sub(&bwd).scaled(T::one() / (h + h)))
    }
}

/// Which quadratic-form distance defines the diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    /// Du/Wang: metric at the second argument, `‖M_b(a−b)‖`.
    Dw,
    /// Labelle/Shewchuk: metric at the first argument, `‖M_a(a−b)‖`.
    Ls,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 2] = [DistanceKind::Dw, DistanceKind::Ls];

    pub fn distance<T: Real, const N: usize>(
        self,
        field: &dyn MetricField<T, N>,
        a: &Point<T, N>,
        b: &Point<T, N>,
    ) -> Result<T, MetricError> {
        match self {
            DistanceKind::Dw => dw_distance(field, a, b),
            DistanceKind::Ls => ls_distance(field, a, b),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::Dw => "dw",
            DistanceKind::Ls => "ls",
        }
    }
}

impl std::fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DistanceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dw" => Ok(DistanceKind::Dw),
            "ls" => Ok(DistanceKind::Ls),
            other => Err(format!("unknown distance kind `{other}` (expected dw or ls)")),
        }
    }
}

/// `D^DW(a, b) = ‖M_b(a − b)‖`.
pub fn dw_distance<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    a: &Point<T, N>,
    b: &Point<T, N>,
) -> Result<T, MetricError> {
    if !field.contains(a) {
        return Err(MetricError::OutsideDomain { point: point_vec(a) });
    }
    let mb = field.sqrt_metric(b)?;
    Ok(mb.length(&sub(a, b)))
}

/// `D^LS(a, b) = ‖M_a(a − b)‖`, evaluated through the Du/Wang code path
/// with swapped arguments so the duality holds bit for bit.
pub fn ls_distance<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    a: &Point<T, N>,
    b: &Point<T, N>,
) -> Result<T, MetricError> {
    dw_distance(field, b, a)
}
