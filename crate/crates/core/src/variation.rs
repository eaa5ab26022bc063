//! Metric-variation constants.
//!
//! `sigma1_pl_bound` is the certified, linear-time upper bound on the
//! differentiable-metric variation of a piecewise-linear field. The sampled
//! estimators are lower bounds on the true suprema and exist to check the
//! bound and its consequences; they are never used to certify.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{add, scale, sub, Point};
use crate::metric::{MetricError, MetricField, SimplicialMetricMesh};
use crate::sampling::{directions, domain_pairs, metric_ball_pairs, Halton};
use crate::scalar::Real;

/// Vertex eigenvalue below which the bound is refused.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationError {
    #[error("vertex {vertex} has smallest eigenvalue {eigenvalue:e}; the variation bound diverges")]
    DegenerateVertex { vertex: usize, eigenvalue: f64 },
    #[error("{name} must be non-negative, got {value}")]
    NegativeArgument { name: &'static str, value: f64 },
}

/// Upper bound on σ₁ together with the simplex attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sigma1Bound<T> {
    pub value: T,
    pub simplex: usize,
}

/// `max_i [Σ_k ρ(M_i^k)²]^{1/2} / min_{j∈τ_i} λ₁(v_j)²`, one constant-time
/// term per simplex.
pub fn sigma1_pl_bound<T: Real, const N: usize>(
    mesh: &SimplicialMetricMesh<T, N>,
) -> Result<Sigma1Bound<T>, VariationError> {
    let lambda: Vec<T> = (0..mesh.num_vertices()).map(|v| mesh.vertex_min_eigenvalue(v)).collect();
    let tol = T::lit(DEGENERATE_EIGENVALUE);
    if let Some((vertex, &l)) = lambda.iter().enumerate().find(|(_, &l)| !(l > tol)) {
        return Err(VariationError::DegenerateVertex { vertex, eigenvalue: l.as_f64() });
    }
    let mut best = Sigma1Bound { value: T::zero(), simplex: 0 };
    for s in 0..mesh.num_simplices() {
        let term = simplex_term(mesh, &lambda, s);
        if term > best.value {
            best = Sigma1Bound { value: term, simplex: s };
        }
    }
    Ok(best)
}

fn simplex_term<T: Real, const N: usize>(mesh: &SimplicialMetricMesh<T, N>, lambda: &[T], s: usize) -> T {
    let num: T = mesh.coordinate_derivatives(s).iter().map(|d| d.spectral_norm().powi(2)).sum::<T>().sqrt();
    let lmin = mesh.simplex(s).iter().map(|&v| lambda[v]).fold(T::infinity(), T::min);
    num / (lmin * lmin)
}

/// `ρ(D_r M_p · M_p⁻¹) / ‖M_p r‖`.
pub fn sigma1_integrand<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    p: &Point<T, N>,
    r: &Point<T, N>,
) -> Result<T, MetricError> {
    let m = field.sqrt_metric(p)?;
    let d = field.directional_derivative(p, r)?;
    let prod = d.mul(m.inverse().as_sym());
    Ok(prod.spectral_norm() / m.length(r))
}

/// `ρ(M_b M_a⁻¹ − I) / ‖M_a(a − b)‖`.
pub fn sigma0_ratio<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    a: &Point<T, N>,
    b: &Point<T, N>,
) -> Result<T, MetricError> {
    let ma = field.sqrt_metric(a)?;
    let mb = field.sqrt_metric(b)?;
    let diff = mb.as_sym().sub(ma.as_sym()).mul(ma.inverse().as_sym());
    Ok(diff.spectral_norm() / ma.length(&sub(a, b)))
}

/// Sample sizes shared by the σ₁ and σ₀ estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleOptions {
    pub num_points: usize,
    pub num_dirs: usize,
    pub num_pairs: usize,
    pub seed: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { num_points: 10_000, num_dirs: 16, num_pairs: 10_000, seed: 0 }
    }
}

/// Interior probe points: Halton points of `Ω` shrunk by the finite
/// difference step, kept only where the field is differentiable.
fn probe_points<T: Real, const N: usize>(field: &dyn MetricField<T, N>, opts: &SampleOptions) -> Vec<Point<T, N>> {
    let h = field.fd_step();
    let inner = field.domain().shrunk(h);
    let seq = Halton::new(N, opts.seed);
    (0..opts.num_points as u64).map(|i| inner.from_unit(&seq.point(i, 0))).collect()
}

/// Empirical σ₁ over Halton points × fixed directions. Points where the
/// derivative is undefined (simplex faces, outside the complex) are skipped.
pub fn sigma1_sampled<T: Real, const N: usize>(field: &dyn MetricField<T, N>, opts: &SampleOptions) -> T {
    let dirs = directions::<T, N>(opts.num_dirs);
    probe_points(field, opts)
        .par_iter()
        .map(|p| {
            dirs.iter()
                .filter_map(|r| sigma1_integrand(field, p, r).ok())
                .fold(T::zero(), T::max)
        })
        .reduce(T::zero, T::max)
}

/// Empirical σ₀: the maximum ratio over `num_pairs` Halton pairs spanning
/// the domain, and over the near-diagonal pairs `(p, p ± h r)` at every σ₁
/// probe `(p, r)` with `h = fd_step`. The near-diagonal pairs make the
/// estimate dominate `sigma1_sampled` at matched sample density.
pub fn sigma0_sampled<T: Real, const N: usize>(field: &dyn MetricField<T, N>, opts: &SampleOptions) -> T {
    let dom = field.domain();
    let global = domain_pairs(&dom, opts.num_pairs, opts.seed.wrapping_add(1))
        .collect::<Vec<_>>()
        .par_iter()
        .filter(|(a, b)| a != b)
        .filter_map(|(a, b)| sigma0_ratio(field, a, b).ok())
        .reduce(T::zero, T::max);
    let h = field.fd_step();
    let dirs = directions::<T, N>(opts.num_dirs);
    let local = probe_points(field, opts)
        .par_iter()
        .map(|p| {
            let mut best = T::zero();
            for r in &dirs {
                let step = scale(r, h);
                for b in [add(p, &step), sub(p, &step)] {
                    if let Ok(v) = sigma0_ratio(field, p, &b) {
                        best = best.max(v);
                    }
                }
            }
            best
        })
        .reduce(T::zero, T::max);
    global.max(local)
}

/// Largest σ₀ ratio among pairs with `‖M_a(a − b)‖ ≤ c`, plus the ratios.
pub fn sigma0_restricted_ratios<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    c: T,
    num_pairs: usize,
    seed: u64,
) -> Vec<T> {
    metric_ball_pairs(field, c, num_pairs, seed)
        .par_iter()
        .filter_map(|(a, b)| sigma0_ratio(field, a, b).ok())
        .collect()
}

/// `σ₁(1 + Cσ₁ + (Cσ₁)²/3)`, an upper bound on σ₀ restricted to pairs
/// within metric range `C`.
pub fn sigma0_of_c_bound<T: Real>(sigma1: T, c: T) -> Result<T, VariationError> {
    if !(sigma1 >= T::zero()) {
        return Err(VariationError::NegativeArgument { name: "sigma1", value: sigma1.as_f64() });
    }
    if !(c >= T::zero()) {
        return Err(VariationError::NegativeArgument { name: "C", value: c.as_f64() });
    }
    let x = c * sigma1;
    Ok(sigma1 * (T::one() + x + x * x / T::lit(3.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    PlBound,
    HaltonSampled,
    ClosedForm,
}

/// Certified bound and sampled estimates side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport<T> {
    pub sigma1_bound: T,
    pub sigma1_bound_simplex: usize,
    pub sigma1_bound_method: EstimateMethod,
    pub sigma1_sampled: Option<T>,
    pub sigma0_sampled: Option<T>,
    pub sampled_method: Option<EstimateMethod>,
    pub samples: Option<SampleOptions>,
    pub cover: Option<T>,
    pub sigma0_of_c_bound: Option<T>,
}

pub fn variation_report<T: Real, const N: usize>(
    mesh: &SimplicialMetricMesh<T, N>,
    sampled: Option<&SampleOptions>,
    cover: Option<T>,
) -> Result<VariationReport<T>, VariationError> {
    let bound = sigma1_pl_bound(mesh)?;
    let sigma0_of_c = cover.map(|c| sigma0_of_c_bound(bound.value, c)).transpose()?;
    Ok(VariationReport {
        sigma1_bound: bound.value,
        sigma1_bound_simplex: bound.simplex,
        sigma1_bound_method: EstimateMethod::PlBound,
        sigma1_sampled: sampled.map(|o| sigma1_sampled(mesh, o)),
        sigma0_sampled: sampled.map(|o| sigma0_sampled(mesh, o)),
        sampled_method: sampled.map(|_| EstimateMethod::HaltonSampled),
        samples: sampled.copied(),
        cover,
        sigma0_of_c_bound: sigma0_of_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMat;
    use crate::metric::{Aabb, AnalyticField, SpdMatrix};
    use approx::assert_relative_eq;

    fn ramp_triangle(s: f64) -> SimplicialMetricMesh<f64, 2> {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mats = verts.iter().map(|p: &[f64; 2]| SymMat::identity().scaled(s * (1.0 + p[0]))).collect();
        SimplicialMetricMesh::new(verts, vec![0, 1, 2], mats).unwrap()
    }

    #[test]
    fn constant_field_has_zero_variation() {
        let mesh = SimplicialMetricMesh::<f64, 2>::lattice(Aabb::unit(), [4, 4], |_| {
            SymMat::from_upper(&[2.0, 0.3, 1.0]).unwrap()
        })
        .unwrap();
        assert_eq!(sigma1_pl_bound(&mesh).unwrap().value, 0.0);
        let opts = SampleOptions { num_points: 200, num_dirs: 4, num_pairs: 200, seed: 0 };
        assert_eq!(sigma1_sampled(&mesh, &opts), 0.0);
        let c = AnalyticField::<f64, 2>::constant(Aabb::unit(), SpdMatrix::identity());
        assert_eq!(sigma0_sampled(&c, &opts), 0.0);
    }

    #[test]
    fn hand_evaluated_triangle() {
        // numerator ρ(I) for ∂x and 0 for ∂y, smallest vertex eigenvalue 1
        let b = sigma1_pl_bound(&ramp_triangle(1.0)).unwrap();
        assert_relative_eq!(b.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bound_scales_inversely() {
        let base = sigma1_pl_bound(&ramp_triangle(1.0)).unwrap().value;
        for s in [0.5, 2.0] {
            let v = sigma1_pl_bound(&ramp_triangle(s)).unwrap().value;
            assert_relative_eq!(v, base / s, max_relative = 1e-14);
        }
    }

    #[test]
    fn degenerate_vertex_refused() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mats = vec![SymMat::identity(), SymMat::identity().scaled(1e-13), SymMat::identity()];
        let mesh = SimplicialMetricMesh::new(verts, vec![0, 1, 2], mats).unwrap();
        assert!(matches!(sigma1_pl_bound(&mesh), Err(VariationError::DegenerateVertex { vertex: 1, .. })));
    }

    #[test]
    fn closed_form_sigma0_bound() {
        assert_eq!(sigma0_of_c_bound(0.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(sigma0_of_c_bound(1.0, 0.1).unwrap(), 1.1 + 0.01 / 3.0, epsilon = 1e-15);
        assert!(sigma0_of_c_bound(-1.0, 0.1).is_err());
        assert!(sigma0_of_c_bound(1.0, -0.1).is_err());
    }

    #[test]
    fn ramp_sampled_sigma1_approaches_one_from_below() {
        let f = AnalyticField::<f64, 2>::scalar(Aabb::unit(), |p| 1.0 + p[0]);
        let opts = SampleOptions { num_points: 10_000, num_dirs: 8, num_pairs: 1000, seed: 0 };
        let s = sigma1_sampled(&f, &opts);
        assert!(s <= 1.0 + 1e-9 && s > 0.99, "{s}");
    }
}
