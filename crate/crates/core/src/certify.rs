//! Orphan-freedom conditions and end-to-end certificates.
//!
//! With `x = Cσ`, the Du/Wang diagram of a `(C, P)` Delone set is orphan-free
//! when
//!
//! ```text
//! (P/C)² / (2(1 + x)²) − 2x² − 4x > 0
//! ```
//!
//! and the Labelle/Shewchuk diagram when, with `k = (1 + x)/(1 − x)` and
//! `γ = x(1 + k)`,
//!
//! ```text
//! ((P/C)² k⁻² − γ² − 2γ)/2 − γ² − 2γ > 0.
//! ```
//!
//! Both hold with either the differentiable variation σ₁ (smooth or
//! piecewise-linear fields) or the worst-case variation σ₀ in place of σ.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{DistanceKind, MetricField, SimplicialMetricMesh};
use crate::scalar::Real;
use crate::sites::{cover_constant, packing_constant, CoverEstimate, SiteSet, SitesError};
use crate::variation::{sigma1_pl_bound, VariationError};

/// Absolute tolerance of the net-case threshold bisection.
pub const THRESHOLD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("C·σ = {0} ≥ 1, the Labelle/Shewchuk condition does not apply")]
    Inapplicable(f64),
}

fn check_args<T: Real>(c: T, p: T, sigma: T) -> Result<(), ConditionError> {
    if !(c > T::zero()) {
        return Err(ConditionError::NonPositive { name: "C", value: c.as_f64() });
    }
    if !(p > T::zero()) {
        return Err(ConditionError::NonPositive { name: "P", value: p.as_f64() });
    }
    if !(sigma >= T::zero()) {
        return Err(ConditionError::NegativeSigma(sigma.as_f64()));
    }
    Ok(())
}

/// Du/Wang condition value; positive means orphan-free.
pub fn dw_condition<T: Real>(c: T, p: T, sigma: T) -> Result<T, ConditionError> {
    check_args(c, p, sigma)?;
    let x = c * sigma;
    let r = p / c;
    let two = T::lit(2.0);
    Ok(r * r / (two * (T::one() + x).powi(2)) - two * x * x - T::lit(4.0) * x)
}

/// Labelle/Shewchuk condition value; positive means orphan-free.
pub fn ls_condition<T: Real>(c: T, p: T, sigma: T) -> Result<T, ConditionError> {
    check_args(c, p, sigma)?;
    let x = c * sigma;
    if x >= T::one() {
        return Err(ConditionError::Inapplicable(x.as_f64()));
    }
    let k = (T::one() + x) / (T::one() - x);
    let gamma = x * (T::one() + k);
    let r = p / c;
    let two = T::lit(2.0);
    let g = gamma * gamma + two * gamma;
    Ok((r * r / (k * k) - g) / two - g)
}

pub fn condition<T: Real>(kind: DistanceKind, c: T, p: T, sigma: T) -> Result<T, ConditionError> {
    match kind {
        DistanceKind::Dw => dw_condition(c, p, sigma),
        DistanceKind::Ls => ls_condition(c, p, sigma),
    }
}

/// The same conditions for a caller holding a worst-case variation bound σ₀.
pub fn theorem_condition_sigma0<T: Real>(kind: DistanceKind, c: T, p: T, sigma0: T) -> Result<T, ConditionError> {
    condition(kind, c, p, sigma0)
}

/// Largest `x = Cσ` keeping the condition positive when `P = C`, by
/// bisection to [`THRESHOLD_TOL`].
pub fn net_threshold<T: Real>(kind: DistanceKind) -> T {
    let f = |x: T| condition(kind, T::one(), T::one(), x).expect("bracket lies in the valid range");
    let (mut lo, mut hi) = match kind {
        DistanceKind::Dw => (T::zero(), T::lit(0.5)),
        DistanceKind::Ls => (T::zero(), T::lit(0.4)),
    };
    let tol = T::lit(THRESHOLD_TOL).max(T::epsilon() * T::lit(4.0));
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Certified,
    NotCertified,
    Inapplicable,
}

/// Where the variation bound came from. Sampled estimates are lower bounds
/// and are deliberately not representable here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaProvenance {
    PlBound,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate<T> {
    pub kind: DistanceKind,
    pub sigma1: T,
    pub sigma1_provenance: SigmaProvenance,
    pub cover: T,
    pub cover_resolution: usize,
    pub packing: T,
    pub ratio: T,
    /// Absent when the condition does not apply.
    pub condition_value: Option<T>,
    pub verdict: Verdict,
    pub reason: Option<String>,
}

impl<T: Real> Certificate<T> {
    /// Evaluates the condition for measured constants. A zero condition
    /// value is not certified.
    pub fn evaluate(
        kind: DistanceKind,
        sigma: T,
        provenance: SigmaProvenance,
        cover: CoverEstimate<T>,
        packing: T,
    ) -> Result<Self, ConditionError> {
        let (condition_value, verdict, reason) = match condition(kind, cover.value, packing, sigma) {
            Ok(v) if v > T::zero() => (Some(v), Verdict::Certified, None),
            Ok(v) => (Some(v), Verdict::NotCertified, Some(format!("condition value {v} is not positive"))),
            Err(ConditionError::Inapplicable(x)) => (
                None,
                Verdict::Inapplicable,
                Some(format!("C·σ = {x} ≥ 1, the Labelle/Shewchuk ratio k is undefined")),
            ),
            Err(e) => return Err(e),
        };
        Ok(Certificate {
            kind,
            sigma1: sigma,
            sigma1_provenance: provenance,
            cover: cover.value,
            cover_resolution: cover.resolution,
            packing,
            ratio: packing / cover.value,
            condition_value,
            verdict,
            reason,
        })
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("sites: {0}")]
    Sites(#[source] SitesError),
    #[error("sigma1 bound: {0}")]
    Sigma(#[source] VariationError),
    #[error("cover constant: {0}")]
    Cover(#[source] SitesError),
    #[error("packing constant: {0}")]
    Packing(#[source] SitesError),
    #[error("condition: {0}")]
    Condition(#[source] ConditionError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Sites(_) => "sites",
            PipelineError::Sigma(_) => "sigma1",
            PipelineError::Cover(_) => "cover",
            PipelineError::Packing(_) => "packing",
            PipelineError::Condition(_) => "condition",
        }
    }
}

fn run<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    sites: &SiteSet<T, N>,
    kind: DistanceKind,
    resolution: usize,
    sigma: impl FnOnce() -> Result<T, VariationError>,
    provenance: SigmaProvenance,
) -> Result<Certificate<T>, PipelineError> {
    sites.check_inside(field).map_err(PipelineError::Sites)?;
    let sigma = sigma().map_err(PipelineError::Sigma)?;
    let cover = cover_constant(sites, field, kind, resolution).map_err(PipelineError::Cover)?;
    let packing = packing_constant(sites, field, kind).map_err(PipelineError::Packing)?;
    Certificate::evaluate(kind, sigma, provenance, cover, packing).map_err(PipelineError::Condition)
}

/// Certificate for a piecewise-linear field: σ₁ from the per-simplex bound,
/// then the cover constant on a `resolution`-node grid, the packing
/// constant, and the condition.
pub fn certify_pipeline<T: Real, const N: usize>(
    mesh: &SimplicialMetricMesh<T, N>,
    sites: &SiteSet<T, N>,
    kind: DistanceKind,
    resolution: usize,
) -> Result<Certificate<T>, PipelineError> {
    run(mesh, sites, kind, resolution, || sigma1_pl_bound(mesh).map(|b| b.value), SigmaProvenance::PlBound)
}

/// Certificate from a variation bound the caller vouches for.
pub fn certify_with_sigma<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    sites: &SiteSet<T, N>,
    kind: DistanceKind,
    resolution: usize,
    sigma: T,
) -> Result<Certificate<T>, PipelineError> {
    let check = move || {
        if sigma >= T::zero() {
            Ok(sigma)
        } else {
            Err(VariationError::NegativeArgument { name: "sigma1", value: sigma.as_f64() })
        }
    };
    run(field, sites, kind, resolution, check, SigmaProvenance::UserSupplied)
}
