//! Numerical checks of the inequalities behind the certificates.
//!
//! Every check draws seeded samples, counts violations and records the
//! largest excess, so a report pinpoints how badly a bound failed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{sub, Mat};
use crate::metric::{rho, rho_min_general, MetricField, SpdMatrix};
use crate::sampling::metric_ball_pairs;
use crate::scalar::Real;
use crate::variation::{sigma0_of_c_bound, sigma0_restricted_ratios, sigma0_sampled, sigma1_sampled, SampleOptions};

pub const SANDWICH_TOL: f64 = 1e-9;
pub const ORDERING_TOL: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-10;

/// `tol`, widened for scalar types coarser than `f64`.
fn tolerance<T: Real>(tol: f64) -> T {
    T::lit(tol).max(T::epsilon() * T::lit(1e3))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Largest amount by which a sample exceeded its bound (0 when none did).
    pub worst_excess: f64,
    pub passed: bool,
}

impl PropertyResult {
    fn new(name: impl Into<String>, checked: usize, excesses: impl IntoIterator<Item = f64>, tol: f64) -> Self {
        let mut violations = 0;
        let mut worst = 0.0f64;
        for e in excesses {
            if !(e <= tol) {
                violations += 1;
            }
            worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
        }
        PropertyResult { name: name.into(), checked, violations, worst_excess: worst, passed: violations == 0 }
    }
}

/// Per-pair quantities of the sandwich
/// `1 − εσ₁ ≤ ρ_m(M_b M_a⁻¹) ≤ ‖M_b(a − b)‖/‖M_a(a − b)‖ ≤ ρ(M_b M_a⁻¹) ≤ 1 + εσ₁`.
///
/// `ρ_m` of the non-symmetric product is its smallest singular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichTerms<T> {
    pub lower: T,
    pub rho_min: T,
    pub ratio: T,
    pub rho: T,
    pub upper: T,
}

impl<T: Real> SandwichTerms<T> {
    /// Largest violation over the four inequalities.
    pub fn excess(&self) -> T {
        [
            self.lower - self.rho_min,
            self.rho_min - self.ratio,
            self.ratio - self.rho,
            self.rho - self.upper,
        ]
        .into_iter()
        .fold(T::neg_infinity(), T::max)
    }
}

pub fn sandwich_terms<T: Real, const N: usize>(
    ma: &SpdMatrix<T, N>,
    mb: &SpdMatrix<T, N>,
    d: &[T; N],
    eps: T,
    sigma1: T,
) -> SandwichTerms<T> {
    let prod: Mat<T, N> = mb.to_mat().mul(&ma.inverse().to_mat());
    SandwichTerms {
        lower: T::one() - eps * sigma1,
        rho_min: rho_min_general(&prod),
        ratio: mb.length(d) / ma.length(d),
        rho: rho(&prod),
        upper: T::one() + eps * sigma1,
    }
}

/// Sandwich check over pairs with `‖M_a(a − b)‖ ≤ eps`. Requires `εσ₁ < 1`;
/// otherwise nothing is checked.
pub fn sandwich_check<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    sigma1: T,
    eps: T,
    num_pairs: usize,
    seed: u64,
) -> PropertyResult {
    let name = format!("sandwich eps={eps}");
    if !(eps * sigma1 < T::one()) {
        return PropertyResult::new(name, 0, [], SANDWICH_TOL);
    }
    let pairs = metric_ball_pairs(field, eps, num_pairs, seed);
    let excesses: Vec<f64> = pairs
        .par_iter()
        .filter_map(|(a, b)| {
            let ma = field.sqrt_metric(a).ok()?;
            let mb = field.sqrt_metric(b).ok()?;
            Some(sandwich_terms(&ma, &mb, &sub(a, b), eps, sigma1).excess().as_f64())
        })
        .collect();
    PropertyResult::new(name, excesses.len(), excesses, tolerance::<T>(SANDWICH_TOL).as_f64())
}

/// Sampled σ₁ against the supplied bound and against sampled σ₀.
pub fn ordering_check<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    sigma1_bound: T,
    opts: &SampleOptions,
) -> Vec<PropertyResult> {
    let s1 = sigma1_sampled(field, opts);
    let s0 = sigma0_sampled(field, opts);
    let tol = tolerance::<T>(ORDERING_TOL).as_f64();
    vec![
        PropertyResult::new("sigma1_sampled <= sigma1_bound", 1, [(s1 - sigma1_bound).as_f64()], tol),
        PropertyResult::new("sigma1_sampled <= sigma0_sampled", 1, [(s1 - s0).as_f64()], tol),
    ]
}

/// `σ₁(1 + Cσ₁ + (Cσ₁)²/3)` against every σ₀ ratio of pairs within range `C`.
pub fn restricted_sigma0_check<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    sigma1: T,
    c: T,
    num_pairs: usize,
    seed: u64,
) -> PropertyResult {
    let bound = sigma0_of_c_bound(sigma1, c).unwrap_or(T::nan());
    let ratios = sigma0_restricted_ratios(field, c, num_pairs, seed);
    let tol = tolerance::<T>(ORDERING_TOL).as_f64();
    PropertyResult::new(
        format!("sigma0_of_c_bound C={c}"),
        ratios.len(),
        ratios.iter().map(|&r| (r - bound).as_f64()),
        tol,
    )
}

/// `Bᵗ B + 0.1 I` with entries of `B` uniform in `[−1, 1]`.
pub fn random_spd<T: Real, const N: usize>(rng: &mut impl Rng) -> SpdMatrix<T, N> {
    let b = Mat::<T, N>(std::array::from_fn(|_| std::array::from_fn(|_| T::lit(rng.gen_range(-1.0..1.0)))));
    let a = b.gram().add_identity(T::lit(0.1));
    SpdMatrix::new(a).expect("Gram matrix plus a positive shift is positive definite")
}

/// `ρ(A⁻¹)·ρ_m(A) = 1` on random SPD matrices.
pub fn inverse_identity_check<T: Real, const N: usize>(count: usize, seed: u64) -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let excess: Vec<f64> = (0..count)
        .map(|_| {
            let a = random_spd::<T, N>(&mut rng);
            (a.inverse().rho() * a.rho_min() - T::one()).abs().as_f64()
        })
        .collect();
    PropertyResult::new(format!("inverse_identity n={N}"), count, excess, tolerance::<T>(IDENTITY_TOL).as_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub num_pairs: usize,
    pub epsilons: Vec<f64>,
    pub covers: Vec<f64>,
    pub samples: SampleOptions,
    pub num_matrices: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            num_pairs: 10_000,
            epsilons: vec![0.05, 0.1],
            covers: vec![0.05, 0.1, 0.2],
            samples: SampleOptions::default(),
            num_matrices: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub sigma1: f64,
    pub properties: Vec<PropertyResult>,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
}

impl SuiteReport {
    pub fn new(sigma1: f64, properties: Vec<PropertyResult>) -> Self {
        let passed = properties.iter().filter(|p| p.passed).count();
        let failed = properties.len() - passed;
        SuiteReport { sigma1, properties, passed, failed, all_passed: failed == 0 }
    }
}

/// All checks for one field, with `sigma1` the bound under test.
pub fn verify_suite<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    sigma1: T,
    opts: &VerifyOptions,
) -> SuiteReport {
    let mut props = Vec::new();
    for (i, &eps) in opts.epsilons.iter().enumerate() {
        props.push(sandwich_check(field, sigma1, T::lit(eps), opts.num_pairs, opts.seed.wrapping_add(10 + i as u64)));
    }
    props.extend(ordering_check(field, sigma1, &SampleOptions { seed: opts.seed, ..opts.samples }));
    for (i, &c) in opts.covers.iter().enumerate() {
        props.push(restricted_sigma0_check(field, sigma1, T::lit(c), opts.num_pairs, opts.seed.wrapping_add(20 + i as u64)));
    }
    props.push(inverse_identity_check::<T, N>(opts.num_matrices, opts.seed));
    SuiteReport::new(sigma1.as_f64(), props)
}
