//! Deterministic low-discrepancy sampling.
//!
//! Points come from a Halton sequence with a seeded Cranley-Patterson
//! rotation, so every sampled quantity is reproducible from `(count, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{add, Point};
use crate::metric::{Aabb, MetricField};
use crate::scalar::Real;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// Rotated Halton sequence in up to 12 dimensions.
#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dims: usize, seed: u64) -> Self {
        assert!(dims <= PRIMES.len(), "at most {} Halton dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Halton { shift: (0..dims).map(|_| rng.gen::<f64>()).collect() }
    }

    pub fn dims(&self) -> usize {
        self.shift.len()
    }

    /// Coordinate `d` of sample `i`, in `[0, 1)`.
    pub fn coord(&self, i: u64, d: usize) -> f64 {
        let x = radical_inverse(i + 1, PRIMES[d]) + self.shift[d];
        x - x.floor()
    }

    pub fn sample(&self, i: u64) -> Vec<f64> {
        (0..self.dims()).map(|d| self.coord(i, d)).collect()
    }

    /// `N` consecutive coordinates starting at `offset`.
    pub fn point<T: Real, const N: usize>(&self, i: u64, offset: usize) -> Point<T, N> {
        std::array::from_fn(|k| T::lit(self.coord(i, offset + k)))
    }
}

/// Fixed unit directions. Sign is irrelevant for every quantity sampled
/// over directions, so 2D directions cover a half circle (starting on the
/// x axis) and 3D directions the coordinate axes followed by a Fibonacci
/// hemisphere.
pub fn directions<T: Real, const N: usize>(count: usize) -> Vec<Point<T, N>> {
    let count = count.max(1);
    match N {
        2 => (0..count)
            .map(|l| {
                let theta = std::f64::consts::PI * l as f64 / count as f64;
                let mut d = [T::zero(); N];
                d[0] = T::lit(theta.cos());
                d[1] = T::lit(theta.sin());
                d
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(count);
            for axis in 0..N.min(count) {
                let mut d = [T::zero(); N];
                d[axis] = T::one();
                out.push(d);
            }
            let rest = count - out.len();
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for l in 0..rest {
                let z = 1.0 - (l as f64 + 0.5) / rest as f64;
                let rad = (1.0 - z * z).sqrt();
                let phi = golden * l as f64;
                let mut d = [T::zero(); N];
                d[0] = T::lit(rad * phi.cos());
                d[1] = T::lit(rad * phi.sin());
                d[2] = T::lit(z);
                out.push(d);
            }
            out
        }
    }
}

/// Unit-ball sample of radius `radius` from two (2D) or three (3D) uniforms.
fn ball_offset<T: Real, const N: usize>(u: &[f64], radius: T) -> Point<T, N> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = [T::zero(); N];
    match N {
        2 => {
            let r = u[0].sqrt();
            let a = two_pi * u[1];
            d[0] = T::lit(r * a.cos());
            d[1] = T::lit(r * a.sin());
        }
        _ => {
            let r = u[0].cbrt();
            let z = 2.0 * u[1] - 1.0;
            let rad = (1.0 - z * z).max(0.0).sqrt();
            let a = two_pi * u[2];
            d[0] = T::lit(r * rad * a.cos());
            d[1] = T::lit(r * rad * a.sin());
            d[2] = T::lit(r * z);
        }
    }
    d.map(|x| x * radius)
}

/// Pairs `(a, b)` with `‖M_a(a − b)‖ ≤ radius`, both inside the field.
///
/// `a` is Halton-distributed over the domain box and `b = a + M_a⁻¹ u` with
/// `u` uniform in the Euclidean ball of the given radius. Candidates leaving
/// the domain are skipped; at most `50·count` candidates are drawn.
pub fn metric_ball_pairs<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    radius: T,
    count: usize,
    seed: u64,
) -> Vec<(Point<T, N>, Point<T, N>)> {
    let seq = Halton::new(2 * N, seed);
    let dom = field.domain();
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    let budget = 50 * count as u64 + 100;
    while out.len() < count && i < budget {
        let s = seq.sample(i);
        i += 1;
        let a = dom.from_unit(&std::array::from_fn(|k| T::lit(s[k])));
        let Ok(ma) = field.sqrt_metric(&a) else { continue };
        let u = ball_offset::<T, N>(&s[N..], radius);
        let b = add(&a, &ma.inverse().apply(&u));
        if b != a && field.contains(&b) {
            out.push((a, b));
        }
    }
    out
}

/// Halton pairs spread over the whole domain box.
pub fn domain_pairs<T: Real, const N: usize>(
    domain: &Aabb<T, N>,
    count: usize,
    seed: u64,
) -> impl Iterator<Item = (Point<T, N>, Point<T, N>)> + '_ {
    let seq = Halton::new(2 * N, seed);
    (0..count as u64).map(move |i| {
        let a = domain.from_unit(&seq.point(i, 0));
        let b = domain.from_unit(&seq.point(i, N));
        (a, b)
    })
}
