//! Library quantities checked against independent implementations.
mod common;

use approx::assert_relative_eq;
use avdcert::diagram::{label_grid, neighbor_pairs};
use avdcert::linalg::{Mat, SymMat};
use avdcert::metric::{rho, rho_min_general, sqrt_spd, Aabb, AnalyticField, DistanceKind, MetricField, Smoothness};
use avdcert::verify::random_spd;
use avdcert::SpdMatrix2;
use nalgebra::{Matrix2, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn na3(m: &SymMat<f64, 3>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m.get(i, j))
}

#[test]
fn sqrt_matches_eigendecomposition_3d() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let q = random_spd::<f64, 3>(&mut rng);
        let eig = na3(q.as_sym()).symmetric_eigen();
        let root = eig.eigenvectors * Matrix3::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
        let ours = na3(sqrt_spd(&q).as_sym());
        assert!((ours - root).norm() <= 1e-9 * root.norm(), "{ours} vs {root}");
    }
}

#[test]
fn sqrt_matches_eigendecomposition_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let q = random_spd::<f64, 2>(&mut rng);
        let qs = q.as_sym();
        let eig = Matrix2::from_fn(|i, j| qs.get(i, j)).symmetric_eigen();
        let root = eig.eigenvectors * Matrix2::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
        let ours = sqrt_spd(&q);
        let ours = Matrix2::from_fn(|i, j| ours.as_sym().get(i, j));
        assert!((ours - root).norm() <= 1e-9 * root.norm());
    }
}

/// Largest singular value by power iteration on `AᵗA`.
fn power_norm(a: &Mat<f64, 3>) -> f64 {
    let ata = a.transpose().mul(a);
    let mut v = [1.0, 0.7, 0.3];
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w = ata.mul_vec(&v);
        let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        v = [w[0] / n, w[1] / n, w[2] / n];
        lambda = n;
    }
    lambda.sqrt()
}

#[test]
fn rho_of_products_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let a = random_spd::<f64, 3>(&mut rng);
        let b = random_spd::<f64, 3>(&mut rng);
        let prod = b.to_mat().mul(&a.inverse().to_mat());
        let svd = Matrix3::from_fn(|i, j| prod.get(i, j)).singular_values();
        assert_relative_eq!(rho(&prod), svd.max(), max_relative = 1e-9);
        assert_relative_eq!(rho_min_general(&prod), svd.min(), max_relative = 1e-7);
        assert_relative_eq!(rho(&prod), power_norm(&prod), max_relative = 1e-6);
    }
}

#[test]
fn spd_rho_is_largest_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let q = random_spd::<f64, 3>(&mut rng);
        let eig = na3(q.as_sym()).symmetric_eigenvalues();
        assert_relative_eq!(q.rho(), eig.max(), max_relative = 1e-10);
        assert_relative_eq!(q.rho_min(), eig.min(), max_relative = 1e-8);
    }
}

/// Straight argmin over sites of the quadratic-form distance, lowest index
/// on ties, no squared-form shortcuts.
fn brute_labels(field: &dyn MetricField<f64, 2>, grid: &avdcert::GridLabeling2, sites: &avdcert::SiteSet2, kind: DistanceKind) -> Vec<u32> {
    (0..grid.num_cells())
        .map(|c| {
            let p = grid.center(c);
            let mut best = (0u32, f64::INFINITY);
            for (i, v) in sites.points().iter().enumerate() {
                let d = kind.distance(field, &p, v).unwrap();
                if d < best.1 {
                    best = (i as u32, d);
                }
            }
            best.0
        })
        .collect()
}

#[test]
fn labeler_agrees_with_brute_force() {
    let field = AnalyticField::new(Aabb::unit(), Smoothness::C1, |p: &[f64; 2]| common::rotated(2.0 * p[1], 1.0 + p[0], 0.6));
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let pts = (0..9).map(|_| [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)]).collect();
    let sites = avdcert::SiteSet2::new(pts).unwrap();
    for kind in DistanceKind::ALL {
        for res in [16, 33, 64] {
            let grid = label_grid(&field, &sites, kind, res).unwrap();
            let brute = brute_labels(&field, &grid, &sites, kind);
            let mismatches = grid.labels().iter().zip(&brute).filter(|(a, b)| a != b).count();
            // near-ties may round differently between ‖Mx‖² and ‖Mx‖
            assert!(mismatches <= grid.ties() + 2, "{kind} res {res}: {mismatches} mismatches");
        }
    }
}

#[test]
fn constant_identity_gives_euclidean_voronoi() {
    let field = AnalyticField::constant(Aabb::unit(), SpdMatrix2::identity());
    let sites = common::jittered_sites(5, 0.3, 3);
    let grid = label_grid(&field, &sites, DistanceKind::Dw, 64).unwrap();
    assert_eq!(grid.labels(), common::euclidean_labels(&grid, &sites).as_slice());
}

#[test]
fn lattice_neighbors_are_grid_adjacent() {
    let field = AnalyticField::constant(Aabb::unit(), SpdMatrix2::identity());
    let sites = common::lattice_sites(4);
    let grid = label_grid(&field, &sites, DistanceKind::Dw, 64).unwrap();
    let pairs: Vec<(usize, usize)> = neighbor_pairs(&grid).iter().map(|p| (p.first, p.second)).collect();
    let mut expected = Vec::new();
    for a in 0..16usize {
        for b in a + 1..16 {
            let (ax, ay, bx, by) = (a % 4, a / 4, b % 4, b / 4);
            if ax.abs_diff(bx) + ay.abs_diff(by) == 1 {
                expected.push((a, b));
            }
        }
    }
    assert_eq!(pairs, expected);
}
