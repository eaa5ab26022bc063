//! Fixture fields, site sets and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use avdcert::diagram::GridLabeling;
use avdcert::linalg::SymMat;
use avdcert::metric::io::write_mesh;
use avdcert::metric::{Aabb, AnalyticField, SimplicialMetricMesh};
use avdcert::sites::{write_sites, SiteSet};
use avdcert::{Mesh2, Point2, SiteSet2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rotated(theta: f64, a: f64, b: f64) -> SymMat<f64, 2> {
    let (c, s) = (theta.cos(), theta.sin());
    SymMat::from_upper(&[c * c * a + s * s * b, c * s * (a - b), s * s * a + c * c * b]).unwrap()
}

pub fn lattice_mesh(cells: usize, f: impl Fn(&Point2) -> SymMat<f64, 2>) -> Mesh2 {
    SimplicialMetricMesh::lattice(Aabb::unit(), [cells, cells], f).unwrap()
}

pub fn identity_mesh() -> Mesh2 {
    lattice_mesh(16, |_| SymMat::identity())
}

/// `M = (1 + x)·I` on a 16×16 triangulated unit square.
pub fn ramp_mesh() -> Mesh2 {
    lattice_mesh(16, |p| SymMat::identity().scaled(1.0 + p[0]))
}

/// `M = e^x·I` on the unit square.
pub fn exp_field() -> AnalyticField<f64, 2> {
    AnalyticField::scalar(Aabb::unit(), |p| p[0].exp())
}

/// The single triangle `(0,0), (1,0), (0,1)` with `M = (1 + x)·I`.
pub fn ramp_triangle() -> Mesh2 {
    let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mats = verts.iter().map(|p: &Point2| SymMat::identity().scaled(1.0 + p[0])).collect();
    SimplicialMetricMesh::new(verts, vec![0, 1, 2], mats).unwrap()
}

/// Low-variation piecewise-linear fields for the soundness sweep.
pub fn soundness_meshes() -> Vec<(&'static str, Mesh2)> {
    vec![
        ("identity", identity_mesh()),
        ("rotated-constant", lattice_mesh(8, |_| rotated(0.5, 1.4, 0.8))),
        ("isotropic-ramp", lattice_mesh(8, |p| SymMat::identity().scaled(1.0 + 0.2 * p[0]))),
        ("stretch-ramp", lattice_mesh(8, |p| rotated(0.0, 1.0 + 0.5 * p[0], 1.0))),
        ("twisting", lattice_mesh(12, |p| rotated(0.4 * p[0], 1.2 + 0.2 * p[1], 0.9))),
    ]
}

pub fn lattice_sites(k: usize) -> SiteSet2 {
    let h = 1.0 / k as f64;
    SiteSet::new((0..k * k).map(|i| [(0.5 + (i % k) as f64) * h, (0.5 + (i / k) as f64) * h]).collect()).unwrap()
}

/// Rows of spacing `h√3/2`, every other row shifted by `h/2`.
pub fn hex_sites(k: usize) -> SiteSet2 {
    let h = 1.0 / k as f64;
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (1.0 / dy).floor() as usize;
    let y0 = (1.0 - (rows - 1) as f64 * dy) / 2.0;
    let mut pts = Vec::new();
    for j in 0..rows {
        let shift = if j % 2 == 0 { 0.25 } else { 0.75 };
        for i in 0..k {
            pts.push([(i as f64 + shift) * h, y0 + j as f64 * dy]);
        }
    }
    SiteSet::new(pts).unwrap()
}

/// Lattice sites moved by up to `amount·h` along each axis.
pub fn jittered_sites(k: usize, amount: f64, seed: u64) -> SiteSet2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / k as f64;
    let pts = lattice_sites(k)
        .points()
        .iter()
        .map(|p| [p[0] + amount * h * rng.gen_range(-1.0..1.0), p[1] + amount * h * rng.gen_range(-1.0..1.0)])
        .collect();
    SiteSet::new(pts).unwrap()
}

pub fn soundness_sites() -> Vec<(&'static str, SiteSet2)> {
    vec![
        ("lattice-6", lattice_sites(6)),
        ("lattice-10", lattice_sites(10)),
        ("hex-8", hex_sites(8)),
        ("jitter-10", jittered_sites(10, 0.1, 7)),
    ]
}

/// Plain Euclidean nearest-site labels at the grid's cell centers.
pub fn euclidean_labels<const N: usize>(grid: &GridLabeling<f64, N>, sites: &SiteSet<f64, N>) -> Vec<u32> {
    (0..grid.num_cells())
        .map(|c| {
            let p = grid.center(c);
            let mut best = (0u32, f64::INFINITY);
            for (i, v) in sites.points().iter().enumerate() {
                let d: f64 = (0..N).map(|k| (p[k] - v[k]) * (p[k] - v[k])).sum();
                if d < best.1 {
                    best = (i as u32, d);
                }
            }
            best.0
        })
        .collect()
}

pub fn write_fixture(dir: &Path, name: &str, mesh: &Mesh2, sites: Option<&SiteSet2>) -> (PathBuf, Option<PathBuf>) {
    let mesh_path = dir.join(format!("{name}.avdmesh"));
    std::fs::write(&mesh_path, write_mesh(mesh)).unwrap();
    let sites_path = sites.map(|s| {
        let p = dir.join(format!("{name}.avdsites"));
        std::fs::write(&p, write_sites(s.points())).unwrap();
        p
    });
    (mesh_path, sites_path)
}
