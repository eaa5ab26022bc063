//! Piecewise-linear square-root metric over a simplicial complex.

use thiserror::Error;

use super::field::{point_vec, Aabb, FieldKind, MetricError, MetricField, Smoothness};
use super::spd::{SpdError, SpdMatrix};
use crate::linalg::{norm, sub, Mat, Point, SymMat};
use crate::scalar::Real;

/// Barycentric slack used for point location and face detection.
pub const BARY_TOL: f64 = 1e-12;
/// Relative volume threshold below which a simplex counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh has no simplices")]
    Empty,
    #[error("expected {expected} vertex matrices, got {got}")]
    MatrixCountMismatch { expected: usize, got: usize },
    #[error("simplex connectivity length {0} is not a multiple of the simplex size")]
    BadConnectivity(usize),
    #[error("simplex {simplex} references vertex {vertex}, but only {count} vertices exist")]
    VertexOutOfRange { simplex: usize, vertex: usize, count: usize },
    #[error("simplex {simplex} is degenerate (volume below tolerance)")]
    DegenerateSimplex { simplex: usize },
    #[error("vertex {vertex}: {source}")]
    VertexMatrix { vertex: usize, source: SpdError },
}

/// Located point: containing simplex and barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location<T, const N: usize> {
    pub simplex: usize,
    /// `bary[0]` belongs to the simplex's first vertex; only `N + 1` entries
    /// are meaningful.
    pub bary: [T; 4],
}

impl<T: Real, const N: usize> Location<T, N> {
    pub fn weights(&self) -> &[T] {
        &self.bary[..=N]
    }

    /// Whether the point lies on the boundary of its simplex.
    pub fn on_face(&self) -> bool {
        self.weights().iter().any(|&w| w <= T::lit(BARY_TOL))
    }
}

#[derive(Debug, Clone)]
struct BinGrid<T, const N: usize> {
    bounds: Aabb<T, N>,
    dims: [usize; N],
    bins: Vec<Vec<u32>>,
}

impl<T: Real, const N: usize> BinGrid<T, N> {
    fn bin_coord(&self, p: &Point<T, N>) -> [usize; N] {
        std::array::from_fn(|k| {
            let ext = self.bounds.hi[k] - self.bounds.lo[k];
            if ext <= T::zero() {
                return 0;
            }
            let t = ((p[k] - self.bounds.lo[k]) / ext * T::from_count(self.dims[k])).floor();
            let t = t.max(T::zero()).to_usize().unwrap_or(0);
            t.min(self.dims[k] - 1)
        })
    }

    fn flat(&self, c: &[usize; N]) -> usize {
        let mut idx = 0;
        for k in (0..N).rev() {
            idx = idx * self.dims[k] + c[k];
        }
        idx
    }

    fn candidates(&self, p: &Point<T, N>) -> &[u32] {
        &self.bins[self.flat(&self.bin_coord(p))]
    }
}

/// Simplicial complex with per-vertex square-root matrices, linearly
/// interpolated inside each simplex.
#[derive(Debug, Clone)]
pub struct SimplicialMetricMesh<T, const N: usize> {
    vertices: Vec<Point<T, N>>,
    /// Flat connectivity, `N + 1` vertex indices per simplex.
    simplices: Vec<usize>,
    vertex_sqrt: Vec<SpdMatrix<T, N>>,
    /// Inverse edge matrix of each simplex: `λ[1..] = E⁻¹ (p − v₀)`.
    inv_edges: Vec<Mat<T, N>>,
    /// `M_i^k = ∂_k M`, constant inside simplex `i`.
    derivs: Vec<[SymMat<T, N>; N]>,
    bounds: Aabb<T, N>,
    bins: BinGrid<T, N>,
}

impl<T: Real, const N: usize> SimplicialMetricMesh<T, N> {
    pub fn new(
        vertices: Vec<Point<T, N>>,
        simplices: Vec<usize>,
        vertex_sqrt: Vec<SymMat<T, N>>,
    ) -> Result<Self, MeshError> {
        let stride = N + 1;
        if simplices.len() % stride != 0 {
            return Err(MeshError::BadConnectivity(simplices.len()));
        }
        if simplices.is_empty() {
            return Err(MeshError::Empty);
        }
        if vertex_sqrt.len() != vertices.len() {
            return Err(MeshError::MatrixCountMismatch {
                expected: vertices.len(),
                got: vertex_sqrt.len(),
            });
        }
        let vertex_sqrt = vertex_sqrt
            .into_iter()
            .enumerate()
            .map(|(vertex, m)| SpdMatrix::new(m).map_err(|source| MeshError::VertexMatrix { vertex, source }))
            .collect::<Result<Vec<_>, _>>()?;
        let count = vertices.len();
        for (s, chunk) in simplices.chunks(stride).enumerate() {
            if let Some(&v) = chunk.iter().find(|&&v| v >= count) {
                return Err(MeshError::VertexOutOfRange { simplex: s, vertex: v, count });
            }
        }
        let bounds = Aabb::from_points(&vertices).ok_or(MeshError::Empty)?;
        let vol_tol = T::lit(DEGENERACY_TOL) * bounds.diameter().powi(N as i32);

        let num = simplices.len() / stride;
        let mut inv_edges = Vec::with_capacity(num);
        let mut derivs = Vec::with_capacity(num);
        for (s, chunk) in simplices.chunks(stride).enumerate() {
            let v0 = vertices[chunk[0]];
            // columns are the edges v_j − v_0
            let edges = Mat::<T, N>(std::array::from_fn(|r| {
                std::array::from_fn(|c| vertices[chunk[c + 1]][r] - v0[r])
            }));
            if !(edges.det().abs() > vol_tol) {
                return Err(MeshError::DegenerateSimplex { simplex: s });
            }
            let inv = edges.inverse().ok_or(MeshError::DegenerateSimplex { simplex: s })?;
            let m0 = *vertex_sqrt[chunk[0]].as_sym();
            let diffs: [SymMat<T, N>; N] =
                std::array::from_fn(|j| vertex_sqrt[chunk[j + 1]].as_sym().sub(&m0));
            let d: [SymMat<T, N>; N] = std::array::from_fn(|k| {
                let mut acc = SymMat::zeros();
                for (j, diff) in diffs.iter().enumerate() {
                    acc = acc.add(&diff.scaled(inv.0[j][k]));
                }
                acc
            });
            inv_edges.push(inv);
            derivs.push(d);
        }

        let bins = build_bins(&vertices, &simplices, bounds);
        Ok(SimplicialMetricMesh { vertices, simplices, vertex_sqrt, inv_edges, derivs, bounds, bins })
    }

    /// Kuhn triangulation of a box with `cells[k]` cells along axis `k`
    /// (`N!` simplices per cell) and `M` sampled from `f` at the vertices.
    pub fn lattice(
        domain: Aabb<T, N>,
        cells: [usize; N],
        f: impl Fn(&Point<T, N>) -> SymMat<T, N>,
    ) -> Result<Self, MeshError> {
        let nodes: [usize; N] = std::array::from_fn(|k| cells[k] + 1);
        let total: usize = nodes.iter().product();
        let node_index = |c: &[usize; N]| {
            let mut idx = 0;
            for k in (0..N).rev() {
                idx = idx * nodes[k] + c[k];
            }
            idx
        };
        let mut vertices = Vec::with_capacity(total);
        for flat in 0..total {
            let c = unflatten(flat, &nodes);
            let u: Point<T, N> =
                std::array::from_fn(|k| T::from_count(c[k]) / T::from_count(cells[k].max(1)));
            let mut p = domain.from_unit(&u);
            // exact corners
            for k in 0..N {
                if c[k] == cells[k] {
                    p[k] = domain.hi[k];
                }
            }
            vertices.push(p);
        }
        let perms = permutations::<N>();
        let num_cells: usize = cells.iter().product();
        let mut simplices = Vec::with_capacity(num_cells * perms.len() * (N + 1));
        for flat in 0..num_cells {
            let c = unflatten(flat, &cells);
            for perm in &perms {
                let mut cur = c;
                simplices.push(node_index(&cur));
                for &axis in perm {
                    cur[axis] += 1;
                    simplices.push(node_index(&cur));
                }
            }
        }
        let mats = vertices.iter().map(&f).collect();
        Self::new(vertices, simplices, mats)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_simplices(&self) -> usize {
        self.inv_edges.len()
    }

    pub fn vertices(&self) -> &[Point<T, N>] {
        &self.vertices
    }

    pub fn vertex_sqrt_metrics(&self) -> &[SpdMatrix<T, N>] {
        &self.vertex_sqrt
    }

    /// Vertex indices of simplex `i`.
    pub fn simplex(&self, i: usize) -> &[usize] {
        &self.simplices[i * (N + 1)..(i + 1) * (N + 1)]
    }

    /// Coordinate derivatives `∂_k M` on simplex `i`.
    pub fn coordinate_derivatives(&self, i: usize) -> &[SymMat<T, N>; N] {
        &self.derivs[i]
    }

    pub fn bounds(&self) -> Aabb<T, N> {
        self.bounds
    }

    /// Barycentric coordinates of `p` relative to simplex `i`.
    pub fn barycentric(&self, i: usize, p: &Point<T, N>) -> [T; 4] {
        let v0 = self.vertices[self.simplex(i)[0]];
        let tail = self.inv_edges[i].mul_vec(&sub(p, &v0));
        let mut bary = [T::zero(); 4];
        let mut rest = T::one();
        for j in 0..N {
            bary[j + 1] = tail[j];
            rest = rest - tail[j];
        }
        bary[0] = rest;
        bary
    }

    /// Lowest-index simplex containing `p`.
    pub fn locate(&self, p: &Point<T, N>) -> Result<Location<T, N>, MetricError> {
        let tol = T::lit(BARY_TOL);
        if self.bounds.contains(p) {
            for &s in self.bins.candidates(p) {
                let s = s as usize;
                let bary = self.barycentric(s, p);
                if bary[..=N].iter().all(|&w| w >= -tol) {
                    return Ok(Location { simplex: s, bary });
                }
            }
        }
        Err(MetricError::OutsideMesh { point: point_vec(p), nearest_simplex: self.nearest_simplex(p) })
    }

    fn nearest_simplex(&self, p: &Point<T, N>) -> usize {
        let inv = T::one() / T::from_count(N + 1);
        (0..self.num_simplices())
            .map(|s| {
                let mut c = [T::zero(); N];
                for &v in self.simplex(s) {
                    for k in 0..N {
                        c[k] = c[k] + self.vertices[v][k] * inv;
                    }
                }
                (s, norm(&sub(&c, p)))
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .map(|(s, _)| s)
            .unwrap_or(0)
    }

    /// Interpolated `M` at a located point; stored vertex matrices are
    /// returned unchanged at the vertices themselves.
    pub fn interpolate_at(&self, loc: &Location<T, N>, p: &Point<T, N>) -> Result<SpdMatrix<T, N>, MetricError> {
        let verts = self.simplex(loc.simplex);
        if let Some(&v) = verts.iter().find(|&&v| self.vertices[v] == *p) {
            return Ok(self.vertex_sqrt[v]);
        }
        let mut acc = SymMat::zeros();
        for (j, &v) in verts.iter().enumerate() {
            acc = acc.add(&self.vertex_sqrt[v].as_sym().scaled(loc.bary[j]));
        }
        Ok(SpdMatrix::new(acc)?)
    }

    /// Barycentric interpolation of the vertex matrices at `p`.
    pub fn interpolate_m(&self, p: &Point<T, N>) -> Result<SpdMatrix<T, N>, MetricError> {
        let loc = self.locate(p)?;
        self.interpolate_at(&loc, p)
    }

    /// `Σ_k r_k M_i^k` on simplex `i`.
    pub fn directional_derivative_in(&self, simplex: usize, r: &Point<T, N>) -> SymMat<T, N> {
        let d = &self.derivs[simplex];
        let mut acc = SymMat::zeros();
        for k in 0..N {
            acc = acc.add(&d[k].scaled(r[k]));
        }
        acc
    }

    /// Smallest eigenvalue of `M` at vertex `v`.
    pub fn vertex_min_eigenvalue(&self, v: usize) -> T {
        self.vertex_sqrt[v].rho_min()
    }

    /// Copy with every vertex matrix multiplied by `s > 0`.
    pub fn scaled(&self, s: T) -> Result<Self, MeshError> {
        Self::new(
            self.vertices.clone(),
            self.simplices.clone(),
            self.vertex_sqrt.iter().map(|m| m.as_sym().scaled(s)).collect(),
        )
    }
}

impl<T: Real, const N: usize> MetricField<T, N> for SimplicialMetricMesh<T, N> {
    fn kind(&self) -> FieldKind {
        FieldKind::PiecewiseLinear
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Pl
    }

    fn domain(&self) -> Aabb<T, N> {
        self.bounds
    }

    fn contains(&self, p: &Point<T, N>) -> bool {
        self.locate(p).is_ok()
    }

    fn sqrt_metric(&self, p: &Point<T, N>) -> Result<SpdMatrix<T, N>, MetricError> {
        self.interpolate_m(p)
    }

    fn directional_derivative(
        &self,
        p: &Point<T, N>,
        r: &Point<T, N>,
    ) -> Result<SymMat<T, N>, MetricError> {
        let loc = self.locate(p)?;
        if loc.on_face() {
            return Err(MetricError::OnSimplexFace { simplex: loc.simplex });
        }
        Ok(self.directional_derivative_in(loc.simplex, r))
    }
}

fn unflatten<const N: usize>(mut flat: usize, dims: &[usize; N]) -> [usize; N] {
    let mut c = [0; N];
    for k in 0..N {
        c[k] = flat % dims[k];
        flat /= dims[k];
    }
    c
}

fn permutations<const N: usize>() -> Vec<[usize; N]> {
    fn rec<const N: usize>(cur: &mut Vec<usize>, out: &mut Vec<[usize; N]>) {
        if cur.len() == N {
            out.push(std::array::from_fn(|i| cur[i]));
            return;
        }
        for a in 0..N {
            if !cur.contains(&a) {
                cur.push(a);
                rec(cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec::<N>(&mut Vec::new(), &mut out);
    out
}

fn build_bins<T: Real, const N: usize>(
    vertices: &[Point<T, N>],
    simplices: &[usize],
    bounds: Aabb<T, N>,
) -> BinGrid<T, N> {
    let num = simplices.len() / (N + 1);
    let per_axis = ((num as f64).powf(1.0 / N as f64).ceil() as usize).clamp(1, 512);
    let mut grid = BinGrid {
        bounds,
        dims: [per_axis; N],
        bins: vec![Vec::new(); per_axis.pow(N as u32)],
    };
    let slack = bounds.diameter() * T::lit(1e-9);
    for (s, chunk) in simplices.chunks(N + 1).enumerate() {
        let b = Aabb::from_points(chunk.iter().map(|&v| &vertices[v])).unwrap();
        let lo = grid.bin_coord(&std::array::from_fn(|k| b.lo[k] - slack));
        let hi = grid.bin_coord(&std::array::from_fn(|k| b.hi[k] + slack));
        let span: [usize; N] = std::array::from_fn(|k| hi[k] - lo[k] + 1);
        let count: usize = span.iter().product();
        for flat in 0..count {
            let off = unflatten(flat, &span);
            let c: [usize; N] = std::array::from_fn(|k| lo[k] + off[k]);
            let idx = grid.flat(&c);
            grid.bins[idx].push(s as u32);
        }
    }
    grid
}
