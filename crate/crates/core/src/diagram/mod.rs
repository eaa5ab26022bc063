//! Grid-discretised anisotropic Voronoi diagrams.
//!
//! A cell belongs to the region of the site minimising `D(p, v)` at its
//! center `p`, over the sites `v` (the usual nearest-site rule). Ties go to
//! the lowest site index. Regions are connected through shared cell faces
//! only, so fragments touching at a corner count as separate components.

mod render;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{norm, sub, Point, SymMat};
use crate::metric::{Aabb, DistanceKind, MetricField};
use crate::scalar::Real;
use crate::sites::{SiteSet, SitesError};

pub use render::{render_ppm, render_svg, site_color};

/// Label of cells whose center lies outside the metric field.
pub const OUTSIDE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagramError {
    #[error("resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("grid of {0} cells is too large")]
    TooManyCells(String),
    #[error("sites {first} and {second} fall in the same cell {cell}; increase the resolution")]
    ResolutionTooCoarse { first: usize, second: usize, cell: usize },
    #[error("site {index} lies outside the grid")]
    SiteOutsideGrid { index: usize },
    #[error("labeling has {labels} site labels but {sites} sites were given")]
    SiteCountMismatch { labels: usize, sites: usize },
    #[error("label {label} at cell {cell} is out of range")]
    BadLabel { cell: usize, label: u32 },
    #[error("C·σ = {0} ≥ 1, the Labelle/Shewchuk ratio k is undefined")]
    RatioUndefined(f64),
    #[error("images are only produced for 2D diagrams; use the JSON report for 3D input")]
    NotPlanar,
    #[error(transparent)]
    Sites(#[from] SitesError),
}

/// Nearest-site labels on a regular grid of cells over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLabeling<T, const N: usize> {
    domain: Aabb<T, N>,
    dims: [usize; N],
    cell_size: Point<T, N>,
    labels: Vec<u32>,
    distances: Vec<T>,
    kind: DistanceKind,
    num_sites: usize,
    ties: usize,
}

impl<T: Real, const N: usize> GridLabeling<T, N> {
    /// Wraps externally produced labels. Distances are left as NaN.
    pub fn from_labels(
        domain: Aabb<T, N>,
        dims: [usize; N],
        labels: Vec<u32>,
        num_sites: usize,
        kind: DistanceKind,
    ) -> Result<Self, DiagramError> {
        let total = checked_total(&dims)?;
        assert_eq!(labels.len(), total, "label count must match the grid");
        if let Some((cell, &label)) =
            labels.iter().enumerate().find(|(_, &l)| l != OUTSIDE && l as usize >= num_sites)
        {
            return Err(DiagramError::BadLabel { cell, label });
        }
        Ok(GridLabeling {
            domain,
            dims,
            cell_size: cell_size(&domain, &dims),
            distances: vec![T::nan(); total],
            labels,
            kind,
            num_sites,
            ties: 0,
        })
    }

    pub fn domain(&self) -> &Aabb<T, N> {
        &self.domain
    }

    pub fn dims(&self) -> [usize; N] {
        self.dims
    }

    pub fn cell_size(&self) -> Point<T, N> {
        self.cell_size
    }

    pub fn cell_diagonal(&self) -> T {
        norm(&self.cell_size)
    }

    pub fn num_cells(&self) -> usize {
        self.labels.len()
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    /// Cells whose minimum distance was attained by more than one site.
    pub fn ties(&self) -> usize {
        self.ties
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, cell: usize) -> Option<usize> {
        match self.labels[cell] {
            OUTSIDE => None,
            l => Some(l as usize),
        }
    }

    /// Minimum distance at each cell center (NaN outside the field).
    pub fn distances(&self) -> &[T] {
        &self.distances
    }

    /// Flat index of a cell; the first axis varies fastest.
    pub fn flat_index(&self, idx: &[usize; N]) -> usize {
        (0..N).rev().fold(0, |acc, k| acc * self.dims[k] + idx[k])
    }

    pub fn cell_index(&self, flat: usize) -> [usize; N] {
        let mut rem = flat;
        std::array::from_fn(|k| {
            let c = rem % self.dims[k];
            rem /= self.dims[k];
            c
        })
    }

    pub fn center(&self, flat: usize) -> Point<T, N> {
        let idx = self.cell_index(flat);
        let half = T::lit(0.5);
        std::array::from_fn(|k| self.domain.lo[k] + (T::from_count(idx[k]) + half) * self.cell_size[k])
    }

    /// The cell containing `p`; points on the upper domain faces go to the
    /// last cell along that axis.
    pub fn cell_containing(&self, p: &Point<T, N>) -> Option<usize> {
        if !self.domain.contains(p) {
            return None;
        }
        let idx = std::array::from_fn(|k| {
            let t = ((p[k] - self.domain.lo[k]) / self.cell_size[k]).floor();
            let t = t.max(T::zero()).as_f64() as usize;
            t.min(self.dims[k] - 1)
        });
        Some(self.flat_index(&idx))
    }

    /// Face neighbours with a larger flat index, one per axis.
    fn forward_neighbors(&self, flat: usize) -> impl Iterator<Item = usize> + '_ {
        let idx = self.cell_index(flat);
        let mut stride = 1;
        (0..N).filter_map(move |k| {
            let s = stride;
            stride *= self.dims[k];
            (idx[k] + 1 < self.dims[k]).then_some(flat + s)
        })
    }
}

fn checked_total(dims: &[usize]) -> Result<usize, DiagramError> {
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    match total {
        Some(t) if t <= u32::MAX as usize => Ok(t),
        _ => Err(DiagramError::TooManyCells(format!("{dims:?}"))),
    }
}

fn cell_size<T: Real, const N: usize>(domain: &Aabb<T, N>, dims: &[usize; N]) -> Point<T, N> {
    std::array::from_fn(|k| (domain.hi[k] - domain.lo[k]) / T::from_count(dims[k]))
}

/// Lowest-index argmin of squared distances, with a tie flag.
#[inline]
fn nearest<T: Real>(dists: impl Iterator<Item = T>) -> (u32, T, bool) {
    let mut best = (0u32, T::infinity(), false);
    for (i, d) in dists.enumerate() {
        if d < best.1 {
            best = (i as u32, d, false);
        } else if d == best.1 {
            best.2 = true;
        }
    }
    best
}

/// Labels a grid of `resolution` cells per axis over the field's domain box.
pub fn label_grid<T: Real, const N: usize>(
    field: &dyn MetricField<T, N>,
    sites: &SiteSet<T, N>,
    kind: DistanceKind,
    resolution: usize,
) -> Result<GridLabeling<T, N>, DiagramError> {
    if resolution < 2 {
        return Err(DiagramError::BadResolution(resolution));
    }
    let dims = [resolution; N];
    let total = checked_total(&dims)?;
    let pts = sites.points();
    // squared metric lengths ‖M x‖² = xᵗ Q x
    let site_q: Vec<SymMat<T, N>> = sites
        .sqrt_metrics(field)?
        .iter()
        .map(|m| m.square().into_sym())
        .collect();
    let mut grid = GridLabeling::from_labels(field.domain(), dims, vec![OUTSIDE; total], pts.len(), kind)?;

    let results: Vec<(u32, T, bool)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let p = grid.center(flat);
            let (label, d2, tie) = match kind {
                DistanceKind::Dw => {
                    if !field.contains(&p) {
                        return (OUTSIDE, T::nan(), false);
                    }
                    nearest(pts.iter().zip(&site_q).map(|(v, q)| q.quadratic_form(&sub(&p, v))))
                }
                DistanceKind::Ls => {
                    let Ok(m) = field.sqrt_metric(&p) else {
                        return (OUTSIDE, T::nan(), false);
                    };
                    let q = m.square().into_sym();
                    nearest(pts.iter().map(|v| q.quadratic_form(&sub(&p, v))))
                }
            };
            (label, d2.max(T::zero()).sqrt(), tie)
        })
        .collect();

    for (flat, (label, d, tie)) in results.into_iter().enumerate() {
        grid.labels[flat] = label;
        grid.distances[flat] = d;
        grid.ties += tie as usize;
    }
    Ok(grid)
}

/// One face-connected piece of a site's region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub site: usize,
    pub cells: usize,
    /// Lowest flat cell index in the component.
    pub representative: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrphanReport {
    pub orphan_free: bool,
    /// Face-connected components per site.
    pub component_counts: Vec<usize>,
    pub orphans: Vec<Component>,
    /// Sites whose own cell carries another label; all their cells are orphans.
    pub displaced_sites: Vec<usize>,
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n as u32).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] as usize != x {
            let parent = self.0[x] as usize;
            self.0[x] = self.0[parent];
            x = parent;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the lowest index as root so representatives are canonical
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo as u32;
        }
    }
}

/// Per-cell component roots (the lowest cell index of each component).
fn component_roots<T: Real, const N: usize>(labeling: &GridLabeling<T, N>) -> Vec<u32> {
    let mut uf = UnionFind::new(labeling.num_cells());
    for flat in 0..labeling.num_cells() {
        let l = labeling.labels[flat];
        if l == OUTSIDE {
            continue;
        }
        for nb in labeling.forward_neighbors(flat) {
            if labeling.labels[nb] == l {
                uf.union(flat, nb);
            }
        }
    }
    (0..labeling.num_cells()).map(|c| uf.find(c) as u32).collect()
}

/// Cell holding each site, rejecting grids too coarse to separate them.
pub fn site_cells<T: Real, const N: usize>(
    labeling: &GridLabeling<T, N>,
    sites: &SiteSet<T, N>,
) -> Result<Vec<usize>, DiagramError> {
    if sites.len() != labeling.num_sites {
        return Err(DiagramError::SiteCountMismatch { labels: labeling.num_sites, sites: sites.len() });
    }
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cells = Vec::with_capacity(sites.len());
    for (i, p) in sites.points().iter().enumerate() {
        let cell = labeling.cell_containing(p).ok_or(DiagramError::SiteOutsideGrid { index: i })?;
        if let Some(&first) = owner.get(&cell) {
            return Err(DiagramError::ResolutionTooCoarse { first, second: i, cell });
        }
        owner.insert(cell, i);
        cells.push(cell);
    }
    Ok(cells)
}

struct Analysis {
    roots: Vec<u32>,
    report: OrphanReport,
}

fn analyse<T: Real, const N: usize>(
    labeling: &GridLabeling<T, N>,
    sites: &SiteSet<T, N>,
) -> Result<Analysis, DiagramError> {
    let own = site_cells(labeling, sites)?;
    let roots = component_roots(labeling);
    let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for (cell, &r) in roots.iter().enumerate() {
        if labeling.labels[cell] != OUTSIDE {
            *sizes.entry(r).or_default() += 1;
        }
    }
    let mut counts = vec![0; sites.len()];
    let mut orphans = Vec::new();
    for (&root, &cells) in &sizes {
        let site = labeling.labels[root as usize] as usize;
        counts[site] += 1;
        if roots[own[site]] != root {
            orphans.push(Component { site, cells, representative: root as usize });
        }
    }
    let displaced: Vec<usize> = (0..sites.len())
        .filter(|&s| labeling.labels[own[s]] as usize != s)
        .collect();
    let report = OrphanReport {
        orphan_free: orphans.is_empty() && displaced.is_empty(),
        component_counts: counts,
        orphans,
        displaced_sites: displaced,
    };
    Ok(Analysis { roots, report })
}

/// Finds region components that do not contain their site's cell.
pub fn detect_orphans<T: Real, const N: usize>(
    labeling: &GridLabeling<T, N>,
    sites: &SiteSet<T, N>,
) -> Result<OrphanReport, DiagramError> {
    analyse(labeling, sites).map(|a| a.report)
}

/// Per-cell flag marking cells that belong to an orphan component.
pub fn orphan_mask<T: Real, const N: usize>(
    labeling: &GridLabeling<T, N>,
    sites: &SiteSet<T, N>,
) -> Result<Vec<bool>, DiagramError> {
    let a = analyse(labeling, sites)?;
    let orphan_roots: std::collections::BTreeSet<u32> =
        a.report.orphans.iter().map(|c| c.representative as u32).collect();
    Ok(a.roots.iter().map(|r| orphan_roots.contains(r)).collect())
}

/// Two sites whose regions share at least one grid face.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborPair {
    pub first: usize,
    pub second: usize,
    /// Cells on either side of the shared faces, ascending and deduplicated.
    pub witnesses: Vec<usize>,
}

pub fn neighbor_pairs<T: Real, const N: usize>(labeling: &GridLabeling<T, N>) -> Vec<NeighborPair> {
    let mut pairs: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for flat in 0..labeling.num_cells() {
        let a = labeling.labels[flat];
        if a == OUTSIDE {
            continue;
        }
        for nb in labeling.forward_neighbors(flat) {
            let b = labeling.labels[nb];
            if b != OUTSIDE && b != a {
                let w = pairs.entry((a.min(b), a.max(b))).or_default();
                w.push(flat);
                w.push(nb);
            }
        }
    }
    pairs
        .into_iter()
        .map(|((a, b), mut w)| {
            w.sort_unstable();
            w.dedup();
            NeighborPair { first: a as usize, second: b as usize, witnesses: w }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation<T> {
    /// The site whose metric was used (Labelle/Shewchuk) or the first of the pair.
    pub site: usize,
    pub other: usize,
    /// Witness cell for Du/Wang checks.
    pub cell: Option<usize>,
    pub side: BoundSide,
    pub value: T,
    pub bound: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborBoundReport<T> {
    pub kind: DistanceKind,
    pub pairs: usize,
    pub checks: usize,
    pub slack: T,
    pub violations: Vec<BoundViolation<T>>,
}

/// Checks the neighbour separation bounds that orphan-freedom implies.
///
/// Du/Wang: `‖M_c(v − w)‖ > P/(1 + Cσ) − slack` at every witness cell `c` of
/// the pair. Labelle/Shewchuk: `P/k ≤ ‖M_v(v − w)‖ ≤ C(1 + k) + slack` in
/// both orders, with `k = (1 + Cσ)/(1 − Cσ)`. The slack is the cell
/// diagonal times the largest `ρ(M)` over the cell centers.
pub fn check_neighbor_bounds<T: Real, const N: usize>(
    labeling: &GridLabeling<T, N>,
    sites: &SiteSet<T, N>,
    field: &dyn MetricField<T, N>,
    cover: T,
    packing: T,
    sigma: T,
    kind: DistanceKind,
) -> Result<NeighborBoundReport<T>, DiagramError> {
    if sites.len() != labeling.num_sites {
        return Err(DiagramError::SiteCountMismatch { labels: labeling.num_sites, sites: sites.len() });
    }
    let x = cover * sigma;
    if kind == DistanceKind::Ls && x >= T::one() {
        return Err(DiagramError::RatioUndefined(x.as_f64()));
    }
    let rho_max = (0..labeling.num_cells())
        .into_par_iter()
        .filter_map(|c| field.sqrt_metric(&labeling.center(c)).ok().map(|m| m.rho()))
        .reduce(|| T::zero(), T::max);
    let slack = labeling.cell_diagonal() * rho_max;
    let pts = sites.points();
    let pairs = neighbor_pairs(labeling);
    let mut checks = 0;
    let mut violations = Vec::new();
    match kind {
        DistanceKind::Dw => {
            let bound = packing / (T::one() + x) - slack;
            for pair in &pairs {
                let d = sub(&pts[pair.first], &pts[pair.second]);
                for &c in &pair.witnesses {
                    let Ok(m) = field.sqrt_metric(&labeling.center(c)) else { continue };
                    checks += 1;
                    let value = m.length(&d);
                    if !(value > bound) {
                        violations.push(BoundViolation {
                            site: pair.first,
                            other: pair.second,
                            cell: Some(c),
                            side: BoundSide::Lower,
                            value,
                            bound,
                        });
                    }
                }
            }
        }
        DistanceKind::Ls => {
            let k = (T::one() + x) / (T::one() - x);
            let lower = packing / k;
            let upper = cover * (T::one() + k) + slack;
            let mats = sites.sqrt_metrics(field)?;
            for pair in &pairs {
                for (v, w) in [(pair.first, pair.second), (pair.second, pair.first)] {
                    checks += 1;
                    let value = mats[v].length(&sub(&pts[v], &pts[w]));
                    let mut flag = |side, bound| {
                        violations.push(BoundViolation { site: v, other: w, cell: None, side, value, bound })
                    };
                    if value < lower {
                        flag(BoundSide::Lower, lower);
                    }
                    if value > upper {
                        flag(BoundSide::Upper, upper);
                    }
                }
            }
        }
    }
    Ok(NeighborBoundReport { kind, pairs: pairs.len(), checks, slack, violations })
}
