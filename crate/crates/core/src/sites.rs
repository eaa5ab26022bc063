//! Site sets and their Delone constants.
//!
//! Distances always take the point first and the site second, `D(p, v)`,
//! matching the region definition; for Du/Wang that evaluates the metric at
//! the site, for Labelle/Shewchuk at the query point.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{norm, sub, Point};
use crate::metric::io::{parse_header, parse_num, records, syntax, ParseError};
use crate::metric::{Aabb, DistanceKind, MetricError, MetricField, SpdMatrix};
use crate::scalar::Real;

/// Relative separation below which two sites count as coincident.
pub const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SitesError {
    #[error("site set is empty")]
    Empty,
    #[error("at least two sites are required, got {0}")]
    TooFewSites(usize),
    #[error("sites {first} and {second} coincide")]
    Duplicate { first: usize, second: usize },
    #[error("site {index} lies outside the metric field domain")]
    OutsideField { index: usize },
    #[error("resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet<T, const N: usize> {
    points: Vec<Point<T, N>>,
}

impl<T: Real, const N: usize> SiteSet<T, N> {
    pub fn new(points: Vec<Point<T, N>>) -> Result<Self, SitesError> {
        if points.is_empty() {
            return Err(SitesError::Empty);
        }
        let scale = Aabb::from_points(&points).unwrap().diameter().max(T::one());
        let tol = T::lit(DUPLICATE_TOL) * scale;
        // sort along the first axis so only a narrow band is compared
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a][0].partial_cmp(&points[b][0]).unwrap().then(a.cmp(&b)));
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                if points[b][0] - points[a][0] > tol {
                    break;
                }
                if norm(&sub(&points[a], &points[b])) <= tol {
                    return Err(SitesError::Duplicate { first: a.min(b), second: a.max(b) });
                }
            }
        }
        Ok(SiteSet { points })
    }

    pub fn points(&self) -> &[Point<T, N>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Errors with the first site the field cannot evaluate.
    pub fn check_inside(&self, field: &dyn MetricField<T, N>) -> Result<(), SitesError> {
        match self.points.iter().position(|p| !field.contains(p)) {
            Some(index) => Err(SitesError::OutsideField { index }),
            None => Ok(()),
        }
    }

    /// `M` at every site.
    pub fn sqrt_metrics(&self, field: &dyn MetricField<T, N>) -> Result<Vec<SpdMatrix<T, N>>, SitesError> {
        self.check_inside(field)?;
        self.points.iter().map(|p| field.sqrt_metric(p).map_err(SitesError::from)).collect()
    }
}

/// `D(a, b)` for the given kind, from precomputed `M_a` and `M_b`.
#[inline]
pub(crate) fn kind_distance<T: Real, const N: usize>(
    kind: DistanceKind,
    a: &Point<T, N>,
    ma: &SpdMatrix<T, N>,
    b: &Point<T, N>,
    mb: &SpdMatrix<T, N>,
) -> T {
    match kind {
        DistanceKind::Dw => mb.length(&sub(a, b)),
        DistanceKind::Ls => ma.length(&sub(a, b)),
    }
}

/// Largest `P` for which the sites form an asymmetric `P`-packing:
/// the minimum over unordered pairs of `max(D(v, w), D(w, v))`.
pub fn packing_constant<T: Real, const N: usize>(
    sites: &SiteSet<T, N>,
    field: &dyn MetricField<T, N>,
    kind: DistanceKind,
) -> Result<T, SitesError> {
    if sites.len() < 2 {
        return Err(SitesError::TooFewSites(sites.len()));
    }
    let mats = sites.sqrt_metrics(field)?;
    let pts = sites.points();
    let p = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best = T::infinity();
            for j in i + 1..pts.len() {
                let vw = kind_distance(kind, &pts[i], &mats[i], &pts[j], &mats[j]);
                let wv = kind_distance(kind, &pts[j], &mats[j], &pts[i], &mats[i]);
                best = best.min(vw.max(wv));
            }
            best
        })
        .reduce(T::infinity, T::min);
    Ok(p)
}

/// Grid estimate of the cover constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverEstimate<T> {
    pub value: T,
    /// Grid nodes per axis.
    pub resolution: usize,
}

/// Node `i` of a `resolution`-node-per-axis lattice spanning the box,
/// corners included.
pub(crate) fn lattice_node<T: Real, const N: usize>(dom: &Aabb<T, N>, resolution: usize, flat: usize) -> Point<T, N> {
    let mut rem = flat;
    let denom = T::from_count(resolution - 1);
    std::array::from_fn(|k| {
        let c = rem % resolution;
        rem /= resolution;
        if c == resolution - 1 {
            dom.hi[k]
        } else {
            dom.lo[k] + (dom.hi[k] - dom.lo[k]) * T::from_count(c) / denom
        }
    })
}

/// Maximum over lattice nodes `p` of `min_v D(p, v)`.
///
/// The lattice has `resolution` nodes per axis including the domain
/// corners; nodes outside the field (non-convex complexes) are skipped.
pub fn cover_constant<T: Real, const N: usize>(
    sites: &SiteSet<T, N>,
    field: &dyn MetricField<T, N>,
    kind: DistanceKind,
    resolution: usize,
) -> Result<CoverEstimate<T>, SitesError> {
    if sites.is_empty() {
        return Err(SitesError::Empty);
    }
    if resolution < 2 {
        return Err(SitesError::BadResolution(resolution));
    }
    let mats = sites.sqrt_metrics(field)?;
    let dom = field.domain();
    let total = resolution.pow(N as u32);
    let pts = sites.points();
    let value = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let p = lattice_node(&dom, resolution, flat);
            let d = match kind {
                DistanceKind::Dw => pts
                    .iter()
                    .zip(&mats)
                    .map(|(v, mv)| mv.length(&sub(&p, v)))
                    .fold(T::infinity(), T::min),
                DistanceKind::Ls => {
                    let mp = field.sqrt_metric(&p).ok()?;
                    let mp = mp.as_sym();
                    pts.iter().map(|v| norm(&mp.mul_vec(&sub(&p, v)))).fold(T::infinity(), T::min)
                }
            };
            Some(d)
        })
        .reduce(|| T::zero(), T::max);
    Ok(CoverEstimate { value, resolution })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeloneClass {
    /// `P ≥ C`: an asymmetric ε-net with `ε = C`.
    Net,
    Delone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification<T> {
    pub ratio: T,
    pub class: DeloneClass,
}

pub fn classify_delone<T: Real>(cover: T, packing: T) -> Result<Classification<T>, SitesError> {
    if !(cover > T::zero()) {
        return Err(SitesError::NonPositive { name: "cover", value: cover.as_f64() });
    }
    if !(packing > T::zero()) {
        return Err(SitesError::NonPositive { name: "packing", value: packing.as_f64() });
    }
    let ratio = packing / cover;
    let class = if ratio >= T::one() { DeloneClass::Net } else { DeloneClass::Delone };
    Ok(Classification { ratio, class })
}

/// Dimension declared in an `avdsites` header.
pub fn sites_dimension(text: &str) -> Result<usize, ParseError> {
    parse_header(text, "avdsites", 2).map(|(n, _)| n)
}

/// Parses `avdsites <n> <count>` followed by one `x y [z]` line per site.
pub fn parse_sites<T: Real, const N: usize>(text: &str) -> Result<Vec<Point<T, N>>, ParseError> {
    let (n, counts) = parse_header(text, "avdsites", 2)?;
    if n != N {
        return Err(syntax(1, format!("sites are {n}-dimensional, expected {N}")));
    }
    let count = counts[0];
    let mut out = Vec::with_capacity(count);
    let mut last = 1;
    for (line, toks) in records(text).skip(1) {
        last = line;
        if toks.len() != N {
            return Err(syntax(line, format!("site line needs {N} coordinates, found {}", toks.len())));
        }
        if out.len() == count {
            return Err(syntax(line, format!("more than the declared {count} sites")));
        }
        let nums = toks.iter().map(|t| parse_num::<T>(t, line)).collect::<Result<Vec<_>, _>>()?;
        out.push(std::array::from_fn(|k| nums[k]));
    }
    if out.len() != count {
        return Err(syntax(last, format!("declared {count} sites, found {}", out.len())));
    }
    Ok(out)
}

pub fn write_sites<T: Real, const N: usize>(points: &[Point<T, N>]) -> String {
    let mut out = format!("avdsites {N} {}\n", points.len());
    for p in points {
        let line: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMat;
    use crate::metric::{AnalyticField, Smoothness};
    use approx::assert_relative_eq;

    fn identity(dom: Aabb<f64, 2>) -> AnalyticField<f64, 2> {
        AnalyticField::constant(dom, SpdMatrix::identity())
    }

    #[test]
    fn packing_examples() {
        let f = identity(Aabb::new([-5.0, -5.0], [5.0, 5.0]));
        let two = SiteSet::new(vec![[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(packing_constant(&two, &f, DistanceKind::Dw).unwrap(), 2.0);
        let three = SiteSet::new(vec![[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]]).unwrap();
        assert_eq!(packing_constant(&three, &f, DistanceKind::Ls).unwrap(), 1.0);
        let one = SiteSet::new(vec![[0.0, 0.0]]).unwrap();
        assert_eq!(packing_constant(&one, &f, DistanceKind::Dw), Err(SitesError::TooFewSites(1)));
    }

    #[test]
    fn asymmetric_packing_takes_larger_direction() {
        // M = I at v = (0,0), M = 2I at w = (1,0)
        let f = AnalyticField::<f64, 2>::new(Aabb::new([-1.0, -1.0], [2.0, 1.0]), Smoothness::C0, |p| {
            if p[0] > 0.5 {
                SymMat::identity().scaled(2.0)
            } else {
                SymMat::identity()
            }
        });
        let s = SiteSet::new(vec![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(packing_constant(&s, &f, DistanceKind::Dw).unwrap(), 2.0);
        assert_eq!(packing_constant(&s, &f, DistanceKind::Ls).unwrap(), 2.0);
    }

    #[test]
    fn single_site_cover_is_farthest_corner() {
        let f = identity(Aabb::unit());
        let s = SiteSet::new(vec![[0.5, 0.5]]).unwrap();
        for res in [2, 3, 17] {
            let c = cover_constant(&s, &f, DistanceKind::Dw, res).unwrap();
            assert_relative_eq!(c.value, 0.5f64.sqrt(), epsilon = 1e-15);
            assert_eq!(c.resolution, res);
        }
    }

    #[test]
    fn grid_sites_cover_within_cell_diagonal() {
        let f = identity(Aabb::unit());
        let pts: Vec<[f64; 2]> = (0..36).map(|i| [(i % 6) as f64 / 5.0, (i / 6) as f64 / 5.0]).collect();
        let s = SiteSet::new(pts).unwrap();
        let c = cover_constant(&s, &f, DistanceKind::Ls, 11).unwrap();
        assert!(c.value <= 0.2 * 2f64.sqrt() + 1e-15);
    }

    #[test]
    fn cover_errors() {
        let f = identity(Aabb::unit());
        let s = SiteSet::new(vec![[0.5, 0.5]]).unwrap();
        assert_eq!(cover_constant(&s, &f, DistanceKind::Dw, 1), Err(SitesError::BadResolution(1)));
        assert_eq!(SiteSet::<f64, 2>::new(vec![]), Err(SitesError::Empty));
        let out = SiteSet::new(vec![[1.5, 0.5]]).unwrap();
        assert_eq!(
            cover_constant(&out, &f, DistanceKind::Dw, 4),
            Err(SitesError::OutsideField { index: 0 })
        );
    }

    #[test]
    fn duplicates_rejected() {
        assert_eq!(
            SiteSet::new(vec![[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]),
            Err(SitesError::Duplicate { first: 0, second: 2 })
        );
    }

    #[test]
    fn classification() {
        let c = classify_delone(1.0, 1.0).unwrap();
        assert_eq!((c.ratio, c.class), (1.0, DeloneClass::Net));
        let c = classify_delone(1.0, 0.5).unwrap();
        assert_eq!((c.ratio, c.class), (0.5, DeloneClass::Delone));
        let c = classify_delone(0.1, 0.2).unwrap();
        assert_eq!((c.ratio, c.class), (2.0, DeloneClass::Net));
        assert!(classify_delone(0.0, 1.0).is_err());
        assert!(classify_delone(1.0, -1.0).is_err());
    }

    #[test]
    fn sites_file_roundtrip_and_errors() {
        let pts = vec![[0.25, 0.5], [0.75, 0.125]];
        let text = write_sites(&pts);
        assert_eq!(parse_sites::<f64, 2>(&text).unwrap(), pts);
        assert_eq!(sites_dimension(&text).unwrap(), 2);
        assert!(matches!(
            parse_sites::<f64, 2>("avdsites 2 2\n0 0\n1\n"),
            Err(ParseError::Syntax { line: 3, .. })
        ));
        assert!(parse_sites::<f64, 2>("avdsites 2 3\n0 0\n1 1\n").is_err());
        assert!(parse_sites::<f64, 3>("avdsites 2 1\n0 0\n").is_err());
    }
}
