//! Orphan-freedom certification for anisotropic Voronoi diagrams.
//!
//! The crate evaluates metric-variation bounds of piecewise-linear and
//! analytic square-root metric fields, measures cover and packing constants
//! of site sets, checks the Du/Wang and Labelle/Shewchuk orphan-freedom
//! conditions, and computes grid-discretised diagrams to confirm them.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`) and over the
//! dimension `N ∈ {2, 3}`; the aliases below fix `f64`.

pub mod certify;
pub mod cli;
pub mod diagram;
pub mod linalg;
pub mod metric;
pub mod sampling;
pub mod scalar;
pub mod sites;
pub mod variation;
pub mod verify;


pub use scalar::Real;

pub type Point2 = linalg::Point<f64, 2>;
pub type Point3 = linalg::Point<f64, 3>;
pub type SymMat2 = linalg::SymMat<f64, 2>;
pub type SymMat3 = linalg::SymMat<f64, 3>;
pub type SpdMatrix2 = metric::SpdMatrix<f64, 2>;
pub type SpdMatrix3 = metric::SpdMatrix<f64, 3>;
pub type Mesh2 = metric::SimplicialMetricMesh<f64, 2>;
pub type Mesh3 = metric::SimplicialMetricMesh<f64, 3>;
pub type AnalyticField2 = metric::AnalyticField<f64, 2>;
pub type AnalyticField3 = metric::AnalyticField<f64, 3>;
pub type SiteSet2 = sites::SiteSet<f64, 2>;
pub type SiteSet3 = sites::SiteSet<f64, 3>;
pub type GridLabeling2 = diagram::GridLabeling<f64, 2>;
pub type GridLabeling3 = diagram::GridLabeling<f64, 3>;
pub type Certificate64 = certify::Certificate<f64>;
