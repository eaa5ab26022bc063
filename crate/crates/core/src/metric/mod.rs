//! Metric fields given by their square-root matrix field `M`, the two
//! anisotropic distances, and spectral helpers.

mod field;
pub mod io;
mod mesh;
mod spd;

pub use field::{
    dw_distance, ls_distance, Aabb, AnalyticField, DistanceKind, FieldKind, MetricError, MetricField,
    Smoothness, FD_RELATIVE_STEP,
};
pub use mesh::{Location, MeshError, SimplicialMetricMesh, BARY_TOL, DEGENERACY_TOL};
pub use spd::{rho, rho_min, rho_min_general, sqrt_spd, SpdError, SpdMatrix};

