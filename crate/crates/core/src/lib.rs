//! Numerical geometry of hypersurfaces measured with their second
//! fundamental form: charts and curvature jets, fundamental forms, the
//! II-metric connection and its mean curvature H_II, first-variation
//! checks, curves in surfaces, and geodesic-sphere power series.

pub mod ambient;
pub mod curves;
pub mod error;
pub mod hypersurface;
pub mod iigeom;
pub mod jet;
pub mod linalg;
pub mod riemann;
pub mod spheres;
pub mod variation;

pub use error::{GeomError, Result};
