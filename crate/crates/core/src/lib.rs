//! Geometry and statistics on closed flat surfaces with cone singularities.
//!
//! The crate is organized bottom-up: [`surface`] holds glued polygons and
//! their cone points, [`cast`] unfolds straight rays and wedges across the
//! gluings, [`saddle`] enumerates saddle connections and cylinders,
//! [`geodesic`] validates and extends local geodesics, [`cover`] models the
//! universal cover as the tree of lifted singularities, [`entropy`] counts
//! orbit growth and Patterson–Sullivan weights, and [`flow`] samples typical
//! geodesics and measures passage frequencies. [`io`] reads surface files
//! and writes CSV reports.

pub mod bundled;
pub mod cast;
pub mod cover;
pub mod entropy;
pub mod flow;
pub mod geodesic;
pub mod geom;
pub mod io;
pub mod saddle;
pub mod surface;

pub type Vector = geom::Vec2<f64>;
pub type Point = geom::Vec2<f64>;
pub type Isometry = geom::Iso<f64>;

pub use surface::{build_surface, gauss_bonnet_check, DirectionAt, FlatSurface, SurfacePoint, SurfaceSpec};

/// Global geometric tolerances.
///
/// `len` is the clearance below which a ray is considered to touch a point
/// (grazing contacts are blocked); `angle` is the slack on every angle
/// comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub len: f64,
    pub angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { len: 1e-9, angle: 1e-9 }
    }
}
