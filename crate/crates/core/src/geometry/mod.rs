//! Billiard tables as closed, oriented, piecewise-smooth planar boundaries.
//!
//! Every component is traversed with the billiard domain on its left, so the
//! inward normal is always the left normal of the unit tangent. Outer walls
//! therefore wind counterclockwise and obstacles clockwise.

mod component;
mod flat;
mod table;
mod vec2;

pub use component::{
    BoundaryComponent, BoundaryFrame, ComponentKind, CurvatureClass, DomainSide, Shape,
};
pub use flat::{FlatCurve, NoConvergence};
pub use table::{
    build_table, GeometryError, Junction, JunctionKind, MembershipRuleId, TableGeometry,
    TableSpec,
};
pub use vec2::Vec2;
