//! Phase spaces the walks act on: tori with integer-matrix actions, the
//! Heisenberg nilmanifold, random sceneries over free groups, and the
//! motion group's rotation factor.

pub mod motion;
pub mod nil;
pub mod scenery;
pub mod torus;

pub use motion::{affine_fixed_point_residual, complex_to_real, MotionElement};
pub use nil::{nil_reduce, NilAffine, NilPoint};
pub use scenery::{
    affine_span_is_full, differences_generate_lattice, scenery_value_index, SceneryLaw,
    SceneryPoint,
};
pub use torus::{frac01, frac_rep, ToralPoint, TorusAction};
