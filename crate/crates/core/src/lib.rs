//! Convex billiards: periodic and closed-string billiard trajectories in
//! smooth strictly convex bodies as critical points of the length functional,
//! together with the cohomological lower bounds on their number.

pub mod cohomology;
pub mod configuration;
pub mod error;
pub mod geometry;
pub mod report;
pub mod solver;
pub mod sphere;
pub mod symmetry;

pub use configuration::{Configuration, ConfigurationRecord, Frame, Kind, TangentVector};
pub use error::{Error, Result};
pub use geometry::{BodySpec, ConvexBody, Polynomial, Shape, Term};
pub use symmetry::{DihedralElement, SymmetryGroup};

// The guide's and README's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bodies.md")]
    mod bodies {}
    #[doc = include_str!("../../../book/src/configurations.md")]
    mod configurations {}
    #[doc = include_str!("../../../book/src/sphere.md")]
    mod sphere {}
    #[doc = include_str!("../../../book/src/cohomology.md")]
    mod cohomology {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
