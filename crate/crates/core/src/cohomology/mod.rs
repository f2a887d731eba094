//! Cohomology rings of the configuration spaces of the round sphere and the
//! trajectory-count bounds they imply.

pub mod bounds;
pub mod ring;
pub mod spaces;

pub use bounds::{all_closed_bounds, bound_closed, bound_periodic, is_prime, BoundKind, BoundReport, Clause, Witness, CATEGORY_WEIGHT_E};
pub use ring::{BasisElement, Coefficients, CupLength, GradedRing, RingDump, RingElement};
pub use spaces::{
    apply_signs, binomial, binomial_parity, closed_string_ring, cyclic_ring, poincare_polynomial_quotient, poly_div_exact,
    projective_space_ring, quotient_ring, reflection_action,
};
