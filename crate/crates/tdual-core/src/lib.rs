//! Finite models of groupoid T-duality.
//!
//! The crate builds finite groupoids, twists them by 2-cocycles, forms the
//! associated twisted convolution algebras over cyclotomic rationals, and
//! mechanically verifies Morita equivalences between the two sides of a
//! duality. Everything is exact: torus-valued cochains are rationals mod 1,
//! algebra structure constants are roots of unity, and every claimed
//! equivalence is certified by an explicit bimodule or isomorphism that the
//! test suite re-checks from the axioms.

pub mod action;
pub mod cochain;
pub mod cohomology;
pub mod constructions;
pub mod cyclotomic;
pub mod equivariant;
pub mod fixtures;
pub mod group;
pub mod groupoid;
pub mod hilbert;
pub mod morita;
pub mod pipeline;
pub mod pontryagin;
pub mod report;
pub mod serialize;
pub mod snf;
pub mod star;
pub mod torus;

pub use groupoid::{FiniteGroupoid, GpRef};
pub use torus::Tor;
