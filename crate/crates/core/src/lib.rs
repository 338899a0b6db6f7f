//! Geometric and spectral data of compact orientable hyperbolic orbisurfaces.
//!
//! The crate computes, for a cocompact Fuchsian group given by generator
//! matrices (or a built-in triangle-group preset):
//!
//! - conjugacy classes and the oriented primitive length spectrum,
//! - cone points with their orders,
//! - every term of the Selberg trace formula for admissible test functions,
//! - the mollified wave trace, and the inverse procedure that recovers the
//!   length spectrum, cone orders, and genus back from wave-trace data.

pub mod enumeration;
pub mod error;
pub mod io;
pub mod moebius;
pub mod orbifold;
pub mod psi;
pub mod quad;
pub mod spectrum;
pub mod testfn;
pub mod trace;
pub mod wave;

pub use error::{Error, Result};
pub use moebius::{approx_conjugate, IsometryKind, MoebiusElement};
pub use orbifold::{
    genus_from, triangle_group_generators, HyperbolicStructure, OrbifoldSignature, Rational,
};
pub use spectrum::{cone_points, length_spectrum, ConjugacyClassRecord, LengthSpectrum};
pub use testfn::{gaussian_heat_pair, SpectralParameters, TestFunctionPair};
pub use wave::{full_inverse, peel_off, synthesize_mollified, MollifiedTrace, WaveTraceModel};
