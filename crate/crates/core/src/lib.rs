//! Roots of unital completely positive maps on matrix algebras.
//!
//! Maps act in the Heisenberg picture `x -> Σ L_i* x L_i`. Superoperators use
//! column-stacking `vec`, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

pub mod commutative;
pub mod cpmap;
pub mod discrete;
pub mod error;
pub mod fixtures;
pub mod numerics;
pub mod semigroups;

pub use cpmap::{compress, support_projection, CMap, MapFlags, Projection, StateSpec};
pub use discrete::{
    construct_state_root, verify_proper_root, RootCertificate, StateRoot, Verdict,
};
pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, Tolerance};
