//! Numerical core for cyclotomic (`Z_T`-equivariant) Gaudin models.
//!
//! Builds Lax matrices with poles at the origin, at `Z_T`-orbits and at
//! infinity, evaluates the twisted classical r-matrix, Hamiltonians and Lax
//! partners by residues, and integrates the resulting commuting flows for
//! the periodic Toda chain, its DST (discrete self-trapping) cousin and the
//! coupled system.
#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod gaudin;
pub mod models;
pub mod ratmat;
pub mod rmatrix;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{C64, Dual, Scalar};
