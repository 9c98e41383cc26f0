//! Structure-preserving block Kronecker linearizations of odd-grade matrix
//! polynomials, and a global structured backward error pipeline for them.
//!
//! The crate is `no_std` (it needs `alloc`). Dense linear algebra comes from
//! nalgebra; the generalized eigenvalue solver is a small complex QZ.
//!
//! ```
//! use strukt_core::{linearize, polycore::{random_structured, StructureKind}};
//!
//! let p = random_structured::<f64>(2, 5, StructureKind::Palindromic, 1.0, 42).unwrap();
//! let pencil = linearize::linearize(&p, StructureKind::Palindromic, linearize::Placement::Tridiagonal).unwrap();
//! let q = linearize::recover(&pencil);
//! assert!(q.checked_sub(&p).unwrap().frob_norm() < 1e-13);
//! ```
#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]
// `!(x < y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod backward;
pub mod dense;
mod error;
pub mod linearize;
pub mod minbases;
pub mod polycore;
pub mod rng;
mod scalar;
pub mod spectra;
pub mod sylvester;

pub use error::{Error, Result};
pub use nalgebra;
pub use scalar::{Field, Scalar};
