//! Finite-dimensional C*-algebras and proper correspondences, the Duskin
//! nerve of the correspondence bicategory, barycentric subdivision, and the
//! horn-filling extension of C*-stable functors to that nerve.
//!
//! All linear algebra is in complex double precision with coordinates fixed by
//! matrix-unit bases; see [`linalg::EPS`] for the comparison tolerance.
//!
//! ```
//! use corrlab::random::{self, Limits};
//! use corrlab::nerve::{fill_horn, HornSpec};
//!
//! let mut rng = random::rng(42);
//! let s = random::random_simplex(&mut rng, 3, Limits { max_blocks: 2, max_size: 2 }, true)?;
//! let filled = fill_horn(&HornSpec::of_simplex(&s, 2)?)?;
//! assert!(filled.dist(&s) < 1e-9);
//! # Ok::<(), corrlab::error::Error>(())
//! ```

pub mod cstar;
pub mod error;
pub mod linalg;
pub mod hilbert;
pub mod bicat;
pub mod nerve;
pub mod random;
pub mod subdivision;
pub mod extension;
pub mod serial;
pub mod selftest;
pub mod validate;
