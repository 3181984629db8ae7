//! Numerical core for NV-detected NMR of dipolar-coupled solids.
//!
//! The nuclear sample is driven by an LG4 Lee-Goldburg train that averages
//! out homonuclear dipolar couplings while turning each chemical shift into a
//! slow precession about a fixed effective axis. A synchronized microwave
//! sequence on an NV sensor reads that precession out once per LG4 block.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, spectra, and the
//! experiment runner live in the `lg4nmr-lab` companion crate.
//!
//! Conventions used throughout:
//! - every frequency is angular (rad/s); conversion from Hz happens at the
//!   configuration boundary;
//! - one RF segment lasts `T = 2π/Ω̄`, a full turn about its tilted axis;
//! - a chemical shift `δ` enters the rotating-frame Hamiltonian as `−δ I_z`
//!   (see [`dynamics::frame_offset`]).

#![no_std]
// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod constants;
pub mod dynamics;
mod error;
pub mod geometry;
pub mod noise;
pub mod sample;
pub mod sensor;
pub mod sequence;
pub mod vector;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
