//! Exact algebra for reduced 1-dimensional orbifolds: piecewise signed-power
//! maps, orbifold charts and atlases, marked atlas groupoids, and orbifold
//! map representatives with their groupoid homomorphisms.
#![cfg_attr(not(feature = "std"), no_std)]
// errors carry exact rationals and intervals; boxing them buys nothing here
#![allow(clippy::result_large_err)]

extern crate alloc;

pub mod interval;
pub mod rational;
pub mod symfun;

pub use interval::{DomainSet, Ext, Interval};
pub use rational::Q;
pub use symfun::{Germ, Parity, Piece, PiecewiseFn, SymError};
pub mod charts;
pub mod fixtures;
pub mod groupoid;
pub mod maps;
pub mod probe;
pub mod report;
