//! Numerical core for the de-singularized Biot-Savart filament model.
//!
//! The potential family `phi(z) = gamma / sqrt(|z|^2 + mu^2 |z|^delta)` with
//! `delta` in `[0, 4/5]` drives everything here: its derivatives and strain
//! kernel ([`kernel`]), discrete closed curves ([`geometry`]), filament time
//! stepping ([`dynamics`]), particle vorticity diagnostics ([`field`]) and the
//! scalar Gronwall envelope checks ([`gronwall`]).
//!
//! The crate is `no_std` (with `alloc`) when built without the `std` feature.
//! The `parallel` feature spreads pairwise sums over target indices with
//! rayon; every reduction keeps a fixed summation order, so results are
//! bit-identical regardless of thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod gronwall;
pub mod kernel;
pub mod linalg;
mod math;
mod par;

pub use error::{Error, Result};
pub use linalg::{Mat3, Vec3};
