//! Numerics for pluri-Jensen measures, relative extremal functions and the
//! equidistribution of Henon-type pullbacks.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod cvec;
pub mod disk;
pub mod dynamics;
pub mod envelope;
pub mod equidist;
pub mod error;
pub mod grid;
pub mod jensen;
pub mod mapfile;
pub mod poly;

pub use cvec::{CVec, C64};
pub use error::{Error, Result};
