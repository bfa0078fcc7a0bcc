//! Numerics for von Neumann flows presented as special flows over circle
//! rotations: continued fractions, roof functions, flow arithmetic, the
//! matching construction for joinings, and coboundary diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle;
pub mod coboundary;
pub mod diophantine;
pub mod error;
pub mod joining;
pub mod matching;
pub mod numeric;
pub mod roof;
pub mod special_flow;
pub mod trichotomy;

pub use circle::{ArcInterval, HitTest};
pub use diophantine::{ContinuedFraction, Frequency, FrequencySpec};
pub use error::{Error, Result};
pub use numeric::{Dd, NeumaierSum};
pub use roof::{RoofFunction, TrigPoly};
pub use special_flow::{FlowParams, FlowPoint};
