//! Static quasi-local mass of tori in the Kottler manifold.
//!
//! The crate follows the constructive chain: a graphical torus in
//! (ℝ × T², ds² + e^{2s}σ) is flowed outward by its unit normal, the
//! resulting foliation carries a Bartnik–Shi–Tam type extension
//! g₊ = w²dt² + γₜ with scalar curvature −6, and the static Brown–York
//! mass of the leaves is tracked down to the total mass of the extension.

#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::type_complexity
)]

pub mod artifacts;
pub mod cli;
mod curvature;
pub mod error;
pub mod extension;
pub mod flow;
pub mod geometry;
pub mod geon;
pub mod grid;
pub mod mass;
pub mod ode;
pub mod pipeline;
pub mod radial;

pub use error::{KmlError, Result};
