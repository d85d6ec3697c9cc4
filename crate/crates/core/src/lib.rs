//! Transport-map approximation of shallow networks.
//!
//! Every continuous target on the unit ball is written as an infinite-width
//! threshold or ReLU network through its Fourier data.  The infinite network
//! is turned into a transport map `T` on Gaussian initialisations, and a
//! finite sample `w̃_j ~ G` is moved by `T/(ε√m)` to give a width-`m` network
//! in the near-initialisation (NTK) regime.  Every bound on the way is
//! computed explicitly and can be checked against Monte Carlo estimates.
//!
//! Module map:
//!
//! - [`math`]: vectors, activations, Gaussian law and tail bounds.
//! - [`targets`]: registry targets, Fourier data, smoothing and continuity.
//! - [`representation`]: infinite-width threshold and ReLU networks.
//! - [`transport`]: transport maps, their sup norms and RKHS truncations.
//! - [`sampling`]: sample batches, signed densities and sampling bounds.
//! - [`networks`]: finite networks, direct constructions and net files.
//! - [`metrics`]: probe measures, bound reports and certificates.

// NaN-rejecting checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod math;
pub mod metrics;
pub mod networks;
pub mod quad;
pub mod representation;
pub mod rng;
pub mod sampling;
pub mod targets;
pub mod transport;

pub use error::{Error, Result};
pub use rng::RngStream;
