//! Design and simulation toolkit for the two-user Gaussian multiple access
//! channel with multilevel coding.
//!
//! The pipeline is:
//!
//! 1. [`constellation`]: user constellations, their multilevel decomposition,
//!    the received sum constellation, (per-level) sum capacities and a
//!    numerical constellation optimizer.
//! 2. [`exit`]: EXIT-chart analysis of the per-level joint decoder including
//!    the MAC state node.
//! 3. [`codedesign`]: LP-based alternating optimization of the variable-node
//!    degree distributions of both users.
//! 4. [`ldpc`]: finite-length codes by progressive edge growth, GF(2)
//!    encoding and syndrome checks.
//! 5. [`decoder`]: joint belief propagation with the state node plus
//!    successive cancellation across levels.
//! 6. [`sim`]: Monte-Carlo BER harness with reproducible random streams.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod codedesign;
pub mod constellation;
pub mod decoder;
pub mod exit;
pub mod ldpc;
pub mod numerics;
pub mod sim;
pub mod snr;

pub use numerics::NumericsError;
