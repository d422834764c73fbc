//! Least-squares estimation of the cascaded user–RIS–BS channel for MISO links
//! assisted by a group-connected beyond-diagonal RIS (BD-RIS), together with
//! the MSE-optimal training codebook and a reproducible Monte Carlo harness.
//!
//! Module map:
//!
//! - [`linalg`]: dense complex matrices, Kronecker/Hadamard products,
//!   column-major `vec`/`unvec`, DFT and Sylvester Hadamard generators.
//! - [`codebook`]: construction, validation and export of the training matrix
//!   whose column `t` stacks `vec` of the per-group scattering blocks of slot `t`.
//! - [`channel`]: Rayleigh channels with distance pathloss, the cascaded
//!   channel `Q`, and the uplink/downlink reciprocity identity.
//! - [`estimator`]: uplink training simulation, the LS estimator and its MSE.
//! - [`harness`]: experiment configuration, seeded power sweeps and CSV output.

pub mod channel;
pub mod codebook;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod seed;
