//! Simulation and statistics for weak measurements on tunnelling particles.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: grids, wavefunctions, barriers, region projectors and spin-j
//!   operators. Natural units (ħ = m = 1) throughout.
//! * [`scatter`]: stationary transfer-matrix scattering and group delay.
//! * [`tdse`]: forward/backward time-dependent Schrödinger propagation with a
//!   spectral split-step scheme and an implicit finite-difference scheme.
//! * [`weakval`]: weak values, weak moments, conditional (post-selected)
//!   position distributions and conditional dwell times.
//! * [`pointer`]: Gaussian von Neumann pointers, which-path and erased joint
//!   detector states, and the two-probe scenario.
//! * [`corpuscle`]: the one-detector-per-particle null model, its minimal
//!   difference variance and a bootstrap test against it.

// `!(x < y)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpuscle;
pub mod pointer;
pub mod quantum;
pub mod scatter;
pub mod tdse;
pub mod weakval;

pub use num_complex::Complex64;
