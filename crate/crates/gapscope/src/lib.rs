//! Numerical toolkit for the almost Mathieu operator
//! `(Hu)_n = u_{n+1} + u_{n−1} + 2λ cos(2π(nα + θ)) u_n`.
//!
//! * [`arithmetic`]: continued fractions, `β(α)`, small divisors.
//! * [`cocycle`]: transfer matrices, Lyapunov exponents, rotation numbers,
//!   uniform hyperbolicity, degree and conjugation.
//! * [`spectrum`]: Sturm counts, integrated density of states, spectrum
//!   scans and periodic approximants.
//! * [`gaps`]: gap detection and labelling, all-gaps-open reports, duality.
//! * [`kam`]: Fourier truncations and one-step homological solves.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arithmetic;
pub mod cocycle;
mod par;
pub mod spectrum;
pub mod gaps;
pub mod kam;

pub use arithmetic::Frequency;
