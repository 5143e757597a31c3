//! SL(2, R) and SL(2, C) cocycles over an irrational rotation.
//!
//! Angles are in turns: the potential is `2λ cos(2πθ)` and `R_φ` rotates by
//! `2πφ`.

mod hyperbolic;
mod maps;
mod matrix;
mod product;
mod rotation;

use thiserror::Error;

pub use hyperbolic::{
    default_growth_threshold, is_uniformly_hyperbolic, Hyperbolicity, SchrodingerUh, UhConfig,
    UhVerdict,
};
pub use maps::{
    conjugate, principal_angle, schrodinger_lift, Conjugated, Constant, FiberMap, FnMap,
    HalfTwist, SchrodingerCocycle, Transfer,
};
pub use matrix::{Fiber, Mat2, Mat2C};
pub use product::{
    cocycle_product, lyapunov_complexified, lyapunov_exponent, lyapunov_of, lyapunov_with,
    phase_grid, product_with, Accumulator, RenormalizedProduct,
};
pub use rotation::{
    degree, rotation_deviation, rotation_number, rotation_tolerance, schrodinger_rotation_number,
    RotationNumber,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("invalid cocycle parameter: {0}")]
    Parameter(String),
    #[error("conjugation is singular at theta = {theta} (|det| = {det:e})")]
    SingularConjugation { theta: f64, det: f64 },
    #[error("projective angle step {step} at theta = {theta} exceeds a quarter turn; increase the sample count")]
    Resolution { theta: f64, step: f64 },
}
