use num_complex::Complex64;
use thiserror::Error;

use crate::transforms::TransformKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at node ({i}, {j}), z = {z}")]
    NonFinite {
        i: usize,
        j: usize,
        z: Complex64,
        value: Complex64,
    },

    #[error("field has {got} samples, grid expects {expected}")]
    LengthMismatch { got: usize, expected: usize },

    #[error("derivative order {0} exceeds the supported maximum of 4")]
    OrderTooLarge(usize),

    #[error("point {0} lies outside the interpolation region of the grid")]
    OutsideGrid(Complex64),

    #[error("field does not vanish outside the unit disk: |value| = {value:e} at z = {z}")]
    NotMasked { z: Complex64, value: f64 },

    #[error("transform kind {0:?} is not supported by this operation")]
    UnsupportedKind(TransformKind),

    #[error("quadrature did not converge on {piece}: error estimate {estimate:e}")]
    QuadratureDiverged { piece: String, estimate: f64 },

    #[error("probe point |z| = {0} outside 0 < |z| < 1/8")]
    ProbeOutOfRange(f64),

    #[error("|z| = {0} is outside 0 <= |z| < 1")]
    OutOfDomain(f64),

    #[error("derivative d_z^{p} d_zbar^{q} is singular at the origin")]
    SingularAtOrigin { p: usize, q: usize },

    #[error("derivative order {order} exceeds the supported maximum {max}")]
    DerivativeOrder { order: usize, max: usize },

    #[error("regularity parameter k = {0} outside the supported range 1..=3")]
    UnsupportedK(u32),

    #[error("Neumann iteration did not converge in {iterations} iterations (last increment {increment:e})")]
    NotConverged { iterations: usize, increment: f64 },

    #[error("Beltrami coefficient too large: sup|mu| = {0} (need < 1/4)")]
    CoefficientTooLarge(f64),

    #[error("w_z vanishes at z = {0}; the logarithm branch is undefined")]
    VanishingDerivative(Complex64),

    #[error("residual check failed: {0}")]
    Residual(String),

    #[error("degenerate almost complex structure: |a| = {0} is within 1e-12 of 1")]
    Degenerate(f64),

    #[error("point is within the stencil width of the sampling boundary")]
    NearBoundary,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid probe set: {0}")]
    InvalidProbes(String),

    #[error("fit needs at least 5 rows, got {0}")]
    TooFewRows(usize),

    #[error("degenerate design matrix in least-squares fit")]
    DegenerateFit,

    #[error("invalid config at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
