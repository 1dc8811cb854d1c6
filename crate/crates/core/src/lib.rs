//! Time-domain interferometry (TDI) on finite-dimensional quantum targets.
//!
//! The crate evaluates dynamical couple-correlation functions (DCF) and
//! intermediate scattering functions (ISF) of discrete-site targets by exact
//! unitary evolution, synthesizes the phase-controlled detection signals of a
//! split/overlap interferometer (including the Mössbauer-foil variant), and
//! decides from a phase scan whether a classical model of the target can be
//! ruled out.
//!
//! ```
//! use tdi_core::model::build_double_well;
//! use tdi_core::correlations::isf;
//!
//! let model = build_double_well(1.0, [1.0, 0.0, 0.0], 0.5, 0.0.into()).unwrap();
//! let s = isf(&model, &[std::f64::consts::PI, 0.0, 0.0], 0.0, std::f64::consts::PI);
//! assert!((s.value.re + 1.0).abs() < 1e-12);
//! ```

pub mod classical;
pub mod correlations;
pub mod doublewell;
pub mod error;
pub mod model;
pub mod model_file;
pub mod operator;
pub mod output;
pub mod sampling;
pub mod tdi;
pub mod tolerances;

pub use error::{Result, TdiError};
pub use operator::{Complex, Operator};
pub use tolerances::Tolerances;

/// Three-vector in dimensionless length (positions) or inverse length (momenta).
pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn neg(a: &Vec3) -> Vec3 {
    [-a[0], -a[1], -a[2]]
}
