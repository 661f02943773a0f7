//! Dense linear algebra over ℝ, ℂ and ℍ.

mod det;
mod field;
mod matrix;
mod qr;
mod quaternion;
pub mod real;

pub use det::{
    abs_det_between, abs_det_between_cut, complex_adjoint, complex_det, det_modulus, gram_det,
    realification, realified_det, singular_values,
};
pub use field::ScalarField;
pub use matrix::MatK;
pub use qr::{complete_unitary, full_qr, numerical_rank, qr, QrFactors};
pub use quaternion::Quaternion;

pub(crate) use det::dot;

use serde::{Deserialize, Serialize};

/// Floating-point budget for identity checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-8 }
    }
}
