use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{MatK, ScalarField};
use crate::error::{dim_err, Result};

/// The complex matrix representing `x` (size `n` over ℝ/ℂ, `2n` over ℍ).
///
/// A quaternion `a + b j` with `a, b ∈ ℂ` maps to `[[a, b], [-b̄, ā]]`;
/// the map is multiplicative and sends the conjugate transpose to the
/// conjugate transpose.
pub fn complex_adjoint(x: &MatK) -> DMatrix<Complex64> {
    let (r, c) = x.shape();
    match x.field() {
        ScalarField::Real | ScalarField::Complex => {
            DMatrix::from_fn(r, c, |i, j| Complex64::new(x[(i, j)].w, x[(i, j)].x))
        }
        ScalarField::Quaternion => DMatrix::from_fn(2 * r, 2 * c, |i, j| {
            let q = x[(i % r, j % c)];
            let a = Complex64::new(q.w, q.x);
            let b = Complex64::new(q.y, q.z);
            match (i < r, j < c) {
                (true, true) => a,
                (true, false) => b,
                (false, true) => -b.conj(),
                (false, false) => a.conj(),
            }
        }),
    }
}

/// Complex determinant over ℝ or ℂ.
pub fn complex_det(x: &MatK) -> Result<Complex64> {
    if !x.is_square() {
        return dim_err("determinant of a non-square matrix");
    }
    if x.field() == ScalarField::Quaternion {
        return dim_err("quaternionic matrices have no complex determinant; use det_modulus");
    }
    Ok(complex_adjoint(x).determinant())
}

/// `|det x|`; over ℍ the modulus of the Dieudonné determinant, taken as
/// the square root of `|det|` of the complex adjoint.
pub fn det_modulus(x: &MatK) -> Result<f64> {
    if !x.is_square() {
        return dim_err(format!("det_modulus of a {}x{} matrix", x.rows(), x.cols()));
    }
    if x.rows() == 0 {
        return Ok(1.0);
    }
    let d = complex_adjoint(x).determinant().norm();
    Ok(match x.field() {
        ScalarField::Quaternion => d.sqrt(),
        _ => d,
    })
}

/// Real matrix of `v ↦ x v` on `K^n` viewed as `ℝ^{dn}`.
pub fn realification(x: &MatK) -> Result<DMatrix<f64>> {
    if !x.is_square() {
        return dim_err("realification of a non-square matrix");
    }
    let n = x.rows();
    let f = x.field();
    let d = f.dim();
    let mut m = DMatrix::zeros(d * n, d * n);
    for l in 0..n {
        for (u, &unit) in f.units().iter().enumerate() {
            // x · (e_l unit) = (column l of x) · unit
            for i in 0..n {
                let comps = (x[(i, l)] * unit).components();
                for (c, &val) in comps.iter().take(d).enumerate() {
                    m[(i * d + c, l * d + u)] = val;
                }
            }
        }
    }
    Ok(m)
}

/// `|det|` of the realification.
pub fn realified_det(x: &MatK) -> Result<f64> {
    Ok(realification(x)?.determinant().abs())
}

/// `|det f|` for a linear map between real inner-product spaces, given by
/// the images of an orthonormal domain basis (as coordinate vectors in any
/// isometric embedding of the codomain).
///
/// Zero when the domain and codomain dimensions differ; one for the map
/// between zero-dimensional spaces.
pub fn abs_det_between(images: &[Vec<f64>], codomain_dim: usize) -> f64 {
    if images.len() != codomain_dim {
        return 0.0;
    }
    if images.is_empty() {
        return 1.0;
    }
    gram_det(images).max(0.0).sqrt()
}

/// Determinant of the Gram matrix of `vectors`.
pub fn gram_det(vectors: &[Vec<f64>]) -> f64 {
    let m = vectors.len();
    let g = DMatrix::from_fn(m, m, |i, j| dot(&vectors[i], &vectors[j]));
    g.determinant()
}

/// [`abs_det_between`] with small values relative to the Hadamard bound
/// `∏‖vᵢ‖` reported as exactly zero.
pub fn abs_det_between_cut(images: &[Vec<f64>], codomain_dim: usize, rel_cut: f64) -> f64 {
    let v = abs_det_between(images, codomain_dim);
    let bound: f64 = images.iter().map(|x| dot(x, x).sqrt()).product();
    if v <= rel_cut * bound {
        0.0
    } else {
        v
    }
}

/// Singular values of `x`, sorted descending.
pub fn singular_values(x: &MatK) -> Vec<f64> {
    let c = complex_adjoint(x);
    let mut sv: Vec<f64> = c.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if x.field() == ScalarField::Quaternion {
        // every value appears twice in the complex adjoint
        sv = sv.into_iter().step_by(2).collect();
    }
    sv
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
