//! Small helpers on realified vectors.

use super::det::dot;

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Gram–Schmidt (two passes) dropping vectors whose residual is below
/// `drop_rel · max‖v‖`. Returns an orthonormal list.
pub fn orthonormalize(vectors: &[Vec<f64>], drop_rel: f64) -> Vec<Vec<f64>> {
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::new();
    if scale == 0.0 {
        return out;
    }
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &out {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let n = norm(&w);
        if n > drop_rel * scale {
            w.iter_mut().for_each(|x| *x /= n);
            out.push(w);
        }
    }
    out
}

/// Coordinates of `v` in an orthonormal basis.
pub fn coordinates(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    basis.iter().map(|b| dot(b, v)).collect()
}

/// Norm of the component of `v` orthogonal to the span of an orthonormal
/// basis.
pub fn residual(v: &[f64], basis: &[Vec<f64>]) -> f64 {
    let mut w = v.to_vec();
    for b in basis {
        let c = dot(b, &w);
        w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
    }
    norm(&w)
}

/// Orthonormal basis of the orthogonal complement of `basis` in `ℝ^dim`.
pub fn complement(basis: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut all = basis.to_vec();
    let start = all.len();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        let mut w = e;
        for _ in 0..2 {
            for b in &all {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let n = norm(&w);
        if n > 1e-8 {
            w.iter_mut().for_each(|x| *x /= n);
            all.push(w);
        }
        if all.len() == dim {
            break;
        }
    }
    all.split_off(start)
}
