use super::{MatK, Quaternion, ScalarField};
use crate::error::{dim_err, Result};

/// Thin QR factors: `q` has orthonormal columns for the Hermitian form of
/// the field, `r` is upper triangular with a real nonnegative diagonal.
#[derive(Clone, Debug)]
pub struct QrFactors {
    pub q: MatK,
    pub r: MatK,
}

type Column = Vec<Quaternion>;

fn col_of(x: &MatK, j: usize) -> Column {
    (0..x.rows()).map(|i| x[(i, j)]).collect()
}

// <u, v> = sum conj(u_l) v_l
fn herm(u: &[Quaternion], v: &[Quaternion]) -> Quaternion {
    u.iter().zip(v).fold(Quaternion::ZERO, |acc, (&a, &b)| acc + a.conj() * b)
}

fn col_norm(v: &[Quaternion]) -> f64 {
    v.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
}

/// Project `v` off the span of `basis` (two passes), accumulating the
/// coefficients into `coef` when given. Scalars act from the right.
fn orthogonalize(v: &mut Column, basis: &[Column], mut coef: Option<&mut [Quaternion]>) {
    for _ in 0..2 {
        for (i, b) in basis.iter().enumerate() {
            let c = herm(b, v);
            for (vl, &bl) in v.iter_mut().zip(b) {
                *vl -= bl * c;
            }
            if let Some(cf) = coef.as_deref_mut() {
                cf[i] += c;
            }
        }
    }
}

/// A unit vector orthogonal to `basis`, chosen deterministically among the
/// projected standard basis vectors.
fn orth_fill(n: usize, basis: &[Column]) -> Column {
    let mut best: Option<(f64, Column)> = None;
    for l in 0..n {
        let mut e = vec![Quaternion::ZERO; n];
        e[l] = Quaternion::ONE;
        orthogonalize(&mut e, basis, None);
        let nrm = col_norm(&e);
        if best.as_ref().is_none_or(|(b, _)| nrm > *b + 1e-12) {
            best = Some((nrm, e));
        }
    }
    let (nrm, e) = best.expect("n > 0");
    e.into_iter().map(|q| q / nrm).collect()
}

fn from_columns(field: ScalarField, n: usize, cols: &[Column]) -> MatK {
    MatK::from_fn(field, n, cols.len(), |i, j| cols[j][i])
}

/// Householder-equivalent QR via twice-iterated modified Gram–Schmidt.
///
/// Columns whose residual falls below `1e-12·‖x‖` are treated as dependent:
/// the diagonal entry of `r` is set to zero and `q` is completed with an
/// orthogonal unit vector.
pub fn qr(x: &MatK) -> Result<QrFactors> {
    let (n, k) = x.shape();
    if n < k {
        return dim_err(format!("qr needs rows >= cols, got {n}x{k}"));
    }
    let field = x.field();
    let cutoff = 1e-12 * x.norm();
    let mut qs: Vec<Column> = Vec::with_capacity(k);
    let mut r = MatK::zeros(field, k, k);
    for j in 0..k {
        let mut v = col_of(x, j);
        let mut coef = vec![Quaternion::ZERO; j];
        orthogonalize(&mut v, &qs, Some(&mut coef));
        for (i, c) in coef.into_iter().enumerate() {
            r[(i, j)] = c;
        }
        let nrm = col_norm(&v);
        if nrm <= cutoff || nrm == 0.0 {
            qs.push(orth_fill(n, &qs));
        } else {
            r[(j, j)] = Quaternion::real(nrm);
            qs.push(v.into_iter().map(|q| q / nrm).collect());
        }
    }
    Ok(QrFactors {
        q: from_columns(field, n, &qs),
        r,
    })
}

/// Extend orthonormal columns to a square unitary (orthogonal, symplectic)
/// matrix. The original columns come first.
pub fn complete_unitary(q: &MatK) -> MatK {
    let n = q.rows();
    let mut cols: Vec<Column> = (0..q.cols()).map(|j| col_of(q, j)).collect();
    while cols.len() < n {
        let c = orth_fill(n, &cols);
        cols.push(c);
    }
    from_columns(q.field(), n, &cols)
}

/// Full factorization `x = u · [r; 0]` with `u` square unitary.
pub fn full_qr(x: &MatK) -> Result<(MatK, MatK)> {
    let f = qr(x)?;
    let u = complete_unitary(&f.q);
    let mut r_full = MatK::zeros(x.field(), x.rows(), x.cols());
    r_full.set_block(0, 0, &f.r);
    Ok((u, r_full))
}

/// Rank from the QR diagonal with cutoff `rel · ‖x‖`.
pub fn numerical_rank(x: &MatK, rel: f64) -> usize {
    let y = if x.rows() >= x.cols() { x.clone() } else { x.adjoint() };
    let scale = y.norm();
    if scale == 0.0 {
        return 0;
    }
    let f = qr(&y).expect("rows >= cols");
    (0..y.cols()).filter(|&j| f.r[(j, j)].w > rel * scale).count()
}
