//! The compact classical groups SO(n), SU(n), Sp(n) as matrix groups with
//! the bi-invariant metric `⟨X|Y⟩ = Re tr(X* Y)` on their Lie algebras.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{complex_det, qr, MatK, Quaternion, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    SO,
    SU,
    Sp,
}

impl Family {
    pub fn field(self) -> ScalarField {
        match self {
            Self::SO => ScalarField::Real,
            Self::SU => ScalarField::Complex,
            Self::Sp => ScalarField::Quaternion,
        }
    }

    /// The family whose standard representation lives on `K^n`.
    pub fn for_field(field: ScalarField) -> Self {
        match field {
            ScalarField::Real => Self::SO,
            ScalarField::Complex => Self::SU,
            ScalarField::Quaternion => Self::Sp,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    pub family: Family,
    pub n: usize,
}

impl GroupSpec {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("group size must be positive".into()));
        }
        Ok(Self { family, n })
    }

    pub fn so(n: usize) -> Self {
        Self { family: Family::SO, n }
    }

    pub fn su(n: usize) -> Self {
        Self { family: Family::SU, n }
    }

    pub fn sp(n: usize) -> Self {
        Self { family: Family::Sp, n }
    }

    pub fn field(&self) -> ScalarField {
        self.family.field()
    }

    pub fn algebra_dim(&self) -> usize {
        let n = self.n;
        match self.family {
            Family::SO => n * (n - 1) / 2,
            Family::SU => n * n - 1,
            Family::Sp => n * (2 * n + 1),
        }
    }

    /// Dimension of a maximal torus.
    pub fn rank(&self) -> usize {
        match self.family {
            Family::SO => self.n / 2,
            Family::SU => self.n - 1,
            Family::Sp => self.n,
        }
    }

    /// Order of the classical Weyl group.
    pub fn weyl_order(&self) -> u64 {
        let fact = |m: usize| (1..=m as u64).product::<u64>();
        let n = self.n;
        match self.family {
            Family::SU => fact(n),
            Family::Sp => (1u64 << n) * fact(n),
            Family::SO if n % 2 == 1 => (1u64 << (n / 2)) * fact(n / 2),
            Family::SO if n == 2 => 1,
            Family::SO => (1u64 << (n / 2 - 1)) * fact(n / 2),
        }
    }
}

/// Orthonormal basis of a Lie algebra.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    pub group: GroupSpec,
    pub elements: Vec<MatK>,
}

impl AlgebraBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn coordinates(&self, x: &MatK) -> Vec<f64> {
        self.elements.iter().map(|e| e.inner_unchecked(x)).collect()
    }

    pub fn combine(&self, coords: &[f64]) -> MatK {
        let g = self.group;
        let mut out = MatK::zeros(g.field(), g.n, g.n);
        for (e, &c) in self.elements.iter().zip(coords) {
            out = out.add_scaled(e, c);
        }
        out
    }

    /// Norm of the part of `x` outside the span.
    pub fn projection_residual(&self, x: &MatK) -> f64 {
        let p = self.combine(&self.coordinates(x));
        (x - &p).norm()
    }

    /// Max deviation of the Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner_unchecked(b) - want).abs());
            }
        }
        worst
    }

    /// Largest residual of a bracket `[Xᵢ, Xⱼ]` outside the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.elements.iter().enumerate() {
            for b in &self.elements[i + 1..] {
                worst = worst.max(self.projection_residual(&a.bracket(b)));
            }
        }
        worst
    }
}

/// `‖X* + X‖` plus `|tr X|` when the algebra is special unitary.
pub fn skewness_residual(family: Family, x: &MatK) -> f64 {
    let skew = (&x.adjoint() + x).max_abs();
    match family {
        Family::SU => skew + x.trace().norm(),
        _ => skew,
    }
}

fn elementary(field: ScalarField, n: usize, i: usize, j: usize, q: Quaternion) -> MatK {
    let mut m = MatK::zeros(field, n, n);
    m[(i, j)] = q;
    m
}

/// Off-diagonal generator `(u E_ij − ū E_ji)/√2`.
pub(crate) fn off_diagonal(field: ScalarField, n: usize, i: usize, j: usize, u: Quaternion) -> MatK {
    let mut m = elementary(field, n, i, j, u * FRAC_1_SQRT_2);
    m[(j, i)] = -u.conj() * FRAC_1_SQRT_2;
    m
}

/// The standard orthonormal basis.
///
/// Order: diagonal generators first, then for each pair `i < j` one
/// generator per unit of the field.
pub fn algebra_basis(group: GroupSpec) -> AlgebraBasis {
    let n = group.n;
    let field = group.field();
    let mut elements = Vec::with_capacity(group.algebra_dim());
    match group.family {
        Family::SO => {}
        Family::SU => {
            // i·diag(1,…,1,−m,0,…)/√(m(m+1))
            for m in 1..n {
                let s = 1.0 / ((m * (m + 1)) as f64).sqrt();
                let mut d = vec![Quaternion::ZERO; n];
                for e in d.iter_mut().take(m) {
                    *e = Quaternion::complex(0.0, s);
                }
                d[m] = Quaternion::complex(0.0, -(m as f64) * s);
                elements.push(MatK::diag(field, &d));
            }
        }
        Family::Sp => {
            for l in 0..n {
                for &u in field.imaginary_units() {
                    elements.push(elementary(field, n, l, l, u));
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for &u in field.units() {
                elements.push(off_diagonal(field, n, i, j, u));
            }
        }
    }
    debug_assert_eq!(elements.len(), group.algebra_dim());
    AlgebraBasis { group, elements }
}

/// An element of a compact classical group.
#[derive(Clone, Debug)]
pub struct GroupElement {
    pub group: GroupSpec,
    pub matrix: MatK,
}

impl GroupElement {
    pub fn identity(group: GroupSpec) -> Self {
        Self {
            group,
            matrix: MatK::identity(group.field(), group.n),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            group: self.group,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            group: self.group,
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `‖g* g − I‖_max`.
    pub fn unitarity_residual(&self) -> f64 {
        let g = &self.matrix.adjoint() * &self.matrix;
        (&g - &MatK::identity(self.group.field(), self.group.n)).max_abs()
    }

    /// Distance of the determinant from 1: the complex determinant for
    /// SO/SU, the Dieudonné modulus for Sp.
    pub fn det_residual(&self) -> f64 {
        match self.group.family {
            Family::Sp => (crate::kernel::det_modulus(&self.matrix).unwrap_or(0.0) - 1.0).abs(),
            _ => {
                let d = complex_det(&self.matrix).expect("square real/complex matrix");
                (d - num_complex::Complex64::new(1.0, 0.0)).norm()
            }
        }
    }
}

/// `exp(X)` for `X` in the algebra.
pub fn exp_map(group: GroupSpec, x: &MatK) -> Result<GroupElement> {
    if x.shape() != (group.n, group.n) || x.field() != group.field() {
        return Err(Error::Dimension(format!(
            "algebra element of shape {:?} for {:?}",
            x.shape(),
            group
        )));
    }
    Ok(GroupElement {
        group,
        matrix: x.exp()?,
    })
}

/// Haar-distributed element of O(n), U(n) or Sp(n) (the full unitary
/// group of the field): Q-factor of a Gaussian matrix with nonnegative
/// diagonal in R.
pub fn haar_unitary<R: Rng + ?Sized>(field: ScalarField, n: usize, rng: &mut R) -> MatK {
    let z = MatK::gaussian(field, n, n, rng);
    qr(&z).expect("square").q
}

/// Haar-distributed element of the group.
pub fn haar_sample<R: Rng + ?Sized>(group: GroupSpec, rng: &mut R) -> GroupElement {
    let mut q = haar_unitary(group.field(), group.n, rng);
    if group.family != Family::Sp {
        force_unit_det(&mut q);
    }
    GroupElement { group, matrix: q }
}

/// Multiply the first column by `conj(det)` so that an orthogonal/unitary
/// matrix lands in SO/SU.
pub(crate) fn force_unit_det(q: &mut MatK) {
    force_unit_det_col(q, 0);
}

pub(crate) fn force_unit_det_col(q: &mut MatK, col: usize) {
    let d = complex_det(q).expect("square real/complex matrix");
    let phase = Quaternion::complex(d.re, -d.im) / d.norm();
    for i in 0..q.rows() {
        q[(i, col)] = q[(i, col)] * phase;
    }
}

/// `Ad_g X = g X g⁻¹`.
pub fn adjoint(g: &GroupElement, x: &MatK) -> MatK {
    &(&g.matrix * x) * &g.matrix.adjoint()
}

/// Lattice generators `L_a` of a maximal torus: `θ ↦ exp(Σ θ_a L_a)` is
/// 2π-periodic in each angle.
pub fn torus_generators(group: GroupSpec) -> Vec<MatK> {
    let n = group.n;
    let field = group.field();
    match group.family {
        Family::SO => (0..n / 2)
            .map(|l| {
                let mut m = MatK::zeros(field, n, n);
                m[(2 * l, 2 * l + 1)] = Quaternion::ONE;
                m[(2 * l + 1, 2 * l)] = -Quaternion::ONE;
                m
            })
            .collect(),
        Family::SU => (0..n - 1)
            .map(|a| {
                let mut m = MatK::zeros(field, n, n);
                m[(a, a)] = Quaternion::I;
                m[(n - 1, n - 1)] = -Quaternion::I;
                m
            })
            .collect(),
        Family::Sp => (0..n).map(|l| elementary(field, n, l, l, Quaternion::I)).collect(),
    }
}

/// `exp(Σ θ_a L_a)` in closed form.
pub fn torus_point(group: GroupSpec, angles: &[f64]) -> Result<MatK> {
    let n = group.n;
    if angles.len() != group.rank() {
        return Err(Error::Dimension(format!(
            "{} torus angles for rank {}",
            angles.len(),
            group.rank()
        )));
    }
    let field = group.field();
    Ok(match group.family {
        Family::SO => {
            let mut m = MatK::identity(field, n);
            for (l, &t) in angles.iter().enumerate() {
                let (s, c) = t.sin_cos();
                m[(2 * l, 2 * l)] = Quaternion::real(c);
                m[(2 * l, 2 * l + 1)] = Quaternion::real(s);
                m[(2 * l + 1, 2 * l)] = Quaternion::real(-s);
                m[(2 * l + 1, 2 * l + 1)] = Quaternion::real(c);
            }
            m
        }
        Family::SU => {
            let last: f64 = -angles.iter().sum::<f64>();
            let d: Vec<Quaternion> = angles.iter().chain(std::iter::once(&last)).map(|&t| Quaternion::cis(t)).collect();
            MatK::diag(field, &d)
        }
        Family::Sp => {
            let d: Vec<Quaternion> = angles.iter().map(|&t| Quaternion::cis(t)).collect();
            MatK::diag(field, &d)
        }
    })
}

/// Angles of a torus point, inverse to [`torus_point`] modulo 2π.
pub fn torus_angles(group: GroupSpec, s: &MatK) -> Vec<f64> {
    match group.family {
        Family::SO => (0..group.rank())
            .map(|l| s[(2 * l, 2 * l + 1)].w.atan2(s[(2 * l, 2 * l)].w))
            .collect(),
        Family::SU | Family::Sp => (0..group.rank()).map(|a| s[(a, a)].x.atan2(s[(a, a)].w)).collect(),
    }
}

/// Riemannian volume of the unit cell of the angle lattice:
/// `√det ⟨L_a|L_b⟩`.
pub fn torus_metric_factor(group: GroupSpec) -> f64 {
    let gens = torus_generators(group);
    let images: Vec<Vec<f64>> = gens.iter().map(|g| g.realify()).collect();
    crate::kernel::gram_det(&images).sqrt()
}

/// Indices into [`algebra_basis`] spanning the Lie algebra of the maximal
/// torus of [`torus_generators`].
pub fn torus_indices(group: GroupSpec) -> Vec<usize> {
    let basis = algebra_basis(group);
    let gens = torus_generators(group);
    basis
        .elements
        .iter()
        .enumerate()
        .filter(|(_, e)| gens.iter().any(|g| e.inner_unchecked(g).abs() > 1e-12))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_groups(max_n: usize) -> Vec<GroupSpec> {
        let mut v = Vec::new();
        for n in 2..=max_n {
            v.push(GroupSpec::so(n));
            v.push(GroupSpec::su(n));
            v.push(GroupSpec::sp(n));
        }
        v
    }

    #[test]
    fn dimensions() {
        assert_eq!(algebra_basis(GroupSpec::so(3)).dim(), 3);
        assert_eq!(algebra_basis(GroupSpec::su(2)).dim(), 3);
        assert_eq!(algebra_basis(GroupSpec::sp(2)).dim(), 10);
        for g in all_groups(6) {
            assert_eq!(algebra_basis(g).dim(), g.algebra_dim());
        }
    }

    #[test]
    fn su2_basis_is_normalized() {
        for x in &algebra_basis(GroupSpec::su(2)).elements {
            assert!((x.inner(x).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bases_are_orthonormal_skew_and_closed() {
        for g in all_groups(4) {
            let b = algebra_basis(g);
            assert!(b.gram_residual() < 1e-12, "{g:?}");
            for x in &b.elements {
                assert!(skewness_residual(g.family, x) < 1e-12);
            }
            assert!(b.closure_residual() < 1e-10, "{g:?}");
        }
    }

    #[test]
    fn sp2_bracket_closure_by_projection() {
        let b = algebra_basis(GroupSpec::sp(2));
        assert!(b.closure_residual() <= 1e-10);
    }

    #[test]
    fn exp_examples() {
        let g = GroupSpec::so(3);
        let zero = MatK::zeros(ScalarField::Real, 3, 3);
        let e = exp_map(g, &zero).unwrap();
        assert!((&e.matrix - &MatK::identity(ScalarField::Real, 3)).max_abs() < 1e-15);

        // π · (E12 − E21)/√2 rotates the (1,2)-plane by π/√2.
        let x = algebra_basis(g).elements[0].scale(std::f64::consts::PI);
        let r = exp_map(g, &x).unwrap().matrix;
        let a = std::f64::consts::PI / std::f64::consts::SQRT_2;
        let want = MatK::from_real(3, 3, &[a.cos(), a.sin(), 0.0, -a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0]);
        assert!((&r - &want).max_abs() < 1e-12);
    }

    #[test]
    fn exp_inverse_and_group_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for g in all_groups(4) {
            let b = algebra_basis(g);
            let coords: Vec<f64> = (0..b.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x = b.combine(&coords);
            let e = exp_map(g, &x).unwrap();
            let e_inv = exp_map(g, &x.scale(-1.0)).unwrap();
            let prod = e.compose(&e_inv);
            assert!(prod.unitarity_residual() < 1e-10);
            assert!((&prod.matrix - &MatK::identity(g.field(), g.n)).max_abs() < 1e-10);
            assert!(e.unitarity_residual() < 1e-12);
            assert!(e.det_residual() < 1e-10, "{g:?}");
        }
    }

    #[test]
    fn exp_derivative_matches_basis() {
        let h = 1e-5;
        for g in all_groups(3) {
            for x in &algebra_basis(g).elements {
                let p = exp_map(g, &x.scale(h)).unwrap().matrix;
                let m = exp_map(g, &x.scale(-h)).unwrap().matrix;
                let fd = (&p - &m).scale(0.5 / h);
                assert!((&fd - x).max_abs() < 1e-6);
            }
        }
    }

    #[test]
    fn haar_samples_are_group_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for g in all_groups(4) {
            for _ in 0..20 {
                let s = haar_sample(g, &mut rng);
                assert!(s.unitarity_residual() < 1e-10);
                assert!(s.det_residual() < 1e-10, "{g:?}");
            }
        }
    }

    #[test]
    fn adjoint_is_isometric_and_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for g in all_groups(4) {
            let b = algebra_basis(g);
            let h = haar_sample(g, &mut rng);
            let x = b.combine(&(0..b.dim()).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            let y = b.combine(&(0..b.dim()).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            let (ax, ay) = (adjoint(&h, &x), adjoint(&h, &y));
            assert!((ax.inner(&ay).unwrap() - x.inner(&y).unwrap()).abs() < 1e-10);
            assert!(skewness_residual(g.family, &ax) < 1e-12);
            let id = GroupElement::identity(g);
            assert!((&adjoint(&id, &x) - &x).max_abs() < 1e-15);
        }
    }

    #[test]
    fn weyl_orders() {
        assert_eq!(GroupSpec::su(2).weyl_order(), 2);
        assert_eq!(GroupSpec::su(3).weyl_order(), 6);
        assert_eq!(GroupSpec::so(3).weyl_order(), 2);
        assert_eq!(GroupSpec::so(4).weyl_order(), 4);
        assert_eq!(GroupSpec::sp(2).weyl_order(), 8);
    }
    #[test]
    fn torus_bookkeeping() {
        for g in all_groups(5) {
            let idx = torus_indices(g);
            assert_eq!(idx.len(), g.rank(), "{g:?}");
            let b = algebra_basis(g);
            // generators lie in the span of the selected basis elements
            let t = AlgebraBasis { group: g, elements: idx.iter().map(|&i| b.elements[i].clone()).collect() };
            for l in torus_generators(g) {
                assert!(t.projection_residual(&l) < 1e-12);
            }
            let angles: Vec<f64> = (0..g.rank()).map(|a| 0.3 + 0.7 * a as f64).collect();
            let p = torus_point(g, &angles).unwrap();
            let mut x = MatK::zeros(g.field(), g.n, g.n);
            for (l, &a) in torus_generators(g).iter().zip(&angles) {
                x = x.add_scaled(l, a);
            }
            assert!((&p - &x.exp().unwrap()).max_abs() < 1e-12);
            let back = torus_angles(g, &p);
            for (a, b) in angles.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!((torus_metric_factor(GroupSpec::su(2)) - 2f64.sqrt()).abs() < 1e-14);
        assert!((torus_metric_factor(GroupSpec::su(3)) - 3f64.sqrt()).abs() < 1e-14);
        assert!((torus_metric_factor(GroupSpec::so(5)) - 2.0).abs() < 1e-14);
        assert!((torus_metric_factor(GroupSpec::sp(2)) - 1.0).abs() < 1e-14);
    }
}
