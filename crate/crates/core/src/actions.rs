//! Isometric actions with their minimal sections.
//!
//! Two kinds are supported: the `k`-fold sum of the standard
//! representation of SO(n)/SU(n)/Sp(n) on `K^{n×k}`, with section
//! `Σ = {[B; 0] : B ∈ K^{k×k}}`, and a compact group acting on itself by
//! conjugation, with a maximal torus as section.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{
    algebra_basis, force_unit_det_col, haar_unitary, off_diagonal, torus_generators, torus_indices, torus_point,
    Family, GroupElement, GroupSpec,
};
use crate::kernel::{complex_adjoint, full_qr, numerical_rank, real, MatK, Quaternion, ScalarField};

/// Relative rank cutoff for regularity decisions.
pub const RANK_CUTOFF: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawAction")]
pub enum ActionSpec {
    DirectSum { field: ScalarField, n: usize, k: usize },
    Conjugation { family: Family, n: usize },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawAction {
    DirectSum { field: ScalarField, n: usize, k: usize },
    Conjugation { family: Family, n: usize },
}

impl TryFrom<RawAction> for ActionSpec {
    type Error = Error;

    fn try_from(raw: RawAction) -> Result<Self> {
        match raw {
            RawAction::DirectSum { field, n, k } => Self::direct_sum(field, n, k),
            RawAction::Conjugation { family, n } => Self::conjugation(family, n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegularityClass {
    Regular,
    Exceptional,
    Singular,
}

impl ActionSpec {
    pub fn direct_sum(field: ScalarField, n: usize, k: usize) -> Result<Self> {
        if k < 1 || k + 1 > n {
            return Err(Error::Domain(format!("direct sum needs 1 <= k <= n-1, got n={n}, k={k}")));
        }
        Ok(Self::DirectSum { field, n, k })
    }

    pub fn conjugation(family: Family, n: usize) -> Result<Self> {
        let min = if family == Family::Sp { 1 } else { 2 };
        if n < min {
            return Err(Error::Domain(format!("conjugation on {family:?}({n}) is trivial")));
        }
        Ok(Self::Conjugation { family, n })
    }

    pub fn group(&self) -> GroupSpec {
        match *self {
            Self::DirectSum { field, n, .. } => GroupSpec::new(Family::for_field(field), n).expect("validated"),
            Self::Conjugation { family, n } => GroupSpec::new(family, n).expect("validated"),
        }
    }

    pub fn field(&self) -> ScalarField {
        self.group().field()
    }

    /// Shape of a point of `M` as a matrix.
    pub fn point_shape(&self) -> (usize, usize) {
        match *self {
            Self::DirectSum { n, k, .. } => (n, k),
            Self::Conjugation { n, .. } => (n, n),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            Self::DirectSum { field, n, k } => field.dim() * n * k,
            Self::Conjugation { .. } => self.group().algebra_dim(),
        }
    }

    /// Real dimension of the section used here.
    pub fn section_dim(&self) -> usize {
        match *self {
            Self::DirectSum { field, k, .. } => field.dim() * k * k,
            Self::Conjugation { .. } => self.group().rank(),
        }
    }

    /// Dimension of the principal isotropy group `H`.
    pub fn isotropy_dim(&self) -> usize {
        match *self {
            Self::DirectSum { field, n, k } => GroupSpec::new(Family::for_field(field), n - k)
                .map(|g| g.algebra_dim())
                .unwrap_or(0),
            Self::Conjugation { .. } => self.group().rank(),
        }
    }

    /// `dim M − dim(principal orbit)`.
    pub fn cohomogeneity(&self) -> usize {
        self.ambient_dim() - (self.group().algebra_dim() - self.isotropy_dim())
    }

    /// Dimension of the fat Weyl group `W = N/H`.
    pub fn weyl_dim(&self) -> usize {
        match *self {
            Self::DirectSum { field, k, .. } => match field {
                ScalarField::Real => k * (k - 1) / 2,
                ScalarField::Complex => k * k,
                ScalarField::Quaternion => k * (2 * k + 1),
            },
            Self::Conjugation { .. } => 0,
        }
    }

    /// `dim Σ − cohomogeneity` for the section used here. Equals
    /// [`weyl_dim`](Self::weyl_dim).
    pub fn section_defect(&self) -> usize {
        self.section_dim() - self.cohomogeneity()
    }

    /// Copolarity of the action. For `k = 1` the representation is polar and
    /// the tabulated section `K^{1×1}` is not minimal over ℂ and ℍ.
    pub fn copolarity(&self) -> usize {
        match *self {
            Self::DirectSum { k: 1, .. } | Self::Conjugation { .. } => 0,
            Self::DirectSum { .. } => self.weyl_dim(),
        }
    }

    pub fn is_polar(&self) -> bool {
        self.section_defect() == 0
    }

    /// Action of a group element on a point.
    pub fn act(&self, g: &MatK, x: &MatK) -> MatK {
        match self {
            Self::DirectSum { .. } => g * x,
            Self::Conjugation { .. } => &(g * x) * &g.adjoint(),
        }
    }

    /// Base point of the section with `section_coordinate = identity`
    /// (direct sum) or the torus point at the given default angles.
    pub fn default_section_point(&self) -> MatK {
        match *self {
            Self::DirectSum { field, k, .. } => self.embed_section(&MatK::identity(field, k)),
            Self::Conjugation { .. } => {
                let g = self.group();
                let angles: Vec<f64> = (0..g.rank()).map(|a| 0.4 + 0.9 * (a as f64 + 1.0)).collect();
                torus_point(g, &angles).expect("rank-many angles")
            }
        }
    }

    /// `[B; 0]` for the direct sum.
    pub fn embed_section(&self, b: &MatK) -> MatK {
        let (n, k) = self.point_shape();
        let mut s = MatK::zeros(self.field(), n, k);
        s.set_block(0, 0, b);
        s
    }

    /// The top `k×k` block of a direct-sum point.
    pub fn section_coordinate(&self, s: &MatK) -> MatK {
        let (_, k) = self.point_shape();
        s.block(0, 0, k, k)
    }

    pub fn check_point(&self, p: &MatK) -> Result<()> {
        if p.shape() != self.point_shape() || p.field() != self.field() {
            return Err(Error::Dimension(format!(
                "point {:?} over {} for action with points {:?} over {}",
                p.shape(),
                p.field().symbol(),
                self.point_shape(),
                self.field().symbol()
            )));
        }
        Ok(())
    }

    /// Random section point: Gaussian `B`, or uniform torus angles.
    pub fn random_section_point<R: Rng + ?Sized>(&self, rng: &mut R) -> MatK {
        match *self {
            Self::DirectSum { field, k, .. } => self.embed_section(&MatK::gaussian(field, k, k, rng)),
            Self::Conjugation { .. } => {
                let g = self.group();
                let angles: Vec<f64> = (0..g.rank()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                torus_point(g, &angles).expect("rank-many angles")
            }
        }
    }

    /// Distance of `s` from the section.
    pub fn section_residual(&self, s: &MatK) -> f64 {
        match *self {
            Self::DirectSum { .. } => {
                let (n, k) = self.point_shape();
                s.block(k, 0, n - k, k).max_abs()
            }
            Self::Conjugation { .. } => {
                let g = self.group();
                let t = torus_point(g, &crate::groups::torus_angles(g, s)).expect("rank-many angles");
                (s - &t).max_abs()
            }
        }
    }
}

/// Value of the Killing field of `X ∈ 𝔤` at `p`.
pub fn killing_field(action: &ActionSpec, x: &MatK, p: &MatK) -> MatK {
    match action {
        ActionSpec::DirectSum { .. } => x * p,
        ActionSpec::Conjugation { .. } => &(x * p) - &(p * x),
    }
}

/// Real matrix whose columns are the realified Killing fields of the
/// standard algebra basis at `p`.
fn killing_matrix(action: &ActionSpec, p: &MatK) -> DMatrix<f64> {
    let basis = algebra_basis(action.group());
    let cols: Vec<Vec<f64>> = basis.elements.iter().map(|x| killing_field(action, x, p).realify()).collect();
    DMatrix::from_fn(action.ambient_dim().max(cols.first().map_or(0, Vec::len)), cols.len(), |i, j| cols[j][i])
}

/// Orthonormal basis of `T_p(G·p)`.
pub fn orbit_tangent(action: &ActionSpec, p: &MatK) -> Vec<MatK> {
    let (r, c) = p.shape();
    let basis = algebra_basis(action.group());
    let images: Vec<Vec<f64>> = basis.elements.iter().map(|x| killing_field(action, x, p).realify()).collect();
    real::orthonormalize(&images, RANK_CUTOFF)
        .iter()
        .map(|v| MatK::from_realified(p.field(), r, c, v))
        .collect()
}

/// Numerical rank of `X ↦ X_p` and the algebra coordinates of its kernel.
fn killing_kernel(action: &ActionSpec, p: &MatK) -> (usize, Vec<Vec<f64>>) {
    let m = killing_matrix(action, p);
    let dim_g = m.ncols();
    // pad to a square matrix so the SVD returns a full right basis
    let rows = m.nrows().max(dim_g);
    let padded = DMatrix::from_fn(rows, dim_g, |i, j| if i < m.nrows() { m[(i, j)] } else { 0.0 });
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    // ‖X_p‖ ≤ 2‖X‖‖p‖ for both kinds of action
    let cut = RANK_CUTOFF * p.norm();
    let mut rank = 0;
    let mut kernel = Vec::new();
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > cut {
            rank += 1;
        } else {
            kernel.push(v_t.row(i).iter().copied().collect());
        }
    }
    (rank, kernel)
}

/// Dimension of the orbit through `p`.
pub fn orbit_dim(action: &ActionSpec, p: &MatK) -> usize {
    killing_kernel(action, p).0
}

/// Orthonormal basis (as algebra elements) of the isotropy algebra `𝔤_p`.
pub fn isotropy_algebra(action: &ActionSpec, p: &MatK) -> Vec<MatK> {
    let basis = algebra_basis(action.group());
    killing_kernel(action, p).1.iter().map(|c| basis.combine(c)).collect()
}

pub fn classify_point(action: &ActionSpec, p: &MatK) -> RegularityClass {
    match *action {
        ActionSpec::DirectSum { k, .. } => {
            if numerical_rank(p, RANK_CUTOFF) == k {
                RegularityClass::Regular
            } else {
                RegularityClass::Singular
            }
        }
        ActionSpec::Conjugation { family, n } => {
            let g = action.group();
            if orbit_dim(action, p) < g.algebra_dim() - g.rank() {
                return RegularityClass::Singular;
            }
            if family == Family::SO && has_eigenvalue(p, 1.0) && has_eigenvalue(p, -1.0) {
                debug_assert!(n >= 3);
                return RegularityClass::Exceptional;
            }
            RegularityClass::Regular
        }
    }
}

fn has_eigenvalue(p: &MatK, lambda: f64) -> bool {
    let n = p.rows();
    let shifted = p - &MatK::identity(p.field(), n).scale(lambda);
    numerical_rank(&shifted, RANK_CUTOFF.sqrt() / (n as f64)) < n
}

/// Number of sheets `|G_s/H|` of the orbit map at a non-singular point.
pub fn covering_index(action: &ActionSpec, s: &MatK) -> usize {
    match classify_point(action, s) {
        RegularityClass::Exceptional => 2,
        _ => 1,
    }
}

/// Orthonormal frames of `T_sΣ` and `ν_sΣ` at a section point.
#[derive(Clone, Debug)]
pub struct SectionFrame {
    pub action: ActionSpec,
    pub point: MatK,
    pub tangent: Vec<MatK>,
    pub normal: Vec<MatK>,
}

impl SectionFrame {
    pub fn tangent_coordinates(&self, v: &MatK) -> Vec<f64> {
        self.tangent.iter().map(|t| t.inner_unchecked(v)).collect()
    }

    pub fn normal_coordinates(&self, v: &MatK) -> Vec<f64> {
        self.normal.iter().map(|t| t.inner_unchecked(v)).collect()
    }

    /// Largest inner product between the two frames, plus the largest
    /// deviation of each frame from orthonormality.
    pub fn orthogonality_residual(&self) -> f64 {
        let all: Vec<&MatK> = self.tangent.iter().chain(&self.normal).collect();
        let mut worst: f64 = 0.0;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner_unchecked(b) - want).abs());
            }
        }
        worst
    }
}

/// Unit vector `[0; u E_ij]`-style elementary matrix.
fn unit_entry(field: ScalarField, rows: usize, cols: usize, i: usize, j: usize, u: Quaternion) -> MatK {
    let mut m = MatK::zeros(field, rows, cols);
    m[(i, j)] = u;
    m
}

pub fn section_frame(action: &ActionSpec, s: &MatK) -> Result<SectionFrame> {
    action.check_point(s)?;
    let (tangent, normal) = match *action {
        ActionSpec::DirectSum { field, n, k } => {
            let mut tangent = Vec::new();
            let mut normal = Vec::new();
            for i in 0..k {
                for j in 0..k {
                    for &u in field.units() {
                        tangent.push(unit_entry(field, n, k, i, j, u));
                    }
                }
            }
            // f-frame, ordered to match the 𝔪/𝔥 basis of `algebra_split`
            for i in k..n {
                for j in 0..k {
                    for &u in field.units() {
                        normal.push(unit_entry(field, n, k, i, j, u));
                    }
                }
            }
            (tangent, normal)
        }
        ActionSpec::Conjugation { .. } => {
            let split = algebra_split(action);
            let tangent = split.h.iter().map(|t| s * t).collect();
            let normal = split.m.iter().map(|x| s * x).collect();
            (tangent, normal)
        }
    };
    Ok(SectionFrame {
        action: *action,
        point: s.clone(),
        tangent,
        normal,
    })
}

/// Orthonormal bases of `𝔥`, of `𝔫 ∩ 𝔥^⊥` (representing `𝔫/𝔥`) and of
/// `𝔫^⊥` (representing `𝔪/𝔥`).
#[derive(Clone, Debug)]
pub struct AlgebraSplit {
    pub action: ActionSpec,
    pub h: Vec<MatK>,
    pub n: Vec<MatK>,
    pub m: Vec<MatK>,
}

/// Residuals of the reductive-decomposition checks.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SplitResiduals {
    /// `‖Gram − I‖_max` over `𝔥 ∪ 𝔫/𝔥 ∪ 𝔪/𝔥`.
    pub gram: f64,
    /// Total dimension minus `dim 𝔤` (must be zero).
    pub dim_defect: i64,
    /// Largest component of `[𝔫, 𝔪]` outside `𝔪`.
    pub bracket: f64,
    /// Largest component of `Ad_g 𝔪` outside `𝔪` over the sampled `g ∈ N`.
    pub adjoint: f64,
}

fn embed_block(field: ScalarField, n: usize, offset: usize, a: &MatK) -> MatK {
    let mut m = MatK::zeros(field, n, n);
    m.set_block(offset, offset, a);
    m
}

/// Builds the decomposition for the action.
pub fn algebra_split(action: &ActionSpec) -> AlgebraSplit {
    match *action {
        ActionSpec::DirectSum { field, n, k } => {
            let fam = Family::for_field(field);
            let sub = |m: usize, offset: usize| -> Vec<MatK> {
                if m == 0 {
                    return Vec::new();
                }
                algebra_basis(GroupSpec { family: fam, n: m })
                    .elements
                    .iter()
                    .map(|a| embed_block(field, n, offset, a))
                    .collect()
            };
            let h = sub(n - k, k);
            let mut nn = sub(k, 0);
            if field == ScalarField::Complex {
                // central direction of 𝔰(𝔲(k) ⊕ 𝔲(n−k)) orthogonal to 𝔥
                let (kf, rf) = (k as f64, (n - k) as f64);
                let norm = (kf * rf * n as f64).sqrt();
                let d: Vec<Quaternion> = (0..n)
                    .map(|i| if i < k { Quaternion::complex(0.0, rf / norm) } else { Quaternion::complex(0.0, -kf / norm) })
                    .collect();
                nn.push(MatK::diag(field, &d));
            }
            let mut m = Vec::new();
            for i in k..n {
                for j in 0..k {
                    for &u in field.units() {
                        // (u E_ij − ū E_ji)/√2 with i in the lower block
                        m.push(off_diagonal(field, n, i, j, u));
                    }
                }
            }
            AlgebraSplit { action: *action, h, n: nn, m }
        }
        ActionSpec::Conjugation { .. } => {
            let g = action.group();
            let basis = algebra_basis(g);
            let t = torus_indices(g);
            let h = t.iter().map(|&i| basis.elements[i].clone()).collect();
            let m = basis
                .elements
                .iter()
                .enumerate()
                .filter(|(i, _)| !t.contains(i))
                .map(|(_, e)| e.clone())
                .collect();
            AlgebraSplit {
                action: *action,
                h,
                n: Vec::new(),
                m,
            }
        }
    }
}

fn span_residual(basis: &[&MatK], x: &MatK) -> f64 {
    let mut r = x.clone();
    for b in basis {
        r = r.add_scaled(b, -b.inner_unchecked(x));
    }
    r.norm()
}

impl AlgebraSplit {
    /// `𝔪 = 𝔥 ⊕ (𝔪/𝔥)`.
    pub fn m_full(&self) -> Vec<&MatK> {
        self.h.iter().chain(&self.m).collect()
    }

    /// `𝔫 = 𝔥 ⊕ (𝔫/𝔥)`.
    pub fn n_full(&self) -> Vec<&MatK> {
        self.h.iter().chain(&self.n).collect()
    }

    pub fn all(&self) -> Vec<&MatK> {
        self.h.iter().chain(&self.n).chain(&self.m).collect()
    }

    /// Tilts the first `𝔪/𝔥` vector towards `𝔫/𝔥` (or `𝔥` in the polar
    /// case). A negative control: the split stops being orthogonal.
    pub fn corrupted(&self, eps: f64) -> Self {
        let mut out = self.clone();
        let target = self.n.first().or(self.h.first());
        if let (Some(t), Some(first)) = (target, out.m.first_mut()) {
            let tilted = first.add_scaled(t, eps);
            *first = tilted.scale(1.0 / tilted.norm());
        }
        out
    }

    pub fn verify<R: Rng + ?Sized>(&self, rng: &mut R, n_samples: usize) -> SplitResiduals {
        let all = self.all();
        let mut gram: f64 = 0.0;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                gram = gram.max((a.inner_unchecked(b) - want).abs());
            }
        }
        let dim_defect = all.len() as i64 - self.action.group().algebra_dim() as i64;
        let m_full = self.m_full();
        let mut bracket: f64 = 0.0;
        for x in self.n_full() {
            for y in &m_full {
                bracket = bracket.max(span_residual(&m_full, &x.bracket(y)));
            }
        }
        let mut adjoint: f64 = 0.0;
        for _ in 0..n_samples {
            let g = sample_normalizer(&self.action, rng);
            for y in &m_full {
                let ad = &(&g.matrix * y) * &g.matrix.adjoint();
                adjoint = adjoint.max(span_residual(&m_full, &ad));
            }
        }
        SplitResiduals {
            gram,
            dim_defect,
            bracket,
            adjoint,
        }
    }
}

/// Random element of the normalizer `N = N_G(Σ)`.
///
/// Direct sum: Haar on `S(O(k)×O(n−k))`, `S(U(k)×U(n−k))`,
/// `Sp(k)×Sp(n−k)`. Conjugation: a uniform torus element times a random
/// Weyl-group representative.
pub fn sample_normalizer<R: Rng + ?Sized>(action: &ActionSpec, rng: &mut R) -> GroupElement {
    let group = action.group();
    match *action {
        ActionSpec::DirectSum { field, n, k } => {
            let a = haar_unitary(field, k, rng);
            let b = haar_unitary(field, n - k, rng);
            let mut g = MatK::block_diag(&a, &b);
            if field != ScalarField::Quaternion {
                force_unit_det_col(&mut g, n - 1);
            }
            GroupElement { group, matrix: g }
        }
        ActionSpec::Conjugation { family, n } => {
            let angles: Vec<f64> = (0..group.rank()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            let t = torus_point(group, &angles).expect("rank-many angles");
            let w = weyl_representative(family, n, rng);
            GroupElement {
                group,
                matrix: &w * &t,
            }
        }
    }
}

fn permutation_matrix(field: ScalarField, perm: &[usize]) -> MatK {
    let n = perm.len();
    MatK::from_fn(field, n, n, |i, j| if perm[j] == i { Quaternion::ONE } else { Quaternion::ZERO })
}

/// Random element of `N_G(T)` with trivial torus part.
fn weyl_representative<R: Rng + ?Sized>(family: Family, n: usize, rng: &mut R) -> MatK {
    let field = family.field();
    match family {
        Family::SU => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            let mut p = permutation_matrix(field, &perm);
            force_unit_det_col(&mut p, 0);
            p
        }
        Family::Sp => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            let mut p = permutation_matrix(field, &perm);
            // j·e^{iθ}·j⁻¹ = e^{−iθ} flips one torus angle
            for l in 0..n {
                if rng.random_bool(0.5) {
                    for i in 0..n {
                        p[(i, l)] = p[(i, l)] * Quaternion::J;
                    }
                }
            }
            p
        }
        Family::SO => {
            let r = n / 2;
            let mut blocks: Vec<usize> = (0..r).collect();
            blocks.shuffle(rng);
            let mut perm: Vec<usize> = (0..n).collect();
            for (l, &b) in blocks.iter().enumerate() {
                perm[2 * l] = 2 * b;
                perm[2 * l + 1] = 2 * b + 1;
            }
            let mut p = permutation_matrix(field, &perm);
            // reflect one block, compensated by the fixed axis or a second block
            if rng.random_bool(0.5) && (n % 2 == 1 || r >= 2) {
                let flip = |p: &mut MatK, col: usize| {
                    for i in 0..n {
                        p[(i, col)] = -p[(i, col)];
                    }
                };
                flip(&mut p, 1);
                if n % 2 == 1 {
                    flip(&mut p, n - 1);
                } else {
                    flip(&mut p, 3);
                }
            }
            p
        }
    }
}

/// Random element of `W` acting on the section: left multiplication of `B`
/// by a Haar element of O(k)/U(k)/Sp(k), or a Weyl-group representative.
pub fn sample_weyl<R: Rng + ?Sized>(action: &ActionSpec, rng: &mut R) -> GroupElement {
    match *action {
        ActionSpec::DirectSum { field, n, k } => {
            let a = haar_unitary(field, k, rng);
            let mut g = MatK::block_diag(&a, &MatK::identity(field, n - k));
            if field != ScalarField::Quaternion {
                force_unit_det_col(&mut g, n - 1);
            }
            GroupElement {
                group: action.group(),
                matrix: g,
            }
        }
        ActionSpec::Conjugation { family, n } => GroupElement {
            group: action.group(),
            matrix: weyl_representative(family, n, rng),
        },
    }
}

/// Moves `x` into the section: returns `(s, g)` with `g·x = s`.
///
/// Direct sum: `s = [R; 0]` from a full QR factorization, so `B = R` is
/// the canonical upper-triangular representative with nonnegative
/// diagonal. Conjugation (SU(n) only): `s` is diagonal with angles sorted
/// increasingly in `[0, 2π)`.
pub fn reduce_to_section(action: &ActionSpec, x: &MatK) -> Result<(MatK, GroupElement)> {
    action.check_point(x)?;
    let group = action.group();
    match *action {
        ActionSpec::DirectSum { field, n, .. } => {
            let (mut u, r) = full_qr(x)?;
            if field != ScalarField::Quaternion {
                // the last column of u does not meet [R; 0] since k ≤ n−1
                force_unit_det_col(&mut u, n - 1);
            }
            Ok((r, GroupElement { group, matrix: u.adjoint() }))
        }
        ActionSpec::Conjugation { family: Family::SU, n } => {
            let c = complex_adjoint(x);
            let (q, t) = nalgebra::linalg::Schur::new(c).unpack();
            let mut order: Vec<(f64, usize)> = (0..n)
                .map(|i| (t[(i, i)].arg().rem_euclid(std::f64::consts::TAU), i))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut v = MatK::from_fn(ScalarField::Complex, n, n, |i, j| {
                let z = q[(i, order[j].1)];
                Quaternion::complex(z.re, z.im)
            });
            force_unit_det_col(&mut v, 0);
            let g = GroupElement {
                group,
                matrix: v.adjoint(),
            };
            let d: Vec<Quaternion> = order.iter().map(|&(a, _)| Quaternion::cis(a)).collect();
            Ok((MatK::diag(ScalarField::Complex, &d), g))
        }
        ActionSpec::Conjugation { family, .. } => Err(Error::Unsupported(format!(
            "reduction to the torus is implemented for SU(n) only, not {family:?}"
        ))),
    }
}

/// Residual of `g·x − s`.
pub fn reduction_residual(action: &ActionSpec, x: &MatK, s: &MatK, g: &GroupElement) -> f64 {
    (&action.act(&g.matrix, x) - s).max_abs()
}

/// Checks at a section point: property (C) and `𝔪 ⟂ Σ`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SectionChecks {
    /// Largest component of an orbit-normal vector outside `T_sΣ`.
    pub normal_in_section: f64,
    /// `dim T_sΣ − dim ν_s(G·s)`.
    pub defect: usize,
    /// Largest `|⟨X_s, t⟩|` over `X ∈ 𝔪/𝔥` and section tangents `t`.
    pub m_perp_section: f64,
    /// Largest component of `𝔤_s` outside `𝔥` plus the dimension mismatch.
    pub isotropy: f64,
}

pub fn section_checks(action: &ActionSpec, s: &MatK) -> Result<SectionChecks> {
    let frame = section_frame(action, s)?;
    let split = algebra_split(action);
    let tangent_orbit: Vec<Vec<f64>> = orbit_tangent(action, s).iter().map(|v| v.realify()).collect();
    // ν_s(G·s): complement of the orbit inside T_sM
    let ambient_frame: Vec<Vec<f64>> = frame.tangent.iter().chain(&frame.normal).map(|v| v.realify()).collect();
    let t_sigma: Vec<Vec<f64>> = frame.tangent.iter().map(|v| v.realify()).collect();
    let mut normal_in_section: f64 = 0.0;
    let mut orbit_normal = Vec::new();
    for v in &ambient_frame {
        let mut w = v.clone();
        for b in &tangent_orbit {
            let c = crate::kernel::dot(b, &w);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        orbit_normal.push(w);
    }
    let orbit_normal = real::orthonormalize(&orbit_normal, 1e-6);
    for v in &orbit_normal {
        normal_in_section = normal_in_section.max(real::residual(v, &t_sigma));
    }
    let defect = t_sigma.len() as i64 - orbit_normal.len() as i64;
    let mut m_perp_section: f64 = 0.0;
    for x in &split.m {
        let xs = killing_field(action, x, s);
        for t in &frame.tangent {
            m_perp_section = m_perp_section.max(t.inner_unchecked(&xs).abs());
        }
    }
    let iso = isotropy_algebra(action, s);
    let h: Vec<&MatK> = split.h.iter().collect();
    let mut isotropy = (iso.len() as f64 - h.len() as f64).abs();
    for y in &iso {
        isotropy = isotropy.max(span_residual(&h, y));
    }
    Ok(SectionChecks {
        normal_in_section,
        defect: defect.max(0) as usize,
        m_perp_section,
        isotropy,
    })
}

/// Angle coordinates of a torus point (convenience re-export for callers
/// holding an action).
pub fn section_angles(action: &ActionSpec, s: &MatK) -> Vec<f64> {
    crate::groups::torus_angles(action.group(), s)
}

/// Lattice generators of the section torus (conjugation only).
pub fn section_generators(action: &ActionSpec) -> Vec<MatK> {
    torus_generators(action.group())
}
