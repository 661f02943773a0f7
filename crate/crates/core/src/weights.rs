//! The weight `δ_E(s) = |det(dω_s(eH)|_{𝔪/𝔥})|` of the reduced integration
//! formula, its companion `δ_D`, and orbit volumes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::actions::{
    algebra_split, classify_point, covering_index, killing_field, section_frame, ActionSpec, RegularityClass,
};
use crate::error::{Error, Result};
use crate::kernel::{abs_det_between_cut, det_modulus, MatK, ScalarField};

/// Determinants below this fraction of the Hadamard bound count as zero.
pub const SINGULAR_CUTOFF: f64 = 1e-12;

/// `dω_s(eH)` on `𝔥^⊥ = 𝔫/𝔥 ⊕ 𝔪/𝔥`, in the frame `T_sΣ ⊕ ν_sΣ`.
#[derive(Clone, Debug)]
pub struct OrbitMapDifferential {
    pub action: ActionSpec,
    pub point: MatK,
    pub regularity: RegularityClass,
    pub tangent_dim: usize,
    pub normal_dim: usize,
    /// Images of the `𝔫/𝔥` basis, then of the `𝔪/𝔥` basis. Each column
    /// lists `T_sΣ` coordinates followed by `ν_sΣ` coordinates.
    pub columns: Vec<Vec<f64>>,
    pub n_dim: usize,
    pub m_dim: usize,
}

impl OrbitMapDifferential {
    /// The `𝔫/𝔥 → T_s(W·s)` block (section-tangent rows).
    pub fn w_block(&self) -> Vec<Vec<f64>> {
        self.columns[..self.n_dim]
            .iter()
            .map(|c| c[..self.tangent_dim].to_vec())
            .collect()
    }

    /// The `𝔪/𝔥 → ν_sΣ` block (normal rows).
    pub fn m_block(&self) -> Vec<Vec<f64>> {
        self.columns[self.n_dim..]
            .iter()
            .map(|c| c[self.tangent_dim..].to_vec())
            .collect()
    }

    /// `m_block` as a matrix with rows indexed by the normal frame.
    pub fn m_block_matrix(&self) -> DMatrix<f64> {
        let m = self.m_block();
        DMatrix::from_fn(self.normal_dim, self.m_dim, |i, j| m[j][i])
    }

    /// Largest entry outside the two diagonal blocks.
    pub fn off_block_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, c) in self.columns.iter().enumerate() {
            let off = if j < self.n_dim {
                &c[self.tangent_dim..]
            } else {
                &c[..self.tangent_dim]
            };
            worst = off.iter().fold(worst, |w, v| w.max(v.abs()));
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.columns.iter().flatten().fold(0.0, |w, v| w.max(v.abs()))
    }

    /// `|det dω_s(eH)|`.
    pub fn abs_det(&self) -> f64 {
        if self.regularity == RegularityClass::Singular {
            return 0.0;
        }
        abs_det_between_cut(&self.columns, self.n_dim + self.m_dim, SINGULAR_CUTOFF)
    }

    pub fn delta_e(&self) -> f64 {
        if self.regularity == RegularityClass::Singular {
            return 0.0;
        }
        abs_det_between_cut(&self.m_block(), self.normal_dim, SINGULAR_CUTOFF)
    }

    /// `|det|` of the `𝔫/𝔥` block onto its image `T_s(W·s)`; 1 when the
    /// block is empty.
    pub fn delta_d(&self) -> f64 {
        if self.regularity == RegularityClass::Singular {
            return 0.0;
        }
        abs_det_between_cut(&self.w_block(), self.n_dim, SINGULAR_CUTOFF)
    }
}

fn check_in_section(action: &ActionSpec, s: &MatK) -> Result<()> {
    action.check_point(s)?;
    let r = action.section_residual(s);
    if r > 1e-8 * (1.0 + s.norm()) {
        return Err(Error::Domain(format!("point is not on the section (residual {r:e})")));
    }
    Ok(())
}

pub fn orbit_map_differential(action: &ActionSpec, s: &MatK) -> Result<OrbitMapDifferential> {
    check_in_section(action, s)?;
    let frame = section_frame(action, s)?;
    let split = algebra_split(action);
    let columns = split
        .n
        .iter()
        .chain(&split.m)
        .map(|x| {
            let v = killing_field(action, x, s);
            let mut c = frame.tangent_coordinates(&v);
            c.extend(frame.normal_coordinates(&v));
            c
        })
        .collect();
    Ok(OrbitMapDifferential {
        action: *action,
        point: s.clone(),
        regularity: classify_point(action, s),
        tangent_dim: frame.tangent.len(),
        normal_dim: frame.normal.len(),
        columns,
        n_dim: split.n.len(),
        m_dim: split.m.len(),
    })
}

pub fn delta_e_generic(action: &ActionSpec, s: &MatK) -> Result<f64> {
    Ok(orbit_map_differential(action, s)?.delta_e())
}

pub fn delta_d(action: &ActionSpec, s: &MatK) -> Result<f64> {
    Ok(orbit_map_differential(action, s)?.delta_d())
}

/// `2^{−dk(n−k)/2} · |det B|^{d(n−k)}` with `|det|` the Dieudonné modulus.
pub fn delta_e_closed_form(field: ScalarField, n: usize, k: usize, b: &MatK) -> Result<f64> {
    if k < 2 || k + 1 > n {
        return Err(Error::Domain(format!(
            "closed form needs 2 <= k <= n-1, got n={n}, k={k}"
        )));
    }
    if b.shape() != (k, k) || b.field() != field {
        return Err(Error::Dimension(format!("B must be {k}x{k} over {}", field.symbol())));
    }
    let d = field.dim() as i32;
    let e = (n - k) as i32;
    let scale = 2f64.powf(-0.5 * (d * k as i32 * e) as f64);
    Ok(scale * det_modulus(b)?.powi(d * e))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightValue {
    pub delta_e: f64,
    pub delta_d: f64,
    pub regularity: RegularityClass,
}

pub fn weight_value(action: &ActionSpec, s: &MatK) -> Result<WeightValue> {
    let d = orbit_map_differential(action, s)?;
    Ok(WeightValue {
        delta_e: d.delta_e(),
        delta_d: d.delta_d(),
        regularity: d.regularity,
    })
}

/// `vol(G·s) = vol(G/H)·|det dω_s(eH)| / |G_s/H|` at a non-singular point.
pub fn orbit_volume(action: &ActionSpec, s: &MatK, vol_gh: f64) -> Result<f64> {
    let d = orbit_map_differential(action, s)?;
    if d.regularity == RegularityClass::Singular {
        return Err(Error::Unsupported("orbit volume at a singular point".into()));
    }
    Ok(vol_gh * d.abs_det() / covering_index(action, s) as f64)
}

/// `(vol(G·s)/vol(G/H)) / (vol(W·s)/vol(W))`, or 0 at singular points.
///
/// The covering factor `|G_s/H|/|W_s|` is 1 for the actions here: it is 1
/// at regular points, and at the exceptional points of a conjugation
/// action every component of `G_s` meets the normalizer of the torus.
pub fn theorem_iv_ratio(
    action: &ActionSpec,
    s: &MatK,
    vol_gs: f64,
    vol_gh: f64,
    vol_w: f64,
    vol_ws: f64,
) -> Result<f64> {
    check_in_section(action, s)?;
    if classify_point(action, s) == RegularityClass::Singular {
        return Ok(0.0);
    }
    if !(vol_gh > 0.0 && vol_w > 0.0 && vol_ws > 0.0) {
        return Err(Error::Domain("volumes must be positive".into()));
    }
    Ok((vol_gs / vol_gh) / (vol_ws / vol_w))
}
