use serde::{Deserialize, Serialize};

use super::Quaternion;

/// One of the three associative real division algebras.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarField {
    #[serde(rename = "R")]
    Real,
    #[serde(rename = "C")]
    Complex,
    #[serde(rename = "H")]
    Quaternion,
}

const UNITS_R: [Quaternion; 1] = [Quaternion::ONE];
const UNITS_C: [Quaternion; 2] = [Quaternion::ONE, Quaternion::I];
const UNITS_H: [Quaternion; 4] = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K];

impl ScalarField {
    /// Real dimension `d`.
    pub fn dim(self) -> usize {
        match self {
            Self::Real => 1,
            Self::Complex => 2,
            Self::Quaternion => 4,
        }
    }

    /// Real basis `1, i, j, k` truncated to the field.
    pub fn units(self) -> &'static [Quaternion] {
        match self {
            Self::Real => &UNITS_R,
            Self::Complex => &UNITS_C,
            Self::Quaternion => &UNITS_H,
        }
    }

    /// Imaginary units of the field (empty over the reals).
    pub fn imaginary_units(self) -> &'static [Quaternion] {
        &self.units()[1..]
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Real => "R",
            Self::Complex => "C",
            Self::Quaternion => "H",
        }
    }

    /// Whether `q` lies in this field (trailing components zero).
    pub fn contains(self, q: Quaternion) -> bool {
        q.components()[self.dim()..].iter().all(|&c| c == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_follow_tag() {
        assert_eq!(ScalarField::Real.dim(), 1);
        assert_eq!(ScalarField::Complex.dim(), 2);
        assert_eq!(ScalarField::Quaternion.dim(), 4);
        for f in [ScalarField::Real, ScalarField::Complex, ScalarField::Quaternion] {
            assert_eq!(f.units().len(), f.dim());
        }
    }

    #[test]
    fn serde_tags() {
        let s = serde_json::to_string(&ScalarField::Quaternion).unwrap();
        assert_eq!(s, "\"H\"");
        let f: ScalarField = serde_json::from_str("\"C\"").unwrap();
        assert_eq!(f, ScalarField::Complex);
    }
}
