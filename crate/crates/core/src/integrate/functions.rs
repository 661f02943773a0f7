//! Integrands on `M`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::ActionSpec;
use crate::error::{Error, Result};
use crate::groups::haar_sample;
use crate::kernel::{det_modulus, MatK};

/// A named integrand. All families except `Coordinate` are invariant.
///
/// "Radius" means `‖x‖` on a direct sum and `‖x − I‖` on a group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    /// `exp(−r²/2σ²)`
    GaussianRadial { sigma: f64 },
    /// `r² exp(−r²/2σ²)`
    GaussianTimesSqNorm { sigma: f64 },
    /// `|det x*x|^{1/2} exp(−r²/2σ²)`; on `Σ` this is `|det B|·exp(…)`.
    GaussianTimesAbsDet { sigma: f64 },
    /// Piecewise-linear in the radius, zero beyond the last knot.
    RadialTable { radii: Vec<f64>, values: Vec<f64> },
    /// `(Re tr x)^power` on a group.
    ClassTrace { power: u32 },
    /// `Re x[row, col]`; not invariant.
    Coordinate { row: usize, col: usize },
    Combination { terms: Vec<(f64, TestFunction)> },
}

impl TestFunction {
    pub fn gaussian(sigma: f64) -> Self {
        Self::GaussianRadial { sigma }
    }

    pub fn is_invariant(&self) -> bool {
        match self {
            Self::Coordinate { .. } => false,
            Self::Combination { terms } => terms.iter().all(|(_, f)| f.is_invariant()),
            _ => true,
        }
    }

    /// Width used to size the importance density.
    pub fn scale(&self) -> f64 {
        match self {
            Self::GaussianRadial { sigma } | Self::GaussianTimesSqNorm { sigma } | Self::GaussianTimesAbsDet { sigma } => {
                *sigma
            }
            Self::RadialTable { radii, .. } => radii.last().copied().unwrap_or(1.0).max(1e-3) / 3.0,
            Self::Combination { terms } => terms.iter().map(|(_, f)| f.scale()).fold(0.0, f64::max).max(1e-3),
            _ => 1.0,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Constant { value } => format!("constant({value})"),
            Self::GaussianRadial { sigma } => format!("gaussian_radial(sigma={sigma})"),
            Self::GaussianTimesSqNorm { sigma } => format!("gaussian_times_sq_norm(sigma={sigma})"),
            Self::GaussianTimesAbsDet { sigma } => format!("gaussian_times_abs_det(sigma={sigma})"),
            Self::RadialTable { radii, .. } => format!("radial_table({} knots)", radii.len()),
            Self::ClassTrace { power } => format!("class_trace(power={power})"),
            Self::Coordinate { row, col } => format!("coordinate({row},{col})"),
            Self::Combination { terms } => {
                let parts: Vec<String> = terms.iter().map(|(c, f)| format!("{c}*{}", f.name())).collect();
                format!("combination({})", parts.join(" + "))
            }
        }
    }

    pub fn validate(&self, action: &ActionSpec) -> Result<()> {
        let positive = |sigma: f64| {
            if sigma > 0.0 && sigma.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("sigma must be positive, got {sigma}")))
            }
        };
        match self {
            Self::Constant { value } if !value.is_finite() => Err(Error::Invalid("constant must be finite".into())),
            Self::Constant { .. } => Ok(()),
            Self::GaussianRadial { sigma } | Self::GaussianTimesSqNorm { sigma } | Self::GaussianTimesAbsDet { sigma } => {
                positive(*sigma)
            }
            Self::RadialTable { radii, values } => {
                if radii.len() != values.len() || radii.is_empty() {
                    return Err(Error::Invalid("radial table needs equal, nonempty radii and values".into()));
                }
                if radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] < 0.0 {
                    return Err(Error::Invalid("radial table radii must increase from >= 0".into()));
                }
                Ok(())
            }
            Self::ClassTrace { .. } => match action {
                ActionSpec::Conjugation { .. } => Ok(()),
                _ => Err(Error::Invalid("class_trace is defined on conjugation actions only".into())),
            },
            Self::Coordinate { row, col } => {
                let (r, c) = action.point_shape();
                if *row < r && *col < c {
                    Ok(())
                } else {
                    Err(Error::Invalid(format!("coordinate ({row},{col}) outside {r}x{c}")))
                }
            }
            Self::Combination { terms } => terms.iter().try_for_each(|(_, f)| f.validate(action)),
        }
    }

    pub fn eval(&self, action: &ActionSpec, x: &MatK) -> f64 {
        let r2 = || radius_sq(action, x);
        match self {
            Self::Constant { value } => *value,
            Self::GaussianRadial { sigma } => (-r2() / (2.0 * sigma * sigma)).exp(),
            Self::GaussianTimesSqNorm { sigma } => {
                let r2 = r2();
                r2 * (-r2 / (2.0 * sigma * sigma)).exp()
            }
            Self::GaussianTimesAbsDet { sigma } => {
                let gram = &x.adjoint() * x;
                det_modulus(&gram).unwrap_or(0.0).sqrt() * (-r2() / (2.0 * sigma * sigma)).exp()
            }
            Self::RadialTable { radii, values } => interpolate(radii, values, r2().sqrt()),
            Self::ClassTrace { power } => x.trace().w.powi(*power as i32),
            Self::Coordinate { row, col } => x[(*row, *col)].w,
            Self::Combination { terms } => terms.iter().map(|(c, f)| c * f.eval(action, x)).sum(),
        }
    }

    /// Largest `|f(g·x) − f(x)|` over random Haar `g` and Gaussian (or
    /// Haar) `x`.
    pub fn invariance_residual<R: Rng + ?Sized>(&self, action: &ActionSpec, rng: &mut R, trials: usize) -> f64 {
        let group = action.group();
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let x = match action {
                ActionSpec::DirectSum { .. } => {
                    let (r, c) = action.point_shape();
                    MatK::gaussian(action.field(), r, c, rng).scale(self.scale())
                }
                ActionSpec::Conjugation { .. } => haar_sample(group, rng).matrix,
            };
            let g = haar_sample(group, rng);
            let d = (self.eval(action, &action.act(&g.matrix, &x)) - self.eval(action, &x)).abs();
            worst = worst.max(d);
        }
        worst
    }
}

fn radius_sq(action: &ActionSpec, x: &MatK) -> f64 {
    match action {
        ActionSpec::DirectSum { .. } => x.inner_unchecked(x),
        ActionSpec::Conjugation { n, .. } => {
            let d = x - &MatK::identity(x.field(), *n);
            d.inner_unchecked(&d)
        }
    }
}

fn interpolate(radii: &[f64], values: &[f64], r: f64) -> f64 {
    if r < radii[0] {
        return values[0];
    }
    match radii.iter().position(|&k| k > r) {
        None => {
            if r == radii[radii.len() - 1] {
                values[values.len() - 1]
            } else {
                0.0
            }
        }
        Some(i) => {
            let t = (r - radii[i - 1]) / (radii[i] - radii[i - 1]);
            values[i - 1] * (1.0 - t) + values[i] * t
        }
    }
}
