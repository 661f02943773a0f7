//! Generalized random matrix ensembles: draw from an invariant density on
//! `M`, reduce each draw to the section, and compare the law of a
//! `W`-invariant statistic with the one predicted by the weighted density
//! `p(s)·δ_E(s)` on the section.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{reduce_to_section, sample_weyl, ActionSpec};
use crate::error::{Error, Result};
use crate::groups::{haar_sample, torus_angles, torus_point, Family};
use crate::integrate::mc::{run_chunks, McConfig};
use crate::integrate::section_weight;
use crate::integrate::WeightMethod;
use crate::kernel::{det_modulus, singular_values, MatK};
use crate::stats::{quantile_edges, two_sample_chi_square, ChiSquare};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    /// `exp(−‖x‖²/2σ²)` on a direct sum.
    Gaussian { sigma: f64 },
    /// Normalized Haar measure on a group.
    Haar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    /// Dieudonné modulus of `B`.
    AbsDet,
    /// `‖B‖`, or `‖s − I‖` on a group.
    Norm,
    /// The `index`-th largest singular value of `B`.
    SingularValue { index: usize },
    /// Smallest eigenvalue angle, folded into `[0, π]`.
    TorusAngle,
}

impl Statistic {
    pub fn name(&self) -> String {
        match self {
            Self::AbsDet => "abs_det".into(),
            Self::Norm => "norm".into(),
            Self::SingularValue { index } => format!("singular_value({index})"),
            Self::TorusAngle => "torus_angle".into(),
        }
    }

    /// Natural range, used for the outer histogram edges.
    fn support(&self, action: &ActionSpec) -> (f64, f64) {
        match (self, action) {
            (Self::TorusAngle, _) => (0.0, PI),
            (Self::Norm, ActionSpec::Conjugation { n, .. }) => (0.0, 2.0 * (*n as f64).sqrt()),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn eval(&self, action: &ActionSpec, s: &MatK) -> f64 {
        match (self, action) {
            (Self::AbsDet, ActionSpec::DirectSum { .. }) => det_modulus(&action.section_coordinate(s)).unwrap_or(0.0),
            (Self::SingularValue { index }, ActionSpec::DirectSum { .. }) => {
                singular_values(&action.section_coordinate(s)).get(*index).copied().unwrap_or(0.0)
            }
            (Self::Norm, ActionSpec::DirectSum { .. }) => s.norm(),
            (Self::Norm, ActionSpec::Conjugation { n, .. }) => (s - &MatK::identity(s.field(), *n)).norm(),
            (Self::TorusAngle, ActionSpec::Conjugation { .. }) => torus_angles(action.group(), s)
                .iter()
                .chain(std::iter::once(&su_last_angle(action, s)))
                .map(|a| {
                    let t = a.rem_euclid(TAU);
                    t.min(TAU - t)
                })
                .fold(f64::INFINITY, f64::min),
            _ => f64::NAN,
        }
    }
}

// On SU(n) the last diagonal angle is not among the torus coordinates.
fn su_last_angle(action: &ActionSpec, s: &MatK) -> f64 {
    match action {
        ActionSpec::Conjugation { family: Family::SU, n } => {
            let z = s[(n - 1, n - 1)];
            z.x.atan2(z.w)
        }
        _ => f64::INFINITY,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub action: ActionSpec,
    pub density: Density,
    pub statistic: Statistic,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        match (self.action, self.density) {
            (ActionSpec::DirectSum { .. }, Density::Gaussian { sigma }) if sigma > 0.0 && sigma.is_finite() => {}
            (ActionSpec::DirectSum { .. }, Density::Gaussian { sigma }) => {
                return Err(Error::Invalid(format!("sigma must be positive, got {sigma}")))
            }
            (ActionSpec::Conjugation { family: Family::SU, .. }, Density::Haar) => {}
            (ActionSpec::Conjugation { family, .. }, Density::Haar) => {
                return Err(Error::Unsupported(format!(
                    "ensembles on conjugation actions need SU(n) reduction, not {family:?}"
                )))
            }
            (a, d) => return Err(Error::Invalid(format!("density {d:?} does not fit action {a:?}"))),
        }
        match (self.statistic, self.action) {
            (Statistic::Norm, _) => Ok(()),
            (Statistic::AbsDet, ActionSpec::DirectSum { .. }) => Ok(()),
            (Statistic::SingularValue { index }, ActionSpec::DirectSum { k, .. }) if index < k => Ok(()),
            (Statistic::TorusAngle, ActionSpec::Conjugation { .. }) => Ok(()),
            (s, a) => Err(Error::Invalid(format!("statistic {s:?} does not fit action {a:?}"))),
        }
    }

    fn sigma(&self) -> f64 {
        match self.density {
            Density::Gaussian { sigma } => sigma,
            Density::Haar => 1.0,
        }
    }

    /// Largest `|stat(w·s) − stat(s)|` over random section points and
    /// random `w ∈ W`.
    pub fn w_invariance_residual<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let s = match self.action {
                ActionSpec::DirectSum { .. } => self.action.random_section_point(rng),
                ActionSpec::Conjugation { .. } => {
                    let g = self.action.group();
                    let angles: Vec<f64> = (0..g.rank()).map(|_| rng.random::<f64>() * TAU).collect();
                    torus_point(g, &angles).expect("rank-many angles")
                }
            };
            let w = sample_weyl(&self.action, rng);
            let ws = self.action.act(&w.matrix, &s);
            worst = worst.max((self.statistic.eval(&self.action, &ws) - self.statistic.eval(&self.action, &s)).abs());
        }
        worst
    }
}

fn draw<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> MatK {
    match spec.action {
        ActionSpec::DirectSum { .. } => {
            let (r, c) = spec.action.point_shape();
            MatK::gaussian(spec.action.field(), r, c, rng).scale(spec.sigma())
        }
        ActionSpec::Conjugation { .. } => haar_sample(spec.action.group(), rng).matrix,
    }
}

/// One `M`-side draw: the statistic on the reduced point, and
/// `|‖s‖ − ‖x‖|` (or `|‖s−I‖ − ‖x−I‖|`) as an isometry check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDraw {
    pub statistic: f64,
    pub norm_defect: f64,
}

/// `n` draws from the ensemble, in chunk order.
pub fn sample_ensemble(spec: &EnsembleSpec, cfg: &McConfig) -> Result<Vec<EnsembleDraw>> {
    spec.validate()?;
    let a = spec.action;
    let chunks: Vec<Result<Vec<EnsembleDraw>>> = run_chunks(cfg, |rng: &mut ChaCha8Rng, len| {
        (0..len)
            .map(|_| {
                let x = draw(spec, rng);
                let (s, _) = reduce_to_section(&a, &x)?;
                let nd = (Statistic::Norm.eval(&a, &s) - Statistic::Norm.eval(&a, &x)).abs();
                Ok(EnsembleDraw {
                    statistic: spec.statistic.eval(&a, &s),
                    norm_defect: nd,
                })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(cfg.n);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Section-side sample: statistics with normalized weights proportional to
/// `p(s)·δ_E(s) / q(s)` for the proposal `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    pub fn mean_of<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.values.iter().zip(&self.weights).map(|(&v, &w)| w * f(v)).sum()
    }
}

/// Proposal on the section: Gaussian of width `importance_scale·σ` on
/// `B`, or uniform angles on the torus.
pub fn sample_reference(spec: &EnsembleSpec, cfg: &McConfig) -> Result<WeightedSample> {
    spec.validate()?;
    let a = spec.action;
    let sigma = spec.sigma();
    let tau = cfg.importance_scale * sigma;
    let chunks: Vec<Result<Vec<(f64, f64)>>> = run_chunks(cfg, |rng: &mut ChaCha8Rng, len| {
        (0..len)
            .map(|_| match a {
                ActionSpec::DirectSum { field, k, .. } => {
                    let b = MatK::gaussian(field, k, k, rng).scale(tau);
                    let b2 = b.inner_unchecked(&b);
                    // p/q up to a constant
                    let ratio = (-0.5 * b2 * (1.0 / (sigma * sigma) - 1.0 / (tau * tau))).exp();
                    let w = ratio * section_weight(&a, &b, WeightMethod::Auto)?;
                    Ok((spec.statistic.eval(&a, &a.embed_section(&b)), w))
                }
                ActionSpec::Conjugation { .. } => {
                    let g = a.group();
                    let angles: Vec<f64> = (0..g.rank()).map(|_| rng.random::<f64>() * TAU).collect();
                    let t = torus_point(g, &angles)?;
                    let w = section_weight(&a, &t, WeightMethod::Generic)?;
                    Ok((spec.statistic.eval(&a, &t), w))
                }
            })
            .collect()
    });
    let mut values = Vec::with_capacity(cfg.n);
    let mut weights = Vec::with_capacity(cfg.n);
    for c in chunks {
        for (v, w) in c? {
            values.push(v);
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::IllConditioned("reference weights sum to zero".into()));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(WeightedSample { values, weights })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramComparison {
    pub spec: EnsembleSpec,
    pub statistic: String,
    pub n: usize,
    pub seed: u64,
    pub chunks: usize,
    pub requested_bins: usize,
    pub merged_bins: usize,
    pub bin_edges: Vec<f64>,
    pub empirical: Vec<f64>,
    pub reference: Vec<f64>,
    pub reference_n_eff: f64,
    pub max_norm_defect: f64,
    pub chi_square: ChiSquare,
}

impl HistogramComparison {
    pub fn passes(&self, alpha: f64) -> bool {
        self.chi_square.p_value >= alpha
    }

    /// Columns `bin_lo,bin_hi,empirical,reference`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,empirical,reference\n");
        for i in 0..self.empirical.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                self.empirical[i],
                self.reference[i]
            ));
        }
        s
    }
}

/// χ² comparison of the `M`-side histogram (seed stream 1) with the
/// weighted section-side histogram (seed stream 2). Bin edges are
/// quantiles of the `M`-side sample.
pub fn compare_densities(spec: &EnsembleSpec, cfg: &McConfig, bins: usize) -> Result<HistogramComparison> {
    if bins == 0 {
        return Err(Error::Invalid("bins must be positive".into()));
    }
    let draws = sample_ensemble(spec, &cfg.derive(1))?;
    let reference = sample_reference(spec, &cfg.derive(2))?;
    let m_side: Vec<f64> = draws.iter().map(|d| d.statistic).collect();
    let (lo_s, hi_s) = spec.statistic.support(&spec.action);
    let min = m_side.iter().chain(&reference.values).cloned().fold(f64::INFINITY, f64::min);
    let max = m_side.iter().chain(&reference.values).cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = if lo_s.is_finite() { lo_s.min(min) } else { min };
    let hi = if hi_s.is_finite() { hi_s.max(max) } else { max };
    let edges = quantile_edges(&m_side, bins, lo, hi);
    let t = two_sample_chi_square(&edges, &m_side, &reference.values, &reference.weights);
    Ok(HistogramComparison {
        spec: *spec,
        statistic: spec.statistic.name(),
        n: cfg.n,
        seed: cfg.seed,
        chunks: cfg.chunks,
        requested_bins: bins,
        merged_bins: t.merged_bins,
        bin_edges: t.edges,
        empirical: t.empirical,
        reference: t.reference,
        reference_n_eff: crate::stats::kish_n_eff(&reference.weights),
        max_norm_defect: draws.iter().map(|d| d.norm_defect).fold(0.0, f64::max),
        chi_square: t.test,
    })
}
