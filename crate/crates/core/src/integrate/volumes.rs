//! Orbit volumes by Monte Carlo in an exponential chart.
//!
//! For an orbit `G·s` and a ball `U = {y ∈ G·s : ‖y − s‖ < ρ}`:
//! `vol(G·s) = vol(U) / P`, where `P` is the Haar probability that
//! `g·s ∈ U`, and `vol(U)` is computed in the chart
//! `Y ↦ exp(Σ Y_a X_a)·s` on a ball of radius `R` with the Jacobian
//! `√det(JᵀJ)` from central differences.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::mc::{mc_moments, McConfig, Measured};
use crate::actions::{algebra_split, sample_normalizer, ActionSpec};
use crate::error::{Error, Result};
use crate::groups::{algebra_basis, haar_sample, torus_point, GroupSpec};
use crate::kernel::{gram_det, MatK, Quaternion};
use crate::weights::orbit_map_differential;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartParams {
    /// Chart ball radius `R`.
    pub radius: f64,
    /// `ρ = rho_factor · R · σ_min(dω_s)`.
    pub rho_factor: f64,
    pub fd_step: f64,
}

impl Default for ChartParams {
    fn default() -> Self {
        Self {
            radius: 2.0,
            rho_factor: 0.5,
            fd_step: 1e-5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitVolume {
    pub volume: Measured,
    pub chart_volume: Measured,
    pub haar_fraction: Measured,
    pub dim: usize,
    pub rho: f64,
    pub radius: f64,
    /// False when a chart hit came close to the boundary of the ball, so
    /// `U` may not be covered.
    pub covers: bool,
}

fn ln_ball_volume(m: usize, r: f64) -> f64 {
    let h = m as f64 / 2.0;
    h * std::f64::consts::PI.ln() + m as f64 * r.ln() - ln_gamma(h + 1.0)
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, m: usize, r: f64, out: &mut [f64]) {
    let mut norm2 = 0.0;
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
        norm2 += *v * *v;
    }
    let u: f64 = rng.random();
    let scale = r * u.powf(1.0 / m as f64) / norm2.sqrt();
    out.iter_mut().for_each(|v| *v *= scale);
}

struct Chart<'a, A> {
    generators: &'a [MatK],
    base: &'a MatK,
    act: A,
}

impl<A: Fn(&MatK, &MatK) -> MatK> Chart<'_, A> {
    fn point(&self, y: &[f64]) -> MatK {
        let n = self.generators[0].rows();
        let mut x = MatK::zeros(self.generators[0].field(), n, n);
        for (g, &c) in self.generators.iter().zip(y) {
            x = x.add_scaled(g, c);
        }
        (self.act)(&x.exp().expect("square generator"), self.base)
    }

    fn jacobian(&self, y: &[f64], h: f64) -> Vec<Vec<f64>> {
        let mut yp = y.to_vec();
        (0..y.len())
            .map(|a| {
                yp[a] = y[a] + h;
                let p = self.point(&yp).realify();
                yp[a] = y[a] - h;
                let m = self.point(&yp).realify();
                yp[a] = y[a];
                p.iter().zip(&m).map(|(u, v)| (u - v) / (2.0 * h)).collect()
            })
            .collect()
    }
}

/// Volume of the orbit of `base` under the group sampled by `sample`,
/// acting by `act`. The generators must span a complement of the isotropy
/// algebra.
pub fn chart_volume<A, S>(
    generators: &[MatK],
    base: &MatK,
    act: A,
    sample: S,
    cfg: &McConfig,
    params: &ChartParams,
) -> Result<OrbitVolume>
where
    A: Fn(&MatK, &MatK) -> MatK + Sync + Send,
    S: Fn(&mut ChaCha8Rng) -> MatK + Sync + Send,
{
    let m = generators.len();
    if m == 0 {
        return Err(Error::Invalid("zero-dimensional orbit has no chart".into()));
    }
    let chart = Chart { generators, base, act };
    let origin = vec![0.0; m];
    let j0 = chart.jacobian(&origin, params.fd_step);
    let jm = DMatrix::from_fn(j0[0].len(), m, |i, a| j0[a][i]);
    let sigma_min = jm.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
    if !(sigma_min > 1e-8) {
        return Err(Error::Domain("orbit chart is degenerate at the base point".into()));
    }
    let r = params.radius;
    let rho = params.rho_factor * r * sigma_min;
    let ln_ball = ln_ball_volume(m, r);
    let base_vec = base.realify();
    let dist = |p: &MatK| -> f64 {
        p.realify().iter().zip(&base_vec).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };

    // outputs: chart integrand, shell-hit indicator
    let chart_m = mc_moments(&cfg.derive(1), 2, |rng, out| {
        let mut y = vec![0.0; m];
        uniform_in_ball(rng, m, r, &mut y);
        out[0] = 0.0;
        out[1] = 0.0;
        if dist(&chart.point(&y)) < rho {
            let j = chart.jacobian(&y, params.fd_step);
            out[0] = (ln_ball.exp()) * gram_det(&j).max(0.0).sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if ny > 0.95 * r {
                out[1] = 1.0;
            }
        }
    });
    let haar_m = mc_moments(&cfg.derive(2), 1, |rng, out| {
        let g = sample(rng);
        out[0] = if dist(&(chart.act)(&g, base)) < rho { 1.0 } else { 0.0 };
    });
    if haar_m[0].mean == 0.0 {
        return Err(Error::IllConditioned("no Haar sample landed in the chart ball".into()));
    }
    let chart_volume = Measured::new(chart_m[0].mean, chart_m[0].stderr());
    let haar_fraction = Measured::new(haar_m[0].mean, haar_m[0].stderr());
    Ok(OrbitVolume {
        volume: chart_volume.over(haar_fraction),
        chart_volume,
        haar_fraction,
        dim: m,
        rho,
        radius: r,
        covers: chart_m[1].mean == 0.0,
    })
}

/// `vol(G)` as the orbit of the identity under left multiplication.
pub fn group_volume(group: GroupSpec, cfg: &McConfig, params: &ChartParams) -> Result<OrbitVolume> {
    let basis = algebra_basis(group);
    let id = MatK::identity(group.field(), group.n);
    chart_volume(
        &basis.elements,
        &id,
        |g, b| g * b,
        |rng| haar_sample(group, rng).matrix,
        cfg,
        params,
    )
}

/// `vol(G·s)`.
pub fn orbit_volume_mc(action: &ActionSpec, s: &MatK, cfg: &McConfig, params: &ChartParams) -> Result<OrbitVolume> {
    let split = algebra_split(action);
    let gens: Vec<MatK> = split.n.iter().chain(&split.m).cloned().collect();
    let group = action.group();
    chart_volume(
        &gens,
        s,
        |g, x| action.act(g, x),
        |rng| haar_sample(group, rng).matrix,
        cfg,
        params,
    )
}

/// `vol(W·s)`; for a finite `W` this is the orbit size `|W|` at a regular
/// point.
pub fn weyl_orbit_volume_mc(action: &ActionSpec, s: &MatK, cfg: &McConfig, params: &ChartParams) -> Result<Measured> {
    match action {
        ActionSpec::Conjugation { .. } => Ok(Measured::exact(action.group().weyl_order() as f64)),
        ActionSpec::DirectSum { .. } => {
            let split = algebra_split(action);
            let v = chart_volume(
                &split.n,
                s,
                |g, x| action.act(g, x),
                |rng| sample_normalizer(action, rng).matrix,
                cfg,
                params,
            )?;
            Ok(v.volume)
        }
    }
}

/// A second regular section point, distinct from the default one.
pub fn alternate_section_point(action: &ActionSpec) -> MatK {
    match *action {
        ActionSpec::DirectSum { field, k, .. } => {
            let b = MatK::from_fn(field, k, k, |i, j| {
                if i == j {
                    Quaternion::real(1.3 - 0.25 * i as f64)
                } else if i < j {
                    Quaternion::real(0.4)
                } else {
                    Quaternion::ZERO
                }
            });
            action.embed_section(&b)
        }
        ActionSpec::Conjugation { .. } => {
            let g = action.group();
            let angles: Vec<f64> = (0..g.rank()).map(|a| 0.7 + 1.1 * (a as f64 + 1.0)).collect();
            torus_point(g, &angles).expect("rank-many angles")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolGhEstimate {
    /// `vol(G·s₀)/|det dω_{s₀}|` at the default and the alternate point.
    pub at_default: Measured,
    pub at_alternate: Measured,
    pub combined: Measured,
    pub sigma_distance: f64,
    pub covers: bool,
}

fn combine(a: Measured, b: Measured) -> Measured {
    if a.stderr == 0.0 || b.stderr == 0.0 {
        return Measured::new(0.5 * (a.value + b.value), 0.5 * a.stderr.hypot(b.stderr));
    }
    let (wa, wb) = (a.stderr.powi(-2), b.stderr.powi(-2));
    Measured::new((wa * a.value + wb * b.value) / (wa + wb), (wa + wb).sqrt().recip())
}

pub fn vol_gh_estimate(action: &ActionSpec, cfg: &McConfig, params: &ChartParams) -> Result<VolGhEstimate> {
    let points = [action.default_section_point(), alternate_section_point(action)];
    let mut est = Vec::new();
    let mut covers = true;
    for (i, s) in points.iter().enumerate() {
        let v = orbit_volume_mc(action, s, &cfg.derive(10 + i as u64), params)?;
        covers &= v.covers;
        let det = orbit_map_differential(action, s)?.abs_det();
        est.push(v.volume.scale(1.0 / det));
    }
    Ok(VolGhEstimate {
        at_default: est[0],
        at_alternate: est[1],
        combined: combine(est[0], est[1]),
        sigma_distance: est[0].sigma_distance(est[1]),
        covers,
    })
}

/// `vol(G/H)`, `vol(W)` and `vol(G/N) = vol(G/H)/vol(W)` from chart
/// estimates at the alternate section point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeTable {
    pub action: ActionSpec,
    pub vol_gh: Measured,
    pub vol_w: Measured,
    pub vol_gn: Measured,
    pub covers: bool,
}

pub fn volume_table(action: &ActionSpec, cfg: &McConfig, params: &ChartParams) -> Result<VolumeTable> {
    let s0 = alternate_section_point(action);
    let d = orbit_map_differential(action, &s0)?;
    let gs = orbit_volume_mc(action, &s0, &cfg.derive(20), params)?;
    let vol_gh = gs.volume.scale(1.0 / d.abs_det());
    let vol_w = weyl_orbit_volume_mc(action, &s0, &cfg.derive(21), params)?.scale(1.0 / d.delta_d());
    Ok(VolumeTable {
        action: *action,
        vol_gh,
        vol_w,
        vol_gn: vol_gh.over(vol_w),
        covers: gs.covers,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeRatioCheck {
    /// `(vol(G·s)/vol(G/H)) / (vol(W·s)/vol(W))`
    pub ratio: Measured,
    pub delta_e: f64,
    pub sigma_distance: f64,
}

/// Estimates every volume in the ratio independently and compares it with
/// `δ_E(s)`. `vol(G/H)` and `vol(W)` come from [`volume_table`], which uses
/// a different base point than `s` unless `s` is that point.
pub fn volume_ratio_check(
    action: &ActionSpec,
    s: &MatK,
    cfg: &McConfig,
    params: &ChartParams,
) -> Result<VolumeRatioCheck> {
    let table = volume_table(action, &cfg.derive(30), params)?;
    let gs = orbit_volume_mc(action, s, &cfg.derive(31), params)?.volume;
    let ws = weyl_orbit_volume_mc(action, s, &cfg.derive(32), params)?;
    let ratio = gs.over(table.vol_gh).over(ws.over(table.vol_w));
    let delta_e = orbit_map_differential(action, s)?.delta_e();
    Ok(VolumeRatioCheck {
        ratio,
        delta_e,
        sigma_distance: ratio.sigma_distance(Measured::exact(delta_e)),
    })
}
