//! Direct integration over `M`, weighted integration over the section, and
//! the constants tying them together.
//!
//! On a direct sum `M = K^{n×k}` is a Euclidean space; integrals use a
//! Gaussian importance density. On a conjugation action `M = G` and direct
//! integrals are Haar means times an estimate of `vol(G)`; section
//! integrals over the torus use a trapezoid grid.

pub mod functions;
pub mod mc;
pub mod volumes;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use functions::TestFunction;
pub use mc::{McConfig, McEstimate, Measured, Moments};
pub use volumes::{ChartParams, OrbitVolume, VolGhEstimate, VolumeRatioCheck, VolumeTable};

use crate::actions::ActionSpec;
use crate::error::{Error, Result};
use crate::groups::{haar_sample, torus_metric_factor, torus_point};
use crate::kernel::MatK;
use crate::weights::{delta_e_closed_form, delta_e_generic};

/// How `δ_E` is evaluated inside section integrals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    /// Closed form where it applies, the generic evaluator elsewhere.
    #[default]
    Auto,
    ClosedForm,
    Generic,
}

/// `δ_E` at the section point with coordinate `b` (the top block on a
/// direct sum, the torus element itself on a group).
pub fn section_weight(action: &ActionSpec, b: &MatK, method: WeightMethod) -> Result<f64> {
    match (*action, method) {
        (ActionSpec::DirectSum { field, n, k }, WeightMethod::Auto) if k >= 2 => delta_e_closed_form(field, n, k, b),
        (ActionSpec::DirectSum { field, n, k }, WeightMethod::ClosedForm) => delta_e_closed_form(field, n, k, b),
        (ActionSpec::DirectSum { .. }, _) => delta_e_generic(action, &action.embed_section(b)),
        (ActionSpec::Conjugation { .. }, WeightMethod::ClosedForm) => {
            Err(Error::Unsupported("no closed-form weight for conjugation actions".into()))
        }
        (ActionSpec::Conjugation { .. }, _) => delta_e_generic(action, b),
    }
}

fn gaussian_log_density(x2: f64, dim: usize, tau: f64) -> f64 {
    -0.5 * x2 / (tau * tau) - dim as f64 * (tau.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
}

/// `∫ g` over `K^{rows×cols}` by Gaussian importance sampling with width
/// `tau`.
fn euclidean_integral<F>(cfg: &McConfig, field: crate::kernel::ScalarField, rows: usize, cols: usize, tau: f64, g: F) -> Moments
where
    F: Fn(&MatK) -> f64 + Sync + Send,
{
    let dim = field.dim() * rows * cols;
    mc::mc_moments(cfg, 1, |rng, out| {
        let x = MatK::gaussian(field, rows, cols, rng).scale(tau);
        let x2 = x.inner_unchecked(&x);
        let v = g(&x);
        out[0] = if v == 0.0 { 0.0 } else { v * (-gaussian_log_density(x2, dim, tau)).exp() };
    })[0]
}

fn check_finite(est: &McEstimate, what: &str) -> Result<()> {
    if est.mean.is_finite() && est.stderr.is_finite() {
        Ok(())
    } else {
        Err(Error::IllConditioned(format!("{what} produced a non-finite estimate")))
    }
}

/// `vol(G)` used by direct integrals on conjugation actions.
pub fn group_volume_estimate(action: &ActionSpec, cfg: &McConfig) -> Result<Measured> {
    Ok(volumes::group_volume(action.group(), &cfg.derive(0x6d), &ChartParams::default())?.volume)
}

fn direct_with<F>(action: &ActionSpec, cfg: &McConfig, scale: f64, g: F) -> Result<McEstimate>
where
    F: Fn(&MatK) -> f64 + Sync + Send,
{
    match *action {
        ActionSpec::DirectSum { .. } => {
            let (r, c) = action.point_shape();
            let m = euclidean_integral(cfg, action.field(), r, c, cfg.importance_scale * scale, g);
            Ok(McEstimate::from_moments(&m, cfg))
        }
        ActionSpec::Conjugation { .. } => {
            let group = action.group();
            let m = mc::mc_moments(cfg, 1, |rng, out| out[0] = g(&haar_sample(group, rng).matrix))[0];
            let est = McEstimate::from_moments(&m, cfg);
            if m.mean == 0.0 && m.m2 == 0.0 {
                return Ok(est);
            }
            Ok(est.scaled_by(group_volume_estimate(action, cfg)?))
        }
    }
}

/// `∫_M f dx`.
pub fn integrate_direct(action: &ActionSpec, f: &TestFunction, cfg: &McConfig) -> Result<McEstimate> {
    f.validate(action)?;
    let est = direct_with(action, cfg, f.scale(), |x| f.eval(action, x))?;
    check_finite(&est, "direct integral")?;
    Ok(est.labeled(action, f.name()))
}

fn section_with<F>(action: &ActionSpec, cfg: &McConfig, scale: f64, method: WeightMethod, g: F) -> Result<McEstimate>
where
    F: Fn(&MatK) -> f64 + Sync + Send,
{
    match *action {
        ActionSpec::DirectSum { field, k, .. } => {
            // surface the weight's own errors before sampling
            section_weight(action, &MatK::identity(field, k), method)?;
            let m = euclidean_integral(cfg, field, k, k, cfg.importance_scale * scale, |b| {
                let s = action.embed_section(b);
                let v = g(&s);
                if v == 0.0 {
                    0.0
                } else {
                    v * section_weight(action, b, method).unwrap_or(0.0)
                }
            });
            Ok(McEstimate::from_moments(&m, cfg))
        }
        ActionSpec::Conjugation { .. } => {
            if method == WeightMethod::ClosedForm {
                section_weight(action, &MatK::identity(action.field(), 1), method)?;
            }
            let group = action.group();
            let r = group.rank();
            let m = cfg.grid.max(2);
            let h = 2.0 * std::f64::consts::PI / m as f64;
            let total = m.pow(r as u32);
            let mut sum = 0.0;
            let mut angles = vec![0.0; r];
            for idx in 0..total {
                let mut q = idx;
                for a in angles.iter_mut() {
                    *a = (q % m) as f64 * h;
                    q /= m;
                }
                let t = torus_point(group, &angles)?;
                let v = g(&t);
                if v != 0.0 {
                    sum += v * delta_e_generic(action, &t)?;
                }
            }
            let value = sum * h.powi(r as i32) * torus_metric_factor(group);
            Ok(McEstimate::exact(value, total, cfg))
        }
    }
}

/// `∫_Σ f(s) δ_E(s) ds`.
pub fn integrate_section(action: &ActionSpec, f: &TestFunction, cfg: &McConfig, method: WeightMethod) -> Result<McEstimate> {
    f.validate(action)?;
    let est = section_with(action, cfg, f.scale(), method, |s| f.eval(action, s))?;
    check_finite(&est, "section integral")?;
    Ok(est.labeled(action, f.name()))
}

/// `vol(G/N) · ∫_Σ f δ_E ds`; `f` must be invariant.
pub fn integrate_reduced(
    action: &ActionSpec,
    f: &TestFunction,
    vol_gn: Measured,
    cfg: &McConfig,
    method: WeightMethod,
) -> Result<McEstimate> {
    if !f.is_invariant() {
        return Err(Error::ContractViolation(format!(
            "{} is not invariant; the reduced formula does not apply",
            f.name()
        )));
    }
    Ok(integrate_section(action, f, cfg, method)?.scaled_by(vol_gn))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub function: String,
    pub direct: McEstimate,
    pub section: McEstimate,
    pub ratio: Measured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub vol_gn: McEstimate,
    pub entries: Vec<CalibrationEntry>,
    /// Largest pairwise distance between per-function ratios, in combined
    /// standard errors.
    pub max_sigma_distance: f64,
    pub consistent: bool,
}

/// `vol(G/N)` as `∫_M f / ∫_Σ f δ_E` for each `f`, combined by inverse
/// variance. Function `i` uses seeds derived from `(cfg.seed, i)`.
pub fn calibrate_vol_gn(action: &ActionSpec, fs: &[TestFunction], cfg: &McConfig, method: WeightMethod) -> Result<Calibration> {
    if fs.len() < 2 {
        return Err(Error::Invalid("calibration needs at least two integrands".into()));
    }
    let mut entries = Vec::with_capacity(fs.len());
    for (i, f) in fs.iter().enumerate() {
        if !f.is_invariant() {
            return Err(Error::ContractViolation(format!("{} is not invariant", f.name())));
        }
        let direct = integrate_direct(action, f, &cfg.derive(100 + 2 * i as u64))?;
        let section = integrate_section(action, f, &cfg.derive(101 + 2 * i as u64), method)?;
        if section.mean.abs() <= 3.0 * section.stderr || section.mean.abs() < 1e-300 {
            return Err(Error::IllConditioned(format!(
                "section integral of {} is indistinguishable from zero ({} ± {})",
                f.name(),
                section.mean,
                section.stderr
            )));
        }
        let ratio = direct.measured().over(section.measured());
        entries.push(CalibrationEntry {
            function: f.name(),
            direct,
            section,
            ratio,
        });
    }
    let mut max_sigma: f64 = 0.0;
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            max_sigma = max_sigma.max(a.ratio.sigma_distance(b.ratio));
        }
    }
    let (mut wsum, mut vsum) = (0.0, 0.0);
    for e in &entries {
        let w = if e.ratio.stderr > 0.0 { e.ratio.stderr.powi(-2) } else { 1e300 };
        wsum += w;
        vsum += w * e.ratio.value;
    }
    let n_samples = entries.iter().map(|e| e.direct.n_samples + e.section.n_samples).sum();
    let vol_gn = McEstimate {
        mean: vsum / wsum,
        stderr: wsum.sqrt().recip(),
        n_samples,
        seed: cfg.seed,
        chunks: cfg.chunks,
        action: Some(*action),
        function: Some("vol_gn".into()),
    };
    Ok(Calibration {
        vol_gn,
        entries,
        max_sigma_distance: max_sigma,
        consistent: max_sigma <= 3.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryVolume {
    pub vol_g: Measured,
    /// `∫_T δ_E`
    pub weighted_section_volume: f64,
    pub vol_gn: Measured,
}

/// `vol(G/N) = vol(M)/vol_E(Σ)`, available when `M` has finite volume.
pub fn vol_gn_corollary(action: &ActionSpec, cfg: &McConfig) -> Result<CorollaryVolume> {
    if let ActionSpec::DirectSum { .. } = action {
        return Err(Error::Unsupported("M has infinite volume on a direct sum".into()));
    }
    let vol_g = group_volume_estimate(action, cfg)?;
    let ve = section_with(action, cfg, 1.0, WeightMethod::Generic, |_| 1.0)?.mean;
    Ok(CorollaryVolume {
        vol_g,
        weighted_section_volume: ve,
        vol_gn: vol_g.scale(1.0 / ve),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaPCheck {
    pub p: u32,
    /// `‖f‖_{L^p(M)}`
    pub norm_m: Measured,
    /// `‖(vol(G/N)·δ_E)^{1/p} f|_Σ‖_{L^p(Σ)}`
    pub norm_section: Measured,
    pub relative_error: f64,
    pub sigma: f64,
    pub within_3sigma: bool,
}

fn root(m: Measured, p: u32) -> Measured {
    let inv = 1.0 / p as f64;
    let v = m.value.max(0.0).powf(inv);
    let d = if m.value > 0.0 { inv * v / m.value } else { 0.0 };
    Measured::new(v, m.stderr * d)
}

/// Compares the `L^p` norm of `f` on `M` with the weighted norm of its
/// restriction to the section.
pub fn theta_p_check(
    action: &ActionSpec,
    f: &TestFunction,
    p: u32,
    vol_gn: Measured,
    cfg: &McConfig,
    method: WeightMethod,
) -> Result<ThetaPCheck> {
    if !(1..=2).contains(&p) {
        return Err(Error::Invalid(format!("p must be 1 or 2, got {p}")));
    }
    if !f.is_invariant() {
        return Err(Error::ContractViolation(format!("{} is not invariant", f.name())));
    }
    f.validate(action)?;
    let pow = |x: &MatK| f.eval(action, x).abs().powi(p as i32);
    let scale = f.scale() / (p as f64).sqrt();
    let lhs = direct_with(action, &cfg.derive(200 + p as u64), scale, pow)?.measured();
    let rhs = section_with(action, &cfg.derive(300 + p as u64), scale, method, pow)?
        .measured()
        .times(vol_gn);
    let (a, b) = (root(lhs, p), root(rhs, p));
    if a.value == 0.0 && b.value == 0.0 {
        return Ok(ThetaPCheck {
            p,
            norm_m: a,
            norm_section: b,
            relative_error: 0.0,
            sigma: 0.0,
            within_3sigma: true,
        });
    }
    let rel = (a.value - b.value).abs() / a.value;
    let diff_sigma = a.stderr.hypot(b.stderr) / a.value;
    let sigma = if rel == 0.0 { 0.0 } else { rel / diff_sigma };
    Ok(ThetaPCheck {
        p,
        norm_m: a,
        norm_section: b,
        relative_error: rel,
        sigma,
        within_3sigma: sigma <= 3.0,
    })
}

/// Draws a point of `M` from the reference density: Gaussian of width
/// `sigma` on a direct sum, Haar on a group.
pub fn sample_reference<R: Rng + ?Sized>(action: &ActionSpec, sigma: f64, rng: &mut R) -> MatK {
    match action {
        ActionSpec::DirectSum { .. } => {
            let (r, c) = action.point_shape();
            MatK::gaussian(action.field(), r, c, rng).scale(sigma)
        }
        ActionSpec::Conjugation { .. } => haar_sample(action.group(), rng).matrix,
    }
}
