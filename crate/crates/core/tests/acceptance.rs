//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails
//! if any criterion failed.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weylsec::actions::{algebra_split, classify_point, sample_weyl, ActionSpec, RegularityClass};
use weylsec::cli::{self, Cli};
use weylsec::ensembles::{compare_densities, sample_ensemble, Density, EnsembleSpec, Statistic};
use weylsec::groups::{torus_point, Family};
use weylsec::integrate::{
    calibrate_vol_gn, integrate_direct, integrate_reduced, integrate_section, theta_p_check, vol_gn_corollary,
    McConfig, Measured, TestFunction, WeightMethod,
};
use weylsec::kernel::{det_modulus, realification, MatK, Quaternion, ScalarField};
use weylsec::stats::ks_one_sample;
use weylsec::weights::{delta_e_closed_form, delta_e_generic, orbit_map_differential};

const FIELDS: [(ScalarField, usize); 3] = [(ScalarField::Real, 6), (ScalarField::Complex, 4), (ScalarField::Quaternion, 3)];

/// Direct sums with 2 ≤ k ≤ n−1 at desk scale.
fn direct_sums() -> Vec<ActionSpec> {
    let mut v = Vec::new();
    for (f, max_n) in FIELDS {
        for n in 3..=max_n {
            for k in 2..n {
                v.push(ActionSpec::direct_sum(f, n, k).unwrap());
            }
        }
    }
    v
}

fn conjugations() -> Vec<ActionSpec> {
    [(Family::SU, 2), (Family::SU, 3), (Family::SO, 3), (Family::SO, 4), (Family::Sp, 1), (Family::Sp, 2)]
        .into_iter()
        .map(|(f, n)| ActionSpec::conjugation(f, n).unwrap())
        .collect()
}

fn so3_k2() -> ActionSpec {
    ActionSpec::direct_sum(ScalarField::Real, 3, 2).unwrap()
}

fn su2() -> ActionSpec {
    ActionSpec::conjugation(Family::SU, 2).unwrap()
}

fn regular_point(action: &ActionSpec, rng: &mut ChaCha8Rng) -> MatK {
    loop {
        let s = action.random_section_point(rng);
        if classify_point(action, &s) == RegularityClass::Regular {
            return s;
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn ac1_delta_cross_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for a in direct_sums() {
        let ActionSpec::DirectSum { field, n, k } = a else { unreachable!() };
        for _ in 0..100 {
            let s = regular_point(&a, &mut rng);
            let g = delta_e_generic(&a, &s).unwrap();
            let c = delta_e_closed_form(field, n, k, &a.section_coordinate(&s)).unwrap();
            worst = worst.max(rel(g, c));
        }
        cases += 1;
    }
    outcome(worst <= 1e-8, format!("{cases} actions x 100 points, max rel diff {worst:.2e} (tol 1e-8)"))
}

fn ac2_reductive_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut bracket, mut adjoint): (f64, f64) = (0.0, 0.0);
    let mut dims_ok = true;
    let mut bad = Vec::new();
    for a in direct_sums() {
        let ActionSpec::DirectSum { field, n, k } = a else { unreachable!() };
        let split = algebra_split(&a);
        let r = split.verify(&mut rng, 10);
        bracket = bracket.max(r.bracket);
        adjoint = adjoint.max(r.adjoint);
        let d = field.dim();
        let (copol, cohom) = match field {
            ScalarField::Real => (k * (k - 1) / 2, k * (k + 1) / 2),
            ScalarField::Complex => (k * k, k * k),
            ScalarField::Quaternion => (k * (2 * k + 1), k * (2 * k - 1)),
        };
        let ok = r.dim_defect == 0
            && split.n.len() == copol
            && a.copolarity() == copol
            && a.cohomogeneity() == cohom
            && a.section_dim() == d * k * k
            && split.m.len() == d * k * (n - k);
        if !ok {
            dims_ok = false;
            bad.push(format!("{a:?}"));
        }
    }
    outcome(
        bracket <= 1e-8 && adjoint <= 1e-8 && dims_ok,
        format!("[n,m] residual {bracket:.2e}, Ad residual {adjoint:.2e} (tol 1e-8), dimension mismatches {bad:?}"),
    )
}

fn ac3_integration_identity() -> Outcome {
    let a = so3_k2();
    let f = TestFunction::gaussian(1.0);
    let cfg = McConfig::new(103, 1_000_000);
    let direct = integrate_direct(&a, &f, &cfg.derive(1)).unwrap();
    let calib = calibrate_vol_gn(
        &a,
        &[TestFunction::GaussianTimesSqNorm { sigma: 0.8 }, TestFunction::GaussianTimesAbsDet { sigma: 1.0 }],
        &McConfig::new(1103, 200_000),
        WeightMethod::Auto,
    )
    .unwrap();
    let reduced = integrate_reduced(&a, &f, calib.vol_gn.measured(), &cfg.derive(2), WeightMethod::Auto).unwrap();
    let z = direct.measured().sigma_distance(reduced.measured());
    let exact = TAU.powi(3);
    let z_exact = direct.measured().sigma_distance(Measured::exact(exact));
    outcome(
        z <= 3.0 && calib.consistent && z_exact <= 3.0,
        format!(
            "direct {:.3}±{:.3}, reduced {:.3}±{:.3} ({z:.2}σ); direct vs (2π)³ {z_exact:.2}σ; vol(G/N) {:.4}±{:.4}, ratio spread {:.2}σ",
            direct.mean, direct.stderr, reduced.mean, reduced.stderr, calib.vol_gn.mean, calib.vol_gn.stderr, calib.max_sigma_distance
        ),
    )
}

fn ac4_classical_weyl() -> Outcome {
    let a = su2();
    let ratios: Vec<f64> = (0..100)
        .map(|i| {
            let t = 0.1 + (PI - 0.2) * i as f64 / 99.0;
            let s = torus_point(a.group(), &[t]).unwrap();
            delta_e_generic(&a, &s).unwrap() / t.sin().powi(2)
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    let spread = (hi - lo) / lo;
    let f = TestFunction::ClassTrace { power: 2 };
    let direct = integrate_direct(&a, &f, &McConfig::new(104, 400_000)).unwrap();
    let cor = vol_gn_corollary(&a, &McConfig::new(1104, 400_000)).unwrap();
    let reduced = integrate_reduced(&a, &f, cor.vol_gn, &McConfig::new(2104, 1), WeightMethod::Auto).unwrap();
    let z = direct.measured().sigma_distance(reduced.measured());
    outcome(
        spread <= 1e-6 && z <= 3.0,
        format!(
            "δ_E/sin² spread {spread:.2e} (tol 1e-6, constant {lo:.6}); class integral direct {:.3}±{:.3} vs reduced {:.3}±{:.3} ({z:.2}σ)",
            direct.mean, direct.stderr, reduced.mean, reduced.stderr
        ),
    )
}

fn ac5_factorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let (mut fact, mut off): (f64, f64) = (0.0, 0.0);
    let actions: Vec<ActionSpec> = direct_sums().into_iter().chain(conjugations()).collect();
    for a in &actions {
        for _ in 0..50 {
            let s = regular_point(a, &mut rng);
            let d = orbit_map_differential(a, &s).unwrap();
            fact = fact.max(rel(d.abs_det(), d.delta_d() * d.delta_e()));
            off = off.max(d.off_block_residual());
        }
    }
    outcome(
        fact <= 1e-8 && off <= 1e-10,
        format!("{} actions x 50 points: factorization rel {fact:.2e} (tol 1e-8), off-block {off:.2e} (tol 1e-10)", actions.len()),
    )
}

/// `|det|` by Gaussian elimination with partial pivoting, kept independent
/// of the library's determinant routines.
fn elimination_abs_det(m: &nalgebra::DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        a.swap(p, c);
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for j in c..n {
                a[r][j] -= f * a[c][j];
            }
        }
    }
    det.abs()
}

fn ac6_realification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst: f64 = 0.0;
    for (f, _) in FIELDS {
        for i in 0..100 {
            let size = 1 + i % 4;
            let p = MatK::gaussian(f, size, size, &mut rng);
            let lhs = elimination_abs_det(&realification(&p).unwrap());
            let rhs = det_modulus(&p).unwrap().powi(f.dim() as i32);
            worst = worst.max(rel(lhs, rhs));
        }
    }
    outcome(worst <= 1e-8, format!("300 matrices, max rel diff {worst:.2e} (tol 1e-8)"))
}

fn ac7_theta_p() -> Outcome {
    let a = so3_k2();
    let calib = calibrate_vol_gn(
        &a,
        &[TestFunction::GaussianTimesAbsDet { sigma: 1.0 }, TestFunction::gaussian(0.7)],
        &McConfig::new(1107, 200_000),
        WeightMethod::Auto,
    )
    .unwrap();
    let mut lines = Vec::new();
    let mut pass = calib.consistent;
    for f in [TestFunction::gaussian(1.0), TestFunction::GaussianTimesSqNorm { sigma: 0.8 }] {
        for p in [1, 2] {
            let t = theta_p_check(&a, &f, p, calib.vol_gn.measured(), &McConfig::new(107, 400_000), WeightMethod::Auto)
                .unwrap();
            pass &= t.within_3sigma;
            lines.push(format!("{} p={p}: rel {:.2e} ({:.2}σ)", f.name(), t.relative_error, t.sigma));
        }
    }
    outcome(pass, lines.join("; "))
}

fn ac8_ensembles() -> Outcome {
    let so3 = EnsembleSpec {
        action: so3_k2(),
        density: Density::Gaussian { sigma: 1.0 },
        statistic: Statistic::AbsDet,
    };
    let su2_spec = EnsembleSpec {
        action: su2(),
        density: Density::Haar,
        statistic: Statistic::TorusAngle,
    };
    let cfg = McConfig::new(108, 100_000);
    let c1 = compare_densities(&so3, &cfg, 30).unwrap();
    let c2 = compare_densities(&su2_spec, &cfg, 30).unwrap();
    // M-side angles against the classical density 2 sin²θ/π on [0, π]
    let angles: Vec<f64> = sample_ensemble(&su2_spec, &cfg.derive(7))
        .unwrap()
        .iter()
        .map(|d| d.statistic)
        .collect();
    let ks = ks_one_sample(&angles, |t| (t - t.sin() * t.cos()) / PI);
    outcome(
        c1.passes(0.01) && c2.passes(0.01) && ks.p_value >= 0.01,
        format!(
            "SO(3) k=2 |det B|: χ²={:.1}, df={}, p={:.3}; SU(2) angle: χ²={:.1}, df={}, p={:.3}; sin² KS p={:.3}",
            c1.chi_square.statistic,
            c1.chi_square.df,
            c1.chi_square.p_value,
            c2.chi_square.statistic,
            c2.chi_square.df,
            c2.chi_square.p_value,
            ks.p_value
        ),
    )
}

fn singular_points(a: &ActionSpec, rng: &mut ChaCha8Rng) -> Vec<MatK> {
    match *a {
        ActionSpec::DirectSum { field, k, .. } => {
            let mut out = vec![a.embed_section(&MatK::zeros(field, k, k))];
            for _ in 0..5 {
                // last row a real combination of the others
                let mut b = MatK::gaussian(field, k, k, rng);
                let c: Vec<f64> = (0..k - 1).map(|_| rng.random::<f64>() - 0.5).collect();
                for j in 0..k {
                    let mut v = Quaternion::ZERO;
                    for (i, ci) in c.iter().enumerate() {
                        v = v + b[(i, j)] * Quaternion::real(*ci);
                    }
                    b[(k - 1, j)] = v;
                }
                out.push(a.embed_section(&b));
            }
            out
        }
        ActionSpec::Conjugation { family, n } => {
            let g = a.group();
            let r = g.rank();
            let mut out = vec![MatK::identity(a.field(), n)];
            let t: f64 = rng.random::<f64>() * TAU;
            // a root vanishes: θ_1 = θ_2 in rank ≥ 2, θ = π on SU(2) and Sp(1)
            let angles = match (family, r) {
                (_, r) if r >= 2 => vec![t; r],
                (Family::SO, _) => return out,
                _ => vec![PI],
            };
            out.push(torus_point(g, &angles).unwrap());
            out
        }
    }
}

fn ac9_singular_and_w_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut nonzero = Vec::new();
    let mut w_worst: f64 = 0.0;
    let mut singular_count = 0;
    for a in direct_sums().into_iter().chain(conjugations()) {
        for s in singular_points(&a, &mut rng) {
            let d = delta_e_generic(&a, &s).unwrap();
            singular_count += 1;
            if d != 0.0 {
                nonzero.push(format!("{a:?}: {d:e}"));
            }
        }
        let s = regular_point(&a, &mut rng);
        let d0 = delta_e_generic(&a, &s).unwrap();
        for _ in 0..20 {
            let w = sample_weyl(&a, &mut rng);
            let d1 = delta_e_generic(&a, &a.act(&w.matrix, &s)).unwrap();
            w_worst = w_worst.max(rel(d0, d1));
        }
    }
    outcome(
        nonzero.is_empty() && w_worst <= 1e-9,
        format!("{singular_count} singular points, nonzero weights {nonzero:?}; W-invariance rel {w_worst:.2e} (tol 1e-9)"),
    )
}

fn run_cli(args: &[&str], workers: usize) -> String {
    use clap::Parser;
    let mut v: Vec<String> = vec!["weylsec".into(), "--workers".into(), workers.to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    let c = Cli::try_parse_from(v).unwrap();
    cli::render(&cli::execute(&c).unwrap())
}

fn ac10_determinism() -> Outcome {
    let runs: [&[&str]; 3] = [
        &["--seed", "110", "--n", "50000", "--chunks", "16", "integrate"],
        &["--seed", "110", "--n", "20000", "--chunks", "16", "ensemble", "--bins", "20"],
        &[
            "--seed", "110", "--n", "20000", "--chunks", "8", "--action",
            r#"{"kind":"conjugation","family":"SU","n":2}"#, "integrate", "--function",
            r#"{"family":"class_trace","power":2}"#,
        ],
    ];
    let mut identical = 0;
    for args in runs {
        let base = run_cli(args, 1);
        if [2, 8].iter().all(|&w| run_cli(args, w) == base) && base == run_cli(args, 1) {
            identical += 1;
        }
    }
    outcome(identical == runs.len(), format!("{identical}/{} payloads bit-identical across 1, 2, 8 workers", runs.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<(&str, &str, Duration, fn() -> Outcome)> = vec![
        ("AC-1", "delta_e generic vs closed form", Duration::from_secs(10), ac1_delta_cross_validation),
        ("AC-2", "reductive decomposition", Duration::from_secs(5), ac2_reductive_decomposition),
        ("AC-3", "integration identity SO(3) k=2", Duration::from_secs(60), ac3_integration_identity),
        ("AC-4", "classical Weyl recovery SU(2)", Duration::from_secs(30), ac4_classical_weyl),
        ("AC-5", "factorization and block structure", Duration::from_secs(10), ac5_factorization),
        ("AC-6", "realification identity", Duration::from_secs(5), ac6_realification),
        ("AC-7", "L^p isometry p in {1,2}", Duration::from_secs(60), ac7_theta_p),
        ("AC-8", "ensemble histograms", Duration::from_secs(60), ac8_ensembles),
        ("AC-9", "singular vanishing and W-invariance", Duration::from_secs(60), ac9_singular_and_w_invariance),
        ("AC-10", "determinism across workers", Duration::from_secs(120), ac10_determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        let t = Instant::now();
        let o = run();
        let el = t.elapsed();
        let pass = o.pass && el <= limit;
        println!(
            "{} {id} {name}: {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            el.as_secs_f64(),
            limit.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn section_integral_is_positive() {
    // the weighted section volume on SU(2) and a weighted Gaussian mass
    let one = TestFunction::Constant { value: 1.0 };
    let v = integrate_section(&su2(), &one, &McConfig::new(1, 1), WeightMethod::Auto).unwrap();
    assert!(v.mean > 0.0);
    let g = integrate_section(&so3_k2(), &TestFunction::gaussian(1.0), &McConfig::new(2, 1000), WeightMethod::Auto).unwrap();
    assert!(g.mean > 0.0);
}
