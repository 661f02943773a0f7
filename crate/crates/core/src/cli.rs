//! The `weylsec` command line.
//!
//! Every run is determined by its flags; reports are JSON on stdout or in
//! `--out`. Exit status is 0 when every verdict passes, 1 when a verdict
//! fails, and 2 on errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::actions::{
    algebra_split, classify_point, sample_weyl, section_checks, ActionSpec, RegularityClass,
};
use crate::ensembles::{compare_densities, Density, EnsembleSpec, Statistic};
use crate::error::{Error, Result};
use crate::groups::torus_point;
use crate::integrate::volumes::{vol_gh_estimate, volume_ratio_check, volume_table};
use crate::integrate::{
    calibrate_vol_gn, integrate_direct, integrate_reduced, vol_gn_corollary, ChartParams, McConfig, McEstimate,
    Measured, TestFunction, WeightMethod,
};
use crate::kernel::{MatK, Quaternion, ScalarField, Tolerances};
use crate::weights::{delta_e_closed_form, orbit_map_differential};

pub const DEFAULT_ACTION: &str = r#"{"kind":"direct_sum","field":"R","n":3,"k":2}"#;

#[derive(Debug, Parser)]
#[command(name = "weylsec", version, about = "Weighted section integrals for isometric matrix-group actions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Action as inline JSON or a path to a JSON file.
    #[arg(long, global = true, default_value = DEFAULT_ACTION)]
    pub action: String,
    #[arg(long, global = true, default_value_t = 20_240_901)]
    pub seed: u64,
    /// Samples per Monte Carlo estimate.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, global = true, default_value_t = 64)]
    pub chunks: usize,
    /// Worker threads; does not change any output.
    #[arg(long, global = true, env = "WEYLSEC_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_abs: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_rel: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weights at one section point.
    Delta(DeltaArgs),
    /// Direct and reduced integrals of a test function.
    Integrate(IntegrateArgs),
    /// Structural checks for the action.
    Verify(VerifyArgs),
    /// Histogram comparison for a matrix ensemble.
    Ensemble(EnsembleArgs),
    /// Orbit and quotient volumes.
    Volumes,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    /// `B` (k×k) or a full section point, inline or from a file. Rows are
    /// separated by `;` or newlines, entries by spaces or commas; entries
    /// look like `1.5`, `2-0.5i`, `1+2i-3j+k`.
    #[arg(long)]
    pub point: Option<String>,
    /// Torus angles for a conjugation action.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Direct,
    Reduced,
    Both,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Test function as JSON, e.g. `{"family":"gaussian_radial","sigma":1.0}`.
    #[arg(long, default_value = r#"{"family":"gaussian_radial","sigma":1.0}"#)]
    pub function: String,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub mode: Mode,
    /// Use this `vol(G/N)` instead of calibrating it.
    #[arg(long)]
    pub vol_gn: Option<f64>,
    #[arg(long, value_enum, default_value_t = WeightArg::Auto)]
    pub weight: WeightArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Auto,
    ClosedForm,
    Generic,
}

impl From<WeightArg> for WeightMethod {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Auto => Self::Auto,
            WeightArg::ClosedForm => Self::ClosedForm,
            WeightArg::Generic => Self::Generic,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Tilt one vector of the complement by this amount before checking.
    #[arg(long)]
    pub corrupt_metric: Option<f64>,
    /// Random section points for pointwise checks.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// abs_det, norm, singular_value:<i> or torus_angle.
    #[arg(long, default_value = "abs_det")]
    pub statistic: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Histogram CSV path; defaults to `--out` with a `.csv` extension.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Flags that determine a run, echoed in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub action: ActionSpec,
    pub seed: u64,
    pub n: usize,
    pub chunks: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub pass: bool,
    pub result: Value,
}

pub fn parse_action(s: &str) -> Result<ActionSpec> {
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        fs::read_to_string(s)?
    };
    Ok(serde_json::from_str(&text)?)
}

fn parse_scalar(tok: &str, row: usize, col: usize) -> Result<Quaternion> {
    let err = |msg: String| Error::Parse { msg, row, col };
    let mut c = [0.0; 4];
    let bytes: Vec<char> = tok.chars().collect();
    let mut start = 0;
    let mut terms = Vec::new();
    for i in 1..=bytes.len() {
        let split = i == bytes.len() || ((bytes[i] == '+' || bytes[i] == '-') && !matches!(bytes[i - 1], 'e' | 'E'));
        if split {
            terms.push(bytes[start..i].iter().collect::<String>());
            start = i;
        }
    }
    for t in terms {
        let (body, unit) = match t.chars().last() {
            Some('i') => (&t[..t.len() - 1], 1),
            Some('j') => (&t[..t.len() - 1], 2),
            Some('k') => (&t[..t.len() - 1], 3),
            _ => (&t[..], 0),
        };
        let v = match body {
            "" | "+" => 1.0,
            "-" => -1.0,
            b => b.parse::<f64>().map_err(|_| err(format!("cannot read '{t}' in entry '{tok}'")))?,
        };
        c[unit] += v;
    }
    Ok(Quaternion::from_components(&c))
}

/// Reads a matrix over `field`. Row and column numbers in errors are
/// 1-based.
pub fn parse_matrix(text: &str, field: ScalarField) -> Result<MatK> {
    let rows: Vec<&str> = text
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(Error::Parse {
            msg: "empty matrix".into(),
            row: 1,
            col: 1,
        });
    }
    let mut entries = Vec::new();
    let mut width = None;
    for (r, line) in rows.iter().enumerate() {
        let toks: Vec<&str> = line.split([' ', ',', '\t']).filter(|t| !t.is_empty()).collect();
        if let Some(w) = width {
            if toks.len() != w {
                return Err(Error::Parse {
                    msg: format!("row has {} entries, expected {w}", toks.len()),
                    row: r + 1,
                    col: toks.len().min(w) + 1,
                });
            }
        }
        width = Some(toks.len());
        for (c, t) in toks.iter().enumerate() {
            let q = parse_scalar(t, r + 1, c + 1)?;
            let allowed = field.dim();
            let comps = q.components();
            if comps[allowed..].iter().any(|&x| x != 0.0) {
                return Err(Error::Parse {
                    msg: format!("entry '{t}' is not in {}", field.symbol()),
                    row: r + 1,
                    col: c + 1,
                });
            }
            entries.push(q);
        }
    }
    let w = width.unwrap_or(0);
    Ok(MatK::from_fn(field, rows.len(), w, |i, j| entries[i * w + j]))
}

fn read_text(s: &str) -> Result<String> {
    if Path::new(s).is_file() {
        Ok(fs::read_to_string(s)?)
    } else {
        Ok(s.to_string())
    }
}

fn mc_config(g: &GlobalArgs) -> McConfig {
    McConfig::new(g.seed, g.n).with_chunks(g.chunks).with_workers(g.workers)
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable report")
}

fn section_point(action: &ActionSpec, args: &DeltaArgs) -> Result<MatK> {
    if let Some(angles) = &args.angles {
        return match action {
            ActionSpec::Conjugation { .. } => torus_point(action.group(), angles),
            _ => Err(Error::Invalid("--angles applies to conjugation actions".into())),
        };
    }
    let Some(p) = &args.point else {
        return Ok(action.default_section_point());
    };
    let m = parse_matrix(&read_text(p)?, action.field())?;
    match *action {
        ActionSpec::DirectSum { k, .. } if m.shape() == (k, k) => Ok(action.embed_section(&m)),
        _ => {
            action.check_point(&m)?;
            Ok(m)
        }
    }
}

fn cmd_delta(action: &ActionSpec, tol: Tolerances, args: &DeltaArgs) -> Result<(bool, Value)> {
    let s = section_point(action, args)?;
    let d = orbit_map_differential(action, &s)?;
    let (de, dd, ad) = (d.delta_e(), d.delta_d(), d.abs_det());
    let closed = match *action {
        ActionSpec::DirectSum { field, n, k } if k >= 2 => {
            Some(delta_e_closed_form(field, n, k, &action.section_coordinate(&s))?)
        }
        _ => None,
    };
    let rel = |a: f64, b: f64| (a - b).abs() / (tol.abs + a.abs().max(b.abs()));
    let agreement = closed.map(|c| rel(de, c));
    let factorization = rel(ad, dd * de);
    let off = d.off_block_residual() / (1.0 + d.max_abs());
    let mut checks = vec![
        Check::at_most("factorization_rel", factorization, tol.rel),
        Check::at_most("off_block_residual", off, tol.abs),
    ];
    if let Some(a) = agreement {
        checks.push(Check::at_most("closed_form_agreement_rel", a, tol.rel));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok((
        pass,
        json!({
            "point": s.realify(),
            "regularity": d.regularity,
            "delta_e_generic": de,
            "delta_e_closed_form": closed,
            "delta_d": dd,
            "abs_det": ad,
            "checks": checks,
        }),
    ))
}

fn cmd_integrate(action: &ActionSpec, cfg: &McConfig, args: &IntegrateArgs) -> Result<(bool, Value)> {
    let f: TestFunction = serde_json::from_str(&read_text(&args.function)?)?;
    f.validate(action)?;
    let method: WeightMethod = args.weight.into();
    if args.mode != Mode::Direct && !f.is_invariant() {
        return Err(Error::ContractViolation(format!(
            "{} is not invariant; use --mode direct",
            f.name()
        )));
    }
    let direct = if args.mode != Mode::Reduced {
        Some(integrate_direct(action, &f, &cfg.derive(1))?)
    } else {
        None
    };
    if args.mode == Mode::Direct {
        let d = direct.expect("direct mode");
        let pass = d.mean.is_finite();
        return Ok((pass, json!({ "function": f.name(), "invariant": f.is_invariant(), "direct": d })));
    }
    let (vol_gn, source, calibration) = match (args.vol_gn, action) {
        (Some(v), _) => (Measured::exact(v), "given", Value::Null),
        (None, ActionSpec::Conjugation { .. }) => {
            let c = vol_gn_corollary(action, &cfg.derive(2))?;
            (c.vol_gn, "corollary", to_value(&c))
        }
        (None, ActionSpec::DirectSum { .. }) => {
            // calibrated on integrands other than f
            let fs = [
                TestFunction::GaussianTimesSqNorm { sigma: 0.8 },
                TestFunction::GaussianTimesAbsDet { sigma: 1.0 },
            ];
            let c = calibrate_vol_gn(action, &fs, &cfg.derive(2), method)?;
            (c.vol_gn.measured(), "calibrated", to_value(&c))
        }
    };
    let reduced = integrate_reduced(action, &f, vol_gn, &cfg.derive(3), method)?;
    let (sigma, pass) = match &direct {
        Some(d) => {
            let s = d.measured().sigma_distance(reduced.measured());
            (Some(s), s <= 3.0)
        }
        None => (None, reduced.mean.is_finite()),
    };
    Ok((
        pass,
        json!({
            "function": f.name(),
            "invariant": f.is_invariant(),
            "direct": direct,
            "reduced": reduced,
            "vol_gn": vol_gn,
            "vol_gn_source": source,
            "calibration": calibration,
            "sigma_distance": sigma,
        }),
    ))
}

/// Structural suite; `corrupt` tilts the algebra split first.
pub fn verify_suite(action: &ActionSpec, cfg: &McConfig, tol: Tolerances, corrupt: Option<f64>, points: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut split = algebra_split(action);
    if let Some(eps) = corrupt {
        split = split.corrupted(eps);
    }
    let r = split.verify(&mut rng, 10);
    let mut checks = vec![
        Check::at_most("split_orthogonality", r.gram, tol.rel),
        Check::at_most("split_dimension_defect", r.dim_defect.unsigned_abs() as f64, 0.0),
        Check::at_most("bracket_n_m_in_m", r.bracket, tol.rel),
        Check::at_most("adjoint_n_preserves_m", r.adjoint, tol.rel),
        Check::at_most(
            "weyl_part_dimension",
            (split.n.len() as f64 - action.weyl_dim() as f64).abs(),
            0.0,
        ),
        Check::at_most(
            "m_part_dimension",
            (split.m.len() as f64 - (action.group().algebra_dim() - action.isotropy_dim() - action.weyl_dim()) as f64)
                .abs(),
            0.0,
        ),
    ];

    let s0 = action.default_section_point();
    let sc = section_checks(action, &s0)?;
    checks.push(Check::at_most("orbit_normals_in_section", sc.normal_in_section, tol.rel));
    checks.push(Check::at_most("m_orthogonal_to_section", sc.m_perp_section, tol.rel));
    checks.push(Check::at_most("isotropy_is_h", sc.isotropy, tol.rel));

    let mut fact: f64 = 0.0;
    let mut off: f64 = 0.0;
    let mut closed: f64 = 0.0;
    let mut w_inv: f64 = 0.0;
    let mut polar_dd: f64 = 0.0;
    let mut tested = 0;
    while tested < points {
        let s = action.random_section_point(&mut rng);
        if classify_point(action, &s) != RegularityClass::Regular {
            continue;
        }
        tested += 1;
        let d = orbit_map_differential(action, &s)?;
        let (de, dd, ad) = (d.delta_e(), d.delta_d(), d.abs_det());
        fact = fact.max((ad - dd * de).abs() / ad);
        off = off.max(d.off_block_residual() / (1.0 + d.max_abs()));
        if let ActionSpec::DirectSum { field, n, k } = *action {
            if k >= 2 {
                let c = delta_e_closed_form(field, n, k, &action.section_coordinate(&s))?;
                closed = closed.max((de - c).abs() / c);
            }
        }
        if action.is_polar() {
            polar_dd = polar_dd.max((dd - 1.0).abs());
        }
        let w = sample_weyl(action, &mut rng);
        let ws = action.act(&w.matrix, &s);
        let dw = orbit_map_differential(action, &ws)?.delta_e();
        w_inv = w_inv.max((dw - de).abs() / de);
    }
    checks.push(Check::at_most("factorization_rel", fact, tol.rel));
    checks.push(Check::at_most("off_block_residual", off, tol.abs));
    if matches!(action, ActionSpec::DirectSum { k, .. } if *k >= 2) {
        checks.push(Check::at_most("closed_form_agreement_rel", closed, tol.rel));
    }
    checks.push(Check::at_most("w_invariance_rel", w_inv, 1e-9));
    if action.is_polar() {
        checks.push(Check::at_most("polar_delta_d_is_one", polar_dd, tol.rel));
    }

    let singular = match *action {
        ActionSpec::DirectSum { field, k, .. } => {
            let mut b = MatK::gaussian(field, k, k, &mut rng);
            for j in 0..k {
                b[(k - 1, j)] = Quaternion::ZERO;
            }
            action.embed_section(&b)
        }
        ActionSpec::Conjugation { n, .. } => MatK::identity(action.field(), n),
    };
    let ds = orbit_map_differential(action, &singular)?.delta_e();
    checks.push(Check::at_most("singular_point_weight", ds, 0.0));
    Ok(checks)
}

fn cmd_verify(action: &ActionSpec, cfg: &McConfig, tol: Tolerances, args: &VerifyArgs) -> Result<(bool, Value)> {
    let checks = verify_suite(action, cfg, tol, args.corrupt_metric, args.points)?;
    let pass = checks.iter().all(|c| c.pass);
    Ok((
        pass,
        json!({
            "polar": action.is_polar(),
            "copolarity": action.copolarity(),
            "corrupt_metric": args.corrupt_metric,
            "checks": checks,
        }),
    ))
}

pub fn parse_statistic(s: &str) -> Result<Statistic> {
    match s {
        "abs_det" => Ok(Statistic::AbsDet),
        "norm" => Ok(Statistic::Norm),
        "torus_angle" => Ok(Statistic::TorusAngle),
        other => match other.strip_prefix("singular_value:") {
            Some(i) => i
                .parse()
                .map(|index| Statistic::SingularValue { index })
                .map_err(|_| Error::Invalid(format!("bad singular value index in '{other}'"))),
            None => Err(Error::Invalid(format!("unknown statistic '{other}'"))),
        },
    }
}

fn cmd_ensemble(action: &ActionSpec, cfg: &McConfig, g: &GlobalArgs, args: &EnsembleArgs) -> Result<(bool, Value)> {
    let density = match action {
        ActionSpec::DirectSum { .. } => Density::Gaussian { sigma: args.sigma },
        ActionSpec::Conjugation { .. } => Density::Haar,
    };
    let spec = EnsembleSpec {
        action: *action,
        density,
        statistic: parse_statistic(&args.statistic)?,
    };
    let c = compare_densities(&spec, cfg, args.bins)?;
    let csv_path = args.csv.clone().or_else(|| g.out.as_ref().map(|o| o.with_extension("csv")));
    if let Some(p) = &csv_path {
        fs::write(p, c.to_csv())?;
    }
    let pass = c.passes(args.alpha);
    let mut v = to_value(&c);
    v["alpha"] = json!(args.alpha);
    Ok((pass, v))
}

fn cmd_volumes(action: &ActionSpec, cfg: &McConfig) -> Result<(bool, Value)> {
    let params = ChartParams::default();
    let gh = vol_gh_estimate(action, &cfg.derive(1), &params)?;
    let table = volume_table(action, &cfg.derive(2), &params)?;
    let ratio = volume_ratio_check(action, &action.default_section_point(), &cfg.derive(3), &params)?;
    let corollary = match action {
        ActionSpec::Conjugation { .. } => Some(vol_gn_corollary(action, &cfg.derive(4))?),
        _ => None,
    };
    let pass = gh.sigma_distance <= 3.0 && ratio.sigma_distance <= 3.0 && gh.covers && table.covers;
    Ok((
        pass,
        json!({
            "vol_gh_two_points": gh,
            "table": table,
            "volume_ratio": ratio,
            "corollary": corollary,
            "chart": params,
        }),
    ))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Delta(_) => "delta",
        Command::Integrate(_) => "integrate",
        Command::Verify(_) => "verify",
        Command::Ensemble(_) => "ensemble",
        Command::Volumes => "volumes",
    }
}

/// Runs a parsed command and returns the report.
pub fn execute(cli: &Cli) -> Result<Report> {
    let g = &cli.global;
    let action = parse_action(&g.action)?;
    let cfg = mc_config(g);
    let tol = Tolerances {
        abs: g.tol_abs,
        rel: g.tol_rel,
    };
    let (pass, result) = match &cli.command {
        Command::Delta(a) => cmd_delta(&action, tol, a)?,
        Command::Integrate(a) => cmd_integrate(&action, &cfg, a)?,
        Command::Verify(a) => cmd_verify(&action, &cfg, tol, a)?,
        Command::Ensemble(a) => cmd_ensemble(&action, &cfg, g, a)?,
        Command::Volumes => cmd_volumes(&action, &cfg)?,
    };
    Ok(Report {
        config: RunConfig {
            command: command_name(&cli.command).into(),
            action,
            seed: g.seed,
            n: g.n,
            chunks: g.chunks,
            tolerances: tol,
        },
        pass,
        result,
    })
}

pub fn render(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("serializable report");
    s.push('\n');
    s
}

/// Parses `args`, runs, writes the report, and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let text = render(&report);
    match &cli.global.out {
        Some(p) => {
            if let Err(e) = fs::write(p, &text) {
                eprintln!("error: {}", Error::from(e));
                return 2;
            }
        }
        None => print!("{text}"),
    }
    if report.pass {
        0
    } else {
        1
    }
}

/// `McEstimate` of a report field, for tests and callers reading reports.
pub fn estimate_at(report: &Report, key: &str) -> Option<McEstimate> {
    serde_json::from_value(report.result.get(key)?.clone()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        let mut v = vec!["weylsec"];
        v.extend_from_slice(args);
        Cli::try_parse_from(v).unwrap()
    }

    #[test]
    fn matrix_parsing() {
        let m = parse_matrix("1 2; 3 4", ScalarField::Real).unwrap();
        assert_eq!(m, MatK::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let q = parse_matrix("1+2i-3j+k, -j\n2.5e-1 i", ScalarField::Quaternion).unwrap();
        assert_eq!(q[(0, 0)], Quaternion::new(1.0, 2.0, -3.0, 1.0));
        assert_eq!(q[(0, 1)], Quaternion::new(0.0, 0.0, -1.0, 0.0));
        assert_eq!(q[(1, 0)], Quaternion::real(0.25));
        assert_eq!(q[(1, 1)], Quaternion::I);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_matrix("1 2; 3 x4", ScalarField::Real) {
            Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (2, 2)),
            other => panic!("{other:?}"),
        }
        match parse_matrix("1 2; 3", ScalarField::Real) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        match parse_matrix("1 2i", ScalarField::Real) {
            Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (1, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn delta_at_identity() {
        let r = execute(&cli(&["delta", "--point", "1 0; 0 1"])).unwrap();
        assert!(r.pass);
        assert!((r.result["delta_e_generic"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((r.result["delta_e_closed_form"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn delta_at_singular_point() {
        let r = execute(&cli(&["delta", "--point", "1 2; 2 4"])).unwrap();
        assert_eq!(r.result["regularity"], "Singular");
        assert_eq!(r.result["delta_e_generic"].as_f64().unwrap(), 0.0);
        assert_eq!(r.result["delta_e_closed_form"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn verify_passes_and_negative_control_fails() {
        assert!(execute(&cli(&["verify"])).unwrap().pass);
        let bad = execute(&cli(&["verify", "--corrupt-metric", "0.1"])).unwrap();
        assert!(!bad.pass);
        let failing: Vec<&str> = bad.result["checks"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| c["pass"] == false)
            .map(|c| c["name"].as_str().unwrap())
            .collect();
        assert!(failing.contains(&"split_orthogonality"), "{failing:?}");
        let su2 = execute(&cli(&["--action", r#"{"kind":"conjugation","family":"SU","n":2}"#, "verify"])).unwrap();
        assert!(su2.pass, "{}", render(&su2));
    }

    #[test]
    fn non_invariant_reduced_is_an_error() {
        let c = cli(&["integrate", "--function", r#"{"family":"coordinate","row":0,"col":0}"#]);
        assert!(matches!(execute(&c), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["weylsec", "delta", "--point", "1 0; 0 1"].map(String::from)), 0);
        assert_eq!(run(["weylsec", "verify", "--corrupt-metric", "0.1"].map(String::from)), 1);
        assert_eq!(run(["weylsec", "delta", "--point", "1 0; 0"].map(String::from)), 2);
        assert_eq!(run(["weylsec", "--action", "{bad", "delta"].map(String::from)), 2);
    }

    #[test]
    fn statistic_names() {
        assert_eq!(parse_statistic("singular_value:1").unwrap(), Statistic::SingularValue { index: 1 });
        assert!(parse_statistic("nope").is_err());
    }
}
