//! Command-line front end: problem files, flags, result JSON and exit codes.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bezout::coprime_check;
use crate::converter::{convert, AlphaIni, ConversionConfig, ConvertedController};
use crate::error::Error;
use crate::numeric::{poly_roots, schur_check};
use crate::poly::{Polynomial, TransferFunction};
use crate::sim::{max_integer_deviation, realize_controller, realize_tf, simulate_loop};
use crate::stabilizer::{run_algorithm1, GammaIni, StabilizationConfig, StabilizationResult};
use crate::target::{TargetConfig, TargetMode};
use crate::tolerance::Tolerances;
use crate::verify::{certify_stabilization, closed_loop_poly, reference_to_output, tf_mismatch, ControllerPolys};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SYNTHESIS: i32 = 3;
pub const EXIT_CERTIFICATE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Synthesis(_) | Self::Io(_) => EXIT_SYNTHESIS,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition(_)
            | Error::NotCoprime { .. }
            | Error::Improper { .. }
            | Error::NotMonic { .. }
            | Error::Dimension(_) => Self::Validation(e.to_string()),
            other => Self::Synthesis(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    #[default]
    Descending,
    Ascending,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantSpec {
    den: Vec<f64>,
    num: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerSpec {
    den: Vec<f64>,
    #[serde(default)]
    num_y: Vec<f64>,
    #[serde(default)]
    num_r: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionSpec {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSpec {
    plant: PlantSpec,
    #[serde(default)]
    controller: Option<ControllerSpec>,
    /// `(α, β, γ)` to certify with `analyze`.
    #[serde(default)]
    solution: Option<SolutionSpec>,
    #[serde(default)]
    ordering: Ordering,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub alpha: Polynomial,
    pub beta: Polynomial,
    pub gamma: Polynomial,
}

/// A validated problem file.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub dp: Polynomial,
    pub np: Polynomial,
    pub controller: Option<ControllerPolys>,
    pub solution: Option<Solution>,
}

impl Problem {
    pub fn n(&self) -> usize {
        self.dp.degree().unwrap_or(0)
    }
}

fn to_poly(v: &[f64], ordering: Ordering, field: &str) -> Result<Polynomial, CliError> {
    if let Some(bad) = v.iter().find(|c| !c.is_finite()) {
        return Err(CliError::Validation(format!("{field}: non-finite coefficient {bad}")));
    }
    Ok(match ordering {
        Ordering::Descending => Polynomial::from_descending(v),
        Ordering::Ascending => Polynomial::from_ascending(v.to_vec()),
    })
}

/// Closest pair of roots of `a` and `b`, for error messages.
fn shared_root_evidence(a: &Polynomial, b: &Polynomial) -> String {
    let (Ok(ra), Ok(rb)) = (poly_roots_or_empty(a), poly_roots_or_empty(b)) else {
        return "roots unavailable".into();
    };
    let mut best: Option<(f64, Complex64, Complex64)> = None;
    for x in &ra {
        for y in &rb {
            let d = (x - y).norm();
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, *x, *y));
            }
        }
    }
    match best {
        Some((d, x, y)) => format!("closest roots {x:.6} and {y:.6} differ by {d:.3e}"),
        None => "no roots to compare".into(),
    }
}

fn poly_roots_or_empty(p: &Polynomial) -> crate::Result<Vec<Complex64>> {
    if p.degree().unwrap_or(0) == 0 {
        return Ok(vec![]);
    }
    let l = p.low_order_zeros(0.0);
    let mut roots = vec![Complex64::new(0.0, 0.0); l];
    if p.degree().unwrap_or(0) > l {
        roots.extend(poly_roots(&p.unshift(l))?);
    }
    Ok(roots)
}

fn require_coprime(a: &Polynomial, b: &Polynomial, what: &str, tol: &Tolerances) -> Result<(), CliError> {
    let c = coprime_check(a, b, tol.coprime);
    if c.coprime {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{what} are not coprime (Sylvester quality {:.3e}); {}",
            c.quality,
            shared_root_evidence(a, b)
        )))
    }
}

pub fn parse_problem_str(text: &str, tol: &Tolerances) -> Result<Problem, CliError> {
    let spec: ProblemSpec =
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("schema violation: {e}")))?;
    let ord = spec.ordering;
    let dp = to_poly(&spec.plant.den, ord, "plant.den")?;
    let np = to_poly(&spec.plant.num, ord, "plant.num")?;
    if dp.degree().is_none_or(|d| d == 0) {
        return Err(CliError::Validation("plant.den: degree must be at least 1".into()));
    }
    if np.is_zero() {
        return Err(CliError::Validation("plant.num: zero polynomial".into()));
    }
    if np.degree_or_neg() > dp.degree_or_neg() {
        return Err(CliError::Validation(format!(
            "plant is improper: deg num = {} > deg den = {}",
            np.degree_or_neg(),
            dp.degree_or_neg()
        )));
    }
    require_coprime(&dp, &np, "plant.den and plant.num", tol)?;

    let controller = match spec.controller {
        None => None,
        Some(c) => {
            let den = to_poly(&c.den, ord, "controller.den")?;
            let num_y = to_poly(&c.num_y, ord, "controller.num_y")?;
            let num_r = to_poly(&c.num_r, ord, "controller.num_r")?;
            if den.is_zero() {
                return Err(CliError::Validation("controller.den: zero polynomial".into()));
            }
            for (name, p) in [("num_y", &num_y), ("num_r", &num_r)] {
                if p.degree_or_neg() > den.degree_or_neg() {
                    return Err(CliError::Validation(format!(
                        "controller is improper: deg {name} = {} > deg den = {}",
                        p.degree_or_neg(),
                        den.degree_or_neg()
                    )));
                }
            }
            Some(ControllerPolys { den, num_y, num_r })
        }
    };
    let solution = match spec.solution {
        None => None,
        Some(s) => Some(Solution {
            alpha: to_poly(&s.alpha, ord, "solution.alpha")?,
            beta: to_poly(&s.beta, ord, "solution.beta")?,
            gamma: to_poly(&s.gamma, ord, "solution.gamma")?,
        }),
    };
    Ok(Problem {
        dp,
        np,
        controller,
        solution,
    })
}

pub fn parse_problem_file(path: &Path, tol: &Tolerances) -> Result<Problem, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse_problem_str(&text, tol)
}

/// Parse `"-0.26, 0.37, 0.68±0.65i, 0.92+0.2i, 0.92-0.2i"`; `a±bi` yields both
/// conjugates.
pub fn parse_roots(s: &str) -> Result<Vec<Complex64>, CliError> {
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let bad = || CliError::Validation(format!("cannot parse root '{tok}'"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        if let Some((re, im)) = tok.split_once('±').or_else(|| tok.split_once("+-")) {
            let im = im.trim().strip_suffix('i').ok_or_else(bad)?;
            let (re, im) = (num(re)?, num(im)?);
            out.push(Complex64::new(re, im));
            out.push(Complex64::new(re, -im));
            continue;
        }
        let Some(body) = tok.strip_suffix('i') else {
            out.push(Complex64::new(num(tok)?, 0.0));
            continue;
        };
        // split at the last sign that is not leading and not an exponent sign
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
        match split {
            Some(i) => out.push(Complex64::new(num(&body[..i])?, num(&body[i..])?)),
            None => out.push(Complex64::new(0.0, num(body)?)),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Round,
    Search,
    Fallback,
    Auto,
}

impl From<TargetArg> for TargetMode {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Round => TargetMode::Round,
            TargetArg::Search => TargetMode::Search,
            TargetArg::Fallback => TargetMode::Fallback,
            TargetArg::Auto => TargetMode::Auto,
        }
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct TolArgs {
    #[arg(long = "tol-monic")]
    monic: Option<f64>,
    #[arg(long = "tol-residual")]
    residual: Option<f64>,
    #[arg(long = "tol-trim")]
    trim: Option<f64>,
    #[arg(long = "tol-imag")]
    imag: Option<f64>,
    #[arg(long = "tol-conj")]
    conj: Option<f64>,
    #[arg(long = "tol-root")]
    root: Option<f64>,
    #[arg(long = "tol-margin")]
    margin: Option<f64>,
    #[arg(long = "tol-coprime")]
    coprime: Option<f64>,
    #[arg(long = "tol-active")]
    active: Option<f64>,
    #[arg(long = "tol-side")]
    side: Option<f64>,
    #[arg(long = "tol-int")]
    int: Option<f64>,
    #[arg(long = "tol-certificate")]
    certificate: Option<f64>,
    #[arg(long = "tol-tf")]
    tf: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Result<Tolerances, CliError> {
        let mut t = Tolerances::default();
        let fields: [(&str, Option<f64>, &mut f64); 13] = [
            ("monic", self.monic, &mut t.monic),
            ("residual", self.residual, &mut t.residual),
            ("trim", self.trim, &mut t.trim),
            ("imag", self.imag, &mut t.imag),
            ("conj", self.conj, &mut t.conj),
            ("root", self.root, &mut t.root),
            ("margin", self.margin, &mut t.margin),
            ("coprime", self.coprime, &mut t.coprime),
            ("active", self.active, &mut t.active),
            ("side", self.side, &mut t.side),
            ("int", self.int, &mut t.int),
            ("certificate", self.certificate, &mut t.certificate),
            ("tf", self.tf, &mut t.tf),
        ];
        for (name, value, slot) in fields {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CliError::Validation(format!(
                        "--tol-{name} must be a nonnegative number"
                    )));
                }
                *slot = v;
            }
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, Args)]
pub struct CommonArgs {
    /// Problem file (JSON).
    pub input: PathBuf,
    /// Write the result JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recorded in the output; the computation is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Re-certify the outputs independently before writing.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0.99)]
    pub mu: f64,
    #[arg(long, value_enum, default_value_t = TargetArg::Auto)]
    pub target: TargetArg,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long = "max-radius", default_value_t = 8)]
    pub max_radius: u32,
    /// Try the all-zero target first.
    #[arg(long = "prefer-zero")]
    pub prefer_zero: bool,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl SynthArgs {
    fn target(&self) -> TargetConfig {
        TargetConfig {
            mode: self.target.into(),
            max_radius: self.max_radius,
            prefer_zero: self.prefer_zero,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(CliError::Validation(format!("--mu {} is outside (0, 1)", self.mu)));
        }
        if self.max_iter == Some(0) {
            return Err(CliError::Validation("--max-iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Args)]
pub struct StabilizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Roots of the initial closed-loop polynomial, e.g. "-0.26,0.37,0.68±0.65i".
    #[arg(long = "gamma-ini-roots", allow_hyphen_values = true)]
    pub gamma_ini_roots: Option<String>,
}

#[derive(Clone, Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Roots of the initial α.
    #[arg(long = "alpha-ini-roots", allow_hyphen_values = true)]
    pub alpha_ini_roots: Option<String>,
}

#[derive(Clone, Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 3000)]
    pub steps: usize,
    /// Constant reference value.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub reference: f64,
    /// Write the trajectory as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Synthesize a stabilizing controller with an integer monic denominator.
    Stabilize(StabilizeArgs),
    /// Convert the file's controller to an integer monic denominator.
    Convert(ConvertArgs),
    /// Certify a given solution or analyze the file's closed loop.
    Analyze(AnalyzeArgs),
    /// Simulate the file's closed loop under a constant reference.
    Simulate(SimulateArgs),
}

#[derive(Clone, Debug, Parser)]
#[command(name = "intctrl", version, about = "Integer-coefficient controller synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Result JSON plus exit status.
pub struct Report {
    pub json: Value,
    pub pass: bool,
}

impl Report {
    pub fn to_string_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
        s.push('\n');
        s
    }
}

fn descending(p: &Polynomial) -> Vec<f64> {
    p.to_descending()
}

fn stabilization_config(args: &StabilizeArgs, tol: Tolerances) -> Result<StabilizationConfig, CliError> {
    args.synth.validate()?;
    let gamma_ini = match &args.gamma_ini_roots {
        Some(s) => GammaIni::Roots(parse_roots(s)?),
        None => GammaIni::Default,
    };
    Ok(StabilizationConfig {
        gamma_ini,
        mu: args.synth.mu,
        target: args.synth.target(),
        max_iterations: args.synth.max_iter,
        tolerances: tol,
        verify_invariants: args.common.verify,
    })
}

fn conversion_config(args: &ConvertArgs, tol: Tolerances) -> Result<ConversionConfig, CliError> {
    args.synth.validate()?;
    let alpha0 = match &args.alpha_ini_roots {
        Some(s) => AlphaIni::Roots(parse_roots(s)?),
        None => AlphaIni::Default,
    };
    Ok(ConversionConfig {
        alpha0,
        mu: args.synth.mu,
        target: args.synth.target(),
        max_iterations: args.synth.max_iter,
        tolerances: tol,
        verify_invariants: args.common.verify,
    })
}

/// Independent re-check: the closed loop with `(α, −β)` equals γ and is Schur.
fn recheck_stabilization(res: &StabilizationResult, tol: &Tolerances) -> Value {
    let (dc, nc) = res.controller();
    let cl = closed_loop_poly(&res.plant.dp, &res.plant.np_full, &dc, &nc);
    let diff = (&cl - &res.gamma).max_abs() / cl.max_abs().max(res.gamma.max_abs());
    let radius = schur_check(&cl, tol.margin)
        .map(|r| r.spectral_radius)
        .unwrap_or(f64::NAN);
    let pass = diff <= tol.certificate && radius < 1.0 - tol.margin && res.alpha.integer_deviation() <= tol.int;
    json!({ "pass": pass, "closed_loop_mismatch": diff, "closed_loop_radius": radius })
}

pub fn stabilize_report(
    problem: &Problem,
    cfg: &StabilizationConfig,
    seed: Option<u64>,
    verify: bool,
) -> Result<Report, CliError> {
    let res = run_algorithm1(&problem.dp, &problem.np, cfg)?;
    let (dc, nc) = res.controller();
    let mut pass = res.certificate.pass;
    let mut json = json!({
        "command": "stabilize",
        "seed": seed,
        "plant": { "den": descending(&res.plant.dp), "num": descending(&res.plant.np_full) },
        "controller": {
            "D_c": descending(&dc),
            "N_c": descending(&nc),
            "D_c_integer_part": descending(&res.alpha_core()),
            "D_c_shift": res.shift + res.plant.l,
        },
        "alpha": descending(&res.alpha),
        "beta": descending(&res.beta),
        "gamma": descending(&res.gamma),
        "iterations": res.trace.iterations(),
        "division_residual": res.division_residual,
        "trace": res.trace,
        "certificate": res.certificate,
        "warnings": res.certificate.warnings,
    });
    if verify {
        let re = recheck_stabilization(&res, &cfg.tolerances);
        pass &= re["pass"].as_bool().unwrap_or(false);
        json["verification"] = re;
    }
    Ok(Report { json, pass })
}

fn controller_json(c: &ControllerPolys) -> Value {
    json!({ "den": descending(&c.den), "num_y": descending(&c.num_y), "num_r": descending(&c.num_r) })
}

fn recheck_conversion(out: &ConvertedController, tol: &Tolerances) -> Value {
    let t_pre = reference_to_output(&out.plant.dp, &out.plant.np_full, &out.pre.polys);
    let t_new = reference_to_output(&out.plant.dp, &out.plant.np_full, &out.controller);
    let mismatch = tf_mismatch(&t_pre, &t_new);
    let radius = schur_check(&t_new.den, tol.margin)
        .map(|r| r.spectral_radius)
        .unwrap_or(f64::NAN);
    let realization = realize_controller(&out.controller).map(|ss| max_integer_deviation(&ss.a));
    let a_dev = realization.unwrap_or(f64::NAN);
    let pass = mismatch <= tol.tf && radius < 1.0 - tol.margin && a_dev <= tol.int;
    json!({
        "pass": pass,
        "tf_mismatch": mismatch,
        "closed_loop_radius": radius,
        "state_matrix_integer_deviation": a_dev,
    })
}

pub fn convert_report(
    problem: &Problem,
    cfg: &ConversionConfig,
    seed: Option<u64>,
    verify: bool,
) -> Result<Report, CliError> {
    let pre = problem
        .controller
        .as_ref()
        .ok_or_else(|| CliError::Validation("convert needs a \"controller\" object".into()))?;
    require_coprime(&pre.den, &problem.np, "controller.den and plant.num", &cfg.tolerances)?;
    let out = convert(&problem.dp, &problem.np, pre, cfg)?;
    let mut pass = out.certificate.pass;
    let sol = &out.solution;
    let mut json = json!({
        "command": "convert",
        "seed": seed,
        "plant": { "den": descending(&out.plant.dp), "num": descending(&out.plant.np_full) },
        "pre_controller": controller_json(&out.pre.polys),
        "controller": controller_json(&out.controller),
        "D_c_integer_part": descending(&crate::poly::CoeffVector::from_integers(&sol.trace.xstar).to_monic_polynomial()),
        "D_c_shift": sol.shift + sol.lift,
        "alpha": descending(&sol.alpha),
        "beta": descending(&sol.beta),
        "gamma": descending(&sol.gamma),
        "iterations": sol.trace.iterations(),
        "division_residual": sol.division_residual,
        "trace": sol.trace,
        "certificate": out.certificate,
        "warnings": out.certificate.warnings,
    });
    if verify {
        let re = recheck_conversion(&out, &cfg.tolerances);
        pass &= re["pass"].as_bool().unwrap_or(false);
        json["verification"] = re;
    }
    Ok(Report { json, pass })
}

pub fn analyze_report(problem: &Problem, tol: &Tolerances, seed: Option<u64>) -> Result<Report, CliError> {
    let (dp, np) = (&problem.dp, &problem.np);
    if let Some(s) = &problem.solution {
        let dpm = dp.monic();
        let npm = np.scale(1.0 / dp.leading());
        let cert = certify_stabilization(&dpm, &npm, &s.alpha, &s.beta, &s.gamma, tol);
        let pass = cert.pass;
        return Ok(Report {
            json: json!({ "command": "analyze", "seed": seed, "mode": "solution", "certificate": cert }),
            pass,
        });
    }
    let c = problem
        .controller
        .as_ref()
        .ok_or_else(|| CliError::Validation("analyze needs a \"solution\" or a \"controller\" object".into()))?;
    let t = reference_to_output(dp, np, c);
    let rep = schur_check(&t.den, tol.margin)?;
    let dc_gain = t.eval(Complex64::new(1.0, 0.0)).re;
    let lead = c.den.leading();
    let integer = (lead - 1.0).abs() <= tol.monic && c.den.integer_deviation() <= tol.int;
    Ok(Report {
        json: json!({
            "command": "analyze",
            "seed": seed,
            "mode": "closed_loop",
            "closed_loop": descending(&t.den),
            "spectral_radius": rep.spectral_radius,
            "stable": rep.is_schur,
            "dc_gain": dc_gain,
            "controller_denominator_integer_monic": integer,
        }),
        pass: rep.is_schur,
    })
}

pub fn simulate_report(problem: &Problem, args: &SimulateArgs) -> Result<(Report, crate::sim::Trajectory), CliError> {
    let c = problem
        .controller
        .as_ref()
        .ok_or_else(|| CliError::Validation("simulate needs a \"controller\" object".into()))?;
    if args.steps == 0 {
        return Err(CliError::Validation("--steps must be at least 1".into()));
    }
    let plant = realize_tf(&TransferFunction::new(problem.np.clone(), problem.dp.clone()))?;
    let ctrl = realize_controller(c)?;
    let r = vec![args.reference; args.steps];
    let traj = simulate_loop(&plant, &ctrl, &r, &vec![0.0; plant.states()], &vec![0.0; ctrl.states()])?;
    let last = traj.y.last().copied().unwrap_or(0.0);
    let pass = !traj.diverged();
    let json = json!({
        "command": "simulate",
        "seed": args.common.seed,
        "steps": traj.len(),
        "reference": args.reference,
        "diverged_at": traj.diverged_at,
        "final_y": last,
        "final_error": last - args.reference,
        "controller_states": ctrl.states(),
        "state_matrix_integer_deviation": max_integer_deviation(&ctrl.a),
    });
    Ok((Report { json, pass }, traj))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_trace_csv(path: &Path, trace: &Value) -> Result<(), CliError> {
    let mut s = String::from("k,distance,u_norm,hit\n");
    for rec in trace["records"].as_array().into_iter().flatten() {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{}\n",
            rec["k"],
            rec["distance"].as_f64().unwrap_or(f64::NAN),
            rec["u_norm"].as_f64().unwrap_or(f64::NAN),
            rec["hit"]
        ));
    }
    fs::write(path, s)?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let (common, report, csv) = match &cli.command {
        Command::Stabilize(a) => {
            let tol = a.common.tol.resolve()?;
            let problem = parse_problem_file(&a.common.input, &tol)?;
            let cfg = stabilization_config(a, tol)?;
            let r = stabilize_report(&problem, &cfg, a.common.seed, a.common.verify)?;
            (&a.common, r, a.synth.csv.clone())
        }
        Command::Convert(a) => {
            let tol = a.common.tol.resolve()?;
            let problem = parse_problem_file(&a.common.input, &tol)?;
            let cfg = conversion_config(a, tol)?;
            let r = convert_report(&problem, &cfg, a.common.seed, a.common.verify)?;
            (&a.common, r, a.synth.csv.clone())
        }
        Command::Analyze(a) => {
            let tol = a.common.tol.resolve()?;
            let problem = parse_problem_file(&a.common.input, &tol)?;
            (&a.common, analyze_report(&problem, &tol, a.common.seed)?, None)
        }
        Command::Simulate(a) => {
            let tol = a.common.tol.resolve()?;
            let problem = parse_problem_file(&a.common.input, &tol)?;
            let (r, traj) = simulate_report(&problem, a)?;
            if let Some(p) = &a.csv {
                traj.write_csv(fs::File::create(p)?)?;
            }
            write_out(a.common.out.as_deref(), &r.to_string_pretty())?;
            return Ok(if r.pass { EXIT_OK } else { EXIT_CERTIFICATE });
        }
    };
    if let Some(p) = csv {
        write_trace_csv(&p, &report.json["trace"])?;
    }
    write_out(common.out.as_deref(), &report.to_string_pretty())?;
    Ok(if report.pass { EXIT_OK } else { EXIT_CERTIFICATE })
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
