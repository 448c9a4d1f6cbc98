use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use symplab::acceptance::{self, tolerances, Mode};
use symplab::correspondence::{roundtrip_phi_psi, roundtrip_psi_phi, M1Element, M2Element, PhiConfig};
use symplab::flows::{energy_density, energy_grad1, energy_grad2, solve_flow_segment, FlowConfig};
use symplab::io::{csv_table, read_json, to_json_string, write_json, CylinderDocument};
use symplab::kazdan_warner::{
    check_pointwise_bounds, continuation_solve, energy_identity_residual, kw_residual, w22_estimates, KwProblem,
};
use symplab::loopspace::{check_laws, concatenate, iterate, iterate_same_grid, reparametrize, reverse};
use symplab::samples::{self, normalized_perturbed_critical, random_constrained_loop, BSpec};
use symplab::symplectization::Loop;
use symplab::Error;

/// Admission threshold for a cylinder map read from disk to count as a flow solution.
pub const ADMISSION_TOL: f64 = 1e-8;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input data; exit code 2.
    Invalid(String),
    /// A solver or check broke down; exit code 1.
    Numerical(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::MaxIterations { .. }
            | Error::NonFinite { .. }
            | Error::StepUnderflow { .. }
            | Error::ZeroPivot { .. }
            | Error::SingularBanded { .. }
            | Error::ConstraintViolated { .. }
            | Error::NegativeProfile { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

pub type CliResult = Result<bool, CliError>;

fn one_i64() -> i64 {
    1
}

fn one_f64() -> f64 {
    1.0
}

fn default_perturb() -> f64 {
    0.05
}

fn default_flow_half_width() -> f64 {
    5.0
}

fn default_flow_points() -> usize {
    401
}

fn default_circle() -> usize {
    64
}

fn default_flow_tol() -> f64 {
    symplab::flows::DEFAULT_FLOW_TOL
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
}

fn emit(value: &impl Serialize, report: Option<ReportFormat>, out: Option<&Path>) -> Result<(), CliError> {
    let text = to_json_string(value)?;
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| CliError::Numerical(format!("{}: {e}", path.display())))?;
    }
    if report.is_some() {
        print!("{text}");
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Numerical(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveKwArgs {
    /// JSON file with Gaussian bumps `{center, width, mass}`.
    #[arg(long)]
    pub b_spec: Option<PathBuf>,
    /// Inline bumps (configuration files only).
    #[arg(skip)]
    pub bumps: Option<BSpec>,
    /// Draw a random forcing with this L1 norm from the seed.
    #[arg(long)]
    pub random_l1: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
    #[arg(long, default_value_t = symplab::kazdan_warner::DEFAULT_TOL)]
    pub tol: f64,
    /// CSV with columns s, b, rho, residual.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub report: Option<ReportFormat>,
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

impl Default for SolveKwArgs {
    fn default() -> Self {
        SolveKwArgs {
            b_spec: None,
            bumps: None,
            random_l1: None,
            half_width: 20.0,
            points: 2001,
            tol: symplab::kazdan_warner::DEFAULT_TOL,
            out: None,
            report: None,
            report_out: None,
        }
    }
}

#[derive(Serialize)]
struct KwReport {
    b_l1: f64,
    kappa: f64,
    newton_iterations: usize,
    total_newton_iterations: usize,
    continuation_steps: usize,
    clamp_events: usize,
    final_residual_linf: f64,
    bounds: symplab::kazdan_warner::BoundsReport,
    energy_identity_residual: f64,
    w22: symplab::kazdan_warner::W22Report,
    passed: bool,
}

pub fn solve_kw(args: &SolveKwArgs, seed: u64) -> CliResult {
    let sources = [args.b_spec.is_some(), args.bumps.is_some(), args.random_l1.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(invalid("give exactly one of b_spec, bumps or random_l1"));
    }
    let spec = if let Some(path) = &args.b_spec {
        read_json::<BSpec>(path)?
    } else if let Some(b) = &args.bumps {
        b.clone()
    } else {
        let l1 = args.random_l1.unwrap_or_default();
        if !(l1.is_finite() && l1 > 0.0) {
            return Err(invalid("random_l1 must be positive"));
        }
        samples::random_forcing(&mut samples::rng(seed), l1)
    };
    spec.validate()?;
    let grid = symplab::grid::LineGrid::new(args.half_width, args.points)?;
    let b = spec.sample(grid);
    let problem = KwProblem::new(b.clone())?;
    let sol = continuation_solve(&problem, args.tol)?;
    let residual = kw_residual(&sol.rho, &problem)?;
    let bounds = check_pointwise_bounds(&sol, &problem);
    let w22 = w22_estimates(&sol, &problem)?;
    let passed = bounds.passed && w22.passed && sol.final_residual_linf <= args.tol;
    if let Some(out) = &args.out {
        let s = grid.points();
        write_text(out, &csv_table(&["s", "b", "rho", "residual"], &[&s, b.values(), sol.rho.values(), residual.values()])?)?;
    }
    let report = KwReport {
        b_l1: problem.b_l1(),
        kappa: problem.kappa(),
        newton_iterations: sol.newton_iterations,
        total_newton_iterations: sol.total_newton_iterations,
        continuation_steps: sol.continuation_steps,
        clamp_events: sol.clamp_events,
        final_residual_linf: sol.final_residual_linf,
        energy_identity_residual: energy_identity_residual(&sol, &problem)?,
        bounds,
        w22,
        passed,
    };
    emit(&report, args.report, args.report_out.as_deref())?;
    Ok(passed)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenFlowArgs {
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one_i64")]
    pub winding: i64,
    /// Boundary loops are the critical loop with `a = +-perturb sin(2 pi t)`.
    #[arg(long, default_value_t = 0.05)]
    #[serde(default = "default_perturb")]
    pub perturb: f64,
    #[arg(long, default_value_t = 5.0)]
    #[serde(default = "default_flow_half_width")]
    pub half_width: f64,
    #[arg(long, default_value_t = 401)]
    #[serde(default = "default_flow_points")]
    pub points: usize,
    #[arg(long, default_value_t = 64)]
    #[serde(default = "default_circle")]
    pub circle: usize,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one_f64")]
    pub epsilon: f64,
    #[arg(long, default_value_t = symplab::flows::DEFAULT_FLOW_TOL)]
    #[serde(default = "default_flow_tol")]
    pub tol: f64,
    /// Output directory for `cylinder.json`, `diagnostics.csv` and `report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct FlowReport {
    winding: i64,
    epsilon: f64,
    points: usize,
    circle: usize,
    half_width: f64,
    iterations: usize,
    residual_linf: f64,
    residual_history: Vec<f64>,
    normalized_boundary: bool,
    energy: f64,
    passed: bool,
}

pub fn gen_flow(args: &GenFlowArgs) -> CliResult {
    if args.winding == 0 {
        return Err(invalid("winding must be nonzero"));
    }
    let line = symplab::grid::LineGrid::new(args.half_width, args.points)?;
    let minus = normalized_perturbed_critical(args.circle, args.winding, args.perturb)?;
    let plus = normalized_perturbed_critical(args.circle, args.winding, -args.perturb)?;
    let cfg = FlowConfig {
        epsilon: args.epsilon,
        tol: args.tol,
        ..FlowConfig::default()
    };
    let sol = solve_flow_segment(&minus, &plus, line, &cfg)?;
    std::fs::create_dir_all(&args.out).map_err(|e| invalid(format!("{}: {e}", args.out.display())))?;
    let doc = CylinderDocument {
        field: sol.map.clone(),
        tau: Some(sol.tau.clone()),
        epsilon: Some(args.epsilon),
    };
    write_json(&args.out.join("cylinder.json"), &doc)?;
    let density = energy_density(&sol.map);
    let mean_h = sol.map.mean_hamiltonian();
    let s = line.points();
    write_text(
        &args.out.join("diagnostics.csv"),
        &csv_table(
            &["s", "tau", "mean_h", "energy_density"],
            &[&s, sol.tau.tau.values(), mean_h.values(), density.values()],
        )?,
    )?;
    let energy = if args.epsilon > 0.0 {
        energy_grad1(&sol.map, &sol.tau)?
    } else {
        energy_grad2(&sol.map)
    };
    let report = FlowReport {
        winding: args.winding,
        epsilon: args.epsilon,
        points: args.points,
        circle: args.circle,
        half_width: args.half_width,
        iterations: sol.iterations,
        residual_linf: sol.residual_linf,
        residual_history: sol.residual_history,
        normalized_boundary: sol.normalized_boundary,
        energy,
        passed: true,
    };
    write_json(&args.out.join("report.json"), &report)?;
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    PsiPhi,
    PhiPsi,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundtripArgs {
    /// Cylinder JSON as written by `gen-flow`.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub direction: Direction,
    #[arg(long, value_enum)]
    #[serde(default)]
    pub report: Option<ReportFormat>,
    /// Write the report JSON here as well.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Refinement {
    points: usize,
    circle: usize,
    h: f64,
    dt: f64,
    tol_rt: f64,
}

#[derive(Serialize)]
struct RoundtripReport<T> {
    direction: Direction,
    refinement: Refinement,
    tolerance: f64,
    result: T,
    passed: bool,
}

pub fn roundtrip(args: &RoundtripArgs) -> CliResult {
    let doc: CylinderDocument = read_json(&args.input)?;
    let field = doc.field;
    let cfg = PhiConfig::default();
    let h = field.line().spacing();
    let dt = 1.0 / field.m() as f64;
    let refinement = Refinement {
        points: field.n(),
        circle: field.m(),
        h,
        dt,
        tol_rt: tolerances::C_RT * (h * h + dt * dt),
    };
    match args.direction {
        Direction::PsiPhi => {
            let e = M2Element::certify(field, cfg.scheme);
            let rep = roundtrip_psi_phi(&e, &cfg)?;
            let tolerance = tolerances::PSI_PHI;
            let passed = rep.distance <= tolerance && rep.exp_chi_minus_one_linf <= tolerance;
            emit(
                &RoundtripReport { direction: args.direction, refinement, tolerance, result: rep, passed },
                args.report,
                args.out.as_deref(),
            )?;
            Ok(passed)
        }
        Direction::PhiPsi => {
            let tau = doc.tau.ok_or_else(|| invalid("phi-psi needs a multiplier path in the input"))?;
            let e = M1Element::certify(field, tau, cfg.scheme)?;
            let rep = roundtrip_phi_psi(&e, &cfg)?;
            let tolerance = refinement.tol_rt;
            let passed = rep.input_certificate <= ADMISSION_TOL
                && rep.field_distance <= tolerance
                && rep.multiplier_distance <= tolerance
                && rep.chi_linf <= tolerance
                && rep.kw2_residual_linf <= tolerances::KW2_FACTOR * tolerance;
            emit(
                &RoundtripReport { direction: args.direction, refinement, tolerance, result: rep, passed },
                args.report,
                args.out.as_deref(),
            )?;
            Ok(passed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopOp {
    Reparam,
    Reverse,
    Iterate,
    Concat,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopOpsArgs {
    #[arg(long, value_enum)]
    pub op: LoopOp,
    /// Rotation for `reparam`, factor for `iterate`.
    #[arg(long)]
    #[serde(default)]
    pub args: Option<String>,
    #[arg(long = "in")]
    #[serde(default, rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "in2")]
    #[serde(default, rename = "in2")]
    pub input2: Option<PathBuf>,
    /// Draw the input loops from the seed instead of reading them.
    #[arg(long)]
    #[serde(default)]
    pub generate: bool,
    #[arg(long, default_value_t = 64)]
    #[serde(default = "default_circle")]
    pub circle: usize,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one_i64")]
    pub winding: i64,
    /// Iterate on the input grid by reading every n-th sample; needs 2n < m.
    #[arg(long)]
    #[serde(default)]
    pub same_grid: bool,
    /// Write the resulting loop as JSON.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub check_laws: bool,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one_f64")]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one_f64")]
    pub sigma: f64,
}

/// Basepoint radius shared by generated loops.
const GENERATED_BASE_RADIUS: f64 = -0.1;

fn parse_arg<T: std::str::FromStr>(args: &LoopOpsArgs, what: &str) -> Result<T, CliError> {
    let raw = args.args.as_deref().ok_or_else(|| invalid(format!("{what} needs --args")))?;
    raw.trim()
        .parse()
        .map_err(|_| invalid(format!("cannot read {what} from {raw:?}")))
}

pub fn loop_ops(args: &LoopOpsArgs, seed: u64) -> CliResult {
    let needs_second = args.op == LoopOp::Concat;
    let (u, v): (Loop, Option<Loop>) = if args.generate {
        let mut r = samples::rng(seed);
        let u = random_constrained_loop(&mut r, args.circle, args.winding, GENERATED_BASE_RADIUS)?;
        let v = random_constrained_loop(&mut r, args.circle, args.winding, GENERATED_BASE_RADIUS)?;
        (u, Some(v))
    } else {
        let path = args.input.as_ref().ok_or_else(|| invalid("give --in or --generate"))?;
        let u: Loop = read_json(path)?;
        u.check_lift()?;
        let v = match &args.input2 {
            Some(p) => {
                let v: Loop = read_json(p)?;
                v.check_lift()?;
                Some(v)
            }
            None => None,
        };
        (u, v)
    };
    if needs_second && v.is_none() {
        return Err(invalid("concat needs a second loop (--in2)"));
    }
    let result = match args.op {
        LoopOp::Reparam => reparametrize(parse_arg::<f64>(args, "rotation")?, &u)?,
        LoopOp::Reverse => reverse(&u),
        LoopOp::Iterate => {
            let n = parse_arg::<usize>(args, "iteration factor")?;
            if args.same_grid {
                iterate_same_grid(n, &u)?
            } else {
                iterate(n, &u)?
            }
        }
        LoopOp::Concat => concatenate(&u, v.as_ref().expect("checked above"))?,
    };
    if let Some(out) = &args.out {
        write_json(out, &result)?;
    }
    if args.check_laws {
        let other = v.as_ref().map(|v| (v, args.sigma));
        let table = check_laws(&u, args.tau, other)?;
        print!("{}", to_json_string(&table)?);
        return Ok(table.passed);
    }
    Ok(true)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyAllArgs {
    /// Coarse grids, same limits.
    #[arg(long)]
    pub quick: bool,
    /// Write the summary JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn verify_all(args: &VerifyAllArgs) -> CliResult {
    let mode = if args.quick { Mode::Quick } else { Mode::Full };
    let report = acceptance::run_suite(mode, |c| eprintln!("{}", c.line()));
    let text = to_json_string(&report)?;
    match &args.out {
        Some(path) => write_text(path, &text)?,
        None => print!("{text}"),
    }
    Ok(report.passed)
}
