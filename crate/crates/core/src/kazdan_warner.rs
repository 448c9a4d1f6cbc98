//! The Kazdan–Warner boundary-value problem
//!
//! ```text
//! rho'' + e^{-rho} - 1 + b = 0   on (-S, S),   rho(±S) = boundary_value,
//! ```
//!
//! solved by full-step Newton on the 3-point discretisation, globalised by
//! continuation in the forcing `r b`, `r: 0 -> 1`. The a priori bounds, the
//! energy identity and the `W^{2,2}` estimates satisfied by the continuum
//! solution are exposed as reports so callers can check them on computed data.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LineGrid};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;
/// `e^{-rho}` is evaluated with `rho` clamped to this magnitude.
pub const EXP_CLAMP: f64 = 50.0;
pub const BOUND_TOL: f64 = 1e-8;
pub const INTERPOLATION_TOL: f64 = 1e-6;

const CONTINUATION_MAX_STEP: f64 = 0.25;
const CONTINUATION_MIN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwProblem {
    b: GridFunction,
    boundary_value: f64,
}

impl KwProblem {
    /// Rejects forcings with a negative sample.
    pub fn new(b: GridFunction) -> Result<Self> {
        Self::with_boundary_value(b, 0.0)
    }

    pub fn with_boundary_value(b: GridFunction, boundary_value: f64) -> Result<Self> {
        if let Some((index, &value)) = b.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeForcing { index, value });
        }
        if !boundary_value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "boundary value must be finite, got {boundary_value}"
            )));
        }
        Ok(KwProblem { b, boundary_value })
    }

    pub fn b(&self) -> &GridFunction {
        &self.b
    }

    pub fn grid(&self) -> &LineGrid {
        self.b.grid()
    }

    pub fn boundary_value(&self) -> f64 {
        self.boundary_value
    }

    pub fn b_l1(&self) -> f64 {
        self.b.integrate()
    }

    /// `max{2 ln 2, 4 |b|_1^2}`, the a priori upper bound for `rho`.
    pub fn kappa(&self) -> f64 {
        kappa(self.b_l1())
    }
}

pub fn kappa(b_l1: f64) -> f64 {
    (2.0 * LN_2).max(4.0 * b_l1 * b_l1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwSolution {
    pub rho: GridFunction,
    /// Iterations of the final Newton solve.
    pub newton_iterations: usize,
    /// Iterations summed over all continuation or homotopy stages.
    pub total_newton_iterations: usize,
    pub final_residual_linf: f64,
    pub continuation_steps: usize,
    pub clamp_events: usize,
    pub residual_history: Vec<f64>,
}

/// Tridiagonal matrix; `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }
}

/// Thomas algorithm, no pivoting.
pub fn solve_tridiagonal(a: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if rhs.len() != n {
        return Err(Error::GridMismatch(format!(
            "right-hand side has {} entries for a {n}x{n} system",
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = a.diag[0];
    if pivot == 0.0 {
        return Err(Error::ZeroPivot { row: 0 });
    }
    c[0] = a.upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = a.diag[i] - a.lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::ZeroPivot { row: i });
        }
        c[i] = if i + 1 < n { a.upper[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - a.lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

fn exp_neg(rho: f64, clamps: &mut usize) -> f64 {
    if rho.abs() > EXP_CLAMP {
        *clamps += 1;
    }
    (-rho.clamp(-EXP_CLAMP, EXP_CLAMP)).exp()
}

/// `rho'' + e^{-rho} - 1 + scale*b - offset` inside, `rho - boundary_value` at the ends.
fn residual_values(
    rho: &[f64],
    problem: &KwProblem,
    scale: f64,
    offset: Option<&[f64]>,
    clamps: &mut usize,
) -> Vec<f64> {
    let n = rho.len();
    let h = problem.grid().spacing();
    let h2 = h * h;
    let b = problem.b.values();
    let mut f = vec![0.0; n];
    f[0] = rho[0] - problem.boundary_value;
    f[n - 1] = rho[n - 1] - problem.boundary_value;
    for i in 1..n - 1 {
        f[i] = (rho[i - 1] - 2.0 * rho[i] + rho[i + 1]) / h2 + exp_neg(rho[i], clamps) - 1.0
            + scale * b[i];
    }
    if let Some(off) = offset {
        for (fi, o) in f.iter_mut().zip(off) {
            *fi -= o;
        }
    }
    f
}

pub fn kw_residual(rho: &GridFunction, problem: &KwProblem) -> Result<GridFunction> {
    rho.ensure_same_grid(&problem.b)?;
    let mut clamps = 0;
    let values = residual_values(rho.values(), problem, 1.0, None, &mut clamps);
    GridFunction::new(*rho.grid(), values)
}

/// Jacobian of [`kw_residual`]: Laplacian minus `e^{-rho}` inside, identity rows at the ends.
pub fn kw_linearize(rho: &GridFunction) -> Tridiagonal {
    let mut clamps = 0;
    linearize_values(rho.values(), rho.grid().spacing(), &mut clamps)
}

fn linearize_values(rho: &[f64], h: f64, clamps: &mut usize) -> Tridiagonal {
    let n = rho.len();
    let inv_h2 = 1.0 / (h * h);
    let mut lower = vec![inv_h2; n];
    let mut upper = vec![inv_h2; n];
    let mut diag = vec![0.0; n];
    for i in 1..n - 1 {
        diag[i] = -2.0 * inv_h2 - exp_neg(rho[i], clamps);
    }
    diag[0] = 1.0;
    diag[n - 1] = 1.0;
    lower[0] = 0.0;
    upper[0] = 0.0;
    lower[n - 1] = 0.0;
    upper[n - 1] = 0.0;
    Tridiagonal { lower, diag, upper }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

struct NewtonOutcome {
    rho: Vec<f64>,
    iterations: usize,
    residual: f64,
    clamps: usize,
    history: Vec<f64>,
}

fn newton_core(
    problem: &KwProblem,
    scale: f64,
    offset: Option<&[f64]>,
    rho0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let h = problem.grid().spacing();
    let mut rho = rho0.to_vec();
    let mut clamps = 0;
    let mut history = Vec::new();
    for iteration in 0..=max_iter {
        let f = residual_values(&rho, problem, scale, offset, &mut clamps);
        let res = linf(&f);
        if !res.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        history.push(res);
        if res <= tol {
            return Ok(NewtonOutcome {
                rho,
                iterations: iteration,
                residual: res,
                clamps,
                history,
            });
        }
        if iteration == max_iter {
            break;
        }
        let jac = linearize_values(&rho, h, &mut clamps);
        let neg: Vec<f64> = f.iter().map(|x| -x).collect();
        let step = solve_tridiagonal(&jac, &neg)?;
        for (r, d) in rho.iter_mut().zip(&step) {
            *r += d;
        }
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite {
                iteration: iteration + 1,
            });
        }
    }
    Err(Error::MaxIterations {
        iterations: max_iter,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Full-step Newton from `rho0`.
pub fn newton_solve(
    problem: &KwProblem,
    rho0: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<KwSolution> {
    check_tol(tol)?;
    rho0.ensure_same_grid(&problem.b)?;
    let out = newton_core(problem, 1.0, None, rho0.values(), tol, max_iter)?;
    Ok(KwSolution {
        rho: GridFunction::new(*rho0.grid(), out.rho)?,
        newton_iterations: out.iterations,
        total_newton_iterations: out.iterations,
        final_residual_linf: out.residual,
        continuation_steps: 0,
        clamp_events: out.clamps,
        residual_history: out.history,
    })
}

/// Walks a homotopy parameter from 0 to 1. `attempt(r, seed)` solves the
/// stage problem at `r` starting from `seed`. The first attempt jumps
/// straight to `r = 1`; failures halve the step and successes grow it by 1.5,
/// with growth capped at 0.25.
fn walk_homotopy(
    seed: Vec<f64>,
    mut attempt: impl FnMut(f64, &[f64]) -> Result<NewtonOutcome>,
) -> Result<(NewtonOutcome, usize, usize, usize)> {
    let mut r = 0.0_f64;
    let mut step = 1.0_f64;
    let mut current = seed;
    let mut steps = 0;
    let mut total = 0;
    let mut clamps = 0;
    let mut last: Option<NewtonOutcome> = None;
    while r < 1.0 {
        let target = (r + step).min(1.0);
        match attempt(target, &current) {
            Ok(out) => {
                total += out.iterations;
                clamps += out.clamps;
                steps += 1;
                r = target;
                current = out.rho.clone();
                last = Some(out);
                step = (1.5 * step).min(CONTINUATION_MAX_STEP);
            }
            Err(Error::MaxIterations { iterations, .. }) => {
                total += iterations;
                step *= 0.5;
            }
            Err(Error::NonFinite { iteration }) => {
                total += iteration;
                step *= 0.5;
            }
            Err(Error::ZeroPivot { .. }) => step *= 0.5,
            Err(e) => return Err(e),
        }
        if step < CONTINUATION_MIN_STEP {
            return Err(Error::StepUnderflow { reached: r, step });
        }
    }
    let out = last.expect("homotopy reaches r = 1 only through a successful stage");
    Ok((out, steps, total, clamps))
}

/// Continuation in the forcing: solves `r b` for `r` stepping from 0 to 1.
pub fn continuation_solve(problem: &KwProblem, tol: f64) -> Result<KwSolution> {
    check_tol(tol)?;
    let seed = vec![problem.boundary_value; problem.grid().len()];
    let (out, steps, total, clamps) = walk_homotopy(seed, |r, start| {
        newton_core(problem, r, None, start, tol, DEFAULT_MAX_ITER)
    })?;
    Ok(KwSolution {
        rho: GridFunction::new(*problem.grid(), out.rho)?,
        newton_iterations: out.iterations,
        total_newton_iterations: total,
        final_residual_linf: out.residual,
        continuation_steps: steps,
        clamp_events: clamps,
        residual_history: out.history,
    })
}

/// Newton from `rho0`; if that fails, follows the Newton homotopy
/// `F(rho) - (1 - r) F(rho0) = 0`, which starts exactly at `rho0`.
pub fn solve_from(problem: &KwProblem, rho0: &GridFunction, tol: f64) -> Result<KwSolution> {
    check_tol(tol)?;
    rho0.ensure_same_grid(&problem.b)?;
    match newton_core(problem, 1.0, None, rho0.values(), tol, DEFAULT_MAX_ITER) {
        Ok(out) => {
            return Ok(KwSolution {
                rho: GridFunction::new(*rho0.grid(), out.rho)?,
                newton_iterations: out.iterations,
                total_newton_iterations: out.iterations,
                final_residual_linf: out.residual,
                continuation_steps: 0,
                clamp_events: out.clamps,
                residual_history: out.history,
            })
        }
        Err(Error::MaxIterations { .. } | Error::NonFinite { .. } | Error::ZeroPivot { .. }) => {}
        Err(e) => return Err(e),
    }
    let mut clamps = 0;
    let f0 = residual_values(rho0.values(), problem, 1.0, None, &mut clamps);
    let (out, steps, total, more) = walk_homotopy(rho0.values().to_vec(), |r, start| {
        let offset: Vec<f64> = f0.iter().map(|f| (1.0 - r) * f).collect();
        newton_core(problem, 1.0, Some(&offset), start, tol, DEFAULT_MAX_ITER)
    })?;
    Ok(KwSolution {
        rho: GridFunction::new(*rho0.grid(), out.rho)?,
        newton_iterations: out.iterations,
        total_newton_iterations: total,
        final_residual_linf: out.residual,
        continuation_steps: steps,
        clamp_events: clamps + more,
        residual_history: out.history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub min_rho: f64,
    pub max_rho: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks `0 <= rho <= max{2 ln 2, 4 |b|_1^2}` within [`BOUND_TOL`].
pub fn check_pointwise_bounds(sol: &KwSolution, problem: &KwProblem) -> BoundsReport {
    let min_rho = sol.rho.min();
    let max_rho = sol.rho.max();
    let upper_bound = problem.kappa();
    BoundsReport {
        min_rho,
        max_rho,
        lower_bound: 0.0,
        upper_bound,
        tolerance: BOUND_TOL,
        passed: min_rho >= -BOUND_TOL && max_rho <= upper_bound + BOUND_TOL,
    }
}

/// `| int e^{-rho}(b + rho'^2) + int (1 - e^{-rho})^2 - |b|_1 |`.
pub fn energy_identity_residual(sol: &KwSolution, problem: &KwProblem) -> Result<f64> {
    sol.rho.ensure_same_grid(&problem.b)?;
    let d = sol.rho.derivative();
    let grid = *problem.grid();
    let integrand: Vec<f64> = sol
        .rho
        .values()
        .iter()
        .zip(problem.b.values())
        .zip(d.values())
        .map(|((&r, &b), &dr)| {
            let e = (-r).exp();
            e * (b + dr * dr) + (1.0 - e) * (1.0 - e)
        })
        .collect();
    let lhs = GridFunction::new(grid, integrand)?.integrate();
    Ok((lhs - problem.b_l1()).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W22Report {
    pub b_l1: f64,
    pub b_l2: f64,
    pub kappa: f64,
    pub c1: f64,
    pub rho_l2: f64,
    pub d_rho_l2: f64,
    pub dd_rho_l2: f64,
    pub rho_w22: f64,
    /// `|rho''|_2 <= sqrt(|b|_1) + |b|_2`
    pub second_derivative_bound: f64,
    pub second_derivative_margin: f64,
    /// `|rho|_2^2 <= c1^2 |b|_1`
    pub l2_bound: f64,
    pub l2_margin: f64,
    /// `|rho'|_2^2 <= |rho|_2 |rho''|_2`
    pub interpolation_lhs: f64,
    pub interpolation_rhs: f64,
    pub interpolation_margin: f64,
    pub passed: bool,
}

/// `kappa / (1 - e^{-kappa})`; tends to 1 as `kappa -> 0`.
pub fn convexity_constant(kappa: f64) -> f64 {
    if kappa == 0.0 {
        1.0
    } else {
        kappa / -(-kappa).exp_m1()
    }
}

pub fn w22_estimates(sol: &KwSolution, problem: &KwProblem) -> Result<W22Report> {
    sol.rho.ensure_same_grid(&problem.b)?;
    let b_norms = problem.b.norms();
    let kappa = problem.kappa();
    let c1 = convexity_constant(kappa);
    let rho_norms = sol.rho.norms();
    let d_rho_l2 = sol.rho.derivative().norms().l2;
    let dd_rho_l2 = sol.rho.second_derivative().norms().l2;
    let rho_l2 = rho_norms.l2;

    let second_derivative_bound = b_norms.l1.sqrt() + b_norms.l2;
    let l2_bound = c1 * c1 * b_norms.l1;
    let interpolation_lhs = d_rho_l2 * d_rho_l2;
    let interpolation_rhs = rho_l2 * dd_rho_l2;
    let second_derivative_margin = second_derivative_bound - dd_rho_l2;
    let l2_margin = l2_bound - rho_l2 * rho_l2;
    let interpolation_margin = interpolation_rhs - interpolation_lhs;
    Ok(W22Report {
        b_l1: b_norms.l1,
        b_l2: b_norms.l2,
        kappa,
        c1,
        rho_l2,
        d_rho_l2,
        dd_rho_l2,
        rho_w22: rho_norms.w22,
        second_derivative_bound,
        second_derivative_margin,
        l2_bound,
        l2_margin,
        interpolation_lhs,
        interpolation_rhs,
        interpolation_margin,
        passed: second_derivative_margin >= 0.0
            && l2_margin >= 0.0
            && interpolation_margin >= -INTERPOLATION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(mass: f64) -> impl Fn(f64) -> f64 {
        move |s| mass * (-0.5 * s * s).exp() / (2.0 * PI).sqrt()
    }

    fn problem(s: f64, n: usize, b: impl Fn(f64) -> f64) -> KwProblem {
        let grid = LineGrid::new(s, n).unwrap();
        KwProblem::new(GridFunction::from_fn(grid, b)).unwrap()
    }

    #[test]
    fn rejects_negative_forcing() {
        let grid = LineGrid::new(1.0, 5).unwrap();
        let b = GridFunction::from_fn(grid, |s| s);
        assert!(matches!(
            KwProblem::new(b),
            Err(Error::NegativeForcing { index: 0, .. })
        ));
    }

    #[test]
    fn residual_of_zero_is_the_forcing_inside() {
        let p = problem(5.0, 51, gaussian(1.0));
        let zero = GridFunction::zeros(*p.grid());
        let f = kw_residual(&zero, &p).unwrap();
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(f.values()[50], 0.0);
        for i in 1..50 {
            assert_eq!(f.values()[i], p.b().values()[i]);
        }
        let q = problem(5.0, 51, |_| 0.0);
        assert_eq!(kw_residual(&zero, &q).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn residual_matches_analytic_evaluation_at_second_order() {
        let err = |n: usize| {
            let p = problem(6.0, n, |_| 0.0);
            let rho = GridFunction::from_fn(*p.grid(), |s| (-s * s).exp());
            let f = kw_residual(&rho, &p).unwrap();
            (1..n - 1)
                .map(|i| {
                    let s = p.grid().point(i);
                    let g = (-s * s).exp();
                    let exact = (4.0 * s * s - 2.0) * g + (-g).exp() - 1.0;
                    (f.values()[i] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(601), err(1201));
        assert!(e1 < 1e-3);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn linearization_at_zero() {
        let grid = LineGrid::new(1.0, 11).unwrap();
        let h = grid.spacing();
        let t = kw_linearize(&GridFunction::zeros(grid));
        for i in 1..10 {
            assert!((t.diag[i] - (-2.0 / (h * h) - 1.0)).abs() < 1e-12);
            assert!((t.lower[i] - 1.0 / (h * h)).abs() < 1e-12);
            assert!((t.upper[i] - 1.0 / (h * h)).abs() < 1e-12);
        }
        assert_eq!((t.diag[0], t.upper[0]), (1.0, 0.0));
        assert_eq!((t.diag[10], t.lower[10]), (1.0, 0.0));
        assert!(t.apply(&[0.0; 11]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_system_returns_rhs() {
        let t = Tridiagonal {
            lower: vec![0.0; 2],
            diag: vec![1.0; 2],
            upper: vec![0.0; 2],
        };
        assert_eq!(solve_tridiagonal(&t, &[3.0, -4.0]).unwrap(), vec![3.0, -4.0]);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let t = Tridiagonal {
            lower: vec![0.0; 2],
            diag: vec![0.0, 1.0],
            upper: vec![1.0, 0.0],
        };
        assert!(matches!(
            solve_tridiagonal(&t, &[1.0, 1.0]),
            Err(Error::ZeroPivot { row: 0 })
        ));
    }

    #[test]
    fn sine_mode_multiplies_back() {
        let s = 10.0;
        let grid = LineGrid::new(s, 401).unwrap();
        let a = kw_linearize(&GridFunction::zeros(grid));
        let k = PI / (2.0 * s);
        let rhs: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| -(1.0 + k * k) * (k * (x + s)).sin())
            .collect();
        let x = solve_tridiagonal(&a, &rhs).unwrap();
        let back = a.apply(&x);
        let scale = linf(&rhs);
        for (p, q) in back.iter().zip(&rhs) {
            assert!((p - q).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn trivial_solve_takes_no_iterations() {
        let p = problem(20.0, 2001, |_| 0.0);
        let sol = newton_solve(&p, &GridFunction::zeros(*p.grid()), DEFAULT_TOL, 50).unwrap();
        assert_eq!(sol.newton_iterations, 0);
        assert_eq!(sol.rho.max_abs(), 0.0);
        let c = continuation_solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(c.continuation_steps, 1);
        assert_eq!(c.rho.max_abs(), 0.0);
    }

    #[test]
    fn newton_converges_quadratically_for_small_forcing() {
        let p = problem(20.0, 2001, gaussian(0.5));
        let sol = newton_solve(&p, &GridFunction::zeros(*p.grid()), DEFAULT_TOL, 50).unwrap();
        assert!(sol.final_residual_linf <= DEFAULT_TOL);
        assert!(sol.newton_iterations <= 6);
        let h = &sol.residual_history;
        let k = h.len() - 2;
        assert!(h[k] < 1e-2 * h[k - 1] || h[k] < 1e-8);
    }

    #[test]
    fn max_iterations_carries_history() {
        let p = problem(20.0, 201, gaussian(3.0));
        match newton_solve(&p, &GridFunction::zeros(*p.grid()), 1e-14, 1) {
            Err(Error::MaxIterations { history, iterations, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(history.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bound_constants() {
        assert!((kappa(0.5) - 2.0 * LN_2).abs() < 1e-15);
        assert!((kappa(0.5) - 1.3862943611198906).abs() < 1e-15);
        assert_eq!(kappa(1.0), 4.0);
        assert!((convexity_constant(2.0 * LN_2) - 8.0 / 3.0 * LN_2).abs() < 1e-14);
    }

    #[test]
    fn reports_for_trivial_solution_are_zero() {
        let p = problem(10.0, 101, |_| 0.0);
        let sol = continuation_solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(energy_identity_residual(&sol, &p).unwrap(), 0.0);
        let w = w22_estimates(&sol, &p).unwrap();
        assert_eq!((w.rho_l2, w.d_rho_l2, w.dd_rho_l2), (0.0, 0.0, 0.0));
        assert!(w.passed);
        let b = check_pointwise_bounds(&sol, &p);
        assert!(b.passed);
        assert!((b.upper_bound - 2.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn clamping_is_counted() {
        let grid = LineGrid::new(1.0, 5).unwrap();
        let p = KwProblem::new(GridFunction::zeros(grid)).unwrap();
        let mut clamps = 0;
        let rho = [0.0, -60.0, 0.0, 70.0, 0.0];
        let f = residual_values(&rho, &p, 1.0, None, &mut clamps);
        assert_eq!(clamps, 2);
        assert!(f.iter().all(|v| v.is_finite()));
    }
}
