//! Gradient-flow cylinders on `[-S, S] x S^1`.
//!
//! On the circle the flow reduces to the Cauchy–Riemann pair
//!
//! ```text
//! E1 = d_s a - d_t theta + tau = 0,     E2 = d_s theta + d_t a = 0,
//! ```
//!
//! for `u = (a, theta)`, coupled to `eps tau' + mean H(u) = 0` (or, when
//! `eps = 0`, to the pointwise constraint `mean H(u) = 0`).
//!
//! [`solve_flow_segment`] solves the truncated boundary-value problem with `a`
//! prescribed at both ends. `theta` is free at the ends and closed by the box
//! discretisation of `E2` on the first and last cells, with its mean fixed by
//! the left boundary loop. Since `E1` and `E2` are linear and `tau` only
//! enters the `t`-mean, each Newton step splits exactly into one banded
//! complex system per Fourier mode and one banded real system for
//! `(mean a, tau)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::grid::{
    integrate_circle, line_derivative, periodic_derivative, trapezoid, CircleGrid, GridFunction,
    LineGrid, PeriodicScheme,
};
use crate::symplectization::{
    apply_j, loop_area_with, mean_hamiltonian, sigma_shift, CircleContact, Loop,
    SymplectizationTangent, Translate,
};

pub const DEFAULT_FLOW_TOL: f64 = 1e-10;
pub const DEFAULT_FLOW_MAX_ITER: usize = 30;

/// Field `u(s_i, t_j)`: one loop per line-grid point, all with the same
/// circle grid and winding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CylinderRecord", into = "CylinderRecord")]
pub struct CylinderMap {
    line: LineGrid,
    winding: i64,
    loops: Vec<Loop>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylinderRecord {
    pub grid: LineGrid,
    pub m: usize,
    pub winding: i64,
    pub loops: Vec<Loop>,
}

impl TryFrom<CylinderRecord> for CylinderMap {
    type Error = Error;

    fn try_from(rec: CylinderRecord) -> Result<Self> {
        let map = CylinderMap::new(rec.grid, rec.loops)?;
        if map.m() != rec.m || map.winding != rec.winding {
            return Err(Error::InvalidInput(format!(
                "cylinder header (m = {}, winding = {}) disagrees with its loops (m = {}, winding = {})",
                rec.m,
                rec.winding,
                map.m(),
                map.winding
            )));
        }
        Ok(map)
    }
}

impl From<CylinderMap> for CylinderRecord {
    fn from(c: CylinderMap) -> Self {
        CylinderRecord {
            grid: c.line,
            m: c.m(),
            winding: c.winding,
            loops: c.loops,
        }
    }
}

impl CylinderMap {
    pub fn new(line: LineGrid, loops: Vec<Loop>) -> Result<Self> {
        if loops.len() != line.len() {
            return Err(Error::GridMismatch(format!(
                "{} loops for a {}-point line grid",
                loops.len(),
                line.len()
            )));
        }
        let m = loops[0].len();
        let winding = loops[0].winding();
        for l in &loops {
            if l.len() != m {
                return Err(Error::GridMismatch(format!(
                    "loops on {m} and {} circle points",
                    l.len()
                )));
            }
            if l.winding() != winding {
                return Err(Error::IncompatibleWinding(winding, l.winding()));
            }
        }
        Ok(CylinderMap {
            line,
            winding,
            loops,
        })
    }

    /// The same loop at every `s`.
    pub fn constant(line: LineGrid, u: &Loop) -> Self {
        CylinderMap {
            line,
            winding: u.winding(),
            loops: vec![u.clone(); line.len()],
        }
    }

    /// From row-major radial and phase samples (`n` rows of `m`).
    pub fn from_rows(
        line: LineGrid,
        circle: CircleGrid,
        winding: i64,
        a: &[f64],
        phase: &[f64],
    ) -> Result<Self> {
        let (n, m) = (line.len(), circle.len());
        if a.len() != n * m || phase.len() != n * m {
            return Err(Error::GridMismatch(format!(
                "expected {n}x{m} samples, got {} and {}",
                a.len(),
                phase.len()
            )));
        }
        let loops = (0..n)
            .map(|i| {
                Loop::from_phase(
                    circle,
                    winding,
                    a[i * m..(i + 1) * m].to_vec(),
                    phase[i * m..(i + 1) * m].to_vec(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CylinderMap {
            line,
            winding,
            loops,
        })
    }

    pub fn line(&self) -> &LineGrid {
        &self.line
    }

    pub fn circle(&self) -> CircleGrid {
        self.loops[0].grid()
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn loops(&self) -> &[Loop] {
        &self.loops
    }

    pub fn n(&self) -> usize {
        self.loops.len()
    }

    pub fn m(&self) -> usize {
        self.loops[0].len()
    }

    fn stacked(&self, f: impl Fn(&Loop) -> &[f64]) -> Vec<f64> {
        self.loops.iter().flat_map(|l| f(l).iter().copied()).collect()
    }

    pub fn radial_rows(&self) -> Vec<f64> {
        self.stacked(|l| l.r())
    }

    pub fn phase_rows(&self) -> Vec<f64> {
        self.stacked(|l| l.phase())
    }

    /// Per-`s` translation `u(s, .) -> shift(s)_* u(s, .)`.
    pub fn translate_by(&self, shift: &GridFunction) -> Result<Self> {
        if *shift.grid() != self.line {
            return Err(Error::GridMismatch("shift and field live on different line grids".into()));
        }
        Ok(CylinderMap {
            line: self.line,
            winding: self.winding,
            loops: self
                .loops
                .iter()
                .zip(shift.values())
                .map(|(l, &c)| l.translate(c))
                .collect(),
        })
    }

    /// Sup distance over all samples of `(a, theta)`.
    pub fn distance(&self, other: &CylinderMap) -> Result<f64> {
        if self.line != other.line || self.n() != other.n() {
            return Err(Error::GridMismatch("cylinders on different line grids".into()));
        }
        self.loops
            .iter()
            .zip(&other.loops)
            .try_fold(0.0_f64, |acc, (u, v)| Ok(acc.max(u.distance(v)?)))
    }

    /// `s -> mean_t H(u(s, .))`.
    pub fn mean_hamiltonian(&self) -> GridFunction {
        GridFunction::new(self.line, self.loops.iter().map(mean_hamiltonian).collect())
            .expect("one loop per grid point")
    }

    /// `s -> sigma_u(s)`.
    pub fn sigma_shift(&self) -> GridFunction {
        GridFunction::new(self.line, self.loops.iter().map(sigma_shift).collect())
            .expect("one loop per grid point")
    }
}

impl Translate for CylinderMap {
    fn translate(&self, shift: f64) -> Self {
        CylinderMap {
            line: self.line,
            winding: self.winding,
            loops: self.loops.iter().map(|l| l.translate(shift)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiplierPath {
    pub tau: GridFunction,
}

impl MultiplierPath {
    pub fn new(tau: GridFunction) -> Self {
        MultiplierPath { tau }
    }

    pub fn constant(line: LineGrid, tau: f64) -> Self {
        MultiplierPath {
            tau: GridFunction::constant(line, tau),
        }
    }
}

/// Pointwise residual magnitudes. `field` holds `sqrt(E1^2 + E2^2)` on the
/// interior rows `1..n-1`, row-major with `m` entries per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResidual {
    pub interior_rows: usize,
    pub m: usize,
    pub field: Vec<f64>,
    pub multiplier: Option<GridFunction>,
    pub constraint: Option<GridFunction>,
}

impl FlowResidual {
    pub fn field_linf(&self) -> f64 {
        linf(&self.field)
    }

    /// Multiplier rows `1..n-1`.
    pub fn multiplier_interior_linf(&self) -> f64 {
        self.multiplier
            .as_ref()
            .map_or(0.0, |g| interior_linf(g.values()))
    }

    pub fn constraint_linf(&self) -> f64 {
        self.constraint.as_ref().map_or(0.0, |g| g.max_abs())
    }

    /// Largest interior field or multiplier residual and any constraint residual.
    pub fn certificate(&self) -> f64 {
        self.field_linf()
            .max(self.multiplier_interior_linf())
            .max(self.constraint_linf())
    }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn interior_linf(v: &[f64]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    linf(&v[1..v.len() - 1])
}

struct Derivatives {
    /// `d_t a` and `d_t theta` for every row.
    dt_a: Vec<f64>,
    dt_theta: Vec<f64>,
}

fn t_derivatives(u: &CylinderMap, scheme: PeriodicScheme) -> Derivatives {
    let mut dt_a = Vec::with_capacity(u.n() * u.m());
    let mut dt_theta = Vec::with_capacity(u.n() * u.m());
    for l in u.loops() {
        dt_a.extend(periodic_derivative(l.r(), scheme));
        dt_theta.extend(l.theta_derivative(scheme));
    }
    Derivatives { dt_a, dt_theta }
}

/// `E1`, `E2` at the interior rows, row-major.
fn field_components(u: &CylinderMap, tau: &[f64], scheme: PeriodicScheme) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (u.n(), u.m());
    let h = u.line().spacing();
    let a = u.radial_rows();
    let phase = u.phase_rows();
    let d = t_derivatives(u, scheme);
    let mut e1 = Vec::with_capacity((n - 2) * m);
    let mut e2 = Vec::with_capacity((n - 2) * m);
    for i in 1..n - 1 {
        for j in 0..m {
            let (up, dn, here) = ((i + 1) * m + j, (i - 1) * m + j, i * m + j);
            e1.push((a[up] - a[dn]) / (2.0 * h) - d.dt_theta[here] + tau[i]);
            e2.push((phase[up] - phase[dn]) / (2.0 * h) + d.dt_a[here]);
        }
    }
    (e1, e2)
}

fn check_tau(u: &CylinderMap, tau: &MultiplierPath) -> Result<()> {
    if *tau.tau.grid() != *u.line() {
        return Err(Error::GridMismatch("multiplier and field live on different line grids".into()));
    }
    Ok(())
}

/// Residual of the flow with multiplier `tau` and metric parameter `epsilon`.
pub fn grad1_residual(
    u: &CylinderMap,
    tau: &MultiplierPath,
    epsilon: f64,
    scheme: PeriodicScheme,
) -> Result<FlowResidual> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    check_tau(u, tau)?;
    let (e1, e2) = field_components(u, tau.tau.values(), scheme);
    let field = e1.iter().zip(&e2).map(|(x, y)| x.hypot(*y)).collect();
    let dtau = tau.tau.derivative();
    let mh = u.mean_hamiltonian();
    let multiplier = dtau.zip_with(&mh, |d, h| (epsilon * d + h).abs())?;
    Ok(FlowResidual {
        interior_rows: u.n() - 2,
        m: u.m(),
        field,
        multiplier: Some(multiplier),
        constraint: None,
    })
}

/// Field residual magnitudes computed through the generic `J` of the
/// symplectization rather than the hard-coded reduction.
pub fn grad1_field_residual_via_j(
    u: &CylinderMap,
    tau: &MultiplierPath,
    scheme: PeriodicScheme,
) -> Result<Vec<f64>> {
    check_tau(u, tau)?;
    let (n, m) = (u.n(), u.m());
    let h = u.line().spacing();
    let a = u.radial_rows();
    let phase = u.phase_rows();
    let d = t_derivatives(u, scheme);
    let model = CircleContact;
    let mut out = Vec::with_capacity((n - 2) * m);
    for i in 1..n - 1 {
        let t_i = tau.tau.values()[i];
        for j in 0..m {
            let (up, dn, here) = ((i + 1) * m + j, (i - 1) * m + j, i * m + j);
            let p = u.loops()[i].point(j);
            let ds = SymplectizationTangent {
                radial: (a[up] - a[dn]) / (2.0 * h),
                sigma: (phase[up] - phase[dn]) / (2.0 * h),
            };
            let dt_minus = SymplectizationTangent {
                radial: d.dt_a[here],
                sigma: d.dt_theta[here] - t_i,
            };
            let jv = apply_j(&model, &p, &dt_minus, j as f64 / m as f64);
            out.push((ds.radial + jv.radial).hypot(ds.sigma + jv.sigma));
        }
    }
    Ok(out)
}

/// `s -> int v_s^* lambda`.
pub fn lagrange_multiplier_from_loops(v: &CylinderMap, scheme: PeriodicScheme) -> MultiplierPath {
    MultiplierPath::new(
        GridFunction::new(
            *v.line(),
            v.loops().iter().map(|l| loop_area_with(l, scheme)).collect(),
        )
        .expect("one loop per grid point"),
    )
}

/// Residual of the constrained flow, with the multiplier read off the loop areas.
pub fn grad2_residual(v: &CylinderMap, scheme: PeriodicScheme) -> FlowResidual {
    let tau = lagrange_multiplier_from_loops(v, scheme);
    let (e1, e2) = field_components(v, tau.tau.values(), scheme);
    FlowResidual {
        interior_rows: v.n() - 2,
        m: v.m(),
        field: e1.iter().zip(&e2).map(|(x, y)| x.hypot(*y)).collect(),
        multiplier: None,
        constraint: Some(v.mean_hamiltonian().map(f64::abs)),
    }
}

/// `s -> int e^a ((d_s a)^2 + (d_s theta)^2) dt`, the `omega(d_s u, J d_s u)` density.
pub fn energy_density(u: &CylinderMap) -> GridFunction {
    let (n, m) = (u.n(), u.m());
    let h = u.line().spacing();
    let a = u.radial_rows();
    let phase = u.phase_rows();
    let mut acc = vec![0.0; n];
    let mut col_a = vec![0.0; n];
    let mut col_p = vec![0.0; n];
    for j in 0..m {
        for i in 0..n {
            col_a[i] = a[i * m + j];
            col_p[i] = phase[i * m + j];
        }
        let da = line_derivative(&col_a, h);
        let dp = line_derivative(&col_p, h);
        for i in 0..n {
            acc[i] += col_a[i].exp() * (da[i] * da[i] + dp[i] * dp[i]);
        }
    }
    GridFunction::new(*u.line(), acc.into_iter().map(|x| x / m as f64).collect())
        .expect("one value per grid point")
}

pub fn energy_grad1(u: &CylinderMap, tau: &MultiplierPath) -> Result<f64> {
    check_tau(u, tau)?;
    let dtau = tau.tau.derivative();
    let kinetic = trapezoid(
        &dtau.values().iter().map(|d| d * d).collect::<Vec<_>>(),
        u.line().spacing(),
    );
    Ok(energy_density(u).integrate() + kinetic)
}

pub fn energy_grad2(v: &CylinderMap) -> f64 {
    energy_density(v).integrate()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub epsilon: f64,
    pub scheme: PeriodicScheme,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            epsilon: 1.0,
            scheme: PeriodicScheme::Centered,
            tol: DEFAULT_FLOW_TOL,
            max_iter: DEFAULT_FLOW_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    pub map: CylinderMap,
    pub tau: MultiplierPath,
    pub epsilon: f64,
    pub iterations: usize,
    pub residual_linf: f64,
    pub residual_history: Vec<f64>,
    /// Set when the boundary loops were moved onto the constraint first (`epsilon = 0`).
    pub normalized_boundary: bool,
}

struct RowFft {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl RowFft {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        RowFft {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    fn forward(&self, row: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = row.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut spec);
        spec.into_iter().map(|c| c.re / self.m as f64).collect()
    }
}

/// Discrete system for the truncated flow, in row-major storage.
struct Segment {
    n: usize,
    m: usize,
    h: f64,
    k: f64,
    epsilon: f64,
    scheme: PeriodicScheme,
    a: Vec<f64>,
    phase: Vec<f64>,
    tau: Vec<f64>,
}

struct SystemResidual {
    e1: Vec<f64>,
    e2: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    /// Multiplier rows, or for `epsilon = 0` the constraint rows inside and
    /// the `t`-mean of `E1` at the two ends.
    scalar: Vec<f64>,
    /// `mean_t e^a` per row.
    weight: Vec<f64>,
}

impl SystemResidual {
    fn linf(&self) -> f64 {
        [&self.e1, &self.e2, &self.left, &self.right, &self.scalar]
            .iter()
            .map(|v| linf(v))
            .fold(0.0, f64::max)
    }
}

impl Segment {
    fn row<'a>(&self, v: &'a [f64], i: usize) -> &'a [f64] {
        &v[i * self.m..(i + 1) * self.m]
    }

    fn mean_radial(&self) -> Vec<f64> {
        (0..self.n).map(|i| integrate_circle(self.row(&self.a, i))).collect()
    }

    fn residual(&self) -> SystemResidual {
        let (n, m, h) = (self.n, self.m, self.h);
        let dt_a: Vec<Vec<f64>> = (0..n)
            .map(|i| periodic_derivative(self.row(&self.a, i), self.scheme))
            .collect();
        let dt_p: Vec<Vec<f64>> = (0..n)
            .map(|i| periodic_derivative(self.row(&self.phase, i), self.scheme))
            .collect();
        let mut e1 = Vec::with_capacity((n - 2) * m);
        let mut e2 = Vec::with_capacity((n - 2) * m);
        for i in 1..n - 1 {
            for j in 0..m {
                let (up, dn) = ((i + 1) * m + j, (i - 1) * m + j);
                e1.push((self.a[up] - self.a[dn]) / (2.0 * h) - self.k - dt_p[i][j] + self.tau[i]);
                e2.push((self.phase[up] - self.phase[dn]) / (2.0 * h) + dt_a[i][j]);
            }
        }
        let closure = |i0: usize, i1: usize| -> Vec<f64> {
            (0..m)
                .map(|j| {
                    (self.phase[i1 * m + j] - self.phase[i0 * m + j]) / h
                        + 0.5 * (dt_a[i0][j] + dt_a[i1][j])
                })
                .collect()
        };
        let left = closure(0, 1);
        let right = closure(n - 2, n - 1);
        let weight: Vec<f64> = (0..n)
            .map(|i| integrate_circle(&self.row(&self.a, i).iter().map(|x| x.exp()).collect::<Vec<_>>()))
            .collect();
        let mean_h: Vec<f64> = (0..n)
            .map(|i| integrate_circle(&self.row(&self.a, i).iter().map(|x| x.exp_m1()).collect::<Vec<_>>()))
            .collect();
        let scalar = if self.epsilon > 0.0 {
            let dtau = line_derivative(&self.tau, h);
            (0..n).map(|i| self.epsilon * dtau[i] + mean_h[i]).collect()
        } else {
            let da0 = line_derivative(&self.mean_radial(), h);
            let end = |i: usize| da0[i] - self.k - integrate_circle(&dt_p[i]) + self.tau[i];
            let mut s = mean_h.clone();
            s[0] = end(0);
            s[n - 1] = end(n - 1);
            s
        };
        SystemResidual {
            e1,
            e2,
            left,
            right,
            scalar,
            weight,
        }
    }

    /// One Newton correction, applied in place.
    fn newton_step(&mut self, res: &SystemResidual, fft: &RowFft) -> Result<()> {
        let (n, m, h) = (self.n, self.m, self.h);
        let rows = n - 2;
        let e1_hat: Vec<Vec<Complex64>> = (0..rows).map(|r| fft.forward(&res.e1[r * m..(r + 1) * m])).collect();
        let e2_hat: Vec<Vec<Complex64>> = (0..rows).map(|r| fft.forward(&res.e2[r * m..(r + 1) * m])).collect();
        let left_hat = fft.forward(&res.left);
        let right_hat = fft.forward(&res.right);

        let zero = Complex64::new(0.0, 0.0);
        let mut da_hat = vec![vec![zero; m]; n];
        let mut dp_hat = vec![vec![zero; m]; n];
        let size = 2 * n - 2;
        let alpha = |i: usize| 2 * i - 1;
        let beta = |i: usize| if i == 0 { 0 } else if i == n - 1 { 2 * n - 3 } else { 2 * i };
        let half = 1.0 / (2.0 * h);
        for l in 1..m.div_ceil(2) {
            let kappa = self.scheme.symbol(l, m);
            let ik = Complex64::new(0.0, kappa);
            let mut mat = BandedMatrix::<Complex64>::zeros(size, 2, 2);
            let mut rhs = vec![zero; size];
            let re = |x: f64| Complex64::new(x, 0.0);
            mat.add(0, beta(1), re(1.0 / h));
            mat.add(0, beta(0), re(-1.0 / h));
            mat.add(0, alpha(1), 0.5 * ik);
            rhs[0] = -left_hat[l];
            for i in 1..n - 1 {
                let (r1, r2) = (2 * i - 1, 2 * i);
                if i + 1 < n - 1 {
                    mat.add(r1, alpha(i + 1), re(half));
                }
                if i > 1 {
                    mat.add(r1, alpha(i - 1), re(-half));
                }
                mat.add(r1, beta(i), -ik);
                rhs[r1] = -e1_hat[i - 1][l];
                mat.add(r2, beta(i + 1), re(half));
                mat.add(r2, beta(i - 1), re(-half));
                mat.add(r2, alpha(i), ik);
                rhs[r2] = -e2_hat[i - 1][l];
            }
            let last = size - 1;
            mat.add(last, beta(n - 1), re(1.0 / h));
            mat.add(last, beta(n - 2), re(-1.0 / h));
            mat.add(last, alpha(n - 2), 0.5 * ik);
            rhs[last] = -right_hat[l];
            let x = mat.solve(&rhs)?;
            for i in 0..n {
                dp_hat[i][l] = x[beta(i)];
                dp_hat[i][m - l] = x[beta(i)].conj();
                if i > 0 && i < n - 1 {
                    da_hat[i][l] = x[alpha(i)];
                    da_hat[i][m - l] = x[alpha(i)].conj();
                }
            }
        }
        let da: Vec<Vec<f64>> = da_hat.into_iter().map(|s| fft.inverse(s)).collect();
        let dp: Vec<Vec<f64>> = dp_hat.into_iter().map(|s| fft.inverse(s)).collect();

        // e^a-weighted mean of the oscillating correction, per row.
        let coupling: Vec<f64> = (0..n)
            .map(|i| {
                integrate_circle(
                    &self
                        .row(&self.a, i)
                        .iter()
                        .zip(&da[i])
                        .map(|(a, d)| a.exp() * d)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();

        let mut da0 = vec![0.0; n];
        if self.epsilon > 0.0 {
            let e1_mean: Vec<f64> = (0..rows).map(|r| e1_hat[r][0].re / m as f64).collect();
            let tau_col = |i: usize| if i == 0 { 0 } else if i == n - 1 { 2 * n - 3 } else { 2 * i };
            let mut mat = BandedMatrix::<f64>::zeros(size, 4, 4);
            let mut rhs = vec![0.0; size];
            let eps = self.epsilon;
            mat.add(0, tau_col(0), -3.0 * eps * half);
            mat.add(0, tau_col(1), 4.0 * eps * half);
            mat.add(0, tau_col(2), -eps * half);
            rhs[0] = -res.scalar[0];
            for i in 1..n - 1 {
                let (r1, r2) = (2 * i - 1, 2 * i);
                if i + 1 < n - 1 {
                    mat.add(r1, alpha(i + 1), half);
                }
                if i > 1 {
                    mat.add(r1, alpha(i - 1), -half);
                }
                mat.add(r1, tau_col(i), 1.0);
                rhs[r1] = -e1_mean[i - 1];
                mat.add(r2, tau_col(i + 1), eps * half);
                mat.add(r2, tau_col(i - 1), -eps * half);
                mat.add(r2, alpha(i), res.weight[i]);
                rhs[r2] = -res.scalar[i] - coupling[i];
            }
            let last = size - 1;
            mat.add(last, tau_col(n - 1), 3.0 * eps * half);
            mat.add(last, tau_col(n - 2), -4.0 * eps * half);
            mat.add(last, tau_col(n - 3), eps * half);
            rhs[last] = -res.scalar[n - 1];
            let x = mat.solve(&rhs)?;
            for i in 0..n {
                self.tau[i] += x[tau_col(i)];
                if i > 0 && i < n - 1 {
                    da0[i] = x[alpha(i)];
                }
            }
        } else {
            for i in 1..n - 1 {
                da0[i] = -(res.scalar[i] + coupling[i]) / res.weight[i];
            }
        }

        for i in 0..n {
            for j in 0..m {
                let idx = i * m + j;
                self.phase[idx] += dp[i][j];
                if i > 0 && i < n - 1 {
                    self.a[idx] += da[i][j] + da0[i];
                }
            }
        }
        if self.epsilon == 0.0 {
            self.fit_tau_to_field();
        }
        Ok(())
    }

    /// `tau = k + mean d_t theta - d_s mean a`, which solves the `t`-mean of `E1`.
    fn fit_tau_to_field(&mut self) {
        let da0 = line_derivative(&self.mean_radial(), self.h);
        for i in 0..self.n {
            let mean_dt = integrate_circle(&periodic_derivative(self.row(&self.phase, i), self.scheme));
            self.tau[i] = self.k + mean_dt - da0[i];
        }
    }
}

/// Solves the truncated flow between two loops.
///
/// `a` is prescribed at `s = ±S`; `theta` at the end rows is solved for,
/// with its mean fixed by `minus`. For `epsilon = 0` both loops are first
/// moved onto the constraint by their shifts `sigma`.
pub fn solve_flow_segment(
    minus: &Loop,
    plus: &Loop,
    line: LineGrid,
    config: &FlowConfig,
) -> Result<FlowSolution> {
    let eps = config.epsilon;
    if !(eps.is_finite() && (0.0..=1.0).contains(&eps)) {
        return Err(Error::InvalidInput(format!("epsilon must lie in [0, 1], got {eps}")));
    }
    if !(config.tol.is_finite() && config.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", config.tol)));
    }
    if minus.winding() != plus.winding() {
        return Err(Error::IncompatibleWinding(minus.winding(), plus.winding()));
    }
    if minus.len() != plus.len() {
        return Err(Error::GridMismatch(format!(
            "boundary loops on {} and {} circle points",
            minus.len(),
            plus.len()
        )));
    }
    let normalized = eps == 0.0;
    let (minus, plus) = if normalized {
        (minus.translate(sigma_shift(minus)), plus.translate(sigma_shift(plus)))
    } else {
        (minus.clone(), plus.clone())
    };
    let (n, m) = (line.len(), minus.len());
    let circle = minus.grid();
    let k = minus.winding() as f64;
    let gauge = integrate_circle(minus.phase());
    let plus_mean = integrate_circle(plus.phase());

    let mut a = Vec::with_capacity(n * m);
    let mut phase = Vec::with_capacity(n * m);
    for i in 0..n {
        let w = i as f64 / (n - 1) as f64;
        for j in 0..m {
            a.push((1.0 - w) * minus.r()[j] + w * plus.r()[j]);
            phase.push(
                (1.0 - w) * (minus.phase()[j] - gauge) + w * (plus.phase()[j] - plus_mean) + gauge,
            );
        }
    }
    a[..m].copy_from_slice(minus.r());
    a[(n - 1) * m..].copy_from_slice(plus.r());
    let mut seg = Segment {
        n,
        m,
        h: line.spacing(),
        k,
        epsilon: eps,
        scheme: config.scheme,
        a,
        phase,
        tau: vec![k; n],
    };
    seg.fit_tau_to_field();

    let fft = RowFft::new(m);
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let res = seg.residual();
        let r = res.linf();
        if !r.is_finite() {
            return Err(Error::NonFinite { iteration: iterations });
        }
        history.push(r);
        if r <= config.tol {
            break;
        }
        if iterations == config.max_iter {
            return Err(Error::MaxIterations {
                iterations,
                residual: r,
                history,
            });
        }
        seg.newton_step(&res, &fft)?;
        iterations += 1;
    }
    let map = CylinderMap::from_rows(line, circle, minus.winding(), &seg.a, &seg.phase)?;
    let tau = MultiplierPath::new(GridFunction::new(line, seg.tau)?);
    Ok(FlowSolution {
        map,
        tau,
        epsilon: eps,
        iterations,
        residual_linf: *history.last().expect("at least one residual evaluation"),
        residual_history: history,
        normalized_boundary: normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn perturbed(m: usize, k: i64, delta: f64) -> Loop {
        Loop::from_fn(m, k, |t| delta * (2.0 * PI * t).sin(), |_| 0.0).unwrap()
    }

    #[test]
    fn critical_cylinder_has_zero_residual() {
        let line = LineGrid::new(3.0, 31).unwrap();
        let u = CylinderMap::constant(line, &Loop::critical(16, 2).unwrap());
        let tau = MultiplierPath::constant(line, 2.0);
        let r = grad1_residual(&u, &tau, 1.0, PeriodicScheme::Centered).unwrap();
        assert!(r.certificate() <= 1e-13);
        assert_eq!(energy_grad1(&u, &tau).unwrap(), 0.0);
        let g = grad2_residual(&u, PeriodicScheme::Centered);
        assert!(g.certificate() <= 1e-13);
    }

    #[test]
    fn shifted_multiplier_gives_unit_field_residual() {
        let line = LineGrid::new(3.0, 31).unwrap();
        let u = CylinderMap::constant(line, &Loop::critical(16, 1).unwrap());
        let tau = MultiplierPath::constant(line, 2.0);
        let r = grad1_residual(&u, &tau, 1.0, PeriodicScheme::Centered).unwrap();
        assert!(r.field.iter().all(|x| (x - 1.0).abs() < 1e-13));
        assert_eq!(r.multiplier_interior_linf(), 0.0);
        let via_j = grad1_field_residual_via_j(&u, &tau, PeriodicScheme::Centered).unwrap();
        assert!(via_j.iter().zip(&r.field).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn multiplier_from_constant_radius_rows() {
        let line = LineGrid::new(2.0, 21).unwrap();
        let loops = line
            .points()
            .iter()
            .map(|&s| Loop::from_fn(8, 1, |_| 0.1 * s, |_| 0.0).unwrap())
            .collect();
        let v = CylinderMap::new(line, loops).unwrap();
        let tau = lagrange_multiplier_from_loops(&v, PeriodicScheme::Centered);
        for (i, &s) in line.points().iter().enumerate() {
            assert!((tau.tau.values()[i] - (0.1 * s).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn critical_boundary_data_needs_no_correction() {
        let c = Loop::critical(16, 1).unwrap();
        let line = LineGrid::new(5.0, 41).unwrap();
        for eps in [0.0, 1.0] {
            let sol = solve_flow_segment(&c, &c, line, &FlowConfig { epsilon: eps, ..FlowConfig::default() }).unwrap();
            assert_eq!(sol.iterations, 0);
            assert!(sol.tau.tau.values().iter().all(|&t| (t - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn perturbed_segment_converges() {
        let line = LineGrid::new(5.0, 101).unwrap();
        let minus = perturbed(32, 1, 0.05);
        let plus = perturbed(32, 1, -0.05);
        let minus = minus.translate(sigma_shift(&minus));
        let plus = plus.translate(sigma_shift(&plus));
        let sol = solve_flow_segment(&minus, &plus, line, &FlowConfig::default()).unwrap();
        assert!(sol.residual_linf <= 1e-10);
        assert!(sol.iterations <= 6, "{:?}", sol.residual_history);
        let r = grad1_residual(&sol.map, &sol.tau, 1.0, PeriodicScheme::Centered).unwrap();
        assert!(r.field_linf() <= 1e-10);
        assert!(r.multiplier_interior_linf() <= 1e-10);
        assert!(energy_grad1(&sol.map, &sol.tau).unwrap() > 0.0);
        assert_eq!(sol.map.loops()[0].r(), minus.r());
        assert_eq!(sol.map.loops()[100].r(), plus.r());
    }

    #[test]
    fn spectral_scheme_segment_converges() {
        let line = LineGrid::new(4.0, 61).unwrap();
        let minus = perturbed(16, 2, 0.03);
        let plus = perturbed(16, 2, 0.01);
        let cfg = FlowConfig { scheme: PeriodicScheme::Spectral, ..FlowConfig::default() };
        let sol = solve_flow_segment(&minus, &plus, line, &cfg).unwrap();
        let r = grad1_residual(&sol.map, &sol.tau, 1.0, PeriodicScheme::Spectral).unwrap();
        assert!(r.field_linf() <= 1e-10);
    }

    #[test]
    fn constrained_segment_satisfies_constraint_rows() {
        let line = LineGrid::new(5.0, 81).unwrap();
        let cfg = FlowConfig { epsilon: 0.0, ..FlowConfig::default() };
        let sol = solve_flow_segment(&perturbed(32, 1, 0.05), &perturbed(32, 1, -0.05), line, &cfg).unwrap();
        assert!(sol.normalized_boundary);
        assert!(sol.map.mean_hamiltonian().max_abs() <= 1e-10);
        let r = grad1_residual(&sol.map, &sol.tau, 0.0, PeriodicScheme::Centered).unwrap();
        assert!(r.field_linf() <= 1e-10);
        // With the multiplier read off the loop areas the field equation only
        // holds up to discretisation error.
        let g = grad2_residual(&sol.map, PeriodicScheme::Centered);
        assert!(g.constraint_linf() <= 1e-10);
        assert!(g.field_linf() <= 1e-3, "{}", g.field_linf());
    }

    #[test]
    fn mismatched_windings_are_rejected() {
        let line = LineGrid::new(1.0, 11).unwrap();
        let r = solve_flow_segment(
            &Loop::critical(8, 1).unwrap(),
            &Loop::critical(8, 2).unwrap(),
            line,
            &FlowConfig::default(),
        );
        assert!(matches!(r, Err(Error::IncompatibleWinding(1, 2))));
    }

    #[test]
    fn cylinder_json_roundtrip() {
        let line = LineGrid::new(1.0, 5).unwrap();
        let u = CylinderMap::constant(line, &perturbed(8, 1, 0.1));
        let text = serde_json::to_string(&u).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["grid"]["S"], 1.0);
        assert_eq!(v["m"], 8);
        let back: CylinderMap = serde_json::from_str(&text).unwrap();
        assert!(back.distance(&u).unwrap() < 1e-15);
    }
}
