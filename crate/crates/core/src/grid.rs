//! One-dimensional calculus on a truncated line `[-S, S]` and on the circle `R/Z`.
//!
//! Everything downstream is second order: centered differences, the 3-point
//! Laplacian and trapezoid quadrature, so a single refinement study governs the
//! whole discretisation error.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation half-width used when callers do not choose one.
pub const DEFAULT_HALF_WIDTH: f64 = 20.0;

/// Uniform grid `s_i = -S + i h` on `[-S, S]` with `n >= 3` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLineGrid", into = "RawLineGrid")]
pub struct LineGrid {
    half_width: f64,
    points: usize,
}

#[derive(Serialize, Deserialize)]
struct RawLineGrid {
    #[serde(rename = "S")]
    half_width: f64,
    n: usize,
}

impl TryFrom<RawLineGrid> for LineGrid {
    type Error = Error;

    fn try_from(raw: RawLineGrid) -> Result<Self> {
        LineGrid::new(raw.half_width, raw.n)
    }
}

impl From<LineGrid> for RawLineGrid {
    fn from(g: LineGrid) -> Self {
        RawLineGrid {
            half_width: g.half_width,
            n: g.points,
        }
    }
}

impl LineGrid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if points < 3 {
            return Err(Error::InvalidGrid(format!(
                "line grid needs at least 3 points, got {points}"
            )));
        }
        Ok(LineGrid { half_width, points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    /// The endpoints are returned exactly as `-S` and `S`.
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.point(i)).collect()
    }
}

/// Uniform grid `t_j = j/m` on the circle, `m >= 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleGrid {
    points: usize,
}

impl CircleGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points < 4 {
            return Err(Error::InvalidGrid(format!(
                "circle grid needs at least 4 points, got {points}"
            )));
        }
        Ok(CircleGrid { points })
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.points as f64
    }
}

/// Real function sampled on a [`LineGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFunction")]
pub struct GridFunction {
    grid: LineGrid,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGridFunction {
    grid: LineGrid,
    values: Vec<f64>,
}

impl TryFrom<RawGridFunction> for GridFunction {
    type Error = Error;

    fn try_from(raw: RawGridFunction) -> Result<Self> {
        GridFunction::new(raw.grid, raw.values)
    }
}

/// `L1`, `L2`, `Linf` and `W^{2,2}` norms of a grid function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub w22: f64,
}

impl GridFunction {
    pub fn new(grid: LineGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: LineGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn zeros(grid: LineGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: LineGrid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &LineGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination; fails when the grids differ.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Centered differences inside, second-order one-sided differences at the ends.
    pub fn derivative(&self) -> Self {
        GridFunction {
            grid: self.grid,
            values: line_derivative(&self.values, self.grid.spacing()),
        }
    }

    /// 3-point stencil inside. The endpoint values use the 4-point one-sided
    /// second-order stencil (or copy the single interior value when `n = 3`);
    /// callers with a boundary condition overwrite them.
    pub fn second_derivative(&self) -> Self {
        let h = self.grid.spacing();
        let f = &self.values;
        let n = f.len();
        let h2 = h * h;
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            d[i] = (f[i - 1] - 2.0 * f[i] + f[i + 1]) / h2;
        }
        if n >= 4 {
            d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
            d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
        } else {
            d[0] = d[1];
            d[n - 1] = d[1];
        }
        GridFunction {
            grid: self.grid,
            values: d,
        }
    }

    /// Trapezoid rule over `[-S, S]`.
    pub fn integrate(&self) -> f64 {
        trapezoid(&self.values, self.grid.spacing())
    }

    pub fn norms(&self) -> Norms {
        let h = self.grid.spacing();
        let sq = |v: &[f64]| trapezoid(&v.iter().map(|x| x * x).collect::<Vec<_>>(), h);
        let l1 = trapezoid(&self.values.iter().map(|x| x.abs()).collect::<Vec<_>>(), h);
        let l2_sq = sq(&self.values);
        let d1 = self.derivative();
        let d2 = self.second_derivative();
        let w22_sq = l2_sq + sq(&d1.values) + sq(&d2.values);
        Norms {
            l1,
            l2: l2_sq.sqrt(),
            linf: self.max_abs(),
            w22: w22_sq.sqrt(),
        }
    }

    /// Two-column CSV `s,value` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt_f64(self.grid.point(i)), fmt_f64(*v));
        }
        out
    }
}

/// First derivative on a uniform line grid; shared by [`GridFunction`] and the
/// flow code, which differentiates columns of a cylinder map.
pub fn line_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    d
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Rectangle rule on the circle, `(1/m) sum g_j`.
pub fn integrate_circle(g: &[f64]) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    g.iter().sum::<f64>() / g.len() as f64
}

/// How `d/dt` is approximated on periodic samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodicScheme {
    /// `(g_{j+1} - g_{j-1}) / (2 dt)` with wraparound.
    #[default]
    Centered,
    /// Multiplication by `2 pi i k` in Fourier space; the Nyquist mode is dropped.
    Spectral,
}

impl PeriodicScheme {
    /// Imaginary part of the Fourier symbol of the scheme on mode `l` of an
    /// `m`-point grid, i.e. `D e_l = i * symbol * e_l`.
    pub fn symbol(self, l: usize, m: usize) -> f64 {
        match self {
            PeriodicScheme::Centered => m as f64 * (2.0 * PI * l as f64 / m as f64).sin(),
            PeriodicScheme::Spectral => {
                if 2 * l == m {
                    0.0
                } else if 2 * l < m {
                    2.0 * PI * l as f64
                } else {
                    2.0 * PI * (l as f64 - m as f64)
                }
            }
        }
    }
}

/// Derivative of periodic samples on the `m`-point circle grid.
pub fn periodic_derivative(g: &[f64], scheme: PeriodicScheme) -> Vec<f64> {
    let m = g.len();
    match scheme {
        PeriodicScheme::Centered => {
            let scale = m as f64 / 2.0;
            (0..m)
                .map(|j| (g[(j + 1) % m] - g[(j + m - 1) % m]) * scale)
                .collect()
        }
        PeriodicScheme::Spectral => {
            let mut planner = FftPlanner::<f64>::new();
            let fwd = planner.plan_fft_forward(m);
            let inv = planner.plan_fft_inverse(m);
            let mut buf: Vec<Complex64> = g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            fwd.process(&mut buf);
            for (l, c) in buf.iter_mut().enumerate() {
                let k = scheme.symbol(l, m);
                *c *= Complex64::new(0.0, k / m as f64);
            }
            inv.process(&mut buf);
            buf.into_iter().map(|c| c.re).collect()
        }
    }
}

/// Round-trip exact float text (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(s: f64, n: usize) -> LineGrid {
        LineGrid::new(s, n).unwrap()
    }

    #[test]
    fn endpoints_are_exact() {
        let g = grid(10.0, 2001);
        assert_eq!(g.point(0), -10.0);
        assert_eq!(g.point(2000), 10.0);
        assert!((g.spacing() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(LineGrid::new(1.0, 2).is_err());
        assert!(LineGrid::new(0.0, 10).is_err());
        assert!(CircleGrid::new(3).is_err());
    }

    #[test]
    fn derivative_of_constant_and_linear() {
        let g = grid(3.0, 7);
        let c = GridFunction::constant(g, 2.5).derivative();
        assert!(c.max_abs() < 1e-14);
        let lin = GridFunction::from_fn(g, |s| s).derivative();
        for v in lin.values() {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let g = grid(2.0, 9);
        let d = GridFunction::from_fn(g, |s| 3.0 * s * s - s + 1.0).derivative();
        for (i, v) in d.values().iter().enumerate() {
            assert!((v - (6.0 * g.point(i) - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_derivative_error_is_second_order() {
        // Analytic derivative is the oracle; the error constant comes from two grids.
        let err = |n: usize| {
            let g = grid(10.0, n);
            let d = GridFunction::from_fn(g, f64::sin).derivative();
            d.values()
                .iter()
                .enumerate()
                .map(|(i, v)| (v - g.point(i).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1001), err(2001));
        let h1 = 20.0 / 1000.0;
        let c = e1 / (h1 * h1);
        let h2 = 20.0 / 2000.0;
        assert!(e2 <= 1.1 * c * h2 * h2, "e1={e1} e2={e2}");
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5);
    }

    #[test]
    fn second_derivative_on_quadratic_and_constant() {
        let g = grid(4.0, 11);
        let c = GridFunction::constant(g, -1.0).second_derivative();
        assert!(c.max_abs() < 1e-12);
        let q = GridFunction::from_fn(g, |s| s * s).second_derivative();
        for v in q.values() {
            assert!((v - 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn gaussian_second_derivative_converges_at_second_order() {
        let exact = |s: f64| (4.0 * s * s - 2.0) * (-s * s).exp();
        let err = |n: usize| {
            let g = grid(6.0, n);
            let d = GridFunction::from_fn(g, |s| (-s * s).exp()).second_derivative();
            (1..n - 1)
                .map(|i| (d.values()[i] - exact(g.point(i))).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(601) / err(1201);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn trapezoid_examples() {
        let g = grid(10.0, 2001);
        assert!((GridFunction::constant(g, 1.0).integrate() - 20.0).abs() < 1e-12);
        assert!(GridFunction::from_fn(g, |s| s).integrate().abs() < 1e-12);
        let gauss = GridFunction::from_fn(g, |s| (-s * s).exp()).integrate();
        assert!((gauss - PI.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn circle_quadrature_examples() {
        assert_eq!(integrate_circle(&[1.0; 16]), 1.0);
        let m = 64;
        let s: Vec<f64> = (0..m).map(|j| (2.0 * PI * j as f64 / m as f64).sin()).collect();
        assert!(integrate_circle(&s).abs() < 1e-15);
        let s2: Vec<f64> = s.iter().map(|x| x * x).collect();
        assert!((integrate_circle(&s2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn norms_of_constants() {
        let g = grid(10.0, 401);
        let z = GridFunction::zeros(g).norms();
        assert_eq!((z.l1, z.l2, z.linf, z.w22), (0.0, 0.0, 0.0, 0.0));
        let one = GridFunction::constant(g, 1.0).norms();
        assert!((one.l1 - 20.0).abs() < 1e-12);
        assert!((one.l2 - 20f64.sqrt()).abs() < 1e-12);
        assert_eq!(one.linf, 1.0);
    }

    #[test]
    fn gaussian_w22_norm_matches_closed_form() {
        // ||f||^2 + ||f'||^2 + ||f''||^2 = (1 + 1 + 3) sqrt(pi/2) for f = exp(-s^2).
        // Cross-checked below by Simpson quadrature of the analytic derivatives.
        let exact = (5.0 * (PI / 2.0).sqrt()).sqrt();
        let simpson = {
            let n = 20000;
            let (a, b) = (-10.0, 10.0);
            let h = (b - a) / n as f64;
            let f = |s: f64| {
                let e = (-s * s).exp();
                e * e + (2.0 * s * e).powi(2) + ((4.0 * s * s - 2.0) * e).powi(2)
            };
            let mut acc = f(a) + f(b);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + k as f64 * h);
            }
            (acc * h / 3.0).sqrt()
        };
        assert!((simpson - exact).abs() < 1e-10);
        let err = |n: usize| {
            let g = grid(10.0, n);
            (GridFunction::from_fn(g, |s| (-s * s).exp()).norms().w22 - exact).abs()
        };
        let (e1, e2) = (err(1001), err(2001));
        assert!(e1 < 1e-3);
        assert!(e1 / e2 > 3.0, "e1={e1} e2={e2}");
    }

    #[test]
    fn spectral_and_centered_periodic_derivatives() {
        let m = 32;
        let g: Vec<f64> = (0..m)
            .map(|j| (2.0 * PI * 3.0 * j as f64 / m as f64).cos())
            .collect();
        let exact: Vec<f64> = (0..m)
            .map(|j| -6.0 * PI * (2.0 * PI * 3.0 * j as f64 / m as f64).sin())
            .collect();
        let spec = periodic_derivative(&g, PeriodicScheme::Spectral);
        for (a, b) in spec.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
        let cen = periodic_derivative(&g, PeriodicScheme::Centered);
        let factor = PeriodicScheme::Centered.symbol(3, m) / (6.0 * PI);
        for (a, b) in cen.iter().zip(&exact) {
            assert!((a - factor * b).abs() < 1e-12);
        }
    }

    #[test]
    fn json_record_uses_s_and_n() {
        let f = GridFunction::constant(grid(2.0, 3), 1.0);
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"S\":2.0") && text.contains("\"n\":3"), "{text}");
        let back: GridFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<LineGrid>("{\"S\":1.0,\"n\":2}").is_err());
    }
}
