//! Geometry of `R x Sigma` with `lambda_(r,x) = e^r lambda_x`, the Hamiltonian
//! `H = e^r - 1`, the translation action and the translation-invariant `J`.
//! Loops on the circle instance store an explicit winding and a periodic
//! phase, so the lifted angle is `theta(t_j) = k t_j + phase_j`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate_circle, periodic_derivative, CircleGrid, PeriodicScheme};

/// Membership tolerance for the zero-mean-Hamiltonian loop space.
pub const CONSTRAINT_TOL: f64 = 1e-9;

pub trait ContactModel {
    type Point: Copy;
    type Tangent: Copy + Add<Output = Self::Tangent> + Sub<Output = Self::Tangent> + Mul<f64, Output = Self::Tangent>;

    /// Dimension of `Sigma`.
    fn dim(&self) -> usize;
    fn lambda(&self, x: &Self::Point, v: &Self::Tangent) -> f64;
    fn d_lambda(&self, x: &Self::Point, v: &Self::Tangent, w: &Self::Tangent) -> f64;
    fn reeb(&self, x: &Self::Point) -> Self::Tangent;
    fn xi_projection(&self, x: &Self::Point, v: &Self::Tangent) -> Self::Tangent;
    /// Complex structure on `xi`, possibly depending on the loop time `t`.
    fn j_xi(&self, x: &Self::Point, w: &Self::Tangent, t: f64) -> Self::Tangent;
}

/// `Sigma = S^1`, `lambda = d theta`, `R = d/d theta`, `xi = 0`. Points are
/// angles in `[0, 1)`, tangents are multiples of `d/d theta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CircleContact;

impl ContactModel for CircleContact {
    type Point = f64;
    type Tangent = f64;

    fn dim(&self) -> usize {
        1
    }

    fn lambda(&self, _x: &f64, v: &f64) -> f64 {
        *v
    }

    fn d_lambda(&self, _x: &f64, _v: &f64, _w: &f64) -> f64 {
        0.0
    }

    fn reeb(&self, _x: &f64) -> f64 {
        1.0
    }

    fn xi_projection(&self, _x: &f64, _v: &f64) -> f64 {
        0.0
    }

    fn j_xi(&self, _x: &f64, _w: &f64, _t: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymplectizationPoint<P> {
    pub r: f64,
    pub x: P,
}

impl SymplectizationPoint<f64> {
    /// Circle point with the angle reduced mod 1.
    pub fn circle(r: f64, theta: f64) -> Self {
        SymplectizationPoint {
            r,
            x: theta.rem_euclid(1.0),
        }
    }
}

/// Tangent vector `radial d/dr + sigma` with `sigma` tangent to `Sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymplectizationTangent<T> {
    pub radial: f64,
    pub sigma: T,
}

pub fn hamiltonian<P>(p: &SymplectizationPoint<P>) -> f64 {
    p.r.exp_m1()
}

/// `J d/dr = R`, `J R = -d/dr`, `J = J_xi` on `xi`. Independent of `r`.
pub fn apply_j<M: ContactModel>(
    model: &M,
    p: &SymplectizationPoint<M::Point>,
    v: &SymplectizationTangent<M::Tangent>,
    t: f64,
) -> SymplectizationTangent<M::Tangent> {
    let reeb_part = model.lambda(&p.x, &v.sigma);
    let xi_part = model.xi_projection(&p.x, &v.sigma);
    let r = model.reeb(&p.x);
    SymplectizationTangent {
        radial: -reeb_part,
        sigma: r * v.radial + model.j_xi(&p.x, &xi_part, t),
    }
}

/// `omega = d(e^r lambda) = e^r (dr ^ lambda + d lambda)`.
pub fn omega<M: ContactModel>(
    model: &M,
    p: &SymplectizationPoint<M::Point>,
    v: &SymplectizationTangent<M::Tangent>,
    w: &SymplectizationTangent<M::Tangent>,
) -> f64 {
    let x = &p.x;
    p.r.exp()
        * (v.radial * model.lambda(x, &w.sigma) - w.radial * model.lambda(x, &v.sigma)
            + model.d_lambda(x, &v.sigma, &w.sigma))
}

/// The `R`-action `(c, (r, x)) -> (r + c, x)`.
pub trait Translate {
    fn translate(&self, shift: f64) -> Self;
}

impl<P: Copy> Translate for SymplectizationPoint<P> {
    fn translate(&self, shift: f64) -> Self {
        SymplectizationPoint {
            r: self.r + shift,
            x: self.x,
        }
    }
}

/// Loop in `R x S^1` sampled at `t_j = j/m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LoopRecord", into = "LoopRecord")]
pub struct Loop {
    grid: CircleGrid,
    winding: i64,
    r: Vec<f64>,
    phase: Vec<f64>,
}

/// On-disk form `{m, winding, r, theta_lift}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopRecord {
    pub m: usize,
    pub winding: i64,
    pub r: Vec<f64>,
    pub theta_lift: Vec<f64>,
}

impl TryFrom<LoopRecord> for Loop {
    type Error = Error;

    fn try_from(rec: LoopRecord) -> Result<Self> {
        if rec.r.len() != rec.m {
            return Err(Error::InvalidInput(format!(
                "loop declares m = {} but has {} r values",
                rec.m,
                rec.r.len()
            )));
        }
        Loop::from_lift(rec.r, &rec.theta_lift, rec.winding)
    }
}

impl From<Loop> for LoopRecord {
    fn from(l: Loop) -> Self {
        LoopRecord {
            m: l.len(),
            winding: l.winding,
            theta_lift: l.theta_lift(),
            r: l.r,
        }
    }
}

impl Loop {
    /// From radial samples and a lifted angle with `theta(1) - theta(0) = winding`.
    pub fn from_lift(r: Vec<f64>, theta_lift: &[f64], winding: i64) -> Result<Self> {
        let m = r.len();
        let grid = CircleGrid::new(m)?;
        if theta_lift.len() != m {
            return Err(Error::InvalidInput(format!(
                "{} lifted angles for {m} radial samples",
                theta_lift.len()
            )));
        }
        let phase = theta_lift
            .iter()
            .enumerate()
            .map(|(j, th)| th - winding as f64 * j as f64 / m as f64)
            .collect();
        Self::from_phase(grid, winding, r, phase)
    }

    /// From radial samples and the periodic part of the lifted angle.
    pub fn from_phase(grid: CircleGrid, winding: i64, r: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        if r.len() != m || phase.len() != m {
            return Err(Error::InvalidInput(format!(
                "loop arrays have lengths {} and {} on an {m}-point grid",
                r.len(),
                phase.len()
            )));
        }
        if r.iter().chain(&phase).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("loop samples must be finite".into()));
        }
        let l = Loop {
            grid,
            winding,
            r,
            phase,
        };
        l.check_lift()?;
        Ok(l)
    }

    pub fn from_fn(
        m: usize,
        winding: i64,
        r: impl Fn(f64) -> f64,
        phase: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let grid = CircleGrid::new(m)?;
        let ts: Vec<f64> = (0..m).map(|j| grid.point(j)).collect();
        Self::from_phase(
            grid,
            winding,
            ts.iter().map(|&t| r(t)).collect(),
            ts.iter().map(|&t| phase(t)).collect(),
        )
    }

    /// The `k`-fold Reeb orbit on `Sigma`: `r = 0`, `theta = k t`.
    pub fn critical(m: usize, winding: i64) -> Result<Self> {
        Self::from_phase(CircleGrid::new(m)?, winding, vec![0.0; m], vec![0.0; m])
    }

    /// Neighbouring lifted angles, including the wrap, differ by less than 1/2.
    pub fn check_lift(&self) -> Result<()> {
        let m = self.len() as i64;
        for j in 0..m {
            let jump = self.theta_at(j + 1) - self.theta_at(j);
            if !(jump.abs() < 0.5) {
                return Err(Error::LiftInconsistent {
                    index: j as usize,
                    jump,
                });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    /// Lifted angle at any integer index, `theta_{j+m} = theta_j + winding`.
    pub fn theta_at(&self, j: i64) -> f64 {
        let m = self.len() as i64;
        self.winding as f64 * j as f64 / m as f64 + self.phase[j.rem_euclid(m) as usize]
    }

    pub fn theta_lift(&self) -> Vec<f64> {
        (0..self.len() as i64).map(|j| self.theta_at(j)).collect()
    }

    pub fn point(&self, j: usize) -> SymplectizationPoint<f64> {
        SymplectizationPoint::circle(self.r[j], self.theta_at(j as i64))
    }

    /// `d theta / dt = winding + D phase`.
    pub fn theta_derivative(&self, scheme: PeriodicScheme) -> Vec<f64> {
        periodic_derivative(&self.phase, scheme)
            .into_iter()
            .map(|d| d + self.winding as f64)
            .collect()
    }

    pub fn r_derivative(&self, scheme: PeriodicScheme) -> Vec<f64> {
        periodic_derivative(&self.r, scheme)
    }

    /// Sup distance in `(r, theta)` to a loop on the same grid with the same winding.
    pub fn distance(&self, other: &Loop) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::GridMismatch(format!(
                "loops on {} and {} points",
                self.len(),
                other.len()
            )));
        }
        if self.winding != other.winding {
            return Err(Error::IncompatibleWinding(self.winding, other.winding));
        }
        Ok(self
            .r
            .iter()
            .zip(&other.r)
            .chain(self.phase.iter().zip(&other.phase))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub(crate) fn with_r(&self, r: Vec<f64>) -> Loop {
        debug_assert_eq!(r.len(), self.len());
        Loop {
            grid: self.grid,
            winding: self.winding,
            r,
            phase: self.phase.clone(),
        }
    }
}

impl Translate for Loop {
    fn translate(&self, shift: f64) -> Self {
        self.with_r(self.r.iter().map(|r| r + shift).collect())
    }
}

/// `int_0^1 e^r d theta`.
pub fn loop_area_with(u: &Loop, scheme: PeriodicScheme) -> f64 {
    let d = u.theta_derivative(scheme);
    integrate_circle(
        &u.r.iter()
            .zip(&d)
            .map(|(r, d)| r.exp() * d)
            .collect::<Vec<_>>(),
    )
}

pub fn loop_area(u: &Loop) -> f64 {
    loop_area_with(u, PeriodicScheme::Centered)
}

/// `int_0^1 H(u(t)) dt`.
pub fn mean_hamiltonian(u: &Loop) -> f64 {
    integrate_circle(&u.r.iter().map(|r| r.exp_m1()).collect::<Vec<_>>())
}

/// `-ln int_0^1 e^r dt`, the shift that moves `u` onto the constraint.
pub fn sigma_shift(u: &Loop) -> f64 {
    -log_mean_exp(&u.r)
}

pub(crate) fn log_mean_exp(r: &[f64]) -> f64 {
    let top = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = integrate_circle(&r.iter().map(|x| (x - top).exp()).collect::<Vec<_>>());
    top + mean.ln()
}

pub fn rabinowitz_action_with(u: &Loop, tau: f64, scheme: PeriodicScheme) -> f64 {
    -loop_area_with(u, scheme) + tau * mean_hamiltonian(u)
}

pub fn rabinowitz_action(u: &Loop, tau: f64) -> f64 {
    rabinowitz_action_with(u, tau, PeriodicScheme::Centered)
}

/// Minus the area, defined on loops with vanishing mean Hamiltonian.
pub fn restricted_action_with(u: &Loop, scheme: PeriodicScheme) -> Result<f64> {
    let violation = mean_hamiltonian(u).abs();
    if violation > CONSTRAINT_TOL {
        return Err(Error::ConstraintViolated {
            violation,
            tolerance: CONSTRAINT_TOL,
        });
    }
    Ok(-loop_area_with(u, scheme))
}

pub fn restricted_action(u: &Loop) -> Result<f64> {
    restricted_action_with(u, PeriodicScheme::Centered)
}
