//! Rotation, reversal, iteration and concatenation of discrete loops, and a
//! table of the transformation laws of the two action functionals.
//!
//! Iteration and concatenation refine the circle grid (`n m` and `2 m` points)
//! instead of resampling, so every law holds up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CircleGrid;
use crate::symplectization::{
    loop_area, mean_hamiltonian, rabinowitz_action, Loop, CONSTRAINT_TOL,
};

pub const LAW_TOL: f64 = 1e-10;
pub const CLOSURE_TOL: f64 = 1e-12;
pub const BASEPOINT_TOL: f64 = 1e-12;
pub const ROTATION_TOL: f64 = 1e-9;
pub const MULTIPLIER_DENOMINATOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopWithMultiplier {
    #[serde(rename = "loop")]
    pub loop_: Loop,
    pub tau: f64,
}

impl LoopWithMultiplier {
    pub fn new(loop_: Loop, tau: f64) -> Self {
        LoopWithMultiplier { loop_, tau }
    }

    pub fn action(&self) -> f64 {
        rabinowitz_action(&self.loop_, self.tau)
    }

    pub fn reparametrize(&self, rotation: f64) -> Result<Self> {
        Ok(Self::new(reparametrize(rotation, &self.loop_)?, self.tau))
    }

    pub fn reverse(&self) -> Self {
        Self::new(reverse(&self.loop_), -self.tau)
    }

    pub fn iterate(&self, n: usize) -> Result<Self> {
        Ok(Self::new(iterate(n, &self.loop_)?, n as f64 * self.tau))
    }
}

/// Grid shift `q` with `rotation * m = q`, or an error when `rotation` is off-grid.
pub fn rotation_steps(rotation: f64, m: usize) -> Result<i64> {
    let q = rotation * m as f64;
    if !q.is_finite() || (q - q.round()).abs() > ROTATION_TOL {
        return Err(Error::IncompatibleRotation {
            rotation,
            points: m,
        });
    }
    Ok(q.round() as i64)
}

/// `t -> u(t + rotation)`.
pub fn reparametrize(rotation: f64, u: &Loop) -> Result<Loop> {
    let m = u.len();
    let q = rotation_steps(rotation, m)?;
    let k = u.winding();
    let shift = k as f64 * q as f64 / m as f64;
    let idx = |j: usize| (j as i64 + q).rem_euclid(m as i64) as usize;
    let r = (0..m).map(|j| u.r()[idx(j)]).collect();
    let phase = (0..m).map(|j| u.phase()[idx(j)] + shift).collect();
    Loop::from_phase(u.grid(), k, r, phase)
}

/// `t -> u(-t)`.
pub fn reverse(u: &Loop) -> Loop {
    let m = u.len();
    let idx = |j: usize| (m - j) % m;
    let r = (0..m).map(|j| u.r()[idx(j)]).collect();
    let phase = (0..m).map(|j| u.phase()[idx(j)]).collect();
    Loop::from_phase(u.grid(), -u.winding(), r, phase)
        .expect("reversal preserves the lift jumps")
}

/// `t -> u(n t)` on an `n m`-point grid.
pub fn iterate(n: usize, u: &Loop) -> Result<Loop> {
    if n == 0 {
        return Err(Error::InvalidInput("iteration count must be positive".into()));
    }
    let m = u.len();
    let grid = CircleGrid::new(n * m)?;
    let r = (0..n * m).map(|j| u.r()[j % m]).collect();
    let phase = (0..n * m).map(|j| u.phase()[j % m]).collect();
    Loop::from_phase(grid, n as i64 * u.winding(), r, phase)
}

/// `t -> u(n t)` read at indices `n j mod m` on the original grid. Refuses
/// `n >= m/2`, where the samples alias.
pub fn iterate_same_grid(n: usize, u: &Loop) -> Result<Loop> {
    let m = u.len();
    if n == 0 {
        return Err(Error::InvalidInput("iteration count must be positive".into()));
    }
    if 2 * n >= m {
        return Err(Error::Aliasing {
            factor: n,
            points: m,
        });
    }
    let r = (0..m).map(|j| u.r()[(n * j) % m]).collect();
    let phase = (0..m).map(|j| u.phase()[(n * j) % m]).collect();
    Loop::from_phase(u.grid(), n as i64 * u.winding(), r, phase)
}

/// Distance between `u(0)` and `v(0)`, with angles compared mod 1.
pub fn basepoint_distance(u: &Loop, v: &Loop) -> f64 {
    let dr = (u.r()[0] - v.r()[0]).abs();
    let dt = (u.theta_at(0) - v.theta_at(0)).rem_euclid(1.0);
    dr.max(dt.min(1.0 - dt))
}

/// `u # v`: `u` at double speed on `[0, 1/2]`, then `v`, on a `2 m`-point grid.
pub fn concatenate(u: &Loop, v: &Loop) -> Result<Loop> {
    let m = u.len();
    if v.len() != m {
        return Err(Error::GridMismatch(format!(
            "concatenation needs equal circle grids, got {m} and {}",
            v.len()
        )));
    }
    let distance = basepoint_distance(u, v);
    if distance > BASEPOINT_TOL {
        return Err(Error::BasepointMismatch { distance });
    }
    let offset = u.theta_at(m as i64) - v.theta_at(0);
    let mut r = Vec::with_capacity(2 * m);
    let mut theta = Vec::with_capacity(2 * m);
    for j in 0..m {
        r.push(u.r()[j]);
        theta.push(u.theta_at(j as i64));
    }
    for j in 0..m {
        r.push(v.r()[j]);
        theta.push(v.theta_at(j as i64) + offset);
    }
    Loop::from_lift(r, &theta, u.winding() + v.winding())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ConcatMultiplier {
    Defined { rho: f64, denominator: f64 },
    Undefined { denominator: f64 },
}

/// `(tau H(u) + sigma H(v)) / (H(u) + H(v))` with `H` the mean Hamiltonian;
/// undefined when the denominator vanishes.
pub fn concat_multiplier(u: &Loop, v: &Loop, tau: f64, sigma: f64) -> ConcatMultiplier {
    multiplier_formula(mean_hamiltonian(u), mean_hamiltonian(v), tau, sigma)
}

pub fn multiplier_formula(hu: f64, hv: f64, tau: f64, sigma: f64) -> ConcatMultiplier {
    let denominator = hu + hv;
    if denominator.abs() <= MULTIPLIER_DENOMINATOR_TOL {
        ConcatMultiplier::Undefined { denominator }
    } else {
        ConcatMultiplier::Defined {
            rho: (tau * hu + sigma * hv) / denominator,
            denominator,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Counts towards the verdict.
    Law,
    /// Reported for inspection only.
    Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawCheck {
    pub name: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawTable {
    pub checks: Vec<LawCheck>,
    pub passed: bool,
}

impl LawTable {
    fn push(&mut self, name: impl Into<String>, kind: CheckKind, lhs: f64, rhs: f64, tolerance: f64) {
        let error = (lhs - rhs).abs();
        self.checks.push(LawCheck {
            name: name.into(),
            kind,
            lhs,
            rhs,
            error,
            tolerance,
            passed: error <= tolerance,
        });
    }

    fn law(&mut self, name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) {
        self.push(name, CheckKind::Law, lhs, rhs, tolerance);
    }

    fn finish(mut self) -> Self {
        self.passed = self
            .checks
            .iter()
            .all(|c| c.kind == CheckKind::Observation || c.passed);
        self
    }
}

fn in_constraint(u: &Loop) -> bool {
    mean_hamiltonian(u).abs() <= CONSTRAINT_TOL
}

/// Evaluates the symmetry laws on `(u, tau)` and, given a second loop
/// `(v, sigma)` with the same basepoint, the concatenation laws. Laws for the
/// restricted action are only evaluated on loops in the constraint set.
pub fn check_laws(u: &Loop, tau: f64, other: Option<(&Loop, f64)>) -> Result<LawTable> {
    let mut t = LawTable {
        checks: Vec::new(),
        passed: true,
    };
    let m = u.len();
    let a = rabinowitz_action(u, tau);
    let area = loop_area(u);
    let h = mean_hamiltonian(u);
    let constrained = in_constraint(u);
    let x = LoopWithMultiplier::new(u.clone(), tau);

    let rotation = (m / 3) as f64 / m as f64;
    let rotated = x.reparametrize(rotation)?;
    t.law("action_rotation", rotated.action(), a, LAW_TOL);
    t.law("closure_rotation", mean_hamiltonian(&rotated.loop_), h, CLOSURE_TOL);
    if constrained {
        t.law("restricted_rotation", -loop_area(&rotated.loop_), -area, LAW_TOL);
    }

    let reversed = x.reverse();
    t.law("action_reverse", reversed.action(), -a, LAW_TOL);
    t.law("closure_reverse", mean_hamiltonian(&reversed.loop_), h, CLOSURE_TOL);
    if constrained {
        t.law("restricted_reverse", -loop_area(&reversed.loop_), area, LAW_TOL);
    }

    for n in [2usize, 3] {
        let it = x.iterate(n)?;
        let nf = n as f64;
        t.law(format!("action_iterate_{n}"), it.action(), nf * a, LAW_TOL);
        t.law(format!("closure_iterate_{n}"), mean_hamiltonian(&it.loop_), h, CLOSURE_TOL);
        if constrained {
            t.law(format!("restricted_iterate_{n}"), -loop_area(&it.loop_), -nf * area, LAW_TOL);
        }
    }

    let q = rotation_steps(rotation, m)?;
    let lhs = reverse(&reparametrize(rotation, u)?);
    let rhs = reparametrize(-(q as f64) / m as f64, &reverse(u))?;
    t.law("reverse_rotation_relation", lhs.distance(&rhs)?, 0.0, 0.0);
    let six = iterate(6, u)?;
    let composed = iterate(2, &iterate(3, u)?)?;
    t.law("iterate_composition", six.distance(&composed)?, 0.0, 0.0);

    let doubled = concatenate(u, u)?;
    t.law("self_concatenation", doubled.distance(&iterate(2, u)?)?, 0.0, LAW_TOL);

    if let Some((v, sigma)) = other {
        let w = concatenate(u, v)?;
        let hv = mean_hamiltonian(v);
        let area_v = loop_area(v);
        t.law("closure_concatenation", mean_hamiltonian(&w), 0.5 * (h + hv), CLOSURE_TOL);
        t.law("area_additivity", loop_area(&w), area + area_v, LAW_TOL);
        if constrained && in_constraint(v) {
            t.law("restricted_additivity", -loop_area(&w), -area - area_v, LAW_TOL);
            t.push(
                "concatenation_in_constraint",
                CheckKind::Law,
                mean_hamiltonian(&w).abs(),
                0.0,
                CONSTRAINT_TOL,
            );
        }
        let target = a + rabinowitz_action(v, sigma);
        match concat_multiplier(u, v, tau, sigma) {
            ConcatMultiplier::Undefined { denominator } => {
                t.push(
                    "multiplier_undefined_on_constraint",
                    CheckKind::Law,
                    denominator.abs(),
                    0.0,
                    MULTIPLIER_DENOMINATOR_TOL,
                );
            }
            ConcatMultiplier::Defined { rho, .. } => {
                t.push(
                    "action_additivity_with_formula_multiplier",
                    CheckKind::Observation,
                    rabinowitz_action(&w, rho),
                    target,
                    LAW_TOL,
                );
                t.law(
                    "action_additivity_with_doubled_multiplier",
                    rabinowitz_action(&w, 2.0 * rho),
                    target,
                    LAW_TOL,
                );
            }
        }
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectization::Translate;
    use std::f64::consts::PI;

    fn wavy(m: usize, k: i64) -> Loop {
        Loop::from_fn(
            m,
            k,
            |t| 0.2 * (2.0 * PI * t).sin() + 0.1 * (4.0 * PI * t).cos(),
            |t| 0.05 * (2.0 * PI * t).cos(),
        )
        .unwrap()
    }

    #[test]
    fn zero_rotation_and_single_iteration_are_identities() {
        let u = wavy(12, 1);
        assert_eq!(reparametrize(0.0, &u).unwrap(), u);
        assert_eq!(iterate(1, &u).unwrap(), u);
        assert_eq!(iterate_same_grid(1, &u).unwrap(), u);
    }

    #[test]
    fn off_grid_rotation_is_rejected() {
        let u = wavy(12, 1);
        assert!(matches!(
            reparametrize(0.1, &u),
            Err(Error::IncompatibleRotation { .. })
        ));
        // A full turn returns the same samples with the lift raised by the winding.
        let full = reparametrize(1.0, &u).unwrap();
        assert_eq!(full.r(), u.r());
        for (a, b) in full.theta_lift().iter().zip(u.theta_lift()) {
            assert!((a - b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reverse_is_an_involution() {
        let u = wavy(16, 2);
        assert_eq!(reverse(&reverse(&u)), u);
        assert_eq!(reverse(&u).winding(), -2);
    }

    #[test]
    fn same_grid_iteration_guards_aliasing() {
        let u = wavy(8, 1);
        assert!(matches!(iterate_same_grid(4, &u), Err(Error::Aliasing { .. })));
        assert_eq!(iterate_same_grid(3, &u).unwrap().winding(), 3);
    }

    #[test]
    fn concatenation_requires_a_common_basepoint() {
        let u = wavy(8, 1);
        let v = u.translate(0.1);
        assert!(matches!(concatenate(&u, &v), Err(Error::BasepointMismatch { .. })));
    }

    #[test]
    fn multiplier_formula_cases() {
        assert_eq!(
            multiplier_formula(1.0, 1.0, 2.0, 4.0),
            ConcatMultiplier::Defined { rho: 3.0, denominator: 2.0 }
        );
        assert!(matches!(
            multiplier_formula(0.0, 0.0, 2.0, 4.0),
            ConcatMultiplier::Undefined { .. }
        ));
    }

    #[test]
    fn formula_multiplier_misses_additivity_by_half_the_constraint_term() {
        // The concatenation averages the mean Hamiltonian, so the formula value
        // must be doubled for the actions to add.
        let u = Loop::from_fn(16, 1, |t| 0.3 + 0.1 * (2.0 * PI * t).sin(), |_| 0.0).unwrap();
        let v = Loop::from_fn(16, 2, |t| 0.3 + 0.2 * (2.0 * PI * t).sin(), |_| 0.0).unwrap();
        let (tau, sigma) = (2.0, 4.0);
        let w = concatenate(&u, &v).unwrap();
        let target = rabinowitz_action(&u, tau) + rabinowitz_action(&v, sigma);
        let ConcatMultiplier::Defined { rho, denominator } = concat_multiplier(&u, &v, tau, sigma) else {
            panic!("denominator should be nonzero");
        };
        let defect = rabinowitz_action(&w, rho) - target;
        assert!((defect + 0.5 * rho * denominator).abs() < 1e-12);
        assert!((rabinowitz_action(&w, 2.0 * rho) - target).abs() < LAW_TOL);
    }

    #[test]
    fn law_table_on_a_wavy_loop() {
        let u = wavy(24, 1);
        let table = check_laws(&u, 1.7, Some((&u, 0.4))).unwrap();
        assert!(table.passed, "{table:#?}");
        assert!(table.checks.iter().any(|c| c.kind == CheckKind::Observation));
    }

}
