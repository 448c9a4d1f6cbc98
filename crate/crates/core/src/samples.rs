//! Seeded test data: Gaussian forcings, perturbed critical loops, synthetic
//! constrained fields and random loops on the constraint set.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::CylinderMap;
use crate::grid::{GridFunction, LineGrid};
use crate::symplectization::{sigma_shift, Loop, Translate};

/// `mass / (width sqrt(2 pi)) exp(-(s - center)^2 / (2 width^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center: f64,
    pub width: f64,
    pub mass: f64,
}

impl GaussianBump {
    pub fn eval(&self, s: f64) -> f64 {
        let z = (s - self.center) / self.width;
        self.mass / (self.width * (2.0 * PI).sqrt()) * (-0.5 * z * z).exp()
    }
}

/// Sum of bumps. Reads either a bare array or `{"bumps": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "BSpecRepr")]
pub struct BSpec {
    pub bumps: Vec<GaussianBump>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BSpecRepr {
    List(Vec<GaussianBump>),
    Object { bumps: Vec<GaussianBump> },
}

impl From<BSpecRepr> for BSpec {
    fn from(r: BSpecRepr) -> Self {
        match r {
            BSpecRepr::List(bumps) | BSpecRepr::Object { bumps } => BSpec { bumps },
        }
    }
}

impl BSpec {
    pub fn zero() -> Self {
        BSpec { bumps: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.bumps.iter().enumerate() {
            if !(b.width.is_finite() && b.width > 0.0) {
                return Err(Error::InvalidInput(format!("bump {i}: width must be positive")));
            }
            if !(b.mass.is_finite() && b.mass >= 0.0) {
                return Err(Error::InvalidInput(format!("bump {i}: mass must be nonnegative")));
            }
            if !b.center.is_finite() {
                return Err(Error::InvalidInput(format!("bump {i}: center must be finite")));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: LineGrid) -> GridFunction {
        // Folding from +0 keeps an empty spec at +0 rather than -0.
        GridFunction::from_fn(grid, |s| self.bumps.iter().fold(0.0, |acc, b| acc + b.eval(s)))
    }

    pub fn total_mass(&self) -> f64 {
        self.bumps.iter().map(|b| b.mass).sum()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One to three bumps with centers in `[-5, 5]`, widths in `[0.5, 2]` and
/// total mass `l1`.
pub fn random_forcing(rng: &mut impl Rng, l1: f64) -> BSpec {
    let count = rng.gen_range(1..=3);
    let mut bumps: Vec<GaussianBump> = (0..count)
        .map(|_| GaussianBump {
            center: rng.gen_range(-5.0..=5.0),
            width: rng.gen_range(0.5..=2.0),
            mass: rng.gen_range(0.2..=1.0),
        })
        .collect();
    let total: f64 = bumps.iter().map(|b| b.mass).sum();
    for b in &mut bumps {
        b.mass *= l1 / total;
    }
    BSpec { bumps }
}

/// `count` forcings with masses drawn from `[lo, hi]`.
pub fn random_forcings(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<BSpec> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let l1 = r.gen_range(lo..=hi);
            random_forcing(&mut r, l1)
        })
        .collect()
}

/// Critical loop with `a = delta sin(2 pi t)`.
pub fn perturbed_critical(m: usize, winding: i64, delta: f64) -> Result<Loop> {
    Loop::from_fn(m, winding, |t| delta * (2.0 * PI * t).sin(), |_| 0.0)
}

/// The perturbed critical loop moved onto the constraint set.
pub fn normalized_perturbed_critical(m: usize, winding: i64, delta: f64) -> Result<Loop> {
    let l = perturbed_critical(m, winding, delta)?;
    Ok(l.translate(sigma_shift(&l)))
}

/// Shape of a synthetic constrained field: `a = alpha(s) cos 2 pi t`,
/// `phase = beta(s) sin 2 pi t`, each row shifted onto the constraint.
/// Both profiles are `amp (1 + tanh(slope (s - center))) / 2 + floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticField {
    pub alpha_floor: f64,
    pub alpha_amp: f64,
    pub beta_floor: f64,
    pub beta_amp: f64,
    pub center: f64,
    pub slope: f64,
}

impl SyntheticField {
    pub fn random(rng: &mut impl Rng) -> Self {
        SyntheticField {
            alpha_floor: rng.gen_range(0.0..=0.1),
            alpha_amp: rng.gen_range(0.0..=0.1),
            beta_floor: rng.gen_range(0.0..=0.05),
            beta_amp: rng.gen_range(0.02..=0.1),
            center: rng.gen_range(-1.0..=1.0),
            slope: rng.gen_range(0.5..=2.0),
        }
    }

    fn profile(amp: f64, floor: f64, center: f64, slope: f64, s: f64) -> f64 {
        floor + 0.5 * amp * (1.0 + (slope * (s - center)).tanh())
    }

    pub fn build(&self, line: LineGrid, m: usize, winding: i64) -> Result<CylinderMap> {
        if self.alpha_floor < 0.0 || self.alpha_amp < 0.0 || self.beta_floor < 0.0 || self.beta_amp < 0.0 {
            return Err(Error::InvalidInput("profile amplitudes must be nonnegative".into()));
        }
        let loops = line
            .points()
            .into_iter()
            .map(|s| {
                let alpha = Self::profile(self.alpha_amp, self.alpha_floor, self.center, self.slope, s);
                let beta = Self::profile(self.beta_amp, self.beta_floor, self.center, self.slope, s);
                let l = Loop::from_fn(
                    m,
                    winding,
                    move |t| alpha * (2.0 * PI * t).cos(),
                    move |t| beta * (2.0 * PI * t).sin(),
                )?;
                Ok(l.translate(sigma_shift(&l)))
            })
            .collect::<Result<Vec<_>>>()?;
        CylinderMap::new(line, loops)
    }
}

/// Loop on the constraint set with `r(0) = r0` and `theta(0) = 0`.
///
/// `r = r0 + lambda g` with `g(0) = 0`; `lambda > 0` is fixed by bisection so
/// that the mean of `e^r` is one. Needs `r0 < 0`.
pub fn random_constrained_loop(rng: &mut impl Rng, m: usize, winding: i64, r0: f64) -> Result<Loop> {
    if r0 >= 0.0 {
        return Err(Error::InvalidInput(format!("basepoint radius must be negative, got {r0}")));
    }
    let modes = 3;
    let cs: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let ds: Vec<f64> = (0..modes).map(|_| rng.gen_range(0.2..=1.0)).collect();
    let es: Vec<f64> = (0..modes).map(|_| rng.gen_range(-0.05..=0.05)).collect();
    let g: Vec<f64> = (0..m)
        .map(|j| {
            let t = j as f64 / m as f64;
            (0..modes)
                .map(|l| {
                    let w = 2.0 * PI * (l + 1) as f64 * t;
                    (cs[l] * (w.cos() - 1.0) + ds[l] * w.sin()) / (l + 1) as f64
                })
                .sum()
        })
        .collect();
    let target = (-r0).exp();
    let mean_exp = |lambda: f64| g.iter().map(|x| (lambda * x).exp()).sum::<f64>() / m as f64;
    let mut hi = 1.0;
    while mean_exp(hi) < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidInput("no scaling reaches the constraint".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_exp(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let r: Vec<f64> = g.iter().map(|x| r0 + lambda * x).collect();
    let phase: Vec<f64> = (0..m)
        .map(|j| {
            let t = j as f64 / m as f64;
            (0..modes).map(|l| es[l] * (2.0 * PI * (l + 1) as f64 * t).sin()).sum()
        })
        .collect();
    Loop::from_phase(crate::grid::CircleGrid::new(m)?, winding, r, phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectization::mean_hamiltonian;

    #[test]
    fn bspec_reads_both_shapes() {
        let a: BSpec = serde_json::from_str(r#"[{"center":0,"width":1,"mass":2}]"#).unwrap();
        let b: BSpec = serde_json::from_str(r#"{"bumps":[{"center":0,"width":1,"mass":2}]}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_mass(), 2.0);
        let zero = BSpec::zero().sample(LineGrid::new(1.0, 3).unwrap());
        assert!(zero.values().iter().all(|v| v.to_bits() == 0));
    }

    #[test]
    fn bump_mass_is_its_integral() {
        let spec = BSpec {
            bumps: vec![GaussianBump { center: 0.5, width: 0.7, mass: 1.3 }],
        };
        let b = spec.sample(LineGrid::new(20.0, 4001).unwrap());
        assert!((b.integrate() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn forcings_are_reproducible_and_in_range() {
        let a = random_forcings(7, 20, 0.1, 4.0);
        assert_eq!(a, random_forcings(7, 20, 0.1, 4.0));
        for f in &a {
            assert!((1..=3).contains(&f.bumps.len()));
            let m = f.total_mass();
            assert!((0.1 - 1e-12..=4.0 + 1e-12).contains(&m));
            for b in &f.bumps {
                assert!((-5.0..=5.0).contains(&b.center) && (0.5..=2.0).contains(&b.width));
            }
        }
    }

    #[test]
    fn constrained_loops_share_their_basepoint() {
        let mut r = rng(3);
        let u = random_constrained_loop(&mut r, 64, 1, -0.1).unwrap();
        let v = random_constrained_loop(&mut r, 64, 2, -0.1).unwrap();
        assert!(mean_hamiltonian(&u).abs() < 1e-13);
        assert!(mean_hamiltonian(&v).abs() < 1e-13);
        assert_eq!(u.r()[0], -0.1);
        assert_eq!(v.r()[0], -0.1);
        assert_eq!(u.theta_at(0), 0.0);
        assert_eq!(v.theta_at(0), 0.0);
    }

    #[test]
    fn synthetic_fields_satisfy_the_constraint() {
        let mut r = rng(11);
        let f = SyntheticField::random(&mut r).build(LineGrid::new(4.0, 41).unwrap(), 32, 1).unwrap();
        assert!(f.mean_hamiltonian().max_abs() < 1e-13);
    }
}
