//! The maps between flow lines of the Lagrange-multiplier flow and of the
//! constrained flow, and round-trip diagnostics.
//!
//! `psi` moves every loop onto the constraint with its shift `sigma_u(s)`.
//! `phi` goes back by solving the Kazdan–Warner problem with forcing
//! `b_v = d_s area(v_s)` and translating by `-rho_v`. Both are total on
//! fields; whether the input is a flow line is tracked by certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{
    grad1_residual, grad2_residual, lagrange_multiplier_from_loops, CylinderMap, MultiplierPath,
};
use crate::grid::{GridFunction, PeriodicScheme};
use crate::kazdan_warner::{continuation_solve, KwProblem, KwSolution, DEFAULT_TOL};
use crate::symplectization::CONSTRAINT_TOL;

/// Tolerated negativity of the sampled `b_v` before `phi` refuses it.
pub const NEGATIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M1Element {
    pub u: CylinderMap,
    pub tau: MultiplierPath,
    /// Interior sup of the field and multiplier residuals.
    pub residual_certificate: f64,
}

impl M1Element {
    pub fn certify(u: CylinderMap, tau: MultiplierPath, scheme: PeriodicScheme) -> Result<Self> {
        let residual_certificate = grad1_residual(&u, &tau, 1.0, scheme)?.certificate();
        Ok(M1Element {
            u,
            tau,
            residual_certificate,
        })
    }

    pub fn admitted(&self, tol: f64) -> bool {
        self.residual_certificate <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M2Element {
    pub v: CylinderMap,
    pub residual_certificate: f64,
    pub constraint_certificate: f64,
}

impl M2Element {
    pub fn certify(v: CylinderMap, scheme: PeriodicScheme) -> Self {
        let r = grad2_residual(&v, scheme);
        M2Element {
            residual_certificate: r.field_linf(),
            constraint_certificate: r.constraint_linf(),
            v,
        }
    }

    pub fn admitted(&self, residual_tol: f64, constraint_tol: f64) -> bool {
        self.residual_certificate <= residual_tol && self.constraint_certificate <= constraint_tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiOutput {
    pub element: M2Element,
    pub sigma: GridFunction,
    /// `tau - d_s sigma_u`, the multiplier carried along by the translation.
    pub implied_multiplier: MultiplierPath,
}

pub fn psi(e: &M1Element, scheme: PeriodicScheme) -> Result<PsiOutput> {
    let sigma = e.u.sigma_shift();
    let v = e.u.translate_by(&sigma)?;
    let implied = e.tau.tau.zip_with(&sigma.derivative(), |t, d| t - d)?;
    Ok(PsiOutput {
        element: M2Element::certify(v, scheme),
        sigma,
        implied_multiplier: MultiplierPath::new(implied),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BProfile {
    /// Nonnegative profile handed to the Kazdan–Warner solver.
    pub b: GridFunction,
    pub raw: GridFunction,
    pub raw_min: f64,
    pub clamped: usize,
}

/// `b_v = d_s area(v_s)`, with negative samples set to zero and counted.
pub fn b_profile(v: &CylinderMap, scheme: PeriodicScheme) -> BProfile {
    let raw = lagrange_multiplier_from_loops(v, scheme).tau.derivative();
    let clamped = raw.values().iter().filter(|&&x| x < 0.0).count();
    BProfile {
        b: raw.map(|x| x.max(0.0)),
        raw_min: raw.min(),
        raw,
        clamped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiConfig {
    pub kw_tol: f64,
    pub negativity_tol: f64,
    pub constraint_tol: f64,
    pub scheme: PeriodicScheme,
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig {
            kw_tol: DEFAULT_TOL,
            negativity_tol: NEGATIVITY_TOL,
            constraint_tol: CONSTRAINT_TOL,
            scheme: PeriodicScheme::Centered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiOutput {
    pub element: M1Element,
    pub kw: KwSolution,
    pub b: BProfile,
    /// `int v^* lambda`, before adding `d_s rho_v`.
    pub area: MultiplierPath,
}

pub fn phi(e: &M2Element, cfg: &PhiConfig) -> Result<PhiOutput> {
    if e.constraint_certificate > cfg.constraint_tol {
        return Err(Error::ConstraintViolated {
            violation: e.constraint_certificate,
            tolerance: cfg.constraint_tol,
        });
    }
    let b = b_profile(&e.v, cfg.scheme);
    if b.raw_min < -cfg.negativity_tol {
        return Err(Error::NegativeProfile { min: b.raw_min });
    }
    let problem = KwProblem::new(b.b.clone())?;
    let kw = continuation_solve(&problem, cfg.kw_tol)?;
    let u = e.v.translate_by(&kw.rho.map(|r| -r))?;
    let area = lagrange_multiplier_from_loops(&e.v, cfg.scheme);
    let tau = area.tau.zip_with(&kw.rho.derivative(), |a, d| a + d)?;
    let element = M1Element::certify(u, MultiplierPath::new(tau), cfg.scheme)?;
    Ok(PhiOutput {
        element,
        kw,
        b,
        area,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiPhiReport {
    pub distance: f64,
    pub chi_linf: f64,
    pub exp_chi_minus_one_linf: f64,
    pub b_l1: f64,
    pub b_raw_min: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub kw_iterations: usize,
    pub kw_residual: f64,
    pub phi_certificate: f64,
    pub psi_constraint: f64,
}

/// `Psi(Phi(v))` against `v`.
pub fn roundtrip_psi_phi(e: &M2Element, cfg: &PhiConfig) -> Result<PsiPhiReport> {
    let w = phi(e, cfg)?;
    let back = psi(&w.element, cfg.scheme)?;
    let chi = back.sigma.zip_with(&w.kw.rho, |s, r| s - r)?;
    Ok(PsiPhiReport {
        distance: back.element.v.distance(&e.v)?,
        chi_linf: chi.max_abs(),
        exp_chi_minus_one_linf: chi.map(f64::exp_m1).max_abs(),
        b_l1: w.b.b.integrate(),
        b_raw_min: w.b.raw_min,
        rho_min: w.kw.rho.min(),
        rho_max: w.kw.rho.max(),
        kw_iterations: w.kw.total_newton_iterations,
        kw_residual: w.kw.final_residual_linf,
        phi_certificate: w.element.residual_certificate,
        psi_constraint: back.element.constraint_certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiPsiReport {
    pub field_distance: f64,
    pub multiplier_distance: f64,
    pub chi: GridFunction,
    pub chi_linf: f64,
    /// Sup of `D_s D_s chi - (e^chi - 1)(mean H(u) + 1)` over the rows where
    /// both centered differences are interior. Composing the first-order
    /// operator mirrors how the identity arises from the two multiplier rows
    /// and is blind to the odd-even mode a compact stencil would amplify.
    pub kw2_residual_linf: f64,
    /// Largest positive interior local maximum of `chi` (0 if none).
    pub positive_max: f64,
    /// Largest magnitude of a negative interior local minimum (0 if none).
    pub negative_min: f64,
    /// `min_s mean_t e^{a}`, which must stay positive.
    pub positivity_min: f64,
    pub input_certificate: f64,
    pub psi_constraint: f64,
    pub output_certificate: f64,
    pub b_raw_min: f64,
    pub rho_min: f64,
}

/// `Phi(Psi(u, tau))` against `(u, tau)`.
pub fn roundtrip_phi_psi(e: &M1Element, cfg: &PhiConfig) -> Result<PhiPsiReport> {
    let v = psi(e, cfg.scheme)?;
    let w = phi(&v.element, cfg)?;
    let field_distance = w.element.u.distance(&e.u)?;
    let multiplier_distance = w
        .element
        .tau
        .tau
        .zip_with(&e.tau.tau, |a, b| a - b)?
        .max_abs();
    let chi = v.sigma.zip_with(&w.kw.rho, |s, r| s - r)?;
    let weight = e.u.mean_hamiltonian().map(|h| h + 1.0);
    let dd = chi.derivative().derivative();
    let n = chi.len();
    let c = chi.values();
    let mut kw2 = 0.0_f64;
    let mut positive_max = 0.0_f64;
    let mut negative_min = 0.0_f64;
    for i in 1..n - 1 {
        if i >= 2 && i + 2 < n {
            let r = dd.values()[i] - c[i].exp_m1() * weight.values()[i];
            kw2 = kw2.max(r.abs());
        }
        if c[i] > 0.0 && c[i] >= c[i - 1] && c[i] >= c[i + 1] {
            positive_max = positive_max.max(c[i]);
        }
        if c[i] < 0.0 && c[i] <= c[i - 1] && c[i] <= c[i + 1] {
            negative_min = negative_min.max(-c[i]);
        }
    }
    Ok(PhiPsiReport {
        field_distance,
        multiplier_distance,
        chi_linf: chi.max_abs(),
        chi,
        kw2_residual_linf: kw2,
        positive_max,
        negative_min,
        positivity_min: weight.min(),
        input_certificate: e.residual_certificate,
        psi_constraint: v.element.constraint_certificate,
        output_certificate: w.element.residual_certificate,
        b_raw_min: w.b.raw_min,
        rho_min: w.kw.rho.min(),
    })
}
