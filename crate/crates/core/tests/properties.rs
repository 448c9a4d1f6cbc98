//! Randomised invariants of the loop operations, the two correspondence maps
//! and the shift equation.

use proptest::prelude::*;

use symplab::correspondence::{psi, roundtrip_psi_phi, M1Element, M2Element, PhiConfig};
use symplab::flows::{CylinderMap, MultiplierPath};
use symplab::grid::{GridFunction, LineGrid, PeriodicScheme};
use symplab::kazdan_warner::{continuation_solve, kappa, solve_from, KwProblem};
use symplab::loopspace::*;
use symplab::samples::{random_constrained_loop, random_forcing, rng, SyntheticField};
use symplab::symplectization::{loop_area, mean_hamiltonian, rabinowitz_action, Loop};

fn free_loop(m: usize, k: i64, c: [f64; 4]) -> Loop {
    use std::f64::consts::PI;
    Loop::from_fn(
        m,
        k,
        move |t| c[0] + c[1] * (2.0 * PI * t).cos() + c[2] * (4.0 * PI * t).sin(),
        move |t| 0.2 * c[3] * (2.0 * PI * t).sin(),
    )
    .unwrap()
}

fn loop_strategy() -> impl Strategy<Value = Loop> {
    (
        prop::sample::select(vec![8usize, 16, 32]),
        -2i64..=2,
        prop::array::uniform4(-0.5f64..0.5),
    )
        .prop_map(|(m, k, c)| free_loop(m, k, c))
}

/// Mean of `e^r - 1` by the trapezoid rule on the closed loop, written
/// without the library quadrature.
fn mean_h_oracle(r: &[f64]) -> f64 {
    let m = r.len();
    let closed: Vec<f64> = r.iter().chain(std::iter::once(&r[0])).map(|x| x.exp() - 1.0).collect();
    let inner: f64 = closed[1..m].iter().sum();
    (inner + 0.5 * (closed[0] + closed[m])) / m as f64
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn multiplier_formula_averages_the_multipliers() {
    assert_eq!(
        multiplier_formula(1.0, 1.0, 2.0, 4.0),
        ConcatMultiplier::Defined { rho: 3.0, denominator: 2.0 }
    );
    assert!(matches!(multiplier_formula(1.0, -1.0, 2.0, 4.0), ConcatMultiplier::Undefined { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversal_conjugates_rotation(u in loop_strategy(), q in 0usize..8) {
        let rot = q as f64 / u.len() as f64;
        let lhs = reverse(&reparametrize(rot, &u).unwrap());
        let rhs = reparametrize(-rot, &reverse(&u)).unwrap();
        prop_assert_eq!(lhs.r(), rhs.r());
        prop_assert!(lhs.distance(&rhs).unwrap() <= 1e-15);
    }

    #[test]
    fn reversal_is_an_involution(u in loop_strategy()) {
        let back = reverse(&reverse(&u));
        prop_assert_eq!(back.winding(), u.winding());
        prop_assert_eq!(back.r(), u.r());
        prop_assert_eq!(back.phase(), u.phase());
    }

    #[test]
    fn iteration_composes(u in loop_strategy(), a in 1usize..4, b in 1usize..4) {
        let twice = iterate(a, &iterate(b, &u).unwrap()).unwrap();
        let once = iterate(a * b, &u).unwrap();
        prop_assert_eq!(twice.winding(), once.winding());
        prop_assert_eq!(twice.r(), once.r());
        prop_assert_eq!(twice.phase(), once.phase());
    }

    #[test]
    fn actions_transform_under_the_symmetries(u in loop_strategy(), tau in -3.0f64..3.0, n in 1usize..5) {
        let a = rabinowitz_action(&u, tau);
        prop_assert!(close(rabinowitz_action(&iterate(n, &u).unwrap(), n as f64 * tau), n as f64 * a, 1e-12));
        prop_assert!(close(rabinowitz_action(&reverse(&u), -tau), -a, 1e-12));
        let rotated = reparametrize(3.0 / u.len() as f64, &u).unwrap();
        prop_assert!(close(rabinowitz_action(&rotated, tau), a, 1e-12));
        prop_assert!(close(mean_hamiltonian(&iterate(n, &u).unwrap()), mean_hamiltonian(&u), 1e-12));
    }

    #[test]
    fn mean_hamiltonian_matches_the_trapezoid_oracle(u in loop_strategy()) {
        prop_assert!(close(mean_hamiltonian(&u), mean_h_oracle(u.r()), 1e-13));
    }

    #[test]
    fn concatenation_adds_areas_and_averages_hamiltonians(
        seed in any::<u64>(),
        m in prop::sample::select(vec![16usize, 32, 64]),
        ku in 1i64..3,
        kv in 1i64..3,
    ) {
        let mut r = rng(seed);
        let u = random_constrained_loop(&mut r, m, ku, -0.1).unwrap();
        let v = random_constrained_loop(&mut r, m, kv, -0.1).unwrap();
        let w = concatenate(&u, &v).unwrap();
        prop_assert_eq!(w.len(), 2 * m);
        prop_assert_eq!(w.winding(), ku + kv);
        prop_assert!(close(loop_area(&w), loop_area(&u) + loop_area(&v), 1e-12));
        let avg = 0.5 * (mean_h_oracle(u.r()) + mean_h_oracle(v.r()));
        prop_assert!(close(mean_hamiltonian(&w), avg, 1e-12));
        prop_assert!(mean_hamiltonian(&w).abs() <= 1e-12);
        let table = check_laws(&u, 1.0, Some((&v, 1.0))).unwrap();
        prop_assert!(table.passed, "{:?}", table);
    }

    #[test]
    fn psi_lands_on_the_constraint(seed in any::<u64>()) {
        let mut r = rng(seed);
        let line = LineGrid::new(2.0, 21).unwrap();
        let m = 16;
        let a: Vec<f64> = (0..21 * m).map(|_| rand::Rng::gen_range(&mut r, -0.5..0.5)).collect();
        let phase: Vec<f64> = (0..21 * m).map(|_| rand::Rng::gen_range(&mut r, -0.1..0.1)).collect();
        let u = CylinderMap::from_rows(line, symplab::grid::CircleGrid::new(m).unwrap(), 1, &a, &phase).unwrap();
        let tau = MultiplierPath::new(GridFunction::constant(line, 1.0));
        let e = M1Element::certify(u, tau, PeriodicScheme::Centered).unwrap();
        let out = psi(&e, PeriodicScheme::Centered).unwrap();
        prop_assert!(out.element.constraint_certificate <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn psi_undoes_phi_on_synthetic_fields(seed in any::<u64>()) {
        let field = SyntheticField::random(&mut rng(seed));
        let v = field.build(LineGrid::new(4.0, 81).unwrap(), 16, 1).unwrap();
        let e = M2Element::certify(v, PeriodicScheme::Centered);
        let report = roundtrip_psi_phi(&e, &PhiConfig::default()).unwrap();
        prop_assert!(report.distance <= 1e-6, "{:?}", report);
        prop_assert!(report.exp_chi_minus_one_linf <= 1e-6);
        prop_assert!(report.rho_min >= -1e-8);
        prop_assert!(report.psi_constraint <= 1e-12);
    }

    #[test]
    fn shift_solutions_are_bounded_and_unique(seed in any::<u64>(), l1 in 0.1f64..4.0) {
        let spec = random_forcing(&mut rng(seed), l1);
        let problem = KwProblem::new(spec.sample(LineGrid::new(10.0, 401).unwrap())).unwrap();
        let sol = continuation_solve(&problem, 1e-10).unwrap();
        prop_assert!(sol.rho.min() >= -1e-8);
        prop_assert!(sol.rho.max() <= kappa(problem.b_l1()) + 1e-8);
        let start = GridFunction::constant(*problem.grid(), 0.5 * kappa(problem.b_l1()));
        let other = solve_from(&problem, &start, 1e-10).unwrap();
        let gap = sol.rho.zip_with(&other.rho, |a, b| a - b).unwrap().max_abs();
        prop_assert!(gap <= 1e-8);
    }
}
