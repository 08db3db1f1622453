//! Randomized invariants of the numerical core.

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qctrl_core::classify::{classify_algebra, AlgebraTag};
use qctrl_core::closure::{closure_defect, generate_dynamical_algebra, ClosureOptions};
use qctrl_core::dynamics::{evolve_density, expectation, propagate, ControlPulse};
use qctrl_core::linalg::{
    commutator, expm_skew, frobenius, hermitian_eigensystem, identity, unitarity_defect, CMatrix, Hermitian,
    SkewHermitian,
};
use qctrl_core::models::{four_level_ladder, ControlSystem};
use qctrl_core::optimizer::kinematical_bound;
use qctrl_core::reachability::{
    decompose_state, form_constraint_check, orbit_search, DensityMatrix, SearchOptions,
};
use qctrl_core::classify::find_invariant_form;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_hermitian(rng: &mut impl Rng, n: usize) -> Hermitian {
    Hermitian::hermitize(random_matrix(rng, n))
}

fn random_skew(rng: &mut impl Rng, n: usize) -> SkewHermitian {
    SkewHermitian::skew_part(random_matrix(rng, n))
}

fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    expm_skew(&random_skew(rng, n).scale(3.0)).unwrap()
}

fn random_populations(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

fn random_state(rng: &mut impl Rng, n: usize) -> DensityMatrix {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        random_populations(rng, n).into_iter().map(|p| Complex64::new(p, 0.0)),
    ));
    let u = random_unitary(rng, n);
    DensityMatrix::new(&u * d * u.adjoint()).unwrap()
}

fn random_system(rng: &mut impl Rng, n: usize, controls: usize) -> ControlSystem {
    let drift = random_hermitian(rng, n);
    let controls = (0..controls).map(|_| random_hermitian(rng, n)).collect();
    ControlSystem::new(drift, controls, "random").unwrap()
}

/// Hamiltonians `i·A` with `A` real antisymmetric, so every generator is real
/// antisymmetric and the algebra sits inside `so(N)`.
fn random_orthogonal_system(rng: &mut impl Rng, n: usize, controls: usize) -> ControlSystem {
    let mut make = || {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = (&a - a.transpose()) * 0.5;
        Hermitian::new(a.map(|v| Complex64::new(0.0, v))).unwrap()
    };
    let drift = make();
    let controls = (0..controls).map(|_| make()).collect();
    ControlSystem::new(drift, controls, "orthogonal").unwrap()
}

fn random_pulse(rng: &mut impl Rng, steps: usize, controls: usize) -> ControlPulse {
    let amps = (0..steps * controls).map(|_| rng.random_range(-2.0..2.0)).collect();
    ControlPulse::from_flat(rng.random_range(0.1..5.0), steps, controls, amps).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_identity(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng(seed);
        let (a, b, c) = (random_skew(&mut rng, n), random_skew(&mut rng, n), random_skew(&mut rng, n));
        let (a, b, c) = (a.matrix(), b.matrix(), c.matrix());
        let bc = commutator(b, c).unwrap();
        let ca = commutator(c, a).unwrap();
        let ab = commutator(a, b).unwrap();
        let sum = commutator(a, &bc).unwrap() + commutator(b, &ca).unwrap() + commutator(c, &ab).unwrap();
        prop_assert!(frobenius(&sum) <= 1e-10);
    }

    #[test]
    fn exponential_of_skew_is_unitary(seed in any::<u64>(), n in 1usize..=6, scale in 0.0f64..20.0) {
        let mut rng = rng(seed);
        let x = random_skew(&mut rng, n).scale(scale);
        let u = expm_skew(&x).unwrap();
        prop_assert!(unitarity_defect(&u) <= 1e-10);
        prop_assert!((u.determinant().norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn eigensystem_reconstructs(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = rng(seed);
        let h = random_hermitian(&mut rng, n);
        let eig = hermitian_eigensystem(&h).unwrap();
        let rebuilt = eig.apply(|l| Complex64::new(l, 0.0));
        prop_assert!(frobenius(&(rebuilt - h.matrix())) <= 1e-10);
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(unitarity_defect(&eig.vectors) <= 1e-10);
    }

    #[test]
    fn propagator_unitarity_scales_with_steps(seed in any::<u64>(), n in 2usize..=5, steps in 1usize..=64) {
        let mut rng = rng(seed);
        let sys = random_system(&mut rng, n, 2);
        let pulse = random_pulse(&mut rng, steps, 2);
        let result = propagate(&sys, &pulse).unwrap();
        prop_assert!(result.unitarity_defect <= 1e-9 * steps as f64);
    }

    #[test]
    fn evolution_preserves_spectrum_and_purity(seed in any::<u64>(), n in 2usize..=5, steps in 1usize..=32) {
        let mut rng = rng(seed);
        let sys = random_system(&mut rng, n, 1);
        let r0 = random_state(&mut rng, n);
        let u = propagate(&sys, &random_pulse(&mut rng, steps, 1)).unwrap().final_unitary;
        let r1 = evolve_density(&r0, &u).unwrap();
        let before = sorted(r0.spectrum().unwrap());
        let after = sorted(r1.spectrum().unwrap());
        prop_assert!(max_abs_diff(&before, &after) <= 1e-10);
        prop_assert!((r0.purity() - r1.purity()).abs() <= 1e-10);
    }

    #[test]
    fn expectation_never_exceeds_kinematical_bound(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng(seed);
        let r0 = random_state(&mut rng, n);
        let a = random_hermitian(&mut rng, n);
        let bound = kinematical_bound(&a, &r0).unwrap();
        for _ in 0..8 {
            let r = evolve_density(&r0, &random_unitary(&mut rng, n)).unwrap();
            prop_assert!(expectation(&a, &r).unwrap() <= bound + 1e-12);
        }
    }

    #[test]
    fn kinematical_bound_matches_permutation_maximum(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = random_populations(&mut rng, n);
        let brute = (0..n)
            .permutations(n)
            .map(|perm| perm.iter().enumerate().map(|(i, &j)| a[i] * p[j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let bound = kinematical_bound(&Hermitian::diag(&a), &DensityMatrix::diagonal(&p).unwrap()).unwrap();
        prop_assert!((bound - brute).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closure_is_invariant_under_control_order(seed in any::<u64>(), n in 2usize..=5, m in 2usize..=3) {
        let mut rng = rng(seed);
        let sys = if rng.random_bool(0.5) { random_system(&mut rng, n, m) } else { random_orthogonal_system(&mut rng, n, m) };
        let mut reversed = sys.controls().to_vec();
        reversed.reverse();
        let permuted = ControlSystem::new(sys.drift().clone(), reversed, "permuted").unwrap();
        let opts = ClosureOptions::default();
        let a = generate_dynamical_algebra(&sys, &opts);
        let b = generate_dynamical_algebra(&permuted, &opts);
        prop_assert_eq!(a.len(), b.len());
        prop_assert_eq!(classify_algebra(&a).tag, classify_algebra(&b).tag);
        prop_assert!(closure_defect(&a) <= 1e-8);
    }

    #[test]
    fn closure_is_invariant_under_conjugation(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng(seed);
        let sys = random_orthogonal_system(&mut rng, n, 1);
        let v = random_unitary(&mut rng, n);
        let opts = ClosureOptions::default();
        let a = classify_algebra(&generate_dynamical_algebra(&sys, &opts));
        let b = classify_algebra(&generate_dynamical_algebra(&sys.conjugated(&v), &opts));
        prop_assert_eq!(a.dim, b.dim);
        prop_assert_eq!(a.tag, b.tag);
    }

    #[test]
    fn closure_grows_with_controls(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng(seed);
        let sys = random_orthogonal_system(&mut rng, n, 1);
        let mut more = sys.controls().to_vec();
        more.push(random_hermitian(&mut rng, n));
        let extended = ControlSystem::new(sys.drift().clone(), more, "extended").unwrap();
        let opts = ClosureOptions::default();
        prop_assert!(
            generate_dynamical_algebra(&extended, &opts).len() >= generate_dynamical_algebra(&sys, &opts).len()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn orthogonal_systems_are_never_fully_controllable(seed in any::<u64>(), n in 3usize..=5, m in 1usize..=3) {
        let mut rng = rng(seed);
        let sys = random_orthogonal_system(&mut rng, n, m);
        let class = classify_algebra(&generate_dynamical_algebra(&sys, &ClosureOptions::default()));
        prop_assert!(!matches!(class.tag, AlgebraTag::FullSu | AlgebraTag::FullU), "tag {}", class.tag);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn orbit_preserves_form_constraint(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let basis = generate_dynamical_algebra(&four_level_ladder(), &ClosureOptions::default());
        let form = find_invariant_form(&basis).unwrap();
        let r0 = DensityMatrix::diagonal(&[0.35, 0.30, 0.20, 0.15]).unwrap();
        let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let u = expm_skew(&basis.combine(&coeffs)).unwrap();
        let moved = evolve_density(&r0, &u).unwrap();
        prop_assert!(form_constraint_check(&decompose_state(&moved), &form).holds);
    }

    #[test]
    fn more_restarts_never_hurt(seed in any::<u64>()) {
        let basis = generate_dynamical_algebra(&four_level_ladder(), &ClosureOptions::default());
        let r0 = DensityMatrix::diagonal(&[0.35, 0.30, 0.20, 0.15]).unwrap();
        let r1 = DensityMatrix::diagonal(&[0.30, 0.35, 0.20, 0.15]).unwrap();
        let few = SearchOptions { restarts: 2, seed, max_iters: 100, ..Default::default() };
        let many = SearchOptions { restarts: 4, ..few };
        let d_few = orbit_search(&basis, &r0, &r1, &few).unwrap().best_distance;
        let d_many = orbit_search(&basis, &r0, &r1, &many).unwrap().best_distance;
        prop_assert!(d_many <= d_few);
    }
}

#[test]
fn identity_propagator_for_zero_duration() {
    let mut rng = rng(7);
    let sys = random_system(&mut rng, 3, 1);
    let pulse = ControlPulse::zeros(0.0, 4, 1).unwrap();
    let u = propagate(&sys, &pulse).unwrap().final_unitary;
    assert!(frobenius(&(u - identity(3))) <= 1e-14);
}
