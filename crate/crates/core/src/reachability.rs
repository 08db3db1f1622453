//! Density matrices and dynamical reachability.
//!
//! A target `ρ1` is reachable from `ρ0` when `ρ1 = Uρ0U†` for some `U` in the
//! dynamical group. Reachability requires equal spectra (kinematical
//! admissibility); when the algebra admits an invariant form `J`, the
//! traceless part of every reachable state must also satisfy `xᵀJ + Jx = 0`
//! whenever the initial state's does. An orbit search over `exp(Σ cₖ eₖ)`
//! supplies constructive evidence for the remaining cases.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::classify::{find_invariant_form, form_defect, InvariantForm};
use crate::closure::{generate_dynamical_algebra, ClosureOptions, LieAlgebraBasis};
use crate::descent::{self, DescentOptions, GradientMethod, Objective};
use crate::linalg::{
    self, frobenius, hermitian_eigensystem, identity, traceless_part, CMatrix, Hermitian, SkewExp, SkewHermitian,
};
use crate::models::ControlSystem;
use crate::{Error, Result};

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
/// Entrywise tolerance on sorted spectra for kinematical admissibility.
pub const SPECTRUM_TOL: f64 = 1e-8;
/// Relative tolerance of the form constraint on a state.
pub const FORM_CHECK_TOL: f64 = 1e-8;
/// Frobenius distance below which the orbit search certifies reachability.
pub const REACH_TOL: f64 = 1e-6;

/// Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Hermitian);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::from_hermitian(Hermitian::named(m, "density matrix")?)
    }

    pub fn from_hermitian(h: Hermitian) -> Result<Self> {
        let tr = linalg::trace(h.matrix()).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let eig = hermitian_eigensystem(&h)?;
        let min = eig.values[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix(h))
    }

    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::from_hermitian(Hermitian::diag(populations))
    }

    /// `I/N`.
    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix(Hermitian::hermitize(identity(n).unscale(n as f64)))
    }

    /// `|k⟩⟨k|`.
    pub fn basis_state(n: usize, k: usize) -> Self {
        let mut pops = vec![0.0; n];
        pops[k] = 1.0;
        DensityMatrix(Hermitian::diag(&pops))
    }

    pub(crate) fn assume_valid(h: Hermitian) -> Self {
        DensityMatrix(h)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn hermitian(&self) -> &Hermitian {
        &self.0
    }

    /// Eigenvalues, ascending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigensystem(&self.0)?.values)
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        linalg::hs_inner_unchecked(self.matrix(), self.matrix()).re
    }
}

/// `ρ = −i·x + α·I` with `x = i·(ρ − α·I)` skew-Hermitian and traceless.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDecomposition {
    pub alpha: f64,
    pub x: SkewHermitian,
}

impl StateDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.x.dim();
        self.x.matrix().map(|z| z * -linalg::I) + identity(n).scale(self.alpha)
    }
}

pub fn decompose_state(r: &DensityMatrix) -> StateDecomposition {
    let n = r.dim();
    let alpha = linalg::trace(r.matrix()).re / n as f64;
    let x = traceless_part(r.hermitian()).times_i();
    StateDecomposition { alpha, x }
}

/// Sorted spectra agree entrywise within [`SPECTRUM_TOL`].
pub fn kinematically_admissible(r0: &DensityMatrix, r1: &DensityMatrix) -> Result<bool> {
    if r0.dim() != r1.dim() {
        return Err(Error::DimensionMismatch { expected: r0.dim(), actual: r1.dim() });
    }
    let (a, b) = (r0.spectrum()?, r1.spectrum()?);
    Ok(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= SPECTRUM_TOL))
}

/// Minimal `‖Uρ0U† − ρ1‖_F` over all unitaries: the distance between sorted spectra.
pub fn kinematic_distance(r0: &DensityMatrix, r1: &DensityMatrix) -> Result<f64> {
    let (a, b) = (r0.spectrum()?, r1.spectrum()?);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FormCheck {
    pub holds: bool,
    pub residual: f64,
}

/// Evaluates `‖xᵀJ + Jx‖_F` on the decomposition.
pub fn form_constraint_check(d: &StateDecomposition, form: &InvariantForm) -> FormCheck {
    let x = d.x.matrix();
    let residual = form_defect(x, form.matrix());
    let scale = frobenius(x);
    let holds = scale == 0.0 || residual <= FORM_CHECK_TOL * scale;
    FormCheck { holds, residual }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub gradient: GradientMethod,
    /// Distance at which the search stops early.
    pub tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 20,
            seed: 0,
            max_iters: 2000,
            gradient: GradientMethod::FiniteDifference { step: 1e-6 },
            tolerance: REACH_TOL,
        }
    }
}

impl SearchOptions {
    /// Restart 0 starts at the origin; the others draw coefficients uniformly
    /// from `[−π, π]`, divided by the basis-element norms.
    pub(crate) fn starting_points(&self, basis: &LieAlgebraBasis) -> Vec<Vec<f64>> {
        let norms: Vec<f64> = basis.elements().iter().map(|e| frobenius(e.matrix())).collect();
        (0..self.restarts.max(1))
            .map(|k| {
                if k == 0 {
                    return vec![0.0; basis.len()];
                }
                let mut rng = descent::restart_rng(self.seed, k);
                norms.iter().map(|nk| rng.random_range(-PI..PI) / nk).collect()
            })
            .collect()
    }
}

/// Shared evaluation of `U = exp(Σ cₖ eₖ)` for orbit objectives.
struct OrbitPoint {
    exp: SkewExp,
    u: CMatrix,
}

impl OrbitPoint {
    fn new(basis: &LieAlgebraBasis, coeffs: &[f64]) -> Option<Self> {
        let exp = SkewExp::new(&basis.combine(coeffs)).ok()?;
        let u = exp.exp();
        Some(OrbitPoint { exp, u })
    }

    fn evolve(&self, r0: &CMatrix) -> CMatrix {
        &self.u * r0 * self.u.adjoint()
    }

    /// `Re tr(L·dU_k)` for each basis direction, `L = left`.
    fn directional(&self, basis: &LieAlgebraBasis, left: &CMatrix, grad: &mut [f64], factor: f64) {
        let left_rot = self.exp.rotate_in(left);
        for (g, e) in grad.iter_mut().zip(basis.elements()) {
            *g = factor * self.exp.derivative_trace(&left_rot, e.matrix()).re;
        }
    }
}

/// `‖exp(X)ρ0exp(X)† − ρ1‖²_F`.
pub(crate) struct OrbitDistance<'a> {
    pub basis: &'a LieAlgebraBasis,
    pub r0: &'a CMatrix,
    pub r1: &'a CMatrix,
}

impl Objective for OrbitDistance<'_> {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn value(&self, c: &[f64]) -> f64 {
        match OrbitPoint::new(self.basis, c) {
            Some(p) => frobenius(&(p.evolve(self.r0) - self.r1)).powi(2),
            None => f64::NAN,
        }
    }

    fn value_and_gradient(&self, c: &[f64], grad: &mut [f64]) -> f64 {
        let Some(p) = OrbitPoint::new(self.basis, c) else {
            grad.iter_mut().for_each(|g| *g = f64::NAN);
            return f64::NAN;
        };
        let diff = p.evolve(self.r0) - self.r1;
        // d‖D‖² = 4 Re tr(ρ0 U† D dU)
        let left = self.r0 * p.u.adjoint() * &diff;
        p.directional(self.basis, &left, grad, 4.0);
        frobenius(&diff).powi(2)
    }
}

/// `tr(A·exp(X)ρ0exp(X)†)`.
pub(crate) struct OrbitExpectation<'a> {
    pub basis: &'a LieAlgebraBasis,
    pub r0: &'a CMatrix,
    pub observable: &'a CMatrix,
}

impl Objective for OrbitExpectation<'_> {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn value(&self, c: &[f64]) -> f64 {
        match OrbitPoint::new(self.basis, c) {
            Some(p) => linalg::hs_inner_unchecked(self.observable, &p.evolve(self.r0)).re,
            None => f64::NAN,
        }
    }

    fn value_and_gradient(&self, c: &[f64], grad: &mut [f64]) -> f64 {
        let Some(p) = OrbitPoint::new(self.basis, c) else {
            grad.iter_mut().for_each(|g| *g = f64::NAN);
            return f64::NAN;
        };
        let left = self.r0 * p.u.adjoint() * self.observable;
        p.directional(self.basis, &left, grad, 2.0);
        linalg::hs_inner_unchecked(self.observable, &p.evolve(self.r0)).re
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitSearch {
    pub best_distance: f64,
    pub best_coeffs: Vec<f64>,
    pub seed: u64,
    pub restarts: usize,
}

/// Minimizes `‖exp(X)ρ0exp(X)† − ρ1‖_F` over `X` in the span of the basis.
pub fn orbit_search(
    basis: &LieAlgebraBasis,
    r0: &DensityMatrix,
    r1: &DensityMatrix,
    opts: &SearchOptions,
) -> Result<OrbitSearch> {
    if r0.dim() != basis.dim_space() || r1.dim() != basis.dim_space() {
        return Err(Error::DimensionMismatch { expected: basis.dim_space(), actual: r0.dim().max(r1.dim()) });
    }
    let objective = OrbitDistance { basis, r0: r0.matrix(), r1: r1.matrix() };
    let descent_opts = DescentOptions {
        max_iters: opts.max_iters,
        initial_step: 0.1,
        grad_tol: 1e-14,
        value_target: Some((0.1 * opts.tolerance).powi(2)),
        gradient: opts.gradient,
    };
    let results = descent::multistart(&objective, opts.starting_points(basis), &descent_opts);
    let best = descent::best_index(&results).expect("at least one restart");
    let best = &results[best];
    if !best.value.is_finite() {
        return Err(Error::Numeric("orbit search produced a non-finite distance".into()));
    }
    Ok(OrbitSearch {
        best_distance: best.value.max(0.0).sqrt(),
        best_coeffs: best.x.clone(),
        seed: opts.seed,
        restarts: opts.restarts.max(1),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ReachableNumeric,
    ExcludedByForm,
    ExcludedKinematic,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ReachableNumeric => "reachable_numeric",
            Verdict::ExcludedByForm => "excluded_by_form",
            Verdict::ExcludedKinematic => "excluded_kinematic",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReachabilityVerdict {
    pub kinematic: bool,
    /// Present iff the algebra admits an invariant form; false when exactly one
    /// of the two states satisfies the form constraint.
    pub form_necessary: Option<bool>,
    pub initial_form: Option<FormCheck>,
    pub target_form: Option<FormCheck>,
    /// Best orbit distance found; absent when the search was skipped.
    pub orbit_distance: Option<f64>,
    pub verdict: Verdict,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReachOptions {
    pub closure: ClosureOptions,
    pub search: SearchOptions,
}

pub fn reachable_verdict(
    system: &ControlSystem,
    r0: &DensityMatrix,
    r1: &DensityMatrix,
    opts: &ReachOptions,
) -> Result<ReachabilityVerdict> {
    let basis = generate_dynamical_algebra(system, &opts.closure);
    reachable_verdict_with_basis(&basis, r0, r1, &opts.search)
}

pub fn reachable_verdict_with_basis(
    basis: &LieAlgebraBasis,
    r0: &DensityMatrix,
    r1: &DensityMatrix,
    opts: &SearchOptions,
) -> Result<ReachabilityVerdict> {
    let n = basis.dim_space();
    for r in [r0, r1] {
        if r.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: r.dim() });
        }
    }
    let kinematic = kinematically_admissible(r0, r1)?;
    if !kinematic {
        return Ok(ReachabilityVerdict {
            kinematic,
            form_necessary: None,
            initial_form: None,
            target_form: None,
            orbit_distance: None,
            verdict: Verdict::ExcludedKinematic,
            seed: opts.seed,
        });
    }

    let form = find_invariant_form(basis);
    let checks = form.as_ref().map(|j| {
        (form_constraint_check(&decompose_state(r0), j), form_constraint_check(&decompose_state(r1), j))
    });
    let form_necessary = checks.map(|(a, b)| a.holds == b.holds);

    let search = orbit_search(basis, r0, r1, opts)?;
    let verdict = if form_necessary == Some(false) {
        Verdict::ExcludedByForm
    } else if search.best_distance <= opts.tolerance {
        Verdict::ReachableNumeric
    } else {
        Verdict::Inconclusive
    };
    Ok(ReachabilityVerdict {
        kinematic,
        form_necessary,
        initial_form: checks.map(|c| c.0),
        target_form: checks.map(|c| c.1),
        orbit_distance: Some(search.best_distance),
        verdict,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::ClosureOptions;
    use crate::linalg::{diag_real, from_real_rows};
    use crate::models::four_level_ladder;
    use approx::assert_abs_diff_eq;

    fn rho0() -> DensityMatrix {
        DensityMatrix::diagonal(&[0.35, 0.30, 0.20, 0.15]).unwrap()
    }

    fn rho1() -> DensityMatrix {
        DensityMatrix::diagonal(&[0.30, 0.35, 0.20, 0.15]).unwrap()
    }

    fn sp2_form() -> CMatrix {
        from_real_rows(&[
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, -1.0, 0.0, 0.0],
            &[-1.0, 0.0, 0.0, 0.0],
        ])
    }

    fn sp2() -> LieAlgebraBasis {
        generate_dynamical_algebra(&four_level_ladder(), &ClosureOptions::default())
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
        let not_herm = from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]);
        assert!(matches!(DensityMatrix::new(not_herm), Err(Error::NotHermitian { .. })));
        assert!(DensityMatrix::new(from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])).is_ok());
    }

    #[test]
    fn admissibility_examples() {
        assert!(kinematically_admissible(&rho0(), &rho1()).unwrap());
        assert!(!kinematically_admissible(&rho0(), &DensityMatrix::maximally_mixed(4)).unwrap());
        assert!(kinematically_admissible(&rho0(), &rho0()).unwrap());
    }

    #[test]
    fn decomposition_examples() {
        let d = decompose_state(&rho0());
        assert_abs_diff_eq!(d.alpha, 0.25, epsilon = 1e-15);
        let expected = diag_real(&[0.10, 0.05, -0.05, -0.10]).map(|z| z * linalg::I);
        assert!(frobenius(&(d.x.matrix() - expected)) <= 1e-15);
        assert!(frobenius(&(d.reconstruct() - rho0().matrix())) <= 1e-12);

        let d = decompose_state(&DensityMatrix::maximally_mixed(4));
        assert_abs_diff_eq!(d.alpha, 0.25, epsilon = 1e-15);
        assert!(frobenius(d.x.matrix()) <= 1e-15);

        let d = decompose_state(&rho1());
        let expected = diag_real(&[0.05, 0.10, -0.05, -0.10]).map(|z| z * linalg::I);
        assert!(frobenius(&(d.x.matrix() - expected)) <= 1e-15);
    }

    #[test]
    fn form_check_examples() {
        let basis = sp2();
        let form = InvariantForm::from_matrix(sp2_form(), &basis).unwrap();
        let check = form_constraint_check(&decompose_state(&rho0()), &form);
        assert!(check.holds);
        assert!(check.residual <= 1e-15);

        let check = form_constraint_check(&decompose_state(&rho1()), &form);
        assert!(!check.holds);
        assert_abs_diff_eq!(check.residual, 0.1, epsilon = 1e-10);

        let check = form_constraint_check(&decompose_state(&DensityMatrix::maximally_mixed(4)), &form);
        assert!(check.holds);
        assert_eq!(check.residual, 0.0);
    }

    #[test]
    fn orbit_search_identity_target() {
        let r = orbit_search(&sp2(), &rho0(), &rho0(), &SearchOptions::default()).unwrap();
        assert!(r.best_distance <= 1e-8);
        assert!(r.best_coeffs.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn orbit_distance_gradient_matches_finite_differences() {
        let basis = sp2();
        let (r0, r1) = (rho0(), rho1());
        let obj = OrbitDistance { basis: &basis, r0: r0.matrix(), r1: r1.matrix() };
        let mut rng = descent::restart_rng(3, 0);
        let c: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut analytic = vec![0.0; basis.len()];
        let mut fd = vec![0.0; basis.len()];
        descent::evaluate(&obj, &c, GradientMethod::Analytic, &mut analytic);
        descent::evaluate(&obj, &c, GradientMethod::FiniteDifference { step: 1e-6 }, &mut fd);
        for (a, b) in analytic.iter().zip(&fd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn verdict_examples() {
        let sys = four_level_ladder();
        let opts = ReachOptions::default();
        let v = reachable_verdict(&sys, &rho0(), &rho1(), &opts).unwrap();
        assert_eq!(v.verdict, Verdict::ExcludedByForm);
        assert_eq!(v.form_necessary, Some(false));
        assert!(v.orbit_distance.unwrap() > 0.05);

        let v = reachable_verdict(&sys, &rho0(), &rho0(), &opts).unwrap();
        assert_eq!(v.verdict, Verdict::ReachableNumeric);

        let v = reachable_verdict(&sys, &rho0(), &DensityMatrix::maximally_mixed(4), &opts).unwrap();
        assert_eq!(v.verdict, Verdict::ExcludedKinematic);
        assert!(!v.kinematic);
        assert!(v.orbit_distance.is_none());
    }

    #[test]
    fn kinematic_distance_of_permuted_state_is_zero() {
        assert_abs_diff_eq!(kinematic_distance(&rho0(), &rho1()).unwrap(), 0.0, epsilon = 1e-14);
        let d = kinematic_distance(&rho0(), &DensityMatrix::maximally_mixed(4)).unwrap();
        assert_abs_diff_eq!(d, (0.01f64 + 0.0025 + 0.0025 + 0.01).sqrt(), epsilon = 1e-12);
    }
}
