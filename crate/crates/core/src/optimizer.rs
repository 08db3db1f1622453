//! Kinematical versus dynamical optima of an expectation value `tr(A·ρ)`.
//!
//! Over all unitaries, `tr(A·Uρ0U†)` is maximized by pairing the eigenvalues of
//! `A` and `ρ0` in the same order. [`maximize_expectation`] searches over
//! piecewise-constant pulses instead, and [`orbit_bound`] over the group
//! generated by the dynamical algebra; for systems that are not completely
//! controllable both can sit strictly below the kinematical bound.

use rand::Rng;
use serde::Serialize;

use crate::closure::LieAlgebraBasis;
use crate::descent::{self, DescentOptions, GradientMethod, Negated, Objective};
use crate::dynamics::{propagate, step_generator, ControlPulse};
use crate::linalg::{self, hermitian_eigensystem, CMatrix, Hermitian, SkewExp};
use crate::models::ControlSystem;
use crate::reachability::{DensityMatrix, OrbitExpectation, SearchOptions};
use crate::{Error, Result};

/// `max_U tr(A·Uρ0U†) = Σ aᵢλᵢ` with both spectra ascending.
pub fn kinematical_bound(a: &Hermitian, r0: &DensityMatrix) -> Result<f64> {
    if a.dim() != r0.dim() {
        return Err(Error::DimensionMismatch { expected: r0.dim(), actual: a.dim() });
    }
    let obs = hermitian_eigensystem(a)?.values;
    let pops = r0.spectrum()?;
    Ok(obs.iter().zip(&pops).map(|(x, y)| x * y).sum())
}

#[derive(Clone, Copy, Debug)]
pub struct OptimizerOptions {
    pub duration: f64,
    pub steps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Initial step of the ascent; grows after accepted moves, halves on rejection.
    pub learning_rate: f64,
    /// Gradient norm below which a restart counts as converged.
    pub grad_tol: f64,
    /// Initial amplitudes are drawn uniformly from `[−init_amplitude, init_amplitude]`.
    pub init_amplitude: f64,
    pub gradient: GradientMethod,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            duration: 10.0,
            steps: 64,
            restarts: 10,
            seed: 0,
            max_iters: 2000,
            learning_rate: 0.1,
            grad_tol: 1e-8,
            init_amplitude: 1.0,
            gradient: GradientMethod::Analytic,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationReport {
    pub kinematical_bound: f64,
    pub best_dynamical_value: f64,
    pub best_pulse: ControlPulse,
    /// Iterations spent by the best restart.
    pub iterations: usize,
    pub converged: bool,
    /// `kinematical_bound − best_dynamical_value`.
    pub gap: f64,
    pub restart_values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationSummary {
    pub kinematical_bound: f64,
    pub best_dynamical_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl OptimizationReport {
    pub fn summary(&self) -> OptimizationSummary {
        OptimizationSummary {
            kinematical_bound: self.kinematical_bound,
            best_dynamical_value: self.best_dynamical_value,
            gap: self.gap,
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// `tr(A·U(f)ρ0U(f)†)` as a function of the flattened `K × M` amplitudes.
pub struct PulseExpectation<'a> {
    pub system: &'a ControlSystem,
    pub r0: &'a DensityMatrix,
    pub observable: &'a Hermitian,
    pub duration: f64,
    pub steps: usize,
}

impl PulseExpectation<'_> {
    fn pulse(&self, x: &[f64]) -> Option<ControlPulse> {
        ControlPulse::from_flat(self.duration, self.steps, self.system.controls().len(), x.to_vec()).ok()
    }
}

impl Objective for PulseExpectation<'_> {
    fn dim(&self) -> usize {
        self.steps * self.system.controls().len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let Some(pulse) = self.pulse(x) else { return f64::NAN };
        match propagate(self.system, &pulse) {
            Ok(p) => {
                let u = &p.final_unitary;
                let rho = u * self.r0.matrix() * u.adjoint();
                linalg::hs_inner_unchecked(self.observable.matrix(), &rho).re
            }
            Err(_) => f64::NAN,
        }
    }

    /// Exact gradient from forward states and backward-propagated observables.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let m = self.system.controls().len();
        let dt = self.duration / self.steps as f64;
        let directions: Vec<CMatrix> =
            self.system.controls().iter().map(|h| h.times_i().scale(-dt).into_inner()).collect();

        let mut exps = Vec::with_capacity(self.steps);
        let mut states = Vec::with_capacity(self.steps);
        let mut rho = self.r0.matrix().clone();
        for k in 0..self.steps {
            let h = Hermitian::hermitize(self.system.hamiltonian(&x[k * m..(k + 1) * m]));
            let Ok(exp) = SkewExp::new(&step_generator(&h, dt)) else {
                grad.iter_mut().for_each(|g| *g = f64::NAN);
                return f64::NAN;
            };
            let u = exp.exp();
            states.push(rho.clone());
            rho = &u * rho * u.adjoint();
            exps.push((exp, u));
        }
        let value = linalg::hs_inner_unchecked(self.observable.matrix(), &rho).re;

        let mut lambda = self.observable.matrix().clone();
        for k in (0..self.steps).rev() {
            let (exp, u) = &exps[k];
            // d tr(Λ U ρ U†) = 2 Re tr(ρ U† Λ dU)
            let left = &states[k] * u.adjoint() * &lambda;
            let left_rot = exp.rotate_in(&left);
            for (j, dir) in directions.iter().enumerate() {
                grad[k * m + j] = 2.0 * exp.derivative_trace(&left_rot, dir).re;
            }
            lambda = u.adjoint() * lambda * u;
        }
        value
    }
}

/// Gradient ascent on `tr(A·U(f)ρ0U(f)†)` over piecewise-constant pulses.
pub fn maximize_expectation(
    system: &ControlSystem,
    r0: &DensityMatrix,
    a: &Hermitian,
    opts: &OptimizerOptions,
) -> Result<OptimizationReport> {
    let n = system.dim();
    if r0.dim() != n || a.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: if r0.dim() != n { r0.dim() } else { a.dim() } });
    }
    if opts.steps == 0 || !opts.duration.is_finite() || opts.duration < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "invalid pulse grid: T = {}, K = {}",
            opts.duration, opts.steps
        )));
    }
    let bound = kinematical_bound(a, r0)?;
    let objective = PulseExpectation { system, r0, observable: a, duration: opts.duration, steps: opts.steps };
    let dim = objective.dim();
    let starts: Vec<Vec<f64>> = (0..opts.restarts.max(1))
        .map(|k| {
            let mut rng = descent::restart_rng(opts.seed, k);
            (0..dim).map(|_| rng.random_range(-opts.init_amplitude..=opts.init_amplitude)).collect()
        })
        .collect();
    let descent_opts = DescentOptions {
        max_iters: opts.max_iters,
        initial_step: opts.learning_rate,
        grad_tol: opts.grad_tol,
        value_target: None,
        gradient: opts.gradient,
    };
    let results = descent::multistart(&Negated(&objective), starts, &descent_opts);
    let best = &results[descent::best_index(&results).expect("at least one restart")];
    if !best.value.is_finite() {
        return Err(Error::Numeric("pulse optimization produced a non-finite objective".into()));
    }
    let best_value = -best.value;
    let best_pulse = ControlPulse::from_flat(opts.duration, opts.steps, system.controls().len(), best.x.clone())?;
    Ok(OptimizationReport {
        kinematical_bound: bound,
        best_dynamical_value: best_value,
        best_pulse,
        iterations: best.iterations,
        converged: best.converged,
        gap: bound - best_value,
        restart_values: results.iter().map(|r| -r.value).collect(),
    })
}

/// Largest `tr(A·exp(X)ρ0exp(X)†)` found over `X` in the span of the basis.
pub fn orbit_bound(
    basis: &LieAlgebraBasis,
    r0: &DensityMatrix,
    a: &Hermitian,
    opts: &SearchOptions,
) -> Result<f64> {
    let n = basis.dim_space();
    if r0.dim() != n || a.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: r0.dim() });
    }
    let objective = OrbitExpectation { basis, r0: r0.matrix(), observable: a.matrix() };
    let descent_opts = DescentOptions {
        max_iters: opts.max_iters,
        initial_step: 0.1,
        grad_tol: 1e-12,
        value_target: None,
        gradient: opts.gradient,
    };
    let results = descent::multistart(&Negated(&objective), opts.starting_points(basis), &descent_opts);
    let best = &results[descent::best_index(&results).expect("at least one restart")];
    if !best.value.is_finite() {
        return Err(Error::Numeric("orbit optimization produced a non-finite objective".into()));
    }
    Ok(-best.value)
}
