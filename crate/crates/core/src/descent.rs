//! First-order minimization with backtracking and seeded random restarts.
//!
//! Restarts run in parallel; results come back in restart order so that the
//! best-of reduction does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A smooth objective on `R^d`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Exact gradient written into `grad`; returns the value at `x`.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GradientMethod {
    /// Central differences with the given step.
    FiniteDifference { step: f64 },
    Analytic,
}

#[derive(Clone, Copy, Debug)]
pub struct DescentOptions {
    pub max_iters: usize,
    pub initial_step: f64,
    /// Stop once the gradient norm falls below this.
    pub grad_tol: f64,
    /// Stop once the value falls below this.
    pub value_target: Option<f64>,
    pub gradient: GradientMethod,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            max_iters: 2000,
            initial_step: 0.1,
            grad_tol: 1e-10,
            value_target: None,
            gradient: GradientMethod::Analytic,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DescentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 1e6;
const MIN_STEP: f64 = 1e-14;

/// Writes the gradient at `x` into `grad` and returns the objective value.
pub fn evaluate<O: Objective + ?Sized>(obj: &O, x: &[f64], method: GradientMethod, grad: &mut [f64]) -> f64 {
    match method {
        GradientMethod::Analytic => obj.value_and_gradient(x, grad),
        GradientMethod::FiniteDifference { step } => {
            let mut probe = x.to_vec();
            for k in 0..x.len() {
                probe[k] = x[k] + step;
                let plus = obj.value(&probe);
                probe[k] = x[k] - step;
                let minus = obj.value(&probe);
                probe[k] = x[k];
                grad[k] = (plus - minus) / (2.0 * step);
            }
            obj.value(x)
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Gradient descent with Armijo backtracking; the step doubles after every
/// accepted move and halves on every rejected trial.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: Vec<f64>, opts: &DescentOptions) -> DescentResult {
    let d = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; d];
    let mut value = evaluate(obj, &x, opts.gradient, &mut grad);
    let mut grad_norm = norm(&grad);
    let mut step = opts.initial_step;
    let mut trial = vec![0.0; d];
    let mut iterations = 0;

    let done = |value: f64, grad_norm: f64| {
        grad_norm <= opts.grad_tol || opts.value_target.is_some_and(|t| value <= t)
    };

    while iterations < opts.max_iters && !done(value, grad_norm) {
        iterations += 1;
        let decrease = ARMIJO * grad_norm * grad_norm;
        let mut accepted = false;
        while step >= MIN_STEP {
            for k in 0..d {
                trial[k] = x[k] - step * grad[k];
            }
            let candidate = obj.value(&trial);
            if candidate.is_finite() && candidate <= value - step * decrease {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut x, &mut trial);
        value = evaluate(obj, &x, opts.gradient, &mut grad);
        grad_norm = norm(&grad);
        step = (step * 2.0).min(MAX_STEP);
    }

    DescentResult { x, converged: done(value, grad_norm), value, grad_norm, iterations }
}

/// Negates an objective so that [`minimize`] maximizes it.
pub struct Negated<'a, O: ?Sized>(pub &'a O);

impl<O: Objective + ?Sized> Objective for Negated<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        -self.0.value(x)
    }

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let v = self.0.value_and_gradient(x, grad);
        grad.iter_mut().for_each(|g| *g = -*g);
        -v
    }
}

/// Independent random stream for restart `index` under `seed`.
pub fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs [`minimize`] from each start; results are in start order.
pub fn multistart<O: Objective + ?Sized>(obj: &O, starts: Vec<Vec<f64>>, opts: &DescentOptions) -> Vec<DescentResult> {
    starts.into_par_iter().map(|x0| minimize(obj, x0, opts)).collect()
}

/// Index of the smallest value, earliest index on ties.
pub fn best_index(results: &[DescentResult]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, r) in results.iter().enumerate() {
        if best.is_none_or(|b| r.value < results[b].value) {
            best = Some(k);
        }
    }
    best
}
