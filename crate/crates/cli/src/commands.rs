//! The analyses behind each subcommand, returning report sections.

use std::collections::BTreeMap;

use qctrl_core::classify::{classify_algebra, controllability_verdict};
use qctrl_core::closure::{generate_dynamical_algebra, ClosureOptions};
use qctrl_core::descent::GradientMethod;
use qctrl_core::dynamics::{evolve_density, expectation, propagate_with, ControlPulse};
use qctrl_core::linalg::frobenius;
use qctrl_core::optimizer::{kinematical_bound, maximize_expectation, orbit_bound, OptimizerOptions};
use qctrl_core::reachability::{reachable_verdict_with_basis, SearchOptions};

use crate::report::{Classification, FormSummary, Optimization, Reachability, Simulation, TargetDistance};
use crate::spec_file::SystemSpec;
use crate::{CliError, Result};

/// Settings shared by all commands.
#[derive(Clone, Copy, Debug)]
pub struct Context {
    pub seed: u64,
    pub tolerance_scale: f64,
}

impl Context {
    fn closure(&self) -> ClosureOptions {
        ClosureOptions { tolerance_scale: self.tolerance_scale }
    }
}

pub fn classify(spec: &SystemSpec, ctx: &Context) -> Result<Classification> {
    let basis = generate_dynamical_algebra(&spec.system, &ctx.closure());
    let class = classify_algebra(&basis);
    let verdict = controllability_verdict(&class, spec.system.dim());
    let form = class.form.as_ref().map(|f| FormSummary {
        symmetry: f.symmetry(),
        residual: f.residual(),
        null_space_dim: f.null_space_dim(),
        matrix: f.matrix().into(),
    });
    let mut notes = class.notes.clone();
    if let Some(f) = &class.form {
        notes.extend(f.notes().iter().cloned());
    }
    if !verdict.notes.is_empty() {
        notes.push(verdict.notes.clone());
    }
    Ok(Classification {
        dimension: class.dim,
        tag: class.tag,
        contains_identity: basis.contains_identity(),
        ill_conditioned: basis.ill_conditioned(),
        form,
        complete: verdict.complete,
        pure_state: verdict.pure_state,
        notes,
    })
}

pub fn reach(spec: &SystemSpec, from: &str, to: &str, restarts: usize, ctx: &Context) -> Result<Reachability> {
    let r0 = spec.state(from)?;
    let r1 = spec.state(to)?;
    let basis = generate_dynamical_algebra(&spec.system, &ctx.closure());
    let search = SearchOptions { restarts, seed: ctx.seed, ..Default::default() };
    let v = reachable_verdict_with_basis(&basis, r0, r1, &search)?;
    Ok(Reachability {
        from: from.to_string(),
        to: to.to_string(),
        kinematic: v.kinematic,
        form_necessary: v.form_necessary,
        initial_form: v.initial_form,
        target_form: v.target_form,
        orbit_distance: v.orbit_distance,
        verdict: v.verdict,
        restarts: search.restarts,
    })
}

#[derive(Clone, Debug)]
pub struct OptimizeArgs {
    pub observable: String,
    pub from: String,
    pub duration: f64,
    pub steps: usize,
    pub restarts: usize,
    pub max_iters: usize,
}

pub fn optimize(spec: &SystemSpec, args: &OptimizeArgs, ctx: &Context) -> Result<(Optimization, ControlPulse)> {
    if !args.duration.is_finite() || args.duration < 0.0 {
        return Err(CliError::Validation(format!("duration must be finite and non-negative, got {}", args.duration)));
    }
    if args.steps == 0 || args.restarts == 0 {
        return Err(CliError::Validation("steps and restarts must be positive".into()));
    }
    let a = spec.observable(&args.observable)?;
    let r0 = spec.state(&args.from)?;

    let bound = kinematical_bound(a, r0)?;
    let basis = generate_dynamical_algebra(&spec.system, &ctx.closure());
    let search = SearchOptions { seed: ctx.seed, gradient: GradientMethod::Analytic, ..Default::default() };
    let orbit = orbit_bound(&basis, r0, a, &search)?;
    let opts = OptimizerOptions {
        duration: args.duration,
        steps: args.steps,
        restarts: args.restarts,
        seed: ctx.seed,
        max_iters: args.max_iters,
        ..Default::default()
    };
    let report = maximize_expectation(&spec.system, r0, a, &opts)?;
    let section = Optimization {
        observable: args.observable.clone(),
        from: args.from.clone(),
        duration: args.duration,
        steps: args.steps,
        restarts: args.restarts,
        kinematical_bound: bound,
        orbit_bound: orbit,
        best_dynamical_value: report.best_dynamical_value,
        gap: report.gap,
        iterations: report.iterations,
        converged: report.converged,
        pulse_file: None,
    };
    Ok((section, report.best_pulse))
}

pub fn simulate(
    spec: &SystemSpec,
    pulse: &ControlPulse,
    state: &str,
    target: Option<&str>,
    show_unitary: bool,
) -> Result<Simulation> {
    let r0 = spec.state(state)?;
    let controls = spec.system.controls().len();
    if pulse.controls() != controls {
        return Err(CliError::Validation(format!(
            "pulse has {} control(s), system has {controls}",
            pulse.controls()
        )));
    }
    let target = target.map(|name| spec.state(name).map(|r| (name, r))).transpose()?;

    let result = propagate_with(&spec.system, pulse, false)?;
    let r = evolve_density(r0, &result.final_unitary)?;
    let expectations = spec
        .observables
        .iter()
        .map(|(name, a)| Ok((name.clone(), expectation(a, &r)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let target = target.map(|(name, r1)| TargetDistance {
        name: name.to_string(),
        distance: frobenius(&(r.matrix() - r1.matrix())),
    });
    Ok(Simulation {
        state: state.to_string(),
        duration: pulse.duration(),
        steps: pulse.steps(),
        unitarity_defect: result.unitarity_defect,
        final_state: r.matrix().into(),
        final_unitary: show_unitary.then(|| (&result.final_unitary).into()),
        expectations,
        target,
    })
}
