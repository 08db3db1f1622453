//! Piecewise-constant propagation and density-matrix evolution.

use crate::linalg::{self, expm_skew, unitarity_defect, CMatrix, Hermitian, SkewHermitian};
use crate::models::ControlSystem;
use crate::reachability::DensityMatrix;
use crate::{Error, Result};

/// Largest `‖U†U − I‖_F` accepted by [`evolve_density`].
pub const UNITARITY_TOL: f64 = 1e-8;

/// Control amplitudes `f_m`, constant on each of `steps` equal slices of `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPulse {
    duration: f64,
    steps: usize,
    controls: usize,
    /// Row-major `steps × controls`.
    amplitudes: Vec<f64>,
}

impl ControlPulse {
    pub fn new(duration: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let controls = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != controls) {
            return Err(Error::InvalidPulse("rows have different lengths".into()));
        }
        let steps = rows.len();
        Self::from_flat(duration, steps, controls, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(duration: f64, steps: usize, controls: usize, amplitudes: Vec<f64>) -> Result<Self> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::InvalidPulse(format!("duration must be finite and non-negative, got {duration}")));
        }
        if steps == 0 || controls == 0 {
            return Err(Error::InvalidPulse(format!("need at least one step and one control, got {steps}×{controls}")));
        }
        if amplitudes.len() != steps * controls {
            return Err(Error::InvalidPulse(format!(
                "expected {} amplitudes for {steps} steps × {controls} controls, got {}",
                steps * controls,
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidPulse("non-finite amplitude".into()));
        }
        Ok(ControlPulse { duration, steps, controls, amplitudes })
    }

    pub fn zeros(duration: f64, steps: usize, controls: usize) -> Result<Self> {
        Self::from_flat(duration, steps, controls, vec![0.0; steps * controls])
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn controls(&self) -> usize {
        self.controls
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.steps as f64
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.amplitudes[k * self.controls..(k + 1) * self.controls]
    }

    /// This pulse followed by `next`; both must share the step length.
    pub fn then(&self, next: &ControlPulse) -> Result<ControlPulse> {
        if next.controls != self.controls {
            return Err(Error::InvalidPulse("control counts differ".into()));
        }
        if (next.dt() - self.dt()).abs() > 1e-12 * self.dt().max(1.0) {
            return Err(Error::InvalidPulse("step lengths differ".into()));
        }
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.extend_from_slice(&next.amplitudes);
        Self::from_flat(self.duration + next.duration, self.steps + next.steps, self.controls, amplitudes)
    }

    /// Same waveform on a grid with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<ControlPulse> {
        if factor == 0 {
            return Err(Error::InvalidPulse("refinement factor must be positive".into()));
        }
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * factor);
        for k in 0..self.steps {
            for _ in 0..factor {
                amplitudes.extend_from_slice(self.step(k));
            }
        }
        Self::from_flat(self.duration, self.steps * factor, self.controls, amplitudes)
    }
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    pub final_unitary: CMatrix,
    /// `U(t_k, 0)` after each step, when requested.
    pub intermediate_unitaries: Option<Vec<CMatrix>>,
    pub unitarity_defect: f64,
}

/// `exp(−iΔt·(H0 + Σ f_m H_m))` for one slice.
pub fn step_propagator(system: &ControlSystem, amplitudes: &[f64], dt: f64) -> Result<CMatrix> {
    let h = Hermitian::hermitize(system.hamiltonian(amplitudes));
    expm_skew(&step_generator(&h, dt))
}

pub(crate) fn step_generator(h: &Hermitian, dt: f64) -> SkewHermitian {
    h.times_i().scale(-dt)
}

pub fn propagate(system: &ControlSystem, pulse: &ControlPulse) -> Result<PropagationResult> {
    propagate_with(system, pulse, false)
}

/// `U = U_K ⋯ U_1`, later slices multiplying from the left.
pub fn propagate_with(system: &ControlSystem, pulse: &ControlPulse, keep_intermediate: bool) -> Result<PropagationResult> {
    if pulse.controls() != system.controls().len() {
        return Err(Error::InvalidPulse(format!(
            "pulse has {} controls, system has {}",
            pulse.controls(),
            system.controls().len()
        )));
    }
    let dt = pulse.dt();
    let mut u = linalg::identity(system.dim());
    let mut intermediate = keep_intermediate.then(|| Vec::with_capacity(pulse.steps()));
    for k in 0..pulse.steps() {
        u = step_propagator(system, pulse.step(k), dt)? * u;
        if let Some(list) = intermediate.as_mut() {
            list.push(u.clone());
        }
    }
    let unitarity_defect = unitarity_defect(&u);
    Ok(PropagationResult { final_unitary: u, intermediate_unitaries: intermediate, unitarity_defect })
}

/// `Uρ0U†`.
pub fn evolve_density(r0: &DensityMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    let n = linalg::check_square(u)?;
    if n != r0.dim() {
        return Err(Error::DimensionMismatch { expected: r0.dim(), actual: n });
    }
    let defect = unitarity_defect(u);
    if defect > UNITARITY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let evolved = u * r0.matrix() * u.adjoint();
    Ok(DensityMatrix::assume_valid(Hermitian::hermitize(evolved)))
}

/// `tr(A·ρ)`.
pub fn expectation(a: &Hermitian, r: &DensityMatrix) -> Result<f64> {
    if a.dim() != r.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), actual: a.dim() });
    }
    Ok(linalg::hs_inner_unchecked(a.matrix(), r.matrix()).re)
}
