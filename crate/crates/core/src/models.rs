//! Control systems `H = H0 + Σ f_m(t) H_m` and the truncated-oscillator family.

use crate::linalg::{c, CMatrix, Hermitian};
use crate::{Error, Result};

/// Drift Hamiltonian plus an ordered list of control Hamiltonians.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSystem {
    drift: Hermitian,
    controls: Vec<Hermitian>,
    label: String,
}

impl ControlSystem {
    pub fn new(drift: Hermitian, controls: Vec<Hermitian>, label: impl Into<String>) -> Result<Self> {
        let n = drift.dim();
        if n < 2 {
            return Err(Error::InvalidModel(format!("dimension must be at least 2, got {n}")));
        }
        if controls.is_empty() {
            return Err(Error::InvalidModel("at least one control Hamiltonian is required".into()));
        }
        for h in &controls {
            if h.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: h.dim() });
            }
        }
        Ok(ControlSystem { drift, controls, label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn drift(&self) -> &Hermitian {
        &self.drift
    }

    pub fn controls(&self) -> &[Hermitian] {
        &self.controls
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `H0 + Σ f_m H_m`.
    pub fn hamiltonian(&self, amplitudes: &[f64]) -> CMatrix {
        let mut h = self.drift.matrix().clone();
        for (f, hm) in amplitudes.iter().zip(&self.controls) {
            h += hm.matrix().scale(*f);
        }
        h
    }

    /// Same system with every Hamiltonian conjugated by a unitary `V`.
    pub fn conjugated(&self, v: &CMatrix) -> ControlSystem {
        let conj = |h: &Hermitian| Hermitian::hermitize(v * h.matrix() * v.adjoint());
        ControlSystem {
            drift: conj(&self.drift),
            controls: self.controls.iter().map(conj).collect(),
            label: self.label.clone(),
        }
    }
}

/// Nearest-neighbour dipole-coupled `N`-level ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorSpec {
    pub energies: Vec<f64>,
    pub dipoles: Vec<f64>,
    /// Optional per-transition signs multiplying the dipoles.
    pub signs: Option<Vec<f64>>,
}

impl OscillatorSpec {
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.energies.len();
        if n < 2 {
            return Err(Error::InvalidModel(format!("need at least 2 levels, got {n}")));
        }
        if self.dipoles.len() != n - 1 {
            return Err(Error::InvalidModel(format!(
                "expected {} dipole moments for {n} levels, got {}",
                n - 1,
                self.dipoles.len()
            )));
        }
        if let Some(signs) = &self.signs {
            if signs.len() != n - 1 {
                return Err(Error::InvalidModel(format!(
                    "expected {} signs for {n} levels, got {}",
                    n - 1,
                    signs.len()
                )));
            }
        }
        let values = self.energies.iter().chain(&self.dipoles).chain(self.signs.iter().flatten());
        if values.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite oscillator parameter".into()));
        }
        if self.energies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel("energies must be strictly increasing".into()));
        }
        if self.dipoles.contains(&0.0) {
            return Err(Error::InvalidModel("dipole moments must be nonzero".into()));
        }
        Ok(())
    }
}

/// Drift `diag(energies)`, single control tridiagonal with entries `sᵢ·dᵢ`.
pub fn build_oscillator(spec: &OscillatorSpec, label: impl Into<String>) -> Result<ControlSystem> {
    spec.validate()?;
    let n = spec.levels();
    let drift = Hermitian::diag(&spec.energies);
    let mut control = CMatrix::zeros(n, n);
    for k in 0..n - 1 {
        let sign = spec.signs.as_ref().map_or(1.0, |s| s[k]);
        let value = c(sign * spec.dipoles[k], 0.0);
        control[(k, k + 1)] = value;
        control[(k + 1, k)] = value;
    }
    ControlSystem::new(drift, vec![Hermitian::hermitize(control)], label)
}

/// Equally spaced three-level ladder with equal dipoles (`μ = d = 1`), traceless drift.
pub fn three_level_ladder() -> ControlSystem {
    let spec = OscillatorSpec { energies: vec![-1.0, 0.0, 1.0], dipoles: vec![1.0, 1.0], signs: None };
    build_oscillator(&spec, "three-level dipole ladder").expect("valid built-in model")
}

/// Default level parameters `(E1, E2)` of the four-level symplectic ladder.
pub const FOUR_LEVEL_DEFAULT_ENERGIES: (f64, f64) = (1.5, 0.5);

/// Four-level ladder with energies `(−E1, −E2, E2, E1)`, dipoles `(d1, d2, d1)`
/// and sign pattern `(+, +, −)` on the last transition.
pub fn four_level(e1: f64, e2: f64, d1: f64, d2: f64) -> Result<ControlSystem> {
    let spec = OscillatorSpec {
        energies: vec![-e1, -e2, e2, e1],
        dipoles: vec![d1, d2, d1],
        signs: Some(vec![1.0, 1.0, -1.0]),
    };
    build_oscillator(&spec, "four-level symplectic ladder")
}

pub fn four_level_ladder() -> ControlSystem {
    let (e1, e2) = FOUR_LEVEL_DEFAULT_ENERGIES;
    four_level(e1, e2, 1.0, 1.0).expect("valid built-in model")
}
