//! TOML system-definition files.
//!
//! ```toml
//! dimension = 2
//! label = "qubit"
//! drift = [[-0.5, 0.0], [0.0, 0.5]]
//! controls = [[[0.0, 1.0], [1.0, 0.0]]]
//!
//! [states]
//! ground = [[1.0, 0.0], [0.0, 0.0]]
//!
//! [observables]
//! sy = [[0.0, [0.0, -1.0]], [[0.0, 1.0], 0.0]]
//! ```
//!
//! Matrix entries are real numbers or `[re, im]` pairs. Instead of `drift` and
//! `controls` a file may give an `[oscillator]` table with `energies`,
//! `dipoles` and optional `signs`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use qctrl_core::models::{build_oscillator, OscillatorSpec};
use qctrl_core::{CMatrix, ControlSystem, DensityMatrix, Hermitian};
use serde::Deserialize;

use crate::{CliError, Result};

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

type RawMatrix = Vec<Vec<Entry>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOscillator {
    energies: Vec<f64>,
    dipoles: Vec<f64>,
    signs: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dimension: usize,
    label: Option<String>,
    drift: Option<RawMatrix>,
    controls: Option<Vec<RawMatrix>>,
    oscillator: Option<RawOscillator>,
    #[serde(default)]
    states: BTreeMap<String, RawMatrix>,
    #[serde(default)]
    observables: BTreeMap<String, RawMatrix>,
}

/// A control system together with the named states and observables of its file.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub system: ControlSystem,
    pub states: BTreeMap<String, DensityMatrix>,
    pub observables: BTreeMap<String, Hermitian>,
}

const DEFAULT_LABEL: &str = "system";

fn to_matrix(raw: &RawMatrix, n: usize, what: &str) -> Result<CMatrix> {
    if raw.len() != n || raw.iter().any(|row| row.len() != n) {
        let cols = raw.iter().map(Vec::len).max().unwrap_or(0);
        return Err(CliError::Validation(format!(
            "{what}: expected a {n}x{n} matrix, got {} rows (widest {cols})",
            raw.len()
        )));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| match raw[i][j] {
        Entry::Real(re) => Complex64::new(re, 0.0),
        Entry::Complex([re, im]) => Complex64::new(re, im),
    }))
}

fn to_hermitian(raw: &RawMatrix, n: usize, what: &str) -> Result<Hermitian> {
    let m = to_matrix(raw, n, what)?;
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CliError::Validation(format!("{what}: non-finite entry")));
    }
    Hermitian::named(m, what).map_err(|e| CliError::Validation(e.to_string()))
}

impl SystemSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses a file's contents; `origin` prefixes syntax diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text)
            .map_err(|e| CliError::Parse { origin: origin.to_string(), message: e.to_string() })?;
        let n = raw.dimension;
        if n < 2 {
            return Err(CliError::Validation(format!("dimension must be at least 2, got {n}")));
        }
        let label = raw.label.unwrap_or_else(|| DEFAULT_LABEL.to_string());

        let system = match (raw.drift, raw.controls, raw.oscillator) {
            (Some(drift), Some(controls), None) => {
                let drift = to_hermitian(&drift, n, "drift")?;
                let controls = controls
                    .iter()
                    .enumerate()
                    .map(|(k, m)| to_hermitian(m, n, &format!("controls[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                ControlSystem::new(drift, controls, label).map_err(|e| CliError::Validation(e.to_string()))?
            }
            (None, None, Some(osc)) => {
                if osc.energies.len() != n {
                    return Err(CliError::Validation(format!(
                        "oscillator: {} energies for dimension {n}",
                        osc.energies.len()
                    )));
                }
                let spec = OscillatorSpec { energies: osc.energies, dipoles: osc.dipoles, signs: osc.signs };
                build_oscillator(&spec, label).map_err(|e| CliError::Validation(format!("oscillator: {e}")))?
            }
            _ => {
                return Err(CliError::Validation(
                    "give either `drift` and `controls`, or an `[oscillator]` table, but not both".into(),
                ))
            }
        };

        let mut states = BTreeMap::new();
        for (name, m) in &raw.states {
            let what = format!("states.{name}");
            let h = to_hermitian(m, n, &what)?;
            let state = DensityMatrix::from_hermitian(h).map_err(|e| CliError::Validation(format!("{what}: {e}")))?;
            states.insert(name.clone(), state);
        }
        let mut observables = BTreeMap::new();
        for (name, m) in &raw.observables {
            observables.insert(name.clone(), to_hermitian(m, n, &format!("observables.{name}"))?);
        }
        Ok(SystemSpec { system, states, observables })
    }

    pub fn state(&self, name: &str) -> Result<&DensityMatrix> {
        self.states.get(name).ok_or_else(|| {
            CliError::Validation(format!("unknown state `{name}`; available: {}", names(self.states.keys())))
        })
    }

    /// Looks `name` up among the observables, then among the states.
    pub fn observable(&self, name: &str) -> Result<&Hermitian> {
        if let Some(a) = self.observables.get(name) {
            return Ok(a);
        }
        if let Some(r) = self.states.get(name) {
            return Ok(r.hermitian());
        }
        let available = names(self.observables.keys().chain(self.states.keys()));
        Err(CliError::Validation(format!("unknown observable `{name}`; available: {available}")))
    }

    /// Writes the file in explicit `drift`/`controls` form with every entry at
    /// 17 significant digits, so that [`SystemSpec::parse`] reproduces it exactly.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let sys = &self.system;
        writeln!(out, "dimension = {}", sys.dim()).unwrap();
        writeln!(out, "label = {}", toml_string(sys.label())).unwrap();
        writeln!(out, "drift = {}", matrix_literal(sys.drift().matrix())).unwrap();
        let controls: Vec<String> = sys.controls().iter().map(|h| matrix_literal(h.matrix())).collect();
        writeln!(out, "controls = [{}]", controls.join(", ")).unwrap();
        if !self.states.is_empty() {
            writeln!(out, "\n[states]").unwrap();
            for (name, r) in &self.states {
                writeln!(out, "{} = {}", toml_key(name), matrix_literal(r.matrix())).unwrap();
            }
        }
        if !self.observables.is_empty() {
            writeln!(out, "\n[observables]").unwrap();
            for (name, a) in &self.observables {
                writeln!(out, "{} = {}", toml_key(name), matrix_literal(a.matrix())).unwrap();
            }
        }
        out
    }
}

fn names<'a>(keys: impl Iterator<Item = &'a String>) -> String {
    let list: Vec<&str> = keys.map(String::as_str).collect();
    if list.is_empty() {
        "(none)".to_string()
    } else {
        list.join(", ")
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn toml_key(s: &str) -> String {
    let bare = !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if bare {
        s.to_string()
    } else {
        toml_string(s)
    }
}

/// Float literal with 17 significant digits.
pub(crate) fn float_literal(v: f64) -> String {
    format!("{v:.16e}")
}

fn matrix_literal(m: &CMatrix) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|row| {
            let entries: Vec<String> = row
                .iter()
                .map(|z| {
                    if z.im == 0.0 {
                        float_literal(z.re)
                    } else {
                        format!("[{}, {}]", float_literal(z.re), float_literal(z.im))
                    }
                })
                .collect();
            format!("[{}]", entries.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}
