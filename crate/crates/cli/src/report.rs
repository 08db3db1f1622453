//! Analysis reports in human-readable and machine-readable (JSON) form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qctrl_core::classify::{AlgebraTag, FormSymmetry};
use qctrl_core::reachability::{FormCheck, Verdict};
use qctrl_core::CMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Complex matrix as rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixEntries(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for MatrixEntries {
    fn from(m: &CMatrix) -> Self {
        MatrixEntries(m.row_iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemSummary {
    pub label: String,
    pub dimension: usize,
    pub controls: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormSummary {
    pub symmetry: FormSymmetry,
    /// Largest `‖xᵀJ + Jx‖_F` over the basis.
    pub residual: f64,
    pub null_space_dim: usize,
    pub matrix: MatrixEntries,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub dimension: usize,
    pub tag: AlgebraTag,
    pub contains_identity: bool,
    pub ill_conditioned: bool,
    pub form: Option<FormSummary>,
    pub complete: bool,
    pub pure_state: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Reachability {
    pub from: String,
    pub to: String,
    pub kinematic: bool,
    pub form_necessary: Option<bool>,
    pub initial_form: Option<FormCheck>,
    pub target_form: Option<FormCheck>,
    pub orbit_distance: Option<f64>,
    pub verdict: Verdict,
    pub restarts: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Optimization {
    pub observable: String,
    pub from: String,
    pub duration: f64,
    pub steps: usize,
    pub restarts: usize,
    pub kinematical_bound: f64,
    pub orbit_bound: f64,
    pub best_dynamical_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub pulse_file: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetDistance {
    pub name: String,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Simulation {
    pub state: String,
    pub duration: f64,
    pub steps: usize,
    pub unitarity_defect: f64,
    pub final_state: MatrixEntries,
    pub final_unitary: Option<MatrixEntries>,
    pub expectations: BTreeMap<String, f64>,
    pub target: Option<TargetDistance>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// SHA-256 of the system file's bytes.
    pub input_digest: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub system: SystemSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reachability: Option<Reachability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimization: Option<Optimization>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Simulation>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn write_matrix(out: &mut String, title: &str, m: &MatrixEntries) {
    writeln!(out, "{title}:").unwrap();
    for row in &m.0 {
        let cells: Vec<String> = row
            .iter()
            .map(|[re, im]| if *im == 0.0 { format!("{re:>12.6}") } else { format!("{re:>12.6}{im:+.6}i") })
            .collect();
        writeln!(out, "  {}", cells.join(" ")).unwrap();
    }
}

impl AnalysisReport {
    pub fn new(command: &'static str, input: &[u8], seed: u64, tolerance_scale: f64, system: SystemSummary) -> Self {
        AnalysisReport {
            tool: "qctrl",
            version: env!("CARGO_PKG_VERSION"),
            command,
            input_digest: digest(input),
            seed,
            tolerance_scale,
            system,
            classification: None,
            reachability: None,
            optimization: None,
            simulation: None,
        }
    }

    pub fn to_machine(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.tool, self.version, self.command).unwrap();
        writeln!(out, "input sha256: {}", self.input_digest).unwrap();
        writeln!(out, "seed: {}  tolerance scale: {}", self.seed, self.tolerance_scale).unwrap();
        let s = &self.system;
        writeln!(out, "system: {} (N = {}, {} control(s))", s.label, s.dimension, s.controls).unwrap();

        if let Some(c) = &self.classification {
            writeln!(out, "\nalgebra dimension: {}", c.dimension).unwrap();
            writeln!(out, "class: {}", c.tag).unwrap();
            writeln!(out, "contains identity: {}", yes_no(c.contains_identity)).unwrap();
            match &c.form {
                Some(f) => {
                    writeln!(out, "invariant form: {:?}, residual {:.3e}", f.symmetry, f.residual).unwrap();
                }
                None => writeln!(out, "invariant form: none").unwrap(),
            }
            writeln!(out, "complete: {}", yes_no(c.complete)).unwrap();
            writeln!(out, "pure-state: {}", yes_no(c.pure_state)).unwrap();
            if c.ill_conditioned {
                writeln!(out, "warning: closure accepted an element close to the tolerance").unwrap();
            }
            for note in &c.notes {
                writeln!(out, "note: {note}").unwrap();
            }
        }

        if let Some(r) = &self.reachability {
            writeln!(out, "\nreach: {} -> {}", r.from, r.to).unwrap();
            writeln!(out, "kinematic check: {}", if r.kinematic { "pass" } else { "fail" }).unwrap();
            if let (Some(a), Some(b)) = (&r.initial_form, &r.target_form) {
                writeln!(out, "form check: initial {} ({:.3e}), target {} ({:.3e})",
                    if a.holds { "holds" } else { "fails" }, a.residual,
                    if b.holds { "holds" } else { "fails" }, b.residual).unwrap();
            }
            match r.orbit_distance {
                Some(d) => writeln!(out, "orbit distance: {d:.6e} ({} restarts)", r.restarts).unwrap(),
                None => writeln!(out, "orbit distance: not searched").unwrap(),
            }
            writeln!(out, "verdict: {}", r.verdict).unwrap();
        }

        if let Some(o) = &self.optimization {
            writeln!(out, "\noptimize: <{}> from {}", o.observable, o.from).unwrap();
            writeln!(out, "pulse grid: T = {}, K = {}, restarts = {}", o.duration, o.steps, o.restarts).unwrap();
            writeln!(out, "kinematical bound: {:.10}", o.kinematical_bound).unwrap();
            writeln!(out, "orbit bound: {:.10}", o.orbit_bound).unwrap();
            writeln!(out, "best dynamical value: {:.10}", o.best_dynamical_value).unwrap();
            writeln!(out, "gap: {:.6e}", o.gap).unwrap();
            writeln!(out, "converged: {}", yes_no(o.converged)).unwrap();
            if let Some(path) = &o.pulse_file {
                writeln!(out, "pulse written to {path}").unwrap();
            }
        }

        if let Some(sim) = &self.simulation {
            writeln!(out, "\nsimulate: {} over T = {}, K = {}", sim.state, sim.duration, sim.steps).unwrap();
            writeln!(out, "unitarity defect: {:.3e}", sim.unitarity_defect).unwrap();
            if let Some(u) = &sim.final_unitary {
                write_matrix(&mut out, "final unitary", u);
            }
            write_matrix(&mut out, "final state", &sim.final_state);
            for (name, value) in &sim.expectations {
                writeln!(out, "<{name}> = {value:.10}").unwrap();
            }
            if let Some(t) = &sim.target {
                writeln!(out, "distance to {}: {:.6e}", t.name, t.distance).unwrap();
            }
        }
        out
    }
}
