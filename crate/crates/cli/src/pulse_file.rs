//! Plain-text piecewise-constant pulses.
//!
//! The first non-comment line is the header `T K M` (duration, number of time
//! steps, number of controls); it is followed by `K` rows of `M` real
//! amplitudes. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use qctrl_core::ControlPulse;

use crate::spec_file::float_literal;
use crate::{CliError, Result};

pub fn load(path: &Path) -> Result<ControlPulse> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

pub fn parse(text: &str, origin: &str) -> Result<ControlPulse> {
    let error = |line: usize, message: String| CliError::Parse { origin: format!("{origin}:{line}"), message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| error(1, "missing `T K M` header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [t, k, m] = fields[..] else {
        return Err(error(header_line, format!("expected header `T K M`, got `{header}`")));
    };
    let duration: f64 = t.parse().map_err(|_| error(header_line, format!("invalid duration `{t}`")))?;
    let steps: usize = k.parse().map_err(|_| error(header_line, format!("invalid step count `{k}`")))?;
    let controls: usize = m.parse().map_err(|_| error(header_line, format!("invalid control count `{m}`")))?;

    let mut amplitudes = Vec::with_capacity(steps * controls);
    let mut rows = 0;
    for (line, row) in lines {
        rows += 1;
        if rows > steps {
            return Err(error(line, format!("more than the {steps} rows announced in the header")));
        }
        let values = row
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| error(line, format!("invalid amplitude `{v}`"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != controls {
            return Err(error(line, format!("expected {controls} amplitudes, got {}", values.len())));
        }
        amplitudes.extend(values);
    }
    if rows != steps {
        return Err(CliError::Parse {
            origin: origin.to_string(),
            message: format!("header announces {steps} rows, found {rows}"),
        });
    }
    ControlPulse::from_flat(duration, steps, controls, amplitudes)
        .map_err(|e| CliError::Validation(format!("{origin}: {e}")))
}

/// Formats a pulse so that [`parse`] reproduces it exactly.
pub fn format(pulse: &ControlPulse) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {}", float_literal(pulse.duration()), pulse.steps(), pulse.controls()).unwrap();
    for k in 0..pulse.steps() {
        let row: Vec<String> = pulse.step(k).iter().map(|&a| float_literal(a)).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

pub fn save(path: &Path, pulse: &ControlPulse) -> Result<()> {
    std::fs::write(path, format(pulse)).map_err(|e| CliError::io(path, e))
}
