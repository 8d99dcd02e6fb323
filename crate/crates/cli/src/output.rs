//! Report rendering and parameter sweeps.

use std::fmt::Write as _;

use kmsbound_core::report::{worst_status, ConditionReport};
use rayon::prelude::*;

use crate::pipeline::{run_scenario, RunOutput};
use crate::scenario::Scenario;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    #[value(name = "beta")]
    Beta,
    #[value(name = "N")]
    N,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::N => "N",
        }
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn strip_witnesses(out: &RunOutput) -> RunOutput {
    let mut out = out.clone();
    for r in &mut out.reports {
        if let Some(w) = r.witness.take() {
            r.witness = Some(w.without_data());
        }
    }
    out
}

pub fn emit_report(out: &RunOutput, format: Format, full_witness: bool) -> String {
    let out = if full_witness { out.clone() } else { strip_witnesses(out) };
    match format {
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(&out).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Text => render_text(&out),
    }
}

fn render_text(out: &RunOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} (seed {})", out.scenario, out.seed);
    for r in &out.reports {
        let _ = writeln!(s, "[{:<8}] {}", r.status.to_string().to_uppercase(), r.check);
        for (k, v) in &r.values {
            let _ = writeln!(s, "    {k} = {}", format_float(v.0));
        }
        for sub in &r.subchecks {
            let _ = writeln!(
                s,
                "    - {} [{}] value {} tol {}",
                sub.name,
                sub.status,
                format_float(sub.value.0),
                format_float(sub.tolerance.0)
            );
        }
        if let Some(w) = &r.witness {
            let _ = writeln!(s, "    witness {} = {} ({})", w.label, format_float(w.value.0), w.digest);
        }
        for note in &r.notes {
            let _ = writeln!(s, "    note: {note}");
        }
    }
    let _ = writeln!(s, "overall: {}", out.status);
    s
}

/// `a:b:count` for an inclusive linear grid, or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::Validation {
        path: "--grid".into(),
        message: format!("{m}: {spec:?}"),
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected a:b:count"));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2].trim().parse().map_err(|_| bad("count must be a positive integer"))?;
        match count {
            0 => return Err(bad("count must be a positive integer")),
            1 => vec![a],
            _ => (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect(),
        }
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("grid values must be finite"));
    }
    Ok(grid)
}

fn at_point(s: &Scenario, param: SweepParam, x: f64) -> Result<Scenario, CliError> {
    let mut s = s.clone();
    match param {
        SweepParam::Beta => s.params.beta_grid = Some(vec![x]),
        SweepParam::N => {
            if x < 1.0 || x.fract() != 0.0 {
                return Err(CliError::Validation {
                    path: "--grid".into(),
                    message: format!("truncation {x} is not a positive integer"),
                });
            }
            s.params.truncations = vec![x as u64];
        }
    }
    Ok(s)
}

fn column_names(reports: &[ConditionReport]) -> Vec<(String, Option<String>)> {
    let mut seen = std::collections::BTreeMap::<&str, usize>::new();
    let mut cols = Vec::new();
    for r in reports {
        let total = reports.iter().filter(|o| o.check == r.check).count();
        let idx = seen.entry(&r.check).or_default();
        let prefix = if total > 1 { format!("{}[{}]", r.check, idx) } else { r.check.clone() };
        *idx += 1;
        cols.push((format!("{prefix}.status"), None));
        for k in r.values.keys() {
            cols.push((format!("{prefix}.{k}"), Some(k.clone())));
        }
    }
    cols
}

/// Runs the scenario once per grid point and renders one CSV row per point.
pub fn sweep(s: &Scenario, param: SweepParam, grid: &[f64], seed: Option<u64>) -> Result<String, CliError> {
    let runs = grid
        .par_iter()
        .map(|&x| run_scenario(&at_point(s, param, x)?, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let mut header: Vec<String> = Vec::new();
    let mut rows_cells: Vec<std::collections::BTreeMap<String, String>> = Vec::new();
    for run in &runs {
        let mut cells = std::collections::BTreeMap::new();
        let names = column_names(&run.reports);
        let mut it = names.into_iter();
        for r in &run.reports {
            let (status_col, _) = it.next().expect("status column");
            if !header.contains(&status_col) {
                header.push(status_col.clone());
            }
            cells.insert(status_col, r.status.to_string());
            for (k, v) in &r.values {
                let (col, key) = it.next().expect("value column");
                debug_assert_eq!(key.as_deref(), Some(k.as_str()));
                if !header.contains(&col) {
                    header.push(col.clone());
                }
                cells.insert(col, format_float(v.0));
            }
        }
        rows_cells.push(cells);
    }

    let mut csv = String::new();
    let _ = write!(csv, "{},status", param.name());
    for h in &header {
        let _ = write!(csv, ",{h}");
    }
    csv.push('\n');
    for ((x, run), cells) in grid.iter().zip(&runs).zip(&rows_cells) {
        let _ = write!(csv, "{},{}", format_float(*x), worst_status(&run.reports));
        for h in &header {
            let _ = write!(csv, ",{}", cells.get(h).map(String::as_str).unwrap_or(""));
        }
        csv.push('\n');
    }
    Ok(csv)
}
