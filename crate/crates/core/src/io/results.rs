//! `sweep.csv`, `bounds.csv` and `report.json`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::boundary;
use crate::sampling::{TrialStats, TrialSummary};
use crate::sweep::{SweepResult, FORMAT_VERSION, QUANTITIES};

use super::fmt_real;

pub const SWEEP_CSV: &str = "sweep.csv";
pub const BOUNDS_CSV: &str = "bounds.csv";
pub const REPORT_JSON: &str = "report.json";

pub const SWEEP_COLUMNS: [&str; 10] = [
    "state",
    "t",
    "epsilon",
    "eta",
    "sigma_a",
    "sigma_b",
    "lhs_heisenberg",
    "lhs_ozawa",
    "lhs_branciard",
    "c_ab",
];

/// ε grid of the boundary curves in `bounds.csv`: 0.01, 0.02, …, 2.00.
pub const BOUNDS_EPS_STEP: f64 = 0.01;
pub const BOUNDS_EPS_POINTS: usize = 200;

#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub sweep_csv: PathBuf,
    pub bounds_csv: PathBuf,
    pub report_json: PathBuf,
}

fn empirical_columns() -> Vec<String> {
    let mut cols = Vec::new();
    for q in QUANTITIES {
        cols.push(format!("emp_{q}"));
        cols.push(format!("emp_{q}_err"));
    }
    cols.push("emp_trials".into());
    cols.push("emp_branciard_clamped_trials".into());
    cols
}

fn empirical_fields(stats: &TrialStats) -> Vec<String> {
    let summaries: [&TrialSummary; 7] = [
        &stats.epsilon,
        &stats.eta,
        &stats.sigma_a,
        &stats.sigma_b,
        &stats.lhs_heisenberg,
        &stats.lhs_ozawa,
        &stats.lhs_branciard,
    ];
    let mut out = Vec::new();
    for s in summaries {
        out.push(fmt_real(s.mean));
        out.push(fmt_real(s.rms_error_bar));
    }
    out.push(stats.trials().to_string());
    out.push(stats.branciard_clamped_trials.to_string());
    out
}

/// Renders `sweep.csv`: a `# format_version=N` line, the header, one row
/// per (state, t).
pub fn render_sweep_csv(result: &SweepResult) -> String {
    let with_emp = result.rows.iter().any(|r| r.empirical.is_some());
    let mut header: Vec<String> = SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect();
    if with_emp {
        header.extend(empirical_columns());
    }
    let mut out = format!("# format_version={FORMAT_VERSION}\n{}\n", header.join(","));
    for row in &result.rows {
        let a = &row.analytic;
        let mut fields = vec![
            row.state.clone(),
            fmt_real(row.t.t()),
            fmt_real(a.epsilon),
            fmt_real(a.eta),
            fmt_real(a.sigma_a),
            fmt_real(a.sigma_b),
            fmt_real(a.lhs_heisenberg),
            fmt_real(a.lhs_ozawa),
            fmt_real(a.lhs_branciard),
            fmt_real(a.c_ab),
        ];
        if with_emp {
            match &row.empirical {
                Some(stats) => fields.extend(empirical_fields(stats)),
                None => fields.extend(std::iter::repeat(String::new()).take(empirical_columns().len())),
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Renders `bounds.csv`: the ε–η points of the sweep (`analytic`, and
/// `empirical` with error bars when present) plus the Heisenberg, Ozawa and
/// Branciard boundary curves of each state on a fixed ε grid.
pub fn render_bounds_csv(result: &SweepResult) -> String {
    let mut out = format!("# format_version={FORMAT_VERSION}\nstate,curve,epsilon,eta,epsilon_err,eta_err\n");
    let mut state_indices: Vec<usize> = result.rows.iter().map(|r| r.state_index).collect();
    state_indices.dedup();
    for si in state_indices {
        let rows: Vec<_> = result.rows.iter().filter(|r| r.state_index == si).collect();
        let label = &rows[0].state;
        for r in &rows {
            out.push_str(&format!(
                "{label},analytic,{},{},,\n",
                fmt_real(r.analytic.epsilon),
                fmt_real(r.analytic.eta)
            ));
        }
        for r in &rows {
            if let Some(e) = &r.empirical {
                out.push_str(&format!(
                    "{label},empirical,{},{},{},{}\n",
                    fmt_real(e.epsilon.mean),
                    fmt_real(e.eta.mean),
                    fmt_real(e.epsilon.rms_error_bar),
                    fmt_real(e.eta.rms_error_bar)
                ));
            }
        }
        let a = &rows[0].analytic;
        let curves: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
            ("heisenberg", Box::new(|e| boundary::heisenberg(e, a.c_ab))),
            ("ozawa", Box::new(|e| boundary::ozawa(e, a.sigma_a, a.sigma_b, a.c_ab))),
            ("branciard", Box::new(|e| boundary::branciard(e, a.sigma_a, a.sigma_b, a.c_ab))),
        ];
        for (name, f) in &curves {
            for i in 1..=BOUNDS_EPS_POINTS {
                let eps = i as f64 * BOUNDS_EPS_STEP;
                out.push_str(&format!("{label},{name},{},{},,\n", fmt_real(eps), fmt_real(f(eps))));
            }
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(contents.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes `sweep.csv`, `bounds.csv` and `report.json` into `dir`, creating it
/// if needed.
pub fn write_results(result: &SweepResult, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles {
        sweep_csv: dir.join(SWEEP_CSV),
        bounds_csv: dir.join(BOUNDS_CSV),
        report_json: dir.join(REPORT_JSON),
    };
    write_file(&files.sweep_csv, &render_sweep_csv(result))?;
    write_file(&files.bounds_csv, &render_bounds_csv(result))?;
    let json = serde_json::to_string_pretty(result)
        .map_err(|e| Error::Numerical(format!("cannot serialise result: {e}")))?;
    write_file(&files.report_json, &(json + "\n"))?;
    Ok(files)
}

pub fn read_report(path: &Path) -> Result<SweepResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })
}
