//! Transmission sweeps over a list of signal states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, Transmission, DEFAULT_SQUEEZING_R};
use crate::metrics::{build_report, EdrReport};
use crate::sampling::{mix_seed, run_trials, TrialStats, TrialSummary};

pub const FORMAT_VERSION: u32 = 1;

/// Combined interference (0.99) and photodiode (0.996) efficiency, for
/// imperfect-detection studies.
pub const COMPOSITE_DETECTION_EFFICIENCY: f64 = 0.99 * 0.996;

/// A signal-state family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateSpec {
    Coherent { mean_x: f64, mean_p: f64 },
    SqueezedPure { r: f64 },
    SqueezedDb { sqz_db: f64, antisqz_db: f64 },
    Thermal { r: f64 },
}

fn short(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

impl StateSpec {
    /// The three states of the reference experiment.
    pub fn defaults() -> Vec<StateSpec> {
        vec![
            StateSpec::Coherent { mean_x: 0.0, mean_p: 0.0 },
            StateSpec::SqueezedDb { sqz_db: -2.9, antisqz_db: 3.9 },
            StateSpec::Thermal { r: DEFAULT_SQUEEZING_R },
        ]
    }

    pub fn family(&self) -> &'static str {
        match self {
            StateSpec::Coherent { .. } => "coherent",
            StateSpec::SqueezedPure { .. } => "squeezed_pure",
            StateSpec::SqueezedDb { .. } => "squeezed_db",
            StateSpec::Thermal { .. } => "thermal",
        }
    }

    /// Comma-free label used in CSV output.
    pub fn label(&self) -> String {
        match *self {
            StateSpec::Coherent { mean_x, mean_p } if mean_x == 0.0 && mean_p == 0.0 => "coherent".into(),
            StateSpec::Coherent { mean_x, mean_p } => format!("coherent({};{})", short(mean_x), short(mean_p)),
            StateSpec::SqueezedPure { r } => format!("squeezed_pure({})", short(r)),
            StateSpec::SqueezedDb { sqz_db, antisqz_db } => {
                format!("squeezed_db({};{})", short(sqz_db), short(antisqz_db))
            }
            StateSpec::Thermal { r } => format!("thermal({})", short(r)),
        }
    }

    /// Builds a spec from a family name and `key=value` parameters; omitted
    /// parameters take the reference-experiment values.
    pub fn from_params(family: &str, params: &[(String, f64)]) -> Result<StateSpec> {
        let allowed: &[&str] = match family {
            "coherent" => &["mean_x", "mean_p"],
            "squeezed_pure" | "thermal" => &["r"],
            "squeezed_db" => &["sqz_db", "antisqz_db"],
            other => {
                return Err(Error::validation(format!(
                    "unknown state family '{other}' (expected coherent, squeezed_pure, squeezed_db, thermal)"
                )))
            }
        };
        for (k, _) in params {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::validation(format!(
                    "unknown parameter '{k}' for {family} (expected {})",
                    allowed.join(", ")
                )));
            }
        }
        let get = |k: &str, default: f64| {
            params.iter().rev().find(|(n, _)| n == k).map_or(default, |(_, v)| *v)
        };
        let spec = match family {
            "coherent" => StateSpec::Coherent { mean_x: get("mean_x", 0.0), mean_p: get("mean_p", 0.0) },
            "squeezed_pure" => StateSpec::SqueezedPure { r: get("r", DEFAULT_SQUEEZING_R) },
            "squeezed_db" => StateSpec::SqueezedDb {
                sqz_db: get("sqz_db", -2.9),
                antisqz_db: get("antisqz_db", 3.9),
            },
            _ => StateSpec::Thermal { r: get("r", DEFAULT_SQUEEZING_R) },
        };
        spec.build()?;
        Ok(spec)
    }

    pub fn build(&self) -> Result<GaussianState> {
        let s = match *self {
            StateSpec::Coherent { mean_x, mean_p } => GaussianState::coherent(mean_x, mean_p),
            StateSpec::SqueezedPure { r } => GaussianState::squeezed_pure(r)?,
            StateSpec::SqueezedDb { sqz_db, antisqz_db } => GaussianState::squeezed_db(sqz_db, antisqz_db)?,
            StateSpec::Thermal { r } => GaussianState::thermal(r)?,
        };
        Ok(s.with_label(self.label()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid { start: 0.01, stop: 0.99, step: 0.01 }
    }
}

impl TGrid {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t_start", self.start), ("t_stop", self.stop)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("{name}={v} outside [0, 1]")));
            }
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::validation(format!("t_step={} must be > 0", self.step)));
        }
        if self.start > self.stop {
            return Err(Error::validation(format!(
                "t_start={} exceeds t_stop={}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// Grid points `start + i·step` up to `stop` (inclusive within 1e-9 of a
    /// step), rounded to 12 decimals so that e.g. 0.5 lands exactly.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let t = self.start + i as f64 * self.step;
                ((t * 1e12).round() / 1e12).clamp(0.0, 1.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub states: Vec<StateSpec>,
    pub t_grid: TGrid,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub include_empirical: bool,
    pub loss_eff: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            states: StateSpec::defaults(),
            t_grid: TGrid::default(),
            n: 500_000,
            trials: 10,
            master_seed: 0,
            include_empirical: false,
            loss_eff: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::validation("states: at least one state is required"));
        }
        for s in &self.states {
            s.build()
                .map_err(|e| Error::validation(format!("{}: {e}", s.family())))?;
        }
        self.t_grid.validate()?;
        if self.n == 0 {
            return Err(Error::validation("n must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::validation("trials must be >= 1"));
        }
        if let Some(eff) = self.loss_eff {
            if !(0.0..=1.0).contains(&eff) {
                return Err(Error::validation(format!("loss_eff={eff} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub state: String,
    pub state_index: usize,
    pub t: Transmission,
    pub analytic: EdrReport,
    pub empirical: Option<TrialStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub format_version: u32,
    pub artifact_version: String,
    /// Unix seconds; left unset by [`run_sweep`] so results stay reproducible.
    pub timestamp: Option<u64>,
    pub config: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(config, Execution::Parallel)
}

pub fn run_sweep_with(config: &SweepConfig, exec: Execution) -> Result<SweepResult> {
    config.validate()?;
    let meter = GaussianState::vacuum();
    let signals = config
        .states
        .iter()
        .map(|s| {
            let st = s.build()?;
            match config.loss_eff {
                Some(eff) => st.apply_loss(eff),
                None => Ok(st),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = config.t_grid.points();

    let jobs: Vec<(usize, usize)> = (0..signals.len())
        .flat_map(|si| (0..grid.len()).map(move |ti| (si, ti)))
        .collect();
    let point = |&(si, ti): &(usize, usize)| -> Result<SweepRow> {
        let signal = &signals[si];
        let t = Transmission::new(grid[ti])?;
        let analytic = build_report(signal, &meter, t);
        let empirical = if config.include_empirical {
            let seed = mix_seed(config.master_seed, &[si as u64, ti as u64]);
            Some(run_trials(signal, &meter, t, config.n, config.trials, seed)?)
        } else {
            None
        };
        Ok(SweepRow {
            state: config.states[si].label(),
            state_index: si,
            t,
            analytic,
            empirical,
        })
    };
    let rows = match exec {
        Execution::Serial => jobs.iter().map(point).collect::<Result<Vec<_>>>()?,
        Execution::Parallel => jobs.par_iter().map(point).collect::<Result<Vec<_>>>()?,
    };

    Ok(SweepResult {
        metadata: SweepMetadata {
            format_version: FORMAT_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
            config: config.clone(),
        },
        rows,
    })
}

/// The seven per-point quantities compared between analytic and sampled data.
pub const QUANTITIES: [&str; 7] = [
    "epsilon",
    "eta",
    "sigma_a",
    "sigma_b",
    "lhs_heisenberg",
    "lhs_ozawa",
    "lhs_branciard",
];

fn pick<'a>(stats: &'a TrialStats, analytic: &EdrReport, q: usize) -> (&'a TrialSummary, f64) {
    match q {
        0 => (&stats.epsilon, analytic.epsilon),
        1 => (&stats.eta, analytic.eta),
        2 => (&stats.sigma_a, analytic.sigma_a),
        3 => (&stats.sigma_b, analytic.sigma_b),
        4 => (&stats.lhs_heisenberg, analytic.lhs_heisenberg),
        5 => (&stats.lhs_ozawa, analytic.lhs_ozawa),
        6 => (&stats.lhs_branciard, analytic.lhs_branciard),
        _ => unreachable!(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityDeviation {
    pub quantity: String,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Points whose trial mean is more than three error bars from the
    /// analytic value.
    pub outside_3_bars: usize,
    pub points: usize,
}

/// Analytic-vs-empirical deviations per quantity, over every row that
/// carries empirical data.
pub fn compare_analytic_empirical(result: &SweepResult) -> Result<Vec<QuantityDeviation>> {
    let rows: Vec<(&TrialStats, &EdrReport)> = result
        .rows
        .iter()
        .filter_map(|r| r.empirical.as_ref().map(|e| (e, &r.analytic)))
        .collect();
    if rows.is_empty() {
        return Err(Error::validation("no empirical data"));
    }
    Ok((0..QUANTITIES.len())
        .map(|q| {
            let mut max_abs: f64 = 0.0;
            let mut sum = 0.0;
            let mut outside = 0;
            for (stats, analytic) in &rows {
                let (summary, value) = pick(stats, analytic, q);
                let dev = (summary.mean - value).abs();
                max_abs = max_abs.max(dev);
                sum += dev;
                if dev > 3.0 * summary.rms_error_bar {
                    outside += 1;
                }
            }
            QuantityDeviation {
                quantity: QUANTITIES[q].to_string(),
                max_abs,
                mean_abs: sum / rows.len() as f64,
                outside_3_bars: outside,
                points: rows.len(),
            }
        })
        .collect())
}
