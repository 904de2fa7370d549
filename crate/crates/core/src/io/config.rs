//! `key=value` sweep configuration files.
//!
//! ```text
//! # comment
//! squeezed_db=-2.9,3.9
//! thermal=0.333875
//! t_start=0.01
//! t_stop=0.99
//! t_step=0.01
//! n=500000
//! trials=10
//! seed=0
//! include_empirical=false
//! loss_eff=0.98604
//! ```
//!
//! State keys (`coherent`, `squeezed_pure`, `squeezed_db`, `thermal`) may
//! repeat and are kept in file order; when none is given the three default
//! states are used. Every other key may appear at most once.

use std::collections::HashMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sweep::{StateSpec, SweepConfig};

const SOURCE: &str = "config";

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: SOURCE.into(),
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| err(line, format!("{key}: cannot parse '{value}'")))
}

fn parse_list(key: &str, value: &str, line: usize, arity: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != arity {
        return Err(err(line, format!("{key}: expected {arity} comma-separated value(s), got '{value}'")));
    }
    parts.iter().map(|p| parse_num(key, p, line)).collect()
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(err(line, format!("{key}: cannot parse '{other}' as a boolean"))),
    }
}

/// Parses a state key into a spec, or `None` if `key` is not a state family.
pub fn parse_state(key: &str, value: &str, line: usize) -> Result<Option<StateSpec>> {
    let spec = match key {
        "coherent" if value.trim().is_empty() => StateSpec::Coherent { mean_x: 0.0, mean_p: 0.0 },
        "coherent" => {
            let v = parse_list(key, value, line, 2)?;
            StateSpec::Coherent { mean_x: v[0], mean_p: v[1] }
        }
        "squeezed_pure" => StateSpec::SqueezedPure { r: parse_num(key, value, line)? },
        "squeezed_db" => {
            let v = parse_list(key, value, line, 2)?;
            StateSpec::SqueezedDb { sqz_db: v[0], antisqz_db: v[1] }
        }
        "thermal" => StateSpec::Thermal { r: parse_num(key, value, line)? },
        _ => return Ok(None),
    };
    spec.build().map_err(|e| err(line, format!("{key}: {e}")))?;
    Ok(Some(spec))
}

/// Parses configuration text; omitted keys take [`SweepConfig::default`]
/// values.
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::default();
    let mut states = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected key=value, got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());

        if let Some(spec) = parse_state(key, value, line)? {
            states.push(spec);
            continue;
        }
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(err(line, format!("{key}: duplicate key (first set on line {prev})")));
        }
        match key {
            "t_start" | "t_stop" => {
                let v: f64 = parse_num(key, value, line)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(err(line, format!("{key}={v} outside [0, 1]")));
                }
                if key == "t_start" {
                    cfg.t_grid.start = v;
                } else {
                    cfg.t_grid.stop = v;
                }
            }
            "t_step" => {
                let v: f64 = parse_num(key, value, line)?;
                if !(v > 0.0) || !v.is_finite() {
                    return Err(err(line, format!("t_step={v} must be > 0")));
                }
                cfg.t_grid.step = v;
            }
            "n" => {
                cfg.n = parse_num(key, value, line)?;
                if cfg.n == 0 {
                    return Err(err(line, "n must be >= 1"));
                }
            }
            "trials" => {
                cfg.trials = parse_num(key, value, line)?;
                if cfg.trials == 0 {
                    return Err(err(line, "trials must be >= 1"));
                }
            }
            "seed" | "master_seed" => cfg.master_seed = parse_num(key, value, line)?,
            "include_empirical" => cfg.include_empirical = parse_bool(key, value, line)?,
            "loss_eff" => {
                if value == "none" {
                    cfg.loss_eff = None;
                } else {
                    let v: f64 = parse_num(key, value, line)?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(err(line, format!("loss_eff={v} outside [0, 1]")));
                    }
                    cfg.loss_eff = Some(v);
                }
            }
            other => return Err(err(line, format!("unknown key '{other}'"))),
        }
    }

    if !states.is_empty() {
        cfg.states = states;
    }
    if cfg.t_grid.start > cfg.t_grid.stop {
        let line = seen.get("t_stop").or(seen.get("t_start")).copied().unwrap_or(0);
        return Err(err(
            line,
            format!("t_start={} exceeds t_stop={}", cfg.t_grid.start, cfg.t_grid.stop),
        ));
    }
    cfg.validate()?;
    Ok(cfg)
}
