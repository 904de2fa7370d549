//! Recorded quadrature data.
//!
//! Text CSV with a `#` metadata preamble followed by one `ch1,ch2` pair per
//! line:
//!
//! ```text
//! # format_version=1
//! # basis=x
//! # t=0.5
//! # n=3
//! # seed=42
//! 1.2e-1,-3.4e-1
//! ...
//! ```
//!
//! `basis` and `t` are required; `n` and `seed` are optional. Samples must
//! already be calibrated to shot-noise units: `ch1`/`ch2` are `x_c`/`x_d`
//! for basis `x` and `p_c`/`p_d` for basis `p`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gaussian::{Basis, Transmission};
use crate::sampling::{estimate, SampleBatch, TrialEstimate, TrialStats};
use crate::sweep::FORMAT_VERSION;

use super::fmt_real;

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedDataset {
    pub basis: Basis,
    pub t: Transmission,
    pub ch1: Vec<f64>,
    pub ch2: Vec<f64>,
    pub source: PathBuf,
    pub declared_n: Option<usize>,
    pub seed: Option<u64>,
}

impl RecordedDataset {
    pub fn into_batch(self) -> Result<SampleBatch> {
        SampleBatch::new(self.basis, self.t, self.seed.unwrap_or(0), self.ch1, self.ch2)
    }
}

pub fn parse_recorded(text: &str, source: &Path) -> Result<RecordedDataset> {
    let path = source.display().to_string();
    let err = |line: usize, msg: String| Error::Parse { path: path.clone(), line, msg };

    let mut basis = None;
    let mut t = None;
    let mut declared_n = None;
    let mut seed = None;
    let mut ch1 = Vec::new();
    let mut ch2 = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        if let Some(meta) = content.strip_prefix('#') {
            let Some((k, v)) = meta.split_once('=') else { continue };
            let (k, v) = (k.trim(), v.trim());
            match k {
                "basis" => {
                    basis = Some(match v.to_ascii_lowercase().as_str() {
                        "x" => Basis::X,
                        "p" => Basis::P,
                        _ => return Err(err(line, format!("basis must be x or p, got '{v}'"))),
                    })
                }
                "t" => {
                    let val: f64 = v.parse().map_err(|_| err(line, format!("cannot parse t '{v}'")))?;
                    t = Some(Transmission::new(val).map_err(|e| err(line, e.to_string()))?);
                }
                "n" => declared_n = Some(v.parse().map_err(|_| err(line, format!("cannot parse n '{v}'")))?),
                "seed" => seed = Some(v.parse().map_err(|_| err(line, format!("cannot parse seed '{v}'")))?),
                "format_version" => {
                    let fv: u32 = v.parse().map_err(|_| err(line, format!("cannot parse format_version '{v}'")))?;
                    if fv != FORMAT_VERSION {
                        return Err(err(line, format!("unsupported format_version {fv}")));
                    }
                }
                _ => {}
            }
            continue;
        }
        let mut parts = content.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(line, format!("malformed row '{content}': expected ch1,ch2")));
        };
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| err(line, format!("malformed row '{content}': cannot parse '{}'", s.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(line, format!("malformed row '{content}': non-finite sample")))
            }
        };
        ch1.push(parse(a)?);
        ch2.push(parse(b)?);
    }

    let basis = basis.ok_or_else(|| err(0, "missing '# basis=' metadata".into()))?;
    let t = t.ok_or_else(|| err(0, "missing '# t=' metadata".into()))?;
    if ch1.is_empty() {
        return Err(err(0, "empty file: no samples".into()));
    }
    if let Some(n) = declared_n {
        if n != ch1.len() {
            return Err(err(0, format!("declared n={n} but found {} samples", ch1.len())));
        }
    }
    Ok(RecordedDataset {
        basis,
        t,
        ch1,
        ch2,
        source: source.to_path_buf(),
        declared_n,
        seed,
    })
}

pub fn read_recorded(path: &Path) -> Result<RecordedDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_recorded(&text, path)
}

pub fn write_recorded(batch: &SampleBatch, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "# format_version={FORMAT_VERSION}")?;
        writeln!(w, "# basis={}", batch.basis)?;
        writeln!(w, "# t={}", fmt_real(batch.t.t()))?;
        writeln!(w, "# n={}", batch.n())?;
        writeln!(w, "# seed={}", batch.seed)?;
        for (a, b) in batch.ch1.iter().zip(&batch.ch2) {
            writeln!(w, "{},{}", fmt_real(*a), fmt_real(*b))?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// Estimates from one or more recorded repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub stats: TrialStats,
    /// σ̂ taken from reference (`t = 1`) records rather than reconstructed.
    pub direct_sigma: bool,
}

fn load(path: &Path, basis: Basis, t: Transmission) -> Result<SampleBatch> {
    let ds = read_recorded(path)?;
    if ds.basis != basis {
        return Err(Error::BasisMismatch {
            expected: format!("{basis} ({})", path.display()),
            found: ds.basis.to_string(),
        });
    }
    if ds.t != t {
        return Err(Error::TransmissionMismatch {
            expected: t.t(),
            found: ds.t.t(),
        });
    }
    ds.into_batch()
}

/// Applies the error/disturbance estimators to recorded X and P files.
///
/// `x_files[k]` and `p_files[k]` form repetition `k`. When `reference` is
/// given it must hold one `t = 1` X and P file per repetition, from which
/// σ̂_A and σ̂_B are taken; otherwise they are reconstructed from the output
/// records.
pub fn analyze_recorded(
    x_files: &[PathBuf],
    p_files: &[PathBuf],
    reference: Option<(&[PathBuf], &[PathBuf])>,
    t: Transmission,
) -> Result<Analysis> {
    if x_files.is_empty() {
        return Err(Error::validation("at least one x file is required"));
    }
    if x_files.len() != p_files.len() {
        return Err(Error::validation(format!(
            "{} x files but {} p files",
            x_files.len(),
            p_files.len()
        )));
    }
    if let Some((rx, rp)) = reference {
        if rx.len() != x_files.len() || rp.len() != x_files.len() {
            return Err(Error::validation("need one reference x and p file per repetition"));
        }
    }
    let one = Transmission::new(1.0)?;
    let estimates = (0..x_files.len())
        .map(|k| -> Result<TrialEstimate> {
            let x = load(&x_files[k], Basis::X, t)?;
            let p = load(&p_files[k], Basis::P, t)?;
            match reference {
                Some((rx, rp)) => {
                    let rx = load(&rx[k], Basis::X, one)?;
                    let rp = load(&rp[k], Basis::P, one)?;
                    estimate(&x, &p, Some((&rx, &rp)))
                }
                None => estimate(&x, &p, None),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Analysis {
        stats: TrialStats::from_estimates(t, &estimates)?,
        direct_sigma: reference.is_some(),
    })
}
