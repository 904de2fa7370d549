//! Finite quadrature records and the estimators applied to them.
//!
//! Each commuting pair `(x_c, x_d)` or `(p_c, p_d)` is drawn in its own run,
//! the way two homodyne detectors record one quadrature each. The signal's
//! pre-measurement spread is characterised by a separate reference run with
//! the splitter fully transmitting, where `x_c = x_ρ` and `p_c = p_ρ`.

use nalgebra::{Cholesky, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{beam_split, Basis, GaussianState, Transmission, TwoModeState};
use crate::metrics::{commutator_bound, EdrReport, VIOLATION_TOL};

/// Diagonal jitter tried once when a covariance fails to factor.
pub const CHOLESKY_JITTER: f64 = 1e-10;

/// Subseed stream tags.
pub const STREAM_OUT_X: u64 = 0;
pub const STREAM_OUT_P: u64 = 1;
pub const STREAM_REF_X: u64 = 2;
pub const STREAM_REF_P: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a subseed from a parent seed and a path of indices.
///
/// Each component is folded in with one SplitMix64 round:
/// `h <- splitmix64(h ^ splitmix64(part))`, starting from `h = splitmix64(seed)`.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Lower-triangular `L` with `L·Lᵀ = cov`.
pub fn cholesky_factor(cov: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    if let Some(c) = Cholesky::new(*cov) {
        return Ok(c.l());
    }
    let jittered = cov + Matrix2::identity() * CHOLESKY_JITTER;
    Cholesky::new(jittered).map(|c| c.l()).ok_or_else(|| {
        Error::Numerical(format!("covariance is not positive-definite: {cov:?}"))
    })
}

/// Simultaneous samples of one commuting quadrature pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub basis: Basis,
    pub t: Transmission,
    pub seed: u64,
    pub ch1: Vec<f64>,
    pub ch2: Vec<f64>,
}

impl SampleBatch {
    pub fn new(basis: Basis, t: Transmission, seed: u64, ch1: Vec<f64>, ch2: Vec<f64>) -> Result<Self> {
        if ch1.len() != ch2.len() {
            return Err(Error::validation(format!(
                "channel lengths differ: {} vs {}",
                ch1.len(),
                ch2.len()
            )));
        }
        if ch1.is_empty() {
            return Err(Error::validation("sample batch is empty"));
        }
        Ok(SampleBatch { basis, t, seed, ch1, ch2 })
    }

    pub fn n(&self) -> usize {
        self.ch1.len()
    }
}

/// Draws `n` samples of the `basis` pair of `joint`, deterministic in `seed`.
pub fn draw_pairs(joint: &TwoModeState, t: Transmission, basis: Basis, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::validation("sample count n must be >= 1"));
    }
    let (mean, cov) = joint.pair(basis);
    let l = cholesky_factor(&cov)?;
    let (l11, l21, l22) = (l[(0, 0)], l[(1, 0)], l[(1, 1)]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ch1 = Vec::with_capacity(n);
    let mut ch2 = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        ch1.push(mean[0] + l11 * z1);
        ch2.push(mean[1] + l21 * z1 + l22 * z2);
    }
    SampleBatch::new(basis, t, seed, ch1, ch2)
}

fn check_batch(batch: &SampleBatch, basis: Basis, t: Transmission) -> Result<()> {
    if batch.basis != basis {
        return Err(Error::BasisMismatch {
            expected: basis.to_string(),
            found: batch.basis.to_string(),
        });
    }
    if batch.t != t {
        return Err(Error::TransmissionMismatch {
            expected: t.t(),
            found: batch.t.t(),
        });
    }
    Ok(())
}

fn rms_of_combination(a: &[f64], wa: f64, b: &[f64], wb: f64) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(&u, &v)| (wa * u + wb * v).powi(2)).sum();
    (sum / a.len() as f64).sqrt()
}

/// `ε̂ = sqrt(mean[((1-√T)·x_c − √R·x_d)^2])` over an X batch.
pub fn empirical_error(batch: &SampleBatch, t: Transmission) -> Result<f64> {
    check_batch(batch, Basis::X, t)?;
    Ok(rms_of_combination(&batch.ch1, 1.0 - t.t().sqrt(), &batch.ch2, -t.r().sqrt()))
}

/// `η̂ = sqrt(mean[((1-√R)·p_d − √T·p_c)^2])` over a P batch.
pub fn empirical_disturbance(batch: &SampleBatch, t: Transmission) -> Result<f64> {
    check_batch(batch, Basis::P, t)?;
    Ok(rms_of_combination(&batch.ch1, -t.t().sqrt(), &batch.ch2, 1.0 - t.r().sqrt()))
}

/// Mean of squares about zero.
pub fn empirical_second_moment(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::validation("cannot take the second moment of an empty sample"));
    }
    Ok(samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64)
}

/// Standard deviation with divisor `n`: second moment about the sample mean.
pub fn empirical_std(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::validation("cannot take the spread of an empty sample"));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let centred: Vec<f64> = samples.iter().map(|v| v - mean).collect();
    Ok(empirical_second_moment(&centred)?.sqrt())
}

/// Repeated-measurement statistics of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub mean: f64,
    /// RMS deviation of the per-trial values about their mean (divisor = trials).
    pub rms_error_bar: f64,
    pub trials: usize,
    pub per_trial_values: Vec<f64>,
}

impl TrialSummary {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("trial summary needs at least one trial"));
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
        Ok(TrialSummary {
            mean,
            rms_error_bar: var.sqrt(),
            trials: values.len(),
            per_trial_values: values,
        })
    }

    /// Standard error of the trial mean, `rms / sqrt(trials - 1)`; zero for a
    /// single trial.
    pub fn standard_error(&self) -> f64 {
        if self.trials < 2 {
            0.0
        } else {
            self.rms_error_bar / ((self.trials - 1) as f64).sqrt()
        }
    }
}

/// The four records that make up one repetition of the experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecords {
    pub x: SampleBatch,
    pub p: SampleBatch,
    /// Direct (`t = 1`) records of the signal; `ch1` is the signal quadrature.
    pub ref_x: SampleBatch,
    pub ref_p: SampleBatch,
}

/// Simulates trial `k` of a point whose seed is `point_seed`.
pub fn trial_records(
    signal: &GaussianState,
    meter: &GaussianState,
    t: Transmission,
    n: usize,
    point_seed: u64,
    k: usize,
) -> Result<TrialRecords> {
    let out = beam_split(signal, meter, t);
    let one = Transmission::new(1.0)?;
    let direct = beam_split(signal, meter, one);
    let sub = |stream| mix_seed(point_seed, &[k as u64, stream]);
    Ok(TrialRecords {
        x: draw_pairs(&out, t, Basis::X, n, sub(STREAM_OUT_X))?,
        p: draw_pairs(&out, t, Basis::P, n, sub(STREAM_OUT_P))?,
        ref_x: draw_pairs(&direct, one, Basis::X, n, sub(STREAM_REF_X))?,
        ref_p: draw_pairs(&direct, one, Basis::P, n, sub(STREAM_REF_P))?,
    })
}

/// Estimates for one repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialEstimate {
    pub report: EdrReport,
    /// Whether σ̂ came from reference records (`true`) or was reconstructed
    /// from the output records (`false`).
    pub direct_sigma: bool,
}

/// Applies the estimators to one set of records.
///
/// Without reference records, σ̂_A and σ̂_B are reconstructed from the
/// outputs through the inverse splitter, `x_ρ = √T·x_c + √R·x_d` and
/// `p_ρ = √T·p_c + √R·p_d`.
pub fn estimate(
    x: &SampleBatch,
    p: &SampleBatch,
    reference: Option<(&SampleBatch, &SampleBatch)>,
) -> Result<TrialEstimate> {
    let t = x.t;
    let eps = empirical_error(x, t)?;
    let eta = empirical_disturbance(p, t)?;
    let (sigma_a, sigma_b) = match reference {
        Some((rx, rp)) => {
            let one = Transmission::new(1.0)?;
            check_batch(rx, Basis::X, one)?;
            check_batch(rp, Basis::P, one)?;
            (empirical_std(&rx.ch1)?, empirical_std(&rp.ch1)?)
        }
        None => {
            let (st, sr) = (t.t().sqrt(), t.r().sqrt());
            let xr: Vec<f64> = x.ch1.iter().zip(&x.ch2).map(|(c, d)| st * c + sr * d).collect();
            let pr: Vec<f64> = p.ch1.iter().zip(&p.ch2).map(|(c, d)| st * c + sr * d).collect();
            (empirical_std(&xr)?, empirical_std(&pr)?)
        }
    };
    Ok(TrialEstimate {
        report: EdrReport::from_moments(t, eps, eta, sigma_a, sigma_b),
        direct_sigma: reference.is_some(),
    })
}

/// Summaries over repeated trials for every reported quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub t: Transmission,
    pub epsilon: TrialSummary,
    pub eta: TrialSummary,
    pub sigma_a: TrialSummary,
    pub sigma_b: TrialSummary,
    pub lhs_heisenberg: TrialSummary,
    pub lhs_ozawa: TrialSummary,
    pub lhs_branciard: TrialSummary,
    /// Trials in which the Branciard discriminant was clamped.
    pub branciard_clamped_trials: usize,
}

impl TrialStats {
    /// Trial estimates must be in trial-index order.
    pub fn from_estimates(t: Transmission, estimates: &[TrialEstimate]) -> Result<Self> {
        let col = |f: fn(&EdrReport) -> f64| -> Result<TrialSummary> {
            TrialSummary::from_values(estimates.iter().map(|e| f(&e.report)).collect())
        };
        Ok(TrialStats {
            t,
            epsilon: col(|r| r.epsilon)?,
            eta: col(|r| r.eta)?,
            sigma_a: col(|r| r.sigma_a)?,
            sigma_b: col(|r| r.sigma_b)?,
            lhs_heisenberg: col(|r| r.lhs_heisenberg)?,
            lhs_ozawa: col(|r| r.lhs_ozawa)?,
            lhs_branciard: col(|r| r.lhs_branciard)?,
            branciard_clamped_trials: estimates.iter().filter(|e| e.report.branciard_clamped).count(),
        })
    }

    pub fn trials(&self) -> usize {
        self.epsilon.trials
    }

    /// Report built from trial means; LHS values are means of the per-trial
    /// LHS values.
    pub fn mean_report(&self) -> EdrReport {
        let c_ab = commutator_bound();
        EdrReport {
            t: self.t,
            epsilon: self.epsilon.mean,
            eta: self.eta.mean,
            sigma_a: self.sigma_a.mean,
            sigma_b: self.sigma_b.mean,
            c_ab,
            lhs_heisenberg: self.lhs_heisenberg.mean,
            lhs_ozawa: self.lhs_ozawa.mean,
            lhs_branciard: self.lhs_branciard.mean,
            heisenberg_violated: self.lhs_heisenberg.mean < c_ab - VIOLATION_TOL,
            ozawa_violated: self.lhs_ozawa.mean < c_ab - VIOLATION_TOL,
            branciard_violated: self.lhs_branciard.mean < c_ab - VIOLATION_TOL,
            branciard_clamped: self.branciard_clamped_trials > 0,
        }
    }
}

/// Runs `trials` independent repetitions of `n` samples per record.
///
/// Trial `k` uses subseeds `mix_seed(point_seed, [k, stream])`; trials run in
/// parallel but the result does not depend on the schedule.
pub fn run_trials(
    signal: &GaussianState,
    meter: &GaussianState,
    t: Transmission,
    n: usize,
    trials: usize,
    point_seed: u64,
) -> Result<TrialStats> {
    if trials == 0 {
        return Err(Error::validation("trials must be >= 1"));
    }
    let estimates = (0..trials)
        .into_par_iter()
        .map(|k| {
            let rec = trial_records(signal, meter, t, n, point_seed, k)?;
            estimate(&rec.x, &rec.p, Some((&rec.ref_x, &rec.ref_p)))
        })
        .collect::<Result<Vec<_>>>()?;
    TrialStats::from_estimates(t, &estimates)
}
