//! Single- and two-mode Gaussian states in the covariance-matrix picture.
//!
//! Quadratures follow `x = a + a†`, `p = (a - a†)/i`, so the vacuum has unit
//! variance in both quadratures ("shot-noise units") and `[x, p] = 2i`.

use std::fmt;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the `det(cov) >= 1` uncertainty bound.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Squeezing parameter equivalent to the -2.9 dB squeezed variance,
/// `e^{-2r} = 10^{-0.29}`. Used as the default for the thermal and pure
/// squeezed families.
pub const DEFAULT_SQUEEZING_R: f64 = 0.29 * std::f64::consts::LN_10 / 2.0;

/// Power transmission of the beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transmission(f64);

impl Transmission {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::validation(format!(
                "transmission t={t} outside [0, 1]"
            )));
        }
        Ok(Transmission(t))
    }

    #[inline]
    pub fn t(self) -> f64 {
        self.0
    }

    /// Reflectivity `R = 1 - T`.
    #[inline]
    pub fn r(self) -> f64 {
        1.0 - self.0
    }
}

impl fmt::Display for Transmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One optical mode: mean `(x, p)` and 2×2 covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: Vector2<f64>,
    cov: Matrix2<f64>,
    label: String,
}

impl GaussianState {
    /// Validating constructor for arbitrary states.
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>, label: impl Into<String>) -> Result<Self> {
        check_single_mode(&cov)?;
        Ok(GaussianState {
            mean,
            cov,
            label: label.into(),
        })
    }

    pub fn vacuum() -> Self {
        GaussianState {
            mean: Vector2::zeros(),
            cov: Matrix2::identity(),
            label: "vacuum".into(),
        }
    }

    pub fn coherent(mean_x: f64, mean_p: f64) -> Self {
        GaussianState {
            mean: Vector2::new(mean_x, mean_p),
            cov: Matrix2::identity(),
            label: "coherent".into(),
        }
    }

    /// x-squeezed pure state, `cov = diag(e^{-2r}, e^{2r})`.
    pub fn squeezed_pure(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::validation(format!(
                "squeezing parameter r={r} must be finite and >= 0 (x-squeezing only)"
            )));
        }
        Ok(GaussianState {
            mean: Vector2::zeros(),
            cov: Matrix2::new((-2.0 * r).exp(), 0.0, 0.0, (2.0 * r).exp()),
            label: "squeezed".into(),
        })
    }

    /// Squeezed state from measured noise levels relative to shot noise.
    /// Negative dB is below shot noise.
    pub fn squeezed_db(sqz_db: f64, antisqz_db: f64) -> Result<Self> {
        let vx = db_to_variance(sqz_db);
        let vp = db_to_variance(antisqz_db);
        let cov = Matrix2::new(vx, 0.0, 0.0, vp);
        if !(vx * vp >= 1.0 - PHYSICALITY_TOL) {
            return Err(Error::Unphysical(format!(
                "squeezed_db({sqz_db}, {antisqz_db}) has det = {} < 1",
                vx * vp
            )));
        }
        check_single_mode(&cov)?;
        Ok(GaussianState {
            mean: Vector2::zeros(),
            cov,
            label: "squeezed".into(),
        })
    }

    /// Thermal state with variance `(e^{-2r} + e^{2r}) / 2` in both quadratures,
    /// the single-mode marginal of a two-mode squeezed vacuum.
    pub fn thermal(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::validation(format!(
                "thermal parameter r={r} must be finite and >= 0"
            )));
        }
        let v = ((-2.0 * r).exp() + (2.0 * r).exp()) / 2.0;
        Ok(GaussianState {
            mean: Vector2::zeros(),
            cov: Matrix2::new(v, 0.0, 0.0, v),
            label: "thermal".into(),
        })
    }

    pub fn mean(&self) -> &Vector2<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix2<f64> {
        &self.cov
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn var_x(&self) -> f64 {
        self.cov[(0, 0)]
    }

    pub fn var_p(&self) -> f64 {
        self.cov[(1, 1)]
    }

    /// `<x^2>` about zero, i.e. variance plus squared mean.
    pub fn second_moment_x(&self) -> f64 {
        self.cov[(0, 0)] + self.mean[0] * self.mean[0]
    }

    pub fn second_moment_p(&self) -> f64 {
        self.cov[(1, 1)] + self.mean[1] * self.mean[1]
    }

    /// `1/sqrt(det cov)`; equals 1 for pure states.
    pub fn purity(&self) -> Result<f64> {
        let det = self.cov.determinant();
        if !(det > 0.0) || !(self.cov[(0, 0)] > 0.0) {
            return Err(Error::Numerical(format!(
                "covariance is not positive-definite (det = {det})"
            )));
        }
        Ok(1.0 / det.sqrt())
    }

    /// Mixes the state with vacuum: `cov -> eff·cov + (1-eff)·I`,
    /// `mean -> sqrt(eff)·mean`.
    pub fn apply_loss(&self, eff: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eff) {
            return Err(Error::validation(format!(
                "efficiency {eff} outside [0, 1]"
            )));
        }
        Ok(GaussianState {
            mean: self.mean * eff.sqrt(),
            cov: self.cov * eff + Matrix2::identity() * (1.0 - eff),
            label: self.label.clone(),
        })
    }
}

pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn check_single_mode(cov: &Matrix2<f64>) -> Result<()> {
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Unphysical("non-finite covariance entry".into()));
    }
    if cov[(0, 1)] != cov[(1, 0)] {
        return Err(Error::Unphysical("covariance is not symmetric".into()));
    }
    let det = cov.determinant();
    if !(cov[(0, 0)] > 0.0 && det > 0.0) {
        return Err(Error::Unphysical(
            "covariance is not positive-definite".into(),
        ));
    }
    if det < 1.0 - PHYSICALITY_TOL {
        return Err(Error::Unphysical(format!(
            "det(cov) = {det} violates the uncertainty bound det >= 1"
        )));
    }
    Ok(())
}

/// Quadrature indices into a [`TwoModeState`], ordered `(x_c, p_c, x_d, p_d)`.
pub const XC: usize = 0;
pub const PC: usize = 1;
pub const XD: usize = 2;
pub const PD: usize = 3;

/// The two commuting quadrature pairs a heterodyne setup records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// `(x_c, x_d)`
    X,
    /// `(p_c, p_d)`
    P,
}

impl Basis {
    pub fn indices(self) -> (usize, usize) {
        match self {
            Basis::X => (XC, XD),
            Basis::P => (PC, PD),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::X => "x",
            Basis::P => "p",
        })
    }
}

/// Output modes `c` and `d` of the beam splitter.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
}

impl TwoModeState {
    /// Mean and covariance of one commuting pair, marginalising the other two
    /// quadratures.
    pub fn pair(&self, basis: Basis) -> (Vector2<f64>, Matrix2<f64>) {
        let (i, j) = basis.indices();
        (
            Vector2::new(self.mean[i], self.mean[j]),
            Matrix2::new(
                self.cov[(i, i)],
                self.cov[(i, j)],
                self.cov[(j, i)],
                self.cov[(j, j)],
            ),
        )
    }

    /// Reduced state of output mode `c` (`mode == 0`) or `d` (`mode == 1`).
    pub fn marginal(&self, mode: usize) -> (Vector2<f64>, Matrix2<f64>) {
        assert!(mode < 2, "two-mode state has modes 0 and 1");
        let o = 2 * mode;
        (
            Vector2::new(self.mean[o], self.mean[o + 1]),
            self.cov.fixed_view::<2, 2>(o, o).into_owned(),
        )
    }

    /// `<(w·q)^2>` about zero for a linear combination `w` of the four
    /// output quadratures.
    pub fn second_moment_of(&self, w: &Vector4<f64>) -> f64 {
        let m = w.dot(&self.mean);
        (w.transpose() * self.cov * w)[(0, 0)] + m * m
    }
}

/// Beam-splitter matrix acting on `(x_ρ, p_ρ, x_ν, p_ν)` and producing
/// `(x_c, p_c, x_d, p_d)`:
///
/// ```text
/// c = √T·signal − √R·meter
/// d = √R·signal + √T·meter
/// ```
pub fn beam_splitter_matrix(t: Transmission) -> Matrix4<f64> {
    let st = t.t().sqrt();
    let sr = t.r().sqrt();
    #[rustfmt::skip]
    let s = Matrix4::new(
        st,  0.0, -sr, 0.0,
        0.0, st,  0.0, -sr,
        sr,  0.0, st,  0.0,
        0.0, sr,  0.0, st,
    );
    s
}

/// Standard symplectic form in `(x_1, p_1, x_2, p_2)` ordering.
pub fn symplectic_form() -> Matrix4<f64> {
    #[rustfmt::skip]
    let omega = Matrix4::new(
        0.0,  1.0, 0.0,  0.0,
        -1.0, 0.0, 0.0,  0.0,
        0.0,  0.0, 0.0,  1.0,
        0.0,  0.0, -1.0, 0.0,
    );
    omega
}

/// Couples `signal` and `meter` on a beam splitter of transmission `t`.
pub fn beam_split(signal: &GaussianState, meter: &GaussianState, t: Transmission) -> TwoModeState {
    let mut mean_in = Vector4::zeros();
    mean_in.fixed_rows_mut::<2>(0).copy_from(&signal.mean);
    mean_in.fixed_rows_mut::<2>(2).copy_from(&meter.mean);
    let mut cov_in = Matrix4::zeros();
    cov_in.fixed_view_mut::<2, 2>(0, 0).copy_from(&signal.cov);
    cov_in.fixed_view_mut::<2, 2>(2, 2).copy_from(&meter.cov);

    let s = beam_splitter_matrix(t);
    let mut cov = s * cov_in * s.transpose();
    // Restore exact symmetry lost to rounding in the congruence.
    cov = (cov + cov.transpose()) * 0.5;
    TwoModeState {
        mean: s * mean_in,
        cov,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const R0334: f64 = DEFAULT_SQUEEZING_R;

    #[test]
    fn vacuum_is_identity() {
        let v = GaussianState::vacuum();
        assert_eq!(*v.cov(), Matrix2::identity());
        assert_eq!(*v.mean(), Vector2::zeros());
        assert_eq!(v.purity().unwrap(), 1.0);
        assert_eq!(v.cov().determinant(), 1.0);
    }

    #[test]
    fn coherent_keeps_unit_covariance() {
        let c = GaussianState::coherent(2.5, -1.0);
        assert_eq!(*c.mean(), Vector2::new(2.5, -1.0));
        assert_eq!(*c.cov(), Matrix2::identity());
        assert_eq!(c.purity().unwrap(), 1.0);
    }

    #[test]
    fn squeezed_pure_values() {
        assert_eq!(*GaussianState::squeezed_pure(0.0).unwrap().cov(), Matrix2::identity());
        let s = GaussianState::squeezed_pure(R0334).unwrap();
        assert_abs_diff_eq!(s.var_x(), 0.512861, epsilon = 1e-5);
        assert_abs_diff_eq!(s.var_p(), 1.949845, epsilon = 1e-5);
        for r in [0.1, 0.5, 1.3] {
            let s = GaussianState::squeezed_pure(r).unwrap();
            assert_abs_diff_eq!(s.cov().determinant(), 1.0, epsilon = 1e-12);
        }
        assert!(GaussianState::squeezed_pure(-0.1).is_err());
    }

    #[test]
    fn squeezed_db_values() {
        let s = GaussianState::squeezed_db(-2.9, 3.9).unwrap();
        assert_abs_diff_eq!(s.var_x(), 0.512861, epsilon = 1e-5);
        assert_abs_diff_eq!(s.var_p(), 2.454709, epsilon = 1e-5);
        assert_eq!(*GaussianState::squeezed_db(0.0, 0.0).unwrap().cov(), Matrix2::identity());
        let err = GaussianState::squeezed_db(-3.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("unphysical covariance"), "{err}");
    }

    #[test]
    fn thermal_values() {
        assert_eq!(*GaussianState::thermal(0.0).unwrap().cov(), Matrix2::identity());
        let th = GaussianState::thermal(R0334).unwrap();
        assert_abs_diff_eq!(th.var_x(), 1.231353, epsilon = 1e-5);
        assert_abs_diff_eq!(th.var_p(), 1.231353, epsilon = 1e-5);
        assert_abs_diff_eq!(th.purity().unwrap(), 0.812115, epsilon = 1e-5);
        assert!(GaussianState::thermal(-1.0).is_err());
    }

    #[test]
    fn purity_of_db_squeezed() {
        let s = GaussianState::squeezed_db(-2.9, 3.9).unwrap();
        assert_abs_diff_eq!(s.purity().unwrap(), 0.891255, epsilon = 1e-5);
    }

    #[test]
    fn new_rejects_bad_covariances() {
        let z = Vector2::zeros();
        assert!(GaussianState::new(z, Matrix2::new(1.0, 0.1, 0.0, 1.0), "a").is_err());
        assert!(GaussianState::new(z, Matrix2::new(1.0, 2.0, 2.0, 1.0), "b").is_err());
        assert!(GaussianState::new(z, Matrix2::new(0.5, 0.0, 0.0, 1.0), "c").is_err());
        assert!(GaussianState::new(z, Matrix2::new(2.0, 0.5, 0.5, 2.0), "d").is_ok());
    }

    #[test]
    fn transmission_range() {
        assert!(Transmission::new(-1e-12).is_err());
        assert!(Transmission::new(1.0 + 1e-12).is_err());
        assert!(Transmission::new(f64::NAN).is_err());
        let t = Transmission::new(0.3).unwrap();
        assert_abs_diff_eq!(t.r(), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn coherent_vacuum_split_is_identity() {
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let out = beam_split(
                &GaussianState::coherent(0.0, 0.0),
                &GaussianState::vacuum(),
                Transmission::new(t).unwrap(),
            );
            assert_abs_diff_eq!(out.cov, Matrix4::identity(), epsilon = 1e-15);
        }
    }

    #[test]
    fn transparent_splitter_passes_modes_through() {
        let sig = GaussianState::squeezed_db(-2.9, 3.9).unwrap();
        let met = GaussianState::coherent(0.3, -0.7);
        let out = beam_split(&sig, &met, Transmission::new(1.0).unwrap());
        let (mc, cc) = out.marginal(0);
        let (md, cd) = out.marginal(1);
        assert_eq!(mc, *sig.mean());
        assert_eq!(cc, *sig.cov());
        assert_eq!(md, *met.mean());
        assert_eq!(cd, *met.cov());
        assert_eq!(out.cov[(XC, XD)], 0.0);
    }

    #[test]
    fn opaque_splitter_swaps_with_sign() {
        let sig = GaussianState::thermal(0.4).unwrap();
        let met = GaussianState::coherent(0.3, -0.7);
        let out = beam_split(&sig, &met, Transmission::new(0.0).unwrap());
        let (mc, cc) = out.marginal(0);
        let (md, cd) = out.marginal(1);
        assert_eq!(mc, -met.mean());
        assert_eq!(cc, *met.cov());
        assert_eq!(md, *sig.mean());
        assert_eq!(cd, *sig.cov());
    }

    #[test]
    fn half_splitter_cross_covariance() {
        let sig = GaussianState::new(Vector2::zeros(), Matrix2::new(0.5, 0.0, 0.0, 2.0), "s").unwrap();
        let out = beam_split(&sig, &GaussianState::vacuum(), Transmission::new(0.5).unwrap());
        assert_abs_diff_eq!(out.cov[(XC, XC)], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(out.cov[(XD, XD)], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(out.cov[(XC, XD)], -0.25, epsilon = 1e-12);
    }

    #[test]
    fn loss_channel() {
        let s = GaussianState::squeezed_db(-2.9, 3.9).unwrap();
        assert_eq!(s.apply_loss(1.0).unwrap(), s);
        let v = GaussianState::vacuum();
        assert_abs_diff_eq!(*v.apply_loss(0.37).unwrap().cov(), Matrix2::identity(), epsilon = 1e-15);
        let lossy = s.apply_loss(0.996).unwrap();
        assert_abs_diff_eq!(lossy.var_x(), 0.514810, epsilon = 1e-6);
        assert!(s.apply_loss(1.5).is_err());
        let c = GaussianState::coherent(2.0, 0.0).apply_loss(0.25).unwrap();
        assert_abs_diff_eq!(c.mean()[0], 1.0, epsilon = 1e-15);
    }
}
