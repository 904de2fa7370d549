//! Error, disturbance and the three error-disturbance relations for a
//! heterodyne measurement of `A = x_ρ` and `B = p_ρ`.
//!
//! The measurement approximates `A` by `C = x_c` and `B` by `D = p_d`.

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::gaussian::{beam_split, GaussianState, Transmission, TwoModeState, PC, PD, XC, XD};

/// Slack on `lhs >= C_AB` when flagging a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

/// `|<[x, p]>| / 2` with `[x, p] = 2i`. The same for every state.
#[inline]
pub fn commutator_bound() -> f64 {
    1.0
}

/// RMS error `ε(A) = <(C - A)^2>^{1/2}` from the input-mode moments.
pub fn error_amplitude(signal: &GaussianState, meter: &GaussianState, t: Transmission) -> f64 {
    let a = t.t().sqrt() - 1.0;
    let b = -t.r().sqrt();
    // C - A = a·x_ρ + b·x_ν with signal and meter uncorrelated.
    let m2 = a * a * signal.second_moment_x()
        + b * b * meter.second_moment_x()
        + 2.0 * a * b * signal.mean()[0] * meter.mean()[0];
    m2.max(0.0).sqrt()
}

/// RMS disturbance `η(B) = <(D - B)^2>^{1/2}` from the input-mode moments.
pub fn disturbance_phase(signal: &GaussianState, meter: &GaussianState, t: Transmission) -> f64 {
    let a = t.r().sqrt() - 1.0;
    let b = t.t().sqrt();
    let m2 = a * a * signal.second_moment_p()
        + b * b * meter.second_moment_p()
        + 2.0 * a * b * signal.mean()[1] * meter.mean()[1];
    m2.max(0.0).sqrt()
}

/// Weights of `C - A` over `(x_c, p_c, x_d, p_d)`: `(1-√T)·x_c − √R·x_d`.
pub fn error_weights(t: Transmission) -> Vector4<f64> {
    let mut w = Vector4::zeros();
    w[XC] = 1.0 - t.t().sqrt();
    w[XD] = -t.r().sqrt();
    w
}

/// Weights of `D - B` over `(x_c, p_c, x_d, p_d)`: `(1-√R)·p_d − √T·p_c`.
///
/// Inverting the splitter gives `p_ρ = √T·p_c + √R·p_d`, hence
/// `D − B = p_d − p_ρ = (1−√R)·p_d − √T·p_c`.
pub fn disturbance_weights(t: Transmission) -> Vector4<f64> {
    let mut w = Vector4::zeros();
    w[PC] = -t.t().sqrt();
    w[PD] = 1.0 - t.r().sqrt();
    w
}

/// ε evaluated on the output modes only, `<[(1-√T)x_c − √R x_d]^2>^{1/2}`.
pub fn error_from_output(out: &TwoModeState, t: Transmission) -> f64 {
    out.second_moment_of(&error_weights(t)).max(0.0).sqrt()
}

/// η evaluated on the output modes only, `<[(1-√R)p_d − √T p_c]^2>^{1/2}`.
pub fn disturbance_from_output(out: &TwoModeState, t: Transmission) -> f64 {
    out.second_moment_of(&disturbance_weights(t)).max(0.0).sqrt()
}

pub fn heisenberg_lhs(eps: f64, eta: f64) -> f64 {
    eps * eta
}

/// `εη + εσ_B + σ_A η`.
pub fn ozawa_lhs(eps: f64, eta: f64, sigma_a: f64, sigma_b: f64) -> f64 {
    eps * eta + eps * sigma_b + sigma_a * eta
}

/// Left-hand side of the Branciard relation together with a flag that is set
/// when `σ_A²σ_B² − C_AB²` was negative and got clamped to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranciardValue {
    pub lhs: f64,
    pub clamped: bool,
}

pub fn branciard_lhs(eps: f64, eta: f64, sigma_a: f64, sigma_b: f64, c_ab: f64) -> BranciardValue {
    let disc = sigma_a * sigma_a * sigma_b * sigma_b - c_ab * c_ab;
    let clamped = disc < 0.0;
    let cross = 2.0 * eps * eta * disc.max(0.0).sqrt();
    let lhs = (eps * eps * sigma_b * sigma_b + sigma_a * sigma_a * eta * eta + cross).sqrt();
    BranciardValue { lhs, clamped }
}

/// Everything needed to plot one transmission point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdrReport {
    pub t: Transmission,
    pub epsilon: f64,
    pub eta: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub c_ab: f64,
    pub lhs_heisenberg: f64,
    pub lhs_ozawa: f64,
    pub lhs_branciard: f64,
    pub heisenberg_violated: bool,
    pub ozawa_violated: bool,
    pub branciard_violated: bool,
    pub branciard_clamped: bool,
}

impl EdrReport {
    /// Assembles a report from (possibly estimated) ε, η, σ_A, σ_B.
    pub fn from_moments(t: Transmission, epsilon: f64, eta: f64, sigma_a: f64, sigma_b: f64) -> Self {
        let c_ab = commutator_bound();
        let h = heisenberg_lhs(epsilon, eta);
        let o = ozawa_lhs(epsilon, eta, sigma_a, sigma_b);
        let b = branciard_lhs(epsilon, eta, sigma_a, sigma_b, c_ab);
        EdrReport {
            t,
            epsilon,
            eta,
            sigma_a,
            sigma_b,
            c_ab,
            lhs_heisenberg: h,
            lhs_ozawa: o,
            lhs_branciard: b.lhs,
            heisenberg_violated: h < c_ab - VIOLATION_TOL,
            ozawa_violated: o < c_ab - VIOLATION_TOL,
            branciard_violated: b.lhs < c_ab - VIOLATION_TOL,
            branciard_clamped: b.clamped,
        }
    }
}

/// Analytic report; σ_A and σ_B are the signal's standard deviations before
/// the measurement.
pub fn build_report(signal: &GaussianState, meter: &GaussianState, t: Transmission) -> EdrReport {
    EdrReport::from_moments(
        t,
        error_amplitude(signal, meter, t),
        disturbance_phase(signal, meter, t),
        signal.var_x().sqrt(),
        signal.var_p().sqrt(),
    )
}

/// Same as [`build_report`] but with ε and η read off the output modes.
pub fn build_report_from_output(signal: &GaussianState, meter: &GaussianState, t: Transmission) -> EdrReport {
    let out = beam_split(signal, meter, t);
    EdrReport::from_moments(
        t,
        error_from_output(&out, t),
        disturbance_from_output(&out, t),
        signal.var_x().sqrt(),
        signal.var_p().sqrt(),
    )
}

fn branciard_at(signal: &GaussianState, meter: &GaussianState, t: f64) -> f64 {
    let t = Transmission::new(t).expect("search stays inside [0, 1]");
    let eps = error_amplitude(signal, meter, t);
    let eta = disturbance_phase(signal, meter, t);
    branciard_lhs(eps, eta, signal.var_x().sqrt(), signal.var_p().sqrt(), commutator_bound()).lhs
}

pub const MINIMIZE_GRID_STEP: f64 = 1e-3;
pub const MINIMIZE_XTOL: f64 = 1e-6;

/// Transmission minimising the Branciard left-hand side.
///
/// Scans `[0, 1]` at [`MINIMIZE_GRID_STEP`] (first minimum wins on ties),
/// then refines by golden-section search inside the neighbouring grid cells.
pub fn minimize_branciard(signal: &GaussianState, meter: &GaussianState) -> (Transmission, f64) {
    let f = |t: f64| branciard_at(signal, meter, t);
    let steps = (1.0 / MINIMIZE_GRID_STEP).round() as usize;

    let mut best_t = 0.0;
    let mut best = f(0.0);
    for i in 1..=steps {
        let t = i as f64 / steps as f64;
        let v = f(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }

    let lo = (best_t - MINIMIZE_GRID_STEP).max(0.0);
    let hi = (best_t + MINIMIZE_GRID_STEP).min(1.0);
    let (t_ref, v_ref) = golden_section(f, lo, hi, MINIMIZE_XTOL);
    let (t_star, v_star) = if v_ref < best { (t_ref, v_ref) } else { (best_t, best) };
    (Transmission::new(t_star).expect("inside [0, 1]"), v_star)
}

/// Golden-section search on `[lo, hi]` until the bracket is narrower than
/// `xtol`. Returns the best evaluated point; ties go to the left point.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Smallest disturbance allowed at error `eps` by each relation, i.e. the
/// boundary curves of the error-disturbance plane. Zero where any η works.
pub mod boundary {
    pub fn heisenberg(eps: f64, c_ab: f64) -> f64 {
        if eps <= 0.0 {
            f64::INFINITY
        } else {
            c_ab / eps
        }
    }

    /// Solves `η(ε + σ_A) + εσ_B = C_AB` for η.
    pub fn ozawa(eps: f64, sigma_a: f64, sigma_b: f64, c_ab: f64) -> f64 {
        ((c_ab - eps * sigma_b) / (eps + sigma_a)).max(0.0)
    }

    /// Positive root of `σ_A²η² + 2εDη + ε²σ_B² − C² = 0`,
    /// `D = √(σ_A²σ_B² − C²)`.
    pub fn branciard(eps: f64, sigma_a: f64, sigma_b: f64, c_ab: f64) -> f64 {
        let d = (sigma_a * sigma_a * sigma_b * sigma_b - c_ab * c_ab).max(0.0).sqrt();
        let a2 = sigma_a * sigma_a;
        // discriminant / 4 = ε²D² − σ_A²(ε²σ_B² − C²) = C²(σ_A² − ε²)
        let q = (c_ab * c_ab * (a2 - eps * eps)).max(0.0).sqrt();
        ((q - eps * d) / a2).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::DEFAULT_SQUEEZING_R;
    use approx::assert_abs_diff_eq;

    fn tr(t: f64) -> Transmission {
        Transmission::new(t).unwrap()
    }

    fn vac() -> GaussianState {
        GaussianState::vacuum()
    }

    fn coh() -> GaussianState {
        GaussianState::coherent(0.0, 0.0)
    }

    fn sq() -> GaussianState {
        GaussianState::squeezed_db(-2.9, 3.9).unwrap()
    }

    fn th() -> GaussianState {
        GaussianState::thermal(DEFAULT_SQUEEZING_R).unwrap()
    }

    #[test]
    fn commutator_is_one() {
        assert_eq!(commutator_bound(), 1.0);
    }

    #[test]
    fn error_values() {
        assert_eq!(error_amplitude(&coh(), &vac(), tr(1.0)), 0.0);
        assert_abs_diff_eq!(error_amplitude(&coh(), &vac(), tr(0.5)), 0.765367, epsilon = 1e-5);
        assert_abs_diff_eq!(error_amplitude(&sq(), &vac(), tr(0.5)), 0.737564, epsilon = 1e-5);
    }

    #[test]
    fn disturbance_values() {
        assert_eq!(disturbance_phase(&coh(), &vac(), tr(0.0)), 0.0);
        assert_abs_diff_eq!(disturbance_phase(&coh(), &vac(), tr(0.5)), 0.765367, epsilon = 1e-5);
        assert_abs_diff_eq!(disturbance_phase(&sq(), &vac(), tr(0.5)), 0.842959, epsilon = 1e-5);
    }

    #[test]
    fn ozawa_values() {
        assert_abs_diff_eq!(ozawa_lhs(0.765367, 0.765367, 1.0, 1.0), 2.116521, epsilon = 1e-5);
        assert_eq!(ozawa_lhs(0.0, 0.8, 1.3, 0.7), 1.3 * 0.8);
        assert_abs_diff_eq!(
            ozawa_lhs(0.737564, 0.842959, 0.716143, 1.566751),
            2.380995,
            epsilon = 1e-5
        );
    }

    #[test]
    fn branciard_values() {
        let r = build_report(&coh(), &vac(), tr(0.5));
        assert_abs_diff_eq!(r.lhs_branciard, 1.082392, epsilon = 1e-5);
        let r = build_report(&sq(), &vac(), tr(0.5));
        assert_abs_diff_eq!(r.lhs_branciard, 1.527262, epsilon = 1e-5);
        let r = build_report(&th(), &vac(), tr(0.5));
        assert_abs_diff_eq!(r.lhs_branciard, 1.536817, epsilon = 1e-5);
    }

    #[test]
    fn branciard_clamp_flag() {
        let v = branciard_lhs(0.5, 0.5, 0.99, 0.99, 1.0);
        assert!(v.clamped);
        assert_abs_diff_eq!(v.lhs, (2.0f64 * 0.25 * 0.9801).sqrt(), epsilon = 1e-15);
        assert!(!branciard_lhs(0.5, 0.5, 1.0, 1.0, 1.0).clamped);
    }

    #[test]
    fn reports() {
        let r = build_report(&coh(), &vac(), tr(0.5));
        assert_abs_diff_eq!(r.epsilon, 0.765367, epsilon = 1e-5);
        assert_abs_diff_eq!(r.eta, 0.765367, epsilon = 1e-5);
        assert_abs_diff_eq!(r.lhs_heisenberg, 0.585786, epsilon = 1e-5);
        assert_abs_diff_eq!(r.lhs_ozawa, 2.116521, epsilon = 1e-5);
        assert!(r.heisenberg_violated && !r.ozawa_violated && !r.branciard_violated);
        assert_eq!(r.lhs_heisenberg, r.epsilon * r.eta);

        let r = build_report(&coh(), &vac(), tr(1.0));
        assert_eq!(r.epsilon, 0.0);
        assert_abs_diff_eq!(r.eta, std::f64::consts::SQRT_2, epsilon = 1e-12);
        assert_eq!(r.lhs_heisenberg, 0.0);
        assert_abs_diff_eq!(r.lhs_ozawa, 1.414214, epsilon = 1e-5);
        assert_abs_diff_eq!(r.lhs_branciard, 1.414214, epsilon = 1e-5);
        assert!(r.heisenberg_violated && !r.ozawa_violated && !r.branciard_violated);

        let r = build_report(&th(), &vac(), tr(0.5));
        assert_abs_diff_eq!(r.epsilon, 0.778225, epsilon = 1e-5);
        assert_abs_diff_eq!(r.eta, 0.778225, epsilon = 1e-5);
        assert_abs_diff_eq!(r.lhs_heisenberg, 0.605634, epsilon = 1e-5);
        assert_abs_diff_eq!(r.lhs_ozawa, 2.332770, epsilon = 1e-5);
        assert!(r.heisenberg_violated && !r.ozawa_violated && !r.branciard_violated);
    }

    #[test]
    fn closed_form_matches_output_route() {
        let displaced = GaussianState::coherent(0.7, -1.2);
        let meter = GaussianState::coherent(-0.4, 0.3);
        for k in 0..=100 {
            let t = tr(k as f64 / 100.0);
            for (s, m) in [(&sq(), &vac()), (&th(), &vac()), (&displaced, &meter)] {
                let out = beam_split(s, m, t);
                assert_abs_diff_eq!(error_amplitude(s, m, t), error_from_output(&out, t), epsilon = 1e-12);
                assert_abs_diff_eq!(disturbance_phase(s, m, t), disturbance_from_output(&out, t), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn literal_c_d_ordering_of_phase_estimator_disagrees_off_balance() {
        // (1-√R)·p_c − √T·p_d only coincides with D − B at T = R.
        let s = sq();
        let t = tr(0.8);
        let out = beam_split(&s, &vac(), t);
        let mut w = Vector4::zeros();
        w[PC] = 1.0 - t.r().sqrt();
        w[PD] = -t.t().sqrt();
        let swapped = out.second_moment_of(&w).sqrt();
        assert!((swapped - disturbance_phase(&s, &vac(), t)).abs() > 1e-3);
        let half = tr(0.5);
        let out = beam_split(&s, &vac(), half);
        let mut w = Vector4::zeros();
        w[PC] = 1.0 - half.r().sqrt();
        w[PD] = -half.t().sqrt();
        assert_abs_diff_eq!(out.second_moment_of(&w).sqrt(), disturbance_phase(&s, &vac(), half), epsilon = 1e-12);
    }

    #[test]
    fn minimizer_coherent_and_thermal() {
        let (t, v) = minimize_branciard(&coh(), &vac());
        assert_abs_diff_eq!(t.t(), 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(v, 1.082392, epsilon = 1e-5);
        let (t, v) = minimize_branciard(&th(), &vac());
        assert_abs_diff_eq!(t.t(), 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(v, 1.536817, epsilon = 1e-5);
    }

    #[test]
    fn minimizer_squeezed_matches_dense_grid() {
        let s = sq();
        let (t, v) = minimize_branciard(&s, &vac());
        // brute force on a 1e-5 grid
        let (mut gt, mut gv) = (0.0, f64::INFINITY);
        for i in 0..=100_000 {
            let x = i as f64 * 1e-5;
            let y = build_report(&s, &vac(), tr(x)).lhs_branciard;
            if y < gv {
                gv = y;
                gt = x;
            }
        }
        assert_abs_diff_eq!(t.t(), gt, epsilon = 2e-5);
        assert!(v <= gv + 1e-12);
        assert_abs_diff_eq!(t.t(), 0.97, epsilon = 0.02);
        assert_abs_diff_eq!(v, 1.3114, epsilon = 0.005);
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section(|x| (x - 0.2).powi(2), -1.0, 1.0, 1e-9);
        assert_abs_diff_eq!(x, 0.2, epsilon = 1e-8);
        assert!(fx < 1e-16);
    }

    #[test]
    fn boundary_curves_saturate_relations() {
        let (sa, sb) = (0.716143, 1.566751);
        for i in 1..60 {
            let eps = i as f64 * 0.01;
            let h = boundary::heisenberg(eps, 1.0);
            assert_abs_diff_eq!(heisenberg_lhs(eps, h), 1.0, epsilon = 1e-12);
            let o = boundary::ozawa(eps, sa, sb, 1.0);
            if o > 0.0 {
                assert_abs_diff_eq!(ozawa_lhs(eps, o, sa, sb), 1.0, epsilon = 1e-12);
            }
            let b = boundary::branciard(eps, sa, sb, 1.0);
            if b > 0.0 {
                assert_abs_diff_eq!(branciard_lhs(eps, b, sa, sb, 1.0).lhs, 1.0, epsilon = 1e-12);
            }
        }
        // coherent state: Branciard boundary is the quarter circle ε² + η² = 1
        assert_abs_diff_eq!(boundary::branciard(0.6, 1.0, 1.0, 1.0), 0.8, epsilon = 1e-12);
    }
}
