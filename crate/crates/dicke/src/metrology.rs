//! Sensitivity and entanglement quantification: moment-based phase
//! precision, the Wineland squeezing parameter, quantum Fisher information,
//! and dB gain conversions.
//!
//! The phase-estimation pipeline fixed here matches [`crate::dynamics`]:
//! the prepared state (everything up to the phase element) accumulates a
//! phase about `z`, passes the final `pi/2` beamsplitter about `+y`, and the
//! observable is read out with optional Gaussian detection noise. Because
//! that beamsplitter maps `Jz` to `-Jx`, output `Jz^p` moments are evaluated
//! as `(-Jx)^p` moments of the phase-encoded state, which keeps every
//! sensitivity evaluation O(N) with no rotations.
//!
//! A state squeezed along `z` with mean spin on `+x` (the output of
//! [`optimally_orient`]) carries its squeezed quadrature out of the signal
//! plane; rotate it by `pi/2` about `x` before feeding it to
//! [`phase_sensitivity`] so the reduced variance lies along the fringe
//! direction. At the `phi = pi/2` bias this reproduces
//! `delta_phi = xi / sqrt(N)` exactly.

use num_complex::Complex64;

use crate::dynamics::{accumulate_phase, rotate, Observable, Rotation};
use crate::rotation::Su2;
use crate::state::{apply_axis, apply_jx, inner, ladder_coefficients, CollectiveSpinState};
use crate::{invalid, Error, Result};

/// Finite-difference step for signal derivatives; one Richardson level is
/// applied on top, so truncation error is O(h^4).
const DERIVATIVE_STEP: f64 = 1e-5;

/// Slope threshold below which the sensitivity is reported undefined.
const SLOPE_FLOOR: f64 = 1e-14;

/// Mean-spin threshold below which the Wineland parameter is undefined.
const MEAN_SPIN_FLOOR: f64 = 1e-12;

/// Phase sensitivity summary at one operating point.
///
/// `snl = 1/sqrt(N)` and `heisenberg = 1/N` are stored exactly as such;
/// when `xi` is defined, `delta_phi = xi / sqrt(N)` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub delta_phi: f64,
    /// Effective squeezing parameter `sqrt(N) * delta_phi`; `None` marks an
    /// undefined value.
    pub xi: Option<f64>,
    pub snl: f64,
    pub heisenberg: f64,
    /// `-20 log10(xi)`.
    pub gain_db_variance: Option<f64>,
    /// `-10 log10(xi)`.
    pub gain_db_amplitude: Option<f64>,
    /// Quantum Fisher information of the phase generator, when evaluated.
    pub qfi: Option<f64>,
}

impl SensitivityReport {
    pub fn from_delta_phi(delta_phi: f64, n_atoms: u32, qfi: Option<f64>) -> Self {
        let n = n_atoms as f64;
        let xi = n.sqrt() * delta_phi;
        SensitivityReport {
            delta_phi,
            xi: Some(xi),
            snl: 1.0 / n.sqrt(),
            heisenberg: 1.0 / n,
            gain_db_variance: Some(-20.0 * xi.log10()),
            gain_db_amplitude: Some(-10.0 * xi.log10()),
            qfi,
        }
    }
}

/// Raw `<Jx^p>` moments (p = 1..=4) of a state vector.
fn jx_moments(n_atoms: u32, amps: &[Complex64]) -> [f64; 4] {
    let ap = ladder_coefficients(n_atoms);
    let w1 = apply_jx(&ap, amps);
    let w2 = apply_jx(&ap, &w1);
    let m1 = inner(amps, &w1).re;
    let m2 = inner(&w1, &w1).re;
    let m3 = inner(&w1, &w2).re;
    let m4 = inner(&w2, &w2).re;
    [m1, m2, m3, m4]
}

/// Detected mean and variance from raw `<S^p>` moments of the bare signal
/// `m`, folding Gaussian detection noise in closed form.
///
/// For `Jz` the noise adds `sigma_det^2` to the variance; for `JzSquared`
/// the detected value is `(m + noise)^2`, giving
/// `mean = <m^2> + s^2` and `var = Var(m^2) + 4 s^2 <m^2> + 2 s^4`.
pub fn noisy_observable_stats(
    raw_moments: &[f64; 4],
    observable: Observable,
    sigma_det: f64,
) -> (f64, f64) {
    let [m1, m2, _m3, m4] = *raw_moments;
    let s2 = sigma_det * sigma_det;
    match observable {
        Observable::Jz => (m1, m2 - m1 * m1 + s2),
        Observable::JzSquared => (m2 + s2, m4 - m2 * m2 + 4.0 * s2 * m2 + 2.0 * s2 * s2),
    }
}

/// Output `Jz^p` raw moments (p = 1..=4) of the pipeline
/// `final beamsplitter . phase(phi) . prepared`, computed without rotations.
pub fn output_jz_moments(prepared: &CollectiveSpinState, phi: f64) -> [f64; 4] {
    let phased = accumulate_phase(prepared, phi);
    let mx = jx_moments(prepared.n_atoms(), phased.amplitudes());
    // Jz after the +y pi/2 beamsplitter is -Jx before it.
    [-mx[0], mx[1], -mx[2], mx[3]]
}

/// Detected-observable mean and variance at phase `phi` for the standard
/// pipeline, with detection noise folded in analytically.
pub fn observable_moments(
    prepared: &CollectiveSpinState,
    phi: f64,
    observable: Observable,
    sigma_det: f64,
) -> (f64, f64) {
    let raw = output_jz_moments(prepared, phi);
    noisy_observable_stats(&raw, observable, sigma_det)
}

fn observable_mean(prepared: &CollectiveSpinState, phi: f64, observable: Observable) -> f64 {
    let phased = accumulate_phase(prepared, phi);
    let ap = ladder_coefficients(prepared.n_atoms());
    let w1 = apply_jx(&ap, phased.amplitudes());
    match observable {
        Observable::Jz => -inner(phased.amplitudes(), &w1).re,
        Observable::JzSquared => inner(&w1, &w1).re,
    }
}

/// Moment-based phase precision at operating point `phi0`:
/// `delta_phi = sqrt(Var(S)) / |d<S>/dphi|` with exact expectation values
/// and a Richardson-extrapolated central difference.
///
/// `prepared` is the interferometer state just before phase encoding; the
/// pipeline applies the phase and the final beamsplitter internally. The
/// report's `qfi` field carries `4 Var(Jz)` of the prepared state (the
/// phase-generator Fisher information).
pub fn phase_sensitivity(
    prepared: &CollectiveSpinState,
    phi0: f64,
    observable: Observable,
    sigma_det: f64,
) -> Result<SensitivityReport> {
    if !phi0.is_finite() {
        return Err(invalid("phase_sensitivity: phi0 must be finite"));
    }
    if !(sigma_det >= 0.0) || !sigma_det.is_finite() {
        return Err(invalid(format!(
            "phase_sensitivity: sigma_det {sigma_det} must be >= 0"
        )));
    }

    let h = DERIVATIVE_STEP;
    let f = |phi: f64| observable_mean(prepared, phi, observable);
    let d_h = (f(phi0 + h) - f(phi0 - h)) / (2.0 * h);
    let d_h2 = (f(phi0 + 0.5 * h) - f(phi0 - 0.5 * h)) / h;
    let slope = (4.0 * d_h2 - d_h) / 3.0;
    if slope.abs() < SLOPE_FLOOR {
        return Err(Error::UndefinedSensitivity(format!(
            "phase_sensitivity: signal extremum at phi0 = {phi0} (|slope| < {SLOPE_FLOOR})"
        )));
    }

    let (_, var) = observable_moments(prepared, phi0, observable, sigma_det);
    let delta_phi = var.max(0.0).sqrt() / slope.abs();
    let generator_qfi = qfi(prepared, [0.0, 0.0, 1.0]).expect("unit z axis");
    Ok(SensitivityReport::from_delta_phi(
        delta_phi,
        prepared.n_atoms(),
        Some(generator_qfi),
    ))
}

/// `xi = sqrt(N) * delta_phi` (the effective squeezing parameter of a
/// measured precision).
pub fn xi_from_signal(delta_phi: f64, n_atoms: u32) -> f64 {
    (n_atoms as f64).sqrt() * delta_phi
}

/// Wineland squeezing parameter `sqrt(N) sqrt(Var(Jz)) / |<Jx>|` in the
/// state's current orientation. `None` when the mean spin projection on `x`
/// vanishes (e.g. twin-Fock states), where the parameter is undefined.
pub fn wineland_xi(state: &CollectiveSpinState) -> Option<f64> {
    let mm = state.moments();
    let jx = mm.mean[0].abs();
    if jx < MEAN_SPIN_FLOOR {
        return None;
    }
    Some((state.n_atoms() as f64).sqrt() * mm.var_jz().sqrt() / jx)
}

/// Rotates the state so its mean spin points along `+x` and the minimal
/// transverse variance lies along `z` (the canonical orientation for the
/// Wineland parameter). Returns the oriented state and the net rotation
/// that was applied.
///
/// The in-plane angle is `atan2(-2 Cov(Jy,Jz), Var(Jy) - Var(Jz)) / 2`; the
/// sign is fixed by the contract that the post-state `Var(Jz)` is minimal
/// among all transverse directions.
pub fn optimally_orient(state: &CollectiveSpinState) -> Result<(CollectiveSpinState, Rotation)> {
    let mm = state.moments();
    if mm.spin_length < MEAN_SPIN_FLOOR {
        return Err(Error::UndefinedOrientation(
            "optimally_orient: zero mean spin".into(),
        ));
    }
    let u = [
        mm.mean[0] / mm.spin_length,
        mm.mean[1] / mm.spin_length,
        mm.mean[2] / mm.spin_length,
    ];

    // Rotation taking the mean-spin direction onto +x.
    let cross = [0.0 * u[2] - 0.0, u[2], -u[1]]; // u x (1,0,0) = (0, uz, -uy)
    let s = (cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let (axis1, angle1) = if s < 1e-14 {
        if u[0] > 0.0 {
            ([0.0, 0.0, 1.0], 0.0)
        } else {
            ([0.0, 0.0, 1.0], std::f64::consts::PI)
        }
    } else {
        ([cross[0] / s, cross[1] / s, cross[2] / s], s.atan2(u[0]))
    };
    let aligned = rotate(state, axis1, angle1)?;

    let mm2 = aligned.moments();
    let vy = mm2.covariance[1][1];
    let vz = mm2.covariance[2][2];
    let cyz = mm2.covariance[1][2];
    // Degenerate transverse block (e.g. any CSS): every in-plane angle is
    // optimal, so keep the identity instead of amplifying roundoff.
    let tol = 1e-9 * (1.0 + vy + vz);
    let angle2 = if cyz.abs() < tol && (vy - vz).abs() < tol {
        0.0
    } else {
        0.5 * (-2.0 * cyz).atan2(vy - vz)
    };
    let oriented = rotate(&aligned, [1.0, 0.0, 0.0], angle2)?;

    let net = Su2::from_axis_angle([1.0, 0.0, 0.0], angle2)
        .after(Su2::from_axis_angle(axis1, angle1));
    let (axis, angle) = net.to_axis_angle();
    Ok((oriented, Rotation { axis, angle }))
}

/// Quantum Fisher information `4 Var(J.axis)` of a pure state for phase
/// generation about `axis`. Bounded by `N^2`.
pub fn qfi(state: &CollectiveSpinState, axis: [f64; 3]) -> Result<f64> {
    if axis.iter().any(|c| !c.is_finite()) {
        return Err(invalid("qfi: non-finite axis"));
    }
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("qfi: axis norm {norm} is not 1")));
    }
    let axis = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
    let ap = ladder_coefficients(state.n_atoms());
    let w = apply_axis(state.n_atoms(), &ap, axis, state.amplitudes());
    let mean = inner(state.amplitudes(), &w).re;
    let second = inner(&w, &w).re;
    Ok(4.0 * (second - mean * mean).max(0.0))
}

/// Metrological gain convention for expressing `xi` in decibels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainConvention {
    /// `-20 log10(xi)` (variance reduction).
    Variance,
    /// `-10 log10(xi)`.
    Amplitude,
}

/// Expresses a squeezing parameter in dB under the chosen convention.
pub fn gain_db(xi: f64, convention: GainConvention) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(invalid(format!("gain_db: xi {xi} must be > 0")));
    }
    Ok(match convention {
        GainConvention::Variance => -20.0 * xi.log10(),
        GainConvention::Amplitude => -10.0 * xi.log10(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{mach_zehnder, one_axis_twist};
    use crate::state::CollectiveSpinState;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn css_through_mz_is_shot_noise_limited() {
        for n in [4u32, 100] {
            let input = CollectiveSpinState::dicke(n, -(n as i64)).unwrap();
            let prepared = rotate(&input, [0.0, 1.0, 0.0], FRAC_PI_2).unwrap();
            let report = phase_sensitivity(&prepared, FRAC_PI_2, Observable::Jz, 0.0).unwrap();
            assert_abs_diff_eq!(report.delta_phi * (n as f64).sqrt(), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(report.xi.unwrap(), 1.0, epsilon = 1e-9);
            assert_eq!(report.snl, 1.0 / (n as f64).sqrt());
            assert_eq!(report.heisenberg, 1.0 / n as f64);
        }
    }

    #[test]
    fn output_moments_agree_with_state_propagation() {
        // The -Jx shortcut must match literally running the interferometer.
        let input = CollectiveSpinState::css(24, 0.9, 0.4).unwrap();
        let prepared = one_axis_twist(
            &rotate(&input, [0.0, 1.0, 0.0], FRAC_PI_2).unwrap(),
            0.07,
        );
        for &phi in &[0.0, 0.3, 1.2, 2.5] {
            let direct = rotate(
                &accumulate_phase(&prepared, phi),
                [0.0, 1.0, 0.0],
                FRAC_PI_2,
            )
            .unwrap()
            .moments();
            let shortcut = output_jz_moments(&prepared, phi);
            for p in 0..4 {
                assert_abs_diff_eq!(direct.jz_powers[p], shortcut[p], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sensitivity_is_undefined_at_extrema() {
        let input = CollectiveSpinState::dicke(10, -10).unwrap();
        let prepared = rotate(&input, [0.0, 1.0, 0.0], FRAC_PI_2).unwrap();
        match phase_sensitivity(&prepared, 0.0, Observable::Jz, 0.0) {
            Err(Error::UndefinedSensitivity(_)) => {}
            other => panic!("expected undefined sensitivity, got {other:?}"),
        }
    }

    #[test]
    fn xi_from_signal_examples() {
        assert_abs_diff_eq!(xi_from_signal(0.1, 100), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(xi_from_signal(0.02, 100), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(xi_from_signal(1.0 / 64.0, 64), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn wineland_xi_of_css_is_unity() {
        for n in [4u32, 100] {
            let s = CollectiveSpinState::css(n, FRAC_PI_2, 0.0).unwrap();
            assert_abs_diff_eq!(wineland_xi(&s).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wineland_xi_undefined_for_twin_fock() {
        let s = CollectiveSpinState::dicke(8, 0).unwrap();
        assert_eq!(wineland_xi(&s), None);
    }

    #[test]
    fn orientation_is_identity_for_aligned_css() {
        let s = CollectiveSpinState::css(12, FRAC_PI_2, 0.0).unwrap();
        let (oriented, rot) = optimally_orient(&s).unwrap();
        assert!(rot.angle.abs() < 1e-9 || (rot.angle - 2.0 * PI).abs() < 1e-9);
        let before = wineland_xi(&s).unwrap();
        let after = wineland_xi(&oriented).unwrap();
        assert_abs_diff_eq!(before, after, epsilon = 1e-9);
    }

    #[test]
    fn orientation_minimizes_transverse_variance() {
        let base = CollectiveSpinState::css(40, FRAC_PI_2, 0.0).unwrap();
        let sheared = one_axis_twist(&base, 0.06);
        let (oriented, _) = optimally_orient(&sheared).unwrap();
        let mm = oriented.moments();
        // Mean spin on +x.
        assert!(mm.mean[0] > 0.0);
        assert_abs_diff_eq!(mm.mean[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mm.mean[2], 0.0, epsilon = 1e-9);
        // Var(Jz) equals the smaller eigenvalue of the transverse block.
        let vy = mm.covariance[1][1];
        let vz = mm.covariance[2][2];
        let cyz = mm.covariance[1][2];
        let lo = 0.5 * (vy + vz) - (0.25 * (vy - vz) * (vy - vz) + cyz * cyz).sqrt();
        assert_abs_diff_eq!(vz, lo, epsilon = 1e-9);
        assert!(vz <= vy + 1e-9);

        // Idempotent: a second pass changes xi by < 1e-9.
        let xi1 = wineland_xi(&oriented).unwrap();
        let (again, _) = optimally_orient(&oriented).unwrap();
        let xi2 = wineland_xi(&again).unwrap();
        assert_abs_diff_eq!(xi1, xi2, epsilon = 1e-9);
    }

    #[test]
    fn orientation_rejects_zero_mean_spin() {
        let tf = CollectiveSpinState::dicke(8, 0).unwrap();
        match optimally_orient(&tf) {
            Err(Error::UndefinedOrientation(_)) => {}
            other => panic!("expected undefined orientation, got {other:?}"),
        }
    }

    #[test]
    fn net_rotation_reproduces_orientation() {
        let base = CollectiveSpinState::css(16, 1.2, 0.7).unwrap();
        let sheared = one_axis_twist(&base, 0.1);
        let (oriented, rot) = optimally_orient(&sheared).unwrap();
        let replayed = rotate(&sheared, rot.axis, rot.angle).unwrap();
        let ov = oriented.overlap(&replayed).unwrap().norm();
        assert_abs_diff_eq!(ov, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn qfi_examples() {
        // CSS, axis orthogonal to the mean spin: qfi = N.
        let css = CollectiveSpinState::css(10, FRAC_PI_2, 0.0).unwrap();
        assert_abs_diff_eq!(qfi(&css, [0.0, 0.0, 1.0]).unwrap(), 10.0, epsilon = 1e-10);
        // Twin-Fock along x: 2 J (J+1) = 12 for N = 4.
        let tf = CollectiveSpinState::dicke(4, 0).unwrap();
        assert_abs_diff_eq!(qfi(&tf, [1.0, 0.0, 0.0]).unwrap(), 12.0, epsilon = 1e-12);
        assert!(qfi(&tf, [0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gain_db_examples() {
        assert_abs_diff_eq!(
            gain_db(0.4, GainConvention::Variance).unwrap(),
            7.958800173440752,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            gain_db(0.60, GainConvention::Variance).unwrap(),
            4.436974992327127,
            epsilon = 1e-12
        );
        assert_eq!(gain_db(1.0, GainConvention::Variance).unwrap(), 0.0);
        assert_eq!(gain_db(1.0, GainConvention::Amplitude).unwrap(), 0.0);
        assert!(gain_db(0.0, GainConvention::Variance).is_err());
        assert!(gain_db(-1.0, GainConvention::Amplitude).is_err());
    }

    #[test]
    fn noisy_jz_squared_stats_match_direct_average() {
        // Closed-form noisy moments vs a brute-force average over the
        // discrete m distribution convolved with Gaussian noise moments.
        let s = CollectiveSpinState::css(12, FRAC_PI_2, 0.0).unwrap();
        let out = mach_zehnder(&s, 0.8);
        let mm = out.moments();
        let sigma = 1.7;
        let (mean, var) = noisy_observable_stats(&mm.jz_powers, Observable::JzSquared, sigma);

        let probs = out.probabilities();
        let s2 = sigma * sigma;
        let mut mean_direct = 0.0;
        let mut second_direct = 0.0;
        for (k, p) in probs.iter().enumerate() {
            let m = out.m_value(k);
            // E[(m+e)^2] and E[(m+e)^4] for fixed m.
            mean_direct += p * (m * m + s2);
            second_direct += p * (m.powi(4) + 6.0 * m * m * s2 + 3.0 * s2 * s2);
        }
        assert_abs_diff_eq!(mean, mean_direct, epsilon = 1e-9);
        assert_abs_diff_eq!(var, second_direct - mean_direct * mean_direct, epsilon = 1e-9);
    }
}
