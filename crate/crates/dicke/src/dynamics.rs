//! Unitary and measurement dynamics: pulses, phase accumulation, one-axis
//! twisting, QND conditioning, interferometer sequences, and seeded Monte
//! Carlo readout.
//!
//! All unitaries preserve the norm to better than 1e-12. Stochastic
//! operations take explicit 64-bit seeds; Monte Carlo shots draw from
//! counter-based substreams of the master seed, so results are reproducible
//! and shots may run in parallel.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::rotation::{apply_y_rotation, apply_z_phase, Su2};
use crate::state::CollectiveSpinState;
use crate::{invalid, Error, Result};

/// Axis of every Mach-Zehnder beamsplitter pulse in this crate: `+y`.
///
/// With this choice, `mach_zehnder` on the lowest Dicke state `|J, -J>`
/// produces the fringe `<Jz> = (N/2) cos(phi)`, `Var(Jz) = (N/4) sin^2(phi)`.
pub const BEAMSPLITTER_AXIS: [f64; 3] = [0.0, 1.0, 0.0];

/// An axis-angle rotation, as returned by orientation helpers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub axis: [f64; 3],
    pub angle: f64,
}

fn checked_axis(axis: [f64; 3]) -> Result<[f64; 3]> {
    if axis.iter().any(|c| !c.is_finite()) {
        return Err(invalid("rotate: non-finite axis"));
    }
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("rotate: axis norm {norm} is not 1")));
    }
    Ok([axis[0] / norm, axis[1] / norm, axis[2] / norm])
}

/// Exact SU(2) rotation `exp(-i angle axis.J)`.
pub fn rotate(state: &CollectiveSpinState, axis: [f64; 3], angle: f64) -> Result<CollectiveSpinState> {
    if !angle.is_finite() {
        return Err(invalid("rotate: non-finite angle"));
    }
    let axis = checked_axis(axis)?;
    let (alpha, beta, gamma) = Su2::from_axis_angle(axis, angle).euler_zyz();
    let n = state.n_atoms();
    let mut amps = state.amplitudes().to_vec();
    if beta == 0.0 {
        apply_z_phase(n, alpha + gamma, &mut amps);
    } else {
        apply_z_phase(n, gamma, &mut amps);
        apply_y_rotation(n, beta, &mut amps);
        apply_z_phase(n, alpha, &mut amps);
    }
    let mut out = CollectiveSpinState::from_normalized(n, amps);
    out.renormalize();
    Ok(out)
}

/// Relative phase accumulation: `c_m -> exp(-i phi m) c_m`. Equal to a
/// rotation about `+z`, but diagonal and O(N).
pub fn accumulate_phase(state: &CollectiveSpinState, phi: f64) -> CollectiveSpinState {
    let mut amps = state.amplitudes().to_vec();
    apply_z_phase(state.n_atoms(), phi, &mut amps);
    CollectiveSpinState::from_normalized(state.n_atoms(), amps)
}

/// One-axis twisting `exp(-i mu Jz^2)`: `c_m -> exp(-i mu m^2) c_m`. The
/// `Jz` probability distribution is left untouched.
pub fn one_axis_twist(state: &CollectiveSpinState, mu: f64) -> CollectiveSpinState {
    let n = state.n_atoms() as i64;
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let m = (2 * k as i64 - n) as f64 * 0.5;
            let p = -mu * m * m;
            a * Complex64::new(p.cos(), p.sin())
        })
        .collect();
    CollectiveSpinState::from_normalized(state.n_atoms(), amps)
}

/// Mach-Zehnder sequence: `pi/2` beamsplitter, phase `phi`, `pi/2`
/// beamsplitter, both pulses about [`BEAMSPLITTER_AXIS`].
pub fn mach_zehnder(state: &CollectiveSpinState, phi: f64) -> CollectiveSpinState {
    let bs1 = rotate(state, BEAMSPLITTER_AXIS, std::f64::consts::FRAC_PI_2)
        .expect("beamsplitter axis is unit");
    let phased = accumulate_phase(&bs1, phi);
    rotate(&phased, BEAMSPLITTER_AXIS, std::f64::consts::FRAC_PI_2)
        .expect("beamsplitter axis is unit")
}

/// QND measurement of `Jz` with probe resolution `sigma` (atoms).
///
/// The outcome `r` is drawn from the exact predictive density (the `Jz`
/// distribution blurred by a Gaussian of width `sigma`) unless
/// `forced_outcome` is given. The state is conditioned with the Gaussian
/// Kraus kernel `c_m -> c_m exp(-(m - r)^2 / (4 sigma^2))`, computed in the
/// log domain so weak measurements never underflow, then renormalized.
pub fn qnd_measure(
    state: &CollectiveSpinState,
    sigma: f64,
    forced_outcome: Option<f64>,
    seed: u64,
) -> Result<(CollectiveSpinState, f64)> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("qnd_measure: sigma {sigma} must be > 0")));
    }
    let outcome = match forced_outcome {
        Some(r) => {
            if !r.is_finite() {
                return Err(invalid("qnd_measure: non-finite forced outcome"));
            }
            r
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let probs = state.probabilities();
            let slot = sample_slot(&probs, &mut rng);
            let noise: f64 = rng.sample(StandardNormal);
            state.m_value(slot) + sigma * noise
        }
    };

    let inv_four_sigma_sq = 1.0 / (4.0 * sigma * sigma);
    // Stabilize in the log domain: subtract the maximum log-weight over
    // slots that actually carry amplitude.
    let mut l_max = f64::NEG_INFINITY;
    for (k, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() > 0.0 {
            let d = state.m_value(k) - outcome;
            let l = -d * d * inv_four_sigma_sq;
            if l > l_max {
                l_max = l;
            }
        }
    }
    let amps: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let d = state.m_value(k) - outcome;
            a * (-d * d * inv_four_sigma_sq - l_max).exp()
        })
        .collect();
    let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return Err(Error::DegenerateOutcome(format!(
            "qnd_measure: conditioning on r = {outcome} annihilated the state"
        )));
    }
    let mut out = CollectiveSpinState::from_normalized(state.n_atoms(), amps);
    out.renormalize();
    Ok((out, outcome))
}

/// One step of an interferometer protocol.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceElement {
    Rotation { axis: [f64; 3], angle: f64 },
    PhaseAccumulation { phi: f64 },
    /// `mu` is the dimensionless twisting strength (chi * t).
    OneAxisTwist { mu: f64 },
    /// `sigma` is the probe resolution in atoms; a fixed `outcome` replaces
    /// sampling.
    QndMeasurement { sigma: f64, outcome: Option<f64> },
    /// Detection noise recorded for downstream sampling; never applied to
    /// the state. Allowed only as the final element.
    ReadoutNoise { sigma_det: f64 },
}

impl SequenceElement {
    fn validate(&self) -> Result<()> {
        match self {
            SequenceElement::Rotation { axis, angle } => {
                checked_axis(*axis)?;
                if !angle.is_finite() {
                    return Err(invalid("non-finite rotation angle"));
                }
            }
            SequenceElement::PhaseAccumulation { phi } => {
                if !phi.is_finite() {
                    return Err(invalid("non-finite phase"));
                }
            }
            SequenceElement::OneAxisTwist { mu } => {
                if !mu.is_finite() {
                    return Err(invalid("non-finite twist strength"));
                }
            }
            SequenceElement::QndMeasurement { sigma, outcome } => {
                if !(*sigma > 0.0) || !sigma.is_finite() {
                    return Err(invalid(format!("QND sigma {sigma} must be > 0")));
                }
                if let Some(r) = outcome {
                    if !r.is_finite() {
                        return Err(invalid("non-finite QND outcome"));
                    }
                }
            }
            SequenceElement::ReadoutNoise { sigma_det } => {
                if !(*sigma_det >= 0.0) || !sigma_det.is_finite() {
                    return Err(invalid(format!("sigma_det {sigma_det} must be >= 0")));
                }
            }
        }
        Ok(())
    }
}

/// Result of [`apply_sequence`]: the final state, QND outcomes in order of
/// occurrence, and the recorded readout noise, if any.
#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    pub state: CollectiveSpinState,
    pub qnd_outcomes: Vec<f64>,
    pub readout_noise: Option<f64>,
}

/// Applies the elements left to right. QND elements draw from per-element
/// substreams of `seed`, so insertion or removal of other element kinds does
/// not shift downstream outcomes.
pub fn apply_sequence(
    state: &CollectiveSpinState,
    elements: &[SequenceElement],
    seed: u64,
) -> Result<SequenceOutcome> {
    let at = |index: usize, source: Error| Error::Sequence {
        index,
        source: Box::new(source),
    };
    for (i, el) in elements.iter().enumerate() {
        el.validate().map_err(|e| at(i, e))?;
        if matches!(el, SequenceElement::ReadoutNoise { .. }) && i + 1 != elements.len() {
            return Err(at(i, invalid("ReadoutNoise must be the final element")));
        }
    }

    let mut current = state.clone();
    let mut qnd_outcomes = Vec::new();
    let mut readout_noise = None;
    for (i, el) in elements.iter().enumerate() {
        match el {
            SequenceElement::Rotation { axis, angle } => {
                current = rotate(&current, *axis, *angle).map_err(|e| at(i, e))?;
            }
            SequenceElement::PhaseAccumulation { phi } => {
                current = accumulate_phase(&current, *phi);
            }
            SequenceElement::OneAxisTwist { mu } => {
                current = one_axis_twist(&current, *mu);
            }
            SequenceElement::QndMeasurement { sigma, outcome } => {
                let (next, r) = qnd_measure(&current, *sigma, *outcome, derive_seed(seed, i as u64))
                    .map_err(|e| at(i, e))?;
                current = next;
                qnd_outcomes.push(r);
            }
            SequenceElement::ReadoutNoise { sigma_det } => {
                readout_noise = Some(*sigma_det);
            }
        }
    }
    Ok(SequenceOutcome {
        state: current,
        qnd_outcomes,
        readout_noise,
    })
}

/// Interferometer output observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Jz,
    /// `Jz^2`, the pair-correlation readout for zero-mean-spin states.
    JzSquared,
}

/// Readout model: observable, detection noise, shot count, and master seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    pub observable: Observable,
    /// Detection noise in atoms, added to the sampled eigenvalue before the
    /// observable mapping (atoms are counted first, post-processed after).
    pub sigma_det: f64,
    pub shots: u64,
    pub seed: u64,
}

/// Draws `shots` outcomes: `m` from `|c_m|^2`, plus Gaussian detection
/// noise, then the observable mapping (identity for `Jz`, square for
/// `JzSquared`). Shot `i` uses substream `i + 1` of the seed; output order
/// is by shot index, so runs are bit-reproducible.
pub fn sample_measurement(state: &CollectiveSpinState, model: &MeasurementModel) -> Result<Vec<f64>> {
    if model.shots < 1 {
        return Err(invalid("sample_measurement: shots must be >= 1"));
    }
    if !(model.sigma_det >= 0.0) || !model.sigma_det.is_finite() {
        return Err(invalid(format!(
            "sample_measurement: sigma_det {} must be >= 0",
            model.sigma_det
        )));
    }
    let probs = state.probabilities();
    let cdf = cumulative(&probs);
    let n = state.n_atoms() as i64;
    let out = (0..model.shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
            rng.set_stream(shot + 1);
            let slot = sample_cdf(&cdf, &mut rng);
            let mut value = (2 * slot as i64 - n) as f64 * 0.5;
            if model.sigma_det > 0.0 {
                let noise: f64 = rng.sample(StandardNormal);
                value += model.sigma_det * noise;
            }
            match model.observable {
                Observable::Jz => value,
                Observable::JzSquared => value * value,
            }
        })
        .collect();
    Ok(out)
}

/// SplitMix64 stream derivation for per-element / per-shot seeds.
pub(crate) fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    cdf
}

fn sample_cdf(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let total = *cdf.last().expect("nonempty state");
    let u: f64 = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn sample_slot(probs: &[f64], rng: &mut impl Rng) -> usize {
    let cdf = cumulative(probs);
    sample_cdf(&cdf, rng)
}
