//! Pure symmetric N-atom states in the Dicke basis and their spin moments.
//!
//! A state is stored as `N + 1` complex amplitudes `c_m` over
//! `|J, m>, m = -J..+J` with `J = N/2`. Half-integer projections are kept
//! exact by indexing with the doubled eigenvalue `2m` (an integer for every
//! slot). Amplitude slot `k = 0..=N` holds `m = k - J`, so `2m = 2k - N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{invalid, Error, Result};

/// Normalization slack tolerated before a loaded amplitude list is rescaled.
const NORM_TOL: f64 = 1e-12;

/// A pure symmetric state of `n_atoms` two-level atoms, `J = n_atoms / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveSpinState {
    n_atoms: u32,
    amps: Vec<Complex64>,
}

impl CollectiveSpinState {
    /// Coherent spin state pointing along `(polar, azimuth)`, polar measured
    /// from the `+z` axis.
    ///
    /// Amplitude convention (this fixes all phases in the crate):
    ///
    /// ```text
    /// c_m = sqrt(C(N, J+m)) * cos(polar/2)^(J+m) * sin(polar/2)^(J-m) * exp(-i m azimuth)
    /// ```
    ///
    /// equivalent to rotating the top Dicke state `|J, +J>` down by `polar`
    /// about `+y` and then by `azimuth` about `+z`, up to a global phase.
    /// The mean spin is `(N/2) * (sin t cos p, sin t sin p, cos t)`.
    /// Half-angle cosines/sines below `1e-15` are snapped to zero, so
    /// `css(n, pi, _)` is exactly the lowest Dicke state.
    ///
    /// Binomial weights are computed with log-factorials; supported up to
    /// `N ~ 1e4` in double precision.
    pub fn css(n_atoms: u32, polar: f64, azimuth: f64) -> Result<Self> {
        if n_atoms < 1 {
            return Err(invalid("css: n_atoms must be >= 1"));
        }
        if !polar.is_finite() || !azimuth.is_finite() {
            return Err(invalid("css: angles must be finite"));
        }
        let n = n_atoms as usize;
        let mut ch = (polar * 0.5).cos();
        let mut sh = (polar * 0.5).sin();
        if ch.abs() < 1e-15 {
            ch = 0.0;
            sh = sh.signum();
        }
        if sh.abs() < 1e-15 {
            sh = 0.0;
            ch = ch.signum();
        }

        let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
        if ch == 0.0 {
            // Only the k = 0 (m = -J) slot survives.
            amps[0] = Complex64::new(sh.powi(n as i32), 0.0);
        } else if sh == 0.0 {
            amps[n] = Complex64::new(ch.powi(n as i32), 0.0);
        } else {
            let lnf = ln_factorials(n);
            let ln_ch = ch.abs().ln();
            let ln_sh = sh.abs().ln();
            for (k, amp) in amps.iter_mut().enumerate() {
                let ln_binom = lnf[n] - lnf[k] - lnf[n - k];
                let ln_mag = 0.5 * ln_binom + k as f64 * ln_ch + (n - k) as f64 * ln_sh;
                let mut sign = 1.0;
                if ch < 0.0 && k % 2 == 1 {
                    sign = -sign;
                }
                if sh < 0.0 && (n - k) % 2 == 1 {
                    sign = -sign;
                }
                let m = (k as i64 * 2 - n as i64) as f64 * 0.5;
                let phase = -m * azimuth;
                *amp = sign
                    * ln_mag.exp()
                    * Complex64::new(phase.cos(), phase.sin());
            }
        }

        let mut state = Self { n_atoms, amps };
        state.renormalize();
        Ok(state)
    }

    /// Dicke state `|J, m>` with `two_m = 2m` (doubled to keep half-integer
    /// projections exact). `two_m = 0` is the twin-Fock state.
    pub fn dicke(n_atoms: u32, two_m: i64) -> Result<Self> {
        if n_atoms < 1 {
            return Err(invalid("dicke: n_atoms must be >= 1"));
        }
        let n = n_atoms as i64;
        if two_m.abs() > n || (two_m + n) % 2 != 0 {
            return Err(invalid(format!(
                "dicke: 2m = {two_m} outside {{-N, -N+2, ..., N}} for N = {n}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n as usize + 1];
        amps[((two_m + n) / 2) as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n_atoms, amps })
    }

    /// Builds a state from raw amplitudes (slot `k` holds `m = k - N/2`).
    /// The list must have length `N + 1` and a nonzero finite norm; it is
    /// rescaled to unit norm when off by more than `1e-12`.
    pub fn from_amplitudes(n_atoms: u32, amps: Vec<Complex64>) -> Result<Self> {
        if n_atoms < 1 {
            return Err(invalid("from_amplitudes: n_atoms must be >= 1"));
        }
        if amps.len() != n_atoms as usize + 1 {
            return Err(invalid(format!(
                "from_amplitudes: expected {} amplitudes, got {}",
                n_atoms + 1,
                amps.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(invalid("from_amplitudes: non-finite amplitude"));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(invalid("from_amplitudes: zero or non-finite norm"));
        }
        let mut state = Self { n_atoms, amps };
        if (norm_sq - 1.0).abs() > NORM_TOL {
            state.renormalize();
        }
        Ok(state)
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    /// Dimension of the symmetric subspace, `N + 1`.
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Total spin `J = N/2`.
    pub fn j(&self) -> f64 {
        self.n_atoms as f64 * 0.5
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Doubled projection `2m` of amplitude slot `k`.
    pub fn two_m(&self, k: usize) -> i64 {
        2 * k as i64 - self.n_atoms as i64
    }

    /// Projection `m` of amplitude slot `k`.
    pub fn m_value(&self, k: usize) -> f64 {
        self.two_m(k) as f64 * 0.5
    }

    /// `|c_m|^2` for every slot.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Inner product `<self|other>`; errors if atom numbers differ.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        if self.n_atoms != other.n_atoms {
            return Err(Error::DimensionMismatch(format!(
                "overlap: n_atoms {} vs {}",
                self.n_atoms, other.n_atoms
            )));
        }
        Ok(inner(&self.amps, &other.amps))
    }

    /// Exact first and second moments of `(Jx, Jy, Jz)` plus `<Jz^p>` up to
    /// `p = 4`, from the tridiagonal ladder action.
    pub fn moments(&self) -> SpinMoments {
        let ap = ladder_coefficients(self.n_atoms);
        let wx = apply_jx(&ap, &self.amps);
        let wy = apply_jy(&ap, &self.amps);
        let wz = apply_jz(self.n_atoms, &self.amps);
        let w = [&wx, &wy, &wz];

        let mut mean = [0.0; 3];
        for (i, wi) in w.iter().enumerate() {
            mean[i] = inner(&self.amps, wi).re;
        }
        let mut covariance = [[0.0; 3]; 3];
        for i in 0..3 {
            for jj in i..3 {
                // Re<J_i psi, J_j psi> is the symmetrized second moment.
                let c = inner(w[i], w[jj]).re - mean[i] * mean[jj];
                covariance[i][jj] = c;
                covariance[jj][i] = c;
            }
        }
        for (i, row) in covariance.iter_mut().enumerate() {
            if row[i] < 0.0 {
                row[i] = 0.0;
            }
        }

        let mut jz_powers = [0.0; 4];
        for (k, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            let m = self.m_value(k);
            let mut mp = m;
            for power in &mut jz_powers {
                *power += p * mp;
                mp *= m;
            }
        }

        let spin_length = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
        SpinMoments {
            n_atoms: self.n_atoms,
            mean,
            covariance,
            jz_powers,
            spin_length,
        }
    }

    /// Serializable snapshot in the checkpoint record format.
    pub fn to_record(&self) -> StateRecord {
        StateRecord {
            n_atoms: self.n_atoms,
            amplitudes: self.amps.iter().map(|a| (a.re, a.im)).collect(),
        }
    }

    /// Rebuilds a state from a checkpoint record.
    pub fn from_record(record: &StateRecord) -> Result<Self> {
        let amps = record
            .amplitudes
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect();
        Self::from_amplitudes(record.n_atoms, amps)
    }

    pub(crate) fn from_normalized(n_atoms: u32, amps: Vec<Complex64>) -> Self {
        Self { n_atoms, amps }
    }

    pub(crate) fn renormalize(&mut self) {
        let norm: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut self.amps {
            *a /= norm;
        }
    }
}

/// First and second spin moments of a state, hbar = 1.
///
/// `covariance` uses the symmetrized product
/// `Cov(J_i, J_j) = <J_i J_j + J_j J_i>/2 - <J_i><J_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMoments {
    pub n_atoms: u32,
    /// `(<Jx>, <Jy>, <Jz>)`.
    pub mean: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    /// `<Jz^p>` for `p = 1..=4`.
    pub jz_powers: [f64; 4],
    /// `|<J>|`, at most `N/2` for pure symmetric states.
    pub spin_length: f64,
}

impl SpinMoments {
    pub fn var_jx(&self) -> f64 {
        self.covariance[0][0]
    }

    pub fn var_jy(&self) -> f64 {
        self.covariance[1][1]
    }

    pub fn var_jz(&self) -> f64 {
        self.covariance[2][2]
    }

    /// Variance of the spin component along an arbitrary direction.
    pub fn var_along(&self, dir: [f64; 3]) -> f64 {
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                v += dir[i] * self.covariance[i][j] * dir[j];
            }
        }
        v
    }
}

/// Checkpoint record: atom number plus amplitudes as `(re, im)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub n_atoms: u32,
    pub amplitudes: Vec<(f64, f64)>,
}

/// `ln(k!)` for `k = 0..=n`, built by compensated summation.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 1..=n {
        let term = (k as f64).ln();
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        table.push(sum + comp);
    }
    table
}

/// Raising coefficients `ap[k] = sqrt((k+1)(N-k))`, the matrix element
/// `<k+1| J+ |k>`.
pub(crate) fn ladder_coefficients(n_atoms: u32) -> Vec<f64> {
    let n = n_atoms as usize;
    (0..n)
        .map(|k| (((k + 1) * (n - k)) as f64).sqrt())
        .collect()
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn apply_jx(ap: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        if k > 0 {
            acc += ap[k - 1] * v[k - 1];
        }
        if k < n {
            acc += ap[k] * v[k + 1];
        }
        *o = 0.5 * acc;
    }
    out
}

pub(crate) fn apply_jy(ap: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len() - 1;
    let half_i = Complex64::new(0.0, -0.5);
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        if k > 0 {
            acc += ap[k - 1] * v[k - 1];
        }
        if k < n {
            acc -= ap[k] * v[k + 1];
        }
        *o = half_i * acc;
    }
    out
}

pub(crate) fn apply_jz(n_atoms: u32, v: &[Complex64]) -> Vec<Complex64> {
    let n = n_atoms as i64;
    v.iter()
        .enumerate()
        .map(|(k, a)| (2 * k as i64 - n) as f64 * 0.5 * a)
        .collect()
}

/// Applies `axis . J` (axis need not be normalized here; callers validate).
pub(crate) fn apply_axis(n_atoms: u32, ap: &[f64], axis: [f64; 3], v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len() - 1;
    let lower = Complex64::new(axis[0], -axis[1]) * 0.5; // with J+
    let upper = Complex64::new(axis[0], axis[1]) * 0.5; // with J-
    let nz = axis[2];
    let nn = n_atoms as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for (k, o) in out.iter_mut().enumerate() {
        let m = (2 * k as i64 - nn) as f64 * 0.5;
        let mut acc = nz * m * v[k];
        if k > 0 {
            acc += lower * ap[k - 1] * v[k - 1];
        }
        if k < n {
            acc += upper * ap[k] * v[k + 1];
        }
        *o = acc;
    }
    out
}
