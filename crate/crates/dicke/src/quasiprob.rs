//! Bloch-sphere quasiprobability grids: the spherical Wigner function via
//! its multipole expansion, and the Husimi Q function.
//!
//! Both kernels are normalized so the integral over the sphere with the
//! `sin(theta) dtheta dphi` measure is 1. Grids are uniform with angles at
//! cell centers and no pole duplication; the polar centers coincide with
//! Fejer (first rule) quadrature nodes in `cos(theta)`, so
//! [`SphereGrid::integral`] is exact for band-limited sphere functions
//! whenever `n_polar > 2J` (Wigner content stops at multipole `K = 2J`).
//!
//! Wigner evaluation is `W = sum_KQ rho_KQ Y_KQ` with tensor components
//! `rho_KQ` built from Clebsch-Gordan tables; cost grows like `N^3`, so it
//! is supported for `N <= 100`. The Husimi kernel
//! `Q = (N+1)/(4 pi) |<css(theta, phi)|psi>|^2` is the documented fallback
//! for larger ensembles.

use num_complex::Complex64;
use rayon::prelude::*;
use std::io::{self, Write};

use crate::cg::cg_jkj;
use crate::state::CollectiveSpinState;
use crate::{invalid, Result};

/// Largest atom number accepted by the Wigner kernel.
pub const WIGNER_MAX_ATOMS: u32 = 100;

/// Declared grid normalization, also written to CSV metadata.
pub const NORMALIZATION: &str = "unit-sphere-integral";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Wigner,
    Husimi,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Wigner => "wigner",
            Kernel::Husimi => "husimi",
        }
    }
}

/// Quasiprobability values on a uniform Bloch-sphere grid, row-major in
/// polar then azimuth, angles at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub kernel: Kernel,
    pub n_atoms: u32,
    pub values: Vec<f64>,
}

impl SphereGrid {
    pub fn theta(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * std::f64::consts::PI / self.n_polar as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / self.n_azimuth as f64
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_azimuth + j]
    }

    /// Sphere integral with Fejer polar weights and the exact uniform rule
    /// in azimuth. Exact for polynomial content of degree < `n_polar` in
    /// `cos(theta)` and azimuthal harmonics below `n_azimuth`.
    pub fn integral(&self) -> f64 {
        let w = fejer1_weights(self.n_polar);
        let dphi = 2.0 * std::f64::consts::PI / self.n_azimuth as f64;
        let mut total = 0.0;
        for i in 0..self.n_polar {
            let row: f64 = self.values[i * self.n_azimuth..(i + 1) * self.n_azimuth]
                .iter()
                .sum();
            total += w[i] * row;
        }
        total * dphi
    }

    /// CSV emission: one metadata comment, a column header, then
    /// `theta,phi,value` rows in grid order at 12 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "# n_atoms={} kernel={} n_polar={} n_azimuth={} normalization={}",
            self.n_atoms,
            self.kernel.name(),
            self.n_polar,
            self.n_azimuth,
            NORMALIZATION
        )?;
        writeln!(out, "theta,phi,value")?;
        for i in 0..self.n_polar {
            let theta = self.theta(i);
            for j in 0..self.n_azimuth {
                writeln!(
                    out,
                    "{:.11e},{:.11e},{:.11e}",
                    theta,
                    self.phi(j),
                    self.value(i, j)
                )?;
            }
        }
        Ok(())
    }
}

fn check_dims(n_polar: usize, n_azimuth: usize) -> Result<()> {
    if n_polar < 8 || n_azimuth < 8 {
        return Err(invalid(format!(
            "grid dimensions {n_polar} x {n_azimuth} must be at least 8 x 8"
        )));
    }
    Ok(())
}

/// Spherical Wigner function on a grid. `N <= 100` (see module docs).
pub fn wigner_grid(
    state: &CollectiveSpinState,
    n_polar: usize,
    n_azimuth: usize,
) -> Result<SphereGrid> {
    check_dims(n_polar, n_azimuth)?;
    check_wigner_size(state)?;
    let rho = multipoles(state);
    let k_max = state.n_atoms() as usize;
    // Rows are independent; the multipole table is shared read-only.
    let values: Vec<f64> = (0..n_polar)
        .into_par_iter()
        .flat_map_iter(|i| {
            let theta = (i as f64 + 0.5) * std::f64::consts::PI / n_polar as f64;
            let plm = PlmTable::build(k_max, theta.cos());
            let f = azimuthal_profiles(&rho, &plm);
            (0..n_azimuth).map(move |j| {
                let phi = (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / n_azimuth as f64;
                eval_profiles(&f, phi)
            })
        })
        .collect();
    Ok(SphereGrid {
        n_polar,
        n_azimuth,
        kernel: Kernel::Wigner,
        n_atoms: state.n_atoms(),
        values,
    })
}

/// Wigner function at arbitrary points, for covariance checks and plots.
pub fn wigner_values(state: &CollectiveSpinState, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    check_wigner_size(state)?;
    let rho = multipoles(state);
    let k_max = state.n_atoms() as usize;
    Ok(points
        .iter()
        .map(|&(theta, phi)| {
            let plm = PlmTable::build(k_max, theta.cos());
            eval_profiles(&azimuthal_profiles(&rho, &plm), phi)
        })
        .collect())
}

fn check_wigner_size(state: &CollectiveSpinState) -> Result<()> {
    if state.n_atoms() > WIGNER_MAX_ATOMS {
        return Err(invalid(format!(
            "wigner kernel supports N <= {WIGNER_MAX_ATOMS} (got {}); use the husimi kernel",
            state.n_atoms()
        )));
    }
    Ok(())
}

/// Husimi Q value at one Bloch-sphere direction.
pub fn husimi_value(state: &CollectiveSpinState, theta: f64, phi: f64) -> f64 {
    let css = CollectiveSpinState::css(state.n_atoms(), theta, phi)
        .expect("finite angles and valid N");
    let ov = css.overlap(state).expect("same atom number");
    (state.n_atoms() as f64 + 1.0) / (4.0 * std::f64::consts::PI) * ov.norm_sqr()
}

/// Husimi Q function on a grid; works for any `N`.
pub fn husimi_grid(
    state: &CollectiveSpinState,
    n_polar: usize,
    n_azimuth: usize,
) -> Result<SphereGrid> {
    check_dims(n_polar, n_azimuth)?;
    let n = state.n_atoms();
    let scale = (n as f64 + 1.0) / (4.0 * std::f64::consts::PI);
    let values: Vec<f64> = (0..n_polar)
        .into_par_iter()
        .flat_map_iter(|i| {
            let theta = (i as f64 + 0.5) * std::f64::consts::PI / n_polar as f64;
            // css(theta, 0) has real nonnegative amplitudes r_k; the overlap
            // at azimuth phi is sum_k r_k psi_k exp(+i m_k phi).
            let reference = CollectiveSpinState::css(n, theta, 0.0).expect("valid axis state");
            let weighted: Vec<Complex64> = reference
                .amplitudes()
                .iter()
                .zip(state.amplitudes())
                .map(|(r, a)| r.re * a)
                .collect();
            (0..n_azimuth).map(move |j| {
                let phi = (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / n_azimuth as f64;
                let m_lowest = -(n as f64) * 0.5;
                let mut factor = Complex64::from_polar(1.0, m_lowest * phi);
                let step = Complex64::from_polar(1.0, phi);
                let mut acc = Complex64::new(0.0, 0.0);
                for w in &weighted {
                    acc += w * factor;
                    factor *= step;
                }
                scale * acc.norm_sqr()
            })
        })
        .collect();
    Ok(SphereGrid {
        n_polar,
        n_azimuth,
        kernel: Kernel::Husimi,
        n_atoms: n,
        values,
    })
}

/// Irreducible tensor components `rho_KQ` of a pure state, prescaled by
/// `sqrt((2K+1)/(4 pi))` so that `W = sum rho Y` integrates to 1.
fn multipoles(state: &CollectiveSpinState) -> Vec<Vec<Complex64>> {
    let n = state.n_atoms();
    let dn = n as i64;
    let amps = state.amplitudes();
    let mut rho = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        let table = cg_jkj(n, k);
        let mut row = vec![Complex64::new(0.0, 0.0); 2 * k as usize + 1];
        for level in &table.levels {
            let slot3 = ((level.dm3 + dn) / 2) as usize;
            let c3 = amps[slot3].conj();
            if c3.norm_sqr() == 0.0 {
                continue;
            }
            for (i, &cg) in level.coeffs.iter().enumerate() {
                let dm1 = level.dm1_lo + 2 * i as i64;
                let slot1 = ((dm1 + dn) / 2) as usize;
                let q = (level.dm3 - dm1) / 2;
                row[(q + k as i64) as usize] += c3 * cg * amps[slot1];
            }
        }
        let scale = ((2 * k as usize + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt();
        for v in &mut row {
            *v *= scale;
        }
        rho.push(row);
    }
    rho
}

/// Per-theta azimuthal Fourier profiles `F_q = sum_K rho_Kq Plm(q, K)`;
/// the grid value is `F_0 + 2 Re sum_q F_q e^{i q phi}`.
fn azimuthal_profiles(rho: &[Vec<Complex64>], plm: &PlmTable) -> Vec<Complex64> {
    let k_max = rho.len() - 1;
    let mut f = vec![Complex64::new(0.0, 0.0); k_max + 1];
    for (q, fq) in f.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in q..=k_max {
            let val = rho[k][q + k];
            if val.norm_sqr() > 0.0 {
                acc += val * plm.get(q, k);
            }
        }
        *fq = acc;
    }
    f
}

fn eval_profiles(f: &[Complex64], phi: f64) -> f64 {
    let mut value = f[0].re;
    let step = Complex64::from_polar(1.0, phi);
    let mut factor = step;
    for fq in &f[1..] {
        value += 2.0 * (fq * factor).re;
        factor *= step;
    }
    value
}

/// Spherical-harmonic-normalized associated Legendre values
/// `Plm(q, k) = Ybar_kq(theta)` (Condon-Shortley phase included), so that
/// `Y_kq(theta, phi) = Plm(q, k) e^{i q phi}`.
struct PlmTable {
    k_max: usize,
    data: Vec<f64>,
}

impl PlmTable {
    fn idx(&self, q: usize, k: usize) -> usize {
        // Row q holds k = q..=k_max.
        q * (self.k_max + 1) - q * (q.saturating_sub(1)) / 2 + (k - q)
    }

    fn get(&self, q: usize, k: usize) -> f64 {
        self.data[self.idx(q, k)]
    }

    fn build(k_max: usize, x: f64) -> Self {
        let s = (1.0 - x * x).max(0.0).sqrt();
        let len = (k_max + 1) * (k_max + 2) / 2;
        let mut table = PlmTable {
            k_max,
            data: vec![0.0; len],
        };
        let mut pqq = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
        for q in 0..=k_max {
            if q > 0 {
                pqq *= -((2 * q + 1) as f64 / (2 * q) as f64).sqrt() * s;
            }
            let i0 = table.idx(q, q);
            table.data[i0] = pqq;
            if q + 1 <= k_max {
                table.data[i0 + 1] = ((2 * q + 3) as f64).sqrt() * x * pqq;
            }
            for k in (q + 2)..=k_max {
                let kf = k as f64;
                let qf = q as f64;
                let a = ((4.0 * kf * kf - 1.0) / (kf * kf - qf * qf)).sqrt();
                let b = (((2.0 * kf + 1.0) * (kf - 1.0 - qf) * (kf - 1.0 + qf))
                    / ((2.0 * kf - 3.0) * (kf * kf - qf * qf)))
                    .sqrt();
                let i = table.idx(q, k);
                table.data[i] = a * x * table.data[i - 1] - b * table.data[i - 2];
            }
        }
        table
    }
}

/// Fejer first-rule weights for nodes `x_i = cos((2i+1) pi / (2n))`:
/// integrates `f` over `[-1, 1]` exactly for polynomial degree `< n`.
pub(crate) fn fejer1_weights(n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let theta = (2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64;
        let mut sum = 0.0;
        for m in 1..=(n / 2) {
            sum += (2.0 * m as f64 * theta).cos() / ((4 * m * m - 1) as f64);
        }
        w.push(2.0 / n as f64 * (1.0 - 2.0 * sum));
    }
    w
}
