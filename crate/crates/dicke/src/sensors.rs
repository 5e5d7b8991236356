//! Maps phase sensitivity onto physical sensor performance: clock fractional
//! stability, accelerometer and gyroscope per-shot sensitivities, and the
//! resource trade-offs bought by squeezing.
//!
//! All sensitivities here are per shot; divide the shot rate in via
//! [`per_root_hz`] to get a `per sqrt(Hz)` figure (a common unit slip).
//! Dick-effect aliasing noise is not modeled.

use crate::{invalid, Error, Result};

/// Physical constants used by the sensor formulas (CODATA 2018).
pub mod constants {
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054571817e-34;
    /// Mass of rubidium-87, kg.
    pub const RB87_MASS: f64 = 1.44316060e-25;
    /// Caesium-133 hyperfine clock transition frequency, Hz (exact, SI).
    pub const CS_HYPERFINE_FREQUENCY: f64 = 9_192_631_770.0;
}

/// Ramsey clock parameters. Config-file keys: `omega0`, `T`, `T_C`, `tau`,
/// `n_atoms`, `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockConfig {
    /// Clock transition angular frequency, rad/s.
    pub omega0: f64,
    /// Interrogation (Ramsey) time, s.
    pub t: f64,
    /// Cycle time, s; `t <= t_c`.
    pub t_c: f64,
    /// Total averaging time, s.
    pub tau: f64,
    pub n_atoms: u32,
    pub xi: f64,
}

/// Mach-Zehnder accelerometer parameters. Config-file keys: `k_parallel`,
/// `T`, `n_atoms`, `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelerometerConfig {
    /// Effective wavevector component along the acceleration, 1/m.
    pub k_parallel: f64,
    /// Interrogation time, s.
    pub t: f64,
    pub n_atoms: u32,
    pub xi: f64,
}

/// Sagnac gyroscope parameters. Config-file keys: `atom_mass`,
/// `area_parallel`, `n_atoms`, `xi`. `xi = 0` is allowed as a degenerate
/// input (zero sensitivity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroConfig {
    /// Atomic mass, kg.
    pub atom_mass: f64,
    /// Enclosed area component along the rotation axis, m^2.
    pub area_parallel: f64,
    pub n_atoms: u32,
    pub xi: f64,
}

fn require_positive(value: f64, name: &str) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(invalid(format!("{name} = {value} must be > 0")));
    }
    Ok(())
}

/// Quantum-noise-limited fractional clock stability
/// `(1 / (omega0 T)) sqrt(T_C / tau) xi / sqrt(N)`.
///
/// At unity duty cycle (`T = T_C`) this reduces to
/// `xi / (omega0 sqrt(T tau) sqrt(N))`.
pub fn clock_stability(cfg: &ClockConfig) -> Result<f64> {
    require_positive(cfg.omega0, "omega0")?;
    require_positive(cfg.t, "T")?;
    require_positive(cfg.t_c, "T_C")?;
    require_positive(cfg.tau, "tau")?;
    require_positive(cfg.xi, "xi")?;
    if cfg.n_atoms < 1 {
        return Err(invalid("clock_stability: n_atoms must be >= 1"));
    }
    if cfg.t > cfg.t_c {
        return Err(invalid(format!(
            "clock_stability: T = {} exceeds T_C = {}",
            cfg.t, cfg.t_c
        )));
    }
    let n = cfg.n_atoms as f64;
    Ok(cfg.xi / n.sqrt() * (cfg.t_c / cfg.tau).sqrt() / (cfg.omega0 * cfg.t))
}

/// Mach-Zehnder acceleration phase `phi = k_parallel a T^2`.
pub fn accel_phase(k_parallel: f64, acceleration: f64, t: f64) -> f64 {
    k_parallel * acceleration * t * t
}

/// Per-shot acceleration sensitivity `xi / (sqrt(N) k_parallel T^2)`.
pub fn accel_sensitivity(cfg: &AccelerometerConfig) -> Result<f64> {
    require_positive(cfg.k_parallel, "k_parallel")?;
    require_positive(cfg.t, "T")?;
    require_positive(cfg.xi, "xi")?;
    if cfg.n_atoms < 1 {
        return Err(invalid("accel_sensitivity: n_atoms must be >= 1"));
    }
    let n = cfg.n_atoms as f64;
    Ok(cfg.xi / n.sqrt() / (cfg.k_parallel * cfg.t * cfg.t))
}

/// Per-shot rotation-rate sensitivity `xi hbar / (sqrt(N) 2 m A_parallel)`.
pub fn gyro_sensitivity(cfg: &GyroConfig) -> Result<f64> {
    require_positive(cfg.atom_mass, "atom_mass")?;
    require_positive(cfg.area_parallel, "area_parallel")?;
    if !(cfg.xi >= 0.0) || !cfg.xi.is_finite() {
        return Err(invalid(format!("xi = {} must be >= 0", cfg.xi)));
    }
    if cfg.n_atoms < 1 {
        return Err(invalid("gyro_sensitivity: n_atoms must be >= 1"));
    }
    let n = cfg.n_atoms as f64;
    Ok(cfg.xi / n.sqrt() * constants::HBAR / (2.0 * cfg.atom_mass * cfg.area_parallel))
}

/// Resource equivalences bought by squeezing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceFactors {
    /// Averaging-time factor to reach a given stability: `xi^2`.
    pub averaging_time_factor: f64,
    /// Atom-number factor for a given precision: `xi^2`.
    pub atom_number_factor: f64,
}

/// A squeezed sensor averages to a target `xi^-2` times faster, or reaches
/// the same precision with `xi^2` as many atoms. Valid for `0 < xi <= 1`;
/// anti-squeezing has no resource benefit.
pub fn resource_equivalents(xi: f64) -> Result<ResourceFactors> {
    check_xi_fraction(xi)?;
    let f = xi * xi;
    Ok(ResourceFactors {
        averaging_time_factor: f,
        atom_number_factor: f,
    })
}

/// Device-length factor at fixed sensitivity and wavevector: squeezing by
/// `xi` allows `T^2` (and the free-fall length with it) to shrink by `xi`.
/// Assumes drop geometry, `L ~ T^2`.
pub fn size_tradeoff(xi: f64) -> Result<f64> {
    check_xi_fraction(xi)?;
    Ok(xi)
}

fn check_xi_fraction(xi: f64) -> Result<()> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(invalid(format!("xi = {xi} must be > 0")));
    }
    if xi > 1.0 {
        return Err(Error::OutOfRange(format!(
            "xi = {xi} > 1: anti-squeezing has no resource benefit"
        )));
    }
    Ok(())
}

/// Converts a per-shot sensitivity to per sqrt(Hz) given the cycle time:
/// multiplies by `sqrt(T_C)`.
pub fn per_root_hz(per_shot: f64, cycle_time: f64) -> Result<f64> {
    require_positive(cycle_time, "cycle_time")?;
    Ok(per_shot * cycle_time.sqrt())
}
