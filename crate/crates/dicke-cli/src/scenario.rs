//! Scenario pipelines: each named scenario maps a validated config onto the
//! library operations and emits CSV or flat-record files.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use dicke::dynamics::{
    apply_sequence, mach_zehnder, one_axis_twist, qnd_measure, rotate, Observable,
    BEAMSPLITTER_AXIS,
};
use dicke::metrology::{
    gain_db, noisy_observable_stats, optimally_orient, phase_sensitivity, wineland_xi,
    GainConvention, SensitivityReport,
};
use dicke::quasiprob::{husimi_grid, wigner_grid, Kernel};
use dicke::sensors::{
    accel_sensitivity, clock_stability, gyro_sensitivity, resource_equivalents, size_tradeoff,
};
use dicke::{CollectiveSpinState, StateRecord};

use crate::config::{Diagnostic, Scenario, ScenarioConfig, StateSpec};
use crate::output::{fmt12, write_csv, write_flat};

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(Vec<Diagnostic>),
    /// Exit code 3, named after the failing operation.
    Physics {
        op: &'static str,
        source: dicke::Error,
    },
    /// Exit code 4.
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(diags) => {
                writeln!(f, "config error ({} problem(s)):", diags.len())?;
                for d in diags {
                    writeln!(f, "  {d}")?;
                }
                Ok(())
            }
            CliError::Physics { op, source } => write!(f, "error in {op}: {source}"),
            CliError::Io { context, source } => write!(f, "I/O error ({context}): {source}"),
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    move |source| CliError::Io {
        context: context.into(),
        source,
    }
}

fn phys(op: &'static str) -> impl FnOnce(dicke::Error) -> CliError {
    move |source| CliError::Physics { op, source }
}

/// Runs a validated scenario; returns the files written.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    out_dir: &Path,
    quiet: bool,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(format!("creating {}", out_dir.display())))?;
    let output_path = out_dir.join(&cfg.output);
    let mut written = vec![output_path.clone()];

    match cfg.scenario {
        Scenario::FringeScan => fringe_scan(cfg, &output_path, &mut written, out_dir)?,
        Scenario::SensitivityScan => sensitivity_scan(cfg, &output_path, &mut written, out_dir)?,
        Scenario::Clock => clock(cfg, &output_path)?,
        Scenario::Accel => accel(cfg, &output_path)?,
        Scenario::Gyro => gyro(cfg, &output_path)?,
        Scenario::QndDemo => qnd_demo(cfg, &output_path, &mut written, out_dir)?,
        Scenario::OatScan => oat_scan(cfg, &output_path, &mut written, out_dir)?,
        Scenario::Wigner => wigner(cfg, &output_path, &mut written, out_dir)?,
    }

    if !quiet {
        for path in &written {
            println!("wrote {}", path.display());
        }
    }
    Ok(written)
}

fn build_state(spec: &StateSpec) -> Result<CollectiveSpinState, CliError> {
    match spec {
        StateSpec::Css {
            n_atoms,
            polar,
            azimuth,
        } => CollectiveSpinState::css(*n_atoms, *polar, *azimuth).map_err(phys("css")),
        StateSpec::Dicke { n_atoms, two_m } => {
            CollectiveSpinState::dicke(*n_atoms, *two_m).map_err(phys("dicke"))
        }
        StateSpec::Checkpoint { path } => {
            let text =
                fs::read_to_string(path).map_err(io_err(format!("reading checkpoint {path}")))?;
            let record: StateRecord = toml::from_str(&text).map_err(|e| CliError::Io {
                context: format!("parsing checkpoint {path}"),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()),
            })?;
            CollectiveSpinState::from_record(&record).map_err(phys("from_record"))
        }
    }
}

/// State after the prep sequence plus the effective detection noise
/// (a trailing `readout_noise` element overrides the measurement model).
fn prepped_state(cfg: &ScenarioConfig) -> Result<(CollectiveSpinState, f64), CliError> {
    let state = build_state(cfg.state.as_ref().expect("validated"))?;
    let outcome =
        apply_sequence(&state, &cfg.sequence, cfg.seed).map_err(phys("apply_sequence"))?;
    let sigma_det = outcome
        .readout_noise
        .unwrap_or(cfg.measurement.sigma_det);
    Ok((outcome.state, sigma_det))
}

fn save_checkpoint(
    cfg: &ScenarioConfig,
    state: &CollectiveSpinState,
    written: &mut Vec<PathBuf>,
    out_dir: &Path,
) -> Result<(), CliError> {
    if let Some(name) = &cfg.checkpoint {
        let path = out_dir.join(name);
        let text = toml::to_string(&state.to_record()).expect("record serializes");
        fs::write(&path, text).map_err(io_err(format!("writing checkpoint {}", path.display())))?;
        written.push(path);
    }
    Ok(())
}

/// Sensitivity at one bias point, with signal extrema rendered as infinite
/// delta_phi rather than a hard error (scans legitimately cross extrema).
fn sensitivity_or_inf(
    prepared: &CollectiveSpinState,
    phi: f64,
    observable: Observable,
    sigma_det: f64,
) -> Result<SensitivityReport, CliError> {
    match phase_sensitivity(prepared, phi, observable, sigma_det) {
        Ok(report) => Ok(report),
        Err(dicke::Error::UndefinedSensitivity(_)) => Ok(SensitivityReport {
            delta_phi: f64::INFINITY,
            xi: Some(f64::INFINITY),
            snl: 1.0 / (prepared.n_atoms() as f64).sqrt(),
            heisenberg: 1.0 / prepared.n_atoms() as f64,
            gain_db_variance: Some(f64::NEG_INFINITY),
            gain_db_amplitude: Some(f64::NEG_INFINITY),
            qfi: None,
        }),
        Err(e) => Err(phys("phase_sensitivity")(e)),
    }
}

fn fringe_scan(
    cfg: &ScenarioConfig,
    output: &Path,
    written: &mut Vec<PathBuf>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let (input, sigma_det) = prepped_state(cfg)?;
    let observable = cfg.measurement.observable;
    // Pre-phase state for the sensitivity column: input through the first
    // beamsplitter.
    let prepared =
        rotate(&input, BEAMSPLITTER_AXIS, FRAC_PI_2).map_err(phys("rotate"))?;

    let scan = cfg.scan.as_ref().expect("validated");
    let mut rows = Vec::with_capacity(scan.points as usize);
    for phi in scan.values() {
        let out = mach_zehnder(&input, phi);
        let mm = out.moments();
        let (mean, var) = noisy_observable_stats(&mm.jz_powers, observable, sigma_det);
        let report = sensitivity_or_inf(&prepared, phi, observable, sigma_det)?;
        rows.push(vec![
            fmt12(phi),
            fmt12(mean),
            fmt12(var.max(0.0).sqrt()),
            fmt12(report.delta_phi),
        ]);
    }
    write_csv(output, &["phi", "mean_signal", "std_signal", "delta_phi"], &rows)
        .map_err(io_err(format!("writing {}", output.display())))?;
    save_checkpoint(cfg, &input, written, out_dir)
}

fn sensitivity_scan(
    cfg: &ScenarioConfig,
    output: &Path,
    written: &mut Vec<PathBuf>,
    out_dir: &Path,
) -> Result<(), CliError> {
    // Here the sequence output IS the pre-phase-encoding prepared state.
    let (prepared, sigma_det) = prepped_state(cfg)?;
    let observable = cfg.measurement.observable;
    let scan = cfg.scan.as_ref().expect("validated");
    let mut rows = Vec::with_capacity(scan.points as usize);
    let mut best: Option<(f64, SensitivityReport)> = None;
    for phi in scan.values() {
        let report = sensitivity_or_inf(&prepared, phi, observable, sigma_det)?;
        if best
            .as_ref()
            .map_or(true, |(_, b)| report.delta_phi < b.delta_phi)
        {
            best = Some((phi, report.clone()));
        }
        rows.push(vec![
            fmt12(phi),
            fmt12(report.delta_phi),
            fmt12(report.xi.unwrap_or(f64::INFINITY)),
            fmt12(report.gain_db_variance.unwrap_or(f64::NEG_INFINITY)),
            fmt12(report.gain_db_amplitude.unwrap_or(f64::NEG_INFINITY)),
        ]);
    }
    write_csv(
        output,
        &["phi", "delta_phi", "xi", "gain_db_variance", "gain_db_amplitude"],
        &rows,
    )
    .map_err(io_err(format!("writing {}", output.display())))?;

    // Companion flat record: the full sensitivity report at the best
    // operating point of the scan.
    let (phi, report) = best.expect("points >= 2");
    let undef = |v: Option<f64>| v.map(fmt12).unwrap_or_else(|| "undefined".into());
    let report_path = output.with_extension("report");
    let mut pairs = vec![
        ("phi", fmt12(phi)),
        ("delta_phi", fmt12(report.delta_phi)),
        ("xi", undef(report.xi)),
        ("snl", fmt12(report.snl)),
        ("heisenberg", fmt12(report.heisenberg)),
        ("gain_db_variance", undef(report.gain_db_variance)),
        ("gain_db_amplitude", undef(report.gain_db_amplitude)),
    ];
    if let Some(qfi) = report.qfi {
        pairs.push(("qfi", fmt12(qfi)));
    }
    write_flat(&report_path, &pairs)
        .map_err(io_err(format!("writing {}", report_path.display())))?;
    written.push(report_path);
    save_checkpoint(cfg, &prepared, written, out_dir)
}

fn clock(cfg: &ScenarioConfig, output: &Path) -> Result<(), CliError> {
    let c = cfg.clock.as_ref().expect("validated");
    let stability = clock_stability(c).map_err(phys("clock_stability"))?;
    let mut pairs = vec![
        ("omega0", fmt12(c.omega0)),
        ("T", fmt12(c.t)),
        ("T_C", fmt12(c.t_c)),
        ("tau", fmt12(c.tau)),
        ("n_atoms", c.n_atoms.to_string()),
        ("xi", fmt12(c.xi)),
        ("stability", fmt12(stability)),
    ];
    if c.xi <= 1.0 {
        let factors = resource_equivalents(c.xi).map_err(phys("resource_equivalents"))?;
        pairs.push(("averaging_time_factor", fmt12(factors.averaging_time_factor)));
        pairs.push(("atom_number_factor", fmt12(factors.atom_number_factor)));
    }
    write_flat(output, &pairs).map_err(io_err(format!("writing {}", output.display())))
}

fn accel(cfg: &ScenarioConfig, output: &Path) -> Result<(), CliError> {
    let a = cfg.accel.as_ref().expect("validated");
    let delta_a = accel_sensitivity(a).map_err(phys("accel_sensitivity"))?;
    let mut pairs = vec![
        ("k_parallel", fmt12(a.k_parallel)),
        ("T", fmt12(a.t)),
        ("n_atoms", a.n_atoms.to_string()),
        ("xi", fmt12(a.xi)),
        ("delta_a", fmt12(delta_a)),
    ];
    if a.xi <= 1.0 {
        let length = size_tradeoff(a.xi).map_err(phys("size_tradeoff"))?;
        pairs.push(("length_factor", fmt12(length)));
    }
    write_flat(output, &pairs).map_err(io_err(format!("writing {}", output.display())))
}

fn gyro(cfg: &ScenarioConfig, output: &Path) -> Result<(), CliError> {
    let g = cfg.gyro.as_ref().expect("validated");
    let delta_omega = gyro_sensitivity(g).map_err(phys("gyro_sensitivity"))?;
    let mut pairs = vec![
        ("atom_mass", fmt12(g.atom_mass)),
        ("area_parallel", fmt12(g.area_parallel)),
        ("n_atoms", g.n_atoms.to_string()),
        ("xi", fmt12(g.xi)),
        ("delta_omega", fmt12(delta_omega)),
    ];
    if g.xi == 0.0 {
        pairs.push(("warning", "\"xi = 0: degenerate input, zero sensitivity\"".into()));
    }
    write_flat(output, &pairs).map_err(io_err(format!("writing {}", output.display())))
}

fn qnd_demo(
    cfg: &ScenarioConfig,
    output: &Path,
    written: &mut Vec<PathBuf>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let (input, _) = prepped_state(cfg)?;
    let q = cfg.qnd.as_ref().expect("validated");
    let trials = cfg.measurement.shots;
    let seed = cfg.measurement.seed.unwrap_or(cfg.seed);
    let mut rows = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let (post, outcome) = qnd_measure(&input, q.sigma, q.outcome, seed.wrapping_add(trial))
            .map_err(phys("qnd_measure"))?;
        let mm = post.moments();
        let xi = wineland_xi(&post);
        rows.push(vec![
            trial.to_string(),
            fmt12(outcome),
            fmt12(mm.mean[2]),
            fmt12(mm.var_jz()),
            xi.map(fmt12).unwrap_or_else(|| "undefined".into()),
        ]);
    }
    write_csv(
        output,
        &["trial", "outcome", "post_mean_jz", "post_var_jz", "wineland_xi"],
        &rows,
    )
    .map_err(io_err(format!("writing {}", output.display())))?;
    save_checkpoint(cfg, &input, written, out_dir)
}

fn oat_scan(
    cfg: &ScenarioConfig,
    output: &Path,
    written: &mut Vec<PathBuf>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let (base, sigma_det) = prepped_state(cfg)?;
    let scan = cfg.scan.as_ref().expect("validated");
    let mut rows = Vec::with_capacity(scan.points as usize);
    for mu in scan.values() {
        let twisted = one_axis_twist(&base, mu);
        let (oriented, _) = optimally_orient(&twisted).map_err(phys("optimally_orient"))?;
        let xi = wineland_xi(&oriented).ok_or_else(|| CliError::Physics {
            op: "wineland_xi",
            source: dicke::Error::UndefinedSensitivity(
                "wineland xi undefined (zero mean spin projection)".into(),
            ),
        })?;
        // Put the squeezed quadrature in the fringe plane, then read the
        // sensitivity at the slope maximum.
        let tilted = rotate(&oriented, [1.0, 0.0, 0.0], FRAC_PI_2).map_err(phys("rotate"))?;
        let report = sensitivity_or_inf(&tilted, FRAC_PI_2, Observable::Jz, sigma_det)?;
        rows.push(vec![
            fmt12(mu),
            fmt12(xi),
            fmt12(report.delta_phi),
            fmt12(gain_db(xi, GainConvention::Variance).map_err(phys("gain_db"))?),
            fmt12(gain_db(xi, GainConvention::Amplitude).map_err(phys("gain_db"))?),
        ]);
    }
    write_csv(
        output,
        &["mu", "xi", "delta_phi", "gain_db_variance", "gain_db_amplitude"],
        &rows,
    )
    .map_err(io_err(format!("writing {}", output.display())))?;
    save_checkpoint(cfg, &base, written, out_dir)
}

fn wigner(
    cfg: &ScenarioConfig,
    output: &Path,
    written: &mut Vec<PathBuf>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let (state, _) = prepped_state(cfg)?;
    let spec = cfg.grid.as_ref().expect("validated");
    let grid = match spec.kernel {
        Kernel::Wigner => {
            wigner_grid(&state, spec.n_polar, spec.n_azimuth).map_err(phys("wigner_grid"))?
        }
        Kernel::Husimi => {
            husimi_grid(&state, spec.n_polar, spec.n_azimuth).map_err(phys("husimi_grid"))?
        }
    };
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)
        .map_err(io_err(format!("writing {}", output.display())))?;
    fs::write(output, buf).map_err(io_err(format!("writing {}", output.display())))?;
    save_checkpoint(cfg, &state, written, out_dir)
}

/// Applies `--seed` on top of the config (flags beat config values).
pub fn apply_seed_override(cfg: &mut ScenarioConfig, seed: Option<u64>) {
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
}
