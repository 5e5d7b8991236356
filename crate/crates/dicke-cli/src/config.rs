//! Scenario configuration: TOML schema, validation, and canonical
//! serialization.
//!
//! Validation reports every violation at once (unknown keys, missing
//! fields, type errors, range errors) instead of stopping at the first,
//! so a config can be fixed in one pass. Unknown keys are errors: a typo in
//! a physics parameter must not silently fall back to a default.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use dicke::dynamics::{Observable, SequenceElement};
use dicke::quasiprob::Kernel;
use dicke::sensors::{AccelerometerConfig, ClockConfig, GyroConfig};

/// Largest atom number accepted from configs (double precision support
/// range of the state constructors).
pub const MAX_ATOMS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    FringeScan,
    SensitivityScan,
    Clock,
    Accel,
    Gyro,
    QndDemo,
    OatScan,
    Wigner,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::FringeScan => "fringe-scan",
            Scenario::SensitivityScan => "sensitivity-scan",
            Scenario::Clock => "clock",
            Scenario::Accel => "accel",
            Scenario::Gyro => "gyro",
            Scenario::QndDemo => "qnd-demo",
            Scenario::OatScan => "oat-scan",
            Scenario::Wigner => "wigner",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "fringe-scan" => Scenario::FringeScan,
            "sensitivity-scan" => Scenario::SensitivityScan,
            "clock" => Scenario::Clock,
            "accel" => Scenario::Accel,
            "gyro" => Scenario::Gyro,
            "qnd-demo" => Scenario::QndDemo,
            "oat-scan" => Scenario::OatScan,
            "wigner" => Scenario::Wigner,
            _ => return None,
        })
    }

    /// Scan parameter accepted by this scenario, if it takes a scan.
    fn scan_parameter(self) -> Option<&'static str> {
        match self {
            Scenario::FringeScan | Scenario::SensitivityScan => Some("phi"),
            Scenario::OatScan => Some("mu"),
            _ => None,
        }
    }

    fn needs_state(self) -> bool {
        matches!(
            self,
            Scenario::FringeScan
                | Scenario::SensitivityScan
                | Scenario::QndDemo
                | Scenario::OatScan
                | Scenario::Wigner
        )
    }

    /// Top-level keys allowed for this scenario.
    fn allowed_keys(self) -> Vec<&'static str> {
        let mut keys = vec!["scenario", "seed", "output", "checkpoint"];
        if self.needs_state() {
            keys.extend(["state", "sequence", "measurement"]);
        }
        if self.scan_parameter().is_some() {
            keys.push("scan");
        }
        match self {
            Scenario::Clock => keys.push("clock"),
            Scenario::Accel => keys.push("accel"),
            Scenario::Gyro => keys.push("gyro"),
            Scenario::QndDemo => keys.push("qnd"),
            Scenario::Wigner => keys.push("grid"),
            _ => {}
        }
        keys
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Css { n_atoms: u32, polar: f64, azimuth: f64 },
    Dicke { n_atoms: u32, two_m: i64 },
    Checkpoint { path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub points: u64,
}

impl ScanSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSpec {
    pub observable: Observable,
    pub sigma_det: f64,
    pub shots: u64,
    pub seed: Option<u64>,
}

impl Default for MeasurementSpec {
    fn default() -> Self {
        MeasurementSpec {
            observable: Observable::Jz,
            sigma_det: 0.0,
            shots: 1,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QndSpec {
    pub sigma: f64,
    pub outcome: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub output: String,
    pub checkpoint: Option<String>,
    pub state: Option<StateSpec>,
    pub sequence: Vec<SequenceElement>,
    pub measurement: MeasurementSpec,
    pub scan: Option<ScanSpec>,
    pub clock: Option<ClockConfig>,
    pub accel: Option<AccelerometerConfig>,
    pub gyro: Option<GyroConfig>,
    pub qnd: Option<QndSpec>,
    pub grid: Option<GridSpec>,
}

/// Parses and fully validates a scenario config, reporting all violations.
pub fn validate_config(text: &str) -> Result<ScenarioConfig, Vec<Diagnostic>> {
    let value: toml::Value = match toml::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Err(vec![Diagnostic {
                path: "(syntax)".into(),
                message: e.to_string(),
            }])
        }
    };
    let table = match value.as_table() {
        Some(t) => t,
        None => {
            return Err(vec![Diagnostic {
                path: "(root)".into(),
                message: "config root must be a table".into(),
            }])
        }
    };

    let mut w = Walker { diags: Vec::new() };

    let scenario = match table.get("scenario") {
        None => {
            w.err("scenario", "scenario missing (one of fringe-scan, sensitivity-scan, clock, accel, gyro, qnd-demo, oat-scan, wigner)");
            None
        }
        Some(v) => match v.as_str().and_then(Scenario::from_name) {
            Some(s) => Some(s),
            None => {
                w.err("scenario", format!("unknown scenario {v}"));
                None
            }
        },
    };

    if let Some(s) = scenario {
        let allowed: BTreeSet<&str> = s.allowed_keys().into_iter().collect();
        for key in table.keys() {
            if !allowed.contains(key.as_str()) {
                w.err(key, format!("unknown key for scenario {}", s.name()));
            }
        }
    }

    let seed = w.opt_u64(table, "seed").unwrap_or(0);
    let output = match w.opt_str(table, "output") {
        Some(s) if !s.is_empty() => s,
        Some(_) => {
            w.err("output", "output path must not be empty");
            String::new()
        }
        None => {
            if !table.contains_key("output") {
                w.err("output", "output missing");
            }
            String::new()
        }
    };
    let checkpoint = w.opt_str(table, "checkpoint");

    let state = table
        .get("state")
        .and_then(|v| w.state_spec(v, "state"));
    let sequence = table
        .get("sequence")
        .map(|v| w.sequence(v, "sequence"))
        .unwrap_or_default();
    let measurement = table
        .get("measurement")
        .and_then(|v| w.measurement(v, "measurement"))
        .unwrap_or_default();
    let scan = table.get("scan").and_then(|v| w.scan(v, "scan"));
    let clock = table.get("clock").and_then(|v| w.clock(v, "clock"));
    let accel = table.get("accel").and_then(|v| w.accel(v, "accel"));
    let gyro = table.get("gyro").and_then(|v| w.gyro(v, "gyro"));
    let qnd = table.get("qnd").and_then(|v| w.qnd(v, "qnd"));
    let grid = table.get("grid").and_then(|v| w.grid(v, "grid"));

    if let Some(s) = scenario {
        if s.needs_state() && state.is_none() && !table.contains_key("state") {
            w.err("state", format!("state required for scenario {}", s.name()));
        }
        match s.scan_parameter() {
            Some(expected) => {
                if let Some(scan) = &scan {
                    if scan.parameter != expected {
                        w.err(
                            "scan.parameter",
                            format!(
                                "scenario {} scans \"{expected}\", got \"{}\"",
                                s.name(),
                                scan.parameter
                            ),
                        );
                    }
                } else if !table.contains_key("scan") {
                    w.err("scan", format!("scan required for scenario {}", s.name()));
                }
            }
            None => {}
        }
        let require = |w: &mut Walker, present: bool, key: &str| {
            if !present && !table.contains_key(key) {
                w.err(key, format!("[{key}] table required for scenario {}", s.name()));
            }
        };
        match s {
            Scenario::Clock => require(&mut w, clock.is_some(), "clock"),
            Scenario::Accel => require(&mut w, accel.is_some(), "accel"),
            Scenario::Gyro => require(&mut w, gyro.is_some(), "gyro"),
            Scenario::QndDemo => require(&mut w, qnd.is_some(), "qnd"),
            Scenario::Wigner => require(&mut w, grid.is_some(), "grid"),
            _ => {}
        }
        // Wigner kernel size cap is checkable now when the state is inline.
        if let (Some(GridSpec { kernel: Kernel::Wigner, .. }), Some(spec)) = (&grid, &state) {
            let n = match spec {
                StateSpec::Css { n_atoms, .. } | StateSpec::Dicke { n_atoms, .. } => Some(*n_atoms),
                StateSpec::Checkpoint { .. } => None,
            };
            if let Some(n) = n {
                if n > dicke::quasiprob::WIGNER_MAX_ATOMS {
                    w.err(
                        "grid.kernel",
                        format!(
                            "wigner kernel supports n_atoms <= {} (got {n}); use kernel = \"husimi\"",
                            dicke::quasiprob::WIGNER_MAX_ATOMS
                        ),
                    );
                }
            }
        }
    }

    if !w.diags.is_empty() {
        return Err(w.diags);
    }
    Ok(ScenarioConfig {
        scenario: scenario.expect("validated"),
        seed,
        output,
        checkpoint,
        state,
        sequence,
        measurement,
        scan,
        clock,
        accel,
        gyro,
        qnd,
        grid,
    })
}

struct Walker {
    diags: Vec<Diagnostic>,
}

impl Walker {
    fn err(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            path: path.into(),
            message: message.into(),
        });
    }

    fn table<'a>(&mut self, v: &'a toml::Value, path: &str) -> Option<&'a toml::map::Map<String, toml::Value>> {
        match v.as_table() {
            Some(t) => Some(t),
            None => {
                self.err(path, "expected a table");
                None
            }
        }
    }

    fn check_keys(&mut self, t: &toml::map::Map<String, toml::Value>, allowed: &[&str], path: &str) {
        for key in t.keys() {
            if !allowed.contains(&key.as_str()) {
                self.err(format!("{path}.{key}"), "unknown key");
            }
        }
    }

    fn opt_str(&mut self, t: &toml::map::Map<String, toml::Value>, key: &str) -> Option<String> {
        match t.get(key) {
            None => None,
            Some(v) => match v.as_str() {
                Some(s) => Some(s.to_string()),
                None => {
                    self.err(key, "expected a string");
                    None
                }
            },
        }
    }

    fn opt_u64(&mut self, t: &toml::map::Map<String, toml::Value>, key: &str) -> Option<u64> {
        match t.get(key) {
            None => None,
            Some(v) => match v.as_integer() {
                Some(i) if i >= 0 => Some(i as u64),
                _ => {
                    self.err(key, "expected a non-negative integer");
                    None
                }
            },
        }
    }

    fn req_f64(&mut self, t: &toml::map::Map<String, toml::Value>, key: &str, path: &str) -> Option<f64> {
        let full = format!("{path}.{key}");
        match t.get(key) {
            None => {
                self.err(full, "missing");
                None
            }
            Some(v) => self.f64_value(v, &full),
        }
    }

    fn f64_value(&mut self, v: &toml::Value, path: &str) -> Option<f64> {
        let x = match v {
            toml::Value::Float(f) => *f,
            toml::Value::Integer(i) => *i as f64,
            _ => {
                self.err(path, "expected a number");
                return None;
            }
        };
        if !x.is_finite() {
            self.err(path, "must be finite");
            return None;
        }
        Some(x)
    }

    fn req_positive(&mut self, t: &toml::map::Map<String, toml::Value>, key: &str, path: &str) -> Option<f64> {
        let x = self.req_f64(t, key, path)?;
        if x <= 0.0 {
            self.err(format!("{path}.{key}"), format!("must be > 0 (got {x})"));
            return None;
        }
        Some(x)
    }

    /// Atom count for state constructors; capped at the double-precision
    /// support range.
    fn req_atoms(&mut self, t: &toml::map::Map<String, toml::Value>, path: &str) -> Option<u32> {
        let full = format!("{path}.n_atoms");
        match t.get("n_atoms").and_then(|v| v.as_integer()) {
            Some(i) if i >= 1 && i <= MAX_ATOMS as i64 => Some(i as u32),
            Some(i) => {
                self.err(full, format!("must be in 1..={MAX_ATOMS} (got {i})"));
                None
            }
            None => {
                self.err(full, format!("missing or not an integer in 1..={MAX_ATOMS}"));
                None
            }
        }
    }

    /// Atom count for sensor formulas (pure arithmetic, no state vector);
    /// no upper cap beyond the integer type.
    fn req_atoms_arith(&mut self, t: &toml::map::Map<String, toml::Value>, path: &str) -> Option<u32> {
        let full = format!("{path}.n_atoms");
        match t.get("n_atoms").and_then(|v| v.as_integer()) {
            Some(i) if i >= 1 && i <= u32::MAX as i64 => Some(i as u32),
            Some(i) => {
                self.err(full, format!("must be a positive 32-bit integer (got {i})"));
                None
            }
            None => {
                self.err(full, "missing or not a positive integer");
                None
            }
        }
    }

    fn state_spec(&mut self, v: &toml::Value, path: &str) -> Option<StateSpec> {
        let t = self.table(v, path)?;
        let kind = match t.get("kind").and_then(|v| v.as_str()) {
            Some(k) => k.to_string(),
            None => {
                self.err(format!("{path}.kind"), "missing (css, dicke, or checkpoint)");
                return None;
            }
        };
        match kind.as_str() {
            "css" => {
                self.check_keys(t, &["kind", "n_atoms", "polar", "azimuth"], path);
                let n = self.req_atoms(t, path);
                let polar = self.req_f64(t, "polar", path);
                let azimuth = self.req_f64(t, "azimuth", path);
                Some(StateSpec::Css {
                    n_atoms: n?,
                    polar: polar?,
                    azimuth: azimuth?,
                })
            }
            "dicke" => {
                self.check_keys(t, &["kind", "n_atoms", "m"], path);
                let n = self.req_atoms(t, path);
                let m = self.req_f64(t, "m", path);
                let (n, m) = (n?, m?);
                let two_m = (2.0 * m).round();
                if (2.0 * m - two_m).abs() > 1e-9 {
                    self.err(format!("{path}.m"), format!("must be a half-integer (got {m})"));
                    return None;
                }
                let two_m = two_m as i64;
                if two_m.abs() > n as i64 || (two_m + n as i64) % 2 != 0 {
                    self.err(
                        format!("{path}.m"),
                        format!("m = {m} outside {{-N/2, ..., N/2}} with the parity of N = {n}"),
                    );
                    return None;
                }
                Some(StateSpec::Dicke { n_atoms: n, two_m })
            }
            "checkpoint" => {
                self.check_keys(t, &["kind", "path"], path);
                match self.opt_str(t, "path") {
                    Some(p) if !p.is_empty() => Some(StateSpec::Checkpoint { path: p }),
                    _ => {
                        self.err(format!("{path}.path"), "missing checkpoint path");
                        None
                    }
                }
            }
            other => {
                self.err(
                    format!("{path}.kind"),
                    format!("unknown state kind {other:?} (css, dicke, or checkpoint)"),
                );
                None
            }
        }
    }

    fn sequence(&mut self, v: &toml::Value, path: &str) -> Vec<SequenceElement> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.err(path, "expected an array of tables");
                return Vec::new();
            }
        };
        let mut elements = Vec::new();
        let len = arr.len();
        for (i, item) in arr.iter().enumerate() {
            let epath = format!("{path}[{i}]");
            let Some(t) = self.table(item, &epath) else {
                continue;
            };
            let Some(ty) = t.get("type").and_then(|v| v.as_str()).map(str::to_string) else {
                self.err(format!("{epath}.type"), "missing element type");
                continue;
            };
            let element = match ty.as_str() {
                "rotation" => {
                    self.check_keys(t, &["type", "axis", "angle"], &epath);
                    let axis = self.axis(t, &epath);
                    let angle = self.req_f64(t, "angle", &epath);
                    match (axis, angle) {
                        (Some(axis), Some(angle)) => Some(SequenceElement::Rotation { axis, angle }),
                        _ => None,
                    }
                }
                "phase_accumulation" => {
                    self.check_keys(t, &["type", "phi"], &epath);
                    self.req_f64(t, "phi", &epath)
                        .map(|phi| SequenceElement::PhaseAccumulation { phi })
                }
                "one_axis_twist" => {
                    self.check_keys(t, &["type", "mu"], &epath);
                    self.req_f64(t, "mu", &epath)
                        .map(|mu| SequenceElement::OneAxisTwist { mu })
                }
                "qnd_measurement" => {
                    self.check_keys(t, &["type", "sigma", "outcome"], &epath);
                    let sigma = self.req_positive(t, "sigma", &epath);
                    let outcome = match t.get("outcome") {
                        None => None,
                        Some(v) => self.f64_value(v, &format!("{epath}.outcome")),
                    };
                    sigma.map(|sigma| SequenceElement::QndMeasurement { sigma, outcome })
                }
                "readout_noise" => {
                    self.check_keys(t, &["type", "sigma_det"], &epath);
                    if i + 1 != len {
                        self.err(&epath, "readout_noise may appear only as the final element");
                    }
                    match self.req_f64(t, "sigma_det", &epath) {
                        Some(s) if s >= 0.0 => Some(SequenceElement::ReadoutNoise { sigma_det: s }),
                        Some(s) => {
                            self.err(format!("{epath}.sigma_det"), format!("must be >= 0 (got {s})"));
                            None
                        }
                        None => None,
                    }
                }
                other => {
                    self.err(format!("{epath}.type"), format!("unknown element type {other:?}"));
                    None
                }
            };
            if let Some(e) = element {
                elements.push(e);
            }
        }
        elements
    }

    fn axis(&mut self, t: &toml::map::Map<String, toml::Value>, path: &str) -> Option<[f64; 3]> {
        let full = format!("{path}.axis");
        let arr = match t.get("axis").and_then(|v| v.as_array()) {
            Some(a) if a.len() == 3 => a,
            _ => {
                self.err(full, "expected an array of 3 numbers");
                return None;
            }
        };
        let mut axis = [0.0; 3];
        for (i, v) in arr.iter().enumerate() {
            axis[i] = self.f64_value(v, &format!("{full}[{i}]"))?;
        }
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            self.err(full, format!("must have unit norm (got {norm})"));
            return None;
        }
        Some(axis)
    }

    fn measurement(&mut self, v: &toml::Value, path: &str) -> Option<MeasurementSpec> {
        let t = self.table(v, path)?;
        self.check_keys(t, &["observable", "sigma_det", "shots", "seed"], path);
        let observable = match t.get("observable").and_then(|v| v.as_str()) {
            None if t.contains_key("observable") => {
                self.err(format!("{path}.observable"), "expected \"jz\" or \"jz_squared\"");
                Observable::Jz
            }
            None => Observable::Jz,
            Some("jz") => Observable::Jz,
            Some("jz_squared") => Observable::JzSquared,
            Some(other) => {
                self.err(
                    format!("{path}.observable"),
                    format!("unknown observable {other:?} (jz or jz_squared)"),
                );
                Observable::Jz
            }
        };
        let sigma_det = match t.get("sigma_det") {
            None => 0.0,
            Some(v) => match self.f64_value(v, &format!("{path}.sigma_det")) {
                Some(s) if s >= 0.0 => s,
                Some(s) => {
                    self.err(format!("{path}.sigma_det"), format!("must be >= 0 (got {s})"));
                    0.0
                }
                None => 0.0,
            },
        };
        let shots = match t.get("shots") {
            None => 1,
            Some(v) => match v.as_integer() {
                Some(i) if i >= 1 => i as u64,
                _ => {
                    self.err(format!("{path}.shots"), "must be an integer >= 1");
                    1
                }
            },
        };
        let seed = match t.get("seed") {
            None => None,
            Some(v) => match v.as_integer() {
                Some(i) if i >= 0 => Some(i as u64),
                _ => {
                    self.err(format!("{path}.seed"), "expected a non-negative integer");
                    None
                }
            },
        };
        Some(MeasurementSpec {
            observable,
            sigma_det,
            shots,
            seed,
        })
    }

    fn scan(&mut self, v: &toml::Value, path: &str) -> Option<ScanSpec> {
        let t = self.table(v, path)?;
        self.check_keys(t, &["parameter", "start", "stop", "points"], path);
        let parameter = match self.opt_str(t, "parameter") {
            Some(p) => p,
            None => {
                self.err(format!("{path}.parameter"), "missing scan parameter name");
                return None;
            }
        };
        let start = self.req_f64(t, "start", path);
        let stop = self.req_f64(t, "stop", path);
        let points = match t.get("points").and_then(|v| v.as_integer()) {
            Some(i) if i >= 2 => Some(i as u64),
            Some(i) => {
                self.err(format!("{path}.points"), format!("must be >= 2 (got {i})"));
                None
            }
            None => {
                self.err(format!("{path}.points"), "missing or not an integer >= 2");
                None
            }
        };
        Some(ScanSpec {
            parameter,
            start: start?,
            stop: stop?,
            points: points?,
        })
    }

    fn clock(&mut self, v: &toml::Value, path: &str) -> Option<ClockConfig> {
        let t = self.table(v, path)?;
        self.check_keys(t, &["omega0", "T", "T_C", "tau", "n_atoms", "xi"], path);
        let omega0 = self.req_positive(t, "omega0", path);
        let big_t = self.req_positive(t, "T", path);
        let t_c = self.req_positive(t, "T_C", path);
        let tau = self.req_positive(t, "tau", path);
        let n_atoms = self.req_atoms_arith(t, path);
        let xi = self.req_positive(t, "xi", path);
        if let (Some(t1), Some(t2)) = (big_t, t_c) {
            if t1 > t2 {
                self.err(format!("{path}.T"), format!("T = {t1} must not exceed T_C = {t2}"));
            }
        }
        Some(ClockConfig {
            omega0: omega0?,
            t: big_t?,
            t_c: t_c?,
            tau: tau?,
            n_atoms: n_atoms?,
            xi: xi?,
        })
    }

    fn accel(&mut self, v: &toml::Value, path: &str) -> Option<AccelerometerConfig> {
        let t = self.table(v, path)?;
        self.check_keys(t, &["k_parallel", "T", "n_atoms", "xi"], path);
        let k = self.req_positive(t, "k_parallel", path);
        let big_t = self.req_positive(t, "T", path);
        let n_atoms = self.req_atoms_arith(t, path);
        let xi = self.req_positive(t, "xi", path);
        Some(AccelerometerConfig {
            k_parallel: k?,
            t: big_t?,
            n_atoms: n_atoms?,
            xi: xi?,
        })
    }

    fn gyro(&mut self, v: &toml::Value, path: &str) -> Option<GyroConfig> {
        let t = self.table(v, path)?;
        self.check_keys(t, &["atom_mass", "area_parallel", "n_atoms", "xi"], path);
        let mass = self.req_positive(t, "atom_mass", path);
        let area = self.req_positive(t, "area_parallel", path);
        let n_atoms = self.req_atoms_arith(t, path);
        // xi = 0 is an allowed degenerate input for the gyro.
        let xi = match self.req_f64(t, "xi", path) {
            Some(x) if x >= 0.0 => Some(x),
            Some(x) => {
                self.err(format!("{path}.xi"), format!("must be >= 0 (got {x})"));
                None
            }
            None => None,
        };
        Some(GyroConfig {
            atom_mass: mass?,
            area_parallel: area?,
            n_atoms: n_atoms?,
            xi: xi?,
        })
    }

    fn qnd(&mut self, v: &toml::Value, path: &str) -> Option<QndSpec> {
        let t = self.table(v, path)?;
        self.check_keys(t, &["sigma", "outcome"], path);
        let sigma = self.req_positive(t, "sigma", path);
        let outcome = match t.get("outcome") {
            None => None,
            Some(v) => self.f64_value(v, &format!("{path}.outcome")),
        };
        Some(QndSpec {
            sigma: sigma?,
            outcome,
        })
    }

    fn grid(&mut self, v: &toml::Value, path: &str) -> Option<GridSpec> {
        let t = self.table(v, path)?;
        self.check_keys(t, &["n_polar", "n_azimuth", "kernel"], path);
        let dim = |w: &mut Walker, key: &str| -> Option<usize> {
            match t.get(key).and_then(|v| v.as_integer()) {
                Some(i) if i >= 8 => Some(i as usize),
                Some(i) => {
                    w.err(format!("{path}.{key}"), format!("must be >= 8 (got {i})"));
                    None
                }
                None => {
                    w.err(format!("{path}.{key}"), "missing or not an integer >= 8");
                    None
                }
            }
        };
        let n_polar = dim(self, "n_polar");
        let n_azimuth = dim(self, "n_azimuth");
        let kernel = match t.get("kernel").and_then(|v| v.as_str()) {
            None => Kernel::Wigner,
            Some("wigner") => Kernel::Wigner,
            Some("husimi") => Kernel::Husimi,
            Some(other) => {
                self.err(
                    format!("{path}.kernel"),
                    format!("unknown kernel {other:?} (wigner or husimi)"),
                );
                Kernel::Wigner
            }
        };
        Some(GridSpec {
            n_polar: n_polar?,
            n_azimuth: n_azimuth?,
            kernel,
        })
    }
}

impl ScenarioConfig {
    /// Canonical TOML form: fixed key order, defaults materialized, floats
    /// at full shortest round-trip precision. `validate_config` of this
    /// text reproduces the same config and the same text.
    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = \"{}\"", self.scenario.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output = {}", quote(&self.output));
        if let Some(cp) = &self.checkpoint {
            let _ = writeln!(s, "checkpoint = {}", quote(cp));
        }
        if let Some(state) = &self.state {
            let _ = writeln!(s, "\n[state]");
            match state {
                StateSpec::Css { n_atoms, polar, azimuth } => {
                    let _ = writeln!(s, "kind = \"css\"");
                    let _ = writeln!(s, "n_atoms = {n_atoms}");
                    let _ = writeln!(s, "polar = {}", float(*polar));
                    let _ = writeln!(s, "azimuth = {}", float(*azimuth));
                }
                StateSpec::Dicke { n_atoms, two_m } => {
                    let _ = writeln!(s, "kind = \"dicke\"");
                    let _ = writeln!(s, "n_atoms = {n_atoms}");
                    let _ = writeln!(s, "m = {}", float(*two_m as f64 * 0.5));
                }
                StateSpec::Checkpoint { path } => {
                    let _ = writeln!(s, "kind = \"checkpoint\"");
                    let _ = writeln!(s, "path = {}", quote(path));
                }
            }
        }
        for element in &self.sequence {
            let _ = writeln!(s, "\n[[sequence]]");
            match element {
                SequenceElement::Rotation { axis, angle } => {
                    let _ = writeln!(s, "type = \"rotation\"");
                    let _ = writeln!(
                        s,
                        "axis = [{}, {}, {}]",
                        float(axis[0]),
                        float(axis[1]),
                        float(axis[2])
                    );
                    let _ = writeln!(s, "angle = {}", float(*angle));
                }
                SequenceElement::PhaseAccumulation { phi } => {
                    let _ = writeln!(s, "type = \"phase_accumulation\"");
                    let _ = writeln!(s, "phi = {}", float(*phi));
                }
                SequenceElement::OneAxisTwist { mu } => {
                    let _ = writeln!(s, "type = \"one_axis_twist\"");
                    let _ = writeln!(s, "mu = {}", float(*mu));
                }
                SequenceElement::QndMeasurement { sigma, outcome } => {
                    let _ = writeln!(s, "type = \"qnd_measurement\"");
                    let _ = writeln!(s, "sigma = {}", float(*sigma));
                    if let Some(r) = outcome {
                        let _ = writeln!(s, "outcome = {}", float(*r));
                    }
                }
                SequenceElement::ReadoutNoise { sigma_det } => {
                    let _ = writeln!(s, "type = \"readout_noise\"");
                    let _ = writeln!(s, "sigma_det = {}", float(*sigma_det));
                }
            }
        }
        if self.scenario.needs_state() {
            let _ = writeln!(s, "\n[measurement]");
            let obs = match self.measurement.observable {
                Observable::Jz => "jz",
                Observable::JzSquared => "jz_squared",
            };
            let _ = writeln!(s, "observable = \"{obs}\"");
            let _ = writeln!(s, "sigma_det = {}", float(self.measurement.sigma_det));
            let _ = writeln!(s, "shots = {}", self.measurement.shots);
            if let Some(seed) = self.measurement.seed {
                let _ = writeln!(s, "seed = {seed}");
            }
        }
        if let Some(scan) = &self.scan {
            let _ = writeln!(s, "\n[scan]");
            let _ = writeln!(s, "parameter = {}", quote(&scan.parameter));
            let _ = writeln!(s, "start = {}", float(scan.start));
            let _ = writeln!(s, "stop = {}", float(scan.stop));
            let _ = writeln!(s, "points = {}", scan.points);
        }
        if let Some(c) = &self.clock {
            let _ = writeln!(s, "\n[clock]");
            let _ = writeln!(s, "omega0 = {}", float(c.omega0));
            let _ = writeln!(s, "T = {}", float(c.t));
            let _ = writeln!(s, "T_C = {}", float(c.t_c));
            let _ = writeln!(s, "tau = {}", float(c.tau));
            let _ = writeln!(s, "n_atoms = {}", c.n_atoms);
            let _ = writeln!(s, "xi = {}", float(c.xi));
        }
        if let Some(a) = &self.accel {
            let _ = writeln!(s, "\n[accel]");
            let _ = writeln!(s, "k_parallel = {}", float(a.k_parallel));
            let _ = writeln!(s, "T = {}", float(a.t));
            let _ = writeln!(s, "n_atoms = {}", a.n_atoms);
            let _ = writeln!(s, "xi = {}", float(a.xi));
        }
        if let Some(g) = &self.gyro {
            let _ = writeln!(s, "\n[gyro]");
            let _ = writeln!(s, "atom_mass = {}", float(g.atom_mass));
            let _ = writeln!(s, "area_parallel = {}", float(g.area_parallel));
            let _ = writeln!(s, "n_atoms = {}", g.n_atoms);
            let _ = writeln!(s, "xi = {}", float(g.xi));
        }
        if let Some(q) = &self.qnd {
            let _ = writeln!(s, "\n[qnd]");
            let _ = writeln!(s, "sigma = {}", float(q.sigma));
            if let Some(r) = q.outcome {
                let _ = writeln!(s, "outcome = {}", float(r));
            }
        }
        if let Some(g) = &self.grid {
            let _ = writeln!(s, "\n[grid]");
            let _ = writeln!(s, "n_polar = {}", g.n_polar);
            let _ = writeln!(s, "n_azimuth = {}", g.n_azimuth);
            let _ = writeln!(s, "kernel = \"{}\"", g.kernel.name());
        }
        s
    }
}

/// TOML float literal: `Display` is shortest-round-trip but can render as an
/// integer, which TOML would re-type; force a decimal point.
fn float(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}
