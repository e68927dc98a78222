//! Run manifests: a TOML schema with explicit unit suffixes, strict key
//! checking and a canonical emitter.
//!
//! ```toml
//! preset = "fig3a"            # optional base scenario
//! pipelines = ["obe", "mbe"]
//!
//! [atom]
//! od = 2.6
//!
//! [drive]
//! omega_c_gamma = 1.6
//! ```
//!
//! Dimensional keys carry their unit as a suffix: `_gamma` (multiples of
//! Gamma, or of `1/Gamma` for times), `_rad_s`, `_hz` (cycles per second),
//! `_s`, `_m`, `_per_m3`, `_kg`, `_k`, `_sigma`.

use std::f64::consts::PI;
use std::path::PathBuf;

use thiserror::Error;
use toml::{Table, Value};

use crate::constants::{RB87_MASS, RB_D2_WAVELENGTH};
use crate::mbe::PropagationGrid;
use crate::response::{calibrate_od, AtomSpec};
use crate::scenarios::{preset, DopplerSpec, DriveSpec, Pipeline, Protocol, ScenarioConfig, Scheme, SpectrumSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key `{path}`{}", suggestion.as_ref().map(|s| format!("; did you mean `{s}`?")).unwrap_or_default())]
    UnknownKey { path: String, suggestion: Option<String> },

    #[error("`{path}`: {reason}")]
    Unit { path: String, reason: String },

    #[error("`{path}`: expected {expected}")]
    Type { path: String, expected: &'static str },

    #[error("missing required key `{path}`")]
    Missing { path: String },

    #[error("`{path}`: {reason}")]
    Invalid { path: String, reason: String },

    #[error("sweeping several axes at once ({axes}) is not supported")]
    MultiAxisSweep { axes: String },
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Od,
    /// Control Rabi frequency, Gamma units.
    OmegaC,
    /// Ground-state dephasing, Gamma units.
    Dephasing,
    /// Vapor temperature, K.
    Temperature,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::Od => "od",
            SweepAxis::OmegaC => "omega_c_gamma",
            SweepAxis::Dephasing => "dephasing_gamma",
            SweepAxis::Temperature => "temperature_k",
        }
    }

    /// `config` with this axis set to `value`.
    pub fn apply(self, config: &ScenarioConfig, value: f64) -> crate::Result<ScenarioConfig> {
        let mut c = config.clone();
        match self {
            SweepAxis::Od => return c.with_od(value),
            SweepAxis::OmegaC => c.drive.omega_c = value,
            SweepAxis::Dephasing => c.atom.dephasing = value * c.atom.gamma,
            SweepAxis::Temperature => match c.doppler.as_mut() {
                Some(d) => d.temperature = value,
                None => {
                    return Err(crate::Error::invalid(
                        "temperature",
                        "a temperature sweep needs a [doppler] section",
                    ))
                }
            },
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Also write the space-time field grid of propagating pipelines.
    pub field_grid: bool,
}

/// A validated run request.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub preset: Option<String>,
    /// Fully resolved scenario; its pipeline is the first of `pipelines`.
    pub scenario: ScenarioConfig,
    pub pipelines: Vec<Pipeline>,
    pub output: OutputSpec,
    pub sweep: Option<Sweep>,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub check_convergence: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Unit {
    Gamma,
    RadS,
    Hz,
    Seconds,
    Meters,
    PerM3,
    Kg,
    Kelvin,
    Sigma,
}

impl Unit {
    fn suffix(self) -> &'static str {
        match self {
            Unit::Gamma => "_gamma",
            Unit::RadS => "_rad_s",
            Unit::Hz => "_hz",
            Unit::Seconds => "_s",
            Unit::Meters => "_m",
            Unit::PerM3 => "_per_m3",
            Unit::Kg => "_kg",
            Unit::Kelvin => "_k",
            Unit::Sigma => "_sigma",
        }
    }
}

const RATE: &[Unit] = &[Unit::Gamma, Unit::RadS, Unit::Hz];
const ABS_RATE: &[Unit] = &[Unit::RadS, Unit::Hz];
const TIME: &[Unit] = &[Unit::Gamma, Unit::Seconds];

#[derive(Clone, Copy)]
enum Kind {
    Str,
    Bool,
    Int,
    Float,
    StrList,
    FloatList,
    Dim(&'static [Unit]),
    DimList(&'static [Unit]),
}

struct KeySpec {
    base: &'static str,
    kind: Kind,
}

const fn k(base: &'static str, kind: Kind) -> KeySpec {
    KeySpec { base, kind }
}

const TOP: &[KeySpec] = &[
    k("preset", Kind::Str),
    k("name", Kind::Str),
    k("pipelines", Kind::StrList),
    k("notes", Kind::StrList),
    k("threads", Kind::Int),
    k("check_convergence", Kind::Bool),
];
const ATOM: &[KeySpec] = &[
    k("scheme", Kind::Str),
    k("gamma", Kind::Dim(ABS_RATE)),
    k("gamma_31", Kind::Dim(ABS_RATE)),
    k("gamma_32", Kind::Dim(ABS_RATE)),
    k("branching_31", Kind::Float),
    k("dephasing", Kind::Dim(RATE)),
    k("wavelength", Kind::Dim(&[Unit::Meters])),
    k("density", Kind::Dim(&[Unit::PerM3])),
    k("length", Kind::Dim(&[Unit::Meters])),
    k("mass", Kind::Dim(&[Unit::Kg])),
    k("od", Kind::Float),
];
const DRIVE: &[KeySpec] = &[
    k("omega_s", Kind::Dim(RATE)),
    k("omega_c", Kind::Dim(RATE)),
    k("delta_s", Kind::Dim(RATE)),
    k("delta_c", Kind::Dim(RATE)),
    k("protocol", Kind::Str),
];
const GRID: &[KeySpec] = &[
    k("n_zeta", Kind::Int),
    k("dtau", Kind::Dim(TIME)),
    k("tau_max", Kind::Dim(TIME)),
    k("control_frozen", Kind::Bool),
];
const DOPPLER: &[KeySpec] = &[
    k("temperature", Kind::Dim(&[Unit::Kelvin])),
    k("nodes", Kind::Int),
    k("truncation", Kind::Dim(&[Unit::Sigma])),
    k("quadrature", Kind::Str),
];
const SPECTRUM: &[KeySpec] = &[
    k("delta_min", Kind::Dim(RATE)),
    k("delta_max", Kind::Dim(RATE)),
    k("points", Kind::Int),
];
const OUTPUT: &[KeySpec] = &[k("dir", Kind::Str), k("field_grid", Kind::Bool)];
const SWEEP: &[KeySpec] = &[
    k("od", Kind::FloatList),
    k("omega_c", Kind::DimList(RATE)),
    k("dephasing", Kind::DimList(RATE)),
    k("temperature", Kind::DimList(&[Unit::Kelvin])),
];

const SECTIONS: &[(&str, &[KeySpec])] = &[
    ("atom", ATOM),
    ("drive", DRIVE),
    ("grid", GRID),
    ("doppler", DOPPLER),
    ("spectrum", SPECTRUM),
    ("output", OUTPUT),
    ("sweep", SWEEP),
];

fn full_keys(spec: &KeySpec) -> Vec<String> {
    match spec.kind {
        Kind::Dim(units) | Kind::DimList(units) => {
            units.iter().map(|u| format!("{}{}", spec.base, u.suffix())).collect()
        }
        _ => vec![spec.base.to_string()],
    }
}

fn join_path(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

/// Rewrites common synonyms onto the schema vocabulary.
fn normalize(key: &str) -> String {
    key.split('_')
        .map(|t| match t {
            "probe" | "signal" => "s",
            "coupling" | "control" | "pump" => "c",
            "rabi" => "omega",
            "detuning" => "delta",
            "decoherence" => "dephasing",
            "temp" | "t" => "temperature",
            other => other,
        })
        .collect::<Vec<_>>()
        .join("_")
}

fn suggest(section: &str, key: &str) -> Option<String> {
    let specs = SECTIONS
        .iter()
        .find(|(s, _)| *s == section)
        .map(|(_, s)| *s)
        .unwrap_or(TOP);
    let norm = normalize(key);
    for spec in specs {
        if norm == spec.base || full_keys(spec).contains(&norm) {
            return full_keys(spec).into_iter().next();
        }
        if let Some(rest) = norm.strip_prefix(spec.base) {
            if rest.starts_with('_') {
                return full_keys(spec).into_iter().next();
            }
        }
    }
    let mut best: Option<(usize, String)> = None;
    let mut consider = |candidate: String, shown: String| {
        let d = strsim::levenshtein(&norm, &candidate);
        if d <= 3 && best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, shown));
        }
    };
    for spec in specs {
        for full in full_keys(spec) {
            consider(full.clone(), full);
        }
    }
    for (other, specs) in SECTIONS.iter().chain(std::iter::once(&("", TOP))) {
        if *other == section {
            continue;
        }
        for spec in *specs {
            for full in full_keys(spec) {
                if full == norm {
                    return Some(join_path(other, &full));
                }
            }
        }
    }
    best.map(|(_, s)| s)
}

/// A recognized entry: the schema key it matched and its unit, if any.
struct Entry<'a> {
    path: String,
    unit: Option<Unit>,
    value: &'a Value,
}

/// Checks every key of `table` against `specs`, returning entries by base.
fn classify<'a>(section: &str, table: &'a Table, specs: &[KeySpec]) -> CResult<Vec<(&'static str, Entry<'a>)>> {
    let mut out: Vec<(&'static str, Entry<'a>)> = Vec::new();
    for (key, value) in table {
        let path = join_path(section, key);
        let mut matched = None;
        for spec in specs {
            match spec.kind {
                Kind::Dim(units) | Kind::DimList(units) => {
                    for &u in units {
                        if key.strip_prefix(spec.base) == Some(u.suffix()) {
                            matched = Some((spec.base, Some(u)));
                        }
                    }
                    if matched.is_none() && (key == spec.base || key.starts_with(&format!("{}_", spec.base))) {
                        let allowed = full_keys(spec).join(", ");
                        let looks_like_unit =
                            key == spec.base || !specs.iter().any(|s| s.base != spec.base && key.starts_with(s.base));
                        if looks_like_unit {
                            return Err(ConfigError::Unit {
                                path,
                                reason: if key == spec.base {
                                    format!("a unit suffix is required: use one of {allowed}")
                                } else {
                                    format!("unsupported unit suffix; use one of {allowed}")
                                },
                            });
                        }
                    }
                }
                _ => {
                    if key == spec.base {
                        matched = Some((spec.base, None));
                    }
                }
            }
            if matched.is_some() {
                break;
            }
        }
        let (base, unit) = match matched {
            Some(m) => m,
            None => {
                return Err(ConfigError::UnknownKey {
                    suggestion: suggest(section, key),
                    path,
                })
            }
        };
        if let Some((_, prev)) = out.iter().find(|(b, _)| *b == base) {
            return Err(ConfigError::Invalid {
                path,
                reason: format!("conflicts with `{}`", prev.path),
            });
        }
        out.push((base, Entry { path, unit, value }));
    }
    Ok(out)
}

struct Section<'a> {
    entries: Vec<(&'static str, Entry<'a>)>,
}

impl<'a> Section<'a> {
    fn get(&self, base: &str) -> Option<&Entry<'a>> {
        self.entries.iter().find(|(b, _)| *b == base).map(|(_, e)| e)
    }

    fn str(&self, base: &str) -> CResult<Option<String>> {
        self.get(base)
            .map(|e| {
                e.value.as_str().map(str::to_string).ok_or(ConfigError::Type {
                    path: e.path.clone(),
                    expected: "a string",
                })
            })
            .transpose()
    }

    fn bool(&self, base: &str) -> CResult<Option<bool>> {
        self.get(base)
            .map(|e| {
                e.value.as_bool().ok_or(ConfigError::Type {
                    path: e.path.clone(),
                    expected: "true or false",
                })
            })
            .transpose()
    }

    fn usize(&self, base: &str) -> CResult<Option<usize>> {
        self.get(base)
            .map(|e| {
                e.value
                    .as_integer()
                    .and_then(|i| usize::try_from(i).ok())
                    .ok_or(ConfigError::Type {
                        path: e.path.clone(),
                        expected: "a non-negative integer",
                    })
            })
            .transpose()
    }

    fn float(&self, base: &str) -> CResult<Option<(f64, Option<Unit>, String)>> {
        self.get(base)
            .map(|e| number(e.value, &e.path).map(|v| (v, e.unit, e.path.clone())))
            .transpose()
    }

    fn list(&self, base: &str) -> CResult<Option<(Vec<f64>, Option<Unit>, String)>> {
        self.get(base)
            .map(|e| {
                let arr = e.value.as_array().ok_or(ConfigError::Type {
                    path: e.path.clone(),
                    expected: "an array of numbers",
                })?;
                let values = arr.iter().map(|v| number(v, &e.path)).collect::<CResult<Vec<_>>>()?;
                Ok((values, e.unit, e.path.clone()))
            })
            .transpose()
    }

    fn str_list(&self, base: &str) -> CResult<Option<Vec<String>>> {
        self.get(base)
            .map(|e| {
                let err = || ConfigError::Type {
                    path: e.path.clone(),
                    expected: "an array of strings",
                };
                e.value
                    .as_array()
                    .ok_or_else(err)?
                    .iter()
                    .map(|v| v.as_str().map(str::to_string).ok_or_else(err))
                    .collect()
            })
            .transpose()
    }
}

fn number(v: &Value, path: &str) -> CResult<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::Type {
            path: path.to_string(),
            expected: "a number",
        }),
    }
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Converts a rate to multiples of `gamma` (rad/s).
fn to_gamma_units(v: f64, unit: Option<Unit>, gamma: f64) -> f64 {
    match unit {
        Some(Unit::RadS) => v / gamma,
        Some(Unit::Hz) => 2.0 * PI * v / gamma,
        _ => v,
    }
}

/// Converts a rate to rad/s.
fn to_rad_s(v: f64, unit: Option<Unit>, gamma: f64) -> f64 {
    match unit {
        Some(Unit::Gamma) => v * gamma,
        Some(Unit::Hz) => 2.0 * PI * v,
        _ => v,
    }
}

/// Converts a time to multiples of `1/gamma`.
fn to_tau(v: f64, unit: Option<Unit>, gamma: f64) -> f64 {
    match unit {
        Some(Unit::Seconds) => v * gamma,
        _ => v,
    }
}

fn parse_table(text: &str) -> CResult<Table> {
    text.parse::<Table>().map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1);
        ConfigError::Syntax {
            line,
            message: e.message().trim().to_string(),
        }
    })
}

fn parse_scheme(s: &str, path: &str) -> CResult<Scheme> {
    match s {
        "two-level" => Ok(Scheme::TwoLevel),
        "lambda" => Ok(Scheme::Lambda),
        _ => Err(invalid(path, format!("`{s}` is not one of two-level, lambda"))),
    }
}

fn parse_protocol(s: &str, path: &str) -> CResult<Protocol> {
    match s {
        "step" => Ok(Protocol::Step),
        "pumped" => Ok(Protocol::Pumped),
        _ => Err(invalid(path, format!("`{s}` is not one of step, pumped"))),
    }
}

fn required<T>(v: Option<T>, path: &str) -> CResult<T> {
    v.ok_or_else(|| ConfigError::Missing { path: path.to_string() })
}

/// Parses and validates a manifest. Nothing is computed or written.
pub fn parse_config(text: &str) -> crate::Result<RunManifest> {
    Ok(parse_manifest(text)?)
}

fn parse_manifest(text: &str) -> CResult<RunManifest> {
    let root = parse_table(text)?;
    let mut top = Table::new();
    let mut sections: Vec<(&str, Table)> = Vec::new();
    for (key, value) in &root {
        if let Some((name, _)) = SECTIONS.iter().find(|(s, _)| s == key) {
            match value {
                Value::Table(t) => sections.push((name, t.clone())),
                _ => {
                    return Err(ConfigError::Type {
                        path: key.clone(),
                        expected: "a table",
                    })
                }
            }
        } else if let Value::Table(_) = value {
            return Err(ConfigError::UnknownKey {
                path: format!("[{key}]"),
                suggestion: SECTIONS
                    .iter()
                    .map(|(s, _)| *s)
                    .find(|s| strsim::levenshtein(s, key) <= 2)
                    .map(|s| format!("[{s}]")),
            });
        } else {
            top.insert(key.clone(), value.clone());
        }
    }
    let top = Section {
        entries: classify("", &top, TOP)?,
    };
    let empty = Table::new();
    let mut tables: Vec<Section> = Vec::new();
    let mut present = Vec::new();
    for (name, specs) in SECTIONS {
        let table = sections.iter().find(|(s, _)| s == name).map(|(_, t)| t);
        present.push(table.is_some());
        tables.push(Section {
            entries: classify(name, table.unwrap_or(&empty), specs)?,
        });
    }
    let [atom, drive, grid, doppler, spectrum, output, sweep] = &tables[..] else {
        unreachable!("one section per schema entry")
    };
    let has = |name: &str| present[SECTIONS.iter().position(|(s, _)| *s == name).expect("known section")];

    let preset_name = top.str("preset")?;
    let base = match &preset_name {
        Some(p) => Some(preset(p).map_err(|e| invalid("preset", e.to_string()))?),
        None => None,
    };
    let name = match (top.str("name")?, &base) {
        (Some(n), _) => n,
        (None, Some(b)) => b.name.clone(),
        (None, None) => return Err(ConfigError::Missing { path: "name".into() }),
    };
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(invalid("name", "must be non-empty and contain no path separators"));
    }

    // [atom]
    let scheme = match atom.str("scheme")? {
        Some(s) => parse_scheme(&s, "atom.scheme")?,
        None => required(base.as_ref().map(|b| b.scheme), "atom.scheme")?,
    };
    let prev = base.as_ref().map(|b| b.atom);
    let gamma = match atom.float("gamma")? {
        Some((v, u, _)) => to_rad_s(v, u, 0.0),
        None => required(prev.map(|a| a.gamma), "atom.gamma_hz")?,
    };
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("atom.gamma", "must be positive"));
    }
    let (g31, g32) = match (
        atom.float("branching_31")?,
        atom.float("gamma_31")?,
        atom.float("gamma_32")?,
    ) {
        (Some((b, _, p)), None, None) => {
            if !(0.0..=1.0).contains(&b) {
                return Err(invalid(p, "must lie in [0, 1]"));
            }
            (b * gamma, (1.0 - b) * gamma)
        }
        (None, Some((a, ua, _)), Some((b, ub, _))) => (to_rad_s(a, ua, gamma), to_rad_s(b, ub, gamma)),
        (None, None, None) => match prev {
            Some(p) if p.gamma == gamma => (p.gamma_31, p.gamma_32),
            Some(p) => (p.gamma_31 / p.gamma * gamma, p.gamma_32 / p.gamma * gamma),
            None => match scheme {
                Scheme::TwoLevel => (gamma, 0.0),
                Scheme::Lambda => (0.5 * gamma, 0.5 * gamma),
            },
        },
        _ => {
            return Err(invalid(
                "atom.branching_31",
                "give either branching_31 or both gamma_31 and gamma_32",
            ))
        }
    };
    let dephasing = match (atom.float("dephasing")?, prev) {
        (Some((v, u, _)), _) => to_rad_s(v, u, gamma),
        (None, Some(p)) if p.gamma == gamma => p.dephasing,
        (None, Some(p)) => p.dephasing / p.gamma * gamma,
        (None, None) => 0.0,
    };
    let pick = |key: &str, path: &str, old: Option<f64>, default: Option<f64>| -> CResult<f64> {
        match atom.float(key)? {
            Some((v, _, _)) => Ok(v),
            None => required(old.or(default), path),
        }
    };
    let mut spec = AtomSpec {
        gamma,
        gamma_31: g31,
        gamma_32: g32,
        dephasing,
        dipole: prev.map(|p| p.dipole).unwrap_or(1e-29),
        wavelength: pick(
            "wavelength",
            "atom.wavelength_m",
            prev.map(|p| p.wavelength),
            Some(RB_D2_WAVELENGTH),
        )?,
        density: pick("density", "atom.density_per_m3", prev.map(|p| p.density), None)?,
        length: pick("length", "atom.length_m", prev.map(|p| p.length), None)?,
        mass: pick("mass", "atom.mass_kg", prev.map(|p| p.mass), Some(RB87_MASS))?,
    };
    let od = match atom.float("od")? {
        Some((v, _, _)) => v,
        None => required(base.as_ref().map(|b| b.target_od), "atom.od")?,
    };
    spec = calibrate_od(&spec, od).map_err(|e| invalid("atom", e.to_string()))?;

    // [drive]
    let prev_drive = base.as_ref().map(|b| b.drive);
    let rate = |key: &str, path: &str, old: Option<f64>, default: Option<f64>| -> CResult<f64> {
        match drive.float(key)? {
            Some((v, u, _)) => Ok(to_gamma_units(v, u, gamma)),
            None => required(old.or(default), path),
        }
    };
    let drive_spec = DriveSpec {
        omega_s: rate("omega_s", "drive.omega_s_gamma", prev_drive.map(|d| d.omega_s), None)?,
        omega_c: rate(
            "omega_c",
            "drive.omega_c_gamma",
            prev_drive.map(|d| d.omega_c),
            Some(0.0),
        )?,
        delta_s: rate(
            "delta_s",
            "drive.delta_s_gamma",
            prev_drive.map(|d| d.delta_s),
            Some(0.0),
        )?,
        delta_c: rate(
            "delta_c",
            "drive.delta_c_gamma",
            prev_drive.map(|d| d.delta_c),
            Some(0.0),
        )?,
        protocol: match drive.str("protocol")? {
            Some(p) => parse_protocol(&p, "drive.protocol")?,
            None => prev_drive.map(|d| d.protocol).unwrap_or(Protocol::Step),
        },
    };

    // [grid]
    let prev_grid = base.as_ref().map(|b| b.grid).unwrap_or_default();
    let grid_spec = PropagationGrid {
        n_zeta: grid.usize("n_zeta")?.unwrap_or(prev_grid.n_zeta),
        dtau: grid
            .float("dtau")?
            .map(|(v, u, _)| to_tau(v, u, gamma))
            .unwrap_or(prev_grid.dtau),
        tau_max: grid
            .float("tau_max")?
            .map(|(v, u, _)| to_tau(v, u, gamma))
            .unwrap_or(prev_grid.tau_max),
    };
    let control_frozen = grid
        .bool("control_frozen")?
        .unwrap_or(base.as_ref().map(|b| b.control_frozen).unwrap_or(false));

    // [doppler]
    let prev_doppler = base.as_ref().and_then(|b| b.doppler);
    let doppler_spec = if has("doppler") {
        let d = prev_doppler;
        Some(DopplerSpec {
            temperature: match doppler.float("temperature")? {
                Some((v, _, _)) => v,
                None => required(d.map(|d| d.temperature), "doppler.temperature_k")?,
            },
            nodes: doppler.usize("nodes")?.or(d.map(|d| d.nodes)).unwrap_or(64),
            truncation: doppler
                .float("truncation")?
                .map(|x| x.0)
                .or(d.map(|d| d.truncation))
                .unwrap_or(8.0),
            quadrature: match doppler.str("quadrature")? {
                Some(q) => q.parse().map_err(|reason| ConfigError::Invalid {
                    path: "doppler.quadrature".into(),
                    reason,
                })?,
                None => d.map(|d| d.quadrature).unwrap_or_default(),
            },
        })
    } else {
        prev_doppler
    };

    // [spectrum]
    let prev_spectrum = base.as_ref().and_then(|b| b.spectrum);
    let spectrum_spec = if has("spectrum") {
        let s = prev_spectrum;
        let bound = |key: &str, path: &str, old: Option<f64>| -> CResult<f64> {
            match spectrum.float(key)? {
                Some((v, u, _)) => Ok(to_gamma_units(v, u, gamma)),
                None => required(old, path),
            }
        };
        Some(SpectrumSpec {
            delta_min: bound("delta_min", "spectrum.delta_min_gamma", s.map(|s| s.delta_min))?,
            delta_max: bound("delta_max", "spectrum.delta_max_gamma", s.map(|s| s.delta_max))?,
            points: match spectrum.usize("points")? {
                Some(p) => p,
                None => required(s.map(|s| s.points), "spectrum.points")?,
            },
        })
    } else {
        prev_spectrum
    };

    // pipelines
    let pipelines = match top.str_list("pipelines")? {
        Some(list) => {
            let mut ps = Vec::new();
            for p in list {
                let parsed: Pipeline = p
                    .parse()
                    .map_err(|e: crate::Error| invalid("pipelines", e.to_string()))?;
                if ps.contains(&parsed) {
                    return Err(invalid("pipelines", format!("`{p}` listed twice")));
                }
                ps.push(parsed);
            }
            if ps.is_empty() {
                return Err(invalid("pipelines", "must name at least one pipeline"));
            }
            ps
        }
        None => vec![base.as_ref().map(|b| b.pipeline).unwrap_or(Pipeline::Obe)],
    };

    let notes = match top.str_list("notes")? {
        Some(n) => n,
        None => base.as_ref().map(|b| b.notes.clone()).unwrap_or_default(),
    };

    let scenario = ScenarioConfig {
        name,
        scheme,
        pipeline: pipelines[0],
        atom: spec,
        target_od: od,
        drive: drive_spec,
        grid: grid_spec,
        doppler: doppler_spec,
        spectrum: spectrum_spec,
        control_frozen,
        notes,
    };
    for p in &pipelines {
        scenario
            .clone()
            .with_pipeline(*p)
            .validate()
            .map_err(|e| invalid(format!("pipelines.{p}"), e.to_string()))?;
    }

    // [sweep]
    let mut axes = Vec::new();
    for (axis, base_key) in [
        (SweepAxis::Od, "od"),
        (SweepAxis::OmegaC, "omega_c"),
        (SweepAxis::Dephasing, "dephasing"),
        (SweepAxis::Temperature, "temperature"),
    ] {
        if let Some((values, unit, path)) = sweep.list(base_key)? {
            let values: Vec<f64> = match axis {
                SweepAxis::OmegaC | SweepAxis::Dephasing => {
                    values.into_iter().map(|v| to_gamma_units(v, unit, gamma)).collect()
                }
                _ => values,
            };
            if values.is_empty() {
                return Err(invalid(path, "needs at least one value"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(invalid(path, "values must be finite"));
            }
            axes.push((axis, values, path));
        }
    }
    let sweep_spec = match axes.len() {
        0 => None,
        1 => {
            let (axis, values, path) = axes.pop().expect("one axis");
            for &v in &values {
                axis.apply(&scenario, v)
                    .and_then(|c| c.validate())
                    .map_err(|e| invalid(path.clone(), format!("value {v}: {e}")))?;
            }
            Some(Sweep { axis, values })
        }
        _ => {
            return Err(ConfigError::MultiAxisSweep {
                axes: axes.iter().map(|a| a.2.clone()).collect::<Vec<_>>().join(", "),
            })
        }
    };

    let threads = top.usize("threads")?;
    if threads == Some(0) {
        return Err(invalid("threads", "must be at least 1"));
    }

    Ok(RunManifest {
        preset: preset_name,
        scenario,
        pipelines,
        output: OutputSpec {
            dir: output.str("dir")?.map(PathBuf::from),
            field_grid: output.bool("field_grid")?.unwrap_or(false),
        },
        sweep: sweep_spec,
        threads,
        check_convergence: top.bool("check_convergence")?.unwrap_or(false),
    })
}

fn float_list(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| Value::Float(v)).collect())
}

/// Canonical text form of `manifest`; `parse_config(&emit_config(m))`
/// reproduces `m` exactly.
pub fn emit_config(m: &RunManifest) -> String {
    let s = &m.scenario;
    let mut root = Table::new();
    if let Some(p) = &m.preset {
        root.insert("preset".into(), Value::String(p.clone()));
    }
    root.insert("name".into(), Value::String(s.name.clone()));
    root.insert(
        "pipelines".into(),
        Value::Array(m.pipelines.iter().map(|p| Value::String(p.to_string())).collect()),
    );
    root.insert(
        "notes".into(),
        Value::Array(s.notes.iter().map(|n| Value::String(n.clone())).collect()),
    );
    if let Some(t) = m.threads {
        root.insert("threads".into(), Value::Integer(t as i64));
    }
    root.insert("check_convergence".into(), Value::Boolean(m.check_convergence));

    let a = &s.atom;
    let mut atom = Table::new();
    atom.insert("scheme".into(), Value::String(s.scheme.as_str().into()));
    for (key, v) in [
        ("gamma_rad_s", a.gamma),
        ("gamma_31_rad_s", a.gamma_31),
        ("gamma_32_rad_s", a.gamma_32),
        ("dephasing_rad_s", a.dephasing),
        ("wavelength_m", a.wavelength),
        ("density_per_m3", a.density),
        ("length_m", a.length),
        ("mass_kg", a.mass),
        ("od", s.target_od),
    ] {
        atom.insert(key.into(), Value::Float(v));
    }
    root.insert("atom".into(), Value::Table(atom));

    let d = &s.drive;
    let mut drive = Table::new();
    for (key, v) in [
        ("omega_s_gamma", d.omega_s),
        ("omega_c_gamma", d.omega_c),
        ("delta_s_gamma", d.delta_s),
        ("delta_c_gamma", d.delta_c),
    ] {
        drive.insert(key.into(), Value::Float(v));
    }
    drive.insert(
        "protocol".into(),
        Value::String(
            match d.protocol {
                Protocol::Step => "step",
                Protocol::Pumped => "pumped",
            }
            .into(),
        ),
    );
    root.insert("drive".into(), Value::Table(drive));

    let mut grid = Table::new();
    grid.insert("n_zeta".into(), Value::Integer(s.grid.n_zeta as i64));
    grid.insert("dtau_gamma".into(), Value::Float(s.grid.dtau));
    grid.insert("tau_max_gamma".into(), Value::Float(s.grid.tau_max));
    grid.insert("control_frozen".into(), Value::Boolean(s.control_frozen));
    root.insert("grid".into(), Value::Table(grid));

    if let Some(dop) = s.doppler {
        let mut t = Table::new();
        t.insert("temperature_k".into(), Value::Float(dop.temperature));
        t.insert("nodes".into(), Value::Integer(dop.nodes as i64));
        t.insert("truncation_sigma".into(), Value::Float(dop.truncation));
        t.insert("quadrature".into(), Value::String(dop.quadrature.as_str().into()));
        root.insert("doppler".into(), Value::Table(t));
    }
    if let Some(sp) = s.spectrum {
        let mut t = Table::new();
        t.insert("delta_min_gamma".into(), Value::Float(sp.delta_min));
        t.insert("delta_max_gamma".into(), Value::Float(sp.delta_max));
        t.insert("points".into(), Value::Integer(sp.points as i64));
        root.insert("spectrum".into(), Value::Table(t));
    }

    let mut output = Table::new();
    if let Some(dir) = &m.output.dir {
        output.insert("dir".into(), Value::String(dir.to_string_lossy().into_owned()));
    }
    output.insert("field_grid".into(), Value::Boolean(m.output.field_grid));
    root.insert("output".into(), Value::Table(output));

    if let Some(sw) = &m.sweep {
        let mut t = Table::new();
        t.insert(sw.axis.key().into(), float_list(&sw.values));
        root.insert("sweep".into(), Value::Table(t));
    }
    toml::to_string(&root).expect("plain table serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> ConfigError {
        match parse_manifest(text) {
            Err(e) => e,
            Ok(m) => panic!("expected an error, got {m:?}"),
        }
    }

    #[test]
    fn minimal_preset_config() {
        let m = parse_config("preset = \"fig3a\"\n").unwrap();
        assert_eq!(m.scenario, preset("fig3a").unwrap());
        assert_eq!(m.pipelines, vec![Pipeline::Obe]);
        assert!(m.sweep.is_none());
        assert!(!m.check_convergence);
        assert_eq!(m.output, OutputSpec::default());
    }

    #[test]
    fn od_override_reproduces_fig3b_physics() {
        let m = parse_config("preset = \"fig3a\"\n[atom]\nod = 2.6\n").unwrap();
        let b = preset("fig3b").unwrap();
        let s = &m.scenario;
        assert_eq!(s.target_od, b.target_od);
        assert_eq!(s.drive, b.drive);
        assert_eq!(s.grid, b.grid);
        assert_eq!(s.atom.normalized_rates(), b.atom.normalized_rates());
        let (x, y) = (s.atom.coupling_prefactor(), b.atom.coupling_prefactor());
        assert!(((x - y) / y).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_suggests_schema_name() {
        match err("preset = \"fig3a\"\n[drive]\nomega_probe = 0.1\n") {
            ConfigError::UnknownKey { path, suggestion } => {
                assert_eq!(path, "drive.omega_probe");
                assert!(suggestion.unwrap().starts_with("omega_s"));
            }
            e => panic!("{e}"),
        }
        let msg = err("[drive]\nrabi_coupling_gamma = 1\n").to_string();
        assert!(msg.contains("omega_c_gamma"), "{msg}");
        let msg = err("[atom]\nnodes = 3\n").to_string();
        assert!(msg.contains("doppler.nodes"), "{msg}");
        assert!(matches!(err("bogus = 1\n"), ConfigError::UnknownKey { .. }));
        assert!(matches!(
            err("[atmo]\n"),
            ConfigError::UnknownKey {
                suggestion: Some(_),
                ..
            }
        ));
    }

    #[test]
    fn unit_suffix_errors() {
        match err("preset = \"fig3a\"\n[drive]\ndelta_s = 1.0\n") {
            ConfigError::Unit { path, reason } => {
                assert_eq!(path, "drive.delta_s");
                assert!(reason.contains("delta_s_gamma") && reason.contains("delta_s_rad_s"));
            }
            e => panic!("{e}"),
        }
        assert!(matches!(err("[drive]\nomega_s_khz = 1\n"), ConfigError::Unit { .. }));
        assert!(matches!(err("[atom]\ngamma_gamma = 1\n"), ConfigError::Unit { .. }));
        assert!(matches!(
            err("preset = \"fig3a\"\n[drive]\nomega_s_gamma = 1\nomega_s_hz = 1\n"),
            ConfigError::Invalid { .. }
        ));
    }

    #[test]
    fn syntax_error_reports_line() {
        match err("preset = \"fig3a\"\n\n[drive]\nomega_s_gamma = = 2\n") {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn type_and_missing_errors() {
        assert!(matches!(err("preset = 3\n"), ConfigError::Type { .. }));
        assert!(matches!(
            err("preset = \"fig3a\"\n[grid]\nn_zeta = -4\n"),
            ConfigError::Type { .. }
        ));
        assert!(matches!(
            err("[atom]\nscheme = \"lambda\"\n"),
            ConfigError::Missing { .. }
        ));
        assert!(matches!(err("preset = \"nope\"\n"), ConfigError::Invalid { .. }));
        assert!(matches!(
            err("preset = \"fig3a\"\npipelines = [\"doppler-obe\"]\n"),
            ConfigError::Invalid { .. }
        ));
    }

    #[test]
    fn unit_conversions() {
        let m = parse_config(
            "preset = \"fig3a\"\n[drive]\nomega_c_hz = 5.86e6\ndelta_s_rad_s = 3.681946590045383e7\n[grid]\ntau_max_s = 1e-7\n",
        )
        .unwrap();
        let g = m.scenario.atom.gamma;
        assert!((m.scenario.drive.omega_c - 1.0).abs() < 1e-12);
        assert!((m.scenario.drive.delta_s - 3.681946590045383e7 / g).abs() < 1e-12);
        assert!((m.scenario.grid.tau_max - 1e-7 * g).abs() < 1e-12);
    }

    #[test]
    fn standalone_config() {
        let text = "name = \"cloud\"\npipelines = [\"obe\", \"mbe\"]\n[atom]\nscheme = \"two-level\"\ngamma_hz = 5.86e6\ndensity_per_m3 = 5e16\nlength_m = 1e-3\nod = 2.0\n[drive]\nomega_s_gamma = 0.02\n";
        let m = parse_config(text).unwrap();
        assert_eq!(m.scenario.atom.gamma, 2.0 * PI * 5.86e6);
        assert_eq!(m.scenario.atom.gamma_31, m.scenario.atom.gamma);
        assert_eq!(m.pipelines, vec![Pipeline::Obe, Pipeline::Mbe]);
        assert_eq!(parse_config(&emit_config(&m)).unwrap(), m);
    }

    #[test]
    fn sweep_axes() {
        let m = parse_config("preset = \"fig3a\"\n[sweep]\ndephasing_gamma = [0.001, 0.3]\n").unwrap();
        assert_eq!(
            m.sweep,
            Some(Sweep {
                axis: SweepAxis::Dephasing,
                values: vec![0.001, 0.3]
            })
        );
        match err("preset = \"fig3a\"\n[sweep]\nod = [1, 2]\nomega_c_gamma = [1, 2]\n") {
            ConfigError::MultiAxisSweep { axes } => assert!(axes.contains("od") && axes.contains("omega_c")),
            e => panic!("{e}"),
        }
        assert!(matches!(
            err("preset = \"fig3a\"\n[sweep]\ntemperature_k = [300]\n"),
            ConfigError::Invalid { .. }
        ));
        assert!(matches!(
            err("preset = \"fig3a\"\n[sweep]\nod = []\n"),
            ConfigError::Invalid { .. }
        ));
    }

    #[test]
    fn presets_round_trip() {
        for name in crate::scenarios::PRESETS {
            let m = parse_config(&format!(
                "preset = \"{name}\"\ncheck_convergence = true\nthreads = 2\n[output]\ndir = \"out\"\n"
            ))
            .unwrap();
            let text = emit_config(&m);
            assert_eq!(parse_config(&text).unwrap(), m, "{name}:\n{text}");
        }
    }
}
