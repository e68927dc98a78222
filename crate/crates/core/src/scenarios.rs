//! Named scenario presets and the run/compare front end that dispatches
//! them to the uniform (OBE), propagating (MBE) and Doppler pipelines.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atomic::{
    steady_state, AtomModel, Detunings, DriveProtocol, Envelope, Fields, InitialState, IntegratorConfig, LambdaAtom,
    TwoLevelAtom,
};
use crate::constants::{RB87_MASS, RB_D2_WAVELENGTH};
use crate::doppler::{self, build_ensemble_with, Quadrature, VelocityEnsemble, Wavenumbers};
use crate::error::{Error, Result};
use crate::mbe::{
    gain_trace, peak_after_guard, propagate_ensemble, steady_propagation, FieldGrid, MbeOptions, Member,
    PropagationGrid,
};
use crate::par::Execution;
use crate::response::{
    calibrate_od, chi_from_coherence, obe_steady_transmission, obe_transmission_trace, resonant_od, AtomSpec,
    Susceptibility,
};

/// Natural linewidth used by every preset, rad/s.
pub const RB_GAMMA: f64 = 2.0 * PI * 5.86e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TwoLevel,
    Lambda,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::TwoLevel => "two-level",
            Scheme::Lambda => "lambda",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Obe,
    Mbe,
    DopplerObe,
    DopplerMbe,
}

impl Pipeline {
    pub const ALL: [Pipeline; 4] = [Pipeline::Obe, Pipeline::Mbe, Pipeline::DopplerObe, Pipeline::DopplerMbe];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::Obe => "obe",
            Pipeline::Mbe => "mbe",
            Pipeline::DopplerObe => "doppler-obe",
            Pipeline::DopplerMbe => "doppler-mbe",
        }
    }

    pub fn is_doppler(self) -> bool {
        matches!(self, Pipeline::DopplerObe | Pipeline::DopplerMbe)
    }

    pub fn is_propagating(self) -> bool {
        matches!(self, Pipeline::Mbe | Pipeline::DopplerMbe)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            Error::invalid(
                "pipeline",
                format!("`{s}` is not one of obe, mbe, doppler-obe, doppler-mbe"),
            )
        })
    }
}

/// How the fields are switched on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Atoms in `|1>`, both fields stepped on at `tau = 0`.
    Step,
    /// Signal on long before `tau = 0` (atoms optically pumped into its
    /// stationary state), control stepped on at `tau = 0`.
    Pumped,
}

/// Drive amplitudes and detunings in units of Gamma.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub omega_s: f64,
    pub omega_c: f64,
    pub delta_s: f64,
    pub delta_c: f64,
    pub protocol: Protocol,
}

impl DriveSpec {
    pub fn detunings(&self) -> Detunings {
        Detunings {
            signal: self.delta_s,
            control: self.delta_c,
        }
    }

    pub fn protocol(&self) -> DriveProtocol {
        let mut p = DriveProtocol::step(self.omega_s, self.omega_c, self.detunings());
        if self.protocol == Protocol::Pumped {
            p.signal = Envelope::Constant(Complex64::from(self.omega_s));
            p.initial = InitialState::Prepared;
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DopplerSpec {
    /// K.
    pub temperature: f64,
    pub nodes: usize,
    /// Velocities beyond this many standard deviations are dropped.
    pub truncation: f64,
    #[serde(default)]
    pub quadrature: Quadrature,
}

impl DopplerSpec {
    pub fn vapor(temperature: f64) -> Self {
        DopplerSpec {
            temperature,
            nodes: 64,
            truncation: 8.0,
            quadrature: Quadrature::GaussHermite,
        }
    }
}

/// Two-photon detuning grid (Gamma units) for a steady-state spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
}

impl SpectrumSpec {
    pub fn deltas(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.delta_min];
        }
        let step = (self.delta_max - self.delta_min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.delta_min + i as f64 * step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub scheme: Scheme,
    pub pipeline: Pipeline,
    /// Calibrated so that its resonant OD equals `target_od`.
    pub atom: AtomSpec,
    pub target_od: f64,
    pub drive: DriveSpec,
    /// Propagation grid; its `tau` window and step also sample the
    /// uniform-pipeline traces.
    pub grid: PropagationGrid,
    pub doppler: Option<DopplerSpec>,
    pub spectrum: Option<SpectrumSpec>,
    pub control_frozen: bool,
    /// Where each number comes from.
    pub notes: Vec<String>,
}

impl ScenarioConfig {
    /// Sets the target OD and recalibrates the dipole moment.
    pub fn with_od(mut self, od: f64) -> Result<Self> {
        self.atom = calibrate_od(&self.atom, od)?;
        self.target_od = od;
        Ok(self)
    }

    pub fn with_pipeline(mut self, pipeline: Pipeline) -> Self {
        self.pipeline = pipeline;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.atom.validate()?;
        self.grid.validate()?;
        let od = resonant_od(&self.atom);
        if ((od - self.target_od) / self.target_od).abs() > 1e-9 {
            return Err(Error::invalid(
                "target_od",
                format!("calibrated medium has OD {od}, expected {}", self.target_od),
            ));
        }
        let d = &self.drive;
        for (name, v) in [
            ("omega_s", d.omega_s),
            ("omega_c", d.omega_c),
            ("delta_s", d.delta_s),
            ("delta_c", d.delta_c),
        ] {
            crate::error::ensure_finite(name, v)?;
        }
        if d.omega_s == 0.0 {
            return Err(Error::invalid("omega_s", "signal must be nonzero to define gain"));
        }
        if self.scheme == Scheme::TwoLevel {
            if d.omega_c != 0.0 || d.protocol != Protocol::Step {
                return Err(Error::invalid(
                    "omega_c",
                    "two-level scenarios take no control field and a step protocol",
                ));
            }
            if self.atom.dephasing != 0.0 {
                return Err(Error::invalid(
                    "dephasing",
                    "two-level scenarios have no ground-state dephasing",
                ));
            }
        }
        if self.pipeline.is_doppler() {
            self.doppler.ok_or_else(|| {
                Error::invalid(
                    "doppler",
                    format!("pipeline {} needs a [doppler] section", self.pipeline),
                )
            })?;
            self.ensemble()?;
        }
        if let Some(s) = self.spectrum {
            if s.points == 0 || !(s.delta_min <= s.delta_max) || !s.delta_min.is_finite() || !s.delta_max.is_finite() {
                return Err(Error::invalid(
                    "spectrum",
                    "need points >= 1 and finite delta_min <= delta_max",
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn ensemble(&self) -> Result<Option<VelocityEnsemble>> {
        self.doppler
            .map(|d| build_ensemble_with(d.quadrature, d.temperature, self.atom.mass, d.nodes, d.truncation))
            .transpose()
    }
}

fn sphere_density(atoms: f64, diameter: f64) -> f64 {
    atoms / (4.0 / 3.0 * PI * (0.5 * diameter).powi(3))
}

fn base_atom(scheme: Scheme, density: f64, length: f64, dephasing: f64) -> AtomSpec {
    let (g31, g32) = match scheme {
        Scheme::TwoLevel => (RB_GAMMA, 0.0),
        Scheme::Lambda => (0.5 * RB_GAMMA, 0.5 * RB_GAMMA),
    };
    AtomSpec {
        gamma: RB_GAMMA,
        gamma_31: g31,
        gamma_32: g32,
        dephasing: dephasing * RB_GAMMA,
        dipole: 1.0e-29,
        wavelength: RB_D2_WAVELENGTH,
        density,
        length,
        mass: RB87_MASS,
    }
}

#[allow(clippy::too_many_arguments)]
fn config(
    name: &str,
    scheme: Scheme,
    pipeline: Pipeline,
    atom: AtomSpec,
    od: f64,
    drive: DriveSpec,
    doppler: Option<DopplerSpec>,
    spectrum: Option<SpectrumSpec>,
    notes: &[&str],
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        scheme,
        pipeline,
        atom,
        target_od: od,
        drive,
        grid: PropagationGrid::default(),
        doppler,
        spectrum,
        control_frozen: false,
        notes: notes.iter().map(|s| s.to_string()).collect(),
    }
    .with_od(od)
    .expect("preset OD is positive")
}

/// Registered preset names.
pub const PRESETS: &[&str] = &[
    "fig1a",
    "fig1a-od2",
    "fig1b",
    "fig1b-od2",
    "fig3a",
    "fig3b",
    "od8",
    "fig4a",
    "fig4b",
    "fig4b-cold",
    "fig5",
    "fig5-cold",
];

const VAPOR_OD: f64 = 20.0;
const VAPOR_T: f64 = 333.15;
const VAPOR_CELL: f64 = 0.025;

fn two_level(name: &str, omega: f64, od: f64) -> ScenarioConfig {
    let drive = DriveSpec {
        omega_s: omega,
        omega_c: 0.0,
        delta_s: 0.0,
        delta_c: 0.0,
        protocol: Protocol::Step,
    };
    config(
        name,
        Scheme::TwoLevel,
        Pipeline::Obe,
        base_atom(Scheme::TwoLevel, 5e16, 1e-3, 0.0),
        od,
        drive,
        None,
        None,
        &[
            "Gamma = 2 pi x 5.86 MHz (Rb D2)",
            "1 mm cloud of cold Rb at 5e16 atoms/m^3",
            "resonant field switched on as a step at tau = 0",
            "OD 5.5; the -od2 variant uses OD 2.0, the other value quoted for this cloud",
        ],
    )
}

fn chen(name: &str, atoms: f64, od: f64, note: &str) -> ScenarioConfig {
    let drive = DriveSpec {
        omega_s: 0.1,
        omega_c: 1.6,
        delta_s: 0.0,
        delta_c: 0.0,
        protocol: Protocol::Pumped,
    };
    config(
        name,
        Scheme::Lambda,
        Pipeline::Obe,
        base_atom(Scheme::Lambda, sphere_density(atoms, 1.2e-3), 1.2e-3, 0.3),
        od,
        drive,
        None,
        None,
        &[
            "Gamma = 2 pi x 5.86 MHz, Omega_c = 1.6 Gamma, Omega_s = 0.1 Gamma, gamma = 0.3 Gamma",
            "1.2 mm sphere of cold Rb, length = diameter",
            "equal branching Gamma_31 = Gamma_32 = Gamma/2",
            "signal on beforehand (atoms pumped into |2>), control stepped on at tau = 0",
            note,
        ],
    )
}

fn vapor(
    name: &str,
    omega_c: f64,
    pipeline: Pipeline,
    doppler: Option<DopplerSpec>,
    spectrum: Option<SpectrumSpec>,
    notes: &[&str],
) -> ScenarioConfig {
    let drive = DriveSpec {
        omega_s: 0.1,
        omega_c,
        delta_s: 0.0,
        delta_c: 0.0,
        protocol: Protocol::Step,
    };
    let mut all = vec![
        "Gamma = 2 pi x 5.86 MHz, gamma = 0.001 Gamma, Delta_s = Delta_c = 0",
        "2.5 cm Rb vapor cell at 60 C (333.15 K), Rb-87 mass, k_s = k_c = 2 pi / 780.241 nm",
        "vapor density not given: cold-equivalent resonant OD fixed at 20",
        "Omega_s = 0.1 Gamma (not given; same as the cold-atom presets)",
        "atoms in |1>, both fields stepped on at tau = 0",
    ];
    all.extend_from_slice(notes);
    config(
        name,
        Scheme::Lambda,
        pipeline,
        base_atom(Scheme::Lambda, 1e16, VAPOR_CELL, 0.001),
        VAPOR_OD,
        drive,
        doppler,
        spectrum,
        &all,
    )
}

/// Looks up a registered preset.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let eit_window = SpectrumSpec {
        delta_min: -20.0,
        delta_max: 20.0,
        points: 401,
    };
    let cfg = match name {
        "fig1a" => two_level(name, 0.02, 5.5),
        "fig1a-od2" => two_level(name, 0.02, 2.0),
        "fig1b" => two_level(name, 2.0, 5.5),
        "fig1b-od2" => two_level(name, 2.0, 2.0),
        "fig3a" => chen(name, 2e6, 1.2, "2e6 atoms, OD 1.2"),
        "fig3b" => chen(name, 12e6, 2.6, "12e6 atoms, OD 2.6"),
        "od8" => {
            let mut c = chen(
                name,
                2e6 * 8.0 / 1.2,
                8.0,
                "compressed MOT at OD 8; fields and dephasing not given, reused from fig3a",
            );
            c.notes.push("density scaled from fig3a in proportion to OD".into());
            c
        }
        "fig4a" => vapor(
            name,
            15.0,
            Pipeline::Obe,
            None,
            None,
            &["Omega_c = 15 Gamma, shared with the steady-state profile; a single (v = 0) velocity class"],
        ),
        "fig4b" => vapor(
            name,
            15.0,
            Pipeline::DopplerObe,
            Some(DopplerSpec::vapor(VAPOR_T)),
            Some(eit_window),
            &["Omega_c = 15 Gamma; Doppler-broadened steady-state EIT profile"],
        ),
        "fig4b-cold" => vapor(
            name,
            15.0,
            Pipeline::Obe,
            None,
            Some(eit_window),
            &["Omega_c = 15 Gamma; stationary-atom counterpart of fig4b"],
        ),
        "fig5" => vapor(
            name,
            2.0,
            Pipeline::DopplerObe,
            Some(DopplerSpec::vapor(VAPOR_T)),
            None,
            &["Omega_c = 2 Gamma; Doppler-averaged uniform (OBE) transient"],
        ),
        "fig5-cold" => vapor(
            name,
            2.0,
            Pipeline::Obe,
            None,
            None,
            &["Omega_c = 2 Gamma; stationary-atom counterpart of fig5"],
        ),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                available: PRESETS.join(", "),
            })
        }
    };
    Ok(cfg)
}

/// Steady-state susceptibility versus two-photon detuning.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Gamma units.
    pub delta: Vec<f64>,
    pub chi: Vec<Susceptibility>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub scenario: String,
    pub scheme: Scheme,
    pub pipeline: Pipeline,
    pub config_hash: String,
    /// Retarded time, 1/Gamma.
    pub tau: Vec<f64>,
    /// `|Omega_s(L)/Omega_s(0)|^2`
    pub transmission: Vec<f64>,
    /// `|Omega_s(L)/Omega_s(0)|`
    pub gain: Vec<f64>,
    /// Largest gain with the `tau = 0` sample excluded.
    pub peak_gain: f64,
    pub steady_transmission: f64,
    pub field_grid: Option<FieldGrid>,
    pub spectrum: Option<Spectrum>,
    /// Largest MBE stability monitor value.
    pub max_monitor: Option<f64>,
}

/// Runs `config` with the default execution mode.
pub fn run(config: &ScenarioConfig) -> Result<RunResult> {
    run_with(config, Execution::default())
}

pub fn run_with(config: &ScenarioConfig, exec: Execution) -> Result<RunResult> {
    let inner = || -> Result<RunResult> {
        config.validate()?;
        let (g31, g32, deph) = config.atom.normalized_rates();
        match config.scheme {
            Scheme::TwoLevel => run_model(config, &TwoLevelAtom::new(1.0)?, exec),
            Scheme::Lambda => run_model(config, &LambdaAtom::new(g31, g32, deph)?, exec),
        }
    };
    inner().map_err(|e| e.in_scenario(&config.name))
}

fn members(config: &ScenarioConfig, ensemble: Option<&VelocityEnsemble>) -> Vec<Member> {
    let base = config.drive.detunings();
    match ensemble {
        Some(e) => doppler::ensemble_members(base, e, Wavenumbers::equal(config.atom.wavenumber()), config.atom.gamma),
        None => vec![Member {
            weight: 1.0,
            detunings: base,
        }],
    }
}

fn run_model<const D: usize, M: AtomModel<D>>(
    config: &ScenarioConfig,
    model: &M,
    exec: Execution,
) -> Result<RunResult> {
    let spec = &config.atom;
    let drive = config.drive.protocol();
    let tau = config.grid.tau();
    let k = Wavenumbers::equal(spec.wavenumber());
    let cfg = IntegratorConfig::default();
    let ensemble = if config.pipeline.is_doppler() {
        config.ensemble()?
    } else {
        None
    };
    let mbe_options = MbeOptions {
        control_frozen: config.control_frozen,
        execution: exec,
        ..MbeOptions::default()
    };

    let mut field_grid = None;
    let mut max_monitor = None;
    let (transmission, gain, steady) = match config.pipeline {
        Pipeline::Obe => {
            let t = obe_transmission_trace(model, &drive, spec, &tau, &cfg)?;
            (t.transmission, t.gain, obe_steady_transmission(model, &drive, spec)?)
        }
        Pipeline::DopplerObe => {
            let e = ensemble.as_ref().expect("validated");
            let t = doppler::doppler_transient_obe(model, &drive, spec, e, k, &tau, &cfg, exec)?;
            let steady = doppler::doppler_steady_transmission(model, &drive, spec, e, k, exec)?;
            (t.transmission, t.gain, steady)
        }
        Pipeline::Mbe | Pipeline::DopplerMbe => {
            let m = members(config, ensemble.as_ref());
            let run = propagate_ensemble(model, &drive, spec, &m, &config.grid, &mbe_options)?;
            let gain = gain_trace(&run.fields)?;
            let input = Fields::new(drive.signal.amplitude(), drive.control.amplitude());
            let profile = steady_propagation(model, input, spec, &m, config.grid.n_zeta, &mbe_options)?;
            let out = profile.last().expect("non-empty profile").signal;
            max_monitor = Some(run.max_monitor);
            field_grid = Some(run.fields);
            (
                gain.iter().map(|g| g * g).collect(),
                gain,
                (out / input.signal).norm_sqr(),
            )
        }
    };

    let spectrum = match config.spectrum {
        None => None,
        Some(s) => Some(spectrum(config, model, &s, ensemble.as_ref(), exec)?),
    };

    Ok(RunResult {
        scenario: config.name.clone(),
        scheme: config.scheme,
        pipeline: config.pipeline,
        config_hash: config.hash(),
        peak_gain: peak_after_guard(&gain),
        tau,
        transmission,
        gain,
        steady_transmission: steady,
        field_grid,
        spectrum,
        max_monitor,
    })
}

fn spectrum<const D: usize, M: AtomModel<D>>(
    config: &ScenarioConfig,
    model: &M,
    s: &SpectrumSpec,
    ensemble: Option<&VelocityEnsemble>,
    exec: Execution,
) -> Result<Spectrum> {
    let spec = &config.atom;
    let d = config.drive;
    let fields = Fields::new(Complex64::from(d.omega_s), Complex64::from(d.omega_c));
    let delta = s.deltas();
    let grid: Vec<Detunings> = delta
        .iter()
        .map(|&x| Detunings {
            signal: d.delta_c + x,
            control: d.delta_c,
        })
        .collect();
    let chi = match ensemble {
        Some(e) => doppler::doppler_spectrum(
            model,
            fields,
            &grid,
            e,
            spec,
            Wavenumbers::equal(spec.wavenumber()),
            exec,
        )?,
        None => grid
            .iter()
            .map(|&det| {
                let rho = steady_state(&model.hamiltonian(fields, det), model.lindblad())?;
                chi_from_coherence(model.signal_coherence(&rho), fields.signal * spec.gamma, spec)
            })
            .collect::<Result<_>>()?,
    };
    Ok(Spectrum { delta, chi })
}

/// Relative change of a run under [`PropagationGrid::refined`]: the
/// largest gain difference on the shared retarded times, over the peak of
/// the refined gain, combined with the relative steady-state change.
pub fn convergence_delta(coarse: &RunResult, refined: &RunResult) -> f64 {
    let scale = refined.gain.iter().cloned().fold(0.0, f64::max);
    let mut delta: f64 = 0.0;
    for (t, g) in coarse.tau.iter().zip(&coarse.gain) {
        let j = refined.tau.partition_point(|x| *x < *t - 1e-9);
        if j < refined.tau.len() && (refined.tau[j] - t).abs() < 1e-9 {
            delta = delta.max((g - refined.gain[j]).abs() / scale);
        }
    }
    let steady = (coarse.steady_transmission - refined.steady_transmission).abs() / refined.steady_transmission.abs();
    delta.max(steady)
}

/// Runs `config` on its grid and on the refined grid.
pub fn check_convergence(config: &ScenarioConfig, exec: Execution) -> Result<(RunResult, f64)> {
    let coarse = run_with(config, exec)?;
    let mut fine = config.clone();
    fine.grid = config.grid.refined();
    let refined = run_with(&fine, exec)?;
    let delta = convergence_delta(&coarse, &refined);
    Ok((coarse, delta))
}

/// Largest `|x - steady|` after the first local extremum of `trace`
/// (the `tau = 0` sample excluded). Zero if the trace is monotone.
pub fn ringing_metric(trace: &[f64], steady: f64) -> f64 {
    let first =
        (2..trace.len().saturating_sub(1)).find(|&i| (trace[i] - trace[i - 1]) * (trace[i + 1] - trace[i]) < 0.0);
    match first {
        Some(i) => trace[i + 1..].iter().map(|x| (x - steady).abs()).fold(0.0, f64::max),
        None => 0.0,
    }
}

/// Side-by-side figures of merit for two runs of the same level scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Comparison {
    /// `a.peak_gain / b.peak_gain`
    pub peak_gain_ratio: f64,
    pub peak_gain_difference: f64,
    /// `a.steady_transmission - b.steady_transmission`
    pub steady_difference: f64,
    pub ringing_a: f64,
    pub ringing_b: f64,
    /// `ringing_a / ringing_b`; NaN if `b` does not ring.
    pub ringing_ratio: f64,
}

pub fn compare(a: &RunResult, b: &RunResult) -> Result<Comparison> {
    if a.scheme != b.scheme {
        return Err(Error::Incompatible(format!(
            "`{}` is {:?} but `{}` is {:?}",
            a.scenario, a.scheme, b.scenario, b.scheme
        )));
    }
    let ringing_a = ringing_metric(&a.transmission, a.steady_transmission);
    let ringing_b = ringing_metric(&b.transmission, b.steady_transmission);
    Ok(Comparison {
        peak_gain_ratio: a.peak_gain / b.peak_gain,
        peak_gain_difference: a.peak_gain - b.peak_gain,
        steady_difference: a.steady_transmission - b.steady_transmission,
        ringing_a,
        ringing_b,
        ringing_ratio: if ringing_b == 0.0 {
            f64::NAN
        } else {
            ringing_a / ringing_b
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves_and_validates() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            assert_eq!(&c.name, name);
            c.validate().unwrap();
            let od = resonant_od(&c.atom);
            assert!(((od - c.target_od) / c.target_od).abs() < 1e-9, "{name}");
            assert!(!c.notes.is_empty());
        }
        let mut names = PRESETS.to_vec();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), PRESETS.len());
    }

    #[test]
    fn unknown_preset_lists_registry() {
        match preset("fig9") {
            Err(Error::UnknownPreset { available, .. }) => {
                for name in PRESETS {
                    assert!(available.contains(name));
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chen_preset_values() {
        let c = preset("fig3a").unwrap();
        assert_eq!(c.atom.gamma, 2.0 * PI * 5.86e6);
        assert_eq!((c.drive.omega_c, c.drive.omega_s), (1.6, 0.1));
        assert!((c.atom.dephasing / c.atom.gamma - 0.3).abs() < 1e-15);
        let n = c.atom.density * 4.0 / 3.0 * PI * 0.6e-3f64.powi(3);
        assert!((n - 2e6).abs() < 1e-6);
        assert_eq!(c.atom.length, 1.2e-3);
        let b = preset("fig3b").unwrap();
        assert_eq!(b.target_od, 2.6);
        assert_eq!(b.drive, c.drive);
    }

    #[test]
    fn vapor_preset_values() {
        let c = preset("fig5").unwrap();
        assert_eq!(c.atom.length, 0.025);
        assert_eq!(c.doppler.unwrap().temperature, 333.15);
        assert_eq!(c.drive.omega_c, 2.0);
        assert!((c.atom.dephasing / c.atom.gamma - 0.001).abs() < 1e-15);
        assert_eq!((c.drive.delta_s, c.drive.delta_c), (0.0, 0.0));
        assert_eq!(preset("fig4b").unwrap().drive.omega_c, 15.0);
    }

    #[test]
    fn hash_tracks_content() {
        let a = preset("fig3a").unwrap();
        assert_eq!(a.hash(), preset("fig3a").unwrap().hash());
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), a.clone().with_pipeline(Pipeline::Mbe).hash());
    }

    #[test]
    fn doppler_pipeline_requires_ensemble() {
        let c = preset("fig3a").unwrap().with_pipeline(Pipeline::DopplerObe);
        assert!(c.validate().is_err());
        let err = run(&c).unwrap_err();
        assert!(matches!(err, Error::Scenario { ref scenario, .. } if scenario == "fig3a"));
    }

    #[test]
    fn ringing_metric_cases() {
        assert_eq!(ringing_metric(&[0.0, 1.0, 2.0, 3.0], 3.0), 0.0);
        let t = [0.0, 1.0, 2.0, 1.5, 0.8, 1.1, 1.0];
        assert!((ringing_metric(&t, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn compare_self_and_mismatched() {
        let r = run(&preset("fig1a").unwrap()).unwrap();
        let c = compare(&r, &r).unwrap();
        assert_eq!(c.peak_gain_ratio, 1.0);
        assert_eq!(c.peak_gain_difference, 0.0);
        assert_eq!(c.steady_difference, 0.0);
        assert_eq!(c.ringing_a, c.ringing_b);
        let mut other = r.clone();
        other.scheme = Scheme::Lambda;
        assert!(matches!(compare(&r, &other), Err(Error::Incompatible(_))));
    }

    #[test]
    fn run_result_invariants() {
        let r = run(&preset("fig3a").unwrap()).unwrap();
        assert_eq!(r.tau.len(), r.gain.len());
        assert_eq!(r.tau.len(), r.transmission.len());
        assert_eq!(
            r.peak_gain,
            r.gain[1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        );
        assert_eq!(r.config_hash, preset("fig3a").unwrap().hash());
    }
}
