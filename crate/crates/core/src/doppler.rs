//! Thermal (Maxwell-Boltzmann) velocity ensembles and Doppler averaging.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomic::{evolve, AtomModel, DensityMatrix, Detunings, DriveProtocol, DrivenAtom, Fields, IntegratorConfig};
use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};
use crate::mbe::Member;
use crate::par::{self, Execution};
use crate::response::{beer_lambert, chi_from_coherence, trace_from_coherences, AtomSpec, ObeTrace, Susceptibility};

/// `sqrt(k_B T / m)`, m/s.
pub fn velocity_spread(temperature: f64, mass: f64) -> f64 {
    (BOLTZMANN * temperature / mass).sqrt()
}

/// How the velocity distribution is discretized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    /// Gauss-Hermite nodes scaled to the Maxwell-Boltzmann width.
    #[default]
    GaussHermite,
    /// Evenly spaced nodes on the truncated range, trapezoid weights times
    /// the Gaussian density. Converges slowly but uniformly, which suits
    /// transients whose integrand oscillates in `k v tau`.
    Trapezoid,
}

impl Quadrature {
    pub fn as_str(self) -> &'static str {
        match self {
            Quadrature::GaussHermite => "gauss-hermite",
            Quadrature::Trapezoid => "trapezoid",
        }
    }
}

impl std::str::FromStr for Quadrature {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gauss-hermite" => Ok(Quadrature::GaussHermite),
            "trapezoid" => Ok(Quadrature::Trapezoid),
            _ => Err(format!(
                "unknown quadrature `{s}` (expected gauss-hermite or trapezoid)"
            )),
        }
    }
}

/// Discretization of the 1D Maxwell-Boltzmann distribution.
///
/// Nodes are sorted ascending and exactly antisymmetric; weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityEnsemble {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    sigma_v: f64,
    temperature: f64,
    mass: f64,
}

impl VelocityEnsemble {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn sigma_v(&self) -> f64 {
        self.sigma_v
    }
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gauss-Hermite ensemble with a given velocity spread (temperature
    /// derived from it).
    pub fn with_sigma(sigma_v: f64, mass: f64, n: usize, truncation: f64) -> Result<Self> {
        Self::with_rule(Quadrature::GaussHermite, sigma_v, mass, n, truncation)
    }

    pub fn with_rule(rule: Quadrature, sigma_v: f64, mass: f64, n: usize, truncation: f64) -> Result<Self> {
        if !(sigma_v > 0.0 && sigma_v.is_finite()) {
            return Err(Error::invalid("sigma_v", "must be positive"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("mass", "must be positive"));
        }
        if n < 3 {
            return Err(Error::Ensemble(format!("need at least 3 nodes, got {n}")));
        }
        if !(truncation > 0.0) {
            return Err(Error::invalid("truncation", "must be positive"));
        }
        let kept = match rule {
            Quadrature::GaussHermite => gauss_hermite_pairs(sigma_v, n, truncation),
            Quadrature::Trapezoid => trapezoid_pairs(sigma_v, n, truncation),
        };
        if kept.len() < 3 {
            return Err(Error::Ensemble(format!(
                "truncation at {truncation} sigma leaves {} nodes",
                kept.len()
            )));
        }
        let total: f64 = kept.iter().map(|p| p.1).sum();
        Ok(VelocityEnsemble {
            nodes: kept.iter().map(|p| p.0).collect(),
            weights: kept.iter().map(|p| p.1 / total).collect(),
            sigma_v,
            temperature: sigma_v * sigma_v * mass / BOLTZMANN,
            mass,
        })
    }
}

fn gauss_hermite_pairs(sigma_v: f64, n: usize, truncation: f64) -> Vec<(f64, f64)> {
    let rule = GaussHermite::new(NonZeroUsize::new(n).expect("n >= 3"));
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // enforce exact symmetry about zero
    let sym: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let (xa, wa) = pairs[i];
            let (xb, wb) = pairs[n - 1 - i];
            (0.5 * (xa - xb), 0.5 * (wa + wb))
        })
        .collect();

    let scale = std::f64::consts::SQRT_2 * sigma_v;
    sym.into_iter()
        .map(|(x, w)| (x * scale, w / PI.sqrt()))
        .filter(|(v, _)| v.abs() <= truncation * sigma_v)
        .collect()
}

fn trapezoid_pairs(sigma_v: f64, n: usize, truncation: f64) -> Vec<(f64, f64)> {
    let h = 2.0 * truncation / (n - 1) as f64;
    (0..n)
        .map(|i| {
            // mirrored index keeps the nodes exactly antisymmetric
            let x = 0.5 * h * (2.0 * i as f64 - (n - 1) as f64);
            let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            (x * sigma_v, end * h * (-0.5 * x * x).exp())
        })
        .collect()
}

/// Maxwell-Boltzmann ensemble at temperature `temperature` (K) for atoms of
/// mass `mass` (kg), `n` Gauss-Hermite nodes, dropping nodes beyond
/// `truncation` standard deviations.
pub fn build_ensemble(temperature: f64, mass: f64, n: usize, truncation: f64) -> Result<VelocityEnsemble> {
    build_ensemble_with(Quadrature::GaussHermite, temperature, mass, n, truncation)
}

pub fn build_ensemble_with(
    rule: Quadrature,
    temperature: f64,
    mass: f64,
    n: usize,
    truncation: f64,
) -> Result<VelocityEnsemble> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    let mut e = VelocityEnsemble::with_rule(rule, velocity_spread(temperature, mass), mass, n, truncation)?;
    e.temperature = temperature;
    Ok(e)
}

/// One-photon detunings seen by an atom moving at `velocity` along the
/// beams: `Delta - k v` for each field.
pub fn shifted_detunings(
    signal_detuning: f64,
    control_detuning: f64,
    velocity: f64,
    k_signal: f64,
    k_control: f64,
) -> (f64, f64) {
    (
        signal_detuning - k_signal * velocity,
        control_detuning - k_control * velocity,
    )
}

/// Dressed-state ringing frequency `sqrt(Omega_c^2 + 4 Delta^2)`.
pub fn effective_rabi(control_rabi: f64, detuning: f64) -> f64 {
    (control_rabi * control_rabi + 4.0 * detuning * detuning).sqrt()
}

/// Field wavenumbers in 1/m. Equal values make the two-photon detuning
/// velocity independent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wavenumbers {
    pub signal: f64,
    pub control: f64,
}

impl Wavenumbers {
    pub fn equal(k: f64) -> Self {
        Wavenumbers { signal: k, control: k }
    }
}

/// Quantities that can be weight-averaged over velocity classes.
pub trait Averageable: Clone {
    fn scaled(&self, w: f64) -> Self;
    fn accumulate(&mut self, other: &Self, w: f64);
}

impl Averageable for f64 {
    fn scaled(&self, w: f64) -> Self {
        self * w
    }
    fn accumulate(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
}

impl Averageable for Complex64 {
    fn scaled(&self, w: f64) -> Self {
        self * w
    }
    fn accumulate(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
}

impl Averageable for Susceptibility {
    fn scaled(&self, w: f64) -> Self {
        Susceptibility(self.0 * w)
    }
    fn accumulate(&mut self, other: &Self, w: f64) {
        self.0 += other.0 * w;
    }
}

impl<const D: usize> Averageable for DensityMatrix<D> {
    fn scaled(&self, w: f64) -> Self {
        DensityMatrix::weighted_sum(&[(w, *self)])
    }
    fn accumulate(&mut self, other: &Self, w: f64) {
        *self = DensityMatrix::weighted_sum(&[(1.0, *self), (w, *other)]);
    }
}

impl<T: Averageable> Averageable for Vec<T> {
    fn scaled(&self, w: f64) -> Self {
        self.iter().map(|x| x.scaled(w)).collect()
    }
    fn accumulate(&mut self, other: &Self, w: f64) {
        for (a, b) in self.iter_mut().zip(other) {
            a.accumulate(b, w);
        }
    }
}

/// `sum_k w_k response_k`, accumulated in node order.
pub fn doppler_average<T: Averageable>(responses: &[T], ensemble: &VelocityEnsemble) -> Result<T> {
    if responses.len() != ensemble.len() {
        return Err(Error::NodeMismatch {
            responses: responses.len(),
            nodes: ensemble.len(),
        });
    }
    let mut acc = responses[0].scaled(ensemble.weights[0]);
    for (r, &w) in responses.iter().zip(&ensemble.weights).skip(1) {
        acc.accumulate(r, w);
    }
    Ok(acc)
}

/// Per-node detunings (Gamma units) for the protocol detunings `base`.
pub fn node_detunings(base: Detunings, ensemble: &VelocityEnsemble, k: Wavenumbers, gamma: f64) -> Vec<Detunings> {
    ensemble
        .nodes
        .iter()
        .map(|&v| {
            let (s, c) = shifted_detunings(base.signal, base.control, v, k.signal / gamma, k.control / gamma);
            Detunings { signal: s, control: c }
        })
        .collect()
}

/// Velocity classes as Maxwell-Bloch node members.
pub fn ensemble_members(base: Detunings, ensemble: &VelocityEnsemble, k: Wavenumbers, gamma: f64) -> Vec<Member> {
    node_detunings(base, ensemble, k, gamma)
        .into_iter()
        .zip(&ensemble.weights)
        .map(|(detunings, &weight)| Member { weight, detunings })
        .collect()
}

/// Doppler-averaged steady-state susceptibility for each entry of
/// `detuning_grid` under constant `fields` (Gamma units).
#[allow(clippy::too_many_arguments)]
pub fn doppler_spectrum<const D: usize, M: AtomModel<D>>(
    model: &M,
    fields: Fields,
    detuning_grid: &[Detunings],
    ensemble: &VelocityEnsemble,
    spec: &AtomSpec,
    k: Wavenumbers,
    exec: Execution,
) -> Result<Vec<Susceptibility>> {
    let input = fields.signal * spec.gamma;
    let idx: Vec<usize> = (0..ensemble.len()).collect();
    let per_node: Vec<Vec<Susceptibility>> = par::try_map(exec, &idx, |&n| {
        let v = ensemble.nodes[n];
        detuning_grid
            .iter()
            .map(|d| {
                let (s, c) = shifted_detunings(d.signal, d.control, v, k.signal / spec.gamma, k.control / spec.gamma);
                let h = model.hamiltonian(fields, Detunings { signal: s, control: c });
                let rho = crate::atomic::steady_state(&h, model.lindblad())?;
                chi_from_coherence(model.signal_coherence(&rho), input, spec)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    doppler_average(&per_node, ensemble)
}

/// Doppler-broadened steady-state EIT profile versus two-photon detuning
/// (control detuning held fixed).
#[allow(clippy::too_many_arguments)]
pub fn doppler_eit_spectrum<M: AtomModel<3>>(
    model: &M,
    fields: Fields,
    control_detuning: f64,
    two_photon: &[f64],
    ensemble: &VelocityEnsemble,
    spec: &AtomSpec,
    k: Wavenumbers,
    exec: Execution,
) -> Result<Vec<Susceptibility>> {
    let grid: Vec<Detunings> = two_photon
        .iter()
        .map(|&d| Detunings {
            signal: control_detuning + d,
            control: control_detuning,
        })
        .collect();
    doppler_spectrum(model, fields, &grid, ensemble, spec, k, exec)
}

/// Steady-state transmission `|Omega(L)/Omega(0)|^2` of the uniform
/// pipeline with a velocity-averaged susceptibility.
pub fn doppler_steady_transmission<const D: usize, M: AtomModel<D>>(
    model: &M,
    drive: &DriveProtocol,
    spec: &AtomSpec,
    ensemble: &VelocityEnsemble,
    k: Wavenumbers,
    exec: Execution,
) -> Result<f64> {
    let fields = Fields::new(drive.signal.amplitude(), drive.control.amplitude());
    let chi = doppler_spectrum(model, fields, &[drive.detunings], ensemble, spec, k, exec)?[0];
    let input = fields.signal * spec.gamma;
    let out = beer_lambert(input, chi, spec.wavenumber(), spec.length);
    Ok((out.norm() / input.norm()).powi(2))
}

/// Signal coherence `rho_eg(tau)` of each velocity class, in node order.
#[allow(clippy::too_many_arguments)]
pub fn node_coherences<const D: usize, M: AtomModel<D>>(
    model: &M,
    drive: &DriveProtocol,
    ensemble: &VelocityEnsemble,
    k: Wavenumbers,
    gamma: f64,
    tau: &[f64],
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Result<Vec<Vec<Complex64>>> {
    let detunings = node_detunings(drive.detunings, ensemble, k, gamma);
    par::try_map(exec, &detunings, |&d| {
        let source = DrivenAtom {
            model,
            drive,
            detunings: d,
        };
        let rho0 = drive.initial_state(model, d)?;
        let traj = evolve(&rho0, &source, model.lindblad(), tau, cfg)?;
        Ok(traj.states.iter().map(|r| model.signal_coherence(r)).collect())
    })
}

/// Doppler-averaged uniform-medium (OBE) transient: per-class evolution,
/// velocity-averaged susceptibility, Beer-Lambert over the medium.
#[allow(clippy::too_many_arguments)]
pub fn doppler_transient_obe<const D: usize, M: AtomModel<D>>(
    model: &M,
    drive: &DriveProtocol,
    spec: &AtomSpec,
    ensemble: &VelocityEnsemble,
    k: Wavenumbers,
    tau: &[f64],
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Result<ObeTrace> {
    let per_node = node_coherences(model, drive, ensemble, k, spec.gamma, tau, cfg, exec)?;
    let averaged = doppler_average(&per_node, ensemble)?;
    let inputs: Vec<Complex64> = tau.iter().map(|&t| drive.signal.at(t)).collect();
    trace_from_coherences(tau, &averaged, &inputs, spec)
}
