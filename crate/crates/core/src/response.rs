//! Susceptibility, Beer-Lambert propagation and optical-depth bookkeeping:
//! the spatially uniform (single-atom) pipeline.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomic::{evolve, AtomModel, DriveProtocol, DrivenAtom, IntegratorConfig};
use crate::constants::{EPSILON_0, HBAR};
use crate::error::{Error, Result};

/// Physical (SI) parameters of the atomic medium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    /// Total excited-state decay rate, rad/s.
    pub gamma: f64,
    /// Decay into `|1>` (Lambda only), rad/s.
    pub gamma_31: f64,
    /// Decay into `|2>` (Lambda only), rad/s.
    pub gamma_32: f64,
    /// Ground-state dephasing, rad/s.
    pub dephasing: f64,
    /// Transition dipole moment, C m.
    pub dipole: f64,
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    /// Number density, 1/m^3.
    pub density: f64,
    /// Medium length, m.
    pub length: f64,
    /// Atomic mass, kg.
    pub mass: f64,
}

impl AtomSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("dipole", self.dipole),
            ("wavelength", self.wavelength),
            ("density", self.density),
            ("length", self.length),
            ("mass", self.mass),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("gamma_31", self.gamma_31),
            ("gamma_32", self.gamma_32),
            ("dephasing", self.dephasing),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        let sum = self.gamma_31 + self.gamma_32;
        if ((sum - self.gamma) / self.gamma).abs() > 1e-12 {
            return Err(Error::invalid(
                "gamma_31",
                format!("gamma_31 + gamma_32 = {sum} differs from gamma = {}", self.gamma),
            ));
        }
        Ok(())
    }

    /// Vacuum wavenumber `2 pi / lambda`, 1/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// `N |d|^2 / (eps0 hbar)`, rad/s.
    pub fn coupling_prefactor(&self) -> f64 {
        self.density * self.dipole * self.dipole / (EPSILON_0 * HBAR)
    }

    /// Decay and dephasing rates in units of `gamma`.
    pub fn normalized_rates(&self) -> (f64, f64, f64) {
        (
            self.gamma_31 / self.gamma,
            self.gamma_32 / self.gamma,
            self.dephasing / self.gamma,
        )
    }
}

/// Dimensionless scalar linear susceptibility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Susceptibility(pub Complex64);

impl Susceptibility {
    pub fn re(&self) -> f64 {
        self.0.re
    }
    pub fn im(&self) -> f64 {
        self.0.im
    }
}

/// `chi = N|d|^2/(eps0 hbar) * rho_eg / Omega`, with `rabi` in rad/s.
pub fn chi_from_coherence(rho_eg: Complex64, rabi: Complex64, spec: &AtomSpec) -> Result<Susceptibility> {
    if rabi.norm() == 0.0 {
        return Err(Error::ZeroDrive);
    }
    Ok(Susceptibility(rho_eg / rabi * spec.coupling_prefactor()))
}

/// Steady-state two-level susceptibility including saturation.
pub fn two_level_chi(rabi: f64, detuning: f64, spec: &AtomSpec) -> Susceptibility {
    let g = spec.gamma;
    let num = Complex64::new(2.0 * detuning, -g);
    let den = 4.0 * detuning * detuning + g * g + 2.0 * rabi * rabi;
    Susceptibility(-num / den * spec.coupling_prefactor())
}

/// Weak-field limit of [`two_level_chi`].
pub fn weak_chi(detuning: f64, spec: &AtomSpec) -> Susceptibility {
    Susceptibility(-spec.coupling_prefactor() / Complex64::new(2.0 * detuning, spec.gamma))
}

/// Spatially uniform propagation through a length `z` of medium with
/// refractive index `1 + chi/2`.
pub fn beer_lambert(rabi_in: Complex64, chi: Susceptibility, k: f64, z: f64) -> Complex64 {
    if chi.0.norm() > 0.5 {
        log::warn!(
            "|chi| = {:.3} > 0.5: n = 1 + chi/2 expansion is inaccurate",
            chi.0.norm()
        );
    }
    let phase = Complex64::new(0.0, (1.0 + 0.5 * chi.re()) * k * z).exp();
    rabi_in * phase * (-0.5 * chi.im() * k * z).exp()
}

/// Resonant optical depth `N |d|^2 k L / (eps0 hbar Gamma)`.
pub fn resonant_od(spec: &AtomSpec) -> f64 {
    spec.coupling_prefactor() * spec.wavenumber() * spec.length / spec.gamma
}

/// Returns `spec` with the dipole moment chosen so that
/// [`resonant_od`] equals `target_od`.
pub fn calibrate_od(spec: &AtomSpec, target_od: f64) -> Result<AtomSpec> {
    if !(target_od > 0.0 && target_od.is_finite()) {
        return Err(Error::invalid(
            "target_od",
            format!("must be positive, got {target_od}"),
        ));
    }
    if !(spec.density > 0.0 && spec.length > 0.0 && spec.wavelength > 0.0 && spec.gamma > 0.0) {
        return Err(Error::invalid(
            "spec",
            "density, length, wavelength and gamma must be positive",
        ));
    }
    let d2 = target_od * EPSILON_0 * HBAR * spec.gamma / (spec.density * spec.wavenumber() * spec.length);
    Ok(AtomSpec {
        dipole: d2.sqrt(),
        ..*spec
    })
}

/// Transmission and gain of the uniform pipeline on a retarded-time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ObeTrace {
    /// Retarded time, 1/Gamma.
    pub tau: Vec<f64>,
    pub chi: Vec<Susceptibility>,
    /// `|Omega(L)/Omega(0)|^2`
    pub transmission: Vec<f64>,
    /// `|Omega(L)/Omega(0)|`
    pub gain: Vec<f64>,
}

/// Applies Beer-Lambert over the full medium to each sampled coherence.
/// `coherences` are signal coherences `rho_eg` (possibly velocity-averaged)
/// and `inputs` the input Rabi frequencies in Gamma units.
pub fn trace_from_coherences(
    tau: &[f64],
    coherences: &[Complex64],
    inputs: &[Complex64],
    spec: &AtomSpec,
) -> Result<ObeTrace> {
    let k = spec.wavenumber();
    let n = tau.len();
    let mut chi = Vec::with_capacity(n);
    let mut transmission = Vec::with_capacity(n);
    let mut gain = Vec::with_capacity(n);
    for i in 0..n {
        let input = inputs[i] * spec.gamma;
        let c = chi_from_coherence(coherences[i], input, spec).map_err(|_| Error::UndefinedGain { tau: tau[i] })?;
        let out = beer_lambert(input, c, k, spec.length);
        let g = out.norm() / input.norm();
        chi.push(c);
        gain.push(g);
        transmission.push(g * g);
    }
    Ok(ObeTrace {
        tau: tau.to_vec(),
        chi,
        transmission,
        gain,
    })
}

/// Single-atom transient scaled over the medium: evolve the master
/// equation, form `chi(tau)` and propagate each sample with Beer-Lambert.
pub fn obe_transmission_trace<const D: usize, M: AtomModel<D>>(
    model: &M,
    drive: &DriveProtocol,
    spec: &AtomSpec,
    tau: &[f64],
    cfg: &IntegratorConfig,
) -> Result<ObeTrace> {
    let rho0 = drive.initial_state(model, drive.detunings)?;
    let traj = evolve(&rho0, &DrivenAtom::new(model, drive), model.lindblad(), tau, cfg)?;
    let coherences: Vec<Complex64> = traj.states.iter().map(|r| model.signal_coherence(r)).collect();
    let inputs: Vec<Complex64> = tau.iter().map(|&t| drive.signal.at(t)).collect();
    trace_from_coherences(tau, &coherences, &inputs, spec)
}

/// Steady-state transmission of the uniform pipeline under the
/// switched-on fields.
pub fn obe_steady_transmission<const D: usize, M: AtomModel<D>>(
    model: &M,
    drive: &DriveProtocol,
    spec: &AtomSpec,
) -> Result<f64> {
    let fields = crate::atomic::Fields::new(drive.signal.amplitude(), drive.control.amplitude());
    let rho = crate::atomic::steady_state(&model.hamiltonian(fields, drive.detunings), model.lindblad())?;
    let input = fields.signal * spec.gamma;
    let chi = chi_from_coherence(model.signal_coherence(&rho), input, spec)?;
    let out = beer_lambert(input, chi, spec.wavenumber(), spec.length);
    Ok((out.norm() / input.norm()).powi(2))
}
