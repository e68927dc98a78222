//! Atom models and drive protocols.

use num_complex::Complex64;

use super::hamiltonian::{lambda, lambda_unchecked, two_level, two_level_unchecked, Hamiltonian};
use super::integrate::HamiltonianSource;
use super::lindblad::{lambda_decay, two_level_decay, LindbladSet};
use super::state::DensityMatrix;
use super::steady::steady_state;
use crate::error::{Error, Result};

/// Complex Rabi frequencies of the two drives (Gamma units).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Fields {
    pub signal: Complex64,
    pub control: Complex64,
}

impl Fields {
    pub fn new(signal: Complex64, control: Complex64) -> Self {
        Fields { signal, control }
    }

    /// `self + (other - self) * frac`
    pub fn lerp(&self, other: &Fields, frac: f64) -> Fields {
        Fields {
            signal: self.signal + (other.signal - self.signal) * frac,
            control: self.control + (other.control - self.control) * frac,
        }
    }
}

/// One-photon detunings (Gamma units).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Detunings {
    pub signal: f64,
    pub control: f64,
}

impl Detunings {
    pub fn two_photon(&self) -> f64 {
        self.signal - self.control
    }
}

/// Level structure plus dissipation. Two-level atoms ignore the control field.
pub trait AtomModel<const D: usize>: Sync + Send {
    fn hamiltonian(&self, fields: Fields, detunings: Detunings) -> Hamiltonian<D>;
    fn lindblad(&self) -> &LindbladSet<D>;
    /// Coherence radiating into the signal field, `rho_eg`.
    fn signal_coherence(&self, rho: &DensityMatrix<D>) -> Complex64;
    /// Coherence radiating into the control field (zero for two-level atoms).
    fn control_coherence(&self, rho: &DensityMatrix<D>) -> Complex64;
    fn ground_state(&self) -> DensityMatrix<D>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoLevelAtom {
    lindblad: LindbladSet<2>,
}

impl TwoLevelAtom {
    pub fn new(decay: f64) -> Result<Self> {
        Ok(TwoLevelAtom {
            lindblad: two_level_decay(decay)?,
        })
    }
}

impl AtomModel<2> for TwoLevelAtom {
    fn hamiltonian(&self, fields: Fields, detunings: Detunings) -> Hamiltonian<2> {
        two_level_unchecked(detunings.signal, fields.signal)
    }

    fn lindblad(&self) -> &LindbladSet<2> {
        &self.lindblad
    }

    fn signal_coherence(&self, rho: &DensityMatrix<2>) -> Complex64 {
        rho.entry(two_level::EXCITED, two_level::GROUND)
    }

    fn control_coherence(&self, _rho: &DensityMatrix<2>) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn ground_state(&self) -> DensityMatrix<2> {
        DensityMatrix::level(two_level::GROUND)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaAtom {
    lindblad: LindbladSet<3>,
}

impl LambdaAtom {
    pub fn new(decay_31: f64, decay_32: f64, dephasing: f64) -> Result<Self> {
        Ok(LambdaAtom {
            lindblad: lambda_decay(decay_31, decay_32, dephasing)?,
        })
    }
}

impl AtomModel<3> for LambdaAtom {
    fn hamiltonian(&self, fields: Fields, detunings: Detunings) -> Hamiltonian<3> {
        lambda_unchecked(detunings.signal, detunings.control, fields.signal, fields.control)
    }

    fn lindblad(&self) -> &LindbladSet<3> {
        &self.lindblad
    }

    fn signal_coherence(&self, rho: &DensityMatrix<3>) -> Complex64 {
        rho.entry(lambda::EXCITED, lambda::GROUND_1)
    }

    fn control_coherence(&self, rho: &DensityMatrix<3>) -> Complex64 {
        rho.entry(lambda::EXCITED, lambda::GROUND_2)
    }

    fn ground_state(&self) -> DensityMatrix<3> {
        DensityMatrix::level(lambda::GROUND_1)
    }
}

/// Time envelope of a drive's Rabi frequency (Gamma units, time in 1/Gamma).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Envelope {
    Off,
    /// On for all times, including before `t = 0`.
    Constant(Complex64),
    /// Switched on abruptly at `on`.
    Step {
        amplitude: Complex64,
        on: f64,
    },
    /// Linear rise from zero at `start` to `amplitude` at `end`.
    Ramp {
        amplitude: Complex64,
        start: f64,
        end: f64,
    },
}

impl Envelope {
    pub fn at(&self, t: f64) -> Complex64 {
        match *self {
            Envelope::Off => Complex64::new(0.0, 0.0),
            Envelope::Constant(a) => a,
            Envelope::Step { amplitude, on } => {
                if t >= on {
                    amplitude
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Envelope::Ramp { amplitude, start, end } => {
                if t <= start {
                    Complex64::new(0.0, 0.0)
                } else if t >= end {
                    amplitude
                } else {
                    amplitude * ((t - start) / (end - start))
                }
            }
        }
    }

    /// Value long before any switching event.
    pub fn prior(&self) -> Complex64 {
        match *self {
            Envelope::Constant(a) => a,
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Asymptotic (switched-on) amplitude.
    pub fn amplitude(&self) -> Complex64 {
        match *self {
            Envelope::Off => Complex64::new(0.0, 0.0),
            Envelope::Constant(a) => a,
            Envelope::Step { amplitude, .. } | Envelope::Ramp { amplitude, .. } => amplitude,
        }
    }

    pub fn with_amplitude(self, amplitude: Complex64) -> Envelope {
        match self {
            Envelope::Off => Envelope::Step { amplitude, on: 0.0 },
            Envelope::Constant(_) => Envelope::Constant(amplitude),
            Envelope::Step { on, .. } => Envelope::Step { amplitude, on },
            Envelope::Ramp { start, end, .. } => Envelope::Ramp { amplitude, start, end },
        }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        let a = self.amplitude();
        if !(a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::invalid(name, "non-finite amplitude"));
        }
        match *self {
            Envelope::Step { on, .. } if !on.is_finite() => Err(Error::invalid(name, "non-finite switch time")),
            Envelope::Ramp { start, end, .. } if !(start.is_finite() && end.is_finite() && end > start) => {
                Err(Error::invalid(name, "ramp needs finite start < end"))
            }
            _ => Ok(()),
        }
    }
}

/// Atomic state at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// All population in the signal ground state `|1>`.
    Ground,
    /// Stationary state under the fields present before switching
    /// ([`Envelope::prior`]); e.g. a constant signal alone pumps a Lambda
    /// atom into `|2>`.
    Prepared,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveProtocol {
    pub signal: Envelope,
    pub control: Envelope,
    pub detunings: Detunings,
    pub initial: InitialState,
}

impl DriveProtocol {
    /// Both fields switched on as a step at `t = 0`, atoms in `|1>`.
    pub fn step(signal: f64, control: f64, detunings: Detunings) -> Self {
        DriveProtocol {
            signal: Envelope::Step {
                amplitude: Complex64::from(signal),
                on: 0.0,
            },
            control: if control == 0.0 {
                Envelope::Off
            } else {
                Envelope::Step {
                    amplitude: Complex64::from(control),
                    on: 0.0,
                }
            },
            detunings,
            initial: InitialState::Ground,
        }
    }

    pub fn fields_at(&self, t: f64) -> Fields {
        Fields::new(self.signal.at(t), self.control.at(t))
    }

    pub fn prior_fields(&self) -> Fields {
        Fields::new(self.signal.prior(), self.control.prior())
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate("signal")?;
        self.control.validate("control")?;
        if !(self.detunings.signal.is_finite() && self.detunings.control.is_finite()) {
            return Err(Error::invalid("detuning", "must be finite"));
        }
        Ok(())
    }

    /// Initial state for an atom seeing `detunings` (which may be
    /// Doppler-shifted from the protocol's own).
    pub fn initial_state<const D: usize, M: AtomModel<D>>(
        &self,
        model: &M,
        detunings: Detunings,
    ) -> Result<DensityMatrix<D>> {
        match self.initial {
            InitialState::Ground => Ok(model.ground_state()),
            InitialState::Prepared => {
                steady_state(&model.hamiltonian(self.prior_fields(), detunings), model.lindblad())
            }
        }
    }
}

/// An atom driven by a protocol, with its own (possibly shifted) detunings.
pub struct DrivenAtom<'a, M> {
    pub model: &'a M,
    pub drive: &'a DriveProtocol,
    pub detunings: Detunings,
}

impl<'a, M> DrivenAtom<'a, M> {
    pub fn new(model: &'a M, drive: &'a DriveProtocol) -> Self {
        DrivenAtom {
            model,
            drive,
            detunings: drive.detunings,
        }
    }
}

impl<const D: usize, M: AtomModel<D>> HamiltonianSource<D> for DrivenAtom<'_, M> {
    fn hamiltonian(&self, t: f64) -> Hamiltonian<D> {
        self.model.hamiltonian(self.drive.fields_at(t), self.detunings)
    }
}
