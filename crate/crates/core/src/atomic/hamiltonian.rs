//! Rotating-frame Hamiltonians, in angular-frequency units (H / hbar).
//!
//! Each drive multiplies the raising operator of its transition:
//! the signal term is `-(Omega_s / 2) |e><g|` plus its Hermitian conjugate.
//! With this ordering the excited-ground coherence `rho_eg` is linear in
//! `Omega`, which is the coherence entering the susceptibility and the
//! propagation source term.

use num_complex::Complex64;

use super::state::{transition, CMatrix};
use crate::error::{ensure_finite, Result};

/// Level indices of the two-level atom.
pub mod two_level {
    pub const GROUND: usize = 0;
    pub const EXCITED: usize = 1;
}

/// Level indices of the Lambda atom: two metastable ground states sharing
/// one excited state.
pub mod lambda {
    pub const GROUND_1: usize = 0;
    pub const GROUND_2: usize = 1;
    pub const EXCITED: usize = 2;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamiltonian<const D: usize>(CMatrix<D>);

impl<const D: usize> Hamiltonian<D> {
    pub fn zero() -> Self {
        Hamiltonian(CMatrix::zeros())
    }

    pub fn from_matrix(m: CMatrix<D>) -> Self {
        Hamiltonian(m)
    }

    pub fn matrix(&self) -> &CMatrix<D> {
        &self.0
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.0 - self.0.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    /// Max-row-sum norm, used to bound explicit step sizes.
    pub fn norm_inf(&self) -> f64 {
        (0..D)
            .map(|i| (0..D).map(|j| self.0[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn ensure_finite_complex(name: &'static str, z: Complex64) -> Result<()> {
    ensure_finite(name, z.re)?;
    ensure_finite(name, z.im)
}

/// `H = -[detuning |2><2| + (rabi/2) |2><1| + (rabi*/2) |1><2|]`.
pub fn build_two_level_hamiltonian(detuning: f64, rabi: Complex64) -> Result<Hamiltonian<2>> {
    ensure_finite("detuning", detuning)?;
    ensure_finite_complex("rabi", rabi)?;
    Ok(two_level_unchecked(detuning, rabi))
}

pub(crate) fn two_level_unchecked(detuning: f64, rabi: Complex64) -> Hamiltonian<2> {
    use two_level::*;
    let mut h = transition::<2>(EXCITED, EXCITED) * Complex64::from(detuning);
    h += transition::<2>(EXCITED, GROUND) * (rabi * 0.5);
    h += transition::<2>(GROUND, EXCITED) * (rabi.conj() * 0.5);
    Hamiltonian(-h)
}

/// Lambda Hamiltonian with the two-photon detuning `signal - control` on
/// the second ground state and the signal detuning on the excited state.
pub fn build_lambda_hamiltonian(
    signal_detuning: f64,
    control_detuning: f64,
    signal_rabi: Complex64,
    control_rabi: Complex64,
) -> Result<Hamiltonian<3>> {
    ensure_finite("signal_detuning", signal_detuning)?;
    ensure_finite("control_detuning", control_detuning)?;
    ensure_finite_complex("signal_rabi", signal_rabi)?;
    ensure_finite_complex("control_rabi", control_rabi)?;
    Ok(lambda_unchecked(
        signal_detuning,
        control_detuning,
        signal_rabi,
        control_rabi,
    ))
}

pub(crate) fn lambda_unchecked(
    signal_detuning: f64,
    control_detuning: f64,
    signal_rabi: Complex64,
    control_rabi: Complex64,
) -> Hamiltonian<3> {
    use lambda::*;
    let two_photon = signal_detuning - control_detuning;
    let mut h = transition::<3>(GROUND_2, GROUND_2) * Complex64::from(two_photon);
    h += transition::<3>(EXCITED, EXCITED) * Complex64::from(signal_detuning);
    h += transition::<3>(EXCITED, GROUND_1) * (signal_rabi * 0.5);
    h += transition::<3>(GROUND_1, EXCITED) * (signal_rabi.conj() * 0.5);
    h += transition::<3>(EXCITED, GROUND_2) * (control_rabi * 0.5);
    h += transition::<3>(GROUND_2, EXCITED) * (control_rabi.conj() * 0.5);
    Hamiltonian(-h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    const C0: Complex64 = Complex64::new(0.0, 0.0);

    #[test]
    fn two_level_zero_drive_is_zero() {
        let h = build_two_level_hamiltonian(0.0, C0).unwrap();
        assert_eq!(h, Hamiltonian::zero());
    }

    #[test]
    fn two_level_si_units() {
        let gamma = 2.0 * PI * 5.86e6;
        let h = build_two_level_hamiltonian(gamma, Complex64::from(2.0 * gamma)).unwrap();
        // off-diagonals -Omega/2 = -Gamma, excited diagonal -Delta = -Gamma
        assert!((h.matrix()[(0, 1)].re + gamma).abs() < 1e-6);
        assert!((h.matrix()[(1, 0)].re + gamma).abs() < 1e-6);
        assert!((h.matrix()[(1, 1)].re + gamma).abs() < 1e-6);
        assert_eq!(h.matrix()[(0, 0)], C0);
        assert!(h.is_hermitian(0.0));
    }

    #[test]
    fn two_level_resonant_eigenvalues() {
        let h = build_two_level_hamiltonian(0.0, Complex64::from(1.0)).unwrap();
        assert_eq!(h.matrix()[(0, 1)], Complex64::from(-0.5));
        assert_eq!(h.matrix()[(1, 0)], Complex64::from(-0.5));
        let m = DMatrix::from_fn(2, 2, |i, j| h.matrix()[(i, j)]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 0.5).abs() < 1e-15 && (ev[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lambda_zero_is_zero() {
        let h = build_lambda_hamiltonian(0.0, 0.0, C0, C0).unwrap();
        assert_eq!(h, Hamiltonian::zero());
    }

    #[test]
    fn lambda_two_photon_resonance() {
        let h = build_lambda_hamiltonian(1.7, 1.7, C0, C0).unwrap();
        assert_eq!(h.matrix()[(1, 1)], C0);
        assert_eq!(h.matrix()[(2, 2)], Complex64::from(-1.7));
        assert_eq!(h.matrix()[(0, 0)], C0);
    }

    #[test]
    fn lambda_coupling_magnitudes() {
        let h = build_lambda_hamiltonian(0.0, 0.0, Complex64::from(0.1), Complex64::from(1.6)).unwrap();
        assert!((h.matrix()[(2, 0)].norm() - 0.05).abs() < 1e-15);
        assert!((h.matrix()[(0, 2)].norm() - 0.05).abs() < 1e-15);
        assert!((h.matrix()[(2, 1)].norm() - 0.8).abs() < 1e-15);
        assert!((h.matrix()[(1, 2)].norm() - 0.8).abs() < 1e-15);
        assert!(h.is_hermitian(0.0));
    }

    #[test]
    fn complex_drive_stays_hermitian() {
        let h = build_lambda_hamiltonian(0.3, -1.1, Complex64::new(0.1, 0.2), Complex64::new(-1.0, 0.5)).unwrap();
        assert!(h.is_hermitian(0.0));
    }

    #[test]
    fn non_finite_inputs_rejected() {
        assert!(build_two_level_hamiltonian(f64::NAN, C0).is_err());
        assert!(build_two_level_hamiltonian(0.0, Complex64::new(f64::INFINITY, 0.0)).is_err());
        assert!(build_lambda_hamiltonian(0.0, f64::NAN, C0, C0).is_err());
    }
}
