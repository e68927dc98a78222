use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::hamiltonian::Hamiltonian;
use super::lindblad::{rhs_matrix, LindbladSet};
use super::state::{CMatrix, DensityMatrix};
use crate::error::{Error, Result};

/// Vectorized Liouvillian (row-major `vec(rho)`), `D^2 x D^2`.
pub fn liouvillian<const D: usize>(h: &Hamiltonian<D>, lindblad: &LindbladSet<D>) -> DMatrix<Complex64> {
    let n = D * D;
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    for col in 0..n {
        let mut basis = CMatrix::<D>::zeros();
        basis[(col / D, col % D)] = Complex64::from(1.0);
        let image = rhs_matrix(&basis, h.matrix(), lindblad);
        for row in 0..n {
            l[(row, col)] = image[(row / D, row % D)];
        }
    }
    l
}

/// Stationary state of the master equation. One (redundant) row of the
/// Liouvillian is replaced by the trace condition and the system is solved
/// by dense LU.
pub fn steady_state<const D: usize>(h: &Hamiltonian<D>, lindblad: &LindbladSet<D>) -> Result<DensityMatrix<D>> {
    let n = D * D;
    let l = liouvillian(h, lindblad);
    let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::NoUniqueSteadyState("Liouvillian vanishes".into()));
    }

    let sv = l.clone().singular_values();
    let tol = 1e-13 * scale * n as f64;
    let null_dim = sv.iter().filter(|&&s| s <= tol).count();
    if null_dim > 1 {
        return Err(Error::NoUniqueSteadyState(format!(
            "stationary subspace has dimension {null_dim}"
        )));
    }

    let mut a = l;
    let mut b = DVector::<Complex64>::zeros(n);
    for col in 0..n {
        a[(0, col)] = Complex64::from(0.0);
    }
    for i in 0..D {
        a[(0, i * D + i)] = Complex64::from(1.0);
    }
    b[0] = Complex64::from(1.0);
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NoUniqueSteadyState("singular constrained Liouvillian".into()))?;

    let m = CMatrix::<D>::from_fn(|i, j| x[i * D + j]);
    let rho = DensityMatrix::from_matrix_unchecked(m);
    let residual = rhs_matrix(rho.matrix(), h.matrix(), lindblad)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if residual > 1e-10 * scale.max(1.0) {
        return Err(Error::NoUniqueSteadyState(format!("residual {residual:e} after solve")));
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::hamiltonian::{build_lambda_hamiltonian, build_two_level_hamiltonian, lambda};
    use crate::atomic::integrate::{evolve, IntegratorConfig};
    use crate::atomic::lindblad::{lambda_decay, two_level_decay};

    #[test]
    fn undriven_two_level_relaxes_to_ground() {
        let l = two_level_decay(1.0).unwrap();
        for delta in [-3.0, 0.0, 2.5] {
            let h = build_two_level_hamiltonian(delta, Complex64::from(0.0)).unwrap();
            let rho = steady_state(&h, &l).unwrap();
            assert!(rho.max_abs_diff(&DensityMatrix::level(0)) < 1e-14);
        }
    }

    #[test]
    fn saturated_two_level_population() {
        // rho_22 = (Omega^2 / 4) / (Delta^2 + Gamma^2 / 4 + Omega^2 / 2)
        let l = two_level_decay(1.0).unwrap();
        let (omega, delta) = (2.0, 0.0);
        let h = build_two_level_hamiltonian(delta, Complex64::from(omega)).unwrap();
        let rho = steady_state(&h, &l).unwrap();
        let expected = omega * omega / (4.0 * delta * delta + 1.0 + 2.0 * omega * omega);
        assert!((rho.population(1) - expected).abs() < 1e-12);
        assert!((expected - 4.0 / 9.0).abs() < 1e-15);

        let long = evolve(&DensityMatrix::level(0), &h, &l, &[50.0], &IntegratorConfig::default()).unwrap();
        assert!(long.final_state().max_abs_diff(&rho) < 1e-6);
    }

    #[test]
    fn lambda_dark_state() {
        let l = lambda_decay(0.5, 0.5, 0.0).unwrap();
        for (os, oc) in [(0.1, 1.6), (1.0, 1.0), (3.0, 0.2)] {
            let h = build_lambda_hamiltonian(0.7, 0.7, Complex64::from(os), Complex64::from(oc)).unwrap();
            let rho = steady_state(&h, &l).unwrap();
            assert!(rho.population(lambda::EXCITED).abs() < 1e-10);
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_stationary_subspace_rejected() {
        // no drive, no dephasing: any ground-state mixture is stationary
        let l = lambda_decay(0.5, 0.5, 0.0).unwrap();
        let h = Hamiltonian::<3>::zero();
        assert!(matches!(steady_state(&h, &l), Err(Error::NoUniqueSteadyState(_))));
        assert!(steady_state(&Hamiltonian::<2>::zero(), &LindbladSet::empty()).is_err());
    }
}
