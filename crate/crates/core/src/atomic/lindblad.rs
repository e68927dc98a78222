use num_complex::Complex64;

use super::hamiltonian::{lambda, two_level, Hamiltonian};
use super::state::{dagger, transition, CMatrix, DensityMatrix, I};
use crate::error::{ensure_finite, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct JumpOperator<const D: usize> {
    pub operator: CMatrix<D>,
    pub rate: f64,
}

/// Dissipative channels of the master equation, each in the form
/// `rate * (A rho A^dag - 1/2 {A^dag A, rho})`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladSet<const D: usize> {
    jumps: Vec<JumpOperator<D>>,
    // sum_k rate_k A_k^dag A_k
    damping: CMatrix<D>,
}

impl<const D: usize> LindbladSet<D> {
    pub fn new(jumps: Vec<JumpOperator<D>>) -> Result<Self> {
        let mut damping = CMatrix::<D>::zeros();
        for j in &jumps {
            ensure_finite("rate", j.rate)?;
            if j.rate < 0.0 {
                return Err(Error::invalid("rate", format!("must be >= 0, got {}", j.rate)));
            }
            damping += dagger(&j.operator) * j.operator * Complex64::from(j.rate);
        }
        Ok(LindbladSet { jumps, damping })
    }

    pub fn empty() -> Self {
        LindbladSet {
            jumps: Vec::new(),
            damping: CMatrix::zeros(),
        }
    }

    pub fn jumps(&self) -> &[JumpOperator<D>] {
        &self.jumps
    }

    pub fn max_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).fold(0.0, f64::max)
    }
}

/// Spontaneous emission `|2> -> |1>` at rate `gamma`.
pub fn two_level_decay(gamma: f64) -> Result<LindbladSet<2>> {
    LindbladSet::new(vec![JumpOperator {
        operator: transition(two_level::GROUND, two_level::EXCITED),
        rate: gamma,
    }])
}

/// Excited-state decay into both ground states plus pure dephasing of the
/// ground-state coherence. The dephasing channel is `|2><2|` with rate
/// `2 * dephasing`, so `rho_12` decays at `dephasing`.
pub fn lambda_decay(gamma_31: f64, gamma_32: f64, dephasing: f64) -> Result<LindbladSet<3>> {
    use lambda::*;
    LindbladSet::new(vec![
        JumpOperator {
            operator: transition(GROUND_1, EXCITED),
            rate: gamma_31,
        },
        JumpOperator {
            operator: transition(GROUND_2, EXCITED),
            rate: gamma_32,
        },
        JumpOperator {
            operator: transition(GROUND_2, GROUND_2),
            rate: 2.0 * dephasing,
        },
    ])
}

/// `-i [H, rho] + sum_k D[A_k] rho` on a raw matrix.
pub(crate) fn rhs_matrix<const D: usize>(rho: &CMatrix<D>, h: &CMatrix<D>, lindblad: &LindbladSet<D>) -> CMatrix<D> {
    // Effective non-Hermitian generator K = H - (i/2) sum r A^dag A:
    // -i (K rho - rho K^dag) + sum r A rho A^dag
    let k = h - lindblad.damping * (I * 0.5);
    let mut out = (k * rho - rho * k.adjoint()) * (-I);
    for j in &lindblad.jumps {
        if j.rate != 0.0 {
            out += j.operator * rho * dagger(&j.operator) * Complex64::from(j.rate);
        }
    }
    out
}

/// Right-hand side of the master equation, `d rho / dt`.
pub fn lindblad_rhs<const D: usize>(
    rho: &DensityMatrix<D>,
    h: &Hamiltonian<D>,
    lindblad: &LindbladSet<D>,
) -> CMatrix<D> {
    rhs_matrix(rho.matrix(), h.matrix(), lindblad)
}
