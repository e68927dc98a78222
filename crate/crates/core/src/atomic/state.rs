use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex `D x D` matrix.
pub type CMatrix<const D: usize> = SMatrix<Complex64, D, D>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn dagger<const D: usize>(m: &CMatrix<D>) -> CMatrix<D> {
    m.adjoint()
}

/// `|row><col|` in a `D`-level basis.
pub fn transition<const D: usize>(row: usize, col: usize) -> CMatrix<D> {
    let mut m = CMatrix::<D>::zeros();
    m[(row, col)] = Complex64::new(1.0, 0.0);
    m
}

fn hermitize<const D: usize>(m: &CMatrix<D>) -> CMatrix<D> {
    let mut out = *m;
    for i in 0..D {
        out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..D {
            let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            out[(i, j)] = z;
            out[(j, i)] = z.conj();
        }
    }
    out
}

/// Atomic density matrix. Hermitian by construction: every constructor
/// mirrors the upper triangle onto the lower one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix<const D: usize>(CMatrix<D>);

impl<const D: usize> DensityMatrix<D> {
    /// Pure population in a single level (0-based).
    pub fn level(index: usize) -> Self {
        assert!(index < D, "level {index} out of range for dimension {D}");
        DensityMatrix(transition(index, index))
    }

    /// Wraps a matrix, symmetrizing it. Fails if the input is far from
    /// Hermitian or its trace is not 1.
    pub fn from_matrix(m: CMatrix<D>) -> Result<Self> {
        let err = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > 1e-8 {
            return Err(Error::invalid(
                "density_matrix",
                format!("not Hermitian (max |rho - rho^dag| = {err:e})"),
            ));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::invalid("density_matrix", format!("trace {tr} != 1")));
        }
        Ok(DensityMatrix(hermitize(&m)))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix<D>) -> Self {
        DensityMatrix(hermitize(&m))
    }

    pub fn matrix(&self) -> &CMatrix<D> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let dynamic = DMatrix::from_fn(D, D, |i, j| self.0[(i, j)]);
        let mut ev: Vec<f64> = dynamic.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Weighted sum of states. Weights are applied in slice order.
    pub fn weighted_sum(terms: &[(f64, DensityMatrix<D>)]) -> Self {
        let mut acc = CMatrix::<D>::zeros();
        for (w, rho) in terms {
            acc += rho.0 * Complex64::new(*w, 0.0);
        }
        DensityMatrix(acc)
    }
}
