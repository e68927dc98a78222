use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::Hamiltonian;
use super::lindblad::{rhs_matrix, LindbladSet};
use super::state::{CMatrix, DensityMatrix};
use crate::error::{Error, Result};

/// Time-dependent Hamiltonian, `t` in units of 1/Gamma.
pub trait HamiltonianSource<const D: usize>: Sync {
    fn hamiltonian(&self, t: f64) -> Hamiltonian<D>;
}

impl<const D: usize> HamiltonianSource<D> for Hamiltonian<D> {
    fn hamiltonian(&self, _t: f64) -> Hamiltonian<D> {
        *self
    }
}

/// Adapts a closure into a [`HamiltonianSource`].
pub struct FnSource<F>(pub F);

impl<const D: usize, F> HamiltonianSource<D> for FnSource<F>
where
    F: Fn(f64) -> Hamiltonian<D> + Sync,
{
    fn hamiltonian(&self, t: f64) -> Hamiltonian<D> {
        (self.0)(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with step `max_step`.
    Rk4,
    /// Dormand-Prince 5(4) with embedded error control.
    DormandPrince,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper step bound (the fixed step for RK4), in 1/Gamma.
    pub max_step: f64,
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::DormandPrince,
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_step: 0.1,
            initial_step: 1e-3,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            max_step: step,
            initial_step: step,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("max_step", self.max_step),
            ("initial_step", self.initial_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const D: usize> {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix<D>>,
}

impl<const D: usize> Trajectory<D> {
    pub fn final_state(&self) -> &DensityMatrix<D> {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn element(&self, row: usize, col: usize) -> Vec<Complex64> {
        self.states.iter().map(|r| r.entry(row, col)).collect()
    }
}

/// One classical RK4 step with the Hamiltonian sampled at `t`, `t + h/2`
/// and `t + h`.
pub(crate) fn rk4_step<const D: usize>(
    rho: &CMatrix<D>,
    h: f64,
    h_start: &CMatrix<D>,
    h_mid: &CMatrix<D>,
    h_end: &CMatrix<D>,
    lindblad: &LindbladSet<D>,
) -> CMatrix<D> {
    let c = |x: f64| Complex64::from(x);
    let k1 = rhs_matrix(rho, h_start, lindblad);
    let k2 = rhs_matrix(&(rho + k1 * c(0.5 * h)), h_mid, lindblad);
    let k3 = rhs_matrix(&(rho + k2 * c(0.5 * h)), h_mid, lindblad);
    let k4 = rhs_matrix(&(rho + k3 * c(h)), h_end, lindblad);
    rho + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0)
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stepper<'a, const D: usize, S: HamiltonianSource<D>> {
    source: &'a S,
    lindblad: &'a LindbladSet<D>,
    cfg: IntegratorConfig,
    h: f64,
    // FSAL derivative at the current point
    k1: Option<CMatrix<D>>,
}

impl<const D: usize, S: HamiltonianSource<D>> Stepper<'_, D, S> {
    fn f(&self, t: f64, rho: &CMatrix<D>) -> CMatrix<D> {
        rhs_matrix(rho, self.source.hamiltonian(t).matrix(), self.lindblad)
    }

    /// Advance `rho` from `t` to `t_end` exactly.
    fn advance(&mut self, t: &mut f64, rho: &mut CMatrix<D>, t_end: f64) -> Result<()> {
        match self.cfg.method {
            Method::Rk4 => {
                while *t < t_end {
                    let h = self.cfg.max_step.min(t_end - *t);
                    let hs = self.source.hamiltonian(*t);
                    let hm = self.source.hamiltonian(*t + 0.5 * h);
                    let he = self.source.hamiltonian(*t + h);
                    let next = rk4_step(rho, h, hs.matrix(), hm.matrix(), he.matrix(), self.lindblad);
                    *rho = *DensityMatrix::from_matrix_unchecked(next).matrix();
                    *t = if t_end - *t <= h { t_end } else { *t + h };
                    check_finite(rho, *t)?;
                }
                Ok(())
            }
            Method::DormandPrince => self.advance_adaptive(t, rho, t_end),
        }
    }

    fn advance_adaptive(&mut self, t: &mut f64, rho: &mut CMatrix<D>, t_end: f64) -> Result<()> {
        let c = |x: f64| Complex64::from(x);
        while *t < t_end {
            let remaining = t_end - *t;
            let hit_end = self.h >= remaining;
            let h = if hit_end { remaining } else { self.h };
            let k1 = match self.k1 {
                Some(k) => k,
                None => self.f(*t, rho),
            };
            let y = *rho;
            let k2 = self.f(*t + h / 5.0, &(y + k1 * c(h * A21)));
            let k3 = self.f(*t + 3.0 * h / 10.0, &(y + (k1 * c(A31) + k2 * c(A32)) * c(h)));
            let k4 = self.f(
                *t + 4.0 * h / 5.0,
                &(y + (k1 * c(A41) + k2 * c(A42) + k3 * c(A43)) * c(h)),
            );
            let k5 = self.f(
                *t + 8.0 * h / 9.0,
                &(y + (k1 * c(A51) + k2 * c(A52) + k3 * c(A53) + k4 * c(A54)) * c(h)),
            );
            let k6 = self.f(
                *t + h,
                &(y + (k1 * c(A61) + k2 * c(A62) + k3 * c(A63) + k4 * c(A64) + k5 * c(A65)) * c(h)),
            );
            let y_new = y + (k1 * c(B1) + k3 * c(B3) + k4 * c(B4) + k5 * c(B5) + k6 * c(B6)) * c(h);
            let k7 = self.f(*t + h, &y_new);
            let err = (k1 * c(E1) + k3 * c(E3) + k4 * c(E4) + k5 * c(E5) + k6 * c(E6) + k7 * c(E7)) * c(h);

            let mut norm: f64 = 0.0;
            for idx in 0..D * D {
                let scale = self.cfg.abs_tol + self.cfg.rel_tol * y[idx].norm().max(y_new[idx].norm());
                norm = norm.max(err[idx].norm() / scale);
            }
            if !norm.is_finite() {
                return Err(Error::Integration {
                    time: *t,
                    reason: "non-finite error estimate".into(),
                });
            }

            if norm <= 1.0 {
                *t = if hit_end { t_end } else { *t + h };
                *rho = *DensityMatrix::from_matrix_unchecked(y_new).matrix();
                self.k1 = Some(if hit_end {
                    // state was re-symmetrized; recompute at the sample point
                    self.f(*t, rho)
                } else {
                    k7
                });
                let factor = if norm == 0.0 {
                    5.0
                } else {
                    (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !hit_end || factor < 1.0 {
                    self.h = (h * factor).min(self.cfg.max_step);
                }
            } else {
                self.h = h * (0.9 * norm.powf(-0.25)).clamp(0.1, 0.9);
                if self.h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::Integration {
                        time: *t,
                        reason: format!("step size underflow (h = {:e})", self.h),
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_finite<const D: usize>(rho: &CMatrix<D>, t: f64) -> Result<()> {
    if rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration {
            time: t,
            reason: "state diverged (reduce the step)".into(),
        })
    }
}

/// Integrates the master equation from `t = 0`, sampling at `times`
/// (non-decreasing, in 1/Gamma).
pub fn evolve<const D: usize, S: HamiltonianSource<D>>(
    rho0: &DensityMatrix<D>,
    source: &S,
    lindblad: &LindbladSet<D>,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D>> {
    cfg.validate()?;
    if times.is_empty() {
        return Err(Error::invalid("times", "at least one sample time required"));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid(
            "times",
            "must be finite, non-negative and non-decreasing",
        ));
    }
    let mut stepper = Stepper {
        source,
        lindblad,
        cfg: *cfg,
        h: cfg.initial_step.min(cfg.max_step),
        k1: None,
    };
    let mut t = 0.0;
    let mut rho = *rho0.matrix();
    let mut states = Vec::with_capacity(times.len());
    for &target in times {
        stepper.advance(&mut t, &mut rho, target)?;
        states.push(DensityMatrix::from_matrix_unchecked(rho));
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}

/// `n + 1` evenly spaced samples on `[0, t_end]`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::hamiltonian::{build_two_level_hamiltonian, two_level};
    use crate::atomic::lindblad::two_level_decay;

    #[test]
    fn undriven_ground_state_is_constant() {
        let l = two_level_decay(1.0).unwrap();
        let rho0 = DensityMatrix::<2>::level(two_level::GROUND);
        for cfg in [IntegratorConfig::default(), IntegratorConfig::rk4(0.01)] {
            let tr = evolve(&rho0, &Hamiltonian::zero(), &l, &uniform_times(10.0, 20), &cfg).unwrap();
            assert!(tr.states.iter().all(|r| r.max_abs_diff(&rho0) == 0.0));
        }
    }

    #[test]
    fn free_decay_matches_exponential() {
        let l = two_level_decay(1.0).unwrap();
        let rho0 = DensityMatrix::<2>::level(two_level::EXCITED);
        let tr = evolve(
            &rho0,
            &Hamiltonian::zero(),
            &l,
            &[0.5, 1.0, 3.0],
            &IntegratorConfig::default(),
        )
        .unwrap();
        for (t, r) in tr.times.iter().zip(&tr.states) {
            assert!((r.population(1) - (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_density_does_not_change_final_state() {
        let l = two_level_decay(1.0).unwrap();
        let h = build_two_level_hamiltonian(0.5, Complex64::from(2.0)).unwrap();
        let rho0 = DensityMatrix::<2>::level(0);
        let cfg = IntegratorConfig::default();
        let coarse = evolve(&rho0, &h, &l, &[7.0], &cfg).unwrap();
        let fine = evolve(&rho0, &h, &l, &uniform_times(7.0, 700), &cfg).unwrap();
        assert!(coarse.final_state().max_abs_diff(fine.final_state()) < 1e-8);
    }

    #[test]
    fn invalid_config_and_times_rejected() {
        let l = two_level_decay(1.0).unwrap();
        let rho0 = DensityMatrix::<2>::level(0);
        let mut cfg = IntegratorConfig::default();
        cfg.abs_tol = 0.0;
        assert!(evolve(&rho0, &Hamiltonian::zero(), &l, &[1.0], &cfg).is_err());
        let cfg = IntegratorConfig::default();
        assert!(evolve(&rho0, &Hamiltonian::zero(), &l, &[2.0, 1.0], &cfg).is_err());
        assert!(evolve(&rho0, &Hamiltonian::zero(), &l, &[], &cfg).is_err());
    }

    #[test]
    fn unstable_rk4_reports_time() {
        let l = two_level_decay(1.0).unwrap();
        let h = build_two_level_hamiltonian(1e4, Complex64::from(1.0)).unwrap();
        let rho0 = DensityMatrix::<2>::level(0);
        let err = evolve(&rho0, &h, &l, &[50.0], &IntegratorConfig::rk4(0.1)).unwrap_err();
        assert!(matches!(err, Error::Integration { time, .. } if time > 0.0));
    }
}
