//! Maxwell-Bloch propagation in the co-moving frame `(zeta = z, tau = t - z/c)`.
//!
//! The medium is a line of `n_zeta + 1` atomic nodes. Each retarded-time
//! step advances every node's density matrix under its local fields, then
//! rebuilds the fields along `zeta` from `d Omega / d zeta = i eta rho_eg`
//! with the trapezoidal rule. The field update is done twice per step
//! (predictor from the previous coherences, one corrector pass).

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomic::integrate::rk4_step;
use crate::atomic::{AtomModel, DensityMatrix, Detunings, DriveProtocol, Fields};
use crate::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::response::AtomSpec;

/// Propagation coupling `eta = omega N |d|^2 / (2 eps0 hbar c)` in rad/(s m).
pub fn coupling_constant(spec: &AtomSpec) -> f64 {
    let omega = spec.wavenumber() * SPEED_OF_LIGHT;
    omega * spec.density * spec.dipole * spec.dipole / (2.0 * EPSILON_0 * HBAR * SPEED_OF_LIGHT)
}

const STABILITY_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationGrid {
    /// Number of spatial intervals; the grid has `n_zeta + 1` nodes.
    pub n_zeta: usize,
    /// Retarded-time step, 1/Gamma.
    pub dtau: f64,
    /// End of the retarded-time window, 1/Gamma.
    pub tau_max: f64,
}

impl Default for PropagationGrid {
    fn default() -> Self {
        PropagationGrid {
            n_zeta: 200,
            dtau: 0.005,
            tau_max: 20.0,
        }
    }
}

impl PropagationGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_zeta < 2 {
            return Err(Error::invalid("n_zeta", format!("must be >= 2, got {}", self.n_zeta)));
        }
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(Error::invalid("dtau", "must be positive"));
        }
        if !(self.tau_max >= self.dtau && self.tau_max.is_finite()) {
            return Err(Error::invalid("tau_max", "must be at least one step"));
        }
        Ok(())
    }

    pub fn n_tau(&self) -> usize {
        (self.tau_max / self.dtau).round() as usize
    }

    pub fn tau(&self) -> Vec<f64> {
        (0..=self.n_tau()).map(|j| j as f64 * self.dtau).collect()
    }

    /// Twice the spatial resolution and half the time step.
    pub fn refined(&self) -> Self {
        PropagationGrid {
            n_zeta: 2 * self.n_zeta,
            dtau: 0.5 * self.dtau,
            tau_max: self.tau_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MbeOptions {
    /// Keep the control field at its input value everywhere.
    pub control_frozen: bool,
    /// `eta_control / eta_signal`.
    pub control_coupling_ratio: f64,
    /// Number of `zeta` columns stored in the [`FieldGrid`] (first and last
    /// node always included); `None` stores every node.
    pub recorded_columns: Option<usize>,
    pub execution: Execution,
}

impl Default for MbeOptions {
    fn default() -> Self {
        MbeOptions {
            control_frozen: false,
            control_coupling_ratio: 1.0,
            recorded_columns: Some(21),
            execution: Execution::Parallel,
        }
    }
}

/// Field envelopes on the space-time lattice (Gamma units), indexed
/// `[tau, column]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    /// Positions of the recorded columns, m.
    pub zeta: Vec<f64>,
    /// Retarded times, 1/Gamma.
    pub tau: Vec<f64>,
    pub signal: Array2<Complex64>,
    pub control: Array2<Complex64>,
}

impl FieldGrid {
    pub fn input_signal(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.signal.column(0).into_iter().copied()
    }

    pub fn output_signal(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.signal.column(self.zeta.len() - 1).into_iter().copied()
    }
}

/// Member of a spatial node: a velocity class with its weight and detunings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Member {
    pub weight: f64,
    pub detunings: Detunings,
}

#[derive(Clone, Debug)]
pub struct MbeRun<const D: usize> {
    pub fields: FieldGrid,
    /// Signal and control along the full `zeta` grid at `tau_max`.
    pub final_signal: Vec<Complex64>,
    pub final_control: Vec<Complex64>,
    /// Per node, per member density matrices at `tau_max`.
    pub final_states: Vec<Vec<DensityMatrix<D>>>,
    /// Largest stability monitor value seen.
    pub max_monitor: f64,
}

struct Node<const D: usize> {
    states: Vec<DensityMatrix<D>>,
    scratch: Vec<DensityMatrix<D>>,
}

fn advance_member<const D: usize, M: AtomModel<D>>(
    model: &M,
    rho: &DensityMatrix<D>,
    detunings: Detunings,
    from: Fields,
    to: Fields,
    dtau: f64,
) -> DensityMatrix<D> {
    let h0 = model.hamiltonian(from, detunings);
    let h1 = model.hamiltonian(to, detunings);
    let scale = h0.norm_inf().max(h1.norm_inf()).max(model.lindblad().max_rate());
    // RK4 is stable well inside |h| * dt < 2.8
    let n_sub = ((scale * dtau / 0.5).ceil() as usize).max(1);
    let h = dtau / n_sub as f64;
    let mut m = *rho.matrix();
    for s in 0..n_sub {
        let f = |x: f64| model.hamiltonian(from.lerp(&to, x), detunings);
        let a = s as f64 / n_sub as f64;
        let b = (s as f64 + 0.5) / n_sub as f64;
        let c = (s + 1) as f64 / n_sub as f64;
        m = rk4_step(&m, h, f(a).matrix(), f(b).matrix(), f(c).matrix(), model.lindblad());
    }
    DensityMatrix::from_matrix_unchecked(m)
}

struct FieldSolver {
    dzeta: f64,
    eta_signal: f64,
    eta_control: f64,
    control_frozen: bool,
}

impl FieldSolver {
    /// Trapezoidal integration of both fields from the `zeta = 0` boundary.
    fn solve(&self, boundary: Fields, sources: &[(Complex64, Complex64)], out: &mut [Fields]) {
        let i = Complex64::new(0.0, 1.0);
        out[0] = boundary;
        let half = 0.5 * self.dzeta;
        for n in 1..out.len() {
            let (s0, c0) = sources[n - 1];
            let (s1, c1) = sources[n];
            let signal = out[n - 1].signal + i * self.eta_signal * half * (s0 + s1);
            let control = if self.control_frozen {
                boundary.control
            } else {
                out[n - 1].control + i * self.eta_control * half * (c0 + c1)
            };
            out[n] = Fields::new(signal, control);
        }
    }
}

fn sources<const D: usize, M: AtomModel<D>>(
    model: &M,
    members: &[Member],
    nodes: &[Node<D>],
    use_scratch: bool,
    out: &mut [(Complex64, Complex64)],
) {
    for (slot, node) in out.iter_mut().zip(nodes) {
        let states = if use_scratch { &node.scratch } else { &node.states };
        let mut s = Complex64::new(0.0, 0.0);
        let mut c = Complex64::new(0.0, 0.0);
        for (m, rho) in members.iter().zip(states) {
            s += model.signal_coherence(rho) * m.weight;
            c += model.control_coherence(rho) * m.weight;
        }
        *slot = (s, c);
    }
}

fn column_indices(n_nodes: usize, requested: Option<usize>) -> Vec<usize> {
    match requested {
        Some(k) if k >= 2 && k < n_nodes => {
            let mut idx: Vec<usize> = (0..k)
                .map(|c| ((c as f64) * (n_nodes - 1) as f64 / (k - 1) as f64).round() as usize)
                .collect();
            idx.dedup();
            idx
        }
        _ => (0..n_nodes).collect(),
    }
}

/// Maxwell-Bloch propagation with each node holding the weighted
/// `members` (a single member of weight one for cold atoms).
pub fn propagate_ensemble<const D: usize, M: AtomModel<D>>(
    model: &M,
    drive: &DriveProtocol,
    spec: &AtomSpec,
    members: &[Member],
    grid: &PropagationGrid,
    options: &MbeOptions,
) -> Result<MbeRun<D>> {
    grid.validate()?;
    drive.validate()?;
    if members.is_empty() {
        return Err(Error::invalid("members", "at least one member per node required"));
    }
    let n_nodes = grid.n_zeta + 1;
    let dzeta = spec.length / grid.n_zeta as f64;
    let eta = coupling_constant(spec) / spec.gamma;
    let solver = FieldSolver {
        dzeta,
        eta_signal: eta,
        eta_control: eta * options.control_coupling_ratio,
        control_frozen: options.control_frozen,
    };

    let initial: Vec<DensityMatrix<D>> = members
        .iter()
        .map(|m| drive.initial_state(model, m.detunings))
        .collect::<Result<_>>()?;
    let mut nodes: Vec<Node<D>> = (0..n_nodes)
        .map(|_| Node {
            states: initial.clone(),
            scratch: initial.clone(),
        })
        .collect();

    let columns = column_indices(n_nodes, options.recorded_columns);
    let tau = grid.tau();
    let n_tau = tau.len();
    let mut signal_rec = Array2::<Complex64>::zeros((n_tau, columns.len()));
    let mut control_rec = Array2::<Complex64>::zeros((n_tau, columns.len()));

    let mut src = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); n_nodes];
    let mut fields = vec![Fields::default(); n_nodes];
    let mut next = vec![Fields::default(); n_nodes];
    sources(model, members, &nodes, false, &mut src);
    solver.solve(drive.fields_at(0.0), &src, &mut fields);

    let record = |j: usize, f: &[Fields], s: &mut Array2<Complex64>, c: &mut Array2<Complex64>| {
        for (col, &node) in columns.iter().enumerate() {
            s[(j, col)] = f[node].signal;
            c[(j, col)] = f[node].control;
        }
    };
    record(0, &fields, &mut signal_rec, &mut control_rec);

    let mut max_monitor: f64 = 0.0;
    let input_scale = drive.signal.amplitude().norm();
    for j in 0..grid.n_tau() {
        let boundary = drive.fields_at(tau[j + 1]);
        // predictor from the current coherences
        solver.solve(boundary, &src, &mut next);
        // two passes: predictor fields, then one corrector
        for _ in 0..2 {
            let (fields_ref, next_ref) = (&fields, &next);
            par::for_each_mut(options.execution, &mut nodes, |n, node| {
                for (k, m) in members.iter().enumerate() {
                    node.scratch[k] = advance_member(
                        model,
                        &node.states[k],
                        m.detunings,
                        fields_ref[n],
                        next_ref[n],
                        grid.dtau,
                    );
                }
            });
            sources(model, members, &nodes, true, &mut src);
            solver.solve(boundary, &src, &mut next);
        }
        for node in nodes.iter_mut() {
            std::mem::swap(&mut node.states, &mut node.scratch);
        }
        std::mem::swap(&mut fields, &mut next);

        // slice-wide maxima: a pointwise ratio diverges at zeros of the
        // ringing field without any loss of stability
        let source_max = src.iter().map(|(s, _)| s.norm()).fold(0.0, f64::max);
        let field_max = fields.iter().map(|f| f.signal.norm()).fold(0.0, f64::max);
        let monitor = eta * dzeta * source_max / field_max.max(1e-3 * input_scale).max(1e-300);
        max_monitor = max_monitor.max(monitor);
        if monitor > STABILITY_LIMIT {
            let suggested = (grid.n_zeta as f64 * monitor / (0.5 * STABILITY_LIMIT)).ceil() as usize;
            return Err(Error::RefineGrid {
                monitor,
                suggested_n_zeta: suggested,
            });
        }
        if fields
            .iter()
            .any(|f| !(f.signal.re.is_finite() && f.signal.im.is_finite()))
        {
            return Err(Error::Integration {
                time: tau[j + 1],
                reason: "field diverged".into(),
            });
        }
        record(j + 1, &fields, &mut signal_rec, &mut control_rec);
    }

    Ok(MbeRun {
        fields: FieldGrid {
            zeta: columns.iter().map(|&n| n as f64 * dzeta).collect(),
            tau,
            signal: signal_rec,
            control: control_rec,
        },
        final_signal: fields.iter().map(|f| f.signal).collect(),
        final_control: fields.iter().map(|f| f.control).collect(),
        final_states: nodes.into_iter().map(|n| n.states).collect(),
        max_monitor,
    })
}

/// Cold-atom Maxwell-Bloch propagation.
pub fn propagate<const D: usize, M: AtomModel<D>>(
    model: &M,
    drive: &DriveProtocol,
    spec: &AtomSpec,
    grid: &PropagationGrid,
    options: &MbeOptions,
) -> Result<MbeRun<D>> {
    let member = Member {
        weight: 1.0,
        detunings: drive.detunings,
    };
    propagate_ensemble(model, drive, spec, &[member], grid, options)
}

/// Stationary Maxwell-Bloch profile: integrates
/// `d Omega / d zeta = i eta rho_eg` with every member in its steady state
/// under the local fields (classical RK4, `n_steps` slices). Returns the
/// fields at the `n_steps + 1` nodes.
pub fn steady_propagation<const D: usize, M: AtomModel<D>>(
    model: &M,
    input: Fields,
    spec: &AtomSpec,
    members: &[Member],
    n_steps: usize,
    options: &MbeOptions,
) -> Result<Vec<Fields>> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be positive"));
    }
    if members.is_empty() {
        return Err(Error::invalid("members", "at least one member required"));
    }
    let eta = coupling_constant(spec) / spec.gamma;
    let i = Complex64::new(0.0, 1.0);
    let rate = |f: Fields| -> Result<Fields> {
        let per_member = par::try_map(options.execution, members, |m| {
            let h = model.hamiltonian(f, m.detunings);
            let rho = crate::atomic::steady_state(&h, model.lindblad())?;
            Ok::<_, Error>((
                model.signal_coherence(&rho) * m.weight,
                model.control_coherence(&rho) * m.weight,
            ))
        })?;
        let (s, c) = per_member
            .iter()
            .fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |acc, x| {
                (acc.0 + x.0, acc.1 + x.1)
            });
        let dc = if options.control_frozen {
            Complex64::new(0.0, 0.0)
        } else {
            i * eta * options.control_coupling_ratio * c
        };
        Ok(Fields::new(i * eta * s, dc))
    };
    let h = spec.length / n_steps as f64;
    let axpy = |f: Fields, k: Fields, a: f64| Fields::new(f.signal + k.signal * a, f.control + k.control * a);
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut f = input;
    out.push(f);
    for _ in 0..n_steps {
        let k1 = rate(f)?;
        let k2 = rate(axpy(f, k1, 0.5 * h))?;
        let k3 = rate(axpy(f, k2, 0.5 * h))?;
        let k4 = rate(axpy(f, k3, h))?;
        f = Fields::new(
            f.signal + (k1.signal + 2.0 * k2.signal + 2.0 * k3.signal + k4.signal) * (h / 6.0),
            f.control + (k1.control + 2.0 * k2.control + 2.0 * k3.control + k4.control) * (h / 6.0),
        );
        out.push(f);
    }
    Ok(out)
}

/// `G(tau) = |Omega_s(L, tau)| / |Omega_s(0, tau)|`.
pub fn gain_trace(fields: &FieldGrid) -> Result<Vec<f64>> {
    fields
        .input_signal()
        .zip(fields.output_signal())
        .zip(&fields.tau)
        .map(|((i, o), &t)| {
            if i.norm() == 0.0 {
                Err(Error::UndefinedGain { tau: t })
            } else {
                Ok(o.norm() / i.norm())
            }
        })
        .collect()
}

/// Largest gain after the first retarded-time step.
pub fn peak_gain(fields: &FieldGrid) -> Result<f64> {
    Ok(peak_after_guard(&gain_trace(fields)?))
}

pub(crate) fn peak_after_guard(gain: &[f64]) -> f64 {
    gain.iter().skip(1).copied().fold(f64::NEG_INFINITY, f64::max)
}
