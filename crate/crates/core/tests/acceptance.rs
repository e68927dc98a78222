//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line on stderr.

use std::io::Write;
use std::time::{Duration, Instant};

use eitprop::atomic::{
    evolve, steady_state, AtomModel, Detunings, DriveProtocol, DrivenAtom, Envelope, Fields, InitialState,
    IntegratorConfig, LambdaAtom, TwoLevelAtom,
};
use eitprop::response::{obe_transmission_trace, two_level_chi};
use eitprop::scenarios::{check_convergence, compare, preset, run, run_with, Pipeline, ScenarioConfig};
use eitprop::Execution;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

struct Verdict {
    id: u32,
    name: &'static str,
    checks: Vec<(String, bool)>,
    elapsed: Duration,
    budget: Duration,
}

impl Verdict {
    fn new(id: u32, name: &'static str, budget_s: u64) -> Self {
        Verdict {
            id,
            name,
            checks: Vec::new(),
            elapsed: Duration::ZERO,
            budget: Duration::from_secs(budget_s),
        }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.checks.push((detail, ok));
    }

    fn finish(mut self, start: Instant) {
        self.elapsed = start.elapsed();
        let in_time = self.elapsed <= self.budget;
        let ok = in_time && self.checks.iter().all(|c| c.1);
        let details: Vec<String> = self
            .checks
            .iter()
            .map(|(d, ok)| format!("{}{d}", if *ok { "" } else { "!" }))
            .collect();
        // written to the stderr handle directly so the line survives
        // libtest output capture
        let _ = writeln!(
            std::io::stderr(),
            "{} criterion {} {}: {} [{:.1} s / {} s]",
            if ok { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            details.join("; "),
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        );
        assert!(in_time, "criterion {} exceeded its runtime budget", self.id);
        assert!(ok, "criterion {} failed", self.id);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn obe_only(name: &str) -> ScenarioConfig {
    preset(name).unwrap().with_pipeline(Pipeline::Obe)
}

#[test]
fn criterion_1_beer_lambert_identity() {
    let start = Instant::now();
    let mut v = Verdict::new(1, "Beer-Lambert identity", 3);
    for od in [0.1, 2.0, 5.5] {
        let t0 = Instant::now();
        let cfg = obe_only("fig1a").with_od(od).unwrap();
        assert_eq!(cfg.drive.omega_s, 0.02);
        let r = run(&cfg).unwrap();
        let expected = f64::exp(-od);
        let dev = rel(r.steady_transmission, expected);
        let secs = t0.elapsed().as_secs_f64();
        v.check(
            dev < 1e-3 && secs < 1.0,
            format!(
                "OD {od}: T = {:.6e}, e^-OD = {expected:.6e}, rel {dev:.2e}, {secs:.2} s",
                r.steady_transmission
            ),
        );
    }
    v.finish(start);
}

#[test]
fn criterion_2_closed_form_susceptibility() {
    let start = Instant::now();
    let mut v = Verdict::new(2, "closed-form susceptibility", 10);
    let spec = preset("fig1a").unwrap().atom;
    let model = TwoLevelAtom::new(1.0).unwrap();
    let tau = [0.0, 80.0];
    let mut worst: f64 = 0.0;
    for omega in [0.02, 0.5, 2.0] {
        for i in 0..=40 {
            let delta = -5.0 + 0.25 * i as f64;
            let drive = DriveProtocol::step(
                omega,
                0.0,
                Detunings {
                    signal: delta,
                    control: 0.0,
                },
            );
            let trace = obe_transmission_trace(&model, &drive, &spec, &tau, &IntegratorConfig::default()).unwrap();
            let dynamic = trace.chi.last().unwrap().0;
            let exact = two_level_chi(omega * spec.gamma, delta * spec.gamma, &spec).0;
            worst = worst.max((dynamic - exact).norm() / exact.norm());
        }
    }
    v.check(
        worst < 1e-6,
        format!("max relative deviation {worst:.2e} over 123 points"),
    );
    v.finish(start);
}

#[test]
fn criterion_3_weak_field_obe_mbe_agreement() {
    let start = Instant::now();
    let mut v = Verdict::new(3, "weak-field OBE/MBE agreement", 30);
    let cfg = preset("fig1a").unwrap();
    let obe = run(&cfg.clone().with_pipeline(Pipeline::Obe)).unwrap();
    let mbe = run(&cfg.with_pipeline(Pipeline::Mbe)).unwrap();
    let d = rel(mbe.steady_transmission, obe.steady_transmission);
    v.check(
        d < 0.02,
        format!(
            "OBE {:.6e}, MBE {:.6e}, rel {d:.2e}",
            obe.steady_transmission, mbe.steady_transmission
        ),
    );
    v.finish(start);
}

#[test]
fn criterion_4_saturation_ordering() {
    let start = Instant::now();
    let mut v = Verdict::new(4, "saturation ordering", 60);
    let cfg = preset("fig1b").unwrap();
    let obe = run(&cfg.clone().with_pipeline(Pipeline::Obe)).unwrap();
    let mbe = run(&cfg.with_pipeline(Pipeline::Mbe)).unwrap();
    v.check(
        mbe.steady_transmission < obe.steady_transmission,
        format!(
            "MBE {:.6e} < OBE {:.6e}",
            mbe.steady_transmission, obe.steady_transmission
        ),
    );
    v.finish(start);
}

#[test]
fn criterion_5_fig3_peak_gains() {
    let start = Instant::now();
    let mut v = Verdict::new(5, "fig3b peak gains", 300);
    let cfg = preset("fig3b").unwrap();
    let obe = run(&cfg.clone().with_pipeline(Pipeline::Obe)).unwrap();
    let mbe = run(&cfg.with_pipeline(Pipeline::Mbe)).unwrap();
    v.check(
        rel(obe.peak_gain, 3.56) <= 0.10,
        format!("OBE peak {:.4} vs 3.56 +/- 10%", obe.peak_gain),
    );
    v.check(
        rel(mbe.peak_gain, 1.59) <= 0.10,
        format!("MBE peak {:.4} vs 1.59 +/- 10%", mbe.peak_gain),
    );
    v.finish(start);
}

#[test]
fn criterion_6_od8_collapse() {
    let start = Instant::now();
    let mut v = Verdict::new(6, "OD 8 collapse", 600);
    let cfg = preset("od8").unwrap();
    let obe = run(&cfg.clone().with_pipeline(Pipeline::Obe)).unwrap();
    let mbe = run(&cfg.with_pipeline(Pipeline::Mbe)).unwrap();
    let stated = obe.peak_gain > 800.0 && (1.1..=1.4).contains(&mbe.peak_gain);
    // fallback ordering: "much greater" read as at least a factor of ten
    let ordering = obe.peak_gain >= 10.0 * mbe.peak_gain && mbe.peak_gain < 2.0;
    v.check(
        stated || ordering,
        format!(
            "OBE peak {:.4} (> 800: {}), MBE peak {:.4} (in [1.1, 1.4]: {}), OBE/MBE {:.3} (>= 10 with MBE < 2: {ordering})",
            obe.peak_gain,
            obe.peak_gain > 800.0,
            mbe.peak_gain,
            (1.1..=1.4).contains(&mbe.peak_gain),
            obe.peak_gain / mbe.peak_gain
        ),
    );
    v.finish(start);
}

#[test]
fn criterion_7_doppler_suppression() {
    let start = Instant::now();
    let mut v = Verdict::new(7, "Doppler suppression", 300);
    let hot = preset("fig5").unwrap();
    assert_eq!(hot.doppler.unwrap().nodes, 64);
    let hot = run(&hot).unwrap();
    let cold = run(&preset("fig5-cold").unwrap()).unwrap();
    let c = compare(&hot, &cold).unwrap();
    v.check(
        hot.peak_gain < cold.peak_gain,
        format!("Doppler peak {:.4} < cold peak {:.4}", hot.peak_gain, cold.peak_gain),
    );
    v.check(
        c.ringing_ratio < 0.2,
        format!(
            "ringing {:.3e} / {:.3e} = {:.4}",
            c.ringing_a, c.ringing_b, c.ringing_ratio
        ),
    );
    v.finish(start);
}

#[test]
fn criterion_8_dark_state() {
    let start = Instant::now();
    let mut v = Verdict::new(8, "dark state", 60);
    let model = LambdaAtom::new(0.5, 0.5, 0.0).unwrap();
    let h = model.hamiltonian(
        Fields::new(Complex64::from(0.1), Complex64::from(1.6)),
        Detunings::default(),
    );
    let rho = steady_state(&h, model.lindblad()).unwrap();
    let excited = rho.population(2);
    v.check(excited < 1e-10, format!("rho_33 = {excited:.2e}"));

    let mut cfg = preset("fig4b").unwrap();
    cfg.atom.dephasing = 0.0;
    let r = run(&cfg).unwrap();
    let s = r.spectrum.unwrap();
    let (imin, _) = s
        .chi
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.im().total_cmp(&b.1.im()))
        .unwrap();
    let centre = s.delta.iter().position(|d| d.abs() < 1e-12).unwrap();
    v.check(
        imin == centre,
        format!(
            "Doppler Im chi minimum at delta = {} Gamma ({:.4e}; wings {:.4e})",
            s.delta[imin],
            s.chi[imin].im(),
            s.chi[0].im()
        ),
    );
    v.finish(start);
}

fn random_evolution(
    (omega_s, omega_c, delta_s, delta_c, dephasing, t_end): (f64, f64, f64, f64, f64, f64),
) -> Result<(), TestCaseError> {
    let model = LambdaAtom::new(0.5, 0.5, dephasing).unwrap();
    let drive = DriveProtocol {
        signal: Envelope::Constant(Complex64::from_polar(omega_s, 0.3)),
        control: Envelope::Step {
            amplitude: Complex64::from(omega_c),
            on: 0.5,
        },
        detunings: Detunings {
            signal: delta_s,
            control: delta_c,
        },
        initial: InitialState::Ground,
    };
    let times: Vec<f64> = (0..=20).map(|i| t_end * i as f64 / 20.0).collect();
    let traj = evolve(
        &model.ground_state(),
        &DrivenAtom::new(&model, &drive),
        model.lindblad(),
        &times,
        &IntegratorConfig::default(),
    )
    .unwrap();
    for rho in &traj.states {
        prop_assert!((rho.trace() - 1.0).norm() < 1e-9, "trace {}", rho.trace());
        prop_assert!(
            rho.hermiticity_error() < 1e-12,
            "hermiticity {}",
            rho.hermiticity_error()
        );
        prop_assert!(rho.min_eigenvalue() > -1e-9, "eigenvalue {}", rho.min_eigenvalue());
    }
    Ok(())
}

#[test]
fn criterion_9_numerical_hygiene() {
    let start = Instant::now();
    let mut v = Verdict::new(9, "numerical hygiene", 300);

    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        0.0..5.0f64,
        0.0..10.0f64,
        -10.0..10.0f64,
        -10.0..10.0f64,
        0.0..1.0f64,
        1.0..30.0f64,
    );
    let invariants = runner.run(&strategy, random_evolution);
    v.check(
        invariants.is_ok(),
        match &invariants {
            Ok(()) => "100 random Lambda evolutions keep trace, Hermiticity, positivity".into(),
            Err(e) => format!("invariant violated: {e}"),
        },
    );

    for (name, pipeline) in [
        ("fig1b", Pipeline::Mbe),
        ("fig3b", Pipeline::Obe),
        ("fig3b", Pipeline::Mbe),
    ] {
        let cfg = preset(name).unwrap().with_pipeline(pipeline);
        let (_, delta) = check_convergence(&cfg, Execution::default()).unwrap();
        v.check(delta < 5e-3, format!("{name} {pipeline} refinement delta {delta:.2e}"));
    }

    let base = preset("fig5").unwrap();
    let mut fine = base.clone();
    fine.doppler.as_mut().unwrap().nodes = 128;
    let a = run_with(&base, Execution::default()).unwrap();
    let b = run_with(&fine, Execution::default()).unwrap();
    let peak = rel(a.peak_gain, b.peak_gain);
    let steady = rel(a.steady_transmission, b.steady_transmission);
    let trace = a
        .gain
        .iter()
        .zip(&b.gain)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / b.peak_gain;
    v.check(
        peak < 1e-3 && steady < 1e-3 && trace < 1e-3,
        format!("fig5 64 vs 128 nodes: peak {peak:.2e}, steady {steady:.2e}, trace {trace:.2e}"),
    );

    let spec64 = run(&preset("fig4b").unwrap()).unwrap().spectrum.unwrap();
    let mut fine = preset("fig4b").unwrap();
    fine.doppler.as_mut().unwrap().nodes = 128;
    let spec128 = run(&fine).unwrap().spectrum.unwrap();
    let scale = spec128.chi.iter().map(|c| c.0.norm()).fold(0.0, f64::max);
    let spectrum = spec64
        .chi
        .iter()
        .zip(&spec128.chi)
        .map(|(a, b)| (a.0 - b.0).norm())
        .fold(0.0, f64::max)
        / scale;
    v.check(
        spectrum < 1e-3,
        format!("fig4b spectrum 64 vs 128 nodes: {spectrum:.2e}"),
    );
    v.finish(start);
}
