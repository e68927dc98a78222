//! Manifest execution: runs every requested pipeline, then writes trace,
//! field-grid and spectrum tables plus a JSON summary. Nothing is written
//! until all computation has succeeded, and a failed write removes the
//! files already written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunManifest;
use crate::error::{Error, Result};
use crate::mbe::FieldGrid;
use crate::par::{self, Execution};
use crate::scenarios::{check_convergence, compare, run_with, Comparison, Pipeline, RunResult, Spectrum};

/// Largest refinement delta for which a run counts as grid-converged.
pub const CONVERGENCE_TOLERANCE: f64 = 5e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub pipeline: Pipeline,
    pub peak_gain: f64,
    pub steady_transmission: f64,
    pub max_monitor: Option<f64>,
    /// Relative change under grid refinement, when checked.
    pub convergence_delta: Option<f64>,
    pub trace_file: String,
    pub field_file: Option<String>,
    pub spectrum_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub preset: Option<String>,
    pub config_hash: String,
    pub runs: Vec<RunSummary>,
    /// First pipeline against the second.
    pub comparison: Option<Comparison>,
    /// `None` unless convergence was checked.
    pub grid_converged: Option<bool>,
}

#[derive(Debug)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub summary: Summary,
    pub results: Vec<RunResult>,
}

fn execution(manifest: &RunManifest) -> Execution {
    if manifest.threads == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// `tau_over_gamma,transmission,gain`, 17 significant digits.
pub fn trace_csv(r: &RunResult) -> String {
    let mut out = String::from("tau_over_gamma,transmission,gain\n");
    for ((t, tr), g) in r.tau.iter().zip(&r.transmission).zip(&r.gain) {
        let _ = writeln!(out, "{},{},{}", sci(*t), sci(*tr), sci(*g));
    }
    out
}

pub fn field_grid_csv(f: &FieldGrid) -> String {
    let mut out = String::from("zeta_m,tau_over_gamma,re_omega_s,im_omega_s,re_omega_c,im_omega_c\n");
    for (j, t) in f.tau.iter().enumerate() {
        for (c, z) in f.zeta.iter().enumerate() {
            let s = f.signal[(j, c)];
            let k = f.control[(j, c)];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                sci(*z),
                sci(*t),
                sci(s.re),
                sci(s.im),
                sci(k.re),
                sci(k.im)
            );
        }
    }
    out
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("delta_over_gamma,re_chi,im_chi\n");
    for (d, c) in s.delta.iter().zip(&s.chi) {
        let _ = writeln!(out, "{},{},{}", sci(*d), sci(c.re()), sci(c.im()));
    }
    out
}

/// Writes `files` in order; on failure removes whatever was written.
fn write_all(dir: &Path, files: Vec<(String, String)>) -> Result<Vec<PathBuf>> {
    let io = |path: &Path, source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, contents) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(io(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}

/// Runs every pipeline of `manifest` and writes the results under `dir`.
pub fn execute(manifest: &RunManifest, dir: &Path) -> Result<Artifacts> {
    let exec = execution(manifest);
    let scenario = &manifest.scenario;
    let computed: Vec<(RunResult, Option<f64>)> = par::install(manifest.threads, || {
        manifest
            .pipelines
            .iter()
            .map(|&p| {
                let config = scenario.clone().with_pipeline(p);
                if manifest.check_convergence {
                    check_convergence(&config, exec).map(|(r, d)| (r, Some(d)))
                } else {
                    run_with(&config, exec).map(|r| (r, None))
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut files = Vec::new();
    let mut runs = Vec::new();
    for (r, delta) in &computed {
        let stem = format!("{}-{}", scenario.name, r.pipeline);
        let trace_file = format!("{stem}.trace.csv");
        files.push((trace_file.clone(), trace_csv(r)));
        let field_file = match (&r.field_grid, manifest.output.field_grid) {
            (Some(f), true) => {
                let name = format!("{stem}.fields.csv");
                files.push((name.clone(), field_grid_csv(f)));
                Some(name)
            }
            _ => None,
        };
        let spectrum_file = r.spectrum.as_ref().map(|s| {
            let name = format!("{stem}.spectrum.csv");
            files.push((name.clone(), spectrum_csv(s)));
            name
        });
        runs.push(RunSummary {
            pipeline: r.pipeline,
            peak_gain: r.peak_gain,
            steady_transmission: r.steady_transmission,
            max_monitor: r.max_monitor,
            convergence_delta: *delta,
            trace_file,
            field_file,
            spectrum_file,
        });
    }
    let comparison = match &computed[..] {
        [(a, _), (b, _), ..] => Some(compare(a, b)?),
        _ => None,
    };
    let summary = Summary {
        scenario: scenario.name.clone(),
        preset: manifest.preset.clone(),
        config_hash: scenario.hash(),
        grid_converged: manifest.check_convergence.then(|| {
            runs.iter()
                .all(|r| r.convergence_delta.is_some_and(|d| d < CONVERGENCE_TOLERANCE))
        }),
        runs,
        comparison,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    files.push((format!("{}.summary.json", scenario.name), json + "\n"));
    let written = write_all(dir, files)?;
    Ok(Artifacts {
        files: written,
        summary,
        results: computed.into_iter().map(|(r, _)| r).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub pipeline: Pipeline,
    pub peak_gain: f64,
    pub steady_transmission: f64,
}

/// Computes the sweep table: parameter values ascending, pipelines in
/// manifest order within each value. Rows run in parallel.
pub fn sweep_rows(manifest: &RunManifest) -> Result<Vec<SweepRow>> {
    let sweep = manifest
        .sweep
        .as_ref()
        .ok_or_else(|| Error::invalid("sweep", "manifest has no [sweep] section"))?;
    let mut values = sweep.values.clone();
    values.sort_by(f64::total_cmp);
    let jobs: Vec<(f64, Pipeline)> = values
        .iter()
        .flat_map(|&v| manifest.pipelines.iter().map(move |&p| (v, p)))
        .collect();
    let exec = execution(manifest);
    par::install(manifest.threads, || {
        par::try_map(exec, &jobs, |&(v, p)| {
            let config = sweep.axis.apply(&manifest.scenario, v)?.with_pipeline(p);
            let r = run_with(&config, Execution::Sequential)?;
            Ok(SweepRow {
                parameter: v,
                pipeline: p,
                peak_gain: r.peak_gain,
                steady_transmission: r.steady_transmission,
            })
        })
    })
}

pub fn sweep_csv(axis: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{axis},pipeline,peak_gain,steady_transmission\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            sci(r.parameter),
            r.pipeline,
            sci(r.peak_gain),
            sci(r.steady_transmission)
        );
    }
    out
}

/// Runs the sweep and writes `<name>.sweep.csv` under `dir`.
pub fn sweep(manifest: &RunManifest, dir: &Path) -> Result<(Vec<SweepRow>, Vec<PathBuf>)> {
    let rows = sweep_rows(manifest)?;
    let axis = manifest.sweep.as_ref().expect("checked by sweep_rows").axis.key();
    let files = write_all(
        dir,
        vec![(format!("{}.sweep.csv", manifest.scenario.name), sweep_csv(axis, &rows))],
    )?;
    Ok((rows, files))
}
