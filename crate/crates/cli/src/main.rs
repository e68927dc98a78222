use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eitprop::config::{emit_config, parse_config, RunManifest};
use eitprop::output::{execute, sweep};
use eitprop::scenarios::{preset, PRESETS};
use eitprop::Error;

/// Output directory used when neither `--out-dir` nor `[output] dir` is given.
const OUT_DIR_ENV: &str = "EITPROP_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "eitprop",
    version,
    about = "Transient gain in EIT media: uniform (OBE), propagating (MBE) and Doppler-averaged simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every pipeline named in a config and write traces and a summary.
    Run {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Repeat each run on a refined grid and record the change.
        #[arg(long)]
        check_convergence: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the single-axis parameter sweep of a config.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the registered scenario presets.
    ListPresets,
    /// Print a preset as a complete config file.
    ShowPreset { name: String },
    /// Validate a config without computing anything.
    Check { config: PathBuf },
}

fn load(path: &Path) -> Result<RunManifest, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn out_dir(flag: Option<PathBuf>, manifest: &RunManifest) -> PathBuf {
    flag.or_else(|| manifest.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn apply_threads(m: &mut RunManifest, threads: Option<usize>) -> Result<(), Error> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config(eitprop::config::ConfigError::Invalid {
                path: "--threads".into(),
                reason: "must be at least 1".into(),
            }));
        }
        m.threads = Some(t);
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            out_dir: flag,
            check_convergence,
            threads,
        } => {
            let mut m = load(&config)?;
            m.check_convergence |= check_convergence;
            apply_threads(&mut m, threads)?;
            let dir = out_dir(flag, &m);
            let a = execute(&m, &dir)?;
            for r in &a.summary.runs {
                println!(
                    "{:<12} peak gain {:.6}  steady transmission {:.6}{}",
                    r.pipeline.to_string(),
                    r.peak_gain,
                    r.steady_transmission,
                    r.convergence_delta
                        .map(|d| format!("  refinement delta {d:.3e}"))
                        .unwrap_or_default()
                );
            }
            if let Some(c) = a.summary.comparison {
                println!("peak-gain ratio {:.6}", c.peak_gain_ratio);
            }
            for f in &a.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep {
            config,
            out_dir: flag,
            threads,
        } => {
            let mut m = load(&config)?;
            apply_threads(&mut m, threads)?;
            let dir = out_dir(flag, &m);
            let (rows, files) = sweep(&m, &dir)?;
            for r in &rows {
                println!(
                    "{:>12.6} {:<12} peak gain {:.6}  steady transmission {:.6}",
                    r.parameter,
                    r.pipeline.to_string(),
                    r.peak_gain,
                    r.steady_transmission
                );
            }
            for f in &files {
                println!("wrote {}", f.display());
            }
        }
        Command::ListPresets => {
            for name in PRESETS {
                let c = preset(name)?;
                let (_, _, dephasing) = c.atom.normalized_rates();
                println!(
                    "{name:<11} {:<9} {:<11} OD {:<4} Omega_s {} Omega_c {} gamma {} (Gamma units), L = {} m",
                    c.scheme.as_str(),
                    c.pipeline.to_string(),
                    c.target_od,
                    c.drive.omega_s,
                    c.drive.omega_c,
                    dephasing,
                    c.atom.length
                );
            }
        }
        Command::ShowPreset { name } => {
            let m = parse_config(&format!("preset = \"{name}\"\n"))?;
            print!("{}", emit_config(&m));
        }
        Command::Check { config } => {
            let m = load(&config)?;
            println!(
                "ok: scenario `{}` ({}), config hash {}",
                m.scenario.name,
                m.pipelines.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "),
                m.scenario.hash()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
