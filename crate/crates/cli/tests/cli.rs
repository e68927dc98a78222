use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eitprop(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eitprop"))
        .args(args)
        .current_dir(cwd)
        .env_remove("EITPROP_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = eitprop(&["list-presets"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for name in eitprop::scenarios::PRESETS {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn shown_preset_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = eitprop(&["show-preset", "fig3b"], dir.path());
    assert!(o.status.success());
    let path = dir.path().join("fig3b.toml");
    fs::write(&path, stdout(&o)).unwrap();
    let check = eitprop(&["check", path.to_str().unwrap()], dir.path());
    assert!(check.status.success(), "{}", stderr(&check));
    let hash = eitprop::scenarios::preset("fig3b").unwrap().hash();
    assert!(stdout(&check).contains(&hash));
}

#[test]
fn config_errors_exit_with_code_two_and_suggest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "preset = \"fig1a\"\n[drive]\nomega_s_gama = 0.1\n").unwrap();
    let o = eitprop(&["check", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[config]"), "{err}");
    assert!(err.contains("omega_s_gamma"), "{err}");

    let o = eitprop(&["show-preset", "fig9"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("fig1a"));

    let o = eitprop(&["check", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(7));
    assert!(stderr(&o).starts_with("error[io]"));
}

#[test]
fn run_writes_into_the_selected_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.toml");
    fs::write(
        &path,
        "preset = \"fig1b\"\npipelines = [\"obe\", \"mbe\"]\n[grid]\ntau_max_gamma = 2.0\n",
    )
    .unwrap();

    let out = dir.path().join("flag");
    let o = eitprop(
        &[
            "run",
            path.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--threads",
            "1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["fig1b-obe.trace.csv", "fig1b-mbe.trace.csv", "fig1b.summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(stdout(&o).contains("peak-gain ratio"));

    let env_dir = dir.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_eitprop"))
        .args(["run", path.to_str().unwrap()])
        .current_dir(dir.path())
        .env("EITPROP_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("fig1b.summary.json").exists());
    assert_eq!(
        fs::read(out.join("fig1b-mbe.trace.csv")).unwrap(),
        fs::read(env_dir.join("fig1b-mbe.trace.csv")).unwrap()
    );

    let o = eitprop(&["run", path.to_str().unwrap(), "--threads", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.toml");
    fs::write(
        &path,
        "preset = \"fig3b\"\n[grid]\ntau_max_gamma = 6.0\n[sweep]\nomega_c_gamma = [1.0, 1.6]\n",
    )
    .unwrap();
    let o = eitprop(&["sweep", path.to_str().unwrap(), "--out-dir", "."], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("fig3b.sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("omega_c_gamma,pipeline,peak_gain,steady_transmission")
    );
    assert_eq!(lines.count(), 2);
}
