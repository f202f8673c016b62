use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wignerdyn::cli_io::read_dump;
use wignerdyn::cli_io::formats::parse_diagnostics_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wignerdyn"))
}

fn wignerdyn(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL: &str = r#"
[grid]
nx = 128
np = 128
x_min = -6.0
x_max = 6.0
p_min = -10.0
p_max = 10.0

[params]
m = 1.0
a = 1.0
b = 0.1
lambda = 0.5
omega = 2.0
hbar = 0.5

[init]
x0 = -2.0
p0 = 0.5
sigma_x = 0.5
minimum_uncertainty = true

[evolve]
mode = "quantum"
steps_per_period = 64
t_final_periods = 0.5
sample_every = 0.25
diagnostics_every = 4

[decoherence]
d = 0.02

[output]
dir = "out"
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_small(dir: &Path, text: &str, out: &str) -> PathBuf {
    let cfg = write_config(dir, &format!("{out}.cfg"), text);
    let out_dir = dir.join(out);
    let res = wignerdyn(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    out_dir
}

#[test]
fn run_writes_the_documented_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_small(tmp.path(), SMALL, "run");
    for name in ["manifest.toml", "initial.wigf", "final.wigf", "diagnostics.csv", "final.pgm"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let snapshots: Vec<_> = fs::read_dir(out.join("snapshots")).unwrap().collect();
    assert!(!snapshots.is_empty());
    assert!(out.join("snapshots/step_0000000.wigf").is_file());

    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let diag = parse_diagnostics_csv(&csv).unwrap();
    let last = diag.mass_series.last().copied().unwrap();
    assert!((last - 1.0).abs() < 1e-10);
    let final_field = read_dump(&out.join("final.wigf")).unwrap();
    assert_eq!(*diag.times.last().unwrap(), final_field.time);
}

#[test]
fn zero_length_run_reproduces_the_initial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("t_final_periods = 0.5", "t_final_periods = 0.0");
    let out = run_small(tmp.path(), &text, "identity");
    assert_eq!(
        fs::read(out.join("initial.wigf")).unwrap(),
        fs::read(out.join("final.wigf")).unwrap()
    );
}

#[test]
fn reruns_and_thread_counts_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.cfg", SMALL);
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = tmp.path().join(name);
        let res = wignerdyn(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
        outputs.push(out);
    }
    for name in ["final.wigf", "diagnostics.csv", "final.pgm"] {
        let reference = fs::read(outputs[0].join(name)).unwrap();
        for other in &outputs[1..] {
            assert_eq!(reference, fs::read(other.join(name)).unwrap(), "{name} differs");
        }
    }
}

#[test]
fn manifest_replays_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let first = run_small(tmp.path(), SMALL, "first");
    let second = tmp.path().join("second");
    let manifest = first.join("manifest.toml");
    let res = wignerdyn(&["run", "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    for name in ["manifest.toml", "final.wigf", "diagnostics.csv"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap());
    }
}

#[test]
fn compare_requires_decoherence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d0.cfg", &SMALL.replace("d = 0.02", "d = 0.0"));
    let res = wignerdyn(&["compare", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("c").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("decoherence.d"), "{}", stderr(&res));
}

#[test]
fn harmonic_compare_shows_no_quantum_relevance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cmp");
    let res = wignerdyn(&["compare", "--preset", "harmonic", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let report: toml::Table = fs::read_to_string(out.join("report.toml")).unwrap().parse().unwrap();
    let d_iso = report["d_iso_l2"].as_float().unwrap();
    assert!(d_iso < 1e-10, "d_iso = {d_iso}");
    let verdict = report["verdict"].as_table().unwrap();
    assert_eq!(verdict["unconditional_relevance"].as_bool(), Some(false));
    assert_eq!(verdict["emergent"].as_bool(), Some(false));
    for regime in ["quantum_isolated", "classical_isolated", "quantum_decohered", "classical_decohered"] {
        assert!(out.join(regime).join("final.wigf").is_file());
    }
    assert!(out.join("panels.pgm").is_file());
}

#[test]
fn sweep_over_decoherence_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("t_final_periods = 0.5", "t_final_periods = 0.25");
    let cfg = write_config(tmp.path(), "small.cfg", &text);
    let out = tmp.path().join("sweep");
    let res = wignerdyn(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--key",
        "decoherence.d",
        "--values",
        "0.01,0.04",
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,d_iso,d_dec,final_negativity");
    assert_eq!(lines.len(), 3);
    let d_iso: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(d_iso[0], d_iso[1]);
    assert!(out.join("decoherence_d=0.04/quantum_isolated/final.wigf").is_file());
}

#[test]
fn sweep_with_no_values_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.cfg", SMALL);
    let res = wignerdyn(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("s").to_str().unwrap(),
        "--key",
        "decoherence.d",
        "--values",
        "",
    ]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn missing_hbar_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "nohbar.cfg", &SMALL.replace("hbar = 0.5\n", ""));
    let res = wignerdyn(&["info", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("hbar"), "{}", stderr(&res));
}

#[test]
fn unknown_keys_and_presets_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "typo.cfg", &SMALL.replace("omega = 2.0", "omgea = 2.0"));
    assert_eq!(wignerdyn(&["info", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    let res = wignerdyn(&["info", "--preset", "nope"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("fig1"));
}

#[test]
fn domain_overflow_exits_with_numerical_code() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("a = 1.0", "a = 0.0")
        .replace("b = 0.1", "b = 0.0")
        .replace("lambda = 0.5", "lambda = 0.0")
        .replace("p0 = 0.5", "p0 = 3.0")
        .replace("t_final_periods = 0.5", "t_final_periods = 2.0");
    let cfg = write_config(tmp.path(), "escape.cfg", &text);
    let res = wignerdyn(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("e").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "{}", stderr(&res));
}

#[test]
fn info_lists_resolution_limits() {
    let res = wignerdyn(&["info", "--preset", "fig1"]);
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("2048"), "{text}");
}
