use std::path::Path;
use std::process::Command;

use hodsar_core::io::cli::{run, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};
use hodsar_core::io::write_touchstone;
use hodsar_core::resonator::{linear_grid, synth_s21_modesum, Background, ResonatorMode, ResonatorModeSet};
use hodsar_core::spin::C64;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hodsar").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn report_value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key)?.trim().strip_prefix('=')?.trim().parse().ok())
        .unwrap_or_else(|| panic!("no `{key}` in report:\n{report}"))
}

fn single_mode_s2p(dir: &Path, f0: f64, q: f64) -> String {
    let ms = ResonatorModeSet::new(
        vec![ResonatorMode::new(f0, q, C64::new(0.6, 0.2)).unwrap()],
        Background {
            offset: C64::new(0.05, -0.02),
            ..Background::default()
        },
    );
    let rec = synth_s21_modesum(&ms, &linear_grid(104.0, 105.6, 0.0005)).unwrap();
    let path = dir.join("single.s2p");
    std::fs::write(&path, write_touchstone(&rec)).unwrap();
    path.display().to_string()
}

#[test]
fn estimate_reports_paper_ranges() {
    let (code, out, _) = call(&["estimate"]);
    assert_eq!(code, EXIT_OK);
    assert!((report_value(&out, "r_um") - 0.81).abs() < 0.005);
    let n = report_value(&out, "n_molecules");
    assert!((4e7..=7e8).contains(&n), "{n}");
    assert!(!out.contains("snr"));
    let (_, out, _) = call(&["estimate", "--f-t", "0.1"]);
    assert!(report_value(&out, "snr") > 0.0);
}

#[test]
fn s21_fit_recovers_q() {
    let dir = tempfile::tempdir().unwrap();
    let path = single_mode_s2p(dir.path(), 104.8, 8505.2);
    let (code, out, err) = call(&["s21-fit", &path]);
    assert_eq!(code, EXIT_OK, "{err}");
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[0] - 104.8).abs() < 1e-3);
    assert!((row[1] / 8505.2 - 1.0).abs() < 0.02, "{out}");
}

#[test]
fn s21_fit_without_resonances_is_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.s2p");
    let mut text = String::from("# MHz S RI R 50\n");
    for i in 0..100 {
        text.push_str(&format!("{} 0 0 0.5 0 0 0 0 0\n", 100.0 + i as f64 * 0.01));
    }
    std::fs::write(&path, text).unwrap();
    assert_eq!(call(&["s21-fit", path.to_str().unwrap()]).0, EXIT_NUMERIC);
}

#[test]
fn usage_and_data_errors() {
    let (code, _, err) = call(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(call(&[]).0, EXIT_USAGE);
    assert_eq!(call(&["spectrum", "--format", "pdf"]).0, EXIT_USAGE);
    assert_eq!(call(&["--help"]).0, EXIT_OK);

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.s2p");
    assert_eq!(call(&["s21-fit", missing.to_str().unwrap()]).0, EXIT_DATA);

    let bad = dir.path().join("bad.s2p");
    std::fs::write(&bad, "100 0 0 0.5 0 0 0 0 0\n").unwrap();
    let (code, _, err) = call(&["s21-fit", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("line 1"), "{err}");

    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[zfs]\nq = 3\n").unwrap();
    let (code, _, err) = call(&["--config", cfg.to_str().unwrap(), "eta"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("zfs.q"), "{err}");
    assert_eq!(call(&["--preset", "nope", "eta"]).0, EXIT_DATA);
}

#[test]
fn eta_from_config() {
    let (code, out, _) = call(&["eta"]);
    assert_eq!(code, EXIT_OK);
    assert!((report_value(&out, "eta") / 5.07e-12 - 1.0).abs() < 1e-6);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    std::fs::write(&cfg, "[energy]\ne_ext_mag = 0.0\ne_int_ela = 0.0\ne_int_kin = 0.0\ne_int_ele = 0.0\ne_int_mag = 0.0\ne_ext_ele = 0.0\n").unwrap();
    assert_eq!(call(&["--config", cfg.to_str().unwrap(), "eta"]).0, EXIT_DATA);
}

#[test]
fn spectrum_writes_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, report, _) = call(&["--out", out, "--format", "svg", "spectrum", "--f-start", "104", "--f-stop", "105"]);
    assert_eq!(code, EXIT_OK);
    assert!(dir.path().join("spectrum.svg").exists());
    assert!(!dir.path().join("spectrum.csv").exists());
    assert!((report_value(&report, "peak_f_mhz") - 104.5).abs() < 0.1 + 1e-9);

    let (code, _, _) = call(&["--out", out, "--format", "csv", "spectrum", "--f-step", "0.5", "--power-dbm", "-10"]);
    assert_eq!(code, EXIT_OK);
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("f_mhz,contrast,stderr"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 21);
    assert!(csv.contains("# power_dbm=-10"));
    assert!(csv.contains("# config_hash="));
}

#[test]
fn rabi_and_power_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, report, err) = call(&["--out", out, "rabi"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let model = report_value(&report, "rabi_frequency_model_mhz");
    assert!((report_value(&report, "omega_r_mhz") / model - 1.0).abs() < 0.01);
    let csv = std::fs::read_to_string(dir.path().join("rabi.csv")).unwrap();
    assert!(csv.starts_with("tau_us,signal,fit,counts\n"));

    let (code, report, _) = call(&["--out", out, "--format", "csv", "rabi-power"]);
    assert_eq!(code, EXIT_OK);
    assert!(report_value(&report, "r_squared") > 0.999);
    let csv = std::fs::read_to_string(dir.path().join("rabi_power.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 8);
}

#[test]
fn flat_trace_is_numeric_failure() {
    // with zero strain calibration the trace is flat
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[calib]\nkappa = 0.0\np_ref_mw = 1.0\n").unwrap();
    let (code, _, _) = call(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "rabi"]);
    assert_eq!(code, EXIT_NUMERIC);
}

#[test]
fn synth_cavity_roundtrips_through_s21_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = call(&["--out", out, "--format", "csv", "synth-s21", "--model", "cavity", "--f-start", "104", "--f-stop", "106"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let s2p = dir.path().join("synth_s21.s2p");
    let (code, report, err) = call(&["s21-fit", s2p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(report.lines().count() >= 2);
}

#[test]
fn seed_env_fallback_and_flag_precedence() {
    let bin = env!("CARGO_BIN_EXE_hodsar");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 5\n[inhomogeneity]\nsigma_e = 0.3\nn_samples = 4\n").unwrap();
    let seed_line = |sub: &str, env: Option<&str>, flag: Option<&str>| {
        let d = dir.path().join(sub);
        let mut cmd = Command::new(bin);
        cmd.args(["--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--format", "csv"]);
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        cmd.arg("spectrum").args(["--f-start", "104", "--f-stop", "105"]);
        cmd.env_remove("HODSAR_SEED");
        if let Some(e) = env {
            cmd.env("HODSAR_SEED", e);
        }
        assert!(cmd.status().unwrap().success());
        let csv = std::fs::read_to_string(d.join("spectrum.csv")).unwrap();
        csv.lines().find(|l| l.starts_with("# seed=")).unwrap().to_string()
    };
    assert_eq!(seed_line("a", None, None), "# seed=5");
    assert_eq!(seed_line("b", Some("9"), None), "# seed=9");
    assert_eq!(seed_line("c", Some("9"), Some("11")), "# seed=11");

    let status = Command::new(bin).env("HODSAR_SEED", "x").arg("eta").status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
}
