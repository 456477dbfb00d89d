use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nonad-band"));
    cmd.env_remove("NONAD_BAND_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn gf_prints_header_and_value() {
    let o = run(&[
        "--preset", "paper", "gf", "--x", "0.01", "--x0", "-0.02", "--e-cm1", "320",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# config: {"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "re,im");
    let vals: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((vals[0] - 5.724679873748594).abs() < 1e-9);
    assert!(vals[1] < 0.0);
}

#[test]
fn explicit_flags_match_preset() {
    let from_preset = run(&[
        "--preset", "paper", "gf", "--x", "0.0", "--x0", "0.03", "--e-cm1", "640",
    ]);
    let from_flags = run(&[
        "--mass-amu",
        "35.4",
        "--omega-cm1",
        "500",
        "--site-spacing-angstrom",
        "0.1",
        "--crossing-offset-angstrom",
        "0.05",
        "--k0-value",
        "1.58e-7",
        "--k0-unit",
        "erg_angstrom",
        "--emin-cm1",
        "100",
        "--emax-cm1",
        "900",
        "gf",
        "--x",
        "0.0",
        "--x0",
        "0.03",
        "--e-cm1",
        "640",
    ]);
    assert!(from_preset.status.success() && from_flags.status.success());
    let a = stdout(&from_preset);
    let b = stdout(&from_flags);
    assert_eq!(data_lines(&a), data_lines(&b));
    assert_eq!(a.replace("\"preset\":\"paper\"", "\"preset\":null"), b);
}

#[test]
fn missing_keys_reported_as_json() {
    let o = run(&["gf", "--x", "0", "--x0", "0", "--e-cm1", "100"]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    let msg = err["message"].as_str().unwrap();
    for key in [
        "mass_amu",
        "omega_cm1",
        "site_spacing_angstrom",
        "k0_value",
        "k0_unit",
    ] {
        assert!(msg.contains(key));
    }
}

#[test]
fn config_file_errors_are_all_listed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(
        &path,
        "mass_amu = -2\nomega_cm1 = 500 angstrom\nwidth = 3\n",
    )
    .unwrap();
    let o = run(&[
        "--preset",
        "paper",
        "--config",
        path.to_str().unwrap(),
        "scan",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    let details = err["details"].as_array().unwrap();
    assert_eq!(details.len(), 3, "{details:?}");
}

#[test]
fn pole_energy_is_an_error() {
    let o = run(&[
        "--preset",
        "paper",
        "--eta-internal",
        "0",
        "gf",
        "--x",
        "0",
        "--x0",
        "0",
        "--e-cm1",
        "250",
    ]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "pole_proximity");
}

#[test]
fn converge_table_layout() {
    let o = run(&[
        "--preset",
        "paper-banded",
        "converge",
        "--n-sites",
        "30",
        "--eta",
        "0.5",
        "--e-cm1",
        "150",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,s_re,s_im,delta");
    assert_eq!(lines.len(), 31);
    assert!(lines[1].ends_with(','));
    let last_delta: f64 = lines[30].rsplit(',').next().unwrap().parse().unwrap();
    assert!(last_delta < 1e-8);
    assert!(text.lines().last().unwrap().starts_with("# fixed_point: "));
}

#[test]
fn twostate_columns() {
    let o = run(&[
        "--preset",
        "paper-banded",
        "--format",
        "csv",
        "twostate",
        "--n-e",
        "9",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "e_cm1,den_re,den_im,g11_re,g11_im,g12_re,g12_im");
    assert_eq!(lines.len(), 10);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
}

#[test]
fn check_flag_controls_exit_code() {
    let ok = run(&[
        "--preset",
        "paper-banded",
        "--check",
        "gf",
        "--x",
        "0",
        "--x0",
        "0",
        "--e-cm1",
        "320",
    ]);
    assert!(ok.status.success());
    let report: serde_json::Value = serde_json::from_slice(&ok.stderr).unwrap();
    assert_eq!(report["passed"], true);

    // the literal coupling leaves the Dyson re-substitution at the rounding floor times ~1e15
    let bad = run(&[
        "--preset", "paper", "--check", "gf", "--x", "0", "--x0", "0", "--e-cm1", "320",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn scan_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = bin()
            .env("NONAD_BAND_THREADS", threads)
            .args([
                "--preset",
                "paper-banded",
                "--n-grid",
                "3000",
                "--out-dir",
                out.to_str().unwrap(),
                "scan",
            ])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((
            fs::read(out.join("samples.csv")).unwrap(),
            fs::read(out.join("bands.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let bands: serde_json::Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(bands["bands"].as_array().unwrap().len(), 2);
}
