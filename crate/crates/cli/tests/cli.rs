use std::path::Path;
use std::process::Command;

fn nilres(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nilres"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

#[test]
fn golden_verify_passes_and_stages_match() {
    let dir = tempfile::tempdir().unwrap();
    let out = nilres(&["verify", "--out", "fused"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = nilres(&["correlate", "--out", "staged"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = nilres(
        &["resonances", "--series", "staged/correlations.csv", "--out", "staged", "--threads", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    for f in ["correlations.csv", "correlations.json", "resonances.json", "report.md"] {
        let a = std::fs::read(dir.path().join("fused").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("staged").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("fused/resonances.json")).unwrap()).unwrap();
    let band0 = json["resonances"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["band"] == 0)
        .unwrap();
    assert!((band0["modulus"].as_f64().unwrap() - 0.618_034).abs() < 1e-4);
    for key in ["re", "im", "mu_re", "mu_im", "amp_re", "amp_im"] {
        assert!(band0[key].is_number(), "{key}");
    }
    assert!(json["residuals"].is_array() && json["verdict"]["pass"] == true);
}

#[test]
fn bad_determinant_exits_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[automorphism]\na = 2\nb = 1\nc = 1\nd = 2\n\n[[pairs]]\ng = [{ m = 0 }]\nh = [{ m = 0 }]\n";
    std::fs::write(dir.path().join("bad.toml"), cfg).unwrap();
    let out = nilres(&["verify", "--config", "bad.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("determinant"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = nilres(&["correlate", "--out", "s", "--n-max", "6", "--grid", "64"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = dir.path().join("s/correlations.csv");
    let mut text = std::fs::read_to_string(&csv).unwrap();
    text = text.replacen("\n1,", "\nx,", 1);
    std::fs::write(&csv, text).unwrap();
    let out = nilres(&["resonances", "--series", "s/correlations.csv", "--out", "s"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn toral_config_reports_the_single_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[automorphism]\na = 2\nb = 1\nc = 1\nd = 1\n\n[sector]\nn = 0\n\n[[pairs]]\ng = [{ m = 0 }, { m = 1, re = 0.5 }]\nh = [{ m = 0 }, { m = 1, re = 0.5 }]\n";
    std::fs::write(dir.path().join("n0.toml"), cfg).unwrap();
    let out = nilres(&["verify", "--config", "n0.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = std::fs::read_to_string(dir.path().join("o/report.md")).unwrap();
    assert!(report.contains("toral"), "{report}");
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = nilres(&["selftest"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
