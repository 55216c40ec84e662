use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cotangent_lift::report::Report;

const PARA_KAHLER: &str = include_str!("../configs/alpha_beta_para_kahler.json");

fn cotlift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cotlift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn verify(config: &Path, out: &Path, extra: &[&str]) -> (i32, Report) {
    let mut args = vec![
        "verify",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let output = cotlift(&args);
    let text = std::fs::read_to_string(out).expect("report written");
    (
        output.status.code().unwrap(),
        Report::from_json(&text).unwrap(),
    )
}

#[test]
fn para_kahler_config_passes_all_five_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pk.json", PARA_KAHLER);
    let (code, report) = verify(&cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 0);
    assert_eq!(report.checks.len(), 5);
    assert!(report.all_passed);
    for c in &report.checks {
        assert!(c.witnesses.len() <= 3);
        assert_eq!(c.points_sampled, 100);
    }
}

#[test]
fn reports_are_byte_identical_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pk.json", PARA_KAHLER);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    verify(&cfg, &a, &["--samples", "20"]);
    verify(&cfg, &b, &["--samples", "20"]);
    let strip = |p: &Path| {
        let text = std::fs::read_to_string(p).unwrap();
        let cut = text.find("\"timing\"").expect("timing field present");
        text[..cut].to_string()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn report_round_trips_residuals_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pk.json", PARA_KAHLER);
    let out = dir.path().join("r.json");
    let (_, report) = verify(&cfg, &out, &["--samples", "10"]);
    let again = Report::from_json(&report.to_json()).unwrap();
    assert_eq!(again, report);
    let raw: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for (check, parsed) in raw["checks"].as_array().unwrap().iter().zip(&report.checks) {
        assert_eq!(check["max_residual"].as_f64().unwrap(), parsed.max_residual);
    }
}

#[test]
fn mu_off_derivative_fails_closure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mu.json",
        &PARA_KAHLER.replace(r#""mu": "derived""#, r#""mu": 0.5"#),
    );
    let (code, report) = verify(&cfg, &dir.path().join("r.json"), &["--samples", "20"]);
    assert_eq!(code, 1);
    let closure = report
        .checks
        .iter()
        .find(|c| c.check_name == "closure")
        .unwrap();
    assert!(!closure.passed());
    assert!(closure.max_residual > 1e-3 && closure.max_residual.is_finite());
    let integrability = report
        .checks
        .iter()
        .find(|c| c.check_name == "integrability")
        .unwrap();
    assert!(integrability.passed());
}

#[test]
fn perturbed_base_fails_integrability() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "pert.json",
        r#"{
            "manifold": {"model": "perturbed_conformal", "n": 3, "c": 1, "strength": 0.2},
            "coefficients": {"a1": 1},
            "sampling": {"count": 20, "seed": 5},
            "checks": ["space_form", "integrability"]
        }"#,
    );
    let (code, report) = verify(&cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 1);
    assert!(report.checks.iter().all(|c| !c.passed()));
}

#[test]
fn invalid_configs_exit_two_with_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            PARA_KAHLER.replace(r#""lambda": 1"#, r#""lambda": {"preset": "sigmoid"}"#),
            "coefficients.lambda",
        ),
        (
            r#"{
                "manifold": {"model": "conformal_ball", "n": 3, "c": 1},
                "coefficients": {"a1": 1, "c": -1},
                "checks": ["integrability"]
            }"#
            .to_string(),
            "coefficients.c",
        ),
    ];
    for (k, (text, path)) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{k}.json"), text);
        let out = cotlift(&["verify", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2));
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(path), "{stderr}");
    }
}

#[test]
fn degenerate_coefficients_exit_two_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "deg.json",
        r#"{
            "manifold": {"model": "conformal_ball", "n": 3, "c": -1},
            "coefficients": {"a1": 1},
            "checks": ["integrability"]
        }"#,
    );
    let (code, report) = verify(&cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 2);
    assert!(report.error.unwrap().contains("a1 + 2ct a2"));
    assert!(report.checks.is_empty());
}

#[test]
fn flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pk.json", PARA_KAHLER);
    let (code, report) = verify(
        &cfg,
        &dir.path().join("r.json"),
        &[
            "--seed",
            "77",
            "--samples",
            "7",
            "--tol-override",
            "closure=1e-30",
        ],
    );
    let closure = report
        .checks
        .iter()
        .find(|c| c.check_name == "closure")
        .unwrap();
    assert_eq!((closure.seed, closure.points_sampled), (77, 7));
    assert_eq!(closure.tolerance, 1e-30);
    assert_eq!(code, if closure.passed() { 0 } else { 1 });
    let bad = cotlift(&["verify", cfg.to_str().unwrap(), "--tol-override", "closure"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn presets_lists_families_and_shipped_configs() {
    let out = cotlift(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "constant",
        "affine",
        "exponential",
        "polynomial",
        "alpha_beta_para_kahler.json",
    ] {
        assert!(text.contains(name), "{text}");
    }
    let shown = cotlift(&["presets", "--show", "alpha_beta_para_kahler.json"]);
    assert_eq!(String::from_utf8_lossy(&shown.stdout), PARA_KAHLER);
}
