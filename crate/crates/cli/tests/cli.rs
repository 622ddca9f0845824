use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use labgauge::{Report, ScenarioFile};
use labgauge_core::random;

fn labgauge(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_labgauge"));
    cmd.args(args).env_remove("LABGAUGE_TOLERANCE_SCALE");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn canonical_file(dir: &tempfile::TempDir) -> PathBuf {
    let path = dir.path().join("canonical.json");
    let out = labgauge(&["canonical", "--algebra", "u1", "--ndim", "3", "--out", path_str(&path)], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn write_scenario(dir: &tempfile::TempDir, name: &str, file: &ScenarioFile) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, file.to_json()).unwrap();
    path
}

fn su2_scenario(seed: u64) -> ScenarioFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random::compatible_scenario(&mut rng, "su2").unwrap();
    ScenarioFile::from_scenario(&s, Some("su2"), seed)
}

fn verify_json(path: &Path, suite: &str, extra: &[&str]) -> (Output, Report) {
    let mut args = vec!["verify", path_str(path), "--suite", suite, "--points", "50", "--seed", "7", "--format", "json"];
    args.extend_from_slice(extra);
    let out = labgauge(&args, &[]);
    let report: Report = serde_json::from_slice(&out.stdout).expect("json report");
    (out, report)
}

#[test]
fn canonical_scenario_passes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let path = canonical_file(&dir);
    let (out, report) = verify_json(&path, "all", &[]);
    assert!(out.status.success());
    assert!(report.records.iter().all(|r| r.pass));
    assert_eq!(report.records.len(), 24);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["obstruction"]["verdict"], "NonzeroRepresentativeButExact");
    assert_eq!(v["certificate"]["issued"], true);
    assert!(!String::from_utf8_lossy(&out.stdout).contains("seconds"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = canonical_file(&dir);
    let (a, _) = verify_json(&path, "all", &[]);
    let (b, _) = verify_json(&path, "all", &[]);
    assert_eq!(a.stdout, b.stdout);
    let parsed: Report = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(labgauge::emit_report(&parsed, labgauge::Format::Json).as_bytes(), &a.stdout[..]);
}

#[test]
fn random_su2_redefinition_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(&dir, "su2.json", &su2_scenario(5));
    let (out, report) = verify_json(&path, "redefinition", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    for r in &report.records {
        assert!(r.residual.unwrap() <= 1e-8, "{}: {:?}", r.id, r.residual);
    }
    assert_eq!(report.redefinitions.len(), 5);
}

#[test]
fn non_invariant_fibre_metric_fails_gauge_suite() {
    let dir = tempfile::tempdir().unwrap();
    let mut file = su2_scenario(9);
    file.kappa = vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]];
    let path = write_scenario(&dir, "kappa.json", &file);
    let (out, report) = verify_json(&path, "gauge", &[]);
    assert_eq!(out.status.code(), Some(1));
    let rec = report.records.iter().find(|r| r.id == "lagrangian.gauge_invariance").unwrap();
    assert!(!rec.pass);
    assert!(rec.note.as_deref().unwrap().contains("PreconditionFailed"));
    let other = report.records.iter().find(|r| r.id == "gauge.covariance").unwrap();
    assert!(other.pass, "the suite keeps running after a failure");
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = labgauge(&["verify", path_str(&dir.path().join("nope.json"))], &[]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("FileNotFound"));

    let text = std::fs::read_to_string(canonical_file(&dir)).unwrap().replacen('{', "{\n  \"zetta\": {},", 1);
    let typo = dir.path().join("typo.json");
    std::fs::write(&typo, text).unwrap();
    let out = labgauge(&["verify", path_str(&typo)], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SchemaError at /zetta"));

    let bad_id = labgauge(&["identity", "leibnitz", path_str(&typo)], &[]);
    assert_eq!(bad_id.status.code(), Some(2));
}

#[test]
fn identity_command_runs_one_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(&dir, "su2.json", &su2_scenario(3));
    let out = labgauge(&["identity", "leibniz_bracket", path_str(&path), "--format", "json"], &[]);
    assert!(out.status.success());
    let report: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.records.len(), 1);
    assert_eq!(report.records[0].id, "identity.leibniz_bracket");
    assert_eq!(report.seed, 3, "seed defaults to the scenario's");
}

#[test]
fn tolerance_scale_and_timings() {
    let dir = tempfile::tempdir().unwrap();
    let path = canonical_file(&dir);
    let args = ["verify", path_str(&path), "--suite", "bianchi", "--format", "json", "--timings"];
    let out = labgauge(&args, &[("LABGAUGE_TOLERANCE_SCALE", "2")]);
    let report: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.records.iter().all(|r| r.seconds.is_some()));
    let bianchi = report.records.iter().find(|r| r.id == "bianchi.defect").unwrap();
    assert_eq!(bianchi.tolerance, 2e-8);
    let bad = labgauge(&args, &[("LABGAUGE_TOLERANCE_SCALE", "-1")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn text_output_has_glyphs_and_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let path = canonical_file(&dir);
    let out = labgauge(&["verify", path_str(&path), "--suite", "obstruction"], &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("✓ invariant.centre"));
    assert!(text.contains("d^nabla zeta has always values in the centre"));
}
