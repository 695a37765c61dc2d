use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn magedge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magedge")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn error_record(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("error.json")).unwrap()).unwrap()
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn band_run_replays_from_its_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"experiment": "theorem1", "B": 2, "L": 8, "V0": 0.3, "epsilon": 0.05}"#);
    let first = tmp.path().join("first");
    let o = magedge(&["theorem1", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap(), "--seeds", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let second = tmp.path().join("second");
    let manifest = first.join("manifest.json");
    let o = magedge(&["theorem1", "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let a = csv_bytes(&first);
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    for expected in ["states.csv", "realizations.csv", "aggregate.csv", "failures.csv", "flux_scan.csv"] {
        assert!(names.contains(&expected), "{expected} missing from {names:?}");
    }
    assert_eq!(a, csv_bytes(&second));
    assert_eq!(
        std::fs::read(&manifest).unwrap(),
        std::fs::read(second.join("manifest.json")).unwrap()
    );

    let o = magedge(&["self-test", "--out", first.to_str().unwrap()]);
    assert!(o.status.success());
}

#[test]
fn precondition_violations_exit_with_the_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"experiment": "theorem1", "B": 1, "L": 8, "V0": 0.3}"#);
    let out = tmp.path().join("out");
    let o = magedge(&["theorem1", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&out);
    assert!(rec["message"].as_str().unwrap().contains("B > 4·V0"), "{rec}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("B > 4·V0"));
}

#[test]
fn schema_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"B": 2, "L": 8, "V0": 0.3, "walls": {"left": {"c": 1}, "right": {"c": 1, "m": 4}}}"#);
    let out = tmp.path().join("out");
    let o = magedge(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&out);
    assert!(rec["path"].as_str().unwrap().starts_with("walls.left"), "{rec}");

    let cfg = write_config(tmp.path(), r#"{"B": 2, "L": 8, "V0": 0.3, "colour": "blue"}"#);
    let o = magedge(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_and_bad_window_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = magedge(&["theorem2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(tmp.path(), r#"{"B": 2, "L": 8, "V0": 0.3}"#);
    let o = magedge(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--window", "3,2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn self_test_fails_on_an_empty_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let o = magedge(&["self-test", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
