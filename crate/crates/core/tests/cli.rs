use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn harmap(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HARMAP_OUT")
        .output()
        .expect("spawn harmap")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited by signal")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shoot_writes_csv_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = harmap(&["shoot", "--g", "3", "--j", "0", "--v", "0.1", "--svg"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let file = |ext: &str| dir.path().join(format!("shoot_g3_m1_j0_v0.1.{ext}"));
    for ext in ["csv", "json", "svg"] {
        assert!(file(ext).is_file(), "missing .{ext}");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(file("json")).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["shoot", "--g", "4", "--j", "1", "--v", "-0.4"];
    assert_eq!(code(&harmap(&args, a.path())), 0);
    assert_eq!(code(&harmap(&args, b.path())), 0);
    let name = "shoot_g4_m1_j1_v-0.4.csv";
    let x = fs::read(a.path().join(name)).unwrap();
    let y = fs::read(b.path().join(name)).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn out_directory_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_harmap"))
        .args(["deform", "--metric", "flat_cone", "--scheme", "continue"])
        .env("HARMAP_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("deform_") && n.ends_with(".csv")), "{names:?}");
}

#[test]
fn find_reports_a_bracketing_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = harmap(&["find", "--g", "3", "--j", "1"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let file = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "json"))
        .expect("find json");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn deform_passes_with_every_scheme() {
    let dir = tempfile::tempdir().unwrap();
    for scheme in ["continue", "blend", "ramp"] {
        let o = harmap(&["deform", "--metric", "smoothed", "--scheme", scheme], dir.path());
        assert_eq!(code(&o), 0, "{scheme}: {}", stderr(&o));
    }
}

#[test]
fn literal_sign_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = harmap(&["deform", "--metric", "smoothed", "--literal-sign"], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn bad_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["shoot", "--g", "5", "--j", "0", "--v", "0.1"],
        &["deform", "--metric", "bogus"],
        &["deform", "--metric", "flat_cone", "--scheme", "wiggle"],
        &["shoot", "--g", "3"],
    ];
    for args in cases {
        let o = harmap(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = harmap(&["deform", "--config", "/nonexistent/metric.ini"], dir.path());
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).starts_with("error["), "{}", stderr(&o));
}
