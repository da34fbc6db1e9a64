use std::path::Path;
use std::process::{Command, Output};

fn run(config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signembed"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg("2")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const IDENTITY: &str = r#"command = "distort"
seed = 11
trials = 25

[operator]
kind = "identity"
n = 16

[test_set]
variant = "subspace_ball"
n = 16
d = 3
"#;

#[test]
fn identity_distort_reports_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), IDENTITY);
    let out = run(&cfg, &dir.path().join("out"));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("sup-distortion median 0.000000 "),
        "{stdout}"
    );
    let csv = std::fs::read_to_string(dir.path().join("out/distortion.csv")).unwrap();
    assert!(csv.starts_with("trial,sup_distortion,exactness,seed,stream\n0,"));
    for line in csv.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v < 1e-14, "{line}");
    }
    assert_eq!(csv.lines().count(), 26);
}

#[test]
fn negative_trials_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &IDENTITY.replace("trials = 25", "trials = -1"));
    let out = run(&cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials must be ≥ 1"));
}

#[test]
fn missing_files_exit_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&dir.path().join("absent.toml"), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));

    let cfg = write_config(
        dir.path(),
        &IDENTITY.replace(
            "kind = \"identity\"\nn = 16",
            "kind = \"file\"\npath = \"missing.txt\"",
        ),
    );
    let out = run(&cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("operator.path"));

    let cfg = write_config(
        dir.path(),
        &IDENTITY.replace(
            "variant = \"subspace_ball\"\nn = 16\nd = 3",
            "file = \"nope.set\"",
        ),
    );
    let out = run(&cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("test_set.file"));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{IDENTITY}\n[width]\nsamples = 500\nbins = 3\n"),
    );
    let out = run(&cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn enumeration_guard_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"command = "regularity"
seed = 1

[operator]
kind = "gaussian"
m = 32
n = 64

[regularity]
mode = "exact"
max_k = 10
"#,
    );
    let out = run(&cfg, &dir.path().join("out"));
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn regularity_from_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.txt"), "2 3\n1 0 0\n0 1 1\n").unwrap();
    let cfg = write_config(
        dir.path(),
        r#"command = "regularity"
seed = 1

[operator]
kind = "file"
path = "a.txt"

[regularity]
delta = 0.5
"#,
    );
    let out = run(&cfg, &dir.path().join("out"));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/profile.csv")).unwrap();
    let raw: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(csv.starts_with("k,raw,mode,trials\n1,"));
    for (got, want) in raw.iter().zip([0.0, 1.0, 1.0]) {
        assert!((got - want).abs() < 1e-14, "{csv}");
    }
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/regularity.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["k_star"], 1);
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e != "toml"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn effective_config_reproduces_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("t.set"),
        "variant: finite_points\nn: 32\npoints: 20\n",
    )
    .unwrap();
    let text = r#"command = "tails"
seed = 5
trials = 200

[operator]
kind = "circulant"
m = 8
n = 32
rows = "random"

[test_set]
file = "t.set"

[width]
samples = 1000

[bound]
delta = 0.3
"#;
    let cfg = write_config(dir.path(), text);
    let out = run(&cfg, &dir.path().join("first"));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), text);

    let echoed = dir.path().join("first/effective_config.toml");
    let copy = dir.path().join("echo.toml");
    std::fs::copy(&echoed, &copy).unwrap();
    let again = run(&copy, &dir.path().join("second"));
    assert_eq!(
        again.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
    let a = artifacts(&dir.path().join("first"));
    let b = artifacts(&dir.path().join("second"));
    assert_eq!(a, b);
    assert!(a.iter().any(|(n, _)| n == "tails.json"));
    assert!(a.iter().any(|(n, _)| n == "survival.svg"));
}

#[test]
fn width_and_scaling_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"command = "width"
seed = 2

[test_set]
variant = "l1_ball"
n = 64

[width]
samples = 2000
"#,
    );
    let out = run(&cfg, &dir.path().join("w"));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("w/width.json").exists());

    let cfg = write_config(
        dir.path(),
        r#"command = "scaling"
seed = 2
trials = 20

[scaling]
family = "circulant"
axis = "subspace_dim"
values = [1, 2, 4, 8]
n = 64
m = 16

[width]
samples = 500
"#,
    );
    let out = run(&cfg, &dir.path().join("s"));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("s/scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let too_small = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("[1, 2, 4, 8]", "[1, 2, 4]");
    let cfg = write_config(dir.path(), &too_small);
    assert_eq!(run(&cfg, &dir.path().join("s2")).status.code(), Some(2));
}

#[test]
fn baseline_with_identity_has_zero_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &IDENTITY.replace("\"distort\"", "\"baseline\""));
    let out = run(&cfg, &dir.path().join("b"));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b/baseline.json")).unwrap())
            .unwrap();
    assert!(json["baseline"]["median_ratio"].as_f64().unwrap() < 1e-12);
    assert_eq!(json["baseline"]["degenerate"], false);
}
