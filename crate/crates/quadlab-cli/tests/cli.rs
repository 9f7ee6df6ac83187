use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn quadlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadlab"))
        .args(args)
        .env_remove("QUADLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    format!("--out={}", dir.display())
}

fn manifest(dir: &Path) -> toml::Table {
    toml::from_str(&fs::read_to_string(dir.join("manifest.toml")).unwrap()).unwrap()
}

const SMALL_PERSISTENCE: &[&str] = &[
    "persistence",
    "--beta=0.5,0.8",
    "--n-range=6..7",
    "--samples=60",
];

#[test]
fn certify_chebyshev_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quadlab(&["certify", "--c0=-2", &out_arg(tmp.path())]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(tmp.path().join("certificate.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..2], &["1", "1"]);
    assert_eq!(row[6], "true");
}

#[test]
fn superattracting_map_is_rejected_with_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quadlab(&["certify", "--c0=-1.7548776662466927", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(tmp.path().join("manifest.toml").exists());
}

#[test]
fn persistence_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let mut args = SMALL_PERSISTENCE.to_vec();
        let o = out_arg(d);
        args.push(&o);
        assert_eq!(quadlab(&args).status.code(), Some(0));
    }
    assert_eq!(
        fs::read(a.join("persistence.csv")).unwrap(),
        fs::read(b.join("persistence.csv")).unwrap()
    );
}

#[test]
fn replay_from_manifest_on_other_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let mut args = SMALL_PERSISTENCE.to_vec();
    let o = out_arg(&first);
    args.extend([o.as_str(), "--threads=1"]);
    assert_eq!(quadlab(&args).status.code(), Some(0));
    for threads in ["2", "3"] {
        let again = tmp.path().join(format!("again{threads}"));
        let o = quadlab(&[
            "replay",
            &format!("--manifest={}", first.join("manifest.toml").display()),
            &out_arg(&again),
            &format!("--threads={threads}"),
        ]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(o.status.code(), Some(0), "{stdout}");
        assert!(stdout.contains("persistence.csv: identical"), "{stdout}");
        assert_eq!(
            fs::read(first.join("persistence.csv")).unwrap(),
            fs::read(again.join("persistence.csv")).unwrap()
        );
    }
}

#[test]
fn altered_output_makes_replay_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    assert_eq!(
        quadlab(&["transversality", &out_arg(&first)]).status.code(),
        Some(0)
    );
    let path = first.join("manifest.toml");
    let text = fs::read_to_string(&path).unwrap();
    let mut doc: toml::Table = toml::from_str(&text).unwrap();
    doc["outputs"]["transversality.csv"] = toml::Value::String("0".repeat(64));
    fs::write(&path, toml::to_string(&doc).unwrap()).unwrap();
    let o = quadlab(&["replay", &format!("--manifest={}", path.display())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("DIFFERS"));
}

#[test]
fn usage_errors_exit_one_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("never");
    for args in [
        vec!["breakdown", "--theta=2"],
        vec!["breakdown", "--samples=0"],
        vec!["persistence", "--beta=0.5,1.5"],
        vec!["breakdown", "--n-range=9..3"],
        vec!["breakdown", "--no-such-flag=1"],
        vec!["certify", "--c0=abc"],
        vec!["no-such-command"],
    ] {
        let mut a = args.clone();
        let o = out_arg(&dir);
        a.push(&o);
        let out = quadlab(&a);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
        assert!(!dir.exists(), "{args:?} wrote artifacts");
    }
}

#[test]
fn help_exits_zero_and_shows_defaults() {
    let o = quadlab(&["breakdown", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(
        s.contains("--eps-f") && s.contains("[default: 0.01]"),
        "{s}"
    );
}

#[test]
fn config_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 11\nterms = 30\n[transversality]\nterms = 40\ntol = 1e-6\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = quadlab(&[
        "transversality",
        &format!("--config={}", cfg.display()),
        "--tol=1e-8",
        &out_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m = manifest(&out);
    assert_eq!(m["config"]["seed"].as_integer(), Some(11));
    assert_eq!(m["config"]["terms"].as_integer(), Some(40));
    assert_eq!(m["config"]["tol"].as_float(), Some(1e-8));
    let rows = fs::read_to_string(out.join("transversality.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 42);
}

#[test]
fn environment_names_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_quadlab"))
        .args(["certify"])
        .env("QUADLAB_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.join("certificate.csv").exists());
    assert!(dir.join("summary.txt").exists());
}
