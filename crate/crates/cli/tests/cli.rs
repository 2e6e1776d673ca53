use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn intergen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intergen"))
        .current_dir(dir)
        .env_remove("INTERGEN_CONFIG")
        .env_remove("INTERGEN_OUT")
        .env_remove("INTERGEN_SEED")
        .env_remove("INTERGEN_THREADS")
        .env_remove("INTERGEN_SOLUTION")
        .args(args)
        .output()
        .expect("spawn intergen")
}

fn ok(o: &Output) -> String {
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{out}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    out
}

/// One solved example1 directory shared by the downstream tests.
fn solved() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let d = TempDir::new().unwrap();
        ok(&intergen(d.path(), &["--out", "o", "solve"]));
        d
    })
    .path()
}

#[test]
fn validate_reports_trace() {
    let d = TempDir::new().unwrap();
    let out = ok(&intergen(d.path(), &["--out", "o", "validate"]));
    assert!(out.contains("trace(Q-hat) = 1.6445"), "{out}");
    assert!(d.path().join("o/validation.json").exists());
}

#[test]
fn failed_assumptions_exit_2() {
    let d = TempDir::new().unwrap();
    std::fs::write(
        d.path().join("c.toml"),
        "[economy]\nshares = [0.3, 0.05]\nprobs = [0.5, 0.5]\nbeta = 0.9\ndelta = 0.9\n",
    )
    .unwrap();
    let o = intergen(d.path(), &["--config", "c.toml", "--out", "o", "validate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_primitives_exit_2() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("c.toml"), "[economy]\nshares = [0.5, 1.2]\n").unwrap();
    let o = intergen(d.path(), &["--config", "c.toml", "validate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_key_exit_2() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("c.toml"), "[solver]\nsweeps = 3\n").unwrap();
    let o = intergen(d.path(), &["--config", "c.toml", "validate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sweeps"));
}

#[test]
fn missing_solution_exit_2() {
    let d = TempDir::new().unwrap();
    let o = intergen(d.path(), &["--out", "o", "invariant"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solve"));
}

#[test]
fn mismatched_solution_exit_2() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("c.toml"), "[economy]\nshares = [0.45, 0.75]\n").unwrap();
    let sol = solved().join("o/solution.json");
    let o = intergen(
        d.path(),
        &["--config", "c.toml", "--solution", sol.to_str().unwrap(), "debt"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    let dir = solved();
    let sol = dir.join("o/solution.json");
    let sol = sol.to_str().unwrap();
    for out in ["s1", "s2"] {
        ok(&intergen(dir, &["--out", out, "--solution", sol, "--seed", "7", "simulate"]));
    }
    let a = std::fs::read(dir.join("s1/path.csv")).unwrap();
    let b = std::fs::read(dir.join("s2/path.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    ok(&intergen(dir, &["--out", "s3", "--solution", sol, "--seed", "8", "simulate"]));
    assert_ne!(std::fs::read(dir.join("s3/path.csv")).unwrap(), a);
}

#[test]
fn manifest_records_config_hash() {
    let dir = solved();
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("o/manifest-solve.json")).unwrap()).unwrap();
    let hash = m["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(m["command"], "solve");
    assert!(m["outputs"].as_array().unwrap().iter().any(|x| x == "policy.csv"));
    let cfg = dir.join("o").join(m["config_file"].as_str().unwrap());
    assert!(cfg.exists());
    assert!(m["versions"]["intergen"].is_string());
}

#[test]
fn invariant_top_masses() {
    let dir = solved();
    let out = ok(&intergen(dir, &["--out", "o", "invariant"]));
    let masses: Vec<&str> = out.lines().filter(|l| l.contains("mass")).collect();
    assert_eq!(masses.len(), 2, "{out}");
    for l in masses {
        assert!(l.ends_with("mass 0.250000"), "{l}");
    }
}

#[test]
fn shoot_agrees_with_solve() {
    let dir = solved();
    ok(&intergen(dir, &["--out", "o", "shoot"]));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("o/shoot.json")).unwrap()).unwrap();
    assert!(s["ladder_gap"].as_f64().unwrap() < 1e-3);
    assert!(dir.join("o/ladder.csv").exists());
}

#[test]
fn json_format_replaces_csv() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("c.toml"), "[output]\ndir = \"o\"\nformat = \"json\"\n").unwrap();
    ok(&intergen(d.path(), &["--config", "c.toml", "first-best"]));
    assert!(d.path().join("o/first_best.json").exists());
    assert!(!d.path().join("o/first_best.csv").exists());
}
