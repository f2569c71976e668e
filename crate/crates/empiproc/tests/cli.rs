use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("empiproc-cli-{}-{name}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.0.join(rel)
    }

    fn write(&self, rel: &str, text: &str) -> PathBuf {
        let p = self.path(rel);
        fs::write(&p, text).unwrap();
        p
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_empiproc"))
        .args(args)
        .env_remove("EMPIPROC_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["no-such-command"])), 4);
    assert_eq!(code(&run(&["simulate", "--bogus"])), 4);
    let scratch = Scratch::new("threads");
    let out = run(&[
        "--threads",
        "0",
        "--out",
        s(&scratch.0),
        "validate-matrix",
        "--matrix",
        "[[2,1],[1,1]]",
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn validate_matrix_classifies() {
    let scratch = Scratch::new("validate");
    let out_dir = scratch.path("out");
    let out = run(&[
        "--out",
        s(&out_dir),
        "validate-matrix",
        "--matrix",
        "[[2,1],[1,1]]",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ergodic"], true);
    assert_eq!(v["hyperbolic"], true);
    assert_eq!(v["det_sign"], 1);
    assert_eq!(json(&out_dir.join("validate.json")), v);

    let out = run(&[
        "--out",
        s(&out_dir),
        "validate-matrix",
        "--matrix",
        "[[1,1],[0,1]]",
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ergodic"], false);
    assert_eq!(v["hyperbolic"], false);
    assert_eq!(v["cyclotomic_factors"], serde_json::json!([1]));

    let out = run(&[
        "--out",
        s(&out_dir),
        "validate-matrix",
        "--matrix",
        "[[2,0],[0,1]]",
    ]);
    assert_eq!(code(&out), 2);
    let diag: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(diag["exit"], 2);

    assert_eq!(
        code(&run(&[
            "--out",
            s(&out_dir),
            "validate-matrix",
            "--matrix",
            "[[1"
        ])),
        4
    );
}

#[test]
fn config_and_input_errors() {
    let scratch = Scratch::new("config");
    let bad = scratch.write("bad.json", "{ not json");
    assert_eq!(code(&run(&["--config", s(&bad), "simulate"])), 5);
    let unknown = scratch.write("unknown.json", r#"{"replicatez": 3}"#);
    assert_eq!(code(&run(&["--config", s(&unknown), "simulate"])), 5);
    let missing = scratch.path("absent.json");
    assert_eq!(code(&run(&["--config", s(&missing), "simulate"])), 6);
    let empty = scratch.path("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(
        code(&run(&[
            "--input",
            s(&empty),
            "--out",
            s(&scratch.path("o")),
            "empirical"
        ])),
        6
    );
    assert_eq!(
        code(&run(&[
            "--input",
            s(&scratch.path("nowhere")),
            "--out",
            s(&scratch.path("o")),
            "mixing"
        ])),
        6
    );
}

fn small_config(scratch: &Scratch, seed: u64) -> PathBuf {
    scratch.write(
        &format!("config-{seed}.json"),
        &format!(r#"{{"generator": {{"kind": "iid", "d": 2}}, "n": 256, "replicates": 500, "seed": {seed}, "m": 4}}"#),
    )
}

#[test]
fn simulate_then_analyse_saved_paths() {
    let scratch = Scratch::new("pipeline");
    let cfg = small_config(&scratch, 7);
    let sim = scratch.path("sim");
    let out = run(&["--config", s(&cfg), "--out", s(&sim), "simulate"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let listing = json(&sim.join("simulate.json"));
    assert_eq!(listing["replicates"], 500);
    assert!(sim.join("paths/path_00000.csv").exists());
    let meta = json(&sim.join("paths/path_00000.csv.meta.json"));
    assert_eq!(meta["seed"], 7);

    // Reading the saved paths reproduces the in-memory run bit for bit.
    let from_files = scratch.path("from_files");
    let direct = scratch.path("direct");
    let out = run(&[
        "--config",
        s(&cfg),
        "--input",
        s(&sim.join("paths")),
        "--out",
        s(&from_files),
        "empirical",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        code(&run(&[
            "--config",
            s(&cfg),
            "--out",
            s(&direct),
            "empirical"
        ])),
        0
    );
    assert_eq!(
        fs::read(from_files.join("field_00000.csv")).unwrap(),
        fs::read(direct.join("field_00000.csv")).unwrap()
    );

    let out = run(&[
        "--config",
        s(&cfg),
        "--input",
        s(&sim.join("paths")),
        "--out",
        s(&from_files),
        "fidi",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fidi = json(&from_files.join("fidi.json"));
    for r in fidi["report"]["results"].as_array().unwrap() {
        if let Some(ratio) = r["variance_ratio"].as_f64() {
            assert!((0.8..=1.2).contains(&ratio), "{ratio}");
        }
    }
    assert_eq!(code(&run(&["--out", s(&from_files), "report"])), 0);
    assert!(from_files.join("summary.json").exists());
}

#[test]
fn outputs_are_deterministic_and_hashed() {
    let scratch = Scratch::new("determinism");
    let cfg = small_config(&scratch, 11);
    let (a, b) = (scratch.path("a"), scratch.path("b"));
    for (dir, threads) in [(&a, "1"), (&b, "2")] {
        let out = run(&[
            "--config",
            s(&cfg),
            "--threads",
            threads,
            "--out",
            s(dir),
            "limit",
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["gamma.csv", "gamma.json", "w_00000.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let ha = json(&a.join("gamma.json.meta.json"))["config_hash"].clone();
    assert_eq!(ha.as_str().unwrap().len(), 64);
    assert_eq!(ha, json(&b.join("gamma.json.meta.json"))["config_hash"]);

    let c = scratch.path("c");
    assert_eq!(
        code(&run(&[
            "--config",
            s(&cfg),
            "--seed",
            "12",
            "--out",
            s(&c),
            "limit"
        ])),
        0
    );
    assert_ne!(ha, json(&c.join("gamma.json.meta.json"))["config_hash"]);
    assert_ne!(
        fs::read(a.join("gamma.csv")).unwrap(),
        fs::read(c.join("gamma.csv")).unwrap()
    );
}

#[test]
fn seed_precedence() {
    let scratch = Scratch::new("seed");
    let plain = scratch.write("plain.json", r#"{"n": 16, "replicates": 2}"#);
    let sim = |extra: &[&str], env: Option<&str>, out: &Path| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_empiproc"));
        cmd.env_remove("EMPIPROC_SEED");
        if let Some(v) = env {
            cmd.env("EMPIPROC_SEED", v);
        }
        cmd.args(["--config", s(&plain), "--out", s(out)])
            .args(extra)
            .arg("simulate");
        assert!(cmd.status().unwrap().success());
        json(&out.join("simulate.json.meta.json"))["seed"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(sim(&[], None, &scratch.path("a")), 1);
    assert_eq!(sim(&[], Some("99"), &scratch.path("b")), 99);
    assert_eq!(sim(&["--seed", "5"], Some("99"), &scratch.path("c")), 5);
    let seeded = scratch.write("seeded.json", r#"{"n": 16, "replicates": 2, "seed": 3}"#);
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_empiproc"));
    cmd.env("EMPIPROC_SEED", "99").args([
        "--config",
        s(&seeded),
        "--out",
        s(&scratch.path("d")),
        "simulate",
    ]);
    assert!(cmd.status().unwrap().success());
    assert_eq!(json(&scratch.path("d/simulate.json.meta.json"))["seed"], 3);
}

/// Paths whose first coordinate is frozen per replicate: covariances never decay.
fn frozen_paths(dir: &Path, replicates: usize, n: usize) {
    fs::create_dir_all(dir).unwrap();
    for r in 0..replicates {
        let x = (r as f64 + 0.5) / replicates as f64;
        let mut text = String::from("k,x1,x2\n");
        for k in 0..n {
            text.push_str(&format!(
                "{k},{x},{}\n",
                (k as f64 * 0.618_033_988_75).fract()
            ));
        }
        fs::write(dir.join(format!("path_{r:05}.csv")), text).unwrap();
    }
}

#[test]
fn statistical_failures_and_warn_only() {
    let scratch = Scratch::new("warn");
    let input = scratch.path("frozen");
    frozen_paths(&input, 60, 40);
    let out = run(&[
        "--input",
        s(&input),
        "--out",
        s(&scratch.path("o")),
        "mixing",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let diag: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(diag["error"], "statistical");

    let out = run(&[
        "--input",
        s(&input),
        "--out",
        s(&scratch.path("o")),
        "--warn-only",
        "mixing",
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn mismatched_input_dimension_is_an_io_error() {
    let scratch = Scratch::new("dims");
    let input = scratch.path("frozen");
    frozen_paths(&input, 3, 8);
    let cfg = scratch.write("d3.json", r#"{"generator": {"kind": "iid", "d": 3}}"#);
    assert_eq!(
        code(&run(&[
            "--config",
            s(&cfg),
            "--input",
            s(&input),
            "--out",
            s(&scratch.path("o")),
            "empirical"
        ])),
        7
    );
}
