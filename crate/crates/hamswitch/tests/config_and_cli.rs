//! Config schema contract and the CLI dispatch surface (exit codes, output
//! files, byte-stable regeneration).

use std::path::{Path, PathBuf};
use std::process::Command;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(path: &Path) -> Result<hamswitch::config::LoadedRun, hamswitch::config::ConfigError> {
    hamswitch::config::load_config(path)
}

#[test]
fn bundled_configs_load() {
    for name in ["reference.toml", "linear.toml", "unit-chain.toml", "smoke.toml"] {
        let run = load(&configs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(run.model.states() >= 1);
    }
}

#[test]
fn defaults_fill_optional_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("minimal.toml");
    std::fs::write(
        &path,
        r#"
[model]
decay_rate = 1.0
a = 0.0
b = 1.0

[[model.regime]]
b1 = { family = "zero" }
b2 = { family = "zero" }
sigma = { family = "constant", value = 1.0 }

[model.rates]
c = [[0.0]]
beta = [[0.0]]
shape = "one"

[initial]
tail = { family = "zero" }
regime = 1

[simulation]
horizon = 1.0
step = 0.01
"#,
    )
    .unwrap();
    let run = load(&path).unwrap();
    assert_eq!(run.config.simulation.paths, 10_000);
    assert_eq!(run.config.simulation.seed, 42);
    assert_eq!(run.config.zvonkin.lambdas, vec![1.0, 10.0, 100.0]);
    assert_eq!(run.initial_regime, 0);
}

fn expect_error(body: &str, needle: &str) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, body).unwrap();
    let err = match load(&path) {
        Ok(_) => panic!("config should be rejected"),
        Err(e) => e,
    };
    let msg = err.to_string();
    assert!(
        msg.contains(needle),
        "error message {msg:?} does not mention {needle:?}"
    );
}

const VALID_PREFIX: &str = r#"
[model]
decay_rate = 1.0
a = 0.0
b = 1.0

[[model.regime]]
b1 = { family = "zero" }
b2 = { family = "zero" }
sigma = { family = "constant", value = 1.0 }

[model.rates]
c = [[0.0]]
beta = [[0.0]]
shape = "one"

[initial]
tail = { family = "zero" }
regime = 1
"#;

#[test]
fn negative_step_is_rejected_by_name() {
    expect_error(
        &format!("{VALID_PREFIX}\n[simulation]\nhorizon = 1.0\nstep = -0.01\n"),
        "simulation.step",
    );
}

#[test]
fn negative_rate_entry_is_rejected_by_name() {
    let body = r#"
[model]
decay_rate = 1.0
a = 0.0
b = 1.0

[[model.regime]]
b1 = { family = "zero" }
b2 = { family = "zero" }
sigma = { family = "constant", value = 1.0 }

[[model.regime]]
b1 = { family = "zero" }
b2 = { family = "zero" }
sigma = { family = "constant", value = 1.0 }

[model.rates]
c = [[0.0, -1.0], [1.0, 0.0]]
beta = [[0.0, 0.0], [0.0, 0.0]]
shape = "one"

[initial]
tail = { family = "zero" }
regime = 1

[simulation]
horizon = 1.0
step = 0.01
"#;
    expect_error(body, "model.rates.c[1][2]");
}

#[test]
fn unknown_keys_are_rejected() {
    expect_error(
        &format!("{VALID_PREFIX}\n[simulation]\nhorizon = 1.0\nstep = 0.01\nbogus_key = 3\n"),
        "bogus_key",
    );
}

#[test]
fn out_of_range_regime_is_rejected() {
    let body = VALID_PREFIX.replace("regime = 1", "regime = 2")
        + "\n[simulation]\nhorizon = 1.0\nstep = 0.01\n";
    expect_error(&body, "initial.regime");
}

#[test]
fn wrong_dimension_initial_nodes_rejected() {
    let body = format!(
        "{}\nnodes = [[-1.0, 0.0], [0.0, 0.0]]\n[simulation]\nhorizon = 1.0\nstep = 0.01\n",
        VALID_PREFIX
    );
    expect_error(&body, "initial.nodes");
}

// ---------------------------------------------------------------------------
// CLI dispatch.
// ---------------------------------------------------------------------------

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hamswitch"))
}

#[test]
fn missing_config_flag_exits_two() {
    let out = binary().args(["simulate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_two() {
    let out = binary().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nonexistent_config_exits_two() {
    let out = binary()
        .args(["simulate", "--config", "/nonexistent/x.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_suite_exits_two() {
    let cfg = configs_dir().join("smoke.toml");
    let out = binary()
        .args(["validate", "--config", cfg.to_str().unwrap(), "--suite", "bogus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_byte_stable_outputs() {
    let cfg = configs_dir().join("smoke.toml");
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = binary()
            .args([
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--trace",
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for file in ["estimates.csv", "trace.jsonl"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    // summary.json differs only in wall time; compare with it stripped.
    let strip = |p: &Path| {
        let text = std::fs::read_to_string(p.join("summary.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("wall_secs");
        v
    };
    assert_eq!(strip(&out_a), strip(&out_b));
}

#[test]
fn validate_smoke_passes_and_report_renders() {
    let cfg = configs_dir().join("smoke.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .args([
            "validate",
            "--config",
            cfg.to_str().unwrap(),
            "--suite",
            "reweight",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = dir.path().join("validation.json");
    assert!(summary.exists());
    let rendered = binary()
        .args(["report", "--input", summary.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(rendered.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&rendered.stdout).contains("E[M_T] = 1"));
}

#[test]
fn validate_all_suites_via_cli() {
    let cfg = configs_dir().join("smoke.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .args([
            "validate",
            "--config",
            cfg.to_str().unwrap(),
            "--suite",
            "all",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    for suite in ["assumptions", "martingale", "girsanov", "reweight", "mt-continuity", "feller"] {
        assert!(text.contains(&format!("suite {suite}")), "missing suite {suite}");
    }
}

#[test]
fn validate_fails_with_exit_one_on_misdeclared_model() {
    // Declared H below the tightest dominating row sum: the assumption
    // preamble must fail and the exit code must be 1.
    let cfg = configs_dir().join("smoke.toml");
    let text = std::fs::read_to_string(cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, text.replace("bound = 0.5", "bound = 0.4")).unwrap();
    let out = binary()
        .args([
            "validate",
            "--config",
            bad.to_str().unwrap(),
            "--suite",
            "reweight",
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zvonkin_writes_scan_csv() {
    let cfg = configs_dir().join("smoke.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .args([
            "zvonkin",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("zvonkin.csv")).unwrap();
    assert!(csv.starts_with("lambda,residual,gradient_bound,sup_f"));
    assert_eq!(csv.lines().count(), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("lambda*"));
}
