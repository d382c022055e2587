//! End-to-end tests of the gaplab binary: exit codes, byte-identity of the
//! written artifacts, and conformance of the JSON outputs to the published
//! schemas.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gaplab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gaplab"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).expect("file exists")).expect("valid json")
}

/// Validates the JSON Schema subset the published schemas use: type, enum,
/// required, properties, additionalProperties (boolean form), items,
/// minimum, exclusiveMinimum.
fn validate(value: &Value, schema: &Value, path: &str, errors: &mut Vec<String>) {
    let obj = schema.as_object().expect("schema node is an object");
    if let Some(t) = obj.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "number" => value.is_number(),
            "integer" => value.as_f64().map(|v| v.fract() == 0.0).unwrap_or(false),
            other => panic!("schema uses unsupported type '{other}'"),
        };
        if !ok {
            errors.push(format!("{path}: expected {t}, got {value}"));
            return;
        }
    }
    if let Some(allowed) = obj.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            errors.push(format!("{path}: {value} not one of {allowed:?}"));
        }
    }
    if let Some(min) = obj.get("minimum").and_then(Value::as_f64) {
        if value.as_f64().map(|v| v < min).unwrap_or(false) {
            errors.push(format!("{path}: {value} below minimum {min}"));
        }
    }
    if let Some(min) = obj.get("exclusiveMinimum").and_then(Value::as_f64) {
        if value.as_f64().map(|v| v <= min).unwrap_or(false) {
            errors.push(format!("{path}: {value} not above {min}"));
        }
    }
    if let Some(map) = value.as_object() {
        if let Some(req) = obj.get("required").and_then(Value::as_array) {
            for r in req {
                let r = r.as_str().expect("required entries are strings");
                if !map.contains_key(r) {
                    errors.push(format!("{path}: missing required '{r}'"));
                }
            }
        }
        let props = obj.get("properties").and_then(Value::as_object);
        let closed = obj.get("additionalProperties").and_then(Value::as_bool) == Some(false);
        for (k, v) in map {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => validate(v, sub, &format!("{path}.{k}"), errors),
                None if closed => errors.push(format!("{path}: unexpected property '{k}'")),
                None => {}
            }
        }
    }
    if let (Some(arr), Some(items)) = (value.as_array(), obj.get("items")) {
        for (i, v) in arr.iter().enumerate() {
            validate(v, items, &format!("{path}[{i}]"), errors);
        }
    }
}

fn assert_valid(value: &Value, schema_file: &str) {
    let schema = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema_file));
    let mut errors = Vec::new();
    validate(value, &schema, "$", &mut errors);
    assert!(errors.is_empty(), "schema violations against {schema_file}: {errors:#?}");
}

const SMALL_CONFIG: &str = r#"{
  "scenario": "torus_sl2",
  "n": 300,
  "paths": 24,
  "seed": 5,
  "horizons": [100, 400],
  "stride": 30,
  "csv_paths": 2
}"#;

#[test]
fn list_scenarios_lists_all_six() {
    let out = gaplab(&["list-scenarios"], &[]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    for id in [
        "torus_sl2",
        "q_torus3",
        "heisenberg_h7",
        "scenery_free_group",
        "motion_group",
        "coin_iid",
    ] {
        assert!(text.contains(id), "missing {id}");
    }
}

#[test]
fn config_errors_exit_2() {
    let out = gaplab(&["simulate", "--paths", "5"], &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("seed is mandatory"));

    let out = gaplab(&["simulate", "--seed", "1", "--paths", "0"], &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("paths"));

    let out = gaplab(&["simulate", "--seed", "1", "--scenario", "nope"], &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("unknown scenario"));
}

#[test]
fn spectral_without_torus_factor_exits_2_with_explanation() {
    for scenario in ["scenery_free_group", "motion_group", "coin_iid"] {
        let out = gaplab(&["spectral", "--scenario", scenario, "--seed", "1"], &[]);
        assert_eq!(code(&out), 2, "{scenario}");
        let msg = stderr_of(&out);
        assert!(msg.contains(scenario), "message names the scenario: {msg}");
        assert!(msg.contains("no torus factor"), "message names the limitation: {msg}");
    }
}

#[test]
fn artifacts_byte_identical_across_threads_and_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, SMALL_CONFIG).unwrap();
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    let run_a = gaplab(
        &["--threads", "1", "simulate", "--config", cfg.to_str().unwrap(), "--out", out_a.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&run_a), 0, "{}", stderr_of(&run_a));
    // Same run with a larger pool picked up from the env fallback.
    let run_b = gaplab(
        &["simulate", "--config", cfg.to_str().unwrap(), "--out", out_b.to_str().unwrap()],
        &[("GAPLAB_THREADS", "4")],
    );
    assert_eq!(code(&run_b), 0, "{}", stderr_of(&run_b));

    let list = |d: &Path| {
        let mut names: Vec<String> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        names
    };
    let names = list(&out_a);
    assert_eq!(names, list(&out_b));
    assert!(names.contains(&"summary.json".to_string()));
    assert!(names.contains(&"trajectory_001.csv".to_string()));
    for name in &names {
        if name == "run.log" {
            continue; // wall-clock timings; documented exclusion
        }
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between thread counts");
    }
}

#[test]
fn summary_and_config_validate_against_published_schemas() {
    let cfg_value: Value = serde_json::from_str(SMALL_CONFIG).unwrap();
    assert_valid(&cfg_value, "config.schema.json");

    // The validator is not vacuous: a bad scenario and a zero stride are
    // rejected.
    let schema = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/config.schema.json"));
    let bad: Value = serde_json::from_str(r#"{"scenario": "nope", "stride": 0}"#).unwrap();
    let mut errors = Vec::new();
    validate(&bad, &schema, "$", &mut errors);
    assert_eq!(errors.len(), 2, "{errors:?}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, SMALL_CONFIG).unwrap();
    let out_dir = dir.path().join("out");
    let run = gaplab(
        &["simulate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&run), 0, "{}", stderr_of(&run));
    let summary = read_json(&out_dir.join("summary.json"));
    assert_valid(&summary, "summary.schema.json");
    assert_eq!(summary["scenario"], "torus_sl2");
    assert_eq!(summary["paths"], 24);
    assert_eq!(summary["trajectory_files"].as_array().unwrap().len(), 2);
}

#[test]
fn flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, SMALL_CONFIG).unwrap();
    let out_dir = dir.path().join("out");
    let run = gaplab(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--scenario",
            "coin_iid",
            "--paths",
            "10",
            "--steps",
            "64",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&run), 0, "{}", stderr_of(&run));
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["scenario"], "coin_iid");
    assert_eq!(summary["paths"], 10);
    assert_eq!(summary["n"], 64);
    assert_eq!(summary["dim"], 1);
}

#[test]
fn spectral_small_run_honors_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{
          "scenario": "torus_sl2",
          "seed": 3,
          "ball_radius": 6.0,
          "lambda_grid": { "max": 1.6, "step": 0.8 }
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let run = gaplab(
        &["spectral", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&run), 0, "{}", stderr_of(&run));
    let rep = read_json(&out_dir.join("spectral.json"));

    let dual = rep["dual"].as_array().unwrap();
    assert_eq!(dual.len(), 3, "radius estimates at R/4, R/2, R");
    for est in dual {
        assert!(est["radius"].as_f64().unwrap() < 1.0);
    }

    let twisted = rep["twisted"].as_array().unwrap();
    assert_eq!(twisted.len(), 5, "origin + 2 points per axis");
    let origin = twisted
        .iter()
        .find(|r| r["lambda"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() == 0.0))
        .expect("origin row present");
    assert_eq!(origin["k_re"].as_f64().unwrap(), 1.0, "untwisted eigenvalue is exactly 1");
    assert_eq!(origin["k_im"].as_f64().unwrap(), 0.0);

    assert_eq!(rep["scan"]["flagged_count"], 1, "only the origin is flagged");
    assert!(rep["poisson"]["converged"].as_bool().unwrap());
    assert!(rep["poisson"]["residual_max"].as_f64().unwrap() < 1e-8);
}

#[test]
fn verify_quick_writes_report_without_wall_clock() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let run = gaplab(&["verify", "--quick", "--out", out_dir.to_str().unwrap()], &[]);
    assert_eq!(code(&run), 0, "{}", stderr_of(&run));
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("criterion 14"));

    let rep = read_json(&out_dir.join("verify.json"));
    assert_eq!(rep["quick"], true);
    assert_eq!(rep["mandatory_failures"], 0);
    let criteria = rep["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 14);
    for c in criteria {
        assert!(c["seed"].is_u64());
        assert!(!c["checks"].as_array().unwrap().is_empty());
        let first = &c["checks"][0];
        assert!(first["measured"].is_number() && first["threshold"].is_number());
        // Wall-clock stays out of the artifact so re-runs stay identical.
        assert!(c.get("runtime_sec").is_none());
    }
}
