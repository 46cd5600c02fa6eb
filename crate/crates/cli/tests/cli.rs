use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gapcast")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn gapcast")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

/// Parsed CSV body (header dropped), cells split on commas.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect()
}

fn write_tiny_sweep_config(path: &Path) {
    let spec = serde_json::json!({
        "signal": {"type": "sinusoid_mix", "components": [
            {"amplitude": 1.0, "frequency": std::f64::consts::PI / 5.0, "phase": 0.0}
        ]},
        "pattern": {"kind": "periodic", "step": 3},
        "theta": 0,
        "gap": {"center": "pi", "delta": 0.5},
        "gamma_schedule": [5.0, 20.0],
        "r_hat": 1.0,
        "taps": [200],
        "noise_levels": [0.0, 1e-4],
        "noise_seed": 7,
        "targets": [1, 2],
        "masked": true
    });
    fs::write(path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
}

#[test]
fn synth_taps_follow_inverse_factorial_series() {
    let out = run(&["kernel", "synth", "--gamma", "1", "--m", "1", "--taps", "10"]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let rows = csv_rows(&stdout_str(&out));
    assert_eq!(rows.len(), 10);
    let mut fact = 1.0f64;
    for (j, row) in rows.iter().enumerate() {
        fact *= (j + 1) as f64;
        let want = if j % 2 == 0 { 1.0 / fact } else { -1.0 / fact };
        let got: f64 = row[1].parse().unwrap();
        assert_eq!(row[0], j.to_string());
        assert!((got - want).abs() < 1e-12, "tap {j}: {got} vs {want}");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"bad\": true}").unwrap();
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("unknown field"));

    let out = run(&["recover"]);
    assert_eq!(out.status.code(), Some(2), "recover without --config");

    let out = run(&["patterns", "show", "--pattern", "bogus:7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_infeasibility_exits_3() {
    // Unmasked synthesis at a gamma whose response peak drowns the
    // requested window in roundoff must refuse rather than emit garbage.
    let out = run(&["kernel", "synth", "--gamma", "40", "--m", "2", "--taps", "64"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_str(&out).contains("grid cap"));
}

#[test]
fn io_errors_exit_1() {
    let out = run(&[
        "kernel", "synth", "--gamma", "1", "--m", "1", "--taps", "4", "--out",
        "/nonexistent-dir/taps.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_rows_identical_across_parallelism_except_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    write_tiny_sweep_config(&cfg);
    let mut bodies = Vec::new();
    for workers in ["1", "3"] {
        let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--parallel", workers]);
        assert!(out.status.success(), "stderr: {}", stderr_str(&out));
        // Blank the runtime column; everything else must match bytewise.
        let stripped: Vec<String> = stdout_str(&out)
            .lines()
            .map(|l| {
                let mut cells: Vec<&str> = l.split(',').collect();
                if cells.len() == 8 && cells[6] != "runtime_ms" {
                    cells[6] = "-";
                }
                cells.join(",")
            })
            .collect();
        bodies.push(stripped.join("\n"));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn sweep_json_mirrors_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    write_tiny_sweep_config(&cfg);
    let csv = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    let json = run(&["sweep", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(csv.status.success() && json.status.success());

    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&json)).unwrap();
    assert!(doc["rng"].as_str().unwrap().contains("chacha8"));
    let rows = doc["rows"].as_array().unwrap();
    let csv_body = stdout_str(&csv);
    let csv_rows = csv_rows(&csv_body);
    assert_eq!(rows.len(), csv_rows.len());
    for (jr, cr) in rows.iter().zip(&csv_rows) {
        for (idx, key) in
            [(0, "gamma"), (2, "rho"), (4, "sup_error"), (5, "max_kernel_norm")]
        {
            let from_csv: f64 = cr[idx].parse().unwrap();
            let from_json = jr[key].as_f64().unwrap();
            assert_eq!(from_csv.to_bits(), from_json.to_bits(), "{key}");
        }
        assert_eq!(cr[1], jr["N"].as_u64().unwrap().to_string());
        assert_eq!(cr[3], jr["seed"].as_u64().unwrap().to_string());
        assert_eq!(cr[7], jr["status"].as_str().unwrap());
    }
}

#[test]
fn default_sweep_error_decays_with_gamma() {
    let out = run(&["sweep"]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let body = stdout_str(&out);
    let rows = csv_rows(&body);
    assert_eq!(rows.len(), 15, "5 gammas x 1 tap count x 3 noise levels");

    let clean: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[2] == "0")
        .map(|r| (r[0].parse().unwrap(), r[4].parse().unwrap()))
        .collect();
    assert_eq!(clean.len(), 5);
    for w in clean.windows(2) {
        let (g0, e0) = w[0];
        let (g1, e1) = w[1];
        assert!(g1 > g0);
        // Decay until the floating-point floor.
        assert!(e1 <= e0.max(1e-12), "sup_error rose from {e0} at gamma {g0} to {e1} at {g1}");
    }

    let noisy_hit = rows
        .iter()
        .any(|r| r[2] != "0" && r[7] == "ok" && r[4].parse::<f64>().unwrap() <= 1e-3);
    assert!(noisy_hit, "no noisy row recovered within 1e-3");
}

#[test]
fn recover_csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("task.json");
    let task = serde_json::json!({
        "signal": {"type": "sinusoid_mix", "components": [
            {"amplitude": 1.0, "frequency": std::f64::consts::PI / 3.0, "phase": 0.0},
            {"amplitude": 0.5, "frequency": std::f64::consts::PI / 5.0, "phase": 0.0}
        ]},
        "pattern": {"kind": "contiguous_negative"},
        "theta": 0,
        "gap": {"center": "pi", "delta": 0.5},
        "gamma": 40.0,
        "r_hat": 1.0,
        "taps": 1020,
        "masked": true,
        "targets": [1, 2, 3]
    });
    fs::write(&cfg, serde_json::to_string(&task).unwrap()).unwrap();

    let csv = run(&["recover", "--config", cfg.to_str().unwrap()]);
    assert!(csv.status.success(), "stderr: {}", stderr_str(&csv));
    let json = run(&["recover", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(json.status.success());

    let rows = csv_rows(&stdout_str(&csv));
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&json)).unwrap();
    let est = doc["estimates"].as_array().unwrap();
    let errs = doc["errors"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (i, row) in rows.iter().enumerate() {
        let re: f64 = row[1].parse().unwrap();
        let err: f64 = row[3].parse().unwrap();
        assert_eq!(re.to_bits(), est[i][0].as_f64().unwrap().to_bits());
        assert_eq!(err.to_bits(), errs[i].as_f64().unwrap().to_bits());
        assert!(err < 1e-6, "target {}: error {err}", row[0]);
    }
    let sup = doc["sup_error"].as_f64().unwrap();
    let max_err = errs.iter().map(|e| e.as_f64().unwrap()).fold(0.0f64, f64::max);
    assert_eq!(sup.to_bits(), max_err.to_bits());
}

#[test]
fn project_is_idempotent_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("sig.csv");
    fs::write(&sig, "t,re,im\n0,1,0\n1,0.5,0\n2,-0.25,0\n3,0.125,0\n").unwrap();
    let once = dir.path().join("once.csv");

    let out = run(&[
        "project", "--input", sig.to_str().unwrap(), "--grid", "8", "--delta", "1.0", "--out",
        once.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let removed: f64 = stderr_str(&out)
        .trim()
        .rsplit('=')
        .next()
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(removed > 0.0);

    let again = run(&[
        "project", "--input", once.to_str().unwrap(), "--grid", "8", "--delta", "1.0",
    ]);
    assert!(again.status.success());
    let removed_again: f64 = stderr_str(&again)
        .trim()
        .rsplit('=')
        .next()
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(removed_again < 1e-12, "second projection removed {removed_again}");
}

#[test]
fn patterns_show_enumerates_and_classifies() {
    let out = run(&[
        "patterns", "show", "--pattern", "periodic:3", "--depth", "4", "--targets", "1,2",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout_str(&out));
    let got: Vec<(i64, i64)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(got, vec![(-3, -9), (-2, -6), (-1, -3), (0, 0)]);
    assert!(stderr_str(&out).contains("case = A"));

    let json = run(&[
        "patterns", "show", "--pattern", "signed-power:1,3", "--depth", "4", "--targets", "2",
        "--format", "json",
    ]);
    assert!(json.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&json)).unwrap();
    assert_eq!(doc["case"].as_str(), Some("C"));
}
