use std::fs;
use std::process::{Command, Output};

fn treeprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeprep"))
        .args(args)
        .env("TREEPREP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn synth_reports_metrics_and_writes_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = treeprep(&[
        "synth",
        "--protocol",
        "2pn",
        "--n",
        "3",
        "--preset",
        "uniform",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["n"], 3);
    assert_eq!(summary["max_degree"], 3);
    assert!(summary["depth"].as_u64().unwrap() > 0);
    let c: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(c["n"], 3);
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let o = treeprep(&[
            "synth",
            "--protocol",
            "3pn",
            "--n",
            "3",
            "--preset",
            "random",
            "--seed",
            "4",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn amplitude_file_n_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let amps = dir.path().join("amps.json");
    fs::write(&amps, r#"{"n": 1, "amplitudes": [[0.6, 0.0], [0.0, 0.8]]}"#).unwrap();
    let o = treeprep(&[
        "synth",
        "--protocol",
        "2pn",
        "--n",
        "2",
        "--amplitudes",
        amps.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`n`"));
    let ok = treeprep(&[
        "synth",
        "--protocol",
        "2pn",
        "--amplitudes",
        amps.to_str().unwrap(),
    ]);
    assert!(ok.status.success());
}

#[test]
fn unnormalized_input_and_bad_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let amps = dir.path().join("amps.json");
    fs::write(&amps, r#"{"n": 1, "amplitudes": [[1.0, 0.0], [1.0, 0.0]]}"#).unwrap();
    let o = treeprep(&[
        "synth",
        "--protocol",
        "2pn",
        "--amplitudes",
        amps.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = treeprep(&[
        "synth",
        "--protocol",
        "2pn",
        "--amplitudes",
        amps.to_str().unwrap(),
        "--normalize",
    ]);
    assert!(o.status.success());
    assert_eq!(
        treeprep(&["synth", "--protocol", "4pn", "--n", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        treeprep(&[
            "synth",
            "--protocol",
            "2pn",
            "--n",
            "2",
            "--preset",
            "basis:9"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn missing_files_exit_three() {
    let o = treeprep(&["validate", "/nonexistent/circuit.json"]);
    assert_eq!(o.status.code(), Some(3));
    let o = treeprep(&[
        "synth",
        "--protocol",
        "2pn",
        "--n",
        "2",
        "--out",
        "/nonexistent/dir/c.json",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_accepts_synthesized_and_flags_corrupted_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    assert!(treeprep(&[
        "synth",
        "--protocol",
        "2pn",
        "--n",
        "2",
        "--out",
        path.to_str().unwrap()
    ])
    .status
    .success());
    let o = treeprep(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    // swap the root with a distant output qubit
    let mut c: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let nq = 3 * 4 - 2 + 2;
    c["moments"][0] = serde_json::json!([{"kind": "Swap", "qubits": [0, nq - 1], "params": []}]);
    fs::write(&path, c.to_string()).unwrap();
    let o = treeprep(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn noiseless_simulation_has_unit_fidelity_and_is_reproducible() {
    let o = treeprep(&[
        "simulate",
        "--protocol",
        "3pn",
        "--n",
        "3",
        "--epsilon",
        "0",
        "--trajectories",
        "5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    for row in &rows {
        assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
    }
    let args = [
        "simulate",
        "--protocol",
        "2pn",
        "--n",
        "3",
        "--epsilon",
        "0.02",
        "--trajectories",
        "40",
        "--seed",
        "3",
    ];
    assert_eq!(treeprep(&args).stdout, treeprep(&args).stdout);
}

#[test]
fn sweep_and_resources_emit_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = treeprep(&[
        "sweep",
        "--protocol",
        "2pn",
        "--n",
        "2..3",
        "--epsilon",
        "0.001,0.01",
        "--trajectories",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("protocol,n,epsilon,seed,trajectories,mean_F,mean_lambda,mean_lambda_prime,ratio_n3,ratio_n2,violations"));
    assert_eq!(text.lines().count(), 5);
    let o = treeprep(&[
        "resources",
        "--protocol",
        "3pn",
        "--n",
        "20",
        "--epsilon",
        "1e-9",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("protocol,n,epsilon,strategy,t_count,t_depth,sta"));
    assert_eq!(text.lines().count(), 3);
    assert!(!text.contains("inf") && !text.contains("NaN"));
}
