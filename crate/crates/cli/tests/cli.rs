use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlnd_cli::table::{read_counts, write_counts};
use serde_json::Value;
use tempfile::TempDir;

fn mlnd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlnd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn config(layers: usize, p: f64, lambda: f64, runs: usize) -> String {
    format!(
        r#"{{"detector": {{"layers": {layers}, "t_s": 1.0}},
            "beam": {{"p": {p}, "lambda_per_s": {lambda}}},
            "n": {runs}, "alpha": 0.01, "seed": 3, "replicates": 2000}}"#
    )
}

#[test]
fn simulate_writes_a_headed_integer_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &config(2, 0.3, 50.0, 1));
    let out_path = dir.path().join("counts.csv");
    let out = mlnd(&[
        "simulate",
        "--config",
        s(&cfg),
        "--seed",
        "11",
        "--out",
        s(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.split_terminator('\n').collect();
    assert_eq!(lines[0], "layer_1,layer_2");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].split(',').all(|c| c.parse::<u64>().is_ok()));
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn zero_absorption_gives_zero_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &config(4, 0.0, 1e3, 5));
    let out = mlnd(&["simulate", "--config", s(&cfg)]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l == "0,0,0,0"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn simulated_table_parses_back_identically() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &config(6, 0.2, 500.0, 20));
    let path = dir.path().join("counts.csv");
    assert_eq!(
        code(&mlnd(&["simulate", "--config", s(&cfg), "--out", s(&path)])),
        0
    );
    let bytes = std::fs::read(&path).unwrap();
    let data = read_counts(bytes.as_slice()).unwrap();
    let mut again = Vec::new();
    write_counts(&data, &mut again).unwrap();
    assert_eq!(again, bytes);
    assert_eq!(code(&mlnd(&["estimate", s(&path)])), 0);
}

#[test]
fn estimate_two_layer_fixture() {
    let dir = TempDir::new().unwrap();
    let counts = write(&dir, "c.csv", "layer_1,layer_2\n3,1\n");
    let out = mlnd(&["estimate", s(&counts), "--t", "1", "--json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["p_hat"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-10);
    assert!((v["lambda_hat"].as_f64().unwrap() - 4.5).abs() < 1e-10);
    assert!(v["y_ip"].as_f64().unwrap() < 1.0);
    assert!(v["residual"].as_f64().is_some());
    assert_eq!(v["warnings"], serde_json::json!([]));
}

#[test]
fn estimation_errors_exit_4_with_a_code() {
    let dir = TempDir::new().unwrap();
    for (name, table, expected) in [
        ("gate.csv", "layer_1,layer_2\n1,3\n", "NO_INTERIOR_ROOT"),
        ("single.csv", "layer_1\n5\n7\n", "NOT_IDENTIFIABLE"),
        ("zeros.csv", "layer_1,layer_2\n0,0\n", "NO_DETECTIONS"),
    ] {
        let counts = write(&dir, name, table);
        let out = mlnd(&["estimate", s(&counts), "--json"]);
        assert_eq!(code(&out), 4, "{name}");
        assert_eq!(json(&out)["error"]["code"], expected, "{name}");
    }
}

#[test]
fn boundary_estimate_is_reported_and_exits_4() {
    let dir = TempDir::new().unwrap();
    let counts = write(&dir, "front.csv", "layer_1,layer_2,layer_3\n6,0,0\n");
    let out = mlnd(&["estimate", s(&counts), "--t", "2"]);
    assert_eq!(code(&out), 4);
    let v = json(&out);
    assert_eq!(v["error"]["code"], "BOUNDARY_ESTIMATE");
    assert_eq!(v["warnings"], serde_json::json!(["BOUNDARY_ESTIMATE"]));
    assert_eq!(v["p_hat"].as_f64(), Some(1.0));
    assert_eq!(v["lambda_hat"].as_f64(), Some(3.0));
}

#[test]
fn malformed_input_exits_2_and_missing_files_exit_3() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "layer_1,layer_2\n3,1\n4,oops\n");
    let out = mlnd(&["estimate", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = mlnd(&["estimate", s(&dir.path().join("absent.csv"))]);
    assert_eq!(code(&out), 3);

    let good = write(&dir, "c.csv", "layer_1,layer_2\n3,1\n");
    let out = mlnd(&[
        "estimate",
        s(&good),
        "--out",
        s(&dir.path().join("no/such/dir/out.json")),
    ]);
    assert_eq!(code(&out), 3);

    assert_eq!(code(&mlnd(&["estimate"])), 2);
    assert_eq!(code(&mlnd(&["estimate", s(&good), "--t", "0"])), 2);
}

#[test]
fn wavelength_from_seeded_fixture() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &config(25, 0.05, 1e5, 10));
    let counts = dir.path().join("c.csv");
    assert_eq!(
        code(&mlnd(&["simulate", "--config", s(&cfg), "--out", s(&counts)])),
        0
    );

    let narrow = mlnd(&["wavelength", s(&counts), "--config", s(&cfg), "--alpha", "0.05"]);
    assert_eq!(code(&narrow), 0, "{}", String::from_utf8_lossy(&narrow.stderr));
    let narrow = json(&narrow);
    let mu = narrow["mu_hat_angstrom"].as_f64().unwrap();
    assert!((mu - 2.394).abs() < 0.01, "{mu}");
    // four significant figures
    assert_eq!(format!("{:.3e}", mu).parse::<f64>().unwrap(), mu);
    for key in ["s_p", "s_chi", "gamma", "alpha", "ci_angstrom"] {
        assert!(!narrow[key].is_null(), "{key}");
    }
    assert_eq!(narrow["gamma"].as_f64(), Some(4.5));

    let wide = json(&mlnd(&[
        "wavelength",
        s(&counts),
        "--config",
        s(&cfg),
        "--alpha",
        "0.01",
    ]));
    let (w, n) = (&wide["ci_m"], &narrow["ci_m"]);
    assert!(w[0].as_f64().unwrap() < n[0].as_f64().unwrap());
    assert!(w[1].as_f64().unwrap() > n[1].as_f64().unwrap());
}

#[test]
fn wavelength_errors_carry_stage() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"detector": {"layers": 2}}"#);
    let counts = write(&dir, "c.csv", "layer_1,layer_2\n1,3\n");
    let out = mlnd(&["wavelength", s(&counts), "--config", s(&cfg)]);
    assert_eq!(code(&out), 4);
    let v = json(&out);
    assert_eq!(v["error"]["code"], "NO_INTERIOR_ROOT");
    assert_eq!(v["error"]["stage"], "mle");
}

#[test]
fn corrupted_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let counts = write(&dir, "c.csv", "layer_1,layer_2\n3,1\n");
    let cfg = write(&dir, "cfg.json", r#"{"detector": {"layers": 2, "t_s": "one"}}"#);
    let out = mlnd(&["wavelength", s(&counts), "--config", s(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("detector.t_s"));

    let cfg = write(
        &dir,
        "cfg2.json",
        r#"{"detector": {"layers": 2}, "beam": {"p": 0.1, "mu_angstrom": 2.4, "lambda_per_s": 1}}"#,
    );
    let out = mlnd(&["simulate", "--config", s(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("beam"));
}

#[test]
fn coverage_table_has_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &config(25, 0.1, 1e5, 10));
    let out = mlnd(&["coverage", "--config", s(&cfg), "--chi-fixed"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "replicates,nominal,empirical,mc_stderr,failures");
    assert_eq!(lines.len(), 2);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells[0], "2000");
    let empirical: f64 = cells[2].parse().unwrap();
    assert!((0.0..=1.0).contains(&empirical));

    let out = mlnd(&["coverage", "--config", s(&cfg), "--replicates", "50"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_rows_follow_the_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &config(3, 0.07, 1e5, 10));
    let out = mlnd(&[
        "sweep",
        "--config",
        s(&cfg),
        "--variable",
        "layers",
        "--grid",
        "5,10",
        "--replicates",
        "50",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "grid_value,s_p_mean,s_chi_mean,mu_hat_mean,ci_halfwidth_mean"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("5,") && lines[2].starts_with("10,"));

    let out = mlnd(&[
        "sweep",
        "--config",
        s(&cfg),
        "--variable",
        "layers",
        "--grid",
        "10,5",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &config(8, 0.1, 1e4, 5));
    let outputs: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .flat_map(|tag| {
            let sim = dir.path().join(format!("sim_{tag}.csv"));
            let sweep = dir.path().join(format!("sweep_{tag}.csv"));
            let cov = dir.path().join(format!("cov_{tag}.csv"));
            assert_eq!(
                code(&mlnd(&[
                    "simulate",
                    "--config",
                    s(&cfg),
                    "--seed",
                    "5",
                    "--out",
                    s(&sim)
                ])),
                0
            );
            assert_eq!(
                code(&mlnd(&[
                    "sweep",
                    "--config",
                    s(&cfg),
                    "--variable",
                    "intensity",
                    "--grid",
                    "1e3,1e4",
                    "--replicates",
                    "30",
                    "--seed",
                    "5",
                    "--out",
                    s(&sweep)
                ])),
                0
            );
            assert_eq!(
                code(&mlnd(&[
                    "coverage",
                    "--config",
                    s(&cfg),
                    "--replicates",
                    "100",
                    "--seed",
                    "5",
                    "--out",
                    s(&cov)
                ])),
                0
            );
            [sim, sweep, cov].map(|p| std::fs::read(p).unwrap())
        })
        .collect();
    assert_eq!(outputs[0..3], outputs[3..6]);
}

#[test]
fn json_flag_switches_table_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &config(3, 0.3, 100.0, 2));
    let v = json(&mlnd(&["simulate", "--config", s(&cfg), "--json"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    let v = json(&mlnd(&[
        "sweep",
        "--config",
        s(&cfg),
        "--variable",
        "runs",
        "--grid",
        "2..3",
        "--replicates",
        "5",
        "--json",
    ]));
    assert_eq!(v.as_array().unwrap().len(), 2);
}
