use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_emitter-qfi"));
    cmd.env_remove("QFI_ARRAY_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn qfi_of(o: &Output) -> f64 {
    data_rows(&stdout(o))[0][1].parse().unwrap()
}

#[test]
fn closed_spe_benchmark() {
    let o = run(&[
        "closed",
        "--model",
        "spe",
        "--n",
        "4",
        "--d",
        "15",
        "--sigma",
        "0.3",
        "--stretch",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("param,qfi,qcrb,model,method\n"));
    assert!((qfi_of(&o) - 222.222_222_222_222_2).abs() < 1e-9);
}

#[test]
fn closed_thermal_and_single_source() {
    let o = run(&[
        "closed",
        "--model",
        "thermal",
        "--n",
        "4",
        "--sigma",
        "0.3",
        "--stretch",
        "2",
        "--mean-photons",
        "1",
    ]);
    assert!((qfi_of(&o) - 666.666_666_666_666_6).abs() < 1e-9);
    let o = run(&[
        "closed", "--model", "spe", "--n", "1", "--d", "1", "--sigma", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(data_rows(&stdout(&o))[0][2], "inf");
}

#[test]
fn closed_json_output() {
    let o = run(&[
        "closed",
        "--model",
        "optimal",
        "--n",
        "4",
        "--d",
        "15",
        "--sigma",
        "0.3",
        "--stretch",
        "2",
        "--format",
        "json",
        "--unit",
        "um",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["qfi"], 1600.0);
    assert_eq!(v["unit"], "um");
    assert_eq!(v["diagnostics"]["oracle_noon"], 400.0);
}

#[test]
fn usage_and_domain_exit_codes() {
    assert_eq!(
        run(&["closed", "--model", "nope", "--n", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["closed", "--model", "spe"]).status.code(), Some(2));
    assert_eq!(
        run(&["closed", "--model", "spe", "--n", "2", "--sigma", "-1"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&[
            "closed",
            "--model",
            "entangled-odd-even",
            "--n",
            "3",
            "--p",
            "1.5"
        ])
        .status
        .code(),
        Some(3)
    );
    let o = run(&["overlap", "--n", "12", "--engine", "enumerate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("11"));
}

#[test]
fn overlap_engines_agree() {
    let base = [
        "overlap",
        "--n",
        "4",
        "--d",
        "1.2",
        "--sigma",
        "0.3",
        "--stretch",
        "2",
    ];
    let e = run(&[&base[..], &["--engine", "enumerate"]].concat());
    let p = run(&[&base[..], &["--engine", "permanent"]].concat());
    let (a, b) = (qfi_of(&e), qfi_of(&p));
    assert!((a - b).abs() <= 1e-10 * a);
    assert!(String::from_utf8_lossy(&e.stderr).contains("term_B"));
}

#[test]
fn overlap_clear_separation() {
    let o = run(&[
        "overlap",
        "--n",
        "4",
        "--d",
        "2.4",
        "--sigma",
        "0.3",
        "--stretch",
        "2",
    ]);
    let spe = 4.0 * 4.0 * 15.0 / (12.0 * 0.09);
    assert!((qfi_of(&o) - spe).abs() < 5e-3 * spe);
}

#[test]
fn overlap_json_diagnostics() {
    let o = run(&[
        "overlap", "--n", "3", "--d", "0.5", "--sigma", "1", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["term_B", "term_C", "log_perm"] {
        assert!(v["diagnostics"][key].is_number(), "{key}");
    }
}

#[test]
fn deterministic_output_is_byte_identical() {
    let args = [
        "sweep",
        "--variable",
        "d",
        "--n",
        "5,6",
        "--min",
        "0.1",
        "--max",
        "1.0",
        "--steps",
        "12",
        "--sigma",
        "0.3",
        "--stretch",
        "2",
        "--deterministic",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0));
    for _ in 0..3 {
        assert_eq!(run(&args).stdout, first.stdout);
    }
    let single = bin()
        .args(args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(single.stdout, first.stdout);
}

#[test]
fn spacing_sweep_shape() {
    let o = run(&[
        "sweep",
        "--variable",
        "d",
        "--n",
        "2,3",
        "--min",
        "0.05",
        "--max",
        "4",
        "--in-sigma",
        "--steps",
        "50",
        "--sigma",
        "0.3",
        "--stretch",
        "2",
    ]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[0][3], "overlap/n=2");
    assert_eq!(rows[99][3], "overlap/n=3");
    let params: Vec<f64> = rows[..50].iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(params.windows(2).all(|w| w[0] < w[1]));
    assert!((params[49] - 1.2).abs() < 1e-15);
}

#[test]
fn two_step_sweep() {
    let o = run(&[
        "sweep",
        "--variable",
        "d",
        "--n",
        "3",
        "--min",
        "0.5",
        "--max",
        "1.0",
        "--steps",
        "2",
        "--model",
        "spe",
    ]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][3], "spe/n=3");
    assert!(rows[0][0].parse::<f64>().unwrap() < rows[1][0].parse::<f64>().unwrap());
}

#[test]
fn size_sweep_lists_every_model() {
    let o = run(&[
        "sweep",
        "--variable",
        "n",
        "--min",
        "2",
        "--max",
        "4",
        "--sigma",
        "0.3",
        "--stretch",
        "2",
    ]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 15);
    let models: Vec<&str> = rows[..5].iter().map(|r| r[3].as_str()).collect();
    assert_eq!(
        models,
        [
            "optimal",
            "thermal",
            "coherent",
            "spe",
            "entangled-odd-even"
        ]
    );
    let o = run(&[
        "sweep",
        "--variable",
        "n",
        "--min",
        "2",
        "--max",
        "4",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["models"]["thermal"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_validation() {
    assert_eq!(
        run(&[
            "sweep",
            "--variable",
            "d",
            "--n",
            "2",
            "--min",
            "1",
            "--max",
            "0.5",
            "--steps",
            "4"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "sweep",
            "--variable",
            "d",
            "--n",
            "2",
            "--min",
            "0",
            "--max",
            "1",
            "--steps",
            "4"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "sweep",
            "--variable",
            "d",
            "--n",
            "2",
            "--min",
            "0.1",
            "--max",
            "1",
            "--steps",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn sweep_to_file_and_unwritable_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig4.csv");
    let o = run(&[
        "sweep",
        "--variable",
        "n",
        "--min",
        "2",
        "--max",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&path)
        .unwrap()
        .starts_with("param,qfi,qcrb,model,method\n"));
    let bad = dir.path().join("missing").join("out.csv");
    let o = run(&[
        "sweep",
        "--variable",
        "n",
        "--min",
        "2",
        "--max",
        "3",
        "--output",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("array.conf");
    std::fs::write(
        &path,
        "# Fig. 3 parameters\nmodel = spe\nn = 4\nsigma = 0.3\nstretch = 2\nd = 15\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let o = run(&["closed", "--config", p]);
    assert!((qfi_of(&o) - 222.222_222_222_222_2).abs() < 1e-9);
    let o = run(&["closed", "--config", p, "--n", "2"]);
    assert!((qfi_of(&o) - 4.0 * 2.0 * 3.0 / (12.0 * 0.09)).abs() < 1e-9);
    let o = bin()
        .args(["closed"])
        .env("QFI_ARRAY_CONFIG", &path)
        .output()
        .unwrap();
    assert!((qfi_of(&o) - 222.222_222_222_222_2).abs() < 1e-9);
    let missing = dir.path().join("none.conf");
    assert_eq!(
        run(&["closed", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn unit_flag_changes_labels_only() {
    let base = ["closed", "--model", "spe", "--n", "3", "--format", "json"];
    let um: serde_json::Value =
        serde_json::from_slice(&run(&[&base[..], &["--unit", "um"]].concat()).stdout).unwrap();
    let nm: serde_json::Value =
        serde_json::from_slice(&run(&[&base[..], &["--unit", "nm"]].concat()).stdout).unwrap();
    assert_eq!(um["qfi"], nm["qfi"]);
    assert_ne!(um["unit"], nm["unit"]);
}

#[test]
fn check_passes_and_negation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = run(&[
        "check",
        "--max-n",
        "6",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["checks"].as_array().unwrap().len() > 10);
    let o = run(&["check", "--max-n", "3", "--self-test-negate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_subcommand() {
    let o = run(&["oracle", "fidelity", "--n", "2", "--d", "1", "--sigma", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["relative_difference"].as_f64().unwrap() < 1e-3);
    let o = run(&["oracle", "noon", "--n", "2", "--d", "1", "--sigma", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["optimal_formula"], 1.0);
    assert_eq!(v["oracle_value"], 0.5);
    let o = run(&["oracle", "poisson", "--amplitude", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 20.0).abs() < 1e-10);
    let o = run(&[
        "oracle",
        "thermal",
        "--mean-photons",
        "3",
        "--truncation",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(3));
}
