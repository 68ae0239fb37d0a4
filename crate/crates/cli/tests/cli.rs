use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qmean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmean"))
        .args(args)
        .env_remove("QMEAN_PARALLELISM")
        .output()
        .expect("run qmean")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8")
}

fn validate(schema_file: &str, json: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(schema_file);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let instance: Value = serde_json::from_str(json).expect("valid json");
    let msgs: Vec<String> = match compiled.validate(&instance) {
        Ok(()) => Vec::new(),
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    assert!(msgs.is_empty(), "{schema_file}: {msgs:?}");
}

const TABLE: [&str; 14] = [
    "error-table",
    "--estimator",
    "ae",
    "--n",
    "64",
    "--M",
    "16,32,64",
    "--criterion",
    "avg-prob",
    "--measure",
    "uniform-means",
    "--p",
    "0.81",
    "--format",
];

#[test]
fn error_table_csv_has_one_row_per_budget() {
    let mut args = TABLE.to_vec();
    args.push("csv");
    let out = qmean(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "criterion,n,T,p,q,measure,value");
    assert_eq!(lines.len(), 4);
    for (line, m) in lines[1..].iter().zip(["16", "32", "64"]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(
            cols[..6],
            ["avg-prob", "64", m, "0.81", "", "uniform-means"]
        );
        let v: f64 = cols[6].parse().unwrap();
        assert!(v > 0.0 && v < 1.0);
    }
    assert!(!text.contains('\r'));
}

#[test]
fn error_table_json_mirrors_csv() {
    let mut args = TABLE.to_vec();
    args.push("json");
    let out = qmean(&args);
    assert!(out.status.success());
    let json = stdout(&out);
    validate("error-report.schema.json", &json);
    let rows: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
    assert_eq!(rows[1]["T"], 32);
    assert_eq!(rows[1]["criterion"], "avg-prob");
}

#[test]
fn count_scaled_and_expected_criteria() {
    let out = qmean(&[
        "error-table",
        "--estimator",
        "bernoulli",
        "--n",
        "8",
        "--T",
        "4",
        "--criterion",
        "worst-expected",
        "--q",
        "2",
        "--count-scaled",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "count:worst-expected");
    // n · 1/(2√T) for the worst class k = n/2
    assert!((row[6].parse::<f64>().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn median_reps_requires_repetitions() {
    let out = qmean(&[
        "error-table",
        "--estimator",
        "median-reps",
        "--n",
        "8",
        "--M",
        "4",
        "--criterion",
        "worst-prob",
        "--p",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--r"));
    let out = qmean(&[
        "error-table",
        "--estimator",
        "median-reps",
        "--r",
        "3",
        "--n",
        "8",
        "--M",
        "4",
        "--criterion",
        "worst-prob",
        "--p",
        "0.9",
    ]);
    assert!(out.status.success());
}

#[test]
fn invalid_configs_exit_2_naming_the_flag() {
    let cases: [(&[&str], &str); 6] = [
        (
            &[
                "error-table",
                "--estimator",
                "ae",
                "--n",
                "64",
                "--M",
                "16",
                "--criterion",
                "avg-prob",
                "--p",
                "0.81",
            ],
            "--measure",
        ),
        (
            &[
                "error-table",
                "--estimator",
                "ae",
                "--n",
                "64",
                "--M",
                "16",
                "--criterion",
                "worst-expected",
                "--p",
                "0.81",
            ],
            "--p",
        ),
        (
            &[
                "error-table",
                "--estimator",
                "ae",
                "--n",
                "64",
                "--M",
                "16",
                "--criterion",
                "worst-prob",
            ],
            "--p",
        ),
        (
            &[
                "error-table",
                "--estimator",
                "ae",
                "--r",
                "3",
                "--n",
                "8",
                "--M",
                "4",
                "--criterion",
                "worst-prob",
                "--p",
                "0.9",
            ],
            "--r",
        ),
        (
            &[
                "error-table",
                "--estimator",
                "constant",
                "--round-count",
                "--n",
                "8",
                "--M",
                "4",
                "--criterion",
                "worst-prob",
                "--p",
                "0.9",
            ],
            "--round-count",
        ),
        (
            &[
                "error-table",
                "--estimator",
                "ae",
                "--n",
                "8",
                "--M",
                "4",
                "--criterion",
                "median",
                "--p",
                "0.9",
            ],
            "--criterion",
        ),
    ];
    for (args, flag) in cases {
        let out = qmean(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr(&out).contains(flag), "{args:?}: {}", stderr(&out));
    }
    let out = qmean(&[
        "measure-dump",
        "--measure",
        "/nonexistent/measure.txt",
        "--n",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--measure"));
    let out = qmean(&["check", "const-alg", "--format", "xml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qmean(&["check", "lemma61", "--n-max", "1O"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lemma61_check_passes_with_assert() {
    let out = qmean(&["check", "lemma61", "--n-max", "2000", "--assert"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("name,params,lhs,rhs,holds,margin\n"));
}

#[test]
fn const_alg_check_json() {
    let out = qmean(&[
        "check",
        "const-alg",
        "--n",
        "4096",
        "--assert",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json = stdout(&out);
    validate("check.schema.json", &json);
    let v: Value = serde_json::from_str(&json).unwrap();
    let ratio = v["checks"][0]["lhs"].as_f64().unwrap();
    assert!((0.95..=1.05).contains(&ratio));
    for c in v["checks"].as_array().unwrap() {
        validate("bound-check.schema.json", &c.to_string());
    }
}

#[test]
fn failing_check_exits_3_only_with_assert() {
    // ratio(2) = 0.886, outside the 5% band
    let out = qmean(&["check", "const-alg", "--n", "2", "--assert"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let out = qmean(&["check", "const-alg", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("FAILED"));
}

#[test]
fn floors_check_emits_sweep_table() {
    let out = qmean(&[
        "check",
        "floors",
        "--measure",
        "uniform-means",
        "--n",
        "256",
        "--M",
        "8,16,32",
        "--c0",
        "0.1",
        "--assert",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("name,n,T,p,q,measure,value,floor,ratio\n"));
    assert_eq!(text.lines().count(), 1 + 5 * 3);

    let out = qmean(&[
        "check",
        "floors",
        "--measure",
        "uniform-inputs",
        "--n",
        "256",
        "--M",
        "8,16,32",
        "--c0",
        "0.1",
        "--format",
        "json",
    ]);
    let json = stdout(&out);
    validate("check.schema.json", &json);
    validate(
        "sweep.schema.json",
        &serde_json::from_str::<Value>(&json).unwrap()["table"].to_string(),
    );
    // budgets above n/8 are rejected for average probabilistic sweeps
    let out = qmean(&["check", "floors", "--n", "64", "--M", "16"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degree_lp_witness() {
    for format in ["csv", "json"] {
        let out = qmean(&[
            "degree-lp",
            "--n",
            "20",
            "--k1",
            "12",
            "--k2",
            "8",
            "--c",
            "0.3",
            "--format",
            format,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        if format == "json" {
            let json = stdout(&out);
            validate("witness.schema.json", &json);
            let v: Value = serde_json::from_str(&json).unwrap();
            assert_eq!(v["degree"], 3);
        } else {
            assert!(stdout(&out).starts_with("n,k1,k2,c,degree,power,coefficient\n"));
        }
    }
    let out = qmean(&["degree-lp", "--n", "20", "--k1", "8", "--k2", "12"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dist_dump_matches_closed_form() {
    let out = qmean(&[
        "dist-dump",
        "--estimator",
        "ae",
        "--n",
        "4",
        "--k",
        "1",
        "--M",
        "4",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let json = stdout(&out);
    validate("distribution.schema.json", &json);
    let v: Value = serde_json::from_str(&json).unwrap();
    let atoms = v[0]["atoms"].as_array().unwrap();
    let total: f64 = atoms.iter().map(|a| a[1].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let out = qmean(&[
        "dist-dump",
        "--estimator",
        "median-reps",
        "--r",
        "3",
        "--n",
        "6",
        "--M",
        "8",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,k,queries,estimate,prob\n"));
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(2) == Some("24")));
}

#[test]
fn measure_dump_from_file_and_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("measure.txt");
    std::fs::write(&path, "# skewed\n3\n0.1\n0.2\n0.3\n0.4\n").unwrap();
    let out = qmean(&[
        "measure-dump",
        "--measure",
        path.to_str().unwrap(),
        "--n",
        "3",
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json = stdout(&out);
    validate("measure.schema.json", &json);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["class_prob"][3], 0.4);

    let out = qmean(&[
        "measure-dump",
        "--measure",
        path.to_str().unwrap(),
        "--n",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = qmean(&["measure-dump", "--measure", "uniform-means", "--n", "4"]);
    assert_eq!(stdout(&out).lines().nth(1), Some("0,0.2,-1.60943791243"));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let mut args = TABLE.to_vec();
    args.extend(["csv", "--output", path.to_str().unwrap()]);
    let out = qmean(&args);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let mut args = TABLE.to_vec();
    args.push("csv");
    assert_eq!(std::fs::read(&path).unwrap(), qmean(&args).stdout);
}

#[test]
fn output_is_independent_of_parallelism() {
    let runs: [&[&str]; 3] = [
        &["check", "markov", "--seed", "7", "--format", "json"],
        &[
            "check",
            "floors",
            "--measure",
            "uniform-inputs",
            "--n",
            "512",
            "--M",
            "8,32,64",
            "--c0",
            "0",
            "--format",
            "json",
        ],
        &[
            "error-table",
            "--estimator",
            "median-reps",
            "--r",
            "4",
            "--n",
            "128",
            "--M",
            "8,16",
            "--criterion",
            "avg-expected",
            "--measure",
            "uniform-inputs",
            "--q",
            "1",
        ],
    ];
    for args in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let mut a = args.to_vec();
            a.extend(["--parallelism", threads]);
            outputs.push(qmean(&a).stdout);
            let env = Command::new(env!("CARGO_BIN_EXE_qmean"))
                .args(args)
                .env("QMEAN_PARALLELISM", threads)
                .output()
                .unwrap();
            assert!(env.status.success());
            outputs.push(env.stdout);
        }
        assert!(!outputs[0].is_empty());
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{args:?}");
    }
}

#[test]
fn markov_seed_changes_the_sample() {
    let a = qmean(&[
        "check",
        "markov",
        "--seed",
        "1",
        "--samples",
        "20",
        "--format",
        "json",
        "--assert",
    ]);
    let b = qmean(&[
        "check",
        "markov",
        "--seed",
        "2",
        "--samples",
        "20",
        "--format",
        "json",
        "--assert",
    ]);
    assert!(a.status.success() && b.status.success());
    let a = qmean(&[
        "check",
        "markov",
        "--seed",
        "1",
        "--samples",
        "20",
        "--format",
        "csv",
    ]);
    assert_eq!(stdout(&a), "name,params,lhs,rhs,holds,margin\n");
}
