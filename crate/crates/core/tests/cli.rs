use std::path::Path;
use std::process::{Command, Output};

use dykaf::experiments::{read_records, OutputFormat};

fn dykaf(args: &[&str], data_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dykaf"));
    cmd.args(args).env_remove("DYKAF_DATA_DIR");
    if let Some(dir) = data_dir {
        cmd.env("DYKAF_DATA_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_libsvm(path: &Path) {
    let mut text = String::new();
    for i in 0..40 {
        let label = i % 2;
        let a = if label == 0 { 1.0 } else { -1.0 } + 0.1 * (i % 7) as f64;
        text.push_str(&format!("{label} 1:{a} 3:{:.2}\n", 0.05 * i as f64));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn help_and_version_exit_zero() {
    let out = dykaf(&["--help"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["fisher-sim", "hessian-gap", "props", "train", "selftest"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    assert_eq!(dykaf(&["--version"], None).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["bogus"][..],
        &[],
        &["props", "--seed", "x"],
        &["props", "--format", "xml"],
        &["props", "not_a_key=1"],
        &["props", "trials=-3"],
    ] {
        let out = dykaf(args, None);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn unreadable_config_exits_one() {
    let out = dykaf(&["props", "--config", "/nonexistent/cfg.json"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/cfg.json"));
}

#[test]
fn missing_dataset_without_fallback_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dykaf(
        &[
            "hessian-gap",
            "--no-fallback",
            "--data-dir",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mushrooms"));
}

#[test]
fn csv_and_json_outputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let json = dir.path().join("p.json");
    for (path, format) in [(&csv, "csv"), (&json, "json")] {
        let out = dykaf(
            &[
                "props",
                "trials=10",
                "--format",
                format,
                "-o",
                path.to_str().unwrap(),
            ],
            None,
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let a = read_records(&csv, OutputFormat::Csv).unwrap();
    let b = read_records(&json, OutputFormat::Json).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert!(a.iter().all(|r| !r.is_failure()));
}

#[test]
fn stdout_output_when_no_file_given() {
    let out = dykaf(&["train", "--steps", "3"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("experiment,seed,method,metric,x,value\n"));
    assert_eq!(text.lines().filter(|l| l.contains(",loss,")).count(), 3);
}

#[test]
fn data_dir_env_and_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    write_libsvm(&env_dir.path().join("toy"));
    let run = |extra: &[&str], env: Option<&Path>| {
        let out_dir = tempfile::tempdir().unwrap();
        let path = out_dir.path().join("r.csv");
        let mut args = vec![
            "hessian-gap",
            "dataset=toy",
            "sample_sizes=[8,16]",
            "--steps",
            "5",
            "-o",
            path.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let out = dykaf(&args, env);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let recs = read_records(&path, OutputFormat::Csv).unwrap();
        recs.iter().find(|r| r.metric == "synthetic").unwrap().value
    };
    assert_eq!(run(&[], Some(env_dir.path())), 0.0);
    assert_eq!(run(&[], None), 1.0);
    // The flag beats the environment: the flag directory has no file.
    assert_eq!(
        run(
            &["--data-dir", flag_dir.path().to_str().unwrap()],
            Some(env_dir.path())
        ),
        1.0
    );
}

#[test]
fn config_file_and_override_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"steps": 4, "seed": 3, "hyperparams": {"learning_rate": 0.05}}"#,
    )
    .unwrap();
    let out = dykaf(&["train", "--config", cfg.to_str().unwrap()], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",loss,")).count(), 4);
    assert!(text.lines().skip(1).all(|l| l.starts_with("train,3,")));

    let out = dykaf(
        &[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--steps",
            "2",
            "seed=5",
        ],
        None,
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",loss,")).count(), 2);
    assert!(text.lines().skip(1).all(|l| l.starts_with("train,5,")));
}

#[test]
fn experiment_tag_mismatch_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "fisher-sim"}"#).unwrap();
    let out = dykaf(&["props", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seeds_run_in_parallel_give_same_bytes() {
    let a = dykaf(
        &[
            "hessian-gap",
            "--num-seeds",
            "3",
            "--jobs",
            "1",
            "--steps",
            "20",
        ],
        None,
    );
    let b = dykaf(
        &[
            "hessian-gap",
            "--num-seeds",
            "3",
            "--jobs",
            "3",
            "--steps",
            "20",
        ],
        None,
    );
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
