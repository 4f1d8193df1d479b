use std::path::Path;
use std::process::{Command, Output};

fn rice_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rice-lab"))
        .args(args)
        .env_remove("RICE_LAB_JOBS")
        .output()
        .unwrap()
}

fn out_arg(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let o = rice_lab(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(rice_lab(&["toy-sweep", "--nope"]).status.code(), Some(2));
    assert_eq!(rice_lab(&["toy-sweep", "--seed"]).status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rice_lab(&[
        "gen-data",
        "--out",
        &out_arg(dir.path()),
        "--set",
        "data.m=3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("data.m"));
}

#[test]
fn verify_oracle_passes_and_reports_each_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = rice_lab(&["verify-oracle", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().count() >= 9);
    for line in text.lines() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 3, "{line}");
        assert!(f[1].parse::<usize>().is_ok());
        assert_eq!(f[2], "pass");
    }
    assert!(text.contains("theorem3_random,50,pass"));
}

#[test]
fn injected_oracle_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = rice_lab(&[
        "verify-oracle",
        "--out",
        &out_arg(dir.path()),
        "--set",
        "oracle.inject_failure=true",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains(",fail"));
}

#[test]
fn unwritable_output_exits_1_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = rice_lab(&[
        "toy-sweep",
        "--out",
        &out_arg(&out),
        "--set",
        "sweep.reps=1",
        "--set",
        "sweep.n_test=50",
        "--set",
        "sweep.n_train=50",
        "--set",
        "train.iterations=5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&out_arg(&blocker)));
}

#[test]
fn config_file_with_overrides_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.cfg");
    std::fs::write(&cfg, "seed = 1\ndata.n = 10\ndata.a = 0\n").unwrap();
    let run = |sub: &str, extra: &[&str]| {
        let out = dir.path().join(sub);
        let mut args = vec!["gen-data", "--config", cfg.to_str().unwrap(), "--out"];
        let o = out_arg(&out);
        args.push(&o);
        args.extend_from_slice(extra);
        assert_eq!(rice_lab(&args).status.code(), Some(0));
        std::fs::read_to_string(out.join("data.csv")).unwrap()
    };
    let base = run("a", &[]);
    assert_eq!(base.lines().count(), 11);
    let more = run("b", &["--set", "data.n=20"]);
    assert_eq!(more.lines().count(), 21);
    // --seed wins over the file
    let reseeded = run("c", &["--seed", "2"]);
    assert_ne!(base, reseeded);
    let same = run("d", &["--seed", "1"]);
    assert_eq!(base, same);
    let manifest = std::fs::read_to_string(dir.path().join("a").join("data.manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 1") && manifest.contains("data.n = 10"));
}

#[test]
fn bad_jobs_env_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rice-lab"))
        .args(["gen-data", "--out", &out_arg(dir.path())])
        .env("RICE_LAB_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn toy_train_writes_params_progress_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let o = rice_lab(&[
        "toy-train",
        "--out",
        &out_arg(dir.path()),
        "--set",
        "train.iterations=50",
        "--set",
        "train.log_every=10",
        "--set",
        "eval.n_test=100",
        "--set",
        "eval.a_grid=-3,0,3",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let params = std::fs::read_to_string(dir.path().join("params.csv")).unwrap();
    assert_eq!(params.lines().count(), 31);
    let progress = std::fs::read_to_string(dir.path().join("progress.csv")).unwrap();
    assert_eq!(progress.lines().count(), 6);
    let eval = std::fs::read_to_string(dir.path().join("eval.csv")).unwrap();
    assert!(eval.starts_with("method,a,mse_mean,mse_stderr,reps\nrice,"));
    assert_eq!(eval.lines().count(), 4);
}

#[test]
fn checked_in_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in [
        "gen_data",
        "toy_train",
        "toy_sweep",
        "toy_sweep_smoke",
        "spurious",
        "oracle",
    ] {
        let p = root.join(format!("{name}.cfg"));
        assert!(p.exists(), "{}", p.display());
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = root.join("gen_data.cfg");
    let o = rice_lab(&[
        "gen-data",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    // a sweep config accepted by toy-sweep, shrunk through overrides
    let cfg = root.join("toy_sweep_smoke.cfg");
    let o = rice_lab(&[
        "toy-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
        "--set",
        "sweep.reps=1",
        "--set",
        "sweep.n_test=50",
        "--set",
        "train.iterations=5",
        "--set",
        "train.penalty_warmup=2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = rice_lab::experiments::read_toy_results(&dir.path().join("toy_sweep.csv")).unwrap();
    assert_eq!(rows.len(), 4 * 13);
}
