use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rice_lab::experiments::{
    self, run_spurious, run_toy_sweep, write_dataset_csv, write_manifest, write_spurious_results,
    write_toy_results, ResultRow, SpuriousConfig, SweepConfig, ToyClaims,
};
use rice_lab::finite_oracle::suite::run_oracle_suite;
use rice_lab::objectives::{
    mse, train_with_log, write_progress_csv, LossKind, TrainConfig, TOY_RICE_LAMBDA,
};
use rice_lab::optim::OptimizerKind;
use rice_lab::scm_toy::sample_dataset;

use crate::config::{ConfigError, FlatConfig};

/// How a command failed, mapped to the exit status by the caller.
#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lab(#[from] rice_lab::Error),
    #[error("{0} oracle check(s) failed")]
    OracleFailed(usize),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) | CommandError::Lab(rice_lab::Error::Config(_)) => 2,
            CommandError::Lab(_) => 1,
            CommandError::OracleFailed(_) => 3,
        }
    }
}

pub struct Context {
    pub cfg: FlatConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: Option<usize>,
}

type CmdResult = Result<(), CommandError>;

const TRAIN_KEYS: &[&str] = &[
    "train.lr",
    "train.iterations",
    "train.batch_size",
    "train.optimizer",
    "train.adam_b1",
    "train.adam_b2",
    "train.adam_eps",
    "train.smoothing_coef",
    "train.penalty_warmup",
    "train.lambda",
];

fn accepted(own: &[&'static str], with_train: bool) -> Vec<&'static str> {
    let mut v = vec!["seed"];
    v.extend_from_slice(own);
    if with_train {
        v.extend_from_slice(TRAIN_KEYS);
    }
    v
}

fn ensure_out(out: &Path) -> Result<(), CommandError> {
    fs::create_dir_all(out).map_err(|e| rice_lab::Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Effective configuration as `key = value` pairs for the manifest.
fn echo(ctx: &Context, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = ctx
        .cfg
        .entries()
        .filter(|(k, _)| k.as_str() != "seed")
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    v.push(("seed".into(), ctx.seed.to_string()));
    v.extend(extra.iter().map(|(k, val)| (k.to_string(), val.clone())));
    v
}

fn train_config(cfg: &FlatConfig, loss: LossKind<f64>) -> Result<TrainConfig<f64>, CommandError> {
    let d = TrainConfig::toy_default(loss);
    let optimizer = match cfg.get("train.optimizer", "adam".to_string())?.as_str() {
        "adam" => {
            let OptimizerKind::Adam { b1, b2, eps } = OptimizerKind::<f64>::adam_default() else {
                unreachable!()
            };
            OptimizerKind::Adam {
                b1: cfg.get("train.adam_b1", b1)?,
                b2: cfg.get("train.adam_b2", b2)?,
                eps: cfg.get("train.adam_eps", eps)?,
            }
        }
        "sgd" => OptimizerKind::Sgd,
        other => {
            return Err(rice_lab::Error::Config(format!(
                "unknown optimizer {other:?} (adam or sgd)"
            ))
            .into())
        }
    };
    let batch: usize = cfg.get("train.batch_size", 0)?;
    Ok(TrainConfig {
        lr: cfg.get("train.lr", d.lr)?,
        iterations: cfg.get("train.iterations", d.iterations)?,
        batch_size: (batch > 0).then_some(batch),
        optimizer,
        smoothing_coef: cfg.get("train.smoothing_coef", d.smoothing_coef)?,
        penalty_warmup: cfg.get("train.penalty_warmup", d.penalty_warmup)?,
        ..d
    })
}

pub fn gen_data(ctx: &Context) -> CmdResult {
    ctx.cfg
        .check_keys(&accepted(&["data.n", "data.a"], false))?;
    let n: usize = ctx.cfg.get("data.n", 1000)?;
    let a: f64 = ctx.cfg.get("data.a", -3.0)?;
    let t = Instant::now();
    let data = sample_dataset(n, a, ctx.seed)?;
    ensure_out(&ctx.out)?;
    write_dataset_csv(&data, &ctx.out.join("data.csv"))?;
    write_manifest(
        &ctx.out.join("data.manifest.txt"),
        "gen-data",
        &echo(ctx, &[("data.n", n.to_string()), ("data.a", a.to_string())]),
        t.elapsed(),
    )?;
    log::info!(
        "wrote {n} samples to {}",
        ctx.out.join("data.csv").display()
    );
    Ok(())
}

pub fn toy_train(ctx: &Context) -> CmdResult {
    let own = [
        "data.n_train",
        "data.a_train",
        "train.loss",
        "train.log_every",
        "eval.a_grid",
        "eval.n_test",
    ];
    ctx.cfg.check_keys(&accepted(&own, true))?;
    let lambda = ctx.cfg.get("train.lambda", TOY_RICE_LAMBDA)?;
    let loss = LossKind::from_name(&ctx.cfg.get("train.loss", "rice".to_string())?, lambda)?;
    let mut tc = train_config(&ctx.cfg, loss)?;
    tc.seed = rice_lab::rng::derive_seed(ctx.seed, "init", 0);
    tc.log_every = ctx.cfg.get("train.log_every", 100)?;
    let n_train: usize = ctx.cfg.get("data.n_train", 1000)?;
    let a_train: f64 = ctx.cfg.get("data.a_train", -3.0)?;
    let grid: Vec<f64> = ctx
        .cfg
        .get_list("eval.a_grid", experiments::toy_sweep::default_grid())?;
    let n_test: usize = ctx.cfg.get("eval.n_test", 10_000)?;
    let t = Instant::now();
    let data = sample_dataset(
        n_train,
        a_train,
        rice_lab::rng::derive_seed(ctx.seed, "train-data", 0),
    )?;
    let outcome = train_with_log(&tc, &data)?;
    let test_seed = rice_lab::rng::derive_seed(ctx.seed, "test-data", 0);
    let mut rows = Vec::with_capacity(grid.len());
    for (gi, &a) in grid.iter().enumerate() {
        let test = sample_dataset(
            n_test,
            a,
            rice_lab::rng::derive_seed(test_seed, "cell", gi as u64),
        )?;
        let errs: Vec<f64> = test
            .samples
            .iter()
            .map(|s| {
                let r = rice_lab::model::predict(&outcome.params, &s.x) - s.y;
                r * r
            })
            .collect();
        let mean = mse(&outcome.params, &test);
        let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (errs.len().max(2) - 1) as f64;
        rows.push(ResultRow {
            method: loss.name().to_string(),
            a,
            mse_mean: mean,
            mse_stderr: (var / errs.len() as f64).sqrt(),
            reps: 1,
        });
    }
    ensure_out(&ctx.out)?;
    outcome.params.write_csv(&ctx.out.join("params.csv"))?;
    write_progress_csv(&outcome.log, &ctx.out.join("progress.csv"))?;
    write_toy_results(&rows, &ctx.out.join("eval.csv"))?;
    write_manifest(
        &ctx.out.join("toy_train.manifest.txt"),
        "toy-train",
        &echo(ctx, &[]),
        t.elapsed(),
    )?;
    for r in &rows {
        println!("{},{:.4},{:.4}", r.method, r.a, r.mse_mean);
    }
    Ok(())
}

pub fn toy_sweep(ctx: &Context) -> CmdResult {
    let own = [
        "sweep.n_train",
        "sweep.a_train",
        "sweep.a_grid",
        "sweep.n_test",
        "sweep.reps",
        "sweep.methods",
    ];
    ctx.cfg.check_keys(&accepted(&own, true))?;
    let d = SweepConfig::<f64>::full_protocol();
    let lambda = ctx.cfg.get("train.lambda", TOY_RICE_LAMBDA)?;
    let names: Vec<String> = ctx.cfg.get_list(
        "sweep.methods",
        vec!["erm".into(), "avg".into(), "max".into(), "rice".into()],
    )?;
    let methods = names
        .iter()
        .map(|n| train_config(&ctx.cfg, LossKind::from_name(n, lambda)?))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SweepConfig {
        n_train: ctx.cfg.get("sweep.n_train", d.n_train)?,
        a_train: ctx.cfg.get("sweep.a_train", d.a_train)?,
        a_grid: ctx.cfg.get_list("sweep.a_grid", d.a_grid)?,
        n_test: ctx.cfg.get("sweep.n_test", d.n_test)?,
        reps: ctx.cfg.get("sweep.reps", d.reps)?,
        methods,
        seed: ctx.seed,
        jobs: ctx.jobs,
    };
    cfg.validate()?;
    let t = Instant::now();
    let rows = run_toy_sweep(&cfg)?;
    ensure_out(&ctx.out)?;
    write_toy_results(&rows, &ctx.out.join("toy_sweep.csv"))?;
    write_manifest(
        &ctx.out.join("toy_sweep.manifest.txt"),
        "toy-sweep",
        &echo(ctx, &[("train.lambda", lambda.to_string())]),
        t.elapsed(),
    )?;
    if let Ok(c) = ToyClaims::from_rows(&rows, cfg.a_train) {
        println!(
            "worst-case  rice {:.4} < erm {:.4}: {}",
            c.rice_worst,
            c.erm_worst,
            c.best_worst_case()
        );
        println!(
            "spread      rice {:.4} < 0.5 x erm {:.4}: {}",
            c.rice_spread,
            c.erm_spread,
            c.stable()
        );
        println!(
            "rice mean   {:.4} in [0.9, 1.5]: {}",
            c.rice_mean,
            c.near_noise_variance()
        );
        println!(
            "a_train     erm {:.4} <= rice {:.4} + 2 x {:.4}: {}",
            c.erm_at_train,
            c.rice_at_train,
            c.rice_stderr_at_train,
            c.erm_wins_in_distribution()
        );
    }
    Ok(())
}

pub fn spurious(ctx: &Context) -> CmdResult {
    let own = [
        "spurious.n_causal_bits",
        "spurious.n_colors",
        "spurious.causal_flip_prob",
        "spurious.n_train",
        "spurious.n_test",
        "spurious.lambda0",
        "spurious.lr",
        "spurious.iterations",
    ];
    ctx.cfg.check_keys(&accepted(&own, false))?;
    let d = SpuriousConfig::<f64>::default();
    let cfg = SpuriousConfig {
        n_causal_bits: ctx.cfg.get("spurious.n_causal_bits", d.n_causal_bits)?,
        n_colors: ctx.cfg.get("spurious.n_colors", d.n_colors)?,
        causal_flip_prob: ctx
            .cfg
            .get("spurious.causal_flip_prob", d.causal_flip_prob)?,
        n_train: ctx.cfg.get("spurious.n_train", d.n_train)?,
        n_test: ctx.cfg.get("spurious.n_test", d.n_test)?,
        lambda0: ctx.cfg.get("spurious.lambda0", d.lambda0)?,
        lr: ctx.cfg.get("spurious.lr", d.lr)?,
        iterations: ctx.cfg.get("spurious.iterations", d.iterations)?,
        seed: ctx.seed,
    };
    cfg.validate()?;
    let t = Instant::now();
    let rows = run_spurious(&cfg)?;
    ensure_out(&ctx.out)?;
    write_spurious_results(&rows, &ctx.out.join("spurious.csv"))?;
    write_manifest(
        &ctx.out.join("spurious.manifest.txt"),
        "spurious",
        &echo(ctx, &[]),
        t.elapsed(),
    )?;
    for r in &rows {
        println!("{},{:.4}", r.method, r.accuracy);
    }
    Ok(())
}

pub fn verify_oracle(ctx: &Context) -> CmdResult {
    ctx.cfg
        .check_keys(&accepted(&["oracle.inject_failure"], false))?;
    let inject: bool = ctx.cfg.get("oracle.inject_failure", false)?;
    let t = Instant::now();
    let results = run_oracle_suite(ctx.seed, inject)?;
    let mut csv = String::from("check,instances,status\n");
    for r in &results {
        println!("{r}");
        log::info!("{} took {:.3}s", r.name, r.elapsed.as_secs_f64());
        csv.push_str(&format!("{r}\n"));
    }
    ensure_out(&ctx.out)?;
    let path = ctx.out.join("oracle.csv");
    fs::write(&path, csv).map_err(|e| rice_lab::Error::Io { path, source: e })?;
    write_manifest(
        &ctx.out.join("oracle.manifest.txt"),
        "verify-oracle",
        &echo(ctx, &[]),
        t.elapsed(),
    )?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CommandError::OracleFailed(failed));
    }
    Ok(())
}
