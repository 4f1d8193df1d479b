use rayon::prelude::*;

use super::with_jobs;
use crate::error::{Error, Result};
use crate::objectives::{mse, train, LossKind, TrainConfig};
use crate::rng::derive_seed;
use crate::scalar::Real;
use crate::scm_toy::{sample_dataset, ToyDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig<T> {
    pub n_train: usize,
    pub a_train: T,
    pub a_grid: Vec<T>,
    /// Test samples per grid cell.
    pub n_test: usize,
    pub reps: usize,
    /// One training configuration per method; the per-rep seed overrides
    /// each `seed` field.
    pub methods: Vec<TrainConfig<T>>,
    pub seed: u64,
    /// Worker threads; `None` uses every available core.
    pub jobs: Option<usize>,
}

/// `-3, -2.5, …, 3`.
pub fn default_grid<T: Real>() -> Vec<T> {
    (0..13).map(|i| T::lit(-3.0 + 0.5 * i as f64)).collect()
}

impl<T: Real> SweepConfig<T> {
    /// 1000 training samples at `a = −3`, 10⁴ test samples per cell,
    /// 200 replications of the four toy methods.
    pub fn full_protocol() -> Self {
        SweepConfig {
            n_train: 1000,
            a_train: T::lit(-3.0),
            a_grid: default_grid(),
            n_test: 10_000,
            reps: 200,
            methods: LossKind::toy_methods()
                .map(TrainConfig::toy_default)
                .to_vec(),
            seed: 0,
            jobs: None,
        }
    }

    /// The default protocol with 50 replications.
    pub fn smoke() -> Self {
        SweepConfig {
            reps: 50,
            ..Self::full_protocol()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.a_grid.is_empty() {
            return Err(Error::Config("a grid is empty".into()));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::Config("n_train and n_test must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if let Some(a) = self
            .a_grid
            .iter()
            .chain([&self.a_train])
            .find(|a| !a.is_finite())
        {
            return Err(Error::Config(format!("non-finite a = {a}")));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        let mut names: Vec<&str> = self.methods.iter().map(|m| m.loss.name()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate method".into()));
        }
        self.methods.iter().try_for_each(TrainConfig::validate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow<T> {
    pub method: String,
    pub a: T,
    pub mse_mean: T,
    pub mse_stderr: T,
    /// Replications that entered the mean (divergent ones excluded).
    pub reps: usize,
}

/// Test MSE per method (`None` if training diverged) and grid cell.
type RepOutcome<T> = Vec<Option<Vec<T>>>;

fn run_rep<T: Real>(cfg: &SweepConfig<T>, rep: usize) -> Result<RepOutcome<T>> {
    let rep = rep as u64;
    let data = sample_dataset(
        cfg.n_train,
        cfg.a_train,
        derive_seed(cfg.seed, "train-data", rep),
    )?;
    let test_seed = derive_seed(cfg.seed, "test-data", rep);
    let tests: Vec<ToyDataset<T>> = cfg
        .a_grid
        .iter()
        .enumerate()
        .map(|(gi, &a)| sample_dataset(cfg.n_test, a, derive_seed(test_seed, "cell", gi as u64)))
        .collect::<Result<_>>()?;
    let init_seed = derive_seed(cfg.seed, "init", rep);
    cfg.methods
        .iter()
        .map(|m| {
            let tc = TrainConfig {
                seed: init_seed,
                ..m.clone()
            };
            match train(&tc, &data) {
                Ok(p) => Ok(Some(tests.iter().map(|t| mse(&p, t)).collect())),
                Err(Error::Divergence { iteration, value }) => {
                    log::warn!(
                        "rep {rep}, {}: diverged at iteration {iteration} ({value})",
                        m.loss.name()
                    );
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Trains every method on a fresh training set per replication and
/// evaluates test MSE across the grid; rows are ordered by method, then `a`.
///
/// Each replication derives its data, initialisation and test seeds from
/// `(seed, rep)`, so the table does not depend on scheduling.
pub fn run_toy_sweep<T: Real>(cfg: &SweepConfig<T>) -> Result<Vec<ResultRow<T>>> {
    cfg.validate()?;
    let outcomes: Vec<RepOutcome<T>> = with_jobs(cfg.jobs, || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_rep(cfg, rep))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.a_grid.len());
    for (mi, m) in cfg.methods.iter().enumerate() {
        let ok: Vec<&Vec<T>> = outcomes.iter().filter_map(|o| o[mi].as_ref()).collect();
        let diverged = cfg.reps - ok.len();
        if diverged > 0 {
            log::warn!(
                "{}: excluded {diverged} divergent replications",
                m.loss.name()
            );
        }
        if diverged * 20 > cfg.reps || ok.is_empty() {
            return Err(Error::TooManyDivergent {
                method: m.loss.name().to_string(),
                diverged,
                reps: cfg.reps,
            });
        }
        let n = T::from_usize(ok.len()).unwrap();
        for (gi, &a) in cfg.a_grid.iter().enumerate() {
            let mean = ok.iter().map(|v| v[gi]).sum::<T>() / n;
            let stderr = if ok.len() > 1 {
                let ss = ok
                    .iter()
                    .map(|v| (v[gi] - mean) * (v[gi] - mean))
                    .sum::<T>();
                (ss / (n - T::one()) / n).sqrt()
            } else {
                T::zero()
            };
            rows.push(ResultRow {
                method: m.loss.name().to_string(),
                a,
                mse_mean: mean,
                mse_stderr: stderr,
                reps: ok.len(),
            });
        }
    }
    Ok(rows)
}

/// The qualitative comparisons between RICE and ERM drawn from a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyClaims {
    pub erm_worst: f64,
    pub rice_worst: f64,
    pub erm_spread: f64,
    pub rice_spread: f64,
    pub rice_mean: f64,
    pub erm_at_train: f64,
    pub rice_at_train: f64,
    pub rice_stderr_at_train: f64,
}

impl ToyClaims {
    /// Summarises `rows` for the methods `erm` and `rice`, with `a_train`
    /// the training shift.
    pub fn from_rows<T: Real>(rows: &[ResultRow<T>], a_train: T) -> Result<Self> {
        let curve = |name: &str| -> Vec<(f64, f64, f64)> {
            rows.iter()
                .filter(|r| r.method == name)
                .map(|r| {
                    (
                        r.a.to_f64().unwrap_or(f64::NAN),
                        r.mse_mean.to_f64().unwrap_or(f64::NAN),
                        r.mse_stderr.to_f64().unwrap_or(f64::NAN),
                    )
                })
                .collect()
        };
        let erm = curve("erm");
        let rice = curve("rice");
        if erm.is_empty() || rice.is_empty() {
            return Err(Error::Precondition("sweep lacks erm or rice rows".into()));
        }
        let at = a_train.to_f64().unwrap_or(f64::NAN);
        let find = |c: &[(f64, f64, f64)]| {
            c.iter()
                .find(|r| (r.0 - at).abs() < 1e-12)
                .copied()
                .ok_or_else(|| Error::Precondition(format!("grid lacks a = {at}")))
        };
        let max = |c: &[(f64, f64, f64)]| c.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let min = |c: &[(f64, f64, f64)]| c.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let e = find(&erm)?;
        let r = find(&rice)?;
        Ok(ToyClaims {
            erm_worst: max(&erm),
            rice_worst: max(&rice),
            erm_spread: max(&erm) - min(&erm),
            rice_spread: max(&rice) - min(&rice),
            rice_mean: rice.iter().map(|r| r.1).sum::<f64>() / rice.len() as f64,
            erm_at_train: e.1,
            rice_at_train: r.1,
            rice_stderr_at_train: r.2,
        })
    }

    pub fn best_worst_case(&self) -> bool {
        self.rice_worst < self.erm_worst
    }

    pub fn stable(&self) -> bool {
        self.rice_spread < 0.5 * self.erm_spread
    }

    pub fn near_noise_variance(&self) -> bool {
        (0.9..=1.5).contains(&self.rice_mean)
    }

    pub fn erm_wins_in_distribution(&self) -> bool {
        self.erm_at_train <= self.rice_at_train + 2.0 * self.rice_stderr_at_train
    }
}
