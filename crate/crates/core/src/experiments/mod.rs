//! End-to-end experiments: the toy out-of-distribution sweep and the
//! spurious-colour classification analog, plus their CSV artifacts.

pub mod output;
pub mod spurious;
pub mod toy_sweep;

pub use output::{
    read_spurious_results, read_toy_results, write_dataset_csv, write_manifest,
    write_spurious_results, write_toy_results,
};
pub use spurious::{
    causal_bayes_accuracy, decolor_transform, make_spurious_dataset, run_spurious, Split,
    SpuriousConfig, SpuriousDataset, SpuriousRow, SpuriousSample,
};
pub use toy_sweep::{run_toy_sweep, ResultRow, SweepConfig, ToyClaims};

/// Runs `f` on a pool of `jobs` threads, or the global pool when `None`.
pub(crate) fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                f()
            }
        },
        None => f(),
    }
}
