//! The seeded battery behind `verify-oracle`.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;

use super::random::{random_essential_set, random_fn, random_instance, random_structural_instance};
use super::{
    check_lemma1, check_lemma2, check_theorem1_family, check_theorem2, check_theorem3,
    constrained_minimizers, hs_set, invariant_maps, point_masses_plus_uniform, refines,
    worst_case_risk, FiniteFn, FiniteInstance, FiniteMap, LossTable,
};
use crate::cit::{causal_feature, toy_essential_set};
use crate::error::Result;
use crate::rng::{derive_seed, fill_normals, stream};
use crate::scalar::Exact;
use crate::scm_toy::Matrix2;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: usize,
    pub passed: bool,
    pub elapsed: Duration,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "pass" } else { "fail" };
        write!(f, "{},{},{}", self.name, self.instances, status)
    }
}

/// Matrices used by the invariance check.
pub const CIT_SAMPLES: usize = 10_000;
pub const LEMMA2_INSTANCES: usize = 50;
pub const THEOREM3_INSTANCES: usize = 50;
pub const THEOREM2_INSTANCES: usize = 50;
pub const THEOREM1_INSTANCES: usize = 20;

fn timed(name: &'static str, f: impl FnOnce() -> Result<(usize, bool)>) -> Result<CheckResult> {
    let t = Instant::now();
    let (instances, passed) = f()?;
    Ok(CheckResult {
        name,
        instances,
        passed,
        elapsed: t.elapsed(),
    })
}

/// `|g(T x) − g(x)| ≤ 1e-9` for the five toy transforms on Gaussian matrices.
pub fn cit_invariance(seed: u64) -> Result<(usize, bool)> {
    let mut rng = stream(derive_seed(seed, "cit", 0), 0);
    let mut z = vec![0.0f64; 4 * CIT_SAMPLES];
    fill_normals(&mut rng, &mut z);
    let set = toy_essential_set::<f64>();
    let ok = z.chunks_exact(4).all(|c| {
        let x = Matrix2::new(c[0], c[1], c[2], c[3]);
        let g = causal_feature(&x);
        set.iter()
            .all(|t| (causal_feature(&t.apply(&x)) - g).abs() <= 1e-9)
    });
    Ok((CIT_SAMPLES, ok))
}

/// Every ordered pair of functions `{0..3} → {0,1,2}`.
pub fn lemma1_exhaustive() -> Result<(usize, bool)> {
    let fns = FiniteFn::enumerate(4, 3)?;
    let mut n = 0;
    for h1 in &fns {
        for h2 in &fns {
            n += 1;
            if !check_lemma1(h1, h2)? {
                return Ok((n, false));
            }
        }
    }
    Ok((n, true))
}

/// Random `(I, h1)` with `I` essential for `h1`; `h2` ranges over every
/// function into `{0,1,2}`.
pub fn lemma2_random(seed: u64) -> Result<(usize, bool)> {
    for i in 0..LEMMA2_INSTANCES {
        let mut rng = stream(derive_seed(seed, "lemma2", i as u64), 0);
        let m = rng.random_range(1..=4);
        let r = rng.random_range(1..=3);
        let h1 = random_fn(&mut rng, m, r);
        let set = random_essential_set(&mut rng, &h1)?;
        for h2 in FiniteFn::enumerate(m, 3)? {
            if !check_lemma2(&set, &h1, &h2)? {
                return Ok((i + 1, false));
            }
        }
    }
    Ok((LEMMA2_INSTANCES, true))
}

pub fn theorem3_random(seed: u64) -> Result<(usize, bool)> {
    for i in 0..THEOREM3_INSTANCES {
        let mut rng = stream(derive_seed(seed, "theorem3", i as u64), 0);
        let m = rng.random_range(1..=5);
        let labels = rng.random_range(2..=3);
        let levels = rng.random_range(1..=m);
        let inst: FiniteInstance<Exact> = random_instance(&mut rng, m, labels, levels)?;
        let set = random_essential_set(&mut rng, inst.g())?;
        if !check_theorem3(&inst, &set)? {
            return Ok((i + 1, false));
        }
    }
    Ok((THEOREM3_INSTANCES, true))
}

pub fn theorem2_random(seed: u64) -> Result<(usize, bool)> {
    for i in 0..THEOREM2_INSTANCES {
        let mut rng = stream(derive_seed(seed, "theorem2", i as u64), 0);
        let m = rng.random_range(1..=4);
        let labels = rng.random_range(2..=3);
        let levels = rng.random_range(1..=m);
        let inst: FiniteInstance<Exact> = random_instance(&mut rng, m, labels, levels)?;
        if !check_theorem2(&inst)? {
            return Ok((i + 1, false));
        }
    }
    Ok((THEOREM2_INSTANCES, true))
}

pub fn theorem1_family_random(seed: u64) -> Result<(usize, bool)> {
    for i in 0..THEOREM1_INSTANCES {
        let mut rng = stream(derive_seed(seed, "theorem1", i as u64), 0);
        let m = rng.random_range(2..=5);
        let labels = rng.random_range(2..=3);
        let levels = rng.random_range(1..=m);
        let inst: FiniteInstance<Exact> = random_structural_instance(&mut rng, m, labels, levels)?;
        if !check_theorem1_family(&inst, &point_masses_plus_uniform(m))? {
            return Ok((i + 1, false));
        }
    }
    Ok((THEOREM1_INSTANCES, true))
}

/// Two inputs share `g` but carry opposite label tendencies.
pub fn split_level_instance() -> FiniteInstance<Exact> {
    let q = Exact::new;
    FiniteInstance::new(
        2,
        2,
        vec![q(4, 10), q(1, 10), q(1, 10), q(4, 10)],
        FiniteFn::from_values(vec![0, 0]),
        LossTable::zero_one(2),
    )
    .expect("valid table")
}

/// A predictor reading the non-causal coordinate has a strictly larger
/// worst transformed risk than any causal predictor.
pub fn theorem2_strict_gap() -> Result<(usize, bool)> {
    let inst = split_level_instance();
    let maps = invariant_maps(inst.g(), 2)?;
    let overfit = FiniteFn::from_values(vec![0, 1]);
    let hs = hs_set(&inst)?;
    let gap = worst_case_risk(&inst, &overfit, &maps);
    Ok((
        1,
        !hs.contains(&overfit) && hs.iter().all(|h| worst_case_risk(&inst, h, &maps) < gap),
    ))
}

/// `invariant_maps(h)` contains the identity and is closed under
/// composition, for every `h : {0..m−1} → {0..m−1}` with `m ≤ 4`.
pub fn invariant_map_monoid() -> Result<(usize, bool)> {
    let mut n = 0;
    for m in 1..=4 {
        for h in FiniteFn::enumerate(m, m)? {
            n += 1;
            let maps: BTreeSet<FiniteMap> = invariant_maps(&h, m)?.into_iter().collect();
            if !maps.contains(&FiniteMap::identity(m)) {
                return Ok((n, false));
            }
            for a in &maps {
                for b in &maps {
                    if !maps.contains(&a.compose(b)) {
                        return Ok((n, false));
                    }
                }
            }
        }
    }
    Ok((n, true))
}

/// Reflexivity and transitivity of `refines` on `{0..3} → {0,1,2}`.
pub fn refines_preorder() -> Result<(usize, bool)> {
    let fns = FiniteFn::enumerate(4, 3)?;
    let rel: Vec<Vec<bool>> = fns
        .iter()
        .map(|a| fns.iter().map(|b| refines(a, b)).collect())
        .collect();
    let n = fns.len();
    let reflexive = (0..n).all(|i| rel[i][i]);
    let transitive =
        (0..n).all(|i| (0..n).all(|j| !rel[i][j] || (0..n).all(|k| !rel[j][k] || rel[i][k])));
    Ok((n, reflexive && transitive))
}

/// The constrained-minimiser equality evaluated without its essential-set
/// precondition (`I = {id}` on a shared level set); expected to fail.
pub fn injected_failure() -> Result<(usize, bool)> {
    let inst = split_level_instance();
    let constrained = constrained_minimizers(&inst, &[FiniteMap::identity(2)])?;
    Ok((1, hs_set(&inst)? == constrained))
}

/// Runs every check; with `inject_failure` an extra known-false check is
/// appended so callers can exercise their failure path.
pub fn run_oracle_suite(seed: u64, inject_failure: bool) -> Result<Vec<CheckResult>> {
    let mut out = vec![
        timed("cit_invariance", || cit_invariance(seed))?,
        timed("lemma1_exhaustive", lemma1_exhaustive)?,
        timed("lemma2_random", || lemma2_random(seed))?,
        timed("theorem3_random", || theorem3_random(seed))?,
        timed("theorem2_random", || theorem2_random(seed))?,
        timed("theorem2_strict_gap", theorem2_strict_gap)?,
        timed("theorem1_family", || theorem1_family_random(seed))?,
        timed("invariant_map_monoid", invariant_map_monoid)?,
        timed("refines_preorder", refines_preorder)?,
    ];
    if inject_failure {
        out.push(timed("injected_nonessential_theorem3", injected_failure)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_and_injection() {
        assert_eq!(theorem2_strict_gap().unwrap(), (1, true));
        assert_eq!(injected_failure().unwrap(), (1, false));
    }

    #[test]
    fn line_format() {
        let r = CheckResult {
            name: "x",
            instances: 3,
            passed: false,
            elapsed: Duration::ZERO,
        };
        assert_eq!(r.to_string(), "x,3,fail");
    }
}
