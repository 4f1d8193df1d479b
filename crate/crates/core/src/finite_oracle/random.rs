//! Seeded random generators for oracle instances.

use rand::Rng;

use super::{invariant_maps, is_essential, FiniteFn, FiniteInstance, FiniteMap, LossTable};
use crate::error::Result;
use crate::scalar::OracleScalar;

pub fn random_fn<R: Rng + ?Sized>(rng: &mut R, m: usize, r: usize) -> FiniteFn {
    let values = (0..m).map(|_| rng.random_range(0..r)).collect();
    FiniteFn::new(values, r).expect("values drawn below codomain")
}

/// Adds random `g`-preserving maps until the set is essential.
///
/// The set is kept small: non-identity maps are preferred, and the draw
/// stops as soon as reachability covers every level set.
pub fn random_essential_set<R: Rng + ?Sized>(rng: &mut R, g: &FiniteFn) -> Result<Vec<FiniteMap>> {
    let m = g.len();
    let pool = invariant_maps(g, m)?;
    let mut set: Vec<FiniteMap> = Vec::new();
    for _ in 0..64 {
        if is_essential(&set, g)? {
            return Ok(set);
        }
        set.push(pool[rng.random_range(0..pool.len())].clone());
    }
    if is_essential(&set, g)? {
        return Ok(set);
    }
    // Fallback: one cycle through each level set.
    let mut image: Vec<usize> = (0..m).collect();
    for level in g.level_sets() {
        for (i, &x) in level.iter().enumerate() {
            image[x] = level[(i + 1) % level.len()];
        }
    }
    set.push(FiniteMap::new(image)?);
    Ok(set)
}

/// Strictly positive integer weights normalised to a probability table.
fn random_weights<P: OracleScalar, R: Rng + ?Sized>(rng: &mut R, n: usize, max_w: i64) -> Vec<P> {
    let w: Vec<i64> = (0..n).map(|_| rng.random_range(1..=max_w)).collect();
    let total: i64 = w.iter().sum();
    w.into_iter().map(|wi| P::from_ratio(wi, total)).collect()
}

/// Random joint table with all-positive entries and a random feature `g`,
/// scored by 0–1 loss.
pub fn random_instance<P: OracleScalar, R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    n_labels: usize,
    n_levels: usize,
) -> Result<FiniteInstance<P>> {
    let g = random_fn(rng, m, n_levels);
    // Small weights make exact conditional ties reasonably common.
    let prob = random_weights(rng, m * n_labels, 4);
    FiniteInstance::new(m, n_labels, prob, g, LossTable::zero_one(n_labels))
}

/// Instance with `P(x, y) = p(x) · q(y | g(x))`.
pub fn random_structural_instance<P: OracleScalar, R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    n_labels: usize,
    n_levels: usize,
) -> Result<FiniteInstance<P>> {
    let g = random_fn(rng, m, n_levels);
    let px: Vec<P> = random_weights(rng, m, 5);
    let cond: Vec<Vec<P>> = (0..n_levels)
        .map(|_| random_weights(rng, n_labels, 5))
        .collect();
    let mut prob = Vec::with_capacity(m * n_labels);
    for x in 0..m {
        for y in 0..n_labels {
            prob.push(px[x].clone() * cond[g.at(x)][y].clone());
        }
    }
    FiniteInstance::new(m, n_labels, prob, g, LossTable::zero_one(n_labels))
}
