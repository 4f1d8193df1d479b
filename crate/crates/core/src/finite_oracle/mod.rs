//! Brute-force checks of the invariance lemmas and theorems on finite spaces.
//!
//! Inputs are `{0, …, m−1}`, features and predictors are [`FiniteFn`]s, and
//! transformations are total self-maps ([`FiniteMap`]). Everything is decided
//! by exhaustive enumeration, so sizes are capped: `m ≤ 6` when enumerating
//! all `mᵐ` maps and `m ≤ 5` when enumerating predictors.
//!
//! "Almost surely" collapses to exact equality here because every input of a
//! [`FiniteInstance`] has positive probability.

mod instance;
pub mod random;
pub mod suite;

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub use instance::{
    check_theorem1_family, check_theorem2, check_theorem3, constrained_minimizers, hs_set,
    point_masses_plus_uniform, worst_case_risk, FiniteInstance, LossTable,
};

/// Largest input space for which all self-maps are enumerated.
pub const MAX_MAP_DOMAIN: usize = 6;
/// Largest input space for which all predictors are enumerated.
pub const MAX_PREDICTOR_DOMAIN: usize = 5;
/// Cap on the number of enumerated predictors.
pub const MAX_PREDICTORS: usize = 1 << 16;

/// A function `{0..m−1} → {0..r−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteFn {
    values: Vec<usize>,
    codomain: usize,
}

impl FiniteFn {
    pub fn new(values: Vec<usize>, codomain: usize) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v >= codomain) {
            return Err(Error::Domain(format!(
                "value {v} outside codomain of size {codomain}"
            )));
        }
        Ok(FiniteFn { values, codomain })
    }

    /// Codomain taken as one past the largest value.
    pub fn from_values(values: Vec<usize>) -> Self {
        let codomain = values.iter().max().map_or(1, |v| v + 1);
        FiniteFn { values, codomain }
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn codomain(&self) -> usize {
        self.codomain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize) -> usize {
        self.values[x]
    }

    /// `self ∘ t`.
    pub fn after(&self, t: &FiniteMap) -> FiniteFn {
        FiniteFn {
            values: t.image.iter().map(|&x| self.values[x]).collect(),
            codomain: self.codomain,
        }
    }

    /// `self ∘ t == self`.
    pub fn is_invariant_under(&self, t: &FiniteMap) -> bool {
        t.image.len() == self.values.len()
            && t.image
                .iter()
                .enumerate()
                .all(|(x, &tx)| self.values[tx] == self.values[x])
    }

    /// Nonempty level sets, ordered by value.
    pub fn level_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.codomain];
        for (x, &v) in self.values.iter().enumerate() {
            sets[v].push(x);
        }
        sets.retain(|s| !s.is_empty());
        sets
    }

    pub fn is_injective(&self) -> bool {
        self.level_sets().iter().all(|s| s.len() == 1)
    }

    /// All `rᵐ` functions in lexicographic order of their value vectors.
    pub fn enumerate(m: usize, r: usize) -> Result<Vec<FiniteFn>> {
        let total = checked_pow(r, m)
            .filter(|&t| t <= MAX_PREDICTORS)
            .ok_or(Error::TooLarge {
                what: "functions r^m",
                size: checked_pow(r, m).unwrap_or(usize::MAX),
                cap: MAX_PREDICTORS,
            })?;
        Ok(Odometer::new(m, r)
            .take(total)
            .map(|values| FiniteFn {
                values,
                codomain: r,
            })
            .collect())
    }
}

/// A total self-map of `{0..m−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteMap {
    image: Vec<usize>,
}

impl FiniteMap {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let m = image.len();
        if let Some(v) = image.iter().find(|&&v| v >= m) {
            return Err(Error::Domain(format!(
                "image {v} outside domain of size {m}"
            )));
        }
        Ok(FiniteMap { image })
    }

    pub fn identity(m: usize) -> Self {
        FiniteMap {
            image: (0..m).collect(),
        }
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.image[x]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &FiniteMap) -> FiniteMap {
        FiniteMap {
            image: other.image.iter().map(|&x| self.image[x]).collect(),
        }
    }

    /// All `mᵐ` maps, `m ≤ MAX_MAP_DOMAIN`.
    pub fn enumerate(m: usize) -> Result<Vec<FiniteMap>> {
        if m > MAX_MAP_DOMAIN {
            return Err(Error::TooLarge {
                what: "map domain m",
                size: m,
                cap: MAX_MAP_DOMAIN,
            });
        }
        let total = m.pow(m as u32);
        Ok(Odometer::new(m, m)
            .take(total)
            .map(|image| FiniteMap { image })
            .collect())
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Lexicographic enumeration of `{0..r−1}^m`.
struct Odometer {
    digits: Vec<usize>,
    radix: usize,
    done: bool,
}

impl Odometer {
    fn new(m: usize, radix: usize) -> Self {
        Odometer {
            digits: vec![0; m],
            radix,
            done: radix == 0 && m > 0,
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.digits.clone();
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.radix {
                break;
            }
            self.digits[i] = 0;
        }
        Some(out)
    }
}

/// `{T : h ∘ T = h}` among all self-maps of `{0..m−1}`.
pub fn invariant_maps(h: &FiniteFn, m: usize) -> Result<Vec<FiniteMap>> {
    if h.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: h.len(),
        });
    }
    if m > MAX_MAP_DOMAIN {
        return Err(Error::TooLarge {
            what: "map domain m",
            size: m,
            cap: MAX_MAP_DOMAIN,
        });
    }
    // Choose T(x) independently within the level set of x.
    let levels: Vec<Vec<usize>> = (0..m)
        .map(|x| (0..m).filter(|&z| h.at(z) == h.at(x)).collect())
        .collect();
    let total: usize = levels.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut pos = vec![0usize; m];
    'outer: loop {
        out.push(FiniteMap {
            image: (0..m).map(|x| levels[x][pos[x]]).collect(),
        });
        let mut i = m;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < levels[i].len() {
                break;
            }
            pos[i] = 0;
        }
    }
    Ok(out)
}

/// Whether every level set of `h1` lies inside a level set of `h2`,
/// equivalently `h2 = v ∘ h1` for some `v`.
pub fn refines(h1: &FiniteFn, h2: &FiniteFn) -> bool {
    debug_assert_eq!(h1.len(), h2.len());
    let n = h1.len().min(h2.len());
    let mut image: Vec<Option<usize>> = vec![None; h1.codomain()];
    for x in 0..n {
        match image[h1.at(x)] {
            None => image[h1.at(x)] = Some(h2.at(x)),
            Some(v) if v != h2.at(x) => return false,
            Some(_) => {}
        }
    }
    true
}

/// Subset test on sorted map lists.
fn is_subset(a: &[FiniteMap], b: &[FiniteMap]) -> bool {
    a.iter().all(|t| b.binary_search(t).is_ok())
}

/// Invariance-set characterisation of refinement, decided by enumeration:
/// `T_{h1} ⊆ T_{h2} ⇔ h2 = v ∘ h1`, and `T_{h1} = T_{h2} ⇔` mutual refinement.
pub fn check_lemma1(h1: &FiniteFn, h2: &FiniteFn) -> Result<bool> {
    let m = h1.len();
    let mut t1 = invariant_maps(h1, m)?;
    let mut t2 = invariant_maps(h2, m)?;
    t1.sort_unstable();
    t2.sort_unstable();
    let r12 = refines(h1, h2);
    let r21 = refines(h2, h1);
    let subset = is_subset(&t1, &t2);
    let equal = t1 == t2;
    Ok(subset == r12 && equal == (r12 && r21))
}

/// Whether finite compositions of maps from `set` connect every pair of
/// inputs sharing a value of `g`.
///
/// Decided by breadth-first search from each input; the empty composition
/// (identity) is allowed, so every input reaches itself.
pub fn is_essential(set: &[FiniteMap], g: &FiniteFn) -> Result<bool> {
    let m = g.len();
    for t in set {
        if t.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: t.len(),
            });
        }
        if !g.is_invariant_under(t) {
            return Err(Error::Precondition(format!(
                "map {:?} does not preserve g",
                t.image
            )));
        }
    }
    let mut seen = vec![false; m];
    let mut queue = VecDeque::new();
    for x in 0..m {
        seen.iter_mut().for_each(|s| *s = false);
        seen[x] = true;
        queue.clear();
        queue.push_back(x);
        while let Some(z) = queue.pop_front() {
            for t in set {
                let next = t.apply(z);
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        if (0..m).any(|z| g.at(z) == g.at(x) && !seen[z]) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For an essential set `set` of `h1`: `set ⊆ T_{h2} ⇒ h2 = v ∘ h1`.
pub fn check_lemma2(set: &[FiniteMap], h1: &FiniteFn, h2: &FiniteFn) -> Result<bool> {
    if h1.len() != h2.len() {
        return Err(Error::DimensionMismatch {
            expected: h1.len(),
            got: h2.len(),
        });
    }
    if !is_essential(set, h1)? {
        return Err(Error::Precondition(
            "map set is not essential for h1".into(),
        ));
    }
    let hypothesis = set.iter().all(|t| h2.is_invariant_under(t));
    Ok(!hypothesis || refines(h1, h2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: &[usize]) -> FiniteFn {
        FiniteFn::from_values(v.to_vec())
    }

    fn brute_invariant(h: &FiniteFn) -> Vec<FiniteMap> {
        FiniteMap::enumerate(h.len())
            .unwrap()
            .into_iter()
            .filter(|t| h.after(t) == *h)
            .collect()
    }

    #[test]
    fn invariant_map_examples() {
        assert_eq!(invariant_maps(&f(&[0, 0]), 2).unwrap().len(), 4);
        let inj = invariant_maps(&f(&[0, 1]), 2).unwrap();
        assert_eq!(inj, vec![FiniteMap::identity(2)]);
        let mut got = invariant_maps(&f(&[0, 0, 1]), 3).unwrap();
        got.sort();
        let expect = brute_invariant(&f(&[0, 0, 1]));
        assert_eq!(expect.len(), 4);
        assert_eq!(got, expect);
        assert!(got.iter().all(|t| t.apply(2) == 2));
    }

    #[test]
    fn invariant_maps_match_brute_force() {
        for h in FiniteFn::enumerate(4, 3).unwrap() {
            let mut got = invariant_maps(&h, 4).unwrap();
            got.sort();
            assert_eq!(got, brute_invariant(&h));
        }
    }

    #[test]
    fn invariant_maps_form_a_monoid() {
        for h in FiniteFn::enumerate(4, 3).unwrap() {
            let mut maps = invariant_maps(&h, 4).unwrap();
            maps.sort();
            assert!(maps.binary_search(&FiniteMap::identity(4)).is_ok());
            for a in maps.iter().step_by(7) {
                for b in &maps {
                    assert!(maps.binary_search(&a.compose(b)).is_ok());
                }
            }
        }
    }

    #[test]
    fn size_caps() {
        assert!(matches!(
            invariant_maps(&f(&[0; 7]), 7),
            Err(Error::TooLarge { .. })
        ));
        assert!(FiniteMap::enumerate(7).is_err());
        assert_eq!(FiniteMap::enumerate(3).unwrap().len(), 27);
        assert!(invariant_maps(&f(&[0, 0]), 3).is_err());
    }

    #[test]
    fn refines_examples() {
        let a = f(&[0, 0, 1]);
        assert!(refines(&a, &a));
        assert!(refines(&f(&[2, 0, 1]), &a));
        assert!(!refines(&a, &f(&[0, 1, 1])));
        assert!(refines(&a, &f(&[0, 0, 0])));
    }

    #[test]
    fn refines_is_a_preorder() {
        let fs = FiniteFn::enumerate(4, 3).unwrap();
        for a in &fs {
            assert!(refines(a, a));
        }
        for a in fs.iter().step_by(5) {
            for b in &fs {
                if !refines(a, b) {
                    continue;
                }
                for c in fs.iter().step_by(3) {
                    if refines(b, c) {
                        assert!(refines(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn lemma1_small_cases() {
        let a = f(&[0, 1, 1]);
        assert!(check_lemma1(&a, &a).unwrap());
        // constant vs injective: neither side holds
        let c = f(&[0, 0, 0]);
        let i = f(&[0, 1, 2]);
        let mut tc = invariant_maps(&c, 3).unwrap();
        let mut ti = invariant_maps(&i, 3).unwrap();
        tc.sort();
        ti.sort();
        assert!(!is_subset(&tc, &ti));
        assert!(!refines(&c, &i));
        assert!(check_lemma1(&c, &i).unwrap());
    }

    #[test]
    fn essential_examples() {
        let g = f(&[0, 0, 1, 1]);
        assert!(is_essential(&invariant_maps(&g, 4).unwrap(), &g).unwrap());
        assert!(!is_essential(&[FiniteMap::identity(4)], &g).unwrap());
        let g3 = f(&[0, 0, 0]);
        let cycle = FiniteMap::new(vec![1, 2, 0]).unwrap();
        assert!(is_essential(&[cycle], &g3).unwrap());
        // a transposition alone misses the third point
        let swap = FiniteMap::new(vec![1, 0, 2]).unwrap();
        assert!(!is_essential(std::slice::from_ref(&swap), &g3).unwrap());
        // a non-invariant map is a precondition error
        assert!(matches!(
            is_essential(&[swap], &f(&[0, 1, 1])),
            Err(Error::Precondition(_))
        ));
        // injective g: the empty set already suffices
        assert!(is_essential(&[], &f(&[0, 1, 2])).unwrap());
    }

    #[test]
    fn lemma2_examples() {
        let h1 = f(&[0, 0, 1]);
        let set = invariant_maps(&h1, 3).unwrap();
        assert!(check_lemma2(&set, &h1, &h1).unwrap());
        // hypothesis fails: vacuous
        assert!(check_lemma2(&set, &h1, &f(&[0, 1, 1])).unwrap());
        assert!(check_lemma2(&[FiniteMap::identity(3)], &h1, &h1).is_err());
    }

    #[test]
    fn odometer_counts() {
        assert_eq!(FiniteFn::enumerate(4, 3).unwrap().len(), 81);
        assert_eq!(FiniteFn::enumerate(0, 3).unwrap().len(), 1);
        assert!(FiniteFn::enumerate(20, 3).is_err());
    }
}
