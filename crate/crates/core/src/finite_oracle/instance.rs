use std::collections::BTreeSet;

use super::{
    invariant_maps, is_essential, FiniteFn, FiniteMap, MAX_PREDICTORS, MAX_PREDICTOR_DOMAIN,
};
use crate::error::{Error, Result};
use crate::scalar::OracleScalar;

/// Loss `L(z, y)` over a finite prediction set × outcome set.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable<P> {
    n_preds: usize,
    n_labels: usize,
    values: Vec<P>,
}

impl<P: OracleScalar> LossTable<P> {
    pub fn new(n_preds: usize, n_labels: usize, values: Vec<P>) -> Result<Self> {
        if values.len() != n_preds * n_labels {
            return Err(Error::DimensionMismatch {
                expected: n_preds * n_labels,
                got: values.len(),
            });
        }
        Ok(LossTable {
            n_preds,
            n_labels,
            values,
        })
    }

    /// 0–1 loss with predictions ranging over the labels.
    pub fn zero_one(n_labels: usize) -> Self {
        let values = (0..n_labels * n_labels)
            .map(|i| {
                if i / n_labels == i % n_labels {
                    P::zero()
                } else {
                    P::one()
                }
            })
            .collect();
        LossTable {
            n_preds: n_labels,
            n_labels,
            values,
        }
    }

    /// Squared loss `(z − y)²` with predictions on `grid` and outcomes
    /// taking the numeric values `label_values`.
    pub fn squared(grid: &[P], label_values: &[P]) -> Self {
        let mut values = Vec::with_capacity(grid.len() * label_values.len());
        for z in grid {
            for y in label_values {
                let d = z.clone() - y.clone();
                values.push(d.clone() * d);
            }
        }
        LossTable {
            n_preds: grid.len(),
            n_labels: label_values.len(),
            values,
        }
    }

    pub fn n_preds(&self) -> usize {
        self.n_preds
    }

    #[inline]
    pub fn at(&self, z: usize, y: usize) -> &P {
        &self.values[z * self.n_labels + y]
    }
}

/// A finite joint distribution of `(X, Y)` with a causal feature and a loss.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteInstance<P> {
    m: usize,
    n_labels: usize,
    /// `prob[x * n_labels + y]`.
    prob: Vec<P>,
    g: FiniteFn,
    loss: LossTable<P>,
}

impl<P: OracleScalar> FiniteInstance<P> {
    /// Validates non-negativity, unit mass and positive input marginals.
    pub fn new(
        m: usize,
        n_labels: usize,
        prob: Vec<P>,
        g: FiniteFn,
        loss: LossTable<P>,
    ) -> Result<Self> {
        if prob.len() != m * n_labels {
            return Err(Error::DimensionMismatch {
                expected: m * n_labels,
                got: prob.len(),
            });
        }
        if g.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: g.len(),
            });
        }
        if loss.n_labels != n_labels {
            return Err(Error::DimensionMismatch {
                expected: n_labels,
                got: loss.n_labels,
            });
        }
        if prob.iter().any(|p| p.is_negative()) {
            return Err(Error::Domain("negative probability".into()));
        }
        let total = prob.iter().cloned().fold(P::zero(), |a, b| a + b);
        if !total.ties(&P::one()) {
            return Err(Error::Domain(format!(
                "probabilities sum to {:?}, not 1",
                total
            )));
        }
        let inst = FiniteInstance {
            m,
            n_labels,
            prob,
            g,
            loss,
        };
        if let Some(x) = (0..m).find(|&x| !inst.marginal(x).is_positive()) {
            return Err(Error::Domain(format!("input {x} has zero probability")));
        }
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn g(&self) -> &FiniteFn {
        &self.g
    }

    pub fn loss(&self) -> &LossTable<P> {
        &self.loss
    }

    pub fn n_preds(&self) -> usize {
        self.loss.n_preds
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> &P {
        &self.prob[x * self.n_labels + y]
    }

    pub fn marginal(&self, x: usize) -> P {
        (0..self.n_labels).fold(P::zero(), |a, y| a + self.prob(x, y).clone())
    }

    /// `Σ_y L(z, y) P(x, y)`: unnormalised conditional risk of predicting `z` at `x`.
    fn point_risk(&self, x: usize, z: usize) -> P {
        (0..self.n_labels).fold(P::zero(), |a, y| {
            a + self.loss.at(z, y).clone() * self.prob(x, y).clone()
        })
    }

    /// Expected loss of the predictor `h` (values are prediction indices).
    pub fn risk(&self, h: &FiniteFn) -> P {
        (0..self.m).fold(P::zero(), |a, x| a + self.point_risk(x, h.at(x)))
    }

    /// All predictors `{0..m−1} → predictions`, capped.
    pub fn predictors(&self) -> Result<Vec<FiniteFn>> {
        if self.m > MAX_PREDICTOR_DOMAIN {
            return Err(Error::TooLarge {
                what: "predictor domain m",
                size: self.m,
                cap: MAX_PREDICTOR_DOMAIN,
            });
        }
        FiniteFn::enumerate(self.m, self.n_preds())
    }
}

fn argmin_set<P: OracleScalar, I: IntoIterator<Item = (usize, P)>>(items: I) -> Vec<usize> {
    let items: Vec<(usize, P)> = items.into_iter().collect();
    let Some(best) = items
        .iter()
        .map(|(_, r)| r.clone())
        .reduce(|a, b| if b < a { b } else { a })
    else {
        return Vec::new();
    };
    items
        .into_iter()
        .filter(|(_, r)| r.ties(&best))
        .map(|(i, _)| i)
        .collect()
}

/// Minimisers of `values` under tie semantics, as a set of predictors.
fn minimizers<P: OracleScalar>(cands: Vec<(FiniteFn, P)>) -> BTreeSet<FiniteFn> {
    let Some(best) = cands
        .iter()
        .map(|(_, r)| r.clone())
        .reduce(|a, b| if b < a { b } else { a })
    else {
        return BTreeSet::new();
    };
    cands
        .into_iter()
        .filter(|(_, r)| r.ties(&best))
        .map(|(h, _)| h)
        .collect()
}

/// Predictors `φ ∘ g` with `φ(w)` in the conditional argmin on each level
/// of `g`; ties produce one predictor per choice.
pub fn hs_set<P: OracleScalar>(inst: &FiniteInstance<P>) -> Result<BTreeSet<FiniteFn>> {
    let levels = inst.g.level_sets();
    let mut per_level: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(levels.len());
    for level in levels {
        let mass = level.iter().fold(P::zero(), |a, &x| a + inst.marginal(x));
        if !mass.is_positive() {
            return Err(Error::Precondition(format!(
                "level set {level:?} has zero probability"
            )));
        }
        let best = argmin_set((0..inst.n_preds()).map(|z| {
            let r = level
                .iter()
                .fold(P::zero(), |a, &x| a + inst.point_risk(x, z));
            (z, r)
        }));
        per_level.push((level, best));
    }
    let total: usize = per_level.iter().map(|(_, b)| b.len()).product();
    if total > MAX_PREDICTORS {
        return Err(Error::TooLarge {
            what: "tied conditional minimisers",
            size: total,
            cap: MAX_PREDICTORS,
        });
    }
    let mut out = BTreeSet::new();
    let mut pos = vec![0usize; per_level.len()];
    loop {
        let mut values = vec![0usize; inst.m];
        for (li, (level, best)) in per_level.iter().enumerate() {
            for &x in level {
                values[x] = best[pos[li]];
            }
        }
        out.insert(FiniteFn::new(values, inst.n_preds())?);
        let mut i = per_level.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < per_level[i].1.len() {
                break;
            }
            pos[i] = 0;
        }
    }
}

/// Risk minimisers among all predictors with `h ∘ T = h` for every `T` in `set`.
pub fn constrained_minimizers<P: OracleScalar>(
    inst: &FiniteInstance<P>,
    set: &[FiniteMap],
) -> Result<BTreeSet<FiniteFn>> {
    let cands = inst
        .predictors()?
        .into_iter()
        .filter(|h| set.iter().all(|t| h.is_invariant_under(t)))
        .map(|h| {
            let r = inst.risk(&h);
            (h, r)
        })
        .collect();
    Ok(minimizers(cands))
}

/// Constrained risk minimisation over an essential set recovers exactly the
/// causal predictors: `hs_set == argmin { risk(h) : h ∘ T = h, T ∈ set }`.
pub fn check_theorem3<P: OracleScalar>(
    inst: &FiniteInstance<P>,
    set: &[FiniteMap],
) -> Result<bool> {
    if !is_essential(set, inst.g())? {
        return Err(Error::Precondition("map set is not essential for g".into()));
    }
    Ok(hs_set(inst)? == constrained_minimizers(inst, set)?)
}

/// `max_{T ∈ maps} risk(h ∘ T)`.
pub fn worst_case_risk<P: OracleScalar>(
    inst: &FiniteInstance<P>,
    h: &FiniteFn,
    maps: &[FiniteMap],
) -> P {
    maps.iter()
        .map(|t| inst.risk(&h.after(t)))
        .reduce(|a, b| if b > a { b } else { a })
        .unwrap_or_else(|| inst.risk(h))
}

/// Every causal predictor minimises the worst transformed risk over all
/// feature-preserving maps (containment, not equality).
pub fn check_theorem2<P: OracleScalar>(inst: &FiniteInstance<P>) -> Result<bool> {
    let maps = invariant_maps(inst.g(), inst.m())?;
    let best = inst
        .predictors()?
        .iter()
        .map(|h| worst_case_risk(inst, h, &maps))
        .reduce(|a, b| if b < a { b } else { a })
        .expect("at least one predictor");
    Ok(hs_set(inst)?
        .iter()
        .all(|hs| worst_case_risk(inst, hs, &maps).ties(&best)))
}

/// Point masses on every input followed by the uniform distribution.
pub fn point_masses_plus_uniform<P: OracleScalar>(m: usize) -> Vec<Vec<P>> {
    let mut fam: Vec<Vec<P>> = (0..m)
        .map(|x| {
            (0..m)
                .map(|z| if z == x { P::one() } else { P::zero() })
                .collect()
        })
        .collect();
    fam.push(vec![P::from_ratio(1, m as i64); m]);
    fam
}

/// Causal predictors are minimax over the family `{Q_P}` where `X ~ P`
/// independently of the noise and `Y` follows the source conditional law
/// given `g(X)`: for every predictor `h`,
/// `max_P risk_{Q_P}(h) ≥ max_P risk_{Q_P}(h_s)` for all `h_s ∈ hs_set`.
pub fn check_theorem1_family<P: OracleScalar>(
    inst: &FiniteInstance<P>,
    marginals: &[Vec<P>],
) -> Result<bool> {
    let m = inst.m();
    let nl = inst.n_labels();
    let levels = inst.g().level_sets();
    let mut level_of = vec![0usize; m];
    for (li, level) in levels.iter().enumerate() {
        for &x in level {
            level_of[x] = li;
        }
    }
    // joint mass of (level, y) and level mass
    let mut level_y = vec![P::zero(); levels.len() * nl];
    let mut level_mass = vec![P::zero(); levels.len()];
    for x in 0..m {
        let li = level_of[x];
        for y in 0..nl {
            level_y[li * nl + y] = level_y[li * nl + y].clone() + inst.prob(x, y).clone();
        }
        level_mass[li] = level_mass[li].clone() + inst.marginal(x);
    }
    // Y ⟂ X | g(X):  P(x, y)·P(level) == P(level, y)·P(x)
    for x in 0..m {
        let li = level_of[x];
        let px = inst.marginal(x);
        for y in 0..nl {
            let lhs = inst.prob(x, y).clone() * level_mass[li].clone();
            let rhs = level_y[li * nl + y].clone() * px.clone();
            if !lhs.ties(&rhs) {
                return Err(Error::Precondition(format!(
                    "outcome law at input {x} is not a function of g(x)"
                )));
            }
        }
    }
    for (k, marg) in marginals.iter().enumerate() {
        if marg.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: marg.len(),
            });
        }
        let total = marg.iter().cloned().fold(P::zero(), |a, b| a + b);
        if marg.iter().any(|p| p.is_negative()) || !total.ties(&P::one()) {
            return Err(Error::Domain(format!(
                "marginal {k} is not a probability vector"
            )));
        }
    }
    if marginals.is_empty() {
        return Err(Error::Domain("empty marginal family".into()));
    }
    // cond[x][z] = E[L(z, Y) | g(X) = g(x)]
    let cond: Vec<Vec<P>> = (0..m)
        .map(|x| {
            let li = level_of[x];
            (0..inst.n_preds())
                .map(|z| {
                    (0..nl).fold(P::zero(), |a, y| {
                        a + inst.loss().at(z, y).clone() * level_y[li * nl + y].clone()
                    }) / level_mass[li].clone()
                })
                .collect()
        })
        .collect();
    let family_worst = |h: &FiniteFn| -> P {
        marginals
            .iter()
            .map(|marg| {
                (0..m).fold(P::zero(), |a, x| {
                    a + marg[x].clone() * cond[x][h.at(x)].clone()
                })
            })
            .reduce(|a, b| if b > a { b } else { a })
            .expect("nonempty family")
    };
    let hs_worst: Vec<P> = hs_set(inst)?.iter().map(family_worst).collect();
    for h in inst.predictors()? {
        let w = family_worst(&h);
        for hw in &hs_worst {
            if w < *hw && !w.ties(hw) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
