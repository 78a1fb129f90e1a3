//! Generic explanation procedures, parameterized over the counting backend:
//! the weak-PAXp predicate, single-pass deletion (locally-minimal sets),
//! smallest-set search, and the subset-minimality check.
//!
//! Precision here is always the exact ratio of two model counts, and every
//! threshold comparison is an integer cross-multiplication, so decisions are
//! bit-identical across runs and across backends that encode the same
//! function.

use crate::types::{
    Backend, CountPair, Error, FeatureSet, Instance, Rational, Result, Threshold,
};
use num::BigUint;

fn check_feature_range<B: Backend + ?Sized>(backend: &B, x: &FeatureSet) -> Result<()> {
    let m = backend.meta().feature_count();
    if let Some(&last) = x.as_slice().last() {
        if last > m {
            return Err(Error::input(format!(
                "feature index {last} out of range 1..={m}"
            )));
        }
    }
    Ok(())
}

/// Pr(κ(x) = c | x_X = v_X) as an exact reduced rational.
pub fn precision<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    x: &FeatureSet,
) -> Result<Rational> {
    check_feature_range(backend, x)?;
    Ok(backend.count(v.values(), x, v.class()).precision())
}

fn counts<B: Backend + ?Sized>(backend: &B, v: &Instance, x: &FeatureSet) -> CountPair {
    backend.count(v.values(), x, v.class())
}

/// Whether X is a weak PAXp at δ: precision(X) ≥ δ, decided exactly.
pub fn is_weak_paxp<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    x: &FeatureSet,
    delta: &Threshold,
) -> Result<bool> {
    check_feature_range(backend, x)?;
    Ok(counts(backend, v, x).meets(delta))
}

/// Removal-order policies for the deletion pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderPolicy {
    /// Ascending feature index.
    Lexicographic,
    /// Ascending precision loss: features whose removal costs the least
    /// precision are tried first. The loss of feature j is
    /// precision(X) − precision(X\{j}), computed once against the seed.
    /// Ties break toward the higher feature index.
    PrecisionLossAscending,
}

/// Computes the removal order for a seed set under a policy.
pub fn removal_order<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    seed: &FeatureSet,
    policy: OrderPolicy,
) -> Result<Vec<usize>> {
    check_feature_range(backend, seed)?;
    match policy {
        OrderPolicy::Lexicographic => Ok(seed.as_slice().to_vec()),
        OrderPolicy::PrecisionLossAscending => {
            let base = precision(backend, v, seed)?;
            let mut scored: Vec<(Rational, usize)> = seed
                .iter()
                .map(|j| {
                    let p = counts(backend, v, &seed.without(j)).precision();
                    (base.clone() - p, j)
                })
                .collect();
            scored.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
            Ok(scored.into_iter().map(|(_, j)| j).collect())
        }
    }
}

/// What the deletion pass did: how many removal candidates were tested
/// (always exactly |seed|, one weak-PAXp evaluation each) in addition to the
/// one evaluation that validates the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletionTrace {
    pub removal_checks: usize,
    pub removed: Vec<usize>,
}

/// Single-pass deletion: starting from a weak PAXp seed, try each feature
/// once in the given order and drop it if the remainder still meets δ. The
/// result is a weak PAXp from which no single feature can be removed (a
/// locally-minimal PAXp).
pub fn lm_paxp<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    seed: &FeatureSet,
    order: &[usize],
    delta: &Threshold,
) -> Result<FeatureSet> {
    lm_paxp_traced(backend, v, seed, order, delta).map(|(s, _)| s)
}

/// As [`lm_paxp`], also reporting the evaluation trace.
pub fn lm_paxp_traced<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    seed: &FeatureSet,
    order: &[usize],
    delta: &Threshold,
) -> Result<(FeatureSet, DeletionTrace)> {
    check_feature_range(backend, seed)?;
    let order_set = FeatureSet::new(backend.meta().feature_count(), order.iter().copied())?;
    if order_set != *seed {
        return Err(Error::input(format!(
            "removal order {order_set} does not cover the seed {seed}"
        )));
    }
    if !counts(backend, v, seed).meets(delta) {
        return Err(Error::contract(format!(
            "seed {seed} is not a weak PAXp at delta = {delta}"
        )));
    }
    let mut current = seed.clone();
    let mut trace = DeletionTrace {
        removal_checks: 0,
        removed: Vec::new(),
    };
    for &j in order {
        let candidate = current.without(j);
        trace.removal_checks += 1;
        if counts(backend, v, &candidate).meets(delta) {
            trace.removed.push(j);
            current = candidate;
        }
    }
    Ok((current, trace))
}

/// Deletion at δ=1 over the features listed in `order`: because the δ=1
/// predicate is monotone, the result is a subset-minimal abductive
/// explanation (an AXp) within that universe.
pub fn axp<B: Backend + ?Sized>(backend: &B, v: &Instance, order: &[usize]) -> Result<FeatureSet> {
    let seed = FeatureSet::new(backend.meta().feature_count(), order.iter().copied())?;
    lm_paxp(backend, v, &seed, order, &Threshold::one())
}

/// Lexicographically first weak PAXp of size exactly `k` drawn from
/// `universe`, or None. Partial candidates P with r slots left are pruned
/// with a bound that is sound despite precision being non-monotone:
///
///   precision(P ∪ T) ≤ precision(P) · ∏ (r largest free-domain sizes),
///
/// which follows from target-count monotonicity (fixing more features never
/// adds target models) while the denominator shrinks by exactly the fixed
/// domains' product. At δ=1 an additional prune applies: if fixing P plus
/// every remaining candidate feature does not reach precision 1, no subset
/// in between can (the δ=1 predicate is monotone).
pub fn first_weak_subset_of_size<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    universe: &FeatureSet,
    k: usize,
    delta: &Threshold,
) -> Result<Option<FeatureSet>> {
    check_feature_range(backend, universe)?;
    if k > universe.len() {
        return Ok(None);
    }
    let pool = universe.as_slice();

    struct Search<'a, B: ?Sized> {
        backend: &'a B,
        v: &'a Instance,
        pool: &'a [usize],
        delta: &'a Threshold,
    }

    impl<'a, B: Backend + ?Sized> Search<'a, B> {
        fn run(&self, start: usize, chosen: &mut Vec<usize>, r: usize) -> Option<FeatureSet> {
            if r == 0 {
                let set = FeatureSet::from_sorted_unchecked(chosen.clone());
                if counts(self.backend, self.v, &set).meets(self.delta) {
                    return Some(set);
                }
                return None;
            }
            for t in start..=self.pool.len() - r {
                chosen.push(self.pool[t]);
                if self.viable(chosen, t + 1, r - 1) {
                    if let Some(found) = self.run(t + 1, chosen, r - 1) {
                        return Some(found);
                    }
                }
                chosen.pop();
            }
            None
        }

        /// Can some r-feature extension of `chosen` (drawn from
        /// pool[start..]) still reach δ?
        fn viable(&self, chosen: &[usize], start: usize, r: usize) -> bool {
            let meta = self.backend.meta();
            let partial = FeatureSet::from_sorted_unchecked(chosen.to_vec());
            let c = counts(self.backend, self.v, &partial);
            if r == 0 {
                return c.meets(self.delta);
            }
            let mut tail_sizes: Vec<usize> = self.pool[start..]
                .iter()
                .map(|&i| meta.domain_size(i))
                .collect();
            tail_sizes.sort_unstable_by(|a, b| b.cmp(a));
            let mut headroom = BigUint::from(1u32);
            for s in tail_sizes.into_iter().take(r) {
                headroom *= BigUint::from(s);
            }
            // target(P)·headroom/total(P) < δ means no extension can reach δ.
            if &c.target * &headroom * self.delta.denom() < self.delta.numer() * &c.total {
                return false;
            }
            if self.delta.is_one() {
                let mut all = chosen.to_vec();
                all.extend_from_slice(&self.pool[start..]);
                let everything = FeatureSet::from_sorted_unchecked(all);
                if !counts(self.backend, self.v, &everything).meets(self.delta) {
                    return false;
                }
            }
            true
        }
    }

    let search = Search {
        backend,
        v,
        pool,
        delta,
    };
    let mut chosen = Vec::with_capacity(k);
    if k == 0 {
        let empty = FeatureSet::empty();
        if counts(backend, v, &empty).meets(delta) {
            return Ok(Some(empty));
        }
        return Ok(None);
    }
    Ok(search.run(0, &mut chosen, k))
}

/// First weak PAXp within `universe` of size at most `max_k`, scanning sizes
/// in nondecreasing order (lexicographic within a size).
pub fn first_weak_subset_up_to<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    universe: &FeatureSet,
    max_k: usize,
    delta: &Threshold,
) -> Result<Option<FeatureSet>> {
    for k in 0..=max_k.min(universe.len()) {
        if let Some(found) = first_weak_subset_of_size(backend, v, universe, k, delta)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Smallest-cardinality weak PAXp drawn from `universe`. The result is
/// necessarily subset-minimal (no proper subset of a smallest weak PAXp can
/// be one), hence a PAXp, and among equal-size solutions the
/// lexicographically first is returned.
pub fn min_paxp<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    universe: &FeatureSet,
    delta: &Threshold,
) -> Result<FeatureSet> {
    check_feature_range(backend, universe)?;
    if !counts(backend, v, universe).meets(delta) {
        return Err(Error::contract(format!(
            "universe {universe} is not a weak PAXp at delta = {delta}"
        )));
    }
    for k in 0..=universe.len() {
        if let Some(found) = first_weak_subset_of_size(backend, v, universe, k, delta)? {
            return Ok(found);
        }
    }
    unreachable!("the universe itself meets delta")
}

/// Whether no proper subset of X is a weak PAXp at δ. Free features stay
/// free throughout: the search only considers subsets of X.
pub fn is_subset_minimal<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    x: &FeatureSet,
    delta: &Threshold,
) -> Result<bool> {
    check_feature_range(backend, x)?;
    if !counts(backend, v, x).meets(delta) {
        return Err(Error::contract(format!(
            "{x} is not a weak PAXp at delta = {delta}"
        )));
    }
    if x.is_empty() {
        return Ok(true);
    }
    Ok(first_weak_subset_up_to(backend, v, x, x.len() - 1, delta)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::Tabulated;
    use crate::types::ClassifierMeta;

    fn delta(n: u32, d: u32) -> Threshold {
        Threshold::from_u32_ratio(n, d).unwrap()
    }

    fn demo() -> (crate::dtree::DecisionTree, Instance) {
        let t = fixtures::demo_tree();
        let v = Instance::new(&t, vec![3, 3, 1]).unwrap();
        (t, v)
    }

    #[test]
    fn precision_values() {
        let (t, v) = demo();
        let fs = |idx: &[usize]| FeatureSet::new(3, idx.iter().copied()).unwrap();
        assert_eq!(
            precision(&t, &v, &FeatureSet::empty()).unwrap(),
            Rational::new(21.into(), 32.into())
        );
        assert_eq!(
            precision(&t, &v, &fs(&[3])).unwrap(),
            Rational::new(15.into(), 16.into())
        );
        assert_eq!(
            precision(&t, &v, &FeatureSet::full(3)).unwrap(),
            Rational::new(1.into(), 1.into())
        );
    }

    #[test]
    fn weak_paxp_predicate() {
        let (t, v) = demo();
        let x3 = FeatureSet::new(3, [3]).unwrap();
        assert!(is_weak_paxp(&t, &v, &x3, &delta(93, 100)).unwrap());
        assert!(!is_weak_paxp(&t, &v, &FeatureSet::empty(), &delta(93, 100)).unwrap());
        assert!(is_weak_paxp(&t, &v, &FeatureSet::full(3), &Threshold::one()).unwrap());
    }

    #[test]
    fn removal_order_policies() {
        let (t, v) = demo();
        let seed = FeatureSet::new(3, [1, 2, 3]).unwrap();
        assert_eq!(
            removal_order(&t, &v, &seed, OrderPolicy::Lexicographic).unwrap(),
            vec![1, 2, 3]
        );
        // Features 1 and 2 lose nothing when dropped from the seed; feature 3
        // loses 1/2. Equal losses break toward the higher index.
        assert_eq!(
            removal_order(&t, &v, &seed, OrderPolicy::PrecisionLossAscending).unwrap(),
            vec![2, 1, 3]
        );
    }

    #[test]
    fn deletion_pass() {
        let (t, v) = demo();
        let seed = FeatureSet::new(3, [1, 2, 3]).unwrap();
        let s = lm_paxp(&t, &v, &seed, &[2, 1, 3], &delta(93, 100)).unwrap();
        assert_eq!(s.as_slice(), &[3]);
        let s = lm_paxp(&t, &v, &seed, &[2, 1, 3], &Threshold::one()).unwrap();
        assert_eq!(s.as_slice(), &[1, 3]);
        // A different order can land on a different (equally valid) AXp.
        let s = lm_paxp(&t, &v, &seed, &[1, 2, 3], &Threshold::one()).unwrap();
        assert_eq!(s.as_slice(), &[2, 3]);
        let s = lm_paxp(&t, &v, &seed, &[1, 2, 3], &Threshold::zero()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn deletion_trace_counts_one_check_per_feature() {
        let (t, v) = demo();
        let seed = FeatureSet::new(3, [1, 2, 3]).unwrap();
        let (s, trace) = lm_paxp_traced(&t, &v, &seed, &[2, 1, 3], &delta(93, 100)).unwrap();
        assert_eq!(s.as_slice(), &[3]);
        assert_eq!(trace.removal_checks, 3);
        assert_eq!(trace.removed, vec![2, 1]);
    }

    #[test]
    fn deletion_rejects_bad_inputs() {
        let (t, v) = demo();
        let seed = FeatureSet::new(3, [2]).unwrap();
        // {2} has precision 5/8, not a weak PAXp at delta = 1.
        assert!(matches!(
            lm_paxp(&t, &v, &seed, &[2], &Threshold::one()),
            Err(Error::Contract(_))
        ));
        let seed = FeatureSet::new(3, [1, 2, 3]).unwrap();
        assert!(matches!(
            lm_paxp(&t, &v, &seed, &[1, 2], &delta(93, 100)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn axp_matches_delta_one_deletion() {
        let (t, v) = demo();
        assert_eq!(axp(&t, &v, &[2, 1, 3]).unwrap().as_slice(), &[1, 3]);
        assert_eq!(axp(&t, &v, &[1, 2, 3]).unwrap().as_slice(), &[2, 3]);
    }

    #[test]
    fn smallest_sets() {
        let (t, v) = demo();
        let u = FeatureSet::new(3, [1, 2, 3]).unwrap();
        assert_eq!(min_paxp(&t, &v, &u, &delta(93, 100)).unwrap().as_slice(), &[3]);
        assert_eq!(min_paxp(&t, &v, &u, &Threshold::one()).unwrap().as_slice(), &[1, 3]);
        assert!(min_paxp(&t, &v, &u, &Threshold::zero()).unwrap().is_empty());
        let not_weak = FeatureSet::new(3, [2]).unwrap();
        assert!(matches!(
            min_paxp(&t, &v, &not_weak, &Threshold::one()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn subset_minimality() {
        let (t, v) = demo();
        let fs = |idx: &[usize]| FeatureSet::new(3, idx.iter().copied()).unwrap();
        assert!(is_subset_minimal(&t, &v, &fs(&[3]), &delta(93, 100)).unwrap());
        assert!(!is_subset_minimal(&t, &v, &fs(&[1, 3]), &delta(93, 100)).unwrap());
        assert!(is_subset_minimal(&t, &v, &fs(&[1, 3]), &Threshold::one()).unwrap());
        assert!(is_subset_minimal(&t, &v, &FeatureSet::empty(), &delta(60, 100)).unwrap());
        assert!(matches!(
            is_subset_minimal(&t, &v, &fs(&[2]), &Threshold::one()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn first_weak_subset_scans_lexicographically() {
        let (t, v) = demo();
        let u = FeatureSet::new(3, [1, 2, 3]).unwrap();
        let found = first_weak_subset_of_size(&t, &v, &u, 1, &delta(93, 100)).unwrap();
        assert_eq!(found.unwrap().as_slice(), &[3]);
        // Two AXps of size 2 exist ({1,3} and {2,3}); lexicographic order
        // puts {1,3} first.
        let found = first_weak_subset_of_size(&t, &v, &u, 2, &Threshold::one()).unwrap();
        assert_eq!(found.unwrap().as_slice(), &[1, 3]);
        let none = first_weak_subset_of_size(&t, &v, &u, 1, &Threshold::one()).unwrap();
        assert!(none.is_none());
    }

    /// Regression guard for the pruning bound. Fixing more features can
    /// lower precision, so a prune that bounds a partial candidate by the
    /// precision of "the candidate plus every remaining feature" is wrong
    /// below δ=1. This table is built so that at δ=7/10 the smallest weak
    /// PAXp is {2,4} while {2,3,4} falls below δ: the unsound prune would
    /// skip the whole {2,...} subtree and report a size-3 set instead.
    #[test]
    fn min_paxp_survives_nonmonotone_precision() {
        let meta = ClassifierMeta::new(
            (1..=4).map(|i| format!("x{i}")).collect(),
            vec![vec!["0".into(), "1".into()]; 4],
            vec!["neg".into(), "pos".into()],
        )
        .unwrap();
        // Positive points: (1,1,1,1), (1,1,0,1), (0,1,0,1).
        let mut table = vec![0usize; 16];
        let idx = |bits: [usize; 4]| bits[0] * 8 + bits[1] * 4 + bits[2] * 2 + bits[3];
        table[idx([1, 1, 1, 1])] = 1;
        table[idx([1, 1, 0, 1])] = 1;
        table[idx([0, 1, 0, 1])] = 1;
        let backend = Tabulated::from_table(meta, table).unwrap();
        let v = Instance::new(&backend, vec![1, 1, 1, 1]).unwrap();
        assert_eq!(v.class(), 1);

        let fs = |idx: &[usize]| FeatureSet::new(4, idx.iter().copied()).unwrap();
        let d = delta(7, 10);
        assert_eq!(
            precision(&backend, &v, &fs(&[2, 4])).unwrap(),
            Rational::new(3.into(), 4.into())
        );
        assert_eq!(
            precision(&backend, &v, &fs(&[2, 3, 4])).unwrap(),
            Rational::new(1.into(), 2.into())
        );
        let u = FeatureSet::full(4);
        assert_eq!(min_paxp(&backend, &v, &u, &d).unwrap().as_slice(), &[2, 4]);
        assert!(is_subset_minimal(&backend, &v, &fs(&[2, 4]), &d).unwrap());
    }
}
