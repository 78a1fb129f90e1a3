//! Ground truth by exhaustive enumeration. Everything here goes through
//! `classify` only, never through a backend's `count`, so these results are
//! independent of the counting machinery they are used to check.

use crate::types::{
    Backend, ClassifierMeta, CountPair, Error, FeatureSet, Instance, Rational, Result, Threshold,
};
use num::{BigUint, ToPrimitive};

/// Refuses enumeration above this many points unless overridden.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

/// How to walk the completion space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            ExecMode::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            ExecMode::Sequential
        }
    }
}

fn free_features(meta: &ClassifierMeta, fixed: &FeatureSet) -> Vec<usize> {
    fixed.complement(meta.feature_count()).as_slice().to_vec()
}

/// Writes the `index`-th completion (mixed-radix, first free feature least
/// significant) into `point`.
fn decode_into(meta: &ClassifierMeta, free: &[usize], mut index: u64, point: &mut [usize]) {
    for &f in free {
        let radix = meta.domain_size(f) as u64;
        point[f - 1] = (index % radix) as usize;
        index /= radix;
    }
}

fn hits_in_range<B: Backend + ?Sized>(
    backend: &B,
    values: &[usize],
    free: &[usize],
    class: usize,
    range: std::ops::Range<u64>,
) -> u64 {
    let meta = backend.meta();
    let mut point = values.to_vec();
    let mut hits = 0u64;
    for index in range {
        decode_into(meta, free, index, &mut point);
        if backend.classify(&point) == class {
            hits += 1;
        }
    }
    hits
}

/// Counts completions classified as `class` by trying every single one.
/// Refuses (exit path for callers: budget error) when the free space exceeds
/// `budget` points.
pub fn brute_count_in<B: Backend + Sync + ?Sized>(
    backend: &B,
    mode: ExecMode,
    values: &[usize],
    fixed: &FeatureSet,
    class: usize,
    budget: u64,
) -> Result<CountPair> {
    let meta = backend.meta();
    meta.check_values(values)?;
    let needed = meta.free_space_size(fixed);
    let limit = BigUint::from(budget);
    if needed > limit {
        return Err(Error::Budget {
            needed,
            budget: limit,
        });
    }
    let total = needed.to_u64().expect("within budget, so fits in u64");
    let free = free_features(meta, fixed);
    let hits = match mode {
        ExecMode::Sequential => hits_in_range(backend, values, &free, class, 0..total),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            let chunk = 1u64 << 12;
            let chunks = total.div_ceil(chunk).max(1);
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let start = c * chunk;
                    let end = (start + chunk).min(total);
                    hits_in_range(backend, values, &free, class, start..end)
                })
                .sum()
        }
    };
    Ok(CountPair {
        target: BigUint::from(hits),
        total: BigUint::from(total),
    })
}

/// [`brute_count_in`] under the default execution mode.
pub fn brute_count<B: Backend + Sync + ?Sized>(
    backend: &B,
    values: &[usize],
    fixed: &FeatureSet,
    class: usize,
    budget: u64,
) -> Result<CountPair> {
    brute_count_in(backend, ExecMode::default(), values, fixed, class, budget)
}

/// Exact precision by enumeration.
pub fn brute_precision<B: Backend + Sync + ?Sized>(
    backend: &B,
    v: &Instance,
    fixed: &FeatureSet,
    budget: u64,
) -> Result<Rational> {
    Ok(brute_count(backend, v.values(), fixed, v.class(), budget)?.precision())
}

/// A random query on which a backend's counter disagreed with enumeration.
#[derive(Debug, Clone)]
pub struct CountMismatch {
    pub values: Vec<usize>,
    pub fixed: FeatureSet,
    pub class: usize,
    pub backend: CountPair,
    pub oracle: CountPair,
}

/// Fires `queries` random (point, fixed set, class) triples at the backend
/// and recounts each one by enumeration. Also asserts, per query, that the
/// class counts over the fixed set partition the free space and that both
/// counts shrink when one more feature is fixed. Returns the first
/// disagreement, or `None` when every count matches.
pub fn spot_check<B: Backend + Sync + ?Sized>(
    backend: &B,
    mode: ExecMode,
    queries: usize,
    seed: u64,
    budget: u64,
) -> Result<Option<CountMismatch>> {
    use rand::{Rng, SeedableRng};
    let meta = backend.meta();
    let m = meta.feature_count();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..queries {
        let values: Vec<usize> = (1..=m).map(|i| rng.gen_range(0..meta.domain_size(i))).collect();
        let fixed = FeatureSet::new(m, (1..=m).filter(|_| rng.gen_bool(0.5)))
            .expect("sampled indices are in range");
        let class = rng.gen_range(0..meta.class_count());
        let got = backend.count(&values, &fixed, class);
        let per_class: BigUint = (0..meta.class_count())
            .map(|c| backend.count(&values, &fixed, c).target)
            .sum();
        if per_class != got.total || got.total != meta.free_space_size(&fixed) {
            return Err(Error::contract(
                "class counts do not partition the free space",
            ));
        }
        let free = fixed.complement(m);
        if !free.is_empty() {
            let extra = free.as_slice()[rng.gen_range(0..free.len())];
            let tighter = backend.count(&values, &fixed.with(extra), class);
            if tighter.target > got.target || tighter.total > got.total {
                return Err(Error::contract(
                    "counts grew when the fixed set grew",
                ));
            }
        }
        let want = brute_count_in(backend, mode, &values, &fixed, class, budget)?;
        if got != want {
            return Ok(Some(CountMismatch {
                values,
                fixed,
                class,
                backend: got,
                oracle: want,
            }));
        }
    }
    Ok(None)
}

const EXHAUSTIVE_UNIVERSE_LIMIT: usize = 16;

/// Smallest weak PAXp by trying every subset of `universe` in size-then-lex
/// order, deciding each candidate by enumeration. Refuses universes beyond
/// 16 features.
pub fn exhaustive_min_paxp<B: Backend + Sync + ?Sized>(
    backend: &B,
    v: &Instance,
    universe: &FeatureSet,
    delta: &Threshold,
    budget: u64,
) -> Result<FeatureSet> {
    if universe.len() > EXHAUSTIVE_UNIVERSE_LIMIT {
        return Err(Error::Budget {
            needed: BigUint::from(1u32) << universe.len(),
            budget: BigUint::from(1u32) << EXHAUSTIVE_UNIVERSE_LIMIT,
        });
    }
    let pool = universe.as_slice();
    for k in 0..=pool.len() {
        let mut found: Result<Option<FeatureSet>> = Ok(None);
        for_each_subset_of_size(pool, k, &mut |subset| {
            let set = FeatureSet::from_sorted_unchecked(subset.to_vec());
            match brute_count(backend, v.values(), &set, v.class(), budget) {
                Ok(c) if c.meets(delta) => {
                    found = Ok(Some(set));
                    true
                }
                Ok(_) => false,
                Err(e) => {
                    found = Err(e);
                    true
                }
            }
        });
        if let Some(set) = found? {
            return Ok(set);
        }
    }
    Err(Error::contract(format!(
        "universe {universe} is not a weak PAXp at delta = {delta}"
    )))
}

/// Calls `visit` on each size-k subset of `pool` in lexicographic order
/// until it returns true.
fn for_each_subset_of_size(pool: &[usize], k: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    fn rec(
        pool: &[usize],
        start: usize,
        chosen: &mut Vec<usize>,
        r: usize,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if r == 0 {
            return visit(chosen);
        }
        for t in start..=pool.len() - r {
            chosen.push(pool[t]);
            if rec(pool, t + 1, chosen, r - 1, visit) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    if k > pool.len() {
        return;
    }
    let mut chosen = Vec::with_capacity(k);
    rec(pool, 0, &mut chosen, k, visit);
}

/// A classifier frozen into a truth table, counting by enumeration. Useful
/// both as an independent backend over the same function as some structured
/// model and for spelling out tiny classifiers directly in tests.
#[derive(Debug, Clone)]
pub struct Tabulated {
    meta: ClassifierMeta,
    table: Vec<usize>,
}

impl Tabulated {
    /// Tabulates an existing backend. Refuses feature spaces beyond `budget`.
    pub fn from_backend<B: Backend + ?Sized>(backend: &B, budget: u64) -> Result<Self> {
        let meta = backend.meta().clone();
        let needed = meta.space_size();
        let limit = BigUint::from(budget);
        if needed > limit {
            return Err(Error::Budget {
                needed,
                budget: limit,
            });
        }
        let total = needed.to_u64().expect("within budget, so fits in u64");
        let free: Vec<usize> = (1..=meta.feature_count()).collect();
        let mut point = vec![0usize; meta.feature_count()];
        let table = (0..total)
            .map(|index| {
                decode_into(&meta, &free, index, &mut point);
                backend.classify(&point)
            })
            .collect();
        Ok(Self { meta, table })
    }

    /// Builds directly from a table indexed mixed-radix with the FIRST
    /// feature most significant (row-major over domains in feature order).
    pub fn from_table(meta: ClassifierMeta, table: Vec<usize>) -> Result<Self> {
        let expected = meta.space_size();
        if BigUint::from(table.len()) != expected {
            return Err(Error::input(format!(
                "table has {} entries, feature space has {expected}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|&&c| c >= meta.class_count()) {
            return Err(Error::input(format!("table contains unknown class {bad}")));
        }
        // Re-index to the internal layout (first feature least significant).
        let m = meta.feature_count();
        let free: Vec<usize> = (1..=m).collect();
        let mut point = vec![0usize; m];
        let internal = (0..table.len() as u64)
            .map(|index| {
                decode_into(&meta, &free, index, &mut point);
                let mut row = 0usize;
                for f in 1..=m {
                    row = row * meta.domain_size(f) + point[f - 1];
                }
                table[row]
            })
            .collect();
        Ok(Self {
            meta,
            table: internal,
        })
    }

    fn index_of(&self, values: &[usize]) -> usize {
        let mut index = 0u64;
        for f in (1..=self.meta.feature_count()).rev() {
            index = index * self.meta.domain_size(f) as u64 + values[f - 1] as u64;
        }
        index as usize
    }
}

impl Backend for Tabulated {
    fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    fn classify(&self, values: &[usize]) -> usize {
        self.table[self.index_of(values)]
    }

    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        brute_count_in(
            self,
            ExecMode::Sequential,
            values,
            fixed,
            class,
            u64::MAX,
        )
        .expect("tabulated spaces fit in memory, so enumeration cannot exceed u64")
    }
}
