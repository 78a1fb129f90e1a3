//! Binary naive Bayes classifiers, reduced to an extended linear classifier
//! (a bias plus one weight per feature value, class decided by the sign of
//! the sum) and counted with a knapsack-style dynamic program over integer
//! weights. All log-probabilities are exact rationals; the only rounding is
//! the explicit quantization step, and its effect is confined to the scaled
//! integers it produces.

use crate::types::{
    Backend, ClassifierMeta, CountPair, Error, FeatureSet, Rational, Result, Threshold,
};
use num::{BigInt, BigUint, One, Signed, ToPrimitive, Zero};

/// Class index conventions: index 0 is the "negative" class that wins ties,
/// index 1 is the "positive" class selected when the linear score is
/// strictly positive.
pub const NEGATIVE: usize = 0;
/// See [`NEGATIVE`].
pub const POSITIVE: usize = 1;

/// A naive Bayes model over discrete features with exactly two classes.
/// Stores log-probabilities (any base) as exact rationals.
#[derive(Debug, Clone)]
pub struct NbcModel {
    meta: ClassifierMeta,
    log_prior: [Rational; 2],
    log_cond: [Vec<Vec<Rational>>; 2],
}

impl NbcModel {
    pub fn new(
        meta: ClassifierMeta,
        log_prior: [Rational; 2],
        log_cond: [Vec<Vec<Rational>>; 2],
    ) -> Result<Self> {
        if meta.class_count() != 2 {
            return Err(Error::input(format!(
                "naive Bayes support is limited to two classes, got {}",
                meta.class_count()
            )));
        }
        for table in &log_cond {
            if table.len() != meta.feature_count() {
                return Err(Error::input(format!(
                    "expected conditional entries for {} features, got {}",
                    meta.feature_count(),
                    table.len()
                )));
            }
            for (i, row) in table.iter().enumerate() {
                if row.len() != meta.domain_size(i + 1) {
                    return Err(Error::input(format!(
                        "feature {} has {} values but {} conditional entries",
                        i + 1,
                        meta.domain_size(i + 1),
                        row.len()
                    )));
                }
            }
        }
        Ok(NbcModel {
            meta,
            log_prior,
            log_cond,
        })
    }

    /// Builds from decimal strings, the representation model files use.
    pub fn from_log_strings(
        meta: ClassifierMeta,
        log_prior: [&str; 2],
        log_cond: [Vec<Vec<&str>>; 2],
    ) -> Result<Self> {
        let parse_all = |rows: Vec<Vec<&str>>| -> Result<Vec<Vec<Rational>>> {
            rows.into_iter()
                .map(|row| row.into_iter().map(crate::types::parse_decimal).collect())
                .collect()
        };
        let [p0, p1] = log_prior;
        let [c0, c1] = log_cond;
        NbcModel::new(
            meta,
            [
                crate::types::parse_decimal(p0)?,
                crate::types::parse_decimal(p1)?,
            ],
            [parse_all(c0)?, parse_all(c1)?],
        )
    }

    pub fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    pub fn log_prior(&self, class: usize) -> &Rational {
        &self.log_prior[class]
    }

    pub fn log_conditional(&self, class: usize, feature: usize, value: usize) -> &Rational {
        &self.log_cond[class][feature - 1][value]
    }

    /// The textbook decision rule: argmax over classes of the joint
    /// log-probability, ties to class 0.
    pub fn classify_argmax(&self, values: &[usize]) -> usize {
        let score = |c: usize| -> Rational {
            let mut s = self.log_prior[c].clone();
            for (i, &k) in values.iter().enumerate() {
                s += &self.log_cond[c][i][k];
            }
            s
        };
        if score(POSITIVE) > score(NEGATIVE) {
            POSITIVE
        } else {
            NEGATIVE
        }
    }

    /// Folds both classes into one linear score: bias w0 = the prior
    /// difference, per-value weights = the conditional differences. The sign
    /// of the score reproduces [`Self::classify_argmax`] exactly.
    pub fn to_xlc(&self) -> XlcModel {
        let w0 = self.log_prior[POSITIVE].clone() - &self.log_prior[NEGATIVE];
        let weights = (0..self.meta.feature_count())
            .map(|i| {
                (0..self.meta.domain_size(i + 1))
                    .map(|k| self.log_cond[POSITIVE][i][k].clone() - &self.log_cond[NEGATIVE][i][k])
                    .collect()
            })
            .collect();
        XlcModel {
            meta: self.meta.clone(),
            w0,
            weights,
        }
    }
}

/// An extended linear classifier: ν(x) = w0 + Σ_i weight_i(x_i), predicting
/// the positive class iff ν(x) > 0 (ties go negative).
#[derive(Debug, Clone)]
pub struct XlcModel {
    meta: ClassifierMeta,
    w0: Rational,
    weights: Vec<Vec<Rational>>,
}

impl XlcModel {
    pub fn new(meta: ClassifierMeta, w0: Rational, weights: Vec<Vec<Rational>>) -> Result<Self> {
        if meta.class_count() != 2 {
            return Err(Error::input("linear classifiers here are two-class"));
        }
        if weights.len() != meta.feature_count() {
            return Err(Error::input(format!(
                "expected weights for {} features, got {}",
                meta.feature_count(),
                weights.len()
            )));
        }
        for (i, row) in weights.iter().enumerate() {
            if row.len() != meta.domain_size(i + 1) {
                return Err(Error::input(format!(
                    "feature {} has {} values but {} weights",
                    i + 1,
                    meta.domain_size(i + 1),
                    row.len()
                )));
            }
        }
        Ok(XlcModel { meta, w0, weights })
    }

    pub fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    pub fn bias(&self) -> &Rational {
        &self.w0
    }

    pub fn weight(&self, feature: usize, value: usize) -> &Rational {
        &self.weights[feature - 1][value]
    }

    pub fn nu(&self, values: &[usize]) -> Rational {
        let mut s = self.w0.clone();
        for (i, &k) in values.iter().enumerate() {
            s += &self.weights[i][k];
        }
        s
    }

    pub fn classify(&self, values: &[usize]) -> usize {
        if self.nu(values) > Rational::zero() {
            POSITIVE
        } else {
            NEGATIVE
        }
    }

    /// Per-feature slack of the instance toward the decision boundary: how
    /// much the score can degrade if the feature goes free. For a positive
    /// prediction that is weight(v_i) minus the feature's smallest weight;
    /// for a negative one, the largest weight minus weight(v_i). Slacks are
    /// nonnegative by construction.
    pub fn instance_slacks(&self, values: &[usize]) -> Vec<Rational> {
        let positive = self.classify(values) == POSITIVE;
        self.weights
            .iter()
            .zip(values)
            .map(|(row, &k)| {
                if positive {
                    row[k].clone() - row.iter().min().expect("nonempty domain")
                } else {
                    row.iter().max().expect("nonempty domain").clone() - &row[k]
                }
            })
            .collect()
    }

    /// Smallest set of features whose fixed slacks alone keep the prediction
    /// on every completion: sort slacks descending (ties to the lower
    /// index), take the shortest prefix whose removal budget covers the gap.
    /// The result is an abductive explanation of minimum cardinality.
    pub fn greedy_axp(&self, values: &[usize]) -> FeatureSet {
        let nu = self.nu(values);
        let positive = nu > Rational::zero();
        let slacks = self.instance_slacks(values);
        let total: Rational = slacks.iter().cloned().sum();
        // Keeping S suffices iff the slack lost to free features stays below
        // the gap: sum_{i in S} slack_i > total - ν (strict) for a positive
        // prediction, and >= total + ν for a negative one.
        let need = if positive { &total - &nu } else { &total + &nu };
        let mut order: Vec<usize> = (1..=self.meta.feature_count()).collect();
        order.sort_by(|&a, &b| slacks[b - 1].cmp(&slacks[a - 1]).then(a.cmp(&b)));
        let mut sum = Rational::zero();
        let mut picked = Vec::new();
        for i in order {
            let done = if positive { sum > need } else { sum >= need };
            if done {
                break;
            }
            sum += &slacks[i - 1];
            picked.push(i);
        }
        picked.sort_unstable();
        FeatureSet::from_sorted_unchecked(picked)
    }

    /// Deletion order over `subset`: ascending slack, ties toward the higher
    /// index. Trying the cheapest features first makes the single-pass
    /// deletion behave exactly like the greedy selection run in reverse.
    pub fn deletion_order(&self, values: &[usize], subset: &FeatureSet) -> Vec<usize> {
        let slacks = self.instance_slacks(values);
        let mut order: Vec<usize> = subset.iter().collect();
        order.sort_by(|&a, &b| slacks[a - 1].cmp(&slacks[b - 1]).then(b.cmp(&a)));
        order
    }

    /// Scales all weights by 10^decimals, rounds half away from zero,
    /// negates, and shifts each feature's weights so the smallest becomes 1.
    /// The strict bound moves along, so on the scaled integers the
    /// inequality "weight sum < rhs" selects exactly the positive class.
    pub fn quantize(&self, decimals: u32) -> QuantizedXlc {
        let scale = BigInt::from(10u32).pow(decimals);
        let scale_r = Rational::from(scale);
        let tilde = |r: &Rational| -> BigInt { (r * &scale_r).round().to_integer() };
        let mut rhs = tilde(&self.w0);
        let mut weights = Vec::with_capacity(self.weights.len());
        let mut grouped = Vec::with_capacity(self.weights.len());
        for row in &self.weights {
            let scaled: Vec<BigInt> = row.iter().map(tilde).collect();
            let shift = scaled.iter().max().expect("nonempty domain") + 1;
            rhs += &shift;
            let shifted: Vec<u64> = scaled
                .iter()
                .map(|t| (&shift - t).to_u64().expect("quantized weight fits in u64"))
                .collect();
            let mut sorted = shifted.clone();
            sorted.sort_unstable();
            let mut groups: Vec<(u64, u32)> = Vec::new();
            for w in sorted {
                match groups.last_mut() {
                    Some((gw, n)) if *gw == w => *n += 1,
                    _ => groups.push((w, 1)),
                }
            }
            weights.push(shifted);
            grouped.push(groups);
        }
        QuantizedXlc {
            meta: self.meta.clone(),
            decimals,
            rhs,
            weights,
            grouped,
        }
    }
}

/// The integer form of an [`XlcModel`]: per-value weights >= 1 and a strict
/// right-hand side. A point is classified positive iff its weight sum is
/// strictly below `rhs`.
#[derive(Debug, Clone)]
pub struct QuantizedXlc {
    meta: ClassifierMeta,
    decimals: u32,
    rhs: BigInt,
    weights: Vec<Vec<u64>>,
    /// Per feature: distinct weights ascending with multiplicities. The
    /// multiplicities of one feature sum to its domain size.
    grouped: Vec<Vec<(u64, u32)>>,
}

impl QuantizedXlc {
    pub fn decimals(&self) -> u32 {
        self.decimals
    }

    pub fn rhs(&self) -> &BigInt {
        &self.rhs
    }

    pub fn weight(&self, feature: usize, value: usize) -> u64 {
        self.weights[feature - 1][value]
    }

    pub fn grouped_weights(&self, feature: usize) -> &[(u64, u32)] {
        &self.grouped[feature - 1]
    }

    /// A loose ceiling on any achievable weight sum: per feature, the
    /// largest weight times its multiplicity, summed. Only used as a sanity
    /// bound on table sizing.
    pub fn weight_ceiling(&self) -> BigUint {
        let mut total = BigUint::zero();
        for groups in &self.grouped {
            let (w, n) = groups.last().expect("nonempty domain");
            total += BigUint::from(*w) * BigUint::from(*n);
        }
        total
    }

    fn weight_sum(&self, values: &[usize]) -> u128 {
        self.weights
            .iter()
            .zip(values)
            .map(|(row, &k)| row[k] as u128)
            .sum()
    }

    /// Number of completions of the free features whose quantized weight sum
    /// stays strictly below `rhs`, i.e. the positive-class model count.
    pub fn dp_count(&self, values: &[usize], fixed: &FeatureSet) -> BigUint {
        DpTable::new(self, values, fixed).positive_count()
    }

    pub fn table<'a>(&'a self, values: &[usize], fixed: &FeatureSet) -> DpTable<'a> {
        DpTable::new(self, values, fixed)
    }
}

impl Backend for QuantizedXlc {
    fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    fn classify(&self, values: &[usize]) -> usize {
        if BigInt::from(self.weight_sum(values)) < self.rhs {
            POSITIVE
        } else {
            NEGATIVE
        }
    }

    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        DpTable::new(self, values, fixed).pair(class)
    }
}

/// Cumulative counting table over the quantized weights. `entry(k, r)` is
/// the number of ways to pick values for features 1..=k (respecting fixed
/// ones) with weight sum at most r; columns run 0..rhs-1, so the last column
/// of the last row counts the strict inequality. Row k depends only on row
/// k-1, so flipping one feature's fixed/free status only recomputes rows
/// k..=m.
pub struct DpTable<'a> {
    q: &'a QuantizedXlc,
    values: Vec<usize>,
    fixed: Vec<bool>,
    width: usize,
    rows: Vec<Vec<BigUint>>,
}

impl<'a> DpTable<'a> {
    pub fn new(q: &'a QuantizedXlc, values: &[usize], fixed: &FeatureSet) -> Self {
        let m = q.meta.feature_count();
        assert_eq!(values.len(), m, "one value per feature");
        let width = if q.rhs.is_positive() {
            q.rhs.to_usize().expect("table width fits in memory")
        } else {
            0
        };
        let mut fixed_flags = vec![false; m];
        for i in fixed.iter() {
            fixed_flags[i - 1] = true;
        }
        let mut table = DpTable {
            q,
            values: values.to_vec(),
            fixed: fixed_flags,
            width,
            rows: vec![Vec::new(); m + 1],
        };
        table.rows[0] = vec![BigUint::one(); width];
        for k in 1..=m {
            table.recompute_row(k);
        }
        table
    }

    /// Flips one feature and refreshes the dependent rows.
    pub fn set_fixed(&mut self, feature: usize, on: bool) {
        if self.fixed[feature - 1] == on {
            return;
        }
        self.fixed[feature - 1] = on;
        for k in feature..=self.q.meta.feature_count() {
            self.recompute_row(k);
        }
    }

    fn recompute_row(&mut self, k: usize) {
        let (prev_rows, rest) = self.rows.split_at_mut(k);
        let prev = &prev_rows[k - 1];
        let row = &mut rest[0];
        row.clear();
        if self.width == 0 {
            return;
        }
        row.reserve(self.width);
        if self.fixed[k - 1] {
            let w = self.q.weights[k - 1][self.values[k - 1]] as usize;
            for r in 0..self.width {
                row.push(if r >= w {
                    prev[r - w].clone()
                } else {
                    BigUint::zero()
                });
            }
        } else {
            for r in 0..self.width {
                let mut sum = BigUint::zero();
                for &(w, n) in &self.q.grouped[k - 1] {
                    let w = w as usize;
                    if r >= w {
                        sum += &prev[r - w] * n;
                    }
                }
                row.push(sum);
            }
        }
    }

    pub fn entry(&self, k: usize, r: usize) -> BigUint {
        self.rows[k].get(r).cloned().unwrap_or_else(BigUint::zero)
    }

    pub fn positive_count(&self) -> BigUint {
        if self.width == 0 {
            BigUint::zero()
        } else {
            self.rows[self.q.meta.feature_count()][self.width - 1].clone()
        }
    }

    /// Product of the free features' domain sizes.
    pub fn free_total(&self) -> BigUint {
        let mut total = BigUint::one();
        for (i, &is_fixed) in self.fixed.iter().enumerate() {
            if !is_fixed {
                total *= BigUint::from(self.q.meta.domain_size(i + 1));
            }
        }
        total
    }

    /// Model counts for either class; the negative class is the complement.
    pub fn pair(&self, class: usize) -> CountPair {
        let total = self.free_total();
        let positive = self.positive_count();
        let target = if class == POSITIVE {
            positive
        } else {
            &total - &positive
        };
        CountPair::new(target, total)
    }
}

/// The full pipeline for one instance: reduce to the linear form, quantize,
/// seed with the greedy explanation (everything outside it is already free),
/// then run the deletion pass in ascending-slack order, recomputing only the
/// table rows a status flip invalidates. Returns the surviving set and its
/// model counts.
pub fn lm_paxp(
    model: &NbcModel,
    values: &[usize],
    delta: &Threshold,
    decimals: u32,
) -> Result<(FeatureSet, CountPair)> {
    let xlc = model.to_xlc();
    let q = xlc.quantize(decimals);
    q.meta.check_values(values)?;
    let class = q.classify(values);
    let seed = xlc.greedy_axp(values);
    let order = xlc.deletion_order(values, &seed);
    let mut table = q.table(values, &seed);
    if !table.pair(class).meets(delta) {
        return Err(Error::contract(format!(
            "greedy seed {seed} is not a weak PAXp at delta = {delta} under {decimals}-decimal \
             quantization"
        )));
    }
    let mut current = seed;
    for j in order {
        table.set_fixed(j, false);
        if table.pair(class).meets(delta) {
            current = current.without(j);
        } else {
            table.set_fixed(j, true);
        }
    }
    let pair = table.pair(class);
    Ok((current, pair))
}
