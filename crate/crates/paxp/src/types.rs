//! Shared domain types: classifier metadata, feature sets, exact thresholds,
//! count pairs, and the backend contract every classifier family implements.
//!
//! Conventions used across the crate:
//! - feature indices are 1-based (`1..=m`),
//! - domain values and classes are referred to by 0-based indices into the
//!   name tables held by [`ClassifierMeta`],
//! - all counting is exact (`BigUint`), all precision comparisons are exact
//!   rational arithmetic; no floating point participates in any decision.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigUint, One, Zero};
use std::fmt;

pub type Rational = Ratio<BigInt>;
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid caller-supplied data (bad index, out-of-domain value, ...).
    #[error("input error: {0}")]
    Input(String),
    /// A model file could not be parsed or failed a structural invariant.
    #[error("{0}")]
    Load(String),
    /// A documented precondition was violated (e.g. seed not a weak PAXp).
    #[error("contract violation: {0}")]
    Contract(String),
    /// An enumeration was refused because the space exceeds the budget.
    #[error("budget exceeded: enumeration needs {needed} points, budget is {budget}")]
    Budget { needed: BigUint, budget: BigUint },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
    pub fn load(msg: impl Into<String>) -> Self {
        Error::Load(msg.into())
    }
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

/// Feature space description: m features with finite value domains, plus the
/// class labels. Everything is identified by name in model files and by index
/// at runtime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifierMeta {
    feature_names: Vec<String>,
    domains: Vec<Vec<String>>,
    classes: Vec<String>,
}

impl ClassifierMeta {
    pub fn new(
        feature_names: Vec<String>,
        domains: Vec<Vec<String>>,
        classes: Vec<String>,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::input("a classifier needs at least one feature"));
        }
        if feature_names.len() != domains.len() {
            return Err(Error::input(format!(
                "{} feature names but {} domains",
                feature_names.len(),
                domains.len()
            )));
        }
        if classes.len() < 2 {
            return Err(Error::input("a classifier needs at least two classes"));
        }
        for (f, dom) in domains.iter().enumerate() {
            if dom.is_empty() {
                return Err(Error::input(format!(
                    "feature {} has an empty domain",
                    feature_names[f]
                )));
            }
            for (a, value) in dom.iter().enumerate() {
                if dom[..a].contains(value) {
                    return Err(Error::input(format!(
                        "feature {} lists value {:?} twice",
                        feature_names[f], value
                    )));
                }
            }
        }
        for (k, class) in classes.iter().enumerate() {
            if classes[..k].contains(class) {
                return Err(Error::input(format!("class {class:?} listed twice")));
            }
        }
        for (f, name) in feature_names.iter().enumerate() {
            if feature_names[..f].contains(name) {
                return Err(Error::input(format!("feature {name:?} listed twice")));
            }
        }
        Ok(ClassifierMeta {
            feature_names,
            domains,
            classes,
        })
    }

    /// Number of features m.
    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    /// Domain size of 1-based feature `i`.
    pub fn domain_size(&self, i: usize) -> usize {
        self.domains[i - 1].len()
    }

    pub fn domain_values(&self, i: usize) -> &[String] {
        &self.domains[i - 1]
    }

    pub fn feature_name(&self, i: usize) -> &str {
        &self.feature_names[i - 1]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_name(&self, c: usize) -> &str {
        &self.classes[c]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name).map(|p| p + 1)
    }

    pub fn value_index(&self, feature: usize, name: &str) -> Option<usize> {
        self.domains[feature - 1].iter().position(|n| n == name)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|n| n == name)
    }

    /// |F| = product of all domain sizes.
    pub fn space_size(&self) -> BigUint {
        self.domains
            .iter()
            .fold(BigUint::one(), |acc, d| acc * BigUint::from(d.len()))
    }

    /// Product of the domain sizes of the features outside `fixed`; this is
    /// the exact denominator of every precision at `fixed`.
    pub fn free_space_size(&self, fixed: &FeatureSet) -> BigUint {
        let mut n = BigUint::one();
        for i in 1..=self.feature_count() {
            if !fixed.contains(i) {
                n *= BigUint::from(self.domain_size(i));
            }
        }
        n
    }

    /// Checks that `values` is a well-formed point of the feature space.
    pub fn check_values(&self, values: &[usize]) -> Result<()> {
        if values.len() != self.feature_count() {
            return Err(Error::input(format!(
                "instance has {} values, classifier has {} features",
                values.len(),
                self.feature_count()
            )));
        }
        for (f, &a) in values.iter().enumerate() {
            if a >= self.domains[f].len() {
                return Err(Error::input(format!(
                    "value index {} out of range for feature {}",
                    a, self.feature_names[f]
                )));
            }
        }
        Ok(())
    }
}

/// A sorted set of fixed (1-based) feature indices X; features outside the
/// set are universal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FeatureSet {
    fixed: Vec<usize>,
}

impl FeatureSet {
    pub fn empty() -> Self {
        FeatureSet::default()
    }

    /// The full set {1..m}.
    pub fn full(m: usize) -> Self {
        FeatureSet {
            fixed: (1..=m).collect(),
        }
    }

    /// Builds a set from arbitrary 1-based indices, rejecting duplicates and
    /// indices outside 1..=m.
    pub fn new(m: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut fixed: Vec<usize> = indices.into_iter().collect();
        fixed.sort_unstable();
        for w in fixed.windows(2) {
            if w[0] == w[1] {
                return Err(Error::input(format!("duplicate feature index {}", w[0])));
            }
        }
        if let Some(&first) = fixed.first() {
            if first == 0 {
                return Err(Error::input("feature indices are 1-based"));
            }
        }
        if let Some(&last) = fixed.last() {
            if last > m {
                return Err(Error::input(format!(
                    "feature index {last} out of range 1..={m}"
                )));
            }
        }
        Ok(FeatureSet { fixed })
    }

    /// Builds a set from indices already known to be valid and distinct.
    pub(crate) fn from_sorted_unchecked(mut fixed: Vec<usize>) -> Self {
        fixed.sort_unstable();
        FeatureSet { fixed }
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.fixed.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.fixed.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.fixed
    }

    /// The set with `i` removed (no-op if absent).
    pub fn without(&self, i: usize) -> Self {
        FeatureSet {
            fixed: self.fixed.iter().copied().filter(|&j| j != i).collect(),
        }
    }

    /// The set with `i` added (no-op if present).
    pub fn with(&self, i: usize) -> Self {
        if self.contains(i) {
            return self.clone();
        }
        let mut fixed = self.fixed.clone();
        fixed.push(i);
        fixed.sort_unstable();
        FeatureSet { fixed }
    }

    /// {1..m} \ self.
    pub fn complement(&self, m: usize) -> Self {
        FeatureSet {
            fixed: (1..=m).filter(|&i| !self.contains(i)).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &FeatureSet) -> bool {
        self.fixed.iter().all(|&i| other.contains(i))
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.fixed.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// An exact probability threshold δ = num/den with 0 ≤ δ ≤ 1, stored reduced.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Threshold {
    num: BigUint,
    den: BigUint,
}

impl Threshold {
    pub fn new(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::input("threshold denominator must be positive"));
        }
        if num > den {
            return Err(Error::input("threshold must satisfy 0 <= delta <= 1"));
        }
        let g = num::integer::gcd(num.clone(), den.clone());
        Ok(Threshold {
            num: num / &g,
            den: den / &g,
        })
    }

    pub fn zero() -> Self {
        Threshold {
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }

    pub fn one() -> Self {
        Threshold {
            num: BigUint::one(),
            den: BigUint::one(),
        }
    }

    pub fn from_u32_ratio(num: u32, den: u32) -> Result<Self> {
        Threshold::new(BigUint::from(num), BigUint::from(den))
    }

    /// Parses either a fraction `p/q` or a decimal literal such as `0.93`
    /// (converted exactly to 93/100). No binary floating point is involved.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::input("empty threshold"));
        }
        if let Some((p, q)) = text.split_once('/') {
            let num = p
                .trim()
                .parse::<BigUint>()
                .map_err(|_| Error::input(format!("bad threshold numerator {p:?}")))?;
            let den = q
                .trim()
                .parse::<BigUint>()
                .map_err(|_| Error::input(format!("bad threshold denominator {q:?}")))?;
            return Threshold::new(num, den);
        }
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        let int_part = if int_part.is_empty() { "0" } else { int_part };
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(Error::input(format!("bad threshold literal {text:?}")));
        }
        let digits = format!("{int_part}{frac_part}");
        let num = digits
            .parse::<BigUint>()
            .map_err(|_| Error::input(format!("bad threshold literal {text:?}")))?;
        let den = BigUint::from(10u32).pow(frac_part.len() as u32);
        Threshold::new(num, den)
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn numer(&self) -> &BigUint {
        &self.num
    }

    pub fn denom(&self) -> &BigUint {
        &self.den
    }

    pub fn as_rational(&self) -> Rational {
        Rational::new(
            BigInt::from(self.num.clone()),
            BigInt::from(self.den.clone()),
        )
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == BigUint::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Converts a signed decimal literal such as `-0.7` into an exact rational
/// (here, -7/10). Model files carry probabilities as decimal strings so that
/// no binary floating point ever enters the pipeline.
pub fn parse_decimal(text: &str) -> Result<Rational> {
    let trimmed = text.trim();
    let (negative, digits) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if (int_part.is_empty() && frac_part.is_empty())
        || !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(Error::input(format!("bad decimal literal {text:?}")));
    }
    let mut num = format!("{int_part}{frac_part}")
        .parse::<BigInt>()
        .map_err(|_| Error::input(format!("bad decimal literal {text:?}")))?;
    if negative {
        num = -num;
    }
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(Rational::new(num, den))
}

/// Exact model counts under a fixed-feature assignment: `target` points keep
/// the target class, out of `total` points consistent with the assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountPair {
    pub target: BigUint,
    pub total: BigUint,
}

impl CountPair {
    pub fn new(target: BigUint, total: BigUint) -> Self {
        debug_assert!(target <= total);
        CountPair { target, total }
    }

    /// target/total as a reduced exact rational.
    pub fn precision(&self) -> Rational {
        Rational::new(
            BigInt::from(self.target.clone()),
            BigInt::from(self.total.clone()),
        )
    }

    /// Exact comparison precision ≥ δ by integer cross-multiplication.
    pub fn meets(&self, delta: &Threshold) -> bool {
        &self.target * delta.denom() >= delta.numer() * &self.total
    }
}

impl fmt::Display for CountPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {}", self.target, self.total)
    }
}

/// The contract every classifier family implements. The generic engine (and
/// the oracle) runs only against this interface.
///
/// `count` must be a pure function of its arguments; backends are immutable
/// after construction and safe to share across threads.
pub trait Backend: Sync {
    fn meta(&self) -> &ClassifierMeta;

    /// Classifies a full point of the feature space (0-based value indices).
    fn classify(&self, values: &[usize]) -> usize;

    /// Exact model counts among the points that agree with `values` on the
    /// `fixed` features: how many predict `class`, out of how many there are
    /// in total (always the product of the free-domain sizes).
    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn meta(&self) -> &ClassifierMeta {
        (**self).meta()
    }
    fn classify(&self, values: &[usize]) -> usize {
        (**self).classify(values)
    }
    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        (**self).count(values, fixed, class)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn meta(&self) -> &ClassifierMeta {
        (**self).meta()
    }
    fn classify(&self, values: &[usize]) -> usize {
        (**self).classify(values)
    }
    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        (**self).count(values, fixed, class)
    }
}

/// A point of the feature space together with the class the backend predicts
/// for it. Construction classifies the point, so the pair is consistent by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    values: Vec<usize>,
    class: usize,
}

impl Instance {
    pub fn new<B: Backend + ?Sized>(backend: &B, values: Vec<usize>) -> Result<Self> {
        backend.meta().check_values(&values)?;
        let class = backend.classify(&values);
        Ok(Instance { values, class })
    }

    /// Builds an instance and checks the declared class against the backend.
    pub fn with_declared_class<B: Backend + ?Sized>(
        backend: &B,
        values: Vec<usize>,
        declared: usize,
    ) -> Result<Self> {
        let inst = Instance::new(backend, values)?;
        if inst.class != declared {
            return Err(Error::input(format!(
                "declared class {} but the classifier predicts {}",
                backend.meta().class_name(declared),
                backend.meta().class_name(inst.class)
            )));
        }
        Ok(inst)
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn class(&self) -> usize {
        self.class
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_parsing() {
        let t = Threshold::parse("0.93").unwrap();
        assert_eq!(t.to_string(), "93/100");
        let t = Threshold::parse("93/100").unwrap();
        assert_eq!(t.to_string(), "93/100");
        let t = Threshold::parse("0.850").unwrap();
        assert_eq!(t.to_string(), "17/20");
        let t = Threshold::parse("1").unwrap();
        assert!(t.is_one());
        assert_eq!(t.to_string(), "1");
        let t = Threshold::parse("1.0").unwrap();
        assert!(t.is_one());
        let t = Threshold::parse("0").unwrap();
        assert!(t.is_zero());
        assert!(Threshold::parse("1.2").is_err());
        assert!(Threshold::parse("3/2").is_err());
        assert!(Threshold::parse("-0.5").is_err());
        assert!(Threshold::parse("").is_err());
        assert!(Threshold::parse("0.9e3").is_err());
    }

    #[test]
    fn count_pair_meets_is_exact() {
        let c = CountPair::new(BigUint::from(15u32), BigUint::from(16u32));
        assert!(c.meets(&Threshold::from_u32_ratio(93, 100).unwrap()));
        assert!(c.meets(&Threshold::from_u32_ratio(15, 16).unwrap()));
        assert!(!c.meets(&Threshold::from_u32_ratio(938, 1000).unwrap()));
        assert!(!c.meets(&Threshold::one()));
        let full = CountPair::new(BigUint::from(4u32), BigUint::from(4u32));
        assert!(full.meets(&Threshold::one()));
    }

    #[test]
    fn feature_set_basics() {
        let x = FeatureSet::new(5, [3, 1]).unwrap();
        assert_eq!(x.as_slice(), &[1, 3]);
        assert!(x.contains(1) && x.contains(3) && !x.contains(2));
        assert_eq!(x.without(1).as_slice(), &[3]);
        assert_eq!(x.with(2).as_slice(), &[1, 2, 3]);
        assert_eq!(x.complement(5).as_slice(), &[2, 4, 5]);
        assert_eq!(x.to_string(), "{1,3}");
        assert!(FeatureSet::new(5, [2, 2]).is_err());
        assert!(FeatureSet::new(5, [0]).is_err());
        assert!(FeatureSet::new(5, [6]).is_err());
        assert!(x.is_subset_of(&FeatureSet::full(5)));
        assert!(!FeatureSet::full(5).is_subset_of(&x));
    }

    #[test]
    fn meta_validation() {
        let ok = ClassifierMeta::new(
            vec!["x1".into(), "x2".into()],
            vec![vec!["a".into(), "b".into()], vec!["0".into(), "1".into()]],
            vec!["neg".into(), "pos".into()],
        );
        let meta = ok.unwrap();
        assert_eq!(meta.feature_count(), 2);
        assert_eq!(meta.space_size(), BigUint::from(4u32));
        assert_eq!(meta.feature_index("x2"), Some(2));
        assert_eq!(meta.value_index(1, "b"), Some(1));
        assert!(ClassifierMeta::new(
            vec!["x1".into()],
            vec![vec![]],
            vec!["a".into(), "b".into()]
        )
        .is_err());
        assert!(ClassifierMeta::new(
            vec!["x1".into()],
            vec![vec!["a".into(), "a".into()]],
            vec!["a".into(), "b".into()]
        )
        .is_err());
        assert!(ClassifierMeta::new(
            vec!["x1".into()],
            vec![vec!["a".into()]],
            vec!["only".into()]
        )
        .is_err());
    }

    #[test]
    fn free_space_size_multiplies_free_domains() {
        let meta = ClassifierMeta::new(
            vec!["x1".into(), "x2".into(), "x3".into()],
            vec![
                vec!["1".into(), "2".into(), "3".into(), "4".into()],
                vec!["1".into(), "2".into(), "3".into(), "4".into()],
                vec!["1".into(), "2".into()],
            ],
            vec!["neg".into(), "pos".into()],
        )
        .unwrap();
        assert_eq!(meta.space_size(), BigUint::from(32u32));
        let x = FeatureSet::new(3, [3]).unwrap();
        assert_eq!(meta.free_space_size(&x), BigUint::from(16u32));
        assert_eq!(meta.free_space_size(&FeatureSet::full(3)), BigUint::one());
        assert_eq!(
            meta.free_space_size(&FeatureSet::empty()),
            BigUint::from(32u32)
        );
    }
}
