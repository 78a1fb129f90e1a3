//! Decomposable, deterministic negation normal form circuits over binary
//! features. Conditioning and model counting are both linear in circuit
//! size, so explanation precision tests cost one substitution pass plus one
//! bottom-up count instead of an enumeration.

use crate::engine;
use crate::types::{
    Backend, ClassifierMeta, CountPair, Error, FeatureSet, Instance, Result, Threshold,
};
use fixedbitset::FixedBitSet;
use num::{BigUint, One, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NnfNode {
    False,
    True,
    /// `var` is 1-based.
    Literal { var: usize, positive: bool },
    And(Vec<usize>),
    Or(Vec<usize>),
}

/// A circuit in negation normal form, validated decomposable at
/// construction (conjuncts share no variables). Determinism of disjunctions
/// is declared by the producing compiler and trusted; [`NnfCircuit::check_determinism`]
/// verifies it by enumeration when affordable.
///
/// Counts are cached per node over the node's own support; all query
/// results for the full variable set rescale by the uncounted variables.
#[derive(Debug, Clone)]
pub struct NnfCircuit {
    var_count: usize,
    nodes: Vec<NnfNode>,
    root: usize,
    supports: Vec<FixedBitSet>,
    raw: Vec<BigUint>,
}

impl NnfCircuit {
    pub fn new(var_count: usize, nodes: Vec<NnfNode>, root: usize) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::load(format!("root {root} is not a node")));
        }
        let mut supports: Vec<FixedBitSet> = Vec::with_capacity(nodes.len());
        let mut raw: Vec<BigUint> = Vec::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            let mut support = FixedBitSet::with_capacity(var_count + 1);
            let count = match node {
                NnfNode::False => BigUint::zero(),
                NnfNode::True => BigUint::one(),
                NnfNode::Literal { var, .. } => {
                    if *var == 0 || *var > var_count {
                        return Err(Error::load(format!(
                            "node {i} mentions variable {var} outside 1..={var_count}"
                        )));
                    }
                    support.insert(*var);
                    BigUint::one()
                }
                NnfNode::And(children) => {
                    let mut product = BigUint::one();
                    for &c in children {
                        if c >= i {
                            return Err(Error::load(format!(
                                "node {i} references node {c} at or after itself"
                            )));
                        }
                        if !support.is_disjoint(&supports[c]) {
                            return Err(Error::load(format!(
                                "conjunction {i} is not decomposable: child {c} shares variables with its siblings"
                            )));
                        }
                        support.union_with(&supports[c]);
                        product *= &raw[c];
                    }
                    product
                }
                NnfNode::Or(children) => {
                    for &c in children {
                        if c >= i {
                            return Err(Error::load(format!(
                                "node {i} references node {c} at or after itself"
                            )));
                        }
                        support.union_with(&supports[c]);
                    }
                    // Each disjunct counts models over its own support;
                    // scaling by the variables it does not mention makes the
                    // summands comparable. Determinism keeps them disjoint.
                    let width = support.count_ones(..);
                    let mut sum = BigUint::zero();
                    for &c in children {
                        let gap = width - supports[c].count_ones(..);
                        sum += &raw[c] << gap;
                    }
                    sum
                }
            };
            supports.push(support);
            raw.push(count);
        }
        Ok(NnfCircuit {
            var_count,
            nodes,
            root,
            supports,
            raw,
        })
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of satisfying assignments over all `var_count` variables.
    pub fn model_count(&self) -> BigUint {
        let gap = self.var_count - self.supports[self.root].count_ones(..);
        &self.raw[self.root] << gap
    }

    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        let mut value = vec![false; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            value[i] = match node {
                NnfNode::False => false,
                NnfNode::True => true,
                NnfNode::Literal { var, positive } => assignment[var - 1] == *positive,
                NnfNode::And(children) => children.iter().all(|&c| value[c]),
                NnfNode::Or(children) => children.iter().any(|&c| value[c]),
            };
        }
        value[self.root]
    }

    /// Substitutes the term's literals by constants and propagates them.
    /// The result keeps the same variable count; the conditioned variables
    /// simply no longer occur.
    pub fn condition(&self, term: &ConditioningTerm) -> NnfCircuit {
        #[derive(Clone, Copy)]
        enum Subst {
            Const(bool),
            Node(usize),
        }
        let mut map: Vec<Subst> = Vec::with_capacity(self.nodes.len());
        let mut nodes: Vec<NnfNode> = Vec::new();
        for node in &self.nodes {
            let subst = match node {
                NnfNode::False => Subst::Const(false),
                NnfNode::True => Subst::Const(true),
                NnfNode::Literal { var, positive } => match term.value(*var) {
                    Some(v) => Subst::Const(v == *positive),
                    None => {
                        nodes.push(NnfNode::Literal {
                            var: *var,
                            positive: *positive,
                        });
                        Subst::Node(nodes.len() - 1)
                    }
                },
                NnfNode::And(children) => {
                    let mut kept = Vec::new();
                    let mut dead = false;
                    for &c in children {
                        match map[c] {
                            Subst::Const(false) => dead = true,
                            Subst::Const(true) => {}
                            Subst::Node(n) => kept.push(n),
                        }
                    }
                    if dead {
                        Subst::Const(false)
                    } else if kept.is_empty() {
                        Subst::Const(true)
                    } else if kept.len() == 1 {
                        Subst::Node(kept[0])
                    } else {
                        nodes.push(NnfNode::And(kept));
                        Subst::Node(nodes.len() - 1)
                    }
                }
                NnfNode::Or(children) => {
                    let mut kept = Vec::new();
                    let mut alive = false;
                    for &c in children {
                        match map[c] {
                            Subst::Const(true) => alive = true,
                            Subst::Const(false) => {}
                            Subst::Node(n) => kept.push(n),
                        }
                    }
                    // A disjunct reduced to true subsumes its siblings:
                    // determinism makes them unsatisfiable here.
                    if alive {
                        Subst::Const(true)
                    } else if kept.is_empty() {
                        Subst::Const(false)
                    } else if kept.len() == 1 {
                        Subst::Node(kept[0])
                    } else {
                        nodes.push(NnfNode::Or(kept));
                        Subst::Node(nodes.len() - 1)
                    }
                }
            };
            map.push(subst);
        }
        let (nodes, root) = match map[self.root] {
            Subst::Const(b) => (
                vec![if b { NnfNode::True } else { NnfNode::False }],
                0,
            ),
            Subst::Node(n) => prune_unreachable(nodes, n),
        };
        NnfCircuit::new(self.var_count, nodes, root)
            .expect("conditioning cannot introduce shared variables")
    }

    /// Number of complete assignments that satisfy the circuit and agree
    /// with the term; equivalently, the conditioned circuit's models over
    /// the variables the term leaves free.
    pub fn count_under(&self, term: &ConditioningTerm) -> BigUint {
        self.condition(term).model_count() >> term.len()
    }

    /// Verifies pairwise inconsistency of every disjunction by enumerating
    /// assignments over the pair's joint support. Refuses pairs wider than
    /// `max_support` variables instead of silently skipping them.
    pub fn check_determinism(&self, max_support: usize) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            let NnfNode::Or(children) = node else {
                continue;
            };
            for (a_pos, &a) in children.iter().enumerate() {
                for &b in &children[a_pos + 1..] {
                    let mut joint = self.supports[a].clone();
                    joint.union_with(&self.supports[b]);
                    let vars: Vec<usize> = joint.ones().collect();
                    if vars.len() > max_support {
                        return Err(Error::input(format!(
                            "disjunction {i}: checking children {a} and {b} needs {} variables, over the limit of {max_support}",
                            vars.len()
                        )));
                    }
                    let mut assignment = vec![false; self.var_count];
                    for bits in 0..1u64 << vars.len() {
                        for (pos, &var) in vars.iter().enumerate() {
                            assignment[var - 1] = bits & (1 << pos) != 0;
                        }
                        if self.evaluate_at(a, &assignment) && self.evaluate_at(b, &assignment) {
                            return Err(Error::load(format!(
                                "disjunction {i} is not deterministic: children {a} and {b} share a model"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn evaluate_at(&self, node: usize, assignment: &[bool]) -> bool {
        let mut value = vec![false; node + 1];
        for (i, n) in self.nodes.iter().take(node + 1).enumerate() {
            value[i] = match n {
                NnfNode::False => false,
                NnfNode::True => true,
                NnfNode::Literal { var, positive } => assignment[var - 1] == *positive,
                NnfNode::And(children) => children.iter().all(|&c| value[c]),
                NnfNode::Or(children) => children.iter().any(|&c| value[c]),
            };
        }
        value[node]
    }
}

fn prune_unreachable(nodes: Vec<NnfNode>, root: usize) -> (Vec<NnfNode>, usize) {
    let mut keep = vec![false; nodes.len()];
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if std::mem::replace(&mut keep[n], true) {
            continue;
        }
        match &nodes[n] {
            NnfNode::And(children) | NnfNode::Or(children) => stack.extend(children),
            _ => {}
        }
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut compact = Vec::new();
    for (i, node) in nodes.into_iter().enumerate() {
        if !keep[i] {
            continue;
        }
        remap[i] = compact.len();
        compact.push(match node {
            NnfNode::And(children) => {
                NnfNode::And(children.into_iter().map(|c| remap[c]).collect())
            }
            NnfNode::Or(children) => NnfNode::Or(children.into_iter().map(|c| remap[c]).collect()),
            other => other,
        });
    }
    (compact, remap[root])
}

/// A consistent set of literals to condition on.
#[derive(Debug, Clone, Default)]
pub struct ConditioningTerm {
    assignment: Vec<Option<bool>>,
}

impl ConditioningTerm {
    pub fn new(var_count: usize) -> Self {
        ConditioningTerm {
            assignment: vec![None; var_count],
        }
    }

    pub fn from_literals(
        var_count: usize,
        literals: impl IntoIterator<Item = (usize, bool)>,
    ) -> Result<Self> {
        let mut term = ConditioningTerm::new(var_count);
        for (var, value) in literals {
            term.set(var, value)?;
        }
        Ok(term)
    }

    pub fn set(&mut self, var: usize, value: bool) -> Result<()> {
        if var == 0 || var > self.assignment.len() {
            return Err(Error::input(format!(
                "variable {var} outside 1..={}",
                self.assignment.len()
            )));
        }
        match self.assignment[var - 1] {
            Some(prior) if prior != value => Err(Error::input(format!(
                "term sets variable {var} both ways"
            ))),
            _ => {
                self.assignment[var - 1] = Some(value);
                Ok(())
            }
        }
    }

    pub fn value(&self, var: usize) -> Option<bool> {
        self.assignment[var - 1]
    }

    /// Number of variables the term fixes.
    pub fn len(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.iter().all(|a| a.is_none())
    }
}

/// The text format emitted by circuit compilers: an `nnf N E V` header,
/// then one node per line (`L lit`, `A c i1..ic`, `O j c i1..ic`), children
/// referring to earlier lines, the last line being the root.
pub fn parse_nnf(text: &str) -> Result<NnfCircuit> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('c'));
    let header = lines.next().ok_or_else(|| Error::load("empty circuit file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [magic, node_count, _edges, var_count] = fields.as_slice() else {
        return Err(Error::load(format!("malformed header line: {header:?}")));
    };
    if *magic != "nnf" {
        return Err(Error::load(format!("expected an nnf header, got {header:?}")));
    }
    let declared: usize = node_count
        .parse()
        .map_err(|_| Error::load(format!("bad node count {node_count:?}")))?;
    let var_count: usize = var_count
        .parse()
        .map_err(|_| Error::load(format!("bad variable count {var_count:?}")))?;
    let mut nodes = Vec::with_capacity(declared);
    for line in lines {
        let mut fields = line.split_whitespace();
        let kind = fields.next().unwrap();
        let numbers: Vec<i64> = fields
            .map(|f| {
                f.parse()
                    .map_err(|_| Error::load(format!("bad number {f:?} in line {line:?}")))
            })
            .collect::<Result<_>>()?;
        let node = match kind {
            "L" => {
                let [lit] = numbers.as_slice() else {
                    return Err(Error::load(format!("literal line needs one number: {line:?}")));
                };
                if *lit == 0 {
                    return Err(Error::load("literal 0 is not a variable"));
                }
                NnfNode::Literal {
                    var: lit.unsigned_abs() as usize,
                    positive: *lit > 0,
                }
            }
            "A" => {
                let Some((&count, children)) = numbers.split_first() else {
                    return Err(Error::load(format!("malformed conjunction line: {line:?}")));
                };
                if count as usize != children.len() {
                    return Err(Error::load(format!(
                        "conjunction announces {count} children but lists {}: {line:?}",
                        children.len()
                    )));
                }
                if children.is_empty() {
                    NnfNode::True
                } else {
                    NnfNode::And(child_indices(children, nodes.len(), line)?)
                }
            }
            "O" => {
                let Some((_decision, rest)) = numbers.split_first() else {
                    return Err(Error::load(format!("malformed disjunction line: {line:?}")));
                };
                let Some((&count, children)) = rest.split_first() else {
                    return Err(Error::load(format!("malformed disjunction line: {line:?}")));
                };
                if count as usize != children.len() {
                    return Err(Error::load(format!(
                        "disjunction announces {count} children but lists {}: {line:?}",
                        children.len()
                    )));
                }
                if children.is_empty() {
                    NnfNode::False
                } else {
                    NnfNode::Or(child_indices(children, nodes.len(), line)?)
                }
            }
            other => {
                return Err(Error::load(format!("unknown node kind {other:?} in {line:?}")));
            }
        };
        nodes.push(node);
    }
    if nodes.len() != declared {
        return Err(Error::load(format!(
            "header declares {declared} nodes but the file has {}",
            nodes.len()
        )));
    }
    let root = nodes.len().checked_sub(1).ok_or_else(|| Error::load("circuit has no nodes"))?;
    NnfCircuit::new(var_count, nodes, root)
}

fn child_indices(children: &[i64], at: usize, line: &str) -> Result<Vec<usize>> {
    children
        .iter()
        .map(|&c| {
            if c < 0 || c as usize >= at {
                Err(Error::load(format!(
                    "child {c} must name an earlier node: {line:?}"
                )))
            } else {
                Ok(c as usize)
            }
        })
        .collect()
}

/// A binary classifier whose positive class is a circuit: feature i of the
/// metadata is circuit variable i, value index 1 meaning true.
#[derive(Debug, Clone)]
pub struct CircuitClassifier {
    meta: ClassifierMeta,
    circuit: NnfCircuit,
}

impl CircuitClassifier {
    pub fn new(meta: ClassifierMeta, circuit: NnfCircuit) -> Result<Self> {
        if meta.feature_count() != circuit.var_count() {
            return Err(Error::load(format!(
                "{} features for a circuit over {} variables",
                meta.feature_count(),
                circuit.var_count()
            )));
        }
        if meta.class_count() != 2 {
            return Err(Error::load("a circuit classifier needs two classes"));
        }
        for i in 1..=meta.feature_count() {
            if meta.domain_size(i) != 2 {
                return Err(Error::load(format!("feature {i} is not binary")));
            }
        }
        Ok(CircuitClassifier { meta, circuit })
    }

    /// Wraps a bare circuit with x1..xn over 0/1 and classes 0/1.
    pub fn from_circuit(circuit: NnfCircuit) -> Self {
        let n = circuit.var_count();
        let meta = ClassifierMeta::new(
            (1..=n).map(|i| format!("x{i}")).collect(),
            vec![vec!["0".into(), "1".into()]; n],
            vec!["0".into(), "1".into()],
        )
        .expect("generated names are valid");
        CircuitClassifier { meta, circuit }
    }

    pub fn circuit(&self) -> &NnfCircuit {
        &self.circuit
    }

    fn term_for(&self, values: &[usize], fixed: &FeatureSet) -> ConditioningTerm {
        let mut term = ConditioningTerm::new(self.circuit.var_count());
        for i in fixed.iter() {
            term.set(i, values[i - 1] == 1)
                .expect("a feature set fixes each feature once");
        }
        term
    }
}

impl Backend for CircuitClassifier {
    fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    fn classify(&self, values: &[usize]) -> usize {
        let assignment: Vec<bool> = values.iter().map(|&v| v == 1).collect();
        usize::from(self.circuit.evaluate(&assignment))
    }

    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        let positive = self.circuit.count_under(&self.term_for(values, fixed));
        let total = self.meta.free_space_size(fixed);
        let target = if class == 1 { positive } else { &total - positive };
        CountPair::new(target, total)
    }
}

/// Smallest weak explanation by binary search on the size bound: the
/// candidate "is there one of size at most k" is monotone in k even though
/// weakness itself is not monotone in the feature set.
pub fn min_paxp_binary_search<B: Backend + ?Sized>(
    backend: &B,
    v: &Instance,
    delta: &Threshold,
) -> Result<FeatureSet> {
    let universe = FeatureSet::full(backend.meta().feature_count());
    if !engine::is_weak_paxp(backend, v, &universe, delta)? {
        return Err(Error::contract(
            "even fixing every feature misses the precision target",
        ));
    }
    let mut lo = 0;
    let mut hi = universe.len();
    let mut best: Option<FeatureSet> = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match engine::first_weak_subset_up_to(backend, v, &universe, mid, delta)? {
            Some(found) => {
                hi = found.len();
                best = Some(found);
            }
            None => lo = mid + 1,
        }
    }
    Ok(best.unwrap_or(universe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::synth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lit(var: usize, positive: bool) -> NnfNode {
        NnfNode::Literal { var, positive }
    }

    /// x1 AND x2 over two variables.
    fn and2() -> NnfCircuit {
        NnfCircuit::new(2, vec![lit(1, true), lit(2, true), NnfNode::And(vec![0, 1])], 2).unwrap()
    }

    /// x1 OR x2 as a deterministic circuit: x1 | (not x1 & x2).
    fn or2() -> NnfCircuit {
        NnfCircuit::new(
            2,
            vec![
                lit(1, true),
                lit(1, false),
                lit(2, true),
                NnfNode::And(vec![1, 2]),
                NnfNode::Or(vec![0, 3]),
            ],
            4,
        )
        .unwrap()
    }

    fn random_literals(
        rng: &mut ChaCha8Rng,
        vars: std::ops::RangeInclusive<usize>,
        keep: f64,
    ) -> Vec<(usize, bool)> {
        vars.filter_map(|v| rng.gen_bool(keep).then(|| (v, rng.gen_bool(0.5))))
            .collect()
    }

    #[test]
    fn constant_and_conjunction_counts() {
        let top = NnfCircuit::new(3, vec![NnfNode::True], 0).unwrap();
        assert_eq!(top.model_count(), BigUint::from(8u32));
        assert_eq!(and2().model_count(), BigUint::one());
        let bottom = NnfCircuit::new(3, vec![NnfNode::False], 0).unwrap();
        assert_eq!(bottom.model_count(), BigUint::zero());
    }

    #[test]
    fn construction_rejects_broken_circuits() {
        // Shared variable between conjuncts.
        assert!(matches!(
            NnfCircuit::new(2, vec![lit(1, true), lit(1, false), NnfNode::And(vec![0, 1])], 2),
            Err(Error::Load(_))
        ));
        // Forward reference.
        assert!(matches!(
            NnfCircuit::new(2, vec![NnfNode::And(vec![1]), lit(1, true)], 0),
            Err(Error::Load(_))
        ));
        // Variable out of range.
        assert!(matches!(
            NnfCircuit::new(1, vec![lit(2, true)], 0),
            Err(Error::Load(_))
        ));
    }

    #[test]
    fn shannon_compilation_matches_truth_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(211);
        for _ in 0..60 {
            let n = rng.gen_range(1..=10);
            let f = synth::random_dnf(&mut rng, n);
            let circuit = synth::compile_shannon(n, &f);
            circuit.check_determinism(16).unwrap();
            assert_eq!(circuit.model_count(), synth::truth_table_count(n, &f));
        }
    }

    #[test]
    fn conditioning_substitutes_and_propagates() {
        let c = and2();
        let on_x1 = c.condition(&ConditioningTerm::from_literals(2, [(1, true)]).unwrap());
        // Equivalent to x2: two of the four complete assignments.
        assert_eq!(on_x1.model_count(), BigUint::from(2u32));
        assert!(on_x1.evaluate(&[false, true]));
        assert!(!on_x1.evaluate(&[true, false]));
        let off_x1 = c.condition(&ConditioningTerm::from_literals(2, [(1, false)]).unwrap());
        assert_eq!(off_x1.model_count(), BigUint::zero());
        let unchanged = c.condition(&ConditioningTerm::new(2));
        assert_eq!(unchanged.model_count(), c.model_count());
    }

    #[test]
    fn terms_reject_complementary_literals() {
        let mut term = ConditioningTerm::new(3);
        term.set(2, true).unwrap();
        term.set(2, true).unwrap();
        assert!(matches!(term.set(2, false), Err(Error::Input(_))));
        assert!(matches!(term.set(4, true), Err(Error::Input(_))));
        assert_eq!(term.len(), 1);
    }

    #[test]
    fn conditioned_counts_match_truth_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(223);
        for _ in 0..40 {
            let n = rng.gen_range(1..=8);
            let f = synth::random_dnf(&mut rng, n);
            let circuit = synth::compile_shannon(n, &f);
            let literals = random_literals(&mut rng, 1..=n, 0.4);
            let term = ConditioningTerm::from_literals(n, literals.clone()).unwrap();
            let restricted = move |assignment: &[bool]| {
                f(assignment) && literals.iter().all(|&(v, val)| assignment[v - 1] == val)
            };
            assert_eq!(
                circuit.count_under(&term),
                synth::truth_table_count(n, &restricted)
            );
        }
    }

    #[test]
    fn classifier_counts_on_the_disjunction() {
        let k = CircuitClassifier::from_circuit(or2());
        let x1 = FeatureSet::new(2, [1]).unwrap();
        let pair = k.count(&[1, 0], &x1, 1);
        assert_eq!(pair.target, BigUint::from(2u32));
        assert_eq!(pair.total, BigUint::from(2u32));
        let pair = k.count(&[1, 0], &FeatureSet::empty(), 1);
        assert_eq!(pair.target, BigUint::from(3u32));
        assert_eq!(pair.total, BigUint::from(4u32));
        let pair = k.count(&[1, 0], &FeatureSet::empty(), 0);
        assert_eq!(pair.target, BigUint::one());
    }

    #[test]
    fn class_counts_complement_each_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(227);
        for _ in 0..30 {
            let n = rng.gen_range(1..=8);
            let f = synth::random_dnf(&mut rng, n);
            let k = CircuitClassifier::from_circuit(synth::compile_shannon(n, &f));
            let v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let members = (1..=n).filter(|_| rng.gen_bool(0.4));
            let fixed = FeatureSet::new(n, members).unwrap();
            let pos = k.count(&v, &fixed, 1);
            let neg = k.count(&v, &fixed, 0);
            assert_eq!(&pos.target + &neg.target, pos.total);
            assert_eq!(pos.total, k.meta().free_space_size(&fixed));
        }
    }

    #[test]
    fn classifier_counts_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(229);
        let mut queries = 0;
        while queries < 1000 {
            let n = rng.gen_range(1..=8);
            let f = synth::random_dnf(&mut rng, n);
            let k = CircuitClassifier::from_circuit(synth::compile_shannon(n, &f));
            for _ in 0..25 {
                let v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
                let members = (1..=n).filter(|_| rng.gen_bool(0.4));
                let fixed = FeatureSet::new(n, members).unwrap();
                let c = rng.gen_range(0..2);
                let fast = k.count(&v, &fixed, c);
                let brute = oracle::brute_count(&k, &v, &fixed, c, 1 << 20).unwrap();
                assert_eq!(fast, brute);
                queries += 1;
            }
        }
    }

    #[test]
    fn conditioning_commutes_with_counting() {
        let mut rng = ChaCha8Rng::seed_from_u64(233);
        for _ in 0..30 {
            let n = rng.gen_range(2..=8);
            let f = synth::random_dnf(&mut rng, n);
            let circuit = synth::compile_shannon(n, &f);
            let split = rng.gen_range(1..n);
            let first = random_literals(&mut rng, 1..=split, 0.5);
            let second = random_literals(&mut rng, split + 1..=n, 0.5);
            let joint = ConditioningTerm::from_literals(
                n,
                first.iter().chain(&second).copied(),
            )
            .unwrap();
            let staged = circuit
                .condition(&ConditioningTerm::from_literals(n, first.clone()).unwrap())
                .condition(&ConditioningTerm::from_literals(n, second.clone()).unwrap());
            assert_eq!(circuit.condition(&joint).model_count(), staged.model_count());
        }
    }

    #[test]
    fn determinism_checker_catches_overlap() {
        or2().check_determinism(8).unwrap();
        let naive = NnfCircuit::new(2, vec![lit(1, true), lit(2, true), NnfNode::Or(vec![0, 1])], 2)
            .unwrap();
        assert!(matches!(naive.check_determinism(8), Err(Error::Load(_))));
        assert!(matches!(naive.check_determinism(1), Err(Error::Input(_))));
    }

    #[test]
    fn parses_the_compiler_format() {
        let c = parse_nnf("nnf 3 2 2\nL 1\nL 2\nA 2 0 1\n").unwrap();
        assert_eq!(c.var_count(), 2);
        assert_eq!(c.model_count(), BigUint::one());
        // Comments and constant nodes.
        let c = parse_nnf("c a tautology\nnnf 1 0 3\nA 0\n").unwrap();
        assert_eq!(c.model_count(), BigUint::from(8u32));
        let c = parse_nnf("nnf 1 0 2\nO 0 0\n").unwrap();
        assert_eq!(c.model_count(), BigUint::zero());
        for bad in [
            "",
            "nnf 2 0 2\nL 1\n",
            "nnf 1 0 2\nL 0\n",
            "nnf 1 0 2\nX 1\n",
            "nnf 2 1 2\nA 1 1\nL 1\n",
            "cnf 1 0 2\nL 1\n",
        ] {
            assert!(matches!(parse_nnf(bad), Err(Error::Load(_))), "{bad:?}");
        }
    }

    #[test]
    fn binary_search_finds_smallest_explanations() {
        // A projection: only x1 matters.
        let projection = CircuitClassifier::from_circuit(
            NnfCircuit::new(3, vec![lit(1, true)], 0).unwrap(),
        );
        let v = Instance::new(&projection, vec![1, 0, 1]).unwrap();
        let s = min_paxp_binary_search(&projection, &v, &Threshold::one()).unwrap();
        assert_eq!(s.as_slice(), &[1]);
        let s = min_paxp_binary_search(&projection, &v, &Threshold::zero()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn binary_search_matches_exhaustive_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(239);
        for round in 0..40 {
            let n = rng.gen_range(2..=8);
            let f = synth::random_dnf(&mut rng, n);
            let k = CircuitClassifier::from_circuit(synth::compile_shannon(n, &f));
            let v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let v = Instance::new(&k, v).unwrap();
            let delta = if rng.gen_bool(0.5) {
                Threshold::one()
            } else {
                Threshold::from_u32_ratio(rng.gen_range(50..=99), 100).unwrap()
            };
            let found = min_paxp_binary_search(&k, &v, &delta).unwrap();
            let universe = FeatureSet::full(n);
            let exhaustive =
                oracle::exhaustive_min_paxp(&k, &v, &universe, &delta, 1 << 22).unwrap();
            assert_eq!(found, exhaustive, "round {round}");
            assert_eq!(
                found,
                engine::min_paxp(&k, &v, &universe, &delta).unwrap(),
                "round {round}"
            );
        }
    }

    #[test]
    fn session_deletion_uses_linearly_many_queries() {
        use std::sync::atomic::{AtomicUsize, Ordering};

        struct CountingBackend<'a> {
            inner: &'a CircuitClassifier,
            calls: AtomicUsize,
        }
        impl Backend for CountingBackend<'_> {
            fn meta(&self) -> &ClassifierMeta {
                self.inner.meta()
            }
            fn classify(&self, values: &[usize]) -> usize {
                self.inner.classify(values)
            }
            fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
                self.calls.fetch_add(1, Ordering::Relaxed);
                self.inner.count(values, fixed, class)
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(241);
        for _ in 0..20 {
            let n = rng.gen_range(2..=8);
            let f = synth::random_dnf(&mut rng, n);
            let inner = CircuitClassifier::from_circuit(synth::compile_shannon(n, &f));
            let k = CountingBackend {
                inner: &inner,
                calls: AtomicUsize::new(0),
            };
            let v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let v = Instance::new(&inner, v).unwrap();
            let universe = FeatureSet::full(n);
            let order: Vec<usize> = universe.iter().collect();
            let delta = Threshold::from_u32_ratio(rng.gen_range(50..=100), 100).unwrap();
            let _ = engine::lm_paxp(&k, &v, &universe, &order, &delta).unwrap();
            let calls = k.calls.load(Ordering::Relaxed);
            // One validation of the seed plus one check per feature.
            assert!(calls <= n + 1, "{calls} calls for {n} features");
        }
    }
}
