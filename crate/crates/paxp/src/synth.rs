//! Random model generators for tests and benchmarks. Every generator
//! produces a structurally valid model by construction and funnels it
//! through the same validating constructors as file loading, so a panic
//! here means the constructor and the generator disagree.

use crate::ddg::{DdEdgeSpec, DdNodeKind, Obdd, Omdd};
use crate::ddnnf::{NnfCircuit, NnfNode};
use crate::dtree::{DecisionTree, TreeEdgeSpec, TreeNodeKind};
use crate::nbc::NbcModel;
use crate::types::{ClassifierMeta, Rational};
use num::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn meta_with(domains: &[usize], classes: usize) -> ClassifierMeta {
    ClassifierMeta::new(
        (1..=domains.len()).map(|i| format!("x{i}")).collect(),
        domains
            .iter()
            .map(|&d| (0..d).map(|k| format!("v{k}")).collect())
            .collect(),
        (0..classes).map(|c| format!("c{c}")).collect(),
    )
    .expect("generated names are valid")
}

struct OmddBuilder<'a, R: Rng> {
    rng: &'a mut R,
    domains: &'a [usize],
    classes: usize,
    next_id: usize,
    nodes: Vec<(usize, DdNodeKind)>,
    edges: Vec<DdEdgeSpec>,
    /// Already-built nodes as (id, tested feature or m+1), available for
    /// reuse as shared children.
    pool: Vec<(usize, usize)>,
}

impl<R: Rng> OmddBuilder<'_, R> {
    /// Builds a node testing a feature at or after `level`, returning its
    /// id. Children are built first, so every node is attached to its
    /// creator (or is the root) and reachability holds by induction; pool
    /// reuse adds extra in-edges, which creates sharing and parallel edges.
    fn build(&mut self, level: usize) -> (usize, usize) {
        let m = self.domains.len();
        if level > m || self.rng.gen_bool(0.3) {
            let id = self.next_id;
            self.next_id += 1;
            let class = self.rng.gen_range(0..self.classes);
            self.nodes.push((id, DdNodeKind::Leaf(class)));
            self.pool.push((id, m + 1));
            return (id, m + 1);
        }
        let feature = self.rng.gen_range(level..=m);
        let mut pending = Vec::new();
        for value in 0..self.domains[feature - 1] {
            let reusable: Vec<usize> = self
                .pool
                .iter()
                .filter(|&&(_, var)| var > feature)
                .map(|&(id, _)| id)
                .collect();
            let child = if !reusable.is_empty() && self.rng.gen_bool(0.5) {
                reusable[self.rng.gen_range(0..reusable.len())]
            } else {
                self.build(feature + 1).0
            };
            pending.push((child, value));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.push((id, DdNodeKind::Test(feature)));
        for (to, value) in pending {
            self.edges.push(DdEdgeSpec { from: id, to, value });
        }
        self.pool.push((id, feature));
        (id, feature)
    }
}

pub fn random_omdd<R: Rng>(rng: &mut R, domains: &[usize], classes: usize) -> Omdd {
    let meta = meta_with(domains, classes);
    let mut b = OmddBuilder {
        rng,
        domains,
        classes,
        next_id: 1,
        nodes: Vec::new(),
        edges: Vec::new(),
        pool: Vec::new(),
    };
    let (root, _) = b.build(1);
    Omdd::new(meta, root, b.nodes, b.edges).expect("construction respects the invariants")
}

pub fn random_obdd<R: Rng>(rng: &mut R, features: usize) -> Obdd {
    let domains = vec![2; features];
    Obdd::new(random_omdd(rng, &domains, 2)).expect("binary by construction")
}

struct TreeBuilder<'a, R: Rng> {
    rng: &'a mut R,
    classes: usize,
    max_depth: usize,
    next_id: usize,
    nodes: Vec<(usize, TreeNodeKind)>,
    edges: Vec<TreeEdgeSpec>,
}

impl<R: Rng> TreeBuilder<'_, R> {
    /// `consistent[i]` holds the values feature i+1 may still take on this
    /// path; splits partition it, so retesting a feature deeper down stays
    /// consistent and the tree constructor's partition check passes.
    fn build(&mut self, depth: usize, consistent: &mut Vec<Vec<usize>>) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        let eligible: Vec<usize> = (1..=consistent.len())
            .filter(|&f| consistent[f - 1].len() >= 2)
            .collect();
        if depth >= self.max_depth || eligible.is_empty() || self.rng.gen_bool(0.25) {
            let class = self.rng.gen_range(0..self.classes);
            self.nodes.push((id, TreeNodeKind::Leaf(class)));
            return id;
        }
        let feature = eligible[self.rng.gen_range(0..eligible.len())];
        self.nodes.push((id, TreeNodeKind::Test(feature)));
        let mut values = consistent[feature - 1].clone();
        values.shuffle(self.rng);
        let parts = self.rng.gen_range(2..=values.len());
        let mut cuts: Vec<usize> = (1..values.len()).collect();
        cuts.shuffle(self.rng);
        let mut cuts: Vec<usize> = cuts[..parts - 1].to_vec();
        cuts.sort_unstable();
        cuts.push(values.len());
        let mut start = 0;
        for cut in cuts {
            let mut part = values[start..cut].to_vec();
            part.sort_unstable();
            start = cut;
            let saved = std::mem::replace(&mut consistent[feature - 1], part.clone());
            let child = self.build(depth + 1, consistent);
            consistent[feature - 1] = saved;
            self.edges.push(TreeEdgeSpec {
                from: id,
                to: child,
                values: part,
            });
        }
        id
    }
}

pub fn random_tree<R: Rng>(
    rng: &mut R,
    domains: &[usize],
    classes: usize,
    max_depth: usize,
) -> DecisionTree {
    let meta = meta_with(domains, classes);
    let mut b = TreeBuilder {
        rng,
        classes,
        max_depth,
        next_id: 1,
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let mut consistent: Vec<Vec<usize>> = domains.iter().map(|&d| (0..d).collect()).collect();
    let root = b.build(0, &mut consistent);
    DecisionTree::new(meta, root, b.nodes, b.edges).expect("construction respects the invariants")
}

/// Log-probabilities drawn with two decimal places, so quantization at
/// d >= 2 is lossless.
pub fn random_nbc<R: Rng>(rng: &mut R, domains: &[usize]) -> NbcModel {
    let meta = meta_with(domains, 2);
    let mut lp = || Rational::new((-rng.gen_range(1..=300i64)).into(), 100.into());
    let prior = [lp(), lp()];
    let cond = std::array::from_fn(|_| {
        domains
            .iter()
            .map(|&d| (0..d).map(|_| lp()).collect())
            .collect()
    });
    NbcModel::new(meta, prior, cond).expect("generated tables are complete")
}

/// A random small DNF as a plain boolean function, for compiling and for
/// truth-table oracles.
pub fn random_dnf<R: Rng>(rng: &mut R, n: usize) -> impl Fn(&[bool]) -> bool {
    let term_count = rng.gen_range(1..=4);
    let terms: Vec<Vec<(usize, bool)>> = (0..term_count)
        .map(|_| {
            (1..=n)
                .filter_map(|v| rng.gen_bool(0.5).then(|| (v, rng.gen_bool(0.5))))
                .collect()
        })
        .collect();
    move |assignment: &[bool]| {
        terms
            .iter()
            .any(|term| term.iter().all(|&(v, sign)| assignment[v - 1] == sign))
    }
}

/// Compiles an arbitrary boolean function by branching on each variable in
/// turn; both branches of every disjunction pin the variable, so the result
/// is deterministic and decomposable by construction.
pub fn compile_shannon(n: usize, f: &dyn Fn(&[bool]) -> bool) -> NnfCircuit {
    fn build(
        n: usize,
        f: &dyn Fn(&[bool]) -> bool,
        prefix: &mut Vec<bool>,
        nodes: &mut Vec<NnfNode>,
    ) -> usize {
        if prefix.len() == n {
            nodes.push(if f(prefix) { NnfNode::True } else { NnfNode::False });
            return nodes.len() - 1;
        }
        let var = prefix.len() + 1;
        let mut arms = Vec::new();
        for value in [false, true] {
            prefix.push(value);
            let sub = build(n, f, prefix, nodes);
            prefix.pop();
            nodes.push(NnfNode::Literal {
                var,
                positive: value,
            });
            let guard = nodes.len() - 1;
            nodes.push(NnfNode::And(vec![guard, sub]));
            arms.push(nodes.len() - 1);
        }
        nodes.push(NnfNode::Or(arms));
        nodes.len() - 1
    }
    let mut nodes = Vec::new();
    let root = build(n, f, &mut Vec::new(), &mut nodes);
    NnfCircuit::new(n, nodes, root).expect("branching keeps supports disjoint")
}

/// Satisfying assignments over n variables, counted one point at a time.
pub fn truth_table_count(n: usize, f: &dyn Fn(&[bool]) -> bool) -> BigUint {
    let mut count = 0u64;
    let mut assignment = vec![false; n];
    for bits in 0..1u64 << n {
        for (i, a) in assignment.iter_mut().enumerate() {
            *a = bits & (1 << i) != 0;
        }
        count += u64::from(f(&assignment));
    }
    BigUint::from(count)
}
