//! Decision trees over finite feature domains, with exact path-based model
//! counting.
//!
//! Each root-to-leaf path carries, per tested feature, the intersection of
//! the value sets along its edges. Counting the points consistent with a
//! path under a fixed-feature assignment is a product of per-feature factors
//! (see [`DecisionTree::path_model_count`]); summing over paths gives the
//! exact class counts, because every point of the feature space is
//! consistent with exactly one path.

use crate::types::{Backend, ClassifierMeta, CountPair, Error, FeatureSet, Result};
use num::{BigUint, One, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNodeKind {
    /// Internal node testing the given 1-based feature.
    Test(usize),
    /// Leaf labelled with a class index.
    Leaf(usize),
}

/// Edge spec as it appears in model files: node ids are caller-chosen, the
/// value set is given by 0-based value indices of the source node's feature.
#[derive(Debug, Clone)]
pub struct TreeEdgeSpec {
    pub from: usize,
    pub to: usize,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Edge {
    values: Vec<usize>,
    to: usize,
}

/// One root-to-leaf path: the node sequence, the per-feature intersected
/// value sets of its literals, and the leaf class.
#[derive(Debug, Clone)]
pub struct TreePath {
    node_ids: Vec<usize>,
    /// Indexed by feature-1; `None` when the path never tests the feature.
    literals: Vec<Option<Vec<usize>>>,
    class: usize,
}

impl TreePath {
    pub fn node_ids(&self) -> &[usize] {
        &self.node_ids
    }

    pub fn class(&self) -> usize {
        self.class
    }

    /// The intersected value set for 1-based feature `i`, when tested.
    pub fn literal(&self, i: usize) -> Option<&[usize]> {
        self.literals[i - 1].as_deref()
    }

    /// Φ: the features tested along the path.
    pub fn tested_features(&self) -> FeatureSet {
        FeatureSet::from_sorted_unchecked(
            self.literals
                .iter()
                .enumerate()
                .filter(|(_, l)| l.is_some())
                .map(|(f, _)| f + 1)
                .collect(),
        )
    }

    pub fn is_consistent_with(&self, values: &[usize]) -> bool {
        self.literals.iter().enumerate().all(|(f, lit)| match lit {
            Some(set) => set.contains(&values[f]),
            None => true,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    meta: ClassifierMeta,
    root: usize,
    kinds: Vec<TreeNodeKind>,
    node_ids: Vec<usize>,
    children: Vec<Vec<Edge>>,
    paths: Vec<TreePath>,
}

impl DecisionTree {
    /// Builds and fully validates a tree: unique ids, tree shape (single
    /// root, one parent per node, everything reachable), and the partition
    /// property: at every internal node the outgoing value sets partition
    /// the values of its feature consistent with the path so far. Repeated
    /// tests of a feature along a path are intersected into one literal.
    pub fn new(
        meta: ClassifierMeta,
        root_id: usize,
        nodes: Vec<(usize, TreeNodeKind)>,
        edges: Vec<TreeEdgeSpec>,
    ) -> Result<Self> {
        let m = meta.feature_count();
        let mut node_ids = Vec::with_capacity(nodes.len());
        let mut kinds = Vec::with_capacity(nodes.len());
        for (id, kind) in nodes {
            if node_ids.contains(&id) {
                return Err(Error::load(format!("node id {id} defined twice")));
            }
            match kind {
                TreeNodeKind::Test(f) if f == 0 || f > m => {
                    return Err(Error::load(format!("node {id} tests unknown feature {f}")));
                }
                TreeNodeKind::Leaf(c) if c >= meta.class_count() => {
                    return Err(Error::load(format!("node {id} has unknown class index {c}")));
                }
                _ => {}
            }
            node_ids.push(id);
            kinds.push(kind);
        }
        let index_of = |id: usize| -> Result<usize> {
            node_ids
                .iter()
                .position(|&n| n == id)
                .ok_or_else(|| Error::load(format!("edge references unknown node id {id}")))
        };
        let root = index_of(root_id)?;

        let mut children: Vec<Vec<Edge>> = vec![Vec::new(); kinds.len()];
        let mut indegree = vec![0usize; kinds.len()];
        for e in edges {
            let from = index_of(e.from)?;
            let to = index_of(e.to)?;
            let feature = match kinds[from] {
                TreeNodeKind::Test(f) => f,
                TreeNodeKind::Leaf(_) => {
                    return Err(Error::load(format!("leaf node {} has an outgoing edge", e.from)));
                }
            };
            if e.values.is_empty() {
                return Err(Error::load(format!(
                    "edge {} -> {} has an empty value set",
                    e.from, e.to
                )));
            }
            let mut values = e.values;
            values.sort_unstable();
            if values.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::load(format!(
                    "edge {} -> {} repeats a value",
                    e.from, e.to
                )));
            }
            if *values.last().unwrap() >= meta.domain_size(feature) {
                return Err(Error::load(format!(
                    "edge {} -> {} lists a value outside the domain of {}",
                    e.from,
                    e.to,
                    meta.feature_name(feature)
                )));
            }
            indegree[to] += 1;
            children[from].push(Edge { values, to });
        }

        if indegree[root] != 0 {
            return Err(Error::load("root node has an incoming edge".to_string()));
        }
        for (n, &d) in indegree.iter().enumerate() {
            if n != root && d != 1 {
                return Err(Error::load(format!(
                    "node {} has {} parents, a tree node needs exactly one",
                    node_ids[n], d
                )));
            }
        }
        for (n, kind) in kinds.iter().enumerate() {
            match kind {
                TreeNodeKind::Test(_) if children[n].len() < 2 => {
                    return Err(Error::load(format!(
                        "internal node {} has {} outgoing edges, needs at least 2",
                        node_ids[n],
                        children[n].len()
                    )));
                }
                _ => {}
            }
        }

        // Depth-first traversal: checks the partition property against the
        // per-path consistent value sets and collects the paths.
        let mut paths = Vec::new();
        let mut visited = vec![false; kinds.len()];
        let initial: Vec<Vec<usize>> = (1..=m).map(|i| (0..meta.domain_size(i)).collect()).collect();
        let mut stack: Vec<(usize, Vec<usize>, Vec<Vec<usize>>)> =
            vec![(root, vec![root], initial)];
        while let Some((n, trail, consistent)) = stack.pop() {
            visited[n] = true;
            match kinds[n] {
                TreeNodeKind::Leaf(class) => {
                    let literals = (0..m)
                        .map(|f| {
                            if consistent[f].len() == meta.domain_size(f + 1)
                                && !trail.iter().any(|&t| kinds[t] == TreeNodeKind::Test(f + 1))
                            {
                                None
                            } else {
                                Some(consistent[f].clone())
                            }
                        })
                        .collect();
                    paths.push(TreePath {
                        node_ids: trail.iter().map(|&t| node_ids[t]).collect(),
                        literals,
                        class,
                    });
                }
                TreeNodeKind::Test(feature) => {
                    let live = &consistent[feature - 1];
                    let mut covered: Vec<usize> = Vec::new();
                    for e in &children[n] {
                        for &a in &e.values {
                            if !live.contains(&a) {
                                return Err(Error::load(format!(
                                    "edge out of node {} uses value {:?} of {} already excluded upstream",
                                    node_ids[n],
                                    meta.domain_values(feature)[a],
                                    meta.feature_name(feature)
                                )));
                            }
                            if covered.contains(&a) {
                                return Err(Error::load(format!(
                                    "edges out of node {} overlap on value {:?} of {}",
                                    node_ids[n],
                                    meta.domain_values(feature)[a],
                                    meta.feature_name(feature)
                                )));
                            }
                            covered.push(a);
                        }
                    }
                    if covered.len() != live.len() {
                        return Err(Error::load(format!(
                            "edges out of node {} do not cover every consistent value of {}",
                            node_ids[n],
                            meta.feature_name(feature)
                        )));
                    }
                    for e in &children[n] {
                        let mut next = consistent.clone();
                        next[feature - 1] = e.values.clone();
                        let mut t = trail.clone();
                        t.push(e.to);
                        stack.push((e.to, t, next));
                    }
                }
            }
        }
        if let Some(n) = visited.iter().position(|&v| !v) {
            return Err(Error::load(format!(
                "node {} is unreachable from the root",
                node_ids[n]
            )));
        }

        // Restore a stable path order (the stack reverses siblings).
        paths.sort_by(|a, b| a.node_ids.cmp(&b.node_ids));

        Ok(DecisionTree {
            meta,
            root,
            kinds,
            node_ids,
            children,
            paths,
        })
    }

    pub fn paths(&self) -> &[TreePath] {
        &self.paths
    }

    pub fn root_id(&self) -> usize {
        self.node_ids[self.root]
    }

    /// The nodes as (id, kind) pairs, in declaration order.
    pub fn nodes(&self) -> Vec<(usize, TreeNodeKind)> {
        self.node_ids
            .iter()
            .copied()
            .zip(self.kinds.iter().cloned())
            .collect()
    }

    /// The edges as (from id, to id, value set) triples.
    pub fn edges(&self) -> Vec<(usize, usize, Vec<usize>)> {
        let mut out = Vec::new();
        for n in 0..self.kinds.len() {
            for e in &self.children[n] {
                out.push((self.node_ids[n], self.node_ids[e.to], e.values.clone()));
            }
        }
        out
    }

    /// The unique path consistent with `values`.
    pub fn consistent_path(&self, values: &[usize]) -> &TreePath {
        let mut n = self.root;
        loop {
            match self.kinds[n] {
                TreeNodeKind::Leaf(_) => {
                    let id = self.node_ids[n];
                    return self
                        .paths
                        .iter()
                        .find(|p| *p.node_ids.last().unwrap() == id)
                        .expect("every leaf terminates a recorded path");
                }
                TreeNodeKind::Test(feature) => {
                    let a = values[feature - 1];
                    n = self.children[n]
                        .iter()
                        .find(|e| e.values.contains(&a))
                        .expect("edge sets partition the consistent values")
                        .to;
                }
            }
        }
    }

    /// Φ(P_t): the features tested on the path consistent with `values`.
    /// Explanation universes for trees are restricted to this set, since a
    /// feature off the consistent path never influences the prediction.
    pub fn path_universe(&self, values: &[usize]) -> FeatureSet {
        self.consistent_path(values).tested_features()
    }

    /// Number of points consistent with both the path and the assignment
    /// that fixes the `fixed` features at their `values`: the product over
    /// features of
    /// - 0 or 1 for fixed tested features (membership of the fixed value),
    /// - 1 for fixed untested features,
    /// - |E_i| for free tested features,
    /// - |D_i| for free untested features.
    pub fn path_model_count(&self, path: &TreePath, values: &[usize], fixed: &FeatureSet) -> BigUint {
        count_consistent_with_literals(&self.meta, &path.literals, values, fixed)
    }
}

/// The per-path model count shared by trees and decision graphs, where
/// `literals[i-1]` is the set of values feature i may take on the path (None
/// when untested).
pub(crate) fn count_consistent_with_literals(
    meta: &ClassifierMeta,
    literals: &[Option<Vec<usize>>],
    values: &[usize],
    fixed: &FeatureSet,
) -> BigUint {
    let mut product = BigUint::one();
    for i in 1..=meta.feature_count() {
        match (fixed.contains(i), &literals[i - 1]) {
            (true, Some(set)) => {
                if !set.contains(&values[i - 1]) {
                    return BigUint::zero();
                }
            }
            (true, None) => {}
            (false, Some(set)) => product *= BigUint::from(set.len()),
            (false, None) => product *= BigUint::from(meta.domain_size(i)),
        }
    }
    product
}

impl Backend for DecisionTree {
    fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    fn classify(&self, values: &[usize]) -> usize {
        self.consistent_path(values).class()
    }

    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        let mut target = BigUint::zero();
        let mut total = BigUint::zero();
        for path in &self.paths {
            let n = self.path_model_count(path, values, fixed);
            if path.class() == class {
                target += &n;
            }
            total += n;
        }
        CountPair::new(target, total)
    }
}
