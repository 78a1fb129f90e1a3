//! Graph-shaped classifiers. Ordered multi-valued decision diagrams (and
//! their binary special case) count models in one bottom-up pass with
//! per-node indicators; free-form decision graphs fall back to path
//! enumeration, which is exact but worst-case exponential in the graph size.

use crate::dtree::{count_consistent_with_literals, DecisionTree, TreeNodeKind};
use crate::types::{Backend, ClassifierMeta, CountPair, Error, FeatureSet, Result};
use num::{BigUint, One, Zero};
use std::collections::HashMap;

/// Internal nodes test one feature; terminals carry a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdNodeKind {
    Test(usize),
    Leaf(usize),
}

/// One OMDD edge carries a single value; several parallel edges between the
/// same pair of nodes express multi-valued jumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdEdgeSpec {
    pub from: usize,
    pub to: usize,
    pub value: usize,
}

/// An ordered multi-valued decision diagram: features are tested in strictly
/// increasing order along every path (each at most once), and each internal
/// node has exactly one outgoing edge per domain value.
#[derive(Debug, Clone)]
pub struct Omdd {
    meta: ClassifierMeta,
    root: usize,
    node_ids: Vec<usize>,
    kinds: Vec<DdNodeKind>,
    /// Dense child index and value label, per edge.
    children: Vec<Vec<(usize, usize)>>,
}

impl Omdd {
    pub fn new(
        meta: ClassifierMeta,
        root_id: usize,
        nodes: Vec<(usize, DdNodeKind)>,
        edges: Vec<DdEdgeSpec>,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        let mut node_ids = Vec::with_capacity(nodes.len());
        let mut kinds = Vec::with_capacity(nodes.len());
        for (id, kind) in &nodes {
            if index.insert(*id, node_ids.len()).is_some() {
                return Err(Error::load(format!("duplicate node id {id}")));
            }
            match kind {
                DdNodeKind::Test(f) => {
                    if *f == 0 || *f > meta.feature_count() {
                        return Err(Error::load(format!("node {id} tests unknown feature {f}")));
                    }
                }
                DdNodeKind::Leaf(c) => {
                    if *c >= meta.class_count() {
                        return Err(Error::load(format!("node {id} has unknown class {c}")));
                    }
                }
            }
            node_ids.push(*id);
            kinds.push(*kind);
        }
        let root = *index
            .get(&root_id)
            .ok_or_else(|| Error::load(format!("root {root_id} is not a node")))?;
        let m = meta.feature_count();
        let var = |n: usize| match kinds[n] {
            DdNodeKind::Test(f) => f,
            DdNodeKind::Leaf(_) => m + 1,
        };
        let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); kinds.len()];
        for e in &edges {
            let from = *index
                .get(&e.from)
                .ok_or_else(|| Error::load(format!("edge from unknown node {}", e.from)))?;
            let to = *index
                .get(&e.to)
                .ok_or_else(|| Error::load(format!("edge to unknown node {}", e.to)))?;
            let feature = match kinds[from] {
                DdNodeKind::Test(f) => f,
                DdNodeKind::Leaf(_) => {
                    return Err(Error::load(format!("terminal {} has an outgoing edge", e.from)))
                }
            };
            if e.value >= meta.domain_size(feature) {
                return Err(Error::load(format!(
                    "edge {}->{} labeled with value {} outside feature {}'s domain",
                    e.from, e.to, e.value, feature
                )));
            }
            if var(to) <= feature {
                return Err(Error::load(format!(
                    "edge {}->{} does not increase the tested feature (ordering violation)",
                    e.from, e.to
                )));
            }
            children[from].push((to, e.value));
        }
        for n in 0..kinds.len() {
            if let DdNodeKind::Test(f) = kinds[n] {
                let mut seen = vec![false; meta.domain_size(f)];
                for &(_, value) in &children[n] {
                    if seen[value] {
                        return Err(Error::load(format!(
                            "node {} has two edges for value {}",
                            node_ids[n], value
                        )));
                    }
                    seen[value] = true;
                }
                if let Some(missing) = seen.iter().position(|s| !s) {
                    return Err(Error::load(format!(
                        "node {} has no edge for value {}",
                        node_ids[n], missing
                    )));
                }
            }
        }
        // Edges strictly increase the tested feature, so the graph is acyclic;
        // only reachability needs a walk.
        let mut reached = vec![false; kinds.len()];
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut reached[n], true) {
                continue;
            }
            for &(to, _) in &children[n] {
                stack.push(to);
            }
        }
        if let Some(n) = reached.iter().position(|r| !r) {
            return Err(Error::load(format!(
                "node {} is unreachable from the root",
                node_ids[n]
            )));
        }
        Ok(Omdd {
            meta,
            root,
            node_ids,
            kinds,
            children,
        })
    }

    pub fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    fn var(&self, n: usize) -> usize {
        match self.kinds[n] {
            DdNodeKind::Test(f) => f,
            DdNodeKind::Leaf(_) => self.meta.feature_count() + 1,
        }
    }

    /// Counting is exact whether or not the diagram is reduced; these notes
    /// flag redundancies a reduction pass would remove.
    pub fn reduction_warnings(&self) -> Vec<String> {
        let mut notes = Vec::new();
        let mut canonical: HashMap<String, usize> = HashMap::new();
        for n in 0..self.kinds.len() {
            let key = match self.kinds[n] {
                DdNodeKind::Leaf(c) => format!("leaf {c}"),
                DdNodeKind::Test(f) => {
                    let first = self.children[n][0].0;
                    if self.children[n].iter().all(|&(to, _)| to == first) {
                        notes.push(format!(
                            "node {} sends every value to node {}",
                            self.node_ids[n], self.node_ids[first]
                        ));
                    }
                    let mut map: Vec<(usize, usize)> = self.children[n]
                        .iter()
                        .map(|&(to, value)| (value, to))
                        .collect();
                    map.sort_unstable();
                    format!("test {f} {map:?}")
                }
            };
            if let Some(&twin) = canonical.get(&key) {
                notes.push(format!(
                    "nodes {} and {} are isomorphic",
                    self.node_ids[twin], self.node_ids[n]
                ));
            } else {
                canonical.insert(key, n);
            }
        }
        notes
    }

    /// Product of the free domains strictly between features `lo` and `hi`:
    /// the completions of the features an edge jumps over.
    fn gap_product(&self, lo: usize, hi: usize, fixed: &FeatureSet) -> BigUint {
        let mut product = BigUint::one();
        for l in lo + 1..hi {
            if !fixed.contains(l) {
                product *= BigUint::from(self.meta.domain_size(l));
            }
        }
        product
    }

    /// Number of points x with x_X = v_X reaching class `class`, computed
    /// bottom-up: a terminal scores 1 or 0; a node testing a fixed feature
    /// follows only the value-consistent edge; a free feature sums over all
    /// edges; every edge multiplies in the completions of the features it
    /// skips. Skipped features before the root count the same way.
    pub fn count_class(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> BigUint {
        let mut memo: Vec<Option<BigUint>> = vec![None; self.kinds.len()];
        let at_root = self.indicator(self.root, values, fixed, class, &mut memo);
        at_root * self.gap_product(0, self.var(self.root), fixed)
    }

    fn indicator(
        &self,
        n: usize,
        values: &[usize],
        fixed: &FeatureSet,
        class: usize,
        memo: &mut Vec<Option<BigUint>>,
    ) -> BigUint {
        if let Some(v) = &memo[n] {
            return v.clone();
        }
        let result = match self.kinds[n] {
            DdNodeKind::Leaf(c) => {
                if c == class {
                    BigUint::one()
                } else {
                    BigUint::zero()
                }
            }
            DdNodeKind::Test(f) => {
                let mut sum = BigUint::zero();
                for &(to, value) in &self.children[n] {
                    if fixed.contains(f) && value != values[f - 1] {
                        continue;
                    }
                    let below = self.indicator(to, values, fixed, class, memo);
                    sum += below * self.gap_product(f, self.var(to), fixed);
                }
                sum
            }
        };
        memo[n] = Some(result.clone());
        result
    }

    /// The diagram with `feature` pinned to `value`: nodes testing it are
    /// bypassed through their value-consistent edge. The feature itself
    /// still exists in the metadata (and counts as free unless fixed).
    pub fn condition(&self, feature: usize, value: usize) -> Omdd {
        let substitute = |n: usize| -> usize {
            match self.kinds[n] {
                DdNodeKind::Test(f) if f == feature => {
                    self.children[n]
                        .iter()
                        .find(|&&(_, val)| val == value)
                        .expect("edge values cover the domain")
                        .0
                }
                _ => n,
            }
        };
        let root = substitute(self.root);
        let mut keep = vec![false; self.kinds.len()];
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut keep[n], true) {
                continue;
            }
            for &(to, _) in &self.children[n] {
                stack.push(substitute(to));
            }
        }
        let nodes = (0..self.kinds.len())
            .filter(|&n| keep[n])
            .map(|n| (self.node_ids[n], self.kinds[n]))
            .collect();
        let mut edges = Vec::new();
        for n in 0..self.kinds.len() {
            if !keep[n] {
                continue;
            }
            for &(to, val) in &self.children[n] {
                edges.push(DdEdgeSpec {
                    from: self.node_ids[n],
                    to: self.node_ids[substitute(to)],
                    value: val,
                });
            }
        }
        Omdd::new(self.meta.clone(), self.node_ids[root], nodes, edges)
            .expect("conditioning preserves every structural invariant")
    }
}

impl Backend for Omdd {
    fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    fn classify(&self, values: &[usize]) -> usize {
        let mut n = self.root;
        loop {
            match self.kinds[n] {
                DdNodeKind::Leaf(c) => return c,
                DdNodeKind::Test(f) => {
                    n = self.children[n]
                        .iter()
                        .find(|&&(_, value)| value == values[f - 1])
                        .expect("edge values cover the domain")
                        .0;
                }
            }
        }
    }

    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        CountPair::new(
            self.count_class(values, fixed, class),
            self.meta.free_space_size(fixed),
        )
    }
}

/// An OMDD restricted to binary domains and binary classes.
#[derive(Debug, Clone)]
pub struct Obdd(Omdd);

impl Obdd {
    pub fn new(graph: Omdd) -> Result<Self> {
        if graph.meta.class_count() != 2 {
            return Err(Error::load("a binary decision diagram needs two classes"));
        }
        for i in 1..=graph.meta.feature_count() {
            if graph.meta.domain_size(i) != 2 {
                return Err(Error::load(format!(
                    "feature {i} is not binary; use the multi-valued form"
                )));
            }
        }
        Ok(Obdd(graph))
    }

    pub fn as_omdd(&self) -> &Omdd {
        &self.0
    }

    pub fn into_omdd(self) -> Omdd {
        self.0
    }
}

impl Backend for Obdd {
    fn meta(&self) -> &ClassifierMeta {
        self.0.meta()
    }

    fn classify(&self, values: &[usize]) -> usize {
        self.0.classify(values)
    }

    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        self.0.count(values, fixed, class)
    }
}

/// One decision-graph edge carries a set of values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DgEdgeSpec {
    pub from: usize,
    pub to: usize,
    pub values: Vec<usize>,
}

struct DgPath {
    literals: Vec<Option<Vec<usize>>>,
    class: usize,
}

/// A free-form decision graph: a rooted DAG whose internal nodes may share
/// subgraphs and retest features, as long as each node's outgoing values
/// partition the values still consistent with the path. Every root-terminal
/// path is enumerated at construction, so counting is exact but the
/// representation is worst-case exponential in the graph size.
pub struct Dg {
    meta: ClassifierMeta,
    root: usize,
    kinds: Vec<DdNodeKind>,
    children: Vec<Vec<(usize, Vec<usize>)>>,
    paths: Vec<DgPath>,
}

impl Dg {
    pub fn new(
        meta: ClassifierMeta,
        root_id: usize,
        nodes: Vec<(usize, DdNodeKind)>,
        edges: Vec<DgEdgeSpec>,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        let mut node_ids = Vec::with_capacity(nodes.len());
        let mut kinds = Vec::with_capacity(nodes.len());
        for (id, kind) in &nodes {
            if index.insert(*id, node_ids.len()).is_some() {
                return Err(Error::load(format!("duplicate node id {id}")));
            }
            match kind {
                DdNodeKind::Test(f) => {
                    if *f == 0 || *f > meta.feature_count() {
                        return Err(Error::load(format!("node {id} tests unknown feature {f}")));
                    }
                }
                DdNodeKind::Leaf(c) => {
                    if *c >= meta.class_count() {
                        return Err(Error::load(format!("node {id} has unknown class {c}")));
                    }
                }
            }
            node_ids.push(*id);
            kinds.push(*kind);
        }
        let root = *index
            .get(&root_id)
            .ok_or_else(|| Error::load(format!("root {root_id} is not a node")))?;
        let mut children: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); kinds.len()];
        for e in &edges {
            let from = *index
                .get(&e.from)
                .ok_or_else(|| Error::load(format!("edge from unknown node {}", e.from)))?;
            let to = *index
                .get(&e.to)
                .ok_or_else(|| Error::load(format!("edge to unknown node {}", e.to)))?;
            let feature = match kinds[from] {
                DdNodeKind::Test(f) => f,
                DdNodeKind::Leaf(_) => {
                    return Err(Error::load(format!("terminal {} has an outgoing edge", e.from)))
                }
            };
            let mut values = e.values.clone();
            values.sort_unstable();
            values.dedup();
            if values.len() != e.values.len() || values.is_empty() {
                return Err(Error::load(format!(
                    "edge {}->{} needs a nonempty set of distinct values",
                    e.from, e.to
                )));
            }
            if *values.last().unwrap() >= meta.domain_size(feature) {
                return Err(Error::load(format!(
                    "edge {}->{} mentions a value outside feature {}'s domain",
                    e.from, e.to, feature
                )));
            }
            children[from].push((to, values));
        }
        // Cycle check: the path enumeration below only terminates on DAGs.
        let mut state = vec![0u8; kinds.len()];
        fn dfs(
            n: usize,
            children: &[Vec<(usize, Vec<usize>)>],
            node_ids: &[usize],
            state: &mut [u8],
        ) -> Result<()> {
            state[n] = 1;
            for &(to, _) in &children[n] {
                match state[to] {
                    0 => dfs(to, children, node_ids, state)?,
                    1 => {
                        return Err(Error::load(format!(
                            "cycle through node {}",
                            node_ids[to]
                        )))
                    }
                    _ => {}
                }
            }
            state[n] = 2;
            Ok(())
        }
        dfs(root, &children, &node_ids, &mut state)?;
        if let Some(n) = state.iter().position(|&s| s == 0) {
            return Err(Error::load(format!(
                "node {} is unreachable from the root",
                node_ids[n]
            )));
        }

        // Enumerate every path, checking at each node that the outgoing
        // values exactly partition what the path still allows.
        let mut paths = Vec::new();
        let mut literals: Vec<Option<Vec<usize>>> = vec![None; meta.feature_count()];
        fn walk(
            n: usize,
            meta: &ClassifierMeta,
            kinds: &[DdNodeKind],
            node_ids: &[usize],
            children: &[Vec<(usize, Vec<usize>)>],
            literals: &mut Vec<Option<Vec<usize>>>,
            paths: &mut Vec<DgPath>,
        ) -> Result<()> {
            match kinds[n] {
                DdNodeKind::Leaf(class) => {
                    paths.push(DgPath {
                        literals: literals.clone(),
                        class,
                    });
                    Ok(())
                }
                DdNodeKind::Test(f) => {
                    let consistent: Vec<usize> = match &literals[f - 1] {
                        Some(set) => set.clone(),
                        None => (0..meta.domain_size(f)).collect(),
                    };
                    let mut covered = vec![false; meta.domain_size(f)];
                    for (_, values) in &children[n] {
                        for &v in values {
                            if !consistent.contains(&v) {
                                return Err(Error::load(format!(
                                    "node {} branches on value {} already excluded upstream",
                                    node_ids[n], v
                                )));
                            }
                            if std::mem::replace(&mut covered[v], true) {
                                return Err(Error::load(format!(
                                    "node {} branches on value {} twice",
                                    node_ids[n], v
                                )));
                            }
                        }
                    }
                    if let Some(missing) = consistent.iter().find(|&&v| !covered[v]) {
                        return Err(Error::load(format!(
                            "node {} never branches on consistent value {}",
                            node_ids[n], missing
                        )));
                    }
                    let saved = literals[f - 1].clone();
                    for (to, values) in &children[n] {
                        literals[f - 1] = Some(values.clone());
                        walk(*to, meta, kinds, node_ids, children, literals, paths)?;
                    }
                    literals[f - 1] = saved;
                    Ok(())
                }
            }
        }
        walk(
            root, &meta, &kinds, &node_ids, &children, &mut literals, &mut paths,
        )?;

        Ok(Dg {
            meta,
            root,
            kinds,
            children,
            paths,
        })
    }

    /// Reinterprets a decision tree as a graph, merging all leaves of one
    /// class into a single shared terminal.
    pub fn from_tree(tree: &DecisionTree) -> Dg {
        let meta = tree.meta().clone();
        let mut terminal_for_class: HashMap<usize, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut substitute: HashMap<usize, usize> = HashMap::new();
        for (id, kind) in tree.nodes() {
            match kind {
                TreeNodeKind::Test(f) => nodes.push((id, DdNodeKind::Test(f))),
                TreeNodeKind::Leaf(c) => {
                    let canonical = *terminal_for_class.entry(c).or_insert(id);
                    if canonical == id {
                        nodes.push((id, DdNodeKind::Leaf(c)));
                    }
                    substitute.insert(id, canonical);
                }
            }
        }
        let edges = tree
            .edges()
            .into_iter()
            .map(|(from, to, values)| DgEdgeSpec {
                from,
                to: *substitute.get(&to).unwrap_or(&to),
                values,
            })
            .collect();
        Dg::new(meta, tree.root_id(), nodes, edges)
            .expect("a valid tree is a valid graph after leaf merging")
    }

    pub fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }
}

impl Backend for Dg {
    fn meta(&self) -> &ClassifierMeta {
        &self.meta
    }

    fn classify(&self, values: &[usize]) -> usize {
        let mut n = self.root;
        loop {
            match self.kinds[n] {
                DdNodeKind::Leaf(c) => return c,
                DdNodeKind::Test(f) => {
                    n = self.children[n]
                        .iter()
                        .find(|(_, vals)| vals.contains(&values[f - 1]))
                        .expect("edge values cover the consistent set")
                        .0;
                }
            }
        }
    }

    fn count(&self, values: &[usize], fixed: &FeatureSet, class: usize) -> CountPair {
        let mut target = BigUint::zero();
        let mut total = BigUint::zero();
        for path in &self.paths {
            let n = count_consistent_with_literals(&self.meta, &path.literals, values, fixed);
            if path.class == class {
                target += &n;
            }
            total += n;
        }
        CountPair::new(target, total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle;
    use crate::synth;
    use crate::types::{Instance, Threshold};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_class_meta(domains: &[usize]) -> ClassifierMeta {
        ClassifierMeta::new(
            (1..=domains.len()).map(|i| format!("x{i}")).collect(),
            domains
                .iter()
                .map(|&d| (0..d).map(|k| format!("v{k}")).collect())
                .collect(),
            vec!["no".into(), "yes".into()],
        )
        .unwrap()
    }

    #[test]
    fn single_terminal_counts_the_whole_space() {
        let meta = two_class_meta(&[2, 3, 4]);
        let g = Omdd::new(meta, 1, vec![(1, DdNodeKind::Leaf(1))], vec![]).unwrap();
        let v = [0usize, 0, 0];
        let pair = g.count(&v, &FeatureSet::empty(), 1);
        assert_eq!(pair.target, BigUint::from(24u32));
        assert_eq!(pair.total, BigUint::from(24u32));
        assert_eq!(g.count(&v, &FeatureSet::empty(), 0).target, BigUint::zero());
    }

    #[test]
    fn demo_omdd_frozen_counts() {
        let g = fixtures::demo_omdd();
        // Class layout: value b of x1 jumps straight to yes; otherwise x2
        // decides (p or q yes, r no) and x3 is never read.
        let v = [0usize, 0, 0];
        let pair = g.count(&v, &FeatureSet::empty(), 1);
        assert_eq!(pair.target, BigUint::from(10u32));
        assert_eq!(pair.total, BigUint::from(12u32));
        let x2 = FeatureSet::new(3, [2]).unwrap();
        let pair = g.count(&[0, 2, 0], &x2, 1);
        assert_eq!(pair.target, BigUint::from(2u32));
        assert_eq!(pair.total, BigUint::from(4u32));
        let x1 = FeatureSet::new(3, [1]).unwrap();
        let pair = g.count(&[0, 0, 0], &x1, 1);
        assert_eq!(pair.target, BigUint::from(4u32));
        assert_eq!(pair.total, BigUint::from(6u32));
        // Full fixes agree with classification everywhere.
        let full = FeatureSet::full(3);
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..2 {
                    let point = [a, b, c];
                    let class = g.classify(&point);
                    let pair = g.count(&point, &full, class);
                    assert_eq!(pair.target, BigUint::one());
                    assert_eq!(pair.total, BigUint::one());
                }
            }
        }
    }

    #[test]
    fn demo_omdd_is_already_reduced() {
        assert!(fixtures::demo_omdd().reduction_warnings().is_empty());
    }

    #[test]
    fn reduction_warnings_flag_redundancy() {
        let meta = two_class_meta(&[2, 2]);
        // Node 2 sends both values to the same terminal; nodes 3 and 4 are
        // isomorphic terminals.
        let g = Omdd::new(
            meta,
            1,
            vec![
                (1, DdNodeKind::Test(1)),
                (2, DdNodeKind::Test(2)),
                (3, DdNodeKind::Leaf(1)),
                (4, DdNodeKind::Leaf(1)),
            ],
            vec![
                DdEdgeSpec { from: 1, to: 2, value: 0 },
                DdEdgeSpec { from: 1, to: 4, value: 1 },
                DdEdgeSpec { from: 2, to: 3, value: 0 },
                DdEdgeSpec { from: 2, to: 3, value: 1 },
            ],
        )
        .unwrap();
        let notes = g.reduction_warnings();
        assert_eq!(notes.len(), 2, "{notes:?}");
    }

    #[test]
    fn omdd_validation_rejects_structural_errors() {
        let meta = two_class_meta(&[2, 2]);
        let nodes = vec![
            (1, DdNodeKind::Test(2)),
            (2, DdNodeKind::Test(1)),
            (3, DdNodeKind::Leaf(0)),
        ];
        // Ordering violation: node 1 tests feature 2 but reaches feature 1.
        let edges = vec![
            DdEdgeSpec { from: 1, to: 2, value: 0 },
            DdEdgeSpec { from: 1, to: 3, value: 1 },
            DdEdgeSpec { from: 2, to: 3, value: 0 },
            DdEdgeSpec { from: 2, to: 3, value: 1 },
        ];
        assert!(matches!(
            Omdd::new(meta.clone(), 1, nodes, edges),
            Err(Error::Load(_))
        ));
        // Missing value coverage.
        let nodes = vec![(1, DdNodeKind::Test(1)), (2, DdNodeKind::Leaf(0))];
        let edges = vec![DdEdgeSpec { from: 1, to: 2, value: 0 }];
        assert!(matches!(
            Omdd::new(meta.clone(), 1, nodes, edges),
            Err(Error::Load(_))
        ));
        // Unreachable node.
        let nodes = vec![
            (1, DdNodeKind::Leaf(0)),
            (2, DdNodeKind::Leaf(1)),
        ];
        assert!(matches!(
            Omdd::new(meta, 1, nodes, vec![]),
            Err(Error::Load(_))
        ));
    }

    #[test]
    fn random_omdds_agree_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut queries = 0;
        while queries < 1000 {
            let m = rng.gen_range(2..=6);
            let domains: Vec<usize> = (0..m).map(|_| rng.gen_range(2..=3)).collect();
            let classes = rng.gen_range(2..=3);
            let g = synth::random_omdd(&mut rng, &domains, classes);
            for _ in 0..10 {
                let v: Vec<usize> = domains.iter().map(|&d| rng.gen_range(0..d)).collect();
                let members = (1..=m).filter(|_| rng.gen_bool(0.4));
                let fixed = FeatureSet::new(m, members).unwrap();
                let c = rng.gen_range(0..classes);
                let fast = g.count(&v, &fixed, c);
                let brute = oracle::brute_count(&g, &v, &fixed, c, 1 << 20).unwrap();
                assert_eq!(fast, brute);
                queries += 1;
            }
        }
    }

    #[test]
    fn class_counts_sum_to_the_free_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        for _ in 0..50 {
            let m = rng.gen_range(2..=6);
            let domains: Vec<usize> = (0..m).map(|_| rng.gen_range(2..=4)).collect();
            let classes = rng.gen_range(2..=3);
            let g = synth::random_omdd(&mut rng, &domains, classes);
            let v: Vec<usize> = domains.iter().map(|&d| rng.gen_range(0..d)).collect();
            let members = (1..=m).filter(|_| rng.gen_bool(0.4));
            let fixed = FeatureSet::new(m, members).unwrap();
            let mut sum = BigUint::zero();
            for c in 0..classes {
                sum += g.count(&v, &fixed, c).target;
            }
            assert_eq!(sum, g.meta().free_space_size(&fixed));
        }
    }

    #[test]
    fn conditioning_commutes_with_fixing() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        for _ in 0..50 {
            let m = rng.gen_range(2..=5);
            let domains: Vec<usize> = (0..m).map(|_| rng.gen_range(2..=3)).collect();
            let g = synth::random_omdd(&mut rng, &domains, 2);
            let v: Vec<usize> = domains.iter().map(|&d| rng.gen_range(0..d)).collect();
            let i = rng.gen_range(1..=m);
            let conditioned = g.condition(i, v[i - 1]);
            let members = (1..=m).filter(|&j| j != i && rng.gen_bool(0.4));
            let fixed = FeatureSet::new(m, members).unwrap();
            let with_i = fixed.with(i);
            for c in 0..2 {
                let direct = g.count_class(&v, &with_i, c);
                let via_condition = conditioned.count_class(&v, &fixed, c);
                assert_eq!(
                    via_condition,
                    direct * BigUint::from(domains[i - 1]),
                    "feature {i} of {m}"
                );
            }
        }
    }

    #[test]
    fn conjunction_obdd_counts() {
        let g = fixtures::conjunction_obdd();
        let v = [1usize, 1];
        let pair = g.count(&v, &FeatureSet::empty(), 1);
        assert_eq!(pair.target, BigUint::one());
        assert_eq!(pair.total, BigUint::from(4u32));
        let x1 = FeatureSet::new(2, [1]).unwrap();
        let pair = g.count(&v, &x1, 1);
        assert_eq!(pair.target, BigUint::one());
        assert_eq!(pair.total, BigUint::from(2u32));
        assert_eq!(g.classify(&[1, 1]), 1);
        assert_eq!(g.classify(&[1, 0]), 0);
    }

    #[test]
    fn obdd_requires_binary_shape() {
        let meta = two_class_meta(&[2, 3]);
        let g = Omdd::new(meta, 1, vec![(1, DdNodeKind::Leaf(0))], vec![]).unwrap();
        assert!(matches!(Obdd::new(g), Err(Error::Load(_))));
    }

    #[test]
    fn random_obdds_agree_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let mut queries = 0;
        while queries < 1000 {
            let g = synth::random_obdd(&mut rng, 8);
            for _ in 0..20 {
                let v: Vec<usize> = (0..8).map(|_| rng.gen_range(0..2)).collect();
                let members = (1..=8).filter(|_| rng.gen_bool(0.4));
                let fixed = FeatureSet::new(8, members).unwrap();
                let c = rng.gen_range(0..2);
                let fast = g.count(&v, &fixed, c);
                let brute = oracle::brute_count(&g, &v, &fixed, c, 1 << 20).unwrap();
                assert_eq!(fast, brute);
                queries += 1;
            }
        }
    }

    #[test]
    fn obdd_and_omdd_agree_on_binary_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        for _ in 0..20 {
            let g = synth::random_obdd(&mut rng, 6);
            let v: Vec<usize> = (0..6).map(|_| rng.gen_range(0..2)).collect();
            let members = (1..=6).filter(|_| rng.gen_bool(0.5));
            let fixed = FeatureSet::new(6, members).unwrap();
            for c in 0..2 {
                assert_eq!(
                    g.count(&v, &fixed, c),
                    g.as_omdd().count(&v, &fixed, c)
                );
            }
        }
    }

    #[test]
    fn tree_and_graph_forms_count_identically() {
        let tree = fixtures::demo_tree();
        let graph = Dg::from_tree(&tree);
        // Leaf merging shares terminals but preserves all five paths.
        assert_eq!(graph.path_count(), tree.paths().len());
        let v = fixtures::demo_tree_point();
        for bits in 0..8u32 {
            let members = (1..=3).filter(|i| bits & (1 << (i - 1)) != 0);
            let fixed = FeatureSet::new(3, members).unwrap();
            for class in 0..2 {
                assert_eq!(
                    tree.count(&v, &fixed, class),
                    graph.count(&v, &fixed, class),
                    "fixed {fixed} class {class}"
                );
            }
        }
    }

    #[test]
    fn random_graphs_agree_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        for _ in 0..40 {
            let m = rng.gen_range(2..=5);
            let domains: Vec<usize> = (0..m).map(|_| rng.gen_range(2..=3)).collect();
            let tree = synth::random_tree(&mut rng, &domains, 2, 4);
            let g = Dg::from_tree(&tree);
            let v: Vec<usize> = domains.iter().map(|&d| rng.gen_range(0..d)).collect();
            let members = (1..=m).filter(|_| rng.gen_bool(0.4));
            let fixed = FeatureSet::new(m, members).unwrap();
            for c in 0..2 {
                let fast = g.count(&v, &fixed, c);
                let brute = oracle::brute_count(&g, &v, &fixed, c, 1 << 20).unwrap();
                assert_eq!(fast, brute);
            }
        }
    }

    #[test]
    fn dg_validation_rejects_broken_graphs() {
        let meta = two_class_meta(&[2, 2]);
        // A cycle.
        let nodes = vec![(1, DdNodeKind::Test(1)), (2, DdNodeKind::Test(2))];
        let edges = vec![
            DgEdgeSpec { from: 1, to: 2, values: vec![0, 1] },
            DgEdgeSpec { from: 2, to: 1, values: vec![0, 1] },
        ];
        assert!(matches!(
            Dg::new(meta.clone(), 1, nodes, edges),
            Err(Error::Load(_))
        ));
        // An inconsistent retest: the right child of the root retests
        // feature 1 with a value the root already excluded.
        let nodes = vec![
            (1, DdNodeKind::Test(1)),
            (2, DdNodeKind::Test(1)),
            (3, DdNodeKind::Leaf(0)),
            (4, DdNodeKind::Leaf(1)),
        ];
        let edges = vec![
            DgEdgeSpec { from: 1, to: 3, values: vec![0] },
            DgEdgeSpec { from: 1, to: 2, values: vec![1] },
            DgEdgeSpec { from: 2, to: 3, values: vec![0] },
            DgEdgeSpec { from: 2, to: 4, values: vec![1] },
        ];
        assert!(matches!(
            Dg::new(meta, 1, nodes, edges),
            Err(Error::Load(_))
        ));
    }

    #[test]
    fn engine_runs_on_diagram_backends() {
        let g = fixtures::demo_omdd();
        let v = Instance::new(&g, vec![1, 2, 0]).unwrap();
        assert_eq!(v.class(), 1);
        let u = FeatureSet::full(3);
        // x1=b alone forces yes.
        let s = crate::engine::min_paxp(&g, &v, &u, &Threshold::one()).unwrap();
        assert_eq!(s.as_slice(), &[1]);
        let exhaustive =
            oracle::exhaustive_min_paxp(&g, &v, &u, &Threshold::one(), 1 << 20).unwrap();
        assert_eq!(s, exhaustive);
    }
}
