//! Small hand-built models shared by tests, docs, and the bundled example
//! files. Expected counts and explanations for these appear frozen in the
//! test suites; change nothing here without re-deriving those.

use crate::ddg::{DdEdgeSpec, DdNodeKind, Obdd, Omdd};
use crate::dtree::{DecisionTree, TreeEdgeSpec, TreeNodeKind};
use crate::nbc::NbcModel;
use crate::types::ClassifierMeta;

/// Three features (x1, x2 over {1,2,3,4}; x3 over {1,2}), classes neg/pos.
///
/// ```text
/// 1:x1 ──1──────▶ 2:x2 ──1──────▶ 4:neg
///   │               └─2,3,4────▶ 5:pos
///   └─2,3,4────▶ 3:x2 ──1──────▶ 6:pos
///                   └─2,3,4────▶ 7:x3 ──1──▶ 8:neg
///                                   └──2──▶ 9:pos
/// ```
///
/// For the point (4, 4, 2): precision(∅) = 21/32, precision({3}) = 15/16,
/// precision({1,3}) = 1.
pub fn demo_tree() -> DecisionTree {
    let meta = ClassifierMeta::new(
        vec!["x1".into(), "x2".into(), "x3".into()],
        vec![
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
            vec!["1".into(), "2".into()],
        ],
        vec!["neg".into(), "pos".into()],
    )
    .expect("demo metadata is well formed");
    let nodes = vec![
        (1, TreeNodeKind::Test(1)),
        (2, TreeNodeKind::Test(2)),
        (3, TreeNodeKind::Test(2)),
        (4, TreeNodeKind::Leaf(0)),
        (5, TreeNodeKind::Leaf(1)),
        (6, TreeNodeKind::Leaf(1)),
        (7, TreeNodeKind::Test(3)),
        (8, TreeNodeKind::Leaf(0)),
        (9, TreeNodeKind::Leaf(1)),
    ];
    let edge = |from, to, values: &[usize]| TreeEdgeSpec {
        from,
        to,
        values: values.to_vec(),
    };
    let edges = vec![
        edge(1, 2, &[0]),
        edge(1, 3, &[1, 2, 3]),
        edge(2, 4, &[0]),
        edge(2, 5, &[1, 2, 3]),
        edge(3, 6, &[0]),
        edge(3, 7, &[1, 2, 3]),
        edge(7, 8, &[0]),
        edge(7, 9, &[1]),
    ];
    DecisionTree::new(meta, 1, nodes, edges).expect("demo tree is well formed")
}

/// The instance used throughout the demo-tree examples: (4, 4, 2), class pos.
pub fn demo_tree_point() -> Vec<usize> {
    vec![3, 3, 1]
}

/// Five binary features (values t/f), equal priors, one-decimal
/// log-probabilities. Built so that for the point (t,f,f,f,t):
///
/// - the linear score is 6/5 and the per-feature slacks come out strictly
///   ordered as slack1 > slack5 > slack2 > slack4 > slack3,
/// - the greedy explanation is {1,2,5},
/// - fixing {1,5} keeps the class on 7 of 8 completions, {2,5} on 6 of 8,
///   {1} on 9 of 16.
pub fn demo_nbc() -> NbcModel {
    let meta = ClassifierMeta::new(
        (1..=5).map(|i| format!("f{i}")).collect(),
        vec![vec!["t".into(), "f".into()]; 5],
        vec!["neg".into(), "pos".into()],
    )
    .expect("demo metadata is well formed");
    NbcModel::from_log_strings(
        meta,
        ["-0.7", "-0.7"],
        [
            vec![
                vec!["-0.7", "-1.0"],
                vec!["-0.7", "-0.8"],
                vec!["-0.8", "-0.7"],
                vec!["-0.7", "-0.7"],
                vec!["-0.7", "-0.8"],
            ],
            vec![
                vec!["-0.3", "-1.4"],
                vec!["-1.1", "-0.6"],
                vec!["-0.8", "-0.6"],
                vec!["-1.0", "-0.5"],
                vec!["-0.4", "-1.2"],
            ],
        ],
    )
    .expect("demo model is well formed")
}

/// The instance used throughout the demo-NBC examples: (t,f,f,f,t), class pos.
pub fn demo_nbc_point() -> Vec<usize> {
    vec![0, 1, 1, 1, 0]
}

/// Four features over {1,2,3}; the positive class fires exactly when the
/// values sum to at least 8. In linear form the bias is -7 and every feature
/// has weights (1, 2, 3), so quantizing at zero decimals gives shifted
/// weights (3, 2, 1) and a strict right-hand side of 9. Of the 81 points, 50
/// are positive.
pub fn sum_threshold_nbc() -> NbcModel {
    let meta = ClassifierMeta::new(
        (1..=4).map(|i| format!("x{i}")).collect(),
        vec![vec!["1".into(), "2".into(), "3".into()]; 4],
        vec!["low".into(), "high".into()],
    )
    .expect("demo metadata is well formed");
    NbcModel::from_log_strings(
        meta,
        ["-0.5", "-7.5"],
        [
            vec![vec!["-5", "-5", "-5"]; 4],
            vec![vec!["-4", "-3", "-2"]; 4],
        ],
    )
    .expect("demo model is well formed")
}

/// Three features (x1 over {a,b}, x2 over {p,q,r}, x3 over {s,t}), classes
/// no/yes. x1 = b forces yes; otherwise x2 decides (p, q yes; r no) and x3 is
/// never read. The two edges from node 2 into the yes terminal are parallel,
/// and the edge 1 -> yes skips x2 and x3 entirely.
///
/// ```text
/// 1:x1 ──a──▶ 2:x2 ──p──▶ 3:yes
///   │           ├──q────▶ 3:yes
///   └──b──────▶ 3:yes
///               └──r────▶ 4:no
/// ```
///
/// Of the 12 points, 10 are yes; with x2 fixed to r, 2 of 4 are yes.
pub fn demo_omdd() -> Omdd {
    let meta = ClassifierMeta::new(
        vec!["x1".into(), "x2".into(), "x3".into()],
        vec![
            vec!["a".into(), "b".into()],
            vec!["p".into(), "q".into(), "r".into()],
            vec!["s".into(), "t".into()],
        ],
        vec!["no".into(), "yes".into()],
    )
    .expect("demo metadata is well formed");
    let nodes = vec![
        (1, DdNodeKind::Test(1)),
        (2, DdNodeKind::Test(2)),
        (3, DdNodeKind::Leaf(1)),
        (4, DdNodeKind::Leaf(0)),
    ];
    let edges = vec![
        DdEdgeSpec { from: 1, to: 2, value: 0 },
        DdEdgeSpec { from: 1, to: 3, value: 1 },
        DdEdgeSpec { from: 2, to: 3, value: 0 },
        DdEdgeSpec { from: 2, to: 3, value: 1 },
        DdEdgeSpec { from: 2, to: 4, value: 2 },
    ];
    Omdd::new(meta, 1, nodes, edges).expect("demo diagram is well formed")
}

/// The conjunction of two binary features, with a shared false terminal.
/// One point of four is true; fixing x1 = 1 leaves one of two.
pub fn conjunction_obdd() -> Obdd {
    let meta = ClassifierMeta::new(
        vec!["x1".into(), "x2".into()],
        vec![vec!["0".into(), "1".into()]; 2],
        vec!["false".into(), "true".into()],
    )
    .expect("demo metadata is well formed");
    let nodes = vec![
        (1, DdNodeKind::Test(1)),
        (2, DdNodeKind::Test(2)),
        (3, DdNodeKind::Leaf(1)),
        (4, DdNodeKind::Leaf(0)),
    ];
    let edges = vec![
        DdEdgeSpec { from: 1, to: 4, value: 0 },
        DdEdgeSpec { from: 1, to: 2, value: 1 },
        DdEdgeSpec { from: 2, to: 4, value: 0 },
        DdEdgeSpec { from: 2, to: 3, value: 1 },
    ];
    Obdd::new(Omdd::new(meta, 1, nodes, edges).expect("demo diagram is well formed"))
        .expect("demo diagram is binary")
}
