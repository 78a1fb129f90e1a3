//! Model and instance files. One structured-text container holds every
//! model family; features, domain values, and classes appear by name and
//! resolve against the declared domain table at load. Circuit files in the
//! compiler's own text format load directly, recognized by their header.

use crate::ddg::{DdEdgeSpec, DdNodeKind, Obdd, Omdd};
use crate::ddnnf::{parse_nnf, CircuitClassifier};
use crate::dtree::{DecisionTree, TreeEdgeSpec, TreeNodeKind};
use crate::nbc::NbcModel;
use crate::types::{Backend, ClassifierMeta, Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub version: u32,
    /// Feature name and its ordered domain values.
    pub features: Vec<(String, Vec<String>)>,
    pub classes: Vec<String>,
    pub model: ModelBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelBody {
    #[serde(rename = "dt")]
    Dt(GraphBody<Vec<String>>),
    #[serde(rename = "nbc")]
    Nbc(NbcBody),
    #[serde(rename = "omdd")]
    Omdd(GraphBody<String>),
    #[serde(rename = "obdd")]
    Obdd(GraphBody<String>),
    #[serde(rename = "ddnnf")]
    Ddnnf(CircuitBody),
}

/// Shared node/edge layout for trees and diagrams; `E` is the edge label
/// (a value list for trees, a single value for diagrams).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBody<E> {
    pub root: usize,
    pub nodes: Vec<(usize, NodeDecl)>,
    pub edges: Vec<(usize, usize, E)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeDecl {
    #[serde(rename = "test")]
    Test(String),
    #[serde(rename = "leaf")]
    Leaf(String),
}

/// Log-probabilities as decimal strings, never floats: quantization must
/// see the digits the file shows. Outer index class, then feature, then
/// value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbcBody {
    pub log_priors: Vec<String>,
    pub log_conditionals: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitBody {
    /// The circuit in the compiler text format, inline.
    pub nnf: String,
}

/// A fully validated model of any family.
pub enum LoadedModel {
    Tree(DecisionTree),
    Nbc(NbcModel),
    Omdd(Omdd),
    Obdd(Obdd),
    Circuit(CircuitClassifier),
}

impl LoadedModel {
    pub fn family(&self) -> &'static str {
        match self {
            LoadedModel::Tree(_) => "dt",
            LoadedModel::Nbc(_) => "nbc",
            LoadedModel::Omdd(_) => "omdd",
            LoadedModel::Obdd(_) => "obdd",
            LoadedModel::Circuit(_) => "ddnnf",
        }
    }

    pub fn meta(&self) -> &ClassifierMeta {
        match self {
            LoadedModel::Tree(t) => t.meta(),
            LoadedModel::Nbc(n) => n.meta(),
            LoadedModel::Omdd(g) => g.meta(),
            LoadedModel::Obdd(b) => Backend::meta(b),
            LoadedModel::Circuit(c) => Backend::meta(c),
        }
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::load(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match e {
        Error::Load(msg) => Error::load(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses either format: a raw circuit file (recognized by its `nnf`
/// header) or the structured container.
pub fn parse_model(text: &str) -> Result<LoadedModel> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('c'));
    match first {
        None => Err(Error::load("empty model file")),
        Some(l) if l.starts_with("nnf") => {
            Ok(LoadedModel::Circuit(CircuitClassifier::from_circuit(
                parse_nnf(text)?,
            )))
        }
        Some(_) => model_from_doc(&parse_doc(text)?),
    }
}

pub fn parse_doc(text: &str) -> Result<ModelDoc> {
    ron::from_str(text).map_err(|e| {
        Error::load(format!(
            "line {}, column {}: {}",
            e.position.line, e.position.col, e.code
        ))
    })
}

pub fn doc_to_string(doc: &ModelDoc) -> Result<String> {
    ron::ser::to_string_pretty(doc, ron::ser::PrettyConfig::new())
        .map_err(|e| Error::input(format!("cannot serialize model: {e}")))
}

pub fn model_from_doc(doc: &ModelDoc) -> Result<LoadedModel> {
    if doc.version != FORMAT_VERSION {
        return Err(Error::load(format!(
            "format version {} not supported (this build reads {FORMAT_VERSION})",
            doc.version
        )));
    }
    let (names, domains): (Vec<String>, Vec<Vec<String>>) = doc.features.iter().cloned().unzip();
    let meta = ClassifierMeta::new(names, domains, doc.classes.clone())?;
    match &doc.model {
        ModelBody::Dt(body) => {
            let nodes = resolve_nodes(&meta, &body.nodes)?;
            let features = test_features(&nodes);
            let edges = body
                .edges
                .iter()
                .map(|(from, to, values)| {
                    let feature = edge_feature(&features, *from)?;
                    let values = values
                        .iter()
                        .map(|s| resolve_value(&meta, feature, s))
                        .collect::<Result<_>>()?;
                    Ok(TreeEdgeSpec {
                        from: *from,
                        to: *to,
                        values,
                    })
                })
                .collect::<Result<_>>()?;
            let nodes = nodes
                .into_iter()
                .map(|(id, kind)| {
                    (
                        id,
                        match kind {
                            DdNodeKind::Test(f) => TreeNodeKind::Test(f),
                            DdNodeKind::Leaf(c) => TreeNodeKind::Leaf(c),
                        },
                    )
                })
                .collect();
            Ok(LoadedModel::Tree(DecisionTree::new(
                meta, body.root, nodes, edges,
            )?))
        }
        ModelBody::Nbc(body) => Ok(LoadedModel::Nbc(resolve_nbc(meta, body)?)),
        ModelBody::Omdd(body) => Ok(LoadedModel::Omdd(resolve_diagram(meta, body)?)),
        ModelBody::Obdd(body) => Ok(LoadedModel::Obdd(Obdd::new(resolve_diagram(meta, body)?)?)),
        ModelBody::Ddnnf(body) => Ok(LoadedModel::Circuit(CircuitClassifier::new(
            meta,
            parse_nnf(&body.nnf)?,
        )?)),
    }
}

fn resolve_nodes(
    meta: &ClassifierMeta,
    nodes: &[(usize, NodeDecl)],
) -> Result<Vec<(usize, DdNodeKind)>> {
    nodes
        .iter()
        .map(|(id, decl)| {
            let kind = match decl {
                NodeDecl::Test(name) => DdNodeKind::Test(
                    meta.feature_index(name)
                        .ok_or_else(|| Error::load(format!("node {id}: unknown feature {name:?}")))?,
                ),
                NodeDecl::Leaf(name) => DdNodeKind::Leaf(
                    meta.class_index(name)
                        .ok_or_else(|| Error::load(format!("node {id}: unknown class {name:?}")))?,
                ),
            };
            Ok((*id, kind))
        })
        .collect()
}

fn test_features(nodes: &[(usize, DdNodeKind)]) -> Vec<(usize, usize)> {
    nodes
        .iter()
        .filter_map(|&(id, kind)| match kind {
            DdNodeKind::Test(f) => Some((id, f)),
            DdNodeKind::Leaf(_) => None,
        })
        .collect()
}

fn edge_feature(features: &[(usize, usize)], from: usize) -> Result<usize> {
    features
        .iter()
        .find(|&&(id, _)| id == from)
        .map(|&(_, f)| f)
        .ok_or_else(|| Error::load(format!("edge leaves node {from}, which tests nothing")))
}

fn resolve_value(meta: &ClassifierMeta, feature: usize, name: &str) -> Result<usize> {
    meta.value_index(feature, name).ok_or_else(|| {
        Error::load(format!(
            "value {name:?} is not in feature {}'s domain",
            meta.feature_name(feature)
        ))
    })
}

fn resolve_nbc(meta: ClassifierMeta, body: &NbcBody) -> Result<NbcModel> {
    let [p0, p1] = body.log_priors.as_slice() else {
        return Err(Error::load(format!(
            "expected one log-prior per class (2), found {}",
            body.log_priors.len()
        )));
    };
    let [c0, c1] = body.log_conditionals.as_slice() else {
        return Err(Error::load(format!(
            "expected one conditional table per class (2), found {}",
            body.log_conditionals.len()
        )));
    };
    fn as_refs(t: &[Vec<String>]) -> Vec<Vec<&str>> {
        t.iter()
            .map(|row| row.iter().map(String::as_str).collect())
            .collect()
    }
    NbcModel::from_log_strings(meta, [p0, p1], [as_refs(c0), as_refs(c1)])
}

fn resolve_diagram(meta: ClassifierMeta, body: &GraphBody<String>) -> Result<Omdd> {
    let nodes = resolve_nodes(&meta, &body.nodes)?;
    let features = test_features(&nodes);
    let edges = body
        .edges
        .iter()
        .map(|(from, to, value)| {
            let feature = edge_feature(&features, *from)?;
            Ok(DdEdgeSpec {
                from: *from,
                to: *to,
                value: resolve_value(&meta, feature, value)?,
            })
        })
        .collect::<Result<_>>()?;
    Omdd::new(meta, body.root, nodes, edges)
}

/// One validated instance row: resolved value indices plus the optional
/// declared class from a trailing label column.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRow {
    pub values: Vec<usize>,
    pub declared_class: Option<usize>,
}

pub fn load_instances(path: impl AsRef<Path>, meta: &ClassifierMeta) -> Result<Vec<InstanceRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    parse_instances(&text, meta)
}

/// Comma-separated rows under a header of the feature names in order,
/// optionally followed by a `class` column. Values match domain strings
/// exactly.
pub fn parse_instances(text: &str, meta: &ClassifierMeta) -> Result<Vec<InstanceRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::input(format!("instance header: {e}")))?
        .clone();
    let m = meta.feature_count();
    let names = meta.feature_names();
    let labeled = match headers.len() {
        n if n == m => false,
        n if n == m + 1 && &headers[m] == "class" => true,
        _ => {
            return Err(Error::input(format!(
                "expected columns {:?} with an optional trailing \"class\", found {:?}",
                names,
                headers.iter().collect::<Vec<_>>()
            )))
        }
    };
    for (i, name) in names.iter().enumerate() {
        if &headers[i] != name {
            return Err(Error::input(format!(
                "column {} is {:?}, expected feature {name:?}",
                i + 1,
                &headers[i]
            )));
        }
    }
    let mut rows = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record.map_err(|e| Error::input(format!("row {row}: {e}")))?;
        let expected = if labeled { m + 1 } else { m };
        if record.len() != expected {
            return Err(Error::input(format!(
                "row {row}: {} fields, expected {expected}",
                record.len()
            )));
        }
        let values = (1..=m)
            .map(|i| {
                meta.value_index(i, &record[i - 1]).ok_or_else(|| {
                    Error::input(format!(
                        "row {row}: value {:?} is not in feature {}'s domain",
                        &record[i - 1],
                        meta.feature_name(i)
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let declared_class = if labeled {
            Some(meta.class_index(&record[m]).ok_or_else(|| {
                Error::input(format!(
                    "row {row}: unknown class {:?}",
                    &record[m]
                ))
            })?)
        } else {
            None
        };
        rows.push(InstanceRow {
            values,
            declared_class,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::types::FeatureSet;
    use num::BigUint;
    use num::One;

    fn demo_tree_doc() -> ModelDoc {
        let quads = |name: &str| {
            (
                name.to_string(),
                vec!["1".into(), "2".into(), "3".into(), "4".into()],
            )
        };
        ModelDoc {
            version: 1,
            features: vec![
                quads("x1"),
                quads("x2"),
                ("x3".into(), vec!["1".into(), "2".into()]),
            ],
            classes: vec!["neg".into(), "pos".into()],
            model: ModelBody::Dt(GraphBody {
                root: 1,
                nodes: vec![
                    (1, NodeDecl::Test("x1".into())),
                    (2, NodeDecl::Test("x2".into())),
                    (3, NodeDecl::Test("x2".into())),
                    (4, NodeDecl::Leaf("neg".into())),
                    (5, NodeDecl::Leaf("pos".into())),
                    (6, NodeDecl::Leaf("pos".into())),
                    (7, NodeDecl::Test("x3".into())),
                    (8, NodeDecl::Leaf("neg".into())),
                    (9, NodeDecl::Leaf("pos".into())),
                ],
                edges: vec![
                    (1, 2, vec!["1".into()]),
                    (1, 3, vec!["2".into(), "3".into(), "4".into()]),
                    (2, 4, vec!["1".into()]),
                    (2, 5, vec!["2".into(), "3".into(), "4".into()]),
                    (3, 6, vec!["1".into()]),
                    (3, 7, vec!["2".into(), "3".into(), "4".into()]),
                    (7, 8, vec!["1".into()]),
                    (7, 9, vec!["2".into()]),
                ],
            }),
        }
    }

    #[test]
    fn tree_docs_load_to_the_demo_tree() {
        let doc = demo_tree_doc();
        let LoadedModel::Tree(tree) = model_from_doc(&doc).unwrap() else {
            panic!("wrong family");
        };
        assert_eq!(tree.paths().len(), 5);
        let reference = fixtures::demo_tree();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..2 {
                    let point = [a, b, c];
                    assert_eq!(tree.classify(&point), reference.classify(&point));
                }
            }
        }
        let v = fixtures::demo_tree_point();
        let x3 = FeatureSet::new(3, [3]).unwrap();
        let pair = tree.count(&v, &x3, 1);
        assert_eq!(pair.target, BigUint::from(15u32));
        assert_eq!(pair.total, BigUint::from(16u32));
    }

    #[test]
    fn docs_round_trip_through_text() {
        let doc = demo_tree_doc();
        let text = doc_to_string(&doc).unwrap();
        assert_eq!(parse_doc(&text).unwrap(), doc);

        let nbc_doc = ModelDoc {
            version: 1,
            features: (1..=2)
                .map(|i| (format!("f{i}"), vec!["t".into(), "f".into()]))
                .collect(),
            classes: vec!["neg".into(), "pos".into()],
            model: ModelBody::Nbc(NbcBody {
                log_priors: vec!["-0.7".into(), "-0.7".into()],
                log_conditionals: vec![
                    vec![
                        vec!["-0.7".into(), "-1.0".into()],
                        vec!["-0.7".into(), "-0.8".into()],
                    ],
                    vec![
                        vec!["-0.3".into(), "-1.4".into()],
                        vec!["-1.1".into(), "-0.6".into()],
                    ],
                ],
            }),
        };
        let text = doc_to_string(&nbc_doc).unwrap();
        assert_eq!(parse_doc(&text).unwrap(), nbc_doc);
        assert!(matches!(
            parse_model(&text).unwrap(),
            LoadedModel::Nbc(_)
        ));
    }

    #[test]
    fn diagram_docs_load_and_count() {
        let doc = ModelDoc {
            version: 1,
            features: vec![
                ("x1".into(), vec!["a".into(), "b".into()]),
                ("x2".into(), vec!["p".into(), "q".into(), "r".into()]),
                ("x3".into(), vec!["s".into(), "t".into()]),
            ],
            classes: vec!["no".into(), "yes".into()],
            model: ModelBody::Omdd(GraphBody {
                root: 1,
                nodes: vec![
                    (1, NodeDecl::Test("x1".into())),
                    (2, NodeDecl::Test("x2".into())),
                    (3, NodeDecl::Leaf("yes".into())),
                    (4, NodeDecl::Leaf("no".into())),
                ],
                edges: vec![
                    (1, 2, "a".into()),
                    (1, 3, "b".into()),
                    (2, 3, "p".into()),
                    (2, 3, "q".into()),
                    (2, 4, "r".into()),
                ],
            }),
        };
        let text = doc_to_string(&doc).unwrap();
        assert_eq!(parse_doc(&text).unwrap(), doc);
        let LoadedModel::Omdd(g) = parse_model(&text).unwrap() else {
            panic!("wrong family");
        };
        let pair = g.count(&[0, 0, 0], &FeatureSet::empty(), 1);
        assert_eq!(pair.target, BigUint::from(10u32));
        assert_eq!(pair.total, BigUint::from(12u32));
    }

    #[test]
    fn raw_circuit_files_are_recognized() {
        let text = "c two-input conjunction\nnnf 3 2 2\nL 1\nL 2\nA 2 0 1\n";
        let LoadedModel::Circuit(k) = parse_model(text).unwrap() else {
            panic!("wrong family");
        };
        assert_eq!(k.circuit().model_count(), BigUint::one());
        assert_eq!(k.meta().feature_count(), 2);
    }

    #[test]
    fn circuit_bodies_take_named_features() {
        let doc = ModelDoc {
            version: 1,
            features: vec![
                ("alarm".into(), vec!["0".into(), "1".into()]),
                ("motion".into(), vec!["0".into(), "1".into()]),
            ],
            classes: vec!["quiet".into(), "alert".into()],
            model: ModelBody::Ddnnf(CircuitBody {
                nnf: "nnf 3 2 2\nL 1\nL 2\nA 2 0 1\n".into(),
            }),
        };
        let text = doc_to_string(&doc).unwrap();
        assert_eq!(parse_doc(&text).unwrap(), doc);
        let LoadedModel::Circuit(k) = parse_model(&text).unwrap() else {
            panic!("wrong family");
        };
        assert_eq!(k.meta().feature_name(1), "alarm");
        assert_eq!(k.classify(&[1, 1]), 1);
    }

    #[test]
    fn load_errors_identify_the_problem() {
        assert!(matches!(parse_model(""), Err(Error::Load(_))));
        // Syntax errors come with a position.
        let Err(Error::Load(msg)) = parse_model("(version: 1,") else {
            panic!("expected a load error");
        };
        assert!(msg.contains("line 1"), "{msg}");
        // Unknown names are called out.
        let mut doc = demo_tree_doc();
        doc.model = match doc.model {
            ModelBody::Dt(mut body) => {
                body.nodes[0] = (1, NodeDecl::Test("x9".into()));
                ModelBody::Dt(body)
            }
            _ => unreachable!(),
        };
        let Err(Error::Load(msg)) = model_from_doc(&doc) else {
            panic!("expected a load error");
        };
        assert!(msg.contains("x9"), "{msg}");
        // Wrong version.
        let mut doc = demo_tree_doc();
        doc.version = 2;
        assert!(matches!(model_from_doc(&doc), Err(Error::Load(_))));
    }

    #[test]
    fn instance_rows_resolve_by_exact_match() {
        let meta = fixtures::demo_tree().meta().clone();
        let rows = parse_instances("x1,x2,x3\n4,4,2\n", &meta).unwrap();
        assert_eq!(
            rows,
            vec![InstanceRow {
                values: vec![3, 3, 1],
                declared_class: None
            }]
        );
        let rows = parse_instances("x1,x2,x3,class\n4,4,2,pos\n1,1,1,neg\n", &meta).unwrap();
        assert_eq!(rows[0].declared_class, Some(1));
        assert_eq!(rows[1].values, vec![0, 0, 0]);
        assert_eq!(rows[1].declared_class, Some(0));
        assert!(parse_instances("x1,x2,x3\n", &meta).unwrap().is_empty());
    }

    #[test]
    fn instance_errors_name_row_and_value() {
        let meta = fixtures::demo_tree().meta().clone();
        let Err(Error::Input(msg)) = parse_instances("x1,x2,x3\n4,4,2\n4,5,2\n", &meta) else {
            panic!("expected an input error");
        };
        assert!(msg.contains("row 2") && msg.contains("\"5\""), "{msg}");
        let Err(Error::Input(msg)) = parse_instances("x1,x2,x3\n4,4\n", &meta) else {
            panic!("expected an input error");
        };
        assert!(msg.contains("row 1"), "{msg}");
        assert!(parse_instances("x1,x3,x2\n", &meta).is_err());
        assert!(parse_instances("x1,x2,x3,weight\n", &meta).is_err());
    }

    #[test]
    fn shipped_examples_load_and_classify_their_instances() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples");
        let cases = [
            ("dt.ron", "dt-instances.csv", "dt"),
            ("nbc.ron", "nbc-instances.csv", "nbc"),
            ("xlc-knapsack.ron", "knapsack-instances.csv", "nbc"),
            ("omdd.ron", "omdd-instances.csv", "omdd"),
            ("obdd.ron", "obdd-instances.csv", "obdd"),
            ("ddnnf.ron", "ddnnf-instances.csv", "ddnnf"),
            ("and2.nnf", "and2-instances.csv", "ddnnf"),
        ];
        for (model_file, instance_file, family) in cases {
            let model = load_model(dir.join(model_file)).expect(model_file);
            assert_eq!(model.family(), family, "{model_file}");
            let rows = load_instances(dir.join(instance_file), model.meta()).expect(instance_file);
            assert!(!rows.is_empty(), "{instance_file}");
        }
        let LoadedModel::Tree(tree) = load_model(dir.join("dt.ron")).unwrap() else {
            panic!("dt.ron is a tree");
        };
        assert_eq!(tree.paths().len(), fixtures::demo_tree().paths().len());
    }
}
