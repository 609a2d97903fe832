//! JSON documents and DOT renderings.
//!
//! Every document carries `"version": 1`; unknown fields are rejected and
//! schema errors name the offending JSON pointer. Graph semantics (bipartite,
//! tree, degree sums) are checked separately by `graph::validate`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{DomainPoint, MarkedPoint, ParamMap};
use crate::graph::{canonical_key, DecoratedGraph, Edge, Label, Leg, Marking, Vertex, VertexId};
use crate::poly::{BinaryForm, Poly};
use crate::poset::{describe, Poset};

pub const SCHEMA_VERSION: u32 = 1;

fn default_version() -> u32 {
    SCHEMA_VERSION
}

fn check_version(version: u32) -> Result<()> {
    if version == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Schema {
            pointer: "/version".into(),
            message: format!("unsupported version {version}, expected {SCHEMA_VERSION}"),
        })
    }
}

/// Parses any JSON document, reporting failures with a JSON pointer.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let mut pointer = String::new();
        for seg in err.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => write!(pointer, "/{index}").unwrap(),
                Segment::Map { key } => {
                    write!(pointer, "/{}", key.replace('~', "~0").replace('/', "~1")).unwrap()
                }
                Segment::Enum { .. } | Segment::Unknown => {}
            }
        }
        Error::Schema {
            pointer: if pointer.is_empty() { "/".into() } else { pointer },
            message: err.into_inner().to_string(),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum LabelTag {
    P,
    H,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: VertexId,
    label: LabelTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    p: VertexId,
    h: VertexId,
    degree: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LegDoc {
    marking: Marking,
    vertex: VertexId,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    #[serde(default = "default_version")]
    version: u32,
    n: u32,
    d: u32,
    vertices: Vec<VertexDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    legs: Vec<LegDoc>,
}

impl From<&DecoratedGraph> for GraphDoc {
    fn from(g: &DecoratedGraph) -> Self {
        GraphDoc {
            version: SCHEMA_VERSION,
            n: g.n(),
            d: g.d(),
            vertices: g
                .vertices()
                .iter()
                .map(|v| match v.label {
                    Label::P => VertexDoc {
                        id: v.id,
                        label: LabelTag::P,
                        degree: None,
                    },
                    Label::H { degree } => VertexDoc {
                        id: v.id,
                        label: LabelTag::H,
                        degree: Some(degree),
                    },
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeDoc {
                    p: e.p,
                    h: e.h,
                    degree: e.degree,
                })
                .collect(),
            legs: g
                .legs()
                .iter()
                .map(|l| LegDoc {
                    marking: l.marking,
                    vertex: l.vertex,
                })
                .collect(),
        }
    }
}

impl GraphDoc {
    fn into_graph(self) -> Result<DecoratedGraph> {
        check_version(self.version)?;
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for (i, v) in self.vertices.into_iter().enumerate() {
            let label = match (v.label, v.degree) {
                (LabelTag::P, None) => Label::P,
                (LabelTag::H, degree) => Label::H {
                    degree: degree.unwrap_or(0),
                },
                (LabelTag::P, Some(_)) => {
                    return Err(Error::Schema {
                        pointer: format!("/vertices/{i}/degree"),
                        message: "a P-vertex has no degree".into(),
                    })
                }
            };
            vertices.push(Vertex { id: v.id, label });
        }
        let edges = self
            .edges
            .into_iter()
            .map(|e| Edge {
                p: e.p,
                h: e.h,
                degree: e.degree,
            })
            .collect();
        let legs = self
            .legs
            .into_iter()
            .map(|l| Leg {
                marking: l.marking,
                vertex: l.vertex,
            })
            .collect();
        Ok(DecoratedGraph::new(self.n, self.d, vertices, edges, legs))
    }
}

pub fn graph_to_json(g: &DecoratedGraph) -> serde_json::Value {
    serde_json::to_value(GraphDoc::from(g)).expect("graph document serializes")
}

/// Parses a graph document. The result is not validated.
pub fn graph_from_json(text: &str) -> Result<DecoratedGraph> {
    from_json_str::<GraphDoc>(text)?.into_graph()
}

pub fn graph_from_value(value: &serde_json::Value) -> Result<DecoratedGraph> {
    graph_from_json(&value.to_string())
}

/// `{"poly": [b0, b2, ...]}`.
pub fn poly_to_json(p: &crate::cohomology::PoincarePoly) -> serde_json::Value {
    serde_json::json!({ "poly": p })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDoc {
    poly: crate::cohomology::PoincarePoly,
}

pub fn poly_from_json(text: &str) -> Result<crate::cohomology::PoincarePoly> {
    Ok(from_json_str::<PolyDoc>(text)?.poly)
}

/// A move list as a JSON array.
pub fn moves_to_json(steps: &[crate::poset::MoveStep]) -> serde_json::Value {
    serde_json::to_value(steps).expect("moves serialize")
}

pub fn moves_from_json(text: &str) -> Result<Vec<crate::poset::MoveStep>> {
    from_json_str(text)
}

/// A rational written as an integer or as the string `"p/q"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RationalDoc {
    Int(i64),
    Text(String),
}

impl RationalDoc {
    fn parse(&self, pointer: &str) -> Result<BigRational> {
        match self {
            RationalDoc::Int(i) => Ok(BigRational::from_integer((*i).into())),
            RationalDoc::Text(s) => s.trim().parse().map_err(|_| Error::Schema {
                pointer: pointer.into(),
                message: format!("{s:?} is not a rational number"),
            }),
        }
    }

    fn from_rational(q: &BigRational) -> Self {
        RationalDoc::Text(q.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MarkedDoc {
    /// `point` is `[z, w]`.
    Rational { marking: Marking, point: [RationalDoc; 2] },
    /// `factor` lists affine coefficients, constant term first.
    Conjugate { markings: Vec<Marking>, factor: Vec<RationalDoc> },
}

/// A parametrised map: `forms[k][i]` multiplies `z^i w^{d−i}` in `f^k`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamMapDoc {
    #[serde(default = "default_version")]
    version: u32,
    forms: Vec<Vec<RationalDoc>>,
    #[serde(default)]
    marked: Vec<MarkedDoc>,
}

fn rationals(list: &[RationalDoc], pointer: &str) -> Result<Vec<BigRational>> {
    list.iter()
        .enumerate()
        .map(|(i, c)| c.parse(&format!("{pointer}/{i}")))
        .collect()
}

pub fn param_map_from_json(text: &str) -> Result<ParamMap> {
    let doc: ParamMapDoc = from_json_str(text)?;
    check_version(doc.version)?;
    let forms = doc
        .forms
        .iter()
        .enumerate()
        .map(|(k, f)| Ok(BinaryForm::new(rationals(f, &format!("/forms/{k}"))?)))
        .collect::<Result<Vec<_>>>()?;
    let marked = doc
        .marked
        .iter()
        .enumerate()
        .map(|(i, m)| {
            Ok(match m {
                MarkedDoc::Rational { marking, point } => {
                    let pointer = format!("/marked/{i}/point");
                    let coords = rationals(point, &pointer)?;
                    MarkedPoint::Rational {
                        marking: *marking,
                        point: DomainPoint {
                            z: coords[0].clone(),
                            w: coords[1].clone(),
                        },
                    }
                }
                MarkedDoc::Conjugate { markings, factor } => MarkedPoint::Conjugate {
                    markings: markings.clone(),
                    factor: Poly::new(rationals(factor, &format!("/marked/{i}/factor"))?),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParamMap { forms, marked })
}

pub fn param_map_to_json(pm: &ParamMap) -> serde_json::Value {
    let form_coeffs = |f: &BinaryForm| -> Vec<RationalDoc> {
        (0..=f.degree() as usize)
            .map(|i| {
                let c = f.affine().coeffs().get(i).cloned().unwrap_or_default();
                RationalDoc::from_rational(&c)
            })
            .collect()
    };
    let doc = ParamMapDoc {
        version: SCHEMA_VERSION,
        forms: pm.forms.iter().map(form_coeffs).collect(),
        marked: pm
            .marked
            .iter()
            .map(|m| match m {
                MarkedPoint::Rational { marking, point } => MarkedDoc::Rational {
                    marking: *marking,
                    point: [RationalDoc::from_rational(&point.z), RationalDoc::from_rational(&point.w)],
                },
                MarkedPoint::Conjugate { markings, factor } => MarkedDoc::Conjugate {
                    markings: markings.clone(),
                    factor: factor.coeffs().iter().map(RationalDoc::from_rational).collect(),
                },
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("map document serializes")
}

/// Graphviz rendering: boxes for `P`, ellipses for `H`, plaintext legs.
pub fn graph_to_dot(g: &DecoratedGraph) -> String {
    let mut out = String::from("graph G {\n");
    for v in g.vertices() {
        let (shape, text) = match v.label {
            Label::P => ("box", format!("P{}", v.id)),
            Label::H { degree } => ("ellipse", format!("H{} d={degree}", v.id)),
        };
        writeln!(out, "  v{} [shape={shape}, label=\"{text}\"];", v.id).unwrap();
    }
    for e in g.edges() {
        writeln!(out, "  v{} -- v{} [label=\"{}\"];", e.p, e.h, e.degree).unwrap();
    }
    for l in g.legs() {
        writeln!(out, "  x{} [shape=plaintext, label=\"x{}\"];", l.marking, l.marking).unwrap();
        writeln!(out, "  v{} -- x{};", l.vertex, l.marking).unwrap();
    }
    out.push_str("}\n");
    out
}

/// Hasse diagram of the surgery order on `graphs`, higher cells on top.
pub fn hasse_dot(poset: &Poset, graphs: &[DecoratedGraph]) -> Result<String> {
    let index: BTreeMap<_, usize> = graphs.iter().enumerate().map(|(i, g)| (canonical_key(g), i)).collect();
    let mut below: Vec<BTreeSet<usize>> = Vec::with_capacity(graphs.len());
    let mut direct: Vec<BTreeSet<usize>> = Vec::with_capacity(graphs.len());
    for g in graphs {
        below.push(
            poset
                .descendants(g)?
                .iter()
                .filter_map(|k| index.get(k).copied())
                .collect(),
        );
        direct.push(
            poset
                .successors(g)?
                .iter()
                .filter_map(|s| index.get(&s.key).copied())
                .collect(),
        );
    }
    let mut out = String::from("digraph Hasse {\n  rankdir=TB;\n");
    for (i, g) in graphs.iter().enumerate() {
        writeln!(out, "  g{i} [shape=box, label=\"{}\"];", describe(g)).unwrap();
    }
    for (i, succ) in direct.iter().enumerate() {
        for &j in succ {
            // Keep only covering pairs.
            let covered = succ.iter().any(|&k| k != j && below[k].contains(&j));
            if !covered {
                writeln!(out, "  g{i} -> g{j};").unwrap();
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{enumerate_graphs, maximal_graph};
    use crate::graph::validate;

    #[test]
    fn graph_round_trip() {
        let g = maximal_graph(2, 3);
        let text = graph_to_json(&g).to_string();
        let back = graph_from_json(&text).unwrap();
        assert_eq!(canonical_key(&back), canonical_key(&g));
        assert_eq!(back, g);
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let text = r#"{"n":0,"d":1,"vertices":[{"id":0,"label":"P"},{"id":1,"label":"H","degree":0}],
                       "edges":[{"p":0,"h":1,"degree":"x"}]}"#;
        match graph_from_json(text).unwrap_err() {
            Error::Schema { pointer, .. } => assert_eq!(pointer, "/edges/0/degree"),
            other => panic!("{other}"),
        }
        let extra = r#"{"n":0,"d":1,"vertices":[],"colour":1}"#;
        assert_eq!(graph_from_json(extra).unwrap_err().kind(), "schema");
        let version = r#"{"version":2,"n":0,"d":1,"vertices":[]}"#;
        assert_eq!(graph_from_json(version).unwrap_err().kind(), "schema");
    }

    #[test]
    fn bipartite_violation_is_semantic() {
        let text = r#"{"n":0,"d":1,"vertices":[{"id":0,"label":"P"},{"id":1,"label":"P"}],
                       "edges":[{"p":0,"h":1,"degree":1}]}"#;
        let g = graph_from_json(text).unwrap();
        let report = validate(&g, 2);
        assert!(report.to_string().contains("edge joins P to P"), "{report}");
    }

    #[test]
    fn poly_round_trip() {
        let p = crate::cohomology::PoincarePoly::new(vec![1, 2, 3, 3, 2, 1]);
        let text = poly_to_json(&p).to_string();
        assert_eq!(text, r#"{"poly":[1,2,3,3,2,1]}"#);
        assert_eq!(poly_from_json(&text).unwrap(), p);
    }

    #[test]
    fn param_map_round_trip() {
        let text = r#"{"forms":[[0,1,0],[1,0,"1/2"]],"marked":[{"type":"rational","marking":1,"point":[0,1]}]}"#;
        let pm = param_map_from_json(text).unwrap();
        assert_eq!(pm.d(), 2);
        let again = param_map_from_json(&param_map_to_json(&pm).to_string()).unwrap();
        assert_eq!(again, pm);
        let bad = r#"{"forms":[[0,1,"x/y"]]}"#;
        match param_map_from_json(bad).unwrap_err() {
            Error::Schema { pointer, .. } => assert_eq!(pointer, "/forms/0/2"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn dot_output() {
        let dot = graph_to_dot(&maximal_graph(1, 2));
        assert!(dot.starts_with("graph G {"));
        assert_eq!(dot.matches(" -- ").count(), 3);
        let graphs = enumerate_graphs(0, 2, 1).unwrap();
        let hasse = hasse_dot(&Poset::new(2), &graphs).unwrap();
        assert!(hasse.contains("digraph Hasse"));
    }
}
