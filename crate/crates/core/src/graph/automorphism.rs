use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::canonical::Rooted;
use super::{DecoratedGraph, Edge, VertexId};
use crate::error::{Error, Result};

/// A label-, degree- and marking-preserving automorphism of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Automorphism {
    /// Image of every vertex id.
    pub vertex_map: BTreeMap<VertexId, VertexId>,
    /// `edge_map[i]` is the index of the image of `g.edges()[i]`.
    pub edge_map: Vec<usize>,
}

impl Automorphism {
    pub fn identity(g: &DecoratedGraph) -> Self {
        Self {
            vertex_map: g.vertices().iter().map(|v| (v.id, v.id)).collect(),
            edge_map: (0..g.edges().len()).collect(),
        }
    }

    pub fn image(&self, id: VertexId) -> VertexId {
        self.vertex_map.get(&id).copied().unwrap_or(id)
    }

    pub fn is_identity(&self) -> bool {
        self.vertex_map.iter().all(|(a, b)| a == b)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism {
            vertex_map: other
                .vertex_map
                .iter()
                .map(|(&a, &b)| (a, self.image(b)))
                .collect(),
            edge_map: other.edge_map.iter().map(|&i| self.edge_map[i]).collect(),
        }
    }

    /// The graph with every vertex id replaced by its image.
    pub fn apply(&self, g: &DecoratedGraph) -> DecoratedGraph {
        let vertices = g
            .vertices()
            .iter()
            .map(|v| super::Vertex {
                id: self.image(v.id),
                label: v.label,
            })
            .collect();
        let edges = g
            .edges()
            .iter()
            .map(|e| Edge {
                p: self.image(e.p),
                h: self.image(e.h),
                degree: e.degree,
            })
            .collect();
        let legs = g
            .legs()
            .iter()
            .map(|l| super::Leg {
                marking: l.marking,
                vertex: self.image(l.vertex),
            })
            .collect();
        DecoratedGraph::new(g.n(), g.d(), vertices, edges, legs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutDescription {
    pub generators: Vec<Automorphism>,
    /// `|Aut_Γ|`.
    pub order: u64,
    /// `|A_Γ| = |Aut_Γ| · Π d_e`.
    pub a_gamma_order: u64,
}

fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

/// Vertex map (by tree index) sending the subtree at `a` onto the isomorphic
/// subtree at `b`.
fn pair_subtrees(r: &Rooted, a: usize, b: usize, out: &mut Vec<(usize, usize)>) {
    out.push((a, b));
    for (&x, &y) in r.children[a].iter().zip(&r.children[b]) {
        pair_subtrees(r, x, y, out);
    }
}

fn from_index_map(g: &DecoratedGraph, r: &Rooted, map: &[usize]) -> Automorphism {
    let ids = &r.tree.ids;
    let vertex_map: BTreeMap<VertexId, VertexId> =
        (0..map.len()).map(|i| (ids[i], ids[map[i]])).collect();
    let edge_index: BTreeMap<(VertexId, VertexId), usize> =
        g.edges().iter().enumerate().map(|(i, e)| ((e.p, e.h), i)).collect();
    let edge_map = g
        .edges()
        .iter()
        .map(|e| edge_index[&(vertex_map[&e.p], vertex_map[&e.h])])
        .collect();
    Automorphism { vertex_map, edge_map }
}

/// Generators and order of `Aut_Γ`. Every automorphism fixes the centre of
/// the tree, so the group is an iterated wreath product of symmetric groups
/// acting on classes of isomorphic child subtrees.
pub fn automorphisms(g: &DecoratedGraph) -> AutDescription {
    let edge_product: u64 = g.edges().iter().map(|e| e.degree as u64).product();
    if g.vertices().is_empty() {
        return AutDescription {
            generators: vec![],
            order: 1,
            a_gamma_order: edge_product,
        };
    }
    let r = Rooted::new(g);
    let n = r.tree.len();
    let mut order = 1u64;
    let mut generators = Vec::new();
    for v in 0..n {
        let kids = &r.children[v];
        let mut run = 1;
        for i in 1..=kids.len() {
            if i < kids.len() && r.code[kids[i]] == r.code[kids[i - 1]] {
                run += 1;
                let mut pairs = Vec::new();
                pair_subtrees(&r, kids[i - 1], kids[i], &mut pairs);
                pair_subtrees(&r, kids[i], kids[i - 1], &mut pairs);
                let mut map: Vec<usize> = (0..n).collect();
                for (a, b) in pairs {
                    map[a] = b;
                }
                generators.push(from_index_map(g, &r, &map));
            } else {
                order *= factorial(run);
                run = 1;
            }
        }
    }
    AutDescription {
        generators,
        order,
        a_gamma_order: order * edge_product,
    }
}

/// Every element of `Aut_Γ`, identity first, by closure of the generators.
pub fn automorphism_elements(g: &DecoratedGraph, ceiling: u64) -> Result<Vec<Automorphism>> {
    let desc = automorphisms(g);
    if desc.order > ceiling {
        return Err(Error::InvalidArguments(format!(
            "automorphism group of order {} exceeds the element ceiling {ceiling}",
            desc.order
        )));
    }
    let id = Automorphism::identity(g);
    let mut seen = BTreeSet::from([id.clone()]);
    let mut out = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for s in &desc.generators {
            let y = s.compose(&x);
            if seen.insert(y.clone()) {
                out.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    debug_assert_eq!(out.len() as u64, desc.order);
    Ok(out)
}
