//! Exhaustive enumeration of fixed-locus graphs and the factor description
//! of each fixed locus.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{
    automorphisms, canonical_form, canonical_key, h_status, validate, Automorphism,
    CanonicalKey, DecoratedGraph, Edge, HStatus, Label, Leg, Marking, Vertex, VertexId,
};

pub const DEFAULT_CEILING: usize = 1_000_000;

/// The open-cell graph: one `P`-vertex with every leg and `d` degree-1 edges
/// to bare `H`-vertices.
pub fn maximal_graph(n: u32, d: u32) -> DecoratedGraph {
    let mut vertices = vec![Vertex { id: 0, label: Label::P }];
    let mut edges = Vec::new();
    for i in 1..=d {
        vertices.push(Vertex {
            id: i,
            label: Label::H { degree: 0 },
        });
        edges.push(Edge { p: 0, h: i, degree: 1 });
    }
    let legs = (1..=n).map(|marking| Leg { marking, vertex: 0 }).collect();
    DecoratedGraph::new(n, d, vertices, edges, legs)
}

/// Undecorated bicoloured tree; `is_p[i]` marks `P`-vertices.
#[derive(Clone)]
struct Shape {
    is_p: Vec<bool>,
    edges: Vec<(usize, usize)>,
}

impl Shape {
    fn to_graph(&self) -> DecoratedGraph {
        let vertices = self
            .is_p
            .iter()
            .enumerate()
            .map(|(i, &p)| Vertex {
                id: i as u32,
                label: if p { Label::P } else { Label::H { degree: 0 } },
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| Edge {
                p: a as u32,
                h: b as u32,
                degree: 1,
            })
            .collect();
        DecoratedGraph::new(0, self.edges.len() as u32, vertices, edges, vec![])
    }
}

/// All bicoloured trees with exactly `e` edges, up to isomorphism.
fn shapes(e: u32) -> Vec<Shape> {
    if e == 0 {
        return vec![Shape {
            is_p: vec![false],
            edges: vec![],
        }];
    }
    let mut layer = vec![Shape {
        is_p: vec![true, false],
        edges: vec![(0, 1)],
    }];
    for _ in 1..e {
        let mut next: BTreeMap<CanonicalKey, Shape> = BTreeMap::new();
        for s in &layer {
            for v in 0..s.is_p.len() {
                let mut t = s.clone();
                let new = t.is_p.len();
                t.is_p.push(!s.is_p[v]);
                t.edges.push(if s.is_p[v] { (v, new) } else { (new, v) });
                next.entry(canonical_key(&t.to_graph())).or_insert(t);
            }
        }
        layer = next.into_values().collect();
    }
    layer
}

/// Weak compositions of `total` into `parts` where the first `positive`
/// parts are at least 1.
fn compositions(total: u32, parts: usize, positive: usize, out: &mut Vec<Vec<u32>>) {
    fn rec(rest: u32, i: usize, parts: usize, positive: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == parts {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let lo = if i < positive { 1 } else { 0 };
        let reserve = positive.saturating_sub(i + 1) as u32;
        if rest < lo + reserve {
            return;
        }
        for x in lo..=rest - reserve {
            cur.push(x);
            rec(rest - x, i + 1, parts, positive, cur, out);
            cur.pop();
        }
    }
    rec(total, 0, parts, positive, &mut Vec::with_capacity(parts), out);
}

fn decorate(shape: &Shape, n: u32, r: u32, d: u32, sink: &Mutex<BTreeMap<CanonicalKey, DecoratedGraph>>, ceiling: usize) -> Result<()> {
    let e = shape.edges.len();
    let h_vertices: Vec<usize> = (0..shape.is_p.len()).filter(|&i| !shape.is_p[i]).collect();
    let free = if r <= 1 { 0 } else { h_vertices.len() };
    let mut degree_choices = Vec::new();
    compositions(d, e + free, e, &mut degree_choices);
    let v = shape.is_p.len();
    let mut local: BTreeMap<CanonicalKey, DecoratedGraph> = BTreeMap::new();
    for choice in degree_choices {
        let mut h_degree = vec![0u32; v];
        for (k, &hv) in h_vertices.iter().enumerate().take(free) {
            h_degree[hv] = choice[e + k];
        }
        let vertices: Vec<Vertex> = (0..v)
            .map(|i| Vertex {
                id: i as u32,
                label: if shape.is_p[i] {
                    Label::P
                } else {
                    Label::H { degree: h_degree[i] }
                },
            })
            .collect();
        let edges: Vec<Edge> = shape
            .edges
            .iter()
            .zip(&choice)
            .map(|(&(a, b), &deg)| Edge {
                p: a as u32,
                h: b as u32,
                degree: deg,
            })
            .collect();
        let mut assignment = vec![0usize; n as usize];
        loop {
            let legs = assignment
                .iter()
                .enumerate()
                .map(|(m, &vx)| Leg {
                    marking: m as Marking + 1,
                    vertex: vx as VertexId,
                })
                .collect();
            let g = DecoratedGraph::new(n, d, vertices.clone(), edges.clone(), legs);
            if validate(&g, r).is_ok() {
                let (key, canon) = canonical_form(&g);
                local.entry(key).or_insert(canon);
                if local.len() > ceiling {
                    return Err(Error::ResourceLimit { n, r, d, ceiling });
                }
            }
            // Odometer over V^n.
            let mut i = 0;
            while i < assignment.len() {
                assignment[i] += 1;
                if assignment[i] < v {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
            if i == assignment.len() {
                break;
            }
        }
    }
    let mut all = sink.lock().expect("enumeration sink poisoned");
    all.extend(local);
    if all.len() > ceiling {
        return Err(Error::ResourceLimit { n, r, d, ceiling });
    }
    Ok(())
}

/// Every valid graph for `(n, r, d)` exactly once, in canonical form, sorted
/// by canonical key.
pub fn enumerate_graphs(n: u32, r: u32, d: u32) -> Result<Vec<DecoratedGraph>> {
    enumerate_graphs_with_ceiling(n, r, d, DEFAULT_CEILING)
}

pub fn enumerate_graphs_with_ceiling(n: u32, r: u32, d: u32, ceiling: usize) -> Result<Vec<DecoratedGraph>> {
    Ok(enumerate_keyed(n, r, d, ceiling)?.into_values().collect())
}

pub fn enumerate_keyed(n: u32, r: u32, d: u32, ceiling: usize) -> Result<BTreeMap<CanonicalKey, DecoratedGraph>> {
    if d == 0 || r == 0 {
        return Err(Error::InvalidArguments(format!(
            "enumeration needs d >= 1 and r >= 1, got d = {d}, r = {r}"
        )));
    }
    let all_shapes: Vec<Shape> = (0..=d).flat_map(shapes).collect();
    let sink = Mutex::new(BTreeMap::new());
    all_shapes
        .par_iter()
        .try_for_each(|s| decorate(s, n, r, d, &sink, ceiling))?;
    Ok(sink.into_inner().expect("enumeration sink poisoned"))
}

/// One factor of the fixed locus, attached to a single vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    /// `P`-vertex with at most three flags.
    Point,
    /// `M̄_{0,m}` for a `P`-vertex with `m ≥ 4` flags.
    Curve { markings: u32 },
    /// `M̄_{0,m}(H, d_w)` for a stable `H`-vertex.
    Map { markings: u32, degree: u32 },
    /// A copy of `H` for an unstable `H`-vertex.
    Target,
}

impl Factor {
    /// Complex dimension when `H ≅ P^{r−1}`.
    pub fn dimension(self, r: u32) -> u32 {
        match self {
            Factor::Point => 0,
            Factor::Curve { markings } => markings - 3,
            Factor::Map { markings, degree } => {
                // (s+1)e + s + m − 3 with s = r − 1, never negative for stable data.
                (r * degree + (r - 1) + markings).saturating_sub(3)
            }
            Factor::Target => r - 1,
        }
    }
}

/// Flags of a vertex in a fixed order: incident edge indices, then legs by
/// marking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    Edge(usize),
    Leg(Marking),
}

pub fn vertex_flags(g: &DecoratedGraph, v: VertexId) -> Vec<Flag> {
    let mut out: Vec<Flag> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.p == v || e.h == v)
        .map(|(i, _)| Flag::Edge(i))
        .collect();
    let mut legs: Vec<Marking> = g.legs_at(v).collect();
    legs.sort_unstable();
    out.extend(legs.into_iter().map(Flag::Leg));
    out
}

/// Where an automorphism sends the flags of `v`: `result[i]` is the position
/// of the image of flag `i` among the flags of `aut(v)`.
pub fn flag_map(g: &DecoratedGraph, aut: &Automorphism, v: VertexId) -> Vec<usize> {
    let target = vertex_flags(g, aut.image(v));
    vertex_flags(g, v)
        .into_iter()
        .map(|f| {
            let img = match f {
                Flag::Edge(i) => Flag::Edge(aut.edge_map[i]),
                Flag::Leg(m) => Flag::Leg(m),
            };
            target.iter().position(|&t| t == img).expect("automorphism preserves flags")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorAction {
    /// `factor_perm[i]` is the factor that factor `i` is sent to.
    pub factor_perm: Vec<usize>,
    /// For each factor fixed by the generator, the induced permutation of
    /// its markings.
    pub fixed_marking_perms: BTreeMap<usize, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedLocusSpec {
    /// Vertex carrying each factor.
    pub vertices: Vec<VertexId>,
    pub factors: Vec<Factor>,
    /// One entry per generator of `Aut_Γ`.
    pub actions: Vec<FactorAction>,
}

pub fn factor_of(g: &DecoratedGraph, v: &Vertex) -> Factor {
    let m = g.valency(v.id) as u32;
    match v.label {
        Label::P if m >= 4 => Factor::Curve { markings: m },
        Label::P => Factor::Point,
        Label::H { degree } => match h_status(g, v.id, degree) {
            HStatus::Stable => Factor::Map { markings: m, degree },
            _ => Factor::Target,
        },
    }
}

pub fn fixed_locus_spec(g: &DecoratedGraph, _r: u32) -> FixedLocusSpec {
    let vertices: Vec<VertexId> = g.vertices().iter().map(|v| v.id).collect();
    let factors = g.vertices().iter().map(|v| factor_of(g, v)).collect();
    let position: BTreeMap<VertexId, usize> =
        vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let actions = automorphisms(g)
        .generators
        .iter()
        .map(|aut| {
            let factor_perm: Vec<usize> = vertices.iter().map(|&v| position[&aut.image(v)]).collect();
            let fixed_marking_perms = vertices
                .iter()
                .enumerate()
                .filter(|&(i, _)| factor_perm[i] == i)
                .map(|(i, &v)| (i, flag_map(g, aut, v)))
                .collect();
            FactorAction {
                factor_perm,
                fixed_marking_perms,
            }
        })
        .collect();
    FixedLocusSpec {
        vertices,
        factors,
        actions,
    }
}

/// Histogram of codimensions over a set of graphs.
pub fn codimension_histogram(graphs: &[DecoratedGraph]) -> Result<BTreeMap<u32, usize>> {
    let mut out = BTreeMap::new();
    for g in graphs {
        *out.entry(crate::graph::codimension(g)?).or_insert(0) += 1;
    }
    Ok(out)
}

/// Keys of the graphs, as a set.
pub fn key_set(graphs: &[DecoratedGraph]) -> BTreeSet<CanonicalKey> {
    graphs.iter().map(canonical_key).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::codimension;

    fn codims(n: u32, r: u32, d: u32) -> Vec<u32> {
        let mut v: Vec<u32> = enumerate_graphs(n, r, d)
            .unwrap()
            .iter()
            .map(|g| codimension(g).unwrap())
            .collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn small_counts() {
        assert_eq!(codims(0, 2, 1), vec![0, 2]);
        assert_eq!(codims(0, 2, 2), vec![0, 1, 2, 3, 3]);
        assert_eq!(codims(0, 1, 2), vec![0, 1, 2]);
    }

    #[test]
    fn shape_counts_match_bicoloured_trees() {
        // Bicoloured unlabelled trees with 1..4 edges: 1, 2, 3, 6 (by hand).
        let counts: Vec<usize> = (1..=4).map(|e| shapes(e).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 6]);
    }

    #[test]
    fn compositions_respect_positivity() {
        let mut out = Vec::new();
        compositions(3, 3, 2, &mut out);
        assert!(out.iter().all(|c| c[0] >= 1 && c[1] >= 1 && c.iter().sum::<u32>() == 3));
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn maximal_graph_is_open_cell() {
        for n in 0..=5 {
            for d in 1..=5 {
                let g = maximal_graph(n, d);
                assert!(validate(&g, 2).is_ok());
                assert_eq!(codimension(&g).unwrap(), 0);
            }
        }
    }

    #[test]
    fn ceiling_triggers_resource_limit() {
        let err = enumerate_graphs_with_ceiling(2, 2, 3, 5).unwrap_err();
        assert_eq!(err.kind(), "resource_limit");
    }

    #[test]
    fn factor_specs() {
        let edge = maximal_graph(0, 1);
        assert_eq!(fixed_locus_spec(&edge, 2).factors, vec![Factor::Point, Factor::Target]);
        let single = DecoratedGraph::single_h(3, 2);
        assert_eq!(
            fixed_locus_spec(&single, 2).factors,
            vec![Factor::Map { markings: 3, degree: 2 }]
        );
        let star = maximal_graph(0, 2);
        let spec = fixed_locus_spec(&star, 2);
        assert_eq!(spec.factors, vec![Factor::Point, Factor::Target, Factor::Target]);
        assert_eq!(spec.actions.len(), 1);
        assert_eq!(spec.actions[0].factor_perm, vec![0, 2, 1]);
    }
}
