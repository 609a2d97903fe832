//! Decorated graphs indexing the fixed loci of the torus action
//! `t·[z0:z1:…:zr] = [z0:tz1:…:tzr]` on genus-0 stable maps to `P^r`.
//!
//! A graph is a bipartite tree. `P`-vertices are connected components of
//! `f⁻¹(p)`, `H`-vertices are connected components of `f⁻¹(H)` carrying the
//! degree of the map on them, and each edge is a multiple cover of a line
//! through `p`, totally ramified over its two endpoints.

mod automorphism;
mod canonical;

pub use automorphism::{automorphism_elements, automorphisms, AutDescription, Automorphism};
pub use canonical::{canonical_form, canonical_key, CanonicalKey};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

pub type VertexId = u32;
pub type Marking = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    P,
    /// A vertex mapped to the hyperplane, with the degree of the map on it.
    H { degree: u32 },
}

impl Label {
    pub fn is_p(self) -> bool {
        matches!(self, Label::P)
    }

    pub fn h_degree(self) -> Option<u32> {
        match self {
            Label::P => None,
            Label::H { degree } => Some(degree),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub id: VertexId,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub p: VertexId,
    pub h: VertexId,
    pub degree: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leg {
    pub marking: Marking,
    pub vertex: VertexId,
}

/// An immutable candidate graph. Construction never validates; call
/// [`validate`] before relying on any of the graph invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedGraph {
    n: u32,
    d: u32,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    legs: Vec<Leg>,
}

impl DecoratedGraph {
    pub fn new(n: u32, d: u32, vertices: Vec<Vertex>, edges: Vec<Edge>, legs: Vec<Leg>) -> Self {
        Self {
            n,
            d,
            vertices,
            edges,
            legs,
        }
    }

    /// The graph with a single `H`-vertex of degree `d` carrying every leg.
    pub fn single_h(n: u32, d: u32) -> Self {
        Self::new(
            n,
            d,
            vec![Vertex {
                id: 0,
                label: Label::H { degree: d },
            }],
            vec![],
            (1..=n).map(|marking| Leg { marking, vertex: 0 }).collect(),
        )
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.iter().find(|v| v.id == id)
    }

    pub fn p_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.label.is_p()).count()
    }

    pub fn max_vertex_id(&self) -> Option<VertexId> {
        self.vertices.iter().map(|v| v.id).max()
    }

    pub fn legs_at(&self, id: VertexId) -> impl Iterator<Item = Marking> + '_ {
        self.legs.iter().filter(move |l| l.vertex == id).map(|l| l.marking)
    }

    pub fn edges_at(&self, id: VertexId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.p == id || e.h == id)
    }

    /// Total valency `n(v)`: incident half-edges plus legs.
    pub fn valency(&self, id: VertexId) -> usize {
        self.edges_at(id).count() + self.legs_at(id).count()
    }

    pub fn edge_between(&self, p: VertexId, h: VertexId) -> Option<&Edge> {
        self.edges.iter().find(|e| e.p == p && e.h == h)
    }
}

/// One violated invariant of a candidate graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ZeroTotalDegree,
    Empty,
    DuplicateVertexId(VertexId),
    MissingEndpoint { edge: usize, vertex: VertexId },
    EdgeJoinsSameLabel { edge: usize, label: &'static str },
    EdgeEndpointsSwapped { edge: usize },
    ZeroEdgeDegree { edge: usize },
    DuplicateEdge { p: VertexId, h: VertexId },
    NotATree,
    IsolatedVertex(VertexId),
    DegreeSum { expected: u32, found: u64 },
    SingleVertexNotH,
    LegOnMissingVertex { marking: Marking, vertex: VertexId },
    MarkingOutOfRange(Marking),
    MarkingRepeated(Marking),
    MarkingMissing(Marking),
    PositiveDegreeOnPointTarget(VertexId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroTotalDegree => write!(f, "total degree must be positive"),
            Violation::Empty => write!(f, "graph has no vertices"),
            Violation::DuplicateVertexId(id) => write!(f, "duplicate vertex id {id}"),
            Violation::MissingEndpoint { edge, vertex } => {
                write!(f, "edge {edge} references missing vertex {vertex}")
            }
            Violation::EdgeJoinsSameLabel { label, .. } => write!(f, "edge joins {label} to {label}"),
            Violation::EdgeEndpointsSwapped { edge } => {
                write!(f, "edge {edge} lists an H-vertex as its P endpoint")
            }
            Violation::ZeroEdgeDegree { edge } => write!(f, "edge {edge} has degree 0"),
            Violation::DuplicateEdge { p, h } => write!(f, "duplicate edge {p}-{h}"),
            Violation::NotATree => write!(f, "graph is not a tree"),
            Violation::IsolatedVertex(id) => write!(f, "vertex {id} has no incident edge"),
            Violation::DegreeSum { expected, found } => {
                write!(f, "degrees sum to {found}, expected d = {expected}")
            }
            Violation::SingleVertexNotH => write!(f, "a single-vertex graph must be an H-vertex"),
            Violation::LegOnMissingVertex { marking, vertex } => {
                write!(f, "leg {marking} attached to missing vertex {vertex}")
            }
            Violation::MarkingOutOfRange(m) => write!(f, "marking {m} outside 1..n"),
            Violation::MarkingRepeated(m) => write!(f, "marking {m} appears more than once"),
            Violation::MarkingMissing(m) => write!(f, "marking {m} has no leg"),
            Violation::PositiveDegreeOnPointTarget(_) => write!(f, "h_degree > 0 with r = 1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks every graph invariant plus the target constraint for `P^r`
/// (when `r = 1` the hyperplane is a point, so no `H`-vertex has positive degree).
pub fn validate(g: &DecoratedGraph, r: u32) -> ValidationReport {
    let mut report = validate_structure(g);
    if r <= 1 {
        for v in &g.vertices {
            if let Label::H { degree } = v.label {
                if degree > 0 {
                    report.violations.push(Violation::PositiveDegreeOnPointTarget(v.id));
                }
            }
        }
    }
    report
}

/// The target-independent part of [`validate`].
pub fn validate_structure(g: &DecoratedGraph) -> ValidationReport {
    let mut out = Vec::new();
    if g.d == 0 {
        out.push(Violation::ZeroTotalDegree);
    }
    if g.vertices.is_empty() {
        out.push(Violation::Empty);
    }

    let mut labels: HashMap<VertexId, Label> = HashMap::new();
    for v in &g.vertices {
        if labels.insert(v.id, v.label).is_some() {
            out.push(Violation::DuplicateVertexId(v.id));
        }
    }

    let mut pairs = HashSet::new();
    let mut endpoints_ok = true;
    for (i, e) in g.edges.iter().enumerate() {
        let (lp, lh) = (labels.get(&e.p), labels.get(&e.h));
        if lp.is_none() {
            out.push(Violation::MissingEndpoint { edge: i, vertex: e.p });
            endpoints_ok = false;
        }
        if lh.is_none() {
            out.push(Violation::MissingEndpoint { edge: i, vertex: e.h });
            endpoints_ok = false;
        }
        if let (Some(a), Some(b)) = (lp, lh) {
            match (a.is_p(), b.is_p()) {
                (true, true) => out.push(Violation::EdgeJoinsSameLabel { edge: i, label: "P" }),
                (false, false) => out.push(Violation::EdgeJoinsSameLabel { edge: i, label: "H" }),
                (false, true) => out.push(Violation::EdgeEndpointsSwapped { edge: i }),
                (true, false) => {}
            }
        }
        if e.degree == 0 {
            out.push(Violation::ZeroEdgeDegree { edge: i });
        }
        let key = (e.p.min(e.h), e.p.max(e.h));
        if !pairs.insert(key) {
            out.push(Violation::DuplicateEdge { p: e.p, h: e.h });
        }
    }

    if endpoints_ok && !g.vertices.is_empty() {
        if !is_tree(g) {
            out.push(Violation::NotATree);
        }
        if g.vertices.len() >= 2 {
            for v in &g.vertices {
                if g.edges_at(v.id).next().is_none() {
                    out.push(Violation::IsolatedVertex(v.id));
                }
            }
        } else if g.vertices[0].label.is_p() {
            out.push(Violation::SingleVertexNotH);
        }
    }

    let found: u64 = g.edges.iter().map(|e| e.degree as u64).sum::<u64>()
        + g
            .vertices
            .iter()
            .filter_map(|v| v.label.h_degree())
            .map(|x| x as u64)
            .sum::<u64>();
    if found != g.d as u64 {
        out.push(Violation::DegreeSum {
            expected: g.d,
            found,
        });
    }

    let mut seen = BTreeSet::new();
    for leg in &g.legs {
        if !labels.contains_key(&leg.vertex) {
            out.push(Violation::LegOnMissingVertex {
                marking: leg.marking,
                vertex: leg.vertex,
            });
        }
        if leg.marking == 0 || leg.marking > g.n {
            out.push(Violation::MarkingOutOfRange(leg.marking));
        } else if !seen.insert(leg.marking) {
            out.push(Violation::MarkingRepeated(leg.marking));
        }
    }
    for m in 1..=g.n {
        if !seen.contains(&m) {
            out.push(Violation::MarkingMissing(m));
        }
    }

    ValidationReport { violations: out }
}

fn is_tree(g: &DecoratedGraph) -> bool {
    if g.edges.len() + 1 != g.vertices.len() {
        return false;
    }
    let index: HashMap<VertexId, usize> =
        g.vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
    let mut parent: Vec<usize> = (0..g.vertices.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &g.edges {
        let (a, b) = (index[&e.p], index[&e.h]);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Stability type of an `H`-vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HStatus {
    Stable,
    /// One edge and one leg: a marked point sent to `H`.
    UnstableLeg,
    /// Two edges: a node sent to `H`.
    UnstableNode,
    /// One edge, no leg: an unmarked smooth point sent to `H`.
    VeryUnstable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexStatus {
    pub per_vertex: BTreeMap<VertexId, HStatus>,
    /// Number of stable `H`-vertices.
    pub stable: u32,
    /// Number of very unstable `H`-vertices.
    pub very_unstable: u32,
    /// Number of unstable `H`-vertices with two edges.
    pub unstable_nodes: u32,
    /// Edges whose `H`-endpoint is stable, plus `unstable_nodes`.
    pub f_count: u32,
}

pub fn h_status(g: &DecoratedGraph, id: VertexId, degree: u32) -> HStatus {
    let edges = g.edges_at(id).count();
    let legs = g.legs_at(id).count();
    if degree > 0 || edges + legs >= 3 {
        HStatus::Stable
    } else if edges + legs == 1 {
        HStatus::VeryUnstable
    } else if edges == 2 {
        HStatus::UnstableNode
    } else {
        HStatus::UnstableLeg
    }
}

pub fn classify(g: &DecoratedGraph) -> VertexStatus {
    let mut per_vertex = BTreeMap::new();
    let (mut stable, mut very_unstable, mut unstable_nodes, mut stable_edges) = (0, 0, 0, 0);
    for v in &g.vertices {
        if let Label::H { degree } = v.label {
            let status = h_status(g, v.id, degree);
            match status {
                HStatus::Stable => {
                    stable += 1;
                    stable_edges += g.edges_at(v.id).count() as u32;
                }
                HStatus::VeryUnstable => very_unstable += 1,
                HStatus::UnstableNode => unstable_nodes += 1,
                HStatus::UnstableLeg => {}
            }
            per_vertex.insert(v.id, status);
        }
    }
    VertexStatus {
        per_vertex,
        stable,
        very_unstable,
        unstable_nodes,
        f_count: stable_edges + unstable_nodes,
    }
}

/// Codimension `d + 𝔰 − 𝔲` of the plus cell of `g`.
pub fn codimension(g: &DecoratedGraph) -> Result<u32> {
    let s = classify(g);
    let value = g.d as i64 + s.stable as i64 - s.very_unstable as i64;
    if value < 0 {
        return Err(Error::Inconsistent { value });
    }
    Ok(value as u32)
}

/// Negative-weight count on the normal bundle, split by the three terms of
/// the deformation sequence of a generic fixed map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightCount {
    /// Negative weights of `H⁰(C, f*TP^r)`.
    pub sections: i64,
    /// Node smoothings with negative weight (`Ext¹`).
    pub smoothings: i64,
    /// Domain automorphisms with negative weight (`Ext⁰`), subtracted.
    pub automorphisms: i64,
}

impl WeightCount {
    pub fn total(&self) -> i64 {
        self.sections + self.smoothings - self.automorphisms
    }
}

pub fn weight_breakdown(g: &DecoratedGraph) -> WeightCount {
    let status = classify(g);
    let stable_vertices: i64 = g
        .vertices
        .iter()
        .filter(|v| status.per_vertex.get(&v.id) == Some(&HStatus::Stable))
        .map(|v| v.label.h_degree().unwrap_or(0) as i64 + 1)
        .sum();
    let edges: i64 = g.edges.iter().map(|e| e.degree as i64).sum();
    let f = status.f_count as i64;
    WeightCount {
        sections: stable_vertices + edges - f,
        smoothings: f,
        automorphisms: status.very_unstable as i64,
    }
}

pub fn negative_weight_count(g: &DecoratedGraph) -> u32 {
    weight_breakdown(g).total().max(0) as u32
}

/// Adjacency view of a structurally valid graph, indexed by position.
pub(crate) struct Tree {
    pub ids: Vec<VertexId>,
    pub labels: Vec<Label>,
    /// `(neighbour, edge degree)` per vertex, sorted by neighbour id.
    pub adj: Vec<Vec<(usize, u32)>>,
    pub legs: Vec<Vec<Marking>>,
}

impl Tree {
    pub fn new(g: &DecoratedGraph) -> Self {
        let index: HashMap<VertexId, usize> =
            g.vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
        let mut adj = vec![Vec::new(); g.vertices.len()];
        for e in &g.edges {
            let (a, b) = (index[&e.p], index[&e.h]);
            adj[a].push((b, e.degree));
            adj[b].push((a, e.degree));
        }
        let ids: Vec<VertexId> = g.vertices.iter().map(|v| v.id).collect();
        for list in &mut adj {
            list.sort_by_key(|&(nb, _)| ids[nb]);
        }
        let mut legs = vec![Vec::new(); g.vertices.len()];
        for leg in &g.legs {
            legs[index[&leg.vertex]].push(leg.marking);
        }
        for list in &mut legs {
            list.sort_unstable();
        }
        Self {
            ids,
            labels: g.vertices.iter().map(|v| v.label).collect(),
            adj,
            legs,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    /// The centre of the tree. For a bicentral tree the two centres carry
    /// different labels, so the `P` one is returned.
    pub fn center(&self) -> usize {
        let n = self.len();
        if n <= 2 {
            return (0..n).find(|&i| self.labels[i].is_p()).unwrap_or(0);
        }
        let mut degree: Vec<usize> = self.adj.iter().map(Vec::len).collect();
        let mut layer: Vec<usize> = (0..n).filter(|&i| degree[i] <= 1).collect();
        let mut remaining = n;
        while remaining > 2 {
            remaining -= layer.len();
            let mut next = Vec::new();
            for &leaf in &layer {
                degree[leaf] = 0;
                for &(nb, _) in &self.adj[leaf] {
                    if degree[nb] > 0 {
                        degree[nb] -= 1;
                        if degree[nb] == 1 {
                            next.push(nb);
                        }
                    }
                }
            }
            layer = next;
        }
        let mut centers: Vec<usize> = (0..n).filter(|&i| degree[i] > 0).collect();
        if centers.is_empty() {
            centers = layer;
        }
        centers.sort_by_key(|&i| !self.labels[i].is_p());
        centers[0]
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn p(id: VertexId) -> Vertex {
        Vertex { id, label: Label::P }
    }

    pub fn h(id: VertexId, degree: u32) -> Vertex {
        Vertex {
            id,
            label: Label::H { degree },
        }
    }

    pub fn e(p: VertexId, h: VertexId, degree: u32) -> Edge {
        Edge { p, h, degree }
    }

    pub fn leg(marking: Marking, vertex: VertexId) -> Leg {
        Leg { marking, vertex }
    }

    /// One `P`-vertex with all legs and `degrees.len()` edges to bare `(H,0)` vertices.
    pub fn star(n: u32, degrees: &[u32]) -> DecoratedGraph {
        let mut vertices = vec![p(0)];
        let mut edges = vec![];
        for (i, &m) in degrees.iter().enumerate() {
            vertices.push(h(i as u32 + 1, 0));
            edges.push(e(0, i as u32 + 1, m));
        }
        let legs = (1..=n).map(|m| leg(m, 0)).collect();
        DecoratedGraph::new(n, degrees.iter().sum(), vertices, edges, legs)
    }

    /// `P -a- H(0) -b- P`.
    pub fn path(a: u32, b: u32) -> DecoratedGraph {
        DecoratedGraph::new(0, a + b, vec![p(0), h(1, 0), p(2)], vec![e(0, 1, a), e(2, 1, b)], vec![])
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn single_h_vertex_is_minimal_valid_graph() {
        assert!(validate(&DecoratedGraph::single_h(0, 2), 2).is_ok());
    }

    #[test]
    fn positive_h_degree_rejected_when_target_is_a_line() {
        let report = validate(&DecoratedGraph::single_h(0, 2), 1);
        assert_eq!(report.violations, vec![Violation::PositiveDegreeOnPointTarget(0)]);
        assert_eq!(report.to_string(), "h_degree > 0 with r = 1");
    }

    #[test]
    fn edge_between_two_p_vertices_rejected() {
        let g = DecoratedGraph::new(0, 1, vec![p(0), p(1)], vec![e(0, 1, 1)], vec![]);
        let report = validate(&g, 2);
        assert!(report.violations.iter().any(|v| v.to_string() == "edge joins P to P"));
    }

    #[test]
    fn structural_violations_are_collected_not_aborted() {
        let g = DecoratedGraph::new(
            2,
            3,
            vec![p(0), h(1, 0), h(2, 0)],
            vec![e(0, 1, 1), e(0, 9, 1)],
            vec![leg(1, 0), leg(1, 2), leg(5, 0)],
        );
        let report = validate(&g, 2);
        let text = report.to_string();
        assert!(text.contains("missing vertex 9"), "{text}");
        assert!(text.contains("marking 1 appears more than once"), "{text}");
        assert!(text.contains("marking 5 outside"), "{text}");
        assert!(text.contains("marking 2 has no leg"), "{text}");
        assert!(text.contains("degrees sum to 2"), "{text}");
    }

    #[test]
    fn disconnected_and_cyclic_candidates_rejected() {
        let g = DecoratedGraph::new(0, 2, vec![p(0), h(1, 0), p(2), h(3, 0)], vec![e(0, 1, 1), e(2, 3, 1)], vec![]);
        assert!(validate(&g, 2).violations.contains(&Violation::NotATree));
        let dup = DecoratedGraph::new(0, 2, vec![p(0), h(1, 0)], vec![e(0, 1, 1), e(0, 1, 1)], vec![]);
        assert!(validate(&dup, 2).violations.contains(&Violation::DuplicateEdge { p: 0, h: 1 }));
    }

    #[test]
    fn classify_star_graph() {
        for d in 1..=4 {
            let s = classify(&star(2, &vec![1; d as usize]));
            assert_eq!((s.stable, s.very_unstable, s.unstable_nodes, s.f_count), (0, d, 0, 0));
        }
    }

    #[test]
    fn classify_single_vertex_and_path() {
        let s = classify(&DecoratedGraph::single_h(0, 3));
        assert_eq!((s.stable, s.very_unstable), (1, 0));
        let s = classify(&path(1, 1));
        assert_eq!((s.stable, s.very_unstable, s.unstable_nodes, s.f_count), (0, 0, 1, 1));
    }

    #[test]
    fn codimension_examples() {
        assert_eq!(codimension(&star(0, &[1, 1, 1])).unwrap(), 0);
        for n in 0..3 {
            assert_eq!(codimension(&DecoratedGraph::single_h(n, 3)).unwrap(), 4);
        }
        assert_eq!(codimension(&star(0, &[2])).unwrap(), 1);
    }

    #[test]
    fn weight_recipe_examples() {
        assert_eq!(negative_weight_count(&star(0, &[1, 1])), 0);
        let w = weight_breakdown(&DecoratedGraph::single_h(0, 3));
        assert_eq!((w.sections, w.smoothings, w.automorphisms), (4, 0, 0));
        let w = weight_breakdown(&path(1, 1));
        assert_eq!((w.sections, w.smoothings, w.automorphisms), (1, 1, 0));
        assert_eq!(w.total(), 2);
    }

    #[test]
    fn center_of_bicentral_tree_is_the_p_vertex() {
        let t = Tree::new(&star(0, &[1]));
        assert!(t.labels[t.center()].is_p());
        let t = Tree::new(&path(1, 1));
        assert_eq!(t.ids[t.center()], 1);
    }
}
