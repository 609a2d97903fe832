//! Split, join and transfer surgeries, the length function they increase,
//! and the order they generate on fixed-locus graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::enumeration::{maximal_graph, DEFAULT_CEILING};
use crate::error::{Error, Result};
use crate::graph::{
    canonical_form, canonical_key, validate, validate_structure, CanonicalKey, DecoratedGraph, Edge, Label,
    Leg, Marking, Vertex, VertexId,
};

/// A flag at a `P`-vertex other than the edge being split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PFlag {
    /// The edge from the `P`-vertex to this `H`-vertex.
    Edge { h: VertexId },
    Leg { marking: Marking },
}

/// One surgery. Vertex ids refer to the graph the step is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MoveStep {
    /// Replace the edge `p–h` of degree `m` by `k = degrees.len()` edges
    /// from `k` new `P`-vertices to `h`; `h` gains `internal_degree` and
    /// `m = internal_degree + Σ degrees`. `blocks[i]` lists the other flags of
    /// `p` moved to the `i`-th new vertex (the first keeps the id `p`). With
    /// `k = 0` the vertex `p` disappears and its legs move to `h`.
    Split {
        p: VertexId,
        h: VertexId,
        degrees: Vec<u32>,
        internal_degree: u32,
        blocks: Vec<Vec<PFlag>>,
    },
    /// Merge the edges `p–h1`, `p–h2` into one edge of the summed degree and
    /// the two `H`-vertices into `h1` with summed degree.
    Join { p: VertexId, h1: VertexId, h2: VertexId },
    /// Move the leg `marking` from `p` to `h` along their edge.
    Transfer { p: VertexId, h: VertexId, marking: Marking },
}

impl MoveStep {
    pub fn kind(&self) -> &'static str {
        match self {
            MoveStep::Split { .. } => "split",
            MoveStep::Join { .. } => "join",
            MoveStep::Transfer { .. } => "transfer",
        }
    }
}

/// `Σ_H (h_degree − 1) + #P + #legs on H`.
pub fn length(g: &DecoratedGraph) -> i64 {
    let mut l = 0i64;
    for v in g.vertices() {
        match v.label {
            Label::P => l += 1,
            Label::H { degree } => l += degree as i64 - 1 + g.legs_at(v.id).count() as i64,
        }
    }
    l
}

/// The change of `length` a step produces on `g`, from its parameters alone.
pub fn expected_increment(g: &DecoratedGraph, step: &MoveStep) -> i64 {
    match step {
        MoveStep::Split {
            p,
            degrees,
            internal_degree,
            ..
        } => {
            if degrees.is_empty() {
                *internal_degree as i64 - 1 + g.legs_at(*p).count() as i64
            } else {
                degrees.len() as i64 - 1 + *internal_degree as i64
            }
        }
        MoveStep::Join { .. } | MoveStep::Transfer { .. } => 1,
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidMove(msg.into())
}

fn edge_degree(g: &DecoratedGraph, p: VertexId, h: VertexId) -> Result<u32> {
    match (g.vertex(p), g.vertex(h)) {
        (Some(pv), Some(hv)) if pv.label.is_p() && !hv.label.is_p() => g
            .edge_between(p, h)
            .map(|e| e.degree)
            .ok_or_else(|| invalid(format!("no edge between P-vertex {p} and H-vertex {h}"))),
        _ => Err(invalid(format!("vertices {p}, {h} are not a P-vertex and an H-vertex"))),
    }
}

fn other_flags(g: &DecoratedGraph, p: VertexId, h: VertexId) -> BTreeSet<PFlag> {
    let mut out: BTreeSet<PFlag> = g
        .edges_at(p)
        .filter(|e| e.h != h)
        .map(|e| PFlag::Edge { h: e.h })
        .collect();
    out.extend(g.legs_at(p).map(|marking| PFlag::Leg { marking }));
    out
}

/// Applies one surgery and revalidates the structure of the result.
pub fn apply_move(g: &DecoratedGraph, step: &MoveStep) -> Result<DecoratedGraph> {
    let out = match step {
        MoveStep::Split {
            p,
            h,
            degrees,
            internal_degree,
            blocks,
        } => split(g, *p, *h, degrees, *internal_degree, blocks)?,
        MoveStep::Join { p, h1, h2 } => join(g, *p, *h1, *h2)?,
        MoveStep::Transfer { p, h, marking } => transfer(g, *p, *h, *marking)?,
    };
    let report = validate_structure(&out);
    if !report.is_ok() {
        return Err(invalid(format!("surgery produced an invalid graph: {report}")));
    }
    Ok(out)
}

fn split(
    g: &DecoratedGraph,
    p: VertexId,
    h: VertexId,
    degrees: &[u32],
    d0: u32,
    blocks: &[Vec<PFlag>],
) -> Result<DecoratedGraph> {
    let m = edge_degree(g, p, h)?;
    let k = degrees.len();
    if degrees.contains(&0) {
        return Err(invalid("split degrees must be positive"));
    }
    if d0 + degrees.iter().sum::<u32>() != m {
        return Err(invalid(format!(
            "split must conserve the edge degree {m}: internal {d0} + {degrees:?}"
        )));
    }
    if k == 1 && d0 == 0 {
        return Err(invalid("a split into one edge must move positive degree into H"));
    }
    if blocks.len() != k {
        return Err(invalid(format!("{} flag blocks for {k} new vertices", blocks.len())));
    }
    let others = other_flags(g, p, h);
    if k == 0 {
        if others.iter().any(|f| matches!(f, PFlag::Edge { .. })) {
            return Err(invalid("a split into no edges needs a P-vertex without other edges"));
        }
    } else {
        let listed: Vec<PFlag> = blocks.iter().flatten().copied().collect();
        let as_set: BTreeSet<PFlag> = listed.iter().copied().collect();
        if as_set.len() != listed.len() || as_set != others {
            return Err(invalid("flag blocks must partition the other flags of the P-vertex"));
        }
    }

    let mut next_id = g.max_vertex_id().unwrap_or(0) + 1;
    let mut owner: BTreeMap<PFlag, VertexId> = BTreeMap::new();
    let mut new_ps = Vec::with_capacity(k);
    for (i, block) in blocks.iter().enumerate() {
        let id = if i == 0 {
            p
        } else {
            next_id += 1;
            next_id - 1
        };
        new_ps.push(id);
        for &f in block {
            owner.insert(f, id);
        }
    }

    let mut vertices: Vec<Vertex> = Vec::new();
    for v in g.vertices() {
        if v.id == p {
            continue;
        }
        if v.id == h {
            let degree = v.label.h_degree().unwrap_or(0) + d0;
            vertices.push(Vertex {
                id: h,
                label: Label::H { degree },
            });
        } else {
            vertices.push(*v);
        }
    }
    for &id in &new_ps {
        vertices.push(Vertex { id, label: Label::P });
    }

    let mut edges: Vec<Edge> = Vec::new();
    for e in g.edges() {
        if e.p == p && e.h == h {
            continue;
        }
        if e.p == p {
            edges.push(Edge {
                p: owner[&PFlag::Edge { h: e.h }],
                ..*e
            });
        } else {
            edges.push(*e);
        }
    }
    for (&id, &deg) in new_ps.iter().zip(degrees) {
        edges.push(Edge { p: id, h, degree: deg });
    }

    let legs = g
        .legs()
        .iter()
        .map(|l| {
            if l.vertex != p {
                *l
            } else if k == 0 {
                Leg { vertex: h, ..*l }
            } else {
                Leg {
                    vertex: owner[&PFlag::Leg { marking: l.marking }],
                    ..*l
                }
            }
        })
        .collect();
    Ok(DecoratedGraph::new(g.n(), g.d(), vertices, edges, legs))
}

fn join(g: &DecoratedGraph, p: VertexId, h1: VertexId, h2: VertexId) -> Result<DecoratedGraph> {
    if h1 == h2 {
        return Err(invalid("join needs two distinct edges"));
    }
    let m1 = edge_degree(g, p, h1)?;
    let m2 = edge_degree(g, p, h2)?;
    let a1 = g.vertex(h1).and_then(|v| v.label.h_degree()).unwrap_or(0);
    let a2 = g.vertex(h2).and_then(|v| v.label.h_degree()).unwrap_or(0);
    let vertices = g
        .vertices()
        .iter()
        .filter(|v| v.id != h2)
        .map(|v| {
            if v.id == h1 {
                Vertex {
                    id: h1,
                    label: Label::H { degree: a1 + a2 },
                }
            } else {
                *v
            }
        })
        .collect();
    let mut edges = Vec::new();
    for e in g.edges() {
        if e.p == p && e.h == h1 {
            edges.push(Edge { degree: m1 + m2, ..*e });
        } else if e.p == p && e.h == h2 {
            continue;
        } else if e.h == h2 {
            edges.push(Edge { h: h1, ..*e });
        } else {
            edges.push(*e);
        }
    }
    let legs = g
        .legs()
        .iter()
        .map(|l| if l.vertex == h2 { Leg { vertex: h1, ..*l } } else { *l })
        .collect();
    Ok(DecoratedGraph::new(g.n(), g.d(), vertices, edges, legs))
}

fn transfer(g: &DecoratedGraph, p: VertexId, h: VertexId, marking: Marking) -> Result<DecoratedGraph> {
    edge_degree(g, p, h)?;
    if !g.legs().iter().any(|l| l.marking == marking && l.vertex == p) {
        return Err(invalid(format!("leg {marking} is not on P-vertex {p}")));
    }
    let legs = g
        .legs()
        .iter()
        .map(|l| if l.marking == marking { Leg { vertex: h, ..*l } } else { *l })
        .collect();
    Ok(DecoratedGraph::new(g.n(), g.d(), g.vertices().to_vec(), g.edges().to_vec(), legs))
}

/// Ordered compositions of `total` into `k` positive parts.
fn positive_compositions(total: u32, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    fn rec(rest: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 0 {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for x in 1..=rest.saturating_sub(k as u32 - 1) {
            cur.push(x);
            rec(rest - x, k - 1, cur, out);
            cur.pop();
        }
    }
    rec(total, k, &mut Vec::new(), &mut out);
    out
}

/// Every syntactically admissible step on `g`, before deduplication.
pub fn candidate_moves(g: &DecoratedGraph) -> Vec<MoveStep> {
    let mut out = Vec::new();
    for e in g.edges() {
        let others: Vec<PFlag> = other_flags(g, e.p, e.h).into_iter().collect();
        let has_other_edges = others.iter().any(|f| matches!(f, PFlag::Edge { .. }));
        if !has_other_edges {
            out.push(MoveStep::Split {
                p: e.p,
                h: e.h,
                degrees: vec![],
                internal_degree: e.degree,
                blocks: vec![],
            });
        }
        for k in 1..=e.degree as usize {
            for d0 in 0..=(e.degree - k as u32) {
                if k == 1 && d0 == 0 {
                    continue;
                }
                for degrees in positive_compositions(e.degree - d0, k) {
                    let total = (k as u64).pow(others.len() as u32);
                    for code in 0..total {
                        let mut blocks = vec![Vec::new(); k];
                        let mut c = code;
                        for &f in &others {
                            blocks[(c % k as u64) as usize].push(f);
                            c /= k as u64;
                        }
                        out.push(MoveStep::Split {
                            p: e.p,
                            h: e.h,
                            degrees: degrees.clone(),
                            internal_degree: d0,
                            blocks,
                        });
                    }
                }
            }
        }
    }
    for v in g.vertices().iter().filter(|v| v.label.is_p()) {
        let hs: Vec<VertexId> = g.edges_at(v.id).map(|e| e.h).collect();
        for (i, &h1) in hs.iter().enumerate() {
            for &h2 in &hs[i + 1..] {
                out.push(MoveStep::Join { p: v.id, h1, h2 });
            }
            for marking in g.legs_at(v.id) {
                out.push(MoveStep::Transfer { p: v.id, h: h1, marking });
            }
        }
    }
    out
}

/// A successor graph in canonical form with one step producing it from the
/// canonical form of the source.
#[derive(Debug, Clone)]
pub struct Successor {
    pub step: MoveStep,
    pub key: CanonicalKey,
    pub graph: DecoratedGraph,
}

/// Successors of `g` up to isomorphism. Steps strictly increasing `length`
/// only; a step whose increment is not positive is not an order relation.
pub fn successors(g: &DecoratedGraph, r: u32) -> Result<Vec<Successor>> {
    successors_with_ceiling(g, r, DEFAULT_CEILING)
}

pub fn successors_with_ceiling(g: &DecoratedGraph, r: u32, ceiling: usize) -> Result<Vec<Successor>> {
    let (_, source) = canonical_form(g);
    let mut found: BTreeMap<CanonicalKey, Successor> = BTreeMap::new();
    for step in candidate_moves(&source) {
        if expected_increment(&source, &step) < 1 {
            continue;
        }
        let out = apply_move(&source, &step)?;
        if !validate(&out, r).is_ok() {
            continue;
        }
        let (key, graph) = canonical_form(&out);
        found.entry(key.clone()).or_insert(Successor { step, key, graph });
        if found.len() > ceiling {
            return Err(Error::ResourceLimit {
                n: g.n(),
                r,
                d: g.d(),
                ceiling,
            });
        }
    }
    Ok(found.into_values().collect())
}

/// Memoised successor relation for one target dimension `r`.
pub struct Poset {
    r: u32,
    memo: Mutex<HashMap<CanonicalKey, Arc<Vec<Successor>>>>,
}

impl Poset {
    pub fn new(r: u32) -> Self {
        Self {
            r,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn successors(&self, g: &DecoratedGraph) -> Result<Arc<Vec<Successor>>> {
        let key = canonical_key(g);
        if let Some(hit) = self.memo.lock().expect("poset memo poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let value = Arc::new(successors(g, self.r)?);
        self.memo
            .lock()
            .expect("poset memo poisoned")
            .insert(key, value.clone());
        Ok(value)
    }

    /// A shortest move sequence from `high` to `low`, each step stated on the
    /// canonical form of the previous graph; `None` if `low` is not below.
    pub fn witness(&self, low: &DecoratedGraph, high: &DecoratedGraph) -> Result<Option<Vec<MoveStep>>> {
        let target = canonical_key(low);
        let bound = length(low);
        let (start_key, start) = canonical_form(high);
        if start_key == target {
            return Ok(Some(vec![]));
        }
        if length(&start) >= bound {
            return Ok(None);
        }
        let mut back: HashMap<CanonicalKey, (CanonicalKey, MoveStep)> = HashMap::new();
        let mut queue = VecDeque::from([(start_key.clone(), start)]);
        while let Some((key, g)) = queue.pop_front() {
            for s in self.successors(&g)?.iter() {
                if length(&s.graph) > bound || back.contains_key(&s.key) || s.key == start_key {
                    continue;
                }
                back.insert(s.key.clone(), (key.clone(), s.step.clone()));
                if s.key == target {
                    let mut steps = Vec::new();
                    let mut cur = target;
                    while cur != start_key {
                        let (prev, step) = back[&cur].clone();
                        steps.push(step);
                        cur = prev;
                    }
                    steps.reverse();
                    return Ok(Some(steps));
                }
                queue.push_back((s.key.clone(), s.graph.clone()));
            }
        }
        Ok(None)
    }

    /// `low ≤ high`: `low` is obtained from `high` by surgeries.
    pub fn leq(&self, low: &DecoratedGraph, high: &DecoratedGraph) -> Result<bool> {
        Ok(self.witness(low, high)?.is_some())
    }

    /// Every graph below `g`, including `g`.
    pub fn descendants(&self, g: &DecoratedGraph) -> Result<BTreeSet<CanonicalKey>> {
        let (key, start) = canonical_form(g);
        let mut seen = BTreeSet::from([key]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for s in self.successors(&x)?.iter() {
                if seen.insert(s.key.clone()) {
                    queue.push_back(s.graph.clone());
                }
            }
        }
        Ok(seen)
    }

    /// Shortest move distance from the maximal graph to each graph. Graphs
    /// that cannot be reached are reported, not dropped.
    pub fn level_function(&self, graphs: &[DecoratedGraph]) -> Result<BTreeMap<CanonicalKey, u32>> {
        let (levels, missing) = self.levels(graphs)?;
        if missing.is_empty() {
            Ok(levels)
        } else {
            Err(Error::Unreachable {
                unreachable: missing.iter().map(describe).collect(),
            })
        }
    }

    /// Levels of the reachable graphs plus the unreachable ones.
    pub fn levels(&self, graphs: &[DecoratedGraph]) -> Result<(BTreeMap<CanonicalKey, u32>, Vec<DecoratedGraph>)> {
        let Some(first) = graphs.first() else {
            return Ok((BTreeMap::new(), vec![]));
        };
        let (root_key, root) = canonical_form(&maximal_graph(first.n(), first.d()));
        let wanted: BTreeSet<CanonicalKey> = graphs.iter().map(canonical_key).collect();
        let mut dist = BTreeMap::from([(root_key, 0u32)]);
        let mut queue = VecDeque::from([(root, 0u32)]);
        while let Some((g, lv)) = queue.pop_front() {
            for s in self.successors(&g)?.iter() {
                if !dist.contains_key(&s.key) {
                    dist.insert(s.key.clone(), lv + 1);
                    queue.push_back((s.graph.clone(), lv + 1));
                }
            }
        }
        let levels = dist.into_iter().filter(|(k, _)| wanted.contains(k)).collect::<BTreeMap<_, _>>();
        let missing = graphs
            .iter()
            .filter(|g| !levels.contains_key(&canonical_key(g)))
            .cloned()
            .collect();
        Ok((levels, missing))
    }
}

pub fn leq(low: &DecoratedGraph, high: &DecoratedGraph, r: u32) -> Result<bool> {
    Poset::new(r).leq(low, high)
}

pub fn level_function(graphs: &[DecoratedGraph], r: u32) -> Result<BTreeMap<CanonicalKey, u32>> {
    Poset::new(r).level_function(graphs)
}

/// Compact one-line rendering, e.g. `P0[1] H1(0) H2(1)[2] | 0-1:1 0-2:1`.
pub fn describe(g: &DecoratedGraph) -> String {
    let mut parts = Vec::new();
    for v in g.vertices() {
        let mut s = match v.label {
            Label::P => format!("P{}", v.id),
            Label::H { degree } => format!("H{}({degree})", v.id),
        };
        let mut legs: Vec<Marking> = g.legs_at(v.id).collect();
        legs.sort_unstable();
        if !legs.is_empty() {
            let l: Vec<String> = legs.iter().map(ToString::to_string).collect();
            s.push_str(&format!("[{}]", l.join(",")));
        }
        parts.push(s);
    }
    let edges: Vec<String> = g.edges().iter().map(|e| format!("{}-{}:{}", e.p, e.h, e.degree)).collect();
    if edges.is_empty() {
        parts.join(" ")
    } else {
        format!("{} | {}", parts.join(" "), edges.join(" "))
    }
}

/// Outcome of the filterability checks on one enumeration.
#[derive(Debug, Clone, Default)]
pub struct FilterabilityReport {
    pub graphs: usize,
    pub moves_checked: usize,
    /// Moves whose length increment disagrees with its parameters or is not positive.
    pub monotonicity_failures: Vec<String>,
    /// Successors missing from the enumeration.
    pub closure_failures: Vec<String>,
    pub antisymmetry_failures: Vec<String>,
    /// Graphs not below the maximal graph.
    pub unreachable: Vec<String>,
    pub levels: BTreeMap<CanonicalKey, u32>,
}

impl FilterabilityReport {
    pub fn is_ok(&self) -> bool {
        self.monotonicity_failures.is_empty()
            && self.closure_failures.is_empty()
            && self.antisymmetry_failures.is_empty()
            && self.unreachable.is_empty()
    }
}

/// Runs every order check over a full enumeration.
pub fn check_filterable(poset: &Poset, graphs: &[DecoratedGraph]) -> Result<FilterabilityReport> {
    let keys: BTreeSet<CanonicalKey> = graphs.iter().map(canonical_key).collect();
    let mut report = FilterabilityReport {
        graphs: graphs.len(),
        ..Default::default()
    };
    for g in graphs {
        let (_, source) = canonical_form(g);
        for s in poset.successors(&source)?.iter() {
            report.moves_checked += 1;
            let delta = length(&s.graph) - length(&source);
            if delta != expected_increment(&source, &s.step) || delta < 1 {
                report.monotonicity_failures.push(format!(
                    "{} on {}: length change {delta}",
                    s.step.kind(),
                    describe(&source)
                ));
            }
            if !keys.contains(&s.key) {
                report.closure_failures.push(describe(&s.graph));
            }
        }
    }
    let mut below: BTreeMap<CanonicalKey, BTreeSet<CanonicalKey>> = BTreeMap::new();
    for g in graphs {
        below.insert(canonical_key(g), poset.descendants(g)?);
    }
    for (a, da) in &below {
        for b in da {
            if b != a && below.get(b).is_some_and(|db| db.contains(a)) {
                report.antisymmetry_failures.push(format!("{} <-> {}", a.to_hex(), b.to_hex()));
            }
        }
    }
    let (levels, missing) = poset.levels(graphs)?;
    report.levels = levels;
    report.unreachable = missing.iter().map(describe).collect();
    Ok(report)
}
