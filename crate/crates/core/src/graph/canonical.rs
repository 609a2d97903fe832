use std::fmt;

use super::{DecoratedGraph, Edge, Label, Leg, Tree, Vertex};

/// Isomorphism-class key. Equal keys iff the graphs are isomorphic by a
/// map preserving labels, degrees and marking labels.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(pub Vec<u8>);

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", self.to_hex())
    }
}

impl CanonicalKey {
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The tree rooted at its centre with children ordered by subtree code.
pub(crate) struct Rooted {
    pub tree: Tree,
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    /// Children sorted by `(edge degree, subtree code)`.
    pub children: Vec<Vec<usize>>,
    /// Self-delimiting code of the subtree below each vertex, including the
    /// degree of the edge to its parent.
    pub code: Vec<Vec<u8>>,
}

fn push_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_be_bytes());
}

impl Rooted {
    pub fn new(g: &DecoratedGraph) -> Self {
        let tree = Tree::new(g);
        let n = tree.len();
        let root = tree.center();
        let mut parent = vec![None; n];
        let mut parent_degree = vec![0u32; n];
        let mut order = vec![root];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &(nb, deg) in &tree.adj[v] {
                if !seen[nb] {
                    seen[nb] = true;
                    parent[nb] = Some(v);
                    parent_degree[nb] = deg;
                    order.push(nb);
                }
            }
            i += 1;
        }

        let mut code = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &v in order.iter().rev() {
            let mut kids: Vec<usize> = tree.adj[v]
                .iter()
                .map(|&(nb, _)| nb)
                .filter(|&nb| parent[nb] == Some(v))
                .collect();
            kids.sort_by(|&a, &b| code[a].cmp(&code[b]));
            let mut c = Vec::new();
            push_u32(&mut c, parent_degree[v]);
            match tree.labels[v] {
                Label::P => c.push(0),
                Label::H { degree } => {
                    c.push(1);
                    push_u32(&mut c, degree);
                }
            }
            push_u32(&mut c, tree.legs[v].len() as u32);
            for &m in &tree.legs[v] {
                push_u32(&mut c, m);
            }
            push_u32(&mut c, kids.len() as u32);
            for &k in &kids {
                c.extend_from_slice(&code[k]);
            }
            code[v] = c;
            children[v] = kids;
        }

        Self {
            tree,
            root,
            parent,
            children,
            code,
        }
    }

    /// Vertices in canonical preorder.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.tree.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        out
    }
}

pub fn canonical_key(g: &DecoratedGraph) -> CanonicalKey {
    if g.vertices().is_empty() {
        let mut bytes = Vec::new();
        push_u32(&mut bytes, g.n());
        push_u32(&mut bytes, g.d());
        return CanonicalKey(bytes);
    }
    let rooted = Rooted::new(g);
    let mut bytes = Vec::with_capacity(rooted.code[rooted.root].len() + 8);
    push_u32(&mut bytes, g.n());
    push_u32(&mut bytes, g.d());
    bytes.extend_from_slice(&rooted.code[rooted.root]);
    CanonicalKey(bytes)
}

/// Key plus a relabelled copy with ids `0..|V|` in canonical preorder, edges
/// in the same order and legs sorted by marking.
pub fn canonical_form(g: &DecoratedGraph) -> (CanonicalKey, DecoratedGraph) {
    let key = canonical_key(g);
    if g.vertices().is_empty() {
        return (key, g.clone());
    }
    let rooted = Rooted::new(g);
    let order = rooted.preorder();
    let mut new_id = vec![0u32; order.len()];
    for (i, &v) in order.iter().enumerate() {
        new_id[v] = i as u32;
    }
    let t = &rooted.tree;
    let vertices = order
        .iter()
        .map(|&v| Vertex {
            id: new_id[v],
            label: t.labels[v],
        })
        .collect();
    let mut edges = Vec::new();
    for &v in &order {
        if let Some(p) = rooted.parent[v] {
            let deg = t.adj[v].iter().find(|&&(nb, _)| nb == p).map(|&(_, d)| d).unwrap_or(0);
            let (pv, hv) = if t.labels[v].is_p() { (v, p) } else { (p, v) };
            edges.push(Edge {
                p: new_id[pv],
                h: new_id[hv],
                degree: deg,
            });
        }
    }
    let mut legs: Vec<Leg> = g
        .legs()
        .iter()
        .map(|l| {
            let idx = t.ids.iter().position(|&id| id == l.vertex).unwrap_or(0);
            Leg {
                marking: l.marking,
                vertex: new_id[idx],
            }
        })
        .collect();
    legs.sort();
    (key, DecoratedGraph::new(g.n(), g.d(), vertices, edges, legs))
}
