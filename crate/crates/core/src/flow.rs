//! Limits `lim_{t→0} t·f` of the torus flow, computed combinatorially from
//! the dual graph of `f` and exactly from its coordinate polynomials.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    canonical_form, validate, DecoratedGraph, Edge, Label, Leg, Marking, Vertex, VertexId,
};
use crate::poly::{BinaryForm, Poly};
use crate::poset::{MoveStep, Poset};

/// A point where a transversal component meets `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contact {
    pub multiplicity: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marking: Option<Marking>,
}

/// An irreducible component of the domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    /// Mapped into `H` with the given degree; its markings stay on it.
    InH {
        degree: u32,
        #[serde(default)]
        markings: Vec<Marking>,
    },
    /// Not contained in `H`. `markings` are the marked points off `H`.
    Transversal {
        degree: u32,
        #[serde(default)]
        markings: Vec<Marking>,
        #[serde(default)]
        contacts: Vec<Contact>,
    },
}

impl Component {
    pub fn degree(&self) -> u32 {
        match self {
            Component::InH { degree, .. } | Component::Transversal { degree, .. } => *degree,
        }
    }

    fn contacts(&self) -> &[Contact] {
        match self {
            Component::InH { .. } => &[],
            Component::Transversal { contacts, .. } => contacts,
        }
    }
}

/// A node joining components `a` and `b`. When it maps to `H` on a
/// transversal side, that side names the contact point the node sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub a: usize,
    pub b: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_b: Option<usize>,
}

/// Dual graph of a stable map with its tangency data along `H`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransversalConfig {
    pub n: u32,
    pub d: u32,
    pub components: Vec<Component>,
    #[serde(default)]
    pub nodes: Vec<Node>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut x = x;
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

impl TransversalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(config_error("no components"));
        }
        let total: u32 = self.components.iter().map(Component::degree).sum();
        if total != self.d {
            return Err(config_error(format!("component degrees sum to {total}, expected {}", self.d)));
        }
        if self.d == 0 {
            return Err(config_error("total degree must be positive"));
        }
        let mut seen = BTreeSet::new();
        let mut record = |m: Marking| -> Result<()> {
            if m == 0 || m > self.n {
                return Err(config_error(format!("marking {m} outside 1..{}", self.n)));
            }
            if !seen.insert(m) {
                return Err(config_error(format!("marking {m} appears more than once")));
            }
            Ok(())
        };
        for (i, c) in self.components.iter().enumerate() {
            match c {
                Component::InH { markings, .. } => markings.iter().try_for_each(|&m| record(m))?,
                Component::Transversal {
                    degree,
                    markings,
                    contacts,
                } => {
                    markings.iter().try_for_each(|&m| record(m))?;
                    let sum: u32 = contacts.iter().map(|c| c.multiplicity).sum();
                    if sum != *degree {
                        return Err(config_error(format!(
                            "component {i}: contact multiplicities sum to {sum}, degree is {degree}"
                        )));
                    }
                    for ct in contacts {
                        if ct.multiplicity == 0 {
                            return Err(config_error(format!("component {i}: contact of multiplicity 0")));
                        }
                        if let Some(m) = ct.marking {
                            record(m)?;
                        }
                    }
                }
            }
        }
        if let Some(m) = (1..=self.n).find(|m| !seen.contains(m)) {
            return Err(config_error(format!("marking {m} is missing")));
        }

        if self.nodes.len() + 1 != self.components.len() {
            return Err(config_error("components and nodes do not form a tree"));
        }
        let mut uf = UnionFind::new(self.components.len());
        let mut used_contacts = BTreeSet::new();
        for (k, node) in self.nodes.iter().enumerate() {
            if node.a >= self.components.len() || node.b >= self.components.len() || node.a == node.b {
                return Err(config_error(format!("node {k} has invalid endpoints")));
            }
            if !uf.union(node.a, node.b) {
                return Err(config_error("components and nodes do not form a tree"));
            }
            for (comp, contact) in [(node.a, node.contact_a), (node.b, node.contact_b)] {
                let c = &self.components[comp];
                match (c, contact) {
                    (Component::InH { .. }, Some(_)) => {
                        return Err(config_error(format!("node {k} names a contact on an H component")))
                    }
                    (Component::Transversal { contacts, .. }, Some(ci)) => {
                        let Some(ct) = contacts.get(ci) else {
                            return Err(config_error(format!("node {k} names missing contact {ci}")));
                        };
                        if ct.marking.is_some() {
                            return Err(config_error(format!("node {k} sits at a marked contact")));
                        }
                        if !used_contacts.insert((comp, ci)) {
                            return Err(config_error(format!("contact {ci} of component {comp} used twice")));
                        }
                    }
                    _ => {}
                }
            }
            let on_h = |comp: usize, contact: Option<usize>| match &self.components[comp] {
                Component::InH { .. } => true,
                Component::Transversal { .. } => contact.is_some(),
            };
            if on_h(node.a, node.contact_a) != on_h(node.b, node.contact_b) {
                return Err(config_error(format!("node {k} lies on H on one side only")));
            }
        }
        Ok(())
    }
}

/// The dual graph of the limit: transversal components contract to
/// `P`-vertices, each contact becomes an edge of its multiplicity, and nodes
/// glue the resulting pieces.
pub fn limit_graph(cfg: &TransversalConfig) -> Result<DecoratedGraph> {
    cfg.validate()?;
    // Provisional vertices before gluing: one per component, one per contact.
    let mut labels: Vec<Label> = Vec::new();
    let mut legs: Vec<(Marking, usize)> = Vec::new();
    let mut edges: Vec<(usize, usize, u32)> = Vec::new();
    let mut comp_vertex = Vec::with_capacity(cfg.components.len());
    let mut contact_vertex: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, c) in cfg.components.iter().enumerate() {
        let v = labels.len();
        comp_vertex.push(v);
        match c {
            Component::InH { degree, markings } => {
                labels.push(Label::H { degree: *degree });
                legs.extend(markings.iter().map(|&m| (m, v)));
            }
            Component::Transversal { markings, contacts, .. } => {
                labels.push(Label::P);
                legs.extend(markings.iter().map(|&m| (m, v)));
                for (ci, ct) in contacts.iter().enumerate() {
                    let h = labels.len();
                    labels.push(Label::H { degree: 0 });
                    edges.push((v, h, ct.multiplicity));
                    if let Some(m) = ct.marking {
                        legs.push((m, h));
                    }
                    contact_vertex.insert((i, ci), h);
                }
            }
        }
    }

    let mut uf = UnionFind::new(labels.len());
    let endpoint = |comp: usize, contact: Option<usize>| match contact {
        Some(ci) => contact_vertex[&(comp, ci)],
        None => comp_vertex[comp],
    };
    for node in &cfg.nodes {
        uf.union(endpoint(node.a, node.contact_a), endpoint(node.b, node.contact_b));
    }

    let mut merged_degree: BTreeMap<usize, u32> = BTreeMap::new();
    let mut is_p: BTreeMap<usize, bool> = BTreeMap::new();
    for (v, label) in labels.iter().enumerate() {
        let root = uf.find(v);
        is_p.insert(root, label.is_p());
        if let Label::H { degree } = label {
            *merged_degree.entry(root).or_insert(0) += degree;
        }
    }
    let ids: BTreeMap<usize, VertexId> = is_p.keys().enumerate().map(|(i, &r)| (r, i as VertexId)).collect();
    let vertices = is_p
        .iter()
        .map(|(&root, &p)| Vertex {
            id: ids[&root],
            label: if p {
                Label::P
            } else {
                Label::H {
                    degree: merged_degree[&root],
                }
            },
        })
        .collect();
    let edges = edges
        .into_iter()
        .map(|(p, h, degree)| Edge {
            p: ids[&uf.find(p)],
            h: ids[&uf.find(h)],
            degree,
        })
        .collect();
    let mut legs: Vec<Leg> = legs
        .into_iter()
        .map(|(marking, v)| Leg {
            marking,
            vertex: ids[&uf.find(v)],
        })
        .collect();
    legs.sort();
    let g = DecoratedGraph::new(cfg.n, cfg.d, vertices, edges, legs);
    let report = crate::graph::validate_structure(&g);
    if !report.is_ok() {
        return Err(config_error(format!("glued limit is not a valid graph: {report}")));
    }
    Ok(g)
}

/// A configuration already fixed by the flow whose limit is `g` itself:
/// every edge becomes a totally ramified cover with a single contact.
pub fn config_of_fixed_graph(g: &DecoratedGraph) -> TransversalConfig {
    let mut components = Vec::new();
    let mut nodes = Vec::new();
    let mut h_component: BTreeMap<VertexId, usize> = BTreeMap::new();
    for v in g.vertices() {
        if let Label::H { degree } = v.label {
            h_component.insert(v.id, components.len());
            let mut markings: Vec<Marking> = g.legs_at(v.id).collect();
            markings.sort_unstable();
            components.push(Component::InH { degree, markings });
        }
    }
    for v in g.vertices().iter().filter(|v| v.label.is_p()) {
        let mut first: Option<usize> = None;
        for e in g.edges_at(v.id) {
            let idx = components.len();
            let markings = if first.is_none() {
                let mut m: Vec<Marking> = g.legs_at(v.id).collect();
                m.sort_unstable();
                m
            } else {
                vec![]
            };
            components.push(Component::Transversal {
                degree: e.degree,
                markings,
                contacts: vec![Contact {
                    multiplicity: e.degree,
                    marking: None,
                }],
            });
            nodes.push(Node {
                a: idx,
                b: h_component[&e.h],
                contact_a: Some(0),
                contact_b: None,
            });
            match first {
                None => first = Some(idx),
                Some(f) => nodes.push(Node {
                    a: f,
                    b: idx,
                    contact_a: None,
                    contact_b: None,
                }),
            }
        }
    }
    TransversalConfig {
        n: g.n(),
        d: g.d(),
        components,
        nodes,
    }
}

fn random_composition<R: Rng>(rng: &mut R, total: u32, parts: usize, min: u32) -> Option<Vec<u32>> {
    if parts == 0 {
        return (total == 0).then(Vec::new);
    }
    let reserve = min * parts as u32;
    if total < reserve {
        return None;
    }
    let mut free = total - reserve;
    let mut out = vec![min; parts];
    while free > 0 {
        out[rng.gen_range(0..parts)] += 1;
        free -= 1;
    }
    Some(out)
}

/// A random valid configuration for `(n, r, d)`; `None` only if every
/// attempt failed validation.
pub fn random_config<R: Rng>(rng: &mut R, n: u32, r: u32, d: u32) -> Option<TransversalConfig> {
    for _ in 0..1000 {
        let transversal = rng.gen_range(0..=d as usize);
        let in_h = rng.gen_range(0..=2usize);
        if transversal + in_h == 0 || (r <= 1 && transversal == 0) {
            continue;
        }
        if transversal as u32 > d {
            continue;
        }
        // Transversal components get degree at least 1; H components take
        // a share of the rest only when r >= 2.
        let mut degrees = vec![1u32; transversal];
        let mut h_degrees = vec![0u32; in_h];
        let receivers = transversal + if r >= 2 { in_h } else { 0 };
        for _ in 0..d - transversal as u32 {
            let i = rng.gen_range(0..receivers);
            if i < transversal {
                degrees[i] += 1;
            } else {
                h_degrees[i - transversal] += 1;
            }
        }
        let mut kinds: Vec<bool> = vec![true; transversal];
        kinds.extend(std::iter::repeat_n(false, in_h));
        kinds.shuffle(rng);
        let mut components = Vec::new();
        let (mut ti, mut hi) = (0, 0);
        for &t in &kinds {
            if t {
                let deg = degrees[ti];
                ti += 1;
                let parts = rng.gen_range(1..=deg as usize);
                let mults = random_composition(rng, deg, parts, 1)?;
                components.push(Component::Transversal {
                    degree: deg,
                    markings: vec![],
                    contacts: mults
                        .into_iter()
                        .map(|multiplicity| Contact {
                            multiplicity,
                            marking: None,
                        })
                        .collect(),
                });
            } else {
                components.push(Component::InH {
                    degree: h_degrees[hi],
                    markings: vec![],
                });
                hi += 1;
            }
        }
        if components.iter().map(Component::degree).sum::<u32>() != d {
            continue;
        }

        let mut free_contacts: Vec<Vec<usize>> = components.iter().map(|c| (0..c.contacts().len()).collect()).collect();
        for list in &mut free_contacts {
            list.shuffle(rng);
        }
        let mut nodes = Vec::new();
        let mut ok = true;
        for b in 1..components.len() {
            let a = rng.gen_range(0..b);
            let (ta, tb) = (kinds[a], kinds[b]);
            let node = match (ta, tb) {
                (false, false) => Node { a, b, contact_a: None, contact_b: None },
                (true, true) if rng.gen_bool(0.5) => Node { a, b, contact_a: None, contact_b: None },
                _ => {
                    let ca = if ta { free_contacts[a].pop() } else { None };
                    let cb = if tb { free_contacts[b].pop() } else { None };
                    if (ta && ca.is_none()) || (tb && cb.is_none()) {
                        ok = false;
                        break;
                    }
                    Node { a, b, contact_a: ca, contact_b: cb }
                }
            };
            nodes.push(node);
        }
        if !ok {
            continue;
        }
        for m in 1..=n {
            let c = rng.gen_range(0..components.len());
            let on_contact = rng.gen_bool(0.4) && !free_contacts[c].is_empty();
            match &mut components[c] {
                Component::InH { markings, .. } => markings.push(m),
                Component::Transversal { markings, contacts, .. } => {
                    if on_contact {
                        let ci = free_contacts[c].pop().expect("checked nonempty");
                        contacts[ci].marking = Some(m);
                    } else {
                        markings.push(m);
                    }
                }
            }
        }
        let cfg = TransversalConfig { n, d, components, nodes };
        if cfg.validate().is_ok() {
            return Some(cfg);
        }
    }
    None
}

/// A point of the domain line in homogeneous coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainPoint {
    pub z: BigRational,
    pub w: BigRational,
}

impl DomainPoint {
    pub fn affine(s: BigRational) -> Self {
        Self { z: s, w: BigRational::one() }
    }

    pub fn infinity() -> Self {
        Self {
            z: BigRational::one(),
            w: BigRational::zero(),
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.w.is_zero()
    }

    /// The affine coordinate `z / w`, `None` at infinity.
    pub fn coordinate(&self) -> Option<BigRational> {
        (!self.w.is_zero()).then(|| &self.z / &self.w)
    }

    fn same_as(&self, other: &DomainPoint) -> bool {
        &self.z * &other.w == &other.z * &self.w
    }
}

/// A marked point, or a Galois-conjugate set of marked points given by a
/// square-free affine factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkedPoint {
    Rational { marking: Marking, point: DomainPoint },
    Conjugate { markings: Vec<Marking>, factor: Poly },
}

/// An irreducible parametrised map `[f⁰ : … : fʳ]` with marked points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamMap {
    pub forms: Vec<BinaryForm>,
    pub marked: Vec<MarkedPoint>,
}

/// Where a zero of `f⁰` sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZeroLocation {
    Point(DomainPoint),
    /// Every root of this monic square-free factor, each with the same order.
    Factor(Poly),
}

/// The image in `H` of a zero of `f⁰`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HImage {
    /// `[0 : f¹(s) : … : fʳ(s)]`, scaled so the first nonzero entry is 1.
    Point(Vec<BigRational>),
    /// `fⁱ mod factor`, for `i = 1..r`, describing the images of all roots.
    Residues(Vec<Poly>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroRecord {
    pub location: ZeroLocation,
    /// Ramification order over `p` and over the image point.
    pub multiplicity: u32,
    /// Number of roots the record stands for.
    pub roots: u32,
    pub markings: Vec<Marking>,
    pub image: HImage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitMapData {
    pub zeros: Vec<ZeroRecord>,
    /// Set when `f⁰ ≡ 0`: the map lies in `H` and is its own limit.
    pub in_hyperplane: bool,
    /// Exponent `D = d!` of the base change that makes the limit family
    /// well defined over every zero at once.
    pub torus_lift: BigUint,
}

fn factorial(d: u32) -> BigUint {
    (1..=d).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

impl ParamMap {
    pub fn r(&self) -> u32 {
        self.forms.len().saturating_sub(1) as u32
    }

    pub fn d(&self) -> u32 {
        self.forms.first().map(BinaryForm::degree).unwrap_or(0)
    }

    pub fn n(&self) -> u32 {
        self.marked
            .iter()
            .map(|m| match m {
                MarkedPoint::Rational { .. } => 1,
                MarkedPoint::Conjugate { markings, .. } => markings.len() as u32,
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.forms.len() < 2 {
            return Err(config_error("a map to P^r needs r + 1 >= 2 forms"));
        }
        let d = self.d();
        if d == 0 {
            return Err(config_error("forms must have positive degree"));
        }
        if self.forms.iter().any(|f| f.degree() != d) {
            return Err(config_error("forms must share one degree"));
        }
        if self.forms.iter().all(BinaryForm::is_zero) {
            return Err(config_error("all forms vanish"));
        }
        let mut gcd = Poly::zero();
        for f in &self.forms {
            gcd = Poly::gcd(&gcd, f.affine());
        }
        let common_affine = gcd.degree().unwrap_or(0) as u32;
        let common_infinity = self.forms.iter().map(BinaryForm::order_at_infinity).min().unwrap_or(0);
        if common_affine + common_infinity > 0 {
            return Err(Error::CommonFactor {
                degree: common_affine + common_infinity,
            });
        }

        let mut markings = BTreeSet::new();
        for m in &self.marked {
            let list: Vec<Marking> = match m {
                MarkedPoint::Rational { marking, point } => {
                    if point.z.is_zero() && point.w.is_zero() {
                        return Err(config_error(format!("marking {marking} at [0:0]")));
                    }
                    vec![*marking]
                }
                MarkedPoint::Conjugate { markings, factor } => {
                    let deg = factor.degree().unwrap_or(0);
                    if deg == 0 || deg != markings.len() {
                        return Err(config_error("a conjugate record needs one marking per root"));
                    }
                    if Poly::gcd(factor, &factor.derivative()).degree() != Some(0) {
                        return Err(config_error("conjugate factor is not square-free"));
                    }
                    if !factor.rational_roots().is_empty() {
                        return Err(config_error("conjugate factor has a rational root; list it as a rational point"));
                    }
                    markings.clone()
                }
            };
            for mk in list {
                if mk == 0 || !markings.insert(mk) {
                    return Err(config_error(format!("marking {mk} repeated or zero")));
                }
            }
        }
        let n = markings.len() as u32;
        if let Some(m) = (1..=n).find(|m| !markings.contains(m)) {
            return Err(config_error(format!("marking {m} is missing")));
        }
        for (i, a) in self.marked.iter().enumerate() {
            for b in &self.marked[i + 1..] {
                let clash = match (a, b) {
                    (MarkedPoint::Rational { point: p, .. }, MarkedPoint::Rational { point: q, .. }) => p.same_as(q),
                    (MarkedPoint::Rational { point, .. }, MarkedPoint::Conjugate { factor, .. })
                    | (MarkedPoint::Conjugate { factor, .. }, MarkedPoint::Rational { point, .. }) => point
                        .coordinate()
                        .is_some_and(|s| factor.eval(&s).is_zero()),
                    (MarkedPoint::Conjugate { factor: f, .. }, MarkedPoint::Conjugate { factor: g, .. }) => {
                        Poly::gcd(f, g).degree() != Some(0)
                    }
                };
                if clash {
                    return Err(config_error("marked points are not distinct"));
                }
            }
        }
        Ok(())
    }

    fn image_at(&self, point: &DomainPoint) -> Vec<BigRational> {
        let mut q: Vec<BigRational> = vec![BigRational::zero()];
        q.extend(self.forms[1..].iter().map(|f| f.eval(&point.z, &point.w)));
        if let Some(first) = q.iter().find(|c| !c.is_zero()).cloned() {
            for c in &mut q {
                *c /= &first;
            }
        }
        q
    }

    /// Zeros of `f⁰` with multiplicities: rational points first (infinity
    /// last), then square-free factors without rational roots.
    pub fn zeros(&self) -> Vec<(ZeroLocation, u32)> {
        let f0 = &self.forms[0];
        let mut out = Vec::new();
        let mut irrational = Vec::new();
        for (i, part) in f0.affine().square_free_decomposition().iter().enumerate() {
            let mult = i as u32 + 1;
            let mut rest = part.clone();
            for root in part.rational_roots() {
                rest = rest.exact_div(&Poly::linear_root(&root));
                out.push((ZeroLocation::Point(DomainPoint::affine(root)), mult));
            }
            if rest.degree().unwrap_or(0) > 0 {
                irrational.push((ZeroLocation::Factor(rest.monic()), mult));
            }
        }
        let at_infinity = f0.order_at_infinity();
        if at_infinity > 0 {
            out.push((ZeroLocation::Point(DomainPoint::infinity()), at_infinity));
        }
        out.extend(irrational);
        out
    }

    /// The same map read as a one-component configuration.
    pub fn transversal_config(&self) -> Result<TransversalConfig> {
        let (graph, _) = limit_from_polynomials(self)?;
        let p = graph
            .vertices()
            .iter()
            .find(|v| v.label.is_p())
            .ok_or_else(|| config_error("map lies in H; it has no transversal component"))?
            .id;
        let mut markings: Vec<Marking> = graph.legs_at(p).collect();
        markings.sort_unstable();
        let contacts = graph
            .edges()
            .iter()
            .map(|e| Contact {
                multiplicity: e.degree,
                marking: graph.legs_at(e.h).next(),
            })
            .collect();
        Ok(TransversalConfig {
            n: self.n(),
            d: self.d(),
            components: vec![Component::Transversal {
                degree: self.d(),
                markings,
                contacts,
            }],
            nodes: vec![],
        })
    }
}

/// Exact limit of the flow of an irreducible parametrised map: a star with
/// one edge per zero of `f⁰`, of degree the order of vanishing.
pub fn limit_from_polynomials(pm: &ParamMap) -> Result<(DecoratedGraph, LimitMapData)> {
    pm.validate()?;
    let n = pm.n();
    let d = pm.d();
    if pm.forms[0].is_zero() {
        return Ok((
            DecoratedGraph::single_h(n, d),
            LimitMapData {
                zeros: vec![],
                in_hyperplane: true,
                torus_lift: factorial(d),
            },
        ));
    }

    let mut records: Vec<ZeroRecord> = Vec::new();
    for (location, multiplicity) in pm.zeros() {
        match location {
            ZeroLocation::Point(point) => {
                let image = HImage::Point(pm.image_at(&point));
                let markings = pm
                    .marked
                    .iter()
                    .filter_map(|m| match m {
                        MarkedPoint::Rational { marking, point: q } if q.same_as(&point) => Some(*marking),
                        _ => None,
                    })
                    .collect();
                records.push(ZeroRecord {
                    location: ZeroLocation::Point(point),
                    multiplicity,
                    roots: 1,
                    markings,
                    image,
                });
            }
            ZeroLocation::Factor(factor) => {
                // Peel off marked conjugate sets that divide this factor.
                let mut rest = factor.clone();
                for m in &pm.marked {
                    if let MarkedPoint::Conjugate { markings, factor: c } = m {
                        let g = Poly::gcd(&rest, c);
                        if g.degree() == Some(0) {
                            continue;
                        }
                        if g != c.monic() {
                            return Err(config_error(
                                "a conjugate marking shares only some roots with a zero factor of f0",
                            ));
                        }
                        rest = rest.exact_div(&g);
                        records.push(factor_record(pm, g, multiplicity, markings.clone()));
                    }
                }
                if rest.degree().unwrap_or(0) > 0 {
                    records.push(factor_record(pm, rest, multiplicity, vec![]));
                }
            }
        }
    }

    let mut vertices = vec![Vertex { id: 0, label: Label::P }];
    let mut edges = Vec::new();
    let mut legs = Vec::new();
    let mut on_zero: BTreeSet<Marking> = BTreeSet::new();
    for rec in &records {
        for root in 0..rec.roots as usize {
            let id = vertices.len() as VertexId;
            vertices.push(Vertex {
                id,
                label: Label::H { degree: 0 },
            });
            edges.push(Edge {
                p: 0,
                h: id,
                degree: rec.multiplicity,
            });
            if let Some(&m) = rec.markings.get(root) {
                legs.push(Leg { marking: m, vertex: id });
                on_zero.insert(m);
            }
        }
    }
    for m in 1..=n {
        if !on_zero.contains(&m) {
            legs.push(Leg { marking: m, vertex: 0 });
        }
    }
    legs.sort();
    let g = DecoratedGraph::new(n, d, vertices, edges, legs);
    Ok((
        g,
        LimitMapData {
            zeros: records,
            in_hyperplane: false,
            torus_lift: factorial(d),
        },
    ))
}

fn factor_record(pm: &ParamMap, factor: Poly, multiplicity: u32, markings: Vec<Marking>) -> ZeroRecord {
    let residues = pm.forms[1..].iter().map(|f| f.affine().rem(&factor)).collect();
    ZeroRecord {
        roots: factor.degree().unwrap_or(0) as u32,
        location: ZeroLocation::Factor(factor),
        multiplicity,
        markings,
        image: HImage::Residues(residues),
    }
}

fn small_rational<R: Rng>(rng: &mut R) -> BigRational {
    BigRational::new(rng.gen_range(-6i64..=6).into(), rng.gen_range(1i64..=3).into())
}

/// A random map whose `f⁰` splits into rational linear factors, with a random
/// marked subset of its zeros plus further marked points.
pub fn random_rational_map<R: Rng>(rng: &mut R, n: u32, r: u32, d: u32) -> Option<ParamMap> {
    for _ in 0..1000 {
        let parts = rng.gen_range(1..=d as usize);
        let mults = random_composition(rng, d, parts, 1)?;
        let mut zeros: Vec<DomainPoint> = Vec::new();
        for _ in 0..parts {
            let p = if rng.gen_bool(0.2) {
                DomainPoint::infinity()
            } else {
                DomainPoint::affine(small_rational(rng))
            };
            if zeros.iter().any(|z| z.same_as(&p)) {
                break;
            }
            zeros.push(p);
        }
        if zeros.len() != parts {
            continue;
        }
        let mut f0 = Poly::one();
        let mut f0_degree = 0;
        for (z, &m) in zeros.iter().zip(&mults) {
            if let Some(s) = z.coordinate() {
                for _ in 0..m {
                    f0 = &f0 * &Poly::linear_root(&s);
                    f0_degree += 1;
                }
            }
        }
        let _ = f0_degree;
        let lead = BigRational::from_integer(rng.gen_range(1i64..=3).into());
        let mut forms = vec![BinaryForm::from_affine(d, f0.scale(&lead))];
        for _ in 0..r {
            let coeffs: Vec<BigRational> = (0..=d)
                .map(|_| BigRational::from_integer(rng.gen_range(-3i64..=3).into()))
                .collect();
            forms.push(BinaryForm::new(coeffs));
        }
        let mut marked = Vec::new();
        let mut used: Vec<DomainPoint> = Vec::new();
        for marking in 1..=n {
            let point = if rng.gen_bool(0.5) {
                zeros[rng.gen_range(0..zeros.len())].clone()
            } else {
                DomainPoint::affine(small_rational(rng))
            };
            if used.iter().any(|u| u.same_as(&point)) {
                continue;
            }
            used.push(point.clone());
            marked.push(MarkedPoint::Rational { marking, point });
        }
        if marked.len() != n as usize {
            continue;
        }
        let pm = ParamMap { forms, marked };
        if pm.validate().is_ok() {
            return Some(pm);
        }
    }
    None
}

/// A boundary map of a tangency space: an internal component in `H` of
/// degree `d₀` with attached groups meeting it at nodes of multiplicity `mᵢ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// Contact orders `α` indexed by marking `1..n`.
    pub alpha: Vec<u32>,
    pub internal_degree: u32,
    /// Markings on the internal component.
    #[serde(default)]
    pub internal_markings: Vec<Marking>,
    #[serde(default)]
    pub groups: Vec<BoundaryGroup>,
}

/// One attached group: a configuration whose component `component` meets
/// the internal component at its unmarked contact `contact`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryGroup {
    #[serde(default)]
    pub component: usize,
    #[serde(default)]
    pub contact: usize,
    pub config: TransversalConfig,
}

impl BoundaryGroup {
    pub fn multiplicity(&self) -> Option<u32> {
        self.config
            .components
            .get(self.component)
            .and_then(|c| c.contacts().get(self.contact))
            .map(|c| c.multiplicity)
    }
}

impl BoundaryConfig {
    pub fn n(&self) -> u32 {
        self.alpha.len() as u32
    }

    pub fn d(&self) -> u32 {
        self.internal_degree + self.groups.iter().map(|g| g.config.d).sum::<u32>()
    }

    pub fn alpha_of(&self, m: Marking) -> u32 {
        self.alpha.get(m as usize - 1).copied().unwrap_or(0)
    }

    /// The whole curve as one configuration: internal component first.
    pub fn combined(&self) -> Result<TransversalConfig> {
        let n = self.n();
        let mut components = vec![Component::InH {
            degree: self.internal_degree,
            markings: self.internal_markings.clone(),
        }];
        let mut nodes = Vec::new();
        for (gi, group) in self.groups.iter().enumerate() {
            if group.config.n != n {
                return Err(config_error(format!("group {gi} uses n = {}, expected {n}", group.config.n)));
            }
            let offset = components.len();
            components.extend(group.config.components.iter().cloned());
            nodes.extend(group.config.nodes.iter().map(|nd| Node {
                a: nd.a + offset,
                b: nd.b + offset,
                ..*nd
            }));
            nodes.push(Node {
                a: 0,
                b: offset + group.component,
                contact_a: None,
                contact_b: Some(group.contact),
            });
        }
        Ok(TransversalConfig {
            n,
            d: self.d(),
            components,
            nodes,
        })
    }

    /// Checks the combined configuration, the contact orders on the
    /// attached groups and `d₀ + Σ mᵢ = Σ_{i∈I} αᵢ`.
    pub fn validate(&self) -> Result<()> {
        let combined = self.combined()?;
        // Groups carry their markings in their own configs with the shared n,
        // so each group alone is not expected to hold every marking.
        combined.validate()?;
        let mut multiplicities = Vec::new();
        for (gi, group) in self.groups.iter().enumerate() {
            let m = group
                .multiplicity()
                .ok_or_else(|| config_error(format!("group {gi} names a missing attaching contact")))?;
            if !matches!(group.config.components[group.component], Component::Transversal { .. }) {
                return Err(config_error(format!("group {gi} attaches through a component in H")));
            }
            multiplicities.push(m);
            for c in &group.config.components {
                for ct in c.contacts() {
                    if let Some(mk) = ct.marking {
                        if self.alpha_of(mk) != ct.multiplicity {
                            return Err(config_error(format!(
                                "marking {mk} has contact order {} but alpha is {}",
                                ct.multiplicity,
                                self.alpha_of(mk)
                            )));
                        }
                    }
                }
            }
        }
        let absorbed: u32 = self.internal_markings.iter().map(|&m| self.alpha_of(m)).sum();
        let lhs = self.internal_degree + multiplicities.iter().sum::<u32>();
        if lhs != absorbed {
            return Err(config_error(format!(
                "d0 + sum of node multiplicities = {lhs} differs from the absorbed contact orders {absorbed}"
            )));
        }
        Ok(())
    }
}

/// The generic limit for contact orders `α`: one `P`-vertex carrying the
/// markings with `αᵢ = 0`, and an edge of degree `αᵢ` ending at a leg `i`
/// for every positive entry.
pub fn generic_gamma(alpha: &[u32]) -> DecoratedGraph {
    let n = alpha.len() as u32;
    let d = alpha.iter().sum();
    let mut vertices = vec![Vertex { id: 0, label: Label::P }];
    let mut edges = Vec::new();
    let mut legs = Vec::new();
    for (i, &a) in alpha.iter().enumerate() {
        let marking = i as Marking + 1;
        if a == 0 {
            legs.push(Leg { marking, vertex: 0 });
        } else {
            let id = vertices.len() as VertexId;
            vertices.push(Vertex {
                id,
                label: Label::H { degree: 0 },
            });
            edges.push(Edge { p: 0, h: id, degree: a });
            legs.push(Leg { marking, vertex: id });
        }
    }
    legs.sort();
    DecoratedGraph::new(n, d, vertices, edges, legs)
}

/// The limit graph of a boundary map and a move sequence reaching it from
/// `gamma`. Each step is stated on the canonical form of the previous graph.
pub fn boundary_flow(cfg: &BoundaryConfig, gamma: &DecoratedGraph, r: u32) -> Result<(DecoratedGraph, Vec<MoveStep>)> {
    cfg.validate()?;
    let report = validate(gamma, r);
    if !report.is_ok() {
        return Err(Error::InvalidGraph(report));
    }
    if gamma.n() != cfg.n() || gamma.d() != cfg.d() {
        return Err(Error::InvalidArguments(format!(
            "gamma is for (n={}, d={}), the configuration for (n={}, d={})",
            gamma.n(),
            gamma.d(),
            cfg.n(),
            cfg.d()
        )));
    }
    let limit = limit_graph(&cfg.combined()?)?;
    let report = validate(&limit, r);
    if !report.is_ok() {
        return Err(Error::InvalidGraph(report));
    }
    let (_, limit) = canonical_form(&limit);
    match Poset::new(r).witness(&limit, gamma)? {
        Some(steps) => Ok((limit, steps)),
        None => Err(Error::WitnessNotFound {
            target: crate::poset::describe(&limit),
        }),
    }
}

/// Every one-level boundary configuration over `α` with at most
/// `max_groups` attached groups, each group a single transversal component
/// whose contacts are its attaching node and its own tangency markings.
/// The internal component is required to be stable; groups are unordered.
pub fn boundary_configs(alpha: &[u32], max_groups: usize, r: u32) -> Vec<BoundaryConfig> {
    let n = alpha.len();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for k in 0..=max_groups {
        // Slot 0 is the internal component, slots 1..=k the groups.
        let slots = k + 1;
        for code in 0..slots.pow(n as u32) {
            let mut place = vec![0usize; n];
            let mut c = code;
            for p in place.iter_mut() {
                *p = c % slots;
                c /= slots;
            }
            let internal: Vec<Marking> = (0..n).filter(|&i| place[i] == 0).map(|i| i as Marking + 1).collect();
            let absorbed: u32 = internal.iter().map(|&m| alpha[m as usize - 1]).sum();
            for d0 in 0..=absorbed {
                if r <= 1 && d0 > 0 {
                    continue;
                }
                if d0 == 0 && k + internal.len() < 3 {
                    continue;
                }
                let mut splits = Vec::new();
                compositions_positive(absorbed - d0, k, &mut Vec::new(), &mut splits);
                for ms in splits {
                    let mut groups: Vec<BoundaryGroup> =
                        (0..k).map(|g| single_component_group(alpha, &place, g + 1, ms[g])).collect();
                    groups.sort_by_key(|g| format!("{:?}", g.config));
                    let cfg = BoundaryConfig {
                        alpha: alpha.to_vec(),
                        internal_degree: d0,
                        internal_markings: internal.clone(),
                        groups,
                    };
                    if seen.insert(format!("{cfg:?}")) && cfg.validate().is_ok() {
                        out.push(cfg);
                    }
                }
            }
        }
    }
    out
}

fn single_component_group(alpha: &[u32], place: &[usize], slot: usize, attach: u32) -> BoundaryGroup {
    let mut contacts = vec![Contact {
        multiplicity: attach,
        marking: None,
    }];
    let mut markings = Vec::new();
    for (i, _) in place.iter().enumerate().filter(|&(_, &p)| p == slot) {
        let marking = i as Marking + 1;
        if alpha[i] > 0 {
            contacts.push(Contact {
                multiplicity: alpha[i],
                marking: Some(marking),
            });
        } else {
            markings.push(marking);
        }
    }
    let degree = contacts.iter().map(|c| c.multiplicity).sum();
    BoundaryGroup {
        component: 0,
        contact: 0,
        config: TransversalConfig {
            n: alpha.len() as u32,
            d: degree,
            components: vec![Component::Transversal {
                degree,
                markings,
                contacts,
            }],
            nodes: vec![],
        },
    }
}

fn compositions_positive(total: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if k == 0 {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for x in 1..=total {
        cur.push(x);
        compositions_positive(total - x, k - 1, cur, out);
        cur.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{enumerate_keyed, maximal_graph, DEFAULT_CEILING};
    use crate::graph::{canonical_key, fixtures::*};
    use num_bigint::BigInt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn transversal(degree: u32, markings: Vec<Marking>, contacts: &[(u32, Option<Marking>)]) -> Component {
        Component::Transversal {
            degree,
            markings,
            contacts: contacts
                .iter()
                .map(|&(multiplicity, marking)| Contact { multiplicity, marking })
                .collect(),
        }
    }

    #[test]
    fn generic_curve_flows_to_the_open_cell() {
        let cfg = TransversalConfig {
            n: 2,
            d: 3,
            components: vec![transversal(3, vec![1, 2], &[(1, None), (1, None), (1, None)])],
            nodes: vec![],
        };
        let g = limit_graph(&cfg).unwrap();
        assert_eq!(canonical_key(&g), canonical_key(&maximal_graph(2, 3)));
    }

    #[test]
    fn node_on_h_gives_two_edges_through_one_vertex() {
        let cfg = TransversalConfig {
            n: 0,
            d: 3,
            components: vec![transversal(1, vec![], &[(1, None)]), transversal(2, vec![], &[(2, None)])],
            nodes: vec![Node {
                a: 0,
                b: 1,
                contact_a: Some(0),
                contact_b: Some(0),
            }],
        };
        let g = limit_graph(&cfg).unwrap();
        assert_eq!(canonical_key(&g), canonical_key(&path(1, 2)));
    }

    #[test]
    fn component_in_h_is_unchanged() {
        let cfg = TransversalConfig {
            n: 2,
            d: 2,
            components: vec![Component::InH {
                degree: 2,
                markings: vec![1, 2],
            }],
            nodes: vec![],
        };
        assert_eq!(canonical_key(&limit_graph(&cfg).unwrap()), canonical_key(&DecoratedGraph::single_h(2, 2)));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_sum = TransversalConfig {
            n: 0,
            d: 2,
            components: vec![transversal(2, vec![], &[(1, None)])],
            nodes: vec![],
        };
        assert_eq!(limit_graph(&bad_sum).unwrap_err().kind(), "invalid_config");
        let one_sided = TransversalConfig {
            n: 0,
            d: 2,
            components: vec![transversal(1, vec![], &[(1, None)]), transversal(1, vec![], &[(1, None)])],
            nodes: vec![Node {
                a: 0,
                b: 1,
                contact_a: Some(0),
                contact_b: None,
            }],
        };
        assert!(limit_graph(&one_sided).is_err());
    }

    #[test]
    fn fixed_graphs_are_their_own_limits() {
        for r in 1..=2 {
            for g in enumerate_keyed(2, r, 3, DEFAULT_CEILING).unwrap().values() {
                let cfg = config_of_fixed_graph(g);
                assert_eq!(canonical_key(&limit_graph(&cfg).unwrap()), canonical_key(g));
            }
        }
    }

    #[test]
    fn random_configs_land_in_the_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, r, d) in [(0, 1, 2), (2, 2, 3), (1, 2, 1)] {
            let keys = enumerate_keyed(n, r, d, DEFAULT_CEILING).unwrap();
            for _ in 0..200 {
                let cfg = random_config(&mut rng, n, r, d).unwrap();
                let g = limit_graph(&cfg).unwrap();
                assert!(keys.contains_key(&canonical_key(&g)), "{cfg:?}");
            }
        }
    }

    #[test]
    fn polynomial_limit_of_a_conic() {
        // f = (z·w, z² + w²) on P^1.
        let pm = ParamMap {
            forms: vec![
                BinaryForm::new(vec![q(0), q(1), q(0)]),
                BinaryForm::new(vec![q(1), q(0), q(1)]),
            ],
            marked: vec![],
        };
        let (g, data) = limit_from_polynomials(&pm).unwrap();
        assert_eq!(canonical_key(&g), canonical_key(&star(0, &[1, 1])));
        assert_eq!(data.zeros.len(), 2);
        assert!(data.zeros.iter().all(|z| z.image == HImage::Point(vec![q(0), q(1)])));
        assert_eq!(data.torus_lift, BigUint::from(2u32));
    }

    #[test]
    fn total_ramification_and_marked_zero() {
        // f⁰ = z³, marked at z = 0 (the point [0:1]).
        let pm = ParamMap {
            forms: vec![
                BinaryForm::new(vec![q(0), q(0), q(0), q(1)]),
                BinaryForm::new(vec![q(1), q(0), q(0), q(0)]),
                BinaryForm::new(vec![q(0), q(1), q(0), q(2)]),
            ],
            marked: vec![MarkedPoint::Rational {
                marking: 1,
                point: DomainPoint::affine(q(0)),
            }],
        };
        let (g, _) = limit_from_polynomials(&pm).unwrap();
        let expected = DecoratedGraph::new(1, 3, vec![p(0), h(1, 0)], vec![e(0, 1, 3)], vec![leg(1, 1)]);
        assert_eq!(canonical_key(&g), canonical_key(&expected));
    }

    #[test]
    fn irrational_zeros_are_factor_records() {
        // f⁰ = (z² − 2w²)², f¹ = w⁴ + z⁴.
        let pm = ParamMap {
            forms: vec![
                BinaryForm::new(vec![q(4), q(0), q(-4), q(0), q(1)]),
                BinaryForm::new(vec![q(1), q(0), q(0), q(0), q(1)]),
            ],
            marked: vec![MarkedPoint::Conjugate {
                markings: vec![1, 2],
                factor: Poly::from_ints(&[-2, 0, 1]),
            }],
        };
        let (g, data) = limit_from_polynomials(&pm).unwrap();
        let expected = DecoratedGraph::new(
            2,
            4,
            vec![p(0), h(1, 0), h(2, 0)],
            vec![e(0, 1, 2), e(0, 2, 2)],
            vec![leg(1, 1), leg(2, 2)],
        );
        assert_eq!(canonical_key(&g), canonical_key(&expected));
        assert_eq!(data.zeros.len(), 1);
        assert_eq!(data.zeros[0].image, HImage::Residues(vec![Poly::from_ints(&[5])]));
    }

    #[test]
    fn common_factor_and_hyperplane_maps() {
        let pm = ParamMap {
            forms: vec![BinaryForm::new(vec![q(0), q(1)]), BinaryForm::new(vec![q(0), q(2)])],
            marked: vec![],
        };
        assert_eq!(limit_from_polynomials(&pm).unwrap_err().kind(), "common_factor");
        let in_h = ParamMap {
            forms: vec![BinaryForm::new(vec![q(0), q(0)]), BinaryForm::new(vec![q(1), q(2)]), BinaryForm::new(vec![q(3), q(1)])],
            marked: vec![],
        };
        let (g, data) = limit_from_polynomials(&in_h).unwrap();
        assert!(data.in_hyperplane);
        assert_eq!(g, DecoratedGraph::single_h(0, 1));
    }

    #[test]
    fn both_routes_agree_on_random_rational_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let pm = random_rational_map(&mut rng, 2, 2, 3).unwrap();
            let (g, _) = limit_from_polynomials(&pm).unwrap();
            let via_config = limit_graph(&pm.transversal_config().unwrap()).unwrap();
            assert_eq!(canonical_key(&g), canonical_key(&via_config));
        }
    }

    #[test]
    fn one_group_boundary_reaches_gamma() {
        let alpha = [2u32];
        let gamma = generic_gamma(&alpha);
        let cfg = BoundaryConfig {
            alpha: alpha.to_vec(),
            internal_degree: 1,
            internal_markings: vec![1],
            groups: vec![BoundaryGroup {
                component: 0,
                contact: 0,
                config: TransversalConfig {
                    n: 1,
                    d: 1,
                    components: vec![transversal(1, vec![], &[(1, None)])],
                    nodes: vec![],
                },
            }],
        };
        let (limit, steps) = boundary_flow(&cfg, &gamma, 2).unwrap();
        let expected = DecoratedGraph::new(1, 2, vec![p(0), h(1, 1)], vec![e(0, 1, 1)], vec![leg(1, 1)]);
        assert_eq!(canonical_key(&limit), canonical_key(&expected));
        assert!(!steps.is_empty());
    }

    #[test]
    fn conservation_is_enforced() {
        let cfg = BoundaryConfig {
            alpha: vec![2],
            internal_degree: 0,
            internal_markings: vec![1],
            groups: vec![BoundaryGroup {
                component: 0,
                contact: 0,
                config: TransversalConfig {
                    n: 1,
                    d: 1,
                    components: vec![transversal(1, vec![], &[(1, None)])],
                    nodes: vec![],
                },
            }],
        };
        assert_eq!(cfg.validate().unwrap_err().kind(), "invalid_config");
    }

    #[test]
    fn boundary_configs_for_double_tangency() {
        let cfgs = boundary_configs(&[2], 2, 2);
        // k = 0: d0 = 2. k = 1: d0 = 1, m = 1. k = 2: d0 = 0, m = (1, 1).
        assert_eq!(cfgs.len(), 3);
        for cfg in &cfgs {
            assert!(boundary_flow(cfg, &generic_gamma(&[2]), 2).is_ok());
        }
    }
}
