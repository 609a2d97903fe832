//! Boundary terms of the tangency recursion
//! `(αⱼψⱼ + evⱼ*H)·[M̄_α] = [M̄_{α+eⱼ}] + Σ (m₁⋯m_k / k!)·[D]`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohomology::expected_dimension;
use crate::error::{Error, Result};
use crate::graph::Marking;

/// Expected codimension `|α|` of the tangency space.
pub fn gathmann_codim(alpha: &[u32]) -> u32 {
    alpha.iter().sum()
}

/// One attached group: a tangency space of degree `degree` meeting the
/// internal component at a node of contact order `multiplicity`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermGroup {
    pub degree: u32,
    pub multiplicity: u32,
    pub markings: Vec<Marking>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GathmannBoundaryTerm {
    /// Degree of the internal component, which lies in `H`.
    pub internal_degree: u32,
    /// Markings on the internal component; always contains `j`.
    pub internal_markings: Vec<Marking>,
    pub groups: Vec<TermGroup>,
    /// `Π mᵢ / k!`, written `p/q`.
    #[serde(with = "rational_string")]
    pub coefficient: BigRational,
}

mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn alpha_sum(alpha: &[u32], markings: &[Marking]) -> u32 {
    markings.iter().map(|&m| alpha[m as usize - 1]).sum()
}

impl GathmannBoundaryTerm {
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Dimension of the glued boundary stratum: the internal space of maps
    /// to `H ≅ P^{r−1}`, the tangency spaces of the groups, and `r − 1`
    /// matching conditions per node.
    pub fn stratum_dimension(&self, alpha: &[u32], r: u32) -> i64 {
        let k = self.k() as i64;
        let (r, d0) = (i64::from(r), i64::from(self.internal_degree));
        let internal = r * d0 + (r - 1) + self.internal_markings.len() as i64 + k - 3;
        let groups: i64 = self
            .groups
            .iter()
            .map(|g| {
                let (di, mi) = (i64::from(g.degree), i64::from(g.multiplicity));
                let ni = g.markings.len() as i64 + 1;
                (r + 1) * di + r + ni - 3 - (i64::from(alpha_sum(alpha, &g.markings)) + mi)
            })
            .sum();
        internal + groups - k * (r - 1)
    }
}

/// Every way to put markings into the internal block (which holds `j`) and
/// `k` group blocks, with groups labelled.
fn labelled_placements(n: usize, j: usize, k: usize) -> Vec<Vec<usize>> {
    let slots = k + 1;
    let mut out = Vec::new();
    for code in 0..slots.pow(n as u32) {
        let mut place = vec![0usize; n];
        let mut c = code;
        for p in place.iter_mut() {
            *p = c % slots;
            c /= slots;
        }
        if place[j] == 0 {
            out.push(place);
        }
    }
    out
}

fn groups_for(
    alpha: &[u32],
    place: &[usize],
    k: usize,
    group_degree_total: u32,
    internal_absorbed: u32,
    d0: u32,
) -> Vec<Vec<TermGroup>> {
    let block = |g: usize| -> Vec<Marking> {
        (0..place.len())
            .filter(|&i| place[i] == g)
            .map(|i| i as Marking + 1)
            .collect()
    };
    let blocks: Vec<Vec<Marking>> = (1..=k).map(block).collect();
    let mut out = Vec::new();
    let mut degrees = Vec::new();
    positive_compositions(group_degree_total, k, &mut degrees, &mut |ds| {
        let Some(m_total) = internal_absorbed.checked_sub(d0) else {
            return;
        };
        let mut ms = Vec::new();
        positive_compositions(m_total, k, &mut ms, &mut |ms| {
            let groups: Vec<TermGroup> = (0..k)
                .map(|i| TermGroup {
                    degree: ds[i],
                    multiplicity: ms[i],
                    markings: blocks[i].clone(),
                })
                .collect();
            if groups
                .iter()
                .all(|g| alpha_sum(alpha, &g.markings) + g.multiplicity <= g.degree)
            {
                out.push(groups);
            }
        });
    });
    out
}

fn positive_compositions(total: u32, k: usize, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
    if k == 0 {
        if total == 0 {
            f(cur);
        }
        return;
    }
    for x in 1..=total.saturating_sub(k as u32 - 1) {
        cur.push(x);
        positive_compositions(total - x, k - 1, cur, f);
        cur.pop();
    }
}

fn check_inputs(alpha: &[u32], j: usize, d: u32) -> Result<()> {
    if j == 0 || j > alpha.len() {
        return Err(Error::InvalidArguments(format!("j = {j} outside 1..{}", alpha.len())));
    }
    if gathmann_codim(alpha) > d {
        return Err(Error::InvalidArguments(format!("|alpha| = {} exceeds d = {d}", gathmann_codim(alpha))));
    }
    Ok(())
}

/// Boundary terms with the groups labelled `1..k`; each labelling is a
/// separate entry carrying the same `Π mᵢ / k!`.
pub fn enumerate_boundary_terms_ordered(alpha: &[u32], j: usize, d: u32, r: u32) -> Result<Vec<GathmannBoundaryTerm>> {
    check_inputs(alpha, j, d)?;
    let n = alpha.len();
    let per_d0: Vec<Vec<GathmannBoundaryTerm>> = (0..=d)
        .into_par_iter()
        .map(|d0| {
            let mut out = Vec::new();
            // H is a point when r = 1: nothing of positive degree lies in it.
            if r <= 1 && d0 > 0 {
                return out;
            }
            for k in 1..=(d - d0) as usize {
                for place in labelled_placements(n, j - 1, k) {
                    let internal: Vec<Marking> = (0..n).filter(|&i| place[i] == 0).map(|i| i as Marking + 1).collect();
                    if d0 == 0 && internal.len() + k < 3 {
                        continue;
                    }
                    let absorbed = alpha_sum(alpha, &internal);
                    for groups in groups_for(alpha, &place, k, d - d0, absorbed, d0) {
                        let num: BigInt = groups.iter().map(|g| BigInt::from(g.multiplicity)).product();
                        out.push(GathmannBoundaryTerm {
                            internal_degree: d0,
                            internal_markings: internal.clone(),
                            groups,
                            coefficient: BigRational::new(num, factorial(k)),
                        });
                    }
                }
            }
            out
        })
        .collect();
    Ok(per_d0.into_iter().flatten().collect())
}

/// Boundary terms up to reordering of the groups.
pub fn enumerate_boundary_terms(alpha: &[u32], j: usize, d: u32, r: u32) -> Result<Vec<GathmannBoundaryTerm>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mut term in enumerate_boundary_terms_ordered(alpha, j, d, r)? {
        term.groups.sort();
        if seen.insert((term.internal_degree, term.internal_markings.clone(), term.groups.clone())) {
            out.push(term);
        }
    }
    Ok(out)
}

/// `−αⱼψⱼ − evⱼ*H` applied to `[M̄_α]`, kept symbolic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadTerm {
    pub psi_coefficient: i64,
    pub hyperplane_coefficient: i64,
    pub codimension: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionExpression {
    pub alpha: Vec<u32>,
    pub j: usize,
    pub d: u32,
    pub r: u32,
    pub lead: LeadTerm,
    /// `α + eⱼ` and the codimension of its tangency space.
    pub raised_alpha: Vec<u32>,
    pub raised_codimension: u32,
    pub corrections: Vec<GathmannBoundaryTerm>,
    /// Codimension of each correction stratum in `M̄_{0,n}(P^r, d)`.
    pub correction_codimensions: Vec<i64>,
}

pub fn recursion_expression(alpha: &[u32], j: usize, d: u32, r: u32) -> Result<RecursionExpression> {
    let corrections = enumerate_boundary_terms(alpha, j, d, r)?;
    let ambient = i64::from(expected_dimension(r, d, alpha.len() as u32));
    let correction_codimensions = corrections
        .iter()
        .map(|t| ambient - t.stratum_dimension(alpha, r))
        .collect();
    let mut raised_alpha = alpha.to_vec();
    raised_alpha[j - 1] += 1;
    Ok(RecursionExpression {
        alpha: alpha.to_vec(),
        j,
        d,
        r,
        lead: LeadTerm {
            psi_coefficient: -i64::from(alpha[j - 1]),
            hyperplane_coefficient: -1,
            codimension: gathmann_codim(alpha) + 1,
        },
        raised_codimension: gathmann_codim(&raised_alpha),
        raised_alpha,
        corrections,
        correction_codimensions,
    })
}

/// Violations of the term invariants, empty when the term is sound.
pub fn term_violations(term: &GathmannBoundaryTerm, alpha: &[u32], j: usize, d: u32, r: u32) -> Vec<String> {
    let mut out = Vec::new();
    let mut all: Vec<Marking> = term.internal_markings.clone();
    for g in &term.groups {
        all.extend(&g.markings);
    }
    all.sort_unstable();
    let expected: Vec<Marking> = (1..=alpha.len() as Marking).collect();
    if all != expected {
        out.push("blocks do not partition the markings".into());
    }
    if !term.internal_markings.contains(&(j as Marking)) {
        out.push(format!("marking {j} is not on the internal component"));
    }
    let total: u32 = term.internal_degree + term.groups.iter().map(|g| g.degree).sum::<u32>();
    if total != d {
        out.push(format!("degrees sum to {total}, expected {d}"));
    }
    let absorbed = alpha_sum(alpha, &term.internal_markings);
    let nodes: u32 = term.groups.iter().map(|g| g.multiplicity).sum();
    if term.internal_degree + nodes != absorbed {
        out.push("internal degree plus node orders differ from the absorbed contact orders".into());
    }
    let coefficient_ok = {
        let num: BigInt = term.groups.iter().map(|g| BigInt::from(g.multiplicity)).product();
        term.coefficient == BigRational::new(num, factorial(term.k()))
    };
    if !coefficient_ok || term.coefficient <= BigRational::from_integer(0.into()) {
        out.push(format!("coefficient {} is not the product of node orders over k!", term.coefficient));
    }
    let ambient = i64::from(expected_dimension(r, d, alpha.len() as u32));
    let target = ambient - i64::from(gathmann_codim(alpha)) - 1;
    let dim = term.stratum_dimension(alpha, r);
    if dim != target {
        out.push(format!("stratum dimension {dim}, expected {target}"));
    }
    out
}
