//! Finite-field point counts of `M_{0,m}` and `M̄_{0,m}`, interpolated to
//! Betti numbers. Deliberately shares no counting code with the graph side.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::cohomology::PoincarePoly;
use crate::error::{Error, Result};
use crate::poly::Poly;

/// `#M_{0,m}(F_q) = Π_{i=2}^{m−2} (q − i)`. Zero when `q ≤ m − 2`: the
/// factors are consecutive, so one of them vanishes.
pub fn count_open(q: u64, m: u32) -> u128 {
    assert!(m >= 3, "M_0,m needs m >= 3");
    (2..=m as u64 - 2).map(|i| q.saturating_sub(i) as u128).product()
}

/// Points of `M̄_{0,m}` over `F_q`: a sum over labelled stable trees of the
/// product of open counts at their vertices.
pub fn count_closed(q: u64, m: u32) -> u128 {
    assert!(m >= 3, "M̄_0,m needs m >= 3");
    // Root every tree at marking m; subtrees are indexed by their leaf sets.
    let full = (1u32 << (m - 1)) - 1;
    let mut memo = HashMap::new();
    rooted(q, full, &mut memo)
}

/// Weighted count of rooted stable trees whose leaves are `set` and whose
/// root vertex has a parent half-edge.
fn rooted(q: u64, set: u32, memo: &mut HashMap<u32, u128>) -> u128 {
    if set.count_ones() == 1 {
        return 1;
    }
    if let Some(&v) = memo.get(&set) {
        return v;
    }
    let mut all = Vec::new();
    partitions(set, &mut Vec::new(), &mut |parts: &[u32]| {
        if parts.len() >= 2 {
            all.push(parts.to_vec());
        }
    });
    let mut total = 0u128;
    for parts in all {
        let mut prod = count_open(q, parts.len() as u32 + 1);
        for b in parts {
            prod *= rooted(q, b, memo);
        }
        total += prod;
    }
    memo.insert(set, total);
    total
}

/// Calls `f` on every set partition of `set` (bitmask), blocks in order of
/// their lowest element.
fn partitions(set: u32, blocks: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
    if set == 0 {
        f(blocks);
        return;
    }
    let low = set & set.wrapping_neg();
    let rest = set & !low;
    // Every subset of `rest` joins `low` in its block.
    let mut sub = rest;
    loop {
        blocks.push(low | sub);
        partitions(rest & !sub, blocks, f);
        blocks.pop();
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|i| i * i <= p).all(|i| !p.is_multiple_of(i))
}

/// The first `count` primes that are at least `from`.
pub fn primes_from(from: u64, count: usize) -> Vec<u64> {
    (from..).filter(|&p| is_prime(p)).take(count).collect()
}

/// Per-prime counts and the interpolated Betti polynomial of `M̄_{0,m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MbarOracle {
    pub poly: PoincarePoly,
    /// `(q, count)` for the interpolation primes followed by the check prime.
    pub counts: Vec<(u64, u128)>,
}

/// Interpolates `count_closed(q, m)` at `m − 2` primes `q ≥ max(m, 5)`
/// and confirms the result at one more prime.
pub fn betti_from_counts(m: u32) -> Result<MbarOracle> {
    if m < 3 {
        return Ok(MbarOracle {
            poly: PoincarePoly::one(),
            counts: vec![],
        });
    }
    let samples = (m - 2) as usize;
    let primes = primes_from(u64::from(m).max(5), samples + 1);
    let counts: Vec<(u64, u128)> = primes.par_iter().map(|&q| (q, count_closed(q, m))).collect();
    let interpolated = interpolate(&counts[..samples]);
    let (check_q, check_count) = counts[samples];
    let predicted = interpolated.eval(&BigRational::from_integer(BigInt::from(check_q)));
    let counted = BigRational::from_integer(BigInt::from(check_count));
    if predicted != counted {
        return Err(Error::InterpolationMismatch {
            m,
            q: check_q,
            predicted: predicted.to_string(),
            counted: counted.to_string(),
        });
    }
    let mut betti = Vec::new();
    for c in interpolated.coeffs() {
        if !c.is_integer() || c.is_negative() {
            return Err(Error::InterpolationMismatch {
                m,
                q: check_q,
                predicted: format!("coefficient {c}"),
                counted: "a nonnegative integer".into(),
            });
        }
        betti.push(c.to_integer().to_u64().expect("small Betti number"));
    }
    Ok(MbarOracle {
        poly: PoincarePoly::new(betti),
        counts,
    })
}

/// Lagrange interpolation through `(q, count)` pairs.
fn interpolate(points: &[(u64, u128)]) -> Poly {
    let xs: Vec<BigRational> = points.iter().map(|&(q, _)| BigRational::from_integer(q.into())).collect();
    let mut out = Poly::zero();
    for (i, &(_, y)) in points.iter().enumerate() {
        let mut basis = Poly::one();
        let mut denom = BigRational::one();
        for (j, xj) in xs.iter().enumerate() {
            if i != j {
                basis = &basis * &Poly::linear_root(xj);
                denom *= &xs[i] - xj;
            }
        }
        let scale = BigRational::from_integer(BigInt::from(y)) / denom;
        out = out + basis.scale(&scale);
    }
    if out.coeffs().iter().all(Zero::is_zero) {
        Poly::zero()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Open count by listing configurations with the first three points
    /// fixed at 0, 1, ∞.
    fn open_by_listing(q: u64, m: u32) -> u128 {
        fn go(q: u64, left: u32, used: &mut Vec<u64>) -> u128 {
            if left == 0 {
                return 1;
            }
            let mut total = 0;
            for x in 0..=q {
                if !used.contains(&x) {
                    used.push(x);
                    total += go(q, left - 1, used);
                    used.pop();
                }
            }
            total
        }
        // Points of P^1(F_q) are 0..q-1 and q for ∞.
        go(q, m - 3, &mut vec![0, 1, q])
    }

    /// Closed count from the split description: a stable tree with marking
    /// m at the root is a family of pairwise nested-or-disjoint subsets of
    /// {1..m−1} of size 2..m−2.
    fn closed_by_splits(q: u64, m: u32) -> u128 {
        let k = m - 1;
        let splits: Vec<u32> = (1u32..(1 << k))
            .filter(|s| (2..=m - 2).contains(&s.count_ones()))
            .collect();
        let compatible = |a: u32, b: u32| a & b == 0 || a & b == a || a & b == b;
        let mut total = 0;
        let mut chosen = Vec::new();
        fn walk(
            i: usize,
            splits: &[u32],
            chosen: &mut Vec<u32>,
            total: &mut u128,
            q: u64,
            m: u32,
            compatible: &dyn Fn(u32, u32) -> bool,
        ) {
            if i == splits.len() {
                *total += weight(q, m, chosen);
                return;
            }
            walk(i + 1, splits, chosen, total, q, m, compatible);
            if chosen.iter().all(|&c| compatible(c, splits[i])) {
                chosen.push(splits[i]);
                walk(i + 1, splits, chosen, total, q, m, compatible);
                chosen.pop();
            }
        }
        fn weight(q: u64, m: u32, chosen: &[u32]) -> u128 {
            let all = (1u32 << (m - 1)) - 1;
            let mut nodes = chosen.to_vec();
            nodes.push(all);
            let mut prod = 1u128;
            for &s in &nodes {
                let children: Vec<u32> = chosen
                    .iter()
                    .copied()
                    .filter(|&c| c != s && c & s == c)
                    .filter(|&c| !chosen.iter().any(|&b| b != c && b != s && b & s == b && c & b == c))
                    .collect();
                let covered = children.iter().fold(0, |acc, c| acc | c);
                let loose = (s & !covered).count_ones();
                // The root carries marking m; the others have a parent edge.
                let valence = children.len() as u32 + loose + 1;
                prod *= open_by_listing(q, valence);
            }
            prod
        }
        walk(0, &splits, &mut chosen, &mut total, q, m, &compatible);
        total
    }

    #[test]
    fn open_counts() {
        assert_eq!(count_open(11, 3), 1);
        assert_eq!(count_open(5, 4), 3);
        assert_eq!(count_open(7, 5), 20);
        for q in [2, 3, 5, 7] {
            for m in 3..=6 {
                assert_eq!(count_open(q, m), open_by_listing(q, m), "q={q} m={m}");
            }
        }
    }

    #[test]
    fn closed_counts_match_closed_forms() {
        for q in [5u64, 7, 11] {
            assert_eq!(count_closed(q, 3), 1);
            assert_eq!(count_closed(q, 4), q as u128 + 1);
            assert_eq!(count_closed(q, 5), (q * q + 5 * q + 1) as u128);
        }
    }

    #[test]
    fn closed_counts_match_the_split_oracle() {
        for q in [5u64, 7] {
            for m in 3..=5 {
                assert_eq!(count_closed(q, m), closed_by_splits(q, m), "q={q} m={m}");
            }
        }
    }

    #[test]
    fn betti_numbers_of_small_mbar() {
        assert_eq!(betti_from_counts(4).unwrap().poly, PoincarePoly::new(vec![1, 1]));
        assert_eq!(betti_from_counts(5).unwrap().poly, PoincarePoly::new(vec![1, 5, 1]));
        assert_eq!(betti_from_counts(6).unwrap().poly, PoincarePoly::new(vec![1, 16, 16, 1]));
    }

    #[test]
    fn euler_characteristics_and_symmetry() {
        for (m, chi) in [(3, 1), (4, 2), (5, 7), (6, 34)] {
            let p = betti_from_counts(m).unwrap().poly;
            assert_eq!(p.eval_at_one(), chi);
            assert!(p.is_palindromic());
            assert_eq!(p.degree(), m.saturating_sub(3) as usize);
        }
    }

    #[test]
    fn partitions_of_three_elements() {
        let mut count = 0;
        partitions(0b111, &mut Vec::new(), &mut |_| count += 1);
        assert_eq!(count, 5);
    }
}
