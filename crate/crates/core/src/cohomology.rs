//! Poincaré polynomials of `M̄_{0,m}`, of fixed loci and of the stable-map
//! spaces, assembled cell by cell.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::enumeration::{enumerate_graphs_with_ceiling, factor_of, flag_map, Factor, DEFAULT_CEILING};
use crate::error::{Error, Result};
use crate::graph::{automorphism_elements, codimension, Automorphism, DecoratedGraph};
use crate::poset::describe;

/// Betti numbers `b₀, b₂, b₄, …` indexed by half-degree; no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoincarePoly(Vec<u64>);

impl PoincarePoly {
    pub fn new(mut coeffs: Vec<u64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn one() -> Self {
        Self(vec![1])
    }

    /// `1 + t² + … + t^{2k}`, the projective space `P^k`.
    pub fn projective(k: u32) -> Self {
        Self(vec![1; k as usize + 1])
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Half of the top real degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Betti number in real degree `m`; odd degrees vanish.
    pub fn betti(&self, m: u32) -> u64 {
        if m % 2 == 1 {
            return 0;
        }
        self.0.get(m as usize / 2).copied().unwrap_or(0)
    }

    pub fn eval_at_one(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn is_palindromic(&self) -> bool {
        self.0.iter().eq(self.0.iter().rev())
    }

    /// Multiplication by `t^{2k}`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = vec![0; k];
        c.extend_from_slice(&self.0);
        Self(c)
    }

    /// Substitution `t ↦ t^k`.
    pub fn substitute(&self, k: usize) -> Self {
        if self.is_zero() || k == 1 {
            return self.clone();
        }
        let mut c = vec![0; self.degree() * k + 1];
        for (i, &b) in self.0.iter().enumerate() {
            c[i * k] = b;
        }
        Self(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut c = vec![0; self.0.len().max(other.0.len())];
        for (i, &b) in self.0.iter().enumerate() {
            c[i] += b;
        }
        for (i, &b) in other.0.iter().enumerate() {
            c[i] += b;
        }
        Self::new(c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::default();
        }
        let mut c = vec![0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }
}

impl fmt::Debug for PoincarePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PoincarePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &b) in self.0.iter().enumerate().filter(|(_, &b)| b != 0) {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, b) {
                (0, _) => write!(f, "{b}")?,
                (1, 1) => write!(f, "t^2")?,
                (_, 1) => write!(f, "t^{}", 2 * i)?,
                _ => write!(f, "{b}*t^{}", 2 * i)?,
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MbarTable {
    #[allow(dead_code)]
    source: String,
    table: HashMap<String, Vec<u64>>,
}

const MBAR_TABLE: &str = include_str!("../data/mbar.json");
/// Largest `m` in the shipped table.
pub const MBAR_TABLE_MAX: u32 = 8;

fn parse_mbar_table(text: &str) -> Result<HashMap<u32, PoincarePoly>> {
    let table: MbarTable =
        serde_json::from_str(text).map_err(|e| Error::CacheCorruption(format!("M̄_0,m table: {e}")))?;
    let mut out = HashMap::new();
    for (key, coeffs) in table.table {
        let m: u32 = key
            .parse()
            .map_err(|_| Error::CacheCorruption(format!("M̄_0,m table: bad key {key:?}")))?;
        let poly = PoincarePoly::new(coeffs);
        if poly.coeffs().len() != m.saturating_sub(2) as usize || !poly.is_palindromic() {
            return Err(Error::CacheCorruption(format!("M̄_0,m table: entry {m} is malformed")));
        }
        out.insert(m, poly);
    }
    Ok(out)
}

fn mbar_table() -> Result<&'static HashMap<u32, PoincarePoly>> {
    static TABLE: OnceLock<std::result::Result<HashMap<u32, PoincarePoly>, String>> = OnceLock::new();
    TABLE
        .get_or_init(|| parse_mbar_table(MBAR_TABLE).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::CacheCorruption(e.clone()))
}

/// Betti generating function of `M̄_{0,m}`; the point for `m ≤ 3`.
pub fn poincare_mbar(m: u32) -> Result<PoincarePoly> {
    if m <= 3 {
        return Ok(PoincarePoly::one());
    }
    if m <= MBAR_TABLE_MAX {
        return mbar_table()?
            .get(&m)
            .cloned()
            .ok_or_else(|| Error::CacheCorruption(format!("M̄_0,m table has no entry for m = {m}")));
    }
    Ok(crate::oracles::betti_from_counts(m)?.poly)
}

/// Whether a permutation of flags is the identity.
fn is_trivial(perm: &[usize]) -> bool {
    perm.iter().enumerate().all(|(i, &j)| i == j)
}

/// Space of maps `M̄_{0,m}(P^s, e)`, with the degree-0 case split off.
fn map_space(engine: &PoincareEngine, s: u32, e: u32, m: u32) -> Result<PoincarePoly> {
    if e == 0 {
        Ok(poincare_mbar(m)?.mul(&PoincarePoly::projective(s)))
    } else {
        engine.poincare_moduli(s, e, m)
    }
}

/// Graded trace of a cyclic block of `k` copies of `factor` whose return
/// map acts on the factor's flags by `return_action`.
pub fn orbit_trace(
    engine: &PoincareEngine,
    factor: Factor,
    k: usize,
    return_action: &[usize],
    r: u32,
) -> Result<PoincarePoly> {
    let trivial = is_trivial(return_action);
    let base = match factor {
        Factor::Point => PoincarePoly::one(),
        Factor::Target => PoincarePoly::projective(r - 1),
        Factor::Curve { markings } if trivial || markings == 4 => poincare_mbar(markings)?,
        // M̄_{0,m} for m ≤ 4 has one-dimensional graded pieces, on which a
        // marking permutation acts trivially.
        Factor::Map { markings, degree: 0 } if trivial || markings <= 4 => map_space(engine, r - 1, 0, markings)?,
        Factor::Map { markings, degree } if trivial => map_space(engine, r - 1, degree, markings)?,
        _ => {
            return Err(Error::EquivariantDataRequired(format!(
                "{factor:?} with a nontrivial marking permutation {return_action:?}"
            )))
        }
    };
    Ok(base.substitute(k))
}

/// Graded trace of one automorphism on the fixed locus.
fn element_trace(engine: &PoincareEngine, g: &DecoratedGraph, aut: &Automorphism, r: u32) -> Result<PoincarePoly> {
    let mut out = PoincarePoly::one();
    let mut visited = std::collections::BTreeSet::new();
    for v in g.vertices() {
        if !visited.insert(v.id) {
            continue;
        }
        let mut power = aut.clone();
        let mut k = 1;
        let mut w = aut.image(v.id);
        while w != v.id {
            visited.insert(w);
            w = aut.image(w);
            power = aut.compose(&power);
            k += 1;
        }
        let action = flag_map(g, &power, v.id);
        let trace = orbit_trace(engine, factor_of(g, v), k, &action, r).map_err(|e| match e {
            Error::EquivariantDataRequired(msg) => {
                Error::EquivariantDataRequired(format!("graph {}: {msg}", describe(g)))
            }
            other => other,
        })?;
        out = out.mul(&trace);
    }
    Ok(out)
}

/// Engine state: in-memory memo plus an optional directory of cached
/// `(r, d, n)` results.
pub struct PoincareEngine {
    cache_dir: Option<PathBuf>,
    ceiling: usize,
    memo: Mutex<HashMap<(u32, u32, u32), PoincarePoly>>,
}

/// Environment variable naming the cache directory.
pub const CACHE_DIR_ENV: &str = "BBATLAS_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".bbatlas-cache";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheEntry {
    poly: PoincarePoly,
    graphs: usize,
    code_hash: String,
}

/// Hash of the sources whose behaviour determines cached polynomials.
pub fn code_hash() -> &'static str {
    static HASH: OnceLock<String> = OnceLock::new();
    HASH.get_or_init(|| {
        let mut h = Sha256::new();
        for src in [
            env!("CARGO_PKG_VERSION"),
            include_str!("cohomology.rs"),
            include_str!("enumeration.rs"),
            include_str!("graph/mod.rs"),
            include_str!("graph/canonical.rs"),
            include_str!("graph/automorphism.rs"),
            MBAR_TABLE,
        ] {
            h.update(src.as_bytes());
            h.update([0]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    })
}

impl Default for PoincareEngine {
    fn default() -> Self {
        Self::new(None)
    }
}

impl PoincareEngine {
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        Self {
            cache_dir,
            ceiling: DEFAULT_CEILING,
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// Cache directory from the environment, falling back to the default.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(CACHE_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR), PathBuf::from);
        Self::new(Some(dir))
    }

    pub fn with_ceiling(mut self, ceiling: usize) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn cache_dir(&self) -> Option<&Path> {
        self.cache_dir.as_deref()
    }

    fn cache_path(&self, r: u32, d: u32, n: u32) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|dir| dir.join(format!("Q_r{r}_d{d}_n{n}.json")))
    }

    /// A cached value, `None` when absent or written by other code.
    fn read_cache(&self, r: u32, d: u32, n: u32) -> Result<Option<PoincarePoly>> {
        let Some(path) = self.cache_path(r, d, n) else {
            return Ok(None);
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let entry: CacheEntry = serde_json::from_str(&text)
            .map_err(|e| Error::CacheCorruption(format!("{}: {e}", path.display())))?;
        Ok((entry.code_hash == code_hash()).then_some(entry.poly))
    }

    fn write_cache(&self, r: u32, d: u32, n: u32, poly: &PoincarePoly, graphs: usize) -> Result<()> {
        let Some(path) = self.cache_path(r, d, n) else {
            return Ok(());
        };
        let dir = path.parent().expect("cache file has a directory");
        std::fs::create_dir_all(dir)?;
        let entry = CacheEntry {
            poly: poly.clone(),
            graphs,
            code_hash: code_hash().to_string(),
        };
        // Write then rename so readers never see a partial file.
        let tmp = dir.join(format!(".Q_r{r}_d{d}_n{n}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, serde_json::to_vec(&entry).expect("cache entry serializes"))?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Invariant part of the fixed locus of `g`, by Burnside over `Aut_Γ`.
    pub fn poincare_fixed_locus(&self, g: &DecoratedGraph, r: u32) -> Result<PoincarePoly> {
        let elements = automorphism_elements(g, u64::MAX)?;
        let mut sum: Vec<u128> = Vec::new();
        for aut in &elements {
            let trace = element_trace(self, g, aut, r)?;
            if sum.len() < trace.coeffs().len() {
                sum.resize(trace.coeffs().len(), 0);
            }
            for (i, &b) in trace.coeffs().iter().enumerate() {
                sum[i] += u128::from(b);
            }
        }
        let order = elements.len() as u128;
        let mut out = Vec::with_capacity(sum.len());
        for s in sum {
            if s % order != 0 {
                return Err(Error::EquivariantDataRequired(format!(
                    "graph {}: Burnside sum not divisible by |Aut| = {order}",
                    describe(g)
                )));
            }
            out.push((s / order) as u64);
        }
        Ok(PoincarePoly::new(out))
    }

    /// Per-graph contributions `(graph, codimension, fixed-locus polynomial)`.
    pub fn contributions(&self, r: u32, d: u32, n: u32) -> Result<Vec<(DecoratedGraph, u32, PoincarePoly)>> {
        let graphs = enumerate_graphs_with_ceiling(n, r, d, self.ceiling)?;
        let results: Vec<Result<(DecoratedGraph, u32, PoincarePoly)>> = graphs
            .into_par_iter()
            .map(|g| {
                let c = codimension(&g)?;
                let p = self.poincare_fixed_locus(&g, r)?;
                Ok((g, c, p))
            })
            .collect();
        let mut out = Vec::new();
        let mut unsupported = Vec::new();
        for res in results {
            match res {
                Ok(x) => out.push(x),
                Err(Error::EquivariantDataRequired(msg)) => unsupported.push(msg),
                Err(e) => return Err(e),
            }
        }
        if !unsupported.is_empty() {
            return Err(Error::EquivariantDataRequired(unsupported.join("; ")));
        }
        Ok(out)
    }

    /// `Σ_Γ t^{2·codim Γ} · P(F_Γ)` over every fixed locus.
    pub fn poincare_moduli(&self, r: u32, d: u32, n: u32) -> Result<PoincarePoly> {
        if r == 0 {
            return Err(Error::InvalidArguments("target dimension r must be at least 1".into()));
        }
        if d == 0 {
            if n < 3 {
                return Err(Error::InvalidArguments("degree 0 needs n >= 3".into()));
            }
            return Ok(poincare_mbar(n)?.mul(&PoincarePoly::projective(r)));
        }
        if let Some(p) = self.memo.lock().expect("memo lock").get(&(r, d, n)) {
            return Ok(p.clone());
        }
        if let Some(p) = self.read_cache(r, d, n)? {
            self.memo.lock().expect("memo lock").insert((r, d, n), p.clone());
            return Ok(p);
        }
        let parts = self.contributions(r, d, n)?;
        let total = parts
            .iter()
            .fold(PoincarePoly::default(), |acc, (_, c, p)| acc.add(&p.shift(*c as usize)));
        self.write_cache(r, d, n, &total, parts.len())?;
        self.memo.lock().expect("memo lock").insert((r, d, n), total.clone());
        Ok(total)
    }

    pub fn betti(&self, r: u32, d: u32, n: u32, m: u32) -> Result<u64> {
        Ok(self.poincare_moduli(r, d, n)?.betti(m))
    }
}

/// `poincare_moduli` with an in-memory memo only.
pub fn poincare_moduli(r: u32, d: u32, n: u32) -> Result<PoincarePoly> {
    shared_engine().poincare_moduli(r, d, n)
}

pub fn poincare_fixed_locus(g: &DecoratedGraph, r: u32) -> Result<PoincarePoly> {
    shared_engine().poincare_fixed_locus(g, r)
}

pub fn betti(r: u32, d: u32, n: u32, m: u32) -> Result<u64> {
    shared_engine().betti(r, d, n, m)
}

fn shared_engine() -> &'static PoincareEngine {
    static ENGINE: OnceLock<PoincareEngine> = OnceLock::new();
    ENGINE.get_or_init(PoincareEngine::default)
}

/// Complex dimension `(r+1)d + r + n − 3` of `M̄_{0,n}(P^r, d)`.
pub fn expected_dimension(r: u32, d: u32, n: u32) -> u32 {
    ((r + 1) * d + r + n).saturating_sub(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn poly(c: &[u64]) -> PoincarePoly {
        PoincarePoly::new(c.to_vec())
    }

    #[test]
    fn poly_arithmetic() {
        let a = poly(&[1, 1]);
        assert_eq!(a.mul(&a), poly(&[1, 2, 1]));
        assert_eq!(a.substitute(2), poly(&[1, 0, 1]));
        assert_eq!(a.shift(2), poly(&[0, 0, 1, 1]));
        assert_eq!(poly(&[1, 2, 0]).coeffs(), &[1, 2]);
        assert_eq!(poly(&[1, 5, 1]).to_string(), "1 + 5*t^2 + t^4");
        assert_eq!(poly(&[1, 5, 1]).betti(3), 0);
    }

    #[test]
    fn shipped_table() {
        assert_eq!(poincare_mbar(3).unwrap(), poly(&[1]));
        assert_eq!(poincare_mbar(4).unwrap(), poly(&[1, 1]));
        assert_eq!(poincare_mbar(5).unwrap(), poly(&[1, 5, 1]));
        assert_eq!(poincare_mbar(6).unwrap(), poly(&[1, 16, 16, 1]));
        assert!(parse_mbar_table("{\"source\":\"x\",\"table\":{\"5\":[1,4]}}").is_err());
        assert!(parse_mbar_table("not json").is_err());
    }

    #[test]
    fn traces() {
        let engine = PoincareEngine::default();
        assert_eq!(orbit_trace(&engine, Factor::Target, 2, &[0], 2).unwrap(), poly(&[1, 0, 1]));
        assert_eq!(orbit_trace(&engine, Factor::Point, 3, &[1, 0], 2).unwrap(), poly(&[1]));
        let curve4 = Factor::Curve { markings: 4 };
        assert_eq!(orbit_trace(&engine, curve4, 1, &[1, 0, 2, 3], 2).unwrap(), poly(&[1, 1]));
        let curve5 = Factor::Curve { markings: 5 };
        assert_eq!(
            orbit_trace(&engine, curve5, 1, &[1, 0, 2, 3, 4], 2).unwrap_err().kind(),
            "equivariant_data_required"
        );
    }

    #[test]
    fn fixed_loci() {
        let engine = PoincareEngine::default();
        assert_eq!(engine.poincare_fixed_locus(&star(0, &[1, 1]), 2).unwrap(), poly(&[1, 1, 1]));
        for r in 1..=4 {
            assert_eq!(engine.poincare_fixed_locus(&star(0, &[1]), r).unwrap(), PoincarePoly::projective(r - 1));
        }
        assert_eq!(engine.poincare_fixed_locus(&DecoratedGraph::single_h(0, 1), 2).unwrap(), poly(&[1]));
    }

    #[test]
    fn small_moduli_spaces() {
        let engine = PoincareEngine::default();
        assert_eq!(engine.poincare_moduli(2, 1, 0).unwrap(), poly(&[1, 1, 1]));
        assert_eq!(engine.poincare_moduli(1, 2, 0).unwrap(), poly(&[1, 1, 1]));
        assert_eq!(engine.poincare_moduli(2, 2, 0).unwrap(), poly(&[1, 2, 3, 3, 2, 1]));
        assert_eq!(engine.poincare_moduli(3, 1, 0).unwrap(), poly(&[1, 1, 2, 1, 1]));
        assert_eq!(engine.poincare_moduli(1, 1, 1).unwrap(), poly(&[1, 1]));
        assert_eq!(engine.betti(2, 2, 0, 4).unwrap(), 3);
        assert_eq!(engine.betti(2, 1, 0, 2).unwrap(), 1);
        assert_eq!(engine.poincare_moduli(2, 0, 4).unwrap(), poly(&[1, 2, 2, 1]));
    }

    #[test]
    fn disk_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cold = PoincareEngine::new(Some(dir.path().to_path_buf()));
        let a = cold.poincare_moduli(2, 2, 0).unwrap();
        assert!(dir.path().join("Q_r2_d2_n0.json").exists());
        let warm = PoincareEngine::new(Some(dir.path().to_path_buf()));
        assert_eq!(warm.poincare_moduli(2, 2, 0).unwrap(), a);
        std::fs::write(dir.path().join("Q_r2_d2_n0.json"), "{").unwrap();
        let broken = PoincareEngine::new(Some(dir.path().to_path_buf()));
        assert_eq!(broken.poincare_moduli(2, 2, 0).unwrap_err().kind(), "cache_corruption");
    }
}
