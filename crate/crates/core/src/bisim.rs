//! Bisimulations for the guarded adjacent fragment on finite structures,
//! bounded by a maximal tuple length, and adjacent forest structures.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::formulas::Signature;
use crate::structures::{all_tuples, Structure};
use crate::words::{all_adjacent, generates, AdjacentFunction};

#[derive(Debug, Error)]
pub enum BisimError {
    #[error("tuples of different lengths: {0} and {1}")]
    Length(usize, usize),
    #[error("tuple length {0} exceeds the bound {1}")]
    Bound(usize, usize),
    #[error("more than {0} candidate pairs")]
    Capacity(usize),
    #[error("tuple {0:?} is not live")]
    NotLive(Vec<u32>),
    #[error("malformed forest: {0}")]
    Forest(String),
    #[error("element {0} outside the forest")]
    Element(u32),
}

/// Whether some surjective adjacent walk of `t` lies in a relation of `σ`.
pub fn sigma_alive(a: &Structure, t: &[u32], sigma: &Signature) -> bool {
    sigma.keys().any(|p| match a.relations.get(p) {
        None => false,
        Some(rel) => rel.tuples.iter().any(|u| {
            if t.is_empty() {
                u.is_empty()
            } else {
                !u.is_empty() && generates(t, u.as_slice()).is_some()
            }
        }),
    })
}

/// Whether `t` itself lies in a relation of `σ`.
pub fn sigma_live(a: &Structure, t: &[u32], sigma: &Signature) -> bool {
    sigma.keys().any(|p| a.holds(p, t))
}

/// Adjacent atomic type over `σ`: the adjacent atoms `R(x̄^f)` that hold and
/// the adjacent equalities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SigmaType {
    pub atoms: BTreeSet<(String, Vec<usize>)>,
    pub eqs: Vec<bool>,
}

struct TypeCache {
    walks: HashMap<(usize, usize), Vec<AdjacentFunction>>,
}

impl TypeCache {
    fn new() -> Self {
        Self {
            walks: HashMap::new(),
        }
    }

    fn atp(&mut self, a: &Structure, t: &[u32], sigma: &Signature) -> SigmaType {
        let k = t.len();
        let mut atoms = BTreeSet::new();
        for (p, &m) in sigma {
            let fs = self
                .walks
                .entry((m, k))
                .or_insert_with(|| if k == 0 { Vec::new() } else { all_adjacent(m, k) });
            if m == 0 {
                if a.holds(p, &[]) {
                    atoms.insert((p.clone(), Vec::new()));
                }
                continue;
            }
            for f in fs.iter() {
                let w: Vec<u32> = f.values.iter().map(|&i| t[i - 1]).collect();
                if a.holds(p, &w) {
                    atoms.insert((p.clone(), f.values.clone()));
                }
            }
        }
        SigmaType {
            atoms,
            eqs: t.windows(2).map(|w| w[0] == w[1]).collect(),
        }
    }
}

pub fn sigma_type(a: &Structure, t: &[u32], sigma: &Signature) -> SigmaType {
    TypeCache::new().atp(a, t, sigma)
}

/// A set of tuple pairs with a length bound.
#[derive(Debug, Clone, Default, Serialize)]
pub struct TupleRelation {
    pub bound: usize,
    pub pairs: BTreeSet<(Vec<u32>, Vec<u32>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    AtomicHarmony,
    Forth,
    Back,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub condition: Condition,
    /// The infix and extension that could not be matched (forth/back).
    pub witness: Option<Vec<u32>>,
}

struct Side {
    /// σ-alive tuples of length `1..=L`, grouped by length.
    alive: Vec<Vec<Vec<u32>>>,
    alive_set: HashSet<Vec<u32>>,
}

impl Side {
    fn new(s: &Structure, sigma: &Signature, bound: usize) -> Self {
        let mut alive = vec![Vec::new(); bound + 1];
        let mut alive_set = HashSet::new();
        for len in 0..=bound {
            for t in all_tuples(s.domain_size, len) {
                if sigma_alive(s, &t, sigma) {
                    alive[len].push(t.to_vec());
                    alive_set.insert(t.to_vec());
                }
            }
        }
        Self {
            alive,
            alive_set,
        }
    }

    /// Alive tuples of length at most the bound that start with `prefix`.
    fn extensions<'b>(&'b self, prefix: &'b [u32]) -> impl Iterator<Item = &'b Vec<u32>> + 'b {
        self.alive[prefix.len()..]
            .iter()
            .flatten()
            .filter(move |t| t.starts_with(prefix))
    }
}

fn infixes(len: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len).flat_map(move |i| (i + 1..=len).map(move |j| (i, j)))
}

/// Validate atomic harmony, forth and back for every pair of `Z`, with
/// extensions up to the bound of `Z`.
pub fn check_bisimulation(
    z: &TupleRelation,
    a: &Structure,
    b: &Structure,
    sigma: &Signature,
) -> Result<(), Violation> {
    let la = Side::new(a, sigma, z.bound);
    let lb = Side::new(b, sigma, z.bound);
    let mut cache = TypeCache::new();
    let mut right_of: HashMap<&[u32], Vec<&[u32]>> = HashMap::new();
    let mut left_of: HashMap<&[u32], Vec<&[u32]>> = HashMap::new();
    for (c, d) in &z.pairs {
        right_of.entry(c).or_default().push(d);
        left_of.entry(d).or_default().push(c);
    }
    for (c, d) in &z.pairs {
        let violation = |condition, witness| Violation {
            left: c.clone(),
            right: d.clone(),
            condition,
            witness,
        };
        if c.len() != d.len()
            || !la.alive_set.contains(c)
            || !lb.alive_set.contains(d)
            || cache.atp(a, c, sigma) != cache.atp(b, d, sigma)
        {
            return Err(violation(Condition::AtomicHarmony, None));
        }
        for (i, j) in infixes(c.len()) {
            let (ci, di) = (&c[i..j], &d[i..j]);
            for ext in la.extensions(ci) {
                let ok = right_of.get(ext.as_slice()).is_some_and(|rs| {
                    rs.iter().any(|r| r.starts_with(di) && lb.alive_set.contains(*r))
                });
                if !ok {
                    return Err(violation(Condition::Forth, Some(ext.clone())));
                }
            }
            for ext in lb.extensions(di) {
                let ok = left_of.get(ext.as_slice()).is_some_and(|ls| {
                    ls.iter().any(|l| l.starts_with(ci) && la.alive_set.contains(*l))
                });
                if !ok {
                    return Err(violation(Condition::Back, Some(ext.clone())));
                }
            }
        }
    }
    Ok(())
}

pub const DEFAULT_PAIR_CAP: usize = 1 << 22;

/// The largest bounded bisimulation, if it relates `ā` and `b̄`.
pub fn greatest_bisimulation(
    a: &Structure,
    abar: &[u32],
    b: &Structure,
    bbar: &[u32],
    sigma: &Signature,
    bound: usize,
) -> Result<Option<TupleRelation>, BisimError> {
    greatest_bisimulation_with(a, abar, b, bbar, sigma, bound, DEFAULT_PAIR_CAP)
}

pub fn greatest_bisimulation_with(
    a: &Structure,
    abar: &[u32],
    b: &Structure,
    bbar: &[u32],
    sigma: &Signature,
    bound: usize,
    cap: usize,
) -> Result<Option<TupleRelation>, BisimError> {
    if abar.len() != bbar.len() {
        return Err(BisimError::Length(abar.len(), bbar.len()));
    }
    if abar.len() > bound {
        return Err(BisimError::Bound(abar.len(), bound));
    }
    let la = Side::new(a, sigma, bound);
    let lb = Side::new(b, sigma, bound);
    let mut cache = TypeCache::new();
    // Candidate pairs: same length and atomic type.
    let mut z: HashSet<(Vec<u32>, Vec<u32>)> = HashSet::new();
    for len in 0..=bound {
        let mut by_type: HashMap<SigmaType, Vec<&Vec<u32>>> = HashMap::new();
        for t in &lb.alive[len] {
            by_type.entry(cache.atp(b, t, sigma)).or_default().push(t);
        }
        for c in &la.alive[len] {
            if let Some(ds) = by_type.get(&cache.atp(a, c, sigma)) {
                for d in ds {
                    z.insert((c.clone(), (*d).clone()));
                    if z.len() > cap {
                        return Err(BisimError::Capacity(cap));
                    }
                }
            }
        }
    }
    loop {
        let mut right_of: HashMap<&[u32], Vec<&[u32]>> = HashMap::new();
        let mut left_of: HashMap<&[u32], Vec<&[u32]>> = HashMap::new();
        for (c, d) in &z {
            right_of.entry(c).or_default().push(d);
            left_of.entry(d).or_default().push(c);
        }
        let mut dead = Vec::new();
        for (c, d) in &z {
            let ok = infixes(c.len()).all(|(i, j)| {
                let (ci, di) = (&c[i..j], &d[i..j]);
                la.extensions(ci).all(|ext| {
                    right_of
                        .get(ext.as_slice())
                        .is_some_and(|rs| rs.iter().any(|r| r.starts_with(di)))
                }) && lb.extensions(di).all(|ext| {
                    left_of
                        .get(ext.as_slice())
                        .is_some_and(|ls| ls.iter().any(|l| l.starts_with(ci)))
                })
            });
            if !ok {
                dead.push((c.clone(), d.clone()));
            }
        }
        if dead.is_empty() {
            break;
        }
        for p in dead {
            z.remove(&p);
        }
    }
    if !z.contains(&(abar.to_vec(), bbar.to_vec())) {
        return Ok(None);
    }
    Ok(Some(TupleRelation {
        bound,
        pairs: z.into_iter().collect(),
    }))
}

// ---------------------------------------------------------------------------
// Adjacent forest structures
// ---------------------------------------------------------------------------

/// A structure whose elements carry tree addresses. The first letter of an
/// address names the tree; the root of tree `t` has address `[t]`.
#[derive(Debug, Clone)]
pub struct AdjacentForest {
    pub structure: Structure,
    pub addresses: Vec<Vec<u32>>,
    by_address: BTreeMap<Vec<u32>, u32>,
}

impl AdjacentForest {
    pub fn new(structure: Structure, addresses: Vec<Vec<u32>>) -> Result<Self, BisimError> {
        if addresses.len() != structure.domain_size {
            return Err(BisimError::Forest(format!(
                "{} addresses for {} elements",
                addresses.len(),
                structure.domain_size
            )));
        }
        let mut by_address = BTreeMap::new();
        for (e, addr) in addresses.iter().enumerate() {
            if addr.is_empty() {
                return Err(BisimError::Forest(format!("element {e} has an empty address")));
            }
            if by_address.insert(addr.clone(), e as u32).is_some() {
                return Err(BisimError::Forest(format!("address {addr:?} used twice")));
            }
        }
        for addr in &addresses {
            if addr.len() > 1 && !by_address.contains_key(&addr[..addr.len() - 1]) {
                return Err(BisimError::Forest(format!("address {addr:?} has no parent")));
            }
        }
        Ok(Self {
            structure,
            addresses,
            by_address,
        })
    }

    pub fn address(&self, e: u32) -> Result<&[u32], BisimError> {
        self.addresses
            .get(e as usize)
            .map(|a| a.as_slice())
            .ok_or(BisimError::Element(e))
    }

    fn is_child(&self, parent: u32, child: u32) -> bool {
        let (p, c) = (&self.addresses[parent as usize], &self.addresses[child as usize]);
        c.len() == p.len() + 1 && c.starts_with(p)
    }

    /// Every σ-live tuple is a surjective walk on a descending path.
    pub fn validate(&self, sigma: &Signature) -> Result<(), BisimError> {
        for p in sigma.keys() {
            if let Some(rel) = self.structure.relations.get(p) {
                for t in &rel.tuples {
                    self.core_unchecked(t)?;
                }
            }
        }
        Ok(())
    }

    fn core_unchecked(&self, t: &[u32]) -> Result<Vec<u32>, BisimError> {
        for &e in t {
            self.address(e)?;
        }
        let mut elems: Vec<u32> = t.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        elems.sort_by_key(|&e| self.addresses[e as usize].len());
        for w in elems.windows(2) {
            if !self.is_child(w[0], w[1]) {
                return Err(BisimError::Forest(format!("{t:?} does not lie on a tree path")));
            }
        }
        if t.is_empty() || generates(&elems, t).is_none() {
            return Err(BisimError::Forest(format!("{t:?} is not a walk on its path")));
        }
        Ok(elems)
    }

    /// Element with the given address, if any.
    pub fn element(&self, addr: &[u32]) -> Option<u32> {
        self.by_address.get(addr).copied()
    }
}

/// The unique descending path on which the σ-live tuple `t` is a
/// surjective walk.
pub fn core(f: &AdjacentForest, t: &[u32], sigma: &Signature) -> Result<Vec<u32>, BisimError> {
    if !sigma_live(&f.structure, t, sigma) {
        return Err(BisimError::NotLive(t.to_vec()));
    }
    f.core_unchecked(t)
}

/// `c̄ ≺ d̄` in the lexicographic order lifted from addresses.
pub fn core_precedes(f: &AdjacentForest, c: &[u32], d: &[u32]) -> Result<bool, BisimError> {
    let ac: Vec<&[u32]> = c.iter().map(|&e| f.address(e)).collect::<Result<_, _>>()?;
    let ad: Vec<&[u32]> = d.iter().map(|&e| f.address(e)).collect::<Result<_, _>>()?;
    Ok(ac.cmp(&ad) == Ordering::Less)
}

/// A pair of cores violating property (♥), if any.
pub fn heart_counterexample(
    f: &AdjacentForest,
    sigma: &Signature,
) -> Result<Option<(Vec<u32>, Vec<u32>)>, BisimError> {
    let mut cores = BTreeSet::new();
    for p in sigma.keys() {
        if let Some(rel) = f.structure.relations.get(p) {
            for t in &rel.tuples {
                cores.insert(f.core_unchecked(t)?);
            }
        }
    }
    let cores: Vec<Vec<u32>> = cores.into_iter().collect();
    for c in &cores {
        for d in &cores {
            if !core_precedes(f, c, d)? || !c.iter().any(|e| d.contains(e)) {
                continue;
            }
            let ok = infixes(c.len()).any(|(i, j)| d.starts_with(&c[i..j]));
            if !ok {
                return Ok(Some((c.clone(), d.clone())));
            }
        }
    }
    Ok(None)
}

/// Property (♥) over all pairs of σ-live cores.
pub fn check_heart(f: &AdjacentForest, sigma: &Signature) -> Result<bool, BisimError> {
    Ok(heart_counterexample(f, sigma)?.is_none())
}

/// A random forest: `trees` trees of at most `nodes` nodes each, and
/// `tuples` random surjective walks on random descending paths for each
/// predicate of `sigma`.
pub fn random_forest<R: Rng>(
    rng: &mut R,
    trees: usize,
    nodes: usize,
    sigma: &Signature,
    tuples: usize,
) -> AdjacentForest {
    let mut addresses: Vec<Vec<u32>> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    for t in 0..trees {
        let root = addresses.len();
        addresses.push(vec![t as u32]);
        parent.push(None);
        let mut kids: HashMap<usize, u32> = HashMap::new();
        for _ in 1..nodes.max(1) {
            let p = rng.gen_range(root..addresses.len());
            let k = kids.entry(p).or_insert(0);
            let mut addr = addresses[p].clone();
            addr.push(*k);
            *k += 1;
            addresses.push(addr);
            parent.push(Some(p));
        }
    }
    let mut s = Structure::new(addresses.len());
    for (p, &m) in sigma {
        s.declare(p, m);
        if m == 0 {
            continue;
        }
        for _ in 0..tuples {
            // Path upwards from a random node, then a random surjective walk.
            let mut path = vec![rng.gen_range(0..addresses.len())];
            let len = rng.gen_range(1..=m);
            while path.len() < len {
                match parent[*path.last().unwrap()] {
                    Some(q) => path.push(q),
                    None => break,
                }
            }
            path.reverse();
            let k = path.len();
            if k > m {
                continue;
            }
            let walks: Vec<AdjacentFunction> = crate::words::surjective_adjacent(m, k);
            if walks.is_empty() {
                continue;
            }
            let f = &walks[rng.gen_range(0..walks.len())];
            let t: Vec<u32> = f.values.iter().map(|&i| path[i - 1] as u32).collect();
            s.insert(p, &t);
        }
    }
    AdjacentForest::new(s, addresses).expect("generated forest is well formed")
}
