//! Adjacent types over restricted atom universes.
//!
//! A universe at level `k` lists the adjacent atoms `p(x̄^f)` with
//! `f: [1,m] → [1,k]` that are substitution instances of argument sequences
//! occurring in a reference formula. Only the equality pattern (kernel) of an
//! argument sequence matters for this, so universes are generated from a set
//! of kernels per predicate.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::formulas::{Formula, Pred};
use crate::structures::Structure;
use crate::words::{all_adjacent, DefectSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("tuple of length {found} for a universe at level {expected}")]
    Length { expected: usize, found: usize },
    #[error("atom {0} is outside the universe")]
    UnknownAtom(String),
    #[error("formula is not quantifier-free")]
    Quantified,
    #[error("bad range [{i},{j}] at level {k}")]
    Range { i: usize, j: usize, k: usize },
    #[error("inconsistent type")]
    Inconsistent,
    #[error("incremental type is not compatible with the defects {0}")]
    Incompatible(String),
    #[error("type enumeration exceeds the cap of {0}")]
    Capacity(usize),
}

/// The equality pattern of an argument list: first-occurrence numbering.
pub fn kernel(args: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    args.iter()
        .map(|a| match seen.iter().position(|s| s == a) {
            Some(i) => i,
            None => {
                seen.push(*a);
                seen.len() - 1
            }
        })
        .collect()
}

pub type Kernels = BTreeMap<Pred, BTreeSet<Vec<usize>>>;

/// Argument kernels of every atom in `f`.
pub fn kernels_of(f: &Formula) -> Kernels {
    let mut out: Kernels = BTreeMap::new();
    f.visit(&mut |g| {
        if let Formula::Atom(p, args) = g {
            out.entry(p.clone()).or_default().insert(kernel(args));
        }
    });
    out
}

fn compatible(g: &[usize], ker: &[usize]) -> bool {
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            if ker[i] == ker[j] && g[i] != g[j] {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct AtomUniverse {
    pub k: usize,
    pub with_equality: bool,
    /// `(p, args)` with 1-based argument variables.
    pub atoms: Vec<(Pred, Vec<usize>)>,
    /// Indices (into `atoms`) of the covering atoms, in order.
    pub covering: Vec<usize>,
    index: HashMap<(Pred, Vec<usize>), usize>,
}

impl PartialEq for AtomUniverse {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.with_equality == other.with_equality && self.atoms == other.atoms
    }
}

impl AtomUniverse {
    pub fn new(kernels: &Kernels, k: usize, with_equality: bool) -> Self {
        let mut atoms = Vec::new();
        for (p, kers) in kernels {
            let m = kers.iter().next().map_or(0, |v| v.len());
            for g in all_adjacent(m, k) {
                if kers.iter().any(|ker| compatible(&g.values, ker)) {
                    atoms.push((p.clone(), g.values));
                }
            }
        }
        let covering = atoms
            .iter()
            .enumerate()
            .filter(|(_, (_, args))| covers(args, k))
            .map(|(i, _)| i)
            .collect();
        let index = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Self {
            k,
            with_equality,
            atoms,
            covering,
            index,
        }
    }

    pub fn from_formula(f: &Formula, k: usize) -> Self {
        Self::new(&kernels_of(f), k, f.uses_equality())
    }

    pub fn index_of(&self, pred: &str, args: &[usize]) -> Option<usize> {
        self.index.get(&(Pred::from(pred), args.to_vec())).copied()
    }

    fn lookup(&self, pred: &Pred, args: &[usize]) -> Option<usize> {
        self.index.get(&(pred.clone(), args.to_vec())).copied()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn eq_slots(&self) -> usize {
        if self.with_equality {
            self.k.saturating_sub(1)
        } else {
            0
        }
    }

    pub fn atom_formula(&self, i: usize) -> Formula {
        let (p, args) = &self.atoms[i];
        Formula::Atom(p.clone(), args.clone())
    }
}

fn covers(args: &[usize], k: usize) -> bool {
    (1..=k).all(|v| args.contains(&v))
}

/// Universes at levels `0..=max` built from one kernel set, with cached
/// type enumerations.
#[derive(Debug, Clone)]
pub struct TypeSpace {
    pub kernels: Kernels,
    pub with_equality: bool,
    pub levels: Vec<AtomUniverse>,
}

impl TypeSpace {
    pub fn new(kernels: Kernels, with_equality: bool, max: usize) -> Self {
        let levels = (0..=max)
            .map(|k| AtomUniverse::new(&kernels, k, with_equality))
            .collect();
        Self {
            kernels,
            with_equality,
            levels,
        }
    }

    pub fn universe(&self, k: usize) -> &AtomUniverse {
        &self.levels[k]
    }
}

/// A complete assignment of polarities to the universe atoms together with
/// the adjacent equalities `x_i = x_{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdjacentType {
    pub k: usize,
    pub pol: Vec<bool>,
    /// `eqs[i]` is the literal `x_{i+1} = x_{i+2}`; empty without equality.
    pub eqs: Vec<bool>,
}

/// Polarities of the covering atoms, aligned with `AtomUniverse::covering`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IncrementalType {
    pub k: usize,
    pub pol: Vec<bool>,
    /// `x_1 = x_2`, which is covering at level 2.
    pub eq: Option<bool>,
}

impl AdjacentType {
    /// Equality class of each variable `x_1..x_k` (0-based vector) in the
    /// canonical witness.
    pub fn classes(&self) -> Vec<u32> {
        let mut cls = Vec::with_capacity(self.k);
        let mut c = 0u32;
        for i in 0..self.k {
            if i > 0 && !self.eqs.get(i - 1).copied().unwrap_or(false) {
                c += 1;
            }
            cls.push(c);
        }
        cls
    }

    /// The canonical witness tuple: one fresh element per run of equal
    /// adjacent variables.
    pub fn witness(&self) -> Vec<u32> {
        self.classes()
    }

    pub fn is_consistent(&self, u: &AtomUniverse) -> bool {
        if self.k != u.k || self.pol.len() != u.len() || self.eqs.len() != u.eq_slots() {
            return false;
        }
        let cls = self.classes();
        let mut seen: HashMap<(&str, Vec<u32>), bool> = HashMap::new();
        for (i, (p, args)) in u.atoms.iter().enumerate() {
            let w: Vec<u32> = args.iter().map(|&a| cls[a - 1]).collect();
            match seen.insert((p.as_ref(), w), self.pol[i]) {
                Some(prev) if prev != self.pol[i] => return false,
                _ => {}
            }
        }
        true
    }

    /// The conjunction of all literals, atoms first.
    pub fn to_formula(&self, u: &AtomUniverse) -> Formula {
        let mut lits = Vec::new();
        for (i, &b) in self.pol.iter().enumerate() {
            let a = u.atom_formula(i);
            lits.push(if b { a } else { Formula::Not(Box::new(a)) });
        }
        for (i, &b) in self.eqs.iter().enumerate() {
            let e = Formula::Eq(i + 1, i + 2);
            lits.push(if b { e } else { Formula::Not(Box::new(e)) });
        }
        Formula::And(lits)
    }

    /// Sorted literal list for debugging.
    pub fn dump(&self, u: &AtomUniverse) -> Vec<String> {
        let mut v: Vec<String> = match self.to_formula(u) {
            Formula::And(l) => l.iter().map(|f| f.to_string()).collect(),
            f => vec![f.to_string()],
        };
        v.sort();
        v
    }
}

/// Every consistent type over `u`, in a fixed order.
pub fn enumerate_types(u: &AtomUniverse, cap: usize) -> Result<Vec<AdjacentType>, TypeError> {
    let slots = u.eq_slots();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << slots) {
        let eqs: Vec<bool> = (0..slots).map(|i| mask >> i & 1 == 1).collect();
        let probe = AdjacentType {
            k: u.k,
            pol: vec![false; u.len()],
            eqs: eqs.clone(),
        };
        let cls = probe.classes();
        let mut group_of: HashMap<(&str, Vec<u32>), usize> = HashMap::new();
        let mut groups = Vec::with_capacity(u.len());
        for (p, args) in &u.atoms {
            let w: Vec<u32> = args.iter().map(|&a| cls[a - 1]).collect();
            let n = group_of.len();
            groups.push(*group_of.entry((p.as_ref(), w)).or_insert(n));
        }
        let g = group_of.len();
        if g >= 63 || out.len() + (1usize << g) > cap {
            return Err(TypeError::Capacity(cap));
        }
        for bits in 0u64..(1u64 << g) {
            out.push(AdjacentType {
                k: u.k,
                pol: groups.iter().map(|&gi| bits >> gi & 1 == 1).collect(),
                eqs: eqs.clone(),
            });
        }
    }
    Ok(out)
}

/// Every incremental type over `u` (no consistency constraint applies).
pub fn enumerate_incremental(u: &AtomUniverse, cap: usize) -> Result<Vec<IncrementalType>, TypeError> {
    let n = u.covering.len();
    let eq_opts: Vec<Option<bool>> = if u.with_equality && u.k == 2 {
        vec![Some(false), Some(true)]
    } else {
        vec![None]
    };
    if n >= 63 || (1usize << n) * eq_opts.len() > cap {
        return Err(TypeError::Capacity(cap));
    }
    let mut out = Vec::new();
    for eq in eq_opts {
        for bits in 0u64..(1u64 << n) {
            out.push(IncrementalType {
                k: u.k,
                pol: (0..n).map(|i| bits >> i & 1 == 1).collect(),
                eq,
            });
        }
    }
    Ok(out)
}

pub fn atp(a: &Structure, tuple: &[u32], u: &AtomUniverse) -> Result<AdjacentType, TypeError> {
    if tuple.len() != u.k {
        return Err(TypeError::Length {
            expected: u.k,
            found: tuple.len(),
        });
    }
    let mut buf: Vec<u32> = Vec::with_capacity(8);
    let pol = u
        .atoms
        .iter()
        .map(|(p, args)| {
            buf.clear();
            buf.extend(args.iter().map(|&v| tuple[v - 1]));
            a.holds(p, &buf)
        })
        .collect();
    let eqs = (0..u.eq_slots()).map(|i| tuple[i] == tuple[i + 1]).collect();
    Ok(AdjacentType { k: u.k, pol, eqs })
}

/// `itp`: the incremental type of a tuple.
pub fn itp(a: &Structure, tuple: &[u32], u: &AtomUniverse) -> Result<IncrementalType, TypeError> {
    Ok(increment(&atp(a, tuple, u)?, u))
}

/// `∂ξ`: the covering literals of `ξ`.
pub fn increment(xi: &AdjacentType, u: &AtomUniverse) -> IncrementalType {
    IncrementalType {
        k: xi.k,
        pol: u.covering.iter().map(|&i| xi.pol[i]).collect(),
        eq: if u.with_equality && u.k == 2 {
            Some(xi.eqs[0])
        } else {
            None
        },
    }
}

/// Restriction of `ξ` to the variables `x_i..x_j`, re-indexed from 1.
pub fn restrict(
    xi: &AdjacentType,
    i: usize,
    j: usize,
    big: &AtomUniverse,
    small: &AtomUniverse,
) -> Result<AdjacentType, TypeError> {
    if i < 1 || j < i.saturating_sub(1) || j > xi.k || small.k != j + 1 - i {
        return Err(TypeError::Range { i, j, k: xi.k });
    }
    let off = i - 1;
    let mut pol = Vec::with_capacity(small.len());
    let mut shifted = Vec::with_capacity(8);
    for (p, args) in &small.atoms {
        shifted.clear();
        shifted.extend(args.iter().map(|a| a + off));
        let idx = big
            .lookup(p, &shifted)
            .ok_or_else(|| TypeError::UnknownAtom(format!("{p}{shifted:?}")))?;
        pol.push(xi.pol[idx]);
    }
    let eqs = if small.with_equality && small.k >= 1 {
        xi.eqs[off..off + small.k - 1].to_vec()
    } else {
        Vec::new()
    };
    Ok(AdjacentType {
        k: small.k,
        pol,
        eqs,
    })
}

/// Precomputed restriction to `x_i..x_j`, for hot loops.
pub struct Restriction {
    map: Vec<usize>,
    eq_off: usize,
    eq_len: usize,
    k: usize,
}

impl Restriction {
    pub fn new(i: usize, j: usize, big: &AtomUniverse, small: &AtomUniverse) -> Result<Self, TypeError> {
        if i < 1 || j > big.k || small.k != j + 1 - i {
            return Err(TypeError::Range { i, j, k: big.k });
        }
        let off = i - 1;
        let mut map = Vec::with_capacity(small.len());
        for (p, args) in &small.atoms {
            let shifted: Vec<usize> = args.iter().map(|a| a + off).collect();
            map.push(
                big.lookup(p, &shifted)
                    .ok_or_else(|| TypeError::UnknownAtom(format!("{p}{shifted:?}")))?,
            );
        }
        Ok(Self {
            map,
            eq_off: off,
            eq_len: small.eq_slots(),
            k: small.k,
        })
    }

    pub fn apply(&self, xi: &AdjacentType) -> AdjacentType {
        AdjacentType {
            k: self.k,
            pol: self.map.iter().map(|&i| xi.pol[i]).collect(),
            eqs: if self.eq_len == 0 {
                Vec::new()
            } else {
                xi.eqs[self.eq_off..self.eq_off + self.eq_len].to_vec()
            },
        }
    }
}

/// `tl(ξ)`: the type of `x_2..x_k`.
pub fn tail(xi: &AdjacentType, big: &AtomUniverse, small: &AtomUniverse) -> Result<AdjacentType, TypeError> {
    restrict(xi, 2, xi.k, big, small)
}

/// `ζ⁺` as a conjunction of literals over `x_2..x_{k+1}`.
pub fn shift(zeta: &AdjacentType, u: &AtomUniverse) -> Formula {
    zeta.to_formula(u).shift(1)
}

/// `ξ = ζ ∪ η⁺ ∪ ι` over `k+1` variables, where `ζ, η` are `k`-types.
pub fn compose(
    zeta: &AdjacentType,
    eta: &AdjacentType,
    iota: &IncrementalType,
    small: &AtomUniverse,
    big: &AtomUniverse,
) -> Result<AdjacentType, TypeError> {
    let k = big.k;
    if zeta.k + 1 != k || eta.k + 1 != k || iota.k != k {
        return Err(TypeError::Length {
            expected: k,
            found: zeta.k + 1,
        });
    }
    let mut pol = vec![false; big.len()];
    let mut cov_slot = vec![usize::MAX; big.len()];
    for (s, &i) in big.covering.iter().enumerate() {
        cov_slot[i] = s;
    }
    for (i, (p, args)) in big.atoms.iter().enumerate() {
        pol[i] = if cov_slot[i] != usize::MAX {
            iota.pol[cov_slot[i]]
        } else if !args.contains(&k) {
            zeta.pol[small
                .lookup(p, args)
                .ok_or_else(|| TypeError::UnknownAtom(p.to_string()))?]
        } else {
            let back: Vec<usize> = args.iter().map(|a| a - 1).collect();
            eta.pol[small
                .lookup(p, &back)
                .ok_or_else(|| TypeError::UnknownAtom(p.to_string()))?]
        };
    }
    let eqs = if big.with_equality {
        let mut e = zeta.eqs.clone();
        if k == 2 {
            e = vec![iota.eq.unwrap_or(false)];
        } else {
            e.push(*eta.eqs.last().unwrap_or(&false));
        }
        e
    } else {
        Vec::new()
    };
    let xi = AdjacentType { k, pol, eqs };
    if !xi.is_consistent(big) {
        return Err(TypeError::Inconsistent);
    }
    Ok(xi)
}

/// `ξ⁻¹`: the type of the reversed tuple.
pub fn invert_type(xi: &AdjacentType, u: &AtomUniverse) -> AdjacentType {
    let k = xi.k;
    let mut pol = vec![false; u.len()];
    let mut rev = Vec::with_capacity(8);
    for (i, (p, args)) in u.atoms.iter().enumerate() {
        rev.clear();
        rev.extend(args.iter().map(|a| k + 1 - a));
        let j = u.lookup(p, &rev).expect("universes are closed under reversal");
        pol[j] = xi.pol[i];
    }
    let mut eqs = xi.eqs.clone();
    eqs.reverse();
    AdjacentType { k, pol, eqs }
}

/// The representative of each position `1..=k` under `D*` (index 0 unused),
/// for a defect set whose pairs lie in `[1,k]`.
fn defect_classes(d: &DefectSet, k: usize) -> Vec<usize> {
    let mut widened = d.clone();
    widened.word_length = k.max(d.word_length);
    widened.classes()
}

/// Polarities of covering atoms agree whenever their argument walks are
/// `D`-equal.
pub fn is_d_compatible(iota: &IncrementalType, d: &DefectSet, u: &AtomUniverse) -> bool {
    let cls = defect_classes(d, u.k);
    let mut seen: HashMap<(&str, Vec<usize>), bool> = HashMap::new();
    for (slot, &ai) in u.covering.iter().enumerate() {
        let (p, args) = &u.atoms[ai];
        let w: Vec<usize> = args.iter().map(|&a| cls[a]).collect();
        match seen.insert((p.as_ref(), w), iota.pol[slot]) {
            Some(prev) if prev != iota.pol[slot] => return false,
            _ => {}
        }
    }
    true
}

/// A structure on `elements` whose tuple has incremental type `ι`:
/// `p^A = {ā^f : ι ⊨ p(x̄^f)}` over the covering atoms.
pub fn canonical_structure(
    iota: &IncrementalType,
    elements: &[u32],
    u: &AtomUniverse,
) -> Result<Structure, TypeError> {
    if elements.len() != u.k {
        return Err(TypeError::Length {
            expected: u.k,
            found: elements.len(),
        });
    }
    let n = elements.iter().max().map_or(0, |m| *m as usize + 1);
    let mut s = Structure::new(n);
    for (p, kers) in kernels_from(u) {
        s.declare(&p, kers);
    }
    let mut seen: HashMap<(&str, Vec<u32>), bool> = HashMap::new();
    for (slot, &ai) in u.covering.iter().enumerate() {
        let (p, args) = &u.atoms[ai];
        let t: Vec<u32> = args.iter().map(|&a| elements[a - 1]).collect();
        let b = iota.pol[slot];
        match seen.insert((p.as_ref(), t.clone()), b) {
            Some(prev) if prev != b => {
                return Err(TypeError::Incompatible(format!("{p}{t:?}")));
            }
            _ => {}
        }
        if b {
            s.insert(p, &t);
        }
    }
    Ok(s)
}

fn kernels_from(u: &AtomUniverse) -> Vec<(String, usize)> {
    let mut v: BTreeMap<String, usize> = BTreeMap::new();
    for (p, args) in &u.atoms {
        v.insert(p.to_string(), args.len());
    }
    v.into_iter().collect()
}

/// A quantifier-free formula compiled against a universe, evaluated on types.
#[derive(Debug, Clone)]
pub enum Qf {
    Const(bool),
    Lit(usize),
    Eq(usize, usize),
    Not(Box<Qf>),
    And(Vec<Qf>),
    Or(Vec<Qf>),
    Implies(Box<Qf>, Box<Qf>),
    Iff(Box<Qf>, Box<Qf>),
}

impl Qf {
    pub fn compile(f: &Formula, u: &AtomUniverse) -> Result<Qf, TypeError> {
        use Formula as F;
        Ok(match f {
            F::True => Qf::Const(true),
            F::False => Qf::Const(false),
            F::Atom(p, args) => Qf::Lit(
                u.lookup(p, args)
                    .ok_or_else(|| TypeError::UnknownAtom(f.to_string()))?,
            ),
            F::Eq(i, j) => Qf::Eq(*i, *j),
            F::Not(a) => Qf::Not(Box::new(Self::compile(a, u)?)),
            F::And(v) => Qf::And(v.iter().map(|g| Self::compile(g, u)).collect::<Result<_, _>>()?),
            F::Or(v) => Qf::Or(v.iter().map(|g| Self::compile(g, u)).collect::<Result<_, _>>()?),
            F::Implies(a, b) => Qf::Implies(Box::new(Self::compile(a, u)?), Box::new(Self::compile(b, u)?)),
            F::Iff(a, b) => Qf::Iff(Box::new(Self::compile(a, u)?), Box::new(Self::compile(b, u)?)),
            F::Forall(..) | F::Exists(..) => return Err(TypeError::Quantified),
        })
    }

    /// Truth on the canonical witness of `xi`.
    pub fn eval(&self, xi: &AdjacentType) -> bool {
        let cls = xi.classes();
        self.eval_cls(xi, &cls)
    }

    fn eval_cls(&self, xi: &AdjacentType, cls: &[u32]) -> bool {
        match self {
            Qf::Const(b) => *b,
            Qf::Lit(i) => xi.pol[*i],
            Qf::Eq(i, j) => cls[i - 1] == cls[j - 1],
            Qf::Not(a) => !a.eval_cls(xi, cls),
            Qf::And(v) => v.iter().all(|g| g.eval_cls(xi, cls)),
            Qf::Or(v) => v.iter().any(|g| g.eval_cls(xi, cls)),
            Qf::Implies(a, b) => !a.eval_cls(xi, cls) || b.eval_cls(xi, cls),
            Qf::Iff(a, b) => a.eval_cls(xi, cls) == b.eval_cls(xi, cls),
        }
    }
}

/// `ξ ⊨ χ`, decided on the canonical witness.
pub fn entails(xi: &AdjacentType, chi: &Formula, u: &AtomUniverse) -> Result<bool, TypeError> {
    Ok(Qf::compile(chi, u)?.eval(xi))
}

/// A type `ξ ⊨ χ` whose increment is `D⁺`-compatible, if one exists.
pub fn is_d_plus_consistent(
    chi: &Formula,
    d: &DefectSet,
    u: &AtomUniverse,
    cap: usize,
) -> Result<Option<AdjacentType>, TypeError> {
    let q = Qf::compile(chi, u)?;
    let dp = d.plus();
    for xi in enumerate_types(u, cap)? {
        if q.eval(&xi) && is_d_compatible(&increment(&xi, u), &dp, u) {
            return Ok(Some(xi));
        }
    }
    Ok(None)
}

/// `ξ` agrees with its image under the variable map `h` on every atom, and
/// entails `x_i = x_{i+1}` whenever `h` collapses that pair.
pub fn agrees_under(xi: &AdjacentType, u: &AtomUniverse, h: &[usize]) -> bool {
    let cls = xi.classes();
    let mut img = Vec::with_capacity(8);
    for (i, (p, args)) in u.atoms.iter().enumerate() {
        img.clear();
        img.extend(args.iter().map(|&a| h[a - 1]));
        let b = match u.lookup(p, &img) {
            Some(j) => xi.pol[j],
            None => continue,
        };
        if b != xi.pol[i] {
            return false;
        }
    }
    if u.with_equality {
        for i in 1..xi.k {
            let (a, b) = (h[i - 1], h[i]);
            let lhs = cls[i - 1] == cls[i];
            let rhs = cls[a - 1] == cls[b - 1];
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

/// Folding map of a palindrome over `k` positions.
pub fn palindrome_fold(k: usize) -> Vec<usize> {
    (1..=k).map(|i| i.min(k + 1 - i)).collect()
}

/// `ξ` is a type that palindromic tuples can realise: every literal agrees
/// with its image under the palindrome fold.
pub fn is_palindromic(xi: &AdjacentType, u: &AtomUniverse) -> bool {
    agrees_under(xi, u, &palindrome_fold(xi.k))
}

/// `ξ = ξ⁻¹`.
pub fn is_reversal_invariant(xi: &AdjacentType, u: &AtomUniverse) -> bool {
    invert_type(xi, u) == *xi
}

/// The last variable behaves like its predecessor.
pub fn is_blunt(xi: &AdjacentType, u: &AtomUniverse) -> bool {
    let k = xi.k;
    let h: Vec<usize> = (1..=k).map(|i| i.min(k - 1)).collect();
    agrees_under(xi, u, &h)
}

/// The last `2s+1` variables fold around position `k-s`.
pub fn is_hooked(xi: &AdjacentType, u: &AtomUniverse, s: usize) -> Result<bool, TypeError> {
    let k = xi.k;
    if !(s >= 1 && 2 * s + 1 < k) {
        return Err(TypeError::Range { i: s, j: s, k });
    }
    let c = k - s;
    let h: Vec<usize> = (1..=k).map(|i| if i > c { 2 * c - i } else { i }).collect();
    Ok(agrees_under(xi, u, &h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::parse;
    use crate::words::defects;

    fn binary_space() -> TypeSpace {
        let f = parse("(forall x1 (forall x2 (or (r x1 x2) (= x1 x2))))").unwrap();
        TypeSpace::new(kernels_of(&f), true, 3)
    }

    #[test]
    fn atp_on_a_singleton() {
        let ts = binary_space();
        let mut s = Structure::new(1);
        s.declare("r", 2);
        let t = atp(&s, &[0, 0], ts.universe(2)).unwrap();
        assert!(t.pol.iter().all(|b| !b));
        assert_eq!(t.eqs, vec![true]);
        assert!(t.is_consistent(ts.universe(2)));
    }

    #[test]
    fn enumeration_counts() {
        let ts = binary_space();
        // Level 2: r over x1x1, x1x2, x2x1, x2x2 with one adjacent equality.
        assert_eq!(ts.universe(2).len(), 4);
        let n = enumerate_types(ts.universe(2), 1 << 20).unwrap().len();
        assert_eq!(n, 16 + 2);
        let n3 = enumerate_types(ts.universe(3), 1 << 20).unwrap().len();
        // x1..x3 distinct: 7 atoms; one adjacent pair merged: 4 words; both: 1.
        assert_eq!(n3, 128 + 16 + 16 + 2);
    }

    #[test]
    fn restrict_identity_and_tail() {
        let ts = binary_space();
        let u3 = ts.universe(3);
        let u2 = ts.universe(2);
        for xi in enumerate_types(u3, 1 << 20).unwrap() {
            assert_eq!(restrict(&xi, 1, 3, u3, u3).unwrap(), xi);
            let zeta = restrict(&xi, 1, 2, u3, u2).unwrap();
            let eta = tail(&xi, u3, u2).unwrap();
            let back = compose(&zeta, &eta, &increment(&xi, u3), u2, u3).unwrap();
            assert_eq!(back, xi);
        }
    }

    #[test]
    fn compatibility_counterexample() {
        let f = parse("(p x1 x2 x3 x4 x5 x6 x7)").unwrap();
        let u = AtomUniverse::from_formula(&f, 5);
        let a = u.index_of("p", &[1, 2, 3, 2, 3, 4, 5]).unwrap();
        let b = u.index_of("p", &[1, 2, 3, 4, 3, 4, 5]).unwrap();
        let mut pol = vec![false; u.covering.len()];
        pol[u.covering.iter().position(|&i| i == a).unwrap()] = true;
        let iota = IncrementalType { k: 5, pol, eq: None };
        let mut d = DefectSet::empty(5);
        d.pairs.insert((2, 4));
        assert!(!is_d_compatible(&iota, &d, &u));
        assert!(is_d_compatible(&iota, &DefectSet::empty(5), &u));
        assert!(canonical_structure(&iota, &[0, 1, 2, 1, 3], &u).is_err());
        let _ = b;
    }

    #[test]
    fn canonical_round_trip() {
        let f = parse("(and (r x1 x2) (t x1 x2 x3))").unwrap();
        let u = AtomUniverse::from_formula(&f, 3);
        let elems = [0u32, 1, 2];
        for iota in enumerate_incremental(&u, 1 << 16).unwrap() {
            let s = canonical_structure(&iota, &elems, &u).unwrap();
            assert_eq!(itp(&s, &elems, &u).unwrap(), iota);
        }
    }

    #[test]
    fn folds_on_concrete_tuples() {
        let ts = binary_space();
        let u3 = ts.universe(3);
        let mut s = Structure::new(2);
        s.insert("r", &[0, 1]);
        s.insert("r", &[1, 1]);
        let xi = atp(&s, &[0, 1, 0], u3).unwrap();
        assert!(is_palindromic(&xi, u3));
        assert!(!is_palindromic(&atp(&s, &[0, 1, 1], u3).unwrap(), u3));
        assert!(is_blunt(&atp(&s, &[0, 1, 1], u3).unwrap(), u3));
        assert!(is_hooked(&xi, u3, 1).is_err());
        assert_eq!(defects(&[0, 1, 0]).pairs.len(), 1);
    }
}
