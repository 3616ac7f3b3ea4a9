//! Finite relational structures and model checking.
//!
//! Elements are `0..n`. Relations are hash sets of tuples. Formulas are
//! compiled against a structure once (predicate names resolved to relation
//! slots) and then evaluated by plain recursion over the domain.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::formulas::{Formula, Signature};
use crate::words::{primitive_length, AdjacentFunction};

pub type Tuple = SmallVec<[u32; 4]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("tuple {tuple:?} of {pred} has an entry outside the domain of size {n}")]
    OutOfDomain { pred: String, tuple: Vec<u32>, n: usize },
    #[error("arity mismatch for {pred}: expected {expected}, found {found}")]
    Arity {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("tuple {tuple:?} of {pred} has primitive length above the height {height}")]
    Height {
        pred: String,
        tuple: Vec<u32>,
        height: usize,
    },
    #[error("formula uses {vars} variables, above the height {height}")]
    Fragment { vars: usize, height: usize },
    #[error("signature mismatch: {0}")]
    Signature(String),
    #[error("free variable x{0} is unassigned")]
    Unassigned(usize),
    #[error("empty index set")]
    EmptyIndexSet,
    #[error("{0}")]
    Layer(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Relation {
    pub arity: usize,
    pub tuples: HashSet<Tuple>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Self {
            arity,
            tuples: HashSet::new(),
        }
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        self.tuples.contains(t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Structure {
    pub domain_size: usize,
    pub relations: BTreeMap<String, Relation>,
}

impl Structure {
    pub fn new(domain_size: usize) -> Self {
        Self {
            domain_size,
            relations: BTreeMap::new(),
        }
    }

    /// Empty interpretations for every predicate of `sig`.
    pub fn with_signature(domain_size: usize, sig: &Signature) -> Self {
        let mut s = Self::new(domain_size);
        for (p, &a) in sig {
            s.relations.insert(p.clone(), Relation::new(a));
        }
        s
    }

    pub fn declare(&mut self, pred: &str, arity: usize) {
        self.relations
            .entry(pred.to_string())
            .or_insert_with(|| Relation::new(arity));
    }

    pub fn holds(&self, pred: &str, t: &[u32]) -> bool {
        self.relations.get(pred).is_some_and(|r| r.contains(t))
    }

    pub fn set(&mut self, pred: &str, t: &[u32], value: bool) {
        let rel = self
            .relations
            .entry(pred.to_string())
            .or_insert_with(|| Relation::new(t.len()));
        debug_assert_eq!(rel.arity, t.len());
        if value {
            rel.tuples.insert(Tuple::from_slice(t));
        } else {
            rel.tuples.remove(t);
        }
    }

    pub fn insert(&mut self, pred: &str, t: &[u32]) {
        self.set(pred, t, true);
    }

    pub fn signature(&self) -> Signature {
        self.relations
            .iter()
            .map(|(p, r)| (p.clone(), r.arity))
            .collect()
    }

    pub fn validate(&self) -> Result<(), StructureError> {
        for (p, r) in &self.relations {
            for t in &r.tuples {
                if t.len() != r.arity {
                    return Err(StructureError::Arity {
                        pred: p.clone(),
                        expected: r.arity,
                        found: t.len(),
                    });
                }
                if t.iter().any(|&e| e as usize >= self.domain_size) {
                    return Err(StructureError::OutOfDomain {
                        pred: p.clone(),
                        tuple: t.to_vec(),
                        n: self.domain_size,
                    });
                }
            }
        }
        Ok(())
    }

    /// The reduct to the predicates of `sig`.
    pub fn reduct(&self, sig: &Signature) -> Structure {
        let mut out = Structure::new(self.domain_size);
        for (p, &a) in sig {
            let rel = self.relations.get(p).cloned().unwrap_or_else(|| Relation::new(a));
            out.relations.insert(p.clone(), rel);
        }
        out
    }

    pub fn to_json(&self) -> StructureFile {
        StructureFile::from_structure(self)
    }
}

/// JSON form: `{"domain_size": n, "relations": {"p": {"arity": m, "tuples": [...]}}}`,
/// optionally with `height` (layered) and `addresses` (forest structures).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StructureFile {
    pub domain_size: usize,
    pub relations: BTreeMap<String, RelationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addresses: Option<Vec<Vec<u32>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RelationFile {
    pub arity: usize,
    pub tuples: Vec<Vec<u32>>,
}

impl StructureFile {
    pub fn from_structure(s: &Structure) -> Self {
        let relations = s
            .relations
            .iter()
            .map(|(p, r)| {
                let mut tuples: Vec<Vec<u32>> = r.tuples.iter().map(|t| t.to_vec()).collect();
                tuples.sort();
                (
                    p.clone(),
                    RelationFile {
                        arity: r.arity,
                        tuples,
                    },
                )
            })
            .collect();
        Self {
            domain_size: s.domain_size,
            relations,
            height: None,
            addresses: None,
        }
    }

    pub fn to_structure(&self) -> Result<Structure, StructureError> {
        let mut s = Structure::new(self.domain_size);
        for (p, r) in &self.relations {
            let mut rel = Relation::new(r.arity);
            for t in &r.tuples {
                rel.tuples.insert(Tuple::from_slice(t));
            }
            s.relations.insert(p.clone(), rel);
        }
        s.validate()?;
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

enum Node {
    True,
    False,
    Atom(usize, Vec<usize>),
    Eq(usize, usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    Iff(Box<Node>, Box<Node>),
    Forall(usize, Box<Node>),
    Exists(usize, Box<Node>),
    /// `∀x̄ (G(ȳ) → φ)` with `x̄ ⊆ ȳ`: only guard tuples are visited.
    GuardedForall(Vec<usize>, usize, Vec<usize>, Box<Node>),
    /// `∃x̄ (G(ȳ) ∧ φ_1 ∧ …)` with `x̄ ⊆ ȳ`.
    GuardedExists(Vec<usize>, usize, Vec<usize>, Vec<Node>),
}

/// A formula compiled against one structure.
pub struct Compiled<'a> {
    rels: Vec<Option<&'a Relation>>,
    root: Node,
    nvars: usize,
    n: u32,
    /// Layer bound: every membership query must concern a tuple of at most
    /// this primitive length.
    height: Option<usize>,
}

fn compile_node<'a>(
    f: &Formula,
    s: &'a Structure,
    slots: &mut BTreeMap<String, usize>,
    rels: &mut Vec<Option<&'a Relation>>,
) -> Node {
    use Formula as F;
    let mut rec = |g: &Formula| compile_node(g, s, slots, rels);
    match f {
        F::True => Node::True,
        F::False => Node::False,
        F::Atom(p, args) => {
            let slot = match slots.get(p.as_ref()) {
                Some(&i) => i,
                None => {
                    let i = rels.len();
                    rels.push(s.relations.get(p.as_ref()));
                    slots.insert(p.to_string(), i);
                    i
                }
            };
            Node::Atom(slot, args.clone())
        }
        F::Eq(i, j) => Node::Eq(*i, *j),
        F::Not(a) => Node::Not(Box::new(rec(a))),
        F::And(v) => Node::And(v.iter().map(&mut rec).collect()),
        F::Or(v) => Node::Or(v.iter().map(&mut rec).collect()),
        F::Implies(a, b) => {
            let a = rec(a);
            Node::Implies(Box::new(a), Box::new(rec(b)))
        }
        F::Iff(a, b) => {
            let a = rec(a);
            Node::Iff(Box::new(a), Box::new(rec(b)))
        }
        F::Forall(v, a) => {
            let (block, body) = quantifier_block(f);
            if let F::Implies(g, rest) = body {
                if let F::Atom(p, args) = g.as_ref() {
                    if covers(args, &block) {
                        let slot = slot_of(p, s, slots, rels);
                        let rest = compile_node(rest, s, slots, rels);
                        return Node::GuardedForall(block, slot, args.clone(), Box::new(rest));
                    }
                }
            }
            Node::Forall(*v, Box::new(rec(a)))
        }
        F::Exists(v, a) => {
            let (block, body) = quantifier_block(f);
            let parts: Vec<&Formula> = match body {
                F::And(v) => v.iter().collect(),
                other => vec![other],
            };
            let guard = parts.iter().position(|g| match g {
                F::Atom(_, args) => covers(args, &block),
                _ => false,
            });
            if let Some(gi) = guard {
                if let F::Atom(p, args) = parts[gi] {
                    let slot = slot_of(p, s, slots, rels);
                    let rest = parts
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != gi)
                        .map(|(_, c)| compile_node(c, s, slots, rels))
                        .collect();
                    return Node::GuardedExists(block, slot, args.clone(), rest);
                }
            }
            Node::Exists(*v, Box::new(rec(a)))
        }
    }
}

/// Maximal block of like quantifiers over distinct variables.
fn quantifier_block(f: &Formula) -> (Vec<usize>, &Formula) {
    let universal = matches!(f, Formula::Forall(..));
    let mut block = Vec::new();
    let mut body = f;
    loop {
        match body {
            Formula::Forall(v, b) if universal && !block.contains(v) => {
                block.push(*v);
                body = b;
            }
            Formula::Exists(v, b) if !universal && !block.contains(v) => {
                block.push(*v);
                body = b;
            }
            _ => return (block, body),
        }
    }
}

fn covers(args: &[usize], block: &[usize]) -> bool {
    block.iter().all(|v| args.contains(v))
}

fn slot_of<'a>(
    p: &str,
    s: &'a Structure,
    slots: &mut BTreeMap<String, usize>,
    rels: &mut Vec<Option<&'a Relation>>,
) -> usize {
    match slots.get(p) {
        Some(&i) => i,
        None => {
            let i = rels.len();
            rels.push(s.relations.get(p));
            slots.insert(p.to_string(), i);
            i
        }
    }
}

impl<'a> Compiled<'a> {
    pub fn new(s: &'a Structure, f: &Formula) -> Self {
        let mut slots = BTreeMap::new();
        let mut rels = Vec::new();
        let root = compile_node(f, s, &mut slots, &mut rels);
        Self {
            rels,
            root,
            nvars: f.max_var() + 1,
            n: s.domain_size as u32,
            height: None,
        }
    }

    /// Evaluate with `assignment[i]` the value of `x_i` (index 0 unused).
    pub fn eval_with(&self, assignment: &[u32]) -> bool {
        let mut env = vec![0u32; self.nvars.max(assignment.len())];
        env[..assignment.len()].copy_from_slice(assignment);
        self.eval(&self.root, &mut env)
    }

    /// Assign the block variables from guard tuple `t`; false if `t` does
    /// not match the variables bound outside the block or repeats.
    fn bind(&self, block: &[usize], args: &[usize], t: &[u32], env: &mut [u32]) -> bool {
        let mut set: SmallVec<[usize; 8]> = SmallVec::new();
        for (&a, &e) in args.iter().zip(t) {
            if block.contains(&a) {
                if set.contains(&a) {
                    if env[a] != e {
                        return false;
                    }
                } else {
                    env[a] = e;
                    set.push(a);
                }
            } else if env[a] != e {
                return false;
            }
        }
        true
    }

    fn eval(&self, node: &Node, env: &mut Vec<u32>) -> bool {
        match node {
            Node::True => true,
            Node::False => false,
            Node::Atom(slot, args) => match self.rels[*slot] {
                None => false,
                Some(rel) => {
                    let t: Tuple = args.iter().map(|&a| env[a]).collect();
                    if let Some(h) = self.height {
                        assert!(
                            primitive_length(&t) <= h,
                            "membership query above the layer height"
                        );
                    }
                    rel.tuples.contains(&t)
                }
            },
            Node::Eq(i, j) => env[*i] == env[*j],
            Node::Not(a) => !self.eval(a, env),
            Node::And(v) => v.iter().all(|c| self.eval(c, env)),
            Node::Or(v) => v.iter().any(|c| self.eval(c, env)),
            Node::Implies(a, b) => !self.eval(a, env) || self.eval(b, env),
            Node::Iff(a, b) => self.eval(a, env) == self.eval(b, env),
            Node::Forall(v, a) => {
                let saved = env[*v];
                let mut ok = true;
                for e in 0..self.n {
                    env[*v] = e;
                    if !self.eval(a, env) {
                        ok = false;
                        break;
                    }
                }
                env[*v] = saved;
                ok
            }
            Node::GuardedForall(block, slot, args, body) => {
                let Some(rel) = self.rels[*slot] else {
                    return true;
                };
                let saved: Vec<u32> = block.iter().map(|&v| env[v]).collect();
                let mut ok = true;
                for t in &rel.tuples {
                    if self.bind(block, args, t, env) && !self.eval(body, env) {
                        ok = false;
                        break;
                    }
                }
                for (&v, &e) in block.iter().zip(&saved) {
                    env[v] = e;
                }
                ok
            }
            Node::GuardedExists(block, slot, args, rest) => {
                let Some(rel) = self.rels[*slot] else {
                    return false;
                };
                let saved: Vec<u32> = block.iter().map(|&v| env[v]).collect();
                let mut ok = false;
                for t in &rel.tuples {
                    if self.bind(block, args, t, env) && rest.iter().all(|c| self.eval(c, env)) {
                        ok = true;
                        break;
                    }
                }
                for (&v, &e) in block.iter().zip(&saved) {
                    env[v] = e;
                }
                ok
            }
            Node::Exists(v, a) => {
                let saved = env[*v];
                let mut ok = false;
                for e in 0..self.n {
                    env[*v] = e;
                    if self.eval(a, env) {
                        ok = true;
                        break;
                    }
                }
                env[*v] = saved;
                ok
            }
        }
    }
}

/// Tarskian truth of `f` in `s` under `assignment` (`x_i ↦ assignment[i]`).
pub fn evaluate(
    s: &Structure,
    f: &Formula,
    assignment: &BTreeMap<usize, u32>,
) -> Result<bool, StructureError> {
    for v in f.free_vars() {
        if !assignment.contains_key(&v) {
            return Err(StructureError::Unassigned(v));
        }
    }
    let c = Compiled::new(s, f);
    let mut env = vec![0u32; c.nvars.max(assignment.keys().max().map_or(0, |m| m + 1))];
    for (&v, &e) in assignment {
        env[v] = e;
    }
    Ok(c.eval_with(&env))
}

/// Truth of a sentence.
pub fn models(s: &Structure, f: &Formula) -> bool {
    Compiled::new(s, f).eval_with(&[])
}

/// Truth of `f` with `x_i ↦ tuple[i-1]`.
pub fn satisfies(s: &Structure, f: &Formula, tuple: &[u32]) -> bool {
    let mut env = vec![0u32; tuple.len() + 1];
    env[1..].copy_from_slice(tuple);
    Compiled::new(s, f).eval_with(&env)
}

// ---------------------------------------------------------------------------
// Layered structures and ≈_ℓ
// ---------------------------------------------------------------------------

/// A structure defined only on tuples of primitive length at most `height`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredStructure {
    pub height: usize,
    pub structure: Structure,
}

impl LayeredStructure {
    pub fn new(height: usize, structure: Structure) -> Result<Self, StructureError> {
        structure.validate()?;
        for (p, r) in &structure.relations {
            for t in &r.tuples {
                if primitive_length(t) > height {
                    return Err(StructureError::Height {
                        pred: p.clone(),
                        tuple: t.to_vec(),
                        height,
                    });
                }
            }
        }
        Ok(Self { height, structure })
    }

    pub fn from_file(f: &StructureFile) -> Result<Self, StructureError> {
        let h = f
            .height
            .ok_or_else(|| StructureError::Layer("missing height".into()))?;
        Self::new(h, f.to_structure()?)
    }

    /// Evaluation restricted to `AF^{height}`; every membership query is
    /// checked against the height.
    pub fn evaluate(
        &self,
        f: &Formula,
        assignment: &BTreeMap<usize, u32>,
    ) -> Result<bool, StructureError> {
        let vars = f.max_var();
        if vars > self.height {
            return Err(StructureError::Fragment {
                vars,
                height: self.height,
            });
        }
        if crate::formulas::af_level(f).is_none() {
            return Err(StructureError::Fragment {
                vars,
                height: self.height,
            });
        }
        for v in f.free_vars() {
            if !assignment.contains_key(&v) {
                return Err(StructureError::Unassigned(v));
            }
        }
        let mut c = Compiled::new(&self.structure, f);
        c.height = Some(self.height);
        let mut env = vec![0u32; c.nvars];
        for (&v, &e) in assignment {
            if v < env.len() {
                env[v] = e;
            }
        }
        Ok(c.eval_with(&env))
    }
}

/// `A ≈_ℓ B`: membership agrees on every tuple of primitive length ≤ ℓ.
pub fn approx_equiv(a: &Structure, b: &Structure, l: usize) -> Result<bool, StructureError> {
    if a.domain_size != b.domain_size {
        return Err(StructureError::Signature("domain sizes differ".into()));
    }
    if a.signature() != b.signature() {
        return Err(StructureError::Signature("signatures differ".into()));
    }
    for (p, ra) in &a.relations {
        let rb = &b.relations[p];
        for t in ra.tuples.symmetric_difference(&rb.tuples) {
            if primitive_length(t) <= l {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Fix the incremental type of a primitive `(ℓ+1)`-tuple (and so of its
/// reversal), raising the height to `ℓ+1`.
pub fn define_layer(
    l: &LayeredStructure,
    tuple: &[u32],
    iota: &crate::types::IncrementalType,
    universe: &crate::types::AtomUniverse,
) -> Result<LayeredStructure, StructureError> {
    let k = tuple.len();
    if k != l.height + 1 && k != l.height {
        return Err(StructureError::Layer(format!(
            "tuple length {k} does not extend height {}",
            l.height
        )));
    }
    if primitive_length(tuple) != k {
        return Err(StructureError::Layer("tuple is not primitive".into()));
    }
    if universe.k != k || iota.k != k {
        return Err(StructureError::Layer("type and tuple lengths differ".into()));
    }
    let d = crate::words::defects(tuple);
    if !crate::types::is_d_compatible(iota, &d, universe) {
        return Err(StructureError::Layer(
            "incremental type is not compatible with the defects of the tuple".into(),
        ));
    }
    let mut s = l.structure.clone();
    let mut written: std::collections::HashMap<(String, Tuple), bool> = Default::default();
    for (slot, &ai) in universe.covering.iter().enumerate() {
        let (p, args) = &universe.atoms[ai];
        let t: Tuple = args.iter().map(|&v| tuple[v - 1]).collect();
        let pol = iota.pol[slot];
        if let Some(&prev) = written.get(&(p.to_string(), t.clone())) {
            if prev != pol {
                return Err(StructureError::Layer("clash between coinciding walks".into()));
            }
            continue;
        }
        written.insert((p.to_string(), t.clone()), pol);
        s.declare(p, args.len());
        s.set(p, &t, pol);
    }
    Ok(LayeredStructure {
        height: k.max(l.height),
        structure: s,
    })
}

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

/// `B × H` with `|H| = h`; element `(b, j)` is encoded as `b·h + j`.
/// A predicate holds on `⟨b_1,j_1⟩…⟨b_m,j_m⟩` iff it holds on `b_1…b_m`.
pub fn product(b: &Structure, h: usize) -> Result<Structure, StructureError> {
    if h == 0 {
        return Err(StructureError::EmptyIndexSet);
    }
    let mut out = Structure::new(b.domain_size * h);
    for (p, r) in &b.relations {
        let mut rel = Relation::new(r.arity);
        for t in &r.tuples {
            let m = t.len();
            let total = h.pow(m as u32);
            for code in 0..total {
                let mut c = code;
                let lifted: Tuple = t
                    .iter()
                    .map(|&e| {
                        let j = c % h;
                        c /= h;
                        e * h as u32 + j as u32
                    })
                    .collect();
                rel.tuples.insert(lifted);
            }
        }
        out.relations.insert(p.clone(), rel);
    }
    Ok(out)
}

pub fn product_projection(h: usize) -> impl Fn(u32) -> u32 {
    move |e| e / h as u32
}

/// Every tuple over `[0,n)` of length `m`, in lexicographic order.
pub fn all_tuples(n: usize, m: usize) -> impl Iterator<Item = Tuple> {
    let total = n.checked_pow(m as u32).unwrap_or(0);
    (0..total).map(move |mut code| {
        let mut t: Tuple = smallvec::smallvec![0; m];
        for i in (0..m).rev() {
            t[i] = (code % n) as u32;
            code /= n;
        }
        t
    })
}

/// Apply an adjacent walk to a tuple of elements.
pub fn walk(t: &[u32], f: &AdjacentFunction) -> Tuple {
    f.values.iter().map(|&v| t[v - 1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::parse;

    #[test]
    fn reflexive_singleton() {
        let mut s = Structure::new(1);
        s.insert("R", &[0, 0]);
        assert!(models(&s, &parse("(forall x1 (R x1 x1))").unwrap()));
        let mut e = Structure::new(2);
        e.declare("p", 1);
        assert!(!models(&e, &parse("(exists x1 (p x1))").unwrap()));
    }

    #[test]
    fn unassigned_variable() {
        let s = Structure::new(1);
        assert!(evaluate(&s, &parse("(p x1)").unwrap(), &BTreeMap::new()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut s = Structure::new(3);
        s.insert("r", &[0, 2]);
        s.insert("r", &[1, 1]);
        let j = serde_json::to_string(&s.to_json()).unwrap();
        let back: StructureFile = serde_json::from_str(&j).unwrap();
        assert_eq!(back.to_structure().unwrap(), s);
    }

    #[test]
    fn layered_rejects_high_tuples() {
        let mut s = Structure::new(3);
        s.insert("t", &[0, 1, 2]);
        assert!(LayeredStructure::new(2, s.clone()).is_err());
        assert!(LayeredStructure::new(3, s).is_ok());
        let mut s = Structure::new(2);
        s.insert("t", &[0, 1, 0]);
        assert!(LayeredStructure::new(2, s).is_ok());
    }

    #[test]
    fn approx_on_a_primitive_flip() {
        let mut a = Structure::new(3);
        a.declare("p", 3);
        let mut b = a.clone();
        b.insert("p", &[0, 1, 2]);
        assert!(approx_equiv(&a, &b, 2).unwrap());
        assert!(!approx_equiv(&a, &b, 3).unwrap());
        assert!(approx_equiv(&a, &a, 3).unwrap());
    }

    #[test]
    fn product_is_a_copy_for_one_index() {
        let mut b = Structure::new(2);
        b.insert("r", &[0, 1]);
        let c = product(&b, 1).unwrap();
        assert_eq!(c, b);
        let c = product(&b, 3).unwrap();
        assert_eq!(c.domain_size, 6);
        assert_eq!(c.relations["r"].tuples.len(), 9);
        assert!(product(&b, 0).is_err());
    }

    #[test]
    fn tuple_enumeration() {
        let v: Vec<Tuple> = all_tuples(2, 2).collect();
        assert_eq!(v.len(), 4);
        assert_eq!(v[1].as_slice(), &[0, 1]);
        assert_eq!(all_tuples(3, 0).count(), 1);
    }
}
