//! Translations between FO² and the adjacent fragment, and the
//! transitivity gadget for a non-adjacent argument map.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::formulas::{and, atom, forall_range, implies, not, or, Formula, FormulaError};
use crate::structures::Structure;

#[derive(Debug, Error)]
pub enum TranslationError {
    #[error("input is not in FO² (variables other than x1, x2)")]
    NotFo2,
    #[error("predicate {0} has arity {1} > 2")]
    Arity(String, usize),
    #[error("input is not an AF sentence")]
    NotAfSentence,
    #[error("map is adjacent: no index j with |f(j+1) - f(j)| >= 2")]
    Adjacent,
    #[error("malformed map: {0}")]
    Map(String),
    #[error("formula error: {0}")]
    Formula(#[from] FormulaError),
}

fn free_has(f: &Formula, v: usize) -> bool {
    f.free_vars().contains(&v)
}

/// Swap `x1` and `x2` everywhere.
fn transpose(f: &Formula) -> Formula {
    f.map_vars(&|v| match v {
        1 => 2,
        2 => 1,
        v => v,
    })
}

// ---------------------------------------------------------------------------
// FO² → AF
// ---------------------------------------------------------------------------

/// An AF formula equivalent to the FO² formula `φ` whose free variables
/// lie among `x1..x_k`, `k` the highest free index.
pub fn fo2_to_af(phi: &Formula) -> Result<Formula, TranslationError> {
    if phi.all_vars().iter().any(|&v| v > 2) {
        return Err(TranslationError::NotFo2);
    }
    Ok(fo2(phi))
}

fn fo2(phi: &Formula) -> Formula {
    use Formula::*;
    match phi {
        True | False | Atom(..) | Eq(..) => phi.clone(),
        Not(a) => Not(Box::new(fo2(a))),
        And(v) => And(v.iter().map(fo2).collect()),
        Or(v) => Or(v.iter().map(fo2).collect()),
        Implies(a, b) => Implies(Box::new(fo2(a)), Box::new(fo2(b))),
        Iff(a, b) => Iff(Box::new(fo2(a)), Box::new(fo2(b))),
        Forall(1, psi) | Exists(1, psi) => {
            let universal = matches!(phi, Forall(..));
            let requant = |v: usize, b: Formula| {
                if universal {
                    Forall(v, Box::new(b))
                } else {
                    Exists(v, Box::new(b))
                }
            };
            if !free_has(psi, 1) {
                fo2(psi)
            } else if !free_has(psi, 2) {
                requant(1, fo2(psi))
            } else {
                // Transpose, quantify x2 over the translated body, then
                // increment every index so the free variable becomes x2.
                let inner = fo2(&transpose(psi));
                requant(2, inner).shift(1)
            }
        }
        Forall(2, psi) | Exists(2, psi) => {
            let universal = matches!(phi, Forall(..));
            if !free_has(psi, 2) {
                fo2(psi)
            } else if !free_has(psi, 1) {
                let swapped = transpose(psi);
                let q = if universal {
                    Forall(1, Box::new(swapped))
                } else {
                    Exists(1, Box::new(swapped))
                };
                fo2(&q)
            } else if universal {
                Forall(2, Box::new(fo2(psi)))
            } else {
                Exists(2, Box::new(fo2(psi)))
            }
        }
        Forall(..) | Exists(..) => unreachable!("checked FO² variables"),
    }
}

// ---------------------------------------------------------------------------
// AF (arity ≤ 2) → FO²
// ---------------------------------------------------------------------------

/// Boolean combination over units: atomic formulas and formulas with at
/// most one free variable whose subformulas have at most two.
#[derive(Clone, Debug)]
enum B {
    Const(bool),
    Unit(usize),
    Not(Box<B>),
    And(Vec<B>),
    Or(Vec<B>),
}

#[derive(Default)]
struct Units {
    list: Vec<Formula>,
    index: HashMap<Formula, usize>,
}

impl Units {
    fn intern(&mut self, f: Formula) -> usize {
        if let Some(&i) = self.index.get(&f) {
            return i;
        }
        self.list.push(f.clone());
        self.index.insert(f, self.list.len() - 1);
        self.list.len() - 1
    }
}

type Clause = BTreeSet<(usize, bool)>;

/// Clauses of the CNF of `b` (negated if `neg`), dropping tautologies.
fn cnf(b: &B, neg: bool) -> Vec<Clause> {
    match (b, neg) {
        (B::Const(c), n) => {
            if *c != n {
                vec![]
            } else {
                vec![Clause::new()]
            }
        }
        (B::Unit(u), n) => vec![Clause::from([(*u, !n)])],
        (B::Not(a), n) => cnf(a, !n),
        (B::And(v), false) | (B::Or(v), true) => {
            let mut out = Vec::new();
            for c in v {
                out.extend(cnf(c, neg));
            }
            dedup(out)
        }
        (B::Or(v), false) | (B::And(v), true) => {
            let mut acc: Vec<Clause> = vec![Clause::new()];
            for c in v {
                let part = cnf(c, neg);
                let mut next = Vec::new();
                for a in &acc {
                    for p in &part {
                        let mut m = a.clone();
                        m.extend(p.iter().copied());
                        if !m.iter().any(|&(u, s)| m.contains(&(u, !s))) {
                            next.push(m);
                        }
                    }
                }
                acc = dedup(next);
            }
            acc
        }
    }
}

fn dedup(mut v: Vec<Clause>) -> Vec<Clause> {
    v.sort();
    v.dedup();
    v
}

fn lit_formula(units: &Units, (u, s): (usize, bool)) -> Formula {
    if s {
        units.list[u].clone()
    } else {
        not(units.list[u].clone())
    }
}

fn af2(f: &Formula, units: &mut Units) -> Result<B, TranslationError> {
    use Formula::*;
    Ok(match f {
        True => B::Const(true),
        False => B::Const(false),
        Atom(p, args) => {
            if args.len() > 2 {
                return Err(TranslationError::Arity(p.to_string(), args.len()));
            }
            B::Unit(units.intern(f.clone()))
        }
        Eq(..) => B::Unit(units.intern(f.clone())),
        Not(a) => B::Not(Box::new(af2(a, units)?)),
        And(v) => B::And(v.iter().map(|c| af2(c, units)).collect::<Result<_, _>>()?),
        Or(v) => B::Or(v.iter().map(|c| af2(c, units)).collect::<Result<_, _>>()?),
        Implies(a, b) => B::Or(vec![B::Not(Box::new(af2(a, units)?)), af2(b, units)?]),
        Iff(a, b) => {
            let a = af2(a, units)?;
            let b = af2(b, units)?;
            B::Or(vec![
                B::And(vec![a.clone(), b.clone()]),
                B::And(vec![B::Not(Box::new(a)), B::Not(Box::new(b))]),
            ])
        }
        Forall(x, psi) | Exists(x, psi) => {
            let universal = matches!(f, Forall(..));
            let inner = af2(psi, units)?;
            // CNF for ∀, DNF (the dual of the CNF of the negation) for ∃.
            let clauses = cnf(&inner, !universal);
            let mut parts = Vec::with_capacity(clauses.len());
            for clause in clauses {
                let lits: Vec<(usize, bool)> = clause
                    .into_iter()
                    .map(|(u, s)| if universal { (u, s) } else { (u, !s) })
                    .collect();
                let (delta, gamma): (Vec<_>, Vec<_>) = lits
                    .into_iter()
                    .partition(|&(u, _)| free_has(&units.list[u], *x));
                let mut side: Vec<B> = gamma
                    .iter()
                    .map(|&(u, s)| {
                        if s {
                            B::Unit(u)
                        } else {
                            B::Not(Box::new(B::Unit(u)))
                        }
                    })
                    .collect();
                if !delta.is_empty() {
                    let body: Vec<Formula> = delta.iter().map(|&l| lit_formula(units, l)).collect();
                    let q = if universal {
                        Forall(*x, Box::new(or(body)))
                    } else {
                        Exists(*x, Box::new(and(body)))
                    };
                    side.push(B::Unit(units.intern(q)));
                }
                parts.push(if universal { B::Or(side) } else { B::And(side) });
            }
            if universal {
                B::And(parts)
            } else {
                B::Or(parts)
            }
        }
    })
}

fn b_formula(b: &B, units: &Units) -> Formula {
    match b {
        B::Const(true) => Formula::True,
        B::Const(false) => Formula::False,
        B::Unit(u) => units.list[*u].clone(),
        B::Not(a) => not(b_formula(a, units)),
        B::And(v) => and(v.iter().map(|c| b_formula(c, units)).collect()),
        B::Or(v) => or(v.iter().map(|c| b_formula(c, units)).collect()),
    }
}

/// Rename the variables of a formula whose subformulas have at most two
/// free variables so that only `x1` and `x2` occur.
pub fn rename_to_two(f: &Formula) -> Result<Formula, TranslationError> {
    let free: Vec<usize> = f.free_vars().into_iter().collect();
    if free.len() > 2 {
        return Err(TranslationError::NotFo2);
    }
    let mut map = HashMap::new();
    for (i, &v) in free.iter().enumerate() {
        map.insert(v, i + 1);
    }
    rename(f, &mut map)
}

fn rename(f: &Formula, map: &mut HashMap<usize, usize>) -> Result<Formula, TranslationError> {
    use Formula::*;
    Ok(match f {
        True | False => f.clone(),
        Atom(p, args) => Atom(p.clone(), args.iter().map(|v| map[v]).collect()),
        Eq(a, b) => Eq(map[a], map[b]),
        Not(a) => Not(Box::new(rename(a, map)?)),
        And(v) => And(v.iter().map(|c| rename(c, map)).collect::<Result<_, _>>()?),
        Or(v) => Or(v.iter().map(|c| rename(c, map)).collect::<Result<_, _>>()?),
        Implies(a, b) => Implies(Box::new(rename(a, map)?), Box::new(rename(b, map)?)),
        Iff(a, b) => Iff(Box::new(rename(a, map)?), Box::new(rename(b, map)?)),
        Forall(x, psi) | Exists(x, psi) => {
            let fv = psi.free_vars();
            if !fv.contains(x) {
                return rename(psi, map);
            }
            let others: Vec<usize> = fv.iter().copied().filter(|v| v != x).collect();
            if others.len() > 1 {
                return Err(TranslationError::NotFo2);
            }
            let taken: Option<usize> = others.first().map(|v| map[v]);
            let slot = if taken == Some(1) { 2 } else { 1 };
            let saved = map.insert(*x, slot);
            let body = rename(psi, map)?;
            match saved {
                Some(s) => map.insert(*x, s),
                None => map.remove(x),
            };
            if matches!(f, Forall(..)) {
                Forall(slot, Box::new(body))
            } else {
                Exists(slot, Box::new(body))
            }
        }
    })
}

/// An FO² sentence equivalent to the AF sentence `φ` (all predicates of
/// arity at most two).
pub fn af2_to_fo2(phi: &Formula) -> Result<Formula, TranslationError> {
    for (p, a) in phi.signature()? {
        if a > 2 {
            return Err(TranslationError::Arity(p, a));
        }
    }
    if !phi.free_vars().is_empty() || crate::formulas::af_level(phi).is_none() {
        return Err(TranslationError::NotAfSentence);
    }
    let mut units = Units::default();
    let b = af2(phi, &mut units)?;
    rename_to_two(&b_formula(&b, &units))
}

// ---------------------------------------------------------------------------
// Transitivity gadget
// ---------------------------------------------------------------------------

/// The gadget for a non-adjacent `f: [1,m] → [1,k]`, together with the
/// index `j` it uses and whether the swapped orientation was needed.
#[derive(Debug, Clone)]
pub struct Gadget {
    pub formula: Formula,
    pub j: usize,
    pub swapped: bool,
    pub m: usize,
    pub k: usize,
}

pub fn transitivity_formula(f: &[usize], t: &str, q: &str) -> Result<Gadget, TranslationError> {
    let m = f.len();
    if m < 2 || f.iter().any(|&v| v == 0) {
        return Err(TranslationError::Map(format!("{f:?}")));
    }
    let k = *f.iter().max().unwrap();
    let j = (1..m)
        .find(|&j| f[j].abs_diff(f[j - 1]) >= 2)
        .ok_or(TranslationError::Adjacent)?;
    let (lo, hi) = (f[j - 1], f[j]);
    let swapped = hi < lo;
    // Positions of Q's arguments feeding T in φ¹.
    let (first, second) = if swapped { (j + 1, j) } else { (j, j + 1) };
    let (a, b) = (lo.min(hi), lo.max(hi));
    let xm: Vec<usize> = (1..=m).collect();
    let phi1 = forall_range(
        1,
        m,
        implies(atom(q, &xm), atom(t, &[first, second])),
    );
    let mut ante = vec![atom(t, &[a, a + 1]), atom(t, &[a + 1, a + 2])];
    for i in a + 2..b {
        ante.push(Formula::Eq(i, i + 1));
    }
    let phi2 = forall_range(1, k, implies(and(ante), atom(q, f)));
    Ok(Gadget {
        formula: and(vec![phi1, phi2]),
        j,
        swapped,
        m,
        k,
    })
}

/// Expand a structure interpreting `T` by `Q := {ā : (a_j, a_{j+1}) ∈ T}`
/// (positions swapped in the swapped orientation).
pub fn expand_for_gadget(s: &Structure, g: &Gadget, t: &str, q: &str) -> Structure {
    let mut out = s.clone();
    out.declare(q, g.m);
    let (first, second) = if g.swapped { (g.j + 1, g.j) } else { (g.j, g.j + 1) };
    for tuple in crate::structures::all_tuples(s.domain_size, g.m) {
        if s.holds(t, &[tuple[first - 1], tuple[second - 1]]) {
            out.insert(q, &tuple);
        }
    }
    out
}

/// Whether the binary relation `T` is transitive in `s`.
pub fn is_transitive(s: &Structure, t: &str) -> bool {
    let n = s.domain_size as u32;
    for a in 0..n {
        for b in 0..n {
            if !s.holds(t, &[a, b]) {
                continue;
            }
            for c in 0..n {
                if s.holds(t, &[b, c]) && !s.holds(t, &[a, c]) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::{check_fragments, parse, print};
    use crate::structures::models;

    #[test]
    fn already_adjacent() {
        let f = parse("(forall x1 (exists x2 (r x1 x2)))").unwrap();
        assert_eq!(fo2_to_af(&f).unwrap(), f);
    }

    #[test]
    fn reversed_quantifiers() {
        let f = parse("(forall x2 (exists x1 (r x1 x2)))").unwrap();
        let g = fo2_to_af(&f).unwrap();
        assert!(check_fragments(&g).in_af, "{}", print(&g));
    }

    #[test]
    fn vacuous_free_variable() {
        let f = parse("(exists x2 (p x2))").unwrap();
        assert_eq!(print(&fo2_to_af(&f).unwrap()), "(exists x1 (p x1))");
    }

    #[test]
    fn arity_three_rejected() {
        let f = parse("(forall x1 (forall x2 (forall x3 (t x1 x2 x3))))").unwrap();
        assert!(matches!(af2_to_fo2(&f), Err(TranslationError::Arity(..))));
    }

    #[test]
    fn reflexive_stays() {
        let f = parse("(forall x1 (r x1 x1))").unwrap();
        let g = af2_to_fo2(&f).unwrap();
        assert!(g.all_vars().iter().all(|&v| v <= 2));
    }

    #[test]
    fn gadget_shape() {
        let g = transitivity_formula(&[1, 3], "T", "Q").unwrap();
        assert_eq!(g.j, 1);
        let expected = parse(
            "(and (forall x1 (forall x2 (-> (Q x1 x2) (T x1 x2)))) \
             (forall x1 (forall x2 (forall x3 (-> (and (T x1 x2) (T x2 x3)) (Q x1 x3))))))",
        )
        .unwrap();
        assert_eq!(g.formula, expected);
        assert!(matches!(
            transitivity_formula(&[1, 2], "T", "Q"),
            Err(TranslationError::Adjacent)
        ));
    }

    #[test]
    fn gadget_expansion_models() {
        let g = transitivity_formula(&[4, 1, 2], "T", "Q").unwrap();
        assert!(g.swapped);
        let mut s = Structure::new(3);
        s.declare("T", 2);
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            s.insert("T", &[a, b]);
        }
        let e = expand_for_gadget(&s, &g, "T", "Q");
        assert!(models(&e, &g.formula));
    }
}
