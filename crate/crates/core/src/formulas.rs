//! First-order formulas over relational signatures with indexed variables.
//!
//! Contains the AST, the s-expression syntax, fragment checkers (FO², AF,
//! GF, GA), variable substitutions, the normal form and the adjacent closure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::words::{all_adjacent, final_adjacent, AdjacentFunction};

pub type Pred = Arc<str>;

/// Predicate name → arity. Equality is built in and never listed.
pub type Signature = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Pred, Vec<usize>),
    Eq(usize, usize),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(usize, Box<Formula>),
    Exists(usize, Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("arity mismatch for {pred}: declared {expected}, used with {found}")]
    Arity {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("unsupported shape: {0}")]
    Shape(String),
    #[error("not a sentence: free variables {0:?}")]
    NotSentence(Vec<usize>),
    #[error("not in the adjacent fragment: {0}")]
    NotAdjacent(String),
}

pub fn atom(pred: &str, args: &[usize]) -> Formula {
    Formula::Atom(Arc::from(pred), args.to_vec())
}

pub fn not(f: Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        other => Formula::Not(Box::new(other)),
    }
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    Formula::Implies(Box::new(a), Box::new(b))
}

pub fn iff(a: Formula, b: Formula) -> Formula {
    Formula::Iff(Box::new(a), Box::new(b))
}

/// Conjunction; the empty conjunction is `true`, singletons are unwrapped.
pub fn and(mut parts: Vec<Formula>) -> Formula {
    match parts.len() {
        0 => Formula::True,
        1 => parts.pop().unwrap(),
        _ => Formula::And(parts),
    }
}

/// Disjunction; the empty disjunction is `false`, singletons are unwrapped.
pub fn or(mut parts: Vec<Formula>) -> Formula {
    match parts.len() {
        0 => Formula::False,
        1 => parts.pop().unwrap(),
        _ => Formula::Or(parts),
    }
}

pub fn forall(v: usize, f: Formula) -> Formula {
    Formula::Forall(v, Box::new(f))
}

pub fn exists(v: usize, f: Formula) -> Formula {
    Formula::Exists(v, Box::new(f))
}

/// `∀x_{from} … ∀x_{to} f`.
pub fn forall_range(from: usize, to: usize, f: Formula) -> Formula {
    (from..=to).rev().fold(f, |acc, v| forall(v, acc))
}

pub fn exists_range(from: usize, to: usize, f: Formula) -> Formula {
    (from..=to).rev().fold(f, |acc, v| exists(v, acc))
}

impl Formula {
    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            True | False | Atom(..) | Eq(..) => vec![],
            Not(a) | Forall(_, a) | Exists(_, a) => vec![a],
            And(v) | Or(v) => v.iter().collect(),
            Implies(a, b) | Iff(a, b) => vec![a, b],
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Forall(..) | Formula::Exists(..) => false,
            _ => self.children().iter().all(|c| c.is_quantifier_free()),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<usize>, out: &mut BTreeSet<usize>) {
        use Formula::*;
        match self {
            Atom(_, args) => {
                for a in args {
                    if !bound.contains(a) {
                        out.insert(*a);
                    }
                }
            }
            Eq(i, j) => {
                for a in [i, j] {
                    if !bound.contains(a) {
                        out.insert(*a);
                    }
                }
            }
            Forall(v, b) | Exists(v, b) => {
                bound.push(*v);
                b.collect_free(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    /// Every variable index occurring, free or bound.
    pub fn all_vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom(_, args) => out.extend(args.iter().copied()),
            Formula::Eq(i, j) => {
                out.insert(*i);
                out.insert(*j);
            }
            Formula::Forall(v, _) | Formula::Exists(v, _) => {
                out.insert(*v);
            }
            _ => {}
        });
        out
    }

    pub fn max_var(&self) -> usize {
        self.all_vars().into_iter().max().unwrap_or(0)
    }

    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn uses_equality(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| {
            if matches!(f, Formula::Eq(..)) {
                found = true;
            }
        });
        found
    }

    /// Predicates with their arities; the first inconsistent use is an error.
    pub fn signature(&self) -> Result<Signature, FormulaError> {
        let mut sig = Signature::new();
        let mut err = None;
        self.visit(&mut |f| {
            if let Formula::Atom(p, args) = f {
                match sig.get(p.as_ref()) {
                    Some(&a) if a != args.len() && err.is_none() => {
                        err = Some(FormulaError::Arity {
                            pred: p.to_string(),
                            expected: a,
                            found: args.len(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        sig.insert(p.to_string(), args.len());
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(sig),
        }
    }

    /// Rename every variable occurrence (free and bound) through `map`.
    pub fn map_vars(&self, map: &dyn Fn(usize) -> usize) -> Formula {
        use Formula::*;
        match self {
            True => True,
            False => False,
            Atom(p, args) => Atom(p.clone(), args.iter().map(|&a| map(a)).collect()),
            Eq(i, j) => Eq(map(*i), map(*j)),
            Not(a) => Not(Box::new(a.map_vars(map))),
            And(v) => And(v.iter().map(|c| c.map_vars(map)).collect()),
            Or(v) => Or(v.iter().map(|c| c.map_vars(map)).collect()),
            Implies(a, b) => Implies(Box::new(a.map_vars(map)), Box::new(b.map_vars(map))),
            Iff(a, b) => Iff(Box::new(a.map_vars(map)), Box::new(b.map_vars(map))),
            Forall(v, a) => Forall(map(*v), Box::new(a.map_vars(map))),
            Exists(v, a) => Exists(map(*v), Box::new(a.map_vars(map))),
        }
    }

    /// Add `by` to every variable index.
    pub fn shift(&self, by: usize) -> Formula {
        if by == 0 {
            return self.clone();
        }
        self.map_vars(&|v| v + by)
    }

    /// Top-level conjuncts, flattening nested conjunctions.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(v) => v.iter().flat_map(|c| c.conjuncts()).collect(),
            Formula::True => vec![],
            other => vec![other],
        }
    }
}

// ---------------------------------------------------------------------------
// Text syntax
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
}

fn tokenize(text: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == ';' {
            // comment to end of line
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
        } else if c == '(' {
            out.push((i, Tok::Open));
            chars.next();
        } else if c == ')' {
            out.push((i, Tok::Close));
            chars.next();
        } else {
            let mut w = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                w.push(c);
                chars.next();
            }
            out.push((i, Tok::Word(w)));
        }
    }
    out
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        let pos = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end);
        Err(FormulaError::Syntax {
            pos,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn expect_close(&mut self) -> Result<(), FormulaError> {
        match self.peek() {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected ')'"),
        }
    }

    fn var(&mut self) -> Result<usize, FormulaError> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) => match parse_var(&w) {
                Some(v) => {
                    self.pos += 1;
                    Ok(v)
                }
                None => self.err(format!("expected variable, found '{w}'")),
            },
            _ => self.err("expected variable"),
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        match self.next() {
            None => {
                self.pos -= 1;
                self.err("unexpected end of input")
            }
            Some(Tok::Close) => {
                self.pos -= 1;
                self.err("unexpected ')'")
            }
            Some(Tok::Word(w)) => match w.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                _ => {
                    self.pos -= 1;
                    self.err(format!("unexpected token '{w}'"))
                }
            },
            Some(Tok::Open) => {
                let head = match self.next() {
                    Some(Tok::Word(w)) => w,
                    _ => {
                        self.pos -= 1;
                        return self.err("expected operator or predicate");
                    }
                };
                let f = match head.as_str() {
                    "not" => not_raw(self.formula()?),
                    "and" | "or" => {
                        let mut parts = vec![self.formula()?];
                        while !matches!(self.peek(), Some(Tok::Close) | None) {
                            parts.push(self.formula()?);
                        }
                        if head == "and" {
                            Formula::And(parts)
                        } else {
                            Formula::Or(parts)
                        }
                    }
                    "->" => {
                        let a = self.formula()?;
                        implies(a, self.formula()?)
                    }
                    "<->" => {
                        let a = self.formula()?;
                        iff(a, self.formula()?)
                    }
                    "forall" | "exists" => {
                        let v = self.var()?;
                        let body = self.formula()?;
                        if head == "forall" {
                            forall(v, body)
                        } else {
                            exists(v, body)
                        }
                    }
                    "=" => {
                        let i = self.var()?;
                        let j = self.var()?;
                        Formula::Eq(i, j)
                    }
                    p if is_pred_name(p) => {
                        let mut args = Vec::new();
                        while !matches!(self.peek(), Some(Tok::Close) | None) {
                            args.push(self.var()?);
                        }
                        Formula::Atom(Arc::from(p), args)
                    }
                    other => {
                        self.pos -= 1;
                        return self.err(format!("invalid predicate name '{other}'"));
                    }
                };
                self.expect_close()?;
                Ok(f)
            }
        }
    }
}

fn not_raw(f: Formula) -> Formula {
    Formula::Not(Box::new(f))
}

fn parse_var(w: &str) -> Option<usize> {
    let digits = w.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn is_pred_name(p: &str) -> bool {
    let mut cs = p.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse one formula; predicate arities must be used consistently.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let toks = tokenize(text);
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return p.err("trailing input");
    }
    f.signature()?;
    Ok(f)
}

/// Parse and check arities against a declared signature.
pub fn parse_with_signature(text: &str, sig: &Signature) -> Result<Formula, FormulaError> {
    let f = parse(text)?;
    for (p, a) in f.signature()? {
        if let Some(&d) = sig.get(&p) {
            if d != a {
                return Err(FormulaError::Arity {
                    pred: p,
                    expected: d,
                    found: a,
                });
            }
        }
    }
    Ok(f)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(p, args) => {
                write!(f, "({p}")?;
                for a in args {
                    write!(f, " x{a}")?;
                }
                write!(f, ")")
            }
            Eq(i, j) => write!(f, "(= x{i} x{j})"),
            Not(a) => write!(f, "(not {a})"),
            And(v) | Or(v) => {
                write!(f, "({}", if matches!(self, And(_)) { "and" } else { "or" })?;
                for c in v {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
            Implies(a, b) => write!(f, "(-> {a} {b})"),
            Iff(a, b) => write!(f, "(<-> {a} {b})"),
            Forall(v, a) => write!(f, "(forall x{v} {a})"),
            Exists(v, a) => write!(f, "(exists x{v} {a})"),
        }
    }
}

pub fn print(f: &Formula) -> String {
    f.to_string()
}

/// Multi-line rendering with one top-level conjunct per line.
pub fn print_pretty(f: &Formula) -> String {
    match f {
        Formula::And(v) if v.len() > 1 => {
            let mut s = String::from("(and\n");
            for c in v {
                s.push_str("  ");
                s.push_str(&c.to_string());
                s.push('\n');
            }
            s.push(')');
            s
        }
        other => other.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Fragments
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FragmentReport {
    pub in_fo2: bool,
    pub in_af: bool,
    pub af_bracket_level: Option<usize>,
    pub af_variable_count: Option<usize>,
    pub in_gf: bool,
    pub in_ga: bool,
    pub uses_equality: bool,
    pub index_normal: bool,
}

fn is_adjacent_seq(args: &[usize]) -> bool {
    args.windows(2).all(|w| w[0].abs_diff(w[1]) <= 1)
}

/// Least `k` with `f ∈ AF^[k]`, or `None` when `f` is not adjacent.
pub fn af_level(f: &Formula) -> Option<usize> {
    use Formula::*;
    match f {
        True | False => Some(0),
        Atom(_, args) => {
            if is_adjacent_seq(args) {
                Some(args.iter().copied().max().unwrap_or(0))
            } else {
                None
            }
        }
        Eq(i, j) => {
            if i.abs_diff(*j) <= 1 {
                Some(*i.max(j))
            } else {
                None
            }
        }
        Forall(v, b) | Exists(v, b) => {
            let inner = af_level(b)?;
            if inner <= *v {
                Some(v - 1)
            } else {
                None
            }
        }
        _ => {
            let mut lvl = 0;
            for c in f.children() {
                lvl = lvl.max(af_level(c)?);
            }
            Some(lvl)
        }
    }
}

/// Every quantifier binding `x_k` scopes over a Boolean combination of atoms
/// with free variables among `x_1..x_k` and quantifications binding `x_{k+1}`.
pub fn is_index_normal(f: &Formula) -> bool {
    fn scope_ok(f: &Formula, k: usize) -> bool {
        use Formula::*;
        match f {
            True | False => true,
            Atom(_, args) => args.iter().all(|&a| a <= k),
            Eq(i, j) => *i <= k && *j <= k,
            Forall(v, b) | Exists(v, b) => *v == k + 1 && scope_ok(b, k + 1),
            _ => f.children().iter().all(|c| scope_ok(c, k)),
        }
    }
    fn top(f: &Formula) -> bool {
        use Formula::*;
        match f {
            Forall(v, b) | Exists(v, b) => scope_ok(b, *v),
            _ => f.children().iter().all(|c| top(c)),
        }
    }
    top(f)
}

fn atom_vars(f: &Formula) -> Option<BTreeSet<usize>> {
    match f {
        Formula::Atom(_, args) => Some(args.iter().copied().collect()),
        Formula::Eq(i, j) => Some([*i, *j].into_iter().collect()),
        _ => None,
    }
}

/// Guarded-fragment membership with guards `∀x̄(α → ψ)` and `∃x̄(α ∧ ψ)`.
pub fn is_guarded(f: &Formula) -> bool {
    use Formula::*;
    match f {
        True | False | Atom(..) | Eq(..) => true,
        Forall(..) => {
            let mut block = BTreeSet::new();
            let mut body = f;
            while let Forall(v, b) = body {
                block.insert(*v);
                body = b;
            }
            match body {
                Implies(g, psi) => guard_covers(g, &block, psi) && is_guarded(psi),
                _ => false,
            }
        }
        Exists(..) => {
            let mut block = BTreeSet::new();
            let mut body = f;
            while let Exists(v, b) = body {
                block.insert(*v);
                body = b;
            }
            match body {
                Atom(..) | Eq(..) => atom_vars(body).unwrap().is_superset(&block),
                And(parts) => parts.iter().enumerate().any(|(i, g)| {
                    let rest: Vec<Formula> = parts
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, c)| c.clone())
                        .collect();
                    let rest = and(rest);
                    guard_covers(g, &block, &rest) && is_guarded(&rest)
                }),
                _ => false,
            }
        }
        _ => f.children().iter().all(|c| is_guarded(c)),
    }
}

fn guard_covers(g: &Formula, block: &BTreeSet<usize>, psi: &Formula) -> bool {
    match atom_vars(g) {
        Some(vs) => vs.is_superset(block) && vs.is_superset(&psi.free_vars()),
        None => false,
    }
}

pub fn check_fragments(f: &Formula) -> FragmentReport {
    let vars = f.all_vars();
    let level = af_level(f);
    let in_af = level.is_some();
    let in_gf = is_guarded(f);
    FragmentReport {
        in_fo2: vars.iter().all(|&v| v <= 2),
        in_af,
        af_bracket_level: level,
        af_variable_count: if in_af { Some(f.max_var()) } else { None },
        in_gf,
        in_ga: in_gf && in_af,
        uses_equality: f.uses_equality(),
        index_normal: is_index_normal(f),
    }
}

// ---------------------------------------------------------------------------
// Substitutions
// ---------------------------------------------------------------------------

/// `χ^g`: replace every `x_i` by `x_{g(i)}` in a quantifier-free `χ`.
pub fn substitute(chi: &Formula, g: &AdjacentFunction) -> Result<Formula, FormulaError> {
    if !chi.is_quantifier_free() {
        return Err(FormulaError::Shape("substitution needs a quantifier-free formula".into()));
    }
    if let Some(&v) = chi.all_vars().iter().find(|&&v| v > g.len()) {
        return Err(FormulaError::Shape(format!(
            "variable x{v} outside the domain of a function of length {}",
            g.len()
        )));
    }
    Ok(chi.map_vars(&|v| g.values[v - 1]))
}

/// `χ^{-1}` over `n` variables: `x_h ↦ x_{n-h+1}`.
pub fn invert(chi: &Formula, n: usize) -> Result<Formula, FormulaError> {
    if !chi.is_quantifier_free() {
        return Err(FormulaError::Shape("inversion needs a quantifier-free formula".into()));
    }
    if let Some(&v) = chi.all_vars().iter().find(|&&v| v > n) {
        return Err(FormulaError::Shape(format!("variable x{v} beyond x{n}")));
    }
    Ok(chi.map_vars(&|v| n + 1 - v))
}

/// `χ̂ = χ ∧ χ^{-1}`.
pub fn hat(chi: &Formula, n: usize) -> Result<Formula, FormulaError> {
    Ok(and(vec![chi.clone(), invert(chi, n)?]))
}

// ---------------------------------------------------------------------------
// Normal form and adjacent closure
// ---------------------------------------------------------------------------

/// `⋀_i ∀x̄_l ∃x_{l+1} γ_i ∧ ∀x̄_{l+1} β`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub l: usize,
    pub gammas: Vec<Formula>,
    pub beta: Formula,
}

impl NormalForm {
    pub fn to_formula(&self) -> Formula {
        let l = self.l;
        let mut parts: Vec<Formula> = self
            .gammas
            .iter()
            .map(|g| forall_range(1, l, exists(l + 1, g.clone())))
            .collect();
        parts.push(forall_range(1, l + 1, self.beta.clone()));
        Formula::And(parts)
    }

    /// Recognise the normal-form shape at exactly `l+1` variables.
    pub fn recognize(f: &Formula, l: usize) -> Option<NormalForm> {
        let mut gammas = Vec::new();
        let mut betas = Vec::new();
        for c in f.conjuncts() {
            let mut body = c;
            let mut count = 0;
            while let Formula::Forall(v, b) = body {
                if *v != count + 1 {
                    return None;
                }
                count += 1;
                body = b;
            }
            if count == l {
                if let Formula::Exists(v, g) = body {
                    if *v == l + 1 && g.is_quantifier_free() && g.max_var() <= l + 1 {
                        gammas.push((**g).clone());
                        continue;
                    }
                }
            }
            if count == l + 1 && body.is_quantifier_free() && body.max_var() <= l + 1 {
                betas.push(body.clone());
                continue;
            }
            return None;
        }
        Some(NormalForm {
            l,
            gammas,
            beta: and(betas),
        })
    }

    pub fn signature(&self) -> Result<Signature, FormulaError> {
        self.to_formula().signature()
    }
}

/// Rewrite an AF sentence into normal form over `l+1 = max(2, #vars)`
/// variables, introducing fresh predicates `_nfN`.
pub fn to_normal_form(phi: &Formula) -> Result<(NormalForm, Signature), FormulaError> {
    let free = phi.free_vars();
    if !free.is_empty() {
        return Err(FormulaError::NotSentence(free.into_iter().collect()));
    }
    if af_level(phi).is_none() {
        return Err(FormulaError::NotAdjacent("input is not in AF".into()));
    }
    if !is_index_normal(phi) {
        return Err(FormulaError::Shape("input is not index-normal".into()));
    }
    let n = phi.max_var().max(2);
    let l = n - 1;
    let mut sig = phi.signature()?;
    if let Some(nf) = NormalForm::recognize(phi, l) {
        return Ok((nf, sig));
    }
    let mut counter = 0usize;
    let mut gammas = Vec::new();
    let mut betas = Vec::new();

    fn fresh(sig: &mut Signature, counter: &mut usize, arity: usize) -> String {
        loop {
            let name = format!("_nf{}", *counter);
            *counter += 1;
            if !sig.contains_key(&name) {
                sig.insert(name.clone(), arity);
                return name;
            }
        }
    }

    fn eliminate(
        f: &Formula,
        l: usize,
        sig: &mut Signature,
        counter: &mut usize,
        gammas: &mut Vec<Formula>,
        betas: &mut Vec<Formula>,
    ) -> Formula {
        use Formula::*;
        let mut rec = |g: &Formula| eliminate(g, l, sig, counter, gammas, betas);
        match f {
            True | False | Atom(..) | Eq(..) => f.clone(),
            Not(a) => Not(Box::new(rec(a))),
            And(v) => And(v.iter().map(&mut rec).collect()),
            Or(v) => Or(v.iter().map(&mut rec).collect()),
            Implies(a, b) => {
                let a = rec(a);
                Implies(Box::new(a), Box::new(rec(b)))
            }
            Iff(a, b) => {
                let a = rec(a);
                Iff(Box::new(a), Box::new(rec(b)))
            }
            Forall(v, b) | Exists(v, b) => {
                let chi = rec(b);
                let k = v - 1;
                let name = fresh(sig, counter, k);
                let p = atom(&name, &(1..=k).collect::<Vec<_>>());
                let universal = matches!(f, Forall(..));
                let fwd = implies(p.clone(), chi.clone());
                let bwd = implies(chi, p.clone());
                // Shift so that the quantified variable becomes x_{l+1}.
                let by = l - k;
                let (ex, un) = if universal { (bwd, fwd) } else { (fwd, bwd) };
                gammas.push(ex.shift(by));
                betas.push(un.shift(by));
                p
            }
        }
    }

    let rest = eliminate(phi, l, &mut sig, &mut counter, &mut gammas, &mut betas);
    betas.push(rest);
    Ok((
        NormalForm {
            l,
            gammas,
            beta: and(betas),
        },
        sig,
    ))
}

/// The conjuncts of the adjacent closure before re-indexing: existential
/// ones as `(k, γ_i^{f⁺})` meaning `∀x̄_k ∃x_{k+1}`, universal ones as
/// `(k, β^g)` meaning `∀x̄_k`.
pub struct ClosureParts {
    pub existential: Vec<(usize, Formula)>,
    pub universal: Vec<(usize, Formula)>,
}

pub fn adjacent_closure_parts(nf: &NormalForm) -> Result<ClosureParts, FormulaError> {
    let l = nf.l;
    let mut existential = Vec::new();
    let mut universal = Vec::new();
    for gamma in &nf.gammas {
        for k in 1..l {
            for f in final_adjacent(l, k) {
                existential.push((k, substitute(gamma, &f.plus())?));
            }
        }
    }
    for k in 1..=l {
        for g in all_adjacent(l + 1, k) {
            universal.push((k, substitute(&nf.beta, &g)?));
        }
    }
    Ok(ClosureParts {
        existential,
        universal,
    })
}

/// `acl(φ)` as a normal form over `l` variables (one fewer than `φ`).
pub fn adjacent_closure(nf: &NormalForm) -> Result<NormalForm, FormulaError> {
    if nf.l == 0 {
        return Err(FormulaError::Shape("closure needs at least two variables".into()));
    }
    let parts = adjacent_closure_parts(nf)?;
    let l2 = nf.l - 1;
    let gammas = parts
        .existential
        .into_iter()
        .map(|(k, g)| g.shift(l2 - k))
        .collect();
    let betas = parts
        .universal
        .into_iter()
        .map(|(k, b)| b.shift(nf.l - k))
        .collect();
    Ok(NormalForm {
        l: l2,
        gammas,
        beta: Formula::And(betas),
    })
}

/// Expected number of closure conjuncts: `|I|·Σ_k|→𝔸^l_k| + Σ_k|𝔸^{l+1}_k|`.
pub fn closure_conjunct_count(nf: &NormalForm) -> usize {
    let l = nf.l;
    let ex: usize = (1..l).map(|k| final_adjacent(l, k).len()).sum();
    let un: usize = (1..=l).map(|k| all_adjacent(l + 1, k).len()).sum();
    nf.gammas.len() * ex + un
}
