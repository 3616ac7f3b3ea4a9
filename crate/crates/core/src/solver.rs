//! Bounded finite-model search by propositional grounding, and the
//! variable-reduction pipeline down to two variables.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;
use varisat::{CnfFormula, ExtendFormula, Lit, Solver, Var};

use crate::formulas::{
    af_level, check_fragments, to_normal_form, Formula, FormulaError, NormalForm, Signature,
};
use crate::reduction::{build_psi, elevate_model, Caps, Reduction, ReductionError, Variant};
use crate::structures::{models, Structure, StructureFile};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("formula error: {0}")]
    Formula(#[from] FormulaError),
    #[error("reduction error: {0}")]
    Reduction(#[from] ReductionError),
    #[error("input is not a sentence")]
    NotSentence,
    #[error("input is not in AF")]
    NotAdjacent,
    #[error("grounding exceeds {0} clauses at domain size {1}")]
    Capacity(usize, usize),
    #[error("SAT solver failure: {0}")]
    Sat(String),
    #[error("model check failed at level {0}")]
    Check(usize),
}

/// Limits on a single grounding.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchCaps {
    pub clauses: usize,
}

impl Default for SearchCaps {
    fn default() -> Self {
        Self { clauses: 20_000_000 }
    }
}

// ---------------------------------------------------------------------------
// Grounding
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum G {
    Const(bool),
    Lit(Lit),
}

impl G {
    fn negate(self) -> G {
        match self {
            G::Const(b) => G::Const(!b),
            G::Lit(l) => G::Lit(!l),
        }
    }
}

struct Grounder {
    n: usize,
    cnf: CnfFormula,
    atoms: HashMap<(usize, Vec<u32>), Var>,
    preds: Vec<(String, usize)>,
    pred_idx: HashMap<String, usize>,
    clauses: usize,
    cap: usize,
    unsat: bool,
}

impl Grounder {
    fn new(n: usize, sig: &Signature, cap: usize) -> Self {
        let preds: Vec<(String, usize)> = sig.iter().map(|(p, &a)| (p.clone(), a)).collect();
        let pred_idx = preds
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (p.clone(), i))
            .collect();
        Self {
            n,
            cnf: CnfFormula::new(),
            atoms: HashMap::new(),
            preds,
            pred_idx,
            clauses: 0,
            cap,
            unsat: false,
        }
    }

    fn clause(&mut self, lits: &[Lit]) -> Result<(), SolverError> {
        self.clauses += 1;
        if self.clauses > self.cap {
            return Err(SolverError::Capacity(self.cap, self.n));
        }
        self.cnf.add_clause(lits);
        Ok(())
    }

    fn atom_var(&mut self, p: &str, t: Vec<u32>) -> Var {
        let pi = self.pred_idx[p];
        if let Some(&v) = self.atoms.get(&(pi, t.clone())) {
            return v;
        }
        let v = self.cnf.new_var();
        self.atoms.insert((pi, t), v);
        v
    }

    fn junction(&mut self, parts: Vec<G>, is_and: bool) -> Result<G, SolverError> {
        let absorbing = !is_and;
        let mut lits = Vec::with_capacity(parts.len());
        for g in parts {
            match g {
                G::Const(b) if b == absorbing => return Ok(G::Const(absorbing)),
                G::Const(_) => {}
                G::Lit(l) => lits.push(l),
            }
        }
        match lits.len() {
            0 => Ok(G::Const(is_and)),
            1 => Ok(G::Lit(lits[0])),
            _ => {
                // AND: v ↔ ⋀ lits; OR is the dual through negation.
                let v = self.cnf.new_var().positive();
                let (out, ins): (Lit, Vec<Lit>) = if is_and {
                    (v, lits)
                } else {
                    (!v, lits.into_iter().map(|l| !l).collect())
                };
                for &l in &ins {
                    self.clause(&[!out, l])?;
                }
                let mut big: Vec<Lit> = ins.iter().map(|&l| !l).collect();
                big.push(out);
                self.clause(&big)?;
                Ok(G::Lit(v))
            }
        }
    }

    fn ground(&mut self, f: &Formula, env: &mut Vec<u32>) -> Result<G, SolverError> {
        use Formula::*;
        Ok(match f {
            True => G::Const(true),
            False => G::Const(false),
            Atom(p, args) => {
                let t: Vec<u32> = args.iter().map(|&v| env[v]).collect();
                G::Lit(self.atom_var(p, t).positive())
            }
            Eq(a, b) => G::Const(env[*a] == env[*b]),
            Not(a) => self.ground(a, env)?.negate(),
            And(v) | Or(v) => {
                let mut parts = Vec::with_capacity(v.len());
                for c in v {
                    let g = self.ground(c, env)?;
                    parts.push(g);
                }
                self.junction(parts, matches!(f, And(_)))?
            }
            Implies(a, b) => {
                let a = self.ground(a, env)?.negate();
                let b = self.ground(b, env)?;
                self.junction(vec![a, b], false)?
            }
            Iff(a, b) => {
                let a = self.ground(a, env)?;
                let b = self.ground(b, env)?;
                match (a, b) {
                    (G::Const(x), G::Const(y)) => G::Const(x == y),
                    (G::Const(x), g) | (g, G::Const(x)) => {
                        if x {
                            g
                        } else {
                            g.negate()
                        }
                    }
                    (G::Lit(x), G::Lit(y)) => {
                        let v = self.cnf.new_var().positive();
                        self.clause(&[!v, !x, y])?;
                        self.clause(&[!v, x, !y])?;
                        self.clause(&[v, x, y])?;
                        self.clause(&[v, !x, !y])?;
                        G::Lit(v)
                    }
                }
            }
            Forall(x, b) | Exists(x, b) => {
                let saved = env[*x];
                let mut parts = Vec::with_capacity(self.n);
                for e in 0..self.n as u32 {
                    env[*x] = e;
                    let g = self.ground(b, env)?;
                    parts.push(g);
                }
                env[*x] = saved;
                self.junction(parts, matches!(f, Forall(..)))?
            }
        })
    }

    /// Assert `f` at the top level, splitting conjunctions and universal
    /// quantifiers. The first top-level existential of a sentence is
    /// instantiated with element 0 only.
    fn assert(&mut self, f: &Formula, env: &mut Vec<u32>, pinned: &mut bool, depth: usize) -> Result<(), SolverError> {
        use Formula::*;
        match f {
            And(v) => {
                for c in v {
                    self.assert(c, env, pinned, depth)?;
                }
            }
            Forall(x, b) => {
                let saved = env[*x];
                for e in 0..self.n as u32 {
                    env[*x] = e;
                    self.assert(b, env, pinned, depth + 1)?;
                }
                env[*x] = saved;
            }
            Exists(x, b) if depth == 0 && !*pinned => {
                *pinned = true;
                let saved = env[*x];
                env[*x] = 0;
                self.assert(b, env, pinned, depth + 1)?;
                env[*x] = saved;
            }
            _ => match self.ground(f, env)? {
                G::Const(true) => {}
                G::Const(false) => self.unsat = true,
                G::Lit(l) => self.clause(&[l])?,
            },
        }
        Ok(())
    }
}

/// Search for a model of `φ` with exactly `n` elements.
pub fn model_of_size(phi: &Formula, n: usize, caps: SearchCaps) -> Result<Option<Structure>, SolverError> {
    if !phi.free_vars().is_empty() {
        return Err(SolverError::NotSentence);
    }
    let sig = phi.signature()?;
    let mut g = Grounder::new(n, &sig, caps.clauses);
    let mut env = vec![0u32; phi.max_var() + 1];
    let mut pinned = false;
    g.assert(phi, &mut env, &mut pinned, 0)?;
    if g.unsat {
        return Ok(None);
    }
    let mut solver = Solver::new();
    solver.add_formula(&g.cnf);
    if !solver.solve().map_err(|e| SolverError::Sat(e.to_string()))? {
        return Ok(None);
    }
    let model = solver.model().ok_or_else(|| SolverError::Sat("no model".into()))?;
    let mut truth = vec![false; g.cnf.var_count()];
    for l in model {
        if l.index() < truth.len() {
            truth[l.index()] = l.is_positive();
        }
    }
    let mut s = Structure::with_signature(n, &sig);
    for ((pi, t), v) in &g.atoms {
        if truth[v.index()] {
            s.insert(&g.preds[*pi].0, t);
        }
    }
    debug_assert!(models(&s, phi));
    Ok(Some(s))
}

/// Smallest model with at most `n_max` elements, trying `n = 1, 2, …`.
pub fn bounded_model_search(phi: &Formula, n_max: usize) -> Result<Option<Structure>, SolverError> {
    bounded_model_search_with(phi, n_max, SearchCaps::default())
}

pub fn bounded_model_search_with(
    phi: &Formula,
    n_max: usize,
    caps: SearchCaps,
) -> Result<Option<Structure>, SolverError> {
    for n in 1..=n_max {
        if let Some(s) = model_of_size(phi, n, caps)? {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// One step of the reduction chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainLevel {
    /// Number of variables of the formula at this level.
    pub variables: usize,
    pub size: usize,
}

pub struct Chain {
    pub levels: Vec<ChainLevel>,
    /// The reductions applied, outermost first.
    pub steps: Vec<Reduction>,
    /// Normal form of the input (absent for inputs with at most two variables).
    pub normal_form: Option<NormalForm>,
}

/// Reduce an AF sentence to an equisatisfiable sentence with two variables.
pub fn reduce_to_two_vars(phi: &Formula, caps: Caps) -> Result<(Formula, Chain), SolverError> {
    if !phi.free_vars().is_empty() {
        return Err(SolverError::NotSentence);
    }
    if af_level(phi).is_none() {
        return Err(SolverError::NotAdjacent);
    }
    let vars = phi.max_var().max(1);
    let mut levels = vec![ChainLevel {
        variables: vars,
        size: phi.size(),
    }];
    if vars <= 2 {
        return Ok((
            phi.clone(),
            Chain {
                levels,
                steps: Vec::new(),
                normal_form: None,
            },
        ));
    }
    let (nf, _) = to_normal_form(phi)?;
    let mut current = nf.clone();
    let mut steps = Vec::new();
    while current.l >= 2 {
        let out = build_psi(&current, Variant::WithEquality, caps)?;
        current = out.psi;
        let f = current.to_formula();
        levels.push(ChainLevel {
            variables: current.l + 1,
            size: f.size(),
        });
        steps.push(out.reduction);
    }
    Ok((
        current.to_formula(),
        Chain {
            levels,
            steps,
            normal_form: Some(nf),
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum Verdict {
    ModelFound { size: usize },
    NoModelUpTo { n: usize },
    ReducedOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub verdict: Verdict,
    pub model: Option<StructureFile>,
    pub reduction_chain: Vec<ChainLevel>,
    pub wall_time_ms: u128,
    pub pipeline: bool,
    pub note: String,
}

impl SolveReport {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::ModelFound { .. } => 0,
            Verdict::NoModelUpTo { .. } => 1,
            Verdict::ReducedOnly => 2,
        }
    }
}

const NOTE: &str = "bounded search only: no certified completeness bound is computed";

/// Direct bounded search, or the reduction pipeline with elevation and a
/// model check at every level.
pub fn decide_sat_desk(phi: &Formula, n_max: usize, pipeline: bool) -> Result<SolveReport, SolverError> {
    decide_sat_desk_with(phi, n_max, pipeline, Caps::default(), SearchCaps::default())
}

pub fn decide_sat_desk_with(
    phi: &Formula,
    n_max: usize,
    pipeline: bool,
    caps: Caps,
    search: SearchCaps,
) -> Result<SolveReport, SolverError> {
    let start = Instant::now();
    if !check_fragments(phi).in_af {
        return Err(SolverError::NotAdjacent);
    }
    let finish = |verdict, model: Option<Structure>, chain: Vec<ChainLevel>| SolveReport {
        verdict,
        model: model.as_ref().map(StructureFile::from_structure),
        reduction_chain: chain,
        wall_time_ms: start.elapsed().as_millis(),
        pipeline,
        note: NOTE.into(),
    };
    if !pipeline {
        let chain = vec![ChainLevel {
            variables: phi.max_var(),
            size: phi.size(),
        }];
        return Ok(match bounded_model_search_with(phi, n_max, search)? {
            Some(m) => finish(Verdict::ModelFound { size: m.domain_size }, Some(m), chain),
            None => finish(Verdict::NoModelUpTo { n: n_max }, None, chain),
        });
    }
    let (two, chain) = match reduce_to_two_vars(phi, caps) {
        Ok(r) => r,
        Err(SolverError::Reduction(ReductionError::Capacity(_))) => {
            return Ok(finish(Verdict::ReducedOnly, None, Vec::new()));
        }
        Err(e) => return Err(e),
    };
    let levels = chain.levels.clone();
    let found = match bounded_model_search_with(&two, n_max, search) {
        Ok(f) => f,
        Err(SolverError::Capacity(..)) => return Ok(finish(Verdict::ReducedOnly, None, levels)),
        Err(e) => return Err(e),
    };
    let Some(mut model) = found else {
        return Ok(finish(Verdict::NoModelUpTo { n: n_max }, None, levels));
    };
    for (depth, red) in chain.steps.iter().enumerate().rev() {
        model = elevate_model(red, &model)?;
        if !models(&model, &red.phi.to_formula()) {
            return Err(SolverError::Check(depth));
        }
    }
    let sig: Signature = phi.signature()?;
    let model = model.reduct(&sig);
    if !models(&model, phi) {
        return Err(SolverError::Check(0));
    }
    Ok(finish(
        Verdict::ModelFound {
            size: model.domain_size,
        },
        Some(model),
        levels,
    ))
}

/// Satisfiability at each domain size `1..=n_max` (not only the least).
pub fn satisfiable_sizes(phi: &Formula, n_max: usize) -> Result<BTreeMap<usize, bool>, SolverError> {
    (1..=n_max)
        .map(|n| Ok((n, model_of_size(phi, n, SearchCaps::default())?.is_some())))
        .collect()
}
