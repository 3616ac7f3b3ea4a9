//! Alternating Turing machines with tape length `2ⁿ`, their compilation to
//! guarded adjacent sentences, a simulator producing acceptance trees, and
//! the tree-to-model construction.
//!
//! Variable layout of the templates (official indices, quantified in
//! increasing order):
//!
//! * `genright_m(p)`: `x y ū` is `x1 x2 x3…x_{m+2}`.
//! * `genbi_m(r)`: `u_{m+2}…u_1 v_1…v_{m+2}` is `x1…x_{2m+4}`.
//! * configuration axioms under `G_{2n}`: `x y ū v̄` is `x1…x_{2n+2}`.
//! * transition axioms under `F_n`: `ū y x z t v̄` is `x1…x_{2n+4}`.
//! * successor axioms: `u_n…u_1 y x` is `x1…x_{n+2}`, then `z t` is
//!   `x_{n+3} x_{n+4}`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulas::{and, atom, iff, implies, not, or, Formula};
use crate::structures::Structure;
use crate::words::lambda_functions;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid machine: {0}")]
    Machine(String),
    #[error("input symbol {0:?} not in the alphabet")]
    Input(String),
    #[error("input of length {0} does not fit a tape of length {1}")]
    InputLength(usize, usize),
    #[error("space exponent {0} exceeds the cap {1}")]
    Exponent(usize, usize),
    #[error("configuration space exceeds {0}")]
    Capacity(usize),
    #[error("invalid acceptance tree: {0}")]
    Tree(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Existential,
    Universal,
    Accept,
    Reject,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpec {
    pub name: String,
    pub kind: StateKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub from: String,
    pub read: String,
    pub to: String,
    pub write: String,
    #[serde(rename = "move")]
    pub mv: i32,
}

/// Machine description in its JSON form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtmSpec {
    pub states: Vec<StateSpec>,
    pub alphabet: Vec<String>,
    pub blank: String,
    pub initial: String,
    pub transitions: Vec<TransitionSpec>,
    pub space_exponent: usize,
}

/// A validated machine with states and symbols as indices.
#[derive(Debug, Clone)]
pub struct Atm {
    pub spec: AtmSpec,
    pub kinds: Vec<StateKind>,
    /// `Σ'`: the alphabet followed by the blank.
    pub symbols: Vec<String>,
    pub blank: usize,
    pub initial: usize,
    /// `(q, s, q', s', move)`.
    pub delta: Vec<(usize, usize, usize, usize, i32)>,
    pub n: usize,
}

pub const DEFAULT_EXPONENT_CAP: usize = 4;

impl Atm {
    pub fn new(spec: AtmSpec) -> Result<Self, EncoderError> {
        let bad = |m: String| EncoderError::Machine(m);
        let state_idx: HashMap<&str, usize> = spec
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i))
            .collect();
        if state_idx.len() != spec.states.len() {
            return Err(bad("duplicate state names".into()));
        }
        let mut symbols = spec.alphabet.clone();
        if !symbols.contains(&spec.blank) {
            symbols.push(spec.blank.clone());
        }
        let sym_idx: HashMap<&str, usize> = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        if sym_idx.len() != symbols.len() {
            return Err(bad("duplicate symbols".into()));
        }
        let blank = sym_idx[spec.blank.as_str()];
        let initial = *state_idx
            .get(spec.initial.as_str())
            .ok_or_else(|| bad(format!("unknown initial state {}", spec.initial)))?;
        let kinds: Vec<StateKind> = spec.states.iter().map(|s| s.kind).collect();
        for k in [StateKind::Accept, StateKind::Reject] {
            if kinds.iter().filter(|&&x| x == k).count() > 1 {
                return Err(bad(format!("more than one {k:?} state")));
            }
        }
        let mut delta = Vec::new();
        for t in &spec.transitions {
            let get_q = |n: &str| {
                state_idx
                    .get(n)
                    .copied()
                    .ok_or_else(|| bad(format!("unknown state {n}")))
            };
            let get_s = |n: &str| {
                sym_idx
                    .get(n)
                    .copied()
                    .ok_or_else(|| bad(format!("unknown symbol {n}")))
            };
            if !(-1..=1).contains(&t.mv) {
                return Err(bad(format!("move {} not in -1..1", t.mv)));
            }
            delta.push((get_q(&t.from)?, get_s(&t.read)?, get_q(&t.to)?, get_s(&t.write)?, t.mv));
        }
        for (q, &kind) in kinds.iter().enumerate() {
            for s in 0..symbols.len() {
                let enabled = delta.iter().any(|d| d.0 == q && d.1 == s);
                let halting = matches!(kind, StateKind::Accept | StateKind::Reject);
                if halting && enabled {
                    return Err(bad(format!("halting state {} has a transition", spec.states[q].name)));
                }
                if !halting && !enabled {
                    return Err(bad(format!(
                        "state {} has no transition on {}",
                        spec.states[q].name, symbols[s]
                    )));
                }
            }
        }
        if spec.space_exponent == 0 {
            return Err(bad("space exponent must be positive".into()));
        }
        let n = spec.space_exponent;
        Ok(Self {
            spec,
            kinds,
            symbols,
            blank,
            initial,
            delta,
            n,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, EncoderError> {
        let spec: AtmSpec =
            serde_json::from_str(text).map_err(|e| EncoderError::Machine(e.to_string()))?;
        Self::new(spec)
    }

    pub fn tape_length(&self) -> usize {
        1 << self.n
    }

    /// Parse an input word: one character per symbol if every symbol is a
    /// single character, otherwise comma separated.
    pub fn parse_input(&self, w: &str) -> Result<Vec<usize>, EncoderError> {
        let parts: Vec<String> = if w.contains(',') || self.symbols.iter().any(|s| s.chars().count() != 1) {
            w.split(',').filter(|p| !p.is_empty()).map(str::to_string).collect()
        } else {
            w.chars().map(|c| c.to_string()).collect()
        };
        parts
            .iter()
            .map(|p| {
                self.spec
                    .alphabet
                    .iter()
                    .position(|s| s == p)
                    .ok_or_else(|| EncoderError::Input(p.clone()))
            })
            .collect()
    }

    fn enabled(&self, q: usize, s: usize) -> Vec<usize> {
        (0..self.delta.len())
            .filter(|&i| self.delta[i].0 == q && self.delta[i].1 == s)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Config {
    pub state: usize,
    pub tape: Vec<usize>,
    pub head: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeNode {
    pub config: Config,
    /// `(transition index, child node)`.
    pub children: Vec<(usize, usize)>,
}

/// Node 0 is the root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcceptanceTree {
    pub nodes: Vec<TreeNode>,
}

/// Successor through transition `d`, or `None` when the head leaves the tape.
pub fn step(m: &Atm, c: &Config, d: usize) -> Option<Config> {
    let (_, _, q2, s2, mv) = m.delta[d];
    let head = c.head as i64 + mv as i64;
    if head < 0 || head >= m.tape_length() as i64 {
        return None;
    }
    let mut tape = c.tape.clone();
    tape[c.head] = s2;
    Some(Config {
        state: q2,
        tape,
        head: head as usize,
    })
}

pub fn initial_config(m: &Atm, w0: &[usize]) -> Result<Config, EncoderError> {
    let len = m.tape_length();
    if w0.len() > len {
        return Err(EncoderError::InputLength(w0.len(), len));
    }
    let mut tape = vec![m.blank; len];
    tape[..w0.len()].copy_from_slice(w0);
    Ok(Config {
        state: m.initial,
        tape,
        head: 0,
    })
}

pub const DEFAULT_CONFIG_CAP: usize = 1 << 20;

/// An acceptance tree if `M` accepts `w0`. Acceptance is the least
/// fixpoint over the reachable configurations, so looping branches reject.
pub fn atm_accepts(m: &Atm, w0: &[usize]) -> Result<Option<AcceptanceTree>, EncoderError> {
    atm_accepts_with(m, w0, DEFAULT_CONFIG_CAP)
}

pub fn atm_accepts_with(m: &Atm, w0: &[usize], cap: usize) -> Result<Option<AcceptanceTree>, EncoderError> {
    let root = initial_config(m, w0)?;
    let mut index: HashMap<Config, usize> = HashMap::new();
    let mut configs: Vec<Config> = Vec::new();
    // Per configuration: per enabled transition, the successor (if on tape).
    let mut succ: Vec<Vec<(usize, Option<usize>)>> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(root.clone(), 0);
    configs.push(root);
    queue.push_back(0);
    while let Some(i) = queue.pop_front() {
        let c = configs[i].clone();
        let mut row = Vec::new();
        for d in m.enabled(c.state, c.tape[c.head]) {
            let next = step(m, &c, d).map(|nc| {
                *index.entry(nc.clone()).or_insert_with(|| {
                    configs.push(nc);
                    queue.push_back(configs.len() - 1);
                    configs.len() - 1
                })
            });
            row.push((d, next));
        }
        succ.push(row);
        if configs.len() > cap {
            return Err(EncoderError::Capacity(cap));
        }
    }
    // rank[i]: round in which configuration i became accepting.
    let mut rank: Vec<Option<usize>> = configs
        .iter()
        .map(|c| (m.kinds[c.state] == StateKind::Accept).then_some(0))
        .collect();
    let mut round = 0;
    loop {
        round += 1;
        let mut changed = false;
        let snapshot = rank.clone();
        for i in 0..configs.len() {
            if snapshot[i].is_some() {
                continue;
            }
            let ok = |e: &(usize, Option<usize>)| e.1.is_some_and(|j| snapshot[j].is_some());
            let accept = match m.kinds[configs[i].state] {
                StateKind::Existential => succ[i].iter().any(ok),
                StateKind::Universal => !succ[i].is_empty() && succ[i].iter().all(ok),
                _ => false,
            };
            if accept {
                rank[i] = Some(round);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if rank[0].is_none() {
        return Ok(None);
    }
    let mut tree = AcceptanceTree { nodes: Vec::new() };
    build_tree(m, 0, &configs, &succ, &rank, &mut tree);
    Ok(Some(tree))
}

fn build_tree(
    m: &Atm,
    i: usize,
    configs: &[Config],
    succ: &[Vec<(usize, Option<usize>)>],
    rank: &[Option<usize>],
    tree: &mut AcceptanceTree,
) -> usize {
    let id = tree.nodes.len();
    tree.nodes.push(TreeNode {
        config: configs[i].clone(),
        children: Vec::new(),
    });
    let r = rank[i].unwrap();
    let chosen: Vec<(usize, usize)> = match m.kinds[configs[i].state] {
        StateKind::Existential => succ[i]
            .iter()
            .filter_map(|&(d, j)| j.filter(|&j| rank[j].is_some_and(|rj| rj < r)).map(|j| (d, j)))
            .take(1)
            .collect(),
        StateKind::Universal => succ[i].iter().map(|&(d, j)| (d, j.unwrap())).collect(),
        _ => Vec::new(),
    };
    for (d, j) in chosen {
        let child = build_tree(m, j, configs, succ, rank, tree);
        tree.nodes[id].children.push((d, child));
    }
    id
}

/// Structural validation of a tree against the machine and input.
pub fn check_tree(m: &Atm, w0: &[usize], tree: &AcceptanceTree) -> Result<(), EncoderError> {
    let bad = |s: String| EncoderError::Tree(s);
    let root = tree.nodes.first().ok_or_else(|| bad("empty tree".into()))?;
    if root.config != initial_config(m, w0)? {
        return Err(bad("root is not the initial configuration".into()));
    }
    let mut parent = vec![0usize; tree.nodes.len()];
    for (i, node) in tree.nodes.iter().enumerate() {
        let c = &node.config;
        if c.state >= m.kinds.len() || c.tape.len() != m.tape_length() || c.head >= m.tape_length() {
            return Err(bad(format!("node {i} is not a configuration")));
        }
        let enabled = m.enabled(c.state, c.tape[c.head]);
        for &(d, j) in &node.children {
            if j <= i || j >= tree.nodes.len() {
                return Err(bad(format!("node {i} has a bad child index {j}")));
            }
            parent[j] += 1;
            if !enabled.contains(&d) || step(m, c, d).as_ref() != Some(&tree.nodes[j].config) {
                return Err(bad(format!("edge {i} -> {j} is not a transition")));
            }
        }
        let used: BTreeSet<usize> = node.children.iter().map(|&(d, _)| d).collect();
        match m.kinds[c.state] {
            StateKind::Accept => {}
            StateKind::Reject => return Err(bad(format!("node {i} rejects"))),
            StateKind::Existential => {
                if node.children.is_empty() {
                    return Err(bad(format!("existential node {i} has no child")));
                }
            }
            StateKind::Universal => {
                if enabled.iter().any(|d| !used.contains(d)) {
                    return Err(bad(format!("universal node {i} misses a transition")));
                }
            }
        }
    }
    if parent.iter().skip(1).any(|&p| p != 1) {
        return Err(bad("not a tree".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Formula templates
// ---------------------------------------------------------------------------

pub fn g_name(m: usize) -> String {
    format!("G{m}")
}

pub fn f_name(m: usize) -> String {
    format!("F{m}")
}

/// `genright_m(p)`: one base conjunct and three λ propagations.
pub fn gen_right(m: usize, p: &str) -> Formula {
    let g = g_name(m);
    let mut base_args = vec![1, 2];
    base_args.extend(std::iter::repeat(2).take(m));
    let mut parts = vec![forall_block(2, implies(atom(p, &[1, 2]), atom(&g, &base_args)))];
    let all: Vec<usize> = (1..=m + 2).collect();
    for lam in lambda_functions(m) {
        parts.push(forall_block(
            m + 2,
            implies(atom(&g, &all), atom(&g, &lam.values)),
        ));
    }
    Formula::And(parts)
}

/// `genbi_m(r)`: one base conjunct and sixteen propagations.
pub fn gen_bi(m: usize, r: &str) -> Formula {
    let f = f_name(m);
    let mut base_args: Vec<usize> = vec![1; m];
    base_args.extend([1, 2, 3, 4]);
    base_args.extend(std::iter::repeat(4).take(m));
    let mut parts = vec![forall_block(4, implies(atom(r, &[1, 2, 3, 4]), atom(&f, &base_args)))];
    let width = 2 * m + 4;
    let all: Vec<usize> = (1..=width).collect();
    let u = |i: usize| m + 3 - i;
    let v = |j: usize| m + 2 + j;
    let mut lambdas: Vec<Vec<usize>> = vec![(1..=m + 2).collect()];
    lambdas.extend(lambda_functions(m).into_iter().map(|l| l.values));
    for li in &lambdas {
        for lj in &lambdas {
            let mut args: Vec<usize> = li.iter().rev().map(|&i| u(i)).collect();
            args.extend(lj.iter().map(|&j| v(j)));
            parts.push(forall_block(width, implies(atom(&f, &all), atom(&f, &args))));
        }
    }
    Formula::And(parts)
}

fn forall_block(k: usize, body: Formula) -> Formula {
    crate::formulas::forall_range(1, k, body)
}

/// `val(ū) = val(v̄)` on bits read through `O`, most significant first.
pub fn num_eq(u: &[usize], v: &[usize]) -> Formula {
    and(u
        .iter()
        .zip(v)
        .map(|(&a, &b)| iff(atom("O", &[a]), atom("O", &[b])))
        .collect())
}

/// `val(ū) = val(v̄) + k` for `k ∈ {-1, +1}`.
pub fn num_eq_plus(u: &[usize], v: &[usize], k: i32) -> Formula {
    let (hi, lo) = if k > 0 { (u, v) } else { (v, u) };
    let n = u.len();
    or((0..n)
        .map(|p| {
            let mut c: Vec<Formula> = (0..p)
                .map(|i| iff(atom("O", &[hi[i]]), atom("O", &[lo[i]])))
                .collect();
            c.push(atom("O", &[hi[p]]));
            c.push(not(atom("O", &[lo[p]])));
            for i in p + 1..n {
                c.push(not(atom("O", &[hi[i]])));
                c.push(atom("O", &[lo[i]]));
            }
            and(c)
        })
        .collect())
}

/// `eq`, `eq_plus(+1)` and `eq_plus(-1)` over `ū = x1…xn`, `v̄ = x_{n+1}…x_{2n}`.
#[derive(Debug, Clone)]
pub struct NumFormulas {
    pub n: usize,
    pub eq: Formula,
    pub plus_one: Formula,
    pub minus_one: Formula,
}

pub fn num_formulas(n: usize) -> NumFormulas {
    let u: Vec<usize> = (1..=n).collect();
    let v: Vec<usize> = (n + 1..=2 * n).collect();
    NumFormulas {
        n,
        eq: num_eq(&u, &v),
        plus_one: num_eq_plus(&u, &v, 1),
        minus_one: num_eq_plus(&u, &v, -1),
    }
}

fn shift_eq(u: &[usize], v: &[usize], k: i32) -> Formula {
    if k == 0 {
        num_eq(u, v)
    } else {
        num_eq_plus(u, v, k)
    }
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

fn ident(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_string()
            } else {
                format!("x{:02x}", c as u32)
            }
        })
        .collect()
}

/// Predicate names used by the encoding.
#[derive(Debug, Clone, Serialize)]
pub struct EncodingNames {
    pub states: Vec<String>,
    pub symbols: Vec<String>,
    pub transitions: Vec<String>,
    pub head: String,
    pub one: String,
}

pub fn encoding_names(m: &Atm) -> EncodingNames {
    EncodingNames {
        states: m.spec.states.iter().map(|s| format!("q_{}", ident(&s.name))).collect(),
        symbols: (0..m.symbols.len())
            .map(|i| format!("s{i}_{}", ident(&m.symbols[i])))
            .collect(),
        transitions: (0..m.delta.len()).map(|i| format!("E{i}")).collect(),
        head: "H".into(),
        one: "O".into(),
    }
}

fn range(a: usize, b: usize) -> Vec<usize> {
    (a..=b).collect()
}

/// The sentence `φ_{M,w0}`.
pub fn encode(m: &Atm, w0: &[usize]) -> Result<Formula, EncoderError> {
    encode_with_cap(m, w0, DEFAULT_EXPONENT_CAP)
}

pub fn encode_with_cap(m: &Atm, w0: &[usize], cap: usize) -> Result<Formula, EncoderError> {
    let n = m.n;
    if n > cap {
        return Err(EncoderError::Exponent(n, cap));
    }
    if w0.len() > m.tape_length() {
        return Err(EncoderError::InputLength(w0.len(), m.tape_length()));
    }
    let names = encoding_names(m);
    let h = names.head.as_str();
    let mut parts = Vec::new();

    // States are pairs of a zero and a unit bit.
    for q in &names.states {
        parts.push(forall_block(
            2,
            implies(atom(q, &[1, 2]), and(vec![not(atom("O", &[1])), atom("O", &[2])])),
        ));
    }
    for q in &names.states {
        parts.push(gen_right(n, q));
        parts.push(gen_right(2 * n, q));
    }

    // ψ_q: unique head, unique symbol per cell, unique state.
    let g2n = g_name(2 * n);
    let gn = g_name(n);
    let u2 = range(3, n + 2);
    let v2 = range(n + 3, 2 * n + 2);
    parts.push(forall_block(
        2 * n + 2,
        implies(
            atom(&g2n, &range(1, 2 * n + 2)),
            implies(and(vec![atom(h, &u2), atom(h, &v2)]), num_eq(&u2, &v2)),
        ),
    ));
    let mut unique_symbol = Vec::new();
    for a in 0..names.symbols.len() {
        for b in a + 1..names.symbols.len() {
            unique_symbol.push(not(and(vec![
                atom(&names.symbols[a], &u2),
                atom(&names.symbols[b], &u2),
            ])));
        }
    }
    parts.push(forall_block(
        n + 2,
        implies(atom(&gn, &range(1, n + 2)), and(unique_symbol)),
    ));
    for (i, q) in names.states.iter().enumerate() {
        let others: Vec<Formula> = names
            .states
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| not(atom(p, &[1, 2])))
            .collect();
        parts.push(forall_block(2, implies(atom(q, &[1, 2]), and(others))));
    }

    // ψ_δ under the F_n guard: ū y x z t v̄ is x1…x_{2n+4}.
    let fnn = f_name(n);
    let fu = range(1, n);
    let fv = range(n + 5, 2 * n + 4);
    let e_args = range(n + 1, n + 4);
    let guard = atom(&fnn, &range(1, 2 * n + 4));
    for (i, &(_, _, q2, s2, mv)) in m.delta.iter().enumerate() {
        let e = names.transitions[i].as_str();
        parts.push(gen_bi(n, e));
        parts.push(forall_block(
            4,
            implies(atom(e, &[1, 2, 3, 4]), atom(&names.states[q2], &[3, 4])),
        ));
        let edge = atom(e, &e_args);
        parts.push(forall_block(
            2 * n + 4,
            implies(
                guard.clone(),
                implies(
                    and(vec![edge.clone(), atom(h, &fu), shift_eq(&fv, &fu, mv)]),
                    atom(h, &fv),
                ),
            ),
        ));
        parts.push(forall_block(
            2 * n + 4,
            implies(
                guard.clone(),
                implies(
                    and(vec![edge.clone(), atom(h, &fu), num_eq(&fu, &fv)]),
                    atom(&names.symbols[s2], &fv),
                ),
            ),
        ));
        let inherit: Vec<Formula> = names
            .symbols
            .iter()
            .map(|s| iff(atom(s, &fu), atom(s, &fv)))
            .collect();
        parts.push(forall_block(
            2 * n + 4,
            implies(
                guard.clone(),
                implies(
                    and(vec![edge, not(atom(h, &fu)), num_eq(&fu, &fv)]),
                    and(inherit),
                ),
            ),
        ));
    }

    // Initial configuration.
    let q0 = &names.states[m.initial];
    let bits = |i: usize| -> Vec<usize> {
        (0..n).map(|b| if (i >> (n - 1 - b)) & 1 == 1 { 2 } else { 1 }).collect()
    };
    let mut init = vec![atom(q0, &[1, 2]), atom(h, &bits(0))];
    for (i, &s) in w0.iter().enumerate() {
        init.push(atom(&names.symbols[s], &bits(i)));
    }
    let cells = range(3, n + 2);
    let not_input: Vec<Formula> = (0..w0.len())
        .map(|i| not(num_eq(&bits(i), &cells)))
        .collect();
    init.push(crate::formulas::forall_range(
        3,
        n + 2,
        implies(
            atom(&gn, &range(1, n + 2)),
            implies(and(not_input), atom(&names.symbols[m.blank], &cells)),
        ),
    ));
    parts.push(Formula::Exists(1, Box::new(Formula::Exists(2, Box::new(and(init))))));

    // Successors: u_n…u_1 y x is x1…x_{n+2}, then z t.
    let su: Vec<usize> = (1..=n).rev().collect();
    let (y, x) = (n + 1, n + 2);
    let mut gargs = vec![x, y];
    gargs.extend(su.iter().copied());
    for (q, &kind) in m.kinds.iter().enumerate() {
        if !matches!(kind, StateKind::Existential | StateKind::Universal) {
            continue;
        }
        for s in 0..m.symbols.len() {
            let succs: Vec<Formula> = m
                .enabled(q, s)
                .into_iter()
                .map(|d| {
                    Formula::Exists(
                        n + 3,
                        Box::new(Formula::Exists(
                            n + 4,
                            Box::new(atom(&names.transitions[d], &[y, x, n + 3, n + 4])),
                        )),
                    )
                })
                .collect();
            let body = if kind == StateKind::Existential {
                or(succs)
            } else {
                and(succs)
            };
            parts.push(forall_block(
                n + 2,
                implies(
                    atom(&gn, &gargs),
                    implies(
                        and(vec![
                            atom(&names.states[q], &[x, y]),
                            atom(h, &su),
                            atom(&names.symbols[s], &su),
                        ]),
                        body,
                    ),
                ),
            ));
        }
    }

    // Rejecting configurations are never encoded.
    for (q, &kind) in m.kinds.iter().enumerate() {
        if kind == StateKind::Reject {
            parts.push(not(Formula::Exists(
                1,
                Box::new(Formula::Exists(2, Box::new(atom(&names.states[q], &[1, 2])))),
            )));
        }
    }
    Ok(Formula::And(parts))
}

// ---------------------------------------------------------------------------
// Tree to model
// ---------------------------------------------------------------------------

/// Words of length `len` over `{a, b}` (`a` the zero bit), by value.
fn words(a: u32, b: u32, len: usize) -> Vec<Vec<u32>> {
    (0..1usize << len)
        .map(|v| {
            (0..len)
                .map(|i| if (v >> (len - 1 - i)) & 1 == 1 { b } else { a })
                .collect()
        })
        .collect()
}

/// Two fresh elements per node (`2i` the zero bit, `2i+1` the unit bit),
/// with every predicate of the encoding interpreted as intended.
pub fn build_model_from_tree(m: &Atm, w0: &[usize], tree: &AcceptanceTree) -> Result<Structure, EncoderError> {
    check_tree(m, w0, tree)?;
    let n = m.n;
    let names = encoding_names(m);
    let mut s = Structure::new(2 * tree.nodes.len());
    s.declare("O", 1);
    s.declare(&names.head, n);
    for q in &names.states {
        s.declare(q, 2);
    }
    for sym in &names.symbols {
        s.declare(sym, n);
    }
    for e in &names.transitions {
        s.declare(e, 4);
    }
    s.declare(&g_name(n), n + 2);
    s.declare(&g_name(2 * n), 2 * n + 2);
    s.declare(&f_name(n), 2 * n + 4);
    for (i, node) in tree.nodes.iter().enumerate() {
        let (a, b) = (2 * i as u32, 2 * i as u32 + 1);
        let c = &node.config;
        s.insert("O", &[b]);
        s.insert(&names.states[c.state], &[a, b]);
        let cells = words(a, b, n);
        s.insert(&names.head, &cells[c.head]);
        for (p, &sym) in c.tape.iter().enumerate() {
            s.insert(&names.symbols[sym], &cells[p]);
        }
        for len in [n, 2 * n] {
            for w in words(a, b, len) {
                let mut t = vec![a, b];
                t.extend(w);
                s.insert(&g_name(len), &t);
            }
        }
        for &(d, j) in &node.children {
            let (cz, dz) = (2 * j as u32, 2 * j as u32 + 1);
            s.insert(&names.transitions[d], &[b, a, cz, dz]);
            for u in words(a, b, n) {
                for v in words(cz, dz, n) {
                    let mut t = u.clone();
                    t.extend([b, a, cz, dz]);
                    t.extend(v);
                    s.insert(&f_name(n), &t);
                }
            }
        }
    }
    Ok(s)
}

/// Formula sizes of the encoding for `n = 1..=max_n` with the same machine
/// and input.
pub fn size_profile(spec: &AtmSpec, w0: &str, max_n: usize) -> Result<BTreeMap<usize, usize>, EncoderError> {
    let mut out = BTreeMap::new();
    for n in 1..=max_n {
        let mut s = spec.clone();
        s.space_exponent = n;
        let m = Atm::new(s)?;
        let w = m.parse_input(w0)?;
        if w.len() > m.tape_length() {
            continue;
        }
        out.insert(n, encode_with_cap(&m, &w, max_n)?.size());
    }
    Ok(out)
}
