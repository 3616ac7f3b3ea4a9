//! The satisfiability-preserving reduction from `AF^{ℓ+1}` to `AF^ℓ`.
//!
//! Two variants are provided. The equality-free one inflates models of the
//! reduct by a Cartesian product; the one with equality works over the same
//! domain using colourings, stars and the predicates `s_σ`, `q_{σ,c}` and
//! `r_{σ,c,ξ}`. Both come with the model expansion (a model of `φ` becomes a
//! model of `ψ`) and the model elevation (a model of `ψ` becomes a model of
//! `φ`).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::formulas::{
    adjacent_closure, and, atom, exists, forall_range, hat, implies, not, or, Formula,
    FormulaError, NormalForm, Signature,
};
use crate::structures::{product, Relation, Structure, Tuple};
use crate::types::{
    atp, enumerate_types, increment, invert_type, is_blunt, is_d_compatible, is_hooked,
    is_palindromic, kernels_of, AdjacentType, IncrementalType, Qf, Restriction, TypeError,
    TypeSpace,
};
use crate::words::{defects, is_palindrome, is_primitive, odd_defect_subsets, DefectSet};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("formula error: {0}")]
    Formula(#[from] FormulaError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("reduction needs at least three variables (l >= 2), got l = {0}")]
    Level(usize),
    #[error("the input structure is not a model: {0}")]
    Model(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("more than {0} stars")]
    Capacity(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    WithEquality,
    EqualityFree,
}

/// Caps on the enumerations behind a reduction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Caps {
    pub types: usize,
    pub stars: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            types: 1 << 20,
            stars: 1 << 16,
        }
    }
}

// ---------------------------------------------------------------------------
// Colouring and circular witnessing
// ---------------------------------------------------------------------------

/// A proper colouring of a digraph with at most `2d+1` colours, `d` the
/// maximum out-degree. Vertices are coloured greedily in reverse degeneracy
/// order of the underlying graph (ties broken by index).
pub fn colour_digraph(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(u, v) in edges {
        if u != v {
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut deg: Vec<usize> = adj.iter().map(|s| s.len()).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| (deg[v], v))
            .expect("vertex left");
        removed[v] = true;
        order.push(v);
        for &w in &adj[v] {
            if !removed[w] {
                deg[w] -= 1;
            }
        }
    }
    let mut colour = vec![usize::MAX; n];
    for &v in order.iter().rev() {
        let used: BTreeSet<usize> = adj[v].iter().map(|&w| colour[w]).collect();
        colour[v] = (0..).find(|c| !used.contains(c)).unwrap();
    }
    colour
}

/// `H = [1,z]^width` with `z = k²+k+1`, and the map `g: H^k → H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessIndexSet {
    pub k: usize,
    pub z: u32,
    pub width: usize,
}

/// The circular witness index set: words of length `k+1`.
pub fn witness_index_set(k: usize) -> WitnessIndexSet {
    WitnessIndexSet {
        k,
        z: (k * k + k + 1) as u32,
        width: k + 1,
    }
}

/// Words of length 2 only: `g` records the fresh letter and the first
/// letter of the first argument, which is all that properties (i) and (ii)
/// use when the argument order is fixed.
pub fn compact_witness_index_set(k: usize) -> WitnessIndexSet {
    WitnessIndexSet {
        k,
        z: (k * k + k + 1) as u32,
        width: 2,
    }
}

impl WitnessIndexSet {
    pub fn size(&self) -> usize {
        (self.z as usize).pow(self.width as u32)
    }

    /// Letters (in `[1,z]`) of element `h`.
    pub fn decode(&self, mut h: usize) -> Vec<u32> {
        let z = self.z as usize;
        let mut w = vec![0; self.width];
        for i in (0..self.width).rev() {
            w[i] = (h % z) as u32 + 1;
            h /= z;
        }
        w
    }

    pub fn encode(&self, w: &[u32]) -> usize {
        w.iter()
            .fold(0usize, |acc, &l| acc * self.z as usize + (l as usize - 1))
    }

    pub fn g(&self, t: &[usize]) -> usize {
        let words: Vec<Vec<u32>> = t.iter().map(|&h| self.decode(h)).collect();
        let letters: HashSet<u32> = words.iter().flatten().copied().collect();
        let i0 = (1..=self.z).find(|l| !letters.contains(l)).expect("z exceeds |S|");
        let mut out = vec![i0];
        for w in words.iter().take(self.width - 1) {
            out.push(w[0]);
        }
        while out.len() < self.width {
            out.push(1);
        }
        self.encode(&out)
    }

    /// Properties (i) and (ii) for the tuple `t` (all orders of `t'`).
    pub fn check(&self, t: &[usize]) -> bool {
        let gt = self.g(t);
        if t.contains(&gt) {
            return false;
        }
        let mut rest: Vec<usize> = t[1..].to_vec();
        rest.push(gt);
        let mut ok = true;
        permutations(&rest, &mut |p| {
            if t.contains(&self.g(p)) {
                ok = false;
            }
        });
        ok
    }
}

fn permutations(items: &[usize], f: &mut dyn FnMut(&[usize])) {
    fn go(v: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
        if i == v.len() {
            f(v);
            return;
        }
        for j in i..v.len() {
            v.swap(i, j);
            go(v, i + 1, f);
            v.swap(i, j);
        }
    }
    let mut v = items.to_vec();
    go(&mut v, 0, f);
}

// ---------------------------------------------------------------------------
// Tuples as codes
// ---------------------------------------------------------------------------

fn encode(t: &[u32], n: usize) -> usize {
    t.iter().fold(0, |acc, &e| acc * n + e as usize)
}

fn decode(mut code: usize, n: usize, len: usize) -> Vec<u32> {
    let mut t = vec![0u32; len];
    for i in (0..len).rev() {
        t[i] = (code % n) as u32;
        code /= n;
    }
    t
}

fn reversed(t: &[u32]) -> Vec<u32> {
    t.iter().rev().copied().collect()
}

fn range(from: usize, to: usize) -> Vec<usize> {
    (from..=to).collect()
}

// ---------------------------------------------------------------------------
// Reduction context
// ---------------------------------------------------------------------------

/// A partial map from witness types to colours over a fixed underlying type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Star {
    pub underlying: usize,
    /// `(ξ, colour)` sorted by `ξ`.
    pub dom: Vec<(usize, usize)>,
}

impl Star {
    pub fn colour_of(&self, xi: usize) -> Option<usize> {
        self.dom
            .iter()
            .find(|(x, _)| *x == xi)
            .map(|&(_, c)| c)
    }
}

/// Fresh predicate names, all sharing a prefix no input predicate uses.
#[derive(Debug, Clone, Serialize)]
pub struct Names {
    pub prefix: String,
}

impl Names {
    fn new(level: usize, sig: &Signature) -> Self {
        let mut prefix = format!("_{level}");
        while sig.keys().any(|p| p.starts_with(&prefix)) {
            prefix.push('_');
        }
        Self { prefix }
    }
    pub fn colour(&self, c: usize) -> String {
        format!("{}c{c}", self.prefix)
    }
    pub fn palindrome(&self, len: usize) -> String {
        format!("{}d{len}", self.prefix)
    }
    pub fn zeta(&self, z: usize) -> String {
        format!("{}p{z}", self.prefix)
    }
    pub fn star(&self, s: usize) -> String {
        format!("{}s{s}", self.prefix)
    }
    pub fn q(&self, s: usize, c: usize) -> String {
        format!("{}q{s}_{c}", self.prefix)
    }
    pub fn r(&self, s: usize, c: usize, xi: usize) -> String {
        format!("{}r{s}_{c}_{xi}", self.prefix)
    }
}

/// Names of every fresh predicate, by role.
#[derive(Debug, Clone, Serialize)]
pub struct Registry {
    pub level: usize,
    pub variant: Variant,
    pub prefix: String,
    pub colours: Vec<String>,
    pub palindromes: BTreeMap<usize, String>,
    pub zeta_predicates: Vec<String>,
    pub star_predicates: Vec<String>,
    pub q_predicates: Vec<String>,
    pub r_predicates: Vec<String>,
    pub star_count: usize,
    pub type_counts: BTreeMap<String, usize>,
}

/// Everything `build_psi`, `expand_model` and `elevate_model` share.
pub struct Reduction {
    pub variant: Variant,
    pub phi: NormalForm,
    pub l: usize,
    pub signature: Signature,
    pub space: TypeSpace,
    /// `Atp_ℓ` over the restricted universe.
    pub zetas: Vec<AdjacentType>,
    zeta_idx: HashMap<AdjacentType, usize>,
    /// The `(ℓ+1)`-types entailing `β̂`.
    pub xis: Vec<AdjacentType>,
    xi_idx: HashMap<AdjacentType, usize>,
    pub xi_zeta: Vec<usize>,
    pub xi_eta: Vec<usize>,
    pub xi_gammas: Vec<Vec<bool>>,
    pub xi_inverse: Vec<usize>,
    pub xi_incr: Vec<IncrementalType>,
    /// Subsets of `𝔻°_{ℓ-1}`.
    pub d_sets: Vec<DefectSet>,
    d_idx: HashMap<BTreeSet<(usize, usize)>, usize>,
    /// `compat[d][ξ]`: `∂ξ` is `D⁺`-compatible.
    pub compat: Vec<Vec<bool>>,
    /// `(ζ, η) → ξ` candidates.
    by_zeta_eta: HashMap<(usize, usize), Vec<usize>>,
    pub colours: usize,
    pub stars: Vec<Star>,
    star_idx: HashMap<Star, usize>,
    pub names: Names,
}

impl Reduction {
    pub fn new(phi: &NormalForm, variant: Variant, caps: Caps) -> Result<Self, ReductionError> {
        let l = phi.l;
        if l < 2 {
            return Err(ReductionError::Level(l));
        }
        let mut phi = phi.clone();
        if phi.gammas.is_empty() {
            phi.gammas.push(Formula::True);
        }
        let signature = phi.signature()?;
        let full = phi.to_formula();
        let with_eq = matches!(variant, Variant::WithEquality);
        if !with_eq && full.uses_equality() {
            return Err(ReductionError::Formula(FormulaError::Shape(
                "the equality-free variant needs an equality-free formula".into(),
            )));
        }
        let space = TypeSpace::new(kernels_of(&full), with_eq, l + 1);
        let ul = space.universe(l);
        let ul1 = space.universe(l + 1);

        let zetas = enumerate_types(ul, caps.types)?;
        let zeta_idx: HashMap<AdjacentType, usize> =
            zetas.iter().cloned().enumerate().map(|(i, z)| (z, i)).collect();

        let beta_hat = Qf::compile(&hat(&phi.beta, l + 1)?, ul1)?;
        let gammas: Vec<Qf> = phi
            .gammas
            .iter()
            .map(|g| Qf::compile(g, ul1))
            .collect::<Result<_, _>>()?;
        let xis: Vec<AdjacentType> = enumerate_types(ul1, caps.types)?
            .into_iter()
            .filter(|x| beta_hat.eval(x))
            .collect();
        let xi_idx: HashMap<AdjacentType, usize> =
            xis.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
        let head = Restriction::new(1, l, ul1, ul)?;
        let tail = Restriction::new(2, l + 1, ul1, ul)?;
        let xi_zeta: Vec<usize> = xis.iter().map(|x| zeta_idx[&head.apply(x)]).collect();
        let xi_eta: Vec<usize> = xis.iter().map(|x| zeta_idx[&tail.apply(x)]).collect();
        let xi_gammas: Vec<Vec<bool>> = xis
            .iter()
            .map(|x| gammas.iter().map(|g| g.eval(x)).collect())
            .collect();
        let xi_inverse: Vec<usize> = xis
            .iter()
            .map(|x| xi_idx[&invert_type(x, ul1)])
            .collect();
        let xi_incr: Vec<IncrementalType> = xis.iter().map(|x| increment(x, ul1)).collect();

        let d_sets = odd_defect_subsets(l - 1);
        let d_idx = d_sets
            .iter()
            .enumerate()
            .map(|(i, d)| (d.pairs.clone(), i))
            .collect();
        let compat: Vec<Vec<bool>> = d_sets
            .iter()
            .map(|d| {
                let dp = d.plus();
                xi_incr.iter().map(|i| is_d_compatible(i, &dp, ul1)).collect()
            })
            .collect();
        let mut by_zeta_eta: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for x in 0..xis.len() {
            by_zeta_eta.entry((xi_zeta[x], xi_eta[x])).or_default().push(x);
        }

        let m = phi.gammas.len();
        let colours = 2 * (m * m + m) + 1;
        let names = Names::new(l, &signature);
        let mut red = Self {
            variant,
            phi,
            l,
            signature,
            space,
            zetas,
            zeta_idx,
            xis,
            xi_idx,
            xi_zeta,
            xi_eta,
            xi_gammas,
            xi_inverse,
            xi_incr,
            d_sets,
            d_idx,
            compat,
            by_zeta_eta,
            colours,
            stars: Vec::new(),
            star_idx: HashMap::new(),
            names,
        };
        if with_eq {
            red.stars = red.enumerate_stars(caps.stars)?;
            red.star_idx = red
                .stars
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, s)| (s, i))
                .collect();
        }
        Ok(red)
    }

    pub fn gamma_count(&self) -> usize {
        self.phi.gammas.len()
    }

    /// Inclusion-minimal covers of `I` by witness types over each `ζ`,
    /// with every colouring of their members.
    fn enumerate_stars(&self, cap: usize) -> Result<Vec<Star>, ReductionError> {
        let m = self.gamma_count();
        let mut out = Vec::new();
        for z in 0..self.zetas.len() {
            let cands: Vec<usize> = (0..self.xis.len())
                .filter(|&x| self.xi_zeta[x] == z && self.xi_gammas[x].iter().any(|&b| b))
                .collect();
            let mut covers: BTreeSet<Vec<usize>> = BTreeSet::new();
            let mut chosen = Vec::new();
            self.minimal_covers(&cands, &mut chosen, m, &mut covers);
            for cover in covers {
                let k = cover.len();
                let total = self.colours.pow(k as u32);
                if out.len() + total > cap {
                    return Err(ReductionError::Capacity(cap));
                }
                for code in 0..total {
                    let mut c = code;
                    let mut dom = Vec::with_capacity(k);
                    for &x in &cover {
                        dom.push((x, c % self.colours));
                        c /= self.colours;
                    }
                    out.push(Star { underlying: z, dom });
                }
            }
        }
        Ok(out)
    }

    fn minimal_covers(
        &self,
        cands: &[usize],
        chosen: &mut Vec<usize>,
        m: usize,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        let covered = |set: &[usize], skip: Option<usize>| -> Vec<bool> {
            let mut c = vec![false; m];
            for &x in set {
                if Some(x) == skip {
                    continue;
                }
                for (i, &b) in self.xi_gammas[x].iter().enumerate() {
                    c[i] |= b;
                }
            }
            c
        };
        let cov = covered(chosen, None);
        match cov.iter().position(|&b| !b) {
            None => {
                let minimal = chosen
                    .iter()
                    .all(|&x| covered(chosen, Some(x)).iter().any(|&b| !b));
                if minimal {
                    let mut s = chosen.clone();
                    s.sort_unstable();
                    out.insert(s);
                }
            }
            Some(i) => {
                for &x in cands {
                    if self.xi_gammas[x][i] && !chosen.contains(&x) {
                        chosen.push(x);
                        self.minimal_covers(cands, chosen, m, out);
                        chosen.pop();
                    }
                }
            }
        }
    }

    pub fn star_index(&self, s: &Star) -> Option<usize> {
        self.star_idx.get(s).copied()
    }

    pub fn xi_index(&self, x: &AdjacentType) -> Option<usize> {
        self.xi_idx.get(x).copied()
    }

    pub fn zeta_index(&self, z: &AdjacentType) -> Option<usize> {
        self.zeta_idx.get(z).copied()
    }

    fn d_index(&self, d: &DefectSet) -> Option<usize> {
        self.d_idx.get(&d.odd_part().pairs).copied()
    }

    fn zeta_formula(&self, z: usize) -> Formula {
        self.zetas[z].to_formula(self.space.universe(self.l))
    }

    fn delta(&self, d: usize) -> Formula {
        and(self.d_sets[d]
            .pairs
            .iter()
            .map(|&(i, j)| atom(&self.names.palindrome(j - i + 1), &range(i, j)))
            .collect())
    }

    /// ψ4 (and the ψ3 disjunctions of the equality-free variant):
    /// `η` with `(ζ ∧ β̂ ∧ η⁺ [∧ γ_i])` `D⁺`-consistent.
    fn consistent_etas(&self, z: usize, d: usize, gamma: Option<usize>) -> BTreeSet<usize> {
        (0..self.xis.len())
            .filter(|&x| {
                self.xi_zeta[x] == z
                    && self.compat[d][x]
                    && gamma.map_or(true, |i| self.xi_gammas[x][i])
            })
            .map(|x| self.xi_eta[x])
            .collect()
    }

    pub fn registry(&self) -> Registry {
        let n = &self.names;
        let l = self.l;
        let mut palindromes = BTreeMap::new();
        let mut len = 3;
        while len <= l {
            palindromes.insert(len, n.palindrome(len));
            len += 2;
        }
        let with_eq = matches!(self.variant, Variant::WithEquality);
        let mut q = Vec::new();
        let mut r = Vec::new();
        if with_eq {
            for (si, s) in self.stars.iter().enumerate() {
                for c in 0..self.colours {
                    q.push(n.q(si, c));
                    for &(x, _) in &s.dom {
                        r.push(n.r(si, c, x));
                    }
                }
            }
        }
        let mut type_counts = BTreeMap::new();
        type_counts.insert(format!("atp_{l}"), self.zetas.len());
        type_counts.insert(format!("atp_{}_beta_hat", l + 1), self.xis.len());
        Registry {
            level: l,
            variant: self.variant,
            prefix: n.prefix.clone(),
            colours: if with_eq {
                (0..self.colours).map(|c| n.colour(c)).collect()
            } else {
                Vec::new()
            },
            palindromes,
            zeta_predicates: (0..self.zetas.len()).map(|z| n.zeta(z)).collect(),
            star_predicates: (0..self.stars.len()).map(|s| n.star(s)).collect(),
            q_predicates: q,
            r_predicates: r,
            star_count: self.stars.len(),
            type_counts,
        }
    }
}

// ---------------------------------------------------------------------------
// ψ
// ---------------------------------------------------------------------------

pub struct ReductionOutput {
    /// `ψ` as a normal form over `ℓ` variables.
    pub psi: NormalForm,
    pub registry: Registry,
    pub reduction: Reduction,
}

impl ReductionOutput {
    pub fn formula(&self) -> Formula {
        self.psi.to_formula()
    }
}

pub fn build_psi(
    phi: &NormalForm,
    variant: Variant,
    caps: Caps,
) -> Result<ReductionOutput, ReductionError> {
    let red = Reduction::new(phi, variant, caps)?;
    let psi = emit(&red)?;
    Ok(ReductionOutput {
        psi,
        registry: red.registry(),
        reduction: red,
    })
}

fn emit(red: &Reduction) -> Result<NormalForm, ReductionError> {
    let l = red.l;
    let n = &red.names;
    let acl = adjacent_closure(&red.phi)?;
    let mut gammas: Vec<Formula> = acl.gammas.clone();
    let mut univ: Vec<Formula> = vec![acl.beta.clone()];
    let xs = range(1, l);
    let rev: Vec<usize> = (1..=l).rev().collect();
    let tail = range(2, l);
    let init = range(1, l - 1);
    let with_eq = matches!(red.variant, Variant::WithEquality);

    // ψ0: every ℓ-tuple has exactly one colour.
    if with_eq {
        let cs: Vec<Formula> = (0..red.colours).map(|c| atom(&n.colour(c), &xs)).collect();
        let mut parts = vec![or(cs.clone())];
        for a in 0..cs.len() {
            for b in a + 1..cs.len() {
                parts.push(or(vec![not(cs[a].clone()), not(cs[b].clone())]));
            }
        }
        univ.push(and(parts));
    }

    // ψ1: palindrome markers.
    let mut s = 1;
    while 2 * s + 1 <= l {
        let mut args = range(1, s + 1);
        args.extend((1..=s).rev());
        univ.push(atom(&n.palindrome(2 * s + 1), &args));
        s += 1;
    }

    // ψ2 (ψ2,0 in the variant with equality): p_ζ marks tails of ζ-tuples.
    for z in 0..red.zetas.len() {
        univ.push(implies(red.zeta_formula(z), atom(&n.zeta(z), &tail)));
    }

    if with_eq {
        let stars = &red.stars;
        let s_atom = |s: usize, args: &[usize]| atom(&n.star(s), args);
        // ψ2,1
        univ.push(or((0..stars.len()).map(|s| s_atom(s, &xs)).collect()));
        let mut by_under: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in stars.iter().enumerate() {
            by_under.entry(s.underlying).or_default().push(i);
        }
        for group in by_under.values() {
            for a in 0..group.len() {
                for b in a + 1..group.len() {
                    univ.push(or(vec![
                        not(s_atom(group[a], &xs)),
                        not(s_atom(group[b], &xs)),
                    ]));
                }
            }
        }
        // ψ2,2
        for (i, s) in stars.iter().enumerate() {
            univ.push(implies(s_atom(i, &xs), red.zeta_formula(s.underlying)));
        }
        // ψ2,3
        for i in 0..stars.len() {
            for c in 0..red.colours {
                univ.push(implies(
                    and(vec![s_atom(i, &xs), atom(&n.colour(c), &xs)]),
                    atom(&n.q(i, c), &tail),
                ));
            }
        }
        // ψ2,4 (one ∀∃ conjunct per σ, c, ξ)
        for (i, s) in stars.iter().enumerate() {
            for c in 0..red.colours {
                for &(x, _) in &s.dom {
                    gammas.push(implies(atom(&n.q(i, c), &init), atom(&n.r(i, c, x), &xs)));
                }
            }
        }
        // ψ2,5
        for (i, s) in stars.iter().enumerate() {
            for c in 0..red.colours {
                for &(x, col) in &s.dom {
                    univ.push(implies(
                        atom(&n.r(i, c, x), &xs),
                        and(vec![red.zeta_formula(red.xi_eta[x]), atom(&n.colour(col), &rev)]),
                    ));
                }
            }
        }
        // ψ2,6. Only stars over the reversed tail type can hold on x_ℓ…x_1
        // (ψ2,2 and ψ2,5), so the disjunction is restricted to them.
        let ul = red.space.universe(l);
        let mut six_cache: HashMap<(usize, usize), Formula> = HashMap::new();
        for (i, s) in stars.iter().enumerate() {
            for c in 0..red.colours {
                for &(x, _) in &s.dom {
                    let disj = six_cache
                        .entry((x, c))
                        .or_insert_with(|| {
                            let inv = red.xi_inverse[x];
                            let under = red.zeta_idx[&invert_type(&red.zetas[red.xi_eta[x]], ul)];
                            or(by_under
                                .get(&under)
                                .map(|g| g.as_slice())
                                .unwrap_or(&[])
                                .iter()
                                .filter(|&&sp| {
                                    stars[sp]
                                        .dom
                                        .iter()
                                        .all(|&(xp, cp)| xp == inv || cp != c)
                                })
                                .map(|&sp| s_atom(sp, &rev))
                                .collect())
                        })
                        .clone();
                    univ.push(implies(atom(&n.r(i, c, x), &xs), disj));
                }
            }
        }
        // ψ2,7
        for (i, s) in stars.iter().enumerate() {
            for c in 0..red.colours {
                for a in 0..s.dom.len() {
                    for b in a + 1..s.dom.len() {
                        univ.push(implies(
                            atom(&n.r(i, c, s.dom[a].0), &xs),
                            not(atom(&n.r(i, c, s.dom[b].0), &xs)),
                        ));
                    }
                }
            }
        }
        // ψ3: r never names a witness whose increment clashes with the
        // palindromes of x̄_{ℓ-1}.
        for d in 0..red.d_sets.len() {
            let mut banned = Vec::new();
            for (i, s) in stars.iter().enumerate() {
                for c in 0..red.colours {
                    for &(x, _) in &s.dom {
                        if !red.compat[d][x] {
                            banned.push(not(atom(&n.r(i, c, x), &xs)));
                        }
                    }
                }
            }
            if !banned.is_empty() {
                univ.push(implies(red.delta(d), and(banned)));
            }
        }
    } else {
        // ψ3 of the equality-free variant.
        for i in 0..red.gamma_count() {
            for z in 0..red.zetas.len() {
                for d in 0..red.d_sets.len() {
                    let etas = red.consistent_etas(z, d, Some(i));
                    gammas.push(implies(
                        and(vec![red.delta(d), atom(&n.zeta(z), &init)]),
                        or(etas.into_iter().map(|e| red.zeta_formula(e)).collect()),
                    ));
                }
            }
        }
    }

    // ψ4
    for z in 0..red.zetas.len() {
        for d in 0..red.d_sets.len() {
            let etas = red.consistent_etas(z, d, None);
            univ.push(implies(
                and(vec![red.delta(d), atom(&n.zeta(z), &init)]),
                or(etas.into_iter().map(|e| red.zeta_formula(e)).collect()),
            ));
        }
    }

    // ψ5
    if with_eq {
        let ul1 = red.space.universe(l + 1);
        let stars = &red.stars;
        if (l + 1) % 2 == 1 {
            let pal = if l - 1 >= 3 {
                atom(&n.palindrome(l - 1), &init)
            } else {
                Formula::True
            };
            for (i, s) in stars.iter().enumerate() {
                for c in 0..red.colours {
                    for &(x, _) in &s.dom {
                        if !is_palindromic(&red.xis[x], ul1) {
                            univ.push(implies(
                                and(vec![atom(&n.r(i, c, x), &xs), pal.clone()]),
                                not(atom(&n.colour(c), &rev)),
                            ));
                        }
                    }
                }
            }
        }
        let mut s = 1;
        while 2 * s + 1 <= l {
            let suffix = range(l - 2 * s, l);
            for (i, st) in stars.iter().enumerate() {
                for c in 0..red.colours {
                    for &(x, _) in &st.dom {
                        if !is_hooked(&red.xis[x], ul1, s)? {
                            univ.push(implies(
                                atom(&n.r(i, c, x), &xs),
                                not(atom(&n.palindrome(2 * s + 1), &suffix)),
                            ));
                        }
                    }
                }
            }
            s += 1;
        }
    }

    Ok(NormalForm {
        l: l - 1,
        gammas,
        beta: and(univ),
    })
}

// ---------------------------------------------------------------------------
// Direction 1: expansion
// ---------------------------------------------------------------------------

/// Inclusion-minimal witness sets `B_{aā}` for every `ℓ`-tuple, chosen
/// greedily in domain order. Keys and members are element tuples.
pub fn choose_witness_sets(
    a: &Structure,
    phi: &NormalForm,
) -> Result<BTreeMap<Vec<u32>, Vec<u32>>, ReductionError> {
    let red = Reduction::new(phi, variant_for(phi), Caps::default())?;
    let ws = witness_sets(&red, a)?;
    let n = a.domain_size;
    Ok(ws
        .into_iter()
        .enumerate()
        .map(|(code, v)| (decode(code, n, red.l), v.into_iter().map(|(b, _)| b).collect()))
        .collect())
}

fn variant_for(phi: &NormalForm) -> Variant {
    if phi.to_formula().uses_equality() {
        Variant::WithEquality
    } else {
        Variant::EqualityFree
    }
}

/// Per `ℓ`-tuple code: `(b, ξ)` for each witness `b`, `ξ = atp(aāb)`.
fn witness_sets(red: &Reduction, a: &Structure) -> Result<Vec<Vec<(u32, usize)>>, ReductionError> {
    let l = red.l;
    let n = a.domain_size;
    let ul1 = red.space.universe(l + 1);
    let m = red.gamma_count();
    let total = n.pow(l as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let t = decode(code, n, l);
        let mut ext = t.clone();
        ext.push(0);
        let mut per_b = Vec::with_capacity(n);
        for b in 0..n as u32 {
            ext[l] = b;
            let xi = atp(a, &ext, ul1)?;
            let x = red.xi_index(&xi).ok_or_else(|| {
                ReductionError::Model(format!("tuple {ext:?} violates the universal part"))
            })?;
            per_b.push(x);
        }
        let mut covered = vec![false; m];
        let mut chosen: Vec<u32> = Vec::new();
        for b in 0..n {
            let g = &red.xi_gammas[per_b[b]];
            if (0..m).any(|i| g[i] && !covered[i]) {
                chosen.push(b as u32);
                for i in 0..m {
                    covered[i] |= g[i];
                }
            }
        }
        if covered.iter().any(|&c| !c) {
            return Err(ReductionError::Model(format!("tuple {t:?} lacks a witness")));
        }
        let mut k = 0;
        while k < chosen.len() {
            let mut cov = vec![false; m];
            for (j, &b) in chosen.iter().enumerate() {
                if j != k {
                    for i in 0..m {
                        cov[i] |= red.xi_gammas[per_b[b as usize]][i];
                    }
                }
            }
            if cov.iter().all(|&c| c) {
                chosen.remove(k);
            } else {
                k += 1;
            }
        }
        out.push(chosen.iter().map(|&b| (b, per_b[b as usize])).collect());
    }
    Ok(out)
}

/// Interpret the fresh predicates of `ψ` on a model of `φ`.
pub fn expand_model(red: &Reduction, a: &Structure) -> Result<Structure, ReductionError> {
    let l = red.l;
    let n = a.domain_size;
    let names = &red.names;
    let mut out = a.reduct(&red.signature);
    let ul = red.space.universe(l);

    // Palindrome markers.
    let mut len = 3;
    while len <= l {
        let name = names.palindrome(len);
        out.declare(&name, len);
        for code in 0..n.pow(len as u32) {
            let t = decode(code, n, len);
            if is_palindrome(&t) {
                out.insert(&name, &t);
            }
        }
        len += 2;
    }

    // p_ζ
    for z in 0..red.zetas.len() {
        out.declare(&names.zeta(z), l - 1);
    }
    let total = n.pow(l as u32);
    let mut zeta_of = Vec::with_capacity(total);
    for code in 0..total {
        let t = decode(code, n, l);
        let z = red
            .zeta_index(&atp(a, &t, ul)?)
            .ok_or_else(|| ReductionError::Construction("ℓ-type outside the universe".into()))?;
        zeta_of.push(z);
        out.insert(&names.zeta(z), &t[1..]);
    }

    if matches!(red.variant, Variant::EqualityFree) {
        return Ok(out);
    }

    let ws = witness_sets(red, a)?;
    let tail_count = n.pow((l - 1) as u32);

    // Colourings of G_ā.
    let mut col = vec![0usize; total];
    for tc in 0..tail_count {
        let abar = decode(tc, n, l - 1);
        let arev = reversed(&abar);
        let mut edges = Vec::new();
        for av in 0..n as u32 {
            let mut t = vec![av];
            t.extend_from_slice(&abar);
            for &(b, _) in &ws[encode(&t, n)] {
                if b != av {
                    edges.push((av as usize, b as usize));
                }
                let mut bt = vec![b];
                bt.extend_from_slice(&arev);
                for &(ap, _) in &ws[encode(&bt, n)] {
                    if ap != av {
                        edges.push((av as usize, ap as usize));
                    }
                }
            }
        }
        let colouring = colour_digraph(n, &edges);
        for av in 0..n as u32 {
            let mut t = vec![av];
            t.extend_from_slice(&abar);
            let c = colouring[av as usize];
            if c >= red.colours {
                return Err(ReductionError::Construction("colouring exceeds 2d+1".into()));
            }
            col[encode(&t, n)] = c;
        }
    }
    for c in 0..red.colours {
        out.declare(&names.colour(c), l);
    }
    for code in 0..total {
        out.insert(&names.colour(col[code]), &decode(code, n, l));
    }

    // Stars.
    let mut star_of = vec![0usize; total];
    for code in 0..total {
        let t = decode(code, n, l);
        let abar_rev = reversed(&t[1..]);
        let mut dom: Vec<(usize, usize)> = ws[code]
            .iter()
            .map(|&(b, x)| {
                let mut bt = vec![b];
                bt.extend_from_slice(&abar_rev);
                (x, col[encode(&bt, n)])
            })
            .collect();
        dom.sort_unstable();
        let star = Star {
            underlying: zeta_of[code],
            dom,
        };
        star_of[code] = red
            .star_index(&star)
            .ok_or_else(|| ReductionError::Construction(format!("star of {t:?} not enumerated")))?;
    }
    for s in 0..red.stars.len() {
        out.declare(&names.star(s), l);
        for c in 0..red.colours {
            out.declare(&names.q(s, c), l - 1);
            for &(x, _) in &red.stars[s].dom {
                out.declare(&names.r(s, c, x), l);
            }
        }
    }
    for code in 0..total {
        out.insert(&names.star(star_of[code]), &decode(code, n, l));
    }

    // q and r: for each tail and (σ, c), the first a realising both.
    for tc in 0..tail_count {
        let abar = decode(tc, n, l - 1);
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        for av in 0..n as u32 {
            let mut t = vec![av];
            t.extend_from_slice(&abar);
            let code = encode(&t, n);
            let key = (star_of[code], col[code]);
            if !seen.insert(key) {
                continue;
            }
            out.insert(&names.q(key.0, key.1), &abar);
            for &(b, x) in &ws[code] {
                let mut ab = abar.clone();
                ab.push(b);
                out.insert(&names.r(key.0, key.1, x), &ab);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Direction 2: elevation
// ---------------------------------------------------------------------------

/// Tuples defining the incremental types of primitive `(ℓ+1)`-tuples.
struct Elevator<'a> {
    red: &'a Reduction,
    out: Structure,
    /// Canonical orientation (lexicographically smaller of `t` and its
    /// reversal) → `ξ` of that orientation.
    assigned: HashMap<Vec<u32>, usize>,
}

impl<'a> Elevator<'a> {
    fn new(red: &'a Reduction, base: Structure) -> Self {
        Self {
            red,
            out: base,
            assigned: HashMap::new(),
        }
    }

    fn lookup(&self, t: &[u32]) -> Option<usize> {
        let r = reversed(t);
        if t <= r.as_slice() {
            self.assigned.get(t).copied()
        } else {
            self.assigned.get(&r).map(|&x| self.red.xi_inverse[x])
        }
    }

    /// Fix `itp(t) = ∂ξ` (and so the type of its reversal).
    fn assign(&mut self, t: &[u32], x: usize) -> Result<(), ReductionError> {
        if let Some(prev) = self.lookup(t) {
            if prev != x {
                return Err(ReductionError::Construction(format!(
                    "clash on {t:?}: two witness types"
                )));
            }
            return Ok(());
        }
        let ul1 = self.red.space.universe(self.red.l + 1);
        let d = defects(t);
        if !is_d_compatible(&self.red.xi_incr[x], &d, ul1) {
            return Err(ReductionError::Construction(format!(
                "incremental type not compatible with the defects of {t:?}"
            )));
        }
        let iota = &self.red.xi_incr[x];
        for (slot, &ai) in ul1.covering.iter().enumerate() {
            let (p, args) = &ul1.atoms[ai];
            let w: Vec<u32> = args.iter().map(|&v| t[v - 1]).collect();
            self.out.set(p, &w, iota.pol[slot]);
        }
        let r = reversed(t);
        if t <= r.as_slice() {
            self.assigned.insert(t.to_vec(), x);
        } else {
            self.assigned.insert(r, self.red.xi_inverse[x]);
        }
        Ok(())
    }

    /// Complete every unassigned primitive `(ℓ+1)`-tuple through `ψ4`.
    fn complete(&mut self) -> Result<(), ReductionError> {
        let red = self.red;
        let l = red.l;
        let n = self.out.domain_size;
        let ul = red.space.universe(l);
        for code in 0..n.pow((l + 1) as u32) {
            let t = decode(code, n, l + 1);
            if self.lookup(&t).is_some() || !is_primitive(&t) {
                continue;
            }
            let z = red
                .zeta_index(&atp(&self.out, &t[..l], ul)?)
                .ok_or_else(|| ReductionError::Construction("prefix type".into()))?;
            let e = red
                .zeta_index(&atp(&self.out, &t[1..], ul)?)
                .ok_or_else(|| ReductionError::Construction("suffix type".into()))?;
            let d = red
                .d_index(&defects(&t[1..l]))
                .ok_or_else(|| ReductionError::Construction("defect set".into()))?;
            let x = red
                .by_zeta_eta
                .get(&(z, e))
                .and_then(|v| v.iter().copied().find(|&x| red.compat[d][x]))
                .ok_or_else(|| {
                    ReductionError::Construction(format!("no admissible type for {t:?}"))
                })?;
            self.assign(&t, x)?;
        }
        Ok(())
    }
}

/// The `τ`-reduct with every tuple of primitive length above `ℓ` dropped.
fn layered_reduct(s: &Structure, sig: &Signature, l: usize) -> Structure {
    let mut out = s.reduct(sig);
    for rel in out.relations.values_mut() {
        rel.tuples
            .retain(|t| crate::words::primitive_length(t.as_slice()) <= l);
    }
    out
}

/// Build a model of `φ` from a model of `ψ`.
pub fn elevate_model(red: &Reduction, a: &Structure) -> Result<Structure, ReductionError> {
    match red.variant {
        Variant::WithEquality => elevate_eq(red, a),
        Variant::EqualityFree => elevate_eq_free(red, a).map(|(s, _)| s),
    }
}

fn unique_member(
    a: &Structure,
    names: impl Iterator<Item = (usize, String)>,
    total: usize,
    n: usize,
    len: usize,
    what: &str,
) -> Result<Vec<usize>, ReductionError> {
    let mut of = vec![usize::MAX; total];
    for (i, name) in names {
        if let Some(rel) = a.relations.get(&name) {
            for t in &rel.tuples {
                let c = encode(t, n);
                if of[c] != usize::MAX {
                    return Err(ReductionError::Model(format!("two {what}s on {t:?}")));
                }
                of[c] = i;
            }
        }
    }
    if let Some(c) = of.iter().position(|&v| v == usize::MAX) {
        return Err(ReductionError::Model(format!(
            "no {what} on {:?}",
            decode(c, n, len)
        )));
    }
    Ok(of)
}

fn elevate_eq(red: &Reduction, a: &Structure) -> Result<Structure, ReductionError> {
    let l = red.l;
    let n = a.domain_size;
    let names = &red.names;
    let total = n.pow(l as u32);
    let col = unique_member(
        a,
        (0..red.colours).map(|c| (c, names.colour(c))),
        total,
        n,
        l,
        "colour",
    )?;
    let star = unique_member(
        a,
        (0..red.stars.len()).map(|s| (s, names.star(s))),
        total,
        n,
        l,
        "star",
    )?;
    let base = layered_reduct(a, &red.signature, l);
    let mut el = Elevator::new(red, base);
    let empty = Relation::default();
    for code in 0..total {
        let t = decode(code, n, l);
        let (s, c) = (star[code], col[code]);
        for &(x, _) in &red.stars[s].dom {
            let rel = a.relations.get(&names.r(s, c, x)).unwrap_or(&empty);
            let mut probe = t[1..].to_vec();
            probe.push(0);
            let b = (0..n as u32).find(|&b| {
                probe[l - 1] = b;
                rel.contains(&probe)
            });
            let b = b.ok_or_else(|| {
                ReductionError::Model(format!("no r-witness for {t:?} and type {x}"))
            })?;
            let mut u = t.clone();
            u.push(b);
            if is_primitive(&u) {
                el.assign(&u, x)?;
            }
        }
    }
    el.complete()?;
    Ok(el.out)
}

/// Equality-free elevation. Returns the model over `B × (I × H)` and the
/// number of copies per element.
pub fn elevate_eq_free(red: &Reduction, b: &Structure) -> Result<(Structure, usize), ReductionError> {
    let l = red.l;
    let n = b.domain_size;
    let m = red.gamma_count();
    let ul = red.space.universe(l);
    let bminus = b.reduct(&red.signature);

    // Pseudo-witnesses per ℓ-tuple and index.
    let total = n.pow(l as u32);
    let mut pseudo: Vec<Vec<(u32, usize)>> = Vec::with_capacity(total);
    let mut type_of = Vec::with_capacity(total);
    for code in 0..total {
        let t = decode(code, n, l);
        type_of.push(
            red.zeta_index(&atp(&bminus, &t, ul)?)
                .ok_or_else(|| ReductionError::Construction("ℓ-type".into()))?,
        );
    }
    for code in 0..total {
        let t = decode(code, n, l);
        let z = type_of[code];
        let d = red
            .d_index(&defects(&t[1..]))
            .ok_or_else(|| ReductionError::Construction("defect set".into()))?;
        let mut row = Vec::with_capacity(m);
        for i in 0..m {
            let mut found = None;
            for bv in 0..n as u32 {
                let mut u = t[1..].to_vec();
                u.push(bv);
                let e = type_of[encode(&u, n)];
                if let Some(x) = red.by_zeta_eta.get(&(z, e)).and_then(|v| {
                    v.iter()
                        .copied()
                        .find(|&x| red.xi_gammas[x][i] && red.compat[d][x])
                }) {
                    found = Some((bv, x));
                    break;
                }
            }
            row.push(found.ok_or_else(|| {
                ReductionError::Model(format!("no pseudo-witness for {t:?} and index {i}"))
            })?);
        }
        pseudo.push(row);
    }

    let hs = compact_witness_index_set(l);
    let hsize = hs.size();
    let copies = m * hsize;
    let c = product(&bminus, copies).map_err(|e| ReductionError::Construction(e.to_string()))?;
    let base = layered_reduct(&c, &red.signature, l);
    let nc = base.domain_size;
    let split = |e: u32| -> (u32, usize, usize) {
        let e = e as usize;
        ((e / copies) as u32, (e % copies) / hsize, e % hsize)
    };
    let mut el = Elevator::new(red, base);
    for code in 0..nc.pow(l as u32) {
        let t = decode(code, nc, l);
        let parts: Vec<(u32, usize, usize)> = t.iter().map(|&e| split(e)).collect();
        let bt: Vec<u32> = parts.iter().map(|p| p.0).collect();
        let hv: Vec<usize> = parts.iter().map(|p| p.2).collect();
        let g = hs.g(&hv);
        for i in 0..m {
            let (bw, x) = pseudo[encode(&bt, n)][i];
            let w = (bw as usize * copies + i * hsize + g) as u32;
            let mut u = t.clone();
            u.push(w);
            if is_primitive(&u) {
                el.assign(&u, x)?;
            }
        }
    }
    el.complete()?;
    Ok((el.out, copies))
}

/// Consistency check used by tests and the CLI: `ξ` agrees with
/// `ζ ∪ η⁺ ∪ ∂ξ` for the actual tuple in `s`.
pub fn tuple_type(red: &Reduction, s: &Structure, t: &[u32]) -> Result<Option<usize>, ReductionError> {
    let ul1 = red.space.universe(red.l + 1);
    Ok(red.xi_index(&atp(s, t, ul1)?))
}

/// Blunt-type check exposed for diagnostics.
pub fn xi_is_blunt(red: &Reduction, x: usize) -> bool {
    is_blunt(&red.xis[x], red.space.universe(red.l + 1))
}

/// Shorthand used by examples: `∀x̄_ℓ ∃x_{ℓ+1}` of a single `γ`.
pub fn witness_requirement(l: usize, gamma: Formula) -> Formula {
    forall_range(1, l, exists(l + 1, gamma))
}

pub fn tuple_of(v: &[u32]) -> Tuple {
    Tuple::from_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::parse;
    use crate::structures::models;

    fn nf(text: &str) -> NormalForm {
        let f = parse(text).unwrap();
        crate::formulas::to_normal_form(&f).unwrap().0
    }

    #[test]
    fn colouring_small_cases() {
        assert_eq!(colour_digraph(4, &[]), vec![0; 4]);
        let c = colour_digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        assert!(c.iter().all(|&x| x < 3));
        assert!(c[0] != c[1] && c[1] != c[2] && c[2] != c[0]);
    }

    #[test]
    fn witness_index_sizes() {
        assert_eq!(witness_index_set(1).size(), 9);
        assert_eq!(witness_index_set(2).size(), 343);
        let h = witness_index_set(1);
        for a in 0..h.size() {
            assert!(h.check(&[a]));
        }
        assert_eq!(compact_witness_index_set(2).size(), 49);
    }

    #[test]
    fn two_cycle_round_trip() {
        let phi = nf("(and (forall x1 (forall x2 (exists x3 (-> (g x1 x2) (g x2 x3))))) \
                      (forall x1 (forall x2 (forall x3 true))))");
        let out = build_psi(&phi, Variant::WithEquality, Caps::default()).unwrap();
        let psi = out.formula();
        assert!(crate::formulas::check_fragments(&psi).in_af);
        assert!(psi.max_var() <= 2);
        let mut a = Structure::new(2);
        a.insert("g", &[0, 1]);
        a.insert("g", &[1, 0]);
        assert!(models(&a, &phi.to_formula()));
        let ap = expand_model(&out.reduction, &a).unwrap();
        assert!(models(&ap, &psi));
        let b = elevate_model(&out.reduction, &ap).unwrap();
        assert_eq!(b.domain_size, 2);
        assert!(models(&b, &phi.to_formula()));
    }

    #[test]
    fn equality_free_round_trip() {
        let phi = nf("(and (forall x1 (forall x2 (exists x3 (t x1 x2 x3)))) \
                      (forall x1 (forall x2 (forall x3 (-> (t x1 x2 x3) (not (t x3 x2 x1)))))))");
        let out = build_psi(&phi, Variant::EqualityFree, Caps::default()).unwrap();
        let psi = out.formula();
        assert!(!psi.uses_equality());
        let mut a = Structure::new(3);
        for x in 0..3u32 {
            for y in 0..3u32 {
                a.insert("t", &[x, y, (x + 1) % 3]);
            }
        }
        assert!(models(&a, &phi.to_formula()));
        let ap = expand_model(&out.reduction, &a).unwrap();
        assert!(models(&ap, &psi));
        let (c, copies) = elevate_eq_free(&out.reduction, &ap).unwrap();
        assert!(copies <= 49);
        assert!(models(&c, &phi.to_formula()));
    }
}
