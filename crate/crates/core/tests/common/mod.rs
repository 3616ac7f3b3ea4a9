//! Shared generators for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use adjacent::formulas::{parse, Formula, Signature};
use adjacent::structures::{all_tuples, Structure};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(path)
}

/// Sentences of a corpus file: one per line, `;` starts a comment line.
pub fn corpus(path: &str) -> Vec<Formula> {
    let text = std::fs::read_to_string(data(path)).expect("corpus file");
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with(';'))
        .map(|l| parse(l).unwrap_or_else(|e| panic!("{l}: {e}")))
        .collect()
}

pub fn sig(items: &[(&str, usize)]) -> Signature {
    items.iter().map(|&(p, a)| (p.to_string(), a)).collect()
}

/// Random adjacent argument sequence of length `m` over `1..=k`.
fn adjacent_args<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<usize> {
    let mut args = vec![rng.gen_range(1..=k)];
    while args.len() < m {
        let last = *args.last().unwrap() as i64;
        let next = (last + rng.gen_range(-1..=1)).clamp(1, k as i64);
        args.push(next as usize);
    }
    args
}

fn connective<R: Rng>(rng: &mut R, a: Formula, b: Formula) -> Formula {
    match rng.gen_range(0..4) {
        0 => Formula::And(vec![a, b]),
        1 => Formula::Or(vec![a, b]),
        2 => Formula::Implies(Box::new(a), Box::new(b)),
        _ => Formula::Iff(Box::new(a), Box::new(b)),
    }
}

/// Random index-normal adjacent formula with free variables among
/// `x1..xk`, using at most `max_vars` variables.
pub fn random_af<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    k: usize,
    max_vars: usize,
    depth: usize,
    equality: bool,
) -> Formula {
    let preds: Vec<(&String, &usize)> = sig.iter().collect();
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if k == 0 {
        let q = random_af(rng, sig, 1, max_vars, depth.saturating_sub(1), equality);
        return quantify(rng, 1, q);
    }
    if leaf {
        if equality && k >= 2 && rng.gen_bool(0.15) {
            let i = rng.gen_range(1..k);
            return Formula::Eq(i, i + 1);
        }
        let (p, &m) = preds[rng.gen_range(0..preds.len())];
        return Formula::Atom(p.as_str().into(), adjacent_args(rng, m, k));
    }
    match rng.gen_range(0..10) {
        0 | 1 => Formula::Not(Box::new(random_af(rng, sig, k, max_vars, depth - 1, equality))),
        2..=5 => {
            let a = random_af(rng, sig, k, max_vars, depth - 1, equality);
            let b = random_af(rng, sig, k, max_vars, depth - 1, equality);
            connective(rng, a, b)
        }
        _ if k < max_vars => {
            let body = random_af(rng, sig, k + 1, max_vars, depth - 1, equality);
            quantify(rng, k + 1, body)
        }
        _ => random_af(rng, sig, k, max_vars, depth - 1, equality),
    }
}

fn quantify<R: Rng>(rng: &mut R, v: usize, body: Formula) -> Formula {
    if rng.gen_bool(0.5) {
        Formula::Exists(v, Box::new(body))
    } else {
        Formula::Forall(v, Box::new(body))
    }
}

/// Random adjacent sentence that uses exactly `vars` variables.
pub fn random_af_sentence<R: Rng>(rng: &mut R, sig: &Signature, vars: usize, depth: usize, equality: bool) -> Formula {
    loop {
        let f = random_af(rng, sig, 0, vars, depth, equality);
        if f.max_var() == vars {
            return f;
        }
    }
}

/// Random two-variable sentence: any argument order, variables reused.
pub fn random_fo2<R: Rng>(rng: &mut R, sig: &Signature, depth: usize) -> Formula {
    fn go<R: Rng>(rng: &mut R, preds: &[(&String, &usize)], depth: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.2) {
            if rng.gen_bool(0.1) {
                return Formula::Eq(1, 2);
            }
            let (p, &m) = preds[rng.gen_range(0..preds.len())];
            let args = (0..m).map(|_| rng.gen_range(1..=2)).collect();
            return Formula::Atom(p.as_str().into(), args);
        }
        match rng.gen_range(0..8) {
            0 | 1 => Formula::Not(Box::new(go(rng, preds, depth - 1))),
            2..=4 => {
                let a = go(rng, preds, depth - 1);
                let b = go(rng, preds, depth - 1);
                connective(rng, a, b)
            }
            _ => {
                let v = rng.gen_range(1..=2);
                let body = go(rng, preds, depth - 1);
                quantify(rng, v, body)
            }
        }
    }
    let preds: Vec<(&String, &usize)> = sig.iter().collect();
    let mut f = go(rng, &preds, depth);
    for v in f.free_vars().into_iter().rev() {
        f = quantify(rng, v, f);
    }
    f
}

pub fn random_structure<R: Rng>(rng: &mut R, n: usize, sig: &Signature, density: f64) -> Structure {
    let mut s = Structure::with_signature(n, sig);
    for (p, &m) in sig {
        for t in all_tuples(n, m) {
            if rng.gen_bool(density) {
                s.insert(p, &t);
            }
        }
    }
    s
}

/// Every structure over `sig` with domain `0..n`.
pub fn all_structures(n: usize, sig: &Signature) -> impl Iterator<Item = Structure> + '_ {
    let slots: Vec<(String, Vec<u32>)> = sig
        .iter()
        .flat_map(|(p, &m)| all_tuples(n, m).map(move |t| (p.clone(), t.to_vec())))
        .collect();
    assert!(slots.len() < 30, "too many structures");
    (0u64..1 << slots.len()).map(move |mask| {
        let mut s = Structure::with_signature(n, sig);
        for (i, (p, t)) in slots.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.insert(p, t);
            }
        }
        s
    })
}

/// Random digraph on `n` vertices with out-degree at most `d`.
pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let others: Vec<usize> = (0..n).collect();
    for v in 0..n {
        let deg = rng.gen_range(0..=d.min(n - 1));
        let mut targets: Vec<usize> = others.iter().copied().filter(|&u| u != v).collect();
        targets.shuffle(rng);
        for &u in targets.iter().take(deg) {
            edges.push((v, u));
        }
    }
    edges
}
