//! Acceptance suite: thirteen criteria, one line each.
//!
//! Run with `cargo test --test acceptance`. Each criterion carries its own
//! time budget; exceeding it counts as a failure.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use adjacent::bisim::{check_bisimulation, greatest_bisimulation, Condition, TupleRelation};
use adjacent::formulas::{
    adjacent_closure, check_fragments, parse, to_normal_form, Formula, NormalForm,
};
use adjacent::ga_encoder::{
    atm_accepts, build_model_from_tree, check_tree, encode, num_formulas, Atm,
};
use adjacent::reduction::{
    build_psi, colour_digraph, elevate_model, expand_model, witness_index_set, Caps, Variant,
};
use adjacent::solver::{bounded_model_search, model_of_size, satisfiable_sizes, SearchCaps};
use adjacent::structures::{models, satisfies, Structure};
use adjacent::translations::{af2_to_fo2, expand_for_gadget, fo2_to_af, is_transitive, transitivity_formula};
use adjacent::words::{
    apply_walk, chars, d_equal, defects, lambda_closure, primitive_generator, reversed,
    surjective_adjacent, word_string,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1, 2, 3, 4: words
// ---------------------------------------------------------------------------

/// All position sequences of length `m` over `0..k` with steps in {-1,0,1}
/// that visit every position.
fn covering_walks(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            let seen: BTreeSet<usize> = cur.iter().copied().collect();
            if seen.len() == k {
                out.push(cur.clone());
            }
            return;
        }
        let last = *cur.last().unwrap() as i64;
        for d in -1..=1i64 {
            let n = last + d;
            if (0..k as i64).contains(&n) {
                cur.push(n as usize);
                go(m, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for s in 0..k {
        go(m, k, &mut vec![s], &mut out);
    }
    out
}

/// Shortest words generating `c`, by brute force over all covering walks.
fn minimal_generators(c: &[char], walks: &mut std::collections::HashMap<(usize, usize), Vec<Vec<usize>>>) -> BTreeSet<Vec<char>> {
    for l in 1..=c.len() {
        let ws = walks.entry((c.len(), l)).or_insert_with(|| covering_walks(c.len(), l));
        let mut found = BTreeSet::new();
        'walk: for w in ws.iter() {
            let mut g: Vec<Option<char>> = vec![None; l];
            for (i, &p) in w.iter().enumerate() {
                match g[p] {
                    Some(x) if x != c[i] => continue 'walk,
                    _ => g[p] = Some(c[i]),
                }
            }
            found.insert(g.into_iter().map(Option::unwrap).collect());
        }
        if !found.is_empty() {
            return found;
        }
    }
    unreachable!("a word generates itself")
}

fn all_words(alphabet: &[char], len: usize) -> Vec<Vec<char>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&a| {
                    let mut v = w.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    out
}

fn criterion_1() -> Outcome {
    let mut walks = Default::default();
    let mut count = 0;
    for len in 1..=7 {
        for c in all_words(&['a', 'b', 'c'], len) {
            let brute = minimal_generators(&c, &mut walks);
            let (g, f) = primitive_generator(&c);
            let expected: BTreeSet<Vec<char>> = [g.clone(), reversed(&g)].into_iter().collect();
            ensure(brute == expected, || {
                format!("{}: brute force {:?}, got {}", word_string(&c), brute, word_string(&g))
            })?;
            ensure(apply_walk(&g, &f).map_err(|e| e.to_string())? == c, || {
                format!("{}: returned walk does not reproduce the word", word_string(&c))
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} words"))
}

fn criterion_2() -> Outcome {
    let course = [3, 2, 1, 2, 3, 3, 3, 4, 5, 6, 5, 4, 3, 4, 5, 6, 7, 8, 7, 6];
    let f = adjacent::words::AdjacentFunction::new(course.to_vec(), 8).map_err(|e| e.to_string())?;
    let w = apply_walk(&chars("cbadefba"), &f).map_err(|e| e.to_string())?;
    ensure(word_string(&w) == "abcbaaadefedadefbabf", || format!("walk gave {}", word_string(&w)))?;
    let (g, _) = primitive_generator(&w);
    let g = word_string(&g);
    ensure(g == "cbadefba" || g == "abfedabc", || format!("generator {g}"))?;
    Ok(format!("generator {g}"))
}

fn criterion_3() -> Outcome {
    let mut walks = Default::default();
    let alphabet = ['a', 'b', 'c', 'd'];
    let mut pairs = 0u64;
    for k in 1..=4 {
        let fs: Vec<Vec<_>> = (1..=6).map(|m| surjective_adjacent(m, k)).collect();
        for a in all_words(&alphabet, k) {
            if minimal_generators(&a, &mut walks).iter().next().unwrap().len() != k {
                continue;
            }
            let d = defects(&a);
            for group in &fs {
                for f in group {
                    let af = apply_walk(&a, f).unwrap();
                    for g in group {
                        let same = af == apply_walk(&a, g).unwrap();
                        let deq = d_equal(f, g, &d).map_err(|e| e.to_string())?;
                        ensure(same == deq, || {
                            format!("a={} f={:?} g={:?}: words equal {same}, D-equal {deq}", word_string(&a), f.values, g.values)
                        })?;
                        pairs += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{pairs} pairs"))
}

fn criterion_4() -> Outcome {
    for m in 1..=3 {
        let mut seed = vec!['0', '1'];
        seed.extend(std::iter::repeat('1').take(m));
        let closure = lambda_closure(&[seed].into_iter().collect(), m, 1 << 16).map_err(|e| e.to_string())?;
        for tail in all_words(&['0', '1'], m) {
            let mut w = vec!['0', '1'];
            w.extend(tail);
            ensure(closure.contains(&w), || format!("m={m}: {} missing", word_string(&w)))?;
        }
    }
    Ok("m = 1, 2, 3".into())
}

// ---------------------------------------------------------------------------
// 5, 6, 7: normal form, closure, reduction
// ---------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = sig(&[("P", 1), ("E", 2), ("R", 3)]);
    let mut sat = 0;
    for i in 0..50 {
        let phi = random_af_sentence(&mut rng, &s, 3, 5, true);
        let (nf, _) = to_normal_form(&phi).map_err(|e| format!("#{i}: {e}"))?;
        let a = satisfiable_sizes(&phi, 3).map_err(|e| format!("#{i}: {e}"))?;
        let b = satisfiable_sizes(&nf.to_formula(), 3).map_err(|e| format!("#{i}: {e}"))?;
        ensure(a == b, || format!("#{i} {phi}: {a:?} vs {b:?}"))?;
        sat += a.values().filter(|&&v| v).count();
    }
    Ok(format!("50 sentences, {sat}/150 satisfiable sizes"))
}

fn random_qf<R: Rng>(rng: &mut R, s: &adjacent::formulas::Signature) -> Formula {
    random_af(rng, s, 3, 3, 3, true)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = sig(&[("P", 1), ("E", 2), ("R", 3)]);
    let mut found = 0;
    let mut tries = 0;
    while found < 100 {
        tries += 1;
        ensure(tries < 1_000_000, || format!("only {found} satisfied pairs"))?;
        let gammas = (0..rng.gen_range(1..=2)).map(|_| random_qf(&mut rng, &s)).collect();
        let beta = Formula::Or(vec![random_qf(&mut rng, &s), random_qf(&mut rng, &s)]);
        let nf = NormalForm { l: 2, gammas, beta };
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, n, &s, 0.5);
        if !models(&a, &nf.to_formula()) {
            continue;
        }
        found += 1;
        let acl = adjacent_closure(&nf).map_err(|e| e.to_string())?;
        ensure(models(&a, &acl.to_formula()), || format!("acl fails for {}", nf.to_formula()))?;
    }
    Ok(format!("100 pairs from {tries} samples"))
}

fn criterion_7() -> Outcome {
    let corpus = corpus("af3_corpus.fol");
    ensure(corpus.len() == 20, || format!("{} sentences", corpus.len()))?;
    for (i, phi) in corpus.iter().enumerate() {
        let nf = NormalForm::recognize(phi, 2).ok_or_else(|| format!("#{i}: not in normal form"))?;
        let a = bounded_model_search(phi, 3)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("#{i}: no model up to 3"))?;
        let out = build_psi(&nf, Variant::WithEquality, Caps::default()).map_err(|e| format!("#{i}: {e}"))?;
        let psi = out.formula();
        ensure(psi.max_var() <= 2, || format!("#{i}: ψ has {} variables", psi.max_var()))?;
        let expanded = expand_model(&out.reduction, &a).map_err(|e| format!("#{i}: {e}"))?;
        ensure(models(&expanded, &psi), || format!("#{i}: expansion is not a model of ψ"))?;
        let elevated = elevate_model(&out.reduction, &expanded).map_err(|e| format!("#{i}: {e}"))?;
        ensure(elevated.domain_size == a.domain_size, || format!("#{i}: domain changed"))?;
        ensure(models(&elevated, phi), || format!("#{i}: elevation is not a model of φ"))?;
    }
    Ok("20 sentences".into())
}

// ---------------------------------------------------------------------------
// 8, 9: circular witnessing and colouring
// ---------------------------------------------------------------------------

fn orderings(v: &[usize]) -> Vec<Vec<usize>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in orderings(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn witness_violation(h: &adjacent::reduction::WitnessIndexSet, t: &[usize]) -> Option<String> {
    let gt = h.g(t);
    if gt >= h.size() {
        return Some(format!("g{t:?} = {gt} outside H"));
    }
    if t.contains(&gt) {
        return Some(format!("(i) fails at {t:?}"));
    }
    let mut next = t[1..].to_vec();
    next.push(gt);
    for p in orderings(&next) {
        if t.contains(&h.g(&p)) {
            return Some(format!("(ii) fails at {t:?} via {p:?}"));
        }
    }
    None
}

fn criterion_8() -> Outcome {
    let h1 = witness_index_set(1);
    ensure(h1.size() == 9, || format!("|H| = {} at k=1", h1.size()))?;
    for t in 0..h1.size() {
        if let Some(v) = witness_violation(&h1, &[t]) {
            return Err(v);
        }
    }
    let h2 = witness_index_set(2);
    ensure(h2.size() == 343, || format!("|H| = {} at k=2", h2.size()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let t = [rng.gen_range(0..h2.size()), rng.gen_range(0..h2.size())];
        if let Some(v) = witness_violation(&h2, &t) {
            return Err(v);
        }
    }
    Ok("9 tuples at k=1, 10000 at k=2".into())
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0;
    for i in 0..1000 {
        let n = rng.gen_range(1..=40);
        let d = rng.gen_range(0..=5);
        let edges = random_digraph(&mut rng, n, d);
        let out_deg = (0..n).map(|v| edges.iter().filter(|e| e.0 == v).count()).max().unwrap_or(0);
        let colour = colour_digraph(n, &edges);
        ensure(colour.len() == n, || format!("graph {i}: {} colours assigned", colour.len()))?;
        for &(u, v) in &edges {
            ensure(colour[u] != colour[v], || format!("graph {i}: edge {u}->{v} monochromatic"))?;
        }
        let used: BTreeSet<usize> = colour.iter().copied().collect();
        ensure(used.len() <= 2 * out_deg + 1, || {
            format!("graph {i}: {} colours for out-degree {out_deg}", used.len())
        })?;
        worst = worst.max(used.len());
    }
    Ok(format!("1000 digraphs, at most {worst} colours"))
}

// ---------------------------------------------------------------------------
// 10: translations
// ---------------------------------------------------------------------------

fn agree_everywhere(phi: &Formula, psi: &Formula, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut s = phi.signature().map_err(|e| e.to_string())?;
    s.extend(psi.signature().map_err(|e| e.to_string())?);
    for n in 1..=2 {
        for a in all_structures(n, &s) {
            ensure(models(&a, phi) == models(&a, psi), || format!("{phi} vs {psi} on {:?}", a.to_json()))?;
        }
    }
    for _ in 0..1000 {
        let a = random_structure(rng, 3, &s, 0.5);
        ensure(models(&a, phi) == models(&a, psi), || format!("{phi} vs {psi} on {:?}", a.to_json()))?;
    }
    Ok(())
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let s = sig(&[("P", 1), ("Q", 1), ("E", 2)]);
    for i in 0..30 {
        let phi = random_fo2(&mut rng, &s, 5);
        let psi = fo2_to_af(&phi).map_err(|e| format!("FO² #{i}: {e}"))?;
        ensure(check_fragments(&psi).in_af, || format!("FO² #{i}: output not adjacent"))?;
        agree_everywhere(&phi, &psi, &mut rng)?;
    }
    for i in 0..10 {
        let phi = random_af_sentence(&mut rng, &s, 3, 5, true);
        let psi = af2_to_fo2(&phi).map_err(|e| format!("AF #{i}: {e}"))?;
        ensure(check_fragments(&psi).in_fo2, || format!("AF #{i}: output not two-variable"))?;
        agree_everywhere(&phi, &psi, &mut rng)?;
    }
    Ok("30 FO² and 10 binary AF sentences".into())
}

// ---------------------------------------------------------------------------
// 11: alternating machines
// ---------------------------------------------------------------------------

fn criterion_11() -> Outcome {
    let names = ["accept_now", "reject_now", "first_is_one", "second_is_one", "both_branches"];
    let mut accepted = 0;
    for name in names {
        let text = std::fs::read_to_string(data(&format!("machines/{name}.json"))).map_err(|e| e.to_string())?;
        let m = Atm::from_json(&text).map_err(|e| format!("{name}: {e}"))?;
        ensure(m.n == 1, || format!("{name}: space exponent {}", m.n))?;
        let letters: Vec<char> = m.spec.alphabet.iter().flat_map(|s| s.chars()).collect();
        for len in 1..=m.tape_length() {
            for w in all_words(&letters, len) {
                let w = word_string(&w);
                let w0 = m.parse_input(&w).map_err(|e| e.to_string())?;
                let phi = encode(&m, &w0).map_err(|e| format!("{name}/{w}: {e}"))?;
                ensure(check_fragments(&phi).in_ga, || format!("{name}/{w}: encoding not in GA"))?;
                if let Some(tree) = atm_accepts(&m, &w0).map_err(|e| e.to_string())? {
                    check_tree(&m, &w0, &tree).map_err(|e| format!("{name}/{w}: {e}"))?;
                    let model = build_model_from_tree(&m, &w0, &tree).map_err(|e| e.to_string())?;
                    ensure(models(&model, &phi), || format!("{name}/{w}: tree model fails the encoding"))?;
                    accepted += 1;
                }
            }
        }
    }
    for n in 1..=3 {
        let nf = num_formulas(n);
        let mut s = Structure::new(2);
        s.insert("O", &[1]);
        let bits = |v: usize| -> Vec<u32> { (0..n).map(|i| ((v >> (n - 1 - i)) & 1) as u32).collect() };
        for c in 0..1usize << n {
            for d in 0..1usize << n {
                let mut t = bits(c);
                t.extend(bits(d));
                let (c, d) = (c as i64, d as i64);
                ensure(satisfies(&s, &nf.eq, &t) == (c == d), || format!("n={n}: eq({c},{d})"))?;
                ensure(satisfies(&s, &nf.plus_one, &t) == (c == d + 1), || format!("n={n}: +1({c},{d})"))?;
                ensure(satisfies(&s, &nf.minus_one, &t) == (c + 1 == d), || format!("n={n}: -1({c},{d})"))?;
            }
        }
    }
    Ok(format!("5 machines, {accepted} accepted inputs model-checked"))
}

// ---------------------------------------------------------------------------
// 12: bisimulation
// ---------------------------------------------------------------------------

fn structure_file(name: &str) -> Result<Structure, String> {
    let text = std::fs::read_to_string(data(&format!("structures/{name}.json"))).map_err(|e| e.to_string())?;
    let f: adjacent::structures::StructureFile = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    f.to_structure().map_err(|e| e.to_string())
}

fn criterion_12() -> Outcome {
    let s = sig(&[("P", 1), ("R", 2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut validated = 0;
    for _ in 0..60 {
        let (na, nb) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let a = random_structure(&mut rng, na, &s, 0.4);
        let b = if rng.gen_bool(0.3) { a.clone() } else { random_structure(&mut rng, nb, &s, 0.4) };
        let ta = [rng.gen_range(0..a.domain_size as u32)];
        let tb = [rng.gen_range(0..b.domain_size as u32)];
        if let Some(z) = greatest_bisimulation(&a, &ta, &b, &tb, &s, 2).map_err(|e| e.to_string())? {
            check_bisimulation(&z, &a, &b, &s).map_err(|v| format!("invalid output: {v:?}"))?;
            validated += 1;
        }
    }
    let battery = corpus("ga_battery.fol");
    ensure(battery.len() == 20, || format!("battery has {} formulas", battery.len()))?;
    for f in &battery {
        ensure(check_fragments(f).in_ga, || format!("{f} is not in GA"))?;
    }
    let (a, b, c) = (structure_file("loop")?, structure_file("two_loops")?, structure_file("edge")?);
    let z = greatest_bisimulation(&a, &[0], &b, &[0], &s, 2)
        .map_err(|e| e.to_string())?
        .ok_or("hand-built pair not bisimilar")?;
    check_bisimulation(&z, &a, &b, &s).map_err(|v| format!("{v:?}"))?;
    validated += 1;
    for f in &battery {
        ensure(satisfies(&a, f, &[0]) == satisfies(&b, f, &[0]), || format!("bisimilar pair disagrees on {f}"))?;
    }
    ensure(greatest_bisimulation(&a, &[0], &c, &[0], &s, 2).map_err(|e| e.to_string())?.is_none(), || {
        "non-bisimilar pair accepted".into()
    })?;
    let single = TupleRelation { bound: 2, pairs: [(vec![0], vec![0])].into_iter().collect() };
    let v = check_bisimulation(&single, &a, &c, &s).err().ok_or("no violation reported")?;
    ensure(v.condition == Condition::AtomicHarmony, || format!("violation {:?}", v.condition))?;
    Ok(format!("{validated} relations validated, battery agrees"))
}

// ---------------------------------------------------------------------------
// 13: transitivity gadget
// ---------------------------------------------------------------------------

fn transitive_closure(s: &mut Structure, t: &str) {
    let n = s.domain_size as u32;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if s.holds(t, &[i, k]) && s.holds(t, &[k, j]) {
                    s.insert(t, &[i, j]);
                }
            }
        }
    }
}

fn criterion_13() -> Outcome {
    let g = transitivity_formula(&[1, 3], "T", "Q").map_err(|e| e.to_string())?;
    let s = sig(&[("T", 2), ("Q", 2)]);
    let mut checked = 0;
    for n in 1..=3 {
        for a in all_structures(n, &s) {
            if models(&a, &g.formula) {
                ensure(is_transitive(&a, "T"), || format!("non-transitive model {:?}", a.to_json()))?;
                checked += 1;
            }
        }
    }
    let not_transitive = parse("(exists x1 (exists x2 (exists x3 (and (T x1 x2) (T x2 x3) (not (T x1 x3))))))").unwrap();
    let mut maps = 0;
    for f in [vec![1, 3], vec![3, 1], vec![1, 4], vec![2, 1, 3], vec![1, 2, 4]] {
        let g = transitivity_formula(&f, "T", "Q").map_err(|e| e.to_string())?;
        let both = Formula::And(vec![g.formula.clone(), not_transitive.clone()]);
        for n in 1..=3 {
            let found = model_of_size(&both, n, SearchCaps::default()).map_err(|e| e.to_string())?;
            ensure(found.is_none(), || format!("map {f:?}: non-transitive model of size {n}"))?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(13 + maps);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let mut a = random_structure(&mut rng, n, &sig(&[("T", 2)]), 0.3);
            transitive_closure(&mut a, "T");
            let e = expand_for_gadget(&a, &g, "T", "Q");
            ensure(models(&e, &g.formula), || format!("map {f:?}: expansion fails on {:?}", a.to_json()))?;
        }
        maps += 1;
    }
    Ok(format!("{checked} models of size ≤ 3 transitive, {maps} maps × 200 expansions"))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 13] = [
        ("primitive generator uniqueness", 60, criterion_1),
        ("figure-1 walk", 1, criterion_2),
        ("D-equality lemma", 300, criterion_3),
        ("λ-closure", 1, criterion_4),
        ("normal form equisatisfiability", 600, criterion_5),
        ("acl soundness", 300, criterion_6),
        ("reduction round trip", 900, criterion_7),
        ("circular witness set", 60, criterion_8),
        ("colouring bound", 60, criterion_9),
        ("translations", 600, criterion_10),
        ("GA encoder", 300, criterion_11),
        ("bisimulation", 60, criterion_12),
        ("transitivity gadget", 120, criterion_13),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > Duration::from_secs(*budget) => {
                Err(format!("exceeded {budget} s budget"))
            }
            r => r,
        };
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} ({elapsed:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail} ({elapsed:.2?})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
