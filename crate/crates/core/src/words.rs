//! Combinatorics of words and adjacent functions.
//!
//! - [`AdjacentFunction`] and enumeration of the sets of adjacent, final and
//!   surjective functions `[1,m] -> [1,k]`
//! - walks `a^f`, generation and primitive generators
//! - defect sets and the induced equivalence `f ≐_D g`
//! - the extension classification for words `b·x`
//! - the λ-closure used by the guarded encoder

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("malformed function: entry {value} at position {position} outside [1,{codomain}]")]
    Malformed {
        position: usize,
        value: usize,
        codomain: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("closure exceeded cap of {cap} words")]
    Capacity { cap: usize },
}

/// A total function `[1,m] -> [1,k]`, stored as its course of values (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdjacentFunction {
    pub values: Vec<usize>,
    pub codomain_size: usize,
}

impl AdjacentFunction {
    pub fn new(values: Vec<usize>, codomain_size: usize) -> Result<Self, WordError> {
        for (i, &v) in values.iter().enumerate() {
            if v == 0 || v > codomain_size {
                return Err(WordError::Malformed {
                    position: i + 1,
                    value: v,
                    codomain: codomain_size,
                });
            }
        }
        Ok(Self {
            values,
            codomain_size,
        })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            values: (1..=k).collect(),
            codomain_size: k,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_adjacent(&self) -> bool {
        self.values.windows(2).all(|w| w[0].abs_diff(w[1]) <= 1)
    }

    pub fn is_final(&self) -> bool {
        self.values.last() == Some(&self.codomain_size)
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.codomain_size + 1];
        for &v in &self.values {
            seen[v] = true;
        }
        seen[1..].iter().all(|&b| b)
    }

    /// `f⁺ = f ∪ {m+1 ↦ k+1}`.
    pub fn plus(&self) -> Self {
        let mut values = self.values.clone();
        values.push(self.codomain_size + 1);
        Self {
            values,
            codomain_size: self.codomain_size + 1,
        }
    }

    /// `h ∘ self`: first walk with `self`, then with `h`.
    pub fn then(&self, h: &AdjacentFunction) -> Result<Self, WordError> {
        if h.len() != self.codomain_size {
            return Err(WordError::Dimension {
                expected: self.codomain_size,
                found: h.len(),
            });
        }
        Ok(Self {
            values: self.values.iter().map(|&v| h.values[v - 1]).collect(),
            codomain_size: h.codomain_size,
        })
    }

    /// The reversed walk `k+1-f`.
    pub fn mirrored(&self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|&v| self.codomain_size + 1 - v)
                .collect(),
            codomain_size: self.codomain_size,
        }
    }

    /// Maximal intervals on which the slope is constant, as 1-based inclusive ranges.
    pub fn legs(&self) -> Vec<(usize, usize)> {
        let m = self.values.len();
        if m <= 1 {
            return if m == 1 { vec![(1, 1)] } else { vec![] };
        }
        let slope = |i: usize| self.values[i + 1] as isize - self.values[i] as isize;
        let mut legs = Vec::new();
        let mut start = 0;
        for i in 1..m - 1 {
            if slope(i) != slope(i - 1) {
                legs.push((start + 1, i + 1));
                start = i;
            }
        }
        legs.push((start + 1, m));
        legs
    }
}

impl fmt::Display for AdjacentFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

pub fn is_adjacent_fn(f: &AdjacentFunction, require_final: bool) -> Result<bool, WordError> {
    AdjacentFunction::new(f.values.clone(), f.codomain_size)?;
    Ok(f.is_adjacent() && (!require_final || f.is_final()))
}

/// All adjacent functions `[1,m] -> [1,k]` in lexicographic order.
pub fn all_adjacent(m: usize, k: usize) -> Vec<AdjacentFunction> {
    let mut out = Vec::new();
    if m == 0 {
        out.push(AdjacentFunction {
            values: vec![],
            codomain_size: k,
        });
        return out;
    }
    let mut cur = Vec::with_capacity(m);
    fn rec(m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<AdjacentFunction>) {
        if cur.len() == m {
            out.push(AdjacentFunction {
                values: cur.clone(),
                codomain_size: k,
            });
            return;
        }
        let (lo, hi) = match cur.last() {
            None => (1, k),
            Some(&v) => (v.saturating_sub(1).max(1), (v + 1).min(k)),
        };
        for v in lo..=hi {
            cur.push(v);
            rec(m, k, cur, out);
            cur.pop();
        }
    }
    rec(m, k, &mut cur, &mut out);
    out
}

/// The final adjacent functions `[1,m] -> [1,k]`, i.e. those with `f(m) = k`.
pub fn final_adjacent(m: usize, k: usize) -> Vec<AdjacentFunction> {
    all_adjacent(m, k)
        .into_iter()
        .filter(|f| f.is_final())
        .collect()
}

pub fn surjective_adjacent(m: usize, k: usize) -> Vec<AdjacentFunction> {
    all_adjacent(m, k)
        .into_iter()
        .filter(|f| f.is_surjective())
        .collect()
}

/// `a^f = a_{f(1)} ⋯ a_{f(m)}`.
pub fn apply_walk<T: Clone>(a: &[T], f: &AdjacentFunction) -> Result<Vec<T>, WordError> {
    if a.len() != f.codomain_size {
        return Err(WordError::Dimension {
            expected: f.codomain_size,
            found: a.len(),
        });
    }
    Ok(f.values.iter().map(|&v| a[v - 1].clone()).collect())
}

pub fn reversed<T: Clone>(a: &[T]) -> Vec<T> {
    a.iter().rev().cloned().collect()
}

/// A surjective adjacent `f` with `a^f = c`, choosing the lexicographically
/// least course of values.
pub fn generates<T: Eq>(a: &[T], c: &[T]) -> Option<AdjacentFunction> {
    let k = a.len();
    let m = c.len();
    if k == 0 || m < k {
        return if k == 0 && m == 0 {
            Some(AdjacentFunction {
                values: vec![],
                codomain_size: 0,
            })
        } else {
            None
        };
    }
    // Failing states: (position, value, reached 1, reached k).
    let mut dead: HashSet<(usize, usize, bool, bool)> = HashSet::new();
    let mut course = Vec::with_capacity(m);

    fn dfs<T: Eq>(
        a: &[T],
        c: &[T],
        pos: usize,
        val: usize,
        lo: bool,
        hi: bool,
        course: &mut Vec<usize>,
        dead: &mut HashSet<(usize, usize, bool, bool)>,
    ) -> bool {
        let k = a.len();
        let lo = lo || val == 1;
        let hi = hi || val == k;
        course.push(val);
        if pos + 1 == c.len() {
            if lo && hi {
                return true;
            }
            course.pop();
            return false;
        }
        if dead.contains(&(pos, val, lo, hi)) {
            course.pop();
            return false;
        }
        for next in [val.wrapping_sub(1), val, val + 1] {
            if next >= 1 && next <= k && a[next - 1] == c[pos + 1]
                && dfs(a, c, pos + 1, next, lo, hi, course, dead)
            {
                return true;
            }
        }
        dead.insert((pos, val, lo, hi));
        course.pop();
        false
    }

    for start in 1..=k {
        if a[start - 1] == c[0] && dfs(a, c, 0, start, false, false, &mut course, &mut dead) {
            return Some(AdjacentFunction {
                values: course,
                codomain_size: k,
            });
        }
    }
    None
}

/// Smallest-span walk on `c`: returns (span, offsets relative to the leftmost
/// visited cell). With `final_end`, the walk must end on an extreme cell.
fn min_span_walk<T: Eq + Clone>(c: &[T], final_end: bool, bound: usize) -> Option<(usize, Vec<usize>)> {
    let m = c.len();
    if m == 0 {
        return None;
    }
    // Offsets live in [-(m-1), m-1]; shift by m-1.
    let width = 2 * m - 1;
    let origin = m - 1;
    let mut labels: Vec<Option<T>> = vec![None; width];
    labels[origin] = Some(c[0].clone());
    let mut path = vec![origin];
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut best_span = bound;

    #[allow(clippy::too_many_arguments)]
    fn dfs<T: Eq + Clone>(
        c: &[T],
        labels: &mut Vec<Option<T>>,
        path: &mut Vec<usize>,
        lo: usize,
        hi: usize,
        final_end: bool,
        best: &mut Option<(usize, Vec<usize>)>,
        best_span: &mut usize,
    ) {
        let span = hi - lo + 1;
        if span >= *best_span {
            return;
        }
        let pos = path.len();
        if pos == c.len() {
            let last = *path.last().unwrap();
            if final_end && last != lo && last != hi {
                return;
            }
            *best_span = span;
            *best = Some((span, path.iter().map(|&o| o - lo).collect()));
            return;
        }
        let cur = path[pos - 1];
        for next in [cur.wrapping_sub(1), cur, cur + 1] {
            if next >= labels.len() {
                continue;
            }
            let fresh = match &labels[next] {
                Some(l) if *l == c[pos] => false,
                Some(_) => continue,
                None => true,
            };
            if fresh {
                labels[next] = Some(c[pos].clone());
            }
            path.push(next);
            dfs(
                c,
                labels,
                path,
                lo.min(next),
                hi.max(next),
                final_end,
                best,
                best_span,
            );
            path.pop();
            if fresh {
                labels[next] = None;
            }
        }
    }

    dfs(
        c,
        &mut labels,
        &mut path,
        origin,
        origin,
        final_end,
        &mut best,
        &mut best_span,
    );
    let _ = width;
    best
}

/// The canonical primitive generator of `c` (the lexicographically least of the
/// two mutually reversed generators) with a surjective adjacent walk onto `c`.
pub fn primitive_generator<T: Ord + Clone>(c: &[T]) -> (Vec<T>, AdjacentFunction) {
    assert!(!c.is_empty(), "primitive_generator of the empty word");
    let (span, offsets) = min_span_walk(c, false, c.len() + 1).expect("a word generates itself");
    let mut g: Vec<Option<T>> = vec![None; span];
    for (i, &o) in offsets.iter().enumerate() {
        g[o] = Some(c[i].clone());
    }
    let g: Vec<T> = g.into_iter().map(|x| x.expect("walk covers its span")).collect();
    let f = AdjacentFunction {
        values: offsets.iter().map(|o| o + 1).collect(),
        codomain_size: span,
    };
    let r = reversed(&g);
    if r < g {
        (r, f.mirrored())
    } else {
        (g, f)
    }
}

pub fn primitive_length<T: Ord + Clone>(c: &[T]) -> usize {
    if c.is_empty() {
        return 0;
    }
    primitive_generator(c).0.len()
}

pub fn is_primitive<T: Ord + Clone>(c: &[T]) -> bool {
    c.is_empty() || primitive_length(c) == c.len()
}

/// `b` is terminal if `b = d^f` for some shorter `d` and final `f`.
pub fn is_terminal<T: Ord + Clone>(b: &[T]) -> bool {
    !b.is_empty() && min_span_walk(b, true, b.len()).is_some()
}

pub fn is_palindrome<T: Eq>(a: &[T]) -> bool {
    a.iter().eq(a.iter().rev())
}

/// A set of defect pairs `⟨i,j⟩` (1-based, `i < j`) over a word of length `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DefectSet {
    pub pairs: BTreeSet<(usize, usize)>,
    pub word_length: usize,
}

impl DefectSet {
    pub fn empty(k: usize) -> Self {
        Self {
            pairs: BTreeSet::new(),
            word_length: k,
        }
    }

    /// Representative of each position in `1..=k` under the closure `D*`
    /// (index 0 unused).
    pub fn classes(&self) -> Vec<usize> {
        let k = self.word_length;
        let mut parent: Vec<usize> = (0..=k).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let n = p[y];
                p[y] = r;
                y = n;
            }
            r
        }
        for &(i, j) in &self.pairs {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..=k).map(|x| find(&mut parent, x)).collect()
    }

    /// `D⁺`: every index shifted up by one, over a word one letter longer.
    pub fn plus(&self) -> Self {
        Self {
            pairs: self.pairs.iter().map(|&(i, j)| (i + 1, j + 1)).collect(),
            word_length: self.word_length + 1,
        }
    }

    /// The pairs spanning an odd factor of length at least three.
    pub fn odd_part(&self) -> Self {
        Self {
            pairs: self
                .pairs
                .iter()
                .copied()
                .filter(|&(i, j)| (j - i + 1) % 2 == 1 && j - i + 1 >= 3)
                .collect(),
            word_length: self.word_length,
        }
    }

    pub fn is_subset(&self, other: &DefectSet) -> bool {
        self.pairs.is_subset(&other.pairs)
    }
}

/// `𝔻°_k`: all pairs `⟨i,j⟩` in `[1,k]` with `j-i+1` odd and at least 3.
pub fn odd_defect_universe(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 1..=k {
        let mut j = i + 2;
        while j <= k {
            out.push((i, j));
            j += 2;
        }
    }
    out
}

/// Every subset of `𝔻°_k`, in binary-counter order.
pub fn odd_defect_subsets(k: usize) -> Vec<DefectSet> {
    let universe = odd_defect_universe(k);
    let n = universe.len();
    assert!(n < 24, "too many odd defect positions");
    (0u32..(1 << n))
        .map(|mask| DefectSet {
            pairs: universe
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &p)| p)
                .collect(),
            word_length: k,
        })
        .collect()
}

pub fn defects<T: Eq>(a: &[T]) -> DefectSet {
    let k = a.len();
    let mut pairs = BTreeSet::new();
    for i in 0..k {
        for j in i + 1..k {
            if is_palindrome(&a[i..=j]) {
                pairs.insert((i + 1, j + 1));
            }
        }
    }
    DefectSet {
        pairs,
        word_length: k,
    }
}

/// `f ≐_D g`: `⟨f(i), g(i)⟩ ∈ D*` for every `i`.
pub fn d_equal(
    f: &AdjacentFunction,
    g: &AdjacentFunction,
    d: &DefectSet,
) -> Result<bool, WordError> {
    if f.len() != g.len() {
        return Err(WordError::Dimension {
            expected: f.len(),
            found: g.len(),
        });
    }
    for h in [f, g] {
        if h.codomain_size != d.word_length {
            return Err(WordError::Dimension {
                expected: d.word_length,
                found: h.codomain_size,
            });
        }
    }
    let cls = d.classes();
    Ok(f
        .values
        .iter()
        .zip(&g.values)
        .all(|(&x, &y)| cls[x] == cls[y]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExtensionCase {
    Primitive,
    LastElement,
    OddPalindromeSuffix,
    Terminal,
}

/// Every extension case that holds for the word `b·x`.
pub fn classify_extension<T: Ord + Clone>(b: &[T], x: &T) -> BTreeSet<ExtensionCase> {
    assert!(!b.is_empty());
    let mut w = b.to_vec();
    w.push(x.clone());
    let mut out = BTreeSet::new();
    if is_primitive(&w) {
        out.insert(ExtensionCase::Primitive);
    }
    if b.last() == Some(x) {
        out.insert(ExtensionCase::LastElement);
    }
    let n = w.len();
    if (3..=n).step_by(2).any(|len| is_palindrome(&w[n - len..])) {
        out.insert(ExtensionCase::OddPalindromeSuffix);
    }
    if is_terminal(b) {
        out.insert(ExtensionCase::Terminal);
    }
    out
}

/// The three λ walks on words of length `m+2`, given by the courses
/// `1 2 2 3 …`, `1 2 1 2 3 …` and `1 2 3 3 4 …`, each cut to length `m+2`.
pub fn lambda_functions(m: usize) -> [AdjacentFunction; 3] {
    let len = m + 2;
    let make = |prefix: &[usize], from: usize| {
        let mut v: Vec<usize> = prefix.to_vec();
        let mut next = from;
        while v.len() < len {
            v.push(next);
            next += 1;
        }
        v.truncate(len);
        AdjacentFunction {
            values: v,
            codomain_size: len,
        }
    };
    [make(&[1, 2, 2], 3), make(&[1, 2, 1, 2], 3), make(&[1, 2, 3, 3], 4)]
}

/// Least fixpoint of `seeds` under the three λ walks.
pub fn lambda_closure<T: Ord + Clone>(
    seeds: &BTreeSet<Vec<T>>,
    m: usize,
    cap: usize,
) -> Result<BTreeSet<Vec<T>>, WordError> {
    let lambdas = lambda_functions(m);
    let mut seen: BTreeSet<Vec<T>> = BTreeSet::new();
    let mut stack: Vec<Vec<T>> = Vec::new();
    for s in seeds {
        if s.len() != m + 2 {
            return Err(WordError::Dimension {
                expected: m + 2,
                found: s.len(),
            });
        }
        if seen.insert(s.clone()) {
            stack.push(s.clone());
        }
    }
    while let Some(w) = stack.pop() {
        if seen.len() > cap {
            return Err(WordError::Capacity { cap });
        }
        for l in &lambdas {
            let v = apply_walk(&w, l)?;
            if !seen.contains(&v) {
                seen.insert(v.clone());
                stack.push(v);
            }
        }
    }
    if seen.len() > cap {
        return Err(WordError::Capacity { cap });
    }
    Ok(seen)
}

/// Characters of a string, for the common case of single-character letters.
pub fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

pub fn word_string(w: &[char]) -> String {
    w.iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn af(v: &[usize], k: usize) -> AdjacentFunction {
        AdjacentFunction::new(v.to_vec(), k).unwrap()
    }

    #[test]
    fn adjacency_examples() {
        assert!(is_adjacent_fn(&af(&[3, 2, 1, 2, 2, 2, 3, 4, 3], 4), false).unwrap());
        assert!(!is_adjacent_fn(&af(&[1, 3, 2], 3), false).unwrap());
        assert!(is_adjacent_fn(&af(&[1], 1), true).unwrap());
        assert!(AdjacentFunction::new(vec![0, 1], 2).is_err());
    }

    #[test]
    fn figure_one_walk() {
        let f = af(&[3, 2, 1, 2, 3, 3, 3, 4, 5, 6, 5, 4, 3, 4, 5, 6, 7, 8, 7, 6], 8);
        let w = apply_walk(&chars("cbadefba"), &f).unwrap();
        assert_eq!(word_string(&w), "abcbaaadefedadefbabf");
        let (g, walk) = primitive_generator(&w);
        assert_eq!(word_string(&g), "abfedabc");
        assert_eq!(apply_walk(&g, &walk).unwrap(), w);
    }

    #[test]
    fn generation_examples() {
        let f = generates(&chars("abcd"), &chars("babcd")).unwrap();
        assert_eq!(f.values, vec![2, 1, 2, 3, 4]);
        assert!(generates(&chars("abc"), &chars("ab")).is_none());
        let f = generates(&chars("abcbd"), &chars("abcbcbd")).unwrap();
        assert_eq!(f.values, vec![1, 2, 3, 2, 3, 4, 5]);
    }

    #[test]
    fn primitive_examples() {
        let (g, _) = primitive_generator(&chars("abcbcd"));
        assert_eq!(word_string(&g), "abcd");
        assert!(is_primitive(&chars("abcbda")));
        assert_eq!(primitive_generator(&chars("a")).0, chars("a"));
        assert_eq!(primitive_length(&chars("aaaa")), 1);
        assert_eq!(primitive_length(&chars("abab")), 2);
    }

    #[test]
    fn defect_examples() {
        let d = defects(&chars("abcbd"));
        assert_eq!(d.pairs.into_iter().collect::<Vec<_>>(), vec![(2, 4)]);
        assert!(defects(&chars("abc")).pairs.is_empty());
        assert_eq!(defects(&chars("aa")).pairs.len(), 1);
    }

    #[test]
    fn d_equality_examples() {
        let d = defects(&chars("abcbd"));
        let f = af(&[1, 2, 3, 4, 3, 4, 5], 5);
        let g = af(&[1, 2, 3, 2, 3, 4, 5], 5);
        assert!(d_equal(&f, &g, &d).unwrap());
        assert!(d_equal(&f, &f, &d).unwrap());
        assert!(!d_equal(&af(&[1, 2], 2), &af(&[2, 1], 2), &DefectSet::empty(2)).unwrap());
        assert!(d_equal(&af(&[1], 2), &af(&[1, 2], 2), &DefectSet::empty(2)).is_err());
    }

    #[test]
    fn extension_examples() {
        let c = classify_extension(&chars("abc"), &'d');
        assert!(c.contains(&ExtensionCase::Primitive));
        let c = classify_extension(&chars("abc"), &'c');
        assert!(c.contains(&ExtensionCase::LastElement));
        let c = classify_extension(&chars("abcb"), &'a');
        assert!(c.contains(&ExtensionCase::OddPalindromeSuffix));
    }

    #[test]
    fn terminal_words() {
        // abcbc = (abc)^[1,2,3,2,3], a final walk on a shorter word
        assert!(is_terminal(&chars("abcbc")));
        assert!(!is_terminal(&chars("abc")));
        assert!(is_terminal(&chars("aa")));
    }

    #[test]
    fn lambda_examples() {
        let seeds: BTreeSet<Vec<char>> = [chars("011")].into_iter().collect();
        let w = lambda_closure(&seeds, 1, 100).unwrap();
        assert!(w.contains(&chars("010")) && w.contains(&chars("011")));
        let seeds: BTreeSet<Vec<char>> = [chars("0111")].into_iter().collect();
        let w = lambda_closure(&seeds, 2, 100).unwrap();
        for s in ["0100", "0101", "0110", "0111"] {
            assert!(w.contains(&chars(s)), "{s}");
        }
        let empty: BTreeSet<Vec<char>> = BTreeSet::new();
        assert!(lambda_closure(&empty, 2, 10).unwrap().is_empty());
        assert!(lambda_closure(&seeds, 2, 2).is_err());
    }

    #[test]
    fn legs_of_a_course() {
        let f = af(&[1, 2, 3, 3, 2], 3);
        assert_eq!(f.legs(), vec![(1, 3), (3, 4), (4, 5)]);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(all_adjacent(3, 3).len(), 17);
        assert_eq!(all_adjacent(0, 2).len(), 1);
        assert_eq!(final_adjacent(2, 1).len(), 1);
        assert_eq!(surjective_adjacent(2, 2).len(), 2);
    }
}
