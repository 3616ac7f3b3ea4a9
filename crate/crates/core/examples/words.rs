//! Primitive generators, defect sets and the λ-closure.

use std::collections::BTreeSet;

use adjacent::words::{
    apply_walk, chars, defects, generates, lambda_closure, primitive_generator, word_string,
    AdjacentFunction,
};

fn main() {
    for w in ["abcbcd", "abcbaaadefedadefbabf", "aaaa", "abab"] {
        let (g, f) = primitive_generator(&chars(w));
        println!("{w:>22} is generated by {} via {:?}", word_string(&g), f.values);
    }

    let f = AdjacentFunction::new(vec![3, 2, 1, 2, 3, 3, 3, 4, 5, 6, 5, 4, 3, 4, 5, 6, 7, 8, 7, 6], 8).unwrap();
    let long = apply_walk(&chars("cbadefba"), &f).unwrap();
    println!("cbadefba walked: {}", word_string(&long));

    let walk = generates(&chars("abcd"), &chars("babcd")).unwrap();
    println!("abcd generates babcd via {:?}", walk.values);

    let d = defects(&chars("abcba"));
    println!("defects of abcba: {:?}, classes {:?}", d.pairs, d.classes());

    let seeds: BTreeSet<Vec<char>> = [chars("0111")].into_iter().collect();
    let closure = lambda_closure(&seeds, 2, 1 << 10).unwrap();
    let shown: Vec<String> = closure.iter().map(|w| word_string(w)).collect();
    println!("λ-closure of 0111: {}", shown.join(" "));
}
