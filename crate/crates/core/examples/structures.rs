//! Building structures, model checking and the JSON format.

use std::collections::BTreeMap;

use adjacent::formulas::parse;
use adjacent::structures::{evaluate, models, product, satisfies, Structure};

fn main() {
    let mut s = Structure::new(3);
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        s.insert("E", &[a, b]);
    }
    s.insert("P", &[0]);

    let phi = parse("(forall x1 (exists x2 (and (E x1 x2) (not (E x2 x1)))))").unwrap();
    println!("3-cycle ⊨ {phi}: {}", models(&s, &phi));

    let reach = parse("(exists x2 (and (E x1 x2) (exists x3 (and (E x2 x3) (P x3)))))").unwrap();
    for e in 0..3 {
        println!("  P two steps from {e}: {}", satisfies(&s, &reach, &[e]));
    }
    let assignment: BTreeMap<usize, u32> = [(1, 1)].into_iter().collect();
    println!("with x1 = 1: {}", evaluate(&s, &reach, &assignment).unwrap());

    println!("{}", serde_json::to_string(&s.to_json()).unwrap());

    let big = product(&s, 2).unwrap();
    println!("product with height 2 has {} elements; still a model: {}", big.domain_size, models(&big, &phi));
}
