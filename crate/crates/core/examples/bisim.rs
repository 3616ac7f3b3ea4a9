//! Bounded bisimulations and adjacent forest structures.

use adjacent::bisim::{check_bisimulation, core, greatest_bisimulation, random_forest, check_heart};
use adjacent::formulas::{parse, Signature};
use adjacent::structures::{satisfies, Structure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let sigma: Signature = [("P".to_string(), 1), ("R".to_string(), 2)].into_iter().collect();
    let mut a = Structure::new(2);
    a.insert("P", &[0]);
    a.insert("R", &[0, 0]);
    let mut b = Structure::new(2);
    for e in 0..2 {
        b.insert("P", &[e]);
        b.insert("R", &[e, e]);
    }
    let z = greatest_bisimulation(&a, &[0], &b, &[0], &sigma, 2).unwrap().unwrap();
    println!("bisimulation with {} pairs, valid: {}", z.pairs.len(), check_bisimulation(&z, &a, &b, &sigma).is_ok());
    let f = parse("(forall x2 (-> (R x1 x2) (P x2)))").unwrap();
    println!("both satisfy {f}: {} {}", satisfies(&a, &f, &[0]), satisfies(&b, &f, &[0]));

    let mut c = Structure::new(2);
    c.insert("P", &[0]);
    c.insert("R", &[0, 1]);
    println!("loop vs edge: {:?}", greatest_bisimulation(&a, &[0], &c, &[0], &sigma, 2).unwrap().map(|z| z.pairs.len()));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let forest_sig: Signature = [("R".to_string(), 3)].into_iter().collect();
    let forest = random_forest(&mut rng, 2, 6, &forest_sig, 5);
    println!("forest addresses: {:?}", forest.addresses);
    for t in &forest.structure.relations["R"].tuples {
        println!("  R{:?} has core {:?}", t.as_slice(), core(&forest, t, &forest_sig).unwrap());
    }
    println!("(♥) holds: {}", check_heart(&forest, &forest_sig).unwrap());
}
