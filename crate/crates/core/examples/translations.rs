//! FO² to AF and back, and the transitivity gadget.

use adjacent::formulas::{check_fragments, parse};
use adjacent::structures::{models, Structure};
use adjacent::translations::{af2_to_fo2, expand_for_gadget, fo2_to_af, is_transitive, transitivity_formula};

fn main() {
    let fo2 = parse("(forall x1 (exists x2 (and (E x2 x1) (forall x1 (-> (E x2 x1) (P x1))))))").unwrap();
    let af = fo2_to_af(&fo2).unwrap();
    println!("FO²: {fo2}\nAF:  {af}  (in AF: {})", check_fragments(&af).in_af);

    let af3 = parse("(forall x1 (exists x2 (and (E x1 x2) (exists x3 (and (E x2 x3) (E x3 x2))))))").unwrap();
    let back = af2_to_fo2(&af3).unwrap();
    println!("AF:  {af3}\nFO²: {back}  (in FO²: {})", check_fragments(&back).in_fo2);

    let g = transitivity_formula(&[1, 3], "T", "Q").unwrap();
    println!("gadget for 1,3: {}", g.formula);
    let mut s = Structure::new(3);
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        s.insert("T", &[a, b]);
    }
    let e = expand_for_gadget(&s, &g, "T", "Q");
    println!("transitive T: {}, expansion satisfies the gadget: {}", is_transitive(&s, "T"), models(&e, &g.formula));
}
