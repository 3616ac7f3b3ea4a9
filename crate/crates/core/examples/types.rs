//! Adjacent atomic types of tuples and their enumeration.

use adjacent::formulas::parse;
use adjacent::structures::Structure;
use adjacent::types::{atp, enumerate_types, increment, is_palindromic, AtomUniverse};

fn main() {
    let phi = parse("(forall x1 (forall x2 (-> (E x1 x2) (not (E x2 x1)))))").unwrap();
    for k in 1..=3 {
        let u = AtomUniverse::from_formula(&phi, k);
        let types = enumerate_types(&u, 1 << 16).unwrap();
        let pal = types.iter().filter(|t| is_palindromic(t, &u)).count();
        println!("k={k}: {} atoms, {} types ({pal} palindromic)", u.len(), types.len());
    }

    let mut s = Structure::new(2);
    s.insert("E", &[0, 1]);
    for t in [[0, 1, 0].as_slice(), &[0, 1]] {
        let u = AtomUniverse::from_formula(&phi, t.len());
        let xi = atp(&s, t, &u).unwrap();
        println!("atp{t:?} = {}", xi.dump(&u).join(" "));
        println!("  covering literals: {:?}", increment(&xi, &u).pol);
    }
}
