//! Parsing, fragment membership, normal forms and the adjacent closure.

use adjacent::formulas::{adjacent_closure, check_fragments, parse, print_pretty, to_normal_form};

fn main() {
    let phi = parse(
        "(forall x1 (forall x2 (-> (E x1 x2) (exists x3 (and (E x2 x3) (not (E x3 x2)))))))",
    )
    .unwrap();
    println!("{}", print_pretty(&phi));
    println!("{:#?}", check_fragments(&phi));

    let (nf, sig) = to_normal_form(&phi).unwrap();
    println!("normal form over {} variables, signature {sig:?}", nf.l + 1);
    println!("{}", print_pretty(&nf.to_formula()));

    let acl = adjacent_closure(&nf).unwrap();
    println!(
        "closure: {} existential conjuncts over {} variables, size {}",
        acl.gammas.len(),
        acl.l + 1,
        acl.to_formula().size()
    );

    let skip = parse("(forall x1 (forall x2 (forall x3 (R x1 x3))))").unwrap();
    println!("R(x1,x3) in AF: {}", check_fragments(&skip).in_af);
}
