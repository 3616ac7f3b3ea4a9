//! One variable-elimination step with model transfer in both directions.

use adjacent::formulas::{parse, NormalForm};
use adjacent::reduction::{
    build_psi, colour_digraph, elevate_model, expand_model, witness_index_set, Caps, Variant,
};
use adjacent::solver::bounded_model_search;
use adjacent::structures::models;

fn main() {
    let phi = parse(
        "(and (forall x1 (forall x2 (exists x3 (and (E x2 x3) (not (E x3 x2)))))) \
              (forall x1 (forall x2 (forall x3 (-> (E x1 x2) (not (= x1 x2)))))))",
    )
    .unwrap();
    let nf = NormalForm::recognize(&phi, 2).unwrap();
    let out = build_psi(&nf, Variant::WithEquality, Caps::default()).unwrap();
    let psi = out.formula();
    println!(
        "ψ: {} variables, size {}, {} stars, {} colours",
        psi.max_var(),
        psi.size(),
        out.reduction.stars.len(),
        out.reduction.colours
    );

    let a = bounded_model_search(&phi, 4).unwrap().expect("satisfiable");
    let expanded = expand_model(&out.reduction, &a).unwrap();
    println!("model of φ on {} elements; expansion ⊨ ψ: {}", a.domain_size, models(&expanded, &psi));
    let back = elevate_model(&out.reduction, &expanded).unwrap();
    println!("elevated back ⊨ φ: {}", models(&back, &phi));

    let h = witness_index_set(2);
    println!("witness index set for k=2 has {} elements; g(0,1) = {}", h.size(), h.g(&[0, 1]));
    let colours = colour_digraph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
    println!("5-cycle colouring: {colours:?}");
}
