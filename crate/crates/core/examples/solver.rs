//! Bounded model search, directly and through the reduction pipeline.

use adjacent::formulas::parse;
use adjacent::solver::{decide_sat_desk, satisfiable_sizes};

fn main() {
    let phi = parse("(and (forall x1 (forall x2 (exists x3 (-> (E x1 x2) (E x2 x3))))) (forall x1 (forall x2 (forall x3 true))))").unwrap();
    for pipeline in [false, true] {
        let report = decide_sat_desk(&phi, 3, pipeline).unwrap();
        println!("pipeline={pipeline}: {:?} in {} ms", report.verdict, report.wall_time_ms);
        for level in &report.reduction_chain {
            println!("  {} variables, size {}", level.variables, level.size);
        }
    }

    let odd = parse(
        "(and (forall x1 (exists x2 (and (E x1 x2) (not (= x1 x2))))) \
              (forall x1 (forall x2 (-> (E x1 x2) (E x2 x1)))) \
              (forall x1 (exists x2 (and (M x1 x2) (not (= x1 x2))))) \
              (forall x1 (forall x2 (-> (M x1 x2) (M x2 x1)))) \
              (forall x1 (forall x2 (-> (M x1 x2) (forall x3 (-> (M x2 x3) (= x3 x1)))))))",
    )
    .unwrap();
    println!("sizes with a perfect matching: {:?}", satisfiable_sizes(&odd, 4).unwrap());
}
