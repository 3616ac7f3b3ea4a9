use adjacent::words::{
    apply_walk, d_equal, defects, generates, is_primitive, primitive_generator, reversed,
    surjective_adjacent,
};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = Vec<char>> {
    prop::collection::vec(prop::sample::select(vec!['a', 'b', 'c', 'd']), 1..10)
}

proptest! {
    #[test]
    fn generator_walk_reproduces_word(c in word()) {
        let (g, f) = primitive_generator(&c);
        prop_assert_eq!(apply_walk(&g, &f).unwrap(), c.clone());
        prop_assert!(f.is_surjective());
        prop_assert!(g.len() <= c.len());
    }

    #[test]
    fn generator_is_primitive_and_canonical(c in word()) {
        let (g, _) = primitive_generator(&c);
        prop_assert!(is_primitive(&g));
        prop_assert!(g <= reversed(&g));
        let (gg, _) = primitive_generator(&g);
        prop_assert_eq!(gg, g);
    }

    #[test]
    fn reversal_has_the_same_generator(c in word()) {
        prop_assert_eq!(primitive_generator(&c).0, primitive_generator(&reversed(&c)).0);
    }

    #[test]
    fn generates_agrees_with_walks(c in word(), e in word()) {
        if let Some(f) = generates(&c, &e) {
            prop_assert_eq!(apply_walk(&c, &f).unwrap(), e);
        }
    }

    #[test]
    fn d_equality_is_an_equivalence(c in prop::collection::vec(prop::sample::select(vec!['a', 'b', 'c']), 1..4), m in 1usize..5) {
        let (a, _) = primitive_generator(&c);
        let d = defects(&a);
        let fs = surjective_adjacent(m, a.len());
        for f in &fs {
            prop_assert!(d_equal(f, f, &d).unwrap());
            for g in &fs {
                prop_assert_eq!(d_equal(f, g, &d).unwrap(), d_equal(g, f, &d).unwrap());
            }
        }
    }
}
