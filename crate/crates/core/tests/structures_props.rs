mod common;

use adjacent::formulas::{check_fragments, Formula};
use adjacent::structures::{models, satisfies};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The same formula with every atom wrapped so that no quantifier is
/// recognised as guarded.
fn unguard(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        Atom(..) | Eq(..) => Or(vec![f.clone(), False]),
        True | False => f.clone(),
        Not(a) => Not(Box::new(unguard(a))),
        And(v) => And(v.iter().map(unguard).collect()),
        Or(v) => Or(v.iter().map(unguard).collect()),
        Implies(a, b) => Implies(Box::new(unguard(a)), Box::new(unguard(b))),
        Iff(a, b) => Iff(Box::new(unguard(a)), Box::new(unguard(b))),
        Forall(v, b) => Forall(*v, Box::new(unguard(b))),
        Exists(v, b) => Exists(*v, Box::new(unguard(b))),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn guarded_evaluation_matches_naive(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_structure(&mut rng, n, &sig(&[("P", 1), ("R", 2)]), 0.4);
        for f in corpus("ga_battery.fol") {
            prop_assert!(check_fragments(&f).in_ga);
            let plain = unguard(&f);
            for e in 0..n as u32 {
                prop_assert_eq!(satisfies(&s, &f, &[e]), satisfies(&s, &plain, &[e]), "{}", f);
            }
        }
    }

    #[test]
    fn random_sentences_match_naive(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sg = sig(&[("P", 1), ("E", 2), ("R", 3)]);
        let phi = random_af_sentence(&mut rng, &sg, 3, 5, true);
        let s = random_structure(&mut rng, n, &sg, 0.5);
        prop_assert_eq!(models(&s, &phi), models(&s, &unguard(&phi)));
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_structure(&mut rng, n, &sig(&[("P", 1), ("R", 2)]), 0.5);
        let text = serde_json::to_string(&s.to_json()).unwrap();
        let back: adjacent::structures::StructureFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_structure().unwrap(), s);
    }
}
