mod common;

use adjacent::bisim::{
    check_bisimulation, check_heart, core, greatest_bisimulation, random_forest, sigma_alive,
};
use adjacent::structures::satisfies;
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn greatest_bisimulation_is_a_bisimulation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sig(&[("P", 1), ("R", 2)]);
        let (na, nb) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let a = random_structure(&mut rng, na, &s, 0.5);
        let b = random_structure(&mut rng, nb, &s, 0.5);
        let (x, y) = (rng.gen_range(0..na as u32), rng.gen_range(0..nb as u32));
        if let Some(z) = greatest_bisimulation(&a, &[x], &b, &[y], &s, 2).unwrap() {
            prop_assert!(check_bisimulation(&z, &a, &b, &s).is_ok());
            for f in corpus("ga_battery.fol") {
                prop_assert_eq!(satisfies(&a, &f, &[x]), satisfies(&b, &f, &[y]), "{}", f);
            }
        }
    }

    #[test]
    fn structures_are_self_bisimilar(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sig(&[("P", 1), ("R", 2)]);
        let a = random_structure(&mut rng, 3, &s, 0.5);
        for x in 0..3u32 {
            if sigma_alive(&a, &[x], &s) {
                prop_assert!(greatest_bisimulation(&a, &[x], &a, &[x], &s, 2).unwrap().is_some());
            }
        }
    }

    #[test]
    fn forest_cores_lie_on_paths(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sig(&[("R", 3), ("E", 2)]);
        let f = random_forest(&mut rng, 2, 5, &s, 4);
        f.validate(&s).unwrap();
        for rel in f.structure.relations.values() {
            for t in &rel.tuples {
                let c = core(&f, t, &s).unwrap();
                for w in c.windows(2) {
                    let (p, q) = (f.address(w[0]).unwrap(), f.address(w[1]).unwrap());
                    prop_assert!(q.len() == p.len() + 1 && q.starts_with(p));
                }
            }
        }
        let _ = check_heart(&f, &s).unwrap();
    }
}
