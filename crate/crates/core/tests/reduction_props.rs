mod common;

use std::collections::BTreeSet;

use adjacent::reduction::{colour_digraph, compact_witness_index_set, witness_index_set};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn colouring_is_proper_and_small(seed in any::<u64>(), n in 1usize..60, d in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_digraph(&mut rng, n, d);
        let c = colour_digraph(n, &edges);
        for &(u, v) in &edges {
            prop_assert_ne!(c[u], c[v]);
        }
        let used: BTreeSet<_> = c.iter().collect();
        prop_assert!(used.len() <= 2 * d + 1);
    }

    #[test]
    fn witness_sets_k3(t in prop::collection::vec(0usize..13usize.pow(4), 3)) {
        let h = witness_index_set(3);
        prop_assert!(h.check(&t));
        prop_assert!(!t.contains(&h.g(&t)));
    }

    #[test]
    fn compact_witness_sets(k in 1usize..4, seed in any::<u64>()) {
        use rand::Rng;
        let h = compact_witness_index_set(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<usize> = (0..k).map(|_| rng.gen_range(0..h.size())).collect();
        prop_assert!(h.check(&t));
    }

    #[test]
    fn encode_decode(k in 1usize..4, h in 0usize..343) {
        let w = witness_index_set(k);
        let h = h % w.size();
        prop_assert_eq!(w.encode(&w.decode(h)), h);
    }
}
