mod common;

use std::collections::BTreeSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use stoqwalk_core::graph::{self, ConfigGraph, SelfLoops};
use stoqwalk_core::{generators, Bitstring, Hamiltonian};

use common::{bad_oracle, edge_oracle, projectors};

fn small_instance() -> impl Strategy<Value = Hamiltonian> {
    (2usize..=5, 1usize..=3, 1usize..=5, any::<u64>(), any::<bool>())
        .prop_filter("k <= n", |(n, k, ..)| k <= n)
        .prop_map(|(n, k, m, seed, covering)| {
            if covering {
                generators::random_covering(n, k, m, seed).unwrap()
            } else {
                generators::random(n, k, m, seed).unwrap()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn neighbours_match_projector_entries(h in small_instance()) {
        let ps = projectors(&h);
        let g = ConfigGraph::new(&h);
        for x in Bitstring::all(h.n()) {
            let nb = g.neighbors(&x).unwrap();
            let mut degree = 0u64;
            for y in Bitstring::all(h.n()) {
                let want = edge_oracle(&ps, h.k(), x.index(), y.index());
                prop_assert_eq!(nb.multiplicity(&y), BigUint::from(want), "x={} y={}", x, y);
                degree += want;
            }
            prop_assert_eq!(&nb.degree, &BigUint::from(degree));
            prop_assert!(nb.degree <= graph::degree_bound(&h));
            prop_assert_eq!(g.is_bad(&x).unwrap(), bad_oracle(&ps, x.index()));
        }
    }

    #[test]
    fn edges_are_symmetric(h in small_instance()) {
        let g = ConfigGraph::new(&h);
        for x in Bitstring::all(h.n()) {
            for e in g.neighbors(&x).unwrap().entries {
                let back = g.neighbors(&e.y).unwrap().multiplicity(&x);
                prop_assert_eq!(back, e.multiplicity);
            }
        }
    }

    #[test]
    fn cut_stats_match_brute_force(h in small_instance(), mask in any::<u64>()) {
        let ps = projectors(&h);
        let dim = 1usize << h.n();
        let set: BTreeSet<Bitstring> = Bitstring::all(h.n())
            .filter(|x| mask >> (x.index() % 64) & 1 == 1)
            .collect();
        prop_assume!(!set.is_empty());
        let degrees: Vec<u64> = set
            .iter()
            .map(|x| (0..dim).map(|y| edge_oracle(&ps, h.k(), x.index(), y)).sum::<u64>())
            .collect();
        let volume: u64 = degrees.iter().sum();
        let boundary: u64 = set
            .iter()
            .flat_map(|x| (0..dim).map(move |y| (x.index(), y)))
            .filter(|&(_, y)| !set.iter().any(|s| s.index() == y))
            .map(|(x, y)| edge_oracle(&ps, h.k(), x, y))
            .sum();
        match graph::cut_stats(&h, &set, SelfLoops::Include) {
            Ok(c) => {
                prop_assert!(!degrees.contains(&0));
                prop_assert_eq!(c.boundary, BigUint::from(boundary));
                prop_assert_eq!(c.volume, BigUint::from(volume));
            }
            Err(_) => prop_assert!(degrees.contains(&0)),
        }
    }

    #[test]
    fn component_is_closed(h in small_instance(), start in any::<u64>()) {
        let x = Bitstring::new(h.n(), start % (1 << h.n())).unwrap();
        let c = graph::connected_component(&h, &x, usize::MAX).unwrap();
        prop_assert!(c.complete);
        prop_assert!(c.members.contains(&x));
        for u in &c.members {
            for e in graph::neighbors(&h, u).unwrap().entries {
                prop_assert!(c.members.contains(&e.y));
            }
            prop_assert_eq!(c.bad.contains(u), graph::is_bad(&h, u).unwrap());
        }
    }
}

#[test]
fn bundled_instances_against_projectors() {
    for (name, h) in stoqwalk_core::bundled::instances().unwrap() {
        if h.n() > 8 {
            continue;
        }
        let ps = projectors(&h);
        for x in Bitstring::all(h.n()) {
            assert_eq!(graph::is_bad(&h, &x).unwrap(), bad_oracle(&ps, x.index()), "{name} {x}");
        }
    }
}
