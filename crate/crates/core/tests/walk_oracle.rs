mod common;

use proptest::prelude::*;
use stoqwalk_core::graph::{self, ratio_f64};
use stoqwalk_core::walk::{self, Outcome, StepRecord, WalkParams};
use stoqwalk_core::{generators, Bitstring, Hamiltonian};

use common::{absorbed_rejection, dense_h};

fn instance() -> impl Strategy<Value = Hamiltonian> {
    (3usize..=6, 1usize..=2, 2usize..=6, any::<u64>())
        .prop_map(|(n, k, m, seed)| generators::random(n, k, m, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_rejection_matches_absorbing_chain(
        h in instance(),
        start in any::<u64>(),
        steps in 1u64..40,
        lazy in any::<bool>(),
    ) {
        let x = Bitstring::new(h.n(), start % (1 << h.n())).unwrap();
        let laziness = if lazy { 0.5 } else { 0.0 };
        let got = walk::exact_rejection_probability(&h, &x, steps, laziness, 10).unwrap();
        let want = absorbed_rejection(&h, x.index(), steps, laziness);
        prop_assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn traces_follow_the_check_then_move_loop(
        h in instance(),
        start in any::<u64>(),
        seed in any::<u64>(),
        steps in 1u64..60,
    ) {
        let x0 = Bitstring::new(h.n(), start % (1 << h.n())).unwrap();
        let params = WalkParams { steps, laziness: 0.25, trials: 1, seed };
        let tr = walk::verify(&h, &x0, &params, 3).unwrap();
        let mut path = vec![x0];
        path.extend(tr.steps.iter().map(|s| s.string));
        for (j, s) in tr.steps.iter().enumerate() {
            let from = path[j];
            prop_assert!(!graph::is_bad(&h, &from).unwrap());
            match s.record {
                StepRecord::Stay => prop_assert_eq!(s.string, from),
                StepRecord::Term(i) => {
                    prop_assert!(h.covers(i, from.value()));
                    prop_assert!(graph::neighbors(&h, &from).unwrap().multiplicity(&s.string) > 0u32.into());
                }
                StepRecord::Uncovered(i) => prop_assert!(false, "good string uncovered by term {i}"),
            }
            prop_assert_eq!(s.bad, graph::is_bad(&h, &s.string).unwrap());
        }
        let first_bad = path
            .iter()
            .take(steps as usize)
            .position(|x| graph::is_bad(&h, x).unwrap());
        match tr.outcome {
            Outcome::Accept => {
                prop_assert_eq!(first_bad, None);
                prop_assert_eq!(tr.steps.len() as u64, steps);
            }
            Outcome::Reject { step } => {
                prop_assert_eq!(first_bad, Some(step as usize));
                prop_assert_eq!(tr.steps.len(), step as usize);
            }
        }
        let again = walk::verify(&h, &x0, &params, 3).unwrap();
        prop_assert_eq!(again.steps, tr.steps);
    }
}

#[test]
fn transition_rows_match_dense_hamiltonian() {
    for seed in 0..20 {
        let h = generators::random_covering(4, 2, 3, seed).unwrap();
        let moves = nalgebra::DMatrix::<f64>::identity(16, 16) - dense_h(&h);
        for x in Bitstring::all(4) {
            let row = walk::transition_exact(&h, &x).unwrap();
            let total: f64 = row.iter().map(|(_, p)| ratio_f64(p)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for y in Bitstring::all(4) {
                let p = row.iter().find(|(z, _)| *z == y).map_or(0.0, |(_, p)| ratio_f64(p));
                assert!((p - moves[(x.index(), y.index())]).abs() < 1e-12, "seed {seed} {x}->{y}");
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_absorbing_chain() {
    // 24 comparisons at 4.5 standard errors of the null
    let mut worst: f64 = 0.0;
    for j in 0..24u64 {
        let n = 4 + (j % 4) as usize;
        let h = generators::frustrated(n, 2, n + 1, 100 + j, 0.02).unwrap();
        let x = Bitstring::new(n, j * 7 % (1 << n)).unwrap();
        let steps = 1 + j % 12;
        let laziness = if j % 2 == 0 { 0.0 } else { 0.5 };
        let exact = absorbed_rejection(&h, x.index(), steps, laziness);
        let params = WalkParams { steps, laziness, trials: 20_000, seed: 9_000 + j };
        let est = walk::rejection_probability(&h, &x, &params).unwrap();
        let se = (exact * (1.0 - exact) / params.trials as f64).sqrt();
        let z = if se > 0.0 { (est.mean - exact).abs() / se } else { (est.mean - exact).abs() * 1e12 };
        worst = worst.max(z);
    }
    assert!(worst < 4.5, "largest z-score {worst}");
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let h = generators::frustrated(6, 2, 7, 4, 0.02).unwrap();
    let x = Bitstring::new(6, 0b101010).unwrap();
    let params = WalkParams { steps: 30, laziness: 0.5, trials: 2000, seed: 77 };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| walk::rejection_probability(&h, &x, &params).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn lazy_walk_visits_degree_proportional() {
    let h = generators::hypercube(4).unwrap();
    let x = Bitstring::zeros(4).unwrap();
    let freq = walk::visit_frequencies(&h, &x, 1000, 400_000, 0.5, 5).unwrap();
    let uniform = vec![1.0 / 16.0; 16];
    assert!(walk::total_variation(&freq, &uniform) < 0.02);
}
