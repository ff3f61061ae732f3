use std::collections::BTreeSet;

use proptest::prelude::*;

use ssg_core::control::{val_p_t, values_of_order};
use ssg_core::generate::{generate, GenParams};
use ssg_core::ludwig::{opt_partial, opt_partial_recursive, sample_node_order, solve_bland, solve_hoffman_karp};
use ssg_core::oracle::{solve_bruteforce, solve_bruteforce_dual, val_star_pretotal};
use ssg_core::orders::{extends, sample_pair_order, sample_total_order, PretotalOrder, TotalOrder};
use ssg_core::pivot::{solve_iterative, solve_recursive};
use ssg_core::transforms::{to_canonical_form, to_max_binary};
use ssg_core::valuation::{absorbing_system, best_response_min, evaluate_pair, power_iteration};
use ssg_core::{Game, NodeKind, Rational, Scalar, Strategy};

fn cf_game(seed: u64, k: usize) -> Game {
    let params = GenParams {
        seed,
        n_max: 1 + (seed % 3) as usize,
        n_min: 1 + (seed / 3 % 3) as usize,
        k,
        min_sink_mass: Rational::from_ratio(1, 10),
        ..GenParams::default()
    };
    generate(&params).unwrap()
}

fn ludwig_game(seed: u64, n: usize) -> Game {
    let params = GenParams { seed, n_max: n, n_min: 2, k: 2, max_binary: true, globally_stopping: true, ..GenParams::default() };
    generate(&params).unwrap()
}

/// An acyclic pretotal order: a random subset of the pairs of a random total order.
fn sample_pretotal(k: usize, seed: u64) -> PretotalOrder {
    let t = sample_total_order(k, seed);
    let pairs: Vec<(usize, usize)> = t.pairs().iter().enumerate().filter(|(n, _)| (seed >> (n % 64)) & 1 == 1).map(|(_, p)| p).collect();
    PretotalOrder::from_pairs(k, pairs).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn pivot_steps_strictly_improve(seed in 0u64..100_000, k in 1usize..=4) {
        let g = cf_game(seed, k);
        let out = solve_iterative(&g, &sample_total_order(k, seed), &sample_pair_order(k, seed ^ 1)).unwrap();
        let steps = &out.trace.steps;
        for w in steps.windows(2) {
            prop_assert!(w[0].values.dominated_by(&w[1].values));
            prop_assert!(w[0].values.strictly_improved_by(&w[1].values));
        }
        let orders: BTreeSet<String> = steps.iter().map(|s| s.order.to_string()).collect();
        prop_assert_eq!(orders.len(), steps.len());
    }

    #[test]
    fn control_values_follow_every_order(seed in 0u64..100_000, k in 1usize..=4) {
        let g = cf_game(seed, k);
        for t in TotalOrder::all(k) {
            let v = values_of_order(&g, &t).unwrap();
            let along: Vec<&Rational> = t.ascending().iter().map(|&i| &v.control[i - 1]).collect();
            prop_assert!(along.windows(2).all(|w| w[0] <= w[1]), "{}", t);
        }
    }

    #[test]
    fn pivot_agrees_with_oracle(seed in 0u64..100_000, k in 1usize..=4) {
        let g = cf_game(seed, k);
        let out = solve_iterative(&g, &sample_total_order(k, seed), &sample_pair_order(k, seed)).unwrap();
        prop_assert_eq!(out.values, solve_bruteforce(&g).unwrap().values);
    }

    #[test]
    fn iterative_and_recursive_pivot_alike(seed in 0u64..100_000, k in 1usize..=4) {
        let g = cf_game(seed, k);
        let t0 = sample_total_order(k, seed);
        let theta = sample_pair_order(k, seed.wrapping_add(17));
        let it = solve_iterative(&g, &t0, &theta).unwrap();
        let (t, rec) = solve_recursive(&g, &PretotalOrder::empty(k), &t0, &theta).unwrap();
        prop_assert_eq!(t, it.order);
        prop_assert_eq!(rec.pivots(), it.trace.pivots());
        prop_assert_eq!(rec.orders(), it.trace.orders());
    }

    #[test]
    fn pretotal_values_are_monotone_along_p(seed in 0u64..100_000, k in 1usize..=3) {
        let g = cf_game(seed, k);
        let p = sample_pretotal(k, seed);
        let v = val_star_pretotal(&g, &p).unwrap();
        let control = &v.as_slice()[g.len()..];
        for (i, j) in p.iter() {
            prop_assert!(control[i - 1] <= control[j - 1], "({}, {}) in {}", i, j, p);
        }
    }

    #[test]
    fn optimal_orders_of_a_pretotal_order(seed in 0u64..100_000, k in 1usize..=3) {
        let g = cf_game(seed, k);
        let p = sample_pretotal(k, seed);
        let star = val_star_pretotal(&g, &p).unwrap();
        let star_control = &star.as_slice()[g.len()..];
        let mut found = false;
        for t in TotalOrder::all(k).into_iter().filter(|t| extends(t, &p)) {
            let sorted = t.ascending().windows(2).all(|w| star_control[w[0] - 1] <= star_control[w[1] - 1]);
            let matches = values_of_order(&g, &t).unwrap().values == star;
            prop_assert_eq!(sorted, matches, "{}", t);
            if matches {
                let v = val_p_t(&g, &p, &t).unwrap();
                prop_assert_eq!(&v.values, &star);
            }
            found |= matches;
        }
        prop_assert!(found);
    }

    #[test]
    fn max_min_equals_min_max(seed in 0u64..100_000, k in 1usize..=2) {
        let g = cf_game(seed, k);
        prop_assert_eq!(solve_bruteforce(&g).unwrap().values, solve_bruteforce_dual(&g).unwrap());
    }

    #[test]
    fn bland_matches_oracle_and_improves(seed in 0u64..100_000, n in 1usize..=6) {
        let g = ludwig_game(seed, n);
        let sigma0 = Strategy::first_choice(&g, NodeKind::Max);
        let order = sample_node_order(&g.max_nodes(), seed);
        let (sigma, trace) = solve_bland(&g, &sigma0, &order).unwrap();
        prop_assert_eq!(&trace.final_values, &solve_bruteforce(&g).unwrap().values);
        prop_assert_eq!(best_response_min(&g, &sigma).unwrap().1, trace.final_values.clone());
        let chain: Vec<_> = trace.value_chain().collect();
        for w in chain.windows(2) {
            prop_assert!(w[0].strictly_improved_by(w[1]));
        }
        let (_, hk) = solve_hoffman_karp(&g, &sigma0).unwrap();
        prop_assert_eq!(hk.final_values, trace.final_values);
    }

    #[test]
    fn partial_and_recursive_switch_alike(seed in 0u64..100_000, n in 1usize..=6) {
        let g = ludwig_game(seed, n);
        let sigma0 = Strategy::first_choice(&g, NodeKind::Max);
        let order = sample_node_order(&g.max_nodes(), seed ^ 5);
        let frozen: BTreeSet<_> = g.max_nodes().into_iter().filter(|x| (seed >> (x.0 % 64)) & 3 == 0).collect();
        let (a, ta) = opt_partial(&g, &sigma0, &frozen, &order).unwrap();
        let (b, tb) = opt_partial_recursive(&g, &sigma0, &frozen, &order).unwrap();
        prop_assert_eq!(ta.switched_sequence(), tb.switched_sequence());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn canonical_transform_keeps_values(seed in 0u64..100_000) {
        let params = GenParams { seed, n_max: 2, n_min: 2, k: 2, canonical: false, ..GenParams::default() };
        let g = generate(&params).unwrap();
        let t = to_canonical_form(&g, &Rational::from_ratio(0, 1)).unwrap();
        let before = solve_bruteforce(&g).unwrap().values;
        let after = solve_bruteforce(&t.game).unwrap().values;
        for x in g.ids() {
            match t.new_id(x) {
                Some(y) => prop_assert_eq!(&before[x], &after[y]),
                None => prop_assert_eq!(&before[x], &Rational::from_ratio(0, 1)),
            }
        }
    }

    #[test]
    fn binarization_keeps_values(seed in 0u64..100_000) {
        let params = GenParams { seed, n_max: 3, n_min: 2, k: 1, max_outdegree: 4, ..GenParams::default() };
        let g = generate(&params).unwrap();
        let b = to_max_binary(&g);
        let before = solve_bruteforce(&g).unwrap();
        let after = solve_bruteforce(b.game()).unwrap();
        for x in g.ids() {
            prop_assert_eq!(&before.values[x], &after.values[b.transformed.new_id(x).unwrap()]);
        }
        let projected = b.project_strategy(&g, &after.witness_sigma).unwrap();
        let (_, v) = best_response_min(&g, &projected).unwrap();
        prop_assert_eq!(v, before.values);
    }

    #[test]
    fn exact_values_pass_approximate_check(seed in 0u64..100_000) {
        let g = cf_game(seed, 3);
        let gf = g.map_scalar(|x| x.to_f64());
        let sigmas = Strategy::enumerate(&g, NodeKind::Max);
        let taus = Strategy::enumerate(&g, NodeKind::Min);
        let sigma = &sigmas[seed as usize % sigmas.len()];
        let tau = &taus[(seed / 7) as usize % taus.len()];
        let (system, _) = absorbing_system(&g, sigma, tau).unwrap();
        let x = system.solve().unwrap();
        prop_assert!(system.residual(&x).iter().all(|r| *r == Rational::from_ratio(0, 1)));
        let exact = evaluate_pair(&g, sigma, tau).unwrap();
        let approx = power_iteration(&gf, sigma, tau, 10_000).unwrap();
        for v in g.ids() {
            prop_assert!((exact[v].to_f64() - approx[v]).abs() <= 1e-6);
        }
    }

    #[test]
    fn generated_games_respect_bounds(seed in 0u64..100_000, bound in 1u64..=20, deg in 1usize..=4) {
        let params = GenParams { seed, prob_denominator_bound: bound, max_outdegree: deg, ..GenParams::default() };
        let g = generate(&params).unwrap();
        for x in g.ids() {
            match g.node(x) {
                ssg_core::game::Node::Random(d) => {
                    prop_assert!(d.iter().all(|(_, p)| *p.denom() <= bound.into()));
                }
                ssg_core::game::Node::Sink { value, .. } => {
                    prop_assert!(*value >= params.sink_value_min && *value <= params.sink_value_max);
                }
                _ => prop_assert!(g.out_degree(x) <= deg),
            }
        }
    }
}
