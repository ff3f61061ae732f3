use ssg_core::control::val_p_t;
use ssg_core::game::Node;
use ssg_core::generate::{generate, GenParams};
use ssg_core::orders::{extends, sample_pair_order, sample_total_order, PretotalOrder, TotalOrder};
use ssg_core::pivot::{solve_iterative, solve_recursive};
use ssg_core::{Game, NodeId, NodeKind, Rational, Scalar, Ssg};

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

/// Shuffles the ids of every non-random node; random nodes keep their ids so
/// control indices are unchanged.
fn renumber(game: &Game, seed: u64) -> Game {
    let movable: Vec<usize> = game.ids().filter(|&x| game.kind(x) != NodeKind::Random).map(|x| x.0).collect();
    let shuffle = sample_total_order(movable.len(), seed);
    let mut new_id: Vec<usize> = (0..game.len()).collect();
    for (slot, &from) in shuffle.ascending().iter().zip(&movable) {
        new_id[from] = movable[slot - 1];
    }
    let map = |x: &NodeId| NodeId(new_id[x.0]);
    let mut nodes = vec![None; game.len()];
    let mut labels = vec![String::new(); game.len()];
    for x in game.ids() {
        let node = match game.node(x) {
            Node::Max(s) => Node::Max(s.iter().map(map).collect()),
            Node::Min(s) => Node::Min(s.iter().map(map).collect()),
            Node::Random(d) => Node::Random(d.iter().map(|(y, q)| (map(y), q.clone())).collect()),
            Node::Sink { value, arcs } => Node::Sink { value: value.clone(), arcs: arcs.iter().map(map).collect() },
        };
        nodes[new_id[x.0]] = Some(node);
        labels[new_id[x.0]] = game.label(x).to_string();
    }
    Ssg::new(nodes.into_iter().map(Option::unwrap).collect(), labels).unwrap()
}

#[test]
fn val_p_t_ignores_node_numbering() {
    for seed in 0..40u64 {
        let k = 1 + (seed % 3) as usize;
        let g = cf_game(seed, k);
        let h = renumber(&g, seed + 1);
        let t = sample_total_order(k, seed);
        let pairs: Vec<_> = t.pairs().iter().filter(|&(i, j)| (seed + (i + 2 * j) as u64) % 2 == 0).collect();
        let p = PretotalOrder::from_pairs(k, pairs).unwrap();
        for t in TotalOrder::all(k).into_iter().filter(|t| extends(t, &p)) {
            let a = val_p_t(&g, &p, &t).unwrap();
            let b = val_p_t(&h, &p, &t).unwrap();
            assert_eq!(a.control, b.control, "seed {seed}, {p}, {t}");
            assert_eq!(a.ran, b.ran, "seed {seed}, {p}, {t}");
        }
    }
}

#[test]
fn iterative_and_recursive_agree_on_every_small_configuration() {
    for seed in 0..12u64 {
        for k in 1..=3 {
            let g = cf_game(seed, k);
            for t0 in TotalOrder::all(k) {
                for theta_seed in 0..10 {
                    let theta = sample_pair_order(k, theta_seed);
                    let it = solve_iterative(&g, &t0, &theta).unwrap();
                    let (t, rec) = solve_recursive(&g, &PretotalOrder::empty(k), &t0, &theta).unwrap();
                    assert_eq!(t, it.order, "seed {seed}, t0 {t0}, theta {theta}");
                    assert_eq!(rec.pivots(), it.trace.pivots(), "seed {seed}, t0 {t0}, theta {theta}");
                }
            }
        }
    }
}
