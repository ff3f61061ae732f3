//! Rewrites that put a game into canonical form or make every MAX node
//! binary, keeping track of where the original nodes went.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Result, SsgError};
use crate::game::{max_attractor, Node, NodeId, NodeKind, Ssg, Strategy};
use crate::scalar::Scalar;

/// A rewritten game and the new id of every original node (`None` when the
/// node was removed).
#[derive(Clone, Debug)]
pub struct Transformed<S> {
    pub game: Ssg<S>,
    pub mapping: Vec<Option<NodeId>>,
}

impl<S: Scalar> Transformed<S> {
    pub fn new_id(&self, old: NodeId) -> Option<NodeId> {
        self.mapping[old.0]
    }
}

struct Labels(HashSet<String>);

impl Labels {
    fn fresh(&mut self, base: &str) -> String {
        let mut label = base.to_string();
        while self.0.contains(&label) {
            label.push('\'');
        }
        self.0.insert(label.clone());
        label
    }
}

/// Three steps:
/// 1. MAX/MIN nodes from which MIN can keep the play away from every random
///    node and sink are dropped; arcs into them go to a new random node that
///    moves to a new 0-valued sink.
/// 2. If `epsilon > 0`, each original random node keeps `1 - epsilon` of its
///    distribution and sends `epsilon` to a 0-valued sink.
/// 3. Every MAX/MIN arc into a sink goes through a new random node instead
///    (one per sink).
pub fn to_canonical_form<S: Scalar>(game: &Ssg<S>, epsilon: &S) -> Result<Transformed<S>> {
    if epsilon.is_negative() || !epsilon.strictly_less(&S::one()) {
        return Err(SsgError::InvalidParams(format!("epsilon {epsilon} outside [0, 1)")));
    }
    let target: Vec<bool> = game.ids().map(|x| !game.is_player(x)).collect();
    let (attr, _) = max_attractor(game, &target);
    let dropped: Vec<bool> = game.ids().map(|x| !attr[x.0]).collect();

    let mut labels = Labels(game.labels().iter().cloned().collect());
    let mut mapping = vec![None; game.len()];
    let mut next = 0;
    for x in game.ids() {
        if !dropped[x.0] {
            mapping[x.0] = Some(NodeId(next));
            next += 1;
        }
    }
    let mut nodes: Vec<Node<S>> = Vec::new();
    let mut out_labels: Vec<String> = Vec::new();
    let mut extra: Vec<(String, Node<S>)> = Vec::new();
    let fresh_id = |extra: &Vec<(String, Node<S>)>| NodeId(next + extra.len());

    let need_zero = dropped.iter().any(|&d| d) || !epsilon.is_zero() && !game.random_nodes().is_empty();
    let zero = if need_zero {
        let id = fresh_id(&extra);
        extra.push((labels.fresh("zero"), Node::Sink { value: S::zero(), arcs: vec![id] }));
        Some(id)
    } else {
        None
    };
    let trap = if dropped.iter().any(|&d| d) {
        let id = fresh_id(&extra);
        extra.push((labels.fresh("trap"), Node::Random(vec![(zero.expect("zero sink"), S::one())])));
        Some(id)
    } else {
        None
    };
    let target_of = |y: NodeId| mapping[y.0].unwrap_or_else(|| trap.expect("trap node"));

    // one entry node per sink with a MAX/MIN predecessor
    let mut sink_entry: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for x in game.ids().filter(|&x| game.is_player(x) && !dropped[x.0]) {
        for y in game.successors(x) {
            if game.kind(y) == NodeKind::Sink && !sink_entry.contains_key(&y) {
                let id = fresh_id(&extra);
                let label = labels.fresh(&format!("to_{}", game.label(y)));
                extra.push((label, Node::Random(vec![(target_of(y), S::one())])));
                sink_entry.insert(y, id);
            }
        }
    }
    let player_target = |y: NodeId| sink_entry.get(&y).copied().unwrap_or_else(|| target_of(y));

    for x in game.ids().filter(|x| !dropped[x.0]) {
        let node = match game.node(x) {
            Node::Max(s) => Node::Max(s.iter().map(|&y| player_target(y)).collect()),
            Node::Min(s) => Node::Min(s.iter().map(|&y| player_target(y)).collect()),
            Node::Random(d) => {
                let mut dist: Vec<(NodeId, S)> = d.iter().map(|(y, p)| (target_of(*y), p.clone())).collect();
                if !epsilon.is_zero() {
                    let keep = S::one() - epsilon.clone();
                    for (_, p) in dist.iter_mut() {
                        *p = p.clone() * keep.clone();
                    }
                    dist.push((zero.expect("zero sink"), epsilon.clone()));
                }
                Node::Random(dist)
            }
            Node::Sink { value, .. } => Node::Sink { value: value.clone(), arcs: vec![mapping[x.0].expect("kept")] },
        };
        nodes.push(node);
        out_labels.push(game.label(x).to_string());
    }
    for (label, node) in extra {
        nodes.push(node);
        out_labels.push(label);
    }
    Ok(Transformed { game: Ssg::new(nodes, out_labels)?, mapping })
}

/// Binary MAX game plus the means to move strategies across.
#[derive(Clone, Debug)]
pub struct Binarized<S> {
    pub transformed: Transformed<S>,
    /// Nodes added for each original MAX node.
    pub added: BTreeMap<NodeId, Vec<NodeId>>,
    original_len: usize,
}

impl<S: Scalar> Binarized<S> {
    pub fn game(&self) -> &Ssg<S> {
        &self.transformed.game
    }

    /// Reads a strategy of the binary game back on the original game by
    /// following the chosen branch down each tree.
    pub fn project_strategy(&self, original: &Ssg<S>, sigma: &Strategy) -> Result<Strategy> {
        let mut out = Strategy::new();
        for x in original.max_nodes() {
            let mut y = sigma.get(x).ok_or(SsgError::IncompleteStrategy(x))?;
            while y.0 >= self.original_len {
                y = sigma.get(y).ok_or(SsgError::IncompleteStrategy(y))?;
            }
            out.set(x, y);
        }
        Ok(out)
    }

    /// A strategy of the binary game that reproduces `sigma` on each tree.
    pub fn lift_strategy(&self, original: &Ssg<S>, sigma: &Strategy) -> Result<Strategy> {
        let g = self.game();
        let mut out = Strategy::new();
        for x in original.max_nodes() {
            let goal = sigma.get(x).ok_or(SsgError::IncompleteStrategy(x))?;
            // depth-first search for the path to the chosen leaf
            let mut stack = vec![x];
            let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
            let mut found = None;
            while let Some(u) = stack.pop() {
                for v in g.successors(u) {
                    if v == goal {
                        found = Some(u);
                        break;
                    }
                    if v.0 >= self.original_len && !parent.contains_key(&v) {
                        parent.insert(v, u);
                        stack.push(v);
                    }
                }
                if found.is_some() {
                    break;
                }
            }
            let mut u = found.ok_or(SsgError::InvalidParams(format!("{goal} is not a successor of {x}")))?;
            out.set(u, goal);
            while u != x {
                let p = parent[&u];
                out.set(p, u);
                u = p;
            }
        }
        // tree nodes off the chosen path take their first branch
        for x in g.max_nodes() {
            if out.get(x).is_none() {
                out.set(x, g.successors(x).next().expect("successor"));
            }
        }
        Ok(out)
    }
}

/// Replaces each MAX node of outdegree `d > 2` by a balanced tree of `d - 1`
/// MAX nodes; the left branch takes the first `d / 2` successors. A MAX node
/// with a single successor gets it twice.
pub fn to_max_binary<S: Scalar>(game: &Ssg<S>) -> Binarized<S> {
    let n = game.len();
    let mut nodes = game.nodes().to_vec();
    let mut labels = game.labels().to_vec();
    let mut fresh = Labels(labels.iter().cloned().collect());
    let mut added: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();

    fn branch<S: Scalar>(
        succ: &[NodeId],
        root: NodeId,
        nodes: &mut Vec<Node<S>>,
        labels: &mut Vec<String>,
        fresh: &mut Labels,
        added: &mut Vec<NodeId>,
    ) -> NodeId {
        if succ.len() == 1 {
            return succ[0];
        }
        let id = NodeId(nodes.len());
        nodes.push(Node::Max(Vec::new()));
        labels.push(fresh.fresh(&format!("{}.{}", labels[root.0], added.len() + 1)));
        added.push(id);
        let (l, r) = succ.split_at(succ.len() / 2);
        let left = branch(l, root, nodes, labels, fresh, added);
        let right = branch(r, root, nodes, labels, fresh, added);
        nodes[id.0] = Node::Max(vec![left, right]);
        id
    }

    for x in game.max_nodes() {
        let succ: Vec<NodeId> = game.successors(x).collect();
        match succ.len() {
            1 => nodes[x.0] = Node::Max(vec![succ[0], succ[0]]),
            2 => {}
            d => {
                let mut extra = Vec::new();
                let (l, r) = succ.split_at(d / 2);
                let left = branch(l, x, &mut nodes, &mut labels, &mut fresh, &mut extra);
                let right = branch(r, x, &mut nodes, &mut labels, &mut fresh, &mut extra);
                nodes[x.0] = Node::Max(vec![left, right]);
                added.insert(x, extra);
            }
        }
    }
    let mapping = (0..n).map(|i| Some(NodeId(i))).collect();
    Binarized { transformed: Transformed { game: Ssg::from_parts(nodes, labels), mapping }, added, original_len: n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{check_canonical_form, fig2_game, is_max_binary, validate, SsgBuilder};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn fig2_without_r2() -> Ssg<Rational> {
        let mut b = SsgBuilder::new();
        b.max("M", [2, 5]);
        b.min("m", [0, 3]);
        b.random("r1", [(4, q(9, 100)), (6, q(1, 100)), (1, q(9, 10))]);
        b.random("r3", [(4, q(1, 100)), (6, q(9, 100)), (1, q(9, 10))]);
        b.sink("0", q(0, 1));
        b.sink("1/2", q(1, 2));
        b.sink("1", q(1, 1));
        b.build().unwrap()
    }

    #[test]
    fn dummy_node_before_half_sink() {
        let g = fig2_without_r2();
        assert!(!check_canonical_form(&g).is_canonical());
        let t = to_canonical_form(&g, &q(0, 1)).unwrap();
        assert!(check_canonical_form(&t.game).is_canonical());
        assert_eq!(t.game.len(), 8);
        let m = t.new_id(NodeId(0)).unwrap();
        let dummy = t.game.successors(m).nth(1).unwrap();
        assert_eq!(t.game.kind(dummy), NodeKind::Random);
        assert_eq!(t.game.successors(dummy).collect::<Vec<_>>(), vec![t.new_id(NodeId(5)).unwrap()]);
    }

    #[test]
    fn canonical_input_is_unchanged() {
        let g: Ssg<Rational> = fig2_game();
        let t = to_canonical_form(&g, &q(0, 1)).unwrap();
        assert_eq!(t.game, g);
    }

    #[test]
    fn avoiding_min_node_is_removed() {
        let mut b = SsgBuilder::new();
        b.min("loop", [0]);
        b.max("x", [0, 2]);
        b.random("r", [(3, q(1, 1))]);
        b.sink("1", q(1, 1));
        let g = b.build().unwrap();
        let t = to_canonical_form(&g, &q(0, 1)).unwrap();
        assert_eq!(t.new_id(NodeId(0)), None);
        assert!(check_canonical_form(&t.game).is_canonical());
        let x = t.new_id(NodeId(1)).unwrap();
        let trap = t.game.successors(x).next().unwrap();
        assert_eq!(t.game.label(trap), "trap");
    }

    #[test]
    fn epsilon_adds_sink_mass() {
        let g: Ssg<Rational> = fig2_game();
        let t = to_canonical_form(&g, &q(1, 10)).unwrap();
        assert!(validate(&t.game).is_empty());
        let Node::Random(d) = t.game.node(t.new_id(NodeId(3)).unwrap()) else { panic!() };
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].1, q(9, 10));
        assert_eq!(t.game.sink_value(d[1].0), Some(&q(0, 1)));
        assert!(to_canonical_form(&g, &q(1, 1)).is_err());
    }

    #[test]
    fn ternary_max_node() {
        let mut b = SsgBuilder::new();
        b.max("x", [1, 2, 3]);
        b.sink("a", q(0, 1));
        b.sink("b", q(1, 2));
        b.sink("c", q(1, 1));
        let g = b.build().unwrap();
        let bin = to_max_binary(&g);
        assert!(is_max_binary(bin.game()));
        assert_eq!(bin.game().len(), 5);
        let x2 = NodeId(4);
        assert_eq!(bin.game().successors(NodeId(0)).collect::<Vec<_>>(), vec![NodeId(1), x2]);
        assert_eq!(bin.game().successors(x2).collect::<Vec<_>>(), vec![NodeId(2), NodeId(3)]);
        for leaf in 1..=3 {
            let sigma = Strategy::new().with(NodeId(0), NodeId(leaf));
            let lifted = bin.lift_strategy(&g, &sigma).unwrap();
            assert_eq!(bin.project_strategy(&g, &lifted).unwrap(), sigma);
        }
    }

    #[test]
    fn binary_game_unchanged_and_unary_doubled() {
        let g: Ssg<Rational> = fig2_game();
        assert_eq!(to_max_binary(&g).game(), &g);
        let mut b = SsgBuilder::new();
        b.max("x", [1]);
        b.sink("a", q(1, 1));
        let g = b.build().unwrap();
        let bin = to_max_binary(&g);
        assert_eq!(bin.game().successors(NodeId(0)).collect::<Vec<_>>(), vec![NodeId(1), NodeId(1)]);
    }
}
