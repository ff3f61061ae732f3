//! Total and pretotal orders on control indices `1..=k`, value intervals,
//! the pivot move and random pair orders.
//!
//! Indices are 1-based throughout: control index `i` belongs to the `i`-th
//! random node of the game.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SsgError};
use crate::scalar::Scalar;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A total order, stored in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TotalOrder {
    ascending: Vec<usize>,
}

impl TotalOrder {
    pub fn new(ascending: Vec<usize>) -> Result<Self> {
        let k = ascending.len();
        let mut seen = vec![false; k + 1];
        for &i in &ascending {
            if i == 0 || i > k || seen[i] {
                return Err(SsgError::InvalidOrder(format!("{ascending:?} is not a permutation of 1..={k}")));
            }
            seen[i] = true;
        }
        Ok(TotalOrder { ascending })
    }

    pub fn identity(k: usize) -> Self {
        TotalOrder { ascending: (1..=k).collect() }
    }

    pub fn k(&self) -> usize {
        self.ascending.len()
    }

    pub fn ascending(&self) -> &[usize] {
        &self.ascending
    }

    /// 0-based position of `i`.
    pub fn position(&self, i: usize) -> usize {
        self.ascending.iter().position(|&x| x == i).expect("index outside the order")
    }

    /// 1-based rank of `i`.
    pub fn rank(&self, i: usize) -> usize {
        self.position(i) + 1
    }

    /// Whether `i` comes strictly before `j`.
    pub fn precedes(&self, i: usize, j: usize) -> bool {
        self.position(i) < self.position(j)
    }

    /// Every ordered pair `(i, j)` with `i` before `j`.
    pub fn pairs(&self) -> PretotalOrder {
        let mut pairs = BTreeSet::new();
        for (a, &i) in self.ascending.iter().enumerate() {
            for &j in &self.ascending[a + 1..] {
                pairs.insert((i, j));
            }
        }
        PretotalOrder { k: self.k(), pairs }
    }

    /// All `k!` orders in lexicographic order of their ascending sequence.
    pub fn all(k: usize) -> Vec<TotalOrder> {
        use itertools::Itertools;
        (1..=k).permutations(k).map(|ascending| TotalOrder { ascending }).collect()
    }
}

impl fmt::Display for TotalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.ascending.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", items.join(","))
    }
}

impl FromStr for TotalOrder {
    type Err = SsgError;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| SsgError::InvalidOrder(format!("expected [i,j,...], got {s:?}")))?;
        if inner.trim().is_empty() {
            return TotalOrder::new(vec![]);
        }
        let ascending = inner
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| SsgError::InvalidOrder(format!("bad index {x:?}"))))
            .collect::<Result<Vec<_>>>()?;
        TotalOrder::new(ascending)
    }
}

/// An antisymmetric relation given by its non-reflexive pairs. It is not
/// closed under transitivity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PretotalOrder {
    k: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl PretotalOrder {
    pub fn empty(k: usize) -> Self {
        PretotalOrder { k, pairs: BTreeSet::new() }
    }

    pub fn from_pairs(k: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut p = Self::empty(k);
        for (i, j) in pairs {
            p = p.add_pair(i, j)?;
        }
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i, j))
    }

    /// Whether `{i, j}` is related in either direction.
    pub fn relates(&self, i: usize, j: usize) -> bool {
        self.contains(i, j) || self.contains(j, i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.pairs.range((i, 0)..(i + 1, 0)).map(|&(_, j)| j)
    }

    /// `p + (i, j)`.
    pub fn add_pair(&self, i: usize, j: usize) -> Result<Self> {
        if i == j || i == 0 || j == 0 || i > self.k || j > self.k {
            return Err(SsgError::InvalidOrder(format!("({i},{j}) is not a pair over 1..={}", self.k)));
        }
        if self.relates(i, j) {
            return Err(SsgError::InvalidOrder(format!("{{{i},{j}}} is already related")));
        }
        let mut pairs = self.pairs.clone();
        pairs.insert((i, j));
        Ok(PretotalOrder { k: self.k, pairs })
    }

    /// Whether every unordered pair is related.
    pub fn is_total(&self) -> bool {
        self.pairs.len() == self.k * self.k.saturating_sub(1) / 2
    }
}

impl fmt::Display for PretotalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.pairs.iter().map(|(i, j)| format!("({i},{j})")).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// `p` is contained in `t`.
pub fn extends(t: &TotalOrder, p: &PretotalOrder) -> bool {
    t.k() == p.k() && p.iter().all(|(i, j)| t.precedes(i, j))
}

pub fn add_pair(p: &PretotalOrder, i: usize, j: usize) -> Result<PretotalOrder> {
    p.add_pair(i, j)
}

/// A sequence of all unordered pairs `{i, j}`, each stored with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PairOrder {
    k: usize,
    sequence: Vec<(usize, usize)>,
    position: Vec<Vec<usize>>,
}

impl PairOrder {
    pub fn new(k: usize, sequence: Vec<(usize, usize)>) -> Result<Self> {
        let mut position = vec![vec![usize::MAX; k + 1]; k + 1];
        let mut normalized = Vec::with_capacity(sequence.len());
        for (n, &(a, b)) in sequence.iter().enumerate() {
            let (i, j) = (a.min(b), a.max(b));
            if i == 0 || j > k || i == j {
                return Err(SsgError::InvalidOrder(format!("{{{a},{b}}} is not a pair over 1..={k}")));
            }
            if position[i][j] != usize::MAX {
                return Err(SsgError::InvalidOrder(format!("pair {{{a},{b}}} repeated")));
            }
            position[i][j] = n;
            position[j][i] = n;
            normalized.push((i, j));
        }
        if normalized.len() != k * k.saturating_sub(1) / 2 {
            return Err(SsgError::InvalidOrder(format!("expected {} pairs, got {}", k * k.saturating_sub(1) / 2, normalized.len())));
        }
        Ok(PairOrder { k, sequence: normalized, position })
    }

    /// `{1,2},{1,3},...,{k-1,k}`.
    pub fn canonical(k: usize) -> Self {
        Self::new(k, canonical_pairs(k)).expect("canonical pairs are valid")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sequence(&self) -> &[(usize, usize)] {
        &self.sequence
    }

    /// Position of `{i, j}` in the sequence.
    pub fn position(&self, i: usize, j: usize) -> usize {
        self.position[i][j]
    }

    /// Parses `{a,b},{c,d},...`; `k` is inferred from the largest index.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let mut pairs = Vec::new();
        let mut k = 1;
        if !text.is_empty() {
            for chunk in text.split('}') {
                let chunk = chunk.trim().trim_start_matches(',').trim();
                if chunk.is_empty() {
                    continue;
                }
                let inner = chunk
                    .strip_prefix('{')
                    .ok_or_else(|| SsgError::InvalidOrder(format!("bad pair {chunk:?}")))?;
                let (a, b) = inner
                    .split_once(',')
                    .ok_or_else(|| SsgError::InvalidOrder(format!("bad pair {chunk:?}")))?;
                let a: usize = a.trim().parse().map_err(|_| SsgError::InvalidOrder(format!("bad index {a:?}")))?;
                let b: usize = b.trim().parse().map_err(|_| SsgError::InvalidOrder(format!("bad index {b:?}")))?;
                k = k.max(a).max(b);
                pairs.push((a, b));
            }
        }
        Self::new(k, pairs)
    }
}

impl fmt::Display for PairOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.sequence.iter().map(|(i, j)| format!("{{{i},{j}}}")).collect();
        write!(f, "{}", items.join(","))
    }
}

pub fn canonical_pairs(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 1..=k {
        for j in i + 1..=k {
            out.push((i, j));
        }
    }
    out
}

/// Uniform pair order: Fisher-Yates over the canonical enumeration.
pub fn sample_pair_order(k: usize, seed: u64) -> PairOrder {
    let mut pairs = canonical_pairs(k);
    pairs.shuffle(&mut seeded_rng(seed));
    PairOrder::new(k, pairs).expect("shuffled canonical pairs are valid")
}

/// Uniform total order over `1..=k`.
pub fn sample_total_order(k: usize, seed: u64) -> TotalOrder {
    let mut ascending: Vec<usize> = (1..=k).collect();
    ascending.shuffle(&mut seeded_rng(seed));
    TotalOrder { ascending }
}

/// A maximal run of consecutive indices sharing one value.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval<S> {
    pub members: Vec<usize>,
    pub value: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalPartition<S> {
    pub intervals: Vec<Interval<S>>,
}

impl<S: Scalar> IntervalPartition<S> {
    pub fn interval_of(&self, i: usize) -> &Interval<S> {
        self.intervals
            .iter()
            .find(|iv| iv.members.contains(&i))
            .expect("index outside the partition")
    }

    /// Members of `i`'s interval that come after `i`.
    pub fn after(&self, i: usize) -> &[usize] {
        let iv = self.interval_of(i);
        let pos = iv.members.iter().position(|&x| x == i).expect("member");
        &iv.members[pos + 1..]
    }

    pub fn describe(&self) -> String {
        self.intervals
            .iter()
            .map(|iv| {
                let m: Vec<String> = iv.members.iter().map(|x| x.to_string()).collect();
                format!("[{}]", m.join(","))
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Splits `t` into maximal runs of equal values. `control_values[i - 1]` is the
/// value of index `i`; values must be nondecreasing along `t`.
pub fn value_intervals<S: Scalar>(t: &TotalOrder, control_values: &[S]) -> Result<IntervalPartition<S>> {
    let mut intervals: Vec<Interval<S>> = Vec::new();
    for &i in t.ascending() {
        let v = &control_values[i - 1];
        match intervals.last_mut() {
            Some(last) if last.value.same_value(v) => last.members.push(i),
            Some(last) if v.strictly_less(&last.value) => {
                return Err(SsgError::NotNondecreasing(*last.members.last().expect("nonempty"), i));
            }
            _ => intervals.push(Interval { members: vec![i], value: v.clone() }),
        }
    }
    Ok(IntervalPartition { intervals })
}

/// Moves `i` just after the last element of its value interval.
pub fn pivot<S: Scalar>(t: &TotalOrder, i: usize, partition: &IntervalPartition<S>) -> TotalOrder {
    let last = *partition.interval_of(i).members.last().expect("nonempty interval");
    if last == i {
        return t.clone();
    }
    let mut ascending: Vec<usize> = t.ascending().iter().copied().filter(|&x| x != i).collect();
    let at = ascending.iter().position(|&x| x == last).expect("last member present") + 1;
    ascending.insert(at, i);
    TotalOrder { ascending }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn t(s: &str) -> TotalOrder {
        s.parse().unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    /// Values indexed by control for the running k = 7 example.
    fn example_values() -> Vec<Rational> {
        // ascending [7,2,4,1,3,6,5] with values .2,.2,.3,.3,.3,.4,.4
        let mut v = vec![q(0, 1); 7];
        for (i, val) in [(7, q(2, 10)), (2, q(2, 10)), (4, q(3, 10)), (1, q(3, 10)), (3, q(3, 10)), (6, q(4, 10)), (5, q(4, 10))] {
            v[i - 1] = val;
        }
        v
    }

    #[test]
    fn extends_cases() {
        let o = t("[1,2,3]");
        assert!(extends(&o, &PretotalOrder::from_pairs(3, [(1, 3)]).unwrap()));
        assert!(!extends(&o, &PretotalOrder::from_pairs(3, [(3, 1)]).unwrap()));
        assert!(extends(&t("[3,1,2]"), &PretotalOrder::empty(3)));
    }

    #[test]
    fn add_pair_cases() {
        let p = add_pair(&PretotalOrder::empty(5), 2, 5).unwrap();
        assert_eq!(p.iter().collect::<Vec<_>>(), vec![(2, 5)]);
        assert!(add_pair(&p, 5, 2).is_err());
        assert!(add_pair(&p, 2, 5).is_err());
        let p = PretotalOrder::from_pairs(3, [(1, 2)]).unwrap().add_pair(2, 3).unwrap();
        assert_eq!(p.iter().collect::<Vec<_>>(), vec![(1, 2), (2, 3)]);
        assert!(!p.contains(1, 3));
    }

    #[test]
    fn intervals_of_running_example() {
        let part = value_intervals(&t("[7,2,4,1,3,6,5]"), &example_values()).unwrap();
        assert_eq!(part.describe(), "[7,2],[4,1,3],[6,5]");
        assert_eq!(part.after(4), &[1, 3]);
    }

    #[test]
    fn intervals_degenerate_cases() {
        let part = value_intervals(&t("[2,1,3]"), &vec![q(1, 2); 3]).unwrap();
        assert_eq!(part.intervals.len(), 1);
        assert_eq!(part.intervals[0].members, vec![2, 1, 3]);
        let part = value_intervals(&t("[1,2,3]"), &[q(1, 4), q(1, 3), q(1, 2)]).unwrap();
        assert_eq!(part.intervals.len(), 3);
        assert_eq!(
            value_intervals(&t("[2,1]"), &[q(1, 4), q(1, 3)]),
            Err(SsgError::NotNondecreasing(2, 1))
        );
    }

    #[test]
    fn pivot_running_example() {
        let o = t("[7,2,4,1,3,6,5]");
        let part = value_intervals(&o, &example_values()).unwrap();
        assert_eq!(pivot(&o, 4, &part), t("[7,2,1,3,4,6,5]"));
        assert_eq!(pivot(&o, 3, &part), o);
        assert_eq!(pivot(&o, 5, &part), o);
    }

    #[test]
    fn pivot_fig2_first_step() {
        // t = [3,1,2] with control values (1/10, 1/2, 1/10)
        let o = t("[3,1,2]");
        let part = value_intervals(&o, &[q(1, 10), q(1, 2), q(1, 10)]).unwrap();
        assert_eq!(part.interval_of(3).members, vec![3, 1]);
        assert_eq!(pivot(&o, 3, &part), t("[1,3,2]"));
    }

    #[test]
    fn text_forms() {
        assert_eq!(t("[3, 1,2]").to_string(), "[3,1,2]");
        assert!("[1,1]".parse::<TotalOrder>().is_err());
        assert!("1,2".parse::<TotalOrder>().is_err());
        let th = PairOrder::parse("{2,5},{7,6},{1,4}");
        assert!(th.is_err(), "incomplete pair orders are rejected");
        let th = PairOrder::parse("{2,3},{1,3},{2,1}").unwrap();
        assert_eq!(th.to_string(), "{2,3},{1,3},{1,2}");
        assert_eq!(th.position(1, 2), 2);
    }

    #[test]
    fn pair_order_small_k() {
        assert_eq!(sample_pair_order(2, 9).sequence(), &[(1, 2)]);
        assert!(sample_pair_order(1, 9).sequence().is_empty());
        let th = sample_pair_order(3, 4);
        let mut s = th.sequence().to_vec();
        s.sort();
        assert_eq!(s, canonical_pairs(3));
    }

    #[test]
    fn pair_order_is_uniform_at_k3() {
        use std::collections::HashMap;
        let mut counts: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
        for seed in 0..6000 {
            *counts.entry(sample_pair_order(3, seed).sequence().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (perm, c) in counts {
            assert!((850..=1150).contains(&c), "{perm:?} appeared {c} times");
        }
    }

    #[test]
    fn all_orders() {
        let all = TotalOrder::all(3);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], t("[1,2,3]"));
        assert_eq!(t("[3,1,2]").pairs().iter().collect::<Vec<_>>(), vec![(1, 2), (3, 1), (3, 2)]);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn perm(k: usize) -> impl Strategy<Value = TotalOrder> {
        Just((1..=k).collect::<Vec<_>>()).prop_shuffle().prop_map(|a| TotalOrder::new(a).unwrap())
    }

    proptest! {
        #[test]
        fn pivot_keeps_relative_order_of_others(
            (o, values, i) in (1usize..8).prop_flat_map(|k| (perm(k), proptest::collection::vec(0i64..4, k), 1..=k))
        ) {
            // make values nondecreasing along o
            let mut sorted = values.clone();
            sorted.sort();
            let mut vals = vec![0i64; o.k()];
            for (pos, &x) in o.ascending().iter().enumerate() {
                vals[x - 1] = sorted[pos];
            }
            let vals: Vec<f64> = vals.into_iter().map(|v| v as f64).collect();
            let part = value_intervals(&o, &vals).unwrap();
            for w in part.intervals.windows(2) {
                prop_assert!(w[0].value < w[1].value);
            }
            let flat: Vec<usize> = part.intervals.iter().flat_map(|iv| iv.members.clone()).collect();
            prop_assert_eq!(flat.as_slice(), o.ascending());
            let p = pivot(&o, i, &part);
            prop_assert!(TotalOrder::new(p.ascending().to_vec()).is_ok());
            let before: Vec<usize> = o.ascending().iter().copied().filter(|&x| x != i).collect();
            let after: Vec<usize> = p.ascending().iter().copied().filter(|&x| x != i).collect();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn extension_is_consistent_with_added_pair(o in (2usize..7).prop_flat_map(perm), pick in any::<proptest::sample::Index>()) {
            let pairs: Vec<(usize, usize)> = o.pairs().iter().collect();
            let (i, j) = pairs[pick.index(pairs.len())];
            let p = PretotalOrder::empty(o.k()).add_pair(i, j).unwrap();
            prop_assert!(extends(&o, &p));
            prop_assert!(o.precedes(i, j));
        }
    }
}
