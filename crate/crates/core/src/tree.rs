//! Rooted binary trees with labeled leaves, represented as laminar families
//! of label sets.
//!
//! A tree on a label set `A` is stored as the collection of its edges, each
//! edge being the set of leaf labels in the subtree above it. Every
//! singleton `{j}` is an (external) edge, the full set `A` is the root edge,
//! any two edges are nested or disjoint, and every non-root edge has a
//! unique disjoint sibling. Edges are bitsets over a global universe of at
//! most 64 labels, so subset and disjointness tests are single instructions.

use std::fmt;

use serde_json::Value;
use thiserror::Error;

/// Largest admissible leaf label; trees never have more than 64 leaves.
pub const MAX_LABEL: u8 = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("label {0} outside 1..={MAX_LABEL}")]
    LabelOutOfRange(u32),
    #[error("label {0} is not a leaf of the tree")]
    UnknownLabel(u8),
    #[error("label {0} is already a leaf of the tree")]
    DuplicateLabel(u8),
    #[error("set {0} is not an edge of the tree")]
    NotAnEdge(EdgeSet),
    #[error("operation needs at least {0} leaves")]
    TooFewLeaves(usize),
    #[error("label set of size {0} exceeds the enumeration bound {1}")]
    EnumerationBound(usize, usize),
    #[error("invalid tree: {0}")]
    Invariant(&'static str),
    #[error("parse error at {0}")]
    Parse(String),
}

/// A leaf name: a positive integer in `1..=64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(u8);

impl Label {
    pub fn new(value: u32) -> Result<Self, TreeError> {
        if value >= 1 && value <= MAX_LABEL as u32 {
            Ok(Label(value as u8))
        } else {
            Err(TreeError::LabelOutOfRange(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of labels, i.e. an edge of a tree or any label universe.
///
/// Bit `v-1` holds label `v`. The canonical order compares cardinality
/// first, then the sorted label lists lexicographically; it is the order
/// used for edge lists, serialization, and state spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeSet(u64);

impl EdgeSet {
    pub const EMPTY: EdgeSet = EdgeSet(0);

    pub fn singleton(label: Label) -> Self {
        EdgeSet(1u64 << (label.0 - 1))
    }

    /// The contiguous label set `{1, ..., n}`.
    pub fn first_n(n: u8) -> Self {
        assert!(n <= MAX_LABEL);
        if n == 64 {
            EdgeSet(u64::MAX)
        } else {
            EdgeSet((1u64 << n) - 1)
        }
    }

    pub fn from_labels<I: IntoIterator<Item = Label>>(labels: I) -> Self {
        let mut bits = 0u64;
        for l in labels {
            bits |= 1u64 << (l.0 - 1);
        }
        EdgeSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(self, label: Label) -> bool {
        self.0 & (1u64 << (label.0 - 1)) != 0
    }

    pub fn is_subset(self, other: EdgeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: EdgeSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(self, other: EdgeSet) -> EdgeSet {
        EdgeSet(self.0 | other.0)
    }

    pub fn intersect(self, other: EdgeSet) -> EdgeSet {
        EdgeSet(self.0 & other.0)
    }

    pub fn difference(self, other: EdgeSet) -> EdgeSet {
        EdgeSet(self.0 & !other.0)
    }

    pub fn insert(self, label: Label) -> EdgeSet {
        EdgeSet(self.0 | (1u64 << (label.0 - 1)))
    }

    pub fn remove(self, label: Label) -> EdgeSet {
        EdgeSet(self.0 & !(1u64 << (label.0 - 1)))
    }

    pub fn min_label(self) -> Option<Label> {
        if self.0 == 0 {
            None
        } else {
            Some(Label(self.0.trailing_zeros() as u8 + 1))
        }
    }

    pub fn max_label(self) -> Option<Label> {
        if self.0 == 0 {
            None
        } else {
            Some(64 - self.0.leading_zeros() as u8).map(Label)
        }
    }

    pub fn labels(self) -> impl Iterator<Item = Label> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as u8 + 1;
                bits &= bits - 1;
                Some(Label(v))
            }
        })
    }

    /// Applies a label permutation given as a map on bit positions.
    fn relabel(self, map: impl Fn(u8) -> u8) -> EdgeSet {
        let mut out = 0u64;
        for l in self.labels() {
            out |= 1u64 << (map(l.0) - 1);
        }
        EdgeSet(out)
    }
}

impl Ord for EdgeSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Cardinality, then lexicographic on the ascending label lists: the
        // set owning the smallest label in the symmetric difference sorts
        // first.
        self.len().cmp(&other.len()).then_with(|| {
            let diff = self.0 ^ other.0;
            if diff == 0 {
                std::cmp::Ordering::Equal
            } else if self.0 & (diff & diff.wrapping_neg()) != 0 {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        })
    }
}

impl PartialOrd for EdgeSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.labels().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", l)?;
        }
        write!(f, "}}")
    }
}

/// The result of the down-move comparison at a leaf: the selected leaf `i`,
/// the smallest labels `a` and `b` of the first two subtrees on its
/// ancestral path (`b` absent when the path has a single subtree), and the
/// swap target `ĩ = max{i, a, b}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapTarget {
    pub i: Label,
    pub a: Label,
    pub b: Option<Label>,
    pub i_tilde: Label,
}

/// A rooted binary tree with labeled leaves, stored as its canonically
/// sorted edge list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tree {
    edges: Vec<EdgeSet>,
}

impl Tree {
    /// The single-leaf tree `{{j}}`.
    pub fn singleton(label: Label) -> Self {
        Tree {
            edges: vec![EdgeSet::singleton(label)],
        }
    }

    /// Validates the full set of tree invariants and builds the tree.
    pub fn from_edges(mut edges: Vec<EdgeSet>) -> Result<Self, TreeError> {
        edges.sort();
        edges.dedup();
        if edges.is_empty() {
            return Err(TreeError::Invariant("no edges"));
        }
        let root = *edges.last().unwrap();
        let m = root.len() as usize;
        if edges.len() != 2 * m - 1 {
            return Err(TreeError::Invariant("edge count is not 2#labels - 1"));
        }
        for l in root.labels() {
            if !edges.contains(&EdgeSet::singleton(l)) {
                return Err(TreeError::Invariant("missing external edge"));
            }
        }
        for (i, &a) in edges.iter().enumerate() {
            if a.is_empty() {
                return Err(TreeError::Invariant("empty edge"));
            }
            if !a.is_subset(root) {
                return Err(TreeError::Invariant("edge not contained in the root edge"));
            }
            for &b in &edges[i + 1..] {
                if !(a.is_disjoint(b) || a.is_subset(b) || b.is_subset(a)) {
                    return Err(TreeError::Invariant("edges neither nested nor disjoint"));
                }
            }
        }
        let t = Tree { edges };
        for &e in &t.edges {
            if e != root && t.sibling(e).is_none() {
                return Err(TreeError::Invariant("edge without a sibling"));
            }
        }
        Ok(t)
    }

    /// Internal constructor for edge lists known to be valid.
    fn from_edges_unchecked(mut edges: Vec<EdgeSet>) -> Self {
        edges.sort();
        edges.dedup();
        debug_assert!(Tree::from_edges(edges.clone()).is_ok());
        Tree { edges }
    }

    /// The label set, i.e. the root edge.
    pub fn labels(&self) -> EdgeSet {
        *self.edges.last().unwrap()
    }

    pub fn leaf_count(&self) -> usize {
        self.labels().len() as usize
    }

    /// Edges in canonical order (cardinality, then lexicographic).
    pub fn edges(&self) -> &[EdgeSet] {
        &self.edges
    }

    pub fn is_edge(&self, e: EdgeSet) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    pub fn internal_edges(&self) -> impl Iterator<Item = EdgeSet> + '_ {
        self.edges.iter().copied().filter(|e| e.len() >= 2)
    }

    /// The parent edge: the smallest edge strictly containing `e`.
    pub fn parent(&self, e: EdgeSet) -> Option<EdgeSet> {
        if e == self.labels() {
            return None;
        }
        self.edges
            .iter()
            .copied()
            .filter(|&c| e.is_subset(c) && c != e)
            .min_by_key(|c| c.len())
    }

    /// The sibling edge `e'` with `e ∪ e'` an edge and `e ∩ e' = ∅`.
    pub fn sibling(&self, e: EdgeSet) -> Option<EdgeSet> {
        let p = self.parent(e)?;
        let s = p.difference(e);
        if self.is_edge(s) && !s.is_empty() {
            Some(s)
        } else {
            None
        }
    }

    /// Deletion of leaf `j`: intersects every edge with the complement of
    /// `{j}` and drops the empty set; the parent and sibling of `{j}` merge.
    pub fn delete_leaf(&self, j: Label) -> Result<Tree, TreeError> {
        if !self.labels().contains(j) {
            return Err(TreeError::UnknownLabel(j.value()));
        }
        if self.leaf_count() < 2 {
            return Err(TreeError::TooFewLeaves(2));
        }
        let edges: Vec<EdgeSet> = self
            .edges
            .iter()
            .map(|e| e.remove(j))
            .filter(|e| !e.is_empty())
            .collect();
        Ok(Tree::from_edges_unchecked(edges))
    }

    /// Insertion of leaf `j` on edge `s`: `s` splits into `s` and
    /// `s ∪ {j}`, ancestors of `s` gain `j`, and `{j}` is added.
    pub fn insert_leaf(&self, s: EdgeSet, j: Label) -> Result<Tree, TreeError> {
        if self.labels().contains(j) {
            return Err(TreeError::DuplicateLabel(j.value()));
        }
        if !self.is_edge(s) {
            return Err(TreeError::NotAnEdge(s));
        }
        let mut edges = Vec::with_capacity(self.edges.len() + 2);
        for &e in &self.edges {
            if s.is_subset(e) {
                edges.push(e.insert(j));
                if e == s {
                    edges.push(e);
                }
            } else {
                edges.push(e);
            }
        }
        edges.push(EdgeSet::singleton(j));
        Ok(Tree::from_edges_unchecked(edges))
    }

    /// Swaps two leaf labels in place (a transposition on every edge).
    pub fn swap_labels(&self, i: Label, j: Label) -> Result<Tree, TreeError> {
        if !self.labels().contains(i) {
            return Err(TreeError::UnknownLabel(i.value()));
        }
        if !self.labels().contains(j) {
            return Err(TreeError::UnknownLabel(j.value()));
        }
        if i == j {
            return Ok(self.clone());
        }
        let map = |v: u8| {
            if v == i.0 {
                j.0
            } else if v == j.0 {
                i.0
            } else {
                v
            }
        };
        Ok(Tree::from_edges_unchecked(
            self.edges.iter().map(|e| e.relabel(map)).collect(),
        ))
    }

    /// The down-move comparison of Definition-style chains: `a` is the least
    /// label in the sibling subtree of `{i}`; `b` is the least label in the
    /// sibling subtree of `parent({i})`, absent when `parent({i})` is the
    /// root edge.
    pub fn swap_target(&self, i: Label) -> Result<SwapTarget, TreeError> {
        if !self.labels().contains(i) {
            return Err(TreeError::UnknownLabel(i.value()));
        }
        if self.leaf_count() < 2 {
            return Err(TreeError::TooFewLeaves(2));
        }
        let leaf = EdgeSet::singleton(i);
        let b1 = self.parent(leaf).expect("non-root leaf has a parent");
        let a = b1.difference(leaf).min_label().unwrap();
        let b = self.parent(b1).map(|b2| b2.difference(b1).min_label().unwrap());
        let i_tilde = [Some(i), Some(a), b].into_iter().flatten().max().unwrap();
        Ok(SwapTarget { i, a, b, i_tilde })
    }

    /// Label sets of the subtrees hanging along the ancestral path of leaf
    /// `j`, ordered from the leaf towards the root. Together with `{j}` they
    /// partition the label set.
    pub fn spinal_subtrees(&self, j: Label) -> Result<Vec<EdgeSet>, TreeError> {
        if !self.labels().contains(j) {
            return Err(TreeError::UnknownLabel(j.value()));
        }
        let mut out = Vec::new();
        let mut cur = EdgeSet::singleton(j);
        while let Some(p) = self.parent(cur) {
            out.push(p.difference(cur));
            cur = p;
        }
        Ok(out)
    }

    /// The subtree rooted at edge `root`: all edges contained in it.
    pub fn subtree(&self, root: EdgeSet) -> Result<Tree, TreeError> {
        if !self.is_edge(root) {
            return Err(TreeError::NotAnEdge(root));
        }
        Ok(Tree::from_edges_unchecked(
            self.edges
                .iter()
                .copied()
                .filter(|e| e.is_subset(root))
                .collect(),
        ))
    }

    /// The restriction `t ∩ c`: nonempty intersections of the edges with `c`.
    /// Valid for any nonempty `c` that meets the label set.
    pub fn restrict(&self, c: EdgeSet) -> Result<Tree, TreeError> {
        if self.labels().intersect(c).is_empty() {
            return Err(TreeError::Invariant("restriction misses the label set"));
        }
        Ok(Tree::from_edges_unchecked(
            self.edges
                .iter()
                .map(|e| e.intersect(c))
                .filter(|e| !e.is_empty())
                .collect(),
        ))
    }

    /// Relabels leaf `a_i` by its rank `i` among the sorted labels.
    pub fn rank_relabel(&self) -> Tree {
        let labels: Vec<u8> = self.labels().labels().map(Label::value).collect();
        let map = |v: u8| (labels.iter().position(|&l| l == v).unwrap() + 1) as u8;
        Tree::from_edges_unchecked(self.edges.iter().map(|e| e.relabel(map)).collect())
    }

    /// Shifts every label strictly above `pivot` down by one.
    pub fn shift_labels_down(&self, pivot: Label) -> Tree {
        let map = |v: u8| if v > pivot.0 { v - 1 } else { v };
        Tree::from_edges_unchecked(self.edges.iter().map(|e| e.relabel(map)).collect())
    }

    /// Canonical JSON edge-list encoding, e.g. `[[1],[2],[1,2]]`.
    pub fn encode(&self) -> String {
        let mut out = String::from("[");
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push('[');
            for (j, l) in e.labels().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&l.value().to_string());
            }
            out.push(']');
        }
        out.push(']');
        out
    }

    /// Parses the JSON edge-list form, validating every tree invariant.
    pub fn decode(input: &str) -> Result<Tree, TreeError> {
        let value: Value =
            serde_json::from_str(input).map_err(|e| TreeError::Parse(e.to_string()))?;
        let arr = value
            .as_array()
            .ok_or(TreeError::Parse("expected an array of edges".into()))?;
        let mut edges = Vec::with_capacity(arr.len());
        for edge in arr {
            let labels = edge
                .as_array()
                .ok_or(TreeError::Parse("expected an edge to be an array".into()))?;
            let mut set = EdgeSet::EMPTY;
            let mut prev = 0u32;
            for l in labels {
                let v = l
                    .as_u64()
                    .ok_or(TreeError::Parse("labels must be positive integers".into()))?;
                if v <= prev as u64 {
                    return Err(TreeError::Parse(
                        "edge labels must be strictly increasing".into(),
                    ));
                }
                prev = v as u32;
                set = set.insert(Label::new(prev)?);
            }
            edges.push(set);
        }
        Tree::from_edges(edges)
    }

    /// Newick-style export with subtrees ordered by least label, e.g.
    /// `((1,2),3);`.
    pub fn to_newick(&self) -> String {
        fn rec(t: &Tree, e: EdgeSet, out: &mut String) {
            if e.len() == 1 {
                out.push_str(&e.min_label().unwrap().to_string());
                return;
            }
            let mut children: Vec<EdgeSet> = t
                .edges
                .iter()
                .copied()
                .filter(|&c| c != e && c.is_subset(e) && t.parent(c) == Some(e))
                .collect();
            children.sort_by_key(|c| c.min_label());
            out.push('(');
            for (i, c) in children.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                rec(t, c, out);
            }
            out.push(')');
        }
        let mut out = String::new();
        rec(self, self.labels(), &mut out);
        out.push(';');
        out
    }
}

/// Number of trees on `m` labeled leaves: the double factorial
/// `1·3·5···(2m-3)`.
pub fn tree_count(m: usize) -> num::BigUint {
    use num::One;
    let mut acc = num::BigUint::one();
    for i in 1..m {
        acc *= num::BigUint::from(2 * i - 1);
    }
    acc
}

/// Enumeration bound: label sets up to this size are enumerable in memory.
pub const ENUMERATION_BOUND: usize = 9;

/// All trees on the given label set, each exactly once, in a deterministic
/// order (recursive insertion of the largest label into every edge).
pub fn enumerate_trees(labels: EdgeSet) -> Result<Vec<Tree>, TreeError> {
    let m = labels.len() as usize;
    if m == 0 {
        return Err(TreeError::Invariant("empty label set"));
    }
    if m > ENUMERATION_BOUND {
        return Err(TreeError::EnumerationBound(m, ENUMERATION_BOUND));
    }
    let mut out = Vec::new();
    for_each_tree(labels, &mut |t| out.push(t.clone()))?;
    debug_assert_eq!(num::BigUint::from(out.len()), tree_count(m));
    Ok(out)
}

/// Streams every tree on the label set without materializing the list.
/// Unlike [`enumerate_trees`] this has no size bound beyond the label
/// universe; the visit order matches `enumerate_trees`.
pub fn for_each_tree(
    labels: EdgeSet,
    visit: &mut dyn FnMut(&Tree),
) -> Result<(), TreeError> {
    fn rec(labels: EdgeSet, visit: &mut dyn FnMut(&Tree)) {
        let top = labels.max_label().unwrap();
        if labels.len() == 1 {
            visit(&Tree::singleton(top));
            return;
        }
        rec(labels.remove(top), &mut |s: &Tree| {
            for &e in s.edges() {
                visit(&s.insert_leaf(e, top).unwrap());
            }
        });
    }
    if labels.is_empty() {
        return Err(TreeError::Invariant("empty label set"));
    }
    rec(labels, visit);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn lab(v: u32) -> Label {
        Label::new(v).unwrap()
    }

    pub fn tree(edges: &[&[u32]]) -> Tree {
        Tree::from_edges(
            edges
                .iter()
                .map(|e| EdgeSet::from_labels(e.iter().map(|&v| lab(v))))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn edge_set_order_is_cardinality_then_lex() {
        let e = |ls: &[u32]| EdgeSet::from_labels(ls.iter().map(|&v| lab(v)));
        assert!(e(&[2]) < e(&[1, 2]));
        assert!(e(&[1, 2]) < e(&[1, 3]));
        assert!(e(&[1, 4]) < e(&[2, 3]));
        assert!(e(&[1, 2, 3]) > e(&[2, 3]));
    }

    #[test]
    fn delete_leaf_matches_set_formula() {
        let t = tree(&[&[1], &[2], &[3], &[2, 3], &[1, 2, 3]]);
        assert_eq!(t.delete_leaf(lab(3)).unwrap(), tree(&[&[1], &[2], &[1, 2]]));
        let t2 = tree(&[&[1], &[2], &[1, 2]]);
        assert_eq!(t2.delete_leaf(lab(1)).unwrap(), tree(&[&[2]]));
        let t3 = tree(&[&[1], &[2], &[3], &[1, 3], &[1, 2, 3]]);
        assert_eq!(t3.delete_leaf(lab(2)).unwrap(), tree(&[&[1], &[3], &[1, 3]]));
        assert_eq!(
            t.delete_leaf(lab(9)),
            Err(TreeError::UnknownLabel(9))
        );
        assert_eq!(
            Tree::singleton(lab(1)).delete_leaf(lab(1)),
            Err(TreeError::TooFewLeaves(2))
        );
    }

    #[test]
    fn insert_leaf_matches_listed_trees() {
        let s = tree(&[&[1], &[2], &[1, 2]]);
        let e = |ls: &[u32]| EdgeSet::from_labels(ls.iter().map(|&v| lab(v)));
        assert_eq!(
            s.insert_leaf(e(&[2]), lab(3)).unwrap(),
            tree(&[&[1], &[2], &[3], &[2, 3], &[1, 2, 3]])
        );
        assert_eq!(
            Tree::singleton(lab(1)).insert_leaf(e(&[1]), lab(2)).unwrap(),
            tree(&[&[1], &[2], &[1, 2]])
        );
        assert_eq!(
            s.insert_leaf(e(&[1, 2]), lab(3)).unwrap(),
            tree(&[&[1], &[2], &[3], &[1, 2], &[1, 2, 3]])
        );
        assert_eq!(
            s.insert_leaf(e(&[3]), lab(4)),
            Err(TreeError::NotAnEdge(e(&[3])))
        );
        assert_eq!(s.insert_leaf(e(&[1]), lab(2)), Err(TreeError::DuplicateLabel(2)));
    }

    #[test]
    fn insert_then_delete_round_trips() {
        let s = tree(&[&[1], &[2], &[4], &[1, 4], &[1, 2, 4]]);
        for &e in s.edges() {
            let grown = s.insert_leaf(e, lab(3)).unwrap();
            assert_eq!(grown.delete_leaf(lab(3)).unwrap(), s);
        }
    }

    #[test]
    fn swap_target_examples() {
        let t = tree(&[&[1], &[2], &[3], &[2, 3], &[1, 2, 3]]);
        let st = t.swap_target(lab(3)).unwrap();
        assert_eq!((st.a, st.b, st.i_tilde), (lab(2), Some(lab(1)), lab(3)));
        let st = t.swap_target(lab(1)).unwrap();
        assert_eq!((st.a, st.b, st.i_tilde), (lab(2), None, lab(2)));
    }

    #[test]
    fn swap_target_figure_instance() {
        // A 6-leaf tree where selecting i=3 meets a=1 and b=4, so ĩ=4.
        let t = tree(&[
            &[1],
            &[2],
            &[3],
            &[4],
            &[5],
            &[6],
            &[1, 3],
            &[1, 3, 4],
            &[2, 5],
            &[1, 2, 3, 4, 5],
            &[1, 2, 3, 4, 5, 6],
        ]);
        let st = t.swap_target(lab(3)).unwrap();
        assert_eq!((st.a, st.b), (lab(1), Some(lab(4))));
        assert_eq!(st.i_tilde, lab(4));
    }

    #[test]
    fn spinal_subtrees_partition_labels() {
        let t = tree(&[&[1], &[2], &[3], &[2, 3], &[1, 2, 3]]);
        let e = |ls: &[u32]| EdgeSet::from_labels(ls.iter().map(|&v| lab(v)));
        assert_eq!(t.spinal_subtrees(lab(3)).unwrap(), vec![e(&[2]), e(&[1])]);
        assert_eq!(t.spinal_subtrees(lab(1)).unwrap(), vec![e(&[2, 3])]);
        let t2 = tree(&[&[1], &[2], &[1, 2]]);
        assert_eq!(t2.spinal_subtrees(lab(1)).unwrap(), vec![e(&[2])]);
    }

    #[test]
    fn enumeration_counts() {
        for (n, count) in [(1usize, 1usize), (2, 1), (3, 3), (4, 15), (5, 105)] {
            let trees = enumerate_trees(EdgeSet::first_n(n as u8)).unwrap();
            assert_eq!(trees.len(), count);
            let mut sorted = trees.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), count, "duplicate trees at n={n}");
        }
        assert!(enumerate_trees(EdgeSet::first_n(10)).is_err());
    }

    #[test]
    fn enumeration_matches_three_leaf_listing() {
        let trees = enumerate_trees(EdgeSet::first_n(3)).unwrap();
        let expect = [
            tree(&[&[1], &[2], &[3], &[2, 3], &[1, 2, 3]]),
            tree(&[&[1], &[2], &[3], &[1, 3], &[1, 2, 3]]),
            tree(&[&[1], &[2], &[3], &[1, 2], &[1, 2, 3]]),
        ];
        for e in &expect {
            assert!(trees.contains(e));
        }
    }

    #[test]
    fn rank_relabel_examples() {
        let t = tree(&[&[2], &[5], &[9], &[5, 9], &[2, 5, 9]]);
        assert_eq!(t.rank_relabel(), tree(&[&[1], &[2], &[3], &[2, 3], &[1, 2, 3]]));
        let t2 = tree(&[&[1], &[2], &[1, 2]]);
        assert_eq!(t2.rank_relabel(), t2);
        assert_eq!(Tree::singleton(lab(7)).rank_relabel(), Tree::singleton(lab(1)));
    }

    #[test]
    fn encode_decode_round_trip() {
        let t = tree(&[&[1], &[2], &[3], &[2, 3], &[1, 2, 3]]);
        assert_eq!(t.encode(), "[[1],[2],[3],[2,3],[1,2,3]]");
        assert_eq!(Tree::decode(&t.encode()).unwrap(), t);
        assert_eq!(Tree::decode("[[1]]").unwrap(), Tree::singleton(lab(1)));
        assert!(matches!(Tree::decode("[[1],[3]]"), Err(TreeError::Invariant(_))));
        assert!(matches!(Tree::decode("[[1],[2"), Err(TreeError::Parse(_))));
        assert!(matches!(Tree::decode("[[2,1],[1],[2]]"), Err(TreeError::Parse(_))));
    }

    #[test]
    fn newick_orders_subtrees_by_least_label() {
        assert_eq!(
            tree(&[&[1], &[2], &[3], &[1, 2], &[1, 2, 3]]).to_newick(),
            "((1,2),3);"
        );
        assert_eq!(
            tree(&[&[1], &[2], &[3], &[2, 3], &[1, 2, 3]]).to_newick(),
            "(1,(2,3));"
        );
    }

    #[test]
    fn invalid_edge_lists_are_rejected() {
        let e = |ls: &[u32]| EdgeSet::from_labels(ls.iter().map(|&v| lab(v)));
        // Crossing edges.
        assert!(Tree::from_edges(vec![
            e(&[1]),
            e(&[2]),
            e(&[3]),
            e(&[1, 2]),
            e(&[2, 3]),
            e(&[1, 2, 3])
        ])
        .is_err());
        // Missing singleton.
        assert!(Tree::from_edges(vec![e(&[1]), e(&[1, 2])]).is_err());
        // Ternary root (sibling condition fails).
        assert!(Tree::from_edges(vec![e(&[1]), e(&[2]), e(&[3]), e(&[1, 2, 3])]).is_err());
    }
}
