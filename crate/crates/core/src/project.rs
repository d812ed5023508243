//! Projections of an `n`-tree onto the subtree spanned by its first `k`
//! leaves.
//!
//! Three images are supported, in increasing coarseness of what they forget:
//! collapsed trees keep the label sets that fold onto each edge, bead-string
//! trees keep leaf masses plus the fringe masses strung along each internal
//! edge, and decorated trees keep only the total edge masses. Internal
//! structures (the rank-relabeled trees folded onto a single edge) and
//! their reassembly invert the collapsed projection exactly.

use std::collections::BTreeMap;

use num::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::growth::{growth_pmf, sample_tree, GrowthConfig, GrowthError};
use crate::pmf::{FinitePmf, Rational};
use crate::rng::RngStream;
use crate::tree::{enumerate_trees, EdgeSet, Label, Tree, TreeError, ENUMERATION_BOUND};

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("k = {0} out of range 1..={1}")]
    KOutOfRange(u8, u8),
    #[error("state labels must be exactly 1..=n")]
    NotContiguous,
    #[error("leaf masses must be at least one")]
    LeafMassZero,
    #[error("masses vector does not match the shape")]
    MassShapeMismatch,
    #[error("blocks do not form a compatible partition")]
    BadBlocks,
    #[error("bead composition entries must be positive")]
    BadBeads,
    #[error("ranked structure does not fit its block")]
    BadStructure,
    #[error("exact computation needs n <= {ENUMERATION_BOUND}")]
    TooLarge,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

/// Whether a `k`-tree edge is a leaf edge or an internal edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    External,
    Internal,
}

fn require_ntree_any(t: &Tree) -> Result<u8, ProjectError> {
    let n = t.leaf_count() as u8;
    if t.labels() != EdgeSet::first_n(n) {
        return Err(ProjectError::NotContiguous);
    }
    Ok(n)
}

fn check_k(k: u8, n: u8) -> Result<(), ProjectError> {
    if k < 1 || k > n {
        return Err(ProjectError::KOutOfRange(k, n));
    }
    Ok(())
}

fn edge_key(e: EdgeSet) -> String {
    let mut out = String::new();
    for (i, l) in e.labels().enumerate() {
        if i > 0 {
            out.push('-');
        }
        out.push_str(&l.value().to_string());
    }
    out
}

/// A `k`-tree shape with a positive integer mass on every leaf edge and a
/// nonnegative mass on every internal edge; the masses sum to the total
/// mass `n`. Masses are stored aligned with the canonical edge order of the
/// shape (all `k` leaf edges first, then the internal edges).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecoratedKTree {
    shape: Tree,
    mass: Vec<u64>,
}

impl DecoratedKTree {
    pub fn new(shape: Tree, mass: Vec<u64>) -> Result<Self, ProjectError> {
        require_ntree_any(&shape)?;
        Self::new_any(shape, mass)
    }

    /// Constructor that admits shapes on non-contiguous label sets; used
    /// mid-move, when a leaf has been dropped without relabeling.
    pub(crate) fn new_any(shape: Tree, mass: Vec<u64>) -> Result<Self, ProjectError> {
        if mass.len() != shape.edges().len() {
            return Err(ProjectError::MassShapeMismatch);
        }
        for (e, &m) in shape.edges().iter().zip(&mass) {
            if e.len() == 1 && m == 0 {
                return Err(ProjectError::LeafMassZero);
            }
        }
        Ok(DecoratedKTree { shape, mass })
    }

    pub fn shape(&self) -> &Tree {
        &self.shape
    }

    pub fn k(&self) -> u8 {
        self.shape.leaf_count() as u8
    }

    pub fn total_mass(&self) -> u64 {
        self.mass.iter().sum()
    }

    pub fn masses(&self) -> &[u64] {
        &self.mass
    }

    pub fn mass_at(&self, idx: usize) -> u64 {
        self.mass[idx]
    }

    pub fn edge_kind(&self, idx: usize) -> EdgeKind {
        if self.shape.edges()[idx].len() == 1 {
            EdgeKind::External
        } else {
            EdgeKind::Internal
        }
    }

    /// Leaf mass `x_j`.
    pub fn x(&self, j: Label) -> u64 {
        let idx = self
            .shape
            .edges()
            .binary_search(&EdgeSet::singleton(j))
            .expect("leaf edge");
        self.mass[idx]
    }

    /// Internal edge mass `y_B`.
    pub fn y(&self, edge: EdgeSet) -> u64 {
        let idx = self.shape.edges().binary_search(&edge).expect("edge");
        self.mass[idx]
    }

    pub(crate) fn edge_index(&self, edge: EdgeSet) -> usize {
        self.shape.edges().binary_search(&edge).expect("edge")
    }

    pub(crate) fn with_mass(&self, idx: usize, m: u64) -> Self {
        let mut mass = self.mass.clone();
        mass[idx] = m;
        DecoratedKTree {
            shape: self.shape.clone(),
            mass,
        }
    }

    /// The DM coordinate vector of the decoration: `x_j - 1` on the leaf
    /// edges in label order followed by `y_B` on the internal edges in
    /// canonical order.
    pub fn dm_counts(&self) -> Vec<u64> {
        let k = self.k() as usize;
        let mut counts: Vec<u64> = self.mass[..k].iter().map(|&x| x - 1).collect();
        counts.extend_from_slice(&self.mass[k..]);
        counts
    }

    pub fn to_json(&self) -> Value {
        let k = self.k() as usize;
        let mut x = serde_json::Map::new();
        let mut y = serde_json::Map::new();
        for (idx, &e) in self.shape.edges().iter().enumerate() {
            if idx < k {
                x.insert(edge_key(e), json!(self.mass[idx]));
            } else {
                y.insert(edge_key(e), json!(self.mass[idx]));
            }
        }
        json!({
            "shape": serde_json::from_str::<Value>(&self.shape.encode()).unwrap(),
            "x": x,
            "y": y,
        })
    }
}

/// A `k`-tree shape together with the disjoint label sets `π⁻¹(B) ⊆ [n]`
/// collapsing onto each edge; leaf `j ≤ k` always lies in the block of its
/// own leaf edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CollapsedKTree {
    shape: Tree,
    blocks: Vec<EdgeSet>,
}

impl CollapsedKTree {
    pub fn new(shape: Tree, blocks: Vec<EdgeSet>) -> Result<Self, ProjectError> {
        let k = require_ntree_any(&shape)?;
        if blocks.len() != shape.edges().len() {
            return Err(ProjectError::BadBlocks);
        }
        let mut union = EdgeSet::EMPTY;
        let mut count = 0u32;
        for (idx, &b) in blocks.iter().enumerate() {
            let e = shape.edges()[idx];
            if e.len() == 1 && !b.contains(e.min_label().unwrap()) {
                return Err(ProjectError::BadBlocks);
            }
            count += b.len();
            union = union.union(b);
        }
        let n = union.len();
        if count != n || union != EdgeSet::first_n(n as u8) || n < k as u32 {
            return Err(ProjectError::BadBlocks);
        }
        Ok(CollapsedKTree { shape, blocks })
    }

    pub fn shape(&self) -> &Tree {
        &self.shape
    }

    pub fn k(&self) -> u8 {
        self.shape.leaf_count() as u8
    }

    pub fn n(&self) -> u8 {
        self.blocks.iter().fold(0, |acc, b| acc + b.len()) as u8
    }

    pub fn blocks(&self) -> &[EdgeSet] {
        &self.blocks
    }

    /// Forgets block contents to their sizes.
    pub fn to_decorated(&self) -> DecoratedKTree {
        DecoratedKTree {
            shape: self.shape.clone(),
            mass: self.blocks.iter().map(|b| b.len() as u64).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let k = self.k() as usize;
        let mut x = serde_json::Map::new();
        let mut y = serde_json::Map::new();
        for (idx, &e) in self.shape.edges().iter().enumerate() {
            let labels: Vec<u8> = self.blocks[idx].labels().map(Label::value).collect();
            if idx < k {
                x.insert(edge_key(e), json!(labels));
            } else {
                y.insert(edge_key(e), json!(labels));
            }
        }
        json!({
            "shape": serde_json::from_str::<Value>(&self.shape.encode()).unwrap(),
            "x": x,
            "y": y,
        })
    }
}

/// A `k`-tree shape with positive leaf masses and a composition (string of
/// beads, listed root-first) on every internal edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeadedKTree {
    shape: Tree,
    /// Leaf masses indexed by label, `x[j-1] = x_j`.
    x: Vec<u64>,
    /// Compositions aligned with the internal edges in canonical order.
    beads: Vec<Vec<u64>>,
}

impl BeadedKTree {
    pub fn new(shape: Tree, x: Vec<u64>, beads: Vec<Vec<u64>>) -> Result<Self, ProjectError> {
        let k = require_ntree_any(&shape)? as usize;
        if x.len() != k || beads.len() != k.saturating_sub(1) {
            return Err(ProjectError::MassShapeMismatch);
        }
        if x.iter().any(|&m| m == 0) {
            return Err(ProjectError::LeafMassZero);
        }
        if beads.iter().flatten().any(|&b| b == 0) {
            return Err(ProjectError::BadBeads);
        }
        Ok(BeadedKTree { shape, x, beads })
    }

    pub fn shape(&self) -> &Tree {
        &self.shape
    }

    pub fn k(&self) -> u8 {
        self.shape.leaf_count() as u8
    }

    pub fn x(&self, j: Label) -> u64 {
        self.x[j.value() as usize - 1]
    }

    pub fn beads(&self, edge: EdgeSet) -> &[u64] {
        let idx = self.shape.edges().binary_search(&edge).expect("edge");
        &self.beads[idx - self.k() as usize]
    }

    pub fn total_mass(&self) -> u64 {
        self.x.iter().sum::<u64>() + self.beads.iter().flatten().sum::<u64>()
    }

    /// Sums each composition to recover the decorated tree.
    pub fn to_decorated(&self) -> DecoratedKTree {
        let mut mass = self.x.clone();
        mass.extend(self.beads.iter().map(|c| c.iter().sum::<u64>()));
        DecoratedKTree {
            shape: self.shape.clone(),
            mass,
        }
    }

    pub fn to_json(&self) -> Value {
        let k = self.k() as usize;
        let mut x = serde_json::Map::new();
        let mut y = serde_json::Map::new();
        for (idx, &e) in self.shape.edges().iter().enumerate() {
            if idx < k {
                x.insert(edge_key(e), json!(self.x[idx]));
            } else {
                y.insert(edge_key(e), json!(self.beads[idx - k]));
            }
        }
        json!({
            "shape": serde_json::from_str::<Value>(&self.shape.encode()).unwrap(),
            "x": x,
            "y": y,
        })
    }
}

/// The rank-relabeled tree folded onto one `k`-tree edge. On an internal
/// edge the leaf labeled `1` stands for the edge itself, so the structure
/// has one leaf more than the block it came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InternalStructure {
    pub tree: Tree,
    pub kind: EdgeKind,
}

/// `ρ^{•(n)}_k`: pushes the unit mass of every leaf of `t` to the edge of
/// `t ∩ [k]` below its most recent ancestor that meets `[k]`.
pub fn project_mass(t: &Tree, k: u8) -> Result<DecoratedKTree, ProjectError> {
    let n = require_ntree_any(t)?;
    check_k(k, n)?;
    let shape = t.restrict(EdgeSet::first_n(k))?;
    let mut mass = vec![0u64; shape.edges().len()];
    for (idx, b) in project_map(t, k, &shape) {
        mass[idx] += b.len() as u64;
    }
    DecoratedKTree::new(shape, mass)
}

/// `ρ^{⋆(n)}_k`: keeps the label sets `π⁻¹(B)` themselves.
pub fn project_collapsed(t: &Tree, k: u8) -> Result<CollapsedKTree, ProjectError> {
    let n = require_ntree_any(t)?;
    check_k(k, n)?;
    let shape = t.restrict(EdgeSet::first_n(k))?;
    let mut blocks = vec![EdgeSet::EMPTY; shape.edges().len()];
    for (idx, b) in project_map(t, k, &shape) {
        blocks[idx] = blocks[idx].union(b);
    }
    CollapsedKTree::new(shape, blocks)
}

/// The fibers of the projection map `π`, as `(shape edge index, label)`.
fn project_map(t: &Tree, k: u8, shape: &Tree) -> Vec<(usize, EdgeSet)> {
    let klabels = EdgeSet::first_n(k);
    let mut out = Vec::with_capacity(t.leaf_count());
    for j in t.labels().labels() {
        let mut e = EdgeSet::singleton(j);
        while e.intersect(klabels).is_empty() {
            e = t.parent(e).expect("root meets [k]");
        }
        let target = e.intersect(klabels);
        let idx = shape
            .edges()
            .binary_search(&target)
            .expect("projection lands on a shape edge");
        out.push((idx, EdgeSet::singleton(j)));
    }
    out
}

/// `ρ^{∘(n)}_k`: leaf masses plus, per internal edge, the masses of the
/// fringe subtrees hanging along it, in order of increasing distance from
/// the root.
pub fn project_beads(t: &Tree, k: u8) -> Result<BeadedKTree, ProjectError> {
    let n = require_ntree_any(t)?;
    check_k(k, n)?;
    let klabels = EdgeSet::first_n(k);
    let shape = t.restrict(klabels)?;
    // Leaf masses: the size of the largest edge whose trace on [k] is {j}.
    let mut x = Vec::with_capacity(k as usize);
    for j in 1..=k as u32 {
        let j = Label::new(j).unwrap();
        let mut e = EdgeSet::singleton(j);
        while let Some(p) = t.parent(e) {
            if p.intersect(klabels) == EdgeSet::singleton(j) {
                e = p;
            } else {
                break;
            }
        }
        x.push(e.len() as u64);
    }
    // Beads: consecutive size differences along the chain of edges tracing
    // to the same internal shape edge, top (root side) first.
    let mut beads = Vec::new();
    for b in shape.internal_edges() {
        let mut chain: Vec<EdgeSet> = t
            .edges()
            .iter()
            .copied()
            .filter(|c| c.intersect(klabels) == b)
            .collect();
        chain.sort_by(|a, c| c.len().cmp(&a.len()));
        let comp: Vec<u64> = chain
            .windows(2)
            .map(|w| (w[0].len() - w[1].len()) as u64)
            .collect();
        beads.push(comp);
    }
    BeadedKTree::new(shape, x, beads)
}

/// The internal structures of `ρ^{•(n)}_k(t)`, aligned with the shape
/// edges: the restriction of `t` to the block of each edge, rank-relabeled,
/// with the minimum label of an internal edge standing in for the edge
/// itself (it ranks first, hence becomes the leaf labeled `1`).
pub fn internal_structures(t: &Tree, k: u8) -> Result<Vec<InternalStructure>, ProjectError> {
    let c = project_collapsed(t, k)?;
    let mut out = Vec::with_capacity(c.blocks.len());
    for (idx, &e) in c.shape.edges().iter().enumerate() {
        let kind = if e.len() == 1 {
            EdgeKind::External
        } else {
            EdgeKind::Internal
        };
        let carrier = match kind {
            EdgeKind::External => c.blocks[idx],
            EdgeKind::Internal => c.blocks[idx].insert(e.min_label().unwrap()),
        };
        out.push(InternalStructure {
            tree: t.restrict(carrier)?.rank_relabel(),
            kind,
        });
    }
    Ok(out)
}

/// Rebuilds the unique `n`-tree with the given collapsed projection and
/// ranked internal structures (inverse of [`internal_structures`]).
pub fn reassemble(c: &CollapsedKTree, structures: &[Tree]) -> Result<Tree, ProjectError> {
    if structures.len() != c.shape.edges().len() {
        return Err(ProjectError::BadStructure);
    }
    let mut edges: Vec<EdgeSet> = Vec::new();
    for (idx, &b) in c.shape.edges().iter().enumerate() {
        let block: Vec<Label> = c.blocks[idx].labels().collect();
        let s = &structures[idx];
        let mu = block.len();
        let internal = b.len() >= 2;
        let expect_leaves = if internal { mu + 1 } else { mu };
        if s.leaf_count() != expect_leaves
            || s.labels() != EdgeSet::first_n(expect_leaves as u8)
        {
            return Err(ProjectError::BadStructure);
        }
        // Labels strictly below the branch point of `b`: the blocks of all
        // proper descendant edges. Rank 1 of an internal structure unranks
        // to this whole set.
        let below = c
            .shape
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != b && e.is_subset(b))
            .fold(EdgeSet::EMPTY, |acc, (i, _)| acc.union(c.blocks[i]));
        for &se in s.edges() {
            let mut out = EdgeSet::EMPTY;
            for r in se.labels() {
                let r = r.value() as usize;
                if internal {
                    if r == 1 {
                        out = out.union(below);
                    } else {
                        out = out.insert(block[r - 2]);
                    }
                } else {
                    out = out.insert(block[r - 1]);
                }
            }
            edges.push(out);
        }
    }
    Ok(Tree::from_edges(edges)?)
}

fn ford(alpha: &Rational) -> Result<GrowthConfig, ProjectError> {
    Ok(GrowthConfig::ford(alpha.clone())?)
}

fn conditional_law<S, F>(
    n: u8,
    alpha: &Rational,
    project: F,
    target: &S,
) -> Result<FinitePmf<Tree>, ProjectError>
where
    S: PartialEq,
    F: Fn(&Tree) -> Result<S, ProjectError>,
{
    if n as usize > ENUMERATION_BOUND {
        return Err(ProjectError::TooLarge);
    }
    let cfg = ford(alpha)?;
    let mut hits: Vec<(Tree, Rational)> = Vec::new();
    let mut total = Rational::zero();
    for t in enumerate_trees(EdgeSet::first_n(n))? {
        if &project(&t)? == target {
            let q = growth_pmf(&t, &cfg)?;
            total += &q;
            hits.push((t, q));
        }
    }
    if total.is_zero() {
        return Err(ProjectError::BadBlocks);
    }
    let entries = hits.into_iter().map(|(t, q)| (t, q / &total)).collect();
    Ok(FinitePmf::new(entries).expect("conditional law sums to one"))
}

/// `Λ^⋆`: the conditional law `q_{n,α}( · | ρ^⋆ = c)`, supported exactly on
/// the preimage of `c`. Exact (by enumeration) for `n` within the bound.
pub fn lambda_star(c: &CollapsedKTree, alpha: &Rational) -> Result<FinitePmf<Tree>, ProjectError> {
    conditional_law(c.n(), alpha, |t| project_collapsed(t, c.k()), c)
}

/// `Λ^•`: the conditional law `q_{n,α}( · | ρ^• = d)`.
pub fn lambda_bullet(
    d: &DecoratedKTree,
    alpha: &Rational,
) -> Result<FinitePmf<Tree>, ProjectError> {
    let n = d.total_mass() as u8;
    conditional_law(n, alpha, |t| project_mass(t, d.k()), d)
}

/// `Λ^∘`: the conditional law `q_{n,α}( · | ρ^∘ = b)`.
pub fn lambda_beads(b: &BeadedKTree, alpha: &Rational) -> Result<FinitePmf<Tree>, ProjectError> {
    let n = b.total_mass() as u8;
    conditional_law(n, alpha, |t| project_beads(t, b.k()), b)
}

/// Sampling route for `Λ^⋆`, valid for any `n` up to the label universe:
/// draws each internal structure independently from its growth law (plain
/// on leaf edges, modified on internal edges) and reassembles.
pub fn lambda_star_sample(
    c: &CollapsedKTree,
    alpha: &Rational,
    rng: &mut RngStream,
) -> Result<Tree, ProjectError> {
    let plain = ford(alpha)?;
    let modified = if alpha.is_one() || alpha.is_zero() {
        None
    } else {
        Some(GrowthConfig::ford_modified(alpha.clone())?)
    };
    let mut structures = Vec::with_capacity(c.blocks.len());
    for (idx, &e) in c.shape.edges().iter().enumerate() {
        let mu = c.blocks[idx].len() as u8;
        let s = if e.len() == 1 {
            sample_tree(mu, &plain, rng)?
        } else {
            let cfg = modified.as_ref().ok_or(ProjectError::TooLarge)?;
            sample_tree(mu + 1, cfg, rng)?
        };
        structures.push(s);
    }
    reassemble(c, &structures)
}

/// All decorated `k`-trees of total mass `n`, enumerated directly as shapes
/// times weak compositions (leaf coordinates shifted up by one).
pub fn enumerate_decorated(n: u64, k: u8) -> Result<Vec<DecoratedKTree>, ProjectError> {
    if k < 1 || (n as u128) < k as u128 {
        return Err(ProjectError::KOutOfRange(k, n.min(255) as u8));
    }
    let mut out = Vec::new();
    for shape in enumerate_trees(EdgeSet::first_n(k))? {
        let parts = shape.edges().len();
        let mut comp = vec![0u64; parts];
        fill_compositions(&mut comp, 0, n - k as u64, &mut |comp| {
            let mass: Vec<u64> = comp
                .iter()
                .enumerate()
                .map(|(i, &c)| if i < k as usize { c + 1 } else { c })
                .collect();
            out.push(DecoratedKTree {
                shape: shape.clone(),
                mass,
            });
        });
    }
    Ok(out)
}

/// All collapsed `n`-trees with `k` leaves: shapes times assignments of the
/// labels `k+1..n` to edges.
pub fn enumerate_collapsed(n: u8, k: u8) -> Result<Vec<CollapsedKTree>, ProjectError> {
    check_k(k, n)?;
    let mut out = Vec::new();
    for shape in enumerate_trees(EdgeSet::first_n(k))? {
        let base: Vec<EdgeSet> = shape
            .edges()
            .iter()
            .map(|&e| if e.len() == 1 { e } else { EdgeSet::EMPTY })
            .collect();
        let parts = base.len();
        let mut assign = vec![0usize; (n - k) as usize];
        loop {
            let mut blocks = base.clone();
            for (hi, &edge_idx) in assign.iter().enumerate() {
                let label = Label::new(k as u32 + 1 + hi as u32).unwrap();
                blocks[edge_idx] = blocks[edge_idx].insert(label);
            }
            out.push(CollapsedKTree {
                shape: shape.clone(),
                blocks,
            });
            // Odometer over assignments.
            let mut pos = assign.len();
            let mut rolled = true;
            while pos > 0 {
                pos -= 1;
                assign[pos] += 1;
                if assign[pos] < parts {
                    rolled = false;
                    break;
                }
                assign[pos] = 0;
            }
            if rolled {
                break;
            }
        }
    }
    Ok(out)
}

/// All bead-string `k`-trees of total mass `n`: shapes times leaf masses
/// times a composition of each internal edge mass.
pub fn enumerate_beaded(n: u64, k: u8) -> Result<Vec<BeadedKTree>, ProjectError> {
    let mut out = Vec::new();
    for d in enumerate_decorated(n, k)? {
        let kk = d.k() as usize;
        let x = d.mass[..kk].to_vec();
        let comps: Vec<Vec<Vec<u64>>> =
            d.mass[kk..].iter().map(|&y| compositions(y)).collect();
        let mut pick = vec![0usize; comps.len()];
        loop {
            let beads: Vec<Vec<u64>> = pick
                .iter()
                .enumerate()
                .map(|(i, &c)| comps[i][c].clone())
                .collect();
            out.push(BeadedKTree {
                shape: d.shape.clone(),
                x: x.clone(),
                beads,
            });
            let mut pos = pick.len();
            let mut rolled = true;
            while pos > 0 {
                pos -= 1;
                pick[pos] += 1;
                if pick[pos] < comps[pos].len() {
                    rolled = false;
                    break;
                }
                pick[pos] = 0;
            }
            if rolled {
                break;
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// All compositions of `m` (the empty composition for `m = 0`), ordered.
pub fn compositions(m: u64) -> Vec<Vec<u64>> {
    fn rec(left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for first in 1..=left {
            cur.push(first);
            rec(left - first, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, &mut Vec::new(), &mut out);
    out
}

fn fill_compositions(comp: &mut Vec<u64>, pos: usize, left: u64, f: &mut impl FnMut(&Vec<u64>)) {
    if pos + 1 == comp.len() {
        comp[pos] = left;
        f(comp);
        return;
    }
    for c in 0..=left {
        comp[pos] = c;
        fill_compositions(comp, pos + 1, left - c, f);
    }
}

/// Exact pushforward of `q_{n,α}` under a projection of the trees in
/// `𝕋_[n]`.
pub fn pushforward_law<S: Ord>(
    n: u8,
    alpha: &Rational,
    project: impl Fn(&Tree) -> Result<S, ProjectError>,
) -> Result<FinitePmf<S>, ProjectError> {
    if n as usize > ENUMERATION_BOUND {
        return Err(ProjectError::TooLarge);
    }
    let cfg = ford(alpha)?;
    let mut acc: BTreeMap<S, Rational> = BTreeMap::new();
    for t in enumerate_trees(EdgeSet::first_n(n))? {
        let q = growth_pmf(&t, &cfg)?;
        *acc.entry(project(&t)?).or_insert_with(Rational::zero) += q;
    }
    Ok(FinitePmf::from_accumulated(acc).expect("pushforward sums to one"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::rat;

    fn lab(v: u32) -> Label {
        Label::new(v).unwrap()
    }

    fn caterpillar3() -> Tree {
        Tree::decode("[[1],[2],[3],[2,3],[1,2,3]]").unwrap()
    }

    #[test]
    fn mass_projection_hand_example() {
        let d = project_mass(&caterpillar3(), 2).unwrap();
        assert_eq!(d.k(), 2);
        assert_eq!(d.x(lab(1)), 1);
        assert_eq!(d.x(lab(2)), 2);
        assert_eq!(d.y(EdgeSet::first_n(2)), 0);
        assert_eq!(d.total_mass(), 3);
    }

    #[test]
    fn identity_projection_at_k_equals_n() {
        let t = Tree::decode("[[1],[2],[3],[4],[1,2],[1,2,3],[1,2,3,4]]").unwrap();
        let d = project_mass(&t, 4).unwrap();
        assert_eq!(d.shape(), &t);
        for j in 1..=4u32 {
            assert_eq!(d.x(lab(j)), 1);
        }
        for e in t.internal_edges() {
            assert_eq!(d.y(e), 0);
        }
        let c = project_collapsed(&t, 4).unwrap();
        for (idx, &e) in t.edges().iter().enumerate() {
            if e.len() == 1 {
                assert_eq!(c.blocks()[idx], e);
            } else {
                assert!(c.blocks()[idx].is_empty());
            }
        }
        let b = project_beads(&t, 4).unwrap();
        for e in t.internal_edges() {
            assert!(b.beads(e).is_empty());
        }
    }

    #[test]
    fn collapsed_projection_hand_example() {
        let c = project_collapsed(&caterpillar3(), 2).unwrap();
        assert_eq!(c.blocks()[0], EdgeSet::singleton(lab(1)));
        assert_eq!(c.blocks()[1], EdgeSet::from_labels([lab(2), lab(3)]));
        assert!(c.blocks()[2].is_empty());
        assert_eq!(c.to_decorated(), project_mass(&caterpillar3(), 2).unwrap());
    }

    #[test]
    fn beads_projection_hand_example() {
        let b = project_beads(&caterpillar3(), 2).unwrap();
        assert_eq!(b.x(lab(1)), 1);
        assert_eq!(b.x(lab(2)), 2);
        assert!(b.beads(EdgeSet::first_n(2)).is_empty());
    }

    /// A 14-leaf tree assembled to carry the worked bead decoration
    /// x=(1,1,1,3,2), beads {1,4}↦(1), {2,5}↦(), {2,3,5}↦(1,2), [5]↦(2).
    #[test]
    fn beads_projection_worked_decoration() {
        let k5: Vec<&[u32]> = vec![
            &[1],
            &[2],
            &[3],
            &[4],
            &[5],
            &[1, 4],
            &[2, 5],
            &[2, 3, 5],
            &[1, 2, 3, 4, 5],
        ];
        let shape = Tree::from_edges(
            k5.iter()
                .map(|e| EdgeSet::from_labels(e.iter().map(|&v| lab(v))))
                .collect(),
        )
        .unwrap();
        // Grow the 14-tree: attach fringe subtrees by inserting high labels.
        let mut t = shape.clone();
        let e = |ls: &[u32]| EdgeSet::from_labels(ls.iter().map(|&v| lab(v)));
        // x_4 = 3: leaves 6,7 join leaf 4's fringe.
        t = t.insert_leaf(e(&[4]), lab(6)).unwrap();
        t = t.insert_leaf(e(&[4, 6]), lab(7)).unwrap();
        // x_5 = 2: leaf 8 joins leaf 5.
        t = t.insert_leaf(e(&[5]), lab(8)).unwrap();
        // Bead (1) on {1,4}: one fringe leaf on the spine above {1,4,6,7}.
        t = t.insert_leaf(e(&[1, 4, 6, 7]), lab(9)).unwrap();
        // Beads (1,2) on {2,3,5}: a singleton fringe nearer the root (first
        // insert), then a two-leaf fringe below it (second insert lands
        // deeper; leaf 11 grows that fringe to mass two).
        t = t.insert_leaf(e(&[2, 3, 5, 8]), lab(10)).unwrap();
        t = t.insert_leaf(e(&[2, 3, 5, 8]), lab(12)).unwrap();
        t = t.insert_leaf(e(&[12]), lab(11)).unwrap();
        // Bead (2) on the root edge [5].
        let spine_root = t.labels();
        t = t.insert_leaf(spine_root, lab(13)).unwrap();
        t = t.insert_leaf(e(&[13]), lab(14)).unwrap();
        assert_eq!(t.leaf_count(), 14);

        let b = project_beads(&t, 5).unwrap();
        assert_eq!(b.shape(), &shape);
        assert_eq!((b.x(lab(1)), b.x(lab(2)), b.x(lab(3))), (1, 1, 1));
        assert_eq!((b.x(lab(4)), b.x(lab(5))), (3, 2));
        assert_eq!(b.beads(e(&[1, 4])), &[1]);
        assert_eq!(b.beads(e(&[2, 5])), &[] as &[u64]);
        assert_eq!(b.beads(e(&[2, 3, 5])), &[1, 2]);
        assert_eq!(b.beads(e(&[1, 2, 3, 4, 5])), &[2]);
        assert_eq!(b.total_mass(), 14);
        assert_eq!(b.to_decorated(), project_mass(&t, 5).unwrap());
    }

    #[test]
    fn commutation_of_the_three_projections() {
        for n in 2..=6u8 {
            for t in enumerate_trees(EdgeSet::first_n(n)).unwrap() {
                for k in 1..=n {
                    let d = project_mass(&t, k).unwrap();
                    assert_eq!(project_collapsed(&t, k).unwrap().to_decorated(), d);
                    assert_eq!(project_beads(&t, k).unwrap().to_decorated(), d);
                    assert_eq!(d.total_mass(), n as u64);
                }
            }
        }
    }

    #[test]
    fn internal_structure_leaf_counts() {
        for t in enumerate_trees(EdgeSet::first_n(5)).unwrap() {
            for k in 1..=5u8 {
                let c = project_collapsed(&t, k).unwrap();
                let ss = internal_structures(&t, k).unwrap();
                for (idx, s) in ss.iter().enumerate() {
                    let mu = c.blocks()[idx].len() as usize;
                    match s.kind {
                        EdgeKind::External => assert_eq!(s.tree.leaf_count(), mu),
                        EdgeKind::Internal => assert_eq!(s.tree.leaf_count(), mu + 1),
                    }
                }
            }
        }
    }

    #[test]
    fn reassembly_inverts_projection() {
        for t in enumerate_trees(EdgeSet::first_n(5)).unwrap() {
            for k in [1u8, 2, 3, 5] {
                let c = project_collapsed(&t, k).unwrap();
                let ss = internal_structures(&t, k).unwrap();
                let trees: Vec<Tree> = ss.into_iter().map(|s| s.tree).collect();
                assert_eq!(reassemble(&c, &trees).unwrap(), t);
            }
        }
    }

    #[test]
    fn lambda_star_point_mass_at_full_k() {
        let t = caterpillar3();
        let c = project_collapsed(&t, 3).unwrap();
        let pmf = lambda_star(&c, &rat(1, 2)).unwrap();
        assert_eq!(pmf.support_len(), 1);
        assert_eq!(pmf.prob(&t), rat(1, 1));
    }

    #[test]
    fn lambda_star_is_bayes_over_preimage() {
        let cfg = GrowthConfig::uniform();
        let trees = enumerate_trees(EdgeSet::first_n(4)).unwrap();
        for t0 in &trees {
            let c = project_collapsed(t0, 2).unwrap();
            let pmf = lambda_star(&c, &rat(1, 2)).unwrap();
            // Oracle: q(t)/q(preimage), computed straight from the law.
            let mut z = Rational::zero();
            for t in &trees {
                if project_collapsed(t, 2).unwrap() == c {
                    z += growth_pmf(t, &cfg).unwrap();
                }
            }
            for (t, p) in pmf.iter() {
                assert_eq!(project_collapsed(t, 2).unwrap(), c);
                assert_eq!(p.clone(), growth_pmf(t, &cfg).unwrap() / &z);
            }
        }
    }

    #[test]
    fn lambda_tower_property() {
        // Mixing Λ* over the ρ*-pushforward returns q_{n,α}, (n,k) = (5,2).
        let alpha = rat(1, 3);
        let push = pushforward_law(5, &alpha, |t| project_collapsed(t, 2)).unwrap();
        let mut mix: BTreeMap<Tree, Rational> = BTreeMap::new();
        for (c, w) in push.iter() {
            for (t, p) in lambda_star(c, &alpha).unwrap().iter() {
                *mix.entry(t.clone()).or_insert_with(Rational::zero) += w * p;
            }
        }
        let cfg = GrowthConfig::ford(alpha).unwrap();
        for (t, p) in mix {
            assert_eq!(p, growth_pmf(&t, &cfg).unwrap());
        }
    }

    #[test]
    fn lambda_bullet_mixes_lambda_star() {
        // Λ• = Σ_c q(c | ρ• = d) Λ*(c, ·) at (n,k) = (4,2), α = 1/2.
        let alpha = rat(1, 2);
        let trees = enumerate_trees(EdgeSet::first_n(4)).unwrap();
        let d0 = project_mass(&trees[0], 2).unwrap();
        let bullet = lambda_bullet(&d0, &alpha).unwrap();
        let star_push = pushforward_law(4, &alpha, |t| project_collapsed(t, 2)).unwrap();
        let bullet_mass = pushforward_law(4, &alpha, |t| project_mass(t, 2)).unwrap();
        let mut mix: BTreeMap<Tree, Rational> = BTreeMap::new();
        for (c, w) in star_push.iter() {
            if c.to_decorated() != d0 {
                continue;
            }
            let cond = w / bullet_mass.prob(&d0);
            for (t, p) in lambda_star(c, &alpha).unwrap().iter() {
                *mix.entry(t.clone()).or_insert_with(Rational::zero) += p * &cond;
            }
        }
        for (t, p) in mix {
            assert_eq!(bullet.prob(&t), p);
        }
    }

    #[test]
    fn lambda_star_sampling_route_matches_enumeration() {
        use num::ToPrimitive;
        let alpha = rat(1, 3);
        let t =
            Tree::decode("[[1],[2],[3],[4],[5],[4,5],[3,4,5],[2,3,4,5],[1,2,3,4,5]]").unwrap();
        let c = project_collapsed(&t, 2).unwrap();
        let exact = lambda_star(&c, &alpha).unwrap();
        let mut rng = RngStream::new(17, 0);
        let reps = 20000;
        let mut counts: BTreeMap<Tree, u32> = BTreeMap::new();
        for _ in 0..reps {
            *counts
                .entry(lambda_star_sample(&c, &alpha, &mut rng).unwrap())
                .or_default() += 1;
        }
        for (tree, count) in counts {
            let p = exact.prob(&tree).to_f64().unwrap();
            let f = count as f64 / reps as f64;
            assert!(p > 0.0, "sampled outside the preimage");
            assert!((f - p).abs() < 0.02);
        }
    }

    #[test]
    fn enumerated_spaces_match_projection_images() {
        for (n, k) in [(4u8, 2u8), (5, 2), (5, 3)] {
            let trees = enumerate_trees(EdgeSet::first_n(n)).unwrap();
            let mut dec: Vec<_> = trees.iter().map(|t| project_mass(t, k).unwrap()).collect();
            dec.sort();
            dec.dedup();
            let mut enumerated = enumerate_decorated(n as u64, k).unwrap();
            enumerated.sort();
            assert_eq!(dec, enumerated);

            let mut col: Vec<_> = trees
                .iter()
                .map(|t| project_collapsed(t, k).unwrap())
                .collect();
            col.sort();
            col.dedup();
            let mut enumerated = enumerate_collapsed(n, k).unwrap();
            enumerated.sort();
            assert_eq!(col, enumerated);

            let mut bd: Vec<_> = trees.iter().map(|t| project_beads(t, k).unwrap()).collect();
            bd.sort();
            bd.dedup();
            let enumerated = enumerate_beaded(n as u64, k).unwrap();
            assert_eq!(bd, enumerated);
        }
    }

    #[test]
    fn degenerate_k_one() {
        let t = caterpillar3();
        let d = project_mass(&t, 1).unwrap();
        assert_eq!(d.k(), 1);
        assert_eq!(d.x(lab(1)), 3);
        let b = project_beads(&t, 1).unwrap();
        assert_eq!(b.x(lab(1)), 3);
        let c = project_collapsed(&t, 1).unwrap();
        assert_eq!(c.blocks()[0], EdgeSet::first_n(3));
    }

    #[test]
    fn json_forms() {
        let t = caterpillar3();
        let d = project_mass(&t, 2).unwrap();
        assert_eq!(
            d.to_json().to_string(),
            r#"{"shape":[[1],[2],[1,2]],"x":{"1":1,"2":2},"y":{"1-2":0}}"#
        );
        let c = project_collapsed(&t, 2).unwrap();
        assert_eq!(
            c.to_json().to_string(),
            r#"{"shape":[[1],[2],[1,2]],"x":{"1":[1],"2":[2,3]},"y":{"1-2":[]}}"#
        );
        let b = project_beads(&t, 2).unwrap();
        assert_eq!(
            b.to_json().to_string(),
            r#"{"shape":[[1],[2],[1,2]],"x":{"1":1,"2":2},"y":{"1-2":[]}}"#
        );
    }

    #[test]
    fn composition_count_is_power_of_two() {
        for m in 0..=6u64 {
            let expect = if m == 0 { 1 } else { 1usize << (m - 1) };
            assert_eq!(compositions(m).len(), expect);
        }
    }
}
