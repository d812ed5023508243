//! Binary tree growth processes: uniform growth (every edge equally
//! likely), the alpha model (external edges weighted `1-α`, internal edges
//! `α`), and the modified variant in which the external edge `{1}` is
//! weighted `α` like an internal edge. Each process doubles as a sampler
//! and as an exact pmf over trees via the unique insertion history.

use num::{BigInt, One, Signed, Zero};
use thiserror::Error;

use crate::pmf::{rat, Rational};
use crate::rng::RngStream;
use crate::tree::{EdgeSet, Label, Tree, TreeError, MAX_LABEL};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrowthError {
    #[error("alpha must lie in [0,1]")]
    AlphaOutOfRange,
    #[error("the modified process requires alpha in (0,1)")]
    ModifiedAlphaOutOfRange,
    #[error("tree labels must be exactly 1..=m")]
    NotContiguous,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Parameters of a growth process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthConfig {
    alpha: Rational,
    modified: bool,
}

impl GrowthConfig {
    /// Uniform growth, the `α = 1/2` special case.
    pub fn uniform() -> Self {
        GrowthConfig {
            alpha: rat(1, 2),
            modified: false,
        }
    }

    /// Ford's alpha model with `α ∈ [0,1]`.
    pub fn ford(alpha: Rational) -> Result<Self, GrowthError> {
        if alpha.is_negative() || alpha > Rational::one() {
            return Err(GrowthError::AlphaOutOfRange);
        }
        Ok(GrowthConfig {
            alpha,
            modified: false,
        })
    }

    /// The modified process: edge `{1}` grows with weight `α` instead of
    /// `1-α`. Requires `α ∈ (0,1)`.
    pub fn ford_modified(alpha: Rational) -> Result<Self, GrowthError> {
        if !alpha.is_positive() || alpha >= Rational::one() {
            return Err(GrowthError::ModifiedAlphaOutOfRange);
        }
        Ok(GrowthConfig {
            alpha,
            modified: true,
        })
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn is_modified(&self) -> bool {
        self.modified
    }

    /// Growth weight of an edge: `1-α` external, `α` internal, and `α` on
    /// the external edge `{1}` in the modified process.
    pub fn edge_weight(&self, edge: EdgeSet) -> Rational {
        let spine = EdgeSet::singleton(Label::new(1).unwrap());
        if edge.len() >= 2 || (self.modified && edge == spine) {
            self.alpha.clone()
        } else {
            Rational::one() - &self.alpha
        }
    }

    /// Total growth weight of an `m`-leaf tree, `m ≥ 2`: `m - α`, or
    /// `m - 1 + α` for the modified process.
    fn total_weight(&self, m: u64) -> Rational {
        let m = Rational::from(BigInt::from(m));
        if self.modified {
            m - Rational::one() + &self.alpha
        } else {
            m - &self.alpha
        }
    }
}

fn require_contiguous(t: &Tree) -> Result<u8, GrowthError> {
    let m = t.leaf_count() as u8;
    if t.labels() != EdgeSet::first_n(m) {
        return Err(GrowthError::NotContiguous);
    }
    Ok(m)
}

/// One growth step: attaches leaf `m+1` to a tree in `𝕋_[m]` at an edge
/// drawn with the configured weights. The step from the single-leaf tree is
/// deterministic.
pub fn grow_step(t: &Tree, cfg: &GrowthConfig, rng: &mut RngStream) -> Result<Tree, GrowthError> {
    let m = require_contiguous(t)?;
    if m as usize >= MAX_LABEL as usize {
        return Err(GrowthError::Tree(TreeError::LabelOutOfRange(m as u32 + 1)));
    }
    let next = Label::new(m as u32 + 1).unwrap();
    if m == 1 {
        return Ok(t.insert_leaf(t.labels(), next)?);
    }
    // Integer weights over the common denominator of α.
    let weights: Vec<u128> = t
        .edges()
        .iter()
        .map(|&e| {
            let w = cfg.edge_weight(e);
            debug_assert_eq!(cfg.alpha.denom() % w.denom(), BigInt::zero());
            use num::ToPrimitive;
            (w.numer() * (cfg.alpha.denom() / w.denom()))
                .to_u128()
                .expect("small weight")
        })
        .collect();
    let edge = t.edges()[rng.gen_weighted(&weights)];
    Ok(t.insert_leaf(edge, next)?)
}

/// Exact probability that the process produces `t`, as the product of step
/// probabilities along the unique insertion history of `t`.
pub fn growth_pmf(t: &Tree, cfg: &GrowthConfig) -> Result<Rational, GrowthError> {
    let m = require_contiguous(t)?;
    let mut p = Rational::one();
    let mut cur = t.clone();
    for j in (3..=m as u32).rev() {
        let leaf = Label::new(j).unwrap();
        let attach_edge = cur
            .sibling(EdgeSet::singleton(leaf))
            .expect("non-root leaf has a sibling");
        let prev = cur.delete_leaf(leaf)?;
        p *= cfg.edge_weight(attach_edge) / cfg.total_weight(prev.leaf_count() as u64);
        cur = prev;
    }
    Ok(p)
}

/// Samples a tree in `𝕋_[n]` by iterating [`grow_step`] from the singleton.
pub fn sample_tree(n: u8, cfg: &GrowthConfig, rng: &mut RngStream) -> Result<Tree, GrowthError> {
    assert!(n >= 1);
    let mut t = Tree::singleton(Label::new(1).unwrap());
    while t.leaf_count() < n as usize {
        t = grow_step(&t, cfg, rng)?;
    }
    Ok(t)
}
