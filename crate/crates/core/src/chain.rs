//! Down-up chains on `n`-trees.
//!
//! Both chains share the down-move comparison: a uniform leaf `i` is
//! compared with the least labels `a`, `b` of the first two subtrees on its
//! ancestral path, the labels `i` and `ĩ = max{i,a,b}` are swapped, and the
//! leaf now labeled `ĩ` is removed. The uniform chain reinserts the same
//! label `ĩ` at a uniform edge; the alpha chain shifts the higher labels
//! down and regrows leaf `n` by one alpha growth step.

use std::collections::BTreeMap;

use num::{BigInt, One, Signed, Zero};
use thiserror::Error;

use crate::growth::{GrowthConfig, GrowthError};
use crate::pmf::{FinitePmf, Rational};
use crate::rng::RngStream;
use crate::tree::{EdgeSet, Label, Tree, TreeError};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("the chain needs at least 3 leaves, got {0}")]
    TooSmall(usize),
    #[error("alpha must lie in (0,1)")]
    AlphaOutOfRange,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

/// Which `n`-tree chain to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainVariant {
    /// Label-swapping chain with in-place uniform reinsertion.
    Uniform,
    /// Relabeling chain with alpha-growth reinsertion, `α ∈ [0,1]`.
    Alpha { alpha: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NTreeChainConfig {
    pub variant: ChainVariant,
    pub n: u8,
}

fn require_ntree(t: &Tree) -> Result<u8, ChainError> {
    let n = t.leaf_count();
    if n < 3 {
        return Err(ChainError::TooSmall(n));
    }
    if t.labels() != EdgeSet::first_n(n as u8) {
        return Err(ChainError::Tree(TreeError::Invariant(
            "chain states are trees on {1,...,n}",
        )));
    }
    Ok(n as u8)
}

/// The deterministic down-move of the uniform chain given the selected leaf:
/// swap `i` with `ĩ` and delete the leaf now labeled `ĩ`. Returns the tree
/// on `[n] \ {ĩ}` and the removed label.
fn uniform_down(t: &Tree, i: Label) -> Result<(Tree, Label), ChainError> {
    let st = t.swap_target(i)?;
    let swapped = t.swap_labels(st.i, st.i_tilde)?;
    Ok((swapped.delete_leaf(st.i_tilde)?, st.i_tilde))
}

/// One transition of the uniform chain.
pub fn uniform_step(t: &Tree, rng: &mut RngStream) -> Result<Tree, ChainError> {
    let n = require_ntree(t)?;
    let i = Label::new(rng.gen_index(n as u64) as u32 + 1).unwrap();
    let (down, removed) = uniform_down(t, i)?;
    let edges = down.edges();
    let edge = edges[rng.gen_index(edges.len() as u64) as usize];
    Ok(down.insert_leaf(edge, removed)?)
}

/// The deterministic down-move of the alpha chain given the selected leaf:
/// swap, delete `ĩ`, and relabel `ĩ+1..n` down to `ĩ..n-1`.
fn alpha_down(t: &Tree, i: Label) -> Result<Tree, ChainError> {
    let (down, removed) = uniform_down(t, i)?;
    Ok(down.shift_labels_down(removed))
}

/// One transition of the alpha chain.
pub fn alpha_step(t: &Tree, alpha: &Rational, rng: &mut RngStream) -> Result<Tree, ChainError> {
    let n = require_ntree(t)?;
    let cfg = GrowthConfig::ford(alpha.clone())?;
    let i = Label::new(rng.gen_index(n as u64) as u32 + 1).unwrap();
    let down = alpha_down(t, i)?;
    Ok(crate::growth::grow_step(&down, &cfg, rng)?)
}

/// Exact one-step law of the configured chain from `t`.
pub fn kernel_row(t: &Tree, cfg: &NTreeChainConfig) -> Result<FinitePmf<Tree>, ChainError> {
    let n = require_ntree(t)? as u64;
    debug_assert_eq!(n as u8, cfg.n);
    let mut acc: BTreeMap<Tree, Rational> = BTreeMap::new();
    let inv_n = Rational::new(BigInt::one(), BigInt::from(n));
    match &cfg.variant {
        ChainVariant::Uniform => {
            let per_outcome = &inv_n / Rational::from(BigInt::from(2 * n - 3));
            for i in 1..=n as u32 {
                let (down, removed) = uniform_down(t, Label::new(i).unwrap())?;
                for &e in down.edges() {
                    let next = down.insert_leaf(e, removed)?;
                    *acc.entry(next).or_insert_with(Rational::zero) += &per_outcome;
                }
            }
        }
        ChainVariant::Alpha { alpha } => {
            let growth = GrowthConfig::ford(alpha.clone())?;
            let total = Rational::from(BigInt::from(n - 1)) - alpha;
            let top = Label::new(n as u32).unwrap();
            for i in 1..=n as u32 {
                let down = alpha_down(t, Label::new(i).unwrap())?;
                for &e in down.edges() {
                    let p = &inv_n * growth.edge_weight(e) / &total;
                    if p.is_zero() {
                        continue;
                    }
                    let next = down.insert_leaf(e, top)?;
                    *acc.entry(next).or_insert_with(Rational::zero) += p;
                }
            }
        }
    }
    Ok(FinitePmf::from_accumulated(acc).expect("row sums to one"))
}

/// The law of the label removed in the first down-move of a stationary
/// alpha chain (equivalently, the resampled label of the stationary uniform
/// chain at `α = 1/2`):
///
/// `P(Ĩ=ĩ) = (2ĩ-2-α)/(n(n-1-α))` for `3 ≤ ĩ ≤ n` and
/// `P(Ĩ=2) = 2(1-α)/(n(n-1-α))`.
///
/// The `ĩ = 2` weight is pinned by normalization; it reduces to
/// `2/(n(2n-3))` at `α = 1/2`.
pub fn resampled_label_pmf(n: u8, alpha: &Rational) -> Result<FinitePmf<Label>, ChainError> {
    if n < 3 {
        return Err(ChainError::TooSmall(n as usize));
    }
    if !alpha.is_positive() || alpha >= &Rational::one() {
        return Err(ChainError::AlphaOutOfRange);
    }
    let denom = Rational::from(BigInt::from(n))
        * (Rational::from(BigInt::from(n as i64 - 1)) - alpha);
    let mut entries = vec![(
        Label::new(2).unwrap(),
        Rational::from(BigInt::from(2)) * (Rational::one() - alpha) / &denom,
    )];
    for it in 3..=n as i64 {
        entries.push((
            Label::new(it as u32).unwrap(),
            (Rational::from(BigInt::from(2 * it - 2)) - alpha) / &denom,
        ));
    }
    Ok(FinitePmf::new(entries).expect("resampled-label law sums to one"))
}
