//! Autonomous down-up chains on decorated `k`-trees.
//!
//! A transition first selects an edge with probability proportional to its
//! mass, then branches on the decoration at that edge: (A) an internal edge
//! or a leaf with spare mass sheds one unit and an up-move adds it back;
//! (B) a bare leaf under a massive parent edge pulls a decrement-law share
//! of the parent mass before the up-move; (C) a bare leaf under a bare
//! parent triggers the label-swap comparison on the shape and a genuine
//! drop/reinsert of the swap target. The uniform chain resamples the same
//! label in place; the alpha chain relabels and reinserts the top label.

use std::collections::BTreeMap;

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::dist::{decrement_pmf, dm3, dm_prob, dm_sample, DistError};
use crate::pmf::{rat, FinitePmf, Rational};
use crate::project::{DecoratedKTree, ProjectError};
use crate::rng::RngStream;
use crate::tree::{EdgeSet, Label, Tree, TreeError};

#[derive(Debug, Error)]
pub enum DecoratedError {
    #[error("chain needs total mass at least 3")]
    MassTooSmall,
    #[error("alpha must lie in (0,1)")]
    AlphaOutOfRange,
    #[error("label {0} cannot be dropped: needs x = 1 and parent mass 0")]
    NotDroppable(u8),
    #[error("the alpha decorated chain needs k < n")]
    KTooLarge,
    #[error("no admissible insertion edge (mass equals leaf count)")]
    NoInsertionMass,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Which decorated chain to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecoratedVariant {
    Uniform,
    Alpha { alpha: Rational },
}

impl DecoratedVariant {
    fn alpha(&self) -> Rational {
        match self {
            DecoratedVariant::Uniform => rat(1, 2),
            DecoratedVariant::Alpha { alpha } => alpha.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveCase {
    A,
    B,
    C,
}

fn from_masses(shape: Tree, m: &BTreeMap<EdgeSet, u64>) -> DecoratedKTree {
    let mass = shape.edges().iter().map(|e| m[e]).collect();
    DecoratedKTree::new_any(shape, mass).expect("move preserves decoration invariants")
}

/// Trace of one decorated transition: the case taken, the mass-selected
/// edge, and the auxiliary draws that applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedMove {
    pub case: MoveCase,
    pub selected_edge: EdgeSet,
    /// Case B: the decrement draw `m`.
    pub decrement: Option<u64>,
    /// Case C: the swap performed on the shape, `(i, ĩ)`.
    pub swap: Option<(Label, Label)>,
    /// The final up-move edge, where the transition ends with an up-move.
    pub target_edge: Option<EdgeSet>,
}

/// Swaps leaf labels `i` and `j` on the shape, with masses following their
/// edges.
fn swap_decorated(
    d: &DecoratedKTree,
    i: Label,
    j: Label,
) -> Result<DecoratedKTree, DecoratedError> {
    let shape = d.shape().swap_labels(i, j)?;
    let swap_set = |e: EdgeSet| {
        let mut out = e.remove(i).remove(j);
        if e.contains(i) {
            out = out.insert(j);
        }
        if e.contains(j) {
            out = out.insert(i);
        }
        out
    };
    let mut m = BTreeMap::new();
    for (&e, &mass) in d.shape().edges().iter().zip(d.masses()) {
        m.insert(swap_set(e), mass);
    }
    Ok(from_masses(shape, &m))
}

fn check_droppable(d: &DecoratedKTree, i: Label) -> Result<EdgeSet, DecoratedError> {
    let leaf = EdgeSet::singleton(i);
    if d.k() < 2 || d.x(i) != 1 {
        return Err(DecoratedError::NotDroppable(i.value()));
    }
    let parent = d.shape().parent(leaf).expect("k >= 2");
    if d.y(parent) != 0 {
        return Err(DecoratedError::NotDroppable(i.value()));
    }
    Ok(parent)
}

/// Removes leaf `i` from the shape without relabeling, dropping its unit
/// mass and its parent's zero mass. Internal step of resampling.
fn drop_leaf_no_relabel(d: &DecoratedKTree, i: Label) -> Result<DecoratedKTree, DecoratedError> {
    let parent = check_droppable(d, i)?;
    let leaf = EdgeSet::singleton(i);
    let shape = d.shape().delete_leaf(i)?;
    let mut m = BTreeMap::new();
    for (&e, &mass) in d.shape().edges().iter().zip(d.masses()) {
        if e == leaf || e == parent {
            continue;
        }
        m.insert(e.remove(i), mass);
    }
    Ok(from_masses(shape, &m))
}

/// Dropping a label: removes leaf `i` (which must carry mass one under a
/// massless parent edge), relabels leaves `i+1..k` down by one, and drops
/// the two spent masses. Total mass decreases by one.
pub fn drop_label(d: &DecoratedKTree, i: Label) -> Result<DecoratedKTree, DecoratedError> {
    let dropped = drop_leaf_no_relabel(d, i)?;
    let shape = dropped.shape().shift_labels_down(i);
    let mut m = BTreeMap::new();
    for (&e, &mass) in dropped.shape().edges().iter().zip(dropped.masses()) {
        let shifted = EdgeSet::from_labels(e.labels().map(|l| {
            if l > i {
                Label::new(l.value() as u32 - 1).unwrap()
            } else {
                l
            }
        }));
        m.insert(shifted, mass);
    }
    Ok(from_masses(shape, &m))
}

/// Builds the decorated tree after inserting leaf `lab` on edge `e`, with
/// the mass at `e` replaced by `below` (on `e`), `above` (on `e ∪ {lab}`)
/// and `leaf` (on `{lab}`); all other masses ride along with their edges.
fn insert_with_masses(
    d: &DecoratedKTree,
    e: EdgeSet,
    lab: Label,
    below: u64,
    above: u64,
    leaf: u64,
) -> Result<DecoratedKTree, DecoratedError> {
    let shape = d.shape().insert_leaf(e, lab)?;
    let mut m = BTreeMap::new();
    for (&e2, &mass) in d.shape().edges().iter().zip(d.masses()) {
        if e2 == e {
            continue;
        }
        let moved = if e.is_subset(e2) { e2.insert(lab) } else { e2 };
        m.insert(moved, mass);
    }
    m.insert(e, below);
    m.insert(e.insert(lab), above);
    m.insert(EdgeSet::singleton(lab), leaf);
    Ok(from_masses(shape, &m))
}

/// Selection weights of the up-move: `x_i - α` on leaf edges, `y_B + α` on
/// internal edges, normalized by `mass - α`.
fn up_weights(d: &DecoratedKTree, alpha: &Rational) -> (Vec<Rational>, Rational) {
    let weights: Vec<Rational> = d
        .shape()
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, &e)| {
            let m = Rational::from(BigInt::from(d.mass_at(idx)));
            if e.len() == 1 {
                m - alpha
            } else {
                m + alpha
            }
        })
        .collect();
    let total = Rational::from(BigInt::from(d.total_mass())) - alpha;
    debug_assert_eq!(weights.iter().sum::<Rational>(), total);
    (weights, total)
}

fn check_alpha(alpha: &Rational) -> Result<(), DecoratedError> {
    use num::Signed;
    if alpha.is_positive() && alpha < &Rational::one() {
        Ok(())
    } else {
        Err(DecoratedError::AlphaOutOfRange)
    }
}

/// Up-move: increments the mass of one edge, drawn with weight `x_i - α`
/// (leaf edges) or `y_B + α` (internal edges).
pub fn up_move(
    d: &DecoratedKTree,
    alpha: &Rational,
    rng: &mut RngStream,
) -> Result<DecoratedKTree, DecoratedError> {
    check_alpha(alpha)?;
    let idx = draw_up_edge(d, alpha, rng);
    Ok(d.with_mass(idx, d.mass_at(idx) + 1))
}

fn draw_up_edge(d: &DecoratedKTree, alpha: &Rational, rng: &mut RngStream) -> usize {
    use num::ToPrimitive;
    let q = alpha.denom().to_u128().expect("small denominator");
    let p = alpha.numer().to_u128().expect("alpha in (0,1)");
    let weights: Vec<u128> = d
        .shape()
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, &e)| {
            let m = d.mass_at(idx) as u128;
            if e.len() == 1 {
                m * q - p
            } else {
                m * q + p
            }
        })
        .collect();
    rng.gen_weighted(&weights)
}

/// Exact outcome law of [`up_move`].
fn up_move_pmf(d: &DecoratedKTree, alpha: &Rational) -> Vec<(DecoratedKTree, Rational)> {
    let (weights, total) = up_weights(d, alpha);
    weights
        .into_iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(idx, w)| (d.with_mass(idx, d.mass_at(idx) + 1), w / &total))
        .collect()
}

/// Inserting the next label into a decorated tree on `k-1` leaves: an edge
/// is selected with probability `(x_i - 1)/(n - k)` or `y_B/(n - k)` and
/// its mass is split three ways by the matching DM kernel.
pub fn insert_label(
    d: &DecoratedKTree,
    alpha: &Rational,
    rng: &mut RngStream,
) -> Result<DecoratedKTree, DecoratedError> {
    check_alpha(alpha)?;
    let new_label = next_free_label(d);
    let weights: Vec<u128> = d
        .shape()
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, &e)| {
            let m = d.mass_at(idx) as u128;
            if e.len() == 1 {
                m - 1
            } else {
                m
            }
        })
        .collect();
    if weights.iter().all(|&w| w == 0) {
        return Err(DecoratedError::NoInsertionMass);
    }
    let idx = rng.gen_weighted(&weights);
    let e = d.shape().edges()[idx];
    let mass = d.mass_at(idx);
    if e.len() == 1 {
        let split = dm_sample(mass - 2, &dm3(alpha), rng)?;
        insert_with_masses(d, e, new_label, split[0] + 1, split[2], split[1] + 1)
    } else {
        let split = dm_sample(mass - 1, &dm3(&(Rational::one() - alpha)), rng)?;
        insert_with_masses(d, e, new_label, split[1], split[0], split[2] + 1)
    }
}

fn next_free_label(d: &DecoratedKTree) -> Label {
    Label::new(d.k() as u32 + 1).expect("label universe")
}

/// Exact outcome law of [`insert_label`].
fn insert_label_pmf(
    d: &DecoratedKTree,
    alpha: &Rational,
) -> Result<Vec<(DecoratedKTree, Rational)>, DecoratedError> {
    let new_label = next_free_label(d);
    let mut selectable = Rational::zero();
    let mut sel_weights = Vec::new();
    for (idx, &e) in d.shape().edges().iter().enumerate() {
        let m = d.mass_at(idx);
        let w = if e.len() == 1 { m - 1 } else { m };
        sel_weights.push(w);
        selectable += Rational::from(BigInt::from(w));
    }
    if selectable.is_zero() {
        return Err(DecoratedError::NoInsertionMass);
    }
    let mut out = Vec::new();
    for (idx, &e) in d.shape().edges().iter().enumerate() {
        if sel_weights[idx] == 0 {
            continue;
        }
        let sel_p = Rational::from(BigInt::from(sel_weights[idx])) / &selectable;
        let mass = d.mass_at(idx);
        if e.len() == 1 {
            let kernel = dm3(alpha);
            for split in splits_of(mass - 2) {
                let p = dm_prob(&split, &kernel)?;
                let next =
                    insert_with_masses(d, e, new_label, split[0] + 1, split[2], split[1] + 1)?;
                out.push((next, &sel_p * p));
            }
        } else {
            let kernel = dm3(&(Rational::one() - alpha));
            for split in splits_of(mass - 1) {
                let p = dm_prob(&split, &kernel)?;
                let next =
                    insert_with_masses(d, e, new_label, split[1], split[0], split[2] + 1)?;
                out.push((next, &sel_p * p));
            }
        }
    }
    Ok(out)
}

fn splits_of(m: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for a in 0..=m {
        for b in 0..=(m - a) {
            out.push(vec![a, b, m - a - b]);
        }
    }
    out
}

/// Resampling label `i` (which must carry mass one under a massless
/// parent): the leaf is detached, a target edge of the remaining shape is
/// drawn with weights `x_j - 1/2` / `y_B + 1/2`, one mass unit is added
/// there and the enlarged mass is split three ways by `DM^{1/2}_3`.
pub fn resample_label(
    d: &DecoratedKTree,
    i: Label,
    rng: &mut RngStream,
) -> Result<DecoratedKTree, DecoratedError> {
    let dropped = drop_leaf_no_relabel(d, i)?;
    let idx = draw_up_edge(&dropped, &rat(1, 2), rng);
    let e = dropped.shape().edges()[idx];
    let mass = dropped.mass_at(idx);
    let kernel = dm3(&rat(1, 2));
    if e.len() == 1 {
        let split = dm_sample(mass - 1, &kernel, rng)?;
        insert_with_masses(&dropped, e, i, split[0] + 1, split[2], split[1] + 1)
    } else {
        let split = dm_sample(mass, &kernel, rng)?;
        insert_with_masses(&dropped, e, i, split[1], split[0], split[2] + 1)
    }
}

/// Exact outcome law of [`resample_label`].
fn resample_label_pmf(
    d: &DecoratedKTree,
    i: Label,
) -> Result<Vec<(DecoratedKTree, Rational)>, DecoratedError> {
    let dropped = drop_leaf_no_relabel(d, i)?;
    let (weights, total) = up_weights(&dropped, &rat(1, 2));
    let kernel = dm3(&rat(1, 2));
    let mut out = Vec::new();
    for (idx, &e) in dropped.shape().edges().iter().enumerate() {
        if weights[idx].is_zero() {
            continue;
        }
        let sel_p = &weights[idx] / &total;
        let mass = dropped.mass_at(idx);
        if e.len() == 1 {
            for split in splits_of(mass - 1) {
                let p = dm_prob(&split, &kernel)?;
                let next =
                    insert_with_masses(&dropped, e, i, split[0] + 1, split[2], split[1] + 1)?;
                out.push((next, &sel_p * p));
            }
        } else {
            for split in splits_of(mass) {
                let p = dm_prob(&split, &kernel)?;
                let next = insert_with_masses(&dropped, e, i, split[1], split[0], split[2] + 1)?;
                out.push((next, &sel_p * p));
            }
        }
    }
    Ok(out)
}

fn classify(d: &DecoratedKTree, idx: usize) -> MoveCase {
    let e = d.shape().edges()[idx];
    if e.len() >= 2 || d.mass_at(idx) >= 2 {
        return MoveCase::A;
    }
    let parent = d.shape().parent(e).expect("bare leaf with k >= 2");
    if d.y(parent) > 0 {
        MoveCase::B
    } else {
        MoveCase::C
    }
}

/// The move case triggered when the edge at `idx` is mass-selected.
pub fn case_of(d: &DecoratedKTree, idx: usize) -> MoveCase {
    classify(d, idx)
}

/// Conditional outcome law of a case-A or case-B move given the selected
/// edge; panics on a case-C selection.
pub(crate) fn non_drop_transition(
    d: &DecoratedKTree,
    idx: usize,
    alpha: &Rational,
) -> Result<Vec<(DecoratedKTree, Rational)>, DecoratedError> {
    let mut out = Vec::new();
    match classify(d, idx) {
        MoveCase::A => {
            let d1 = d.with_mass(idx, d.mass_at(idx) - 1);
            out.extend(up_move_pmf(&d1, alpha));
        }
        MoveCase::B => {
            let selected = d.shape().edges()[idx];
            let parent = d.shape().parent(selected).unwrap();
            let pidx = d.edge_index(parent);
            let y = d.mass_at(pidx);
            for (m, p_m) in decrement_pmf(y, alpha)?.iter() {
                let d1 = d.with_mass(idx, *m).with_mass(pidx, y - m);
                for (next, p_up) in up_move_pmf(&d1, alpha) {
                    out.push((next, p_m * p_up));
                }
            }
        }
        MoveCase::C => panic!("non_drop_transition applied to a case-C selection"),
    }
    Ok(out)
}

fn check_state(d: &DecoratedKTree) -> Result<u64, DecoratedError> {
    let n = d.total_mass();
    if n < 3 {
        return Err(DecoratedError::MassTooSmall);
    }
    Ok(n)
}

/// One transition of the uniform decorated chain, with its trace.
pub fn uniform_decorated_step_traced(
    d: &DecoratedKTree,
    rng: &mut RngStream,
) -> Result<(DecoratedKTree, DecoratedMove), DecoratedError> {
    decorated_step_traced(d, &DecoratedVariant::Uniform, rng)
}

/// One transition of the alpha decorated chain, with its trace.
pub fn alpha_decorated_step_traced(
    d: &DecoratedKTree,
    alpha: &Rational,
    rng: &mut RngStream,
) -> Result<(DecoratedKTree, DecoratedMove), DecoratedError> {
    decorated_step_traced(
        d,
        &DecoratedVariant::Alpha {
            alpha: alpha.clone(),
        },
        rng,
    )
}

pub fn uniform_decorated_step(
    d: &DecoratedKTree,
    rng: &mut RngStream,
) -> Result<DecoratedKTree, DecoratedError> {
    Ok(uniform_decorated_step_traced(d, rng)?.0)
}

pub fn alpha_decorated_step(
    d: &DecoratedKTree,
    alpha: &Rational,
    rng: &mut RngStream,
) -> Result<DecoratedKTree, DecoratedError> {
    Ok(alpha_decorated_step_traced(d, alpha, rng)?.0)
}

pub fn decorated_step(
    d: &DecoratedKTree,
    variant: &DecoratedVariant,
    rng: &mut RngStream,
) -> Result<DecoratedKTree, DecoratedError> {
    Ok(decorated_step_traced(d, variant, rng)?.0)
}

fn decorated_step_traced(
    d: &DecoratedKTree,
    variant: &DecoratedVariant,
    rng: &mut RngStream,
) -> Result<(DecoratedKTree, DecoratedMove), DecoratedError> {
    let n = check_state(d)?;
    let alpha = variant.alpha();
    check_alpha(&alpha)?;
    if matches!(variant, DecoratedVariant::Alpha { .. }) && u64::from(d.k()) >= n {
        return Err(DecoratedError::KTooLarge);
    }
    let sel_weights: Vec<u128> = d.masses().iter().map(|&m| m as u128).collect();
    let idx = rng.gen_weighted(&sel_weights);
    let selected = d.shape().edges()[idx];
    let (next, mv) = match classify(d, idx) {
        MoveCase::A => {
            let d1 = d.with_mass(idx, d.mass_at(idx) - 1);
            let up = draw_up_edge(&d1, &alpha, rng);
            (
                d1.with_mass(up, d1.mass_at(up) + 1),
                DecoratedMove {
                    case: MoveCase::A,
                    selected_edge: selected,
                    decrement: None,
                    swap: None,
                    target_edge: Some(d1.shape().edges()[up]),
                },
            )
        }
        MoveCase::B => {
            let parent = d.shape().parent(selected).unwrap();
            let pidx = d.edge_index(parent);
            let y = d.mass_at(pidx);
            let m = *decrement_pmf(y, &alpha)?.sample(rng);
            let d1 = d.with_mass(idx, m).with_mass(pidx, y - m);
            debug_assert_eq!(d1.total_mass(), n - 1);
            let up = draw_up_edge(&d1, &alpha, rng);
            (
                d1.with_mass(up, d1.mass_at(up) + 1),
                DecoratedMove {
                    case: MoveCase::B,
                    selected_edge: selected,
                    decrement: Some(m),
                    swap: None,
                    target_edge: Some(d1.shape().edges()[up]),
                },
            )
        }
        MoveCase::C => {
            let i = selected.min_label().unwrap();
            let st = d.shape().swap_target(i)?;
            let swapped = swap_decorated(d, st.i, st.i_tilde)?;
            let next = match variant {
                DecoratedVariant::Uniform => resample_label(&swapped, st.i_tilde, rng)?,
                DecoratedVariant::Alpha { alpha } => {
                    let down = drop_label(&swapped, st.i_tilde)?;
                    let inserted = insert_label(&down, alpha, rng)?;
                    up_move(&inserted, alpha, rng)?
                }
            };
            (
                next,
                DecoratedMove {
                    case: MoveCase::C,
                    selected_edge: selected,
                    decrement: None,
                    swap: Some((st.i, st.i_tilde)),
                    target_edge: None,
                },
            )
        }
    };
    assert_eq!(next.total_mass(), n, "transition must conserve total mass");
    Ok((next, mv))
}

/// Exact one-step law of the configured decorated chain from `d`.
pub fn decorated_kernel_row(
    d: &DecoratedKTree,
    variant: &DecoratedVariant,
) -> Result<FinitePmf<DecoratedKTree>, DecoratedError> {
    let n = check_state(d)?;
    let alpha = variant.alpha();
    check_alpha(&alpha)?;
    let n_rat = Rational::from(BigInt::from(n));
    let mut acc: BTreeMap<DecoratedKTree, Rational> = BTreeMap::new();
    let mut add = |state: DecoratedKTree, p: Rational| {
        debug_assert_eq!(state.total_mass(), n);
        *acc.entry(state).or_insert_with(Rational::zero) += p;
    };
    for (idx, &selected) in d.shape().edges().iter().enumerate() {
        if d.mass_at(idx) == 0 {
            continue;
        }
        let sel_p = Rational::from(BigInt::from(d.mass_at(idx))) / &n_rat;
        match classify(d, idx) {
            MoveCase::A | MoveCase::B => {
                for (next, p) in non_drop_transition(d, idx, &alpha)? {
                    add(next, &sel_p * p);
                }
            }
            MoveCase::C => {
                let i = selected.min_label().unwrap();
                let st = d.shape().swap_target(i)?;
                let swapped = swap_decorated(d, st.i, st.i_tilde)?;
                match variant {
                    DecoratedVariant::Uniform => {
                        for (next, p) in resample_label_pmf(&swapped, st.i_tilde)? {
                            add(next, &sel_p * p);
                        }
                    }
                    DecoratedVariant::Alpha { alpha } => {
                        if u64::from(d.k()) >= n {
                            return Err(DecoratedError::KTooLarge);
                        }
                        let down = drop_label(&swapped, st.i_tilde)?;
                        for (mid, p_ins) in insert_label_pmf(&down, alpha)? {
                            for (next, p_up) in up_move_pmf(&mid, alpha) {
                                add(next, &sel_p * &p_ins * p_up);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(FinitePmf::from_accumulated(acc).expect("decorated row sums to one"))
}
