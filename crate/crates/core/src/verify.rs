//! Exact-arithmetic verification engine.
//!
//! Builds full transition kernels over enumerated state spaces and checks,
//! in rational arithmetic with zero tolerance: stationarity of the chains,
//! the Kemeny–Snell lumpability criterion, the intertwining identity
//! `ΛP = QΛ`, agreement of the autonomous decorated kernel with the
//! projected kernel, the spatial Markov factorization, the decrement law of
//! the first spinal subtree, three-slice Markovianity of projected chains,
//! and the closed-form laws of resampled and first-dropped labels. A
//! failing check carries the first counterexample in canonical state order.

use std::collections::BTreeMap;
use std::time::Instant;

use num::{BigInt, One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{kernel_row, ChainError, ChainVariant, NTreeChainConfig};
use crate::decorated::{decorated_kernel_row, DecoratedError, DecoratedVariant, MoveCase};
use crate::dist::{decrement_pmf, dm_prob, DistError};
use crate::growth::{growth_pmf, GrowthConfig, GrowthError};
use crate::pmf::{rat, rational_string, FinitePmf, Rational};
use crate::project::{
    enumerate_collapsed, enumerate_decorated, internal_structures, lambda_bullet, lambda_star,
    project_beads, project_collapsed, project_mass, pushforward_law, BeadedKTree, CollapsedKTree,
    DecoratedKTree, EdgeKind, ProjectError,
};
use crate::tree::{enumerate_trees, EdgeSet, Label, Tree, TreeError};

/// Exact kernels refuse to materialize more rational entries than this.
pub const ENTRY_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("kernel row outcome is missing from the codomain space")]
    OutcomeNotInSpace,
    #[error("kernel would exceed the {ENTRY_BUDGET}-entry budget")]
    BudgetExceeded,
    #[error("kernel shapes do not compose")]
    ShapeMismatch,
    #[error("aggregation map must be surjective onto the codomain")]
    NotSurjective,
    #[error("dimension mismatch between law and kernel")]
    DimensionMismatch,
    #[error("the check requires k < n")]
    KTooLarge,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error(transparent)]
    Decorated(#[from] DecoratedError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A canonically ordered, deduplicated list of states with index lookup.
#[derive(Debug, Clone)]
pub struct StateSpace<T: Ord> {
    states: Vec<T>,
}

impl<T: Ord> StateSpace<T> {
    pub fn new(mut states: Vec<T>) -> Self {
        states.sort();
        states.dedup();
        StateSpace { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &T) -> Option<usize> {
        self.states.binary_search(state).ok()
    }

    pub fn get(&self, idx: usize) -> &T {
        &self.states[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.states.iter()
    }
}

/// A row-stochastic matrix with exact rational entries, stored sparsely.
#[derive(Debug, Clone)]
pub struct StochasticKernel {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, Rational)>>,
}

impl StochasticKernel {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[(usize, Rational)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> Rational {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => self.rows[i][pos].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    fn from_rows(
        nrows: usize,
        ncols: usize,
        rows: Vec<Vec<(usize, Rational)>>,
    ) -> Result<Self, VerifyError> {
        debug_assert_eq!(rows.len(), nrows);
        for row in &rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            let total: Rational = row.iter().map(|(_, p)| p.clone()).sum();
            if !total.is_one() || row.iter().any(|(_, p)| p.is_negative()) {
                return Err(VerifyError::OutcomeNotInSpace);
            }
        }
        Ok(StochasticKernel { nrows, ncols, rows })
    }

    /// Builds a kernel row by row in parallel, resolving outcomes to
    /// codomain indices and enforcing row stochasticity and the entry
    /// budget.
    pub fn build<T, U, F>(
        domain: &StateSpace<T>,
        codomain: &StateSpace<U>,
        row_fn: F,
    ) -> Result<Self, VerifyError>
    where
        T: Ord + Sync,
        U: Ord + Sync,
        F: Fn(&T) -> Result<FinitePmf<U>, VerifyError> + Sync,
    {
        let rows: Vec<Result<Vec<(usize, Rational)>, VerifyError>> = domain
            .states
            .par_iter()
            .map(|state| {
                let pmf = row_fn(state)?;
                let mut row = Vec::with_capacity(pmf.support_len());
                for (outcome, p) in pmf.into_entries() {
                    let j = codomain
                        .index_of(&outcome)
                        .ok_or(VerifyError::OutcomeNotInSpace)?;
                    row.push((j, p));
                }
                row.sort_by_key(|e| e.0);
                Ok(row)
            })
            .collect();
        let mut out = Vec::with_capacity(rows.len());
        let mut max_support = 0usize;
        for row in rows {
            let row = row?;
            max_support = max_support.max(row.len());
            if domain.len() as u64 * max_support as u64 > ENTRY_BUDGET {
                return Err(VerifyError::BudgetExceeded);
            }
            out.push(row);
        }
        StochasticKernel::from_rows(domain.len(), codomain.len(), out)
    }

    /// The deterministic kernel of a map `g`, i.e. `1{g(x) = y}`.
    pub fn deterministic(g: &[usize], ncols: usize) -> Result<Self, VerifyError> {
        if g.iter().any(|&y| y >= ncols) {
            return Err(VerifyError::ShapeMismatch);
        }
        let rows = g.iter().map(|&y| vec![(y, Rational::one())]).collect();
        StochasticKernel::from_rows(g.len(), ncols, rows)
    }

    /// Matrix product of two kernels.
    pub fn compose(&self, other: &StochasticKernel) -> Result<Self, VerifyError> {
        if self.ncols != other.nrows {
            return Err(VerifyError::ShapeMismatch);
        }
        let rows: Vec<Vec<(usize, Rational)>> = self
            .rows
            .par_iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
                for (mid, p) in row {
                    for (j, q) in &other.rows[*mid] {
                        *acc.entry(*j).or_insert_with(Rational::zero) += p * q;
                    }
                }
                acc.into_iter().filter(|(_, p)| !p.is_zero()).collect()
            })
            .collect();
        StochasticKernel::from_rows(self.nrows, other.ncols, rows)
    }

    /// Aggregates columns along a map `g`, i.e. the product with the
    /// deterministic kernel of `g`.
    pub fn aggregate(&self, g: &[usize], ncols: usize) -> Result<Self, VerifyError> {
        if g.len() != self.ncols || g.iter().any(|&y| y >= ncols) {
            return Err(VerifyError::ShapeMismatch);
        }
        let rows: Vec<Vec<(usize, Rational)>> = self
            .rows
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
                for (j, p) in row {
                    *acc.entry(g[*j]).or_insert_with(Rational::zero) += p;
                }
                acc.into_iter().collect()
            })
            .collect();
        StochasticKernel::from_rows(self.nrows, ncols, rows)
    }

    pub fn equals(&self, other: &StochasticKernel) -> bool {
        self.nrows == other.nrows && self.ncols == other.ncols && self.rows == other.rows
    }

    /// First differing entry between two kernels of the same shape.
    pub fn first_difference(&self, other: &StochasticKernel) -> Option<(usize, usize)> {
        for i in 0..self.nrows {
            let mut cols: Vec<usize> = self.rows[i].iter().map(|e| e.0).collect();
            cols.extend(other.rows[i].iter().map(|e| e.0));
            cols.sort();
            cols.dedup();
            for j in cols {
                if self.entry(i, j) != other.entry(i, j) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Left action `π ↦ πK`.
pub fn vec_times_kernel(pi: &[Rational], k: &StochasticKernel) -> Result<Vec<Rational>, VerifyError> {
    if pi.len() != k.nrows {
        return Err(VerifyError::DimensionMismatch);
    }
    let mut out = vec![Rational::zero(); k.ncols];
    for (i, p) in pi.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        for (j, q) in k.row(i) {
            out[*j] += p * q;
        }
    }
    Ok(out)
}

/// Outcome of one exact check.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: BTreeMap<String, String>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub wall_time_ms: u128,
}

/// A reproducible witness of a failed identity: where it failed and the two
/// rational values that differ.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub location: String,
    pub lhs: String,
    pub rhs: String,
}

impl VerificationReport {
    fn finish(
        check: &str,
        params: BTreeMap<String, String>,
        counterexample: Option<Counterexample>,
        started: Instant,
    ) -> Self {
        VerificationReport {
            check: check.to_string(),
            params,
            pass: counterexample.is_none(),
            counterexample,
            wall_time_ms: started.elapsed().as_millis(),
        }
    }

    /// Wraps a report whose failure is the documented expectation: the
    /// outer report passes exactly when the inner check failed.
    pub fn expect_failure(inner: VerificationReport) -> Self {
        let pass = !inner.pass;
        VerificationReport {
            check: format!("{}-expected-failure", inner.check),
            params: inner.params,
            pass,
            counterexample: if pass {
                None
            } else {
                Some(Counterexample {
                    location: "the inner check passed although the identity should fail".into(),
                    lhs: "pass".into(),
                    rhs: "expected fail".into(),
                })
            },
            wall_time_ms: inner.wall_time_ms,
        }
    }
}

fn params(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

// ---------------------------------------------------------------------------
// Space and kernel constructors shared by the checks.
// ---------------------------------------------------------------------------

pub fn tree_space(n: u8) -> Result<StateSpace<Tree>, VerifyError> {
    Ok(StateSpace::new(enumerate_trees(EdgeSet::first_n(n))?))
}

pub fn decorated_space(n: u64, k: u8) -> Result<StateSpace<DecoratedKTree>, VerifyError> {
    Ok(StateSpace::new(enumerate_decorated(n, k)?))
}

pub fn collapsed_space(n: u8, k: u8) -> Result<StateSpace<CollapsedKTree>, VerifyError> {
    Ok(StateSpace::new(enumerate_collapsed(n, k)?))
}

/// The exact kernel of the uniform or alpha chain on `𝕋_[n]`.
pub fn ntree_kernel(
    space: &StateSpace<Tree>,
    variant: &ChainVariant,
) -> Result<StochasticKernel, VerifyError> {
    let n = space.get(0).leaf_count() as u8;
    let cfg = NTreeChainConfig {
        variant: variant.clone(),
        n,
    };
    StochasticKernel::build(space, space, |t| Ok(kernel_row(t, &cfg)?))
}

/// The exact kernel of a decorated chain over its enumerated state space.
pub fn decorated_kernel(
    space: &StateSpace<DecoratedKTree>,
    variant: &DecoratedVariant,
) -> Result<StochasticKernel, VerifyError> {
    StochasticKernel::build(space, space, |d| Ok(decorated_kernel_row(d, variant)?))
}

fn chain_alpha(variant: &ChainVariant) -> Rational {
    match variant {
        ChainVariant::Uniform => rat(1, 2),
        ChainVariant::Alpha { alpha } => alpha.clone(),
    }
}

/// The stationary law of the chain on `𝕋_[n]` as a dense vector over the
/// space: uniform for the uniform chain, `q_{n,α}` for the alpha chain.
pub fn stationary_tree_law(
    space: &StateSpace<Tree>,
    variant: &ChainVariant,
) -> Result<Vec<Rational>, VerifyError> {
    match variant {
        ChainVariant::Uniform => {
            let p = Rational::new(BigInt::one(), BigInt::from(space.len()));
            Ok(vec![p; space.len()])
        }
        ChainVariant::Alpha { alpha } => {
            let cfg = GrowthConfig::ford(alpha.clone())?;
            space
                .iter()
                .map(|t| Ok(growth_pmf(t, &cfg)?))
                .collect::<Result<Vec<_>, VerifyError>>()
        }
    }
}

fn dense_law<T: Ord>(
    space: &StateSpace<T>,
    pmf: &FinitePmf<T>,
) -> Result<Vec<Rational>, VerifyError> {
    let mut out = vec![Rational::zero(); space.len()];
    for (state, p) in pmf.iter() {
        let idx = space.index_of(state).ok_or(VerifyError::OutcomeNotInSpace)?;
        out[idx] = p.clone();
    }
    Ok(out)
}

/// The conditioning kernel `Λ^⋆` from collapsed states to trees.
pub fn lambda_star_kernel(
    collapsed: &StateSpace<CollapsedKTree>,
    trees: &StateSpace<Tree>,
    alpha: &Rational,
) -> Result<StochasticKernel, VerifyError> {
    StochasticKernel::build(collapsed, trees, |c| Ok(lambda_star(c, alpha)?))
}

/// The conditioning kernel `Λ^•` from decorated states to trees.
pub fn lambda_bullet_kernel(
    decorated: &StateSpace<DecoratedKTree>,
    trees: &StateSpace<Tree>,
    alpha: &Rational,
) -> Result<StochasticKernel, VerifyError> {
    StochasticKernel::build(decorated, trees, |d| Ok(lambda_bullet(d, alpha)?))
}

fn projection_to_collapsed(
    trees: &StateSpace<Tree>,
    collapsed: &StateSpace<CollapsedKTree>,
    k: u8,
) -> Result<Vec<usize>, VerifyError> {
    trees
        .iter()
        .map(|t| {
            collapsed
                .index_of(&project_collapsed(t, k)?)
                .ok_or(VerifyError::OutcomeNotInSpace)
        })
        .collect()
}

fn projection_to_decorated(
    trees: &StateSpace<Tree>,
    decorated: &StateSpace<DecoratedKTree>,
    k: u8,
) -> Result<Vec<usize>, VerifyError> {
    trees
        .iter()
        .map(|t| {
            decorated
                .index_of(&project_mass(t, k)?)
                .ok_or(VerifyError::OutcomeNotInSpace)
        })
        .collect()
}

/// The induced kernel on collapsed trees, `Q = Λ^⋆ P g^⋆`.
pub fn collapsed_chain_kernel(n: u8, k: u8) -> Result<StochasticKernel, VerifyError> {
    let trees = tree_space(n)?;
    let collapsed = collapsed_space(n, k)?;
    let lambda = lambda_star_kernel(&collapsed, &trees, &rat(1, 2))?;
    let p = ntree_kernel(&trees, &ChainVariant::Uniform)?;
    let g = projection_to_collapsed(&trees, &collapsed, k)?;
    lambda.compose(&p)?.aggregate(&g, collapsed.len())
}

// ---------------------------------------------------------------------------
// Generic criteria.
// ---------------------------------------------------------------------------

/// Exact stationarity: passes iff `πK = π` entry for entry.
pub fn check_stationary(
    check: &str,
    parameters: BTreeMap<String, String>,
    pi: &[Rational],
    kernel: &StochasticKernel,
    render: impl Fn(usize) -> String,
) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let image = vec_times_kernel(pi, kernel)?;
    let total: Rational = pi.iter().sum();
    let mut counterexample = None;
    if !total.is_one() {
        counterexample = Some(Counterexample {
            location: "law total".into(),
            lhs: rational_string(&total),
            rhs: "1".into(),
        });
    }
    if counterexample.is_none() {
        for (idx, (a, b)) in image.iter().zip(pi).enumerate() {
            if a != b {
                counterexample = Some(Counterexample {
                    location: render(idx),
                    lhs: rational_string(a),
                    rhs: rational_string(b),
                });
                break;
            }
        }
    }
    Ok(VerificationReport::finish(check, parameters, counterexample, started))
}

/// Kemeny–Snell lumpability of `kernel` along the surjection `g`: the
/// aggregated rows must agree within every fiber. On pass also returns the
/// induced kernel on the image space.
pub fn check_kemeny_snell(
    check: &str,
    parameters: BTreeMap<String, String>,
    kernel: &StochasticKernel,
    g: &[usize],
    ncols: usize,
    render: impl Fn(usize) -> String,
) -> Result<(VerificationReport, Option<StochasticKernel>), VerifyError> {
    let started = Instant::now();
    if g.len() != kernel.nrows() {
        return Err(VerifyError::ShapeMismatch);
    }
    let aggregated = kernel.aggregate(g, ncols)?;
    let mut representative: Vec<Option<usize>> = vec![None; ncols];
    for (x, &y) in g.iter().enumerate() {
        if representative[y].is_none() {
            representative[y] = Some(x);
        }
    }
    if representative.iter().any(Option::is_none) {
        return Err(VerifyError::NotSurjective);
    }
    let mut counterexample = None;
    'outer: for (x, &y) in g.iter().enumerate() {
        let x0 = representative[y].expect("surjectivity checked above");
        if x0 == x || aggregated.row(x0) == aggregated.row(x) {
            continue;
        }
        let mut cols: Vec<usize> = aggregated.row(x0).iter().map(|e| e.0).collect();
        cols.extend(aggregated.row(x).iter().map(|e| e.0));
        cols.sort();
        cols.dedup();
        for j in cols {
            let a = aggregated.entry(x0, j);
            let b = aggregated.entry(x, j);
            if a != b {
                counterexample = Some(Counterexample {
                    location: format!(
                        "states {} and {} in the same fiber, target column {j}",
                        render(x0),
                        render(x)
                    ),
                    lhs: rational_string(&a),
                    rhs: rational_string(&b),
                });
                break 'outer;
            }
        }
    }
    let induced = if counterexample.is_none() {
        let rows = representative
            .iter()
            .map(|x| aggregated.row(x.unwrap()).to_vec())
            .collect();
        Some(StochasticKernel::from_rows(ncols, ncols, rows)?)
    } else {
        None
    };
    Ok((
        VerificationReport::finish(check, parameters, counterexample, started),
        induced,
    ))
}

/// The intertwining identity `ΛP = QΛ` as an exact matrix equation.
pub fn check_intertwining(
    check: &str,
    parameters: BTreeMap<String, String>,
    lambda: &StochasticKernel,
    p: &StochasticKernel,
    q: &StochasticKernel,
) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let lhs = lambda.compose(p)?;
    let rhs = q.compose(lambda)?;
    if lhs.nrows() != rhs.nrows() || lhs.ncols() != rhs.ncols() {
        return Err(VerifyError::ShapeMismatch);
    }
    let counterexample = lhs.first_difference(&rhs).map(|(i, j)| Counterexample {
        location: format!("entry ({i}, {j})"),
        lhs: rational_string(&lhs.entry(i, j)),
        rhs: rational_string(&rhs.entry(i, j)),
    });
    Ok(VerificationReport::finish(check, parameters, counterexample, started))
}

// ---------------------------------------------------------------------------
// Named checks over the chains of this crate.
// ---------------------------------------------------------------------------

fn variant_params(n: u8, variant: &ChainVariant) -> BTreeMap<String, String> {
    match variant {
        ChainVariant::Uniform => params(&[("n", n.to_string()), ("chain", "uniform".into())]),
        ChainVariant::Alpha { alpha } => params(&[
            ("n", n.to_string()),
            ("chain", "alpha".into()),
            ("alpha", rational_string(alpha)),
        ]),
    }
}

/// Stationarity of the uniform or alpha chain on `𝕋_[n]`.
pub fn verify_stationarity(n: u8, variant: &ChainVariant) -> Result<VerificationReport, VerifyError> {
    let space = tree_space(n)?;
    let kernel = ntree_kernel(&space, variant)?;
    let pi = stationary_tree_law(&space, variant)?;
    check_stationary(
        "stationarity",
        variant_params(n, variant),
        &pi,
        &kernel,
        |i| space.get(i).encode(),
    )
}

/// Stationarity of a decorated chain against the pushforward of the tree
/// law under `ρ^•`.
pub fn verify_decorated_stationarity(
    n: u8,
    k: u8,
    variant: &DecoratedVariant,
) -> Result<VerificationReport, VerifyError> {
    let alpha = match variant {
        DecoratedVariant::Uniform => rat(1, 2),
        DecoratedVariant::Alpha { alpha } => alpha.clone(),
    };
    let space = decorated_space(n as u64, k)?;
    let kernel = decorated_kernel(&space, variant)?;
    let push = pushforward_law(n, &alpha, |t| project_mass(t, k))?;
    let pi = dense_law(&space, &push)?;
    let mut ps = params(&[("n", n.to_string()), ("k", k.to_string())]);
    ps.insert(
        "chain".into(),
        match variant {
            DecoratedVariant::Uniform => "dec-uniform".into(),
            DecoratedVariant::Alpha { .. } => "dec-alpha".into(),
        },
    );
    if let DecoratedVariant::Alpha { alpha } = variant {
        ps.insert("alpha".into(), rational_string(alpha));
    }
    check_stationary("stationarity", ps, &pi, &kernel, |i| {
        space.get(i).to_json().to_string()
    })
}

/// Consistency: the autonomous decorated kernel equals `Λ^• P g^•` exactly,
/// and the pushforward law is invariant for it.
pub fn verify_consistency(
    n: u8,
    k: u8,
    variant: &ChainVariant,
) -> Result<Vec<VerificationReport>, VerifyError> {
    let started = Instant::now();
    let alpha = chain_alpha(variant);
    let trees = tree_space(n)?;
    let decorated = decorated_space(n as u64, k)?;
    let lambda = lambda_bullet_kernel(&decorated, &trees, &alpha)?;
    let p = ntree_kernel(&trees, variant)?;
    let g = projection_to_decorated(&trees, &decorated, k)?;
    let induced = lambda.compose(&p)?.aggregate(&g, decorated.len())?;
    let dec_variant = match variant {
        ChainVariant::Uniform => DecoratedVariant::Uniform,
        ChainVariant::Alpha { alpha } => DecoratedVariant::Alpha {
            alpha: alpha.clone(),
        },
    };
    let direct = decorated_kernel(&decorated, &dec_variant)?;
    let mut ps = variant_params(n, variant);
    ps.insert("k".into(), k.to_string());
    let counterexample = direct.first_difference(&induced).map(|(i, j)| Counterexample {
        location: format!(
            "row {} -> column {}",
            decorated.get(i).to_json(),
            decorated.get(j).to_json()
        ),
        lhs: rational_string(&direct.entry(i, j)),
        rhs: rational_string(&induced.entry(i, j)),
    });
    let kernel_report =
        VerificationReport::finish("consistency-kernel", ps.clone(), counterexample, started);
    let push = pushforward_law(n, &alpha, |t| project_mass(t, k))?;
    let pi = dense_law(&decorated, &push)?;
    let stat_report = check_stationary("consistency-stationarity", ps, &pi, &direct, |i| {
        decorated.get(i).to_json().to_string()
    })?;
    Ok(vec![kernel_report, stat_report])
}

/// Kemeny–Snell for the collapsed chain aggregated to decorated trees.
pub fn verify_kemeny_snell(
    n: u8,
    k: u8,
) -> Result<(VerificationReport, Option<StochasticKernel>), VerifyError> {
    let collapsed = collapsed_space(n, k)?;
    let decorated = decorated_space(n as u64, k)?;
    let kernel = collapsed_chain_kernel(n, k)?;
    let g: Vec<usize> = collapsed
        .iter()
        .map(|c| {
            decorated
                .index_of(&c.to_decorated())
                .ok_or(VerifyError::OutcomeNotInSpace)
        })
        .collect::<Result<_, _>>()?;
    check_kemeny_snell(
        "kemeny-snell",
        params(&[("n", n.to_string()), ("k", k.to_string())]),
        &kernel,
        &g,
        decorated.len(),
        |i| collapsed.get(i).to_json().to_string(),
    )
}

/// The documented negative control: the uniform chain aggregated directly
/// along `ρ^•` is NOT lumpable. Passes when the direct criterion fails.
pub fn verify_kemeny_snell_direct_negative(
    n: u8,
    k: u8,
) -> Result<VerificationReport, VerifyError> {
    let trees = tree_space(n)?;
    let decorated = decorated_space(n as u64, k)?;
    let kernel = ntree_kernel(&trees, &ChainVariant::Uniform)?;
    let g = projection_to_decorated(&trees, &decorated, k)?;
    let (inner, _) = check_kemeny_snell(
        "kemeny-snell-direct",
        params(&[("n", n.to_string()), ("k", k.to_string())]),
        &kernel,
        &g,
        decorated.len(),
        |i| trees.get(i).encode(),
    )?;
    Ok(VerificationReport::expect_failure(inner))
}

/// Intertwining `Λ^⋆ P = Q Λ^⋆` for the uniform chain over collapsed trees.
pub fn verify_intertwining(n: u8, k: u8) -> Result<VerificationReport, VerifyError> {
    let trees = tree_space(n)?;
    let collapsed = collapsed_space(n, k)?;
    let lambda = lambda_star_kernel(&collapsed, &trees, &rat(1, 2))?;
    let p = ntree_kernel(&trees, &ChainVariant::Uniform)?;
    let q = collapsed_chain_kernel(n, k)?;
    check_intertwining(
        "intertwining",
        params(&[("n", n.to_string()), ("k", k.to_string())]),
        &lambda,
        &p,
        &q,
    )
}

/// The induction step behind intertwining: `Λ P² g = (Λ P g)²`.
pub fn verify_intertwining_power(n: u8, k: u8) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let trees = tree_space(n)?;
    let collapsed = collapsed_space(n, k)?;
    let lambda = lambda_star_kernel(&collapsed, &trees, &rat(1, 2))?;
    let p = ntree_kernel(&trees, &ChainVariant::Uniform)?;
    let g = projection_to_collapsed(&trees, &collapsed, k)?;
    let q = collapsed_chain_kernel(n, k)?;
    let two_step = lambda
        .compose(&p)?
        .compose(&p)?
        .aggregate(&g, collapsed.len())?;
    let q_squared = q.compose(&q)?;
    let counterexample = two_step
        .first_difference(&q_squared)
        .map(|(i, j)| Counterexample {
            location: format!("entry ({i}, {j})"),
            lhs: rational_string(&two_step.entry(i, j)),
            rhs: rational_string(&q_squared.entry(i, j)),
        });
    Ok(VerificationReport::finish(
        "intertwining-power",
        params(&[("n", n.to_string()), ("k", k.to_string())]),
        counterexample,
        started,
    ))
}

/// Spatial Markov factorization: conditioned on a collapsed state, the
/// internal structures are independent with plain/modified growth laws.
pub fn verify_spatial_markov(n: u8, k: u8, alpha: &Rational) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let ps = params(&[
        ("n", n.to_string()),
        ("k", k.to_string()),
        ("alpha", rational_string(alpha)),
    ]);
    let plain = GrowthConfig::ford(alpha.clone())?;
    let modified = GrowthConfig::ford_modified(alpha.clone())?;
    let trees = enumerate_trees(EdgeSet::first_n(n))?;
    let mut by_collapsed: BTreeMap<CollapsedKTree, Vec<(Tree, Rational)>> = BTreeMap::new();
    for t in trees {
        let q = growth_pmf(&t, &plain)?;
        by_collapsed
            .entry(project_collapsed(&t, k)?)
            .or_default()
            .push((t, q));
    }
    let mut counterexample = None;
    'outer: for (c, pre) in by_collapsed {
        let z: Rational = pre.iter().map(|(_, q)| q.clone()).sum();
        let mut product_total = Rational::zero();
        for (t, q) in &pre {
            let mut product = Rational::one();
            for s in internal_structures(t, k)? {
                product *= match s.kind {
                    EdgeKind::External => growth_pmf(&s.tree, &plain)?,
                    EdgeKind::Internal => growth_pmf(&s.tree, &modified)?,
                };
            }
            product_total += &product;
            if q / &z != product {
                counterexample = Some(Counterexample {
                    location: format!("collapsed {} tree {}", c.to_json(), t.encode()),
                    lhs: rational_string(&(q / &z)),
                    rhs: rational_string(&product),
                });
                break 'outer;
            }
        }
        if !product_total.is_one() {
            counterexample = Some(Counterexample {
                location: format!("collapsed {} product law total", c.to_json()),
                lhs: rational_string(&product_total),
                rhs: "1".into(),
            });
            break;
        }
    }
    Ok(VerificationReport::finish("spatial-markov", ps, counterexample, started))
}

/// Decrement law: the first spinal subtree above leaf `1` of a
/// modified-growth tree whose spine carries total mass `n` (a tree with
/// `n+1` leaves) has mass law `δ_α(n:·)`, and given that mass the two
/// sides of the spine are independent with plain/modified growth laws.
///
/// The spinal composition of a tree with `n+1` leaves totals `n`, which is
/// the argument the decrement matrix takes; the same convention makes the
/// case-B draw of the decorated chains use `δ_α(y_parent:·)` for an
/// internal structure with `y_parent + 1` leaves.
pub fn verify_decrement(n: u8, alpha: &Rational) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let ps = params(&[("n", n.to_string()), ("alpha", rational_string(alpha))]);
    let plain = GrowthConfig::ford(alpha.clone())?;
    let modified = GrowthConfig::ford_modified(alpha.clone())?;
    let one = Label::new(1).unwrap();
    let leaves = n as u32 + 1;
    let mut mass_tally: BTreeMap<u64, Rational> = BTreeMap::new();
    let mut joint: BTreeMap<(u64, Tree, Tree), Rational> = BTreeMap::new();
    for t in enumerate_trees(EdgeSet::first_n(leaves as u8))? {
        let q = growth_pmf(&t, &modified)?;
        let u_edge = t.sibling(EdgeSet::singleton(one)).unwrap();
        let u = t.subtree(u_edge)?.rank_relabel();
        let v = t.restrict(t.labels().difference(u_edge))?.rank_relabel();
        let m = u_edge.len() as u64;
        *mass_tally.entry(m).or_insert_with(Rational::zero) += &q;
        *joint.entry((m, u, v)).or_insert_with(Rational::zero) += &q;
    }
    let expect = decrement_pmf(n as u64, alpha)?;
    let mut counterexample = None;
    for m in 1..=n as u64 {
        let got = mass_tally.get(&m).cloned().unwrap_or_else(Rational::zero);
        let want = expect.prob(&m);
        if got != want {
            counterexample = Some(Counterexample {
                location: format!("first spinal subtree mass {m}"),
                lhs: rational_string(&got),
                rhs: rational_string(&want),
            });
            break;
        }
    }
    if counterexample.is_none() {
        for ((m, u, v), p) in &joint {
            let cond = p / &mass_tally[m];
            let want = growth_pmf(u, &plain)? * growth_pmf(v, &modified)?;
            if cond != want {
                counterexample = Some(Counterexample {
                    location: format!(
                        "conditional at mass {m}, structures {} | {}",
                        u.encode(),
                        v.encode()
                    ),
                    lhs: rational_string(&cond),
                    rhs: rational_string(&want),
                });
                break;
            }
        }
    }
    Ok(VerificationReport::finish("decrement", ps, counterexample, started))
}

/// Closed-form law of the removed label (first step, stationary start).
pub fn verify_resample_law(n: u8, alpha: &Rational) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let ps = params(&[("n", n.to_string()), ("alpha", rational_string(alpha))]);
    let cfg = GrowthConfig::ford(alpha.clone())?;
    let mut tally: BTreeMap<Label, Rational> = BTreeMap::new();
    let n_rat = Rational::from(BigInt::from(n));
    for t in enumerate_trees(EdgeSet::first_n(n))? {
        let q = growth_pmf(&t, &cfg)?;
        for i in 1..=n as u32 {
            let st = t.swap_target(Label::new(i).unwrap())?;
            *tally.entry(st.i_tilde).or_insert_with(Rational::zero) += &q / &n_rat;
        }
    }
    let expect = crate::chain::resampled_label_pmf(n, alpha)?;
    let mut counterexample = None;
    for (label, p) in expect.iter() {
        let got = tally.get(label).cloned().unwrap_or_else(Rational::zero);
        if &got != p {
            counterexample = Some(Counterexample {
                location: format!("removed label {label}"),
                lhs: rational_string(&got),
                rhs: rational_string(p),
            });
            break;
        }
    }
    Ok(VerificationReport::finish("resample-law", ps, counterexample, started))
}

/// Down-invariance: conditioned on the swap target being `ĩ` for the
/// selected leaf `i`, the swap-drop-relabel output of a `q_{n,α}` tree is
/// exactly `q_{n-1,α}`.
pub fn verify_down_invariance(n: u8, alpha: &Rational) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let ps = params(&[("n", n.to_string()), ("alpha", rational_string(alpha))]);
    let cfg = GrowthConfig::ford(alpha.clone())?;
    let trees = enumerate_trees(EdgeSet::first_n(n))?;
    let mut counterexample = None;
    'outer: for i in 1..=n as u32 {
        let i = Label::new(i).unwrap();
        let mut by_target: BTreeMap<Label, BTreeMap<Tree, Rational>> = BTreeMap::new();
        let mut target_mass: BTreeMap<Label, Rational> = BTreeMap::new();
        for t in &trees {
            let q = growth_pmf(t, &cfg)?;
            if q.is_zero() {
                continue;
            }
            let st = t.swap_target(i)?;
            let down = t
                .swap_labels(st.i, st.i_tilde)?
                .delete_leaf(st.i_tilde)?
                .shift_labels_down(st.i_tilde);
            *by_target
                .entry(st.i_tilde)
                .or_default()
                .entry(down)
                .or_insert_with(Rational::zero) += &q;
            *target_mass.entry(st.i_tilde).or_insert_with(Rational::zero) += &q;
        }
        for (i_tilde, cond) in by_target {
            let z = &target_mass[&i_tilde];
            for (down, p) in cond {
                let want = growth_pmf(&down, &cfg)?;
                if &p / z != want {
                    counterexample = Some(Counterexample {
                        location: format!(
                            "i={i}, i_tilde={i_tilde}, output {}",
                            down.encode()
                        ),
                        lhs: rational_string(&(&p / z)),
                        rhs: rational_string(&want),
                    });
                    break 'outer;
                }
            }
        }
    }
    Ok(VerificationReport::finish("down-invariance", ps, counterexample, started))
}

/// Projection marginal: the `ρ^•`-pushforward of `q_{n,α}` equals
/// `q_{k,α}(shape) × DM^α_{2k-1}(n-k)` with leaf coordinates shifted by one.
pub fn verify_projection_marginal(
    n: u8,
    k: u8,
    alpha: &Rational,
) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let ps = params(&[
        ("n", n.to_string()),
        ("k", k.to_string()),
        ("alpha", rational_string(alpha)),
    ]);
    let cfg = GrowthConfig::ford(alpha.clone())?;
    let push = pushforward_law(n, alpha, |t| project_mass(t, k))?;
    let mut weights = vec![Rational::one() - alpha; k as usize];
    weights.extend(vec![alpha.clone(); k as usize - 1]);
    let mut counterexample = None;
    for d in enumerate_decorated(n as u64, k)? {
        let expect = growth_pmf(d.shape(), &cfg)? * dm_prob(&d.dm_counts(), &weights)?;
        let got = push.prob(&d);
        if got != expect {
            counterexample = Some(Counterexample {
                location: d.to_json().to_string(),
                lhs: rational_string(&got),
                rhs: rational_string(&expect),
            });
            break;
        }
    }
    Ok(VerificationReport::finish("projection-marginal", ps, counterexample, started))
}

/// Which projected image the three-slice Markov check runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceProjection {
    Star,
    Beads,
}

/// Initial law of the underlying uniform chain in the three-slice check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceStart {
    Stationary,
    /// Point mass at the state with this canonical index.
    PointMass(usize),
}

/// Three-slice Markovianity of the projected stationary uniform chain: the
/// joint law of `(Y_0, Y_1, Y_2)` must factorize through the stationary
/// two-slice kernel `R`. With a point-mass start the factorization is
/// checked against the same stationary `R` and is expected to fail.
pub fn verify_markov_slices(
    n: u8,
    k: u8,
    projection: SliceProjection,
    start: SliceStart,
) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let mut ps = params(&[
        ("n", n.to_string()),
        ("k", k.to_string()),
        (
            "projection",
            match projection {
                SliceProjection::Star => "star".into(),
                SliceProjection::Beads => "beads".into(),
            },
        ),
    ]);
    let trees = tree_space(n)?;
    let p = ntree_kernel(&trees, &ChainVariant::Uniform)?;
    // Projected image space and the map g as indices.
    let (g, ny, render_y): (Vec<usize>, usize, Box<dyn Fn(usize) -> String>) = match projection {
        SliceProjection::Star => {
            let per_tree: Vec<CollapsedKTree> = trees
                .iter()
                .map(|t| project_collapsed(t, k))
                .collect::<Result<_, _>>()?;
            let space = StateSpace::new(per_tree.clone());
            let g = per_tree
                .iter()
                .map(|c| space.index_of(c).unwrap())
                .collect();
            let ny = space.len();
            (g, ny, Box::new(move |i| space.get(i).to_json().to_string()))
        }
        SliceProjection::Beads => {
            let per_tree: Vec<BeadedKTree> = trees
                .iter()
                .map(|t| project_beads(t, k))
                .collect::<Result<_, _>>()?;
            let space = StateSpace::new(per_tree.clone());
            let g = per_tree
                .iter()
                .map(|b| space.index_of(b).unwrap())
                .collect();
            let ny = space.len();
            (g, ny, Box::new(move |i| space.get(i).to_json().to_string()))
        }
    };
    let pg = p.aggregate(&g, ny)?;
    let uniform = stationary_tree_law(&trees, &ChainVariant::Uniform)?;
    // Stationary two-slice joint M(y0, y1) and its row normalization R.
    let mut m = vec![vec![Rational::zero(); ny]; ny];
    let mut piy = vec![Rational::zero(); ny];
    for (x0, pi0) in uniform.iter().enumerate() {
        piy[g[x0]] += pi0;
        for (y1, q) in pg.row(x0) {
            m[g[x0]][*y1] += pi0 * q;
        }
    }
    let r: Vec<Vec<Rational>> = m
        .iter()
        .enumerate()
        .map(|(y0, row)| row.iter().map(|v| v / &piy[y0]).collect())
        .collect();
    // Initial law over trees.
    let mu0: Vec<Rational> = match start {
        SliceStart::Stationary => uniform.clone(),
        SliceStart::PointMass(idx) => {
            ps.insert("start".into(), trees.get(idx).encode());
            let mut v = vec![Rational::zero(); trees.len()];
            v[idx] = Rational::one();
            v
        }
    };
    if matches!(start, SliceStart::Stationary) {
        ps.insert("start".into(), "stationary".into());
    }
    // Three-slice joint under mu0, compared with muY(y0) R(y0,y1) R(y1,y2).
    let mut joint: BTreeMap<(usize, usize, usize), Rational> = BTreeMap::new();
    for (x0, w0) in mu0.iter().enumerate() {
        if w0.is_zero() {
            continue;
        }
        for (x1, p01) in p.row(x0) {
            let w1 = w0 * p01;
            for (y2, p12) in pg.row(*x1) {
                *joint
                    .entry((g[x0], g[*x1], *y2))
                    .or_insert_with(Rational::zero) += &w1 * p12;
            }
        }
    }
    let mut mu_y = vec![Rational::zero(); ny];
    for (x0, w0) in mu0.iter().enumerate() {
        mu_y[g[x0]] += w0;
    }
    let mut counterexample = None;
    'outer: for y0 in 0..ny {
        for y1 in 0..ny {
            for y2 in 0..ny {
                let lhs = joint
                    .get(&(y0, y1, y2))
                    .cloned()
                    .unwrap_or_else(Rational::zero);
                let rhs = &mu_y[y0] * &r[y0][y1] * &r[y1][y2];
                if lhs != rhs {
                    counterexample = Some(Counterexample {
                        location: format!(
                            "slices ({}, {}, {})",
                            render_y(y0),
                            render_y(y1),
                            render_y(y2)
                        ),
                        lhs: rational_string(&lhs),
                        rhs: rational_string(&rhs),
                    });
                    break 'outer;
                }
            }
        }
    }
    Ok(VerificationReport::finish("markov-slices", ps, counterexample, started))
}

/// Scans point-mass starts and reports the expected failure of the
/// three-slice factorization away from stationarity.
pub fn verify_markov_slices_nonstationary_control(
    n: u8,
    k: u8,
    projection: SliceProjection,
) -> Result<VerificationReport, VerifyError> {
    let trees = tree_space(n)?;
    for idx in 0..trees.len() {
        let inner = verify_markov_slices(n, k, projection, SliceStart::PointMass(idx))?;
        if !inner.pass {
            return Ok(VerificationReport::expect_failure(inner));
        }
    }
    // Every start factorized: the control itself fails.
    let inner = verify_markov_slices(n, k, projection, SliceStart::PointMass(0))?;
    Ok(VerificationReport::expect_failure(inner))
}

/// First-dropped-label law of a decorated chain from its stationary start:
/// the absorbing-chain solve of the case-C hitting label must match the
/// closed form (paper form for `ĩ ≥ 3`, normalization-pinned weight at 2).
pub fn verify_first_drop_law(
    n: u8,
    k: u8,
    variant: &DecoratedVariant,
) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    let alpha = match variant {
        DecoratedVariant::Uniform => rat(1, 2),
        DecoratedVariant::Alpha { alpha } => alpha.clone(),
    };
    if k as u64 >= n as u64 {
        return Err(VerifyError::KTooLarge);
    }
    let mut ps = params(&[
        ("n", n.to_string()),
        ("k", k.to_string()),
        ("alpha", rational_string(&alpha)),
    ]);
    ps.insert(
        "chain".into(),
        match variant {
            DecoratedVariant::Uniform => "dec-uniform".into(),
            DecoratedVariant::Alpha { .. } => "dec-alpha".into(),
        },
    );
    let space = decorated_space(n as u64, k)?;
    let labels = k as usize - 1; // drop targets 2..=k
    let dim = space.len();
    // Sub-stochastic matrix A of non-case-C transitions and absorption
    // weights b per drop label.
    let mut a = vec![vec![Rational::zero(); dim]; dim];
    let mut b = vec![vec![Rational::zero(); labels]; dim];
    let n_rat = Rational::from(BigInt::from(n));
    for (row, d) in space.iter().enumerate() {
        for (idx, &edge) in d.shape().edges().iter().enumerate() {
            if d.mass_at(idx) == 0 {
                continue;
            }
            let sel_p = Rational::from(BigInt::from(d.mass_at(idx))) / &n_rat;
            match crate::decorated::case_of(d, idx) {
                MoveCase::C => {
                    let i = edge.min_label().unwrap();
                    let st = d.shape().swap_target(i)?;
                    let col = st.i_tilde.value() as usize - 2;
                    b[row][col] += &sel_p;
                }
                _ => {
                    for (next, p) in
                        crate::decorated::non_drop_transition(d, idx, &alpha)?
                    {
                        let j = space
                            .index_of(&next)
                            .ok_or(VerifyError::OutcomeNotInSpace)?;
                        a[row][j] += &sel_p * p;
                    }
                }
            }
        }
    }
    // Solve (I - A) X = b by Gaussian elimination.
    let mut mat = vec![vec![Rational::zero(); dim]; dim];
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            mat[i][j] = if i == j {
                Rational::one() - v
            } else {
                -v.clone()
            };
        }
    }
    let x = solve_linear(mat, b).ok_or(VerifyError::DimensionMismatch)?;
    // Mix over the stationary start.
    let push = pushforward_law(n, &alpha, |t| project_mass(t, k))?;
    let pi = dense_law(&space, &push)?;
    let mut law = vec![Rational::zero(); labels];
    for (row, w) in pi.iter().enumerate() {
        for (col, v) in x[row].iter().enumerate() {
            law[col] += w * v;
        }
    }
    // Closed form over ĩ ∈ {2, ..., k}.
    let denom =
        Rational::from(BigInt::from(k)) * (Rational::from(BigInt::from(k as i64 - 1)) - &alpha);
    let mut counterexample = None;
    for (col, got) in law.iter().enumerate() {
        let it = col as i64 + 2;
        let want = if it == 2 {
            Rational::from(BigInt::from(2)) * (Rational::one() - &alpha) / &denom
        } else {
            (Rational::from(BigInt::from(2 * it - 2)) - &alpha) / &denom
        };
        if got != &want {
            counterexample = Some(Counterexample {
                location: format!("first dropped label {}", it),
                lhs: rational_string(got),
                rhs: rational_string(&want),
            });
            break;
        }
    }
    Ok(VerificationReport::finish("first-drop-law", ps, counterexample, started))
}

/// Dense exact linear solve `M X = B`; returns `None` if `M` is singular.
fn solve_linear(mut m: Vec<Vec<Rational>>, mut b: Vec<Vec<Rational>>) -> Option<Vec<Vec<Rational>>> {
    let dim = m.len();
    let width = if dim == 0 { return Some(b) } else { b[0].len() };
    for col in 0..dim {
        let pivot = (col..dim).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        b.swap(col, pivot);
        let inv = m[col][col].clone();
        for j in col..dim {
            m[col][j] = &m[col][j] / &inv;
        }
        for j in 0..width {
            b[col][j] = &b[col][j] / &inv;
        }
        for r in 0..dim {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for j in col..dim {
                let delta = &factor * &m[col][j];
                m[r][j] -= delta;
            }
            for j in 0..width {
                let delta = &factor * &b[col][j];
                b[r][j] -= delta;
            }
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationarity_uniform_small() {
        let report = verify_stationarity(3, &ChainVariant::Uniform).unwrap();
        assert!(report.pass, "{report:?}");
        let report = verify_stationarity(4, &ChainVariant::Uniform).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn stationarity_alpha_small() {
        let report =
            verify_stationarity(4, &ChainVariant::Alpha { alpha: rat(1, 3) }).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn perturbed_law_fails_stationarity() {
        let space = tree_space(3).unwrap();
        let kernel = ntree_kernel(&space, &ChainVariant::Uniform).unwrap();
        let mut pi = stationary_tree_law(&space, &ChainVariant::Uniform).unwrap();
        pi[0] += rat(1, 6);
        pi[1] -= rat(1, 6);
        let report =
            check_stationary("stationarity", Default::default(), &pi, &kernel, |i| {
                space.get(i).encode()
            })
            .unwrap();
        assert!(!report.pass);
        assert!(report.counterexample.is_some());
    }

    #[test]
    fn constant_aggregation_is_trivially_lumpable() {
        let space = tree_space(3).unwrap();
        let kernel = ntree_kernel(&space, &ChainVariant::Uniform).unwrap();
        let g = vec![0usize; space.len()];
        let (report, q) = check_kemeny_snell(
            "kemeny-snell",
            Default::default(),
            &kernel,
            &g,
            1,
            |i| space.get(i).encode(),
        )
        .unwrap();
        assert!(report.pass);
        assert!(q.unwrap().entry(0, 0).is_one());
    }

    #[test]
    fn kemeny_snell_two_step_passes_and_direct_fails() {
        let (report, q) = verify_kemeny_snell(4, 2).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(q.is_some());
        let negative = verify_kemeny_snell_direct_negative(4, 2).unwrap();
        assert!(negative.pass, "direct aggregation unexpectedly lumpable");
    }

    #[test]
    fn intertwining_holds_at_4_2() {
        let report = verify_intertwining(4, 2).unwrap();
        assert!(report.pass, "{report:?}");
        let power = verify_intertwining_power(4, 2).unwrap();
        assert!(power.pass, "{power:?}");
    }

    #[test]
    fn intertwining_negative_control() {
        // Perturb one Q entry: the identity must break.
        let trees = tree_space(4).unwrap();
        let collapsed = collapsed_space(4, 2).unwrap();
        let lambda = lambda_star_kernel(&collapsed, &trees, &rat(1, 2)).unwrap();
        let p = ntree_kernel(&trees, &ChainVariant::Uniform).unwrap();
        let q = collapsed_chain_kernel(4, 2).unwrap();
        let mut rows: Vec<Vec<(usize, Rational)>> =
            (0..q.nrows()).map(|i| q.row(i).to_vec()).collect();
        // Move mass between the first two entries of row 0.
        let eps = rat(1, 97);
        rows[0][0].1 -= &eps;
        rows[0][1].1 += &eps;
        let q_bad = StochasticKernel::from_rows(q.nrows(), q.ncols(), rows).unwrap();
        let report =
            check_intertwining("intertwining", Default::default(), &lambda, &p, &q_bad).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn consistency_at_4_2() {
        let reports = verify_consistency(4, 2, &ChainVariant::Uniform).unwrap();
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
        let reports =
            verify_consistency(4, 2, &ChainVariant::Alpha { alpha: rat(1, 3) }).unwrap();
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
    }

    #[test]
    fn spatial_markov_at_4_2() {
        let report = verify_spatial_markov(4, 2, &rat(1, 2)).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn spatial_markov_vacuous_at_k_equals_n() {
        let report = verify_spatial_markov(4, 4, &rat(1, 3)).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn decrement_small() {
        let report = verify_decrement(3, &rat(1, 2)).unwrap();
        assert!(report.pass, "{report:?}");
        let report = verify_decrement(1, &rat(1, 3)).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn resample_law_small() {
        let report = verify_resample_law(4, &rat(1, 3)).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn down_invariance_small() {
        let report = verify_down_invariance(4, &rat(1, 2)).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn projection_marginal_small() {
        let report = verify_projection_marginal(4, 2, &rat(1, 3)).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn markov_slices_stationary_pass_and_point_mass_fail() {
        let report =
            verify_markov_slices(4, 2, SliceProjection::Beads, SliceStart::Stationary).unwrap();
        assert!(report.pass, "{report:?}");
        let control =
            verify_markov_slices_nonstationary_control(4, 2, SliceProjection::Beads).unwrap();
        assert!(control.pass, "no point-mass start broke the factorization");
    }

    #[test]
    fn first_drop_law_small() {
        let report = verify_first_drop_law(4, 2, &DecoratedVariant::Uniform).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn solve_linear_small_system() {
        // x + y = 3, x - y = 1  =>  x = 2, y = 1.
        let m = vec![vec![rat(1, 1), rat(1, 1)], vec![rat(1, 1), rat(-1, 1)]];
        let b = vec![vec![rat(3, 1)], vec![rat(1, 1)]];
        let x = solve_linear(m, b).unwrap();
        assert_eq!(x[0][0], rat(2, 1));
        assert_eq!(x[1][0], rat(1, 1));
    }
}
