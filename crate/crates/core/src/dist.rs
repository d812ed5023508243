//! Probability kernels shared by the chains: Dirichlet-multinomial laws,
//! generalized Pólya urns, and the decrement matrix of regenerative spinal
//! compositions. All pmfs are exact rationals; sampling runs the urn.

use num::{BigInt, One, Signed};
use thiserror::Error;

use crate::pmf::{FinitePmf, Rational};
use crate::rng::RngStream;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistError {
    #[error("weights must be strictly positive")]
    NonpositiveWeight,
    #[error("alpha must lie in the open interval (0,1)")]
    AlphaOutOfRange,
    #[error("urn has no colors")]
    EmptyUrn,
}

/// State of a generalized Pólya urn: fixed initial color weights plus the
/// counts added so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrnState {
    weights: Vec<Rational>,
    counts: Vec<u64>,
}

impl UrnState {
    pub fn new(weights: Vec<Rational>) -> Result<Self, DistError> {
        if weights.is_empty() {
            return Err(DistError::EmptyUrn);
        }
        if weights.iter().any(|w| !w.is_positive()) {
            return Err(DistError::NonpositiveWeight);
        }
        let counts = vec![0; weights.len()];
        Ok(UrnState { weights, counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Draws one color with probability proportional to `weight + count` and
    /// increments its count.
    pub fn step(&mut self, rng: &mut RngStream) {
        let i = categorical_rational(
            self.weights
                .iter()
                .zip(&self.counts)
                .map(|(w, &c)| w + Rational::from(BigInt::from(c))),
            rng,
        );
        self.counts[i] += 1;
    }
}

/// One categorical draw proportional to rational weights, performed exactly
/// over a common denominator.
fn categorical_rational(
    weights: impl Iterator<Item = Rational>,
    rng: &mut RngStream,
) -> usize {
    use num::Integer;
    let weights: Vec<Rational> = weights.collect();
    let mut denom = BigInt::one();
    for w in &weights {
        denom = denom.lcm(w.denom());
    }
    let ints: Vec<num::BigUint> = weights
        .iter()
        .map(|w| (w.numer() * (&denom / w.denom())).magnitude().clone())
        .collect();
    let total: num::BigUint = ints.iter().sum();
    let mut x = rng.gen_biguint_below(&total);
    for (i, w) in ints.iter().enumerate() {
        if &x < w {
            return i;
        }
        x -= w;
    }
    unreachable!()
}

/// Rising factorial `x (x+1) ... (x+r-1)` with rational base.
fn rising(x: &Rational, r: u64) -> Rational {
    let mut acc = Rational::one();
    for i in 0..r {
        acc *= x + Rational::from(BigInt::from(i));
    }
    acc
}

fn binomial(n: u64, k: u64) -> BigInt {
    num::integer::binomial(BigInt::from(n), BigInt::from(k))
}

/// Exact Dirichlet-multinomial probability of one composition.
///
/// `P(j) = (m choose j_1,...,j_d) · Π_i (w_i)_{j_i} / (Σw)_m` with `(x)_r`
/// the rising factorial; this is the law of the color counts after `m`
/// steps of a Pólya urn with initial weights `w`.
pub fn dm_prob(counts: &[u64], weights: &[Rational]) -> Result<Rational, DistError> {
    if weights.is_empty() || counts.len() != weights.len() {
        return Err(DistError::EmptyUrn);
    }
    if weights.iter().any(|w| !w.is_positive()) {
        return Err(DistError::NonpositiveWeight);
    }
    let m: u64 = counts.iter().sum();
    let mut multinom = BigInt::one();
    let mut rem = m;
    for &c in counts {
        multinom *= binomial(rem, c);
        rem -= c;
    }
    let total: Rational = weights.iter().sum();
    let mut p = Rational::from(multinom) / rising(&total, m);
    for (c, w) in counts.iter().zip(weights) {
        p *= rising(w, *c);
    }
    Ok(p)
}

/// The full Dirichlet-multinomial pmf over integer compositions of `m` into
/// `weights.len()` parts. `m = 0` is the point mass at the zero vector.
pub fn dm_pmf(m: u64, weights: &[Rational]) -> Result<FinitePmf<Vec<u64>>, DistError> {
    if weights.is_empty() {
        return Err(DistError::EmptyUrn);
    }
    if weights.iter().any(|w| !w.is_positive()) {
        return Err(DistError::NonpositiveWeight);
    }
    let mut entries = Vec::new();
    let mut counts = vec![0u64; weights.len()];
    fn rec(
        counts: &mut Vec<u64>,
        pos: usize,
        left: u64,
        weights: &[Rational],
        entries: &mut Vec<(Vec<u64>, Rational)>,
    ) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            let p = dm_prob(counts, weights).expect("validated weights");
            entries.push((counts.clone(), p));
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(counts, pos + 1, left - c, weights, entries);
        }
    }
    rec(&mut counts, 0, m, weights, &mut entries);
    Ok(FinitePmf::new(entries).expect("dm probabilities sum to one"))
}

/// Draws one DM composition by running the urn for `m` steps.
pub fn dm_sample(m: u64, weights: &[Rational], rng: &mut RngStream) -> Result<Vec<u64>, DistError> {
    let mut urn = UrnState::new(weights.to_vec())?;
    for _ in 0..m {
        urn.step(rng);
    }
    Ok(urn.counts)
}

/// The three-part DM split kernel `DM^β_3(m)`: two coordinates of weight
/// `1-β` and one of weight `β`.
pub fn dm3(beta: &Rational) -> Vec<Rational> {
    let c = Rational::one() - beta;
    vec![c.clone(), c, beta.clone()]
}

fn check_open_unit(alpha: &Rational) -> Result<(), DistError> {
    if alpha.is_positive() && alpha < &Rational::one() {
        Ok(())
    } else {
        Err(DistError::AlphaOutOfRange)
    }
}

/// Exact decrement probability
/// `δ_α(n:m) = α · C(n,m) · Γ(m-α)Γ(n-m+α) / (Γ(1-α)Γ(n+α))`,
/// evaluated as rising-factorial products since all gamma arguments differ
/// by integers.
pub fn decrement_prob(n: u64, m: u64, alpha: &Rational) -> Result<Rational, DistError> {
    check_open_unit(alpha)?;
    assert!(n >= 1 && m >= 1 && m <= n);
    let one_minus = Rational::one() - alpha;
    // Γ(m-α)/Γ(1-α) = (1-α)_{m-1};  Γ(n+α)/Γ(n-m+α) = (n-m+α)_m.
    let num = alpha * Rational::from(binomial(n, m)) * rising(&one_minus, m - 1);
    let den = rising(&(Rational::from(BigInt::from(n - m)) + alpha), m);
    Ok(num / den)
}

/// The decrement matrix row `δ_α(n:·)` over `m ∈ {1,...,n}`: the law of the
/// mass of the first spinal subtree in an `(α,α)` regenerative composition.
pub fn decrement_pmf(n: u64, alpha: &Rational) -> Result<FinitePmf<u64>, DistError> {
    check_open_unit(alpha)?;
    assert!(n >= 1);
    let entries = (1..=n)
        .map(|m| Ok((m, decrement_prob(n, m, alpha)?)))
        .collect::<Result<Vec<_>, DistError>>()?;
    Ok(FinitePmf::new(entries).expect("decrement row sums to one"))
}

/// The α = 1/2 specialization as the first-return law of a simple random
/// walk bridge: `(1/(2m-1)) C(2m,m) C(2n-2m,n-m) / C(2n,n)`.
pub fn decrement_prob_bridge(n: u64, m: u64) -> Rational {
    assert!(n >= 1 && m >= 1 && m <= n);
    Rational::new(
        binomial(2 * m, m) * binomial(2 * n - 2 * m, n - m),
        BigInt::from(2 * m - 1) * binomial(2 * n, n),
    )
}
