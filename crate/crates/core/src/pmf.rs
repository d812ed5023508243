//! Exact finite probability mass functions over `BigRational` entries.

use std::collections::BTreeMap;
use std::io;

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::rng::RngStream;

/// Arbitrary-precision rational, always kept in lowest terms by `num`.
pub type Rational = BigRational;

/// Shorthand for a small rational constant.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses an exact rational from a `"p/q"` or `"p"` string.
pub fn parse_rational(s: &str) -> Result<Rational, PmfError> {
    let bad = || PmfError::BadRational(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

#[derive(Debug, Error)]
pub enum PmfError {
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(String),
    #[error("negative probability {0} for an outcome")]
    NegativeProb(String),
    #[error("duplicate outcome in support")]
    DuplicateOutcome,
    #[error("empty support")]
    EmptySupport,
    #[error("malformed rational literal {0:?} (expected \"p/q\")")]
    BadRational(String),
}

/// A finite pmf with exact rational probabilities.
///
/// Entries are kept sorted by outcome, zero-probability outcomes are pruned,
/// and the total is checked to be exactly one at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePmf<T: Ord> {
    entries: Vec<(T, Rational)>,
}

impl<T: Ord> FinitePmf<T> {
    pub fn new(entries: Vec<(T, Rational)>) -> Result<Self, PmfError> {
        let mut entries: Vec<(T, Rational)> = entries
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.is_empty() {
            return Err(PmfError::EmptySupport);
        }
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(PmfError::DuplicateOutcome);
        }
        let mut total = Rational::zero();
        for (_, p) in &entries {
            if p.is_negative() {
                return Err(PmfError::NegativeProb(p.to_string()));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(PmfError::NotNormalized(total.to_string()));
        }
        Ok(FinitePmf { entries })
    }

    /// Builds a pmf by accumulating probabilities per outcome.
    pub fn from_accumulated(map: BTreeMap<T, Rational>) -> Result<Self, PmfError> {
        Self::new(map.into_iter().collect())
    }

    /// Point mass at a single outcome.
    pub fn point_mass(outcome: T) -> Self {
        FinitePmf {
            entries: vec![(outcome, Rational::one())],
        }
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(T, Rational)> {
        self.entries.iter()
    }

    pub fn into_entries(self) -> Vec<(T, Rational)> {
        self.entries
    }

    /// Probability of an outcome (zero off the support).
    pub fn prob(&self, outcome: &T) -> Rational {
        match self.entries.binary_search_by(|e| e.0.cmp(outcome)) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    /// Exact draw: outcomes are weighted by `p_i = w_i / D` over a common
    /// denominator `D` and a uniform integer below `D` selects the outcome.
    pub fn sample(&self, rng: &mut RngStream) -> &T {
        use num::bigint::BigUint;
        use num::Integer;
        let mut denom = BigUint::one();
        for (_, p) in &self.entries {
            denom = denom.lcm(p.denom().magnitude());
        }
        let mut x = rng.gen_biguint_below(&denom);
        for (outcome, p) in &self.entries {
            let w = p.numer().magnitude() * (&denom / p.denom().magnitude());
            if x < w {
                return outcome;
            }
            x -= w;
        }
        unreachable!("pmf sums to one");
    }

    /// Total variation distance to another pmf on the same outcome type.
    pub fn tv_distance(&self, other: &FinitePmf<T>) -> Rational
    where
        T: Clone,
    {
        let mut keys: Vec<&T> = self.entries.iter().map(|(t, _)| t).collect();
        keys.extend(other.entries.iter().map(|(t, _)| t));
        keys.sort();
        keys.dedup();
        let mut acc = Rational::zero();
        for k in keys {
            acc += (self.prob(k) - other.prob(k)).abs();
        }
        acc / rat(2, 1)
    }

    pub fn map<U: Ord>(self, f: impl Fn(T) -> U) -> Result<FinitePmf<U>, PmfError> {
        let mut map: BTreeMap<U, Rational> = BTreeMap::new();
        for (t, p) in self.entries {
            *map.entry(f(t)).or_insert_with(Rational::zero) += p;
        }
        FinitePmf::from_accumulated(map)
    }
}

impl<T: Ord> FinitePmf<T> {
    /// Writes the pmf as CSV with columns `outcome,prob_num,prob_den,prob_float`.
    pub fn write_csv<W: io::Write>(
        &self,
        w: W,
        key: impl Fn(&T) -> String,
    ) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["outcome", "prob_num", "prob_den", "prob_float"])?;
        for (t, p) in &self.entries {
            wtr.write_record([
                key(t),
                p.numer().to_string(),
                p.denom().to_string(),
                format!("{:.17e}", p.to_f64().unwrap_or(f64::NAN)),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

impl FinitePmf<String> {
    /// Reads a pmf from the CSV layout produced by [`FinitePmf::write_csv`].
    pub fn read_csv<R: io::Read>(r: R) -> Result<Self, String> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            if rec.len() < 3 {
                return Err("expected columns outcome,prob_num,prob_den".into());
            }
            let num: BigInt = rec[1].parse().map_err(|_| format!("bad numerator {:?}", &rec[1]))?;
            let den: BigInt = rec[2].parse().map_err(|_| format!("bad denominator {:?}", &rec[2]))?;
            if den.is_zero() {
                return Err("zero denominator".into());
            }
            entries.push((rec[0].to_string(), Rational::new(num, den)));
        }
        FinitePmf::new(entries).map_err(|e| e.to_string())
    }
}

/// Renders a rational as `"p/q"` (or `"p"` for integers).
pub fn rational_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
