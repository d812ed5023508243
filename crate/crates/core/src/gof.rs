//! Goodness-of-fit testing of observed counts against exact laws.

use std::collections::BTreeMap;
use std::io;

use num::ToPrimitive;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::pmf::FinitePmf;

#[derive(Debug, Error)]
pub enum GofError {
    #[error("observed outcome {0:?} is outside the expected support")]
    OutcomeOutsideSupport(String),
    #[error("no observations")]
    Empty,
    #[error("expected pmf is degenerate after pooling")]
    Degenerate,
    #[error("{0}")]
    Io(String),
}

/// Pearson chi-square result with the empirical total variation distance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    pub tv_distance: f64,
    pub sample_size: u64,
}

impl GofResult {
    /// The fixed acceptance threshold used throughout the test harness.
    pub const P_THRESHOLD: f64 = 0.001;

    pub fn passes(&self) -> bool {
        self.p_value > Self::P_THRESHOLD
    }
}

/// Pearson chi-square test of `observed` against the exact `expected` law,
/// pooling low-expectation cells (< 5 expected) in canonical outcome order;
/// also reports the empirical TV distance (computed before pooling).
pub fn gof_test<T: Ord + std::fmt::Debug>(
    observed: &BTreeMap<T, u64>,
    expected: &FinitePmf<T>,
) -> Result<GofResult, GofError> {
    let total: u64 = observed.values().sum();
    if total == 0 {
        return Err(GofError::Empty);
    }
    for outcome in observed.keys() {
        if expected.prob(outcome) == num::zero() {
            return Err(GofError::OutcomeOutsideSupport(format!("{outcome:?}")));
        }
    }
    let n = total as f64;
    // TV distance on the raw cells.
    let mut tv = 0.0;
    for (outcome, p) in expected.iter() {
        let obs = *observed.get(outcome).unwrap_or(&0) as f64 / n;
        tv += (obs - p.to_f64().unwrap()).abs();
    }
    tv /= 2.0;
    // Pool cells in canonical order until each bucket expects at least 5.
    let mut buckets: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (outcome, p) in expected.iter() {
        acc_obs += *observed.get(outcome).unwrap_or(&0) as f64;
        acc_exp += p.to_f64().unwrap() * n;
        if acc_exp >= 5.0 {
            buckets.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 {
        match buckets.last_mut() {
            Some(last) => {
                last.0 += acc_obs;
                last.1 += acc_exp;
            }
            None => buckets.push((acc_obs, acc_exp)),
        }
    }
    if buckets.len() < 2 {
        // A single cell fits trivially; the statistic carries no dof.
        return Ok(GofResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            tv_distance: tv,
            sample_size: total,
        });
    }
    let statistic: f64 = buckets
        .iter()
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (buckets.len() - 1) as u64;
    let chi = ChiSquared::new(dof as f64).map_err(|_| GofError::Degenerate)?;
    let p_value = 1.0 - chi.cdf(statistic);
    Ok(GofResult {
        statistic,
        dof,
        p_value,
        tv_distance: tv,
        sample_size: total,
    })
}

/// Writes occupancy or transition counts as `outcome,count` CSV.
pub fn write_counts_csv<W: io::Write>(
    w: W,
    counts: &BTreeMap<String, u64>,
) -> Result<(), GofError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["outcome", "count"])
        .map_err(|e| GofError::Io(e.to_string()))?;
    for (outcome, count) in counts {
        wtr.write_record([outcome.as_str(), &count.to_string()])
            .map_err(|e| GofError::Io(e.to_string()))?;
    }
    wtr.flush().map_err(|e| GofError::Io(e.to_string()))?;
    Ok(())
}

/// Reads counts written by [`write_counts_csv`].
pub fn read_counts_csv<R: io::Read>(r: R) -> Result<BTreeMap<String, u64>, GofError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| GofError::Io(e.to_string()))?;
        if rec.len() < 2 {
            return Err(GofError::Io("expected columns outcome,count".into()));
        }
        let count: u64 = rec[1]
            .parse()
            .map_err(|_| GofError::Io(format!("bad count {:?}", &rec[1])))?;
        *out.entry(rec[0].to_string()).or_default() += count;
    }
    Ok(out)
}
