//! Monte Carlo harness: seeded, replicated chain simulation with occupancy
//! and transition tallies over optionally projected observations.
//!
//! Replicas always start from an exact stationary sampler (growth process
//! for the tree chains, the product-form marginal for decorated chains), so
//! occupancy tallies are marginally exact at every step; `thin` controls
//! how often a state is tallied. Replica `r` draws from stream id
//! `base + r`, which makes merged results independent of scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::chain::{alpha_step, uniform_step, ChainError};
use crate::decorated::{decorated_step, DecoratedError, DecoratedVariant};
use crate::dist::{dm_sample, DistError};
use crate::growth::{sample_tree, GrowthConfig, GrowthError};
use crate::pmf::Rational;
use crate::project::{project_beads, project_collapsed, project_mass, DecoratedKTree, ProjectError};
use crate::rng::RngStream;
use crate::tree::{Tree, TreeError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("steps and replicas must be at least 1")]
    EmptyRun,
    #[error("projection requires k <= n")]
    BadProjection,
    #[error("alpha must be supplied for this chain")]
    MissingAlpha,
    #[error("k must be supplied for decorated chains")]
    MissingK,
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

/// Which chain a simulation runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimChain {
    Uniform,
    Alpha,
    DecoratedUniform,
    DecoratedAlpha,
}

/// How observed states are projected before tallying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    None,
    Mass,
    Star,
    Beads,
}

/// Full specification of a simulation run.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub chain: SimChain,
    pub n: u8,
    pub k: Option<u8>,
    pub alpha: Option<Rational>,
    pub steps: u64,
    pub replicas: u64,
    pub seed: u64,
    pub projection: Projection,
    /// Tally every `thin`-th state (1 = every state).
    pub thin: u64,
}

/// Merged tallies of a run: occupancy of observed (projected) states and
/// counts of observed transitions, both keyed by the canonical JSON
/// encoding of the state.
#[derive(Debug, Clone, Default)]
pub struct SimSummary {
    pub occupancy: BTreeMap<String, u64>,
    pub transitions: BTreeMap<(String, String), u64>,
    pub steps_total: u64,
}

impl SimSummary {
    fn merge(mut self, other: SimSummary) -> SimSummary {
        for (k, v) in other.occupancy {
            *self.occupancy.entry(k).or_default() += v;
        }
        for (k, v) in other.transitions {
            *self.transitions.entry(k).or_default() += v;
        }
        self.steps_total += other.steps_total;
        self
    }
}

fn validate(spec: &SimSpec) -> Result<(), SimError> {
    if spec.steps == 0 || spec.replicas == 0 || spec.thin == 0 {
        return Err(SimError::EmptyRun);
    }
    if let Some(k) = spec.k {
        if k == 0 || k > spec.n {
            return Err(SimError::BadProjection);
        }
    }
    match spec.chain {
        SimChain::Uniform => {
            if spec.projection != Projection::None && spec.k.is_none() {
                return Err(SimError::MissingK);
            }
        }
        SimChain::Alpha => {
            if spec.alpha.is_none() {
                return Err(SimError::MissingAlpha);
            }
            if spec.projection != Projection::None && spec.k.is_none() {
                return Err(SimError::MissingK);
            }
        }
        SimChain::DecoratedUniform => {
            if spec.k.is_none() {
                return Err(SimError::MissingK);
            }
        }
        SimChain::DecoratedAlpha => {
            if spec.k.is_none() {
                return Err(SimError::MissingK);
            }
            if spec.alpha.is_none() {
                return Err(SimError::MissingAlpha);
            }
        }
    }
    Ok(())
}

fn observe_tree(t: &Tree, projection: Projection, k: Option<u8>) -> Result<String, SimError> {
    Ok(match projection {
        Projection::None => t.encode(),
        Projection::Mass => project_mass(t, k.unwrap())?.to_json().to_string(),
        Projection::Star => project_collapsed(t, k.unwrap())?.to_json().to_string(),
        Projection::Beads => project_beads(t, k.unwrap())?.to_json().to_string(),
    })
}

/// Samples the `ρ^•`-pushforward of `q_{n,α}` directly: a `q_{k,α}` shape
/// and a `DM^α_{2k-1}(n-k)` weight vector with leaf coordinates shifted up.
/// Works for any mass `n`, not only enumerable ones.
pub fn stationary_pushforward_sampler(
    n: u64,
    k: u8,
    alpha: &Rational,
    rng: &mut RngStream,
) -> Result<DecoratedKTree, SimError> {
    assert!(n >= k as u64, "mass below leaf count");
    let cfg = GrowthConfig::ford(alpha.clone())?;
    let shape = sample_tree(k, &cfg, rng)?;
    let mut weights = vec![Rational::one() - alpha; k as usize];
    weights.extend(vec![alpha.clone(); k as usize - 1]);
    let counts = dm_sample(n - k as u64, &weights, rng)?;
    let mass: Vec<u64> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| if i < k as usize { c + 1 } else { c })
        .collect();
    Ok(DecoratedKTree::new(shape, mass)?)
}

use num::One;

fn run_replica(spec: &SimSpec, stream_id: u64) -> Result<SimSummary, SimError> {
    let mut rng = RngStream::new(spec.seed, stream_id);
    let mut summary = SimSummary::default();
    let thin = spec.thin;
    match spec.chain {
        SimChain::Uniform | SimChain::Alpha => {
            let alpha = spec.alpha.clone();
            let growth = match spec.chain {
                SimChain::Uniform => GrowthConfig::uniform(),
                _ => GrowthConfig::ford(alpha.clone().unwrap())?,
            };
            let mut state = sample_tree(spec.n, &growth, &mut rng)?;
            let mut key = observe_tree(&state, spec.projection, spec.k)?;
            for step in 0..spec.steps {
                let next = match spec.chain {
                    SimChain::Uniform => uniform_step(&state, &mut rng)?,
                    _ => alpha_step(&state, alpha.as_ref().unwrap(), &mut rng)?,
                };
                let next_key = observe_tree(&next, spec.projection, spec.k)?;
                *summary
                    .transitions
                    .entry((key.clone(), next_key.clone()))
                    .or_default() += 1;
                if step % thin == 0 {
                    *summary.occupancy.entry(next_key.clone()).or_default() += 1;
                }
                state = next;
                key = next_key;
            }
        }
        SimChain::DecoratedUniform | SimChain::DecoratedAlpha => {
            let k = spec.k.unwrap();
            let variant = match spec.chain {
                SimChain::DecoratedUniform => DecoratedVariant::Uniform,
                _ => DecoratedVariant::Alpha {
                    alpha: spec.alpha.clone().unwrap(),
                },
            };
            let alpha = match &variant {
                DecoratedVariant::Uniform => crate::pmf::rat(1, 2),
                DecoratedVariant::Alpha { alpha } => alpha.clone(),
            };
            let mut state =
                stationary_pushforward_sampler(spec.n as u64, k, &alpha, &mut rng)?;
            let mut key = state.to_json().to_string();
            for step in 0..spec.steps {
                let next = decorated_step(&state, &variant, &mut rng)?;
                let next_key = next.to_json().to_string();
                *summary
                    .transitions
                    .entry((key.clone(), next_key.clone()))
                    .or_default() += 1;
                if step % thin == 0 {
                    *summary.occupancy.entry(next_key.clone()).or_default() += 1;
                }
                state = next;
                key = next_key;
            }
        }
    }
    summary.steps_total = spec.steps;
    Ok(summary)
}

/// Runs the simulation: replicas in parallel on distinct stream ids, merged
/// deterministically in replica order.
pub fn run_sim(spec: &SimSpec) -> Result<SimSummary, SimError> {
    validate(spec)?;
    let replicas: Vec<Result<SimSummary, SimError>> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| run_replica(spec, r))
        .collect();
    let mut merged = SimSummary::default();
    for r in replicas {
        merged = merged.merge(r?);
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::rat;

    fn spec(chain: SimChain) -> SimSpec {
        SimSpec {
            chain,
            n: 5,
            k: None,
            alpha: None,
            steps: 500,
            replicas: 2,
            seed: 42,
            projection: Projection::None,
            thin: 1,
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let s = spec(SimChain::Uniform);
        let a = run_sim(&s).unwrap();
        let b = run_sim(&s).unwrap();
        assert_eq!(a.occupancy, b.occupancy);
        assert_eq!(a.transitions, b.transitions);
        assert_eq!(a.steps_total, 1000);
        let total: u64 = a.occupancy.values().sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn replicas_use_distinct_streams() {
        let mut one = spec(SimChain::Uniform);
        one.replicas = 1;
        let a = run_sim(&one).unwrap();
        let mut two = one.clone();
        two.seed = 42;
        two.replicas = 2;
        let b = run_sim(&two).unwrap();
        // The second replica adds different counts, not a doubling.
        assert_ne!(
            b.occupancy.values().map(|&v| v as i64).collect::<Vec<_>>(),
            a.occupancy.values().map(|&v| 2 * v as i64).collect::<Vec<_>>()
        );
    }

    #[test]
    fn projection_none_with_k_omitted_is_valid() {
        let s = spec(SimChain::Uniform);
        assert!(run_sim(&s).is_ok());
    }

    #[test]
    fn projected_observation_keys_parse_as_json() {
        let mut s = spec(SimChain::Uniform);
        s.k = Some(2);
        s.projection = Projection::Beads;
        s.steps = 50;
        let out = run_sim(&s).unwrap();
        for key in out.occupancy.keys() {
            let v: serde_json::Value = serde_json::from_str(key).unwrap();
            assert!(v.get("shape").is_some());
        }
    }

    #[test]
    fn alpha_chain_requires_alpha() {
        let s = spec(SimChain::Alpha);
        assert!(matches!(run_sim(&s), Err(SimError::MissingAlpha)));
    }

    #[test]
    fn decorated_run_conserves_mass_keys() {
        let mut s = spec(SimChain::DecoratedUniform);
        s.n = 6;
        s.k = Some(2);
        s.steps = 300;
        let out = run_sim(&s).unwrap();
        // Every observed state is a decorated 2-tree of mass 6.
        for key in out.occupancy.keys() {
            let v: serde_json::Value = serde_json::from_str(key).unwrap();
            let x: u64 = v["x"].as_object().unwrap().values().map(|m| m.as_u64().unwrap()).sum();
            let y: u64 = v["y"].as_object().unwrap().values().map(|m| m.as_u64().unwrap()).sum();
            assert_eq!(x + y, 6);
        }
    }

    #[test]
    fn pushforward_sampler_agrees_with_exact_law() {
        use num::ToPrimitive;
        let alpha = rat(1, 2);
        let exact =
            crate::project::pushforward_law(4, &alpha, |t| crate::project::project_mass(t, 2))
                .unwrap();
        let mut rng = RngStream::new(9, 0);
        let reps = 40000;
        let mut counts: BTreeMap<DecoratedKTree, u64> = BTreeMap::new();
        for _ in 0..reps {
            let d = stationary_pushforward_sampler(4, 2, &alpha, &mut rng).unwrap();
            *counts.entry(d).or_default() += 1;
        }
        for (d, p) in exact.iter() {
            let freq = *counts.get(d).unwrap_or(&0) as f64 / reps as f64;
            assert!((freq - p.to_f64().unwrap()).abs() < 0.02);
        }
    }

    #[test]
    fn pushforward_sampler_degenerate_k_equals_n() {
        let mut rng = RngStream::new(1, 0);
        let d = stationary_pushforward_sampler(3, 3, &rat(1, 3), &mut rng).unwrap();
        assert_eq!(d.total_mass(), 3);
        for idx in 0..d.masses().len() {
            let expect = if d.shape().edges()[idx].len() == 1 { 1 } else { 0 };
            assert_eq!(d.mass_at(idx), expect);
        }
    }

    #[test]
    fn dm_marginal_of_first_coordinate() {
        // J_1 under the sampler at (n,k)=(6,2) matches the dm_pmf
        // marginalization.
        use crate::dist::dm_pmf;
        use num::ToPrimitive;
        let alpha = rat(1, 2);
        let weights = vec![rat(1, 2), rat(1, 2), rat(1, 2)];
        let dm = dm_pmf(4, &weights).unwrap();
        let mut marginal = vec![0.0f64; 5];
        for (counts, p) in dm.iter() {
            marginal[counts[0] as usize] += p.to_f64().unwrap();
        }
        let mut rng = RngStream::new(11, 0);
        let reps = 40000;
        let mut hist = vec![0u64; 5];
        for _ in 0..reps {
            let d = stationary_pushforward_sampler(6, 2, &alpha, &mut rng).unwrap();
            let j1 = d.x(crate::tree::Label::new(1).unwrap()) - 1;
            hist[j1 as usize] += 1;
        }
        for (j, &count) in hist.iter().enumerate() {
            let freq = count as f64 / reps as f64;
            assert!((freq - marginal[j]).abs() < 0.02, "j={j}");
        }
    }
}
