//! Down-up Markov chains on rooted binary trees with labeled leaves.
//!
//! The crate implements, over exact rational arithmetic:
//!
//! * the label-set representation of rooted binary leaf-labeled trees,
//!   with deletion/insertion editing, enumeration and serialization
//!   ([`tree`]);
//! * the growth processes (uniform, alpha, and the modified variant that
//!   favors the spinal edge) and their exact laws ([`growth`]);
//! * the uniform and alpha down-up chains on `n`-trees ([`chain`]);
//! * projections of an `n`-tree onto the subtree spanned by its first `k`
//!   leaves: edge masses, collapsed label sets, and strings of beads
//!   ([`project`]);
//! * the autonomous down-up chains on decorated `k`-trees ([`decorated`]);
//! * Dirichlet-multinomial, Pólya-urn and decrement kernels ([`dist`]);
//! * an exact verification engine that builds full transition kernels over
//!   enumerated state spaces and certifies stationarity, lumpability,
//!   intertwining, consistency and related identities ([`verify`]);
//! * a seeded Monte Carlo harness with chi-square/TV goodness of fit
//!   ([`sim`], [`gof`]).
//!
//! Everything that feeds a verification check is computed in `BigRational`
//! arithmetic; sampling paths use integer-weight categorical draws from a
//! counter-based seeded generator and are bit-reproducible.

pub mod chain;
pub mod decorated;
pub mod dist;
pub mod gof;
pub mod growth;
pub mod pmf;
pub mod project;
pub mod rng;
pub mod sim;
pub mod tree;
pub mod verify;

pub use chain::{ChainVariant, NTreeChainConfig};
pub use decorated::{DecoratedMove, DecoratedVariant, MoveCase};
pub use dist::UrnState;
pub use gof::GofResult;
pub use growth::GrowthConfig;
pub use pmf::{FinitePmf, Rational};
pub use project::{BeadedKTree, CollapsedKTree, DecoratedKTree, EdgeKind, InternalStructure};
pub use rng::RngStream;
pub use sim::{Projection, SimChain, SimSpec, SimSummary};
pub use tree::{EdgeSet, Label, SwapTarget, Tree, TreeError};
pub use verify::{StateSpace, StochasticKernel, VerificationReport};
