//! Joint order-statistic probabilities.
//!
//! Computes `P(X_(c_1) <= x_1, ..., X_(c_d) <= x_d)` for independent
//! (non-identical) variables via a spilling dynamic program, with reference
//! baselines (occupancy-vector DP, brute-force enumeration, Monte Carlo) and
//! an extension to graph-structured dependence, including a Markov-chain
//! specialization for integer random walks.

pub mod baselines;
pub mod chain;
pub mod dependent;
pub mod dist;
pub mod error;
pub mod query;
pub mod spill;

pub use baselines::{
    brute_force, monte_carlo, solve_boncelet, IndependentSampler, JointSampler, MonteCarloResult,
};
pub use chain::{
    enumerate_paths_oracle, markov_chain_adapter, solve_chain, ChainConditional, ChainSampler,
    KernelStep, MarkovChainSpec,
};
pub use dependent::{
    boundary_sets, solve_dependent, DependencySchedule, DependentOptions, Graph, MicroBinSpec,
};
pub use dist::{Cdf, CdfProvider, ConditionalProvider};
pub use error::{Error, Result};
pub use query::{bin_probabilities, BinProbabilityMatrix, Deltas, OrderQuery};
pub use spill::{solve_independent, spill_transform, SolveOptions, SpillTable};
