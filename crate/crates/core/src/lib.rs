//! Ruin probabilities and expected surplus for Pay-per-Share mining pools and
//! their miners, with exponential time-horizon randomization, plus a Monte
//! Carlo oracle and the ruin-time density over a deterministic horizon.

pub mod acceptance;
pub mod agp;
pub mod error;
pub mod mc_sim;
pub mod miner;
pub mod model;
pub mod pool_det;
pub mod pool_stoch;
pub mod quad;
pub mod rootkernel;
pub mod scenario;

pub use error::{Error, Result};
pub use model::{CombExp, MinerParams, NetworkParams, PoolParams, RewardLaw, SolutionKind};
