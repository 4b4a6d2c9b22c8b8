//! Performance estimation and parameter tuning for annealing samplers.
//!
//! The crate covers Chimera hardware graphs, Ising/QUBO problems with gauge
//! transforms, an elite-mean estimator and a greedy histogram comparator,
//! chain embeddings with strict-embedding diagnostics, a simulated-annealing
//! sampler with a control-error model, and the gauge / chain-strength scans
//! built on top of them.

pub mod embedding;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod io;
pub mod ising;
pub mod pipeline;
pub mod sampler;
pub mod seed;

pub use error::{Error, Result};
pub use estimator::{EliteScore, RankTable, SpecId, SpecSummary, R99};
pub use graph::{build_chimera, ChimeraSpec, HardwareGraph};
pub use ising::{Gauge, IsingProblem, Qubo, SpinConfig};
pub use sampler::{NoiseModel, SamplerConfig};
