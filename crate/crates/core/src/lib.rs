//! Chromatin-state models as QUBO/Ising problems: ingest binarized marker
//! tracks, learn Cartesian pair-interaction models, embed them on annealer
//! hardware graphs and sample them with classical and quantum-inspired
//! annealers.

pub mod embed;
pub mod eval;
pub mod ingest;
pub mod learn;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod sparse;
pub mod stats;
pub mod topology;

pub use ingest::{IncidenceMatrix, IngestError};
pub use model::{Boundary, CartesianParams, IsingModel, ModelError, ModelShape, QuboModel, TemplateBias};
pub use stats::{StatGroup, StatsSummary};
