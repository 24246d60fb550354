//! Posterior contraction laboratory: divergences, entropy, neighbourhoods,
//! posteriors and numerical checks of contraction bounds for non-i.i.d.
//! experiments.

pub mod divergences;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod models;
pub mod neighborhoods;
pub mod numeric;
pub mod posterior;
pub mod priors;
pub mod rng;
pub mod verifier;

pub use error::{Error, Result};
pub use experiment::{DiscreteExperiment, Experiment, ParameterId, PmfTable, SampleBatch};
