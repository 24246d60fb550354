//! Concrete experiments: finite Markov chains, nonlinear autoregression,
//! the Gaussian sequence model and Poisson regression.

pub mod autoregression;
pub mod gauss_seq;
pub mod markov;
pub mod poisson;

pub use autoregression::{ar_design, ArDesign, ArModel, RegressionFn, StepFunction};
pub use gauss_seq::{GaussSeqModel, Precision};
pub use markov::{markov_joint_loglik, DensityRatioBounds, FiniteMarkovChain, MarkovModel};
pub use poisson::{Link, PoissonRegModel};
