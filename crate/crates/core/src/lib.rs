//! Bisimulation metrics on finite and linear-Gaussian MDPs: exact operators,
//! sampled estimators, couplings and learners.

pub mod coupling;
pub mod error;
pub mod estimators;
pub mod learner;
pub mod matrix;
pub mod mdp;
pub mod operators;
pub mod seed;
pub mod textio;
pub mod transport;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use mdp::{FiniteMdp, GaussianLinearMdp, TabularPolicy, TanhGaussianPolicy};
pub use operators::{BisimOperator, FixedPoint, OperatorKind, OperatorTag, SimilarityG, StateMetric};
pub use transport::{DiagonalGaussian, DiscreteDistribution};
