//! Unsupervised ensemble learning through an Ising model over classifiers.
//!
//! Binary classifiers and a hidden true label form a pairwise Markov random
//! field in which the "experts" are the classifiers tied directly to the
//! hidden label. Marginalizing the hidden node turns the experts into a
//! clique, which nodewise ℓ1-regularized logistic regression can detect from
//! unlabeled predictions alone. The crate recovers the experts
//! ([`prune::reconstruct_n0`]) and predicts with either an EM-fitted Bayes
//! rule ([`predict::em_fit`]) or an augmented majority vote.
//!
//! ```
//! use unelisa::{fixtures, gibbs, nodewise, prune};
//!
//! let spec = fixtures::five_expert_graph();
//! let labels = gibbs::sample(&spec, &gibbs::GibbsConfig::new(2000, 7)).unwrap();
//! let lambda = nodewise::default_lambda(labels.n(), labels.p());
//! let nbhd = nodewise::neighborhoods(&labels, lambda, nodewise::Symmetrize::Or).unwrap();
//! let experts = prune::reconstruct_n0(&nbhd).expert_set;
//! assert!(experts.contains(&1));
//! ```

pub mod approx;
pub mod baselines;
pub mod error;
pub mod fixtures;
pub mod gibbs;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod nodewise;
pub mod numeric;
pub mod oracle;
pub mod predict;
pub mod prune;

pub use approx::{approximate, sign_partition, theta_tilde_pair, ApproxModel, SignMatrix};
pub use error::{Error, Result};
pub use model::{
    degree_stats, validate_model, DegreeStats, ExpertReport, IsingModelSpec, LabelMatrix, Method, NeighborhoodMap,
    PredictionResult, Property, Violation,
};
pub use nodewise::{LassoLogisticProblem, LassoLogisticSolution, Symmetrize};
pub use prune::{KnotTable, Reconstruction};
