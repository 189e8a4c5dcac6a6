//! Hybrid classical/quantum text classification on an exact statevector
//! simulator.
//!
//! The pipeline runs TF-IDF over a labelled corpus, reduces the features
//! with PCA to one column per qubit, scales them into `[0, pi]`, encodes
//! them with Pauli-expansion feature maps and classifies with a fidelity
//! kernel SVM, a variational classifier or a quantum neural network
//! classifier. A polynomial-kernel SVM serves as the classical baseline.

pub mod circuits;
pub mod corpus;
pub mod error;
pub mod features;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod pipeline;
pub mod qsim;
pub mod reduce;
pub mod stage;
pub mod svm;
pub mod synth;
pub mod util;
pub mod variational;

pub use error::{QtcError, Result};
pub use features::FeatureMatrix;
