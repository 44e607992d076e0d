//! Gabriel-graph large-margin binary classification with per-class flexible
//! filtering thresholds.
//!
//! The pipeline: build the Gabriel graph of the training set
//! ([`graph`]), score every sample by the fraction of same-class neighbours
//! ([`quality`]), drop samples whose scaled quality falls below their class
//! mean, rebuild the graph, and combine the hyperplanes bisecting every
//! opposite-class edge into the Chipclass decision ([`chipclass`]). The per-class
//! multipliers are tuned by a Parzen-estimator search on inner
//! cross-validation AUC ([`tuner`], [`evaluation`]); [`margin`] reproduces the
//! margin analyses.

pub mod chipclass;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod margin;
pub mod quality;
pub mod tuner;

pub use chipclass::{fit, train, train_fixed, ChipclassModel, FitOptions, PreparedTraining, SupportEdge};
pub use dataset::{Dataset, Label};
pub use error::{Error, Result};
pub use graph::{build_gabriel, GabrielGraph, Points};
pub use quality::PerClass;
