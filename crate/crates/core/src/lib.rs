//! Construction of a weakly-supervised training set for a hierarchical
//! research-field taxonomy, remapping of labels between taxonomy releases,
//! and a TF-IDF + linear-SVM multi-label classifier over the result.
//!
//! The pipeline runs in stages: ingest a corpus, generate candidate labels
//! from grants / journal titles / contributed data, filter them against
//! bibliometric clusters, move the surviving labels onto the new scheme via
//! the correspondence table and mined split rules, shape and train, then
//! evaluate and report.

pub mod chart;
pub mod classifier;
pub mod corpus;
pub mod evaluate;
pub mod features;
pub mod pipeline;
pub mod remap;
pub mod taxonomy;
pub mod weaklabel;

pub use classifier::{Model, ShapingPolicy, TrainConfig, TrainingSet};
pub use corpus::Store;
pub use taxonomy::{CorrespondenceTable, ForCode, Level, Scheme, SchemeCatalog};
pub use weaklabel::{FilterStatus, LabeledExample, Provenance};
