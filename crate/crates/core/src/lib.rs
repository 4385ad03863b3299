//! Distillation-based interpretability for black-box text classifiers.
//!
//! A black box is consumed only through its per-code probability outputs (and,
//! optionally, per-token importance dumps). For every code a sparse linear
//! regressor is trained on bag-of-words features to predict the log of the
//! black box's probability. The resulting proxy is evaluated for faithfulness
//! against the black box, used to extract 14-token explanation spans, and the
//! spans are scored for plausibility with an embedding-based annotation
//! classifier.
//!
//! Module map:
//!
//! * [`corpus`]: tokenization, vocabulary, bag-of-words features, file loaders.
//! * [`blackbox`]: prediction matrices and importance dumps.
//! * [`synth`]: synthetic corpora with a planted log-linear black box.
//! * [`proxy`]: per-code L1-regularized SGD regression on log-probabilities.
//! * [`baselines`]: per-code logistic regression trained on true labels.
//! * [`metrics`]: correlations, AUC, F1, precision@k and report assembly.
//! * [`explain`]: 4-gram anchored span extraction.
//! * [`plausibility`]: annotation classifier, calibration, bootstrap, McNemar.

pub mod baselines;
pub mod blackbox;
pub mod corpus;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod plausibility;
pub mod proxy;
pub mod seed;
mod sgd;
pub mod synth;

pub use baselines::LogisticBaseline;
pub use blackbox::{BinaryPredictionMatrix, ImportanceDump, PredictionMatrix};
pub use corpus::{CodeSpace, Corpus, Document, FeatureVector, Split, SplitAssignment, Vocabulary};
pub use error::{Error, Result};
pub use explain::{EmbeddingTable, Explanation};
pub use metrics::{FaithfulnessReport, LabelReport};
pub use plausibility::{AnnotationRecord, ModelScore, PlausibilityClassifier, Protocol};
pub use proxy::{LinearModel, ProxyModel, TrainConfig};
pub use synth::{PlantedModel, SynthConfig, SyntheticData};
