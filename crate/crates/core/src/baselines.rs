//! Logistic regression trained directly on the true labels.
//!
//! Uses the proxy's SGD schedule and L1 penalty so that the two models differ
//! only in their training signal. A code whose training labels are all one
//! class gets an intercept-only model with intercept
//! `ln((pos + 0.5) / (neg + 0.5))`.

use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, Document, FeatureVector, Split, SplitAssignment, Vocabulary};
use crate::blackbox::PredictionMatrix;
use crate::error::{Error, Result};
use crate::proxy::{CodeRegressor, LinearModel, TrainConfig};
use crate::seed::rng_for;
use crate::sgd::{self, Loss};

pub use crate::sgd::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticBaseline(pub LinearModel);

impl LogisticBaseline {
    pub fn linear(&self) -> &LinearModel {
        &self.0
    }

    pub fn codes(&self) -> &[String] {
        &self.0.codes
    }

    pub fn predict_prob(&self, x: &FeatureVector) -> Vec<f64> {
        self.0.scores(x).into_iter().map(sigmoid).collect()
    }

    pub fn predict_matrix(&self, docs: &[&Document]) -> Result<PredictionMatrix> {
        let rows = docs
            .par_iter()
            .map(|d| (d.doc_id.clone(), self.predict_prob(&self.0.features(&d.tokens))))
            .collect();
        PredictionMatrix::new(self.0.codes.clone(), rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.0.save(path.as_ref(), "logistic")
    }

    pub fn load(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        LinearModel::load(path.as_ref(), vocab, "logistic").map(LogisticBaseline)
    }
}

pub fn train_code_logistic(
    features: &[&FeatureVector],
    labels: &[bool],
    n_features: usize,
    config: &TrainConfig,
    code_index: usize,
) -> Result<CodeRegressor> {
    config.validate()?;
    if features.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Ok(CodeRegressor {
            coefficients: Vec::new(),
            intercept: ((pos as f64 + 0.5) / (neg as f64 + 0.5)).ln(),
        });
    }
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let mut rng = rng_for(config.seed, "logistic", code_index as u64);
    let (w, intercept) = sgd::fit(features, &y, n_features, Loss::Logistic, config.schedule(), &mut rng)?;
    Ok(CodeRegressor {
        coefficients: sgd::sparsify(&w),
        intercept,
    })
}

/// One binary classifier per code in `codes`, trained on the train split.
pub fn train_logistic(
    corpus: &Corpus,
    splits: &SplitAssignment,
    vocab: &Vocabulary,
    codes: &[String],
    config: &TrainConfig,
) -> Result<LogisticBaseline> {
    config.validate()?;
    let docs = splits.select(corpus, Split::Train);
    if docs.is_empty() {
        return Err(Error::invalid("train split is empty"));
    }
    let features = LinearModel::training_features(vocab, &docs, config.binary_features);
    let refs: Vec<&FeatureVector> = features.iter().collect();
    let regressors = codes
        .par_iter()
        .enumerate()
        .map(|(c, code)| {
            let labels: Vec<bool> = docs.iter().map(|d| d.true_codes.contains(code)).collect();
            train_code_logistic(&refs, &labels, vocab.len(), config, c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LogisticBaseline(LinearModel {
        vocab: vocab.clone(),
        codes: codes.to_vec(),
        regressors,
        config: *config,
    }))
}
