//! Per-code sparse linear regressors that predict the log of a black box's
//! probabilities from bag-of-words features.
//!
//! Targets are `ln(max(p, clamp_eps))`. Each code gets its own regressor,
//! trained by per-sample SGD on squared loss with an L1 penalty, with the
//! shuffle stream seeded from `(seed, code index)`. Only the black box's
//! probabilities are read during training; true labels never are.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::PredictionMatrix;
use crate::corpus::{Corpus, Document, FeatureVector, Split, SplitAssignment, Vocabulary};
use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::sgd::{self, Loss, Schedule};

pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_ALPHA_GRID: [f64; 3] = [1e-5, 1e-4, 1e-3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub epochs: usize,
    pub eta0: f64,
    pub power_t: f64,
    pub clamp_eps: f64,
    pub seed: u64,
    pub binary_features: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1e-4,
            epochs: 10,
            eta0: 0.01,
            power_t: 0.25,
            clamp_eps: 1e-6,
            seed: 13,
            binary_features: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::invalid(format!("eta0 must be > 0, got {}", self.eta0)));
        }
        if !(self.power_t >= 0.0 && self.power_t.is_finite()) {
            return Err(Error::invalid(format!("power_t must be >= 0, got {}", self.power_t)));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::invalid(format!("clamp_eps must lie in (0, 0.5), got {}", self.clamp_eps)));
        }
        Ok(())
    }

    pub(crate) fn schedule(&self) -> Schedule {
        Schedule {
            alpha: self.alpha,
            epochs: self.epochs,
            eta0: self.eta0,
            power_t: self.power_t,
        }
    }
}

pub fn log_transform(p: f64, clamp_eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.max(clamp_eps).ln())
}

/// Coefficients and intercept of a single code.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CodeRegressor {
    /// Sorted by token index; no entry has magnitude below 1e-12.
    pub coefficients: Vec<(usize, f64)>,
    pub intercept: f64,
}

impl CodeRegressor {
    pub fn score(&self, x: &FeatureVector) -> f64 {
        let mut z = self.intercept;
        let (mut a, mut b) = (0, 0);
        let (coef, feat) = (&self.coefficients, x.entries());
        while a < coef.len() && b < feat.len() {
            match coef[a].0.cmp(&feat[b].0) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    z += coef[a].1 * f64::from(feat[b].1);
                    a += 1;
                    b += 1;
                }
            }
        }
        z
    }

    pub fn coefficient(&self, index: usize) -> f64 {
        self.coefficients
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.coefficients[pos].1)
    }
}

/// One `CodeRegressor` per code over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub vocab: Vocabulary,
    pub codes: Vec<String>,
    pub regressors: Vec<CodeRegressor>,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    kind: String,
    config: TrainConfig,
    vocab_hash: String,
    codes: Vec<String>,
    intercepts: Vec<f64>,
    coefficients: Vec<Vec<(usize, f64)>>,
}

impl LinearModel {
    pub fn features(&self, tokens: &[String]) -> FeatureVector {
        let fv = self.vocab.featurize(tokens);
        if self.config.binary_features {
            fv.binarized()
        } else {
            fv
        }
    }

    pub fn scores(&self, x: &FeatureVector) -> Vec<f64> {
        self.regressors.iter().map(|r| r.score(x)).collect()
    }

    pub fn code_index(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    pub(crate) fn save(&self, path: &Path, kind: &str) -> Result<()> {
        let file = ModelFile {
            version: MODEL_VERSION,
            kind: kind.to_owned(),
            config: self.config,
            vocab_hash: self.vocab.fingerprint(),
            codes: self.codes.clone(),
            intercepts: self.regressors.iter().map(|r| r.intercept).collect(),
            coefficients: self.regressors.iter().map(|r| r.coefficients.clone()).collect(),
        };
        let mut out = crate::corpus::create(path)?;
        serde_json::to_writer(&mut out, &file)?;
        std::io::Write::write_all(&mut out, b"\n").map_err(|e| Error::io(path, e))?;
        std::io::Write::flush(&mut out).map_err(|e| Error::io(path, e))
    }

    pub(crate) fn load(path: &Path, vocab: &Vocabulary, kind: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        if file.kind != kind {
            return Err(Error::Model(format!("expected a {kind} model, found {:?}", file.kind)));
        }
        if file.vocab_hash != vocab.fingerprint() {
            return Err(Error::Model(
                "vocabulary hash mismatch: the model was trained on a different vocabulary".into(),
            ));
        }
        file.config.validate()?;
        let n = file.codes.len();
        if file.intercepts.len() != n || file.coefficients.len() != n {
            return Err(Error::Model(format!(
                "{n} codes but {} intercepts and {} coefficient vectors",
                file.intercepts.len(),
                file.coefficients.len()
            )));
        }
        let mut regressors = Vec::with_capacity(n);
        for (intercept, coefficients) in file.intercepts.into_iter().zip(file.coefficients) {
            if coefficients.iter().any(|&(i, _)| i >= vocab.len()) {
                return Err(Error::Model("coefficient index outside the vocabulary".into()));
            }
            if coefficients.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::Model("coefficient indices must be strictly increasing".into()));
            }
            if !intercept.is_finite() || coefficients.iter().any(|(_, v)| !v.is_finite()) {
                return Err(Error::Model("non-finite parameter".into()));
            }
            regressors.push(CodeRegressor { coefficients, intercept });
        }
        Ok(LinearModel {
            vocab: vocab.clone(),
            codes: file.codes,
            regressors,
            config: file.config,
        })
    }

    /// Builds training features once, honoring `binary_features`.
    pub(crate) fn training_features(vocab: &Vocabulary, docs: &[&Document], binary: bool) -> Vec<FeatureVector> {
        docs.iter()
            .map(|d| {
                let fv = vocab.featurize(&d.tokens);
                if binary {
                    fv.binarized()
                } else {
                    fv
                }
            })
            .collect()
    }
}

/// Trains one code's regressor on `(features, log-probability target)` pairs.
pub fn train_code_regressor(
    features: &[&FeatureVector],
    targets: &[f64],
    n_features: usize,
    config: &TrainConfig,
    code_index: usize,
) -> Result<CodeRegressor> {
    config.validate()?;
    let mut rng = rng_for(config.seed, "proxy", code_index as u64);
    let (w, intercept) = sgd::fit(features, targets, n_features, Loss::Squared, config.schedule(), &mut rng)?;
    Ok(CodeRegressor {
        coefficients: sgd::sparsify(&w),
        intercept,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyModel(pub LinearModel);

impl ProxyModel {
    pub fn linear(&self) -> &LinearModel {
        &self.0
    }

    pub fn codes(&self) -> &[String] {
        &self.0.codes
    }

    pub fn predict_log(&self, x: &FeatureVector) -> Vec<f64> {
        self.0.scores(x)
    }

    pub fn predict_prob(&self, x: &FeatureVector) -> Vec<f64> {
        self.predict_log(x).into_iter().map(log_to_prob).collect()
    }

    pub fn predict_log_doc(&self, doc: &Document) -> Vec<f64> {
        self.predict_log(&self.0.features(&doc.tokens))
    }

    /// Proxy probabilities as a matrix aligned to `docs`.
    pub fn predict_matrix(&self, docs: &[&Document]) -> Result<PredictionMatrix> {
        let rows = docs
            .par_iter()
            .map(|d| (d.doc_id.clone(), self.predict_prob(&self.0.features(&d.tokens))))
            .collect();
        PredictionMatrix::new(self.0.codes.clone(), rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.0.save(path.as_ref(), "proxy")
    }

    pub fn load(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        LinearModel::load(path.as_ref(), vocab, "proxy").map(ProxyModel)
    }
}

pub fn log_to_prob(z: f64) -> f64 {
    z.exp().min(1.0)
}

/// Log-space targets for `docs`, one vector per code.
fn log_targets(predictions: &PredictionMatrix, docs: &[&Document], clamp_eps: f64) -> Result<Vec<Vec<f64>>> {
    predictions.require_docs(docs.iter().map(|d| d.doc_id.as_str()))?;
    let rows: Vec<&[f64]> = docs
        .iter()
        .map(|d| predictions.row_of(&d.doc_id).expect("checked above"))
        .collect();
    (0..predictions.n_codes())
        .map(|c| rows.iter().map(|r| log_transform(r[c], clamp_eps)).collect())
        .collect()
}

pub fn train_proxy(
    corpus: &Corpus,
    predictions: &PredictionMatrix,
    splits: &SplitAssignment,
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<ProxyModel> {
    config.validate()?;
    let docs = splits.select(corpus, Split::Train);
    if docs.is_empty() {
        return Err(Error::invalid("train split is empty"));
    }
    let targets = log_targets(predictions, &docs, config.clamp_eps)?;
    let features = LinearModel::training_features(vocab, &docs, config.binary_features);
    let refs: Vec<&FeatureVector> = features.iter().collect();
    let regressors = targets
        .par_iter()
        .enumerate()
        .map(|(c, y)| train_code_regressor(&refs, y, vocab.len(), config, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProxyModel(LinearModel {
        vocab: vocab.clone(),
        codes: predictions.codes().to_vec(),
        regressors,
        config: *config,
    }))
}

/// Mean over codes of the squared error between `predict_log` and the
/// log-transformed black-box probabilities on `docs`.
pub fn log_space_mse(model: &ProxyModel, predictions: &PredictionMatrix, docs: &[&Document]) -> Result<Vec<f64>> {
    if docs.is_empty() {
        return Err(Error::invalid("no documents to evaluate"));
    }
    let targets = log_targets(predictions, docs, model.0.config.clamp_eps)?;
    let preds: Vec<Vec<f64>> = docs.iter().map(|d| model.predict_log_doc(d)).collect();
    Ok(targets
        .iter()
        .enumerate()
        .map(|(c, y)| {
            let sse: f64 = y.iter().zip(&preds).map(|(t, p)| (p[c] - t).powi(2)).sum();
            sse / docs.len() as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub best_alpha: f64,
    /// `(alpha, validation MSE averaged over codes)` in candidate order.
    pub scores: Vec<(f64, f64)>,
}

/// Picks the alpha with the lowest validation MSE; exact ties go to the larger alpha.
pub fn grid_search_alpha(
    corpus: &Corpus,
    predictions: &PredictionMatrix,
    splits: &SplitAssignment,
    vocab: &Vocabulary,
    base: &TrainConfig,
    candidates: &[f64],
) -> Result<GridSearch> {
    if candidates.is_empty() {
        return Err(Error::invalid("alpha grid is empty"));
    }
    let val = splits.select(corpus, Split::Validation);
    let mut scores = Vec::with_capacity(candidates.len());
    for &alpha in candidates {
        let config = TrainConfig { alpha, ..*base };
        let model = train_proxy(corpus, predictions, splits, vocab, &config)?;
        let per_code = log_space_mse(&model, predictions, &val)?;
        scores.push((alpha, per_code.iter().sum::<f64>() / per_code.len() as f64));
    }
    let (best_alpha, _) = scores
        .iter()
        .copied()
        .reduce(|best, cand| {
            if cand.1 < best.1 || (cand.1 == best.1 && cand.0 > best.0) {
                cand
            } else {
                best
            }
        })
        .expect("non-empty");
    Ok(GridSearch { best_alpha, scores })
}
