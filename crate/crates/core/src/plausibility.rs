//! Plausibility scoring with an annotation classifier.
//!
//! An explanation and its code description are each mapped to the mean of
//! their word vectors; the concatenation feeds an L2-regularized logistic
//! regression that predicts whether an annotator called the explanation
//! informative (rating 1 or 2) or not (rating 0).
//!
//! The classifier minimizes `mean log-loss + (l2 / 2) * ||w||^2` (bias
//! unpenalized) by full-batch gradient descent with step `1 / L`, where `L`
//! bounds the curvature. Identical training rows are merged into weighted
//! groups first, so duplicating every record reproduces the same weights bit
//! for bit.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{create, tokenize, CodeSpace};
use crate::error::{check_len, Error, Result};
use crate::explain::{average_embedding, EmbeddingTable, Explanation};
use crate::metrics::roc_auc;
use crate::proxy::LinearModel;
use crate::seed::rng_for;
use crate::sgd::sigmoid;

pub const DEFAULT_TARGET_RATE: f64 = 0.42;
pub const DEFAULT_BOOTSTRAP_SAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub example_id: String,
    pub code: String,
    #[serde(rename = "explanation")]
    pub explanation_text: String,
    /// 0 not informative, 1 informative, 2 highly informative.
    pub rating: u8,
}

impl AnnotationRecord {
    pub fn new(
        example_id: impl Into<String>,
        code: impl Into<String>,
        explanation_text: impl Into<String>,
        rating: u8,
    ) -> Result<Self> {
        let rec = AnnotationRecord {
            example_id: example_id.into(),
            code: code.into(),
            explanation_text: explanation_text.into(),
            rating,
        };
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<()> {
        if self.rating > 2 {
            return Err(Error::invalid(format!("rating {} is not 0, 1 or 2", self.rating)));
        }
        if self.explanation_text.trim().is_empty() {
            return Err(Error::invalid(format!("empty explanation in example {:?}", self.example_id)));
        }
        Ok(())
    }

    pub fn is_plausible(&self) -> bool {
        self.rating >= 1
    }

    /// Whitespace-joined tokens; records with equal keys present identical text.
    fn text_key(&self) -> String {
        tokenize(&self.explanation_text).join(" ")
    }
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AnnotationRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        rec.validate().map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn save_annotations(path: impl AsRef<Path>, records: &[AnnotationRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// `[mean(explanation vectors), mean(description vectors)]`, length `2 * D`.
pub fn featurize_text(explanation: &str, description: &str, table: &EmbeddingTable) -> Vec<f64> {
    let mut v = average_embedding(&tokenize(explanation), table);
    v.extend(average_embedding(&tokenize(description), table));
    v
}

pub fn featurize_annotation(record: &AnnotationRecord, codes: &CodeSpace, table: &EmbeddingTable) -> Result<Vec<f64>> {
    let desc = codes
        .description(&record.code)
        .ok_or_else(|| Error::invalid(format!("no description for code {:?}", record.code)))?;
    Ok(featurize_text(&record.explanation_text, desc, table))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOptions {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions {
            l2: 1.0,
            max_iter: 10_000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub dim: usize,
    /// SHA-256 over the distinct training rows.
    pub fingerprint: String,
    pub iterations: usize,
}

impl PlausibilityClassifier {
    pub fn predict_features(&self, x: &[f64]) -> f64 {
        sigmoid(self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }

    pub fn predict(&self, explanation: &str, description: &str, table: &EmbeddingTable) -> f64 {
        self.predict_features(&featurize_text(explanation, description, table))
    }
}

struct Group<'a> {
    x: &'a [f64],
    y: f64,
    weight: f64,
}

fn group_rows<'a>(rows: impl IntoIterator<Item = (&'a [f64], bool)>) -> Vec<Group<'a>> {
    let mut index: HashMap<(Vec<u64>, bool), usize> = HashMap::new();
    let mut groups: Vec<Group<'a>> = Vec::new();
    for (x, y) in rows {
        let key = (x.iter().map(|v| v.to_bits()).collect(), y);
        match index.get(&key) {
            Some(&g) => groups[g].weight += 1.0,
            None => {
                index.insert(key, groups.len());
                groups.push(Group {
                    x,
                    y: if y { 1.0 } else { 0.0 },
                    weight: 1.0,
                });
            }
        }
    }
    groups
}

/// Trains on precomputed features; `labels[i]` is the binary plausibility label.
pub fn train_on_features(features: &[Vec<f64>], labels: &[bool], opts: &ClassifierOptions) -> Result<PlausibilityClassifier> {
    check_len(features.len(), labels.len())?;
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::invalid("annotation classifier needs both plausible and implausible examples"));
    }
    if !(opts.l2 > 0.0 && opts.l2.is_finite()) {
        return Err(Error::invalid("l2 strength must be > 0"));
    }
    let dim2 = features[0].len();
    if features.iter().any(|f| f.len() != dim2) {
        return Err(Error::invalid("annotation features have inconsistent lengths"));
    }
    let groups = group_rows(features.iter().map(Vec::as_slice).zip(labels.iter().copied()));

    let mut hasher = Sha256::new();
    for g in &groups {
        for v in g.x {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hasher.update([g.y as u8]);
    }
    let fingerprint: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

    let total: f64 = groups.iter().map(|g| g.weight).sum();
    let max_sq = groups
        .iter()
        .map(|g| g.x.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .fold(0.0, f64::max);
    let step = 1.0 / (0.25 * max_sq + opts.l2);

    let mut w = vec![0.0; dim2];
    let mut b = 0.0;
    let mut gw = vec![0.0; dim2];
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        gw.iter_mut().for_each(|v| *v = 0.0);
        let mut gb = 0.0;
        for g in &groups {
            let z = b + w.iter().zip(g.x).map(|(a, v)| a * v).sum::<f64>();
            let r = g.weight * (sigmoid(z) - g.y);
            for (acc, v) in gw.iter_mut().zip(g.x) {
                *acc += r * v;
            }
            gb += r;
        }
        for (acc, wj) in gw.iter_mut().zip(&w) {
            *acc = *acc / total + opts.l2 * wj;
        }
        gb /= total;
        let norm = (gw.iter().map(|v| v * v).sum::<f64>() + gb * gb).sqrt();
        iterations = it;
        if norm < opts.tol {
            break;
        }
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= step * g;
        }
        b -= step * gb;
    }
    Ok(PlausibilityClassifier {
        weights: w,
        bias: b,
        dim: dim2 / 2,
        fingerprint,
        iterations,
    })
}

pub fn train_classifier(
    records: &[AnnotationRecord],
    codes: &CodeSpace,
    table: &EmbeddingTable,
    opts: &ClassifierOptions,
) -> Result<PlausibilityClassifier> {
    let features = records
        .iter()
        .map(|r| featurize_annotation(r, codes, table))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<bool> = records.iter().map(AnnotationRecord::is_plausible).collect();
    train_on_features(&features, &labels, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    /// Hold out every record of one example per fold.
    E1,
    /// Hold out one record per fold, dropping same-example duplicates of its text from training.
    E2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub held_out: Vec<usize>,
    pub train: Vec<usize>,
}

pub fn loo_folds(records: &[AnnotationRecord], protocol: Protocol) -> Result<Vec<Fold>> {
    match protocol {
        Protocol::E1 => {
            let mut order: Vec<&str> = Vec::new();
            let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
            for (i, r) in records.iter().enumerate() {
                let entry = members.entry(r.example_id.as_str()).or_default();
                if entry.is_empty() {
                    order.push(&r.example_id);
                }
                entry.push(i);
            }
            if order.len() < 2 {
                return Err(Error::invalid("E1 needs at least two examples"));
            }
            Ok(order
                .iter()
                .map(|id| {
                    let held_out = members[id].clone();
                    let train = (0..records.len()).filter(|i| records[*i].example_id != *id).collect();
                    Fold { held_out, train }
                })
                .collect())
        }
        Protocol::E2 => {
            let keys: Vec<String> = records.iter().map(AnnotationRecord::text_key).collect();
            let distinct: BTreeSet<(&str, &str)> = records
                .iter()
                .zip(&keys)
                .map(|(r, k)| (r.example_id.as_str(), k.as_str()))
                .collect();
            if distinct.len() < 2 {
                return Err(Error::invalid("E2 needs at least two distinct explanations"));
            }
            Ok((0..records.len())
                .map(|i| {
                    let train = (0..records.len())
                        .filter(|&j| {
                            j != i && !(records[j].example_id == records[i].example_id && keys[j] == keys[i])
                        })
                        .collect();
                    Fold { held_out: vec![i], train }
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooResult {
    pub protocol: Protocol,
    pub folds: usize,
    pub accuracy: f64,
    /// `None` when the held-out labels are all one class.
    pub auc: Option<f64>,
    /// Held-out probability for every record, in input order.
    pub probabilities: Vec<f64>,
}

pub fn loo_evaluate(
    records: &[AnnotationRecord],
    protocol: Protocol,
    codes: &CodeSpace,
    table: &EmbeddingTable,
    opts: &ClassifierOptions,
) -> Result<LooResult> {
    let folds = loo_folds(records, protocol)?;
    let features = records
        .iter()
        .map(|r| featurize_annotation(r, codes, table))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<bool> = records.iter().map(AnnotationRecord::is_plausible).collect();
    let per_fold = folds
        .par_iter()
        .map(|fold| {
            let x: Vec<Vec<f64>> = fold.train.iter().map(|&i| features[i].clone()).collect();
            let y: Vec<bool> = fold.train.iter().map(|&i| labels[i]).collect();
            let clf = train_on_features(&x, &y, opts)?;
            Ok(fold
                .held_out
                .iter()
                .map(|&i| (i, clf.predict_features(&features[i])))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut probabilities = vec![f64::NAN; records.len()];
    for (i, p) in per_fold.into_iter().flatten() {
        probabilities[i] = p;
    }
    let correct = probabilities
        .iter()
        .zip(&labels)
        .filter(|(p, &l)| (**p >= 0.5) == l)
        .count();
    let auc = match roc_auc(&probabilities, &labels) {
        Ok(v) => Some(v),
        Err(Error::Degenerate) => None,
        Err(e) => return Err(e),
    };
    Ok(LooResult {
        protocol,
        folds: folds.len(),
        accuracy: correct as f64 / records.len() as f64,
        auc,
        probabilities,
    })
}

/// Smallest threshold whose positive fraction does not exceed `target_rate`,
/// made as close to it as ties allow. If even the single largest value is
/// tied too widely, the threshold sits just above the maximum.
pub fn calibrate_threshold(probs: &[f64], target_rate: f64) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::invalid("no probabilities to calibrate"));
    }
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::invalid(format!("target rate {target_rate} must lie in (0, 1)")));
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("non-finite probability"));
    }
    let n = probs.len();
    let rate = |m: usize| m as f64 / n as f64;
    let mut allowed = ((target_rate * n as f64).floor() as usize).min(n);
    while allowed > 0 && rate(allowed) > target_rate {
        allowed -= 1;
    }
    while allowed < n && rate(allowed + 1) <= target_rate {
        allowed += 1;
    }
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut threshold = sorted[0].next_up();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        if j + 1 > allowed {
            break;
        }
        threshold = sorted[i];
        i = j + 1;
    }
    Ok(threshold)
}

/// Classifier probabilities for one model's explanations, keyed by example.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProbabilities {
    pub model: String,
    pub probs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    /// Explanations at or above the threshold.
    pub score: usize,
    pub n: usize,
    pub interval: Option<(usize, usize)>,
}

fn check_coverage(models: &[ModelProbabilities]) -> Result<()> {
    if let Some(first) = models.first() {
        for m in &models[1..] {
            if !m.probs.keys().eq(first.probs.keys()) {
                return Err(Error::invalid(format!(
                    "models {:?} and {:?} cover different example sets",
                    first.model, m.model
                )));
            }
        }
    }
    Ok(())
}

pub fn score_models(models: &[ModelProbabilities], threshold: f64) -> Result<Vec<ModelScore>> {
    check_coverage(models)?;
    Ok(models
        .iter()
        .map(|m| ModelScore {
            model: m.model.clone(),
            score: m.probs.values().filter(|&&p| p >= threshold).count(),
            n: m.probs.len(),
            interval: None,
        })
        .collect())
}

/// Percentile interval of `sum_i Bernoulli(p_i)` over seeded replicates.
///
/// Replicate `r` draws from its own stream `(seed, "bootstrap", r)`; the
/// bounds are nearest-rank percentiles of the sorted replicate sums.
pub fn bootstrap_interval(probs: &[f64], n_samples: usize, level: f64, seed: u64) -> Result<(usize, usize)> {
    if n_samples == 0 {
        return Err(Error::invalid("bootstrap needs at least one sample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level {level} must lie in (0, 1)")));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let mut sums: Vec<usize> = (0..n_samples)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, "bootstrap", r as u64);
            probs.iter().filter(|&&p| rng.random::<f64>() < p).count()
        })
        .collect();
    sums.sort_unstable();
    let nearest_rank = |q: f64| -> usize {
        let rank = (q * n_samples as f64 - 1e-9).ceil().max(1.0) as usize;
        sums[rank.min(n_samples) - 1]
    };
    let tail = (1.0 - level) / 2.0;
    Ok((nearest_rank(tail), nearest_rank(1.0 - tail)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// `a = 1, b = 0`
    pub b: u64,
    /// `a = 0, b = 1`
    pub c: u64,
    pub p_value: f64,
}

/// Two-sided exact binomial p-value on the discordant counts.
pub fn mcnemar_p(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let k = b.min(c);
    // log-space pmf of Binomial(n, 1/2), accumulated up to k
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_coef = 0.0f64;
    let mut terms = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        if i > 0 {
            ln_coef += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        terms.push(ln_coef + ln_half_n);
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = max.exp() * terms.iter().map(|t| (t - max).exp()).sum::<f64>();
    (2.0 * tail).min(1.0)
}

pub fn mcnemar_exact(a: &[bool], b: &[bool]) -> Result<McNemar> {
    check_len(a.len(), b.len())?;
    let (mut only_a, mut only_b) = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        match (x, y) {
            (true, false) => only_a += 1,
            (false, true) => only_b += 1,
            _ => {}
        }
    }
    Ok(McNemar {
        b: only_a,
        c: only_b,
        p_value: mcnemar_p(only_a, only_b),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub model: String,
    pub score: usize,
    pub interval: (usize, usize),
    pub p_vs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringSummary {
    pub threshold: f64,
    pub target_rate: f64,
    pub n_examples: usize,
    pub models: Vec<ScoreEntry>,
}

/// Calibrates one threshold over all models' probabilities, then scores
/// each model, bootstraps its interval, and runs pairwise McNemar tests.
pub fn evaluate_models(
    models: &[ModelProbabilities],
    target_rate: f64,
    n_samples: usize,
    level: f64,
    seed: u64,
) -> Result<ScoringSummary> {
    if models.is_empty() {
        return Err(Error::invalid("no models to score"));
    }
    check_coverage(models)?;
    let pooled: Vec<f64> = models.iter().flat_map(|m| m.probs.values().copied()).collect();
    let threshold = calibrate_threshold(&pooled, target_rate)?;
    let labels: Vec<Vec<bool>> = models
        .iter()
        .map(|m| m.probs.values().map(|&p| p >= threshold).collect())
        .collect();
    let mut entries = Vec::with_capacity(models.len());
    for (i, m) in models.iter().enumerate() {
        let probs: Vec<f64> = m.probs.values().copied().collect();
        let interval = bootstrap_interval(&probs, n_samples, level, seed)?;
        let mut p_vs = BTreeMap::new();
        for (j, other) in models.iter().enumerate() {
            if i != j {
                p_vs.insert(other.model.clone(), mcnemar_exact(&labels[i], &labels[j])?.p_value);
            }
        }
        entries.push(ScoreEntry {
            model: m.model.clone(),
            score: labels[i].iter().filter(|&&l| l).count(),
            interval,
            p_vs,
        });
    }
    Ok(ScoringSummary {
        threshold,
        target_rate,
        n_examples: models[0].probs.len(),
        models: entries,
    })
}

/// Key under which an explanation is paired across models.
pub fn example_key(doc_id: &str, code: &str) -> String {
    format!("{doc_id}\t{code}")
}

/// Groups explanations by model and applies the classifier to each one.
pub fn classify_explanations(
    classifier: &PlausibilityClassifier,
    explanations: &[Explanation],
    codes: &CodeSpace,
    table: &EmbeddingTable,
) -> Result<Vec<ModelProbabilities>> {
    let mut by_model: BTreeMap<&str, BTreeMap<String, f64>> = BTreeMap::new();
    for e in explanations {
        let desc = codes
            .description(&e.code)
            .ok_or_else(|| Error::invalid(format!("no description for code {:?}", e.code)))?;
        let p = classifier.predict(&e.text(), desc, table);
        let slot = by_model.entry(&e.model).or_default();
        if slot.insert(example_key(&e.doc_id, &e.code), p).is_some() {
            return Err(Error::invalid(format!(
                "model {:?} has two explanations for ({}, {})",
                e.model, e.doc_id, e.code
            )));
        }
    }
    Ok(by_model
        .into_iter()
        .map(|(model, probs)| ModelProbabilities {
            model: model.to_owned(),
            probs,
        })
        .collect())
}

/// Scores candidate explanation texts for one model.
pub trait CandidateScorer {
    fn name(&self) -> &str;
    fn score(&self, code: &str, tokens: &[String]) -> Result<f64>;
}

/// Mean coefficient of a candidate's tokens under a linear model.
pub struct LinearScorer<'a> {
    pub name: String,
    pub model: &'a LinearModel,
}

impl CandidateScorer for LinearScorer<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, code: &str, tokens: &[String]) -> Result<f64> {
        let c = self
            .model
            .code_index(code)
            .ok_or_else(|| Error::invalid(format!("model {:?} has no code {code:?}", self.name)))?;
        if tokens.is_empty() {
            return Ok(0.0);
        }
        let reg = &self.model.regressors[c];
        let total: f64 = tokens
            .iter()
            .map(|t| self.model.vocab.get(t).map_or(0.0, |j| reg.coefficient(j)))
            .sum();
        Ok(total / tokens.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub example_id: String,
    pub code: String,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reassignment {
    /// `choices[model][example]` indexes into that example's candidates.
    pub choices: Vec<Vec<usize>>,
    pub models: Vec<String>,
    /// Examples where at least two models chose the same candidate.
    pub over_selected: usize,
}

/// Each model independently takes its highest-scoring candidate (leftmost on ties).
pub fn reassign_annotations(examples: &[CandidateSet], scorers: &[&dyn CandidateScorer]) -> Result<Reassignment> {
    let mut choices = vec![Vec::with_capacity(examples.len()); scorers.len()];
    let mut over_selected = 0;
    for ex in examples {
        if ex.candidates.is_empty() {
            return Err(Error::invalid(format!("example {:?} has no candidates", ex.example_id)));
        }
        let tokens: Vec<Vec<String>> = ex.candidates.iter().map(|c| tokenize(c)).collect();
        let mut picked = Vec::with_capacity(scorers.len());
        for (m, s) in scorers.iter().enumerate() {
            let mut best = (0usize, f64::NEG_INFINITY);
            for (k, t) in tokens.iter().enumerate() {
                let v = s.score(&ex.code, t)?;
                if v > best.1 {
                    best = (k, v);
                }
            }
            choices[m].push(best.0);
            picked.push(best.0);
        }
        picked.sort_unstable();
        if picked.windows(2).any(|w| w[0] == w[1]) {
            over_selected += 1;
        }
    }
    Ok(Reassignment {
        choices,
        models: scorers.iter().map(|s| s.name().to_owned()).collect(),
        over_selected,
    })
}
