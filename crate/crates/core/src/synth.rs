//! Synthetic corpora with a planted log-linear black box.
//!
//! The planted model emits `exp(min(w·x + b + noise, 0))` per code. Weights
//! are rescaled after the corpus is drawn so that the noiseless score
//! `w·x + b` stays at or below `-0.05` on every generated document; with
//! `noise_sd = 0` the log of every emitted probability is then exactly
//! linear in the token counts, and the distillation problem is realizable.
//!
//! Splits: documents are permuted with a seeded shuffle, then the first
//! `floor(0.7 n)` go to train, the next `floor(0.1 n)` to validation and the
//! remainder to test.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::blackbox::PredictionMatrix;
use crate::corpus::{CodeSpace, Corpus, Document, FeatureVector, Split, SplitAssignment, Vocabulary};
use crate::error::{Error, Result};
use crate::explain::EmbeddingTable;
use crate::plausibility::AnnotationRecord;
use crate::seed::{fnv1a64, rng_for, splitmix64};

/// Largest noiseless score allowed on any generated document.
pub const SCORE_CEILING: f64 = -0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub vocab_size: usize,
    pub n_docs: usize,
    pub min_doc_len: usize,
    pub max_doc_len: usize,
    pub n_codes: usize,
    pub noise_sd: f64,
    /// Nonzero planted weights per code.
    pub support_size: usize,
    /// Support tokens are drawn from this many most frequent ranks.
    pub support_pool: usize,
    /// Zipf exponent of the token distribution.
    pub zipf_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 13,
            vocab_size: 500,
            n_docs: 2000,
            min_doc_len: 5,
            max_doc_len: 75,
            n_codes: 20,
            noise_sd: 0.0,
            support_size: 8,
            support_pool: 20,
            zipf_s: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 || self.n_codes == 0 {
            return Err(Error::invalid("vocab_size and n_codes must be >= 1"));
        }
        if self.n_docs < 10 {
            return Err(Error::invalid("n_docs must be >= 10 so every split is non-empty"));
        }
        if self.min_doc_len == 0 || self.min_doc_len > self.max_doc_len {
            return Err(Error::invalid(format!(
                "invalid document length range {}..={}",
                self.min_doc_len, self.max_doc_len
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::invalid("noise_sd must be a nonnegative finite number"));
        }
        if self.support_size == 0 {
            return Err(Error::invalid("support_size must be >= 1"));
        }
        if !(self.zipf_s >= 0.0 && self.zipf_s.is_finite()) {
            return Err(Error::invalid("zipf_s must be >= 0"));
        }
        Ok(())
    }
}

/// Split sizes `(train, validation, test)` for `n` documents.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 7 / 10;
    let val = n / 10;
    (train, val, n - train - val)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    /// Every synthetic token, whether or not it occurs in the corpus.
    pub vocab: Vocabulary,
    pub codes: Vec<String>,
    pub weights: Vec<Vec<(usize, f64)>>,
    pub intercepts: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct PlantedFile {
    seed: u64,
    noise_sd: f64,
    codes: Vec<String>,
    intercepts: Vec<f64>,
    weights: Vec<Vec<(String, f64)>>,
}

impl PlantedModel {
    /// Noiseless `w·x + b` for one code.
    pub fn linear_score(&self, code: usize, x: &FeatureVector) -> f64 {
        self.intercepts[code]
            + self.weights[code]
                .iter()
                .map(|&(j, w)| w * f64::from(x.count(j)))
                .sum::<f64>()
    }

    /// Noise stream for `(doc_id, code)`; independent of evaluation order.
    fn noise(&self, doc_id: &str, code: usize) -> f64 {
        if self.noise_sd == 0.0 {
            return 0.0;
        }
        let key = splitmix64(fnv1a64(doc_id.as_bytes())) ^ code as u64;
        let mut rng = rng_for(self.seed, "synth-noise", key);
        Normal::new(0.0, self.noise_sd).expect("validated").sample(&mut rng)
    }

    pub fn predict(&self, code: usize, x: &FeatureVector, doc_id: &str) -> f64 {
        planted_probability(self.linear_score(code, x) + self.noise(doc_id, code))
    }

    pub fn emit_predictions(&self, corpus: &Corpus) -> Result<PredictionMatrix> {
        let rows = corpus
            .docs()
            .iter()
            .map(|d| {
                let x = self.vocab.featurize(&d.tokens);
                let probs = (0..self.codes.len()).map(|c| self.predict(c, &x, &d.doc_id)).collect();
                (d.doc_id.clone(), probs)
            })
            .collect();
        PredictionMatrix::new(self.codes.clone(), rows)
    }

    /// JSON with weights keyed by token string.
    pub fn to_json(&self) -> Result<String> {
        let file = PlantedFile {
            seed: self.seed,
            noise_sd: self.noise_sd,
            codes: self.codes.clone(),
            intercepts: self.intercepts.clone(),
            weights: self
                .weights
                .iter()
                .map(|ws| ws.iter().map(|&(j, w)| (self.vocab.token(j).to_owned(), w)).collect())
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }
}

/// `exp(min(score, 0))`.
pub fn planted_probability(score: f64) -> f64 {
    score.min(0.0).exp()
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub corpus: Corpus,
    pub codes: CodeSpace,
    pub splits: SplitAssignment,
    pub planted: PlantedModel,
    pub predictions: PredictionMatrix,
}

fn token_name(rank: usize, width: usize) -> String {
    format!("w{rank:0width$}")
}

pub fn generate_corpus(config: &SynthConfig) -> Result<SyntheticData> {
    config.validate()?;
    let width = (config.vocab_size - 1).to_string().len();
    let names: Vec<String> = (0..config.vocab_size).map(|r| token_name(r, width)).collect();
    let planted_vocab = Vocabulary::from_tokens(names.iter().cloned())?;
    // zero-padding keeps lexicographic order equal to rank order
    debug_assert!((0..names.len()).all(|r| planted_vocab.get(&names[r]) == Some(r)));

    let zipf = WeightedIndex::new((0..config.vocab_size).map(|r| 1.0 / ((r + 1) as f64).powf(config.zipf_s)))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng_for(config.seed, "synth-docs", 0);
    let doc_width = (config.n_docs - 1).to_string().len();
    let token_lists: Vec<Vec<usize>> = (0..config.n_docs)
        .map(|_| {
            let len = rng.random_range(config.min_doc_len..=config.max_doc_len);
            (0..len).map(|_| zipf.sample(&mut rng)).collect()
        })
        .collect();
    let features: Vec<FeatureVector> = token_lists
        .iter()
        .map(|t| FeatureVector::from_indices(t.iter().copied()))
        .collect();

    let code_width = (config.n_codes - 1).to_string().len();
    let codes: Vec<String> = (0..config.n_codes).map(|c| format!("S{c:0code_width$}")).collect();
    let pool = config.support_size.max(config.support_pool).min(config.vocab_size);
    let ranks: Vec<usize> = (0..pool).collect();
    let mut weights = Vec::with_capacity(config.n_codes);
    let mut intercepts = Vec::with_capacity(config.n_codes);
    for c in 0..config.n_codes {
        let mut rng = rng_for(config.seed, "synth-planted", c as u64);
        let intercept = rng.random_range(-6.0..=-2.0);
        let mut support: Vec<usize> = ranks
            .choose_multiple(&mut rng, config.support_size.min(pool))
            .copied()
            .collect();
        support.sort_unstable();
        let mut w: Vec<(usize, f64)> = support.iter().map(|&j| (j, rng.random_range(-0.5..1.5))).collect();
        let max_raw = features
            .iter()
            .map(|x| w.iter().map(|&(j, v)| v * f64::from(x.count(j))).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        if max_raw > 0.0 {
            let scale = (SCORE_CEILING - intercept) / max_raw;
            for (_, v) in w.iter_mut() {
                *v *= scale;
            }
        }
        weights.push(w);
        intercepts.push(intercept);
    }

    let planted = PlantedModel {
        vocab: planted_vocab,
        codes: codes.clone(),
        weights,
        intercepts,
        noise_sd: config.noise_sd,
        seed: config.seed,
    };

    let mut docs = Vec::with_capacity(config.n_docs);
    for (i, (tokens, x)) in token_lists.iter().zip(&features).enumerate() {
        let doc_id = format!("doc{i:0doc_width$}");
        let text = tokens.iter().map(|&r| names[r].as_str()).collect::<Vec<_>>().join(" ");
        let labels: Vec<&str> = (0..config.n_codes)
            .filter(|&c| planted.predict(c, x, &doc_id) >= 0.5)
            .map(|c| codes[c].as_str())
            .collect();
        docs.push(Document::new(doc_id, text, labels));
    }
    let corpus = Corpus::new(docs)?;

    let descriptions = describe_codes(&planted, &names, &zipf, config.seed);
    let code_space = CodeSpace::new(codes.iter().cloned().zip(descriptions))?;

    let mut order: Vec<usize> = (0..config.n_docs).collect();
    order.shuffle(&mut rng_for(config.seed, "synth-split", 0));
    let (n_train, n_val, _) = split_sizes(config.n_docs);
    let assignment: HashMap<String, Split> = order
        .iter()
        .enumerate()
        .map(|(pos, &i)| {
            let split = if pos < n_train {
                Split::Train
            } else if pos < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
            (corpus.docs()[i].doc_id.clone(), split)
        })
        .collect();
    let splits = SplitAssignment::new(&corpus, assignment)?;
    let predictions = planted.emit_predictions(&corpus)?;

    Ok(SyntheticData {
        corpus,
        codes: code_space,
        splits,
        planted,
        predictions,
    })
}

/// Up to three of the code's strongest positive tokens plus one common token.
fn describe_codes(planted: &PlantedModel, names: &[String], zipf: &WeightedIndex<f64>, seed: u64) -> Vec<String> {
    planted
        .weights
        .iter()
        .enumerate()
        .map(|(c, w)| {
            let mut rng = rng_for(seed, "synth-desc", c as u64);
            let mut positive: Vec<(usize, f64)> = w.iter().copied().filter(|&(_, v)| v > 0.0).collect();
            positive.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut words: Vec<&str> = positive.iter().take(3).map(|&(j, _)| names[j].as_str()).collect();
            words.push(names[zipf.sample(&mut rng)].as_str());
            words.join(" ")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityFixtureConfig {
    pub seed: u64,
    pub n_examples: usize,
    pub candidates_per_example: usize,
    pub dim: usize,
    /// Probability that a candidate repeats an earlier candidate of its example.
    pub duplicate_rate: f64,
}

impl Default for PlausibilityFixtureConfig {
    fn default() -> Self {
        PlausibilityFixtureConfig {
            seed: 13,
            n_examples: 99,
            candidates_per_example: 4,
            dim: 8,
            duplicate_rate: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlausibilityFixture {
    pub embeddings: EmbeddingTable,
    pub codes: CodeSpace,
    pub annotations: Vec<AnnotationRecord>,
}

/// Annotations that are linearly separable in embedding space.
///
/// "good" tokens sit near `+3 e0`, "bad" tokens near `-3 e0`, and
/// description tokens are orthogonal to `e0`. A candidate with at least 10
/// good tokens out of 14 is rated 1 or 2; one with at most 4 is rated 0.
pub fn generate_plausibility_fixture(config: &PlausibilityFixtureConfig) -> Result<PlausibilityFixture> {
    if config.dim < 2 || config.n_examples < 2 || config.candidates_per_example == 0 {
        return Err(Error::invalid("fixture needs dim >= 2, n_examples >= 2 and >= 1 candidate"));
    }
    let mut rng = rng_for(config.seed, "synth-plausibility", 0);
    let noise = Normal::new(0.0, 0.3).expect("constant");
    let n_words = 30;
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for (prefix, sign) in [("good", 3.0), ("bad", -3.0)] {
        for i in 0..n_words {
            let mut v: Vec<f64> = (0..config.dim).map(|_| noise.sample(&mut rng)).collect();
            v[0] = sign + noise.sample(&mut rng);
            rows.push((format!("{prefix}{i:02}"), v));
        }
    }
    let n_codes = 5;
    for c in 0..n_codes {
        for k in 0..3 {
            let mut v: Vec<f64> = (0..config.dim).map(|_| noise.sample(&mut rng)).collect();
            v[0] = 0.0;
            v[1 + (c % (config.dim - 1))] += 2.0;
            rows.push((format!("code{c}desc{k}"), v));
        }
    }
    let embeddings = EmbeddingTable::new(config.dim, rows)?;
    let codes = CodeSpace::new((0..n_codes).map(|c| {
        (format!("C{c}"), format!("code{c}desc0 code{c}desc1 code{c}desc2"))
    }))?;

    let mut annotations = Vec::new();
    for e in 0..config.n_examples {
        let code = format!("C{}", e % n_codes);
        let mut texts: Vec<(String, u8)> = Vec::new();
        for _ in 0..config.candidates_per_example {
            if !texts.is_empty() && rng.random_bool(config.duplicate_rate) {
                let dup = texts[rng.random_range(0..texts.len())].clone();
                texts.push(dup);
                continue;
            }
            let plausible = rng.random_bool(0.5);
            let n_good = if plausible { rng.random_range(10..=14) } else { rng.random_range(0..=4) };
            let mut words: Vec<String> = (0..14)
                .map(|i| {
                    let prefix = if i < n_good { "good" } else { "bad" };
                    format!("{prefix}{:02}", rng.random_range(0..n_words))
                })
                .collect();
            words.shuffle(&mut rng);
            let rating = if plausible { rng.random_range(1..=2) } else { 0 };
            texts.push((words.join(" "), rating));
        }
        for (text, rating) in texts {
            annotations.push(AnnotationRecord::new(format!("ex{e:03}"), code.clone(), text, rating)?);
        }
    }
    Ok(PlausibilityFixture {
        embeddings,
        codes,
        annotations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_docs: 100,
            vocab_size: 60,
            n_codes: 3,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate_corpus(&small()).unwrap();
        let b = generate_corpus(&small()).unwrap();
        assert_eq!(a.corpus.docs(), b.corpus.docs());
        assert_eq!(a.planted, b.planted);
        assert_eq!(a.predictions, b.predictions);
        assert_eq!(a.splits, b.splits);
        let c = generate_corpus(&SynthConfig { seed: 14, ..small() }).unwrap();
        assert_ne!(a.corpus.docs(), c.corpus.docs());
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        assert_eq!(split_sizes(100), (70, 10, 20));
        assert_eq!(split_sizes(2000), (1400, 200, 400));
        assert_eq!(split_sizes(15), (10, 1, 4));
        let d = generate_corpus(&small()).unwrap();
        assert_eq!(d.splits.count(Split::Train), 70);
        assert_eq!(d.splits.count(Split::Validation), 10);
        assert_eq!(d.splits.count(Split::Test), 20);
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        assert!(generate_corpus(&SynthConfig { vocab_size: 0, ..small() }).is_err());
        assert!(generate_corpus(&SynthConfig { n_codes: 0, ..small() }).is_err());
        assert!(generate_corpus(&SynthConfig { n_docs: 5, ..small() }).is_err());
        assert!(generate_corpus(&SynthConfig { min_doc_len: 9, max_doc_len: 3, ..small() }).is_err());
    }

    #[test]
    fn planted_probability_examples() {
        assert_eq!(planted_probability(0.0), 1.0);
        assert!((planted_probability(-2.0) - 0.1353352832366127).abs() < 1e-15);
        assert_eq!(planted_probability(3.0), 1.0);
    }

    #[test]
    fn noiseless_planted_scores_stay_below_ceiling() {
        let d = generate_corpus(&small()).unwrap();
        for doc in d.corpus.docs() {
            let x = d.planted.vocab.featurize(&doc.tokens);
            for c in 0..3 {
                let s = d.planted.linear_score(c, &x);
                assert!(s <= SCORE_CEILING + 1e-9);
                let p = d.predictions.row_of(&doc.doc_id).unwrap()[c];
                assert!((p.ln() - s).abs() < 1e-12);
                assert_eq!(doc.true_codes.contains(&d.codes.codes()[c]), p >= 0.5);
            }
        }
        // the document attaining the ceiling is a positive
        for c in 0..3 {
            assert!(d.predictions.column(c).iter().any(|&p| p >= 0.5));
        }
    }

    #[test]
    fn emitted_matrix_shape_and_range() {
        let d = generate_corpus(&SynthConfig { noise_sd: 0.5, ..small() }).unwrap();
        assert_eq!(d.predictions.n_docs(), 100);
        assert_eq!(d.predictions.n_codes(), 3);
        assert!(d.predictions.values().iter().all(|p| (0.0..=1.0).contains(p)));
        let again = d.planted.emit_predictions(&d.corpus).unwrap();
        assert_eq!(again, d.predictions);
    }

    #[test]
    fn descriptions_use_the_vocabulary() {
        let d = generate_corpus(&small()).unwrap();
        for i in 0..d.codes.len() {
            for w in d.codes.description_at(i).split(' ') {
                assert!(d.planted.vocab.get(w).is_some());
            }
        }
    }

    #[test]
    fn plausibility_fixture_is_deterministic() {
        let cfg = PlausibilityFixtureConfig::default();
        let a = generate_plausibility_fixture(&cfg).unwrap();
        let b = generate_plausibility_fixture(&cfg).unwrap();
        assert_eq!(a.annotations, b.annotations);
        assert_eq!(a.annotations.len(), 99 * 4);
    }
}
