//! Black-box outputs: dense probability matrices and per-token importance dumps.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{create, CodeSpace, Corpus};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Per-document, per-code probabilities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    doc_ids: Vec<String>,
    codes: Vec<String>,
    probs: Vec<f64>,
    rows: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    codes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    doc_id: String,
    probs: Vec<f64>,
}

impl PredictionMatrix {
    /// `rows` are `(doc_id, probs)` with probs aligned to `codes`.
    pub fn new(codes: Vec<String>, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut m = PredictionMatrix {
            doc_ids: Vec::with_capacity(rows.len()),
            probs: Vec::with_capacity(rows.len() * codes.len()),
            rows: HashMap::with_capacity(rows.len()),
            codes,
        };
        for (doc_id, probs) in rows {
            m.push_row(doc_id, probs)?;
        }
        Ok(m)
    }

    fn push_row(&mut self, doc_id: String, probs: Vec<f64>) -> Result<()> {
        if probs.len() != self.codes.len() {
            return Err(Error::invalid(format!(
                "row {doc_id:?} has {} probabilities for {} codes",
                probs.len(),
                self.codes.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("row {doc_id:?}: probability {p} outside [0, 1]")));
        }
        if self.rows.insert(doc_id.clone(), self.doc_ids.len()).is_some() {
            return Err(Error::invalid(format!("duplicate row for {doc_id:?}")));
        }
        self.doc_ids.push(doc_id);
        self.probs.extend(probs);
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, code_space: &CodeSpace) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header: Header = loop {
            match lines.next() {
                None => return Err(Error::parse(path, 1, "missing header line")),
                Some((i, line)) => {
                    let line = line.map_err(|e| Error::io(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line)
                        .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
                }
            }
        };
        if header.codes != code_space.codes() {
            return Err(Error::parse(
                path,
                1,
                "header code list does not match the code descriptions (same codes, same order required)",
            ));
        }
        let mut m = PredictionMatrix::new(header.codes, Vec::new())?;
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Row =
                serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            m.push_row(row.doc_id, row.probs)
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(m)
    }

    /// Floats are written in shortest round-trip form, so `load` restores them bit for bit.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = create(path)?;
        serde_json::to_writer(&mut out, &Header { codes: self.codes.clone() })?;
        writeln!(out).map_err(|e| Error::io(path, e))?;
        for (i, doc_id) in self.doc_ids.iter().enumerate() {
            let row = Row {
                doc_id: doc_id.clone(),
                probs: self.row(i).to_vec(),
            };
            serde_json::to_writer(&mut out, &row)?;
            writeln!(out).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_codes(&self) -> usize {
        self.codes.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.codes.len();
        &self.probs[i * n..(i + 1) * n]
    }

    pub fn row_of(&self, doc_id: &str) -> Option<&[f64]> {
        self.rows.get(doc_id).map(|&i| self.row(i))
    }

    pub fn get(&self, doc: usize, code: usize) -> f64 {
        self.probs[doc * self.codes.len() + code]
    }

    pub fn values(&self) -> &[f64] {
        &self.probs
    }

    pub fn column(&self, code: usize) -> Vec<f64> {
        (0..self.n_docs()).map(|d| self.get(d, code)).collect()
    }

    /// Fails naming the first id without a row.
    pub fn require_docs<'a>(&self, doc_ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for id in doc_ids {
            if !self.rows.contains_key(id) {
                return Err(Error::invalid(format!("predictions have no row for document {id:?}")));
            }
        }
        Ok(())
    }

    /// Restricts to `doc_ids`, in that order.
    pub fn subset<'a>(&self, doc_ids: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut rows = Vec::new();
        for id in doc_ids {
            let row = self
                .row_of(id)
                .ok_or_else(|| Error::invalid(format!("predictions have no row for document {id:?}")))?;
            rows.push((id.to_owned(), row.to_vec()));
        }
        PredictionMatrix::new(self.codes.clone(), rows)
    }

    /// Checks that two matrices share both axes.
    pub fn check_aligned(&self, other: &PredictionMatrix) -> Result<()> {
        if self.codes != other.codes {
            return Err(Error::invalid("prediction matrices have different code lists"));
        }
        if self.doc_ids != other.doc_ids {
            return Err(Error::invalid("prediction matrices have different document rows"));
        }
        Ok(())
    }
}

/// Entry is `true` iff the source probability is at least `threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPredictionMatrix {
    doc_ids: Vec<String>,
    codes: Vec<String>,
    labels: Vec<bool>,
    threshold: f64,
}

impl BinaryPredictionMatrix {
    pub fn get(&self, doc: usize, code: usize) -> bool {
        self.labels[doc * self.codes.len() + code]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        let n = self.codes.len();
        &self.labels[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[bool] {
        &self.labels
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn n_codes(&self) -> usize {
        self.codes.len()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }
}

pub fn binarize(matrix: &PredictionMatrix, threshold: f64) -> Result<BinaryPredictionMatrix> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold {threshold} must lie in (0, 1)")));
    }
    Ok(BinaryPredictionMatrix {
        doc_ids: matrix.doc_ids.clone(),
        codes: matrix.codes.clone(),
        labels: matrix.probs.iter().map(|&p| p >= threshold).collect(),
        threshold,
    })
}

/// Per-token importance scores keyed by `(doc_id, code)`.
#[derive(Debug, Clone, Default)]
pub struct ImportanceDump {
    scores: HashMap<(String, String), Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DumpLine {
    doc_id: String,
    code: String,
    importances: Vec<f64>,
}

impl ImportanceDump {
    pub fn insert(&mut self, corpus: &Corpus, doc_id: &str, code: &str, scores: Vec<f64>) -> Result<()> {
        let doc = corpus
            .get(doc_id)
            .ok_or_else(|| Error::invalid(format!("importance dump names unknown document {doc_id:?}")))?;
        if scores.len() != doc.tokens.len() {
            return Err(Error::invalid(format!(
                "importances for ({doc_id}, {code}) have length {} but the document has {} tokens",
                scores.len(),
                doc.tokens.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite importance for ({doc_id}, {code})")));
        }
        let key = (doc_id.to_owned(), code.to_owned());
        if self.scores.insert(key, scores).is_some() {
            return Err(Error::invalid(format!("duplicate importances for ({doc_id}, {code})")));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, corpus: &Corpus) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut dump = ImportanceDump::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DumpLine =
                serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            dump.insert(corpus, &rec.doc_id, &rec.code, rec.importances)
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(dump)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut keys: Vec<_> = self.scores.keys().collect();
        keys.sort();
        let mut out = create(path)?;
        for key in keys {
            let rec = DumpLine {
                doc_id: key.0.clone(),
                code: key.1.clone(),
                importances: self.scores[key].clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            writeln!(out).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, doc_id: &str, code: &str) -> Option<&[f64]> {
        self.scores
            .get(&(doc_id.to_owned(), code.to_owned()))
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}
