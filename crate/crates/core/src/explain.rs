//! Span explanations anchored on the best-scoring 4-gram.
//!
//! Every window of `ngram` consecutive tokens is scored, the leftmost
//! maximum becomes the anchor, and the span is the anchor extended by
//! `context` tokens on each side, clipped at the document boundaries (the
//! span is never shifted to make up lost length). A document shorter than
//! `ngram` is its own anchor.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blackbox::ImportanceDump;
use crate::corpus::{create, Document, Vocabulary};
use crate::error::{check_len, Error, Result};
use crate::proxy::CodeRegressor;

pub const NGRAM: usize = 4;
pub const CONTEXT: usize = 5;
pub const MAX_SPAN: usize = NGRAM + 2 * CONTEXT;

/// How a linear model's coefficients become per-token importances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportanceMode {
    /// The token's coefficient.
    #[default]
    Coefficient,
    /// The coefficient times the token's count in the document.
    CountWeighted,
}

pub fn linear_importances(
    regressor: &CodeRegressor,
    tokens: &[String],
    vocab: &Vocabulary,
    mode: ImportanceMode,
) -> Vec<f64> {
    let counts = match mode {
        ImportanceMode::Coefficient => None,
        ImportanceMode::CountWeighted => Some(vocab.featurize(tokens)),
    };
    tokens
        .iter()
        .map(|t| match vocab.get(t) {
            None => 0.0,
            Some(j) => {
                let w = regressor.coefficient(j);
                match &counts {
                    Some(fv) => w * f64::from(fv.count(j)),
                    None => w,
                }
            }
        })
        .collect()
}

/// Token positions of an extracted span; `span_end` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub anchor_start: usize,
    pub anchor_len: usize,
    pub anchor_score: f64,
    pub span_start: usize,
    pub span_end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.span_end - self.span_start
    }

    pub fn is_empty(&self) -> bool {
        self.span_end == self.span_start
    }
}

/// Picks the leftmost best window; `score(start, len)` scores one window.
pub fn select_span<F>(n_tokens: usize, ngram: usize, context: usize, mut score: F) -> Result<Span>
where
    F: FnMut(usize, usize) -> f64,
{
    if n_tokens == 0 {
        return Err(Error::invalid("cannot explain an empty document"));
    }
    if ngram == 0 {
        return Err(Error::invalid("ngram must be >= 1"));
    }
    let len = ngram.min(n_tokens);
    let mut best: Option<(usize, f64)> = None;
    for start in 0..=n_tokens - len {
        let s = score(start, len);
        if !s.is_finite() {
            return Err(Error::invalid(format!("non-finite window score at position {start}")));
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((start, s));
        }
    }
    let (anchor_start, anchor_score) = best.expect("at least one window");
    Ok(Span {
        anchor_start,
        anchor_len: len,
        anchor_score,
        span_start: anchor_start.saturating_sub(context),
        span_end: (anchor_start + len + context).min(n_tokens),
    })
}

/// Anchor = window with the largest mean importance.
pub fn extract_span(importances: &[f64], ngram: usize, context: usize) -> Result<Span> {
    select_span(importances.len(), ngram, context, |start, len| {
        importances[start..start + len].iter().sum::<f64>() / len as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub doc_id: String,
    pub code: String,
    pub model: String,
    pub span_start: usize,
    pub anchor_start: usize,
    pub anchor_score: f64,
    pub tokens: Vec<String>,
}

impl Explanation {
    pub fn from_span(doc: &Document, code: &str, model: &str, span: &Span) -> Self {
        Explanation {
            doc_id: doc.doc_id.clone(),
            code: code.to_owned(),
            model: model.to_owned(),
            span_start: span.span_start,
            anchor_start: span.anchor_start,
            anchor_score: span.anchor_score,
            tokens: doc.tokens[span.span_start..span.span_end].to_vec(),
        }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn save_explanations(path: impl AsRef<Path>, explanations: &[Explanation]) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    for e in explanations {
        serde_json::to_writer(&mut out, e)?;
        writeln!(out).map_err(|err| Error::io(path, err))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_explanations(path: impl AsRef<Path>) -> Result<Vec<Explanation>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

/// Explanation from a linear model's coefficients for one code.
pub fn linear_extract(
    regressor: &CodeRegressor,
    vocab: &Vocabulary,
    doc: &Document,
    code: &str,
    model: &str,
    mode: ImportanceMode,
) -> Result<Explanation> {
    let imp = linear_importances(regressor, &doc.tokens, vocab, mode);
    let span = extract_span(&imp, NGRAM, CONTEXT)?;
    Ok(Explanation::from_span(doc, code, model, &span))
}

/// Explanation from externally supplied per-token scores.
pub fn dump_importance_extract(dump: &ImportanceDump, doc: &Document, code: &str, model: &str) -> Result<Explanation> {
    let imp = dump.get(&doc.doc_id, code).ok_or_else(|| {
        Error::invalid(format!("importance dump has no entry for ({}, {code})", doc.doc_id))
    })?;
    check_len(imp.len(), doc.tokens.len())?;
    let span = extract_span(imp, NGRAM, CONTEXT)?;
    Ok(Explanation::from_span(doc, code, model, &span))
}

/// Word vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, rows: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be >= 1"));
        }
        let mut table = EmbeddingTable {
            dim,
            index: HashMap::new(),
            tokens: Vec::new(),
            data: Vec::new(),
        };
        for (token, v) in rows {
            table.push(token, v)?;
        }
        Ok(table)
    }

    fn push(&mut self, token: String, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector for {token:?} has length {}, expected {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite component in vector for {token:?}")));
        }
        if self.index.insert(token.clone(), self.tokens.len()).is_some() {
            return Err(Error::invalid(format!("duplicate token {token:?}")));
        }
        self.tokens.push(token);
        self.data.extend(v);
        Ok(())
    }

    /// Text format: a `V D` header, then `token f1 ... fD` per line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing `V D` header"))?
            .map_err(|e| Error::io(path, e))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, 1, "header must be two integers `V D`"))?;
        let [count, dim] = nums[..] else {
            return Err(Error::parse(path, 1, "header must be two integers `V D`"));
        };
        let mut table = EmbeddingTable::new(dim, Vec::new()).map_err(|e| Error::parse(path, 1, e.to_string()))?;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|s| !s.is_empty());
            let token = parts.next().expect("non-empty line").to_owned();
            let v: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(path, lineno, format!("bad float: {e}")))?;
            table.push(token, v).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        }
        if table.len() != count {
            return Err(Error::parse(
                path,
                1,
                format!("header declares {count} vectors but the file has {}", table.len()),
            ));
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = create(path)?;
        writeln!(out, "{} {}", self.len(), self.dim).map_err(|e| Error::io(path, e))?;
        for (i, t) in self.tokens.iter().enumerate() {
            write!(out, "{t}").map_err(|e| Error::io(path, e))?;
            for x in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {x}").map_err(|e| Error::io(path, e))?;
            }
            writeln!(out).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        EmbeddingTable {
            data: self.data.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }
}

/// Mean of the in-table token vectors; the zero vector when none are in the table.
pub fn average_embedding<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t.as_ref())) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    sum
}

/// Cosine similarity, defined as 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Anchor = window whose mean embedding is most cosine-similar to the description's.
pub fn cosine_span(
    doc_tokens: &[String],
    description_tokens: &[String],
    table: &EmbeddingTable,
    ngram: usize,
    context: usize,
) -> Result<Span> {
    if description_tokens.is_empty() {
        return Err(Error::invalid("code description has no tokens"));
    }
    let target = average_embedding(description_tokens, table);
    select_span(doc_tokens.len(), ngram, context, |start, len| {
        cosine(&average_embedding(&doc_tokens[start..start + len], table), &target)
    })
}

pub fn cosine_importance_extract(
    doc: &Document,
    code: &str,
    description_tokens: &[String],
    table: &EmbeddingTable,
) -> Result<Explanation> {
    let span = cosine_span(&doc.tokens, description_tokens, table, NGRAM, CONTEXT)?;
    Ok(Explanation::from_span(doc, code, "cosine", &span))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn linear_importances_examples() {
        let vocab = Vocabulary::from_tokens(["cat", "sat", "the"]).unwrap();
        let reg = CodeRegressor {
            coefficients: vec![(vocab.get("cat").unwrap(), 2.0)],
            intercept: 0.0,
        };
        let t: Vec<String> = ["the", "cat", "sat"].iter().map(|s| s.to_string()).collect();
        assert_eq!(linear_importances(&reg, &t, &vocab, ImportanceMode::Coefficient), vec![0.0, 2.0, 0.0]);

        let oov: Vec<String> = ["zz", "yy"].iter().map(|s| s.to_string()).collect();
        assert_eq!(linear_importances(&reg, &oov, &vocab, ImportanceMode::Coefficient), vec![0.0, 0.0]);

        let dup: Vec<String> = ["cat", "the", "cat"].iter().map(|s| s.to_string()).collect();
        let imp = linear_importances(&reg, &dup, &vocab, ImportanceMode::Coefficient);
        assert_eq!(imp[0], imp[2]);
        let imp = linear_importances(&reg, &dup, &vocab, ImportanceMode::CountWeighted);
        assert_eq!(imp, vec![4.0, 0.0, 4.0]);
    }

    #[test]
    fn extract_span_examples() {
        let mut imp = vec![0.0; 20];
        imp[8..12].iter_mut().for_each(|v| *v = 1.0);
        let s = extract_span(&imp, 4, 5).unwrap();
        assert_eq!((s.anchor_start, s.span_start, s.span_end), (8, 3, 17));
        assert_eq!(s.len(), 14);

        let mut imp = vec![0.0; 20];
        imp[0..4].iter_mut().for_each(|v| *v = 1.0);
        let s = extract_span(&imp, 4, 5).unwrap();
        assert_eq!((s.anchor_start, s.span_start, s.span_end), (0, 0, 9));

        let s = extract_span(&[0.3; 10], 4, 5).unwrap();
        assert_eq!((s.anchor_start, s.span_start, s.span_end), (0, 0, 9));
        let s = extract_span(&[0.3; 10], 4, 10).unwrap();
        assert_eq!(s.len(), 10);

        let s = extract_span(&[0.1, 0.2], 4, 5).unwrap();
        assert_eq!((s.anchor_start, s.anchor_len, s.span_end), (0, 2, 2));
        assert!((s.anchor_score - 0.15).abs() < 1e-15);

        assert!(extract_span(&[], 4, 5).is_err());
    }

    #[test]
    fn uniform_ten_token_document_spans_everything_reachable() {
        // leftmost anchor at 0 reaches positions 0..9; the tenth token is
        // beyond the five-token context
        let s = extract_span(&[1.0; 10], 4, 5).unwrap();
        assert_eq!(s.anchor_start, 0);
        assert_eq!(s.span_end, 9);
    }

    #[test]
    fn average_embedding_examples() {
        let t = EmbeddingTable::new(2, vec![("a".into(), vec![1.0, -2.0]), ("b".into(), vec![-1.0, 2.0])]).unwrap();
        assert_eq!(average_embedding(&["a"], &t), vec![1.0, -2.0]);
        assert_eq!(average_embedding(&["a", "b"], &t), vec![0.0, 0.0]);
        assert_eq!(average_embedding(&["zz"], &t), vec![0.0, 0.0]);
        assert_eq!(average_embedding::<&str>(&[], &t), vec![0.0, 0.0]);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn cosine_picks_the_parallel_window() {
        let mut rows = vec![("x".to_string(), vec![0.0, 1.0]), ("d".to_string(), vec![1.0, 0.0])];
        rows.push(("y".to_string(), vec![0.0, -1.0]));
        let t = EmbeddingTable::new(2, rows).unwrap();
        let mut doc: Vec<String> = vec!["x".into(); 12];
        for i in 6..10 {
            doc[i] = "d".into();
        }
        let desc = vec!["d".to_string()];
        let s = cosine_span(&doc, &desc, &t, 4, 5).unwrap();
        assert_eq!(s.anchor_start, 6);
        assert!((s.anchor_score - 1.0).abs() < 1e-15);
        assert!(cosine_span(&doc, &[], &t, 4, 5).is_err());
        assert!(cosine_span(&[], &desc, &t, 4, 5).is_err());
    }

    #[test]
    fn embedding_file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        let t = EmbeddingTable::new(3, vec![("a".into(), vec![0.1, 0.2, -0.3]), ("b".into(), vec![1e-300, 5.0, 0.0])]).unwrap();
        t.save(&path).unwrap();
        assert_eq!(EmbeddingTable::load(&path).unwrap(), t);

        std::fs::write(&path, "2 2\na 1 2\nb 1\n").unwrap();
        let err = EmbeddingTable::load(&path).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
        std::fs::write(&path, "3 2\na 1 2\nb 1 2\n").unwrap();
        assert!(EmbeddingTable::load(&path).is_err());
        std::fs::write(&path, "2 2\na 1 2\na 1 2\n").unwrap();
        assert!(EmbeddingTable::load(&path).is_err());
    }

    #[test]
    fn dump_extract_requires_entry() {
        let corpus = crate::corpus::Corpus::new(vec![Document::new("d", toks(6).join(" "), ["c"])]).unwrap();
        let mut dump = ImportanceDump::default();
        dump.insert(&corpus, "d", "c", vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        let doc = corpus.get("d").unwrap();
        let e = dump_importance_extract(&dump, doc, "c", "attn").unwrap();
        assert_eq!(e.anchor_start, 2);
        assert_eq!(e.tokens.len(), 6);
        assert!(dump_importance_extract(&dump, doc, "other", "attn").is_err());
    }
}
