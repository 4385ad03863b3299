//! Documents, vocabulary and bag-of-words features.
//!
//! Tokenization lowercases the text, splits on maximal runs of
//! non-alphanumeric characters and drops tokens without any alphabetic
//! character, so `"450mg"` survives while `"450"` does not.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_DOC_FREQ: usize = 3;

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().any(char::is_alphabetic))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub raw_text: String,
    pub tokens: Vec<String>,
    pub true_codes: BTreeSet<String>,
}

impl Document {
    pub fn new<I, S>(doc_id: impl Into<String>, raw_text: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let raw_text = raw_text.into();
        Document {
            doc_id: doc_id.into(),
            tokens: tokenize(&raw_text),
            raw_text,
            true_codes: labels.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CorpusLine {
    doc_id: String,
    text: String,
    labels: Vec<String>,
}

/// An ordered collection of documents with unique ids.
#[derive(Debug, Clone)]
pub struct Corpus {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut index = HashMap::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            if index.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate doc_id {:?}", doc.doc_id)));
            }
        }
        Ok(Corpus { docs, index })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut docs = Vec::new();
        let mut index = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CorpusLine =
                serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            if index.insert(rec.doc_id.clone(), docs.len()).is_some() {
                return Err(Error::parse(path, i + 1, format!("duplicate doc_id {:?}", rec.doc_id)));
            }
            docs.push(Document::new(rec.doc_id, rec.text, rec.labels));
        }
        Ok(Corpus { docs, index })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = create(path)?;
        for doc in &self.docs {
            let rec = CorpusLine {
                doc_id: doc.doc_id.clone(),
                text: doc.raw_text.clone(),
                labels: doc.true_codes.iter().cloned().collect(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            writeln!(out).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    /// Every label must name a code in `codes`.
    pub fn check_labels(&self, codes: &CodeSpace) -> Result<()> {
        for doc in &self.docs {
            if let Some(bad) = doc.true_codes.iter().find(|c| codes.index_of(c).is_none()) {
                return Err(Error::invalid(format!(
                    "document {:?} has label {:?} missing from the code list",
                    doc.doc_id, bad
                )));
            }
        }
        Ok(())
    }
}

/// The label set, in a fixed order, with descriptions.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpace {
    codes: Vec<String>,
    descriptions: Vec<String>,
    index: HashMap<String, usize>,
}

impl CodeSpace {
    pub fn new<I, C, D>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C, D)>,
        C: Into<String>,
        D: Into<String>,
    {
        let mut space = CodeSpace {
            codes: Vec::new(),
            descriptions: Vec::new(),
            index: HashMap::new(),
        };
        for (code, desc) in entries {
            space.push(code.into(), desc.into())?;
        }
        Ok(space)
    }

    fn push(&mut self, code: String, desc: String) -> Result<()> {
        if desc.trim().is_empty() {
            return Err(Error::invalid(format!("code {code:?} has an empty description")));
        }
        if self.index.contains_key(&code) {
            return Err(Error::invalid(format!("duplicate code {code:?}")));
        }
        self.index.insert(code.clone(), self.codes.len());
        self.codes.push(code);
        self.descriptions.push(desc);
        Ok(())
    }

    /// Reads `code<TAB>description` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut space = CodeSpace::new(Vec::<(String, String)>::new())?;
        for (lineno, line) in read_lines(path)? {
            let (code, desc) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, "expected code<TAB>description"))?;
            space
                .push(code.to_owned(), desc.to_owned())
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        }
        Ok(space)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = create(path)?;
        for (code, desc) in self.codes.iter().zip(&self.descriptions) {
            writeln!(out, "{code}\t{desc}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn description(&self, code: &str) -> Option<&str> {
        self.index_of(code).map(|i| self.descriptions[i].as_str())
    }

    pub fn description_at(&self, index: usize) -> &str {
        &self.descriptions[index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split {other:?}"))),
        }
    }
}

/// Assignment of every corpus document to exactly one split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    assignment: HashMap<String, Split>,
}

impl SplitAssignment {
    pub fn new(corpus: &Corpus, assignment: HashMap<String, Split>) -> Result<Self> {
        if let Some(id) = assignment.keys().find(|id| corpus.get(id).is_none()) {
            return Err(Error::invalid(format!("split file names unknown document {id:?}")));
        }
        if let Some(doc) = corpus.docs().iter().find(|d| !assignment.contains_key(&d.doc_id)) {
            return Err(Error::invalid(format!("document {:?} has no split", doc.doc_id)));
        }
        for split in Split::ALL {
            if !assignment.values().any(|&s| s == split) {
                return Err(Error::invalid(format!("split {split} is empty")));
            }
        }
        Ok(SplitAssignment { assignment })
    }

    /// Reads `doc_id<TAB>split` lines and validates them against `corpus`.
    pub fn load(path: impl AsRef<Path>, corpus: &Corpus) -> Result<Self> {
        let path = path.as_ref();
        let mut assignment = HashMap::new();
        for (lineno, line) in read_lines(path)? {
            let (id, split) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, "expected doc_id<TAB>split"))?;
            let split: Split = split
                .trim()
                .parse()
                .map_err(|e: Error| Error::parse(path, lineno, e.to_string()))?;
            if corpus.get(id).is_none() {
                return Err(Error::parse(path, lineno, format!("document {id:?} not in corpus")));
            }
            if assignment.insert(id.to_owned(), split).is_some() {
                return Err(Error::parse(path, lineno, format!("document {id:?} listed twice")));
            }
        }
        SplitAssignment::new(corpus, assignment)
    }

    /// Writes in corpus order.
    pub fn save(&self, path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
        let path = path.as_ref();
        let mut out = create(path)?;
        for doc in corpus.docs() {
            let split = self.assignment[&doc.doc_id];
            writeln!(out, "{}\t{}", doc.doc_id, split).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn split_of(&self, doc_id: &str) -> Option<Split> {
        self.assignment.get(doc_id).copied()
    }

    /// Documents of one split, in corpus order.
    pub fn select<'c>(&self, corpus: &'c Corpus, split: Split) -> Vec<&'c Document> {
        corpus
            .docs()
            .iter()
            .filter(|d| self.split_of(&d.doc_id) == Some(split))
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignment.values().filter(|&&s| s == split).count()
    }
}

/// Frozen token → index map. Indices follow lexicographic token order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_doc_freq: usize,
}

impl Vocabulary {
    /// Keeps every token that occurs in at least `min_doc_freq` distinct documents.
    pub fn build<'a, I>(docs: I, min_doc_freq: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut doc_freq: HashMap<&str, usize> = HashMap::new();
        let mut n_docs = 0usize;
        for tokens in docs {
            n_docs += 1;
            let distinct: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
            for t in distinct {
                *doc_freq.entry(t).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::invalid("cannot build a vocabulary from zero documents"));
        }
        let mut tokens: Vec<String> = doc_freq
            .into_iter()
            .filter(|&(_, df)| df >= min_doc_freq)
            .map(|(t, _)| t.to_owned())
            .collect();
        if tokens.is_empty() {
            return Err(Error::invalid(format!(
                "no token reaches min_doc_freq = {min_doc_freq}; vocabulary would be empty"
            )));
        }
        tokens.sort_unstable();
        Ok(Self::from_sorted(tokens, min_doc_freq))
    }

    /// Builds from an explicit token list; duplicates are rejected.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        tokens.sort_unstable();
        if tokens.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate token in vocabulary"));
        }
        Ok(Self::from_sorted(tokens, 1))
    }

    fn from_sorted(tokens: Vec<String>, min_doc_freq: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens,
            index,
            min_doc_freq,
        }
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_doc_freq(&self) -> usize {
        self.min_doc_freq
    }

    /// Hex SHA-256 of the newline-joined token list.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.tokens {
            hasher.update(t.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn featurize(&self, tokens: &[String]) -> FeatureVector {
        FeatureVector::from_indices(tokens.iter().filter_map(|t| self.get(t)))
    }
}

/// Sparse token counts, sorted by vocabulary index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector {
    entries: Vec<(usize, u32)>,
}

impl FeatureVector {
    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut idx: Vec<usize> = indices.into_iter().collect();
        idx.sort_unstable();
        let mut entries: Vec<(usize, u32)> = Vec::new();
        for i in idx {
            match entries.last_mut() {
                Some((last, n)) if *last == i => *n += 1,
                _ => entries.push((i, 1)),
            }
        }
        FeatureVector { entries }
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, index: usize) -> u32 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0, |pos| self.entries[pos].1)
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, n)| u64::from(n)).sum()
    }

    /// Presence indicators instead of counts.
    pub fn binarized(&self) -> Self {
        FeatureVector {
            entries: self.entries.iter().map(|&(i, _)| (i, 1)).collect(),
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, n)| weights[i] * f64::from(n)).sum()
    }
}

pub fn featurize(doc: &Document, vocab: &Vocabulary) -> FeatureVector {
    vocab.featurize(&doc.tokens)
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if !line.trim().is_empty() {
            out.push((i + 1, line.to_owned()));
        }
    }
    Ok(out)
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("Pt. admitted 2x with CHF, 450mg."),
            toks(&["pt", "admitted", "2x", "with", "chf", "450mg"])
        );
        assert!(tokenize("12 34 .").is_empty());
    }

    #[test]
    fn vocabulary_examples() {
        let a = toks(&["a", "b"]);
        let b = toks(&["a"]);
        let v = Vocabulary::build([a.as_slice(), b.as_slice()], 2).unwrap();
        assert_eq!(v.tokens(), &["a".to_string()]);
        assert_eq!(v.get("a"), Some(0));
        assert_eq!(v.get("b"), None);

        let ba = toks(&["b", "a"]);
        let v = Vocabulary::build([ba.as_slice()], 1).unwrap();
        assert_eq!(v.get("a"), Some(0));
        assert_eq!(v.get("b"), Some(1));

        assert!(Vocabulary::build([b.as_slice()], 2).is_err());
        assert!(Vocabulary::build(std::iter::empty::<&[String]>(), 1).is_err());
    }

    #[test]
    fn featurize_examples() {
        let vocab = Vocabulary::from_tokens(["the", "cat"]).unwrap();
        // lexicographic: cat=0, the=1
        let fv = vocab.featurize(&toks(&["the", "cat", "the"]));
        assert_eq!(fv.entries(), &[(0, 1), (1, 2)]);
        assert_eq!(fv.count(vocab.get("the").unwrap()), 2);

        let vocab = Vocabulary::from_tokens(["the"]).unwrap();
        assert!(vocab.featurize(&toks(&["zzz"])).is_empty());
        assert!(vocab.featurize(&[]).is_empty());
    }

    #[test]
    fn splits_reject_missing_and_unknown_docs() {
        let corpus = Corpus::new(vec![
            Document::new("d1", "a", ["x"]),
            Document::new("d2", "b", Vec::<String>::new()),
            Document::new("d3", "c", Vec::<String>::new()),
        ])
        .unwrap();
        let mut m: HashMap<String, Split> = [
            ("d1".to_string(), Split::Train),
            ("d2".to_string(), Split::Validation),
        ]
        .into_iter()
        .collect();
        assert!(SplitAssignment::new(&corpus, m.clone()).is_err());
        m.insert("d3".into(), Split::Test);
        assert!(SplitAssignment::new(&corpus, m.clone()).is_ok());
        m.insert("d4".into(), Split::Test);
        assert!(SplitAssignment::new(&corpus, m).is_err());
    }

    #[test]
    fn split_names() {
        assert_eq!("validation".parse::<Split>().unwrap(), Split::Validation);
        assert!("dev".parse::<Split>().is_err());
    }

    #[test]
    fn code_space_rejects_duplicates_and_empty_descriptions() {
        assert!(CodeSpace::new([("401.9", "hypertension"), ("401.9", "again")]).is_err());
        assert!(CodeSpace::new([("401.9", "  ")]).is_err());
        let cs = CodeSpace::new([("b", "bee"), ("a", "ay")]).unwrap();
        assert_eq!(cs.index_of("a"), Some(1));
        assert_eq!(cs.description("b"), Some("bee"));
    }

    #[test]
    fn corpus_rejects_duplicate_ids() {
        assert!(Corpus::new(vec![Document::new("d", "a", ["x"]), Document::new("d", "b", ["y"])]).is_err());
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,80}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn featurize_total_counts_in_vocab_tokens(words in proptest::collection::vec("[a-e]{1,2}", 0..40)) {
            let vocab = Vocabulary::from_tokens(["a", "b", "cc", "d"]).unwrap();
            let fv = vocab.featurize(&words);
            let expected = words.iter().filter(|w| vocab.get(w).is_some()).count() as u64;
            prop_assert_eq!(fv.total(), expected);
        }

        #[test]
        fn build_vocabulary_ignores_doc_order(
            docs in proptest::collection::vec(proptest::collection::vec("[a-f]", 0..6), 1..10),
            min_df in 1usize..3,
        ) {
            let fwd = Vocabulary::build(docs.iter().map(Vec::as_slice), min_df);
            let rev = Vocabulary::build(docs.iter().rev().map(Vec::as_slice), min_df);
            match (fwd, rev) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "order changed success"),
            }
        }
    }
}
