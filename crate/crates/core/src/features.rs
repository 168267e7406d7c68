//! Tokenization, word n-gram vocabulary construction, and TF-IDF sparse
//! vectorization of document text.
//!
//! Normalization lives here and nowhere else: every other module that
//! matches text (journal titles, keyword queries) goes through
//! [`tokenize`].

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeaturesError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary file {path}: {reason}")]
    BadVocabularyFile { path: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> FeaturesError {
    FeaturesError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Case-folded word tokens: maximal runs of alphanumeric characters.
/// Punctuation (including hyphens) splits tokens; digits are retained.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// True when `needle` occurs in `haystack` as a contiguous run of tokens.
pub fn contains_subsequence(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || haystack.len() < needle.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// A document as token segments. N-grams never cross a segment boundary,
/// which is how the title/abstract separator is realized.
pub type TokenSegments = Vec<Vec<String>>;

/// Tokenizes title and abstract into separate segments of one document.
pub fn doc_segments(title: &str, abstract_text: &str) -> TokenSegments {
    vec![tokenize(title), tokenize(abstract_text)]
}

/// All word n-grams of order 1..=max_n within each segment, space-joined.
pub fn ngrams(segments: &[Vec<String>], max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for segment in segments {
        for n in 1..=max_n {
            if segment.len() < n {
                continue;
            }
            for window in segment.windows(n) {
                out.push(window.join(" "));
            }
        }
    }
    out
}

/// A sparse feature vector: (index, value) pairs with strictly increasing
/// indices. Nonempty vectors are L2-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    pub fn new(entries: Vec<(usize, f64)>, dim: usize) -> SparseVector {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|(i, v)| *i < dim && v.is_finite()));
        SparseVector { entries, dim }
    }

    pub fn empty(dim: usize) -> SparseVector {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Dot product against a dense weight slice of length `dim`.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.entries.iter().map(|(i, v)| v * dense[*i]).sum()
    }

    fn normalized(mut self) -> SparseVector {
        let norm = self.l2_norm();
        if norm > 0.0 {
            for (_, v) in &mut self.entries {
                *v /= norm;
            }
        }
        self
    }
}

/// N-gram vocabulary with per-term document frequencies.
///
/// Term indices are assigned in lexicographic term order, so construction
/// is independent of document order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: BTreeMap<String, usize>,
    document_frequency: Vec<usize>,
    n_docs: usize,
    max_n: usize,
    min_df: usize,
}

impl Vocabulary {
    /// Builds the vocabulary over `docs`: all n-grams of order 1..=max_n
    /// whose document frequency is at least `min_df`.
    pub fn build(
        docs: &[TokenSegments],
        max_n: usize,
        min_df: usize,
    ) -> Result<Vocabulary, FeaturesError> {
        if docs.is_empty() {
            return Err(FeaturesError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<String> = ngrams(doc, max_n);
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let mut terms = Vec::new();
        let mut document_frequency = Vec::new();
        let mut index = BTreeMap::new();
        for (term, count) in df {
            if count >= min_df {
                index.insert(term.clone(), terms.len());
                terms.push(term);
                document_frequency.push(count);
            }
        }
        Ok(Vocabulary {
            terms,
            index,
            document_frequency,
            n_docs: docs.len(),
            max_n,
            min_df,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(|s| s.as_str())
    }

    pub fn document_frequency(&self, index: usize) -> Option<usize> {
        self.document_frequency.get(index).copied()
    }

    /// Smoothed inverse document frequency: ln((1 + n_docs)/(1 + df)) + 1.
    pub fn idf(&self, index: usize) -> f64 {
        let df = self.document_frequency[index] as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    /// TF-IDF vector of one document, L2-normalized. Out-of-vocabulary
    /// terms are ignored; a document with no in-vocabulary terms yields
    /// the empty vector.
    pub fn vectorize(&self, doc: &TokenSegments) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in ngrams(doc, self.max_n) {
            if let Some(idx) = self.index.get(&term) {
                *counts.entry(*idx).or_insert(0.0) += 1.0;
            }
        }
        let entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(idx, tf)| (idx, tf * self.idf(idx)))
            .collect();
        SparseVector::new(entries, self.len()).normalized()
    }

    /// Convenience: tokenize and vectorize a (title, abstract) pair.
    pub fn vectorize_text(&self, title: &str, abstract_text: &str) -> SparseVector {
        self.vectorize(&doc_segments(title, abstract_text))
    }

    /// The CSV form: `term,index,df` rows preceded by a metadata comment
    /// line carrying n_docs, max_n and min_df.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# n_docs={} max_n={} min_df={}\n",
            self.n_docs, self.max_n, self.min_df
        ));
        out.push_str("term,index,df\n");
        for (idx, term) in self.terms.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", term, idx, self.document_frequency[idx]));
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), FeaturesError> {
        let mut file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        file.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| io_err(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Vocabulary, FeaturesError> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        Self::read_csv(BufReader::new(file), &path.display().to_string())
    }

    pub(crate) fn read_csv<R: BufRead>(
        reader: R,
        path: &str,
    ) -> Result<Vocabulary, FeaturesError> {
        let bad = |reason: String| FeaturesError::BadVocabularyFile {
            path: path.to_string(),
            reason,
        };
        let mut lines = reader.lines();
        let meta = lines
            .next()
            .ok_or_else(|| bad("empty file".to_string()))?
            .map_err(|e| bad(e.to_string()))?;
        let meta = meta
            .strip_prefix("# ")
            .ok_or_else(|| bad("missing metadata line".to_string()))?;
        let mut n_docs = None;
        let mut max_n = None;
        let mut min_df = None;
        for part in meta.split_whitespace() {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("bad metadata entry '{part}'")))?;
            let value: usize = value
                .parse()
                .map_err(|_| bad(format!("bad metadata value '{part}'")))?;
            match key {
                "n_docs" => n_docs = Some(value),
                "max_n" => max_n = Some(value),
                "min_df" => min_df = Some(value),
                _ => return Err(bad(format!("unknown metadata key '{key}'"))),
            }
        }
        let (n_docs, max_n, min_df) = match (n_docs, max_n, min_df) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(bad("incomplete metadata line".to_string())),
        };
        let header = lines
            .next()
            .ok_or_else(|| bad("missing header".to_string()))?
            .map_err(|e| bad(e.to_string()))?;
        if header != "term,index,df" {
            return Err(bad(format!("unexpected header '{header}'")));
        }
        let mut terms = Vec::new();
        let mut document_frequency = Vec::new();
        let mut index = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            // Terms contain no commas (tokens are alphanumeric runs), so
            // splitting from the right is unambiguous.
            let mut parts = line.rsplitn(3, ',');
            let df: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("line {}: bad df", i + 3)))?;
            let idx: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("line {}: bad index", i + 3)))?;
            let term = parts
                .next()
                .ok_or_else(|| bad(format!("line {}: missing term", i + 3)))?;
            if idx != terms.len() {
                return Err(bad(format!("line {}: non-contiguous index {idx}", i + 3)));
            }
            index.insert(term.to_string(), idx);
            terms.push(term.to_string());
            document_frequency.push(df);
        }
        Ok(Vocabulary {
            terms,
            index,
            document_frequency,
            n_docs,
            max_n,
            min_df,
        })
    }
}
