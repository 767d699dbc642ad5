//! Corpus ingestion, text normalization and the trimmed document-term matrix.

mod porter;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use porter::stem;

/// Default stopword list, one lowercase word per line.
pub const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// ISO 3166 alpha-3 country code: exactly three uppercase ASCII letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 3]);

impl CountryCode {
    pub fn as_str(&self) -> &str {
        // Only ASCII uppercase bytes are ever stored.
        std::str::from_utf8(&self.0).expect("ascii")
    }
}

impl FromStr for CountryCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_uppercase) {
            return Err(Error::Invalid(format!("`{s}` is not an ISO3 country code")));
        }
        Ok(CountryCode([bytes[0], bytes[1], bytes[2]]))
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One speech as read from disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeechDoc {
    pub country: CountryCode,
    pub year: i32,
    pub session: u32,
    pub text: String,
}

impl SpeechDoc {
    /// Stable identifier, the file stem `<ISO3>_<session>_<year>`.
    pub fn doc_id(&self) -> String {
        format!("{}_{}_{}", self.country, self.session, self.year)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadWarning {
    /// The file name does not follow `<ISO3>_<session>_<year>.txt`.
    MalformedName(PathBuf),
    /// The year parsed fine but is outside the configured range.
    YearOutOfRange(PathBuf),
    /// Contents are not valid UTF-8 or could not be read.
    Unreadable(PathBuf),
    /// The file was read but contains no text.
    EmptyText(PathBuf),
}

impl LoadWarning {
    /// True for warnings that caused the file to be skipped.
    pub fn is_skip(&self) -> bool {
        !matches!(self, LoadWarning::EmptyText(_))
    }
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::MalformedName(p) => write!(f, "skipped {}: malformed file name", p.display()),
            LoadWarning::YearOutOfRange(p) => write!(f, "skipped {}: year out of range", p.display()),
            LoadWarning::Unreadable(p) => write!(f, "skipped {}: not readable as UTF-8", p.display()),
            LoadWarning::EmptyText(p) => write!(f, "{}: empty text", p.display()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadedCorpus {
    /// Documents in file-name order.
    pub docs: Vec<SpeechDoc>,
    pub warnings: Vec<LoadWarning>,
}

impl LoadedCorpus {
    pub fn skipped(&self) -> usize {
        self.warnings.iter().filter(|w| w.is_skip()).count()
    }
}

pub const DEFAULT_YEARS: RangeInclusive<i32> = 1970..=2014;

/// Parse `<ISO3>_<session>_<year>.txt` into (country, session, year).
pub fn parse_file_name(name: &str) -> Option<(CountryCode, u32, i32)> {
    let stem = name.strip_suffix(".txt")?;
    let mut parts = stem.split('_');
    let country = parts.next()?.parse().ok()?;
    let session = parts.next()?;
    let year = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(session) || !digits(year) {
        return None;
    }
    Some((country, session.parse().ok()?, year.parse().ok()?))
}

/// Read every `<ISO3>_<session>_<year>.txt` file directly under `root`.
pub fn load_corpus(root: &Path, years: RangeInclusive<i32>) -> Result<LoadedCorpus> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let file_type = entry.file_type().map_err(|e| Error::io(entry.path(), e))?;
        if file_type.is_file() {
            paths.push(entry.path());
        }
    }
    paths.sort();

    let mut out = LoadedCorpus::default();
    for path in paths {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let Some((country, session, year)) = parse_file_name(name) else {
            out.warnings.push(LoadWarning::MalformedName(path));
            continue;
        };
        if !years.contains(&year) {
            out.warnings.push(LoadWarning::YearOutOfRange(path));
            continue;
        }
        let Ok(text) = fs::read_to_string(&path) else {
            out.warnings.push(LoadWarning::Unreadable(path));
            continue;
        };
        if text.trim().is_empty() {
            out.warnings.push(LoadWarning::EmptyText(path.clone()));
        }
        out.docs.push(SpeechDoc {
            country,
            year,
            session,
            text,
        });
    }
    Ok(out)
}

/// Lowercase stopword set.
#[derive(Clone, Debug)]
pub struct StopWords(BTreeSet<String>);

impl StopWords {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for w in words {
            let w = w.into();
            if w.chars().any(char::is_uppercase) {
                return Err(Error::Invalid(format!("stopword `{w}` is not lowercase")));
            }
            set.insert(w);
        }
        Ok(StopWords(set))
    }

    /// Parse one word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS).expect("bundled list is lowercase")
    }

    pub fn empty() -> Self {
        StopWords(BTreeSet::new())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct PreprocessConfig {
    pub stopwords: StopWords,
    pub stem: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: StopWords::english(),
            stem: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Split text into lowercase Latin-1 word tokens.
///
/// Tokens are maximal runs of alphanumeric characters. A run containing any
/// numeric character is dropped whole; characters above U+00FF are deleted
/// from the runs that remain.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|run| !run.is_empty() && !run.chars().any(char::is_numeric))
        .filter_map(|run| {
            let token: String = run
                .chars()
                .filter(|&c| (c as u32) <= 0xFF)
                .flat_map(char::to_lowercase)
                .collect();
            (!token.is_empty()).then_some(token)
        })
        .collect()
}

/// Tokenize, drop stopwords, then stem (if enabled). Token order is kept.
pub fn preprocess(doc: &SpeechDoc, config: &PreprocessConfig) -> TokenizedDoc {
    TokenizedDoc {
        doc_id: doc.doc_id(),
        tokens: preprocess_text(&doc.text, config),
    }
}

pub fn preprocess_text(text: &str, config: &PreprocessConfig) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !config.stopwords.contains(t))
        .map(|t| if config.stem { stem(&t) } else { t })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Preprocess many documents in parallel; output order matches input order.
pub fn preprocess_all(docs: &[SpeechDoc], config: &PreprocessConfig) -> Vec<TokenizedDoc> {
    docs.par_iter().map(|d| preprocess(d, config)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    corpus_counts: Vec<u64>,
    doc_counts: Vec<u64>,
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, corpus_counts: Vec<u64>, doc_counts: Vec<u64>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            index,
            corpus_counts,
            doc_counts,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn term_id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn corpus_count(&self, id: usize) -> u64 {
        self.corpus_counts[id]
    }

    pub fn doc_count(&self, id: usize) -> u64 {
        self.doc_counts[id]
    }

    /// One term per line; the line number is the term id.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.terms {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }
}

/// Sparse document-term counts, stored row-wise with term ids ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocTermMatrix {
    doc_ids: Vec<String>,
    n_terms: usize,
    rows: Vec<Vec<(usize, u32)>>,
}

impl DocTermMatrix {
    /// Build from explicit rows. Each row is a list of `(term, count)`;
    /// duplicate terms in a row are merged and zero counts dropped.
    pub fn from_rows(doc_ids: Vec<String>, n_terms: usize, rows: Vec<Vec<(usize, u32)>>) -> Result<Self> {
        if doc_ids.len() != rows.len() {
            return Err(Error::LengthMismatch(doc_ids.len(), rows.len()));
        }
        let mut clean = Vec::with_capacity(rows.len());
        for row in rows {
            let mut merged: BTreeMap<usize, u32> = BTreeMap::new();
            for (t, c) in row {
                if t >= n_terms {
                    return Err(Error::Invalid(format!("term id {t} out of range 0..{n_terms}")));
                }
                *merged.entry(t).or_default() += c;
            }
            clean.push(merged.into_iter().filter(|&(_, c)| c > 0).collect());
        }
        Ok(DocTermMatrix {
            doc_ids,
            n_terms,
            rows: clean,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn row(&self, doc: usize) -> &[(usize, u32)] {
        &self.rows[doc]
    }

    pub fn doc_len(&self, doc: usize) -> u64 {
        self.rows[doc].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn total_count(&self) -> u64 {
        (0..self.n_docs()).map(|d| self.doc_len(d)).sum()
    }

    /// Rows with no retained tokens.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.n_docs()).filter(|&d| self.rows[d].is_empty()).collect()
    }

    /// `(doc, term, count)` triples in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(d, row)| row.iter().map(move |&(t, c)| (d, t, c)))
    }

    /// Sub-matrix of the given rows, keeping every column.
    pub fn select_rows(&self, docs: &[usize]) -> DocTermMatrix {
        DocTermMatrix {
            doc_ids: docs.iter().map(|&d| self.doc_ids[d].clone()).collect(),
            n_terms: self.n_terms,
            rows: docs.iter().map(|&d| self.rows[d].clone()).collect(),
        }
    }

    /// Sparse triple CSV: header `doc_id,term_id,count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["doc_id", "term_id", "count"])?;
        for (d, t, c) in self.entries() {
            w.write_record([self.doc_ids[d].as_str(), &t.to_string(), &c.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Count terms over all documents once, drop every term below either
/// threshold, and build the matrix over the survivors. Terms are sorted
/// lexicographically.
pub fn trim_vocabulary(
    docs: &[TokenizedDoc],
    min_term_count: u64,
    min_doc_count: u64,
) -> Result<(Vocabulary, DocTermMatrix)> {
    if min_term_count < 1 || min_doc_count < 1 {
        return Err(Error::Invalid("trim thresholds must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for doc in docs {
        let mut seen = BTreeSet::new();
        for t in &doc.tokens {
            let e = counts.entry(t.as_str()).or_default();
            e.0 += 1;
            if seen.insert(t.as_str()) {
                e.1 += 1;
            }
        }
    }
    let kept: Vec<(&str, u64, u64)> = counts
        .into_iter()
        .filter(|&(_, (c, d))| c >= min_term_count && d >= min_doc_count)
        .map(|(t, (c, d))| (t, c, d))
        .collect();
    let vocab = Vocabulary::from_parts(
        kept.iter().map(|k| k.0.to_string()).collect(),
        kept.iter().map(|k| k.1).collect(),
        kept.iter().map(|k| k.2).collect(),
    );

    let rows = docs
        .iter()
        .map(|doc| {
            let mut row: BTreeMap<usize, u32> = BTreeMap::new();
            for t in &doc.tokens {
                if let Some(id) = vocab.term_id(t) {
                    *row.entry(id).or_default() += 1;
                }
            }
            row.into_iter().collect()
        })
        .collect();
    let matrix = DocTermMatrix {
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        n_terms: vocab.len(),
        rows,
    };
    Ok((vocab, matrix))
}
