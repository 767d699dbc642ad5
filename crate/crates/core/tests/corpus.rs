use std::fs;

use proptest::prelude::*;

use semnet::corpus::{
    load_corpus, preprocess_text, stem, tokenize, trim_vocabulary, LoadWarning, PreprocessConfig, StopWords,
    TokenizedDoc, DEFAULT_YEARS,
};

#[test]
fn stems_match_reference_list() {
    let reference = include_str!("data/porter_reference.txt");
    let mut checked = 0;
    for line in reference.lines() {
        let (word, want) = line.split_once(' ').expect("word and stem");
        assert_eq!(stem(word), want, "stem({word})");
        checked += 1;
    }
    assert!(checked > 6000);
}

#[test]
fn single_speech() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("USA_25_1970.txt"), "Peace.").unwrap();
    let c = load_corpus(dir.path(), DEFAULT_YEARS).unwrap();
    assert_eq!(c.docs.len(), 1);
    let d = &c.docs[0];
    assert_eq!((d.country.as_str(), d.year, d.session), ("USA", 1970, 25));
    assert_eq!(d.doc_id(), "USA_25_1970");
    assert!(c.warnings.is_empty());
}

#[test]
fn empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let c = load_corpus(dir.path(), DEFAULT_YEARS).unwrap();
    assert!(c.docs.is_empty() && c.warnings.is_empty());
}

#[test]
fn malformed_name_skipped_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("notes.md"), "x").unwrap();
    fs::write(dir.path().join("FRA_69_2014.txt"), "Bonjour.").unwrap();
    let c = load_corpus(dir.path(), DEFAULT_YEARS).unwrap();
    assert_eq!(c.docs.len(), 1);
    assert_eq!(c.skipped(), 1);
    assert!(matches!(c.warnings[0], LoadWarning::MalformedName(_)));
}

#[test]
fn out_of_range_years_and_missing_root() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("FRA_20_1965.txt"), "x").unwrap();
    fs::write(dir.path().join("FRA_45_1990.txt"), "y").unwrap();
    let c = load_corpus(dir.path(), 1970..=2014).unwrap();
    assert_eq!(c.docs.len(), 1);
    assert_eq!(c.skipped(), 1);
    assert!(load_corpus(&dir.path().join("absent"), DEFAULT_YEARS).is_err());
}

fn docs(texts: &[&str]) -> Vec<TokenizedDoc> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| TokenizedDoc {
            doc_id: format!("d{i}"),
            tokens: t.split_whitespace().map(String::from).collect(),
        })
        .collect()
}

#[test]
fn trimming_thresholds() {
    let mut texts: Vec<String> = (0..9).map(|_| "nine common common".to_string()).collect();
    texts.extend((0..4).map(|_| "four ".repeat(10)));
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let (v, m) = trim_vocabulary(&docs(&refs), 10, 5).unwrap();
    // 9 occurrences fail the count; 40 occurrences in 4 documents fail the spread.
    assert_eq!(v.terms(), ["common"]);
    assert_eq!(v.corpus_count(0), 18);
    assert_eq!(m.n_docs(), 13);
    assert_eq!(m.empty_rows(), (9..13).collect::<Vec<_>>());

    let (v, m) = trim_vocabulary(&[], 10, 5).unwrap();
    assert_eq!((v.len(), m.n_docs(), m.n_terms()), (0, 0, 0));
    assert!(trim_vocabulary(&[], 0, 5).is_err());
}

#[test]
fn dtm_serialization_is_stable() {
    let d = docs(&["b a a", "c a", ""]);
    let write = || {
        let (_, m) = trim_vocabulary(&d, 1, 1).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    };
    let text = write();
    assert_eq!(text, "doc_id,term_id,count\nd0,0,2\nd0,1,1\nd1,0,1\nd1,2,1\n");
    assert_eq!(text, write());
}

#[test]
fn custom_stopwords_must_be_lowercase() {
    assert!(StopWords::parse("the\nAnd\n").is_err());
    let s = StopWords::parse("# comment\nthe\n\nand\n").unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(StopWords::english().len(), 179);
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,9}",
        "[A-Z][a-z]{1,6}",
        "[a-z]{1,4}[0-9]{1,2}",
        Just("égalité".to_string()),
        Just("北京".to_string()),
        Just("Nations,".to_string()),
    ]
}

fn text() -> impl Strategy<Value = String> {
    proptest::collection::vec(word(), 0..40).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn retokenizing_output_is_identity(t in text(), stem_first in any::<bool>()) {
        let cfg = PreprocessConfig { stopwords: StopWords::english(), stem: stem_first };
        let once = preprocess_text(&t, &cfg);
        let plain = PreprocessConfig { stopwords: StopWords::empty(), stem: false };
        prop_assert_eq!(preprocess_text(&once.join(" "), &plain), once.clone());
        prop_assert_eq!(tokenize(&once.join(" ")), once);
    }

    #[test]
    fn raising_term_threshold_never_grows_vocabulary(
        texts in proptest::collection::vec(text(), 0..12),
        low in 1u64..5,
        bump in 0u64..5,
        min_doc in 1u64..4,
    ) {
        let cfg = PreprocessConfig::default();
        let d: Vec<TokenizedDoc> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| TokenizedDoc { doc_id: format!("d{i}"), tokens: preprocess_text(t, &cfg) })
            .collect();
        let (small, _) = trim_vocabulary(&d, low + bump, min_doc).unwrap();
        let (large, m) = trim_vocabulary(&d, low, min_doc).unwrap();
        prop_assert!(small.len() <= large.len());
        prop_assert!(small.terms().iter().all(|t| large.term_id(t).is_some()));

        let retained: u64 = d
            .iter()
            .map(|doc| doc.tokens.iter().filter(|t| large.term_id(t).is_some()).count() as u64)
            .sum();
        prop_assert_eq!(m.total_count(), retained);
        prop_assert_eq!(m.n_docs(), d.len());
        for id in 0..large.len() {
            prop_assert!(large.corpus_count(id) >= low && large.doc_count(id) >= min_doc);
        }
    }
}
