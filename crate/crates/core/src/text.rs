//! Description-to-token pipeline: tokenization, stop-word removal, rule-based
//! suffix normalization, and vocabulary construction.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Dataset;

/// Bundled English stop-word list; see `data/stopwords.txt`.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum TextError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no token survived preprocessing and frequency pruning")]
    EmptyVocabulary,
    #[error("min_df must be at least 1")]
    InvalidMinDf,
}

/// Parse a stop-word list: one lowercase token per line, `#` comments allowed.
pub fn parse_stoplist(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn default_stoplist() -> HashSet<String> {
    parse_stoplist(DEFAULT_STOPWORDS)
}

/// Lowercase, split on every non-alphanumeric character, and drop tokens that
/// are shorter than two characters or purely numeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| !t.chars().all(|c| c.is_numeric()))
        .map(str::to_string)
        .collect()
}

/// Order-preserving removal of exact stop-list matches.
pub fn remove_stopwords(tokens: Vec<String>, stoplist: &HashSet<String>) -> Vec<String> {
    tokens.into_iter().filter(|t| !stoplist.contains(t)).collect()
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u'))
}

fn chars(s: &str) -> usize {
    s.chars().count()
}

/// Drop one letter of a doubled final consonant, except `l`, `s`, `z`.
fn undouble(stem: &str) -> String {
    let bytes = stem.as_bytes();
    let n = bytes.len();
    if n >= 2
        && bytes[n - 1] == bytes[n - 2]
        && bytes[n - 1].is_ascii_alphabetic()
        && !matches!(bytes[n - 1], b'a' | b'e' | b'i' | b'o' | b'u' | b'l' | b's' | b'z')
    {
        stem[..n - 1].to_string()
    } else {
        stem.to_string()
    }
}

/// Apply the highest-priority suffix rule that fires, or return `None`.
fn strip_step(token: &str) -> Option<String> {
    // Plural family.
    if let Some(stem) = token.strip_suffix("ies") {
        if chars(stem) >= 2 {
            return Some(format!("{stem}y"));
        }
    }
    if token.ends_with("sses") {
        return Some(token[..token.len() - 2].to_string());
    }
    for tail in ["shes", "ches", "xes", "zes", "oes"] {
        if token.ends_with(tail) && chars(token) > tail.len() {
            return Some(token[..token.len() - 2].to_string());
        }
    }
    // Terminal forms the bare-s rule must not touch (class, status, analysis).
    if !(token.ends_with("ss") || token.ends_with("us") || token.ends_with("is")) {
        if let Some(stem) = token.strip_suffix('s') {
            if chars(stem) >= 2 {
                return Some(stem.to_string());
            }
        }
    }
    // Verb endings; a vowel must remain in the stem and "-eed" stays.
    if let Some(stem) = token.strip_suffix("ing") {
        if chars(stem) >= 2 && has_vowel(stem) {
            return Some(undouble(stem));
        }
    }
    if !token.ends_with("eed") {
        if let Some(stem) = token.strip_suffix("ed") {
            if chars(stem) >= 2 && has_vowel(stem) {
                return Some(undouble(stem));
            }
        }
    }
    None
}

/// Deterministic suffix-stripping normalization, iterated to a fixed point so
/// the result is idempotent. Returns the input unchanged when no rule fires
/// or stripping would leave fewer than two characters.
pub fn normalize(token: &str) -> String {
    let mut current = token.to_string();
    while let Some(next) = strip_step(&current) {
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// tokenize → remove_stopwords → normalize.
pub fn preprocess(text: &str, stoplist: &HashSet<String>) -> Vec<String> {
    remove_stopwords(tokenize(text), stoplist)
        .iter()
        .map(|t| normalize(t))
        .collect()
}

/// Dense token-id mapping with per-token document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    tokens: Vec<String>,
    document_frequency: Vec<u32>,
    index: HashMap<String, u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyData {
    tokens: Vec<String>,
    document_frequency: Vec<u32>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(data: VocabularyData) -> Self {
        let index = data
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens: data.tokens, document_frequency: data.document_frequency, index }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(vocab: Vocabulary) -> Self {
        VocabularyData { tokens: vocab.tokens, document_frequency: vocab.document_frequency }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn document_frequency(&self, id: u32) -> u32 {
        self.document_frequency[id as usize]
    }

    /// Map normalized tokens to ids, dropping anything out of vocabulary.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t)).collect()
    }

    /// FNV-1a over tokens and frequencies; used to pair persisted models with
    /// the vocabulary they were trained on.
    pub fn content_hash(&self) -> u64 {
        let mut hash = crate::fnv1a(0xcbf2_9ce4_8422_2325, b"vocab");
        for (token, df) in self.tokens.iter().zip(&self.document_frequency) {
            hash = crate::fnv1a(hash, token.as_bytes());
            hash = crate::fnv1a(hash, &df.to_le_bytes());
        }
        hash
    }
}

/// One bug description as vocabulary token ids. Empty token lists mark
/// documents that dissolved during preprocessing; they are excluded from
/// fitting and labeled with the uniform distribution downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub bug_id: String,
    pub tokens: Vec<u32>,
}

impl TokenizedDocument {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Run the pipeline over a dataset and build the vocabulary. Tokens seen in
/// fewer than `min_df` documents are pruned; ids follow first occurrence over
/// the chronological corpus.
pub fn build_corpus(
    dataset: &Dataset,
    stoplist: &HashSet<String>,
    min_df: usize,
) -> Result<(Vocabulary, Vec<TokenizedDocument>), TextError> {
    if min_df < 1 {
        return Err(TextError::InvalidMinDf);
    }
    if dataset.is_empty() {
        return Err(TextError::EmptyCorpus);
    }

    let processed: Vec<(String, Vec<String>)> = dataset
        .reports
        .iter()
        .map(|r| (r.id.clone(), preprocess(&r.description, stoplist)))
        .collect();

    let mut df: HashMap<&str, u32> = HashMap::new();
    for (_, tokens) in &processed {
        let unique: HashSet<&str> = tokens.iter().map(String::as_str).collect();
        for token in unique {
            *df.entry(token).or_insert(0) += 1;
        }
    }

    let mut tokens: Vec<String> = Vec::new();
    let mut frequencies: Vec<u32> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut documents = Vec::with_capacity(processed.len());
    for (bug_id, words) in &processed {
        let mut ids = Vec::with_capacity(words.len());
        for word in words {
            let frequency = df[word.as_str()];
            if (frequency as usize) < min_df {
                continue;
            }
            let id = *index.entry(word.clone()).or_insert_with(|| {
                tokens.push(word.clone());
                frequencies.push(frequency);
                (tokens.len() - 1) as u32
            });
            ids.push(id);
        }
        documents.push(TokenizedDocument { bug_id: bug_id.clone(), tokens: ids });
    }

    if tokens.is_empty() {
        return Err(TextError::EmptyVocabulary);
    }
    Ok((Vocabulary { tokens, document_frequency: frequencies, index }, documents))
}

/// Encode one unseen description against an existing vocabulary;
/// out-of-vocabulary tokens are dropped.
pub fn encode_document(
    vocab: &Vocabulary,
    stoplist: &HashSet<String>,
    bug_id: &str,
    text: &str,
) -> TokenizedDocument {
    TokenizedDocument { bug_id: bug_id.to_string(), tokens: vocab.encode(&preprocess(text, stoplist)) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::BugReport;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn tokenize_splits_and_filters() {
        assert_eq!(
            tokenize("Null pointer in HTTP-parser!"),
            vec!["null", "pointer", "in", "http", "parser"]
        );
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("a 42 ok"), vec!["ok"]);
    }

    #[test]
    fn stopwords_are_removed_in_order() {
        let list = default_stoplist();
        let tokens = vec!["null", "pointer", "in", "parser"];
        let tokens: Vec<String> = tokens.into_iter().map(String::from).collect();
        assert_eq!(remove_stopwords(tokens, &list), vec!["null", "pointer", "parser"]);
        assert_eq!(remove_stopwords(vec![], &list), Vec::<String>::new());
        let all_stop: Vec<String> = vec!["the".into(), "a".into(), "in".into()];
        assert_eq!(remove_stopwords(all_stop, &list), Vec::<String>::new());
    }

    #[test]
    fn stoplist_parser_skips_comments() {
        let list = parse_stoplist("# header\nfoo\n\n  bar  \n#baz\n");
        assert_eq!(list.len(), 2);
        assert!(list.contains("foo") && list.contains("bar"));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("parsers"), "parser");
        assert_eq!(normalize("parser"), "parser");
        assert_eq!(normalize("crashed"), "crash");
        assert_eq!(normalize("crashes"), "crash");
        assert_eq!(normalize("classes"), "class");
        assert_eq!(normalize("fixes"), "fix");
        assert_eq!(normalize("stopped"), "stop");
        assert_eq!(normalize("falling"), "fall");
        assert_eq!(normalize("missing"), "miss");
        assert_eq!(normalize("memories"), "memory");
        // Guards: no vowel left, would get too short, or a terminal form.
        assert_eq!(normalize("string"), "string");
        assert_eq!(normalize("speed"), "speed");
        assert_eq!(normalize("status"), "status");
        assert_eq!(normalize("class"), "class");
        assert_eq!(normalize("analysis"), "analysis");
        assert_eq!(normalize("as"), "as");
    }

    fn dataset_of(descriptions: &[&str]) -> Dataset {
        let reports: Vec<BugReport> = descriptions
            .iter()
            .enumerate()
            .map(|(i, text)| BugReport {
                id: format!("B{i}"),
                description: text.to_string(),
                assignee: "dev".into(),
                time_spent_hours: Some(1.0),
                created_at: Utc.with_ymd_and_hms(2020, 1, 1, i as u32, 0, 0).unwrap(),
                closed_at: None,
                status: "CLOSED".into(),
                resolution: "DONE".into(),
                issue_type: "BUG".into(),
            })
            .collect();
        Dataset { reports, developers: BTreeSet::from(["dev".to_string()]) }
    }

    #[test]
    fn corpus_ids_follow_first_occurrence() {
        let dataset = dataset_of(&["parser crash", "parser hang"]);
        let stoplist = default_stoplist();
        let (vocab, docs) = build_corpus(&dataset, &stoplist, 1).unwrap();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.token(0), "parser");
        assert_eq!(docs[0].tokens, vec![0, 1]);
        assert_eq!(docs[1].tokens, vec![0, 2]);
    }

    #[test]
    fn min_df_prunes_rare_tokens() {
        let dataset = dataset_of(&["parser crash", "parser hang"]);
        let stoplist = default_stoplist();
        let (vocab, docs) = build_corpus(&dataset, &stoplist, 2).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.token(0), "parser");
        assert_eq!(docs[0].tokens, vec![0]);
        assert_eq!(docs[1].tokens, vec![0]);
    }

    #[test]
    fn stopword_only_document_is_flagged_empty() {
        let dataset = dataset_of(&["the a in", "parser crash", "parser crash again"]);
        let stoplist = default_stoplist();
        let (_, docs) = build_corpus(&dataset, &stoplist, 1).unwrap();
        assert!(docs[0].is_empty());
        assert!(!docs[1].is_empty());
    }

    #[test]
    fn all_stopwords_is_an_empty_vocabulary_error() {
        let dataset = dataset_of(&["the a in", "of the"]);
        let stoplist = default_stoplist();
        assert!(matches!(
            build_corpus(&dataset, &stoplist, 1),
            Err(TextError::EmptyVocabulary)
        ));
    }

    #[test]
    fn vocabulary_serde_roundtrip_preserves_lookup() {
        let dataset = dataset_of(&["parser crash", "parser hang timeout"]);
        let stoplist = default_stoplist();
        let (vocab, _) = build_corpus(&dataset, &stoplist, 1).unwrap();
        let json = serde_json::to_string(&vocab).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vocab);
        assert_eq!(back.id("parser"), Some(0));
        assert_eq!(back.content_hash(), vocab.content_hash());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(token in "[a-z0-9]{0,14}") {
            let once = normalize(&token);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn corpus_is_deterministic_and_decodable(
            words in prop::collection::vec("[a-z]{2,8}", 1..40),
            splits in prop::collection::vec(1usize..6, 1..8),
        ) {
            // Chop the word stream into documents.
            let mut docs: Vec<String> = Vec::new();
            let mut cursor = 0;
            for width in splits {
                if cursor >= words.len() { break; }
                let end = (cursor + width).min(words.len());
                docs.push(words[cursor..end].join(" "));
                cursor = end;
            }
            if docs.is_empty() { docs.push(words.join(" ")); }
            let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
            let dataset = dataset_of(&refs);
            let stoplist = default_stoplist();
            if let Ok((vocab, tokenized)) = build_corpus(&dataset, &stoplist, 1) {
                let (vocab2, tokenized2) = build_corpus(&dataset, &stoplist, 1).unwrap();
                prop_assert_eq!(&vocab2, &vocab);
                prop_assert_eq!(&tokenized2, &tokenized);
                // Decoding ids reproduces the normalized token strings.
                for (doc, report) in tokenized.iter().zip(&dataset.reports) {
                    let expected = preprocess(&report.description, &stoplist);
                    let decoded: Vec<&str> = doc.tokens.iter().map(|&id| vocab.token(id)).collect();
                    prop_assert_eq!(decoded, expected.iter().map(String::as_str).collect::<Vec<_>>());
                }
            }
        }
    }
}
