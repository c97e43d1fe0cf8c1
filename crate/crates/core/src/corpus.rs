//! Text ingestion: tokenization, stopword and frequency filtering, and
//! encoding documents against a frozen vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum fraction of stopword hits for a document to count as English.
pub const LANGUAGE_STOPWORD_RATIO: f64 = 0.05;

const BUNDLED_ENGLISH: &str = include_str!("../data/stopwords_en.txt");
const BUNDLED_ENGLISH_ID: &str = "en-v1";

/// One input excerpt, as read from the JSON-lines ingest format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Per-category annotator ratings, e.g. `{"sex": [1, 2, 2]}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<BTreeMap<String, Vec<i64>>>,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawDocument {
            id: id.into(),
            text: text.into(),
            labels: None,
            ratings: None,
        }
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(serde_json::from_str(&line)?);
    }
    Ok(docs)
}

pub fn write_jsonl<W: Write>(mut writer: W, docs: &[RawDocument]) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut writer, doc)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct StopWords {
    id: String,
    words: HashSet<String>,
}

impl StopWords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_ENGLISH_ID, BUNDLED_ENGLISH)
    }

    /// One token per line; blank lines and `#` comments are skipped.
    /// Entries are lowercased to match tokenizer output.
    pub fn parse(id: impl Into<String>, text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase().replace('’', "'"))
            .collect();
        StopWords {
            id: id.into(),
            words,
        }
    }

    pub fn from_reader<R: Read>(id: impl Into<String>, mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Ok(Self::parse(id, &text))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }
}

/// Contractions the Treebank conventions split without an apostrophe.
const SPLIT_WORDS: &[(&str, &str, &str)] = &[
    ("cannot", "can", "not"),
    ("gimme", "gim", "me"),
    ("gonna", "gon", "na"),
    ("gotta", "got", "ta"),
    ("lemme", "lem", "me"),
    ("wanna", "wan", "na"),
];

const CLITICS: &[&str] = &["n't", "'s", "'re", "'ll", "'d", "'ve", "'m"];

/// Penn-Treebank-style tokenization, lowercased.
///
/// Clitics are split off (`don't` → `do n't`), punctuation becomes separate
/// tokens, hyphenated words stay whole, and `.`, `,` and `:` are kept inside
/// numbers (`3.5`, `6:30`, `1,000`). Runs of `.` or `-` form one token.
/// Abbreviation periods are not recognised.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = Vec::new();
    for chunk in text.split_whitespace() {
        chars.clear();
        chars.extend(chunk.chars().flat_map(char::to_lowercase).map(|c| match c {
            '’' | '‘' => '\'',
            other => other,
        }));
        tokenize_chunk(&chars, &mut out);
    }
    out
}

fn tokenize_chunk(chars: &[char], out: &mut Vec<String>) {
    let mut word = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            word.push(c);
            i += 1;
            continue;
        }
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let next = chars.get(i + 1).copied();
        let joins = !word.is_empty()
            && match c {
                '\'' => next.is_some_and(char::is_alphabetic),
                '-' => next.is_some_and(char::is_alphanumeric),
                '.' | ',' | ':' => {
                    prev.is_some_and(|p| p.is_ascii_digit())
                        && next.is_some_and(|n| n.is_ascii_digit())
                }
                _ => false,
            };
        if joins {
            word.push(c);
            i += 1;
            continue;
        }
        flush_word(&mut word, out);
        if c == '.' || c == '-' {
            let start = i;
            while i < chars.len() && chars[i] == c {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else {
            out.push(c.to_string());
            i += 1;
        }
    }
    flush_word(&mut word, out);
}

fn flush_word(word: &mut String, out: &mut Vec<String>) {
    if !word.is_empty() {
        let w = std::mem::take(word);
        split_clitics(&w, out);
    }
}

fn split_clitics(word: &str, out: &mut Vec<String>) {
    if let Some(&(_, a, b)) = SPLIT_WORDS.iter().find(|(full, ..)| *full == word) {
        out.push(a.to_string());
        out.push(b.to_string());
        return;
    }
    for clitic in CLITICS {
        if word.len() > clitic.len() && word.ends_with(clitic) {
            // clitics are ASCII, so this is a char boundary
            split_clitics(&word[..word.len() - clitic.len()], out);
            out.push((*clitic).to_string());
            return;
        }
    }
    out.push(word.to_string());
}

/// A token with no letters or digits.
pub fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

pub fn stopword_ratio<S: AsRef<str>>(tokens: &[S], stopwords: &StopWords) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let hits = tokens
        .iter()
        .filter(|t| stopwords.contains(t.as_ref()))
        .count();
    hits as f64 / tokens.len() as f64
}

/// Crude English detector: at least 5% of tokens are English stopwords.
/// An empty sequence is not English.
pub fn language_heuristic<S: AsRef<str>>(tokens: &[S], stopwords: &StopWords) -> bool {
    !tokens.is_empty() && stopword_ratio(tokens, stopwords) >= LANGUAGE_STOPWORD_RATIO
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Identifier of the stopword list the corpus was built with.
    pub stopword_list: String,
    pub min_doc_freq: usize,
    pub min_doc_len: usize,
    pub language_filter: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopword_list: BUNDLED_ENGLISH_ID.to_string(),
            min_doc_freq: 15,
            min_doc_len: 20,
            language_filter: true,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_doc_freq < 1 {
            return Err(Error::InvalidConfig("min_doc_freq must be at least 1".into()));
        }
        if self.min_doc_len < 1 {
            return Err(Error::InvalidConfig("min_doc_len must be at least 1".into()));
        }
        Ok(())
    }
}

/// Frozen token ↔ id mapping with per-token document frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    doc_freq: Vec<usize>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>, doc_freq: Vec<usize>) -> Result<Self> {
        if tokens.len() != doc_freq.len() {
            return Err(Error::DimensionMismatch {
                expected: tokens.len(),
                found: doc_freq.len(),
            });
        }
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if token_to_id.insert(t.clone(), i as u32).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocabulary {
            token_to_id,
            id_to_token: tokens,
            doc_freq,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn doc_freq(&self, id: u32) -> usize {
        self.doc_freq[id as usize]
    }

    pub fn doc_freqs(&self) -> &[usize] {
        &self.doc_freq
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeSet<String>>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    vocabulary: Vocabulary,
    documents: Vec<Document>,
    config: PreprocessConfig,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    version: u32,
    config: PreprocessConfig,
    vocab: Vec<String>,
    doc_freq: Vec<usize>,
    docs: Vec<Document>,
}

const CORPUS_VERSION: u32 = 1;

impl Corpus {
    /// Assembles a corpus from already-encoded documents.
    pub fn from_parts(
        vocabulary: Vocabulary,
        documents: Vec<Document>,
        config: PreprocessConfig,
    ) -> Result<Self> {
        let v = vocabulary.len();
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateDocId(doc.id.clone()));
            }
            if let Some(&bad) = doc.tokens.iter().find(|&&t| t as usize >= v) {
                return Err(Error::DimensionMismatch {
                    expected: v,
                    found: bad as usize,
                });
            }
        }
        Ok(Corpus {
            vocabulary,
            documents,
            config,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    /// Replaces every document's label set.
    pub fn with_labels(mut self, labels: &BTreeMap<String, BTreeSet<String>>) -> Self {
        for doc in &mut self.documents {
            doc.labels = labels.get(&doc.id).cloned();
        }
        self
    }

    /// Keeps only documents selected by `keep`, with the same vocabulary.
    pub fn filter_documents(&self, mut keep: impl FnMut(usize, &Document) -> bool) -> Corpus {
        let documents = self
            .documents
            .iter()
            .enumerate()
            .filter(|(i, d)| keep(*i, d))
            .map(|(_, d)| d.clone())
            .collect();
        Corpus {
            vocabulary: self.vocabulary.clone(),
            documents,
            config: self.config.clone(),
        }
    }

    /// Maps this corpus onto another vocabulary by token string; tokens the
    /// target does not know are dropped.
    pub fn reencode(&self, target: &Vocabulary) -> Corpus {
        let map: Vec<Option<u32>> = self
            .vocabulary
            .tokens()
            .iter()
            .map(|t| target.id(t))
            .collect();
        let documents = self
            .documents
            .iter()
            .map(|d| Document {
                id: d.id.clone(),
                tokens: d.tokens.iter().filter_map(|&t| map[t as usize]).collect(),
                labels: d.labels.clone(),
            })
            .collect();
        Corpus {
            vocabulary: target.clone(),
            documents,
            config: self.config.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CorpusFile {
            version: CORPUS_VERSION,
            config: self.config.clone(),
            vocab: self.vocabulary.tokens().to_vec(),
            doc_freq: self.vocabulary.doc_freqs().to_vec(),
            docs: self.documents.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CorpusFile = serde_json::from_str(text)?;
        if file.version != CORPUS_VERSION {
            return Err(Error::UnsupportedVersion(file.version));
        }
        let vocabulary = Vocabulary::new(file.vocab, file.doc_freq)?;
        Corpus::from_parts(vocabulary, file.docs, file.config)
    }
}

/// Tokens of `text` that survive punctuation and stopword removal, or `None`
/// if the language filter rejects the document.
fn content_tokens(text: &str, config: &PreprocessConfig, stopwords: &StopWords) -> Option<Vec<String>> {
    let tokens: Vec<String> = tokenize(text)
        .into_iter()
        .filter(|t| !is_punctuation(t))
        .collect();
    // The ratio needs the stopwords, so it is measured before they are dropped.
    if config.language_filter && !language_heuristic(&tokens, stopwords) {
        return None;
    }
    Some(tokens.into_iter().filter(|t| !stopwords.contains(t)).collect())
}

fn check_unique_ids(raw: &[RawDocument]) -> Result<()> {
    let mut seen = HashSet::with_capacity(raw.len());
    for doc in raw {
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::DuplicateDocId(doc.id.clone()));
        }
    }
    Ok(())
}

fn label_set(raw: &RawDocument) -> Option<BTreeSet<String>> {
    raw.labels.as_ref().map(|l| l.iter().cloned().collect())
}

/// Runs the full preprocessing pipeline and freezes a vocabulary.
///
/// Order: tokenize, drop punctuation, language filter, drop stopwords, then
/// alternate the document-frequency filter and the short-document filter
/// until neither removes anything. Ids are assigned by descending document
/// frequency, ties broken by token order.
pub fn build_corpus(
    raw: &[RawDocument],
    config: &PreprocessConfig,
    stopwords: &StopWords,
) -> Result<Corpus> {
    config.validate()?;
    check_unique_ids(raw)?;

    let mut docs: Vec<(usize, Vec<String>)> = raw
        .iter()
        .enumerate()
        .filter_map(|(i, r)| content_tokens(&r.text, config, stopwords).map(|t| (i, t)))
        .collect();

    // Dropping a short document can push a token under the frequency floor,
    // and dropping a token can shorten a document, so iterate to a fixpoint.
    let doc_freq = loop {
        let doc_freq = document_frequencies(docs.iter().map(|(_, t)| t.as_slice()));
        let before: usize = docs.iter().map(|(_, t)| t.len()).sum();
        let doc_count = docs.len();
        for (_, tokens) in &mut docs {
            tokens.retain(|t| doc_freq[t.as_str()] >= config.min_doc_freq);
        }
        docs.retain(|(_, t)| t.len() >= config.min_doc_len);
        let after: usize = docs.iter().map(|(_, t)| t.len()).sum();
        if after == before && docs.len() == doc_count {
            break doc_freq;
        }
    };

    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut entries: Vec<(&str, usize)> = doc_freq.iter().map(|(t, &n)| (t.as_str(), n)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let vocabulary = Vocabulary::new(
        entries.iter().map(|(t, _)| (*t).to_string()).collect(),
        entries.iter().map(|(_, n)| *n).collect(),
    )?;

    let documents = docs
        .iter()
        .map(|(i, tokens)| Document {
            id: raw[*i].id.clone(),
            tokens: tokens
                .iter()
                .map(|t| vocabulary.id(t).expect("retained token is in vocabulary"))
                .collect(),
            labels: label_set(&raw[*i]),
        })
        .collect();

    let config = PreprocessConfig {
        stopword_list: stopwords.id().to_string(),
        ..config.clone()
    };
    Corpus::from_parts(vocabulary, documents, config)
}

fn document_frequencies<'a>(docs: impl Iterator<Item = &'a [String]>) -> HashMap<String, usize> {
    let mut df: HashMap<String, usize> = HashMap::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for tokens in docs {
        seen.clear();
        for t in tokens {
            if seen.insert(t.as_str()) {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
    }
    df
}

/// Encodes held-out documents against an existing vocabulary.
///
/// The token pipeline and the minimum-length floor are applied to content
/// tokens; out-of-vocabulary tokens are then dropped, so a retained document
/// may end up with no tokens at all.
pub fn encode_with_vocabulary(
    raw: &[RawDocument],
    vocabulary: &Vocabulary,
    config: &PreprocessConfig,
    stopwords: &StopWords,
) -> Result<Corpus> {
    config.validate()?;
    check_unique_ids(raw)?;
    let documents = raw
        .iter()
        .filter_map(|r| {
            let tokens = content_tokens(&r.text, config, stopwords)?;
            if tokens.len() < config.min_doc_len {
                return None;
            }
            Some(Document {
                id: r.id.clone(),
                tokens: tokens.iter().filter_map(|t| vocabulary.id(t)).collect(),
                labels: label_set(r),
            })
        })
        .collect();
    Corpus::from_parts(
        vocabulary.clone(),
        documents,
        PreprocessConfig {
            stopword_list: stopwords.id().to_string(),
            ..config.clone()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(min_doc_freq: usize, min_doc_len: usize) -> PreprocessConfig {
        PreprocessConfig {
            min_doc_freq,
            min_doc_len,
            language_filter: false,
            ..PreprocessConfig::default()
        }
    }

    #[test]
    fn tokenize_splits_clitics_and_punctuation() {
        assert_eq!(tokenize("Don't stop!"), vec!["do", "n't", "stop", "!"]);
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("We'll see... (maybe) at 6:30, or 3.5 hours-later--fine"),
            vec![
                "we", "'ll", "see", "...", "(", "maybe", ")", "at", "6:30", ",", "or", "3.5",
                "hours-later", "--", "fine"
            ]
        );
        assert_eq!(tokenize("I cannot; they couldn't've"), vec!["i", "can", "not", ";", "they", "could", "n't", "'ve"]);
        assert_eq!(tokenize("the dogs' bone"), vec!["the", "dogs", "'", "bone"]);
        assert_eq!(tokenize("It’s"), vec!["it", "'s"]);
    }

    #[test]
    fn bundled_stopwords() {
        let sw = StopWords::english();
        assert!(sw.len() >= 587, "{}", sw.len());
        for w in ["the", "and", "n't", "'s", "she", "would"] {
            assert!(sw.contains(w), "{w}");
        }
        assert!(!sw.contains("blood"));
    }

    #[test]
    fn language_heuristic_extremes() {
        let sw = StopWords::english();
        assert!(language_heuristic(&["the", "and", "of"], &sw));
        assert!(!language_heuristic(&["blood", "knife", "whisky"], &sw));
        assert!(!language_heuristic::<&str>(&[], &sw));
    }

    #[test]
    fn identical_documents_give_single_token_vocabulary() {
        let text = vec!["lantern"; 25].join(" ");
        let raw = vec![RawDocument::new("a", text.clone()), RawDocument::new("b", text)];
        let corpus = build_corpus(&raw, &cfg(1, 20), &StopWords::english()).unwrap();
        assert_eq!(corpus.vocab_size(), 1);
        assert_eq!(corpus.len(), 2);
        assert!(corpus.documents().iter().all(|d| d.len() == 25));
        assert_eq!(corpus.vocabulary().doc_freq(0), 2);
    }

    #[test]
    fn short_document_dropped() {
        let raw = vec![
            RawDocument::new("short", vec!["lantern"; 10].join(" ")),
            RawDocument::new("long", vec!["lantern"; 30].join(" ")),
        ];
        let corpus = build_corpus(&raw, &cfg(1, 20), &StopWords::english()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.documents()[0].id, "long");
    }

    #[test]
    fn everything_filtered_is_empty_corpus() {
        let raw = vec![RawDocument::new("a", "the and of")];
        assert!(matches!(
            build_corpus(&raw, &cfg(1, 1), &StopWords::english()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let raw = vec![RawDocument::new("a", "x y"), RawDocument::new("a", "x y")];
        assert!(matches!(
            build_corpus(&raw, &cfg(1, 1), &StopWords::english()),
            Err(Error::DuplicateDocId(_))
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        let raw = vec![RawDocument::new("a", "x y")];
        assert!(build_corpus(&raw, &cfg(0, 1), &StopWords::english()).is_err());
        assert!(build_corpus(&raw, &cfg(1, 0), &StopWords::english()).is_err());
    }

    #[test]
    fn vocabulary_order_is_doc_freq_then_lexicographic() {
        let raw = vec![
            RawDocument::new("1", "zebra apple mango"),
            RawDocument::new("2", "zebra mango"),
            RawDocument::new("3", "zebra banana"),
        ];
        let corpus = build_corpus(&raw, &cfg(1, 1), &StopWords::english()).unwrap();
        assert_eq!(corpus.vocabulary().tokens(), &["zebra", "mango", "apple", "banana"]);
    }

    #[test]
    fn language_filter_drops_non_english() {
        let english = "The keeper said that he would walk to the harbour with them in the morning lantern lantern";
        let other = "lantern lantern lantern lantern";
        let raw = vec![RawDocument::new("en", english), RawDocument::new("xx", other)];
        let config = PreprocessConfig {
            language_filter: true,
            ..cfg(1, 1)
        };
        let corpus = build_corpus(&raw, &config, &StopWords::english()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.documents()[0].id, "en");
    }

    #[test]
    fn heldout_encoding_drops_unknown_tokens() {
        let raw = vec![RawDocument::new("a", "lantern harbour"), RawDocument::new("b", "lantern")];
        let train = build_corpus(&raw, &cfg(1, 1), &StopWords::english()).unwrap();
        let held = vec![RawDocument::new("h", "harbour whisky harbour")];
        let enc = encode_with_vocabulary(&held, train.vocabulary(), &cfg(1, 1), &StopWords::english()).unwrap();
        let h = train.vocabulary().id("harbour").unwrap();
        assert_eq!(enc.documents()[0].tokens, vec![h, h]);
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let raw = vec![RawDocument {
            labels: Some(vec!["sex:2".into()]),
            ..RawDocument::new("a", "lantern harbour lantern")
        }];
        let corpus = build_corpus(&raw, &cfg(1, 1), &StopWords::english()).unwrap();
        let back = Corpus::from_json(&corpus.to_json().unwrap()).unwrap();
        assert_eq!(back, corpus);
        let bumped = corpus.to_json().unwrap().replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(Corpus::from_json(&bumped), Err(Error::UnsupportedVersion(9))));
    }

    #[test]
    fn jsonl_parses_optional_fields() {
        let input = r#"{"id":"a","text":"hi"}
{"id":"b","text":"yo","labels":["appropriate"],"ratings":{"sex":[1,2,3]}}
"#;
        let docs = read_jsonl(input.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].ratings.as_ref().unwrap()["sex"], vec![1, 2, 3]);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &docs).unwrap();
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), docs);
    }
}
