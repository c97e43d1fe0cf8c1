//! Partially-labeled LDA.
//!
//! Every topic belongs to exactly one label, or to the shared background.
//! A document's tokens may only take topics owned by the document's labels
//! plus the background topics; otherwise sampling is identical to LDA.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::annotations::Category;
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::lda::{self, Estimator, Fit, LdaConfig, TopicModel};

/// Reserved key for background topics in [`LabelMass`].
pub const BACKGROUND: &str = "background";
/// Label given to documents no annotator flagged.
pub const APPROPRIATE: &str = "appropriate";

/// `appropriate` followed by `category:level` for every category and the
/// levels 2–4: ten labels in all.
pub fn rating_labels() -> Vec<String> {
    let mut labels = vec![APPROPRIATE.to_string()];
    for category in Category::ALL {
        for level in 2..=4 {
            labels.push(category.label(level));
        }
    }
    labels
}

/// Partition of the topic indices among labels, background last.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutFile")]
pub struct LabelTopicLayout {
    labels: Vec<String>,
    n_label: usize,
    n_bg: usize,
}

#[derive(Deserialize)]
struct LayoutFile {
    labels: Vec<String>,
    n_label: usize,
    n_bg: usize,
}

impl TryFrom<LayoutFile> for LabelTopicLayout {
    type Error = Error;

    fn try_from(f: LayoutFile) -> Result<Self> {
        build_layout(&f.labels, f.n_label, f.n_bg)
    }
}

/// Label `i` owns topics `[i·n_label, (i+1)·n_label)`; the background owns
/// the last `n_bg`.
pub fn build_layout<S: AsRef<str>>(labels: &[S], n_label: usize, n_bg: usize) -> Result<LabelTopicLayout> {
    if labels.is_empty() {
        return Err(Error::InvalidConfig("layout needs at least one label".into()));
    }
    if n_label < 1 {
        return Err(Error::InvalidConfig("n_label must be at least 1".into()));
    }
    let mut seen = BTreeSet::new();
    for label in labels {
        let label = label.as_ref();
        if label == BACKGROUND {
            return Err(Error::ReservedLabel(label.to_string()));
        }
        if !seen.insert(label) {
            return Err(Error::DuplicateLabel(label.to_string()));
        }
    }
    Ok(LabelTopicLayout {
        labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
        n_label,
        n_bg,
    })
}

/// Who a topic belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopicOwner {
    Label(usize),
    Background,
}

impl LabelTopicLayout {
    pub fn k(&self) -> usize {
        self.n_label * self.labels.len() + self.n_bg
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_label(&self) -> usize {
        self.n_label
    }

    pub fn n_bg(&self) -> usize {
        self.n_bg
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label_range(&self, index: usize) -> Range<usize> {
        index * self.n_label..(index + 1) * self.n_label
    }

    pub fn label_topics(&self, label: &str) -> Option<Range<usize>> {
        self.label_index(label).map(|i| self.label_range(i))
    }

    pub fn background_topics(&self) -> Range<usize> {
        self.k() - self.n_bg..self.k()
    }

    pub fn owner(&self, topic: usize) -> TopicOwner {
        let label = topic / self.n_label;
        if label < self.labels.len() {
            TopicOwner::Label(label)
        } else {
            TopicOwner::Background
        }
    }

    /// Sorted topic indices usable by a document carrying `labels`.
    pub fn allowed_topics<'a>(
        &self,
        doc_id: &str,
        labels: impl IntoIterator<Item = &'a String>,
    ) -> Result<Vec<u32>> {
        let mut owners = BTreeSet::new();
        for label in labels {
            let i = self.label_index(label).ok_or_else(|| Error::UnknownLabel {
                doc: doc_id.to_string(),
                label: label.clone(),
            })?;
            owners.insert(i);
        }
        let mut topics: Vec<u32> = owners
            .into_iter()
            .flat_map(|i| self.label_range(i))
            .chain(self.background_topics())
            .map(|t| t as u32)
            .collect();
        topics.sort_unstable();
        if topics.is_empty() {
            return Err(Error::EmptySupport(doc_id.to_string()));
        }
        Ok(topics)
    }
}

/// A document seen through the layout: which topics it may use.
#[derive(Clone, Debug)]
pub struct LabeledDocumentView<'a> {
    pub document: &'a Document,
    pub allowed_topics: Vec<u32>,
}

/// Views for every document; a document without labels may only use the
/// background.
pub fn labeled_views<'a>(corpus: &'a Corpus, layout: &LabelTopicLayout) -> Result<Vec<LabeledDocumentView<'a>>> {
    let empty = BTreeSet::new();
    corpus
        .documents()
        .iter()
        .map(|doc| {
            let labels = doc.labels.as_ref().unwrap_or(&empty);
            Ok(LabeledDocumentView {
                document: doc,
                allowed_topics: layout.allowed_topics(&doc.id, labels)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PldaConfig {
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for PldaConfig {
    fn default() -> Self {
        let lda = LdaConfig::default();
        PldaConfig {
            alpha: lda.alpha,
            beta: lda.beta,
            iterations: lda.iterations,
            burn_in: lda.burn_in,
            seed: lda.seed,
            estimator: lda.estimator,
        }
    }
}

impl PldaConfig {
    pub fn lda_config(&self, k: usize) -> LdaConfig {
        LdaConfig {
            k,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
            estimator: self.estimator,
        }
    }
}

pub fn fit_plda(corpus: &Corpus, layout: &LabelTopicLayout, config: &PldaConfig) -> Result<Fit> {
    let lda_config = config.lda_config(layout.k());
    lda_config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let views = labeled_views(corpus, layout)?;
    let supports: Vec<&[u32]> = views.iter().map(|v| v.allowed_topics.as_slice()).collect();
    lda::fit_with_support(corpus, &lda_config, &supports, Some(layout.clone()))
}

/// Trains with each token restricted to its document's allowed topics.
/// The returned model carries the layout.
pub fn train_plda(corpus: &Corpus, layout: &LabelTopicLayout, config: &PldaConfig) -> Result<TopicModel> {
    fit_plda(corpus, layout, config).map(|f| f.model)
}

/// θ summed over each label's topics, background reported separately.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabelMass {
    pub labels: Vec<(String, f64)>,
    pub background: f64,
}

impl LabelMass {
    /// Mass of a label, or of the background under [`BACKGROUND`].
    pub fn get(&self, label: &str) -> Option<f64> {
        if label == BACKGROUND {
            return Some(self.background);
        }
        self.labels.iter().find(|(l, _)| l == label).map(|(_, m)| *m)
    }

    pub fn total(&self) -> f64 {
        self.labels.iter().map(|(_, m)| m).sum::<f64>() + self.background
    }
}

pub fn label_mass(theta: &[f64], layout: &LabelTopicLayout) -> Result<LabelMass> {
    if theta.len() != layout.k() {
        return Err(Error::DimensionMismatch {
            expected: layout.k(),
            found: theta.len(),
        });
    }
    let labels = layout
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), theta[layout.label_range(i)].iter().sum()))
        .collect();
    let background = theta[layout.background_topics()].iter().sum();
    Ok(LabelMass { labels, background })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_examples() {
        let l = build_layout(&["appropriate"], 3, 0).unwrap();
        assert_eq!(l.k(), 3);
        assert_eq!(l.label_topics("appropriate"), Some(0..3));

        let l = build_layout(&["appropriate", "sex:2"], 2, 1).unwrap();
        assert_eq!(l.k(), 5);
        assert_eq!(l.background_topics(), 4..5);
        assert_eq!(l.label_topics("sex:2"), Some(2..4));
        assert_eq!(l.owner(4), TopicOwner::Background);
        assert_eq!(l.owner(3), TopicOwner::Label(1));

        let labels = rating_labels();
        assert_eq!(labels.len(), 10);
        assert_eq!(build_layout(&labels, 10, 10).unwrap().k(), 110);
    }

    #[test]
    fn layout_errors() {
        assert!(matches!(build_layout(&["a", "a"], 1, 0), Err(Error::DuplicateLabel(_))));
        assert!(matches!(build_layout(&["background"], 1, 0), Err(Error::ReservedLabel(_))));
        assert!(build_layout::<&str>(&[], 1, 0).is_err());
        assert!(build_layout(&["a"], 0, 1).is_err());
    }

    #[test]
    fn layout_deserialization_validates() {
        let ok: LabelTopicLayout = serde_json::from_str(r#"{"labels":["a","b"],"n_label":2,"n_bg":1}"#).unwrap();
        assert_eq!(ok.k(), 5);
        assert!(serde_json::from_str::<LabelTopicLayout>(r#"{"labels":["a","a"],"n_label":2,"n_bg":1}"#).is_err());
        assert_eq!(
            serde_json::to_string(&ok).unwrap(),
            r#"{"labels":["a","b"],"n_label":2,"n_bg":1}"#
        );
    }

    #[test]
    fn allowed_topics_union_plus_background() {
        let l = build_layout(&["appropriate", "sex:2", "sex:3"], 2, 2).unwrap();
        let labels: BTreeSet<String> = ["sex:3".to_string(), "appropriate".to_string()].into();
        assert_eq!(l.allowed_topics("d", &labels).unwrap(), vec![0, 1, 4, 5, 6, 7]);
        let unknown: BTreeSet<String> = ["drugs:4".to_string()].into();
        assert!(matches!(l.allowed_topics("d", &unknown), Err(Error::UnknownLabel { .. })));

        let no_bg = build_layout(&["a"], 2, 0).unwrap();
        assert!(matches!(no_bg.allowed_topics("d", &BTreeSet::new()), Err(Error::EmptySupport(_))));
    }

    #[test]
    fn label_mass_examples() {
        let l = build_layout(&["a", "b"], 2, 0).unwrap();
        let m = label_mass(&[0.25; 4], &l).unwrap();
        assert_eq!(m.get("a"), Some(0.5));
        assert!((m.total() - 1.0).abs() < 1e-12);

        let l = build_layout(&["a", "b"], 1, 2).unwrap();
        let m = label_mass(&[0.0, 0.0, 0.3, 0.7], &l).unwrap();
        assert_eq!(m.get("a"), Some(0.0));
        assert_eq!(m.get("b"), Some(0.0));
        assert_eq!(m.get(BACKGROUND), Some(1.0));

        assert!(matches!(label_mass(&[1.0], &l), Err(Error::DimensionMismatch { .. })));
    }
}
