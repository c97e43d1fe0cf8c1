//! Synthetic corpora with planted topics, labels and ratings.
//!
//! Generated corpora use the identity vocabulary: token id `j` is planted
//! column `j`, named `w{j}` with zero padding. The same documents are also
//! emitted as ingest records so the full text pipeline can be exercised.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::annotations::parse_label;
use crate::corpus::{Corpus, Document, PreprocessConfig, RawDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocLength {
    Fixed(usize),
    /// Inclusive range.
    Uniform { min: usize, max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedLabel {
    pub name: String,
    /// Topics reserved for documents carrying this label.
    pub topics: Range<usize>,
    pub doc_count: usize,
}

/// Documents are generated label by label, each drawing θ only over its
/// label's topics and the background topics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelPlan {
    pub labels: Vec<PlannedLabel>,
    pub background: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub planted_phi: Matrix,
    pub alpha: f64,
    /// Ignored when a label plan fixes the per-label counts.
    pub doc_count: usize,
    pub doc_length: DocLength,
    /// Use this θ for every document instead of drawing from the Dirichlet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_plan: Option<LabelPlan>,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.planted_phi.rows();
        if k == 0 || self.planted_phi.cols() == 0 {
            return Err(Error::InvalidConfig("planted phi is empty".into()));
        }
        if !self.planted_phi.is_row_stochastic(1e-9) {
            return Err(Error::InvalidConfig("planted phi rows must be distributions".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if let DocLength::Uniform { min, max } = self.doc_length {
            if min > max {
                return Err(Error::InvalidConfig("doc length min exceeds max".into()));
            }
        }
        if let Some(theta) = &self.fixed_theta {
            if theta.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: theta.len(),
                });
            }
            if theta.iter().any(|&t| t < 0.0) || (theta.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig("fixed theta must be a distribution".into()));
            }
        }
        match &self.label_plan {
            None if self.doc_count == 0 => Err(Error::InvalidConfig("doc_count must be at least 1".into())),
            None => Ok(()),
            Some(plan) => {
                let in_range = |r: &Range<usize>| r.start <= r.end && r.end <= k;
                if !in_range(&plan.background) {
                    return Err(Error::InvalidConfig("background range exceeds K".into()));
                }
                for l in &plan.labels {
                    if !in_range(&l.topics) {
                        return Err(Error::InvalidConfig(format!("topics of {} exceed K", l.name)));
                    }
                    if l.topics.is_empty() && plan.background.is_empty() {
                        return Err(Error::InvalidConfig(format!("{} has no topics", l.name)));
                    }
                }
                if plan.labels.iter().map(|l| l.doc_count).sum::<usize>() == 0 {
                    return Err(Error::InvalidConfig("label plan generates no documents".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub raw: Vec<RawDocument>,
    /// True per-document θ, one row per document.
    pub thetas: Matrix,
    /// Label sets, empty when the spec had no label plan.
    pub label_sets: Vec<BTreeSet<String>>,
}

/// Planted truth, written beside a generated JSONL corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub phi: Vec<Vec<f64>>,
    pub doc_ids: Vec<String>,
    pub thetas: Vec<Vec<f64>>,
    pub labels: Vec<Vec<String>>,
}

impl SyntheticCorpus {
    pub fn truth(&self, spec: &GeneratorSpec) -> SyntheticTruth {
        SyntheticTruth {
            phi: spec.planted_phi.to_rows(),
            doc_ids: self.corpus.documents().iter().map(|d| d.id.clone()).collect(),
            thetas: self.thetas.to_rows(),
            labels: self
                .label_sets
                .iter()
                .map(|s| s.iter().cloned().collect())
                .collect(),
        }
    }
}

pub fn token_name(id: usize, vocab_size: usize) -> String {
    let width = vocab_size.saturating_sub(1).to_string().len();
    format!("w{id:0width$}")
}

/// Symmetric Dirichlet draw over `support`, zero elsewhere.
///
/// Gamma variates are combined in log space: for shape `a < 1`,
/// `G(a) = G(a+1)·U^{1/a}`, which underflows for the small concentrations
/// used here if taken literally.
pub fn sample_dirichlet<R: Rng>(rng: &mut R, alpha: f64, k: usize, support: &[usize]) -> Vec<f64> {
    let (shape, boost) = if alpha < 1.0 { (alpha + 1.0, true) } else { (alpha, false) };
    let gamma = Gamma::new(shape, 1.0).expect("positive shape");
    let logs: Vec<f64> = support
        .iter()
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let mut lx = g.max(f64::MIN_POSITIVE).ln();
            if boost {
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                lx += u.ln() / alpha;
            }
            lx
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut theta = vec![0.0; k];
    for (&t, w) in support.iter().zip(weights) {
        theta[t] = w / total;
    }
    theta
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    let u = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Draws documents: θ per document, then each token's topic from θ and its
/// word from that topic's planted distribution.
pub fn generate_corpus(spec: &GeneratorSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let k = spec.planted_phi.rows();
    let v = spec.planted_phi.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let word_cdfs: Vec<Vec<f64>> = spec.planted_phi.iter_rows().map(cumulative).collect();

    // (label, support) per document
    let all: Vec<usize> = (0..k).collect();
    let plan: Vec<(Option<&str>, Vec<usize>)> = match &spec.label_plan {
        None => vec![(None, all); spec.doc_count],
        Some(plan) => plan
            .labels
            .iter()
            .flat_map(|l| {
                let support: Vec<usize> = l.topics.clone().chain(plan.background.clone()).collect();
                std::iter::repeat_n((Some(l.name.as_str()), support), l.doc_count)
            })
            .collect(),
    };

    let n_docs = plan.len();
    let id_width = n_docs.saturating_sub(1).to_string().len();
    let names: Vec<String> = (0..v).map(|j| token_name(j, v)).collect();
    let mut thetas = Matrix::zeros(n_docs, k);
    let mut documents = Vec::with_capacity(n_docs);
    let mut raw = Vec::with_capacity(n_docs);
    let mut label_sets = Vec::with_capacity(n_docs);
    let mut doc_freq = vec![0usize; v];

    for (d, (label, support)) in plan.iter().enumerate() {
        let theta = match &spec.fixed_theta {
            Some(t) => t.clone(),
            None => sample_dirichlet(&mut rng, spec.alpha, k, support),
        };
        let len = match spec.doc_length {
            DocLength::Fixed(n) => n,
            DocLength::Uniform { min, max } => rng.random_range(min..=max),
        };
        let topic_cdf = cumulative(&theta);
        let tokens: Vec<u32> = (0..len)
            .map(|_| {
                let z = draw(&topic_cdf, rng.random());
                draw(&word_cdfs[z], rng.random()) as u32
            })
            .collect();
        let distinct: BTreeSet<u32> = tokens.iter().copied().collect();
        for w in distinct {
            doc_freq[w as usize] += 1;
        }

        let id = format!("doc{d:0id_width$}");
        let labels: Option<BTreeSet<String>> = label.map(|l| BTreeSet::from([l.to_string()]));
        let ratings = label.and_then(parse_label).map(|(category, level)| {
            let level = i64::from(level);
            BTreeMap::from([(category.as_str().to_string(), vec![level; 3])])
        });
        raw.push(RawDocument {
            id: id.clone(),
            text: tokens
                .iter()
                .map(|&w| names[w as usize].as_str())
                .collect::<Vec<_>>()
                .join(" "),
            labels: labels.as_ref().map(|s| s.iter().cloned().collect()),
            ratings,
        });
        label_sets.push(labels.clone().unwrap_or_default());
        thetas.row_mut(d).copy_from_slice(&theta);
        documents.push(Document { id, tokens, labels });
    }

    let vocabulary = Vocabulary::new(names, doc_freq)?;
    let config = PreprocessConfig {
        stopword_list: "none".into(),
        min_doc_freq: 0,
        min_doc_len: 0,
        language_filter: false,
    };
    Ok(SyntheticCorpus {
        corpus: Corpus::from_parts(vocabulary, documents, config)?,
        raw,
        thetas,
        label_sets,
    })
}

/// `k` topics over `v` words: topic `t` puts `in_block` of its mass evenly
/// on its own contiguous block of `v / k` words and spreads the rest evenly
/// over the whole vocabulary.
pub fn block_topics(k: usize, v: usize, in_block: f64) -> Matrix {
    assert!(k >= 1 && v >= k, "need at least one word per topic");
    let block = v / k;
    let mut phi = Matrix::zeros(k, v);
    for t in 0..k {
        let row = phi.row_mut(t);
        for x in row.iter_mut() {
            *x = (1.0 - in_block) / v as f64;
        }
        for x in &mut row[t * block..(t + 1) * block] {
            *x += in_block / block as f64;
        }
    }
    phi
}

/// Greedy topic matching.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Alignment {
    /// `permutation[e]` is the planted row matched to estimated row `e`.
    pub permutation: Vec<usize>,
    pub mean_l1: f64,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Repeatedly pairs the closest remaining (estimated, planted) rows by L1
/// distance, never reusing a row on either side.
pub fn align_topics(estimated: &Matrix, planted: &Matrix) -> Result<Alignment> {
    if estimated.rows() != planted.rows() || estimated.cols() != planted.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} estimated vs {}x{} planted",
            estimated.rows(),
            estimated.cols(),
            planted.rows(),
            planted.cols()
        )));
    }
    let k = estimated.rows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
    for e in 0..k {
        for p in 0..k {
            pairs.push((l1(estimated.row(e), planted.row(p)), e, p));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut permutation = vec![usize::MAX; k];
    let mut planted_used = vec![false; k];
    let mut total = 0.0;
    for (dist, e, p) in pairs {
        if permutation[e] == usize::MAX && !planted_used[p] {
            permutation[e] = p;
            planted_used[p] = true;
            total += dist;
        }
    }
    Ok(Alignment {
        permutation,
        mean_l1: if k == 0 { 0.0 } else { total / k as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(phi: Matrix, docs: usize, len: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            planted_phi: phi,
            alpha: 0.1,
            doc_count: docs,
            doc_length: DocLength::Fixed(len),
            fixed_theta: None,
            label_plan: None,
            seed,
        }
    }

    #[test]
    fn single_topic_theta_is_one() {
        let s = generate_corpus(&spec(block_topics(1, 5, 0.5), 4, 10, 1)).unwrap();
        assert!(s.thetas.iter_rows().all(|r| r == [1.0]));
        assert_eq!(s.corpus.token_count(), 40);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = generate_corpus(&spec(block_topics(3, 12, 0.9), 10, 20, 5)).unwrap();
        let b = generate_corpus(&spec(block_topics(3, 12, 0.9), 10, 20, 5)).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.raw, b.raw);
        let c = generate_corpus(&spec(block_topics(3, 12, 0.9), 10, 20, 6)).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn dirichlet_draws_are_distributions_even_for_tiny_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for alpha in [0.001, 0.01, 0.5, 3.0] {
            for _ in 0..200 {
                let t = sample_dirichlet(&mut rng, alpha, 6, &[1, 3, 4]);
                assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(t.iter().all(|x| x.is_finite() && *x >= 0.0));
                assert_eq!((t[0], t[2], t[5]), (0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn label_plan_restricts_theta_and_sets_ratings() {
        let plan = LabelPlan {
            labels: vec![
                PlannedLabel { name: "appropriate".into(), topics: 0..1, doc_count: 3 },
                PlannedLabel { name: "sex:3".into(), topics: 1..2, doc_count: 2 },
            ],
            background: 2..3,
        };
        let s = generate_corpus(&GeneratorSpec {
            label_plan: Some(plan),
            ..spec(block_topics(3, 9, 0.9), 0, 15, 2)
        })
        .unwrap();
        assert_eq!(s.corpus.len(), 5);
        for d in 0..3 {
            assert_eq!(s.thetas.get(d, 1), 0.0);
            assert!(s.raw[d].ratings.is_none());
        }
        for d in 3..5 {
            assert_eq!(s.thetas.get(d, 0), 0.0);
            assert_eq!(s.raw[d].ratings.as_ref().unwrap()["sex"], vec![3, 3, 3]);
            assert!(s.label_sets[d].contains("sex:3"));
        }
    }

    #[test]
    fn spec_validation() {
        let bad_phi = Matrix::from_rows(vec![vec![0.5, 0.4]]).unwrap();
        assert!(generate_corpus(&spec(bad_phi, 1, 1, 0)).is_err());
        assert!(generate_corpus(&spec(block_topics(2, 4, 0.9), 0, 1, 0)).is_err());
        let wrong_theta = GeneratorSpec {
            fixed_theta: Some(vec![1.0]),
            ..spec(block_topics(2, 4, 0.9), 1, 1, 0)
        };
        assert!(generate_corpus(&wrong_theta).is_err());
    }

    #[test]
    fn raw_text_names_tokens() {
        let s = generate_corpus(&spec(block_topics(2, 12, 0.9), 1, 5, 0)).unwrap();
        assert_eq!(token_name(3, 12), "w03");
        let words: Vec<&str> = s.raw[0].text.split(' ').collect();
        assert_eq!(words.len(), 5);
        for (w, &id) in words.iter().zip(&s.corpus.documents()[0].tokens) {
            assert_eq!(*w, s.corpus.vocabulary().token(id));
        }
    }

    #[test]
    fn align_identity_and_permutation() {
        let planted = block_topics(4, 16, 0.9);
        let a = align_topics(&planted, &planted).unwrap();
        assert_eq!(a.permutation, vec![0, 1, 2, 3]);
        assert_eq!(a.mean_l1, 0.0);

        // estimated row e is planted row pi[e]
        let pi = [2, 0, 3, 1];
        let estimated = Matrix::from_rows(pi.iter().map(|&p| planted.row(p).to_vec()).collect()).unwrap();
        let a = align_topics(&estimated, &planted).unwrap();
        assert_eq!(a.permutation, pi.to_vec());
        assert_eq!(a.mean_l1, 0.0);

        assert!(align_topics(&planted, &block_topics(2, 16, 0.9)).is_err());
    }
}
