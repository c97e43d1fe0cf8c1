//! Collapsed Gibbs sampling for LDA, fold-in inference and perplexity.
//!
//! The sampler is shared with [`crate::plda`]: every document carries a
//! support (the topics its tokens may take), which for plain LDA is the full
//! range `0..K`. Restricting the support and renormalising the conditional
//! over it is all partially-labeled LDA needs.

use std::io::{Read, Write};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::plda::LabelTopicLayout;

/// How φ and θ are read off the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Estimator {
    /// Point estimate from the state after the last sweep.
    FinalState,
    /// Mean of the estimates after every `thin`-th post-burn-in sweep.
    Averaged { thin: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 50,
            alpha: 0.01,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            seed: 0,
            estimator: Estimator::FinalState,
        }
    }
}

impl LdaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig("beta must be positive".into()));
        }
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidConfig("iterations must exceed burn_in".into()));
        }
        if let Estimator::Averaged { thin: 0 } = self.estimator {
            return Err(Error::InvalidConfig("thinning interval must be at least 1".into()));
        }
        Ok(())
    }
}

/// Topic assignments plus the count tables that make each resampling step
/// O(K).
#[derive(Clone, Debug)]
pub struct GibbsState {
    k: usize,
    vocab_size: usize,
    seed: u64,
    assignments: Vec<Vec<u32>>,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    rng: ChaCha8Rng,
}

impl PartialEq for GibbsState {
    /// Compares assignments and counts; RNG position is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.vocab_size == other.vocab_size
            && self.assignments == other.assignments
            && self.doc_topic == other.doc_topic
            && self.topic_word == other.topic_word
            && self.topic_total == other.topic_total
    }
}

impl GibbsState {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn doc_topic(&self, d: usize, k: usize) -> u32 {
        self.doc_topic[d * self.k + k]
    }

    pub fn topic_word(&self, k: usize, w: usize) -> u32 {
        self.topic_word[k * self.vocab_size + w]
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.topic_total[k]
    }

    pub fn num_docs(&self) -> usize {
        self.assignments.len()
    }

    /// Rebuilds every count table from the assignments and compares.
    pub fn is_consistent(&self, corpus: &Corpus) -> bool {
        let rebuilt = Self::from_assignments(corpus, self.k, self.seed, self.assignments.clone());
        rebuilt.doc_topic == self.doc_topic
            && rebuilt.topic_word == self.topic_word
            && rebuilt.topic_total == self.topic_total
    }

    fn from_assignments(corpus: &Corpus, k: usize, seed: u64, assignments: Vec<Vec<u32>>) -> Self {
        let v = corpus.vocab_size();
        let d = corpus.len();
        let mut state = GibbsState {
            k,
            vocab_size: v,
            seed,
            assignments,
            doc_topic: vec![0; d * k],
            topic_word: vec![0; k * v],
            topic_total: vec![0; k],
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        for (d, doc) in corpus.documents().iter().enumerate() {
            for (i, &w) in doc.tokens.iter().enumerate() {
                let z = state.assignments[d][i] as usize;
                state.doc_topic[d * k + z] += 1;
                state.topic_word[z * v + w as usize] += 1;
                state.topic_total[z] += 1;
            }
        }
        state
    }

    #[inline]
    fn remove(&mut self, d: usize, w: usize, z: usize) {
        self.doc_topic[d * self.k + z] -= 1;
        self.topic_word[z * self.vocab_size + w] -= 1;
        self.topic_total[z] -= 1;
    }

    #[inline]
    fn add(&mut self, d: usize, w: usize, z: usize) {
        self.doc_topic[d * self.k + z] += 1;
        self.topic_word[z * self.vocab_size + w] += 1;
        self.topic_total[z] += 1;
    }
}

/// The full topic range, used as every document's support in plain LDA.
pub(crate) fn full_support(k: usize) -> Vec<u32> {
    (0..k as u32).collect()
}

/// Initial state with each token's topic drawn uniformly from `0..k`.
pub fn init_state(corpus: &Corpus, k: usize, seed: u64) -> Result<GibbsState> {
    let full = full_support(k);
    let supports = vec![full.as_slice(); corpus.len()];
    init_state_with_support(corpus, k, seed, &supports)
}

pub(crate) fn init_state_with_support(
    corpus: &Corpus,
    k: usize,
    seed: u64,
    supports: &[&[u32]],
) -> Result<GibbsState> {
    if k < 1 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignments = corpus
        .documents()
        .iter()
        .zip(supports)
        .map(|(doc, allowed)| {
            doc.tokens
                .iter()
                .map(|_| allowed[rng.random_range(0..allowed.len() as u32) as usize])
                .collect()
        })
        .collect();
    let mut state = GibbsState::from_assignments(corpus, k, seed, assignments);
    state.rng = rng;
    Ok(state)
}

/// One pass over every token in document order, resampling each from the
/// collapsed conditional
/// `(c_dk + α)(c_kw + β) / (c_k + Vβ)` with the token's own counts removed.
pub fn gibbs_sweep(state: &mut GibbsState, corpus: &Corpus, alpha: f64, beta: f64) {
    let full = full_support(state.k);
    let supports = vec![full.as_slice(); corpus.len()];
    let mut scratch = vec![0.0; state.k];
    sweep_with_support(state, corpus, alpha, beta, &supports, &mut scratch);
}

pub(crate) fn sweep_with_support(
    state: &mut GibbsState,
    corpus: &Corpus,
    alpha: f64,
    beta: f64,
    supports: &[&[u32]],
    cumulative: &mut [f64],
) {
    let v = state.vocab_size;
    let k_all = state.k;
    let v_beta = v as f64 * beta;
    for (d, doc) in corpus.documents().iter().enumerate() {
        let allowed = supports[d];
        let cumulative = &mut cumulative[..allowed.len()];
        for (i, &w) in doc.tokens.iter().enumerate() {
            let w = w as usize;
            let old = state.assignments[d][i] as usize;
            state.remove(d, w, old);

            let mut total = 0.0;
            for (slot, &k) in cumulative.iter_mut().zip(allowed) {
                let k = k as usize;
                let dk = state.doc_topic[d * k_all + k] as f64;
                let kw = state.topic_word[k * v + w] as f64;
                let kt = state.topic_total[k] as f64;
                total += (dk + alpha) * (kw + beta) / (kt + v_beta);
                *slot = total;
            }
            let u = state.rng.random::<f64>() * total;
            let j = cumulative.partition_point(|&c| c <= u).min(allowed.len() - 1);
            let new = allowed[j];

            state.assignments[d][i] = new;
            state.add(d, w, new as usize);
        }
    }
}

/// φ estimate `(c_kw + β) / (c_k + Vβ)` from the current counts.
fn estimate_phi(state: &GibbsState, beta: f64) -> Matrix {
    let v = state.vocab_size;
    let mut phi = Matrix::zeros(state.k, v);
    for k in 0..state.k {
        let denom = state.topic_total[k] as f64 + v as f64 * beta;
        let row = phi.row_mut(k);
        for (w, slot) in row.iter_mut().enumerate() {
            *slot = (state.topic_word[k * v + w] as f64 + beta) / denom;
        }
    }
    phi
}

/// θ estimate `(c_dk + α) / (N_d + |S_d|α)` over each document's support
/// `S_d`; topics outside the support get zero.
fn estimate_theta(state: &GibbsState, alpha: f64, supports: &[&[u32]]) -> Matrix {
    let k_all = state.k;
    let mut theta = Matrix::zeros(state.num_docs(), k_all);
    for (d, allowed) in supports.iter().enumerate() {
        let n = state.assignments[d].len() as f64;
        let denom = n + allowed.len() as f64 * alpha;
        let row = theta.row_mut(d);
        for &k in *allowed {
            let k = k as usize;
            row[k] = (state.doc_topic[d * k_all + k] as f64 + alpha) / denom;
        }
    }
    theta
}

fn add_into(acc: &mut Matrix, m: &Matrix) {
    for r in 0..acc.rows() {
        for (a, b) in acc.row_mut(r).iter_mut().zip(m.row(r)) {
            *a += b;
        }
    }
}

fn scale(m: &mut Matrix, by: f64) {
    for r in 0..m.rows() {
        for x in m.row_mut(r) {
            *x *= by;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub estimator: Estimator,
}

/// Per-document topic proportions for the training documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocTheta {
    pub ids: Vec<String>,
    pub theta: Matrix,
}

/// A trained topic model: smoothed topic-word distributions plus what is
/// needed to apply them to new text.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicModel {
    metadata: ModelMetadata,
    vocabulary: Vocabulary,
    phi: Matrix,
    layout: Option<LabelTopicLayout>,
    doc_theta: Option<DocTheta>,
}

/// A model together with the final chain state it was read from.
#[derive(Clone, Debug)]
pub struct Fit {
    pub model: TopicModel,
    pub state: GibbsState,
}

pub(crate) fn fit_with_support(
    corpus: &Corpus,
    config: &LdaConfig,
    supports: &[&[u32]],
    layout: Option<LabelTopicLayout>,
) -> Result<Fit> {
    config.validate()?;
    let mut state = init_state_with_support(corpus, config.k, config.seed, supports)?;
    let mut scratch = vec![0.0; config.k];

    let mut phi_acc = Matrix::zeros(config.k, corpus.vocab_size());
    let mut theta_acc = Matrix::zeros(corpus.len(), config.k);
    let mut samples = 0usize;
    for iter in 0..config.iterations {
        sweep_with_support(&mut state, corpus, config.alpha, config.beta, supports, &mut scratch);
        if let Estimator::Averaged { thin } = config.estimator {
            if iter >= config.burn_in && (iter - config.burn_in) % thin == 0 {
                add_into(&mut phi_acc, &estimate_phi(&state, config.beta));
                add_into(&mut theta_acc, &estimate_theta(&state, config.alpha, supports));
                samples += 1;
            }
        }
    }
    let (phi, theta) = match config.estimator {
        Estimator::FinalState => (
            estimate_phi(&state, config.beta),
            estimate_theta(&state, config.alpha, supports),
        ),
        Estimator::Averaged { .. } => {
            scale(&mut phi_acc, 1.0 / samples as f64);
            scale(&mut theta_acc, 1.0 / samples as f64);
            (phi_acc, theta_acc)
        }
    };

    let model = TopicModel {
        metadata: ModelMetadata {
            k: config.k,
            alpha: config.alpha,
            beta: config.beta,
            seed: config.seed,
            iterations: config.iterations,
            burn_in: config.burn_in,
            estimator: config.estimator,
        },
        vocabulary: corpus.vocabulary().clone(),
        phi,
        layout,
        doc_theta: Some(DocTheta {
            ids: corpus.documents().iter().map(|d| d.id.clone()).collect(),
            theta,
        }),
    };
    Ok(Fit { model, state })
}

pub fn fit_lda(corpus: &Corpus, config: &LdaConfig) -> Result<Fit> {
    let full = full_support(config.k);
    let supports = vec![full.as_slice(); corpus.len()];
    fit_with_support(corpus, config, &supports, None)
}

/// Runs `iterations` sweeps from a uniform random start and estimates φ and
/// the training θ.
pub fn train_lda(corpus: &Corpus, config: &LdaConfig) -> Result<TopicModel> {
    fit_lda(corpus, config).map(|f| f.model)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    metadata: ModelMetadata,
    vocab: Vec<String>,
    doc_freq: Vec<usize>,
    /// Row-major K×V.
    phi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<LabelTopicLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc_theta: Option<DocTheta>,
}

const MODEL_VERSION: u32 = 1;

impl TopicModel {
    /// Builds a model from explicit parts, e.g. a hand-specified φ.
    pub fn from_parts(
        metadata: ModelMetadata,
        vocabulary: Vocabulary,
        phi: Matrix,
        layout: Option<LabelTopicLayout>,
    ) -> Result<Self> {
        if metadata.k < 1 || phi.rows() != metadata.k {
            return Err(Error::ShapeMismatch(format!(
                "phi has {} rows for k={}",
                phi.rows(),
                metadata.k
            )));
        }
        if phi.cols() != vocabulary.len() {
            return Err(Error::DimensionMismatch {
                expected: vocabulary.len(),
                found: phi.cols(),
            });
        }
        if !(metadata.alpha > 0.0 && metadata.beta > 0.0) {
            return Err(Error::InvalidConfig("alpha and beta must be positive".into()));
        }
        if !phi.is_row_stochastic(1e-9) {
            return Err(Error::InvalidConfig("phi rows must be distributions".into()));
        }
        if let Some(layout) = &layout {
            if layout.k() != metadata.k {
                return Err(Error::DimensionMismatch {
                    expected: metadata.k,
                    found: layout.k(),
                });
            }
        }
        Ok(TopicModel {
            metadata,
            vocabulary,
            phi,
            layout,
            doc_theta: None,
        })
    }

    pub fn k(&self) -> usize {
        self.metadata.k
    }

    pub fn alpha(&self) -> f64 {
        self.metadata.alpha
    }

    pub fn beta(&self) -> f64 {
        self.metadata.beta
    }

    pub fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    pub fn layout(&self) -> Option<&LabelTopicLayout> {
        self.layout.as_ref()
    }

    pub fn doc_theta(&self) -> Option<&DocTheta> {
        self.doc_theta.as_ref()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_VERSION,
            metadata: self.metadata.clone(),
            vocab: self.vocabulary.tokens().to_vec(),
            doc_freq: self.vocabulary.doc_freqs().to_vec(),
            phi: self.phi.as_slice().to_vec(),
            layout: self.layout.clone(),
            doc_theta: self.doc_theta.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion(file.version));
        }
        let vocabulary = Vocabulary::new(file.vocab, file.doc_freq)?;
        let phi = Matrix::from_vec(file.metadata.k, vocabulary.len(), file.phi)?;
        let mut model = TopicModel::from_parts(file.metadata, vocabulary, phi, file.layout)?;
        model.doc_theta = file.doc_theta;
        Ok(model)
    }
    /// Model file bytes, gzip-compressed when asked.
    pub fn to_bytes(&self, gzip: bool) -> Result<Vec<u8>> {
        let json = self.to_json()?;
        if !gzip {
            return Ok(json.into_bytes());
        }
        let mut encoder = GzEncoder::new(Vec::new(), Compression::default());
        encoder.write_all(json.as_bytes())?;
        Ok(encoder.finish()?)
    }

    /// Reads plain or gzip-compressed model files, detected by magic bytes.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(&[0x1f, 0x8b]) {
            let mut text = String::new();
            GzDecoder::new(bytes).read_to_string(&mut text)?;
            Self::from_json(&text)
        } else {
            let text = std::str::from_utf8(bytes)
                .map_err(|e| Error::InvalidConfig(format!("model file is not UTF-8: {e}")))?;
            Self::from_json(text)
        }
    }
}

/// Writes `doc_id,theta_0,…,theta_{K-1}` rows.
pub fn write_theta_csv<W: Write>(writer: W, ids: &[String], theta: &Matrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["doc_id".to_string()];
    header.extend((0..theta.cols()).map(|k| format!("theta_{k}")));
    out.write_record(&header)?;
    for (id, row) in ids.iter().zip(theta.iter_rows()) {
        let mut record = vec![id.clone()];
        record.extend(row.iter().map(f64::to_string));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            iterations: 50,
            burn_in: 10,
            seed: 0,
            estimator: Estimator::FinalState,
        }
    }
}

impl InferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidConfig("iterations must exceed burn_in".into()));
        }
        if let Estimator::Averaged { thin: 0 } = self.estimator {
            return Err(Error::InvalidConfig("thinning interval must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fold-in estimate of θ for one document with φ held fixed.
///
/// Tokens are resampled from `φ_kw (c_dk + α)`; the result is the smoothed
/// normalised count vector. A document with no tokens gets the uniform
/// vector. Token ids must index the model vocabulary.
pub fn infer_theta(model: &TopicModel, tokens: &[u32], config: &InferConfig) -> Vec<f64> {
    let k_all = model.k();
    let alpha = model.alpha();
    if tokens.is_empty() {
        return vec![1.0 / k_all as f64; k_all];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut z: Vec<usize> = tokens
        .iter()
        .map(|_| rng.random_range(0..k_all as u32) as usize)
        .collect();
    let mut counts = vec![0u32; k_all];
    for &t in &z {
        counts[t] += 1;
    }
    let denom = tokens.len() as f64 + k_all as f64 * alpha;
    let estimate = |counts: &[u32]| -> Vec<f64> {
        counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
    };

    let mut cumulative = vec![0.0; k_all];
    let mut acc = vec![0.0; k_all];
    let mut samples = 0usize;
    for iter in 0..config.iterations {
        for (i, &w) in tokens.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut total = 0.0;
            for (k, slot) in cumulative.iter_mut().enumerate() {
                total += model.phi.get(k, w as usize) * (counts[k] as f64 + alpha);
                *slot = total;
            }
            let u = rng.random::<f64>() * total;
            let new = cumulative.partition_point(|&c| c <= u).min(k_all - 1);
            z[i] = new;
            counts[new] += 1;
        }
        if let Estimator::Averaged { thin } = config.estimator {
            if iter >= config.burn_in && (iter - config.burn_in) % thin == 0 {
                for (a, e) in acc.iter_mut().zip(estimate(&counts)) {
                    *a += e;
                }
                samples += 1;
            }
        }
    }
    match config.estimator {
        Estimator::FinalState => estimate(&counts),
        Estimator::Averaged { .. } => acc.into_iter().map(|a| a / samples as f64).collect(),
    }
}

/// Fold-in θ for every document of `corpus`; document `d` uses seed
/// `config.seed + d`.
pub fn infer_corpus(model: &TopicModel, corpus: &Corpus, config: &InferConfig) -> Result<Matrix> {
    config.validate()?;
    check_vocabulary(model, corpus)?;
    let docs = corpus.documents();
    let infer_one = |d: usize| {
        let cfg = InferConfig {
            seed: config.seed.wrapping_add(d as u64),
            ..config.clone()
        };
        infer_theta(model, &docs[d].tokens, &cfg)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..docs.len()).into_par_iter().map(infer_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..docs.len()).map(infer_one).collect();
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, model.k()));
    }
    Matrix::from_rows(rows)
}

fn check_vocabulary(model: &TopicModel, corpus: &Corpus) -> Result<()> {
    if corpus.vocab_size() != model.vocabulary.len() {
        return Err(Error::DimensionMismatch {
            expected: model.vocabulary.len(),
            found: corpus.vocab_size(),
        });
    }
    Ok(())
}

/// `exp(-Σ_d Σ_i log Σ_k θ_dk φ_k,w_di / Σ_d N_d)` for given θ rows.
/// Documents without tokens contribute nothing.
pub fn perplexity_with_theta(phi: &Matrix, docs: &[&[u32]], theta: &Matrix) -> Result<f64> {
    if docs.len() != theta.rows() {
        return Err(Error::DimensionMismatch {
            expected: docs.len(),
            found: theta.rows(),
        });
    }
    if theta.cols() != phi.rows() {
        return Err(Error::DimensionMismatch {
            expected: phi.rows(),
            found: theta.cols(),
        });
    }
    let mut log_lik = 0.0;
    let mut n = 0usize;
    for (d, tokens) in docs.iter().enumerate() {
        let th = theta.row(d);
        for &w in *tokens {
            let p: f64 = th
                .iter()
                .enumerate()
                .map(|(k, t)| t * phi.get(k, w as usize))
                .sum();
            log_lik += p.ln();
        }
        n += tokens.len();
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok((-log_lik / n as f64).exp())
}

/// Held-out perplexity with θ folded in per document.
pub fn perplexity(model: &TopicModel, heldout: &Corpus, config: &InferConfig) -> Result<f64> {
    let theta = infer_corpus(model, heldout, config)?;
    let docs: Vec<&[u32]> = heldout.documents().iter().map(|d| d.tokens.as_slice()).collect();
    perplexity_with_theta(&model.phi, &docs, &theta)
}

/// Perplexity of the training corpus under the training θ stored in the model.
pub fn training_perplexity(model: &TopicModel, corpus: &Corpus) -> Result<f64> {
    check_vocabulary(model, corpus)?;
    let doc_theta = model
        .doc_theta
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("model carries no training theta".into()))?;
    let docs: Vec<&[u32]> = corpus.documents().iter().map(|d| d.tokens.as_slice()).collect();
    perplexity_with_theta(&model.phi, &docs, &doc_theta.theta)
}

/// The `n` most probable tokens of a topic; ties go to the lower id.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Vec<String> {
    let row = model.phi.row(topic);
    let mut ids: Vec<usize> = (0..row.len()).collect();
    ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    ids.into_iter()
        .take(n)
        .map(|w| model.vocabulary.token(w as u32).to_string())
        .collect()
}

/// Relative occurrence difference between two slices for every topic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlicePair {
    pub a: usize,
    pub b: usize,
    pub relative_difference: Vec<f64>,
    /// Topics whose relative difference exceeds the cutoff.
    pub flagged: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceReport {
    /// `occurrence[s][k]`: fraction of slice `s` documents with θ_k ≥ threshold.
    pub occurrence: Vec<Vec<f64>>,
    pub pairs: Vec<SlicePair>,
}

/// Compares how often each topic occurs across document slices.
///
/// `slices` must partition the rows of `theta`.
pub fn slice_occurrence(
    theta: &Matrix,
    slices: &[Vec<usize>],
    topic_threshold: f64,
    cutoff: f64,
) -> Result<SliceReport> {
    let mut owner = vec![None; theta.rows()];
    for (s, docs) in slices.iter().enumerate() {
        if docs.is_empty() {
            return Err(Error::EmptySlice(s));
        }
        for &d in docs {
            match owner.get_mut(d) {
                None => return Err(Error::NotAPartition(format!("document {d} out of range"))),
                Some(Some(_)) => {
                    return Err(Error::NotAPartition(format!("document {d} in two slices")))
                }
                Some(slot) => *slot = Some(s),
            }
        }
    }
    if let Some(d) = owner.iter().position(Option::is_none) {
        return Err(Error::NotAPartition(format!("document {d} in no slice")));
    }

    let k = theta.cols();
    let occurrence: Vec<Vec<f64>> = slices
        .iter()
        .map(|docs| {
            (0..k)
                .map(|t| {
                    let hits = docs.iter().filter(|&&d| theta.get(d, t) >= topic_threshold).count();
                    hits as f64 / docs.len() as f64
                })
                .collect()
        })
        .collect();

    let mut pairs = Vec::new();
    for a in 0..slices.len() {
        for b in a + 1..slices.len() {
            let relative_difference: Vec<f64> = (0..k)
                .map(|t| {
                    let (x, y) = (occurrence[a][t], occurrence[b][t]);
                    let m = x.max(y);
                    if m == 0.0 {
                        0.0
                    } else {
                        (x - y).abs() / m
                    }
                })
                .collect();
            let flagged = relative_difference
                .iter()
                .enumerate()
                .filter(|(_, &r)| r > cutoff)
                .map(|(t, _)| t)
                .collect();
            pairs.push(SlicePair {
                a,
                b,
                relative_difference,
                flagged,
            });
        }
    }
    Ok(SliceReport { occurrence, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, PreprocessConfig};

    fn toy_corpus(docs: &[&[u32]], v: usize) -> Corpus {
        let vocab = Vocabulary::new((0..v).map(|i| format!("w{i}")).collect(), vec![1; v]).unwrap();
        let documents = docs
            .iter()
            .enumerate()
            .map(|(i, t)| Document {
                id: format!("d{i}"),
                tokens: t.to_vec(),
                labels: None,
            })
            .collect();
        Corpus::from_parts(vocab, documents, PreprocessConfig::default()).unwrap()
    }

    fn metadata(k: usize) -> ModelMetadata {
        ModelMetadata {
            k,
            alpha: 0.01,
            beta: 0.01,
            seed: 0,
            iterations: 1,
            burn_in: 0,
            estimator: Estimator::FinalState,
        }
    }

    #[test]
    fn single_topic_init_assigns_zero() {
        let c = toy_corpus(&[&[0, 1, 2], &[2, 2]], 3);
        let s = init_state(&c, 1, 7).unwrap();
        assert!(s.assignments().iter().flatten().all(|&z| z == 0));
        assert_eq!(s.topic_total(0), 5);
    }

    #[test]
    fn init_is_deterministic_and_consistent() {
        let c = toy_corpus(&[&[0, 1, 2, 3], &[3, 2, 1]], 4);
        let a = init_state(&c, 3, 11).unwrap();
        let b = init_state(&c, 3, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.is_consistent(&c));
    }

    #[test]
    fn init_rejects_empty_and_zero_k() {
        let c = toy_corpus(&[], 2);
        assert!(matches!(init_state(&c, 2, 0), Err(Error::EmptyCorpus)));
        let c = toy_corpus(&[&[0]], 2);
        assert!(init_state(&c, 0, 0).is_err());
    }

    #[test]
    fn single_topic_sweep_leaves_state() {
        let c = toy_corpus(&[&[0, 1, 2], &[2, 2]], 3);
        let mut s = init_state(&c, 1, 3).unwrap();
        let before = s.clone();
        gibbs_sweep(&mut s, &c, 0.1, 0.1);
        assert_eq!(s, before);
    }

    #[test]
    fn sweeps_keep_counts_consistent() {
        let c = toy_corpus(&[&[0, 1, 2, 3, 3], &[3, 2, 1], &[0, 0, 4]], 5);
        let mut s = init_state(&c, 3, 5).unwrap();
        for _ in 0..20 {
            gibbs_sweep(&mut s, &c, 0.5, 0.1);
            assert!(s.is_consistent(&c));
        }
    }

    #[test]
    fn single_topic_phi_is_smoothed_unigram() {
        let c = toy_corpus(&[&[0, 1, 1], &[1, 2]], 4);
        let cfg = LdaConfig {
            k: 1,
            iterations: 3,
            burn_in: 0,
            ..LdaConfig::default()
        };
        let m = train_lda(&c, &cfg).unwrap();
        let counts = [1.0, 3.0, 1.0, 0.0];
        for (w, &n) in counts.iter().enumerate() {
            let expected = (n + 0.01) / (5.0 + 4.0 * 0.01);
            assert!((m.phi().get(0, w) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let base = LdaConfig::default();
        assert!(LdaConfig { k: 0, ..base.clone() }.validate().is_err());
        assert!(LdaConfig { alpha: 0.0, ..base.clone() }.validate().is_err());
        assert!(LdaConfig { beta: -1.0, ..base.clone() }.validate().is_err());
        assert!(LdaConfig { iterations: 5, burn_in: 5, ..base.clone() }.validate().is_err());
        assert!(LdaConfig { estimator: Estimator::Averaged { thin: 0 }, ..base.clone() }.validate().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn averaged_estimator_gives_distributions() {
        let c = toy_corpus(&[&[0, 1, 2, 3, 3], &[3, 2, 1], &[0, 0, 4]], 5);
        let cfg = LdaConfig {
            k: 3,
            iterations: 40,
            burn_in: 10,
            estimator: Estimator::Averaged { thin: 3 },
            ..LdaConfig::default()
        };
        let m = train_lda(&c, &cfg).unwrap();
        assert!(m.phi().is_row_stochastic(1e-9));
        assert!(m.doc_theta().unwrap().theta.is_row_stochastic(1e-9));
    }

    #[test]
    fn infer_theta_edge_cases() {
        let vocab = Vocabulary::new(vec!["a".into(), "b".into()], vec![1, 1]).unwrap();
        let phi = Matrix::from_rows(vec![vec![0.5, 0.5]; 4]).unwrap();
        let m = TopicModel::from_parts(metadata(4), vocab.clone(), phi, None).unwrap();
        assert_eq!(infer_theta(&m, &[], &InferConfig::default()), vec![0.25; 4]);

        let phi = Matrix::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        let m = TopicModel::from_parts(metadata(1), vocab, phi, None).unwrap();
        assert_eq!(infer_theta(&m, &[0, 1, 1], &InferConfig::default()), vec![1.0]);
    }

    #[test]
    fn uniform_phi_perplexity_is_vocab_size() {
        let v = 7;
        let c = toy_corpus(&[&[0, 1, 2], &[6, 5, 5, 4]], v);
        let phi = Matrix::from_rows(vec![vec![1.0 / v as f64; v]; 3]).unwrap();
        let m = TopicModel::from_parts(metadata(3), c.vocabulary().clone(), phi, None).unwrap();
        let p = perplexity(&m, &c, &InferConfig::default()).unwrap();
        assert!((p - v as f64).abs() < 1e-9, "{p}");
    }

    #[test]
    fn certain_word_has_perplexity_one() {
        let c = toy_corpus(&[&[1, 1, 1, 1]], 2);
        let phi = Matrix::from_rows(vec![vec![0.0, 1.0]]).unwrap();
        let m = TopicModel::from_parts(metadata(1), c.vocabulary().clone(), phi, None).unwrap();
        assert!((perplexity(&m, &c, &InferConfig::default()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perplexity_hand_computation() {
        // Two documents, K=2, V=3.
        let phi = Matrix::from_rows(vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.1, 0.8]]).unwrap();
        let theta = Matrix::from_rows(vec![vec![0.75, 0.25], vec![0.2, 0.8]]).unwrap();
        let d0: &[u32] = &[0, 2];
        let d1: &[u32] = &[2, 2, 1];
        // p = 0.75*0.5+0.25*0.1 = 0.4, 0.75*0.2+0.25*0.8 = 0.35,
        //     0.2*0.2+0.8*0.8 = 0.68 (twice), 0.2*0.3+0.8*0.1 = 0.14
        let expected = (-(0.4f64.ln() + 0.35f64.ln() + 2.0 * 0.68f64.ln() + 0.14f64.ln()) / 5.0).exp();
        let got = perplexity_with_theta(&phi, &[d0, d1], &theta).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn perplexity_without_tokens_is_empty_corpus() {
        let c = toy_corpus(&[&[], &[]], 2);
        let phi = Matrix::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        let m = TopicModel::from_parts(metadata(1), c.vocabulary().clone(), phi, None).unwrap();
        assert!(matches!(perplexity(&m, &c, &InferConfig::default()), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn top_words_order_and_ties() {
        let vocab = Vocabulary::new(
            vec!["kiss".into(), "blood".into(), "car".into()],
            vec![1, 1, 1],
        )
        .unwrap();
        let phi = Matrix::from_rows(vec![vec![0.2, 0.6, 0.2], vec![1.0 / 3.0; 3]]).unwrap();
        let m = TopicModel::from_parts(metadata(2), vocab, phi, None).unwrap();
        assert_eq!(top_words(&m, 0, 2), vec!["blood", "kiss"]);
        assert_eq!(top_words(&m, 1, 2), vec!["kiss", "blood"]);
        assert_eq!(top_words(&m, 1, 10).len(), 3);
    }

    #[test]
    fn slice_occurrence_basic_cases() {
        let theta = Matrix::from_rows(vec![
            vec![0.9, 0.1],
            vec![0.8, 0.2],
            vec![0.01, 0.99],
            vec![0.02, 0.98],
        ])
        .unwrap();
        let r = slice_occurrence(&theta, &[vec![0, 1], vec![2, 3]], 0.05, 0.5).unwrap();
        assert_eq!(r.occurrence[0], vec![1.0, 1.0]);
        assert_eq!(r.occurrence[1], vec![0.0, 1.0]);
        assert_eq!(r.pairs[0].relative_difference, vec![1.0, 0.0]);
        assert_eq!(r.pairs[0].flagged, vec![0]);

        let same = slice_occurrence(&theta, &[vec![0, 2], vec![1, 3]], 0.05, 0.5).unwrap();
        assert!(same.pairs[0].relative_difference.iter().all(|&x| x == 0.0));

        assert!(matches!(
            slice_occurrence(&theta, &[vec![0, 1, 2, 3], vec![]], 0.05, 0.5),
            Err(Error::EmptySlice(1))
        ));
        assert!(slice_occurrence(&theta, &[vec![0, 1], vec![1, 2, 3]], 0.05, 0.5).is_err());
        assert!(slice_occurrence(&theta, &[vec![0, 1], vec![2]], 0.05, 0.5).is_err());
    }

    #[test]
    fn model_gzip_round_trip() {
        let c = toy_corpus(&[&[0, 1, 2, 3, 3], &[3, 2, 1]], 4);
        let model = train_lda(&c, &LdaConfig { k: 2, iterations: 5, burn_in: 1, ..LdaConfig::default() }).unwrap();
        let gz = model.to_bytes(true).unwrap();
        assert_eq!(&gz[..2], &[0x1f, 0x8b]);
        assert_eq!(TopicModel::from_bytes(&gz).unwrap(), model);
        assert_eq!(TopicModel::from_bytes(&model.to_bytes(false).unwrap()).unwrap(), model);
        assert_eq!(gz, model.to_bytes(true).unwrap());
    }

    #[test]
    fn model_json_round_trip() {
        let c = toy_corpus(&[&[0, 1, 2, 3, 3], &[3, 2, 1]], 4);
        let cfg = LdaConfig { k: 2, iterations: 5, burn_in: 1, ..LdaConfig::default() };
        let m = train_lda(&c, &cfg).unwrap();
        let back = TopicModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn theta_csv_layout() {
        let theta = Matrix::from_rows(vec![vec![0.25, 0.75]]).unwrap();
        let mut buf = Vec::new();
        write_theta_csv(&mut buf, &["d0".to_string()], &theta).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "doc_id,theta_0,theta_1\nd0,0.25,0.75\n");
    }
}
