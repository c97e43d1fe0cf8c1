//! Three small experiments on synthetic corpora, exposed to JavaScript.
//! Each export returns a JSON string; the `*_report` functions behind them
//! are plain Rust so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use topicrate::annotations::Category;
use topicrate::evaluation::{metrics_report, predict_labels, ClassifyConfig, LabelSets, LABEL_LEVELS};
use topicrate::lda::{self, InferConfig, LdaConfig};
use topicrate::plda::{self, build_layout, rating_labels, PldaConfig};
use topicrate::synthgen::{align_topics, block_topics, generate_corpus, DocLength, GeneratorSpec, LabelPlan, PlannedLabel};
use topicrate::{Matrix, Result};

const WORDS_PER_TOPIC: usize = 10;

fn spec(phi: Matrix, docs: usize, alpha: f64, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        planted_phi: phi,
        alpha,
        doc_count: docs,
        doc_length: DocLength::Fixed(60),
        fixed_theta: None,
        label_plan: None,
        seed,
    }
}

fn lda_config(k: usize, iterations: usize, seed: u64) -> LdaConfig {
    LdaConfig {
        k,
        alpha: 0.1,
        beta: 0.01,
        iterations,
        burn_in: iterations / 5,
        seed,
        ..LdaConfig::default()
    }
}

#[derive(Serialize)]
pub struct Recovery {
    pub planted: Vec<Vec<f64>>,
    /// Estimated topics, reordered to line up with `planted`.
    pub estimated: Vec<Vec<f64>>,
    pub mean_l1: f64,
}

pub fn recovery_report(k: usize, docs: usize, in_block: f64, iterations: usize, seed: u64) -> Result<Recovery> {
    let planted = block_topics(k, k * WORDS_PER_TOPIC, in_block);
    let s = generate_corpus(&spec(planted.clone(), docs, 0.1, seed))?;
    let model = lda::train_lda(&s.corpus, &lda_config(k, iterations, seed))?;
    let a = align_topics(model.phi(), &planted)?;
    let mut estimated = vec![Vec::new(); k];
    for (e, &p) in a.permutation.iter().enumerate() {
        estimated[p] = model.phi().row(e).to_vec();
    }
    Ok(Recovery {
        planted: planted.to_rows(),
        estimated,
        mean_l1: a.mean_l1,
    })
}

#[derive(Serialize)]
pub struct PerplexityPoint {
    pub k: usize,
    pub train: f64,
    pub heldout: f64,
}

pub fn perplexity_report(ks: &[usize], k_true: usize, iterations: usize, seed: u64) -> Result<Vec<PerplexityPoint>> {
    let planted = block_topics(k_true, k_true * WORDS_PER_TOPIC, 0.9);
    let train = generate_corpus(&spec(planted.clone(), 150, 0.1, seed))?;
    let heldout = generate_corpus(&spec(planted, 50, 0.1, seed.wrapping_add(1)))?;
    ks.iter()
        .map(|&k| {
            let model = lda::train_lda(&train.corpus, &lda_config(k, iterations, seed))?;
            Ok(PerplexityPoint {
                k,
                train: lda::training_perplexity(&model, &train.corpus)?,
                heldout: lda::perplexity(&model, &heldout.corpus, &InferConfig { seed, ..InferConfig::default() })?,
            })
        })
        .collect()
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub categories: Vec<CategoryRates>,
}

#[derive(Serialize)]
pub struct CategoryRates {
    pub category: Category,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// Trains PLDA once on a deliberately noisy labeled corpus, then scores the
/// held-out predictions at each threshold.
pub fn sweep_report(thresholds: &[f64], in_block: f64, seed: u64) -> Result<Vec<SweepPoint>> {
    let layout = build_layout(&rating_labels(), 2, 1)?;
    let labeled = |per_label: usize, seed: u64| {
        let plan = LabelPlan {
            labels: layout
                .labels()
                .iter()
                .enumerate()
                .map(|(i, name)| PlannedLabel {
                    name: name.clone(),
                    topics: layout.label_range(i),
                    doc_count: per_label,
                })
                .collect(),
            background: layout.background_topics(),
        };
        let phi = block_topics(layout.k(), layout.k() * WORDS_PER_TOPIC, in_block);
        generate_corpus(&GeneratorSpec {
            label_plan: Some(plan),
            ..spec(phi, 0, 0.5, seed)
        })
    };
    let train = labeled(10, seed)?;
    let test = labeled(5, seed.wrapping_add(1))?;
    let cfg = PldaConfig {
        iterations: 200,
        burn_in: 50,
        seed,
        ..PldaConfig::default()
    };
    let model = plda::train_plda(&train.corpus, &layout, &cfg)?;
    let theta = lda::infer_corpus(&model, &test.corpus, &InferConfig { seed, ..InferConfig::default() })?;
    let gold: LabelSets = test
        .corpus
        .documents()
        .iter()
        .zip(&test.label_sets)
        .map(|(d, s)| (d.id.clone(), s.clone()))
        .collect();
    thresholds
        .iter()
        .map(|&threshold| {
            let classify = ClassifyConfig {
                threshold,
                ..ClassifyConfig::default()
            };
            let mut predictions = LabelSets::new();
            for (doc, row) in test.corpus.documents().iter().zip(theta.iter_rows()) {
                predictions.insert(doc.id.clone(), predict_labels(row, &layout, &classify)?);
            }
            let report = metrics_report(&predictions, &gold, &Category::ALL, &LABEL_LEVELS)?;
            Ok(SweepPoint {
                threshold,
                categories: report
                    .categories
                    .iter()
                    .map(|c| CategoryRates {
                        category: c.category,
                        precision: c.precision,
                        recall: c.recall,
                    })
                    .collect(),
            })
        })
        .collect()
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

fn parse_list<T: std::str::FromStr>(text: &str) -> std::result::Result<Vec<T>, JsError> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| JsError::new(&format!("not a number: {s}"))))
        .collect()
}

#[wasm_bindgen]
pub fn recover_topics(k: usize, docs: usize, in_block: f64, iterations: usize, seed: u64) -> std::result::Result<String, JsError> {
    to_js(recovery_report(k, docs, in_block, iterations, seed))
}

/// `ks` is a comma-separated list of topic counts.
#[wasm_bindgen]
pub fn perplexity_curve(ks: &str, k_true: usize, iterations: usize, seed: u64) -> std::result::Result<String, JsError> {
    to_js(perplexity_report(&parse_list(ks)?, k_true, iterations, seed))
}

#[wasm_bindgen]
pub fn threshold_sweep(thresholds: &str, in_block: f64, seed: u64) -> std::result::Result<String, JsError> {
    to_js(sweep_report(&parse_list(thresholds)?, in_block, seed))
}
