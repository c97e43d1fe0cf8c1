//! Threshold classification of rating labels from topic mass, per-level
//! binary metrics, and the hyperparameter grid search around PLDA.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::annotations::{self, parse_label, AnnotationRecord, Category, LabelOptions};
use crate::corpus::{self, PreprocessConfig, RawDocument, StopWords};
use crate::error::{Error, Result};
use crate::lda::{self, InferConfig};
use crate::plda::{self, label_mass, LabelTopicLayout, PldaConfig};

/// Rating levels that carry a label; level 1 means no label.
pub const LABEL_LEVELS: [u8; 3] = [2, 3, 4];

pub type LabelSets = BTreeMap<String, BTreeSet<String>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub threshold: f64,
    /// Divide label masses by the non-background mass before thresholding.
    pub renormalize_without_background: bool,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            threshold: 0.05,
            renormalize_without_background: false,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} must lie strictly between 0 and 1",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Category labels whose mass reaches the threshold. `appropriate` and the
/// background never produce a prediction.
pub fn predict_labels(theta: &[f64], layout: &LabelTopicLayout, config: &ClassifyConfig) -> Result<BTreeSet<String>> {
    let mass = label_mass(theta, layout)?;
    let scale = if config.renormalize_without_background && mass.background < 1.0 {
        1.0 / (1.0 - mass.background)
    } else {
        1.0
    };
    Ok(mass
        .labels
        .into_iter()
        .filter(|(label, m)| parse_label(label).is_some() && m * scale >= config.threshold)
        .map(|(label, _)| label)
        .collect())
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Binary confusion counts and rates for one `category:level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub level: u8,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

impl LevelMetrics {
    pub fn from_counts(level: u8, tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        LevelMetrics {
            level,
            tp,
            fp,
            fn_,
            tn,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            // equals 2PR/(P+R) whenever that is defined
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Per-category rates, each the unweighted mean over the levels where the
/// rate is defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: Category,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    pub levels: Vec<LevelMetrics>,
    /// Rates left out of the average, as `metric@level`.
    pub undefined: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub documents: usize,
    pub categories: Vec<CategoryMetrics>,
}

impl MetricsReport {
    pub fn category(&self, category: Category) -> Option<&CategoryMetrics> {
        self.categories.iter().find(|c| c.category == category)
    }

    /// Mean of the defined per-category F1 scores.
    pub fn mean_f1(&self) -> Option<f64> {
        mean(self.categories.iter().filter_map(|c| c.f1))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn metrics_report(
    predictions: &LabelSets,
    gold: &LabelSets,
    categories: &[Category],
    levels: &[u8],
) -> Result<MetricsReport> {
    if let Some(id) = predictions.keys().find(|k| !gold.contains_key(*k)) {
        return Err(Error::DocumentSetMismatch(format!("{id:?} has no gold labels")));
    }
    if let Some(id) = gold.keys().find(|k| !predictions.contains_key(*k)) {
        return Err(Error::DocumentSetMismatch(format!("{id:?} has no prediction")));
    }
    let categories = categories
        .iter()
        .map(|&category| {
            let cells: Vec<LevelMetrics> = levels
                .iter()
                .map(|&level| {
                    let label = category.label(level);
                    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
                    for (id, gold_set) in gold {
                        match (gold_set.contains(&label), predictions[id].contains(&label)) {
                            (true, true) => tp += 1,
                            (false, true) => fp += 1,
                            (true, false) => fn_ += 1,
                            (false, false) => tn += 1,
                        }
                    }
                    LevelMetrics::from_counts(level, tp, fp, fn_, tn)
                })
                .collect();
            let mut undefined = Vec::new();
            let mut average = |name: &str, get: fn(&LevelMetrics) -> Option<f64>| {
                for c in &cells {
                    if get(c).is_none() {
                        undefined.push(format!("{name}@{}", c.level));
                    }
                }
                mean(cells.iter().filter_map(get))
            };
            let precision = average("precision", |c| c.precision);
            let recall = average("recall", |c| c.recall);
            let specificity = average("specificity", |c| c.specificity);
            let f1 = average("f1", |c| c.f1);
            CategoryMetrics {
                category,
                precision,
                recall,
                specificity,
                f1,
                levels: cells,
                undefined,
            }
        })
        .collect();
    Ok(MetricsReport {
        documents: gold.len(),
        categories,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_doc_freq: Vec<usize>,
    pub n_bg: Vec<usize>,
    pub n_label: Vec<usize>,
}

impl GridSpec {
    /// min-doc ∈ {1,5,10,15}, n-bg ∈ {0,1,5,10}, n-label ∈ {1,5,10}.
    pub fn standard() -> Self {
        GridSpec {
            min_doc_freq: vec![1, 5, 10, 15],
            n_bg: vec![0, 1, 5, 10],
            n_label: vec![1, 5, 10],
        }
    }

    /// Configurations in row order: min-doc outermost, n-label innermost.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &min_doc_freq in &self.min_doc_freq {
            for &n_bg in &self.n_bg {
                for &n_label in &self.n_label {
                    out.push(GridPoint {
                        min_doc_freq,
                        n_bg,
                        n_label,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub min_doc_freq: usize,
    pub n_bg: usize,
    pub n_label: usize,
}

/// Everything a grid configuration needs besides its coordinates.
#[derive(Clone, Debug)]
pub struct GridInputs<'a> {
    pub train: &'a [RawDocument],
    pub test: &'a [RawDocument],
    pub annotations: &'a [AnnotationRecord],
    pub stopwords: &'a StopWords,
    /// `min_doc_freq` is overridden per configuration.
    pub preprocess: PreprocessConfig,
    pub labels: Vec<String>,
    pub label_options: LabelOptions,
    /// `seed` is the base seed; configuration `i` uses `seed + i`.
    pub plda: PldaConfig,
    pub infer: InferConfig,
    pub classify: ClassifyConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub ordinal: usize,
    pub point: GridPoint,
    pub seed: u64,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
}

fn label_sets_for(annotations: &[AnnotationRecord], ids: &[&str], options: LabelOptions) -> Result<LabelSets> {
    let wanted: BTreeSet<&str> = ids.iter().copied().collect();
    let relevant: Vec<AnnotationRecord> = annotations
        .iter()
        .filter(|r| wanted.contains(r.doc_id()))
        .cloned()
        .collect();
    annotations::build_label_sets(&relevant, ids, options)
}

/// Trains and scores one configuration with an explicit seed.
pub fn run_grid_config(inputs: &GridInputs<'_>, point: GridPoint, seed: u64) -> Result<MetricsReport> {
    inputs.classify.validate()?;
    let preprocess = PreprocessConfig {
        min_doc_freq: point.min_doc_freq,
        ..inputs.preprocess.clone()
    };
    let train = corpus::build_corpus(inputs.train, &preprocess, inputs.stopwords)?;
    let train_ids: Vec<&str> = train.documents().iter().map(|d| d.id.as_str()).collect();
    let train_labels = label_sets_for(inputs.annotations, &train_ids, inputs.label_options)?;
    let train = train.with_labels(&train_labels);

    let layout = plda::build_layout(&inputs.labels, point.n_label, point.n_bg)?;
    let config = PldaConfig {
        seed,
        ..inputs.plda.clone()
    };
    let model = plda::train_plda(&train, &layout, &config)?;

    let test = corpus::encode_with_vocabulary(inputs.test, train.vocabulary(), &preprocess, inputs.stopwords)?;
    if test.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let infer = InferConfig {
        seed,
        ..inputs.infer.clone()
    };
    let theta = lda::infer_corpus(&model, &test, &infer)?;
    let mut predictions = LabelSets::new();
    for (doc, row) in test.documents().iter().zip(theta.iter_rows()) {
        predictions.insert(doc.id.clone(), predict_labels(row, &layout, &inputs.classify)?);
    }
    let test_ids: Vec<&str> = test.documents().iter().map(|d| d.id.as_str()).collect();
    let gold = label_sets_for(inputs.annotations, &test_ids, inputs.label_options)?;
    metrics_report(&predictions, &gold, &Category::ALL, &LABEL_LEVELS)
}

/// One row per configuration, in [`GridSpec::points`] order. A failing
/// configuration records its error and the rest still run.
pub fn grid_search(inputs: &GridInputs<'_>, grid: &GridSpec) -> Result<Vec<GridRow>> {
    if grid.min_doc_freq.is_empty() || grid.n_bg.is_empty() || grid.n_label.is_empty() {
        return Err(Error::InvalidConfig("every grid axis needs at least one value".into()));
    }
    inputs.classify.validate()?;
    let points = grid.points();
    let run = |(ordinal, point): (usize, GridPoint)| {
        let seed = inputs.plda.seed.wrapping_add(ordinal as u64);
        let (report, error) = match run_grid_config(inputs, point, seed) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        GridRow {
            ordinal,
            point,
            seed,
            report,
            error,
        }
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        points.into_par_iter().enumerate().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows = points.into_iter().enumerate().map(run).collect();
    Ok(rows)
}

/// The row with the highest mean F1; earlier rows win ties.
pub fn best_row(rows: &[GridRow]) -> Option<&GridRow> {
    rows.iter()
        .filter_map(|r| r.report.as_ref().and_then(MetricsReport::mean_f1).map(|f| (r, f)))
        .fold(None, |best: Option<(&GridRow, f64)>, (r, f)| match best {
            Some((_, bf)) if bf >= f => best,
            _ => Some((r, f)),
        })
        .map(|(r, _)| r)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Wide CSV, one row per configuration: the coordinates, then for each
/// category its averaged rates, then per-level confusion counts.
pub fn write_grid_csv<W: Write>(writer: W, rows: &[GridRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["ordinal", "min_doc_freq", "n_bg", "n_label", "seed", "error"]
        .map(String::from)
        .to_vec();
    for c in Category::ALL {
        for m in ["precision", "recall", "specificity", "f1"] {
            header.push(format!("{c}_{m}"));
        }
    }
    for c in Category::ALL {
        for l in LABEL_LEVELS {
            for m in ["tp", "fp", "fn", "tn"] {
                header.push(format!("{c}_{l}_{m}"));
            }
        }
    }
    out.write_record(&header)?;
    for row in rows {
        let mut record = vec![
            row.ordinal.to_string(),
            row.point.min_doc_freq.to_string(),
            row.point.n_bg.to_string(),
            row.point.n_label.to_string(),
            row.seed.to_string(),
            row.error.clone().unwrap_or_default(),
        ];
        let cats: Vec<Option<&CategoryMetrics>> = Category::ALL
            .iter()
            .map(|&c| row.report.as_ref().and_then(|r| r.category(c)))
            .collect();
        for c in &cats {
            record.push(cell(c.and_then(|c| c.precision)));
            record.push(cell(c.and_then(|c| c.recall)));
            record.push(cell(c.and_then(|c| c.specificity)));
            record.push(cell(c.and_then(|c| c.f1)));
        }
        for c in &cats {
            for l in LABEL_LEVELS {
                let m = c.and_then(|c| c.levels.iter().find(|m| m.level == l));
                for v in [m.map(|m| m.tp), m.map(|m| m.fp), m.map(|m| m.fn_), m.map(|m| m.tn)] {
                    record.push(v.map(|x| x.to_string()).unwrap_or_default());
                }
            }
        }
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}
