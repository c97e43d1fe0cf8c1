use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use topicrate::annotations::{
    self, agreement_report, build_label_sets, records_from_raw, AnnotationIndex, AnnotationRecord, Category,
    ConsensusMode, LabelOptions,
};
use topicrate::corpus::{self, build_corpus, encode_with_vocabulary, Corpus, PreprocessConfig, RawDocument, StopWords};
use topicrate::evaluation::{self, metrics_report, predict_labels, ClassifyConfig, GridInputs, GridSpec, LABEL_LEVELS};
use topicrate::lda::{self, Estimator, InferConfig, LdaConfig, TopicModel};
use topicrate::plda::{self, build_layout, label_mass, rating_labels, PldaConfig, APPROPRIATE};
use topicrate::regression::{self, rounded_level, weighted_abs_error, RegressionConfig};
use topicrate::synthgen::{self, block_topics, DocLength, GeneratorSpec, LabelPlan, PlannedLabel};

use crate::args::*;
use crate::output::{manifest_path, sibling, RunFiles};
use crate::{usage, CliError};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let log = |msg: &str| {
        if cli.verbose > 0 {
            eprintln!("{msg}");
        }
    };
    match &cli.command {
        Command::Preprocess(a) => preprocess(a, &cli.command, &log),
        Command::TrainLda(a) => train_lda(a, &cli.command, &log),
        Command::TrainPlda(a) => train_plda(a, &cli.command, &log),
        Command::Perplexity(a) => perplexity(a, &cli.command, &log),
        Command::Classify(a) => classify(a, &cli.command, &log),
        Command::GridSearch(a) => grid_search(a, &cli.command, &log),
        Command::Regress(a) => regress(a, &cli.command, &log),
        Command::Agreement(a) => agreement(a, &cli.command),
        Command::Synth(a) => synth(a, &cli.command, &log),
    }
}

fn check(ok: bool, flag: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(usage(flag, message))
    }
}

fn check_positive(value: f64, flag: &str) -> Result<()> {
    check(value > 0.0 && value.is_finite(), flag, "must be a positive number")
}

fn check_threshold(threshold: f64) -> Result<()> {
    check(threshold > 0.0 && threshold < 1.0, "threshold", "must lie strictly between 0 and 1")
}

fn estimator(thin: Option<usize>) -> Estimator {
    match thin {
        Some(thin) => Estimator::Averaged { thin },
        None => Estimator::FinalState,
    }
}

fn validate_sampler(s: &SamplerArgs) -> Result<()> {
    check_positive(s.alpha, "alpha")?;
    check_positive(s.beta, "beta")?;
    check(s.iters > s.burn_in, "iters", "must exceed --burn-in")?;
    check(s.thin != Some(0), "thin", "must be at least 1")
}

fn validate_infer(i: &InferArgs) -> Result<()> {
    check(i.infer_iters > i.infer_burn_in, "infer-iters", "must exceed --infer-burn-in")
}

fn lda_config(k: usize, s: &SamplerArgs) -> LdaConfig {
    LdaConfig {
        k,
        alpha: s.alpha,
        beta: s.beta,
        iterations: s.iters,
        burn_in: s.burn_in,
        seed: s.seed,
        estimator: estimator(s.thin),
    }
}

fn plda_config(s: &SamplerArgs) -> PldaConfig {
    PldaConfig {
        alpha: s.alpha,
        beta: s.beta,
        iterations: s.iters,
        burn_in: s.burn_in,
        seed: s.seed,
        estimator: estimator(s.thin),
    }
}

fn infer_config(i: &InferArgs, seed: u64) -> InferConfig {
    InferConfig {
        iterations: i.infer_iters,
        burn_in: i.infer_burn_in,
        seed,
        estimator: Estimator::FinalState,
    }
}

fn label_options(a: &LabelArgs) -> LabelOptions {
    LabelOptions {
        mode: match a.consensus {
            Consensus::Median => ConsensusMode::Median,
            Consensus::Union => ConsensusMode::Union,
        },
        appropriate_on_all: a.appropriate_on_all,
    }
}

fn stopwords(files: &mut RunFiles, path: &Option<PathBuf>) -> Result<StopWords> {
    match path {
        None => Ok(StopWords::english()),
        Some(p) => {
            let text = files.read_string(p)?;
            let id = format!("file-{}", &crate::output::sha256_hex(text.as_bytes())[..12]);
            Ok(StopWords::parse(id, &text))
        }
    }
}

fn read_raw(files: &mut RunFiles, path: &Path) -> Result<Vec<RawDocument>> {
    let bytes = files.read(path)?;
    Ok(corpus::read_jsonl(bytes.as_slice())?)
}

fn read_corpus(files: &mut RunFiles, path: &Path) -> Result<Corpus> {
    Ok(Corpus::from_json(&files.read_string(path)?)?)
}

fn read_model(files: &mut RunFiles, path: &Path) -> Result<TopicModel> {
    Ok(TopicModel::from_bytes(&files.read(path)?)?)
}

/// Annotation records from the CSV when given, else from inline ratings.
fn annotation_records(
    files: &mut RunFiles,
    path: &Option<PathBuf>,
    raw: &[&[RawDocument]],
) -> Result<Vec<AnnotationRecord>> {
    match path {
        Some(p) => Ok(annotations::read_annotations_csv(files.read(p)?.as_slice())?),
        None => {
            let mut out = Vec::new();
            for docs in raw {
                out.extend(records_from_raw(docs)?);
            }
            Ok(out)
        }
    }
}

/// Label sets for `docs`: explicit `labels` win, otherwise the sets are
/// derived from annotations. Returns `None` when neither source exists.
fn derive_label_sets(
    docs: &[RawDocument],
    records: &[AnnotationRecord],
    options: LabelOptions,
) -> Result<Option<BTreeMap<String, BTreeSet<String>>>> {
    let explicit = docs.iter().any(|d| d.labels.is_some());
    if !explicit && records.is_empty() {
        return Ok(None);
    }
    let ids: BTreeSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let relevant: Vec<AnnotationRecord> = records.iter().filter(|r| ids.contains(r.doc_id())).cloned().collect();
    let id_list: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let mut sets = build_label_sets(&relevant, &id_list, options)?;
    for d in docs {
        if let Some(labels) = &d.labels {
            sets.insert(d.id.clone(), labels.iter().cloned().collect());
        }
    }
    Ok(Some(sets))
}

fn read_labels_file(files: &mut RunFiles, path: &Option<PathBuf>) -> Result<Vec<String>> {
    match path {
        None => Ok(rating_labels()),
        Some(p) => Ok(files
            .read_string(p)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect()),
    }
}

fn write_model(files: &mut RunFiles, path: &Path, model: &TopicModel) -> Result<()> {
    let gzip = path.extension().is_some_and(|e| e == "gz");
    files.write(path, &model.to_bytes(gzip)?)
}

fn write_theta(files: &mut RunFiles, path: &Option<PathBuf>, model: &TopicModel) -> Result<()> {
    if let (Some(path), Some(dt)) = (path, model.doc_theta()) {
        let mut buf = Vec::new();
        lda::write_theta_csv(&mut buf, &dt.ids, &dt.theta)?;
        files.write(path, &buf)?;
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn preprocess(a: &PreprocessArgs, command: &Command, log: &dyn Fn(&str)) -> Result<()> {
    check(a.min_doc_freq >= 1, "min-doc-freq", "must be at least 1")?;
    check(a.min_doc_len >= 1, "min-doc-len", "must be at least 1")?;
    let mut files = RunFiles::default();
    let stop = stopwords(&mut files, &a.stopwords)?;
    let mut raw = read_raw(&mut files, &a.input)?;
    let records = annotation_records(&mut files, &a.labels.annotations_file, &[&raw])?;
    if let Some(sets) = derive_label_sets(&raw, &records, label_options(&a.labels))? {
        for doc in &mut raw {
            doc.labels = Some(sets[&doc.id].iter().cloned().collect());
        }
    }
    let config = PreprocessConfig {
        stopword_list: stop.id().to_string(),
        min_doc_freq: a.min_doc_freq,
        min_doc_len: a.min_doc_len,
        language_filter: !a.no_language_filter,
    };
    let corpus = build_corpus(&raw, &config, &stop)?;
    log(&format!(
        "kept {} of {} documents, vocabulary {}",
        corpus.len(),
        raw.len(),
        corpus.vocab_size()
    ));
    files.write(&a.output, corpus.to_json()?.as_bytes())?;
    files.finish(&manifest_path(&a.output), command)
}

fn train_lda(a: &TrainLdaArgs, command: &Command, log: &dyn Fn(&str)) -> Result<()> {
    check(a.k >= 1, "k", "must be at least 1")?;
    validate_sampler(&a.sampler)?;
    let mut files = RunFiles::default();
    let corpus = read_corpus(&mut files, &a.input)?;
    log(&format!("training LDA with K={} on {} documents", a.k, corpus.len()));
    let model = lda::train_lda(&corpus, &lda_config(a.k, &a.sampler))?;
    write_model(&mut files, &a.output, &model)?;
    write_theta(&mut files, &a.theta_output, &model)?;
    files.finish(&manifest_path(&a.output), command)
}

fn train_plda(a: &TrainPldaArgs, command: &Command, log: &dyn Fn(&str)) -> Result<()> {
    check(a.n_label >= 1, "n-label", "must be at least 1")?;
    validate_sampler(&a.sampler)?;
    let mut files = RunFiles::default();
    let labels = read_labels_file(&mut files, &a.labels_file)?;
    let layout = build_layout(&labels, a.n_label, a.n_bg).map_err(|e| usage("labels-file", e))?;
    let corpus = read_corpus(&mut files, &a.input)?;
    // Unlabeled documents count as appropriate when the layout has that label.
    let has_appropriate = layout.label_index(APPROPRIATE).is_some();
    let sets: BTreeMap<String, BTreeSet<String>> = corpus
        .documents()
        .iter()
        .filter_map(|d| match &d.labels {
            Some(l) => Some((d.id.clone(), l.clone())),
            None if has_appropriate => Some((d.id.clone(), BTreeSet::from([APPROPRIATE.to_string()]))),
            None => None,
        })
        .collect();
    let corpus = corpus.with_labels(&sets);
    log(&format!("training PLDA with K={} on {} documents", layout.k(), corpus.len()));
    let model = plda::train_plda(&corpus, &layout, &plda_config(&a.sampler))?;
    write_model(&mut files, &a.output, &model)?;
    write_theta(&mut files, &a.theta_output, &model)?;
    files.finish(&manifest_path(&a.output), command)
}

fn perplexity(a: &PerplexityArgs, command: &Command, log: &dyn Fn(&str)) -> Result<()> {
    check(!a.k.is_empty() && a.k.iter().all(|&k| k >= 1), "k", "needs topic counts of at least 1")?;
    check(a.heldout.is_some() || a.heldout_every >= 2, "heldout-every", "must be at least 2")?;
    validate_sampler(&a.sampler)?;
    validate_infer(&a.infer)?;
    let mut files = RunFiles::default();
    let corpus = read_corpus(&mut files, &a.input)?;
    let (train, heldout) = match &a.heldout {
        Some(path) => {
            let stop = stopwords(&mut files, &a.stopwords)?;
            let raw = read_raw(&mut files, path)?;
            let heldout = encode_with_vocabulary(&raw, corpus.vocabulary(), corpus.config(), &stop)?;
            (corpus, heldout)
        }
        None => {
            let n = a.heldout_every;
            let train = corpus.filter_documents(|i, _| i % n != n - 1);
            let heldout = corpus.filter_documents(|i, _| i % n == n - 1);
            (train, heldout)
        }
    };
    if train.is_empty() || heldout.is_empty() {
        return Err(CliError::Runtime("training or held-out split is empty".into()));
    }
    let mut csv = String::from("k,train_perplexity,heldout_perplexity\n");
    for &k in &a.k {
        log(&format!("K={k}"));
        let model = lda::train_lda(&train, &lda_config(k, &a.sampler))?;
        let train_p = lda::training_perplexity(&model, &train)?;
        let heldout_p = lda::perplexity(&model, &heldout, &infer_config(&a.infer, a.sampler.seed))?;
        csv.push_str(&format!("{k},{train_p},{heldout_p}\n"));
    }
    files.write(&a.output, csv.as_bytes())?;
    files.finish(&manifest_path(&a.output), command)
}

#[derive(Serialize)]
struct Prediction {
    id: String,
    labels: Vec<String>,
    mass: BTreeMap<String, f64>,
}

fn classify(a: &ClassifyArgs, command: &Command, log: &dyn Fn(&str)) -> Result<()> {
    check_threshold(a.threshold)?;
    check(a.min_doc_len >= 1, "min-doc-len", "must be at least 1")?;
    validate_infer(&a.infer)?;
    let mut files = RunFiles::default();
    let model = read_model(&mut files, &a.model)?;
    let layout = model
        .layout()
        .cloned()
        .ok_or_else(|| usage("model", "has no label layout; train it with train-plda"))?;
    let stop = stopwords(&mut files, &a.stopwords)?;
    let raw = read_raw(&mut files, &a.input)?;
    let config = PreprocessConfig {
        stopword_list: stop.id().to_string(),
        min_doc_freq: 1,
        min_doc_len: a.min_doc_len,
        language_filter: false,
    };
    let docs = encode_with_vocabulary(&raw, model.vocabulary(), &config, &stop)?;
    log(&format!("classifying {} documents", docs.len()));
    let theta = lda::infer_corpus(&model, &docs, &infer_config(&a.infer, a.seed))?;
    let classify = ClassifyConfig {
        threshold: a.threshold,
        renormalize_without_background: a.renormalize,
    };
    let mut predictions = Vec::with_capacity(docs.len());
    for (doc, row) in docs.documents().iter().zip(theta.iter_rows()) {
        let labels = predict_labels(row, &layout, &classify)?;
        let mass = label_mass(row, &layout)?;
        let mut masses: BTreeMap<String, f64> = mass.labels.into_iter().collect();
        masses.insert(plda::BACKGROUND.to_string(), mass.background);
        predictions.push(Prediction {
            id: doc.id.clone(),
            labels: labels.into_iter().collect(),
            mass: masses,
        });
    }
    let bytes = match a.format {
        Format::Json => json_bytes(&predictions)?,
        Format::Csv => {
            let mut out = String::from("doc_id,labels");
            for l in layout.labels() {
                out.push_str(&format!(",mass_{l}"));
            }
            out.push_str(",mass_background\n");
            for p in &predictions {
                out.push_str(&format!("{},{}", p.id, p.labels.join(";")));
                for l in layout.labels() {
                    out.push_str(&format!(",{}", p.mass[l]));
                }
                out.push_str(&format!(",{}\n", p.mass[plda::BACKGROUND]));
            }
            out.into_bytes()
        }
    };
    files.write(&a.output, &bytes)?;

    if let Some(path) = &a.metrics_output {
        let kept: BTreeSet<&str> = docs.documents().iter().map(|d| d.id.as_str()).collect();
        let kept_raw: Vec<RawDocument> = raw.iter().filter(|r| kept.contains(r.id.as_str())).cloned().collect();
        let records = annotation_records(&mut files, &a.labels.annotations_file, &[&kept_raw])?;
        let gold = derive_label_sets(&kept_raw, &records, label_options(&a.labels))?
            .ok_or_else(|| usage("metrics-output", "needs gold labels, ratings or --annotations-file"))?;
        let predicted: evaluation::LabelSets = predictions
            .iter()
            .map(|p| (p.id.clone(), p.labels.iter().cloned().collect()))
            .collect();
        let report = metrics_report(&predicted, &gold, &Category::ALL, &LABEL_LEVELS)?;
        files.write(path, &json_bytes(&report)?)?;
    }
    files.finish(&manifest_path(&a.output), command)
}

fn grid_search(a: &GridSearchArgs, command: &Command, log: &dyn Fn(&str)) -> Result<()> {
    check(
        !a.grid_min_doc.is_empty() && a.grid_min_doc.iter().all(|&m| m >= 1),
        "grid-min-doc",
        "needs values of at least 1",
    )?;
    check(!a.grid_n_bg.is_empty(), "grid-n-bg", "needs at least one value")?;
    check(
        !a.grid_n_label.is_empty() && a.grid_n_label.iter().all(|&n| n >= 1),
        "grid-n-label",
        "needs values of at least 1",
    )?;
    check(a.min_doc_len >= 1, "min-doc-len", "must be at least 1")?;
    check_threshold(a.threshold)?;
    validate_sampler(&a.sampler)?;
    validate_infer(&a.infer)?;
    let mut files = RunFiles::default();
    let labels = read_labels_file(&mut files, &a.labels_file)?;
    build_layout(&labels, 1, 0).map_err(|e| usage("labels-file", e))?;
    let stop = stopwords(&mut files, &a.stopwords)?;
    let train = read_raw(&mut files, &a.input)?;
    let test = read_raw(&mut files, &a.test)?;
    let records = annotation_records(&mut files, &a.labels.annotations_file, &[&train, &test])?;
    let inputs = GridInputs {
        train: &train,
        test: &test,
        annotations: &records,
        stopwords: &stop,
        preprocess: PreprocessConfig {
            stopword_list: stop.id().to_string(),
            min_doc_freq: 1,
            min_doc_len: a.min_doc_len,
            language_filter: !a.no_language_filter,
        },
        labels,
        label_options: label_options(&a.labels),
        plda: plda_config(&a.sampler),
        infer: infer_config(&a.infer, a.sampler.seed),
        classify: ClassifyConfig {
            threshold: a.threshold,
            renormalize_without_background: a.renormalize,
        },
    };
    let grid = GridSpec {
        min_doc_freq: a.grid_min_doc.clone(),
        n_bg: a.grid_n_bg.clone(),
        n_label: a.grid_n_label.clone(),
    };
    log(&format!("running {} configurations", grid.points().len()));
    let rows = evaluation::grid_search(&inputs, &grid)?;
    let bytes = match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            evaluation::write_grid_csv(&mut buf, &rows)?;
            buf
        }
        Format::Json => json_bytes(&rows)?,
    };
    files.write(&a.output, &bytes)?;
    files.finish(&manifest_path(&a.output), command)
}

fn regress(a: &RegressArgs, command: &Command, log: &dyn Fn(&str)) -> Result<()> {
    let config = RegressionConfig {
        epsilon: a.epsilon,
        l2: a.l2,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        decay: a.decay,
        seed: a.seed,
    };
    check(a.epsilon >= 0.0, "epsilon", "must not be negative")?;
    check(a.l2 >= 0.0, "l2", "must not be negative")?;
    check(a.epochs >= 1, "epochs", "must be at least 1")?;
    check_positive(a.learning_rate, "learning-rate")?;
    check(a.decay >= 0.0, "decay", "must not be negative")?;
    check(a.min_doc_len >= 1, "min-doc-len", "must be at least 1")?;
    validate_infer(&a.infer)?;
    let mut files = RunFiles::default();
    let model = read_model(&mut files, &a.model)?;
    let stop = stopwords(&mut files, &a.stopwords)?;
    let train_raw = read_raw(&mut files, &a.input)?;
    let test_raw = match &a.test {
        Some(p) => Some(read_raw(&mut files, p)?),
        None => None,
    };
    // An annotation file covers both sets; inline ratings are indexed per
    // set so train and test may reuse document ids.
    let train_records = annotation_records(&mut files, &a.annotations_file, &[&train_raw])?;
    let train_index = AnnotationIndex::new(&train_records)?;
    let test_index = match (&test_raw, &a.annotations_file) {
        (Some(raw), None) => AnnotationIndex::new(&records_from_raw(raw)?)?,
        _ => train_index.clone(),
    };

    let pre = PreprocessConfig {
        stopword_list: stop.id().to_string(),
        min_doc_freq: 1,
        min_doc_len: a.min_doc_len,
        language_filter: false,
    };
    let infer = infer_config(&a.infer, a.seed);
    let encode_and_infer = |raw: &[RawDocument]| -> Result<(Vec<String>, Vec<Vec<f64>>)> {
        let docs = encode_with_vocabulary(raw, model.vocabulary(), &pre, &stop)?;
        let theta = lda::infer_corpus(&model, &docs, &infer)?;
        Ok((docs.documents().iter().map(|d| d.id.clone()).collect(), theta.to_rows()))
    };
    let (train_ids, train_theta) = encode_and_infer(&train_raw)?;
    let (test_ids, test_theta) = match &test_raw {
        Some(raw) => encode_and_infer(raw)?,
        None => (train_ids.clone(), train_theta.clone()),
    };

    let mut rows = Vec::new();
    for category in Category::ALL {
        log(&format!("fitting {category}"));
        let targets: Vec<f64> = train_ids.iter().map(|id| train_index.average_rating(id, category)).collect();
        let reg = regression::train_regressor(&train_theta, &targets, Some(category), &config)?;
        let predictions = test_theta
            .iter()
            .map(|t| regression::predict_rating(&reg, t))
            .collect::<topicrate::Result<Vec<f64>>>()?;
        let test_targets: Vec<f64> = test_ids.iter().map(|id| test_index.average_rating(id, category)).collect();
        let report = weighted_abs_error(&predictions, &test_targets, rounded_level)?;
        files.write(&a.output.join(format!("{category}.model.json")), &json_bytes(&reg)?)?;
        rows.push((category, model.k(), report));
    }
    let mut csv = Vec::new();
    regression::write_error_csv(&mut csv, &rows)?;
    files.write(&a.output.join("errors.csv"), &csv)?;
    files.finish(&a.output.join("manifest.json"), command)
}

fn agreement(a: &AgreementArgs, command: &Command) -> Result<()> {
    let mut files = RunFiles::default();
    let records = match (&a.annotations_file, &a.input) {
        (Some(p), _) => annotations::read_annotations_csv(files.read(p)?.as_slice())?,
        (None, Some(p)) => records_from_raw(&read_raw(&mut files, p)?)?,
        (None, None) => return Err(usage("annotations-file", "or --input is required")),
    };
    AnnotationIndex::new(&records)?;
    files.write(&a.output, &json_bytes(&agreement_report(&records))?)?;
    files.finish(&manifest_path(&a.output), command)
}

fn synth(a: &SynthArgs, command: &Command, log: &dyn Fn(&str)) -> Result<()> {
    check(a.docs >= 1, "docs", "must be at least 1")?;
    check(a.doc_len >= 1, "doc-len", "must be at least 1")?;
    check(a.doc_len_max.is_none_or(|m| m >= a.doc_len), "doc-len-max", "must be at least --doc-len")?;
    check_positive(a.alpha, "alpha")?;
    check((0.0..=1.0).contains(&a.in_block), "in-block", "must lie in [0, 1]")?;
    let (k, label_plan) = if a.labeled {
        check(a.n_label >= 1, "n-label", "must be at least 1")?;
        let layout = build_layout(&rating_labels(), a.n_label, a.n_bg).map_err(|e| usage("n-label", e))?;
        let plan = LabelPlan {
            labels: layout
                .labels()
                .iter()
                .enumerate()
                .map(|(i, name)| PlannedLabel {
                    name: name.clone(),
                    topics: layout.label_range(i),
                    doc_count: a.docs,
                })
                .collect(),
            background: layout.background_topics(),
        };
        (layout.k(), Some(plan))
    } else {
        check(a.k >= 1, "k", "must be at least 1")?;
        (a.k, None)
    };
    check(a.vocab_size >= k, "vocab-size", "must be at least the planted topic count")?;
    let spec = GeneratorSpec {
        planted_phi: block_topics(k, a.vocab_size, a.in_block),
        alpha: a.alpha,
        doc_count: a.docs,
        doc_length: match a.doc_len_max {
            Some(max) => DocLength::Uniform { min: a.doc_len, max },
            None => DocLength::Fixed(a.doc_len),
        },
        fixed_theta: None,
        label_plan,
        seed: a.seed,
    };
    let generated = synthgen::generate_corpus(&spec)?;
    log(&format!("generated {} documents over {} topics", generated.raw.len(), k));
    let mut jsonl = Vec::new();
    corpus::write_jsonl(&mut jsonl, &generated.raw)?;
    let mut files = RunFiles::default();
    files.write(&a.output, &jsonl)?;
    files.write(&sibling(&a.output, ".truth.json"), &json_bytes(&generated.truth(&spec))?)?;
    files.finish(&manifest_path(&a.output), command)
}
