//! Crowd ratings: label sets for PLDA, regression targets and
//! inter-annotator agreement.
//!
//! Each annotated document is rated by three annotators per category on a
//! four-point scale: 1 None, 2 PG, 3 Mature, 4 Adult.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::RawDocument;
use crate::error::{Error, Result};
use crate::plda::APPROPRIATE;

pub const RATERS: usize = 3;
pub const MIN_LEVEL: u8 = 1;
pub const MAX_LEVEL: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Sex,
    Drugs,
    Violence,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Sex, Category::Drugs, Category::Violence];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Sex => "sex",
            Category::Drugs => "drugs",
            Category::Violence => "violence",
        }
    }

    /// The PLDA label for this category at `level`, e.g. `sex:3`.
    pub fn label(self, level: u8) -> String {
        format!("{}:{level}", self.as_str())
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sex" => Ok(Category::Sex),
            "drugs" | "substance" | "substance_abuse" => Ok(Category::Drugs),
            "violence" => Ok(Category::Violence),
            other => Err(Error::MalformedAnnotation(format!("unknown category {other:?}"))),
        }
    }
}

/// Splits `category:level` into its parts; anything else is `None`.
pub fn parse_label(label: &str) -> Option<(Category, u8)> {
    let (cat, level) = label.split_once(':')?;
    let category = cat.parse().ok()?;
    let level: u8 = level.parse().ok()?;
    (MIN_LEVEL..=MAX_LEVEL).contains(&level).then_some((category, level))
}

/// Three annotators' levels for one document and category.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    doc_id: String,
    category: Category,
    ratings: [u8; RATERS],
}

impl AnnotationRecord {
    pub fn new(doc_id: impl Into<String>, category: Category, ratings: [i64; RATERS]) -> Result<Self> {
        let doc_id = doc_id.into();
        let mut levels = [0u8; RATERS];
        for (slot, &r) in levels.iter_mut().zip(&ratings) {
            if !(MIN_LEVEL as i64..=MAX_LEVEL as i64).contains(&r) {
                return Err(Error::MalformedAnnotation(format!(
                    "{doc_id}/{category}: rating {r} outside 1..=4"
                )));
            }
            *slot = r as u8;
        }
        Ok(AnnotationRecord {
            doc_id,
            category,
            ratings: levels,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn ratings(&self) -> [u8; RATERS] {
        self.ratings
    }

    pub fn mean(&self) -> f64 {
        self.ratings.iter().map(|&r| r as f64).sum::<f64>() / RATERS as f64
    }

    /// Median level, rounded half-up.
    pub fn consensus(&self) -> u8 {
        median_half_up(&self.ratings)
    }
}

fn median_half_up(values: &[u8]) -> u8 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        ((v[n / 2 - 1] as u16 + v[n / 2] as u16 + 1) / 2) as u8
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    doc_id: String,
    category: String,
    r1: i64,
    r2: i64,
    r3: i64,
}

/// Reads `doc_id,category,r1,r2,r3` rows (with header).
pub fn read_annotations_csv<R: Read>(reader: R) -> Result<Vec<AnnotationRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        out.push(AnnotationRecord::new(row.doc_id, row.category.parse()?, [row.r1, row.r2, row.r3])?);
    }
    Ok(out)
}

pub fn write_annotations_csv<W: Write>(writer: W, records: &[AnnotationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        let [r1, r2, r3] = r.ratings.map(i64::from);
        w.serialize(CsvRow {
            doc_id: r.doc_id.clone(),
            category: r.category.as_str().to_string(),
            r1,
            r2,
            r3,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Collects the `ratings` carried inline by ingest documents.
pub fn records_from_raw(raw: &[RawDocument]) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for doc in raw {
        for (cat, ratings) in doc.ratings.iter().flatten() {
            let ratings: [i64; RATERS] = ratings.as_slice().try_into().map_err(|_| {
                Error::MalformedAnnotation(format!(
                    "{}/{cat}: expected {RATERS} ratings, found {}",
                    doc.id,
                    ratings.len()
                ))
            })?;
            out.push(AnnotationRecord::new(doc.id.clone(), cat.parse()?, ratings)?);
        }
    }
    Ok(out)
}

/// Annotations keyed by document and category.
#[derive(Clone, Debug, Default)]
pub struct AnnotationIndex {
    by_key: HashMap<(String, Category), AnnotationRecord>,
}

impl AnnotationIndex {
    pub fn new(records: &[AnnotationRecord]) -> Result<Self> {
        let mut by_key = HashMap::with_capacity(records.len());
        for r in records {
            if by_key.insert((r.doc_id.clone(), r.category), r.clone()).is_some() {
                return Err(Error::MalformedAnnotation(format!(
                    "{}/{} annotated twice",
                    r.doc_id, r.category
                )));
            }
        }
        Ok(AnnotationIndex { by_key })
    }

    pub fn get(&self, doc_id: &str, category: Category) -> Option<&AnnotationRecord> {
        self.by_key.get(&(doc_id.to_string(), category))
    }

    /// Mean of the three ratings; an unannotated category counts as None (1.0).
    pub fn average_rating(&self, doc_id: &str, category: Category) -> f64 {
        self.get(doc_id, category).map_or(1.0, AnnotationRecord::mean)
    }
}

pub fn average_rating(annotations: &[AnnotationRecord], doc_id: &str, category: Category) -> f64 {
    annotations
        .iter()
        .find(|r| r.doc_id == doc_id && r.category == category)
        .map_or(1.0, AnnotationRecord::mean)
}

/// How three annotators' levels become document labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusMode {
    /// One label at the median level, when that median is at least 2.
    #[default]
    Median,
    /// A label for every level of 2 or more that any annotator gave.
    Union,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelOptions {
    pub mode: ConsensusMode,
    /// Attach `appropriate` to every document rather than only the unflagged.
    pub appropriate_on_all: bool,
}

/// Label set for every document in `doc_ids`.
pub fn build_label_sets<S: AsRef<str>>(
    annotations: &[AnnotationRecord],
    doc_ids: &[S],
    options: LabelOptions,
) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut sets: BTreeMap<String, BTreeSet<String>> = doc_ids
        .iter()
        .map(|id| (id.as_ref().to_string(), BTreeSet::new()))
        .collect();
    for record in annotations {
        let set = sets.get_mut(&record.doc_id).ok_or_else(|| {
            Error::MalformedAnnotation(format!("annotation for unknown document {:?}", record.doc_id))
        })?;
        match options.mode {
            ConsensusMode::Median => {
                let level = record.consensus();
                if level >= 2 {
                    set.insert(record.category.label(level));
                }
            }
            ConsensusMode::Union => {
                for &level in record.ratings.iter().filter(|&&l| l >= 2) {
                    set.insert(record.category.label(level));
                }
            }
        }
    }
    for set in sets.values_mut() {
        if set.is_empty() || options.appropriate_on_all {
            set.insert(APPROPRIATE.to_string());
        }
    }
    Ok(sets)
}

/// Fleiss' κ from per-item category counts.
///
/// Each entry of `items` counts how many of the `raters` put that item in
/// each category. κ is undefined when every rating falls in one category.
pub fn fleiss_kappa(items: &[Vec<usize>], raters: usize) -> Result<f64> {
    if raters < 2 {
        return Err(Error::InvalidConfig("Fleiss' kappa needs at least two raters".into()));
    }
    let first = items.first().ok_or(Error::EmptyInput)?;
    let categories = first.len();
    let mut totals = vec![0usize; categories];
    let mut agreement = 0.0;
    let r = raters as f64;
    for (i, counts) in items.iter().enumerate() {
        if counts.len() != categories {
            return Err(Error::DimensionMismatch {
                expected: categories,
                found: counts.len(),
            });
        }
        if counts.iter().sum::<usize>() != raters {
            return Err(Error::InvalidConfig(format!("item {i} does not have {raters} ratings")));
        }
        let sq: usize = counts.iter().map(|c| c * c).sum();
        agreement += (sq as f64 - r) / (r * (r - 1.0));
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let n = items.len() as f64;
    let p_bar = agreement / n;
    let p_e: f64 = totals
        .iter()
        .map(|&t| {
            let p = t as f64 / (n * r);
            p * p
        })
        .sum();
    if totals.iter().filter(|&&t| t > 0).count() <= 1 {
        return Err(Error::DegenerateAgreement);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Category-count vectors over levels 1–4 for one category's records.
pub fn level_counts(records: &[&AnnotationRecord]) -> Vec<Vec<usize>> {
    records
        .iter()
        .map(|r| {
            let mut counts = vec![0; MAX_LEVEL as usize];
            for &l in &r.ratings {
                counts[(l - 1) as usize] += 1;
            }
            counts
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pairs compared by [`pearson_pairwise`], in output order.
pub const ANNOTATOR_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Pearson's ρ for each annotator pair. The outer error covers unequal or
/// too-short inputs; each pair may independently have zero variance.
pub fn pearson_pairwise(ratings: [&[f64]; RATERS]) -> Result<[Result<f64>; 3]> {
    let n = ratings[0].len();
    if let Some(bad) = ratings.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    if n < 2 {
        return Err(Error::EmptyInput);
    }
    Ok(ANNOTATOR_PAIRS.map(|(a, b)| pearson(ratings[a], ratings[b])))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairAgreement {
    pub annotators: (usize, usize),
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryAgreement {
    pub category: Category,
    pub items: usize,
    pub fleiss_kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_error: Option<String>,
    pub pearson: Vec<PairAgreement>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport {
    pub categories: Vec<CategoryAgreement>,
}

/// κ and pairwise ρ for each category, over the records annotated in it.
pub fn agreement_report(records: &[AnnotationRecord]) -> AgreementReport {
    let categories = Category::ALL
        .iter()
        .map(|&category| {
            let subset: Vec<&AnnotationRecord> = records.iter().filter(|r| r.category == category).collect();
            let (fleiss_kappa, kappa_error) = match fleiss_kappa(&level_counts(&subset), RATERS) {
                Ok(k) => (Some(k), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let columns: Vec<Vec<f64>> = (0..RATERS)
                .map(|j| subset.iter().map(|r| r.ratings[j] as f64).collect())
                .collect();
            let pearson = match pearson_pairwise([&columns[0], &columns[1], &columns[2]]) {
                Ok(pairs) => ANNOTATOR_PAIRS
                    .iter()
                    .zip(pairs)
                    .map(|(&annotators, rho)| match rho {
                        Ok(rho) => PairAgreement {
                            annotators,
                            rho: Some(rho),
                            error: None,
                        },
                        Err(e) => PairAgreement {
                            annotators,
                            rho: None,
                            error: Some(e.to_string()),
                        },
                    })
                    .collect(),
                Err(e) => ANNOTATOR_PAIRS
                    .iter()
                    .map(|&annotators| PairAgreement {
                        annotators,
                        rho: None,
                        error: Some(e.to_string()),
                    })
                    .collect(),
            };
            CategoryAgreement {
                category,
                items: subset.len(),
                fleiss_kappa,
                kappa_error,
                pearson,
            }
        })
        .collect();
    AgreementReport { categories }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(doc: &str, category: Category, r: [i64; 3]) -> AnnotationRecord {
        AnnotationRecord::new(doc, category, r).unwrap()
    }

    #[test]
    fn out_of_range_rating_is_malformed() {
        assert!(matches!(
            AnnotationRecord::new("d", Category::Sex, [1, 5, 2]),
            Err(Error::MalformedAnnotation(_))
        ));
        assert!(AnnotationRecord::new("d", Category::Sex, [0, 1, 2]).is_err());
    }

    #[test]
    fn label_parsing() {
        assert_eq!(parse_label("violence:3"), Some((Category::Violence, 3)));
        assert_eq!(parse_label("appropriate"), None);
        assert_eq!(parse_label("sex:9"), None);
        assert_eq!(Category::Drugs.label(4), "drugs:4");
    }

    #[test]
    fn label_set_examples() {
        let ann = vec![
            rec("a", Category::Sex, [3, 3, 3]),
            rec("b", Category::Sex, [2, 3, 4]),
            rec("b", Category::Violence, [1, 1, 2]),
            rec("b", Category::Drugs, [1, 1, 1]),
        ];
        let sets = build_label_sets(&ann, &["a", "b", "c"], LabelOptions::default()).unwrap();
        assert_eq!(sets["a"], BTreeSet::from(["sex:3".to_string()]));
        assert_eq!(sets["b"], BTreeSet::from(["sex:3".to_string()]));
        assert_eq!(sets["c"], BTreeSet::from([APPROPRIATE.to_string()]));
    }

    #[test]
    fn union_mode_and_appropriate_flag() {
        let ann = vec![rec("a", Category::Sex, [1, 2, 4])];
        let union = LabelOptions {
            mode: ConsensusMode::Union,
            appropriate_on_all: false,
        };
        let sets = build_label_sets(&ann, &["a"], union).unwrap();
        assert_eq!(sets["a"], BTreeSet::from(["sex:2".to_string(), "sex:4".to_string()]));

        let all = LabelOptions {
            appropriate_on_all: true,
            ..LabelOptions::default()
        };
        let sets = build_label_sets(&ann, &["a"], all).unwrap();
        assert_eq!(sets["a"], BTreeSet::from(["appropriate".to_string(), "sex:2".to_string()]));
    }

    #[test]
    fn unknown_document_rejected() {
        let ann = vec![rec("zzz", Category::Sex, [1, 1, 1])];
        assert!(build_label_sets(&ann, &["a"], LabelOptions::default()).is_err());
    }

    #[test]
    fn duplicate_annotation_rejected() {
        let ann = vec![rec("a", Category::Sex, [1, 1, 1]), rec("a", Category::Sex, [2, 2, 2])];
        assert!(AnnotationIndex::new(&ann).is_err());
    }

    #[test]
    fn average_ratings() {
        let ann = vec![rec("a", Category::Sex, [1, 1, 1]), rec("b", Category::Sex, [2, 3, 4])];
        assert_eq!(average_rating(&ann, "a", Category::Sex), 1.0);
        assert_eq!(average_rating(&ann, "b", Category::Sex), 3.0);
        assert_eq!(average_rating(&ann, "b", Category::Drugs), 1.0);
        let index = AnnotationIndex::new(&ann).unwrap();
        assert_eq!(index.average_rating("b", Category::Sex), 3.0);
        assert_eq!(index.average_rating("zzz", Category::Violence), 1.0);
    }

    #[test]
    fn even_median_rounds_half_up() {
        assert_eq!(median_half_up(&[2, 3]), 3);
        assert_eq!(median_half_up(&[1, 2, 2, 4]), 2);
    }

    #[test]
    fn kappa_unanimous_is_one() {
        let items = vec![vec![3, 0], vec![0, 3], vec![3, 0]];
        assert_eq!(fleiss_kappa(&items, 3).unwrap(), 1.0);
    }

    #[test]
    fn kappa_degenerate() {
        let items = vec![vec![3, 0], vec![3, 0]];
        assert!(matches!(fleiss_kappa(&items, 3), Err(Error::DegenerateAgreement)));
    }

    #[test]
    fn kappa_hand_example() {
        // P1 = (4+1-3)/6 = 1/3, P2 = 1, Pbar = 2/3; p = (5/6, 1/6), Pe = 13/18
        // κ = (2/3 - 13/18) / (5/18) = -1/5
        let items = vec![vec![2, 1], vec![3, 0]];
        assert!((fleiss_kappa(&items, 3).unwrap() - (-0.2)).abs() < 1e-9);
    }

    #[test]
    fn kappa_input_errors() {
        assert!(matches!(fleiss_kappa(&[], 3), Err(Error::EmptyInput)));
        assert!(fleiss_kappa(&[vec![2, 0]], 3).is_err());
        assert!(fleiss_kappa(&[vec![1, 0]], 1).is_err());
        assert!(fleiss_kappa(&[vec![3, 0], vec![1, 1, 1]], 3).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let rev: Vec<f64> = x.iter().map(|v| 6.0 - v).collect();
        let [a, b, c] = pearson_pairwise([&x, &x, &rev]).unwrap();
        assert_eq!(a.unwrap(), 1.0);
        assert!((b.unwrap() + 1.0).abs() < 1e-12);
        assert!((c.unwrap() + 1.0).abs() < 1e-12);

        // Σdxdy = 4.6, Σdx² = 6.8, Σdy² = 5.2
        let x = [1.0, 2.0, 3.0, 4.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0, 3.0];
        assert!((pearson(&x, &y).unwrap() - 4.6 / (6.8f64 * 5.2).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn pearson_zero_variance_is_per_pair() {
        let x = [1.0, 2.0, 3.0];
        let flat = [2.0, 2.0, 2.0];
        let [a, b, c] = pearson_pairwise([&x, &x, &flat]).unwrap();
        assert!(a.is_ok());
        assert!(matches!(b, Err(Error::ZeroVariance)));
        assert!(matches!(c, Err(Error::ZeroVariance)));
        assert!(pearson_pairwise([&x, &x, &[1.0]]).is_err());
    }

    #[test]
    fn csv_round_trip_and_raw_extraction() {
        let ann = vec![rec("a", Category::Sex, [1, 2, 3]), rec("b", Category::Drugs, [4, 4, 1])];
        let mut buf = Vec::new();
        write_annotations_csv(&mut buf, &ann).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("doc_id,category,r1,r2,r3\n"));
        assert_eq!(read_annotations_csv(buf.as_slice()).unwrap(), ann);

        let raw = RawDocument {
            ratings: Some(BTreeMap::from([("violence".to_string(), vec![1, 2, 2])])),
            ..RawDocument::new("x", "text")
        };
        let recs = records_from_raw(&[raw.clone()]).unwrap();
        assert_eq!(recs, vec![rec("x", Category::Violence, [1, 2, 2])]);
        let bad = RawDocument {
            ratings: Some(BTreeMap::from([("violence".to_string(), vec![1, 2])])),
            ..raw
        };
        assert!(records_from_raw(&[bad]).is_err());
    }

    #[test]
    fn report_covers_all_categories() {
        let ann = vec![
            rec("a", Category::Sex, [1, 1, 2]),
            rec("b", Category::Sex, [3, 3, 3]),
            rec("c", Category::Sex, [2, 1, 2]),
            rec("a", Category::Drugs, [1, 1, 1]),
            rec("b", Category::Drugs, [1, 1, 1]),
        ];
        let report = agreement_report(&ann);
        assert_eq!(report.categories.len(), 3);
        assert!(report.categories[0].fleiss_kappa.is_some());
        assert!(report.categories[1].kappa_error.is_some());
        assert_eq!(report.categories[2].items, 0);
        assert!(serde_json::to_string(&report).is_ok());
    }
}
