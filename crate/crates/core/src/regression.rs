//! Linear rating regression from topic proportions.
//!
//! An epsilon-insensitive (SVR-style) linear model per content category,
//! fit by stochastic subgradient descent with L2 regularisation and a
//! decaying step size. Errors are reported per rating level and as an
//! average weighted by inverse level prevalence, so the abundant level-1
//! documents do not dominate.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotations::{Category, MAX_LEVEL, MIN_LEVEL};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    /// Half-width of the zero-loss tube.
    pub epsilon: f64,
    pub l2: f64,
    pub epochs: usize,
    /// Step size at epoch 0.
    pub learning_rate: f64,
    /// Step at epoch `e` is `learning_rate / (1 + decay·e)`.
    pub decay: f64,
    pub seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            epsilon: 0.1,
            l2: 1e-4,
            epochs: 200,
            learning_rate: 0.1,
            decay: 0.05,
            seed: 0,
        }
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon >= 0.0
            && self.l2 >= 0.0
            && self.epochs >= 1
            && self.learning_rate > 0.0
            && self.decay >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad regression config {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: RegressionConfig,
    /// Set when every target was equal and a constant model was returned.
    #[serde(default)]
    pub degenerate_targets: bool,
}

impl RegressionModel {
    pub fn raw_prediction(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: theta.len(),
            });
        }
        Ok(dot(&self.weights, theta) + self.bias)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `w·θ + b`, clamped to the rating scale.
pub fn predict_rating(model: &RegressionModel, theta: &[f64]) -> Result<f64> {
    Ok(model
        .raw_prediction(theta)?
        .clamp(MIN_LEVEL as f64, MAX_LEVEL as f64))
}

/// Mean epsilon-insensitive loss plus `l2/2 · ‖w‖²`.
pub fn objective(weights: &[f64], bias: f64, thetas: &[Vec<f64>], targets: &[f64], config: &RegressionConfig) -> f64 {
    let loss: f64 = thetas
        .iter()
        .zip(targets)
        .map(|(x, &y)| ((dot(weights, x) + bias - y).abs() - config.epsilon).max(0.0))
        .sum();
    loss / thetas.len() as f64 + 0.5 * config.l2 * dot(weights, weights)
}

/// Fits `ŷ = w·θ + b` starting from zero weights and the mean target.
///
/// The returned parameters are the best, by regularised objective, of the
/// starting point and the end of every epoch.
pub fn train_regressor(
    thetas: &[Vec<f64>],
    targets: &[f64],
    category: Option<Category>,
    config: &RegressionConfig,
) -> Result<RegressionModel> {
    config.validate()?;
    if thetas.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: thetas.len(),
            found: targets.len(),
        });
    }
    if thetas.len() < 2 {
        return Err(Error::InvalidConfig("regression needs at least two documents".into()));
    }
    let dim = thetas[0].len();
    if let Some(bad) = thetas.iter().find(|t| t.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    if let Some(y) = targets
        .iter()
        .find(|&&y| !(MIN_LEVEL as f64..=MAX_LEVEL as f64).contains(&y))
    {
        return Err(Error::InvalidConfig(format!("target {y} outside the rating scale")));
    }

    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    if targets.iter().all(|&y| y == targets[0]) {
        return Ok(RegressionModel {
            category,
            weights: vec![0.0; dim],
            bias: targets[0],
            config: config.clone(),
            degenerate_targets: true,
        });
    }

    let mut weights = vec![0.0; dim];
    let mut bias = mean;
    let mut best = (objective(&weights, bias, thetas, targets, config), weights.clone(), bias);
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for epoch in 0..config.epochs {
        let step = config.learning_rate / (1.0 + config.decay * epoch as f64);
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &thetas[i];
            let residual = dot(&weights, x) + bias - targets[i];
            let g = if residual > config.epsilon {
                1.0
            } else if residual < -config.epsilon {
                -1.0
            } else {
                0.0
            };
            for (w, xi) in weights.iter_mut().zip(x) {
                *w -= step * (g * xi + config.l2 * *w);
            }
            bias -= step * g;
        }
        let obj = objective(&weights, bias, thetas, targets, config);
        if obj < best.0 {
            best = (obj, weights.clone(), bias);
        }
    }
    Ok(RegressionModel {
        category,
        weights: best.1,
        bias: best.2,
        config: config.clone(),
        degenerate_targets: false,
    })
}

/// Rating level of an average rating: rounded half-up, within 1–4.
pub fn rounded_level(y: f64) -> u8 {
    (y + 0.5).floor().clamp(MIN_LEVEL as f64, MAX_LEVEL as f64) as u8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelError {
    pub level: u8,
    pub count: usize,
    pub prevalence: f64,
    pub mean_abs_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionErrorReport {
    pub levels: Vec<LevelError>,
    pub weighted_average: f64,
    /// Levels with no documents, left out of the weighted average.
    pub empty_levels: Vec<u8>,
}

impl RegressionErrorReport {
    pub fn error_at(&self, level: u8) -> Option<f64> {
        self.levels
            .iter()
            .find(|l| l.level == level)
            .and_then(|l| l.mean_abs_error)
    }
}

/// `Σ (e_l / p_l) / Σ (1 / p_l)`.
pub fn weighted_average(errors: &[f64], prevalences: &[f64]) -> f64 {
    let num: f64 = errors.iter().zip(prevalences).map(|(e, p)| e / p).sum();
    let den: f64 = prevalences.iter().map(|p| 1.0 / p).sum();
    num / den
}

pub fn weighted_abs_error(
    predictions: &[f64],
    targets: &[f64],
    level_of: impl Fn(f64) -> u8,
) -> Result<RegressionErrorReport> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            found: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n_levels = MAX_LEVEL as usize;
    let mut sums = vec![0.0; n_levels];
    let mut counts = vec![0usize; n_levels];
    for (&p, &y) in predictions.iter().zip(targets) {
        let l = level_of(y).clamp(MIN_LEVEL, MAX_LEVEL) as usize - 1;
        sums[l] += (p - y).abs();
        counts[l] += 1;
    }
    let n = targets.len() as f64;
    let levels: Vec<LevelError> = (0..n_levels)
        .map(|l| LevelError {
            level: l as u8 + 1,
            count: counts[l],
            prevalence: counts[l] as f64 / n,
            mean_abs_error: (counts[l] > 0).then(|| sums[l] / counts[l] as f64),
        })
        .collect();
    let present: Vec<&LevelError> = levels.iter().filter(|l| l.count > 0).collect();
    let errors: Vec<f64> = present.iter().filter_map(|l| l.mean_abs_error).collect();
    let prevalences: Vec<f64> = present.iter().map(|l| l.prevalence).collect();
    Ok(RegressionErrorReport {
        weighted_average: weighted_average(&errors, &prevalences),
        empty_levels: levels.iter().filter(|l| l.count == 0).map(|l| l.level).collect(),
        levels,
    })
}

/// One row per category: `category,n_topics,e_1,e_2,e_3,e_4,weighted_avg`.
pub fn write_error_csv<W: Write>(writer: W, rows: &[(Category, usize, RegressionErrorReport)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["category", "n_topics", "e_1", "e_2", "e_3", "e_4", "weighted_avg"])?;
    for (category, n_topics, report) in rows {
        let mut record = vec![category.to_string(), n_topics.to_string()];
        for level in MIN_LEVEL..=MAX_LEVEL {
            record.push(report.error_at(level).map(|e| e.to_string()).unwrap_or_default());
        }
        record.push(report.weighted_average.to_string());
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(weights: Vec<f64>, bias: f64) -> RegressionModel {
        RegressionModel {
            category: None,
            weights,
            bias,
            config: RegressionConfig::default(),
            degenerate_targets: false,
        }
    }

    #[test]
    fn constant_targets_give_constant_model() {
        let thetas = vec![vec![0.2, 0.8], vec![0.6, 0.4], vec![1.0, 0.0]];
        let m = train_regressor(&thetas, &[2.5; 3], None, &RegressionConfig::default()).unwrap();
        assert!(m.degenerate_targets);
        assert_eq!(m.bias, 2.5);
        assert!(m.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn prediction_is_clamped() {
        assert_eq!(predict_rating(&model(vec![0.0, 0.0], 3.0), &[0.3, 0.7]).unwrap(), 3.0);
        assert_eq!(predict_rating(&model(vec![2.2, 0.0], 3.0), &[1.0, 0.0]).unwrap(), 4.0);
        assert_eq!(predict_rating(&model(vec![-5.0, 0.0], 3.0), &[1.0, 0.0]).unwrap(), 1.0);
        assert!(predict_rating(&model(vec![0.0], 3.0), &[0.5, 0.5]).is_err());
    }

    #[test]
    fn scaled_inputs_with_rescaled_weights_agree() {
        let m = model(vec![1.5, -0.5, 2.0], 1.2);
        let theta = [0.2, 0.3, 0.5];
        let c = 4.0;
        let scaled: Vec<f64> = theta.iter().map(|t| t * c).collect();
        let m2 = model(m.weights.iter().map(|w| w / c).collect(), m.bias);
        let (a, b) = (predict_rating(&m, &theta).unwrap(), predict_rating(&m2, &scaled).unwrap());
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn training_validation() {
        let cfg = RegressionConfig::default();
        assert!(train_regressor(&[vec![1.0]], &[2.0], None, &cfg).is_err());
        assert!(train_regressor(&[vec![1.0], vec![0.0]], &[2.0], None, &cfg).is_err());
        assert!(train_regressor(&[vec![1.0], vec![0.0, 1.0]], &[2.0, 3.0], None, &cfg).is_err());
        assert!(train_regressor(&[vec![1.0], vec![0.0]], &[2.0, 5.0], None, &cfg).is_err());
    }

    #[test]
    fn perfect_predictions_have_zero_error() {
        let y = [1.0, 2.0, 3.0, 4.0, 1.0];
        let r = weighted_abs_error(&y, &y, rounded_level).unwrap();
        assert_eq!(r.weighted_average, 0.0);
        assert!(r.levels.iter().all(|l| l.mean_abs_error == Some(0.0)));
    }

    #[test]
    fn weighted_average_two_levels() {
        let expected = (0.2 / 0.9 + 0.6 / 0.1) / (1.0 / 0.9 + 1.0 / 0.1);
        assert!((weighted_average(&[0.2, 0.6], &[0.9, 0.1]) - expected).abs() < 1e-12);
        assert!((expected - 0.56).abs() < 1e-12);
    }

    #[test]
    fn empty_levels_flagged() {
        let r = weighted_abs_error(&[1.5, 1.0], &[1.0, 1.0], rounded_level).unwrap();
        assert_eq!(r.empty_levels, vec![2, 3, 4]);
        assert!((r.weighted_average - 0.25).abs() < 1e-12);
        assert!(matches!(weighted_abs_error(&[], &[], rounded_level), Err(Error::EmptyInput)));
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(rounded_level(1.0), 1);
        assert_eq!(rounded_level(2.5), 3);
        assert_eq!(rounded_level(2.49), 2);
        assert_eq!(rounded_level(3.6667), 4);
    }

    #[test]
    fn error_csv_shape() {
        let r = weighted_abs_error(&[1.0, 2.5], &[1.0, 2.0], rounded_level).unwrap();
        let mut buf = Vec::new();
        write_error_csv(&mut buf, &[(Category::Sex, 9, r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "category,n_topics,e_1,e_2,e_3,e_4,weighted_avg");
        assert!(text.lines().nth(1).unwrap().starts_with("sex,9,0,0.5,,,"));
    }

    #[test]
    fn model_json_round_trip() {
        let m = RegressionModel {
            category: Some(Category::Drugs),
            ..model(vec![0.1, 0.2], 1.5)
        };
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"category\":\"drugs\""));
        assert_eq!(serde_json::from_str::<RegressionModel>(&json).unwrap(), m);
    }
}
