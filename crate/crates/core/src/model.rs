//! Hashed bag-of-n-grams features and a one-vs-rest logistic model trained
//! with minibatch gradient descent.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::fnv1a64;
use crate::io::{read_json, write_json};
use crate::lexicon::Schema;
use crate::text::tokenize;

pub const DEFAULT_DIM: usize = 1 << 18;
pub const DEFAULT_THRESHOLD: f64 = 0.30;

/// Sparse, L2-normalized feature vector. Indices are sorted and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() || dim > u32::MAX as usize {
        return Err(Error::Config(format!("feature dimension {dim} must be a power of two")));
    }
    Ok(())
}

/// Unigram and bigram (`a_b`) counts hashed into `dim` buckets, then
/// L2-normalized. `[MASK]` is an ordinary token. Empty text gives the
/// zero vector.
pub fn featurize(text: &str, dim: usize) -> Result<FeatureVector> {
    check_dim(dim)?;
    let mask = (dim - 1) as u64;
    let tokens: Vec<&str> = tokenize(text).into_iter().map(|t| t.text).collect();
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    let mut add = |feature: &str| {
        *counts.entry((fnv1a64(feature.as_bytes()) & mask) as u32).or_insert(0.0) += 1.0;
    };
    for t in &tokens {
        add(t);
    }
    let mut bigram = String::new();
    for pair in tokens.windows(2) {
        bigram.clear();
        bigram.push_str(pair[0]);
        bigram.push('_');
        bigram.push_str(pair[1]);
        add(&bigram);
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    let (indices, values) = counts.into_iter().map(|(i, v)| (i, v / norm)).unzip();
    Ok(FeatureVector { dim, indices, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 4,
            learning_rate: 0.1,
            batch_size: 32,
            seed: 0,
            dim: DEFAULT_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub config: TrainConfig,
    pub categories: Vec<String>,
    pub schema_hash: String,
    /// One dense weight vector of length `config.dim` per category.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of logit `z` against target `y`, computed as
/// `softplus(z) - y*z` to stay finite for large |z|.
fn logistic_loss(z: f64, y: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    if y {
        softplus - z
    } else {
        softplus
    }
}

/// Gradient of the batch objective, sparse in the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<BTreeMap<usize, f64>>,
    pub biases: Vec<f64>,
}

/// One training row: features and per-category targets in model order.
#[derive(Debug, Clone)]
pub struct TrainRow {
    pub features: FeatureVector,
    pub targets: Vec<bool>,
}

impl LinearModel {
    pub fn zeros(schema: &Schema, config: TrainConfig) -> Result<Self> {
        check_dim(config.dim)?;
        Ok(Self {
            config,
            categories: schema.ids().map(str::to_owned).collect(),
            schema_hash: schema.hash(),
            weights: vec![vec![0.0; config.dim]; schema.len()],
            biases: vec![0.0; schema.len()],
        })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn logit(&self, category: usize, x: &FeatureVector) -> f64 {
        let w = &self.weights[category];
        self.biases[category] + x.iter().map(|(i, v)| w[i] * v).sum::<f64>()
    }

    /// Logistic loss summed over rows and categories. A minibatch step
    /// descends this sum, so the learning rate acts per example.
    pub fn objective<'a>(&self, rows: impl IntoIterator<Item = &'a TrainRow>) -> f64 {
        rows.into_iter()
            .map(|r| {
                (0..self.categories.len())
                    .map(|c| logistic_loss(self.logit(c, &r.features), r.targets[c]))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Analytic gradient of [`LinearModel::objective`] over `rows`.
    pub fn gradient(&self, rows: &[&TrainRow]) -> Gradient {
        let k = self.categories.len();
        let mut grad = Gradient {
            weights: vec![BTreeMap::new(); k],
            biases: vec![0.0; k],
        };
        for row in rows {
            for c in 0..k {
                let residual = sigmoid(self.logit(c, &row.features)) - f64::from(u8::from(row.targets[c]));
                grad.biases[c] += residual;
                for (i, v) in row.features.iter() {
                    *grad.weights[c].entry(i).or_insert(0.0) += residual * v;
                }
            }
        }
        grad
    }

    fn apply(&mut self, grad: &Gradient, lr: f64) {
        for (c, g) in grad.weights.iter().enumerate() {
            let w = &mut self.weights[c];
            for (&i, &v) in g {
                w[i] -= lr * v;
            }
            self.biases[c] -= lr * grad.biases[c];
        }
    }

    pub fn predict(&self, text: &str, threshold: f64) -> Prediction {
        let x = featurize(text, self.dim()).expect("model dimension validated at construction");
        self.decide(&x, threshold)
    }

    pub fn predict_features(&self, x: &FeatureVector, threshold: f64) -> Result<Prediction> {
        if x.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim,
            });
        }
        Ok(self.decide(x, threshold))
    }

    fn decide(&self, x: &FeatureVector, threshold: f64) -> Prediction {
        let scores: Vec<f64> = (0..self.categories.len()).map(|c| sigmoid(self.logit(c, x))).collect();
        let decided = self
            .categories
            .iter()
            .zip(&scores)
            .filter(|(_, &s)| s >= threshold)
            .map(|(id, _)| id.clone())
            .collect();
        Prediction {
            categories: self.categories.clone(),
            scores,
            decided,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub categories: Vec<String>,
    pub scores: Vec<f64>,
    /// Categories with score at or above the threshold.
    pub decided: BTreeSet<String>,
}

impl Prediction {
    pub fn score(&self, category: &str) -> Option<f64> {
        self.categories
            .iter()
            .position(|c| c == category)
            .map(|i| self.scores[i])
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Mean per-example objective over the full training set after each
    /// epoch.
    pub loss_trace: Vec<f64>,
}

pub fn build_rows<'a, I>(examples: I, schema: &Schema, dim: usize) -> Result<Vec<TrainRow>>
where
    I: IntoIterator<Item = (&'a str, &'a BTreeSet<String>)>,
{
    examples
        .into_iter()
        .map(|(text, labels)| {
            if let Some(bad) = labels.iter().find(|l| !schema.contains(l)) {
                return Err(Error::UnknownLabel(bad.clone()));
            }
            Ok(TrainRow {
                features: featurize(text, dim)?,
                targets: schema.ids().map(|id| labels.contains(id)).collect(),
            })
        })
        .collect()
}

/// Minibatch gradient descent on the one-vs-rest logistic objective,
/// reshuffling every epoch with a generator seeded from `config.seed`.
/// Single-threaded so that a fixed seed gives bit-identical weights.
pub fn train(rows: &[TrainRow], schema: &Schema, config: TrainConfig) -> Result<TrainOutcome> {
    if rows.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut model = LinearModel::zeros(schema, config)?;
    for row in rows {
        if row.features.dim != config.dim {
            return Err(Error::DimensionMismatch {
                expected: config.dim,
                got: row.features.dim,
            });
        }
        if row.targets.len() != schema.len() {
            return Err(Error::Config(format!(
                "row has {} targets, schema has {} categories",
                row.targets.len(),
                schema.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let batch: Vec<&TrainRow> = batch.iter().map(|&i| &rows[i]).collect();
            let grad = model.gradient(&batch);
            model.apply(&grad, config.learning_rate);
        }
        let loss = model.objective(rows) / rows.len() as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss {loss} after epoch {} (learning rate {}, batch size {})",
                epoch + 1,
                config.learning_rate,
                config.batch_size
            )));
        }
        log::debug!("epoch {}: loss {loss:.6}", epoch + 1);
        loss_trace.push(loss);
    }
    Ok(TrainOutcome { model, loss_trace })
}

const MODEL_FORMAT: &str = "emocorpus-linear";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: TrainConfig,
    categories: Vec<String>,
    schema_hash: String,
    biases: Vec<f64>,
    /// Non-zero weights per category as `(index, value)`.
    weights: Vec<Vec<(u32, f64)>>,
}

impl LinearModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config,
            categories: self.categories.clone(),
            schema_hash: self.schema_hash.clone(),
            biases: self.biases.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| {
                    w.iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(i, &v)| (i as u32, v))
                        .collect()
                })
                .collect(),
        };
        write_json(path, &file)
    }

    /// Loads a model, rejecting files trained against a different schema.
    pub fn load(path: &Path, schema: &Schema) -> Result<Self> {
        let file: ModelFile = read_json(path)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported model format {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        let expected = schema.hash();
        if file.schema_hash != expected {
            return Err(Error::SchemaMismatch {
                expected,
                found: file.schema_hash,
            });
        }
        check_dim(file.config.dim)?;
        let mut weights = vec![vec![0.0; file.config.dim]; file.categories.len()];
        for (c, entries) in file.weights.iter().enumerate() {
            for &(i, v) in entries {
                let slot = weights
                    .get_mut(c)
                    .and_then(|w| w.get_mut(i as usize))
                    .ok_or_else(|| Error::Config(format!("{}: weight index {i} out of range", path.display())))?;
                *slot = v;
            }
        }
        Ok(Self {
            config: file.config,
            categories: file.categories,
            schema_hash: file.schema_hash,
            weights,
            biases: file.biases,
        })
    }
}
