//! Averaged structured perceptron and CRF likelihood training.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::crf;
use super::features::{featurize, DenseFeatureTable, FeatureTemplates};
use super::model::{ChainModel, EncodedUnit, Variant};
use crate::domain::{Sentence, TokenLabels};
use crate::error::{Error, Result};
use crate::labeling::{extend_to_token_label, gold_multilabels, gold_token_labels};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trainer {
    Perceptron,
    Crf,
}

impl std::str::FromStr for Trainer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perceptron" => Ok(Trainer::Perceptron),
            "crf" => Ok(Trainer::Crf),
            other => Err(Error::invalid("trainer", other)),
        }
    }
}

impl std::fmt::Display for Trainer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trainer::Perceptron => "perceptron",
            Trainer::Crf => "crf",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub trainer: Trainer,
    pub epochs: usize,
    /// SGD step size; unused by the perceptron.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    pub averaged: bool,
    pub templates: FeatureTemplates,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            trainer: Trainer::Perceptron,
            epochs: 20,
            learning_rate: 0.01,
            batch_size: 8,
            l2: 0.0,
            seed: 1,
            averaged: true,
            templates: FeatureTemplates::default(),
        }
    }
}

impl TrainConfig {
    /// CRF settings with 200 epochs and batches of 8; step size 0.005
    /// for multi-labels and 0.01 otherwise.
    pub fn crf_for(variant: Variant) -> Self {
        TrainConfig {
            trainer: Trainer::Crf,
            epochs: 200,
            learning_rate: if variant == Variant::TokenMulti { 0.005 } else { 0.01 },
            batch_size: 8,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("training config", "epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("training config", "learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("training config", "batch size must be at least 1"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("training config", "L2 strength must be non-negative"));
        }
        Ok(())
    }
}

/// A unit sequence with one gold label string per unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub units: Vec<String>,
    pub labels: Vec<String>,
}

fn mismatch(variant: Variant, i: usize, found: &str) -> Error {
    Error::VariantMismatch {
        expected: variant.to_string(),
        found: format!("sentence {} {found}", i + 1),
    }
}

/// Turns annotated sentences into training sequences for `variant`,
/// deriving token-level labels from morpheme labels where needed.
pub fn examples_for_variant(sentences: &[Sentence], variant: Variant) -> Result<Vec<TrainingExample>> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (units, labels): (Vec<String>, Vec<String>) = match variant {
                Variant::TokenSingle => {
                    if s.tokens.is_empty() {
                        return Err(mismatch(variant, i, "has no tokens"));
                    }
                    let labels = match &s.token_labels {
                        Some(TokenLabels::Single(ls)) => ls.clone(),
                        Some(TokenLabels::Multi(ms)) => ms.iter().map(extend_to_token_label).collect::<Result<_>>()?,
                        None if s.morpheme_labels.is_some() => gold_token_labels(s)?,
                        None => return Err(mismatch(variant, i, "has no labels")),
                    };
                    (
                        s.tokens.iter().map(|t| t.form.clone()).collect(),
                        labels.iter().map(ToString::to_string).collect(),
                    )
                }
                Variant::TokenMulti => {
                    if s.tokens.is_empty() {
                        return Err(mismatch(variant, i, "has no tokens"));
                    }
                    let labels = match &s.token_labels {
                        Some(TokenLabels::Multi(ms)) => ms.clone(),
                        _ if s.morpheme_labels.is_some() => gold_multilabels(s)?,
                        _ => return Err(mismatch(variant, i, "has no multi-labels")),
                    };
                    (
                        s.tokens.iter().map(|t| t.form.clone()).collect(),
                        labels.iter().map(ToString::to_string).collect(),
                    )
                }
                Variant::Morpheme => {
                    let (Some(ms), Some(ls)) = (&s.morphemes, &s.morpheme_labels) else {
                        return Err(mismatch(variant, i, "has no labeled morphemes"));
                    };
                    (
                        ms.iter().map(|m| m.form.clone()).collect(),
                        ls.iter().map(ToString::to_string).collect(),
                    )
                }
            };
            if units.len() != labels.len() {
                return Err(Error::LengthMismatch {
                    left: units.len(),
                    right: labels.len(),
                    context: "units vs labels",
                });
            }
            Ok(TrainingExample { units, labels })
        })
        .collect()
}

/// Trains a chain model on annotated sentences.
pub fn train(sentences: &[Sentence], variant: Variant, config: &TrainConfig) -> Result<ChainModel> {
    train_with_dense(sentences, variant, config, None)
}

pub fn train_with_dense(
    sentences: &[Sentence],
    variant: Variant,
    config: &TrainConfig,
    dense: Option<DenseFeatureTable>,
) -> Result<ChainModel> {
    let examples = examples_for_variant(sentences, variant)?;
    train_examples(&examples, variant, config, dense)
}

/// Trains on prepared sequences. Label and feature vocabularies are
/// collected in first-seen order, so the result depends only on the
/// data and the config.
pub fn train_examples(
    examples: &[TrainingExample],
    variant: Variant,
    config: &TrainConfig,
    dense: Option<DenseFeatureTable>,
) -> Result<ChainModel> {
    config.validate()?;
    let examples: Vec<&TrainingExample> = examples.iter().filter(|e| !e.units.is_empty()).collect();
    if examples.is_empty() {
        return Err(Error::Empty("training corpus"));
    }

    let mut labels: Vec<String> = Vec::new();
    let mut label_ids: HashMap<&str, usize> = HashMap::new();
    let mut features: Vec<String> = Vec::new();
    let mut feature_ids: HashMap<String, usize> = HashMap::new();
    for ex in &examples {
        for l in &ex.labels {
            label_ids.entry(l).or_insert_with(|| {
                labels.push(l.clone());
                labels.len() - 1
            });
        }
        for i in 0..ex.units.len() {
            for f in featurize(&ex.units, i, &config.templates, dense.as_ref()).sparse {
                if !feature_ids.contains_key(&f) {
                    feature_ids.insert(f.clone(), features.len());
                    features.push(f);
                }
            }
        }
    }
    let mut model = ChainModel::new(variant, config.templates.clone(), labels, features, dense)?;
    let data: Vec<(Vec<EncodedUnit>, Vec<usize>)> = examples
        .iter()
        .map(|ex| {
            let enc = model.encode(&ex.units);
            let gold = ex.labels.iter().map(|l| label_ids[l.as_str()]).collect();
            (enc, gold)
        })
        .collect();

    match config.trainer {
        Trainer::Perceptron => perceptron(&mut model, &data, config)?,
        Trainer::Crf => sgd(&mut model, &data, config)?,
    }
    Ok(model)
}

fn perceptron(model: &mut ChainModel, data: &[(Vec<EncodedUnit>, Vec<usize>)], config: &TrainConfig) -> Result<()> {
    let n = model.params().len();
    // running sum of step-weighted updates, for averaging
    let mut stamped = vec![0.0; n];
    let mut step = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut updates: Vec<(usize, f64)> = Vec::new();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let (enc, gold) = &data[k];
            let guess = crf::viterbi(&model.potentials_encoded(enc))?;
            if &guess != gold {
                updates.clear();
                let mut collect = |idx: usize, delta: f64| updates.push((idx, delta));
                model.add_counts(enc, gold, 1.0, &mut collect);
                model.add_counts(enc, &guess, -1.0, &mut collect);
                let weights = model.params_mut();
                for &(idx, delta) in &updates {
                    weights[idx] += delta;
                    stamped[idx] += step * delta;
                }
            }
            step += 1.0;
        }
    }
    if config.averaged {
        let averaged = model.params().iter().zip(&stamped).map(|(w, s)| w - s / step).collect();
        model.set_params(averaged)?;
    }
    Ok(())
}

fn sgd(model: &mut ChainModel, data: &[(Vec<EncodedUnit>, Vec<usize>)], config: &TrainConfig) -> Result<()> {
    let n = model.params().len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; n];
    let mut average = vec![0.0; n];
    let mut averaged_steps = 0.0;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &k in batch {
                let (enc, gold) = &data[k];
                model.accumulate_nll_gradient(enc, gold, scale, &mut grad)?;
            }
            let lr = config.learning_rate;
            let l2 = config.l2;
            for (w, g) in model.params_mut().iter_mut().zip(&grad) {
                *w -= lr * (g + l2 * *w);
            }
            if config.averaged {
                for (a, w) in average.iter_mut().zip(model.params()) {
                    *a += w;
                }
                averaged_steps += 1.0;
            }
        }
    }
    if config.averaged && averaged_steps > 0.0 {
        let avg = average.iter().map(|a| a / averaged_steps).collect();
        model.set_params(avg)?;
    } else {
        let params = model.params().to_vec();
        model.set_params(params)?;
    }
    Ok(())
}

/// Mean negative log-likelihood of `examples` under `model`. Unknown
/// gold labels are an error.
pub fn mean_nll(model: &ChainModel, examples: &[TrainingExample]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for ex in examples.iter().filter(|e| !e.units.is_empty()) {
        let gold = ex
            .labels
            .iter()
            .map(|l| model.label_id(l).ok_or_else(|| Error::InvalidLabel(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        let p = model.potentials(&ex.units);
        total += crf::log_partition(&p) - p.score(&gold);
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}
