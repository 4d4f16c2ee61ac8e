use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::crf::{self, Potentials};
use super::features::{featurize, DenseFeatureTable, FeatureTemplates};
use crate::domain::{Label, MultiLabel, Sentence};
use crate::error::{Error, Result};

/// Labeling granularity of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// One label per token.
    TokenSingle,
    /// One multi-label per token, treated as an atomic label.
    TokenMulti,
    /// One label per morpheme.
    Morpheme,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::TokenSingle, Variant::TokenMulti, Variant::Morpheme];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::TokenSingle => "token-single",
            Variant::TokenMulti => "token-multi",
            Variant::Morpheme => "morpheme",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::invalid("variant", s))
    }
}

/// Anything that can score every label at every position of a unit
/// sequence.
pub trait EmissionScorer {
    fn label_count(&self) -> usize;
    fn emission_scores(&self, units: &[&str]) -> Vec<Vec<f64>>;
}

/// A unit with its model feature ids resolved.
#[derive(Debug, Clone)]
pub(crate) struct EncodedUnit {
    pub feats: Vec<usize>,
    pub dense: Option<Vec<f64>>,
}

/// Weight layout inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    labels: usize,
    dense: usize,
    transitions: usize,
    start: usize,
    stop: usize,
    total: usize,
}

/// Trained linear-chain labeler.
///
/// All weights live in one flat vector: one row of per-label emission
/// weights per sparse feature, one row per dense dimension, then the
/// label-to-label transition matrix and the start and stop vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    variant: Variant,
    templates: FeatureTemplates,
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    features: Vec<String>,
    feature_index: HashMap<String, usize>,
    dense_table: Option<DenseFeatureTable>,
    params: Vec<f64>,
}

impl ChainModel {
    /// A zero-weight model over the given label and feature vocabularies.
    pub fn new(
        variant: Variant,
        templates: FeatureTemplates,
        labels: Vec<String>,
        features: Vec<String>,
        dense_table: Option<DenseFeatureTable>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("label vocabulary"));
        }
        let label_index = index_of(&labels, "label")?;
        let feature_index = index_of(&features, "feature")?;
        let mut model = ChainModel {
            variant,
            templates,
            labels,
            label_index,
            features,
            feature_index,
            dense_table,
            params: Vec::new(),
        };
        model.params = vec![0.0; model.layout().total];
        Ok(model)
    }

    fn layout(&self) -> Layout {
        let l = self.labels.len();
        let dense = self.features.len() * l;
        let dim = self.dense_table.as_ref().map_or(0, DenseFeatureTable::dim);
        let transitions = dense + dim * l;
        let start = transitions + l * l;
        let stop = start + l;
        Layout {
            labels: l,
            dense,
            transitions,
            start,
            stop,
            total: stop + l,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn templates(&self) -> &FeatureTemplates {
        &self.templates
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn dense_table(&self) -> Option<&DenseFeatureTable> {
        self.dense_table.as_ref()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.layout().total {
            return Err(Error::LengthMismatch {
                left: params.len(),
                right: self.layout().total,
                context: "weights vs model layout",
            });
        }
        if params.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("model weights", "non-finite weight"));
        }
        self.params = params;
        Ok(())
    }

    pub fn emission_weight(&self, feature: usize, label: usize) -> f64 {
        self.params[feature * self.labels.len() + label]
    }

    pub fn dense_weight(&self, dim: usize, label: usize) -> f64 {
        let lay = self.layout();
        self.params[lay.dense + dim * lay.labels + label]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        let lay = self.layout();
        self.params[lay.transitions + from * lay.labels + to]
    }

    pub fn start_weight(&self, label: usize) -> f64 {
        self.params[self.layout().start + label]
    }

    pub fn stop_weight(&self, label: usize) -> f64 {
        self.params[self.layout().stop + label]
    }

    pub(crate) fn encode<S: AsRef<str>>(&self, units: &[S]) -> Vec<EncodedUnit> {
        (0..units.len())
            .map(|i| {
                let fv = featurize(units, i, &self.templates, self.dense_table.as_ref());
                EncodedUnit {
                    feats: fv
                        .sparse
                        .iter()
                        .filter_map(|f| self.feature_index.get(f).copied())
                        .collect(),
                    dense: fv.dense,
                }
            })
            .collect()
    }

    pub(crate) fn potentials_encoded(&self, units: &[EncodedUnit]) -> Potentials {
        let lay = self.layout();
        let l = lay.labels;
        let mut p = Potentials::zeros(units.len(), l);
        for (row, unit) in p.emissions.iter_mut().zip(units) {
            for &f in &unit.feats {
                for (y, slot) in row.iter_mut().enumerate() {
                    *slot += self.params[f * l + y];
                }
            }
            if let Some(dense) = &unit.dense {
                for (d, x) in dense.iter().enumerate() {
                    for (y, slot) in row.iter_mut().enumerate() {
                        *slot += x * self.params[lay.dense + d * l + y];
                    }
                }
            }
        }
        for (a, row) in p.transitions.iter_mut().enumerate() {
            row.copy_from_slice(&self.params[lay.transitions + a * l..lay.transitions + (a + 1) * l]);
        }
        p.start.copy_from_slice(&self.params[lay.start..lay.start + l]);
        p.stop.copy_from_slice(&self.params[lay.stop..lay.stop + l]);
        p
    }

    /// Emission, transition, start and stop scores for a unit sequence.
    pub fn potentials<S: AsRef<str>>(&self, units: &[S]) -> Potentials {
        self.potentials_encoded(&self.encode(units))
    }

    /// Best label ids for a unit sequence.
    pub fn viterbi_ids<S: AsRef<str>>(&self, units: &[S]) -> Result<Vec<usize>> {
        crf::viterbi(&self.potentials(units))
    }

    /// Best label strings for a unit sequence.
    pub fn viterbi<S: AsRef<str>>(&self, units: &[S]) -> Result<Vec<String>> {
        Ok(self
            .viterbi_ids(units)?
            .into_iter()
            .map(|y| self.labels[y].clone())
            .collect())
    }

    pub fn log_partition<S: AsRef<str>>(&self, units: &[S]) -> f64 {
        crf::log_partition(&self.potentials(units))
    }

    /// Negative log-likelihood of `gold` label ids and its gradient with
    /// respect to [`ChainModel::params`].
    pub fn nll_gradient<S: AsRef<str>>(&self, units: &[S], gold: &[usize]) -> Result<(f64, Vec<f64>)> {
        let enc = self.encode(units);
        let mut grad = vec![0.0; self.params.len()];
        let nll = self.accumulate_nll_gradient(&enc, gold, 1.0, &mut grad)?;
        Ok((nll, grad))
    }

    /// Adds `scale` times the NLL gradient into `grad`, returning the NLL.
    pub(crate) fn accumulate_nll_gradient(
        &self,
        enc: &[EncodedUnit],
        gold: &[usize],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        if enc.len() != gold.len() {
            return Err(Error::LengthMismatch {
                left: gold.len(),
                right: enc.len(),
                context: "gold labels vs units",
            });
        }
        let p = self.potentials_encoded(enc);
        let m = crf::marginals(&p)?;
        let lay = self.layout();
        let l = lay.labels;
        let nll = m.log_partition - p.score(gold);
        for (i, unit) in enc.iter().enumerate() {
            // expected minus observed
            let mut coef = m.unary[i].clone();
            coef[gold[i]] -= 1.0;
            for &f in &unit.feats {
                for (y, c) in coef.iter().enumerate() {
                    grad[f * l + y] += scale * c;
                }
            }
            if let Some(dense) = &unit.dense {
                for (d, x) in dense.iter().enumerate() {
                    for (y, c) in coef.iter().enumerate() {
                        grad[lay.dense + d * l + y] += scale * x * c;
                    }
                }
            }
        }
        for (i, pair) in m.pairwise.iter().enumerate() {
            for (a, row) in pair.iter().enumerate() {
                for (b, prob) in row.iter().enumerate() {
                    grad[lay.transitions + a * l + b] += scale * prob;
                }
            }
            grad[lay.transitions + gold[i] * l + gold[i + 1]] -= scale;
        }
        let last = enc.len() - 1;
        for y in 0..l {
            grad[lay.start + y] += scale * m.unary[0][y];
            grad[lay.stop + y] += scale * m.unary[last][y];
        }
        grad[lay.start + gold[0]] -= scale;
        grad[lay.stop + gold[last]] -= scale;
        Ok(nll)
    }

    /// Adds `scale` times the feature counts of a labeled sequence into a
    /// parameter-shaped vector.
    pub(crate) fn add_counts(
        &self,
        enc: &[EncodedUnit],
        labels: &[usize],
        scale: f64,
        target: &mut impl FnMut(usize, f64),
    ) {
        let lay = self.layout();
        let l = lay.labels;
        for (unit, &y) in enc.iter().zip(labels) {
            for &f in &unit.feats {
                target(f * l + y, scale);
            }
            if let Some(dense) = &unit.dense {
                for (d, x) in dense.iter().enumerate() {
                    target(lay.dense + d * l + y, scale * x);
                }
            }
        }
        for pair in labels.windows(2) {
            target(lay.transitions + pair[0] * l + pair[1], scale);
        }
        if let (Some(&first), Some(&last)) = (labels.first(), labels.last()) {
            target(lay.start + first, scale);
            target(lay.stop + last, scale);
        }
    }

    fn units_of<'a>(&self, sentence: &'a Sentence) -> Result<Vec<&'a str>> {
        match self.variant {
            Variant::TokenSingle | Variant::TokenMulti => {
                if sentence.tokens.is_empty() {
                    return Err(Error::VariantMismatch {
                        expected: format!("{} input (tokens)", self.variant),
                        found: "sentence without tokens".into(),
                    });
                }
                Ok(sentence.token_forms())
            }
            Variant::Morpheme => sentence
                .morphemes
                .as_ref()
                .map(|ms| ms.iter().map(|m| m.form.as_str()).collect())
                .ok_or_else(|| Error::VariantMismatch {
                    expected: "morpheme input".into(),
                    found: "sentence without morphemes".into(),
                }),
        }
    }

    /// Labels a sentence at the model's granularity.
    pub fn tag(&self, sentence: &Sentence) -> Result<TagOutput> {
        let units = self.units_of(sentence)?;
        let raw = self.viterbi(&units)?;
        match self.variant {
            Variant::TokenSingle | Variant::Morpheme => {
                Ok(TagOutput::Labels(raw.iter().map(|s| s.parse()).collect::<Result<_>>()?))
            }
            Variant::TokenMulti => Ok(TagOutput::MultiLabels(
                raw.iter().map(|s| s.parse()).collect::<Result<_>>()?,
            )),
        }
    }
}

impl EmissionScorer for ChainModel {
    fn label_count(&self) -> usize {
        self.labels.len()
    }

    fn emission_scores(&self, units: &[&str]) -> Vec<Vec<f64>> {
        self.potentials(units).emissions
    }
}

fn index_of(items: &[String], what: &'static str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        if item.is_empty() || item.contains(char::is_whitespace) {
            return Err(Error::invalid(what, format!("{item:?}")));
        }
        if index.insert(item.clone(), i).is_some() {
            return Err(Error::invalid(what, format!("duplicate {item:?}")));
        }
    }
    Ok(index)
}

/// Output of [`ChainModel::tag`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagOutput {
    /// One label per token or per morpheme.
    Labels(Vec<Label>),
    /// One multi-label per token.
    MultiLabels(Vec<MultiLabel>),
}
