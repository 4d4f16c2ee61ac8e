//! Morphological disambiguation: choosing one path through a lattice.
//!
//! Paths are scored by a first-order log-linear model over lattice
//! edges. Each edge fires features of its own form and POS and of the POS
//! and form of the edge before it. Each analysis fires features of its
//! full segmentation, alone and paired with the morpheme preceding it.
//! Decoding is exact dynamic programming over per-token analyses.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{group_by_token, Morpheme, MultiLabel, Sentence, Token};
use crate::error::{Error, Result};
use crate::lattice::{analyze, prune, Analysis, Lexicon, SentenceLattice, TokenLattice};
use crate::tagger::{ChainModel, TagOutput, Variant};

const BOUNDARY: &str = "<S>";

fn edge_features(prev: Option<&Morpheme>, m: &Morpheme, out: &mut Vec<String>) {
    let (pp, pf) = prev.map_or((BOUNDARY, BOUNDARY), |p| (p.pos.as_str(), p.form.as_str()));
    out.push(format!("fp={}|{}", m.form, m.pos));
    out.push(format!("p={}", m.pos));
    out.push(format!("tp={pp}|{}", m.pos));
    out.push(format!("tf={pf}|{}", m.form));
}

fn analysis_key(morphemes: &[Morpheme]) -> String {
    morphemes
        .iter()
        .map(|m| format!("{}/{}", m.form, m.pos))
        .collect::<Vec<_>>()
        .join("+")
}

fn analysis_features(morphemes: &[Morpheme], out: &mut Vec<String>) {
    out.push(format!("an={}", analysis_key(morphemes)));
    out.push(format!("len={}", morphemes.len()));
}

/// Features of entering an analysis from the previous morpheme.
fn entry_features(prev: Option<&Morpheme>, morphemes: &[Morpheme], out: &mut Vec<String>) {
    edge_features(prev, &morphemes[0], out);
    let (pp, pf) = prev.map_or((BOUNDARY, BOUNDARY), |p| (p.pos.as_str(), p.form.as_str()));
    out.push(format!("pa={pf}|{}", analysis_key(morphemes)));
    out.push(format!("pl={pp}|{}", morphemes.len()));
}

fn stop_features(last: &Morpheme, out: &mut Vec<String>) {
    out.push(format!("tp={}|{BOUNDARY}", last.pos));
}

/// Feature names fired by a full path.
pub fn path_features(path: &[Morpheme]) -> Vec<String> {
    let mut out = Vec::new();
    let token_count = path.last().map_or(0, |m| m.token_index + 1);
    let mut prev: Option<&Morpheme> = None;
    for group in group_by_token(path, token_count) {
        if group.is_empty() {
            continue;
        }
        analysis_features(group, &mut out);
        entry_features(prev, group, &mut out);
        for pair in group.windows(2) {
            edge_features(Some(&pair[0]), &pair[1], &mut out);
        }
        prev = group.last();
    }
    if let Some(last) = path.last() {
        stop_features(last, &mut out);
    }
    out
}

/// Weights of the lattice path scorer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MdModel {
    features: Vec<String>,
    index: HashMap<String, usize>,
    weights: Vec<f64>,
}

impl MdModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_weights(weights: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut model = MdModel::new();
        for (f, w) in weights {
            if !w.is_finite() {
                return Err(Error::invalid("MD weight", format!("{f}: {w}")));
            }
            let id = model.intern(&f);
            model.weights[id] = w;
        }
        Ok(model)
    }

    fn intern(&mut self, feature: &str) -> usize {
        if let Some(&id) = self.index.get(feature) {
            return id;
        }
        self.features.push(feature.to_string());
        self.weights.push(0.0);
        self.index.insert(feature.to_string(), self.features.len() - 1);
        self.features.len() - 1
    }

    pub fn weight(&self, feature: &str) -> f64 {
        self.index.get(feature).map_or(0.0, |&i| self.weights[i])
    }

    /// Features with their weights, in interning order.
    pub fn weights(&self) -> impl Iterator<Item = (&str, f64)> {
        self.features
            .iter()
            .map(String::as_str)
            .zip(self.weights.iter().copied())
    }

    fn sum(&self, features: &[String]) -> f64 {
        features.iter().map(|f| self.weight(f)).sum()
    }

    /// Total score of a path: edge, transition, analysis and stop
    /// features.
    pub fn score_path(&self, path: &[Morpheme]) -> f64 {
        self.sum(&path_features(path))
    }

    /// Score of an analysis excluding its entry transition.
    fn internal_score(&self, analysis: &Analysis) -> f64 {
        let ms = analysis.morphemes();
        let mut feats = Vec::new();
        analysis_features(ms, &mut feats);
        for pair in ms.windows(2) {
            edge_features(Some(&pair[0]), &pair[1], &mut feats);
        }
        self.sum(&feats)
    }

    fn entry_score(&self, prev: Option<&Morpheme>, analysis: &Analysis) -> f64 {
        let mut feats = Vec::new();
        entry_features(prev, analysis.morphemes(), &mut feats);
        self.sum(&feats)
    }

    fn stop_score(&self, last: &Morpheme) -> f64 {
        let mut feats = Vec::new();
        stop_features(last, &mut feats);
        self.sum(&feats)
    }
}

/// A disambiguated sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdResult {
    pub morphemes: Vec<Morpheme>,
    /// Chosen analysis index per token.
    pub choices: Vec<usize>,
    /// Tokens whose pruning constraint matched no analysis.
    pub fallback_tokens: Vec<usize>,
}

/// Highest-scoring path. Equal scores go to the earlier analysis,
/// deciding from the first token onwards.
pub fn md_decode(model: &MdModel, lattice: &SentenceLattice) -> Result<MdResult> {
    let tokens = lattice.tokens();
    if tokens.is_empty() {
        return Err(Error::Empty("lattice"));
    }
    let last_of = |a: &Analysis| a.morphemes().last().cloned().expect("analyses are nonempty");
    // suffix[t][a]: best score of tokens t.. given analysis a at t, not
    // counting the entry transition into a
    let mut suffix: Vec<Vec<f64>> = vec![Vec::new(); tokens.len()];
    for t in (0..tokens.len()).rev() {
        suffix[t] = tokens[t]
            .analyses()
            .iter()
            .map(|a| {
                let tail = if t + 1 == tokens.len() {
                    model.stop_score(&last_of(a))
                } else {
                    let last = last_of(a);
                    tokens[t + 1]
                        .analyses()
                        .iter()
                        .zip(&suffix[t + 1])
                        .map(|(b, s)| model.entry_score(Some(&last), b) + s)
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                model.internal_score(a) + tail
            })
            .collect();
    }
    let mut choices = Vec::with_capacity(tokens.len());
    let mut prev: Option<Morpheme> = None;
    for (t, token) in tokens.iter().enumerate() {
        let mut best = 0;
        let mut top = f64::NEG_INFINITY;
        for (i, a) in token.analyses().iter().enumerate() {
            let s = model.entry_score(prev.as_ref(), a) + suffix[t][i];
            if s > top {
                top = s;
                best = i;
            }
        }
        prev = Some(last_of(&token.analyses()[best]));
        choices.push(best);
    }
    Ok(MdResult {
        morphemes: lattice.path(&choices),
        choices,
        fallback_tokens: Vec::new(),
    })
}

/// Segmentation-first pipeline: analyze, then disambiguate.
pub fn md_standard(model: &MdModel, lexicon: &Lexicon, tokens: &[Token]) -> Result<MdResult> {
    md_decode(model, &analyze(tokens, lexicon)?)
}

/// Disambiguates after pruning each token's analyses to the length of
/// its multi-label.
pub fn md_hybrid_with_multilabels(
    model: &MdModel,
    lexicon: &Lexicon,
    tokens: &[Token],
    multilabels: &[MultiLabel],
) -> Result<MdResult> {
    let pruned = prune(&analyze(tokens, lexicon)?, multilabels)?;
    let mut result = md_decode(model, &pruned.lattice)?;
    result.fallback_tokens = pruned.fallback_tokens;
    Ok(result)
}

/// Hybrid pipeline: tag tokens with a multi-label model, prune the
/// lattice with the predicted lengths, then disambiguate.
pub fn md_hybrid(model: &MdModel, lexicon: &Lexicon, tokens: &[Token], ner: &ChainModel) -> Result<MdResult> {
    if ner.variant() != Variant::TokenMulti {
        return Err(Error::VariantMismatch {
            expected: Variant::TokenMulti.to_string(),
            found: ner.variant().to_string(),
        });
    }
    let sentence = Sentence::from_tokens(tokens.to_vec());
    let TagOutput::MultiLabels(multilabels) = ner.tag(&sentence)? else {
        unreachable!("token-multi models emit multi-labels")
    };
    md_hybrid_with_multilabels(model, lexicon, tokens, &multilabels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdTrainConfig {
    pub epochs: usize,
    pub seed: u64,
    pub averaged: bool,
}

impl Default for MdTrainConfig {
    fn default() -> Self {
        MdTrainConfig {
            epochs: 10,
            seed: 1,
            averaged: true,
        }
    }
}

/// Lattice for a training sentence, with each token's gold analysis
/// appended when the analyzer missed it. Returns the lattice and the
/// gold choices.
fn gold_lattice(sentence: &Sentence, lexicon: &Lexicon) -> Result<(SentenceLattice, Vec<usize>)> {
    let morphemes = sentence
        .morphemes
        .as_ref()
        .ok_or_else(|| Error::invalid("MD training sentence", "no gold morphemes"))?;
    let lattice = analyze(&sentence.tokens, lexicon)?;
    let groups = group_by_token(morphemes, sentence.tokens.len());
    let mut tokens = Vec::with_capacity(groups.len());
    let mut choices = Vec::with_capacity(groups.len());
    for (tl, gold) in lattice.tokens().iter().zip(groups) {
        if gold.is_empty() {
            return Err(Error::invalid(
                "MD training sentence",
                format!("token {} has no morphemes", tl.token_index),
            ));
        }
        let mut analyses = tl.analyses().to_vec();
        let pos = analyses.iter().position(|a| a.morphemes() == gold);
        let choice = match pos {
            Some(i) => i,
            None => {
                let segs: Vec<_> = gold
                    .iter()
                    .map(|m| crate::lattice::Segment::new(m.form.clone(), m.pos.clone()))
                    .collect();
                analyses.push(Analysis::from_segments(tl.token_index, &segs)?);
                analyses.len() - 1
            }
        };
        tokens.push(TokenLattice::new(tl.token_index, tl.surface.clone(), analyses)?);
        choices.push(choice);
    }
    Ok((SentenceLattice::new(tokens)?, choices))
}

/// Trains the path scorer with an averaged structured perceptron over
/// lattice decodes of gold-segmented sentences.
pub fn train_md(sentences: &[Sentence], lexicon: &Lexicon, config: &MdTrainConfig) -> Result<MdModel> {
    if config.epochs == 0 {
        return Err(Error::invalid("MD training config", "epochs must be at least 1"));
    }
    let data = sentences
        .iter()
        .filter(|s| !s.tokens.is_empty())
        .map(|s| gold_lattice(s, lexicon))
        .collect::<Result<Vec<_>>>()?;
    if data.is_empty() {
        return Err(Error::Empty("MD training corpus"));
    }
    let mut model = MdModel::new();
    let mut stamped: Vec<f64> = Vec::new();
    let mut step = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let (lattice, gold) = &data[k];
            let guess = md_decode(&model, lattice)?;
            if &guess.choices != gold {
                let gold_feats = path_features(&lattice.path(gold));
                let guess_feats = path_features(&guess.morphemes);
                let signed = gold_feats
                    .iter()
                    .map(|f| (f, 1.0))
                    .chain(guess_feats.iter().map(|f| (f, -1.0)));
                for (f, delta) in signed {
                    let id = model.intern(f);
                    if stamped.len() <= id {
                        stamped.resize(id + 1, 0.0);
                    }
                    model.weights[id] += delta;
                    stamped[id] += step * delta;
                }
            }
            step += 1.0;
        }
    }
    if config.averaged {
        stamped.resize(model.weights.len(), 0.0);
        for (w, s) in model.weights.iter_mut().zip(&stamped) {
            *w -= s / step;
        }
    }
    Ok(model)
}

pub const MD_MODEL_MAGIC: &str = "morphner-md-model";
pub const MD_MODEL_VERSION: u32 = 1;

pub fn write_md_model<W: Write>(model: &MdModel, mut out: W) -> Result<()> {
    writeln!(out, "{MD_MODEL_MAGIC}\t{MD_MODEL_VERSION}")?;
    let nonzero: Vec<(&str, f64)> = model.weights().filter(|(_, w)| *w != 0.0).collect();
    writeln!(out, "features\t{}", nonzero.len())?;
    for (f, w) in nonzero {
        writeln!(out, "{f}\t{w:?}")?;
    }
    Ok(())
}

pub fn read_md_model<R: BufRead>(input: R) -> Result<MdModel> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let version = header
        .strip_prefix(MD_MODEL_MAGIC)
        .and_then(|r| r.strip_prefix('\t'))
        .ok_or_else(|| Error::ModelFormat("not an MD model file".into()))?;
    if version != MD_MODEL_VERSION.to_string() {
        return Err(Error::ModelFormat(format!(
            "MD model version {version}, this build reads version {MD_MODEL_VERSION}"
        )));
    }
    let count_line = lines.next().transpose()?.unwrap_or_default();
    let count: usize = count_line
        .strip_prefix("features\t")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| Error::parse(2, "expected feature count"))?;
    let mut weights = Vec::with_capacity(count);
    for i in 0..count {
        let line = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::parse(i + 3, "unexpected end of MD model"))?;
        let (f, w) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(i + 3, "expected feature and weight"))?;
        let w: f64 = w
            .parse()
            .map_err(|_| Error::parse(i + 3, format!("bad weight {w:?}")))?;
        weights.push((f.to_string(), w));
    }
    MdModel::from_weights(weights)
}
