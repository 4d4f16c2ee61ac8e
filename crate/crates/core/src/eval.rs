//! Form-anchored evaluation.
//!
//! Mentions are compared by surface form and category, never by
//! position, so predictions at one granularity can be scored against
//! gold at another. Duplicate mentions in a sentence are matched as a
//! multiset.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::domain::{extract_mentions, group_by_token, Label, Mention, Morpheme, MultiLabel, Sentence, TokenLabels};
use crate::error::{Error, Result};
use crate::labeling::{align_multilabel_to_morphemes, extend_to_token_label, gold_token_labels};

/// Raw mention counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub gold: usize,
    pub predicted: usize,
    pub matched: usize,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.gold += other.gold;
        self.predicted += other.predicted;
        self.matched += other.matched;
    }

    /// Precision, recall and F1 as percentages. A zero denominator gives
    /// zero.
    pub fn scores(&self) -> (f64, f64, f64) {
        let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        let p = pct(self.matched, self.predicted);
        let r = pct(self.matched, self.gold);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        (p, r, f)
    }
}

/// Micro-averaged precision, recall and F1 (percentages) with a
/// per-category breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
    pub per_category: BTreeMap<String, Counts>,
}

impl EvalReport {
    pub fn from_counts(counts: Counts, per_category: BTreeMap<String, Counts>) -> Self {
        let (precision, recall, f1) = counts.scores();
        EvalReport {
            precision,
            recall,
            f1,
            counts,
            per_category,
        }
    }

    /// Machine-readable `metric<TAB>category<TAB>value` lines; the
    /// overall scores use category `ALL`.
    pub fn key_values(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |cat: &str, c: &Counts| {
            let (p, r, f) = c.scores();
            out.push(format!("{prefix}precision\t{cat}\t{p:.2}"));
            out.push(format!("{prefix}recall\t{cat}\t{r:.2}"));
            out.push(format!("{prefix}f1\t{cat}\t{f:.2}"));
            out.push(format!("{prefix}gold\t{cat}\t{}", c.gold));
            out.push(format!("{prefix}predicted\t{cat}\t{}", c.predicted));
            out.push(format!("{prefix}matched\t{cat}\t{}", c.matched));
        };
        push("ALL", &self.counts);
        for (cat, c) in &self.per_category {
            push(cat, c);
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:>9} {:>9} {:>9} {:>7} {:>7} {:>7}",
            "category", "precision", "recall", "f1", "gold", "pred", "match"
        )?;
        let mut row = |name: &str, c: &Counts| {
            let (p, r, f1) = c.scores();
            writeln!(
                f,
                "{:<10} {:>9.2} {:>9.2} {:>9.2} {:>7} {:>7} {:>7}",
                name, p, r, f1, c.gold, c.predicted, c.matched
            )
        };
        for (cat, c) in &self.per_category {
            row(cat, c)?;
        }
        row("ALL", &self.counts)
    }
}

fn match_sentence(gold: &[Mention], pred: &[Mention], total: &mut Counts, per_cat: &mut BTreeMap<String, Counts>) {
    let mut available: HashMap<&Mention, usize> = HashMap::new();
    for g in gold {
        *available.entry(g).or_default() += 1;
        per_cat.entry(g.category.to_string()).or_default().gold += 1;
    }
    total.gold += gold.len();
    total.predicted += pred.len();
    for p in pred {
        let entry = per_cat.entry(p.category.to_string()).or_default();
        entry.predicted += 1;
        if let Some(n) = available.get_mut(p) {
            if *n > 0 {
                *n -= 1;
                entry.matched += 1;
                total.matched += 1;
            }
        }
    }
}

/// Strict form-anchored F1 over per-sentence mention multisets.
pub fn mention_f1(gold: &[Vec<Mention>], pred: &[Vec<Mention>]) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
            context: "gold vs predicted sentences",
        });
    }
    let mut total = Counts::default();
    let mut per_cat = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        match_sentence(g, p, &mut total, &mut per_cat);
    }
    Ok(EvalReport::from_counts(total, per_cat))
}

/// Inter-annotator agreement: mention F1 with `a` as gold.
pub fn iaa(a: &[Vec<Mention>], b: &[Vec<Mention>]) -> Result<EvalReport> {
    mention_f1(a, b)
}

/// Model output for one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prediction {
    TokenSingle(Vec<Label>),
    TokenMulti(Vec<MultiLabel>),
    /// Labels over a (gold or predicted) segmentation; the morphemes'
    /// token indices tie them back to tokens.
    Morpheme {
        morphemes: Vec<Morpheme>,
        labels: Vec<Label>,
    },
}

/// Gold mentions over token forms.
pub fn token_gold_mentions(gold: &Sentence) -> Result<Vec<Mention>> {
    let labels = match &gold.token_labels {
        Some(TokenLabels::Single(ls)) => ls.clone(),
        Some(TokenLabels::Multi(ms)) => ms.iter().map(extend_to_token_label).collect::<Result<_>>()?,
        None => gold_token_labels(gold)?,
    };
    extract_mentions(&labels, &gold.token_forms())
}

/// Gold mentions over gold morpheme forms.
pub fn morph_gold_mentions(gold: &Sentence) -> Result<Vec<Mention>> {
    let (Some(morphemes), Some(labels)) = (&gold.morphemes, &gold.morpheme_labels) else {
        return Err(Error::invalid("gold sentence", "no labeled morphemes"));
    };
    let forms: Vec<&str> = morphemes.iter().map(|m| m.form.as_str()).collect();
    extract_mentions(labels, &forms)
}

/// Predicted mentions over token forms. Morpheme predictions are
/// collapsed per token first.
pub fn token_level_mentions(pred: &Prediction, token_forms: &[&str]) -> Result<Vec<Mention>> {
    let labels: Vec<Label> = match pred {
        Prediction::TokenSingle(ls) => ls.clone(),
        Prediction::TokenMulti(ms) => ms.iter().map(extend_to_token_label).collect::<Result<_>>()?,
        Prediction::Morpheme { morphemes, labels } => {
            if morphemes.len() != labels.len() {
                return Err(Error::LengthMismatch {
                    left: labels.len(),
                    right: morphemes.len(),
                    context: "morpheme labels vs morphemes",
                });
            }
            let mut per_token: Vec<Vec<Label>> = vec![Vec::new(); token_forms.len()];
            for (m, l) in morphemes.iter().zip(labels) {
                per_token
                    .get_mut(m.token_index)
                    .ok_or_else(|| {
                        Error::invalid(
                            "morpheme alignment",
                            format!("token index {} out of range", m.token_index),
                        )
                    })?
                    .push(l.clone());
            }
            per_token
                .into_iter()
                .enumerate()
                .map(|(t, ls)| {
                    let ml = MultiLabel::new(ls)
                        .map_err(|_| Error::invalid("morpheme alignment", format!("no morphemes for token {t}")))?;
                    extend_to_token_label(&ml)
                })
                .collect::<Result<_>>()?
        }
    };
    extract_mentions(&labels, token_forms)
}

/// Predicted mentions over morpheme forms. Token multi-labels are
/// aligned to `morphemes` (gold, standard or hybrid segmentation), which
/// is required for that variant; token-single predictions are read over
/// token forms.
pub fn morph_level_mentions(
    pred: &Prediction,
    token_forms: &[&str],
    morphemes: Option<&[Morpheme]>,
) -> Result<Vec<Mention>> {
    match pred {
        Prediction::TokenSingle(ls) => extract_mentions(ls, token_forms),
        Prediction::Morpheme { morphemes, labels } => {
            let forms: Vec<&str> = morphemes.iter().map(|m| m.form.as_str()).collect();
            extract_mentions(labels, &forms)
        }
        Prediction::TokenMulti(ms) => {
            let morphemes =
                morphemes.ok_or_else(|| Error::invalid("token-multi evaluation", "a morpheme sequence is required"))?;
            let groups = group_by_token(morphemes, ms.len());
            let covered: usize = groups.iter().map(|g| g.len()).sum();
            if covered != morphemes.len() {
                return Err(Error::invalid(
                    "token-multi evaluation",
                    "morphemes do not cover the tokens in order",
                ));
            }
            let mut forms = Vec::with_capacity(morphemes.len());
            let mut labels = Vec::with_capacity(morphemes.len());
            for (ml, group) in ms.iter().zip(groups) {
                let group_forms: Vec<&str> = group.iter().map(|m| m.form.as_str()).collect();
                for (form, label) in align_multilabel_to_morphemes(ml, &group_forms) {
                    forms.push(form);
                    labels.push(label);
                }
            }
            extract_mentions(&labels, &forms)
        }
    }
}

fn check_sentences(gold: &[Sentence], preds: &[Prediction]) -> Result<()> {
    if gold.len() != preds.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: preds.len(),
            context: "gold vs predicted sentences",
        });
    }
    Ok(())
}

/// Token-level evaluation against token gold.
pub fn eval_token_level(gold: &[Sentence], preds: &[Prediction]) -> Result<EvalReport> {
    check_sentences(gold, preds)?;
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(gold.len());
    for (s, pred) in gold.iter().zip(preds) {
        g.push(token_gold_mentions(s)?);
        p.push(token_level_mentions(pred, &s.token_forms())?);
    }
    mention_f1(&g, &p)
}

/// Morpheme-level evaluation against gold morpheme mentions.
/// `morphemes` supplies, per sentence, the segmentation that token-multi
/// predictions are aligned to.
pub fn eval_morph_level(
    gold: &[Sentence],
    preds: &[Prediction],
    morphemes: Option<&[Vec<Morpheme>]>,
) -> Result<EvalReport> {
    check_sentences(gold, preds)?;
    if let Some(ms) = morphemes {
        if ms.len() != gold.len() {
            return Err(Error::LengthMismatch {
                left: ms.len(),
                right: gold.len(),
                context: "segmentations vs sentences",
            });
        }
    }
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(gold.len());
    for (i, (s, pred)) in gold.iter().zip(preds).enumerate() {
        g.push(morph_gold_mentions(s)?);
        let seg = morphemes.map(|ms| ms[i].as_slice());
        p.push(morph_level_mentions(pred, &s.token_forms(), seg)?);
    }
    mention_f1(&g, &p)
}

/// Segmentation scores with and without POS.
#[derive(Debug, Clone, PartialEq)]
pub struct SegPosReport {
    pub seg: EvalReport,
    pub seg_pos: EvalReport,
}

/// Per-token multiset overlap of morpheme forms (`seg`) and of
/// form-POS pairs (`seg_pos`), micro-averaged over all sentences.
pub fn seg_pos_f1(gold: &[Vec<Morpheme>], pred: &[Vec<Morpheme>]) -> Result<SegPosReport> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
            context: "gold vs predicted sentences",
        });
    }
    let mut seg = Counts::default();
    let mut seg_pos = Counts::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let tokens = |ms: &[Morpheme]| ms.last().map_or(0, |m| m.token_index + 1);
        let (gt, pt) = (tokens(g), tokens(p));
        let gg = group_by_token(g, gt);
        let pg = group_by_token(p, pt);
        let covered = |groups: &[&[Morpheme]], ms: &[Morpheme]| {
            groups.iter().all(|x| !x.is_empty()) && groups.iter().map(|x| x.len()).sum::<usize>() == ms.len()
        };
        if gt != pt || !covered(&gg, g) || !covered(&pg, p) {
            return Err(Error::invalid(
                "segmentation",
                format!("sentence {} token coverage differs", i + 1),
            ));
        }
        for (gm, pm) in gg.iter().zip(&pg) {
            seg.add(overlap(
                gm.iter().map(|m| (m.form.as_str(), "")),
                pm.iter().map(|m| (m.form.as_str(), "")),
            ));
            seg_pos.add(overlap(
                gm.iter().map(|m| (m.form.as_str(), m.pos.as_str())),
                pm.iter().map(|m| (m.form.as_str(), m.pos.as_str())),
            ));
        }
    }
    Ok(SegPosReport {
        seg: EvalReport::from_counts(seg, BTreeMap::new()),
        seg_pos: EvalReport::from_counts(seg_pos, BTreeMap::new()),
    })
}

fn overlap<'a>(
    gold: impl Iterator<Item = (&'a str, &'a str)>,
    pred: impl Iterator<Item = (&'a str, &'a str)>,
) -> Counts {
    let mut available: HashMap<(&str, &str), usize> = HashMap::new();
    let mut c = Counts::default();
    for g in gold {
        *available.entry(g).or_default() += 1;
        c.gold += 1;
    }
    for p in pred {
        c.predicted += 1;
        if let Some(n) = available.get_mut(&p) {
            if *n > 0 {
                *n -= 1;
                c.matched += 1;
            }
        }
    }
    c
}

/// Out-of-training-vocabulary class of a mention, ordered from easiest
/// to hardest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OotvCategory {
    /// Every token was seen in training.
    Known,
    /// An unseen token made of a single morpheme.
    Lexical,
    /// An unseen token made of several seen morphemes.
    Compositional,
    /// An unseen token made of several morphemes, at least one unseen.
    LexComp,
}

impl OotvCategory {
    pub const ALL: [OotvCategory; 4] = [
        OotvCategory::Known,
        OotvCategory::Lexical,
        OotvCategory::Compositional,
        OotvCategory::LexComp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OotvCategory::Known => "Known",
            OotvCategory::Lexical => "Lexical",
            OotvCategory::Compositional => "Compositional",
            OotvCategory::LexComp => "LexComp",
        }
    }
}

impl fmt::Display for OotvCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Token and morpheme forms seen in training.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainVocab {
    pub tokens: HashSet<String>,
    pub morphemes: HashSet<String>,
}

impl TrainVocab {
    pub fn from_sentences(sentences: &[Sentence]) -> Self {
        let mut v = TrainVocab::default();
        for s in sentences {
            v.tokens.extend(s.tokens.iter().map(|t| t.form.clone()));
            if let Some(ms) = &s.morphemes {
                v.morphemes.extend(ms.iter().map(|m| m.form.clone()));
            }
        }
        v
    }
}

/// Classifies a mention from the tokens it covers and their gold
/// morphemes. A mention with several unseen tokens takes the hardest of
/// their classes.
pub fn ootv_categorize(tokens: &[(&str, &[Morpheme])], vocab: &TrainVocab) -> Result<OotvCategory> {
    let mut category = OotvCategory::Known;
    for (form, morphemes) in tokens {
        if morphemes.is_empty() {
            return Err(Error::invalid(
                "OOTV categorization",
                format!("no morphology for token {form:?}"),
            ));
        }
        if vocab.tokens.contains(*form) {
            continue;
        }
        let this = if morphemes.len() == 1 {
            OotvCategory::Lexical
        } else if morphemes.iter().all(|m| vocab.morphemes.contains(&m.form)) {
            OotvCategory::Compositional
        } else {
            OotvCategory::LexComp
        };
        category = category.max(this);
    }
    Ok(category)
}

/// Classifies a token-level mention of `sentence` via its unit span.
pub fn categorize_mention(mention: &Mention, sentence: &Sentence, vocab: &TrainVocab) -> Result<OotvCategory> {
    let groups = sentence
        .morphemes_by_token()
        .ok_or_else(|| Error::invalid("OOTV categorization", "sentence has no morphology"))?;
    let (start, end) = mention.unit_span;
    if end >= sentence.tokens.len() || start > end {
        return Err(Error::invalid("mention span", format!("[{start}, {end}]")));
    }
    let tokens: Vec<(&str, &[Morpheme])> = (start..=end)
        .map(|t| (sentence.tokens[t].form.as_str(), groups[t]))
        .collect();
    ootv_categorize(&tokens, vocab)
}

/// Number of gold token-level mentions per OOTV class.
pub fn ootv_counts(gold: &[Sentence], vocab: &TrainVocab) -> Result<BTreeMap<OotvCategory, usize>> {
    let mut counts = BTreeMap::new();
    for s in gold {
        for m in token_gold_mentions(s)? {
            *counts.entry(categorize_mention(&m, s, vocab)?).or_default() += 1;
        }
    }
    Ok(counts)
}

/// Token-level scores per OOTV class. A matched prediction is credited
/// to the class of the gold mention it matches; an unmatched prediction
/// counts against the class of its own tokens.
pub fn ootv_breakdown(
    gold: &[Sentence],
    preds: &[Prediction],
    vocab: &TrainVocab,
) -> Result<BTreeMap<OotvCategory, EvalReport>> {
    check_sentences(gold, preds)?;
    let mut groups: BTreeMap<OotvCategory, (Counts, BTreeMap<String, Counts>)> = BTreeMap::new();
    for (s, pred) in gold.iter().zip(preds) {
        let gold_mentions = token_gold_mentions(s)?;
        let classes = gold_mentions
            .iter()
            .map(|m| categorize_mention(m, s, vocab))
            .collect::<Result<Vec<_>>>()?;
        for (m, c) in gold_mentions.iter().zip(&classes) {
            let (total, per_cat) = groups.entry(*c).or_default();
            total.gold += 1;
            per_cat.entry(m.category.to_string()).or_default().gold += 1;
        }
        let mut used = vec![false; gold_mentions.len()];
        for p in token_level_mentions(pred, &s.token_forms())? {
            let hit = (0..gold_mentions.len()).find(|&i| !used[i] && gold_mentions[i] == p);
            let class = match hit {
                Some(i) => {
                    used[i] = true;
                    classes[i]
                }
                None => categorize_mention(&p, s, vocab)?,
            };
            let (total, per_cat) = groups.entry(class).or_default();
            let entry = per_cat.entry(p.category.to_string()).or_default();
            total.predicted += 1;
            entry.predicted += 1;
            if hit.is_some() {
                total.matched += 1;
                entry.matched += 1;
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|(k, (c, per))| (k, EvalReport::from_counts(c, per)))
        .collect())
}
