//! Line-based corpus, lexicon, lattice and dense-feature files.
//!
//! All formats are UTF-8, tab-separated, with a blank line between
//! sentences. Lines starting with `#` are comments unless noted.
//!
//! Token corpus: `FORM<TAB>LABEL`, where `LABEL` is a single label or a
//! `^`-joined multi-label. A bare `FORM` (or label `_`) marks an
//! unlabeled sentence. An optional `# variant: token-single` or
//! `# variant: token-multi` header fixes the label kind; otherwise any
//! `^` makes the corpus token-multi.
//!
//! Morpheme corpus: `FORM<TAB>LABEL<TAB>POS<TAB>TOKEN_ID`, with `_` for
//! an empty POS or a missing label and 1-based token ids.
//!
//! Lexicon: `SURFACE<TAB>form/POS+form/POS;form/POS` with one or more
//! analyses, and `@prefix<TAB>form/POS` for splittable prefixes.
//!
//! Lattice: `FROM<TAB>TO<TAB>FORM<TAB>POS<TAB>TOKEN_ID` per edge.
//!
//! Dense features: a `count dim` header followed by `FORM v1 ... vd`
//! rows separated by spaces.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::domain::{extract_mentions, Label, Morpheme, MultiLabel, Sentence, Token, TokenLabels};
use crate::error::{Error, Result};
use crate::labeling::{extend_to_token_label, gold_multilabels};
use crate::lattice::{Edge, Lexicon, Segment, SentenceLattice};
use crate::tagger::DenseFeatureTable;

const EMPTY: &str = "_";

/// A named corpus split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub name: String,
    pub sentences: Vec<Sentence>,
}

impl CorpusSplit {
    pub fn new(name: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invalid("split name", "empty"));
        }
        Ok(CorpusSplit { name, sentences })
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn split_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "corpus".to_string())
}

/// Non-comment lines grouped into blocks, with 1-based line numbers.
fn blocks<R: BufRead>(input: R, comments: bool) -> Result<(Vec<String>, Vec<Vec<(usize, String)>>)> {
    let mut header = Vec::new();
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line).to_string();
        if comments && line.starts_with('#') {
            header.push(line);
            continue;
        }
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else {
            current.push((i + 1, line));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    Ok((header, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Single,
    Multi,
}

fn declared_kind(header: &[String]) -> Result<Option<Kind>> {
    let mut kind = None;
    for line in header {
        let Some(v) = line.trim_start_matches('#').trim().strip_prefix("variant:") else {
            continue;
        };
        kind = Some(match v.trim() {
            "token-single" => Kind::Single,
            "token-multi" => Kind::Multi,
            other => return Err(Error::invalid("corpus variant", other.to_string())),
        });
    }
    Ok(kind)
}

pub fn parse_token_corpus<R: BufRead>(input: R, name: &str) -> Result<CorpusSplit> {
    let (header, blocks) = blocks(input, true)?;
    let declared = declared_kind(&header)?;
    let mut rows: Vec<Vec<(usize, String, Option<MultiLabel>)>> = Vec::new();
    let mut first_multi: Option<usize> = None;
    for block in blocks {
        let mut sentence = Vec::new();
        for (line_no, line) in block {
            let fields: Vec<&str> = line.split('\t').collect();
            let (form, label) = match fields.as_slice() {
                [form] => (*form, None),
                [form, l] if *l == EMPTY => (*form, None),
                [form, l] => {
                    let ml: MultiLabel = l.parse().map_err(|e| Error::parse(line_no, format!("{e}")))?;
                    (*form, Some(ml))
                }
                _ => {
                    return Err(Error::parse(
                        line_no,
                        format!("expected FORM<TAB>LABEL, found {} fields", fields.len()),
                    ))
                }
            };
            if let Some(ml) = &label {
                if ml.len() > 1 {
                    if declared == Some(Kind::Single) {
                        return Err(Error::parse(line_no, "multi-label in a token-single corpus"));
                    }
                    first_multi.get_or_insert(line_no);
                }
            }
            sentence.push((line_no, form.to_string(), label));
        }
        rows.push(sentence);
    }
    let kind = declared.unwrap_or(if first_multi.is_some() {
        Kind::Multi
    } else {
        Kind::Single
    });
    let mut sentences = Vec::with_capacity(rows.len());
    for rows in rows {
        let labeled = rows.iter().filter(|r| r.2.is_some()).count();
        if labeled != 0 && labeled != rows.len() {
            let line = rows.iter().find(|r| r.2.is_none()).map_or(0, |r| r.0);
            return Err(Error::parse(line, "unlabeled line in a labeled sentence"));
        }
        let mut tokens = Vec::with_capacity(rows.len());
        for (i, (line_no, form, _)) in rows.iter().enumerate() {
            tokens.push(Token::new(form.as_str(), i).map_err(|e| Error::parse(*line_no, e.to_string()))?);
        }
        let mut sentence = Sentence::from_tokens(tokens);
        if labeled > 0 {
            let labels: Vec<MultiLabel> = rows.into_iter().filter_map(|r| r.2).collect();
            sentence.token_labels = Some(match kind {
                Kind::Multi => TokenLabels::Multi(labels),
                Kind::Single => TokenLabels::Single(labels.into_iter().map(|m| m.labels()[0].clone()).collect()),
            });
        }
        sentences.push(sentence);
    }
    CorpusSplit::new(name, sentences)
}

pub fn read_token_corpus(path: &Path) -> Result<CorpusSplit> {
    parse_token_corpus(open(path)?, &split_name(path))
}

pub fn write_token_corpus<W: Write>(split: &CorpusSplit, mut out: W) -> Result<()> {
    let mut kind = None;
    for s in &split.sentences {
        let k = match &s.token_labels {
            Some(TokenLabels::Single(_)) => Kind::Single,
            Some(TokenLabels::Multi(_)) => Kind::Multi,
            None => continue,
        };
        if kind.is_some_and(|prev| prev != k) {
            return Err(Error::invalid("token corpus", "mixes single and multi labels"));
        }
        kind = Some(k);
    }
    match kind {
        Some(Kind::Single) => writeln!(out, "# variant: token-single")?,
        Some(Kind::Multi) => writeln!(out, "# variant: token-multi")?,
        None => {}
    }
    for (i, s) in split.sentences.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        for (t, token) in s.tokens.iter().enumerate() {
            match &s.token_labels {
                Some(TokenLabels::Single(ls)) => writeln!(out, "{}\t{}", token.form, label_at(ls, t)?)?,
                Some(TokenLabels::Multi(ms)) => writeln!(out, "{}\t{}", token.form, label_at(ms, t)?)?,
                None => writeln!(out, "{}", token.form)?,
            }
        }
    }
    Ok(())
}

fn label_at<T>(labels: &[T], i: usize) -> Result<&T> {
    labels.get(i).ok_or(Error::LengthMismatch {
        left: labels.len(),
        right: i + 1,
        context: "labels vs tokens",
    })
}

pub fn parse_morpheme_corpus<R: BufRead>(input: R, name: &str) -> Result<CorpusSplit> {
    let (_, blocks) = blocks(input, true)?;
    let mut sentences = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut morphemes = Vec::with_capacity(block.len());
        let mut labels = Vec::with_capacity(block.len());
        let mut unlabeled = 0;
        let mut prev_token = 0usize;
        let mut slot = 0;
        for (line_no, line) in &block {
            let line_no = *line_no;
            let fields: Vec<&str> = line.split('\t').collect();
            let [form, label, pos, token_id] = fields.as_slice() else {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "expected FORM<TAB>LABEL<TAB>POS<TAB>TOKEN_ID, found {} fields",
                        fields.len()
                    ),
                ));
            };
            let id: usize = token_id
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad token id {token_id:?}")))?;
            if id == 0 {
                return Err(Error::parse(line_no, "token ids are 1-based"));
            }
            if id < prev_token {
                return Err(Error::parse(
                    line_no,
                    format!("token id decreases from {prev_token} to {id}"),
                ));
            }
            if id > prev_token + 1 {
                return Err(Error::parse(
                    line_no,
                    format!("token id jumps from {prev_token} to {id}"),
                ));
            }
            if id == prev_token {
                slot += 1;
            } else {
                slot = 0;
            }
            prev_token = id;
            let pos = if *pos == EMPTY { "" } else { pos };
            morphemes.push(Morpheme::new(*form, pos, id - 1, slot).map_err(|e| Error::parse(line_no, e.to_string()))?);
            if *label == EMPTY {
                unlabeled += 1;
            } else {
                labels.push(
                    label
                        .parse::<Label>()
                        .map_err(|e| Error::parse(line_no, e.to_string()))?,
                );
            }
        }
        if unlabeled != 0 && unlabeled != block.len() {
            return Err(Error::parse(
                block[0].0,
                "sentence mixes labeled and unlabeled morphemes",
            ));
        }
        sentences.push(Sentence {
            morphemes: Some(morphemes),
            morpheme_labels: (unlabeled == 0).then_some(labels),
            ..Default::default()
        });
    }
    CorpusSplit::new(name, sentences)
}

pub fn read_morpheme_corpus(path: &Path) -> Result<CorpusSplit> {
    parse_morpheme_corpus(open(path)?, &split_name(path))
}

/// Writes morphemes with optional labels; missing labels are written as `_`.
pub fn write_morphemes<W: Write>(mut out: W, morphemes: &[Morpheme], labels: Option<&[Label]>) -> Result<()> {
    if let Some(ls) = labels {
        if ls.len() != morphemes.len() {
            return Err(Error::LengthMismatch {
                left: ls.len(),
                right: morphemes.len(),
                context: "morpheme labels vs morphemes",
            });
        }
    }
    for (i, m) in morphemes.iter().enumerate() {
        let label = labels.map_or(EMPTY.to_string(), |ls| ls[i].to_string());
        let pos = if m.pos.is_empty() { EMPTY } else { &m.pos };
        writeln!(out, "{}\t{label}\t{pos}\t{}", m.form, m.token_index + 1)?;
    }
    Ok(())
}

pub fn write_morpheme_corpus<W: Write>(split: &CorpusSplit, mut out: W) -> Result<()> {
    for (i, s) in split.sentences.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        let morphemes = s
            .morphemes
            .as_deref()
            .ok_or_else(|| Error::invalid("morpheme corpus", format!("sentence {} has no morphemes", i + 1)))?;
        write_morphemes(&mut out, morphemes, s.morpheme_labels.as_deref())?;
    }
    Ok(())
}

/// Combines parallel token and morpheme files into one split.
pub fn merge_parallel(tokens: &CorpusSplit, morphemes: &CorpusSplit) -> Result<CorpusSplit> {
    if tokens.sentences.len() != morphemes.sentences.len() {
        return Err(Error::LengthMismatch {
            left: tokens.sentences.len(),
            right: morphemes.sentences.len(),
            context: "token vs morpheme sentences",
        });
    }
    let mut out = Vec::with_capacity(tokens.sentences.len());
    for (i, (t, m)) in tokens.sentences.iter().zip(&morphemes.sentences).enumerate() {
        if t.tokens.len() != m.token_count() {
            return Err(Error::invalid(
                "parallel corpus",
                format!(
                    "sentence {}: {} tokens vs {} in the morpheme file",
                    i + 1,
                    t.tokens.len(),
                    m.token_count()
                ),
            ));
        }
        out.push(Sentence {
            tokens: t.tokens.clone(),
            token_labels: t.token_labels.clone(),
            morphemes: m.morphemes.clone(),
            morpheme_labels: m.morpheme_labels.clone(),
        });
    }
    CorpusSplit::new(tokens.name.clone(), out)
}

fn parse_segment(text: &str) -> Option<Segment> {
    let (form, pos) = text.rsplit_once('/')?;
    (!form.is_empty()).then(|| Segment::new(form, pos))
}

fn parse_analysis(text: &str) -> Option<Vec<Segment>> {
    text.split('+').map(parse_segment).collect()
}

pub fn parse_lexicon<R: BufRead>(input: R) -> Result<Lexicon> {
    let mut lex = Lexicon::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (surface, rest) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(line_no, "expected SURFACE<TAB>analyses"))?;
        if surface == "@prefix" {
            let seg = parse_segment(rest).ok_or_else(|| Error::parse(line_no, format!("bad prefix {rest:?}")))?;
            lex.add_prefix(seg);
            continue;
        }
        for analysis in rest.split(';') {
            let segs =
                parse_analysis(analysis).ok_or_else(|| Error::parse(line_no, format!("bad analysis {analysis:?}")))?;
            lex.add(surface, segs)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
    }
    Ok(lex)
}

pub fn read_lexicon(path: &Path) -> Result<Lexicon> {
    parse_lexicon(open(path)?)
}

pub fn write_lexicon<W: Write>(lex: &Lexicon, mut out: W) -> Result<()> {
    let fmt = |segs: &[Segment]| {
        segs.iter()
            .map(|s| format!("{}/{}", s.form, s.pos))
            .collect::<Vec<_>>()
            .join("+")
    };
    for p in lex.prefixes() {
        writeln!(out, "@prefix\t{}", fmt(std::slice::from_ref(p)))?;
    }
    for (surface, analyses) in lex.entries() {
        let all: Vec<String> = analyses.iter().map(|a| fmt(a)).collect();
        writeln!(out, "{surface}\t{}", all.join(";"))?;
    }
    Ok(())
}

pub fn parse_lattices<R: BufRead>(input: R) -> Result<Vec<SentenceLattice>> {
    let (_, blocks) = blocks(input, true)?;
    let mut out = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut edges = Vec::with_capacity(block.len());
        for (line_no, line) in &block {
            let fields: Vec<&str> = line.split('\t').collect();
            let [from, to, form, pos, token_id] = fields.as_slice() else {
                return Err(Error::parse(
                    *line_no,
                    format!("expected 5 fields, found {}", fields.len()),
                ));
            };
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(*line_no, format!("bad number {s:?}")))
            };
            let (from, to, id) = (num(from)?, num(to)?, num(token_id)?);
            if id == 0 {
                return Err(Error::parse(*line_no, "token ids are 1-based"));
            }
            let pos = if *pos == EMPTY { "" } else { pos };
            let morpheme = Morpheme::new(*form, pos, id - 1, 0).map_err(|e| Error::parse(*line_no, e.to_string()))?;
            edges.push(Edge { from, to, morpheme });
        }
        out.push(SentenceLattice::from_edges(&edges).map_err(|e| Error::parse(block[0].0, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_lattices(path: &Path) -> Result<Vec<SentenceLattice>> {
    parse_lattices(open(path)?)
}

pub fn write_lattices<W: Write>(lattices: &[SentenceLattice], mut out: W) -> Result<()> {
    for (i, lattice) in lattices.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        for e in lattice.edges() {
            let m = &e.morpheme;
            let pos = if m.pos.is_empty() { EMPTY } else { &m.pos };
            writeln!(out, "{}\t{}\t{}\t{pos}\t{}", e.from, e.to, m.form, m.token_index + 1)?;
        }
    }
    Ok(())
}

pub fn parse_dense_features<R: BufRead>(input: R) -> Result<DenseFeatureTable> {
    let mut lines = input.lines().enumerate();
    let (count, dim) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::parse(1, "missing \"count dim\" header"));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
                (Ok(c), Ok(d)) if d > 0 => break (c, d),
                _ => return Err(Error::parse(i + 1, format!("bad header {line:?}"))),
            },
            _ => return Err(Error::parse(i + 1, format!("bad header {line:?}"))),
        }
    };
    let mut table = DenseFeatureTable::new(dim);
    let mut last = 1;
    for (i, line) in lines {
        let line = line?;
        last = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ').filter(|s| !s.is_empty());
        let form = parts.next().unwrap_or_default();
        let values = parts
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, format!("bad number {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                i + 1,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        table
            .insert(form, values)
            .map_err(|e| Error::parse(i + 1, e.to_string()))?;
    }
    if table.len() != count {
        return Err(Error::parse(
            last,
            format!("header announces {count} rows, found {}", table.len()),
        ));
    }
    Ok(table)
}

pub fn read_dense_features(path: &Path) -> Result<DenseFeatureTable> {
    parse_dense_features(open(path)?)
}

/// Corpus counts and parallel-consistency findings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub morphemes: usize,
    pub token_mentions: BTreeMap<String, usize>,
    pub morpheme_mentions: BTreeMap<String, usize>,
    /// `(1-based sentence id, description)` for every inconsistent pair.
    pub mismatches: Vec<(usize, String)>,
}

impl CorpusStats {
    pub fn consistent_fraction(&self) -> f64 {
        if self.sentences == 0 {
            return 1.0;
        }
        1.0 - self.mismatches.len() as f64 / self.sentences as f64
    }
}

/// Counts a parallel split and checks that the morpheme labels, grouped
/// and collapsed per token, reproduce the token labels.
pub fn validate_corpus(tokens: &CorpusSplit, morphemes: &CorpusSplit) -> Result<CorpusStats> {
    if tokens.sentences.len() != morphemes.sentences.len() {
        return Err(Error::LengthMismatch {
            left: tokens.sentences.len(),
            right: morphemes.sentences.len(),
            context: "token vs morpheme sentences",
        });
    }
    let mut stats = CorpusStats {
        sentences: tokens.sentences.len(),
        ..Default::default()
    };
    for (i, (t, m)) in tokens.sentences.iter().zip(&morphemes.sentences).enumerate() {
        let id = i + 1;
        stats.tokens += t.tokens.len();
        let ms = m.morphemes.as_deref().unwrap_or_default();
        stats.morphemes += ms.len();
        let forms = t.token_forms();
        let token_labels: Option<Vec<Label>> = match &t.token_labels {
            Some(TokenLabels::Single(ls)) => Some(ls.clone()),
            Some(TokenLabels::Multi(mls)) => Some(mls.iter().map(extend_to_token_label).collect::<Result<_>>()?),
            None => None,
        };
        if let Some(ls) = &token_labels {
            for mention in extract_mentions(ls, &forms)? {
                *stats.token_mentions.entry(mention.category.to_string()).or_default() += 1;
            }
        }
        if let Some(ls) = &m.morpheme_labels {
            let mforms: Vec<&str> = ms.iter().map(|x| x.form.as_str()).collect();
            for mention in extract_mentions(ls, &mforms)? {
                *stats.morpheme_mentions.entry(mention.category.to_string()).or_default() += 1;
            }
        }
        if m.token_count() != t.tokens.len() {
            stats.mismatches.push((
                id,
                format!("{} tokens vs {} in the morpheme file", t.tokens.len(), m.token_count()),
            ));
            continue;
        }
        let (Some(expected), Some(_)) = (&t.token_labels, &m.morpheme_labels) else {
            continue;
        };
        let grouped = match gold_multilabels(m) {
            Ok(g) => g,
            Err(e) => {
                stats.mismatches.push((id, e.to_string()));
                continue;
            }
        };
        let diff = match expected {
            TokenLabels::Multi(mls) => first_diff(mls, &grouped),
            TokenLabels::Single(ls) => {
                let collapsed = grouped.iter().map(extend_to_token_label).collect::<Result<Vec<_>>>()?;
                first_diff(ls, &collapsed)
            }
        };
        if let Some((t_idx, want, got)) = diff {
            stats.mismatches.push((
                id,
                format!(
                    "token {} ({}): token label {want}, morpheme labels give {got}",
                    t_idx + 1,
                    forms[t_idx]
                ),
            ));
        }
    }
    Ok(stats)
}

fn first_diff<T: PartialEq + ToString>(a: &[T], b: &[T]) -> Option<(usize, String, String)> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x != y)
        .map(|i| (i, a[i].to_string(), b[i].to_string()))
}
