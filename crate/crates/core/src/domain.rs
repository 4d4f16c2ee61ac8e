//! Tokens, morphemes, BIOSE labels and form-anchored mentions.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Entity type code such as `PER` or `ORG`.
///
/// The set of categories is open: any nonempty uppercase ASCII code is
/// accepted, so corpora with different inventories load without changes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityCategory(String);

impl EntityCategory {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let valid = !code.is_empty()
            && code.starts_with(|c: char| c.is_ascii_uppercase())
            && code.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit());
        if valid {
            Ok(EntityCategory(code))
        } else {
            Err(Error::InvalidCategory(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Span-boundary part of a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    O,
    B,
    I,
    S,
    E,
}

impl Boundary {
    pub const ALL: [Boundary; 5] = [Boundary::O, Boundary::B, Boundary::I, Boundary::S, Boundary::E];

    pub fn as_char(self) -> char {
        match self {
            Boundary::O => 'O',
            Boundary::B => 'B',
            Boundary::I => 'I',
            Boundary::S => 'S',
            Boundary::E => 'E',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'O' => Ok(Boundary::O),
            'B' => Ok(Boundary::B),
            'I' => Ok(Boundary::I),
            'S' => Ok(Boundary::S),
            'E' => Ok(Boundary::E),
            other => Err(Error::InvalidBioseChar(other)),
        }
    }
}

/// A BIOSE tag, carrying an entity category unless it is `O`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    boundary: Boundary,
    category: Option<EntityCategory>,
}

impl Label {
    pub fn outside() -> Self {
        Label {
            boundary: Boundary::O,
            category: None,
        }
    }

    /// Builds an entity label. `boundary` must not be `O`.
    pub fn entity(boundary: Boundary, category: EntityCategory) -> Result<Self> {
        if boundary == Boundary::O {
            return Err(Error::InvalidLabel(format!("O-{category}")));
        }
        Ok(Label {
            boundary,
            category: Some(category),
        })
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn category(&self) -> Option<&EntityCategory> {
        self.category.as_ref()
    }

    pub fn is_outside(&self) -> bool {
        self.boundary == Boundary::O
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.category {
            None => f.write_str("O"),
            Some(cat) => write!(f, "{}-{}", self.boundary.as_char(), cat),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    /// Accepts `O` and `<B|I|S|E>-<CATEGORY>`; `_` is also accepted as the
    /// separator.
    fn from_str(text: &str) -> Result<Self> {
        if text == "O" {
            return Ok(Label::outside());
        }
        let bad = || Error::InvalidLabel(text.to_string());
        let mut chars = text.chars();
        let boundary = chars.next().ok_or_else(bad)?;
        let sep = chars.next().ok_or_else(bad)?;
        if sep != '-' && sep != '_' {
            return Err(bad());
        }
        let boundary = match boundary {
            'B' | 'I' | 'S' | 'E' => Boundary::from_char(boundary).map_err(|_| bad())?,
            _ => return Err(bad()),
        };
        let category = EntityCategory::new(chars.as_str()).map_err(|_| bad())?;
        Label::entity(boundary, category)
    }
}

/// Parses a label, reporting the offending string on failure.
pub fn parse_label(text: &str) -> Result<Label> {
    text.parse()
}

/// Ordered labels of one token's morphemes. Written `O^B-ORG^I-ORG`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiLabel(Vec<Label>);

impl MultiLabel {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("multi-label"));
        }
        Ok(MultiLabel(labels))
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Label> for MultiLabel {
    fn from(label: Label) -> Self {
        MultiLabel(vec![label])
    }
}

impl fmt::Display for MultiLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, label) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("^")?;
            }
            write!(f, "{label}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiLabel {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let labels = text.split('^').map(str::parse).collect::<Result<Vec<Label>>>()?;
        MultiLabel::new(labels)
    }
}

fn check_form(form: &str, what: &'static str) -> Result<()> {
    if form.is_empty() || form.chars().any(char::is_whitespace) {
        return Err(Error::invalid(what, format!("{form:?}")));
    }
    Ok(())
}

/// A space-delimited surface token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub form: String,
    pub index: usize,
}

impl Token {
    pub fn new(form: impl Into<String>, index: usize) -> Result<Self> {
        let form = form.into();
        check_form(&form, "token form")?;
        Ok(Token { form, index })
    }
}

/// Builds tokens numbered from zero.
pub fn tokens_from_forms<S: AsRef<str>>(forms: &[S]) -> Result<Vec<Token>> {
    forms
        .iter()
        .enumerate()
        .map(|(i, f)| Token::new(f.as_ref(), i))
        .collect()
}

/// A morphological segment of a token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Morpheme {
    pub form: String,
    /// Empty when the data carries no POS.
    pub pos: String,
    pub token_index: usize,
    pub slot: usize,
}

impl Morpheme {
    pub fn new(form: impl Into<String>, pos: impl Into<String>, token_index: usize, slot: usize) -> Result<Self> {
        let form = form.into();
        check_form(&form, "morpheme form")?;
        let pos = pos.into();
        if pos.chars().any(char::is_whitespace) {
            return Err(Error::invalid("POS tag", format!("{pos:?}")));
        }
        Ok(Morpheme {
            form,
            pos,
            token_index,
            slot,
        })
    }
}

/// Token-level gold or predicted labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenLabels {
    Single(Vec<Label>),
    Multi(Vec<MultiLabel>),
}

impl TokenLabels {
    pub fn len(&self) -> usize {
        match self {
            TokenLabels::Single(v) => v.len(),
            TokenLabels::Multi(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One sentence with whatever annotation layers are available.
///
/// `tokens` may be empty for sentences read from a morpheme-only file;
/// the token count is then implied by the morphemes' token indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub morphemes: Option<Vec<Morpheme>>,
    pub token_labels: Option<TokenLabels>,
    pub morpheme_labels: Option<Vec<Label>>,
}

impl Sentence {
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        Sentence {
            tokens,
            ..Default::default()
        }
    }

    pub fn token_forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    pub fn token_count(&self) -> usize {
        if !self.tokens.is_empty() {
            return self.tokens.len();
        }
        self.morphemes
            .as_ref()
            .and_then(|m| m.last())
            .map_or(0, |m| m.token_index + 1)
    }

    /// Morphemes grouped by owning token, in token order.
    pub fn morphemes_by_token(&self) -> Option<Vec<&[Morpheme]>> {
        let morphemes = self.morphemes.as_ref()?;
        Some(group_by_token(morphemes, self.token_count()))
    }

    pub fn validate(&self) -> Result<()> {
        for (i, token) in self.tokens.iter().enumerate() {
            if token.index != i {
                return Err(Error::invalid(
                    "token index",
                    format!("{} at position {i}", token.index),
                ));
            }
        }
        if let Some(morphemes) = &self.morphemes {
            let mut expected_token = 0;
            let mut expected_slot = 0;
            for m in morphemes {
                if m.token_index == expected_token + 1 && expected_slot > 0 {
                    expected_token += 1;
                    expected_slot = 0;
                }
                if m.token_index != expected_token || m.slot != expected_slot {
                    return Err(Error::invalid(
                        "morpheme ownership",
                        format!(
                            "{:?} has token {} slot {}, expected token {} slot {}",
                            m.form, m.token_index, m.slot, expected_token, expected_slot
                        ),
                    ));
                }
                expected_slot += 1;
            }
            if !self.tokens.is_empty() && !morphemes.is_empty() && expected_token + 1 != self.tokens.len() {
                return Err(Error::LengthMismatch {
                    left: expected_token + 1,
                    right: self.tokens.len(),
                    context: "tokens covered by morphemes vs tokens",
                });
            }
            if let Some(labels) = &self.morpheme_labels {
                if labels.len() != morphemes.len() {
                    return Err(Error::LengthMismatch {
                        left: labels.len(),
                        right: morphemes.len(),
                        context: "morpheme labels vs morphemes",
                    });
                }
            }
        } else if self.morpheme_labels.is_some() {
            return Err(Error::invalid("sentence", "morpheme labels without morphemes"));
        }
        if let Some(labels) = &self.token_labels {
            if labels.len() != self.token_count() {
                return Err(Error::LengthMismatch {
                    left: labels.len(),
                    right: self.token_count(),
                    context: "token labels vs tokens",
                });
            }
        }
        Ok(())
    }
}

/// Splits a token-ordered morpheme sequence into per-token slices.
/// Tokens without morphemes get an empty slice.
pub fn group_by_token(morphemes: &[Morpheme], token_count: usize) -> Vec<&[Morpheme]> {
    let mut groups = Vec::with_capacity(token_count);
    let mut start = 0;
    for t in 0..token_count {
        let mut end = start;
        while end < morphemes.len() && morphemes[end].token_index == t {
            end += 1;
        }
        groups.push(&morphemes[start..end]);
        start = end;
    }
    groups
}

/// An entity occurrence, identified by its surface form and category.
///
/// `unit_span` (inclusive start and end unit indices) is bookkeeping for
/// the sequence it came from; equality and hashing ignore it.
#[derive(Debug, Clone)]
pub struct Mention {
    pub form: String,
    pub category: EntityCategory,
    pub unit_span: (usize, usize),
}

impl Mention {
    pub fn new(form: impl Into<String>, category: EntityCategory, unit_span: (usize, usize)) -> Self {
        Mention {
            form: form.into(),
            category,
            unit_span,
        }
    }
}

impl PartialEq for Mention {
    fn eq(&self, other: &Self) -> bool {
        self.form == other.form && self.category == other.category
    }
}

impl Eq for Mention {}

impl Hash for Mention {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.form.hash(state);
        self.category.hash(state);
    }
}

/// Collects mentions from a label sequence over unit forms.
///
/// A mention starts at any non-`O` label. `S` closes it immediately;
/// otherwise it extends over following `I`/`E` labels of the same
/// category and closes at the first `E`. Well-formed `S` and `B I* E`
/// spans come out unchanged, while ill-formed fragments (a dangling `B`,
/// `I` or `E` without `B`) become the maximal same-category run they sit
/// in.
pub fn extract_mentions<S: AsRef<str>>(labels: &[Label], forms: &[S]) -> Result<Vec<Mention>> {
    if labels.len() != forms.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: forms.len(),
            context: "labels vs forms",
        });
    }
    let mut mentions = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let Some(category) = labels[i].category() else {
            i += 1;
            continue;
        };
        let mut end = i;
        if labels[i].boundary() != Boundary::S {
            while labels[end].boundary() != Boundary::E
                && end + 1 < labels.len()
                && labels[end + 1].category() == Some(category)
                && matches!(labels[end + 1].boundary(), Boundary::I | Boundary::E)
            {
                end += 1;
            }
        }
        let form = forms[i..=end].iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        mentions.push(Mention::new(form, category.clone(), (i, end)));
        i = end + 1;
    }
    Ok(mentions)
}

/// Inverse of [`extract_mentions`]: writes BIOSE labels for
/// span-anchored mentions over `length` units.
pub fn mentions_to_labels(mentions: &[Mention], length: usize) -> Result<Vec<Label>> {
    let mut labels = vec![Label::outside(); length];
    let mut taken = vec![false; length];
    for m in mentions {
        let (start, end) = m.unit_span;
        if start > end || end >= length {
            return Err(Error::invalid(
                "mention span",
                format!("[{start}, {end}] over {length} units"),
            ));
        }
        for (pos, slot) in taken.iter_mut().enumerate().take(end + 1).skip(start) {
            if *slot {
                return Err(Error::OverlappingSpans(pos));
            }
            *slot = true;
        }
        let cat = &m.category;
        if start == end {
            labels[start] = Label::entity(Boundary::S, cat.clone())?;
        } else {
            labels[start] = Label::entity(Boundary::B, cat.clone())?;
            for label in &mut labels[start + 1..end] {
                *label = Label::entity(Boundary::I, cat.clone())?;
            }
            labels[end] = Label::entity(Boundary::E, cat.clone())?;
        }
    }
    Ok(labels)
}
