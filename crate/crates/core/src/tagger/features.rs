//! Feature templates for unit sequences.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which feature templates fire for each unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTemplates {
    /// Prefixes and suffixes of length 1 up to this many characters.
    pub affix_len: usize,
    /// Neighbouring unit forms at offsets up to this distance.
    pub window: usize,
    pub shape: bool,
    pub lowercase: bool,
    /// Character n-grams from length 2 up to this length; 0 disables.
    pub char_ngrams: usize,
}

impl Default for FeatureTemplates {
    fn default() -> Self {
        FeatureTemplates {
            affix_len: 4,
            window: 2,
            shape: true,
            lowercase: true,
            char_ngrams: 0,
        }
    }
}

impl fmt::Display for FeatureTemplates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "affix={} window={} shape={} lower={} ngrams={}",
            self.affix_len, self.window, self.shape as u8, self.lowercase as u8, self.char_ngrams
        )
    }
}

impl FromStr for FeatureTemplates {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut t = FeatureTemplates::default();
        for part in text.split_whitespace() {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid("feature templates", part))?;
            let n: usize = value.parse().map_err(|_| Error::invalid("feature templates", part))?;
            match key {
                "affix" => t.affix_len = n,
                "window" => t.window = n,
                "shape" => t.shape = n != 0,
                "lower" => t.lowercase = n != 0,
                "ngrams" => t.char_ngrams = n,
                _ => return Err(Error::invalid("feature templates", part)),
            }
        }
        Ok(t)
    }
}

/// Pre-computed dense vectors keyed by surface form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseFeatureTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl DenseFeatureTable {
    pub fn new(dim: usize) -> Self {
        DenseFeatureTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, form: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::LengthMismatch {
                left: vector.len(),
                right: self.dim,
                context: "vector vs table dimension",
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dense vector", "non-finite value"));
        }
        self.vectors.insert(form.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Misses return `None`, never a zero vector.
    pub fn get(&self, form: &str) -> Option<&[f64]> {
        self.vectors.get(form).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Features of one unit: indicator names plus an optional dense block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    pub sparse: Vec<String>,
    pub dense: Option<Vec<f64>>,
}

impl FeatureVector {
    pub fn contains(&self, name: &str) -> bool {
        self.sparse.iter().any(|f| f == name)
    }
}

fn shape(form: &str) -> String {
    let mut out = String::new();
    for c in form.chars() {
        let class = if c.is_uppercase() {
            'A'
        } else if c.is_alphabetic() {
            'a'
        } else if c.is_numeric() {
            '0'
        } else {
            c
        };
        if !out.ends_with(class) || !matches!(class, 'A' | 'a' | '0') {
            out.push(class);
        }
    }
    out
}

fn unit_at<S: AsRef<str>>(units: &[S], pos: isize) -> &str {
    if pos < 0 {
        "<BOS>"
    } else {
        units.get(pos as usize).map_or("<EOS>", AsRef::as_ref)
    }
}

/// Expands the templates for the unit at `position`.
pub fn featurize<S: AsRef<str>>(
    units: &[S],
    position: usize,
    templates: &FeatureTemplates,
    dense: Option<&DenseFeatureTable>,
) -> FeatureVector {
    let form = units[position].as_ref();
    let chars: Vec<char> = form.chars().collect();
    let mut sparse = vec!["bias".to_string(), format!("w={form}")];
    if templates.lowercase {
        sparse.push(format!("lw={}", form.to_lowercase()));
    }
    for k in 1..=templates.affix_len.min(chars.len()) {
        let prefix: String = chars[..k].iter().collect();
        let suffix: String = chars[chars.len() - k..].iter().collect();
        sparse.push(format!("p{k}={prefix}"));
        sparse.push(format!("s{k}={suffix}"));
    }
    if templates.shape {
        sparse.push(format!("shape={}", shape(form)));
    }
    for n in 2..=templates.char_ngrams {
        for gram in chars.windows(n) {
            sparse.push(format!("ng{n}={}", gram.iter().collect::<String>()));
        }
    }
    let p = position as isize;
    for d in 1..=templates.window as isize {
        sparse.push(format!("w-{d}={}", unit_at(units, p - d)));
        sparse.push(format!("w+{d}={}", unit_at(units, p + d)));
    }
    let mut dense_block = None;
    if let Some(table) = dense {
        match table.get(form) {
            Some(v) => dense_block = Some(v.to_vec()),
            None => sparse.push("dense=none".to_string()),
        }
    }
    FeatureVector {
        sparse,
        dense: dense_block,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_templates_mid_sentence() {
        let units = ["hamerotz", "labayit", "halavan"];
        let fv = featurize(&units, 1, &FeatureTemplates::default(), None);
        for f in [
            "bias",
            "w=labayit",
            "s3=yit",
            "p2=la",
            "w-1=hamerotz",
            "w+1=halavan",
            "w+2=<EOS>",
            "shape=a",
        ] {
            assert!(fv.contains(f), "missing {f}");
        }
        assert!(fv.dense.is_none());
    }

    #[test]
    fn first_unit_sees_sentence_start() {
        let fv = featurize(&["a", "b"], 0, &FeatureTemplates::default(), None);
        assert!(fv.contains("w-1=<BOS>"));
        assert!(fv.contains("w-2=<BOS>"));
    }

    #[test]
    fn attaches_dense_block_or_miss_indicator() {
        let mut table = DenseFeatureTable::new(2);
        table.insert("bayit", vec![0.5, -1.0]).unwrap();
        let t = FeatureTemplates::default();
        let hit = featurize(&["bayit"], 0, &t, Some(&table));
        assert_eq!(hit.dense.as_deref(), Some(&[0.5, -1.0][..]));
        assert!(!hit.contains("dense=none"));
        let miss = featurize(&["lavan"], 0, &t, Some(&table));
        assert!(miss.dense.is_none());
        assert!(miss.contains("dense=none"));
    }

    #[test]
    fn shapes_and_ngrams() {
        assert_eq!(shape("Tel-Aviv2020"), "Aa-Aa0");
        let t = FeatureTemplates {
            char_ngrams: 3,
            ..Default::default()
        };
        let fv = featurize(&["abcd"], 0, &t, None);
        assert!(fv.contains("ng2=bc"));
        assert!(fv.contains("ng3=bcd"));
    }

    #[test]
    fn templates_text_round_trip() {
        let t = FeatureTemplates {
            affix_len: 3,
            window: 1,
            shape: false,
            lowercase: true,
            char_ngrams: 7,
        };
        assert_eq!(t.to_string().parse::<FeatureTemplates>().unwrap(), t);
        assert!("affix=x".parse::<FeatureTemplates>().is_err());
    }

    #[test]
    fn dense_dimension_checked() {
        let mut table = DenseFeatureTable::new(3);
        assert!(table.insert("x", vec![1.0, 2.0]).is_err());
    }
}
