//! Conversions between per-morpheme labels, multi-labels and single
//! token labels.

use std::sync::LazyLock;

use regex::Regex;

use crate::domain::{Boundary, Label, MultiLabel, Sentence};
use crate::error::{Error, Result};

/// Valid in-token BIOSE patterns, in matching order, with the single
/// boundary each collapses to.
static VALID_PATTERNS: LazyLock<Vec<(Regex, Boundary)>> = LazyLock::new(|| {
    [
        ("O+", Boundary::O),
        ("O*BI*", Boundary::B),
        ("O*BI*EO*", Boundary::S),
        ("I+", Boundary::I),
        ("I*EO*", Boundary::E),
        ("O*SO*", Boundary::S),
    ]
    .into_iter()
    .map(|(p, b)| (Regex::new(&format!("^(?:{p})$")).unwrap(), b))
    .collect()
});

/// Collapses the boundary characters of one token's morphemes into a
/// single boundary.
///
/// Valid sequences map through the first pattern that matches the whole
/// string. Anything else is read as a set: `S`, or both `B` and `E`, give
/// `S`; then `E`, `B`, `I` in that order; otherwise `O`.
pub fn collapse_biose(chars: &str) -> Result<Boundary> {
    if chars.is_empty() {
        return Err(Error::Empty("BIOSE string"));
    }
    if let Some(bad) = chars.chars().find(|c| !"OBISE".contains(*c)) {
        return Err(Error::InvalidBioseChar(bad));
    }
    if let Some((_, b)) = VALID_PATTERNS.iter().find(|(re, _)| re.is_match(chars)) {
        return Ok(*b);
    }
    Ok(collapse_as_set(chars))
}

fn collapse_as_set(chars: &str) -> Boundary {
    let has = |c| chars.contains(c);
    if has('S') || (has('B') && has('E')) {
        Boundary::S
    } else if has('E') {
        Boundary::E
    } else if has('B') {
        Boundary::B
    } else if has('I') {
        Boundary::I
    } else {
        Boundary::O
    }
}

/// Maps a token's multi-label to one token label. The category is the
/// first category present among the morpheme labels.
pub fn extend_to_token_label(labels: &MultiLabel) -> Result<Label> {
    let chars: String = labels.labels().iter().map(|l| l.boundary().as_char()).collect();
    let boundary = collapse_biose(&chars)?;
    if boundary == Boundary::O {
        return Ok(Label::outside());
    }
    let category = labels
        .labels()
        .iter()
        .find_map(|l| l.category())
        .cloned()
        .ok_or_else(|| Error::InvalidLabel(labels.to_string()))?;
    Label::entity(boundary, category)
}

/// Pairs a token's multi-label with the morphemes chosen for it.
///
/// Pairs are matched from the last one backwards: surplus labels are
/// dropped from the front, and surplus morphemes at the front get `O`.
pub fn align_multilabel_to_morphemes<S: AsRef<str>>(labels: &MultiLabel, forms: &[S]) -> Vec<(String, Label)> {
    let labels = labels.labels();
    let n = forms.len();
    let aligned: Vec<Label> = if labels.len() >= n {
        labels[labels.len() - n..].to_vec()
    } else {
        std::iter::repeat_n(Label::outside(), n - labels.len())
            .chain(labels.iter().cloned())
            .collect()
    };
    forms.iter().map(|f| f.as_ref().to_string()).zip(aligned).collect()
}

/// Groups a sentence's gold morpheme labels by token.
pub fn gold_multilabels(sentence: &Sentence) -> Result<Vec<MultiLabel>> {
    let labels = sentence
        .morpheme_labels
        .as_ref()
        .ok_or_else(|| Error::invalid("sentence", "no morpheme labels"))?;
    let morphemes = sentence
        .morphemes
        .as_ref()
        .ok_or_else(|| Error::invalid("sentence", "no morphemes"))?;
    if labels.len() != morphemes.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: morphemes.len(),
            context: "morpheme labels vs morphemes",
        });
    }
    let mut grouped: Vec<Vec<Label>> = vec![Vec::new(); sentence.token_count()];
    for (m, l) in morphemes.iter().zip(labels) {
        grouped
            .get_mut(m.token_index)
            .ok_or_else(|| Error::invalid("morpheme token index", m.token_index.to_string()))?
            .push(l.clone());
    }
    grouped
        .into_iter()
        .enumerate()
        .map(|(t, ls)| MultiLabel::new(ls).map_err(|_| Error::invalid("token", format!("token {t} has no morphemes"))))
        .collect()
}

/// Token-level labels implied by gold morpheme labels.
pub fn gold_token_labels(sentence: &Sentence) -> Result<Vec<Label>> {
    gold_multilabels(sentence)?.iter().map(extend_to_token_label).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{tokens_from_forms, Morpheme};

    fn ml(text: &str) -> MultiLabel {
        text.parse().unwrap()
    }

    fn label(text: &str) -> Label {
        text.parse().unwrap()
    }

    #[test]
    fn collapse_examples() {
        assert_eq!(collapse_biose("OBI").unwrap(), Boundary::B);
        assert_eq!(collapse_biose("IE").unwrap(), Boundary::E);
        assert_eq!(collapse_biose("OOO").unwrap(), Boundary::O);
        assert_eq!(collapse_biose("EB").unwrap(), Boundary::S);
        assert_eq!(collapse_biose("OBIEO").unwrap(), Boundary::S);
        assert_eq!(collapse_biose("OSO").unwrap(), Boundary::S);
        assert_eq!(collapse_biose("II").unwrap(), Boundary::I);
    }

    #[test]
    fn collapse_invalid_orders_use_set_semantics() {
        // O between two I labels
        assert_eq!(collapse_biose("IOI").unwrap(), Boundary::I);
        assert_eq!(collapse_biose("EI").unwrap(), Boundary::E);
        assert_eq!(collapse_biose("IB").unwrap(), Boundary::B);
        assert_eq!(collapse_biose("SB").unwrap(), Boundary::S);
        assert_eq!(collapse_biose("OEE").unwrap(), Boundary::E);
    }

    #[test]
    fn collapse_rejects_bad_input() {
        assert!(matches!(collapse_biose("OX"), Err(Error::InvalidBioseChar('X'))));
        assert!(collapse_biose("").is_err());
    }

    #[test]
    fn extend_examples() {
        assert_eq!(extend_to_token_label(&ml("O^B-ORG^I-ORG")).unwrap(), label("B-ORG"));
        assert_eq!(extend_to_token_label(&ml("I-ORG^E-ORG")).unwrap(), label("E-ORG"));
        assert_eq!(extend_to_token_label(&ml("O^O")).unwrap(), label("O"));
        assert_eq!(extend_to_token_label(&ml("O^S-GPE")).unwrap(), label("S-GPE"));
    }

    #[test]
    fn extend_takes_first_category() {
        assert_eq!(extend_to_token_label(&ml("E-PER^B-ORG")).unwrap(), label("S-PER"));
        assert_eq!(extend_to_token_label(&ml("O^B-LOC^E-ORG")).unwrap(), label("S-LOC"));
    }

    #[test]
    fn align_examples() {
        let zip = align_multilabel_to_morphemes(&ml("O^B-ORG^I-ORG"), &["le", "ha", "bayit"]);
        assert_eq!(
            zip,
            vec![
                ("le".to_string(), label("O")),
                ("ha".to_string(), label("B-ORG")),
                ("bayit".to_string(), label("I-ORG")),
            ]
        );
        let padded = align_multilabel_to_morphemes(&ml("B-ORG^E-ORG"), &["m1", "m2", "m3"]);
        assert_eq!(
            padded.into_iter().map(|(_, l)| l).collect::<Vec<_>>(),
            vec![label("O"), label("B-ORG"), label("E-ORG")]
        );
        let trimmed = align_multilabel_to_morphemes(&ml("O^B-ORG^I-ORG"), &["m1", "m2"]);
        assert_eq!(
            trimmed,
            vec![("m1".to_string(), label("B-ORG")), ("m2".to_string(), label("I-ORG"))]
        );
    }

    fn table_one_sentence() -> Sentence {
        let tokens = tokens_from_forms(&["hamerotz", "labayit", "halavan"]).unwrap();
        let spec = [
            ("ha", 0, "O"),
            ("merotz", 0, "O"),
            ("le", 1, "O"),
            ("ha", 1, "B-ORG"),
            ("bayit", 1, "I-ORG"),
            ("ha", 2, "I-ORG"),
            ("lavan", 2, "E-ORG"),
        ];
        let mut slot = 0;
        let mut prev = 0;
        let mut morphemes = Vec::new();
        for (form, tok, _) in spec {
            if tok != prev {
                slot = 0;
                prev = tok;
            }
            morphemes.push(Morpheme::new(form, "", tok, slot).unwrap());
            slot += 1;
        }
        Sentence {
            tokens,
            morphemes: Some(morphemes),
            token_labels: None,
            morpheme_labels: Some(spec.iter().map(|(_, _, l)| label(l)).collect()),
        }
    }

    #[test]
    fn gold_multilabels_groups_by_token() {
        let s = table_one_sentence();
        let got = gold_multilabels(&s).unwrap();
        assert_eq!(got, vec![ml("O^O"), ml("O^B-ORG^I-ORG"), ml("I-ORG^E-ORG")]);
        assert_eq!(
            gold_token_labels(&s).unwrap(),
            vec![label("O"), label("B-ORG"), label("E-ORG")]
        );
    }

    #[test]
    fn gold_multilabels_single_morpheme_tokens() {
        let tokens = tokens_from_forms(&["a", "b"]).unwrap();
        let s = Sentence {
            tokens,
            morphemes: Some(vec![
                Morpheme::new("a", "", 0, 0).unwrap(),
                Morpheme::new("b", "", 1, 0).unwrap(),
            ]),
            token_labels: None,
            morpheme_labels: Some(vec![label("O"), label("S-PER")]),
        };
        assert_eq!(gold_multilabels(&s).unwrap(), vec![ml("O"), ml("S-PER")]);
    }

    #[test]
    fn gold_multilabels_token_without_morphemes() {
        let tokens = tokens_from_forms(&["a", "b"]).unwrap();
        let s = Sentence {
            tokens,
            morphemes: Some(vec![Morpheme::new("a", "", 0, 0).unwrap()]),
            token_labels: None,
            morpheme_labels: Some(vec![label("O")]),
        };
        assert!(gold_multilabels(&s).is_err());
    }

    /// Every string of length <= 6 that fully matches a valid pattern
    /// collapses to the same boundary under set semantics.
    #[test]
    fn set_semantics_agree_with_patterns_exhaustively() {
        let alphabet = ['O', 'B', 'I', 'S', 'E'];
        let mut checked = 0;
        for len in 1..=6u32 {
            for code in 0..5usize.pow(len) {
                let mut c = code;
                let s: String = (0..len)
                    .map(|_| {
                        let ch = alphabet[c % 5];
                        c /= 5;
                        ch
                    })
                    .collect();
                let total = collapse_biose(&s).unwrap();
                if VALID_PATTERNS.iter().any(|(re, _)| re.is_match(&s)) {
                    assert_eq!(total, collapse_as_set(&s), "{s}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 50);
    }
}
