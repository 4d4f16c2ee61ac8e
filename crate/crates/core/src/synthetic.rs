//! Seeded synthetic corpora for tests and demos.
//!
//! Tokens are built from a small Hebrew-like vocabulary. Nouns after
//! `la`/`ba` are ambiguous between a definite reading (`le+ha+X`) and an
//! indefinite one (`le+X`); the gold reading is drawn at random, so the
//! two readings differ only in morpheme count and cannot be told apart
//! from the token alone. A following adjective agrees in definiteness
//! (`labayit hagadol` against `labayit gadol`), which a token window
//! sees but a first-order morpheme scorer does not. A second class of
//! words reads either as one morpheme or as an unrelated prefix + stem
//! pair.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Boundary, EntityCategory, Label, Morpheme, Sentence, Token, TokenLabels};
use crate::error::Result;
use crate::eval::OotvCategory;
use crate::labeling::gold_token_labels;
use crate::lattice::{Lexicon, Segment};

const NOUNS: &[&str] = &[
    "bayit",
    "sefer",
    "ir",
    "gan",
    "shuk",
    "yam",
    "kfar",
    "misrad",
    "beit-sefer",
    "rehov",
];
const ADJECTIVES: &[&str] = &["gadol", "yarok", "hadash", "katan"];
/// Adjectives of nominal ORG names (`habayit halavan`).
const NAME_ADJECTIVES: &[&str] = &["lavan", "leumi", "merkazi"];
const FILLERS: &[(&str, &str)] = &[
    ("amar", "VB"),
    ("halakh", "VB"),
    ("raa", "VB"),
    ("et", "AT"),
    ("shel", "POSS"),
    ("gam", "RB"),
    ("ki", "CC"),
    ("hu", "PRP"),
];
const NAMES: &[(&str, &str)] = &[
    ("dana", "PER"),
    ("yossi", "PER"),
    ("rina", "PER"),
    ("moshe", "PER"),
    ("haifa", "GPE"),
    ("yerushalayim", "GPE"),
    ("eilat", "GPE"),
    ("intel", "ORG"),
    ("elbit", "ORG"),
    ("teva", "ORG"),
];
const UNSEEN_NAMES: &[(&str, &str)] = &[
    ("bangkok", "GPE"),
    ("nairobi", "GPE"),
    ("oslo", "GPE"),
    ("tamar", "PER"),
    ("avner", "PER"),
    ("amdocs", "ORG"),
];
/// Words that also read as prefix + stem, sharing no morpheme with the
/// whole-word reading: `(word, prefix, prefix POS, stem)`.
const SPLITTABLE: &[(&str, &str, &str, &str)] = &[
    ("lehem", "le", "IN", "hem"),
    ("beten", "be", "IN", "ten"),
    ("mila", "mi", "IN", "la"),
    ("vered", "ve", "CC", "red"),
    ("hakol", "ha", "DET", "kol"),
    ("mishor", "mi", "IN", "shor"),
];
/// Surface, morpheme form and POS of the prefixes that attach to names.
const NAME_PREFIXES: &[(&str, &str, &str)] = &[("le", "le", "IN"), ("mi", "mi", "IN"), ("ve", "ve", "CC")];

/// Generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub sentences: usize,
    pub seed: u64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Allow prepositions and conjunctions on names.
    pub prefixed_names: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            sentences: 200,
            seed: 1,
            min_tokens: 4,
            max_tokens: 8,
            prefixed_names: true,
        }
    }
}

/// Generated sentences (tokens, gold morphemes, gold labels at both
/// levels) and a lexicon listing every reading of every surface form.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub lexicon: Lexicon,
    pub sentences: Vec<Sentence>,
}

struct Piece {
    surface: String,
    /// `(form, pos, inside the mention)`
    segments: Vec<(String, String, bool)>,
}

impl Piece {
    fn new(prefix: &str, stem: &str, segments: &[(&str, &str, bool)]) -> Self {
        Piece {
            surface: format!("{prefix}{stem}"),
            segments: segments
                .iter()
                .map(|(f, p, m)| (f.to_string(), p.to_string(), *m))
                .collect(),
        }
    }
}

/// One chunk of a sentence: tokens plus the category if they hold a
/// mention.
type Chunk = (Vec<Piece>, Option<&'static str>);

fn noun_token(rng: &mut ChaCha8Rng) -> Piece {
    let noun = *NOUNS.choose(rng).unwrap();
    let definite = rng.gen_bool(0.5);
    match rng.gen_range(0..100) {
        0..=7 => Piece::new("", noun, &[(noun, "NN", false)]),
        8..=14 => Piece::new("ha", noun, &[("ha", "DET", false), (noun, "NN", false)]),
        15..=92 => {
            let (surface, prep) = if rng.gen_bool(0.5) { ("la", "le") } else { ("ba", "be") };
            if definite {
                Piece::new(
                    surface,
                    noun,
                    &[(prep, "IN", false), ("ha", "DET", false), (noun, "NN", false)],
                )
            } else {
                Piece::new(surface, noun, &[(prep, "IN", false), (noun, "NN", false)])
            }
        }
        _ => Piece::new("ve", noun, &[("ve", "CC", false), (noun, "NN", false)]),
    }
}

/// A noun token, usually followed by an adjective that agrees with it
/// in definiteness.
fn noun_phrase(rng: &mut ChaCha8Rng) -> Chunk {
    let noun = noun_token(rng);
    if !rng.gen_bool(0.7) {
        return (vec![noun], None);
    }
    let adj = *ADJECTIVES.choose(rng).unwrap();
    let definite = noun.segments.iter().any(|(_, pos, _)| pos == "DET");
    let adj = if definite {
        Piece::new("ha", adj, &[("ha", "DET", false), (adj, "JJ", false)])
    } else {
        Piece::new("", adj, &[(adj, "JJ", false)])
    };
    (vec![noun, adj], None)
}

fn splittable_token(rng: &mut ChaCha8Rng) -> Piece {
    let (word, prefix, pos, stem) = *SPLITTABLE.choose(rng).unwrap();
    if rng.gen_bool(0.5) {
        Piece::new("", word, &[(word, "NN", false)])
    } else {
        Piece::new("", word, &[(prefix, pos, false), (stem, "NN", false)])
    }
}

fn name_entity(rng: &mut ChaCha8Rng, prefixed: bool) -> Chunk {
    let (name, cat) = *NAMES.choose(rng).unwrap();
    let mut pieces = Vec::new();
    if prefixed && rng.gen_bool(0.5) {
        let (surface, form, pos) = *NAME_PREFIXES.choose(rng).unwrap();
        pieces.push(Piece::new(surface, name, &[(form, pos, false), (name, "NNP", true)]));
    } else {
        pieces.push(Piece::new("", name, &[(name, "NNP", true)]));
    }
    if rng.gen_bool(0.3) {
        let same: Vec<&str> = NAMES.iter().filter(|(_, c)| *c == cat).map(|(n, _)| *n).collect();
        let second = *same.choose(rng).unwrap();
        pieces.push(Piece::new("", second, &[(second, "NNP", true)]));
    }
    (pieces, Some(cat))
}

/// `[prep+]ha+NOUN ha+ADJ` as an ORG, the first token possibly ambiguous.
fn nominal_entity(rng: &mut ChaCha8Rng) -> Chunk {
    let noun = *NOUNS.choose(rng).unwrap();
    let adj = *NAME_ADJECTIVES.choose(rng).unwrap();
    let first = match rng.gen_range(0..3) {
        0 => Piece::new("ha", noun, &[("ha", "DET", true), (noun, "NN", true)]),
        1 => Piece::new(
            "la",
            noun,
            &[("le", "IN", false), ("ha", "DET", true), (noun, "NN", true)],
        ),
        _ => Piece::new(
            "ba",
            noun,
            &[("be", "IN", false), ("ha", "DET", true), (noun, "NN", true)],
        ),
    };
    let second = Piece::new("ha", adj, &[("ha", "DET", true), (adj, "JJ", true)]);
    (vec![first, second], Some("ORG"))
}

fn filler(rng: &mut ChaCha8Rng) -> Chunk {
    let (form, pos) = *FILLERS.choose(rng).unwrap();
    (vec![Piece::new("", form, &[(form, pos, false)])], None)
}

fn build_sentence(chunks: Vec<Chunk>) -> Result<Sentence> {
    let mut tokens = Vec::new();
    let mut morphemes = Vec::new();
    let mut labels = Vec::new();
    for (pieces, category) in chunks {
        let inside: usize = pieces.iter().flat_map(|p| &p.segments).filter(|s| s.2).count();
        let category = category.map(EntityCategory::new).transpose()?;
        let mut seen = 0;
        for piece in pieces {
            let t = tokens.len();
            tokens.push(Token::new(piece.surface, t)?);
            for (slot, (form, pos, in_mention)) in piece.segments.into_iter().enumerate() {
                morphemes.push(Morpheme::new(form, pos, t, slot)?);
                let label = match (&category, in_mention) {
                    (Some(cat), true) => {
                        seen += 1;
                        let b = match (seen, inside) {
                            (_, 1) => Boundary::S,
                            (1, _) => Boundary::B,
                            (k, n) if k == n => Boundary::E,
                            _ => Boundary::I,
                        };
                        Label::entity(b, cat.clone())?
                    }
                    _ => Label::outside(),
                };
                labels.push(label);
            }
        }
    }
    let mut sentence = Sentence {
        tokens,
        morphemes: Some(morphemes),
        token_labels: None,
        morpheme_labels: Some(labels),
    };
    sentence.token_labels = Some(TokenLabels::Single(gold_token_labels(&sentence)?));
    Ok(sentence)
}

fn seg(form: &str, pos: &str) -> Segment {
    Segment::new(form, pos)
}

/// Every reading of every surface the generators can produce.
pub fn synthetic_lexicon() -> Lexicon {
    let mut lex = Lexicon::new();
    let mut add = |surface: String, segs: Vec<Segment>| lex.add(surface, segs).expect("nonempty analysis");
    for noun in NOUNS {
        add(noun.to_string(), vec![seg(noun, "NN")]);
        add(format!("ha{noun}"), vec![seg("ha", "DET"), seg(noun, "NN")]);
        for (surface, prep) in [("la", "le"), ("ba", "be")] {
            add(
                format!("{surface}{noun}"),
                vec![seg(prep, "IN"), seg("ha", "DET"), seg(noun, "NN")],
            );
            add(format!("{surface}{noun}"), vec![seg(prep, "IN"), seg(noun, "NN")]);
        }
        add(format!("ve{noun}"), vec![seg("ve", "CC"), seg(noun, "NN")]);
        add(format!("mi{noun}"), vec![seg("mi", "IN"), seg(noun, "NN")]);
    }
    for (word, prefix, pos, stem) in SPLITTABLE {
        add(word.to_string(), vec![seg(word, "NN")]);
        add(word.to_string(), vec![seg(prefix, pos), seg(stem, "NN")]);
    }
    for adj in ADJECTIVES.iter().chain(NAME_ADJECTIVES) {
        add(adj.to_string(), vec![seg(adj, "JJ")]);
        add(format!("ha{adj}"), vec![seg("ha", "DET"), seg(adj, "JJ")]);
    }
    for (form, pos) in FILLERS {
        add(form.to_string(), vec![seg(form, pos)]);
    }
    for (name, _) in NAMES.iter().chain(UNSEEN_NAMES) {
        add(name.to_string(), vec![seg(name, "NNP")]);
        for (surface, form, pos) in NAME_PREFIXES {
            add(format!("{surface}{name}"), vec![seg(form, pos), seg(name, "NNP")]);
        }
    }
    lex
}

/// Generates a corpus from `config`; identical configs give identical
/// corpora.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let max = config.max_tokens.max(config.min_tokens).max(1);
    let min = config.min_tokens.clamp(1, max);
    let mut sentences = Vec::with_capacity(config.sentences);
    for _ in 0..config.sentences {
        let target = rng.gen_range(min..=max);
        let mut chunks: Vec<Chunk> = Vec::new();
        let mut len = 0;
        while len < target {
            let chunk = match rng.gen_range(0..100) {
                0..=14 => name_entity(&mut rng, config.prefixed_names),
                15..=24 => nominal_entity(&mut rng),
                25..=64 => noun_phrase(&mut rng),
                65..=84 => (vec![splittable_token(&mut rng)], None),
                _ => filler(&mut rng),
            };
            len += chunk.0.len();
            chunks.push(chunk);
        }
        sentences.push(build_sentence(chunks)?);
    }
    Ok(SyntheticCorpus {
        lexicon: synthetic_lexicon(),
        sentences,
    })
}

/// Fraction of tokens whose surface has more than one listed reading.
pub fn ambiguous_fraction(sentences: &[Sentence], lexicon: &Lexicon) -> f64 {
    let (mut ambiguous, mut total) = (0usize, 0usize);
    for t in sentences.iter().flat_map(|s| &s.tokens) {
        total += 1;
        if lexicon.get(&t.form).is_some_and(|a| a.len() > 1) {
            ambiguous += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        ambiguous as f64 / total as f64
    }
}

/// A train/test pair where each test sentence holds exactly one mention
/// of a planted out-of-vocabulary class.
#[derive(Debug, Clone)]
pub struct OotvSplit {
    pub train: Vec<Sentence>,
    pub test: Vec<Sentence>,
    /// Planted class of each test sentence's mention.
    pub planted: Vec<OotvCategory>,
}

/// Training names only ever appear bare, so a prefixed training name is
/// an unseen token made of seen morphemes.
pub fn generate_ootv_split(seed: u64, train_sentences: usize, test_sentences: usize) -> Result<OotvSplit> {
    let config = SyntheticConfig {
        sentences: train_sentences,
        seed,
        prefixed_names: false,
        ..Default::default()
    };
    let mut train = generate(&config)?.sentences;
    // every training name, bare, and every name prefix on a noun
    let mut seen: Vec<Chunk> = NAMES
        .iter()
        .map(|(n, c)| (vec![Piece::new("", n, &[(n, "NNP", true)])], Some(*c)))
        .collect();
    for (surface, form, pos) in NAME_PREFIXES {
        seen.push((
            vec![Piece::new(surface, "gan", &[(form, pos, false), ("gan", "NN", false)])],
            None,
        ));
    }
    for chunk in seen {
        train.push(build_sentence(vec![
            chunk,
            (vec![Piece::new("", "amar", &[("amar", "VB", false)])], None),
        ])?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut test = Vec::with_capacity(test_sentences);
    let mut planted = Vec::with_capacity(test_sentences);
    for i in 0..test_sentences {
        let class = OotvCategory::ALL[i % 4];
        let (name, cat) = match class {
            OotvCategory::Known | OotvCategory::Compositional => *NAMES.choose(&mut rng).unwrap(),
            _ => *UNSEEN_NAMES.choose(&mut rng).unwrap(),
        };
        let piece = match class {
            OotvCategory::Known | OotvCategory::Lexical => Piece::new("", name, &[(name, "NNP", true)]),
            _ => {
                let (surface, form, pos) = *NAME_PREFIXES.choose(&mut rng).unwrap();
                Piece::new(surface, name, &[(form, pos, false), (name, "NNP", true)])
            }
        };
        let mut chunks = vec![filler(&mut rng), (vec![piece], Some(cat))];
        chunks.push(filler(&mut rng));
        test.push(build_sentence(chunks)?);
        planted.push(class);
    }
    Ok(OotvSplit { train, test, planted })
}
