use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use morphner::corpus_io::{read_morpheme_corpus, read_token_corpus};
use morphner::domain::Morpheme;
use morphner::eval::seg_pos_f1;
use tempfile::TempDir;

fn morphner(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphner"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = morphner(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    morphner(dir, args).status.code().unwrap()
}

const WHITE_HOUSE_LEXICON: &str = "\
hamerotz\tha/DET+merotz/NN
labayit\tle/IN+bayit/NN;le/IN+ha/DET+bayit/NN
halavan\tha/DET+lavan/JJ
";

const WHITE_HOUSE_TOKENS: &str = "\
# variant: token-multi
hamerotz\tO^O
labayit\tO^O^B-FAC
halavan\tI-FAC^E-FAC
";

const WHITE_HOUSE_MORPHEMES: &str = "\
ha\tO\tDET\t1
merotz\tO\tNN\t1
le\tO\tIN\t2
ha\tO\tDET\t2
bayit\tB-FAC\tNN\t2
ha\tI-FAC\tDET\t3
lavan\tE-FAC\tJJ\t3
";

fn white_house(dir: &Path) {
    fs::write(dir.join("lex.tsv"), WHITE_HOUSE_LEXICON).unwrap();
    fs::write(dir.join("gold.tokens"), WHITE_HOUSE_TOKENS).unwrap();
    fs::write(dir.join("gold.morph"), WHITE_HOUSE_MORPHEMES).unwrap();
}

fn generated(sentences: usize, train: usize, seed: u64) -> TempDir {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "generate",
            "--out-dir",
            ".",
            "--sentences",
            &sentences.to_string(),
            "--train-sentences",
            &train.to_string(),
            "--seed",
            &seed.to_string(),
        ],
    );
    dir
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn analyze_lists_both_readings_of_labayit() {
    let dir = TempDir::new().unwrap();
    white_house(dir.path());
    let out = ok(
        dir.path(),
        &["analyze", "--tokens", "gold.tokens", "--lexicon", "lex.tsv"],
    );
    let token2: Vec<&str> = out.lines().filter(|l| l.ends_with("\t2")).collect();
    assert!(token2.iter().any(|l| l.contains("\tle\tIN\t")));
    assert!(token2.iter().any(|l| l.contains("\tha\tDET\t")));
    let bayit: Vec<&str> = token2.iter().copied().filter(|l| l.contains("\tbayit\tNN\t")).collect();
    assert_eq!(bayit.len(), 2, "one bayit edge per reading: {token2:?}");
}

#[test]
fn analyze_with_empty_lexicon_falls_back_to_whole_tokens() {
    let dir = TempDir::new().unwrap();
    white_house(dir.path());
    fs::write(dir.path().join("empty.tsv"), "").unwrap();
    let out = ok(
        dir.path(),
        &["analyze", "--tokens", "gold.tokens", "--lexicon", "empty.tsv"],
    );
    let edges: Vec<&str> = out.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(edges.len(), 3);
    assert!(edges[1].starts_with("1\t2\tlabayit\t"));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    white_house(dir.path());
    assert_eq!(
        code(dir.path(), &["analyze", "--tokens", "absent", "--lexicon", "lex.tsv"]),
        2
    );
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = generated(30, 20, 1);
    let d = dir.path();
    assert_eq!(
        code(
            d,
            &["train", "--variant", "bogus", "--tokens", "train.tokens", "-o", "m"]
        ),
        1
    );
    assert_eq!(code(d, &["frobnicate"]), 1);
    assert_eq!(
        code(d, &["train", "--variant", "md", "--tokens", "train.tokens", "-o", "m"]),
        1
    );
    assert_eq!(
        code(
            d,
            &[
                "disambiguate",
                "--tokens",
                "test.tokens",
                "--lexicon",
                "lexicon.tsv",
                "--md-model",
                "m",
                "--mode",
                "hybrid"
            ]
        ),
        1
    );
    assert_eq!(code(d, &["--help"]), 0);
}

#[test]
fn training_is_deterministic_per_seed() {
    let dir = generated(60, 40, 3);
    let d = dir.path();
    let runs: [&[&str]; 4] = [
        &["--variant", "token-single", "--tokens", "train.tokens"],
        &[
            "--variant",
            "token-multi",
            "--tokens",
            "train.tokens",
            "--morphemes",
            "train.morph",
        ],
        &["--variant", "morpheme", "--morphemes", "train.morph"],
        &[
            "--variant",
            "md",
            "--tokens",
            "train.tokens",
            "--morphemes",
            "train.morph",
            "--lexicon",
            "lexicon.tsv",
        ],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let out = format!("m{i}_{rep}");
            let mut full = vec!["train"];
            full.extend_from_slice(args);
            full.extend_from_slice(&["--epochs", "3", "--seed", "7", "-o", &out]);
            ok(d, &full);
            bytes.push(fs::read(d.join(&out)).unwrap());
            let manifest = fs::read_to_string(d.join(format!("{out}.manifest"))).unwrap();
            assert!(manifest.contains("seed\t7"));
        }
        assert_eq!(bytes[0], bytes[1], "variant {args:?}");
    }
}

#[test]
fn crf_trainer_from_config_file() {
    let dir = generated(30, 20, 2);
    let d = dir.path();
    fs::write(d.join("crf.conf"), "trainer = crf\nepochs = 5 # short\n").unwrap();
    ok(
        d,
        &[
            "train",
            "--variant",
            "token-single",
            "--tokens",
            "train.tokens",
            "--config",
            "crf.conf",
            "-o",
            "crf.model",
        ],
    );
    let manifest = fs::read_to_string(d.join("crf.model.manifest")).unwrap();
    assert!(manifest.contains("config\ttrainer\tcrf"));
    assert!(manifest.contains("config\tepochs\t5"));
    fs::write(d.join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(
        code(
            d,
            &[
                "train",
                "--variant",
                "token-single",
                "--tokens",
                "train.tokens",
                "--config",
                "bad.conf",
                "-o",
                "x"
            ]
        ),
        1
    );
}

fn segmentation(p: &Path) -> Vec<Vec<Morpheme>> {
    read_morpheme_corpus(p)
        .unwrap()
        .sentences
        .into_iter()
        .map(|s| s.morphemes.unwrap_or_default())
        .collect()
}

fn seg_score(gold: &Path, pred: &Path) -> f64 {
    seg_pos_f1(&segmentation(gold), &segmentation(pred)).unwrap().seg.f1
}

/// `form/POS` sequence of every token, sentence by sentence.
fn per_token(seg: &[Vec<Morpheme>]) -> Vec<String> {
    seg.iter()
        .flat_map(|s| {
            let n = s.last().map_or(0, |m| m.token_index + 1);
            (0..n).map(move |t| {
                s.iter()
                    .filter(|m| m.token_index == t)
                    .map(|m| format!("{}/{}", m.form, m.pos))
                    .collect::<Vec<_>>()
                    .join("+")
            })
        })
        .collect()
}

#[test]
fn hybrid_segmentation_beats_standard_and_ner_follows() {
    let dir = generated(300, 200, 1);
    let d = dir.path();
    ok(
        d,
        &[
            "train",
            "--variant",
            "md",
            "--tokens",
            "train.tokens",
            "--morphemes",
            "train.morph",
            "--lexicon",
            "lexicon.tsv",
            "-o",
            "md.model",
        ],
    );
    ok(
        d,
        &[
            "train",
            "--variant",
            "token-multi",
            "--tokens",
            "train.tokens",
            "--morphemes",
            "train.morph",
            "-o",
            "multi.model",
        ],
    );
    ok(
        d,
        &[
            "train",
            "--variant",
            "morpheme",
            "--morphemes",
            "train.morph",
            "-o",
            "morph.model",
        ],
    );
    ok(
        d,
        &[
            "disambiguate",
            "--tokens",
            "test.tokens",
            "--lexicon",
            "lexicon.tsv",
            "--md-model",
            "md.model",
            "-o",
            "std.morph",
        ],
    );
    ok(
        d,
        &[
            "disambiguate",
            "--tokens",
            "test.tokens",
            "--lexicon",
            "lexicon.tsv",
            "--md-model",
            "md.model",
            "--mode",
            "hybrid",
            "--ner-model",
            "multi.model",
            "-o",
            "hyb.morph",
            "--report",
            "fallback.tsv",
        ],
    );
    assert!(fs::read_to_string(d.join("fallback.tsv"))
        .unwrap()
        .starts_with("sentence\ttoken\tform\treason"));
    let standard = seg_score(&path(d, "test.morph"), &path(d, "std.morph"));
    let hybrid = seg_score(&path(d, "test.morph"), &path(d, "hyb.morph"));
    assert!(hybrid > standard, "hybrid {hybrid} standard {standard}");

    let gold = per_token(&segmentation(&path(d, "test.morph")));
    let std_tokens = per_token(&segmentation(&path(d, "std.morph")));
    let hyb_tokens = per_token(&segmentation(&path(d, "hyb.morph")));
    let (mut differ, mut hybrid_right, mut standard_right) = (0, 0, 0);
    for ((g, s), h) in gold.iter().zip(&std_tokens).zip(&hyb_tokens) {
        if s != h {
            differ += 1;
            hybrid_right += usize::from(h == g);
            standard_right += usize::from(s == g);
        }
    }
    assert!(differ > 0);
    assert!(
        hybrid_right > 2 * standard_right,
        "{differ} differ: hybrid right {hybrid_right}, standard right {standard_right}"
    );

    ok(
        d,
        &[
            "tag",
            "--model",
            "morph.model",
            "--input",
            "test.morph",
            "-o",
            "gold.pred",
        ],
    );
    ok(
        d,
        &[
            "tag",
            "--model",
            "morph.model",
            "--input",
            "std.morph",
            "-o",
            "std.pred",
        ],
    );
    ok(
        d,
        &[
            "tag",
            "--model",
            "morph.model",
            "--input",
            "hyb.morph",
            "-o",
            "hyb.pred",
        ],
    );
    let f1 = |pred: &str| -> f64 {
        let out = ok(
            d,
            &[
                "evaluate",
                "--gold-tokens",
                "test.tokens",
                "--gold-morphemes",
                "test.morph",
                "--level",
                "morph",
                "--pred",
                pred,
            ],
        );
        let line = out.lines().find(|l| l.starts_with("f1\tALL\t")).unwrap();
        line.rsplit('\t').next().unwrap().parse().unwrap()
    };
    let (gold_f1, std_f1, hyb_f1) = (f1("gold.pred"), f1("std.pred"), f1("hyb.pred"));
    assert!(
        gold_f1 >= hyb_f1 && hyb_f1 >= std_f1,
        "gold {gold_f1} hybrid {hyb_f1} standard {std_f1}"
    );
}

#[test]
fn unambiguous_input_gives_identical_segmentations() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    white_house(d);
    fs::write(
        d.join("lex1.tsv"),
        "hamerotz\tha/DET+merotz/NN\nlabayit\tle/IN+ha/DET+bayit/NN\nhalavan\tha/DET+lavan/JJ\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "train",
            "--variant",
            "md",
            "--tokens",
            "gold.tokens",
            "--morphemes",
            "gold.morph",
            "--lexicon",
            "lex1.tsv",
            "-o",
            "md.model",
        ],
    );
    ok(
        d,
        &[
            "train",
            "--variant",
            "token-multi",
            "--tokens",
            "gold.tokens",
            "-o",
            "multi.model",
        ],
    );
    ok(
        d,
        &[
            "disambiguate",
            "--tokens",
            "gold.tokens",
            "--lexicon",
            "lex1.tsv",
            "--md-model",
            "md.model",
            "-o",
            "std.morph",
        ],
    );
    ok(
        d,
        &[
            "disambiguate",
            "--tokens",
            "gold.tokens",
            "--lexicon",
            "lex1.tsv",
            "--md-model",
            "md.model",
            "--mode",
            "hybrid",
            "--ner-model",
            "multi.model",
            "-o",
            "hyb.morph",
            "--report",
            "r.tsv",
        ],
    );
    let forms = |name: &str| -> Vec<String> {
        fs::read_to_string(d.join(name))
            .unwrap()
            .lines()
            .map(|l| {
                let f: Vec<&str> = l.split('\t').collect();
                format!("{}/{}/{}", f[0], f[2], f[3])
            })
            .collect()
    };
    assert_eq!(forms("std.morph"), forms("hyb.morph"));
}

#[test]
fn hybrid_rejects_a_single_label_model() {
    let dir = generated(30, 20, 4);
    let d = dir.path();
    ok(
        d,
        &[
            "train",
            "--variant",
            "md",
            "--tokens",
            "train.tokens",
            "--morphemes",
            "train.morph",
            "--lexicon",
            "lexicon.tsv",
            "-o",
            "md.model",
        ],
    );
    ok(
        d,
        &[
            "train",
            "--variant",
            "token-single",
            "--tokens",
            "train.tokens",
            "--epochs",
            "2",
            "-o",
            "single.model",
        ],
    );
    let out = morphner(
        d,
        &[
            "disambiguate",
            "--tokens",
            "test.tokens",
            "--lexicon",
            "lexicon.tsv",
            "--md-model",
            "md.model",
            "--mode",
            "hybrid",
            "--ner-model",
            "single.model",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("token-multi"));
}

#[test]
fn gold_against_itself_scores_100() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    white_house(d);
    let token = ok(
        d,
        &["evaluate", "--gold-tokens", "gold.tokens", "--pred", "gold.tokens"],
    );
    assert!(token.lines().any(|l| l == "f1\tALL\t100.00"), "{token}");
    assert!(token.lines().any(|l| l == "matched\tFAC\t1"));
    let morph = ok(
        d,
        &[
            "evaluate",
            "--gold-tokens",
            "gold.tokens",
            "--gold-morphemes",
            "gold.morph",
            "--level",
            "morph",
            "--pred",
            "gold.morph",
        ],
    );
    assert!(morph.lines().any(|l| l == "f1\tALL\t100.00"), "{morph}");
    let aligned = ok(
        d,
        &[
            "evaluate",
            "--gold-tokens",
            "gold.tokens",
            "--gold-morphemes",
            "gold.morph",
            "--level",
            "morph",
            "--pred",
            "gold.tokens",
            "--morphemes",
            "gold.morph",
        ],
    );
    assert!(aligned.lines().any(|l| l == "f1\tALL\t100.00"), "{aligned}");
}

#[test]
fn morph_level_multi_labels_need_a_segmentation() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    white_house(d);
    let args = [
        "evaluate",
        "--gold-tokens",
        "gold.tokens",
        "--gold-morphemes",
        "gold.morph",
        "--level",
        "morph",
        "--pred",
        "gold.tokens",
    ];
    assert_eq!(code(d, &args), 1);
}

#[test]
fn several_runs_report_mean_and_interval() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    white_house(d);
    let out = ok(
        d,
        &[
            "evaluate",
            "--gold-tokens",
            "gold.tokens",
            "--pred",
            "gold.tokens",
            "--pred",
            "gold.tokens",
        ],
    );
    assert!(out.lines().any(|l| l == "p2.f1\tALL\t100.00"));
    assert!(out.lines().any(|l| l == "f1_mean\tALL\t100.00"));
    assert!(out.lines().any(|l| l == "f1_ci95\tALL\t0.00"));
}

#[test]
fn ootv_counts_match_planted_classes() {
    let split = morphner::synthetic::generate_ootv_split(5, 60, 16).unwrap();
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for (name, sentences) in [("train", &split.train), ("test", &split.test)] {
        let corpus = morphner::corpus_io::CorpusSplit::new(name, sentences.clone()).unwrap();
        let mut tokens = corpus.clone();
        for s in &mut tokens.sentences {
            s.morphemes = None;
            s.morpheme_labels = None;
        }
        morphner::corpus_io::write_token_corpus(
            &tokens,
            &mut fs::File::create(d.join(format!("{name}.tokens"))).unwrap(),
        )
        .unwrap();
        morphner::corpus_io::write_morpheme_corpus(
            &corpus,
            &mut fs::File::create(d.join(format!("{name}.morph"))).unwrap(),
        )
        .unwrap();
    }
    let out = ok(
        d,
        &[
            "ootv",
            "--tokens",
            "test.tokens",
            "--morphemes",
            "test.morph",
            "--train-tokens",
            "train.tokens",
            "--train-morphemes",
            "train.morph",
        ],
    );
    for class in morphner::eval::OotvCategory::ALL {
        let expected = split.planted.iter().filter(|c| **c == class).count();
        assert!(
            out.lines().any(|l| l == format!("{class}\t{expected}")),
            "{class}: {out}"
        );
    }
}

#[test]
fn validate_reports_consistent_generated_data() {
    let dir = generated(40, 20, 6);
    let out = ok(
        dir.path(),
        &["validate", "--tokens", "train.tokens", "--morphemes", "train.morph"],
    );
    assert!(out.lines().any(|l| l == "sentences\t20"));
    assert!(out.lines().any(|l| l == "consistent\t100.00%"));
    let tokens = read_token_corpus(&dir.path().join("train.tokens")).unwrap();
    assert_eq!(tokens.sentences.len(), 20);
}
