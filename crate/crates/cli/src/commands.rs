use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use morphner::corpus_io::{self, CorpusSplit};
use morphner::domain::{Morpheme, Sentence, TokenLabels};
use morphner::eval::{self, EvalReport, OotvCategory, Prediction, TrainVocab};
use morphner::labeling::align_multilabel_to_morphemes;
use morphner::lattice::analyze;
use morphner::md::{md_hybrid_with_multilabels, md_standard, train_md, write_md_model, MdTrainConfig};
use morphner::synthetic::{generate, SyntheticConfig};
use morphner::tagger::{train_with_dense, write_model, TagOutput, TrainConfig, Trainer, Variant};

use crate::config;
use crate::io::{self as cio, Manifest};
use crate::{
    AnalyzeArgs, Command, DisambiguateArgs, EvaluateArgs, GenerateArgs, Level, Mode, OotvArgs, TagArgs, TrainArgs,
    TrainVariant, UsageError, ValidateArgs,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze(a) => analyze_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Disambiguate(a) => disambiguate_cmd(a),
        Command::Tag(a) => tag_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Ootv(a) => ootv_cmd(a),
        Command::Validate(a) => validate_cmd(a),
        Command::Generate(a) => generate_cmd(a),
    }
}

fn analyze_cmd(args: AnalyzeArgs) -> Result<()> {
    let corpus = cio::token_corpus(&args.tokens)?;
    let lexicon = cio::lexicon(&args.lexicon)?;
    let lattices = corpus
        .sentences
        .iter()
        .map(|s| analyze(&s.tokens, &lexicon))
        .collect::<morphner::Result<Vec<_>>>()?;
    let mut out = cio::open_output(&args.output)?;
    corpus_io::write_lattices(&lattices, &mut out)?;
    out.flush()?;
    Manifest::new("analyze")
        .input("tokens", Some(&args.tokens))
        .input("lexicon", Some(&args.lexicon))
        .write_for(&args.output)
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    if args.tokens.is_none() && args.morphemes.is_none() {
        return Err(usage("train needs --tokens and/or --morphemes"));
    }
    let mut settings = match &args.config {
        Some(p) => config::read_settings(p)?,
        None => Vec::new(),
    };
    if let Some(t) = &args.trainer {
        settings.push(("trainer".into(), t.clone()));
    }
    if let Some(e) = args.epochs {
        settings.push(("epochs".into(), e.to_string()));
    }
    if let Some(lr) = args.learning_rate {
        settings.push(("learning_rate".into(), lr.to_string()));
    }
    if let Some(s) = args.seed {
        settings.push(("seed".into(), s.to_string()));
    }
    let corpus = cio::corpus(args.tokens.as_deref(), args.morphemes.as_deref())?;
    let manifest = Manifest::new("train")
        .input("tokens", args.tokens.as_deref())
        .input("morphemes", args.morphemes.as_deref())
        .input("lexicon", args.lexicon.as_deref())
        .input("dense", args.dense.as_deref())
        .input("config", args.config.as_deref());

    let variant = match args.variant {
        TrainVariant::Md => return train_md_cmd(&args, &corpus, &settings, manifest),
        TrainVariant::TokenSingle => Variant::TokenSingle,
        TrainVariant::TokenMulti => Variant::TokenMulti,
        TrainVariant::Morpheme => Variant::Morpheme,
    };
    let crf = settings
        .iter()
        .rev()
        .find(|(k, _)| k == "trainer")
        .map(|(_, v)| v.parse::<Trainer>())
        .transpose()
        .map_err(|e| usage(e.to_string()))?
        == Some(Trainer::Crf);
    let mut train_config = if crf {
        TrainConfig::crf_for(variant)
    } else {
        TrainConfig::default()
    };
    config::apply_chain(&mut train_config, &settings).map_err(|e| usage(format!("{e:#}")))?;
    let dense = args.dense.as_deref().map(cio::dense).transpose()?;
    let model = train_with_dense(&corpus.sentences, variant, &train_config, dense)?;
    let mut out = cio::open_output(&args.output)?;
    write_model(&model, &mut out)?;
    out.flush()?;
    let mut manifest = manifest.setting("variant", variant);
    manifest.seed = Some(train_config.seed);
    for (k, v) in config::describe_chain(&train_config) {
        manifest = manifest.setting(&k, v);
    }
    manifest.write_for(&args.output)
}

fn train_md_cmd(
    args: &TrainArgs,
    corpus: &CorpusSplit,
    settings: &[(String, String)],
    manifest: Manifest,
) -> Result<()> {
    let lexicon_path = args
        .lexicon
        .as_deref()
        .ok_or_else(|| usage("md training needs --lexicon"))?;
    if args.tokens.is_none() || args.morphemes.is_none() {
        return Err(usage("md training needs both --tokens and --morphemes"));
    }
    let lexicon = cio::lexicon(lexicon_path)?;
    let mut md_config = MdTrainConfig::default();
    config::apply_md(&mut md_config, settings).map_err(|e| usage(format!("{e:#}")))?;
    let model = train_md(&corpus.sentences, &lexicon, &md_config)?;
    let mut out = cio::open_output(&args.output)?;
    write_md_model(&model, &mut out)?;
    out.flush()?;
    let mut manifest = manifest
        .setting("variant", "md")
        .setting("epochs", md_config.epochs)
        .setting("averaged", md_config.averaged);
    manifest.seed = Some(md_config.seed);
    manifest.write_for(&args.output)
}

fn disambiguate_cmd(args: DisambiguateArgs) -> Result<()> {
    if args.mode == Mode::Hybrid && args.ner_model.is_none() {
        return Err(usage("--mode hybrid requires --ner-model"));
    }
    let corpus = cio::token_corpus(&args.tokens)?;
    let lexicon = cio::lexicon(&args.lexicon)?;
    let md = cio::md_model(&args.md_model)?;
    let ner = args.ner_model.as_deref().map(cio::chain_model).transpose()?;
    if let Some(n) = &ner {
        if n.variant() != Variant::TokenMulti {
            bail!(morphner::Error::VariantMismatch {
                expected: Variant::TokenMulti.to_string(),
                found: n.variant().to_string(),
            });
        }
    }
    let mut out = cio::open_output(&args.output)?;
    let mut report = String::new();
    for (i, s) in corpus.sentences.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        match (args.mode, &ner) {
            (Mode::Hybrid, Some(ner)) => {
                let TagOutput::MultiLabels(mls) = ner.tag(&Sentence::from_tokens(s.tokens.clone()))? else {
                    unreachable!("token-multi models emit multi-labels")
                };
                let result = md_hybrid_with_multilabels(&md, &lexicon, &s.tokens, &mls)?;
                let groups = morphner::domain::group_by_token(&result.morphemes, s.tokens.len());
                let mut labels = Vec::with_capacity(result.morphemes.len());
                for (ml, group) in mls.iter().zip(groups) {
                    let forms: Vec<&str> = group.iter().map(|m| m.form.as_str()).collect();
                    labels.extend(align_multilabel_to_morphemes(ml, &forms).into_iter().map(|(_, l)| l));
                }
                corpus_io::write_morphemes(&mut out, &result.morphemes, Some(&labels))?;
                for t in result.fallback_tokens {
                    let _ = writeln!(
                        report,
                        "{}\t{}\t{}\tno analysis with {} morphemes",
                        i + 1,
                        t + 1,
                        s.tokens[t].form,
                        mls[t].len()
                    );
                }
            }
            _ => {
                let result = md_standard(&md, &lexicon, &s.tokens)?;
                corpus_io::write_morphemes(&mut out, &result.morphemes, None)?;
            }
        }
    }
    out.flush()?;
    if args.mode == Mode::Hybrid {
        let header = "sentence\ttoken\tform\treason\n";
        match &args.report {
            Some(p) => {
                let mut r = cio::open_output(p)?;
                write!(r, "{header}{report}")?;
                r.flush()?;
            }
            None if !report.is_empty() => eprint!("fallback tokens:\n{header}{report}"),
            None => {}
        }
    }
    let mode = match args.mode {
        Mode::Standard => "standard",
        Mode::Hybrid => "hybrid",
    };
    Manifest::new("disambiguate")
        .input("tokens", Some(&args.tokens))
        .input("lexicon", Some(&args.lexicon))
        .input("md-model", Some(&args.md_model))
        .input("ner-model", args.ner_model.as_deref())
        .setting("mode", mode)
        .write_for(&args.output)
}

fn tag_cmd(args: TagArgs) -> Result<()> {
    let model = cio::chain_model(&args.model)?;
    let mut out = cio::open_output(&args.output)?;
    match model.variant() {
        Variant::Morpheme => {
            let input = cio::morpheme_corpus(&args.input)?;
            for (i, s) in input.sentences.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                let TagOutput::Labels(labels) = model.tag(s)? else {
                    unreachable!("morpheme models emit single labels")
                };
                corpus_io::write_morphemes(&mut out, s.morphemes.as_deref().unwrap_or_default(), Some(&labels))?;
            }
        }
        _ => {
            let input = cio::token_corpus(&args.input)?;
            let mut tagged = Vec::with_capacity(input.sentences.len());
            for s in &input.sentences {
                let mut t = Sentence::from_tokens(s.tokens.clone());
                t.token_labels = Some(match model.tag(s)? {
                    TagOutput::Labels(ls) => TokenLabels::Single(ls),
                    TagOutput::MultiLabels(ms) => TokenLabels::Multi(ms),
                });
                tagged.push(t);
            }
            corpus_io::write_token_corpus(&CorpusSplit::new(input.name, tagged)?, &mut out)?;
        }
    }
    out.flush()?;
    Manifest::new("tag")
        .input("model", Some(&args.model))
        .input("input", Some(&args.input))
        .setting("variant", model.variant())
        .write_for(&args.output)
}

fn predictions(path: &Path) -> Result<Vec<Prediction>> {
    if !cio::is_stdio(path) && cio::looks_like_morphemes(path)? {
        let corpus = cio::morpheme_corpus(path)?;
        return corpus
            .sentences
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let labels = s
                    .morpheme_labels
                    .with_context(|| format!("{}: sentence {} is unlabeled", path.display(), i + 1))?;
                Ok(Prediction::Morpheme {
                    morphemes: s.morphemes.unwrap_or_default(),
                    labels,
                })
            })
            .collect();
    }
    let corpus = cio::token_corpus(path)?;
    corpus
        .sentences
        .into_iter()
        .enumerate()
        .map(|(i, s)| match s.token_labels {
            Some(TokenLabels::Single(ls)) => Ok(Prediction::TokenSingle(ls)),
            Some(TokenLabels::Multi(ms)) => Ok(Prediction::TokenMulti(ms)),
            None => bail!("{}: sentence {} is unlabeled", path.display(), i + 1),
        })
        .collect()
}

fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    match args.level {
        Level::Token if args.gold_tokens.is_none() => return Err(usage("--level token requires --gold-tokens")),
        Level::Morph if args.gold_morphemes.is_none() => return Err(usage("--level morph requires --gold-morphemes")),
        _ => {}
    }
    let gold = cio::corpus(args.gold_tokens.as_deref(), args.gold_morphemes.as_deref())?;
    let segmentation: Option<Vec<Vec<Morpheme>>> = args
        .morphemes
        .as_deref()
        .map(|p| -> Result<_> {
            Ok(cio::morpheme_corpus(p)?
                .sentences
                .into_iter()
                .map(|s| s.morphemes.unwrap_or_default())
                .collect())
        })
        .transpose()?;
    let vocab = match (&args.train_tokens, &args.train_morphemes) {
        (Some(t), Some(m)) => Some(TrainVocab::from_sentences(&cio::corpus(Some(t), Some(m))?.sentences)),
        _ => None,
    };

    let mut text = String::new();
    let mut lines = Vec::new();
    let mut f1s = Vec::new();
    let many = args.pred.len() > 1;
    for (k, path) in args.pred.iter().enumerate() {
        let preds = predictions(path)?;
        let multi = preds.iter().any(|p| matches!(p, Prediction::TokenMulti(_)));
        if args.level == Level::Morph && multi && segmentation.is_none() {
            return Err(usage(
                "morpheme-level scoring of token multi-labels requires --morphemes",
            ));
        }
        let report: EvalReport = match args.level {
            Level::Token => eval::eval_token_level(&gold.sentences, &preds)?,
            Level::Morph => eval::eval_morph_level(&gold.sentences, &preds, segmentation.as_deref())?,
        };
        let prefix = if many { format!("p{}.", k + 1) } else { String::new() };
        writeln!(
            text,
            "{} ({} level)",
            path.display(),
            if args.level == Level::Token {
                "token"
            } else {
                "morpheme"
            }
        )?;
        writeln!(text, "{report}")?;
        lines.extend(report.key_values(&prefix));
        f1s.push(report.f1);
        if let Some(v) = &vocab {
            for (class, r) in eval::ootv_breakdown(&gold.sentences, &preds, v)? {
                writeln!(text, "OOTV {class}")?;
                writeln!(text, "{r}")?;
                lines.extend(r.key_values(&format!("{prefix}ootv.{class}.")));
            }
        }
    }
    if many {
        let (mean, ci) = mean_ci95(&f1s);
        writeln!(text, "F1 over {} runs: {mean:.2} +/- {ci:.2} (95% CI)\n", f1s.len())?;
        lines.push(format!("f1_mean\tALL\t{mean:.2}"));
        lines.push(format!("f1_ci95\tALL\t{ci:.2}"));
    }
    let mut out = cio::open_output(&args.output)?;
    write!(out, "{text}")?;
    for l in lines {
        writeln!(out, "{l}")?;
    }
    out.flush()?;
    Ok(())
}

fn ootv_cmd(args: OotvArgs) -> Result<()> {
    let corpus = cio::corpus(Some(&args.tokens), Some(&args.morphemes))?;
    let train = cio::corpus(Some(&args.train_tokens), Some(&args.train_morphemes))?;
    let vocab = TrainVocab::from_sentences(&train.sentences);
    let counts = eval::ootv_counts(&corpus.sentences, &vocab)?;
    let mut out = cio::open_output(&args.output)?;
    for class in OotvCategory::ALL {
        writeln!(out, "{class}\t{}", counts.get(&class).copied().unwrap_or(0))?;
    }
    out.flush()?;
    Ok(())
}

fn validate_cmd(args: ValidateArgs) -> Result<()> {
    let tokens = cio::token_corpus(&args.tokens)?;
    let morphemes = cio::morpheme_corpus(&args.morphemes)?;
    let stats = corpus_io::validate_corpus(&tokens, &morphemes)?;
    let mut out = cio::open_output(&args.output)?;
    writeln!(out, "sentences\t{}", stats.sentences)?;
    writeln!(out, "tokens\t{}", stats.tokens)?;
    writeln!(out, "morphemes\t{}", stats.morphemes)?;
    for (cat, n) in &stats.token_mentions {
        writeln!(out, "token_mentions\t{cat}\t{n}")?;
    }
    for (cat, n) in &stats.morpheme_mentions {
        writeln!(out, "morpheme_mentions\t{cat}\t{n}")?;
    }
    writeln!(out, "consistent\t{:.2}%", stats.consistent_fraction() * 100.0)?;
    for (id, what) in &stats.mismatches {
        writeln!(out, "mismatch\t{id}\t{what}")?;
    }
    out.flush()?;
    Ok(())
}

fn generate_cmd(args: GenerateArgs) -> Result<()> {
    if args.train_sentences > args.sentences {
        return Err(usage("--train-sentences exceeds --sentences"));
    }
    let corpus = generate(&SyntheticConfig {
        sentences: args.sentences,
        seed: args.seed,
        ..Default::default()
    })?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let (train, test) = corpus.sentences.split_at(args.train_sentences);
    for (name, part) in [("train", train), ("test", test)] {
        let split = CorpusSplit::new(name, part.to_vec())?;
        let mut tokens_only = split.clone();
        for s in &mut tokens_only.sentences {
            s.morphemes = None;
            s.morpheme_labels = None;
        }
        let mut out = cio::open_output(&args.out_dir.join(format!("{name}.tokens")))?;
        corpus_io::write_token_corpus(&tokens_only, &mut out)?;
        out.flush()?;
        let mut out = cio::open_output(&args.out_dir.join(format!("{name}.morph")))?;
        corpus_io::write_morpheme_corpus(&split, &mut out)?;
        out.flush()?;
    }
    let lexicon_path = args.out_dir.join("lexicon.tsv");
    let mut out = cio::open_output(&lexicon_path)?;
    corpus_io::write_lexicon(&corpus.lexicon, &mut out)?;
    out.flush()?;
    let mut manifest = Manifest::new("generate")
        .setting("sentences", args.sentences)
        .setting("train_sentences", args.train_sentences);
    manifest.seed = Some(args.seed);
    manifest.write_for(&lexicon_path)
}
