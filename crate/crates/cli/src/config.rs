//! `key = value` training configuration files.

use std::io::BufRead;
use std::path::Path;

use anyhow::{bail, Context, Result};
use morphner::md::MdTrainConfig;
use morphner::tagger::{TrainConfig, Trainer};

use crate::io::open_input;

/// Settings in file order; `#` starts a comment.
pub fn read_settings(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in BufRead::lines(open_input(path)?).enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", path.display(), i + 1);
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("bad value {value:?} for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => bail!("bad value {value:?} for {key}: expected true or false"),
    }
}

pub fn apply_chain(config: &mut TrainConfig, settings: &[(String, String)]) -> Result<()> {
    for (k, v) in settings {
        let t = &mut config.templates;
        match k.as_str() {
            "trainer" => config.trainer = parse::<Trainer>(k, v)?,
            "epochs" => config.epochs = parse(k, v)?,
            "learning_rate" => config.learning_rate = parse(k, v)?,
            "batch_size" => config.batch_size = parse(k, v)?,
            "l2" => config.l2 = parse(k, v)?,
            "seed" => config.seed = parse(k, v)?,
            "averaged" => config.averaged = parse_bool(k, v)?,
            "affix" => t.affix_len = parse(k, v)?,
            "window" => t.window = parse(k, v)?,
            "shape" => t.shape = parse_bool(k, v)?,
            "lower" => t.lowercase = parse_bool(k, v)?,
            "ngrams" => t.char_ngrams = parse(k, v)?,
            other => bail!("unknown setting {other:?}"),
        }
    }
    config.validate().context("invalid training configuration")?;
    Ok(())
}

pub fn apply_md(config: &mut MdTrainConfig, settings: &[(String, String)]) -> Result<()> {
    for (k, v) in settings {
        match k.as_str() {
            "epochs" => config.epochs = parse(k, v)?,
            "seed" => config.seed = parse(k, v)?,
            "averaged" => config.averaged = parse_bool(k, v)?,
            other => bail!("unknown setting {other:?} for MD training"),
        }
    }
    if config.epochs == 0 {
        bail!("epochs must be positive");
    }
    Ok(())
}

pub fn describe_chain(config: &TrainConfig) -> Vec<(String, String)> {
    let t = &config.templates;
    [
        ("trainer", config.trainer.to_string()),
        ("epochs", config.epochs.to_string()),
        ("learning_rate", config.learning_rate.to_string()),
        ("batch_size", config.batch_size.to_string()),
        ("l2", config.l2.to_string()),
        ("seed", config.seed.to_string()),
        ("averaged", config.averaged.to_string()),
        ("templates", t.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}
