use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use morphner::corpus_io::{self, CorpusSplit};
use morphner::lattice::Lexicon;
use morphner::md::{read_md_model, MdModel};
use morphner::tagger::{read_model, ChainModel, DenseFeatureTable};

pub fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if is_stdio(path) {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

pub fn open_output(path: &Path) -> Result<Box<dyn Write>> {
    if is_stdio(path) {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn name_of(path: &Path) -> String {
    if is_stdio(path) {
        return "stdin".into();
    }
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "corpus".into())
}

fn context(path: &Path) -> String {
    format!("reading {}", path.display())
}

pub fn token_corpus(path: &Path) -> Result<CorpusSplit> {
    corpus_io::parse_token_corpus(open_input(path)?, &name_of(path)).with_context(|| context(path))
}

pub fn morpheme_corpus(path: &Path) -> Result<CorpusSplit> {
    corpus_io::parse_morpheme_corpus(open_input(path)?, &name_of(path)).with_context(|| context(path))
}

pub fn lexicon(path: &Path) -> Result<Lexicon> {
    corpus_io::parse_lexicon(open_input(path)?).with_context(|| context(path))
}

pub fn dense(path: &Path) -> Result<DenseFeatureTable> {
    corpus_io::parse_dense_features(open_input(path)?).with_context(|| context(path))
}

pub fn chain_model(path: &Path) -> Result<ChainModel> {
    read_model(open_input(path)?).with_context(|| context(path))
}

pub fn md_model(path: &Path) -> Result<MdModel> {
    read_md_model(open_input(path)?).with_context(|| context(path))
}

/// Token corpus, morpheme corpus, or both merged.
pub fn corpus(tokens: Option<&Path>, morphemes: Option<&Path>) -> Result<CorpusSplit> {
    match (tokens, morphemes) {
        (Some(t), Some(m)) => Ok(corpus_io::merge_parallel(&token_corpus(t)?, &morpheme_corpus(m)?)?),
        (Some(t), None) => token_corpus(t),
        (None, Some(m)) => morpheme_corpus(m),
        (None, None) => unreachable!("callers require at least one corpus"),
    }
}

/// Whether a file holds morpheme rows (four columns) rather than token
/// rows, judged from its first data line.
pub fn looks_like_morphemes(path: &Path) -> Result<bool> {
    let input = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    for line in BufReader::new(input).lines() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        return Ok(line.split('\t').count() == 4);
    }
    Ok(false)
}

/// Reproducibility record written next to an output file.
pub struct Manifest {
    pub command: String,
    pub seed: Option<u64>,
    pub inputs: Vec<(String, PathBuf)>,
    pub config: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            command: command.to_string(),
            seed: None,
            inputs: Vec::new(),
            config: Vec::new(),
        }
    }

    pub fn input(mut self, role: &str, path: Option<&Path>) -> Self {
        if let Some(p) = path {
            self.inputs.push((role.to_string(), p.to_path_buf()));
        }
        self
    }

    pub fn setting(mut self, key: &str, value: impl ToString) -> Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    /// Writes `<output>.manifest`; nothing is written for stdout.
    pub fn write_for(&self, output: &Path) -> Result<()> {
        if is_stdio(output) {
            return Ok(());
        }
        let mut path = output.as_os_str().to_owned();
        path.push(".manifest");
        let mut out = open_output(Path::new(&path))?;
        writeln!(out, "command\t{}", self.command)?;
        writeln!(out, "tool\tmorphner {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(
            out,
            "timestamp\t{}",
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        )?;
        if let Some(seed) = self.seed {
            writeln!(out, "seed\t{seed}")?;
        }
        for (role, p) in &self.inputs {
            writeln!(out, "input\t{role}\t{}", p.display())?;
        }
        for (k, v) in &self.config {
            writeln!(out, "config\t{k}\t{v}")?;
        }
        writeln!(out, "output\t{}", output.display())?;
        out.flush()?;
        Ok(())
    }
}
