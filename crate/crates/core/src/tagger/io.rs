//! Line-based model files; fields are tab-separated.
//!
//! ```text
//! morphner-chain-model 1
//! variant token-multi
//! templates affix=4 window=2 shape=1 lower=1 ngrams=0
//! labels <L>
//! <label>                                  (L lines)
//! features <F>
//! <feature> <w_1> ... <w_L>                 (F lines)
//! dense <D> <K>
//! <form> <x_1> ... <x_D>                     (K table rows)
//! <w_1> ... <w_L>                          (D weight rows)
//! transitions
//! <w_1> ... <w_L>                          (L rows, from-label major)
//! start <w_1> ... <w_L>
//! stop <w_1> ... <w_L>
//! ```
//!
//! Weights are written in shortest round-trip form, so saving is
//! byte-for-byte deterministic and loading restores identical weights.

use std::io::{BufRead, Write};

use super::features::{DenseFeatureTable, FeatureTemplates};
use super::model::{ChainModel, Variant};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "morphner-chain-model";
pub const MODEL_VERSION: u32 = 1;

fn join(ws: &[f64]) -> String {
    ws.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>().join(" ")
}

pub fn write_model<W: Write>(model: &ChainModel, mut out: W) -> Result<()> {
    let l = model.labels().len();
    writeln!(out, "{MODEL_MAGIC}\t{MODEL_VERSION}")?;
    writeln!(out, "variant\t{}", model.variant())?;
    writeln!(out, "templates\t{}", model.templates())?;
    writeln!(out, "labels\t{l}")?;
    for label in model.labels() {
        writeln!(out, "{label}")?;
    }
    let params = model.params();
    writeln!(out, "features\t{}", model.features().len())?;
    for (f, name) in model.features().iter().enumerate() {
        writeln!(out, "{name}\t{}", join(&params[f * l..(f + 1) * l]))?;
    }
    let dim = model.dense_table().map_or(0, DenseFeatureTable::dim);
    let rows = model.dense_table().map_or(0, DenseFeatureTable::len);
    writeln!(out, "dense\t{dim}\t{rows}")?;
    if let Some(table) = model.dense_table() {
        for (form, v) in table.iter() {
            writeln!(out, "{form}\t{}", join(v))?;
        }
        for d in 0..dim {
            let row: Vec<f64> = (0..l).map(|y| model.dense_weight(d, y)).collect();
            writeln!(out, "{}", join(&row))?;
        }
    }
    writeln!(out, "transitions")?;
    for a in 0..l {
        let row: Vec<f64> = (0..l).map(|b| model.transition(a, b)).collect();
        writeln!(out, "{}", join(&row))?;
    }
    let start: Vec<f64> = (0..l).map(|y| model.start_weight(y)).collect();
    let stop: Vec<f64> = (0..l).map(|y| model.stop_weight(y)).collect();
    writeln!(out, "start\t{}", join(&start))?;
    writeln!(out, "stop\t{}", join(&stop))?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.number += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(Error::parse(self.number, "unexpected end of model file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.number, message)
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let line = self.next()?;
        match line.split_once('\t') {
            Some((k, rest)) if k == key => Ok(rest.to_string()),
            _ => Err(self.err(format!("expected {key:?} line"))),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let v = self.keyed(key)?;
        v.parse().map_err(|_| self.err(format!("bad {key} count {v:?}")))
    }

    fn floats(&self, text: &str, n: usize) -> Result<Vec<f64>> {
        let ws = text
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| self.err(format!("bad number {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if ws.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", ws.len())));
        }
        Ok(ws)
    }
}

pub fn read_model<R: BufRead>(input: R) -> Result<ChainModel> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    let header = lines.next()?;
    let version = header
        .strip_prefix(MODEL_MAGIC)
        .and_then(|rest| rest.strip_prefix('\t'))
        .ok_or_else(|| Error::ModelFormat("not a chain model file".into()))?;
    if version != MODEL_VERSION.to_string() {
        return Err(Error::ModelFormat(format!(
            "model version {version}, this build reads version {MODEL_VERSION}"
        )));
    }
    let variant: Variant = lines.keyed("variant")?.parse()?;
    let templates: FeatureTemplates = lines.keyed("templates")?.parse()?;
    let l = lines.count("labels")?;
    let labels = (0..l).map(|_| lines.next()).collect::<Result<Vec<_>>>()?;
    let nf = lines.count("features")?;
    let mut features = Vec::with_capacity(nf);
    let mut params = Vec::new();
    for _ in 0..nf {
        let line = lines.next()?;
        let (name, ws) = line.split_once('\t').ok_or_else(|| lines.err("expected feature row"))?;
        features.push(name.to_string());
        params.extend(lines.floats(ws, l)?);
    }
    let dense_line = lines.keyed("dense")?;
    let (dim, rows) = dense_line
        .split_once('\t')
        .and_then(|(d, k)| Some((d.parse::<usize>().ok()?, k.parse::<usize>().ok()?)))
        .ok_or_else(|| lines.err("bad dense header"))?;
    let mut table = None;
    if dim > 0 {
        let mut t = DenseFeatureTable::new(dim);
        for _ in 0..rows {
            let line = lines.next()?;
            let (form, xs) = line.split_once('\t').ok_or_else(|| lines.err("expected table row"))?;
            let xs = lines.floats(xs, dim)?;
            t.insert(form, xs)?;
        }
        for _ in 0..dim {
            let line = lines.next()?;
            params.extend(lines.floats(&line, l)?);
        }
        table = Some(t);
    }
    if lines.next()? != "transitions" {
        return Err(lines.err("expected transitions"));
    }
    for _ in 0..l {
        let line = lines.next()?;
        params.extend(lines.floats(&line, l)?);
    }
    let start = lines.keyed("start")?;
    params.extend(lines.floats(&start, l)?);
    let stop = lines.keyed("stop")?;
    params.extend(lines.floats(&stop, l)?);

    let mut model = ChainModel::new(variant, templates, labels, features, table)?;
    model.set_params(params)?;
    Ok(model)
}
