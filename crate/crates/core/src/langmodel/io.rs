use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use super::model::{BOS, EOS, ORDER, UNK};
use super::{LmError, NgramModel};

pub const MODEL_FORMAT: &str = "term-scribe-lm";
pub const MODEL_VERSION: u32 = 1;
const SMOOTHING: &str = "witten-bell-interpolated";

/// Writes the model as tab-separated text. Only raw counts are stored so a
/// reloaded model reproduces every probability exactly.
pub fn write_model<W: Write>(model: &NgramModel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MODEL_FORMAT}\t{MODEL_VERSION}")?;
    writeln!(out, "order\t{ORDER}")?;
    writeln!(out, "cutoff\t{}", model.cutoff)?;
    writeln!(out, "smoothing\t{SMOOTHING}")?;
    writeln!(out, "vocab\t{}", model.vocab.len())?;
    for (token, count) in model.vocab.iter().zip(&model.unigrams) {
        writeln!(out, "{token}\t{count}")?;
    }
    let mut bigrams: Vec<_> = model.bigrams.iter().collect();
    bigrams.sort_unstable();
    writeln!(out, "bigrams\t{}", bigrams.len())?;
    for (&(a, b), c) in bigrams {
        writeln!(out, "{a}\t{b}\t{c}")?;
    }
    let mut trigrams: Vec<_> = model.trigrams.iter().collect();
    trigrams.sort_unstable();
    writeln!(out, "trigrams\t{}", trigrams.len())?;
    for (&(a, b, w), c) in trigrams {
        writeln!(out, "{a}\t{b}\t{w}\t{c}")?;
    }
    writeln!(out, "end")?;
    out.flush()
}

pub fn save_model(model: &NgramModel, path: &Path) -> Result<(), LmError> {
    let io_err = |source| LmError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_model(model, BufWriter::new(file)).map_err(io_err)
}

pub fn load_model(path: &Path) -> Result<NgramModel, LmError> {
    let file = fs::File::open(path).map_err(|source| LmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_model(std::io::BufReader::new(file), &path.display().to_string())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
    name: String,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, message: impl Into<String>) -> LmError {
        LmError::Format {
            path: self.name.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<String, LmError> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(self.err(e.to_string())),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn fields(&mut self, n: usize) -> Result<Vec<String>, LmError> {
        let line = self.next()?;
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields.len() != n {
            return Err(self.err(format!("expected {n} fields, found {}", fields.len())));
        }
        Ok(fields)
    }

    fn keyed(&mut self, key: &str) -> Result<String, LmError> {
        let f = self.fields(2)?;
        if f[0] != key {
            return Err(self.err(format!("expected `{key}`, found `{}`", f[0])));
        }
        Ok(f[1].clone())
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T, LmError> {
        s.parse().map_err(|_| self.err(format!("bad number `{s}`")))
    }
}

pub fn read_model<R: BufRead>(reader: R, name: &str) -> Result<NgramModel, LmError> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
        name: name.to_string(),
    };
    let version = lines.keyed(MODEL_FORMAT)?;
    if version != MODEL_VERSION.to_string() {
        return Err(lines.err(format!("unsupported model version {version}")));
    }
    let order: usize = {
        let v = lines.keyed("order")?;
        lines.num(&v)?
    };
    if order != ORDER {
        return Err(lines.err(format!("model has order {order}, expected {ORDER}")));
    }
    let cutoff: u64 = {
        let v = lines.keyed("cutoff")?;
        lines.num(&v)?
    };
    let smoothing = lines.keyed("smoothing")?;
    if smoothing != SMOOTHING {
        return Err(lines.err(format!("unknown smoothing `{smoothing}`")));
    }
    let n_vocab: usize = {
        let v = lines.keyed("vocab")?;
        lines.num(&v)?
    };
    let mut vocab = Vec::with_capacity(n_vocab);
    let mut unigrams = Vec::with_capacity(n_vocab);
    for _ in 0..n_vocab {
        let f = lines.fields(2)?;
        unigrams.push(lines.num::<u64>(&f[1])?);
        vocab.push(f[0].clone());
    }
    if vocab.len() < 3 || vocab[0] != BOS || vocab[1] != EOS || vocab[2] != UNK {
        return Err(lines.err("vocabulary must start with the reserved tokens"));
    }
    let mut model = NgramModel::empty(cutoff, vocab);
    if model.index.len() != n_vocab {
        return Err(lines.err("duplicate vocabulary entry"));
    }
    model.unigrams = unigrams;
    let id = |lines: &Lines<R>, s: &str| -> Result<u32, LmError> {
        let id: u32 = lines.num(s)?;
        if id as usize >= n_vocab {
            return Err(lines.err(format!("token id {id} out of range")));
        }
        Ok(id)
    };

    let n_bi: usize = {
        let v = lines.keyed("bigrams")?;
        lines.num(&v)?
    };
    for _ in 0..n_bi {
        let f = lines.fields(3)?;
        let key = (id(&lines, &f[0])?, id(&lines, &f[1])?);
        model.bigrams.insert(key, lines.num(&f[2])?);
    }
    let n_tri: usize = {
        let v = lines.keyed("trigrams")?;
        lines.num(&v)?
    };
    for _ in 0..n_tri {
        let f = lines.fields(4)?;
        let key = (id(&lines, &f[0])?, id(&lines, &f[1])?, id(&lines, &f[2])?);
        model.trigrams.insert(key, lines.num(&f[3])?);
    }
    if lines.next()? != "end" {
        return Err(lines.err("expected `end`"));
    }
    model.finish();
    Ok(model)
}
