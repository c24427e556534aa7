//! Plain-text parameter files.
//!
//! ```text
//! afvol-params 1
//! kind af-lstm
//! variant simple
//! seed 42
//! input 2
//! hidden 64
//! dim 2
//! af_hidden 64
//! layers 1
//! max_seq_len 1000
//! ln_eps 1e-5
//! tensor layers.0.af1.w_x 2 2 2
//! <row-major values, space separated>
//! ...
//! end
//! ```
//!
//! One `tensor <name> <rank> <dims..>` line per parameter, in
//! [`Model::named_tensors`] order, each followed by a single line of values.
//! Values are written as `f64` in the shortest form that parses back to the
//! same bits, so a save/load cycle is exact.

use std::io::{BufRead, Write};
use std::path::Path;

use super::af_block::AfVariant;
use super::model::{Model, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &str = "afvol-params";
const VERSION: &str = "1";

pub fn write_params<T: Scalar, W: Write>(model: &Model<T>, mut out: W) -> Result<()> {
    let c = &model.config;
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "kind {}", c.kind)?;
    writeln!(out, "variant {}", c.variant)?;
    writeln!(out, "seed {}", model.seed)?;
    writeln!(out, "input {}", c.input)?;
    writeln!(out, "hidden {}", c.hidden)?;
    writeln!(out, "dim {}", c.dim)?;
    writeln!(out, "af_hidden {}", c.af_hidden)?;
    writeln!(out, "layers {}", c.layers)?;
    writeln!(out, "max_seq_len {}", c.max_seq_len)?;
    writeln!(out, "ln_eps {:e}", c.ln_eps)?;
    for (name, t) in model.named_tensors() {
        write!(out, "tensor {name} {}", t.rank())?;
        for d in t.shape() {
            write!(out, " {d}")?;
        }
        writeln!(out)?;
        let mut first = true;
        for v in t.data() {
            if !first {
                out.write_all(b" ")?;
            }
            first = false;
            write!(out, "{:e}", v.as_f64())?;
        }
        writeln!(out)?;
    }
    writeln!(out, "end")?;
    Ok(())
}

pub fn save_params<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_params(model, &mut w)?;
    w.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn field<V: std::str::FromStr>(&mut self, key: &str) -> Result<V> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(v), None) if k == key => {
                v.parse().map_err(|_| self.err(format!("bad value `{v}` for `{key}`")))
            }
            _ => Err(self.err(format!("expected `{key} <value>`, got `{l}`"))),
        }
    }
}

pub fn read_params<T: Scalar, R: BufRead>(input: R) -> Result<Model<T>> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    let header = lines.next()?;
    if header.trim() != format!("{MAGIC} {VERSION}") {
        return Err(lines.err(format!("not a parameter file (header `{header}`)")));
    }
    let kind: ModelKind = lines.field("kind")?;
    let variant: AfVariant = lines.field("variant")?;
    let seed: u64 = lines.field("seed")?;
    let config = ModelConfig {
        kind,
        variant,
        input: lines.field("input")?,
        hidden: lines.field("hidden")?,
        dim: lines.field("dim")?,
        af_hidden: lines.field("af_hidden")?,
        layers: lines.field("layers")?,
        max_seq_len: lines.field("max_seq_len")?,
        ln_eps: lines.field("ln_eps")?,
    };
    let mut model = Model::<T>::init(&config, seed)?;
    let names: Vec<(String, Vec<usize>)> = model
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    for ((name, shape), slot) in names.iter().zip(model.tensors_mut()) {
        let l = lines.next()?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        let expected: Vec<String> = ["tensor".to_string(), name.clone(), shape.len().to_string()]
            .into_iter()
            .chain(shape.iter().map(|d| d.to_string()))
            .collect();
        if parts != expected {
            return Err(lines.err(format!("expected `{}`, got `{l}`", expected.join(" "))));
        }
        let values = lines.next()?;
        let mut count = 0;
        let data = slot.data_mut();
        for tok in values.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| lines.err(format!("bad number `{tok}`")))?;
            if count >= data.len() {
                return Err(lines.err(format!("too many values for `{name}`")));
            }
            data[count] = T::lit(v);
            count += 1;
        }
        if count != data.len() {
            return Err(lines.err(format!("`{name}` needs {} values, got {count}", data.len())));
        }
    }
    let tail = lines.next()?;
    if tail.trim() != "end" {
        return Err(lines.err(format!("expected `end`, got `{tail}`")));
    }
    Ok(model)
}

pub fn load_params<T: Scalar>(path: &Path) -> Result<Model<T>> {
    let file = std::fs::File::open(path)?;
    read_params(std::io::BufReader::new(file))
}
